#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const SMALL_CONFIG: &str = "\
n_train = 40
pool_size = 500
n_reference = 10000
n_eval = 2000
hidden = [8, 8]
erm_steps = 40
eta_steps = 30
omega = 10
pdf_points = 50
threshold_count = 5
";

/// The `eta` binary: cargo's path when testing the CLI crate, otherwise the
/// one in the profile directory above this test executable.
pub fn eta_bin() -> PathBuf {
    if let Some(p) = option_env!("CARGO_BIN_EXE_eta") {
        return PathBuf::from(p);
    }
    let exe = std::env::current_exe().expect("test executable path");
    let profile_dir = exe.parent().and_then(Path::parent).expect("target/<profile>/deps layout");
    profile_dir.join(format!("eta{}", std::env::consts::EXE_SUFFIX))
}

pub fn eta(args: &[&str]) -> Output {
    Command::new(eta_bin()).args(args).output().expect("spawn eta")
}

/// Runs `eta --quiet --config <config> --out <out> args..`.
pub fn eta_in(config: &Path, out: &Path, args: &[&str]) -> Output {
    let mut full = vec!["--quiet", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    full.extend_from_slice(args);
    eta(&full)
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

pub fn ok(o: Output) -> Output {
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    o
}

pub fn write_config(dir: &Path, name: &str, extra: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("{SMALL_CONFIG}{extra}")).unwrap();
    path
}

/// File name to contents for every file directly under `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

pub fn column(csv: &str, idx: usize) -> Vec<String> {
    csv.lines().skip(1).map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

/// Gumbel(loc, scale) values at the midpoint levels `(i + 0.5) / n`.
pub fn gumbel_sample_csv(loc: f64, scale: f64, n: usize) -> String {
    (0..n)
        .map(|i| {
            let u = (i as f64 + 0.5) / n as f64;
            format!("{}\n", loc - scale * (-u.ln()).ln())
        })
        .collect()
}

/// Runs every subcommand twice against the same output directory and
/// returns the files whose contents changed between the runs, plus the
/// number of files compared.
pub fn determinism_check(root: &Path) -> (Vec<String>, usize) {
    let config = write_config(root, "config.toml", "checkpoint_every = 20\n");
    let out = root.join("out");
    let samples = root.join("gumbel.csv");
    std::fs::write(&samples, gumbel_sample_csv(5.0, 2.0, 500)).unwrap();
    let steps: Vec<Vec<&str>> = vec![
        vec!["gen-data"],
        vec!["train", "--mode", "erm"],
        vec!["train", "--mode", "eta"],
        vec!["eval", "truth", "out/erm.ckpt.json", "out/eta.ckpt.json"],
        vec!["bounds-check", "--trials", "200"],
        vec!["gevd", "fit", "--input", samples.to_str().unwrap()],
    ];
    let mut changed = Vec::new();
    let mut compared = 0;
    for args in &steps {
        let resolved: Vec<String> = args
            .iter()
            .map(|a| if a.starts_with("out/") { root.join(a).to_string_lossy().into_owned() } else { a.to_string() })
            .collect();
        let refs: Vec<&str> = resolved.iter().map(String::as_str).collect();
        let first_out = ok(eta_in(&config, &out, &refs));
        let first = snapshot(&out);
        let second_out = ok(eta_in(&config, &out, &refs));
        let second = snapshot(&out);
        if first_out.stdout != second_out.stdout {
            changed.push(format!("{} (stdout)", args.join(" ")));
        }
        for (name, bytes) in &first {
            compared += 1;
            if second.get(name) != Some(bytes) {
                changed.push(format!("{name} after `{}`", args.join(" ")));
            }
        }
    }
    let q = ["gevd", "quantile", "--scipy", "--kappa", "-0.179", "--zeta", "25.077", "--sigma", "25.928", "0.5", "0.99"];
    let a = ok(eta(&q));
    let b = ok(eta(&q));
    compared += 1;
    if a.stdout != b.stdout {
        changed.push("gevd quantile (stdout)".into());
    }
    (changed, compared)
}
