use std::path::{Path, PathBuf};

use eta_core::checks::{exact_w1, faulty_w1, run_bound_suite};
use eta_core::distributions::{
    gevd_fit_mle, linsp, Bandwidth, EmpiricalDistribution, GevdDescriptor, GevdParams, QuantileSource, TruncatedGevd,
};
use eta_core::metrics::{data_consistency_report, pdf_compare_export, threshold_table, GridSpec};
use eta_core::model::{Checkpoint, MlpParams};
use eta_core::problems::{build_training_set, reference_distribution, sample_inputs, truth_values};
use eta_core::rng::{stream_rng, Stream};
use eta_core::training::{log_to_csv, pool_observables, train_erm_observed, train_iict_observed, Dataset, StepView};
use eta_core::wasserstein::w1_tail;
use ndarray::Array2;
use serde::Serialize;

use crate::config::{ExperimentConfig, ReferenceKind};
use crate::io;
use crate::{CliError, GevdQuantileArgs};

pub struct Context {
    pub cfg: ExperimentConfig,
    pub quiet: bool,
}

impl Context {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    fn echo_config(&self) -> Result<(), CliError> {
        io::write(&self.out("config.effective.toml"), &self.cfg.to_toml()?)
    }
}

/// The reference law `nu_0`.
enum Reference {
    Empirical(EmpiricalDistribution),
    Gevd(GevdParams),
    Truncated(TruncatedGevd),
}

impl QuantileSource for Reference {
    fn quantile(&self, q: f64) -> eta_core::Result<f64> {
        match self {
            Reference::Empirical(d) => d.quantile(q),
            Reference::Gevd(g) => g.quantile(q),
            Reference::Truncated(t) => t.quantile(q),
        }
    }
}

impl Reference {
    fn load(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        match cfg.reference {
            ReferenceKind::Analytic | ReferenceKind::Csv => Ok(Reference::Empirical(io::read_samples(&cfg.reference_path())?)),
            ReferenceKind::Gevd => {
                let missing = || CliError::usage("gevd reference needs gevd_kappa, gevd_zeta and gevd_sigma");
                let base = GevdParams::new(
                    cfg.gevd_kappa.ok_or_else(missing)?,
                    cfg.gevd_zeta.ok_or_else(missing)?,
                    cfg.gevd_sigma.ok_or_else(missing)?,
                )?;
                Ok(match cfg.gevd_gamma {
                    Some(gamma) => Reference::Truncated(TruncatedGevd::new(base, gamma)?),
                    None => Reference::Gevd(base),
                })
            }
        }
    }

    /// The stored sample, or `n` quantiles at the midpoint levels.
    fn samples(&self, n: usize) -> Result<Vec<f64>, CliError> {
        match self {
            Reference::Empirical(d) => Ok(d.samples().to_vec()),
            _ => Ok((0..n).map(|i| self.quantile((i as f64 + 0.5) / n as f64)).collect::<eta_core::Result<_>>()?),
        }
    }
}

pub fn gen_data(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    cfg.validate()?;
    let Some(problem) = cfg.toy_problem() else {
        return Err(CliError::usage("gen-data only generates toy problems; csv problems read data_csv and pool_csv"));
    };
    let data = build_training_set(cfg.n_train, cfg.exclusion(), cfg.seed, &problem)?;
    let pool = sample_inputs(cfg.pool_size, problem.input_sigma2, cfg.seed, Stream::Pool)?;
    io::write(&cfg.data_path(), &data.to_csv_string())?;
    io::write(&cfg.pool_path(), &io::inputs_to_csv(&pool))?;
    let data_max = data.observables.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ctx.say(format!("dataset: {} rows, max observable {data_max}", data.len()));
    ctx.say(format!("pool: {} inputs", pool.nrows()));
    if cfg.reference == ReferenceKind::Analytic {
        let reference = reference_distribution(&problem, cfg.n_reference, cfg.seed)?;
        io::write(&cfg.reference_path(), &reference.to_csv_string())?;
        ctx.say(format!(
            "reference: {} samples, q(0.99) = {}, max {}",
            reference.len(),
            reference.quantile(0.99)?,
            reference.max()
        ));
    }
    ctx.echo_config()
}

fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset, CliError> {
    let path = cfg.data_path();
    if !path.exists() {
        return Err(CliError::usage(format!("{}: data file not found (run gen-data first)", path.display())));
    }
    Dataset::read_csv(&path, &cfg.observable_fn()?).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn checkpoint_observer<'a>(
    ctx: &'a Context,
    prefix: &'a str,
) -> impl FnMut(&StepView) -> eta_core::Result<()> + 'a {
    let every = ctx.cfg.checkpoint_every;
    move |v: &StepView| {
        if every > 0 && v.row.step > 0 && v.row.step % every == 0 {
            Checkpoint::save(v.params, ctx.out(&format!("{prefix}_step{}.ckpt.json", v.row.step)))?;
        }
        Ok(())
    }
}

fn load_checkpoint(path: &Path) -> Result<MlpParams, CliError> {
    Checkpoint::load(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn run_erm(ctx: &Context, data: &Dataset, init: Option<MlpParams>) -> Result<MlpParams, CliError> {
    let cfg = &ctx.cfg;
    let init = match init {
        Some(p) => p,
        None => {
            let mut dims = vec![data.input_dim()];
            dims.extend(&cfg.hidden);
            dims.push(data.state_dim());
            MlpParams::glorot(&dims, &mut stream_rng(cfg.seed, Stream::Init))?
        }
    };
    std::fs::create_dir_all(&cfg.out_dir)?;
    let out = train_erm_observed(data, init, &cfg.erm_config(), checkpoint_observer(ctx, "erm"))?;
    Checkpoint::save(&out.model, ctx.out("erm.ckpt.json"))?;
    io::write(&ctx.out("erm_log.csv"), &log_to_csv(&out.log))?;
    if let Some(last) = out.log.last() {
        ctx.say(format!("erm: {} steps, final loss {}", out.log.len(), last.erm_loss));
    }
    Ok(out.model)
}

pub fn train(ctx: &Context, eta: bool, init: Option<&Path>) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    ctx.echo_config()?;
    if !eta {
        run_erm(ctx, &data, init.map(load_checkpoint).transpose()?)?;
        return Ok(());
    }
    let pool_path = cfg.pool_path();
    if !pool_path.exists() {
        return Err(CliError::usage(format!("{}: pool file not found", pool_path.display())));
    }
    let pool = io::inputs_from_csv(&pool_path)?;
    let reference = Reference::load(cfg)?;
    let default_init = ctx.out("erm.ckpt.json");
    let pretrained = match init {
        Some(p) => load_checkpoint(p)?,
        None if default_init.exists() => load_checkpoint(&default_init)?,
        None => run_erm(ctx, &data, None)?,
    };
    let out = train_iict_observed(
        &data,
        pool.view(),
        &cfg.quantile_set()?,
        &reference,
        &cfg.observable_fn()?,
        pretrained,
        &cfg.eta_config(),
        checkpoint_observer(ctx, "eta"),
    )?;
    Checkpoint::save(&out.model, ctx.out("eta.ckpt.json"))?;
    io::write(&ctx.out("eta_log.csv"), &log_to_csv(&out.log))?;
    if let Some(last) = out.log.last() {
        ctx.say(format!(
            "eta: {} steps, {} index refreshes, final erm {} tail {}",
            out.log.len(),
            out.refreshes,
            last.erm_loss,
            last.tail_w1_loss
        ));
    }
    Ok(())
}

fn model_name(spec: &str) -> String {
    let file = Path::new(spec).file_name().and_then(|f| f.to_str()).unwrap_or(spec);
    let stem = file.strip_suffix(".json").unwrap_or(file);
    stem.strip_suffix(".ckpt").unwrap_or(stem).to_string()
}

#[derive(Serialize)]
struct TailRow<'a> {
    model: &'a str,
    tail_w1: f64,
}

pub fn eval(ctx: &Context, specs: &[String]) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    cfg.validate()?;
    if specs.is_empty() {
        return Err(CliError::usage("eval needs at least one checkpoint (or `truth`)"));
    }
    let problem = cfg.toy_problem();
    let g = cfg.observable_fn()?;
    let inputs: Array2<f64> = match &problem {
        Some(p) => sample_inputs(cfg.n_eval, p.input_sigma2, cfg.seed, Stream::Evaluation)?,
        None => io::inputs_from_csv(&cfg.pool_path())?,
    };
    let truth = problem.as_ref().map(|p| truth_values(p, &inputs));

    let mut fields: Vec<(String, Vec<f64>)> = Vec::new();
    for spec in specs {
        let (name, values) = if spec == "truth" {
            let t = truth.clone().ok_or_else(|| CliError::usage("`truth` is only available for toy problems"))?;
            ("truth".to_string(), t)
        } else {
            let path = Path::new(spec);
            let model = Checkpoint::load(path).map_err(|e| CliError::usage(format!("{spec}: {e}")))?;
            (model_name(spec), pool_observables(&model, inputs.view(), &g)?)
        };
        if fields.iter().any(|(n, _)| *n == name) || name == "reference" {
            return Err(CliError::usage(format!("duplicate model name `{name}`")));
        }
        fields.push((name, values));
    }

    let reference = Reference::load(cfg)?;
    let levels = cfg.quantile_set()?.tail(cfg.eval_tau)?;
    let mut tail_rows = String::from("model,tail_w1\n");
    let mut table = Vec::new();
    for (name, values) in &fields {
        let push = EmpiricalDistribution::new(values.clone())?;
        let w = w1_tail(&push, &reference, &levels)?;
        tail_rows.push_str(&format!("{name},{w}\n"));
        table.push(TailRow { model: name, tail_w1: w });
        ctx.say(format!("{name}: tail W1 {w}"));
    }
    io::write(&ctx.out("tail_w1.csv"), &tail_rows)?;

    let ref_samples = reference.samples(cfg.n_eval)?;
    let mut sets: Vec<(&str, &[f64])> = vec![("reference", &ref_samples)];
    sets.extend(fields.iter().map(|(n, v)| (n.as_str(), v.as_slice())));
    let pdf = pdf_compare_export(&sets, GridSpec::Auto { points: cfg.pdf_points }, Bandwidth::Auto)?;
    io::write(&ctx.out("pdf_compare.csv"), &pdf)?;

    let thresholds = linsp(reference.quantile(0.9)?, reference.quantile(0.9999)?, cfg.threshold_count)?;
    io::write(&ctx.out("thresholds.csv"), &threshold_table(&sets, &thresholds)?)?;

    if let Some(truth) = &truth {
        let t_star = reference.quantile(cfg.t_star_quantile)?;
        for (name, values) in fields.iter().filter(|(n, _)| n != "truth") {
            let report = data_consistency_report(truth, values, t_star)?;
            io::write(&ctx.out(&format!("consistency_{name}.json")), &(report.to_json()? + "\n"))?;
        }
    }
    ctx.echo_config()
}

pub fn bounds_check(ctx: &Context, trials: usize, inject_fault: bool) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::usage("--trials must be >= 1"));
    }
    let report = if inject_fault {
        run_bound_suite(ctx.cfg.seed, trials, &faulty_w1)?
    } else {
        run_bound_suite(ctx.cfg.seed, trials, &exact_w1)?
    };
    let mut stored = report.clone();
    stored.violations.truncate(10);
    let json = serde_json::to_string_pretty(&stored).map_err(|e| CliError::usage(e.to_string()))?;
    io::write(&ctx.out("bounds_report.json"), &(json + "\n"))?;
    ctx.say(format!(
        "{} trials: {} oracle, {} sandwich, {} Wp checks, {} violations",
        report.trials,
        report.oracle_checks,
        report.sandwich_checks,
        report.wp_checks,
        report.violations.len()
    ));
    match report.violations.first() {
        None => Ok(()),
        Some(v) => {
            let dump = serde_json::to_string(v).unwrap_or_default();
            Err(CliError::violation(format!("{} violation(s); first: {dump}", report.violations.len())))
        }
    }
}

#[derive(Serialize)]
struct FitOutput {
    #[serde(flatten)]
    params: GevdDescriptor,
    nll: f64,
    evaluations: usize,
    n: usize,
}

pub fn gevd_fit(ctx: &Context, input: &Path) -> Result<(), CliError> {
    let samples = io::read_samples(input)?;
    let fit = gevd_fit_mle(samples.samples())?;
    let out = FitOutput { params: fit.params.into(), nll: fit.nll, evaluations: fit.evaluations, n: samples.len() };
    let json = serde_json::to_string_pretty(&out).map_err(|e| CliError::usage(e.to_string()))? + "\n";
    io::write(&ctx.out("gevd_fit.json"), &json)?;
    ctx.say(json.trim_end());
    Ok(())
}

pub fn gevd_quantile(_ctx: &Context, args: &GevdQuantileArgs) -> Result<(), CliError> {
    let descriptor = match &args.params {
        Some(path) => {
            let d: GevdDescriptor = serde_json::from_str(&io::read(path)?)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            GevdDescriptor { gamma: args.gamma.or(d.gamma), ..d }
        }
        None => {
            let (Some(kappa), Some(zeta), Some(sigma)) = (args.kappa, args.zeta, args.sigma) else {
                return Err(CliError::usage("give --params or all of --kappa, --zeta, --sigma"));
            };
            GevdDescriptor { kappa, zeta, sigma, gamma: args.gamma, cutoff: None }
        }
    };
    let base = if args.scipy {
        GevdParams::from_scipy(descriptor.kappa, descriptor.zeta, descriptor.sigma)?
    } else {
        descriptor.params()?
    };
    let source: Reference = match descriptor.gamma {
        Some(gamma) => Reference::Truncated(TruncatedGevd::new(base, gamma)?),
        None => Reference::Gevd(base),
    };
    // quantile output is the command's result, so it ignores --quiet
    println!("q,value");
    for &q in &args.q {
        println!("{q},{}", source.quantile(q)?);
    }
    Ok(())
}
