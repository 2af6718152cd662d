use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lpfdr::config::{self, parse_margin, parse_methods};
use lpfdr::{parse_config_file, preset_config, run_simulation, write_outputs, SimConfig};
use lpfdr_core::mle::{fit_prior, MleMode, DEFAULT_MAX_ITER, DEFAULT_TOL};
use lpfdr_core::model::sample_mixture;

#[derive(Parser)]
#[command(name = "lpfdr", version, about = "FDR control for composite nulls via LP-maximized p-values")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated simulations and write metrics.csv, curves.csv and coeffs.csv
    Simulate(SimulateArgs),
    /// Fit the null prior weights by maximum likelihood
    Mle(MleArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Built-in model 1..=5
    #[arg(long)]
    preset: Option<u32>,
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<SimConfig> {
        match (&self.preset, &self.config) {
            (Some(id), _) => Ok(preset_config(*id)?),
            (_, Some(path)) => Ok(parse_config_file(path)?),
            _ => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of seq,glb,max,mix
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Lower bound on the coefficient sum (0.9 for the primed programs)
    #[arg(long)]
    sum_lower: Option<f64>,
    /// relaxed | tight
    #[arg(long)]
    pair_margin: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct MleArgs {
    #[command(flatten)]
    source: Source,
    /// Observations, one value per line; simulated from the model when absent
    #[arg(long)]
    sample: Option<PathBuf>,
    #[arg(long, default_value_t = 20_000)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the false-null fraction of the sampling model
    #[arg(long)]
    a: Option<f64>,
    /// Search all weights summing to 1 with positive mixture density
    #[arg(long)]
    extended: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = args.source.load()?;
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = &args.methods {
        cfg.methods = parse_methods("--methods", m)?;
    }
    if let Some(s) = args.sum_lower {
        cfg.variant.sum_lower = s;
    }
    if let Some(m) = &args.pair_margin {
        cfg.variant.pair_margin = match parse_margin(m) {
            Some(m) => m,
            None => bail!("--pair-margin: expected relaxed or tight, got {m:?}"),
        };
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    config::validate(&cfg)?;

    let report = run_simulation(&cfg).context("simulation failed")?;
    let paths = write_outputs(&report, &args.out)?;
    println!("method  power    fdr      pfdr     sd_tpp");
    for m in &report.methods {
        let mt = m.metrics;
        let pfdr = mt.pfdr.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        println!("{:<7} {:.4}   {:.4}   {:<8} {:.4}", m.method.as_str(), mt.power, mt.fdr, pfdr, mt.sd_tpp);
        if m.reps_with_fallback > 0 {
            println!("        ({} of {} reps used an infeasibility fallback)", m.reps_with_fallback, report.reps);
        }
    }
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn read_sample(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut x = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().with_context(|| format!("{}:{}: not a number: {line:?}", path.display(), i + 1))?;
        x.push(v);
    }
    if x.is_empty() {
        bail!("{}: no observations", path.display());
    }
    Ok(x)
}

fn mle(args: MleArgs) -> Result<()> {
    let cfg = args.source.load()?;
    let mut model = cfg.model.clone();
    if let Some(a) = args.a {
        model = model.with_a(a)?;
    }
    let x = match &args.sample {
        Some(p) => read_sample(p)?,
        None => sample_mixture(&model, args.n, args.seed.unwrap_or(cfg.seed)).x().to_vec(),
    };
    let mode = if args.extended { MleMode::Extended } else { MleMode::Simplex };
    let r = fit_prior(&x, model.family(), mode, args.max_iter, args.tol)?;
    let fmt = |v: &[f64]| v.iter().map(|c| format!("{c:.6}")).collect::<Vec<_>>().join(", ");
    println!("observations    {}", x.len());
    println!("nu_hat          [{}]", fmt(&r.nu_hat));
    if args.sample.is_none() {
        println!("nu (model)      [{}]", fmt(model.prior().weights()));
    }
    println!("log_likelihood  {:.6}", r.log_likelihood);
    println!("iterations      {}", r.iterations);
    println!("converged       {}", r.converged);
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::Mle(a) => mle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
