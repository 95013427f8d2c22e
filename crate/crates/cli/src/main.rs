use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use risopt_core::gradcheck::run_gradcheck;
use risopt_core::harness::{write_csv, AggregateRow};
use risopt_core::synth::Dims;
use risopt_core::{realize, run_optimizer, run_sweep_with_threads, Config, Error, OptOutcome, C64};

mod selftest;

#[derive(Parser, Debug)]
#[command(name = "risopt", version, about = "Joint beamforming and RIS phase-shift optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize one channel realization and print the rate trace.
    Run(RunArgs),
    /// Monte-Carlo sweep over one scenario axis, written as CSV.
    Sweep(SweepArgs),
    /// Quick numerical self-checks.
    Selftest,
    /// Compare the analytic rate gradient with central differences.
    Gradcheck(GradArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file (`key = value` lines or a flat JSON object).
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` applied after the config file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<Config, Error> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        for kv in &self.overrides {
            cfg.apply_override(kv)?;
        }
        if let Some(seed) = self.seed {
            cfg.scenario.rng_seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    optimizer: Option<String>,
    /// Trial index of the realization to draw.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// Also write the outcome as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "RISOPT_THREADS")]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct GradArgs {
    /// `M,N,K,L`.
    #[arg(long, default_value = "4,2,2,6")]
    dims: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    instances: usize,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Dimension(_) | Error::Shape(_) => 2,
        Error::Io(_) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Selftest => selftest::run(),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("risopt: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn io_err(path: &std::path::Path) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::Io(format!("{}: {e}", path.display()))
}

fn phase_summary(phi: &[C64]) -> String {
    if phi.is_empty() {
        return "phi: no RIS elements".into();
    }
    let deg: Vec<f64> = phi.iter().map(|z| z.arg().to_degrees()).collect();
    let mean: C64 = phi.iter().sum::<C64>() / phi.len() as f64;
    let lo = deg.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = deg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let modulus_err = phi.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    format!(
        "phi: L={}, phase range [{lo:.2}, {hi:.2}] deg, mean resultant length {:.4}, max |1-|phi|| {modulus_err:.1e}",
        phi.len(),
        mean.norm()
    )
}

fn outcome_json(cfg: &Config, trial: u64, out: &OptOutcome) -> serde_json::Value {
    serde_json::json!({
        "optimizer": cfg.optimizer.name(),
        "seed": cfg.scenario.rng_seed,
        "trial": trial,
        "final_rate_bpcu": out.final_rate(),
        "rate_trace_bpcu": out.rate_trace,
        "wmse_trace": out.wmse_trace,
        "outer_iterations": out.outer_iterations,
        "stagnations": out.stagnations,
        "phi_rad": out.phi.iter().map(|z| z.arg()).collect::<Vec<_>>(),
    })
}

fn cmd_run(a: RunArgs) -> Result<ExitCode, Error> {
    let mut cfg = a.common.load()?;
    if let Some(o) = &a.optimizer {
        cfg.optimizer = risopt_core::Optimizer::parse(o)?;
    }
    cfg.validate()?;
    let start = Instant::now();
    let real = realize(&cfg.scenario, a.trial)?;
    let out = run_optimizer(cfg.optimizer, &real, &cfg.solver, cfg.scenario.rng_seed, a.trial)?;
    let elapsed = start.elapsed();

    let stdout = io::stdout();
    let mut w = stdout.lock();
    let mut emit = || -> io::Result<()> {
        writeln!(
            w,
            "optimizer {} seed {} trial {}: M={} N={} K={} L={}",
            cfg.optimizer,
            cfg.scenario.rng_seed,
            a.trial,
            real.bs_antennas(),
            real.ue_antennas(),
            real.num_ues(),
            real.ris_elements()
        )?;
        writeln!(w, "iter  sum_rate_bpcu  delta")?;
        for (i, r) in out.rate_trace.iter().enumerate() {
            let delta = if i == 0 { 0.0 } else { r - out.rate_trace[i - 1] };
            writeln!(w, "{i:>4}  {r:.9}  {delta:+.3e}")?;
        }
        writeln!(
            w,
            "final sum rate {:.6} bpcu after {} outer iterations ({} rejected RIS steps)",
            out.final_rate(),
            out.outer_iterations,
            out.stagnations
        )?;
        writeln!(w, "{}", phase_summary(&out.phi))
    };
    emit().map_err(|e| Error::Io(format!("stdout: {e}")))?;
    eprintln!("wall time {:.3} s", elapsed.as_secs_f64());

    if let Some(path) = &a.out {
        let text = serde_json::to_string_pretty(&outcome_json(&cfg, a.trial, &out))
            .map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(io_err(path))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn print_aggregates(rows: &[AggregateRow], axis: &str, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "{axis:>12}  {:<14} {:>6} {:>12} {:>10}", "optimizer", "trials", "mean_bpcu", "std_err")?;
    for r in rows {
        writeln!(
            w,
            "{:>12}  {:<14} {:>6} {:>12.4} {:>10.4}",
            r.axis_value, r.optimizer.name(), r.trials, r.mean, r.std_err
        )?;
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode, Error> {
    let cfg = a.common.load()?;
    let spec = cfg.sweep_spec()?;
    // Fail on an unwritable destination before spending time on trials.
    let file = match &a.out {
        Some(path) => Some(File::create(path).map_err(io_err(path))?),
        None => None,
    };
    let threads = match a.threads {
        Some(0) => return Err(Error::Config("threads must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let start = Instant::now();
    let res = run_sweep_with_threads(&spec, threads)?;
    match (file, &a.out) {
        (Some(f), Some(path)) => {
            let mut w = BufWriter::new(f);
            write_csv(&res.records, &mut w)
                .and_then(|_| w.flush())
                .map_err(io_err(path))?;
            print_aggregates(&res.aggregates, spec.axis.name(), &mut io::stdout().lock())
                .map_err(|e| Error::Io(format!("stdout: {e}")))?;
        }
        _ => {
            write_csv(&res.records, io::stdout().lock()).map_err(|e| Error::Io(format!("stdout: {e}")))?;
            print_aggregates(&res.aggregates, spec.axis.name(), &mut io::stderr().lock())
                .map_err(|e| Error::Io(format!("stderr: {e}")))?;
        }
    }
    eprintln!(
        "{} records on {threads} threads in {:.1} s",
        res.records.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_dims(s: &str) -> Result<Dims, Error> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("dims: cannot parse {x:?}"))))
        .collect::<Result<_, _>>()?;
    let [m, n, k, l] = v[..] else {
        return Err(Error::Config(format!("dims: expected M,N,K,L, got {s:?}")));
    };
    if [m, n, k, l].contains(&0) {
        return Err(Error::Config("dims must be positive".into()));
    }
    if n > 6 || l > 64 {
        return Err(Error::Config(format!("dims: gradcheck supports N <= 6 and L <= 64, got N={n} L={l}")));
    }
    Ok(Dims::new(m, n, k, l))
}

const GRADCHECK_TOL: f64 = 1e-4;

fn cmd_gradcheck(a: GradArgs) -> Result<ExitCode, Error> {
    let dims = parse_dims(&a.dims)?;
    let report = run_gradcheck(dims, a.seed, a.instances, 1e-6)?;
    let pass = report.passed(GRADCHECK_TOL);
    println!(
        "gradcheck M={} N={} K={} L={}: max relative error {:.3e} over {} instances ({} skipped, zero gradient) {}",
        dims.m,
        dims.n,
        dims.k,
        dims.l,
        report.max_rel_error,
        report.checked,
        report.skipped,
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(4) })
}
