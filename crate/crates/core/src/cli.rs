//! Command-line front end: config loading, subcommand dispatch and artifacts.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde::Serialize;

use tlegate::config::RunConfig;
use tlegate::controls::Controls;
use tlegate::dephasing::{mc_fidelity, McSummary};
use tlegate::dynamics::{compare_with_collision, OracleReport};
use tlegate::fidelity::FidelityReport;
use tlegate::fom::{rate_table, Constants, PlatformTable, RateRow};
use tlegate::gate::{GateRun, GateSetup, GateSpec, RunMode};
use tlegate::io::{num, opt, ArtifactWriter, Provenance};
use tlegate::model::{InputPulse, TimeGrid};
use tlegate::observables::{occupation_probabilities, phase_difference, ProbabilityBudget, PHASE_FLOOR};
use tlegate::optimizer::{miscalibration_probe, optimize_gate, run_sweep, MiscalibrationRow, SweepRow};
use tlegate::{Error, Result};

/// Exit code for an optimizer that ran out of budget but produced a result.
pub const EXIT_EXHAUSTED: i32 = 4;

/// Largest number of samples per axis in the decimated pair-output table.
const PAIR_SAMPLES: usize = 200;

#[derive(Debug, Parser)]
#[command(name = "tlegate", version, about = "Emitter-cavity controlled-phase gate simulator")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` of the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for the optimizer jitter and the dephasing sampler.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Repeat the run at half the step and report the differences.
    #[arg(long, global = true)]
    pub dt_halve: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run both photon sectors and write the gate-dynamics tables.
    Simulate,
    /// Optimize the detuning knots for the lowest gate error.
    Optimize,
    /// Evaluate the gate over the configured sweep axis.
    Sweep,
    /// Trajectory average under emitter pure dephasing.
    Montecarlo,
    /// Nonlinear coupling rates of material platforms.
    Fom {
        /// Platform table; overrides the config and the bundled table.
        #[arg(long, value_name = "PATH")]
        platforms: Option<PathBuf>,
    },
    /// Compare the cascade against the collision model.
    OracleCheck {
        /// Collision-model bins.
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Cascade intervals per half bin.
        #[arg(long, default_value_t = 1)]
        q: usize,
    },
}

/// Parse arguments, run and return the process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Context {
    config: RunConfig,
    writer: ArtifactWriter,
}

fn context(g: &GlobalArgs) -> Result<Context> {
    let mut config = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        config.seed = s;
    }
    if let Some(o) = &g.out {
        config.output_dir = o.clone();
    }
    config.optimizer.seed = config.seed;
    config.dephasing.seed = config.seed;
    let provenance = Provenance::new(config.hash()?, config.seed);
    let writer = ArtifactWriter::new(&config.output_dir, provenance)?;
    writer.json("config.json", &config)?;
    Ok(Context { config, writer })
}

pub fn run(cli: &Cli) -> Result<i32> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Error::config("--threads", "must be >= 1"));
        }
        // Fails only if a pool already exists, e.g. in repeated in-process runs.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = context(&cli.global)?;
    let halve = cli.global.dt_halve;
    match &cli.command {
        Command::Simulate => simulate(&ctx, halve),
        Command::Optimize => optimize(&ctx),
        Command::Sweep => sweep(&ctx),
        Command::Montecarlo => montecarlo(&ctx),
        Command::Fom { platforms } => fom(&ctx, platforms.as_ref()),
        Command::OracleCheck { bins, q } => oracle_check(&ctx, *bins, *q, halve),
    }
}

fn complex(z: C64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

#[derive(Serialize)]
struct RunSummary {
    grid_intervals: usize,
    fidelity: FidelityReport,
    absorption_error_one: f64,
    absorption_error_two: f64,
    knots: Vec<f64>,
}

impl RunSummary {
    fn new(setup: &GateSetup, r: &GateRun) -> Self {
        RunSummary {
            grid_intervals: setup.grid.n,
            fidelity: r.report.clone(),
            absorption_error_one: r.absorption_error_one(),
            absorption_error_two: r.absorption_error_two(),
            knots: setup.knots().to_vec(),
        }
    }
}

#[derive(Serialize)]
struct Convergence {
    coarse: RunSummary,
    fine: RunSummary,
    gate_error_change: f64,
    absorption_error_one_change: f64,
    s1_change: f64,
    s2_change: f64,
}

fn simulate(ctx: &Context, halve: bool) -> Result<i32> {
    let spec = &ctx.config.gate;
    let setup = GateSetup::new(spec)?;
    let r = setup.run(RunMode { dense: true, budget: true })?;
    let w = &ctx.writer;
    let grid = setup.grid;
    let times = grid.times();
    let schedule = setup.schedule();

    w.csv(
        "controls.csv",
        &["t", "omega", "lambda_re", "lambda_im", "stage"],
        times.iter().map(|&t| {
            let [lr, li] = complex(setup.controls.lambda(t));
            vec![num(t), num(setup.controls.omega(t)), lr, li, schedule.stage(t).as_str().to_string()]
        }),
    )?;

    let one = &r.two.one;
    let psi = &r.two.layers.psi;
    let mut header = vec!["t", "xi_in_re", "xi_in_im", "psi_a_re", "psi_a_im", "psi_b_re", "psi_b_im", "psi_e_re", "psi_e_im", "xi_out_re", "xi_out_im"];
    header.extend([
        "psi_20g_re", "psi_20g_im", "psi_11g_re", "psi_11g_im", "psi_02g_re", "psi_02g_im", "psi_10e_re", "psi_10e_im", "psi_01e_re", "psi_01e_im",
    ]);
    w.csv(
        "amplitudes.csv",
        &header,
        (0..grid.len()).map(|i| {
            let mut row = vec![num(times[i])];
            for z in [r.two.xi_in.amp[i], one.psi_a[i], one.psi_b[i], one.psi_e[i], one.xi_out.amp[i]] {
                row.extend(complex(z));
            }
            for p in psi.iter() {
                row.extend(complex(p[i]));
            }
            row
        }),
    )?;

    let budget = occupation_probabilities(&r.two)?;
    let mut bh = vec!["t"];
    bh.extend(ProbabilityBudget::NAMES);
    bh.push("sum");
    w.csv(
        "budget.csv",
        &bh,
        (0..budget.len()).map(|i| {
            let mut row = vec![num(budget.t[i])];
            row.extend(budget.row(i).iter().map(|&p| num(p)));
            row.push(num(budget.sum(i)));
            row
        }),
    )?;

    let dphi = phase_difference(&r.two, one, PHASE_FLOOR)?;
    w.csv(
        "phase.csv",
        &["t", "delta_phi"],
        times.iter().zip(&dphi).map(|(&t, p)| vec![num(t), opt(*p)]),
    )?;

    if let Some(xo) = &r.two.xi_out2 {
        let stride = grid.len().div_ceil(PAIR_SAMPLES).max(1);
        let idx: Vec<usize> = (0..grid.len()).step_by(stride).collect();
        w.csv(
            "pair_output.csv",
            &["t_m", "t_n", "re", "im"],
            idx.iter().flat_map(|&m| {
                idx.iter().map(move |&k| {
                    let [re, im] = complex(xo.get(m, k));
                    vec![num(grid.t(m)), num(grid.t(k)), re, im]
                })
            }),
        )?;
    }

    let summary = RunSummary::new(&setup, &r);
    w.json("report.json", &summary)?;
    print_report(&summary);

    if halve {
        let fine_setup = GateSetup::new(&spec.halved())?;
        let f = fine_setup.run(RunMode::default())?;
        let fine = RunSummary::new(&fine_setup, &f);
        let c = Convergence {
            gate_error_change: (fine.fidelity.gate_error - summary.fidelity.gate_error).abs(),
            absorption_error_one_change: (fine.absorption_error_one - summary.absorption_error_one).abs(),
            s1_change: (fine.fidelity.s1 - summary.fidelity.s1).norm(),
            s2_change: (fine.fidelity.s2 - summary.fidelity.s2).norm(),
            coarse: summary,
            fine,
        };
        println!("dt halving: |Δ gate error| = {:.3e}, |Δ s1| = {:.3e}, |Δ s2| = {:.3e}", c.gate_error_change, c.s1_change, c.s2_change);
        w.json("convergence.json", &c)?;
    }
    Ok(0)
}

fn print_report(s: &RunSummary) {
    let f = &s.fidelity;
    println!("gate error              {:.6e}", f.gate_error);
    if let Some(c) = f.conditional_gate_error {
        println!("conditional gate error  {c:.6e}");
    }
    println!("s1                      {:.6} {:+.6}i", f.s1.re, f.s1.im);
    println!("s2                      {:.6} {:+.6}i", f.s2.re, f.s2.im);
    println!("absorption error (1, 2) {:.3e} {:.3e}", s.absorption_error_one, s.absorption_error_two);
}

#[derive(Serialize)]
struct OptimizeReport {
    initial_error: f64,
    best_error: f64,
    best_start: usize,
    evaluations: Vec<usize>,
    exhausted: bool,
    run: RunSummary,
}

fn optimize(ctx: &Context) -> Result<i32> {
    let setup = GateSetup::new(&ctx.config.gate)?;
    let o = optimize_gate(&setup, &ctx.config.optimizer)?;
    let w = &ctx.writer;
    w.csv(
        "trace.csv",
        &["start", "evaluation", "best_gate_error"],
        o.starts
            .iter()
            .enumerate()
            .flat_map(|(s, r)| r.trace.iter().enumerate().map(move |(i, &f)| vec![s.to_string(), (i + 1).to_string(), num(f)])),
    )?;
    w.json("knots.json", &o.best_knots)?;
    let best = setup.with_knots(&o.best_knots)?;
    let r = best.run(RunMode::default())?;
    let report = OptimizeReport {
        initial_error: o.initial_error,
        best_error: o.best_error,
        best_start: o.best_start,
        evaluations: o.starts.iter().map(|r| r.evaluations).collect(),
        exhausted: o.exhausted,
        run: RunSummary::new(&best, &r),
    };
    w.json("report.json", &report)?;
    println!("initial gate error {:.6e}", o.initial_error);
    print_report(&report.run);
    if o.exhausted {
        eprintln!("optimizer budget exhausted; best result written");
        return Ok(EXIT_EXHAUSTED);
    }
    Ok(0)
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    axis: &'static str,
    rows: &'a [SweepRow],
    miscalibration: Option<&'a [MiscalibrationRow]>,
}

fn sweep(ctx: &Context) -> Result<i32> {
    let c = &ctx.config;
    let spec = c.sweep.as_ref().ok_or_else(|| Error::config("sweep", "the sweep subcommand needs a `sweep` section"))?;
    let rows = run_sweep(spec, &c.gate, &c.optimizer, &c.dephasing)?;
    let w = &ctx.writer;
    w.csv(
        "sweep.csv",
        &["value", "gate_error", "conditional_error", "stderr", "absorption_error_one", "absorption_error_two", "error"],
        rows.iter().map(|r| {
            vec![
                num(r.value),
                opt(r.gate_error),
                opt(r.conditional_error),
                opt(r.stderr),
                opt(r.absorption_error_one),
                opt(r.absorption_error_two),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    let probe = match &c.miscalibration {
        Some(p) => {
            let setup = GateSetup::new(&c.gate)?;
            let m = miscalibration_probe(&setup, p.field, &p.perturbations)?;
            w.csv(
                "miscalibration.csv",
                &["field", "perturbation", "gate_error", "delta"],
                m.iter().map(|r| vec![label(&r.field), num(r.perturbation), num(r.gate_error), num(r.delta)]),
            )?;
            Some(m)
        }
        None => None,
    };
    w.json(
        "sweep.json",
        &SweepOutput {
            axis: spec.axis.as_str(),
            rows: &rows,
            miscalibration: probe.as_deref(),
        },
    )?;
    println!("{:>12} {:>14} {:>14} {:>12}", spec.axis.as_str(), "gate_error", "conditional", "stderr");
    for r in &rows {
        let f = |x: Option<f64>| x.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into());
        println!("{:>12} {:>14} {:>14} {:>12}", r.value, f(r.gate_error), f(r.conditional_error), f(r.stderr));
        if let Some(e) = &r.error {
            eprintln!("point {}: {e}", r.value);
        }
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed == rows.len() && !rows.is_empty() {
        return Err(Error::Dependency(format!("all {failed} sweep points failed")));
    }
    Ok(0)
}

fn label<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(v) => v.to_string(),
        Err(_) => String::new(),
    }
}

fn montecarlo(ctx: &Context) -> Result<i32> {
    let setup = GateSetup::new(&ctx.config.gate)?;
    let s: McSummary = mc_fidelity(&setup, &ctx.config.dephasing)?;
    let w = &ctx.writer;
    w.csv(
        "trajectories.csv",
        &["index", "jumps", "snap_shift", "fidelity", "conditional_fidelity"],
        s.samples
            .iter()
            .map(|t| vec![t.index.to_string(), t.jumps.to_string(), num(t.snap_shift), num(t.fidelity), opt(t.conditional_fidelity)]),
    )?;
    #[derive(Serialize)]
    struct Summary<'a> {
        generator: &'a str,
        seed: u64,
        n_traj: usize,
        gamma_dp: f64,
        mean_fidelity: f64,
        stderr: f64,
        mean_conditional_fidelity: Option<f64>,
        conditional_stderr: Option<f64>,
        mean_jumps: f64,
    }
    w.json(
        "summary.json",
        &Summary {
            generator: s.generator,
            seed: s.seed,
            n_traj: s.n_traj,
            gamma_dp: s.gamma_dp,
            mean_fidelity: s.mean_fidelity,
            stderr: s.stderr,
            mean_conditional_fidelity: s.mean_conditional_fidelity,
            conditional_stderr: s.conditional_stderr,
            mean_jumps: s.mean_jumps,
        },
    )?;
    println!("trajectories      {}", s.n_traj);
    println!("mean fidelity     {:.6} ± {:.2e}", s.mean_fidelity, s.stderr);
    if let (Some(m), Some(e)) = (s.mean_conditional_fidelity, s.conditional_stderr) {
        println!("conditional       {m:.6} ± {e:.2e}");
    }
    Ok(0)
}

fn fom(ctx: &Context, platforms: Option<&PathBuf>) -> Result<i32> {
    let table = match platforms {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::config(p.display().to_string(), format!("cannot read platforms: {e}")))?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize::<_, PlatformTable>(de).map_err(|e| Error::config(e.path().to_string(), e.inner().to_string()))?
        }
        None => match &ctx.config.fom {
            Some(t) => t.clone(),
            None => PlatformTable::bundled()?,
        },
    };
    let rows: Vec<RateRow> = rate_table(&table, &Constants::SI)?;
    let w = &ctx.writer;
    w.csv(
        "fom.csv",
        &["name", "kind", "normalized_volume", "rate", "alt_rate"],
        rows.iter().map(|r| vec![r.name.clone(), r.kind.to_string(), num(r.normalized_volume), num(r.rate), opt(r.alt_rate)]),
    )?;
    w.json("fom.json", &rows)?;
    println!("{:<40} {:<6} {:>10} {:>14} {:>14}", "platform", "kind", "V_norm", "rate [1/s]", "alt [1/s]");
    for r in &rows {
        let alt = r.alt_rate.map(|a| format!("{a:.4e}")).unwrap_or_else(|| "-".into());
        println!("{:<40} {:<6} {:>10.2} {:>14.4e} {:>14}", r.name, r.kind, r.normalized_volume, r.rate, alt);
    }
    Ok(0)
}

#[derive(Serialize)]
struct OracleOutput {
    reports: Vec<OracleReport>,
}

fn oracle_check(ctx: &Context, bins: usize, q: usize, halve: bool) -> Result<i32> {
    let spec: &GateSpec = &ctx.config.gate;
    let setup = GateSetup::new(spec)?;
    let g = setup.grid;
    let pulse = |grid: TimeGrid| InputPulse::gaussian(grid, spec.tau_g, spec.center());
    let mut reports = Vec::new();
    let counts = if halve { vec![bins, 2 * bins] } else { vec![bins] };
    for nb in counts {
        let grid = TimeGrid::new(g.t0, g.t_end, nb)?;
        let r = compare_with_collision(&spec.params, &setup.controls, &pulse, grid, q, &spec.integrator)?;
        println!(
            "bins {:>4}: one-photon {:.3e} / {:.3e}, layers {:.3e} / {:.3e}, pair output {:.3e}, max {:.3e}",
            r.bins,
            r.one_system,
            r.one_output,
            r.layer_one,
            r.layer_two,
            r.pair_output,
            r.max()
        );
        reports.push(r);
    }
    ctx.writer.json("oracle.json", &OracleOutput { reports })?;
    Ok(0)
}
