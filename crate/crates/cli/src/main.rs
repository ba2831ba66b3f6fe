use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tdnls_core::criticality::{classify, CriticalityReport};
use tdnls_core::harness::{
    korotyaev_check, run_experiment, ExperimentSpec, KorotyaevReport, KorotyaevSpec, OutputDir, PointResult,
    ReportBundle, RunSummary,
};
use tdnls_core::oscillator::{build_derived, linspace, solve_fundamental, FundamentalPair};
use tdnls_core::profile::{compare_pde_vs_ode, ode_for_track, track_profile, write_profile_series, TrackOptions};
use tdnls_core::solver::{cross_validate, InitialData, SimConfig, Simulation};

/// Dissipative NLS with a time-dependent harmonic potential.
#[derive(Parser)]
#[command(name = "tdnls", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and record norms and the mass ledger.
    Simulate(Common),
    /// Classify p against the dispersive rate of the oscillator and list the predicted decay laws.
    Classify(Common),
    /// Run the original-frame and lens-frame solvers side by side.
    LensCheck(Common),
    /// Track the Fourier profile and compare it with the amplitude ODE.
    Profile(ProfileArgs),
    /// Run once and fit every decay model against the applicable laws.
    Fit(Common),
    /// Expand the [sweep] axes and run every point.
    Sweep(Common),
    /// Linear runs measuring the pointwise dispersive bound.
    Korotyaev(Common),
}

#[derive(Args)]
struct Common {
    /// Config file with [grid], [oscillator], [nonlinearity] and [run] sections.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "tdnls-out")]
    out: PathBuf,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ProfileArgs {
    #[command(flatten)]
    common: Common,
    /// Also dump the profile every this many records to fields/.
    #[arg(long)]
    snapshot_every: Option<usize>,
}

impl Common {
    fn source(&self) -> Result<String> {
        fs::read_to_string(&self.config).with_context(|| format!("reading {}", self.config.display()))
    }

    fn sim_config(&self) -> Result<SimConfig> {
        let mut cfg = SimConfig::from_toml(&self.source()?)?;
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        Ok(cfg)
    }

    fn output(&self) -> Result<OutputDir> {
        OutputDir::create(&self.out).with_context(|| format!("creating {}", self.out.display()))
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Simulate(c) => simulate(&c),
        Command::Classify(c) => classify_cmd(&c),
        Command::LensCheck(c) => lens_check(&c),
        Command::Profile(a) => profile(&a),
        Command::Fit(c) => fit(&c),
        Command::Sweep(c) => sweep(&c),
        Command::Korotyaev(c) => korotyaev(&c),
    }
}

fn write_oscillator(out: &OutputDir, pair: &FundamentalPair, t0: f64, t_end: f64) -> Result<()> {
    let ts = linspace(t0, t_end, 401);
    out.write_series("oscillator", |w| pair.write_csv(&ts, w))?;
    Ok(())
}

fn announce(out: &OutputDir) {
    println!("wrote {}", out.root().join("summary.json").display());
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    config: &'a SimConfig,
    run: RunSummary,
}

fn simulate(c: &Common) -> Result<()> {
    let cfg = c.sim_config()?;
    let out = c.output()?;
    let mut sim = Simulation::new(cfg.clone())?;
    out.write_field("initial", &sim.physical_state()?)?;
    sim.run()?;
    out.write_field("final", &sim.physical_state()?)?;
    write_oscillator(&out, sim.pair(), 0.0, cfg.run.t_end)?;
    let record = sim.into_record();
    out.write_record("run", &record)?;
    let summary = SimulateSummary {
        config: &cfg,
        run: RunSummary::of(&record),
    };
    out.write_summary(&summary)?;
    out.write_report(&run_table(&summary.run))?;
    print!("{}", run_table(&summary.run));
    announce(&out);
    Ok(())
}

fn run_table(r: &RunSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<26} {}", "steps", r.steps);
    let _ = writeln!(s, "{:<26} {}", "rejected steps", r.rejected_steps);
    let _ = writeln!(s, "{:<26} {:.6e}", "initial L2", r.initial_l2);
    let _ = writeln!(s, "{:<26} {:.6e}", "terminal L2", r.terminal_l2);
    let _ = writeln!(s, "{:<26} {:.6e}", "terminal Linf", r.terminal_linf);
    let _ = writeln!(s, "{:<26} {:.3e}", "terminal ledger residual", r.terminal_ledger_residual);
    let _ = writeln!(s, "{:<26} {:.3e}", "max boundary ratio", r.max_boundary_ratio);
    for w in &r.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

fn criticality_of(cfg: &SimConfig) -> Result<(Arc<FundamentalPair>, CriticalityReport)> {
    let horizon = cfg.run.t_end;
    let t0 = cfg.oscillator.t0;
    let pair = Arc::new(solve_fundamental(&cfg.oscillator, horizon, 1e-12)?);
    let derived = build_derived(Arc::clone(&pair), cfg.grid.n, cfg.nonlinearity.p, t0, horizon)?;
    let report = classify(&pair, cfg.grid.n, cfg.nonlinearity.p, t0, horizon)?.complete(
        cfg.run.s,
        &cfg.nonlinearity,
        &derived,
    );
    Ok((pair, report))
}

fn classify_cmd(c: &Common) -> Result<()> {
    let cfg = c.sim_config()?;
    let out = c.output()?;
    let (pair, report) = criticality_of(&cfg)?;
    write_oscillator(&out, &pair, 0.0, cfg.run.t_end)?;
    out.write_summary(&report)?;
    out.write_report(&report.table())?;
    print!("{}", report.table());
    announce(&out);
    Ok(())
}

#[derive(Serialize)]
struct LensCheckSummary {
    terminal_l2: f64,
    max_l2: f64,
    max_linf: f64,
    samples: usize,
}

fn lens_check(c: &Common) -> Result<()> {
    let cfg = c.sim_config()?;
    let out = c.output()?;
    let cv = cross_validate(&cfg)?;
    out.write_series("lens_check", |w| {
        writeln!(w, "t,l2_discrepancy,linf_discrepancy")?;
        for ((t, a), b) in cv.times.iter().zip(&cv.l2_discrepancy).zip(&cv.linf_discrepancy) {
            writeln!(w, "{t:.12e},{a:.12e},{b:.12e}")?;
        }
        Ok(())
    })?;
    let fold = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let summary = LensCheckSummary {
        terminal_l2: cv.terminal_l2(),
        max_l2: fold(&cv.l2_discrepancy),
        max_linf: fold(&cv.linf_discrepancy),
        samples: cv.times.len(),
    };
    out.write_summary(&summary)?;
    let text = format!(
        "original vs lens frame\nterminal L2 discrepancy {:.3e}\nmax L2 discrepancy      {:.3e}\nmax Linf discrepancy    {:.3e}\n",
        summary.terminal_l2, summary.max_l2, summary.max_linf
    );
    out.write_report(&text)?;
    print!("{text}");
    announce(&out);
    Ok(())
}

fn profile(a: &ProfileArgs) -> Result<()> {
    let cfg = a.common.sim_config()?;
    let out = a.common.output()?;
    let (record, track) = track_profile(
        &cfg,
        TrackOptions {
            snapshot_every: a.snapshot_every,
        },
    )?;
    let pair = Arc::new(solve_fundamental(&cfg.oscillator, cfg.run.t_end, 1e-12)?);
    let derived = build_derived(pair, cfg.grid.n, cfg.nonlinearity.p, cfg.oscillator.t0, cfg.run.t_end)?;
    let ode = ode_for_track(&track, &derived, &cfg.nonlinearity)?;
    let cmp = compare_pde_vs_ode(&track, &ode, &cfg.nonlinearity)?;
    out.write_series("profile", |w| write_profile_series(&track, &ode, w))?;
    out.write_record("run", &record)?;
    for (i, snap) in track.snapshots.iter().enumerate() {
        let path = out.root().join("fields").join(format!("profile_{i:04}.csv"));
        let mut w = std::io::BufWriter::new(fs::File::create(path)?);
        tdnls_core::spectral::io::write_profile_csv(snap, &mut w)?;
    }
    out.write_summary(&cmp)?;
    let mut text = String::new();
    let _ = writeln!(text, "remainder budget {:.3e}", cmp.remainder_budget);
    let _ = writeln!(
        text,
        "dominance start  {}",
        cmp.dominance_start.map_or_else(|| "-".to_string(), |t| format!("{t:.4}"))
    );
    for f in &cmp.frequencies {
        let _ = writeln!(
            text,
            "{:<11} xi = {:<18}  sup |pde - ode| {:.3e}  relative {:.3e}  budget {:.3e}  {}",
            f.label,
            format!("{:.4?}", f.xi),
            f.sup_discrepancy,
            f.relative,
            f.budget,
            if f.within_budget { "within budget" } else { "OVER BUDGET" }
        );
    }
    out.write_report(&text)?;
    print!("{text}");
    announce(&out);
    Ok(())
}

fn single_point(c: &Common) -> Result<(OutputDir, ReportBundle)> {
    let spec = ExperimentSpec::single(c.sim_config()?);
    let out = c.output()?;
    Ok((out, run_experiment(&spec)?))
}

fn fit(c: &Common) -> Result<()> {
    let (out, bundle) = single_point(c)?;
    let point: &PointResult = &bundle.points[0];
    if let Some(e) = &point.error {
        bail!("run failed: {e}");
    }
    out.write_bundle(&bundle)?;
    print!("{}", bundle.table());
    announce(&out);
    Ok(())
}

fn sweep(c: &Common) -> Result<()> {
    let mut spec = ExperimentSpec::from_toml(&c.source()?)?;
    if let Some(seed) = c.seed {
        spec = spec.with_seed(seed);
    }
    let out = c.output()?;
    let bundle = run_experiment(&spec)?;
    out.write_bundle(&bundle)?;
    print!("{}", bundle.table());
    announce(&out);
    if bundle.failures > 0 {
        eprintln!("{} of {} points failed", bundle.failures, bundle.points.len());
    }
    Ok(())
}

fn korotyaev(c: &Common) -> Result<()> {
    let cfg = c.sim_config()?;
    let out = c.output()?;
    let mut spec = KorotyaevSpec::new(cfg.grid, cfg.run.t_end, cfg.run.dt);
    spec.record_every = cfg.run.record_every;
    if let InitialData::Gaussian { width, .. } = cfg.run.initial_data {
        spec.width = width;
    }
    let pair = Arc::new(solve_fundamental(&cfg.oscillator, cfg.run.t_end, 1e-12)?);
    let report = korotyaev_check(&cfg.oscillator, Arc::clone(&pair), &spec)?;
    write_oscillator(&out, &pair, 0.0, cfg.run.t_end)?;
    write_korotyaev_series(&out, &report)?;
    out.write_summary(&report)?;
    let mut text = format!(
        "kernel constant (2 pi)^(-n/2) = {:.6}\nworst sup ratio / constant = {:.6}\n",
        report.kernel_constant, report.worst_normalised
    );
    for e in &report.entries {
        let _ = writeln!(
            text,
            "s = {:<8} sup ratio {:.6e}  refined {:.6e}{}",
            e.s,
            e.sup_ratio,
            e.refined_sup_ratio,
            e.oracle_max_relative_error
                .map(|r| format!("  oracle error {r:.3e}"))
                .unwrap_or_default()
        );
    }
    out.write_report(&text)?;
    print!("{text}");
    announce(&out);
    Ok(())
}

fn write_korotyaev_series(out: &OutputDir, report: &KorotyaevReport) -> Result<()> {
    for (i, e) in report.entries.iter().enumerate() {
        out.write_series(&format!("korotyaev_{i}"), |w| {
            writeln!(w, "t,ratio,oracle")?;
            for (j, (t, r)) in e.times.iter().zip(&e.ratios).enumerate() {
                let o = e.oracle.as_ref().map_or(f64::NAN, |o| o[j]);
                writeln!(w, "{t:.12e},{r:.12e},{o:.12e}")?;
            }
            Ok(())
        })?;
    }
    Ok(())
}
