//! Argument definitions and command dispatch.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use semiclassical::cubic::{wkb_lifetime, CubicModel};
use semiclassical::gutzwiller::{
    find_pole, pole_residual, response_function, PoleIndex, SemiclassicalContext,
};
use semiclassical::trajectory::{find_crossing, integrate_with, reversibility_error, Branch, IntegratorConfig};
use serde_json::json;

use crate::manifest::RunManifest;
use crate::orbit_file::load_orbit;
use crate::policy::{parse_complex, turning_points, EnergyPolicy, Start, X0Policy};
use crate::render::{full, Cell, Format, Table};
use crate::table1::{compute_rows, to_table, DEFAULT_COUPLINGS};

#[derive(Debug, Parser)]
#[command(name = "semiclassical", version, about = "Complex classical trajectories, WKB lifetimes and periodic-orbit resonance poles")]
pub struct Cli {
    /// Relative tolerance of the integrator.
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    /// Absolute tolerance of the integrator.
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    /// Integration horizon (defaults depend on the command).
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    /// Write results here instead of standard output; a manifest sidecar is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// WKB lifetime for each coupling.
    Tau {
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
        g: Vec<f64>,
    },
    /// The three complex turning points at the chosen energy.
    TurningPoints(EnergyArgs),
    /// Export a sampled trajectory as CSV.
    Trajectory(TrajectoryArgs),
    /// First time at which Re x reaches Re x3.
    CrossingTime(StartArgs),
    /// Lifetime and crossing time side by side with the reference values.
    Table1(Table1Args),
    /// Single-orbit response function and its poles.
    Gutzwiller {
        #[command(subcommand)]
        command: GutzwillerCommand,
    },
    /// Forward/backward retrace error.
    Reversibility(ReversibilityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum BranchArg {
    #[default]
    Positive,
    Negative,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Positive => Branch::Positive,
            BranchArg::Negative => Branch::Negative,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EnergyArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub g: f64,
    /// `quasi-bound`, `shifted` or `re=A,im=B`.
    #[arg(long, default_value = "quasi-bound")]
    pub energy: EnergyPolicy,
}

#[derive(Debug, Clone, Args)]
pub struct StartArgs {
    #[command(flatten)]
    pub energy: EnergyArgs,
    /// `x1`, `x2`, `x3` (momentum zero) or `re=A,im=B` (momentum from --branch).
    #[arg(long, default_value = "x1")]
    pub x0: X0Policy,
    #[arg(long, value_enum, default_value_t)]
    pub branch: BranchArg,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub start: StartArgs,
    #[arg(long, default_value_t = 0.05)]
    pub sample_interval: f64,
    /// Fail once |H − E| exceeds this times max(1, |E|).
    #[arg(long, default_value_t = 1e-6)]
    pub drift_limit: f64,
}

#[derive(Debug, Clone, Args)]
pub struct Table1Args {
    /// Override the four default couplings.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub g: Option<Vec<f64>>,
    #[arg(long, default_value = "quasi-bound")]
    pub energy: EnergyPolicy,
    #[arg(long, default_value = "x1")]
    pub x0: X0Policy,
    #[arg(long, value_enum, default_value_t)]
    pub branch: BranchArg,
}

#[derive(Debug, Clone, Args)]
pub struct ReversibilityArgs {
    /// Use the pure oscillator (g = 0, E = 1/2 by default, T = 2π by default).
    #[arg(long, conflicts_with = "g")]
    pub harmonic: bool,
    #[arg(long, required_unless_present = "harmonic")]
    pub g: Option<f64>,
    #[arg(long)]
    pub energy: Option<EnergyPolicy>,
    #[arg(long, default_value = "x1")]
    pub x0: X0Policy,
    #[arg(long, value_enum, default_value_t)]
    pub branch: BranchArg,
    /// Propagation time T in each direction (default 50, or 2π with --harmonic).
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum GutzwillerCommand {
    /// Evaluate g(E) at one complex energy.
    Eval {
        #[arg(long)]
        orbit: PathBuf,
        /// `re=A,im=B`.
        #[arg(long, value_parser = parse_complex_arg)]
        energy: Complex64,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
    },
    /// Solve for poles over the rectangle 0..=k-max by 0..=s-max.
    Poles {
        #[arg(long)]
        orbit: PathBuf,
        #[arg(long, default_value_t = 3)]
        k_max: u32,
        #[arg(long, default_value_t = 3)]
        s_max: u32,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
    },
}

fn parse_complex_arg(s: &str) -> Result<Complex64> {
    parse_complex(s)
}

impl Cli {
    fn config(&self, default_t_max: f64) -> Result<IntegratorConfig> {
        let defaults = IntegratorConfig::default();
        let cfg = IntegratorConfig {
            rel_tol: self.rel_tol.unwrap_or(defaults.rel_tol),
            abs_tol: self.abs_tol.unwrap_or(defaults.abs_tol),
            t_max: self.t_max.unwrap_or(default_t_max),
            ..defaults
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn manifest(&self, command: &str, parameters: serde_json::Value) -> Result<()> {
        RunManifest::new(command, parameters).emit(self.out.as_deref())
    }

    fn write_table(&self, table: &Table) -> Result<()> {
        let mut out = self.output()?;
        table.write(self.format, &mut out)?;
        out.flush()?;
        Ok(())
    }
}

fn config_json(cfg: &IntegratorConfig) -> serde_json::Value {
    json!({
        "rel_tol": cfg.rel_tol,
        "abs_tol": cfg.abs_tol,
        "max_step": cfg.max_step,
        "t_max": cfg.t_max,
        "sample_interval": cfg.sample_interval,
        "drift_limit": cfg.drift_limit,
    })
}

fn coupling(g: f64) -> Result<CubicModel> {
    if !(g > 0.0) || !g.is_finite() {
        bail!("coupling g must be positive, got {g}");
    }
    Ok(CubicModel::new(g)?)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Tau { g } => cmd_tau(cli, g),
        Command::TurningPoints(args) => cmd_turning_points(cli, args),
        Command::Trajectory(args) => cmd_trajectory(cli, args),
        Command::CrossingTime(args) => cmd_crossing_time(cli, args),
        Command::Table1(args) => cmd_table1(cli, args),
        Command::Gutzwiller { command } => cmd_gutzwiller(cli, command),
        Command::Reversibility(args) => cmd_reversibility(cli, args),
    }
}

fn cmd_tau(cli: &Cli, couplings: &[f64]) -> Result<()> {
    for &g in couplings {
        coupling(g)?;
    }
    cli.manifest("tau", json!({ "g": couplings }))?;
    let mut table = Table::new(vec!["g", "tau"]);
    for &g in couplings {
        table.push(vec![g.into(), wkb_lifetime(g)?.into()]);
    }
    cli.write_table(&table)
}

fn cmd_turning_points(cli: &Cli, args: &EnergyArgs) -> Result<()> {
    let model = coupling(args.g)?;
    let energy = args.energy.resolve(args.g)?;
    cli.manifest(
        "turning-points",
        json!({ "g": args.g, "energy_policy": args.energy.to_string(), "energy": [energy.re, energy.im] }),
    )?;
    let mut table = Table::new(vec!["label", "re", "im"]);
    for (i, x) in turning_points(&model, energy)?.iter().enumerate() {
        table.push(vec![Cell::Text(format!("x{}", i + 1)), x.re.into(), x.im.into()]);
    }
    cli.write_table(&table)
}

fn start_json(args: &StartArgs, start: &Start, cfg: &IntegratorConfig) -> serde_json::Value {
    json!({
        "g": args.energy.g,
        "energy_policy": args.energy.energy.to_string(),
        "x0_policy": args.x0.to_string(),
        "branch": format!("{:?}", args.branch).to_lowercase(),
        "initial_state": start.summary(),
        "integrator": config_json(cfg),
    })
}

fn cmd_trajectory(cli: &Cli, args: &TrajectoryArgs) -> Result<()> {
    let s = &args.start;
    let model = CubicModel::new(s.energy.g)?;
    let cfg = IntegratorConfig {
        sample_interval: args.sample_interval,
        drift_limit: args.drift_limit,
        ..cli.config(50.0)?
    };
    cfg.validate()?;
    let start = Start::resolve(&model, &s.energy.energy, &s.x0, s.branch.into())?;
    cli.manifest("trajectory", start_json(s, &start, &cfg))?;

    let points = turning_points(&model, start.energy)?;
    let listing: Vec<String> = points
        .iter()
        .enumerate()
        .map(|(i, x)| format!("x{} = {} {:+}i", i + 1, x.re, x.im))
        .collect();
    // Keep standard output pure CSV when no file is given.
    if cli.out.is_some() {
        println!("turning points: {}", listing.join(", "));
    } else {
        eprintln!("turning points: {}", listing.join(", "));
    }

    let mut out = cli.output()?;
    writeln!(out, "t,re_x,im_x,re_p,im_p,energy_drift")?;
    let mut io_error = None;
    let result = integrate_with(&model, start.energy, start.x0, start.p0, &cfg, |sample| {
        if io_error.is_some() {
            return;
        }
        let line = [sample.t, sample.x.re, sample.x.im, sample.p.re, sample.p.im, sample.energy_drift]
            .map(full)
            .join(",");
        if let Err(e) = writeln!(out, "{line}") {
            io_error = Some(e);
        }
    });
    out.flush()?;
    if let Some(e) = io_error {
        return Err(e).context("writing trajectory");
    }
    result.context("integration stopped early; samples up to the failure were written")?;
    Ok(())
}

fn cmd_crossing_time(cli: &Cli, args: &StartArgs) -> Result<()> {
    let g = args.energy.g;
    let model = coupling(g)?;
    let cfg = cli.config(IntegratorConfig::default().t_max)?;
    let start = Start::resolve(&model, &args.energy.energy, &args.x0, args.branch.into())?;
    cli.manifest("crossing-time", start_json(args, &start, &cfg))?;
    let tau = wkb_lifetime(g)?;
    let result = find_crossing(&model, start.energy, start.x0, start.p0, &cfg);
    let mut table = Table::new(vec!["g", "t_c", "tau", "ratio", "threshold", "max_energy_drift", "steps"]);
    match &result {
        Ok(c) => table.push(vec![
            g.into(),
            c.t_c.into(),
            tau.into(),
            (c.t_c / tau).into(),
            c.threshold.into(),
            c.max_energy_drift.into(),
            Cell::Int(c.steps as i64),
        ]),
        Err(_) => table.push(vec![
            g.into(),
            Cell::Missing,
            tau.into(),
            Cell::Missing,
            Cell::Missing,
            Cell::Missing,
            Cell::Missing,
        ]),
    }
    cli.write_table(&table)?;
    result?;
    Ok(())
}

fn cmd_table1(cli: &Cli, args: &Table1Args) -> Result<()> {
    let couplings = args.g.clone().unwrap_or_else(|| DEFAULT_COUPLINGS.to_vec());
    for &g in &couplings {
        coupling(g)?;
    }
    let cfg = cli.config(IntegratorConfig::default().t_max)?;
    cli.manifest(
        "table1",
        json!({
            "g": couplings,
            "energy_policy": args.energy.to_string(),
            "x0_policy": args.x0.to_string(),
            "branch": format!("{:?}", args.branch).to_lowercase(),
            "integrator": config_json(&cfg),
        }),
    )?;
    let rows = compute_rows(&couplings, &args.energy, &args.x0, args.branch.into(), &cfg)?;
    cli.write_table(&to_table(&rows))
}

fn cmd_gutzwiller(cli: &Cli, command: &GutzwillerCommand) -> Result<()> {
    match command {
        GutzwillerCommand::Eval { orbit, energy, hbar } => {
            let ctx = SemiclassicalContext::new(*hbar)?;
            let model = load_orbit(orbit)?;
            cli.manifest(
                "gutzwiller eval",
                json!({ "orbit": orbit, "energy": [energy.re, energy.im], "hbar": hbar }),
            )?;
            let g = response_function(&ctx, &model, *energy)?;
            let mut table = Table::new(vec!["re_E", "im_E", "re_g", "im_g"]);
            table.push(vec![energy.re.into(), energy.im.into(), g.re.into(), g.im.into()]);
            cli.write_table(&table)
        }
        GutzwillerCommand::Poles { orbit, k_max, s_max, hbar } => {
            let ctx = SemiclassicalContext::new(*hbar)?;
            let model = load_orbit(orbit)?;
            cli.manifest(
                "gutzwiller poles",
                json!({ "orbit": orbit, "k_max": k_max, "s_max": s_max, "hbar": hbar }),
            )?;
            let mut table = Table::new(vec!["k", "s", "re_E", "im_E", "residual", "status"]);
            let mut failures = 0;
            for k in 0..=*k_max {
                for s in 0..=*s_max {
                    let idx = PoleIndex::new(k, s);
                    let mut row = vec![Cell::Int(k.into()), Cell::Int(s.into())];
                    match find_pole(&ctx, &model, idx, None) {
                        Ok(e) => row.extend([
                            e.re.into(),
                            e.im.into(),
                            pole_residual(&ctx, &model, e, idx).norm().into(),
                            Cell::Text("ok".into()),
                        ]),
                        Err(err) => {
                            failures += 1;
                            row.extend([Cell::Missing, Cell::Missing, Cell::Missing, Cell::Text(err.to_string())]);
                        }
                    }
                    table.push(row);
                }
            }
            cli.write_table(&table)?;
            if failures > 0 {
                bail!("{failures} of {} pole searches failed", table.rows.len());
            }
            Ok(())
        }
    }
}

fn cmd_reversibility(cli: &Cli, args: &ReversibilityArgs) -> Result<()> {
    let (model, default_energy, default_duration) = if args.harmonic {
        (CubicModel::harmonic(), EnergyPolicy::Explicit(Complex64::new(0.5, 0.0)), TAU)
    } else {
        let g = args.g.expect("clap enforces --g without --harmonic");
        (coupling(g)?, EnergyPolicy::QuasiBound, 50.0)
    };
    let energy = args.energy.unwrap_or(default_energy);
    let duration = args.duration.unwrap_or(default_duration);
    let cfg = cli.config(IntegratorConfig::default().t_max)?;
    let start = Start::resolve(&model, &energy, &args.x0, args.branch.into())?;
    cli.manifest(
        "reversibility",
        json!({
            "g": model.g(),
            "harmonic": args.harmonic,
            "energy_policy": energy.to_string(),
            "x0_policy": args.x0.to_string(),
            "initial_state": start.summary(),
            "duration": duration,
            "integrator": config_json(&cfg),
        }),
    )?;
    let err = reversibility_error(&model, start.energy, start.x0, start.p0, duration, &cfg)?;
    let mut table = Table::new(vec!["g", "duration", "retrace_error", "rel_tol", "abs_tol"]);
    table.push(vec![
        model.g().into(),
        duration.into(),
        err.into(),
        cfg.rel_tol.into(),
        cfg.abs_tol.into(),
    ]);
    cli.write_table(&table)
}
