//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::abstraction::{build_abstraction, export_dot, load_model, save_model, SymbolicModel};
use crate::config::{reference_page, PlanStrategy, ScenarioConfig, SimPolicy};
use crate::error::{Error, Result};
use crate::planning::{load_plan, plan_guided, plan_reach, save_plan, GuidedOptions, Plan, PlanMode};
use crate::refinement::{abstract_safe_set, check_feedback_refinement, relate};
use crate::simulation::{simulate_closed_loop, Policy};
use crate::synthesis::{load_controller, refine_controller, safety_fixpoint, save_controller};
use crate::transition::TransitionSystem;

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUILD: i32 = 3;
pub const EXIT_VIOLATIONS: i32 = 4;
pub const EXIT_PLANNING: i32 = 5;

const EXIT_CODES: &str = "Exit codes: 0 success, 1 I/O error, 2 configuration error, \
3 build or run failure, 4 refinement violations, 5 planning failure.";

#[derive(Parser, Debug)]
#[command(name = "logsym", version, about = "Symbolic models over logarithmic quantization lattices")]
#[command(after_long_help = long_help())]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

fn long_help() -> String {
    format!("{EXIT_CODES}\n\n{}", reference_page())
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Scenario file; built-in defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Input file produced by an earlier command.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the number of verification samples.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Compute transitions on first query.
    #[arg(long)]
    pub lazy: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the symbolic model and write the abstraction file.
    Abstract(Common),
    /// Compute the safety controller (reads `--in` model or builds one).
    Synthesize(Common),
    /// Check the refinement conditions on sampled states.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Where to write violation witnesses (default: `<out>.witnesses` or `witnesses.txt`).
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Plan through the configured goal cells (reads `--in` model or builds one).
    Plan(Common),
    /// Simulate the closed loop and write the trajectory CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Model whose input table a plan refers to (default: rebuilt from the scenario).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Write the transition graph in DOT format.
    Export(Common),
    /// Print the scenario key reference.
    Reference {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Config(_) | Error::Parse { .. } | Error::Input(_) => EXIT_CONFIG,
        Error::Unreachable { .. } => EXIT_PLANNING,
        Error::Divergence { .. } | Error::OutOfDomain(_) => EXIT_BUILD,
    }
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn scenario(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("cannot read {}: {io}", p.display())),
            other => other,
        })?,
        None => ScenarioConfig::parse("")?,
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(n) = common.samples {
        cfg.verify_samples = n;
    }
    if common.lazy {
        cfg.lazy = true;
    }
    Ok(cfg)
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

/// Summaries go to stdout when the payload has its own file, else to stderr.
fn report(out: Option<&Path>, text: &str) {
    if out.is_some() {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
}

fn model_for(common: &Common, cfg: &ScenarioConfig) -> Result<SymbolicModel> {
    match &common.input {
        Some(p) => load_model(&read(p)?),
        None => build_abstraction(&cfg.system, &cfg.lattice, &cfg.inputs, cfg.lazy),
    }
}

fn make_plan(cfg: &ScenarioConfig, model: &SymbolicModel) -> Result<Plan> {
    match cfg.plan_mode {
        PlanStrategy::Guided => plan_guided(
            &cfg.system,
            model,
            &cfg.plan_start,
            &cfg.goals,
            GuidedOptions {
                max_hold: cfg.max_hold,
                enabled_only: cfg.enabled_only,
            },
        ),
        PlanStrategy::Deterministic | PlanStrategy::Nondeterministic => {
            let start = relate(&cfg.plan_start, model.lattice())?;
            let mode = if cfg.plan_mode == PlanStrategy::Deterministic {
                PlanMode::Deterministic
            } else {
                PlanMode::Nondeterministic
            };
            plan_reach(model, &start, &cfg.goals, mode)
        }
    }
}

fn run(command: &Command) -> Result<i32> {
    match command {
        Command::Abstract(c) => {
            let cfg = scenario(c)?;
            let model = build_abstraction(&cfg.system, &cfg.lattice, &cfg.inputs, cfg.lazy)?;
            emit(c.out.as_deref(), &save_model(&model))?;
            report(
                c.out.as_deref(),
                &format!(
                    "states {}\ninputs {}\ntransitions {}\n",
                    model.num_states(),
                    model.inputs().len(),
                    model.transition_count()
                ),
            );
        }
        Command::Synthesize(c) => {
            let cfg = scenario(c)?;
            let model = model_for(c, &cfg)?;
            let safe = abstract_safe_set(&cfg.safe_box, model.lattice(), &model);
            let ctrl = safety_fixpoint(&model, &safe)?;
            emit(c.out.as_deref(), &save_controller(&ctrl))?;
            report(
                c.out.as_deref(),
                &format!(
                    "states {}\ninputs {}\ntransitions {}\niterations {}\ndomain {}\n",
                    model.num_states(),
                    model.inputs().len(),
                    model.transition_count(),
                    ctrl.iterations,
                    ctrl.domain_size()
                ),
            );
        }
        Command::Verify { common: c, witness } => {
            let cfg = scenario(c)?;
            let model = model_for(c, &cfg)?;
            let rep = check_feedback_refinement(&model, &cfg.system, cfg.verify_samples, cfg.seed)?;
            emit(c.out.as_deref(), &rep.summary())?;
            if !rep.passed() {
                let path = witness.clone().unwrap_or_else(|| match &c.out {
                    Some(o) => {
                        let mut s = o.clone().into_os_string();
                        s.push(".witnesses");
                        PathBuf::from(s)
                    }
                    None => PathBuf::from("witnesses.txt"),
                });
                fs::write(&path, rep.witness_lines())?;
                eprintln!("witnesses written to {}", path.display());
                return Ok(EXIT_VIOLATIONS);
            }
        }
        Command::Plan(c) => {
            let cfg = scenario(c)?;
            let model = model_for(c, &cfg)?;
            let plan = make_plan(&cfg, &model)?;
            emit(c.out.as_deref(), &save_plan(&plan))?;
            report(
                c.out.as_deref(),
                &format!(
                    "segments {}\nperiods {}\nduration {}\n",
                    plan.steps.len(),
                    plan.periods(),
                    plan.periods() as f64 * cfg.system.tau()
                ),
            );
        }
        Command::Simulate { common: c, model } => {
            let cfg = scenario(c)?;
            let run = match cfg.sim_policy {
                SimPolicy::Controller => {
                    let ctrl = match &c.input {
                        Some(p) => load_controller(&read(p)?)?,
                        None => {
                            let m = build_abstraction(&cfg.system, &cfg.lattice, &cfg.inputs, cfg.lazy)?;
                            let safe = abstract_safe_set(&cfg.safe_box, m.lattice(), &m);
                            safety_fixpoint(&m, &safe)?
                        }
                    };
                    let concrete = refine_controller(ctrl, cfg.lattice.clone());
                    simulate_closed_loop(&cfg.system, Policy::Controller(&concrete), &cfg.sim_x0, cfg.max_steps)?
                }
                SimPolicy::Plan => {
                    let m = match model {
                        Some(p) => load_model(&read(p)?)?,
                        None => build_abstraction(&cfg.system, &cfg.lattice, &cfg.inputs, cfg.lazy)?,
                    };
                    let plan = match &c.input {
                        Some(p) => load_plan(&read(p)?)?,
                        None => make_plan(&cfg, &m)?,
                    };
                    let policy = Policy::Plan {
                        plan: &plan,
                        inputs: m.inputs(),
                        lattice: m.lattice(),
                    };
                    simulate_closed_loop(&cfg.system, policy, &cfg.sim_x0, cfg.max_steps)?
                }
            };
            emit(
                c.out.as_deref(),
                &run.trajectory.to_csv(cfg.system.dim_x(), cfg.system.dim_u()),
            )?;
            report(
                c.out.as_deref(),
                &format!("steps {}\nstop {:?}\n", run.trajectory.len() - 1, run.stop),
            );
        }
        Command::Export(c) => {
            let cfg = scenario(c)?;
            let model = model_for(c, &cfg)?;
            emit(c.out.as_deref(), &export_dot(&model))?;
        }
        Command::Reference { out } => emit(out.as_deref(), &reference_page())?,
    }
    Ok(0)
}
