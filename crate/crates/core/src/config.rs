//! Scenario files: flat `key = value` text grouped under `[section]` headers.
//!
//! Every key has a documented default. Any key may be overridden from the
//! environment as `LOGSYM_<SECTION>_<KEY>` (upper case).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::abstraction::InputApproxConfig;
use crate::dynamics::{pendulum_with, PendulumParams, SampledSystem, SystemRegistry};
use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::quantizer::{CellIndex, EdgePolicy, LogLattice, LogQuantizerAxis, Variant};

pub const ENV_PREFIX: &str = "LOGSYM_";

pub struct KeySpec {
    pub section: &'static str,
    pub key: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn k(section: &'static str, key: &'static str, default: &'static str, doc: &'static str) -> KeySpec {
    KeySpec {
        section,
        key,
        default,
        doc,
    }
}

pub const KEYS: &[KeySpec] = &[
    k("system", "name", "pendulum", "registered system (pendulum, decay)"),
    k("system", "lipschitz", "6", "Lipschitz constant of the vector field"),
    k("system", "tau", "0.2", "sampling period"),
    k("system", "integrator_steps", "10", "RK4 substeps per sampling period"),
    k("system", "input_lo", "-2.5", "input box lower corner (comma list)"),
    k("system", "input_hi", "2.5", "input box upper corner (comma list)"),
    k("system", "gravity", "9.8", "pendulum: gravitational acceleration"),
    k("system", "length", "5", "pendulum: rod length"),
    k("system", "mass", "0.5", "pendulum: bob mass"),
    k("system", "friction", "3", "pendulum: friction coefficient"),
    k("quantizer", "variant", "deadzone", "`deadzone` (scale is the deadzone half-width) or `level` (scale is the first level)"),
    k("quantizer", "eta", "0.2", "quantizer parameter in (0, 1), scalar or per axis"),
    k("quantizer", "scale", "0.4", "deadzone half-width or first level, scalar or per axis"),
    k("quantizer", "edge", "merge", "`merge` drops levels whose value exceeds the bound, `clip` keeps them"),
    k("quantizer", "state_lo", "-1,-1", "lattice bounds, lower corner"),
    k("quantizer", "state_hi", "1,1", "lattice bounds, upper corner"),
    k("abstraction", "mu", "0.002", "successor quantizer parameter in (0, 1)"),
    k("abstraction", "mu_scale", "", "successor quantizer first level (empty: same as mu)"),
    k("abstraction", "input_samples", "51", "grid points per input axis"),
    k("abstraction", "lazy", "false", "compute transitions on first query"),
    k("synthesis", "safe_lo", "", "safe box lower corner (empty: lattice bounds)"),
    k("synthesis", "safe_hi", "", "safe box upper corner (empty: lattice bounds)"),
    k("run", "seed", "1", "seed for sampled checks"),
    k("run", "verify_samples", "10000", "samples drawn by `verify`"),
    k("plan", "start", "-0.48,0", "initial concrete state"),
    k("plan", "goals", "", "goal cells in visiting order, `l1,l2; l1,l2; ...`"),
    k("plan", "mode", "guided", "`guided`, `deterministic` or `nondeterministic`"),
    k("plan", "max_hold", "50", "guided mode: longest hold of one input"),
    k("plan", "enabled_only", "false", "guided mode: use only inputs enabled at the current cell"),
    k("simulate", "x0", "", "initial state (empty: plan start)"),
    k("simulate", "max_steps", "200", "sampling periods to simulate"),
    k("simulate", "policy", "controller", "`controller` or `plan`"),
];

fn spec(section: &str, key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|s| s.section == section && s.key == key)
}

/// Markdown reference of every key with its default and environment name.
pub fn reference_page() -> String {
    let mut out = String::from("# Scenario file keys\n\n");
    let _ = writeln!(
        out,
        "Values may be overridden with environment variables named `{ENV_PREFIX}<SECTION>_<KEY>`.\n"
    );
    let mut section = "";
    for s in KEYS {
        if s.section != section {
            section = s.section;
            let _ = writeln!(out, "\n## [{section}]\n");
            out.push_str("| key | default | environment | meaning |\n|---|---|---|---|\n");
        }
        let _ = writeln!(
            out,
            "| `{}` | `{}` | `{}` | {} |",
            s.key,
            s.default,
            env_name(s.section, s.key),
            s.doc
        );
    }
    out
}

fn env_name(section: &str, key: &str) -> String {
    format!("{ENV_PREFIX}{}_{}", section.to_uppercase(), key.to_uppercase())
}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    origin: String,
}

/// Key-value pairs as read, each remembering where it came from.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<(String, String), Entry>,
}

impl RawConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut cfg = RawConfig::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let origin = format!("{source}:{}", i + 1);
            let line = match raw.find(" #") {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("{origin}: unterminated section header")))?
                    .trim();
                if !KEYS.iter().any(|s| s.section == name) {
                    return Err(Error::Config(format!("{origin}: unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{origin}: expected `key = value`")))?;
            let key = key.trim();
            let sec = section
                .as_deref()
                .ok_or_else(|| Error::Config(format!("{origin}: `{key}` appears before any section")))?;
            if spec(sec, key).is_none() {
                return Err(Error::Config(format!("{origin}: unknown key `{key}` in [{sec}]")));
            }
            let prev = cfg.entries.insert(
                (sec.to_string(), key.to_string()),
                Entry {
                    value: value.trim().to_string(),
                    origin: origin.clone(),
                },
            );
            if let Some(p) = prev {
                return Err(Error::Config(format!(
                    "{origin}: `{key}` in [{sec}] already set at {}",
                    p.origin
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Applies `LOGSYM_<SECTION>_<KEY>` overrides from `vars`.
    pub fn apply_env<I>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        for (name, value) in vars {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let found = KEYS.iter().find(|s| {
                let sec = s.section.to_uppercase();
                rest.strip_prefix(&sec)
                    .and_then(|r| r.strip_prefix('_'))
                    .is_some_and(|key| key == s.key.to_uppercase())
            });
            let s = found.ok_or_else(|| {
                Error::Config(format!("environment variable {name} names no configuration key"))
            })?;
            self.entries.insert(
                (s.section.to_string(), s.key.to_string()),
                Entry {
                    value,
                    origin: format!("environment {name}"),
                },
            );
        }
        Ok(())
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str, origin: &str) -> Result<()> {
        if spec(section, key).is_none() {
            return Err(Error::Config(format!("{origin}: unknown key `{key}` in [{section}]")));
        }
        self.entries.insert(
            (section.to_string(), key.to_string()),
            Entry {
                value: value.to_string(),
                origin: origin.to_string(),
            },
        );
        Ok(())
    }

    fn raw(&self, section: &str, key: &str) -> (String, String) {
        match self.entries.get(&(section.to_string(), key.to_string())) {
            Some(e) => (e.value.clone(), e.origin.clone()),
            None => {
                let s = spec(section, key).expect("key is in the schema");
                (s.default.to_string(), format!("default of [{section}] {key}"))
            }
        }
    }

    fn origin(&self, section: &str, key: &str) -> String {
        self.raw(section, key).1
    }

    fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<T> {
        let (v, origin) = self.raw(section, key);
        v.parse()
            .map_err(|_| Error::Config(format!("{origin}: cannot parse `{v}` for `{key}`")))
    }

    fn get_bool(&self, section: &str, key: &str) -> Result<bool> {
        let (v, origin) = self.raw(section, key);
        match v.to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            _ => Err(Error::Config(format!("{origin}: `{key}` must be true or false, got `{v}`"))),
        }
    }

    fn get_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        let (v, origin) = self.raw(section, key);
        if v.is_empty() {
            return Ok(None);
        }
        v.split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| {
                    Error::Config(format!("{origin}: `{key}` has a bad number `{}`", t.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn get_box(&self, section: &str, lo: &str, hi: &str) -> Result<Option<HyperBox>> {
        match (self.get_list(section, lo)?, self.get_list(section, hi)?) {
            (None, None) => Ok(None),
            (Some(l), Some(h)) => HyperBox::new(l, h)
                .map(Some)
                .map_err(|e| Error::Config(format!("{}: {e}", self.origin(section, lo)))),
            _ => Err(Error::Config(format!(
                "{}: `{lo}` and `{hi}` must be given together",
                self.origin(section, lo)
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanStrategy {
    Guided,
    Deterministic,
    Nondeterministic,
}

impl FromStr for PlanStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "guided" => Ok(PlanStrategy::Guided),
            "deterministic" => Ok(PlanStrategy::Deterministic),
            "nondeterministic" => Ok(PlanStrategy::Nondeterministic),
            _ => Err(Error::Config(format!("unknown plan mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimPolicy {
    Controller,
    Plan,
}

impl FromStr for SimPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "controller" => Ok(SimPolicy::Controller),
            "plan" => Ok(SimPolicy::Plan),
            _ => Err(Error::Config(format!("unknown simulation policy `{s}`"))),
        }
    }
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub system: SampledSystem,
    pub lattice: LogLattice,
    pub inputs: InputApproxConfig,
    pub lazy: bool,
    pub safe_box: HyperBox,
    pub seed: u64,
    pub verify_samples: usize,
    pub plan_start: Vec<f64>,
    pub goals: Vec<CellIndex>,
    pub plan_mode: PlanStrategy,
    pub max_hold: usize,
    pub enabled_only: bool,
    pub sim_x0: Vec<f64>,
    pub max_steps: usize,
    pub sim_policy: SimPolicy,
}

fn per_axis(v: Vec<f64>, dim: usize, key: &str, origin: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        n if n == dim => Ok(v),
        n => Err(Error::Config(format!(
            "{origin}: `{key}` has {n} entries for {dim} axes"
        ))),
    }
}

impl ScenarioConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let at = |sec: &str, key: &str| raw.origin(sec, key);
        let wrap = |sec: &str, key: &str| {
            let origin = at(sec, key);
            move |e: Error| Error::Config(format!("{origin}: {e}"))
        };

        let name: String = raw.get("system", "name")?;
        let base = if name == "pendulum" {
            pendulum_with(PendulumParams {
                gravity: raw.get("system", "gravity")?,
                length: raw.get("system", "length")?,
                mass: raw.get("system", "mass")?,
                friction: raw.get("system", "friction")?,
            })
        } else {
            SystemRegistry::default()
                .create(&name)
                .map_err(wrap("system", "name"))?
        };
        let input_box = raw
            .get_box("system", "input_lo", "input_hi")?
            .expect("input box has defaults");
        let system = base
            .with_lipschitz(raw.get("system", "lipschitz")?)
            .map_err(wrap("system", "lipschitz"))?
            .with_tau(raw.get("system", "tau")?)
            .map_err(wrap("system", "tau"))?
            .with_integrator_steps(raw.get("system", "integrator_steps")?)
            .map_err(wrap("system", "integrator_steps"))?
            .with_input_box(input_box)
            .map_err(wrap("system", "input_lo"))?;

        let bounds = raw
            .get_box("quantizer", "state_lo", "state_hi")?
            .expect("state box has defaults");
        let dim = bounds.dim();
        let variant: Variant = raw
            .raw("quantizer", "variant")
            .0
            .parse()
            .map_err(wrap("quantizer", "variant"))?;
        let edge: EdgePolicy = raw
            .raw("quantizer", "edge")
            .0
            .parse()
            .map_err(wrap("quantizer", "edge"))?;
        let etas = per_axis(
            raw.get_list("quantizer", "eta")?.unwrap_or_default(),
            dim,
            "eta",
            &at("quantizer", "eta"),
        )?;
        let scales = per_axis(
            raw.get_list("quantizer", "scale")?.unwrap_or_default(),
            dim,
            "scale",
            &at("quantizer", "scale"),
        )?;
        let axes = etas
            .iter()
            .zip(&scales)
            .map(|(&e, &s)| LogQuantizerAxis::new(e, s, variant).map_err(wrap("quantizer", "eta")))
            .collect::<Result<Vec<_>>>()?;
        let lattice = LogLattice::new(axes, bounds, edge).map_err(wrap("quantizer", "state_lo"))?;
        if system.dim_x() != dim {
            return Err(Error::Config(format!(
                "{}: system `{name}` has {} states but the bounds have {dim} axes",
                at("quantizer", "state_lo"),
                system.dim_x()
            )));
        }

        let mu: f64 = raw.get("abstraction", "mu")?;
        let mut inputs = InputApproxConfig::new(mu, raw.get("abstraction", "input_samples")?)
            .map_err(wrap("abstraction", "mu"))?;
        if let Some(s) = raw.get_list("abstraction", "mu_scale")? {
            inputs = inputs
                .with_mu_scale(s[0])
                .map_err(wrap("abstraction", "mu_scale"))?;
        }

        let safe_box = raw
            .get_box("synthesis", "safe_lo", "safe_hi")?
            .unwrap_or_else(|| lattice.bounds().clone());
        if safe_box.dim() != dim {
            return Err(Error::Config(format!(
                "{}: safe box has {} axes, expected {dim}",
                at("synthesis", "safe_lo"),
                safe_box.dim()
            )));
        }

        let plan_start = raw.get_list("plan", "start")?.unwrap_or_default();
        if plan_start.len() != dim {
            return Err(Error::Config(format!(
                "{}: start needs {dim} components",
                at("plan", "start")
            )));
        }
        let (goal_text, goal_origin) = raw.raw("plan", "goals");
        let goals = goal_text
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                let c: CellIndex = s
                    .parse()
                    .map_err(|e: Error| Error::Config(format!("{goal_origin}: {e}")))?;
                if !lattice.is_valid(&c) {
                    return Err(Error::Config(format!("{goal_origin}: goal {c} is not a lattice cell")));
                }
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        let plan_mode: PlanStrategy = raw
            .raw("plan", "mode")
            .0
            .parse()
            .map_err(wrap("plan", "mode"))?;

        let sim_x0 = raw
            .get_list("simulate", "x0")?
            .unwrap_or_else(|| plan_start.clone());
        if sim_x0.len() != dim {
            return Err(Error::Config(format!(
                "{}: x0 needs {dim} components",
                at("simulate", "x0")
            )));
        }
        let sim_policy: SimPolicy = raw
            .raw("simulate", "policy")
            .0
            .parse()
            .map_err(wrap("simulate", "policy"))?;

        Ok(ScenarioConfig {
            system,
            lattice,
            inputs,
            lazy: raw.get_bool("abstraction", "lazy")?,
            safe_box,
            seed: raw.get("run", "seed")?,
            verify_samples: raw.get("run", "verify_samples")?,
            plan_start,
            goals,
            plan_mode,
            max_hold: raw.get("plan", "max_hold")?,
            enabled_only: raw.get_bool("plan", "enabled_only")?,
            sim_x0,
            max_steps: raw.get("simulate", "max_steps")?,
            sim_policy,
        })
    }

    /// Reads a scenario file and applies environment overrides.
    pub fn load(path: &Path) -> Result<Self> {
        let mut raw = RawConfig::load(path)?;
        raw.apply_env(std::env::vars())?;
        Self::from_raw(&raw)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text, "<string>")?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_give_the_pendulum_scenario() {
        let c = ScenarioConfig::parse("").unwrap();
        assert_eq!(c.lattice.num_cells(), 25);
        assert_eq!(c.system.tau(), 0.2);
        assert_eq!(c.system.lipschitz(), 6.0);
        assert_eq!(c.inputs.mu, 0.002);
        assert_eq!(c.inputs.input_samples, 51);
        assert_eq!(c.safe_box, *c.lattice.bounds());
        assert_eq!(c.sim_x0, vec![-0.48, 0.0]);
    }

    #[test]
    fn diagnostics_carry_file_and_line() {
        let err = ScenarioConfig::from_raw(
            &RawConfig::parse("[quantizer]\n\neta = 1.5\n", "s.cfg").unwrap(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("s.cfg:3"), "{err}");
        let err = RawConfig::parse("[quantizer]\nwidth = 2\n", "s.cfg").unwrap_err();
        assert!(err.to_string().contains("s.cfg:2"), "{err}");
        let err = RawConfig::parse("eta = 2\n", "s.cfg").unwrap_err();
        assert!(err.to_string().contains("before any section"), "{err}");
    }

    #[test]
    fn environment_overrides_file() {
        let mut raw = RawConfig::parse("[quantizer]\neta = 0.2\n", "s.cfg").unwrap();
        raw.apply_env([
            ("LOGSYM_QUANTIZER_ETA".to_string(), "0.1".to_string()),
            ("PATH".to_string(), "/bin".to_string()),
        ])
        .unwrap();
        let c = ScenarioConfig::from_raw(&raw).unwrap();
        assert_eq!(c.lattice.axes()[0].eta(), 0.1);
        assert!(raw
            .apply_env([("LOGSYM_QUANTIZER_WIDTH".to_string(), "1".to_string())])
            .is_err());
    }

    #[test]
    fn goals_and_lists() {
        let c = ScenarioConfig::parse(
            "[plan]\ngoals = 0,0; -1,0 # trailing comment\n[quantizer]\nscale = 0.4, 0.3\n",
        )
        .unwrap();
        assert_eq!(c.goals, vec![CellIndex(vec![0, 0]), CellIndex(vec![-1, 0])]);
        assert_eq!(c.lattice.axes()[1].scale(), 0.3);
        assert!(ScenarioConfig::parse("[plan]\ngoals = 9,9\n").is_err());
    }

    #[test]
    fn reference_lists_every_key() {
        let page = reference_page();
        for s in KEYS {
            assert!(page.contains(&env_name(s.section, s.key)));
        }
    }
}
