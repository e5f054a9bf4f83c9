//! Continuous control systems sampled with piecewise-constant inputs.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::HyperBox;

/// Right-hand side `f(x, u)`, written into the output slice.
pub type VectorField = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// A control system together with its sampling setup.
#[derive(Clone)]
pub struct SampledSystem {
    name: String,
    dim_x: usize,
    dim_u: usize,
    field: VectorField,
    lipschitz: f64,
    tau: f64,
    input_box: HyperBox,
    integrator_steps: usize,
}

impl fmt::Debug for SampledSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledSystem")
            .field("name", &self.name)
            .field("dim_x", &self.dim_x)
            .field("dim_u", &self.dim_u)
            .field("lipschitz", &self.lipschitz)
            .field("tau", &self.tau)
            .field("input_box", &self.input_box)
            .field("integrator_steps", &self.integrator_steps)
            .finish_non_exhaustive()
    }
}

pub const DEFAULT_INTEGRATOR_STEPS: usize = 10;

impl SampledSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        dim_x: usize,
        dim_u: usize,
        field: VectorField,
        lipschitz: f64,
        tau: f64,
        input_box: HyperBox,
        integrator_steps: usize,
    ) -> Result<Self> {
        if dim_x == 0 || dim_u == 0 {
            return Err(Error::Config("state and input dimensions must be positive".into()));
        }
        if input_box.dim() != dim_u {
            return Err(Error::Config(format!(
                "input box has dimension {}, system has {dim_u} inputs",
                input_box.dim()
            )));
        }
        let sys = SampledSystem {
            name: name.into(),
            dim_x,
            dim_u,
            field,
            lipschitz,
            tau,
            input_box,
            integrator_steps,
        };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("sampling period must be positive, got {}", self.tau)));
        }
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::Config(format!(
                "Lipschitz constant must be positive, got {}",
                self.lipschitz
            )));
        }
        if self.integrator_steps == 0 {
            return Err(Error::Config("integrator_steps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        self.tau = tau;
        self.validate()?;
        Ok(self)
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Result<Self> {
        self.lipschitz = lipschitz;
        self.validate()?;
        Ok(self)
    }

    pub fn with_integrator_steps(mut self, steps: usize) -> Result<Self> {
        self.integrator_steps = steps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_input_box(mut self, input_box: HyperBox) -> Result<Self> {
        if input_box.dim() != self.dim_u {
            return Err(Error::Config(format!(
                "input box has dimension {}, system has {} inputs",
                input_box.dim(),
                self.dim_u
            )));
        }
        self.input_box = input_box;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_u(&self) -> usize {
        self.dim_u
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn input_box(&self) -> &HyperBox {
        &self.input_box
    }

    pub fn integrator_steps(&self) -> usize {
        self.integrator_steps
    }

    pub fn field(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.dim_x];
        (self.field)(x, u, &mut dx);
        dx
    }

    /// State after one sampling period with `u` held constant.
    pub fn successor(&self, x0: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.integrate(x0, u, self.tau, self.integrator_steps)
    }

    /// Classical fourth-order Runge-Kutta over `duration` with `steps` equal substeps.
    pub fn integrate(&self, x0: &[f64], u: &[f64], duration: f64, steps: usize) -> Result<Vec<f64>> {
        if x0.len() != self.dim_x || u.len() != self.dim_u {
            return Err(Error::Input(format!(
                "expected state of dimension {} and input of dimension {}",
                self.dim_x, self.dim_u
            )));
        }
        if steps == 0 {
            return Err(Error::Input("need at least one integration substep".into()));
        }
        let n = self.dim_x;
        let h = duration / steps as f64;
        let mut x = x0.to_vec();
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for step in 0..steps {
            (self.field)(&x, u, &mut k1);
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k1[i];
            }
            (self.field)(&tmp, u, &mut k2);
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k2[i];
            }
            (self.field)(&tmp, u, &mut k3);
            for i in 0..n {
                tmp[i] = x[i] + h * k3[i];
            }
            (self.field)(&tmp, u, &mut k4);
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { substep: step });
            }
        }
        Ok(x)
    }
}

/// Physical constants of the damped pendulum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PendulumParams {
    pub gravity: f64,
    pub length: f64,
    pub mass: f64,
    pub friction: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            gravity: 9.8,
            length: 5.0,
            mass: 0.5,
            friction: 3.0,
        }
    }
}

/// Damped pendulum `x1' = x2, x2' = -(g/l) sin x1 - (k/m) x2 + u` with
/// `U = [-2.5, 2.5]`, `tau = 0.2` and `L = 6`.
pub fn pendulum_system() -> SampledSystem {
    pendulum_with(PendulumParams::default())
}

pub fn pendulum_with(p: PendulumParams) -> SampledSystem {
    let (gl, km) = (p.gravity / p.length, p.friction / p.mass);
    let field: VectorField = Arc::new(move |x: &[f64], u: &[f64], dx: &mut [f64]| {
        dx[0] = x[1];
        dx[1] = -gl * x[0].sin() - km * x[1] + u[0];
    });
    SampledSystem::new(
        "pendulum",
        2,
        1,
        field,
        6.0,
        0.2,
        HyperBox::new(vec![-2.5], vec![2.5]).expect("static box"),
        DEFAULT_INTEGRATOR_STEPS,
    )
    .expect("static parameters are valid")
}

/// Scalar decay `x' = -x + u`, handy for closed-form checks.
pub fn decay_system() -> SampledSystem {
    let field: VectorField = Arc::new(|x: &[f64], u: &[f64], dx: &mut [f64]| {
        dx[0] = -x[0] + u[0];
    });
    SampledSystem::new(
        "decay",
        1,
        1,
        field,
        1.0,
        0.2,
        HyperBox::new(vec![-1.0], vec![1.0]).expect("static box"),
        DEFAULT_INTEGRATOR_STEPS,
    )
    .expect("static parameters are valid")
}

/// Inflation radius `theta * e^(L tau) * qbar` with `theta = eta / (1 - eta)`
/// and `qbar_i = |q_i|`, or `1` where `q_i = 0`.
pub fn growth_radius(q_center: &[f64], eta: f64, lipschitz: f64, tau: f64) -> Vec<f64> {
    let theta = eta / (1.0 - eta);
    let grow = theta * (lipschitz * tau).exp();
    q_center
        .iter()
        .map(|&q| grow * if q == 0.0 { 1.0 } else { q.abs() })
        .collect()
}

type Factory = Box<dyn Fn() -> SampledSystem + Send + Sync>;

/// Named systems selectable from configuration.
pub struct SystemRegistry {
    factories: BTreeMap<String, Factory>,
}

impl Default for SystemRegistry {
    fn default() -> Self {
        let mut reg = SystemRegistry {
            factories: BTreeMap::new(),
        };
        reg.register("pendulum", pendulum_system);
        reg.register("decay", decay_system);
        reg
    }
}

impl SystemRegistry {
    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn() -> SampledSystem + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn create(&self, name: &str) -> Result<SampledSystem> {
        self.factories.get(name).map(|f| f()).ok_or_else(|| {
            Error::Config(format!(
                "unknown system `{name}` (known: {})",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.factories.keys().cloned().collect()
    }
}

/// One sampling instant of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    /// Input held on `[t, t + tau)`; `None` for the final state.
    pub u: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().map(|s| s.x.as_slice())
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// CSV with header `t,x1,...,xn,u1,...,um`; the final row has empty inputs.
    pub fn to_csv(&self, dim_x: usize, dim_u: usize) -> String {
        let mut out = String::from("t");
        for i in 1..=dim_x {
            out.push_str(&format!(",x{i}"));
        }
        for i in 1..=dim_u {
            out.push_str(&format!(",u{i}"));
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!("{}", s.t));
            for v in &s.x {
                out.push_str(&format!(",{v}"));
            }
            match &s.u {
                Some(u) => u.iter().for_each(|v| out.push_str(&format!(",{v}"))),
                None => (0..dim_u).for_each(|_| out.push(',')),
            }
            out.push('\n');
        }
        out
    }
}

/// Witness that the exponential growth inequality failed.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthWitness {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub u: Vec<f64>,
    pub deviation: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Default)]
pub struct GrowthAudit {
    pub samples: usize,
    pub violations: Vec<GrowthWitness>,
    /// Largest observed `deviation / bound`.
    pub worst_ratio: f64,
}

impl GrowthAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Samples pairs `x, q` from `region` and inputs from the input box and checks
/// `|x(tau,x,u) - x(tau,q,u)|_inf <= e^(L tau) |x - q|_inf (1 + rel_tol)`.
pub fn audit_growth(
    sys: &SampledSystem,
    region: &HyperBox,
    samples: usize,
    seed: u64,
    rel_tol: f64,
) -> Result<GrowthAudit> {
    if region.dim() != sys.dim_x() {
        return Err(Error::Config("audit region dimension mismatch".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grow = (sys.lipschitz() * sys.tau()).exp();
    let mut audit = GrowthAudit {
        samples,
        ..Default::default()
    };
    for _ in 0..samples {
        let x = uniform_in(&mut rng, region);
        let q = uniform_in(&mut rng, region);
        let u = uniform_in(&mut rng, sys.input_box());
        let dev = sup_dist(&sys.successor(&x, &u)?, &sys.successor(&q, &u)?);
        let bound = grow * sup_dist(&x, &q);
        if bound > 0.0 {
            audit.worst_ratio = audit.worst_ratio.max(dev / bound);
        }
        if dev > bound * (1.0 + rel_tol) {
            audit.violations.push(GrowthWitness {
                x,
                q,
                u,
                deviation: dev,
                bound,
            });
        }
    }
    Ok(audit)
}

pub(crate) fn uniform_in<R: Rng>(rng: &mut R, b: &HyperBox) -> Vec<f64> {
    b.lo()
        .iter()
        .zip(b.hi())
        .map(|(&lo, &hi)| if lo < hi { rng.gen_range(lo..=hi) } else { lo })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pendulum_field_examples() {
        let p = pendulum_system();
        assert_eq!(p.field(&[0.0, 0.0], &[0.0]), vec![0.0, 0.0]);
        let d = p.field(&[0.0, 1.0], &[0.0]);
        assert_eq!(d[0], 1.0);
        assert!((d[1] + 6.0).abs() < 1e-15);
        assert_eq!((p.dim_x(), p.dim_u(), p.tau(), p.lipschitz()), (2, 1, 0.2, 6.0));
        assert_eq!(p.input_box().lo(), &[-2.5]);
        assert_eq!(p.input_box().hi(), &[2.5]);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let p = pendulum_system();
        assert_eq!(p.successor(&[0.0, 0.0], &[0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn decay_matches_exponential() {
        let s = decay_system();
        let x = s.successor(&[1.0], &[0.0]).unwrap();
        assert!((x[0] - (-0.2f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn reference_resolution_agreement() {
        let p = pendulum_system();
        let coarse = p.successor(&[0.48, 0.0], &[0.0]).unwrap();
        let fine = p.integrate(&[0.48, 0.0], &[0.0], 0.2, 100).unwrap();
        for (a, b) in coarse.iter().zip(&fine) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn divergence_reports_substep() {
        let field: VectorField = Arc::new(|x: &[f64], _u: &[f64], dx: &mut [f64]| {
            dx[0] = x[0] * x[0];
        });
        let s = SampledSystem::new(
            "blowup",
            1,
            1,
            field,
            1.0,
            1.0,
            HyperBox::new(vec![0.0], vec![0.0]).unwrap(),
            10,
        )
        .unwrap();
        match s.successor(&[1e200], &[0.0]) {
            Err(Error::Divergence { substep }) => assert_eq!(substep, 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn growth_radius_examples() {
        let r = growth_radius(&[0.4, 0.0], 0.2, 6.0, 0.2);
        assert!((r[0] - 0.33201).abs() < 1e-5 && (r[1] - 0.83003).abs() < 1e-5);
        let r = growth_radius(&[0.4, 0.4], 0.2, 6.0, 0.2);
        assert!((r[0] - 0.33201).abs() < 1e-5 && (r[1] - 0.33201).abs() < 1e-5);
        let r = growth_radius(&[1.0, 1.0], 0.2, 6.0, 0.0);
        assert_eq!(r, vec![0.25, 0.25]);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(pendulum_system().with_tau(0.0).is_err());
        assert!(pendulum_system().with_lipschitz(-1.0).is_err());
        assert!(pendulum_system().with_integrator_steps(0).is_err());
        assert!(pendulum_system()
            .with_input_box(HyperBox::symmetric(&[1.0, 1.0]).unwrap())
            .is_err());
    }

    #[test]
    fn registry_lookup() {
        let mut reg = SystemRegistry::default();
        assert_eq!(reg.create("pendulum").unwrap().name(), "pendulum");
        assert!(reg.create("nope").is_err());
        reg.register("slow", || decay_system().with_tau(1.0).unwrap());
        assert_eq!(reg.create("slow").unwrap().tau(), 1.0);
    }

    #[test]
    fn csv_layout() {
        let t = Trajectory {
            samples: vec![
                Sample {
                    t: 0.0,
                    x: vec![1.0, 2.0],
                    u: Some(vec![0.5]),
                },
                Sample {
                    t: 0.2,
                    x: vec![1.5, 2.5],
                    u: None,
                },
            ],
        };
        assert_eq!(t.to_csv(2, 1), "t,x1,x2,u1\n0,1,2,0.5\n0.2,1.5,2.5,\n");
    }
}
