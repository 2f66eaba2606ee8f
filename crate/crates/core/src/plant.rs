//! Ground-truth manipulator stand-in.
//!
//! Produces static torque measurements (gravity plus direction-dependent
//! disturbance plus Gaussian noise) and integrates simple per-joint drift
//! dynamics under a compensation controller.

use nalgebra::{DVector, Matrix3, Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::disturbance::DirectionTag;
use crate::error::{Error, Result};
use crate::estimation::{Dataset, DatasetMeta, Sample};
use crate::excitation::CollectionPlan;
use crate::gravity::{self, GravityConstants, LinkMass, LinkMassParams};
use crate::kinematics::{FrameSet, KinematicModel};

/// A scalar disturbance curve over one joint angle.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    /// Coefficients of `1, q, q^2, ...` in raw radians.
    Polynomial(Vec<f64>),
    /// Linear interpolation through `(knots[i], values[i])`, held constant
    /// outside the knot range.
    PiecewiseLinear { knots: Vec<f64>, values: Vec<f64> },
    /// `amplitude * sin(frequency * q + phase) + poly(q)`.
    SinusoidPoly {
        amplitude: f64,
        frequency: f64,
        phase: f64,
        poly: Vec<f64>,
    },
}

fn horner(c: &[f64], q: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * q + v)
}

impl Curve {
    pub fn eval(&self, q: f64) -> f64 {
        match self {
            Curve::Polynomial(c) => horner(c, q),
            Curve::PiecewiseLinear { knots, values } => {
                if q <= knots[0] {
                    return values[0];
                }
                let last = knots.len() - 1;
                if q >= knots[last] {
                    return values[last];
                }
                let i = knots.partition_point(|&k| k <= q) - 1;
                let t = (q - knots[i]) / (knots[i + 1] - knots[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
            Curve::SinusoidPoly {
                amplitude,
                frequency,
                phase,
                poly,
            } => amplitude * (frequency * q + phase).sin() + horner(poly, q),
        }
    }

    fn validate(&self, key: &str) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Curve::Polynomial(c) if c.is_empty() || !finite(c) => {
                Err(Error::config(key, "polynomial needs finite coefficients"))
            }
            Curve::PiecewiseLinear { knots, values } => {
                if knots.is_empty() || knots.len() != values.len() {
                    return Err(Error::config(
                        key,
                        "knots and values must be non-empty and equal length",
                    ));
                }
                if !finite(knots) || !finite(values) || knots.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::config(key, "knots must be finite and strictly increasing"));
                }
                Ok(())
            }
            Curve::SinusoidPoly {
                amplitude,
                frequency,
                phase,
                poly,
            } if !finite(&[*amplitude, *frequency, *phase]) || !finite(poly) => {
                Err(Error::config(key, "non-finite sinusoid parameter"))
            }
            _ => Ok(()),
        }
    }
}

/// Positive- and negative-direction disturbance curves of one joint.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePair {
    pub plus: Curve,
    pub minus: Curve,
}

impl CurvePair {
    pub fn zero() -> Self {
        Self {
            plus: Curve::Polynomial(vec![0.0]),
            minus: Curve::Polynomial(vec![0.0]),
        }
    }

    pub fn eval(&self, q: f64, dir: DirectionTag) -> f64 {
        match dir {
            DirectionTag::Positive => self.plus.eval(q),
            DirectionTag::Negative => self.minus.eval(q),
        }
    }

    pub fn configuration_part(&self, q: f64) -> f64 {
        0.5 * (self.plus.eval(q) + self.minus.eval(q))
    }

    pub fn direction_part(&self, q: f64) -> f64 {
        0.5 * (self.plus.eval(q) - self.minus.eval(q))
    }

    /// Polynomial pair from configuration (`ec`) and direction (`ed`) shapes
    /// given in the normalized variable `s = (q - mid) / half` over `range`.
    pub fn from_normalized(ec: &[f64], ed: &[f64], lo: f64, hi: f64) -> Self {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let ec = normalized_to_raw(ec, mid, half);
        let ed = normalized_to_raw(ed, mid, half);
        let len = ec.len().max(ed.len());
        let at = |v: &Vec<f64>, i: usize| v.get(i).copied().unwrap_or(0.0);
        Self {
            plus: Curve::Polynomial((0..len).map(|i| at(&ec, i) + at(&ed, i)).collect()),
            minus: Curve::Polynomial((0..len).map(|i| at(&ec, i) - at(&ed, i)).collect()),
        }
    }
}

/// Expands `sum c_j ((q - mid) / half)^j` into raw monomial coefficients.
pub fn normalized_to_raw(c: &[f64], mid: f64, half: f64) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    for (j, &cj) in c.iter().enumerate() {
        let scale = cj / half.powi(j as i32);
        let mut binom = 1.0;
        for m in 0..=j {
            // term binom(j, m) q^m (-mid)^(j - m)
            out[m] += scale * binom * (-mid).powi((j - m) as i32);
            binom = binom * (j - m) as f64 / (m + 1) as f64;
        }
    }
    out
}

/// Per-joint inertia and viscous damping used only by the drift simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDynamics {
    pub inertia: Vec<f64>,
    pub damping: Vec<f64>,
}

impl DriftDynamics {
    pub fn uniform(n: usize, inertia: f64, damping: f64) -> Self {
        Self {
            inertia: vec![inertia; n],
            damping: vec![damping; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantSpec {
    pub model: KinematicModel,
    pub masses: LinkMassParams,
    pub disturbance: Vec<CurvePair>,
    /// Torque noise standard deviation (N*m).
    pub noise_sigma: f64,
    pub drift: DriftDynamics,
    pub seed: u64,
    pub gravity: GravityConstants,
}

/// Normalized configuration-dependent shapes of the default plant.
const EC_SHAPES: [&[f64]; 6] = [
    &[0.02, 0.06, -0.03, 0.04, 0.02],
    &[0.05, -0.08],
    &[-0.04, 0.10, 0.05, -0.06, -0.03],
    &[0.03, -0.12, 0.04, 0.09, -0.05],
    &[0.08, 0.15, -0.10, -0.05, 0.07],
    &[-0.01, 0.03, 0.02, -0.02, 0.015],
];

/// Normalized direction-dependent shapes; all stay positive on [-1, 1].
const ED_SHAPES: [&[f64]; 6] = [
    &[0.025, 0.005, 0.01],
    &[0.03],
    &[0.03, -0.01, 0.015],
    &[0.04, 0.01, 0.02],
    &[0.02, 0.0, 0.01],
    &[0.01, 0.002, 0.005],
];

/// Extra `s^5, s^6` content of the out-of-class plant (joint 2 excluded).
const ORDER6_EXTRA: [f64; 2] = [0.04, 0.30];

impl PlantSpec {
    pub const DEFAULT_INERTIA: f64 = 0.05;
    pub const DEFAULT_DAMPING: f64 = 0.1;

    /// True link masses of the default MTM-like plant.
    pub fn mtm_masses() -> LinkMassParams {
        let l = |m: f64, x: f64, y: f64, z: f64| LinkMass::new(m, Vector3::new(x, y, z));
        LinkMassParams {
            links: vec![
                l(0.8, 0.0, -0.05, 0.02),
                l(0.6, -0.14, 0.0, 0.01),
                l(0.5, -0.18, 0.0, 0.02),
                l(0.35, 0.0, 0.04, -0.06),
                l(0.2, 0.02, 0.0, 0.04),
                l(0.15, 0.03, 0.02, 0.04),
                l(0.3, -0.05, 0.0, 0.0),
                l(0.1, -0.14, 0.0, 0.0),
            ],
        }
    }

    /// Default plant whose disturbances lie inside the default model class
    /// (order 4, order 1 on joint 2).
    pub fn mtm_in_class(seed: u64, noise_sigma: f64) -> Self {
        Self::mtm_with_curves(seed, noise_sigma, false)
    }

    /// Default plant with order-6 disturbances, outside the default model.
    pub fn mtm_order6(seed: u64, noise_sigma: f64) -> Self {
        Self::mtm_with_curves(seed, noise_sigma, true)
    }

    fn mtm_with_curves(seed: u64, noise_sigma: f64, order6: bool) -> Self {
        let model = KinematicModel::mtm_default();
        let disturbance = (0..6)
            .map(|j| {
                let mut ec = EC_SHAPES[j].to_vec();
                if order6 && j != 1 {
                    ec.resize(5, 0.0);
                    ec.extend_from_slice(&ORDER6_EXTRA);
                }
                let l = model.limits[j];
                CurvePair::from_normalized(&ec, ED_SHAPES[j], l.lo, l.hi)
            })
            .collect();
        Self {
            masses: Self::mtm_masses(),
            disturbance,
            noise_sigma,
            drift: DriftDynamics::uniform(6, Self::DEFAULT_INERTIA, Self::DEFAULT_DAMPING),
            seed,
            gravity: GravityConstants::default(),
            model,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.model.n_joints;
        if self.masses.links.len() != self.model.link_count() {
            return Err(Error::config(
                "masses",
                format!(
                    "{} entries for {} links",
                    self.masses.links.len(),
                    self.model.link_count()
                ),
            ));
        }
        if let Some((l, _)) = self.masses.links.iter().enumerate().find(|(_, m)| !(m.mass >= 0.0)) {
            return Err(Error::config(format!("masses.{}", l + 1), "mass must be non-negative"));
        }
        if self.disturbance.len() != n {
            return Err(Error::config(
                "disturbance",
                format!("{} curve pairs for {n} joints", self.disturbance.len()),
            ));
        }
        for (j, pair) in self.disturbance.iter().enumerate() {
            pair.plus.validate(&format!("disturbance.{}.plus", j + 1))?;
            pair.minus.validate(&format!("disturbance.{}.minus", j + 1))?;
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config("noise_sigma", "must be finite and >= 0"));
        }
        if self.drift.inertia.len() != n || self.drift.damping.len() != n {
            return Err(Error::config("drift", "inertia and damping need one entry per joint"));
        }
        if self.drift.inertia.iter().any(|&j| !(j > 0.0)) {
            return Err(Error::config("drift.inertia", "must be positive"));
        }
        if self.drift.damping.iter().any(|&c| !(c >= 0.0)) {
            return Err(Error::config("drift.damping", "must be non-negative"));
        }
        GravityConstants::new(self.gravity.g)?;
        Ok(())
    }

    /// Noiseless static torque.
    pub fn true_torque(&self, q: &[f64], dirs: &[DirectionTag]) -> Result<DVector<f64>> {
        let mut tau = gravity::gravity_torque(&self.model, &self.masses, q, self.gravity)?;
        for (j, t) in tau.iter_mut().enumerate() {
            *t += self.disturbance[j].eval(q[j], dirs[j]);
        }
        Ok(tau)
    }
}

/// A plant instance with its own noise stream.
pub struct Plant<'a> {
    spec: &'a PlantSpec,
    rng: ChaCha8Rng,
    noise: Normal<f64>,
}

impl<'a> Plant<'a> {
    pub fn new(spec: &'a PlantSpec) -> Result<Self> {
        Self::with_stream(spec, 0)
    }

    /// Independent noise stream `stream` derived from the spec seed.
    pub fn with_stream(spec: &'a PlantSpec, stream: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(stream);
        let noise =
            Normal::new(0.0, spec.noise_sigma.max(0.0)).map_err(|e| Error::config("noise_sigma", e.to_string()))?;
        Ok(Self { spec, rng, noise })
    }

    pub fn spec(&self) -> &'a PlantSpec {
        self.spec
    }

    /// Gravity plus disturbance plus noise at a static configuration.
    pub fn measure_static(&mut self, q: &[f64], dirs: &[DirectionTag]) -> Result<DVector<f64>> {
        self.spec.model.check_q(q, true)?;
        if dirs.len() != q.len() {
            return Err(Error::Dimension(format!(
                "{} direction tags for {} joints",
                dirs.len(),
                q.len()
            )));
        }
        let mut tau = self.spec.true_torque(q, dirs)?;
        if self.spec.noise_sigma > 0.0 {
            for t in tau.iter_mut() {
                *t += self.noise.sample(&mut self.rng);
            }
        }
        Ok(tau)
    }

    /// Executes a collection plan, one (hold-averaged) sample per visit.
    pub fn collect(&mut self, plan: &CollectionPlan) -> Result<Dataset> {
        let reps = plan.hold.samples_per_hold.max(1);
        let mut samples = Vec::with_capacity(plan.visits.len());
        for v in &plan.visits {
            let mut acc = DVector::zeros(v.q.len());
            for _ in 0..reps {
                acc += self.measure_static(&v.q, &v.dirs)?;
            }
            samples.push(Sample {
                q: v.q.clone(),
                dir: v.dirs.clone(),
                tau: (acc / reps as f64).iter().copied().collect(),
            });
        }
        Ok(Dataset {
            samples,
            meta: DatasetMeta {
                source: "plant-sim".into(),
                estimated_joint: Some(plan.estimated_joint),
                sweep: plan.description.clone(),
                plant_seed: Some(self.spec.seed),
                model_hash: crate::files::model_hash(&self.spec.model),
                orders_hint: None,
            },
        })
    }
}

/// Uniform per-joint samples within the joint limits.
pub fn random_poses(model: &KinematicModel, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            model
                .limits
                .iter()
                .map(|l| l.lo + (l.hi - l.lo) * rng.random::<f64>())
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftResult {
    /// Distance between end-effector positions at start and end (m).
    pub translational: f64,
    /// Rotation angle between start and end end-effector frames (deg).
    pub rotational_deg: f64,
    /// Joint angles after every step, starting with `q0`.
    pub trace: Vec<Vec<f64>>,
}

/// Angle of the relative rotation `a^T b`, robust for small angles.
pub fn rotation_angle(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let r = a.transpose() * b;
    let cos = 0.5 * (r.trace() - 1.0);
    let sin = 0.5 * Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]).norm();
    sin.atan2(cos)
}

/// Simulated release of the arm under `controller(q, dq, tau_out)`, where
/// `dq` is the joint difference over the last control step.
///
/// Each joint obeys `J q'' = tau_c - tau_g - tau_ec - tau_ed * sign(q') - c q'`.
/// Controller callback `(q, dq since last step, torque out)`.
pub type Controller<'c> = dyn FnMut(&[f64], &[f64], &mut [f64]) + 'c;

/// A joint at rest stays at rest while the remaining torque is inside the
/// direction-dependent band `|tau_ed|`; a moving joint that would reverse
/// within a step is stopped, and joints stop dead at their limits.
/// Integration is semi-implicit Euler.
pub fn drift_simulate(
    spec: &PlantSpec,
    controller: &mut Controller<'_>,
    q0: &[f64],
    duration: f64,
    dt: f64,
) -> Result<DriftResult> {
    if !(duration > 0.0) || !(dt > 0.0) || dt > duration {
        return Err(Error::config("duration/dt", "need 0 < dt <= duration"));
    }
    spec.validate()?;
    let model = &spec.model;
    model.check_q(q0, true)?;
    let n = model.n_joints;
    let steps = (duration / dt).round() as usize;

    let mut q = q0.to_vec();
    let mut v = vec![0.0; n];
    let mut dq = vec![0.0; n];
    let mut tau_c = vec![0.0; n];
    let mut tau_g = vec![0.0; n];
    let mut fs = FrameSet::default();
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(q.clone());

    for step in 0..steps {
        controller(&q, &dq, &mut tau_c);
        model.frames_into(&q, &mut fs);
        gravity::gravity_torque_from_frames(model, &spec.masses, &fs, spec.gravity, &mut tau_g);
        for i in 0..n {
            let pair = &spec.disturbance[i];
            let free = tau_c[i] - tau_g[i] - pair.configuration_part(q[i]) - spec.drift.damping[i] * v[i];
            let band = pair.direction_part(q[i]);
            let inertia = spec.drift.inertia[i];
            let v_next = if v[i] == 0.0 {
                if free.abs() <= band.max(0.0) {
                    0.0
                } else {
                    let s = free.signum();
                    (free - band * s) / inertia * dt
                }
            } else {
                let s = v[i].signum();
                let next = v[i] + (free - band * s) / inertia * dt;
                if next * v[i] < 0.0 {
                    0.0
                } else {
                    next
                }
            };
            let lim = model.limits[i];
            let mut q_next = q[i] + v_next * dt;
            let mut v_next = v_next;
            if q_next < lim.lo || q_next > lim.hi {
                q_next = q_next.clamp(lim.lo, lim.hi);
                v_next = 0.0;
            }
            v[i] = v_next;
            dq[i] = q_next - q[i];
            q[i] = q_next;
        }
        if q.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                step,
                detail: format!("state q={q:?} v={v:?}"),
            });
        }
        trace.push(q.clone());
    }

    let start = model.end_effector(q0)?;
    let end = model.end_effector(&q)?;
    let (translational, rotational_deg) = pose_drift(&start, &end);
    Ok(DriftResult {
        translational,
        rotational_deg,
        trace,
    })
}

fn pose_drift(a: &Matrix4<f64>, b: &Matrix4<f64>) -> (f64, f64) {
    let pa = a.fixed_view::<3, 1>(0, 3);
    let pb = b.fixed_view::<3, 1>(0, 3);
    let ra = a.fixed_view::<3, 3>(0, 0).into_owned();
    let rb = b.fixed_view::<3, 3>(0, 0).into_owned();
    ((pb - pa).norm(), rotation_angle(&ra, &rb).to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disturbance::DirectionTag::{Negative, Positive};

    #[test]
    fn normalized_expansion_matches_direct_evaluation() {
        let c = [0.1, -0.3, 0.2, 0.05, -0.07, 0.01, 0.3];
        let (mid, half) = (0.4, 1.7);
        let raw = normalized_to_raw(&c, mid, half);
        for q in [-1.0, 0.0, 0.4, 1.3, 2.1] {
            let s: f64 = (q - mid) / half;
            let direct: f64 = c.iter().enumerate().map(|(j, cj)| cj * s.powi(j as i32)).sum();
            assert!((horner(&raw, q) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn piecewise_linear_interpolates_and_clamps() {
        let c = Curve::PiecewiseLinear {
            knots: vec![0.0, 1.0, 3.0],
            values: vec![0.0, 2.0, 0.0],
        };
        assert_eq!(c.eval(-1.0), 0.0);
        assert_eq!(c.eval(0.5), 1.0);
        assert_eq!(c.eval(2.0), 1.0);
        assert_eq!(c.eval(5.0), 0.0);
    }

    #[test]
    fn noiseless_zero_disturbance_is_gravity() {
        let mut spec = PlantSpec::mtm_in_class(1, 0.0);
        spec.disturbance = vec![CurvePair::zero(); 6];
        let mut plant = Plant::new(&spec).unwrap();
        let q = [0.1, 0.2, -0.1, 0.5, 0.3, 0.1];
        let tau = plant.measure_static(&q, &[Positive; 6]).unwrap();
        let g = gravity::gravity_torque(&spec.model, &spec.masses, &q, spec.gravity).unwrap();
        assert_eq!(tau, g);
    }

    #[test]
    fn out_of_limit_measurement_fails() {
        let spec = PlantSpec::mtm_in_class(1, 0.0);
        let mut plant = Plant::new(&spec).unwrap();
        assert!(matches!(
            plant.measure_static(&[3.0, 0.0, 0.0, 0.0, 0.0, 0.0], &[Negative; 6]),
            Err(Error::OutOfLimits { joint: 1, .. })
        ));
    }

    #[test]
    fn default_direction_part_is_friction_like() {
        let spec = PlantSpec::mtm_in_class(1, 0.0);
        for (j, pair) in spec.disturbance.iter().enumerate() {
            let l = spec.model.limits[j];
            for i in 0..=50 {
                let q = l.lo + (l.hi - l.lo) * i as f64 / 50.0;
                assert!(pair.direction_part(q) > 0.0);
            }
        }
    }

    #[test]
    fn random_poses_deterministic_and_in_limits() {
        let m = KinematicModel::mtm_default();
        let a = random_poses(&m, 400, 3).unwrap();
        assert_eq!(a.len(), 400);
        assert!(a.iter().all(|q| m.check_q(q, true).is_ok()));
        assert_eq!(a, random_poses(&m, 400, 3).unwrap());
        assert_ne!(a, random_poses(&m, 400, 4).unwrap());
    }

    #[test]
    fn rotation_angle_small_and_large() {
        let a = Matrix3::identity();
        let r = nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), 1e-9).into_inner();
        assert!((rotation_angle(&a, &r) - 1e-9).abs() < 1e-18);
        let r = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), 2.5).into_inner();
        assert!((rotation_angle(&a, &r) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn bad_drift_arguments() {
        let spec = PlantSpec::mtm_in_class(1, 0.0);
        let q0 = vec![0.0; 6];
        let mut zero = |_: &[f64], _: &[f64], out: &mut [f64]| out.fill(0.0);
        assert!(drift_simulate(&spec, &mut zero, &q0, 1.0, 0.0).is_err());
        assert!(drift_simulate(&spec, &mut zero, &q0, 0.001, 0.01).is_err());
    }

    #[test]
    fn uncompensated_arm_falls_and_stays_in_limits() {
        let spec = PlantSpec::mtm_in_class(1, 0.0);
        let q0: Vec<f64> = spec.model.limits.iter().map(|l| l.mid()).collect();
        let mut zero = |_: &[f64], _: &[f64], out: &mut [f64]| out.fill(0.0);
        let r = drift_simulate(&spec, &mut zero, &q0, 1.0, 1e-3).unwrap();
        assert!(r.translational > 1e-3, "{}", r.translational);
        assert_eq!(r.trace.len(), 1001);
        assert!(r.trace.iter().all(|q| spec.model.check_q(q, true).is_ok()));
    }

    #[test]
    fn exact_gravity_holds_the_arm() {
        let spec = PlantSpec::mtm_in_class(1, 0.0);
        let q0 = random_poses(&spec.model, 1, 8).unwrap().remove(0);
        let mut ctrl = |q: &[f64], _: &[f64], out: &mut [f64]| {
            let d = [DirectionTag::Positive; 6];
            let t = spec.true_torque(q, &d).unwrap();
            for (i, o) in out.iter_mut().enumerate() {
                *o = t[i] - spec.disturbance[i].direction_part(q[i]);
            }
        };
        let r = drift_simulate(&spec, &mut ctrl, &q0, 0.5, 1e-3).unwrap();
        assert_eq!(r.translational, 0.0);
    }
}
