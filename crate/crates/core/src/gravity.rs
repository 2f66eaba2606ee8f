//! Static gravity model: potential energy, holding torque, the linear
//! regressor over first mass moments, and numerical reduction to base
//! (lumped) parameters.
//!
//! Sign convention: torques are the actuator torques that hold the arm
//! static, `tau_g = +dP/dq`.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::kinematics::{FrameSet, KinematicModel};
use crate::linalg;

/// Parameters per link in the full parametrization: `m*r_x, m*r_y, m*r_z, m`.
pub const PARAMS_PER_LINK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityConstants {
    pub g: f64,
}

impl Default for GravityConstants {
    fn default() -> Self {
        Self { g: 9.81 }
    }
}

impl GravityConstants {
    pub fn new(g: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::config("g", format!("must be positive, got {g}")));
        }
        Ok(Self { g })
    }
}

/// Mass and center of mass (in its own frame) of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMass {
    pub mass: f64,
    pub com: Vector3<f64>,
}

impl LinkMass {
    pub fn new(mass: f64, com: Vector3<f64>) -> Self {
        Self { mass, com }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkMassParams {
    pub links: Vec<LinkMass>,
}

impl LinkMassParams {
    pub fn zeros(n_links: usize) -> Self {
        Self {
            links: vec![LinkMass::new(0.0, Vector3::zeros()); n_links],
        }
    }

    /// Stacked `(m*r_x, m*r_y, m*r_z, m)` per link.
    pub fn to_full_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.links.len() * PARAMS_PER_LINK);
        for (l, lm) in self.links.iter().enumerate() {
            let mr = lm.com * lm.mass;
            v[4 * l] = mr.x;
            v[4 * l + 1] = mr.y;
            v[4 * l + 2] = mr.z;
            v[4 * l + 3] = lm.mass;
        }
        v
    }

    /// Inverse of [`to_full_vector`](Self::to_full_vector). Links with zero
    /// mass decode to a zero COM, so the first moments must vanish with them.
    pub fn from_full_vector(beta: &DVector<f64>) -> Result<Self> {
        if !beta.len().is_multiple_of(PARAMS_PER_LINK) {
            return Err(Error::Dimension(format!(
                "full parameter vector length {} is not a multiple of 4",
                beta.len()
            )));
        }
        let links = (0..beta.len() / PARAMS_PER_LINK)
            .map(|l| {
                let m = beta[4 * l + 3];
                let mr = Vector3::new(beta[4 * l], beta[4 * l + 1], beta[4 * l + 2]);
                let com = if m != 0.0 { mr / m } else { Vector3::zeros() };
                LinkMass::new(m, com)
            })
            .collect();
        Ok(Self { links })
    }

    fn check(&self, model: &KinematicModel) -> Result<()> {
        if self.links.len() != model.link_count() {
            return Err(Error::Dimension(format!(
                "{} link masses for {} links",
                self.links.len(),
                model.link_count()
            )));
        }
        Ok(())
    }
}

/// Total potential energy `sum m_i * g * h_i`, heights measured against the
/// model's gravity direction.
pub fn potential_energy(
    model: &KinematicModel,
    masses: &LinkMassParams,
    q: &[f64],
    consts: GravityConstants,
) -> Result<f64> {
    masses.check(model)?;
    let fs = model.frames(q)?;
    let up = -model.gravity_direction;
    Ok(masses
        .links
        .iter()
        .enumerate()
        .map(|(l, lm)| lm.mass * consts.g * up.dot(&fs.link_point(model, l, &lm.com)))
        .sum())
}

/// Holding torque `+dP/dq`, by chain rule over the transform chain.
pub fn gravity_torque(
    model: &KinematicModel,
    masses: &LinkMassParams,
    q: &[f64],
    consts: GravityConstants,
) -> Result<DVector<f64>> {
    masses.check(model)?;
    let fs = model.frames(q)?;
    let mut tau = DVector::zeros(model.n_joints);
    gravity_torque_from_frames(model, masses, &fs, consts, tau.as_mut_slice());
    Ok(tau)
}

pub(crate) fn gravity_torque_from_frames(
    model: &KinematicModel,
    masses: &LinkMassParams,
    fs: &FrameSet,
    consts: GravityConstants,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|t| *t = 0.0);
    let up = -model.gravity_direction;
    for (l, lm) in masses.links.iter().enumerate() {
        if lm.mass == 0.0 {
            continue;
        }
        let p = fs.link_point(model, l, &lm.com);
        model.for_each_dependency(fs, l, |j, c, axis, origin| {
            out[j] += consts.g * lm.mass * c * (p - origin).dot(&up.cross(&axis));
        });
    }
}

/// Full gravity regressor `n x 4L` with `Y(q) * beta_full = gravity_torque`.
pub fn gravity_regressor_full(model: &KinematicModel, q: &[f64], consts: GravityConstants) -> Result<DMatrix<f64>> {
    let fs = model.frames(q)?;
    let mut y = DMatrix::zeros(model.n_joints, model.link_count() * PARAMS_PER_LINK);
    regressor_from_frames(model, &fs, consts, &mut y);
    Ok(y)
}

pub(crate) fn regressor_from_frames(
    model: &KinematicModel,
    fs: &FrameSet,
    consts: GravityConstants,
    y: &mut DMatrix<f64>,
) {
    y.fill(0.0);
    let up = -model.gravity_direction;
    for l in 0..model.link_count() {
        let rot = fs.link_rotation(model, l);
        let o = fs.link_origin(model, l);
        model.for_each_dependency(fs, l, |j, c, axis, origin| {
            let w = up.cross(&axis) * (c * consts.g);
            for a in 0..3 {
                y[(j, 4 * l + a)] += rot.column(a).dot(&w);
            }
            y[(j, 4 * l + 3)] += (o - origin).dot(&w);
        });
    }
}

/// Numerical base-parameter reduction of the full gravity regressor.
///
/// Base parameters are `beta_base = beta_full[independent] +
/// combination * beta_full[dependent]`, and the base regressor is the
/// `independent` columns of the full regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityRegressorSpec {
    pub full_param_count: usize,
    pub independent: Vec<usize>,
    pub dependent: Vec<usize>,
    /// `b x (full - b)`.
    pub combination: DMatrix<f64>,
    pub constants: GravityConstants,
}

/// Configurations probed when verifying that a probe set is not degenerate.
const REFERENCE_PROBE_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

impl GravityRegressorSpec {
    pub fn base_count(&self) -> usize {
        self.independent.len()
    }

    /// Builds the reduction from the stacked regressor over `probes`.
    pub fn reduce_to_base(model: &KinematicModel, probes: &[Vec<f64>], consts: GravityConstants) -> Result<Self> {
        let full = model.link_count() * PARAMS_PER_LINK;
        if probes.len() < 2 * full {
            return Err(Error::Dimension(format!(
                "{} probe configurations, at least {} required",
                probes.len(),
                2 * full
            )));
        }
        let w = stacked_full_regressor(model, probes, consts)?;
        let s = linalg::singular_values(&w);
        let smax = s.first().copied().unwrap_or(0.0);
        let tol = linalg::rank_tolerance(smax, w.nrows(), w.ncols());
        let rank = s.iter().filter(|&&v| v > tol).count();

        let reference_probes = crate::plant::random_poses(model, probes.len() * 10, REFERENCE_PROBE_SEED)?;
        let reference_rank = linalg::numerical_rank(&stacked_full_regressor(model, &reference_probes, consts)?);
        if rank < reference_rank {
            return Err(Error::IllConditionedProbes {
                found: rank,
                reference: reference_rank,
            });
        }

        // Unpivoted QR: a column is independent when it adds a new direction
        // to the span of the columns before it.
        let r = w.clone().qr().r();
        let diag_len = r.nrows().min(r.ncols());
        let independent: Vec<usize> = (0..full).filter(|&k| k < diag_len && r[(k, k)].abs() > tol).collect();
        if independent.len() != rank {
            return Err(Error::IllConditionedProbes {
                found: independent.len(),
                reference: rank,
            });
        }
        let dependent: Vec<usize> = (0..full).filter(|k| !independent.contains(k)).collect();

        let b = independent.len();
        let order: Vec<usize> = independent.iter().chain(&dependent).copied().collect();
        let permuted = w.select_columns(&order);
        let r = permuted.qr().r();
        let r1 = r.view((0, 0), (b, b)).into_owned();
        let r2 = r.view((0, b), (b, full - b)).into_owned();
        let combination = if dependent.is_empty() {
            DMatrix::zeros(b, 0)
        } else {
            r1.solve_upper_triangular(&r2)
                .ok_or_else(|| Error::ModelInconsistency("singular leading block in base reduction".into()))?
        };

        let spec = Self {
            full_param_count: full,
            independent,
            dependent,
            combination,
            constants: consts,
        };

        let w_ind = w.select_columns(&spec.independent);
        let w_dep = w.select_columns(&spec.dependent);
        let mismatch = (w_ind * &spec.combination - w_dep).amax();
        if mismatch > 1e-8 * w.amax().max(1.0) {
            return Err(Error::ModelInconsistency(format!(
                "dependent columns not reproduced by the base (max error {mismatch:e})"
            )));
        }
        Ok(spec)
    }

    /// Maps a full parameter vector to base parameters.
    pub fn reduce(&self, beta_full: &DVector<f64>) -> Result<DVector<f64>> {
        if beta_full.len() != self.full_param_count {
            return Err(Error::Dimension(format!(
                "full parameter vector has {} entries, expected {}",
                beta_full.len(),
                self.full_param_count
            )));
        }
        let ind = DVector::from_iterator(self.base_count(), self.independent.iter().map(|&k| beta_full[k]));
        let dep = DVector::from_iterator(self.dependent.len(), self.dependent.iter().map(|&k| beta_full[k]));
        Ok(ind + &self.combination * dep)
    }

    /// Base regressor `n x b` at `q`.
    pub fn base_regressor(&self, model: &KinematicModel, q: &[f64]) -> Result<DMatrix<f64>> {
        let full = gravity_regressor_full(model, q, self.constants)?;
        Ok(full.select_columns(&self.independent))
    }

    /// Writes the base regressor into `out` (`n x b`) reusing `full_buf`.
    pub(crate) fn base_regressor_from_frames(
        &self,
        model: &KinematicModel,
        fs: &FrameSet,
        full_buf: &mut DMatrix<f64>,
        out: &mut DMatrix<f64>,
    ) {
        regressor_from_frames(model, fs, self.constants, full_buf);
        for (bcol, &k) in self.independent.iter().enumerate() {
            out.set_column(bcol, &full_buf.column(k));
        }
    }

    /// Human-readable name of a base column: the full parameter it retains.
    pub fn label(&self, model: &KinematicModel, base_col: usize) -> String {
        let k = self.independent[base_col];
        const NAMES: [&str; 4] = ["m*rx", "m*ry", "m*rz", "m"];
        format!("g{}({}:{})", base_col + 1, model.link_name(k / 4), NAMES[k % 4])
    }
}

fn stacked_full_regressor(
    model: &KinematicModel,
    probes: &[Vec<f64>],
    consts: GravityConstants,
) -> Result<DMatrix<f64>> {
    let n = model.n_joints;
    let cols = model.link_count() * PARAMS_PER_LINK;
    let mut w = DMatrix::zeros(n * probes.len(), cols);
    let mut fs = FrameSet::default();
    let mut y = DMatrix::zeros(n, cols);
    for (i, q) in probes.iter().enumerate() {
        model.check_q(q, false)?;
        model.frames_into(q, &mut fs);
        regressor_from_frames(model, &fs, consts, &mut y);
        w.view_mut((i * n, 0), (n, cols)).copy_from(&y);
    }
    Ok(w)
}
