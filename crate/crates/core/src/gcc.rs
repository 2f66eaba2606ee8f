//! Gravity compensation controller with dead-banded, saturated compensation
//! of the direction-dependent disturbance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimation::ParamSet;
use crate::kinematics::{FrameSet, KinematicModel};

#[derive(Debug, Clone, PartialEq)]
pub struct GccConfig {
    /// Dead band per joint (rad).
    pub dead_band: Vec<f64>,
    /// Saturation threshold per joint (rad).
    pub saturation: Vec<f64>,
    /// Share of the direction-dependent torque applied once saturated.
    pub alpha: f64,
}

impl GccConfig {
    pub const DEFAULT_DEAD_BAND: f64 = 1e-3;
    pub const DEFAULT_SATURATION: f64 = 8e-3;
    pub const DEFAULT_ALPHA: f64 = 0.5;

    pub fn uniform(n: usize, dead_band: f64, saturation: f64, alpha: f64) -> Result<Self> {
        let c = Self {
            dead_band: vec![dead_band; n],
            saturation: vec![saturation; n],
            alpha,
        };
        c.validate(n)?;
        Ok(c)
    }

    pub fn default_for(n: usize) -> Self {
        Self {
            dead_band: vec![Self::DEFAULT_DEAD_BAND; n],
            saturation: vec![Self::DEFAULT_SATURATION; n],
            alpha: Self::DEFAULT_ALPHA,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.dead_band.len() != n || self.saturation.len() != n {
            return Err(Error::config(
                "gcc",
                format!("dead band and saturation need {n} entries"),
            ));
        }
        for (i, (&db, &s)) in self.dead_band.iter().zip(&self.saturation).enumerate() {
            if !(db >= 0.0 && db < s && s.is_finite()) {
                return Err(Error::config(
                    format!("gcc.dead_band.{}", i + 1),
                    format!("need 0 <= dead band ({db}) < saturation ({s})"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("gcc.alpha", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Ratio for one joint: 0 inside the dead band, a linear ramp up to the
    /// saturation threshold, then `sign(dq) * alpha`.
    pub fn xi_joint(&self, joint: usize, dq: f64) -> f64 {
        let db = self.dead_band[joint];
        let s = self.saturation[joint];
        let m = dq.abs();
        if m <= db {
            0.0
        } else if m < s {
            dq.signum() * (m - db) / (s - db) * self.alpha
        } else {
            dq.signum() * self.alpha
        }
    }
}

/// Diagonal entries of the ratio matrix.
pub fn xi(config: &GccConfig, dq: &[f64]) -> Vec<f64> {
    dq.iter().enumerate().map(|(i, &d)| config.xi_joint(i, d)).collect()
}

/// Configuration-dependent disturbance estimate (mean of both branches).
pub fn tau_ec_hat(params: &ParamSet, q: &[f64]) -> DVector<f64> {
    let d = &params.disturbance;
    DVector::from_iterator(d.n_joints(), (0..d.n_joints()).map(|i| d.tau_ec_joint(i, q[i])))
}

/// Direction-dependent disturbance estimate (half the branch difference).
pub fn tau_ed_hat(params: &ParamSet, q: &[f64]) -> DVector<f64> {
    let d = &params.disturbance;
    DVector::from_iterator(d.n_joints(), (0..d.n_joints()).map(|i| d.tau_ed_joint(i, q[i])))
}

/// `gY(q) g_beta + tau_ec(q) + xi(dq) tau_ed(q)`.
pub fn compensation_torque(
    model: &KinematicModel,
    params: &ParamSet,
    config: &GccConfig,
    q: &[f64],
    dq: &[f64],
) -> Result<DVector<f64>> {
    if dq.len() != model.n_joints {
        return Err(Error::Dimension(format!("{} joint differences", dq.len())));
    }
    let mut tau = params.gravity_torque(model, q)?;
    let d = &params.disturbance;
    for i in 0..model.n_joints {
        tau[i] += d.tau_ec_joint(i, q[i]) + config.xi_joint(i, dq[i]) * d.tau_ed_joint(i, q[i]);
    }
    Ok(tau)
}

/// Controller with preallocated buffers: evaluation does not allocate.
pub struct Compensator<'a> {
    model: &'a KinematicModel,
    params: &'a ParamSet,
    config: GccConfig,
    frames: FrameSet,
    full: DMatrix<f64>,
    base: DMatrix<f64>,
    previous: Option<Vec<f64>>,
    dq: Vec<f64>,
}

impl<'a> Compensator<'a> {
    pub fn new(model: &'a KinematicModel, params: &'a ParamSet, config: GccConfig) -> Result<Self> {
        params.validate(model)?;
        config.validate(model.n_joints)?;
        let n = model.n_joints;
        let mut frames = FrameSet::default();
        model.frames_into(&vec![0.0; n], &mut frames);
        Ok(Self {
            model,
            params,
            config,
            frames,
            full: DMatrix::zeros(n, params.gravity.full_param_count),
            base: DMatrix::zeros(n, params.gravity.base_count()),
            previous: None,
            dq: vec![0.0; n],
        })
    }

    pub fn config(&self) -> &GccConfig {
        &self.config
    }

    /// Torque for a caller-supplied joint difference. `q` and `dq` must have
    /// one entry per joint.
    pub fn torque_into(&mut self, q: &[f64], dq: &[f64], out: &mut [f64]) {
        self.model.frames_into(q, &mut self.frames);
        self.params
            .gravity
            .base_regressor_from_frames(self.model, &self.frames, &mut self.full, &mut self.base);
        let d = &self.params.disturbance;
        for (i, o) in out.iter_mut().enumerate() {
            let g: f64 = self
                .base
                .row(i)
                .iter()
                .zip(self.params.gravity_base.iter())
                .map(|(y, b)| y * b)
                .sum();
            *o = g + d.tau_ec_joint(i, q[i]) + self.config.xi_joint(i, dq[i]) * d.tau_ed_joint(i, q[i]);
        }
    }

    /// Torque using the difference to the previous reading held internally;
    /// the first call sees a zero difference.
    pub fn step_into(&mut self, q: &[f64], out: &mut [f64]) {
        match &mut self.previous {
            Some(prev) => {
                for ((d, &a), b) in self.dq.iter_mut().zip(q).zip(prev.iter_mut()) {
                    *d = a - *b;
                    *b = a;
                }
            }
            None => {
                self.dq.iter_mut().for_each(|d| *d = 0.0);
                self.previous = Some(q.to_vec());
            }
        }
        let dq = std::mem::take(&mut self.dq);
        self.torque_into(q, &dq, out);
        self.dq = dq;
    }

    pub fn reset(&mut self) {
        self.previous = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disturbance::{DisturbanceBasis, PolyDisturbance};
    use crate::estimation::{Method, Provenance};
    use crate::gravity::{GravityConstants, GravityRegressorSpec};

    fn params_k1(plus: Vec<f64>, minus: Vec<f64>) -> (KinematicModel, ParamSet) {
        let model = crate::gravity::tests::pendulum();
        let probes = crate::plant::random_poses(&model, 20, 1).unwrap();
        let spec = GravityRegressorSpec::reduce_to_base(&model, &probes, GravityConstants::default()).unwrap();
        let ps = ParamSet {
            gravity_base: DVector::from_vec(vec![0.7, 0.1]),
            gravity: spec,
            disturbance: PolyDisturbance::new(DisturbanceBasis::new(vec![1]), vec![plus], vec![minus]).unwrap(),
            provenance: Provenance {
                method: Method::Mlse,
                steps: vec![],
            },
        };
        (model, ps)
    }

    #[test]
    fn ec_ed_arithmetic() {
        let (_, ps) = params_k1(vec![1.0, 2.0], vec![1.0, 0.0]);
        assert_eq!(tau_ec_hat(&ps, &[3.0])[0], 4.0);
        assert_eq!(tau_ed_hat(&ps, &[3.0])[0], 3.0);
        let (_, sym) = params_k1(vec![1.0, 2.0], vec![1.0, 2.0]);
        assert_eq!(tau_ed_hat(&sym, &[3.0])[0], 0.0);
        let (_, anti) = params_k1(vec![1.0, 2.0], vec![-1.0, -2.0]);
        assert_eq!(tau_ec_hat(&anti, &[0.7])[0], 0.0);
    }

    #[test]
    fn xi_branches() {
        let c = GccConfig::uniform(1, 0.001, 0.01, 0.5).unwrap();
        assert!((c.xi_joint(0, 0.0055) - 0.25).abs() < 1e-15);
        assert_eq!(c.xi_joint(0, 0.0), 0.0);
        assert_eq!(c.xi_joint(0, -0.02), -0.5);
        assert_eq!(c.xi_joint(0, 0.001), 0.0);
        assert_eq!(c.xi_joint(0, 0.01), 0.5);
    }

    #[test]
    fn invalid_configs() {
        assert!(GccConfig::uniform(2, 0.01, 0.01, 0.5).is_err());
        assert!(GccConfig::uniform(2, -0.1, 0.01, 0.5).is_err());
        assert!(GccConfig::uniform(2, 0.0, 0.01, 1.5).is_err());
        assert!(GccConfig::uniform(2, 0.0, 0.01, 1.0).is_ok());
    }

    #[test]
    fn zero_disturbance_is_gravity_only() {
        let (model, ps) = params_k1(vec![0.0, 0.0], vec![0.0, 0.0]);
        let c = GccConfig::default_for(1);
        let t = compensation_torque(&model, &ps, &c, &[0.4], &[0.1]).unwrap();
        assert_eq!(t, ps.gravity_torque(&model, &[0.4]).unwrap());
    }

    #[test]
    fn dead_band_hides_direction_part() {
        let (model, ps) = params_k1(vec![1.0, 2.0], vec![1.0, 0.0]);
        let c = GccConfig::default_for(1);
        let a = compensation_torque(&model, &ps, &c, &[0.4], &[5e-4]).unwrap();
        let b = compensation_torque(&model, &ps, &c, &[0.4], &[-5e-4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn compensator_matches_free_function() {
        let (model, ps) = params_k1(vec![0.3, -0.2], vec![-0.1, 0.4]);
        let c = GccConfig::default_for(1);
        let mut comp = Compensator::new(&model, &ps, c.clone()).unwrap();
        let mut out = [0.0];
        for (q, dq) in [(0.2, 0.0), (0.3, 0.004), (-1.0, -0.5)] {
            comp.torque_into(&[q], &[dq], &mut out);
            let expect = compensation_torque(&model, &ps, &c, &[q], &[dq]).unwrap();
            assert!((out[0] - expect[0]).abs() < 1e-14);
        }
        comp.step_into(&[0.2], &mut out);
        let first = compensation_torque(&model, &ps, &c, &[0.2], &[0.0]).unwrap();
        assert!((out[0] - first[0]).abs() < 1e-14);
        comp.step_into(&[0.25], &mut out);
        let second = compensation_torque(&model, &ps, &c, &[0.25], &[0.05]).unwrap();
        assert!((out[0] - second[0]).abs() < 1e-14);
    }
}
