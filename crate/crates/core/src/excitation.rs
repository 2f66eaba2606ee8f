//! Data-collection plans: the two-joint grid (estimated joint plus one
//! auxiliary parent joint), the one-joint baseline, and directional sweeps.

use crate::disturbance::DirectionTag;
use crate::error::{Error, Result};
use crate::kinematics::{JointLimit, KinematicModel};

/// Per-joint sweep ranges and auxiliary-joint assignment (zero-based joints).
#[derive(Debug, Clone, PartialEq)]
pub struct CollectionRanges {
    pub estimated: Vec<JointLimit>,
    pub auxiliary: Vec<Option<(usize, JointLimit)>>,
}

impl CollectionRanges {
    /// MTM collection ranges, converted to radians.
    pub fn mtm_table() -> Self {
        let r = |lo: f64, hi: f64| JointLimit::new(lo.to_radians(), hi.to_radians());
        Self {
            estimated: vec![
                r(-7.0, 40.0),
                r(-14.0, 40.0),
                r(-34.0, 34.0),
                r(-190.0, 80.0),
                r(-85.0, 175.0),
                r(-40.0, 40.0),
            ],
            auxiliary: vec![
                None,
                None,
                Some((1, r(-14.0, 40.0))),
                Some((2, r(-10.0, 20.0))),
                Some((2, r(-10.0, 20.0))),
                Some((4, r(-90.0, 90.0))),
            ],
        }
    }

    pub fn n_joints(&self) -> usize {
        self.estimated.len()
    }

    fn check_joint(&self, joint: usize) -> Result<()> {
        if joint >= self.n_joints() {
            return Err(Error::IndexOutOfRange {
                index: joint,
                valid: format!("0..{}", self.n_joints()),
            });
        }
        if joint < 2 && self.auxiliary[joint].is_some() {
            return Err(Error::config(
                format!("auxiliary.{}", joint + 1),
                "joints 1 and 2 take no auxiliary joint",
            ));
        }
        if let Some((aux, _)) = self.auxiliary[joint] {
            if aux >= joint {
                return Err(Error::config(
                    format!("auxiliary.{}", joint + 1),
                    "the auxiliary joint must be a parent joint",
                ));
            }
        }
        Ok(())
    }
}

/// Where the auxiliary joint is pinned in a one-joint plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxSetting {
    Lower,
    Mid,
    Upper,
}

impl AuxSetting {
    pub const ALL: [AuxSetting; 3] = [AuxSetting::Lower, AuxSetting::Mid, AuxSetting::Upper];

    pub fn pick(self, range: JointLimit) -> f64 {
        match self {
            AuxSetting::Lower => range.lo,
            AuxSetting::Mid => range.mid(),
            AuxSetting::Upper => range.hi,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AuxSetting::Lower => "a1",
            AuxSetting::Mid => "a2",
            AuxSetting::Upper => "a3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldParameters {
    pub settle_time: f64,
    /// Measurements averaged into one sample at every visit.
    pub samples_per_hold: usize,
}

impl Default for HoldParameters {
    fn default() -> Self {
        Self {
            settle_time: 0.5,
            samples_per_hold: 1,
        }
    }
}

/// One static measurement point of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Visit {
    pub q: Vec<f64>,
    pub dirs: Vec<DirectionTag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectionPlan {
    pub estimated_joint: usize,
    pub auxiliary_joint: Option<usize>,
    pub rest: Vec<f64>,
    pub hold: HoldParameters,
    pub visits: Vec<Visit>,
    pub description: String,
}

impl CollectionPlan {
    pub fn count(&self, dir: DirectionTag) -> usize {
        self.visits
            .iter()
            .filter(|v| v.dirs[self.estimated_joint] == dir)
            .count()
    }
}

/// Uniform grid with `n` points; a single point sits at the midpoint.
pub fn linspace(range: JointLimit, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![range.mid()],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    range.hi
                } else {
                    range.lo + (range.hi - range.lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

fn default_rest(model: &KinematicModel, rest: Option<&[f64]>) -> Result<Vec<f64>> {
    match rest {
        Some(r) => {
            model.check_q(r, true)?;
            Ok(r.to_vec())
        }
        None => Ok(model.limits.iter().map(|l| l.mid()).collect()),
    }
}

/// Traverses the estimated joint up (positive tags) then down (negative
/// tags) at every auxiliary setting.
fn sweep_visits(rest: &[f64], joint: usize, est: &[f64], aux: Option<(usize, &[f64])>) -> Vec<Visit> {
    let aux_values: Vec<Option<f64>> = match aux {
        Some((_, values)) => values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut visits = Vec::with_capacity(2 * est.len() * aux_values.len());
    for a in aux_values {
        let mut base = rest.to_vec();
        if let (Some((aux_joint, _)), Some(v)) = (aux, a) {
            base[aux_joint] = v;
        }
        for (dir, values) in [
            (DirectionTag::Positive, est.to_vec()),
            (DirectionTag::Negative, est.iter().rev().copied().collect()),
        ] {
            for e in values {
                let mut q = base.clone();
                q[joint] = e;
                let mut dirs = vec![DirectionTag::Positive; rest.len()];
                dirs[joint] = dir;
                visits.push(Visit { q, dirs });
            }
        }
    }
    visits
}

fn check_visits(model: &KinematicModel, visits: &[Visit]) -> Result<()> {
    visits.iter().try_for_each(|v| model.check_q(&v.q, true))
}

/// Two-joint plan for `joint` (zero-based): an `n_est x n_aux` grid per
/// direction. Joints without an auxiliary joint get a 1-D grid of
/// `n_est * n_aux` points.
pub fn two_joint_plan(
    model: &KinematicModel,
    joint: usize,
    ranges: &CollectionRanges,
    counts: (usize, usize),
    rest: Option<&[f64]>,
) -> Result<CollectionPlan> {
    ranges.check_joint(joint)?;
    if ranges.n_joints() != model.n_joints {
        return Err(Error::Dimension(format!(
            "ranges for {} joints, model has {}",
            ranges.n_joints(),
            model.n_joints
        )));
    }
    if counts.0 == 0 || counts.1 == 0 {
        return Err(Error::config("counts", "grid counts must be positive"));
    }
    let rest = default_rest(model, rest)?;
    let (visits, aux_joint, description) = match ranges.auxiliary[joint] {
        Some((aux, aux_range)) => {
            let est = linspace(ranges.estimated[joint], counts.0);
            let aux_grid = linspace(aux_range, counts.1);
            (
                sweep_visits(&rest, joint, &est, Some((aux, &aux_grid))),
                Some(aux),
                format!(
                    "two-joint joint={} aux={} grid={}x{}",
                    joint + 1,
                    aux + 1,
                    counts.0,
                    counts.1
                ),
            )
        }
        None => {
            let est = linspace(ranges.estimated[joint], counts.0 * counts.1);
            (
                sweep_visits(&rest, joint, &est, None),
                None,
                format!("single-joint joint={} grid={}", joint + 1, counts.0 * counts.1),
            )
        }
    };
    check_visits(model, &visits)?;
    Ok(CollectionPlan {
        estimated_joint: joint,
        auxiliary_joint: aux_joint,
        rest,
        hold: HoldParameters::default(),
        visits,
        description,
    })
}

/// One-joint baseline: only `joint` moves, its auxiliary joint pinned at the
/// lower limit, midpoint, or upper limit of its range.
pub fn one_joint_plan(
    model: &KinematicModel,
    joint: usize,
    ranges: &CollectionRanges,
    aux_setting: AuxSetting,
    count: usize,
    rest: Option<&[f64]>,
) -> Result<CollectionPlan> {
    ranges.check_joint(joint)?;
    let Some((aux, aux_range)) = ranges.auxiliary[joint] else {
        return Err(Error::config(
            format!("auxiliary.{}", joint + 1),
            "one-joint plans need an auxiliary joint to pin",
        ));
    };
    if count == 0 {
        return Err(Error::config("count", "must be positive"));
    }
    let mut rest = default_rest(model, rest)?;
    rest[aux] = aux_setting.pick(aux_range);
    let est = linspace(ranges.estimated[joint], count);
    let visits = sweep_visits(&rest, joint, &est, None);
    check_visits(model, &visits)?;
    Ok(CollectionPlan {
        estimated_joint: joint,
        auxiliary_joint: Some(aux),
        rest,
        hold: HoldParameters::default(),
        visits,
        description: format!(
            "one-joint joint={} aux={}@{} count={}",
            joint + 1,
            aux + 1,
            aux_setting.label(),
            count
        ),
    })
}

/// Sample counts `(N^n, n * N^2)` for the full grid and the two-joint strategy.
pub fn scaling_estimate(n_joints: u32, n: u128) -> (u128, u128) {
    (n.saturating_pow(n_joints), (n_joints as u128).saturating_mul(n * n))
}
