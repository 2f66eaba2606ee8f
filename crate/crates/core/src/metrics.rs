//! Torque prediction metrics, the trajectory test, and the drift test.

use std::fmt::Write as _;

use rayon::prelude::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::disturbance::{DirectionTag, DisturbanceBasis};
use crate::error::{Error, Result};
use crate::estimation::{self, Dataset, DatasetMeta, ParamSet, Sample, StepSolve};
use crate::excitation::{self, AuxSetting, CollectionRanges};
use crate::gcc::{Compensator, GccConfig};
use crate::gravity::GravityRegressorSpec;
use crate::kinematics::{JointLimit, KinematicModel};
use crate::plant::{self, Plant, PlantSpec};

/// `|predicted - measured| / |measured| * 100`.
pub fn rms_relative(predicted: &[f64], measured: &[f64]) -> Result<f64> {
    check_lengths(predicted, measured)?;
    let den = measured.iter().map(|m| m * m).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::UndefinedMetric("measured torque is identically zero".into()));
    }
    let num = predicted
        .iter()
        .zip(measured)
        .map(|(p, m)| (p - m) * (p - m))
        .sum::<f64>()
        .sqrt();
    Ok(num / den * 100.0)
}

pub fn rms_absolute(predicted: &[f64], measured: &[f64]) -> Result<f64> {
    check_lengths(predicted, measured)?;
    let ss: f64 = predicted.iter().zip(measured).map(|(p, m)| (p - m) * (p - m)).sum();
    Ok((ss / measured.len() as f64).sqrt())
}

pub fn max_absolute(predicted: &[f64], measured: &[f64]) -> Result<f64> {
    check_lengths(predicted, measured)?;
    Ok(predicted
        .iter()
        .zip(measured)
        .map(|(p, m)| (p - m).abs())
        .fold(0.0, f64::max))
}

fn check_lengths(predicted: &[f64], measured: &[f64]) -> Result<()> {
    if predicted.len() != measured.len() || measured.is_empty() {
        return Err(Error::Dimension(format!(
            "predicted has {} entries, measured {}",
            predicted.len(),
            measured.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointError {
    /// NaN when the joint's measured torque is identically zero.
    pub rms_relative_pct: f64,
    pub rms_abs: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueEvalReport {
    pub method: String,
    pub dataset: String,
    pub joints: Vec<JointError>,
}

impl TorqueEvalReport {
    /// Per-joint errors between `predicted` and `measured` torque sequences.
    pub fn from_series(
        method: impl Into<String>,
        dataset: impl Into<String>,
        predicted: &[Vec<f64>],
        measured: &[Vec<f64>],
    ) -> Result<Self> {
        let n = measured.first().map_or(0, |m| m.len());
        let column = |s: &[Vec<f64>], j: usize| s.iter().map(|v| v[j]).collect::<Vec<_>>();
        let joints = (0..n)
            .map(|j| {
                let p = column(predicted, j);
                let m = column(measured, j);
                Ok(JointError {
                    rms_relative_pct: match rms_relative(&p, &m) {
                        Ok(v) => v,
                        Err(Error::UndefinedMetric(_)) => f64::NAN,
                        Err(e) => return Err(e),
                    },
                    rms_abs: rms_absolute(&p, &m)?,
                    max_abs: max_absolute(&p, &m)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            method: method.into(),
            dataset: dataset.into(),
            joints,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("joint,rms_relative_pct,rms_abs_nm,max_abs_nm\n");
        for (j, e) in self.joints.iter().enumerate() {
            let _ = writeln!(s, "{},{:?},{:?},{:?}", j + 1, e.rms_relative_pct, e.rms_abs, e.max_abs);
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("method: {}\ndataset: {}\n", self.method, self.dataset);
        let _ = writeln!(
            s,
            "{:>5} {:>14} {:>14} {:>14}",
            "joint", "rms rel %", "rms abs N*m", "max abs N*m"
        );
        for (j, e) in self.joints.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:>5} {:>14.6e} {:>14.6e} {:>14.6e}",
                j + 1,
                e.rms_relative_pct,
                e.rms_abs,
                e.max_abs
            );
        }
        s
    }
}

/// Directional predictions of `params` against the samples of `dataset`.
pub fn evaluate_dataset(
    model: &KinematicModel,
    params: &ParamSet,
    dataset: &Dataset,
    label: &str,
) -> Result<TorqueEvalReport> {
    dataset.validate(model)?;
    let predicted = dataset
        .samples
        .iter()
        .map(|s| params.predict(model, &s.q, &s.dir).map(|t| t.iter().copied().collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let measured: Vec<Vec<f64>> = dataset.samples.iter().map(|s| s.tau.clone()).collect();
    TorqueEvalReport::from_series(params.provenance.method.label(), label, &predicted, &measured)
}

/// Hold timing of the trajectory test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldSchedule {
    pub hold: f64,
    pub sample_rate: f64,
}

impl Default for HoldSchedule {
    fn default() -> Self {
        Self {
            hold: 5.0,
            sample_rate: 10.0,
        }
    }
}

pub const DEFAULT_WAYPOINTS: usize = 10;

/// Samples taken while the arm holds each waypoint, with the direction tags
/// of the motion that brought it there. The path starts at mid-range.
pub fn trajectory_samples(plant: &mut Plant<'_>, waypoints: &[Vec<f64>], schedule: HoldSchedule) -> Result<Dataset> {
    let spec = plant.spec();
    let model = &spec.model;
    if waypoints.len() < 2 {
        return Err(Error::config("waypoints", "at least 2 waypoints are required"));
    }
    if !(schedule.hold > 0.0 && schedule.sample_rate > 0.0) {
        return Err(Error::config("hold", "hold time and sample rate must be positive"));
    }
    for w in waypoints {
        model.check_q(w, true)?;
    }
    let per_hold = ((schedule.hold * schedule.sample_rate).round() as usize).max(1);
    let mut prev: Vec<f64> = model.limits.iter().map(|l| l.mid()).collect();
    let mut samples = Vec::with_capacity(per_hold * waypoints.len());
    for w in waypoints {
        let dirs: Vec<DirectionTag> = w
            .iter()
            .zip(&prev)
            .map(|(a, b)| DirectionTag::from_delta(a - b))
            .collect();
        for _ in 0..per_hold {
            let tau = plant.measure_static(w, &dirs)?;
            samples.push(Sample {
                q: w.clone(),
                dir: dirs.clone(),
                tau: tau.iter().copied().collect(),
            });
        }
        prev.clone_from(w);
    }
    Ok(Dataset {
        samples,
        meta: DatasetMeta {
            source: "plant-sim".into(),
            estimated_joint: None,
            sweep: format!("trajectory waypoints={} hold={}", waypoints.len(), schedule.hold),
            plant_seed: Some(spec.seed),
            model_hash: crate::files::model_hash(model),
            orders_hint: None,
        },
    })
}

/// Trajectory test: steady-state holding torques versus predictions.
pub fn trajectory_test(
    plant: &mut Plant<'_>,
    params: &ParamSet,
    waypoints: &[Vec<f64>],
    schedule: HoldSchedule,
) -> Result<TorqueEvalReport> {
    let data = trajectory_samples(plant, waypoints, schedule)?;
    evaluate_dataset(&plant.spec().model, params, &data, "trajectory")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftSummary {
    pub translational: Stats,
    pub rotational_deg: Stats,
    /// `(translational m, rotational deg)` per pose, in pose order.
    pub per_pose: Vec<(f64, f64)>,
}

impl DriftSummary {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pose,translational_m,rotational_deg\n");
        for (i, (t, r)) in self.per_pose.iter().enumerate() {
            let _ = writeln!(s, "{},{:?},{:?}", i + 1, t, r);
        }
        s
    }

    pub fn to_text(&self) -> String {
        format!(
            "poses: {}\ntranslational drift (m): mean {:.6e} std {:.6e}\nrotational drift (deg): mean {:.6e} std {:.6e}\n",
            self.per_pose.len(),
            self.translational.mean,
            self.translational.std,
            self.rotational_deg.mean,
            self.rotational_deg.std
        )
    }
}

pub const DEFAULT_DRIFT_POSES: usize = 400;
pub const DEFAULT_DRIFT_DURATION: f64 = 2.0;
pub const DEFAULT_DRIFT_DT: f64 = 1e-3;

/// Releases the plant at every pose under the compensation controller.
/// Poses run in parallel; results keep pose order.
pub fn drift_test(
    spec: &PlantSpec,
    params: &ParamSet,
    config: &GccConfig,
    poses: &[Vec<f64>],
    duration: f64,
    dt: f64,
) -> Result<DriftSummary> {
    if poses.is_empty() {
        return Err(Error::config("poses", "at least one pose is required"));
    }
    // Surface configuration errors once instead of per pose.
    Compensator::new(&spec.model, params, config.clone())?;
    let per_pose = poses
        .par_iter()
        .enumerate()
        .map(|(i, q0)| {
            let mut comp = Compensator::new(&spec.model, params, config.clone())?;
            let mut ctrl = |q: &[f64], dq: &[f64], out: &mut [f64]| comp.torque_into(q, dq, out);
            plant::drift_simulate(spec, &mut ctrl, q0, duration, dt)
                .map(|r| (r.translational, r.rotational_deg))
                .map_err(|e| match e {
                    Error::NonFinite { step, detail } => Error::NonFinite {
                        step,
                        detail: format!("pose {}: {detail}", i + 1),
                    },
                    other => other,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let t: Vec<f64> = per_pose.iter().map(|p| p.0).collect();
    let r: Vec<f64> = per_pose.iter().map(|p| p.1).collect();
    Ok(DriftSummary {
        translational: Stats::of(&t),
        rotational_deg: Stats::of(&r),
        per_pose,
    })
}

/// One strategy of the excitation comparison for one joint.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyResult {
    /// `two-joint`, `one-joint-a1`, `one-joint-a2` or `one-joint-a3`.
    pub strategy: String,
    /// Condition number of the joint's step regressor.
    pub condition: f64,
    /// RMS absolute error of the joint's row on held-out configurations (N*m).
    pub heldout_rms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondStudyRow {
    pub joint: usize,
    pub strategies: Vec<StrategyResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondStudy {
    pub rows: Vec<CondStudyRow>,
}

impl CondStudy {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("joint,strategy,condition,heldout_rms_nm\n");
        for r in &self.rows {
            for st in &r.strategies {
                let _ = writeln!(
                    s,
                    "{},{},{:?},{:?}",
                    r.joint + 1,
                    st.strategy,
                    st.condition,
                    st.heldout_rms
                );
            }
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:>5} {:>14} {:>14} {:>14}\n",
            "joint", "strategy", "condition", "held-out rms"
        );
        for r in &self.rows {
            for st in &r.strategies {
                let _ = writeln!(
                    s,
                    "{:>5} {:>14} {:>14.6e} {:>14.6e}",
                    r.joint + 1,
                    st.strategy,
                    st.condition,
                    st.heldout_rms
                );
            }
        }
        s
    }
}

/// Settings of the excitation comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CondStudyOptions {
    pub ranges: CollectionRanges,
    /// Grid of the two-joint strategy; the one-joint strategies use the
    /// same total count along the estimated joint.
    pub counts: (usize, usize),
    pub heldout: usize,
    pub seed: u64,
}

impl Default for CondStudyOptions {
    fn default() -> Self {
        Self {
            ranges: CollectionRanges::mtm_table(),
            counts: (20, 20),
            heldout: 200,
            seed: 0,
        }
    }
}

/// Two-joint versus one-joint (auxiliary joint pinned low, mid, high)
/// collection for every joint that has an auxiliary joint. Each strategy
/// re-solves only that joint's MLSE step, with the distal parameters taken
/// from a two-joint reference fit; rank-deficient steps fall back to the
/// minimum-norm solution so their held-out error can still be reported.
pub fn cond_study(
    spec: &PlantSpec,
    gravity: &GravityRegressorSpec,
    basis: &DisturbanceBasis,
    options: &CondStudyOptions,
) -> Result<CondStudy> {
    let model = &spec.model;
    let n = model.n_joints;
    let ranges = &options.ranges;
    let stream = |j: usize, s: u64| options.seed.wrapping_mul(1 << 16) + 8 * j as u64 + s;
    let two_joint = (0..n)
        .map(|j| {
            let counts = if ranges.auxiliary[j].is_some() {
                options.counts
            } else {
                (options.counts.0 * options.counts.1, 1)
            };
            let plan = excitation::two_joint_plan(model, j, ranges, counts, None)?;
            Plant::with_stream(spec, stream(j, 0))?.collect(&plan)
        })
        .collect::<Result<Vec<_>>>()?;
    let partition = estimation::build_partition(model, gravity)?;
    let reference = estimation::mlse_with_partition(model, &two_joint, gravity, basis, &partition)?;
    let known = &reference.gravity_base;

    let mut rows = Vec::new();
    for j in 0..n {
        let Some((aux, aux_range)) = ranges.auxiliary[j] else {
            continue;
        };
        let heldout = heldout_data(spec, j, ranges.estimated[j], aux, aux_range, options, stream(j, 1))?;
        let mut candidates = vec![("two-joint".to_string(), two_joint[j].clone())];
        for setting in AuxSetting::ALL {
            let plan =
                excitation::one_joint_plan(model, j, ranges, setting, options.counts.0 * options.counts.1, None)?;
            let data = Plant::with_stream(spec, stream(j, 2))?.collect(&plan)?;
            candidates.push((format!("one-joint-{}", setting.label()), data));
        }
        let mut strategies = Vec::new();
        for (name, data) in candidates {
            let (order, center) = (basis.orders[j], basis.centers[j]);
            let sol = estimation::solve_step(
                model,
                gravity,
                &partition,
                &data,
                j,
                order,
                center,
                known,
                StepSolve::MinimumNorm,
            )?;
            let (w, rhs) = estimation::step_system(model, gravity, &partition, &heldout, j, order, center, known)?;
            let heldout_rms = (&w * sol.stacked() - rhs).norm() / (heldout.len() as f64).sqrt();
            strategies.push(StrategyResult {
                strategy: name,
                condition: sol.report.condition,
                heldout_rms,
            });
        }
        rows.push(CondStudyRow { joint: j, strategies });
    }
    Ok(CondStudy { rows })
}

/// Uniform random configurations over the estimated and auxiliary ranges,
/// other joints at mid-range, random direction tags.
fn heldout_data(
    spec: &PlantSpec,
    joint: usize,
    est: JointLimit,
    aux: usize,
    aux_range: JointLimit,
    options: &CondStudyOptions,
    stream: u64,
) -> Result<Dataset> {
    let model = &spec.model;
    let n = model.n_joints;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    rng.set_stream(stream);
    let rest: Vec<f64> = model.limits.iter().map(|l| l.mid()).collect();
    let dirs = estimation::random_directions(n, options.heldout, options.seed ^ stream);
    let mut plant = Plant::with_stream(spec, stream)?;
    let mut samples = Vec::with_capacity(options.heldout);
    for d in dirs {
        let mut q = rest.clone();
        q[joint] = est.lo + (est.hi - est.lo) * rng.random::<f64>();
        q[aux] = aux_range.lo + (aux_range.hi - aux_range.lo) * rng.random::<f64>();
        let tau = plant.measure_static(&q, &d)?;
        samples.push(Sample {
            q,
            dir: d,
            tau: tau.iter().copied().collect(),
        });
    }
    Ok(Dataset::new(samples, DatasetMeta::default()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_cases() {
        let m = [1.0, -2.0, 3.0];
        assert_eq!(rms_relative(&m, &m).unwrap(), 0.0);
        assert!((rms_relative(&[0.0; 3], &m).unwrap() - 100.0).abs() < 1e-12);
        let twice: Vec<f64> = m.iter().map(|v| 2.0 * v).collect();
        assert!((rms_relative(&twice, &m).unwrap() - 100.0).abs() < 1e-12);
        assert!(matches!(rms_relative(&m, &[0.0; 3]), Err(Error::UndefinedMetric(_))));
        assert!(rms_relative(&m, &m[..2]).is_err());
    }

    #[test]
    fn absolute_errors() {
        assert!((rms_absolute(&[1.0, 3.0], &[0.0, 0.0]).unwrap() - 5.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(max_absolute(&[1.0, -3.0], &[0.0, 0.0]).unwrap(), 3.0);
    }

    #[test]
    fn stats_population() {
        let s = Stats::of(&[1.0, 3.0]);
        assert_eq!((s.mean, s.std), (2.0, 1.0));
    }

    #[test]
    fn report_csv_layout() {
        let r = TorqueEvalReport::from_series("mlse", "t", &[vec![1.0, 0.0]], &[vec![1.0, 0.0]]).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("joint,rms_relative_pct"));
        assert!(csv.contains("2,NaN,0.0,0.0"));
    }
}
