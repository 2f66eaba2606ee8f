//! Single-step and multi-step least-squares estimation of gravity base
//! parameters and disturbance coefficients from static torque data.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::disturbance::{phi_into, DirectionTag, DisturbanceBasis, PolyDisturbance};
use crate::error::{Error, Result};
use crate::gravity::GravityRegressorSpec;
use crate::kinematics::{FrameSet, KinematicModel};
use crate::linalg;

/// One static measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub q: Vec<f64>,
    pub dir: Vec<DirectionTag>,
    pub tau: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetMeta {
    pub source: String,
    /// Zero-based joint this dataset was collected for, if any.
    pub estimated_joint: Option<usize>,
    pub sweep: String,
    pub plant_seed: Option<u64>,
    pub model_hash: String,
    pub orders_hint: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, meta: DatasetMeta) -> Self {
        Self { samples, meta }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks sample widths against the model; limits are not enforced.
    pub fn validate(&self, model: &KinematicModel) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = model.n_joints;
        for (k, s) in self.samples.iter().enumerate() {
            if s.q.len() != n || s.dir.len() != n || s.tau.len() != n {
                return Err(Error::Dimension(format!(
                    "sample {k}: widths q={} dir={} tau={} for {n} joints",
                    s.q.len(),
                    s.dir.len(),
                    s.tau.len()
                )));
            }
            if s.q.iter().chain(&s.tau).any(|v| !v.is_finite()) {
                return Err(Error::Dimension(format!("sample {k}: non-finite value")));
            }
        }
        Ok(())
    }

    /// Deterministic interleaved split; sample `k` goes to the test part when
    /// `floor((k + 1) f) > floor(k f)`.
    pub fn split_interleaved(&self, test_fraction: f64) -> Result<(Dataset, Dataset)> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::config("split", "test fraction must lie in (0, 1)"));
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (k, s) in self.samples.iter().enumerate() {
            let a = (k as f64 * test_fraction).floor();
            let b = ((k + 1) as f64 * test_fraction).floor();
            if b > a {
                test.push(s.clone());
            } else {
                train.push(s.clone());
            }
        }
        if train.is_empty() || test.is_empty() {
            return Err(Error::config(
                "split",
                format!("{} samples are too few for a {test_fraction} test split", self.len()),
            ));
        }
        let meta = self.meta.clone();
        Ok((Dataset::new(train, meta.clone()), Dataset::new(test, meta)))
    }

    /// Concatenation of several datasets.
    pub fn concat(parts: &[Dataset]) -> Dataset {
        Dataset {
            samples: parts.iter().flat_map(|d| d.samples.iter().cloned()).collect(),
            meta: DatasetMeta {
                source: "combined".into(),
                ..parts.first().map(|d| d.meta.clone()).unwrap_or_default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Slse,
    Mlse,
    /// SLSE with an order-1 direction-symmetric disturbance model.
    FontanelliLike,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Slse => "slse",
            Method::Mlse => "mlse",
            Method::FontanelliLike => "fontanelli-like",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "slse" => Some(Method::Slse),
            "mlse" => Some(Method::Mlse),
            "fontanelli-like" => Some(Method::FontanelliLike),
            _ => None,
        }
    }
}

/// Diagnostics of one least-squares solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Zero-based joint of an MLSE step; `None` for a single global solve.
    pub joint: Option<usize>,
    pub rows: usize,
    pub params: usize,
    pub residual_norm: f64,
    pub condition: f64,
}

impl StepReport {
    pub fn rms_residual(&self) -> f64 {
        if self.rows == 0 {
            0.0
        } else {
            self.residual_norm / (self.rows as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub method: Method,
    pub steps: Vec<StepReport>,
}

/// Identified parameters: gravity base vector plus directional polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub gravity: GravityRegressorSpec,
    pub gravity_base: DVector<f64>,
    pub disturbance: PolyDisturbance,
    pub provenance: Provenance,
}

impl ParamSet {
    pub fn validate(&self, model: &KinematicModel) -> Result<()> {
        if self.gravity_base.len() != self.gravity.base_count() {
            return Err(Error::Dimension(format!(
                "{} gravity parameters for base size {}",
                self.gravity_base.len(),
                self.gravity.base_count()
            )));
        }
        if self.gravity.full_param_count != model.link_count() * crate::gravity::PARAMS_PER_LINK {
            return Err(Error::Dimension("gravity reduction does not match the model".into()));
        }
        if self.disturbance.n_joints() != model.n_joints {
            return Err(Error::Dimension(format!(
                "disturbance for {} joints, model has {}",
                self.disturbance.n_joints(),
                model.n_joints
            )));
        }
        if self.gravity_base.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dimension("non-finite gravity parameter".into()));
        }
        PolyDisturbance::new(
            self.disturbance.basis.clone(),
            self.disturbance.plus.clone(),
            self.disturbance.minus.clone(),
        )?;
        Ok(())
    }

    /// `gY(q) * g_beta`.
    pub fn gravity_torque(&self, model: &KinematicModel, q: &[f64]) -> Result<DVector<f64>> {
        model.check_q(q, false)?;
        Ok(self.gravity.base_regressor(model, q)? * &self.gravity_base)
    }

    /// Full directional prediction `gY(q) g_beta + Phi(q) a^dir`.
    pub fn predict(&self, model: &KinematicModel, q: &[f64], dirs: &[DirectionTag]) -> Result<DVector<f64>> {
        if dirs.len() != model.n_joints {
            return Err(Error::Dimension(format!("{} direction tags", dirs.len())));
        }
        Ok(self.gravity_torque(model, q)? + self.disturbance.torque(q, dirs))
    }
}

/// Reusable buffers for evaluating the base gravity regressor.
struct BaseRegressor<'a> {
    model: &'a KinematicModel,
    spec: &'a GravityRegressorSpec,
    frames: FrameSet,
    full: DMatrix<f64>,
    base: DMatrix<f64>,
}

impl<'a> BaseRegressor<'a> {
    fn new(model: &'a KinematicModel, spec: &'a GravityRegressorSpec) -> Self {
        let n = model.n_joints;
        Self {
            model,
            spec,
            frames: FrameSet::default(),
            full: DMatrix::zeros(n, spec.full_param_count),
            base: DMatrix::zeros(n, spec.base_count()),
        }
    }

    fn at(&mut self, q: &[f64]) -> Result<&DMatrix<f64>> {
        self.model.check_q(q, false)?;
        self.model.frames_into(q, &mut self.frames);
        self.spec
            .base_regressor_from_frames(self.model, &self.frames, &mut self.full, &mut self.base);
        Ok(&self.base)
    }
}

fn check_inputs(model: &KinematicModel, spec: &GravityRegressorSpec, basis: &DisturbanceBasis) -> Result<()> {
    if spec.full_param_count != model.link_count() * crate::gravity::PARAMS_PER_LINK {
        return Err(Error::Dimension("gravity reduction does not match the model".into()));
    }
    if basis.n_joints() != model.n_joints {
        return Err(Error::Dimension(format!(
            "{} disturbance orders for {} joints",
            basis.n_joints(),
            model.n_joints
        )));
    }
    Ok(())
}

/// Stacked regressor `W` (`n p x (b + 2 sum(k_i + 1))`) and torque vector.
pub fn stack_regressor(
    model: &KinematicModel,
    dataset: &Dataset,
    spec: &GravityRegressorSpec,
    basis: &DisturbanceBasis,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_inputs(model, spec, basis)?;
    dataset.validate(model)?;
    let n = model.n_joints;
    let b = spec.base_count();
    let half = basis.block_len();
    let rows = n * dataset.len();
    let mut w = DMatrix::zeros(rows, b + 2 * half);
    let mut omega = DVector::zeros(rows);
    let mut reg = BaseRegressor::new(model, spec);
    let mut phi = vec![0.0; basis.orders.iter().max().map_or(1, |k| k + 1)];
    for (s_idx, s) in dataset.samples.iter().enumerate() {
        let y = reg.at(&s.q)?;
        let r0 = s_idx * n;
        w.view_mut((r0, 0), (n, b)).copy_from(y);
        for i in 0..n {
            let k = basis.orders[i];
            phi_into(basis.var(i, s.q[i]), &mut phi[..=k]);
            let shift = match s.dir[i] {
                DirectionTag::Positive => 0,
                DirectionTag::Negative => half,
            };
            let o = b + shift + basis.offset(i);
            for (c, &v) in phi[..=k].iter().enumerate() {
                w[(r0 + i, o + c)] = v;
            }
            omega[r0 + i] = s.tau[i];
        }
    }
    Ok((w, omega))
}

fn disturbance_label(basis: &DisturbanceBasis, col: usize) -> String {
    let half = basis.block_len();
    let (sign, c) = if col < half { ('+', col) } else { ('-', col - half) };
    let joint = (0..basis.n_joints()).rev().find(|&j| basis.offset(j) <= c).unwrap_or(0);
    format!("a{}{}[{}]", joint + 1, sign, c - basis.offset(joint))
}

/// Single global least-squares solve over all samples.
pub fn slse(
    model: &KinematicModel,
    dataset: &Dataset,
    spec: &GravityRegressorSpec,
    basis: &DisturbanceBasis,
) -> Result<ParamSet> {
    let (w, omega) = stack_regressor(model, dataset, spec, basis)?;
    let b = spec.base_count();
    let sol = linalg::lstsq(&w, &omega, &|c| {
        if c < b {
            spec.label(model, c)
        } else {
            disturbance_label(basis, c - b)
        }
    })?;
    let gravity_base = sol.x.rows(0, b).into_owned();
    let disturbance = PolyDisturbance::from_stacked(basis.clone(), &sol.x.rows(b, w.ncols() - b).into_owned())?;
    Ok(ParamSet {
        gravity: spec.clone(),
        gravity_base,
        disturbance,
        provenance: Provenance {
            method: Method::Slse,
            steps: vec![StepReport {
                joint: None,
                rows: w.nrows(),
                params: w.ncols(),
                residual_norm: sol.residual_norm,
                condition: sol.condition,
            }],
        },
    })
}

/// Baseline: SLSE with a linear, direction-symmetric disturbance per joint.
pub fn slse_symmetric_linear(
    model: &KinematicModel,
    dataset: &Dataset,
    spec: &GravityRegressorSpec,
) -> Result<ParamSet> {
    let n = model.n_joints;
    let basis = DisturbanceBasis::new(vec![1; n]);
    let (w, omega) = stack_regressor(model, dataset, spec, &basis)?;
    // a+ = a-: fold the negative block onto the positive one.
    let b = spec.base_count();
    let half = basis.block_len();
    let mut folded = w.columns(0, b + half).into_owned();
    let neg = w.columns(b + half, half).into_owned();
    folded.columns_mut(b, half).zip_apply(&neg, |x, y| *x += y);
    let sol = linalg::lstsq(&folded, &omega, &|c| {
        if c < b {
            spec.label(model, c)
        } else {
            disturbance_label(&basis, c - b).replace('+', "")
        }
    })?;
    let a: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let o = b + basis.offset(j);
            vec![sol.x[o], sol.x[o + 1]]
        })
        .collect();
    Ok(ParamSet {
        gravity: spec.clone(),
        gravity_base: sol.x.rows(0, b).into_owned(),
        disturbance: PolyDisturbance::new(basis, a.clone(), a)?,
        provenance: Provenance {
            method: Method::FontanelliLike,
            steps: vec![StepReport {
                joint: None,
                rows: folded.nrows(),
                params: folded.ncols(),
                residual_norm: sol.residual_norm,
                condition: sol.condition,
            }],
        },
    })
}

/// Assignment of gravity base columns to MLSE steps.
#[derive(Debug, Clone, PartialEq)]
pub struct MlsePartition {
    /// `steps[i]`: base columns newly estimated at joint `i`'s step, i.e.
    /// columns whose last nonzero regressor row is row `i`.
    pub steps: Vec<Vec<usize>>,
}

impl MlsePartition {
    /// Columns already estimated when joint `joint`'s step runs.
    pub fn known_before(&self, joint: usize) -> Vec<usize> {
        let mut cols: Vec<usize> = self.steps[joint + 1..].iter().flatten().copied().collect();
        cols.sort_unstable();
        cols
    }
}

/// Number of random configurations probed when building a partition.
pub const PARTITION_PROBES: usize = 200;
/// Absolute threshold below which a regressor entry counts as zero.
pub const PARTITION_ZERO: f64 = 1e-10;
const PARTITION_SEED: u64 = 0x6d6c_7365_5f70_6172;

/// Assigns every base column to the highest joint row it touches.
pub fn build_partition(model: &KinematicModel, spec: &GravityRegressorSpec) -> Result<MlsePartition> {
    let n = model.n_joints;
    let b = spec.base_count();
    let probes = crate::plant::random_poses(model, PARTITION_PROBES, PARTITION_SEED)?;
    let mut last_row: Vec<Option<usize>> = vec![None; b];
    let mut reg = BaseRegressor::new(model, spec);
    for q in &probes {
        let y = reg.at(q)?;
        for c in 0..b {
            for r in (0..n).rev() {
                if y[(r, c)].abs() > PARTITION_ZERO {
                    if last_row[c].is_none_or(|l| r > l) {
                        last_row[c] = Some(r);
                    }
                    break;
                }
            }
        }
    }
    let mut steps = vec![Vec::new(); n];
    for (c, row) in last_row.into_iter().enumerate() {
        match row {
            None => {
                return Err(Error::ModelInconsistency(format!(
                    "base column {} is zero on every probe",
                    spec.label(model, c)
                )))
            }
            Some(0) if n > 1 => {
                return Err(Error::ModelInconsistency(format!(
                    "base column {} only affects joint 1, whose gravity row should vanish",
                    spec.label(model, c)
                )))
            }
            Some(r) => steps[r].push(c),
        }
    }
    Ok(MlsePartition { steps })
}

/// Regressor and right-hand side of one MLSE step on joint `joint`'s rows.
///
/// Columns are `[gY_i(new) | phi_i u | phi_i (1 - u)]`, and the right-hand
/// side is `tau_i` minus the contribution of already known base columns.
pub fn step_system(
    model: &KinematicModel,
    spec: &GravityRegressorSpec,
    partition: &MlsePartition,
    dataset: &Dataset,
    joint: usize,
    order: usize,
    center: f64,
    known: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    dataset.validate(model)?;
    let new_cols = &partition.steps[joint];
    let known_cols = partition.known_before(joint);
    let nk = order + 1;
    let cols = new_cols.len() + 2 * nk;
    let p = dataset.len();
    let mut w = DMatrix::zeros(p, cols);
    let mut rhs = DVector::zeros(p);
    let mut reg = BaseRegressor::new(model, spec);
    let mut phi = vec![0.0; nk];
    for (r, s) in dataset.samples.iter().enumerate() {
        let y = reg.at(&s.q)?;
        for (c, &k) in new_cols.iter().enumerate() {
            w[(r, c)] = y[(joint, k)];
        }
        let known_part: f64 = known_cols.iter().map(|&k| y[(joint, k)] * known[k]).sum();
        rhs[r] = s.tau[joint] - known_part;
        phi_into(s.q[joint] - center, &mut phi);
        let o = new_cols.len()
            + match s.dir[joint] {
                DirectionTag::Positive => 0,
                DirectionTag::Negative => nk,
            };
        for (c, &v) in phi.iter().enumerate() {
            w[(r, o + c)] = v;
        }
    }
    Ok((w, rhs))
}

/// Result of one MLSE step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSolution {
    pub joint: usize,
    /// `(base column, value)` for the newly estimated gravity parameters.
    pub gravity: Vec<(usize, f64)>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub report: StepReport,
}

impl StepSolution {
    /// Stacked step parameters in `step_system` column order.
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.gravity.len() + self.plus.len() + self.minus.len(),
            self.gravity
                .iter()
                .map(|&(_, v)| v)
                .chain(self.plus.iter().copied())
                .chain(self.minus.iter().copied()),
        )
    }
}

/// How a rank-deficient step is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSolve {
    /// Fail with an identifiability error.
    Strict,
    /// Fall back to the minimum-norm solution (used by comparison studies).
    MinimumNorm,
}

#[allow(clippy::too_many_arguments)]
pub fn solve_step(
    model: &KinematicModel,
    spec: &GravityRegressorSpec,
    partition: &MlsePartition,
    dataset: &Dataset,
    joint: usize,
    order: usize,
    center: f64,
    known: &DVector<f64>,
    mode: StepSolve,
) -> Result<StepSolution> {
    let (w, rhs) = step_system(model, spec, partition, dataset, joint, order, center, known)?;
    let new_cols = &partition.steps[joint];
    let g = new_cols.len();
    let nk = order + 1;
    let x = match linalg::lstsq(&w, &rhs, &|c| {
        if c < g {
            spec.label(model, new_cols[c])
        } else if c < g + nk {
            format!("a{}+[{}]", joint + 1, c - g)
        } else {
            format!("a{}-[{}]", joint + 1, c - g - nk)
        }
    }) {
        Ok(sol) => sol.x,
        Err(Error::Identifiability { detail, .. }) if mode == StepSolve::Strict => {
            return Err(Error::Identifiability {
                joint: Some(joint),
                detail: format!("{detail}; collect more excitation or lower the polynomial order"),
            })
        }
        Err(Error::Identifiability { .. }) => linalg::lstsq_min_norm(&w, &rhs),
        Err(e) => return Err(e),
    };
    let residual_norm = (&w * &x - &rhs).norm();
    Ok(StepSolution {
        joint,
        gravity: new_cols.iter().enumerate().map(|(c, &k)| (k, x[c])).collect(),
        plus: x.rows(g, nk).iter().copied().collect(),
        minus: x.rows(g + nk, nk).iter().copied().collect(),
        report: StepReport {
            joint: Some(joint),
            rows: w.nrows(),
            params: w.ncols(),
            residual_norm,
            condition: linalg::condition_number(&w),
        },
    })
}

/// Multi-step estimation from the distal joint to the proximal one, one
/// dataset per joint (`datasets[i]` for joint `i`).
pub fn mlse(
    model: &KinematicModel,
    datasets: &[Dataset],
    spec: &GravityRegressorSpec,
    basis: &DisturbanceBasis,
) -> Result<ParamSet> {
    let partition = build_partition(model, spec)?;
    mlse_with_partition(model, datasets, spec, basis, &partition)
}

pub fn mlse_with_partition(
    model: &KinematicModel,
    datasets: &[Dataset],
    spec: &GravityRegressorSpec,
    basis: &DisturbanceBasis,
    partition: &MlsePartition,
) -> Result<ParamSet> {
    check_inputs(model, spec, basis)?;
    let n = model.n_joints;
    if datasets.len() != n {
        return Err(Error::Dimension(format!(
            "{} datasets for {n} joints; one per joint is required",
            datasets.len()
        )));
    }
    for (i, d) in datasets.iter().enumerate() {
        d.validate(model).map_err(|e| match e {
            Error::EmptyDataset => Error::Identifiability {
                joint: Some(i),
                detail: "no samples for this joint".into(),
            },
            other => other,
        })?;
    }
    let mut gravity_base = DVector::zeros(spec.base_count());
    let mut plus = vec![Vec::new(); n];
    let mut minus = vec![Vec::new(); n];
    let mut steps = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let sol = solve_step(
            model,
            spec,
            partition,
            &datasets[i],
            i,
            basis.orders[i],
            basis.centers[i],
            &gravity_base,
            StepSolve::Strict,
        )?;
        log::debug!(
            "mlse step joint {}: rows={} params={} cond={:e} residual={:e}",
            i + 1,
            sol.report.rows,
            sol.report.params,
            sol.report.condition,
            sol.report.residual_norm
        );
        for &(k, v) in &sol.gravity {
            gravity_base[k] = v;
        }
        plus[i] = sol.plus;
        minus[i] = sol.minus;
        steps.push(sol.report);
    }
    Ok(ParamSet {
        gravity: spec.clone(),
        gravity_base,
        disturbance: PolyDisturbance::new(basis.clone(), plus, minus)?,
        provenance: Provenance {
            method: Method::Mlse,
            steps,
        },
    })
}

/// Condition number of a stacked regressor.
pub fn condition_number(w: &DMatrix<f64>) -> f64 {
    linalg::condition_number(w)
}

/// One entry of an order sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSweepRow {
    pub joint: usize,
    pub order: usize,
    /// RMS absolute error on joint `joint`'s training rows (N*m); NaN when
    /// the step was not identifiable at this order.
    pub train_rms: f64,
    pub test_rms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderSweep {
    pub rows: Vec<OrderSweepRow>,
    /// Order with the lowest test error per joint.
    pub best: Vec<Option<usize>>,
}

impl OrderSweep {
    pub fn series(&self, joint: usize) -> Vec<&OrderSweepRow> {
        self.rows.iter().filter(|r| r.joint == joint).collect()
    }
}

/// For each joint and each order in `orders`, refits that joint's MLSE step
/// at the given order on the training part (all other joints at their
/// `basis` orders) and evaluates RMS absolute error on both parts.
pub fn order_sweep(
    model: &KinematicModel,
    datasets: &[Dataset],
    spec: &GravityRegressorSpec,
    basis: &DisturbanceBasis,
    orders: &[usize],
    test_fraction: f64,
) -> Result<OrderSweep> {
    if orders.is_empty() {
        return Err(Error::config("orders", "order range is empty"));
    }
    let splits = datasets
        .iter()
        .map(|d| d.split_interleaved(test_fraction))
        .collect::<Result<Vec<_>>>()?;
    let train: Vec<Dataset> = splits.iter().map(|(a, _)| a.clone()).collect();
    let partition = build_partition(model, spec)?;
    let reference = mlse_with_partition(model, &train, spec, basis, &partition)?;
    let n = model.n_joints;
    let mut rows = Vec::with_capacity(n * orders.len());
    let mut best = vec![None; n];
    for j in 0..n {
        let mut best_err = f64::INFINITY;
        for &k in orders {
            let (tr, te) = &splits[j];
            let row = match solve_step(
                model,
                spec,
                &partition,
                tr,
                j,
                k,
                basis.centers[j],
                &reference.gravity_base,
                StepSolve::Strict,
            ) {
                Ok(sol) => {
                    let x = sol.stacked();
                    let rms = |d: &Dataset| -> Result<f64> {
                        let (w, rhs) = step_system(
                            model,
                            spec,
                            &partition,
                            d,
                            j,
                            k,
                            basis.centers[j],
                            &reference.gravity_base,
                        )?;
                        Ok((&w * &x - rhs).norm() / (d.len() as f64).sqrt())
                    };
                    OrderSweepRow {
                        joint: j,
                        order: k,
                        train_rms: rms(tr)?,
                        test_rms: rms(te)?,
                    }
                }
                Err(Error::Identifiability { .. }) => OrderSweepRow {
                    joint: j,
                    order: k,
                    train_rms: f64::NAN,
                    test_rms: f64::NAN,
                },
                Err(e) => return Err(e),
            };
            if row.test_rms < best_err {
                best_err = row.test_rms;
                best[j] = Some(k);
            }
            rows.push(row);
        }
    }
    Ok(OrderSweep { rows, best })
}

/// Random held-out samples with random direction tags, reusable by studies.
pub fn random_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<DirectionTag>> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..n)
                .map(|_| {
                    if rng.random::<bool>() {
                        DirectionTag::Positive
                    } else {
                        DirectionTag::Negative
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gravity::{tests::pendulum, GravityConstants};
    use DirectionTag::{Negative, Positive};

    fn pendulum_spec(model: &KinematicModel) -> GravityRegressorSpec {
        let probes = crate::plant::random_poses(model, 20, 7).unwrap();
        GravityRegressorSpec::reduce_to_base(model, &probes, GravityConstants::default()).unwrap()
    }

    fn pendulum_data(model: &KinematicModel, beta: &[f64], a_plus: &[f64], a_minus: &[f64]) -> Dataset {
        let spec = pendulum_spec(model);
        let samples = (0..40)
            .map(|k| {
                let q = -1.5 + 3.0 * k as f64 / 39.0;
                let dir = if k % 2 == 0 { Positive } else { Negative };
                let y = spec.base_regressor(model, &[q]).unwrap();
                let a = if dir == Positive { a_plus } else { a_minus };
                let dist: f64 = a.iter().enumerate().map(|(p, c)| c * q.powi(p as i32)).sum();
                Sample {
                    q: vec![q],
                    dir: vec![dir],
                    tau: vec![y[(0, 0)] * beta[0] + y[(0, 1)] * beta[1] + dist],
                }
            })
            .collect();
        Dataset::new(samples, DatasetMeta::default())
    }

    #[test]
    fn one_sample_gives_n_rows() {
        let model = KinematicModel::mtm_default();
        let probes = crate::plant::random_poses(&model, 64, 1).unwrap();
        let spec = GravityRegressorSpec::reduce_to_base(&model, &probes, GravityConstants::default()).unwrap();
        let basis = DisturbanceBasis::mtm_default();
        let ds = Dataset::new(
            vec![Sample {
                q: vec![0.1; 6],
                dir: vec![Positive; 6],
                tau: vec![0.0; 6],
            }],
            DatasetMeta::default(),
        );
        let (w, omega) = stack_regressor(&model, &ds, &spec, &basis).unwrap();
        assert_eq!(w.nrows(), 6);
        assert_eq!(omega.len(), 6);
        assert_eq!(w.ncols(), spec.base_count() + basis.param_count());
    }

    #[test]
    fn empty_dataset_rejected() {
        let model = pendulum();
        let spec = pendulum_spec(&model);
        let basis = DisturbanceBasis::new(vec![1]);
        assert!(matches!(
            stack_regressor(&model, &Dataset::default(), &spec, &basis),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn slse_recovers_pendulum_exactly() {
        let model = pendulum();
        let spec = pendulum_spec(&model);
        let basis = DisturbanceBasis::new(vec![2]);
        let ds = pendulum_data(&model, &[1.5, -0.5], &[0.1, 0.2, 0.05], &[-0.1, 0.3, 0.0]);
        let ps = slse(&model, &ds, &spec, &basis).unwrap();
        for s in &ds.samples {
            let p = ps.predict(&model, &s.q, &s.dir).unwrap();
            assert!((p[0] - s.tau[0]).abs() < 1e-10);
        }
        assert!((ps.disturbance.plus[0][1] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn slse_zero_torque_gives_zero() {
        let model = pendulum();
        let spec = pendulum_spec(&model);
        let basis = DisturbanceBasis::new(vec![1]);
        let ds = pendulum_data(&model, &[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]);
        let ps = slse(&model, &ds, &spec, &basis).unwrap();
        assert!(ps.gravity_base.amax() < 1e-12);
        assert!(ps.provenance.steps[0].residual_norm < 1e-12);
    }

    #[test]
    fn pendulum_partition_is_single_step() {
        let model = pendulum();
        let spec = pendulum_spec(&model);
        let part = build_partition(&model, &spec).unwrap();
        assert_eq!(part.steps, vec![vec![0, 1]]);
    }

    #[test]
    fn mlse_matches_slse_on_pendulum() {
        let model = pendulum();
        let spec = pendulum_spec(&model);
        let basis = DisturbanceBasis::new(vec![2]);
        let ds = pendulum_data(&model, &[1.5, -0.5], &[0.1, 0.2, 0.05], &[-0.1, 0.3, 0.0]);
        let a = slse(&model, &ds, &spec, &basis).unwrap();
        let b = mlse(&model, std::slice::from_ref(&ds), &spec, &basis).unwrap();
        assert!((a.gravity_base - &b.gravity_base).amax() < 1e-9);
        assert_eq!(b.provenance.steps.len(), 1);
    }

    #[test]
    fn underdetermined_step_names_joint() {
        let model = pendulum();
        let spec = pendulum_spec(&model);
        let basis = DisturbanceBasis::new(vec![6]);
        let mut ds = pendulum_data(&model, &[1.0, 0.0], &[0.0], &[0.0]);
        ds.samples.truncate(5);
        let err = mlse(&model, &[ds], &spec, &basis).unwrap_err();
        assert!(matches!(err, Error::Identifiability { joint: Some(0), .. }), "{err}");
    }

    #[test]
    fn symmetric_baseline_has_equal_branches() {
        let model = pendulum();
        let spec = pendulum_spec(&model);
        let ds = pendulum_data(&model, &[1.0, 0.2], &[0.3, 0.1], &[0.1, 0.1]);
        let ps = slse_symmetric_linear(&model, &ds, &spec).unwrap();
        assert_eq!(ps.disturbance.plus, ps.disturbance.minus);
        assert!((ps.disturbance.plus[0][0] - 0.2).abs() < 1e-9);
        assert_eq!(ps.provenance.method, Method::FontanelliLike);
    }

    #[test]
    fn interleaved_split_fractions() {
        let ds = Dataset::new(
            (0..10)
                .map(|k| Sample {
                    q: vec![k as f64],
                    dir: vec![Positive],
                    tau: vec![0.0],
                })
                .collect(),
            DatasetMeta::default(),
        );
        let (tr, te) = ds.split_interleaved(0.3).unwrap();
        assert_eq!((tr.len(), te.len()), (7, 3));
        let te_q: Vec<f64> = te.samples.iter().map(|s| s.q[0]).collect();
        assert_eq!(te_q, vec![3.0, 6.0, 9.0]);
        assert!(ds.split_interleaved(0.0).is_err());
        let one = Dataset::new(ds.samples[..1].to_vec(), DatasetMeta::default());
        assert!(one.split_interleaved(0.3).is_err());
    }

    #[test]
    fn method_labels_round_trip() {
        for m in [Method::Slse, Method::Mlse, Method::FontanelliLike] {
            assert_eq!(Method::parse(m.label()), Some(m));
        }
        assert_eq!(Method::parse("cad"), None);
    }
}
