//! Direction-dependent polynomial model of cable and spring disturbance
//! torques.
//!
//! Each joint carries two polynomials in its own angle, one active while the
//! joint moves in the positive direction and one while it moves in the
//! negative direction. Parameter layout follows `[a_1+ .. a_n+, a_1- .. a_n-]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Motion direction of one joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirectionTag {
    Positive,
    Negative,
}

impl DirectionTag {
    /// Step function on a joint difference; zero maps to `Negative`.
    pub fn from_delta(dq: f64) -> Self {
        if dq > 0.0 {
            DirectionTag::Positive
        } else {
            DirectionTag::Negative
        }
    }

    /// `u(dq)`: 1 for positive, 0 for negative.
    pub fn activation(self) -> f64 {
        match self {
            DirectionTag::Positive => 1.0,
            DirectionTag::Negative => 0.0,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            DirectionTag::Positive => 1.0,
            DirectionTag::Negative => -1.0,
        }
    }

    pub fn from_sign(s: i64) -> Option<Self> {
        match s {
            1 => Some(DirectionTag::Positive),
            -1 => Some(DirectionTag::Negative),
            _ => None,
        }
    }
}

/// `[1, q, q^2, ..., q^k]`.
pub fn phi(q: f64, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k + 1];
    phi_into(q, &mut out);
    out
}

pub(crate) fn phi_into(q: f64, out: &mut [f64]) {
    let mut p = 1.0;
    for v in out.iter_mut() {
        *v = p;
        p *= q;
    }
}

fn poly_eval(coeffs: &[f64], q: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * q + c)
}

/// Polynomial orders and optional expansion centers per joint.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceBasis {
    pub orders: Vec<usize>,
    /// The polynomial variable of joint `i` is `q_i - centers[i]`.
    pub centers: Vec<f64>,
}

impl DisturbanceBasis {
    pub fn new(orders: Vec<usize>) -> Self {
        let n = orders.len();
        Self {
            orders,
            centers: vec![0.0; n],
        }
    }

    pub fn with_centers(orders: Vec<usize>, centers: Vec<f64>) -> Result<Self> {
        if orders.len() != centers.len() {
            return Err(Error::Dimension(format!(
                "{} orders but {} centers",
                orders.len(),
                centers.len()
            )));
        }
        Ok(Self { orders, centers })
    }

    /// Orders found best for the MTM: 4 everywhere, 1 for joint 2.
    pub fn mtm_default() -> Self {
        Self::new(vec![4, 1, 4, 4, 4, 4])
    }

    pub fn n_joints(&self) -> usize {
        self.orders.len()
    }

    /// Coefficients per direction block, `sum(k_i + 1)`.
    pub fn block_len(&self) -> usize {
        self.orders.iter().map(|k| k + 1).sum()
    }

    /// Total disturbance parameter count (both directions).
    pub fn param_count(&self) -> usize {
        2 * self.block_len()
    }

    /// Offset of joint `i`'s coefficients inside one direction block.
    pub fn offset(&self, joint: usize) -> usize {
        self.orders[..joint].iter().map(|k| k + 1).sum()
    }

    pub(crate) fn var(&self, joint: usize, q: f64) -> f64 {
        q - self.centers[joint]
    }
}

/// Identified or true polynomial disturbance coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyDisturbance {
    pub basis: DisturbanceBasis,
    pub plus: Vec<Vec<f64>>,
    pub minus: Vec<Vec<f64>>,
}

impl PolyDisturbance {
    pub fn zeros(basis: DisturbanceBasis) -> Self {
        let plus: Vec<Vec<f64>> = basis.orders.iter().map(|&k| vec![0.0; k + 1]).collect();
        Self {
            minus: plus.clone(),
            plus,
            basis,
        }
    }

    pub fn new(basis: DisturbanceBasis, plus: Vec<Vec<f64>>, minus: Vec<Vec<f64>>) -> Result<Self> {
        let n = basis.n_joints();
        if plus.len() != n || minus.len() != n {
            return Err(Error::Dimension(format!(
                "coefficient sets for {}/{} joints, basis has {n}",
                plus.len(),
                minus.len()
            )));
        }
        for (i, &k) in basis.orders.iter().enumerate() {
            if plus[i].len() != k + 1 || minus[i].len() != k + 1 {
                return Err(Error::Dimension(format!(
                    "joint {} has order {k} but {} / {} coefficients",
                    i + 1,
                    plus[i].len(),
                    minus[i].len()
                )));
            }
        }
        if plus.iter().chain(&minus).flatten().any(|c| !c.is_finite()) {
            return Err(Error::config("disturbance", "non-finite coefficient"));
        }
        Ok(Self { basis, plus, minus })
    }

    /// Splits a stacked `[beta+, beta-]` vector.
    pub fn from_stacked(basis: DisturbanceBasis, beta: &DVector<f64>) -> Result<Self> {
        if beta.len() != basis.param_count() {
            return Err(Error::Dimension(format!(
                "{} disturbance parameters, basis needs {}",
                beta.len(),
                basis.param_count()
            )));
        }
        let half = basis.block_len();
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for (i, &k) in basis.orders.iter().enumerate() {
            let o = basis.offset(i);
            plus.push(beta.rows(o, k + 1).iter().copied().collect());
            minus.push(beta.rows(half + o, k + 1).iter().copied().collect());
        }
        Self::new(basis, plus, minus)
    }

    pub fn to_stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.basis.param_count(),
            self.plus.iter().chain(&self.minus).flatten().copied(),
        )
    }

    pub fn n_joints(&self) -> usize {
        self.basis.n_joints()
    }

    /// `phi^T a+` or `phi^T a-` for one joint.
    pub fn tau_ext_joint(&self, joint: usize, q: f64, dir: DirectionTag) -> f64 {
        let x = self.basis.var(joint, q);
        match dir {
            DirectionTag::Positive => poly_eval(&self.plus[joint], x),
            DirectionTag::Negative => poly_eval(&self.minus[joint], x),
        }
    }

    /// Configuration-dependent part of one joint: mean of both branches.
    pub fn tau_ec_joint(&self, joint: usize, q: f64) -> f64 {
        let x = self.basis.var(joint, q);
        0.5 * (poly_eval(&self.plus[joint], x) + poly_eval(&self.minus[joint], x))
    }

    /// Direction-dependent part of one joint: half the branch difference.
    pub fn tau_ed_joint(&self, joint: usize, q: f64) -> f64 {
        let x = self.basis.var(joint, q);
        0.5 * (poly_eval(&self.plus[joint], x) - poly_eval(&self.minus[joint], x))
    }

    pub fn torque(&self, q: &[f64], dirs: &[DirectionTag]) -> DVector<f64> {
        DVector::from_iterator(
            self.n_joints(),
            (0..self.n_joints()).map(|i| self.tau_ext_joint(i, q[i], dirs[i])),
        )
    }
}

/// Diagonal activation matrix: `k_i + 1` copies of `u(dq_i)` per joint.
pub fn activation_matrix(dq: &[f64], orders: &[usize]) -> DMatrix<f64> {
    let diag: Vec<f64> = dq
        .iter()
        .zip(orders)
        .flat_map(|(&d, &k)| std::iter::repeat_n(DirectionTag::from_delta(d).activation(), k + 1))
        .collect();
    DMatrix::from_diagonal(&DVector::from_vec(diag))
}

/// Block-diagonal `Phi(q)`, `n x sum(k_i + 1)`.
pub fn phi_matrix(q: &[f64], basis: &DisturbanceBasis) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(basis.n_joints(), basis.block_len());
    for i in 0..basis.n_joints() {
        let o = basis.offset(i);
        let k = basis.orders[i];
        let row = phi(basis.var(i, q[i]), k);
        for (c, v) in row.into_iter().enumerate() {
            m[(i, o + c)] = v;
        }
    }
    m
}

/// `[Phi U, Phi (1 - U)]` for joint differences `dq`.
pub fn disturbance_regressor(q: &[f64], dq: &[f64], basis: &DisturbanceBasis) -> DMatrix<f64> {
    let dirs: Vec<DirectionTag> = dq.iter().map(|&d| DirectionTag::from_delta(d)).collect();
    disturbance_regressor_tagged(q, &dirs, basis)
}

/// Same as [`disturbance_regressor`] with explicit direction tags.
pub fn disturbance_regressor_tagged(q: &[f64], dirs: &[DirectionTag], basis: &DisturbanceBasis) -> DMatrix<f64> {
    let half = basis.block_len();
    let mut m = DMatrix::zeros(basis.n_joints(), 2 * half);
    for i in 0..basis.n_joints() {
        let o = basis.offset(i);
        let shift = match dirs[i] {
            DirectionTag::Positive => 0,
            DirectionTag::Negative => half,
        };
        let row = phi(basis.var(i, q[i]), basis.orders[i]);
        for (c, v) in row.into_iter().enumerate() {
            m[(i, shift + o + c)] = v;
        }
    }
    m
}
