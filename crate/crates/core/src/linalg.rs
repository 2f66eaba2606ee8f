//! Small dense least-squares helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative factor of the numerical-rank tolerance.
pub const RANK_RTOL: f64 = 1e-8;

/// Rank tolerance `sigma_max * 1e-8 * max(rows, cols)`.
pub fn rank_tolerance(sigma_max: f64, rows: usize, cols: usize) -> f64 {
    sigma_max * RANK_RTOL * rows.max(cols) as f64
}

/// Singular values sorted descending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Numerical rank at the standard tolerance.
pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let s = singular_values(a);
    let Some(&smax) = s.first() else { return 0 };
    let tol = rank_tolerance(smax, a.nrows(), a.ncols());
    s.iter().filter(|&&v| v > tol).count()
}

/// Ratio of extreme singular values; infinite when the matrix is numerically
/// rank deficient (fewer rows than columns counts as deficient).
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    let Some(&smax) = s.first() else {
        return f64::INFINITY;
    };
    if smax == 0.0 || a.nrows() < a.ncols() {
        return f64::INFINITY;
    }
    let smin = *s.last().unwrap();
    if smin <= rank_tolerance(smax, a.nrows(), a.ncols()) {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Least-squares solution of a full-column-rank system via Householder QR.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub condition: f64,
}

/// Solves `min |A x - b|` by QR. Columns are equilibrated to unit norm before
/// the rank decision, so polynomial scaling alone never counts as deficiency.
/// Fails with the null-space directions when the equilibrated matrix is
/// numerically rank deficient. `condition` is reported for the raw `A`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, labels: &dyn Fn(usize) -> String) -> Result<LstsqSolution> {
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "regressor has {} rows, torque vector {}",
            a.nrows(),
            b.len()
        )));
    }
    if a.ncols() == 0 {
        return Ok(LstsqSolution {
            x: DVector::zeros(0),
            residual_norm: b.norm(),
            condition: 1.0,
        });
    }
    let scale: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let mut scaled = a.clone();
    for (j, &s) in scale.iter().enumerate() {
        if s > 0.0 {
            scaled.column_mut(j).unscale_mut(s);
        }
    }
    if scale.contains(&0.0) || !condition_number(&scaled).is_finite() {
        return Err(Error::Identifiability {
            joint: None,
            detail: null_space_report(&scaled, labels),
        });
    }
    let qr = scaled.qr();
    let qtb = qr.q().transpose() * b;
    let mut x = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Identifiability {
            joint: None,
            detail: "singular triangular factor".into(),
        })?;
    for (xi, s) in x.iter_mut().zip(&scale) {
        *xi /= s;
    }
    let residual_norm = (a * &x - b).norm();
    Ok(LstsqSolution {
        x,
        residual_norm,
        condition: condition_number(a),
    })
}

/// Minimum-norm least-squares solution by SVD, for rank-deficient studies.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DVector::zeros(a.ncols());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = rank_tolerance(smax, a.nrows(), a.ncols());
    svd.solve(b, tol).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Describes the numerically null right-singular directions of `a`.
pub fn null_space_report(a: &DMatrix<f64>, labels: &dyn Fn(usize) -> String) -> String {
    let n = a.ncols();
    if a.nrows() < n {
        return format!("{} rows cannot determine {} parameters", a.nrows(), n);
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let tol = rank_tolerance(smax, a.nrows(), n);
    let mut dirs = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            continue;
        }
        let row = v_t.row(k);
        let mut idx: Vec<usize> = (0..n).filter(|&c| row[c].abs() > 0.1).collect();
        idx.sort_by(|&x, &y| row[y].abs().total_cmp(&row[x].abs()));
        let terms: Vec<String> = idx
            .iter()
            .take(4)
            .map(|&c| format!("{:+.3}*{}", row[c], labels(c)))
            .collect();
        dirs.push(format!("[{}]", terms.join(" ")));
    }
    format!("unidentifiable parameter directions: {}", dirs.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_condition_is_one() {
        let a = DMatrix::<f64>::identity(4, 4);
        assert!((condition_number(&a) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicated_column_is_infinite() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert_eq!(condition_number(&a), f64::INFINITY);
        assert_eq!(numerical_rank(&a), 1);
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let x = DVector::from_vec(vec![0.5, -2.0]);
        let b = &a * &x;
        let sol = lstsq(&a, &b, &|c| format!("x{c}")).unwrap();
        assert!((sol.x - x).norm() < 1e-12);
        assert!(sol.residual_norm < 1e-12);
    }

    #[test]
    fn lstsq_names_null_directions() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = lstsq_min_norm(&a, &b);
        assert!((&a * &x - &b).norm() < 1e-12);
        let err = lstsq(&a, &b, &|c| format!("p{c}")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("p0") && msg.contains("p1"), "{msg}");
    }
}
