//! Small dense linear-algebra helpers shared by the evolution strategies.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Lower and upper bound of the search box, per coordinate.
pub const BOX_LO: f64 = -5.0;
pub const BOX_HI: f64 = 5.0;

/// Reflects `v` into `[lo, hi]` (mirror at the bounds, repeated as needed).
pub fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    if (lo..=hi).contains(&v) {
        return v;
    }
    let width = hi - lo;
    let period = 2.0 * width;
    let mut t = (v - lo).rem_euclid(period);
    if t > width {
        t = period - t;
    }
    (lo + t).clamp(lo, hi)
}

pub fn reflect_into_box(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = reflect(*v, BOX_LO, BOX_HI);
    }
}

pub fn clip_into_box(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(BOX_LO, BOX_HI);
    }
}

/// Eigendecomposition of a symmetric positive-definite matrix with its
/// eigenvalues clamped into `[min_eig, max_eig]`. Returns the repaired
/// matrix, the eigenvectors and the clamped eigenvalues.
pub fn eigen_repair(c: &DMatrix<f64>, min_eig: f64, max_eig: f64) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let sym = (c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let vals = eig.eigenvalues.map(|l| {
        if l.is_finite() {
            l.clamp(min_eig, max_eig)
        } else {
            min_eig
        }
    });
    let basis = eig.eigenvectors;
    let repaired = &basis * DMatrix::from_diagonal(&vals) * basis.transpose();
    let repaired = (&repaired + repaired.transpose()) * 0.5;
    (repaired, basis, vals)
}

/// Lower-triangular factor `L` with `L Lᵀ = c`, repairing `c` first when the
/// Cholesky factorization fails. Returns the (possibly repaired) matrix and
/// its factor.
pub fn cholesky_or_repair(c: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    if let Some(ch) = c.clone().cholesky() {
        return (c, ch.l());
    }
    let (repaired, _, _) = eigen_repair(&c, 1e-14, 1e14);
    match repaired.clone().cholesky() {
        Some(ch) => (repaired, ch.l()),
        None => {
            let n = c.nrows();
            (DMatrix::identity(n, n), DMatrix::identity(n, n))
        }
    }
}

/// Largest absolute entry of `AᵀA − I`.
pub fn orthogonality_error(a: &DMatrix<f64>) -> f64 {
    let n = a.ncols();
    let d = a.transpose() * a - DMatrix::<f64>::identity(n, n);
    d.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_stays_in_box() {
        assert_eq!(reflect(6.0, -5.0, 5.0), 4.0);
        assert_eq!(reflect(-7.5, -5.0, 5.0), -2.5);
        assert_eq!(reflect(3.0, -5.0, 5.0), 3.0);
        assert_eq!(reflect(26.0, -5.0, 5.0), 4.0);
        for k in -200..200 {
            let v = reflect(k as f64 * 0.37, -5.0, 5.0);
            assert!((-5.0..=5.0).contains(&v));
        }
    }

    #[test]
    fn repair_restores_positive_definiteness() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let (r, l) = cholesky_or_repair(c);
        let back = &l * l.transpose();
        assert!((back - &r).abs().max() < 1e-12);
        let (_, _, vals) = eigen_repair(&r, 1e-14, 1e14);
        assert!(vals.iter().all(|&v| v >= 1e-14));
    }
}
