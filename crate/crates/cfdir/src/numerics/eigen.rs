//! Cyclic Jacobi eigendecomposition for symmetric matrices.

use crate::error::{Error, Result};
use crate::numerics::linalg::{SymMatrix, Vector};

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_FACTOR: f64 = 1e-12;

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Pairs come back sorted by eigenvalue magnitude, descending, with ties
/// broken by the original (pre-sort) index so the output is deterministic.
/// Eigenvectors are unit-norm and mutually orthogonal. Fails with the
/// remaining off-diagonal residual if the sweep limit is reached, which for
/// symmetric input does not happen in practice.
pub fn sym_eigen(h: &SymMatrix) -> Result<(Vector, Vec<Vector>)> {
    h.check_finite()?;
    let n = h.order();
    let threshold = OFF_DIAGONAL_FACTOR * h.frobenius_norm();

    // dense working copy; rotations touch full rows and columns
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = h.get(i, j);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut residual = off(&a);
    let mut converged = residual <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                // smaller-magnitude rotation root keeps the method stable
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        residual = off(&a);
        converged = residual <= threshold;
    }
    if !converged {
        return Err(Error::NonConvergence {
            sweeps: MAX_SWEEPS,
            residual,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (mi, mj) = (a[i * n + i].abs(), a[j * n + j].abs());
        mj.partial_cmp(&mi).unwrap().then(i.cmp(&j))
    });

    let eigenvalues = Vector::new(order.iter().map(|&i| a[i * n + i]).collect())?;
    let mut eigenvectors = Vec::with_capacity(n);
    for &col in &order {
        let mut vec: Vec<f64> = (0..n).map(|row| v[row * n + col]).collect();
        let norm = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut vec {
            *x /= norm;
        }
        eigenvectors.push(Vector::new(vec)?);
    }
    Ok((eigenvalues, eigenvectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::Rng;

    fn diag(values: &[f64]) -> SymMatrix {
        let mut m = SymMatrix::zeros(values.len()).unwrap();
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    fn random_sym(n: usize, rng: &mut Rng) -> SymMatrix {
        let mut m = SymMatrix::zeros(n).unwrap();
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, rng.next_gaussian());
            }
        }
        m
    }

    fn reconstruction_error(h: &SymMatrix, vals: &Vector, vecs: &[Vector]) -> f64 {
        let n = h.order();
        let mut err = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut r = 0.0;
                for k in 0..n {
                    r += vecs[k][i] * vals[k] * vecs[k][j];
                }
                let d = r - h.get(i, j);
                err += d * d;
            }
        }
        err.sqrt()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let h = diag(&[1.0, 1.0, 1.0, 1.0]);
        let (vals, vecs) = sym_eigen(&h).unwrap();
        for i in 0..4 {
            assert!((vals[i] - 1.0).abs() < 1e-14);
            for j in 0..4 {
                let d = vecs[i].dot(&vecs[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sorted_by_magnitude_descending() {
        let (vals, _) = sym_eigen(&diag(&[3.0, -5.0, 1.0])).unwrap();
        assert_eq!(vals.as_slice(), &[-5.0, 3.0, 1.0]);
    }

    #[test]
    fn ties_keep_original_index_order() {
        let (vals, vecs) = sym_eigen(&diag(&[2.0, -2.0, 2.0])).unwrap();
        assert_eq!(vals.as_slice(), &[2.0, -2.0, 2.0]);
        // eigenvectors of a diagonal matrix stay axis-aligned
        assert!((vecs[0][0].abs() - 1.0).abs() < 1e-14);
        assert!((vecs[1][1].abs() - 1.0).abs() < 1e-14);
        assert!((vecs[2][2].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_sixteen_reconstructs() {
        let mut rng = Rng::new(21);
        for _ in 0..5 {
            let h = random_sym(16, &mut rng);
            let (vals, vecs) = sym_eigen(&h).unwrap();
            let err = reconstruction_error(&h, &vals, &vecs);
            assert!(err <= 1e-8 * h.frobenius_norm(), "residual {err}");
        }
    }

    #[test]
    fn orthonormality_and_ordering_invariants() {
        let mut rng = Rng::new(22);
        let h = random_sym(24, &mut rng);
        let (vals, vecs) = sym_eigen(&h).unwrap();
        for i in 0..24 {
            assert!((vecs[i].norm() - 1.0).abs() <= 1e-12);
            for j in 0..i {
                assert!(vecs[i].dot(&vecs[j]).abs() <= 1e-9);
            }
            if i > 0 {
                assert!(vals[i - 1].abs() >= vals[i].abs());
            }
        }
    }

    #[test]
    fn zero_matrix_is_fine() {
        let (vals, vecs) = sym_eigen(&SymMatrix::zeros(3).unwrap()).unwrap();
        assert_eq!(vals.as_slice(), &[0.0, 0.0, 0.0]);
        assert_eq!(vecs.len(), 3);
    }

    /// Larger order closer to the intended operating range; converges in a
    /// handful of sweeps.
    #[test]
    fn one_twenty_eight_reconstructs() {
        let mut rng = Rng::new(23);
        let h = random_sym(128, &mut rng);
        let (vals, vecs) = sym_eigen(&h).unwrap();
        let err = reconstruction_error(&h, &vals, &vecs);
        assert!(err <= 1e-8 * h.frobenius_norm(), "residual {err}");
    }

    #[test]
    fn one_by_one() {
        let (vals, vecs) = sym_eigen(&diag(&[-7.0])).unwrap();
        assert_eq!(vals.as_slice(), &[-7.0]);
        assert_eq!(vecs[0].as_slice(), &[1.0]);
    }
}
