//! Factorizations and matrix functions over [`ComplexMatrix`], plus the two
//! small real kernels the optimizers need (Cholesky, Jacobi eigen).

use alloc::vec;
use alloc::vec::Vec;

use super::matrix::{c, ComplexMatrix, C64};
use crate::{QpvError, Result};

/// LU factorization with partial pivoting, stored compactly.
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    /// Ratio of the largest to the smallest pivot modulus, a cheap
    /// conditioning estimate.
    pivot_ratio: f64,
}

impl Lu {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        assert!(a.is_square());
        let n = a.rows();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let (mut pmax, mut pmin) = (0.0_f64, f64::INFINITY);
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in k + 1..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(QpvError::Singular);
            }
            pmax = pmax.max(best);
            pmin = pmin.min(best);
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                for j in k + 1..n {
                    let t = lu[k * n + j];
                    lu[i * n + j] -= f * t;
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            pivot_ratio: if n == 0 { 1.0 } else { pmax / pmin },
        })
    }

    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    /// Solves `A X = B` for a matrix right-hand side.
    pub fn solve(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.n;
        assert_eq!(b.rows(), n);
        let m = b.cols();
        let mut x = ComplexMatrix::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                x[(i, j)] = b[(self.perm[i], j)];
            }
        }
        for j in 0..m {
            for i in 0..n {
                let mut s = x[(i, j)];
                for k in 0..i {
                    s -= self.lu[i * n + k] * x[(k, j)];
                }
                x[(i, j)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, j)];
                for k in i + 1..n {
                    s -= self.lu[i * n + k] * x[(k, j)];
                }
                x[(i, j)] = s / self.lu[i * n + i];
            }
        }
        x
    }

    pub fn inverse(&self) -> ComplexMatrix {
        self.solve(&ComplexMatrix::identity(self.n))
    }

    pub fn det(&self) -> C64 {
        let mut d = c(1.0, 0.0);
        for i in 0..self.n {
            d *= self.lu[i * self.n + i];
        }
        // parity of the permutation
        let mut seen = vec![false; self.n];
        let mut swaps = 0;
        for i in 0..self.n {
            if seen[i] {
                continue;
            }
            let mut j = i;
            let mut len = 0;
            while !seen[j] {
                seen[j] = true;
                j = self.perm[j];
                len += 1;
            }
            swaps += len - 1;
        }
        if swaps % 2 == 1 {
            -d
        } else {
            d
        }
    }
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(Lu::new(a)?.inverse())
}

pub fn det(a: &ComplexMatrix) -> Result<C64> {
    Ok(Lu::new(a)?.det())
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    assert!(a.is_square());
    let n = a.rows();
    let norm = a.norm_inf();
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a.scale_real(scale);
    // ‖x‖ ≤ 1/4: 18 terms put the truncation error far below 1e-16
    let mut result = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=18 {
        term = term.matmul(&x).scale_real(1.0 / k as f64);
        result = &result + &term;
        if term.max_abs() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// Unitary polar factor by the scaled Newton iteration `X ← (ζX + X^{-†}/ζ)/2`.
pub fn polar_unitary(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    assert!(a.is_square());
    let mut x = a.clone();
    for iter in 0..100 {
        let inv_adj = inverse(&x)?.adjoint();
        // Frobenius-norm scaling speeds up the early iterations
        let zeta = if iter < 8 {
            (inv_adj.norm_fro() / x.norm_fro()).sqrt()
        } else {
            1.0
        };
        let next = &x.scale_real(0.5 * zeta) + &inv_adj.scale_real(0.5 / zeta);
        let delta = (&next - &x).max_abs();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    Ok(x)
}

/// Solves the symmetric positive definite system `A x = b` (row-major `A`)
/// in place; returns `None` when `A` is not numerically positive definite.
pub fn cholesky_solve(a: &mut [f64], n: usize, b: &mut [f64]) -> Option<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Some(())
}

/// Cyclic Jacobi eigen-decomposition of a real symmetric matrix.
/// Returns eigenvalues and the row-major orthogonal matrix whose columns
/// are the eigenvectors.
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = cs * mkp - sn * mkq;
                    m[k * n + q] = sn * mkp + cs * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = cs * mpk - sn * mqk;
                    m[q * n + k] = sn * mpk + cs * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = cs * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i * n + i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::gates;

    fn sample(n: usize, seed: u64) -> ComplexMatrix {
        // small deterministic LCG, enough for fixtures
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        ComplexMatrix::from_fn(n, n, |_, _| c(next(), next()))
    }

    #[test]
    fn inverse_round_trips() {
        let a = sample(5, 3);
        let ainv = inverse(&a).unwrap();
        assert!((&a.matmul(&ainv) - &ComplexMatrix::identity(5)).max_abs() < 1e-12);
        assert!(matches!(inverse(&ComplexMatrix::zeros(3, 3)), Err(QpvError::Singular)));
    }

    #[test]
    fn determinant_of_known_matrices() {
        assert!((det(&gates::cnot()).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((det(&gates::h()).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
        let d = det(&gates::y().kron(&gates::i2())).unwrap();
        assert!((d - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let a = 0.7;
        let gen = ComplexMatrix::from_real(2, 2, &[0.0, -a, a, 0.0]).unwrap();
        let r = expm(&gen);
        let expected = ComplexMatrix::from_real(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()]).unwrap();
        assert!((&r - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn expm_of_diagonal_and_large_norm() {
        let d = ComplexMatrix::from_fn(3, 3, |i, j| if i == j { c(0.0, 3.0 * i as f64 + 1.0) } else { c(0.0, 0.0) });
        let e = expm(&d);
        for i in 0..3 {
            let phi = 3.0 * i as f64 + 1.0;
            assert!((e[(i, i)] - c(phi.cos(), phi.sin())).norm() < 1e-13);
        }
    }

    #[test]
    fn polar_projection_is_unitary_and_fixes_unitaries() {
        let a = sample(4, 11);
        let u = polar_unitary(&a).unwrap();
        assert!(u.unitarity_deviation() < 1e-13);
        let h = gates::h().kron(&gates::y());
        assert!((&polar_unitary(&h).unwrap() - &h).max_abs() < 1e-14);
        // a real input stays real
        let r = ComplexMatrix::from_real(2, 2, &[1.0, 0.3, -0.2, 0.9]).unwrap();
        assert!(polar_unitary(&r).unwrap().is_real(1e-15));
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let mut a = vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let orig = a.clone();
        let mut b = vec![1.0, 2.0, 3.0];
        cholesky_solve(&mut a, 3, &mut b).unwrap();
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| orig[i * 3 + j] * b[j]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-14);
        }
        let mut neg = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_solve(&mut neg, 2, &mut [0.0, 0.0]).is_none());
    }

    #[test]
    fn jacobi_diagonalizes_symmetric_matrix() {
        let a = [2.0, 1.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 5.0, 0.5, 0.0, 0.0, 0.5, 5.0];
        let (vals, vecs) = jacobi_eigen(&a, 4);
        let mut sorted = vals.clone();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (got, want) in sorted.iter().zip([1.0, 3.0, 4.5, 5.5]) {
            assert!((got - want).abs() < 1e-13);
        }
        // A v_k = λ_k v_k
        for k in 0..4 {
            for i in 0..4 {
                let av: f64 = (0..4).map(|j| a[i * 4 + j] * vecs[j * 4 + k]).sum();
                assert!((av - vals[k] * vecs[i * 4 + k]).abs() < 1e-13);
            }
        }
    }
}
