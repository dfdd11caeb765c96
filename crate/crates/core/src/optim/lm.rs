//! Levenberg-Marquardt for `min Σ f_i(x)²` with sparse Jacobian rows.
//!
//! Damping follows Nielsen's update rule with Marquardt's diagonal scaling;
//! the damped normal equations are solved by Cholesky.

use alloc::vec;
use alloc::vec::Vec;

use crate::qcore::linalg::cholesky_solve;

/// Jacobian stored row by row; each row lists `(column, value)` pairs.
#[derive(Clone, Debug, Default)]
pub struct SparseJacobian {
    n_cols: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseJacobian {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            row_start: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        self.row_start.truncate(1);
        self.cols.clear();
        self.vals.clear();
    }

    /// Adds `v` to entry `col` of the row under construction.
    #[inline]
    pub fn push(&mut self, col: usize, v: f64) {
        debug_assert!(col < self.n_cols);
        self.cols.push(col);
        self.vals.push(v);
    }

    /// Closes the current row.
    #[inline]
    pub fn end_row(&mut self) {
        self.row_start.push(self.cols.len());
    }

    pub fn n_rows(&self) -> usize {
        self.row_start.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Row `r` as `(column, value)` pairs; repeated columns add up.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_start[r], self.row_start[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows() * self.n_cols];
        for r in 0..self.n_rows() {
            for (c, v) in self.row(r) {
                out[r * self.n_cols + c] += v;
            }
        }
        out
    }

    /// `J^T J` (dense, row-major) and `J^T f`.
    fn normal_equations(&self, f: &[f64], jtj: &mut [f64], jtf: &mut [f64]) {
        let n = self.n_cols;
        jtj.iter_mut().for_each(|v| *v = 0.0);
        jtf.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.n_rows() {
            let (a, b) = (self.row_start[r], self.row_start[r + 1]);
            let (cols, vals) = (&self.cols[a..b], &self.vals[a..b]);
            for (k, (&ci, &vi)) in cols.iter().zip(vals).enumerate() {
                jtf[ci] += vi * f[r];
                jtj[ci * n + ci] += vi * vi;
                for (&cj, &vj) in cols[k + 1..].iter().zip(&vals[k + 1..]) {
                    jtj[ci * n + cj] += vi * vj;
                    jtj[cj * n + ci] += vi * vj;
                }
            }
        }
    }
}

pub trait LeastSquaresProblem {
    fn n_vars(&self) -> usize;
    fn n_residuals(&self) -> usize;
    fn residuals(&self, x: &[f64], out: &mut [f64]);
    fn jacobian(&self, x: &[f64], jac: &mut SparseJacobian);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmConfig {
    pub max_iter: usize,
    /// Stop when `‖J^T f‖_∞` falls below this.
    pub gtol: f64,
    /// Stop when the step is below `xtol·(‖x‖ + xtol)`.
    pub xtol: f64,
    /// Stop when `F` falls below this absolute value.
    pub ftol_abs: f64,
    /// Stop after `stall_iters` accepted steps each reducing `F` by less than
    /// this fraction.
    pub ftol_rel: f64,
    pub stall_iters: usize,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            gtol: 1e-12,
            xtol: 1e-15,
            ftol_abs: 1e-30,
            ftol_rel: 1e-10,
            stall_iters: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LmStop {
    Gradient,
    Step,
    Cost,
    Stalled,
    MaxIter,
    Damping,
}

#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    /// `Σ f_i²` at `x`.
    pub cost: f64,
    pub iterations: usize,
    pub stop: LmStop,
}

fn sumsq(f: &[f64]) -> f64 {
    f.iter().map(|v| v * v).sum()
}

pub fn levenberg_marquardt<P: LeastSquaresProblem + ?Sized>(problem: &P, x0: &[f64], cfg: &LmConfig) -> LmOutcome {
    let n = problem.n_vars();
    let m = problem.n_residuals();
    let mut x = x0.to_vec();
    let mut f = vec![0.0; m];
    let mut f_new = vec![0.0; m];
    let mut jac = SparseJacobian::new(n);
    let mut jtj = vec![0.0; n * n];
    let mut jtf = vec![0.0; n];
    let mut scale = vec![0.0f64; n];
    let mut sys = vec![0.0; n * n];
    let mut h = vec![0.0; n];
    let mut x_new = vec![0.0; n];

    problem.residuals(&x, &mut f);
    let mut cost = sumsq(&f);
    let mut mu = 1e-3;
    let mut nu = 2.0;
    let mut stall = 0;
    let mut fresh = true;
    let mut iterations = 0;

    let stop = loop {
        if cost <= cfg.ftol_abs {
            break LmStop::Cost;
        }
        if fresh {
            jac.clear();
            problem.jacobian(&x, &mut jac);
            jac.normal_equations(&f, &mut jtj, &mut jtf);
            for i in 0..n {
                scale[i] = scale[i].max(jtj[i * n + i]).max(1e-300);
            }
            if jtf.iter().fold(0.0f64, |a, v| a.max(v.abs())) <= cfg.gtol {
                break LmStop::Gradient;
            }
            fresh = false;
        }
        if iterations >= cfg.max_iter {
            break LmStop::MaxIter;
        }
        iterations += 1;

        sys.copy_from_slice(&jtj);
        for i in 0..n {
            sys[i * n + i] += mu * scale[i];
            h[i] = -jtf[i];
        }
        if cholesky_solve(&mut sys, n, &mut h).is_none() {
            mu *= nu;
            nu *= 2.0;
            if mu > 1e30 {
                break LmStop::Damping;
            }
            continue;
        }
        let hn = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if hn <= cfg.xtol * (xn + cfg.xtol) {
            break LmStop::Step;
        }
        for i in 0..n {
            x_new[i] = x[i] + h[i];
        }
        problem.residuals(&x_new, &mut f_new);
        let cost_new = sumsq(&f_new);
        // predicted decrease of Σf² for the linear model
        let pred: f64 = (0..n).map(|i| h[i] * (mu * scale[i] * h[i] - jtf[i])).sum();
        let rho = if pred > 0.0 { (cost - cost_new) / pred } else { -1.0 };
        if rho > 0.0 && cost_new.is_finite() {
            let rel = (cost - cost_new) / cost;
            core::mem::swap(&mut x, &mut x_new);
            core::mem::swap(&mut f, &mut f_new);
            cost = cost_new;
            let t = 2.0 * rho - 1.0;
            mu *= (1.0 / 3.0f64).max(1.0 - t * t * t);
            nu = 2.0;
            fresh = true;
            if rel < cfg.ftol_rel {
                stall += 1;
                if stall >= cfg.stall_iters {
                    break LmStop::Stalled;
                }
            } else {
                stall = 0;
            }
        } else {
            mu *= nu;
            nu *= 2.0;
            if mu > 1e30 {
                break LmStop::Damping;
            }
        }
    };
    LmOutcome {
        x,
        cost,
        iterations,
        stop,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rosenbrock as residuals `(1 − x, 10 (y − x²))`.
    struct Rosen;

    impl LeastSquaresProblem for Rosen {
        fn n_vars(&self) -> usize {
            2
        }
        fn n_residuals(&self) -> usize {
            2
        }
        fn residuals(&self, x: &[f64], out: &mut [f64]) {
            out[0] = 1.0 - x[0];
            out[1] = 10.0 * (x[1] - x[0] * x[0]);
        }
        fn jacobian(&self, x: &[f64], jac: &mut SparseJacobian) {
            jac.push(0, -1.0);
            jac.end_row();
            jac.push(0, -20.0 * x[0]);
            jac.push(1, 10.0);
            jac.end_row();
        }
    }

    /// Inconsistent linear system: best cost is positive.
    struct Overdetermined;

    impl LeastSquaresProblem for Overdetermined {
        fn n_vars(&self) -> usize {
            1
        }
        fn n_residuals(&self) -> usize {
            2
        }
        fn residuals(&self, x: &[f64], out: &mut [f64]) {
            out[0] = x[0] - 1.0;
            out[1] = x[0] + 1.0;
        }
        fn jacobian(&self, _: &[f64], jac: &mut SparseJacobian) {
            jac.push(0, 1.0);
            jac.end_row();
            jac.push(0, 1.0);
            jac.end_row();
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let out = levenberg_marquardt(&Rosen, &[-1.2, 1.0], &LmConfig::default());
        assert!(out.cost < 1e-20, "{out:?}");
        assert!((out.x[0] - 1.0).abs() < 1e-10 && (out.x[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn stops_at_positive_minimum() {
        let out = levenberg_marquardt(&Overdetermined, &[5.0], &LmConfig::default());
        assert!((out.cost - 2.0).abs() < 1e-12);
        assert!(out.x[0].abs() < 1e-8);
        assert_ne!(out.stop, LmStop::MaxIter);
    }

    #[test]
    fn normal_equations_match_dense_product() {
        let mut j = SparseJacobian::new(3);
        j.push(0, 1.0);
        j.push(2, 2.0);
        j.end_row();
        j.push(1, -1.0);
        j.push(1, 0.5);
        j.push(0, 3.0);
        j.end_row();
        let f = [0.7, -0.2];
        let dense = j.to_dense();
        let mut jtj = vec![0.0; 9];
        let mut jtf = vec![0.0; 3];
        j.normal_equations(&f, &mut jtj, &mut jtf);
        for a in 0..3 {
            let g: f64 = (0..2).map(|r| dense[r * 3 + a] * f[r]).sum();
            assert!((g - jtf[a]).abs() < 1e-15);
            for b in 0..3 {
                let want: f64 = (0..2).map(|r| dense[r * 3 + a] * dense[r * 3 + b]).sum();
                assert!((want - jtj[a * 3 + b]).abs() < 1e-15, "({a},{b})");
            }
        }
    }
}
