//! Limited-memory BFGS with backtracking (Armijo) line search.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// A smooth-enough objective. `eval` writes the gradient and returns the
/// value, or `None` when the point cannot be evaluated reliably.
pub trait Objective {
    fn dim(&self) -> usize;
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Option<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when `‖∇f‖_∞` falls below this.
    pub gtol: f64,
    /// Stop after `stall_iters` iterations each improving `f` by less than
    /// `ftol·max(|f|, 1e-12)`.
    pub ftol: f64,
    pub stall_iters: usize,
    /// Stop once `f` is at or below this value.
    pub f_target: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 1000,
            gtol: 1e-10,
            ftol: 1e-12,
            stall_iters: 5,
            f_target: f64::NEG_INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LbfgsStop {
    Gradient,
    Stalled,
    LineSearch,
    MaxIter,
    Target,
    /// The objective refused a point; the caller should resample.
    Exceptional,
}

#[derive(Clone, Debug)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: LbfgsStop,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn lbfgs<O: Objective + ?Sized>(obj: &mut O, x0: &[f64], cfg: &LbfgsConfig) -> LbfgsOutcome {
    let n = obj.dim();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut evaluations = 1;
    let Some(mut f) = obj.eval(&x, &mut g) else {
        return LbfgsOutcome {
            x,
            f: f64::INFINITY,
            iterations: 0,
            evaluations,
            stop: LbfgsStop::Exceptional,
        };
    };
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut dir = vec![0.0; n];
    let mut alpha = vec![0.0; cfg.memory];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut stall = 0;
    let mut iterations = 0;

    let stop = loop {
        if f <= cfg.f_target {
            break LbfgsStop::Target;
        }
        if inf_norm(&g) <= cfg.gtol {
            break LbfgsStop::Gradient;
        }
        if iterations >= cfg.max_iter {
            break LbfgsStop::MaxIter;
        }
        iterations += 1;

        // two-loop recursion
        dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi);
        for (k, (s, y, rho)) in hist.iter().enumerate().rev() {
            alpha[k] = rho * dot(s, &dir);
            dir.iter_mut().zip(y).for_each(|(d, yi)| *d -= alpha[k] * yi);
        }
        let gamma = match hist.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / inf_norm(&g).max(1.0),
        };
        dir.iter_mut().for_each(|d| *d *= gamma);
        for (k, (s, y, rho)) in hist.iter().enumerate() {
            let beta = rho * dot(y, &dir);
            dir.iter_mut().zip(s).for_each(|(d, si)| *d += (alpha[k] - beta) * si);
        }
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            hist.clear();
            dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi / inf_norm(&g).max(1.0));
            slope = dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            evaluations += 1;
            match obj.eval(&x_new, &mut g_new) {
                None => break,
                Some(fv) if fv <= f + 1e-4 * step * slope => {
                    accepted = Some(fv);
                    break;
                }
                Some(_) => step *= 0.5,
            }
        }
        let Some(f_new) = accepted else {
            if obj.eval(&x_new, &mut g_new).is_none() {
                break LbfgsStop::Exceptional;
            }
            if hist.is_empty() {
                break LbfgsStop::LineSearch;
            }
            hist.clear();
            continue;
        };

        let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if hist.len() == cfg.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let improvement = f - f_new;
        core::mem::swap(&mut x, &mut x_new);
        core::mem::swap(&mut g, &mut g_new);
        f = f_new;
        if improvement <= cfg.ftol * f.abs().max(1e-12) {
            stall += 1;
            if stall >= cfg.stall_iters {
                break LbfgsStop::Stalled;
            }
        } else {
            stall = 0;
        }
    };
    LbfgsOutcome {
        x,
        f,
        iterations,
        evaluations,
        stop,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosen;

    impl Objective for Rosen {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&mut self, x: &[f64], g: &mut [f64]) -> Option<f64> {
            let (a, b) = (1.0 - x[0], x[1] - x[0] * x[0]);
            g[0] = -2.0 * a - 400.0 * x[0] * b;
            g[1] = 200.0 * b;
            Some(a * a + 100.0 * b * b)
        }
    }

    struct Quadratic(Vec<f64>);

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn eval(&mut self, x: &[f64], g: &mut [f64]) -> Option<f64> {
            let mut f = 0.0;
            for (i, (&xi, &w)) in x.iter().zip(&self.0).enumerate() {
                g[i] = 2.0 * w * xi;
                f += w * xi * xi;
            }
            Some(f)
        }
    }

    struct Refuses;

    impl Objective for Refuses {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&mut self, _: &[f64], _: &mut [f64]) -> Option<f64> {
            None
        }
    }

    #[test]
    fn minimizes_rosenbrock() {
        let out = lbfgs(&mut Rosen, &[-1.2, 1.0], &LbfgsConfig::default());
        assert!(out.f < 1e-14, "{out:?}");
    }

    #[test]
    fn minimizes_ill_conditioned_quadratic() {
        let w: Vec<f64> = (0..20).map(|i| 10f64.powi(i % 5)).collect();
        let x0 = vec![1.0; 20];
        let out = lbfgs(&mut Quadratic(w), &x0, &LbfgsConfig::default());
        assert!(out.f < 1e-16, "{out:?}");
    }

    #[test]
    fn reports_exceptional_start() {
        let out = lbfgs(&mut Refuses, &[0.0], &LbfgsConfig::default());
        assert_eq!(out.stop, LbfgsStop::Exceptional);
    }
}
