//! Limited-memory BFGS for smooth unconstrained objectives.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the gradient infinity norm falls below this.
    pub grad_tol: f64,
    /// Stop when the relative objective decrease falls below this.
    pub f_tol: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig { memory: 8, max_iter: 500, grad_tol: 1e-6, f_tol: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which returns the objective and writes the gradient.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, cfg: LbfgsConfig) -> LbfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut alpha = vec![0.0; cfg.memory];

    for it in 0..cfg.max_iter {
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm < cfg.grad_tol {
            return LbfgsResult { x, f: fx, iterations: it, converged: true };
        }
        // two-loop recursion
        dir.iter_mut().zip(&g).for_each(|(d, gv)| *d = -gv);
        for (i, (s, y, rho)) in hist.iter().enumerate().rev() {
            let a = rho * dot(s, &dir);
            alpha[i] = a;
            dir.iter_mut().zip(y).for_each(|(d, yv)| *d -= a * yv);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            dir.iter_mut().for_each(|d| *d *= gamma);
        } else {
            let scale = 1.0 / gnorm.max(1.0);
            dir.iter_mut().for_each(|d| *d *= scale);
        }
        for (i, (s, y, rho)) in hist.iter().enumerate() {
            let b = rho * dot(y, &dir);
            dir.iter_mut().zip(s).for_each(|(d, sv)| *d += (alpha[i] - b) * sv);
        }
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            // not a descent direction; restart from steepest descent
            hist.clear();
            dir.iter_mut().zip(&g).for_each(|(d, gv)| *d = -gv / gnorm.max(1.0));
            slope = dot(&g, &dir);
        }
        // backtracking Armijo search
        let mut step = 1.0;
        let mut accepted = false;
        let mut f_new = fx;
        for _ in 0..60 {
            x_new.iter_mut().zip(&x).zip(&dir).for_each(|((xn, xv), d)| *xn = xv + step * d);
            f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return LbfgsResult { x, f: fx, iterations: it, converged: false };
        }
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if hist.len() == cfg.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let rel = (fx - f_new).abs() / fx.abs().max(f_new.abs()).max(1.0);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        if rel < cfg.f_tol {
            return LbfgsResult { x, f: fx, iterations: it + 1, converged: true };
        }
    }
    LbfgsResult { x, f: fx, iterations: cfg.max_iter, converged: false }
}
