//! Bounded Levenberg–Marquardt least squares.
//!
//! Marquardt diagonal scaling, box constraints handled by projection plus an
//! active set (parameters pinned at a bound with an outward gradient are
//! frozen for that iteration), and per-parameter fixing. A trial step is
//! accepted only if it lowers the sum of squares, so the accepted history is
//! monotone.

use nalgebra::{DMatrix, DVector};

/// A residual vector with an analytic Jacobian.
pub trait LeastSquaresProblem {
    fn n_params(&self) -> usize;

    fn n_residuals(&self) -> usize;

    fn residuals(&self, params: &[f64], out: &mut [f64]);

    /// Row i, column j: ∂r_i/∂p_j.
    fn jacobian(&self, params: &[f64], jac: &mut DMatrix<f64>);

    /// Problem-specific feasibility repair applied to every trial point.
    /// Must leave non-free parameters untouched.
    fn project(&self, _params: &mut [f64], _free: &[bool]) {}
}

#[derive(Debug, Clone)]
pub struct LmSettings {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub damping_init: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub free: Vec<bool>,
}

impl LmSettings {
    pub fn unbounded(n: usize) -> Self {
        LmSettings {
            max_iterations: 200,
            rel_tolerance: 1e-8,
            damping_init: 1e-3,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            free: vec![true; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative decrease below tolerance on consecutive accepted steps.
    RelativeDecrease,
    /// Scaled projected gradient below 1e-10.
    SmallGradient,
    /// Residual vanished.
    ExactFit,
    /// No representable descent step exists from the current point.
    Stalled,
    MaxIterations,
    NonFinite,
}

impl Termination {
    pub fn is_converged(self) -> bool {
        matches!(
            self,
            Termination::RelativeDecrease
                | Termination::SmallGradient
                | Termination::ExactFit
                | Termination::Stalled
        )
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub ssr: f64,
    /// (JᵀJ)⁺ at `params`, zero in rows/columns of non-free parameters.
    pub normal_inverse: DMatrix<f64>,
    pub termination: Termination,
    pub iterations: usize,
    /// Sum of squares after the start point and after every accepted step.
    pub history: Vec<f64>,
}

impl LmOutcome {
    pub fn converged(&self) -> bool {
        self.termination.is_converged()
    }
}

const REL_STEPS_REQUIRED: u32 = 3;
const GRADIENT_TOLERANCE: f64 = 1e-10;
const MAX_DAMPING: f64 = 1e20;

fn clamp_free(p: &mut [f64], s: &LmSettings) {
    for (j, v) in p.iter_mut().enumerate() {
        if s.free[j] {
            *v = v.clamp(s.lower[j], s.upper[j]);
        }
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

pub fn minimize<P: LeastSquaresProblem>(
    problem: &P,
    init: &[f64],
    settings: &LmSettings,
) -> LmOutcome {
    let n = problem.n_params();
    let m = problem.n_residuals();
    assert_eq!(init.len(), n);
    assert_eq!(settings.free.len(), n);

    let mut p = init.to_vec();
    clamp_free(&mut p, settings);
    problem.project(&mut p, &settings.free);

    let mut r = vec![0.0; m];
    problem.residuals(&p, &mut r);
    let mut ssr = sum_sq(&r);
    let mut history = vec![ssr];
    let mut jac = DMatrix::<f64>::zeros(m, n);

    if !ssr.is_finite() {
        return LmOutcome {
            params: p,
            ssr,
            normal_inverse: DMatrix::zeros(n, n),
            termination: Termination::NonFinite,
            iterations: 0,
            history,
        };
    }

    let mut damping = settings.damping_init.max(f64::MIN_POSITIVE);
    let mut small_steps = 0u32;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;
    let mut r_trial = vec![0.0; m];

    'outer: while iterations < settings.max_iterations {
        iterations += 1;
        if ssr == 0.0 {
            termination = Termination::ExactFit;
            break;
        }
        problem.jacobian(&p, &mut jac);
        let rv = DVector::from_column_slice(&r);
        let grad_full = jac.tr_mul(&rv);

        // active set: free parameters not pinned at a bound by an outward gradient
        let active: Vec<usize> = (0..n)
            .filter(|&j| settings.free[j])
            .filter(|&j| {
                let g = grad_full[j];
                !((p[j] <= settings.lower[j] && g > 0.0) || (p[j] >= settings.upper[j] && g < 0.0))
            })
            .collect();
        if active.is_empty() {
            termination = Termination::Stalled;
            break;
        }
        let k = active.len();
        let jk = DMatrix::from_fn(m, k, |i, c| jac[(i, active[c])]);
        let a = jk.tr_mul(&jk);
        let g = DVector::from_fn(k, |c, _| grad_full[active[c]]);
        let max_diag = (0..k).map(|c| a[(c, c)]).fold(0.0, f64::max);
        if max_diag == 0.0 {
            termination = Termination::Stalled;
            break;
        }
        let diag: Vec<f64> = (0..k).map(|c| a[(c, c)].max(1e-12 * max_diag)).collect();

        let scaled_grad = (0..k)
            .map(|c| g[c].abs() / (diag[c] * ssr).sqrt())
            .fold(0.0, f64::max);
        if scaled_grad < GRADIENT_TOLERANCE {
            termination = Termination::SmallGradient;
            break;
        }

        loop {
            let mut lhs = a.clone();
            for c in 0..k {
                lhs[(c, c)] += damping * diag[c];
            }
            let step = match lhs.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    damping *= 10.0;
                    if damping > MAX_DAMPING {
                        termination = Termination::Stalled;
                        break 'outer;
                    }
                    continue;
                }
            };
            let mut trial = p.clone();
            for (c, &j) in active.iter().enumerate() {
                trial[j] += step[c];
            }
            clamp_free(&mut trial, settings);
            problem.project(&mut trial, &settings.free);
            problem.residuals(&trial, &mut r_trial);
            let ssr_trial = sum_sq(&r_trial);

            if ssr_trial.is_finite() && ssr_trial < ssr {
                let rel = (ssr - ssr_trial) / ssr;
                p = trial;
                std::mem::swap(&mut r, &mut r_trial);
                ssr = ssr_trial;
                history.push(ssr);
                damping = (damping / 10.0).max(1e-15);
                if rel < settings.rel_tolerance {
                    small_steps += 1;
                    if small_steps >= REL_STEPS_REQUIRED {
                        termination = Termination::RelativeDecrease;
                        break 'outer;
                    }
                } else {
                    small_steps = 0;
                }
                break;
            }
            damping *= 10.0;
            if damping > MAX_DAMPING {
                termination = Termination::Stalled;
                break 'outer;
            }
        }
    }

    problem.jacobian(&p, &mut jac);
    let normal_inverse = normal_inverse(&jac, &settings.free);

    LmOutcome {
        params: p,
        ssr,
        normal_inverse,
        termination,
        iterations,
        history,
    }
}

/// Pseudo-inverse of JᵀJ restricted to the free columns, zero-padded.
fn normal_inverse(jac: &DMatrix<f64>, free: &[bool]) -> DMatrix<f64> {
    let n = free.len();
    let idx: Vec<usize> = (0..n).filter(|&j| free[j]).collect();
    let mut out = DMatrix::zeros(n, n);
    if idx.is_empty() {
        return out;
    }
    let jk = DMatrix::from_fn(jac.nrows(), idx.len(), |i, c| jac[(i, idx[c])]);
    let a = jk.tr_mul(&jk);
    let scale = (0..idx.len()).map(|c| a[(c, c)]).fold(0.0, f64::max);
    let inv = match a.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => a
            .pseudo_inverse(1e-13 * scale.max(f64::MIN_POSITIVE))
            .unwrap_or_else(|_| DMatrix::zeros(idx.len(), idx.len())),
    };
    for (a_i, &i) in idx.iter().enumerate() {
        for (b_i, &j) in idx.iter().enumerate() {
            out[(i, j)] = inv[(a_i, b_i)];
        }
    }
    // symmetrize and clip round-off negatives on the diagonal
    let sym = (&out + out.transpose()) * 0.5;
    let mut sym = sym;
    for i in 0..n {
        if sym[(i, i)] < 0.0 {
            sym[(i, i)] = 0.0;
        }
    }
    sym
}
