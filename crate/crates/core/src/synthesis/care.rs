//! Stabilizing solution of `AᵀX + XA − k² X B Bᵀ X + Q = 0`.
//!
//! The matrix sign function of the Hamiltonian
//! `H = [A, −k²BBᵀ; −Q, −Aᵀ]` gives the stable invariant subspace and an
//! initial `X`; Newton–Kleinman steps then polish it to full accuracy.

use nalgebra::DMatrix;

use super::Plant;
use crate::error::{Error, Result};
use crate::linalg;

const SIGN_MAX_ITER: usize = 100;
const NEWTON_MAX_ITER: usize = 50;

/// Stabilizing Riccati solution with the weight and gain used to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub x: DMatrix<f64>,
    pub k: f64,
    pub q: DMatrix<f64>,
    /// `‖AᵀX + XA − k²XBBᵀX + Q‖_max`
    pub residual: f64,
    /// `residual / (‖Q‖ + ‖AᵀX + XA‖ + ‖k²XBBᵀX‖)` in the max norm: the
    /// backward error, meaningful even when `X` is so large that the absolute
    /// residual is dominated by rounding in `X` itself.
    pub relative_residual: f64,
}

impl RiccatiSolution {
    /// `A − k² B Bᵀ X`.
    pub fn closed_loop(&self, plant: &Plant) -> DMatrix<f64> {
        plant.a() - plant.b() * plant.b().transpose() * &self.x * (self.k * self.k)
    }
}

fn riccati_map(a: &DMatrix<f64>, s: &DMatrix<f64>, q: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let r = a.transpose() * x + x * a - x * s * x + q;
    (&r + r.transpose()) * 0.5
}

fn care_residual(a: &DMatrix<f64>, s: &DMatrix<f64>, q: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    linalg::max_abs(&riccati_map(a, s, q, x))
}

fn relative_residual(a: &DMatrix<f64>, s: &DMatrix<f64>, q: &DMatrix<f64>, x: &DMatrix<f64>, residual: f64) -> f64 {
    let scale = linalg::max_abs(q) + linalg::max_abs(&(a.transpose() * x + x * a)) + linalg::max_abs(&(x * s * x));
    residual / scale
}

/// Minimiser over `[0, 2]` of `‖(1 − t)R − t²V‖_F²`.
fn line_search(r: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let alpha = r.norm_squared();
    let beta = r.dot(v);
    let gamma = v.norm_squared();
    let f = |t: f64| alpha * (1.0 - t).powi(2) - 2.0 * beta * (1.0 - t) * t * t + gamma * t.powi(4);
    let df = |t: f64| -2.0 * alpha * (1.0 - t) - 2.0 * beta * (2.0 * t - 3.0 * t * t) + 4.0 * gamma * t.powi(3);
    let d2f = |t: f64| 2.0 * alpha - 2.0 * beta * (2.0 - 6.0 * t) + 12.0 * gamma * t * t;
    let mut t = (0..=200)
        .map(|i| i as f64 / 100.0)
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap_or(1.0);
    for _ in 0..20 {
        let curvature = d2f(t);
        if !(curvature > 0.0) {
            break;
        }
        let next = (t - df(t) / curvature).clamp(0.0, 2.0);
        if (next - t).abs() <= 1e-15 {
            break;
        }
        t = next;
    }
    if f(t).is_finite() { t } else { 1.0 }
}

fn sign_function(h: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let dim = h.nrows() as f64;
    let mut z = h.clone();
    for _ in 0..SIGN_MAX_ITER {
        let det = z.determinant();
        if !det.is_finite() || det == 0.0 {
            return None;
        }
        // determinant scaling
        let c = det.abs().powf(-1.0 / dim);
        let c = if c.is_finite() && c > 0.0 { c } else { 1.0 };
        let inv = (&z * c).try_inverse()?;
        let next = (&z * c + inv) * 0.5;
        let change = linalg::max_abs(&(&next - &z));
        z = next;
        if change <= 1e-13 * linalg::max_abs(&z).max(1.0) {
            return Some(z);
        }
    }
    Some(z)
}

fn initial_solution(a: &DMatrix<f64>, s: &DMatrix<f64>, q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&-s);
    h.view_mut((n, 0), (n, n)).copy_from(&-q);
    h.view_mut((n, n), (n, n)).copy_from(&-a.transpose());
    let w = sign_function(&h)?;

    // (W + I) [I; X] = 0  ⇒  [W12; W22 + I] X = −[W11 + I; W21]
    let eye = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::<f64>::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w.view((n, n), (n, n)) + &eye));
    let mut rhs = DMatrix::<f64>::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&-(w.view((0, 0), (n, n)) + &eye));
    rhs.view_mut((n, 0), (n, n)).copy_from(&-w.view((n, 0), (n, n)));
    let x = lhs.svd(true, true).solve(&rhs, 1e-14).ok()?;
    Some((&x + x.transpose()) * 0.5)
}

/// Solves the control algebraic Riccati equation for its stabilizing,
/// positive-definite solution.
pub fn solve_care(plant: &Plant, k: f64, q: &DMatrix<f64>) -> Result<RiccatiSolution> {
    let n = plant.n();
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::validation("k", format!("must be positive, got {k}")));
    }
    if q.shape() != (n, n) {
        return Err(Error::dimension(
            "Q",
            format!("{n}x{n}"),
            format!("{}x{}", q.nrows(), q.ncols()),
        ));
    }
    let q_scale = linalg::max_abs(q);
    if linalg::max_abs(&(q - q.transpose())) > 1e-12 * q_scale.max(1.0) {
        return Err(Error::validation("Q", "must be symmetric"));
    }
    if !(linalg::symmetric_min_eigenvalue(q) > 0.0) {
        return Err(Error::validation("Q", "must be positive definite"));
    }
    if let Some(mode) = plant.unstabilizable_mode() {
        return Err(Error::Synthesis(format!(
            "(A, B) is not stabilizable: mode {mode} is uncontrollable"
        )));
    }

    let a = plant.a();
    let s = plant.b() * plant.b().transpose() * (k * k);
    let mut x = initial_solution(a, &s, q)
        .ok_or_else(|| Error::Synthesis("Hamiltonian sign iteration broke down".into()))?;
    let mut best = (care_residual(a, &s, q, &x), x.clone());

    // Newton steps in defect-correction form with exact line search: the
    // correction N solves (A − SX)ᵀN + N(A − SX) + R(X) = 0 and the residual
    // along X + tN is the quartic (1 − t)R − t²NSN, minimised over t ∈ [0, 2].
    let mut stalled = 0;
    for _ in 0..NEWTON_MAX_ITER {
        let r = riccati_map(a, &s, q, &x);
        let a_cl = a - &s * &x;
        let n_step = match linalg::solve_lyapunov(&a_cl, &r) {
            Ok(n_step) => n_step,
            Err(_) => break,
        };
        let v = &n_step * &s * &n_step;
        let t = line_search(&r, &v);
        let next = &x + &n_step * t;
        x = (&next + next.transpose()) * 0.5;
        let residual = care_residual(a, &s, q, &x);
        if residual < best.0 {
            stalled = if residual > 0.5 * best.0 { stalled + 1 } else { 0 };
            best = (residual, x.clone());
        } else {
            stalled += 1;
        }
        if stalled >= 3 || best.0 == 0.0 {
            break;
        }
    }

    let (residual, x) = best;
    let relative = relative_residual(a, &s, q, &x, residual);
    // The absolute bound is unreachable in double precision once ‖X‖ is
    // large enough that rounding X alone leaves a residual above it.
    if !(residual <= 1e-8 * q_scale || relative <= 1e-8) {
        return Err(Error::NoConvergence {
            what: "Riccati solver",
            iterations: NEWTON_MAX_ITER,
            residual,
        });
    }
    if !(linalg::symmetric_min_eigenvalue(&x) > 0.0) {
        return Err(Error::Synthesis("Riccati solution is not positive definite".into()));
    }
    let solution = RiccatiSolution {
        x,
        k,
        q: q.clone(),
        residual,
        relative_residual: relative,
    };
    let spectrum = linalg::eigenvalues(&solution.closed_loop(plant))?;
    if let Some(eigenvalue) = linalg::hurwitz_violation(&spectrum) {
        return Err(Error::NotHurwitz { eigenvalue });
    }
    Ok(solution)
}
