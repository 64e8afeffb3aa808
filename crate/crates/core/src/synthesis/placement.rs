//! Pole placement for the reduced pair `(A₁₁, A₁₂)`: find a real `K` with
//! `eig(A₁₁ − A₁₂K)` equal to a conjugate-closed target multiset.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{pbh_full_rank, RANK_TOL};
use crate::error::{Error, Result};
use crate::linalg;

/// Accepted eigenvalue mismatch after placement.
pub const PLACEMENT_TOL: f64 = 1e-8;

pub fn place_reduced(a11: &DMatrix<f64>, a12: &DMatrix<f64>, targets: &[Complex64]) -> Result<DMatrix<f64>> {
    let r = a11.nrows();
    if !a11.is_square() {
        return Err(Error::dimension(
            "A11",
            "square matrix",
            format!("{}x{}", a11.nrows(), a11.ncols()),
        ));
    }
    if a12.nrows() != r {
        return Err(Error::dimension("A12 rows", r, a12.nrows()));
    }
    let m = a12.ncols();
    if targets.len() != r {
        return Err(Error::dimension("targets", r, targets.len()));
    }
    if r == 0 {
        return Ok(DMatrix::zeros(m, 0));
    }
    if !linalg::conjugate_closed(targets, 1e-12) {
        return Err(Error::validation("targets", "must be closed under complex conjugation"));
    }

    let open_loop = linalg::eigenvalues(a11)?;
    for t in targets {
        if let Some(z) = open_loop
            .iter()
            .find(|z| (*z - t).norm() <= 1e-9 * t.norm().max(1.0))
        {
            return Err(Error::Precondition(format!(
                "target {t} coincides with the eigenvalue {z} of A11"
            )));
        }
    }
    if let Some(&mode) = open_loop.iter().find(|&&z| !pbh_full_rank(a11, a12, z)) {
        return Err(Error::Uncontrollable { mode });
    }

    let candidates: Vec<DMatrix<f64>> = if m == 1 {
        ackermann(a11, a12, targets).into_iter().collect()
    } else {
        eigenvector_method(a11, a12, targets)
            .into_iter()
            .chain(cyclic_reduction(a11, a12, targets))
            .collect()
    };

    let mut worst = f64::INFINITY;
    for k in candidates {
        let placed = linalg::eigenvalues(&(a11 - a12 * &k))?;
        let err = linalg::multiset_distance(&placed, targets);
        if err <= PLACEMENT_TOL {
            return Ok(k);
        }
        worst = worst.min(err);
    }
    Err(Error::Synthesis(format!(
        "pole placement round trip failed (eigenvalue error {worst:.3e})"
    )))
}

fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let r = a.nrows();
    let mut c = DMatrix::<f64>::zeros(r, r);
    let mut col = b.column(0).into_owned();
    for j in 0..r {
        c.set_column(j, &col);
        col = a * col;
    }
    c
}

/// Single-input placement: `K = e_rᵀ C⁻¹ φ(A)` with `φ` the target
/// characteristic polynomial and `C` the controllability matrix.
fn ackermann(a: &DMatrix<f64>, b: &DMatrix<f64>, targets: &[Complex64]) -> Option<DMatrix<f64>> {
    let r = a.nrows();
    let c = controllability_matrix(a, b);
    let c_inv = c.try_inverse()?;
    let coeffs = linalg::poly_from_roots(targets);
    // Horner: φ(A) = (…((A + c₁I)A + c₂I)A …) + c_r I
    let eye = DMatrix::<f64>::identity(r, r);
    let mut phi = eye.clone();
    for &coef in &coeffs[1..] {
        phi = &phi * a + &eye * coef;
    }
    let last_row = c_inv.row(r - 1).into_owned();
    let k = DMatrix::from_row_slice(1, r, (last_row * phi).as_slice());
    k.iter().all(|v| v.is_finite()).then_some(k)
}

/// Multi-input placement by choosing one closed-loop eigenvector per target
/// from the null space of `[A − sI, B]` and solving `K V = −W`.
fn eigenvector_method(a: &DMatrix<f64>, b: &DMatrix<f64>, targets: &[Complex64]) -> Option<DMatrix<f64>> {
    let r = a.nrows();
    let m = b.ncols();
    // conjugate pairs contribute (Re, Im) column pairs
    let mut upper: Vec<Complex64> = targets.iter().copied().filter(|z| z.im >= 0.0).collect();
    linalg::sort_spectrum(&mut upper);
    let mut v_cols: Vec<DVector<f64>> = Vec::with_capacity(r);
    let mut w_cols: Vec<DVector<f64>> = Vec::with_capacity(r);
    let mut seen: Vec<(Complex64, usize)> = Vec::new();
    for s in upper {
        let is_real = s.im.abs() <= 1e-12 * s.norm().max(1.0);
        let s = if is_real { Complex64::new(s.re, 0.0) } else { s };
        let occurrence = match seen.iter_mut().find(|(z, _)| (*z - s).norm() <= 1e-12 * s.norm().max(1.0)) {
            Some((_, count)) => {
                *count += 1;
                *count
            }
            None => {
                seen.push((s, 1));
                1
            }
        };
        if occurrence > m {
            return None;
        }
        let mut pencil = DMatrix::<Complex64>::zeros(r, r + m);
        pencil.view_mut((0, 0), (r, r)).copy_from(&linalg::to_complex(a));
        for i in 0..r {
            pencil[(i, i)] -= s;
        }
        pencil.view_mut((0, r), (r, m)).copy_from(&linalg::to_complex(b));
        let (basis, sigmas) = linalg::null_space(&pencil, m);
        let scale = linalg::max_abs_complex(&pencil).max(1.0);
        if sigmas.iter().any(|&sv| sv > RANK_TOL.sqrt() * scale) {
            return None;
        }
        let z = most_independent(&basis, r, &v_cols)?;
        let v = z.rows(0, r).into_owned();
        let w = z.rows(r, m).into_owned();
        if is_real {
            // the null space of a real pencil is spanned by real vectors up to phase
            let pivot = v.icamax();
            let phase = if v[pivot].norm() > 0.0 { v[pivot].conj() / v[pivot].norm() } else { Complex64::new(1.0, 0.0) };
            v_cols.push(v.map(|c| (c * phase).re));
            w_cols.push(w.map(|c| (c * phase).re));
        } else {
            v_cols.push(v.map(|c| c.re));
            v_cols.push(v.map(|c| c.im));
            w_cols.push(w.map(|c| c.re));
            w_cols.push(w.map(|c| c.im));
        }
    }
    if v_cols.len() != r {
        return None;
    }
    let v = DMatrix::from_columns(&v_cols);
    let w = DMatrix::from_columns(&w_cols);
    let v_inv = v.try_inverse()?;
    Some(-w * v_inv)
}

/// Picks the null-space vector whose state part is farthest from the span of
/// the eigenvectors chosen so far.
fn most_independent(basis: &DMatrix<Complex64>, r: usize, chosen: &[DVector<f64>]) -> Option<DVector<Complex64>> {
    let state_part = basis.rows(0, r).into_owned();
    let residual = if chosen.is_empty() {
        state_part
    } else {
        let q = linalg::to_complex(&DMatrix::from_columns(chosen)).qr().q();
        &state_part - &q * (q.adjoint() * &state_part)
    };
    let svd = residual.svd(false, true);
    let v_t = svd.v_t?;
    let top = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?
        .0;
    if svd.singular_values[top] <= 1e-10 {
        return None;
    }
    Some(basis * v_t.row(top).adjoint())
}

/// Reduces to a single input `b g` for a few fixed directions `g` and places
/// with Ackermann; `K = g k₁`.
fn cyclic_reduction(a: &DMatrix<f64>, b: &DMatrix<f64>, targets: &[Complex64]) -> Vec<DMatrix<f64>> {
    let m = b.ncols();
    let mut directions: Vec<DVector<f64>> = (0..m)
        .map(|j| {
            let mut e = DVector::zeros(m);
            e[j] = 1.0;
            e
        })
        .collect();
    directions.push(DVector::from_element(m, 1.0));
    directions.push(DVector::from_fn(m, |i, _| 1.0 / (1.0 + i as f64)));
    directions
        .into_iter()
        .filter_map(|g| {
            let bg = DMatrix::from_column_slice(b.nrows(), 1, (b * &g).as_slice());
            let k1 = ackermann(a, &bg, targets)?;
            Some(&g * k1)
        })
        .collect()
}
