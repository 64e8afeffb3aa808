//! Dense kernels shared by the analysis modules.
//!
//! Thin wrappers over `nalgebra` decompositions with the conventions used
//! throughout the crate: spectra sorted by real then imaginary part, max-abs
//! norms, and multiset matching for eigenvalue comparisons.

use nalgebra::{ComplexField, DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_complex(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
}

/// Orders a spectrum by real part, then imaginary part.
pub fn sort_spectrum(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues of a real square matrix, sorted with [`sort_spectrum`].
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::dimension(
            "eigenvalue input",
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("matrix", "contains non-finite entries"));
    }
    let schur = Schur::try_new(m.clone(), EIG_EPS, EIG_MAX_ITER).ok_or(Error::NoConvergence {
        what: "Schur decomposition",
        iterations: EIG_MAX_ITER,
        residual: f64::NAN,
    })?;
    let mut values: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    sort_spectrum(&mut values);
    Ok(values)
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn symmetric_min_eigenvalue(s: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(s.clone());
    eig.eigenvalues.iter().fold(f64::INFINITY, |acc, &v| acc.min(v))
}

/// Smallest eigenvalue of a complex Hermitian matrix.
pub fn hermitian_min_eigenvalue(h: &DMatrix<Complex64>) -> f64 {
    let eig = SymmetricEigen::new(h.clone());
    eig.eigenvalues.iter().fold(f64::INFINITY, |acc, &v| acc.min(v))
}

/// `m + m*`.
pub fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    m + m.adjoint()
}

/// Returns the eigenvalue with the largest real part when it is not in the
/// open left half plane.
pub fn hurwitz_violation(spectrum: &[Complex64]) -> Option<Complex64> {
    spectrum
        .iter()
        .copied()
        .filter(|z| z.re >= 0.0)
        .max_by(|a, b| a.re.total_cmp(&b.re))
}

pub fn is_hurwitz(m: &DMatrix<f64>) -> Result<bool> {
    Ok(hurwitz_violation(&eigenvalues(m)?).is_none())
}

/// Greedy nearest-neighbour matching of two multisets.
///
/// Returns, for every element of `reference` (in order), the index of the
/// matched element of `candidates` and the distance. Elements of `reference`
/// beyond the size of `candidates` are left unmatched.
pub fn greedy_match(reference: &[Complex64], candidates: &[Complex64]) -> Vec<Option<(usize, f64)>> {
    let mut used = vec![false; candidates.len()];
    reference
        .iter()
        .map(|r| {
            let best = candidates
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, c)| (i, (c - r).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((i, _)) = best {
                used[i] = true;
            }
            best
        })
        .collect()
}

/// Largest pairwise distance after matching `a` against `b` as multisets.
///
/// Both orders of the greedy matching are tried and the smaller result kept,
/// which removes most of the order dependence of greedy matching on clustered
/// spectra. Multisets of different size have infinite distance.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let one_way = |x: &[Complex64], y: &[Complex64]| {
        greedy_match(x, y)
            .into_iter()
            .map(|m| m.map_or(f64::INFINITY, |(_, d)| d))
            .fold(0.0_f64, f64::max)
    };
    one_way(a, b).min(one_way(b, a))
}

/// Right singular vectors spanning the numerical null space of `m`.
///
/// Wide inputs are padded with zero rows so the SVD yields a complete set of
/// right singular vectors. The `dim` vectors belonging to the smallest
/// singular values are returned as columns, together with those singular
/// values (ascending).
pub fn null_space<T>(m: &DMatrix<T>, dim: usize) -> (DMatrix<T>, Vec<f64>)
where
    T: ComplexField<RealField = f64>,
{
    let cols = m.ncols();
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::<T>::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let picked = &order[..dim.min(order.len())];
    let mut basis = DMatrix::<T>::zeros(cols, picked.len());
    for (c, &row) in picked.iter().enumerate() {
        for k in 0..cols {
            basis[(k, c)] = v_t[(row, k)].clone().conjugate();
        }
    }
    let sigmas = picked.iter().map(|&i| svd.singular_values[i]).collect();
    (basis, sigmas)
}

/// 2-norm condition number via singular values.
pub fn condition_number<T>(m: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64>,
{
    let sv = SVD::new(m.clone(), false, false).singular_values;
    let max = sv.iter().fold(0.0_f64, |a, &v| a.max(v));
    let min = sv.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Solves `aᵀ x + x a + c = 0` for `x` through the vectorized (Kronecker)
/// form. Intended for the small state dimensions this crate targets.
pub fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    // vec(aᵀx) = (I ⊗ aᵀ) vec(x), vec(x a) = (aᵀ ⊗ I) vec(x)
    let op = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, c.iter().map(|v| -v));
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Synthesis("Lyapunov operator is singular".into()))?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// Real coefficients of `∏ (λ − r)`, highest degree first (monic).
///
/// The roots must be closed under conjugation for the result to be real; the
/// imaginary residue of the complex product is discarded.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        coeffs = next;
    }
    coeffs.into_iter().map(|c| c.re).collect()
}

/// True when `values` is closed under complex conjugation, matching each
/// element to a distinct conjugate partner within `tol`.
pub fn conjugate_closed(values: &[Complex64], tol: f64) -> bool {
    let conj: Vec<Complex64> = values.iter().map(|z| z.conj()).collect();
    greedy_match(values, &conj)
        .into_iter()
        .all(|m| m.is_some_and(|(_, d)| d <= tol * (1.0 + values.iter().map(|z| z.norm()).fold(0.0, f64::max))))
}
