//! High-gain spectrum of `A − dBF` for pole-assigning gains: `n − m`
//! eigenvalues settle at the dominant targets and `m` run off to `−dσ_j`.

use num_complex::Complex64;

use super::{FeedbackGain, GainSpec, Plant};
use crate::error::{Error, Result};
use crate::linalg;

/// Asymptotic (`d → ∞`) eigenvalues of `A − dBF`: the dominant targets
/// followed by `−dσ₁, …, −dσ_m`.
pub fn predict_spectrum(spec: &GainSpec, d: f64) -> Vec<Complex64> {
    spec.dominant_poles
        .iter()
        .copied()
        .chain(spec.sigmas.iter().map(|&s| Complex64::new(-d * s, 0.0)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStep {
    pub d: f64,
    /// Sorted eigenvalues of `A − dBF`.
    pub spectrum: Vec<Complex64>,
    pub hurwitz: bool,
    /// Largest distance from a dominant target to its matched eigenvalue.
    pub dominant_error: Option<f64>,
    /// Largest `|λ + dσ_j| / (dσ_j)` over the fast group.
    pub fast_relative_error: Option<f64>,
    /// Predictions whose two nearest candidates were equidistant.
    pub ambiguous_matches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub steps: Vec<ConvergenceStep>,
    /// Dominant errors are non-increasing over the last half of the sequence.
    /// `None` without a spec.
    pub dominant_monotone: Option<bool>,
}

impl ConvergenceReport {
    pub fn all_hurwitz(&self) -> bool {
        self.steps.iter().all(|s| s.hurwitz)
    }
}

/// Matches `eig(A − dBF)` against [`predict_spectrum`] for each `d`.
///
/// Matching is greedy nearest-neighbour, dominant targets first. Without a
/// spec (for instance a Riccati gain) only the Hurwitz verdicts are filled in.
pub fn verify_convergence(
    plant: &Plant,
    gain: &FeedbackGain,
    spec: Option<&GainSpec>,
    d_sequence: &[f64],
) -> Result<ConvergenceReport> {
    if d_sequence.is_empty() {
        return Err(Error::Precondition("d sequence is empty".into()));
    }
    if d_sequence.iter().any(|&d| !(d > 0.0) || !d.is_finite())
        || d_sequence.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(Error::Precondition(
            "d sequence must be positive and strictly increasing".into(),
        ));
    }
    if let Some(spec) = spec {
        spec.validate()?;
        if spec.sigmas.len() != plant.m() || spec.dominant_poles.len() != plant.n() - plant.m() {
            return Err(Error::dimension(
                "gain spec",
                format!("{} dominant poles and {} rates", plant.n() - plant.m(), plant.m()),
                format!("{} and {}", spec.dominant_poles.len(), spec.sigmas.len()),
            ));
        }
    }

    let mut steps = Vec::with_capacity(d_sequence.len());
    for &d in d_sequence {
        let spectrum = linalg::eigenvalues(&plant.closed_loop(&gain.f, d))?;
        let hurwitz = linalg::hurwitz_violation(&spectrum).is_none();
        let mut step = ConvergenceStep {
            d,
            spectrum,
            hurwitz,
            dominant_error: None,
            fast_relative_error: None,
            ambiguous_matches: 0,
        };
        if let Some(spec) = spec {
            let predicted = predict_spectrum(spec, d);
            let n_dominant = spec.dominant_poles.len();
            step.ambiguous_matches = count_ties(&predicted, &step.spectrum);
            let matches = linalg::greedy_match(&predicted, &step.spectrum);
            let distances: Vec<f64> = matches
                .iter()
                .map(|m| m.map_or(f64::INFINITY, |(_, dist)| dist))
                .collect();
            if n_dominant > 0 {
                step.dominant_error = Some(distances[..n_dominant].iter().copied().fold(0.0, f64::max));
            }
            step.fast_relative_error = Some(
                distances[n_dominant..]
                    .iter()
                    .zip(&spec.sigmas)
                    .map(|(dist, sigma)| dist / (d * sigma))
                    .fold(0.0, f64::max),
            );
        }
        steps.push(step);
    }

    let dominant_monotone = spec.map(|_| {
        let errors: Vec<f64> = steps.iter().filter_map(|s| s.dominant_error).collect();
        let tail = &errors[errors.len() / 2..];
        tail.windows(2).all(|w| w[1] <= w[0])
    });
    Ok(ConvergenceReport {
        steps,
        dominant_monotone,
    })
}

fn count_ties(predicted: &[Complex64], candidates: &[Complex64]) -> usize {
    predicted
        .iter()
        .filter(|p| {
            let mut ranked: Vec<(f64, Complex64)> = candidates.iter().map(|c| ((c - *p).norm(), *c)).collect();
            ranked.sort_by(|x, y| x.0.total_cmp(&y.0));
            match ranked.as_slice() {
                [(d0, c0), (d1, c1), ..] => {
                    let tol = 1e-12 * (1.0 + d0);
                    // a conjugate pair is equidistant from every real prediction
                    let conjugate_pair = (c0.conj() - c1).norm() <= tol && c0.im != 0.0;
                    (d1 - d0).abs() <= tol && !conjugate_pair
                }
                _ => false,
            }
        })
        .count()
}
