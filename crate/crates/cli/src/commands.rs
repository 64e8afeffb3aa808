//! Subcommand implementations. Each returns a JSON report for stdout and the
//! process exit status.

use std::path::{Path, PathBuf};

use coupled_consensus::{
    assign_gain, block_spectrum, build_coupling, check_positive_real, compute_kz, crossing_time,
    diagonalizability_check, is_laplacian, metrics, positive_real_gain, predict_spectrum, simulate,
    stability_margins, Complex64, Error as CoreError, FeedbackGain, GainProvenance, Scenario,
};
use serde::Serialize;
use serde_json::Value;

use crate::csv;
use crate::error::{CliError, EXIT_NEGATIVE, EXIT_OK};
use crate::reference::{Figure, COUPLED, REPORT_TIME, UNCOUPLED};
use crate::scenario::{matrix_rows, GainSource, ResolvedScenario, ScenarioFile};

/// Command-line overrides of scenario settings.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub step: Option<f64>,
    pub t_final: Option<f64>,
    /// Replaces the scenario's thresholds when non-empty.
    pub thresholds: Vec<f64>,
}

impl Overrides {
    pub fn apply(&self, file: &mut ScenarioFile) {
        if let Some(step) = self.step {
            file.step = step;
        }
        if let Some(t_final) = self.t_final {
            file.t_final = t_final;
        }
        if !self.thresholds.is_empty() {
            file.thresholds = self.thresholds.clone();
        }
    }
}

#[derive(Debug)]
pub struct CommandOutput {
    pub exit_code: i32,
    pub report: Value,
    /// Diagnostic for stderr accompanying a nonzero exit.
    pub message: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

fn complex_list(values: &[Complex64]) -> Vec<ComplexValue> {
    values.iter().map(|&z| z.into()).collect()
}

fn to_value<T: Serialize>(report: &T) -> Value {
    serde_json::to_value(report).expect("reports always serialize")
}

fn load(path: &Path, overrides: &Overrides) -> Result<(ScenarioFile, ResolvedScenario), CliError> {
    let (mut file, source) = ScenarioFile::read(path)?;
    overrides.apply(&mut file);
    let resolved = file.resolve_at(path, &source)?;
    Ok((file, resolved))
}

fn output_path(dir: &Path, scenario: &Path, suffix: &str) -> PathBuf {
    let stem = scenario.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    dir.join(format!("{stem}{suffix}"))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub n_agents: usize,
    pub self_gains: Vec<f64>,
    pub margins: Vec<f64>,
    pub margins_positive: bool,
    pub disc_separation: bool,
    /// Agents (0-based) in ascending order of self-gain.
    pub ordering: Vec<usize>,
    pub is_laplacian: bool,
    pub lambda_min_symmetric: f64,
    /// Scale `k` of `M = k (Z + I)`, present when the margins are positive.
    pub k: Option<f64>,
}

/// Coupling diagnostics. Exit 0 iff every stability margin is positive.
pub fn analyze(path: &Path) -> Result<CommandOutput, CliError> {
    let (_, resolved) = load(path, &Overrides::default())?;
    let cm = build_coupling(&resolved.coupling)?;
    let margins = stability_margins(&cm);
    let check = diagonalizability_check(&cm);
    let k = if margins.stable { Some(compute_kz(&cm)?.k) } else { None };
    let report = AnalyzeReport {
        n_agents: cm.n_agents(),
        self_gains: cm.self_gains().iter().copied().collect(),
        margins: margins.margins.iter().copied().collect(),
        margins_positive: margins.stable,
        disc_separation: check.sufficient,
        ordering: check.ordering,
        is_laplacian: is_laplacian(&cm),
        lambda_min_symmetric: cm.symmetric_min_eigenvalue(),
        k,
    };
    Ok(CommandOutput {
        exit_code: if margins.stable { EXIT_OK } else { EXIT_NEGATIVE },
        message: (!margins.stable).then(|| "stability margins are not all positive".to_string()),
        report: to_value(&report),
    })
}

/// Builds the feedback gain from the scenario's gain source.
pub fn resolve_gain(resolved: &ResolvedScenario) -> Result<FeedbackGain, CoreError> {
    match &resolved.gain {
        GainSource::Explicit(f) => Ok(FeedbackGain::explicit(f.clone())),
        GainSource::Spec(spec) => assign_gain(&resolved.plant, spec),
        GainSource::Theorem1(q) => {
            let kz = compute_kz(&build_coupling(&resolved.coupling)?)?;
            positive_real_gain(&resolved.plant, &kz, q)
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SpectrumAtGain {
    pub d: f64,
    /// Asymptotic prediction, for pole-assigning gains.
    pub predicted: Option<Vec<ComplexValue>>,
    pub actual: Vec<ComplexValue>,
}

#[derive(Debug, Serialize)]
pub struct CertificateReport {
    pub k: f64,
    pub riccati_residual: f64,
    pub riccati_relative_residual: f64,
    pub passed: bool,
    pub min_hermitian_eigenvalue: f64,
    pub worst_frequency: f64,
    pub frequencies_checked: usize,
}

#[derive(Debug, Serialize)]
pub struct SynthesizeReport {
    pub f: Vec<Vec<f64>>,
    pub k_reduced: Option<Vec<Vec<f64>>>,
    pub spectra: Vec<SpectrumAtGain>,
    pub certificate: Option<CertificateReport>,
    pub written: PathBuf,
}

/// Synthesizes the gain and writes the scenario back with it made explicit.
pub fn synthesize(path: &Path, output_dir: &Path) -> Result<CommandOutput, CliError> {
    let (file, resolved) = load(path, &Overrides::default())?;
    if matches!(resolved.gain, GainSource::Explicit(_)) {
        return Err(CliError::Usage(format!(
            "{}: gain is already explicit; synthesize needs a `spec` or `theorem1` gain",
            path.display()
        )));
    }
    let gain = resolve_gain(&resolved)?;
    let d_values: Vec<f64> = resolved.coupling.self_gains.iter().copied().collect();
    let spectra = d_values
        .iter()
        .map(|&d| {
            let actual = coupled_consensus::linalg::eigenvalues(&resolved.plant.closed_loop(&gain.f, d))?;
            let predicted = match &resolved.gain {
                GainSource::Spec(spec) => Some(complex_list(&predict_spectrum(spec, d))),
                _ => None,
            };
            Ok(SpectrumAtGain {
                d,
                predicted,
                actual: complex_list(&actual),
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    let certificate = match &gain.provenance {
        GainProvenance::Riccati(sol) => {
            let cert = check_positive_real(&resolved.plant, &gain, sol.k)?;
            Some(CertificateReport {
                k: sol.k,
                riccati_residual: sol.residual,
                riccati_relative_residual: sol.relative_residual,
                passed: cert.passed,
                min_hermitian_eigenvalue: cert.min_hermitian_eigenvalue,
                worst_frequency: cert.worst_frequency,
                frequencies_checked: cert.frequencies_checked,
            })
        }
        _ => None,
    };
    let written = output_path(output_dir, path, ".synthesized.json");
    write_text(&written, &file.with_explicit_gain(&gain.f).to_json())?;
    let failed_certificate = certificate.as_ref().is_some_and(|c| !c.passed);
    let report = SynthesizeReport {
        f: matrix_rows(&gain.f),
        k_reduced: gain.k_reduced.as_ref().map(matrix_rows),
        spectra,
        certificate,
        written,
    };
    Ok(CommandOutput {
        exit_code: if failed_certificate { EXIT_NEGATIVE } else { EXIT_OK },
        message: failed_certificate.then(|| "positive-real certificate failed".to_string()),
        report: to_value(&report),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub metric: &'static str,
    pub threshold: f64,
    /// First time after which the metric stays at or below the threshold.
    pub time: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub csv: PathBuf,
    pub samples: usize,
    pub step: f64,
    pub t_final: f64,
    pub block_spectrum: Vec<ComplexValue>,
    pub crossings: Vec<Crossing>,
    pub phi_initial: f64,
    pub phi_final: f64,
    /// `φ(t_final) / φ(0)`, absent when `φ(0) = 0`.
    pub phi_ratio: Option<f64>,
    /// `φ(t) / φ(0)` at requested report times inside the horizon.
    pub phi_ratios_at: Vec<(f64, Option<f64>)>,
    /// Time at which integration was aborted.
    pub diverged_at: Option<f64>,
}

impl RunReport {
    pub fn crossing(&self, metric: &str, threshold: f64) -> Option<f64> {
        self.crossings
            .iter()
            .find(|c| c.metric == metric && c.threshold == threshold)
            .and_then(|c| c.time)
    }
}

/// Simulates a resolved scenario and writes its CSV. Divergence is reported
/// in the returned summary after the partial trajectory has been written.
pub fn execute(resolved: &ResolvedScenario, csv_path: &Path, report_times: &[f64]) -> Result<RunReport, CliError> {
    let gain = resolve_gain(resolved)?;
    let cm = build_coupling(&resolved.coupling)?;
    let spectrum = block_spectrum(&resolved.plant, &cm, &gain)?;
    let scenario = Scenario {
        plant: resolved.plant.clone(),
        coupling: resolved.coupling.clone(),
        observers: resolved.observers.clone(),
        gain,
        leader_init: resolved.leader_init.clone(),
        agent_inits: resolved.agent_inits.clone(),
        observer_inits: resolved.observer_inits.clone(),
        t_final: resolved.t_final,
        step: resolved.step,
    };
    let (record, diverged_at) = match simulate(&scenario) {
        Ok(record) => (record, None),
        Err(CoreError::Divergence { time, partial }) => (*partial, Some(time)),
        Err(e) => return Err(e.into()),
    };
    let m = metrics(&record);
    csv::write_trajectory(csv_path, &record, &m)?;
    let mut crossings = Vec::new();
    for &threshold in &resolved.thresholds {
        for (metric, series) in [("psi", &m.psi), ("phi", &m.phi)] {
            // a diverged run has no meaningful settling time
            let time = diverged_at
                .is_none()
                .then(|| crossing_time(&record.times, series, threshold))
                .flatten();
            crossings.push(Crossing { metric, threshold, time });
        }
    }
    let phi_initial = m.phi.first().copied().unwrap_or(0.0);
    let phi_final = m.phi.last().copied().unwrap_or(0.0);
    let ratio = |phi: f64| (phi_initial > 0.0).then(|| phi / phi_initial);
    let phi_ratios_at = report_times
        .iter()
        .filter_map(|&t| {
            let k = (t / resolved.step).round() as usize;
            m.phi.get(k).map(|&phi| (record.times[k], ratio(phi)))
        })
        .collect();
    Ok(RunReport {
        csv: csv_path.to_path_buf(),
        samples: record.len(),
        step: resolved.step,
        t_final: resolved.t_final,
        block_spectrum: complex_list(&spectrum),
        crossings,
        phi_initial,
        phi_final,
        phi_ratio: ratio(phi_final),
        phi_ratios_at,
        diverged_at,
    })
}

/// Simulates a scenario file, writing `<stem>.csv` and `<stem>.report.json`.
pub fn run(path: &Path, output_dir: &Path, overrides: &Overrides) -> Result<CommandOutput, CliError> {
    let (_, resolved) = load(path, overrides)?;
    let report = execute(&resolved, &output_path(output_dir, path, ".csv"), &[])?;
    let value = to_value(&report);
    write_text(
        &output_path(output_dir, path, ".report.json"),
        &serde_json::to_string_pretty(&value).expect("reports always serialize"),
    )?;
    let diverged = report.diverged_at;
    Ok(CommandOutput {
        exit_code: if diverged.is_some() { EXIT_NEGATIVE } else { EXIT_OK },
        message: diverged.map(|t| format!("simulation diverged at t = {t}; partial trajectory written")),
        report: value,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseSummary {
    pub label: &'static str,
    pub rho: f64,
    pub epsilon: f64,
    pub run: RunReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceSummary {
    pub figure: &'static str,
    pub gain: [f64; 2],
    pub cases: Vec<CaseSummary>,
    /// Coupled over uncoupled `ψ` crossing time, per threshold.
    pub psi_crossing_ratios: Vec<(f64, Option<f64>)>,
    /// The coupled case crosses the first threshold strictly earlier.
    pub ordering_reproduced: bool,
}

impl ReproduceSummary {
    /// Plain-text table of crossing times and error ratios.
    pub fn table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |t| format!("{t:.3}"));
        let mut out = format!(
            "{} with F = [{}, {}]\n{:<10} {:>6} {:>8} {:>10} {:>10} {:>14}\n",
            self.figure, self.gain[0], self.gain[1], "case", "rho", "epsilon", "threshold", "t(psi)", "phi(15)/phi(0)"
        );
        for case in &self.cases {
            for c in case.run.crossings.iter().filter(|c| c.metric == "psi") {
                out += &format!(
                    "{:<10} {:>6} {:>8} {:>10} {:>10} {:>14}\n",
                    case.label,
                    case.rho,
                    case.epsilon,
                    c.threshold,
                    fmt(c.time),
                    fmt(case.run.phi_ratios_at.first().and_then(|r| r.1))
                );
            }
        }
        for (threshold, ratio) in &self.psi_crossing_ratios {
            out += &format!("crossing ratio at {threshold}: {}\n", fmt(*ratio));
        }
        out += &format!("coupled crosses first: {}\n", self.ordering_reproduced);
        out
    }
}

/// Runs the built-in uncoupled/coupled pair for a figure.
pub fn reproduce(id: &str, output_dir: &Path, overrides: &Overrides) -> Result<CommandOutput, CliError> {
    let figure = Figure::parse(id).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown case `{id}`; expected one of {}",
            Figure::ALL.map(|f| f.id()).join(", ")
        ))
    })?;
    let summary = reproduce_figure(figure, output_dir, overrides)?;
    write_text(
        &output_dir.join(format!("{}_summary.json", figure.id())),
        &serde_json::to_string_pretty(&summary).expect("reports always serialize"),
    )?;
    write_text(&output_dir.join(format!("{}_summary.txt", figure.id())), &summary.table())?;
    Ok(CommandOutput {
        exit_code: if summary.ordering_reproduced { EXIT_OK } else { EXIT_NEGATIVE },
        message: (!summary.ordering_reproduced)
            .then(|| format!("{}: coupled case did not settle strictly earlier\n{}", figure.id(), summary.table())),
        report: to_value(&summary),
    })
}

pub fn reproduce_figure(figure: Figure, output_dir: &Path, overrides: &Overrides) -> Result<ReproduceSummary, CliError> {
    let (uncoupled, coupled) = figure.scenarios();
    let cases = [
        ("uncoupled", UNCOUPLED, uncoupled),
        ("coupled", COUPLED, coupled),
    ];
    let resolved = cases
        .iter()
        .map(|(_, _, file)| {
            let mut file = file.clone();
            overrides.apply(&mut file);
            file.resolve().map_err(CliError::from)
        })
        .collect::<Result<Vec<_>, _>>()?;
    // the two cases are independent; each writes its own file
    let runs: Vec<Result<RunReport, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cases
            .iter()
            .zip(&resolved)
            .map(|((label, _, _), r)| {
                let csv = output_dir.join(format!("{}_{label}.csv", figure.id()));
                scope.spawn(move || execute(r, &csv, &[REPORT_TIME]))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let mut summaries = Vec::with_capacity(2);
    for ((label, (rho, epsilon), _), run) in cases.into_iter().zip(runs) {
        summaries.push(CaseSummary {
            label,
            rho,
            epsilon,
            run: run?,
        });
    }
    let thresholds = resolved[0].thresholds.clone();
    let psi_crossing_ratios: Vec<(f64, Option<f64>)> = thresholds
        .iter()
        .map(|&th| {
            let ratio = match (summaries[0].run.crossing("psi", th), summaries[1].run.crossing("psi", th)) {
                (Some(u), Some(c)) if u > 0.0 => Some(c / u),
                _ => None,
            };
            (th, ratio)
        })
        .collect();
    let ordering_reproduced = thresholds.first().is_some_and(|&th| {
        match (summaries[0].run.crossing("psi", th), summaries[1].run.crossing("psi", th)) {
            (Some(u), Some(c)) => c < u,
            (None, Some(_)) => true,
            _ => false,
        }
    });
    Ok(ReproduceSummary {
        figure: figure.id(),
        gain: figure.gain(),
        cases: summaries,
        psi_crossing_ratios,
        ordering_reproduced,
    })
}

/// Writes a reference scenario file to stdout-ready JSON.
pub fn example(case: &str) -> Result<String, CliError> {
    let (rho, epsilon) = match case {
        "uncoupled" => UNCOUPLED,
        "coupled" => COUPLED,
        other => {
            return Err(CliError::Usage(format!(
                "unknown example `{other}`; expected `uncoupled` or `coupled`"
            )))
        }
    };
    Ok(crate::reference::scenario(rho, epsilon, crate::reference::GAIN_ASSIGNED).to_json())
}
