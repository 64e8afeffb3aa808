//! Plot-ready trajectory CSV: one row per sample with the leader state, every
//! agent state and the `φ`, `ψ` metrics, in full double precision.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use coupled_consensus::{Metrics, TrajectoryRecord};

use crate::error::CliError;

/// `t,x0_1..x0_n,x1_1..x1_n,…,xN_n,phi,psi`
pub fn header(n_states: usize, n_agents: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for agent in 0..=n_agents {
        cols.extend((1..=n_states).map(|j| format!("x{agent}_{j}")));
    }
    cols.push("phi".into());
    cols.push("psi".into());
    cols
}

pub fn write_trajectory(path: &Path, record: &TrajectoryRecord, metrics: &Metrics) -> Result<(), CliError> {
    let wrap = |e| CliError::Write {
        path: path.to_path_buf(),
        source: e,
    };
    let mut out = BufWriter::new(File::create(path).map_err(wrap)?);
    writeln!(out, "{}", header(record.n_states, record.n_agents).join(",")).map_err(wrap)?;
    for (k, t) in record.times.iter().enumerate() {
        let (leader, agents) = (record.leader.row(k), record.agents.row(k));
        let values = std::iter::once(*t)
            .chain(leader.iter().copied())
            .chain(agents.iter().copied())
            .chain([metrics.phi[k], metrics.psi[k]]);
        let row: Vec<String> = values.map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", row.join(",")).map_err(wrap)?;
    }
    out.flush().map_err(wrap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        assert_eq!(
            header(2, 2).join(","),
            "t,x0_1,x0_2,x1_1,x1_2,x2_1,x2_2,phi,psi"
        );
    }

    #[test]
    fn full_precision_round_trips() {
        let v = 0.1_f64 + 0.2;
        let text = format!("{v:.16e}");
        assert_eq!(text.parse::<f64>().unwrap(), v);
    }
}
