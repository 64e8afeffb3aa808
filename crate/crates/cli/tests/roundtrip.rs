//! Scenario files survive serialization unchanged.

use consensus_cli::scenario::{
    CouplingSection, GainSection, InitialSection, ObserverSection, PlantSection, Pole, ScenarioFile,
};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1e3..1e3f64, cols), rows)
}

fn pole() -> impl Strategy<Value = Pole> {
    prop_oneof![
        (-10.0..-0.01f64).prop_map(Pole::Real),
        (-10.0..-0.01f64, 0.01..5.0f64).prop_map(|(re, im)| Pole::Complex { re, im }),
    ]
}

fn gain(n: usize, m: usize) -> impl Strategy<Value = GainSection> {
    prop_oneof![
        matrix(m, n).prop_map(|f| GainSection::Explicit { f }),
        (
            prop::collection::vec(pole(), n - m),
            prop::collection::vec(0.1..5.0f64, m),
            prop::option::of(matrix(m, m)),
        )
            .prop_map(|(dominant_poles, sigmas, v)| GainSection::Spec {
                dominant_poles,
                sigmas,
                v
            }),
        matrix(n, n).prop_map(|q| GainSection::Theorem1 { q }),
    ]
}

fn scenario() -> impl Strategy<Value = ScenarioFile> {
    (1usize..5, 1usize..4).prop_flat_map(|(n, agents)| {
        (1..=n).prop_flat_map(move |m| {
            (
                (matrix(n, n), matrix(n, m)),
                (
                    matrix(agents, agents),
                    prop::collection::vec(0.0..10.0f64, agents),
                    prop::option::of(0.0..2.0f64),
                    prop::option::of(0.0..2.0f64),
                ),
                (matrix(agents, agents), prop::collection::vec(0.0..2.0f64, agents), 0.1..50.0f64),
                gain(n, m),
                (prop::collection::vec(-5.0..5.0f64, n), matrix(agents, n), matrix(agents, n)),
                (0.1..100.0f64, 1e-4..0.1f64, prop::collection::vec(0.01..3.0f64, 1..4)),
            )
                .prop_map(
                    move |((a, b), (adjacency, self_gains, rho, epsilon), (alpha, pinning, mu), gain, init, horizon)| {
                        ScenarioFile {
                            plant: PlantSection { n, m, a, b },
                            coupling: CouplingSection {
                                n_agents: agents,
                                adjacency,
                                self_gains,
                                rho,
                                epsilon,
                            },
                            observers: ObserverSection { alpha, pinning, mu },
                            gain,
                            initial: InitialSection {
                                leader: init.0,
                                agents: init.1,
                                observers: init.2,
                            },
                            t_final: horizon.0,
                            step: horizon.1,
                            thresholds: horizon.2,
                        }
                    },
                )
        })
    })
}

proptest! {
    #[test]
    fn json_round_trip(file in scenario()) {
        let back = ScenarioFile::parse(&file.to_json()).unwrap();
        prop_assert_eq!(back, file);
    }
}
