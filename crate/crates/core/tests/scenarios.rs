use gsic::scenarios::{self, ScenarioData, ScenarioError};
use gsic::solver::SolverOptions;

#[test]
fn every_example_reproduces() {
    let opts = SolverOptions::default();
    for id in scenarios::SCENARIO_IDS {
        let rep = scenarios::reproduce(id, &opts, 16).unwrap();
        assert_eq!(rep.id, id);
        let failed: Vec<_> = rep
            .rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| &r.quantity)
            .collect();
        assert!(failed.is_empty(), "example {id}: {failed:?}");
        assert!(rep
            .artifacts
            .iter()
            .any(|a| a.name == format!("example{id}.json")));
        match scenarios::load(id).unwrap() {
            ScenarioData::Channel(_) => {
                assert!(!rep.rows.is_empty(), "example {id} has no comparisons")
            }
            ScenarioData::Map(_) => assert!(rep.artifacts.iter().any(|a| a.name.ends_with(".csv"))),
        }
    }
}

#[test]
fn zic_examples_write_boundary_files() {
    let rep = scenarios::reproduce(5, &SolverOptions::default(), 8).unwrap();
    let csv = rep
        .artifacts
        .iter()
        .find(|a| a.name.ends_with(".csv"))
        .unwrap();
    assert_eq!(csv.contents.lines().count(), 9);
    assert!(csv.contents.starts_with("phi_over_pi,"));
}

#[test]
fn unknown_example_is_an_error() {
    assert!(matches!(
        scenarios::reproduce(0, &SolverOptions::default(), 8),
        Err(ScenarioError::UnknownId(0))
    ));
    assert!(scenarios::source(9).is_err());
}
