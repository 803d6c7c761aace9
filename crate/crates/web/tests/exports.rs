use ncsim_core::analysis::b_asymptotic_ratio;
use ncsim_core::{GraphState, ModelParams};
use ncsim_web::{growth_json, sequences_json, small_json};
use serde_json::Value;

#[test]
fn growth_series_reaches_the_last_step() {
    let v: Value = serde_json::from_str(&growth_json(3, 0.5, 0.5, 0.5, 5000, 1).unwrap()).unwrap();
    let points = v["points"].as_array().unwrap();
    assert_eq!(points[0]["n"], 0);
    assert_eq!(points.last().unwrap()["n"], 5000);
    assert!(points
        .windows(2)
        .all(|w| w[0]["n"].as_u64() < w[1]["n"].as_u64()));
    assert!((v["alpha"].as_f64().unwrap() - 5.0 / 12.0).abs() < 1e-15);
    assert!((v["ratio_limit"].as_f64().unwrap() - 0.4).abs() < 1e-15);
}

#[test]
fn growth_rejects_bad_parameters() {
    assert!(growth_json(1, 0.5, 0.5, 0.5, 10, 1).is_err());
    assert!(growth_json(3, 1.5, 0.5, 0.5, 10, 1).is_err());
}

#[test]
fn small_view_is_a_distribution() {
    let state = GraphState::init(&ModelParams::new(3, 0.5, 0.5, 0.5).unwrap()).unwrap();
    let v: Value = serde_json::from_str(&small_json(&state).unwrap()).unwrap();
    let mass: f64 = v["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["probability"].as_f64().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-12);
    assert_eq!(v["edges"].as_array().unwrap().len(), 3);
    // Every vertex of the initial triangle is symmetric.
    let pi = v["participation"].as_array().unwrap();
    assert!(pi
        .iter()
        .all(|x| (x.as_f64().unwrap() - pi[0].as_f64().unwrap()).abs() < 1e-15));
}

#[test]
fn sequence_ratios_approach_one() {
    let v: Value = serde_json::from_str(&sequences_json(5.0 / 12.0, 2, 100_000).unwrap()).unwrap();
    let b = v["b_ratio"].as_array().unwrap();
    let e = v["e_ratio"].as_array().unwrap();
    let n: Vec<u64> = v["n"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .collect();
    assert_eq!((n[0], *n.last().unwrap()), (1, 100_000));
    for (i, &m) in n.iter().enumerate().step_by(20) {
        let direct = b_asymptotic_ratio(m, 2, 5.0 / 12.0);
        assert!(
            (b[i].as_f64().unwrap() - direct).abs() <= 1e-12 * direct,
            "n = {m}"
        );
    }
    assert!((b.last().unwrap().as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert!((e.last().unwrap().as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert!(sequences_json(1.0, 1, 100).is_err());
}

#[test]
fn large_view_drops_the_enumeration_only() {
    let params = ModelParams::new(3, 0.9, 0.5, 0.5).unwrap();
    let mut sim = ncsim_core::Simulation::new(&params, 3, 0).unwrap();
    sim.advance(40).unwrap();
    assert!(sim.state().vertex_count() > ncsim_core::oracle::DEFAULT_ENUMERATION_CAP);
    let v: Value = serde_json::from_str(&small_json(sim.state()).unwrap()).unwrap();
    assert!(v["outcomes"].as_array().unwrap().is_empty());
    let total: f64 = v["participation"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .sum();
    // Old participants plus the expected newborn add up to N.
    assert!((total + 0.9 - 3.0).abs() < 1e-12);
}
