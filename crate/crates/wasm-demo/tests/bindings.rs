use serde_json::Value;
use ulr_ident_wasm::{analyze_config_json, fourth_moment_sweep_json, tau_curve_json};

#[test]
fn tau_curve_has_requested_points() {
    let out: Value =
        serde_json::from_str(&tau_curve_json(&[1.0, 1.0], &[2f64.sqrt(), 0.0], 4.0, 81).unwrap())
            .unwrap();
    assert_eq!(out["rows"].as_array().unwrap().len(), 81);
    assert_eq!(out["rows"][0][1], 1.0);
    assert!(out["summary"].as_str().unwrap().contains("simple"));
}

#[test]
fn sweep_covers_the_circle() {
    let rows: Value =
        serde_json::from_str(&fourth_moment_sweep_json(6.0, 1.8, 0.5).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 720);
    assert!(rows.iter().all(|r| r.get("verdict").is_some()));
    assert!(fourth_moment_sweep_json(6.0, 1.8, 0.0).is_err());
}

#[test]
fn analyze_without_and_with_oracle() {
    let cfg =
        r#"{"independent": false, "beta0": [3.0, 4.0], "joint_structure": {"kind": "spherical"}}"#;
    let out: Value = serde_json::from_str(&analyze_config_json(cfg, 0, 0).unwrap()).unwrap();
    assert_eq!(out["report"]["verdict"]["class"], "non_identifiable");
    assert!(out["report"]["verdict"]["oracle_evidence"]
        .as_array()
        .unwrap()
        .is_empty());
    let out: Value = serde_json::from_str(&analyze_config_json(cfg, 500, 1).unwrap()).unwrap();
    assert!(!out["report"]["verdict"]["oracle_evidence"]
        .as_array()
        .unwrap()
        .is_empty());
    assert!(analyze_config_json("{}", 0, 0)
        .unwrap_err()
        .contains("beta0"));
}
