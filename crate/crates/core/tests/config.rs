use negosim_core::*;

#[test]
fn scenario_files_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("scen");
    std::fs::create_dir(&sub).unwrap();
    let sc = GeneratorSpec {
        name: "saved".into(),
        issues: 2,
        values_per_issue: 3,
        integer_issues: 0,
        parties: 3,
        reservation: 0.2,
        discount: 1.0,
    }
    .generate(3)
    .unwrap();
    std::fs::write(sub.join("s.json"), sc.to_json_string()).unwrap();
    assert_eq!(Scenario::load(&sub.join("s.json")).unwrap(), sc);

    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        r#"{"scenarios": [{"file": "scen/s.json"}],
            "roster": [{"id": "a", "strategy": {"type": "random"}}],
            "repetitions": 2, "beta_grid": [1.0], "discount_grid": [0.5, 1.0]}"#,
    )
    .unwrap();
    let cfg = TournamentConfig::load(&cfg_path).unwrap();
    let records = run_tournament(&cfg, &StrategyRegistry::with_builtins()).unwrap();
    assert_eq!(records.len(), 4);
    assert!(records.iter().all(|r| r.scenario == "saved"));
    assert!(records.iter().all(|r| r.profiles[0].discount_factor() == r.delta.unwrap()));
}

#[test]
fn missing_scenario_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        r#"{"scenarios": [{"file": "nope.json"}], "roster": [{"id": "a", "strategy": {"type": "random"}}]}"#,
    )
    .unwrap();
    let cfg = TournamentConfig::load(&cfg_path).unwrap();
    let err = run_tournament(&cfg, &StrategyRegistry::with_builtins()).unwrap_err();
    assert!(matches!(err, NegotiationError::Config(_)), "{err}");
}
