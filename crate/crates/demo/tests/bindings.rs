use heavyq_demo::{pmf_curve, stationary, verdict};

#[test]
fn pmf_curve_matches_closed_form_for_p1() {
    let pmf = pmf_curve(1.0, 10).unwrap();
    for (i, v) in pmf.iter().enumerate() {
        let k = (i + 1) as f64;
        assert!((v - 1.0 / (k * (k + 1.0))).abs() < 1e-14);
    }
    assert!(pmf_curve(1.0, 0).is_err());
    assert!(pmf_curve(-1.0, 5).is_err());
}

#[test]
fn stationary_head_for_exponential_sojourn() {
    let probs = stationary(1.0, 1.0, "exp:1", 64).unwrap();
    let c0 = (-std::f64::consts::PI.powi(2) / 6.0).exp();
    assert!((probs[0] - c0).abs() < 1e-9);
    assert_eq!(probs.len(), 65);
}

#[test]
fn verdicts() {
    assert!(verdict(1.0, 0.5, "pl:2").unwrap().starts_with("unstable"));
    assert!(verdict(1.0, 0.5, "pl:3").unwrap().starts_with("stable"));
    assert!(verdict(1.0, 1.0, "exp:1").unwrap().starts_with("stable (log-criterion)"));
    assert!(verdict(1.0, 1.0, "weibull:1").is_err());
    assert!(stationary(1.0, 0.5, "pl:2", 16).is_err());
}
