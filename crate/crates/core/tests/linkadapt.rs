use bmdr_core::detect::{DetectorKind, DetectorSpec};
use bmdr_core::linkadapt::{select_detector, select_detector_weighted, LaState, DEFAULT_STEP_FAIL};

fn specs() -> Vec<DetectorSpec> {
    vec![
        DetectorSpec::new(DetectorKind::Lmmse, 1, 2).with_complexity(1.0),
        DetectorSpec::new(DetectorKind::KBest(32), 1, 2).with_complexity(32.0),
    ]
}

#[test]
fn weighted_selection_trades_rate_for_complexity() {
    // normalized rates 0.6 and 0.8; scores at gamma 0.5 are 0.284375 and -0.1
    let results = vec![vec![(2, 0.3)], vec![(2, 0.4)]];
    let s = specs();
    let score = |g: f64, f1: f64, c: f64| g * f1 - (1.0 - g) * c / 32.0;
    assert!((score(0.5, 0.6, 1.0) - 0.284375).abs() < 1e-12);
    assert!((score(0.5, 0.8, 32.0) + 0.1).abs() < 1e-12);
    assert_eq!(select_detector_weighted(&results, &s, 0.5, 1.0).unwrap(), 0);
    // the scores cross at gamma = (31/32) / (0.2 + 31/32)
    let cross = (31.0 / 32.0) / (0.2 + 31.0 / 32.0);
    assert_eq!(select_detector_weighted(&results, &s, cross - 0.01, 1.0).unwrap(), 0);
    assert_eq!(select_detector_weighted(&results, &s, cross + 0.01, 1.0).unwrap(), 1);
    assert_eq!(select_detector(&results, &s).unwrap(), 1);
}

#[test]
fn ties_go_to_the_cheaper_detector() {
    let results = vec![vec![(4, 0.5), (2, 0.5)], vec![(2, 0.5), (4, 0.5)]];
    assert_eq!(select_detector(&results, &specs()).unwrap(), 0);
}

#[test]
fn offset_drift_balances_at_target() {
    let eps = 0.01;
    let mut st = LaState::new(1, 3, eps).unwrap();
    assert!((st.step_ok / st.step_fail - eps / (1.0 - eps)).abs() < 1e-15);
    assert_eq!(st.step_fail, DEFAULT_STEP_FAIL);
    // one failure per 1/eps codewords leaves the offset unchanged
    for _ in 0..3 {
        for _ in 0..99 {
            st.record(0, true);
        }
        st.record(0, false);
    }
    assert!(st.delta(0).abs() < 1e-12, "{}", st.delta(0));
}
