// SPDX-License-Identifier: Apache-2.0

use super::*;
use proptest::prelude::*;

fn result(scenario: Scenario, model: ModelKind, seed_index: usize, accuracy: f64) -> SeedResult {
    SeedResult {
        seed_index,
        seed: seed_index as u64,
        scenario,
        model,
        client: 0,
        accuracy,
        curve: vec![],
    }
}

#[test]
fn single_result_has_zero_spread() {
    let s = summarize(&[result(Scenario::Local, ModelKind::Svm, 0, 0.71)]).unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].mean, 0.71);
    assert_eq!(s[0].stddev, 0.0);
    assert_eq!(s[0].ci95_half_width, 0.0);
}

#[test]
fn sample_stddev_of_two_values() {
    let s = Summary::of(Scenario::Aafv, ModelKind::Logistic, &[0.7, 0.8]).unwrap();
    assert!((s.mean - 0.75).abs() < 1e-15);
    assert!((s.stddev - 0.005f64.sqrt()).abs() < 1e-12);
    assert!((s.ci95_half_width - 1.96 * 0.005f64.sqrt() / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn groups_are_keyed_by_scenario_and_model() {
    let rs = vec![
        result(Scenario::Fedavg, ModelKind::Logistic, 0, 0.6),
        result(Scenario::Aafv, ModelKind::Logistic, 0, 0.8),
        result(Scenario::Aafv, ModelKind::Logistic, 1, 0.9),
        result(Scenario::Aafv, ModelKind::Svm, 0, 0.5),
    ];
    let s = summarize(&rs).unwrap();
    let keys: Vec<_> = s.iter().map(|s| (s.scenario, s.model, s.count)).collect();
    assert_eq!(
        keys,
        vec![
            (Scenario::Aafv, ModelKind::Logistic, 2),
            (Scenario::Aafv, ModelKind::Svm, 1),
            (Scenario::Fedavg, ModelKind::Logistic, 1),
        ]
    );
}

#[test]
fn summarize_rejects_empty_and_out_of_range() {
    assert!(matches!(summarize(&[]), Err(MetricsError::Empty)));
    assert!(matches!(
        summarize(&[result(Scenario::Aafv, ModelKind::Svm, 0, 1.2)]),
        Err(MetricsError::AccuracyRange(_))
    ));
}

#[test]
fn ln_gamma_at_known_points() {
    assert!(ln_gamma(1.0).abs() < 1e-14);
    assert!(ln_gamma(2.0).abs() < 1e-14);
    assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    // ln(9!)
    assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
}

#[test]
fn incomplete_beta_closed_forms() {
    // I_x(1, 1) = x, I_x(a, 1) = x^a
    for x in [0.1, 0.37, 0.5, 0.9] {
        assert!((regularized_incomplete_beta(1.0, 1.0, x) - x).abs() < 1e-12);
        assert!((regularized_incomplete_beta(3.0, 1.0, x) - x.powi(3)).abs() < 1e-12);
    }
}

#[test]
fn cauchy_tail_matches_arctangent() {
    // df = 1 is Cauchy: P(|T| >= t) = 1 - 2 atan(t) / pi
    for t in [0.3, 1.0, 2.5, 40.0] {
        let expect = 1.0 - 2.0 * f64::atan(t) / std::f64::consts::PI;
        assert!((student_t_two_sided(t, 1.0) - expect).abs() < 1e-10, "t = {t}");
    }
}

#[test]
fn identical_samples() {
    let a = [0.7, 0.72, 0.69, 0.75];
    let w = welch_t_test(&a, &a).unwrap();
    assert_eq!(w.t, 0.0);
    assert!((w.p - 1.0).abs() < 1e-12);
}

#[test]
fn well_separated_samples() {
    let a: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
    let b: Vec<f64> = a.iter().map(|v| v + 10.0).collect();
    let w = welch_t_test(&a, &b).unwrap();
    assert!(w.p < 1e-6, "p = {}", w.p);
}

#[test]
fn degenerate_variance() {
    let w = welch_t_test(&[0.5, 0.5], &[0.5, 0.5, 0.5]).unwrap();
    assert_eq!(w.p, 1.0);
    let w = welch_t_test(&[0.5, 0.5], &[0.6, 0.6]).unwrap();
    assert_eq!(w.p, 0.0);
    assert_eq!(w.t, f64::NEG_INFINITY);
}

#[test]
fn too_few_samples() {
    assert!(matches!(
        welch_t_test(&[1.0], &[1.0, 2.0]),
        Err(MetricsError::TooFewSamples { which: 'a', len: 1 })
    ));
}

proptest! {
    #[test]
    fn welch_is_antisymmetric_in_t(
        a in prop::collection::vec(-5.0f64..5.0, 2..20),
        b in prop::collection::vec(-5.0f64..5.0, 2..20),
    ) {
        let ab = welch_t_test(&a, &b).unwrap();
        let ba = welch_t_test(&b, &a).unwrap();
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        prop_assert!((ab.t + ba.t).abs() < 1e-9 || (ab.t.is_infinite() && ab.t == -ba.t));
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }

    #[test]
    fn p_decreases_with_abs_t(df in 1.0f64..80.0, t1 in 0.0f64..8.0, dt in 0.01f64..3.0) {
        let p1 = student_t_two_sided(t1, df);
        let p2 = student_t_two_sided(t1 + dt, df);
        prop_assert!(p2 <= p1 + 1e-12);
        prop_assert!((student_t_two_sided(-t1, df) - p1).abs() < 1e-14);
    }

    #[test]
    fn constant_sample_summary(v in 0.0f64..1.0, n in 1usize..30) {
        let s = Summary::of(Scenario::Local, ModelKind::Mlp, &vec![v; n]).unwrap();
        prop_assert!((s.mean - v).abs() < 1e-12);
        prop_assert!(s.stddev < 1e-12);
    }
}

fn sample_report() -> Report {
    let rs = vec![
        result(Scenario::Aafv, ModelKind::Svm, 0, 0.74),
        result(Scenario::Aafv, ModelKind::Svm, 1, 0.78),
        result(Scenario::Local, ModelKind::Svm, 0, 0.70),
        result(Scenario::Local, ModelKind::Svm, 1, 0.71),
        result(Scenario::Fedavg, ModelKind::Svm, 0, 0.61),
        result(Scenario::Fedavg, ModelKind::Svm, 1, 0.66),
    ];
    let comparisons = Comparison::collect_all(&rs);
    Report {
        schema_version: REPORT_SCHEMA_VERSION,
        software_version: "0.0.0".into(),
        config: serde_json::json!({"epsilon": 1.0}),
        epsilon: 1.0,
        tau: 0.3,
        master_seed: 1,
        seeds: vec![11, 12],
        ldp: LdpAccounting {
            epsilon_per_invocation: 1.0,
            piecewise_per_client_round: 126,
            rounds: 30,
            piecewise_per_client: 3780,
            laplace_uploads_per_client: 30,
            fedavg_clip: 1.0,
        },
        summaries: summarize(&rs).unwrap(),
        mean_p_value: Report::mean_p_values(&comparisons),
        comparisons,
        notes: vec!["n".into()],
    }
}

#[test]
fn report_json_round_trips() {
    let r = sample_report();
    let back = Report::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn report_has_one_row_per_group_and_both_comparisons() {
    let r = sample_report();
    assert_eq!(r.summaries.len(), 3);
    let bases: Vec<_> = r.comparisons.iter().map(|c| c.baseline).collect();
    assert_eq!(bases, vec![Scenario::Fedavg, Scenario::Local]);
    let table = render_table(&r);
    assert_eq!(table.lines().filter(|l| l.contains("svm")).count(), 5);
}

#[test]
fn seed_csv_has_header_and_rows() {
    let csv = seed_results_csv(&[result(Scenario::Aafv, ModelKind::Mlp, 3, 0.5)]);
    assert_eq!(
        csv,
        "seed_index,seed,scenario,model,client,accuracy\n3,3,aafv,mlp,0,0.5\n"
    );
}
