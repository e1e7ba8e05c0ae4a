mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use retrobell_core::chsh::{TSIRELSON_BOUND, TSIRELSON_TOLERANCE};
use retrobell_core::quantum::bell_expectation;
use retrobell_core::sim::{sample_postselected, SampleOptions};
use retrobell_core::*;

/// Three variables with domains of size 2, 3 and 2 and integer weights.
fn small_joint() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..10, 12).prop_filter("some mass", |w| w.iter().any(|&x| x > 0))
}

fn vars() -> Vec<Variable> {
    vec![
        Variable::outcome("a"),
        Variable::new("b", vec![Value::Int(0), Value::Int(1), Value::Int(2)]).unwrap(),
        Variable::labels("c", &["u", "v"]).unwrap(),
    ]
}

fn cells() -> Vec<Vec<Value>> {
    let mut out = Vec::new();
    for a in [1i64, -1] {
        for b in 0..3 {
            for c in ["u", "v"] {
                out.push(vec![Value::Int(a), Value::Int(b), Value::from(c)]);
            }
        }
    }
    out
}

fn build<P: Prob>(w: &[u32]) -> Joint<P> {
    Joint::from_weights(vars(), cells().into_iter().zip(w.iter().map(|&x| P::ratio(x as i64, 1)))).unwrap()
}

fn angle() -> impl Strategy<Value = f64> {
    -2.0 * PI..2.0 * PI
}

proptest! {
    #[test]
    fn weights_normalize_exactly(w in small_joint()) {
        let j = build::<Rational>(&w);
        prop_assert_eq!(j.total_mass(), Rational::ratio(1, 1));
    }

    #[test]
    fn marginalization_composes(w in small_joint()) {
        let j = build::<Rational>(&w);
        let two_step = j.marginalize(&["a", "b"]).unwrap().marginalize(&["a"]).unwrap();
        prop_assert_eq!(two_step, j.marginalize(&["a"]).unwrap());
    }

    #[test]
    fn conditioning_fixes_evidence_and_obeys_bayes(w in small_joint(), b in 0i64..3) {
        let j = build::<Rational>(&w);
        let pb = j.marginalize(&["b"]).unwrap().prob(&[b]).unwrap();
        prop_assume!(pb > Rational::ratio(0, 1));
        let cond = j.condition(&[("b", Value::Int(b))]).unwrap();
        prop_assert_eq!(cond.variable_names(), vec!["a", "c"]);
        prop_assert_eq!(cond.total_mass(), Rational::ratio(1, 1));
        let both = j.condition(&[("b", Value::Int(b)), ("c", Value::from("u"))]);
        let stepwise = cond.condition(&[("c", Value::from("u"))]);
        prop_assert_eq!(both.is_ok(), stepwise.is_ok());
        if let (Ok(x), Ok(y)) = (both, stepwise) {
            prop_assert_eq!(x, y);
        }
        let pab = j.marginalize(&["a", "b"]).unwrap();
        for a in [1i64, -1] {
            let lhs = cond.marginalize(&["a"]).unwrap().prob(&[a]).unwrap() * pb.clone();
            prop_assert_eq!(lhs, pab.prob(&[a, b]).unwrap());
        }
    }

    #[test]
    fn backends_agree(w in small_joint()) {
        let exact = build::<Rational>(&w).to_f64();
        let float = build::<f64>(&w);
        prop_assert!(exact.tv_distance(&float).unwrap() <= 1e-12);
    }

    #[test]
    fn json_round_trip(w in small_joint()) {
        let j = build::<Rational>(&w);
        prop_assert_eq!(Joint::<Rational>::from_json(&j.to_json()).unwrap(), j);
    }

    #[test]
    fn bell_model_recovers_and_keeps_si(x in angle(), y in angle()) {
        let m = bell_backward_model();
        let s = vec![SettingSpec::angle(x), SettingSpec::angle(y)];
        for (l, p) in m.lambda_given_settings(&s).unwrap().into_iter().enumerate() {
            prop_assert!((p - 0.25).abs() <= 1e-12);
            let tv = m.condition_on_lambda(l, &s).unwrap().tv_distance(&bell_oracle_joint(l, x, y)).unwrap();
            prop_assert!(tv <= 1e-12);
        }
        prop_assert!(m.verify_kernel_normalization(&[s]).unwrap().pass);
    }

    #[test]
    fn correlations_only_after_conditioning(x in angle(), y in angle()) {
        prop_assume!((x - y).cos().abs() > 1e-3);
        let m = bell_backward_model();
        let s = vec![SettingSpec::angle(x), SettingSpec::angle(y)];
        let cond = m.condition_on_lambda(0, &s).unwrap();
        let prod = Joint::from_weights(outcome_vars(2), Outcome::tuples(2).into_iter().map(|o| {
            let p1 = cond.marginalize(&["a1"]).unwrap().prob(&[o[0]]).unwrap();
            let p2 = cond.marginalize(&["a2"]).unwrap().prob(&[o[1]]).unwrap();
            (vec![o[0].into(), o[1].into()], p1 * p2)
        })).unwrap();
        prop_assert!(cond.tv_distance(&prod).unwrap() > 1e-6);

        let uncond = m.assemble_joint(&s).unwrap().marginalize(&["a1", "a2"]).unwrap();
        let e = uncond.expectation(|a| (a.int("a1") * a.int("a2")) as f64);
        prop_assert!(e.abs() <= 1e-12);
    }

    #[test]
    fn quantum_chsh_never_exceeds_tsirelson(a in angle(), ap in angle(), b in angle(), bp in angle(), k in 0u8..4) {
        let st = BellState::from_index(k + 1).unwrap();
        let c = ChshConfig::new(Angle(a), Angle(ap), Angle(b), Angle(bp));
        let s: f64 = chsh_value(|x, y| bell_expectation(st, x, y), &c);
        prop_assert!(s <= TSIRELSON_BOUND + TSIRELSON_TOLERANCE);
        // a global sign on E leaves the absolute-value form unchanged
        let neg: f64 = chsh_value(|x, y| -bell_expectation(st, x, y), &c);
        prop_assert!((s - neg).abs() <= 1e-12);
    }

    #[test]
    fn lhv_strategies_stay_within_two(bits in 0u8..16) {
        let s = DeterministicStrategy::all()[bits as usize];
        prop_assert!(s.chsh().abs() <= 2);
    }
}

#[test]
fn exhaustion_matches_brute_force() {
    let r = classical_assignment_exhaustion(true);
    let (all, each, three) = ghz_exhaustion_counts();
    assert_eq!(r.satisfying_all, all);
    assert_eq!(r.per_constraint, each.to_vec());
    assert_eq!(r.satisfying_exactly_three, three);
    assert_eq!(r.near_misses.as_ref().map(Vec::len), Some(three));
    assert_eq!(lhv_max_chsh(&ChshConfig::new(0u8, 1, 0, 1)), lhv_max_by_loops());
}

#[test]
fn pr_and_ghz_models_recover_exactly() {
    let pr = pr_box_backward_model();
    for x in 0..2u8 {
        for y in 0..2u8 {
            let s = vec![SettingSpec::binary(x).unwrap(), SettingSpec::binary(y).unwrap()];
            let got = pr.condition_on_lambda(0, &s).unwrap();
            assert_eq!(got.tv_distance(&pr_oracle_joint(x, y)).unwrap(), Rational::ratio(0, 1));
        }
    }
    let ghz = ghz_backward_model();
    for s in ghz.grid() {
        let bits: Vec<u8> = s.iter().map(|v| v.as_binary().unwrap().bit()).collect();
        let got = ghz.model().condition_on_lambda(0, &s).unwrap();
        assert_eq!(got.tv_distance(&ghz_oracle_joint([bits[0], bits[1], bits[2]])).unwrap(), Rational::ratio(0, 1));
    }
}

#[test]
fn float_view_of_exact_models_matches() {
    let exact = ghz_backward_model().into_inner();
    let float = exact.to_float();
    for s in exact.default_grid(2) {
        let a = exact.condition_on_lambda(0, &s).unwrap().to_f64();
        let b = float.condition_on_lambda(0, &s).unwrap();
        assert!(a.tv_distance(&b).unwrap() <= 1e-12);
    }
}

#[test]
fn seeded_sampling_is_reproducible_across_calls() {
    let m = bell_backward_model();
    let s = vec![SettingSpec::angle(0.3), SettingSpec::angle(1.1)];
    let o = SampleOptions::new(5_000, 7).with_shards(3);
    let a = sample_postselected(&m, 2, &s, &o).unwrap();
    let b = sample_postselected(&m, 2, &s, &o).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = sample_postselected(&m, 2, &s, &SampleOptions::new(5_000, 8).with_shards(3)).unwrap();
    assert_ne!(a.cells, c.cells);
}

#[test]
fn tiny_cap_is_reported() {
    let m = bell_backward_model();
    let s = vec![SettingSpec::angle(0.0), SettingSpec::angle(0.0)];
    let err = sample_postselected(&m, 0, &s, &SampleOptions::new(1_000, 1).with_cap(10)).unwrap_err();
    assert!(matches!(err, Error::AcceptanceCapExceeded { .. }), "{err:?}");
}
