//! Scheme invariants: stage structure, neutralization, retrospective decoding
//! order, rate tradeoffs and zero-error decoding over many realizations.

use twic::capacity::RatePair;
use twic::channel::{Direction, Q};
use twic::engine::Node;
use twic::error::TwicError;
use twic::schemes::{compile, make_scheme, retrospective_decode_order, scheme_rate, SchemeKind, SchemeParams, SchemeSpec};
use twic::simulator::{run_isolated, verify_zero_error, RunOptions};

fn spec(kind: SchemeKind, p: SchemeParams) -> SchemeSpec {
    SchemeSpec::catalogue(kind, p).unwrap()
}

#[test]
fn scheme1_block_and_rate() {
    let s = spec(SchemeKind::Scheme1, SchemeParams::default());
    let (_, b) = make_scheme(&s).unwrap();
    assert_eq!((b.slots_per_block, b.fwd_bits, b.bwd_bits), (2, 6, 4));
    assert_eq!(scheme_rate(&s).unwrap(), RatePair::int(3, 2));
}

#[test]
fn scheme2_block_at_l1() {
    let s = spec(SchemeKind::Scheme2, SchemeParams::with_l(1));
    let (_, b) = make_scheme(&s).unwrap();
    assert_eq!((b.slots_per_block, b.fwd_bits, b.bwd_bits), (3, 6, 2));
    assert_eq!(scheme_rate(&s).unwrap(), RatePair::new(Q::from_integer(2), Q::new(2, 3)));
}

#[test]
fn scheme2_rate_at_l50() {
    let s = spec(SchemeKind::Scheme2, SchemeParams::with_l(50));
    assert_eq!(scheme_rate(&s).unwrap(), RatePair::new(Q::new(300, 101), Q::new(100, 101)));
}

#[test]
fn lemma_rates() {
    assert_eq!(scheme_rate(&spec(SchemeKind::Lemma3I, SchemeParams::ijk(1, 1, 0))).unwrap(), RatePair::int(1, 1));
    assert_eq!(scheme_rate(&spec(SchemeKind::Lemma3Ii, SchemeParams::ijk(2, 1, 1))).unwrap(), RatePair::int(6, 2));
    let iv = SchemeSpec::new(
        SchemeKind::Lemma4Iv,
        vec![twic::decomposition::Shape::new(2, 1)],
        vec![twic::decomposition::Shape::new(0, 1); 2],
        SchemeParams::default(),
    );
    assert_eq!(scheme_rate(&iv).unwrap(), RatePair::int(2, 2));
}

#[test]
fn scheme2_stage_structure() {
    for l in 1..=6 {
        let c = compile(&spec(SchemeKind::Scheme2, SchemeParams::with_l(l))).unwrap();
        assert_eq!(c.slots, 2 * l + 1);
        let fresh_fwd_in_ignition = c.syms.iter().filter(|s| s.owner.side() == Direction::Forward && s.slot == l + 1).count();
        assert_eq!(fresh_fwd_in_ignition, 0, "L={l}");
        // stage I introduces 4 forward bits per slot, stage II's unwinding 2
        for slot in 1..=l {
            assert_eq!(c.syms.iter().filter(|s| s.owner.side() == Direction::Forward && s.slot == slot).count(), 4);
        }
    }
}

#[test]
fn scheme2_payload_variant_uses_ignition_tops() {
    let mut p = SchemeParams::with_l(3);
    p.ignition_payload = true;
    let c = compile(&spec(SchemeKind::Scheme2, p)).unwrap();
    let names: Vec<&str> = c.syms.iter().filter(|s| s.slot == 4 && s.owner.side() == Direction::Forward).map(|s| s.name.as_str()).collect();
    assert_eq!(names, vec!["A*", "B*"]);
}

#[test]
fn scheme1_neutralization() {
    let c = compile(&spec(SchemeKind::Scheme1, SchemeParams::default())).unwrap();
    // stage-II bottom-level receptions contain only the intended user's bits
    for (rx, owner) in [(Node::V1, Node::U1), (Node::V2, Node::U2)] {
        let bottom = &c.rx_symbolic(2, rx, 0)[1];
        assert!(!bottom.is_zero());
        assert!(bottom.ones().all(|s| c.syms[s].owner == owner), "{rx}: {bottom:?}");
    }
}

#[test]
fn retrospective_order_shape() {
    assert_eq!(retrospective_decode_order(1), vec![("~a1".to_string(), "~b1".to_string()), ("a1".into(), "b1".into())]);
    let o = retrospective_decode_order(3);
    assert_eq!(o.len(), 6);
    let idx = |s: &str| s.trim_start_matches('~').trim_start_matches(['a', 'b']).parse::<usize>().unwrap();
    for w in o.windows(2) {
        assert!(idx(&w[0].0) >= idx(&w[1].0));
    }
}

#[test]
fn scheme2_decodes_follow_retrospective_order() {
    for l in [2, 4, 7] {
        let c = compile(&spec(SchemeKind::Scheme2, SchemeParams::with_l(l))).unwrap();
        let deadline = |name: &str| {
            let id = c.sym_named(name).unwrap();
            c.decodes.iter().find(|d| d.sym == id).unwrap().slot
        };
        let order = retrospective_decode_order(l);
        let slots: Vec<usize> = order.iter().flat_map(|(x, y)| [deadline(x), deadline(y)]).collect();
        assert!(slots.windows(2).all(|w| w[0] <= w[1]), "L={l}: {slots:?}");
        // the unwinding proceeds one level per slot after the ignition
        assert!(deadline(&format!("a{l}")) <= l + 2);
    }
}

#[test]
fn lemma3_one_to_one_tradeoff() {
    for (kind, f) in [(SchemeKind::Lemma3Ii, 3), (SchemeKind::Lemma3Iii, 3), (SchemeKind::Lemma3I, 1)] {
        for j in 1..=3 {
            for k in 0..=2 {
                let r = |i| {
                    let mut p = SchemeParams::ijk(i, j, k);
                    if kind == SchemeKind::Lemma3I {
                        p.k = 0;
                    }
                    SchemeSpec::catalogue(kind, p).and_then(|s| scheme_rate(&s))
                };
                for i in 1..=5 {
                    if let (Ok(a), Ok(b)) = (r(i), r(i + 1)) {
                        assert_eq!(b.r_fwd - a.r_fwd, Q::from_integer(f));
                        assert_eq!(a.r_bwd - b.r_bwd, Q::from_integer(1));
                    }
                }
            }
        }
    }
}

#[test]
fn infeasible_sets_name_the_inequality() {
    let e = SchemeSpec::catalogue(SchemeKind::Lemma3I, SchemeParams::ijk(3, 1, 0)).unwrap_err();
    assert_eq!(e, TwicError::Infeasible { kind: "LEMMA3_I".into(), inequality: "i <= 2j".into() });
    assert!(SchemeSpec::catalogue(SchemeKind::Scheme2, SchemeParams::with_l(0)).is_err());
}

#[test]
fn every_kind_is_zero_error_over_many_realizations() {
    use SchemeKind::*;
    let mut cases: Vec<SchemeSpec> = vec![
        spec(Scheme1, SchemeParams::default()),
        spec(PerfectFeedback21, SchemeParams::default()),
        spec(Lemma3I, SchemeParams::ijk(2, 1, 0)),
        spec(Lemma3Ii, SchemeParams::ijk(3, 1, 1)),
        spec(Lemma3Iii, SchemeParams::ijk(3, 1, 1)),
        spec(Lemma4Ii, SchemeParams::ijk(2, 1, 0)),
        spec(Lemma4Iii, SchemeParams::ijk(1, 2, 0)),
        spec(Lemma4Iv, SchemeParams::ijk(1, 0, 0)),
        spec(Lemma4V, SchemeParams::ijk(1, 0, 0)),
    ];
    for l in 1..=8 {
        cases.push(spec(Scheme2, SchemeParams::with_l(l)));
    }
    let mut mirrored = SchemeParams::ijk(2, 1, 0);
    mirrored.direction = Direction::Backward;
    cases.push(spec(Lemma4Ii, mirrored));
    for s in &cases {
        let (_, b) = make_scheme(s).unwrap();
        // at least 1000 independent realizations of every block
        let blocks = 1000;
        let r = run_isolated(s, blocks, 42, &RunOptions::default()).unwrap();
        assert!(verify_zero_error(&r), "{}: {} errors", s.kind, r.error_count);
        assert_eq!(r.fwd_bits_delivered, blocks * b.fwd_bits);
        assert_eq!(r.bwd_bits_delivered, blocks * b.bwd_bits);
    }
}
