//! Simulator behaviour: exact rates, certification, determinism,
//! orthogonality of plan entries, convergence in L, and negative controls.

use twic::capacity::{region, RatePair};
use twic::channel::{ChannelParams, Q};
use twic::engine::Node;
use twic::error::TwicError;
use twic::planner::{plan_scheme, plan_scheme_with, PlanOptions};
use twic::schemes::{SchemeKind, SchemeParams, SchemeSpec};
use twic::simulator::{check_bounds, run, run_entries, run_scheme, verify_zero_error, Fault, RunOptions, SimulationReport};

fn p(n: usize, m: usize, a: usize, b: usize) -> ChannelParams {
    ChannelParams::new(n, m, a, b)
}

#[test]
fn scheme1_plan_exact() {
    let ch = p(2, 1, 1, 2);
    let plan = plan_scheme(&ch, RatePair::int(3, 2)).unwrap();
    for seed in [0, 1, 99] {
        let r = run(&plan, &ch, 100, seed).unwrap();
        assert_eq!(r.achieved, RatePair::int(3, 2));
        assert_eq!(r.error_count, 0);
        assert!(verify_zero_error(&r));
        let reg = region(&ch);
        assert!(check_bounds(&r, &reg));
        assert_eq!(reg.tight_count(&r.achieved), 2);
    }
}

#[test]
fn scheme2_l50_exact() {
    let s = SchemeSpec::catalogue(SchemeKind::Scheme2, SchemeParams::with_l(50)).unwrap();
    let r = run_scheme(&s, &p(2, 1, 0, 1), 1, 5).unwrap();
    assert_eq!(r.achieved, RatePair::new(Q::new(300, 101), Q::new(100, 101)));
    assert!(verify_zero_error(&r));
}

#[test]
fn example3_plan_exact() {
    let ch = p(4, 2, 1, 3);
    let plan = plan_scheme_with(&ch, RatePair::int(6, 3), PlanOptions { l: 50, ..Default::default() }).unwrap();
    let r = run(&plan, &ch, 1, 3).unwrap();
    assert_eq!(r.achieved, RatePair::new(Q::new(603, 101), Q::new(302, 101)));
    assert!(verify_zero_error(&r));
}

#[test]
fn certification_rejects_impossible_claims() {
    let ch = p(2, 1, 1, 2);
    let s = SchemeSpec::catalogue(SchemeKind::Scheme1, SchemeParams::default()).unwrap();
    let mut r = run_scheme(&s, &ch, 1, 0).unwrap();
    let reg = region(&ch);
    r.achieved = RatePair::int(0, 0);
    assert!(check_bounds(&r, &reg));
    r.achieved = RatePair::int(4, 0);
    assert!(!check_bounds(&r, &reg));
}

#[test]
fn fault_injection_breaks_verification() {
    let ch = p(2, 1, 1, 2);
    let s = SchemeSpec::catalogue(SchemeKind::Scheme1, SchemeParams::default()).unwrap();
    let opt = RunOptions { fault: Some(Fault::FlipBit { node: Node::U2, slot: 2, level: 1 }), ..Default::default() };
    let r = run_entries(std::slice::from_ref(&s), &ch, 3, 0, &opt).unwrap();
    assert!(!verify_zero_error(&r));
    let opt = RunOptions { fault: Some(Fault::WrongLength { node: Node::U1, slot: 4 }), ..Default::default() };
    let e = run_entries(std::slice::from_ref(&s), &ch, 3, 0, &opt).unwrap_err();
    assert!(matches!(e, TwicError::ProtocolViolation { ref node, slot: 4, .. } if node == "u1"));
}

#[test]
fn determinism() {
    let ch = p(4, 2, 1, 3);
    let plan = plan_scheme(&ch, RatePair::int(6, 3)).unwrap();
    let opt = RunOptions { trace: true, ledger: true, ..Default::default() };
    let a = run_entries(&plan.entries, &ch, 2, 17, &opt).unwrap();
    let b = run_entries(&plan.entries, &ch, 2, 17, &opt).unwrap();
    assert_eq!(a, b);
    let c = run_entries(&plan.entries, &ch, 2, 18, &opt).unwrap();
    assert_ne!(a.ledger, c.ledger);
    assert_eq!(a.achieved, c.achieved);
}

fn per_entry(r: &SimulationReport) -> Vec<(usize, usize)> {
    r.entries.iter().map(|e| (e.fwd_bits_delivered, e.bwd_bits_delivered)).collect()
}

#[test]
fn orthogonality_of_entries() {
    for (ch, v) in [(p(4, 2, 1, 3), RatePair::int(6, 3)), (p(1, 3, 1, 3), RatePair::int(3, 1))] {
        let plan = plan_scheme(&ch, v).unwrap();
        assert!(plan.entries.len() >= 2);
        let joint = run(&plan, &ch, 1, 4).unwrap();
        for (i, e) in plan.entries.iter().enumerate() {
            // run alone for the same number of its own blocks
            let blocks = joint.entries[i].blocks;
            let alone = run_entries(std::slice::from_ref(e), &ch, blocks, 9, &RunOptions::default()).unwrap();
            assert_eq!(per_entry(&alone)[0], per_entry(&joint)[i]);
        }
    }
}

#[test]
fn convergence_in_l() {
    let ch = p(2, 1, 0, 1);
    let target = RatePair::int(3, 1);
    let gap = |l: usize| {
        let plan = plan_scheme_with(&ch, target, PlanOptions { l, ..Default::default() }).unwrap();
        let r = run(&plan, &ch, 1, 0).unwrap();
        assert!(verify_zero_error(&r));
        target - r.achieved
    };
    for l in [4usize, 8, 16, 32, 64] {
        let g = gap(l);
        let g2 = gap(2 * l);
        // O(1/L) with constant 3: the gap is exactly (3, 1)/(2L+1)
        assert_eq!(g, RatePair::new(Q::new(3, 2 * l as i64 + 1), Q::new(1, 2 * l as i64 + 1)));
        assert!(g.r_fwd * Q::from_integer(l as i64) <= Q::from_integer(3));
        // doubling L halves the gap up to an O(1/L^2) ignition term
        let l = l as i64;
        assert!(g2.r_fwd < g.r_fwd);
        assert_eq!(g2.r_fwd * 2 - g.r_fwd, Q::new(3, (4 * l + 1) * (2 * l + 1)));
    }
}

#[test]
fn unequal_block_lengths_run_to_the_lcm() {
    let ch = p(4, 2, 1, 3);
    let plan = plan_scheme_with(&ch, RatePair::int(6, 3), PlanOptions { l: 3, ..Default::default() }).unwrap();
    let r = run(&plan, &ch, 1, 0).unwrap();
    let lens: Vec<usize> = r.entries.iter().map(|e| e.slots_per_block).collect();
    let lcm = lens.iter().fold(1, |a, &b| num_integer::lcm(a, b));
    assert_eq!(r.slots_run, lcm);
    for e in &r.entries {
        assert_eq!(e.blocks * e.slots_per_block, lcm);
    }
}

#[test]
fn degenerate_channels() {
    let ch = p(0, 0, 0, 0);
    let plan = plan_scheme(&ch, RatePair::zero()).unwrap();
    let r = run(&plan, &ch, 3, 0).unwrap();
    assert_eq!(r.achieved, RatePair::zero());
    assert!(verify_zero_error(&r));
}
