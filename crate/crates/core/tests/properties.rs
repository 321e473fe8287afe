//! Property tests against independent oracles: dense shift-matrix transfer,
//! brute-force polytope vertices, decomposition level balance, and planner
//! claims.

use proptest::prelude::*;
use std::collections::BTreeSet;

use twic::capacity::{region, region_constraints, Constraint, RatePair};
use twic::channel::{transfer, ChannelParams, SignalVector, Q};
use twic::decomposition::{factor_multiset, instance_is_faithful, level_assignment, shape_multiset};
use twic::planner::plan_scheme;

/// Dense q x q down-shift by k applied to x.
fn shift_matrix(q: usize, k: usize) -> Vec<Vec<bool>> {
    (0..q).map(|i| (0..q).map(|j| i >= k && j == i - k).collect()).collect()
}

fn mat_vec(a: &[Vec<bool>], x: &[bool]) -> Vec<bool> {
    a.iter().map(|row| row.iter().zip(x).fold(false, |acc, (&r, &v)| acc ^ (r & v))).collect()
}

fn oracle(xd: &[bool], xc: &[bool], n: usize, m: usize) -> Vec<bool> {
    let q = n.max(m);
    let a = mat_vec(&shift_matrix(q, q - n), xd);
    let b = mat_vec(&shift_matrix(q, q - m), xc);
    a.iter().zip(&b).map(|(x, y)| x ^ y).collect()
}

#[test]
fn transfer_exhaustive_3_2() {
    for bits in 0u32..64 {
        let xd: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
        let xc: Vec<bool> = (3..6).map(|i| bits >> i & 1 == 1).collect();
        let y = transfer(&SignalVector::from_bits(xd.clone()), &SignalVector::from_bits(xc.clone()), 3, 2).unwrap();
        assert_eq!(y.bits, oracle(&xd, &xc, 3, 2));
    }
}

#[test]
fn transfer_worked_example() {
    // (A, a) direct and (B, b) cross over (2,1): top A, bottom a + B
    let y = transfer(&SignalVector::parse("10").unwrap(), &SignalVector::parse("10").unwrap(), 2, 1).unwrap();
    assert_eq!(y.to_string(), "11");
    let y = transfer(&SignalVector::parse("01").unwrap(), &SignalVector::parse("10").unwrap(), 2, 1).unwrap();
    assert_eq!(y.to_string(), "00");
}

fn channel() -> impl Strategy<Value = (usize, usize, Vec<bool>, Vec<bool>, Vec<bool>, Vec<bool>)> {
    (0usize..9, 0usize..9).prop_flat_map(|(n, m)| {
        let q = n.max(m);
        (
            Just(n),
            Just(m),
            prop::collection::vec(any::<bool>(), q),
            prop::collection::vec(any::<bool>(), q),
            prop::collection::vec(any::<bool>(), q),
            prop::collection::vec(any::<bool>(), q),
        )
    })
}

/// Vertices of {c . r <= c0} by intersecting every pair of boundary lines.
fn vertex_oracle(cs: &[Constraint]) -> BTreeSet<(Q, Q)> {
    let mut out = BTreeSet::new();
    let q = |x: i64| Q::from_integer(x);
    for (i, a) in cs.iter().enumerate() {
        for b in &cs[i + 1..] {
            let det = a.a * b.b - a.b * b.a;
            if det == 0 {
                continue;
            }
            let x = Q::new(a.c * b.b - a.b * b.c, det);
            let y = Q::new(a.a * b.c - a.c * b.a, det);
            if cs.iter().all(|c| q(c.a) * x + q(c.b) * y <= q(c.c)) {
                out.insert((x, y));
            }
        }
    }
    out
}

proptest! {
    #[test]
    fn transfer_matches_matrix_oracle((n, m, xd, xc, _, _) in channel()) {
        let y = transfer(&SignalVector::from_bits(xd.clone()), &SignalVector::from_bits(xc.clone()), n, m).unwrap();
        prop_assert_eq!(y.bits, oracle(&xd, &xc, n, m));
    }

    #[test]
    fn transfer_is_linear((n, m, xd, xc, xd2, xc2) in channel()) {
        let s = SignalVector::from_bits;
        let y1 = transfer(&s(xd.clone()), &s(xc.clone()), n, m).unwrap();
        let y2 = transfer(&s(xd2.clone()), &s(xc2.clone()), n, m).unwrap();
        let sum = transfer(&s(xd).xor(&s(xd2)).unwrap(), &s(xc).xor(&s(xc2)).unwrap(), n, m).unwrap();
        prop_assert_eq!(sum, y1.xor(&y2).unwrap());
    }

    #[test]
    fn region_vertices_match_oracle(n in 0usize..9, m in 0usize..9, a in 0usize..9, b in 0usize..9) {
        let p = ChannelParams::new(n, m, a, b);
        let reg = region(&p);
        let mut cs = region_constraints(&p);
        cs.push(Constraint::new(-1, 0, 0));
        cs.push(Constraint::new(0, -1, 0));
        let got: BTreeSet<(Q, Q)> = reg.vertices.iter().map(|v| (v.r_fwd, v.r_bwd)).collect();
        prop_assert_eq!(got, vertex_oracle(&cs));
        prop_assert!(reg.contains(&RatePair::zero()));
    }

    #[test]
    fn decomposition_conserves_levels(n in 0usize..40, m in 0usize..40) {
        if let Ok(ms) = factor_multiset(n, m) {
            let sum = ms.iter().fold((0, 0), |acc, (s, k)| (acc.0 + k * s.n, acc.1 + k * s.m));
            prop_assert_eq!(sum, (n, m));
            let inst = level_assignment(n, m).unwrap();
            prop_assert_eq!(shape_multiset(&inst), ms);
            prop_assert!(inst.iter().all(|f| instance_is_faithful(f, n, m)));
            // every transmit and receive level is used exactly once
            let mut tx: Vec<usize> = inst.iter().flat_map(|f| f.tx_levels.clone()).collect();
            tx.sort();
            prop_assert_eq!(tx, (0..n.max(m)).collect::<Vec<_>>());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plan_claims_sum_to_the_vertex(n in 0usize..7, m in 0usize..7, a in 0usize..7, b in 0usize..7, pick in 0usize..8) {
        let p = ChannelParams::new(n, m, a, b);
        let vs = region(&p).vertices;
        let v = vs[pick % vs.len()];
        let plan = plan_scheme(&p, v).unwrap();
        prop_assert_eq!(plan.claimed_sum().unwrap(), v);
    }
}
