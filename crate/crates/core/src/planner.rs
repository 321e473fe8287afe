//! Vertex planner: pairs forward and backward factors with named schemes so
//! that the entries' rates add up to a chosen vertex of the capacity region.
//!
//! Every plan is built from the same ingredients, whatever the regime:
//! - retrospective-decoding pairs, one (2,1) factor with one (0,1) factor of
//!   the opposite direction, each worth (3,1) in the limit;
//! - at most one composite per gain direction: u gain units (the (2,1) or
//!   (0,1) factors of that direction) fed by all remaining factors of the
//!   other direction, which also carry their own messages;
//! - a nonfeedback entry for whatever is left.
//!
//! The planner searches the multiplicities of these ingredients (fewest
//! retrospective pairs first, then fewest units) for an exact match of the
//! target, names each composite after the catalogue entry it coincides with,
//! and checks that every entry compiles. Mirrored regimes need no separate
//! logic: the search treats both directions alike.

use serde::Serialize;

use crate::capacity::{c_no, classify_regime, region, RatePair, RegimeLabel};
use crate::carrier::rider_capacity;
use crate::channel::{ChannelParams, Direction};
use crate::decomposition::{level_assignment, FactorInstance, Shape};
use crate::error::{Result, TwicError};
use crate::schemes::{make_scheme, SchemeKind, SchemeParams, SchemeSpec};

/// Stage-I length used for retrospective-decoding entries by default.
pub const DEFAULT_L: usize = 32;

/// Entries reaching one vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemePlan {
    pub params: ChannelParams,
    pub target: RatePair,
    pub regime: RegimeLabel,
    pub entries: Vec<SchemeSpec>,
}

impl SchemePlan {
    /// Sum of the entries' limiting rate claims.
    pub fn claimed_sum(&self) -> Result<RatePair> {
        self.entries.iter().try_fold(RatePair::zero(), |acc, e| Ok(acc + e.asymptotic_rate()?))
    }
}

/// Factor instances of one direction: its decomposition, or the whole channel
/// when it lies in the central interval.
pub fn factor_instances(n: usize, m: usize) -> Vec<FactorInstance> {
    if n.max(m) == 0 {
        return Vec::new();
    }
    level_assignment(n, m).unwrap_or_else(|_| vec![FactorInstance::whole(n, m)])
}

const S21: Shape = Shape::new(2, 1);
const S01: Shape = Shape::new(0, 1);

fn unit_shape(shapes: &[Shape]) -> Option<Shape> {
    if shapes.contains(&S21) {
        Some(S21)
    } else if shapes.contains(&S01) {
        Some(S01)
    } else {
        None
    }
}

fn unit_rate(shape: Shape, u: usize) -> usize {
    if shape == S21 {
        3 * u
    } else {
        u
    }
}

fn nf(shapes: &[Shape]) -> usize {
    shapes.iter().map(|s| c_no(s.n, s.m)).sum()
}

fn cap(shapes: &[Shape], unit: Shape) -> usize {
    shapes.iter().map(|&s| rider_capacity(s, unit == S21)).sum()
}

/// Remove the first `k` occurrences of `s`; returns (removed, rest).
fn take(shapes: &[Shape], s: Shape, k: usize) -> (Vec<Shape>, Vec<Shape>) {
    let mut left = k;
    let mut rest = Vec::new();
    for &x in shapes {
        if x == s && left > 0 {
            left -= 1;
        } else {
            rest.push(x);
        }
    }
    (vec![s; k - left], rest)
}

/// Options of the planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanOptions {
    pub l: usize,
    /// Use the ignition-payload variant when a plan has at least this many
    /// retrospective-decoding entries.
    pub payload_from: usize,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self { l: DEFAULT_L, payload_from: 2 }
    }
}

/// Plan a vertex of the capacity region with the default options.
pub fn plan_scheme(p: &ChannelParams, target: RatePair) -> Result<SchemePlan> {
    plan_scheme_with(p, target, PlanOptions::default())
}

/// Plan a vertex of the capacity region.
pub fn plan_scheme_with(p: &ChannelParams, target: RatePair, opt: PlanOptions) -> Result<SchemePlan> {
    let spec = region(p);
    if !spec.is_vertex(&target) {
        return Err(TwicError::InvalidTarget(format!("{target} is not a vertex of the region of {p}")));
    }
    if opt.l == 0 {
        return Err(TwicError::Infeasible { kind: "SCHEME2".into(), inequality: "L >= 1".into() });
    }
    let (rf, rb) = (target.r_fwd.to_integer(), target.r_bwd.to_integer());
    let (rf, rb) = (rf as usize, rb as usize);
    let fwd: Vec<Shape> = factor_instances(p.n, p.m).iter().map(|f| f.shape).collect();
    let bwd: Vec<Shape> = factor_instances(p.n_b, p.m_b).iter().map(|f| f.shape).collect();
    let regime = classify_regime(p);

    // retrospective pairs: (2,1) on one side with (0,1) on the other
    let s2_gain = if fwd.contains(&S21) && bwd.contains(&S01) {
        Some(Direction::Forward)
    } else if fwd.contains(&S01) && bwd.contains(&S21) {
        Some(Direction::Backward)
    } else {
        None
    };
    let s2_max = match s2_gain {
        Some(Direction::Forward) => count(&fwd, S21).min(count(&bwd, S01)),
        Some(Direction::Backward) => count(&fwd, S01).min(count(&bwd, S21)),
        None => 0,
    };
    let mut last_err = None;
    for s2 in 0..=s2_max {
        let (f_rest, b_rest) = match s2_gain {
            Some(Direction::Forward) => (take(&fwd, S21, s2).1, take(&bwd, S01, s2).1),
            Some(Direction::Backward) => (take(&fwd, S01, s2).1, take(&bwd, S21, s2).1),
            None => (fwd.clone(), bwd.clone()),
        };
        let (s2f, s2b) = match s2_gain {
            Some(Direction::Forward) => (3 * s2, s2),
            Some(Direction::Backward) => (s2, 3 * s2),
            None => (0, 0),
        };
        if s2f > rf || s2b > rb {
            break;
        }
        let ua_max = unit_shape(&f_rest).map_or(0, |s| count(&f_rest, s));
        let ub_max = unit_shape(&b_rest).map_or(0, |s| count(&b_rest, s));
        let mut combos: Vec<(usize, usize)> =
            (0..=ua_max).flat_map(|a| (0..=ub_max).map(move |b| (a, b))).collect();
        combos.sort_by_key(|&(a, b)| (a + b, a.max(b)));
        for (ua, ub) in combos {
            let Some(c) = candidate(&f_rest, &b_rest, ua, ub, rf - s2f, rb - s2b) else {
                continue;
            };
            let mut entries = Vec::new();
            for _ in 0..s2 {
                let gain = s2_gain.expect("pairs exist");
                let (ef, eb) = match gain {
                    Direction::Forward => (vec![S21], vec![S01]),
                    Direction::Backward => (vec![S01], vec![S21]),
                };
                let params = SchemeParams {
                    l: opt.l,
                    direction: gain,
                    ignition_payload: s2 >= opt.payload_from,
                    ..SchemeParams::default()
                };
                entries.push(SchemeSpec::new(SchemeKind::Scheme2, ef, eb, params));
            }
            entries.extend(c);
            match entries.iter().try_for_each(|e| make_scheme(e).map(|_| ())) {
                Ok(()) => {
                    let plan = SchemePlan { params: *p, target, regime, entries };
                    debug_assert_eq!(plan.claimed_sum().ok(), Some(target));
                    return Ok(plan);
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    Err(last_err.unwrap_or_else(|| TwicError::Construction(format!("no plan found for {target} on {p}"))))
}

fn count(v: &[Shape], s: Shape) -> usize {
    v.iter().filter(|&&x| x == s).count()
}

/// Entries for `ua` forward units and `ub` backward units reaching exactly
/// (rf, rb), if the loads fit.
fn candidate(f: &[Shape], b: &[Shape], ua: usize, ub: usize, rf: usize, rb: usize) -> Option<Vec<SchemeSpec>> {
    let ua_shape = unit_shape(f);
    let ub_shape = unit_shape(b);
    let (units_a, carriers_b) = match ua_shape {
        Some(s) => take(f, s, ua),
        None => (Vec::new(), f.to_vec()),
    };
    let (units_b, carriers_a) = match ub_shape {
        Some(s) => take(b, s, ub),
        None => (Vec::new(), b.to_vec()),
    };
    let gain_a = ua_shape.map_or(0, |s| unit_rate(s, ua));
    let gain_b = ub_shape.map_or(0, |s| unit_rate(s, ub));
    // carrier messages of each composite (or nonfeedback load when unitless)
    let d_b = rf.checked_sub(gain_a)?;
    let d_a = rb.checked_sub(gain_b)?;
    let max_load = |carriers: &[Shape], units: usize, unit: Option<Shape>| -> Option<usize> {
        if units == 0 {
            return Some(nf(carriers));
        }
        let c = cap(carriers, unit?);
        (units <= c).then(|| nf(carriers).min(c - units))
    };
    if d_a > max_load(&carriers_a, ua, ua_shape)? || d_b > max_load(&carriers_b, ub, ub_shape)? {
        return None;
    }
    // carriers without messages of their own are left out when the riders fit elsewhere
    let trim = |carriers: Vec<Shape>, units: usize, unit: Option<Shape>, d: usize| -> (Vec<Shape>, Vec<Shape>) {
        let mut keep = carriers;
        let mut spare = Vec::new();
        if units == 0 {
            return (keep, spare);
        }
        while let Some(i) = keep.iter().position(|s| c_no(s.n, s.m) == 0) {
            let mut t = keep.clone();
            let s = t.remove(i);
            if unit.is_some_and(|u| cap(&t, u) >= units + d) && !t.is_empty() {
                keep = t;
                spare.push(s);
            } else {
                break;
            }
        }
        (keep, spare)
    };
    let (carriers_a, spare_a) = trim(carriers_a, ua, ua_shape, d_a);
    let (carriers_b, spare_b) = trim(carriers_b, ub, ub_shape, d_b);
    let mut out = Vec::new();
    if ua > 0 {
        out.push(name_composite(Direction::Forward, units_a, carriers_a.clone(), d_a));
    }
    if ub > 0 {
        out.push(name_composite(Direction::Backward, carriers_b.clone(), units_b, d_b));
    }
    let nf_f = if ub == 0 { carriers_b } else { spare_b };
    let nf_b = if ua == 0 { carriers_a } else { spare_a };
    if !nf_f.is_empty() || !nf_b.is_empty() {
        let params = SchemeParams {
            msgs: Some((if ub == 0 { d_b } else { 0 }, if ua == 0 { d_a } else { 0 })),
            ..SchemeParams::default()
        };
        out.push(SchemeSpec::new(SchemeKind::Nonfeedback, nf_f, nf_b, params));
    }
    Some(out)
}

/// Name a composite after the catalogue entry it coincides with, falling back
/// to the generic one-sided scheme or, when carrier messages are given up for
/// riders, the sacrifice form.
fn name_composite(gain: Direction, fwd: Vec<Shape>, bwd: Vec<Shape>, d: usize) -> SchemeSpec {
    let (units, carriers) = match gain {
        Direction::Forward => (&fwd, &bwd),
        Direction::Backward => (&bwd, &fwd),
    };
    let g = unit_rate(units[0], units.len()) as i64;
    let want = match gain {
        Direction::Forward => RatePair::int(g, d as i64),
        Direction::Backward => RatePair::int(d as i64, g),
    };
    const CATALOGUE: [SchemeKind; 8] = [
        SchemeKind::PerfectFeedback21,
        SchemeKind::Lemma3I,
        SchemeKind::Lemma3Ii,
        SchemeKind::Lemma3Iii,
        SchemeKind::Lemma4Ii,
        SchemeKind::Lemma4Iii,
        SchemeKind::Lemma4Iv,
        SchemeKind::Lemma4V,
    ];
    for kind in CATALOGUE {
        for direction in [Direction::Forward, Direction::Backward] {
            let params = SchemeParams { direction, ..SchemeParams::default() };
            let spec = SchemeSpec::new(kind, fwd.clone(), bwd.clone(), params).with_inferred_ijk();
            if spec.validate().is_ok()
                && spec.gain_direction().ok().flatten() == Some(gain)
                && spec.claimed_rate().ok() == Some(want)
            {
                return spec;
            }
        }
    }
    let total = nf(carriers);
    let params = SchemeParams { direction: gain, levels: total - d.min(total), ..SchemeParams::default() };
    let kind = if d < total { SchemeKind::RelaySacrifice } else { SchemeKind::Scheme1 };
    SchemeSpec::new(kind, fwd, bwd, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(plan: &SchemePlan) -> Vec<SchemeKind> {
        plan.entries.iter().map(|e| e.kind).collect()
    }

    #[test]
    fn scheme1_vertex() {
        let plan = plan_scheme(&ChannelParams::new(2, 1, 1, 2), RatePair::int(3, 2)).unwrap();
        assert_eq!(plan.entries.len(), 1);
        assert_eq!(plan.entries[0].fwd, vec![S21]);
        assert_eq!(plan.entries[0].bwd, vec![Shape::new(1, 2)]);
        assert_eq!(plan.claimed_sum().unwrap(), RatePair::int(3, 2));
    }

    #[test]
    fn example_three_pairs_scheme2_with_one_sided_unit() {
        let plan = plan_scheme(&ChannelParams::new(4, 2, 1, 3), RatePair::int(6, 3)).unwrap();
        let mut k = kinds(&plan);
        k.sort();
        assert!(k.contains(&SchemeKind::Scheme2));
        assert_eq!(k.len(), 2);
        assert_eq!(plan.claimed_sum().unwrap(), RatePair::int(6, 3));
    }

    #[test]
    fn lemma3_relay_plus_nonfeedback() {
        let plan = plan_scheme(&ChannelParams::new(1, 3, 1, 3), RatePair::int(3, 1)).unwrap();
        assert_eq!(kinds(&plan), vec![SchemeKind::Lemma3I, SchemeKind::Nonfeedback]);
        assert_eq!(plan.entries[0].fwd, vec![S01]);
        assert_eq!(plan.entries[1].fwd, vec![Shape::new(1, 2)]);
        assert_eq!(plan.claimed_sum().unwrap(), RatePair::int(3, 1));
    }

    #[test]
    fn non_vertex_rejected() {
        let p = ChannelParams::new(2, 1, 1, 2);
        assert!(matches!(plan_scheme(&p, RatePair::int(9, 9)), Err(TwicError::InvalidTarget(_))));
        assert!(matches!(plan_scheme(&p, RatePair::int(1, 1)), Err(TwicError::InvalidTarget(_))));
    }
}
