//! Closed-form capacities, the two-way capacity region as a 2-D polytope, and
//! regime / interaction classification.

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use num_traits::Signed;
use std::cmp::Ordering;
use std::fmt;

use crate::channel::{ChannelParams, LevelRatio, Q};
use crate::error::{Result, TwicError};

/// Exact (forward, backward) sum-rate pair in bits per slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatePair {
    pub r_fwd: Q,
    pub r_bwd: Q,
}

impl RatePair {
    pub fn new(r_fwd: Q, r_bwd: Q) -> Self {
        Self { r_fwd, r_bwd }
    }

    pub fn int(r_fwd: i64, r_bwd: i64) -> Self {
        Self::new(Q::from_integer(r_fwd), Q::from_integer(r_bwd))
    }

    pub fn zero() -> Self {
        Self::int(0, 0)
    }

    /// Exchange forward and backward components.
    pub fn swapped(&self) -> Self {
        Self::new(self.r_bwd, self.r_fwd)
    }

    /// Componentwise maximum absolute difference.
    pub fn max_gap(&self, other: &Self) -> Q {
        let d1 = (self.r_fwd - other.r_fwd).abs();
        let d2 = (self.r_bwd - other.r_bwd).abs();
        d1.max(d2)
    }
}

impl std::ops::Add for RatePair {
    type Output = RatePair;
    fn add(self, o: RatePair) -> RatePair {
        RatePair::new(self.r_fwd + o.r_fwd, self.r_bwd + o.r_bwd)
    }
}

impl std::ops::Sub for RatePair {
    type Output = RatePair;
    fn sub(self, o: RatePair) -> RatePair {
        RatePair::new(self.r_fwd - o.r_fwd, self.r_bwd - o.r_bwd)
    }
}

impl fmt::Display for RatePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.r_fwd, self.r_bwd)
    }
}

/// JSON form of a rational: numerator, denominator and a decimal convenience value.
pub fn rational_json(q: Q) -> serde_json::Value {
    serde_json::json!({
        "num": *q.numer(),
        "den": *q.denom(),
        "decimal": *q.numer() as f64 / *q.denom() as f64,
    })
}

/// Serde adapter emitting a rational as `{num, den, decimal}`.
pub struct RationalJson(pub Q);

impl Serialize for RationalJson {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Rational", 3)?;
        st.serialize_field("num", self.0.numer())?;
        st.serialize_field("den", self.0.denom())?;
        st.serialize_field("decimal", &(*self.0.numer() as f64 / *self.0.denom() as f64))?;
        st.end()
    }
}

impl Serialize for RatePair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RatePair", 2)?;
        st.serialize_field("r_fwd", &RationalJson(self.r_fwd))?;
        st.serialize_field("r_bwd", &RationalJson(self.r_bwd))?;
        st.end()
    }
}

/// Half-plane `a*R + b*R_b <= c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Constraint {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Constraint {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        Self { a, b, c }
    }

    fn lhs(&self, p: &RatePair) -> Q {
        p.r_fwd * self.a + p.r_bwd * self.b
    }

    pub fn satisfied(&self, p: &RatePair) -> bool {
        self.lhs(p) <= Q::from_integer(self.c)
    }

    pub fn tight(&self, p: &RatePair) -> bool {
        self.lhs(p) == Q::from_integer(self.c)
    }
}

/// Capacity region: its half-planes and exact vertices (counterclockwise from the origin).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionSpec {
    pub constraints: Vec<Constraint>,
    pub vertices: Vec<RatePair>,
}

impl RegionSpec {
    pub fn contains(&self, p: &RatePair) -> bool {
        self.constraints.iter().all(|c| c.satisfied(p))
    }

    pub fn is_vertex(&self, p: &RatePair) -> bool {
        self.vertices.contains(p)
    }

    /// Number of constraints holding with equality at `p`.
    pub fn tight_count(&self, p: &RatePair) -> usize {
        self.constraints.iter().filter(|c| c.tight(p)).count()
    }
}

/// Perfect-feedback sum capacity max(2n-m, m).
pub fn c_pf(n: usize, m: usize) -> usize {
    (2 * n).saturating_sub(m).max(m)
}

/// Non-interactive sum capacity min(2 max(n-m, m), max(2n-m, m), 2n).
pub fn c_no(n: usize, m: usize) -> usize {
    (2 * n.saturating_sub(m).max(m)).min(c_pf(n, m)).min(2 * n)
}

/// Feedback gap C_pf - C_no of one direction.
pub fn feedback_gap(n: usize, m: usize) -> usize {
    c_pf(n, m) - c_no(n, m)
}

/// The four capacity constraints plus nonnegativity, in that order.
pub fn region_constraints(p: &ChannelParams) -> Vec<Constraint> {
    let mx = |n: usize, m: usize| n.saturating_sub(m).max(m) as i64;
    vec![
        Constraint::new(1, 0, c_pf(p.n, p.m) as i64),
        Constraint::new(0, 1, c_pf(p.n_b, p.m_b) as i64),
        Constraint::new(1, 1, 2 * (p.n + p.n_b) as i64),
        Constraint::new(1, 1, 2 * mx(p.n, p.m) + 2 * mx(p.n_b, p.m_b)),
        Constraint::new(-1, 0, 0),
        Constraint::new(0, -1, 0),
    ]
}

/// Capacity region of the two-way channel.
pub fn region(p: &ChannelParams) -> RegionSpec {
    let constraints = region_constraints(p);
    let vertices = enumerate_vertices(&constraints).expect("capacity region is bounded and contains the origin");
    RegionSpec { constraints, vertices }
}

/// Exact vertices of a bounded 2-D constraint system containing the origin,
/// deduplicated and sorted counterclockwise starting at (0,0).
pub fn enumerate_vertices(constraints: &[Constraint]) -> Result<Vec<RatePair>> {
    let origin = RatePair::zero();
    let mut all: Vec<Constraint> = constraints.to_vec();
    // nonnegativity is implicit in the rate domain
    for nn in [Constraint::new(-1, 0, 0), Constraint::new(0, -1, 0)] {
        if !all.contains(&nn) {
            all.push(nn);
        }
    }
    if !all.iter().all(|c| c.satisfied(&origin)) {
        return Err(TwicError::InvalidArgument("constraint system excludes the origin".into()));
    }
    // bounded iff no nonzero direction d has a.d <= 0 for every constraint
    for c in &all {
        for d in [(c.b, -c.a), (-c.b, c.a)] {
            if d != (0, 0) && all.iter().all(|k| k.a * d.0 + k.b * d.1 <= 0) {
                return Err(TwicError::Unbounded);
            }
        }
    }
    let mut pts: Vec<RatePair> = Vec::new();
    for (i, c1) in all.iter().enumerate() {
        for c2 in &all[i + 1..] {
            let det = c1.a * c2.b - c1.b * c2.a;
            if det == 0 {
                continue;
            }
            let x = Q::new(c1.c * c2.b - c1.b * c2.c, det);
            let y = Q::new(c1.a * c2.c - c1.c * c2.a, det);
            let p = RatePair::new(x, y);
            if all.iter().all(|c| c.satisfied(&p)) && !pts.contains(&p) {
                pts.push(p);
            }
        }
    }
    Ok(sort_ccw(pts))
}

fn sort_ccw(mut pts: Vec<RatePair>) -> Vec<RatePair> {
    if pts.len() <= 1 {
        return pts;
    }
    let k = Q::from_integer(pts.len() as i64);
    let cx = pts.iter().map(|p| p.r_fwd).sum::<Q>() / k;
    let cy = pts.iter().map(|p| p.r_bwd).sum::<Q>() / k;
    // half-plane split then cross product gives an exact angular order
    let half = |p: &RatePair| {
        let (dx, dy) = (p.r_fwd - cx, p.r_bwd - cy);
        dy < Q::from_integer(0) || (dy == Q::from_integer(0) && dx < Q::from_integer(0))
    };
    pts.sort_by(|p, q| {
        let (hp, hq) = (half(p), half(q));
        if hp != hq {
            return hp.cmp(&hq);
        }
        let cross = (p.r_fwd - cx) * (q.r_bwd - cy) - (p.r_bwd - cy) * (q.r_fwd - cx);
        if cross > Q::from_integer(0) {
            Ordering::Less
        } else if cross < Q::from_integer(0) {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    });
    let start = pts.iter().position(|p| *p == RatePair::zero()).unwrap_or(0);
    pts.rotate_left(start);
    pts
}

/// Position of one interference ratio relative to the interval [2/3, 2].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioClass {
    Low,
    Central,
    High,
}

/// Classify a level ratio; inactive directions count as central.
pub fn ratio_class(r: LevelRatio) -> RatioClass {
    match r {
        LevelRatio::Inactive => RatioClass::Central,
        LevelRatio::Infinite => RatioClass::High,
        LevelRatio::Finite(x) if x < Q::new(2, 3) => RatioClass::Low,
        LevelRatio::Finite(x) if x > Q::from_integer(2) => RatioClass::High,
        LevelRatio::Finite(_) => RatioClass::Central,
    }
}

/// Channel regime by the positions of (alpha, alpha_b).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegimeLabel {
    Central,
    R1,
    R2,
    R3,
    R4,
    R5,
    R3Mirror,
    R4Mirror,
    R5Mirror,
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegimeLabel::Central => "CENTRAL",
            RegimeLabel::R1 => "R1",
            RegimeLabel::R2 => "R2",
            RegimeLabel::R3 => "R3",
            RegimeLabel::R4 => "R4",
            RegimeLabel::R5 => "R5",
            RegimeLabel::R3Mirror => "R3_MIRROR",
            RegimeLabel::R4Mirror => "R4_MIRROR",
            RegimeLabel::R5Mirror => "R5_MIRROR",
        };
        f.write_str(s)
    }
}

pub fn classify_regime(p: &ChannelParams) -> RegimeLabel {
    use RatioClass::*;
    match (ratio_class(p.alpha()), ratio_class(p.alpha_b())) {
        (Central, Central) => RegimeLabel::Central,
        (High, High) => RegimeLabel::R1,
        (Low, Low) => RegimeLabel::R2,
        (High, Central) => RegimeLabel::R3,
        (Central, High) => RegimeLabel::R3Mirror,
        (Low, Central) => RegimeLabel::R4,
        (Central, Low) => RegimeLabel::R4Mirror,
        (Low, High) => RegimeLabel::R5,
        (High, Low) => RegimeLabel::R5Mirror,
    }
}

/// Interaction class of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InteractionClass {
    NoFeedbackGain,
    FeedbackButNoInteractionGain,
    InteractionGain,
    PerfectFeedbackAchievable,
}

impl fmt::Display for InteractionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InteractionClass::NoFeedbackGain => "NO_FEEDBACK_GAIN",
            InteractionClass::FeedbackButNoInteractionGain => "FEEDBACK_BUT_NO_INTERACTION_GAIN",
            InteractionClass::InteractionGain => "INTERACTION_GAIN",
            InteractionClass::PerfectFeedbackAchievable => "PERFECT_FEEDBACK_ACHIEVABLE",
        };
        f.write_str(s)
    }
}

/// Which of the two perfect-feedback conditions holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CorollaryCase {
    I,
    II,
    None,
}

/// Whether both perfect-feedback capacities are simultaneously achievable,
/// and under which ratio case.
pub fn corollary1_holds(p: &ChannelParams) -> (bool, CorollaryCase) {
    let (cpf, cno) = (c_pf(p.n, p.m) as i64, c_no(p.n, p.m) as i64);
    let (cpf_b, cno_b) = (c_pf(p.n_b, p.m_b) as i64, c_no(p.n_b, p.m_b) as i64);
    let (a, ab) = (ratio_class(p.alpha()), ratio_class(p.alpha_b()));
    if a == RatioClass::Low && ab == RatioClass::High {
        let ok = cpf - cno <= 2 * p.m_b as i64 - cpf_b && cpf_b - cno_b <= 2 * p.n as i64 - cpf;
        return (ok, if ok { CorollaryCase::I } else { CorollaryCase::None });
    }
    if a == RatioClass::High && ab == RatioClass::Low {
        let ok = cpf_b - cno_b <= 2 * p.m as i64 - cpf && cpf - cno <= 2 * p.n_b as i64 - cpf_b;
        return (ok, if ok { CorollaryCase::II } else { CorollaryCase::None });
    }
    (false, CorollaryCase::None)
}

pub fn classify_interaction(p: &ChannelParams) -> InteractionClass {
    let g = feedback_gap(p.n, p.m);
    let g_b = feedback_gap(p.n_b, p.m_b);
    if g == 0 && g_b == 0 {
        return InteractionClass::NoFeedbackGain;
    }
    if g > 0 && g_b > 0 && corollary1_holds(p).0 {
        return InteractionClass::PerfectFeedbackAchievable;
    }
    // the region is down-closed, so a point dominating (C_no, C_no~) exists iff
    // one coordinate can grow from it, i.e. every constraint limiting that
    // coordinate is slack there
    let spec = region(p);
    let base = RatePair::int(c_no(p.n, p.m) as i64, c_no(p.n_b, p.m_b) as i64);
    let slack = |coord: usize| {
        spec.constraints
            .iter()
            .filter(|c| if coord == 0 { c.a > 0 } else { c.b > 0 })
            .all(|c| !c.tight(&base))
    };
    if spec.contains(&base) && (slack(0) || slack(1)) {
        InteractionClass::InteractionGain
    } else {
        InteractionClass::FeedbackButNoInteractionGain
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rp(a: i64, b: i64) -> RatePair {
        RatePair::int(a, b)
    }

    #[test]
    fn capacity_values() {
        assert_eq!((c_pf(2, 1), c_no(2, 1)), (3, 2));
        assert_eq!((c_pf(1, 2), c_no(1, 2)), (2, 2));
        assert_eq!((c_pf(0, 1), c_no(0, 1)), (1, 0));
        assert_eq!(c_pf(4, 2), 6);
        assert_eq!(c_pf(1, 3), 3);
        assert_eq!(c_no(3, 2), 4);
        assert_eq!(c_pf(5, 5), 5);
    }

    #[test]
    fn vertex_examples() {
        let v = enumerate_vertices(&[Constraint::new(1, 0, 3), Constraint::new(0, 1, 1), Constraint::new(1, 1, 4)]).unwrap();
        assert_eq!(v, vec![rp(0, 0), rp(3, 0), rp(3, 1), rp(0, 1)]);
        let v = enumerate_vertices(&[Constraint::new(1, 0, 3), Constraint::new(0, 1, 2), Constraint::new(1, 1, 4)]).unwrap();
        assert_eq!(v, vec![rp(0, 0), rp(3, 0), rp(3, 1), rp(2, 2), rp(0, 2)]);
        let v = enumerate_vertices(&[Constraint::new(1, 0, 0), Constraint::new(0, 1, 0)]).unwrap();
        assert_eq!(v, vec![rp(0, 0)]);
        assert_eq!(enumerate_vertices(&[Constraint::new(1, 0, 3)]), Err(TwicError::Unbounded));
    }

    #[test]
    fn region_examples() {
        assert_eq!(region(&ChannelParams::new(2, 1, 0, 1)).vertices, vec![rp(0, 0), rp(3, 0), rp(3, 1), rp(0, 1)]);
        assert_eq!(region(&ChannelParams::new(0, 0, 0, 0)).vertices, vec![rp(0, 0)]);
        assert_eq!(region(&ChannelParams::new(2, 1, 1, 2)).vertices, vec![rp(0, 0), rp(3, 0), rp(3, 2), rp(0, 2)]);
        assert!(region(&ChannelParams::new(4, 2, 1, 3)).vertices.contains(&rp(6, 3)));
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_regime(&ChannelParams::new(2, 1, 0, 1)), RegimeLabel::R5);
        assert_eq!(classify_regime(&ChannelParams::new(1, 1, 1, 1)), RegimeLabel::Central);
        assert_eq!(classify_regime(&ChannelParams::new(1, 3, 1, 3)), RegimeLabel::R1);
        assert_eq!(classify_interaction(&ChannelParams::new(1, 1, 1, 1)), InteractionClass::NoFeedbackGain);
        assert_eq!(
            classify_interaction(&ChannelParams::new(2, 1, 2, 1)),
            InteractionClass::FeedbackButNoInteractionGain
        );
        assert_eq!(
            classify_interaction(&ChannelParams::new(2, 1, 0, 1)),
            InteractionClass::PerfectFeedbackAchievable
        );
        assert_eq!(corollary1_holds(&ChannelParams::new(2, 1, 0, 1)), (true, CorollaryCase::I));
        assert_eq!(corollary1_holds(&ChannelParams::new(1, 1, 1, 1)), (false, CorollaryCase::None));
        assert_eq!(corollary1_holds(&ChannelParams::new(4, 2, 1, 3)), (true, CorollaryCase::I));
    }

    #[test]
    fn boundary_ratios_are_central() {
        assert_eq!(classify_regime(&ChannelParams::new(3, 2, 1, 2)), RegimeLabel::Central);
    }
}
