//! Coding schemes for pairs of forward / backward subchannels.
//!
//! Every scheme is generated symbolically as one block of transmissions over
//! GF(2) combinations of message bits and compiled by the engine into
//! per-node linear policies and decoders. The compiled block is verified at
//! construction time: a node never transmits information it does not hold,
//! and every declared message bit is decodable at its destination.
//!
//! Two generators cover the catalogue:
//! - the retrospective-decoding scheme on a (2,1) / (0,1) pair, built
//!   explicitly (see [`scheme2`]);
//! - a composite generator in which "gain units" on one side (a (2,1)
//!   factor refined through common side information, or a (0,1) factor
//!   relayed by the opposite user) are fed by "carrier" factors on the other
//!   side that simultaneously carry their own fresh messages (see
//!   [`composite`]). Nonfeedback is the composite without units.

pub mod composite;
pub mod scheme2;

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use crate::capacity::{c_no, RatePair};
use crate::carrier::rider_capacity;
use crate::channel::{Direction, SignalVector, Q};
use crate::decomposition::Shape;
use crate::engine::{CompiledScheme, Node};
use crate::error::{Result, TwicError};
use crate::gf2::BitVec;

pub use composite::{Composite, Timing, UnitType};

/// Named schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SchemeKind {
    Nonfeedback,
    PerfectFeedback21,
    Scheme1,
    Scheme2,
    Lemma3I,
    Lemma3Ii,
    Lemma3Iii,
    Lemma4I,
    Lemma4Ii,
    Lemma4Iii,
    Lemma4Iv,
    Lemma4V,
    RelaySacrifice,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 13] = [
        SchemeKind::Nonfeedback,
        SchemeKind::PerfectFeedback21,
        SchemeKind::Scheme1,
        SchemeKind::Scheme2,
        SchemeKind::Lemma3I,
        SchemeKind::Lemma3Ii,
        SchemeKind::Lemma3Iii,
        SchemeKind::Lemma4I,
        SchemeKind::Lemma4Ii,
        SchemeKind::Lemma4Iii,
        SchemeKind::Lemma4Iv,
        SchemeKind::Lemma4V,
        SchemeKind::RelaySacrifice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Nonfeedback => "NONFEEDBACK",
            SchemeKind::PerfectFeedback21 => "PERFECT_FEEDBACK_21",
            SchemeKind::Scheme1 => "SCHEME1",
            SchemeKind::Scheme2 => "SCHEME2",
            SchemeKind::Lemma3I => "LEMMA3_I",
            SchemeKind::Lemma3Ii => "LEMMA3_II",
            SchemeKind::Lemma3Iii => "LEMMA3_III",
            SchemeKind::Lemma4I => "LEMMA4_I",
            SchemeKind::Lemma4Ii => "LEMMA4_II",
            SchemeKind::Lemma4Iii => "LEMMA4_III",
            SchemeKind::Lemma4Iv => "LEMMA4_IV",
            SchemeKind::Lemma4V => "LEMMA4_V",
            SchemeKind::RelaySacrifice => "RELAY_SACRIFICE",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = TwicError;

    fn from_str(s: &str) -> Result<Self> {
        let u = s.trim().to_ascii_uppercase().replace('-', "_");
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == u)
            .ok_or_else(|| TwicError::InvalidArgument(format!("unknown scheme kind {s}")))
    }
}

/// Scheme parameters. Unused fields are ignored by kinds that do not need
/// them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Multiplicities of the catalogue kinds.
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// Stage-I length of the retrospective-decoding scheme.
    pub l: usize,
    /// Block length override for composite schemes.
    pub h: Option<usize>,
    /// Sacrificed message levels per slot (relay-sacrifice entries).
    pub levels: usize,
    /// Orientation: `Forward` is the catalogue statement, `Backward` its
    /// mirror with the two directions exchanged.
    pub direction: Direction,
    /// Messages per slot (forward, backward) overriding the default load.
    pub msgs: Option<(usize, usize)>,
    /// Send fresh bits on the otherwise idle top levels of the ignition slot.
    pub ignition_payload: bool,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self { i: 1, j: 1, k: 0, l: 1, h: None, levels: 0, direction: Direction::Forward, msgs: None, ignition_payload: false }
    }
}

impl SchemeParams {
    pub fn ijk(i: usize, j: usize, k: usize) -> Self {
        Self { i, j, k, ..Self::default() }
    }

    pub fn with_l(l: usize) -> Self {
        Self { l, ..Self::default() }
    }
}

/// A scheme applied to explicit lists of forward and backward factor shapes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub fwd: Vec<Shape>,
    pub bwd: Vec<Shape>,
    pub params: SchemeParams,
}

const S21: Shape = Shape::new(2, 1);
const S01: Shape = Shape::new(0, 1);
const S10: Shape = Shape::new(1, 0);
const S12: Shape = Shape::new(1, 2);
const S32: Shape = Shape::new(3, 2);

fn rep(s: Shape, k: usize) -> Vec<Shape> {
    vec![s; k]
}

fn cat(a: Vec<Shape>, b: Vec<Shape>) -> Vec<Shape> {
    a.into_iter().chain(b).collect()
}

fn infeasible(kind: SchemeKind, inequality: impl Into<String>) -> TwicError {
    TwicError::Infeasible { kind: kind.name().into(), inequality: inequality.into() }
}

fn count(v: &[Shape], s: Shape) -> usize {
    v.iter().filter(|&&x| x == s).count()
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, fwd: Vec<Shape>, bwd: Vec<Shape>, params: SchemeParams) -> Self {
        Self { kind, fwd, bwd, params }
    }

    /// The catalogue instance of `kind`: shapes derived from (i, j, k), in
    /// the orientation given by `params.direction`.
    pub fn catalogue(kind: SchemeKind, params: SchemeParams) -> Result<Self> {
        let SchemeParams { i, j, k, .. } = params;
        let (g, c) = match kind {
            SchemeKind::Nonfeedback => {
                return Err(TwicError::InvalidArgument("NONFEEDBACK needs explicit shapes".into()));
            }
            SchemeKind::PerfectFeedback21 => (vec![S21], rep(S10, 2)),
            SchemeKind::Scheme1 => (vec![S21], vec![S12]),
            SchemeKind::Scheme2 | SchemeKind::Lemma4I => (vec![S21], vec![S01]),
            SchemeKind::Lemma3I => (rep(S01, i), rep(S12, j)),
            SchemeKind::Lemma3Ii => (rep(S21, i), cat(rep(S10, j), rep(S21, k))),
            SchemeKind::Lemma3Iii => (rep(S21, i), cat(rep(S21, j), rep(S32, k))),
            SchemeKind::Lemma4Ii => (rep(S21, i), rep(S12, j)),
            SchemeKind::Lemma4Iii => (rep(S32, i), rep(S01, j)),
            SchemeKind::Lemma4Iv => (rep(S21, i), rep(S01, 2 * i)),
            SchemeKind::Lemma4V => (rep(S21, 2 * i), rep(S01, i)),
            SchemeKind::RelaySacrifice => {
                return Err(TwicError::InvalidArgument("RELAY_SACRIFICE needs explicit shapes".into()));
            }
        };
        let spec = match params.direction {
            Direction::Forward => Self::new(kind, g, c, params),
            Direction::Backward => Self::new(kind, c, g, params),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Shapes in the catalogue orientation (forward first unless mirrored).
    fn oriented(&self) -> (&[Shape], &[Shape]) {
        match self.params.direction {
            Direction::Forward => (&self.fwd, &self.bwd),
            Direction::Backward => (&self.bwd, &self.fwd),
        }
    }

    /// Check the kind's shape pattern and feasibility inequality.
    pub fn validate(&self) -> Result<()> {
        self.plan().map(|_| ())
    }

    /// Translate into a generator configuration.
    fn plan(&self) -> Result<Generator> {
        let kind = self.kind;
        let (a, b) = self.oriented();
        let all = |v: &[Shape], s: Shape| v.iter().all(|&x| x == s);
        let orient = self.params.direction;
        let shape_err = |what: &str| infeasible(kind, format!("factor shapes ({what})"));
        match kind {
            SchemeKind::Nonfeedback => {
                let nf = |v: &[Shape]| v.iter().map(|s| c_no(s.n, s.m)).sum::<usize>();
                let (df, db) = self.params.msgs.unwrap_or((nf(&self.fwd), nf(&self.bwd)));
                if df > nf(&self.fwd) {
                    return Err(infeasible(kind, "forward messages <= forward nonfeedback capacity"));
                }
                if db > nf(&self.bwd) {
                    return Err(infeasible(kind, "backward messages <= backward nonfeedback capacity"));
                }
                Ok(Generator::Composite(Composite::nonfeedback(self.fwd.clone(), self.bwd.clone(), df, db)))
            }
            SchemeKind::Scheme2 | SchemeKind::Lemma4I => {
                if a != [S21] || b != [S01] {
                    return Err(shape_err("one (2,1) paired with one (0,1)"));
                }
                if self.params.l < 1 {
                    return Err(infeasible(kind, "L >= 1"));
                }
                Ok(Generator::Scheme2 { gain: orient, l: self.params.l, ignition_payload: self.params.ignition_payload })
            }
            _ => {
                let (i, j, k) = (self.params.i, self.params.j, self.params.k);
                let mut gain_side = orient;
                match kind {
                    SchemeKind::PerfectFeedback21 => {
                        if !(a == [S21] || a == [S01]) || b.is_empty() || !all(b, S10) {
                            return Err(shape_err("one (2,1) or (0,1) with a dedicated (1,0) feedback link per level"));
                        }
                    }
                    SchemeKind::Scheme1 => {}
                    SchemeKind::Lemma3I => {
                        let (i, j) = (a.len(), b.len());
                        if !all(a, S01) || !all(b, S12) || i == 0 || j == 0 {
                            return Err(shape_err("(0,1)^i with (1,2)^j"));
                        }
                        if i > 2 * j {
                            return Err(infeasible(kind, "i <= 2j"));
                        }
                    }
                    SchemeKind::Lemma3Ii => {
                        let (i, j, k) = (a.len(), count(b, S10), count(b, S21));
                        if !all(a, S21) || j + k != b.len() || i == 0 || j + k == 0 {
                            return Err(shape_err("(2,1)^i with (1,0)^j x (2,1)^k"));
                        }
                        if i > 2 * j + 2 * k {
                            return Err(infeasible(kind, "i <= 2j + 2k"));
                        }
                    }
                    SchemeKind::Lemma3Iii => {
                        let (i, j, k) = (a.len(), count(b, S21), count(b, S32));
                        if !all(a, S21) || j + k != b.len() || i == 0 || j + k == 0 {
                            return Err(shape_err("(2,1)^i with (2,1)^j x (3,2)^k"));
                        }
                        if i > 2 * j + 4 * k {
                            return Err(infeasible(kind, "i <= 2j + 4k"));
                        }
                    }
                    SchemeKind::Lemma4Ii => {
                        let (i, j) = (a.len(), b.len());
                        if !all(a, S21) || !all(b, S12) || i == 0 || j == 0 {
                            return Err(shape_err("(2,1)^i with (1,2)^j"));
                        }
                        if i > 2 * j {
                            return Err(infeasible(kind, "i <= 2j"));
                        }
                    }
                    SchemeKind::Lemma4Iii => {
                        let (i, j) = (a.len(), b.len());
                        if !all(a, S32) || !all(b, S01) || i == 0 || j == 0 {
                            return Err(shape_err("(3,2)^i with (0,1)^j"));
                        }
                        if j > 2 * i {
                            return Err(infeasible(kind, "j <= 2i"));
                        }
                        gain_side = orient.other();
                    }
                    SchemeKind::Lemma4Iv => {
                        if !all(a, S21) || !all(b, S01) || a.is_empty() || b.len() != 2 * a.len() {
                            return Err(shape_err("(2,1)^i with (0,1)^(2i)"));
                        }
                        gain_side = orient.other();
                    }
                    SchemeKind::Lemma4V => {
                        if !all(a, S21) || !all(b, S01) || b.is_empty() || a.len() != 2 * b.len() {
                            return Err(shape_err("(2,1)^(2i) with (0,1)^i"));
                        }
                    }
                    SchemeKind::RelaySacrifice => {}
                    _ => unreachable!(),
                }
                let _ = (i, j, k);
                let (units, carriers) = match gain_side {
                    Direction::Forward => (&self.fwd, &self.bwd),
                    Direction::Backward => (&self.bwd, &self.fwd),
                };
                let unit = if !units.is_empty() && all(units, S21) {
                    UnitType::S
                } else if !units.is_empty() && all(units, S01) {
                    UnitType::Z
                } else {
                    return Err(shape_err("gain side all (2,1) or all (0,1)"));
                };
                if carriers.is_empty() {
                    return Err(shape_err("at least one carrier factor"));
                }
                let nf: usize = carriers.iter().map(|s| c_no(s.n, s.m)).sum();
                let cap: usize = carriers.iter().map(|&s| rider_capacity(s, unit == UnitType::S)).sum();
                let u = units.len();
                if u > cap {
                    return Err(infeasible(kind, "units <= carrier rider capacity"));
                }
                let mut d = nf.min(cap - u);
                if kind == SchemeKind::RelaySacrifice {
                    let lv = self.params.levels;
                    if lv > nf {
                        return Err(infeasible(kind, "sacrificed levels <= carrier nonfeedback capacity"));
                    }
                    if u + nf - lv > cap {
                        return Err(infeasible(kind, "units <= spare carrier capacity + sacrificed levels"));
                    }
                    d = nf - lv;
                }
                if kind == SchemeKind::PerfectFeedback21 {
                    d = 0;
                }
                if let Some((df, db)) = self.params.msgs {
                    let (dg, dc) = match gain_side {
                        Direction::Forward => (df, db),
                        Direction::Backward => (db, df),
                    };
                    let full = match unit {
                        UnitType::S => 3 * u,
                        UnitType::Z => u,
                    };
                    if dg != full {
                        return Err(infeasible(kind, "gain-side load equals the units' rate"));
                    }
                    if dc > d {
                        return Err(infeasible(kind, "carrier messages <= min(nonfeedback, capacity - units)"));
                    }
                    d = dc;
                }
                Ok(Generator::Composite(Composite::feedback(
                    gain_side,
                    unit,
                    self.fwd.clone(),
                    self.bwd.clone(),
                    d,
                    self.params.h,
                )))
            }
        }
    }

    /// Claimed rate pair: the catalogue statement, except for the
    /// retrospective scheme which reports its exact finite-L rate.
    pub fn claimed_rate(&self) -> Result<RatePair> {
        Ok(match self.plan()? {
            Generator::Scheme2 { gain, l, ignition_payload } => {
                let l = l as i64;
                let extra = if ignition_payload { 2 } else { 0 };
                let r = if self.kind == SchemeKind::Lemma4I {
                    RatePair::int(3, 1)
                } else {
                    RatePair::new(Q::new(6 * l + extra, 2 * l + 1), Q::new(2 * l, 2 * l + 1))
                };
                orient(r, gain)
            }
            Generator::Composite(c) => c.claimed_rate(),
        })
    }
}

impl SchemeSpec {
    /// Limiting rate pair: the claimed rate, except that the retrospective
    /// scheme reports the L -> infinity value (3, 1) in its orientation.
    pub fn asymptotic_rate(&self) -> Result<RatePair> {
        match self.plan()? {
            Generator::Scheme2 { gain, .. } => Ok(orient(RatePair::int(3, 1), gain)),
            Generator::Composite(_) => self.claimed_rate(),
        }
    }

    /// Direction whose factors host the gain units, if any.
    pub fn gain_direction(&self) -> Result<Option<Direction>> {
        Ok(match self.plan()? {
            Generator::Scheme2 { gain, .. } => Some(gain),
            Generator::Composite(c) => c.unit.map(|_| c.gain),
        })
    }

    /// Catalogue multiplicities (i, j, k) read off the shapes, in the
    /// orientation of `params.direction`.
    pub fn with_inferred_ijk(mut self) -> Self {
        let (a, b) = self.oriented();
        let (i, j, k) = match self.kind {
            SchemeKind::Lemma3I | SchemeKind::Lemma4Ii | SchemeKind::Lemma4Iii => (a.len(), b.len(), 0),
            SchemeKind::Lemma3Ii => (a.len(), count(b, S10), count(b, S21)),
            SchemeKind::Lemma3Iii => (a.len(), count(b, S21), count(b, S32)),
            SchemeKind::Lemma4Iv => (a.len(), 0, 0),
            SchemeKind::Lemma4V => (b.len(), 0, 0),
            _ => (self.params.i, self.params.j, self.params.k),
        };
        self.params.i = i;
        self.params.j = j;
        self.params.k = k;
        self
    }
}

fn orient(r: RatePair, gain: Direction) -> RatePair {
    match gain {
        Direction::Forward => r,
        Direction::Backward => r.swapped(),
    }
}

enum Generator {
    Scheme2 { gain: Direction, l: usize, ignition_payload: bool },
    Composite(Composite),
}

/// Block-level accounting of a compiled scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockSpec {
    pub slots_per_block: usize,
    pub fwd_bits: usize,
    pub bwd_bits: usize,
    /// Decode slot of every message bit, by name.
    pub decode_deadline: Vec<(String, usize)>,
}

impl BlockSpec {
    /// Exact block rate.
    pub fn rate(&self) -> RatePair {
        let h = self.slots_per_block as i64;
        RatePair::new(Q::new(self.fwd_bits as i64, h), Q::new(self.bwd_bits as i64, h))
    }
}

/// Deterministic per-node policies of a compiled block. Each node's local
/// state is its own message bits of the block followed by its receptions in
/// arrival order; transmissions and decoders are GF(2) linear maps of it.
#[derive(Debug, Clone)]
pub struct NodePolicy {
    pub scheme: Arc<CompiledScheme>,
}

impl NodePolicy {
    /// Transmission of `node` in `slot` (1-based within the block) on every
    /// factor of its direction, given its local state so far.
    pub fn transmit(&self, node: Node, slot: usize, local: &BitVec) -> Vec<SignalVector> {
        self.scheme.programs[node.idx()].tx[slot - 1]
            .iter()
            .map(|levels| SignalVector::from_bits(levels.iter().map(|m| m.dot(local)).collect()))
            .collect()
    }

    /// Number of message bits owned by `node` per block.
    pub fn own_bits(&self, node: Node) -> usize {
        self.scheme.programs[node.idx()].own_syms.len()
    }
}

type SchemeCache = Mutex<HashMap<SchemeSpec, Arc<CompiledScheme>>>;

fn scheme_cache() -> &'static SchemeCache {
    static C: OnceLock<SchemeCache> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Generate and compile a scheme (cached per spec).
pub fn compile(spec: &SchemeSpec) -> Result<Arc<CompiledScheme>> {
    if let Some(c) = scheme_cache().lock().expect("scheme cache").get(spec) {
        return Ok(c.clone());
    }
    let compiled = Arc::new(match spec.plan()? {
        Generator::Scheme2 { gain, l, ignition_payload } => scheme2::build(gain, l, ignition_payload)?,
        Generator::Composite(c) => c.build()?,
    });
    scheme_cache().lock().expect("scheme cache").insert(spec.clone(), compiled.clone());
    Ok(compiled)
}

/// Build the policies and block accounting of a scheme.
pub fn make_scheme(spec: &SchemeSpec) -> Result<(NodePolicy, BlockSpec)> {
    let c = compile(spec)?;
    let block = BlockSpec {
        slots_per_block: c.slots,
        fwd_bits: c.fwd_bits,
        bwd_bits: c.bwd_bits,
        decode_deadline: c.decode_deadlines(),
    };
    Ok((NodePolicy { scheme: c }, block))
}

/// Claimed rate pair of a scheme.
pub fn scheme_rate(spec: &SchemeSpec) -> Result<RatePair> {
    spec.claimed_rate()
}

/// Retrospective decoding order of the (2,1) / (0,1) scheme with stage-I
/// length `l`: backward pair of slot l, forward pair of slot l, backward pair
/// of slot l-1, ... down to the forward pair of slot 1.
pub fn retrospective_decode_order(l: usize) -> Vec<(String, String)> {
    (1..=l)
        .rev()
        .flat_map(|i| [(format!("~a{i}"), format!("~b{i}")), (format!("a{i}"), format!("b{i}"))])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in SchemeKind::ALL {
            assert_eq!(k.name().parse::<SchemeKind>().unwrap(), k);
        }
    }

    #[test]
    fn decode_order_shape() {
        assert_eq!(
            retrospective_decode_order(2),
            vec![
                ("~a2".to_string(), "~b2".to_string()),
                ("a2".into(), "b2".into()),
                ("~a1".into(), "~b1".into()),
                ("a1".into(), "b1".into())
            ]
        );
    }

    #[test]
    fn infeasible_sets_name_inequality() {
        let e = SchemeSpec::catalogue(SchemeKind::Lemma3I, SchemeParams::ijk(3, 1, 0)).unwrap_err();
        assert_eq!(e, TwicError::Infeasible { kind: "LEMMA3_I".into(), inequality: "i <= 2j".into() });
        let e = SchemeSpec::catalogue(SchemeKind::Scheme2, SchemeParams::with_l(0)).unwrap_err();
        assert!(e.to_string().contains("L >= 1"));
    }

    #[test]
    fn catalogue_rates() {
        let r = |k, p| scheme_rate(&SchemeSpec::catalogue(k, p).unwrap()).unwrap();
        assert_eq!(r(SchemeKind::Lemma3I, SchemeParams::ijk(1, 1, 0)), RatePair::int(1, 1));
        assert_eq!(r(SchemeKind::Lemma3Ii, SchemeParams::ijk(2, 1, 1)), RatePair::int(6, 2));
        assert_eq!(r(SchemeKind::Lemma4Iv, SchemeParams::default()), RatePair::int(2, 2));
        assert_eq!(
            r(SchemeKind::Scheme2, SchemeParams::with_l(50)),
            RatePair::new(Q::new(300, 101), Q::new(100, 101))
        );
    }
}
