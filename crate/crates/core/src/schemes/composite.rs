//! Gain units on one side fed by carrier factors on the other.
//!
//! A gain unit is a factor of the gain direction whose rate exceeds its
//! nonfeedback rate thanks to side information relayed by the carriers:
//! - `S` units live on (2,1) factors. Stage I sends fresh bits on both levels;
//!   each receiver then knows its top bit and the sum of its bottom bit with
//!   the interferer's top. The carriers deliver to both transmitters common
//!   bits s, t with s + a known to the first receiver (t + b to the second).
//!   Stage II sends s (resp. t) on top and a fresh bit plus the other user's
//!   common bit at the bottom, which cancels the interference exactly: three
//!   bits per user in two phases.
//! - `Z` units live on (0,1) factors, where each transmitter only reaches the
//!   wrong receiver. That receiver hands the bit back through the carrier to
//!   the other transmitter, which forwards it in a later phase.
//!
//! Carriers are the factors of the opposite direction. In every carrier phase
//! they send their own fresh messages and, jointly, the requested riders;
//! their linear codes are synthesised per configuration (see
//! [`crate::carrier`]).
//!
//! Timing:
//! - `Paired` (2 slots): every unit runs stage I then stage II, with all its
//!   riders in the single carrier phase in between. Exact catalogue rates.
//! - `Staggered(H)`: paired units on alternate factors run with a one-phase
//!   offset, so each carrier phase serves the riders of half the factors; the
//!   gain side loses one bit per factor per block.
//! - `Pipeline(H)`: the two riders of a unit are requested in consecutive
//!   phases so that each carrier phase holds one rider per unit factor; same
//!   loss as `Staggered`.
//! - `Single` (1 slot): no units, nonfeedback messages only.

use std::collections::HashMap;
use std::sync::Arc;

use crate::capacity::{c_no, RatePair};
use crate::carrier::{rider_capacity, synthesize_split, Group, Template};
use crate::channel::{Direction, Q};
use crate::decomposition::Shape;
use crate::engine::{Builder, CompiledScheme, Node};
use crate::error::{Result, TwicError};
use crate::gf2::BitVec;

/// Block length used when the paired timing does not fit.
pub const PIPELINE_SLOTS: usize = 65;

/// Kind of gain unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitType {
    S,
    Z,
}

/// Block timing of a composite scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    Single,
    Paired,
    Staggered(usize),
    Pipeline(usize),
}

/// Generator configuration.
#[derive(Debug, Clone)]
pub struct Composite {
    pub fwd: Vec<Shape>,
    pub bwd: Vec<Shape>,
    pub gain: Direction,
    pub unit: Option<UnitType>,
    /// Carrier messages per carrier phase.
    pub d: usize,
    /// Messages per slot (forward, backward) when there are no units.
    pub nf: (usize, usize),
    pub h: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct UnitKey {
    f: usize,
    k: usize,
    orient: u8,
}

#[derive(Debug, Default)]
struct UnitState {
    sym: Vec<BitVec>,
    sol: [Option<BitVec>; 2],
}

#[derive(Debug, Clone, Copy)]
enum GainAct {
    StageOne(usize),
    StageTwo(usize),
    TopOnly,
    Fresh(usize, u8),
    Relay(usize, u8),
}

/// Schedule of one block: gain actions per gain phase and factor, riders and
/// message counts per carrier phase (indexed 0..=H).
struct Schedule {
    h: usize,
    gain: Vec<Vec<Vec<GainAct>>>,
    riders: Vec<Vec<(Group, UnitKey)>>,
    msgs: Vec<usize>,
}

type Allocation = Vec<(usize, Vec<(Group, UnitKey)>)>;

impl Composite {
    pub fn nonfeedback(fwd: Vec<Shape>, bwd: Vec<Shape>, df: usize, db: usize) -> Self {
        Self { fwd, bwd, gain: Direction::Forward, unit: None, d: 0, nf: (df, db), h: None }
    }

    pub fn feedback(gain: Direction, unit: UnitType, fwd: Vec<Shape>, bwd: Vec<Shape>, d: usize, h: Option<usize>) -> Self {
        Self { fwd, bwd, gain, unit: Some(unit), d, nf: (0, 0), h }
    }

    fn shapes(&self, d: Direction) -> &[Shape] {
        match d {
            Direction::Forward => &self.fwd,
            Direction::Backward => &self.bwd,
        }
    }

    /// Limiting rate pair (exact for the paired and single timings).
    pub fn claimed_rate(&self) -> RatePair {
        match self.unit {
            None => RatePair::int(self.nf.0 as i64, self.nf.1 as i64),
            Some(t) => {
                let u = self.shapes(self.gain).len();
                let g = match t {
                    UnitType::S => 3 * u,
                    UnitType::Z => u,
                };
                let r = RatePair::new(Q::from_integer(g as i64), Q::from_integer(self.d as i64));
                match self.gain {
                    Direction::Forward => r,
                    Direction::Backward => r.swapped(),
                }
            }
        }
    }

    pub fn build(&self) -> Result<CompiledScheme> {
        let Some(unit) = self.unit else {
            return self.build_single();
        };
        let timings = match self.h {
            Some(2) => vec![Timing::Paired],
            Some(h) => vec![Timing::Staggered(h), Timing::Pipeline(h)],
            None => vec![Timing::Paired, Timing::Staggered(PIPELINE_SLOTS), Timing::Pipeline(PIPELINE_SLOTS)],
        };
        let mut last = TwicError::Construction("no timing tried".into());
        for t in timings {
            let attempts: &[bool] = if t == Timing::Paired { &[false] } else { &[false, true] };
            for &balanced in attempts {
                match self.schedule(unit, t, balanced).and_then(|s| self.build_units(unit, &s)) {
                    Ok(c) => return Ok(c),
                    Err(e) => last = e,
                }
            }
        }
        Err(last)
    }

    fn carrier_side(&self) -> Direction {
        self.gain.other()
    }

    /// With `balanced`, messages per carrier phase follow the room left by
    /// the riders (same total) and odd factors request their riders in
    /// swapped order, so that a phase mixes both rider roles.
    fn schedule(&self, unit: UnitType, timing: Timing, balanced: bool) -> Result<Schedule> {
        let nu = self.shapes(self.gain).len();
        let carriers = self.shapes(self.carrier_side());
        let nf: usize = carriers.iter().map(|s| c_no(s.n, s.m)).sum();
        let h = match timing {
            Timing::Paired => 2,
            Timing::Pipeline(h) | Timing::Staggered(h) => h,
            Timing::Single => unreachable!("units need at least two slots"),
        };
        let odd_only = matches!(timing, Timing::Staggered(_)) || (unit == UnitType::S && timing != Timing::Paired);
        if h < 2 || (odd_only && h % 2 == 0) {
            return Err(TwicError::InvalidArgument(format!("block length {h} unsupported for this unit type")));
        }
        let mut gain = vec![vec![Vec::new(); nu]; h];
        let mut riders = vec![Vec::new(); h + 1];
        let valid = |c: usize| match self.gain {
            Direction::Forward => (1..=h).contains(&c),
            Direction::Backward => c < h,
        };
        let key = |f: usize, k: usize, orient: u8| UnitKey { f, k, orient };
        let mut msgs: Vec<usize> = (0..=h).map(|c| if valid(c) { self.d } else { 0 }).collect();
        match (unit, timing) {
            (UnitType::S, Timing::Paired) => {
                for f in 0..nu {
                    gain[0][f].push(GainAct::StageOne(1));
                    gain[1][f].push(GainAct::StageTwo(1));
                    riders[1].push((Group::S { r1: true, r2: true }, key(f, 1, 0)));
                }
            }
            (_, Timing::Staggered(_)) => {
                let kk = (h - 1) / 2;
                for f in 0..nu {
                    let off = f % 2;
                    for k in 1..=kk {
                        let first = 2 * k - 1 + off;
                        match unit {
                            UnitType::S => {
                                gain[first - 1][f].push(GainAct::StageOne(k));
                                gain[first][f].push(GainAct::StageTwo(k));
                                riders[first].push((Group::S { r1: true, r2: true }, key(f, k, 0)));
                            }
                            UnitType::Z => {
                                gain[first - 1][f].extend([GainAct::Fresh(k, 0), GainAct::Fresh(k, 1)]);
                                gain[first][f].extend([GainAct::Relay(k, 0), GainAct::Relay(k, 1)]);
                                riders[first].push((Group::Za, key(f, k, 0)));
                                riders[first].push((Group::Zb, key(f, k, 1)));
                            }
                        }
                    }
                    if unit == UnitType::S {
                        // the phase left over by the offset carries top-level bits only
                        let spare = if off == 0 { h } else { 1 };
                        gain[spare - 1][f].push(GainAct::TopOnly);
                    }
                }
            }
            (UnitType::S, _) => {
                let kk = (h - 1) / 2;
                for f in 0..nu {
                    for k in 1..=kk {
                        let first = if k == 1 { 1 } else { 2 * k - 2 };
                        gain[first - 1][f].push(GainAct::StageOne(k));
                        gain[2 * k][f].push(GainAct::StageTwo(k));
                        let (early, late) = if balanced && f % 2 == 1 { (false, true) } else { (true, false) };
                        riders[2 * k - 1].push((Group::S { r1: early, r2: late }, key(f, k, 0)));
                        riders[2 * k].push((Group::S { r1: late, r2: early }, key(f, k, 0)));
                    }
                    gain[2 * kk - 1][f].push(GainAct::TopOnly);
                }
            }
            (UnitType::Z, Timing::Paired) => {
                for f in 0..nu {
                    gain[0][f].extend([GainAct::Fresh(1, 0), GainAct::Fresh(1, 1)]);
                    gain[1][f].extend([GainAct::Relay(1, 0), GainAct::Relay(1, 1)]);
                    riders[1].push((Group::Za, key(f, 1, 0)));
                    riders[1].push((Group::Zb, key(f, 1, 1)));
                }
            }
            (UnitType::Z, _) => {
                for f in 0..nu {
                    // alternate orientations so relaying load spreads over both carrier transmitters
                    let o = (f % 2) as u8;
                    for tau in 1..h {
                        gain[tau - 1][f].push(GainAct::Fresh(tau, o));
                        gain[tau][f].push(GainAct::Relay(tau, o));
                        riders[tau].push((if o == 0 { Group::Za } else { Group::Zb }, key(f, tau, o)));
                    }
                }
            }
        }
        if timing == Timing::Paired {
            let other = nf.min(2 * self.d);
            let rider_phase = 2 * self.d - other;
            msgs[1] = rider_phase;
            let c_other = if self.gain == Direction::Forward { 2 } else { 0 };
            msgs[c_other] = other;
        } else if balanced {
            let cap: usize = carriers.iter().map(|&s| rider_capacity(s, unit == UnitType::S)).sum();
            let load = |c: usize| riders[c].iter().map(|x: &(Group, UnitKey)| x.0.riders()).sum::<usize>();
            for c in 0..=h {
                if valid(c) {
                    msgs[c] = nf.min(cap.saturating_sub(load(c)));
                }
            }
            let target = self.d * (0..=h).filter(|&c| valid(c)).count();
            let mut total: usize = msgs.iter().sum();
            if total < target {
                return Err(TwicError::Construction("carriers lack room for balanced messages".into()));
            }
            while total > target {
                let c = (0..=h).rev().max_by_key(|&c| msgs[c]).expect("phases exist");
                msgs[c] -= 1;
                total -= 1;
            }
        }
        Ok(Schedule { h, gain, riders, msgs })
    }

    /// (slot, direction) of gain phase `tau` and carrier phase `c`.
    fn gain_phase(&self, tau: usize) -> (usize, Direction) {
        (tau, self.gain)
    }

    fn carrier_phase(&self, c: usize) -> (usize, Direction) {
        match self.gain {
            Direction::Forward => (c, Direction::Backward),
            Direction::Backward => (c + 1, Direction::Forward),
        }
    }

    fn build_units(&self, unit: UnitType, sch: &Schedule) -> Result<CompiledScheme> {
        let g = self.gain;
        let c_dir = self.carrier_side();
        let carriers: Vec<(Shape, usize, usize)> = self
            .shapes(c_dir)
            .iter()
            .map(|&s| (s, rider_capacity(s, unit == UnitType::S), c_no(s.n, s.m)))
            .collect();
        let mut b = Builder::new(self.fwd.clone(), self.bwd.clone(), sch.h);
        let mut units: HashMap<UnitKey, UnitState> = HashMap::new();
        let [x1, x2] = Node::transmitters(g);
        // chronological order of phases
        let mut events: Vec<(usize, Direction)> = Vec::new();
        for slot in 1..=sch.h {
            events.push((slot, Direction::Forward));
            events.push((slot, Direction::Backward));
        }
        for (slot, dir) in events {
            if dir == g {
                let tau = slot;
                debug_assert_eq!(self.gain_phase(tau), (slot, dir));
                for (f, acts) in sch.gain[tau - 1].iter().enumerate() {
                    for &act in acts {
                        let key = |k: usize, orient: u8| UnitKey { f, k, orient };
                        match act {
                            GainAct::StageOne(k) => {
                                let p = format!("f{f}.k{k}.");
                                let a_up = b.fresh(x1, format!("{p}A"), slot);
                                let a_lo = b.fresh(x1, format!("{p}a"), slot);
                                let b_up = b.fresh(x2, format!("{p}B"), slot);
                                let b_lo = b.fresh(x2, format!("{p}b"), slot);
                                b.send(slot, x1, f, 0, a_up.clone());
                                b.send(slot, x1, f, 1, a_lo.clone());
                                b.send(slot, x2, f, 0, b_up.clone());
                                b.send(slot, x2, f, 1, b_lo.clone());
                                units.insert(key(k, 0), UnitState { sym: vec![a_up, a_lo, b_up, b_lo], sol: [None, None] });
                            }
                            GainAct::StageTwo(k) => {
                                let st = units.get(&key(k, 0)).ok_or_else(|| missing("stage I", f, k))?;
                                let s = st.sol[0].clone().ok_or_else(|| missing("first rider", f, k))?;
                                let t = st.sol[1].clone().ok_or_else(|| missing("second rider", f, k))?;
                                let p = format!("f{f}.k{k}.");
                                let a2 = b.fresh(x1, format!("{p}A'"), slot);
                                let b2 = b.fresh(x2, format!("{p}B'"), slot);
                                b.send(slot, x1, f, 0, s.clone());
                                b.send(slot, x1, f, 1, a2.xor(&t));
                                b.send(slot, x2, f, 0, t);
                                b.send(slot, x2, f, 1, b2.xor(&s));
                            }
                            GainAct::TopOnly => {
                                let a = b.fresh(x1, format!("f{f}.top.A"), slot);
                                let bb = b.fresh(x2, format!("f{f}.top.B"), slot);
                                b.send(slot, x1, f, 0, a);
                                b.send(slot, x2, f, 0, bb);
                            }
                            GainAct::Fresh(k, o) => {
                                let (tx, name) = if o == 0 { (x1, "a") } else { (x2, "b") };
                                let v = b.fresh(tx, format!("f{f}.k{k}.{name}"), slot);
                                b.send(slot, tx, f, 0, v.clone());
                                units.insert(key(k, o), UnitState { sym: vec![v], sol: [None, None] });
                            }
                            GainAct::Relay(k, o) => {
                                let st = units.get(&key(k, o)).ok_or_else(|| missing("fresh bit", f, k))?;
                                let s = st.sol[0].clone().ok_or_else(|| missing("relay rider", f, k))?;
                                let tx = if o == 0 { x2 } else { x1 };
                                b.send(slot, tx, f, 0, s);
                            }
                        }
                    }
                }
            } else {
                let c = match g {
                    Direction::Forward => slot,
                    Direction::Backward => slot - 1,
                };
                debug_assert_eq!(self.carrier_phase(c), (slot, dir));
                let (m, riders) = (sch.msgs[c], &sch.riders[c]);
                if m == 0 && riders.is_empty() {
                    continue;
                }
                let placed = place(&carriers, riders, m).ok_or_else(|| {
                    TwicError::Construction(format!(
                        "no carrier code for {} riders and {m} messages on {:?}",
                        riders.len(),
                        carriers.iter().map(|c| c.0).collect::<Vec<_>>()
                    ))
                })?;
                for (ci, (tpl, groups)) in placed.into_iter().enumerate() {
                    if let Some(tpl) = tpl {
                        instantiate(&mut b, slot, dir, ci, &tpl, &groups, &mut units, &format!("c{c}"));
                    }
                }
            }
        }
        b.compile()
    }

    fn build_single(&self) -> Result<CompiledScheme> {
        let mut b = Builder::new(self.fwd.clone(), self.bwd.clone(), 1);
        let mut units = HashMap::new();
        for (dir, m) in [(Direction::Forward, self.nf.0), (Direction::Backward, self.nf.1)] {
            let shapes: Vec<(Shape, usize, usize)> =
                self.shapes(dir).iter().map(|&s| (s, c_no(s.n, s.m), c_no(s.n, s.m))).collect();
            if m == 0 {
                continue;
            }
            let placed = place(&shapes, &[], m)
                .ok_or_else(|| TwicError::Construction(format!("no nonfeedback code for {m} messages")))?;
            let tag = if dir == Direction::Forward { "nf.f" } else { "nf.b" };
            for (ci, (tpl, groups)) in placed.into_iter().enumerate() {
                if let Some(tpl) = tpl {
                    instantiate(&mut b, 1, dir, ci, &tpl, &groups, &mut units, tag);
                }
            }
        }
        b.compile()
    }
}

fn missing(what: &str, f: usize, k: usize) -> TwicError {
    TwicError::Construction(format!("{what} of unit {k} on factor {f} unavailable"))
}

type Placed = Vec<(Option<Arc<Template>>, Vec<(Group, UnitKey)>)>;

/// Try allocation variants until every carrier instance has a code.
fn place(carriers: &[(Shape, usize, usize)], riders: &[(Group, UnitKey)], m: usize) -> Option<Placed> {
    let mut tried: Vec<Vec<(usize, Vec<Group>)>> = Vec::new();
    for variant in 0..16 {
        let Some(alloc) = allocate(carriers, riders, m, variant) else {
            continue;
        };
        let sig: Vec<(usize, Vec<Group>)> = alloc
            .iter()
            .map(|(mi, gs)| {
                let mut k: Vec<Group> = gs.iter().map(|x| x.0).collect();
                k.sort();
                (*mi, k)
            })
            .collect();
        if tried.contains(&sig) {
            continue;
        }
        tried.push(sig);
        let mut out = Vec::new();
        let mut ok = true;
        for (ci, (mi, mut groups)) in alloc.into_iter().enumerate() {
            if mi == 0 && groups.is_empty() {
                out.push((None, groups));
                continue;
            }
            groups.sort_by_key(|x| x.0);
            let kinds: Vec<Group> = groups.iter().map(|x| x.0).collect();
            match synthesize_split(carriers[ci].0, mi, &kinds) {
                Some(t) => out.push((Some(t), groups)),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Some(out);
        }
    }
    None
}

/// Distribute messages and riders over carrier instances. Variant bits:
/// 1 = split paired riders, 2 = worst-fit placement, 4 = reverse message
/// reduction order, 8 = take messages from one carrier before the next.
fn allocate(carriers: &[(Shape, usize, usize)], riders: &[(Group, UnitKey)], m: usize, variant: usize) -> Option<Allocation> {
    let n = carriers.len();
    let total_nf: usize = carriers.iter().map(|c| c.2).sum();
    if m > total_nf {
        return None;
    }
    let mut msgs: Vec<usize> = carriers.iter().map(|c| c.2).collect();
    let mut excess = total_nf - m;
    let order: Vec<usize> = if variant & 4 != 0 { (0..n).rev().collect() } else { (0..n).collect() };
    if variant & 8 != 0 {
        for &i in &order {
            let t = excess.min(msgs[i]);
            msgs[i] -= t;
            excess -= t;
        }
    }
    while excess > 0 {
        for &i in &order {
            if excess > 0 && msgs[i] > 0 {
                msgs[i] -= 1;
                excess -= 1;
            }
        }
    }
    let mut groups: Vec<(Group, UnitKey)> = Vec::new();
    for &(g, k) in riders {
        match g {
            Group::S { r1: true, r2: true } if variant & 1 != 0 => {
                groups.push((Group::S { r1: true, r2: false }, k));
                groups.push((Group::S { r1: false, r2: true }, k));
            }
            _ => groups.push((g, k)),
        }
    }
    groups.sort_by_key(|x| std::cmp::Reverse(x.0.riders()));
    let mut room: Vec<usize> = carriers.iter().zip(&msgs).map(|(c, &mi)| c.1 - mi).collect();
    let mut out: Allocation = msgs.into_iter().map(|mi| (mi, Vec::new())).collect();
    for (g, k) in groups {
        let r = g.riders();
        let pick = if variant & 2 != 0 {
            (0..n).filter(|&i| room[i] >= r).max_by_key(|&i| (room[i], std::cmp::Reverse(i)))
        } else {
            (0..n).find(|&i| room[i] >= r)
        }?;
        room[pick] -= r;
        out[pick].1.push((g, k));
    }
    Some(out)
}

/// Emit a carrier template on factor `ci` and record the riders' solutions.
#[allow(clippy::too_many_arguments)]
fn instantiate(
    b: &mut Builder,
    slot: usize,
    dir: Direction,
    ci: usize,
    tpl: &Template,
    groups: &[(Group, UnitKey)],
    units: &mut HashMap<UnitKey, UnitState>,
    tag: &str,
) {
    let [t1, t2] = Node::transmitters(dir);
    let mut local: Vec<BitVec> = Vec::with_capacity(tpl.n_sym);
    for j in 0..tpl.key.d1 {
        local.push(b.fresh(t1, format!("{tag}.i{ci}.m1.{j}"), slot));
    }
    for j in 0..tpl.key.d2 {
        local.push(b.fresh(t2, format!("{tag}.i{ci}.m2.{j}"), slot));
    }
    for (g, k) in groups {
        let st = units.get(k).expect("rider unit exists");
        debug_assert_eq!(st.sym.len(), g.n_sym());
        local.extend(st.sym.iter().cloned());
    }
    let map = |v: u64| -> BitVec {
        let mut out = BitVec::new();
        for (i, s) in local.iter().enumerate() {
            if v >> i & 1 == 1 {
                out.xor_assign(s);
            }
        }
        out
    };
    for (t, node) in [t1, t2].into_iter().enumerate() {
        for (lvl, &v) in tpl.t_tx[t].iter().enumerate() {
            b.send(slot, node, ci, lvl, map(v));
        }
    }
    for (gi, (g, k)) in groups.iter().enumerate() {
        let sol = tpl.solutions[gi];
        let st = units.get_mut(k).expect("rider unit exists");
        match *g {
            Group::S { r1, r2 } => {
                if r1 {
                    st.sol[0] = Some(map(sol[0].expect("solved rider")));
                }
                if r2 {
                    st.sol[1] = Some(map(sol[1].expect("solved rider")));
                }
            }
            Group::Za | Group::Zb => st.sol[0] = Some(map(sol[0].expect("solved rider"))),
        }
    }
}
