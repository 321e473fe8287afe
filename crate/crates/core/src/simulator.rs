//! Slot-level execution of schemes and plans over the full two-way channel.
//!
//! Every plan entry is bound to physical factor instances of the forward and
//! backward channels (see [`crate::planner::factor_instances`]). In each phase
//! the transmitters' per-entry, per-factor signals are assembled into one
//! full-width signal vector, passed through [`crate::channel::transfer`], and
//! the receptions are split back per instance. Nodes only ever see their own
//! message bits and their receptions; decoded values are compared with the
//! seeded source bits.

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write as _;

use crate::capacity::{RatePair, RegionSpec};
use crate::channel::{transfer, ChannelParams, Direction, SignalVector, Q};
use crate::decomposition::FactorInstance;
use crate::engine::Node;
use crate::error::{Result, TwicError};
use crate::gf2::BitVec;
use crate::planner::{factor_instances, SchemePlan};
use crate::schemes::{make_scheme, BlockSpec, NodePolicy, SchemeSpec};

/// Number of slots kept in a trace.
pub const TRACE_SLOTS: usize = 64;

/// Deliberate corruption of one transmission (negative controls).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Fault {
    /// Flip level `level` of `node`'s full signal in global slot `slot`.
    FlipBit { node: Node, slot: usize, level: usize },
    /// Drop the last level of `node`'s signal in global slot `slot`.
    WrongLength { node: Node, slot: usize },
}

/// Run options.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub trace: bool,
    pub ledger: bool,
    pub fault: Option<Fault>,
}

/// One message bit: owner, plan entry, block, symbol name, value, slot of
/// first transmission, decode slot and decoded value (global slots).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerBit {
    pub node: Node,
    pub entry: usize,
    pub block: usize,
    pub name: String,
    pub value: bool,
    pub injected: usize,
    pub deadline: usize,
    pub decoded: Option<bool>,
}

/// Every message bit of a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MessageLedger {
    pub bits: Vec<LedgerBit>,
}

/// Delivered counts of one plan entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntryReport {
    pub kind: String,
    pub slots_per_block: usize,
    pub blocks: usize,
    pub fwd_bits_delivered: usize,
    pub bwd_bits_delivered: usize,
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationReport {
    /// The physical channel; absent for isolated-factor runs.
    pub params: Option<ChannelParams>,
    pub seed: u64,
    pub slots_run: usize,
    pub fwd_bits_declared: usize,
    pub bwd_bits_declared: usize,
    pub fwd_bits_delivered: usize,
    pub bwd_bits_delivered: usize,
    pub achieved: RatePair,
    pub error_count: usize,
    pub undecoded: usize,
    pub entries: Vec<EntryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger: Option<MessageLedger>,
}

/// A plan entry bound to physical factor instances.
struct Bound {
    policy: NodePolicy,
    block: BlockSpec,
    /// Instance indices per direction (forward, backward), in entry factor order.
    inst: [Vec<usize>; 2],
    /// Decode rules grouped by (in-block slot, phase).
    rules: Vec<[Vec<usize>; 2]>,
}

fn dir_idx(d: Direction) -> usize {
    match d {
        Direction::Forward => 0,
        Direction::Backward => 1,
    }
}

fn bind(entries: &[SchemeSpec], inst: &[Vec<FactorInstance>; 2]) -> Result<Vec<Bound>> {
    let mut used = [vec![false; inst[0].len()], vec![false; inst[1].len()]];
    let mut out = Vec::new();
    for e in entries {
        let (policy, block) = make_scheme(e)?;
        let mut ids: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (d, shapes) in [&e.fwd, &e.bwd].into_iter().enumerate() {
            for s in shapes {
                let i = (0..inst[d].len()).find(|&i| !used[d][i] && inst[d][i].shape == *s).ok_or_else(|| {
                    TwicError::InvalidArgument(format!("entry {} needs a free {s} factor the channel does not have", e.kind))
                })?;
                used[d][i] = true;
                ids[d].push(i);
            }
        }
        let c = &policy.scheme;
        let mut rules = vec![[Vec::new(), Vec::new()]; c.slots];
        for (ri, r) in c.decodes.iter().enumerate() {
            rules[r.slot - 1][dir_idx(c.syms[r.sym].owner.side())].push(ri);
        }
        out.push(Bound { policy, block, inst: ids, rules });
    }
    Ok(out)
}

/// Execute a plan for `blocks` repetitions of the least common multiple of
/// its entries' block lengths.
pub fn run(plan: &SchemePlan, p: &ChannelParams, blocks: usize, seed: u64) -> Result<SimulationReport> {
    run_entries(&plan.entries, p, blocks, seed, &RunOptions::default())
}

/// Execute a single scheme on the channel `p`.
pub fn run_scheme(spec: &SchemeSpec, p: &ChannelParams, blocks: usize, seed: u64) -> Result<SimulationReport> {
    run_entries(std::slice::from_ref(spec), p, blocks, seed, &RunOptions::default())
}

/// Execute plan entries jointly, with options.
pub fn run_entries(entries: &[SchemeSpec], p: &ChannelParams, blocks: usize, seed: u64, opt: &RunOptions) -> Result<SimulationReport> {
    let medium = Medium {
        inst: [factor_instances(p.n, p.m), factor_instances(p.n_b, p.m_b)],
        q: [p.q_f(), p.q_b()],
        whole: Some(*p),
    };
    execute(entries, &medium, blocks, seed, opt)
}

/// Execute one scheme on exactly its own factors, each an isolated
/// channel (no physical channel needed).
pub fn run_isolated(spec: &SchemeSpec, blocks: usize, seed: u64, opt: &RunOptions) -> Result<SimulationReport> {
    let stack = |shapes: &[crate::decomposition::Shape]| {
        let mut off = 0;
        let inst: Vec<FactorInstance> = shapes
            .iter()
            .map(|&s| {
                let lv: Vec<usize> = (off..off + s.q()).collect();
                off += s.q();
                FactorInstance { shape: s, tx_levels: lv.clone(), rx_levels: lv }
            })
            .collect();
        (inst, off)
    };
    let (fi, qf) = stack(&spec.fwd);
    let (bi, qb) = stack(&spec.bwd);
    let medium = Medium { inst: [fi, bi], q: [qf, qb], whole: None };
    execute(std::slice::from_ref(spec), &medium, blocks, seed, opt)
}

/// Physical layer: factor instances per direction and the full signal
/// widths; `whole` is the channel when the instances are its decomposition,
/// otherwise every instance is an isolated channel of its own shape.
struct Medium {
    inst: [Vec<FactorInstance>; 2],
    q: [usize; 2],
    whole: Option<ChannelParams>,
}

impl Medium {
    fn transfer(&self, dir: Direction, x: &[SignalVector]) -> Result<[SignalVector; 2]> {
        if let Some(p) = self.whole {
            let (n, m) = p.dir(dir);
            return Ok([transfer(&x[0], &x[1], n, m)?, transfer(&x[1], &x[0], n, m)?]);
        }
        let d = dir_idx(dir);
        let mut y = [SignalVector::zeros(self.q[d]), SignalVector::zeros(self.q[d])];
        for fi in &self.inst[d] {
            let part = |v: &SignalVector| SignalVector::from_bits(fi.tx_levels.iter().map(|&l| v.bits[l]).collect());
            let (a, b) = (part(&x[0]), part(&x[1]));
            let r = [transfer(&a, &b, fi.shape.n, fi.shape.m)?, transfer(&b, &a, fi.shape.n, fi.shape.m)?];
            for k in 0..2 {
                for (&l, &bit) in fi.rx_levels.iter().zip(&r[k].bits) {
                    y[k].bits[l] = bit;
                }
            }
        }
        Ok(y)
    }
}

fn execute(entries: &[SchemeSpec], medium: &Medium, blocks: usize, seed: u64, opt: &RunOptions) -> Result<SimulationReport> {
    if blocks == 0 {
        return Err(TwicError::InvalidArgument("blocks must be at least 1".into()));
    }
    let (inst, q) = (&medium.inst, medium.q);
    let bound = bind(entries, inst)?;
    let period = bound.iter().fold(1usize, |acc, b| acc.lcm(&b.block.slots_per_block));
    let total = period * blocks;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // per entry: per node local bits and reception cursor, plus source values
    let mut local: Vec<[BitVec; 4]> = vec![Default::default(); bound.len()];
    let mut cursor: Vec<[usize; 4]> = vec![[0; 4]; bound.len()];
    let mut source: Vec<Vec<bool>> = vec![Vec::new(); bound.len()];
    let mut ledger_at: Vec<Vec<usize>> = vec![Vec::new(); bound.len()];
    let mut ledger = MessageLedger::default();
    let mut per_entry: Vec<EntryReport> = bound
        .iter()
        .zip(entries)
        .map(|(b, e)| EntryReport {
            kind: e.kind.name().to_string(),
            slots_per_block: b.block.slots_per_block,
            blocks: total / b.block.slots_per_block,
            fwd_bits_delivered: 0,
            bwd_bits_delivered: 0,
        })
        .collect();
    let (mut errors, mut decoded_count) = (0usize, 0usize);
    let mut trace = opt.trace.then(Vec::new);

    for t in 1..=total {
        for (ei, b) in bound.iter().enumerate() {
            let h = b.block.slots_per_block;
            if (t - 1) % h != 0 {
                continue;
            }
            // new block: fresh message bits for every node
            let c = &b.policy.scheme;
            source[ei] = (0..c.syms.len()).map(|_| rng.gen_bool(0.5)).collect();
            ledger_at[ei].clear();
            for n in Node::ALL {
                let prog = &c.programs[n.idx()];
                let mut v = BitVec::new();
                for (li, &s) in prog.own_syms.iter().enumerate() {
                    v.set(li, source[ei][s]);
                }
                local[ei][n.idx()] = v;
                cursor[ei][n.idx()] = prog.own_syms.len();
            }
            if opt.ledger {
                let blk = (t - 1) / h;
                for (s, info) in c.syms.iter().enumerate() {
                    ledger_at[ei].push(ledger.bits.len());
                    ledger.bits.push(LedgerBit {
                        node: info.owner,
                        entry: ei,
                        block: blk,
                        name: info.name.clone(),
                        value: source[ei][s],
                        injected: t - 1 + info.slot,
                        deadline: 0,
                        decoded: None,
                    });
                }
                for r in &c.decodes {
                    ledger.bits[ledger_at[ei][r.sym]].deadline = t - 1 + r.slot;
                }
            }
        }
        for dir in [Direction::Forward, Direction::Backward] {
            let d = dir_idx(dir);
            let txs = Node::transmitters(dir);
            let mut x: Vec<SignalVector> = Vec::with_capacity(2);
            for tx in txs {
                let mut full = SignalVector::zeros(q[d]);
                for (ei, b) in bound.iter().enumerate() {
                    let s = (t - 1) % b.block.slots_per_block + 1;
                    let sig = b.policy.transmit(tx, s, &local[ei][tx.idx()]);
                    for (f, v) in sig.iter().enumerate() {
                        let fi = &inst[d][b.inst[d][f]];
                        if v.len() != fi.tx_levels.len() {
                            return Err(violation(tx, t, fi.tx_levels.len(), v.len()));
                        }
                        for (lv, &bit) in fi.tx_levels.iter().zip(&v.bits) {
                            full.bits[*lv] = bit;
                        }
                    }
                }
                match opt.fault {
                    Some(Fault::FlipBit { node, slot, level }) if node == tx && slot == t && level < full.len() => {
                        full.bits[level] ^= true;
                    }
                    Some(Fault::WrongLength { node, slot }) if node == tx && slot == t => {
                        full.bits.pop();
                    }
                    _ => {}
                }
                if full.len() != q[d] {
                    return Err(violation(tx, t, q[d], full.len()));
                }
                x.push(full);
            }
            let rxs = Node::receivers(dir);
            let y = medium.transfer(dir, &x)?;
            if let Some(tr) = trace.as_mut().filter(|_| t <= TRACE_SLOTS) {
                let mut line = format!("{t} {}", if dir == Direction::Forward { "fwd" } else { "bwd" });
                for (node, v) in txs.iter().zip(&x) {
                    let _ = write!(line, " {node}:tx={v}");
                }
                for (node, v) in rxs.iter().zip(&y) {
                    let _ = write!(line, " {node}:rx={v}");
                }
                tr.push(line);
            }
            for (ei, b) in bound.iter().enumerate() {
                let s = (t - 1) % b.block.slots_per_block + 1;
                for (ri, rx) in rxs.iter().enumerate() {
                    for &ii in &b.inst[d] {
                        for &lv in &inst[d][ii].rx_levels {
                            let k = &mut cursor[ei][rx.idx()];
                            local[ei][rx.idx()].set(*k, y[ri].bits[lv]);
                            *k += 1;
                        }
                    }
                }
                let c = &b.policy.scheme;
                for &r in &b.rules[s - 1][d] {
                    let rule = &c.decodes[r];
                    let got = rule.mask.dot(&local[ei][rule.node.idx()]);
                    let ok = got == source[ei][rule.sym];
                    decoded_count += 1;
                    if ok {
                        match dir {
                            Direction::Forward => per_entry[ei].fwd_bits_delivered += 1,
                            Direction::Backward => per_entry[ei].bwd_bits_delivered += 1,
                        }
                    } else {
                        errors += 1;
                    }
                    if opt.ledger {
                        ledger.bits[ledger_at[ei][rule.sym]].decoded = Some(got);
                    }
                }
            }
        }
    }

    let fwd_declared: usize = per_entry.iter().zip(&bound).map(|(e, b)| e.blocks * b.block.fwd_bits).sum();
    let bwd_declared: usize = per_entry.iter().zip(&bound).map(|(e, b)| e.blocks * b.block.bwd_bits).sum();
    let fwd: usize = per_entry.iter().map(|e| e.fwd_bits_delivered).sum();
    let bwd: usize = per_entry.iter().map(|e| e.bwd_bits_delivered).sum();
    let slots = total as i64;
    Ok(SimulationReport {
        params: medium.whole,
        seed,
        slots_run: total,
        fwd_bits_declared: fwd_declared,
        bwd_bits_declared: bwd_declared,
        fwd_bits_delivered: fwd,
        bwd_bits_delivered: bwd,
        achieved: RatePair::new(Q::new(fwd as i64, slots), Q::new(bwd as i64, slots)),
        error_count: errors,
        undecoded: fwd_declared + bwd_declared - decoded_count,
        entries: per_entry,
        trace,
        ledger: opt.ledger.then_some(ledger),
    })
}

fn violation(node: Node, slot: usize, expected: usize, got: usize) -> TwicError {
    TwicError::ProtocolViolation {
        node: node.name().into(),
        slot,
        detail: format!("signal of length {got}, expected {expected}"),
    }
}

/// True iff every declared bit was decoded, and decoded correctly.
pub fn verify_zero_error(report: &SimulationReport) -> bool {
    let ledger_ok = report
        .ledger
        .as_ref()
        .map_or(true, |l| l.bits.iter().all(|b| b.decoded == Some(b.value) && b.deadline >= b.injected));
    report.error_count == 0
        && report.undecoded == 0
        && report.fwd_bits_delivered == report.fwd_bits_declared
        && report.bwd_bits_delivered == report.bwd_bits_declared
        && ledger_ok
}

/// True iff the achieved rate pair satisfies every constraint of the region.
pub fn check_bounds(report: &SimulationReport, spec: &RegionSpec) -> bool {
    spec.contains(&report.achieved)
}
