//! Symbolic scheme construction and compilation.
//!
//! A generator describes one block of a scheme as transmissions that are
//! GF(2) combinations of message symbols. Receptions are derived by the
//! channel transfer, and compilation turns every transmission and decoder into
//! a linear map over the node's locally available bits (own message bits
//! followed by its receptions in arrival order), rejecting any transmission a
//! node could not compute causally and any message its receiver cannot decode.

use serde::Serialize;
use std::fmt;

use crate::channel::Direction;
use crate::decomposition::Shape;
use crate::error::{Result, TwicError};
use crate::gf2::{Basis, BitVec};

/// The four terminals: forward transmitters u1, u2 and backward transmitters
/// u1~, u2~ (the forward receivers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Node {
    U1,
    U2,
    V1,
    V2,
}

impl Node {
    pub const ALL: [Node; 4] = [Node::U1, Node::U2, Node::V1, Node::V2];

    pub fn idx(self) -> usize {
        self as usize
    }

    /// Direction on which this node transmits.
    pub fn side(self) -> Direction {
        match self {
            Node::U1 | Node::U2 => Direction::Forward,
            Node::V1 | Node::V2 => Direction::Backward,
        }
    }

    /// 0 for the first pair (u1, u1~), 1 for the second.
    pub fn pair(self) -> usize {
        match self {
            Node::U1 | Node::V1 => 0,
            Node::U2 | Node::V2 => 1,
        }
    }

    pub fn transmitters(d: Direction) -> [Node; 2] {
        match d {
            Direction::Forward => [Node::U1, Node::U2],
            Direction::Backward => [Node::V1, Node::V2],
        }
    }

    pub fn receivers(d: Direction) -> [Node; 2] {
        Self::transmitters(d.other())
    }

    /// Intended receiver of this node's messages.
    pub fn dest(self) -> Node {
        match self {
            Node::U1 => Node::V1,
            Node::U2 => Node::V2,
            Node::V1 => Node::U1,
            Node::V2 => Node::U2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Node::U1 => "u1",
            Node::U2 => "u2",
            Node::V1 => "u1~",
            Node::V2 => "u2~",
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One message bit of a block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolInfo {
    pub name: String,
    pub owner: Node,
    /// Slot in which the bit is first transmitted.
    pub slot: usize,
}

/// Levelwise reception of a factor: direct signal shifted by q-n XOR cross
/// signal shifted by q-m.
pub fn transfer_sym(direct: &[BitVec], cross: &[BitVec], s: Shape) -> Vec<BitVec> {
    let q = s.q();
    (0..q)
        .map(|i| {
            let mut v = BitVec::new();
            if i >= q - s.n {
                v.xor_assign(&direct[i - (q - s.n)]);
            }
            if i >= q - s.m {
                v.xor_assign(&cross[i - (q - s.m)]);
            }
            v
        })
        .collect()
}

/// Block under construction. Slots are 1-based; each slot has a forward then
/// a backward phase, and phases are committed in chronological order.
#[derive(Debug, Clone)]
pub struct Builder {
    pub fwd: Vec<Shape>,
    pub bwd: Vec<Shape>,
    pub slots: usize,
    pub syms: Vec<SymbolInfo>,
    tx: Vec<[Vec<Vec<BitVec>>; 4]>,
    rx: Vec<[Vec<Vec<BitVec>>; 4]>,
    decodes: Vec<(usize, usize)>,
    committed: usize,
}

fn phase_index(slot: usize, d: Direction) -> usize {
    2 * (slot - 1) + usize::from(d == Direction::Backward)
}

impl Builder {
    pub fn new(fwd: Vec<Shape>, bwd: Vec<Shape>, slots: usize) -> Self {
        let empty = |shapes: &[Shape]| shapes.iter().map(|s| vec![BitVec::new(); s.q()]).collect::<Vec<_>>();
        let per_slot = || {
            [empty(&fwd), empty(&fwd), empty(&bwd), empty(&bwd)]
        };
        let tx = (0..slots).map(|_| per_slot()).collect();
        // receivers of forward signals are u1~, u2~ and hold forward-shaped vectors
        let per_slot_rx = || [empty(&bwd), empty(&bwd), empty(&fwd), empty(&fwd)];
        let rx = (0..slots).map(|_| per_slot_rx()).collect();
        Self { fwd: fwd.clone(), bwd: bwd.clone(), slots, syms: Vec::new(), tx, rx, decodes: Vec::new(), committed: 0 }
    }

    pub fn shapes(&self, d: Direction) -> &[Shape] {
        match d {
            Direction::Forward => &self.fwd,
            Direction::Backward => &self.bwd,
        }
    }

    /// New message bit owned by `owner`; returns its symbol vector.
    pub fn fresh(&mut self, owner: Node, name: impl Into<String>, slot: usize) -> BitVec {
        self.syms.push(SymbolInfo { name: name.into(), owner, slot });
        BitVec::unit(self.syms.len() - 1)
    }

    fn check_open(&self, slot: usize, node: Node) {
        assert!(slot >= 1 && slot <= self.slots, "slot {slot} outside block");
        assert!(phase_index(slot, node.side()) >= self.committed, "phase already committed");
    }

    /// Set one transmitted level.
    pub fn send(&mut self, slot: usize, node: Node, factor: usize, level: usize, v: BitVec) {
        self.check_open(slot, node);
        self.tx[slot - 1][node.idx()][factor][level] = v;
    }

    /// XOR a term into one transmitted level.
    pub fn add(&mut self, slot: usize, node: Node, factor: usize, level: usize, v: &BitVec) {
        self.check_open(slot, node);
        self.tx[slot - 1][node.idx()][factor][level].xor_assign(v);
    }

    pub fn tx(&self, slot: usize, node: Node, factor: usize) -> &[BitVec] {
        &self.tx[slot - 1][node.idx()][factor]
    }

    /// Reception of `node` on `factor` in `slot` (after the phase is committed).
    pub fn rx(&self, slot: usize, node: Node, factor: usize) -> &[BitVec] {
        assert!(phase_index(slot, node.side().other()) < self.committed, "phase not committed");
        &self.rx[slot - 1][node.idx()][factor]
    }

    /// Finish a phase: derive the receptions. Phases must be committed in order.
    pub fn commit(&mut self, slot: usize, d: Direction) {
        let pi = phase_index(slot, d);
        assert!(pi >= self.committed, "phase committed twice");
        while self.committed <= pi {
            let s = self.committed / 2 + 1;
            let dir = if self.committed % 2 == 0 { Direction::Forward } else { Direction::Backward };
            let [t1, t2] = Node::transmitters(dir);
            let shapes = self.shapes(dir).to_vec();
            for (k, r) in Node::receivers(dir).into_iter().enumerate() {
                let (direct, cross) = if k == 0 { (t1, t2) } else { (t2, t1) };
                for (f, &sh) in shapes.iter().enumerate() {
                    let y = transfer_sym(&self.tx[s - 1][direct.idx()][f], &self.tx[s - 1][cross.idx()][f], sh);
                    self.rx[s - 1][r.idx()][f] = y;
                }
            }
            self.committed += 1;
        }
    }

    pub fn commit_through(&mut self, slot: usize) {
        self.commit(slot, Direction::Backward);
    }

    /// Declare that the message bit `sym` is decoded by its destination at
    /// the receiving phase of `slot`. Undeclared bits are decoded at the
    /// earliest phase in which they become decodable.
    pub fn decode(&mut self, sym: &BitVec, slot: usize) {
        for id in sym.ones() {
            self.decodes.push((id, slot));
        }
    }

    /// Remove the components of `v` owned by `node` (always known to it).
    pub fn strip(&self, node: Node, v: &BitVec) -> BitVec {
        v.filter(|i| self.syms[i].owner != node)
    }

    pub fn owner(&self, sym: usize) -> Node {
        self.syms[sym].owner
    }

    /// Compile into per-node linear programs, checking causality and decodability.
    pub fn compile(mut self) -> Result<CompiledScheme> {
        if self.committed < 2 * self.slots {
            self.commit_through(self.slots);
        }
        let mut programs: Vec<Program> = Node::ALL
            .iter()
            .map(|&n| Program {
                own_syms: (0..self.syms.len()).filter(|&i| self.syms[i].owner == n).collect(),
                tx: Vec::new(),
                n_local: 0,
            })
            .collect();
        let mut bases: Vec<Basis> = vec![Basis::new(); 4];
        for n in Node::ALL {
            let p = &mut programs[n.idx()];
            for (li, &s) in p.own_syms.iter().enumerate() {
                bases[n.idx()].insert(&BitVec::unit(s), &BitVec::unit(li));
            }
            p.n_local = p.own_syms.len();
        }
        let mut pending: Vec<(usize, usize)> = self.decodes.clone();
        pending.sort_by_key(|&(id, slot)| (slot, id));
        pending.dedup();
        let mut decode_rules = Vec::new();
        let mut decoded = vec![false; self.syms.len()];
        let mut declared = vec![false; self.syms.len()];
        for &(id, _) in &pending {
            declared[id] = true;
        }
        for slot in 1..=self.slots {
            for dir in [Direction::Forward, Direction::Backward] {
                for t in Node::transmitters(dir) {
                    let mut per_factor = Vec::new();
                    for f in 0..self.shapes(dir).len() {
                        let mut masks = Vec::new();
                        for v in &self.tx[slot - 1][t.idx()][f] {
                            let m = bases[t.idx()].express(v).ok_or_else(|| TwicError::ProtocolViolation {
                                node: t.name().into(),
                                slot,
                                detail: "transmission depends on information the node does not have".into(),
                            })?;
                            masks.push(m);
                        }
                        per_factor.push(masks);
                    }
                    programs[t.idx()].tx.push(per_factor);
                }
                for r in Node::receivers(dir) {
                    for f in 0..self.shapes(dir).len() {
                        for v in &self.rx[slot - 1][r.idx()][f] {
                            let li = programs[r.idx()].n_local;
                            bases[r.idx()].insert(v, &BitVec::unit(li));
                            programs[r.idx()].n_local += 1;
                        }
                    }
                }
                for &(id, s) in pending.iter().filter(|&&(id, s)| s == slot && self.syms[id].owner.side() == dir) {
                    let dest = self.syms[id].owner.dest();
                    let mask = bases[dest.idx()].express(&BitVec::unit(id)).ok_or_else(|| {
                        TwicError::Construction(format!(
                            "{} not decodable at {} by slot {}",
                            self.syms[id].name, dest, s
                        ))
                    })?;
                    decode_rules.push(DecodeRule { sym: id, node: dest, slot: s, mask });
                    decoded[id] = true;
                }
                // undeclared messages are decoded as early as possible
                for id in 0..self.syms.len() {
                    if decoded[id] || declared[id] || self.syms[id].owner.side() != dir {
                        continue;
                    }
                    let dest = self.syms[id].owner.dest();
                    if let Some(mask) = bases[dest.idx()].express(&BitVec::unit(id)) {
                        decode_rules.push(DecodeRule { sym: id, node: dest, slot, mask });
                        decoded[id] = true;
                    }
                }
            }
        }
        if let Some(i) = decoded.iter().position(|&x| !x) {
            return Err(TwicError::Construction(format!("message {} has no decoder", self.syms[i].name)));
        }
        let fwd_bits = self.syms.iter().filter(|s| s.owner.side() == Direction::Forward).count();
        let bwd_bits = self.syms.len() - fwd_bits;
        let programs: [Program; 4] = programs.try_into().expect("four programs");
        Ok(CompiledScheme {
            fwd: self.fwd,
            bwd: self.bwd,
            slots: self.slots,
            syms: self.syms,
            programs,
            decodes: decode_rules,
            fwd_bits,
            bwd_bits,
            tx_sym: self.tx,
            rx_sym: self.rx,
        })
    }
}

/// Linear program of one node: for each slot, for each factor of its
/// transmit direction, a mask over its local bits per level.
#[derive(Debug, Clone)]
pub struct Program {
    pub own_syms: Vec<usize>,
    pub tx: Vec<Vec<Vec<BitVec>>>,
    pub n_local: usize,
}

/// Decoder: the destination recovers `sym` at `slot` as mask . local bits.
#[derive(Debug, Clone)]
pub struct DecodeRule {
    pub sym: usize,
    pub node: Node,
    pub slot: usize,
    pub mask: BitVec,
}

/// A compiled block: per-node programs, decoders and bit counts, together with
/// the symbolic transmissions for inspection.
#[derive(Debug, Clone)]
pub struct CompiledScheme {
    pub fwd: Vec<Shape>,
    pub bwd: Vec<Shape>,
    pub slots: usize,
    pub syms: Vec<SymbolInfo>,
    pub programs: [Program; 4],
    pub decodes: Vec<DecodeRule>,
    pub fwd_bits: usize,
    pub bwd_bits: usize,
    tx_sym: Vec<[Vec<Vec<BitVec>>; 4]>,
    rx_sym: Vec<[Vec<Vec<BitVec>>; 4]>,
}

impl CompiledScheme {
    pub fn shapes(&self, d: Direction) -> &[Shape] {
        match d {
            Direction::Forward => &self.fwd,
            Direction::Backward => &self.bwd,
        }
    }

    /// Symbolic transmission of `node` on `factor` in `slot`.
    pub fn tx_symbolic(&self, slot: usize, node: Node, factor: usize) -> &[BitVec] {
        &self.tx_sym[slot - 1][node.idx()][factor]
    }

    /// Symbolic reception of `node` on `factor` in `slot`.
    pub fn rx_symbolic(&self, slot: usize, node: Node, factor: usize) -> &[BitVec] {
        &self.rx_sym[slot - 1][node.idx()][factor]
    }

    pub fn sym_named(&self, name: &str) -> Option<usize> {
        self.syms.iter().position(|s| s.name == name)
    }

    /// Decode slot of every message bit, by symbol name.
    pub fn decode_deadlines(&self) -> Vec<(String, usize)> {
        let mut v: Vec<(String, usize)> = self.decodes.iter().map(|d| (self.syms[d.sym].name.clone(), d.slot)).collect();
        v.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn causality_violation_detected() {
        let s21 = Shape::new(2, 1);
        let mut b = Builder::new(vec![s21], vec![], 1);
        let a = b.fresh(Node::U2, "b", 1);
        // u1 tries to transmit u2's bit
        b.send(1, Node::U1, 0, 0, a);
        assert!(matches!(b.compile(), Err(TwicError::ProtocolViolation { .. })));
    }

    #[test]
    fn undecodable_message_detected() {
        let s21 = Shape::new(2, 1);
        let mut b = Builder::new(vec![s21], vec![], 1);
        let a = b.fresh(Node::U1, "a", 1);
        let bb = b.fresh(Node::U2, "B", 1);
        b.send(1, Node::U1, 0, 1, a.clone());
        b.send(1, Node::U2, 0, 0, bb.clone());
        b.decode(&a, 1);
        b.decode(&bb, 1);
        assert!(matches!(b.compile(), Err(TwicError::Construction(_))));
    }

    #[test]
    fn top_level_decodes() {
        let s21 = Shape::new(2, 1);
        let mut b = Builder::new(vec![s21], vec![], 1);
        let a = b.fresh(Node::U1, "A", 1);
        b.send(1, Node::U1, 0, 0, a.clone());
        b.decode(&a, 1);
        let c = b.compile().unwrap();
        assert_eq!(c.fwd_bits, 1);
        assert_eq!(c.decodes[0].node, Node::V1);
    }
}
