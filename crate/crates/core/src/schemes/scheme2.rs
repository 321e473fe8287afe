//! Retrospective decoding on a (2,1) gain factor paired with a (0,1) factor
//! in the opposite direction.
//!
//! Stage I (slots 1..L): both gain transmitters send fresh top and bottom
//! bits, the bottom one masked by a running sum p that carries earlier
//! side information. The opposite side returns what it heard at the bottom
//! (its own bits removed) plus one fresh bit; over (0,1) that signal lands at
//! the other gain transmitter, which strips its own bits and obtains the next
//! mask. Nothing but the top bits is decodable yet.
//!
//! Slot L+1 flushes the last masks, which lets each gain transmitter recover
//! the opposite side's last fresh bit. The remaining L slots then unwind the
//! chain backwards: the top level sends a_k + a~_k (decodable because a~_k is
//! the receiver's own bit), the bottom level sends a fresh bit masked so that
//! it cancels down to a bit the receiver owns, and the opposite side relays
//! the stage-I residue that reveals a~_(k-1).
//!
//! Rates: 6L forward and 2L backward bits in 2L+1 slots.

use crate::channel::Direction;
use crate::decomposition::Shape;
use crate::engine::{Builder, CompiledScheme, Node};
use crate::error::Result;
use crate::gf2::BitVec;

/// Build the block with the (2,1) factor in direction `gain`.
pub fn build(gain: Direction, l: usize, ignition_payload: bool) -> Result<CompiledScheme> {
    let c = gain.other();
    let (g_shape, c_shape) = (vec![Shape::new(2, 1)], vec![Shape::new(0, 1)]);
    let (fwd, bwd) = match gain {
        Direction::Forward => (g_shape, c_shape),
        Direction::Backward => (c_shape, g_shape),
    };
    let h = 2 * l + 1;
    let mut b = Builder::new(fwd, bwd, h);
    let [x1, x2] = Node::transmitters(gain);
    let [y1, y2] = Node::transmitters(c);
    // the opposite-direction phase answering gain phase tau
    let cslot = |tau: usize| match gain {
        Direction::Forward => tau,
        Direction::Backward => tau + 1,
    };
    let zero = BitVec::new;
    let mut p1 = vec![zero(); l + 2];
    let mut p2 = vec![zero(); l + 2];
    let mut a = vec![zero(); l + 1];
    let mut bb = vec![zero(); l + 1];
    let mut ta = vec![zero(); l + 1];
    let mut tb = vec![zero(); l + 1];
    let mut c1 = vec![zero(); l + 1];
    let mut c2 = vec![zero(); l + 1];

    for i in 1..=l {
        let up1 = b.fresh(x1, format!("A{i}"), i);
        a[i] = b.fresh(x1, format!("a{i}"), i);
        let up2 = b.fresh(x2, format!("B{i}"), i);
        bb[i] = b.fresh(x2, format!("b{i}"), i);
        b.send(i, x1, 0, 0, up1);
        b.send(i, x1, 0, 1, a[i].xor(&p1[i]));
        b.send(i, x2, 0, 0, up2);
        b.send(i, x2, 0, 1, bb[i].xor(&p2[i]));
        b.commit(i, gain);
        c1[i] = b.rx(i, y1, 0)[1].clone();
        c2[i] = b.rx(i, y2, 0)[1].clone();

        let cs = cslot(i);
        ta[i] = b.fresh(y1, format!("~a{i}"), cs);
        tb[i] = b.fresh(y2, format!("~b{i}"), cs);
        let v1 = b.strip(y1, &c1[i]).xor(&ta[i]);
        let v2 = b.strip(y2, &c2[i]).xor(&tb[i]);
        b.send(cs, y1, 0, 0, v1);
        b.send(cs, y2, 0, 0, v2);
        b.commit(cs, c);
        // y1's signal reaches x2 and vice versa
        p2[i + 1] = b.strip(x2, &b.rx(cs, x2, 0)[0].clone());
        p1[i + 1] = b.strip(x1, &b.rx(cs, x1, 0)[0].clone());
    }

    // ignition: flush the final masks
    let s = l + 1;
    if ignition_payload {
        let t1 = b.fresh(x1, "A*", s);
        let t2 = b.fresh(x2, "B*", s);
        b.send(s, x1, 0, 0, t1);
        b.send(s, x2, 0, 0, t2);
    }
    b.send(s, x1, 0, 1, p1[l + 1].clone());
    b.send(s, x2, 0, 1, p2[l + 1].clone());
    b.commit(s, gain);
    let r1 = b.strip(y1, &b.rx(s, y1, 0)[1].clone());
    let r2 = b.strip(y2, &b.rx(s, y2, 0)[1].clone());
    let cs = cslot(s);
    b.send(cs, y1, 0, 0, r1);
    b.send(cs, y2, 0, 0, r2);
    b.commit(cs, c);

    // retrospective unwinding
    for i in 1..=l {
        let s = l + 1 + i;
        let k = l + 1 - i;
        let f1 = b.fresh(x1, format!("A'{i}"), s);
        let f2 = b.fresh(x2, format!("B'{i}"), s);
        b.send(s, x1, 0, 0, a[k].xor(&ta[k]));
        b.send(s, x1, 0, 1, f1.xor(&p1[k + 1]));
        b.send(s, x2, 0, 0, bb[k].xor(&tb[k]));
        b.send(s, x2, 0, 1, f2.xor(&p2[k + 1]));
        b.commit(s, gain);
        if k > 1 {
            let cs = cslot(s);
            let v1 = b.strip(y1, &c1[k].xor(&a[k]));
            let v2 = b.strip(y2, &c2[k].xor(&bb[k]));
            b.send(cs, y1, 0, 0, v1);
            b.send(cs, y2, 0, 0, v2);
            b.commit(cs, c);
        }
    }
    b.compile()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_and_orientation() {
        for gain in [Direction::Forward, Direction::Backward] {
            for l in [1, 2, 5] {
                let c = build(gain, l, false).unwrap();
                let (g, o) = if gain == Direction::Forward { (c.fwd_bits, c.bwd_bits) } else { (c.bwd_bits, c.fwd_bits) };
                assert_eq!((c.slots, g, o), (2 * l + 1, 6 * l, 2 * l));
            }
        }
    }

    #[test]
    fn payload_variant_adds_two_bits() {
        let c = build(Direction::Forward, 3, true).unwrap();
        assert_eq!((c.slots, c.fwd_bits, c.bwd_bits), (7, 20, 6));
    }
}
