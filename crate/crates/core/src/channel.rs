//! The linear deterministic channel: parameters, signal vectors and the
//! shift-and-XOR transfer of one interference-channel direction.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Result, TwicError};

/// Exact rational used for every rate and ratio.
pub type Q = Ratio<i64>;

/// Level ratio with the conventions x/0 = +inf (x > 0) and 0/0 = inactive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelRatio {
    Finite(Q),
    Infinite,
    Inactive,
}

impl LevelRatio {
    /// Ratio `num/den` under the infinity / inactive conventions.
    pub fn of(num: usize, den: usize) -> Self {
        match (num, den) {
            (0, 0) => LevelRatio::Inactive,
            (_, 0) => LevelRatio::Infinite,
            (a, b) => LevelRatio::Finite(Q::new(a as i64, b as i64)),
        }
    }
}

impl fmt::Display for LevelRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelRatio::Finite(q) => write!(f, "{q}"),
            LevelRatio::Infinite => write!(f, "inf"),
            LevelRatio::Inactive => write!(f, "inactive"),
        }
    }
}

/// Direction of one interference channel inside the two-way system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn other(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// The quadruple (n, m, n_b, m_b) of a two-way interference channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Forward direct-link levels.
    pub n: usize,
    /// Forward cross-link levels.
    pub m: usize,
    /// Backward direct-link levels.
    pub n_b: usize,
    /// Backward cross-link levels.
    pub m_b: usize,
}

impl ChannelParams {
    pub fn new(n: usize, m: usize, n_b: usize, m_b: usize) -> Self {
        Self { n, m, n_b, m_b }
    }

    /// Forward signal length max(n, m).
    pub fn q_f(&self) -> usize {
        self.n.max(self.m)
    }

    /// Backward signal length max(n_b, m_b).
    pub fn q_b(&self) -> usize {
        self.n_b.max(self.m_b)
    }

    /// Forward interference ratio m/n.
    pub fn alpha(&self) -> LevelRatio {
        LevelRatio::of(self.m, self.n)
    }

    /// Backward interference ratio m_b/n_b.
    pub fn alpha_b(&self) -> LevelRatio {
        LevelRatio::of(self.m_b, self.n_b)
    }

    /// Backward-to-forward strength ratio n_b/n.
    pub fn gamma(&self) -> LevelRatio {
        LevelRatio::of(self.n_b, self.n)
    }

    /// (direct, cross) levels of one direction.
    pub fn dir(&self, d: Direction) -> (usize, usize) {
        match d {
            Direction::Forward => (self.n, self.m),
            Direction::Backward => (self.n_b, self.m_b),
        }
    }

    /// The channel with forward and backward roles exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.n_b, self.m_b, self.n, self.m)
    }
}

impl fmt::Display for ChannelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.n, self.m, self.n_b, self.m_b)
    }
}

/// One node's levels in one slot; index 0 is the top level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SignalVector {
    pub bits: Vec<bool>,
}

impl SignalVector {
    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Parse a string of '0'/'1' characters, top level first.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(TwicError::InvalidArgument(format!("bad bit character {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Levelwise XOR of two equal-length vectors.
    pub fn xor(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(TwicError::InvalidSignal { expected: self.len(), got: other.len() });
        }
        Ok(Self::from_bits(self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect()))
    }
}

impl fmt::Display for SignalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Reception at one receiver: the direct signal shifted down by q-n XORed with
/// the cross signal shifted down by q-m.
pub fn transfer(x_direct: &SignalVector, x_cross: &SignalVector, n: usize, m: usize) -> Result<SignalVector> {
    let q = n.max(m);
    for x in [x_direct, x_cross] {
        if x.len() != q {
            return Err(TwicError::InvalidSignal { expected: q, got: x.len() });
        }
    }
    let mut y = vec![false; q];
    for (i, yi) in y.iter_mut().enumerate() {
        if i >= q - n {
            *yi ^= x_direct.bits[i - (q - n)];
        }
        if i >= q - m {
            *yi ^= x_cross.bits[i - (q - m)];
        }
    }
    Ok(SignalVector::from_bits(y))
}

/// The top `m` levels of `x`, i.e. the part seen by the interfered receiver.
pub fn visible_part(x: &SignalVector, m: usize) -> Result<SignalVector> {
    if m > x.len() {
        return Err(TwicError::InvalidArgument(format!(
            "visible part of {m} levels requested from a {}-level signal",
            x.len()
        )));
    }
    Ok(SignalVector::from_bits(x.bits[..m].to_vec()))
}

/// Receiver level reached by transmit level `l` over a link of `k` levels in
/// a channel of signal length `q`, if any.
pub fn shifted_level(l: usize, k: usize, q: usize) -> Option<usize> {
    (l < k).then(|| l + (q - k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(s: &str) -> SignalVector {
        SignalVector::parse(s).unwrap()
    }

    #[test]
    fn two_one_top_clean_bottom_interfered() {
        // (A,a) direct, (B,b) cross: receiver sees (A, a^B)
        for bits in 0..16u8 {
            let (a_top, a_bot, b_top, b_bot) = (bits & 1 != 0, bits & 2 != 0, bits & 4 != 0, bits & 8 != 0);
            let y = transfer(
                &SignalVector::from_bits(vec![a_top, a_bot]),
                &SignalVector::from_bits(vec![b_top, b_bot]),
                2,
                1,
            )
            .unwrap();
            assert_eq!(y.bits, vec![a_top, a_bot ^ b_top]);
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(matches!(transfer(&sv("1"), &sv("10"), 2, 1), Err(TwicError::InvalidSignal { .. })));
    }

    #[test]
    fn empty_channel_transfers_empty() {
        let e = SignalVector::zeros(0);
        assert!(transfer(&e, &e, 0, 0).unwrap().is_empty());
    }

    #[test]
    fn visible_part_cases() {
        assert_eq!(visible_part(&sv("10"), 1).unwrap(), sv("1"));
        assert_eq!(visible_part(&sv("10"), 2).unwrap(), sv("10"));
        assert!(visible_part(&sv("10"), 0).unwrap().is_empty());
        assert!(visible_part(&sv("10"), 3).is_err());
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(LevelRatio::of(1, 0), LevelRatio::Infinite);
        assert_eq!(LevelRatio::of(0, 0), LevelRatio::Inactive);
        assert_eq!(LevelRatio::of(2, 3), LevelRatio::Finite(Q::new(2, 3)));
    }
}
