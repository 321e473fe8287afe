//! Sparse-dimension GF(2) vectors and incremental row-echelon bases with
//! provenance tracking.

use std::collections::HashMap;
use std::fmt;

/// Growable GF(2) vector; bits beyond the stored words are zero.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitVec {
    words: Vec<u64>,
}

impl BitVec {
    pub fn new() -> Self {
        Self { words: Vec::new() }
    }

    pub fn unit(i: usize) -> Self {
        let mut v = Self::new();
        v.set(i, true);
        v
    }

    pub fn from_ones(ones: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::new();
        for i in ones {
            v.flip(i);
        }
        v
    }

    pub fn get(&self, i: usize) -> bool {
        self.words.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
    }

    pub fn set(&mut self, i: usize, b: bool) {
        if self.get(i) != b {
            self.flip(i);
        }
    }

    pub fn flip(&mut self, i: usize) {
        let w = i / 64;
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] ^= 1 << (i % 64);
        self.trim();
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn xor_assign(&mut self, o: &BitVec) {
        if o.words.len() > self.words.len() {
            self.words.resize(o.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&o.words) {
            *a ^= b;
        }
        self.trim();
    }

    pub fn xor(&self, o: &BitVec) -> BitVec {
        let mut r = self.clone();
        r.xor_assign(o);
        r
    }

    pub fn and(&self, o: &BitVec) -> BitVec {
        let mut r = BitVec { words: self.words.iter().zip(&o.words).map(|(a, b)| a & b).collect() };
        r.trim();
        r
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    /// Index of the highest set bit.
    pub fn highest(&self) -> Option<usize> {
        let w = self.words.last()?;
        Some((self.words.len() - 1) * 64 + 63 - w.leading_zeros() as usize)
    }

    /// Index of the highest set bit strictly below `bound`.
    pub fn highest_below(&self, bound: usize) -> Option<usize> {
        if bound == 0 {
            return None;
        }
        let b = bound - 1;
        let mut wi = (b / 64).min(self.words.len().checked_sub(1)?);
        let mut mask = if wi == b / 64 { u64::MAX >> (63 - b % 64) } else { u64::MAX };
        loop {
            let w = self.words[wi] & mask;
            if w != 0 {
                return Some(wi * 64 + 63 - w.leading_zeros() as usize);
            }
            if wi == 0 {
                return None;
            }
            wi -= 1;
            mask = u64::MAX;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Parity of the inner product with `o`.
    pub fn dot(&self, o: &BitVec) -> bool {
        self.words.iter().zip(&o.words).map(|(a, b)| (a & b).count_ones()).sum::<u32>() % 2 == 1
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + t)
            })
        })
    }

    /// Keep only the bits for which `keep` is true.
    pub fn filter(&self, keep: impl Fn(usize) -> bool) -> BitVec {
        BitVec::from_ones(self.ones().filter(|&i| keep(i)))
    }

    /// Shift every bit index up by `k`.
    pub fn shifted(&self, k: usize) -> BitVec {
        BitVec::from_ones(self.ones().map(|i| i + k))
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.ones()).finish()
    }
}

/// Row-echelon basis keyed by each row's highest bit; every row carries the
/// combination of inserted tags that produced it.
#[derive(Clone, Default, Debug)]
pub struct Basis {
    rows: Vec<(BitVec, BitVec)>,
    pivot: HashMap<usize, usize>,
}

impl Basis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduce `v`; returns the residue and the tag combination consumed.
    pub fn reduce(&self, v: &BitVec) -> (BitVec, BitVec) {
        let mut v = v.clone();
        let mut tag = BitVec::new();
        let mut cur = v.highest();
        // a row with pivot h only touches bits <= h, so one downward sweep suffices
        while let Some(h) = cur {
            if v.get(h) {
                if let Some(&r) = self.pivot.get(&h) {
                    v.xor_assign(&self.rows[r].0);
                    tag.xor_assign(&self.rows[r].1);
                }
            }
            cur = v.highest_below(h);
        }
        (v, tag)
    }

    /// Insert `v` with provenance `tag`; returns false if `v` was dependent.
    pub fn insert(&mut self, v: &BitVec, tag: &BitVec) -> bool {
        let (r, t) = self.reduce(v);
        let mut tag = tag.clone();
        tag.xor_assign(&t);
        if r.is_zero() {
            return false;
        }
        let h = r.highest().expect("nonzero");
        debug_assert!(!self.pivot.contains_key(&h));
        self.pivot.insert(h, self.rows.len());
        self.rows.push((r, tag));
        true
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        self.reduce(v).0.is_zero()
    }

    /// Tag combination expressing `v`, if `v` lies in the span.
    pub fn express(&self, v: &BitVec) -> Option<BitVec> {
        let (r, t) = self.reduce(v);
        r.is_zero().then_some(t)
    }

    /// Basis vectors currently stored.
    pub fn vectors(&self) -> impl Iterator<Item = &BitVec> {
        self.rows.iter().map(|(v, _)| v)
    }
}

/// Span-membership helper: a basis whose tags are the inserted vectors' indices.
pub fn span_of(vs: &[BitVec]) -> Basis {
    let mut b = Basis::new();
    for (i, v) in vs.iter().enumerate() {
        b.insert(v, &BitVec::unit(i));
    }
    b
}

/// Basis of the intersection of span(us) and span(ws).
pub fn intersect(us: &[BitVec], ws: &[BitVec]) -> Vec<BitVec> {
    // Zassenhaus: rows (u|u), (w|0); rows vanishing on the left lie in the
    // intersection. The left half is placed above every right-half bit.
    let off = us.iter().chain(ws).filter_map(|v| v.highest()).max().map_or(0, |h| h + 1);
    let mut b = Basis::new();
    for u in us {
        let row = u.shifted(off).xor(u);
        b.insert(&row, &BitVec::new());
    }
    for w in ws {
        b.insert(&w.shifted(off), &BitVec::new());
    }
    b.vectors().filter(|v| v.highest().is_none_or(|h| h < off)).filter(|v| !v.is_zero()).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn express_recovers_combination() {
        let vs = vec![BitVec::from_ones([0, 1]), BitVec::from_ones([1, 2]), BitVec::from_ones([5])];
        let b = span_of(&vs);
        let t = b.express(&BitVec::from_ones([0, 2, 5])).unwrap();
        assert_eq!(t, BitVec::from_ones([0, 1, 2]));
        assert!(b.express(&BitVec::from_ones([0])).is_none());
        assert_eq!(b.rank(), 3);
    }

    #[test]
    fn intersection_of_planes() {
        // span{e0,e1} and span{e1,e2} meet in span{e1}
        let i = intersect(&[BitVec::unit(0), BitVec::unit(1)], &[BitVec::unit(1), BitVec::unit(2)]);
        assert_eq!(i, vec![BitVec::unit(1)]);
        let i = intersect(&[BitVec::from_ones([0, 1])], &[BitVec::unit(0), BitVec::unit(1)]);
        assert_eq!(i, vec![BitVec::from_ones([0, 1])]);
    }
}
