//! Network decomposition of an (n,m) interference channel into orthogonal
//! elementary subchannels, with the explicit level assignment.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::channel::shifted_level;
use crate::error::{Result, TwicError};

/// Shape (direct, cross) of a channel or elementary factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Shape {
    pub n: usize,
    pub m: usize,
}

impl Shape {
    pub const fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    pub fn q(&self) -> usize {
        self.n.max(self.m)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.m)
    }
}

/// One factor instance: its shape and the transmitter / receiver levels it
/// occupies in the full channel, both listed top-first in factor order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FactorInstance {
    pub shape: Shape,
    pub tx_levels: Vec<usize>,
    pub rx_levels: Vec<usize>,
}

impl FactorInstance {
    /// The undecomposed channel used as a single factor.
    pub fn whole(n: usize, m: usize) -> Self {
        let q = n.max(m);
        Self { shape: Shape::new(n, m), tx_levels: (0..q).collect(), rx_levels: (0..q).collect() }
    }
}

/// Factor multiset (ordered by shape) plus the instance-level map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    pub factors: Vec<(Shape, usize)>,
    pub level_map: Vec<FactorInstance>,
}

/// Elementary-factor multiset for the interference ratio range of (n,m).
pub fn factor_multiset(n: usize, m: usize) -> Result<Vec<(Shape, usize)>> {
    let mut f: Vec<(Shape, usize)> = Vec::new();
    let mut push = |s: Shape, k: usize| {
        if k > 0 {
            f.push((s, k));
        }
    };
    if n == m {
        // equal-strength channels split into single-level pairs
        push(Shape::new(1, 1), n);
    } else if 2 * m <= n {
        push(Shape::new(1, 0), n - 2 * m);
        push(Shape::new(2, 1), m);
    } else if 3 * m <= 2 * n {
        push(Shape::new(2, 1), 2 * n - 3 * m);
        push(Shape::new(3, 2), 2 * m - n);
    } else if m >= 2 * n {
        push(Shape::new(0, 1), m - 2 * n);
        push(Shape::new(1, 2), n);
    } else {
        return Err(TwicError::NotDecomposable { n, m });
    }
    f.sort();
    Ok(f)
}

/// Decompose (n,m) into elementary factors with their level assignment.
pub fn decompose(n: usize, m: usize) -> Result<Decomposition> {
    let factors = factor_multiset(n, m)?;
    let level_map = level_assignment(n, m)?;
    Ok(Decomposition { factors, level_map })
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut c = x;
    while parent[c] != r {
        let nx = parent[c];
        parent[c] = r;
        c = nx;
    }
    r
}

/// Connected components of the level-interaction graph of (n,m), ordered by
/// their smallest transmit level.
pub fn level_components(n: usize, m: usize) -> Vec<FactorInstance> {
    let q = n.max(m);
    // nodes 0..q are transmit levels, q..2q receive levels
    let mut parent: Vec<usize> = (0..2 * q).collect();
    let mut edges = Vec::new();
    for l in 0..q {
        if let Some(r) = shifted_level(l, n, q) {
            edges.push((l, r, true));
        }
        if let Some(r) = shifted_level(l, m, q) {
            edges.push((l, r, false));
        }
    }
    for &(l, r, _) in &edges {
        let (a, b) = (find(&mut parent, l), find(&mut parent, q + r));
        parent[a] = b;
    }
    let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>, usize, usize)> = BTreeMap::new();
    for l in 0..q {
        let root = find(&mut parent, l);
        groups.entry(root).or_default().0.push(l);
    }
    for r in 0..q {
        let root = find(&mut parent, q + r);
        groups.entry(root).or_default().1.push(r);
    }
    for &(l, _, direct) in &edges {
        let root = find(&mut parent, l);
        let g = groups.get_mut(&root).expect("component exists");
        if direct {
            g.2 += 1;
        } else {
            g.3 += 1;
        }
    }
    let mut out: Vec<FactorInstance> = groups
        .into_values()
        .map(|(tx, rx, d, c)| FactorInstance { shape: Shape::new(d, c), tx_levels: tx, rx_levels: rx })
        .collect();
    out.sort_by_key(|f| f.tx_levels.first().copied().unwrap_or(usize::MAX));
    out
}

/// Level map of a decomposable (n,m): one instance per elementary factor.
pub fn level_assignment(n: usize, m: usize) -> Result<Vec<FactorInstance>> {
    factor_multiset(n, m)?;
    Ok(level_components(n, m))
}

/// Multiset of the shapes of a list of instances.
pub fn shape_multiset(instances: &[FactorInstance]) -> Vec<(Shape, usize)> {
    let mut counts: BTreeMap<Shape, usize> = BTreeMap::new();
    for f in instances {
        *counts.entry(f.shape).or_default() += 1;
    }
    counts.into_iter().collect()
}

/// Whether an instance's edges in the full channel are exactly the edges of
/// its shape under the order-preserving relabelling of its levels.
pub fn instance_is_faithful(inst: &FactorInstance, n: usize, m: usize) -> bool {
    let q = n.max(m);
    let s = inst.shape;
    let qs = s.q();
    if inst.tx_levels.len() != qs || inst.rx_levels.len() != qs {
        return false;
    }
    for (a, &l) in inst.tx_levels.iter().enumerate() {
        let full_d = shifted_level(l, n, q);
        let local_d = shifted_level(a, s.n, qs).map(|b| inst.rx_levels[b]);
        let full_c = shifted_level(l, m, q);
        let local_c = shifted_level(a, s.m, qs).map(|b| inst.rx_levels[b]);
        if full_d != local_d || full_c != local_c {
            return false;
        }
    }
    true
}
