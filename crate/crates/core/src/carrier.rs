//! Synthesis of linear codes for one factor acting as a carrier in one phase.
//!
//! A carrier transmits fresh messages from its two transmitters T1, T2 to
//! R1, R2 while simultaneously relaying side information ("riders") that the
//! opposite direction's gain units need. The local model only contains the
//! symbols involved in this phase; any larger real knowledge only helps, so a
//! code that works locally works when instantiated. Codes are found by a
//! seeded hill-climbing search and cached per configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use crate::decomposition::Shape;

/// Side-information pattern relayed through a carrier.
///
/// Symbols are named from the gain units' perspective: in an `S` group R1 owns
/// (A, a) and R2 owns (B, b), T1 has seen (A, a+B) and T2 has seen (B, b+A).
/// `r1` asks for some s known to both R1 and R2 with s + a known to T1; `r2`
/// symmetrically for b and T2. In `Za`, R1 owns a, T2 has seen a, and R2
/// must learn some s with s + a known to T1; `Zb` mirrors it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    S { r1: bool, r2: bool },
    Za,
    Zb,
}

impl Group {
    pub fn n_sym(self) -> usize {
        match self {
            Group::S { .. } => 4,
            Group::Za | Group::Zb => 1,
        }
    }

    pub fn riders(self) -> usize {
        match self {
            Group::S { r1, r2 } => usize::from(r1) + usize::from(r2),
            Group::Za | Group::Zb => 1,
        }
    }
}

/// One carrier configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CarrierKey {
    pub shape: Shape,
    pub d1: usize,
    pub d2: usize,
    pub groups: Vec<Group>,
}

/// Solved configuration. Local symbols are laid out as T1's messages, T2's
/// messages, then each group's symbols ([A, a, B, b] for `S`, one for `Z`).
#[derive(Debug, Clone)]
pub struct Template {
    pub key: CarrierKey,
    pub n_sym: usize,
    pub group_offset: Vec<usize>,
    /// Transmitted levels of T1 and T2 as local symbol combinations.
    pub t_tx: [Vec<u64>; 2],
    /// Per group: solutions for (first, second) requirement, as local symbol
    /// combinations known to the relevant receivers.
    pub solutions: Vec<[Option<u64>; 2]>,
}

#[derive(Clone)]
struct B64 {
    rows: [u64; 64],
    tags: [u64; 64],
    has: u64,
}

impl B64 {
    fn new() -> Self {
        Self { rows: [0; 64], tags: [0; 64], has: 0 }
    }

    fn reduce(&self, mut v: u64, mut t: u64) -> (u64, u64) {
        loop {
            let m = v & self.has;
            if m == 0 {
                return (v, t);
            }
            let p = 63 - m.leading_zeros() as usize;
            v ^= self.rows[p];
            t ^= self.tags[p];
        }
    }

    fn insert(&mut self, v: u64, t: u64) -> bool {
        let (v, t) = self.reduce(v, t);
        if v == 0 {
            return false;
        }
        let p = 63 - v.leading_zeros() as usize;
        self.rows[p] = v;
        self.tags[p] = t;
        self.has |= 1 << p;
        true
    }

    fn contains(&self, v: u64) -> bool {
        self.reduce(v, 0).0 == 0
    }

    fn vectors(&self) -> impl Iterator<Item = u64> + '_ {
        (0..64).filter(|&p| self.has >> p & 1 == 1).map(|p| self.rows[p])
    }
}

fn intersect(a: &B64, b: &B64) -> Vec<u64> {
    // Zassenhaus over 128-bit rows (u|u), (w|0)
    let mut rows: Vec<u128> = Vec::new();
    let mut has: u128 = 0;
    let mut piv: [u128; 128] = [0; 128];
    let mut ins = |mut v: u128| {
        loop {
            let m = v & has;
            if m == 0 {
                break;
            }
            let p = 127 - m.leading_zeros() as usize;
            v ^= piv[p];
        }
        if v != 0 {
            let p = 127 - v.leading_zeros() as usize;
            piv[p] = v;
            has |= 1 << p;
            rows.push(v);
        }
    };
    for u in a.vectors() {
        ins(((u as u128) << 64) | u as u128);
    }
    for w in b.vectors() {
        ins((w as u128) << 64);
    }
    (0..64).filter(|&p| has >> p & 1 == 1).map(|p| piv[p] as u64).collect()
}

fn transfer(direct: &[u64], cross: &[u64], s: Shape) -> Vec<u64> {
    let q = s.q();
    (0..q)
        .map(|i| {
            let mut v = 0;
            if i >= q - s.n {
                v ^= direct[i - (q - s.n)];
            }
            if i >= q - s.m {
                v ^= cross[i - (q - s.m)];
            }
            v
        })
        .collect()
}

struct Model {
    key: CarrierKey,
    n_sym: usize,
    group_offset: Vec<usize>,
    gens: [Vec<u64>; 2],
    own_r: [Vec<u64>; 2],
    kt: [B64; 2],
    msgs: [Vec<u64>; 2],
}

impl Model {
    fn new(key: &CarrierKey) -> Self {
        let mut n = key.d1 + key.d2;
        let mut group_offset = Vec::new();
        let mut gens: [Vec<u64>; 2] = [Vec::new(), Vec::new()];
        let mut own_r: [Vec<u64>; 2] = [Vec::new(), Vec::new()];
        let msgs = [(0..key.d1).map(|i| 1u64 << i).collect::<Vec<_>>(), (key.d1..key.d1 + key.d2).map(|i| 1u64 << i).collect()];
        gens[0].extend(&msgs[0]);
        gens[1].extend(&msgs[1]);
        for g in &key.groups {
            group_offset.push(n);
            let e = |k: usize| 1u64 << (n + k);
            match g {
                Group::S { .. } => {
                    let (a_up, a_lo, b_up, b_lo) = (e(0), e(1), e(2), e(3));
                    gens[0].extend([a_up, a_lo ^ b_up]);
                    gens[1].extend([b_up, b_lo ^ a_up]);
                    own_r[0].extend([a_up, a_lo]);
                    own_r[1].extend([b_up, b_lo]);
                }
                Group::Za => {
                    gens[1].push(e(0));
                    own_r[0].push(e(0));
                }
                Group::Zb => {
                    gens[0].push(e(0));
                    own_r[1].push(e(0));
                }
            }
            n += g.n_sym();
        }
        assert!(n <= 64, "carrier model too large");
        let mut kt = [B64::new(), B64::new()];
        for t in 0..2 {
            for &g in &gens[t] {
                kt[t].insert(g, 0);
            }
        }
        Self { key: key.clone(), n_sym: n, group_offset, gens, own_r, kt, msgs }
    }

    fn receptions(&self, tx: &[Vec<u64>; 2]) -> [B64; 2] {
        let s = self.key.shape;
        let mut out = [B64::new(), B64::new()];
        for r in 0..2 {
            let y = transfer(&tx[r], &tx[1 - r], s);
            for v in y {
                out[r].insert(v, 0);
            }
            for &v in &self.own_r[r] {
                out[r].insert(v, 0);
            }
        }
        out
    }

    /// (score, solutions) of a candidate.
    fn evaluate(&self, tx: &[Vec<u64>; 2], want_solutions: bool) -> (usize, Vec<[Option<u64>; 2]>) {
        let kr = self.receptions(tx);
        let mut score = 0;
        for r in 0..2 {
            score += self.msgs[r].iter().filter(|&&m| kr[r].contains(m)).count();
        }
        let needs_common = self.key.groups.iter().any(|g| matches!(g, Group::S { .. }));
        let common = if needs_common { intersect(&kr[0], &kr[1]) } else { Vec::new() };
        // solve target in (span(helpers) + K_T); return the helper part
        let solve = |helpers: &[u64], kt: &B64, target: u64| -> Option<u64> {
            let mut b = kt.clone();
            for (i, &h) in helpers.iter().enumerate() {
                let (v, t) = b.reduce(h, 1u64 << i);
                if v != 0 {
                    b.insert(v, t);
                }
            }
            let (v, t) = b.reduce(target, 0);
            if v != 0 {
                return None;
            }
            Some(helpers.iter().enumerate().filter(|(i, _)| t >> i & 1 == 1).fold(0, |acc, (_, &h)| acc ^ h))
        };
        let kr_vecs: [Vec<u64>; 2] = [kr[0].vectors().collect(), kr[1].vectors().collect()];
        let mut sols = Vec::new();
        for (gi, g) in self.key.groups.iter().enumerate() {
            let o = self.group_offset[gi];
            let e = |k: usize| 1u64 << (o + k);
            let mut sol = [None, None];
            match *g {
                Group::S { r1, r2 } => {
                    if r1 {
                        sol[0] = solve(&common, &self.kt[0], e(1));
                    }
                    if r2 {
                        sol[1] = solve(&common, &self.kt[1], e(3));
                    }
                    score += usize::from(r1 && sol[0].is_some()) + usize::from(r2 && sol[1].is_some());
                }
                Group::Za => {
                    sol[0] = solve(&kr_vecs[1], &self.kt[0], e(0));
                    score += usize::from(sol[0].is_some());
                }
                Group::Zb => {
                    sol[0] = solve(&kr_vecs[0], &self.kt[1], e(0));
                    score += usize::from(sol[0].is_some());
                }
            }
            if want_solutions {
                sols.push(sol);
            }
        }
        (score, sols)
    }

    fn target(&self) -> usize {
        self.key.d1 + self.key.d2 + self.key.groups.iter().map(|g| g.riders()).sum::<usize>()
    }

    fn random_level(&self, t: usize, rng: &mut ChaCha8Rng) -> u64 {
        let g = &self.gens[t];
        if g.is_empty() {
            return 0;
        }
        let x: f64 = rng.gen();
        let k = if x < 0.15 {
            0
        } else if x < 0.60 {
            1
        } else if x < 0.90 {
            2
        } else {
            3
        };
        (0..k).fold(0, |acc, _| acc ^ g[rng.gen_range(0..g.len())])
    }
}

/// Default search budget (restarts, steps per restart).
pub const BUDGET: (usize, usize) = (20, 50_000);

/// Budget for configurations known to need a deeper search.
pub const DEEP_BUDGET: (usize, usize) = (60, 200_000);

/// Full-load configurations (three single riders of both roles on a (2,3) carrier with
/// three messages) whose codes exist but lie beyond the default budget.
fn needs_deep_search(key: &CarrierKey) -> bool {
    let singles = key.groups.iter().all(|g| matches!(g, Group::S { .. }) && g.riders() == 1);
    let mixed = key.groups.contains(&Group::S { r1: true, r2: false }) && key.groups.contains(&Group::S { r1: false, r2: true });
    let shape = (key.shape.n, key.shape.m);
    (shape == (2, 3) || shape == (3, 2)) && key.groups.len() == 3 && singles && mixed && key.d1 + key.d2 == 3
}

fn search(key: &CarrierKey, budget: (usize, usize)) -> Option<Template> {
    let model = Model::new(key);
    let q = key.shape.q();
    let target = model.target();
    let mut h = DefaultHasher::new();
    key.hash(&mut h);
    let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
    if q == 0 {
        return (target == 0).then(|| Template {
            key: key.clone(),
            n_sym: model.n_sym,
            group_offset: model.group_offset.clone(),
            t_tx: [Vec::new(), Vec::new()],
            solutions: vec![[None, None]; key.groups.len()],
        });
    }
    for _ in 0..budget.0 {
        let mut tx: [Vec<u64>; 2] =
            [(0..q).map(|_| model.random_level(0, &mut rng)).collect(), (0..q).map(|_| model.random_level(1, &mut rng)).collect()];
        let mut score = model.evaluate(&tx, false).0;
        for _ in 0..budget.1 {
            if score == target {
                break;
            }
            // single-level moves, or a coordinated change of one level per
            // transmitter (neutralisation needs both sides to move together)
            let old = tx.clone();
            let moves = if rng.gen_bool(0.3) { 2 } else { 1 };
            for k in 0..moves {
                let t = if moves == 2 { k } else { rng.gen_range(0..2) };
                let l = rng.gen_range(0..q);
                tx[t][l] = model.random_level(t, &mut rng);
            }
            let s = model.evaluate(&tx, false).0;
            if s >= score {
                score = s;
            } else {
                tx = old;
            }
        }
        if score == target {
            let (_, solutions) = model.evaluate(&tx, true);
            return Some(Template { key: key.clone(), n_sym: model.n_sym, group_offset: model.group_offset, t_tx: tx, solutions });
        }
    }
    None
}

type Cache = Mutex<HashMap<CarrierKey, Option<Arc<Template>>>>;

fn cache() -> &'static Cache {
    static C: OnceLock<Cache> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Find (or recall) a code for the configuration; groups are canonicalised
/// by sorting, and the template's group order follows the sorted key.
pub fn synthesize(key: &CarrierKey) -> Option<Arc<Template>> {
    synthesize_with_budget(key, if needs_deep_search(key) { DEEP_BUDGET } else { BUDGET })
}

/// Synthesizes a carrier for `d` messages, trying splits between the two
/// transmitters from the most balanced outward.
pub fn synthesize_split(shape: Shape, d: usize, groups: &[Group]) -> Option<Arc<Template>> {
    let mut splits: Vec<usize> = (0..=d).collect();
    splits.sort_by_key(|&d1| ((2 * d1) as isize - d as isize).abs());
    splits.into_iter().find_map(|d1| {
        synthesize(&CarrierKey { shape, d1, d2: d - d1, groups: groups.to_vec() })
    })
}

/// As [`synthesize`] with an explicit (restarts, steps) budget.
pub fn synthesize_with_budget(key: &CarrierKey, budget: (usize, usize)) -> Option<Arc<Template>> {
    let mut key = key.clone();
    key.groups.sort();
    if let Some(t) = cache().lock().expect("cache lock").get(&key) {
        return t.clone();
    }
    let t = search(&key, budget).map(Arc::new);
    cache().lock().expect("cache lock").insert(key, t.clone());
    t
}

/// Rider capacity of a carrier of this shape for side information of the
/// given kind (S-type travels on cross links, Z-type on direct links).
pub fn rider_capacity(shape: Shape, s_type: bool) -> usize {
    let cno = crate::capacity::c_no(shape.n, shape.m);
    if s_type {
        (2 * shape.m).max(cno)
    } else {
        (2 * shape.n).max(cno)
    }
}
