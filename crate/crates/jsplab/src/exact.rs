//! Exact optimum and complete optimal-set enumeration at desk scale
//! (intended for instances up to roughly 6x6).
//!
//! Both entry points run depth-first branch and bound over the undecided
//! machine pairs (most constrained first: descending duration sum). The
//! lower bound is the longest path through the partially oriented digraph
//! (job arcs plus decided machine arcs), and each node applies immediate
//! arc selection: whenever one direction of an undecided pair would already
//! push the longest path past the limit, the opposite direction is forced
//! before branching. Enumeration prunes only when the bound *strictly*
//! exceeds the optimum, so every complete orientation with makespan equal to
//! the optimum is visited exactly once.

use crate::descent::random_local_optimum;
use crate::instance::{Instance, OpId, Time};
use crate::rng::rng_from_seed;
use crate::schedule::{bit_index, total_bits, PrecBits};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("node budget of {budget} exhausted")]
    BudgetExceeded { budget: u64 },
    #[error("optimal set exceeds the member cap of {cap}")]
    MemberCapExceeded { cap: usize },
    #[error("sidecar: {0}")]
    Sidecar(String),
}

/// Enumeration limits. Exceeding either aborts with an error rather than
/// returning a partial set.
#[derive(Debug, Clone, Copy)]
pub struct ExactBudget {
    pub nodes: u64,
    pub members: usize,
}

impl Default for ExactBudget {
    fn default() -> Self {
        ExactBudget { nodes: 200_000_000, members: 4_000_000 }
    }
}

/// The complete set of optimal orientations of one instance, stored as
/// packed precedence bitvectors (`words_per` words each, flat).
#[derive(Debug, Clone)]
pub struct OptimalSet {
    n: usize,
    m: usize,
    bits_len: usize,
    words_per: usize,
    c_star: Time,
    members: Vec<u64>,
    instance_hash: u64,
}

impl OptimalSet {
    pub fn c_star(&self) -> Time {
        self.c_star
    }
    pub fn len(&self) -> usize {
        if self.words_per == 0 {
            0
        } else {
            self.members.len() / self.words_per
        }
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
    pub fn instance_hash(&self) -> u64 {
        self.instance_hash
    }
    /// The `i`-th member as a bitvector.
    pub fn member(&self, i: usize) -> PrecBits {
        let mut bits = PrecBits::zeroed(self.bits_len);
        let words = &self.members[i * self.words_per..(i + 1) * self.words_per];
        for (b, &w) in words.iter().enumerate() {
            for off in 0..64 {
                let idx = b * 64 + off;
                if idx < self.bits_len && w >> off & 1 == 1 {
                    bits.set(idx, true);
                }
            }
        }
        bits
    }

    /// Distance to the nearest optimal solution.
    ///
    /// # Panics
    /// When the set is empty or `bits` has a different shape.
    pub fn d_opt(&self, bits: &PrecBits) -> u32 {
        self.d_opt_bounded(bits, 0)
    }

    /// Like [`d_opt`](Self::d_opt), but stops scanning once a member at
    /// distance ≤ `floor` is found (callers that track a valid lower bound
    /// on the result pass it here).
    pub fn d_opt_bounded(&self, bits: &PrecBits, floor: u32) -> u32 {
        assert!(!self.is_empty(), "distance to an empty optimal set");
        assert_eq!(bits.len(), self.bits_len, "bitvector of mismatched shape");
        let words = bits.words();
        let mut best = u32::MAX;
        for member in self.members.chunks_exact(self.words_per) {
            let d: u32 =
                member.iter().zip(words).map(|(a, b)| (a ^ b).count_ones()).sum();
            if d < best {
                best = d;
                if best <= floor {
                    break;
                }
            }
        }
        best
    }

    /// Serializes to the JSON sidecar format.
    pub fn save(&self, path: &Path) -> Result<(), ExactError> {
        let file = SidecarFile {
            format: SIDECAR_FORMAT.to_string(),
            version: 1,
            instance_hash: format!("{:016x}", self.instance_hash),
            n: self.n,
            m: self.m,
            c_star: self.c_star,
            members: self
                .members
                .chunks_exact(self.words_per.max(1))
                .map(|ws| ws.iter().map(|w| format!("{w:016x}")).collect::<String>())
                .collect(),
        };
        let mut text = serde_json::to_string(&file).expect("sidecar serialization");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| ExactError::Sidecar(e.to_string()))
    }

    /// Loads a sidecar and validates it against the instance (content-hash
    /// match, non-empty member list, well-formed member words).
    pub fn load(path: &Path, inst: &Instance) -> Result<OptimalSet, ExactError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ExactError::Sidecar(e.to_string()))?;
        let file: SidecarFile =
            serde_json::from_str(&text).map_err(|e| ExactError::Sidecar(e.to_string()))?;
        if file.format != SIDECAR_FORMAT {
            return Err(ExactError::Sidecar(format!("unknown format {:?}", file.format)));
        }
        let hash = u64::from_str_radix(&file.instance_hash, 16)
            .map_err(|e| ExactError::Sidecar(format!("bad instance hash: {e}")))?;
        if hash != inst.content_hash() || file.n != inst.n() || file.m != inst.m() {
            return Err(ExactError::Sidecar("sidecar does not match the instance".into()));
        }
        if file.members.is_empty() {
            return Err(ExactError::Sidecar("empty member list".into()));
        }
        let bits_len = total_bits(inst);
        let words_per = bits_len.div_ceil(64);
        let mut members = Vec::with_capacity(file.members.len() * words_per);
        let tail_mask = if bits_len % 64 == 0 { u64::MAX } else { (1u64 << (bits_len % 64)) - 1 };
        for hex in &file.members {
            if hex.len() != words_per * 16 {
                return Err(ExactError::Sidecar(format!("member of wrong width: {hex:?}")));
            }
            for w in 0..words_per {
                let word = u64::from_str_radix(&hex[w * 16..(w + 1) * 16], 16)
                    .map_err(|e| ExactError::Sidecar(format!("bad member word: {e}")))?;
                if w == words_per - 1 && word & !tail_mask != 0 {
                    return Err(ExactError::Sidecar("stray bits beyond the pair count".into()));
                }
                members.push(word);
            }
        }
        Ok(OptimalSet {
            n: inst.n(),
            m: inst.m(),
            bits_len,
            words_per,
            c_star: file.c_star,
            members,
            instance_hash: hash,
        })
    }
}

const SIDECAR_FORMAT: &str = "optimal-set";

#[derive(Serialize, Deserialize)]
struct SidecarFile {
    format: String,
    version: u32,
    instance_hash: String,
    n: usize,
    m: usize,
    c_star: Time,
    members: Vec<String>,
}

/// One undecided disjunctive pair: ops `u` (lower job) and `v` on a machine.
#[derive(Debug, Clone, Copy)]
struct Pair {
    u: OpId,
    v: OpId,
    bit: usize,
}

struct Searcher<'a> {
    inst: &'a Instance,
    pairs: Vec<Pair>,
    // Scratch for the longest-path evaluation of the partial digraph.
    msucc: Vec<Vec<u32>>,
    mpred_count: Vec<u8>,
    indeg: Vec<u8>,
    topo: Vec<u32>,
    head: Vec<Time>,
    tail: Vec<Time>,
    nodes: u64,
    node_budget: u64,
}

/// Per-pair decision: undecided, `u` first, or `v` first.
const UNDECIDED: u8 = 0;
const U_FIRST: u8 = 1;
const V_FIRST: u8 = 2;

enum Outcome {
    /// Longest path of the partial digraph (∞ encoded as None = cyclic).
    Bound(Time),
    Cyclic,
    Overrun,
}

impl<'a> Searcher<'a> {
    fn new(inst: &'a Instance, node_budget: u64) -> Self {
        let mut pairs = Vec::new();
        for machine in 1..=inst.m() {
            for a in 1..=inst.n() {
                for b in a + 1..=inst.n() {
                    pairs.push(Pair {
                        u: inst.op_on(a, machine),
                        v: inst.op_on(b, machine),
                        bit: bit_index(inst, machine, a, b),
                    });
                }
            }
        }
        // Most constrained first: largest combined duration.
        pairs.sort_by_key(|p| std::cmp::Reverse(inst.dur_of(p.u) + inst.dur_of(p.v)));
        let ops = inst.ops();
        Searcher {
            inst,
            pairs,
            msucc: vec![Vec::new(); ops],
            mpred_count: vec![0; ops],
            indeg: vec![0; ops],
            topo: Vec::with_capacity(ops),
            head: vec![0; ops],
            tail: vec![0; ops],
            nodes: 0,
            node_budget,
        }
    }

    /// Longest path through job arcs plus decided machine arcs; fills
    /// `head`/`tail`. `None` when the decided arcs close a cycle.
    fn bound(&mut self, decided: &[u8]) -> Option<Time> {
        let inst = self.inst;
        let ops = inst.ops();
        let m = inst.m();
        for op in 0..ops {
            self.msucc[op].clear();
            self.mpred_count[op] = 0;
            self.head[op] = 0;
            self.tail[op] = 0;
        }
        for (pair, &d) in self.pairs.iter().zip(decided) {
            let (from, to) = match d {
                U_FIRST => (pair.u, pair.v),
                V_FIRST => (pair.v, pair.u),
                _ => continue,
            };
            self.msucc[from].push(to as u32);
            self.mpred_count[to] += 1;
        }
        self.topo.clear();
        for op in 0..ops {
            self.indeg[op] = (op % m != 0) as u8 + self.mpred_count[op];
            if self.indeg[op] == 0 {
                self.topo.push(op as u32);
            }
        }
        let mut cmax = 0;
        let mut qh = 0;
        while qh < self.topo.len() {
            let op = self.topo[qh] as usize;
            qh += 1;
            let end = self.head[op] + inst.dur_of(op);
            cmax = cmax.max(end);
            if (op + 1) % m != 0 {
                let succ = op + 1;
                if self.head[succ] < end {
                    self.head[succ] = end;
                }
                self.indeg[succ] -= 1;
                if self.indeg[succ] == 0 {
                    self.topo.push(succ as u32);
                }
            }
            for i in 0..self.msucc[op].len() {
                let succ = self.msucc[op][i] as usize;
                if self.head[succ] < end {
                    self.head[succ] = end;
                }
                self.indeg[succ] -= 1;
                if self.indeg[succ] == 0 {
                    self.topo.push(succ as u32);
                }
            }
        }
        if self.topo.len() != ops {
            return None;
        }
        for &op in self.topo.iter().rev() {
            let op = op as usize;
            let mut t = 0;
            if (op + 1) % m != 0 {
                t = inst.dur_of(op + 1) + self.tail[op + 1];
            }
            for &succ in &self.msucc[op] {
                let succ = succ as usize;
                t = t.max(inst.dur_of(succ) + self.tail[succ]);
            }
            self.tail[op] = t;
        }
        Some(cmax)
    }

    /// Bounds the node, then repeatedly forces arcs whose reverse direction
    /// would exceed `limit`, re-bounding after each sweep.
    fn propagate(&mut self, decided: &mut [u8], limit: Time) -> Outcome {
        self.nodes += 1;
        if self.nodes > self.node_budget {
            return Outcome::Overrun;
        }
        loop {
            let bound = match self.bound(decided) {
                Some(b) => b,
                None => return Outcome::Cyclic,
            };
            if bound > limit {
                return Outcome::Bound(bound);
            }
            let mut forced_any = false;
            for i in 0..self.pairs.len() {
                if decided[i] != UNDECIDED {
                    continue;
                }
                let Pair { u, v, .. } = self.pairs[i];
                let (du, dv) = (self.inst.dur_of(u), self.inst.dur_of(v));
                let uv_ok = self.head[u] + du + dv + self.tail[v] <= limit;
                let vu_ok = self.head[v] + dv + du + self.tail[u] <= limit;
                match (uv_ok, vu_ok) {
                    (false, false) => return Outcome::Bound(Time::MAX),
                    (true, false) => {
                        decided[i] = U_FIRST;
                        forced_any = true;
                    }
                    (false, true) => {
                        decided[i] = V_FIRST;
                        forced_any = true;
                    }
                    (true, true) => {}
                }
            }
            if !forced_any {
                return Outcome::Bound(bound);
            }
        }
    }
}

/// Exact optimal makespan via branch and bound.
///
/// Deterministic: the initial upper bound comes from a handful of random
/// local optima seeded by the instance's content hash.
pub fn optimal_makespan(inst: &Instance, node_budget: u64) -> Result<Time, ExactError> {
    let mut searcher = Searcher::new(inst, node_budget);
    let mut rng = rng_from_seed(inst.content_hash());
    let mut incumbent = Time::MAX;
    let mut ev = crate::schedule::Evaluator::new(inst);
    for _ in 0..8 {
        let s = random_local_optimum(inst, &mut rng);
        let c = ev.makespan(inst, &s).expect("feasible local optimum");
        incumbent = incumbent.min(c);
    }
    let mut decided = vec![UNDECIDED; searcher.pairs.len()];
    search_min(&mut searcher, &mut decided, &mut incumbent)?;
    Ok(incumbent)
}

fn search_min(
    searcher: &mut Searcher,
    decided: &mut [u8],
    incumbent: &mut Time,
) -> Result<(), ExactError> {
    // A strict improvement must fit within incumbent - 1.
    let limit = *incumbent - 1;
    let bound = match searcher.propagate(decided, limit) {
        Outcome::Overrun => {
            return Err(ExactError::BudgetExceeded { budget: searcher.node_budget })
        }
        Outcome::Cyclic => return Ok(()),
        Outcome::Bound(b) => b,
    };
    if bound > limit {
        return Ok(());
    }
    let branch = match decided.iter().position(|&d| d == UNDECIDED) {
        None => {
            // Complete: the bound is the exact makespan, strictly better.
            *incumbent = bound;
            return Ok(());
        }
        Some(i) => i,
    };
    for dir in [U_FIRST, V_FIRST] {
        let mut child = decided.to_vec();
        child[branch] = dir;
        search_min(searcher, &mut child, incumbent)?;
    }
    Ok(())
}

/// Enumerates every optimal orientation. `c_star` must be the exact optimum
/// (see [`optimal_makespan`]); members come out deduplicated by construction
/// and the set is complete.
pub fn enumerate_optima(
    inst: &Instance,
    c_star: Time,
    budget: ExactBudget,
) -> Result<OptimalSet, ExactError> {
    let mut searcher = Searcher::new(inst, budget.nodes);
    let mut decided = vec![UNDECIDED; searcher.pairs.len()];
    let bits_len = total_bits(inst);
    let words_per = bits_len.div_ceil(64).max(1);
    let mut set = OptimalSet {
        n: inst.n(),
        m: inst.m(),
        bits_len,
        words_per,
        c_star,
        members: Vec::new(),
        instance_hash: inst.content_hash(),
    };
    search_all(&mut searcher, &mut decided, c_star, budget.members, &mut set)?;
    debug_assert!(!set.is_empty(), "an exact optimum always has at least one orientation");
    Ok(set)
}

fn search_all(
    searcher: &mut Searcher,
    decided: &mut [u8],
    c_star: Time,
    member_cap: usize,
    set: &mut OptimalSet,
) -> Result<(), ExactError> {
    let bound = match searcher.propagate(decided, c_star) {
        Outcome::Overrun => {
            return Err(ExactError::BudgetExceeded { budget: searcher.node_budget })
        }
        Outcome::Cyclic => return Ok(()),
        Outcome::Bound(b) => b,
    };
    if bound > c_star {
        return Ok(());
    }
    let branch = match decided.iter().position(|&d| d == UNDECIDED) {
        None => {
            if bound == c_star {
                if set.len() >= member_cap {
                    return Err(ExactError::MemberCapExceeded { cap: member_cap });
                }
                let mut words = vec![0u64; set.words_per];
                for (pair, &d) in searcher.pairs.iter().zip(decided.iter()) {
                    if d == U_FIRST {
                        words[pair.bit / 64] |= 1 << (pair.bit % 64);
                    }
                }
                set.members.extend_from_slice(&words);
            }
            return Ok(());
        }
        Some(i) => i,
    };
    for dir in [U_FIRST, V_FIRST] {
        let mut child = decided.to_vec();
        child[branch] = dir;
        search_all(searcher, &mut child, c_star, member_cap, set)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, t1_orientation, T1Label};

    #[test]
    fn t1_unique_optimum() {
        let inst = fixtures::tiny2x2();
        let c = optimal_makespan(&inst, 10_000).unwrap();
        assert_eq!(c, 7);
        let set = enumerate_optima(&inst, 7, ExactBudget::default()).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.c_star(), 7);
        let a = t1_orientation(&inst, T1Label::A);
        assert_eq!(set.member(0), *a.bits());
    }

    #[test]
    fn t1_d_opt_values() {
        let inst = fixtures::tiny2x2();
        let set = enumerate_optima(&inst, 7, ExactBudget::default()).unwrap();
        let b = t1_orientation(&inst, T1Label::B);
        let c = t1_orientation(&inst, T1Label::C);
        let a = t1_orientation(&inst, T1Label::A);
        // Every non-optimum differs from the unique optimum on exactly one
        // machine: B flips the second-machine pair, C the first-machine pair.
        assert_eq!(set.d_opt(a.bits()), 0);
        assert_eq!(set.d_opt(b.bits()), 1);
        assert_eq!(set.d_opt(c.bits()), 1);
        assert_eq!(set.d_opt_bounded(c.bits(), 1), 1);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let inst = crate::instance::Instance::generate(6, 6, 1, 1, 99, 500).unwrap();
        match optimal_makespan(&inst, 3) {
            Err(ExactError::BudgetExceeded { budget: 3 }) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn sidecar_round_trip_and_validation() {
        let inst = crate::instance::Instance::generate(3, 3, 1, 1, 99, 42).unwrap();
        let c = optimal_makespan(&inst, 1_000_000).unwrap();
        let set = enumerate_optima(&inst, c, ExactBudget::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.opt.json");
        set.save(&path).unwrap();
        let back = OptimalSet::load(&path, &inst).unwrap();
        assert_eq!(back.c_star(), set.c_star());
        assert_eq!(back.len(), set.len());
        for i in 0..set.len() {
            assert_eq!(back.member(i), set.member(i));
        }
        // Mismatched instance refuses to load.
        let other = crate::instance::Instance::generate(3, 3, 1, 1, 99, 43).unwrap();
        assert!(OptimalSet::load(&path, &other).is_err());
    }
}
