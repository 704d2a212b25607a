//! Orientations (per-machine job sequences), the packed precedence bitvector,
//! semi-active schedule evaluation, and the disjunctive-graph distance.
//!
//! An orientation fixes the processing order of the jobs on every machine.
//! Together with the job routings it induces a precedence digraph; when that
//! digraph is acyclic the orientation is feasible and evaluates to the unique
//! semi-active schedule (every operation starts as early as its predecessors
//! allow). The bitvector records, for every machine and unordered job pair,
//! which job comes first; the distance between two orientations is the
//! Hamming distance between their bitvectors.

use crate::instance::{Instance, Job, Machine, OpId, Time};
use rand::Rng;

/// Sentinel for "no machine predecessor/successor".
const NONE: usize = usize::MAX;

/// Packed precedence bitvector.
///
/// Bit layout: machines ascending, then job pairs `(j1, j2)` with `j1 < j2`
/// in lexicographic order. A set bit means the lower-numbered job precedes
/// the higher-numbered one on that machine.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrecBits {
    words: Vec<u64>,
    len: usize,
}

impl PrecBits {
    pub fn zeroed(len: usize) -> Self {
        PrecBits { words: vec![0; len.div_ceil(64)], len }
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1 << (i % 64);
    }
    pub fn words(&self) -> &[u64] {
        &self.words
    }
    /// Hamming distance.
    ///
    /// # Panics
    /// When the two vectors have different lengths (different instance shapes).
    pub fn hamming(&self, other: &PrecBits) -> u32 {
        assert_eq!(self.len, other.len, "precedence vectors of mismatched shape");
        self.words.iter().zip(&other.words).map(|(a, b)| (a ^ b).count_ones()).sum()
    }
}

/// Number of precedence bits for an instance: `m * n*(n-1)/2`.
pub fn total_bits(inst: &Instance) -> usize {
    inst.m() * inst.n() * (inst.n() - 1) / 2
}

/// Bit index for the pair `{a, b}` on `machine`; `a != b`, both 1-based.
pub fn bit_index(inst: &Instance, machine: Machine, a: Job, b: Job) -> usize {
    let n = inst.n();
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let pair = (lo - 1) * (2 * n - lo) / 2 + (hi - lo - 1);
    (machine - 1) * (n * (n - 1) / 2) + pair
}

/// A per-machine processing order for every machine, plus derived structures:
/// the packed precedence bitvector and machine predecessor/successor links
/// used by the evaluator.
#[derive(Debug, Clone)]
pub struct Orientation {
    seq: Vec<Vec<Job>>,  // [machine-1] -> job order
    slot: Vec<usize>,    // [op id] -> index within its machine's seq
    mpred: Vec<usize>,   // [op id] -> machine predecessor op, or NONE
    msucc: Vec<usize>,   // [op id] -> machine successor op, or NONE
    bits: PrecBits,
}

impl PartialEq for Orientation {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits
    }
}
impl Eq for Orientation {}
impl std::hash::Hash for Orientation {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.bits.hash(state);
    }
}

impl Orientation {
    /// Builds an orientation from explicit machine orders; `seq[k-1]` must be
    /// a permutation of `1..=n`.
    ///
    /// # Panics
    /// When `seq` has the wrong shape or a row is not a permutation.
    pub fn from_seq(inst: &Instance, seq: Vec<Vec<Job>>) -> Orientation {
        let (n, m) = (inst.n(), inst.m());
        assert_eq!(seq.len(), m, "expected one job order per machine");
        let mut bits = PrecBits::zeroed(total_bits(inst));
        let mut slot = vec![0usize; inst.ops()];
        let mut mpred = vec![NONE; inst.ops()];
        let mut msucc = vec![NONE; inst.ops()];
        for (ki, row) in seq.iter().enumerate() {
            let machine = ki + 1;
            assert_eq!(row.len(), n, "machine {machine}: expected {n} jobs");
            let mut seen = vec![false; n + 1];
            for &j in row {
                assert!(j >= 1 && j <= n && !seen[j], "machine {machine}: not a job permutation");
                seen[j] = true;
            }
            let mut prev = NONE;
            for (s, &j) in row.iter().enumerate() {
                let op = inst.op_on(j, machine);
                slot[op] = s;
                mpred[op] = prev;
                if prev != NONE {
                    msucc[prev] = op;
                }
                prev = op;
                for &j2 in &row[s + 1..] {
                    // j precedes j2 here; the bit encodes "lower job first".
                    if j < j2 {
                        bits.set(bit_index(inst, machine, j, j2), true);
                    }
                }
            }
        }
        Orientation { seq, slot, mpred, msucc, bits }
    }

    /// Reconstructs an orientation from a precedence bitvector; `None` when
    /// some machine's pairwise relation is not a total order.
    pub fn from_bits(inst: &Instance, bits: &PrecBits) -> Option<Orientation> {
        assert_eq!(bits.len(), total_bits(inst), "bitvector of mismatched shape");
        let (n, m) = (inst.n(), inst.m());
        let mut seq = Vec::with_capacity(m);
        for machine in 1..=m {
            // A job's position equals the number of jobs that precede it; the
            // relation is a total order exactly when those counts form 0..n.
            let mut row = vec![0usize; n];
            let mut count = vec![0usize; n + 1];
            for a in 1..=n {
                for b in a + 1..=n {
                    let first = if bits.get(bit_index(inst, machine, a, b)) { a } else { b };
                    let second = a + b - first;
                    count[second] += 1;
                }
            }
            let mut seen = vec![false; n];
            for j in 1..=n {
                if count[j] >= n || seen[count[j]] {
                    return None;
                }
                seen[count[j]] = true;
                row[count[j]] = j;
            }
            seq.push(row);
        }
        Some(Orientation::from_seq(inst, seq))
    }

    /// Job order on `machine` (1-based).
    pub fn order_on(&self, machine: Machine) -> &[Job] {
        &self.seq[machine - 1]
    }
    pub fn bits(&self) -> &PrecBits {
        &self.bits
    }
    pub(crate) fn machine_pred(&self, op: OpId) -> Option<OpId> {
        (self.mpred[op] != NONE).then(|| self.mpred[op])
    }

    /// Is `a` immediately before `b` on `machine`?
    pub fn adjacent(&self, inst: &Instance, machine: Machine, a: Job, b: Job) -> bool {
        let (oa, ob) = (inst.op_on(a, machine), inst.op_on(b, machine));
        self.msucc[oa] == ob
    }

    /// Swaps the adjacent pair `(a, b)` on `machine` in place, updating seq,
    /// links, and the precedence bit. Callers must guarantee adjacency.
    pub(crate) fn swap_adjacent(&mut self, inst: &Instance, machine: Machine, a: Job, b: Job) {
        let (oa, ob) = (inst.op_on(a, machine), inst.op_on(b, machine));
        debug_assert_eq!(self.msucc[oa], ob, "swap of non-adjacent pair");
        let before = self.mpred[oa];
        let after = self.msucc[ob];
        self.mpred[ob] = before;
        if before != NONE {
            self.msucc[before] = ob;
        }
        self.msucc[ob] = oa;
        self.mpred[oa] = ob;
        self.msucc[oa] = after;
        if after != NONE {
            self.mpred[after] = oa;
        }
        let sa = self.slot[oa];
        self.seq[machine - 1].swap(sa, sa + 1);
        self.slot[oa] = sa + 1;
        self.slot[ob] = sa;
        self.bits.flip(bit_index(inst, machine, a, b));
    }
}

/// The semi-active schedule induced by a feasible orientation.
///
/// `start` is each operation's start time, which for a semi-active schedule
/// equals its head (longest path from the source to the operation's start);
/// `tail` is the longest path from the operation's completion to the sink.
/// An operation is critical when `head + dur + tail == cmax`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleInfo {
    pub start: Vec<Time>,
    pub tail: Vec<Time>,
    pub cmax: Time,
    pub critical: Vec<bool>,
}

impl ScheduleInfo {
    /// Longest path from the source to the start of `op` (equals `start`).
    pub fn head(&self, op: OpId) -> Time {
        self.start[op]
    }
    pub fn is_critical(&self, op: OpId) -> bool {
        self.critical[op]
    }
}

/// Reusable evaluation scratch. `evaluate` wraps this; hot loops keep one
/// around to avoid per-call allocation.
#[derive(Debug)]
pub struct Evaluator {
    indeg: Vec<u8>,
    topo: Vec<u32>,
    start: Vec<Time>,
    tail: Vec<Time>,
}

impl Evaluator {
    pub fn new(inst: &Instance) -> Self {
        let ops = inst.ops();
        Evaluator {
            indeg: vec![0; ops],
            topo: Vec::with_capacity(ops),
            start: vec![0; ops],
            tail: vec![0; ops],
        }
    }

    /// Forward pass only: makespan, or `None` when the orientation is cyclic.
    pub fn makespan(&mut self, inst: &Instance, s: &Orientation) -> Option<Time> {
        self.forward(inst, s)
    }

    fn forward(&mut self, inst: &Instance, s: &Orientation) -> Option<Time> {
        let ops = inst.ops();
        let m = inst.m();
        self.topo.clear();
        for op in 0..ops {
            self.start[op] = 0;
            let js = op % m != 0; // has job predecessor
            self.indeg[op] = js as u8 + (s.mpred[op] != NONE) as u8;
            if self.indeg[op] == 0 {
                self.topo.push(op as u32);
            }
        }
        let mut cmax = 0;
        let mut head = 0;
        while head < self.topo.len() {
            let op = self.topo[head] as usize;
            head += 1;
            let end = self.start[op] + inst.dur_of(op);
            cmax = cmax.max(end);
            // Relax the job successor and the machine successor.
            if (op + 1) % m != 0 {
                self.relax(op + 1, end);
            }
            if s.msucc[op] != NONE {
                self.relax(s.msucc[op], end);
            }
        }
        (self.topo.len() == ops).then_some(cmax)
    }

    #[inline]
    fn relax(&mut self, succ: OpId, end: Time) {
        if self.start[succ] < end {
            self.start[succ] = end;
        }
        self.indeg[succ] -= 1;
        if self.indeg[succ] == 0 {
            self.topo.push(succ as u32);
        }
    }

    /// Full evaluation: starts, tails, criticality. `None` when cyclic.
    pub fn full(&mut self, inst: &Instance, s: &Orientation) -> Option<ScheduleInfo> {
        let cmax = self.forward(inst, s)?;
        let ops = inst.ops();
        let m = inst.m();
        for op in 0..ops {
            self.tail[op] = 0;
        }
        for &op in self.topo.iter().rev() {
            let op = op as usize;
            let mut t = 0;
            if (op + 1) % m != 0 {
                t = inst.dur_of(op + 1) + self.tail[op + 1];
            }
            if s.msucc[op] != NONE {
                let succ = s.msucc[op];
                t = t.max(inst.dur_of(succ) + self.tail[succ]);
            }
            self.tail[op] = t;
        }
        let critical =
            (0..ops).map(|op| self.start[op] + inst.dur_of(op) + self.tail[op] == cmax).collect();
        Some(ScheduleInfo { start: self.start.clone(), tail: self.tail.clone(), cmax, critical })
    }
}

/// Evaluates the semi-active schedule of `s`; `None` when the orientation's
/// precedence digraph is cyclic (infeasible orientation — a normal outcome,
/// not an error).
pub fn evaluate(inst: &Instance, s: &Orientation) -> Option<ScheduleInfo> {
    Evaluator::new(inst).full(inst, s)
}

/// Disjunctive-graph distance: the number of machine/job-pair precedences on
/// which the two orientations disagree.
///
/// # Panics
/// When the orientations come from different instance shapes.
pub fn distance(s1: &Orientation, s2: &Orientation) -> u32 {
    s1.bits.hamming(&s2.bits)
}

/// Draws a uniformly random semi-active dispatch: repeatedly picks, uniformly
/// at random, a job whose next operation is ready (its job predecessor is
/// dispatched) and appends that operation to its machine's order. Feasible by
/// construction.
pub fn random_semi_active<R: Rng>(inst: &Instance, rng: &mut R) -> Orientation {
    let (n, m) = (inst.n(), inst.m());
    let mut next_pos = vec![0usize; n + 1];
    let mut live: Vec<Job> = (1..=n).collect();
    let mut seq: Vec<Vec<Job>> = vec![Vec::with_capacity(n); m];
    while !live.is_empty() {
        let pick = rng.gen_range(0..live.len());
        let job = live[pick];
        let machine = inst.machine_at(job, next_pos[job]);
        seq[machine - 1].push(job);
        next_pos[job] += 1;
        if next_pos[job] == m {
            live.swap_remove(pick);
        }
    }
    Orientation::from_seq(inst, seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, t1_orientation, T1Label};
    use crate::rng::rng_from_seed;

    #[test]
    fn t1_makespans_match_hand_computation() {
        let inst = fixtures::tiny2x2();
        let cases = [(T1Label::A, Some(7)), (T1Label::B, Some(11)), (T1Label::C, Some(11))];
        for (label, want) in cases {
            let s = t1_orientation(&inst, label);
            assert_eq!(evaluate(&inst, &s).map(|i| i.cmax), want, "{label:?}");
        }
        let d = t1_orientation(&inst, T1Label::D);
        assert!(evaluate(&inst, &d).is_none(), "cross order on both machines must cycle");
    }

    #[test]
    fn t1_critical_sets() {
        let inst = fixtures::tiny2x2();
        let a = evaluate(&inst, &t1_orientation(&inst, T1Label::A)).unwrap();
        // Critical ops of the optimum: job 1 on machine 1, job 2 on machine 1.
        let crit: Vec<bool> =
            (0..4).map(|op| a.is_critical(op)).collect();
        assert_eq!(crit, vec![true, false, false, true]);
        assert_eq!(a.cmax, 7);
        assert_eq!(a.head(inst.op_on(2, 1)), 3);
        let b = evaluate(&inst, &t1_orientation(&inst, T1Label::B)).unwrap();
        assert!((0..4).all(|op| b.is_critical(op)), "all four ops critical at cmax 11");
    }

    #[test]
    fn t1_distances() {
        let inst = fixtures::tiny2x2();
        let a = t1_orientation(&inst, T1Label::A);
        let b = t1_orientation(&inst, T1Label::B);
        let c = t1_orientation(&inst, T1Label::C);
        assert_eq!(distance(&a, &a), 0);
        assert_eq!(distance(&a, &b), 1);
        assert_eq!(distance(&b, &c), 2);
        assert_eq!(distance(&b, &a), 1);
    }

    #[test]
    fn bits_round_trip_through_reconstruction() {
        let inst = Instance::generate(5, 4, 1, 1, 99, 77).unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..50 {
            let s = random_semi_active(&inst, &mut rng);
            let back = Orientation::from_bits(&inst, s.bits()).unwrap();
            assert_eq!(back, s);
            for k in 1..=4 {
                assert_eq!(back.order_on(k), s.order_on(k));
            }
        }
    }

    #[test]
    fn from_bits_rejects_cyclic_tournaments() {
        let inst = Instance::generate(3, 1, 1, 1, 9, 5).unwrap();
        let mut bits = PrecBits::zeroed(total_bits(&inst));
        // 1 before 2, 2 before 3, 3 before 1: a 3-cycle on the machine.
        bits.set(bit_index(&inst, 1, 1, 2), true);
        bits.set(bit_index(&inst, 1, 2, 3), true);
        bits.set(bit_index(&inst, 1, 1, 3), false);
        assert!(Orientation::from_bits(&inst, &bits).is_none());
    }

    #[test]
    fn random_semi_active_is_always_feasible() {
        let inst = Instance::generate(6, 4, 1, 1, 99, 3).unwrap();
        let mut rng = rng_from_seed(9);
        let mut ev = Evaluator::new(&inst);
        for _ in 0..200 {
            let s = random_semi_active(&inst, &mut rng);
            assert!(ev.makespan(&inst, &s).is_some());
        }
    }

    #[test]
    fn swap_adjacent_updates_links_and_bit() {
        let inst = fixtures::tiny2x2();
        let mut s = t1_orientation(&inst, T1Label::B);
        s.swap_adjacent(&inst, 2, 1, 2);
        assert_eq!(s, t1_orientation(&inst, T1Label::A));
        assert_eq!(s.order_on(2), &[2, 1]);
        s.swap_adjacent(&inst, 2, 2, 1);
        assert_eq!(s, t1_orientation(&inst, T1Label::B));
    }

    #[test]
    fn head_tail_identity_on_critical_ops() {
        let inst = Instance::generate(6, 6, 1, 1, 99, 21).unwrap();
        let mut rng = rng_from_seed(2);
        let s = random_semi_active(&inst, &mut rng);
        let info = evaluate(&inst, &s).unwrap();
        let crit_count = (0..inst.ops()).filter(|&o| info.is_critical(o)).count();
        assert!(crit_count >= 2, "at least one critical path exists");
        for op in 0..inst.ops() {
            assert!(info.head(op) + inst.dur_of(op) + info.tail[op] <= info.cmax);
        }
    }
}
