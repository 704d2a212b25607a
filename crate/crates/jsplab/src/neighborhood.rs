//! Move operators over orientations.
//!
//! Both operators swap an adjacent pair of operations on one machine where
//! the connecting machine arc lies on a critical path, i.e.
//! `head(u) + dur(u) + dur(v) + tail(v) == cmax` (equivalently: both
//! operations critical and the arc tight, `head(u) + dur(u) == head(v)`).
//! Such swaps always yield a feasible orientation at bitvector distance 1;
//! swapping a *slack* pair of critical operations can create a cycle, so
//! those are excluded.
//!
//! `n1` collects every such pair across all critical paths. `n5` restricts
//! attention to a single critical path (sampled uniformly when several
//! exist), decomposes it into maximal same-machine blocks, and proposes only
//! the first pair of the last block, the last pair of the first block, and
//! both for interior blocks. The n5 set is a subset of n1; it can be empty
//! at a non-optimal solution.

use crate::instance::{Instance, Job, Machine, OpId};
use crate::schedule::{Orientation, ScheduleInfo};
use rand::Rng;

/// Swap of the adjacent jobs `(a, b)` on `machine`, `a` immediately before
/// `b` at generation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub machine: Machine,
    pub a: Job,
    pub b: Job,
}

impl std::fmt::Display for Move {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "M{}:J{}<->J{}", self.machine, self.a, self.b)
    }
}

/// All critical adjacent tight pairs, machine by machine.
pub fn n1_moves(inst: &Instance, s: &Orientation, info: &ScheduleInfo) -> Vec<Move> {
    let mut out = Vec::new();
    collect_n1(inst, s, info, &mut out);
    out
}

pub(crate) fn collect_n1(
    inst: &Instance,
    s: &Orientation,
    info: &ScheduleInfo,
    out: &mut Vec<Move>,
) {
    out.clear();
    let cmax = info.cmax;
    for machine in 1..=inst.m() {
        let order = s.order_on(machine);
        for w in order.windows(2) {
            let (u, v) = (inst.op_on(w[0], machine), inst.op_on(w[1], machine));
            if info.start[u] + inst.dur_of(u) + inst.dur_of(v) + info.tail[v] == cmax {
                out.push(Move { machine, a: w[0], b: w[1] });
            }
        }
    }
}

/// Applies a move, returning the neighboring orientation.
///
/// # Panics
/// When `(a, b)` are no longer adjacent on the machine (stale move).
pub fn apply_move(inst: &Instance, s: &Orientation, mv: Move) -> Orientation {
    assert!(
        s.adjacent(inst, mv.machine, mv.a, mv.b),
        "stale move {mv}: jobs are no longer adjacent"
    );
    let mut next = s.clone();
    next.swap_adjacent(inst, mv.machine, mv.a, mv.b);
    next
}

/// Block-restricted moves along one critical path, sampled uniformly from
/// the set of critical paths when several exist.
pub fn n5_moves<R: Rng>(
    inst: &Instance,
    s: &Orientation,
    info: &ScheduleInfo,
    rng: &mut R,
) -> Vec<Move> {
    let path = sample_critical_path(inst, s, info, rng);
    let mut out = Vec::new();
    // Maximal runs of consecutive path operations on the same machine.
    let mut blocks: Vec<(usize, usize)> = Vec::new(); // [start, end) into path
    let mut bstart = 0;
    for i in 1..=path.len() {
        if i == path.len() || inst.machine_of(path[i]) != inst.machine_of(path[bstart]) {
            blocks.push((bstart, i));
            bstart = i;
        }
    }
    let last_block = blocks.len() - 1;
    let mut push = |u: OpId, v: OpId| {
        let mv =
            Move { machine: inst.machine_of(u), a: inst.job_of(u), b: inst.job_of(v) };
        if !out.contains(&mv) {
            out.push(mv);
        }
    };
    for (bi, &(lo, hi)) in blocks.iter().enumerate() {
        if hi - lo < 2 {
            continue; // singleton block: no swap
        }
        let single_block_path = blocks.len() == 1;
        // Last pair of the block: first block and interior blocks (and the
        // single-block case, which proposes both ends).
        if bi != last_block || single_block_path {
            push(path[hi - 2], path[hi - 1]);
        }
        // First pair of the block: last block and interior blocks.
        if bi != 0 || single_block_path {
            push(path[lo], path[lo + 1]);
        }
    }
    out
}

/// Samples one critical path uniformly at random.
///
/// Tight arcs (`head(u) + dur(u) == head(v)` into a job or machine successor,
/// both endpoints critical) form a DAG whose source-to-sink paths are exactly
/// the critical paths. Path counts are accumulated forward in `f64` and the
/// path is traced back proportionally to them.
fn sample_critical_path<R: Rng>(
    inst: &Instance,
    s: &Orientation,
    info: &ScheduleInfo,
    rng: &mut R,
) -> Vec<OpId> {
    let ops = inst.ops();
    let m = inst.m();
    let cmax = info.cmax;
    // Critical ops in topological order of start time (stable: ops scanned by
    // id within equal starts; correctness only needs preds before succs,
    // which holds because tight preds end exactly at the successor's start).
    let mut order: Vec<OpId> = (0..ops).filter(|&o| info.is_critical(o)).collect();
    order.sort_by_key(|&o| info.start[o]);
    let mut count = vec![0.0f64; ops];
    let tight = |u: OpId, v: OpId| info.start[u] + inst.dur_of(u) == info.start[v];
    let crit_pred = |op: OpId| -> [Option<OpId>; 2] {
        let jp = (op % m != 0).then(|| op - 1).filter(|&p| info.is_critical(p) && tight(p, op));
        let mp = s.machine_pred(op).filter(|&p| info.is_critical(p) && tight(p, op));
        [jp, mp]
    };
    for &op in &order {
        let preds = crit_pred(op);
        if preds.iter().all(|p| p.is_none()) {
            count[op] = 1.0;
        } else {
            count[op] = preds.iter().flatten().map(|&p| count[p]).sum();
        }
    }
    // Sinks: critical ops that end at cmax with no tight critical successor
    // (equivalently tail == 0).
    let sinks: Vec<OpId> = order
        .iter()
        .copied()
        .filter(|&o| info.start[o] + inst.dur_of(o) == cmax && info.tail[o] == 0)
        .collect();
    let total: f64 = sinks.iter().map(|&o| count[o]).sum();
    let mut pick = rng.gen_range(0.0..total);
    let mut cur = *sinks.last().expect("a critical path always exists");
    for &o in &sinks {
        pick -= count[o];
        if pick < 0.0 {
            cur = o;
            break;
        }
    }
    let mut path = vec![cur];
    loop {
        let preds = crit_pred(cur);
        let total: f64 = preds.iter().flatten().map(|&p| count[p]).sum();
        if total == 0.0 {
            break;
        }
        let mut pick = rng.gen_range(0.0..total);
        let mut chosen = None;
        for &p in preds.iter().flatten() {
            pick -= count[p];
            if pick < 0.0 {
                chosen = Some(p);
                break;
            }
        }
        let p = chosen.unwrap_or_else(|| preds.iter().flatten().last().copied().unwrap());
        path.push(p);
        cur = p;
    }
    path.reverse();
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, t1_orientation, T1Label};
    use crate::rng::rng_from_seed;
    use crate::schedule::{distance, evaluate};

    #[test]
    fn t1_n1_neighborhoods() {
        let inst = fixtures::tiny2x2();
        let a = t1_orientation(&inst, T1Label::A);
        let ia = evaluate(&inst, &a).unwrap();
        assert_eq!(n1_moves(&inst, &a, &ia), vec![Move { machine: 1, a: 1, b: 2 }]);

        let b = t1_orientation(&inst, T1Label::B);
        let ib = evaluate(&inst, &b).unwrap();
        // The machine-1 pair is adjacent and critical but slack
        // (head 0 + 3 != head 7), so only the machine-2 swap qualifies.
        assert_eq!(n1_moves(&inst, &b, &ib), vec![Move { machine: 2, a: 1, b: 2 }]);

        let c = t1_orientation(&inst, T1Label::C);
        let ic = evaluate(&inst, &c).unwrap();
        assert_eq!(n1_moves(&inst, &c, &ic), vec![Move { machine: 1, a: 2, b: 1 }]);
    }

    #[test]
    fn t1_moves_land_on_expected_neighbors() {
        let inst = fixtures::tiny2x2();
        let b = t1_orientation(&inst, T1Label::B);
        let ib = evaluate(&inst, &b).unwrap();
        let mv = n1_moves(&inst, &b, &ib)[0];
        let next = apply_move(&inst, &b, mv);
        assert_eq!(next, t1_orientation(&inst, T1Label::A));
        assert_eq!(distance(&b, &next), 1);
    }

    #[test]
    fn t1_n5_neighborhoods() {
        let inst = fixtures::tiny2x2();
        let mut rng = rng_from_seed(0);
        let b = t1_orientation(&inst, T1Label::B);
        let ib = evaluate(&inst, &b).unwrap();
        // Single critical path with blocks [J1M1][J1M2 J2M2][J2M1]: the
        // interior block contributes its only pair once.
        assert_eq!(n5_moves(&inst, &b, &ib, &mut rng), vec![Move { machine: 2, a: 1, b: 2 }]);
        let a = t1_orientation(&inst, T1Label::A);
        let ia = evaluate(&inst, &a).unwrap();
        // Single-block critical path proposes both end pairs, which coincide.
        assert_eq!(n5_moves(&inst, &a, &ia, &mut rng), vec![Move { machine: 1, a: 1, b: 2 }]);
    }

    #[test]
    #[should_panic(expected = "stale move")]
    fn stale_moves_panic() {
        let inst = fixtures::tiny2x2();
        let a = t1_orientation(&inst, T1Label::A);
        apply_move(&inst, &a, Move { machine: 2, a: 1, b: 2 }); // order is 2,1
    }

    #[test]
    fn n1_neighbors_are_feasible_distance_one() {
        let inst = crate::instance::Instance::generate(6, 4, 1, 1, 99, 42).unwrap();
        let mut rng = rng_from_seed(7);
        for _ in 0..100 {
            let s = crate::schedule::random_semi_active(&inst, &mut rng);
            let info = evaluate(&inst, &s).unwrap();
            for mv in n1_moves(&inst, &s, &info) {
                let next = apply_move(&inst, &s, mv);
                assert_eq!(distance(&s, &next), 1);
                assert!(evaluate(&inst, &next).is_some(), "critical tight swap stays feasible");
            }
        }
    }

    #[test]
    fn n5_is_subset_of_n1() {
        let inst = crate::instance::Instance::generate(6, 6, 1, 1, 99, 17).unwrap();
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            let s = crate::schedule::random_semi_active(&inst, &mut rng);
            let info = evaluate(&inst, &s).unwrap();
            let n1 = n1_moves(&inst, &s, &info);
            for mv in n5_moves(&inst, &s, &info, &mut rng) {
                assert!(n1.contains(&mv), "{mv} not in the n1 set");
            }
        }
    }
}
