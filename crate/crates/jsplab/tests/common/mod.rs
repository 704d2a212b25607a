//! Brute-force oracles, deliberately independent of the library's
//! evaluation path: schedules come from stepping simulated time (no
//! topological sort), optima from scanning every `(n!)^m` machine-order
//! combination, and precedence bits from re-deriving the pair order by
//! nested loops. Everything here is exponential and desk-scale only.
#![allow(dead_code)]

use jsplab::instance::{Instance, Job, Time};
use jsplab::schedule::{total_bits, PrecBits};

/// Simulates the semi-active schedule for the machine orders `seq`
/// (`seq[k-1]` = job order on machine `k`) by advancing time from event to
/// event and starting every operation the instant its job predecessor and
/// machine predecessor are both complete. Returns the makespan and the
/// per-op start times, or `None` when the orders deadlock (cyclic
/// orientation).
pub fn simulate(inst: &Instance, seq: &[Vec<Job>]) -> Option<(Time, Vec<Time>)> {
    const PENDING: Time = Time::MAX;
    let ops = inst.ops();
    let mut start = vec![PENDING; ops];
    let mut finish = vec![PENDING; ops];
    // Next not-yet-started slot in each machine's order.
    let mut cursor = vec![0usize; inst.m()];
    let mut scheduled = 0usize;
    let mut t: Time = 0;
    loop {
        let mut progressed = true;
        while progressed {
            progressed = false;
            for mach in 1..=inst.m() {
                let k = cursor[mach - 1];
                if k >= seq[mach - 1].len() {
                    continue;
                }
                let job = seq[mach - 1][k];
                let op = inst.op_on(job, mach);
                let machine_free =
                    k == 0 || finish[inst.op_on(seq[mach - 1][k - 1], mach)] <= t;
                let pos = inst.position_of(op);
                let job_ready = pos == 0 || finish[inst.op(job, pos - 1)] <= t;
                if machine_free && job_ready {
                    start[op] = t;
                    finish[op] = t + inst.dur_of(op);
                    cursor[mach - 1] += 1;
                    scheduled += 1;
                    progressed = true;
                }
            }
        }
        if scheduled == ops {
            return Some((*finish.iter().max().unwrap(), start));
        }
        // Jump to the next completion; none pending means deadlock.
        t = *finish.iter().filter(|&&f| f != PENDING && f > t).min()?;
    }
}

/// Re-derives the precedence bitvector for `seq` from first principles:
/// machines ascending, job pairs `(j1 < j2)` in lexicographic order, bit set
/// exactly when the lower-numbered job comes first.
pub fn oracle_bits(inst: &Instance, seq: &[Vec<Job>]) -> PrecBits {
    let n = inst.n();
    let mut bits = PrecBits::zeroed(total_bits(inst));
    let mut idx = 0;
    for mach in 1..=inst.m() {
        let row = &seq[mach - 1];
        for j1 in 1..=n {
            for j2 in (j1 + 1)..=n {
                let p1 = row.iter().position(|&j| j == j1).unwrap();
                let p2 = row.iter().position(|&j| j == j2).unwrap();
                bits.set(idx, p1 < p2);
                idx += 1;
            }
        }
    }
    bits
}

/// All permutations of `1..=n`, in a fixed (lexicographic) order.
pub fn permutations(n: usize) -> Vec<Vec<Job>> {
    let mut out = Vec::new();
    let mut cur: Vec<Job> = Vec::with_capacity(n);
    let mut used = vec![false; n + 1];
    fn rec(n: usize, cur: &mut Vec<Job>, used: &mut [bool], out: &mut Vec<Vec<Job>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for j in 1..=n {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(n, cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    rec(n, &mut cur, &mut used, &mut out);
    out
}

/// Every machine-order combination of the instance: the full `(n!)^m` scan.
pub fn all_sequences(inst: &Instance) -> Vec<Vec<Vec<Job>>> {
    let perms = permutations(inst.n());
    let mut out: Vec<Vec<Vec<Job>>> = vec![Vec::new()];
    for _ in 0..inst.m() {
        let mut next = Vec::with_capacity(out.len() * perms.len());
        for partial in &out {
            for p in &perms {
                let mut s = partial.clone();
                s.push(p.clone());
                next.push(s);
            }
        }
        out = next;
    }
    out
}

/// Exhaustively enumerated ground truth for one instance.
pub struct BruteTruth {
    pub c_star: Time,
    /// Optimal members as precedence bitvectors, deduplicated, in scan order.
    pub members: Vec<PrecBits>,
    /// Every feasible machine-order combination with its makespan.
    pub feasible: Vec<(Vec<Vec<Job>>, Time)>,
}

/// Scans all `(n!)^m` orientations with [`simulate`].
pub fn brute_truth(inst: &Instance) -> BruteTruth {
    let mut feasible = Vec::new();
    for seq in all_sequences(inst) {
        if let Some((cmax, _)) = simulate(inst, &seq) {
            feasible.push((seq, cmax));
        }
    }
    assert!(!feasible.is_empty(), "every instance has feasible orientations");
    let c_star = feasible.iter().map(|&(_, c)| c).min().unwrap();
    let members = feasible
        .iter()
        .filter(|&&(_, c)| c == c_star)
        .map(|(seq, _)| oracle_bits(inst, seq))
        .collect();
    BruteTruth { c_star, members, feasible }
}

/// Per-op criticality derived without the library's tail computation: `tail`
/// is recovered by simulating the instance with every job route and machine
/// order reversed, where the reverse schedule's finish times read off the
/// forward schedule's tails.
pub fn oracle_critical(inst: &Instance, seq: &[Vec<Job>]) -> Option<(Time, Vec<bool>)> {
    let (cmax, start) = simulate(inst, seq)?;
    let n = inst.n();
    let routing: Vec<Vec<usize>> = (1..=n)
        .map(|job| (0..inst.m()).rev().map(|pos| inst.machine_at(job, pos)).collect())
        .collect();
    let duration: Vec<Vec<u32>> =
        (1..=n).map(|job| (0..inst.m()).rev().map(|pos| inst.dur_at(job, pos)).collect()).collect();
    let rev = Instance::new(n, inst.m(), routing, duration, None, None).unwrap();
    let rev_seq: Vec<Vec<Job>> =
        seq.iter().map(|row| row.iter().rev().copied().collect()).collect();
    let (rev_cmax, rev_start) = simulate(&rev, &rev_seq).expect("reverse of a feasible orientation");
    assert_eq!(rev_cmax, cmax, "reversal preserves the makespan");
    let critical = (0..inst.ops())
        .map(|op| {
            let rev_op = rev.op_on(inst.job_of(op), inst.machine_of(op));
            let tail = rev_start[rev_op];
            start[op] + inst.dur_of(op) + tail == cmax
        })
        .collect();
    Some((cmax, critical))
}

/// The brute-force move scan behind the N1 contract: every adjacent pair on
/// a machine where both operations are critical and the connecting arc is
/// tight (`start(u) + dur(u) == start(v)`), as `(machine, a, b)` triples.
pub fn oracle_n1(inst: &Instance, seq: &[Vec<Job>]) -> Vec<(usize, Job, Job)> {
    let (_, start) = simulate(inst, seq).expect("feasible orientation");
    let (_, critical) = oracle_critical(inst, seq).expect("feasible orientation");
    let mut out = Vec::new();
    for mach in 1..=inst.m() {
        let row = &seq[mach - 1];
        for k in 0..row.len() - 1 {
            let u = inst.op_on(row[k], mach);
            let v = inst.op_on(row[k + 1], mach);
            if critical[u] && critical[v] && start[u] + inst.dur_of(u) == start[v] {
                out.push((mach, row[k], row[k + 1]));
            }
        }
    }
    out
}
