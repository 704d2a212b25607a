//! Steepest-descent local search under the n1 operator, plus random walks.

use crate::instance::Instance;
use crate::neighborhood::{collect_n1, Move};
use crate::schedule::{distance, random_semi_active, Evaluator, Orientation};
use rand::Rng;

/// Steepest descent: repeatedly applies the best strictly improving n1 move
/// (ties broken uniformly at random) until none exists. Plateau moves are
/// never taken, so termination is guaranteed.
pub fn steepest_descent<R: Rng>(inst: &Instance, s0: &Orientation, rng: &mut R) -> Orientation {
    let mut cur = s0.clone();
    let mut ev = Evaluator::new(inst);
    let mut moves: Vec<Move> = Vec::new();
    let mut best: Vec<Move> = Vec::new();
    loop {
        let info = ev.full(inst, &cur).expect("descent from a feasible orientation");
        collect_n1(inst, &cur, &info, &mut moves);
        let mut best_cmax = info.cmax;
        best.clear();
        for &mv in &moves {
            cur.swap_adjacent(inst, mv.machine, mv.a, mv.b);
            let c = ev.makespan(inst, &cur).expect("n1 neighbors are feasible");
            cur.swap_adjacent(inst, mv.machine, mv.b, mv.a);
            if c < best_cmax {
                best_cmax = c;
                best.clear();
                best.push(mv);
            } else if c == best_cmax && !best.is_empty() {
                best.push(mv);
            }
        }
        match best.len() {
            0 => return cur,
            1 => {
                let mv = best[0];
                cur.swap_adjacent(inst, mv.machine, mv.a, mv.b);
            }
            k => {
                let mv = best[rng.gen_range(0..k)];
                cur.swap_adjacent(inst, mv.machine, mv.a, mv.b);
            }
        }
    }
}

/// Distance from `s` to the local optimum reached by steepest descent.
pub fn descent_distance<R: Rng>(inst: &Instance, s: &Orientation, rng: &mut R) -> u32 {
    distance(s, &steepest_descent(inst, s, rng))
}

/// A random local optimum: steepest descent from a uniform random
/// semi-active orientation.
pub fn random_local_optimum<R: Rng>(inst: &Instance, rng: &mut R) -> Orientation {
    let start = random_semi_active(inst, rng);
    steepest_descent(inst, &start, rng)
}

/// Uniform random walk under n1: applies `steps` uniformly chosen moves.
/// Returns the endpoint and the number of steps actually taken (the walk
/// stops early if some solution has an empty neighborhood).
pub fn random_walk<R: Rng>(
    inst: &Instance,
    s0: &Orientation,
    steps: usize,
    rng: &mut R,
) -> (Orientation, usize) {
    let mut cur = s0.clone();
    let mut ev = Evaluator::new(inst);
    let mut moves: Vec<Move> = Vec::new();
    for taken in 0..steps {
        let info = match ev.full(inst, &cur) {
            Some(i) => i,
            None => unreachable!("walk stays within feasible orientations"),
        };
        collect_n1(inst, &cur, &info, &mut moves);
        if moves.is_empty() {
            return (cur, taken);
        }
        let mv = moves[rng.gen_range(0..moves.len())];
        cur.swap_adjacent(inst, mv.machine, mv.a, mv.b);
    }
    (cur, steps)
}
