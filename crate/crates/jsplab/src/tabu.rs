//! Tabu search over the n1/n5 operators with a dynamic, uniformly resampled
//! tenure.
//!
//! Each accepted swap of `(a, b)` on a machine makes the reverse swap
//! `(b, a)` on that machine tabu for exactly the current tenure `L`: a pair
//! made tabu at iteration `t` is inadmissible at iterations `t+1 ..= t+L`
//! and admissible again at `t+L+1`. A tabu move is admissible early only
//! when it would strictly beat the best makespan seen so far (aspiration).
//! The search always accepts the admissible move with the lowest resulting
//! makespan, preferring non-tabu moves on exact ties and breaking remaining
//! ties uniformly at random. When every move is tabu and none aspires, the
//! iteration advances without a move (tenures still age and the resample
//! clock still ticks).

use crate::descent::random_local_optimum;
use crate::exec::batch_map;
use crate::instance::{Instance, Time};
use crate::neighborhood::{collect_n1, n5_moves, Move};
use crate::rng::{derive_seed, rng_from_seed};
use crate::schedule::{Evaluator, Orientation};
use crate::stats::{self, rint};
use rand::Rng;
use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, VecDeque};
use std::hash::{Hash, Hasher};
use std::ops::ControlFlow;

/// Neighborhood operator driving the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    N1,
    N5,
}

/// Search parameters.
///
/// The tenure `L` is redrawn uniformly from `[l_min, l_max]` every
/// `resample_period` iterations. `trap_walk_len` only matters under
/// [`Operator::N5`], whose restricted neighborhood can strand the search:
/// when the neighborhood comes up empty, or the same solution recurs three
/// times within a 200-iteration window, the search takes that many uniform
/// n1 steps and resumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TabuConfig {
    pub l_min: usize,
    pub l_max: usize,
    pub resample_period: u64,
    pub iteration_cap: u64,
    pub operator: Operator,
    pub trap_walk_len: usize,
}

/// Resample period used with the explicit tenure intervals below.
pub const FIXED_RESAMPLE: u64 = 15;
/// Tenure interval that prevents cycling on small (6x4, 6x6) instances.
pub const SMALL_INTERVAL: (usize, usize) = (6, 14);
/// Tenure interval for 10x10 instances.
pub const TEN_BY_TEN_INTERVAL: (usize, usize) = (8, 14);

impl TabuConfig {
    /// Explicit tenure interval with the fixed resample period.
    pub fn with_interval(l_min: usize, l_max: usize) -> Self {
        assert!(1 <= l_min && l_min <= l_max, "bad tenure interval [{l_min}, {l_max}]");
        TabuConfig {
            l_min,
            l_max,
            resample_period: FIXED_RESAMPLE,
            iteration_cap: 1_000_000,
            operator: Operator::N1,
            trap_walk_len: 20,
        }
    }

    /// Size-derived tenure: interval from [`tenure_interval`], resample
    /// period `rint(1.2 * l_max)`.
    pub fn formula(n: usize, m: usize) -> Self {
        let (l_min, l_max) = tenure_interval(n, m);
        TabuConfig {
            resample_period: rint(1.2 * l_max as f64) as u64,
            ..TabuConfig::with_interval(l_min, l_max)
        }
    }

    pub fn cap(mut self, iteration_cap: u64) -> Self {
        self.iteration_cap = iteration_cap;
        self
    }
    pub fn operator(mut self, operator: Operator) -> Self {
        self.operator = operator;
        self
    }
    pub fn resample(mut self, period: u64) -> Self {
        assert!(period >= 1);
        self.resample_period = period;
        self
    }
}

/// Size-derived tenure interval:
/// `X = (n + m/2)·exp(-n/(5m)) + (nm/2)·exp(-5m/n)`, clamped to
/// `[max(1, rint(0.8 X)), max(l_min, rint(1.2 X))]`.
pub fn tenure_interval(n: usize, m: usize) -> (usize, usize) {
    let (nf, mf) = (n as f64, m as f64);
    let x = (nf + mf / 2.0) * (-nf / (5.0 * mf)).exp() + (nf * mf / 2.0) * (-5.0 * mf / nf).exp();
    let l_min = (rint(0.8 * x).max(1)) as usize;
    let l_max = (rint(1.2 * x) as usize).max(l_min);
    (l_min, l_max)
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    /// Makespan ≤ target was reached after this many iterations (0 when the
    /// start already met the target).
    Reached { iterations: u64 },
    /// The iteration cap elapsed first.
    CapExceeded,
    /// An observer stopped the run early (internal samplers only; never
    /// produced by [`ts_run`]).
    Aborted,
}

impl RunOutcome {
    pub fn iterations_to_target(&self) -> Option<u64> {
        match self {
            RunOutcome::Reached { iterations } => Some(*iterations),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub outcome: RunOutcome,
    /// Best makespan seen (the target itself when the run reached it).
    pub best_cmax: Time,
}

/// Runs tabu search from `start` until the makespan reaches `target` or the
/// iteration cap elapses.
pub fn ts_run<R: Rng>(
    inst: &Instance,
    start: &Orientation,
    target: Time,
    config: TabuConfig,
    rng: &mut R,
) -> RunResult {
    ts_run_observed(inst, start, target, config, rng, |_, _, _| ControlFlow::Continue(()))
}

/// Core loop with a per-iteration observer. The observer sees the current
/// solution at the end of every iteration (after the move, or unchanged when
/// no move was admissible) along with its full evaluation, and can stop the
/// run by returning `Break`.
pub(crate) fn ts_run_observed<R, F>(
    inst: &Instance,
    start: &Orientation,
    target: Time,
    config: TabuConfig,
    rng: &mut R,
    mut observer: F,
) -> RunResult
where
    R: Rng,
    F: FnMut(u64, &Orientation, &crate::schedule::ScheduleInfo) -> ControlFlow<()>,
{
    let n = inst.n();
    let mut ev = Evaluator::new(inst);
    let mut cur = start.clone();
    let mut info = ev.full(inst, &cur).expect("feasible start");
    let mut best_cmax = info.cmax;
    if info.cmax <= target {
        return RunResult { outcome: RunOutcome::Reached { iterations: 0 }, best_cmax };
    }

    // tabu_until[(machine-1)·n² + (a-1)·n + (b-1)]: swapping the adjacent
    // pair (a, b) on machine is forbidden while iteration <= entry.
    let mut tabu_until = vec![0u64; inst.m() * n * n];
    let key = |mv: &Move| (mv.machine - 1) * n * n + (mv.a - 1) * n + (mv.b - 1);

    let mut tenure = 0u64;
    let mut moves: Vec<Move> = Vec::new();
    let mut evals: Vec<(Time, bool)> = Vec::new(); // (neighbor cmax, is tabu)
    let mut pick: Vec<usize> = Vec::new();

    // N5 trap detection: solution hash recurrence within a sliding window.
    let mut window: VecDeque<u64> = VecDeque::new();
    let mut seen: HashMap<u64, u32> = HashMap::new();
    let mut walk_budget = 0usize;

    let mut t = 0u64;
    while t < config.iteration_cap {
        t += 1;
        if (t - 1) % config.resample_period == 0 {
            tenure = rng.gen_range(config.l_min..=config.l_max) as u64;
        }

        let mut moved = false;
        if walk_budget > 0 {
            // Escape walk: one uniform n1 step per iteration.
            walk_budget -= 1;
            collect_n1(inst, &cur, &info, &mut moves);
            if !moves.is_empty() {
                let mv = moves[rng.gen_range(0..moves.len())];
                cur.swap_adjacent(inst, mv.machine, mv.a, mv.b);
                moved = true;
            }
        } else {
            match config.operator {
                Operator::N1 => collect_n1(inst, &cur, &info, &mut moves),
                Operator::N5 => moves = n5_moves(inst, &cur, &info, rng),
            }
            if moves.is_empty() {
                if config.operator == Operator::N5 {
                    // Stranded: schedule an escape walk.
                    walk_budget = config.trap_walk_len;
                    window.clear();
                    seen.clear();
                }
                // Under n1 an empty neighborhood means the solution is a
                // global optimum on its connected component; with target
                // below reach the iteration simply passes.
            } else {
                evals.clear();
                for &mv in &moves {
                    cur.swap_adjacent(inst, mv.machine, mv.a, mv.b);
                    let c = ev.makespan(inst, &cur).expect("n1/n5 neighbors are feasible");
                    cur.swap_adjacent(inst, mv.machine, mv.b, mv.a);
                    evals.push((c, tabu_until[key(&mv)] >= t));
                }
                // Lowest admissible makespan; non-tabu preferred on ties.
                let mut best_c = Time::MAX;
                for &(c, tabu) in &evals {
                    if (!tabu || c < best_cmax) && c < best_c {
                        best_c = c;
                    }
                }
                if best_c != Time::MAX {
                    pick.clear();
                    let mut have_nontabu = false;
                    for (i, &(c, tabu)) in evals.iter().enumerate() {
                        if c != best_c || (tabu && c >= best_cmax) {
                            continue;
                        }
                        if !tabu && !have_nontabu {
                            have_nontabu = true;
                            pick.clear();
                        }
                        if !tabu || !have_nontabu {
                            pick.push(i);
                        }
                    }
                    let mv = moves[pick[rng.gen_range(0..pick.len())]];
                    cur.swap_adjacent(inst, mv.machine, mv.a, mv.b);
                    // Forbid re-inverting the pair for exactly L iterations.
                    tabu_until[key(&Move { machine: mv.machine, a: mv.b, b: mv.a })] = t + tenure;
                    moved = true;
                }
            }
        }

        if moved {
            info = ev.full(inst, &cur).expect("feasible after swap");
            if info.cmax < best_cmax {
                best_cmax = info.cmax;
            }
        }

        if config.operator == Operator::N5 && walk_budget == 0 {
            let mut h = DefaultHasher::new();
            cur.bits().hash(&mut h);
            let sig = h.finish();
            window.push_back(sig);
            let c = seen.entry(sig).or_insert(0);
            *c += 1;
            if *c >= 3 {
                walk_budget = config.trap_walk_len;
                window.clear();
                seen.clear();
            } else if window.len() > 200 {
                let old = window.pop_front().unwrap();
                if let Some(c) = seen.get_mut(&old) {
                    *c -= 1;
                    if *c == 0 {
                        seen.remove(&old);
                    }
                }
            }
        }

        if observer(t, &cur, &info).is_break() {
            return RunResult { outcome: RunOutcome::Aborted, best_cmax };
        }
        if info.cmax <= target {
            return RunResult { outcome: RunOutcome::Reached { iterations: t }, best_cmax };
        }
    }
    RunResult { outcome: RunOutcome::CapExceeded, best_cmax }
}

/// Cost distribution of independent tabu runs, each from a fresh random
/// local optimum, under per-trial seeds derived from `master_seed`.
#[derive(Debug, Clone)]
pub struct CostStats {
    /// Per-trial outcomes, in trial order.
    pub runs: Vec<RunOutcome>,
}

impl CostStats {
    /// Iteration counts of the successful trials, in trial order.
    pub fn samples(&self) -> Vec<u64> {
        self.runs.iter().filter_map(|r| r.iterations_to_target()).collect()
    }
    /// Number of trials that hit the iteration cap.
    pub fn censored(&self) -> usize {
        self.runs.iter().filter(|r| matches!(r, RunOutcome::CapExceeded)).count()
    }
    /// Mean cost; `None` when any trial was censored (the mean would be
    /// biased low).
    pub fn c_bar(&self) -> Option<f64> {
        (self.censored() == 0).then(|| stats::mean_u64(&self.samples()))
    }
    /// Median cost (mean of the central pair for even counts); `None` when
    /// any trial was censored.
    pub fn c_q2(&self) -> Option<f64> {
        (self.censored() == 0).then(|| stats::median_u64(&mut self.samples()))
    }
}

/// Runs `trials` independent [`ts_run`]s to `target`, one derived seed per
/// trial index.
pub fn solve_cost_stats(
    inst: &Instance,
    target: Time,
    trials: usize,
    config: TabuConfig,
    master_seed: u64,
) -> CostStats {
    let runs = batch_map(trials, |i| {
        let mut rng = rng_from_seed(derive_seed(master_seed, i as u64));
        let start = random_local_optimum(inst, &mut rng);
        ts_run(inst, &start, target, config, &mut rng).outcome
    });
    CostStats { runs }
}
