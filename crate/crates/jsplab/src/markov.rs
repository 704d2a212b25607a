//! A biased-random-walk model of tabu search: states are (distance to the
//! nearest optimum, gradient of the last step), estimated from sampled
//! tabu trajectories and simulated to predict search cost.

use crate::descent::random_local_optimum;
use crate::exact::OptimalSet;
use crate::exec::batch_map;
use crate::instance::Instance;
use crate::rng::{derive_seed, rng_from_seed};
use crate::schedule::PrecBits;
use crate::stats::rint;
use crate::tabu::{ts_run_observed, TabuConfig};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::ops::ControlFlow;
use thiserror::Error;

/// Direction of the last change in distance to the nearest optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gradient {
    Closer,
    Equal,
    Farther,
}

impl Gradient {
    pub const ALL: [Gradient; 3] = [Gradient::Closer, Gradient::Equal, Gradient::Farther];

    fn index(self) -> usize {
        match self {
            Gradient::Closer => 0,
            Gradient::Equal => 1,
            Gradient::Farther => 2,
        }
    }

    /// Numeric value: closer = -1, equal = 0, farther = +1.
    pub fn value(self) -> i8 {
        match self {
            Gradient::Closer => -1,
            Gradient::Equal => 0,
            Gradient::Farther => 1,
        }
    }

    fn from_value(v: i8) -> Option<Gradient> {
        match v {
            -1 => Some(Gradient::Closer),
            0 => Some(Gradient::Equal),
            1 => Some(Gradient::Farther),
            _ => None,
        }
    }

    fn of_step(from: u32, to: u32) -> Gradient {
        match to.cmp(&from) {
            std::cmp::Ordering::Less => Gradient::Closer,
            std::cmp::Ordering::Equal => Gradient::Equal,
            std::cmp::Ordering::Greater => Gradient::Farther,
        }
    }
}

/// One transition row: the probabilities of moving closer (to i-1), staying
/// at i, or moving farther (to i+1), plus the number of observed transitions
/// the row was estimated from (0 for rows filled by the copy rule).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub p_closer: f64,
    pub p_equal: f64,
    pub p_farther: f64,
    pub support: u64,
}

impl Row {
    fn sum(&self) -> f64 {
        self.p_closer + self.p_equal + self.p_farther
    }
}

const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MarkovError {
    #[error(
        "estimation fell short of s_min coverage on distances {missing:?} \
         within the budget of {budget} iterations"
    )]
    CoverageFailure { missing: Vec<u32>, budget: u64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// The estimated chain: rows for every distance `1..=d_max` and gradient.
/// State (0, closer) is absorbing; rows at `i = d_max` carry no farther
/// mass (reflecting barrier).
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    d_max: u32,
    rows: Vec<Row>, // (i-1)*3 + gradient.index()
}

impl MarkovModel {
    /// Builds and validates a model from explicit rows, ordered by distance
    /// then gradient (closer, equal, farther).
    pub fn new(d_max: u32, rows: Vec<Row>) -> Result<MarkovModel, MarkovError> {
        if d_max == 0 {
            return Err(MarkovError::InvalidModel("d_max must be at least 1".into()));
        }
        if rows.len() != 3 * d_max as usize {
            return Err(MarkovError::InvalidModel(format!(
                "expected {} rows for d_max {}, got {}",
                3 * d_max,
                d_max,
                rows.len()
            )));
        }
        for (idx, row) in rows.iter().enumerate() {
            let (i, x) = (idx as u32 / 3 + 1, idx % 3);
            for p in [row.p_closer, row.p_equal, row.p_farther] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(MarkovError::InvalidModel(format!(
                        "probability {p} out of range at i={i}, x={x}"
                    )));
                }
            }
            if (row.sum() - 1.0).abs() > ROW_SUM_TOL {
                return Err(MarkovError::InvalidModel(format!(
                    "row at i={i}, x={x} sums to {}",
                    row.sum()
                )));
            }
            if i == d_max && row.p_farther != 0.0 {
                return Err(MarkovError::InvalidModel(format!(
                    "boundary row at i={i} has farther mass {}",
                    row.p_farther
                )));
            }
        }
        Ok(MarkovModel { d_max, rows })
    }

    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    /// The transition row of state `(i, x)`; `i` must be in `1..=d_max`.
    pub fn row(&self, i: u32, x: Gradient) -> &Row {
        assert!(1 <= i && i <= self.d_max, "distance {i} outside 1..={}", self.d_max);
        &self.rows[(i as usize - 1) * 3 + x.index()]
    }

    pub fn to_json(&self) -> String {
        let rows = (0..self.rows.len())
            .map(|idx| {
                let row = &self.rows[idx];
                RowFile {
                    i: idx as u32 / 3 + 1,
                    x: Gradient::ALL[idx % 3].value(),
                    p_closer: row.p_closer,
                    p_equal: row.p_equal,
                    p_farther: row.p_farther,
                    support: row.support,
                }
            })
            .collect();
        let mut text = serde_json::to_string_pretty(&ModelFile { d_max: self.d_max, rows })
            .expect("model serialization");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<MarkovModel, MarkovError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| MarkovError::InvalidModel(e.to_string()))?;
        let mut rows = vec![None; 3 * file.d_max as usize];
        for r in &file.rows {
            let x = Gradient::from_value(r.x)
                .ok_or_else(|| MarkovError::InvalidModel(format!("bad gradient {}", r.x)))?;
            if r.i < 1 || r.i > file.d_max {
                return Err(MarkovError::InvalidModel(format!("row distance {} out of range", r.i)));
            }
            let slot = &mut rows[(r.i as usize - 1) * 3 + x.index()];
            if slot.is_some() {
                return Err(MarkovError::InvalidModel(format!("duplicate row i={}, x={}", r.i, r.x)));
            }
            *slot = Some(Row {
                p_closer: r.p_closer,
                p_equal: r.p_equal,
                p_farther: r.p_farther,
                support: r.support,
            });
        }
        let rows: Option<Vec<Row>> = rows.into_iter().collect();
        let rows = rows.ok_or_else(|| MarkovError::InvalidModel("missing rows".into()))?;
        MarkovModel::new(file.d_max, rows)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    d_max: u32,
    rows: Vec<RowFile>,
}

#[derive(Serialize, Deserialize)]
struct RowFile {
    i: u32,
    x: i8,
    p_closer: f64,
    p_equal: f64,
    p_farther: f64,
    support: u64,
}

/// Estimation parameters. `s_min`/`s_max` bound the accepted distinct
/// samples per distance, `sample_interval` spaces the candidate iterations,
/// and `iteration_budget` caps the total tabu iterations spent across all
/// trials before estimation gives up with a coverage failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EstimationConfig {
    pub s_min: usize,
    pub s_max: usize,
    pub sample_interval: u64,
    pub iteration_budget: u64,
    #[serde(skip)]
    pub tabu: TabuConfig,
}

impl EstimationConfig {
    /// The defaults used for instances up to 6x6. The budget is sized for
    /// hard outliers: near-optimum shells are crossed only on a trial's
    /// final approach, and on instances that funnel those approaches
    /// through few distinct solutions, collecting `s_min` distinct samples
    /// at distance 2 can take a few hundred million iterations.
    pub fn small(tabu: TabuConfig) -> EstimationConfig {
        EstimationConfig {
            s_min: 50,
            s_max: 250,
            sample_interval: 100,
            iteration_budget: 400_000_000,
            tabu,
        }
    }
}

/// Estimates the chain from tabu trajectories.
///
/// Runs successive trials (fresh random-local-optimum starts, each ending at
/// a global optimum). On a global clock, every `sample_interval`-th
/// iteration's solution is a candidate: it is accepted when its bitvector is
/// distinct among prior accepts at its distance i ≥ 1 and that distance
/// holds fewer than `s_max` accepts. Each accepted sample contributes the
/// transition observed at the next iteration of the same trial (samples at
/// a trial's last iteration contribute nothing). A sample's gradient
/// compares against the previous iteration's distance; on a trial's first
/// iteration it is a fair closer/farther coin. Estimation stops the moment
/// every distance in `[2, rint(d_lopt_opt)]` holds at least `s_min` accepts.
///
/// `d_max` is X - 1 for the minimal distance X ≥ 2 with fewer than `s_min`
/// accepts. Rows with no observed transitions copy the nearest same-gradient
/// row (lower distances first), keeping `support = 0`; a gradient never
/// observed anywhere gets the absorbing pull (closer = 1), reachable only if
/// some observed row leads into it. Rows at `d_max` renormalize over
/// closer/equal.
///
/// Two repairs keep the chain absorbing. A row whose observed exits are all
/// `equal` (or, at `d_max`, whose only exits renormalize away) describes the
/// inside of a no-move stretch, not how the walk leaves the state — the real
/// process always leaves, since tabu tenures expire — so such rows count as
/// unobserved and fall to the copy rule. After assembly, any state that
/// still cannot reach absorption (possible when sparse rows form a cycle)
/// gets the absorbing pull; without this, simulation could spin forever in
/// cycles the real process escapes by construction.
pub fn estimate_model(
    inst: &Instance,
    opt: &OptimalSet,
    d_lopt_opt: f64,
    cfg: &EstimationConfig,
    seed: u64,
) -> Result<MarkovModel, MarkovError> {
    assert!(1 <= cfg.s_min && cfg.s_min <= cfg.s_max, "need 1 <= s_min <= s_max");
    assert!(cfg.sample_interval >= 1);
    let coverage_to = rint(d_lopt_opt).max(0) as u32;
    let dist_bound = crate::schedule::total_bits(inst) + 2;

    let mut accepted = vec![0u64; dist_bound];
    let mut distinct: Vec<HashSet<PrecBits>> = vec![HashSet::new(); dist_bound];
    // trans[(i-1)*3 + x][x'] = observed transitions out of (i, x).
    let mut trans = vec![[0u64; 3]; 3 * dist_bound];

    let covered = |accepted: &[u64]| (2..=coverage_to).all(|i| accepted[i as usize] >= cfg.s_min as u64);

    let mut rng = rng_from_seed(seed);
    let mut coin = rng_from_seed(derive_seed(seed, u64::MAX / 2));
    let mut global = 0u64;
    let mut done = covered(&accepted);

    while !done && global < cfg.iteration_budget {
        let start = random_local_optimum(inst, &mut rng);
        let start_d = opt.d_opt(start.bits());
        // (clock value, distance) of the last computed d_opt: the scan floor
        // decays by one per elapsed iteration.
        let mut last = (global, start_d);
        let mut prev_call: Option<u32> = None;
        let mut pending: Option<(u32, Gradient)> = None;
        // However the trial ends (optimum reached, capped, or broken out of),
        // its pending sample's transition is dropped with it.
        let _ = ts_run_observed(inst, &start, opt.c_star(), cfg.tabu, &mut rng, |t, s, _| {
            global += 1;
            let r = global % cfg.sample_interval;
            let scheduled = r == 0 || r == 1 || r + 1 == cfg.sample_interval;
            if !(scheduled || pending.is_some()) {
                prev_call = None;
                return if global >= cfg.iteration_budget {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                };
            }
            let floor = last.1.saturating_sub((global - last.0) as u32);
            let d = opt.d_opt_bounded(s.bits(), floor);
            last = (global, d);

            if let Some((i0, x0)) = pending.take() {
                trans[(i0 as usize - 1) * 3 + x0.index()][Gradient::of_step(i0, d).index()] += 1;
            }
            if r == 0 && d >= 1 {
                let i = d as usize;
                if accepted[i] < cfg.s_max as u64 && distinct[i].insert(s.bits().clone()) {
                    let x = if t == 1 {
                        if coin.gen::<bool>() {
                            Gradient::Closer
                        } else {
                            Gradient::Farther
                        }
                    } else {
                        Gradient::of_step(prev_call.expect("previous iteration was scheduled"), d)
                    };
                    accepted[i] += 1;
                    pending = Some((d, x));
                    if covered(&accepted) {
                        done = true;
                        return ControlFlow::Break(());
                    }
                }
            }
            prev_call = Some(d);
            if global >= cfg.iteration_budget {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
    }

    if !done {
        let missing: Vec<u32> =
            (2..=coverage_to).filter(|&i| accepted[i as usize] < cfg.s_min as u64).collect();
        return Err(MarkovError::CoverageFailure { missing, budget: cfg.iteration_budget });
    }

    // d_max = X - 1, X the minimal distance >= 2 short of s_min accepts.
    let mut x_cut = dist_bound as u32 - 1;
    for i in 2..dist_bound as u32 {
        if accepted[i as usize] < cfg.s_min as u64 {
            x_cut = i;
            break;
        }
    }
    let d_max = (x_cut - 1).max(1);

    let mut rows = vec![
        Row { p_closer: 0.0, p_equal: 0.0, p_farther: 0.0, support: 0 };
        3 * d_max as usize
    ];
    for i in 1..=d_max {
        for x in Gradient::ALL {
            let tally = trans[(i as usize - 1) * 3 + x.index()];
            let total = tally.iter().sum::<u64>();
            // Exit-less rows (see above) are as good as unobserved.
            let informative = if i == d_max { tally[0] > 0 } else { tally[0] + tally[2] > 0 };
            if total > 0 && informative {
                rows[(i as usize - 1) * 3 + x.index()] = Row {
                    p_closer: tally[0] as f64 / total as f64,
                    p_equal: tally[1] as f64 / total as f64,
                    p_farther: tally[2] as f64 / total as f64,
                    support: total,
                };
            }
        }
    }
    // Fill unsupported rows from the nearest supported same-gradient row.
    for x in Gradient::ALL {
        for i in 1..=d_max as usize {
            let idx = (i - 1) * 3 + x.index();
            if rows[idx].support > 0 {
                continue;
            }
            let donor = (1..i)
                .rev()
                .chain(i + 1..=d_max as usize)
                .map(|j| (j - 1) * 3 + x.index())
                .find(|&j| rows[j].support > 0);
            rows[idx] = match donor {
                Some(j) => Row { support: 0, ..rows[j] },
                None => Row { p_closer: 1.0, p_equal: 0.0, p_farther: 0.0, support: 0 },
            };
        }
    }
    // Reflecting barrier: the top row keeps no farther mass.
    for x in Gradient::ALL {
        let idx = (d_max as usize - 1) * 3 + x.index();
        let row = rows[idx];
        if row.p_farther > 0.0 {
            let keep = row.p_closer + row.p_equal;
            rows[idx] = if keep > 0.0 {
                Row {
                    p_closer: row.p_closer / keep,
                    p_equal: row.p_equal / keep,
                    p_farther: 0.0,
                    support: row.support,
                }
            } else {
                Row { p_closer: 1.0, p_equal: 0.0, p_farther: 0.0, support: 0 }
            };
        }
    }
    ensure_absorbing(d_max, &mut rows);

    MarkovModel::new(d_max, rows)
}

/// Replaces the rows of states that cannot reach absorption (distance 0)
/// with the absorbing pull. States are checked by backward closure from the
/// absorbing state over closer/equal/farther edges with positive mass.
fn ensure_absorbing(d_max: u32, rows: &mut [Row]) {
    let idx = |i: u32, x: usize| (i as usize - 1) * 3 + x;
    let mut can = vec![false; rows.len()];
    loop {
        let mut changed = false;
        for i in 1..=d_max {
            for x in 0..3 {
                let j = idx(i, x);
                if can[j] {
                    continue;
                }
                let row = rows[j];
                let via_closer = row.p_closer > 0.0 && (i == 1 || can[idx(i - 1, 0)]);
                let via_equal = row.p_equal > 0.0 && can[idx(i, 1)];
                let via_farther = row.p_farther > 0.0 && i < d_max && can[idx(i + 1, 2)];
                if via_closer || via_equal || via_farther {
                    can[j] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for (j, ok) in can.iter().enumerate() {
        if !ok {
            rows[j] = Row { p_closer: 1.0, p_equal: 0.0, p_farther: 0.0, support: 0 };
        }
    }
}

/// Cap on simulated steps, guarding degenerate chains.
pub const SIM_STEP_CAP: u64 = 1_000_000_000;

/// Walks the chain from `(start_i, start_x)` to absorption at distance 0;
/// returns the number of steps (saturating at [`SIM_STEP_CAP`]).
pub fn simulate_run<R: Rng>(
    model: &MarkovModel,
    start_i: u32,
    start_x: Gradient,
    rng: &mut R,
) -> u64 {
    assert!(start_i <= model.d_max(), "start beyond d_max");
    let (mut i, mut x) = (start_i, start_x);
    let mut steps = 0u64;
    while i > 0 && steps < SIM_STEP_CAP {
        steps += 1;
        let row = model.row(i, x);
        let u: f64 = rng.gen();
        if u < row.p_closer {
            i -= 1;
            x = Gradient::Closer;
        } else if u < row.p_closer + row.p_equal {
            x = Gradient::Equal;
        } else {
            i += 1;
            x = Gradient::Farther;
        }
    }
    steps
}

/// Model-predicted cost distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedCost {
    pub c_bar_pred: f64,
    /// Per-trial simulated step counts, in trial order.
    pub rld_pred: Vec<u64>,
}

/// Predicts the cost distribution: each trial starts the chain at the
/// distance of a fresh random local optimum (clamped to `d_max`) with a fair
/// closer/farther coin for the gradient.
pub fn predicted_cost(
    model: &MarkovModel,
    inst: &Instance,
    opt: &OptimalSet,
    trials: usize,
    master_seed: u64,
) -> PredictedCost {
    assert!(trials >= 1);
    let rld_pred = batch_map(trials, |k| {
        let mut rng = rng_from_seed(derive_seed(master_seed, k as u64));
        let s = random_local_optimum(inst, &mut rng);
        let start_i = opt.d_opt(s.bits()).min(model.d_max());
        let start_x = if rng.gen::<bool>() { Gradient::Closer } else { Gradient::Farther };
        simulate_run(model, start_i, start_x, &mut rng)
    });
    let c_bar_pred = rld_pred.iter().map(|&c| c as f64).sum::<f64>() / trials as f64;
    PredictedCost { c_bar_pred, rld_pred }
}

/// Mean simulated absorption time from fixed starting distance `i`, gradient
/// a fair closer/farther coin.
pub fn predicted_v(model: &MarkovModel, i: u32, trials: usize, master_seed: u64) -> f64 {
    assert!(trials >= 1);
    let steps = batch_map(trials, |k| {
        let mut rng = rng_from_seed(derive_seed(master_seed, k as u64));
        let start_x = if rng.gen::<bool>() { Gradient::Closer } else { Gradient::Farther };
        simulate_run(model, i, start_x, &mut rng)
    });
    steps.iter().map(|&c| c as f64).sum::<f64>() / trials as f64
}

/// Mean visited distance of the simulated chain, mirroring how
/// [`crate::landscape::mean_dtabu_opt`] samples real trajectories: trials
/// start at the distance of a fresh random local optimum (clamped, coin
/// gradient), record every step's distance until absorption, and restart
/// until `sample_cap` distances are recorded.
pub fn model_visit_mean(
    model: &MarkovModel,
    inst: &Instance,
    opt: &OptimalSet,
    sample_cap: usize,
    seed: u64,
) -> f64 {
    assert!(sample_cap >= 1);
    let mut rng = rng_from_seed(seed);
    let mut sum = 0u64;
    let mut count = 0usize;
    'outer: loop {
        let s = random_local_optimum(inst, &mut rng);
        let mut i = opt.d_opt(s.bits()).min(model.d_max());
        let mut x = if rng.gen::<bool>() { Gradient::Closer } else { Gradient::Farther };
        sum += i as u64;
        count += 1;
        if count == sample_cap {
            break;
        }
        let mut steps = 0u64;
        while i > 0 && steps < SIM_STEP_CAP {
            steps += 1;
            let row = model.row(i, x);
            let u: f64 = rng.gen();
            if u < row.p_closer {
                i -= 1;
                x = Gradient::Closer;
            } else if u < row.p_closer + row.p_equal {
                x = Gradient::Equal;
            } else {
                i += 1;
                x = Gradient::Farther;
            }
            sum += i as u64;
            count += 1;
            if count == sample_cap {
                break 'outer;
            }
        }
    }
    sum as f64 / count as f64
}
