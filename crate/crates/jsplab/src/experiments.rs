//! Experiment suites behind the command-line laboratory. Each driver runs
//! one measurement pipeline over prepared instances and returns a CSV table
//! with a stable schema plus a JSON summary that embeds the full
//! configuration; a rerun with the same inputs, parameters, and master seed
//! reproduces both byte for byte.

use crate::descent::steepest_descent;
use crate::exact::OptimalSet;
use crate::exec::batch_map;
use crate::instance::Instance;
use crate::landscape::{
    descent_distance_series, gt_construct, mean_dlopt_opt, GtMode, LandscapeError, Pdr,
};
use crate::markov::{estimate_model, predicted_cost, EstimationConfig, MarkovError};
use crate::rng::{derive_seed, rng_from_seed};
use crate::schedule::{random_semi_active, Orientation};
use crate::stats::{ks_vs_exponential, loglog_regression, mean_u64, ExpKsMethod, StatsError};
use crate::tabu::{solve_cost_stats, ts_run, CostStats, TabuConfig};
use rand::Rng;
use serde_json::{json, Value};
use thiserror::Error;

/// A prepared instance: named, parsed, and with its enumerated optimal set.
#[derive(Debug, Clone)]
pub struct LabInstance {
    pub id: String,
    pub inst: Instance,
    pub opt: OptimalSet,
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("no instances supplied")]
    EmptySet,
    #[error(
        "instance {id}: {censored} of {trials} trials hit the iteration cap; \
         raise the cap or drop the instance"
    )]
    Censored { id: String, censored: usize, trials: usize },
    #[error("instance {id}: {source}")]
    Estimation { id: String, source: MarkovError },
    #[error("instance {id}: {source}")]
    Sampling { id: String, source: LandscapeError },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// One suite's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteArtifact {
    /// Header line plus one row per measurement; schemas are fixed per suite.
    pub csv: String,
    /// Aggregate results, with the full configuration under `meta`.
    pub summary: Value,
}

fn meta(suite: &str, master_seed: u64, config: Value) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "suite": suite,
        "master_seed": master_seed,
        "config": config,
    })
}

fn tabu_json(c: TabuConfig) -> Value {
    json!({
        "l_min": c.l_min,
        "l_max": c.l_max,
        "resample_period": c.resample_period,
        "iteration_cap": c.iteration_cap,
        "operator": format!("{:?}", c.operator),
        "trap_walk_len": c.trap_walk_len,
    })
}

fn est_json(e: &EstimationConfig) -> Value {
    json!({
        "s_min": e.s_min,
        "s_max": e.s_max,
        "sample_interval": e.sample_interval,
        "iteration_budget": e.iteration_budget,
        "tabu": tabu_json(e.tabu),
    })
}

fn table(header: &str, rows: &[String]) -> String {
    let mut out = String::with_capacity(header.len() + 1 + rows.iter().map(|r| r.len() + 1).sum::<usize>());
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

fn complete_costs(id: &str, stats: &CostStats, trials: usize) -> Result<(f64, f64), SuiteError> {
    match (stats.c_bar(), stats.c_q2()) {
        (Some(c_bar), Some(c_q2)) => Ok((c_bar, c_q2)),
        _ => Err(SuiteError::Censored {
            id: id.to_owned(),
            censored: stats.censored(),
            trials,
        }),
    }
}

/// Actual-versus-predicted search cost: per instance, the measured cost
/// distribution over `trials` tabu runs, the estimated chain, and the
/// model's predicted mean cost over `sims` simulations.
///
/// CSV: `id,n,m,c_star,optima,c_bar,c_q2,d_lopt_opt,d_max,c_bar_pred`.
/// Summary: log10-log10 regression of actual on predicted mean cost plus
/// the fraction of instances with actual within a factor of 4 of predicted.
pub fn cost_model_suite(
    set: &[LabInstance],
    trials: usize,
    sims: usize,
    est: &EstimationConfig,
    lopt_samples: usize,
    master_seed: u64,
) -> Result<SuiteArtifact, SuiteError> {
    if set.is_empty() {
        return Err(SuiteError::EmptySet);
    }
    let mut rows = Vec::with_capacity(set.len());
    let mut actual = Vec::with_capacity(set.len());
    let mut predicted = Vec::with_capacity(set.len());
    let mut skipped: Vec<String> = Vec::new();
    for (idx, li) in set.iter().enumerate() {
        let s = derive_seed(master_seed, idx as u64);
        let stats = solve_cost_stats(&li.inst, li.opt.c_star(), trials, est.tabu, derive_seed(s, 1));
        let (c_bar, c_q2) = complete_costs(&li.id, &stats, trials)?;
        let dl = mean_dlopt_opt(&li.inst, &li.opt, lopt_samples, derive_seed(s, 2));
        // Instances where estimation exhausts its budget before coverage are
        // excluded from the regression and reported, not fatal.
        let model = match estimate_model(&li.inst, &li.opt, dl.mean, est, derive_seed(s, 3)) {
            Ok(model) => model,
            Err(MarkovError::CoverageFailure { .. }) => {
                skipped.push(li.id.clone());
                continue;
            }
            Err(source) => return Err(SuiteError::Estimation { id: li.id.clone(), source }),
        };
        let pred = predicted_cost(&model, &li.inst, &li.opt, sims, derive_seed(s, 4));
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{}",
            li.id,
            li.inst.n(),
            li.inst.m(),
            li.opt.c_star(),
            li.opt.len(),
            c_bar,
            c_q2,
            dl.mean,
            model.d_max(),
            pred.c_bar_pred,
        ));
        actual.push(c_bar);
        predicted.push(pred.c_bar_pred);
    }
    let reg = loglog_regression(&predicted, &actual)?;
    let mut within = 0usize;
    for (a, p) in actual.iter().zip(&predicted) {
        if (a / p).max(p / a) <= 4.0 {
            within += 1;
        }
    }
    let summary = json!({
        "meta": meta("cost-model", master_seed, json!({
            "trials": trials,
            "simulations": sims,
            "lopt_samples": lopt_samples,
            "estimation": est_json(est),
        })),
        "instances": set.len(),
        "estimated": actual.len(),
        "skipped": skipped,
        "r2": reg.r2,
        "slope": reg.slope,
        "intercept": reg.intercept,
        "within_factor_4": within as f64 / actual.len() as f64,
    });
    Ok(SuiteArtifact {
        csv: table("id,n,m,c_star,optima,c_bar,c_q2,d_lopt_opt,d_max,c_bar_pred", &rows),
        summary,
    })
}

fn exp_cdf(x: f64, mean: f64) -> f64 {
    1.0 - (-x / mean).exp()
}

/// Mean gap between the exponential CDF and the empirical CDF over the
/// lowest decile of the sample; positive when the run-length distribution
/// is short of mass in its left tail.
fn left_tail_deficit(samples: &[f64], mean: f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let k = (n / 10).max(1);
    (0..k)
        .map(|i| exp_cdf(sorted[i], mean) - (i + 1) as f64 / n as f64)
        .sum::<f64>()
        / k as f64
}

/// Run-length distributions against the equal-mean exponential. When
/// `synthetic_draws` is given the comparison draws a synthetic exponential
/// sample of that size and runs the two-sample test; otherwise it is the
/// analytic one-sample test.
///
/// CSV: `id,c_star,trials,c_bar,c_q2,d_stat,p_value,reject_01,reject_05,left_tail_deficit`
/// (rejections are 0/1 at p ≤ 0.01 and p ≤ 0.05). Summary: rejection
/// fractions at both levels.
pub fn rld_suite(
    set: &[LabInstance],
    trials: usize,
    tabu: TabuConfig,
    synthetic_draws: Option<usize>,
    master_seed: u64,
) -> Result<SuiteArtifact, SuiteError> {
    if set.is_empty() {
        return Err(SuiteError::EmptySet);
    }
    let mut rows = Vec::with_capacity(set.len());
    let (mut rej01, mut rej05) = (0usize, 0usize);
    for (idx, li) in set.iter().enumerate() {
        let s = derive_seed(master_seed, idx as u64);
        let stats = solve_cost_stats(&li.inst, li.opt.c_star(), trials, tabu, derive_seed(s, 1));
        let (c_bar, c_q2) = complete_costs(&li.id, &stats, trials)?;
        let lengths: Vec<f64> = stats.samples().iter().map(|&v| v as f64).collect();
        let method = match synthetic_draws {
            Some(draws) => ExpKsMethod::Synthetic { draws, seed: derive_seed(s, 2) },
            None => ExpKsMethod::Analytic,
        };
        let ks = ks_vs_exponential(&lengths, c_bar, method)?;
        let deficit = left_tail_deficit(&lengths, c_bar);
        rej01 += usize::from(ks.p_value <= 0.01);
        rej05 += usize::from(ks.p_value <= 0.05);
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{}",
            li.id,
            li.opt.c_star(),
            trials,
            c_bar,
            c_q2,
            ks.d_stat,
            ks.p_value,
            u8::from(ks.p_value <= 0.01),
            u8::from(ks.p_value <= 0.05),
            deficit,
        ));
    }
    let summary = json!({
        "meta": meta("rld", master_seed, json!({
            "trials": trials,
            "tabu": tabu_json(tabu),
            "method": match synthetic_draws {
                Some(draws) => json!({"synthetic_draws": draws}),
                None => json!("analytic"),
            },
        })),
        "instances": set.len(),
        "fraction_rejected_01": rej01 as f64 / set.len() as f64,
        "fraction_rejected_05": rej05 as f64 / set.len() as f64,
    });
    Ok(SuiteArtifact {
        csv: table(
            "id,c_star,trials,c_bar,c_q2,d_stat,p_value,reject_01,reject_05,left_tail_deficit",
            &rows,
        ),
        summary,
    })
}

/// Per-iteration descent-distance statistics along tabu runs, with the
/// random-semi-active baseline.
///
/// CSV: `id,c_star,length,median,mean,stddev,max,random_mean`. Summary:
/// set-level means and the random-to-tabu mean ratio.
pub fn descent_suite(
    set: &[LabInstance],
    series_len: usize,
    tabu: TabuConfig,
    master_seed: u64,
) -> Result<SuiteArtifact, SuiteError> {
    if set.is_empty() {
        return Err(SuiteError::EmptySet);
    }
    let mut rows = Vec::with_capacity(set.len());
    let (mut mean_sum, mut random_sum) = (0.0f64, 0.0f64);
    for (idx, li) in set.iter().enumerate() {
        let s = derive_seed(master_seed, idx as u64);
        let ds = descent_distance_series(&li.inst, li.opt.c_star(), series_len, tabu, s);
        mean_sum += ds.mean;
        random_sum += ds.random_mean;
        rows.push(format!(
            "{},{},{},{},{},{},{},{}",
            li.id,
            li.opt.c_star(),
            series_len,
            ds.median,
            ds.mean,
            ds.stddev,
            ds.max,
            ds.random_mean,
        ));
    }
    let n = set.len() as f64;
    let summary = json!({
        "meta": meta("descent", master_seed, json!({
            "series_len": series_len,
            "tabu": tabu_json(tabu),
        })),
        "instances": set.len(),
        "mean_descent_distance": mean_sum / n,
        "mean_random_descent_distance": random_sum / n,
        "random_to_tabu_ratio": if mean_sum > 0.0 { json!(random_sum / mean_sum) } else { Value::Null },
    });
    Ok(SuiteArtifact {
        csv: table("id,c_star,length,median,mean,stddev,max,random_mean", &rows),
        summary,
    })
}

/// Search cost and model size across tabu tenure intervals. Each interval
/// replaces `l_min`/`l_max` in the base configuration; costs and a freshly
/// estimated model are measured per instance and interval.
///
/// CSV: `id,l_min,l_max,c_bar,c_q2,d_max`. Summary: per-interval means in
/// the given order plus monotonicity flags across that order.
pub fn tenure_suite(
    set: &[LabInstance],
    intervals: &[(usize, usize)],
    trials: usize,
    est: &EstimationConfig,
    lopt_samples: usize,
    master_seed: u64,
) -> Result<SuiteArtifact, SuiteError> {
    if set.is_empty() {
        return Err(SuiteError::EmptySet);
    }
    assert!(!intervals.is_empty(), "at least one tenure interval");
    let mut rows = Vec::with_capacity(set.len() * intervals.len());
    let mut sums = vec![(0.0f64, 0.0f64, 0.0f64); intervals.len()]; // (c_bar, c_q2, d_max)
    let mut skipped: Vec<String> = Vec::new();
    let mut first_failure: Option<(String, MarkovError)> = None;
    let mut used = 0usize;
    'instances: for (idx, li) in set.iter().enumerate() {
        let s = derive_seed(master_seed, idx as u64);
        // Buffered so an instance whose estimation fails coverage at any
        // interval drops out of the sweep entirely, keeping the per-interval
        // means over a common instance set.
        let mut inst_rows = Vec::with_capacity(intervals.len());
        let mut inst_sums = vec![(0.0f64, 0.0f64, 0.0f64); intervals.len()];
        for (j, &(l_min, l_max)) in intervals.iter().enumerate() {
            let tabu = TabuConfig { l_min, l_max, ..est.tabu };
            let est_j = EstimationConfig { tabu, ..*est };
            let sj = derive_seed(s, j as u64);
            let stats = solve_cost_stats(&li.inst, li.opt.c_star(), trials, tabu, derive_seed(sj, 1));
            let (c_bar, c_q2) = complete_costs(&li.id, &stats, trials)?;
            let dl = mean_dlopt_opt(&li.inst, &li.opt, lopt_samples, derive_seed(sj, 2));
            let model = match estimate_model(&li.inst, &li.opt, dl.mean, &est_j, derive_seed(sj, 3)) {
                Ok(model) => model,
                Err(e @ MarkovError::CoverageFailure { .. }) => {
                    skipped.push(li.id.clone());
                    if first_failure.is_none() {
                        first_failure = Some((li.id.clone(), e));
                    }
                    continue 'instances;
                }
                Err(source) => return Err(SuiteError::Estimation { id: li.id.clone(), source }),
            };
            inst_sums[j].0 += c_bar;
            inst_sums[j].1 += c_q2;
            inst_sums[j].2 += model.d_max() as f64;
            inst_rows.push(format!(
                "{},{},{},{},{},{}",
                li.id, l_min, l_max, c_bar, c_q2, model.d_max(),
            ));
        }
        rows.extend(inst_rows);
        for (acc, add) in sums.iter_mut().zip(&inst_sums) {
            acc.0 += add.0;
            acc.1 += add.1;
            acc.2 += add.2;
        }
        used += 1;
    }
    if used == 0 {
        let (id, source) = first_failure.expect("no instances used implies a recorded failure");
        return Err(SuiteError::Estimation { id, source });
    }
    let n = used as f64;
    let per_interval: Vec<Value> = intervals
        .iter()
        .zip(&sums)
        .map(|(&(l_min, l_max), &(cb, cq, dm))| {
            json!({
                "l_min": l_min,
                "l_max": l_max,
                "mean_c_bar": cb / n,
                "mean_c_q2": cq / n,
                "mean_d_max": dm / n,
            })
        })
        .collect();
    let monotone = |pick: fn(&(f64, f64, f64)) -> f64| sums.windows(2).all(|w| pick(&w[0]) <= pick(&w[1]));
    let summary = json!({
        "meta": meta("tenure", master_seed, json!({
            "trials": trials,
            "lopt_samples": lopt_samples,
            "intervals": intervals.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
            "estimation": est_json(est),
        })),
        "instances": set.len(),
        "estimated": used,
        "skipped": skipped,
        "intervals": per_interval,
        "c_bar_monotone": monotone(|t| t.0),
        "d_max_monotone": monotone(|t| t.2),
    });
    Ok(SuiteArtifact { csv: table("id,l_min,l_max,c_bar,c_q2,d_max", &rows), summary })
}

/// Initialization methods compared in the init suite: the random
/// semi-active baseline plus active-schedule dispatching constructions.
pub const INIT_METHODS: [(&str, Option<Pdr>); 6] = [
    ("rnd_semi", None),
    ("fcfs", Some(Pdr::Fcfs)),
    ("lrm", Some(Pdr::Lrm)),
    ("mwkr", Some(Pdr::Mwkr)),
    ("spt", Some(Pdr::Spt)),
    ("gt_random", Some(Pdr::Random)),
];

fn init_start<R: Rng>(inst: &Instance, which: Option<Pdr>, rng: &mut R) -> Orientation {
    match which {
        None => random_semi_active(inst, rng),
        Some(pdr) => gt_construct(inst, pdr, GtMode::Active, rng),
    }
}

/// Effect of the initialization method on distance to the nearest optimum
/// and on search cost: per instance and method, the mean `d_opt` of local
/// optima descended from method-generated starts (`descents` of them) and
/// the cost distribution of tabu runs initiated at method-generated
/// solutions.
///
/// CSV: `id,method,d_lopt_opt,c_bar,c_q2`. Summary: per-method means and
/// the percent difference in mean `c_q2` against the `rnd_semi` baseline.
pub fn init_suite(
    set: &[LabInstance],
    trials: usize,
    descents: usize,
    tabu: TabuConfig,
    master_seed: u64,
) -> Result<SuiteArtifact, SuiteError> {
    if set.is_empty() {
        return Err(SuiteError::EmptySet);
    }
    let mut rows = Vec::with_capacity(set.len() * INIT_METHODS.len());
    let mut sums = vec![(0.0f64, 0.0f64); INIT_METHODS.len()]; // (d_lopt_opt, c_q2)
    for (idx, li) in set.iter().enumerate() {
        let s = derive_seed(master_seed, idx as u64);
        for (j, &(name, pdr)) in INIT_METHODS.iter().enumerate() {
            let sj = derive_seed(s, j as u64);
            let dseed = derive_seed(sj, 1);
            let dists = batch_map(descents, |k| {
                let mut rng = rng_from_seed(derive_seed(dseed, k as u64));
                let start = init_start(&li.inst, pdr, &mut rng);
                let lopt = steepest_descent(&li.inst, &start, &mut rng);
                li.opt.d_opt(lopt.bits()) as u64
            });
            let d_mean = mean_u64(&dists);
            let tseed = derive_seed(sj, 2);
            let runs = batch_map(trials, |k| {
                let mut rng = rng_from_seed(derive_seed(tseed, k as u64));
                let start = init_start(&li.inst, pdr, &mut rng);
                ts_run(&li.inst, &start, li.opt.c_star(), tabu, &mut rng).outcome
            });
            let stats = CostStats { runs };
            let (c_bar, c_q2) = complete_costs(&li.id, &stats, trials)?;
            sums[j].0 += d_mean;
            sums[j].1 += c_q2;
            rows.push(format!("{},{},{},{},{}", li.id, name, d_mean, c_bar, c_q2));
        }
    }
    let n = set.len() as f64;
    let base_c_q2 = sums[0].1 / n;
    let methods: Vec<Value> = INIT_METHODS
        .iter()
        .zip(&sums)
        .map(|(&(name, _), &(d, cq))| {
            let mean_cq = cq / n;
            json!({
                "method": name,
                "mean_d_lopt_opt": d / n,
                "mean_c_q2": mean_cq,
                "pct_diff_c_q2": if base_c_q2 > 0.0 {
                    json!((mean_cq - base_c_q2) / base_c_q2 * 100.0)
                } else {
                    Value::Null
                },
            })
        })
        .collect();
    let summary = json!({
        "meta": meta("init", master_seed, json!({
            "trials": trials,
            "descents": descents,
            "tabu": tabu_json(tabu),
        })),
        "instances": set.len(),
        "methods": methods,
    });
    Ok(SuiteArtifact { csv: table("id,method,d_lopt_opt,c_bar,c_q2", &rows), summary })
}

/// Difficulty across instance classes (e.g. random, workflow, flowshop):
/// per instance, search cost, landscape distance, and model size; per
/// class, the means and their ordering.
///
/// CSV: `class,id,c_star,optima,c_bar,c_q2,d_lopt_opt,d_max`. Summary:
/// per-class means in the given order, the consecutive mean-`c_q2` ratios,
/// and whether the classes are strictly ordered by mean `c_q2`.
pub fn structure_suite(
    classes: &[(String, Vec<LabInstance>)],
    trials: usize,
    est: &EstimationConfig,
    lopt_samples: usize,
    master_seed: u64,
) -> Result<SuiteArtifact, SuiteError> {
    if classes.is_empty() || classes.iter().any(|(_, set)| set.is_empty()) {
        return Err(SuiteError::EmptySet);
    }
    let mut rows = Vec::new();
    let mut per_class: Vec<(String, usize, f64, f64, f64, f64)> = Vec::new();
    let mut skipped: Vec<String> = Vec::new();
    let mut first_failure: Option<(String, MarkovError)> = None;
    let mut global_idx = 0u64;
    for (class, set) in classes {
        let (mut cb_sum, mut cq_sum, mut dm_sum, mut dl_sum) = (0.0f64, 0.0, 0.0, 0.0);
        let mut used = 0usize;
        for li in set {
            let s = derive_seed(master_seed, global_idx);
            global_idx += 1;
            let stats =
                solve_cost_stats(&li.inst, li.opt.c_star(), trials, est.tabu, derive_seed(s, 1));
            let (c_bar, c_q2) = complete_costs(&li.id, &stats, trials)?;
            let dl = mean_dlopt_opt(&li.inst, &li.opt, lopt_samples, derive_seed(s, 2));
            let model = match estimate_model(&li.inst, &li.opt, dl.mean, est, derive_seed(s, 3)) {
                Ok(model) => model,
                Err(e @ MarkovError::CoverageFailure { .. }) => {
                    skipped.push(li.id.clone());
                    if first_failure.is_none() {
                        first_failure = Some((li.id.clone(), e));
                    }
                    continue;
                }
                Err(source) => return Err(SuiteError::Estimation { id: li.id.clone(), source }),
            };
            cb_sum += c_bar;
            cq_sum += c_q2;
            dm_sum += model.d_max() as f64;
            dl_sum += dl.mean;
            used += 1;
            rows.push(format!(
                "{},{},{},{},{},{},{},{}",
                class,
                li.id,
                li.opt.c_star(),
                li.opt.len(),
                c_bar,
                c_q2,
                dl.mean,
                model.d_max(),
            ));
        }
        if used == 0 {
            let (id, source) = first_failure.expect("empty class means every estimation failed");
            return Err(SuiteError::Estimation { id, source });
        }
        let n = used as f64;
        per_class.push((class.clone(), used, cb_sum / n, cq_sum / n, dm_sum / n, dl_sum / n));
    }
    let class_values: Vec<Value> = per_class
        .iter()
        .map(|(class, count, cb, cq, dm, dl)| {
            json!({
                "class": class,
                "count": count,
                "mean_c_bar": cb,
                "mean_c_q2": cq,
                "mean_d_max": dm,
                "mean_d_lopt_opt": dl,
            })
        })
        .collect();
    let ratios: Vec<Value> = per_class
        .windows(2)
        .map(|w| if w[0].3 > 0.0 { json!(w[1].3 / w[0].3) } else { Value::Null })
        .collect();
    let ordered = per_class.windows(2).all(|w| w[0].3 < w[1].3);
    let summary = json!({
        "meta": meta("structure", master_seed, json!({
            "trials": trials,
            "lopt_samples": lopt_samples,
            "estimation": est_json(est),
        })),
        "classes": class_values,
        "skipped": skipped,
        "c_q2_ratios": ratios,
        "ordered_by_c_q2": ordered,
    });
    Ok(SuiteArtifact {
        csv: table("class,id,c_star,optima,c_bar,c_q2,d_lopt_opt,d_max", &rows),
        summary,
    })
}
