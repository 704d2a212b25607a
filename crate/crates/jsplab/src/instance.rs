//! Problem instances: `n` jobs, each visiting all `m` machines once along a
//! per-job routing, with integer durations.
//!
//! Jobs and machines are 1-indexed throughout the crate; the 0-indexed
//! OR-Library text format is converted at the parse/serialize boundary.
//! Operations are also addressed by a flat id (see [`Instance::op`]) used by
//! the schedule evaluator and everything downstream.

use crate::rng::{rng_from_seed, stable_hash};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based job id.
pub type Job = usize;
/// 1-based machine id.
pub type Machine = usize;
/// Flat operation id in `0..n*m`: `(job-1)*m + position`.
pub type OpId = usize;
/// Operation duration.
pub type Dur = u32;
/// Schedule time / makespan.
pub type Time = u32;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid instance: {0}")]
    Validation(String),
}

/// An `n`-job, `m`-machine instance.
///
/// `routing[i][p]` is the machine (1-based) that job `i+1` visits at position
/// `p`; each row is a permutation of `1..=m`. `duration[i][p]` is the length
/// of that operation. `wf` and `seed` record how a generated instance was
/// built (workflow partition count and generator seed) and round-trip through
/// the native JSON format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct Instance {
    n: usize,
    m: usize,
    routing: Vec<Vec<Machine>>,
    duration: Vec<Vec<Dur>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    wf: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    seed: Option<u64>,
    // Derived lookup tables, rebuilt on construction and skipped by serde.
    #[serde(skip)]
    pos_on: Vec<Vec<usize>>, // [job-1][machine-1] -> routing position
    #[serde(skip)]
    op_machine: Vec<Machine>, // [op id] -> machine
    #[serde(skip)]
    op_dur: Vec<Dur>, // [op id] -> duration
}

/// Serde mirror of [`Instance`] without the derived tables.
#[derive(Deserialize)]
struct RawInstance {
    n: usize,
    m: usize,
    routing: Vec<Vec<Machine>>,
    duration: Vec<Vec<Dur>>,
    #[serde(default)]
    wf: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
}

impl TryFrom<RawInstance> for Instance {
    type Error = InstanceError;
    fn try_from(raw: RawInstance) -> Result<Self, Self::Error> {
        Instance::new(raw.n, raw.m, raw.routing, raw.duration, raw.wf, raw.seed)
    }
}

impl Instance {
    /// Validates and builds an instance; `wf`/`seed` are optional metadata.
    pub fn new(
        n: usize,
        m: usize,
        routing: Vec<Vec<Machine>>,
        duration: Vec<Vec<Dur>>,
        wf: Option<usize>,
        seed: Option<u64>,
    ) -> Result<Self, InstanceError> {
        let fail = |msg: String| Err(InstanceError::Validation(msg));
        if n == 0 || m == 0 {
            return fail(format!("degenerate shape {n}x{m}"));
        }
        if routing.len() != n || duration.len() != n {
            return fail(format!(
                "expected {n} routing and duration rows, got {} and {}",
                routing.len(),
                duration.len()
            ));
        }
        for (i, row) in routing.iter().enumerate() {
            if row.len() != m || duration[i].len() != m {
                return fail(format!("job {}: row length != {m}", i + 1));
            }
            let mut seen = vec![false; m + 1];
            for &k in row {
                if k < 1 || k > m || seen[k] {
                    return fail(format!("job {}: routing is not a permutation of 1..={m}", i + 1));
                }
                seen[k] = true;
            }
            if duration[i].iter().any(|&d| d == 0) {
                return fail(format!("job {}: zero-length operation", i + 1));
            }
        }
        if let Some(wf) = wf {
            if wf == 0 || m % wf != 0 {
                return fail(format!("wf={wf} does not partition {m} machines evenly"));
            }
            // Each job must visit block b's machines within block b's positions.
            let bs = m / wf;
            for (i, row) in routing.iter().enumerate() {
                for (p, &k) in row.iter().enumerate() {
                    if (k - 1) / bs != p / bs {
                        return fail(format!(
                            "job {}: machine {k} at position {p} violates the wf={wf} block structure",
                            i + 1
                        ));
                    }
                }
            }
        }
        let mut pos_on = vec![vec![0usize; m]; n];
        let mut op_machine = vec![0usize; n * m];
        let mut op_dur = vec![0u32; n * m];
        for i in 0..n {
            for p in 0..m {
                let k = routing[i][p];
                pos_on[i][k - 1] = p;
                op_machine[i * m + p] = k;
                op_dur[i * m + p] = duration[i][p];
            }
        }
        Ok(Instance { n, m, routing, duration, wf, seed, pos_on, op_machine, op_dur })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    /// Total operation count `n*m`.
    pub fn ops(&self) -> usize {
        self.n * self.m
    }
    pub fn wf(&self) -> Option<usize> {
        self.wf
    }
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Flat id of the operation of `job` at routing `position`.
    pub fn op(&self, job: Job, position: usize) -> OpId {
        debug_assert!(job >= 1 && job <= self.n && position < self.m);
        (job - 1) * self.m + position
    }
    pub fn job_of(&self, op: OpId) -> Job {
        op / self.m + 1
    }
    pub fn position_of(&self, op: OpId) -> usize {
        op % self.m
    }
    pub fn machine_of(&self, op: OpId) -> Machine {
        self.op_machine[op]
    }
    pub fn dur_of(&self, op: OpId) -> Dur {
        self.op_dur[op]
    }
    /// Machine visited by `job` at `position`.
    pub fn machine_at(&self, job: Job, position: usize) -> Machine {
        self.routing[job - 1][position]
    }
    pub fn dur_at(&self, job: Job, position: usize) -> Dur {
        self.duration[job - 1][position]
    }
    /// Routing position at which `job` visits `machine`.
    pub fn position_on(&self, job: Job, machine: Machine) -> usize {
        self.pos_on[job - 1][machine - 1]
    }
    /// Flat id of the operation of `job` on `machine`.
    pub fn op_on(&self, job: Job, machine: Machine) -> OpId {
        self.op(job, self.position_on(job, machine))
    }

    /// Content hash over shape, routings, and durations (metadata excluded);
    /// keys derived artifacts such as optimal-set sidecars.
    pub fn content_hash(&self) -> u64 {
        let mut words: Vec<u64> = vec![self.n as u64, self.m as u64];
        for i in 0..self.n {
            for p in 0..self.m {
                words.push((self.routing[i][p] as u64) << 32 | self.duration[i][p] as u64);
            }
        }
        stable_hash(words)
    }

    /// Draws a random instance: durations i.i.d. uniform on `[lb, ub]`, and
    /// each routing the concatenation of independent uniform shuffles of the
    /// `wf` contiguous machine blocks.
    ///
    /// `wf = 1` gives fully random routings; `wf = m` forces every job
    /// through machines `1..=m` in that fixed order (flow-shop structure).
    pub fn generate(
        n: usize,
        m: usize,
        wf: usize,
        lb: Dur,
        ub: Dur,
        seed: u64,
    ) -> Result<Self, InstanceError> {
        if wf == 0 || m == 0 || m % wf != 0 {
            return Err(InstanceError::Validation(format!(
                "wf={wf} does not partition {m} machines evenly"
            )));
        }
        if lb == 0 || lb > ub {
            return Err(InstanceError::Validation(format!("bad duration range [{lb}, {ub}]")));
        }
        let mut rng = rng_from_seed(seed);
        let bs = m / wf;
        let mut routing = Vec::with_capacity(n);
        let mut duration = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = Vec::with_capacity(m);
            for b in 0..wf {
                let mut block: Vec<Machine> = (b * bs + 1..=(b + 1) * bs).collect();
                // Fisher-Yates, explicit so the draw sequence is pinned.
                for i in (1..block.len()).rev() {
                    let j = rng.gen_range(0..=i);
                    block.swap(i, j);
                }
                row.extend(block);
            }
            routing.push(row);
            duration.push((0..m).map(|_| rng.gen_range(lb..=ub)).collect());
        }
        Instance::new(n, m, routing, duration, Some(wf), Some(seed))
    }

    /// Parses the OR-Library text format: a `n m` header line, then one line
    /// per job of `m` whitespace-separated `machine duration` pairs with
    /// 0-indexed machines.
    pub fn parse_orlib(text: &str) -> Result<Self, InstanceError> {
        let mut tokens = text
            .lines()
            .enumerate()
            .flat_map(|(ln, l)| l.split_whitespace().map(move |t| (ln + 1, t)));
        let mut next_usize = |what: &str| -> Result<(usize, usize), InstanceError> {
            let (line, tok) = tokens
                .next()
                .ok_or_else(|| InstanceError::Parse { line: 0, msg: format!("missing {what}") })?;
            let v = tok.parse::<usize>().map_err(|_| InstanceError::Parse {
                line,
                msg: format!("expected {what}, found {tok:?}"),
            })?;
            Ok((line, v))
        };
        let (_, n) = next_usize("job count")?;
        let (_, m) = next_usize("machine count")?;
        let mut routing = Vec::with_capacity(n);
        let mut duration = Vec::with_capacity(n);
        for job in 1..=n {
            let mut r = Vec::with_capacity(m);
            let mut d = Vec::with_capacity(m);
            for _ in 0..m {
                let (line, mach) = next_usize(&format!("machine index for job {job}"))?;
                if mach >= m {
                    return Err(InstanceError::Parse {
                        line,
                        msg: format!("machine index {mach} out of range 0..{m}"),
                    });
                }
                let (_, dur) = next_usize(&format!("duration for job {job}"))?;
                r.push(mach + 1);
                d.push(dur as Dur);
            }
            routing.push(r);
            duration.push(d);
        }
        if let Some((line, tok)) = tokens.next() {
            return Err(InstanceError::Parse { line, msg: format!("trailing token {tok:?}") });
        }
        Instance::new(n, m, routing, duration, None, None)
    }

    /// Serializes to the OR-Library text format (0-indexed machines).
    pub fn to_orlib(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.m);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.m)
                .map(|p| format!("{} {}", self.routing[i][p] - 1, self.duration[i][p]))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Serializes to the native JSON format (`n`, `m`, `routing`, `duration`,
    /// plus `wf`/`seed` when recorded).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serialization");
        s.push('\n');
        s
    }

    /// Parses the native JSON format, re-validating all invariants.
    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        serde_json::from_str(text)
            .map_err(|e| InstanceError::Validation(format!("native-json: {e}")))
    }
}
