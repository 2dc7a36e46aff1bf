use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::log::{fmt_sig6, sig6, LogError};
use super::metrics::TrialResult;
use super::stats::{mean, sign_test, std_dev};
use super::trial::{mix_seed, run_trial, SystemConfig, TrialConfig, TrialDiagnostics, TrialError};
use crate::human::{BehaviorParams, Direction, HumanParams};
use crate::strategies::Strategy;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub subjects: usize,
    /// Trials per subject and strategy, alternating FWD and BWD.
    pub trials: usize,
    /// kg
    pub mass_mean: f64,
    pub mass_std: f64,
    /// m
    pub height_mean: f64,
    pub height_std: f64,
    /// Truncation of the Gaussian draws, in standard deviations.
    pub truncation: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Subject {
    pub id: usize,
    pub mass: f64,
    pub height: f64,
}

fn truncated(rng: &mut ChaCha8Rng, mean: f64, std: f64, k: f64) -> f64 {
    if std == 0.0 {
        return mean;
    }
    let n = Normal::new(mean, std).expect("finite std");
    loop {
        let x = n.sample(rng);
        if (x - mean).abs() <= k * std {
            return x;
        }
    }
}

/// Seeded subjects; values are rounded to six significant digits so that
/// persisted tables reproduce exactly.
pub fn generate_population(spec: &PopulationSpec) -> Vec<Subject> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.subjects)
        .map(|id| {
            let mass = sig6(truncated(&mut rng, spec.mass_mean, spec.mass_std, spec.truncation));
            let height = sig6(truncated(&mut rng, spec.height_mean, spec.height_std, spec.truncation));
            Subject { id, mass, height }
        })
        .collect()
}

pub fn trial_direction(trial: usize) -> Direction {
    if trial.is_multiple_of(2) {
        Direction::Fwd
    } else {
        Direction::Bwd
    }
}

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub subject: Subject,
    pub strategy: Strategy,
    pub trial: usize,
    pub direction: Direction,
    pub seed: u64,
    pub result: TrialResult,
    pub diagnostics: TrialDiagnostics,
    pub log: super::log::TrialLog,
}

impl TrialRecord {
    pub fn file_name(&self) -> String {
        format!("s{:02}_{}_t{}_{}.csv", self.subject.id, self.strategy.name(), self.trial, self.direction.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    TimeOutside,
    MaxDistance,
    ForceX,
    ForceZ,
}

impl Index {
    pub const ALL: [Index; 4] = [Index::TimeOutside, Index::MaxDistance, Index::ForceX, Index::ForceZ];

    pub fn name(self) -> &'static str {
        match self {
            Index::TimeOutside => "dt_out",
            Index::MaxDistance => "d_max",
            Index::ForceX => "f_max_x",
            Index::ForceZ => "f_max_z",
        }
    }

    /// Value in table units: s, cm, % of body weight.
    pub fn value(self, r: &TrialResult) -> Option<f64> {
        match self {
            Index::TimeOutside => r.dt_out,
            Index::MaxDistance => r.d_max.map(|d| d * 100.0),
            Index::ForceX => Some(r.f_max_x),
            Index::ForceZ => Some(r.f_max_z),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        Self { mean: mean(xs), std: std_dev(xs), n: xs.len() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub strategy: Strategy,
    pub direction: Direction,
    pub trials: usize,
    pub failed: usize,
    /// Indexed like [`Index::ALL`].
    pub stats: [Stat; 4],
}

impl AggregateRow {
    pub fn stat(&self, index: Index) -> &Stat {
        &self.stats[Index::ALL.iter().position(|i| *i == index).unwrap()]
    }

    pub fn failure_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failed as f64 / self.trials as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignTestRow {
    pub direction: Direction,
    pub index: Index,
    pub a: Strategy,
    pub b: Strategy,
    /// Subjects with mean(a) > mean(b).
    pub greater: usize,
    pub less: usize,
    pub p_value: f64,
}

#[derive(Clone, Debug)]
pub struct Campaign {
    pub subjects: Vec<Subject>,
    pub records: Vec<TrialRecord>,
    pub aggregate: Vec<AggregateRow>,
    pub sign_tests: Vec<SignTestRow>,
}

pub const TABLE_ORDER: [(Direction, Strategy); 6] = [
    (Direction::Fwd, Strategy::Hwa),
    (Direction::Fwd, Strategy::Fsa),
    (Direction::Fwd, Strategy::Mba),
    (Direction::Bwd, Strategy::Hwa),
    (Direction::Bwd, Strategy::Fsa),
    (Direction::Bwd, Strategy::Mba),
];

/// Means over the trials in which each index is defined (failed trials carry
/// no time or distance index).
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    TABLE_ORDER
        .iter()
        .map(|&(direction, strategy)| {
            let rs: Vec<&TrialRecord> =
                records.iter().filter(|r| r.strategy == strategy && r.direction == direction).collect();
            let stats = Index::ALL.map(|ix| {
                let xs: Vec<f64> = rs.iter().filter_map(|r| ix.value(&r.result)).collect();
                Stat::of(&xs)
            });
            AggregateRow {
                strategy,
                direction,
                trials: rs.len(),
                failed: rs.iter().filter(|r| r.result.failed).count(),
                stats,
            }
        })
        .collect()
}

/// Per-subject mean of an index for one strategy and direction.
pub fn subject_means(
    records: &[TrialRecord],
    strategy: Strategy,
    direction: Direction,
    index: Index,
) -> BTreeMap<usize, f64> {
    let mut acc: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.strategy == strategy && r.direction == direction) {
        if let Some(v) = index.value(&r.result) {
            acc.entry(r.subject.id).or_default().push(v);
        }
    }
    acc.into_iter().filter_map(|(k, v)| mean(&v).map(|m| (k, m))).collect()
}

pub fn paired_sign_test(
    records: &[TrialRecord],
    direction: Direction,
    index: Index,
    a: Strategy,
    b: Strategy,
) -> SignTestRow {
    let ma = subject_means(records, a, direction, index);
    let mb = subject_means(records, b, direction, index);
    let diffs: Vec<f64> = ma.iter().filter_map(|(k, va)| mb.get(k).map(|vb| va - vb)).collect();
    SignTestRow {
        direction,
        index,
        a,
        b,
        greater: diffs.iter().filter(|d| **d > 0.0).count(),
        less: diffs.iter().filter(|d| **d < 0.0).count(),
        p_value: sign_test(&diffs),
    }
}

fn all_sign_tests(records: &[TrialRecord]) -> Vec<SignTestRow> {
    let pairs = [(Strategy::Fsa, Strategy::Mba), (Strategy::Fsa, Strategy::Hwa), (Strategy::Mba, Strategy::Hwa)];
    let mut out = Vec::new();
    for direction in [Direction::Fwd, Direction::Bwd] {
        for index in Index::ALL {
            for (a, b) in pairs {
                out.push(paired_sign_test(records, direction, index, a, b));
            }
        }
    }
    out
}

pub struct TrialSpec {
    pub subject: Subject,
    pub strategy: Strategy,
    pub trial: usize,
    pub seed: u64,
}

pub fn trial_specs(spec: &PopulationSpec, subjects: &[Subject]) -> Vec<TrialSpec> {
    let mut out = Vec::new();
    for s in subjects {
        for (k, strategy) in Strategy::ALL.iter().enumerate() {
            for trial in 0..spec.trials {
                let id = ((s.id * 3 + k) * spec.trials + trial) as u64;
                out.push(TrialSpec { subject: *s, strategy: *strategy, trial, seed: mix_seed(spec.seed, id + 1) });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignSetup {
    pub population: PopulationSpec,
    pub system: SystemConfig,
    pub behavior: BehaviorParams,
    pub dt: f64,
    pub duration: f64,
}

impl CampaignSetup {
    pub fn trial_config(&self, subject: &Subject, strategy: Strategy, direction: Direction, seed: u64) -> TrialConfig {
        TrialConfig {
            strategy,
            direction,
            human: HumanParams::from_anthropometry(
                subject.mass,
                subject.height,
                &self.system.anthropometry,
                self.behavior.voluntary_ratio,
            ),
            behavior: self.behavior,
            seed,
            dt: self.dt,
            duration: self.duration,
            system: self.system.clone(),
            region: None,
        }
    }
}

pub fn run_campaign(setup: &CampaignSetup) -> Result<Campaign, TrialError> {
    let subjects = generate_population(&setup.population);
    run_campaign_with(setup, subjects)
}

/// Runs every trial for the given subjects; results are ordered by trial id.
pub fn run_campaign_with(setup: &CampaignSetup, subjects: Vec<Subject>) -> Result<Campaign, TrialError> {
    let specs = trial_specs(&setup.population, &subjects);
    let records: Result<Vec<TrialRecord>, TrialError> = specs
        .par_iter()
        .map(|ts| {
            let direction = trial_direction(ts.trial);
            let cfg = setup.trial_config(&ts.subject, ts.strategy, direction, ts.seed);
            let out = run_trial(&cfg)?;
            Ok(TrialRecord {
                subject: ts.subject,
                strategy: ts.strategy,
                trial: ts.trial,
                direction,
                seed: ts.seed,
                result: out.result,
                diagnostics: out.diagnostics,
                log: out.log,
            })
        })
        .collect();
    let records = records?;
    let aggregate = aggregate(&records);
    let sign_tests = all_sign_tests(&records);
    Ok(Campaign { subjects, records, aggregate, sign_tests })
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig6).unwrap_or_default()
}

pub const AGGREGATE_HEADER: [&str; 10] =
    ["strategy", "direction", "dt_mean", "dt_std", "d_mean", "d_std", "fx_mean", "fx_std", "fz_mean", "fz_std"];

pub fn write_aggregate<W: Write>(rows: &[AggregateRow], w: W) -> Result<(), LogError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        let mut rec = vec![r.strategy.name().to_string(), r.direction.name().to_string()];
        for s in &r.stats {
            rec.push(opt(s.mean));
            rec.push(opt(s.std));
        }
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_trials<W: Write>(records: &[TrialRecord], w: W) -> Result<(), LogError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "subject",
        "mass",
        "height",
        "strategy",
        "trial",
        "direction",
        "seed",
        "failed",
        "dt_out",
        "d_max_cm",
        "f_max_x",
        "f_max_z",
        "t_out",
        "t_in",
        "t_fail",
        "file",
    ])?;
    for r in records {
        let res = &r.result;
        wr.write_record([
            r.subject.id.to_string(),
            fmt_sig6(r.subject.mass),
            fmt_sig6(r.subject.height),
            r.strategy.name().to_string(),
            r.trial.to_string(),
            r.direction.name().to_string(),
            r.seed.to_string(),
            res.failed.to_string(),
            opt(res.dt_out),
            opt(res.d_max.map(|d| d * 100.0)),
            fmt_sig6(res.f_max_x),
            fmt_sig6(res.f_max_z),
            opt(res.t_out),
            opt(res.t_in),
            opt(res.t_fail),
            r.file_name(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_sign_tests<W: Write>(rows: &[SignTestRow], w: W) -> Result<(), LogError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["direction", "index", "a", "b", "a_greater", "a_less", "p_value"])?;
    for r in rows {
        wr.write_record([
            r.direction.name().to_string(),
            r.index.name().to_string(),
            r.a.name().to_string(),
            r.b.name().to_string(),
            r.greater.to_string(),
            r.less.to_string(),
            fmt_sig6(r.p_value),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_failures<W: Write>(rows: &[AggregateRow], w: W) -> Result<(), LogError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["strategy", "direction", "trials", "failed", "failure_rate"])?;
    for r in rows {
        wr.write_record([
            r.strategy.name().to_string(),
            r.direction.name().to_string(),
            r.trials.to_string(),
            r.failed.to_string(),
            fmt_sig6(r.failure_rate()),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes `aggregate.csv`, `trials.csv`, `sign_tests.csv`, `failures.csv`
/// and one log per trial under `trials/`.
pub fn write_campaign(c: &Campaign, dir: &Path) -> Result<(), LogError> {
    let logs = dir.join("trials");
    std::fs::create_dir_all(&logs)?;
    let create = |name: &str| -> Result<std::io::BufWriter<std::fs::File>, LogError> {
        Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))
    };
    write_aggregate(&c.aggregate, create("aggregate.csv")?)?;
    write_trials(&c.records, create("trials.csv")?)?;
    write_sign_tests(&c.sign_tests, create("sign_tests.csv")?)?;
    write_failures(&c.aggregate, create("failures.csv")?)?;
    for r in &c.records {
        r.log.save(&logs.join(r.file_name()))?;
    }
    Ok(())
}

/// Draws used by tests that need an arbitrary but reproducible seed stream.
pub fn seed_stream(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}
