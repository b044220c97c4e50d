//! Batch verification drivers: run a policy and the exact oracle over an
//! instance family and compare the objectives with exact rational
//! arithmetic.
//!
//! Families are streamed in batches through a worker pool; results are merged
//! in stream order, so the reported worst case is deterministic (maximum
//! ratio, earliest index on ties).

use rayon::prelude::*;

use crate::engine::{self, EngineError, SimConfig};
use crate::generators::{
    self, DeadlineStyle, GenError, RandomParams, SplitMix64, WeightStyle,
};
use crate::metrics::{self, MetricKind, MetricsError};
use crate::model::{Instance, Setting, Transcript};
use crate::oracle::{self, EnumParams, OracleError};
use crate::policies::PolicyConfig;
use crate::rat::Rat;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("instance {0} has a zero optimum; ratio undefined")]
    ZeroOptimum(u64),
    #[error("instance {index}: ssfw selection left Q(t): {detail}")]
    SelectionOutsideQ { index: u64, detail: String },
}

#[derive(Debug, Clone)]
pub struct WorstCase {
    pub index: u64,
    pub instance: Instance,
    pub alg: Rat,
    pub opt: Rat,
    pub ratio: Rat,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub instances: u64,
    pub violations: u64,
    pub bound: Rat,
    pub worst: Option<WorstCase>,
    /// (index, alg, opt, ratio) per instance, populated only on request.
    pub rows: Option<Vec<(u64, Rat, Rat, Rat)>>,
}

impl SweepOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn max_ratio(&self) -> Rat {
        self.worst.as_ref().map(|w| w.ratio.clone()).unwrap_or_else(Rat::zero)
    }

    pub fn rows_to_csv(&self) -> String {
        let mut out = String::from("index,alg,opt,ratio\n");
        if let Some(rows) = &self.rows {
            for (i, alg, opt, ratio) in rows {
                out.push_str(&format!("{i},{alg},{opt},{ratio}\n"));
            }
        }
        out
    }
}

const BATCH: usize = 2048;

/// Runs `alg_value` and `opt_value` over the family and reports the maximum
/// ratio against `bound`.
pub fn sweep_ratio(
    instances: impl Iterator<Item = Instance>,
    alg_value: impl Fn(&Instance) -> Result<Rat, VerifyError> + Sync,
    opt_value: impl Fn(&Instance) -> Result<Rat, VerifyError> + Sync,
    bound: &Rat,
    keep_rows: bool,
) -> Result<SweepOutcome, VerifyError> {
    let mut outcome = SweepOutcome {
        instances: 0,
        violations: 0,
        bound: bound.clone(),
        worst: None,
        rows: keep_rows.then(Vec::new),
    };
    let mut stream = instances.enumerate();
    loop {
        let batch: Vec<(usize, Instance)> = stream.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            break;
        }
        let results: Vec<(u64, Instance, Rat, Rat)> = batch
            .into_par_iter()
            .map(|(i, instance)| {
                let alg = alg_value(&instance)?;
                let opt = opt_value(&instance)?;
                if !opt.is_positive() {
                    return Err(VerifyError::ZeroOptimum(i as u64));
                }
                Ok((i as u64, instance, alg, opt))
            })
            .collect::<Result<_, VerifyError>>()?;
        for (index, instance, alg, opt) in results {
            let ratio = &alg / &opt;
            outcome.instances += 1;
            if &ratio > bound {
                outcome.violations += 1;
            }
            if let Some(rows) = &mut outcome.rows {
                rows.push((index, alg.clone(), opt.clone(), ratio.clone()));
            }
            if outcome.worst.as_ref().is_none_or(|w| ratio > w.ratio) {
                outcome.worst = Some(WorstCase { index, instance, alg, opt, ratio });
            }
        }
    }
    Ok(outcome)
}

/// The exhaustive slotted family used by the theorem checks.
pub fn exhaustive_family(
    pages: usize,
    horizon: u64,
    max_requests: usize,
    deadlines: bool,
) -> impl Iterator<Item = Instance> {
    oracle::enumerate_small_instances(EnumParams::new(pages, horizon, max_requests, deadlines))
}

/// Seeded varying-size broadcast instances: up to `max_requests` requests
/// (the count itself is drawn from the seed), page lengths up to
/// `max_length`.
pub fn random_varying_family(
    seeds: u64,
    max_requests: usize,
    max_length: u64,
    deadlines: bool,
) -> impl Iterator<Item = Instance> {
    (0..seeds).map(move |seed| {
        let mut rng = SplitMix64::new(seed.wrapping_mul(0x5851f42d4c957f2d) ^ 0x76617279);
        let params = RandomParams {
            pages: 3,
            requests: 1 + rng.below(max_requests as u64) as usize,
            horizon: 8,
            max_length,
            deadlines: if deadlines {
                DeadlineStyle::Present { max_extra: 6 }
            } else {
                DeadlineStyle::None
            },
            weights: WeightStyle::Unit,
            slotted: false,
            setting: Setting::Broadcast,
        };
        generators::random_instance(seed, &params).expect("consistent parameters")
    })
}

pub fn fifo_max_response(instance: &Instance) -> Result<Rat, VerifyError> {
    let config = SimConfig::nonpreemptive(Rat::one(), PolicyConfig::fifo());
    let t = engine::simulate(instance, &config)?;
    Ok(metrics::evaluate(&t, MetricKind::MaxResponse)?)
}

pub fn ssfw_max_delay_factor(
    instance: &Instance,
    speed: &Rat,
    c: &Rat,
) -> Result<Rat, VerifyError> {
    let config = SimConfig::nonpreemptive(speed.clone(), PolicyConfig::ssfw(c.clone()));
    let t = engine::simulate(instance, &config)?;
    Ok(metrics::evaluate(&t, MetricKind::MaxDelayFactor)?)
}

pub fn oracle_optimum(
    instance: &Instance,
    kind: MetricKind,
    cap: u64,
) -> Result<Rat, VerifyError> {
    Ok(oracle::optimal_schedule(instance, kind, &Rat::one(), cap)?.objective)
}

/// Replays a transcript and checks that at every decision instant (each work
/// segment start) the forcing request was inside the waiting set Q(t):
/// its ratio was within a factor c of the maximum over released unsatisfied
/// requests. Returns human-readable violations.
pub fn ssfw_selection_violations(
    instance: &Instance,
    transcript: &Transcript,
    c: &Rat,
) -> Vec<String> {
    let mut out = Vec::new();
    for attempt in &transcript.attempts {
        let forcer = instance
            .request(&attempt.forcing_request)
            .expect("validated transcript");
        for (t, _) in &attempt.segments {
            let queue: Vec<&crate::model::Request> = instance
                .requests
                .iter()
                .filter(|r| {
                    r.arrival <= *t
                        && transcript.finish.get(&r.id()).map_or(true, |f| f > t)
                })
                .collect();
            let alpha = queue
                .iter()
                .map(|r| (t - &r.arrival) / &r.slack().expect("deadlines present"))
                .max()
                .expect("forcer itself is queued");
            let forcer_ratio = (t - &forcer.arrival) / &forcer.slack().unwrap();
            if &forcer_ratio * c < alpha {
                out.push(format!(
                    "t={t}: {} has ratio {forcer_ratio}, alpha_t={alpha}, c={c}",
                    attempt.forcing_request
                ));
            }
        }
    }
    out
}

/// FIFO two-competitiveness sweep at speed 1 against the exact optimum.
pub fn verify_fifo(
    family: impl Iterator<Item = Instance>,
    cap: u64,
    keep_rows: bool,
) -> Result<SweepOutcome, VerifyError> {
    sweep_ratio(
        family,
        fifo_max_response,
        |i| oracle_optimum(i, MetricKind::MaxResponse, cap),
        &Rat::from_int(2),
        keep_rows,
    )
}

/// SSF-W competitiveness sweep: the policy runs at `speed` with parameter
/// `c`; the optimum runs at speed 1; the bound is c^2. Each instance is also
/// replayed at speed 1 to confirm every selection stayed inside Q(t).
pub fn verify_ssfw(
    family: impl Iterator<Item = Instance>,
    speed: &Rat,
    c: &Rat,
    cap: u64,
    keep_rows: bool,
) -> Result<SweepOutcome, VerifyError> {
    sweep_ratio(
        family,
        |instance| {
            let unit = SimConfig::nonpreemptive(Rat::one(), PolicyConfig::ssfw(c.clone()));
            let replay = engine::simulate(instance, &unit)?;
            let violations = ssfw_selection_violations(instance, &replay, c);
            if let Some(first) = violations.into_iter().next() {
                return Err(VerifyError::SelectionOutsideQ { index: 0, detail: first });
            }
            ssfw_max_delay_factor(instance, speed, c)
        },
        |i| oracle_optimum(i, MetricKind::MaxDelayFactor, cap),
        &(c * c),
        keep_rows,
    )
}
