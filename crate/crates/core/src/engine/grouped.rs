//! Fast-forward execution of grouped unicast instances.
//!
//! A request record with multiplicity m stands for m identical unit jobs.
//! Expanding the §-scale adversarial instances per job is impossible (group
//! sizes go far beyond memory), but between arrivals the wait ratios of the
//! groups are linear functions of time, so the engine can compute exactly how
//! many consecutive job starts the leading group wins and emit that whole run
//! as one block. Decisions are identical to stepping one job at a time:
//! blocks are cut at the first job boundary where another group's ratio
//! overtakes the leader (solved by exact linear intersection) or where a new
//! arrival joins the queue.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use super::{EngineError, Mode, SimConfig};
use crate::model::{
    AttemptStatus, Instance, Request, RequestId, Setting, Transcript, TransmissionAttempt,
};
use crate::policies::{self, PolicyKind, QueueView};
use crate::rat::Rat;

/// A contiguous run of unit jobs from one group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupBlock {
    pub page: String,
    pub start: Rat,
    pub end: Rat,
    pub jobs: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupStats {
    pub id: RequestId,
    pub first_start: Rat,
    pub last_finish: Rat,
    /// (last_finish - arrival) / slack; absent when the group has no deadline.
    pub max_wait_ratio: Option<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupedRun {
    pub speed: Rat,
    pub blocks: Vec<GroupBlock>,
    pub stats: Vec<GroupStats>,
    pub finish: BTreeMap<RequestId, Rat>,
}

impl GroupedRun {
    /// Expands the blocks into one attempt per job. Refuses above `cap`
    /// attempts; the compressed representation exists precisely because the
    /// big instances cannot be materialized.
    pub fn materialize(&self, instance: &Instance, cap: u64) -> Result<Transcript, EngineError> {
        let total: BigUint = self.blocks.iter().map(|b| &b.jobs).sum();
        if total > BigUint::from(cap) {
            return Err(EngineError::MaterializeTooLarge(total, cap));
        }
        let per_job = self.speed.recip();
        let mut attempts = Vec::new();
        for block in &self.blocks {
            let forcing = instance
                .requests
                .iter()
                .find(|r| r.page == block.page)
                .expect("block page has a request")
                .id();
            let jobs = u64::try_from(&block.jobs).expect("under cap");
            for i in 0..jobs {
                let start = &block.start + &(&Rat::from_int(i as i64) * &per_job);
                let end = &start + &per_job;
                attempts.push(TransmissionAttempt {
                    page: block.page.clone(),
                    start: start.clone(),
                    segments: vec![(start, end.clone())],
                    end: Some(end),
                    status: AttemptStatus::Completed,
                    forcing_request: forcing.clone(),
                });
            }
        }
        Ok(Transcript {
            instance: instance.clone(),
            speed: self.speed.clone(),
            attempts,
            finish: self.finish.clone(),
        })
    }
}

/// Block-level counterpart of the transcript validator, for runs too large
/// to materialize: single server, arrival-respecting starts, exact work
/// accounting per block, and exactly one unit of service per job copy.
pub fn validate_grouped_run(instance: &Instance, run: &GroupedRun) -> Vec<String> {
    let mut out = Vec::new();
    let mut spans: Vec<(&Rat, &Rat, &str)> = run
        .blocks
        .iter()
        .map(|b| (&b.start, &b.end, b.page.as_str()))
        .collect();
    spans.sort();
    for w in spans.windows(2) {
        if w[1].0 < w[0].1 {
            out.push(format!(
                "server conflict: {} starts at {} before {} ends at {}",
                w[1].2, w[1].0, w[0].2, w[0].1
            ));
        }
    }
    let mut served: std::collections::HashMap<&str, BigUint> = std::collections::HashMap::new();
    for b in &run.blocks {
        let Some(req) = instance.requests.iter().find(|r| r.page == b.page) else {
            out.push(format!("block for unknown page {}", b.page));
            continue;
        };
        if b.start < req.arrival {
            out.push(format!(
                "block for {} starts at {} before arrival {}",
                b.page, b.start, req.arrival
            ));
        }
        let width = &b.end - &b.start;
        if &width * &run.speed != Rat::from(&BigInt::from(b.jobs.clone())) {
            out.push(format!(
                "block for {} spans {} time for {} unit jobs at speed {}",
                b.page, width, b.jobs, run.speed
            ));
        }
        *served.entry(b.page.as_str()).or_default() += &b.jobs;
    }
    for req in &instance.requests {
        let done = served.remove(req.page.as_str()).unwrap_or_default();
        if done != req.multiplicity {
            out.push(format!(
                "page {} served {} jobs of {}",
                req.page, done, req.multiplicity
            ));
        }
        match run.finish.get(&req.id()) {
            None => out.push(format!("request {} has no finish time", req.id())),
            Some(f) => {
                let last = run
                    .blocks
                    .iter()
                    .filter(|b| b.page == req.page)
                    .map(|b| &b.end)
                    .max();
                if last != Some(f) {
                    out.push(format!(
                        "request {} finish {} is not its last block completion",
                        req.id(),
                        f
                    ));
                }
            }
        }
    }
    out
}

struct Group<'i> {
    req: &'i Request,
    left: BigUint,
    first_start: Option<Rat>,
}

/// Number of job boundaries `now + i/speed` (i = 0, 1, ...) strictly before
/// `limit`, i.e. the count of jobs startable before it.
fn starts_before(now: &Rat, speed: &Rat, limit: &Rat) -> BigUint {
    if limit <= now {
        return BigUint::zero();
    }
    let q = (limit - now) * speed;
    q.ceil().try_into().expect("limit > now implies a nonnegative count")
}

pub fn simulate_grouped_unicast(
    instance: &Instance,
    config: &SimConfig,
) -> Result<GroupedRun, EngineError> {
    config.validate_for(instance)?;
    if instance.setting != Setting::Unicast {
        return Err(EngineError::UnsupportedGrouped("the unicast setting"));
    }
    if instance.pages.iter().any(|p| p.length != Rat::one()) {
        return Err(EngineError::UnsupportedGrouped("unit-length pages"));
    }
    if config.mode != Mode::NonPreemptive {
        return Err(EngineError::UnsupportedGrouped("nonpreemptive mode"));
    }
    if !matches!(config.policy.kind, PolicyKind::Lf | PolicyKind::Fifo) {
        return Err(EngineError::UnsupportedGrouped("the lf or fifo policy"));
    }

    let mut groups: Vec<Group> = instance
        .requests
        .iter()
        .map(|req| Group { req, left: req.multiplicity.clone(), first_start: None })
        .collect();
    let speed = &config.speed;
    let per_job = speed.recip();
    let mut now = Rat::zero();
    let mut blocks: Vec<GroupBlock> = Vec::new();
    let mut finish = BTreeMap::new();

    loop {
        if groups.iter().all(|g| g.left.is_zero()) {
            break;
        }
        let released: Vec<usize> = (0..groups.len())
            .filter(|&i| !groups[i].left.is_zero() && groups[i].req.arrival <= now)
            .collect();
        if released.is_empty() {
            now = groups
                .iter()
                .filter(|g| !g.left.is_zero())
                .map(|g| g.req.arrival.clone())
                .min()
                .unwrap();
            continue;
        }

        let view = QueueView::build(
            now.clone(),
            released.iter().map(|&i| {
                let r = groups[i].req;
                (r.id(), r.arrival.clone(), r.slack(), r.weight.clone())
            }),
        );
        let chosen = policies::select(&view, &config.policy)?.id.clone();
        let leader = released
            .iter()
            .copied()
            .find(|&i| groups[i].req.id() == chosen)
            .unwrap();

        let mut block_jobs = groups[leader].left.clone();
        if let Some(next_arrival) = groups
            .iter()
            .filter(|g| !g.left.is_zero() && g.req.arrival > now)
            .map(|g| &g.req.arrival)
            .min()
        {
            block_jobs = block_jobs.min(starts_before(&now, speed, next_arrival));
        }

        if config.policy.kind == PolicyKind::Lf {
            // The selection key at equal ratio is (slack, arrival, page, index).
            let key = |i: usize| {
                let r = groups[i].req;
                (r.slack().unwrap(), r.arrival.clone(), r.page.clone(), r.index)
            };
            let (a_l, s_l) = (
                groups[leader].req.arrival.clone(),
                groups[leader].req.slack().unwrap(),
            );
            for &g in &released {
                if g == leader {
                    continue;
                }
                let (a_g, s_g) = (groups[g].req.arrival.clone(), groups[g].req.slack().unwrap());
                // ratio_L(t) >= ratio_g(t)  <=>  coef*t >= rhs
                let coef = &s_g - &s_l;
                let rhs = &a_l * &s_g - &a_g * &s_l;
                let tie_ok = key(leader) < key(g);
                if coef.is_positive() {
                    // The leader's margin only grows; it won at `now`.
                    continue;
                }
                if coef.is_zero() {
                    // Constant margin (equal slacks), decided at `now` where
                    // the leader already won.
                    debug_assert!(rhs.is_negative() || (rhs.is_zero() && tie_ok));
                    continue;
                }
                // coef < 0: the leader holds strictly before t = rhs/coef.
                let threshold = &rhs / &coef;
                let mut allowed = starts_before(&now, speed, &threshold);
                if tie_ok && ((&threshold - &now) * speed).is_integer() && threshold >= now {
                    allowed += 1u32;
                }
                block_jobs = block_jobs.min(allowed);
            }
        }

        debug_assert!(!block_jobs.is_zero(), "the selected leader serves at least one job");
        let end = &now + &(&Rat::from(&BigInt::from(block_jobs.clone())) * &per_job);
        if groups[leader].first_start.is_none() {
            groups[leader].first_start = Some(now.clone());
        }
        groups[leader].left -= &block_jobs;
        if groups[leader].left.is_zero() {
            finish.insert(groups[leader].req.id(), end.clone());
        }
        // Coalesce with the previous block when the same group continues.
        match blocks.last_mut() {
            Some(last) if last.page == groups[leader].req.page && last.end == now => {
                last.end = end.clone();
                last.jobs += &block_jobs;
            }
            _ => blocks.push(GroupBlock {
                page: groups[leader].req.page.clone(),
                start: now.clone(),
                end: end.clone(),
                jobs: block_jobs,
            }),
        }
        now = end;
    }

    let stats = groups
        .iter()
        .map(|g| {
            let last_finish = finish[&g.req.id()].clone();
            GroupStats {
                id: g.req.id(),
                first_start: g.first_start.clone().unwrap(),
                last_finish: last_finish.clone(),
                max_wait_ratio: g
                    .req
                    .slack()
                    .map(|s| (&last_finish - &g.req.arrival) / &s),
            }
        })
        .collect();

    Ok(GroupedRun {
        speed: config.speed.clone(),
        blocks,
        stats,
        finish,
    })
}
