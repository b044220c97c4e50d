//! Deterministic single-server simulator.
//!
//! Runs a policy over an instance at speed `s` and produces a full
//! [`Transcript`]. Identical inputs give bit-identical transcripts: event
//! times are exact rationals and every tie is broken by the policy's
//! deterministic ordering.
//!
//! Non-preemptive mode makes decisions at time 0, at every attempt
//! completion, and at an arrival while idle; a started attempt always runs to
//! completion. Preemptive mode (SSF-W only) additionally wakes at arrivals
//! and at exactly computed queue-entry crossings, and preempts the running
//! attempt when a strictly smaller-slack request is eligible: same page means
//! the transmission restarts from scratch (old attempt abandoned), a
//! different page means progress is saved and later resumed if the same
//! request forces again. A running attempt whose forcing request merely drops
//! out of the eligible set is not stopped, and an equal-slack challenger does
//! not preempt.

use std::collections::HashMap;
use std::io::Write;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::model::{
    AttemptStatus, Instance, Request, RequestId, Setting, TimeModel, Transcript,
    TransmissionAttempt,
};
use crate::policies::{self, PolicyConfig, PolicyError, PolicyKind, QueueView};
use crate::rat::Rat;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("speed {0} must be at least 1")]
    BadSpeed(Rat),
    #[error("preemptive mode is only defined for ssfw (got {0})")]
    PreemptionUnsupported(&'static str),
    #[error("slotted instances require nonpreemptive mode")]
    SlottedNeedsNonpreemptive,
    #[error("request {0} has no deadline, required by policy {1}")]
    MissingDeadlines(RequestId, &'static str),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("grouped simulation requires {0}")]
    UnsupportedGrouped(&'static str),
    #[error("materializing would emit {0} attempts (cap {1})")]
    MaterializeTooLarge(BigUint, u64),
    #[error("event log write failed: {0}")]
    Log(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    NonPreemptive,
    Preemptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub speed: Rat,
    pub mode: Mode,
    pub policy: PolicyConfig,
}

impl SimConfig {
    pub fn new(speed: Rat, mode: Mode, policy: PolicyConfig) -> Self {
        SimConfig { speed, mode, policy }
    }

    pub fn nonpreemptive(speed: Rat, policy: PolicyConfig) -> Self {
        Self::new(speed, Mode::NonPreemptive, policy)
    }

    pub fn validate_for(&self, instance: &Instance) -> Result<(), EngineError> {
        if self.speed < Rat::one() {
            return Err(EngineError::BadSpeed(self.speed.clone()));
        }
        if self.mode == Mode::Preemptive {
            if self.policy.kind != PolicyKind::Ssfw {
                return Err(EngineError::PreemptionUnsupported(self.policy.kind.name()));
            }
            if instance.time_model == TimeModel::Slotted {
                return Err(EngineError::SlottedNeedsNonpreemptive);
            }
        }
        if self.policy.kind.needs_deadlines() {
            if let Some(r) = instance.requests.iter().find(|r| r.deadline.is_none()) {
                return Err(EngineError::MissingDeadlines(r.id(), self.policy.kind.name()));
            }
        }
        Ok(())
    }
}

/// Computes the next time a currently-ineligible request enters the waiting
/// set Q, assuming the released set stays fixed until then.
///
/// A request r is in Q at time t when c * (t - a_r)/S_r >= (t - a_j)/S_j for
/// every released unsatisfied j. Each pairwise condition is linear in t, so
/// the entry time is found exactly by intersecting half-lines. Returns the
/// earliest entry (ties by request id) strictly before `horizon`, or `None`.
pub fn next_q_entry_crossing(
    now: &Rat,
    released: &[(RequestId, Rat, Rat)],
    c: &Rat,
    horizon: Option<&Rat>,
) -> Option<(Rat, RequestId)> {
    let ratio = |arrival: &Rat, slack: &Rat| (now - arrival) / slack;
    let alpha = released
        .iter()
        .map(|(_, a, s)| ratio(a, s))
        .max()?;

    let mut best: Option<(Rat, RequestId)> = None;
    'candidates: for (id, a_r, s_r) in released {
        if &(ratio(a_r, s_r) * c) >= &alpha {
            continue; // already in Q
        }
        let mut entry = now.clone();
        let mut latest: Option<Rat> = None;
        for (other, a_j, s_j) in released {
            if other == id {
                continue;
            }
            // c*(t - a_r)/S_r >= (t - a_j)/S_j  <=>  coef*t >= rhs
            let coef = c * s_j - s_r;
            let rhs = c * s_j * a_r - s_r * a_j;
            if coef.is_positive() {
                let lo = &rhs / &coef;
                if lo > entry {
                    entry = lo;
                }
            } else if coef.is_zero() {
                if rhs.is_positive() {
                    continue 'candidates; // never satisfiable
                }
            } else {
                let hi = &rhs / &coef;
                latest = Some(match latest {
                    Some(l) => l.min(hi),
                    None => hi,
                });
            }
        }
        if let Some(latest) = latest {
            if entry > latest {
                continue; // the feasible window closed before it opened
            }
        }
        debug_assert!(entry > *now, "an excluded request cannot enter at the current instant");
        if let Some(h) = horizon {
            if &entry >= h {
                continue;
            }
        }
        let candidate = (entry, id.clone());
        if best.as_ref().is_none_or(|b| candidate < *b) {
            best = Some(candidate);
        }
    }
    best
}

/// Runs the simulation. See [`simulate_with_log`] for the event log variant.
pub fn simulate(instance: &Instance, config: &SimConfig) -> Result<Transcript, EngineError> {
    simulate_with_log(instance, config, None)
}

/// Runs the simulation, optionally writing one `t=<time> <kind> <details>`
/// line per event (kinds: arrive, idle, start, resume, preempt, restart,
/// complete).
pub fn simulate_with_log(
    instance: &Instance,
    config: &SimConfig,
    log: Option<&mut dyn Write>,
) -> Result<Transcript, EngineError> {
    config.validate_for(instance)?;
    let mut sim = Sim::new(instance, config, log);
    match config.mode {
        Mode::NonPreemptive => sim.run_nonpreemptive()?,
        Mode::Preemptive => sim.run_preemptive()?,
    }
    Ok(Transcript {
        instance: instance.clone(),
        speed: config.speed.clone(),
        attempts: sim.attempts,
        finish: sim.finish,
    })
}

struct RecState {
    satisfied: bool,
    copies_left: BigUint,
}

struct Running {
    attempt: usize,
    rec: usize,
    seg_start: Rat,
    work_before: Rat,
    planned_end: Rat,
}

macro_rules! log_event {
    ($sim:expr, $($arg:tt)*) => {
        if $sim.log.is_some() {
            let line = format!($($arg)*);
            $sim.write_line(&line)?;
        }
    };
}

struct Sim<'i, 'l> {
    instance: &'i Instance,
    config: &'i SimConfig,
    lengths: HashMap<&'i str, &'i Rat>,
    now: Rat,
    state: Vec<RecState>,
    arrivals: Vec<usize>, // record indices sorted by (arrival, page, index)
    arrived: usize,       // prefix of `arrivals` already logged
    attempts: Vec<TransmissionAttempt>,
    finish: std::collections::BTreeMap<RequestId, Rat>,
    /// rec index -> (attempt index, work done) for preempted transmissions.
    paused: HashMap<usize, (usize, Rat)>,
    log: Option<&'l mut dyn Write>,
}

impl<'i, 'l> Sim<'i, 'l> {
    fn new(instance: &'i Instance, config: &'i SimConfig, log: Option<&'l mut dyn Write>) -> Self {
        let lengths = instance
            .pages
            .iter()
            .map(|p| (p.id.as_str(), &p.length))
            .collect();
        let state = instance
            .requests
            .iter()
            .map(|r| RecState {
                satisfied: false,
                copies_left: r.multiplicity.clone(),
            })
            .collect();
        let mut arrivals: Vec<usize> = (0..instance.requests.len()).collect();
        arrivals.sort_by(|&a, &b| {
            let (ra, rb) = (&instance.requests[a], &instance.requests[b]);
            (&ra.arrival, &ra.page, ra.index).cmp(&(&rb.arrival, &rb.page, rb.index))
        });
        Sim {
            instance,
            config,
            lengths,
            now: Rat::zero(),
            state,
            arrivals,
            arrived: 0,
            attempts: Vec::new(),
            finish: std::collections::BTreeMap::new(),
            paused: HashMap::new(),
            log,
        }
    }

    fn req(&self, rec: usize) -> &'i Request {
        &self.instance.requests[rec]
    }

    fn length_of(&self, rec: usize) -> &'i Rat {
        self.lengths[self.req(rec).page.as_str()]
    }

    fn active(&self, rec: usize) -> bool {
        match self.instance.setting {
            Setting::Broadcast => !self.state[rec].satisfied,
            Setting::Unicast => !self.state[rec].copies_left.is_zero(),
        }
    }

    fn all_done(&self) -> bool {
        (0..self.state.len()).all(|r| !self.active(r))
    }

    fn write_line(&mut self, line: &str) -> Result<(), EngineError> {
        if let Some(log) = self.log.as_deref_mut() {
            writeln!(log, "{line}")?;
        }
        Ok(())
    }

    fn log_arrivals_up_to_now(&mut self) -> Result<(), EngineError> {
        while self.arrived < self.arrivals.len() {
            let rec = self.arrivals[self.arrived];
            if self.req(rec).arrival > self.now {
                break;
            }
            self.arrived += 1;
            if self.log.is_some() {
                let (t, id) = (self.req(rec).arrival.clone(), self.req(rec).id());
                log_event!(self, "t={t} arrive request={id}");
            }
        }
        Ok(())
    }

    fn next_arrival_after_now(&self) -> Option<Rat> {
        self.arrivals
            .iter()
            .map(|&rec| &self.req(rec).arrival)
            .find(|a| **a > self.now)
            .cloned()
    }

    fn released_view(&self) -> QueueView {
        QueueView::build(
            self.now.clone(),
            self.instance
                .requests
                .iter()
                .enumerate()
                .filter(|&(rec, r)| self.active(rec) && r.arrival <= self.now)
                .map(|(_, r)| (r.id(), r.arrival.clone(), r.slack(), r.weight.clone())),
        )
    }

    fn rec_of(&self, id: &RequestId) -> usize {
        self.instance
            .requests
            .iter()
            .position(|r| r.page == id.page && r.index == id.index)
            .expect("selected request exists")
    }

    fn idle_until_next_arrival(&mut self) -> Result<(), EngineError> {
        let next = self
            .next_arrival_after_now()
            .expect("an unsatisfied request must still arrive");
        log_event!(self, "t={} idle until={next}", self.now);
        self.now = next;
        self.log_arrivals_up_to_now()
    }

    /// Marks satisfaction at the completion of `attempt` and records finishes.
    fn complete_attempt_bookkeeping(&mut self, attempt: usize, rec: usize) -> Result<(), EngineError> {
        let end = self.now.clone();
        let start = self.attempts[attempt].start.clone();
        let page = self.attempts[attempt].page.clone();
        let mut satisfied = Vec::new();
        match self.instance.setting {
            Setting::Broadcast => {
                for (i, r) in self.instance.requests.iter().enumerate() {
                    if r.page == page && !self.state[i].satisfied && r.arrival <= start {
                        self.state[i].satisfied = true;
                        self.finish.insert(r.id(), end.clone());
                        satisfied.push(r.id());
                    }
                }
            }
            Setting::Unicast => {
                self.state[rec].copies_left -= 1u32;
                if self.state[rec].copies_left.is_zero() {
                    self.finish.insert(self.req(rec).id(), end.clone());
                    satisfied.push(self.req(rec).id());
                }
            }
        }
        if self.log.is_some() {
            let list = satisfied
                .iter()
                .map(|id| id.to_string())
                .collect::<Vec<_>>()
                .join(",");
            log_event!(self, "t={end} complete page={page} satisfied=[{list}]");
        }
        Ok(())
    }

    fn run_nonpreemptive(&mut self) -> Result<(), EngineError> {
        self.log_arrivals_up_to_now()?;
        loop {
            if self.all_done() {
                return Ok(());
            }
            let view = self.released_view();
            if view.entries.is_empty() {
                self.idle_until_next_arrival()?;
                continue;
            }
            let chosen = policies::select(&view, &self.config.policy)?.id.clone();
            let rec = self.rec_of(&chosen);
            let start = self.now.clone();
            let end = &start + &(self.length_of(rec) / &self.config.speed);
            self.attempts.push(TransmissionAttempt {
                page: self.req(rec).page.clone(),
                start: start.clone(),
                segments: vec![(start.clone(), end.clone())],
                end: Some(end.clone()),
                status: AttemptStatus::Completed,
                forcing_request: chosen.clone(),
            });
            log_event!(self, "t={start} start page={} forced={chosen}", self.req(rec).page);
            self.now = end;
            self.log_arrivals_up_to_now()?;
            let attempt = self.attempts.len() - 1;
            self.complete_attempt_bookkeeping(attempt, rec)?;
        }
    }

    // Preemptive SSF-W over varying page sizes.

    fn slack_of(&self, rec: usize) -> Rat {
        self.req(rec).slack().expect("validated: deadlines present")
    }

    fn start_or_resume(&mut self, rec: usize) -> Result<Running, EngineError> {
        let page = self.req(rec).page.clone();
        let id = self.req(rec).id();
        if let Some((attempt, work)) = self.paused.remove(&rec) {
            let remaining = &(self.length_of(rec) - &work) / &self.config.speed;
            log_event!(self, "t={} resume page={page} forced={id} done={work}", self.now);
            return Ok(Running {
                attempt,
                rec,
                seg_start: self.now.clone(),
                work_before: work,
                planned_end: &self.now + &remaining,
            });
        }
        // Another request for this page takes over: any paused transmission of
        // the page is restarted from scratch, i.e. abandoned, and its saved
        // progress discarded.
        let stale: Vec<usize> = self
            .paused
            .keys()
            .copied()
            .filter(|&r| self.req(r).page == page)
            .collect();
        for r in stale {
            let (attempt, _) = self.paused.remove(&r).unwrap();
            self.attempts[attempt].status = AttemptStatus::Abandoned;
            log_event!(self, "t={} restart page={page} old={} new={id}", self.now, self.req(r).id());
        }
        self.attempts.push(TransmissionAttempt {
            page: page.clone(),
            start: self.now.clone(),
            segments: Vec::new(),
            end: None,
            status: AttemptStatus::Abandoned, // finalized on completion
            forcing_request: id.clone(),
        });
        log_event!(self, "t={} start page={page} forced={id}", self.now);
        Ok(Running {
            attempt: self.attempts.len() - 1,
            rec,
            seg_start: self.now.clone(),
            work_before: Rat::zero(),
            planned_end: &self.now + &(self.length_of(rec) / &self.config.speed),
        })
    }

    fn released_slack_triples(&self) -> Vec<(RequestId, Rat, Rat)> {
        self.instance
            .requests
            .iter()
            .enumerate()
            .filter(|&(rec, r)| self.active(rec) && r.arrival <= self.now)
            .map(|(_, r)| (r.id(), r.arrival.clone(), r.slack().unwrap()))
            .collect()
    }

    fn run_preemptive(&mut self) -> Result<(), EngineError> {
        let c = self.config.policy.c.clone().expect("ssfw has c");
        let mut running: Option<Running> = None;
        self.log_arrivals_up_to_now()?;
        loop {
            let Some(cur) = running.take() else {
                if self.all_done() {
                    debug_assert!(self.paused.is_empty());
                    return Ok(());
                }
                let view = self.released_view();
                if view.entries.is_empty() {
                    self.idle_until_next_arrival()?;
                    continue;
                }
                let chosen = policies::select(&view, &self.config.policy)?.id.clone();
                running = Some(self.start_or_resume(self.rec_of(&chosen))?);
                continue;
            };

            // Next event: completion, arrival, or Q-entry crossing.
            let next_arrival = self.next_arrival_after_now();
            let mut wake = cur.planned_end.clone();
            if let Some(a) = &next_arrival {
                if *a < wake {
                    wake = a.clone();
                }
            }
            let crossing = next_q_entry_crossing(
                &self.now,
                &self.released_slack_triples(),
                &c,
                Some(&wake),
            );
            if let Some((t, _)) = &crossing {
                wake = t.clone();
            }

            if wake == cur.planned_end {
                // Completion.
                self.now = cur.planned_end.clone();
                let att = cur.attempt;
                self.attempts[att].segments.push((cur.seg_start.clone(), self.now.clone()));
                self.attempts[att].end = Some(self.now.clone());
                self.attempts[att].status = AttemptStatus::Completed;
                self.log_arrivals_up_to_now()?;
                self.complete_attempt_bookkeeping(att, cur.rec)?;
                continue;
            }

            // Arrival or crossing: evaluate the preemption rule.
            self.now = wake;
            self.log_arrivals_up_to_now()?;
            let view = self.released_view();
            let chosen = policies::select(&view, &self.config.policy)?.id.clone();
            let rec = self.rec_of(&chosen);
            if self.slack_of(rec) < self.slack_of(cur.rec) {
                let page = self.req(cur.rec).page.clone();
                if self.req(rec).page == page {
                    // Restart: the in-flight transmission is abandoned.
                    let att = cur.attempt;
                    if self.now > cur.seg_start {
                        self.attempts[att]
                            .segments
                            .push((cur.seg_start.clone(), self.now.clone()));
                    }
                    self.attempts[att].status = AttemptStatus::Abandoned;
                    log_event!(
                        self,
                        "t={} restart page={page} old={} new={chosen}",
                        self.now,
                        self.req(cur.rec).id()
                    );
                } else {
                    // Save progress keyed by the forcing request.
                    let work =
                        &cur.work_before + &(&(&self.now - &cur.seg_start) * &self.config.speed);
                    let att = cur.attempt;
                    self.attempts[att]
                        .segments
                        .push((cur.seg_start.clone(), self.now.clone()));
                    self.paused.insert(cur.rec, (att, work));
                    log_event!(
                        self,
                        "t={} preempt page={page} forced={} by={chosen}",
                        self.now,
                        self.req(cur.rec).id()
                    );
                }
                running = Some(self.start_or_resume(rec)?);
            } else {
                running = Some(cur);
            }
        }
    }
}

mod grouped;
pub use grouped::{simulate_grouped_unicast, validate_grouped_run, GroupBlock, GroupStats, GroupedRun};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_instance, validate_transcript};
    use crate::rat::rat;

    fn fifo_example() -> Instance {
        parse_instance(
            r#"{"time_model":"continuous","setting":"broadcast",
                "pages":[{"id":"a","length":"2"},{"id":"b","length":"1"}],
                "requests":[{"page":"a","arrival":"0"},
                            {"page":"b","arrival":"0"},
                            {"page":"b","arrival":"1"}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn fifo_trace_matches_hand_computation() {
        let instance = fifo_example();
        let config = SimConfig::nonpreemptive(Rat::one(), PolicyConfig::fifo());
        let t = simulate(&instance, &config).unwrap();
        assert_eq!(t.attempts.len(), 2);
        assert_eq!(t.attempts[0].page, "a");
        assert_eq!(t.attempts[0].segments, vec![(Rat::zero(), rat(2, 1))]);
        assert_eq!(t.attempts[1].page, "b");
        assert_eq!(t.attempts[1].segments, vec![(rat(2, 1), rat(3, 1))]);
        assert_eq!(t.finish[&RequestId::new("a", 0)], rat(2, 1));
        assert_eq!(t.finish[&RequestId::new("b", 0)], rat(3, 1));
        // Arrived at 1 <= start 2, so the same broadcast serves it.
        assert_eq!(t.finish[&RequestId::new("b", 1)], rat(3, 1));
        assert_eq!(validate_transcript(&instance, &t), vec![]);
    }

    #[test]
    fn simulation_is_deterministic() {
        let instance = fifo_example();
        let config = SimConfig::nonpreemptive(Rat::one(), PolicyConfig::fifo());
        assert_eq!(simulate(&instance, &config).unwrap(), simulate(&instance, &config).unwrap());
    }

    #[test]
    fn speed_scales_attempt_durations() {
        let instance = fifo_example();
        let config = SimConfig::nonpreemptive(rat(2, 1), PolicyConfig::fifo());
        let t = simulate(&instance, &config).unwrap();
        assert_eq!(t.attempts[0].segments, vec![(Rat::zero(), Rat::one())]);
        assert_eq!(validate_transcript(&instance, &t), vec![]);
    }

    #[test]
    fn crossing_solves_the_entry_inequality() {
        // r1 = (a, arrival 0, S=10) running; r2 = (b, arrival 1, S=1) waits.
        let released = vec![
            (RequestId::new("a", 0), Rat::zero(), rat(10, 1)),
            (RequestId::new("b", 0), Rat::one(), Rat::one()),
        ];
        let got = next_q_entry_crossing(&Rat::one(), &released, &rat(2, 1), None);
        assert_eq!(got, Some((rat(20, 19), RequestId::new("b", 0))));

        // Horizon caps the report.
        let capped = next_q_entry_crossing(&Rat::one(), &released, &rat(2, 1), Some(&rat(20, 19)));
        assert_eq!(capped, None);
    }

    #[test]
    fn crossing_absent_for_singleton_or_full_queue() {
        let single = vec![(RequestId::new("a", 0), Rat::zero(), rat(10, 1))];
        assert_eq!(next_q_entry_crossing(&Rat::one(), &single, &rat(2, 1), None), None);

        // Both already in Q.
        let both = vec![
            (RequestId::new("a", 0), Rat::zero(), rat(2, 1)),
            (RequestId::new("b", 0), Rat::zero(), rat(2, 1)),
        ];
        assert_eq!(next_q_entry_crossing(&Rat::zero(), &both, &rat(2, 1), None), None);
    }

    #[test]
    fn crossing_equal_slack_later_arrival() {
        // Equal slacks, arrivals 0 and 2: entry at t = 2a - a' = 4.
        let released = vec![
            (RequestId::new("a", 0), Rat::zero(), rat(5, 1)),
            (RequestId::new("b", 0), rat(2, 1), rat(5, 1)),
        ];
        let now = rat(2, 1);
        assert_eq!(
            next_q_entry_crossing(&now, &released, &rat(2, 1), Some(&rat(3, 1))),
            None
        );
        assert_eq!(
            next_q_entry_crossing(&now, &released, &rat(2, 1), Some(&rat(5, 1))),
            Some((rat(4, 1), RequestId::new("b", 0)))
        );
    }

    fn preemptive_config() -> SimConfig {
        SimConfig::new(
            Rat::one(),
            Mode::Preemptive,
            PolicyConfig::ssfw(rat(2, 1)),
        )
    }

    /// One length-3 page with requests of slack 10 and 1. The second slack is
    /// below the page length (the file format would reject it), so the
    /// instance is built directly.
    pub(crate) fn restart_example_instance() -> Instance {
        use crate::model::{Page, Request};
        use num_bigint::BigUint;
        Instance {
            time_model: TimeModel::Continuous,
            setting: Setting::Broadcast,
            pages: vec![Page { id: "a".into(), length: rat(3, 1) }],
            requests: vec![
                Request {
                    page: "a".into(),
                    index: 0,
                    arrival: Rat::zero(),
                    deadline: Some(rat(10, 1)),
                    weight: Rat::one(),
                    multiplicity: BigUint::from(1u32),
                },
                Request {
                    page: "a".into(),
                    index: 1,
                    arrival: Rat::one(),
                    deadline: Some(rat(2, 1)),
                    weight: Rat::one(),
                    multiplicity: BigUint::from(1u32),
                },
            ],
        }
    }

    #[test]
    fn preempt_and_resume_golden_trace() {
        // a(len 3) forced at 0 with slack 10; b(len 1) arrives at 1, slack 1.
        let instance = parse_instance(
            r#"{"time_model":"continuous","setting":"broadcast",
                "pages":[{"id":"a","length":"3"},{"id":"b","length":"1"}],
                "requests":[{"page":"a","arrival":"0","deadline":"10"},
                            {"page":"b","arrival":"1","deadline":"2"}]}"#,
        )
        .unwrap();
        let t = simulate(&instance, &preemptive_config()).unwrap();

        assert_eq!(t.attempts.len(), 2);
        let a = &t.attempts[0];
        assert_eq!(a.page, "a");
        assert_eq!(a.status, AttemptStatus::Completed);
        assert_eq!(a.segments, vec![
            (Rat::zero(), rat(20, 19)),
            (rat(39, 19), rat(76, 19)),
        ]);
        let b = &t.attempts[1];
        assert_eq!(b.page, "b");
        assert_eq!(b.segments, vec![(rat(20, 19), rat(39, 19))]);

        assert_eq!(t.finish[&RequestId::new("b", 0)], rat(39, 19));
        assert_eq!(t.finish[&RequestId::new("a", 0)], rat(76, 19));
        assert_eq!(t.finish[&RequestId::new("a", 0)], rat(4, 1));
        assert_eq!(validate_transcript(&instance, &t), vec![]);
    }

    #[test]
    fn restart_golden_trace() {
        // Same page: the smaller-slack request restarts the transmission.
        // Built directly: the challenger's slack 1 is below the page length,
        // which the file format rejects but the simulator handles fine.
        let instance = restart_example_instance();
        let t = simulate(&instance, &preemptive_config()).unwrap();

        assert_eq!(t.attempts.len(), 2);
        let first = &t.attempts[0];
        assert_eq!(first.status, AttemptStatus::Abandoned);
        assert_eq!(first.end, None);
        assert_eq!(first.segments, vec![(Rat::zero(), rat(20, 19))]);
        let second = &t.attempts[1];
        assert_eq!(second.status, AttemptStatus::Completed);
        assert_eq!(second.segments, vec![(rat(20, 19), rat(77, 19))]);

        // Both requests arrived at or before the restart's start time 20/19.
        assert_eq!(t.finish[&RequestId::new("a", 0)], rat(77, 19));
        assert_eq!(t.finish[&RequestId::new("a", 1)], rat(77, 19));
        assert_eq!(validate_transcript(&instance, &t), vec![]);
    }

    #[test]
    fn nonpreemptive_never_abandons_or_splits() {
        let instance = parse_instance(
            r#"{"time_model":"continuous","setting":"broadcast",
                "pages":[{"id":"a","length":"3"},{"id":"b","length":"1"}],
                "requests":[{"page":"a","arrival":"0","deadline":"10"},
                            {"page":"b","arrival":"1","deadline":"2"},
                            {"page":"b","arrival":"5","deadline":"7"}]}"#,
        )
        .unwrap();
        let config = SimConfig::nonpreemptive(Rat::one(), PolicyConfig::ssfw(rat(2, 1)));
        let t = simulate(&instance, &config).unwrap();
        for a in &t.attempts {
            assert_eq!(a.status, AttemptStatus::Completed);
            assert_eq!(a.segments.len(), 1);
        }
        assert_eq!(validate_transcript(&instance, &t), vec![]);
    }

    #[test]
    fn config_validation_errors() {
        let instance = fifo_example();
        let bad_speed = SimConfig::nonpreemptive(rat(1, 2), PolicyConfig::fifo());
        assert!(matches!(
            simulate(&instance, &bad_speed),
            Err(EngineError::BadSpeed(_))
        ));
        let lf = SimConfig::nonpreemptive(Rat::one(), PolicyConfig::lf());
        assert!(matches!(
            simulate(&instance, &lf),
            Err(EngineError::MissingDeadlines(..))
        ));
        let preemptive_fifo = SimConfig::new(Rat::one(), Mode::Preemptive, PolicyConfig::fifo());
        assert!(matches!(
            simulate(&instance, &preemptive_fifo),
            Err(EngineError::PreemptionUnsupported(_))
        ));
    }

    #[test]
    fn event_log_lines_are_stable() {
        let instance = fifo_example();
        let config = SimConfig::nonpreemptive(Rat::one(), PolicyConfig::fifo());
        let mut buf = Vec::new();
        simulate_with_log(&instance, &config, Some(&mut buf)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, vec![
            "t=0 arrive request=a#0",
            "t=0 arrive request=b#0",
            "t=0 start page=a forced=a#0",
            "t=1 arrive request=b#1",
            "t=2 complete page=a satisfied=[a#0]",
            "t=2 start page=b forced=b#0",
            "t=3 complete page=b satisfied=[b#0,b#1]",
        ]);
    }
}
