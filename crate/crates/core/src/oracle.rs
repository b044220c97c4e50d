//! Exact offline optima on small instances, for competitive-ratio checks.
//!
//! Two independent implementations cross-validate each other:
//!
//! * [`optimal_schedule`] searches the canonical schedule class with branch
//!   and bound. A canonical schedule is a sequence of left-shifted
//!   transmissions: each starts at max(previous end, the latest arrival it
//!   waits for). Any feasible sequential-model schedule can be left-shifted
//!   transmission by transmission without increasing any finish time, and the
//!   max-type objectives are monotone in finish times, so the minimum over
//!   this class is the true optimum. In the broadcast setting a transmission
//!   of page p satisfies every outstanding request for p that arrived at or
//!   before its start, so the only genuine choices are which page to send
//!   next and how many future arrivals to wait for; in the unicast setting
//!   each transmission serves one copy. Abandoning or preempting never helps
//!   an offline max-type objective: wasted partial work only delays later
//!   finishes.
//!
//! * [`slot_optimum`] solves slotted unit-page instances by memoized
//!   depth-first search over "which page to broadcast in each unit slot"
//!   (or idle until the next arrival). It shares no code with the search
//!   above beyond the per-request metric formula.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::metrics::{request_value, MetricKind, MetricsError};
use crate::model::{
    AttemptStatus, Instance, Page, RequestSpec, Setting, TimeModel, Transcript,
    TransmissionAttempt,
};
use crate::rat::Rat;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("instance has {jobs} jobs, oracle cap is {cap} (override with BSIM_ORACLE_CAP)")]
    TooLarge { jobs: BigUint, cap: u64 },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("slot oracle requires a slotted broadcast instance without multiplicities")]
    NotSlotted,
    #[error("slot oracle supports at most 32 requests, got {0}")]
    TooManyRequests(usize),
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub objective: Rat,
    pub witness: Transcript,
    pub nodes_explored: u64,
}

/// One scheduled transmission in the search: page, start, end, and how many
/// copies of each record it satisfies.
#[derive(Clone)]
struct Step {
    page: usize,
    start: Rat,
    end: Rat,
    takes: Vec<(usize, u64)>, // (record index, copies)
}

struct Search<'i> {
    instance: &'i Instance,
    kind: MetricKind,
    speed: Rat,
    /// Remaining copies per record.
    remaining: Vec<u64>,
    /// Record indices per page, sorted by arrival (then id).
    by_page: Vec<Vec<usize>>,
    page_of: Vec<usize>,
    page_length: Vec<Rat>,
    nodes: u64,
    incumbent: Option<Rat>,
    best: Vec<Step>,
    stack: Vec<Step>,
}

impl<'i> Search<'i> {
    fn value_at(&self, rec: usize, finish: &Rat) -> Result<Rat, MetricsError> {
        request_value(&self.instance.requests[rec], finish, self.kind)
    }

    /// Admissible lower bound for a record still holding copies, given that
    /// every later transmission starts at or after `t`.
    fn record_bound(&self, rec: usize, t: &Rat) -> Result<Rat, MetricsError> {
        let req = &self.instance.requests[rec];
        let page = self.page_of[rec];
        let start = if &req.arrival > t { req.arrival.clone() } else { t.clone() };
        let finish = &start + &(&self.page_length[page] / &self.speed);
        self.value_at(rec, &finish)
    }

    fn candidates(&self, now: &Rat) -> Vec<Step> {
        let mut out = Vec::new();
        for (page, recs) in self.by_page.iter().enumerate() {
            let pending: Vec<usize> = recs
                .iter()
                .copied()
                .filter(|&r| self.remaining[r] > 0)
                .collect();
            if pending.is_empty() {
                continue;
            }
            let duration = &self.page_length[page] / &self.speed;
            match self.instance.setting {
                Setting::Broadcast => {
                    // Waiting horizons: one candidate per distinct satisfied
                    // prefix of the arrival-sorted pending records.
                    let mut covered = 0;
                    while covered < pending.len() {
                        let anchor = &self.instance.requests[pending[covered]].arrival;
                        let start = if anchor > now { anchor.clone() } else { now.clone() };
                        let mut upto = covered;
                        while upto + 1 < pending.len()
                            && self.instance.requests[pending[upto + 1]].arrival <= start
                        {
                            upto += 1;
                        }
                        out.push(Step {
                            page,
                            end: &start + &duration,
                            start,
                            takes: pending[..=upto]
                                .iter()
                                .map(|&r| (r, self.remaining[r]))
                                .collect(),
                        });
                        covered = upto + 1;
                    }
                }
                Setting::Unicast => {
                    for &r in &pending {
                        let arrival = &self.instance.requests[r].arrival;
                        let start = if arrival > now { arrival.clone() } else { now.clone() };
                        out.push(Step {
                            page,
                            end: &start + &duration,
                            start,
                            takes: vec![(r, 1)],
                        });
                    }
                }
            }
        }
        // Most promising first: earliest deadline among satisfied records,
        // with the completion time as fallback and secondary key.
        out.sort_by(|a, b| {
            let key = |s: &Step| {
                let deadline = s
                    .takes
                    .iter()
                    .filter_map(|&(r, _)| self.instance.requests[r].deadline.clone())
                    .min();
                (deadline.unwrap_or_else(|| s.end.clone()), s.end.clone(), s.page)
            };
            key(a).cmp(&key(b))
        });
        out
    }

    fn dfs(&mut self, now: &Rat, max_so_far: &Option<Rat>) -> Result<(), MetricsError> {
        if self.remaining.iter().all(|&r| r == 0) {
            let objective = max_so_far.clone().unwrap_or_else(|| empty_value(self.kind));
            if self.incumbent.as_ref().is_none_or(|inc| &objective < inc) {
                self.incumbent = Some(objective);
                self.best = self.stack.clone();
            }
            return Ok(());
        }
        for step in self.candidates(now) {
            self.nodes += 1;
            let mut max_next = max_so_far.clone();
            for &(rec, _) in &step.takes {
                let v = self.value_at(rec, &step.end)?;
                if max_next.as_ref().is_none_or(|m| &v > m) {
                    max_next = Some(v);
                }
            }
            // Bound: the running max plus what the untouched records must at
            // least incur now that every later transmission starts >= end.
            let mut bound = max_next.clone().unwrap_or_else(|| empty_value(self.kind));
            let mut feasible = true;
            for rec in 0..self.remaining.len() {
                let left = self.remaining[rec]
                    - step
                        .takes
                        .iter()
                        .find(|&&(r, _)| r == rec)
                        .map_or(0, |&(_, k)| k);
                if left > 0 {
                    let lb = self.record_bound(rec, &step.end)?;
                    if lb > bound {
                        bound = lb;
                    }
                }
                if let Some(inc) = &self.incumbent {
                    if &bound >= inc {
                        feasible = false;
                        break;
                    }
                }
            }
            if !feasible {
                continue;
            }
            for &(rec, k) in &step.takes {
                self.remaining[rec] -= k;
            }
            self.stack.push(step.clone());
            self.dfs(&step.end, &max_next)?;
            self.stack.pop();
            for &(rec, k) in &step.takes {
                self.remaining[rec] += k;
            }
        }
        Ok(())
    }
}

fn empty_value(kind: MetricKind) -> Rat {
    if kind.needs_deadlines() {
        Rat::one()
    } else {
        Rat::zero()
    }
}

/// Exact minimum of `kind` over all schedules of the instance at the given
/// server speed, with one witness schedule. Exhaustive search: refuses
/// instances with more than `cap` jobs (counting multiplicities).
pub fn optimal_schedule(
    instance: &Instance,
    kind: MetricKind,
    speed: &Rat,
    cap: u64,
) -> Result<OracleResult, OracleError> {
    let jobs = instance.total_jobs();
    if jobs > BigUint::from(cap) {
        return Err(OracleError::TooLarge { jobs, cap });
    }
    if kind.needs_deadlines() {
        for r in &instance.requests {
            if r.deadline.is_none() {
                return Err(MetricsError::MissingDeadline(r.id(), kind).into());
            }
        }
    }

    let mut by_page: Vec<Vec<usize>> = instance.pages.iter().map(|_| Vec::new()).collect();
    let mut page_of = Vec::with_capacity(instance.requests.len());
    for (i, req) in instance.requests.iter().enumerate() {
        let p = instance.pages.iter().position(|p| p.id == req.page).unwrap();
        by_page[p].push(i);
        page_of.push(p);
    }
    for recs in &mut by_page {
        recs.sort_by(|&a, &b| {
            let (ra, rb) = (&instance.requests[a], &instance.requests[b]);
            (&ra.arrival, ra.index).cmp(&(&rb.arrival, rb.index))
        });
    }

    let mut search = Search {
        instance,
        kind,
        speed: speed.clone(),
        remaining: instance
            .requests
            .iter()
            .map(|r| r.multiplicity.to_u64().expect("under cap"))
            .collect(),
        by_page,
        page_of,
        page_length: instance.pages.iter().map(|p| p.length.clone()).collect(),
        nodes: 0,
        incumbent: None,
        best: Vec::new(),
        stack: Vec::new(),
    };
    search.dfs(&Rat::zero(), &None)?;

    let objective = search.incumbent.expect("search visits at least one schedule");
    let witness = build_witness(instance, speed, &search.best);
    Ok(OracleResult { objective, witness, nodes_explored: search.nodes })
}

fn build_witness(instance: &Instance, speed: &Rat, steps: &[Step]) -> Transcript {
    let mut attempts = Vec::new();
    let mut finish = std::collections::BTreeMap::new();
    for step in steps {
        let forcing = step
            .takes
            .iter()
            .map(|&(r, _)| instance.requests[r].id())
            .min()
            .unwrap();
        attempts.push(TransmissionAttempt {
            page: instance.pages[step.page].id.clone(),
            start: step.start.clone(),
            segments: vec![(step.start.clone(), step.end.clone())],
            end: Some(step.end.clone()),
            status: AttemptStatus::Completed,
            forcing_request: forcing,
        });
        for &(rec, _) in &step.takes {
            // Overwrites earlier copies; the record finish is the last one.
            finish.insert(instance.requests[rec].id(), step.end.clone());
        }
    }
    Transcript {
        instance: instance.clone(),
        speed: speed.clone(),
        attempts,
        finish,
    }
}

/// Independent optimum for slotted unit-page broadcast instances at speed 1:
/// memoized search over per-slot page choices.
pub fn slot_optimum(instance: &Instance, kind: MetricKind) -> Result<Rat, OracleError> {
    if instance.time_model != TimeModel::Slotted
        || instance.setting != Setting::Broadcast
        || instance.requests.iter().any(|r| !r.multiplicity.is_one())
    {
        return Err(OracleError::NotSlotted);
    }
    if instance.requests.len() > 32 {
        return Err(OracleError::TooManyRequests(instance.requests.len()));
    }
    if kind.needs_deadlines() {
        for r in &instance.requests {
            if r.deadline.is_none() {
                return Err(MetricsError::MissingDeadline(r.id(), kind).into());
            }
        }
    }

    let arrivals: Vec<i64> = instance
        .requests
        .iter()
        .map(|r| r.arrival.to_i64().expect("slotted arrivals are integers"))
        .collect();
    let pages: Vec<usize> = instance
        .requests
        .iter()
        .map(|r| instance.pages.iter().position(|p| p.id == r.page).unwrap())
        .collect();

    struct Dp<'i> {
        instance: &'i Instance,
        kind: MetricKind,
        arrivals: Vec<i64>,
        pages: Vec<usize>,
        memo: HashMap<(i64, u32), Rat>,
    }

    impl Dp<'_> {
        fn solve(&mut self, t: i64, mask: u32) -> Result<Rat, MetricsError> {
            if mask == 0 {
                return Ok(empty_value(self.kind));
            }
            if let Some(v) = self.memo.get(&(t, mask)) {
                return Ok(v.clone());
            }
            let mut best: Option<Rat> = None;
            let released =
                (0..self.arrivals.len()).filter(|&i| mask & (1 << i) != 0 && self.arrivals[i] <= t);
            let mut chosen_pages: Vec<usize> = released.map(|i| self.pages[i]).collect();
            chosen_pages.sort_unstable();
            chosen_pages.dedup();
            for page in chosen_pages {
                let mut served_max: Option<Rat> = None;
                let mut rest = mask;
                let finish = Rat::from_int(t + 1);
                for i in 0..self.arrivals.len() {
                    if mask & (1 << i) != 0 && self.pages[i] == page && self.arrivals[i] <= t {
                        rest &= !(1 << i);
                        let v = request_value(&self.instance.requests[i], &finish, self.kind)?;
                        if served_max.as_ref().is_none_or(|m| &v > m) {
                            served_max = Some(v);
                        }
                    }
                }
                let tail = self.solve(t + 1, rest)?;
                let value = served_max.unwrap().max(tail);
                if best.as_ref().is_none_or(|b| &value < b) {
                    best = Some(value);
                }
            }
            // Idling is only ever useful to wait for a future arrival.
            if let Some(&next) = self
                .arrivals
                .iter()
                .enumerate()
                .filter(|&(i, &a)| mask & (1 << i) != 0 && a > t)
                .map(|(_, a)| a)
                .min()
            {
                let value = self.solve(next, mask)?;
                if best.as_ref().is_none_or(|b| &value < b) {
                    best = Some(value);
                }
            }
            let best = best.expect("some request is pending");
            self.memo.insert((t, mask), best.clone());
            Ok(best)
        }
    }

    let full: u32 = if instance.requests.is_empty() {
        0
    } else {
        (1u64 << instance.requests.len()).wrapping_sub(1) as u32
    };
    let start = arrivals.iter().copied().min().unwrap_or(0);
    let mut dp = Dp { instance, kind, arrivals, pages, memo: HashMap::new() };
    Ok(dp.solve(start, full)?)
}

#[derive(Debug, Clone, Copy)]
pub struct EnumParams {
    pub pages: usize,
    pub horizon: u64,
    pub max_requests: usize,
    pub deadlines: bool,
}

impl EnumParams {
    pub fn new(pages: usize, horizon: u64, max_requests: usize, deadlines: bool) -> Self {
        assert!(pages >= 1 && pages <= 26, "page names are single letters");
        EnumParams { pages, horizon, max_requests, deadlines }
    }
}

/// Enumerates every slotted unit-page broadcast instance with arrivals in
/// {0..horizon}, each (page, arrival) pair used at most once, and (when
/// enabled) every deadline assignment with deadline in
/// {arrival+1 ..= horizon+2}. Deterministic order.
pub fn enumerate_small_instances(params: EnumParams) -> impl Iterator<Item = Instance> {
    let pairs: Vec<(usize, u64)> = (0..params.pages)
        .flat_map(|p| (0..=params.horizon).map(move |a| (p, a)))
        .collect();
    EnumIter {
        params,
        pairs,
        size: 0,
        combo: Vec::new(),
        deadline_choice: Vec::new(),
        exhausted: false,
    }
}

pub fn page_name(i: usize) -> String {
    char::from(b'a' + i as u8).to_string()
}

struct EnumIter {
    params: EnumParams,
    pairs: Vec<(usize, u64)>,
    size: usize,
    combo: Vec<usize>,
    deadline_choice: Vec<u64>, // deadline offset per member, 1-based from arrival
    exhausted: bool,
}

impl EnumIter {
    fn build(&self) -> Instance {
        let pages = (0..self.params.pages)
            .map(|i| Page { id: page_name(i), length: Rat::one() })
            .collect();
        let requests = self
            .combo
            .iter()
            .enumerate()
            .map(|(slot, &idx)| {
                let (p, a) = self.pairs[idx];
                let mut spec = RequestSpec::new(page_name(p), Rat::from_int(a as i64));
                if self.params.deadlines {
                    spec = spec.deadline(Rat::from_int((a + self.deadline_choice[slot]) as i64));
                }
                spec
            })
            .collect();
        Instance::new(TimeModel::Slotted, Setting::Broadcast, pages, requests)
            .expect("enumerated instances are valid")
    }

    /// Deadline offsets run from 1 to horizon + 2 - arrival.
    fn max_offset(&self, slot: usize) -> u64 {
        let (_, a) = self.pairs[self.combo[slot]];
        self.params.horizon + 2 - a
    }

    fn advance(&mut self) {
        if self.params.deadlines {
            for slot in (0..self.size).rev() {
                if self.deadline_choice[slot] < self.max_offset(slot) {
                    self.deadline_choice[slot] += 1;
                    for later in slot + 1..self.size {
                        self.deadline_choice[later] = 1;
                    }
                    return;
                }
            }
        }
        // Next combination of `size` pairs, lexicographic.
        let n = self.pairs.len();
        let mut slot = self.size;
        loop {
            if slot == 0 {
                self.size += 1;
                if self.size > self.params.max_requests.min(n) {
                    self.exhausted = true;
                    return;
                }
                self.combo = (0..self.size).collect();
                break;
            }
            slot -= 1;
            if self.combo[slot] < n - (self.size - slot) {
                self.combo[slot] += 1;
                for later in slot + 1..self.size {
                    self.combo[later] = self.combo[later - 1] + 1;
                }
                break;
            }
        }
        self.deadline_choice = vec![1; self.size];
    }
}

impl Iterator for EnumIter {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        if self.exhausted {
            return None;
        }
        if self.size == 0 {
            self.advance(); // move off the empty instance
            if self.exhausted {
                return None;
            }
        }
        let instance = self.build();
        self.advance();
        Some(instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_instance, validate_transcript};
    use crate::metrics::evaluate;
    use crate::rat::rat;

    #[test]
    fn merge_beats_naive_order() {
        // (a,0), (b,0), (a,1): best schedules reach max response 2.
        let instance = parse_instance(
            r#"{"time_model":"slotted","setting":"broadcast",
                "pages":[{"id":"a","length":"1"},{"id":"b","length":"1"}],
                "requests":[{"page":"a","arrival":"0"},
                            {"page":"b","arrival":"0"},
                            {"page":"a","arrival":"1"}]}"#,
        )
        .unwrap();
        let r = optimal_schedule(&instance, MetricKind::MaxResponse, &Rat::one(), 8).unwrap();
        assert_eq!(r.objective, rat(2, 1));
        assert_eq!(validate_transcript(&instance, &r.witness), vec![]);
        assert_eq!(
            evaluate(&r.witness, MetricKind::MaxResponse).unwrap(),
            r.objective
        );
        assert_eq!(slot_optimum(&instance, MetricKind::MaxResponse).unwrap(), rat(2, 1));
    }

    #[test]
    fn single_request_is_served_immediately() {
        let instance = parse_instance(
            r#"{"time_model":"continuous","setting":"broadcast",
                "pages":[{"id":"a","length":"5"}],
                "requests":[{"page":"a","arrival":"3","deadline":"9"}]}"#,
        )
        .unwrap();
        let r = optimal_schedule(&instance, MetricKind::MaxResponse, &Rat::one(), 8).unwrap();
        assert_eq!(r.objective, rat(5, 1));
        let d = optimal_schedule(&instance, MetricKind::MaxDelayFactor, &Rat::one(), 8).unwrap();
        assert_eq!(d.objective, Rat::one());
    }

    #[test]
    fn cap_is_enforced() {
        let instance = parse_instance(
            r#"{"time_model":"continuous","setting":"unicast",
                "pages":[{"id":"a","length":"1"}],
                "requests":[{"page":"a","arrival":"0","multiplicity":100}]}"#,
        )
        .unwrap();
        assert!(matches!(
            optimal_schedule(&instance, MetricKind::MaxResponse, &Rat::one(), 8),
            Err(OracleError::TooLarge { .. })
        ));
    }

    #[test]
    fn oracles_agree_on_a_small_family() {
        let params = EnumParams::new(2, 2, 3, false);
        let mut count = 0;
        for instance in enumerate_small_instances(params) {
            let a = optimal_schedule(&instance, MetricKind::MaxResponse, &Rat::one(), 8)
                .unwrap()
                .objective;
            let b = slot_optimum(&instance, MetricKind::MaxResponse).unwrap();
            assert_eq!(a, b, "disagreement on {}", instance.to_json());
            count += 1;
        }
        // C(6,1) + C(6,2) + C(6,3) = 6 + 15 + 20
        assert_eq!(count, 41);
    }

    #[test]
    fn enumeration_counts_match() {
        let none = enumerate_small_instances(EnumParams::new(2, 1, 2, false)).count();
        assert_eq!(none, 10); // C(4,1) + C(4,2)

        // One page, horizon 0, one request: deadlines in {1, 2}.
        let with = enumerate_small_instances(EnumParams::new(1, 0, 1, true)).count();
        assert_eq!(with, 2);

        for instance in enumerate_small_instances(EnumParams::new(2, 1, 2, true)) {
            let again = parse_instance(&instance.to_json()).unwrap();
            assert_eq!(instance, again);
        }
    }

    #[test]
    fn adding_a_request_never_decreases_the_optimum() {
        let base = parse_instance(
            r#"{"time_model":"slotted","setting":"broadcast",
                "pages":[{"id":"a","length":"1"},{"id":"b","length":"1"}],
                "requests":[{"page":"a","arrival":"0"},{"page":"b","arrival":"1"}]}"#,
        )
        .unwrap();
        let more = parse_instance(
            r#"{"time_model":"slotted","setting":"broadcast",
                "pages":[{"id":"a","length":"1"},{"id":"b","length":"1"}],
                "requests":[{"page":"a","arrival":"0"},{"page":"b","arrival":"1"},
                            {"page":"b","arrival":"0"}]}"#,
        )
        .unwrap();
        let v1 = optimal_schedule(&base, MetricKind::MaxResponse, &Rat::one(), 8).unwrap();
        let v2 = optimal_schedule(&more, MetricKind::MaxResponse, &Rat::one(), 8).unwrap();
        assert!(v2.objective >= v1.objective);
    }

    #[test]
    fn unicast_copies_each_need_service() {
        let instance = parse_instance(
            r#"{"time_model":"continuous","setting":"unicast",
                "pages":[{"id":"a","length":"1"}],
                "requests":[{"page":"a","arrival":"0","multiplicity":3}]}"#,
        )
        .unwrap();
        let r = optimal_schedule(&instance, MetricKind::MaxResponse, &Rat::one(), 8).unwrap();
        assert_eq!(r.objective, rat(3, 1));
        assert_eq!(r.witness.attempts.len(), 3);
        assert_eq!(validate_transcript(&instance, &r.witness), vec![]);
    }

    #[test]
    fn empty_instance_has_empty_witness() {
        let instance = parse_instance(
            r#"{"time_model":"slotted","setting":"broadcast",
                "pages":[{"id":"a","length":"1"}],"requests":[]}"#,
        )
        .unwrap();
        let r = optimal_schedule(&instance, MetricKind::MaxResponse, &Rat::one(), 8).unwrap();
        assert_eq!(r.objective, Rat::zero());
        assert!(r.witness.attempts.is_empty());
    }
}
