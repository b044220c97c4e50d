//! Instances, requests, transcripts, and their validation.
//!
//! An [`Instance`] is a finite set of pages plus timed requests. A
//! [`Transcript`] records what a server actually transmitted: a list of
//! [`TransmissionAttempt`]s plus the finish time of every request. Both
//! round-trip through JSON with all numerics encoded as exact rational
//! strings ("7", "20/19").
//!
//! A request's finish time is the end of the earliest completed transmission
//! of its page that started at or after the request's arrival; a request
//! arriving exactly at a transmission's start is satisfied by it. That
//! boundary convention is applied uniformly by the engine, the offline
//! search, and [`validate_transcript`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::rat::Rat;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("page {0:?}: invalid id (allowed: [A-Za-z0-9_.-]+, no '#')")]
    BadPageId(String),
    #[error("page {0:?}: duplicate id")]
    DuplicatePage(String),
    #[error("page {0:?}: length {1} is not positive")]
    BadLength(String, Rat),
    #[error("request {0}: unknown page {1:?}")]
    UnknownPage(RequestId, String),
    #[error("request {0}: negative arrival {1}")]
    NegativeArrival(RequestId, Rat),
    #[error("request {0}: deadline {1} not after arrival {2}")]
    DeadlineBeforeArrival(RequestId, Rat, Rat),
    #[error("request {0}: slack {1} < page length {2}")]
    SlackBelowLength(RequestId, Rat, Rat),
    #[error("request {0}: weight {1} is not positive")]
    BadWeight(RequestId, Rat),
    #[error("request {0}: multiplicity must be at least 1")]
    BadMultiplicity(RequestId),
    #[error("request {0}: slotted model requires integer {1} (got {2})")]
    SlottedNonInteger(RequestId, &'static str, Rat),
    #[error("page {0:?}: slotted model requires unit length (got {1})")]
    SlottedNonUnitLength(String, Rat),
    #[error("page {0:?}: unicast setting allows one request per page, got a second ({1})")]
    UnicastSharedPage(String, RequestId),
    #[error("expand would need {0} jobs for request {1}, which does not fit in memory")]
    ExpandTooLarge(BigUint, RequestId),
    #[error("expand: generated page id {0:?} collides with an existing page")]
    ExpandCollision(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeModel {
    Slotted,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Broadcast,
    Unicast,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Page {
    pub id: String,
    pub length: Rat,
}

/// Identifies a request record as `page#index`, where `index` is the record's
/// ordinal among its page's records in file order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RequestId {
    pub page: String,
    pub index: u32,
}

impl RequestId {
    pub fn new(page: impl Into<String>, index: u32) -> Self {
        RequestId { page: page.into(), index }
    }
}

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.page, self.index)
    }
}

impl FromStr for RequestId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (page, index) = s
            .rsplit_once('#')
            .ok_or_else(|| format!("request id {s:?} is missing '#'"))?;
        let index = index
            .parse()
            .map_err(|_| format!("request id {s:?} has a bad index"))?;
        Ok(RequestId::new(page, index))
    }
}

impl Serialize for RequestId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RequestId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One request record. A record with multiplicity m stands for m identical
/// requests; engines may batch them but metrics count all m.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub page: String,
    pub index: u32,
    pub arrival: Rat,
    pub deadline: Option<Rat>,
    pub weight: Rat,
    pub multiplicity: BigUint,
}

impl Request {
    pub fn id(&self) -> RequestId {
        RequestId::new(self.page.clone(), self.index)
    }

    /// Slack = deadline - arrival; present iff the deadline is.
    pub fn slack(&self) -> Option<Rat> {
        self.deadline.as_ref().map(|d| d - &self.arrival)
    }
}

/// Input to [`Instance::new`]: a request as written in an instance file,
/// before defaults and indices are filled in.
#[derive(Debug, Clone)]
pub struct RequestSpec {
    pub page: String,
    pub arrival: Rat,
    pub deadline: Option<Rat>,
    pub weight: Option<Rat>,
    pub multiplicity: Option<BigUint>,
}

impl RequestSpec {
    pub fn new(page: impl Into<String>, arrival: Rat) -> Self {
        RequestSpec {
            page: page.into(),
            arrival,
            deadline: None,
            weight: None,
            multiplicity: None,
        }
    }

    pub fn deadline(mut self, d: Rat) -> Self {
        self.deadline = Some(d);
        self
    }

    pub fn weight(mut self, w: Rat) -> Self {
        self.weight = Some(w);
        self
    }

    pub fn multiplicity(mut self, m: u64) -> Self {
        self.multiplicity = Some(BigUint::from(m));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub time_model: TimeModel,
    pub setting: Setting,
    pub pages: Vec<Page>,
    pub requests: Vec<Request>,
}

impl Instance {
    /// Validates every instance invariant and assigns per-page request indices.
    pub fn new(
        time_model: TimeModel,
        setting: Setting,
        pages: Vec<Page>,
        specs: Vec<RequestSpec>,
    ) -> Result<Instance, ModelError> {
        let mut lengths: HashMap<&str, &Rat> = HashMap::new();
        for page in &pages {
            if page.id.is_empty()
                || !page.id.chars().all(|c| c.is_ascii_alphanumeric() || "_.-".contains(c))
            {
                return Err(ModelError::BadPageId(page.id.clone()));
            }
            if lengths.insert(&page.id, &page.length).is_some() {
                return Err(ModelError::DuplicatePage(page.id.clone()));
            }
            if !page.length.is_positive() {
                return Err(ModelError::BadLength(page.id.clone(), page.length.clone()));
            }
            if time_model == TimeModel::Slotted && page.length != Rat::one() {
                return Err(ModelError::SlottedNonUnitLength(
                    page.id.clone(),
                    page.length.clone(),
                ));
            }
        }

        let mut next_index: HashMap<String, u32> = HashMap::new();
        let mut page_used_by: HashMap<String, RequestId> = HashMap::new();
        let mut requests = Vec::with_capacity(specs.len());
        for spec in specs {
            let index = next_index.entry(spec.page.clone()).or_insert(0);
            let id = RequestId::new(spec.page.clone(), *index);
            *index += 1;

            let length = *lengths
                .get(spec.page.as_str())
                .ok_or_else(|| ModelError::UnknownPage(id.clone(), spec.page.clone()))?;
            if spec.arrival.is_negative() {
                return Err(ModelError::NegativeArrival(id, spec.arrival));
            }
            if let Some(deadline) = &spec.deadline {
                if deadline <= &spec.arrival {
                    return Err(ModelError::DeadlineBeforeArrival(
                        id,
                        deadline.clone(),
                        spec.arrival,
                    ));
                }
                let slack = deadline - &spec.arrival;
                if &slack < length {
                    return Err(ModelError::SlackBelowLength(id, slack, length.clone()));
                }
            }
            let weight = spec.weight.unwrap_or_else(Rat::one);
            if !weight.is_positive() {
                return Err(ModelError::BadWeight(id, weight));
            }
            let multiplicity = spec.multiplicity.unwrap_or_else(BigUint::one);
            if multiplicity.is_zero() {
                return Err(ModelError::BadMultiplicity(id));
            }
            if time_model == TimeModel::Slotted {
                if !spec.arrival.is_integer() {
                    return Err(ModelError::SlottedNonInteger(id, "arrival", spec.arrival));
                }
                if let Some(d) = &spec.deadline {
                    if !d.is_integer() {
                        return Err(ModelError::SlottedNonInteger(id, "deadline", d.clone()));
                    }
                }
            }
            if setting == Setting::Unicast {
                if let Some(prev) = page_used_by.get(&spec.page) {
                    let _ = prev;
                    return Err(ModelError::UnicastSharedPage(spec.page.clone(), id));
                }
                page_used_by.insert(spec.page.clone(), id.clone());
            }

            requests.push(Request {
                page: spec.page,
                index: id.index,
                arrival: spec.arrival,
                deadline: spec.deadline,
                weight,
                multiplicity,
            });
        }

        Ok(Instance { time_model, setting, pages, requests })
    }

    pub fn page(&self, id: &str) -> Option<&Page> {
        self.pages.iter().find(|p| p.id == id)
    }

    pub fn request(&self, id: &RequestId) -> Option<&Request> {
        self.requests
            .iter()
            .find(|r| r.page == id.page && r.index == id.index)
    }

    /// Total job count, counting multiplicities.
    pub fn total_jobs(&self) -> BigUint {
        self.requests
            .iter()
            .fold(BigUint::zero(), |acc, r| acc + &r.multiplicity)
    }

    pub fn has_deadlines(&self) -> bool {
        self.requests.iter().all(|r| r.deadline.is_some())
    }

    /// Expands every multiplicity-m record into m explicit records.
    ///
    /// In the broadcast setting copies share the page and get fresh indices.
    /// In the unicast setting each copy must own its page, so copies move to
    /// fresh pages named `page.J` with a zero-padded copy number (padding
    /// keeps lexicographic page order equal to copy order).
    pub fn expand(&self) -> Result<Instance, ModelError> {
        let mut pages = self.pages.clone();
        let mut specs = Vec::new();
        for req in &self.requests {
            let m = req.multiplicity.to_usize().ok_or_else(|| {
                ModelError::ExpandTooLarge(req.multiplicity.clone(), req.id())
            })?;
            let base = RequestSpec {
                page: req.page.clone(),
                arrival: req.arrival.clone(),
                deadline: req.deadline.clone(),
                weight: Some(req.weight.clone()),
                multiplicity: None,
            };
            if m == 1 {
                specs.push(base);
            } else if self.setting == Setting::Broadcast {
                specs.extend(std::iter::repeat_n(base, m));
            } else {
                let width = (m - 1).to_string().len();
                let length = self.page(&req.page).expect("validated").length.clone();
                for j in 0..m {
                    let id = format!("{}.{:0width$}", req.page, j);
                    if self.page(&id).is_some() || pages.iter().any(|p| p.id == id) {
                        return Err(ModelError::ExpandCollision(id));
                    }
                    pages.push(Page { id: id.clone(), length: length.clone() });
                    specs.push(RequestSpec { page: id, ..base.clone() });
                }
                pages.retain(|p| p.id != req.page);
            }
        }
        Instance::new(self.time_model, self.setting, pages, specs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&wire::Instance::from(self)).expect("serializable")
    }
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<Instance, ModelError> {
    let raw: wire::Instance = serde_json::from_str(text)?;
    raw.try_into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttemptStatus {
    Completed,
    Abandoned,
}

/// One transmission of a page, possibly in several work segments when it was
/// preempted and resumed. `start` is when the sequential transmission began
/// at the page's beginning; satisfaction is decided against it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionAttempt {
    pub page: String,
    pub start: Rat,
    pub segments: Vec<(Rat, Rat)>,
    pub end: Option<Rat>,
    pub status: AttemptStatus,
    pub forcing_request: RequestId,
}

impl TransmissionAttempt {
    /// Work transmitted, in page-length units, at the given server speed.
    pub fn work(&self, speed: &Rat) -> Rat {
        self.segments
            .iter()
            .fold(Rat::zero(), |acc, (from, to)| acc + (to - from) * speed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub instance: Instance,
    pub speed: Rat,
    pub attempts: Vec<TransmissionAttempt>,
    pub finish: BTreeMap<RequestId, Rat>,
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&wire::Transcript::from(self)).expect("serializable")
    }

    pub fn parse(text: &str) -> Result<Transcript, ModelError> {
        let raw: wire::Transcript = serde_json::from_str(text)?;
        raw.try_into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    InstanceMismatch,
    BadSpeed,
    UnknownPage,
    UnknownRequest,
    ForcerArrivesAfterStart,
    ForcerAlreadySatisfied,
    BadSegments,
    WorkMismatch,
    ServerConflict,
    MissingFinish,
    NoSatisfyingAttempt,
    SatisfyingAttemptBeforeArrival,
    FinishNotMinimal,
    AttemptCountMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

fn violation(kind: ViolationKind, message: String) -> Violation {
    Violation { kind, message }
}

/// Checks every transcript invariant; the returned list is empty iff the
/// transcript is a valid schedule for the instance. Also accepts externally
/// supplied schedules (e.g. hand-built optimal witnesses).
pub fn validate_transcript(instance: &Instance, transcript: &Transcript) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Vec::new();

    if transcript.instance != *instance {
        out.push(violation(
            InstanceMismatch,
            "transcript embeds a different instance".into(),
        ));
    }
    if transcript.speed < Rat::one() {
        out.push(violation(BadSpeed, format!("speed {} < 1", transcript.speed)));
    }

    // Per-attempt shape and work accounting.
    for (i, a) in transcript.attempts.iter().enumerate() {
        let tag = format!("attempt {i} (page {})", a.page);
        let Some(page) = instance.page(&a.page) else {
            out.push(violation(UnknownPage, format!("{tag}: no such page")));
            continue;
        };
        match instance.request(&a.forcing_request) {
            None => out.push(violation(
                UnknownRequest,
                format!("{tag}: forcing request {} does not exist", a.forcing_request),
            )),
            Some(r) => {
                if r.page != a.page {
                    out.push(violation(
                        UnknownRequest,
                        format!("{tag}: forcing request {} is for another page", a.forcing_request),
                    ));
                }
                if r.arrival > a.start {
                    out.push(violation(
                        ForcerArrivesAfterStart,
                        format!(
                            "{tag}: forcing request {} arrives at {} after start {}",
                            a.forcing_request, r.arrival, a.start
                        ),
                    ));
                }
            }
        }
        if a.segments.is_empty() {
            out.push(violation(BadSegments, format!("{tag}: no work segments")));
            continue;
        }
        if a.start != a.segments[0].0 {
            out.push(violation(
                BadSegments,
                format!("{tag}: start {} != first segment start {}", a.start, a.segments[0].0),
            ));
        }
        let mut ok = true;
        for (j, (from, to)) in a.segments.iter().enumerate() {
            if to <= from {
                out.push(violation(BadSegments, format!("{tag}: empty segment {j}")));
                ok = false;
            }
            if j > 0 && from < &a.segments[j - 1].1 {
                out.push(violation(BadSegments, format!("{tag}: segments out of order")));
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let work = a.work(&transcript.speed);
        match (a.status, &a.end) {
            (AttemptStatus::Completed, Some(end)) => {
                if end != &a.segments.last().unwrap().1 {
                    out.push(violation(
                        BadSegments,
                        format!("{tag}: end {} != last segment end", end),
                    ));
                }
                if work != page.length {
                    out.push(violation(
                        WorkMismatch,
                        format!("{tag}: completed with work {} != length {}", work, page.length),
                    ));
                }
            }
            (AttemptStatus::Abandoned, None) => {
                if work >= page.length {
                    out.push(violation(
                        WorkMismatch,
                        format!("{tag}: abandoned but work {} >= length {}", work, page.length),
                    ));
                }
            }
            (AttemptStatus::Completed, None) => {
                out.push(violation(BadSegments, format!("{tag}: completed without end time")))
            }
            (AttemptStatus::Abandoned, Some(_)) => {
                out.push(violation(BadSegments, format!("{tag}: abandoned with end time")))
            }
        }
    }

    // Single server: work segments never overlap across attempts.
    let mut segments: Vec<(&Rat, &Rat, usize)> = transcript
        .attempts
        .iter()
        .enumerate()
        .flat_map(|(i, a)| a.segments.iter().map(move |(f, t)| (f, t, i)))
        .collect();
    segments.sort();
    for w in segments.windows(2) {
        let (_, prev_to, i) = w[0];
        let (next_from, _, j) = w[1];
        if next_from < prev_to {
            out.push(violation(
                ServerConflict,
                format!("attempts {i} and {j} overlap at {next_from}"),
            ));
        }
    }

    // Finish times: present for every request, minimal, and consistent with
    // the satisfaction rule (arrival <= start of the satisfying attempt).
    for req in &instance.requests {
        let id = req.id();
        let Some(f) = transcript.finish.get(&id) else {
            out.push(violation(MissingFinish, format!("request {id} has no finish time")));
            continue;
        };
        let completed: Vec<&TransmissionAttempt> = transcript
            .attempts
            .iter()
            .filter(|a| a.page == req.page && a.status == AttemptStatus::Completed)
            .collect();
        match instance.setting {
            Setting::Broadcast => {
                let min_end = completed
                    .iter()
                    .filter(|a| a.start >= req.arrival)
                    .map(|a| a.end.as_ref().unwrap())
                    .min();
                if min_end != Some(f) {
                    let early = completed
                        .iter()
                        .any(|a| a.end.as_ref() == Some(f) && a.start < req.arrival);
                    if early {
                        out.push(violation(
                            SatisfyingAttemptBeforeArrival,
                            format!("request {id}: satisfying attempt starts before arrival {}", req.arrival),
                        ));
                    } else if let Some(min_end) = min_end {
                        out.push(violation(
                            FinishNotMinimal,
                            format!("request {id}: finish {f}, earliest possible {min_end}"),
                        ));
                    } else {
                        out.push(violation(
                            NoSatisfyingAttempt,
                            format!(
                                "request {id}: no completed attempt starts at or after arrival {}",
                                req.arrival
                            ),
                        ));
                    }
                }
            }
            Setting::Unicast => {
                // Each transmission serves exactly one of the record's copies.
                for a in &completed {
                    if a.start < req.arrival {
                        out.push(violation(
                            SatisfyingAttemptBeforeArrival,
                            format!("request {id}: attempt starts before arrival {}", req.arrival),
                        ));
                    }
                }
                if BigUint::from(completed.len()) != req.multiplicity {
                    out.push(violation(
                        AttemptCountMismatch,
                        format!(
                            "request {id}: {} completed attempts for {} copies",
                            completed.len(),
                            req.multiplicity
                        ),
                    ));
                } else if let Some(last) = completed.iter().map(|a| a.end.as_ref().unwrap()).max() {
                    if f != last {
                        out.push(violation(
                            FinishNotMinimal,
                            format!("request {id}: finish {f} != last copy completion {last}"),
                        ));
                    }
                }
            }
        }
    }
    for id in transcript.finish.keys() {
        if instance.request(id).is_none() {
            out.push(violation(
                UnknownRequest,
                format!("finish entry for unknown request {id}"),
            ));
        }
    }

    // In broadcast, a forcing request must still be unsatisfied when its
    // attempt starts, i.e. the completed attempt it forced is what finishes it.
    if instance.setting == Setting::Broadcast {
        for (i, a) in transcript.attempts.iter().enumerate() {
            if a.status != AttemptStatus::Completed {
                continue;
            }
            if let Some(f) = transcript.finish.get(&a.forcing_request) {
                if f != a.end.as_ref().unwrap() {
                    out.push(violation(
                        ForcerAlreadySatisfied,
                        format!(
                            "attempt {i}: forcing request {} was satisfied at {f}, not by this attempt",
                            a.forcing_request
                        ),
                    ));
                }
            }
        }
    }

    out
}

/// Wire format: the JSON shapes documented in the README.
mod wire {
    use super::*;

    fn biguint_to_string<S: serde::Serializer>(
        v: &Option<BigUint>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        match v {
            Some(m) => s.serialize_some(&m.to_string()),
            None => s.serialize_none(),
        }
    }

    fn biguint_from_json<'de, D: serde::Deserializer<'de>>(
        d: D,
    ) -> Result<Option<BigUint>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Int(n)) => Ok(Some(BigUint::from(n))),
            Some(Raw::Str(s)) => s
                .parse()
                .map(Some)
                .map_err(|_| serde::de::Error::custom(format!("bad multiplicity {s:?}"))),
        }
    }

    #[derive(Serialize, Deserialize)]
    pub(super) struct Page {
        pub id: String,
        pub length: Rat,
    }

    #[derive(Serialize, Deserialize)]
    pub(super) struct Request {
        pub page: String,
        pub arrival: Rat,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub deadline: Option<Rat>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub weight: Option<Rat>,
        #[serde(
            default,
            skip_serializing_if = "Option::is_none",
            serialize_with = "biguint_to_string",
            deserialize_with = "biguint_from_json"
        )]
        pub multiplicity: Option<BigUint>,
    }

    #[derive(Serialize, Deserialize)]
    pub(super) struct Instance {
        pub time_model: TimeModel,
        pub setting: Setting,
        pub pages: Vec<Page>,
        pub requests: Vec<Request>,
    }

    impl From<&super::Instance> for Instance {
        fn from(inst: &super::Instance) -> Self {
            Instance {
                time_model: inst.time_model,
                setting: inst.setting,
                pages: inst
                    .pages
                    .iter()
                    .map(|p| Page { id: p.id.clone(), length: p.length.clone() })
                    .collect(),
                requests: inst
                    .requests
                    .iter()
                    .map(|r| Request {
                        page: r.page.clone(),
                        arrival: r.arrival.clone(),
                        deadline: r.deadline.clone(),
                        weight: (r.weight != Rat::one()).then(|| r.weight.clone()),
                        multiplicity: (!r.multiplicity.is_one())
                            .then(|| r.multiplicity.clone()),
                    })
                    .collect(),
            }
        }
    }

    impl TryFrom<Instance> for super::Instance {
        type Error = ModelError;
        fn try_from(raw: Instance) -> Result<Self, ModelError> {
            super::Instance::new(
                raw.time_model,
                raw.setting,
                raw.pages
                    .into_iter()
                    .map(|p| super::Page { id: p.id, length: p.length })
                    .collect(),
                raw.requests
                    .into_iter()
                    .map(|r| RequestSpec {
                        page: r.page,
                        arrival: r.arrival,
                        deadline: r.deadline,
                        weight: r.weight,
                        multiplicity: r.multiplicity,
                    })
                    .collect(),
            )
        }
    }

    #[derive(Serialize, Deserialize)]
    pub(super) struct Attempt {
        pub page: String,
        pub start: Rat,
        pub segments: Vec<(Rat, Rat)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub end: Option<Rat>,
        pub status: AttemptStatus,
        pub forcing_request: RequestId,
    }

    #[derive(Serialize, Deserialize)]
    pub(super) struct Transcript {
        pub instance: Instance,
        pub speed: Rat,
        pub attempts: Vec<Attempt>,
        pub finish: BTreeMap<RequestId, Rat>,
    }

    impl From<&super::Transcript> for Transcript {
        fn from(t: &super::Transcript) -> Self {
            Transcript {
                instance: Instance::from(&t.instance),
                speed: t.speed.clone(),
                attempts: t
                    .attempts
                    .iter()
                    .map(|a| Attempt {
                        page: a.page.clone(),
                        start: a.start.clone(),
                        segments: a.segments.clone(),
                        end: a.end.clone(),
                        status: a.status,
                        forcing_request: a.forcing_request.clone(),
                    })
                    .collect(),
                finish: t.finish.clone(),
            }
        }
    }

    impl TryFrom<Transcript> for super::Transcript {
        type Error = ModelError;
        fn try_from(raw: Transcript) -> Result<Self, ModelError> {
            Ok(super::Transcript {
                instance: raw.instance.try_into()?,
                speed: raw.speed,
                attempts: raw
                    .attempts
                    .into_iter()
                    .map(|a| TransmissionAttempt {
                        page: a.page,
                        start: a.start,
                        segments: a.segments,
                        end: a.end,
                        status: a.status,
                        forcing_request: a.forcing_request,
                    })
                    .collect(),
                finish: raw.finish,
            })
        }
    }
}
