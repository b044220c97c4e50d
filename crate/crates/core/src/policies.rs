//! Selection rules: each maps the set of released, unsatisfied requests at a
//! time instant to the request that forces the next broadcast.
//!
//! The waiting policies (SSF-W, BWF, SRF-W) first compute the current maximum
//! of their key quantity over the whole queue (the raw, unclamped ratio or
//! weighted wait), keep only requests within a factor `c` of it, and pick
//! within that filtered set. The maximum always qualifies, so the filtered
//! set is nonempty whenever the queue is.
//!
//! Ties are broken deterministically everywhere: by the policy's primary key,
//! then arrival, then page id, then request index. LF is implemented as
//! SSF-W with `c = 1` (the filter then keeps exactly the maximum-ratio
//! requests), so the two produce identical transcripts by construction.

use crate::model::RequestId;
use crate::rat::Rat;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolicyError {
    #[error("policy {0} requires parameter c")]
    MissingParameter(&'static str),
    #[error("policy parameter c = {0} must be at least 1")]
    BadParameter(Rat),
    #[error("policy {0} does not take parameter c")]
    UnexpectedParameter(&'static str),
    #[error("request {0} has no deadline, required by the policy")]
    MissingDeadline(RequestId),
    #[error("selection from an empty queue")]
    EmptyQueue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Fifo,
    Ssf,
    Ssfw,
    Bwf,
    Srfw,
    Lf,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Fifo => "fifo",
            PolicyKind::Ssf => "ssf",
            PolicyKind::Ssfw => "ssfw",
            PolicyKind::Bwf => "bwf",
            PolicyKind::Srfw => "srfw",
            PolicyKind::Lf => "lf",
        }
    }

    pub fn takes_parameter(self) -> bool {
        matches!(self, PolicyKind::Ssfw | PolicyKind::Bwf | PolicyKind::Srfw)
    }

    pub fn needs_deadlines(self) -> bool {
        matches!(self, PolicyKind::Ssf | PolicyKind::Ssfw | PolicyKind::Srfw | PolicyKind::Lf)
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "fifo" => PolicyKind::Fifo,
            "ssf" => PolicyKind::Ssf,
            "ssfw" => PolicyKind::Ssfw,
            "bwf" => PolicyKind::Bwf,
            "srfw" => PolicyKind::Srfw,
            "lf" => PolicyKind::Lf,
            _ => return Err(format!("unknown policy {s:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub c: Option<Rat>,
}

impl PolicyConfig {
    /// The waiting parameter is required exactly for SSF-W/BWF/SRF-W and must
    /// be >= 1. The competitive guarantees assume c > 1; c = 1 is accepted
    /// because it turns SSF-W into LF.
    pub fn new(kind: PolicyKind, c: Option<Rat>) -> Result<Self, PolicyError> {
        match (kind.takes_parameter(), &c) {
            (true, None) => Err(PolicyError::MissingParameter(kind.name())),
            (true, Some(c)) if c < &Rat::one() => Err(PolicyError::BadParameter(c.clone())),
            (false, Some(_)) => Err(PolicyError::UnexpectedParameter(kind.name())),
            _ => Ok(PolicyConfig { kind, c }),
        }
    }

    pub fn fifo() -> Self {
        PolicyConfig { kind: PolicyKind::Fifo, c: None }
    }

    pub fn lf() -> Self {
        PolicyConfig { kind: PolicyKind::Lf, c: None }
    }

    pub fn ssfw(c: Rat) -> Self {
        PolicyConfig { kind: PolicyKind::Ssfw, c: Some(c) }
    }
}

/// A released, unsatisfied request as the policies see it at time `now`,
/// with its current ratio and weighted quantities precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueEntry {
    pub id: RequestId,
    pub arrival: Rat,
    pub slack: Option<Rat>,
    pub weight: Rat,
    /// (now - arrival) / slack, unclamped; present iff the slack is.
    pub ratio: Option<Rat>,
    /// weight * (now - arrival)
    pub weighted_wait: Rat,
    /// weight * (now - arrival) / slack; present iff the slack is.
    pub weighted_ratio: Option<Rat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueView {
    pub now: Rat,
    pub entries: Vec<QueueEntry>,
}

impl QueueView {
    pub fn build(
        now: Rat,
        items: impl IntoIterator<Item = (RequestId, Rat, Option<Rat>, Rat)>,
    ) -> Self {
        let entries = items
            .into_iter()
            .map(|(id, arrival, slack, weight)| {
                let wait = &now - &arrival;
                let ratio = slack.as_ref().map(|s| &wait / s);
                QueueEntry {
                    weighted_wait: &weight * &wait,
                    weighted_ratio: ratio.as_ref().map(|r| &weight * r),
                    ratio,
                    id,
                    arrival,
                    slack,
                    weight,
                }
            })
            .collect();
        QueueView { now, entries }
    }
}

fn tie_key(e: &QueueEntry) -> (&Rat, &str, u32) {
    (&e.arrival, e.id.page.as_str(), e.id.index)
}

fn require_slack(e: &QueueEntry) -> Result<&Rat, PolicyError> {
    e.slack
        .as_ref()
        .ok_or_else(|| PolicyError::MissingDeadline(e.id.clone()))
}

fn nonempty(view: &QueueView) -> Result<(), PolicyError> {
    if view.entries.is_empty() {
        Err(PolicyError::EmptyQueue)
    } else {
        Ok(())
    }
}

/// Earliest arrival, ties by (page id, request index).
pub fn fifo_select(view: &QueueView) -> Result<&QueueEntry, PolicyError> {
    nonempty(view)?;
    Ok(view.entries.iter().min_by_key(|e| tie_key(e)).unwrap())
}

/// Smallest slack, no waiting filter. The broadcast-hostile baseline.
pub fn ssf_select(view: &QueueView) -> Result<&QueueEntry, PolicyError> {
    nonempty(view)?;
    view.entries
        .iter()
        .map(|e| require_slack(e).map(|s| ((s, tie_key(e)), e)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .min_by(|a, b| a.0.cmp(&b.0))
        .map(|(_, e)| e)
        .ok_or(PolicyError::EmptyQueue)
}

/// Smallest slack among requests whose current ratio is within a factor c of
/// the queue maximum.
pub fn ssfw_select<'a>(view: &'a QueueView, c: &Rat) -> Result<&'a QueueEntry, PolicyError> {
    nonempty(view)?;
    for e in &view.entries {
        require_slack(e)?;
    }
    let alpha = view
        .entries
        .iter()
        .map(|e| e.ratio.as_ref().unwrap())
        .max()
        .unwrap();
    view.entries
        .iter()
        .filter(|e| &(e.ratio.as_ref().unwrap() * c) >= alpha)
        .min_by(|a, b| {
            (a.slack.as_ref().unwrap(), tie_key(a)).cmp(&(b.slack.as_ref().unwrap(), tie_key(b)))
        })
        .ok_or(PolicyError::EmptyQueue)
}

/// Largest weight among requests whose weighted wait is within a factor c of
/// the queue maximum.
pub fn bwf_select<'a>(view: &'a QueueView, c: &Rat) -> Result<&'a QueueEntry, PolicyError> {
    nonempty(view)?;
    let rho = view.entries.iter().map(|e| &e.weighted_wait).max().unwrap();
    view.entries
        .iter()
        .filter(|e| &(&e.weighted_wait * c) >= rho)
        .min_by(|a, b| {
            (std::cmp::Reverse(&a.weight), tie_key(a))
                .cmp(&(std::cmp::Reverse(&b.weight), tie_key(b)))
        })
        .ok_or(PolicyError::EmptyQueue)
}

/// Smallest slack-over-weight among requests whose weighted ratio is within a
/// factor c of the queue maximum.
pub fn srfw_select<'a>(view: &'a QueueView, c: &Rat) -> Result<&'a QueueEntry, PolicyError> {
    nonempty(view)?;
    for e in &view.entries {
        require_slack(e)?;
    }
    let alpha_w = view
        .entries
        .iter()
        .map(|e| e.weighted_ratio.as_ref().unwrap())
        .max()
        .unwrap();
    view.entries
        .iter()
        .filter(|e| &(e.weighted_ratio.as_ref().unwrap() * c) >= alpha_w)
        .map(|e| ((e.slack.as_ref().unwrap() / &e.weight, tie_key(e)), e))
        .min_by(|a, b| a.0.cmp(&b.0))
        .map(|(_, e)| e)
        .ok_or(PolicyError::EmptyQueue)
}

/// Largest current wait ratio. Identical to SSF-W with c = 1: the filter then
/// keeps exactly the maximum-ratio requests and the slack key breaks ties
/// among them.
pub fn lf_select(view: &QueueView) -> Result<&QueueEntry, PolicyError> {
    ssfw_select(view, &Rat::one())
}

/// Dispatches to the policy's selector.
pub fn select<'a>(view: &'a QueueView, config: &PolicyConfig) -> Result<&'a QueueEntry, PolicyError> {
    match config.kind {
        PolicyKind::Fifo => fifo_select(view),
        PolicyKind::Ssf => ssf_select(view),
        PolicyKind::Ssfw => ssfw_select(view, config.c.as_ref().unwrap()),
        PolicyKind::Bwf => bwf_select(view, config.c.as_ref().unwrap()),
        PolicyKind::Srfw => srfw_select(view, config.c.as_ref().unwrap()),
        PolicyKind::Lf => lf_select(view),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn id(page: &str) -> RequestId {
        RequestId::new(page, 0)
    }

    fn view(now: i64, items: Vec<(RequestId, Rat, Option<Rat>, Rat)>) -> QueueView {
        QueueView::build(Rat::from_int(now), items)
    }

    #[test]
    fn fifo_earliest_arrival_then_page_id() {
        let v = view(2, vec![
            (id("a"), Rat::zero(), None, Rat::one()),
            (id("b"), Rat::one(), None, Rat::one()),
        ]);
        assert_eq!(fifo_select(&v).unwrap().id, id("a"));

        let v = view(2, vec![
            (id("b"), Rat::zero(), None, Rat::one()),
            (id("a"), Rat::zero(), None, Rat::one()),
        ]);
        assert_eq!(fifo_select(&v).unwrap().id, id("a"));

        let v = view(2, vec![(id("b"), Rat::one(), None, Rat::one())]);
        assert_eq!(fifo_select(&v).unwrap().id, id("b"));
    }

    #[test]
    fn ssfw_prefers_small_slack_within_q() {
        // ratios 1/2 and 1; with c = 2 both qualify and the small slack wins.
        let v = view(5, vec![
            (id("a"), Rat::zero(), Some(rat(10, 1)), Rat::one()),
            (id("b"), Rat::from_int(4), Some(Rat::one()), Rat::one()),
        ]);
        assert_eq!(ssfw_select(&v, &rat(2, 1)).unwrap().id, id("b"));
    }

    #[test]
    fn ssfw_waiting_excludes_fresh_request() {
        // The fresh small-slack request has ratio 1/10 < alpha/c = 1/4, so it
        // is held back and the large-slack request is scheduled.
        let v = view(5, vec![
            (id("a"), Rat::zero(), Some(rat(10, 1)), Rat::one()),
            (id("b"), rat(49, 10), Some(Rat::one()), Rat::one()),
        ]);
        assert_eq!(ssfw_select(&v, &rat(2, 1)).unwrap().id, id("a"));

        let single = view(5, vec![(id("b"), rat(49, 10), Some(Rat::one()), Rat::one())]);
        assert_eq!(ssfw_select(&single, &rat(2, 1)).unwrap().id, id("b"));
    }

    #[test]
    fn ssfw_missing_deadline_is_an_error() {
        let v = view(5, vec![(id("a"), Rat::zero(), None, Rat::one())]);
        assert_eq!(
            ssfw_select(&v, &rat(2, 1)),
            Err(PolicyError::MissingDeadline(id("a")))
        );
    }

    #[test]
    fn bwf_largest_weight_within_q() {
        let v = view(2, vec![
            (id("a"), Rat::zero(), None, Rat::one()),
            (id("b"), Rat::one(), None, rat(3, 1)),
        ]);
        assert_eq!(bwf_select(&v, &rat(2, 1)).unwrap().id, id("b"));
    }

    #[test]
    fn bwf_equal_weights_reduce_to_earliest_arrival_in_q() {
        let v = view(2, vec![
            (id("b"), Rat::zero(), None, Rat::one()),
            (id("a"), Rat::one(), None, Rat::one()),
        ]);
        // Both in Q (waits 2 and 1 >= 2/2); equal weight, earliest arrival wins.
        assert_eq!(bwf_select(&v, &rat(2, 1)).unwrap().id, id("b"));
    }

    #[test]
    fn srfw_tie_on_both_keys_falls_to_page_order() {
        let v = view(4, vec![
            (id("a"), Rat::zero(), Some(rat(8, 1)), rat(4, 1)),
            (id("b"), Rat::zero(), Some(rat(2, 1)), Rat::one()),
        ]);
        // weighted ratios both 2, slack-over-weight both 2: page id decides.
        assert_eq!(srfw_select(&v, &rat(2, 1)).unwrap().id, id("a"));
    }

    #[test]
    fn srfw_with_unit_weights_matches_ssfw() {
        let v = view(7, vec![
            (id("a"), Rat::zero(), Some(rat(10, 1)), Rat::one()),
            (id("b"), Rat::from_int(4), Some(rat(3, 1)), Rat::one()),
            (id("c"), Rat::from_int(6), Some(rat(2, 1)), Rat::one()),
        ]);
        for c in [rat(3, 2), rat(2, 1), rat(4, 1)] {
            assert_eq!(
                srfw_select(&v, &c).unwrap().id,
                ssfw_select(&v, &c).unwrap().id
            );
        }
    }

    #[test]
    fn bwf_with_inverse_slack_weights_matches_ssfw() {
        let slacks = [rat(10, 1), rat(3, 1), rat(2, 1)];
        let arrivals = [Rat::zero(), Rat::from_int(4), Rat::from_int(6)];
        let pages = ["a", "b", "c"];
        let bwf_view = view(
            7,
            pages
                .iter()
                .zip(&arrivals)
                .zip(&slacks)
                .map(|((p, a), s)| (id(p), a.clone(), None, s.recip()))
                .collect(),
        );
        let ssfw_view = view(
            7,
            pages
                .iter()
                .zip(&arrivals)
                .zip(&slacks)
                .map(|((p, a), s)| (id(p), a.clone(), Some(s.clone()), Rat::one()))
                .collect(),
        );
        for c in [rat(3, 2), rat(2, 1)] {
            assert_eq!(
                bwf_select(&bwf_view, &c).unwrap().id,
                ssfw_select(&ssfw_view, &c).unwrap().id
            );
        }
    }

    #[test]
    fn lf_picks_max_ratio_and_breaks_ratio_ties_by_slack() {
        // Ratios: a: 2/4 = 1/2, b: 1/1 = 1 -> b.
        let v = view(2, vec![
            (id("a"), Rat::zero(), Some(rat(4, 1)), Rat::one()),
            (id("b"), Rat::one(), Some(Rat::one()), Rat::one()),
        ]);
        assert_eq!(lf_select(&v).unwrap().id, id("b"));

        // Equal ratios (1/2 each) with different slacks: smaller slack wins,
        // exactly as SSF-W with c = 1 would decide.
        let v = view(2, vec![
            (id("a"), Rat::zero(), Some(rat(4, 1)), Rat::one()),
            (id("b"), Rat::one(), Some(rat(2, 1)), Rat::one()),
        ]);
        assert_eq!(lf_select(&v).unwrap().id, id("b"));
        assert_eq!(ssfw_select(&v, &Rat::one()).unwrap().id, id("b"));
    }

    #[test]
    fn ssf_min_slack_then_arrival() {
        let v = view(5, vec![
            (id("a"), Rat::zero(), Some(rat(10, 1)), Rat::one()),
            (id("b"), Rat::from_int(4), Some(Rat::one()), Rat::one()),
        ]);
        assert_eq!(ssf_select(&v).unwrap().id, id("b"));

        let v = view(5, vec![
            (id("b"), Rat::from_int(2), Some(rat(5, 1)), Rat::one()),
            (id("a"), Rat::zero(), Some(rat(5, 1)), Rat::one()),
        ]);
        assert_eq!(ssf_select(&v).unwrap().id, id("a"));
    }

    #[test]
    fn config_validation() {
        assert!(PolicyConfig::new(PolicyKind::Ssfw, None).is_err());
        assert!(PolicyConfig::new(PolicyKind::Ssfw, Some(rat(1, 2))).is_err());
        assert!(PolicyConfig::new(PolicyKind::Ssfw, Some(Rat::one())).is_ok());
        assert!(PolicyConfig::new(PolicyKind::Fifo, Some(rat(2, 1))).is_err());
        assert!(PolicyConfig::new(PolicyKind::Lf, None).is_ok());
    }
}
