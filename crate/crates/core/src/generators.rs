//! Instance generators: the adversarial family that defeats the
//! largest-wait-ratio policy, its hand-built optimal reference schedule, and
//! seeded random instances for fuzzing.
//!
//! The adversarial family is parameterized by integers s >= 1 (server speed
//! given to the greedy policy) and c >= 2 (the ratio it is forced to lose
//! by). With q = 1 - 1/(sc) and k the smallest integer with c*q^k <= 1/(3s),
//! groups i = 0..=k of identical unit jobs are placed at
//!
//!   A_i = -(sc)^{k-i+1} - sum_{j<k-i} (sc)^j     (arrival, pre-shift)
//!   F_i = A_i + (sc)^{k-i+1}                     (predicted last completion)
//!   m_0 = s(sc)^{k+1},  m_i = s(sc)^{k-i}        (group sizes)
//!   S_i = s(sc)^{k-i} / q^{k-i}                  (slack)
//!   R_i = c * q^{k-i}                            (predicted max wait ratio)
//!
//! The greedy policy serves the groups back to back (group 0 in [A_0, F_0],
//! group i in [F_{i-1}, F_i]) and drives group k to wait ratio exactly c,
//! while serving every group at its arrival — except group 0, deferred to
//! F_k — stays at wait ratio at most 1. Times are shifted by -A_0 so the
//! emitted instance starts at 0.
//!
//! The slack constant: with the leading factor s in S_i both the boundary
//! identity (group i and i+1 have equal wait ratio at F_i) and
//! R_i = (F_i - A_i)/S_i = c*q^{k-i} hold as exact rational identities for
//! every integer s, c. These identities are asserted here and replayed
//! against the simulator by the verification suite.

use num_bigint::{BigInt, BigUint};


use crate::engine::{GroupBlock, GroupStats, GroupedRun};
use crate::model::{Instance, Page, RequestSpec, Setting, TimeModel};
use crate::rat::Rat;

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("adversary requires integer s >= 1 and c >= 2 (got s={0}, c={1})")]
    BadParameters(u64, u64),
    #[error("k={0} is below the minimal valid k={1}: group-0 wait ratio {2} exceeds 1/(3s)")]
    KTooSmall(u32, u32, Rat),
    #[error("inconsistent random-instance parameters: {0}")]
    BadRandomParams(&'static str),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    /// Pre-shift arrival A_i.
    pub arrival: Rat,
    /// Slack S_i (deadline = arrival + slack).
    pub slack: Rat,
    /// Job count m_i.
    pub jobs: BigUint,
    /// Pre-shift predicted completion F_i of the group under the greedy run.
    pub finish: Rat,
    /// Predicted maximum wait ratio R_i under the greedy run.
    pub ratio: Rat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryPlan {
    pub s: u64,
    pub c: u64,
    pub k: u32,
    pub groups: Vec<GroupSpec>,
    /// Added to every pre-shift time so the instance starts at 0 (= -A_0).
    pub shift: Rat,
}

impl AdversaryPlan {
    pub fn page_name(&self, group: usize) -> String {
        let width = self.k.to_string().len();
        format!("g{group:0width$}")
    }

    pub fn total_jobs(&self) -> BigUint {
        self.groups.iter().map(|g| &g.jobs).sum()
    }

    pub fn to_json(&self) -> String {
        let rats = |f: fn(&GroupSpec) -> &Rat| -> Vec<String> {
            self.groups.iter().map(|g| f(g).to_string()).collect()
        };
        serde_json::to_string_pretty(&serde_json::json!({
            "s": self.s,
            "c": self.c,
            "k": self.k,
            "A": rats(|g| &g.arrival),
            "S": rats(|g| &g.slack),
            "m": self.groups.iter().map(|g| g.jobs.to_string()).collect::<Vec<_>>(),
            "F": rats(|g| &g.finish),
            "R": rats(|g| &g.ratio),
            "shift": self.shift.to_string(),
        }))
        .expect("serializable")
    }
}

/// Smallest k with c * (1 - 1/sc)^k <= 1/(3s).
pub fn minimal_k(s: u64, c: u64) -> u32 {
    let q = decay(s, c);
    let target = Rat::one() / Rat::from_int(3 * s as i64);
    let mut acc = Rat::from_int(c as i64);
    let mut k = 0;
    while acc > target {
        acc = &acc * &q;
        k += 1;
    }
    k
}

fn decay(s: u64, c: u64) -> Rat {
    let sc = (s * c) as i64;
    Rat::new(sc - 1, sc)
}

/// Builds the adversarial plan and its unicast instance (grouped via
/// multiplicities, shifted to nonnegative times).
pub fn build_lf_adversary(
    s: u64,
    c: u64,
    k_override: Option<u32>,
) -> Result<(AdversaryPlan, Instance), GenError> {
    if s < 1 || c < 2 || s.checked_mul(c).and_then(|sc| i64::try_from(sc).ok()).is_none() {
        return Err(GenError::BadParameters(s, c));
    }
    let k_min = minimal_k(s, c);
    let k = k_override.unwrap_or(k_min);
    let q = decay(s, c);
    if k < k_min {
        let r0 = Rat::from_int(c as i64) * q.pow(k as i32);
        return Err(GenError::KTooSmall(k, k_min, r0));
    }

    let sc = Rat::from_int((s * c) as i64);
    let s_rat = Rat::from_int(s as i64);
    let c_rat = Rat::from_int(c as i64);
    // sum_{j<e} (sc)^j = ((sc)^e - 1) / (sc - 1)
    let geo = |e: i32| (&sc.pow(e) - &Rat::one()) / (&sc - &Rat::one());

    let mut groups = Vec::with_capacity(k as usize + 1);
    for i in 0..=k {
        let e = (k - i) as i32;
        let arrival = -(&sc.pow(e + 1)) - &geo(e);
        let finish = &arrival + &sc.pow(e + 1);
        let jobs_rat = if i == 0 {
            &s_rat * &sc.pow(k as i32 + 1)
        } else {
            &s_rat * &sc.pow(e)
        };
        let jobs: BigUint = jobs_rat.numer().try_into().expect("positive integer");
        let slack = &(&s_rat * &sc.pow(e)) / &q.pow(e);
        let ratio = &c_rat * &q.pow(e);
        debug_assert_eq!((&finish - &arrival) / &slack, ratio, "group {i} ratio identity");
        groups.push(GroupSpec { arrival, slack, jobs, finish, ratio });
    }
    // Boundary identity: groups i and i+1 share their wait ratio at F_i.
    for i in 0..k as usize {
        debug_assert_eq!(
            (&groups[i].finish - &groups[i].arrival) / &groups[i].slack,
            (&groups[i].finish - &groups[i + 1].arrival) / &groups[i + 1].slack,
            "boundary identity at F_{i}"
        );
    }

    let shift = -&groups[0].arrival;
    let plan = AdversaryPlan { s, c, k, groups, shift };

    let pages = (0..=k as usize)
        .map(|i| Page { id: plan.page_name(i), length: Rat::one() })
        .collect();
    let specs = plan
        .groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let arrival = &g.arrival + &plan.shift;
            RequestSpec {
                page: plan.page_name(i),
                deadline: Some(&arrival + &g.slack),
                arrival,
                weight: None,
                multiplicity: Some(g.jobs.clone()),
            }
        })
        .collect();
    let instance = Instance::new(TimeModel::Continuous, Setting::Unicast, pages, specs)?;
    Ok((plan, instance))
}

/// The reference optimal schedule as a compressed run at speed 1: group i is
/// served on arrival in [A_i, A_i + m_i] for i >= 1, and group 0 is deferred
/// to [F_k, F_k + m_0]. Block disjointness is asserted.
pub fn reference_opt_run(plan: &AdversaryPlan, instance: &Instance) -> GroupedRun {
    let mut blocks: Vec<(usize, GroupBlock)> = Vec::new();
    for (i, g) in plan.groups.iter().enumerate() {
        let start = if i == 0 {
            &plan.groups[plan.k as usize].finish + &plan.shift
        } else {
            &g.arrival + &plan.shift
        };
        let jobs = Rat::from(&BigInt::from(g.jobs.clone()));
        blocks.push((
            i,
            GroupBlock {
                page: plan.page_name(i),
                end: &start + &jobs,
                start,
                jobs: g.jobs.clone(),
            },
        ));
    }
    blocks.sort_by(|a, b| a.1.start.cmp(&b.1.start));
    for w in blocks.windows(2) {
        assert!(
            w[0].1.end <= w[1].1.start,
            "reference blocks overlap: {} ends at {}, {} starts at {}",
            w[0].1.page,
            w[0].1.end,
            w[1].1.page,
            w[1].1.start
        );
    }

    let mut stats: Vec<(usize, GroupStats)> = Vec::new();
    let mut finish = std::collections::BTreeMap::new();
    for (i, block) in &blocks {
        let req = instance
            .requests
            .iter()
            .find(|r| r.page == block.page)
            .expect("plan and instance pages agree");
        finish.insert(req.id(), block.end.clone());
        stats.push((
            *i,
            GroupStats {
                id: req.id(),
                first_start: block.start.clone(),
                last_finish: block.end.clone(),
                max_wait_ratio: Some((&block.end - &req.arrival) / &req.slack().unwrap()),
            },
        ));
    }
    stats.sort_by_key(|(i, _)| *i);

    GroupedRun {
        speed: Rat::one(),
        blocks: blocks.into_iter().map(|(_, b)| b).collect(),
        stats: stats.into_iter().map(|(_, s)| s).collect(),
        finish,
    }
}

/// Splitmix64: a tiny deterministic generator, stable across platforms and
/// versions so seeded corpora never drift.
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in 0..n.
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}

#[derive(Debug, Clone, Copy)]
pub enum DeadlineStyle {
    /// No deadlines (response-time instances).
    None,
    /// Deadline = arrival + length + extra, extra up to `max_extra`.
    Present { max_extra: u64 },
}

#[derive(Debug, Clone, Copy)]
pub enum WeightStyle {
    Unit,
    /// Integer weights in 1..=max.
    RandomInt { max: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct RandomParams {
    pub pages: usize,
    pub requests: usize,
    pub horizon: u64,
    pub max_length: u64,
    pub deadlines: DeadlineStyle,
    pub weights: WeightStyle,
    pub slotted: bool,
    pub setting: Setting,
}

/// Deterministic-in-seed random instance. All model invariants hold by
/// construction (deadlines are drawn as arrival + length + extra).
pub fn random_instance(seed: u64, params: &RandomParams) -> Result<Instance, GenError> {
    if params.pages == 0 || params.pages > 26 {
        return Err(GenError::BadRandomParams("pages must be in 1..=26"));
    }
    if params.slotted && params.max_length != 1 {
        return Err(GenError::BadRandomParams("slotted requires unit lengths"));
    }
    if params.setting == Setting::Unicast && params.pages < params.requests {
        return Err(GenError::BadRandomParams("unicast needs one page per request"));
    }
    let mut rng = SplitMix64::new(seed);

    // Small fractional offsets make exact ties common without breaking the
    // slotted integrality rule.
    let frac = |rng: &mut SplitMix64| {
        if params.slotted {
            Rat::zero()
        } else {
            match rng.below(6) {
                0 => Rat::new(1, 2),
                1 => Rat::new(1, 4),
                2 => Rat::new(1, 3),
                _ => Rat::zero(),
            }
        }
    };

    let pages: Vec<Page> = (0..params.pages)
        .map(|i| Page {
            id: crate::oracle::page_name(i),
            length: if params.slotted {
                Rat::one()
            } else {
                Rat::from_int(rng.below(params.max_length) as i64 + 1)
            },
        })
        .collect();

    let mut specs = Vec::with_capacity(params.requests);
    for r in 0..params.requests {
        let page = match params.setting {
            Setting::Broadcast => rng.below(params.pages as u64) as usize,
            Setting::Unicast => r,
        };
        let arrival = Rat::from_int(rng.below(params.horizon + 1) as i64) + frac(&mut rng);
        let mut spec = RequestSpec::new(pages[page].id.clone(), arrival);
        if let DeadlineStyle::Present { max_extra } = params.deadlines {
            let extra = Rat::from_int(rng.below(max_extra + 1) as i64) + frac(&mut rng);
            let deadline = &spec.arrival + &(&pages[page].length + &extra);
            spec = spec.deadline(deadline);
        }
        if let WeightStyle::RandomInt { max } = params.weights {
            spec = spec.weight(Rat::from_int(rng.below(max) as i64 + 1));
        }
        specs.push(spec);
    }
    Ok(Instance::new(
        if params.slotted { TimeModel::Slotted } else { TimeModel::Continuous },
        params.setting,
        pages,
        specs,
    )?)
}

#[derive(Debug, Clone, Copy)]
pub struct GroupedParams {
    pub groups: usize,
    pub max_multiplicity: u64,
    pub horizon: u64,
    pub max_slack_extra: u64,
}

/// Random grouped unicast instance with unit jobs, for fast-forward
/// equivalence fuzzing.
pub fn random_grouped_instance(seed: u64, params: &GroupedParams) -> Result<Instance, GenError> {
    let mut rng = SplitMix64::new(seed ^ 0x67726f75);
    let width = (params.groups.max(2) - 1).to_string().len();
    let pages: Vec<Page> = (0..params.groups)
        .map(|i| Page { id: format!("g{i:0width$}"), length: Rat::one() })
        .collect();
    let specs = pages
        .iter()
        .map(|p| {
            let arrival = Rat::from_int(rng.below(params.horizon + 1) as i64);
            let slack = Rat::from_int(rng.below(params.max_slack_extra + 1) as i64 + 1);
            RequestSpec {
                page: p.id.clone(),
                deadline: Some(&arrival + &slack),
                arrival,
                weight: None,
                multiplicity: Some(BigUint::from(rng.below(params.max_multiplicity) + 1)),
            }
        })
        .collect();
    Ok(Instance::new(TimeModel::Continuous, Setting::Unicast, pages, specs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use num_traits::ToPrimitive;

    #[test]
    fn plan_1_2_matches_the_worked_numbers() {
        let (plan, instance) = build_lf_adversary(1, 2, None).unwrap();
        assert_eq!(plan.k, 3);
        let a: Vec<Rat> = plan.groups.iter().map(|g| g.arrival.clone()).collect();
        assert_eq!(a, vec![rat(-23, 1), rat(-11, 1), rat(-5, 1), rat(-2, 1)]);
        let f: Vec<Rat> = plan.groups.iter().map(|g| g.finish.clone()).collect();
        assert_eq!(f, vec![rat(-7, 1), rat(-3, 1), rat(-1, 1), Rat::zero()]);
        let m: Vec<u64> = plan.groups.iter().map(|g| g.jobs.to_u64().unwrap()).collect();
        assert_eq!(m, vec![16, 4, 2, 1]);
        let s: Vec<Rat> = plan.groups.iter().map(|g| g.slack.clone()).collect();
        assert_eq!(s, vec![rat(64, 1), rat(16, 1), rat(4, 1), Rat::one()]);
        let r: Vec<Rat> = plan.groups.iter().map(|g| g.ratio.clone()).collect();
        assert_eq!(r, vec![rat(1, 4), rat(1, 2), Rat::one(), rat(2, 1)]);
        assert_eq!(plan.shift, rat(23, 1));

        assert_eq!(instance.setting, Setting::Unicast);
        assert_eq!(instance.requests[0].arrival, Rat::zero());
        assert_eq!(instance.requests[3].arrival, rat(21, 1));
        assert_eq!(instance.requests[3].slack(), Some(Rat::one()));
        assert_eq!(instance.total_jobs(), BigUint::from(23u32));
    }

    #[test]
    fn plan_1_3_group_sizes() {
        let (plan, _) = build_lf_adversary(1, 3, None).unwrap();
        assert_eq!(plan.k, 6);
        assert_eq!(plan.groups[0].jobs.to_u64(), Some(2187)); // 3^7
        assert_eq!(plan.groups[6].jobs.to_u64(), Some(1));
        assert_eq!(plan.groups[6].ratio, rat(3, 1));
    }

    #[test]
    fn plan_2_3_is_large_and_consistent() {
        let (plan, _) = build_lf_adversary(2, 3, None).unwrap();
        assert_eq!(plan.k, 16);
        assert_eq!(plan.groups[16].ratio, rat(3, 1));
        // R_0 <= 1/(3s)
        assert!(plan.groups[0].ratio <= rat(1, 6));
        // m_0 = 2 * 6^17 needs more than 32 bits.
        assert!(plan.groups[0].jobs > BigUint::from(u32::MAX));
    }

    #[test]
    fn k_override_below_minimum_is_rejected() {
        let err = build_lf_adversary(1, 2, Some(2)).unwrap_err();
        match err {
            GenError::KTooSmall(2, 3, r0) => assert_eq!(r0, rat(1, 2)),
            other => panic!("unexpected error {other:?}"),
        }
        // Raising k beyond the minimum only strengthens the construction.
        assert!(build_lf_adversary(1, 2, Some(5)).is_ok());
    }

    #[test]
    fn reference_run_blocks_and_ratios() {
        let (plan, instance) = build_lf_adversary(1, 2, None).unwrap();
        let run = reference_opt_run(&plan, &instance);
        let spans: Vec<(Rat, Rat)> = run
            .blocks
            .iter()
            .map(|b| (b.start.clone(), b.end.clone()))
            .collect();
        // Shifted by 23: groups 1..3 on arrival, group 0 deferred to [23, 39].
        assert_eq!(spans, vec![
            (rat(12, 1), rat(16, 1)),
            (rat(18, 1), rat(20, 1)),
            (rat(21, 1), rat(22, 1)),
            (rat(23, 1), rat(39, 1)),
        ]);
        let ratios: Vec<Rat> = run
            .stats
            .iter()
            .map(|s| s.max_wait_ratio.clone().unwrap())
            .collect();
        assert_eq!(ratios, vec![rat(39, 64), rat(1, 4), rat(1, 2), Rat::one()]);
        assert_eq!(ratios.iter().max(), Some(&Rat::one()));
    }

    #[test]
    fn random_instances_are_deterministic_and_valid() {
        let params = RandomParams {
            pages: 3,
            requests: 6,
            horizon: 5,
            max_length: 3,
            deadlines: DeadlineStyle::Present { max_extra: 4 },
            weights: WeightStyle::RandomInt { max: 5 },
            slotted: false,
            setting: Setting::Broadcast,
        };
        let a = random_instance(1, &params).unwrap();
        let b = random_instance(1, &params).unwrap();
        assert_eq!(a, b);
        for seed in 0..100 {
            let inst = random_instance(seed, &params).unwrap();
            let again = crate::model::parse_instance(&inst.to_json()).unwrap();
            assert_eq!(inst, again);
        }
    }

    #[test]
    fn zero_request_instance_is_valid() {
        let params = RandomParams {
            pages: 2,
            requests: 0,
            horizon: 5,
            max_length: 1,
            deadlines: DeadlineStyle::None,
            weights: WeightStyle::Unit,
            slotted: true,
            setting: Setting::Broadcast,
        };
        let inst = random_instance(7, &params).unwrap();
        assert!(inst.requests.is_empty());
    }
}
