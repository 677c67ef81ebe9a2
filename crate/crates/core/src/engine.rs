//! The election procedure: ballot-sheet ordering, voter sorting, the
//! deterministic multi-seat tally, replay verification and the seed attack
//! available to a voter who knows every other seed.

use std::fmt::Write as _;

use crate::detgen::SplitMix64;
use crate::error::Error;
use crate::model::{
    validate_prefs, BallotSheet, Candidate, ElectionConfig, ElectionRecord, ElectionResult,
    SeatRecord, SeedContribution, VoterBallot,
};

/// Sorts candidates by seed, then by name (code point order).
pub fn order_candidates(mut raw: Vec<Candidate>) -> Vec<Candidate> {
    raw.sort_by(|a, b| a.seed.cmp(&b.seed).then_with(|| a.name.cmp(&b.name)));
    raw
}

/// Numbers the candidates for the ballot paper.
///
/// `ordered` must come from [`order_candidates`]. The generator is seeded with
/// the candidate seed sum and sheet position `i + 1` receives `ordered[p[i]]`
/// for the drawn permutation `p`.
pub fn ballot_permutation(
    ordered: Vec<Candidate>,
    config: &ElectionConfig,
) -> Result<BallotSheet, Error> {
    let seed_sum = config.sum_seeds(ordered.iter().map(|c| c.seed));
    let perm = SplitMix64::seed(seed_sum.value()).draw_permutation(ordered.len())?;
    let mut slots: Vec<Option<Candidate>> = ordered.into_iter().map(Some).collect();
    let sheet = perm
        .iter()
        .map(|&j| slots[j].take().expect("permutation index used once"))
        .collect();
    Ok(BallotSheet::new(sheet, seed_sum))
}

/// Orders ballots by seed, ties by preference list (a proper prefix first).
/// Identical ballots keep their input order.
pub fn sort_voters(ballots: &[VoterBallot]) -> Vec<VoterBallot> {
    let mut sorted = ballots.to_vec();
    sorted.sort_by(|a, b| a.seed.cmp(&b.seed).then_with(|| a.prefs.cmp(&b.prefs)));
    sorted
}

/// Ballots sorted and validated once, ready to be tallied under any seed.
#[derive(Clone, Debug)]
pub struct PreparedTally {
    sorted: Vec<VoterBallot>,
    candidates: usize,
    config: ElectionConfig,
}

impl PreparedTally {
    pub fn new(
        candidates: usize,
        ballots: &[VoterBallot],
        config: &ElectionConfig,
    ) -> Result<Self, Error> {
        if ballots.is_empty() {
            return Err(Error::NoVoters);
        }
        for (i, b) in ballots.iter().enumerate() {
            if b.seed.value() >= config.m() {
                return Err(Error::Precondition(format!(
                    "ballot {i}: seed out of range"
                )));
            }
            validate_prefs(&b.prefs, candidates)
                .map_err(|e| Error::Precondition(format!("ballot {i}: {e}")))?;
        }
        if ballots.iter().all(|b| b.prefs.is_empty()) {
            return Err(Error::NoElectableCandidate);
        }
        Ok(PreparedTally {
            sorted: sort_voters(ballots),
            candidates,
            config: *config,
        })
    }

    /// Ballots in voter-index order.
    pub fn voters(&self) -> &[VoterBallot] {
        &self.sorted
    }

    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn config(&self) -> &ElectionConfig {
        &self.config
    }

    /// Voter seed contributions summed modulo `m`.
    pub fn voter_seed_sum(&self) -> SeedContribution {
        self.config.sum_seeds(self.sorted.iter().map(|b| b.seed))
    }

    pub fn start(&self, seed: SeedContribution) -> TallyState<'_> {
        TallyState::new(self, seed)
    }

    pub fn run(&self, seed: SeedContribution) -> ElectionResult {
        let mut state = self.start(seed);
        while state.next_seat().is_some() {}
        state.finish()
    }
}

/// In-progress tally. Deleting elected candidates from every ballot is
/// represented by a shared elected mask plus a per-ballot cursor that always
/// rests on the first remaining preference.
#[derive(Clone, Debug)]
pub struct TallyState<'a> {
    tally: &'a PreparedTally,
    heads: Vec<usize>,
    is_elected: Vec<bool>,
    live: usize,
    generator: SplitMix64,
    result: ElectionResult,
}

impl<'a> TallyState<'a> {
    fn new(tally: &'a PreparedTally, seed: SeedContribution) -> Self {
        let heads = vec![0; tally.sorted.len()];
        let live = tally.sorted.iter().filter(|b| !b.prefs.is_empty()).count();
        TallyState {
            tally,
            heads,
            is_elected: vec![false; tally.candidates + 1],
            live,
            generator: SplitMix64::seed(seed.value()),
            result: ElectionResult {
                elected: Vec::new(),
                voter_seed_sum: seed,
                audit: Vec::new(),
                truncated: false,
            },
        }
    }

    /// Remaining preferences of `voter`, elected candidates removed.
    pub fn remaining_prefs(&self, voter: usize) -> impl Iterator<Item = u32> + '_ {
        self.tally.sorted[voter].prefs[self.heads[voter]..]
            .iter()
            .copied()
            .filter(|&c| !self.is_elected[c as usize])
    }

    pub fn generator(&self) -> &SplitMix64 {
        &self.generator
    }

    pub fn elected(&self) -> &[u32] {
        &self.result.elected
    }

    /// Fills the next seat. Returns `None` once all places are filled or every
    /// ballot is exhausted (the latter marks the result truncated).
    pub fn next_seat(&mut self) -> Option<&SeatRecord> {
        if self.result.elected.len() >= self.tally.config.places() {
            return None;
        }
        if self.live == 0 {
            self.result.truncated = true;
            return None;
        }
        let ballots = &self.tally.sorted;
        let draws_before = self.generator.draws();
        let mut redraws = 0;
        let voter = loop {
            let v = self
                .generator
                .uniform_below(ballots.len() as u64)
                .expect("at least one voter") as usize;
            if self.heads[v] < ballots[v].prefs.len() {
                break v;
            }
            redraws += 1;
        };
        let chosen = ballots[voter].prefs[self.heads[voter]];
        self.is_elected[chosen as usize] = true;
        for (head, ballot) in self.heads.iter_mut().zip(ballots) {
            let was_live = *head < ballot.prefs.len();
            while *head < ballot.prefs.len() && self.is_elected[ballot.prefs[*head] as usize] {
                *head += 1;
            }
            if was_live && *head == ballot.prefs.len() {
                self.live -= 1;
            }
        }
        self.result.elected.push(chosen);
        self.result.audit.push(SeatRecord {
            raw_draws: self.generator.draws() - draws_before,
            voter,
            redraws,
            elected: chosen,
        });
        self.result.audit.last()
    }

    pub fn finish(self) -> ElectionResult {
        self.result
    }
}

/// Runs the tally with the generator seeded by the voter seed sum.
pub fn tally(
    sheet: &BallotSheet,
    ballots: &[VoterBallot],
    config: &ElectionConfig,
) -> Result<ElectionResult, Error> {
    let prepared = PreparedTally::new(sheet.len(), ballots, config)?;
    Ok(prepared.run(prepared.voter_seed_sum()))
}

/// Runs the tally with the generator seeded by `seed` directly.
pub fn tally_with_seed(
    sheet: &BallotSheet,
    ballots: &[VoterBallot],
    config: &ElectionConfig,
    seed: SeedContribution,
) -> Result<ElectionResult, Error> {
    if seed.value() >= config.m() {
        return Err(Error::Precondition(format!(
            "seed out of range [0, {})",
            config.m()
        )));
    }
    Ok(PreparedTally::new(sheet.len(), ballots, config)?.run(seed))
}

/// The whole procedure: order candidates, number the ballot sheet, tally.
pub fn run_election(
    candidates: Vec<Candidate>,
    ballots: &[VoterBallot],
    config: &ElectionConfig,
) -> Result<ElectionRecord, Error> {
    let sheet = ballot_permutation(order_candidates(candidates), config)?;
    let result = tally(&sheet, ballots, config)?;
    Ok(ElectionRecord {
        config: *config,
        sheet,
        voters: ballots.len(),
        result,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldCheck {
    pub field: String,
    pub expected: String,
    pub claimed: String,
}

impl FieldCheck {
    pub fn matches(&self) -> bool {
        self.expected == self.claimed
    }
}

/// Field-by-field comparison of a recomputed election against a claimed one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub checks: Vec<FieldCheck>,
}

impl VerificationReport {
    pub fn is_match(&self) -> bool {
        self.checks.iter().all(FieldCheck::matches)
    }

    pub fn first_mismatch(&self) -> Option<&FieldCheck> {
        self.checks.iter().find(|c| !c.matches())
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &FieldCheck> {
        self.checks.iter().filter(|c| !c.matches())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let verdict = if self.is_match() { "MATCH" } else { "MISMATCH" };
        let _ = writeln!(out, "verification: {verdict}");
        let _ = writeln!(out, "checks: {}", self.checks.len());
        let _ = writeln!(out, "mismatches: {}", self.mismatches().count());
        if let Some(first) = self.first_mismatch() {
            let _ = writeln!(out, "first_mismatch: {}", first.field);
        }
        for c in self.mismatches() {
            let _ = writeln!(
                out,
                "mismatch {}: expected {:?}, claimed {:?}",
                c.field, c.expected, c.claimed
            );
        }
        out
    }
}

/// Recomputes the election from its inputs and compares it with `claimed`.
///
/// Checks run in a fixed order: parameters, candidate seed sum, ballot sheet,
/// voter seed sum, then each seat, truncation and the elected list.
pub fn verify_record(
    candidates: Vec<Candidate>,
    ballots: &[VoterBallot],
    config: &ElectionConfig,
    claimed: &ElectionRecord,
) -> Result<VerificationReport, Error> {
    let actual = run_election(candidates, ballots, config)?;
    let mut checks = Vec::new();
    let mut check = |field: String, expected: String, claimed: String| {
        checks.push(FieldCheck {
            field,
            expected,
            claimed,
        })
    };
    let cfg = config;
    check(
        "k".into(),
        cfg.k().to_string(),
        claimed.config.k().to_string(),
    );
    check(
        "places".into(),
        cfg.places().to_string(),
        claimed.config.places().to_string(),
    );
    check(
        "voters".into(),
        actual.voters.to_string(),
        claimed.voters.to_string(),
    );
    check(
        "candidate_seed_sum".into(),
        cfg.format_seed(actual.sheet.seed_sum()),
        claimed.config.format_seed(claimed.sheet.seed_sum()),
    );
    let describe = |c: Option<&Candidate>, cfg: &ElectionConfig| {
        c.map_or_else(
            || "<absent>".to_string(),
            |c| format!("{},{}", cfg.format_seed(c.seed), c.name),
        )
    };
    let rows = actual.sheet.len().max(claimed.sheet.len());
    for i in 1..=rows as u32 {
        check(
            format!("sheet.{i}"),
            describe(actual.sheet.get(i), cfg),
            describe(claimed.sheet.get(i), &claimed.config),
        );
    }
    check(
        "voter_seed_sum".into(),
        cfg.format_seed(actual.result.voter_seed_sum),
        claimed.config.format_seed(claimed.result.voter_seed_sum),
    );
    let seat = |s: Option<&SeatRecord>| {
        s.map_or_else(
            || "<absent>".to_string(),
            |s| {
                format!(
                    "raw_draws={} voter={} redraws={} elected={}",
                    s.raw_draws, s.voter, s.redraws, s.elected
                )
            },
        )
    };
    let seats = actual.result.audit.len().max(claimed.result.audit.len());
    for i in 0..seats {
        check(
            format!("seat.{}", i + 1),
            seat(actual.result.audit.get(i)),
            seat(claimed.result.audit.get(i)),
        );
    }
    check(
        "truncated".into(),
        actual.result.truncated.to_string(),
        claimed.result.truncated.to_string(),
    );
    let list = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
    check(
        "elected".into(),
        list(&actual.result.elected),
        list(&claimed.result.elected),
    );
    Ok(VerificationReport { checks })
}

/// Parses the candidates and ballots files and verifies `claimed` against them.
pub fn verify(
    candidates_text: &str,
    ballots_text: &str,
    config: &ElectionConfig,
    claimed: &ElectionRecord,
) -> Result<VerificationReport, Error> {
    let candidates = crate::model::parse_candidates(candidates_text, config)?;
    let ballots = crate::model::parse_ballots(ballots_text, candidates.len(), config)?;
    verify_record(candidates, &ballots, config, claimed)
}

/// What the attacking voter wants to control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DictatorMode {
    /// Chosen at every seat, so the elected list is the target's own ranking.
    #[default]
    EverySeat,
    /// Chosen for the first seat only.
    FirstSeat,
}

/// Searches for a seed contribution that makes the target voter the chosen
/// voter, given every other ballot with its seed.
///
/// Seeds are tried in ascending order and the first success is returned. In
/// [`DictatorMode::EverySeat`] the target must be chosen at each of the first
/// `min(places, target_prefs.len())` seats.
pub fn find_dictator_seed(
    sheet: &BallotSheet,
    others: &[VoterBallot],
    target_prefs: &[u32],
    config: &ElectionConfig,
    mode: DictatorMode,
) -> Result<Option<SeedContribution>, Error> {
    validate_prefs(target_prefs, sheet.len())
        .map_err(|e| Error::Precondition(format!("target: {e}")))?;
    if target_prefs.is_empty() {
        return Ok(None);
    }
    let needed = match mode {
        DictatorMode::EverySeat => config.places().min(target_prefs.len()),
        DictatorMode::FirstSeat => 1,
    };
    let others_sum = config.sum_seeds(others.iter().map(|b| b.seed));
    let sorted_others = sort_voters(others);
    for s in 0..config.m() {
        let seed = config.seed(s)?;
        let target = VoterBallot {
            seed,
            prefs: target_prefs.to_vec(),
        };
        // The target is appended last before the stable sort, so it lands
        // after every ballot that compares equal to it.
        let idx = sorted_others.partition_point(|b| (b.seed, &b.prefs) <= (seed, &target.prefs));
        let mut ballots = sorted_others.clone();
        ballots.insert(idx, target);
        let prepared = PreparedTally::new(sheet.len(), &ballots, config)?;
        let mut state = prepared.start(config.sum_seeds([others_sum, seed]));
        let mut won = true;
        for _ in 0..needed {
            match state.next_seat() {
                Some(rec) if rec.voter == idx => {}
                _ => {
                    won = false;
                    break;
                }
            }
        }
        if won {
            return Ok(Some(seed));
        }
    }
    Ok(None)
}
