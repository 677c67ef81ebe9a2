//! Exact Random Dictator distribution over elected sequences.
//!
//! At each step a uniformly random voter among those whose ballots still have
//! a preference is chosen and their top remaining candidate is elected, then
//! deleted from every ballot. This matches the tally's redraw-on-empty rule:
//! with `V'` non-empty ballots, candidate `c` is next with probability
//! `#{ballots topped by c} / V'`.

use std::collections::HashMap;

use crate::error::Error;
use crate::model::{validate_prefs, VoterBallot};

/// Probability mass function over a finite, sorted outcome set.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<O> {
    outcomes: Vec<O>,
    mass: Vec<f64>,
}

impl<O> Distribution<O> {
    pub fn outcomes(&self) -> &[O] {
        &self.outcomes
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&O, f64)> {
        self.outcomes.iter().zip(self.mass.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }
}

impl<O: Ord + Clone> Distribution<O> {
    /// Builds a distribution from `(outcome, mass)` pairs; repeated outcomes
    /// are summed. Masses must be finite and non-negative.
    pub fn from_pairs<I>(pairs: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = (O, f64)>,
    {
        let mut pairs: Vec<(O, f64)> = pairs.into_iter().collect();
        if let Some((_, bad)) = pairs.iter().find(|(_, p)| !p.is_finite() || *p < 0.0) {
            return Err(Error::Precondition(format!(
                "invalid probability mass {bad}"
            )));
        }
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut outcomes: Vec<O> = Vec::with_capacity(pairs.len());
        let mut mass: Vec<f64> = Vec::with_capacity(pairs.len());
        for (o, p) in pairs {
            if outcomes.last() == Some(&o) {
                *mass.last_mut().expect("parallel vectors") += p;
            } else {
                outcomes.push(o);
                mass.push(p);
            }
        }
        Ok(Distribution { outcomes, mass })
    }

    /// Empirical distribution `count / total` over an already sorted, duplicate
    /// free outcome list.
    pub fn from_counts(outcomes: Vec<O>, counts: &[u64]) -> Result<Self, Error> {
        if outcomes.len() != counts.len() {
            return Err(Error::Precondition("one count per outcome required".into()));
        }
        if outcomes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition(
                "outcomes must be sorted and distinct".into(),
            ));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Precondition("no observations".into()));
        }
        let mass = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Distribution { outcomes, mass })
    }

    pub fn uniform(mut outcomes: Vec<O>) -> Result<Self, Error> {
        outcomes.sort();
        outcomes.dedup();
        if outcomes.is_empty() {
            return Err(Error::Precondition(
                "uniform distribution over no outcomes".into(),
            ));
        }
        let p = 1.0 / outcomes.len() as f64;
        let mass = vec![p; outcomes.len()];
        Ok(Distribution { outcomes, mass })
    }

    /// Mass at `outcome`; zero outside the outcome set.
    pub fn get(&self, outcome: &O) -> f64 {
        self.outcomes
            .binary_search(outcome)
            .map_or(0.0, |i| self.mass[i])
    }

    /// Outcomes with positive mass.
    pub fn support(&self) -> impl Iterator<Item = &O> {
        self.iter().filter(|(_, p)| *p > 0.0).map(|(o, _)| o)
    }

    /// The same distribution over a larger outcome set, padded with zeros.
    /// `space` must be sorted, distinct and contain every current outcome.
    pub fn over_space(&self, space: &[O]) -> Result<Self, Error> {
        if space.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition(
                "outcome space must be sorted and distinct".into(),
            ));
        }
        let mut mass = vec![0.0; space.len()];
        for (o, p) in self.iter() {
            let i = space
                .binary_search(o)
                .map_err(|_| Error::OutcomeSpaceMismatch)?;
            mass[i] = p;
        }
        Ok(Distribution {
            outcomes: space.to_vec(),
            mass,
        })
    }

    /// Re-expresses both distributions over the union of their outcome sets.
    pub fn align(a: &Self, b: &Self) -> (Self, Self) {
        let mut space: Vec<O> = a.outcomes.iter().chain(&b.outcomes).cloned().collect();
        space.sort();
        space.dedup();
        (
            a.over_space(&space).expect("union contains a"),
            b.over_space(&space).expect("union contains b"),
        )
    }
}

/// Outcome of a single place: the candidate elected there, or nobody because
/// ballots ran out first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlaceOutcome {
    Candidate(u32),
    Unfilled,
}

/// Exact RD distribution over elected sequences of length at most `places`.
pub fn rd_distribution(
    ballots: &[VoterBallot],
    places: usize,
    candidates: usize,
) -> Result<Distribution<Vec<u32>>, Error> {
    if ballots.is_empty() {
        return Err(Error::NoVoters);
    }
    for (i, b) in ballots.iter().enumerate() {
        validate_prefs(&b.prefs, candidates)
            .map_err(|e| Error::Precondition(format!("ballot {i}: {e}")))?;
    }
    if ballots.iter().all(|b| b.prefs.is_empty()) {
        return Err(Error::NoElectableCandidate);
    }
    let mut search = Search {
        ballots,
        places,
        elected: vec![false; candidates + 1],
        memo: HashMap::new(),
        out: Vec::new(),
    };
    search.expand(&mut Vec::new(), 1.0);
    Distribution::from_pairs(search.out)
}

/// Tops after an elected set: (candidate, ballots topped by it), and `V'`.
type Step = (Vec<(u32, u32)>, u32);

struct Search<'a> {
    ballots: &'a [VoterBallot],
    places: usize,
    elected: Vec<bool>,
    /// Keyed by the sorted elected set.
    memo: HashMap<Vec<u32>, Step>,
    out: Vec<(Vec<u32>, f64)>,
}

impl Search<'_> {
    fn next_step(&mut self, sequence: &[u32]) -> Step {
        let mut key = sequence.to_vec();
        key.sort_unstable();
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let mut tops: Vec<(u32, u32)> = Vec::new();
        let mut live = 0;
        for b in self.ballots {
            if let Some(&top) = b.prefs.iter().find(|&&c| !self.elected[c as usize]) {
                live += 1;
                match tops.iter_mut().find(|(c, _)| *c == top) {
                    Some((_, n)) => *n += 1,
                    None => tops.push((top, 1)),
                }
            }
        }
        tops.sort_unstable();
        self.memo.insert(key, (tops.clone(), live));
        (tops, live)
    }

    fn expand(&mut self, sequence: &mut Vec<u32>, prob: f64) {
        if sequence.len() == self.places {
            self.out.push((sequence.clone(), prob));
            return;
        }
        let (tops, live) = self.next_step(sequence);
        if live == 0 {
            self.out.push((sequence.clone(), prob));
            return;
        }
        for (c, n) in tops {
            self.elected[c as usize] = true;
            sequence.push(c);
            self.expand(sequence, prob * n as f64 / live as f64);
            sequence.pop();
            self.elected[c as usize] = false;
        }
    }
}

/// Per-place marginals of a distribution over elected sequences.
///
/// Each marginal is over candidates `1..=candidates`, plus
/// [`PlaceOutcome::Unfilled`] when some sequence is shorter than the place.
pub fn place_marginals(
    d: &Distribution<Vec<u32>>,
    candidates: usize,
    places: usize,
) -> Vec<Distribution<PlaceOutcome>> {
    (0..places)
        .map(|p| {
            let base = (1..=candidates as u32).map(|c| (PlaceOutcome::Candidate(c), 0.0));
            let observed = d.iter().map(|(seq, mass)| {
                let o = seq
                    .get(p)
                    .map_or(PlaceOutcome::Unfilled, |&c| PlaceOutcome::Candidate(c));
                (o, mass)
            });
            Distribution::from_pairs(base.chain(observed)).expect("masses come from a distribution")
        })
        .collect()
}
