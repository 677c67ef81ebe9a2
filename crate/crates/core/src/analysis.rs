//! Seed-space enumeration and KL divergence.
//!
//! Every seed in `[0, m)` is run through the generator and the realized
//! outcome counted, giving the exact distribution the deterministic method
//! produces when the summed seed is uniform. That distribution is compared
//! with its ideal counterpart: uniform over ballot orderings, or the Random
//! Dictator distribution over elected sequences.
//!
//! Enumeration is split into fixed-size seed blocks pulled by worker threads.
//! Per-block counts are merged by integer addition, so reports do not depend
//! on the thread count or schedule.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde_json::{json, Value};

use crate::detgen::SplitMix64;
use crate::engine::PreparedTally;
use crate::error::Error;
use crate::model::{BallotSheet, ElectionConfig, VoterBallot};
use crate::rdoracle::{place_marginals, rd_distribution, Distribution, PlaceOutcome};

/// Largest `k` enumerated without `force`.
pub const MAX_UNFORCED_K: u32 = 8;
/// Largest candidate count for ordering analysis (10! dense counters).
pub const MAX_ORDERING_CANDIDATES: usize = 10;
/// Reports list per-outcome counts only for spaces up to this size.
pub const COUNT_LISTING_LIMIT: usize = 5040;

const BLOCK: u64 = 1 << 14;

/// KL divergence `sum_{P(x) > 0} P(x) ln(P(x) / Q(x))` in nats.
///
/// Returns `+inf` when `Q` vanishes somewhere `P` does not.
pub fn kl<O: Ord>(p: &Distribution<O>, q: &Distribution<O>) -> Result<f64, Error> {
    if p.outcomes() != q.outcomes() {
        return Err(Error::OutcomeSpaceMismatch);
    }
    let mut total = 0.0;
    for (&pi, &qi) in p.masses().iter().zip(q.masses()) {
        if pi > 0.0 {
            if qi == 0.0 {
                return Ok(f64::INFINITY);
            }
            total += pi * (pi / qi).ln();
        }
    }
    Ok(total)
}

/// KL divergence after mixing both distributions with the uniform one:
/// `P' = (m P + w U) / (m + w)` and likewise `Q'`, with `w` the number of
/// outcomes in the space. Always finite.
pub fn modified_kl<O: Ord + Clone>(
    p: &Distribution<O>,
    q: &Distribution<O>,
    m: u64,
) -> Result<f64, Error> {
    modified_kl_weighted(p, q, m, p.len() as u64)
}

/// [`modified_kl`] with an explicit uniform weight `w`.
pub fn modified_kl_weighted<O: Ord + Clone>(
    p: &Distribution<O>,
    q: &Distribution<O>,
    m: u64,
    w: u64,
) -> Result<f64, Error> {
    if p.outcomes() != q.outcomes() {
        return Err(Error::OutcomeSpaceMismatch);
    }
    if p.is_empty() {
        return Ok(0.0);
    }
    let (m, w) = (m as f64, w as f64);
    let u = 1.0 / p.len() as f64;
    let mix = |x: f64| (m * x + w * u) / (m + w);
    let mut total = 0.0;
    for (&pi, &qi) in p.masses().iter().zip(q.masses()) {
        let (pm, qm) = (mix(pi), mix(qi));
        if pm > 0.0 {
            total += pm * (pm / qm).ln();
        }
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AnalysisOptions {
    /// Worker threads; 0 means one per available core.
    pub threads: usize,
    /// Uniform weight for the modified KL on the full outcome space; defaults
    /// to the number of outcomes.
    pub mixture_weight: Option<u64>,
    /// Allow `k` above [`MAX_UNFORCED_K`].
    pub force: bool,
}

impl AnalysisOptions {
    fn worker_count(&self) -> usize {
        match self.threads {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        }
    }

    fn check_k(&self, config: &ElectionConfig) -> Result<(), Error> {
        if config.k() > MAX_UNFORCED_K && !self.force {
            return Err(Error::Infeasible(format!(
                "k = {} means {} tallies; pass force to run it anyway",
                config.k(),
                config.m()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutcomeSpace {
    /// Ballot-paper orderings of `candidates`; outcome `r` is the ordering of
    /// lexicographic rank `r` (see [`ordering_from_rank`]).
    Orderings { candidates: usize },
    /// Elected sequences of at most `places` candidates.
    Elections {
        candidates: usize,
        voters: usize,
        places: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaceDivergence {
    /// 1-based place.
    pub place: usize,
    pub kl: f64,
    pub modified_kl: f64,
}

/// Result of enumerating the whole seed space.
///
/// `counts[i]`, `realized` and `target` all refer to the outcome
/// `realized.outcomes()[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnumerationReport<O> {
    pub k: u32,
    pub m: u64,
    pub space: OutcomeSpace,
    pub counts: Vec<u64>,
    pub realized: Distribution<O>,
    pub target: Distribution<O>,
    pub mixture_weight: u64,
    pub kl: f64,
    pub modified_kl: f64,
    pub places: Vec<PlaceDivergence>,
}

/// Runs `work` over `[0, m)` in blocks and folds each block's output into
/// `acc` with `merge`, which must be commutative.
fn enumerate<T, A, W, F>(m: u64, threads: usize, acc: A, work: W, merge: F) -> A
where
    T: Send,
    A: Send,
    W: Fn(Range<u64>) -> T + Sync,
    F: Fn(&mut A, T) + Sync,
{
    let next = AtomicU64::new(0);
    let acc = Mutex::new(acc);
    let blocks = m.div_ceil(BLOCK);
    let threads = threads.clamp(1, blocks.max(1) as usize);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let b = next.fetch_add(1, Ordering::Relaxed);
                if b >= blocks {
                    break;
                }
                let start = b * BLOCK;
                let part = work(start..(start + BLOCK).min(m));
                merge(&mut acc.lock().expect("worker panicked"), part);
            });
        }
    });
    acc.into_inner().expect("worker panicked")
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Lexicographic rank of a permutation of `0..n`.
pub fn ordering_rank(perm: &[usize]) -> u64 {
    let n = perm.len();
    let mut rank = 0;
    for i in 0..n {
        let smaller_after = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count() as u64;
        rank += smaller_after * factorial(n - 1 - i);
    }
    rank
}

/// Permutation of `0..n` with lexicographic rank `rank`.
pub fn ordering_from_rank(mut rank: u64, n: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let f = factorial(i);
        out.push(pool.remove((rank / f) as usize));
        rank %= f;
    }
    out
}

fn place_divergences(
    target: &[Distribution<PlaceOutcome>],
    realized: &[Distribution<PlaceOutcome>],
    m: u64,
) -> Result<Vec<PlaceDivergence>, Error> {
    target
        .iter()
        .zip(realized)
        .enumerate()
        .map(|(i, (p, q))| {
            let (p, q) = Distribution::align(p, q);
            Ok(PlaceDivergence {
                place: i + 1,
                kl: kl(&p, &q)?,
                modified_kl: modified_kl(&p, &q, m)?,
            })
        })
        .collect()
}

/// Distribution of the ballot-paper ordering over all seeds, against uniform.
///
/// Place `p` is measured on the candidate (by position in seed order,
/// 1-based) printed at sheet position `p`.
pub fn sc_ordering_distribution(
    candidates: usize,
    config: &ElectionConfig,
    options: &AnalysisOptions,
) -> Result<EnumerationReport<u64>, Error> {
    if candidates == 0 {
        return Err(Error::Precondition("need at least one candidate".into()));
    }
    if candidates > MAX_ORDERING_CANDIDATES {
        return Err(Error::Infeasible(format!(
            "{candidates}! orderings exceed the {MAX_ORDERING_CANDIDATES}-candidate limit"
        )));
    }
    options.check_k(config)?;
    let n = candidates;
    let orderings = factorial(n) as usize;

    struct Acc {
        counts: Vec<u64>,
        places: Vec<u64>,
    }
    let acc = Acc {
        counts: vec![0; orderings],
        places: vec![0; n * n],
    };
    let acc = enumerate(
        config.m(),
        options.worker_count(),
        acc,
        |seeds| {
            let mut ranks = Vec::with_capacity((seeds.end - seeds.start) as usize);
            let mut places = vec![0u64; n * n];
            for s in seeds {
                let perm = SplitMix64::seed(s).draw_permutation(n).expect("n >= 1");
                for (pos, &c) in perm.iter().enumerate() {
                    places[pos * n + c] += 1;
                }
                ranks.push(ordering_rank(&perm) as u32);
            }
            (ranks, places)
        },
        |acc: &mut Acc, (ranks, places)| {
            for r in ranks {
                acc.counts[r as usize] += 1;
            }
            for (a, b) in acc.places.iter_mut().zip(places) {
                *a += b;
            }
        },
    );

    let outcomes: Vec<u64> = (0..orderings as u64).collect();
    let realized = Distribution::from_counts(outcomes.clone(), &acc.counts)?;
    let target = Distribution::uniform(outcomes)?;
    let mixture_weight = options.mixture_weight.unwrap_or(orderings as u64);

    let space: Vec<PlaceOutcome> = (1..=n as u32).map(PlaceOutcome::Candidate).collect();
    let uniform_place = Distribution::uniform(space.clone())?;
    let realized_places = (0..n)
        .map(|pos| Distribution::from_counts(space.clone(), &acc.places[pos * n..(pos + 1) * n]))
        .collect::<Result<Vec<_>, _>>()?;
    let places = place_divergences(&vec![uniform_place; n], &realized_places, config.m())?;

    Ok(EnumerationReport {
        k: config.k(),
        m: config.m(),
        space: OutcomeSpace::Orderings { candidates: n },
        kl: kl(&target, &realized)?,
        modified_kl: modified_kl_weighted(&target, &realized, config.m(), mixture_weight)?,
        counts: acc.counts,
        realized,
        target,
        mixture_weight,
        places,
    })
}

/// Distribution of elected sequences over all seeds, against the exact RD
/// distribution. The outcome space is the union of both supports.
pub fn election_distribution(
    ballots: &[VoterBallot],
    sheet: &BallotSheet,
    config: &ElectionConfig,
    options: &AnalysisOptions,
) -> Result<EnumerationReport<Vec<u32>>, Error> {
    options.check_k(config)?;
    let prepared = PreparedTally::new(sheet.len(), ballots, config)?;
    let rd = rd_distribution(ballots, config.places(), sheet.len())?;

    let counted = enumerate(
        config.m(),
        options.worker_count(),
        HashMap::<Vec<u32>, u64>::new(),
        |seeds| {
            let mut local: HashMap<Vec<u32>, u64> = HashMap::new();
            for s in seeds {
                let r = prepared.run(config.seed(s).expect("s < m"));
                *local.entry(r.elected).or_default() += 1;
            }
            local
        },
        |acc: &mut HashMap<Vec<u32>, u64>, part| {
            for (seq, n) in part {
                *acc.entry(seq).or_default() += n;
            }
        },
    );

    let mut space: Vec<Vec<u32>> = counted
        .keys()
        .cloned()
        .chain(rd.outcomes().iter().cloned())
        .collect();
    space.sort();
    space.dedup();
    let counts: Vec<u64> = space
        .iter()
        .map(|s| counted.get(s).copied().unwrap_or(0))
        .collect();
    let realized = Distribution::from_counts(space.clone(), &counts)?;
    let target = rd.over_space(&space)?;
    let mixture_weight = options.mixture_weight.unwrap_or(space.len() as u64);

    let c = sheet.len();
    let places = place_divergences(
        &place_marginals(&target, c, config.places()),
        &place_marginals(&realized, c, config.places()),
        config.m(),
    )?;

    Ok(EnumerationReport {
        k: config.k(),
        m: config.m(),
        space: OutcomeSpace::Elections {
            candidates: c,
            voters: ballots.len(),
            places: config.places(),
        },
        kl: kl(&target, &realized)?,
        modified_kl: modified_kl_weighted(&target, &realized, config.m(), mixture_weight)?,
        counts,
        realized,
        target,
        mixture_weight,
        places,
    })
}

/// Nats with 12 significant digits; infinity as `inf`.
pub fn format_nats(x: f64) -> String {
    if x.is_infinite() {
        "inf".to_string()
    } else {
        format!("{x:.11e}")
    }
}

/// How an outcome is written in reports.
pub trait OutcomeLabel {
    fn label(&self, space: &OutcomeSpace) -> String;
}

impl OutcomeLabel for u64 {
    /// Ordering as 1-based seed-order positions, sheet position 1 first.
    fn label(&self, space: &OutcomeSpace) -> String {
        let n = match space {
            OutcomeSpace::Orderings { candidates } => *candidates,
            OutcomeSpace::Elections { candidates, .. } => *candidates,
        };
        join(ordering_from_rank(*self, n).iter().map(|i| i + 1))
    }
}

impl OutcomeLabel for Vec<u32> {
    fn label(&self, _: &OutcomeSpace) -> String {
        join(self.iter())
    }
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl<O: Ord + Clone + OutcomeLabel> EnumerationReport<O> {
    pub fn reached(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Human-readable summary, `key: value` lines.
    pub fn render_text(&self) -> String {
        let mut lines = vec![];
        match self.space {
            OutcomeSpace::Orderings { candidates } => {
                lines.push("analysis: ballot orderings vs uniform".to_string());
                lines.push(format!("candidates: {candidates}"));
            }
            OutcomeSpace::Elections {
                candidates,
                voters,
                places,
            } => {
                lines.push("analysis: elected sequences vs random dictator".to_string());
                lines.push(format!("candidates: {candidates}"));
                lines.push(format!("voters: {voters}"));
                lines.push(format!("places: {places}"));
            }
        }
        lines.push(format!("k: {}", self.k));
        lines.push(format!("m: {}", self.m));
        lines.push(format!("outcomes: {}", self.counts.len()));
        lines.push(format!("reached: {}", self.reached()));
        lines.push(format!(
            "count_min: {}",
            self.counts.iter().min().unwrap_or(&0)
        ));
        lines.push(format!(
            "count_max: {}",
            self.counts.iter().max().unwrap_or(&0)
        ));
        lines.push(format!("mixture_weight: {}", self.mixture_weight));
        lines.push(format!("kl: {}", format_nats(self.kl)));
        lines.push(format!("modified_kl: {}", format_nats(self.modified_kl)));
        for p in &self.places {
            lines.push(format!(
                "place.{}: kl={} modified_kl={}",
                p.place,
                format_nats(p.kl),
                format_nats(p.modified_kl)
            ));
        }
        lines.join("\n") + "\n"
    }

    /// Machine-readable report. KL values are strings so that `inf` survives.
    pub fn to_json(&self) -> Value {
        let mut doc = serde_json::Map::new();
        match self.space {
            OutcomeSpace::Orderings { candidates } => {
                doc.insert("kind".into(), json!("orderings"));
                doc.insert("candidates".into(), json!(candidates));
            }
            OutcomeSpace::Elections {
                candidates,
                voters,
                places,
            } => {
                doc.insert("kind".into(), json!("elections"));
                doc.insert("candidates".into(), json!(candidates));
                doc.insert("voters".into(), json!(voters));
                doc.insert("places".into(), json!(places));
            }
        }
        doc.insert("k".into(), json!(self.k));
        doc.insert("m".into(), json!(self.m));
        doc.insert("outcomes".into(), json!(self.counts.len()));
        doc.insert("reached".into(), json!(self.reached()));
        doc.insert(
            "count_min".into(),
            json!(self.counts.iter().min().unwrap_or(&0)),
        );
        doc.insert(
            "count_max".into(),
            json!(self.counts.iter().max().unwrap_or(&0)),
        );
        doc.insert("mixture_weight".into(), json!(self.mixture_weight));
        doc.insert("kl".into(), json!(format_nats(self.kl)));
        doc.insert("modified_kl".into(), json!(format_nats(self.modified_kl)));
        doc.insert(
            "places".into(),
            Value::Array(
                self.places
                    .iter()
                    .map(|p| {
                        json!({
                            "place": p.place,
                            "kl": format_nats(p.kl),
                            "modified_kl": format_nats(p.modified_kl),
                        })
                    })
                    .collect(),
            ),
        );
        if self.counts.len() <= COUNT_LISTING_LIMIT {
            let rows = self
                .realized
                .outcomes()
                .iter()
                .zip(&self.counts)
                .zip(self.target.masses())
                .map(|((o, &n), &p)| {
                    json!({
                        "outcome": o.label(&self.space),
                        "count": n,
                        "target": format!("{p:.11e}"),
                    })
                })
                .collect();
            doc.insert("counts".into(), Value::Array(rows));
        }
        Value::Object(doc)
    }

    pub fn render_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("json values serialize") + "\n"
    }
}
