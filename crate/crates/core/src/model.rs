//! Election data types and their text file formats.
//!
//! Candidates file, one record per line:
//!
//! ```text
//! <seed>,<name>
//! ```
//!
//! Ballots file, one record per line, preferences in descending order:
//!
//! ```text
//! <seed>,<n1>><n2>>...
//! ```
//!
//! Seeds are written with exactly `k` decimal digits. Blank lines and lines
//! starting with `#` are ignored and a trailing CR is stripped, so files
//! edited on Windows parse identically.

use std::fmt::Write as _;

use crate::error::Error;

/// Largest supported digit count; `10^19` is the largest power of ten in a `u64`.
pub const MAX_K: u32 = 19;

/// Election parameters: seed digit count `k` (so `m = 10^k`) and seats to fill.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ElectionConfig {
    k: u32,
    m: u64,
    places: usize,
}

impl ElectionConfig {
    pub fn new(k: u32, places: usize) -> Result<Self, Error> {
        if k == 0 || k > MAX_K {
            return Err(Error::Config(format!("k must be in 1..={MAX_K}, got {k}")));
        }
        if places == 0 {
            return Err(Error::Config("places must be at least 1".to_string()));
        }
        Ok(ElectionConfig {
            k,
            m: 10u64.pow(k),
            places,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn places(&self) -> usize {
        self.places
    }

    pub fn with_places(&self, places: usize) -> Result<Self, Error> {
        ElectionConfig::new(self.k, places)
    }

    pub fn seed(&self, value: u64) -> Result<SeedContribution, Error> {
        if value < self.m {
            Ok(SeedContribution(value))
        } else {
            Err(Error::Precondition(format!(
                "seed {value} out of range [0, {})",
                self.m
            )))
        }
    }

    /// Sum of seed contributions modulo `m`.
    pub fn sum_seeds<I>(&self, seeds: I) -> SeedContribution
    where
        I: IntoIterator<Item = SeedContribution>,
    {
        let m = self.m as u128;
        let total = seeds
            .into_iter()
            .fold(0u128, |acc, s| (acc + s.0 as u128) % m);
        SeedContribution(total as u64)
    }

    /// Zero-padded to exactly `k` digits.
    pub fn format_seed(&self, seed: SeedContribution) -> String {
        format!("{:0width$}", seed.0, width = self.k as usize)
    }

    fn parse_seed(&self, text: &str) -> Result<SeedContribution, String> {
        if text.len() != self.k as usize || !text.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!(
                "seed {text:?} is not exactly {} decimal digits",
                self.k
            ));
        }
        // k <= 19 digits always fits in u64 and is below m.
        Ok(SeedContribution(text.parse().expect("validated digits")))
    }
}

/// A participant's randomness input, an integer in `[0, m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeedContribution(u64);

impl SeedContribution {
    pub fn value(self) -> u64 {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub name: String,
    pub seed: SeedContribution,
}

/// Candidates in ballot-paper order; number `i` is at position `i - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallotSheet {
    candidates: Vec<Candidate>,
    seed_sum: SeedContribution,
}

impl BallotSheet {
    pub(crate) fn new(candidates: Vec<Candidate>, seed_sum: SeedContribution) -> Self {
        BallotSheet {
            candidates,
            seed_sum,
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    /// Candidate with ballot number `number` (1-based).
    pub fn get(&self, number: u32) -> Option<&Candidate> {
        (number as usize)
            .checked_sub(1)
            .and_then(|i| self.candidates.get(i))
    }

    /// Candidate seed contributions summed modulo `m`; seeds the permutation.
    pub fn seed_sum(&self) -> SeedContribution {
        self.seed_sum
    }

    /// Printable ballot sheet with an audit header.
    pub fn render(&self, config: &ElectionConfig) -> String {
        let mut out = String::new();
        out.push_str("# vdrd ballot sheet\n");
        let _ = writeln!(out, "# k: {}", config.k());
        let _ = writeln!(out, "# candidates: {}", self.len());
        let _ = writeln!(
            out,
            "# candidate_seed_sum: {}",
            config.format_seed(self.seed_sum)
        );
        for (i, c) in self.candidates.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, c.name);
        }
        out
    }
}

/// A voter's seed and strict preference list over ballot numbers, most
/// preferred first. Unlisted candidates rank jointly last.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VoterBallot {
    pub seed: SeedContribution,
    pub prefs: Vec<u32>,
}

impl VoterBallot {
    /// Checks the preference list: distinct entries, each in `1..=candidates`.
    pub fn validate(&self, candidates: usize) -> Result<(), String> {
        validate_prefs(&self.prefs, candidates)
    }
}

pub(crate) fn validate_prefs(prefs: &[u32], candidates: usize) -> Result<(), String> {
    let mut seen = vec![false; candidates + 1];
    for &p in prefs {
        if p == 0 || p as usize > candidates {
            return Err(format!("candidate number {p} outside 1..={candidates}"));
        }
        if std::mem::replace(&mut seen[p as usize], true) {
            return Err(format!("candidate number {p} repeated"));
        }
    }
    Ok(())
}

/// Audit entry for one filled seat.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeatRecord {
    /// Raw generator outputs consumed while filling this seat.
    pub raw_draws: u64,
    /// Index of the chosen voter in sorted order.
    pub voter: usize,
    /// Voter draws rejected because the drawn ballot had no remaining preference.
    pub redraws: u64,
    pub elected: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElectionResult {
    pub elected: Vec<u32>,
    pub voter_seed_sum: SeedContribution,
    pub audit: Vec<SeatRecord>,
    /// Every ballot ran out before all places were filled.
    pub truncated: bool,
}

/// Everything needed to audit an election: parameters, ballot sheet and tally.
/// This is the content of a result file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElectionRecord {
    pub config: ElectionConfig,
    pub sheet: BallotSheet,
    pub voters: usize,
    pub result: ElectionResult,
}

const RESULT_FORMAT: &str = "vdrd-result 1";

impl ElectionRecord {
    /// Serializes to the result file format (`key: value` lines).
    pub fn render(&self) -> String {
        let cfg = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "format: {RESULT_FORMAT}");
        let _ = writeln!(out, "k: {}", cfg.k());
        let _ = writeln!(out, "places: {}", cfg.places());
        let _ = writeln!(out, "candidates: {}", self.sheet.len());
        let _ = writeln!(out, "voters: {}", self.voters);
        let _ = writeln!(
            out,
            "candidate_seed_sum: {}",
            cfg.format_seed(self.sheet.seed_sum)
        );
        let _ = writeln!(
            out,
            "voter_seed_sum: {}",
            cfg.format_seed(self.result.voter_seed_sum)
        );
        for (i, c) in self.sheet.candidates.iter().enumerate() {
            let _ = writeln!(
                out,
                "sheet.{}: {},{}",
                i + 1,
                cfg.format_seed(c.seed),
                c.name
            );
        }
        for (i, s) in self.result.audit.iter().enumerate() {
            let _ = writeln!(
                out,
                "seat.{}: raw_draws={} voter={} redraws={} elected={}",
                i + 1,
                s.raw_draws,
                s.voter,
                s.redraws,
                s.elected
            );
        }
        let _ = writeln!(
            out,
            "truncated: {}",
            if self.result.truncated { "yes" } else { "no" }
        );
        let _ = writeln!(out, "elected:{}", join_prefix(&self.result.elected, ","));
        out
    }

    /// Parses a result file produced by [`ElectionRecord::render`].
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut cur = Fields::new(text);

        let (n, format) = cur.expect("format")?;
        if format != RESULT_FORMAT {
            return Err(Error::parse(n, format!("unsupported format {format:?}")));
        }
        let k: u32 = cur.number("k")?;
        let (n, v) = cur.expect("places")?;
        let places: usize = parse_number(n, "places", v)?;
        let config = ElectionConfig::new(k, places).map_err(|e| Error::parse(n, e.to_string()))?;
        let c: usize = cur.number("candidates")?;
        let voters: usize = cur.number("voters")?;
        let (n, v) = cur.expect("candidate_seed_sum")?;
        let candidate_sum = config.parse_seed(v).map_err(|e| Error::parse(n, e))?;
        let (n, v) = cur.expect("voter_seed_sum")?;
        let voter_seed_sum = config.parse_seed(v).map_err(|e| Error::parse(n, e))?;

        let mut candidates = Vec::with_capacity(c.min(1 << 16));
        for i in 1..=c {
            let (n, v) = cur.expect(&format!("sheet.{i}"))?;
            let (seed, name) = v
                .split_once(',')
                .ok_or_else(|| Error::parse(n, "expected <seed>,<name>"))?;
            let seed = config.parse_seed(seed).map_err(|e| Error::parse(n, e))?;
            candidates.push(Candidate {
                name: name.to_string(),
                seed,
            });
        }

        let mut audit = Vec::new();
        while cur.peek_key().is_some_and(|key| key.starts_with("seat.")) {
            let (n, v) = cur.expect(&format!("seat.{}", audit.len() + 1))?;
            audit.push(parse_seat(n, v)?);
        }

        let (n, v) = cur.expect("truncated")?;
        let truncated = match v {
            "yes" => true,
            "no" => false,
            _ => {
                return Err(Error::parse(
                    n,
                    format!("truncated: expected yes or no, got {v:?}"),
                ))
            }
        };
        let (n, v) = cur.expect("elected")?;
        let elected = if v.is_empty() {
            Vec::new()
        } else {
            v.split(',')
                .map(|x| parse_number(n, "elected", x))
                .collect::<Result<Vec<u32>, _>>()?
        };
        cur.finish()?;

        Ok(ElectionRecord {
            config,
            sheet: BallotSheet::new(candidates, candidate_sum),
            voters,
            result: ElectionResult {
                elected,
                voter_seed_sum,
                audit,
                truncated,
            },
        })
    }
}

fn parse_number<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, Error> {
    if v.is_empty() || !v.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::parse(line, format!("{key}: invalid number {v:?}")));
    }
    v.parse()
        .map_err(|_| Error::parse(line, format!("{key}: invalid number {v:?}")))
}

fn parse_seat(line: usize, v: &str) -> Result<SeatRecord, Error> {
    let mut parts = v.split(' ');
    let mut next = |key: &str| -> Result<&str, Error> {
        parts
            .next()
            .and_then(|p| p.strip_prefix(key))
            .and_then(|p| p.strip_prefix('='))
            .ok_or_else(|| Error::parse(line, format!("seat record missing {key}=")))
    };
    let raw_draws = parse_number(line, "raw_draws", next("raw_draws")?)?;
    let voter = parse_number(line, "voter", next("voter")?)?;
    let redraws = parse_number(line, "redraws", next("redraws")?)?;
    let elected = parse_number(line, "elected", next("elected")?)?;
    if parts.next().is_some() {
        return Err(Error::parse(line, "trailing data in seat record"));
    }
    Ok(SeatRecord {
        raw_draws,
        voter,
        redraws,
        elected,
    })
}

/// Cursor over the non-empty `key: value` lines of a result file.
struct Fields<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Fields<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .split('\n')
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| (i + 1, l))
            .collect();
        Fields { lines, pos: 0 }
    }

    fn peek_key(&self) -> Option<&'a str> {
        self.lines
            .get(self.pos)
            .and_then(|(_, l)| l.split_once(':'))
            .map(|(k, _)| k)
    }

    fn expect(&mut self, key: &str) -> Result<(usize, &'a str), Error> {
        let Some(&(n, line)) = self.lines.get(self.pos) else {
            let n = self.lines.last().map_or(1, |(n, _)| n + 1);
            return Err(Error::parse(n, format!("missing {key:?}")));
        };
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(n, format!("expected \"{key}: ...\"")))?;
        if k != key {
            return Err(Error::parse(
                n,
                format!("expected key {key:?}, found {k:?}"),
            ));
        }
        self.pos += 1;
        Ok((n, v.strip_prefix(' ').unwrap_or(v)))
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, Error> {
        let (n, v) = self.expect(key)?;
        parse_number(n, key, v)
    }

    fn finish(&self) -> Result<(), Error> {
        match self.lines.get(self.pos) {
            Some(&(n, _)) => Err(Error::parse(n, "unexpected trailing line")),
            None => Ok(()),
        }
    }
}

/// Non-comment records of a hand-edited input file, with 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// Parses a candidates file (`<seed>,<name>` per line).
pub fn parse_candidates(text: &str, config: &ElectionConfig) -> Result<Vec<Candidate>, Error> {
    let mut out: Vec<Candidate> = Vec::new();
    let mut names = std::collections::HashSet::new();
    for (n, line) in records(text) {
        let (seed, name) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(n, "expected <seed>,<name>"))?;
        let seed = config.parse_seed(seed).map_err(|e| Error::parse(n, e))?;
        if name.is_empty() {
            return Err(Error::parse(n, "empty candidate name"));
        }
        if !names.insert(name) {
            return Err(Error::parse(
                n,
                format!("duplicate candidate name {name:?}"),
            ));
        }
        out.push(Candidate {
            name: name.to_string(),
            seed,
        });
    }
    Ok(out)
}

/// Parses a preference list such as `3>1>2`; the empty string is the empty list.
pub fn parse_prefs(text: &str, candidates: usize) -> Result<Vec<u32>, String> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let prefs = text
        .split('>')
        .map(|p| {
            if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                Err(format!("invalid candidate number {p:?}"))
            } else {
                p.parse::<u32>()
                    .map_err(|_| format!("invalid candidate number {p:?}"))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    validate_prefs(&prefs, candidates)?;
    Ok(prefs)
}

/// Parses a ballots file (`<seed>,<n1>><n2>>...` per line) for a sheet of
/// `candidates` entries.
pub fn parse_ballots(
    text: &str,
    candidates: usize,
    config: &ElectionConfig,
) -> Result<Vec<VoterBallot>, Error> {
    records(text)
        .map(|(n, line)| {
            let (seed, prefs) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(n, "expected <seed>,<preferences>"))?;
            let seed = config.parse_seed(seed).map_err(|e| Error::parse(n, e))?;
            let prefs = parse_prefs(prefs, candidates).map_err(|e| Error::parse(n, e))?;
            Ok(VoterBallot { seed, prefs })
        })
        .collect()
}

pub fn format_prefs(prefs: &[u32]) -> String {
    prefs
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(">")
}

pub fn serialize_candidates(candidates: &[Candidate], config: &ElectionConfig) -> String {
    candidates
        .iter()
        .map(|c| format!("{},{}\n", config.format_seed(c.seed), c.name))
        .collect()
}

pub fn serialize_ballots(ballots: &[VoterBallot], config: &ElectionConfig) -> String {
    ballots
        .iter()
        .map(|b| {
            format!(
                "{},{}\n",
                config.format_seed(b.seed),
                format_prefs(&b.prefs)
            )
        })
        .collect()
}

fn join_prefix(items: &[u32], sep: &str) -> String {
    let joined = items
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(sep);
    if joined.is_empty() {
        joined
    } else {
        format!(" {joined}")
    }
}
