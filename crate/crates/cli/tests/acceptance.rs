//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use vdrd_core::analysis::{
    election_distribution, kl, modified_kl, sc_ordering_distribution, AnalysisOptions,
};
use vdrd_core::engine::{ballot_permutation, order_candidates, tally_with_seed, PreparedTally};
use vdrd_core::model::{
    parse_ballots, parse_candidates, ElectionConfig, ElectionResult, VoterBallot,
};
use vdrd_core::rdoracle::{rd_distribution, Distribution};

use common::{read_fixture, stdout, vdrd};

fn path(name: &str) -> String {
    common::fixture(name).display().to_string()
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn load(
    candidates: &str,
    ballots: &str,
    k: u32,
    places: usize,
) -> (
    ElectionConfig,
    Vec<vdrd_core::model::Candidate>,
    Vec<VoterBallot>,
) {
    let cfg = ElectionConfig::new(k, places).unwrap();
    let cands = parse_candidates(&read_fixture(candidates), &cfg).unwrap();
    let ballots = parse_ballots(&read_fixture(ballots), cands.len(), &cfg).unwrap();
    (cfg, cands, ballots)
}

fn criterion_1() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.txt");
    let out_b = dir.path().join("b.txt");
    let run = |out: &std::path::Path| {
        let start = Instant::now();
        let o = vdrd([
            "run".to_string(),
            "--candidates".to_string(),
            path("three_candidates.txt"),
            "--ballots".to_string(),
            path("three_ballots.txt"),
            "--k".to_string(),
            "1".to_string(),
            "--places".to_string(),
            "2".to_string(),
            "--out".to_string(),
            out.display().to_string(),
        ]);
        (o.status.code(), start.elapsed())
    };
    let (code_a, t_a) = run(&out_a);
    let (code_b, t_b) = run(&out_b);
    let a = std::fs::read(&out_a).unwrap_or_default();
    let b = std::fs::read(&out_b).unwrap_or_default();
    let start = Instant::now();
    let v = vdrd([
        "verify".to_string(),
        "--candidates".to_string(),
        path("three_candidates.txt"),
        "--ballots".to_string(),
        path("three_ballots.txt"),
        "--k".to_string(),
        "1".to_string(),
        "--places".to_string(),
        "2".to_string(),
        "--result".to_string(),
        out_a.display().to_string(),
    ]);
    let t_v = start.elapsed();
    let slowest = t_a.max(t_b).max(t_v);
    let golden = a == read_fixture("three_result.golden").as_bytes();
    check(
        golden
            && code_a == Some(0)
            && code_b == Some(0)
            && !a.is_empty()
            && a == b
            && v.status.code() == Some(0)
            && slowest < Duration::from_secs(1),
        format!(
            "run exit {code_a:?}/{code_b:?}, identical={}, golden={golden}, verify exit {:?}, slowest {slowest:?} (< 1 s)",
            a == b,
            v.status.code()
        ),
    )
}

fn criterion_2() -> Outcome {
    let cfg = ElectionConfig::new(6, 1).unwrap();
    let start = Instant::now();
    let r = sc_ordering_distribution(7, &cfg, &AnalysisOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let worst_place = r.places.iter().map(|p| p.kl).fold(0.0, f64::max);
    check(
        elapsed < Duration::from_secs(60) && r.kl.is_finite() && r.kl < 0.01 && worst_place < 1e-4,
        format!(
            "C=7 K=6: ordering KL {:.4e} (< 1e-2), max place KL {worst_place:.3e} (< 1e-4), {elapsed:?} (< 60 s)",
            r.kl
        ),
    )
}

fn criterion_3() -> Outcome {
    let cfg = ElectionConfig::new(6, 1).unwrap();
    let r = sc_ordering_distribution(10, &cfg, &AnalysisOptions::default()).unwrap();
    let worst_place = r.places.iter().map(|p| p.kl).fold(0.0, f64::max);
    check(
        r.kl == f64::INFINITY && r.modified_kl.is_finite() && r.modified_kl < 0.2 && worst_place < 1e-3,
        format!(
            "C=10 K=6: ordering KL {} (= inf), modified KL {:.4e} (< 0.2), max place KL {worst_place:.3e} (< 1e-3), reached {} of 3628800",
            r.kl,
            r.modified_kl,
            r.reached()
        ),
    )
}

fn criterion_4() -> Outcome {
    let cfg = ElectionConfig::new(5, 1).unwrap();
    let r = sc_ordering_distribution(10, &cfg, &AnalysisOptions::default()).unwrap();
    let worst_place = r.places.iter().map(|p| p.kl).fold(0.0, f64::max);
    check(
        worst_place < 1e-3,
        format!("C=10 K=5: max place KL {worst_place:.3e} (< 1e-3)"),
    )
}

fn criterion_5() -> Outcome {
    let (cfg, cands, ballots) = load("sv100_candidates.txt", "sv100_ballots.txt", 6, 5);
    let sheet = ballot_permutation(order_candidates(cands), &cfg).unwrap();
    let start = Instant::now();
    let r = election_distribution(&ballots, &sheet, &cfg, &AnalysisOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let worst_place = r.places.iter().map(|p| p.kl).fold(0.0, f64::max);
    check(
        elapsed < Duration::from_secs(600) && r.kl < 1e-3 && worst_place < 1e-4,
        format!(
            "C=5 V=100 K=6 places=5: sequence KL {:.4e} (< 1e-3), max place KL {worst_place:.3e} (< 1e-4), {} sequences, {elapsed:?} (< 600 s)",
            r.kl,
            r.counts.len()
        ),
    )
}

/// The target's contribution `t` only shifts the final seed. The other voters
/// disclose seed 99 and rank above the target lexicographically, so the
/// target sorts first for every `t` and the roster order is the same.
fn criterion_6() -> Outcome {
    let cfg = ElectionConfig::new(2, 4).unwrap();
    let cands = parse_candidates("11,A\n22,B\n33,C\n44,D\n", &cfg).unwrap();
    let sheet = ballot_permutation(order_candidates(cands), &cfg).unwrap();
    let others = parse_ballots("99,2>4>1\n99,3>1>4>2\n99,4>3\n", 4, &cfg).unwrap();
    let multiset = |t: u64| -> Vec<ElectionResult> {
        let mut ballots = others.clone();
        ballots.push(VoterBallot {
            seed: cfg.seed(t).unwrap(),
            prefs: vec![1, 3],
        });
        let mut results: Vec<ElectionResult> = (0..cfg.m())
            .map(|others_total| {
                let s = cfg.seed((t + others_total) % cfg.m()).unwrap();
                let mut r = tally_with_seed(&sheet, &ballots, &cfg, s).unwrap();
                // The generator seed is the varying quantity; compare outcomes.
                r.voter_seed_sum = cfg.seed(0).unwrap();
                r
            })
            .collect();
        results.sort();
        results
    };
    let base = multiset(0);
    let same = [17, 99].iter().all(|&t| multiset(t) == base);
    let distinct: std::collections::BTreeSet<_> = base.iter().map(|r| r.elected.clone()).collect();
    check(
        same,
        format!(
            "K=2 V=4 C=4: multisets over 100 seeds identical for t in {{0,17,99}}: {same} ({} distinct elected lists)",
            distinct.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let (cfg, cands, ballots) = load("pareto_candidates.txt", "pareto_ballots.txt", 3, 5);
    let (c1, c2) = (2u32, 4u32);
    let no_ballot_prefers_4 = ballots.iter().all(|b| {
        let p1 = b.prefs.iter().position(|&c| c == c1);
        let p2 = b.prefs.iter().position(|&c| c == c2);
        match (p1, p2) {
            (Some(a), Some(b)) => a < b,
            (Some(_), None) | (None, None) => true,
            (None, Some(_)) => false,
        }
    });
    let sheet = ballot_permutation(order_candidates(cands), &cfg).unwrap();
    let prepared = PreparedTally::new(sheet.len(), &ballots, &cfg).unwrap();
    let mut violations = 0;
    let mut c2_elected = 0;
    for s in 0..cfg.m() {
        let r = prepared.run(cfg.seed(s).unwrap());
        if let Some(p2) = r.elected.iter().position(|&c| c == c2) {
            c2_elected += 1;
            if !r.elected[..p2].contains(&c1) {
                violations += 1;
            }
        }
    }
    check(
        no_ballot_prefers_4 && violations == 0,
        format!("K=3, 1000 seeds: {violations} seeds elect 4 before 2 ({c2_elected} seeds elect 4 at all)"),
    )
}

/// Literal multi-seat procedure: uniform voter (redraw on empty), elect their
/// top, delete it everywhere.
fn monte_carlo(
    ballots: &[VoterBallot],
    places: usize,
    samples: u64,
    seed: u64,
) -> BTreeMap<Vec<u32>, u64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..samples {
        let mut rem: Vec<Vec<u32>> = ballots.iter().map(|b| b.prefs.clone()).collect();
        let mut seq = Vec::new();
        while seq.len() < places && rem.iter().any(|r| !r.is_empty()) {
            let v = loop {
                let v = rng.random_range(0..rem.len());
                if !rem[v].is_empty() {
                    break v;
                }
            };
            let c = rem[v][0];
            seq.push(c);
            for r in &mut rem {
                r.retain(|&x| x != c);
            }
        }
        *counts.entry(seq).or_insert(0) += 1;
    }
    counts
}

/// Exact rational RD distribution, branching on individual voters.
fn exact_rd(prefs: &[Vec<u32>], places: usize) -> BTreeMap<Vec<u32>, Ratio<u64>> {
    fn go(
        prefs: &[Vec<u32>],
        places: usize,
        seq: &mut Vec<u32>,
        p: Ratio<u64>,
        out: &mut BTreeMap<Vec<u32>, Ratio<u64>>,
    ) {
        let tops: Vec<u32> = prefs
            .iter()
            .filter_map(|b| b.iter().copied().find(|c| !seq.contains(c)))
            .collect();
        if seq.len() == places || tops.is_empty() {
            *out.entry(seq.clone())
                .or_insert_with(|| Ratio::from_integer(0)) += p;
            return;
        }
        let share = p / Ratio::from_integer(tops.len() as u64);
        for c in tops {
            seq.push(c);
            go(prefs, places, seq, share, out);
            seq.pop();
        }
    }
    let mut out = BTreeMap::new();
    go(
        prefs,
        places,
        &mut Vec::new(),
        Ratio::from_integer(1),
        &mut out,
    );
    out
}

fn criterion_8() -> Outcome {
    let cfg = ElectionConfig::new(2, 2).unwrap();
    let ballots = parse_ballots(&read_fixture("rd10_ballots.txt"), 4, &cfg).unwrap();
    let rd = rd_distribution(&ballots, 2, 4).unwrap();
    let n = 1_000_000u64;
    let mc = monte_carlo(&ballots, 2, n, 0x5EED);
    let mut worst_z: f64 = 0.0;
    let mut mc_ok = mc.keys().all(|k| rd.get(k) > 0.0);
    for (seq, p) in rd.iter() {
        let freq = mc.get(seq).copied().unwrap_or(0) as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let z = (freq - p).abs() / se;
        worst_z = worst_z.max(z);
        mc_ok &= z <= 3.0;
    }

    let small: Vec<VoterBallot> = ballots[..6].to_vec();
    let mut worst_exact: f64 = 0.0;
    let mut exact_ok = true;
    for places in 1..=4 {
        let float = rd_distribution(&small, places, 4).unwrap();
        let prefs: Vec<Vec<u32>> = small.iter().map(|b| b.prefs.clone()).collect();
        let exact = exact_rd(&prefs, places);
        exact_ok &= float.outcomes().iter().eq(exact.keys());
        for (seq, r) in &exact {
            let diff = (float.get(seq) - *r.numer() as f64 / *r.denom() as f64).abs();
            worst_exact = worst_exact.max(diff);
        }
    }
    exact_ok &= worst_exact < 1e-12;
    check(
        mc_ok && exact_ok,
        format!(
            "V=10 C=4 places=2: {} sequences, worst |z| {worst_z:.2} (<= 3) over 10^6 samples; V=6 exact-rational max diff {worst_exact:.1e} (< 1e-12)",
            rd.len()
        ),
    )
}

fn criterion_9() -> Outcome {
    let o = vdrd([
        "attack-demo".to_string(),
        "--candidates".to_string(),
        path("attack_candidates.txt"),
        "--ballots".to_string(),
        path("attack_others.txt"),
        "--target-prefs".to_string(),
        "4>3".to_string(),
        "--k".to_string(),
        "2".to_string(),
        "--places".to_string(),
        "2".to_string(),
    ]);
    let text = stdout(&o);
    let ok = o.status.code() == Some(0)
        && text.contains("attack: found\n")
        && text.contains("elected: 4>3\n")
        && text.contains("verification: MATCH\n");
    let seed = text
        .lines()
        .find_map(|l| l.strip_prefix("target_seed: "))
        .unwrap_or("none")
        .to_string();
    check(
        ok,
        format!(
            "K=2 others all 00: exit {:?}, target seed {seed}, re-run elects 4>3 and verifies",
            o.status.code()
        ),
    )
}

fn criterion_10() -> Outcome {
    let d = |m: &[f64]| Distribution::from_pairs(m.iter().copied().enumerate()).unwrap();
    let p = d(&[0.1, 0.6, 0.3]);
    let same = kl(&p, &p).unwrap();
    let ln2 = kl(&d(&[1.0, 0.0]), &d(&[0.5, 0.5])).unwrap();
    let inf = kl(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])).unwrap();
    let modified = modified_kl(&d(&[0.5, 0.5]), &d(&[1.0, 0.0]), 1_000_000).unwrap();
    check(
        same == 0.0 && (ln2 - std::f64::consts::LN_2).abs() < 1e-12 && inf == f64::INFINITY && modified.is_finite(),
        format!("kl(P,P) = {same}, kl((1,0),(.5,.5)) = {ln2:.15}, zero-mass kl = {inf}, modified = {modified:.6}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("determinism and audit replay", criterion_1),
        ("orderings at C=7, K=6", criterion_2),
        ("orderings at C=10, K=6", criterion_3),
        ("places at C=10, K=5", criterion_4),
        ("elections vs random dictator, V=100", criterion_5),
        ("seed-sum bijection", criterion_6),
        ("stepwise Pareto", criterion_7),
        ("random dictator oracle cross-checks", criterion_8),
        ("dictator seed attack", criterion_9),
        ("KL identities", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
