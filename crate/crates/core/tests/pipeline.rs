use vdrd_core::analysis::{election_distribution, AnalysisOptions};
use vdrd_core::engine::{run_election, verify_record, PreparedTally};
use vdrd_core::model::{parse_ballots, parse_candidates, ElectionConfig, ElectionRecord};

const CANDIDATES: &str = "# k = 3\n120,Oak\n340,Pine\n340,Ash\n901,Yew\n";
const BALLOTS: &str = "\
# seed,preferences
500,1>2
017,4>3>2>1
999,
250,2>4
250,2>4
003,3
";

fn setup(
    places: usize,
) -> (
    ElectionConfig,
    Vec<vdrd_core::model::Candidate>,
    Vec<vdrd_core::model::VoterBallot>,
) {
    let cfg = ElectionConfig::new(3, places).unwrap();
    let candidates = parse_candidates(CANDIDATES, &cfg).unwrap();
    let ballots = parse_ballots(BALLOTS, candidates.len(), &cfg).unwrap();
    (cfg, candidates, ballots)
}

#[test]
fn record_survives_render_and_parse() {
    let (cfg, candidates, ballots) = setup(3);
    let record = run_election(candidates.clone(), &ballots, &cfg).unwrap();
    let parsed = ElectionRecord::parse(&record.render()).unwrap();
    assert_eq!(parsed, record);
    assert!(verify_record(candidates, &ballots, &cfg, &parsed)
        .unwrap()
        .is_match());
}

#[test]
fn ballot_order_does_not_matter() {
    let (cfg, candidates, mut ballots) = setup(4);
    let a = run_election(candidates.clone(), &ballots, &cfg).unwrap();
    ballots.reverse();
    let mut shuffled = candidates;
    shuffled.rotate_left(2);
    let b = run_election(shuffled, &ballots, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_seed_elects_distinct_ranked_candidates() {
    let (cfg, candidates, ballots) = setup(4);
    let prepared = PreparedTally::new(candidates.len(), &ballots, &cfg).unwrap();
    for s in 0..cfg.m() {
        let r = prepared.run(cfg.seed(s).unwrap());
        let mut seen = r.elected.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), r.elected.len());
        assert_eq!(r.audit.len(), r.elected.len());
        for seat in &r.audit {
            assert!(ballots[..].iter().any(|b| b.prefs.contains(&seat.elected)));
        }
        assert_eq!(r.truncated, r.elected.len() < 4);
    }
}

#[test]
fn enumeration_is_thread_invariant() {
    let (cfg, candidates, ballots) = setup(2);
    let record = run_election(candidates, &ballots, &cfg).unwrap();
    let run = |threads| {
        let options = AnalysisOptions {
            threads,
            ..AnalysisOptions::default()
        };
        election_distribution(&ballots, &record.sheet, &cfg, &options).unwrap()
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.counts, four.counts);
    assert_eq!(one.render_json(), four.render_json());
    assert_eq!(one.counts.iter().sum::<u64>(), cfg.m());
}
