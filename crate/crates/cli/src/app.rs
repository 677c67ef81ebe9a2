use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vdrd_core::analysis::{election_distribution, sc_ordering_distribution, AnalysisOptions};
use vdrd_core::engine::{
    ballot_permutation, find_dictator_seed, order_candidates, run_election, verify, verify_record,
    DictatorMode,
};
use vdrd_core::model::{
    format_prefs, parse_ballots, parse_candidates, parse_prefs, ElectionConfig, ElectionRecord,
    VoterBallot,
};
use vdrd_core::Error;

#[derive(Debug, Parser)]
#[command(
    name = "vdrd",
    version,
    about = "Voter-determined random dictator elections"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Number the candidates for the ballot paper.
    BallotOrder {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        k: u32,
        /// Write the ballot sheet here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the election and write the result file.
    Run {
        #[command(flatten)]
        election: ElectionArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute an election and compare it with a result file.
    Verify {
        #[command(flatten)]
        election: ElectionArgs,
        #[arg(long)]
        result: PathBuf,
    },
    /// Enumerate all seeds and compare ballot orderings with uniform.
    AnalyzeSc {
        #[arg(long = "c")]
        candidates: usize,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Enumerate all seeds and compare election outcomes with random dictator.
    AnalyzeSv {
        #[command(flatten)]
        election: ElectionArgs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Find a seed that makes one voter dictator when all other seeds are known.
    AttackDemo {
        /// Candidates file.
        #[arg(long)]
        candidates: PathBuf,
        /// Ballots of every other voter, seeds included.
        #[arg(long)]
        ballots: PathBuf,
        /// Target preferences, e.g. `3>1>2`.
        #[arg(long)]
        target_prefs: String,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        places: usize,
        /// Only require control of the first seat.
        #[arg(long)]
        seat_one_only: bool,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Debug, Args)]
struct ElectionArgs {
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long)]
    ballots: PathBuf,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    places: usize,
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    /// Uniform weight for the modified KL (default: number of outcomes).
    #[arg(long)]
    mixture_weight: Option<u64>,
    /// Worker threads (default: available cores). Never changes output.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Allow k above 8.
    #[arg(long)]
    force: bool,
}

impl AnalysisArgs {
    fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            threads: self.threads,
            mixture_weight: self.mixture_weight,
            force: self.force,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Io(PathBuf, std::io::Error),
    Input(PathBuf, Error),
    Election(Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        let code = match self {
            CliError::Io(..) | CliError::Usage(_) => 2,
            CliError::Input(_, e) | CliError::Election(e) => match e {
                Error::NoVoters | Error::NoElectableCandidate => 3,
                Error::Infeasible(_) => 4,
                _ => 2,
            },
        };
        ExitCode::from(code)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Input(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Election(e) => write!(f, "{e}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Election(e)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    String::from_utf8(bytes).map_err(|_| {
        CliError::Input(
            path.to_path_buf(),
            Error::Parse {
                line: 0,
                message: "not valid UTF-8".into(),
            },
        )
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn config(k: u32, places: usize) -> Result<ElectionConfig, CliError> {
    ElectionConfig::new(k, places).map_err(|e| CliError::Usage(e.to_string()))
}

struct Inputs {
    config: ElectionConfig,
    candidates: Vec<vdrd_core::model::Candidate>,
    ballots: Vec<VoterBallot>,
}

fn load(args: &ElectionArgs) -> Result<Inputs, CliError> {
    let config = config(args.k, args.places)?;
    let candidates_text = read(&args.candidates)?;
    let candidates = parse_candidates(&candidates_text, &config)
        .map_err(|e| CliError::Input(args.candidates.clone(), e))?;
    let ballots_text = read(&args.ballots)?;
    let ballots = parse_ballots(&ballots_text, candidates.len(), &config)
        .map_err(|e| CliError::Input(args.ballots.clone(), e))?;
    Ok(Inputs {
        config,
        candidates,
        ballots,
    })
}

fn header(command: &str, config: &ElectionConfig) -> String {
    format!(
        "command: {command}\nk: {}\nm: {}\nplaces: {}\n",
        config.k(),
        config.m(),
        config.places()
    )
}

pub fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::BallotOrder { candidates, k, out } => {
            let config = config(k, 1)?;
            let raw = parse_candidates(&read(&candidates)?, &config)
                .map_err(|e| CliError::Input(candidates.clone(), e))?;
            if raw.is_empty() {
                return Err(CliError::Input(
                    candidates,
                    Error::Parse {
                        line: 0,
                        message: "no candidates".into(),
                    },
                ));
            }
            let sheet = ballot_permutation(order_candidates(raw), &config)?;
            let rendered = sheet.render(&config);
            match out {
                Some(path) => {
                    write(&path, &rendered)?;
                    println!(
                        "command: ballot-order\nk: {}\ncandidates: {}\ncandidate_seed_sum: {}",
                        config.k(),
                        sheet.len(),
                        config.format_seed(sheet.seed_sum())
                    );
                }
                None => print!("{rendered}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { election, out } => {
            let inputs = load(&election)?;
            let record = run_election(inputs.candidates, &inputs.ballots, &inputs.config)?;
            write(&out, &record.render())?;
            print!("{}", header("run", &inputs.config));
            println!("voters: {}", record.voters);
            println!(
                "voter_seed_sum: {}",
                inputs.config.format_seed(record.result.voter_seed_sum)
            );
            for (i, n) in record.result.elected.iter().enumerate() {
                let name = record.sheet.get(*n).map_or("?", |c| c.name.as_str());
                println!("elected.{}: {} {}", i + 1, n, name);
            }
            if record.result.truncated {
                println!("truncated: yes (ballots exhausted before all places were filled)");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { election, result } => {
            let config = config(election.k, election.places)?;
            let candidates_text = read(&election.candidates)?;
            let ballots_text = read(&election.ballots)?;
            let claimed = ElectionRecord::parse(&read(&result)?)
                .map_err(|e| CliError::Input(result.clone(), e))?;
            // Parse inputs first so errors name the offending file.
            let cands = parse_candidates(&candidates_text, &config)
                .map_err(|e| CliError::Input(election.candidates.clone(), e))?;
            parse_ballots(&ballots_text, cands.len(), &config)
                .map_err(|e| CliError::Input(election.ballots.clone(), e))?;
            let report = verify(&candidates_text, &ballots_text, &config, &claimed)?;
            print!("{}", header("verify", &config));
            print!("{}", report.render());
            Ok(if report.is_match() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::AnalyzeSc {
            candidates,
            k,
            out,
            analysis,
        } => {
            let config = config(k, 1)?;
            let report = sc_ordering_distribution(candidates, &config, &analysis.options())?;
            write(&out, &report.render_json())?;
            print!("{}", report.render_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::AnalyzeSv {
            election,
            out,
            analysis,
        } => {
            let inputs = load(&election)?;
            let sheet = ballot_permutation(order_candidates(inputs.candidates), &inputs.config)?;
            let report = election_distribution(
                &inputs.ballots,
                &sheet,
                &inputs.config,
                &analysis.options(),
            )?;
            write(&out, &report.render_json())?;
            print!("{}", report.render_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::AttackDemo {
            candidates,
            ballots,
            target_prefs,
            k,
            places,
            seat_one_only,
            force,
        } => attack_demo(
            ElectionArgs {
                candidates,
                ballots,
                k,
                places,
            },
            &target_prefs,
            seat_one_only,
            force,
        ),
    }
}

fn attack_demo(
    args: ElectionArgs,
    target_prefs: &str,
    seat_one_only: bool,
    force: bool,
) -> Result<ExitCode, CliError> {
    let inputs = load(&args)?;
    let config = inputs.config;
    if config.k() > vdrd_core::analysis::MAX_UNFORCED_K && !force {
        return Err(
            Error::Infeasible(format!("searching {} seeds needs --force", config.m())).into(),
        );
    }
    let target = parse_prefs(target_prefs, inputs.candidates.len())
        .map_err(|e| CliError::Usage(format!("--target-prefs: {e}")))?;
    let mode = if seat_one_only {
        DictatorMode::FirstSeat
    } else {
        DictatorMode::EverySeat
    };
    let sheet = ballot_permutation(order_candidates(inputs.candidates.clone()), &config)?;
    print!("{}", header("attack-demo", &config));
    println!("others: {}", inputs.ballots.len());
    println!("target_prefs: {}", format_prefs(&target));
    println!(
        "mode: {}",
        if seat_one_only {
            "first-seat"
        } else {
            "every-seat"
        }
    );

    let Some(seed) = find_dictator_seed(&sheet, &inputs.ballots, &target, &config, mode)? else {
        println!("attack: not found");
        return Ok(ExitCode::from(5));
    };
    println!("attack: found");
    println!("target_seed: {}", config.format_seed(seed));

    // Re-run the full election with the target's ballot added, then audit it.
    let mut all = inputs.ballots.clone();
    all.push(VoterBallot {
        seed,
        prefs: target.clone(),
    });
    let record = run_election(inputs.candidates.clone(), &all, &config)?;
    let report = verify_record(inputs.candidates, &all, &config, &record)?;
    let wanted = match mode {
        DictatorMode::EverySeat => &target[..config.places().min(target.len())],
        DictatorMode::FirstSeat => &target[..1],
    };
    let won = record.result.elected.starts_with(wanted);
    println!(
        "voter_seed_sum: {}",
        config.format_seed(record.result.voter_seed_sum)
    );
    println!("elected: {}", format_prefs(&record.result.elected));
    println!(
        "proof: {}",
        if won {
            "target preferences elected"
        } else {
            "FAILED"
        }
    );
    println!(
        "verification: {}",
        if report.is_match() {
            "MATCH"
        } else {
            "MISMATCH"
        }
    );
    Ok(if won && report.is_match() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
