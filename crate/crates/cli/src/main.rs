//! `cec`: batch front end for the exact majorization library.
//!
//! Exit codes: 0 success, 1 negative verdict, 2 usage error or malformed
//! input, 3 resource cap reached, 4 internal verification failure.

mod config;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use cec_core::cec::{self, AttemptStatus, CatalystSearchReport, CatalystSolution, Lemma1Outcome};
use cec_core::entropy;
use cec_core::geometry::{self, Lemma3HarnessConfig};
use cec_core::majorization;
use cec_core::rational::{self, Rational};
use cec_core::sn::{self, MinNResult, SnCertificate, SnEncoding, SnMembershipProblem};
use cec_core::typicality;
use cec_core::{Dist, JointDist};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use config::RunConfig;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<cec_core::Error> for CliError {
    fn from(e: cec_core::Error) -> Self {
        use cec_core::Error as E;
        let code = match &e {
            E::SizeLimit { .. } | E::Resource(_) => 3,
            E::Internal(_) => 4,
            E::Argument(_) | E::Precondition(_) | E::ParseRational { .. } => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "cec", version, about = "Exact majorization certificates and catalyst search")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel searches.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for reports; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// State encoding of the membership LP.
    #[arg(long, global = true, value_enum)]
    encoding: Option<EncodingArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    TopK,
    SymmetricTransport,
}

impl From<EncodingArg> for SnEncoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::TopK => SnEncoding::TopK,
            EncodingArg::SymmetricTransport => SnEncoding::SymmetricTransport,
        }
    }
}

fn parse_rat(s: &str) -> Result<Rational, String> {
    rational::parse_rational(s).map_err(|e| e.to_string())
}

/// One distribution, inline or as JSON.
#[derive(Args)]
struct DistArgs {
    /// JSON file (`-` or absent for stdin).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Inline weights such as `1/2,1/4,1/4`.
    #[arg(long)]
    p: Option<String>,
}

/// A pair `(p, p')`, inline or as `{"p": .., "pprime": ..}`.
#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    pprime: Option<String>,
}

impl PairArgs {
    fn read(&self) -> Result<(Dist, Dist), CliError> {
        input::read_pair(self.p.as_deref(), self.pprime.as_deref(), self.input.as_ref())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Shannon entropy, rank and max-entropy of a distribution.
    Entropy(DistArgs),
    /// Smooth max/min entropies of `p` or of `p^n`.
    SmoothEntropy {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_parser = parse_rat)]
        eps: Rational,
        /// Evaluate on `n` i.i.d. copies via type classes.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Copy count from the typicality bound, or its inverse with `--n`.
    NEpsilon {
        #[arg(long)]
        d: usize,
        #[arg(long, value_parser = parse_rat)]
        delta: Rational,
        #[arg(long, value_parser = parse_rat, required_unless_present = "n")]
        eps: Option<Rational>,
        #[arg(long, conflicts_with = "eps")]
        n: Option<u64>,
    },
    /// Checks both smooth-entropy inequalities at several copy counts.
    Lemma2Verify {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_rat)]
        delta: Rational,
        #[arg(long, value_delimiter = ',', default_value = "100,200,500,1000,2000")]
        n: Vec<usize>,
        /// Also write the slack curve as CSV.
        #[arg(long)]
        emit_csv: Option<PathBuf>,
    },
    /// Decides `p` majorizes `p'` and emits a T-transform witness.
    Majorize(PairArgs),
    /// Decides whether `p'` is an exact average marginal at `n` copies.
    SnMember {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        n: usize,
    },
    /// Exact trace distance from `p'` to the achievable marginals.
    SnDistance {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        n: usize,
    },
    /// Smallest copy count with a certificate.
    FindMinN {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Cyclic symmetrization of a joint state given as JSON.
    Symmetrize {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Randomized falsification run of the ball-coverage property.
    Lemma3Test {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 2)]
        min_dim: usize,
        #[arg(long, default_value_t = 5)]
        max_dim: usize,
        #[arg(long, default_value_t = 64)]
        samples_per_dim: usize,
    },
    /// Necessary conditions for a catalytic transition.
    CecCheck(PairArgs),
    /// Gate, support reduction and certificate search.
    CecRun {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        n_max: Option<usize>,
        /// Continue with the catalyst search on success.
        #[arg(long)]
        catalyst: bool,
    },
    /// Searches for a catalyst and bijection.
    CatalystSearch {
        #[command(flatten)]
        pair: PairArgs,
        /// Use this certificate instead of computing one.
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Try every register size instead of stopping at the first success.
        #[arg(long)]
        all: bool,
    },
    /// Re-validates a certificate file.
    VerifyCertificate {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Re-validates a catalyst solution file.
    VerifyCatalyst {
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Entropy(_) => "entropy",
            Command::SmoothEntropy { .. } => "smooth-entropy",
            Command::NEpsilon { .. } => "n-epsilon",
            Command::Lemma2Verify { .. } => "lemma2-verify",
            Command::Majorize(_) => "majorize",
            Command::SnMember { .. } => "sn-member",
            Command::SnDistance { .. } => "sn-distance",
            Command::FindMinN { .. } => "find-min-n",
            Command::Symmetrize { .. } => "symmetrize",
            Command::Lemma3Test { .. } => "lemma3-test",
            Command::CecCheck(_) => "cec-check",
            Command::CecRun { .. } => "cec-run",
            Command::CatalystSearch { .. } => "catalyst-search",
            Command::VerifyCertificate { .. } => "verify-certificate",
            Command::VerifyCatalyst { .. } => "verify-catalyst",
        }
    }
}

/// What a command produced: the main report, side files and exit code.
struct Report {
    body: Value,
    files: Vec<(&'static str, Value)>,
    code: u8,
}

impl Report {
    fn new(body: impl Serialize, positive: bool) -> Result<Report, CliError> {
        Ok(Report {
            body: to_value(body)?,
            files: Vec::new(),
            code: if positive { 0 } else { 1 },
        })
    }

    fn with_file(mut self, name: &'static str, value: impl Serialize) -> Result<Report, CliError> {
        self.files.push((name, to_value(value)?));
        Ok(self)
    }
}

fn to_value(v: impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError {
        code: 4,
        message: format!("cannot serialize report: {e}"),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = Some(o.clone());
    }
    if let Some(e) = cli.encoding {
        cfg.encoding = e.into();
    }
    cfg.validate()?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot size thread pool: {e}")))?;
    }
    let name = cli.command.name();
    let report = execute(cli.command, &cfg)?;
    emit(name, &report, &cfg)?;
    Ok(report.code)
}

fn emit(name: &str, report: &Report, cfg: &RunConfig) -> Result<(), CliError> {
    let render = |v: &Value| {
        serde_json::to_string_pretty(v).expect("values always render") + "\n"
    };
    let Some(dir) = &cfg.out_dir else {
        print!("{}", render(&report.body));
        return Ok(());
    };
    let io = |e: std::io::Error| CliError::usage(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(format!("{name}.json")), render(&report.body)).map_err(io)?;
    for (file, value) in &report.files {
        std::fs::write(dir.join(file), render(value)).map_err(io)?;
    }
    Ok(())
}

fn execute(command: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    let limits = cfg.limits();
    let opts = cfg.sn_options();
    match command {
        Command::Entropy(args) => {
            let p = input::read_dist(args.p.as_deref(), args.input.as_ref())?;
            Report::new(entropy::entropy_report(p.weights()), true)
        }
        Command::SmoothEntropy { dist, eps, n } => {
            let p = input::read_dist(dist.p.as_deref(), dist.input.as_ref())?;
            let body = match n {
                Some(n) => {
                    let e = entropy::iid_smooth_entropies(&p, n, &eps, &limits)?;
                    json!({
                        "eps": rational::format_rational(&eps),
                        "n": n,
                        "hmax": e.hmax,
                        "hmin": e.hmin,
                        "max_support": e.max_support.to_string(),
                        "min_cap": rational::format_rational(&e.min_cap),
                    })
                }
                None => json!({
                    "eps": rational::format_rational(&eps),
                    "hmax": entropy::smooth_max_entropy(p.weights(), &eps)?,
                    "hmin": entropy::smooth_min_entropy(p.weights(), &eps)?,
                    "max_support": entropy::smooth_max_support(p.weights(), &eps)?,
                    "min_cap": rational::format_rational(&entropy::smooth_min_cap(p.weights(), &eps)?),
                }),
            };
            Report::new(body, true)
        }
        Command::NEpsilon { d, delta, eps, n } => match (eps, n) {
            (Some(eps), _) => Report::new(typicality::n_epsilon(d, &delta, &eps)?, true),
            (None, Some(n)) => Report::new(typicality::epsilon_of_n(d, &delta, n)?, true),
            (None, None) => Err(CliError::usage("need --eps or --n")),
        },
        Command::Lemma2Verify {
            pair,
            delta,
            n,
            emit_csv,
        } => {
            let (p, q) = pair.read()?;
            let reports = typicality::lemma2_curve(&p, &q, &delta, &n, &limits)?;
            if let Some(path) = emit_csv {
                std::fs::write(&path, typicality::lemma2_csv(&reports))
                    .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            }
            let ok = reports.iter().all(|r| r.holds());
            Report::new(reports, ok)
        }
        Command::Majorize(pair) => {
            let (p, q) = pair.read()?;
            let len = p.len().max(q.len());
            let (p, q) = (p.padded(len)?, q.padded(len)?);
            let holds = majorization::majorizes(p.weights(), q.weights());
            let witness = if holds {
                Some(majorization::build_witness(p.weights(), q.weights())?)
            } else {
                None
            };
            Report::new(json!({ "majorizes": holds, "witness": witness }), holds)
        }
        Command::SnMember { pair, n } => {
            let (p, q) = pair.read()?;
            let prob = SnMembershipProblem::new(p, q, n, &limits)?;
            let m = sn::sn_member(&prob, &opts)?;
            let member = m.is_member();
            Report::new(m, member)
        }
        Command::SnDistance { pair, n } => {
            let (p, q) = pair.read()?;
            let d = sn::distance_to_sn(&p, &q, n, &opts)?;
            Report::new(
                json!({
                    "n": n,
                    "distance": rational::format_rational(&d),
                    "distance_f64": rational::to_f64(&d),
                }),
                true,
            )
        }
        Command::FindMinN { pair, n_max } => {
            let (p, q) = pair.read()?;
            let result = sn::find_min_n(&p, &q, n_max.unwrap_or(cfg.n_max), &opts)?;
            match &result {
                MinNResult::Found { certificate, .. } => {
                    let cert = certificate.as_ref().clone();
                    Report::new(&result, true)?.with_file("certificate.json", cert)
                }
                MinNResult::Exhausted { .. } => Ok(Report {
                    code: 3,
                    ..Report::new(&result, false)?
                }),
            }
        }
        Command::Symmetrize { input } => {
            let sigma: JointDist = input::read_json(input.as_ref())?;
            Report::new(sn::symmetrize(&sigma)?, true)
        }
        Command::Lemma3Test {
            trials,
            min_dim,
            max_dim,
            samples_per_dim,
        } => {
            let report = geometry::lemma3_harness(&Lemma3HarnessConfig {
                trials,
                min_dim,
                max_dim,
                seed: cfg.seed,
                sphere_samples_per_dim: samples_per_dim,
            })?;
            let ok = report.membership_failures == 0;
            Report::new(report, ok)
        }
        Command::CecCheck(pair) => {
            let (p, q) = pair.read()?;
            let report = cec::check_necessary(&p, &q)?;
            let ok = report.possible;
            Report::new(report, ok)
        }
        Command::CecRun {
            pair,
            n_max,
            catalyst,
        } => {
            let (p, q) = pair.read()?;
            let outcome = cec::run_lemma1(&p, &q, n_max.unwrap_or(cfg.n_max), &opts)?;
            let cert = match &outcome {
                Lemma1Outcome::Certificate { certificate, .. } => certificate.as_ref().clone(),
                Lemma1Outcome::Impossible { .. } => return Report::new(&outcome, false),
                Lemma1Outcome::Exhausted { .. } => {
                    return Ok(Report {
                        code: 3,
                        ..Report::new(&outcome, false)?
                    })
                }
            };
            if !catalyst {
                return Report::new(&outcome, true)?.with_file("certificate.json", cert);
            }
            let search = catalyst_for(&p, &q, &cert, cfg, false)?;
            let code = search_code(&search);
            let mut report = Report::new(json!({ "lemma1": outcome, "catalyst_search": search }), true)?
                .with_file("certificate.json", &cert)?;
            if let Some(sol) = &search.solution {
                report = report.with_file("catalyst.json", sol)?;
            }
            report.code = code;
            Ok(report)
        }
        Command::CatalystSearch {
            pair,
            certificate,
            all,
        } => {
            let cert = match &certificate {
                Some(path) => {
                    let (text, source) = input::read_source(Some(path))?;
                    input::parse_wrapped::<SnCertificate>(&text, &source, "certificate")?
                }
                None => {
                    let (p, q) = pair.read()?;
                    match cec::run_lemma1(&p, &q, cfg.n_max, &opts)? {
                        Lemma1Outcome::Certificate { certificate, .. } => *certificate,
                        other => return Report::new(other, false),
                    }
                }
            };
            let (p, q) = (cert.p.clone(), cert.pprime.clone());
            let search = catalyst_for(&p, &q, &cert, cfg, all)?;
            let code = search_code(&search);
            let solution = search.solution.clone();
            let mut report = Report::new(&search, true)?;
            if let Some(sol) = solution {
                report = report.with_file("catalyst.json", sol)?;
            }
            report.code = code;
            Ok(report)
        }
        Command::VerifyCertificate { input } => {
            let (text, source) = input::read_source(input.as_deref())?;
            let cert: SnCertificate = input::parse_wrapped(&text, &source, "certificate")?;
            let report = cert.verify(&limits)?;
            let ok = report.valid;
            Report::new(report, ok)
        }
        Command::VerifyCatalyst { input } => {
            let (text, source) = input::read_source(input.as_deref())?;
            let sol: CatalystSolution = input::parse_wrapped(&text, &source, "solution")?;
            let verification = sol.verify()?;
            // the identity is only defined for solutions that verify
            let mi = if verification.valid {
                Some(cec::mutual_information_check(&sol)?)
            } else {
                None
            };
            let ok = mi
                .as_ref()
                .is_some_and(|m| m.within_tolerance && m.weights_preserved);
            Report::new(json!({ "verification": verification, "mutual_information": mi }), ok)
        }
    }
}

fn catalyst_for(
    p: &Dist,
    q: &Dist,
    cert: &SnCertificate,
    cfg: &RunConfig,
    all: bool,
) -> Result<CatalystSearchReport, CliError> {
    Ok(cec::catalyst_search(p, q, cert, &cfg.search_options(!all))?)
}

/// 0 when found, 3 when a budget ran out first, 1 when every size was refuted.
fn search_code(search: &CatalystSearchReport) -> u8 {
    if search.solution.is_some() {
        0
    } else if search
        .attempts
        .iter()
        .any(|a| a.status == AttemptStatus::BudgetExhausted)
    {
        3
    } else {
        1
    }
}
