//! Command-line surface: entropic queries, upper-bound optimization,
//! transfer-flow accounting, state generation, and the verification suites.
//!
//! Exit codes: 0 on success (and on passing suites), 1 when a verification
//! suite fails, 2 on any input error (bad flags, unreadable files, invalid
//! labels or dimensions). All numeric output is printed in bits/qubits with
//! thirteen significant digits. Seeds come from explicit flags only.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::conditioning::{multipartite_cemi_objective, Extension, Party};
use crate::entropy::{conditional_mi, mutual_information, vn_entropy, Partition};
use crate::error::{Error, Result};
use crate::io::{load_state, save_density, save_pure, save_report, LoadedState};
use crate::layout::SubsystemLayout;
use crate::linalg::{CMat, CVec, C64};
use crate::merging::{route_cost, MergeScenario, RoutePlan, StepKind};
use crate::optimize::{cemi_upper_bound, esq_upper_bound, AnsatzDims, Cut, OptimizerConfig};
use crate::state::PureStateVector;
use crate::verify::run_suites;

#[derive(Parser)]
#[command(
    name = "cemi",
    version,
    about = "Entropic correlation bounds, qubit-flow accounting, and property suites for finite-dimensional quantum states",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Von Neumann entropy of a state and its marginals (bits)
    Entropy {
        /// State file (JSON container, density or pure)
        state_file: PathBuf,
        /// Only the joint marginal of these labels (comma-separated)
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        subsys: Vec<String>,
    },
    /// Mutual information across a cut (bits)
    Mi {
        state_file: PathBuf,
        /// Cut as LEFT:RIGHT, each side a comma-separated label list
        #[arg(long)]
        cut: String,
    },
    /// Conditional mutual information I(A:B|E) (bits)
    Cmi {
        state_file: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        a: Vec<String>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        b: Vec<String>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        e: Vec<String>,
    },
    /// Upper-bound the conditional entanglement of mutual information
    CemiUb {
        state_file: PathBuf,
        /// Extension dims as dA',dB',dC (default: local dims and base rank)
        #[arg(long)]
        dims: Option<String>,
        /// Bipartition as LEFT:RIGHT (default: first label vs the rest)
        #[arg(long)]
        cut: Option<String>,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Objective-evaluation budget per restart
        #[arg(long, default_value_t = 20_000)]
        max_evals: usize,
        /// Write the full optimization report (JSON) here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Upper-bound the squashed entanglement
    EsqUb {
        state_file: PathBuf,
        /// Conditioning-system dimension (default: base rank)
        #[arg(long)]
        denv: Option<usize>,
        /// Bipartition as LEFT:RIGHT (default: first label vs the rest)
        #[arg(long)]
        cut: Option<String>,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Objective-evaluation budget per restart
        #[arg(long, default_value_t = 20_000)]
        max_evals: usize,
        /// Write the full optimization report (JSON) here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cost each transfer step of a merging route and the conserved net flow
    Flows {
        state_file: PathBuf,
        /// Party claim as SYSTEMS/PRIMES (comma lists); repeat once per party
        #[arg(long = "party", required = true)]
        party: Vec<String>,
        /// Labels the relay center starts with (default: every unclaimed label)
        #[arg(long)]
        center: Option<String>,
        /// Send order for the direct plan: comma-separated party lead labels
        #[arg(long)]
        route: Option<String>,
        /// Route shape: direct or escorted (escorted needs exactly two parties)
        #[arg(long, default_value = "direct")]
        plan: String,
    },
    /// Generate a state file
    Gen {
        /// bell | cc | ghz | pure | density
        #[arg(long)]
        kind: String,
        /// Comma-separated subsystem dims (defaults: bell/cc 2,2; ghz 2,2,2)
        #[arg(long)]
        dims: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a seeded property suite
    Verify {
        /// monotonicity | additivity | convexity | conservation | all
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the full suite reports (JSON) here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses argv and executes; never panics on bad input. Normal output goes
/// to `out`, diagnostics to `err`; the return value is the process exit code.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    match dispatch(cli.cmd, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn dispatch(cmd: Cmd, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Cmd::Entropy { state_file, subsys } => cmd_entropy(&state_file, &subsys, out),
        Cmd::Mi { state_file, cut } => cmd_mi(&state_file, &cut, out),
        Cmd::Cmi {
            state_file,
            a,
            b,
            e,
        } => cmd_cmi(&state_file, &a, &b, &e, out),
        Cmd::CemiUb {
            state_file,
            dims,
            cut,
            restarts,
            seed,
            max_evals,
            out: report_path,
        } => cmd_cemi_ub(
            &state_file,
            dims.as_deref(),
            cut.as_deref(),
            restarts,
            seed,
            max_evals,
            report_path.as_deref(),
            out,
        ),
        Cmd::EsqUb {
            state_file,
            denv,
            cut,
            restarts,
            seed,
            max_evals,
            out: report_path,
        } => cmd_esq_ub(
            &state_file,
            denv,
            cut.as_deref(),
            restarts,
            seed,
            max_evals,
            report_path.as_deref(),
            out,
        ),
        Cmd::Flows {
            state_file,
            party,
            center,
            route,
            plan,
        } => cmd_flows(
            &state_file,
            &party,
            center.as_deref(),
            route.as_deref(),
            &plan,
            out,
        ),
        Cmd::Gen {
            kind,
            dims,
            seed,
            out: path,
        } => cmd_gen(&kind, dims.as_deref(), seed, &path, out),
        Cmd::Verify {
            suite,
            trials,
            seed,
            out: report_path,
        } => cmd_verify(&suite, trials, seed, report_path.as_deref(), out),
    }
}

fn wr(res: std::io::Result<()>) -> Result<()> {
    res.map_err(|e| Error::BadArgument(format!("write failed: {e}")))
}

fn parse_label_list(text: &str) -> Result<Vec<String>> {
    let labels: Vec<String> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if labels.is_empty() {
        return Err(Error::BadArgument(format!("empty label list '{text}'")));
    }
    Ok(labels)
}

fn parse_cut(text: &str) -> Result<Cut> {
    let (left, right) = text.split_once(':').ok_or_else(|| {
        Error::BadArgument(format!(
            "cut '{text}' must be LEFT:RIGHT with comma-separated labels"
        ))
    })?;
    Ok(Cut::new(parse_label_list(left)?, parse_label_list(right)?))
}

fn default_cut(layout: &SubsystemLayout) -> Result<Cut> {
    let labels = layout.labels();
    if labels.len() < 2 {
        return Err(Error::BadArgument(
            "state has a single subsystem; give an explicit --cut".into(),
        ));
    }
    Ok(Cut::new(vec![labels[0].clone()], labels[1..].to_vec()))
}

fn parse_dims(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| Error::BadArgument(format!("bad dimension '{tok}'")))
        })
        .collect()
}

fn cmd_entropy(path: &Path, subsys: &[String], out: &mut dyn Write) -> Result<i32> {
    let rho = load_state(path)?.density();
    if subsys.is_empty() {
        let labels = rho.layout().labels();
        wr(writeln!(
            out,
            "S({}) = {:.12e}",
            labels.join(","),
            vn_entropy(&rho)
        ))?;
        for label in &labels {
            let marginal = rho.reduce_to(std::slice::from_ref(label))?;
            wr(writeln!(out, "S({label}) = {:.12e}", vn_entropy(&marginal)))?;
        }
    } else {
        let marginal = rho.reduce_to(subsys)?;
        wr(writeln!(
            out,
            "S({}) = {:.12e}",
            subsys.join(","),
            vn_entropy(&marginal)
        ))?;
    }
    Ok(0)
}

fn cmd_mi(path: &Path, cut: &str, out: &mut dyn Write) -> Result<i32> {
    let rho = load_state(path)?.density();
    let cut = parse_cut(cut)?;
    let value = mutual_information(&rho, &Partition::two(cut.a.clone(), cut.b.clone())?)?;
    wr(writeln!(
        out,
        "I({}:{}) = {:.12e}",
        cut.a.join(","),
        cut.b.join(","),
        value
    ))?;
    Ok(0)
}

fn cmd_cmi(
    path: &Path,
    a: &[String],
    b: &[String],
    e: &[String],
    out: &mut dyn Write,
) -> Result<i32> {
    let rho = load_state(path)?.density();
    let value = conditional_mi(&rho, a, b, e)?;
    wr(writeln!(
        out,
        "I({}:{}|{}) = {:.12e}",
        a.join(","),
        b.join(","),
        e.join(","),
        value
    ))?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_cemi_ub(
    path: &Path,
    dims_text: Option<&str>,
    cut_text: Option<&str>,
    restarts: usize,
    seed: u64,
    max_evals: usize,
    report_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let rho = load_state(path)?.density();
    let cut = match cut_text {
        Some(t) => parse_cut(t)?,
        None => default_cut(rho.layout())?,
    };
    let dims = match dims_text {
        Some(t) => {
            let d = parse_dims(t)?;
            if d.len() != 3 {
                return Err(Error::BadArgument(
                    "--dims takes exactly three values: dA',dB',dC".into(),
                ));
            }
            AnsatzDims::new(d[0], d[1], d[2])?
        }
        None => AnsatzDims::defaults_for(&rho, &cut)?,
    };
    let cfg = OptimizerConfig {
        restarts,
        max_evals,
        seed,
        ..OptimizerConfig::default()
    };
    let report = cemi_upper_bound(&rho, &cut, dims, &cfg)?;
    wr(writeln!(
        out,
        "baseline (trivial extension) = {:.12e}",
        report.baseline_trivial
    ))?;
    wr(writeln!(out, "best_value = {:.12e}", report.best_value))?;
    wr(writeln!(out, "total_evals = {}", report.total_evals))?;
    if let Some(p) = report_path {
        save_report(p, &report)?;
        wr(writeln!(out, "report written to {}", p.display()))?;
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_esq_ub(
    path: &Path,
    denv: Option<usize>,
    cut_text: Option<&str>,
    restarts: usize,
    seed: u64,
    max_evals: usize,
    report_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let rho = load_state(path)?.density();
    let cut = match cut_text {
        Some(t) => parse_cut(t)?,
        None => default_cut(rho.layout())?,
    };
    let d_env = match denv {
        Some(d) => d,
        None => AnsatzDims::defaults_for(&rho, &cut)?.d_env,
    };
    let cfg = OptimizerConfig {
        restarts,
        max_evals,
        seed,
        ..OptimizerConfig::default()
    };
    let report = esq_upper_bound(&rho, &cut, d_env, &cfg)?;
    wr(writeln!(
        out,
        "baseline (trivial conditioning) = {:.12e}",
        report.baseline_trivial
    ))?;
    wr(writeln!(out, "best_value = {:.12e}", report.best_value))?;
    wr(writeln!(out, "total_evals = {}", report.total_evals))?;
    if let Some(p) = report_path {
        save_report(p, &report)?;
        wr(writeln!(out, "report written to {}", p.display()))?;
    }
    Ok(0)
}

fn parse_party_claim(text: &str) -> Result<Party> {
    let (sys_text, prime_text) = match text.split_once('/') {
        Some((s, p)) => (s, p),
        None => (text, ""),
    };
    let systems = parse_label_list(sys_text)?;
    let primes = if prime_text.trim().is_empty() {
        Vec::new()
    } else {
        parse_label_list(prime_text)?
    };
    Ok(Party::new(systems, primes))
}

fn cmd_flows(
    path: &Path,
    party_claims: &[String],
    center_text: Option<&str>,
    route_text: Option<&str>,
    plan_name: &str,
    out: &mut dyn Write,
) -> Result<i32> {
    let parties = party_claims
        .iter()
        .map(|c| parse_party_claim(c))
        .collect::<Result<Vec<Party>>>()?;
    if parties.len() < 2 {
        return Err(Error::BadArgument(
            "need at least two --party claims".into(),
        ));
    }

    let (global, purifier) = match load_state(path)? {
        LoadedState::Pure(psi) => (psi, None),
        LoadedState::Density(rho) => {
            let fresh = rho.layout().fresh_label("P");
            (rho.purify(&fresh)?, Some(fresh))
        }
    };
    let claimed: Vec<String> = parties.iter().flat_map(Party::block).collect();
    let mut center = match center_text {
        Some(t) => parse_label_list(t)?,
        None => global
            .layout()
            .labels()
            .into_iter()
            .filter(|l| !claimed.contains(l) && Some(l) != purifier.as_ref())
            .collect(),
    };
    if let Some(p) = purifier {
        wr(writeln!(out, "mixed input purified onto fresh system {p}"))?;
        center.push(p);
    }
    let scn = MergeScenario::new(global, parties, center)?;

    let plan = match plan_name {
        "direct" => {
            let order: Vec<usize> = match route_text {
                None => (0..scn.parties().len()).collect(),
                Some(t) => parse_label_list(t)?
                    .iter()
                    .map(|lead| {
                        scn.parties()
                            .iter()
                            .position(|p| p.systems.first() == Some(lead))
                            .ok_or_else(|| {
                                Error::BadArgument(format!(
                                    "'{lead}' is not the lead system of any party"
                                ))
                            })
                    })
                    .collect::<Result<Vec<usize>>>()?,
            };
            RoutePlan::direct(&scn, &order)?
        }
        "escorted" => {
            if route_text.is_some() {
                return Err(Error::BadArgument(
                    "--route applies to the direct plan only".into(),
                ));
            }
            RoutePlan::escorted(&scn)?
        }
        other => {
            return Err(Error::BadArgument(format!(
                "unknown plan '{other}' (expected direct or escorted)"
            )))
        }
    };

    let (steps, total) = route_cost(&scn, &plan)?;
    wr(writeln!(out, "plan = {plan_name}"))?;
    for (i, step) in steps.iter().enumerate() {
        let kind = match step.kind {
            StepKind::Merge => "merge",
            StepKind::Distribute => "distribute",
        };
        let lead = scn.parties()[step.party]
            .systems
            .first()
            .cloned()
            .unwrap_or_else(|| format!("#{}", step.party));
        wr(writeln!(
            out,
            "step {}: {kind} party {lead}: move [{}] cost = {:.12e}",
            i + 1,
            step.sent.join(","),
            step.cost
        ))?;
    }
    wr(writeln!(out, "total = {:.12e}", total))?;

    let held: Vec<String> = scn.parties().iter().flat_map(Party::block).collect();
    let held_state = scn.global().reduced_density(&held)?;
    let systems: Vec<String> = scn
        .parties()
        .iter()
        .flat_map(|p| p.systems.iter().cloned())
        .collect();
    let base = held_state.reduce_to(&systems)?;
    let ext = Extension::new(held_state, scn.parties().to_vec(), Vec::new(), base)?;
    wr(writeln!(
        out,
        "net flow (half correlation gap) = {:.12e}",
        multipartite_cemi_objective(&ext)?
    ))?;
    Ok(0)
}

fn alphabet_labels(n: usize) -> Result<Vec<String>> {
    if n == 0 || n > 26 {
        return Err(Error::BadArgument(format!(
            "need between 1 and 26 subsystems, got {n}"
        )));
    }
    Ok((0..n)
        .map(|i| char::from(b'A' + i as u8).to_string())
        .collect())
}

fn correlated_basis_pure(layout: SubsystemLayout, d: usize) -> Result<PureStateVector> {
    let total = layout.total_dim();
    let parts = layout.labels().len();
    let mut v = CVec::zeros(total);
    let amp = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        // index of |i i … i⟩ in row-major order
        let mut idx = 0usize;
        for _ in 0..parts {
            idx = idx * d + i;
        }
        v[idx] = C64::new(amp, 0.0);
    }
    PureStateVector::new(layout, v)
}

fn cmd_gen(
    kind: &str,
    dims_text: Option<&str>,
    seed: u64,
    path: &Path,
    out: &mut dyn Write,
) -> Result<i32> {
    let default_dims = match kind {
        "bell" | "cc" => Some("2,2"),
        "ghz" => Some("2,2,2"),
        _ => None,
    };
    let dims_text = dims_text
        .or(default_dims)
        .ok_or_else(|| Error::BadArgument(format!("--dims is required for kind '{kind}'")))?;
    let dims = parse_dims(dims_text)?;
    let labels = alphabet_labels(dims.len())?;
    let layout = SubsystemLayout::new(labels.iter().cloned().zip(dims.iter().copied()).collect())?;

    match kind {
        "bell" | "ghz" => {
            let min_parts = if kind == "bell" { 2 } else { 3 };
            let d = dims[0];
            if dims.len() < min_parts || dims.iter().any(|&x| x != d) || d < 2 {
                return Err(Error::BadArgument(format!(
                    "kind '{kind}' needs at least {min_parts} subsystems of one equal dimension >= 2"
                )));
            }
            save_pure(path, &correlated_basis_pure(layout, d)?)?;
        }
        "cc" => {
            let d = dims[0];
            if dims.len() != 2 || dims[1] != d || d < 2 {
                return Err(Error::BadArgument(
                    "kind 'cc' needs exactly two subsystems of one equal dimension >= 2".into(),
                ));
            }
            // Uniform mixture of |ii⟩⟨ii|: correlated but unentangled.
            let total = layout.total_dim();
            let mut m = CMat::zeros(total, total);
            for i in 0..d {
                let idx = i * d + i;
                m[(idx, idx)] = C64::new(1.0 / d as f64, 0.0);
            }
            save_density(path, &crate::state::DensityMatrix::new(layout, m)?)?;
        }
        "pure" => {
            save_pure(path, &crate::random::random_pure(&layout, seed)?)?;
        }
        "density" => {
            let rank = layout.total_dim();
            save_density(path, &crate::random::random_density(&layout, rank, seed)?)?;
        }
        other => {
            return Err(Error::BadArgument(format!(
                "unknown kind '{other}' (expected bell, cc, ghz, pure, or density)"
            )))
        }
    }
    wr(writeln!(
        out,
        "wrote {kind} state on ({}) with dims ({}) to {}",
        labels.join(","),
        dims_text,
        path.display()
    ))?;
    Ok(0)
}

fn cmd_verify(
    suite: &str,
    trials: usize,
    seed: u64,
    report_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let reports = run_suites(suite, trials, seed)?;
    let mut all_pass = true;
    for report in &reports {
        wr(writeln!(
            out,
            "suite {}: trials={} seed={}",
            report.suite, report.trials, report.seed
        ))?;
        for check in &report.checks {
            wr(writeln!(
                out,
                "  {}: worst slack = {:.12e} (tolerance {:e}) {}",
                check.name,
                check.worst_slack,
                check.tolerance,
                if check.pass { "PASS" } else { "FAIL" }
            ))?;
        }
        for failure in &report.failures {
            wr(writeln!(
                out,
                "  failure: check={} trial={} slack={:.12e}",
                failure.check, failure.trial, failure.slack
            ))?;
        }
        all_pass &= report.pass;
    }
    wr(writeln!(
        out,
        "overall: {}",
        if all_pass { "PASS" } else { "FAIL" }
    ))?;
    if let Some(p) = report_path {
        save_report(p, &reports)?;
        wr(writeln!(out, "reports written to {}", p.display()))?;
    }
    Ok(if all_pass { 0 } else { 1 })
}
