//! The `seqchain` command line: one subcommand per pipeline stage.
//!
//! Exit codes: 0 on success, 1 when a verification fails (the report is
//! still written), 2 on unreadable input or out-of-range parameters.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::approximator::{build_basic, check_constants_basic, verify_watched_mixing, PiecewiseChain};
use crate::chain::parse_matrix;
use crate::constrained::{
    build_hidden, check_constants_general, compute_b, find_irreducible_b, is_typical, GeneralConstants,
    HiddenChainSpec, ProductPolyhedron, Typicality,
};
use crate::error::{Error, Result};
use crate::partition::{structure_partition, verify_partition};
use crate::report::{Cell, Report};
use crate::sequence::{Alphabet, ObservedSequence};
use crate::simulator::{
    run_trials, simulate_hidden, simulate_piecewise, theorem3_experiment, theorem5_estimate, verify_b1, verify_b2,
    verify_g1_g2, VProcessPolicy, RNG_DESCRIPTION,
};

#[derive(Debug, Parser)]
#[command(
    name = "seqchain",
    version,
    about = "Approximate a symbol sequence by a piecewise Markov chain"
)]
pub struct Cli {
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct MonteCarlo {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

/// Optional overrides of the derived hidden-chain parameters.
#[derive(Debug, Args)]
pub struct HiddenArgs {
    /// Sequence file.
    pub file: PathBuf,
    #[arg(long)]
    pub polyhedra: PathBuf,
    #[arg(long)]
    pub psi: f64,
    #[arg(long)]
    pub eta: f64,
    /// Irreducible kernel inside `V`; the vertex centroids by default.
    #[arg(long, value_name = "MATRIX")]
    pub b: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub delta_prime: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    /// Uniform weights over the vertices, fixed in time.
    Centroid,
    /// Fresh uniform weights at every step.
    Iid,
    /// Vertices taken in turn at each state.
    Cycling,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Occupancy, observed transition matrix and run counts of a sequence.
    Stats {
        file: PathBuf,
        /// Comma separated tokens; adds `R_C` and `R_{C̄}`.
        #[arg(long)]
        set: Option<String>,
    },
    /// Structure partition at run threshold `a`.
    Partition {
        #[arg(long)]
        a: f64,
        file: PathBuf,
    },
    /// Invariant measure, mixing constant and set statistics of a kernel.
    Analyze {
        matrix: PathBuf,
        #[arg(long)]
        set: Option<String>,
    },
    /// Build the approximating piecewise chain.
    Build {
        file: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        /// Defaults to `delta`.
        #[arg(long)]
        zeta: Option<f64>,
        /// Write the chain here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the hidden chain under polyhedral constraints.
    HiddenBuild {
        #[command(flatten)]
        hidden: HiddenArgs,
        /// Write the chain description (JSON) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide typicality of a sequence with respect to polyhedra.
    Typical {
        file: PathBuf,
        #[arg(long)]
        polyhedra: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        epsilon: f64,
    },
    /// Sample realizations of a piecewise chain, or of a hidden chain saved
    /// by `hidden-build --out`.
    Simulate {
        chain: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
    /// Build the piecewise chain and check its guarantees by simulation.
    VerifyBasic {
        file: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        zeta: f64,
        #[command(flatten)]
        mc: MonteCarlo,
    },
    /// Build the hidden chain and check its guarantees by simulation.
    VerifyGeneral {
        #[command(flatten)]
        hidden: HiddenArgs,
        #[command(flatten)]
        mc: MonteCarlo,
    },
    /// Occupancy deviation of a mixing chain against `17γ/(nε²)`.
    Thm3 {
        matrix: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        epsilon: f64,
        /// Start state token; the first state by default.
        #[arg(long)]
        start: Option<String>,
        #[command(flatten)]
        mc: MonteCarlo,
    },
    /// Fraction of typical V-process realizations.
    Thm5 {
        #[arg(long)]
        polyhedra: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = PolicyArg::Iid)]
        policy: PolicyArg,
        #[command(flatten)]
        mc: MonteCarlo,
    },
    /// Evaluate the size conditions at a given `N`.
    Constants {
        #[command(subcommand)]
        which: ConstantsCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConstantsCommand {
    Basic {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        zeta: f64,
    },
    General {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        n: u64,
        /// Length of the extended sequence; `N + |S|` by default.
        #[arg(long)]
        n_star: Option<u64>,
        #[arg(long)]
        psi: f64,
        #[arg(long)]
        eta: f64,
        /// Largest expected hitting time of the reference kernel.
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 1)]
        max_vertices: usize,
        #[arg(long)]
        total_vertices: Option<usize>,
    },
}

/// A finished command: its report and whether every verified bound held.
pub struct Outcome {
    pub report: Report,
    pub pass: bool,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        Outcome { report, pass: true }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    let rendered = if cli.json {
        outcome.report.to_json()
    } else {
        outcome.report.to_text()
    };
    let written = match &cli.report {
        Some(path) => fs::write(path, &rendered).map_err(Error::from),
        None => stdout.write_all(rendered.as_bytes()).map_err(Error::from),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return 2;
    }
    if outcome.pass {
        0
    } else {
        1
    }
}

pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Stats { file, set } => stats(&read_sequence(file)?, set.as_deref()),
        Command::Partition { a, file } => partition(&read_sequence(file)?, *a),
        Command::Analyze { matrix, set } => analyze(matrix, set.as_deref()),
        Command::Build {
            file,
            epsilon,
            delta,
            zeta,
            out,
        } => build(
            &read_sequence(file)?,
            *epsilon,
            *delta,
            zeta.unwrap_or(*delta),
            out.as_deref(),
        ),
        Command::HiddenBuild { hidden, out } => {
            let built = hidden_pipeline(hidden)?;
            if let (Some(path), Some(spec)) = (out, &built.spec) {
                let json = serde_json::to_string_pretty(spec).map_err(|e| Error::Io(e.to_string()))?;
                fs::write(path, json)?;
            }
            Ok(Outcome {
                pass: built.spec.is_some(),
                report: built.report,
            })
        }
        Command::Typical {
            file,
            polyhedra,
            delta,
            epsilon,
        } => typical(file, polyhedra, *delta, *epsilon),
        Command::Simulate { chain, seed, trials } => simulate(chain, *seed, *trials),
        Command::VerifyBasic {
            file,
            epsilon,
            delta,
            zeta,
            mc,
        } => verify_basic(&read_sequence(file)?, *epsilon, *delta, *zeta, mc),
        Command::VerifyGeneral { hidden, mc } => {
            let built = hidden_pipeline(hidden)?;
            let Some(spec) = built.spec else {
                return Ok(Outcome {
                    report: built.report,
                    pass: false,
                });
            };
            let mut report = built.report;
            let v = verify_g1_g2(&spec, hidden.eta, hidden.psi, mc.trials, mc.seed)?;
            report.merge("verify", v.to_report("hidden chain verification"));
            Ok(Outcome { report, pass: v.pass })
        }
        Command::Thm3 {
            matrix,
            n,
            epsilon,
            start,
            mc,
        } => {
            let (alphabet, p) = parse_matrix(&read(matrix)?)?;
            let start = match start {
                Some(tok) => state_index(&alphabet, tok)?,
                None => 0,
            };
            let r = theorem3_experiment(&p, *n, *epsilon, start, mc.trials, mc.seed)?;
            Ok(Outcome {
                pass: r.pass,
                report: r.to_report(),
            })
        }
        Command::Thm5 {
            polyhedra,
            n,
            delta,
            epsilon,
            policy,
            mc,
        } => {
            let v = ProductPolyhedron::parse(&read(polyhedra)?)?;
            let policy = match policy {
                PolicyArg::Centroid => VProcessPolicy::Fixed(
                    v.per_state
                        .iter()
                        .map(|p| vec![1.0 / p.vertices().len() as f64; p.vertices().len()])
                        .collect(),
                ),
                PolicyArg::Iid => VProcessPolicy::Iid,
                PolicyArg::Cycling => VProcessPolicy::Cycling,
            };
            let r = theorem5_estimate(&v, &policy, *n, *delta, *epsilon, mc.trials, mc.seed)?;
            Ok(Outcome::ok(r.to_report()))
        }
        Command::Constants { which } => constants(which),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_sequence(path: &Path) -> Result<ObservedSequence> {
    ObservedSequence::parse(&read(path)?)
}

fn state_index(alphabet: &Alphabet, tok: &str) -> Result<usize> {
    alphabet
        .index_of(tok)
        .ok_or_else(|| Error::InvalidSequence(format!("unknown state `{tok}`")))
}

fn row_cells(alphabet: &Alphabet, s: usize, row: &[f64]) -> Vec<Cell> {
    std::iter::once(Cell::from(alphabet.symbol(s)))
        .chain(row.iter().map(|&v| Cell::from(v)))
        .collect()
}

fn matrix_table(report: &mut Report, key: &str, alphabet: &Alphabet, rows: impl Fn(usize) -> Vec<f64>) {
    let mut columns = vec!["from"];
    columns.extend(alphabet.symbols().iter().map(String::as_str));
    let rows = (0..alphabet.len()).map(|s| row_cells(alphabet, s, &rows(s))).collect();
    report.table(key, &columns, rows);
}

fn stats(x: &ObservedSequence, set: Option<&str>) -> Result<Outcome> {
    let alphabet = x.alphabet();
    let counts = x.count_transitions();
    let observed = counts.observed_transition_matrix();
    let occupancy = counts.occupancy();
    let mut r = Report::new("sequence statistics");
    r.field("states", alphabet.len())
        .field("transitions", x.transitions())
        .field("exhaustive", x.is_exhaustive())
        .field("periodic", x.is_periodic());
    r.table(
        "occupancy",
        &["state", "visits", "occupancy"],
        (0..alphabet.len())
            .map(|s| {
                vec![
                    alphabet.symbol(s).into(),
                    counts.row_total(s).into(),
                    occupancy.get(s).into(),
                ]
            })
            .collect(),
    );
    matrix_table(&mut r, "transition_matrix", alphabet, |s| {
        observed.matrix.row(s).to_vec()
    });
    let unvisited: Vec<&str> = observed.unvisited.iter().map(|&s| alphabet.symbol(s)).collect();
    r.field("unvisited", unvisited.join(","));
    if let Some(list) = set {
        let c = alphabet.parse_subset(list)?;
        let comp = c.complement(alphabet.len());
        r.field("set", alphabet.format_subset(c))
            .field("runs", x.run_count(c))
            .field("runs_complement", x.run_count(comp));
    }
    Ok(Outcome::ok(r))
}

fn partition(x: &ObservedSequence, a: f64) -> Result<Outcome> {
    let alphabet = x.alphabet();
    let p = structure_partition(x, a)?;
    let check = verify_partition(x, &p);
    let mut r = Report::new("structure partition");
    r.field("a", a).field("run_ceiling", check.run_ceiling);
    r.table(
        "atoms",
        &["atom", "runs"],
        p.atoms
            .iter()
            .zip(&check.run_counts)
            .map(|(&c, &runs)| vec![alphabet.format_subset(c).into(), runs.into()])
            .collect(),
    );
    r.field("few_runs", check.p1_ok)
        .field("no_cheap_split", check.p2_ok)
        .field("covers", check.covers);
    Ok(Outcome {
        pass: check.p1_ok && check.p2_ok && check.covers,
        report: r,
    })
}

fn analyze(path: &Path, set: Option<&str>) -> Result<Outcome> {
    let (alphabet, p) = parse_matrix(&read(path)?)?;
    let mut r = Report::new("chain analysis");
    let irreducible = p.is_irreducible();
    r.field("states", alphabet.len()).field("irreducible", irreducible);
    if !irreducible {
        return Ok(Outcome::ok(r));
    }
    let mu = p.invariant_measure()?;
    r.table(
        "invariant_measure",
        &["state", "mu"],
        (0..alphabet.len())
            .map(|s| vec![alphabet.symbol(s).into(), mu.get(s).into()])
            .collect(),
    );
    r.field("gamma", p.gamma_mixing_constant()?);
    if let Some(list) = set {
        let c = alphabet.parse_subset(list)?;
        let m = p.mixing_stats(c)?;
        r.field("set", alphabet.format_subset(c))
            .field("lambda", m.lambda)
            .field("rho", m.rho)
            .field("visit_length", m.visit_len)
            .field("conductance", m.conductance);
    }
    Ok(Outcome::ok(r))
}

fn pieces_table(r: &mut Report, chain: &PiecewiseChain) {
    let rows = chain
        .pieces
        .iter()
        .enumerate()
        .map(|(k, p)| vec![k.into(), chain.alphabet.format_subset(p.atom).into(), p.length.into()])
        .collect();
    r.table("pieces", &["piece", "atom", "length"], rows);
}

fn build(x: &ObservedSequence, epsilon: f64, delta: f64, zeta: f64, out: Option<&Path>) -> Result<Outcome> {
    let basic = build_basic(x, delta)?;
    let x_star = basic.x_star_sequence();
    let mut r = Report::new("piecewise approximation");
    r.field("delta", delta)
        .field("transitions", x_star.transitions())
        .field("partition_threshold", basic.partition.a)
        .field("atoms", basic.partition.num_atoms());
    pieces_table(&mut r, &basic.chain);
    let initial = basic.chain.initial.iter().position(|&w| w == 1.0).unwrap_or(0);
    r.field("initial", basic.chain.alphabet.symbol(initial));
    r.merge(
        "constants",
        constants_basic_report(x.num_states(), x_star.transitions() as u64, epsilon, delta, zeta),
    );
    let mixing = verify_watched_mixing(&x_star, &basic.partition, delta)?;
    r.table(
        "watched_mixing",
        &["atom", "gamma", "bound", "pass"],
        mixing
            .iter()
            .map(|m| {
                vec![
                    basic.chain.alphabet.format_subset(m.atom).into(),
                    m.gamma.map_or(Cell::from("-"), Cell::from),
                    m.bound.into(),
                    m.pass.map_or(Cell::from("-"), Cell::from),
                ]
            })
            .collect(),
    );
    if let Some(path) = out {
        fs::write(path, basic.chain.to_text())?;
        r.field("written", path.display().to_string());
    }
    Ok(Outcome::ok(r))
}

fn constants_basic_report(states: usize, n: u64, epsilon: f64, delta: f64, zeta: f64) -> Report {
    let mut r = Report::new("size conditions");
    r.field("epsilon", epsilon).field("delta", delta).field("zeta", zeta);
    match check_constants_basic(states, n, epsilon, delta, zeta) {
        Ok(c) => {
            r.field("a", c.a);
            checks_table(&mut r, "checks", &c.checks);
            match c.min_n0 {
                crate::approximator::MinimalN::Finite(n0) => r.field("min_n0", n0),
                crate::approximator::MinimalN::Astronomical { log10 } => r.field("min_n0_log10", log10),
            };
            r.field("all_hold", c.all_hold());
        }
        Err(e) => {
            r.field("all_hold", false).field("error", e.to_string());
        }
    }
    r
}

fn checks_table(r: &mut Report, key: &str, checks: &[crate::approximator::Check]) {
    let rows = checks
        .iter()
        .map(|c| vec![c.name.clone().into(), c.lhs.into(), c.rhs.into(), c.holds.into()])
        .collect();
    r.table(key, &["condition", "lhs", "rhs", "holds"], rows);
}

fn general_report(g: &GeneralConstants) -> Report {
    let mut r = Report::new("size conditions");
    r.field("psi", g.psi)
        .field("eta", g.eta)
        .field("b", g.b)
        .field("l", g.l)
        .field("epsilon", g.epsilon)
        .field("beta", g.beta)
        .field("alpha", g.alpha)
        .field("alpha_prime", g.alpha_prime)
        .field("psi_prime", g.psi_prime)
        .field("xi", g.xi)
        .field("delta_prime", g.delta_prime)
        .field("delta", g.delta)
        .field("a", g.a);
    checks_table(&mut r, "checks", &g.checks);
    checks_table(&mut r, "typicality_checks", &g.typicality);
    r.field("all_hold", g.all_hold());
    r
}

fn constants(which: &ConstantsCommand) -> Result<Outcome> {
    match *which {
        ConstantsCommand::Basic {
            states,
            n,
            epsilon,
            delta,
            zeta,
        } => {
            check_constants_basic(states, n, epsilon, delta, zeta)?;
            Ok(Outcome::ok(constants_basic_report(states, n, epsilon, delta, zeta)))
        }
        ConstantsCommand::General {
            states,
            n,
            n_star,
            psi,
            eta,
            b,
            max_vertices,
            total_vertices,
        } => {
            let g = check_constants_general(
                states,
                n,
                n_star.unwrap_or(n + states as u64),
                psi,
                eta,
                b,
                (max_vertices, total_vertices.unwrap_or(states * max_vertices)),
            )?;
            Ok(Outcome::ok(general_report(&g)))
        }
    }
}

/// Reads a sequence over the alphabet of `v`.
fn sequence_over(path: &Path, v: &ProductPolyhedron) -> Result<ObservedSequence> {
    let x = read_sequence(path)?;
    let tokens = x.entries().iter().map(|&s| x.alphabet().symbol(s));
    let y = ObservedSequence::with_alphabet(&v.alphabet, tokens)?;
    if y.num_states() != v.num_states() {
        return Err(Error::InvalidSequence(format!(
            "the sequence uses states outside the polyhedra alphabet ({})",
            v.alphabet.symbols().join(" ")
        )));
    }
    Ok(y)
}

fn typical(file: &Path, polyhedra: &Path, delta: f64, epsilon: f64) -> Result<Outcome> {
    let v = ProductPolyhedron::parse(&read(polyhedra)?)?;
    let x = sequence_over(file, &v)?;
    let mut r = Report::new("typicality");
    r.field("delta", delta).field("epsilon", epsilon);
    let verdict = is_typical(&x, &v, delta, epsilon)?;
    typicality_fields(&mut r, &v.alphabet, &x, &verdict);
    Ok(Outcome {
        pass: verdict.certificate().is_some(),
        report: r,
    })
}

fn typicality_fields(r: &mut Report, alphabet: &Alphabet, x: &ObservedSequence, verdict: &Typicality) {
    match verdict {
        Typicality::Typical(cert) => {
            let p = x.count_transitions().observed_transition_matrix().matrix;
            r.field("typical", true)
                .field("max_relative_deviation", cert.max_relative_deviation(&p))
                .field("active_pairs", cert.active_pairs.len());
            matrix_table(r, "kernel", alphabet, |s| cert.v.row(s).to_vec());
        }
        Typicality::NotTypical { state } => {
            r.field("typical", false)
                .field("infeasible_state", alphabet.symbol(*state));
        }
    }
}

struct HiddenBuild {
    report: Report,
    spec: Option<HiddenChainSpec>,
}

fn hidden_pipeline(args: &HiddenArgs) -> Result<HiddenBuild> {
    let v = ProductPolyhedron::parse(&read(&args.polyhedra)?)?;
    let x = sequence_over(&args.file, &v)?;
    let b = match &args.b {
        Some(path) => parse_matrix(&read(path)?)?.1,
        None => {
            find_irreducible_b(&v).ok_or_else(|| Error::DegenerateInput("V contains no irreducible kernel".into()))?
        }
    };
    let b_const = compute_b(&b)?;
    let x_star_len = x.periodicize_exhaustify().transitions() as u64;
    let max_vertices = v.per_state.iter().map(|p| p.vertices().len()).max().unwrap_or(1);
    let total_vertices = v.per_state.iter().map(|p| p.vertices().len()).sum();
    let g = check_constants_general(
        x.num_states(),
        x.transitions() as u64,
        x_star_len,
        args.psi,
        args.eta,
        b_const,
        (max_vertices, total_vertices),
    )?;
    let mut params = g.params();
    params.epsilon = args.epsilon.unwrap_or(params.epsilon);
    params.delta = args.delta.unwrap_or(params.delta);
    params.delta_prime = args.delta_prime.unwrap_or(params.delta_prime);
    params.xi = args.xi.unwrap_or(params.xi);

    let mut r = Report::new("hidden chain");
    r.merge("constants", general_report(&g));
    r.field("relaxed", !g.all_hold())
        .field("epsilon", params.epsilon)
        .field("delta", params.delta)
        .field("delta_prime", params.delta_prime)
        .field("xi", params.xi);
    let verdict = is_typical(&x, &v, params.delta, params.epsilon)?;
    typicality_fields(&mut r, &v.alphabet, &x, &verdict);
    let Some(cert) = verdict.certificate() else {
        return Ok(HiddenBuild { report: r, spec: None });
    };
    let spec = build_hidden(&x, &v, &b, params, cert)?;
    r.table(
        "pieces",
        &["piece", "atom", "length"],
        spec.atoms
            .iter()
            .zip(&spec.lengths)
            .enumerate()
            .map(|(k, (&atom, &m))| vec![k.into(), v.alphabet.format_subset(atom).into(), m.into()])
            .collect(),
    );
    r.field("initial", v.alphabet.symbol(spec.initial.s));
    Ok(HiddenBuild {
        report: r,
        spec: Some(spec),
    })
}

fn simulate(path: &Path, seed: u64, trials: usize) -> Result<Outcome> {
    let text = read(path)?;
    let (alphabet, paths) = if text.trim_start().starts_with('{') {
        let spec: HiddenChainSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        let paths = run_trials(trials, seed, |rng| simulate_hidden(&spec, rng).z);
        (spec.x_star.alphabet().clone(), paths)
    } else {
        let chain = PiecewiseChain::parse(&text)?;
        let paths = run_trials(trials, seed, |rng| simulate_piecewise(&chain, rng));
        (chain.alphabet, paths)
    };
    let mut r = Report::new("realizations");
    r.field("rng", RNG_DESCRIPTION)
        .field("seed", seed)
        .field("trials", trials);
    let rows = paths
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let tokens: Vec<&str> = z.iter().map(|&s| alphabet.symbol(s)).collect();
            vec![i.into(), tokens.join(" ").into()]
        })
        .collect();
    r.table("paths", &["trial", "path"], rows);
    Ok(Outcome::ok(r))
}

fn verify_basic(x: &ObservedSequence, epsilon: f64, delta: f64, zeta: f64, mc: &MonteCarlo) -> Result<Outcome> {
    let basic = build_basic(x, delta)?;
    let x_star = basic.x_star_sequence();
    let mut r = Report::new("piecewise chain verification");
    pieces_table(&mut r, &basic.chain);
    let b2 = verify_b2(&basic.chain, &x_star, epsilon);
    r.merge("structural", b2.to_report(&basic.chain.alphabet));
    let b1 = verify_b1(&basic.chain, &x_star, epsilon, delta, zeta, mc.trials, mc.seed)?;
    r.merge("occupancy", b1.to_report("occupancy deviation"));
    // the homogeneous chain with the observed kernel, for contrast
    let naive = PiecewiseChain::homogeneous(
        basic.chain.alphabet.clone(),
        basic.p_star.clone(),
        x_star.transitions(),
        x_star.first(),
    );
    let contrast = verify_b1(&naive, &x_star, epsilon, delta, zeta, mc.trials, mc.seed)?;
    r.field("homogeneous_max_frequency", contrast.max_qualifying_frequency());
    r.field("pass", b2.pass && b1.pass);
    Ok(Outcome {
        pass: b2.pass && b1.pass,
        report: r,
    })
}
