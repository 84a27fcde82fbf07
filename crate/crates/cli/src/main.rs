use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gpt_steering::lp::LpDiagnostics;
use gpt_steering::rules::{DEFAULT_AUDIT_GRID, DEFAULT_AUDIT_TOL};
use gpt_steering::signaling::{
    AffinityCertificate, DetectionStats, SearchOutcome, SweepRow, DEFAULT_REFINE_STEPS,
    DEFAULT_SEARCH_GRID,
};
use gpt_steering::steering::{computational_basis, hadamard_basis};
use gpt_steering::transition::great_circle_generators;
use gpt_steering::{
    affinity_certificate, check_constraints, marginal, max_gap_search, mix, mixed_tau, purify,
    reproduce_paper, run_scenario, simulate_detection, steer, sweep,
    synthesize_steering_measurement, tau, tau_lp, verify_no_signaling_marginal, BipartiteState,
    Ensemble, GptError, Measurement, ProbabilityRule, Protocol2Mode, RuleSpec, Scenario, Side,
    State, SystemModel,
};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "gpt-steer", version, about = "Probability rules, steering and signaling gaps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit a probability rule against boundary, monotonicity,
    /// normalization and midpoint constraints.
    RuleCheck {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long, default_value_t = DEFAULT_AUDIT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_AUDIT_TOL)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Transition probability between two pure states.
    Tau {
        /// Named qubit state (zero, one, plus, minus, plus-i, minus-i) or a JSON state file.
        #[arg(long)]
        psi: String,
        #[arg(long, default_value = "zero")]
        phi: String,
        /// Cross-check with the linear program over a great-circle generator grid.
        #[arg(long)]
        lp: bool,
        #[arg(long, default_value_t = 720)]
        grid: usize,
        /// Fail (exit 1) if the LP value differs from the closed form by more than this.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        verbose: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Steer a shared state by a measurement on Alice's side.
    Steer {
        /// JSON bipartite state; defaults to the maximally entangled qubit pair.
        #[arg(long, conflicts_with = "target")]
        joint: Option<PathBuf>,
        /// Alice's measurement on the joint state.
        #[arg(long, value_enum, default_value_t = Basis::Z, conflicts_with = "target")]
        basis: Basis,
        /// JSON ensemble `[{"weight": w, "state": <state>}, ...]` to steer into
        /// through a purification of its average.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        purifier_dim: Option<usize>,
        #[command(flatten)]
        rule: OptionalRuleArgs,
        #[arg(long, default_value = "zero")]
        phi: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Signaling gap between two steering protocols for one scenario.
    Gap {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value = "zero")]
        phi: String,
        #[arg(long, value_enum, default_value_t = Mode::TrivialAverage)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Simulate this many runs per protocol and report the estimated gap.
        #[arg(long)]
        samples: Option<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sweep the gap over the unit cube and report the largest witness.
    Scan {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long, default_value_t = DEFAULT_SEARCH_GRID)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_REFINE_STEPS)]
        refine: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fail (exit 1) if the largest |gap| exceeds this.
        #[arg(long)]
        tol: Option<f64>,
        /// Also run this many random scenarios through the full pipeline.
        #[arg(long)]
        samples: Option<usize>,
        /// Emit every (p1, p2, lambda) row instead of the best lambda per (p1, p2).
        #[arg(long)]
        full: bool,
        /// Write the sweep CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Recompute the worked examples and compare with the published values.
    ReproducePaper {
        /// Override every row's tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
struct RuleArgs {
    #[arg(long, value_enum, conflicts_with = "rule_file", required_unless_present = "rule_file")]
    family: Option<Family>,
    /// JSON rule file, e.g. {"family": "power", "alpha": 1.5}.
    #[arg(long)]
    rule_file: Option<PathBuf>,
    #[arg(long, requires = "family")]
    alpha: Option<f64>,
}

#[derive(Args)]
struct OptionalRuleArgs {
    #[arg(long, value_enum, conflicts_with = "rule_file")]
    family: Option<Family>,
    #[arg(long)]
    rule_file: Option<PathBuf>,
    #[arg(long, requires = "family")]
    alpha: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Identity,
    Power,
    PiecewiseQuadratic,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    Z,
    X,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    TrivialAverage,
    SteeredUniform,
}

enum CliError {
    Usage(String),
    Model(GptError),
    Io(String),
}

impl From<GptError> for CliError {
    fn from(e: GptError) -> Self {
        CliError::Model(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Model(e) => write!(f, "error: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Outcome of a subcommand: whether its check passed.
enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

fn build_rule(family: Option<Family>, alpha: Option<f64>, file: Option<&Path>) -> CliResult<ProbabilityRule> {
    if let Some(path) = file {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read rule file {}: {e}", path.display())))?;
        let spec: RuleSpec = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("malformed rule file {}: {e}", path.display())))?;
        return Ok(ProbabilityRule::new(spec)?);
    }
    match (family, alpha) {
        (Some(Family::Identity), None) => Ok(ProbabilityRule::identity()),
        (Some(Family::PiecewiseQuadratic), None) => Ok(ProbabilityRule::piecewise_quadratic()),
        (Some(Family::Power), Some(a)) => Ok(ProbabilityRule::power(a)?),
        (Some(Family::Power), None) => Err(CliError::Usage("--family power needs --alpha".into())),
        (Some(_), Some(_)) => Err(CliError::Usage("--alpha only applies to --family power".into())),
        (None, _) => Err(CliError::Usage("no rule given".into())),
    }
}

impl RuleArgs {
    fn rule(&self) -> CliResult<ProbabilityRule> {
        build_rule(self.family, self.alpha, self.rule_file.as_deref())
    }
}

impl OptionalRuleArgs {
    fn rule(&self) -> CliResult<Option<ProbabilityRule>> {
        if self.family.is_none() && self.rule_file.is_none() {
            return Ok(None);
        }
        build_rule(self.family, self.alpha, self.rule_file.as_deref()).map(Some)
    }
}

fn named_state(name: &str) -> CliResult<State> {
    let qubit = SystemModel::qubit();
    let bloch = match name {
        "zero" => return Ok(State::basis(qubit, 0)?),
        "one" => return Ok(State::basis(qubit, 1)?),
        "plus" => [1.0, 0.0, 0.0],
        "minus" => [-1.0, 0.0, 0.0],
        "plus-i" => [0.0, 1.0, 0.0],
        "minus-i" => [0.0, -1.0, 0.0],
        path => return read_json(Path::new(path), "state"),
    };
    Ok(State::from_bloch(bloch)?)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("{what} {:?} is neither a known name nor a readable file: {e}", path))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed {what} file {}: {e}", path.display())))
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

struct Sink {
    out: Option<PathBuf>,
    buf: Vec<u8>,
}

impl Sink {
    fn new(args: &OutputArgs) -> Self {
        Sink {
            out: args.out.clone(),
            buf: Vec::new(),
        }
    }

    fn json<T: Serialize>(&mut self, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(self.buf, "{text}")?;
        Ok(())
    }

    fn line(&mut self, text: impl AsRef<str>) -> CliResult<()> {
        writeln!(self.buf, "{}", text.as_ref())?;
        Ok(())
    }

    fn finish(self) -> CliResult<()> {
        match self.out {
            Some(path) => fs::write(&path, &self.buf)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
            None => {
                io::stdout().write_all(&self.buf)?;
                Ok(())
            }
        }
    }
}

fn no_csv(format: Format, command: &str) -> CliResult<()> {
    if format == Format::Csv {
        return Err(CliError::Usage(format!("{command} has no CSV output")));
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<Verdict> {
    match cli.command {
        Command::RuleCheck { rule, grid, tol, out } => cmd_rule_check(&rule.rule()?, grid, tol, &out),
        Command::Tau {
            psi,
            phi,
            lp,
            grid,
            tol,
            verbose,
            out,
        } => cmd_tau(&named_state(&psi)?, &named_state(&phi)?, lp.then_some(grid), tol, verbose, &out),
        Command::Steer {
            joint,
            basis,
            target,
            purifier_dim,
            rule,
            phi,
            out,
        } => cmd_steer(joint, basis, target, purifier_dim, rule.rule()?, &named_state(&phi)?, &out),
        Command::Gap {
            rule,
            p1,
            p2,
            lambda,
            phi,
            mode,
            seed,
            samples,
            out,
        } => {
            let mut scenario = Scenario::qubit(rule.rule()?, p1, p2, lambda).with_seed(seed);
            scenario.phi = named_state(&phi)?;
            scenario.mode = match mode {
                Mode::TrivialAverage => Protocol2Mode::TrivialAverage,
                Mode::SteeredUniform => Protocol2Mode::SteeredUniform,
            };
            cmd_gap(&scenario, samples, &out)
        }
        Command::Scan {
            rule,
            grid,
            refine,
            seed,
            tol,
            samples,
            full,
            csv,
            out,
        } => cmd_scan(&rule.rule()?, grid, refine, seed, tol, samples, full, csv, &out),
        Command::ReproducePaper { tol, out } => cmd_reproduce_paper(tol, &out),
    }
}

fn cmd_rule_check(rule: &ProbabilityRule, grid: usize, tol: f64, out: &OutputArgs) -> CliResult<Verdict> {
    no_csv(out.format, "rule-check")?;
    if grid < 3 {
        return Err(CliError::Usage("--grid must be at least 3".into()));
    }
    let report = check_constraints(rule, grid, tol);
    let mut sink = Sink::new(out);
    match out.format {
        Format::Pretty => {
            let mark = |b: bool| if b { "PASS" } else { "FAIL" };
            sink.line(format!("rule: {}", rule.label()))?;
            sink.line(format!("grid: {}  tol: {:e}", report.grid_n, report.tol))?;
            sink.line(format!(
                "boundary      {}  Phi(0) = {}  Phi(1) = {}",
                mark(report.boundary.pass),
                report.boundary.phi_at_0,
                report.boundary.phi_at_1
            ))?;
            sink.line(format!(
                "monotonicity  {}  violations = {}",
                mark(report.monotonicity.pass),
                report.monotonicity.violations
            ))?;
            sink.line(format!(
                "normalization {}  max |Phi(p) + Phi(1-p) - 1| = {:e} at p = {}",
                mark(report.normalization.pass),
                report.normalization.residual,
                report.normalization.at_p
            ))?;
            sink.line(format!(
                "midpoint      {}  |Phi(1/2) - 1/2| = {:e}",
                mark(report.midpoint.pass),
                report.midpoint.residual
            ))?;
            for c in &report.curvature {
                sink.line(format!("curvature     [{:.6}, {:.6}] {:?}", c.start, c.end, c.shape))?;
            }
            if report.clamped_samples > 0 {
                sink.line(format!("clamped samples: {}", report.clamped_samples))?;
            }
            sink.line(format!("overall       {}", mark(report.pass)))?;
        }
        _ => sink.json(&report)?,
    }
    sink.finish()?;
    Ok(Verdict::from_bool(report.pass))
}

#[derive(Serialize)]
struct TauOutput {
    tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lp: Option<LpOutput>,
}

#[derive(Serialize)]
struct LpOutput {
    value: f64,
    generators: usize,
    abs_diff: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<LpDiagnostics>,
}

fn cmd_tau(
    psi: &State,
    phi: &State,
    lp_grid: Option<usize>,
    tol: Option<f64>,
    verbose: bool,
    out: &OutputArgs,
) -> CliResult<Verdict> {
    no_csv(out.format, "tau")?;
    let closed = tau(psi, phi)?;
    let lp = match lp_grid {
        None => None,
        Some(grid) => {
            let result = match psi.model() {
                SystemModel::Classical { .. } => tau_lp(psi, phi, None)?,
                SystemModel::Quantum { .. } => {
                    let gens = great_circle_generators(psi, phi, grid)?;
                    tau_lp(psi, phi, Some(&gens))?
                }
            };
            Some(LpOutput {
                value: result.value,
                generators: result.generators,
                abs_diff: (result.value - closed).abs(),
                diagnostics: verbose.then_some(result.diagnostics),
            })
        }
    };
    let pass = match (&lp, tol) {
        (Some(l), Some(t)) => l.abs_diff <= t,
        _ => true,
    };
    let output = TauOutput { tau: closed, lp };
    let mut sink = Sink::new(out);
    match out.format {
        Format::Pretty => {
            sink.line(format!("tau = {}", output.tau))?;
            if let Some(l) = &output.lp {
                sink.line(format!("lp  = {}  ({} generators, |diff| = {:e})", l.value, l.generators, l.abs_diff))?;
                if let Some(d) = &l.diagnostics {
                    sink.line(format!(
                        "lp diagnostics: {} rows, {} cols, {} phase-1 pivots, {} phase-2 pivots",
                        d.rows, d.cols, d.phase1_pivots, d.phase2_pivots
                    ))?;
                }
            }
        }
        _ => sink.json(&output)?,
    }
    sink.finish()?;
    Ok(Verdict::from_bool(pass))
}

#[derive(Deserialize)]
struct TargetMember {
    weight: f64,
    state: State,
}

#[derive(Serialize)]
struct SteerMember {
    weight: f64,
    tau: f64,
    state: State,
}

#[derive(Serialize)]
struct SteerOutput {
    outcomes: usize,
    members: Vec<SteerMember>,
    bob_marginal: State,
    #[serde(skip_serializing_if = "Option::is_none")]
    marginal_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rule: Option<RuleSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    probability: Option<f64>,
}

fn cmd_steer(
    joint: Option<PathBuf>,
    basis: Basis,
    target: Option<PathBuf>,
    purifier_dim: Option<usize>,
    rule: Option<ProbabilityRule>,
    phi: &State,
    out: &OutputArgs,
) -> CliResult<Verdict> {
    no_csv(out.format, "steer")?;
    let (joint, alice, target) = match target {
        Some(path) => {
            let members: Vec<TargetMember> = read_json(&path, "target ensemble")?;
            let target = Ensemble::new(members.into_iter().map(|m| (m.weight, m.state)).collect())?;
            let joint = purify(&mix(&target)?, purifier_dim)?;
            let alice = synthesize_steering_measurement(&joint, &target)?.measurement;
            (joint, alice, Some(target))
        }
        None => {
            let joint = match joint {
                Some(path) => read_json::<BipartiteState>(&path, "joint state")?,
                None => BipartiteState::maximally_entangled(2)?,
            };
            let alice = match basis {
                Basis::Z => computational_basis(joint.model(Side::A))?,
                Basis::X if joint.model(Side::A) == SystemModel::qubit() => hadamard_basis(),
                Basis::X => return Err(CliError::Usage("--basis x needs a qubit on Alice's side".into())),
            };
            (joint, alice, None)
        }
    };
    let ensemble = steer(&joint, &alice)?;
    let members = ensemble
        .members()
        .iter()
        .map(|(w, s)| {
            Ok(SteerMember {
                weight: *w,
                tau: mixed_tau(s, phi)?,
                state: s.clone(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let target_distance = match &target {
        None => None,
        Some(t) => Some(ensemble_distance(t, &ensemble)?),
    };
    let marginal_residual = match target {
        None => None,
        Some(_) => Some(verify_no_signaling_marginal(
            &joint,
            &alice,
            &Measurement::trivial(joint.model(Side::A)),
        )?),
    };
    let probability = match &rule {
        None => None,
        Some(r) => Some(gpt_steering::predict_ensemble(r, &ensemble, phi)?),
    };
    let output = SteerOutput {
        outcomes: alice.len(),
        members,
        bob_marginal: marginal(&joint, Side::B)?,
        marginal_residual,
        target_distance,
        rule: rule.map(|r| r.spec().clone()),
        probability,
    };
    let mut sink = Sink::new(out);
    match out.format {
        Format::Pretty => {
            sink.line(format!("outcomes: {}", output.outcomes))?;
            for (i, m) in output.members.iter().enumerate() {
                sink.line(format!("member {i}: weight = {}  tau = {}", m.weight, m.tau))?;
            }
            if let Some(d) = output.target_distance {
                sink.line(format!("distance to target: {d:e}"))?;
            }
            if let Some(r) = output.marginal_residual {
                sink.line(format!("marginal residual: {r:e}"))?;
            }
            if let Some(p) = output.probability {
                sink.line(format!("P(accept phi) = {p}"))?;
            }
        }
        _ => sink.json(&output)?,
    }
    sink.finish()?;
    Ok(Verdict::Pass)
}

/// Largest weight or state deviation between `target` and the steered
/// ensemble, members matched in order.
fn ensemble_distance(target: &Ensemble, got: &Ensemble) -> CliResult<f64> {
    if target.len() != got.len() {
        return Ok(f64::INFINITY);
    }
    let mut worst: f64 = 0.0;
    for ((wa, sa), (wb, sb)) in target.members().iter().zip(got.members()) {
        worst = worst.max((wa - wb).abs()).max(sa.distance(sb)?);
    }
    Ok(worst)
}

#[derive(Serialize)]
struct GapOutput<'a> {
    seed: u64,
    report: &'a gpt_steering::SignalingReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    detection: Option<DetectionStats>,
}

fn cmd_gap(scenario: &Scenario, samples: Option<u64>, out: &OutputArgs) -> CliResult<Verdict> {
    no_csv(out.format, "gap")?;
    let report = run_scenario(scenario)?;
    let detection = match samples {
        None => None,
        Some(n) => Some(simulate_detection(&report, n, scenario.seed)?),
    };
    let mut sink = Sink::new(out);
    match out.format {
        Format::Pretty => {
            sink.line(format!("# seed: {}", scenario.seed))?;
            sink.line(format!("rule: {}", scenario.rule.label()))?;
            sink.line(format!(
                "p1 = {}  p2 = {}  lambda = {}  p_bar = {}",
                report.p1, report.p2, report.lambda, report.p_bar
            ))?;
            sink.line(format!("P1  = {}", report.prob_protocol1))?;
            sink.line(format!("P2  = {}", report.prob_protocol2))?;
            sink.line(format!("gap = {}", report.gap))?;
            sink.line(format!("marginal residual = {:e}", report.marginal_residual))?;
            if let Some(d) = &detection {
                sink.line(format!(
                    "simulated {} runs: estimated gap = {}  sigma = {}  z = {}",
                    d.runs, d.estimated_gap, d.sigma, d.z_score
                ))?;
            }
        }
        _ => sink.json(&GapOutput {
            seed: scenario.seed,
            report: &report,
            detection,
        })?,
    }
    sink.finish()?;
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct ScanOutput {
    seed: u64,
    rule: RuleSpec,
    rows: usize,
    max_abs_gap: f64,
    search: SearchOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<AffinityCertificate>,
    pass: bool,
}

fn write_sweep<W: Write>(w: W, rows: &[SweepRow]) -> CliResult<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["p1", "p2", "lambda", "P1", "P2", "gap"])?;
    for r in rows {
        wtr.write_record([
            fmt_f(r.p1),
            fmt_f(r.p2),
            fmt_f(r.lambda),
            fmt_f(r.prob_protocol1),
            fmt_f(r.prob_protocol2),
            fmt_f(r.gap),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan(
    rule: &ProbabilityRule,
    grid: usize,
    refine: usize,
    seed: u64,
    tol: Option<f64>,
    samples: Option<usize>,
    full: bool,
    csv_path: Option<PathBuf>,
    out: &OutputArgs,
) -> CliResult<Verdict> {
    if grid < 3 {
        return Err(CliError::Usage("--grid must be at least 3".into()));
    }
    let rows = sweep(rule, grid, !full)?;
    let search = max_gap_search(rule, grid, refine, seed)?;
    let certificate = match samples {
        None => None,
        Some(n) => Some(affinity_certificate(rule, n, tol.unwrap_or(1e-10), seed)?),
    };
    let max_abs_gap = search.refined.gap.abs();
    let pass = tol.is_none_or(|t| max_abs_gap <= t) && certificate.as_ref().is_none_or(|c| c.pass);
    let summary = ScanOutput {
        seed,
        rule: rule.spec().clone(),
        rows: rows.len(),
        max_abs_gap,
        search,
        certificate,
        pass,
    };
    if let Some(path) = &csv_path {
        let file = fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        write_sweep(io::BufWriter::new(file), &rows)?;
    }
    let mut sink = Sink::new(out);
    match out.format {
        Format::Csv => {
            write_sweep(&mut sink.buf, &rows)?;
            let w = &summary.search.refined;
            eprintln!(
                "# seed: {seed}  max |gap| = {}  at p1 = {} p2 = {} lambda = {}",
                fmt_f(max_abs_gap),
                fmt_f(w.p1),
                fmt_f(w.p2),
                fmt_f(w.lambda)
            );
        }
        Format::Pretty => {
            let w = &summary.search.refined;
            sink.line(format!("# seed: {seed}"))?;
            sink.line(format!("rule: {}", rule.label()))?;
            sink.line(format!("grid: {grid}  refine steps: {refine}  rows: {}", summary.rows))?;
            sink.line(format!("max |gap| = {}", max_abs_gap))?;
            sink.line(format!("witness: p1 = {}  p2 = {}  lambda = {}", w.p1, w.p2, w.lambda))?;
            sink.line(format!(
                "replayed: P1 = {}  P2 = {}  gap = {}",
                summary.search.report.prob_protocol1, summary.search.report.prob_protocol2, summary.search.report.gap
            ))?;
            if let Some(c) = &summary.certificate {
                sink.line(format!(
                    "certificate: {} samples, max |gap| = {:e}, {}",
                    c.samples,
                    c.max_abs_gap,
                    if c.pass { "PASS" } else { "FAIL" }
                ))?;
            }
        }
        Format::Json => sink.json(&summary)?,
    }
    sink.finish()?;
    Ok(Verdict::from_bool(pass))
}

fn cmd_reproduce_paper(tol: Option<f64>, out: &OutputArgs) -> CliResult<Verdict> {
    if let Some(t) = tol {
        if t.is_nan() || t < 0.0 {
            return Err(CliError::Usage(format!("--tol must be non-negative, got {t}")));
        }
    }
    let table = reproduce_paper(tol)?;
    let mut sink = Sink::new(out);
    match out.format {
        Format::Json => sink.json(&table)?,
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(&mut sink.buf);
            wtr.write_record(["name", "quoted", "exact", "computed", "tol", "pass"])?;
            for r in &table.rows {
                wtr.write_record([
                    r.name.to_string(),
                    fmt_f(r.quoted),
                    fmt_f(r.exact),
                    fmt_f(r.computed),
                    fmt_f(r.tol),
                    r.pass.to_string(),
                ])?;
            }
            wtr.flush()?;
        }
        Format::Pretty => {
            sink.line(format!(
                "{:<14} {:>8} {:>20} {:>20} {:>8}  result",
                "row", "quoted", "exact", "computed", "tol"
            ))?;
            for r in &table.rows {
                sink.line(format!(
                    "{:<14} {:>8.3} {:>20.15} {:>20.15} {:>8.0e}  {}",
                    r.name,
                    r.quoted,
                    r.exact,
                    r.computed,
                    r.tol,
                    if r.pass { "PASS" } else { "FAIL" }
                ))?;
            }
        }
    }
    sink.finish()?;
    Ok(Verdict::from_bool(table.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
