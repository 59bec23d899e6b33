//! Subcommand implementations. Each returns a [`RunReport`]; printing and
//! exit codes are left to the binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use condensing::domains::{apply_closure, parse_named_domain, AbstractDomain, ParsedDomain};
use condensing::lattice_core::{Ambient, FiniteLattice};
use condensing::lp_semantics::{
    abstract_eval, check_condensing, concrete_eval, ContextScope, DomainTable, EvalConfig, Program,
};
use condensing::quantale::{verify_linear_laws, verify_quantale, ExplicitQuantale, LawReport, Quantale, SampleConfig};
use condensing::shells::{complete_shell, weak_complete_shell, ShellResult, DEFAULT_ITERATION_CAP};
use condensing::subst::{enumerate_carrier, CarrierConfig, SubCarrier, SubstSet, DEFAULT_MAX_CARRIER};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::report::{LawRow, RunReport, Status};
use crate::scenarios;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: {source}")]
    Input { path: String, source: condensing::Error },

    #[error("{0}")]
    Lib(#[from] condensing::Error),

    #[error("{what}: {source}; {hint}")]
    Refused { what: String, source: condensing::Error, hint: String },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// The global knobs shared by every subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Settings {
    pub seed: u64,
    pub max_carrier: usize,
    pub iteration_cap: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { seed: 0, max_carrier: DEFAULT_MAX_CARRIER, iteration_cap: DEFAULT_ITERATION_CAP }
    }
}

impl Settings {
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig { iteration_cap: self.iteration_cap, ..EvalConfig::default() }
    }

    fn sample_config(&self) -> SampleConfig {
        SampleConfig { seed: self.seed, ..SampleConfig::default() }
    }
}

/// Where the ambient quantale comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AmbientSpec {
    /// a substitution carrier; `None` is the built-in X, Y / Z, W / a alphabet
    Carrier(Option<PathBuf>),
    Quantale(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomainSpec {
    /// the text of a `fixpoints:` line
    Inline(String),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShellMode {
    Complete,
    Weak,
}

// ----- inputs and digests -----

/// Reads input files and hashes everything that determines the result.
pub(crate) struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    pub(crate) fn new(command: &str) -> Self {
        let mut i = Inputs { hasher: Sha256::new() };
        i.text("command", command);
        i
    }

    pub(crate) fn text(&mut self, label: &str, s: &str) {
        for part in [label.as_bytes(), s.as_bytes()] {
            self.hasher.update((part.len() as u64).to_le_bytes());
            self.hasher.update(part);
        }
    }

    fn read(&mut self, path: &Path) -> CliResult<String> {
        let text =
            fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        self.text("file", &text);
        Ok(text)
    }

    pub(crate) fn finish(self) -> String {
        self.hasher.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

fn at<T>(path: &Path, r: condensing::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Input { path: path.display().to_string(), source })
}

fn quote(s: &str) -> String {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "._-/(),+&".contains(c)) {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', "'\\''"))
    }
}

fn shown(p: &Path) -> String {
    quote(&p.display().to_string())
}

// ----- ambients -----

/// Element syntax and naming for the ambients the CLI can load.
pub(crate) trait Surface: Quantale {
    fn parse_elems(&self, text: &str) -> condensing::Result<Vec<Self::Elem>>;
    fn parse_dom(&self, text: &str) -> condensing::Result<ParsedDomain<Self::Elem>>;
    /// A name that `parse_elems` reads back as the same element.
    fn describe(&self, e: &Self::Elem) -> String;
}

impl Surface for SubCarrier {
    fn parse_elems(&self, text: &str) -> condensing::Result<Vec<SubstSet>> {
        self.parse_set_list(text)
    }
    fn parse_dom(&self, text: &str) -> condensing::Result<ParsedDomain<SubstSet>> {
        self.parse_domain(text)
    }
    fn describe(&self, e: &SubstSet) -> String {
        self.describe_set(e)
    }
}

impl Surface for ExplicitQuantale {
    fn parse_elems(&self, text: &str) -> condensing::Result<Vec<usize>> {
        let base = text.as_ptr() as usize;
        text.split_whitespace()
            .map(|tok| {
                self.lattice().index_of(tok).map_err(|_| condensing::Error::Parse {
                    line: 1,
                    col: tok.as_ptr() as usize - base + 1,
                    msg: format!("undeclared element `{tok}`"),
                })
            })
            .collect()
    }
    fn parse_dom(&self, text: &str) -> condensing::Result<ParsedDomain<usize>> {
        parse_named_domain(self, self.lattice().names(), text)
    }
    fn describe(&self, e: &usize) -> String {
        Ambient::render(self, e)
    }
}

const FIXPOINTS_PREFIX: &str = "fixpoints: ";

fn unshift(e: condensing::Error, by: usize) -> condensing::Error {
    match e {
        condensing::Error::Parse { line: 1, col, msg } => {
            condensing::Error::Parse { line: 1, col: col.saturating_sub(by).max(1), msg }
        }
        other => other,
    }
}

/// One element given on the command line.
fn parse_one<Q: Surface>(q: &Q, what: &str, text: &str) -> CliResult<Q::Elem> {
    let xs = q.parse_elems(text).map_err(|e| CliError::Usage(format!("{what}: {e}")))?;
    match <[Q::Elem; 1]>::try_from(xs) {
        Ok([x]) => Ok(x),
        Err(xs) => Err(CliError::Usage(format!("{what}: expected one element, got {}", xs.len()))),
    }
}

fn load_domain<Q: Surface>(q: &Q, spec: &DomainSpec, inputs: &mut Inputs) -> CliResult<ParsedDomain<Q::Elem>> {
    match spec {
        DomainSpec::Inline(text) => {
            inputs.text("domain", text);
            q.parse_dom(&format!("{FIXPOINTS_PREFIX}{text}"))
                .map_err(|e| CliError::Usage(format!("--domain: {}", unshift(e, FIXPOINTS_PREFIX.len()))))
        }
        DomainSpec::File(path) => {
            let text = inputs.read(path)?;
            at(path, q.parse_dom(&text))
        }
    }
}

/// `fixpoints: a b c`, re-readable as a domain file.
pub(crate) fn render_fixpoints<Q: Surface>(q: &Q, d: &AbstractDomain<Q::Elem>) -> String {
    let parts: Vec<String> = d.fixpoints().iter().map(|x| q.describe(x)).collect();
    format!("{FIXPOINTS_PREFIX}{}", parts.join(" "))
}

pub(crate) fn load_carrier(
    path: Option<&Path>,
    settings: &Settings,
    inputs: &mut Inputs,
) -> CliResult<Arc<SubCarrier>> {
    let mut cfg = match path {
        Some(p) => {
            let text = inputs.read(p)?;
            at(p, CarrierConfig::parse(&text))?
        }
        None => CarrierConfig::default(),
    };
    cfg.max_members = settings.max_carrier;
    inputs.text("max-carrier", &settings.max_carrier.to_string());
    match path {
        Some(p) => at(p, enumerate_carrier(cfg)),
        None => Ok(enumerate_carrier(cfg)?),
    }
}

fn ambient_echo(spec: &AmbientSpec) -> String {
    match spec {
        AmbientSpec::Carrier(None) => String::new(),
        AmbientSpec::Carrier(Some(p)) => format!(" --carrier {}", shown(p)),
        AmbientSpec::Quantale(p) => format!(" --quantale {}", shown(p)),
    }
}

fn domain_echo(spec: &DomainSpec) -> String {
    match spec {
        DomainSpec::Inline(t) => format!(" --domain {}", quote(t)),
        DomainSpec::File(p) => format!(" --domain-file {}", shown(p)),
    }
}

// ----- verify -----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FileKind {
    Lattice,
    Quantale,
    Carrier,
}

fn detect_kind(text: &str) -> FileKind {
    let keys: Vec<&str> = text
        .lines()
        .filter_map(|l| l.split('#').next().and_then(|l| l.split_once(':')).map(|(k, _)| k.trim()))
        .collect();
    if keys.iter().any(|k| matches!(*k, "vars_of_interest" | "aux_vars" | "constants")) {
        FileKind::Carrier
    } else if keys.iter().any(|k| matches!(*k, "tensor" | "tensor-builtin" | "unit")) {
        FileKind::Quantale
    } else {
        FileKind::Lattice
    }
}

fn law_rows<Q: Surface>(q: &Q, scope: &str, r: &LawReport<Q::Elem>) -> Vec<LawRow> {
    r.checked
        .iter()
        .map(|&(law, checked)| {
            let witness = r.violations.iter().find(|v| v.law == law).map(|v| {
                if v.witness.is_empty() {
                    "none declared".to_string()
                } else {
                    v.witness.iter().map(|x| q.describe(x)).collect::<Vec<_>>().join(", ")
                }
            });
            LawRow { scope: scope.to_string(), law: law.to_string(), checked, exhaustive: r.exhaustive, witness }
        })
        .collect()
}

fn lattice_rows(l: &FiniteLattice, scope: &str) -> Vec<LawRow> {
    let n = l.len();
    let row = |law: &str, checked: usize, witness: Option<String>| LawRow {
        scope: scope.to_string(),
        law: law.to_string(),
        checked,
        exhaustive: true,
        witness,
    };
    let names = |xs: &[usize]| xs.iter().map(|&x| l.name(x)).collect::<Vec<_>>().join(", ");
    let pairs = || (0..n).flat_map(move |a| (0..n).map(move |b| (a, b)));
    let triples = || pairs().flat_map(move |(a, b)| (0..n).map(move |c| (a, b, c)));
    vec![
        row("bounds", n, (0..n).find(|&a| !(l.leq(l.bottom(), a) && l.leq(a, l.top()))).map(|a| names(&[a]))),
        row(
            "absorption",
            n * n,
            pairs()
                .find(|&(a, b)| l.meet(a, l.join(a, b)) != a || l.join(a, l.meet(a, b)) != a)
                .map(|(a, b)| names(&[a, b])),
        ),
        row(
            "meet/join commutativity",
            n * n,
            pairs()
                .find(|&(a, b)| l.meet(a, b) != l.meet(b, a) || l.join(a, b) != l.join(b, a))
                .map(|(a, b)| names(&[a, b])),
        ),
        row(
            "meet/join associativity",
            n * n * n,
            triples()
                .find(|&(a, b, c)| {
                    l.meet(l.meet(a, b), c) != l.meet(a, l.meet(b, c))
                        || l.join(l.join(a, b), c) != l.join(a, l.join(b, c))
                })
                .map(|(a, b, c)| names(&[a, b, c])),
        ),
        row(
            "order agrees with meet",
            n * n,
            pairs().find(|&(a, b)| l.leq(a, b) != (l.meet(a, b) == a)).map(|(a, b)| names(&[a, b])),
        ),
    ]
}

fn is_distributive(l: &FiniteLattice) -> bool {
    let n = l.len();
    (0..n).all(|a| (0..n).all(|b| (0..n).all(|c| l.meet(a, l.join(b, c)) == l.join(l.meet(a, b), l.meet(a, c)))))
}

fn quantale_laws<Q: Surface>(q: &Q, scope: &str, cfg: &SampleConfig, key: &str, report: &mut RunReport) {
    let base = verify_quantale(q, cfg);
    report.laws.extend(law_rows(q, scope, &base));
    report.require(base.passed());
    if base.passed() {
        let lin = verify_linear_laws(q, cfg);
        report.laws.extend(law_rows(q, scope, &lin));
        report.require(lin.passed());
    } else {
        report.put(format!("{key}.linear_laws"), "skipped: quantale laws fail");
    }
}

/// Checks every file: lattice laws for a bare lattice, quantale and linear
/// implication laws for a quantale (exhaustive) or a substitution carrier
/// (seeded sample).
pub fn verify(paths: &[PathBuf], settings: &Settings) -> CliResult<RunReport> {
    if paths.is_empty() {
        return Err(CliError::Usage("verify: no input files".into()));
    }
    let command = format!("verify {}", paths.iter().map(|p| shown(p)).collect::<Vec<_>>().join(" "));
    let mut inputs = Inputs::new(&command);
    inputs.text("seed", &settings.seed.to_string());
    let mut loaded = Vec::new();
    for p in paths {
        let text = inputs.read(p)?;
        loaded.push((p, detect_kind(&text), text));
    }
    let mut report = RunReport::new(command, String::new());
    for (i, (path, kind, text)) in loaded.iter().enumerate() {
        let scope = path.display().to_string();
        let key = format!("file.{i}");
        report.put(format!("{key}.path"), scope.clone());
        match kind {
            FileKind::Lattice => {
                let l = at(path, FiniteLattice::parse(text))?;
                report.put(format!("{key}.kind"), "lattice");
                report.put(format!("{key}.elements"), l.len().to_string());
                report.put(format!("{key}.distributive"), if is_distributive(&l) { "yes" } else { "no" });
                let rows = lattice_rows(&l, &scope);
                report.require(rows.iter().all(|r| r.witness.is_none()));
                report.laws.extend(rows);
            }
            FileKind::Quantale => {
                let q = at(path, ExplicitQuantale::parse(text))?;
                report.put(format!("{key}.kind"), "quantale");
                report.put(format!("{key}.elements"), q.len().to_string());
                report.put(format!("{key}.unit"), q.unit().map_or_else(|| "none".to_string(), |u| q.describe(&u)));
                quantale_laws(&q, &scope, &settings.sample_config(), &key, &mut report);
            }
            FileKind::Carrier => {
                let mut cfg = at(path, CarrierConfig::parse(text))?;
                cfg.max_members = settings.max_carrier;
                let c = at(path, enumerate_carrier(cfg))?;
                report.put(format!("{key}.kind"), "substitution quantale");
                report.put(format!("{key}.members"), c.len().to_string());
                report.put(format!("{key}.seed"), settings.seed.to_string());
                quantale_laws(&*c, &scope, &settings.sample_config(), &key, &mut report);
            }
        }
    }
    report.inputs_digest = inputs.finish();
    Ok(report)
}

// ----- shell -----

fn shell_on<Q: Surface>(
    q: &Q,
    domain: &DomainSpec,
    mode: ShellMode,
    settings: &Settings,
    inputs: &mut Inputs,
    report: &mut RunReport,
) -> CliResult<()> {
    let parsed = load_domain(q, domain, inputs)?;
    report.warnings.extend(parsed.warnings);
    let a = parsed.domain;
    report.put("input", render_fixpoints(q, &a));
    let res: ShellResult<Q::Elem> = match mode {
        ShellMode::Complete => complete_shell(q, &a).map_err(|e| match e {
            condensing::Error::SizeLimit { .. } => CliError::Refused {
                what: "complete shell".into(),
                source: e,
                hint: "it quantifies over every element of the ambient, which cannot be enumerated here; \
                       use --mode weak or an explicit --quantale"
                    .into(),
            },
            e => CliError::Lib(e),
        })?,
        ShellMode::Weak => weak_complete_shell(q, &a, settings.iteration_cap)?,
    };
    report.put("mode", if mode == ShellMode::Complete { "complete" } else { "weak" });
    report.put("shell", render_fixpoints(q, &res.domain));
    report.put("fixpoints", res.domain.len().to_string());
    for (i, x) in res.domain.fixpoints().iter().enumerate() {
        report.put(format!("fixpoint.{i}"), q.describe(x));
    }
    report.put("iterations", res.iterations.to_string());
    report.put("stabilized_at", res.stabilized_at.to_string());
    Ok(())
}

/// The complete or weak-complete shell of a domain.
pub fn shell(ambient: &AmbientSpec, domain: &DomainSpec, mode: ShellMode, settings: &Settings) -> CliResult<RunReport> {
    let m = if mode == ShellMode::Complete { "complete" } else { "weak" };
    let command = format!("shell{}{} --mode {m}", ambient_echo(ambient), domain_echo(domain));
    let mut inputs = Inputs::new(&command);
    let mut report = RunReport::new(command, String::new());
    match ambient {
        AmbientSpec::Carrier(path) => {
            let c = load_carrier(path.as_deref(), settings, &mut inputs)?;
            shell_on(&*c, domain, mode, settings, &mut inputs, &mut report)?;
        }
        AmbientSpec::Quantale(path) => {
            let text = inputs.read(path)?;
            let q = at(path, ExplicitQuantale::parse(&text))?;
            shell_on(&q, domain, mode, settings, &mut inputs, &mut report)?;
        }
    }
    report.inputs_digest = inputs.finish();
    Ok(report)
}

// ----- residual -----

fn residual_on<Q: Surface>(q: &Q, a: &str, c: &str, report: &mut RunReport) -> CliResult<()> {
    let x = parse_one(q, "A", a)?;
    let y = parse_one(q, "C", c)?;
    let r = condensing::quantale::residual(q, &x, &y)?;
    report.put("a", q.describe(&x));
    report.put("c", q.describe(&y));
    report.put("residual", q.describe(&r));
    Ok(())
}

/// a ⊸ c.
pub fn residual(ambient: &AmbientSpec, a: &str, c: &str, settings: &Settings) -> CliResult<RunReport> {
    let command = format!("residual{} {} {}", ambient_echo(ambient), quote(a), quote(c));
    let mut inputs = Inputs::new(&command);
    let mut report = RunReport::new(command, String::new());
    match ambient {
        AmbientSpec::Carrier(path) => {
            let q = load_carrier(path.as_deref(), settings, &mut inputs)?;
            residual_on(&*q, a, c, &mut report)?;
        }
        AmbientSpec::Quantale(path) => {
            let text = inputs.read(path)?;
            let q = at(path, ExplicitQuantale::parse(&text))?;
            residual_on(&q, a, c, &mut report)?;
        }
    }
    report.inputs_digest = inputs.finish();
    Ok(report)
}

// ----- programs -----

fn load_program(path: &Path, carrier: &Arc<SubCarrier>, inputs: &mut Inputs) -> CliResult<Program> {
    let text = inputs.read(path)?;
    at(path, Program::parse(carrier, &text))
}

fn require_goal(program: &Program, goal: &str) -> CliResult<()> {
    if program.clause(goal).is_none() {
        return Err(CliError::Usage(format!("goal `{goal}` is not declared by the program")));
    }
    Ok(())
}

/// Checks whether a domain is condensing for a program's goal; with
/// `refine`, also checks its weak-complete shell and both sides at the
/// original witness.
pub fn condense(
    program: &Path,
    carrier: Option<&Path>,
    domain: &DomainSpec,
    goal: &str,
    refine: bool,
    settings: &Settings,
) -> CliResult<RunReport> {
    let command = format!(
        "condense --program {}{}{} --goal {}{}",
        shown(program),
        ambient_echo(&AmbientSpec::Carrier(carrier.map(Path::to_path_buf))),
        domain_echo(domain),
        quote(goal),
        if refine { " --refine" } else { "" }
    );
    let mut inputs = Inputs::new(&command);
    inputs.text("iteration-cap", &settings.iteration_cap.to_string());
    let c = load_carrier(carrier, settings, &mut inputs)?;
    let p = load_program(program, &c, &mut inputs)?;
    require_goal(&p, goal)?;
    let parsed = load_domain(&*c, domain, &mut inputs)?;
    let rho = parsed.domain;
    let cfg = settings.eval_config();

    let mut report = RunReport::new(command, inputs.finish());
    report.warnings.extend(parsed.warnings);
    report.put("program", p.render());
    report.put("goal", goal);
    report.put("domain", render_fixpoints(&*c, &rho));
    let v = check_condensing(&p, &rho, goal, &cfg)?;
    report.put("condensing", yes_no(v.holds));
    put_idempotent_verdict(&mut report, "condensing", &c, &p, &rho, goal, &cfg, v.holds)?;
    if let Some(w) = &v.witness {
        report.put("witness.theta", c.describe_set(&w.theta));
        report.put("witness.phi", c.describe_set(&w.phi));
        report.put("witness.lhs", c.describe_set(&w.lhs));
        report.put("witness.rhs", c.describe_set(&w.rhs));
    }
    if !refine {
        report.require(v.holds);
        return Ok(report);
    }
    let shell = weak_complete_shell(&*c, &rho, settings.iteration_cap)?.domain;
    let v2 = check_condensing(&p, &shell, goal, &cfg)?;
    report.put("refined.domain", render_fixpoints(&*c, &shell));
    report.put("refined.condensing", yes_no(v2.holds));
    put_idempotent_verdict(&mut report, "refined.condensing", &c, &p, &shell, goal, &cfg, v2.holds)?;
    if let Some(w) = &v2.witness {
        report.put("refined.witness.theta", c.describe_set(&w.theta));
        report.put("refined.witness.phi", c.describe_set(&w.phi));
        report.put("refined.witness.lhs", c.describe_set(&w.lhs));
        report.put("refined.witness.rhs", c.describe_set(&w.rhs));
    }
    if let Some(w) = &v.witness {
        let (lhs, rhs) = sides(&c, &p, &shell, goal, &w.theta, &w.phi, &cfg)?;
        report.put("refined.at_witness.lhs", c.describe_set(&lhs));
        report.put("refined.at_witness.rhs", c.describe_set(&rhs));
    }
    report.require(v2.holds);
    Ok(report)
}

// On a failure, whether the identity still holds at every context Θ that
// absorbs a second copy of itself; conjunction duplicates the context.
#[allow(clippy::too_many_arguments)]
fn put_idempotent_verdict(
    report: &mut RunReport,
    key: &str,
    c: &Arc<SubCarrier>,
    p: &Program,
    rho: &AbstractDomain<SubstSet>,
    goal: &str,
    cfg: &EvalConfig,
    holds: bool,
) -> CliResult<()> {
    if !holds {
        let v = DomainTable::new(c, rho)?.check_in(p, goal, cfg, ContextScope::Idempotent)?;
        report.put(format!("{key}.idempotent_contexts"), yes_no(v.holds));
    }
    Ok(())
}

/// F(ρ(Θ ⊗ Φ)) and ρ(Θ ⊗ F(ρΦ)) for the abstract semantics F over ρ.
pub fn sides(
    c: &Arc<SubCarrier>,
    p: &Program,
    rho: &AbstractDomain<SubstSet>,
    goal: &str,
    theta: &SubstSet,
    phi: &SubstSet,
    cfg: &EvalConfig,
) -> condensing::Result<(SubstSet, SubstSet)> {
    let close = |x: &SubstSet| apply_closure(&**c, rho, x);
    let lhs = abstract_eval(p, rho, goal, &close(&c.tensor_sets(theta, phi)?)?, cfg)?;
    let f_phi = abstract_eval(p, rho, goal, &close(phi)?, cfg)?;
    let rhs = close(&c.tensor_sets(theta, &f_phi)?)?;
    Ok((lhs, rhs))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Concrete evaluation of a goal on an input set, or abstract evaluation
/// when a domain is given (the input is closed first).
pub fn eval(
    program: &Path,
    carrier: Option<&Path>,
    goal: &str,
    input: &str,
    domain: Option<&DomainSpec>,
    settings: &Settings,
) -> CliResult<RunReport> {
    let command = format!(
        "eval --program {}{} --goal {} --input {}{}",
        shown(program),
        ambient_echo(&AmbientSpec::Carrier(carrier.map(Path::to_path_buf))),
        quote(goal),
        quote(input),
        domain.map(domain_echo).unwrap_or_default()
    );
    let mut inputs = Inputs::new(&command);
    inputs.text("iteration-cap", &settings.iteration_cap.to_string());
    let c = load_carrier(carrier, settings, &mut inputs)?;
    let p = load_program(program, &c, &mut inputs)?;
    require_goal(&p, goal)?;
    let phi = parse_one(&*c, "--input", input)?;
    let cfg = settings.eval_config();
    let mut report = RunReport::new(command, String::new());
    report.put("goal", goal);
    report.put("input", c.describe_set(&phi));
    match domain {
        None => {
            report.put("mode", "concrete");
            report.put("result", c.describe_set(&concrete_eval(&p, goal, &phi, &cfg)?));
        }
        Some(d) => {
            let parsed = load_domain(&*c, d, &mut inputs)?;
            report.warnings.extend(parsed.warnings);
            let rho = parsed.domain;
            let theta = apply_closure(&*c, &rho, &phi)?;
            report.put("mode", "abstract");
            report.put("domain", render_fixpoints(&*c, &rho));
            report.put("input.closed", c.describe_set(&theta));
            report.put("result", c.describe_set(&abstract_eval(&p, &rho, goal, &theta, &cfg)?));
        }
    }
    report.inputs_digest = inputs.finish();
    Ok(report)
}

/// Runs a built-in worked scenario.
pub fn example(name: &str, settings: &Settings) -> CliResult<RunReport> {
    let command = format!("example {}", quote(name));
    let mut inputs = Inputs::new(&command);
    inputs.text("max-carrier", &settings.max_carrier.to_string());
    inputs.text("iteration-cap", &settings.iteration_cap.to_string());
    let checks = scenarios::run(name, settings)?;
    let mut report = RunReport::new(command, inputs.finish());
    for (i, ch) in checks.iter().enumerate() {
        report.put(format!("check.{i}.label"), ch.label.clone());
        report.put(format!("check.{i}.expected"), ch.expected.clone());
        report.put(format!("check.{i}.actual"), ch.actual.clone());
        report.put(format!("check.{i}.ok"), yes_no(ch.ok()));
        report.require(ch.ok());
    }
    if report.status == Status::Pass {
        report.put("summary", format!("all {} checks hold", checks.len()));
    } else {
        let bad = checks.iter().filter(|c| !c.ok()).count();
        report.put("summary", format!("{bad} of {} checks fail", checks.len()));
    }
    Ok(report)
}
