//! The core logic language: programs, concrete and abstract forward
//! semantics, and the condensing check.
//!
//! A program has at most one clause per predicate. Bodies are built from
//! fact sets, ⊗-conjunction, Σ-disjunction and calls. The call context Φ is
//! passed unchanged to every sub-body; calls are tabled by (predicate,
//! arguments) and solved as a least fixpoint.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::domains::{closure_unchecked, AbstractDomain};
use crate::error::{Error, Result};
use crate::par::*;
use crate::shells::DEFAULT_ITERATION_CAP;
use crate::subst::{SubCarrier, SubstSet};
use crate::syntax::{lex, Cursor, Tok};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    Fact(SubstSet),
    Conj(Box<Body>, Box<Body>),
    Disj(Vec<Body>),
    Call { pred: String, args: Vec<usize> },
}

impl Body {
    pub fn conj(a: Body, b: Body) -> Body {
        Body::Conj(Box::new(a), Box::new(b))
    }

    pub fn has_conj(&self) -> bool {
        match self {
            Body::Conj(..) => true,
            Body::Disj(cs) => cs.iter().any(Body::has_conj),
            Body::Fact(_) | Body::Call { .. } => false,
        }
    }

    fn visit_calls<'b>(&'b self, f: &mut impl FnMut(&'b str, &'b [usize])) {
        match self {
            Body::Fact(_) => {}
            Body::Conj(a, b) => {
                a.visit_calls(f);
                b.visit_calls(f);
            }
            Body::Disj(cs) => cs.iter().for_each(|c| c.visit_calls(f)),
            Body::Call { pred, args } => f(pred, args),
        }
    }

    /// Variables mentioned by facts or call arguments.
    fn mark_vars(&self, carrier: &SubCarrier, out: &mut [bool]) {
        match self {
            Body::Fact(s) => {
                for (slot, used) in out.iter_mut().zip(carrier.support(s)) {
                    *slot |= used;
                }
            }
            Body::Conj(a, b) => {
                a.mark_vars(carrier, out);
                b.mark_vars(carrier, out);
            }
            Body::Disj(cs) => cs.iter().for_each(|c| c.mark_vars(carrier, out)),
            Body::Call { args, .. } => args.iter().for_each(|&v| out[v] = true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub head: Vec<usize>,
    pub body: Body,
}

#[derive(Debug, Clone)]
pub struct Program {
    carrier: Arc<SubCarrier>,
    clauses: BTreeMap<String, Clause>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.carrier.id() == other.carrier.id() && self.clauses == other.clauses
    }
}

impl Eq for Program {}

const RESERVED: [&str; 6] = ["TOP", "EMPTY", "EG", "I", "G", "eps"];

impl Program {
    /// Validates and assembles a program.
    pub fn new(carrier: Arc<SubCarrier>, clauses: Vec<(String, Clause)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (name, clause) in clauses {
            check_head(&carrier, &name, &clause.head)?;
            check_facts(&carrier, &clause.body)?;
            if map.insert(name.clone(), clause).is_some() {
                return Err(Error::DuplicateClause(name));
            }
        }
        let p = Program { carrier, clauses: map };
        p.check_calls()?;
        Ok(p)
    }

    pub fn parse(carrier: &Arc<SubCarrier>, text: &str) -> Result<Self> {
        parse_program(carrier, text)
    }

    pub fn carrier(&self) -> &Arc<SubCarrier> {
        &self.carrier
    }

    pub fn clause(&self, pred: &str) -> Option<&Clause> {
        self.clauses.get(pred)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &str> {
        self.clauses.keys().map(String::as_str)
    }

    /// Some clause body contains a conjunction.
    pub fn has_conj(&self) -> bool {
        self.clauses.values().any(|c| c.body.has_conj())
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    fn check_calls(&self) -> Result<()> {
        let mut err = None;
        for clause in self.clauses.values() {
            clause.body.visit_calls(&mut |pred, args| {
                if err.is_some() {
                    return;
                }
                match self.clauses.get(pred) {
                    None => err = Some(Error::UndeclaredCall(pred.to_string())),
                    Some(c) if c.head.len() != args.len() => {
                        err = Some(Error::ArityMismatch {
                            pred: pred.to_string(),
                            expected: c.head.len(),
                            got: args.len(),
                        })
                    }
                    Some(_) => {}
                }
            });
        }
        err.map_or(Ok(()), Err)
    }

    /// One clause per line in the input syntax; parses back to an equal
    /// program.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, clause) in &self.clauses {
            let _ =
                writeln!(out, "{}{} <- {}.", name, self.render_args(&clause.head), self.render_body(&clause.body, 0));
        }
        out
    }

    fn render_args(&self, vars: &[usize]) -> String {
        if vars.is_empty() {
            return String::new();
        }
        let names: Vec<&str> = vars.iter().map(|&v| self.carrier.var_name(v)).collect();
        format!("({})", names.join(","))
    }

    // prec: 0 = top level, 1 = operand of '+', 2 = operand of '*'
    fn render_body(&self, b: &Body, prec: u8) -> String {
        match b {
            Body::Fact(s) => render_fact(&self.carrier, s),
            Body::Call { pred, args } => format!("{pred}{}", self.render_args(args)),
            Body::Conj(l, r) => {
                // left-associative: a right operand that is itself a
                // conjunction needs parentheses
                let rs = match **r {
                    Body::Conj(..) => format!("({})", self.render_body(r, 0)),
                    _ => self.render_body(r, 2),
                };
                let s = format!("{} * {}", self.render_body(l, 2), rs);
                if prec > 2 {
                    format!("({s})")
                } else {
                    s
                }
            }
            Body::Disj(cs) if cs.len() == 1 => format!("({})", self.render_body(&cs[0], 0)),
            Body::Disj(cs) => {
                let parts: Vec<String> = cs.iter().map(|c| self.render_body(c, 1)).collect();
                let s = parts.join(" + ");
                if prec >= 1 {
                    format!("({s})")
                } else {
                    s
                }
            }
        }
    }
}

fn render_fact(carrier: &SubCarrier, s: &SubstSet) -> String {
    carrier.named_table().into_iter().find(|(_, t)| t == s).map(|(n, _)| n).unwrap_or_else(|| carrier.render_listing(s))
}

fn check_head(carrier: &SubCarrier, name: &str, head: &[usize]) -> Result<()> {
    for (i, &v) in head.iter().enumerate() {
        if v >= carrier.num_interest() {
            return Err(Error::Precondition(format!(
                "head of `{name}` uses `{}`, which is not a variable of interest",
                carrier.var_name(v.min(carrier.num_vars() - 1))
            )));
        }
        if head[..i].contains(&v) {
            return Err(Error::Precondition(format!("head of `{name}` repeats `{}`", carrier.var_name(v))));
        }
    }
    Ok(())
}

fn check_facts(carrier: &SubCarrier, b: &Body) -> Result<()> {
    match b {
        Body::Fact(s) => carrier.check_set(s),
        Body::Conj(l, r) => check_facts(carrier, l).and_then(|_| check_facts(carrier, r)),
        Body::Disj(cs) if cs.is_empty() => Err(Error::Precondition("empty disjunction".into())),
        Body::Disj(cs) => cs.iter().try_for_each(|c| check_facts(carrier, c)),
        Body::Call { args, .. } => match args.iter().find(|&&v| v >= carrier.num_vars()) {
            Some(v) => Err(Error::NotInCarrier(format!("variable #{v}"))),
            None => Ok(()),
        },
    }
}

// ----- parsing -----

/// Parses the clause DSL: `pred(V, ...) <- body.` per clause, `%` comments.
pub fn parse_program(carrier: &Arc<SubCarrier>, text: &str) -> Result<Program> {
    let toks = lex(text, '%')?;
    let mut cur = Cursor::new(&toks);
    let mut clauses: Vec<(String, Clause)> = Vec::new();
    let mut seen: HashMap<String, (usize, usize)> = HashMap::new();
    let mut calls: Vec<(String, usize, usize, usize)> = Vec::new();
    while !cur.at_end() {
        let (name, line, col) = cur.ident("a predicate name")?;
        if RESERVED.contains(&name) {
            return Err(Error::parse(line, col, format!("`{name}` is reserved for set expressions")));
        }
        if seen.insert(name.to_string(), (line, col)).is_some() {
            return Err(Error::parse(line, col, format!("duplicate clause for predicate `{name}`")));
        }
        let (hl, hc) = cur.here();
        let head = parse_args(carrier, &mut cur)?;
        check_head(carrier, name, &head).map_err(|e| Error::parse(hl, hc, e.to_string()))?;
        cur.expect(&Tok::Arrow, "`<-`")?;
        let body = parse_body(carrier, &mut cur, &mut calls)?;
        cur.expect(&Tok::Dot, "`.` ending the clause")?;
        clauses.push((name.to_string(), Clause { head, body }));
    }
    for (pred, arity, line, col) in calls {
        match clauses.iter().find(|(n, _)| *n == pred) {
            None => {
                return Err(Error::parse(line, col, Error::UndeclaredCall(pred).to_string()));
            }
            Some((_, c)) if c.head.len() != arity => {
                let e = Error::ArityMismatch { pred, expected: c.head.len(), got: arity };
                return Err(Error::parse(line, col, e.to_string()));
            }
            Some(_) => {}
        }
    }
    Program::new(carrier.clone(), clauses)
}

fn parse_args(carrier: &SubCarrier, cur: &mut Cursor<'_>) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    if !cur.eat(&Tok::LParen) {
        return Ok(out);
    }
    loop {
        let (name, line, col) = cur.ident("a variable")?;
        let v = carrier
            .var_index(name)
            .ok_or_else(|| Error::parse(line, col, format!("`{name}` is not a declared variable")))?;
        out.push(v);
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    cur.expect(&Tok::RParen, "`,` or `)`")?;
    Ok(out)
}

type CallSites = Vec<(String, usize, usize, usize)>;

fn parse_body(carrier: &SubCarrier, cur: &mut Cursor<'_>, calls: &mut CallSites) -> Result<Body> {
    let mut children = vec![parse_term(carrier, cur, calls)?];
    while cur.eat(&Tok::Plus) {
        children.push(parse_term(carrier, cur, calls)?);
    }
    Ok(if children.len() == 1 { children.pop().expect("one child") } else { Body::Disj(children) })
}

fn parse_term(carrier: &SubCarrier, cur: &mut Cursor<'_>, calls: &mut CallSites) -> Result<Body> {
    let mut acc = parse_factor(carrier, cur, calls)?;
    while cur.eat(&Tok::Star) {
        acc = Body::conj(acc, parse_factor(carrier, cur, calls)?);
    }
    Ok(acc)
}

fn parse_factor(carrier: &SubCarrier, cur: &mut Cursor<'_>, calls: &mut CallSites) -> Result<Body> {
    if cur.eat(&Tok::LParen) {
        let b = parse_body(carrier, cur, calls)?;
        cur.expect(&Tok::RParen, "`)`")?;
        return Ok(b);
    }
    if SubCarrier::starts_set_atom(cur) {
        return Ok(Body::Fact(carrier.parse_set_inter(cur)?));
    }
    let (name, line, col) = cur.ident("a fact set, call, or `(`")?;
    let args = parse_args(carrier, cur)?;
    calls.push((name.to_string(), args.len(), line, col));
    Ok(Body::Call { pred: name.to_string(), args })
}

// ----- renaming apart -----

/// How fresh auxiliary variables are chosen when a clause is selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FreshPolicy {
    /// Avoid only the call's argument tuple. Renaming is then independent of
    /// the call context, which keeps the semantics a function of Φ alone.
    #[default]
    Static,
    /// Also avoid every variable constrained by the call context Φ.
    AvoidSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalConfig {
    pub fresh: FreshPolicy,
    pub iteration_cap: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { fresh: FreshPolicy::Static, iteration_cap: DEFAULT_ITERATION_CAP }
    }
}

impl EvalConfig {
    fn check(&self) -> Result<()> {
        if self.iteration_cap == 0 {
            return Err(Error::Precondition("iteration cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// The body of `pred`'s clause as selected by the call `pred(args)`: head
/// variables become the arguments, every other clause variable a fresh
/// auxiliary variable (in pool order) outside the arguments and, under
/// `AvoidSupport`, outside `phi_support`. Facts are restricted back to the
/// variables of interest.
pub fn rename_apart(
    program: &Program,
    pred: &str,
    args: &[usize],
    phi_support: &[bool],
    cfg: &EvalConfig,
) -> Result<Body> {
    let carrier = &program.carrier;
    let clause = program.clause(pred).ok_or_else(|| Error::UndeclaredCall(pred.to_string()))?;
    if clause.head.len() != args.len() {
        return Err(Error::ArityMismatch { pred: pred.to_string(), expected: clause.head.len(), got: args.len() });
    }
    let nv = carrier.num_vars();
    let mut used = vec![false; nv];
    clause.body.mark_vars(carrier, &mut used);
    let locals: Vec<usize> = (0..nv).filter(|&v| used[v] && !clause.head.contains(&v)).collect();

    let avoid = |v: usize| args.contains(&v) || (cfg.fresh == FreshPolicy::AvoidSupport && phi_support[v]);
    let fresh: Vec<usize> = carrier.aux_pool().filter(|&v| !avoid(v)).collect();
    if fresh.len() < locals.len() {
        return Err(Error::PoolExhausted { needed: locals.len(), available: fresh.len() });
    }
    let mut m: Vec<usize> = (0..nv).collect();
    for (h, &a) in clause.head.iter().zip(args) {
        m[*h] = a;
    }
    for (&l, &f) in locals.iter().zip(&fresh) {
        m[l] = f;
    }
    Ok(rename_body(carrier, &clause.body, &m))
}

fn rename_body(carrier: &SubCarrier, b: &Body, m: &[usize]) -> Body {
    match b {
        Body::Fact(s) => {
            let renamed = s.indices().filter_map(|i| carrier.rename(carrier.member(i), m));
            Body::Fact(carrier.set_of(renamed.collect::<Vec<_>>().iter()).expect("renaming stays in the carrier"))
        }
        Body::Conj(l, r) => Body::conj(rename_body(carrier, l, m), rename_body(carrier, r, m)),
        Body::Disj(cs) => Body::Disj(cs.iter().map(|c| rename_body(carrier, c, m)).collect()),
        Body::Call { pred, args } => Body::Call { pred: pred.clone(), args: args.iter().map(|&a| m[a]).collect() },
    }
}

// ----- evaluation -----

// A body with calls resolved to table slots.
enum Node {
    Fact(SubstSet),
    Conj(Box<Node>, Box<Node>),
    Disj(Vec<Node>),
    Call(usize),
}

// Every call reachable from the goal, each with its selected body.
struct Plan {
    nodes: Vec<Node>,
}

impl Plan {
    fn build(program: &Program, goal: &str, phi_support: &[bool], cfg: &EvalConfig) -> Result<Plan> {
        let clause = program.clause(goal).ok_or_else(|| Error::UndeclaredCall(goal.to_string()))?;
        let mut keys: Vec<(String, Vec<usize>)> = vec![(goal.to_string(), clause.head.clone())];
        let mut index: HashMap<(String, Vec<usize>), usize> = HashMap::from([(keys[0].clone(), 0)]);
        let mut nodes = Vec::new();
        let mut k = 0;
        while k < keys.len() {
            let (pred, args) = keys[k].clone();
            // the goal clause runs as written: its variables are the ones
            // observed; only selected callee clauses are renamed apart
            let body =
                if k == 0 { clause.body.clone() } else { rename_apart(program, &pred, &args, phi_support, cfg)? };
            nodes.push(lower(&body, &mut keys, &mut index));
            k += 1;
        }
        Ok(Plan { nodes })
    }

    // Least fixpoint of the call table; `close` is the identity for the
    // concrete semantics and ρ for the abstract one.
    fn solve(
        &self,
        carrier: &SubCarrier,
        phi: &SubstSet,
        cap: usize,
        close: &dyn Fn(SubstSet) -> SubstSet,
    ) -> Result<SubstSet> {
        let bottom = close(carrier.empty_set());
        let mut table = vec![bottom; self.nodes.len()];
        for _ in 0..cap {
            let next: Vec<SubstSet> = self.nodes.iter().map(|n| eval_node(carrier, n, phi, &table, close)).collect();
            if next == table {
                return Ok(table.swap_remove(0));
            }
            table = next;
        }
        Err(Error::IterationCap { what: "call table", cap })
    }
}

fn lower(b: &Body, keys: &mut Vec<(String, Vec<usize>)>, index: &mut HashMap<(String, Vec<usize>), usize>) -> Node {
    match b {
        Body::Fact(s) => Node::Fact(s.clone()),
        Body::Conj(l, r) => Node::Conj(Box::new(lower(l, keys, index)), Box::new(lower(r, keys, index))),
        Body::Disj(cs) => Node::Disj(cs.iter().map(|c| lower(c, keys, index)).collect()),
        Body::Call { pred, args } => {
            let key = (pred.clone(), args.clone());
            let next = keys.len();
            let slot = *index.entry(key.clone()).or_insert(next);
            if slot == next {
                keys.push(key);
            }
            Node::Call(slot)
        }
    }
}

fn eval_node(
    carrier: &SubCarrier,
    n: &Node,
    phi: &SubstSet,
    table: &[SubstSet],
    close: &dyn Fn(SubstSet) -> SubstSet,
) -> SubstSet {
    match n {
        Node::Fact(t) => close(carrier.tensor_unchecked(t, phi)),
        Node::Conj(l, r) => {
            let a = eval_node(carrier, l, phi, table, close);
            let b = eval_node(carrier, r, phi, table, close);
            close(carrier.tensor_unchecked(&a, &b))
        }
        Node::Disj(cs) => {
            let u = cs
                .iter()
                .map(|c| eval_node(carrier, c, phi, table, close))
                .fold(carrier.empty_set(), |acc, x| acc.union(&x));
            close(u)
        }
        Node::Call(k) => table[*k].clone(),
    }
}

fn plan_for(program: &Program, goal: &str, phi: &SubstSet, cfg: &EvalConfig) -> Result<Plan> {
    let support = match cfg.fresh {
        FreshPolicy::Static => vec![false; program.carrier.num_vars()],
        FreshPolicy::AvoidSupport => program.carrier.support(phi),
    };
    Plan::build(program, goal, &support, cfg)
}

/// S_goal(Φ) in the concrete semantics.
pub fn concrete_eval(program: &Program, goal: &str, phi: &SubstSet, cfg: &EvalConfig) -> Result<SubstSet> {
    cfg.check()?;
    let carrier = &program.carrier;
    carrier.check_set(phi)?;
    let plan = plan_for(program, goal, phi, cfg)?;
    plan.solve(carrier, phi, cfg.iteration_cap, &|x| x)
}

/// S^ρ_goal(Θ): the best correct approximation in ρ, for Θ a fixpoint of ρ.
pub fn abstract_eval(
    program: &Program,
    rho: &AbstractDomain<SubstSet>,
    goal: &str,
    theta: &SubstSet,
    cfg: &EvalConfig,
) -> Result<SubstSet> {
    check_domain(program, rho)?;
    program.carrier.check_set(theta)?;
    if !rho.contains(theta) {
        return Err(Error::Precondition(format!(
            "{} is not a fixpoint of the domain",
            program.carrier.describe_set(theta)
        )));
    }
    abstract_eval_raw(program, rho, goal, theta, cfg)
}

// Same equations without the fixpoint precondition on the input.
fn abstract_eval_raw(
    program: &Program,
    rho: &AbstractDomain<SubstSet>,
    goal: &str,
    theta: &SubstSet,
    cfg: &EvalConfig,
) -> Result<SubstSet> {
    cfg.check()?;
    let carrier = &*program.carrier;
    let plan = plan_for(program, goal, theta, cfg)?;
    plan.solve(carrier, theta, cfg.iteration_cap, &|x| closure_unchecked(carrier, rho, &x))
}

fn check_domain(program: &Program, rho: &AbstractDomain<SubstSet>) -> Result<()> {
    if rho.ambient_id() != program.carrier.id() {
        return Err(Error::AmbientMismatch);
    }
    Ok(())
}

// ----- condensing -----

/// A failing instance of F(ρ(Θ ⊗ Φ)) = ρ(Θ ⊗ F(Φ)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensingWitness {
    pub theta: SubstSet,
    pub phi: SubstSet,
    /// F(ρ(Θ ⊗ Φ))
    pub lhs: SubstSet,
    /// ρ(Θ ⊗ F(Φ))
    pub rhs: SubstSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensingVerdict {
    pub holds: bool,
    pub witness: Option<CondensingWitness>,
}

/// ρ(Θ ⊗ Φ) for every pair of fixpoints, computed once per domain and
/// shared across programs.
pub struct DomainTable {
    rho: AbstractDomain<SubstSet>,
    carrier: Arc<SubCarrier>,
    // tensor[i][j] = index of ρ(fx_i ⊗ fx_j)
    tensor: Vec<Vec<usize>>,
}

impl DomainTable {
    pub fn new(carrier: &Arc<SubCarrier>, rho: &AbstractDomain<SubstSet>) -> Result<Self> {
        if rho.ambient_id() != carrier.id() {
            return Err(Error::AmbientMismatch);
        }
        let fx = rho.fixpoints();
        let idx = |s: &SubstSet| fx.binary_search(s).expect("closure lands on a fixpoint");
        let tensor = (0..fx.len())
            .into_par_iter()
            .map(|i| {
                (0..fx.len())
                    .map(|j| idx(&closure_unchecked(&**carrier, rho, &carrier.tensor_unchecked(&fx[i], &fx[j]))))
                    .collect()
            })
            .collect();
        Ok(DomainTable { rho: rho.clone(), carrier: carrier.clone(), tensor })
    }

    pub fn domain(&self) -> &AbstractDomain<SubstSet> {
        &self.rho
    }

    /// Checks the condensing identity for every pair of fixpoints.
    ///
    /// The reported witness is the first failure scanning Φ from the top of
    /// the canonical order and, for each Φ, Θ from the bottom.
    pub fn check(&self, program: &Program, goal: &str, cfg: &EvalConfig) -> Result<CondensingVerdict> {
        Ok(self.check_scopes(program, goal, cfg, &[ContextScope::All])?.remove(0))
    }

    /// Like [`check`](Self::check), restricted to multipliers Θ in `scope`.
    pub fn check_in(
        &self,
        program: &Program,
        goal: &str,
        cfg: &EvalConfig,
        scope: ContextScope,
    ) -> Result<CondensingVerdict> {
        Ok(self.check_scopes(program, goal, cfg, &[scope])?.remove(0))
    }

    /// One verdict per scope, sharing a single abstract evaluation per fixpoint.
    pub fn check_scopes(
        &self,
        program: &Program,
        goal: &str,
        cfg: &EvalConfig,
        scopes: &[ContextScope],
    ) -> Result<Vec<CondensingVerdict>> {
        check_domain(program, &self.rho)?;
        if program.carrier.id() != self.carrier.id() {
            return Err(Error::AmbientMismatch);
        }
        let fx = self.rho.fixpoints();
        let f: Vec<SubstSet> =
            fx.par_iter().map(|t| abstract_eval_raw(program, &self.rho, goal, t, cfg)).collect::<Result<_>>()?;
        let idx = |s: &SubstSet| fx.binary_search(s).expect("abstract results are fixpoints");
        let f_idx: Vec<usize> = f.iter().map(idx).collect();
        let idem = self.idempotent_contexts();
        let n = fx.len();
        let verdict = |scope: ContextScope| {
            for phi in 0..n {
                for theta in (0..n).rev() {
                    if scope == ContextScope::Idempotent && !idem[theta] {
                        continue;
                    }
                    let lhs = f_idx[self.tensor[theta][phi]];
                    let rhs = self.tensor[theta][f_idx[phi]];
                    if lhs != rhs {
                        return CondensingVerdict {
                            holds: false,
                            witness: Some(CondensingWitness {
                                theta: fx[theta].clone(),
                                phi: fx[phi].clone(),
                                lhs: fx[lhs].clone(),
                                rhs: fx[rhs].clone(),
                            }),
                        };
                    }
                }
            }
            CondensingVerdict { holds: true, witness: None }
        };
        Ok(scopes.iter().map(|&s| verdict(s)).collect())
    }

    /// For each fixpoint Θ (canonical order): ρ(Θ ⊗ ρ(Θ ⊗ Y)) = ρ(Θ ⊗ Y)
    /// for every fixpoint Y, i.e. Θ absorbs a second copy of itself.
    pub fn idempotent_contexts(&self) -> Vec<bool> {
        let t = &self.tensor;
        (0..t.len()).map(|a| (0..t.len()).all(|y| t[a][t[a][y]] == t[a][y])).collect()
    }
}

/// Which multipliers Θ the condensing identity is checked at.
///
/// A conjunction hands its input to both conjuncts, so a context Θ factored
/// out of the input reaches the result twice: F(ρ(Θ ⊗ Φ)) carries Θ ⊗ Θ
/// where ρ(Θ ⊗ F(Φ)) carries Θ. The lifted unification is not idempotent,
/// and weak-complete domains can fail the identity at such Θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ContextScope {
    #[default]
    All,
    /// only Θ with ρ(Θ ⊗ ρ(Θ ⊗ Y)) = ρ(Θ ⊗ Y) for every fixpoint Y
    Idempotent,
}

/// Whether ρ is condensing for F^ρ_{P,goal}.
pub fn check_condensing(
    program: &Program,
    rho: &AbstractDomain<SubstSet>,
    goal: &str,
    cfg: &EvalConfig,
) -> Result<CondensingVerdict> {
    DomainTable::new(&program.carrier, rho)?.check(program, goal, cfg)
}

// ----- counterexample programs -----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactShape {
    /// Φ ⊸ Ψ as one fact set.
    #[default]
    Single,
    /// Σ of singleton facts, one per member.
    SingletonSum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Counterexample {
    /// Φ or Ψ is not a fixpoint.
    NotApplicable(String),
    /// Φ ⊸ Ψ is already a fixpoint; no program can be built from this pair.
    NoCounterexample,
    /// `p(VI) <- Φ ⊸ Ψ`, with both sides of the identity at (Φ, {ε}).
    Built { program: Program, residual: SubstSet, lhs: SubstSet, rhs: SubstSet },
}

impl Counterexample {
    /// The built program breaks the condensing identity.
    pub fn refutes(&self) -> bool {
        matches!(self, Counterexample::Built { lhs, rhs, .. } if lhs != rhs)
    }
}

/// The predicate name used by `counterexample_program`.
pub const COUNTEREXAMPLE_GOAL: &str = "p";

/// Builds the one-fact program whose answer is Φ ⊸ Ψ and evaluates the
/// condensing identity at Θ := Φ and the concrete query {ε}:
/// F(ρ(Φ ⊗ {ε})) against ρ(Φ ⊗ F({ε})).
pub fn counterexample_program(
    carrier: &Arc<SubCarrier>,
    rho: &AbstractDomain<SubstSet>,
    phi: &SubstSet,
    psi: &SubstSet,
    shape: FactShape,
    cfg: &EvalConfig,
) -> Result<Counterexample> {
    if rho.ambient_id() != carrier.id() {
        return Err(Error::AmbientMismatch);
    }
    for (name, s) in [("first", phi), ("second", psi)] {
        carrier.check_set(s)?;
        if !rho.contains(s) {
            return Ok(Counterexample::NotApplicable(format!("{name} argument is not a fixpoint of the domain")));
        }
    }
    let residual = carrier.residual_unchecked(phi, psi);
    if rho.contains(&residual) {
        return Ok(Counterexample::NoCounterexample);
    }
    let body = match shape {
        FactShape::Single => Body::Fact(residual.clone()),
        FactShape::SingletonSum if residual.len() > 1 => {
            Body::Disj(residual.indices().map(|i| Body::Fact(carrier.set_from_indices([i]))).collect())
        }
        FactShape::SingletonSum => Body::Fact(residual.clone()),
    };
    let head = (0..carrier.num_interest()).collect();
    let program = Program::new(carrier.clone(), vec![(COUNTEREXAMPLE_GOAL.into(), Clause { head, body })])?;
    let unit = carrier.set_from_indices([0]);
    let close = |x: &SubstSet| closure_unchecked(&**carrier, rho, x);
    let lhs =
        abstract_eval_raw(&program, rho, COUNTEREXAMPLE_GOAL, &close(&carrier.tensor_unchecked(phi, &unit)), cfg)?;
    let f_unit = abstract_eval_raw(&program, rho, COUNTEREXAMPLE_GOAL, &unit, cfg)?;
    let rhs = close(&carrier.tensor_unchecked(phi, &f_unit));
    Ok(Counterexample::Built { program, residual, lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{moore_closure, top_domain};
    use crate::subst::{enumerate_carrier, CarrierConfig};

    fn carrier() -> Arc<SubCarrier> {
        enumerate_carrier(CarrierConfig::default()).unwrap()
    }

    fn set(c: &SubCarrier, text: &str) -> SubstSet {
        c.parse_set(text).unwrap()
    }

    const EX: &str = "p(X,Y) <- { X/a ; Y/a }.";

    #[test]
    fn parses_example_program() {
        let c = carrier();
        let p = parse_program(&c, EX).unwrap();
        let cl = p.clause("p").unwrap();
        assert_eq!(cl.head, vec![0, 1]);
        assert_eq!(cl.body, Body::Fact(set(&c, "{X/a; Y/a}")));
        let p = parse_program(&c, "p(X) <- { eps }.").unwrap();
        assert_eq!(p.clause("p").unwrap().body, Body::Fact(c.set_from_indices([0])));
    }

    #[test]
    fn parse_errors() {
        let c = carrier();
        let undeclared = parse_program(&c, "p(X) <- p(X) * q(X).").unwrap_err();
        assert!(matches!(&undeclared, Error::Parse { line: 1, col: 16, msg } if msg.contains("undeclared")));
        let dup = parse_program(&c, "p(X) <- {eps}.\np(Y) <- {eps}.").unwrap_err();
        assert!(matches!(&dup, Error::Parse { line: 2, col: 1, msg } if msg.contains("duplicate")));
        let arity = parse_program(&c, "p(X) <- q(X,Y).\nq(X) <- {eps}.").unwrap_err();
        assert!(matches!(&arity, Error::Parse { msg, .. } if msg.contains("expects 1")));
        assert!(parse_program(&c, "p(X) <- { Z/a }.").is_err());
        assert!(parse_program(&c, "p(X,X) <- { eps }.").is_err());
        assert!(parse_program(&c, "p(Z) <- { eps }.").is_err());
        assert!(parse_program(&c, "p(X) <- { eps }").is_err());
    }

    #[test]
    fn precedence_and_round_trip() {
        let c = carrier();
        let text = "p(X,Y) <- {X/a} * q(Y) + (I(X,Y) & G(X,Y)) * ({eps} + q(X)) % comment\n.\nq(X) <- {X/Z} + TOP * (EG * {}).\n";
        let p = parse_program(&c, text).unwrap();
        match &p.clause("p").unwrap().body {
            Body::Disj(cs) => {
                assert_eq!(cs.len(), 2);
                assert!(matches!(cs[0], Body::Conj(..)));
            }
            other => panic!("{other:?}"),
        }
        let again = parse_program(&c, &p.render()).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn renaming_apart() {
        let c = carrier();
        let cfg = EvalConfig::default();
        let avoid = EvalConfig { fresh: FreshPolicy::AvoidSupport, ..cfg };
        let p = parse_program(&c, "p(X,Y) <- {X/Z}.").unwrap();
        let none = vec![false; c.num_vars()];
        assert_eq!(rename_apart(&p, "p", &[0, 1], &none, &cfg).unwrap(), Body::Fact(set(&c, "{X/Z}")));
        let mut z = none.clone();
        z[c.var_index("Z").unwrap()] = true;
        assert_eq!(rename_apart(&p, "p", &[0, 1], &z, &avoid).unwrap(), Body::Fact(set(&c, "{X/W}")));
        // static renaming ignores the context
        assert_eq!(rename_apart(&p, "p", &[0, 1], &z, &cfg).unwrap(), Body::Fact(set(&c, "{X/Z}")));

        let small = enumerate_carrier(CarrierConfig::new(&["X", "Y"], &["Z"], &["a"])).unwrap();
        let p = parse_program(&small, "p(X) <- {X/Y} * {X/Z}.").unwrap();
        let none = vec![false; small.num_vars()];
        assert_eq!(
            rename_apart(&p, "p", &[0], &none, &cfg).unwrap_err(),
            Error::PoolExhausted { needed: 2, available: 1 }
        );
    }

    #[test]
    fn concrete_examples() {
        let c = carrier();
        let cfg = EvalConfig::default();
        let p = parse_program(&c, EX).unwrap();
        let eps = c.set_from_indices([0]);
        assert_eq!(concrete_eval(&p, "p", &eps, &cfg).unwrap(), set(&c, "{X/a; Y/a}"));
        // oracle: pairwise unification of {X/a},{Y/a} with {Y/a}
        let y = set(&c, "{Y/a}");
        assert_eq!(concrete_eval(&p, "p", &y, &cfg).unwrap(), set(&c, "{X/a, Y/a; Y/a}"));
        let p = parse_program(&c, "p <- {X/a} + {X/Y}.").unwrap();
        assert_eq!(concrete_eval(&p, "p", &eps, &cfg).unwrap(), set(&c, "{X/a; X/Y}"));
    }

    #[test]
    fn recursion_reaches_least_fixpoint() {
        let c = carrier();
        let cfg = EvalConfig::default();
        // p = {X/a} + p * {Y/a}: least solution {X/a} ∪ {X/a,Y/a}
        let p = parse_program(&c, "p(X,Y) <- {X/a} + p(X,Y) * {Y/a}.").unwrap();
        let eps = c.set_from_indices([0]);
        assert_eq!(concrete_eval(&p, "p", &eps, &cfg).unwrap(), set(&c, "{X/a; X/a, Y/a}"));
        // a call that only recurses has the empty answer
        let p = parse_program(&c, "p(X) <- p(X).").unwrap();
        assert!(concrete_eval(&p, "p", &eps, &cfg).unwrap().is_empty());
        let p = parse_program(&c, "p(X,Y) <- {X/a} + p(Y,X).").unwrap();
        let capped = EvalConfig { iteration_cap: 1, ..cfg };
        assert!(matches!(concrete_eval(&p, "p", &eps, &capped), Err(Error::IterationCap { .. })));
        assert_eq!(concrete_eval(&p, "p", &eps, &cfg).unwrap(), set(&c, "{X/a; Y/a}"));
    }

    #[test]
    fn abstract_examples() {
        let c = carrier();
        let ns = c.named_sets().unwrap();
        let cfg = EvalConfig::default();
        let p = parse_program(&c, EX).unwrap();
        let rho = moore_closure(&*c, [ns.i_xy.clone()]).unwrap();
        assert_eq!(abstract_eval(&p, &rho, "p", &ns.top, &cfg).unwrap(), ns.i_xy);
        let rho2 = moore_closure(&*c, [ns.i_xy.clone(), ns.g_xy.clone(), ns.g_or_eg.clone()]).unwrap();
        assert_eq!(abstract_eval(&p, &rho2, "p", &ns.top, &cfg).unwrap(), ns.g_xy);
        let one = top_domain(&*c);
        assert_eq!(abstract_eval(&p, &one, "p", &ns.top, &cfg).unwrap(), ns.top);
        assert!(abstract_eval(&p, &rho, "p", &ns.g_xy, &cfg).is_err());
    }

    #[test]
    fn condensing_examples() {
        let c = carrier();
        let ns = c.named_sets().unwrap();
        let cfg = EvalConfig::default();
        let p = parse_program(&c, EX).unwrap();
        let rho = moore_closure(&*c, [ns.i_xy.clone()]).unwrap();
        let v = check_condensing(&p, &rho, "p", &cfg).unwrap();
        let w = v.witness.unwrap();
        assert!(!v.holds);
        assert_eq!((&w.theta, &w.phi, &w.lhs, &w.rhs), (&ns.i_xy, &ns.top, &ns.i_xy, &ns.top));

        let rho2 = moore_closure(&*c, [ns.i_xy.clone(), ns.g_xy.clone(), ns.g_or_eg.clone()]).unwrap();
        assert!(check_condensing(&p, &rho2, "p", &cfg).unwrap().holds);
        // both sides at the former witness
        let f = |t: &SubstSet| abstract_eval(&p, &rho2, "p", t, &cfg).unwrap();
        let close = |x: &SubstSet| closure_unchecked(&*c, &rho2, x);
        let lhs = f(&close(&c.tensor_unchecked(&ns.i_xy, &ns.top)));
        let rhs = close(&c.tensor_unchecked(&ns.i_xy, &f(&ns.top)));
        assert_eq!((lhs, rhs), (ns.g_xy.clone(), ns.g_xy.clone()));

        assert!(check_condensing(&p, &top_domain(&*c), "p", &cfg).unwrap().holds);
    }

    #[test]
    fn conjunction_duplicates_the_context() {
        let c = carrier();
        let cfg = EvalConfig::default();
        let p = parse_program(&c, "p(X,Y) <- q(Y) * q(Y).\nq(X) <- {X/a, Z/a}.").unwrap();
        assert!(p.has_conj());
        let fx = [
            "{X/a; X/Z, Y/a; X/W, Y/a; X/a, Z/a; X/a, Y/Z; X/a, Y/a; X/W, Y/a, Z/a; X/a, Y/a, Z/a}",
            "{eps; Y/Z; Y/a; Y/a, Z/a}",
            "{X/a, Y/Z; X/W, Y/a, Z/a; X/a, Z/a, W/a; X/a, Y/a, Z/a}",
            "{X/a, Y/Z; X/W, Y/a, Z/a; X/a, Y/a, Z/a}",
            "{eps; Y/Z}",
            "{Y/Z; Y/a, Z/a}",
            "{eps}",
            "{Y/Z}",
            "{}",
        ];
        let rho = moore_closure(&*c, fx.iter().map(|t| set(&c, t))).unwrap();
        assert_eq!(rho.len(), 10);
        assert!(crate::shells::is_weak_complete(&*c, &rho).unwrap().holds);

        let t = DomainTable::new(&c, &rho).unwrap();
        let v = t.check_scopes(&p, "p", &cfg, &[ContextScope::All, ContextScope::Idempotent]).unwrap();
        assert!(!v[0].holds && v[1].holds);
        let w = v[0].witness.as_ref().unwrap();
        let at = rho.fixpoints().binary_search(&w.theta).unwrap();
        assert!(!t.idempotent_contexts()[at]);
        // Θ ⊗ Θ is strictly more than Θ modulo ρ
        let close = |x: &SubstSet| closure_unchecked(&*c, &rho, x);
        assert_ne!(close(&c.tensor_unchecked(&w.theta, &w.theta)), w.theta);

        // the refined pair-sharing domain already shows it: I(X,Y) ⊗ I(X,Y)
        // closes to TOP
        let ns = c.named_sets().unwrap();
        let refined = moore_closure(&*c, [ns.i_xy.clone(), ns.g_xy.clone(), ns.g_or_eg.clone()]).unwrap();
        let square = parse_program(&c, "p(X,Y) <- {eps} * {eps}.").unwrap();
        let rt = DomainTable::new(&c, &refined).unwrap();
        let v = rt.check_scopes(&square, "p", &cfg, &[ContextScope::All, ContextScope::Idempotent]).unwrap();
        assert!(!v[0].holds && v[1].holds);
        assert_eq!(v[0].witness.as_ref().unwrap().theta, ns.i_xy);

        // without the conjunction the same domain condenses
        let linear = parse_program(&c, "p(X,Y) <- q(Y).\nq(X) <- {X/a, Z/a}.").unwrap();
        assert!(!linear.has_conj());
        assert!(t.check(&linear, "p", &cfg).unwrap().holds);
    }

    #[test]
    fn counterexamples() {
        let c = carrier();
        let ns = c.named_sets().unwrap();
        let cfg = EvalConfig::default();
        let rho = moore_closure(&*c, [ns.i_xy.clone()]).unwrap();
        for shape in [FactShape::Single, FactShape::SingletonSum] {
            let cex = counterexample_program(&c, &rho, &ns.top, &ns.i_xy, shape, &cfg).unwrap();
            let Counterexample::Built { program, residual, lhs, rhs } = &cex else { panic!("{cex:?}") };
            assert_eq!(residual, &ns.g_xy);
            assert_eq!((lhs, rhs), (&ns.i_xy, &ns.top));
            assert!(cex.refutes());
            assert!(!check_condensing(program, &rho, COUNTEREXAMPLE_GOAL, &cfg).unwrap().holds);
        }
        let rho2 = moore_closure(&*c, [ns.i_xy.clone(), ns.g_xy.clone(), ns.g_or_eg.clone()]).unwrap();
        for a in rho2.fixpoints() {
            for b in rho2.fixpoints() {
                let r = counterexample_program(&c, &rho2, a, b, FactShape::Single, &cfg).unwrap();
                assert_eq!(r, Counterexample::NoCounterexample);
            }
        }
        let r = counterexample_program(&c, &rho, &ns.g_xy, &ns.top, FactShape::Single, &cfg).unwrap();
        assert!(matches!(r, Counterexample::NotApplicable(_)));
        let one = top_domain(&*c);
        let r = counterexample_program(&c, &one, &ns.top, &ns.top, FactShape::Single, &cfg).unwrap();
        assert_eq!(r, Counterexample::NoCounterexample);
    }

    #[test]
    fn avoid_support_policy() {
        let c = carrier();
        let cfg = EvalConfig { fresh: FreshPolicy::AvoidSupport, ..EvalConfig::default() };
        // the goal clause itself is never renamed
        let p = parse_program(&c, "p(X) <- {X/Y}.").unwrap();
        let top = c.full_set();
        assert_eq!(concrete_eval(&p, "p", &top, &cfg).unwrap(), c.tensor_sets(&set(&c, "{X/Y}"), &top).unwrap());
        // a callee's local must avoid everything ⊤ constrains
        let p = parse_program(&c, "p(X) <- q(X).\nq(X) <- {X/Y}.").unwrap();
        assert!(matches!(concrete_eval(&p, "p", &top, &cfg), Err(Error::PoolExhausted { .. })));
        let zx = set(&c, "{X/Z}");
        assert_eq!(concrete_eval(&p, "p", &zx, &cfg).unwrap(), set(&c, "{X/W, Z/W}"));
        let stat = EvalConfig::default();
        assert_eq!(concrete_eval(&p, "p", &zx, &stat).unwrap(), zx);
    }
}
