//! Seeded random programs and domains over a substitution carrier, and the
//! sweep that checks condensing against weak-completeness on them.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domains::{apply_closure, moore_closure, AbstractDomain};
use crate::error::{Error, Result};
use crate::lp_semantics::{
    abstract_eval, concrete_eval, counterexample_program, Body, Clause, ContextScope, Counterexample, DomainTable,
    EvalConfig, FactShape, Program,
};
use crate::par::*;
use crate::shells::{is_weak_complete, weak_complete_shell_bounded};
use crate::subst::{SubCarrier, SubstSet};

/// The goal predicate of every generated program.
pub const GOAL: &str = "p";

const PREDICATES: [&str; 3] = ["p", "q", "r"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusConfig {
    pub programs: usize,
    /// random generator families; each also contributes its weak-complete shell
    pub domains: usize,
    pub seed: u64,
    pub max_depth: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { programs: 100, domains: 20, seed: 0, max_depth: 3 }
    }
}

struct Gen<'c> {
    carrier: &'c SubCarrier,
    rng: ChaCha8Rng,
    heads: Vec<Vec<usize>>,
    named: Vec<SubstSet>,
}

impl Gen<'_> {
    fn fact(&mut self) -> Body {
        if self.rng.gen_bool(0.15) {
            let s = self.named.choose(&mut self.rng).expect("named sets").clone();
            return Body::Fact(s);
        }
        let n = self.carrier.len();
        let k = self.rng.gen_range(1..=3);
        let idx: Vec<usize> = (0..k).map(|_| self.rng.gen_range(0..n)).collect();
        Body::Fact(self.carrier.set_from_indices(idx))
    }

    fn call(&mut self) -> Body {
        let p = self.rng.gen_range(0..self.heads.len());
        let nvi = self.carrier.num_interest();
        let args = (0..self.heads[p].len())
            .map(|_| {
                if self.rng.gen_bool(0.1) {
                    self.rng.gen_range(self.carrier.aux_pool())
                } else {
                    self.rng.gen_range(0..nvi)
                }
            })
            .collect();
        Body::Call { pred: PREDICATES[p].to_string(), args }
    }

    fn body(&mut self, depth: usize) -> Body {
        let leaf = depth == 0 || self.rng.gen_bool(0.35);
        if leaf {
            return if self.heads.len() > 1 && self.rng.gen_bool(0.3) || self.rng.gen_bool(0.1) {
                self.call()
            } else {
                self.fact()
            };
        }
        if self.rng.gen_bool(0.5) {
            Body::conj(self.body(depth - 1), self.body(depth - 1))
        } else {
            let k = self.rng.gen_range(2..=3);
            Body::Disj((0..k).map(|_| self.body(depth - 1)).collect())
        }
    }
}

/// One random program: one to three predicates `p`, `q`, `r`; `p` takes
/// every variable of interest, the others a random subset. Bodies mix facts,
/// conjunctions, disjunctions and (possibly recursive) calls. Candidates whose
/// clause selection would run out of auxiliary variables are redrawn.
pub fn random_program(carrier: &Arc<SubCarrier>, seed: u64, max_depth: usize) -> Result<Program> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = carrier.set_from_indices([0]);
    loop {
        let p = draw_program(carrier, &mut rng, max_depth)?;
        match concrete_eval(&p, GOAL, &eps, &EvalConfig::default()) {
            Err(Error::PoolExhausted { .. }) => continue,
            Err(e) => return Err(e),
            Ok(_) => return Ok(p),
        }
    }
}

fn draw_program(carrier: &Arc<SubCarrier>, rng: &mut ChaCha8Rng, max_depth: usize) -> Result<Program> {
    let nvi = carrier.num_interest();
    let npred = rng.gen_range(1..=PREDICATES.len());
    let mut heads = vec![(0..nvi).collect::<Vec<_>>()];
    for _ in 1..npred {
        let mut vars: Vec<usize> = (0..nvi).collect();
        vars.shuffle(rng);
        vars.truncate(rng.gen_range(1..=nvi));
        heads.push(vars);
    }
    let named = carrier.named_table().into_iter().map(|(_, s)| s).collect();
    let mut gen = Gen { carrier, rng: ChaCha8Rng::seed_from_u64(rng.gen()), heads: heads.clone(), named };
    let clauses = heads
        .into_iter()
        .enumerate()
        .map(|(i, head)| (PREDICATES[i].to_string(), Clause { head, body: gen.body(max_depth) }))
        .collect();
    Program::new(carrier.clone(), clauses)
}

pub fn random_programs(carrier: &Arc<SubCarrier>, cfg: &CorpusConfig) -> Result<Vec<Program>> {
    (0..cfg.programs).map(|i| random_program(carrier, mix(cfg.seed, i as u64), cfg.max_depth)).collect()
}

fn mix(seed: u64, i: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i).rotate_left(17) ^ i
}

/// The Moore closure of one to three seeded random sets.
pub fn random_domain(carrier: &Arc<SubCarrier>, seed: u64) -> Result<AbstractDomain<SubstSet>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=3);
    let pool = carrier.random_sets(6, rng.gen());
    let gens: Vec<SubstSet> = (0..m).map(|_| pool.choose(&mut rng).expect("pool").clone()).collect();
    moore_closure(&**carrier, gens)
}

/// Largest weak-complete shell the corpus keeps.
pub const MAX_SHELL_FIXPOINTS: usize = 64;

/// `cfg.domains` random generator domains whose weak-complete shells have at
/// most `MAX_SHELL_FIXPOINTS` fixpoints, followed by those shells. Candidates
/// are drawn in seed order, so the selection is deterministic.
pub fn corpus_domains(
    carrier: &Arc<SubCarrier>,
    cfg: &CorpusConfig,
    cap: usize,
) -> Result<Vec<AbstractDomain<SubstSet>>> {
    let mut base = Vec::new();
    let mut shells = Vec::new();
    let mut next = 0u64;
    while base.len() < cfg.domains {
        let batch: Vec<u64> = (next..next + 16).collect();
        next += 16;
        let found = batch
            .par_iter()
            .map(|&i| {
                let d = random_domain(carrier, mix(cfg.seed ^ 0xd0, i))?;
                match weak_complete_shell_bounded(&**carrier, &d, cap, MAX_SHELL_FIXPOINTS) {
                    Ok(s) => Ok(Some((d, s.domain))),
                    Err(Error::SizeLimit { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        for (d, s) in found.into_iter().flatten() {
            if base.len() < cfg.domains {
                base.push(d);
                shells.push(s);
            }
        }
    }
    base.extend(shells);
    Ok(base)
}

/// Outcome for one domain of the sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainOutcome {
    pub fixpoints: usize,
    pub weak_complete: bool,
    /// programs of the corpus on which the domain is condensing
    pub condensing_on: usize,
    /// programs on which it is condensing at every ⊗-idempotent context
    pub condensing_on_idempotent: usize,
    /// conjunction-free programs on which it fails to condense
    pub conj_free_failures: usize,
    /// for a non-weak-complete domain: the counterexample program built from
    /// the least failing residual refutes condensing
    pub counterexample_refutes: Option<bool>,
    /// soundness violations found on this domain
    pub unsound: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepReport {
    pub programs: usize,
    pub domains: Vec<DomainOutcome>,
}

impl SweepReport {
    /// Weak-complete domains that failed to condense on some program.
    pub fn weak_complete_failures(&self) -> usize {
        self.domains.iter().filter(|d| d.weak_complete && d.condensing_on != self.programs).count()
    }

    /// Weak-complete domains failing at an idempotent context or on a
    /// conjunction-free program.
    pub fn unexplained_failures(&self) -> usize {
        self.domains
            .iter()
            .filter(|d| d.weak_complete && (d.condensing_on_idempotent != self.programs || d.conj_free_failures > 0))
            .count()
    }

    /// Non-weak-complete domains without a refuting counterexample program.
    pub fn missing_counterexamples(&self) -> usize {
        self.domains.iter().filter(|d| !d.weak_complete && d.counterexample_refutes != Some(true)).count()
    }

    pub fn soundness_violations(&self) -> usize {
        self.domains.iter().map(|d| d.unsound).sum()
    }
}

/// Checks every domain against every program: condensing verdicts,
/// weak-completeness, counterexample programs and soundness (on every
/// fixpoint and `samples` random concrete inputs).
pub fn sweep(
    carrier: &Arc<SubCarrier>,
    programs: &[Program],
    domains: &[AbstractDomain<SubstSet>],
    samples: &[SubstSet],
    cfg: &EvalConfig,
) -> Result<SweepReport> {
    let out = domains
        .iter()
        .map(|rho| {
            let table = DomainTable::new(carrier, rho)?;
            let wc = is_weak_complete(&**carrier, rho)?;
            let scopes = [ContextScope::All, ContextScope::Idempotent];
            let verdicts = programs
                .par_iter()
                .map(|p| table.check_scopes(p, GOAL, cfg, &scopes).map(|v| (v[0].holds, v[1].holds, p.has_conj())))
                .collect::<Result<Vec<_>>>()?;
            let condensing_on = verdicts.iter().filter(|v| v.0).count();
            let condensing_on_idempotent = verdicts.iter().filter(|v| v.1).count();
            let conj_free_failures = verdicts.iter().filter(|v| !v.0 && !v.2).count();
            let counterexample_refutes = match &wc.witness {
                None => None,
                Some((a, b)) => {
                    let c = counterexample_program(carrier, rho, a, b, FactShape::Single, cfg)?;
                    Some(matches!(c, Counterexample::Built { .. }) && c.refutes())
                }
            };
            let unsound = programs
                .par_iter()
                .map(|p| count_unsound(p, rho, samples, cfg))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum();
            Ok(DomainOutcome {
                fixpoints: rho.len(),
                weak_complete: wc.holds,
                condensing_on,
                condensing_on_idempotent,
                conj_free_failures,
                counterexample_refutes,
                unsound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { programs: programs.len(), domains: out })
}

/// ρ(concrete(Φ)) ⊆ abstract(ρ(Φ)) failures over the fixpoints and samples.
pub fn count_unsound(
    program: &Program,
    rho: &AbstractDomain<SubstSet>,
    samples: &[SubstSet],
    cfg: &EvalConfig,
) -> Result<usize> {
    let carrier = &**program.carrier();
    let mut bad = 0;
    for phi in rho.fixpoints().iter().chain(samples) {
        let conc = apply_closure(carrier, rho, &concrete_eval(program, GOAL, phi, cfg)?)?;
        let abs = abstract_eval(program, rho, GOAL, &apply_closure(carrier, rho, phi)?, cfg)?;
        if !conc.is_subset(&abs) {
            bad += 1;
        }
    }
    Ok(bad)
}
