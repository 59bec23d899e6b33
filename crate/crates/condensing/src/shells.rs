//! Domain refinements: the R_F operator, lifted linear implication between
//! domains, complete and weak-complete shells, and the matching predicates.

use std::collections::BTreeSet;

use crate::domains::{
    closure_unchecked, identity_domain, moore_closure, moore_closure_bounded, reduced_product, top_domain,
    AbstractDomain,
};
use crate::error::{Error, Result};
use crate::lattice_core::Ambient;
use crate::par::*;
use crate::quantale::{first_index, Quantale};

pub const DEFAULT_ITERATION_CAP: usize = 10_000;

/// Monotone unary maps on an explicit ambient, stored as tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionFamily {
    ambient: u64,
    tables: Vec<Vec<usize>>,
}

impl FunctionFamily {
    pub fn from_tables<A: Ambient<Elem = usize>>(amb: &A, tables: Vec<Vec<usize>>) -> Result<Self> {
        let elems = amb.elements()?;
        for t in &tables {
            if t.len() != elems.len() {
                return Err(Error::Precondition(format!(
                    "function table has {} entries for {} elements",
                    t.len(),
                    elems.len()
                )));
            }
            for &x in &elems {
                amb.check(&t[x])?;
                for &y in &elems {
                    if amb.leq(&x, &y) && !amb.leq(&t[x], &t[y]) {
                        return Err(Error::Precondition(format!(
                            "function is not monotone at {} <= {}",
                            amb.render(&x),
                            amb.render(&y)
                        )));
                    }
                }
            }
        }
        Ok(FunctionFamily { ambient: amb.ambient_id(), tables })
    }

    /// F_η = {λx. x ⊗ y | y ∈ ys}.
    pub fn tensor_sections<Q: Quantale<Elem = usize>>(q: &Q, ys: &[usize]) -> Result<Self> {
        let elems = q.elements()?;
        let mut tables = Vec::with_capacity(ys.len());
        for y in ys {
            q.check(y)?;
            tables.push(elems.iter().map(|x| q.tensor(x, y)).collect());
        }
        Ok(FunctionFamily { ambient: q.ambient_id(), tables })
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn apply(&self, f: usize, x: usize) -> usize {
        self.tables[f][x]
    }
}

/// R_F(ρ) = M(⋃_{f ∈ F, a ∈ ρ} max{x | f(x) ≤ a}).
pub fn rf_operator<A: Ambient<Elem = usize>>(
    amb: &A,
    fam: &FunctionFamily,
    rho: &AbstractDomain<usize>,
) -> Result<AbstractDomain<usize>> {
    if fam.ambient != amb.ambient_id() || rho.ambient_id() != amb.ambient_id() {
        return Err(Error::AmbientMismatch);
    }
    let elems = amb.elements()?;
    let mut gens = BTreeSet::new();
    for table in &fam.tables {
        for a in rho.fixpoints() {
            let below: Vec<usize> = elems.iter().copied().filter(|&x| amb.leq(&table[x], a)).collect();
            for &x in &below {
                if !below.iter().any(|&y| y != x && amb.leq(&x, &y)) {
                    gens.insert(x);
                }
            }
        }
    }
    moore_closure(amb, gens)
}

/// A ⊸̂ B = M({a ⊸ b | a ∈ A, b ∈ B}).
pub fn lin_arrow_domain<Q: Quantale>(
    q: &Q,
    a: &AbstractDomain<Q::Elem>,
    b: &AbstractDomain<Q::Elem>,
) -> Result<AbstractDomain<Q::Elem>> {
    if a.ambient_id() != q.ambient_id() || b.ambient_id() != q.ambient_id() {
        return Err(Error::AmbientMismatch);
    }
    moore_closure(q, pairwise_residuals(q, a.fixpoints(), b.fixpoints()))
}

fn pairwise_residuals<Q: Quantale>(q: &Q, xs: &[Q::Elem], ys: &[Q::Elem]) -> BTreeSet<Q::Elem> {
    let pairs: Vec<(usize, usize)> = (0..xs.len()).flat_map(|i| (0..ys.len()).map(move |j| (i, j))).collect();
    if pairs.len() >= MIN_PAR_ITEMS {
        pairs
            .into_par_iter()
            .map(|(i, j)| q.residual_unchecked(&xs[i], &ys[j]))
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    } else {
        pairs.into_iter().map(|(i, j)| q.residual_unchecked(&xs[i], &ys[j])).collect()
    }
}

/// A shell together with how its Kleene iteration went.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellResult<E> {
    pub domain: AbstractDomain<E>,
    /// number of operator applications performed
    pub iterations: usize,
    /// first index i with X_i = X_{i+1} (X_0 is the top domain)
    pub stabilized_at: usize,
}

fn gfp_from_top<Q: Quantale>(
    q: &Q,
    cap: usize,
    what: &'static str,
    step: impl Fn(&AbstractDomain<Q::Elem>) -> Result<AbstractDomain<Q::Elem>>,
) -> Result<ShellResult<Q::Elem>> {
    let mut cur = top_domain(q);
    for i in 0..cap {
        let next = step(&cur)?;
        if next == cur {
            return Ok(ShellResult { domain: cur, iterations: i + 1, stabilized_at: i });
        }
        cur = next;
    }
    Err(Error::IterationCap { what, cap })
}

/// Complete shell of A for ⊗: gfp of X ↦ A ⊓ (C ⊸̂ X). Needs an enumerable
/// ambient; the result is checked against the closed form C ⊸̂ A.
pub fn complete_shell<Q: Quantale>(q: &Q, a: &AbstractDomain<Q::Elem>) -> Result<ShellResult<Q::Elem>> {
    if a.ambient_id() != q.ambient_id() {
        return Err(Error::AmbientMismatch);
    }
    let c = identity_domain(q)?;
    let res =
        gfp_from_top(q, c.len() + 3, "complete shell", |x| reduced_product(q, &[a, &lin_arrow_domain(q, &c, x)?]))?;
    let closed = lin_arrow_domain(q, &c, a)?;
    if res.domain != closed {
        return Err(Error::Invariant("complete shell differs from C ⊸̂ A".into()));
    }
    if res.stabilized_at > 2 {
        return Err(Error::Invariant(format!(
            "complete shell iteration stabilized at {} instead of by 2",
            res.stabilized_at
        )));
    }
    Ok(res)
}

/// ∧_{a ∈ A} (c ⊸ a) ⊸ a, the closure of the complete shell.
pub fn shell_closure_map<Q: Quantale>(q: &Q, a: &AbstractDomain<Q::Elem>, c: &Q::Elem) -> Result<Q::Elem> {
    if a.ambient_id() != q.ambient_id() {
        return Err(Error::AmbientMismatch);
    }
    q.elements()?;
    q.check(c)?;
    Ok(a.fixpoints().iter().fold(q.top(), |acc, x| q.meet(&acc, &q.residual_unchecked(&q.residual_unchecked(c, x), x))))
}

/// Weak-complete shell of A: gfp of X ↦ A ⊓ X ⊓ (X ⊸̂ X).
pub fn weak_complete_shell<Q: Quantale>(
    q: &Q,
    a: &AbstractDomain<Q::Elem>,
    cap: usize,
) -> Result<ShellResult<Q::Elem>> {
    weak_complete_shell_bounded(q, a, cap, usize::MAX)
}

/// `weak_complete_shell`, giving up with a size-limit error once an iterate
/// has more than `max_fixpoints` fixpoints.
pub fn weak_complete_shell_bounded<Q: Quantale>(
    q: &Q,
    a: &AbstractDomain<Q::Elem>,
    cap: usize,
    max_fixpoints: usize,
) -> Result<ShellResult<Q::Elem>> {
    if a.ambient_id() != q.ambient_id() {
        return Err(Error::AmbientMismatch);
    }
    // M(A ∪ X ∪ {x ⊸ y}) is A ⊓ X ⊓ (X ⊸̂ X) in one closure
    gfp_from_top(q, cap, "weak-complete shell", |x| {
        let fx = x.fixpoints();
        let gens = a.fixpoints().iter().chain(fx).cloned().chain(pairwise_residuals(q, fx, fx));
        moore_closure_bounded(q, gens, max_fixpoints)
    })
}

/// Outcome of a predicate with its least witness on failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict<W> {
    pub holds: bool,
    pub witness: Option<W>,
}

impl<W> Verdict<W> {
    fn from_witness(witness: Option<W>) -> Self {
        Verdict { holds: witness.is_none(), witness }
    }
}

/// ρ(ρx ⊗ ρy) = ρ(x ⊗ y) for all x, y; cross-checked against the one-sided
/// form ρ(ρx ⊗ y) = ρ(x ⊗ y).
pub fn is_complete<Q: Quantale>(q: &Q, rho: &AbstractDomain<Q::Elem>) -> Result<Verdict<(Q::Elem, Q::Elem)>> {
    if rho.ambient_id() != q.ambient_id() {
        return Err(Error::AmbientMismatch);
    }
    let elems = q.elements()?;
    let cl = |x: &Q::Elem| closure_unchecked(q, rho, x);
    let closed: Vec<Q::Elem> = elems.iter().map(cl).collect();
    let n = elems.len();
    let both = |i: usize, j: usize| cl(&q.tensor(&closed[i], &closed[j])) == cl(&q.tensor(&elems[i], &elems[j]));
    let one = |i: usize, j: usize| cl(&q.tensor(&closed[i], &elems[j])) == cl(&q.tensor(&elems[i], &elems[j]));

    let first_bad = |ok: &(dyn Fn(usize, usize) -> bool + Sync)| {
        first_index(n, |i| (0..n).any(|j| !ok(i, j))).map(|i| (i, (0..n).find(|&j| !ok(i, j)).expect("found")))
    };
    let two_sided = first_bad(&both);
    let one_sided = first_bad(&one);
    if two_sided.is_some() != one_sided.is_some() {
        return Err(Error::Invariant("two-sided and one-sided completeness disagree".into()));
    }
    Ok(Verdict::from_witness(two_sided.map(|(i, j)| (elems[i].clone(), elems[j].clone()))))
}

/// ρ = ρ ⊓ (ρ ⊸̂ ρ): every residual between fixpoints is a fixpoint.
pub fn is_weak_complete<Q: Quantale>(q: &Q, rho: &AbstractDomain<Q::Elem>) -> Result<Verdict<(Q::Elem, Q::Elem)>> {
    if rho.ambient_id() != q.ambient_id() {
        return Err(Error::AmbientMismatch);
    }
    let fx = rho.fixpoints();
    let n = fx.len();
    let bad = |i: usize, j: usize| !rho.contains(&q.residual_unchecked(&fx[i], &fx[j]));
    let w = first_index(n, |i| (0..n).any(|j| bad(i, j)))
        .map(|i| (fx[i].clone(), fx[(0..n).find(|&j| bad(i, j)).expect("found")].clone()));
    Ok(Verdict::from_witness(w))
}
