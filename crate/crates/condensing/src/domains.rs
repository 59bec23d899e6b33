//! Abstract domains as upper closure operators, kept as meet-closed fixpoint
//! sets.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::lattice_core::{directives, Ambient, Directive};

/// An upper closure operator on some ambient lattice, identified with its
/// fixpoint set. The fixpoints are sorted in the ambient's canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbstractDomain<E> {
    ambient: u64,
    fixpoints: Vec<E>,
}

impl<E: Clone + Ord> AbstractDomain<E> {
    pub fn fixpoints(&self) -> &[E] {
        &self.fixpoints
    }

    pub fn len(&self) -> usize {
        self.fixpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixpoints.is_empty()
    }

    pub fn contains(&self, e: &E) -> bool {
        self.fixpoints.binary_search(e).is_ok()
    }

    pub fn ambient_id(&self) -> u64 {
        self.ambient
    }

    /// Builds a domain from a set already known to be meet-closed and to
    /// contain top. Callers outside this crate go through `moore_closure`.
    pub(crate) fn from_closed(ambient: u64, fixpoints: BTreeSet<E>) -> Self {
        AbstractDomain { ambient, fixpoints: fixpoints.into_iter().collect() }
    }
}

fn same_ambient<A: Ambient>(amb: &A, d: &AbstractDomain<A::Elem>) -> Result<()> {
    if d.ambient == amb.ambient_id() {
        Ok(())
    } else {
        Err(Error::AmbientMismatch)
    }
}

/// M(X): the most abstract domain whose fixpoints include X.
pub fn moore_closure<A: Ambient>(amb: &A, xs: impl IntoIterator<Item = A::Elem>) -> Result<AbstractDomain<A::Elem>> {
    moore_closure_bounded(amb, xs, usize::MAX)
}

/// `moore_closure`, failing with a size-limit error as soon as more than
/// `limit` fixpoints accumulate.
pub fn moore_closure_bounded<A: Ambient>(
    amb: &A,
    xs: impl IntoIterator<Item = A::Elem>,
    limit: usize,
) -> Result<AbstractDomain<A::Elem>> {
    let mut set: BTreeSet<A::Elem> = BTreeSet::new();
    set.insert(amb.top());
    let mut work = Vec::new();
    for x in xs {
        amb.check(&x)?;
        if set.insert(x.clone()) {
            work.push(x);
        }
    }
    saturate(amb, &mut set, work, limit)?;
    Ok(AbstractDomain::from_closed(amb.ambient_id(), set))
}

// Pairwise meets generate every finite meet, so closing the worklist under
// them is enough.
fn saturate<A: Ambient>(amb: &A, set: &mut BTreeSet<A::Elem>, mut work: Vec<A::Elem>, limit: usize) -> Result<()> {
    let over = |n: usize| Error::SizeLimit { what: "Moore closure".into(), size: n, limit };
    if set.len() > limit {
        return Err(over(set.len()));
    }
    while let Some(x) = work.pop() {
        let fresh: Vec<A::Elem> = set
            .iter()
            .map(|y| amb.meet(&x, y))
            .filter(|m| !set.contains(m))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for m in fresh {
            set.insert(m.clone());
            work.push(m);
        }
        if set.len() > limit {
            return Err(over(set.len()));
        }
    }
    Ok(())
}

/// ρ(c) = glb of the fixpoints above c.
pub fn apply_closure<A: Ambient>(amb: &A, rho: &AbstractDomain<A::Elem>, c: &A::Elem) -> Result<A::Elem> {
    same_ambient(amb, rho)?;
    amb.check(c)?;
    Ok(closure_unchecked(amb, rho, c))
}

pub(crate) fn closure_unchecked<A: Ambient>(amb: &A, rho: &AbstractDomain<A::Elem>, c: &A::Elem) -> A::Elem {
    let mut acc = amb.top();
    for y in &rho.fixpoints {
        if amb.leq(c, y) {
            acc = amb.meet(&acc, y);
        }
    }
    acc
}

/// ρ1 ⊑ ρ2: ρ1 is at least as precise, i.e. fix(ρ2) ⊆ fix(ρ1).
pub fn domain_leq<A: Ambient>(amb: &A, r1: &AbstractDomain<A::Elem>, r2: &AbstractDomain<A::Elem>) -> Result<bool> {
    same_ambient(amb, r1)?;
    same_ambient(amb, r2)?;
    Ok(r2.fixpoints.iter().all(|x| r1.contains(x)))
}

/// ⊓ of a list of domains: Moore closure of the union of the fixpoints.
pub fn reduced_product<A: Ambient>(amb: &A, domains: &[&AbstractDomain<A::Elem>]) -> Result<AbstractDomain<A::Elem>> {
    let mut set: BTreeSet<A::Elem> = BTreeSet::new();
    set.insert(amb.top());
    let mut work = Vec::new();
    for d in domains {
        same_ambient(amb, d)?;
        for x in &d.fixpoints {
            if set.insert(x.clone()) {
                work.push(x.clone());
            }
        }
    }
    // the first domain is already closed; start saturation from the rest
    if let Some(first) = domains.first() {
        if domains.len() == 1 {
            return Ok((*first).clone());
        }
    }
    saturate(amb, &mut set, work, usize::MAX)?;
    Ok(AbstractDomain::from_closed(amb.ambient_id(), set))
}

/// ⊔ of a list of domains: intersection of the fixpoint sets.
pub fn domain_join<A: Ambient>(amb: &A, domains: &[&AbstractDomain<A::Elem>]) -> Result<AbstractDomain<A::Elem>> {
    for d in domains {
        same_ambient(amb, d)?;
    }
    let Some((first, rest)) = domains.split_first() else {
        // the empty join is the most precise domain
        return identity_domain(amb);
    };
    let set: BTreeSet<A::Elem> =
        first.fixpoints.iter().filter(|x| rest.iter().all(|d| d.contains(x))).cloned().collect();
    Ok(AbstractDomain::from_closed(amb.ambient_id(), set))
}

/// The one-point domain {top}.
pub fn top_domain<A: Ambient>(amb: &A) -> AbstractDomain<A::Elem> {
    AbstractDomain::from_closed(amb.ambient_id(), BTreeSet::from([amb.top()]))
}

/// The identity closure (every element is a fixpoint); needs an enumerable
/// ambient.
pub fn identity_domain<A: Ambient>(amb: &A) -> Result<AbstractDomain<A::Elem>> {
    Ok(AbstractDomain::from_closed(amb.ambient_id(), amb.elements()?.into_iter().collect()))
}

/// Every domain of an explicit ambient: all meet-closed subsets containing
/// top. Exponential; meant for carriers of a handful of elements.
pub fn all_domains<A: Ambient>(amb: &A, max_elements: usize) -> Result<Vec<AbstractDomain<A::Elem>>> {
    let top = amb.top();
    let others: Vec<A::Elem> = amb.elements()?.into_iter().filter(|e| *e != top).collect();
    if others.len() + 1 > max_elements {
        return Err(Error::SizeLimit {
            what: "domain enumeration".into(),
            size: others.len() + 1,
            limit: max_elements,
        });
    }
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << others.len()) {
        let mut set: BTreeSet<A::Elem> = BTreeSet::from([top.clone()]);
        set.extend((0..others.len()).filter(|i| mask >> i & 1 == 1).map(|i| others[i].clone()));
        let closed = set.iter().all(|x| set.iter().all(|y| set.contains(&amb.meet(x, y))));
        if closed {
            out.push(AbstractDomain::from_closed(amb.ambient_id(), set));
        }
    }
    Ok(out)
}

/// Renders a domain as `{a, b, ...}` using the ambient's element names.
pub fn render_domain<A: Ambient>(amb: &A, d: &AbstractDomain<A::Elem>) -> String {
    let parts: Vec<String> = d.fixpoints.iter().map(|x| amb.render(x)).collect();
    format!("{{{}}}", parts.join(", "))
}

/// A domain read from text, with notes on what was added to make it one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedDomain<E> {
    pub domain: AbstractDomain<E>,
    pub warnings: Vec<String>,
}

/// Reads `fixpoints: <elem> <elem> ...` (the directive may repeat). `elems`
/// parses the text after one colon; parse errors it reports at line 1 are
/// moved to the directive's position. Top and missing meets are added, each
/// with a warning.
pub fn parse_domain<A: Ambient>(
    amb: &A,
    text: &str,
    elems: impl Fn(&str) -> Result<Vec<A::Elem>>,
) -> Result<ParsedDomain<A::Elem>> {
    let mut given: BTreeSet<A::Elem> = BTreeSet::new();
    let mut seen_directive = false;
    for d in directives(text) {
        if d.key != "fixpoints" {
            let what =
                if d.key.is_empty() { "a `key:` line".to_string() } else { format!("unknown directive `{}`", d.key) };
            return Err(Error::parse(d.line, 1, format!("expected `fixpoints:`, found {what}")));
        }
        seen_directive = true;
        let xs = elems(d.rest).map_err(|e| match e {
            Error::Parse { line: 1, col, msg } => Error::parse(d.line, d.rest_col + col - 1, msg),
            other => other,
        })?;
        given.extend(xs);
    }
    if !seen_directive {
        return Err(Error::parse(1, 1, "no `fixpoints:` directive"));
    }
    let mut warnings = Vec::new();
    if !given.contains(&amb.top()) {
        warnings.push(format!("top element {} added", amb.render(&amb.top())));
    }
    let n = given.len() + usize::from(!given.contains(&amb.top()));
    let domain = moore_closure(amb, given)?;
    if domain.len() > n {
        warnings.push(format!("{} meet(s) added to close the set", domain.len() - n));
    }
    Ok(ParsedDomain { domain, warnings })
}

/// `parse_domain` for ambients whose elements are named by `names`.
pub fn parse_named_domain<A: Ambient<Elem = usize>>(
    amb: &A,
    names: &[String],
    text: &str,
) -> Result<ParsedDomain<usize>> {
    parse_domain(amb, text, |rest| {
        let d = Directive { line: 1, key: "", rest, rest_col: 1 };
        d.tokens()
            .map(|(col, tok)| {
                names
                    .iter()
                    .position(|n| n == tok)
                    .ok_or_else(|| Error::parse(1, col, format!("undeclared element `{tok}`")))
            })
            .collect()
    })
}
