//! Commutative quantales, residuation, and law checking.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::lattice_core::{directives, Ambient, FiniteLattice};
use crate::par::*;
use crate::subst::{SubCarrier, SubstSet};

/// A commutative quantale over an ambient lattice.
pub trait Quantale: Ambient {
    fn tensor(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn unit(&self) -> Option<Self::Elem>;
    /// a ⊸ c, the greatest b with a ⊗ b ≤ c. Arguments are assumed valid.
    fn residual_unchecked(&self, a: &Self::Elem, c: &Self::Elem) -> Self::Elem;
    /// Elements the law checks quantify over.
    fn law_sample(&self, cfg: &SampleConfig) -> LawSample<Self::Elem>;
}

/// a ⊸ c with membership checks.
pub fn residual<Q: Quantale>(q: &Q, a: &Q::Elem, c: &Q::Elem) -> Result<Q::Elem> {
    q.check(a)?;
    q.check(c)?;
    Ok(q.residual_unchecked(a, c))
}

/// Knobs for sampled law checks on ambients too large to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleConfig {
    /// number of seeded random subsets added to the sample
    pub k: usize,
    pub seed: u64,
    /// how many of the random subsets (and how many singletons) also enter
    /// the triple-quantified checks
    pub triple_k: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { k: 64, seed: 0, triple_k: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct LawSample<E> {
    /// used for laws over one or two elements
    pub pairs: Vec<E>,
    /// used for laws over three elements
    pub triples: Vec<E>,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation<E> {
    pub law: &'static str,
    pub witness: Vec<E>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawReport<E> {
    pub violations: Vec<Violation<E>>,
    /// (law, number of instances checked), in check order
    pub checked: Vec<(&'static str, usize)>,
    pub exhaustive: bool,
}

impl<E> LawReport<E> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Collects the first witness of each law, scanning in sample order.
struct Checker<'s, E> {
    report: LawReport<E>,
    sample: &'s LawSample<E>,
}

impl<'s, E: Clone + Send + Sync> Checker<'s, E> {
    fn new(sample: &'s LawSample<E>) -> Self {
        Checker {
            report: LawReport { violations: Vec::new(), checked: Vec::new(), exhaustive: sample.exhaustive },
            sample,
        }
    }

    fn one(&mut self, law: &'static str, holds: impl Fn(&E) -> bool + Sync) {
        let xs = &self.sample.pairs;
        let w = first_index(xs.len(), |i| !holds(&xs[i]));
        self.finish(law, xs.len(), w.map(|i| vec![xs[i].clone()]));
    }

    fn two(&mut self, law: &'static str, holds: impl Fn(&E, &E) -> bool + Sync) {
        let xs = &self.sample.pairs;
        let n = xs.len();
        let w = first_index(n, |i| (0..n).any(|j| !holds(&xs[i], &xs[j]))).map(|i| {
            let j = (0..n).find(|&j| !holds(&xs[i], &xs[j])).expect("found above");
            vec![xs[i].clone(), xs[j].clone()]
        });
        self.finish(law, n * n, w);
    }

    fn three(&mut self, law: &'static str, holds: impl Fn(&E, &E, &E) -> bool + Sync) {
        let xs = &self.sample.triples;
        let n = xs.len();
        let bad = |i: usize| (0..n).find_map(|j| (0..n).find(|&k| !holds(&xs[i], &xs[j], &xs[k])).map(|k| (j, k)));
        let w = first_index(n, |i| bad(i).is_some()).map(|i| {
            let (j, k) = bad(i).expect("found above");
            vec![xs[i].clone(), xs[j].clone(), xs[k].clone()]
        });
        self.finish(law, n * n * n, w);
    }

    fn finish(&mut self, law: &'static str, count: usize, witness: Option<Vec<E>>) {
        self.report.checked.push((law, count));
        if let Some(witness) = witness {
            self.report.violations.push(Violation { law, witness });
        }
    }
}

/// Smallest i < n with `bad(i)`, scanning in parallel when worthwhile.
pub(crate) fn first_index(n: usize, bad: impl Fn(usize) -> bool + Sync) -> Option<usize> {
    if n >= MIN_PAR_ITEMS {
        let flags: Vec<bool> = (0..n).into_par_iter().map(&bad).collect();
        flags.iter().position(|&b| b)
    } else {
        (0..n).find(|&i| bad(i))
    }
}

/// Checks commutativity, associativity, binary additivity, bottom
/// preservation and the unit law; a missing unit is itself reported.
pub fn verify_quantale<Q: Quantale>(q: &Q, cfg: &SampleConfig) -> LawReport<Q::Elem> {
    let sample = q.law_sample(cfg);
    let mut c = Checker::new(&sample);
    c.two("commutativity", |a, b| q.tensor(a, b) == q.tensor(b, a));
    c.three("associativity", |a, b, d| q.tensor(&q.tensor(a, b), d) == q.tensor(a, &q.tensor(b, d)));
    c.three("binary additivity", |a, b, d| q.tensor(a, &q.join(b, d)) == q.join(&q.tensor(a, b), &q.tensor(a, d)));
    let bot = q.bottom();
    c.one("bottom preservation", |a| q.tensor(a, &bot) == bot);
    match q.unit() {
        Some(u) => c.one("unit", |a| q.tensor(&u, a) == *a),
        None => c.finish("unit", 0, Some(Vec::new())),
    }
    c.report
}

/// Checks the basic laws of linear implication, the adjunction, and that
/// x ↦ (x ⊸ a) ⊸ a is an upper closure for every a.
pub fn verify_linear_laws<Q: Quantale>(q: &Q, cfg: &SampleConfig) -> LawReport<Q::Elem> {
    let sample = q.law_sample(cfg);
    let mut c = Checker::new(&sample);
    let r = |a: &Q::Elem, b: &Q::Elem| q.residual_unchecked(a, b);
    let top = q.top();
    let bot = q.bottom();

    c.three("adjunction", |a, b, d| q.leq(&q.tensor(a, b), d) == q.leq(b, &r(a, d)));
    c.two("(i) a*(a-oc) <= c", |a, d| q.leq(&q.tensor(a, &r(a, d)), d));
    c.three("(ii) a-o(b-oc) = (b*a)-oc", |a, b, d| r(a, &r(b, d)) == r(&q.tensor(b, a), d));
    c.three("(iii) a-o(x/\\y) = (a-ox)/\\(a-oy)", |a, x, y| r(a, &q.meet(x, y)) == q.meet(&r(a, x), &r(a, y)));
    c.one("(iii) a-o top = top", |a| r(a, &top) == top);
    c.three("(iv) (x\\/y)-oc = (x-oc)/\\(y-oc)", |x, y, d| r(&q.join(x, y), d) == q.meet(&r(x, d), &r(y, d)));
    c.one("(iv) bottom-oc = top", |d| r(&bot, d) == top);
    c.three("(v) a-o(b-oc) = b-o(a-oc)", |a, b, d| r(a, &r(b, d)) == r(b, &r(a, d)));
    if let Some(u) = q.unit() {
        c.one("(vi) 1-oa = a", |a| r(&u, a) == *a);
    }
    c.two("(vii) c <= (c-oa)-oa", |d, a| q.leq(d, &r(&r(d, a), a)));
    c.two("(viii) ((c-oa)-oa)-oa = c-oa", |d, a| r(&r(&r(d, a), a), a) == r(d, a));
    c.three("(ix) b<=c => a*b <= a*c", |a, b, d| !q.leq(b, d) || q.leq(&q.tensor(a, b), &q.tensor(a, d)));

    let cl = |x: &Q::Elem, a: &Q::Elem| r(&r(x, a), a);
    c.three("closure monotone", |x, y, a| !q.leq(x, y) || q.leq(&cl(x, a), &cl(y, a)));
    c.two("closure idempotent", |x, a| cl(&cl(x, a), a) == cl(x, a));
    c.two("closure extensive", |x, a| q.leq(x, &cl(x, a)));
    c.report
}

/// A quantale over an explicit finite lattice with a tabulated tensor.
#[derive(Debug, Clone)]
pub struct ExplicitQuantale {
    lattice: FiniteLattice,
    table: Vec<u32>,
    unit: Option<usize>,
    residuals: Vec<u32>,
}

impl ExplicitQuantale {
    /// `table[a * n + b]` is a ⊗ b. The laws are not enforced here; run
    /// [`verify_quantale`] to check them.
    pub fn from_table(lattice: FiniteLattice, table: Vec<usize>, unit: Option<usize>) -> Result<Self> {
        let n = lattice.len();
        if table.len() != n * n {
            return Err(Error::Precondition(format!("tensor table needs {} entries, got {}", n * n, table.len())));
        }
        for &t in &table {
            lattice.check_index(t)?;
        }
        if let Some(u) = unit {
            lattice.check_index(u)?;
        }
        let table: Vec<u32> = table.into_iter().map(|t| t as u32).collect();
        let mut q = ExplicitQuantale { lattice, table, unit, residuals: Vec::new() };
        q.residuals = (0..n * n).map(|ac| q.residual_by_enumeration(ac / n, ac % n) as u32).collect();
        Ok(q)
    }

    /// The meet quantale: ⊗ = ∧ with unit top (a quantale exactly when the
    /// lattice is distributive).
    pub fn meet(lattice: FiniteLattice) -> Result<Self> {
        let n = lattice.len();
        let table = (0..n * n).map(|ab| lattice.meet(ab / n, ab % n)).collect();
        let top = lattice.top();
        Self::from_table(lattice, table, Some(top))
    }

    /// Parses the lattice format plus `tensor: a b -> c`,
    /// `tensor-builtin: meet` and `unit: e` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let lattice = FiniteLattice::parse(text)?;
        let n = lattice.len();
        let mut table: Vec<Option<usize>> = vec![None; n * n];
        let mut builtin = None;
        let mut unit = None;
        let elem = |line: usize, col: usize, name: &str| {
            lattice.index_of(name).map_err(|_| Error::parse(line, col, format!("undeclared element `{name}`")))
        };
        for d in directives(text) {
            match d.key {
                "elements" | "order" => {}
                "tensor" => {
                    let toks: Vec<(usize, &str)> = d.tokens().collect();
                    if toks.len() != 4 || toks[2].1 != "->" {
                        return Err(Error::parse(d.line, d.rest_col, "expected `tensor: a b -> c`"));
                    }
                    let a = elem(d.line, toks[0].0, toks[0].1)?;
                    let b = elem(d.line, toks[1].0, toks[1].1)?;
                    let c = elem(d.line, toks[3].0, toks[3].1)?;
                    for slot in [a * n + b, b * n + a] {
                        match table[slot] {
                            Some(prev) if prev != c => {
                                return Err(Error::parse(
                                    d.line,
                                    toks[3].0,
                                    format!("conflicting tensor entry for ({}, {})", toks[0].1, toks[1].1),
                                ))
                            }
                            _ => table[slot] = Some(c),
                        }
                    }
                }
                "tensor-builtin" => {
                    let toks: Vec<(usize, &str)> = d.tokens().collect();
                    match toks.as_slice() {
                        [(_, "meet")] => builtin = Some("meet"),
                        _ => return Err(Error::parse(d.line, d.rest_col, "unknown tensor builtin (expected `meet`)")),
                    }
                }
                "unit" => {
                    let toks: Vec<(usize, &str)> = d.tokens().collect();
                    match toks.as_slice() {
                        [(col, name)] => unit = Some(elem(d.line, *col, name)?),
                        _ => return Err(Error::parse(d.line, d.rest_col, "expected a single unit element")),
                    }
                }
                "" => return Err(Error::parse(d.line, 1, "expected `key: value`")),
                other => return Err(Error::parse(d.line, 1, format!("unknown directive `{other}`"))),
            }
        }
        if builtin.is_some() {
            if table.iter().any(Option::is_some) {
                return Err(Error::parse(1, 1, "give either a tensor table or `tensor-builtin`, not both"));
            }
            let mut q = Self::meet(lattice)?;
            if unit.is_some() {
                q.unit = unit;
            }
            return Ok(q);
        }
        let mut full = Vec::with_capacity(n * n);
        for (slot, t) in table.iter().enumerate() {
            match t {
                Some(c) => full.push(*c),
                None => {
                    return Err(Error::parse(
                        1,
                        1,
                        format!("tensor undefined for ({}, {})", lattice.name(slot / n), lattice.name(slot % n)),
                    ))
                }
            }
        }
        Self::from_table(lattice, full, unit)
    }

    pub fn lattice(&self) -> &FiniteLattice {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    #[inline]
    pub fn tensor_idx(&self, a: usize, b: usize) -> usize {
        self.table[a * self.len() + b] as usize
    }

    #[inline]
    pub fn residual_idx(&self, a: usize, c: usize) -> usize {
        self.residuals[a * self.len() + c] as usize
    }

    fn residual_by_enumeration(&self, a: usize, c: usize) -> usize {
        let n = self.len();
        (0..n)
            .filter(|&b| self.lattice.leq(self.tensor_idx(a, b), c))
            .fold(self.lattice.bottom(), |acc, b| self.lattice.join(acc, b))
    }

    /// Text form accepted by [`ExplicitQuantale::parse`].
    pub fn render(&self) -> String {
        let l = &self.lattice;
        let mut out = format!("elements: {}\n", l.names().join(" "));
        for a in 0..l.len() {
            for b in 0..l.len() {
                if a != b && l.leq(a, b) {
                    out.push_str(&format!("order: {}<={}\n", l.name(a), l.name(b)));
                }
            }
        }
        for a in 0..l.len() {
            for b in a..l.len() {
                out.push_str(&format!("tensor: {} {} -> {}\n", l.name(a), l.name(b), l.name(self.tensor_idx(a, b))));
            }
        }
        if let Some(u) = self.unit {
            out.push_str(&format!("unit: {}\n", l.name(u)));
        }
        out
    }
}

/// Largest lattice `all_quantales` will search.
pub const MAX_QUANTALE_SEARCH: usize = 6;

/// Every commutative unital quantale on `lattice`: all symmetric tables with
/// a unit that preserve bottom and binary joins and are associative.
/// Exhaustive over the tensor entries not fixed by bottom and unit.
pub fn all_quantales(lattice: &FiniteLattice) -> Result<Vec<ExplicitQuantale>> {
    let n = lattice.len();
    if n > MAX_QUANTALE_SEARCH {
        return Err(Error::SizeLimit { what: "quantale search".into(), size: n, limit: MAX_QUANTALE_SEARCH });
    }
    let bot = lattice.bottom();
    let mut out = Vec::new();
    for u in (0..n).filter(|&u| u != bot || n == 1) {
        let mut t = vec![usize::MAX; n * n];
        for x in 0..n {
            for (a, b, v) in [(bot, x, bot), (x, bot, bot), (u, x, x), (x, u, x)] {
                t[a * n + b] = v;
            }
        }
        let free: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).filter(|&(a, b)| t[a * n + b] == usize::MAX).collect();
        let mut choice = vec![0usize; free.len()];
        loop {
            for (&(a, b), &v) in free.iter().zip(&choice) {
                t[a * n + b] = v;
                t[b * n + a] = v;
            }
            if is_quantale_table(lattice, &t) {
                out.push(ExplicitQuantale::from_table(lattice.clone(), t.clone(), Some(u))?);
            }
            // odometer over the free entries
            let mut i = 0;
            while i < choice.len() && choice[i] + 1 == n {
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                break;
            }
            choice[i] += 1;
        }
    }
    Ok(out)
}

fn is_quantale_table(l: &FiniteLattice, t: &[usize]) -> bool {
    let n = l.len();
    let m = |a: usize, b: usize| t[a * n + b];
    (0..n).all(|a| (0..n).all(|b| (0..n).all(|c| m(a, l.join(b, c)) == l.join(m(a, b), m(a, c)))))
        && (0..n).all(|a| (0..n).all(|b| (0..n).all(|c| m(m(a, b), c) == m(a, m(b, c)))))
}

impl Ambient for ExplicitQuantale {
    type Elem = usize;

    fn ambient_id(&self) -> u64 {
        self.lattice.ambient_id()
    }
    fn top(&self) -> usize {
        self.lattice.top()
    }
    fn bottom(&self) -> usize {
        self.lattice.bottom()
    }
    fn leq(&self, a: &usize, b: &usize) -> bool {
        self.lattice.leq(*a, *b)
    }
    fn meet(&self, a: &usize, b: &usize) -> usize {
        self.lattice.meet(*a, *b)
    }
    fn join(&self, a: &usize, b: &usize) -> usize {
        self.lattice.join(*a, *b)
    }
    fn check(&self, a: &usize) -> Result<()> {
        self.lattice.check_index(*a)
    }
    fn elements(&self) -> Result<Vec<usize>> {
        Ok((0..self.len()).collect())
    }
    fn render(&self, a: &usize) -> String {
        Ambient::render(&self.lattice, a)
    }
}

impl Quantale for ExplicitQuantale {
    fn tensor(&self, a: &usize, b: &usize) -> usize {
        self.tensor_idx(*a, *b)
    }
    fn unit(&self) -> Option<usize> {
        self.unit
    }
    fn residual_unchecked(&self, a: &usize, c: &usize) -> usize {
        self.residual_idx(*a, *c)
    }
    fn law_sample(&self, _cfg: &SampleConfig) -> LawSample<usize> {
        let all: Vec<usize> = (0..self.len()).collect();
        LawSample { pairs: all.clone(), triples: all, exhaustive: true }
    }
}

impl Quantale for SubCarrier {
    fn tensor(&self, a: &SubstSet, b: &SubstSet) -> SubstSet {
        self.tensor_unchecked(a, b)
    }
    fn unit(&self) -> Option<SubstSet> {
        Some(self.set_from_indices([0]))
    }
    fn residual_unchecked(&self, a: &SubstSet, c: &SubstSet) -> SubstSet {
        SubCarrier::residual_unchecked(self, a, c)
    }
    /// Singletons, the named sets, and `k` seeded random subsets. Triples
    /// use the named sets, the first `triple_k` singletons and the first
    /// `triple_k` random subsets.
    fn law_sample(&self, cfg: &SampleConfig) -> LawSample<SubstSet> {
        let named: Vec<SubstSet> = self.named_table().into_iter().map(|(_, s)| s).collect();
        let random = self.random_sets(cfg.k, cfg.seed);
        let singletons: Vec<SubstSet> = (0..self.len()).map(|i| self.set_from_indices([i])).collect();

        let mut seen = BTreeSet::new();
        let mut pairs = Vec::new();
        for s in singletons.iter().chain(&named).chain(&random) {
            if seen.insert(s.clone()) {
                pairs.push(s.clone());
            }
        }
        let mut seen = BTreeSet::new();
        let mut triples = Vec::new();
        for s in singletons.iter().take(cfg.triple_k).chain(&named).chain(random.iter().take(cfg.triple_k)) {
            if seen.insert(s.clone()) {
                triples.push(s.clone());
            }
        }
        LawSample { pairs, triples, exhaustive: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_all_quantales_on_short_chains() {
        let counts: Vec<usize> =
            (1..=3).map(|n| all_quantales(&FiniteLattice::chain(n).unwrap()).unwrap().len()).collect();
        // on the 3-chain: min, Łukasiewicz, and unit in the middle with top idempotent
        assert_eq!(counts, [1, 1, 3]);
        for (_, l) in FiniteLattice::small_lattices() {
            let qs = all_quantales(&l).unwrap();
            assert!(qs.iter().all(|q| verify_quantale(q, &SampleConfig::default()).passed()));
            let top = l.top();
            let meet_is_there = qs.iter().any(|q| {
                q.unit() == Some(top) && (0..l.len()).all(|a| (0..l.len()).all(|b| q.tensor_idx(a, b) == l.meet(a, b)))
            });
            let distributive = (0..l.len()).all(|a| {
                (0..l.len())
                    .all(|b| (0..l.len()).all(|c| l.meet(a, l.join(b, c)) == l.join(l.meet(a, b), l.meet(a, c))))
            });
            assert_eq!(meet_is_there, distributive);
        }
        assert!(all_quantales(&FiniteLattice::chain(7).unwrap()).is_err());
    }
    use crate::subst::CarrierConfig;

    fn b4_meet() -> ExplicitQuantale {
        ExplicitQuantale::meet(FiniteLattice::powerset(&["p", "q"]).unwrap()).unwrap()
    }

    #[test]
    fn boolean_meet_quantale_passes() {
        let q = b4_meet();
        let cfg = SampleConfig::default();
        assert!(verify_quantale(&q, &cfg).passed());
        let lin = verify_linear_laws(&q, &cfg);
        assert!(lin.passed(), "{:?}", lin.violations);
    }

    #[test]
    fn union_tensor_breaks_bottom() {
        let l = FiniteLattice::powerset(&["p", "q"]).unwrap();
        let table = (0..16).map(|ab| l.join(ab / 4, ab % 4)).collect();
        let q = ExplicitQuantale::from_table(l, table, Some(0)).unwrap();
        let rep = verify_quantale(&q, &SampleConfig::default());
        let bottom = rep.violations.iter().find(|v| v.law == "bottom preservation").unwrap();
        // least witness: {p} ⊗ ∅ = {p}
        assert_eq!(bottom.witness, vec![1]);
    }

    #[test]
    fn residual_by_brute_force() {
        let q = b4_meet();
        // in a Boolean algebra a ⊸ c = ¬a ∨ c
        for a in 0..4usize {
            for c in 0..4usize {
                assert_eq!(residual(&q, &a, &c).unwrap(), (!a & 3) | c);
            }
        }
        assert_eq!(residual(&q, &3, &1).unwrap(), 1);
    }

    #[test]
    fn parses_tables_and_builtins() {
        let text = "elements: 0 1 2\norder: 0<=1<=2\n\
                    tensor: 0 0 -> 0\ntensor: 0 1 -> 0\ntensor: 0 2 -> 0\n\
                    tensor: 1 1 -> 0\ntensor: 1 2 -> 1\ntensor: 2 2 -> 2\nunit: 2\n";
        let q = ExplicitQuantale::parse(text).unwrap();
        assert!(verify_quantale(&q, &SampleConfig::default()).passed());
        assert!(verify_linear_laws(&q, &SampleConfig::default()).passed());
        let again = ExplicitQuantale::parse(&q.render()).unwrap();
        assert_eq!(again.table, q.table);

        let b = ExplicitQuantale::parse("elements: 0 1\norder: 0<=1\ntensor-builtin: meet\n").unwrap();
        assert_eq!(b.unit(), Some(1));

        assert!(ExplicitQuantale::parse("elements: 0 1\norder: 0<=1\ntensor: 0 0 -> 0\n").is_err());
        assert!(ExplicitQuantale::parse("elements: 0 1\norder: 0<=1\ntensor: 0 1 -> 0\ntensor: 1 0 -> 1\n").is_err());
    }

    #[test]
    fn substitution_quantale_sampled_laws() {
        let c = SubCarrier::new(CarrierConfig::default()).unwrap();
        let cfg = SampleConfig::default();
        let q = verify_quantale(&c, &cfg);
        assert!(q.passed(), "{:?}", q.violations);
        let lin = verify_linear_laws(&c, &cfg);
        assert!(lin.passed(), "{:?}", lin.violations);
    }

    #[test]
    fn substitution_residual_matches_generic_definition() {
        // small carriers: enumerate every subset b and take the union of
        // those with a ⊗ b ⊆ c
        let configs = [
            CarrierConfig::new(&["X", "Y"], &["Z"], &[]),
            CarrierConfig::new(&["X", "Y"], &[], &["a"]),
            CarrierConfig::new(&["X"], &["Z"], &["a"]),
        ];
        for cfg in configs {
            let c = SubCarrier::new(cfg).unwrap();
            let n = c.len();
            assert!(n <= 12);
            let subsets: Vec<SubstSet> =
                (0u32..1 << n).map(|m| c.set_from_indices((0..n).filter(|i| m >> i & 1 == 1))).collect();
            for a in &subsets {
                for cc in &subsets {
                    let mut lub = c.empty_set();
                    for b in &subsets {
                        if c.tensor_unchecked(a, b).is_subset(cc) {
                            lub = lub.union(b);
                        }
                    }
                    assert_eq!(c.residual_unchecked(a, cc), lub);
                }
            }
        }
    }
}
