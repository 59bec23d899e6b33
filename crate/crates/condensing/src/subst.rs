//! Flat idempotent substitutions over a fixed finite alphabet, and sets of
//! them.
//!
//! A flat substitution binds variables to variables or constants only. Up to
//! mutual instantiation it is determined by the partition it induces on the
//! variables together with the constant (if any) each class is bound to, so
//! the carrier is the set of such labelled partitions. Unification is
//! union-find; the instance order is coarsening.
//!
//! Auxiliary variables only ever occur alongside a variable of interest:
//! every class that is constrained (has two members or a constant) contains
//! a variable of interest. Equivalently, substitutions bind variables of
//! interest, and auxiliary variables appear only as shared targets. This
//! keeps a fresh auxiliary variable available whenever the variables of
//! interest are unconstrained, which the residuals of the worked examples
//! rely on.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domains::{moore_closure, parse_domain, AbstractDomain, ParsedDomain};
use crate::error::{Error, Result};
use crate::lattice_core::{fresh_ambient_id, Ambient};
use crate::par::*;
use crate::syntax::{lex, Cursor, Tok};

pub const DEFAULT_MAX_CARRIER: usize = 100_000;
/// Carriers up to this many members can enumerate their powerset.
pub const MAX_ENUMERABLE_MEMBERS: usize = 12;
/// Carriers up to this size get a precomputed unification table.
pub const UNIFY_TABLE_BOUND: usize = 1024;

/// A binding target: variable index or constant index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(u16),
    Const(u16),
}

/// A canonical flat substitution: `map[v]` is the representative of v's
/// class — the class constant if it has one, otherwise the last variable of
/// the class in (interest, then auxiliary) order. `map[v] == Var(v)` means v
/// is unbound.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlatSubst {
    map: Box<[Term]>,
}

/// Outcome of unification; `None` is the failure token τ.
pub type UnifyResult = Option<FlatSubst>;

impl FlatSubst {
    pub fn target(&self, v: usize) -> Term {
        self.map[v]
    }

    pub fn num_vars(&self) -> usize {
        self.map.len()
    }

    /// Non-identity bindings `(v, target)` in variable order.
    pub fn bindings(&self) -> impl Iterator<Item = (usize, Term)> + '_ {
        self.map.iter().enumerate().filter(|&(v, t)| *t != Term::Var(v as u16)).map(|(v, t)| (v, *t))
    }

    pub fn is_empty_subst(&self) -> bool {
        self.bindings().next().is_none()
    }

    /// v and w are bound to a common term.
    pub fn same_class(&self, v: usize, w: usize) -> bool {
        self.map[v] == self.map[w]
    }

    pub fn is_ground(&self, v: usize) -> bool {
        matches!(self.map[v], Term::Const(_))
    }

    fn class_size(&self, v: usize) -> usize {
        let t = self.map[v];
        self.map.iter().filter(|&&u| u == t).count()
    }

    /// v is constrained: bound to a constant or sharing with another variable.
    pub fn mentions(&self, v: usize) -> bool {
        self.is_ground(v) || self.class_size(v) > 1
    }

    /// Every constrained class contains one of the first `nvi` variables.
    fn anchored(&self, nvi: usize) -> bool {
        (nvi..self.map.len()).all(|v| !self.mentions(v) || (0..nvi).any(|u| self.same_class(u, v)))
    }

    /// Frees every auxiliary variable whose class has no variable of
    /// interest, i.e. restricts the substitution to the variables of interest.
    fn project(mut self, nvi: usize) -> FlatSubst {
        for v in nvi..self.map.len() {
            if !(0..nvi).any(|u| self.same_class(u, v)) {
                self.map[v] = Term::Var(v as u16);
            }
        }
        self
    }
}

impl PartialOrd for FlatSubst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FlatSubst {
    // fewer bindings first, so ε is member 0
    fn cmp(&self, other: &Self) -> Ordering {
        let a = self.bindings().count();
        let b = other.bindings().count();
        a.cmp(&b).then_with(|| self.map.cmp(&other.map))
    }
}

/// Union-find over `nv` variables followed by `nc` constants.
struct Classes {
    parent: Vec<usize>,
    nv: usize,
}

impl Classes {
    fn new(nv: usize, nc: usize) -> Self {
        Classes { parent: (0..nv + nc).collect(), nv }
    }

    fn node(&self, t: Term) -> usize {
        match t {
            Term::Var(v) => v as usize,
            Term::Const(c) => self.nv + c as usize,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }

    /// Canonical substitution of the current classes; τ when a class holds
    /// two constants.
    fn canonical(mut self) -> UnifyResult {
        let n = self.parent.len();
        let mut rep: Vec<Option<Term>> = vec![None; n];
        for c in self.nv..n {
            let r = self.find(c);
            if rep[r].is_some() {
                return None;
            }
            rep[r] = Some(Term::Const((c - self.nv) as u16));
        }
        // later variables overwrite earlier ones, so the last one wins
        let mut last_var: Vec<Option<u16>> = vec![None; n];
        for v in 0..self.nv {
            let r = self.find(v);
            last_var[r] = Some(v as u16);
        }
        let map = (0..self.nv)
            .map(|v| {
                let r = self.find(v);
                rep[r].unwrap_or_else(|| Term::Var(last_var[r].expect("v is in its own class")))
            })
            .collect();
        Some(FlatSubst { map })
    }
}

/// Alphabet of a substitution carrier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarrierConfig {
    pub vars_of_interest: Vec<String>,
    pub aux_vars: Vec<String>,
    pub constants: Vec<String>,
    pub max_members: usize,
}

impl Default for CarrierConfig {
    /// X, Y of interest, Z, W auxiliary, one constant a.
    fn default() -> Self {
        CarrierConfig {
            vars_of_interest: vec!["X".into(), "Y".into()],
            aux_vars: vec!["Z".into(), "W".into()],
            constants: vec!["a".into()],
            max_members: DEFAULT_MAX_CARRIER,
        }
    }
}

impl CarrierConfig {
    pub fn new<S: AsRef<str>>(vi: &[S], aux: &[S], consts: &[S]) -> Self {
        let own = |xs: &[S]| xs.iter().map(|s| s.as_ref().to_string()).collect();
        CarrierConfig {
            vars_of_interest: own(vi),
            aux_vars: own(aux),
            constants: own(consts),
            max_members: DEFAULT_MAX_CARRIER,
        }
    }

    /// Parses `vars_of_interest:`, `aux_vars:` and `constants:` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = CarrierConfig::new::<&str>(&[], &[], &[]);
        for d in crate::lattice_core::directives(text) {
            let slot = match d.key {
                "vars_of_interest" => &mut cfg.vars_of_interest,
                "aux_vars" => &mut cfg.aux_vars,
                "constants" => &mut cfg.constants,
                other => {
                    return Err(Error::parse(d.line, 1, format!("unknown carrier directive `{other}`")));
                }
            };
            slot.extend(d.tokens().map(|(_, t)| t.to_string()));
        }
        Ok(cfg)
    }

    pub fn render(&self) -> String {
        format!(
            "vars_of_interest: {}\naux_vars: {}\nconstants: {}\n",
            self.vars_of_interest.join(" "),
            self.aux_vars.join(" "),
            self.constants.join(" ")
        )
    }
}

/// All canonical flat substitutions over an alphabet.
#[derive(Debug)]
pub struct SubCarrier {
    id: u64,
    config: CarrierConfig,
    var_names: Vec<String>,
    members: Vec<FlatSubst>,
    index: HashMap<FlatSubst, u32>,
    unify_tbl: Option<Vec<u32>>,
}

const TAU: u32 = u32::MAX;

/// Builds the carrier; see [`SubCarrier::new`].
pub fn enumerate_carrier(config: CarrierConfig) -> Result<Arc<SubCarrier>> {
    SubCarrier::new(config).map(Arc::new)
}

impl SubCarrier {
    pub fn new(config: CarrierConfig) -> Result<Self> {
        if config.vars_of_interest.is_empty() {
            return Err(Error::Precondition("at least one variable of interest is required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for name in config.vars_of_interest.iter().chain(&config.aux_vars).chain(&config.constants) {
            if !seen.insert(name.as_str()) {
                return Err(Error::Precondition(format!("name `{name}` declared twice")));
            }
            if matches!(name.as_str(), "eps" | "TOP" | "EMPTY" | "EG" | "I" | "G") {
                return Err(Error::Precondition(format!("`{name}` is reserved")));
            }
        }
        let var_names: Vec<String> = config.vars_of_interest.iter().chain(&config.aux_vars).cloned().collect();
        let nv = var_names.len();
        let nc = config.constants.len();
        if nv + nc > u16::MAX as usize {
            return Err(Error::SizeLimit { what: "alphabet".into(), size: nv + nc, limit: u16::MAX as usize });
        }

        let mut members = Vec::new();
        let mut blocks: Vec<usize> = vec![0; nv];
        let shape = Shape { nv, nvi: config.vars_of_interest.len(), nc, cap: config.max_members };
        enumerate_partitions(&shape, &mut blocks, 0, 0, &mut members)?;
        members.sort();
        let index: HashMap<FlatSubst, u32> = members.iter().enumerate().map(|(i, m)| (m.clone(), i as u32)).collect();
        if index.len() != members.len() {
            return Err(Error::Invariant("duplicate carrier members".into()));
        }

        let mut carrier = SubCarrier { id: fresh_ambient_id(), config, var_names, members, index, unify_tbl: None };
        let n = carrier.members.len();
        if n <= UNIFY_TABLE_BOUND {
            let mut tbl = vec![TAU; n * n];
            for i in 0..n {
                for j in i..n {
                    let r = match carrier.unify(&carrier.members[i], &carrier.members[j]) {
                        Some(s) => *carrier
                            .index
                            .get(&s)
                            .ok_or_else(|| Error::Invariant("carrier not closed under unification".into()))?,
                        None => TAU,
                    };
                    tbl[i * n + j] = r;
                    tbl[j * n + i] = r;
                }
            }
            carrier.unify_tbl = Some(tbl);
        }
        Ok(carrier)
    }

    pub fn config(&self) -> &CarrierConfig {
        &self.config
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[FlatSubst] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &FlatSubst {
        &self.members[i]
    }

    pub fn index_of(&self, s: &FlatSubst) -> Result<usize> {
        self.index
            .get(s)
            .map(|&i| i as usize)
            .ok_or_else(|| Error::NotInCarrier(format!("substitution with {} variables", s.num_vars())))
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn num_interest(&self) -> usize {
        self.config.vars_of_interest.len()
    }

    pub fn var_name(&self, v: usize) -> &str {
        &self.var_names[v]
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|n| n == name)
    }

    pub fn const_index(&self, name: &str) -> Option<usize> {
        self.config.constants.iter().position(|n| n == name)
    }

    /// Indices of the auxiliary variables, in pool order.
    pub fn aux_pool(&self) -> std::ops::Range<usize> {
        self.num_interest()..self.num_vars()
    }

    pub fn epsilon(&self) -> FlatSubst {
        FlatSubst { map: (0..self.num_vars()).map(|v| Term::Var(v as u16)).collect() }
    }

    /// Builds a substitution from explicit bindings `v/t`. The bindings must
    /// form an idempotent substitution: distinct sources, no source used as a
    /// target, no identity binding.
    pub fn subst_from_bindings(&self, bindings: &[(usize, Term)]) -> Result<FlatSubst> {
        let nv = self.num_vars();
        let mut bound = vec![false; nv];
        for &(v, t) in bindings {
            if v >= nv {
                return Err(Error::NotInCarrier(format!("variable #{v}")));
            }
            match t {
                Term::Var(w) if w as usize >= nv => return Err(Error::NotInCarrier(format!("variable #{w}"))),
                Term::Const(c) if c as usize >= self.config.constants.len() => {
                    return Err(Error::NotInCarrier(format!("constant #{c}")))
                }
                Term::Var(w) if w as usize == v => {
                    return Err(Error::Precondition(format!("identity binding {0}/{0}", self.var_names[v])))
                }
                _ => {}
            }
            if std::mem::replace(&mut bound[v], true) {
                return Err(Error::Precondition(format!("{} is bound twice", self.var_names[v])));
            }
        }
        for &(_, t) in bindings {
            if let Term::Var(w) = t {
                if bound[w as usize] {
                    return Err(Error::Precondition(format!(
                        "not idempotent: {} is both bound and a binding target",
                        self.var_names[w as usize]
                    )));
                }
            }
        }
        let mut cls = Classes::new(nv, self.config.constants.len());
        for &(v, t) in bindings {
            let tn = cls.node(t);
            cls.union(v, tn);
        }
        let s = cls.canonical().ok_or_else(|| Error::Invariant("idempotent bindings cannot clash".into()))?;
        if !s.anchored(self.num_interest()) {
            return Err(Error::NotInCarrier(
                "substitution constraining auxiliary variables apart from the variables of interest".into(),
            ));
        }
        Ok(s)
    }

    /// Most general unifier of two substitutions, or τ.
    pub fn unify(&self, s: &FlatSubst, t: &FlatSubst) -> UnifyResult {
        let nv = self.num_vars();
        debug_assert!(s.num_vars() == nv && t.num_vars() == nv);
        let mut cls = Classes::new(nv, self.config.constants.len());
        for v in 0..nv {
            let a = cls.node(s.map[v]);
            cls.union(v, a);
            let b = cls.node(t.map[v]);
            cls.union(v, b);
        }
        cls.canonical()
    }

    /// Unification of two members by index; `None` is τ.
    #[inline]
    pub fn unify_idx(&self, i: usize, j: usize) -> Option<usize> {
        match &self.unify_tbl {
            Some(tbl) => {
                let r = tbl[i * self.members.len() + j];
                (r != TAU).then_some(r as usize)
            }
            None => self.unify(&self.members[i], &self.members[j]).map(|s| self.index[&s] as usize),
        }
    }

    /// σ ⪯ θ: σ is an instance of θ. In the flat fragment this holds iff
    /// unifying θ into σ changes nothing.
    pub fn instance_leq(&self, s: &FlatSubst, t: &FlatSubst) -> Result<bool> {
        self.check_subst(s)?;
        self.check_subst(t)?;
        Ok(self.unify(s, t).as_ref() == Some(s))
    }

    pub fn instance_leq_idx(&self, i: usize, j: usize) -> bool {
        self.unify_idx(i, j) == Some(i)
    }

    /// Least common generalization: the common refinement of the two
    /// labelled partitions.
    pub fn anti_instance(&self, s: &FlatSubst, t: &FlatSubst) -> Result<FlatSubst> {
        self.check_subst(s)?;
        self.check_subst(t)?;
        let nv = self.num_vars();
        let mut cls = Classes::new(nv, self.config.constants.len());
        let mut first: HashMap<(Term, Term), usize> = HashMap::new();
        for v in 0..nv {
            let key = (s.map[v], t.map[v]);
            match first.get(&key) {
                Some(&w) => cls.union(v, w),
                None => {
                    first.insert(key, v);
                    if let (Term::Const(a), Term::Const(b)) = key {
                        if a == b {
                            let cn = cls.node(Term::Const(a));
                            cls.union(v, cn);
                        }
                    }
                }
            }
        }
        // the common refinement may leave classes of auxiliary variables
        // only; freeing them gives the least member above both
        let s = cls.canonical().ok_or_else(|| Error::Invariant("refinement cannot clash".into()))?;
        Ok(s.project(self.num_interest()))
    }

    fn check_subst(&self, s: &FlatSubst) -> Result<()> {
        if s.num_vars() != self.num_vars() {
            return Err(Error::AmbientMismatch);
        }
        Ok(())
    }

    /// Applies a variable renaming `m` (old index → new index, possibly
    /// non-injective) to σ and restricts the result to the variables of
    /// interest. Collapsing may force a clash, giving τ.
    pub fn rename(&self, s: &FlatSubst, m: &[usize]) -> UnifyResult {
        let nv = self.num_vars();
        let mut cls = Classes::new(nv, self.config.constants.len());
        for v in 0..nv {
            let target = match s.map[v] {
                Term::Var(w) => m[w as usize],
                Term::Const(c) => cls.node(Term::Const(c)),
            };
            cls.union(m[v], target);
        }
        cls.canonical().map(|r| r.project(self.num_interest()))
    }

    pub fn render_subst(&self, s: &FlatSubst) -> String {
        if s.is_empty_subst() {
            return "eps".into();
        }
        let parts: Vec<String> =
            s.bindings().map(|(v, t)| format!("{}/{}", self.var_names[v], self.render_term(t))).collect();
        parts.join(", ")
    }

    fn render_term(&self, t: Term) -> String {
        match t {
            Term::Var(w) => self.var_names[w as usize].clone(),
            Term::Const(c) => self.config.constants[c as usize].clone(),
        }
    }

    // ----- sets -----

    pub fn empty_set(&self) -> SubstSet {
        SubstSet { carrier: self.id, bits: FixedBitSet::with_capacity(self.len()) }
    }

    pub fn full_set(&self) -> SubstSet {
        let mut s = self.empty_set();
        s.bits.insert_range(..);
        s
    }

    pub fn set_where(&self, pred: impl Fn(&FlatSubst) -> bool) -> SubstSet {
        let mut s = self.empty_set();
        for (i, m) in self.members.iter().enumerate() {
            if pred(m) {
                s.bits.insert(i);
            }
        }
        s
    }

    pub fn singleton(&self, s: &FlatSubst) -> Result<SubstSet> {
        let i = self.index_of(s)?;
        let mut out = self.empty_set();
        out.bits.insert(i);
        Ok(out)
    }

    pub fn set_of<'a>(&self, substs: impl IntoIterator<Item = &'a FlatSubst>) -> Result<SubstSet> {
        let mut out = self.empty_set();
        for s in substs {
            out.bits.insert(self.index_of(s)?);
        }
        Ok(out)
    }

    pub fn set_from_indices(&self, idx: impl IntoIterator<Item = usize>) -> SubstSet {
        let mut out = self.empty_set();
        for i in idx {
            out.bits.insert(i);
        }
        out
    }

    pub fn check_set(&self, s: &SubstSet) -> Result<()> {
        if s.carrier == self.id && s.bits.len() == self.len() {
            Ok(())
        } else {
            Err(Error::AmbientMismatch)
        }
    }

    /// Lifted unification: every non-failing x ∧ y.
    pub fn tensor_sets(&self, x: &SubstSet, y: &SubstSet) -> Result<SubstSet> {
        self.check_set(x)?;
        self.check_set(y)?;
        Ok(self.tensor_unchecked(x, y))
    }

    pub(crate) fn tensor_unchecked(&self, x: &SubstSet, y: &SubstSet) -> SubstSet {
        let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
        let mut out = self.empty_set();
        if small.is_empty() {
            return out;
        }
        // the unit is common enough to shortcut
        if small.len() == 1 && small.bits.contains(0) {
            return large.clone();
        }
        let large_idx: Vec<usize> = large.bits.ones().collect();
        for i in small.bits.ones() {
            for &j in &large_idx {
                if let Some(k) = self.unify_idx(i, j) {
                    out.bits.insert(k);
                }
            }
        }
        out
    }

    /// a ⊸ c: members whose unification with every element of `a` fails or
    /// lands in `c`.
    pub fn residual_sets(&self, a: &SubstSet, c: &SubstSet) -> Result<SubstSet> {
        self.check_set(a)?;
        self.check_set(c)?;
        Ok(self.residual_unchecked(a, c))
    }

    pub(crate) fn residual_unchecked(&self, a: &SubstSet, c: &SubstSet) -> SubstSet {
        let a_idx: Vec<usize> = a.bits.ones().collect();
        let ok = |t: usize| a_idx.iter().all(|&s| self.unify_idx(s, t).map_or(true, |k| c.bits.contains(k)));
        let n = self.len();
        let mut out = self.empty_set();
        if n >= 4 * MIN_PAR_ITEMS {
            let keep: Vec<bool> = (0..n).into_par_iter().map(ok).collect();
            for (t, k) in keep.into_iter().enumerate() {
                if k {
                    out.bits.insert(t);
                }
            }
        } else {
            for t in 0..n {
                if ok(t) {
                    out.bits.insert(t);
                }
            }
        }
        out
    }

    /// ↓S: every member that is an instance of some element of S.
    pub fn down_closure(&self, s: &SubstSet) -> Result<SubstSet> {
        self.check_set(s)?;
        let idx: Vec<usize> = s.bits.ones().collect();
        Ok(self.set_where_idx(|i| idx.iter().any(|&j| self.instance_leq_idx(i, j))))
    }

    fn set_where_idx(&self, mut pred: impl FnMut(usize) -> bool) -> SubstSet {
        self.set_from_indices((0..self.len()).filter(|&i| pred(i)))
    }

    /// Variables constrained by some element of S.
    pub fn support(&self, s: &SubstSet) -> Vec<bool> {
        let mut out = vec![false; self.num_vars()];
        for i in s.bits.ones() {
            for (v, slot) in out.iter_mut().enumerate() {
                *slot |= self.members[i].mentions(v);
            }
        }
        out
    }

    // ----- named sets -----

    fn check_pair(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.num_vars() || y >= self.num_vars() {
            return Err(Error::NotInCarrier(format!("variable #{}", x.max(y))));
        }
        if x == y {
            return Err(Error::Precondition("independence needs two distinct variables".into()));
        }
        Ok(())
    }

    /// I_xy: x and y do not share a variable.
    pub fn independent_set(&self, x: usize, y: usize) -> Result<SubstSet> {
        self.check_pair(x, y)?;
        Ok(self.set_where(|s| !s.same_class(x, y) || s.is_ground(x)))
    }

    /// G_xy: x or y is ground.
    pub fn ground_pair_set(&self, x: usize, y: usize) -> Result<SubstSet> {
        self.check_pair(x, y)?;
        Ok(self.set_where(|s| s.is_ground(x) || s.is_ground(y)))
    }

    /// ε_G: every binding is to a ground term.
    pub fn ground_bindings_set(&self) -> SubstSet {
        self.set_where(|s| s.bindings().all(|(_, t)| matches!(t, Term::Const(_))))
    }

    /// TOP, I(X,Y), G(X,Y), EG and G(X,Y)+EG for a carrier with exactly two
    /// variables of interest.
    pub fn named_sets(&self) -> Result<NamedSets> {
        if self.num_interest() != 2 {
            return Err(Error::Precondition(format!(
                "named sets need exactly two variables of interest, found {}",
                self.num_interest()
            )));
        }
        let g = self.ground_pair_set(0, 1)?;
        let eg = self.ground_bindings_set();
        Ok(NamedSets {
            top: self.full_set(),
            i_xy: self.independent_set(0, 1)?,
            g_or_eg: g.union(&eg),
            g_xy: g,
            eps_g: eg,
        })
    }

    /// Every named set expressible over this carrier's variables of
    /// interest, with its surface syntax. Used for recognition in output.
    pub fn named_table(&self) -> Vec<(String, SubstSet)> {
        let mut out = vec![("TOP".to_string(), self.full_set()), ("EMPTY".to_string(), self.empty_set())];
        let k = self.num_interest();
        for x in 0..k {
            for y in x + 1..k {
                let (xn, yn) = (&self.var_names[x], &self.var_names[y]);
                out.push((format!("I({xn},{yn})"), self.independent_set(x, y).expect("distinct")));
                out.push((format!("G({xn},{yn})"), self.ground_pair_set(x, y).expect("distinct")));
            }
        }
        out.push(("EG".to_string(), self.ground_bindings_set()));
        out
    }

    /// Pair-sharing: M({I_xy | x ≠ y of interest}).
    pub fn psh_domain(&self) -> Result<AbstractDomain<SubstSet>> {
        let k = self.num_interest();
        if k < 2 {
            return Err(Error::Precondition("pair-sharing needs at least two variables of interest".into()));
        }
        let mut gens = Vec::new();
        for x in 0..k {
            for y in x + 1..k {
                gens.push(self.independent_set(x, y)?);
            }
        }
        moore_closure(self, gens)
    }

    /// Abstraction into pair-sharing: meet of the I_xy that contain Θ.
    pub fn psh_alpha(&self, theta: &SubstSet) -> Result<SubstSet> {
        self.check_set(theta)?;
        let k = self.num_interest();
        let mut acc = self.full_set();
        for x in 0..k {
            for y in x + 1..k {
                let i = self.independent_set(x, y)?;
                if theta.is_subset(&i) {
                    acc = acc.intersection(&i);
                }
            }
        }
        Ok(acc)
    }

    /// Best-effort readable name: a named set, a union of two, or a raw
    /// listing.
    pub fn describe_set(&self, s: &SubstSet) -> String {
        let table = self.named_table();
        if let Some((name, _)) = table.iter().find(|(_, t)| t == s) {
            return name.clone();
        }
        for (i, (a, ta)) in table.iter().enumerate() {
            for (b, tb) in &table[i + 1..] {
                if &ta.union(tb) == s {
                    return format!("{a}+{b}");
                }
            }
        }
        self.render_listing(s)
    }

    /// `{s1; s2; ...}` listing of every member.
    pub fn render_listing(&self, s: &SubstSet) -> String {
        let mut out = String::from("{");
        for (n, i) in s.bits.ones().enumerate() {
            if n > 0 {
                out.push_str("; ");
            }
            let _ = write!(out, "{}", self.render_subst(&self.members[i]));
        }
        out.push('}');
        out
    }

    // ----- sampling -----

    /// Seeded random subsets: half with varying density, half down-closures
    /// of a few random members.
    pub fn random_sets(&self, k: usize, seed: u64) -> Vec<SubstSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let densities = [0.05, 0.15, 0.3, 0.5, 0.7, 0.9];
        let n = self.len();
        (0..k)
            .map(|i| {
                if i % 2 == 0 {
                    let p = densities[(i / 2) % densities.len()];
                    self.set_where_idx(|_| rng.gen_bool(p))
                } else {
                    let picks = rng.gen_range(1..=3);
                    let seeds = self.set_from_indices((0..picks).map(|_| rng.gen_range(0..n)));
                    self.down_closure(&seeds).expect("own set")
                }
            })
            .collect()
    }

    // ----- parsing -----

    /// Parses one set expression.
    pub fn parse_set(&self, text: &str) -> Result<SubstSet> {
        let toks = lex(text, '#')?;
        let mut cur = Cursor::new(&toks);
        let s = self.parse_set_expr(&mut cur)?;
        if !cur.at_end() {
            return Err(cur.error("unexpected trailing input"));
        }
        Ok(s)
    }

    /// Parses whitespace-juxtaposed set expressions, e.g. `TOP I(X,Y)`.
    pub fn parse_set_list(&self, text: &str) -> Result<Vec<SubstSet>> {
        let toks = lex(text, '#')?;
        let mut cur = Cursor::new(&toks);
        let mut out = Vec::new();
        while !cur.at_end() {
            out.push(self.parse_set_expr(&mut cur)?);
        }
        Ok(out)
    }

    pub(crate) fn parse_set_expr(&self, cur: &mut Cursor<'_>) -> Result<SubstSet> {
        let mut acc = self.parse_set_inter(cur)?;
        while cur.eat(&Tok::Plus) {
            acc = acc.union(&self.parse_set_inter(cur)?);
        }
        Ok(acc)
    }

    pub(crate) fn parse_set_inter(&self, cur: &mut Cursor<'_>) -> Result<SubstSet> {
        let mut acc = self.parse_set_atom(cur)?;
        while cur.eat(&Tok::Amp) {
            acc = acc.intersection(&self.parse_set_atom(cur)?);
        }
        Ok(acc)
    }

    /// True if the next tokens start a set atom rather than a predicate call.
    pub(crate) fn starts_set_atom(cur: &Cursor<'_>) -> bool {
        match cur.peek() {
            Some(Tok::LBrace) => true,
            Some(Tok::Ident(s)) => matches!(s.as_str(), "TOP" | "EMPTY" | "EG" | "I" | "G"),
            _ => false,
        }
    }

    fn parse_set_atom(&self, cur: &mut Cursor<'_>) -> Result<SubstSet> {
        if cur.eat(&Tok::LParen) {
            let s = self.parse_set_expr(cur)?;
            cur.expect(&Tok::RParen, "`)`")?;
            return Ok(s);
        }
        if cur.eat(&Tok::LBrace) {
            let mut out = self.empty_set();
            if cur.eat(&Tok::RBrace) {
                return Ok(out);
            }
            loop {
                let s = self.parse_subst(cur)?;
                out.bits.insert(self.index_of(&s)?);
                if cur.eat(&Tok::Semi) {
                    continue;
                }
                cur.expect(&Tok::RBrace, "`;` or `}`")?;
                return Ok(out);
            }
        }
        let (word, line, col) = cur.ident("a set expression")?;
        match word {
            "TOP" => Ok(self.full_set()),
            "EMPTY" => Ok(self.empty_set()),
            "EG" => Ok(self.ground_bindings_set()),
            "I" | "G" => {
                cur.expect(&Tok::LParen, "`(`")?;
                let x = self.parse_var(cur)?;
                cur.expect(&Tok::Comma, "`,`")?;
                let y = self.parse_var(cur)?;
                cur.expect(&Tok::RParen, "`)`")?;
                let r = if word == "I" { self.independent_set(x, y) } else { self.ground_pair_set(x, y) };
                r.map_err(|e| Error::parse(line, col, e.to_string()))
            }
            other => Err(Error::parse(line, col, format!("unknown set name `{other}`"))),
        }
    }

    fn parse_var(&self, cur: &mut Cursor<'_>) -> Result<usize> {
        let (name, line, col) = cur.ident("a variable")?;
        self.var_index(name).ok_or_else(|| Error::parse(line, col, format!("`{name}` is not a declared variable")))
    }

    fn parse_subst(&self, cur: &mut Cursor<'_>) -> Result<FlatSubst> {
        let (line, col) = cur.here();
        if let Some(Tok::Ident(w)) = cur.peek() {
            if w == "eps" {
                cur.bump();
                return Ok(self.epsilon());
            }
        }
        let mut bindings = Vec::new();
        loop {
            let v = self.parse_var(cur)?;
            cur.expect(&Tok::Slash, "`/`")?;
            let (name, tl, tc) = cur.ident("a variable or constant")?;
            let t = if let Some(w) = self.var_index(name) {
                Term::Var(w as u16)
            } else if let Some(c) = self.const_index(name) {
                Term::Const(c as u16)
            } else {
                return Err(Error::parse(tl, tc, format!("`{name}` is neither a variable nor a constant")));
            };
            bindings.push((v, t));
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        self.subst_from_bindings(&bindings).map_err(|e| Error::parse(line, col, e.to_string()))
    }

    /// A `fixpoints:` domain file whose elements are set expressions.
    pub fn parse_domain(&self, text: &str) -> Result<ParsedDomain<SubstSet>> {
        parse_domain(self, text, |rest| self.parse_set_list(rest))
    }

    /// Parses `p/q, ...` or `eps` on its own.
    pub fn parse_subst_text(&self, text: &str) -> Result<FlatSubst> {
        let toks = lex(text, '#')?;
        let mut cur = Cursor::new(&toks);
        let s = self.parse_subst(&mut cur)?;
        if !cur.at_end() {
            return Err(cur.error("unexpected trailing input"));
        }
        Ok(s)
    }
}

struct Shape {
    nv: usize,
    nvi: usize,
    nc: usize,
    cap: usize,
}

// Restricted-growth enumeration of variable partitions, then every injective
// labelling of blocks with constants; unanchored results are skipped.
fn enumerate_partitions(
    shape: &Shape,
    blocks: &mut Vec<usize>,
    pos: usize,
    nblocks: usize,
    out: &mut Vec<FlatSubst>,
) -> Result<()> {
    if pos == shape.nv {
        let mut labels: Vec<Option<usize>> = vec![None; nblocks];
        let mut used = vec![false; shape.nc];
        return label_blocks(shape, blocks, &mut labels, &mut used, 0, out);
    }
    for b in 0..=nblocks {
        blocks[pos] = b;
        enumerate_partitions(shape, blocks, pos + 1, nblocks.max(b + 1), out)?;
    }
    Ok(())
}

fn label_blocks(
    shape: &Shape,
    blocks: &[usize],
    labels: &mut Vec<Option<usize>>,
    used: &mut Vec<bool>,
    b: usize,
    out: &mut Vec<FlatSubst>,
) -> Result<()> {
    if b == labels.len() {
        let mut cls = Classes::new(shape.nv, shape.nc);
        let mut first = vec![usize::MAX; labels.len()];
        for (v, &blk) in blocks.iter().enumerate() {
            if first[blk] == usize::MAX {
                first[blk] = v;
                if let Some(c) = labels[blk] {
                    let cn = cls.node(Term::Const(c as u16));
                    cls.union(v, cn);
                }
            } else {
                cls.union(v, first[blk]);
            }
        }
        let s = cls.canonical().expect("labels are injective");
        if s.anchored(shape.nvi) {
            if out.len() >= shape.cap {
                return Err(Error::SizeLimit {
                    what: "substitution carrier".into(),
                    size: out.len() + 1,
                    limit: shape.cap,
                });
            }
            out.push(s);
        }
        return Ok(());
    }
    labels[b] = None;
    label_blocks(shape, blocks, labels, used, b + 1, out)?;
    for c in 0..shape.nc {
        if !used[c] {
            used[c] = true;
            labels[b] = Some(c);
            label_blocks(shape, blocks, labels, used, b + 1, out)?;
            used[c] = false;
        }
    }
    labels[b] = None;
    Ok(())
}

/// A subset of a carrier. The canonical order puts larger sets first, then
/// compares member indices lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubstSet {
    carrier: u64,
    bits: FixedBitSet,
}

impl SubstSet {
    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn is_subset(&self, other: &SubstSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn union(&self, other: &SubstSet) -> SubstSet {
        let mut out = self.clone();
        out.bits.union_with(&other.bits);
        out
    }

    pub fn intersection(&self, other: &SubstSet) -> SubstSet {
        let mut out = self.clone();
        out.bits.intersect_with(&other.bits);
        out
    }

    pub fn carrier_id(&self) -> u64 {
        self.carrier
    }
}

impl PartialOrd for SubstSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SubstSet {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .len()
            .cmp(&self.len())
            .then_with(|| self.bits.ones().cmp(other.bits.ones()))
            .then_with(|| self.carrier.cmp(&other.carrier))
    }
}

/// The sets named in the worked examples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedSets {
    pub top: SubstSet,
    pub i_xy: SubstSet,
    pub g_xy: SubstSet,
    pub eps_g: SubstSet,
    pub g_or_eg: SubstSet,
}

impl Ambient for SubCarrier {
    type Elem = SubstSet;

    fn ambient_id(&self) -> u64 {
        self.id
    }
    fn top(&self) -> SubstSet {
        self.full_set()
    }
    fn bottom(&self) -> SubstSet {
        self.empty_set()
    }
    fn leq(&self, a: &SubstSet, b: &SubstSet) -> bool {
        a.is_subset(b)
    }
    fn meet(&self, a: &SubstSet, b: &SubstSet) -> SubstSet {
        a.intersection(b)
    }
    fn join(&self, a: &SubstSet, b: &SubstSet) -> SubstSet {
        a.union(b)
    }
    fn check(&self, a: &SubstSet) -> Result<()> {
        self.check_set(a)
    }
    fn elements(&self) -> Result<Vec<SubstSet>> {
        let n = self.len();
        if n > MAX_ENUMERABLE_MEMBERS {
            return Err(Error::SizeLimit {
                what: format!("enumerating every subset of a {n}-member substitution carrier"),
                size: n,
                limit: MAX_ENUMERABLE_MEMBERS,
            });
        }
        Ok((0u64..1 << n).map(|mask| self.set_from_indices((0..n).filter(|i| mask >> i & 1 == 1))).collect())
    }
    fn render(&self, a: &SubstSet) -> String {
        self.describe_set(a)
    }
}
