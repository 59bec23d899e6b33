//! Explicit finite complete lattices.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::atomic::{AtomicU64, Ordering};

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};

static NEXT_AMBIENT: AtomicU64 = AtomicU64::new(1);

pub(crate) fn fresh_ambient_id() -> u64 {
    NEXT_AMBIENT.fetch_add(1, Ordering::Relaxed)
}

/// A complete lattice that domains and quantales can live over.
///
/// `Elem`'s `Ord` is the canonical element ordering: every set-valued result
/// is reported in it and every "least witness" is least with respect to it.
pub trait Ambient: Sync {
    type Elem: Clone + Eq + Ord + Hash + Debug + Send + Sync;

    /// Identity used to detect mixing values from different ambients.
    fn ambient_id(&self) -> u64;
    fn top(&self) -> Self::Elem;
    fn bottom(&self) -> Self::Elem;
    fn leq(&self, a: &Self::Elem, b: &Self::Elem) -> bool;
    fn meet(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn join(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn check(&self, a: &Self::Elem) -> Result<()>;
    /// Every element of the ambient, or a size-limit error when the ambient
    /// is too large to enumerate.
    fn elements(&self) -> Result<Vec<Self::Elem>>;
    fn render(&self, a: &Self::Elem) -> String;
}

/// Lub/glb tables are precomputed up to this many elements by default.
pub const DEFAULT_TABLE_BOUND: usize = 4096;

#[derive(Debug, Clone)]
pub struct FiniteLattice {
    id: u64,
    names: Vec<String>,
    index: HashMap<String, usize>,
    /// `up[a]` holds every b with a <= b.
    up: Vec<FixedBitSet>,
    up_count: Vec<usize>,
    down: Vec<FixedBitSet>,
    down_count: Vec<usize>,
    join_tbl: Option<Vec<u32>>,
    meet_tbl: Option<Vec<u32>>,
    top: usize,
    bottom: usize,
}

impl FiniteLattice {
    /// Builds and validates a lattice from element names and generating
    /// `a <= b` pairs; reflexive/transitive closure is applied here.
    pub fn new<S: AsRef<str>>(names: &[S], order: &[(usize, usize)]) -> Result<Self> {
        Self::with_table_bound(names, order, DEFAULT_TABLE_BOUND)
    }

    pub fn with_table_bound<S: AsRef<str>>(names: &[S], order: &[(usize, usize)], table_bound: usize) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::NotALattice { reason: "empty carrier has no top", a: "-".into(), b: "-".into() });
        }
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = HashMap::with_capacity(n);
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::NotALattice { reason: "duplicate element", a: name.clone(), b: name.clone() });
            }
        }

        let mut up = vec![FixedBitSet::with_capacity(n); n];
        for (i, row) in up.iter_mut().enumerate() {
            row.insert(i);
        }
        for &(a, b) in order {
            if a >= n || b >= n {
                return Err(Error::NotInCarrier(format!("index {}", a.max(b))));
            }
            up[a].insert(b);
        }
        // Warshall on rows: if k is above i, everything above k is above i.
        for k in 0..n {
            let row_k = up[k].clone();
            for (i, row) in up.iter_mut().enumerate() {
                if i != k && row.contains(k) {
                    row.union_with(&row_k);
                }
            }
        }
        let mut down = vec![FixedBitSet::with_capacity(n); n];
        for (a, row) in up.iter().enumerate() {
            for b in row.ones() {
                if a != b && up[b].contains(a) {
                    return Err(Error::NotALattice {
                        reason: "order is not antisymmetric",
                        a: names[a].clone(),
                        b: names[b].clone(),
                    });
                }
                down[b].insert(a);
            }
        }
        let up_count: Vec<usize> = up.iter().map(|r| r.count_ones(..)).collect();
        let down_count: Vec<usize> = down.iter().map(|r| r.count_ones(..)).collect();

        let mut lat = FiniteLattice {
            id: fresh_ambient_id(),
            names,
            index,
            up,
            up_count,
            down,
            down_count,
            join_tbl: None,
            meet_tbl: None,
            top: 0,
            bottom: 0,
        };

        let everything: FixedBitSet = (0..n).collect();
        lat.bottom = lat.least_of(&everything).ok_or_else(|| Error::NotALattice {
            reason: "no bottom element",
            a: lat.names[0].clone(),
            b: lat.names[n - 1].clone(),
        })?;
        lat.top = lat.greatest_of(&everything).ok_or_else(|| Error::NotALattice {
            reason: "no top element",
            a: lat.names[0].clone(),
            b: lat.names[n - 1].clone(),
        })?;

        // Binary joins plus a bottom make a finite poset complete; meets are
        // checked as well so the error names the first bad pair either way.
        let tabulate = n <= table_bound;
        let mut jt = if tabulate { vec![0u32; n * n] } else { Vec::new() };
        let mut mt = if tabulate { vec![0u32; n * n] } else { Vec::new() };
        for a in 0..n {
            for b in a..n {
                let j = lat.binary_join(a, b).ok_or_else(|| Error::NotALattice {
                    reason: "no least upper bound",
                    a: lat.names[a].clone(),
                    b: lat.names[b].clone(),
                })?;
                let m = lat.binary_meet(a, b).ok_or_else(|| Error::NotALattice {
                    reason: "no greatest lower bound",
                    a: lat.names[a].clone(),
                    b: lat.names[b].clone(),
                })?;
                if tabulate {
                    jt[a * n + b] = j as u32;
                    jt[b * n + a] = j as u32;
                    mt[a * n + b] = m as u32;
                    mt[b * n + a] = m as u32;
                }
            }
        }
        if tabulate {
            lat.join_tbl = Some(jt);
            lat.meet_tbl = Some(mt);
        }
        Ok(lat)
    }

    /// Parses the `elements:` / `order:` text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut order_tokens: Vec<(usize, usize, String)> = Vec::new();
        for d in directives(text) {
            match d.key {
                "elements" => {
                    for (col, tok) in d.tokens() {
                        if names.iter().any(|n| n == tok) {
                            return Err(Error::parse(d.line, col, format!("element `{tok}` declared twice")));
                        }
                        names.push(tok.to_string());
                    }
                }
                "order" => {
                    for (col, tok) in d.tokens() {
                        order_tokens.push((d.line, col, tok.to_string()));
                    }
                }
                // other keys belong to formats layered on top of this one
                _ => {}
            }
        }
        let lookup = |line: usize, col: usize, name: &str| {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::parse(line, col, format!("undeclared element `{name}`")))
        };
        let mut pairs = Vec::new();
        for (line, col, tok) in &order_tokens {
            let parts: Vec<&str> = tok.split("<=").collect();
            if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
                return Err(Error::parse(*line, *col, format!("expected `a<=b`, found `{tok}`")));
            }
            for w in parts.windows(2) {
                pairs.push((lookup(*line, *col, w[0])?, lookup(*line, *col, w[1])?));
            }
        }
        if names.is_empty() {
            return Err(Error::parse(1, 1, "no `elements:` directive"));
        }
        FiniteLattice::new(&names, &pairs)
    }

    /// The n-element chain `0 < 1 < ... < n-1`.
    pub fn chain(n: usize) -> Result<Self> {
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let order: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        FiniteLattice::new(&names, &order)
    }

    /// Subsets of `atoms` under inclusion; element i is the subset whose
    /// bitmask is i.
    pub fn powerset<S: AsRef<str>>(atoms: &[S]) -> Result<Self> {
        let k = atoms.len();
        let n = 1usize << k;
        let names: Vec<String> = (0..n)
            .map(|m| {
                let inner: Vec<&str> = (0..k).filter(|b| m >> b & 1 == 1).map(|b| atoms[b].as_ref()).collect();
                format!("{{{}}}", inner.join(","))
            })
            .collect();
        let mut order = Vec::new();
        for m in 0..n {
            for b in 0..k {
                if m >> b & 1 == 0 {
                    order.push((m, m | 1 << b));
                }
            }
        }
        FiniteLattice::new(&names, &order)
    }

    /// Every lattice with at most five elements, one per isomorphism class,
    /// with a short name each. Elements are `0..n` with `0` the bottom.
    pub fn small_lattices() -> Vec<(&'static str, FiniteLattice)> {
        type Covers = (&'static str, usize, &'static [(usize, usize)]);
        let covers: [Covers; 10] = [
            ("chain1", 1, &[]),
            ("chain2", 2, &[(0, 1)]),
            ("chain3", 3, &[(0, 1), (1, 2)]),
            ("chain4", 4, &[(0, 1), (1, 2), (2, 3)]),
            ("diamond", 4, &[(0, 1), (0, 2), (1, 3), (2, 3)]),
            ("chain5", 5, &[(0, 1), (1, 2), (2, 3), (3, 4)]),
            ("M3", 5, &[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)]),
            ("N5", 5, &[(0, 1), (1, 2), (2, 4), (0, 3), (3, 4)]),
            ("1+diamond", 5, &[(0, 1), (1, 2), (1, 3), (2, 4), (3, 4)]),
            ("diamond+1", 5, &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)]),
        ];
        covers
            .iter()
            .map(|&(name, n, order)| {
                let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
                (name, FiniteLattice::new(&names, order).expect("valid small lattice"))
            })
            .collect()
    }

    /// Componentwise product; element (i, j) gets index i * |other| + j.
    pub fn product(&self, other: &FiniteLattice) -> Result<Self> {
        let (n, m) = (self.len(), other.len());
        let mut names = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                names.push(format!("({},{})", self.names[i], other.names[j]));
            }
        }
        let mut order = Vec::new();
        for i in 0..n {
            for j in 0..m {
                for i2 in self.up[i].ones() {
                    order.push((i * m + j, i2 * m + j));
                }
                for j2 in other.up[j].ones() {
                    order.push((i * m + j, i * m + j2));
                }
            }
        }
        FiniteLattice::new(&names, &order)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, a: usize) -> &str {
        &self.names[a]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::NotInCarrier(format!("`{name}`")))
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    #[inline]
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.up[a].contains(b)
    }

    #[inline]
    pub fn join(&self, a: usize, b: usize) -> usize {
        match &self.join_tbl {
            Some(t) => t[a * self.len() + b] as usize,
            None => self.binary_join(a, b).expect("validated lattice"),
        }
    }

    #[inline]
    pub fn meet(&self, a: usize, b: usize) -> usize {
        match &self.meet_tbl {
            Some(t) => t[a * self.len() + b] as usize,
            None => self.binary_meet(a, b).expect("validated lattice"),
        }
    }

    pub fn lub(&self, s: &[usize]) -> Result<usize> {
        self.check_all(s)?;
        Ok(s.iter().fold(self.bottom, |acc, &x| self.join(acc, x)))
    }

    pub fn glb(&self, s: &[usize]) -> Result<usize> {
        self.check_all(s)?;
        Ok(s.iter().fold(self.top, |acc, &x| self.meet(acc, x)))
    }

    /// max(S), in index order.
    pub fn maximal_elements(&self, s: &[usize]) -> Result<Vec<usize>> {
        self.check_all(s)?;
        let mut out: Vec<usize> = s.iter().copied().filter(|&x| !s.iter().any(|&y| y != x && self.leq(x, y))).collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn check_index(&self, a: usize) -> Result<()> {
        if a < self.len() {
            Ok(())
        } else {
            Err(Error::NotInCarrier(format!("index {a}")))
        }
    }

    fn check_all(&self, s: &[usize]) -> Result<()> {
        s.iter().try_for_each(|&a| self.check_index(a))
    }

    // least element of a set, if it has one: m in S with S ⊆ up(m)
    fn least_of(&self, s: &FixedBitSet) -> Option<usize> {
        let size = s.count_ones(..);
        s.ones().find(|&m| self.up_count[m] >= size && s.is_subset(&self.up[m]))
    }

    fn greatest_of(&self, s: &FixedBitSet) -> Option<usize> {
        let size = s.count_ones(..);
        s.ones().find(|&m| self.down_count[m] >= size && s.is_subset(&self.down[m]))
    }

    fn binary_join(&self, a: usize, b: usize) -> Option<usize> {
        let mut ub = self.up[a].clone();
        ub.intersect_with(&self.up[b]);
        self.least_of(&ub)
    }

    fn binary_meet(&self, a: usize, b: usize) -> Option<usize> {
        let mut lb = self.down[a].clone();
        lb.intersect_with(&self.down[b]);
        self.greatest_of(&lb)
    }
}

impl Ambient for FiniteLattice {
    type Elem = usize;

    fn ambient_id(&self) -> u64 {
        self.id
    }
    fn top(&self) -> usize {
        self.top
    }
    fn bottom(&self) -> usize {
        self.bottom
    }
    fn leq(&self, a: &usize, b: &usize) -> bool {
        FiniteLattice::leq(self, *a, *b)
    }
    fn meet(&self, a: &usize, b: &usize) -> usize {
        FiniteLattice::meet(self, *a, *b)
    }
    fn join(&self, a: &usize, b: &usize) -> usize {
        FiniteLattice::join(self, *a, *b)
    }
    fn check(&self, a: &usize) -> Result<()> {
        self.check_index(*a)
    }
    fn elements(&self) -> Result<Vec<usize>> {
        Ok((0..self.len()).collect())
    }
    fn render(&self, a: &usize) -> String {
        self.names.get(*a).cloned().unwrap_or_else(|| format!("#{a}"))
    }
}

/// A monotone self-map of a lattice, given as a table.
#[derive(Debug, Clone)]
pub struct MonotoneMap<'a> {
    lattice: &'a FiniteLattice,
    table: Vec<usize>,
}

impl<'a> MonotoneMap<'a> {
    pub fn new(lattice: &'a FiniteLattice, table: Vec<usize>) -> Result<Self> {
        if table.len() != lattice.len() {
            return Err(Error::Precondition(format!(
                "map table has {} entries for a lattice of {}",
                table.len(),
                lattice.len()
            )));
        }
        for &t in &table {
            lattice.check_index(t)?;
        }
        for x in 0..lattice.len() {
            for y in lattice.up[x].ones() {
                if !lattice.leq(table[x], table[y]) {
                    return Err(Error::Precondition(format!(
                        "map is not monotone at {} <= {}",
                        lattice.name(x),
                        lattice.name(y)
                    )));
                }
            }
        }
        Ok(MonotoneMap { lattice, table })
    }

    pub fn from_fn(lattice: &'a FiniteLattice, f: impl Fn(usize) -> usize) -> Result<Self> {
        Self::new(lattice, (0..lattice.len()).map(f).collect())
    }

    pub fn lattice(&self) -> &FiniteLattice {
        self.lattice
    }

    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }
}

/// Iterates `f` from `start` until two consecutive values agree.
pub fn iterate_to_fixpoint<T: PartialEq>(start: T, cap: usize, mut f: impl FnMut(&T) -> T) -> Option<(T, usize)> {
    let mut cur = start;
    for i in 0..cap {
        let next = f(&cur);
        if next == cur {
            return Some((cur, i));
        }
        cur = next;
    }
    None
}

/// Least fixpoint by upper Kleene iteration from bottom.
pub fn kleene_lfp(f: &MonotoneMap<'_>) -> usize {
    // chains in an n-element lattice have at most n elements
    let n = f.lattice.len();
    iterate_to_fixpoint(f.lattice.bottom(), n + 1, |&x| f.apply(x)).expect("finite height").0
}

/// Greatest fixpoint by lower Kleene iteration from top.
pub fn kleene_gfp(f: &MonotoneMap<'_>) -> usize {
    let n = f.lattice.len();
    iterate_to_fixpoint(f.lattice.top(), n + 1, |&x| f.apply(x)).expect("finite height").0
}

/// One parsed `key: rest` line of the text formats.
#[derive(Debug, Clone)]
pub(crate) struct Directive<'t> {
    pub line: usize,
    pub key: &'t str,
    pub rest: &'t str,
    /// 1-based column where `rest` starts
    pub rest_col: usize,
}

impl<'t> Directive<'t> {
    /// Whitespace-separated tokens of the value with their 1-based columns.
    pub fn tokens(&self) -> impl Iterator<Item = (usize, &'t str)> + '_ {
        let base = self.rest.as_ptr() as usize;
        let col0 = self.rest_col;
        self.rest.split_whitespace().map(move |t| (col0 + (t.as_ptr() as usize - base), t))
    }
}

/// Splits a `#`-commented, `key: value` text into directives. Lines without
/// a colon are reported with an empty key so callers can reject them.
pub(crate) fn directives(text: &str) -> Vec<Directive<'_>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        match line.find(':') {
            Some(p) => {
                out.push(Directive { line: i + 1, key: line[..p].trim(), rest: &line[p + 1..], rest_col: p + 2 })
            }
            None => out.push(Directive { line: i + 1, key: "", rest: line, rest_col: 1 }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b4() -> FiniteLattice {
        FiniteLattice::powerset(&["p", "q"]).unwrap()
    }

    #[test]
    fn b4_lub_glb() {
        let l = b4();
        assert_eq!(l.lub(&[1, 2]).unwrap(), 3);
        assert_eq!(l.glb(&[1, 2]).unwrap(), 0);
        assert_eq!(l.glb(&[1, 3]).unwrap(), 1);
        assert_eq!(l.lub(&[]).unwrap(), l.bottom());
        assert_eq!(l.glb(&[]).unwrap(), l.top());
        assert_eq!(l.lub(&[2]).unwrap(), 2);
        assert!(l.lub(&[7]).is_err());
    }

    #[test]
    fn maximal() {
        let l = b4();
        assert_eq!(l.maximal_elements(&[0, 1, 2]).unwrap(), vec![1, 2]);
        assert_eq!(l.maximal_elements(&[]).unwrap(), Vec::<usize>::new());
        assert_eq!(l.maximal_elements(&[0, 1, 3]).unwrap(), vec![3]);
    }

    #[test]
    fn kleene() {
        let l = b4();
        let f = MonotoneMap::from_fn(&l, |x| l.join(x, 1)).unwrap();
        assert_eq!(kleene_lfp(&f), 1);
        let g = MonotoneMap::from_fn(&l, |x| l.meet(x, 1)).unwrap();
        assert_eq!(kleene_gfp(&g), 1);
        let id = MonotoneMap::from_fn(&l, |x| x).unwrap();
        assert_eq!(kleene_lfp(&id), l.bottom());
        assert_eq!(kleene_gfp(&id), l.top());
        let top = MonotoneMap::from_fn(&l, |_| l.top()).unwrap();
        assert_eq!(kleene_lfp(&top), l.top());
        let bot = MonotoneMap::from_fn(&l, |_| l.bottom()).unwrap();
        assert_eq!(kleene_gfp(&bot), l.bottom());
    }

    #[test]
    fn non_monotone_map_rejected() {
        let l = FiniteLattice::chain(2).unwrap();
        assert!(MonotoneMap::new(&l, vec![1, 0]).is_err());
    }

    #[test]
    fn parse_text_format() {
        let l = FiniteLattice::parse("# diamond\nelements: bot p q top\norder: bot<=p bot<=q\norder: p<=top q<=top\n")
            .unwrap();
        assert_eq!(l.len(), 4);
        assert_eq!(l.join(1, 2), 3);
        assert_eq!(l.meet(1, 2), 0);
        assert!(l.leq(0, 3));
    }

    #[test]
    fn parse_errors_name_the_problem() {
        let e = FiniteLattice::parse("elements: a b\norder: a<=c\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, col: 8, .. }), "{e:?}");
        let e = FiniteLattice::parse("elements: a b\norder: a<=b b<=a\n").unwrap_err();
        assert!(matches!(e, Error::NotALattice { reason: "order is not antisymmetric", .. }));
        // two incomparable maximal elements: no top
        let e = FiniteLattice::parse("elements: a b c\norder: a<=b a<=c\n").unwrap_err();
        assert!(matches!(e, Error::NotALattice { .. }));
        // bowtie: b, c both below d, e but no least upper bound
        let e = FiniteLattice::parse("elements: a b c d e f\norder: a<=b a<=c b<=d b<=e c<=d c<=e d<=f e<=f\n")
            .unwrap_err();
        match e {
            Error::NotALattice { reason, a, b } => {
                assert_eq!(reason, "no least upper bound");
                assert_eq!((a.as_str(), b.as_str()), ("b", "c"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn on_demand_matches_tables() {
        let names: Vec<String> = (0..8).map(|i| i.to_string()).collect();
        let base = FiniteLattice::powerset(&["a", "b", "c"]).unwrap();
        let mut order = Vec::new();
        for a in 0..8 {
            for b in 0..8 {
                if base.leq(a, b) {
                    order.push((a, b));
                }
            }
        }
        let lazy = FiniteLattice::with_table_bound(&names, &order, 0).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                assert_eq!(lazy.join(a, b), base.join(a, b));
                assert_eq!(lazy.meet(a, b), base.meet(a, b));
            }
        }
    }
}
