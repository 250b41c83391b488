//! Box assignments: maps from variables to intervals.
//!
//! A box stands for the set of real-valued points it contains. Variables not
//! explicitly bound are unconstrained, i.e. mapped to `(-inf, +inf)`, so the
//! box with no bindings is all of space (`T`). The empty box (`F`) contains
//! no points at all and absorbs every variable.

use crate::interval::{self, Interval};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Interned variable name; cheap to clone, ordered by spelling.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Var {
        Var(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Var {
        Var::new(s)
    }
}

pub type VarSet = BTreeSet<Var>;

#[derive(Clone, Debug)]
pub struct BoxAssignment {
    bindings: BTreeMap<Var, Interval>,
    empty: bool,
}

impl BoxAssignment {
    /// The box containing every point (no variable constrained).
    pub fn all() -> BoxAssignment {
        BoxAssignment {
            bindings: BTreeMap::new(),
            empty: false,
        }
    }

    /// The box containing no points.
    pub fn none() -> BoxAssignment {
        BoxAssignment {
            bindings: BTreeMap::new(),
            empty: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn get(&self, v: &Var) -> Interval {
        if self.empty {
            return interval::EMPTY;
        }
        self.bindings.get(v).copied().unwrap_or(interval::FULL)
    }

    /// Functional update; binding any variable to an empty interval collapses
    /// the whole box to `F`.
    pub fn with(&self, v: Var, i: Interval) -> BoxAssignment {
        if self.empty {
            return BoxAssignment::none();
        }
        if i.is_empty() {
            return BoxAssignment::none();
        }
        let mut b = self.clone();
        b.bindings.insert(v, i);
        b
    }

    /// Variables with an explicit binding.
    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.bindings.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Interval)> {
        self.bindings.iter()
    }

    /// Keeps only the listed variables (others become unconstrained).
    pub fn restrict(&self, vars: &VarSet) -> BoxAssignment {
        if self.empty {
            return BoxAssignment::none();
        }
        BoxAssignment {
            bindings: self
                .bindings
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, i)| (v.clone(), *i))
                .collect(),
            empty: false,
        }
    }

    pub fn intersect(&self, other: &BoxAssignment) -> BoxAssignment {
        if self.empty || other.empty {
            return BoxAssignment::none();
        }
        let mut out = self.clone();
        for (v, i) in &other.bindings {
            let j = out.get(v).intersect(i);
            if j.is_empty() {
                return BoxAssignment::none();
            }
            out.bindings.insert(v.clone(), j);
        }
        out
    }

    /// Componentwise interval hull: the smallest box containing both.
    pub fn hull_union(&self, other: &BoxAssignment) -> BoxAssignment {
        if self.empty {
            return other.clone();
        }
        if other.empty {
            return self.clone();
        }
        let mut out = BoxAssignment::all();
        for v in self.bindings.keys().chain(other.bindings.keys()) {
            if out.bindings.contains_key(v) {
                continue;
            }
            let h = self.get(v).hull(&other.get(v));
            if h != interval::FULL {
                out.bindings.insert(v.clone(), h);
            }
        }
        out
    }

    pub fn subset_of(&self, other: &BoxAssignment) -> bool {
        if self.empty {
            return true;
        }
        if other.empty {
            return false;
        }
        self.bindings
            .keys()
            .chain(other.bindings.keys())
            .all(|v| self.get(v).subset_of(&other.get(v)))
    }

    /// Product of widths over the listed variables; an unbounded component
    /// makes the volume infinite, the empty box has volume 0.
    pub fn volume(&self, vars: &VarSet) -> f64 {
        if self.empty {
            return 0.0;
        }
        let mut vol = 1.0;
        for v in vars {
            let w = self.get(v).width();
            if w == f64::INFINITY {
                return f64::INFINITY;
            }
            vol *= w;
        }
        vol
    }
}

impl PartialEq for BoxAssignment {
    /// Per-variable interval equality over the union of explicit variables;
    /// all empty boxes are the same set and compare equal.
    fn eq(&self, other: &BoxAssignment) -> bool {
        if self.empty || other.empty {
            return self.empty == other.empty;
        }
        self.bindings
            .keys()
            .chain(other.bindings.keys())
            .all(|v| self.get(v) == other.get(v))
    }
}

impl fmt::Display for BoxAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return write!(f, "{{}}");
        }
        write!(f, "{{")?;
        for (n, (v, i)) in self.bindings.iter().enumerate() {
            if n > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{} in {}", v, i)?;
        }
        write!(f, "}}")
    }
}

/// Variables on which two boxes differ (over the union of explicit bindings).
pub fn changed_vars(before: &BoxAssignment, after: &BoxAssignment) -> VarSet {
    let mut out = VarSet::new();
    if before.empty || after.empty {
        if before.empty != after.empty {
            for v in before.vars().chain(after.vars()) {
                out.insert(v.clone());
            }
        }
        return out;
    }
    for v in before.bindings.keys().chain(after.bindings.keys()) {
        if before.get(v) != after.get(v) {
            out.insert(v.clone());
        }
    }
    out
}

/// Covers `outer \ inner` (restricted to `vars`) with at most `2 * vars.len()`
/// boxes of pairwise disjoint interiors, by peeling one axis at a time.
/// Requires `inner ⊆ outer` on those variables.
pub fn box_difference(outer: &BoxAssignment, inner: &BoxAssignment, vars: &VarSet) -> Vec<BoxAssignment> {
    if outer.is_empty() {
        return Vec::new();
    }
    if inner.is_empty() {
        return vec![outer.restrict(vars)];
    }
    let mut pieces = Vec::new();
    let mut core = outer.restrict(vars);
    for v in vars {
        let o = core.get(v);
        let i = inner.get(v);
        debug_assert!(i.subset_of(&o), "difference requires inner ⊆ outer");
        if i.lo() > o.lo() {
            pieces.push(core.with(v.clone(), Interval::new(o.lo(), i.lo())));
        }
        if i.hi() < o.hi() {
            pieces.push(core.with(v.clone(), Interval::new(i.hi(), o.hi())));
        }
        core = core.with(v.clone(), i);
    }
    pieces
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(pairs: &[(&str, f64, f64)]) -> BoxAssignment {
        let mut b = BoxAssignment::all();
        for (v, lo, hi) in pairs {
            b = b.with(Var::new(v), Interval::new(*lo, *hi));
        }
        b
    }

    fn vars(names: &[&str]) -> VarSet {
        names.iter().map(|n| Var::new(n)).collect()
    }

    #[test]
    fn absent_variables_are_unconstrained() {
        let b = bx(&[("x", 0.0, 1.0)]);
        assert_eq!(b.get(&Var::new("y")), interval::FULL);
        assert_eq!(BoxAssignment::all().get(&Var::new("x")), interval::FULL);
    }

    #[test]
    fn empty_box_absorbs() {
        let b = bx(&[("x", 0.0, 1.0)]);
        let f = BoxAssignment::none();
        assert_eq!(f.hull_union(&b), b);
        assert!(f.subset_of(&b));
        assert!(!b.subset_of(&f));
        assert_eq!(b.with(Var::new("x"), interval::EMPTY), f);
        assert_eq!(f.get(&Var::new("x")), interval::EMPTY);
    }

    #[test]
    fn equality_over_union_of_bindings() {
        let a = bx(&[("x", f64::NEG_INFINITY, f64::INFINITY), ("y", 0.0, 1.0)]);
        let b = bx(&[("y", 0.0, 1.0)]);
        assert_eq!(a, b);
        assert_ne!(a, bx(&[("y", 0.0, 2.0)]));
    }

    #[test]
    fn difference_peels_axes() {
        let outer = bx(&[("x", 0.0, 2.0), ("y", 0.0, 2.0)]);
        let inner = bx(&[("x", 1.0, 2.0), ("y", 0.0, 1.0)]);
        let vs = vars(&["x", "y"]);
        let pieces = box_difference(&outer, &inner, &vs);
        assert_eq!(pieces.len(), 2);
        let total: f64 = pieces.iter().map(|p| p.volume(&vs)).sum();
        assert!((total - 3.0).abs() < 1e-12);
        // pieces and inner tile the outer box
        for p in &pieces {
            assert!(p.subset_of(&outer));
            assert!(p.intersect(&inner).volume(&vs) == 0.0);
        }
    }

    #[test]
    fn difference_against_empty_inner() {
        let outer = bx(&[("x", 0.0, 1.0)]);
        let pieces = box_difference(&outer, &BoxAssignment::none(), &vars(&["x"]));
        assert_eq!(pieces, vec![outer]);
    }

    #[test]
    fn volume_rules() {
        let vs = vars(&["x", "y"]);
        assert_eq!(bx(&[("x", 0.0, 0.5), ("y", 0.0, 0.6)]).volume(&vs), 0.3);
        assert_eq!(bx(&[("x", 0.0, 1.0)]).volume(&vs), f64::INFINITY);
        assert_eq!(BoxAssignment::none().volume(&vs), 0.0);
    }
}
