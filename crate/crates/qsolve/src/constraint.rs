//! Negation-free quantified constraint trees: atoms in residual form,
//! n-ary and/or junctions, quantifier blocks, the `opposite` complement,
//! and mark bookkeeping for dual-information reuse.

use crate::boxes::{BoxAssignment, Var, VarSet};
use crate::interval::Interval;
use crate::term::Term;
use std::fmt;
use std::sync::Arc;

/// Relation of a residual atom `t ⋈ 0`. Non-strict comparisons normalize to
/// `Ge`, strict ones to `Gt`; `<" and `<=` flip onto the negated residual.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Rel {
    Ge,
    Gt,
}

impl Rel {
    pub fn flipped(self) -> Rel {
        match self {
            Rel::Ge => Rel::Gt,
            Rel::Gt => Rel::Ge,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

/// `t`, negated without growing chains of double negations: `Neg` unwraps
/// and differences swap sides. Both rewrites negate the interval evaluation
/// endpoint-exactly, which the dual-marking logic relies on.
pub fn negate_term(t: &Arc<Term>) -> Arc<Term> {
    match &**t {
        Term::Neg(inner) => inner.clone(),
        Term::Sub(a, b) => Arc::new(Term::Sub(b.clone(), a.clone())),
        _ => Arc::new(Term::Neg(t.clone())),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub term: Arc<Term>,
    pub rel: Rel,
    /// Free variables of the residual, cached.
    pub vars: VarSet,
    /// Variables for which another shave of this atom is known futile.
    pub mark: VarSet,
    /// Same, for the opposite atom.
    pub opposite_mark: VarSet,
}

impl Atom {
    pub fn new(term: Arc<Term>, rel: Rel) -> Atom {
        let vars = term.vars();
        Atom {
            term,
            rel,
            vars,
            mark: VarSet::new(),
            opposite_mark: VarSet::new(),
        }
    }

    pub fn opposite(&self) -> Atom {
        Atom {
            term: negate_term(&self.term),
            rel: self.rel.flipped(),
            vars: self.vars.clone(),
            mark: self.opposite_mark.clone(),
            opposite_mark: self.mark.clone(),
        }
    }

    pub fn eq_modulo_marks(&self, other: &Atom) -> bool {
        self.rel == other.rel && self.term == other.term
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum QuantKind {
    Forall,
    Exists,
}

impl QuantKind {
    pub fn dual(self) -> QuantKind {
        match self {
            QuantKind::Forall => QuantKind::Exists,
            QuantKind::Exists => QuantKind::Forall,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            QuantKind::Forall => "forall",
            QuantKind::Exists => "exists",
        }
    }
}

/// An n-ary `and`/`or` node. `last_branched` is branching-strategy state
/// (round-robin cursor over children); `from_branching` records whether the
/// junction was created by splitting a quantifier bound, which switches the
/// strategy to volume-based child selection.
#[derive(Clone, Debug, PartialEq)]
pub struct Junction {
    pub children: Vec<Constraint>,
    pub last_branched: usize,
    pub from_branching: bool,
}

impl Junction {
    pub fn new(children: Vec<Constraint>) -> Junction {
        Junction {
            children,
            last_branched: 0,
            from_branching: false,
        }
    }
}

/// A quantifier block binding one or more variables at once.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantNode {
    pub kind: QuantKind,
    pub bindings: Vec<(Var, Interval)>,
    pub body: Box<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    Atom(Atom),
    And(Junction),
    Or(Junction),
    Quant(QuantNode),
}

impl Constraint {
    pub fn atom(term: Arc<Term>, rel: Rel) -> Constraint {
        Constraint::Atom(Atom::new(term, rel))
    }

    pub fn and(children: Vec<Constraint>) -> Constraint {
        Constraint::And(Junction::new(children))
    }

    pub fn or(children: Vec<Constraint>) -> Constraint {
        Constraint::Or(Junction::new(children))
    }

    pub fn quant(
        kind: QuantKind,
        bindings: Vec<(Var, Interval)>,
        body: Constraint,
    ) -> Constraint {
        Constraint::Quant(QuantNode {
            kind,
            bindings,
            body: Box::new(body),
        })
    }

    /// The complement with negation pushed to the atoms: swaps and/or and
    /// the quantifier kinds (keeping bounds), flips atom relations, and
    /// swaps each atom's mark with its opposite mark. An involution.
    pub fn opposite(&self) -> Constraint {
        match self {
            Constraint::Atom(a) => Constraint::Atom(a.opposite()),
            Constraint::And(j) => Constraint::Or(Junction {
                children: j.children.iter().map(|c| c.opposite()).collect(),
                last_branched: j.last_branched,
                from_branching: j.from_branching,
            }),
            Constraint::Or(j) => Constraint::And(Junction {
                children: j.children.iter().map(|c| c.opposite()).collect(),
                last_branched: j.last_branched,
                from_branching: j.from_branching,
            }),
            Constraint::Quant(q) => Constraint::Quant(QuantNode {
                kind: q.kind.dual(),
                bindings: q.bindings.clone(),
                body: Box::new(q.body.opposite()),
            }),
        }
    }

    /// Clears mark and opposite mark of every atom whose variables intersect
    /// `vars` (used after any change to those variables' bounds).
    pub fn notify(&mut self, vars: &VarSet) {
        if vars.is_empty() {
            return;
        }
        match self {
            Constraint::Atom(a) => {
                if a.vars.iter().any(|v| vars.contains(v)) {
                    a.mark.clear();
                    a.opposite_mark.clear();
                }
            }
            Constraint::And(j) | Constraint::Or(j) => {
                for c in &mut j.children {
                    c.notify(vars);
                }
            }
            Constraint::Quant(q) => q.body.notify(vars),
        }
    }

    pub fn clear_all_marks(&mut self) {
        match self {
            Constraint::Atom(a) => {
                a.mark.clear();
                a.opposite_mark.clear();
            }
            Constraint::And(j) | Constraint::Or(j) => {
                for c in &mut j.children {
                    c.clear_all_marks();
                }
            }
            Constraint::Quant(q) => q.body.clear_all_marks(),
        }
    }

    pub fn free_vars(&self) -> VarSet {
        match self {
            Constraint::Atom(a) => a.vars.clone(),
            Constraint::And(j) | Constraint::Or(j) => {
                let mut s = VarSet::new();
                for c in &j.children {
                    s.extend(c.free_vars());
                }
                s
            }
            Constraint::Quant(q) => {
                let mut s = q.body.free_vars();
                for (v, _) in &q.bindings {
                    s.remove(v);
                }
                s
            }
        }
    }

    /// Structural equality ignoring marks and branching-strategy fields.
    pub fn eq_modulo_marks(&self, other: &Constraint) -> bool {
        match (self, other) {
            (Constraint::Atom(a), Constraint::Atom(b)) => a.eq_modulo_marks(b),
            (Constraint::And(a), Constraint::And(b))
            | (Constraint::Or(a), Constraint::Or(b)) => {
                a.children.len() == b.children.len()
                    && a.children
                        .iter()
                        .zip(&b.children)
                        .all(|(x, y)| x.eq_modulo_marks(y))
            }
            (Constraint::Quant(a), Constraint::Quant(b)) => {
                a.kind == b.kind
                    && a.bindings == b.bindings
                    && a.body.eq_modulo_marks(&b.body)
            }
            _ => false,
        }
    }

    /// Child accessor used by the branching strategy: junction children are
    /// indexed directly, a quantifier body is child 0.
    pub fn get_mut(&mut self, path: &[usize]) -> Option<&mut Constraint> {
        let Some((&head, rest)) = path.split_first() else {
            return Some(self);
        };
        match self {
            Constraint::Atom(_) => None,
            Constraint::And(j) | Constraint::Or(j) => {
                j.children.get_mut(head)?.get_mut(rest)
            }
            Constraint::Quant(q) => {
                if head == 0 {
                    q.body.get_mut(rest)
                } else {
                    None
                }
            }
        }
    }

    pub fn check_wellformed(&self) -> Result<(), Vec<String>> {
        let mut diags = Vec::new();
        let mut in_scope = VarSet::new();
        self.check_rec("", &mut in_scope, &mut diags);
        if diags.is_empty() {
            Ok(())
        } else {
            Err(diags)
        }
    }

    fn check_rec(&self, path: &str, in_scope: &mut VarSet, diags: &mut Vec<String>) {
        let at = |p: &str| {
            if p.is_empty() {
                "root".to_string()
            } else {
                p.to_string()
            }
        };
        match self {
            Constraint::Atom(a) => {
                for v in a.mark.union(&a.opposite_mark) {
                    if !a.vars.contains(v) {
                        diags.push(format!(
                            "mark on variable {} not occurring in atom at path {}",
                            v,
                            at(path)
                        ));
                    }
                }
            }
            Constraint::And(j) | Constraint::Or(j) => {
                let tag = if matches!(self, Constraint::And(_)) { "a" } else { "o" };
                if j.children.len() < 2 {
                    diags.push(format!(
                        "junction with fewer than two children at path {}",
                        at(path)
                    ));
                }
                for (i, c) in j.children.iter().enumerate() {
                    let p = if path.is_empty() {
                        format!("{}{}", tag, i)
                    } else {
                        format!("{}.{}{}", path, tag, i)
                    };
                    c.check_rec(&p, in_scope, diags);
                }
            }
            Constraint::Quant(q) => {
                let mut introduced = Vec::new();
                for (i, (v, iv)) in q.bindings.iter().enumerate() {
                    let p = if path.is_empty() {
                        format!("q{}", i)
                    } else {
                        format!("{}.q{}", path, i)
                    };
                    if iv.is_empty() {
                        diags.push(format!("empty quantifier bound at path {}", p));
                    } else if !iv.is_finite() {
                        diags.push(format!("unbounded quantifier bound at path {}", p));
                    }
                    if in_scope.contains(v) || introduced.contains(v) {
                        diags.push(format!("variable {} rebound at path {}", v, p));
                    } else {
                        introduced.push(v.clone());
                    }
                }
                for v in &introduced {
                    in_scope.insert(v.clone());
                }
                q.body.check_rec(
                    &if path.is_empty() {
                        "b".to_string()
                    } else {
                        format!("{}.b", path)
                    },
                    in_scope,
                    diags,
                );
                for v in &introduced {
                    in_scope.remove(v);
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Constraint::Quant(_) => 0,
            Constraint::Or(_) => 1,
            Constraint::And(_) => 2,
            Constraint::Atom(_) => 3,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.precedence();
        if p < min {
            write!(f, "(")?;
        }
        match self {
            Constraint::Atom(a) => write!(f, "{} {} 0", a.term, a.rel.symbol())?,
            Constraint::Or(j) => {
                for (i, c) in j.children.iter().enumerate() {
                    if i > 0 {
                        write!(f, " or ")?;
                    }
                    c.fmt_prec(f, 2)?;
                }
            }
            Constraint::And(j) => {
                for (i, c) in j.children.iter().enumerate() {
                    if i > 0 {
                        write!(f, " and ")?;
                    }
                    c.fmt_prec(f, 3)?;
                }
            }
            Constraint::Quant(q) => {
                write!(f, "{} ", q.kind.keyword())?;
                for (i, (v, iv)) in q.bindings.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{} in {}", v, iv)?;
                }
                write!(f, ". ")?;
                q.body.fmt_prec(f, 0)?;
            }
        }
        if p < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// A constraint paired with a bound on its free variables — the unit the
/// narrowing operators transform and the solvers keep on their worklists.
#[derive(Clone, Debug)]
pub struct BoundedConstraint {
    pub phi: Constraint,
    pub bound: BoxAssignment,
    /// Tree level of the most recent split in this element, if any.
    pub last_split_level: Option<usize>,
    /// Selections survived without being chosen; drives the fairness override.
    pub age: u32,
}

impl BoundedConstraint {
    pub fn new(phi: Constraint, bound: BoxAssignment) -> BoundedConstraint {
        BoundedConstraint {
            phi,
            bound,
            last_split_level: None,
            age: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval;

    fn atom_ge(t: Arc<Term>) -> Constraint {
        Constraint::atom(t, Rel::Ge)
    }

    fn x_ge_0() -> Constraint {
        atom_ge(Term::var("x"))
    }

    #[test]
    fn opposite_flips_atoms() {
        let a = x_ge_0();
        let o = a.opposite();
        assert_eq!(o.to_string(), "-x > 0");
        assert_eq!(o.opposite(), a);
    }

    #[test]
    fn opposite_dualizes_structure() {
        let body = Constraint::and(vec![x_ge_0(), atom_ge(Term::var("y"))]);
        let c = Constraint::quant(
            QuantKind::Exists,
            vec![(Var::new("y"), Interval::new(0.0, 1.0))],
            body,
        );
        let o = c.opposite();
        match &o {
            Constraint::Quant(q) => {
                assert_eq!(q.kind, QuantKind::Forall);
                assert_eq!(q.bindings[0].1, Interval::new(0.0, 1.0));
                assert!(matches!(&*q.body, Constraint::Or(_)));
            }
            _ => panic!("expected quantifier"),
        }
        assert_eq!(o.opposite(), c);
    }

    #[test]
    fn opposite_swaps_marks() {
        let mut a = Atom::new(Term::var("x"), Rel::Ge);
        a.mark.insert(Var::new("x"));
        let o = a.opposite();
        assert!(o.mark.is_empty());
        assert!(o.opposite_mark.contains(&Var::new("x")));
    }

    #[test]
    fn notify_clears_touching_atoms_only() {
        let xy = Arc::new(Term::Add(Term::var("x"), Term::var("y")));
        let mut a = Atom::new(xy, Rel::Ge);
        a.mark.insert(Var::new("x"));
        a.mark.insert(Var::new("y"));
        let mut b = Atom::new(Term::var("y"), Rel::Ge);
        b.mark.insert(Var::new("y"));
        let mut c = Constraint::and(vec![Constraint::Atom(a), Constraint::Atom(b)]);

        let only_x: VarSet = [Var::new("x")].into_iter().collect();
        c.notify(&only_x);
        if let Constraint::And(j) = &c {
            match (&j.children[0], &j.children[1]) {
                (Constraint::Atom(a), Constraint::Atom(b)) => {
                    assert!(a.mark.is_empty(), "touching atom loses all marks");
                    assert_eq!(b.mark.len(), 1, "untouched atom keeps marks");
                }
                _ => unreachable!(),
            }
        }

        let before = c.clone();
        c.notify(&VarSet::new());
        assert_eq!(c, before, "empty notification is the identity");
    }

    #[test]
    fn wellformedness_diagnostics() {
        let ok = Constraint::quant(
            QuantKind::Exists,
            vec![(Var::new("x"), Interval::new(0.0, 1.0))],
            x_ge_0(),
        );
        assert!(ok.check_wellformed().is_ok());

        let empty = Constraint::quant(
            QuantKind::Forall,
            vec![(Var::new("x"), interval::EMPTY)],
            x_ge_0(),
        );
        let diags = empty.check_wellformed().unwrap_err();
        assert!(diags[0].contains("empty quantifier bound at path q0"));

        let rebound = Constraint::quant(
            QuantKind::Exists,
            vec![(Var::new("x"), Interval::new(0.0, 1.0))],
            Constraint::quant(
                QuantKind::Exists,
                vec![(Var::new("x"), Interval::new(0.0, 1.0))],
                x_ge_0(),
            ),
        );
        let diags = rebound.check_wellformed().unwrap_err();
        assert!(diags[0].contains("rebound"));

        let lonely = Constraint::And(Junction::new(vec![x_ge_0()]));
        assert!(lonely.check_wellformed().is_err());
    }

    #[test]
    fn free_vars_subtract_bindings() {
        let body = Constraint::and(vec![
            atom_ge(Arc::new(Term::Add(Term::var("x"), Term::var("y")))),
            atom_ge(Term::var("z")),
        ]);
        let c = Constraint::quant(
            QuantKind::Forall,
            vec![(Var::new("y"), Interval::new(0.0, 1.0))],
            body,
        );
        let fv = c.free_vars();
        assert!(fv.contains(&Var::new("x")));
        assert!(fv.contains(&Var::new("z")));
        assert!(!fv.contains(&Var::new("y")));
    }

    #[test]
    fn display_parenthesizes_by_precedence() {
        let a = x_ge_0();
        let b = atom_ge(Term::var("y"));
        let c = atom_ge(Term::var("z"));
        let or_in_and = Constraint::and(vec![Constraint::or(vec![a.clone(), b.clone()]), c.clone()]);
        assert_eq!(or_in_and.to_string(), "(x >= 0 or y >= 0) and z >= 0");
        let and_in_or = Constraint::or(vec![Constraint::and(vec![a.clone(), b]), c]);
        assert_eq!(and_in_or.to_string(), "x >= 0 and y >= 0 or z >= 0");
        let q = Constraint::quant(
            QuantKind::Forall,
            vec![(Var::new("u"), Interval::new(-1.0, 1.0))],
            Constraint::and(vec![a, atom_ge(Term::var("u"))]),
        );
        assert_eq!(q.to_string(), "forall u in [-1, 1]. x >= 0 and u >= 0");
    }

    #[test]
    fn eq_modulo_marks_ignores_marks() {
        let a = x_ge_0();
        let mut b = a.clone();
        if let Constraint::Atom(atom) = &mut b {
            atom.mark.insert(Var::new("x"));
        }
        assert_ne!(a, b);
        assert!(a.eq_modulo_marks(&b));
    }
}
