//! Pruning of quantified constraint trees: a fixpoint of atomic narrowing
//! propagated through conjunctions, disjunctions, and quantifier blocks.
//! Returns both the narrowed bound and an updated tree in which quantifier
//! bindings record the narrowing of bound variables and atom marks record
//! where further shaving is known to be futile.

use std::time::Instant;

use crate::boxes::{changed_vars, BoxAssignment, Var};
use crate::constraint::{Constraint, Junction, QuantKind, QuantNode};
use crate::interval::Interval;
use crate::narrow::{atomic_narrow, NarrowConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum TraceEvent {
    /// One executed shave of a variable against an atom.
    Shave { var: Var },
    /// A shave suppressed because the atom carried a mark for the variable.
    SkippedByMark { var: Var },
}

#[derive(Clone, Debug, Default)]
pub struct PruneStats {
    /// Executed (atom, variable) shaves.
    pub atomic_hits: u64,
    /// (atom, variable) shaves suppressed by marks.
    pub skipped_by_mark: u64,
    /// Completed narrowing rounds over conjunction children.
    pub fixpoint_rounds: u64,
    /// Mark skips whose shadow re-execution would have changed the bound.
    pub shadow_violations: u64,
    /// Set when a deadline or hit budget cut pruning short.
    pub aborted: bool,
    /// When present, records one event per shave or skip.
    pub trace: Option<Vec<TraceEvent>>,
}

impl PruneStats {
    pub fn with_trace() -> Self {
        PruneStats {
            trace: Some(Vec::new()),
            ..PruneStats::default()
        }
    }

    pub(crate) fn record<F: FnOnce() -> TraceEvent>(&mut self, f: F) {
        if let Some(t) = self.trace.as_mut() {
            t.push(f());
        }
    }
}

#[derive(Clone, Debug)]
pub struct PruneConfig {
    pub narrow: NarrowConfig,
    /// Honor marks by skipping shaves recorded as futile.
    pub use_marks: bool,
    /// Stop pruning disjunction children once their hull reaches the input
    /// bound.
    pub use_shortcut: bool,
    /// Re-execute every mark-skipped shave and count disagreements
    /// (diagnostics; the skip still stands).
    pub shadow_check_marks: bool,
    pub deadline: Option<Instant>,
    pub max_hits: Option<u64>,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            narrow: NarrowConfig::default(),
            use_marks: true,
            use_shortcut: true,
            shadow_check_marks: false,
            deadline: None,
            max_hits: None,
        }
    }
}

impl PruneConfig {
    pub(crate) fn exceeded(&self, stats: &mut PruneStats) -> bool {
        if stats.aborted {
            return true;
        }
        if let Some(m) = self.max_hits {
            if stats.atomic_hits >= m {
                stats.aborted = true;
                return true;
            }
        }
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                stats.aborted = true;
                return true;
            }
        }
        false
    }
}

/// Overwrites the `vars` components of `result` with their values in
/// `original`. Quantifier cases use this so a returned bound never carries
/// narrowed components of variables that are bound inside the subtree.
fn restore_components(
    mut result: BoxAssignment,
    original: &BoxAssignment,
    vars: &[(Var, Interval)],
) -> BoxAssignment {
    if result.is_empty() {
        return result;
    }
    for (v, _) in vars {
        result = result.with(v.clone(), original.get(v));
    }
    result
}

/// Narrows `b` toward the solution set of `phi`, returning the updated tree
/// and the narrowed bound. The bound only ever shrinks, and every solution
/// of `phi` inside `b` is kept.
pub fn prune(
    phi: &Constraint,
    b: &BoxAssignment,
    cfg: &PruneConfig,
    stats: &mut PruneStats,
) -> (Constraint, BoxAssignment) {
    if b.is_empty() {
        return (phi.clone(), BoxAssignment::none());
    }
    if cfg.exceeded(stats) {
        return (phi.clone(), b.clone());
    }
    match phi {
        Constraint::Atom(a) => {
            let (a2, b2) = atomic_narrow(a, b, cfg, stats);
            (Constraint::Atom(a2), b2)
        }
        Constraint::And(j) => prune_and(j, b, cfg, stats),
        Constraint::Or(j) => prune_or(j, b, cfg, stats),
        Constraint::Quant(q) => prune_quant(q, b, cfg, stats),
    }
}

/// Dual form: narrows `b` toward the complement of `phi`'s solution set by
/// pruning the opposite tree and mapping the result back.
pub fn inner_prune(
    phi: &Constraint,
    b: &BoxAssignment,
    cfg: &PruneConfig,
    stats: &mut PruneStats,
) -> (Constraint, BoxAssignment) {
    let (psi, b2) = prune(&phi.opposite(), b, cfg, stats);
    (psi.opposite(), b2)
}

fn prune_and(
    j: &Junction,
    b: &BoxAssignment,
    cfg: &PruneConfig,
    stats: &mut PruneStats,
) -> (Constraint, BoxAssignment) {
    let mut children = j.children.clone();
    let mut bound = b.clone();
    let n = children.len();
    let mut start = 0usize;
    loop {
        stats.fixpoint_rounds += 1;
        let before = bound.clone();
        for k in 0..n {
            if cfg.exceeded(stats) {
                break;
            }
            let idx = (start + k) % n;
            let (c2, b2) = prune(&children[idx], &bound, cfg, stats);
            children[idx] = c2;
            if b2.is_empty() {
                return (
                    Constraint::And(Junction {
                        children,
                        last_branched: j.last_branched,
                        from_branching: j.from_branching,
                    }),
                    BoxAssignment::none(),
                );
            }
            let delta = changed_vars(&bound, &b2);
            if !delta.is_empty() {
                for (i2, c) in children.iter_mut().enumerate() {
                    if i2 != idx {
                        c.notify(&delta);
                    }
                }
            }
            bound = b2;
        }
        if bound == before || cfg.exceeded(stats) {
            break;
        }
        start = (start + 1) % n;
    }
    (
        Constraint::And(Junction {
            children,
            last_branched: j.last_branched,
            from_branching: j.from_branching,
        }),
        bound,
    )
}

fn prune_or(
    j: &Junction,
    b: &BoxAssignment,
    cfg: &PruneConfig,
    stats: &mut PruneStats,
) -> (Constraint, BoxAssignment) {
    let mut survivors: Vec<(usize, Constraint)> = Vec::new();
    let mut acc = BoxAssignment::none();
    let mut covered = false;
    for (idx, child) in j.children.iter().enumerate() {
        if covered || cfg.exceeded(stats) {
            // hull already reaches the input bound: further children
            // cannot widen it, so they are carried over unpruned
            survivors.push((idx, child.clone()));
            continue;
        }
        let (c2, b2) = prune(child, b, cfg, stats);
        if b2.is_empty() {
            // refuted disjunct: removed from the tree entirely
            continue;
        }
        acc = acc.hull_union(&b2);
        survivors.push((idx, c2));
        if cfg.use_shortcut && acc == *b {
            covered = true;
        }
    }
    if survivors.is_empty() {
        return (
            Constraint::Or(Junction {
                children: j.children.clone(),
                last_branched: j.last_branched,
                from_branching: j.from_branching,
            }),
            BoxAssignment::none(),
        );
    }
    if survivors.len() == 1 {
        // a disjunction with one live branch collapses to that branch
        let (_, only) = survivors.into_iter().next().unwrap();
        return (only, acc);
    }
    let last_branched = survivors
        .iter()
        .rposition(|(orig, _)| *orig <= j.last_branched)
        .unwrap_or(survivors.len() - 1);
    (
        Constraint::Or(Junction {
            children: survivors.into_iter().map(|(_, c)| c).collect(),
            last_branched,
            from_branching: j.from_branching,
        }),
        acc,
    )
}

fn prune_quant(
    q: &QuantNode,
    b: &BoxAssignment,
    cfg: &PruneConfig,
    stats: &mut PruneStats,
) -> (Constraint, BoxAssignment) {
    let mut sub = b.clone();
    for (v, iv) in &q.bindings {
        sub = sub.with(v.clone(), *iv);
    }
    let (body2, b2) = prune(&q.body, &sub, cfg, stats);
    match q.kind {
        QuantKind::Exists => {
            if b2.is_empty() {
                return (
                    Constraint::Quant(QuantNode {
                        kind: q.kind,
                        bindings: q.bindings.clone(),
                        body: Box::new(body2),
                    }),
                    BoxAssignment::none(),
                );
            }
            let bindings = q
                .bindings
                .iter()
                .map(|(v, _)| (v.clone(), b2.get(v)))
                .collect::<Vec<_>>();
            let out = restore_components(b2, b, &q.bindings);
            (
                Constraint::Quant(QuantNode {
                    kind: q.kind,
                    bindings,
                    body: Box::new(body2),
                }),
                out,
            )
        }
        QuantKind::Forall => {
            // if any part of a universal binding was refuted, no point of
            // the outer box satisfies the formula
            let survives = !b2.is_empty()
                && q.bindings.iter().all(|(v, iv)| iv.subset_of(&b2.get(v)));
            let tree = Constraint::Quant(QuantNode {
                kind: q.kind,
                bindings: q.bindings.clone(),
                body: Box::new(body2),
            });
            if survives {
                let out = restore_components(b2, b, &q.bindings);
                (tree, out)
            } else {
                (tree, BoxAssignment::none())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_constraint;

    fn bx(pairs: &[(&str, f64, f64)]) -> BoxAssignment {
        let mut b = BoxAssignment::all();
        for (v, lo, hi) in pairs {
            b = b.with(Var::new(v), Interval::new(*lo, *hi));
        }
        b
    }

    fn run(src: &str, b: &BoxAssignment) -> (Constraint, BoxAssignment, PruneStats) {
        let phi = parse_constraint(src).unwrap();
        let cfg = PruneConfig::default();
        let mut stats = PruneStats::default();
        let (t, nb) = prune(&phi, b, &cfg, &mut stats);
        (t, nb, stats)
    }

    #[test]
    fn half_disc_example_narrows_free_and_bound_vars() {
        let b = bx(&[("x", -2.0, 2.0)]);
        let (tree, nb, _) = run("exists y in [-2, 2]. x^2 + y^2 <= 1 and y >= 0", &b);
        let x = nb.get(&Var::new("x"));
        assert!((x.lo() + 1.0).abs() <= 1e-6, "x.lo = {}", x.lo());
        assert!((x.hi() - 1.0).abs() <= 1e-6, "x.hi = {}", x.hi());
        match tree {
            Constraint::Quant(q) => {
                assert_eq!(q.kind, QuantKind::Exists);
                let y = q.bindings[0].1;
                assert!((y.lo() - 0.0).abs() <= 1e-6, "y.lo = {}", y.lo());
                assert!((y.hi() - 1.0).abs() <= 1e-6, "y.hi = {}", y.hi());
            }
            other => panic!("expected a quantifier at the root, got {}", other),
        }
    }

    #[test]
    fn forall_with_refuted_slab_empties_the_bound() {
        let (_, nb, _) = run("forall x in [-2, 2]. x >= 0", &BoxAssignment::all());
        assert!(nb.is_empty());
    }

    #[test]
    fn forall_tautology_keeps_the_bound() {
        let b = BoxAssignment::all();
        let (_, nb, _) = run("forall x in [-2, 2]. x^2 + 1 >= 0", &b);
        assert_eq!(nb, b);
    }

    #[test]
    fn conjunction_pins_shared_variable() {
        let b = bx(&[("x", -5.0, 5.0)]);
        let (_, nb, _) = run("x >= 0 and x <= 0", &b);
        assert_eq!(nb.get(&Var::new("x")), Interval::point(0.0));
    }

    #[test]
    fn conjunction_requires_renotification_between_children() {
        // the first child cannot narrow x until the second child has
        // shrunk y, so stale marks would leave x untouched
        let b = bx(&[("x", -5.0, 5.0), ("y", -5.0, 5.0)]);
        let (_, nb, _) = run("x <= y and y <= -1", &b);
        assert_eq!(nb.get(&Var::new("x")), Interval::new(-5.0, -1.0));
        assert_eq!(nb.get(&Var::new("y")), Interval::new(-5.0, -1.0));
    }

    #[test]
    fn refuted_disjunct_is_removed_and_lone_survivor_collapses() {
        let b = bx(&[("x", -5.0, 0.5)]);
        let (tree, nb, _) = run("x <= -1 or x >= 1", &b);
        assert_eq!(nb.get(&Var::new("x")), Interval::new(-5.0, -1.0));
        assert!(matches!(tree, Constraint::Atom(_)), "collapsed to {}", tree);
    }

    #[test]
    fn disjunction_hull_unions_both_branches() {
        let b = bx(&[("x", -5.0, 5.0)]);
        let (tree, nb, _) = run("x <= -1 or x >= 1", &b);
        assert_eq!(nb.get(&Var::new("x")), Interval::new(-5.0, 5.0));
        assert!(matches!(tree, Constraint::Or(_)));
    }

    #[test]
    fn fully_refuted_disjunction_empties_the_bound() {
        let b = bx(&[("x", -5.0, 0.0)]);
        let (_, nb, _) = run("x >= 1 or x >= 2", &b);
        assert!(nb.is_empty());
    }

    #[test]
    fn pruning_is_contracting_and_idempotent() {
        let b = bx(&[("x", -2.0, 2.0)]);
        let phi = parse_constraint("exists y in [-2, 2]. x^2 + y^2 <= 1 and y >= 0").unwrap();
        let cfg = PruneConfig::default();
        let mut stats = PruneStats::default();
        let (t1, b1) = prune(&phi, &b, &cfg, &mut stats);
        assert!(b1.subset_of(&b));
        let (t2, b2) = prune(&t1, &b1, &cfg, &mut stats);
        assert_eq!(b2, b1);
        assert_eq!(t2, t1);
    }

    #[test]
    fn inner_prune_is_the_opposite_of_pruning_the_opposite() {
        let b = bx(&[("x", -2.0, 2.0)]);
        let phi = parse_constraint("exists y in [0, 2]. x * y >= 1").unwrap();
        let cfg = PruneConfig::default();
        let mut s1 = PruneStats::default();
        let mut s2 = PruneStats::default();
        let (ti, bi) = inner_prune(&phi, &b, &cfg, &mut s1);
        let (to, bo) = prune(&phi.opposite(), &b, &cfg, &mut s2);
        assert_eq!(bi, bo);
        assert_eq!(ti, to.opposite());
        assert_eq!(s1.atomic_hits, s2.atomic_hits);
    }

    #[test]
    fn hit_budget_aborts_but_stays_sound() {
        let b = bx(&[("x", -2.0, 2.0)]);
        let phi = parse_constraint("exists y in [-2, 2]. x^2 + y^2 <= 1 and y >= 0").unwrap();
        let mut cfg = PruneConfig::default();
        cfg.max_hits = Some(1);
        let mut stats = PruneStats::default();
        let (_, nb) = prune(&phi, &b, &cfg, &mut stats);
        assert!(stats.aborted);
        // the true projection [-1, 1] must survive a truncated prune
        let x = nb.get(&Var::new("x"));
        assert!(x.lo() <= -1.0 && x.hi() >= 1.0);
    }

    #[test]
    fn trace_events_match_hit_counters() {
        let b = bx(&[("x", -5.0, 5.0), ("y", -5.0, 5.0)]);
        let phi = parse_constraint("x <= y and y <= -1").unwrap();
        let cfg = PruneConfig::default();
        let mut stats = PruneStats::with_trace();
        let _ = prune(&phi, &b, &cfg, &mut stats);
        let trace = stats.trace.as_ref().unwrap();
        let shaves = trace
            .iter()
            .filter(|e| matches!(e, TraceEvent::Shave { .. }))
            .count() as u64;
        let skips = trace
            .iter()
            .filter(|e| matches!(e, TraceEvent::SkippedByMark { .. }))
            .count() as u64;
        assert_eq!(shaves, stats.atomic_hits);
        assert_eq!(skips, stats.skipped_by_mark);
        assert!(stats.atomic_hits > 0);
    }
}
