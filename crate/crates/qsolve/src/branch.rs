//! Branching: splitting quantifier bounds into conjunctions/disjunctions of
//! copies, splitting free-variable bounds into two boxes, and the selection
//! strategy that decides where to split next.
//!
//! Selection prefers the bounded constraint with the largest bound volume
//! and, inside it, a target one quantifier level below the previous split.
//! An age counter overrides the volume preference once an element has been
//! passed over too many times, which keeps every element selected
//! infinitely often along an infinite run.

use std::fmt;

use crate::boxes::{Var, VarSet};
use crate::constraint::{BoundedConstraint, Constraint, Junction, QuantNode};
use crate::constraint::QuantKind;
use crate::interval::Interval;

/// Selections an element may be passed over before the fairness override
/// forces it to be chosen.
pub const DEFAULT_STALENESS: u32 = 32;

#[derive(Clone, Debug, PartialEq)]
pub enum BranchChoice {
    /// Split one variable of the quantifier block at `path`, replacing the
    /// node by a junction of two copies.
    QuantSplit { path: Vec<usize>, var: Var },
    /// Split a free variable's interval, yielding two bounded constraints.
    FreeSplit { var: Var },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExhaustedPrecision;

impl fmt::Display for ExhaustedPrecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no splittable bound is left above machine granularity")
    }
}

impl std::error::Error for ExhaustedPrecision {}

/// Number of quantifier blocks on the path from the root to `path`
/// inclusive; free variables live at level 0.
fn level_of_path(phi: &Constraint, path: &[usize]) -> usize {
    let mut node = phi;
    let mut level = 0;
    for &idx in path {
        match node {
            Constraint::Quant(q) => {
                level += 1;
                debug_assert_eq!(idx, 0);
                node = &q.body;
            }
            Constraint::And(j) | Constraint::Or(j) => node = &j.children[idx],
            Constraint::Atom(_) => unreachable!("path descends past a leaf"),
        }
    }
    if matches!(node, Constraint::Quant(_)) {
        level += 1;
    }
    level
}

fn splittable(iv: &Interval) -> bool {
    iv.split().is_ok()
}

/// Widest splittable binding of a quantifier block, if any.
fn widest_splittable_binding(q: &QuantNode) -> Option<Var> {
    q.bindings
        .iter()
        .filter(|(_, iv)| splittable(iv))
        .max_by(|a, b| a.1.width().total_cmp(&b.1.width()))
        .map(|(v, _)| v.clone())
}

/// True when the subtree holds a splittable quantifier target at `desired`
/// (levels counted from `cur`, the number of enclosing quantifier blocks).
fn has_quant_target(node: &Constraint, cur: usize, desired: usize) -> bool {
    match node {
        Constraint::Atom(_) => false,
        Constraint::And(j) | Constraint::Or(j) => j
            .children
            .iter()
            .any(|c| has_quant_target(c, cur, desired)),
        Constraint::Quant(q) => {
            let level = cur + 1;
            if level == desired {
                widest_splittable_binding(q).is_some()
            } else if level < desired {
                has_quant_target(&q.body, level, desired)
            } else {
                false
            }
        }
    }
}

fn max_quant_level(node: &Constraint, cur: usize) -> usize {
    match node {
        Constraint::Atom(_) => cur,
        Constraint::And(j) | Constraint::Or(j) => j
            .children
            .iter()
            .map(|c| max_quant_level(c, cur))
            .max()
            .unwrap_or(cur),
        Constraint::Quant(q) => max_quant_level(&q.body, cur + 1),
    }
}

/// Volume of the shallowest quantifier block in the subtree, used to rank
/// siblings created by an earlier quantifier split.
fn quant_bound_volume(node: &Constraint) -> f64 {
    match node {
        Constraint::Atom(_) => 0.0,
        Constraint::And(j) | Constraint::Or(j) => j
            .children
            .iter()
            .map(quant_bound_volume)
            .fold(0.0, f64::max),
        Constraint::Quant(q) => q
            .bindings
            .iter()
            .map(|(_, iv)| iv.width())
            .product(),
    }
}

/// Walks to a splittable quantifier block at `desired`, advancing
/// round-robin cursors on original junctions and preferring the
/// largest-volume child on branch-created ones.
fn walk_to_target(
    node: &mut Constraint,
    path: &mut Vec<usize>,
    cur: usize,
    desired: usize,
) -> Option<BranchChoice> {
    match node {
        Constraint::Atom(_) => None,
        Constraint::Quant(q) => {
            let level = cur + 1;
            if level == desired {
                let var = widest_splittable_binding(q)?;
                return Some(BranchChoice::QuantSplit {
                    path: path.clone(),
                    var,
                });
            }
            path.push(0);
            let got = walk_to_target(&mut q.body, path, level, desired);
            if got.is_none() {
                path.pop();
            }
            got
        }
        Constraint::And(j) | Constraint::Or(j) => {
            let n = j.children.len();
            let eligible: Vec<usize> = (0..n)
                .filter(|&i| has_quant_target(&j.children[i], cur, desired))
                .collect();
            if eligible.is_empty() {
                return None;
            }
            let idx = if j.from_branching {
                *eligible
                    .iter()
                    .max_by(|&&a, &&b| {
                        quant_bound_volume(&j.children[a])
                            .total_cmp(&quant_bound_volume(&j.children[b]))
                    })
                    .unwrap()
            } else {
                // next eligible child after the round-robin cursor
                let mut pick = eligible[0];
                for off in 1..=n {
                    let cand = (j.last_branched + off) % n;
                    if eligible.contains(&cand) {
                        pick = cand;
                        break;
                    }
                }
                j.last_branched = pick;
                pick
            };
            path.push(idx);
            let got = walk_to_target(&mut j.children[idx], path, cur, desired);
            if got.is_none() {
                path.pop();
            }
            got
        }
    }
}

fn widest_splittable_free(bc: &BoundedConstraint) -> Option<Var> {
    let free = bc.phi.free_vars();
    free.iter()
        .filter(|v| splittable(&bc.bound.get(v)))
        .max_by(|a, b| {
            bc.bound
                .get(a)
                .width()
                .total_cmp(&bc.bound.get(b).width())
        })
        .map(|v| v.clone())
}

/// Picks a branch target inside one bounded constraint, trying the desired
/// level first and then every other level from the outside in.
fn choose_in(bc: &mut BoundedConstraint) -> Option<BranchChoice> {
    let deepest = max_quant_level(&bc.phi, 0);
    let desired = match bc.last_split_level {
        Some(l) if l + 1 <= deepest => l + 1,
        _ => 0,
    };
    let mut order: Vec<usize> = Vec::with_capacity(deepest + 1);
    order.push(desired);
    for lvl in 0..=deepest {
        if lvl != desired {
            order.push(lvl);
        }
    }
    for lvl in order {
        if lvl == 0 {
            if let Some(var) = widest_splittable_free(bc) {
                return Some(BranchChoice::FreeSplit { var });
            }
        } else if has_quant_target(&bc.phi, 0, lvl) {
            let mut path = Vec::new();
            if let Some(c) = walk_to_target(&mut bc.phi, &mut path, 0, lvl) {
                return Some(c);
            }
        }
    }
    None
}

fn bound_volume(bc: &BoundedConstraint) -> f64 {
    let mut vars: VarSet = bc.phi.free_vars();
    for v in bc.bound.vars() {
        vars.insert(v.clone());
    }
    bc.bound.volume(&vars)
}

/// Chooses which bounded constraint to branch and where. Updates age
/// counters (and round-robin cursors inside the chosen tree). Elements
/// without any splittable target are passed over.
pub fn select(
    bcs: &mut [BoundedConstraint],
    staleness: u32,
) -> Result<(usize, BranchChoice), ExhaustedPrecision> {
    let eligible: Vec<usize> = (0..bcs.len())
        .filter(|&i| {
            widest_splittable_free(&bcs[i]).is_some()
                || (1..=max_quant_level(&bcs[i].phi, 0))
                    .any(|l| has_quant_target(&bcs[i].phi, 0, l))
        })
        .collect();
    if eligible.is_empty() {
        return Err(ExhaustedPrecision);
    }
    let stale: Vec<usize> = eligible
        .iter()
        .copied()
        .filter(|&i| bcs[i].age >= staleness)
        .collect();
    let pick = if !stale.is_empty() {
        *stale.iter().max_by_key(|&&i| bcs[i].age).unwrap()
    } else {
        *eligible
            .iter()
            .max_by(|&&a, &&b| {
                bound_volume(&bcs[a])
                    .total_cmp(&bound_volume(&bcs[b]))
                    .then(bcs[a].age.cmp(&bcs[b].age))
            })
            .unwrap()
    };
    let choice = choose_in(&mut bcs[pick]).ok_or(ExhaustedPrecision)?;
    for (i, bc) in bcs.iter_mut().enumerate() {
        if i == pick {
            bc.age = 0;
        } else {
            bc.age = bc.age.saturating_add(1);
        }
    }
    Ok((pick, choice))
}

/// Applies a branch choice. Quantifier splits rewrite the tree in place and
/// return one element; free splits return two elements whose bounds
/// partition the split variable's interval. Marks of atoms mentioning the
/// split variable are cleared in every copy.
pub fn branch(
    bc: &BoundedConstraint,
    choice: &BranchChoice,
) -> Result<Vec<BoundedConstraint>, ExhaustedPrecision> {
    match choice {
        BranchChoice::FreeSplit { var } => {
            let iv = bc.bound.get(var);
            let (i1, i2) = iv.split().map_err(|_| ExhaustedPrecision)?;
            let mut notified = bc.phi.clone();
            let mut vs = VarSet::new();
            vs.insert(var.clone());
            notified.notify(&vs);
            let make = |iv: Interval| BoundedConstraint {
                phi: notified.clone(),
                bound: bc.bound.with(var.clone(), iv),
                last_split_level: Some(0),
                age: 0,
            };
            Ok(vec![make(i1), make(i2)])
        }
        BranchChoice::QuantSplit { path, var } => {
            let level = level_of_path(&bc.phi, path);
            let mut phi = bc.phi.clone();
            let node = phi.get_mut(path).expect("branch path must be valid");
            let Constraint::Quant(q) = node else {
                panic!("branch path must address a quantifier node");
            };
            let (_, iv) = q
                .bindings
                .iter()
                .find(|(v, _)| v == var)
                .expect("split variable must be bound by the block");
            let (i1, i2) = iv.split().map_err(|_| ExhaustedPrecision)?;
            let junction_kind = q.kind;
            let mut vs = VarSet::new();
            vs.insert(var.clone());
            let copy_with = |iv: Interval| {
                let mut c = q.clone();
                for b in c.bindings.iter_mut() {
                    if b.0 == *var {
                        b.1 = iv;
                    }
                }
                c.body.notify(&vs);
                Constraint::Quant(c)
            };
            let children = vec![copy_with(i1), copy_with(i2)];
            let junction = Junction {
                children,
                last_branched: 0,
                from_branching: true,
            };
            *node = match junction_kind {
                QuantKind::Forall => Constraint::And(junction),
                QuantKind::Exists => Constraint::Or(junction),
            };
            Ok(vec![BoundedConstraint {
                phi,
                bound: bc.bound.clone(),
                last_split_level: Some(level),
                age: 0,
            }])
        }
    }
}
