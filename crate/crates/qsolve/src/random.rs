//! Seeded random generation of terms, constraints, and boxes, plus an
//! oracle-certified corpus of closed instances. Everything is deterministic
//! in the seed so failures reproduce exactly.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boxes::{BoxAssignment, Var};
use crate::constraint::{Constraint, QuantKind, QuantNode, Rel};
use crate::interval::Interval;
use crate::oracle::{grid_truth_margin, GridSpec};
use crate::term::{Term, UnaryFn};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const NAMES: [&str; 4] = ["x", "y", "z", "w"];

pub fn var_pool(n: usize) -> Vec<Var> {
    NAMES.iter().take(n.min(NAMES.len())).map(|s| Var::new(s)).collect()
}

/// A modest constant that both prints and re-parses to the same point value.
fn random_constant(rng: &mut impl Rng) -> Arc<Term> {
    let eighths: i32 = rng.gen_range(-24..=24);
    Term::constant(f64::from(eighths) / 8.0)
}

/// A random arithmetic term over `vars` with roughly `size` operator nodes.
/// With `total_only`, partial operations (division, square root, logarithm)
/// are excluded so the term is defined on all of its domain.
pub fn random_term(
    rng: &mut impl Rng,
    vars: &[Var],
    size: usize,
    total_only: bool,
) -> Arc<Term> {
    if size == 0 || rng.gen_bool(0.2) {
        return if vars.is_empty() || rng.gen_bool(0.3) {
            random_constant(rng)
        } else {
            Arc::new(Term::Var(vars.choose(rng).unwrap().clone()))
        };
    }
    let next = size / 2;
    match rng.gen_range(0..10) {
        0 | 1 => Arc::new(Term::Add(
            random_term(rng, vars, next, total_only),
            random_term(rng, vars, next, total_only),
        )),
        2 | 3 => Arc::new(Term::Sub(
            random_term(rng, vars, next, total_only),
            random_term(rng, vars, next, total_only),
        )),
        4 | 5 => Arc::new(Term::Mul(
            random_term(rng, vars, next, total_only),
            random_term(rng, vars, next, total_only),
        )),
        6 => Arc::new(Term::Neg(random_term(rng, vars, next, total_only))),
        7 => Arc::new(Term::Pow(
            random_term(rng, vars, next, total_only),
            rng.gen_range(2..=3),
        )),
        8 => {
            let f = if total_only {
                *[UnaryFn::Sin, UnaryFn::Cos, UnaryFn::Abs].choose(rng).unwrap()
            } else {
                *[
                    UnaryFn::Sin,
                    UnaryFn::Cos,
                    UnaryFn::Abs,
                    UnaryFn::Exp,
                    UnaryFn::Sqrt,
                    UnaryFn::Log,
                ]
                .choose(rng)
                .unwrap()
            };
            Arc::new(Term::Fn(f, random_term(rng, vars, next, total_only)))
        }
        _ => {
            if total_only {
                Arc::new(Term::Add(
                    random_term(rng, vars, next, total_only),
                    random_term(rng, vars, next, total_only),
                ))
            } else {
                Arc::new(Term::Div(
                    random_term(rng, vars, next, total_only),
                    random_term(rng, vars, next, total_only),
                ))
            }
        }
    }
}

pub fn random_rel(rng: &mut impl Rng) -> Rel {
    if rng.gen_bool(0.5) {
        Rel::Ge
    } else {
        Rel::Gt
    }
}

fn random_atom(rng: &mut impl Rng, vars: &[Var], total_only: bool) -> Constraint {
    Constraint::atom(random_term(rng, vars, 4, total_only), random_rel(rng))
}

/// An interval with quarter-integer endpoints in [-4, 4] and width >= 1/2.
pub fn random_interval(rng: &mut impl Rng) -> Interval {
    let lo: i32 = rng.gen_range(-16..=14);
    let hi: i32 = rng.gen_range(lo + 2..=16);
    Interval::new(f64::from(lo) / 4.0, f64::from(hi) / 4.0)
}

pub fn random_box(rng: &mut impl Rng, vars: &[Var]) -> BoxAssignment {
    let mut b = BoxAssignment::all();
    for v in vars {
        b = b.with(v.clone(), random_interval(rng));
    }
    b
}

fn gen_constraint(
    rng: &mut impl Rng,
    scope: &mut Vec<Var>,
    quant_left: usize,
    depth_left: usize,
    total_only: bool,
) -> Constraint {
    let unused: Vec<Var> = var_pool(NAMES.len())
        .into_iter()
        .filter(|v| !scope.contains(v))
        .collect();
    let can_quant = quant_left > 0 && !unused.is_empty();
    let must_quant = scope.is_empty() && can_quant;
    let roll = rng.gen_range(0..10);
    if must_quant || (can_quant && roll < 3) {
        let kind = if rng.gen_bool(0.5) {
            QuantKind::Forall
        } else {
            QuantKind::Exists
        };
        let v = unused.choose(rng).unwrap().clone();
        let binding = random_interval(rng);
        scope.push(v.clone());
        let body = gen_constraint(rng, scope, quant_left - 1, depth_left, total_only);
        scope.pop();
        match body {
            // same-kind blocks print merged, so build them merged
            Constraint::Quant(q) if q.kind == kind => {
                let mut bindings = vec![(v, binding)];
                bindings.extend(q.bindings);
                Constraint::Quant(QuantNode {
                    kind,
                    bindings,
                    body: q.body,
                })
            }
            other => Constraint::quant(kind, vec![(v, binding)], other),
        }
    } else if depth_left > 0 && roll < 7 {
        let n = rng.gen_range(2..=3);
        let children = (0..n)
            .map(|_| gen_constraint(rng, scope, quant_left, depth_left - 1, total_only))
            .collect();
        if rng.gen_bool(0.5) {
            Constraint::and(children)
        } else {
            Constraint::or(children)
        }
    } else {
        random_atom(rng, scope, total_only)
    }
}

/// A random constraint whose free variables are drawn from `free`, with at
/// most `quant_blocks` quantifier blocks and connective depth `depth`.
pub fn random_constraint(
    rng: &mut impl Rng,
    free: &[Var],
    quant_blocks: usize,
    depth: usize,
    total_only: bool,
) -> Constraint {
    let mut scope = free.to_vec();
    if scope.is_empty() && quant_blocks == 0 {
        // nothing to talk about: fall back to a ground atom
        return random_atom(rng, &[], total_only);
    }
    gen_constraint(rng, &mut scope, quant_blocks, depth, total_only)
}

/// A random closed constraint (every variable quantified).
pub fn random_closed(rng: &mut impl Rng, total_only: bool) -> Constraint {
    gen_constraint(rng, &mut Vec::new(), 2, 2, total_only)
}

/// Grid used to certify corpus verdicts: 40 samples per axis plus one
/// doubling pass, with a wide margin so only clearly-signed instances pass.
pub fn certification_grid() -> GridSpec {
    GridSpec {
        samples_per_axis: 40,
        refinement: Some(1),
    }
}

pub const CERTIFICATION_MARGIN: f64 = 0.05;

/// Deterministically generates closed constraints and keeps the first `want`
/// whose truth value the grid oracle certifies with a wide stability margin.
pub fn certified_closed_corpus(seed: u64, want: usize) -> Vec<(Constraint, bool)> {
    let mut rng = rng_from_seed(seed);
    let g = certification_grid();
    let empty = BTreeMap::new();
    let mut out = Vec::with_capacity(want);
    while out.len() < want {
        let phi = random_closed(&mut rng, true);
        debug_assert!(phi.check_wellformed().is_ok());
        if let Ok(verdict) = grid_truth_margin(&phi, &empty, &g, CERTIFICATION_MARGIN) {
            out.push((phi, verdict));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_constraint;

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let mk = || {
            let mut rng = rng_from_seed(7);
            let free = var_pool(2);
            (0..20)
                .map(|_| random_constraint(&mut rng, &free, 2, 2, false).to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(mk(), mk());
    }

    #[test]
    fn generated_constraints_are_wellformed_and_reparse() {
        let mut rng = rng_from_seed(42);
        let free = var_pool(2);
        for i in 0..100 {
            let phi = random_constraint(&mut rng, &free, 2, 2, false);
            phi.check_wellformed()
                .unwrap_or_else(|d| panic!("instance {}: {:?}", i, d));
            let printed = phi.to_string();
            let back = parse_constraint(&printed)
                .unwrap_or_else(|e| panic!("instance {}: {} on {}", i, e, printed));
            assert_eq!(back.to_string(), printed, "instance {}", i);
        }
    }

    #[test]
    fn closed_generation_has_no_free_variables() {
        let mut rng = rng_from_seed(3);
        for _ in 0..50 {
            let phi = random_closed(&mut rng, true);
            assert!(phi.free_vars().is_empty(), "{}", phi);
        }
    }

    #[test]
    fn certified_corpus_reaches_the_requested_size() {
        let corpus = certified_closed_corpus(1, 10);
        assert_eq!(corpus.len(), 10);
        let trues = corpus.iter().filter(|(_, v)| *v).count();
        assert!(trues > 0 && trues < 10, "want a mix, got {} true of 10", trues);
    }

    #[test]
    fn random_boxes_are_finite_with_positive_width() {
        let mut rng = rng_from_seed(5);
        let vars = var_pool(4);
        for _ in 0..50 {
            let b = random_box(&mut rng, &vars);
            for v in &vars {
                let i = b.get(v);
                assert!(i.is_finite());
                assert!(i.width() >= 0.5);
            }
        }
    }
}
