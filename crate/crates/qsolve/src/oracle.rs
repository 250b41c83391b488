//! Brute-force grid oracles used by the test suites: an approximate degree
//! of truth (quantifiers become min/max over finite sample grids) and a
//! sign-based truth oracle that abstains when the degree is too close to
//! zero for grid error to be trusted.

use std::collections::BTreeMap;
use std::fmt;

use crate::boxes::Var;
use crate::constraint::{Constraint, QuantKind};
use crate::interval::Interval;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub samples_per_axis: usize,
    /// Extra verification passes at doubled resolution. A truth verdict must
    /// survive every pass with the same sign or the oracle abstains.
    pub refinement: Option<u32>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            samples_per_axis: 20,
            refinement: None,
        }
    }
}

impl GridSpec {
    pub fn new(samples_per_axis: usize) -> GridSpec {
        assert!(samples_per_axis >= 2, "need at least the two endpoints");
        GridSpec {
            samples_per_axis,
            refinement: None,
        }
    }

    fn doubled(&self) -> GridSpec {
        GridSpec {
            samples_per_axis: self.samples_per_axis * 2,
            refinement: None,
        }
    }
}

/// Truth degrees within this distance of zero are considered unreliable.
pub const DEFAULT_MARGIN: f64 = 1e-3;

/// Evenly spaced samples including both endpoints, plus the exact midpoint
/// (so symmetric ranges always sample their center).
fn grid_points(i: Interval, n: usize) -> Vec<f64> {
    let (lo, hi) = (i.lo(), i.hi());
    let mut pts = Vec::with_capacity(n + 1);
    for k in 0..n {
        let p = if k == 0 {
            lo
        } else if k == n - 1 {
            hi
        } else {
            lo + (hi - lo) * (k as f64 / (n - 1) as f64)
        };
        pts.push(p);
    }
    let mid = i.midpoint();
    if !pts.contains(&mid) {
        pts.push(mid);
    }
    pts
}

fn quant_degree(
    kind: QuantKind,
    bindings: &[(Var, Interval)],
    body: &Constraint,
    env: &mut BTreeMap<Var, f64>,
    g: &GridSpec,
) -> f64 {
    let Some(((v, range), rest)) = bindings.split_first() else {
        return degree_rec(body, env, g);
    };
    let saved = env.get(v).copied();
    let mut acc = match kind {
        QuantKind::Forall => f64::INFINITY,
        QuantKind::Exists => f64::NEG_INFINITY,
    };
    for p in grid_points(*range, g.samples_per_axis) {
        env.insert(v.clone(), p);
        let d = quant_degree(kind, rest, body, env, g);
        acc = match kind {
            QuantKind::Forall => acc.min(d),
            QuantKind::Exists => acc.max(d),
        };
    }
    match saved {
        Some(old) => env.insert(v.clone(), old),
        None => env.remove(v),
    };
    acc
}

fn degree_rec(phi: &Constraint, env: &mut BTreeMap<Var, f64>, g: &GridSpec) -> f64 {
    match phi {
        Constraint::Atom(a) => {
            let v = a.term.eval_point(env);
            // an undefined point falsifies the atom
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        }
        Constraint::And(j) => j
            .children
            .iter()
            .map(|c| degree_rec(c, env, g))
            .fold(f64::INFINITY, f64::min),
        Constraint::Or(j) => j
            .children
            .iter()
            .map(|c| degree_rec(c, env, g))
            .fold(f64::NEG_INFINITY, f64::max),
        Constraint::Quant(q) => quant_degree(q.kind, &q.bindings, &q.body, env, g),
    }
}

/// How strongly `phi` holds at the assignment `d`: positive means true with
/// room to spare, negative means false. Quantifier bounds are sampled on
/// finite grids, so the value converges to the exact residual infimum or
/// supremum only as the grid refines.
pub fn degree_of_truth(phi: &Constraint, d: &BTreeMap<Var, f64>, g: &GridSpec) -> f64 {
    let mut env = d.clone();
    degree_rec(phi, &mut env, g)
}

/// The oracle declined to classify: the degree of truth is within the margin
/// where grid error could flip the sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NearUnstable;

impl fmt::Display for NearUnstable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "near-unstable, oracle abstains")
    }
}

impl std::error::Error for NearUnstable {}

/// Sign-of-degree truth oracle with a safety margin, plus any configured
/// refinement passes (each at doubled resolution; a sign flip abstains).
pub fn grid_truth_margin(
    phi: &Constraint,
    d: &BTreeMap<Var, f64>,
    g: &GridSpec,
    margin: f64,
) -> Result<bool, NearUnstable> {
    let passes = g.refinement.unwrap_or(0);
    let mut spec = GridSpec {
        refinement: None,
        ..*g
    };
    let mut verdict: Option<bool> = None;
    for _ in 0..=passes {
        let deg = degree_of_truth(phi, d, &spec);
        if deg.abs() < margin {
            return Err(NearUnstable);
        }
        let sign = deg >= 0.0;
        if verdict.is_some_and(|v| v != sign) {
            return Err(NearUnstable);
        }
        verdict = Some(sign);
        spec = spec.doubled();
    }
    Ok(verdict.expect("at least one pass runs"))
}

pub fn grid_truth(
    phi: &Constraint,
    d: &BTreeMap<Var, f64>,
    g: &GridSpec,
) -> Result<bool, NearUnstable> {
    grid_truth_margin(phi, d, g, DEFAULT_MARGIN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_constraint;

    fn at(pairs: &[(&str, f64)]) -> BTreeMap<Var, f64> {
        pairs
            .iter()
            .map(|(v, x)| (Var::new(v), *x))
            .collect()
    }

    #[test]
    fn universal_minimum_at_center() {
        let phi = parse_constraint("forall x in [-1, 1]. x^2 + 1 >= 0").unwrap();
        let d = degree_of_truth(&phi, &BTreeMap::new(), &GridSpec::default());
        assert_eq!(d, 1.0);
    }

    #[test]
    fn existential_zero_degree_marks_instability() {
        let phi = parse_constraint("exists x in [-1, 1]. 0 - x^2 >= 0").unwrap();
        let g = GridSpec::default();
        assert_eq!(degree_of_truth(&phi, &BTreeMap::new(), &g), 0.0);
        assert_eq!(
            grid_truth(&phi, &BTreeMap::new(), &g),
            Err(NearUnstable)
        );
    }

    #[test]
    fn universal_minimum_at_endpoint() {
        let phi = parse_constraint("forall x in [-2, 2]. x >= 0").unwrap();
        let d = degree_of_truth(&phi, &BTreeMap::new(), &GridSpec::default());
        assert_eq!(d, -2.0);
    }

    #[test]
    fn half_disc_membership_by_free_variable() {
        let phi =
            parse_constraint("exists y in [-2, 2]. x^2 + y^2 <= 1 and y >= 0").unwrap();
        let g = GridSpec::default();
        assert_eq!(grid_truth(&phi, &at(&[("x", 0.5)]), &g), Ok(true));
        assert_eq!(grid_truth(&phi, &at(&[("x", 1.5)]), &g), Ok(false));
    }

    #[test]
    fn undefined_points_falsify() {
        let phi = parse_constraint("forall x in [-1, 1]. sqrt(x) >= -5").unwrap();
        let d = degree_of_truth(&phi, &BTreeMap::new(), &GridSpec::default());
        assert_eq!(d, f64::NEG_INFINITY);
    }

    #[test]
    fn degree_of_opposite_is_exact_negation() {
        let sources = [
            "forall x in [-1, 1]. x^2 + 1 >= 0",
            "exists x in [0, 2]. x^3 - x >= 0.5 or x <= 0.25",
            "forall x in [-2, 2]. exists y in [-1, 1]. y - sin(x) >= -0.5",
            "x^2 + y^2 <= 1 and y >= 0",
        ];
        let d = at(&[("x", 0.3), ("y", 0.4)]);
        let g = GridSpec::default();
        for src in sources {
            let phi = parse_constraint(src).unwrap();
            let a = degree_of_truth(&phi, &d, &g);
            let b = degree_of_truth(&phi.opposite(), &d, &g);
            assert_eq!(a, -b, "{}: {} vs {}", src, a, b);
        }
    }

    #[test]
    fn refinement_passes_keep_stable_signs() {
        let g = GridSpec {
            samples_per_axis: 20,
            refinement: Some(3),
        };
        let phi = parse_constraint("forall x in [-1, 1]. x^2 + 1 >= 0").unwrap();
        assert_eq!(grid_truth(&phi, &BTreeMap::new(), &g), Ok(true));
        let phi = parse_constraint("forall x in [-2, 2]. x >= 0").unwrap();
        assert_eq!(grid_truth(&phi, &BTreeMap::new(), &g), Ok(false));
    }

    #[test]
    fn solver_and_oracle_agree_on_stable_closed_instances() {
        use crate::branch::DEFAULT_STALENESS;
        use crate::prune::PruneConfig;
        use crate::solver::{solve_closed, ClosedVerdict, SolveBudget};
        let sources = [
            "forall x in [-10, 10]. x^2 + 1 >= 0",
            "forall x in [-2, 2]. x >= 0",
            "exists x in [0, 4]. x^2 >= 9 and x <= 3.5",
            "exists x in [-1, 1]. 0 - x^2 >= -0.01",
            "forall x in [0, 1]. exists y in [0, 1]. y - x >= -0.1",
        ];
        let g = GridSpec {
            samples_per_axis: 40,
            refinement: None,
        };
        for src in sources {
            let phi = parse_constraint(src).unwrap();
            let expected = grid_truth(&phi, &BTreeMap::new(), &g)
                .unwrap_or_else(|_| panic!("{}: oracle abstained", src));
            let got = solve_closed(
                &phi,
                &PruneConfig::default(),
                &SolveBudget::default(),
                DEFAULT_STALENESS,
            );
            let want = if expected {
                ClosedVerdict::True
            } else {
                ClosedVerdict::False
            };
            assert_eq!(got.verdict, want, "{}", src);
        }
    }
}
