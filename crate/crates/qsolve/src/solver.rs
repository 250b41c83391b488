//! The combined solvers: truth-value decision for closed constraints and
//! ε-volume paving for constraints with free variables. Both alternate
//! pruning of the constraint and of its opposite on a shared tree, and
//! branch when the alternation stalls.

use std::time::{Duration, Instant};

use crate::boxes::{box_difference, BoxAssignment, VarSet};
use crate::branch::{branch, select, ExhaustedPrecision};
use crate::constraint::{BoundedConstraint, Constraint};
use crate::prune::{inner_prune, prune, PruneConfig, PruneStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// A verdict was reached (or the paving met its volume budget).
    Decided,
    TimeBudget,
    HitBudget,
    BoxBudget,
    /// Every remaining bound is below machine granularity.
    ExhaustedPrecision,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedVerdict {
    True,
    False,
    Unknown(StopReason),
}

impl ClosedVerdict {
    pub fn decided(&self) -> bool {
        matches!(self, ClosedVerdict::True | ClosedVerdict::False)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveBudget {
    pub wall: Option<Duration>,
    pub max_hits: Option<u64>,
    pub max_boxes: Option<u64>,
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget {
            wall: Some(Duration::from_secs(600)),
            max_hits: Some(10_000_000),
            max_boxes: Some(1_000_000),
        }
    }
}

impl SolveBudget {
    pub fn unlimited() -> Self {
        SolveBudget {
            wall: None,
            max_hits: None,
            max_boxes: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveStats {
    pub prune: PruneStats,
    /// Bounded constraints created by branching (plus the initial one).
    pub boxes_created: u64,
    /// Branch operations performed.
    pub branches: u64,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct ClosedOutcome {
    pub verdict: ClosedVerdict,
    pub stats: SolveStats,
}

struct Engine {
    cfg: PruneConfig,
    budget: SolveBudget,
    staleness: u32,
    start: Instant,
    stats: SolveStats,
}

impl Engine {
    fn new(cfg: &PruneConfig, budget: &SolveBudget, staleness: u32) -> Engine {
        let start = Instant::now();
        let mut cfg = cfg.clone();
        if let Some(w) = budget.wall {
            let d = start + w;
            cfg.deadline = Some(cfg.deadline.map_or(d, |e| e.min(d)));
        }
        if let Some(h) = budget.max_hits {
            cfg.max_hits = Some(cfg.max_hits.map_or(h, |e| e.min(h)));
        }
        Engine {
            cfg,
            budget: *budget,
            staleness,
            start,
            stats: SolveStats::default(),
        }
    }

    /// Reason the last prune aborted, if it did.
    fn abort_reason(&self) -> Option<StopReason> {
        if !self.stats.prune.aborted {
            return None;
        }
        if let Some(h) = self.cfg.max_hits {
            if self.stats.prune.atomic_hits >= h {
                return Some(StopReason::HitBudget);
            }
        }
        Some(StopReason::TimeBudget)
    }

    fn over_box_budget(&self) -> bool {
        self.budget
            .max_boxes
            .is_some_and(|m| self.stats.boxes_created >= m)
    }

    fn finish(mut self) -> SolveStats {
        self.stats.wall_time = self.start.elapsed();
        self.stats
    }
}

/// Decides a closed constraint by alternately pruning its opposite and
/// itself over the full space, branching quantifier bounds when the
/// alternation stalls. Returns True exactly when a prune of the opposite
/// emptied the bound.
pub fn solve_closed(
    phi: &Constraint,
    cfg: &PruneConfig,
    budget: &SolveBudget,
    staleness: u32,
) -> ClosedOutcome {
    debug_assert!(phi.free_vars().is_empty(), "constraint must be closed");
    let mut eng = Engine::new(cfg, budget, staleness);
    eng.stats.boxes_created = 1;
    let mut bc = BoundedConstraint::new(phi.clone(), BoxAssignment::all());
    let mut neg = true;
    while !bc.bound.is_empty() {
        neg = true;
        let mut prev: Option<(Constraint, BoxAssignment)> = None;
        let (p, b) = inner_prune(&bc.phi, &bc.bound, &eng.cfg, &mut eng.stats.prune);
        bc.phi = p;
        bc.bound = b;
        loop {
            if let Some(r) = eng.abort_reason() {
                return ClosedOutcome {
                    verdict: ClosedVerdict::Unknown(r),
                    stats: eng.finish(),
                };
            }
            if bc.bound.is_empty()
                || prev
                    .as_ref()
                    .is_some_and(|(p, b)| *p == bc.phi && *b == bc.bound)
            {
                break;
            }
            prev = Some((bc.phi.clone(), bc.bound.clone()));
            neg = !neg;
            let (p, b) = if neg {
                inner_prune(&bc.phi, &bc.bound, &eng.cfg, &mut eng.stats.prune)
            } else {
                prune(&bc.phi, &bc.bound, &eng.cfg, &mut eng.stats.prune)
            };
            bc.phi = p;
            bc.bound = b;
        }
        if !bc.bound.is_empty() {
            if eng.over_box_budget() {
                return ClosedOutcome {
                    verdict: ClosedVerdict::Unknown(StopReason::BoxBudget),
                    stats: eng.finish(),
                };
            }
            let mut slot = [bc];
            let choice = match select(&mut slot, eng.staleness) {
                Ok((_, c)) => c,
                Err(ExhaustedPrecision) => {
                    return ClosedOutcome {
                        verdict: ClosedVerdict::Unknown(StopReason::ExhaustedPrecision),
                        stats: eng.finish(),
                    };
                }
            };
            let [old] = slot;
            let mut out = branch(&old, &choice).expect("selected target must be splittable");
            debug_assert_eq!(out.len(), 1, "closed constraints admit only quantifier splits");
            eng.stats.branches += 1;
            eng.stats.boxes_created += out.len() as u64;
            bc = out.pop().unwrap();
        }
    }
    ClosedOutcome {
        verdict: if neg {
            ClosedVerdict::True
        } else {
            ClosedVerdict::False
        },
        stats: eng.finish(),
    }
}

/// An ε-paving of an input box: `yes` lies inside the solution set, `no`
/// outside it, and `residual` is the undecided remainder (of total volume
/// below epsilon when `reason` is `Decided`).
#[derive(Clone, Debug)]
pub struct Paving {
    pub yes: Vec<BoxAssignment>,
    pub no: Vec<BoxAssignment>,
    pub residual: Vec<BoundedConstraint>,
    pub epsilon: f64,
    pub vars: VarSet,
    pub reason: StopReason,
    pub stats: SolveStats,
}

impl Paving {
    pub fn volume_yes(&self) -> f64 {
        self.yes.iter().map(|b| b.volume(&self.vars)).sum()
    }

    pub fn volume_no(&self) -> f64 {
        self.no.iter().map(|b| b.volume(&self.vars)).sum()
    }

    pub fn volume_residual(&self) -> f64 {
        self.residual
            .iter()
            .map(|bc| bc.bound.volume(&self.vars))
            .sum()
    }
}

/// Largest-volume element choice with the same age-based fairness override
/// used by branch selection.
fn choose_element(u: &mut Vec<BoundedConstraint>, staleness: u32, vars: &VarSet) -> usize {
    let stale = (0..u.len())
        .filter(|&i| u[i].age >= staleness)
        .max_by_key(|&i| u[i].age);
    let pick = stale.unwrap_or_else(|| {
        (0..u.len())
            .max_by(|&a, &b| {
                u[a].bound
                    .volume(vars)
                    .total_cmp(&u[b].bound.volume(vars))
                    .then(u[a].age.cmp(&u[b].age))
            })
            .expect("worklist is nonempty")
    });
    for (i, bc) in u.iter_mut().enumerate() {
        if i != pick {
            bc.age = bc.age.saturating_add(1);
        }
    }
    pick
}

/// Paves `b` into boxes where `phi` holds, boxes where it fails, and a
/// residual of volume below `epsilon`, by alternating inner and outer
/// pruning of worklist elements and branching the survivors.
pub fn pave(
    phi: &Constraint,
    b: &BoxAssignment,
    epsilon: f64,
    cfg: &PruneConfig,
    budget: &SolveBudget,
    staleness: u32,
) -> Paving {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let mut vars: VarSet = phi.free_vars();
    for v in b.vars() {
        vars.insert(v.clone());
    }
    debug_assert!(
        vars.iter().all(|v| b.get(v).is_finite()),
        "paving requires finite bounds on all variables"
    );
    let mut eng = Engine::new(cfg, budget, staleness);
    eng.stats.boxes_created = 1;
    let mut yes: Vec<BoxAssignment> = Vec::new();
    let mut no: Vec<BoxAssignment> = Vec::new();
    let mut u: Vec<BoundedConstraint> = vec![BoundedConstraint::new(phi.clone(), b.clone())];
    // elements whose bounds are too small to split further
    let mut terminal: Vec<BoundedConstraint> = Vec::new();
    let reason = 'outer: loop {
        let vol_u: f64 = u
            .iter()
            .chain(terminal.iter())
            .map(|bc| bc.bound.volume(&vars))
            .sum();
        if vol_u < epsilon {
            break StopReason::Decided;
        }
        if u.is_empty() {
            break StopReason::ExhaustedPrecision;
        }
        if eng.over_box_budget() {
            break StopReason::BoxBudget;
        }
        let idx = choose_element(&mut u, eng.staleness, &vars);
        let mut bc = u.swap_remove(idx);
        let mut neg = true;
        let mut prev = (bc.phi.clone(), bc.bound.clone());
        let mut first = true;
        loop {
            if first {
                first = false;
            } else {
                if bc.bound.is_empty() || (bc.phi == prev.0 && bc.bound == prev.1) {
                    break;
                }
                prev = (bc.phi.clone(), bc.bound.clone());
                neg = !neg;
            }
            let before = bc.bound.clone();
            let (p, nb) = if neg {
                inner_prune(&bc.phi, &bc.bound, &eng.cfg, &mut eng.stats.prune)
            } else {
                prune(&bc.phi, &bc.bound, &eng.cfg, &mut eng.stats.prune)
            };
            bc.phi = p;
            bc.bound = nb;
            let carved = box_difference(&before, &bc.bound, &vars);
            if neg {
                yes.extend(carved);
            } else {
                no.extend(carved);
            }
            if let Some(r) = eng.abort_reason() {
                if !bc.bound.is_empty() {
                    u.push(bc);
                }
                break 'outer r;
            }
        }
        if !bc.bound.is_empty() {
            let mut slot = [bc];
            match select(&mut slot, eng.staleness) {
                Ok((_, choice)) => {
                    let [old] = slot;
                    let out = branch(&old, &choice).expect("selected target must be splittable");
                    eng.stats.branches += 1;
                    eng.stats.boxes_created += out.len() as u64;
                    u.extend(out);
                }
                Err(ExhaustedPrecision) => {
                    let [old] = slot;
                    terminal.push(old);
                }
            }
        }
    };
    u.extend(terminal);
    Paving {
        yes,
        no,
        residual: u,
        epsilon,
        vars,
        reason,
        stats: eng.finish(),
    }
}
