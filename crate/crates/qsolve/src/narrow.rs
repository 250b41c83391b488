//! The atomic narrowing operator: box-consistency-style shaving of one
//! variable bound at a time, driven by interval refutation of boundary
//! slices, with proved-true / proved-false detection feeding the marks.
//!
//! Shaving walks an absolute dyadic grid (multiples of powers of two), so
//! the reachable endpoints of a given atom form a fixed set independent of
//! the starting box. That makes the operator exactly idempotent and
//! monotone — laws the pruning fixpoints above it rely on — instead of
//! merely approximately so.

use crate::boxes::{BoxAssignment, Var};
use crate::constraint::{Atom, Rel};
use crate::interval::{self, Interval};
use crate::prune::{PruneConfig, PruneStats, TraceEvent};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AtomVerdict {
    /// No point of the box satisfies the atom.
    ProvedEmpty,
    /// Every point of the box satisfies the atom.
    ProvedFull,
    Unknown,
}

#[derive(Clone, Copy, Debug)]
pub struct NarrowConfig {
    /// Initial slice width as a fraction of the domain width, in (0, 0.5].
    pub shave_fraction: f64,
    /// Cap on successful slice discards per shave call. A walk that makes
    /// no progress always runs to its natural end, so the narrowing
    /// fixpoint loop can resume a capped walk and land on the same
    /// fixpoint; the cap only bounds work per call.
    pub max_shave_rounds: u32,
    /// Absolute floor for slice widths. The effective floor is the maximum
    /// of this and 16 ulps at the magnitude of the shaved interval.
    pub min_width: f64,
}

impl Default for NarrowConfig {
    fn default() -> Self {
        NarrowConfig {
            shave_fraction: 0.25,
            max_shave_rounds: 64,
            min_width: f64::MIN_POSITIVE,
        }
    }
}

/// Decides an atom on a whole box by one interval evaluation. `ProvedFull`
/// additionally requires the residual to be defined everywhere on the box,
/// since an undefined point falsifies the atom.
pub fn atom_test(a: &Atom, b: &BoxAssignment) -> AtomVerdict {
    if b.is_empty() {
        return AtomVerdict::ProvedEmpty;
    }
    let e = a.term.eval(b);
    if e.range.is_empty() {
        return AtomVerdict::ProvedEmpty;
    }
    match a.rel {
        Rel::Ge => {
            if e.range.hi() < 0.0 {
                AtomVerdict::ProvedEmpty
            } else if e.range.lo() >= 0.0 && e.defined_everywhere {
                AtomVerdict::ProvedFull
            } else {
                AtomVerdict::Unknown
            }
        }
        Rel::Gt => {
            if e.range.hi() <= 0.0 {
                AtomVerdict::ProvedEmpty
            } else if e.range.lo() > 0.0 && e.defined_everywhere {
                AtomVerdict::ProvedFull
            } else {
                AtomVerdict::Unknown
            }
        }
    }
}

/// Exponent of the finest slice width used on `iv`: 16 ulps at the
/// interval's magnitude, coarsened by `min_width` when that is larger.
fn grid_floor_exp(iv: &Interval, cfg: &NarrowConfig) -> i32 {
    let scale = iv.lo().abs().max(iv.hi().abs());
    let scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    let mut e = interval::ulp_of(scale).log2() as i32 + 4;
    if cfg.min_width > 0.0 && cfg.min_width.is_finite() {
        e = e.max(cfg.min_width.log2().floor() as i32);
    }
    e
}

fn initial_exp(iv: &Interval, e_min: i32, cfg: &NarrowConfig) -> i32 {
    let w = iv.width();
    if !(w > 0.0) || !w.is_finite() {
        return e_min;
    }
    let target = cfg.shave_fraction * w;
    (target.log2().floor() as i32).clamp(e_min, 1023)
}

/// Least multiple of 2^e strictly above x.
fn next_grid_above(x: f64, e: i32) -> f64 {
    let step = (e as f64).exp2();
    let mut g = ((x / step).floor() + 1.0) * step;
    if g <= x {
        g = ((x / step).floor() + 2.0) * step;
    }
    g
}

/// Greatest multiple of 2^e strictly below x.
fn prev_grid_below(x: f64, e: i32) -> f64 {
    let step = (e as f64).exp2();
    let mut g = ((x / step).ceil() - 1.0) * step;
    if g >= x {
        g = ((x / step).ceil() - 2.0) * step;
    }
    g
}

enum WalkOutcome {
    /// New bound for the walked side.
    Stopped(f64),
    /// The whole remaining interval was discarded.
    Emptied,
}

struct Walker<'a> {
    atom: &'a Atom,
    b: &'a BoxAssignment,
    var: &'a Var,
    discards: u32,
    max_discards: u32,
    completed: bool,
}

impl<'a> Walker<'a> {
    fn test(&mut self, slice: Interval) -> AtomVerdict {
        let v = atom_test(self.atom, &self.b.with(self.var.clone(), slice));
        if v == AtomVerdict::ProvedEmpty {
            self.discards += 1;
        }
        v
    }

    fn budget_left(&self) -> bool {
        self.discards < self.max_discards
    }

    /// Raises the lower bound of [lo, hi] by discarding provably empty
    /// slices. On `Unknown` at the finest level it additionally tries the
    /// slice with the upper grid point excluded, which lets bounds land
    /// exactly on representable constraint boundaries.
    fn walk_up(&mut self, lo: f64, hi: f64, e_init: i32, e_min: i32) -> WalkOutcome {
        let mut cur = lo;
        let mut e = e_init;
        let mut last_fail: Option<(f64, f64)> = None;
        loop {
            if !self.budget_left() {
                self.completed = false;
                return WalkOutcome::Stopped(cur);
            }
            let g = next_grid_above(cur, e).min(hi);
            let memoized = last_fail == Some((cur, g));
            let verdict = if memoized {
                AtomVerdict::Unknown
            } else {
                self.test(Interval::new(cur, g))
            };
            match verdict {
                AtomVerdict::ProvedEmpty => {
                    if g >= hi {
                        return WalkOutcome::Emptied;
                    }
                    cur = g;
                    last_fail = None;
                }
                AtomVerdict::ProvedFull => return WalkOutcome::Stopped(cur),
                AtomVerdict::Unknown => {
                    if e > e_min {
                        if !memoized {
                            last_fail = Some((cur, g));
                        }
                        e -= 1;
                        continue;
                    }
                    // finest level: try to prove [cur, g) empty so the
                    // bound can settle exactly on the grid point g
                    let g_in = g.next_down();
                    if g > cur && g_in >= cur {
                        if !self.budget_left() {
                            self.completed = false;
                            return WalkOutcome::Stopped(cur);
                        }
                        if self.test(Interval::new(cur, g_in)) == AtomVerdict::ProvedEmpty {
                            if g >= hi {
                                // only the face [hi, hi] remains
                                if !self.budget_left() {
                                    self.completed = false;
                                } else if self.test(Interval::point(hi))
                                    == AtomVerdict::ProvedEmpty
                                {
                                    return WalkOutcome::Emptied;
                                }
                                return WalkOutcome::Stopped(hi);
                            }
                            cur = g;
                            last_fail = None;
                            continue;
                        }
                    }
                    return WalkOutcome::Stopped(cur);
                }
            }
        }
    }

    fn walk_down(&mut self, lo: f64, hi: f64, e_init: i32, e_min: i32) -> WalkOutcome {
        let mut cur = hi;
        let mut e = e_init;
        let mut last_fail: Option<(f64, f64)> = None;
        loop {
            if !self.budget_left() {
                self.completed = false;
                return WalkOutcome::Stopped(cur);
            }
            let g = prev_grid_below(cur, e).max(lo);
            let memoized = last_fail == Some((g, cur));
            let verdict = if memoized {
                AtomVerdict::Unknown
            } else {
                self.test(Interval::new(g, cur))
            };
            match verdict {
                AtomVerdict::ProvedEmpty => {
                    if g <= lo {
                        return WalkOutcome::Emptied;
                    }
                    cur = g;
                    last_fail = None;
                }
                AtomVerdict::ProvedFull => return WalkOutcome::Stopped(cur),
                AtomVerdict::Unknown => {
                    if e > e_min {
                        if !memoized {
                            last_fail = Some((g, cur));
                        }
                        e -= 1;
                        continue;
                    }
                    let g_in = g.next_up();
                    if g < cur && g_in <= cur {
                        if !self.budget_left() {
                            self.completed = false;
                            return WalkOutcome::Stopped(cur);
                        }
                        if self.test(Interval::new(g_in, cur)) == AtomVerdict::ProvedEmpty {
                            if g <= lo {
                                if !self.budget_left() {
                                    self.completed = false;
                                } else if self.test(Interval::point(lo))
                                    == AtomVerdict::ProvedEmpty
                                {
                                    return WalkOutcome::Emptied;
                                }
                                return WalkOutcome::Stopped(lo);
                            }
                            cur = g;
                            last_fail = None;
                            continue;
                        }
                    }
                    return WalkOutcome::Stopped(cur);
                }
            }
        }
    }
}

/// One shave of `B(v)` against atom `a`. Returns the narrowed interval and
/// whether the walk ran to its natural fixpoint (false when the round cap
/// cut it short, in which case re-calling makes further progress).
pub(crate) fn shave_var_impl(
    a: &Atom,
    b: &BoxAssignment,
    v: &Var,
    cfg: &NarrowConfig,
) -> (Interval, bool) {
    let iv = b.get(v);
    if iv.is_empty() {
        return (interval::EMPTY, true);
    }
    match atom_test(a, b) {
        AtomVerdict::ProvedEmpty => return (interval::EMPTY, true),
        AtomVerdict::ProvedFull => return (iv, true),
        AtomVerdict::Unknown => {}
    }
    if !iv.is_finite() {
        // unbounded domains have no boundary face to walk from
        return (iv, true);
    }
    let e_min = grid_floor_exp(&iv, cfg);
    let e_init = initial_exp(&iv, e_min, cfg);
    let mut w = Walker {
        atom: a,
        b,
        var: v,
        discards: 0,
        max_discards: cfg.max_shave_rounds.max(1),
        completed: true,
    };
    let lo = match w.walk_up(iv.lo(), iv.hi(), e_init, e_min) {
        WalkOutcome::Emptied => return (interval::EMPTY, true),
        WalkOutcome::Stopped(x) => x,
    };
    // each boundary face gets its own discard budget
    w.discards = 0;
    let hi = match w.walk_down(lo, iv.hi(), e_init, e_min) {
        WalkOutcome::Emptied => return (interval::EMPTY, true),
        WalkOutcome::Stopped(x) => x,
    };
    (Interval::new(lo, hi), w.completed)
}

/// Narrows `B(v)` to an interval containing every solution of `a` in `B`.
pub fn shave_var(a: &Atom, b: &BoxAssignment, v: &Var, cfg: &NarrowConfig) -> Interval {
    shave_var_impl(a, b, v, cfg).0
}

/// The full atomic narrowing operator: whole-box decision first, then
/// repeated shaving of each (unmarked) variable until a fixpoint. Returns
/// the atom with updated marks and the narrowed bound.
pub fn atomic_narrow(
    a: &Atom,
    b: &BoxAssignment,
    cfg: &PruneConfig,
    stats: &mut PruneStats,
) -> (Atom, BoxAssignment) {
    let mut atom = a.clone();
    let mut bound = b.clone();
    loop {
        match atom_test(&atom, &bound) {
            AtomVerdict::ProvedEmpty => return (atom, BoxAssignment::none()),
            AtomVerdict::ProvedFull => {
                // neither this atom nor its opposite can narrow further
                atom.mark = atom.vars.clone();
                atom.opposite_mark = atom.vars.clone();
                return (atom, bound);
            }
            AtomVerdict::Unknown => {}
        }
        if cfg.exceeded(stats) {
            return (atom, bound);
        }
        let mut changed = false;
        for v in atom.vars.clone() {
            if cfg.use_marks && atom.mark.contains(&v) {
                stats.skipped_by_mark += 1;
                stats.record(|| TraceEvent::SkippedByMark { var: v.clone() });
                if cfg.shadow_check_marks {
                    let (iv, _) = shave_var_impl(&atom, &bound, &v, &cfg.narrow);
                    if iv != bound.get(&v) {
                        stats.shadow_violations += 1;
                    }
                }
                continue;
            }
            stats.atomic_hits += 1;
            stats.record(|| TraceEvent::Shave { var: v.clone() });
            let old = bound.get(&v);
            let (iv, completed) = shave_var_impl(&atom, &bound, &v, &cfg.narrow);
            if iv.is_empty() {
                return (atom, BoxAssignment::none());
            }
            if iv != old {
                bound = bound.with(v.clone(), iv);
                changed = true;
                // progress on v can unlock the other variables of this atom
                atom.mark.clear();
                atom.opposite_mark.clear();
                if completed {
                    atom.mark.insert(v.clone());
                }
            } else if completed {
                atom.mark.insert(v.clone());
            }
        }
        if !changed {
            return (atom, bound);
        }
    }
}
