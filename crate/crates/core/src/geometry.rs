//! Critical manifold geometry: nullclines, fold point, branch labels, the
//! desingularized slow flow, singular cycles and the entry-exit function.

use crate::model::ModelParams;
use thiserror::Error;

/// Tolerance on `|u - u_p|` for the fold branch label.
pub const TOL_BRANCH_FOLD: f64 = 1e-10;

/// Number of points per slow arc of a singular cycle.
const SLOW_ARC_POINTS: usize = 2000;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("u = {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("singular cycle kind unavailable: {0}")]
    KindUnavailable(String),
    #[error("entry-exit integrand undefined: log argument {0} is nonpositive")]
    DomainError(f64),
    #[error("no sign change of I on ({lo}, {hi}): entry-exit preconditions violated")]
    BracketFailure { lo: f64, hi: f64 },
}

/// Prey nullcline `h(u) = (u+A)(1-u)(u-M)` (the cubic critical branch).
pub fn h(p: &ModelParams, u: f64) -> f64 {
    (u + p.a) * (1.0 - u) * (u - p.m)
}

/// Predator nullcline `l(u) = (u+C)/Q`.
pub fn l(p: &ModelParams, u: f64) -> f64 {
    (u + p.c) / p.q
}

/// `h'(u) = -3u^2 + 2(1-A+M)u + (A-M+AM)`.
pub fn h_prime(p: &ModelParams, u: f64) -> f64 {
    -3.0 * u * u + 2.0 * (1.0 - p.a + p.m) * u + p.k()
}

/// `h''(u) = -6u + 2(1-A+M)`.
pub fn h_second(p: &ModelParams, u: f64) -> f64 {
    -6.0 * u + 2.0 * (1.0 - p.a + p.m)
}

/// `psi(u) = (AM + h(u))/u = (A-M+AM) + (1+M-A)u - u^2`; the shifted critical
/// branch seen from `T_C`.
pub fn psi(p: &ModelParams, u: f64) -> f64 {
    p.k() + (1.0 + p.m - p.a) * u - u * u
}

/// The fold of the cubic branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldPoint {
    pub u_p: f64,
    pub v_p: f64,
    /// `sqrt(A^2 + AM + A + M^2 - M + 1)`
    pub beta: f64,
}

/// Unique maximum `P = (u_p, v_p)` of `h` on `(0, 1)`:
/// `u_p = (1 - A + M + beta)/3` with the closed-form `v_p` product.
pub fn fold_point(p: &ModelParams) -> FoldPoint {
    let (a, m) = (p.a, p.m);
    let beta = (a * a + a * m + a + m * m - m + 1.0).sqrt();
    let u_p = (1.0 - a + m + beta) / 3.0;
    let v_p = (1.0 - a - 2.0 * m + beta) * (2.0 + a - m - beta) * (1.0 + 2.0 * a + m + beta) / 27.0;
    FoldPoint { u_p, v_p, beta }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `0 <= u < u_p`
    Repelling,
    /// `u_p < u <= 1`
    Attracting,
    Fold,
}

/// Branch label of a point of the cubic critical branch.
pub fn branch_of(p: &ModelParams, u: f64) -> Result<Branch, GeometryError> {
    if !(0.0..=1.0).contains(&u) {
        return Err(GeometryError::OutOfRange(u));
    }
    let u_p = fold_point(p).u_p;
    if (u - u_p).abs() <= TOL_BRANCH_FOLD {
        Ok(Branch::Fold)
    } else if u < u_p {
        Ok(Branch::Repelling)
    } else {
        Ok(Branch::Attracting)
    }
}

/// Desingularized slow equation `u + C - Q h(u)`.
///
/// The true reduced-flow direction is this value times `sign(h'(u))`.
pub fn desingularized_slow_flow(p: &ModelParams, u: f64) -> f64 {
    u + p.c - p.q * h(p, u)
}

/// L'Hospital value of the reduced flow at the fold when the slow nullcline
/// passes through it: `h(u_p)(u_p + A)/h''(u_p) < 0`. Independent of `Q`.
pub fn slow_flow_at_fold(p: &ModelParams) -> f64 {
    let fp = fold_point(p);
    h(p, fp.u_p) * (fp.u_p + p.a) / h_second(p, fp.u_p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Fast,
    Slow,
}

#[derive(Debug, Clone)]
pub struct CycleSegment {
    pub kind: SegmentKind,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularCycleKind {
    /// `C < -AMQ`: jump at `P`, entry-exit departure from the v-axis.
    GenericRelaxation,
    /// `C = -AMQ`: maximal canard through `P`, transition at `T_C`.
    DegenerateTransitory,
    /// `C = -AMQ`: jump at `P`, transition at `T_C`.
    DegenerateRelaxation,
}

/// A closed concatenation of fast fibers and slow arcs.
#[derive(Debug, Clone)]
pub struct SingularCycle {
    pub kind: SingularCycleKind,
    pub segments: Vec<CycleSegment>,
    /// Corner points, in traversal order.
    pub vertices: Vec<(f64, f64)>,
}

impl SingularCycle {
    /// Cycle as one closed polyline (last point repeats the first).
    pub fn polyline(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        for seg in &self.segments {
            let skip = usize::from(!pts.is_empty());
            pts.extend(seg.points.iter().skip(skip));
        }
        pts
    }
}

fn slow_arc_on_h(p: &ModelParams, u_from: f64, u_to: f64) -> Vec<(f64, f64)> {
    let n = SLOW_ARC_POINTS;
    (0..=n)
        .map(|i| {
            let u = u_from + (u_to - u_from) * i as f64 / n as f64;
            (u, h(p, u))
        })
        .collect()
}

fn slow_arc_on_axis(v_from: f64, v_to: f64) -> Vec<(f64, f64)> {
    let n = SLOW_ARC_POINTS;
    (0..=n)
        .map(|i| (0.0, v_from + (v_to - v_from) * i as f64 / n as f64))
        .collect()
}

/// Root of `h(u) = v` on the attracting branch `(u_p, 1)`, by bisection.
fn attracting_branch_root(p: &ModelParams, v: f64) -> Option<f64> {
    let fp = fold_point(p);
    let (mut lo, mut hi) = (fp.u_p, 1.0);
    if !(h(p, hi) - v <= 0.0 && h(p, lo) - v >= 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(p, mid) - v >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Builds the requested singular cycle.
///
/// * generic relaxation: v-axis arc `v_p -> v0`, fast fiber at `v0` to the
///   attracting branch, slow arc up to `P`, fast fiber at `v_p` back to the
///   axis (with `v0` from [`solve_exit_point`]);
/// * degenerate kinds replace the exit at `v0` by departure at
///   `T_C = (0, -AM)`; the transitory kind additionally rides the repelling
///   branch from `P` down to `T_C` instead of the v-axis.
pub fn build_singular_cycle(
    p: &ModelParams,
    kind: SingularCycleKind,
) -> Result<SingularCycle, GeometryError> {
    let fp = fold_point(p);
    let (u_p, v_p) = (fp.u_p, fp.v_p);
    let am = -p.a * p.m; // height of T_C
    let degenerate = p.is_degenerate();
    let unavailable = |msg: &str| GeometryError::KindUnavailable(msg.to_string());

    match kind {
        SingularCycleKind::GenericRelaxation => {
            if degenerate || p.c >= -p.a * p.m * p.q {
                return Err(unavailable("generic relaxation needs C < -AMQ"));
            }
            let exit = solve_exit_point(p, v_p)?;
            let v0 = exit.v0;
            let u_land = attracting_branch_root(p, v0)
                .ok_or_else(|| unavailable("no attracting-branch landing for v0"))?;
            let segments = vec![
                CycleSegment {
                    kind: SegmentKind::Slow,
                    points: slow_arc_on_axis(v_p, v0),
                },
                CycleSegment {
                    kind: SegmentKind::Fast,
                    points: vec![(0.0, v0), (u_land, v0)],
                },
                CycleSegment {
                    kind: SegmentKind::Slow,
                    points: slow_arc_on_h(p, u_land, u_p),
                },
                CycleSegment {
                    kind: SegmentKind::Fast,
                    points: vec![(u_p, v_p), (0.0, v_p)],
                },
            ];
            Ok(SingularCycle {
                kind,
                segments,
                vertices: vec![(0.0, v_p), (0.0, v0), (u_land, v0), (u_p, v_p)],
            })
        }
        SingularCycleKind::DegenerateRelaxation | SingularCycleKind::DegenerateTransitory => {
            if !degenerate {
                return Err(unavailable("degenerate cycles need C = -AMQ"));
            }
            if p.k() <= 1.0 / p.q {
                return Err(unavailable("degenerate cycles need A - M + AM > 1/Q"));
            }
            let u_land = attracting_branch_root(p, am)
                .ok_or_else(|| unavailable("no attracting-branch landing at v = -AM"))?;
            if kind == SingularCycleKind::DegenerateRelaxation {
                let segments = vec![
                    CycleSegment {
                        kind: SegmentKind::Slow,
                        points: slow_arc_on_axis(v_p, am),
                    },
                    CycleSegment {
                        kind: SegmentKind::Fast,
                        points: vec![(0.0, am), (u_land, am)],
                    },
                    CycleSegment {
                        kind: SegmentKind::Slow,
                        points: slow_arc_on_h(p, u_land, u_p),
                    },
                    CycleSegment {
                        kind: SegmentKind::Fast,
                        points: vec![(u_p, v_p), (0.0, v_p)],
                    },
                ];
                Ok(SingularCycle {
                    kind,
                    segments,
                    vertices: vec![(0.0, v_p), (0.0, am), (u_land, am), (u_p, v_p)],
                })
            } else {
                // maximal canard: slow passage through P along the repelling
                // branch down to T_C, transition, fast fiber, slow return to P
                let segments = vec![
                    CycleSegment {
                        kind: SegmentKind::Slow,
                        points: slow_arc_on_h(p, u_p, 0.0),
                    },
                    CycleSegment {
                        kind: SegmentKind::Fast,
                        points: vec![(0.0, am), (u_land, am)],
                    },
                    CycleSegment {
                        kind: SegmentKind::Slow,
                        points: slow_arc_on_h(p, u_land, u_p),
                    },
                ];
                Ok(SingularCycle {
                    kind,
                    segments,
                    vertices: vec![(u_p, v_p), (0.0, am), (u_land, am)],
                })
            }
        }
    }
}

/// Entry-exit accumulated-contraction integral
/// `I(v0) = ((AMQ+C)/(AQ eps)) ln((C-Q v_p)/(C-Q v0)) + (M/eps) ln(v0/v_p)`.
pub fn entry_exit_i(p: &ModelParams, v_p: f64, v0: f64) -> Result<f64, GeometryError> {
    let arg1 = (p.c - p.q * v_p) / (p.c - p.q * v0);
    if arg1 <= 0.0 {
        return Err(GeometryError::DomainError(arg1));
    }
    let arg2 = v0 / v_p;
    if arg2 <= 0.0 {
        return Err(GeometryError::DomainError(arg2));
    }
    let t1 = (p.a * p.m * p.q + p.c) / (p.a * p.q * p.eps) * arg1.ln();
    let t2 = p.m / p.eps * arg2.ln();
    Ok(t1 + t2)
}

/// Exit height solved from `I(v0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitPointResult {
    /// Entry height.
    pub v_p: f64,
    /// Exit height `p(v_p)`, in `(C/Q, -AM)`.
    pub v0: f64,
    pub i_residual: f64,
}

/// Unique root of the entry-exit function in `(C/Q, -AM)`, bisection plus a
/// Newton polish. Requires `0 < C < -AMQ` and `v_p > -AM`.
pub fn solve_exit_point(p: &ModelParams, v_p: f64) -> Result<ExitPointResult, GeometryError> {
    let lo_lim = p.c / p.q;
    let hi_lim = -p.a * p.m;
    let width = hi_lim - lo_lim;
    if !(width > 0.0 && v_p > hi_lim && p.c > 0.0) {
        return Err(GeometryError::BracketFailure {
            lo: lo_lim,
            hi: hi_lim,
        });
    }
    let delta = 1e-12 * width.max(1.0);
    let mut lo = lo_lim + delta;
    let mut hi = hi_lim - delta;
    let f_lo = entry_exit_i(p, v_p, lo)?;
    let f_hi = entry_exit_i(p, v_p, hi)?;
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(GeometryError::BracketFailure {
            lo: lo_lim,
            hi: hi_lim,
        });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if entry_exit_i(p, v_p, mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish with dI/dv0 = C(AM + v0)/(A eps v0 (C - Q v0)), keeping
    // the best-residual iterate (roots close to the log singularity at C/Q
    // are conditioned to about one ulp of v0)
    let mut v0 = 0.5 * (lo + hi);
    let mut best = (v0, entry_exit_i(p, v_p, v0)?.abs());
    for _ in 0..30 {
        let fi = entry_exit_i(p, v_p, v0)?;
        if fi.abs() < best.1 {
            best = (v0, fi.abs());
        }
        let di = p.c * (p.a * p.m + v0) / (p.a * p.eps * v0 * (p.c - p.q * v0));
        let cand = v0 - fi / di;
        if !(cand > lo_lim && cand < hi_lim) || cand == v0 {
            break;
        }
        v0 = cand;
    }
    let last = entry_exit_i(p, v_p, v0)?.abs();
    if last < best.1 {
        best = (v0, last);
    }
    Ok(ExitPointResult {
        v_p,
        v0: best.0,
        i_residual: best.1,
    })
}
