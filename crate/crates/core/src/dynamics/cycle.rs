//! Limit-cycle detection through a Poincare section return map.

use super::integrator::{record_step, Driver};
use super::DynamicsError;
use crate::model::{eval_full_field, ModelParams, State};

/// Convergence threshold on successive section crossings.
const RETURN_TOL: f64 = 1e-8;

/// A section line with a fixed crossing direction (the section coordinate
/// must be decreasing through the crossing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Section {
    /// Vertical line `u = const`, crossed with `du/dt < 0`.
    UConst(f64),
    /// Horizontal line `v = const`, crossed with `dv/dt < 0`.
    VConst(f64),
}

impl Section {
    fn g(&self, y: [f64; 2]) -> f64 {
        match self {
            Section::UConst(c) => y[0] - c,
            Section::VConst(c) => y[1] - c,
        }
    }

    /// The non-section coordinate (the return-map variable).
    fn transverse(&self, y: [f64; 2]) -> f64 {
        match self {
            Section::UConst(_) => y[1],
            Section::VConst(_) => y[0],
        }
    }

    fn point(&self, transverse: f64) -> State {
        match self {
            Section::UConst(c) => State::new(*c, transverse),
            Section::VConst(c) => State::new(transverse, *c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleStability {
    Attracting,
    Repelling,
    Undetermined,
}

/// A detected periodic orbit.
#[derive(Debug, Clone)]
pub struct LimitCycle {
    /// Closed polyline (last point repeats the first).
    pub points: Vec<State>,
    pub period: f64,
    pub amplitude_u: f64,
    pub stability: CycleStability,
    /// Empirical contraction ratio of successive crossing distances.
    pub floquet_proxy: f64,
}

impl LimitCycle {
    pub fn polyline(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|s| (s.u, s.v)).collect()
    }

    /// Minimum distance from the cycle to a point.
    pub fn distance_to(&self, point: (f64, f64)) -> f64 {
        self.points
            .iter()
            .map(|s| ((s.u - point.0).powi(2) + (s.v - point.1).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

struct Crossing {
    t: f64,
    state: [f64; 2],
}

/// Integrates until the next decreasing crossing of the section, optionally
/// recording the states along the way.
fn next_crossing(
    p: &ModelParams,
    driver: &mut Driver,
    section: Section,
    t_budget: f64,
    tol: f64,
    mut record: Option<(&mut Vec<f64>, &mut Vec<State>)>,
) -> Result<Option<Crossing>, DynamicsError> {
    // the detector arms only after the orbit moves a finite distance to the
    // positive side, so a leg starting on the section cannot retrigger
    const ARM: f64 = 1e-4;
    let t_limit = driver.t + t_budget;
    let mut armed = section.g(driver.y) > ARM;
    let mut g_prev = section.g(driver.y);
    while driver.t < t_limit {
        let t_before = driver.t;
        let dense = driver.step_toward(t_limit)?;
        if let Some((times, states)) = record.as_mut() {
            record_step(&dense, t_before, driver.t, driver.y, times, states);
        }
        // an interior orbit whose speed has collapsed to the tolerance-noise
        // floor has converged onto an equilibrium and can never cross again
        // (the near-axis crawl past the transcritical point is exempt: it
        // escapes, and only ever drops below this speed at u < 0.02)
        let f = eval_full_field(p, State::new(driver.y[0], driver.y[1]));
        let speed_floor = 1e3 * tol;
        if driver.y[0] > 0.02 && f.du.abs() < speed_floor && f.dv.abs() < speed_floor {
            return Ok(None);
        }
        let g_now = section.g(driver.y);
        if !armed {
            if g_now > ARM {
                armed = true;
            }
            g_prev = g_now;
            continue;
        }
        if g_prev > 0.0 && g_now <= 0.0 {
            // locate the decreasing crossing inside this step on the dense
            // interpolant
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if section.g(dense.eval(mid)) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let theta = 0.5 * (lo + hi);
            let y = dense.eval(theta);
            return Ok(Some(Crossing {
                t: dense.t0 + theta * dense.h,
                state: y,
            }));
        }
        g_prev = g_now;
    }
    Ok(None)
}

/// Iterates the section return map from `x0` until successive crossings
/// differ by less than 1e-8, then extracts one period.
///
/// Convergence onto an equilibrium spiral (near-zero amplitude) is reported
/// as `NoConvergence` with the crossing history. An Aitken extrapolation of
/// the crossing sequence accelerates the weakly contracting returns near a
/// Hopf point.
pub fn find_limit_cycle(
    p: &ModelParams,
    section: Section,
    x0: State,
    max_returns: usize,
) -> Result<LimitCycle, DynamicsError> {
    find_limit_cycle_tol(p, section, x0, max_returns, 1e-10)
}

pub fn find_limit_cycle_tol(
    p: &ModelParams,
    section: Section,
    x0: State,
    max_returns: usize,
    tol: f64,
) -> Result<LimitCycle, DynamicsError> {
    // the passage near the degenerate transcritical point is exponentially
    // slow in fast time, so each return leg gets a generous budget (steps
    // there are cheap: the field is tiny and the step size grows)
    let t_budget = 2e12;
    let mut driver = Driver::new(p, x0, tol)?;
    let mut returns: Vec<f64> = Vec::new();
    let mut converged_at: Option<[f64; 2]> = None;

    for k in 0..max_returns {
        let crossing = match next_crossing(p, &mut driver, section, t_budget, tol, None)? {
            Some(c) => c,
            None => return Err(DynamicsError::NoConvergence { returns }),
        };
        let s = section.transverse(crossing.state);
        if let Some(&prev) = returns.last() {
            if (s - prev).abs() < RETURN_TOL {
                returns.push(s);
                converged_at = Some(crossing.state);
                break;
            }
        }
        returns.push(s);

        // Aitken extrapolation, but only on a cleanly geometric tail: the
        // last three ratios must agree and contract
        if k >= 11 && k % 6 == 5 && returns.len() >= 5 {
            let n = returns.len();
            let d: Vec<f64> = (n - 4..n).map(|i| returns[i] - returns[i - 1]).collect();
            let ratios: Vec<f64> = d.windows(2).map(|w| w[1] / w[0]).collect();
            let geometric = ratios.iter().all(|&r| r > 0.05 && r < 0.995)
                && ratios.windows(2).all(|w| (w[1] - w[0]).abs() < 0.05);
            if geometric {
                let rho = ratios[ratios.len() - 1];
                let extrap = returns[n - 1] + d[d.len() - 1] * rho / (1.0 - rho);
                let jump = section.point(extrap);
                if extrap.is_finite() && extrap > 0.0 && jump.v < 10.0 && jump.u < 1.5 {
                    driver = Driver::new(p, jump, tol)?;
                    returns.push(extrap);
                }
            }
        }
    }

    let start = match converged_at {
        Some(y) => y,
        None => return Err(DynamicsError::NoConvergence { returns }),
    };

    // one full period from the converged crossing
    let mut driver = Driver::new(p, State::new(start[0], start[1]), tol)?;
    let mut times = vec![0.0];
    let mut states = vec![State::new(start[0], start[1])];
    let end = match next_crossing(
        p,
        &mut driver,
        section,
        t_budget,
        tol,
        Some((&mut times, &mut states)),
    )? {
        Some(c) => c,
        None => return Err(DynamicsError::NoConvergence { returns }),
    };
    let period = end.t;
    let mut points = states;
    points.push(State::new(start[0], start[1]));

    let (mut u_min, mut u_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &points {
        u_min = u_min.min(s.u);
        u_max = u_max.max(s.u);
    }
    let amplitude_u = u_max - u_min;
    let closure = ((end.state[0] - start[0]).powi(2) + (end.state[1] - start[1]).powi(2)).sqrt();
    if amplitude_u < 1e-6 || closure > 1e-6 {
        // spiral onto an equilibrium, or a drifting pseudo-cycle
        return Err(DynamicsError::NoConvergence { returns });
    }

    // contraction ratio from the tail of the raw crossing differences
    let diffs: Vec<f64> = returns
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .filter(|d| *d > 1e-12)
        .collect();
    let floquet_proxy = if diffs.len() >= 2 {
        diffs[diffs.len() - 1] / diffs[diffs.len() - 2]
    } else {
        f64::NAN
    };
    let stability = if floquet_proxy.is_nan() {
        CycleStability::Undetermined
    } else if floquet_proxy < 0.95 {
        CycleStability::Attracting
    } else if floquet_proxy > 1.05 {
        CycleStability::Repelling
    } else {
        CycleStability::Undetermined
    };

    Ok(LimitCycle {
        points,
        period,
        amplitude_u,
        stability,
        floquet_proxy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::solve_positive_equilibria;
    use crate::stability::{hopf_threshold, HopfBranch};

    fn degenerate_near_hopf(delta: f64) -> (ModelParams, f64) {
        let hp = hopf_threshold(0.5, -0.1, 0.0, 0.05, HopfBranch::Degenerate).unwrap();
        let p = ModelParams::degenerate(0.5, -0.1, hp.q - delta, 0.05).unwrap();
        let e1 = solve_positive_equilibria(&p).last().unwrap().u;
        (p, e1)
    }

    #[test]
    fn attracting_cycle_below_hopf_threshold() {
        let (p, u1) = degenerate_near_hopf(0.01);
        let x0 = State::new(u1 + 0.05, crate::geometry::h(&p, u1));
        let c = find_limit_cycle(&p, Section::UConst(u1), x0, 400).unwrap();
        assert!(c.period > 0.0);
        assert!(c.amplitude_u > 1e-4);
        assert_eq!(c.stability, CycleStability::Attracting);
        let first = c.points.first().unwrap();
        let last = c.points.last().unwrap();
        assert!((first.u - last.u).abs() < 1e-6 && (first.v - last.v).abs() < 1e-6);
    }

    #[test]
    fn relaxation_cycle_unique_from_two_seeds() {
        // C < -AMQ with E1 on the repelling branch
        let p = ModelParams::new(0.5, -0.1, 0.05, 1.5, 0.05).unwrap();
        let u1 = solve_positive_equilibria(&p).last().unwrap().u;
        let c1 = find_limit_cycle(&p, Section::UConst(u1), State::new(0.7, 0.3), 300).unwrap();
        let c2 = find_limit_cycle(&p, Section::UConst(u1), State::new(0.3, 0.25), 300).unwrap();
        let d = super::super::hausdorff(&c1.polyline(), &c2.polyline());
        assert!(d < 1e-3, "two seeds found different cycles: H = {d}");
        assert!(c1.amplitude_u > 0.5);
    }

    #[test]
    fn stable_node_regime_reports_no_convergence() {
        // Q above the Hopf threshold: returns contract toward E1
        let hp = hopf_threshold(0.5, -0.1, 0.0, 0.05, HopfBranch::Degenerate).unwrap();
        let p = ModelParams::degenerate(0.5, -0.1, hp.q + 0.15, 0.05).unwrap();
        let e = *solve_positive_equilibria(&p).last().unwrap();
        let x0 = State::new(e.u + 0.1, e.v + 0.05);
        match find_limit_cycle(&p, Section::UConst(e.u), x0, 60) {
            Err(DynamicsError::NoConvergence { returns }) => {
                // crossing heights approach the equilibrium height
                if returns.len() >= 4 {
                    let d_first = (returns[1] - returns[0]).abs();
                    let d_last = (returns[returns.len() - 1] - returns[returns.len() - 2]).abs();
                    assert!(d_last < d_first, "{returns:?}");
                }
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn cycle_detection_idempotent() {
        let (p, u1) = degenerate_near_hopf(0.02);
        let x0 = State::new(u1 + 0.05, crate::geometry::h(&p, u1));
        let c1 = find_limit_cycle(&p, Section::UConst(u1), x0, 400).unwrap();
        let on_cycle = c1.points[c1.points.len() / 3];
        let c2 = find_limit_cycle(&p, Section::UConst(u1), on_cycle, 400).unwrap();
        let d = super::super::hausdorff(&c1.polyline(), &c2.polyline());
        assert!(d < 1e-5, "re-detection moved the cycle by {d}");
    }
}
