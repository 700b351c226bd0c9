//! Canard-explosion and relaxation-oscillation sweeps.

use super::cycle::{find_limit_cycle_tol, LimitCycle, Section};
use super::hausdorff::hausdorff;
use super::DynamicsError;
use crate::equilibria::solve_positive_equilibria;
use crate::geometry::{self, SingularCycleKind};
use crate::model::{ModelParams, State};
use crate::stability::{hopf_threshold, HopfBranch};
use rayon::prelude::*;

/// Proximity radius of the `passes_through_TC` report (a reporting
/// heuristic only).
pub const TC_PROXIMITY: f64 = 0.02;

/// One row of a canard sweep at `Q = Q_H - delta` on the degenerate family.
#[derive(Debug, Clone)]
pub struct CanardRecord {
    pub delta: f64,
    pub q: f64,
    pub result: Result<CanardCycle, String>,
}

#[derive(Debug, Clone)]
pub struct CanardCycle {
    pub amplitude_u: f64,
    pub period: f64,
    pub passes_through_tc: bool,
    pub cycle: LimitCycle,
}

/// Sweeps the degenerate family `C = -AMQ`, `Q = Q_H - delta` over the given
/// deltas, hunting the attracting cycle at each one. Per-delta failures are
/// recorded; the sweep continues.
pub fn canard_sweep(
    a: f64,
    m: f64,
    eps: f64,
    deltas: &[f64],
) -> Result<Vec<CanardRecord>, DynamicsError> {
    let q_h = hopf_threshold(a, m, 0.0, eps, HopfBranch::Degenerate)?.q;
    let records: Vec<CanardRecord> = deltas
        .par_iter()
        .map(|&delta| {
            let q = q_h - delta;
            let run = || -> Result<CanardCycle, String> {
                let p = ModelParams::degenerate(a, m, q, eps).map_err(|e| e.to_string())?;
                let e1 = solve_positive_equilibria(&p)
                    .last()
                    .copied()
                    .ok_or("no positive equilibrium")?;
                let x0 = State::new(e1.u + 0.02, geometry::h(&p, e1.u));
                let cycle = find_limit_cycle_tol(&p, Section::UConst(e1.u), x0, 600, 1e-9)
                    .map_err(|e| e.to_string())?;
                let tc = (0.0, -a * m);
                let passes_through_tc = cycle.distance_to(tc) <= TC_PROXIMITY;
                Ok(CanardCycle {
                    amplitude_u: cycle.amplitude_u,
                    period: cycle.period,
                    passes_through_tc,
                    cycle,
                })
            };
            CanardRecord {
                delta,
                q,
                result: run(),
            }
        })
        .collect();
    Ok(records)
}

/// Per-`eps` relaxation-oscillation check against the singular cycle and the
/// entry-exit prediction.
#[derive(Debug, Clone)]
pub struct RelaxationRecord {
    pub eps: f64,
    /// Minimum `v` along the near-axis part of the cycle.
    pub v_depart: f64,
    /// Exit height predicted by the entry-exit function (generic regime) or
    /// the `T_C` height (degenerate regime).
    pub v_exit_predicted: f64,
    pub hausdorff_to_singular: f64,
    pub cycle: LimitCycle,
}

/// Finds the attracting relaxation cycle for each `eps`, measures its
/// departure height against the predicted exit point and its Hausdorff
/// distance to the singular cycle. `p` fixes `(A, M, C, Q)`; E1 must lie on
/// the repelling branch.
pub fn relaxation_check(
    p: &ModelParams,
    eps_list: &[f64],
) -> Result<Vec<RelaxationRecord>, DynamicsError> {
    let kind = if p.is_degenerate() {
        SingularCycleKind::DegenerateRelaxation
    } else {
        SingularCycleKind::GenericRelaxation
    };
    let singular = geometry::build_singular_cycle(p, kind)?;
    let singular_poly = singular.polyline();
    let fp = geometry::fold_point(p);
    let v_exit_predicted = if p.is_degenerate() {
        -p.a * p.m
    } else {
        geometry::solve_exit_point(p, fp.v_p)?.v0
    };

    let results: Vec<Result<RelaxationRecord, DynamicsError>> = eps_list
        .par_iter()
        .map(|&eps| {
            let pe = ModelParams::new(p.a, p.m, p.c, p.q, eps)
                .map_err(|_| DynamicsError::InvalidTolerance(eps))?;
            let e1 = solve_positive_equilibria(&pe)
                .last()
                .copied()
                .ok_or_else(|| DynamicsError::NoConvergence { returns: vec![] })?;
            let x0 = State::new(0.8, fp.v_p);
            let cycle = find_limit_cycle_tol(&pe, Section::UConst(e1.u), x0, 300, 1e-9)?;
            let v_depart = cycle
                .points
                .iter()
                .filter(|s| s.u < 0.02)
                .map(|s| s.v)
                .fold(f64::INFINITY, f64::min);
            let h = hausdorff(&cycle.polyline(), &singular_poly);
            Ok(RelaxationRecord {
                eps,
                v_depart,
                v_exit_predicted,
                hausdorff_to_singular: h,
                cycle,
            })
        })
        .collect();
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canard_sweep_amplitude_grows() {
        let deltas: Vec<f64> = (0..7).map(|i| 1e-3 * 2f64.powi(i)).collect();
        let recs = canard_sweep(0.5, -0.1, 0.05, &deltas).unwrap();
        let amps: Vec<f64> = recs
            .iter()
            .filter_map(|r| r.result.as_ref().ok().map(|c| c.amplitude_u))
            .collect();
        assert!(amps.len() >= 5, "too many per-delta failures: {recs:?}");
        for w in amps.windows(2) {
            assert!(w[1] >= w[0] - 0.01, "amplitude not near-monotone: {amps:?}");
        }
        assert!(amps.last().unwrap() > &0.5);
    }

    #[test]
    fn relaxation_exit_height_matches_prediction() {
        // generic regime, E1 on the repelling branch
        let p = ModelParams::new(0.5, -0.1, 0.05, 1.5, 0.05).unwrap();
        let recs = relaxation_check(&p, &[0.02]).unwrap();
        let r = &recs[0];
        assert!(
            (r.v_depart - r.v_exit_predicted).abs() < 0.05 + r.eps,
            "departure {} vs prediction {}",
            r.v_depart,
            r.v_exit_predicted
        );
        assert!(r.hausdorff_to_singular < 0.2);
    }
}
