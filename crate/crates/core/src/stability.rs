//! Linear stability at coexistence equilibria: trace/determinant, node /
//! center / saddle classification, the Hopf threshold `Q_H`, and the
//! trace identity used by the bifurcation loci.

use crate::equilibria::EquilibriumPoint;
use crate::geometry;
use crate::model::ModelParams;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StabilityError {
    #[error("no admissible Q zeroes the trace with det > 0 (last iterate u={u}, q={q})")]
    NoRoot { u: f64, q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    StableNode,
    UnstableNode,
    LinearCenter,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub trace: f64,
    pub det: f64,
    pub classification: Classification,
    pub j11: f64,
    pub q_hopf: Option<f64>,
}

/// `J11 = A - M + AM + 2(M+1-A)U - 3U^2` (equals `h'(U)`).
pub fn j11(p: &ModelParams, u: f64) -> f64 {
    geometry::h_prime(p, u)
}

/// Trace and determinant of the Jacobian at an equilibrium abscissa, via the
/// factored forms `tr = (U+C)(U J11 - S(U+A))` and
/// `det = S U (U+A)(U+C)^2 (1/Q - J11)`.
///
/// Pure formula evaluation in `u`; no cubic-residual requirement.
pub fn trace_det_from_u(p: &ModelParams, u: f64) -> (f64, f64) {
    let j = j11(p, u);
    let tr = (u + p.c) * (u * j - p.eps * (u + p.a));
    let det = p.eps * u * (u + p.a) * (u + p.c) * (u + p.c) * (1.0 / p.q - j);
    (tr, det)
}

/// Trace and determinant at a solved equilibrium.
pub fn trace_det_at(p: &ModelParams, e: &EquilibriumPoint) -> (f64, f64) {
    trace_det_from_u(p, e.u)
}

/// Classification from computed trace/det signs. A center needs
/// `|tr| <= 1e-10 * max(1, sqrt(|det|))` and `det > 0`; a saddle is exactly
/// `det < 0`.
pub fn classify_equilibrium(p: &ModelParams, e: &EquilibriumPoint) -> StabilityReport {
    let (trace, det) = trace_det_at(p, e);
    let tol_tr = 1e-10 * det.abs().sqrt().max(1.0);
    let classification = if det < 0.0 {
        Classification::Saddle
    } else if trace.abs() <= tol_tr {
        Classification::LinearCenter
    } else if trace < 0.0 {
        Classification::StableNode
    } else {
        Classification::UnstableNode
    };
    let branch = if p.is_degenerate() {
        HopfBranch::Degenerate
    } else {
        HopfBranch::Generic
    };
    let q_hopf = hopf_threshold(p.a, p.m, p.c, p.eps, branch).ok().map(|h| h.q);
    StabilityReport {
        trace,
        det,
        classification,
        j11: j11(p, e.u),
        q_hopf,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopfBranch {
    /// `C` held fixed at the given value.
    Generic,
    /// `C` slaved to `-A*M*Q` (the given `C` is ignored).
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfPoint {
    pub q: f64,
    /// Equilibrium abscissa at the threshold.
    pub u: f64,
}

/// Corrected closed form of the Hopf threshold evaluated at a given
/// equilibrium abscissa:
/// `Q_H = 3(U+C)/(A S + S U + 2(A-M+AM)U + (1+M-A)U^2 - 3AM)` (generic);
/// the degenerate form drops the `-3AM` and uses `3U` in the numerator.
pub fn q_hopf_closed_form(a: f64, m: f64, c: f64, eps: f64, u: f64, branch: HopfBranch) -> f64 {
    let k = a - m + a * m;
    let den_common = a * eps + (eps + 2.0 * k) * u + (1.0 + m - a) * u * u;
    match branch {
        HopfBranch::Generic => 3.0 * (u + c) / (den_common - 3.0 * a * m),
        HopfBranch::Degenerate => 3.0 * u / den_common,
    }
}

/// Solves the coupled system `{cubic(u; Q) = 0, trace(u; Q) = 0}` for
/// `(u, Q_H)` by 2D Newton, seeded at the `eps -> 0` fold-coincidence point.
pub fn hopf_threshold(
    a: f64,
    m: f64,
    c: f64,
    eps: f64,
    branch: HopfBranch,
) -> Result<HopfPoint, StabilityError> {
    let p0 = match branch {
        HopfBranch::Generic => ModelParams::new(a, m, c, 1.0, eps),
        HopfBranch::Degenerate => ModelParams::degenerate(a, m, 1.0, eps),
    }
    .map_err(|_| StabilityError::NoRoot { u: f64::NAN, q: f64::NAN })?;
    let fp = geometry::fold_point(&p0);
    let h_fold = geometry::h(&p0, fp.u_p);

    // eps -> 0 limit: center at the fold, Q from the nullcline intersection
    let mut u = fp.u_p;
    let mut q = match branch {
        HopfBranch::Generic => (fp.u_p + c) / h_fold,
        HopfBranch::Degenerate => fp.u_p / (h_fold + a * m),
    };
    if !(q.is_finite() && q > 0.0) {
        return Err(StabilityError::NoRoot { u, q });
    }

    let c_of = |q: f64| match branch {
        HopfBranch::Generic => c,
        HopfBranch::Degenerate => -a * m * q,
    };
    let mut converged = false;
    for _ in 0..80 {
        let p = match ModelParams::new(a, m, c_of(q).max(0.0), q, eps) {
            Ok(p) => p,
            Err(_) => return Err(StabilityError::NoRoot { u, q }),
        };
        let f1 = (u + p.c) / q - geometry::h(&p, u);
        let f2 = u * geometry::h_prime(&p, u) - eps * (u + a);
        let hp = geometry::h_prime(&p, u);
        let j11_ = 1.0 / q - hp;
        let j12 = match branch {
            HopfBranch::Generic => -(u + c) / (q * q),
            HopfBranch::Degenerate => -u / (q * q),
        };
        let j21 = hp + u * geometry::h_second(&p, u) - eps;
        let j22 = 0.0;
        let det = j11_ * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            return Err(StabilityError::NoRoot { u, q });
        }
        let du = (f1 * j22 - f2 * j12) / det;
        let dq = (f2 * j11_ - f1 * j21) / det;
        u -= du;
        q -= dq;
        if !(u.is_finite() && q.is_finite()) {
            return Err(StabilityError::NoRoot { u, q });
        }
        if du.abs() < 1e-14 * (1.0 + u.abs()) && dq.abs() < 1e-14 * (1.0 + q.abs()) {
            converged = true;
            break;
        }
    }
    // validity: interior abscissa, positive Q, and det > 0 at the solution
    // (det < 0 would be a saddle, not a center)
    let p = match ModelParams::new(a, m, c_of(q).max(0.0), q, eps) {
        Ok(p) => p,
        Err(_) => return Err(StabilityError::NoRoot { u, q }),
    };
    let det_factor = 1.0 / q - j11(&p, u);
    if !converged || !(q > 0.0 && u > 0.0 && u < 1.0 && det_factor > 0.0) {
        return Err(StabilityError::NoRoot { u, q });
    }
    Ok(HopfPoint { q, u })
}

/// Defect of the trace identity
/// `U J11 = 3(AM + C/Q) + U((A-M-1)U + 2(1/Q - A + M - AM) + 1/Q)`,
/// which holds exactly at cubic roots.
pub fn trace_identity_defect(p: &ModelParams, e: &EquilibriumPoint) -> f64 {
    let u = e.u;
    let lhs = u * j11(p, u);
    let inv_q = 1.0 / p.q;
    let rhs = 3.0 * (p.a * p.m + p.c / p.q)
        + u * ((p.a - p.m - 1.0) * u + 2.0 * (inv_q - p.a + p.m - p.a * p.m) + inv_q);
    (lhs - rhs).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::solve_positive_equilibria;

    fn hopf_params_degenerate() -> (ModelParams, HopfPoint) {
        let hp = hopf_threshold(0.5, -0.1, 0.0, 0.05, HopfBranch::Degenerate).unwrap();
        (ModelParams::degenerate(0.5, -0.1, hp.q, 0.05).unwrap(), hp)
    }

    #[test]
    fn trace_det_match_numeric_jacobian() {
        for q in [1.5, 1.9, 2.4] {
            let p = ModelParams::new(0.5, -0.1, 0.05, q, 0.05).unwrap();
            for e in solve_positive_equilibria(&p) {
                let j = crate::model::eval_jacobian(&p, crate::model::State::new(e.u, e.v));
                let (tr, det) = trace_det_at(&p, &e);
                let tr_j = j[0][0] + j[1][1];
                let det_j = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                assert!((tr - tr_j).abs() <= 1e-10 * (1.0 + tr_j.abs()));
                assert!((det - det_j).abs() <= 1e-10 * (1.0 + det_j.abs()));
            }
        }
    }

    #[test]
    fn trace_vanishes_at_hopf_threshold() {
        let (p, hp) = hopf_params_degenerate();
        let (tr, det) = trace_det_from_u(&p, hp.u);
        assert!(tr.abs() < 1e-10, "trace {tr}");
        assert!(det > 0.0);
        // the solved u is the actual equilibrium
        let roots = solve_positive_equilibria(&p);
        assert!(roots.iter().any(|e| (e.u - hp.u).abs() < 1e-9));
    }

    #[test]
    fn eps_to_zero_limit_hits_fold() {
        // U1 -> u_p and Q_H -> u_p/(h(u_p)+AM) as eps -> 0
        let hp = hopf_threshold(0.5, -0.1, 0.0, 1e-9, HopfBranch::Degenerate).unwrap();
        let p = ModelParams::degenerate(0.5, -0.1, hp.q, 1e-9).unwrap();
        let fp = geometry::fold_point(&p);
        assert!((hp.u - fp.u_p).abs() < 1e-6);
        assert!((hp.q - 2.25106).abs() < 1e-4);
        assert!((hp.q - fp.u_p / (geometry::h(&p, fp.u_p) + p.a * p.m)).abs() < 1e-6);
    }

    #[test]
    fn closed_form_reproduces_jointly_solved_q() {
        for (a, m, eps) in [(0.5, -0.1, 0.05), (0.4, -0.2, 0.02), (0.65, -0.05, 0.01)] {
            let hp = hopf_threshold(a, m, 0.0, eps, HopfBranch::Degenerate).unwrap();
            let q_cf = q_hopf_closed_form(a, m, 0.0, eps, hp.u, HopfBranch::Degenerate);
            assert!((q_cf - hp.q).abs() < 1e-9 * (1.0 + hp.q), "{q_cf} vs {}", hp.q);
        }
        let c = 0.03;
        let hp = hopf_threshold(0.5, -0.1, c, 0.05, HopfBranch::Generic).unwrap();
        let q_cf = q_hopf_closed_form(0.5, -0.1, c, 0.05, hp.u, HopfBranch::Generic);
        assert!((q_cf - hp.q).abs() < 1e-9 * (1.0 + hp.q));
    }

    #[test]
    fn q_h_decreases_with_eps_recorded_as_data() {
        // monotonicity observed over eps in [0.001, 0.1]; data property only
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let eps = 0.001 + (0.1 - 0.001) * i as f64 / 20.0;
            let hp = hopf_threshold(0.5, -0.1, 0.0, eps, HopfBranch::Degenerate).unwrap();
            assert!(hp.q < last);
            last = hp.q;
        }
    }

    #[test]
    fn classify_across_threshold() {
        let (_, hp) = hopf_params_degenerate();
        for (dq, expect) in [
            (0.02, Classification::StableNode),
            (-0.02, Classification::UnstableNode),
        ] {
            let p = ModelParams::degenerate(0.5, -0.1, hp.q + dq, 0.05).unwrap();
            let roots = solve_positive_equilibria(&p);
            let e1 = roots.last().unwrap();
            let rep = classify_equilibrium(&p, e1);
            assert_eq!(rep.classification, expect, "dq={dq}");
            assert!(rep.det > 0.0);
        }
        // at the threshold itself: linear center
        let p = ModelParams::degenerate(0.5, -0.1, hp.q, 0.05).unwrap();
        let e = EquilibriumPoint {
            u: hp.u,
            v: (hp.u + p.c) / p.q,
            kind: crate::equilibria::EquilibriumKind::E1,
            residual: 0.0,
            multiplicity: 1,
        };
        assert_eq!(
            classify_equilibrium(&p, &e).classification,
            Classification::LinearCenter
        );
    }

    #[test]
    fn e2_is_saddle_in_degenerate_window() {
        let p = ModelParams::degenerate(0.5, -0.1, 1.75, 0.05).unwrap();
        let roots = solve_positive_equilibria(&p);
        assert_eq!(roots.len(), 2);
        let e2 = &roots[0];
        let (_, det) = trace_det_at(&p, e2);
        assert!(det < 0.0);
        assert_eq!(
            classify_equilibrium(&p, e2).classification,
            Classification::Saddle
        );
        // saddle criterion: det < 0 iff 1/Q - J11 < 0
        assert!(1.0 / p.q - j11(&p, e2.u) < 0.0);
    }

    #[test]
    fn hopf_crossing_flips_eigenvalue_real_part() {
        let (_, hp) = hopf_params_degenerate();
        let mut signs = Vec::new();
        for dq in [-1e-4, 1e-4] {
            let p = ModelParams::degenerate(0.5, -0.1, hp.q + dq, 0.05).unwrap();
            let roots = solve_positive_equilibria(&p);
            let e1 = roots.last().unwrap();
            let (tr, det) = trace_det_at(&p, e1);
            assert!(tr * tr - 4.0 * det < 0.0, "pair must be complex");
            signs.push(tr.signum());
        }
        assert_eq!(signs[0] * signs[1], -1.0);
    }

    #[test]
    fn no_root_when_slow_rate_dominates() {
        // eps large enough that u h'(u) < eps (u + A) on all of (0, 1):
        // the trace never vanishes at an interior equilibrium
        assert!(hopf_threshold(0.9, -0.05, 0.0, 0.25, HopfBranch::Degenerate).is_err());
    }

    #[test]
    fn trace_identity_holds_at_roots_and_grows_off_root() {
        let p = ModelParams::new(0.5, -0.1, 0.05, 1.5, 0.05).unwrap();
        let roots = solve_positive_equilibria(&p);
        for e in &roots {
            assert!(trace_identity_defect(&p, e) <= 1e-10);
        }
        // perturbing u off the root grows the defect roughly linearly
        let e = roots[0];
        let mut prev = 0.0;
        for k in 1..=5 {
            let mut e_pert = e;
            e_pert.u += 1e-4 * k as f64;
            let d = trace_identity_defect(&p, &e_pert);
            assert!(d > prev);
            prev = d;
        }
        // slope sanity: defect at 2x perturbation is ~2x
        let mut e1 = e;
        e1.u += 1e-5;
        let mut e2 = e;
        e2.u += 2e-5;
        let r = trace_identity_defect(&p, &e2) / trace_identity_defect(&p, &e1);
        assert!((r - 2.0).abs() < 0.1, "ratio {r}");
    }

    #[test]
    fn trace_identity_degenerate_simplification() {
        let p = ModelParams::degenerate(0.5, -0.1, 1.9, 0.05).unwrap();
        assert_eq!(3.0 * (p.a * p.m + p.c / p.q), 0.0);
        for e in solve_positive_equilibria(&p) {
            assert!(trace_identity_defect(&p, &e) <= 1e-10);
        }
    }
}
