//! Intrinsic criticality of the singular Hopf point at the fold: the contact
//! quantities `F`, `ZF`, `ZZF`, `ZZZF`, the determinants, the normalizing
//! vector field `V`, the product `G` and the criticality number `sigma`.
//!
//! Everything is evaluated in the standard Euclidean metric. `Q` is slaved
//! per evaluation to the singular Hopf threshold `Q_H = (u_p + C)/v_p`, which
//! places the slow-flow equilibrium exactly at the contact point.

use crate::geometry;
use crate::model::ModelParams;
use crate::sweep::{Cell, SweepTable};
use rayon::prelude::*;
use thiserror::Error;

/// Degeneracy tolerance on `sigma`.
pub const TOL_SIGMA: f64 = 1e-8;

/// Base step of the directional finite differences.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Error, PartialEq)]
pub enum CriticalityError {
    #[error("singular denominator: {0} vanishes at the evaluation point")]
    SingularDenominator(&'static str),
}

/// Point evaluation of every ingredient entering the criticality formula.
#[derive(Debug, Clone, Copy)]
pub struct ContactPointEval {
    pub f: f64,
    /// Slow component of the field.
    pub qs: f64,
    pub zf: f64,
    pub zzf: f64,
    pub zzzf: f64,
    pub det_qz: f64,
    /// `det(grad F, grad ZF)`.
    pub det_grad: f64,
    pub g: f64,
    /// `ZZZF/ZZF^2`, the curvature-normalization factor.
    pub afac: f64,
    pub vg: f64,
    pub vvg: f64,
}

/// Every contact-point ingredient at one point.
pub fn contact_point_eval(
    p: &ModelParams,
    u: f64,
    v: f64,
) -> Result<ContactPointEval, CriticalityError> {
    let (f, qs) = eval_fq(p, u, v);
    let (zf, zzf, zzzf) = eval_z_derivatives(p, u, v);
    let (det_qz, det_grad) = eval_dets(p, u, v);
    let (g, afac) = eval_g_a(p, u, v)?;
    let vg = eval_vg(p, u, v)?;
    let vvg = eval_vvg(p, u, v, FD_STEP)?;
    Ok(ContactPointEval {
        f,
        qs,
        zf,
        zzf,
        zzzf,
        det_qz,
        det_grad,
        g,
        afac,
        vg,
        vvg,
    })
}

/// `F = u(u+C)(h(u)-v)` and the slow component `Qs = v(u+A)(u-Qv+C)`.
pub fn eval_fq(p: &ModelParams, u: f64, v: f64) -> (f64, f64) {
    let f = u * (u + p.c) * (geometry::h(p, u) - v);
    let qs = v * (u + p.a) * (u - p.q * v + p.c);
    (f, qs)
}

/// First three `Z = d/du` derivatives of `F`.
pub fn eval_z_derivatives(p: &ModelParams, u: f64, v: f64) -> (f64, f64, f64) {
    let h = geometry::h(p, u);
    let hp = geometry::h_prime(p, u);
    let hpp = geometry::h_second(p, u);
    let zf = u * (u + p.c) * hp + (2.0 * u + p.c) * (h - v);
    let zzf = 2.0 * (h - v) + 2.0 * (2.0 * u + p.c) * hp + u * (u + p.c) * hpp;
    let zzzf = 6.0
        * (-p.m + p.c * (1.0 + p.m - 4.0 * u) + p.a * (1.0 - p.c + p.m - 4.0 * u)
            + 4.0 * u
            + 4.0 * p.m * u
            - 10.0 * u * u);
    (zf, zzf, zzzf)
}

/// `det(Qs, Z) = -Qs` and `det(grad F, grad ZF)`.
pub fn eval_dets(p: &ModelParams, u: f64, v: f64) -> (f64, f64) {
    let (_, qs) = eval_fq(p, u, v);
    let (zf, zzf, _) = eval_z_derivatives(p, u, v);
    let det_qz = -qs;
    let det_grad = -(2.0 * u + p.c) * zf + u * (u + p.c) * zzf;
    (det_qz, det_grad)
}

/// The unique vector field `V = a1 d/du + a2 d/dv` with `V(F) = 0`,
/// `V(ZF) = 1`: `a1 = -F_v/detGrad`, `a2 = F_u/detGrad`.
pub fn eval_v(p: &ModelParams, u: f64, v: f64) -> Result<(f64, f64), CriticalityError> {
    let (_, det_grad) = eval_dets(p, u, v);
    if det_grad == 0.0 {
        return Err(CriticalityError::SingularDenominator("det(grad F, grad ZF)"));
    }
    let f_v = -u * (u + p.c);
    let (zf, _, _) = eval_z_derivatives(p, u, v);
    Ok((-f_v / det_grad, zf / det_grad))
}

/// `G = det(Qs,Z) * det(grad F, grad ZF)` and `ZZZF/ZZF^2`.
pub fn eval_g_a(p: &ModelParams, u: f64, v: f64) -> Result<(f64, f64), CriticalityError> {
    let (det_qz, det_grad) = eval_dets(p, u, v);
    let (_, zzf, zzzf) = eval_z_derivatives(p, u, v);
    if zzf == 0.0 {
        return Err(CriticalityError::SingularDenominator("ZZF"));
    }
    Ok((det_qz * det_grad, zzzf / (zzf * zzf)))
}

/// Analytic gradient of `G` (product rule through `G = -Qs * detGrad`).
fn grad_g(p: &ModelParams, u: f64, v: f64) -> (f64, f64) {
    let (_, qs) = eval_fq(p, u, v);
    let (zf, _, zzzf) = eval_z_derivatives(p, u, v);
    let (_, det_grad) = eval_dets(p, u, v);
    let qs_u = v * ((u + p.a) + (u - p.q * v + p.c));
    let qs_v = (u + p.a) * (u + p.c - 2.0 * p.q * v);
    let det_grad_u = -2.0 * zf + u * (u + p.c) * zzzf;
    let det_grad_v = (2.0 * u + p.c) * (2.0 * u + p.c) - 2.0 * u * (u + p.c);
    let g_u = -(qs_u * det_grad + qs * det_grad_u);
    let g_v = -(qs_v * det_grad + qs * det_grad_v);
    (g_u, g_v)
}

/// Directional derivative `V(G)`, analytic in `G`.
pub fn eval_vg(p: &ModelParams, u: f64, v: f64) -> Result<f64, CriticalityError> {
    let (a1, a2) = eval_v(p, u, v)?;
    let (g_u, g_v) = grad_g(p, u, v);
    Ok(a1 * g_u + a2 * g_v)
}

/// Nested directional derivative `V(V(G))` by central differences of the
/// analytic `VG` along `V`, Richardson-extrapolated.
pub fn eval_vvg(p: &ModelParams, u: f64, v: f64, step: f64) -> Result<f64, CriticalityError> {
    let (a1, a2) = eval_v(p, u, v)?;
    let h = step * (1.0 + (u * u + v * v).sqrt());
    let along = |t: f64| eval_vg(p, u + t * a1, v + t * a2);
    let d = |h: f64| -> Result<f64, CriticalityError> { Ok((along(h)? - along(-h)?) / (2.0 * h)) };
    let g_h = d(h)?;
    let g_h2 = d(h / 2.0)?;
    Ok((4.0 * g_h2 - g_h) / 3.0)
}

/// Singular Hopf threshold with the contact point as slow-flow equilibrium:
/// `Q_H = (u_p + C)/v_p`.
pub fn q_hopf_singular(a: f64, m: f64, c: f64) -> f64 {
    let p0 = ModelParams::new(a, m, c, 1.0, 1.0).expect("valid a, m, c");
    let fp = geometry::fold_point(&p0);
    (fp.u_p + c) / fp.v_p
}

/// Three slow-fast Hopf conditions at the contact point `P` with `Q = Q_H`:
/// `G(P) = 0`, `V(G)(P) < 0`, `dG/dQ(P) != 0` (centered difference in `Q`).
#[derive(Debug, Clone, Copy)]
pub struct HopfConditions {
    pub g_zero: bool,
    pub vg_negative: bool,
    pub g_q_transversal: bool,
    pub g_value: f64,
    pub vg_value: f64,
    pub dg_dq: f64,
}

pub fn hopf_conditions_check(p: &ModelParams) -> Result<HopfConditions, CriticalityError> {
    let fp = geometry::fold_point(p);
    let (u, v) = (fp.u_p, fp.v_p);
    let (g, _) = eval_g_a(p, u, v)?;
    let vg = eval_vg(p, u, v)?;
    let dq = 1e-6 * (1.0 + p.q);
    let g_at = |q: f64| -> Result<f64, CriticalityError> {
        let pq = ModelParams::new(p.a, p.m, p.c, q, p.eps)
            .map_err(|_| CriticalityError::SingularDenominator("Q perturbation"))?;
        Ok(eval_g_a(&pq, u, v)?.0)
    };
    let dg_dq = (g_at(p.q + dq)? - g_at(p.q - dq)?) / (2.0 * dq);
    Ok(HopfConditions {
        g_zero: g.abs() <= 1e-8,
        vg_negative: vg < 0.0,
        g_q_transversal: dg_dq.abs() > 1e-8,
        g_value: g,
        vg_value: vg,
        dg_dq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criticality {
    /// `sigma < 0`
    Supercritical,
    /// `sigma > 0`
    Subcritical,
    /// `|sigma| <= TOL_SIGMA`
    Degenerate,
}

#[derive(Debug, Clone, Copy)]
pub struct SigmaResult {
    pub sigma: f64,
    pub criticality: Criticality,
}

/// `sigma = VVG(P)/2 - VG(P) * A(P)` at the contact point with `Q = Q_H`.
pub fn sigma(p: &ModelParams) -> Result<SigmaResult, CriticalityError> {
    let fp = geometry::fold_point(p);
    let (u, v) = (fp.u_p, fp.v_p);
    let (_, afac) = eval_g_a(p, u, v)?;
    let vg = eval_vg(p, u, v)?;
    let vvg = eval_vvg(p, u, v, FD_STEP)?;
    let s = 0.5 * vvg - vg * afac;
    let criticality = if s.abs() <= TOL_SIGMA {
        Criticality::Degenerate
    } else if s < 0.0 {
        Criticality::Supercritical
    } else {
        Criticality::Subcritical
    };
    Ok(SigmaResult {
        sigma: s,
        criticality,
    })
}

/// Convenience: sigma for `(A, M, C)` with `Q` slaved to the singular
/// threshold.
pub fn sigma_at(a: f64, m: f64, c: f64) -> Result<SigmaResult, CriticalityError> {
    let q = q_hopf_singular(a, m, c);
    let p = ModelParams::new(a, m, c, q, 1e-3)
        .map_err(|_| CriticalityError::SingularDenominator("parameters"))?;
    sigma(&p)
}

/// Which parameter is fixed in a sigma slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSlice {
    /// Fixed `M`; grid over `(A, C)`.
    FixedM { m: f64 },
    /// Fixed `A`; grid over `(C, M)`.
    FixedA { a: f64 },
}

/// Grid of sigma values over a parameter slice. Per-cell failures become
/// missing cells; the grid never aborts.
pub fn sigma_grid(
    slice: SigmaSlice,
    range1: (f64, f64),
    range2: (f64, f64),
    n1: usize,
    n2: usize,
) -> SweepTable {
    let (name1, name2) = match slice {
        SigmaSlice::FixedM { .. } => ("A", "C"),
        SigmaSlice::FixedA { .. } => ("C", "M"),
    };
    let mut table = SweepTable::new(vec![
        name1.to_string(),
        name2.to_string(),
        "sigma".to_string(),
        "criticality".to_string(),
    ]);
    let coords: Vec<(f64, f64)> = (0..n1)
        .flat_map(|i| {
            let x1 = range1.0 + (range1.1 - range1.0) * i as f64 / (n1 - 1).max(1) as f64;
            (0..n2).map(move |j| {
                let x2 = range2.0 + (range2.1 - range2.0) * j as f64 / (n2 - 1).max(1) as f64;
                (x1, x2)
            })
        })
        .collect();
    let rows: Vec<Vec<Cell>> = coords
        .par_iter()
        .map(|&(x1, x2)| {
            let (a, m, c) = match slice {
                SigmaSlice::FixedM { m } => (x1, m, x2),
                SigmaSlice::FixedA { a } => (a, x2, x1),
            };
            let result = if a > 0.0 && a < 1.0 && m > -1.0 && m < 0.0 && c >= 0.0 {
                sigma_at(a, m, c).ok()
            } else {
                None
            };
            match result {
                Some(r) => vec![
                    Cell::Num(x1),
                    Cell::Num(x2),
                    Cell::Num(r.sigma),
                    Cell::Text(
                        match r.criticality {
                            Criticality::Supercritical => "supercritical",
                            Criticality::Subcritical => "subcritical",
                            Criticality::Degenerate => "degenerate",
                        }
                        .to_string(),
                    ),
                ],
                None => vec![Cell::Num(x1), Cell::Num(x2), Cell::Missing, Cell::Missing],
            }
        })
        .collect();
    for row in rows {
        table.push_row(row);
    }
    table
}
