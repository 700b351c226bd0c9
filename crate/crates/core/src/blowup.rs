//! Blow-up of the degenerate transcritical point `T_C`: the four directional
//! charts, their desingularized local fields, center-manifold expansions and
//! numerical verification of the local statements.
//!
//! Coordinates are those of the shifted degenerate system (origin at `T_C`).
//! Each local field is the exact transform of the shifted field divided by
//! the common factor `r` of its chart (the same power in all four charts);
//! the truncated displays serve as oracles at `r = 0` only.

use crate::geometry;
use crate::model::{self, ModelParams, State};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BlowupError {
    #[error("point is outside the {chart:?} sector ({detail})")]
    WrongSector { chart: ChartId, detail: String },
    #[error("nondegeneracy violated: A-M+AM = {k}, 1/Q = {inv_q}")]
    NondegeneracyViolated { k: f64, inv_q: f64 },
}

/// The four directional charts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartId {
    /// `v = r`, entry from above `T_C`.
    K1,
    /// `eps = r`, central rescaling chart.
    K2,
    /// `u = r`, exit along the critical branch.
    K3,
    /// `v = -r`, below `T_C`.
    K4,
}

/// A point in chart coordinates `(r, c1, c2)`:
/// K1 `(r1, u1, eps1)`, K2 `(r2, u2, v2)`, K3 `(r3, v3, eps3)`,
/// K4 `(r4, u4, eps4)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartCoords {
    pub chart: ChartId,
    pub r: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Maps a shifted-coordinates point into a chart. The chart's directional
/// coordinate must have the correct sign (`v > 0` for K1, `eps > 0` for K2,
/// `u > 0` for K3, `v < 0` for K4).
pub fn to_chart(chart: ChartId, u: f64, v: f64, eps: f64) -> Result<ChartCoords, BlowupError> {
    let bad = |detail: String| BlowupError::WrongSector { chart, detail };
    let (r, c1, c2) = match chart {
        ChartId::K1 => {
            if v <= 0.0 {
                return Err(bad(format!("v = {v} must be positive")));
            }
            (v, u / v, eps / v)
        }
        ChartId::K2 => {
            if eps <= 0.0 {
                return Err(bad(format!("eps = {eps} must be positive")));
            }
            (eps, u / eps, v / eps)
        }
        ChartId::K3 => {
            if u <= 0.0 {
                return Err(bad(format!("u = {u} must be positive")));
            }
            (u, v / u, eps / u)
        }
        ChartId::K4 => {
            if v >= 0.0 {
                return Err(bad(format!("v = {v} must be negative")));
            }
            (-v, u / -v, eps / -v)
        }
    };
    Ok(ChartCoords { chart, r, c1, c2 })
}

/// Inverse of [`to_chart`].
pub fn from_chart(cc: &ChartCoords) -> (f64, f64, f64) {
    match cc.chart {
        ChartId::K1 => (cc.r * cc.c1, cc.r, cc.r * cc.c2),
        ChartId::K2 => (cc.r * cc.c1, cc.r * cc.c2, cc.r),
        ChartId::K3 => (cc.r, cc.r * cc.c1, cc.r * cc.c2),
        ChartId::K4 => (cc.r * cc.c1, -cc.r, cc.r * cc.c2),
    }
}

/// Desingularized local vector field `(r', c1', c2')`, exact in `r`.
pub fn local_field(cc: &ChartCoords, p: &ModelParams) -> [f64; 3] {
    let (a, m, q) = (p.a, p.m, p.q);
    let amq = a * m * q;
    let am = a * m;
    let r = cc.r;
    match cc.chart {
        ChartId::K1 => {
            let (u1, e1) = (cc.c1, cc.c2);
            let common = e1 * (r * u1 + a) * (r - am) * (u1 - q);
            let dr = r * common;
            let du1 = u1 * (r * u1 - amq) * (u1 * geometry::psi(p, r * u1) - 1.0) - u1 * common;
            let de1 = -e1 * common;
            [dr, du1, de1]
        }
        ChartId::K2 => {
            let (u2, v2) = (cc.c1, cc.c2);
            let du2 = u2 * (r * u2 - amq) * (u2 * geometry::psi(p, r * u2) - v2);
            let dv2 = (r * u2 + a) * (r * v2 - am) * (u2 - q * v2);
            [0.0, du2, dv2]
        }
        ChartId::K3 => {
            let (v3, e3) = (cc.c1, cc.c2);
            let common = (r - amq) * (geometry::psi(p, r) - v3);
            let dr = r * common;
            let dv3 = e3 * (r + a) * (r * v3 - am) * (1.0 - q * v3) - v3 * common;
            let de3 = -e3 * common;
            [dr, dv3, de3]
        }
        ChartId::K4 => {
            let (u4, e4) = (cc.c1, cc.c2);
            let common = e4 * (r * u4 + a) * (r + am) * (u4 + q);
            let dr = r * common;
            let du4 = u4 * (r * u4 - amq) * (u4 * geometry::psi(p, r * u4) + 1.0) - u4 * common;
            let de4 = -e4 * common;
            [dr, du4, de4]
        }
    }
}

/// Pushforward of the shifted degenerate field through the chart map at a
/// sector point: the chart-coordinate velocity of the *undesingularized*
/// flow. Componentwise it is `r * local_field`.
pub fn pushforward(cc: &ChartCoords, p: &ModelParams) -> Result<[f64; 3], BlowupError> {
    let (u, v, eps) = from_chart(cc);
    let f = model::eval_shifted_degenerate_field(p, State::new(u, v), eps).map_err(|e| {
        BlowupError::WrongSector {
            chart: cc.chart,
            detail: e.to_string(),
        }
    })?;
    let r = cc.r;
    Ok(match cc.chart {
        ChartId::K1 => {
            let dr = f[1];
            [dr, (f[0] - cc.c1 * dr) / r, (f[2] - cc.c2 * dr) / r]
        }
        ChartId::K2 => {
            let dr = f[2];
            [dr, (f[0] - cc.c1 * dr) / r, (f[1] - cc.c2 * dr) / r]
        }
        ChartId::K3 => {
            let dr = f[0];
            [dr, (f[1] - cc.c1 * dr) / r, (f[2] - cc.c2 * dr) / r]
        }
        ChartId::K4 => {
            let dr = -f[1];
            [dr, (f[0] - cc.c1 * dr) / r, (f[2] - cc.c2 * dr) / r]
        }
    })
}

/// Central-chart center manifold `v2 = h2(u2)` through the origin:
/// `h2 = u2/Q + (1 - (A-M+AM)Q)/(A Q^2) u2^2` (quadratic truncation).
pub fn center_manifold_h2(p: &ModelParams, u2: f64) -> f64 {
    let k = p.k();
    u2 / p.q + (1.0 - k * p.q) / (p.a * p.q * p.q) * u2 * u2
}

/// Flow on the K2 center manifold, leading order:
/// `u2' = -AMQ (A-M+AM - 1/Q) u2^2`.
pub fn k2_manifold_flow_leading(p: &ModelParams, u2: f64) -> f64 {
    -p.a * p.m * p.q * (p.k() - 1.0 / p.q) * u2 * u2
}

/// Exit-chart center manifold `v3 = g3(eps3)` at `p3 = (A-M+AM, 0)`:
/// `g3 = k + (A(k - 1/Q)/k) eps3 + (A^2 (k - 1/Q)/k^2) eps3^2` with
/// `k = A-M+AM` (quadratic truncation).
pub fn center_manifold_g3(p: &ModelParams, eps3: f64) -> f64 {
    let k = p.k();
    let g1 = p.a * (k - 1.0 / p.q) / k;
    let g2 = p.a * g1 / k;
    k + g1 * eps3 + g2 * eps3 * eps3
}

/// Flow on the K3 center manifold, leading order:
/// `eps3' = -A^2 M Q (k - 1/Q)/k * eps3^2` (equivalently `-AMQ g1 eps3^2`).
pub fn k3_manifold_flow_leading(p: &ModelParams, eps3: f64) -> f64 {
    let k = p.k();
    -p.a * p.a * p.m * p.q * (k - 1.0 / p.q) / k * eps3 * eps3
}

/// Two-dimensional center manifold `v3 = H3(r3, eps3)` at `p3` (linear
/// truncation): `H3 = k + (A(k-1/Q)/k) eps3 + (1 - A + M) r3`.
pub fn center_manifold_h3(p: &ModelParams, r3: f64, eps3: f64) -> f64 {
    let k = p.k();
    k + p.a * (k - 1.0 / p.q) / k * eps3 + (1.0 - p.a + p.m) * r3
}

/// The curve of equilibria of the K3 `eps3 = 0` system; this is the critical
/// branch `M_0^1` in chart coordinates: `v3 = psi(r3)`.
pub fn l3_curve(p: &ModelParams, r3: f64) -> f64 {
    geometry::psi(p, r3)
}

/// One named check of [`verify_propositions`].
#[derive(Debug, Clone)]
pub struct PropositionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub expected: f64,
}

/// Report over all chart-level statements for one parameter set.
#[derive(Debug, Clone)]
pub struct PropositionReport {
    pub checks: Vec<PropositionCheck>,
}

impl PropositionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Eigenvalues of a real 2x2 matrix (real parts only when complex).
fn eig2(m: [[f64; 2]; 2]) -> (f64, f64, bool) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (tr / 2.0 - s, tr / 2.0 + s, false)
    } else {
        (tr / 2.0, tr / 2.0, true)
    }
}

fn numeric_jacobian_2d<F>(f: F, x: f64, y: f64) -> [[f64; 2]; 2]
where
    F: Fn(f64, f64) -> (f64, f64),
{
    let h = 1e-7;
    let (fxp, gxp) = f(x + h, y);
    let (fxm, gxm) = f(x - h, y);
    let (fyp, gyp) = f(x, y + h);
    let (fym, gym) = f(x, y - h);
    [
        [(fxp - fxm) / (2.0 * h), (fyp - fym) / (2.0 * h)],
        [(gxp - gxm) / (2.0 * h), (gyp - gym) / (2.0 * h)],
    ]
}

/// Numerically checks the chart-level statements: equilibrium locations and
/// eigenvalue signs in K1/K2/K3, the K1 slow drift `r1' = A^2 M Q < 0`, the
/// `l3` curve eigenvalue, and the attracting/repelling labels in the regime
/// of the supplied `Q` (`A-M+AM` vs `1/Q`).
pub fn verify_propositions(p: &ModelParams) -> Result<PropositionReport, BlowupError> {
    let k = p.k();
    let inv_q = 1.0 / p.q;
    if k.abs() < 1e-9 || (k - inv_q).abs() < 1e-9 {
        return Err(BlowupError::NondegeneracyViolated { k, inv_q });
    }
    let (a, m, q) = (p.a, p.m, p.q);
    let mut checks = Vec::new();
    let mut push = |name: &'static str, measured: f64, expected: f64, tol: f64| {
        checks.push(PropositionCheck {
            name,
            passed: (measured - expected).abs() <= tol,
            measured,
            expected,
        });
    };

    // K1, r1 = 0 plane: origin eigenvalues (AMQ, 0)
    let k1_field = |u1: f64, e1: f64| {
        let f = local_field(
            &ChartCoords { chart: ChartId::K1, r: 0.0, c1: u1, c2: e1 },
            p,
        );
        (f[1], f[2])
    };
    let j = numeric_jacobian_2d(k1_field, 0.0, 0.0);
    let (lo, hi, _) = eig2(j);
    push("k1_origin_negative_eigenvalue", lo, a * m * q, 1e-6);
    push("k1_origin_zero_eigenvalue", hi, 0.0, 1e-7);
    // flow along the eps1-axis moves away from the origin
    let away = k1_field(0.0, 1e-3).1;
    push("k1_center_manifold_outflow_sign", away.signum(), 1.0, 0.0);
    // K1 slow drift on the r1-axis: r1'/(r1 eps1) -> A^2 M Q < 0
    let cc = ChartCoords { chart: ChartId::K1, r: 1e-9, c1: 0.0, c2: 1e-9 };
    let drift = local_field(&cc, p)[0] / (cc.r * cc.c2);
    push("k1_slow_drift_coefficient", drift, a * a * m * q, 1e-6);
    push("k1_slow_drift_negative", drift.signum(), -1.0, 0.0);

    // K2, r2 = 0: origin unique equilibrium, semi-hyperbolic; v2-axis flows in
    let k2_field = |u2: f64, v2: f64| {
        let f = local_field(
            &ChartCoords { chart: ChartId::K2, r: 0.0, c1: u2, c2: v2 },
            p,
        );
        (f[1], f[2])
    };
    let j2 = numeric_jacobian_2d(k2_field, 0.0, 0.0);
    let (lo2, hi2, _) = eig2(j2);
    push("k2_origin_negative_eigenvalue", lo2, a * a * m * q, 1e-6);
    push("k2_origin_zero_eigenvalue", hi2, 0.0, 1e-7);
    push("k2_v2_axis_inflow", k2_field(0.0, 0.7).1, a * a * m * q * 0.7, 1e-9);
    // flow on the center manifold near the origin: sign decided by k - 1/Q
    let u2s = 1e-3;
    let on_mfld = k2_field(u2s, center_manifold_h2(p, u2s)).0;
    let expected_sign = if k > inv_q { 1.0 } else { -1.0 };
    push("k2_manifold_flow_sign", on_mfld.signum(), expected_sign, 0.0);

    // K3, r3 = 0: equilibria o3 = (0,0) and p3 = (k, 0)
    let k3_field = |v3: f64, e3: f64| {
        let f = local_field(
            &ChartCoords { chart: ChartId::K3, r: 0.0, c1: v3, c2: e3 },
            p,
        );
        (f[1], f[2])
    };
    let (f_o3, g_o3) = k3_field(0.0, 0.0);
    push("k3_o3_is_equilibrium", f_o3.abs() + g_o3.abs(), 0.0, 1e-12);
    let (f_p3, g_p3) = k3_field(k, 0.0);
    push("k3_p3_is_equilibrium", f_p3.abs() + g_p3.abs(), 0.0, 1e-12);
    let j3 = numeric_jacobian_2d(k3_field, 0.0, 0.0);
    let (lo3, hi3, _) = eig2(j3);
    push("k3_o3_sink_eig1", lo3.min(hi3), a * m * q * k, 2e-5);
    push("k3_o3_sink_eig2", lo3.max(hi3), a * m * q * k, 2e-5);
    push("k3_o3_hyperbolic_sink", (lo3 < 0.0 && hi3 < 0.0) as u8 as f64, 1.0, 0.0);
    let j3p = numeric_jacobian_2d(k3_field, k, 0.0);
    let (lo3p, hi3p, _) = eig2(j3p);
    push("k3_p3_repelling_eigenvalue", lo3p.max(hi3p), -a * m * q * k, 1e-5);
    push("k3_p3_zero_eigenvalue", lo3p.min(hi3p).abs().min(lo3p.abs()), 0.0, 1e-6);
    // flow along the center manifold toward/away from p3
    let e3s = 1e-3;
    let flow_n3 = {
        let v3 = center_manifold_g3(p, e3s);
        k3_field(v3, e3s).1
    };
    push("k3_n3_flow_sign", flow_n3.signum(), if k > inv_q { 1.0 } else { -1.0 }, 0.0);

    // K3, eps3 = 0 plane: o3 is a hyperbolic saddle; l3 is a repelling curve
    let k3e0 = |r3: f64, v3: f64| {
        let f = local_field(
            &ChartCoords { chart: ChartId::K3, r: r3, c1: v3, c2: 0.0 },
            p,
        );
        (f[0], f[1])
    };
    let j3e = numeric_jacobian_2d(k3e0, 0.0, 0.0);
    push("k3_eps0_origin_r_repelling", j3e[0][0], -a * m * q * k, 1e-5);
    push("k3_eps0_origin_v_attracting", j3e[1][1], a * m * q * k, 1e-5);
    // nontrivial eigenvalue along l3 at r3 -> 0: -AMQ(A-M+AM) > 0
    let r3s = 1e-4;
    let j3l = numeric_jacobian_2d(k3e0, r3s, l3_curve(p, r3s));
    let (ll, lh, _) = eig2(j3l);
    let nontrivial = if ll.abs() > lh.abs() { ll } else { lh };
    push("l3_nontrivial_eigenvalue", nontrivial, -a * m * q * k, 1e-2 * k.abs());
    push("l3_repelling", nontrivial.signum(), 1.0, 0.0);

    // l3 is the critical branch in chart coordinates: (AM + h(r3))/r3 = psi(r3)
    let mut worst = 0.0f64;
    for i in 1..=16 {
        let r3 = i as f64 * 0.01;
        let d = ((a * m + geometry::h(p, r3)) / r3 - l3_curve(p, r3)).abs();
        worst = worst.max(d);
    }
    push("l3_matches_critical_branch", worst, 0.0, 1e-10);

    Ok(PropositionReport { checks })
}
