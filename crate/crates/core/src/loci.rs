//! Bifurcation loci: Hopf and limit-point curves, the cusp, and the
//! Takens-Bogdanov point in closed form.

#[cfg(test)]
use crate::equilibria::{cubic_coefficients, solve_positive_equilibria};
use crate::geometry;
use crate::model::ModelParams;
use crate::sweep::{Cell, SweepTable};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LociError {
    #[error("Takens-Bogdanov radicand is negative ({0:.3e})")]
    ComplexRadicand(f64),
    #[error("cusp parameters leave the admissible domain: {0}")]
    DomainError(String),
}

/// A Takens-Bogdanov parameter pair `(A*, M*)` for given `(C, Q, eps, U1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TBResult {
    pub a_star: f64,
    pub m_star: f64,
    pub c: f64,
    pub q: f64,
    pub eps: f64,
    pub u1: f64,
}

impl TBResult {
    /// Back-substitution defects of the two defining conditions: the
    /// cubic-reduced trace bracket (times its `(U+C)` prefactor) and the
    /// determinant.
    pub fn back_substitution(&self) -> (f64, f64) {
        let (a, m, c, q, s, u) = (self.a_star, self.m_star, self.c, self.q, self.eps, self.u1);
        let inv_q = 1.0 / q;
        let tred = 3.0 * (a * m + c / q)
            + u * ((a - m - 1.0) * u + 2.0 * (inv_q - a + m - a * m) + inv_q)
            - s * (u + a);
        let trace = (u + c) * tred;
        let j11 = a - m + a * m + 2.0 * (m + 1.0 - a) * u - 3.0 * u * u;
        let det = s * u * (u + a) * (u + c) * (u + c) * (inv_q - j11);
        (trace, det)
    }
}

/// Solves `{trace = 0 (cubic-reduced), det = 0}` for `(A*, M*)` in closed
/// form: a quadratic in `A` (the printed "+sqrt" branch), then `M*` from the
/// determinant condition.
pub fn tb_point(c: f64, q: f64, eps: f64, u1: f64) -> Result<TBResult, LociError> {
    let (u, e) = (u1, eps);
    let u2 = u * u;
    let q2 = q * q;
    // quadratic a2*A^2 + a1*A + a0 = 0 from cross-multiplying the two
    // M-expressions
    let a2 = -q2 * (3.0 * u2 - 6.0 * u + e + 3.0);
    let a1 = 3.0 * c * q - 6.0 * q2 * u2 * u + 12.0 * q2 * u2 - 3.0 * q2 * u * e - 6.0 * q2 * u
        + q2 * e
        + q * u
        + 3.0 * q;
    let a0 = 6.0 * c * q * u - 3.0 * c * q - 3.0 * q2 * u2 * u2 + 6.0 * q2 * u2 * u
        - 2.0 * q2 * u2 * e
        - 3.0 * q2 * u2
        + q2 * u * e
        + 5.0 * q * u2
        - q * u;
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return Err(LociError::ComplexRadicand(disc));
    }
    // a2 < 0 always (e > 0); the branch matching the printed "+sqrt" choice
    // is the larger root
    let r1 = (-a1 + disc.sqrt()) / (2.0 * a2);
    let r2 = (-a1 - disc.sqrt()) / (2.0 * a2);
    let a_star = r1.max(r2);
    let m_star = m_from_det(a_star, q, u);
    Ok(TBResult {
        a_star,
        m_star,
        c,
        q,
        eps,
        u1,
    })
}

/// `M` from the trace condition (cubic-reduced bracket) at a given `A`.
pub fn m_from_trace(a: f64, c: f64, q: f64, eps: f64, u: f64) -> f64 {
    let num = 3.0 * c + a * q * u * u - q * u * u + 3.0 * u - 2.0 * a * q * u
        - eps * q * u
        - eps * q * a;
    let den = q * (3.0 * a - u * u + 2.0 * u - 2.0 * a * u);
    -num / den
}

/// `M` from the determinant condition `det = 0` at a given `A`.
pub fn m_from_det(a: f64, q: f64, u: f64) -> f64 {
    (a * q * (2.0 * u - 1.0) + q * u * (3.0 * u - 2.0) + 1.0) / (q * (a + 2.0 * u - 1.0))
}

/// The cusp of the equilibrium cubic: triple-root coefficient matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuspPoint {
    pub u: f64,
    pub v: f64,
    pub c: f64,
    pub q: f64,
}

/// `u* = (1+M-A)/3`, `1/Q = 3u*^2 - M + A + AM`, `C = Q(-u*^3 - AM)`.
pub fn cusp_point(a: f64, m: f64) -> Result<CuspPoint, LociError> {
    if 1.0 + m - a <= 0.0 {
        return Err(LociError::DomainError(format!(
            "1 + M - A = {} must be positive",
            1.0 + m - a
        )));
    }
    let u = (1.0 + m - a) / 3.0;
    let inv_q = 3.0 * u * u - m + a + a * m;
    if inv_q <= 0.0 {
        return Err(LociError::DomainError("Q_cp is not positive".into()));
    }
    let q = 1.0 / inv_q;
    let c = q * (-u * u * u - a * m);
    if c <= 0.0 {
        return Err(LociError::DomainError("C_cp is not positive".into()));
    }
    Ok(CuspPoint {
        u,
        v: (u + c) / q,
        c,
        q,
    })
}

/// All roots of the trace equation `u h'(u) = eps (u + A)` on `(0, 1)`;
/// C-independent.
fn trace_roots(a: f64, m: f64, eps: f64) -> Vec<f64> {
    let p = ModelParams::new(a, m, 0.0, 1.0, eps).expect("valid parameters");
    let t = |u: f64| u * geometry::h_prime(&p, u) - eps * (u + a);
    let n = 4000;
    let mut roots = Vec::new();
    let mut prev_u = 1e-9;
    let mut prev_t = t(prev_u);
    for i in 1..=n {
        let u = i as f64 / n as f64;
        let tu = t(u);
        if prev_t == 0.0 {
            roots.push(prev_u);
        } else if prev_t * tu < 0.0 {
            let (mut lo, mut hi) = (prev_u, u);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if t(lo) * t(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_u = u;
        prev_t = tu;
    }
    roots
}

/// Hopf locus in `(C, Q)` for fixed `(A, M, eps)`: per `C`, every
/// `{cubic = 0, trace = 0}` solution `(u, Q)`, with the determinant sign.
/// Rows: `(C, Q, u, v, det_sign, status)`.
pub fn hopf_curve(a: f64, m: f64, eps: f64, c_range: (f64, f64), n: usize) -> SweepTable {
    assert!(n >= 2, "need at least two C samples");
    let mut table = SweepTable::new(
        ["C", "Q", "u", "v", "det_sign", "status"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    let roots = trace_roots(a, m, eps);
    let rows: Vec<Vec<Vec<Cell>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let c = c_range.0 + (c_range.1 - c_range.0) * i as f64 / (n - 1) as f64;
            let mut out = Vec::new();
            let mut emitted = false;
            for &u in &roots {
                let p0 = match ModelParams::new(a, m, c.max(0.0), 1.0, eps) {
                    Ok(p) => p,
                    Err(_) => continue,
                };
                let h = geometry::h(&p0, u);
                if h <= 0.0 {
                    continue;
                }
                let q = (u + c) / h;
                if !(q.is_finite() && q > 0.0) {
                    continue;
                }
                let det_sign = (1.0 / q - geometry::h_prime(&p0, u)).signum();
                out.push(vec![
                    Cell::Num(c),
                    Cell::Num(q),
                    Cell::Num(u),
                    Cell::Num(h),
                    Cell::Num(det_sign),
                    Cell::Text("ok".into()),
                ]);
                emitted = true;
            }
            if !emitted {
                out.push(vec![
                    Cell::Num(c),
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Text("no_root".into()),
                ]);
            }
            out
        })
        .collect();
    for group in rows {
        for row in group {
            table.push_row(row);
        }
    }
    table
}

/// Limit-point (fold-of-equilibria) locus: per `C`, the double-root
/// solutions `{cubic = 0, cubic' = 0}` as `(u, Q)`. Rows: `(C, Q, u, v,
/// status)`.
pub fn fold_curve(a: f64, m: f64, c_range: (f64, f64), n: usize) -> SweepTable {
    assert!(n >= 2, "need at least two C samples");
    let mut table = SweepTable::new(
        ["C", "Q", "u", "v", "status"].iter().map(|s| s.to_string()).collect(),
    );
    // double root: 1/Q = h'(u) and g(u) := (u+C) h'(u) - h(u) = 0.
    // g'(u) = (u+C) h''(u), so g has a single interior turning point at the
    // inflection of h; bracket each monotone piece and catch the tangency
    // (the cusp) at the turning point.
    let rows: Vec<Vec<Vec<Cell>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let c = c_range.0 + (c_range.1 - c_range.0) * i as f64 / (n - 1) as f64;
            let p0 = match ModelParams::new(a, m, c.max(1e-12), 1.0, 0.01) {
                Ok(p) => p,
                Err(_) => return Vec::new(),
            };
            let g = |u: f64| (u + c) * geometry::h_prime(&p0, u) - geometry::h(&p0, u);
            let u_infl = (1.0 + m - a) / 3.0;
            let mut breaks = vec![1e-9];
            if u_infl > 1e-9 && u_infl < 1.0 - 1e-9 {
                breaks.push(u_infl);
            }
            breaks.push(1.0 - 1e-9);
            let mut u_roots = Vec::new();
            for w in breaks.windows(2) {
                let (lo0, hi0) = (w[0], w[1]);
                if g(lo0) * g(hi0) < 0.0 {
                    let (mut lo, mut hi) = (lo0, hi0);
                    for _ in 0..90 {
                        let mid = 0.5 * (lo + hi);
                        if g(lo) * g(mid) <= 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    u_roots.push(0.5 * (lo + hi));
                }
            }
            if u_roots.is_empty() && u_infl > 0.0 && u_infl < 1.0 && g(u_infl).abs() <= 1e-9 {
                u_roots.push(u_infl);
            }
            let mut out = Vec::new();
            for u_root in u_roots {
                let hp = geometry::h_prime(&p0, u_root);
                if hp > 0.0 {
                    let q = 1.0 / hp;
                    out.push(vec![
                        Cell::Num(c),
                        Cell::Num(q),
                        Cell::Num(u_root),
                        Cell::Num((u_root + c) / q),
                        Cell::Text("ok".into()),
                    ]);
                }
            }
            if out.is_empty() {
                out.push(vec![
                    Cell::Num(c),
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Text("no_root".into()),
                ]);
            }
            out
        })
        .collect();
    for group in rows {
        for row in group {
            table.push_row(row);
        }
    }
    table
}

/// The analytic Takens-Bogdanov point in `(u, C, Q)` for fixed
/// `(A, M, eps)`: the equilibrium where trace, determinant and the cubic all
/// vanish. Used to cross-check [`tb_point`] and the curve sweeps.
pub fn bt_point_forward(a: f64, m: f64, eps: f64) -> Option<(f64, f64, f64)> {
    let p0 = ModelParams::new(a, m, 0.0, 1.0, eps).ok()?;
    // trace = 0 and det = 0 combine to u = Q eps A/(1 - Q eps); solve
    // h'(u(Q)) = 1/Q for Q by bisection
    let u_of = |q: f64| q * eps * a / (1.0 - q * eps);
    let f = |q: f64| geometry::h_prime(&p0, u_of(q)) - 1.0 / q;
    let (lo, hi) = (0.5, 0.98 / eps.max(1e-6));
    let mut q_lo = f(lo);
    if !q_lo.is_finite() {
        return None;
    }
    let mut found = None;
    let n = 2000;
    for i in 1..=n {
        let q = lo + (hi - lo) * i as f64 / n as f64;
        let fq = f(q);
        if q_lo * fq < 0.0 {
            found = Some((lo + (hi - lo) * (i - 1) as f64 / n as f64, q));
            break;
        }
        q_lo = fq;
    }
    let (mut qa, mut qb) = found?;
    for _ in 0..100 {
        let mid = 0.5 * (qa + qb);
        if f(qa) * f(mid) <= 0.0 {
            qb = mid;
        } else {
            qa = mid;
        }
    }
    let q = 0.5 * (qa + qb);
    let u = u_of(q);
    let c = q * geometry::h(&p0, u) - u;
    Some((u, c, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tb_roundtrip_recovers_true_parameters() {
        // at the exact BT of (A, M, eps) = (1/2, -1/10, 1/20), the closed
        // form must return exactly those parameters
        let (u, c, q) = bt_point_forward(0.5, -0.1, 0.05).unwrap();
        let tb = tb_point(c, q, 0.05, u).unwrap();
        assert!((tb.a_star - 0.5).abs() < 1e-9, "A* = {}", tb.a_star);
        assert!((tb.m_star + 0.1).abs() < 1e-9, "M* = {}", tb.m_star);
    }

    #[test]
    fn tb_back_substitution_vanishes() {
        let tb = tb_point(0.084, 1.721, 0.02, 0.047).unwrap();
        let (tr, det) = tb.back_substitution();
        assert!(tr.abs() <= 1e-8, "trace defect {tr}");
        assert!(det.abs() <= 1e-8, "det defect {det}");
        // the two displayed M-expressions agree at A*
        let m_tr = m_from_trace(tb.a_star, 0.084, 1.721, 0.02, 0.047);
        let m_det = m_from_det(tb.a_star, 1.721, 0.047);
        assert!((m_tr - m_det).abs() < 1e-10);
        assert!((tb.m_star - m_det).abs() < 1e-12);
    }

    #[test]
    fn tb_identity_across_random_draws() {
        let mut s = 0xfeedu64;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut accepted = 0;
        while accepted < 100 {
            let c = 0.02 + 0.2 * next();
            let q = 1.0 + 1.5 * next();
            let eps = 0.005 + 0.08 * next();
            let u1 = 0.01 + 0.3 * next();
            let Ok(tb) = tb_point(c, q, eps, u1) else { continue };
            let (tr, det) = tb.back_substitution();
            assert!(tr.abs() <= 1e-8 && det.abs() <= 1e-8, "{tb:?}: {tr} {det}");
            accepted += 1;
        }
    }

    #[test]
    fn tb_complex_radicand() {
        assert!(matches!(
            tb_point(1.91, 1.356, 0.124, 0.0175),
            Err(LociError::ComplexRadicand(_))
        ));
    }

    #[test]
    fn cusp_reference_values() {
        let cp = cusp_point(0.5, -0.1).unwrap();
        assert!((cp.u - 0.133).abs() < 2e-3);
        assert!((cp.v - 0.128).abs() < 2e-3);
        assert!((cp.c - 0.078).abs() < 2e-3);
        assert!((cp.q - 1.657).abs() < 2e-3);
    }

    #[test]
    fn cusp_triple_root_identity() {
        let mut s = 0xabcdu64;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut accepted = 0;
        while accepted < 50 {
            let a = 0.1 + 0.8 * next();
            let m = -0.9 + 0.85 * next();
            if 1.0 + m - a <= 0.05 {
                continue;
            }
            let Ok(cp) = cusp_point(a, m) else { continue };
            let Ok(p) = ModelParams::new(a, m, cp.c, cp.q, 0.05) else { continue };
            let co = cubic_coefficients(&p);
            assert!(co.eval(cp.u).abs() <= 1e-9);
            assert!(co.eval_deriv(cp.u).abs() <= 1e-9);
            assert!((6.0 * cp.u + 2.0 * co.c2).abs() <= 1e-9);
            accepted += 1;
        }
    }

    #[test]
    fn cusp_perturbation_splits_roots() {
        let cp = cusp_point(0.5, -0.1).unwrap();
        let p = ModelParams::new(0.5, -0.1, cp.c, cp.q + 1e-3, 0.05).unwrap();
        let roots = solve_positive_equilibria(&p);
        // the triple root splits; at least one simple root remains and no
        // multiplicity-3 root survives
        assert!(roots.iter().all(|e| e.multiplicity < 3));
        assert!(!roots.is_empty());
    }

    #[test]
    fn cusp_domain_error() {
        assert!(matches!(cusp_point(0.95, -0.1), Err(LociError::DomainError(_))));
    }

    #[test]
    fn hopf_curve_hits_degenerate_threshold() {
        // where the curve crosses C = -A M Q, the degenerate closed form is
        // recovered
        let (a, m, eps) = (0.5, -0.1, 0.05);
        let t = hopf_curve(a, m, eps, (0.0, 0.25), 400);
        let hp = crate::stability::hopf_threshold(a, m, 0.0, eps, crate::stability::HopfBranch::Degenerate)
            .unwrap();
        let c_target = -a * m * hp.q;
        let mut best = f64::INFINITY;
        for i in 0..t.rows.len() {
            if let (Some(c), Some(q)) = (t.num(i, "C"), t.num(i, "Q")) {
                let d = ((c - c_target).powi(2) + (q - hp.q).powi(2)).sqrt();
                best = best.min(d);
            }
        }
        assert!(best < 2e-3, "degenerate threshold missed by {best}");
    }

    #[test]
    fn hopf_curve_det_changes_character_at_bt() {
        let (a, m, eps) = (0.5, -0.1, 0.05);
        let (u_bt, c_bt, _) = bt_point_forward(a, m, eps).unwrap();
        let t = hopf_curve(a, m, eps, (c_bt - 0.02, c_bt + 0.02), 81);
        let mut signs = Vec::new();
        for i in 0..t.rows.len() {
            if let (Some(u), Some(ds)) = (t.num(i, "u"), t.num(i, "det_sign")) {
                if (u - u_bt).abs() < 0.05 {
                    signs.push(ds);
                }
            }
        }
        assert!(signs.iter().any(|&s| s > 0.0) && signs.iter().any(|&s| s < 0.0));
    }

    #[test]
    fn fold_curve_passes_cusp_and_double_root_holds() {
        let (a, m) = (0.5, -0.1);
        let cp = cusp_point(a, m).unwrap();
        let t = fold_curve(a, m, (cp.c - 0.02, cp.c + 0.02), 81);
        let mut best = f64::INFINITY;
        for i in 0..t.rows.len() {
            let (Some(c), Some(q), Some(u)) = (t.num(i, "C"), t.num(i, "Q"), t.num(i, "u")) else {
                continue;
            };
            // double-root conditions
            let p = ModelParams::new(a, m, c.max(1e-12), q, 0.05).unwrap();
            let co = cubic_coefficients(&p);
            assert!(co.eval(u).abs() <= 1e-10, "cubic residual {}", co.eval(u));
            assert!(co.eval_deriv(u).abs() <= 1e-10);
            best = best.min(((c - cp.c).powi(2) + (q - cp.q).powi(2)).sqrt());
        }
        assert!(best < 2e-3, "fold curve misses the cusp by {best}");
    }

    #[test]
    fn fold_curve_crossing_changes_root_count() {
        // the limit-point wedge opens for C above the cusp value (~0.0789);
        // pick a fold whose colliding root pair is interior (u away from 0)
        let (a, m) = (0.5, -0.1);
        let t = fold_curve(a, m, (0.09, 0.10), 2);
        let (mut c0, mut q0) = (f64::NAN, f64::NAN);
        for i in 0..t.rows.len() {
            if let (Some(c), Some(q), Some(u)) = (t.num(i, "C"), t.num(i, "Q"), t.num(i, "u")) {
                if u > 0.05 {
                    c0 = c;
                    q0 = q;
                    break;
                }
            }
        }
        assert!(c0.is_finite());
        let count = |q: f64| {
            let p = ModelParams::new(a, m, c0, q, 0.05).unwrap();
            solve_positive_equilibria(&p).iter().map(|e| e.multiplicity as usize).sum::<usize>()
        };
        let below = count(q0 - 1e-3);
        let above = count(q0 + 1e-3);
        assert_eq!((below as i64 - above as i64).abs(), 2, "{below} vs {above}");
    }

    #[test]
    fn curves_are_continuous_in_c() {
        let t = hopf_curve(0.5, -0.1, 0.05, (0.0, 0.2), 100);
        // group rows by branch via nearest-u and check Q continuity
        let mut by_branch: std::collections::BTreeMap<i64, Vec<(f64, f64)>> = Default::default();
        for i in 0..t.rows.len() {
            if let (Some(c), Some(q), Some(u)) = (t.num(i, "C"), t.num(i, "Q"), t.num(i, "u")) {
                by_branch.entry((u * 1e4) as i64 / 100).or_default().push((c, q));
            }
        }
        for (_, pts) in by_branch {
            if pts.len() < 3 {
                continue;
            }
            for w in pts.windows(3) {
                let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0).max(1e-12);
                let jump = (w[2].1 - w[1].1).abs();
                let allowed = 10.0 * slope.abs().max(0.1) * (w[2].0 - w[1].0).abs();
                assert!(jump <= allowed + 1e-9, "Q jump {jump} vs allowed {allowed}");
            }
        }
    }
}
