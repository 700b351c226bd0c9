//! Positive coexistence equilibria via the monic cubic
//! `u^3 + (A-M-1)u^2 + (M-A-AM+1/Q)u + (AM+C/Q) = 0`,
//! plus the closed forms of the degenerate family.

use crate::model::ModelParams;
use thiserror::Error;

/// Newton-polished residual bound on accepted roots.
pub const TOL_RESIDUAL: f64 = 1e-12;

/// Roots closer than this to 0 or 1 are classified as boundary and dropped.
pub const TOL_BOUNDARY: f64 = 1e-9;

/// Tolerance on the (normalized) cubic discriminant for double roots.
pub const TOL_DISCRIMINANT: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum EquilibriaError {
    #[error("degenerate pair radicand is negative ({0:.3e}): roots are complex")]
    ComplexRoots(f64),
    #[error("closed-form branch requires complex arithmetic and no numeric fallback root exists")]
    BranchFailure,
}

/// Coefficients of the monic equilibrium cubic (`c3 = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl CubicCoeffs {
    pub fn eval(&self, u: f64) -> f64 {
        ((self.c3 * u + self.c2) * u + self.c1) * u + self.c0
    }

    pub fn eval_deriv(&self, u: f64) -> f64 {
        (3.0 * self.c3 * u + 2.0 * self.c2) * u + self.c1
    }

    /// Discriminant of the monic cubic.
    pub fn discriminant(&self) -> f64 {
        let (b, c, d) = (self.c2, self.c1, self.c0);
        18.0 * b * c * d - 4.0 * b * b * b * d + b * b * c * c - 4.0 * c * c * c - 27.0 * d * d
    }
}

pub fn cubic_coefficients(p: &ModelParams) -> CubicCoeffs {
    CubicCoeffs {
        c3: 1.0,
        c2: p.a - p.m - 1.0,
        c1: p.m - p.a - p.a * p.m + 1.0 / p.q,
        c0: p.a * p.m + p.c / p.q,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignC0 {
    Positive,
    Zero,
    Negative,
}

/// Subcases of the positive-root-count classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseSubcase {
    Case1a,
    Case1b,
    Case2a,
    Case2b,
    Case2c,
    Case3a,
    Case3b,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseLabel {
    pub sign_c0: SignC0,
    pub subcase: CaseSubcase,
    /// Maximum possible number of positive equilibria in this case.
    pub max_count: u8,
}

/// Sign-based case classification (Descartes' rule on the cubic).
pub fn classify_case(p: &ModelParams) -> CaseLabel {
    let co = cubic_coefficients(p);
    let sign_c0 = if p.is_degenerate() {
        SignC0::Zero
    } else if co.c0 > 0.0 {
        SignC0::Positive
    } else {
        SignC0::Negative
    };
    let (c2, c1) = (co.c2, co.c1);
    let (subcase, max_count) = match sign_c0 {
        SignC0::Positive => {
            if c2 >= 0.0 && c1 >= 0.0 {
                (CaseSubcase::Case1b, 0)
            } else {
                (CaseSubcase::Case1a, 2)
            }
        }
        SignC0::Zero => {
            if c2 >= 0.0 && c1 >= 0.0 {
                (CaseSubcase::Case2c, 0)
            } else if c2 < 0.0 && c1 > 0.0 {
                (CaseSubcase::Case2a, 2)
            } else {
                (CaseSubcase::Case2b, 1)
            }
        }
        SignC0::Negative => {
            if c2 < 0.0 && c1 > 0.0 {
                (CaseSubcase::Case3b, 3)
            } else {
                (CaseSubcase::Case3a, 1)
            }
        }
    };
    CaseLabel {
        sign_c0,
        subcase,
        max_count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    E1,
    E2,
    E3,
    Boundary,
}

/// A coexistence equilibrium `(u, (u+C)/Q)` with its cubic residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPoint {
    pub u: f64,
    pub v: f64,
    pub kind: EquilibriumKind,
    pub residual: f64,
    pub multiplicity: u8,
}

fn bisect_root(co: &CubicCoeffs, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = co.eval(lo);
    if f_lo == 0.0 {
        return lo;
    }
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        let f_mid = co.eval(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_lo > 0.0) == (f_mid > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn newton_polish(co: &CubicCoeffs, mut u: f64) -> f64 {
    for _ in 0..8 {
        let f = co.eval(u);
        let d = co.eval_deriv(u);
        if d == 0.0 {
            break;
        }
        let step = f / d;
        u -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    u
}

/// All roots of the cubic in `(0, 1)` with `v > 0`, ascending in `u`.
///
/// Bracketed bisection on the monotone pieces cut by the derivative roots,
/// Newton polish, double roots via the discriminant. Boundary roots (within
/// [`TOL_BOUNDARY`] of 0 or 1) are excluded.
pub fn solve_positive_equilibria(p: &ModelParams) -> Vec<EquilibriumPoint> {
    let co = cubic_coefficients(p);

    // breakpoints: derivative roots inside (0,1) split the interval into
    // monotone pieces
    let mut breaks = vec![0.0];
    let disc_d = co.c2 * co.c2 - 3.0 * co.c1;
    let mut crits: Vec<f64> = Vec::new();
    if disc_d > 0.0 {
        let sq = disc_d.sqrt();
        // stable quadratic roots of 3u^2 + 2 c2 u + c1
        let q = -(co.c2 + co.c2.signum() * sq);
        let (r1, r2) = if co.c2 == 0.0 {
            (sq / 3.0, -sq / 3.0)
        } else {
            (q / 3.0, co.c1 / q)
        };
        for r in [r1.min(r2), r1.max(r2)] {
            crits.push(r);
            if r > 0.0 && r < 1.0 {
                breaks.push(r);
            }
        }
    }
    breaks.push(1.0);
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let mut roots: Vec<(f64, u8)> = Vec::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo < 1e-15 {
            continue;
        }
        let (f_lo, f_hi) = (co.eval(lo), co.eval(hi));
        if f_lo == 0.0 {
            roots.push((lo, 1));
            continue;
        }
        if (f_lo > 0.0) != (f_hi > 0.0) {
            let r = newton_polish(&co, bisect_root(&co, lo, hi));
            roots.push((r, 1));
        }
    }
    if co.eval(1.0) == 0.0 {
        roots.push((1.0, 1));
    }

    // tangent double roots leave no sign change; when the discriminant
    // vanishes, pick them up at the critical points
    let scale = 1.0 + co.c2.abs().max(co.c1.abs()).max(co.c0.abs());
    let near_multiple = co.discriminant().abs() <= TOL_DISCRIMINANT * scale * scale;
    if near_multiple {
        for &cr in &crits {
            if !(0.0..=1.0).contains(&cr) {
                continue;
            }
            if co.eval(cr).abs() <= 1e-8 * scale
                && !roots.iter().any(|(r, _)| (r - cr).abs() < 1e-6)
            {
                roots.push((cr, 1));
            }
        }
    }

    roots.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    roots.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);

    // multiplicity from derivative magnitudes, only meaningful when the
    // discriminant is (numerically) zero
    if near_multiple {
        for (u, mult) in roots.iter_mut() {
            if co.eval_deriv(*u).abs() <= 1e-7 * scale {
                let second = 6.0 * *u + 2.0 * co.c2;
                *mult = if second.abs() <= 1e-5 * scale { 3 } else { 2 };
            }
        }
    }

    let interior: Vec<(f64, u8)> = roots
        .into_iter()
        .filter(|(u, _)| *u > TOL_BOUNDARY && *u < 1.0 - TOL_BOUNDARY)
        .filter(|(u, _)| (u + p.c) / p.q > 0.0)
        .collect();

    let n = interior.len();
    interior
        .into_iter()
        .enumerate()
        .map(|(i, (u, multiplicity))| {
            // ascending position i: the largest root is E1, then E2, E3
            let kind = match n - 1 - i {
                0 => EquilibriumKind::E1,
                1 => EquilibriumKind::E2,
                _ => EquilibriumKind::E3,
            };
            EquilibriumPoint {
                u,
                v: (u + p.c) / p.q,
                kind,
                residual: co.eval(u).abs(),
                multiplicity,
            }
        })
        .collect()
}

/// Closed-form roots of the degenerate quadratic factor
/// `u^2 + (A-M-1)u + (M-A-AM+1/Q)`:
/// `U_{1,2} = (1 + M - A ± sqrt((A+M+1)^2 - 4M - 4/Q))/2`, `U1 >= U2`.
pub fn degenerate_pair(p: &ModelParams) -> Result<(f64, f64), EquilibriaError> {
    debug_assert!(p.is_degenerate());
    let s = p.a + p.m + 1.0;
    let radicand = s * s - 4.0 * p.m - 4.0 / p.q;
    if radicand < 0.0 {
        return Err(EquilibriaError::ComplexRoots(radicand));
    }
    let sq = radicand.sqrt();
    let b = 1.0 + p.m - p.a;
    Ok(((b + sq) / 2.0, (b - sq) / 2.0))
}

/// Window of `Q` on which `0 < U2 < U1`:
/// `4/((A+M+1)^2 - 4M) < Q < 1/(A - M + AM)` (with `-1 < M < 0`,
/// `0 < A < 1 + M`).
pub fn degenerate_pair_window(a: f64, m: f64) -> Option<(f64, f64)> {
    if !(-1.0 < m && m < 0.0 && 0.0 < a && a < 1.0 + m) {
        return None;
    }
    let s = a + m + 1.0;
    Some((4.0 / (s * s - 4.0 * m), 1.0 / (a - m + a * m)))
}

/// Result of the Cardano-form evaluation of the equilibrium abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormRoot {
    pub u: f64,
    /// True when the closed form required complex arithmetic and the value
    /// came from the numeric solver instead.
    pub fallback: bool,
}

/// Cardano-form expression for the equilibrium abscissa in the
/// unique-real-root regime. Falls back to the numeric solver (flagged) when
/// the intermediate radicand goes negative (three real roots) or the cube
/// root loses its real branch.
pub fn closed_form_u1(p: &ModelParams) -> Result<ClosedFormRoot, EquilibriaError> {
    let (a, m, c, q) = (p.a, p.m, p.c, p.q);
    let beta0 = q * (a * a + (a - 1.0) * m + a + m * m + 1.0) - 3.0;
    let w = 2.0 * a.powi(3) * q + 3.0 * a * a * (m + 1.0) * q
        - 3.0 * a * ((m - 4.0) * m * q + q + 3.0)
        + 27.0 * c
        - (m + 1.0) * ((m - 2.0) * (2.0 * m - 1.0) * q - 9.0);
    let inner = (q * w * w - 4.0 * beta0.powi(3)) / q.powi(3);
    let base = -2.0 * a.powi(3) - 3.0 * a * a * m - 3.0 * a * a
        - 9.0 * (-a + 3.0 * c + m + 1.0) / q
        + 3.0 * a * m * m
        - 12.0 * a * m
        + 3.0 * a
        + 2.0 * m.powi(3)
        - 3.0 * m * m
        - 3.0 * m
        + 2.0;
    if inner >= 0.0 {
        let alpha = base + inner.sqrt();
        if alpha > 0.0 {
            let cr = alpha.cbrt();
            let u = (2f64.powf(2.0 / 3.0) * cr
                + 2.0 * 2f64.cbrt() * beta0 / (q * cr)
                + 2.0 * (1.0 + m - a))
                / 6.0;
            return Ok(ClosedFormRoot { u, fallback: false });
        }
    }
    let roots = solve_positive_equilibria(p);
    match roots.len() {
        1 => Ok(ClosedFormRoot {
            u: roots[0].u,
            fallback: true,
        }),
        _ => Err(EquilibriaError::BranchFailure),
    }
}
