//! Symmetric Hausdorff distance between closed polylines via point-to-segment
//! projection.

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let (apx, apy) = (p.0 - a.0, p.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * abx, a.1 + t * aby);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

fn directed(from: &[(f64, f64)], to: &[(f64, f64)]) -> f64 {
    let mut worst = 0.0f64;
    for &p in from {
        let mut best = f64::INFINITY;
        for w in to.windows(2) {
            best = best.min(point_segment_distance(p, w[0], w[1]));
            if best == 0.0 {
                break;
            }
        }
        if to.len() == 1 {
            best = point_segment_distance(p, to[0], to[0]);
        }
        worst = worst.max(best);
    }
    worst
}

/// Symmetric Hausdorff distance between two closed polylines.
pub fn hausdorff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    directed(a, b).max(directed(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(shift: (f64, f64)) -> Vec<(f64, f64)> {
        let base = [
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (0.0, 1.0),
            (0.0, 0.0),
        ];
        base.iter().map(|(x, y)| (x + shift.0, y + shift.1)).collect()
    }

    #[test]
    fn identical_cycles_have_distance_zero() {
        let s = square((0.0, 0.0));
        assert_eq!(hausdorff(&s, &s), 0.0);
    }

    #[test]
    fn translation_by_known_offset() {
        let a = square((0.0, 0.0));
        let b = square((0.01, 0.0));
        assert!((hausdorff(&a, &b) - 0.01).abs() < 1e-14);
    }

    #[test]
    fn segment_projection_beats_vertex_sampling() {
        // a point over the middle of a long edge is close to the segment even
        // though both endpoints are far
        let a = vec![(0.5, 0.1)];
        let b = vec![(0.0, 0.0), (1.0, 0.0)];
        assert!((directed(&a, &b) - 0.1).abs() < 1e-14);
        assert!((hausdorff(&a, &b) - 0.26f64.sqrt()).abs() < 1e-14);
    }
}
