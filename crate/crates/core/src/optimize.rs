//! One-dimensional maximization helpers shared by the engine, the model
//! module and the rate-function code.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of `f` on `[a, b]`, stopping once
/// the bracket is narrower than `tol`. Returns the best point evaluated.
pub fn golden_section_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f2 > f1 { (x2, f2) } else { (x1, f1) };
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

/// Uniform scan over `points` nodes of `[a, b]` (ties keep the smaller
/// abscissa) followed by golden-section refinement on the cells adjacent to
/// the best node. The result is never worse than the best scanned node.
pub fn scan_then_golden(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    points: usize,
    tol: f64,
) -> (f64, f64) {
    if a == b {
        return (a, f(a));
    }
    let points = points.max(2);
    let h = (b - a) / (points - 1) as f64;
    let node = |k: usize| if k + 1 == points { b } else { a + h * k as f64 };
    let mut best_k = 0;
    let mut best_v = f(a);
    for k in 1..points {
        let v = f(node(k));
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    let lo = node(best_k.saturating_sub(1));
    let hi = node((best_k + 1).min(points - 1));
    let (x, v) = golden_section_max(&f, lo, hi, tol);
    if v > best_v {
        (x, v)
    } else {
        (node(best_k), best_v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_section_max(|x| -(x - 0.3).powi(2), -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn scan_handles_endpoints_and_ties() {
        let (x, v) = scan_then_golden(|x| x, 1.0, 5.0, 33, 1e-10);
        assert_eq!((x, v), (5.0, 5.0));
        let (x, _) = scan_then_golden(|_| 1.0, 1.0, 5.0, 33, 1e-10);
        assert_eq!(x, 1.0);
        let (x, v) = scan_then_golden(|x: f64| (x - 1.0).min(3.0 - x), 1.0, 5.0, 1024, 1e-12);
        assert!((x - 2.0).abs() < 1e-9 && (v - 1.0).abs() < 1e-9);
    }
}
