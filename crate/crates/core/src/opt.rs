//! Scalar optimisation helpers.

/// Golden-section minimisation of a unimodal function on `[a, b]`.
/// Returns the bracket midpoint after `iters` contractions.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, iters: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section maximisation.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, iters: usize) -> f64 {
    golden_section_min(|x| -f(x), a, b, iters)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_minimum() {
        let x = golden_section_min(|x| (x - 0.37).powi(2), 0.0, 1.0, 60);
        assert!((x - 0.37).abs() < 1e-9);
    }
}
