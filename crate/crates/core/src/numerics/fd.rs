use super::Real;

/// Directional derivative of `f` at `x` along `h` by central differences at
/// each step size in `steps`, combined with Richardson extrapolation.
///
/// Steps should be given in decreasing order with a constant ratio (the
/// usual choice is halving). A single step gives the plain central
/// difference.
pub fn directional_fd<T: Real, F: FnMut(&[T]) -> T>(mut f: F, x: &[T], h: &[T], steps: &[T]) -> T {
    assert!(!steps.is_empty());
    assert_eq!(x.len(), h.len());
    let mut shifted = vec![T::zero(); x.len()];
    let mut central = |s: T, f: &mut F| {
        for i in 0..x.len() {
            shifted[i] = x[i] + s * h[i];
        }
        let fp = f(&shifted);
        for i in 0..x.len() {
            shifted[i] = x[i] - s * h[i];
        }
        let fm = f(&shifted);
        (fp - fm) / (T::lit(2.0) * s)
    };
    let mut table: Vec<T> = steps.iter().map(|&s| central(s, &mut f)).collect();
    if steps.len() == 1 {
        return table[0];
    }
    let ratio = steps[0] / steps[1];
    let mut factor = ratio * ratio;
    for level in 1..steps.len() {
        for i in 0..(steps.len() - level) {
            table[i] = (factor * table[i + 1] - table[i]) / (factor - T::one());
        }
        factor = factor * ratio * ratio;
    }
    table[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_at_three() {
        let d = directional_fd(|x: &[f64]| x[0] * x[0], &[3.0], &[1.0], &[0.1]);
        assert!((d - 6.0).abs() < 1e-12);
    }

    #[test]
    fn constant_is_flat() {
        let d = directional_fd(|_x: &[f64]| 4.2, &[1.0, 2.0], &[0.3, -0.5], &[0.1, 0.05]);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn sine_at_origin() {
        let d = directional_fd(|x: &[f64]| x[0].sin(), &[0.0], &[1.0], &[0.1, 0.05, 0.025]);
        assert!((d - 1.0).abs() < 1e-8, "{d}");
    }
}
