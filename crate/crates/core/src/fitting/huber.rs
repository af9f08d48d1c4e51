/// Huber penalty: `r^2 / 2` inside `[-delta, delta]`, linear outside.
pub fn huber(residual: f64, delta: f64) -> f64 {
    let a = residual.abs();
    if a <= delta {
        0.5 * residual * residual
    } else {
        delta * (a - 0.5 * delta)
    }
}

/// Derivative of [`huber`] with respect to the residual.
pub fn huber_derivative(residual: f64, delta: f64) -> f64 {
    if residual.abs() <= delta {
        residual
    } else {
        delta * residual.signum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(huber(0.0, 0.001), 0.0);
        assert!((huber(0.001, 0.001) - 5e-7).abs() < 1e-20);
        // 0.001 * (0.101 - 0.0005)
        assert!((huber(0.101, 0.001) - 0.0001005).abs() < 1e-15);
        assert_eq!(huber(-0.101, 0.001), huber(0.101, 0.001));
    }

    #[test]
    fn smooth_at_the_knot() {
        let d = 0.25;
        let eps = 1e-9;
        assert!((huber(d - eps, d) - huber(d + eps, d)).abs() < 1e-9);
        assert!((huber_derivative(d - eps, d) - huber_derivative(d + eps, d)).abs() < 1e-8);
    }
}
