//! Phase wrapping and sequential unwrapping.

use std::f64::consts::TAU;

/// Reduce an angle to within pi of zero.
pub fn wrap(angle: f64) -> f64 {
    angle - TAU * (angle / TAU).round()
}

/// Shift `raw` by a multiple of 2 pi so it lies within pi of `prev`.
pub fn unwrap_step(prev: f64, raw: f64) -> f64 {
    raw + TAU * ((prev - raw) / TAU).round()
}

/// Sequential unwrap: correct each element by multiples of 2 pi so that
/// consecutive differences stay within pi. Valid only when the underlying
/// continuous sequence changes by less than pi between samples.
pub fn unwrap_in_place(seq: &mut [f64]) {
    for i in 1..seq.len() {
        seq[i] = unwrap_step(seq[i - 1], seq[i]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_reduces_to_principal_range() {
        assert!((wrap(3.0 * PI + 0.1) - (PI + 0.1 - TAU)).abs() < 1e-15);
        assert_eq!(wrap(0.25), 0.25);
        assert!(wrap(-7.0 * PI).abs() <= PI + 1e-12);
        assert!((wrap(-7.0 * PI).abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn unwrap_recovers_a_steep_ramp() {
        let n = 200;
        let truth: Vec<f64> = (0..n).map(|i| 0.8 * i as f64).collect();
        let mut wrapped: Vec<f64> = truth.iter().map(|&p| wrap(p)).collect();
        unwrap_in_place(&mut wrapped);
        for (u, t) in wrapped.iter().zip(&truth) {
            assert!((u - t).abs() < 1e-12);
        }
    }
}
