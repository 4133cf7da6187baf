//! Exponential integral and Gaussian tail.

use libm::erfc;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `e^x E1(x)` for `x > 0`.
///
/// Power series below 1, modified Lentz continued fraction from 1 upward.
/// The scaled form stays finite for large `x`, where `E1` underflows.
pub fn exp_e1_scaled(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs a positive argument, got {x}");
    if x < 1.0 {
        x.exp() * e1_series(x)
    } else {
        e1_scaled_cf(x)
    }
}

/// Exponential integral `E1(x) = int_x^inf e^-t / t dt` for `x > 0`.
#[cfg(test)]
pub fn e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs a positive argument, got {x}");
    if x < 1.0 {
        e1_series(x)
    } else {
        (-x).exp() * e1_scaled_cf(x)
    }
}

fn e1_series(x: f64) -> f64 {
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

fn e1_scaled_cf(x: f64) -> f64 {
    // e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `int_0^inf f(x) dx` by double-exponential quadrature after the map
/// `x = scale t / (1 - t)`; `scale` should sit near the bulk of `f`.
pub fn integrate_half_line(f: impl Fn(f64) -> f64, scale: f64, abs_tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - t;
        let x = scale * t / u;
        let v = f(x) * scale / (u * u);
        if v.is_finite() { v } else { 0.0 }
    };
    quadrature::double_exponential::integrate(g, 0.0, 1.0, abs_tol).integral
}

/// Gaussian tail `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e1_reference_values() {
        // Abramowitz & Stegun table 5.1
        assert!((e1(0.5) - 0.559_773_594_776_160_8).abs() < 1e-13);
        assert!((e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-13);
        assert!((e1(2.0) - 0.048_900_510_708_061_1).abs() < 1e-13);
        assert!((e1(0.01) - 4.037_929_576_538_11).abs() < 1e-12);
    }

    #[test]
    fn branches_meet_at_one() {
        let below = (1.0f64 - 1e-12).exp() * e1_series(1.0 - 1e-12);
        let above = e1_scaled_cf(1.0);
        assert!((below - above).abs() < 1e-10);
    }

    #[test]
    fn scaled_form_large_argument() {
        // e^x E1(x) ~ 1/x (1 - 1/x + 2/x^2)
        let x = 1e4;
        let approx = (1.0 - 1.0 / x + 2.0 / (x * x)) / x;
        assert!((exp_e1_scaled(x) - approx).abs() < 1e-15);
    }

    #[test]
    fn half_line_quadrature_of_exponential() {
        let v = integrate_half_line(|x| (-x / 7.0).exp() / 7.0, 7.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn q_of_zero_is_half() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        let q1 = q_function(1.0);
        assert!((q1 - 0.158_655_253_931_457_05).abs() < 1e-12, "{q1}");
    }
}
