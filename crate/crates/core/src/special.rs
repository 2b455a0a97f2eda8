//! Special functions needed by the power-tail laws: the Riemann zeta function
//! on the real line, Hurwitz-type tail sums, and the real part of the
//! polylogarithm on the unit circle.

use statrs::function::gamma::gamma;
use std::f64::consts::PI;

// B_2, B_4, ..., B_20
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Euler–Maclaurin estimate of `sum_{k >= n} k^{-s}` for real `s != 1` and `n >= 1`.
///
/// Accurate to roughly machine precision once `n >= 16` and `|s| <= 20`.
fn euler_maclaurin_tail(s: f64, n: f64) -> f64 {
    let mut total = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let mut rising = s; // (s)_{2j-1}
    let mut factorial = 2.0; // (2j)!
    let mut power = n.powf(-s - 1.0); // n^{-s-2j+1}
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / factorial * rising * power;
        total += term;
        if term.abs() < 1e-18 * total.abs() {
            break;
        }
        let k = 2.0 * (j as f64 + 1.0);
        rising *= (s + k - 1.0) * (s + k);
        factorial *= (k + 1.0) * (k + 2.0);
        power /= n * n;
    }
    total
}

/// `sum_{k >= start} k^{-s}` for `s > 1` and integer `start >= 1`.
pub fn power_tail_sum(s: f64, start: u64) -> f64 {
    debug_assert!(s > 1.0 && start >= 1);
    const CUT: u64 = 24;
    if start >= CUT {
        return euler_maclaurin_tail(s, start as f64);
    }
    let head: f64 = (start..CUT).rev().map(|k| (k as f64).powf(-s)).sum();
    head + euler_maclaurin_tail(s, CUT as f64)
}

/// Riemann zeta function for real `s != 1`.
pub fn zeta(s: f64) -> f64 {
    if s == 1.0 {
        return f64::INFINITY;
    }
    if s == 0.0 {
        return -0.5;
    }
    if s >= 0.5 {
        const N: u64 = 24;
        let head: f64 = (1..N).rev().map(|k| (k as f64).powf(-s)).sum();
        head + euler_maclaurin_tail(s, N as f64)
    } else {
        // reflection: zeta(s) = 2^s pi^(s-1) sin(pi s / 2) Gamma(1-s) zeta(1-s)
        let t = 1.0 - s;
        2f64.powf(s) * PI.powf(s - 1.0) * (PI * s / 2.0).sin() * gamma(t) * zeta(t)
    }
}

/// Expansion of `Re Li_{1+alpha}(e^{i theta})` around `theta = 0`,
/// valid for `0 <= theta <= pi` and `alpha` in (0, 1):
///
/// `Gamma(-alpha) cos(pi alpha / 2) theta^alpha + sum_m zeta(1 + alpha - 2m) (-1)^m theta^{2m} / (2m)!`.
#[derive(Debug, Clone)]
pub struct CirclePolylog {
    alpha: f64,
    singular: f64,
    coeffs: Vec<f64>,
}

impl CirclePolylog {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha < 1.0);
        let singular = -gamma(1.0 - alpha) / alpha * (PI * alpha / 2.0).cos();
        let mut coeffs = Vec::with_capacity(40);
        let mut factorial = 1.0;
        for m in 0..40 {
            if m > 0 {
                factorial *= (2 * m - 1) as f64 * (2 * m) as f64;
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let c = sign * zeta(1.0 + alpha - 2.0 * m as f64) / factorial;
            coeffs.push(c);
            // terms shrink like (theta / 2 pi)^{2m}; at theta = pi that is 4^{-m}
            if m > 4 && c.abs() * PI.powi(2 * m as i32) < 1e-19 {
                break;
            }
        }
        Self {
            alpha,
            singular,
            coeffs,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `zeta(1 + alpha)`, the value at `theta = 0`.
    pub fn at_zero(&self) -> f64 {
        self.coeffs[0]
    }

    /// `zeta(1+alpha) - Re Li_{1+alpha}(e^{i theta})`, evaluated without cancellation near zero.
    pub fn deficit(&self, theta: f64) -> f64 {
        let theta = reduce_angle(theta);
        let x2 = theta * theta;
        let mut poly = 0.0;
        for c in self.coeffs[1..].iter().rev() {
            poly = poly * x2 + c;
        }
        -(self.singular * theta.powf(self.alpha) + poly * x2)
    }

    /// `Re Li_{1+alpha}(e^{i theta})` for any real `theta`.
    pub fn re(&self, theta: f64) -> f64 {
        self.at_zero() - self.deficit(theta)
    }

    /// Coefficient of `|theta|^alpha` in the deficit, i.e. `Gamma(1-alpha) cos(pi alpha/2) / alpha`.
    pub fn singular_coefficient(&self) -> f64 {
        -self.singular
    }
}

/// Maps `theta` to `[0, pi]` using evenness and `2 pi` periodicity.
pub fn reduce_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = theta.abs().rem_euclid(two_pi);
    if r > PI {
        two_pi - r
    } else {
        r
    }
}
