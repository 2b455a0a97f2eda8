//! Limit objects: the Gaussian density with covariance `M/3`, its
//! characteristic function with the centre-of-mass drift, and symmetric
//! alpha-stable densities by Fourier inversion.

use crate::error::{Error, Result};
use crate::increments::Moments;
use crate::quad::{integrate_breaks, QuadConfig};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use std::io::Write;

/// Gaussian density `exp(-3/2 x^T M^{-1} x) / ((2 pi)^{d/2} sqrt(det(M/3)))`.
#[derive(Debug, Clone)]
pub struct GaussianLimit {
    mu: DVector<f64>,
    m: DMatrix<f64>,
    m_inv: DMatrix<f64>,
    det_m3: f64,
    norm: f64,
}

impl GaussianLimit {
    pub fn new(mu: DVector<f64>, m: DMatrix<f64>) -> Result<Self> {
        let d = mu.len();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::BadParameter("covariance shape differs from the mean".into()));
        }
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Degenerate("covariance is not positive definite".into()))?;
        let m_inv = chol.inverse();
        let det_m3 = chol.determinant() / 3f64.powi(d as i32);
        if !(det_m3 > 0.0) {
            return Err(Error::Degenerate("covariance is not positive definite".into()));
        }
        let norm = 1.0 / ((2.0 * PI).powf(d as f64 / 2.0) * det_m3.sqrt());
        Ok(Self {
            mu,
            m,
            m_inv,
            det_m3,
            norm,
        })
    }

    pub fn from_moments(m: &Moments) -> Result<Self> {
        if !m.positive_definite {
            return Err(Error::Degenerate("covariance is not positive definite".into()));
        }
        Self::new(m.mu.clone(), m.m.clone())
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.m_inv
    }

    pub fn det_m3(&self) -> f64 {
        self.det_m3
    }

    /// Density at `x` (no drift shift applied).
    pub fn density(&self, x: &[f64]) -> f64 {
        self.norm * (-1.5 * self.quadratic(x)).exp()
    }

    /// `x^T M^{-1} x`
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += x[i] * self.m_inv[(i, j)] * x[j];
            }
        }
        q
    }

    /// Density at `x - (n+1)/(2 sqrt n) mu`.
    pub fn density_shifted(&self, n: u64, x: &[f64]) -> f64 {
        let y = self.shifted(n, x);
        self.density(&y)
    }

    /// `x - (n+1)/(2 sqrt n) mu`
    pub fn shifted(&self, n: u64, x: &[f64]) -> Vec<f64> {
        let s = drift_scale(n);
        x.iter().zip(self.mu.iter()).map(|(a, m)| a - s * m).collect()
    }

    /// `exp(i (n+1) t.mu / (2 sqrt n) - t^T M t / 6)`
    pub fn f_n(&self, n: u64, t: &[f64]) -> Complex64 {
        let d = self.dim();
        let drift: f64 = t.iter().zip(self.mu.iter()).map(|(a, m)| a * m).sum::<f64>() * drift_scale(n);
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += t[i] * self.m[(i, j)] * t[j];
            }
        }
        Complex64::from_polar((-q / 6.0).exp(), drift)
    }
}

fn drift_scale(n: u64) -> f64 {
    (n as f64 + 1.0) / (2.0 * (n as f64).sqrt())
}

/// Which representation produced a stable density value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StableRoute {
    /// `(1/pi) int_0^T cos(tx) exp(-c t^alpha) dt`
    Fourier,
    /// Integral along the negative imaginary axis, free of oscillation.
    Rotated,
}

#[derive(Debug, Clone, Copy)]
pub struct StableValue {
    pub value: f64,
    pub error: f64,
    pub route: StableRoute,
}

/// Symmetric alpha-stable law with characteristic function `exp(-c |t|^alpha)`, `alpha` in (0, 1).
#[derive(Debug, Clone)]
pub struct StableLimit {
    alpha: f64,
    c: f64,
    tolerance: f64,
    max_panels: usize,
    /// Truncation point of the Fourier integral.
    cutoff: f64,
}

/// Truncation error budget for the Fourier integral.
const TAIL_BUDGET: f64 = 1e-13;
/// Above this value of `|x| T` the rotated contour is used.
const OSCILLATION_LIMIT: f64 = 100.0;

impl StableLimit {
    pub fn new(alpha: f64, c: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::BadParameter(format!("alpha = {alpha} outside (0, 1)")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::BadParameter(format!("scale c = {c} must be positive")));
        }
        let cutoff = fourier_cutoff(alpha, c);
        Ok(Self {
            alpha,
            c,
            tolerance: 1e-10,
            max_panels: 200_000,
            cutoff,
        })
    }

    /// Accuracy target (absolute, or 1e-9 relative when larger) and panel budget.
    pub fn with_accuracy(mut self, tolerance: f64, max_panels: usize) -> Self {
        self.tolerance = tolerance;
        self.max_panels = max_panels;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// `g(0) = Gamma(1 + 1/alpha) / (pi c^{1/alpha})`.
    pub fn density_at_zero_exact(&self) -> f64 {
        gamma(1.0 + 1.0 / self.alpha) / (PI * self.c.powf(1.0 / self.alpha))
    }

    /// Density `g(x)`.
    pub fn density(&self, x: f64) -> Result<f64> {
        Ok(self.evaluate(x)?.value)
    }

    pub fn evaluate(&self, x: f64) -> Result<StableValue> {
        let x = x.abs();
        if x == 0.0 || x * self.cutoff <= OSCILLATION_LIMIT {
            self.fourier(x)
        } else {
            self.rotated(x)
        }
    }

    /// Fourier route regardless of `x`.
    pub fn fourier(&self, x: f64) -> Result<StableValue> {
        let (alpha, c, t_max) = (self.alpha, self.c, self.cutoff);
        let x = x.abs();
        let mut breaks = geometric_breaks(t_max, 1e-8 * c.powf(-1.0 / alpha));
        if x > 0.0 {
            let half_period = PI / x;
            let count = (t_max / half_period).floor() as usize;
            if count + breaks.len() > self.max_panels {
                return Err(Error::QuadratureBudget {
                    tolerance: self.tolerance,
                    estimate: f64::INFINITY,
                    panels: self.max_panels,
                });
            }
            breaks.extend((1..=count).map(|k| k as f64 * half_period));
            breaks.sort_by(|a, b| a.total_cmp(b));
            breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * t_max);
        }
        let cfg = QuadConfig::new(0.1 * self.tolerance * PI, 1e-13, self.max_panels.max(2 * breaks.len()));
        let est = integrate_breaks(|t: f64| (t * x).cos() * (-c * t.powf(alpha)).exp(), &breaks, &cfg);
        let truncation = fourier_tail_bound(alpha, c, t_max);
        self.finish(est.value / PI, est.error / PI + truncation, est.panels, StableRoute::Fourier)
    }

    /// `g(x) = (1/(pi x)) int_0^inf e^{-v} exp(-c' v^alpha cos(pi alpha/2)) sin(c' v^alpha sin(pi alpha/2)) dv`
    /// with `c' = c x^{-alpha}`, for `x > 0`.
    pub fn rotated(&self, x: f64) -> Result<StableValue> {
        let alpha = self.alpha;
        let x = x.abs();
        assert!(x > 0.0, "rotated contour needs x != 0");
        let scale = self.c * x.powf(-alpha);
        let (s, co) = (0.5 * PI * alpha).sin_cos();
        let (damp, freq) = (scale * co, scale * s);
        let v_max = 45.0;
        let knee = scale.powf(-1.0 / alpha).min(v_max);
        let mut breaks = geometric_breaks(v_max, 1e-14 * knee.min(1.0));
        breaks.push(knee);
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * v_max);
        let cfg = QuadConfig::new(0.1 * self.tolerance * PI * x, 1e-13, self.max_panels);
        let est = integrate_breaks(
            |v: f64| {
                let p = v.powf(alpha);
                (-v - damp * p).exp() * (freq * p).sin()
            },
            &breaks,
            &cfg,
        );
        let norm = 1.0 / (PI * x);
        let truncation = (-v_max).exp() * norm;
        self.finish(est.value * norm, est.error * norm + truncation, est.panels, StableRoute::Rotated)
    }

    fn finish(&self, value: f64, error: f64, panels: usize, route: StableRoute) -> Result<StableValue> {
        if error > self.tolerance.max(1e-9 * value.abs()) {
            return Err(Error::QuadratureBudget {
                tolerance: self.tolerance,
                estimate: error,
                panels,
            });
        }
        Ok(StableValue { value, error, route })
    }

    /// `(alpha+1)^{1/alpha}`
    pub fn slclt_scale(&self) -> f64 {
        (self.alpha + 1.0).powf(1.0 / self.alpha)
    }

    /// `(alpha+1)^{1/alpha} g((alpha+1)^{1/alpha} x)` through the density of this law.
    pub fn slclt_target(&self, x: f64) -> Result<f64> {
        let s = self.slclt_scale();
        Ok(s * self.density(s * x)?)
    }

    /// The same target as the inverse Fourier transform of `exp(-c|t|^alpha/(alpha+1))`.
    pub fn slclt_target_direct(&self, x: f64) -> Result<f64> {
        let inner = StableLimit::new(self.alpha, self.c / (self.alpha + 1.0))?
            .with_accuracy(self.tolerance, self.max_panels.max(1_000_000));
        Ok(inner.fourier(x)?.value)
    }

    /// `P(X > x)` for `x > 0` from the convergent series
    /// `(1/pi) sum_k (-1)^{k+1} Gamma(alpha k) / k! sin(k pi alpha/2) c^k x^{-alpha k}`.
    pub fn upper_tail(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::BadParameter("tail series needs x > 0".into()));
        }
        let z = self.c * x.powf(-self.alpha);
        let mut total = 0.0;
        let mut log_fact = 0.0;
        for k in 1..400 {
            let kf = k as f64;
            log_fact += kf.ln();
            let log_mag = statrs::function::gamma::ln_gamma(self.alpha * kf) - log_fact + kf * z.ln();
            let term = log_mag.exp() * (0.5 * PI * self.alpha * kf).sin();
            total += if k % 2 == 1 { term } else { -term };
            if log_mag < -40.0 && k > 5 {
                return Ok(total / PI);
            }
        }
        Err(Error::QuadratureBudget {
            tolerance: 1e-16,
            estimate: f64::NAN,
            panels: 400,
        })
    }

    /// `int_{-x}^{x} g` by quadrature of the density.
    pub fn mass_within(&self, x: f64) -> Result<f64> {
        let mut breaks = geometric_breaks(x, 1e-6 * x.min(1.0));
        breaks.dedup();
        let failure = std::cell::RefCell::new(None);
        let cfg = QuadConfig::new(1e-9, 1e-10, 4000);
        let est = integrate_breaks(
            |y: f64| match self.density(y) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e.to_string());
                    0.0
                }
            },
            &breaks,
            &cfg,
        );
        if let Some(msg) = failure.into_inner() {
            return Err(Error::Unsupported(msg));
        }
        Ok(2.0 * est.value)
    }

    /// `int_R g`: quadrature on `[-x, x]` plus the analytic tails.
    pub fn total_mass(&self, x: f64) -> Result<f64> {
        Ok(self.mass_within(x)? + 2.0 * self.upper_tail(x)?)
    }

    /// Writes `x,value` rows for a grid of points.
    pub fn write_table<W: Write>(&self, xs: &[f64], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "value"])?;
        for &x in xs {
            w.write_record([format!("{x}"), format!("{:.17e}", self.density(x)?)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Bound on `(1/pi) int_T^inf exp(-c t^alpha) dt`.
fn fourier_tail_bound(alpha: f64, c: f64, t: f64) -> f64 {
    (-c * t.powf(alpha)).exp() * t.powf(1.0 - alpha) / (PI * c * alpha)
}

fn fourier_cutoff(alpha: f64, c: f64) -> f64 {
    let mut u = 1.0;
    loop {
        let t = (u / c).powf(1.0 / alpha);
        if fourier_tail_bound(alpha, c, t) < TAIL_BUDGET || u > 2000.0 {
            return t;
        }
        u += 0.5;
    }
}

/// `0, lo, 2 lo, 4 lo, ..., hi` (geometric up to `hi`).
fn geometric_breaks(hi: f64, lo: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut t = hi;
    let mut rev = Vec::new();
    while t > lo {
        rev.push(t);
        t *= 0.5;
    }
    rev.reverse();
    out.extend(rev);
    if out.len() == 1 {
        out.push(hi);
    }
    out
}
