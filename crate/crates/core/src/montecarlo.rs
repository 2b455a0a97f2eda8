//! Trajectory simulation of the centre of mass `G_n = (1/n) sum_{i<=n} S_i`
//! and the statistical checks built on it.
//!
//! Run `r` draws from stream `r` of the family keyed by the base seed, so
//! results do not depend on the number of worker threads.

use crate::error::{Error, Result};
use crate::increments::LatticeLaw;
use crate::lattice::{verify_support, LatticeBasis};
use crate::limits::StableLimit;
use crate::quad::gk15;
use crate::rng::RandomStream;
use crate::stats::{
    chi_square_cdf, ks_one_sample, ks_two_sample, ks_two_sample_critical, median, normal_cdf, quantile,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Key separating sample-batch streams from per-run streams.
const SALT_BATCH: u64 = 0x6261_7463_6865_7321;
/// Samples per independent stream in batch samplers.
const BATCH: usize = 1 << 14;

/// Ball `||G_n|| < factor * n^exponent`, watched from step `after` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub factor: f64,
    pub exponent: f64,
    pub after: u64,
}

impl Default for Ball {
    fn default() -> Self {
        Self {
            factor: 0.25,
            exponent: 0.4,
            after: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_steps: u64,
    /// Strictly increasing, last entry at most `n_steps`.
    pub checkpoints: Vec<u64>,
    pub n_runs: usize,
    pub base_seed: u64,
    /// Proximity statistics and sign changes use steps `n >= burn_in`.
    pub burn_in: u64,
    /// Points `x` for `min ||G_n - x||`.
    pub targets: Vec<Vec<f64>>,
    /// Window exponent for the deviation check (`a_k = ceil(k^beta)`).
    pub beta: Option<f64>,
    pub ball: Option<Ball>,
    /// Record `min ||G_n||` over dyadic windows `[2^k, 2^{k+1})`.
    pub dyadic: bool,
}

impl SimConfig {
    /// Checkpoints at powers of two and at `n_steps`, burn-in `min(1000, n_steps)`.
    pub fn new(n_steps: u64, n_runs: usize, base_seed: u64) -> Self {
        Self {
            n_steps,
            checkpoints: geometric_checkpoints(n_steps),
            n_runs,
            base_seed,
            burn_in: 1000.min(n_steps),
            targets: Vec::new(),
            beta: None,
            ball: None,
            dyadic: false,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n_steps == 0 || self.n_runs == 0 {
            return Err(Error::BadParameter("need at least one step and one run".into()));
        }
        if self.checkpoints.iter().any(|&c| c == 0) || self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadParameter("checkpoints must be positive and strictly increasing".into()));
        }
        if self.checkpoints.last().is_some_and(|&c| c > self.n_steps) {
            return Err(Error::BadParameter("last checkpoint exceeds the number of steps".into()));
        }
        if self.burn_in > self.n_steps {
            return Err(Error::BadParameter("burn-in exceeds the number of steps".into()));
        }
        if self.targets.iter().any(|t| t.len() != dim) {
            return Err(Error::BadParameter("target dimension differs from the law".into()));
        }
        if self.beta.is_some_and(|b| !(b > 1.0)) {
            return Err(Error::BadParameter("window exponent beta must exceed 1".into()));
        }
        Ok(())
    }
}

/// `1, 2, 4, ..., n` (with `n` appended when it is not a power of two).
pub fn geometric_checkpoints(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut c = 1u64;
    while c < n {
        out.push(c);
        c = c.saturating_mul(2);
    }
    if n > 0 {
        out.push(n);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub g: Vec<f64>,
    pub norm: f64,
    /// `log ||G_n|| / log n` (undefined at `n = 1`, `-inf` when `G_n = 0`).
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDeviation {
    pub k: u64,
    pub start: u64,
    pub end: u64,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkStats {
    pub run: usize,
    pub checkpoints: Vec<Checkpoint>,
    /// Sign changes of `G_n` for `n >= burn_in` (one-dimensional laws).
    pub sign_changes: Option<u64>,
    /// `min ||G_n - x||` over `n >= burn_in`, one entry per target.
    pub target_minima: Vec<f64>,
    pub windows: Vec<WindowDeviation>,
    /// `(k, min ||G_n||)` over `n` in `[2^k, 2^{k+1}) ∩ [1, n_steps]`.
    pub dyadic_minima: Vec<(u32, f64)>,
    /// Steps `n >= after` with `G_n` inside the ball.
    pub ball_visits: Option<u64>,
    /// `Z_n = S_n - G_n` at the last step.
    pub z_final: Vec<f64>,
    /// Largest relative gap between the running update of `G_n` and `(1/n) sum S_i` at checkpoints.
    pub identity_residual: f64,
}

/// Runs `cfg.n_runs` independent trajectories in parallel.
pub fn simulate(law: &LatticeLaw, cfg: &SimConfig) -> Result<Vec<WalkStats>> {
    cfg.validate(law.dim())?;
    law.sampler();
    Ok((0..cfg.n_runs).into_par_iter().map(|r| run_one(law, cfg, r)).collect())
}

fn window_starts(beta: f64, n_steps: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    let mut k = 1u64;
    loop {
        let a = (k as f64).powf(beta).ceil() as u64;
        if a > n_steps {
            break;
        }
        if out.last() != Some(&a) {
            out.push(a);
        }
        k += 1;
    }
    out
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn run_one(law: &LatticeLaw, cfg: &SimConfig, run: usize) -> WalkStats {
    let d = law.dim();
    let sampler = law.sampler();
    let mut rng = RandomStream::new(cfg.base_seed, run as u64);
    let mut x = vec![0.0; d];
    let mut s = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut sum_s = vec![0.0; d];

    let mut checkpoints = Vec::with_capacity(cfg.checkpoints.len());
    let mut next_cp = 0usize;
    let mut identity_residual = 0.0f64;

    let track_sign = d == 1;
    let mut sign_changes = 0u64;
    let mut last_sign = 0i8;

    let mut target_minima = vec![f64::INFINITY; cfg.targets.len()];

    let starts = cfg.beta.map(|b| window_starts(b, cfg.n_steps)).unwrap_or_default();
    let mut windows = Vec::new();
    let mut win = 0usize; // index of the window whose start has been reached
    let mut anchor = vec![0.0; d];
    let mut max_dev = 0.0f64;

    let mut dyadic: Vec<(u32, f64)> = Vec::new();
    let mut ball_visits = cfg.ball.map(|_| 0u64);

    for n in 1..=cfg.n_steps {
        sampler.draw(&mut rng, &mut x);
        let inv = 1.0 / n as f64;
        for i in 0..d {
            s[i] += x[i];
            sum_s[i] += s[i];
            g[i] += (s[i] - g[i]) * inv;
        }
        let gn = norm(&g);

        if n >= cfg.burn_in {
            if track_sign {
                let sign = if g[0] > 0.0 {
                    1
                } else if g[0] < 0.0 {
                    -1
                } else {
                    0
                };
                if sign != 0 {
                    if last_sign != 0 && sign != last_sign {
                        sign_changes += 1;
                    }
                    last_sign = sign;
                }
            }
            for (m, t) in target_minima.iter_mut().zip(&cfg.targets) {
                *m = m.min(distance(&g, t));
            }
        }

        if !starts.is_empty() {
            if win < starts.len() && n == starts[win] {
                if win > 0 {
                    max_dev = max_dev.max(distance(&g, &anchor));
                    windows.push(WindowDeviation {
                        k: win as u64,
                        start: starts[win - 1],
                        end: n,
                        max_deviation: max_dev,
                    });
                }
                anchor.copy_from_slice(&g);
                max_dev = 0.0;
                win += 1;
            } else if win > 0 && win < starts.len() {
                max_dev = max_dev.max(distance(&g, &anchor));
            }
        }

        if cfg.dyadic {
            let k = 63 - n.leading_zeros();
            match dyadic.last_mut() {
                Some(last) if last.0 == k => last.1 = last.1.min(gn),
                _ => dyadic.push((k, gn)),
            }
        }

        if let (Some(ball), Some(visits)) = (cfg.ball, ball_visits.as_mut()) {
            if n >= ball.after && gn < ball.factor * (n as f64).powf(ball.exponent) {
                *visits += 1;
            }
        }

        if next_cp < cfg.checkpoints.len() && n == cfg.checkpoints[next_cp] {
            let direct: Vec<f64> = sum_s.iter().map(|v| v * inv).collect();
            let gap = distance(&g, &direct) / norm(&direct).max(1.0);
            identity_residual = identity_residual.max(gap);
            checkpoints.push(Checkpoint {
                n,
                g: g.clone(),
                norm: gn,
                exponent: gn.ln() / (n as f64).ln(),
            });
            next_cp += 1;
        }
    }

    WalkStats {
        run,
        checkpoints,
        sign_changes: track_sign.then_some(sign_changes),
        target_minima,
        windows,
        dyadic_minima: dyadic,
        ball_visits,
        z_final: s.iter().zip(&g).map(|(a, b)| a - b).collect(),
        identity_residual,
    }
}

/// `(run, n, G_1, ..., G_d)` rows at every checkpoint.
pub fn write_trajectory_csv<W: Write>(stats: &[WalkStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = stats.first().and_then(|s| s.checkpoints.first()).map_or(0, |c| c.g.len());
    let mut header = vec!["run".to_string(), "n".to_string()];
    header.extend((1..=d).map(|i| format!("G_{i}")));
    w.write_record(&header)?;
    for s in stats {
        for c in &s.checkpoints {
            let mut row = vec![s.run.to_string(), c.n.to_string()];
            row.extend(c.g.iter().map(|v| format!("{v:.17e}")));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn final_checkpoint(s: &WalkStats) -> &Checkpoint {
    s.checkpoints.last().expect("at least one checkpoint")
}

fn with_final_checkpoint(cfg: &SimConfig) -> SimConfig {
    let mut cfg = cfg.clone();
    if cfg.checkpoints.last() != Some(&cfg.n_steps) {
        cfg.checkpoints.retain(|&c| c < cfg.n_steps);
        cfg.checkpoints.push(cfg.n_steps);
    }
    cfg
}

#[derive(Debug, Clone, Serialize)]
pub struct LlnReport {
    pub n: u64,
    pub runs: usize,
    /// `max_r ||G_n / n - mu / 2||`
    pub max_deviation: f64,
    /// Mean over runs of `G_n / n`.
    pub mean_ratio: Vec<f64>,
}

pub fn lln_check(law: &LatticeLaw, cfg: &SimConfig) -> Result<LlnReport> {
    let mu = law.moments()?.mu;
    let cfg = with_final_checkpoint(cfg);
    let stats = simulate(law, &cfg)?;
    let n = cfg.n_steps as f64;
    let d = law.dim();
    let mut max_deviation = 0.0f64;
    let mut mean_ratio = vec![0.0; d];
    for s in &stats {
        let c = final_checkpoint(s);
        let ratio: Vec<f64> = c.g.iter().map(|v| v / n).collect();
        let half: Vec<f64> = mu.iter().map(|m| m / 2.0).collect();
        max_deviation = max_deviation.max(distance(&ratio, &half));
        for i in 0..d {
            mean_ratio[i] += ratio[i] / stats.len() as f64;
        }
    }
    Ok(LlnReport {
        n: cfg.n_steps,
        runs: stats.len(),
        max_deviation,
        mean_ratio,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub n: u64,
    pub runs: usize,
    /// Sample covariance of `n^{-1/2}(G_n - (n+1) mu / 2)`.
    pub sample_covariance: Vec<Vec<f64>>,
    /// Limit covariance `M/3`.
    pub limit_covariance: Vec<Vec<f64>>,
    /// Exact covariance at this `n`: `M (n+1)(2n+1) / (6 n^2)`.
    pub exact_covariance: Vec<Vec<f64>>,
    /// KS distance to `Normal(0, M/3)` in one dimension, or of the squared
    /// Mahalanobis distances to chi-square(d) otherwise.
    pub ks_distance: f64,
    /// One-sample KS critical value at the 1% level.
    pub ks_critical_1pct: f64,
}

/// Minimum number of runs accepted by [`clt_check`].
pub const CLT_MIN_RUNS: usize = 1000;

pub fn clt_check(law: &LatticeLaw, cfg: &SimConfig) -> Result<CltReport> {
    let moments = law.moments()?;
    if !moments.positive_definite {
        return Err(Error::Degenerate("covariance is not positive definite".into()));
    }
    if cfg.n_runs < CLT_MIN_RUNS {
        return Err(Error::TooFewRuns {
            runs: cfg.n_runs,
            required: CLT_MIN_RUNS,
        });
    }
    let cfg = with_final_checkpoint(cfg);
    let stats = simulate(law, &cfg)?;
    let d = law.dim();
    let n = cfg.n_steps as f64;
    let centre = (n + 1.0) / 2.0;
    let samples: Vec<DVector<f64>> = stats
        .iter()
        .map(|s| {
            let c = final_checkpoint(s);
            DVector::from_iterator(d, (0..d).map(|i| (c.g[i] - centre * moments.mu[i]) / n.sqrt()))
        })
        .collect();
    let runs = samples.len();
    let mut cov = DMatrix::zeros(d, d);
    let mean = samples.iter().fold(DVector::zeros(d), |acc, v| acc + v) / runs as f64;
    for v in &samples {
        let c = v - &mean;
        cov += &c * c.transpose();
    }
    cov /= (runs - 1) as f64;
    let limit = &moments.m / 3.0;
    let exact = &moments.m * ((n + 1.0) * (2.0 * n + 1.0) / (6.0 * n * n));
    let ks_distance = if d == 1 {
        let mut v: Vec<f64> = samples.iter().map(|s| s[0]).collect();
        ks_one_sample(&mut v, normal_cdf(0.0, limit[(0, 0)].sqrt()))
    } else {
        let prec = limit.clone().try_inverse().expect("positive definite");
        let mut q: Vec<f64> = samples.iter().map(|s| (s.transpose() * &prec * s)[(0, 0)]).collect();
        ks_one_sample(&mut q, chi_square_cdf(d as f64))
    };
    let rows = |m: &DMatrix<f64>| (0..d).map(|i| (0..d).map(|j| m[(i, j)]).collect()).collect();
    Ok(CltReport {
        n: cfg.n_steps,
        runs,
        sample_covariance: rows(&cov),
        limit_covariance: rows(&limit),
        exact_covariance: rows(&exact),
        ks_distance,
        ks_critical_1pct: 1.628 / (runs as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub runs: usize,
    pub n_steps: u64,
    pub burn_in: u64,
    pub sign_changes: Vec<u64>,
    pub runs_with_sign_change: usize,
    pub targets: Vec<f64>,
    /// `min |G_n - x|` per target, per run.
    pub minima: Vec<Vec<f64>>,
    pub median_minima: Vec<f64>,
    /// Fraction of runs with `min |G_n - x| < threshold`, per target.
    pub fraction_close: Vec<f64>,
    pub threshold: f64,
}

/// Sign changes and proximity to each target (default targets `0, 1, -1`).
pub fn recurrence_stats(law: &LatticeLaw, cfg: &SimConfig) -> Result<RecurrenceReport> {
    if law.dim() != 1 {
        return Err(Error::BadParameter("recurrence statistics need d = 1".into()));
    }
    let mut cfg = cfg.clone();
    if cfg.targets.is_empty() {
        cfg.targets = vec![vec![0.0], vec![1.0], vec![-1.0]];
    }
    let stats = simulate(law, &cfg)?;
    let threshold = 0.1;
    let sign_changes: Vec<u64> = stats.iter().map(|s| s.sign_changes.unwrap_or(0)).collect();
    let minima: Vec<Vec<f64>> = (0..cfg.targets.len())
        .map(|k| stats.iter().map(|s| s.target_minima[k]).collect())
        .collect();
    Ok(RecurrenceReport {
        runs: stats.len(),
        n_steps: cfg.n_steps,
        burn_in: cfg.burn_in,
        runs_with_sign_change: sign_changes.iter().filter(|&&c| c > 0).count(),
        sign_changes,
        targets: cfg.targets.iter().map(|t| t[0]).collect(),
        median_minima: minima.iter().map(|m| median(m)).collect(),
        fraction_close: minima
            .iter()
            .map(|m| m.iter().filter(|&&v| v < threshold).count() as f64 / m.len() as f64)
            .collect(),
        minima,
        threshold,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeRow {
    pub n: u64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeReport {
    pub runs: usize,
    pub rows: Vec<EscapeRow>,
    pub final_median: f64,
    pub ball: Ball,
    pub runs_reentering: usize,
    pub reentry_fraction: f64,
}

/// Per-checkpoint quantiles of `log ||G_n|| / log n` and returns to the ball
/// (default `||G_n|| < n^{0.4} / 4` after `n = 10^4`).
pub fn escape_exponent(law: &LatticeLaw, cfg: &SimConfig) -> Result<EscapeReport> {
    let mut cfg = with_final_checkpoint(cfg);
    cfg.checkpoints.retain(|&c| c > 1);
    let ball = *cfg.ball.get_or_insert_with(Ball::default);
    let stats = simulate(law, &cfg)?;
    let rows: Vec<EscapeRow> = cfg
        .checkpoints
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let e: Vec<f64> = stats.iter().map(|s| s.checkpoints[k].exponent).collect();
            EscapeRow {
                n,
                median: median(&e),
                q10: quantile(&e, 0.1),
                q90: quantile(&e, 0.9),
            }
        })
        .collect();
    let runs_reentering = stats.iter().filter(|s| s.ball_visits.unwrap_or(0) > 0).count();
    Ok(EscapeReport {
        runs: stats.len(),
        final_median: rows.last().map_or(f64::NAN, |r| r.median),
        rows,
        ball,
        runs_reentering,
        reentry_fraction: runs_reentering as f64 / stats.len() as f64,
    })
}

pub fn write_escape_csv<W: Write>(report: &EscapeReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "median", "q10", "q90"])?;
    for r in &report.rows {
        w.write_record([
            r.n.to_string(),
            format!("{:.17e}", r.median),
            format!("{:.17e}", r.q10),
            format!("{:.17e}", r.q90),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub beta: f64,
    pub epsilon: f64,
    pub k0: u64,
    /// Per run, fraction of windows `k >= k0` with deviation above `k^{beta/2 - 1 + epsilon}`.
    pub violation_fraction: Vec<f64>,
    pub runs_without_violation: usize,
    /// `(k, median over runs of the window deviation)`.
    pub median_deviation: Vec<(u64, f64)>,
}

/// Window deviations `max_{a_k <= m <= a_{k+1}} ||G_m - G_{a_k}||` against `k^{beta/2 - 1 + epsilon}`.
pub fn deviation_check(law: &LatticeLaw, cfg: &SimConfig, epsilon: f64, k0: u64) -> Result<DeviationReport> {
    let beta = cfg
        .beta
        .ok_or_else(|| Error::BadParameter("deviation check needs beta".into()))?;
    let stats = simulate(law, cfg)?;
    let bound = |k: u64| (k as f64).powf(beta / 2.0 - 1.0 + epsilon);
    let violation_fraction: Vec<f64> = stats
        .iter()
        .map(|s| {
            let tested: Vec<&WindowDeviation> = s.windows.iter().filter(|w| w.k >= k0).collect();
            if tested.is_empty() {
                return 0.0;
            }
            tested.iter().filter(|w| w.max_deviation > bound(w.k)).count() as f64 / tested.len() as f64
        })
        .collect();
    let windows = stats.first().map_or(0, |s| s.windows.len());
    let median_deviation = (0..windows)
        .map(|i| {
            let v: Vec<f64> = stats.iter().map(|s| s.windows[i].max_deviation).collect();
            (stats[0].windows[i].k, median(&v))
        })
        .collect();
    Ok(DeviationReport {
        beta,
        epsilon,
        k0,
        runs_without_violation: violation_fraction.iter().filter(|&&f| f == 0.0).count(),
        violation_fraction,
        median_deviation,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StableTransienceReport {
    pub runs: usize,
    /// `(k, median over runs of min |G_n| on [2^k, 2^{k+1}))`.
    pub median_window_minima: Vec<(u32, f64)>,
    pub sign_changes: Vec<u64>,
    pub runs_with_sign_change: usize,
}

/// Dyadic window minima of `|G_n|` and sign changes (counted from step 1).
pub fn stable_transience_stats(law: &LatticeLaw, cfg: &SimConfig) -> Result<StableTransienceReport> {
    if law.dim() != 1 || law.tail().is_none() {
        return Err(Error::BadParameter("stable transience statistics need a power-tail law on Z".into()));
    }
    let mut cfg = cfg.clone();
    cfg.dyadic = true;
    cfg.burn_in = 1;
    let stats = simulate(law, &cfg)?;
    let windows = stats[0].dyadic_minima.len();
    let median_window_minima = (0..windows)
        .map(|i| {
            let v: Vec<f64> = stats.iter().map(|s| s.dyadic_minima[i].1).collect();
            (stats[0].dyadic_minima[i].0, median(&v))
        })
        .collect();
    let sign_changes: Vec<u64> = stats.iter().map(|s| s.sign_changes.unwrap_or(0)).collect();
    Ok(StableTransienceReport {
        runs: stats.len(),
        median_window_minima,
        runs_with_sign_change: sign_changes.iter().filter(|&&c| c > 0).count(),
        sign_changes,
    })
}

/// `count` independent copies of `G_n = (1/n) sum_j j X_j` for a law on `Z`.
pub fn sample_gn_weighted(law: &LatticeLaw, n: u64, count: usize, seed: u64) -> Result<Vec<f64>> {
    batch_sample(law, count, seed, 1, |rng| weighted_sum(law, n, rng) / n as f64)
}

/// `count` copies of `G_n` from full trajectories.
pub fn sample_gn_trajectory(law: &LatticeLaw, n: u64, count: usize, seed: u64) -> Result<Vec<f64>> {
    batch_sample(law, count, seed, 2, |rng| trajectory(law, n, rng).1)
}

fn weighted_sum(law: &LatticeLaw, n: u64, rng: &mut RandomStream) -> f64 {
    let sampler = law.sampler();
    let mut acc = 0.0;
    for j in 1..=n {
        acc += j as f64 * sampler.draw_scalar(rng);
    }
    acc
}

/// `(S_n, G_n)` for a law on `Z`.
fn trajectory(law: &LatticeLaw, n: u64, rng: &mut RandomStream) -> (f64, f64) {
    let sampler = law.sampler();
    let mut s = 0.0;
    let mut g = 0.0;
    for k in 1..=n {
        s += sampler.draw_scalar(rng);
        g += (s - g) / k as f64;
    }
    (s, g)
}

/// Fills `count` values in fixed-size batches, batch `b` using stream `b` of
/// the family keyed by `(seed, tag)`.
fn batch_sample<F>(law: &LatticeLaw, count: usize, seed: u64, tag: u64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut RandomStream) -> f64 + Sync,
{
    if law.dim() != 1 {
        return Err(Error::BadParameter("batch samplers need d = 1".into()));
    }
    law.sampler();
    let mut out = vec![0.0; count];
    out.par_chunks_mut(BATCH).enumerate().for_each(|(b, chunk)| {
        let mut rng = RandomStream::with_salt(seed, SALT_BATCH ^ tag, b as u64);
        for v in chunk.iter_mut() {
            *v = f(&mut rng);
        }
    });
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ZnReport {
    pub n: u64,
    pub samples: usize,
    pub ks_distance: f64,
    pub critical_5pct: f64,
    pub critical_0_1pct: f64,
}

/// Compares `Z_{n+1} = S_{n+1} - G_{n+1}` with `(n/(n+1)) G_n` from independent batches.
pub fn zn_identity_check(law: &LatticeLaw, n: u64, samples: usize, seed: u64) -> Result<ZnReport> {
    if !law.is_finite() {
        return Err(Error::Unsupported("the identity check needs a finite-support law".into()));
    }
    if n == 0 || samples == 0 {
        return Err(Error::BadParameter("need n >= 1 and at least one sample".into()));
    }
    let mut z = batch_sample(law, samples, seed, 3, |rng| {
        let (s, g) = trajectory(law, n + 1, rng);
        s - g
    })?;
    let factor = n as f64 / (n as f64 + 1.0);
    let mut g = batch_sample(law, samples, seed, 4, |rng| factor * trajectory(law, n, rng).1)?;
    Ok(ZnReport {
        n,
        samples,
        ks_distance: ks_two_sample(&mut z, &mut g),
        critical_5pct: ks_two_sample_critical(1.358, samples, samples),
        critical_0_1pct: ks_two_sample_critical(1.949, samples, samples),
    })
}

/// Settings for [`mc_cell_frequencies`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CellSpec {
    pub n: u64,
    pub samples: u64,
    /// Half-width of the window in scaled units `x = G_n / n^{1/alpha}`.
    pub window: f64,
    /// Target cell width in scaled units; rounded to an odd number of lattice points.
    pub cell_width: f64,
    pub seed: u64,
    /// Cells with fewer hits are ignored.
    pub min_hits: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRow {
    /// Centre of the cell in scaled units.
    pub x: f64,
    pub hits: u64,
    /// `(n^{1+1/alpha}/h)` times the mean empirical mass per lattice point in the cell.
    pub empirical: f64,
    /// Mean of the limit density over the cell.
    pub target: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub n: u64,
    pub samples: u64,
    pub points_per_cell: u64,
    pub rows: Vec<CellRow>,
    /// Largest `|empirical - target|` over cells with at least `min_hits` hits.
    pub max_error: f64,
    /// Standard error of the cell attaining `max_error`.
    pub std_error_at_max: f64,
    pub x_at_max: f64,
    /// Largest `|empirical - target| / std_error` over the same cells.
    pub max_z: f64,
    /// Empirical mass inside the window.
    pub window_mass: f64,
    /// Largest `|p(x) - p(-x)|` in units of the joint standard error.
    pub symmetry_z: f64,
}

/// Empirical law of `G_n` for a power-tail law on `Z`, binned on the lattice
/// `(1/n) Z` in cells of consecutive points and compared with the stable local limit.
pub fn mc_cell_frequencies(law: &LatticeLaw, basis: &LatticeBasis, spec: &CellSpec) -> Result<CellReport> {
    let tail = law
        .tail()
        .ok_or_else(|| Error::BadParameter("cell frequencies need a power-tail law".into()))?;
    if !verify_support(law, basis) {
        return Err(Error::BadParameter("law is not supported on the given lattice".into()));
    }
    let h = basis.h();
    if spec.n == 0 || spec.samples == 0 || !(spec.window > 0.0) || !(spec.cell_width > 0.0) {
        return Err(Error::BadParameter("need n, samples, window and cell width positive".into()));
    }
    let alpha = tail.alpha();
    let c = law.stable_constant().expect("tail present");
    let limit = StableLimit::new(alpha, c)?;
    let n = spec.n;
    // x = k * spacing for the integer k = sum_j j X_j
    let scale = (n as f64).powf(1.0 + 1.0 / alpha);
    let spacing = 1.0 / scale;
    let mut m = (spec.cell_width * scale).round().max(1.0) as u64;
    if m % 2 == 0 {
        m += 1;
    }
    let half_m = (m as i64 - 1) / 2;
    let cells_half = ((spec.window * scale - half_m as f64) / m as f64).floor().max(0.0) as i64;
    let cells = (2 * cells_half + 1) as usize;
    let k_max = cells_half * m as i64 + half_m;

    law.sampler();
    let batches = spec.samples.div_ceil(BATCH as u64);
    let counts = (0..batches)
        .into_par_iter()
        .fold(
            || vec![0u64; cells],
            |mut acc, b| {
                let mut rng = RandomStream::with_salt(spec.seed, SALT_BATCH ^ 5, b);
                let todo = (spec.samples - b * BATCH as u64).min(BATCH as u64);
                for _ in 0..todo {
                    let k = weighted_sum(law, n, &mut rng);
                    if k.abs() <= k_max as f64 {
                        let idx = ((k as i64 + k_max) / m as i64) as usize;
                        acc[idx] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; cells],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let total = spec.samples as f64;
    let mut rows = Vec::with_capacity(cells);
    for (i, &hits) in counts.iter().enumerate() {
        let centre_k = (i as i64 - cells_half) * m as i64;
        let x = centre_k as f64 * spacing;
        let p = hits as f64 / total;
        let per_point = scale / h / m as f64;
        let target = if m == 1 {
            limit.slclt_target(x)?
        } else {
            let lo = x - (half_m as f64 + 0.5) * spacing;
            let hi = x + (half_m as f64 + 0.5) * spacing;
            cell_average(&limit, lo, hi)?
        };
        rows.push(CellRow {
            x,
            hits,
            empirical: per_point * p,
            target,
            std_error: per_point * (p * (1.0 - p) / total).sqrt(),
        });
    }
    let eligible: Vec<&CellRow> = rows.iter().filter(|r| r.hits >= spec.min_hits).collect();
    if eligible.is_empty() {
        return Err(Error::TooFewSamples {
            required: spec.min_hits,
        });
    }
    let worst = eligible
        .iter()
        .max_by(|a, b| (a.empirical - a.target).abs().total_cmp(&(b.empirical - b.target).abs()))
        .expect("non-empty");
    let max_z = eligible
        .iter()
        .map(|r| (r.empirical - r.target).abs() / r.std_error)
        .fold(0.0, f64::max);
    let mut symmetry_z = 0.0f64;
    for i in 0..cells / 2 {
        let (a, b) = (&rows[i], &rows[cells - 1 - i]);
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        if se > 0.0 {
            symmetry_z = symmetry_z.max((a.empirical - b.empirical).abs() / se);
        }
    }
    Ok(CellReport {
        n,
        samples: spec.samples,
        points_per_cell: m,
        max_error: (worst.empirical - worst.target).abs(),
        std_error_at_max: worst.std_error,
        x_at_max: worst.x,
        max_z,
        window_mass: counts.iter().sum::<u64>() as f64 / total,
        symmetry_z,
        rows,
    })
}

/// Mean of the local-limit target over `[lo, hi]`.
fn cell_average(limit: &StableLimit, lo: f64, hi: f64) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let f = |x: f64| match limit.slclt_target(x) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let (v, _) = gk15(&f, lo, hi);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(v / (hi - lo))
}

pub fn write_cells_csv<W: Write>(report: &CellReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "hits", "empirical", "target", "std_error"])?;
    for r in &report.rows {
        w.write_record([
            format!("{:.17e}", r.x),
            r.hits.to_string(),
            format!("{:.17e}", r.empirical),
            format!("{:.17e}", r.target),
            format!("{:.17e}", r.std_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increments::{make_point_mass, make_ssrw};

    #[test]
    fn deterministic_walk() {
        let law = make_point_mass(&[1]).unwrap();
        let mut cfg = SimConfig::new(1000, 2, 1);
        cfg.burn_in = 1;
        let stats = simulate(&law, &cfg).unwrap();
        for s in &stats {
            for c in &s.checkpoints {
                assert_eq!(c.g[0], (c.n as f64 + 1.0) / 2.0);
            }
            assert_eq!(s.sign_changes, Some(0));
            assert_eq!(s.identity_residual, 0.0);
        }
    }

    #[test]
    fn config_validation() {
        let law = make_ssrw(1).unwrap();
        let mut cfg = SimConfig::new(100, 1, 0);
        cfg.checkpoints = vec![10, 5];
        assert!(simulate(&law, &cfg).is_err());
        cfg.checkpoints = vec![10, 200];
        assert!(simulate(&law, &cfg).is_err());
        let cfg = SimConfig::new(100, 0, 0);
        assert!(simulate(&law, &cfg).is_err());
    }

    #[test]
    fn windows_are_contiguous() {
        let law = make_ssrw(2).unwrap();
        let mut cfg = SimConfig::new(5000, 1, 3);
        cfg.beta = Some(1.5);
        let s = &simulate(&law, &cfg).unwrap()[0];
        for w in s.windows.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        assert_eq!(s.windows[0].start, 1);
    }

    #[test]
    fn dyadic_windows() {
        let law = make_ssrw(1).unwrap();
        let mut cfg = SimConfig::new(64, 1, 3);
        cfg.dyadic = true;
        let s = &simulate(&law, &cfg).unwrap()[0];
        let ks: Vec<u32> = s.dyadic_minima.iter().map(|w| w.0).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn clt_needs_runs() {
        let law = make_ssrw(1).unwrap();
        let cfg = SimConfig::new(10, 10, 0);
        assert!(matches!(clt_check(&law, &cfg), Err(Error::TooFewRuns { .. })));
    }
}
