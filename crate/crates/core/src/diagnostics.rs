//! Characteristic-function diagnostics: products `Phi_n`, the second-order
//! Taylor remainder of `phi`, integrals of `|Phi_n - f_n|` and of envelopes
//! over the nested frequency regions, and the Fourier inversion of `Phi_n`.

use crate::error::{Error, Result};
use crate::increments::LatticeLaw;
use crate::lattice::{reduce_to_unit, verify_support, LatticeBasis};
use crate::limits::GaussianLimit;
use crate::quad::{integrate_box_2d, integrate_breaks, QuadConfig};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::{gamma, gamma_ur};
use std::f64::consts::PI;
use std::io::Write;

/// Default inner radius of the frequency partition.
pub const DEFAULT_A: f64 = 2.0;
/// Default relative radius of the second region.
pub const DEFAULT_DELTA: f64 = 0.5;

/// `prod_{j=1}^n phi(n^{-3/2} j t)`.
pub fn phi_n(law: &LatticeLaw, n: u64, t: &[f64]) -> Complex64 {
    product(law, n, (n as f64).powf(-1.5), t)
}

/// `prod_{j=1}^n phi(n^{-1-1/alpha} j t)`.
pub fn phi_n_stable(law: &LatticeLaw, n: u64, alpha: f64, t: &[f64]) -> Complex64 {
    product(law, n, (n as f64).powf(-1.0 - 1.0 / alpha), t)
}

fn product(law: &LatticeLaw, n: u64, scale: f64, t: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut u = vec![0.0; t.len()];
    for j in 1..=n {
        let s = scale * j as f64;
        for (ui, ti) in u.iter_mut().zip(t) {
            *ui = s * ti;
        }
        acc *= law.charfn(&u);
    }
    acc
}

/// `log |Phi_n(t)|` as a sum of `log |phi|`, stopping once it drops below `floor`.
pub fn log_abs_phi_n(law: &LatticeLaw, n: u64, scale: f64, t: &[f64], floor: f64) -> f64 {
    let mut total = 0.0;
    let mut u = vec![0.0; t.len()];
    for j in 1..=n {
        let s = scale * j as f64;
        for (ui, ti) in u.iter_mut().zip(t) {
            *ui = s * ti;
        }
        total += law.log_abs_charfn(&u);
        if total < floor {
            return f64::NEG_INFINITY;
        }
    }
    total
}

/// `|Phi_n(t)|` through the log-sum, exactly zero once it underflows.
fn abs_phi(law: &LatticeLaw, n: u64, scale: f64, t: &[f64]) -> f64 {
    log_abs_phi_n(law, n, scale, t, -745.0).exp()
}

/// `e^{i theta} - 1 - i theta + theta^2/2`, by series for small `theta`.
fn cubic_remainder(theta: f64) -> Complex64 {
    if theta.abs() < 0.1 {
        let mut term = Complex64::new(0.0, 1.0) * theta;
        term = term * Complex64::new(0.0, theta) / 2.0;
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 3..20 {
            term = term * Complex64::new(0.0, theta) / k as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        Complex64::from_polar(1.0, theta) - 1.0 - Complex64::new(0.0, theta) + 0.5 * theta * theta
    }
}

/// One value of the Taylor remainder table.
#[derive(Debug, Clone, Serialize)]
pub struct TaylorPoint {
    pub t: Vec<f64>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaylorTable {
    pub points: Vec<TaylorPoint>,
    /// `(k, max |W|)` over `|t|` in `[2^{-k-1}, 2^{-k}]`, for shells that contain grid points.
    pub shells: Vec<(i32, f64)>,
}

/// `W(t) = (phi(t) - 1 - i t.mu + t^T E[X X^T] t / 2) / |t|^2` for every nonzero grid point.
pub fn taylor_remainder(law: &LatticeLaw, grid: &[Vec<f64>]) -> Result<TaylorTable> {
    if !law.is_finite() {
        return Err(Error::Unsupported("Taylor remainder needs a finite-support law".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    let mut shells: Vec<(i32, f64)> = Vec::new();
    for t in grid {
        if t.len() != law.dim() {
            return Err(Error::BadParameter("grid point dimension differs from the law".into()));
        }
        let norm2: f64 = t.iter().map(|v| v * v).sum();
        if norm2 == 0.0 {
            continue;
        }
        let mut w = Complex64::new(0.0, 0.0);
        for a in law.atoms() {
            let theta: f64 = a.point.iter().zip(t).map(|(x, s)| *x as f64 * s).sum();
            w += a.prob * cubic_remainder(theta);
        }
        w /= norm2;
        let k = (-norm2.sqrt().log2()).floor() as i32;
        match shells.iter_mut().find(|s| s.0 == k) {
            Some(s) => s.1 = s.1.max(w.norm()),
            None => shells.push((k, w.norm())),
        }
        points.push(TaylorPoint {
            t: t.clone(),
            re: w.re,
            im: w.im,
        });
    }
    shells.sort_by_key(|s| s.0);
    Ok(TaylorTable { points, shells })
}

/// Frequency region of the partition of `[-pi n^{3/2}, pi n^{3/2}]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    R1,
    R2,
    R3,
    R4,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::R1, Region::R2, Region::R3, Region::R4];

    fn index(self) -> usize {
        self as usize
    }
}

/// Nested boxes `[-s_k, s_k]^d` with `s = (A, delta sqrt n, pi sqrt n, pi n^{3/2})`;
/// region `k` is box `k` minus all earlier boxes, so regions can be empty.
#[derive(Debug, Clone, Serialize)]
pub struct RegionSpec {
    pub a: f64,
    pub delta: f64,
    pub n: u64,
    pub dim: usize,
}

impl RegionSpec {
    pub fn new(a: f64, delta: f64, n: u64, dim: usize) -> Result<Self> {
        if !(a > 0.0) || !(delta > 0.0 && delta < PI) || n == 0 || dim == 0 {
            return Err(Error::BadParameter("need A > 0, 0 < delta < pi, n >= 1, d >= 1".into()));
        }
        Ok(Self { a, delta, n, dim })
    }

    /// Half-widths of the four boxes.
    pub fn radii(&self) -> [f64; 4] {
        let rn = (self.n as f64).sqrt();
        [self.a, self.delta * rn, PI * rn, PI * (self.n as f64).powf(1.5)]
    }

    /// Inner and outer half-widths of region `r`; inner >= outer means empty.
    pub fn shell(&self, r: Region) -> (f64, f64) {
        let s = self.radii();
        let k = r.index();
        let inner = s[..k].iter().copied().fold(0.0, f64::max);
        (inner, s[k])
    }

    pub fn is_empty(&self, r: Region) -> bool {
        let (inner, outer) = self.shell(r);
        inner >= outer
    }

    /// Membership by the defining set difference.
    pub fn contains(&self, r: Region, t: &[f64]) -> bool {
        let sup = t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let s = self.radii();
        let k = r.index();
        sup <= s[k] && s[..k].iter().all(|&prev| sup > prev)
    }

    /// The region holding `t`, if `t` lies in the outer box.
    pub fn locate(&self, t: &[f64]) -> Option<Region> {
        Region::ALL.into_iter().find(|&r| self.contains(r, t))
    }

    /// Volume of region `r`.
    pub fn volume(&self, r: Region) -> f64 {
        let (inner, outer) = self.shell(r);
        if inner >= outer {
            return 0.0;
        }
        let d = self.dim as i32;
        (2.0 * outer).powi(d) - (2.0 * inner).powi(d)
    }
}

/// Rectangles tiling `[-outer, outer]^d \ [-inner, inner]^d` for `d` in {1, 2}.
fn annulus_pieces(inner: f64, outer: f64, d: usize) -> Vec<Vec<(f64, f64)>> {
    if inner >= outer {
        return Vec::new();
    }
    match (d, inner > 0.0) {
        (1, false) => vec![vec![(-outer, outer)]],
        (1, true) => vec![vec![(-outer, -inner)], vec![(inner, outer)]],
        (2, false) => vec![vec![(-outer, outer), (-outer, outer)]],
        (2, true) => vec![
            vec![(-outer, outer), (inner, outer)],
            vec![(-outer, outer), (-outer, -inner)],
            vec![(-outer, -inner), (-inner, inner)],
            vec![(inner, outer), (-inner, inner)],
        ],
        _ => unreachable!("dimension checked by callers"),
    }
}

/// Value with an error estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionIntegrals {
    pub n: u64,
    /// `int_{R1} |Phi_n - f_n|`
    pub i1: Integral,
    /// `int_{R2} |Phi_n - f_n|`
    pub i2: Integral,
    /// `int_{R3} (|Phi_n| + |f_n|)`
    pub i3: Integral,
    /// `int_{R4} (|Phi_n| + |f_n|)`
    pub i4: Integral,
    /// `int_{R2} (|Phi_n| + |f_n|)`
    pub i2_envelope: Integral,
}

/// Unit-lattice law and limit shared by the diagnostics.
struct Reduced {
    law: LatticeLaw,
    limit: GaussianLimit,
}

fn reduce(law: &LatticeLaw, basis: &LatticeBasis) -> Result<Reduced> {
    if !verify_support(law, basis) {
        return Err(Error::BadParameter("law is not supported on the given lattice".into()));
    }
    let unit = reduce_to_unit(law, basis)?;
    let limit = GaussianLimit::from_moments(&unit.moments()?)?;
    Ok(Reduced { law: unit, limit })
}

/// Integrals over the four regions, computed for the law expressed in the
/// coordinates of `basis` (so the lattice becomes `Z^d`). Supports `d` in {1, 2}.
pub fn region_integrals(law: &LatticeLaw, basis: &LatticeBasis, n: u64, a: f64, delta: f64) -> Result<RegionIntegrals> {
    let d = law.dim();
    if d > 2 {
        return Err(Error::Unsupported("region integrals are available for d <= 2".into()));
    }
    let spec = RegionSpec::new(a, delta, n, d)?;
    let red = reduce(law, basis)?;
    let scale = (n as f64).powf(-1.5);
    let diff = |t: &[f64]| (phi_n(&red.law, n, t) - red.limit.f_n(n, t)).norm();
    let envelope = |t: &[f64]| abs_phi(&red.law, n, scale, t) + red.limit.f_n(n, t).norm();
    // features of |Phi_n| have width about sqrt(n) / ||H||; panels are kept well below that
    let width = 0.25 * PI * (n as f64).sqrt();
    let over = |r: Region, f: &(dyn Fn(&[f64]) -> f64 + Sync)| -> Result<Integral> {
        let (inner, outer) = spec.shell(r);
        let pieces = annulus_pieces(inner, outer, d);
        let parts: Vec<Result<Integral>> = pieces.par_iter().map(|p| integrate_piece(f, p, width)).collect();
        let mut total = Integral { value: 0.0, error: 0.0 };
        for p in parts {
            let p = p?;
            total.value += p.value;
            total.error += p.error;
        }
        Ok(total)
    };
    Ok(RegionIntegrals {
        n,
        i1: over(Region::R1, &diff)?,
        i2: over(Region::R2, &diff)?,
        i3: over(Region::R3, &envelope)?,
        i4: over(Region::R4, &envelope)?,
        i2_envelope: over(Region::R2, &envelope)?,
    })
}

fn integrate_piece(f: &(dyn Fn(&[f64]) -> f64 + Sync), piece: &[(f64, f64)], width: f64) -> Result<Integral> {
    match piece.len() {
        1 => {
            let (lo, hi) = piece[0];
            let panels = ((hi - lo) / width).ceil().max(1.0) as usize;
            let breaks: Vec<f64> = (0..=panels).map(|k| lo + (hi - lo) * k as f64 / panels as f64).collect();
            let cfg = QuadConfig::new(1e-12, 1e-9, 50 * panels + 2000);
            let est = integrate_breaks(|t: f64| f(&[t]), &breaks, &cfg);
            if !est.converged {
                return Err(Error::QuadratureBudget {
                    tolerance: cfg.rel_tol,
                    estimate: est.error,
                    panels: est.panels,
                });
            }
            Ok(Integral {
                value: est.value,
                error: est.error,
            })
        }
        2 => {
            let (x, y) = (piece[0], piece[1]);
            let side = (x.1 - x.0).max(y.1 - y.0);
            let cells = (side / width).ceil().max(2.0) as usize;
            let (value, error) = integrate_box_2d(|u, v| f(&[u, v]), x, y, cells);
            Ok(Integral { value, error })
        }
        _ => unreachable!("dimension checked by callers"),
    }
}

/// `(2 pi)^d e^{-n c_rho / 2} n^{d/2}`, the size of the third-region envelope
/// when `|phi| <= e^{-c_rho}` on at least `n/2` of the factors.
pub fn third_region_envelope(n: u64, c_rho: f64, d: usize) -> f64 {
    (2.0 * PI * (n as f64).sqrt()).powi(d as i32) * (-(n as f64) * c_rho / 2.0).exp()
}

/// `n^{3d/2} P(n^{-1/2} G_n = x_z)` by inverting `Phi_n` over `[-pi n^{3/2}, pi n^{3/2}]^d`,
/// for the lattice point with index `z` in the coordinates of `basis`.
pub fn inversion_at(law: &LatticeLaw, basis: &LatticeBasis, n: u64, z: &[i64]) -> Result<f64> {
    let d = law.dim();
    if d > 2 {
        return Err(Error::Unsupported("inversion is available for d <= 2".into()));
    }
    let red = reduce(law, basis)?;
    let s = (n as f64).powf(-1.5);
    let zs: Vec<f64> = z.iter().map(|v| *v as f64 * s).collect();
    let f = |t: &[f64]| {
        let phase: f64 = t.iter().zip(&zs).map(|(a, b)| a * b).sum();
        (Complex64::from_polar(1.0, -phase) * phi_n(&red.law, n, t)).re
    };
    let outer = PI * (n as f64).powf(1.5);
    let width = 0.25 * PI * (n as f64).sqrt();
    let piece: Vec<(f64, f64)> = vec![(-outer, outer); d];
    let v = integrate_piece(&f, &piece, width.min(outer / 4.0))?;
    Ok(v.value / (2.0 * PI).powi(d as i32))
}

/// Largest `|phi(n^{-3/2} j t)|` over `j` in `[n/2, n]` and a grid of the
/// third region, skipping arguments within `rho` of `2 pi Z^d`, in the
/// coordinates of `basis`. Returns `(max, points used)`.
pub fn band_phi_max(law: &LatticeLaw, basis: &LatticeBasis, n: u64, delta: f64, rho: f64, per_side: usize) -> Result<(f64, usize)> {
    let d = law.dim();
    if d > 2 {
        return Err(Error::Unsupported("band scan is available for d <= 2".into()));
    }
    let red = reduce(law, basis)?;
    let spec = RegionSpec::new(DEFAULT_A.min(delta * (n as f64).sqrt()), delta, n, d)?;
    let (inner, outer) = spec.shell(Region::R3);
    let s = (n as f64).powf(-1.5);
    let axis: Vec<f64> = (0..=per_side)
        .map(|k| -outer + 2.0 * outer * k as f64 / per_side as f64)
        .collect();
    let mut best = 0.0f64;
    let mut used = 0usize;
    let mut visit = |t: &[f64]| {
        if t.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= inner {
            return;
        }
        for j in n.div_ceil(2)..=n {
            let u: Vec<f64> = t.iter().map(|v| v * s * j as f64).collect();
            let dist2: f64 = u
                .iter()
                .map(|v| {
                    let r = v - 2.0 * PI * (v / (2.0 * PI)).round();
                    r * r
                })
                .sum();
            if dist2 < rho * rho {
                continue;
            }
            used += 1;
            best = best.max(red.law.charfn(&u).norm());
        }
    };
    if d == 1 {
        for &x in &axis {
            visit(&[x]);
        }
    } else {
        for &x in &axis {
            for &y in &axis {
                visit(&[x, y]);
            }
        }
    }
    Ok((best, used))
}

#[derive(Debug, Clone, Serialize)]
pub struct StableIntegrals {
    pub n: u64,
    pub j1: Integral,
    pub j2: Integral,
    pub j3: Integral,
    pub j4: Integral,
    pub j5: f64,
}

/// Integrals over the five bands `|t| <= A`, `A..delta n^{1/alpha}`,
/// `delta n^{1/alpha}..pi n^{1/alpha}`, `pi n^{1/alpha}..pi n^{1+1/alpha}` and `|t| > A`
/// for a power-tail law on `Z` with limit `exp(-c |t|^alpha / (alpha + 1))`.
pub fn stable_region_integrals(law: &LatticeLaw, n: u64, a: f64, delta: f64) -> Result<StableIntegrals> {
    let tail = law
        .tail()
        .ok_or_else(|| Error::BadParameter("stable diagnostics need a power-tail law".into()))?;
    if !(a > 0.0) || !(delta > 0.0) || n == 0 {
        return Err(Error::BadParameter("need A > 0, delta > 0, n >= 1".into()));
    }
    let alpha = tail.alpha();
    let c = law.stable_constant().expect("tail present");
    let cl = c / (alpha + 1.0);
    let limit = |t: f64| (-cl * t.abs().powf(alpha)).exp();
    let scale = (n as f64).powf(-1.0 - 1.0 / alpha);
    let root = (n as f64).powf(1.0 / alpha);
    let diff = |t: f64| (phi_n_stable(law, n, alpha, &[t]) - limit(t)).norm();
    let envelope = |t: f64| abs_phi(law, n, scale, &[t]) + limit(t);
    let width = 0.25 * PI * root;
    let band = |lo: f64, hi: f64, f: &(dyn Fn(&[f64]) -> f64 + Sync)| -> Result<Integral> {
        if lo >= hi {
            return Ok(Integral { value: 0.0, error: 0.0 });
        }
        let half = integrate_piece(f, &[(lo, hi)], width.min(hi - lo))?;
        // both integrands are even
        Ok(Integral {
            value: 2.0 * half.value,
            error: 2.0 * half.error,
        })
    };
    let b = [a, delta * root, PI * root, PI * root * n as f64];
    Ok(StableIntegrals {
        n,
        j1: band(0.0, a, &|t: &[f64]| diff(t[0]))?,
        j2: band(b[0], b[1], &|t: &[f64]| envelope(t[0]))?,
        j3: band(b[0].max(b[1]), b[2], &|t: &[f64]| envelope(t[0]))?,
        j4: band(b[0].max(b[2]), b[3], &|t: &[f64]| envelope(t[0]))?,
        j5: stable_tail_integral(alpha, cl, a),
    })
}

/// `int_{|t| > A} exp(-c |t|^alpha) dt = (2/alpha) c^{-1/alpha} Gamma(1/alpha, c A^alpha)`.
pub fn stable_tail_integral(alpha: f64, c: f64, a: f64) -> f64 {
    let s = 1.0 / alpha;
    let x = c * a.max(0.0).powf(alpha);
    let upper = if x == 0.0 { 1.0 } else { gamma_ur(s, x) };
    2.0 / alpha * c.powf(-s) * upper * gamma(s)
}

/// CSV with columns `n, I1, I2, I3, I4`.
pub fn write_region_csv<W: Write>(rows: &[RegionIntegrals], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "I1", "I2", "I3", "I4"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format!("{:.17e}", r.i1.value),
            format!("{:.17e}", r.i2.value),
            format!("{:.17e}", r.i3.value),
            format!("{:.17e}", r.i4.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with columns `n, J1, J2, J3, J4, J5`.
pub fn write_stable_csv<W: Write>(rows: &[StableIntegrals], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "J1", "J2", "J3", "J4", "J5"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format!("{:.17e}", r.j1.value),
            format!("{:.17e}", r.j2.value),
            format!("{:.17e}", r.j3.value),
            format!("{:.17e}", r.j4.value),
            format!("{:.17e}", r.j5),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increments::make_ssrw;
    use crate::lattice::ssrw_basis;
    use approx::assert_relative_eq;

    #[test]
    fn single_factor() {
        let law = make_ssrw(1).unwrap();
        let v = phi_n(&law, 1, &[0.7]);
        assert_relative_eq!(v.re, 0.7f64.cos(), epsilon = 1e-15);
        assert_eq!(phi_n(&law, 9, &[0.0]), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn remainder_ssrw() {
        let law = make_ssrw(1).unwrap();
        let table = taylor_remainder(&law, &[vec![0.1]]).unwrap();
        let want = (0.1f64.cos() - 1.0 + 0.005) / 0.01;
        assert_relative_eq!(table.points[0].re, want, max_relative = 1e-12);
        assert_relative_eq!(table.points[0].re, 4.166e-4, max_relative = 1e-3);
        assert_eq!(table.points[0].im, 0.0);
    }

    #[test]
    fn partition_radii() {
        let spec = RegionSpec::new(2.0, 0.5, 8, 1).unwrap();
        // delta sqrt 8 < 2, so the second region is empty
        assert!(spec.is_empty(Region::R2));
        assert_eq!(spec.locate(&[1.5]), Some(Region::R1));
        assert_eq!(spec.locate(&[3.0]), Some(Region::R3));
        assert_eq!(spec.locate(&[100.0]), None);
    }

    #[test]
    fn tail_integral_closed_form() {
        assert_relative_eq!(stable_tail_integral(0.5, 1.0, 0.0), 4.0, max_relative = 1e-12);
        // int_{|t|>1} e^{-sqrt t} = 2 * 2 * Gamma(2, 1) = 8/e
        assert_relative_eq!(stable_tail_integral(0.5, 1.0, 1.0), 8.0 / std::f64::consts::E, max_relative = 1e-12);
    }

    #[test]
    fn inversion_matches_exact_d1() {
        let law = make_ssrw(1).unwrap();
        let basis = ssrw_basis(1).unwrap();
        let pmf = crate::exact::exact_gn_pmf(&law, &basis, 8).unwrap();
        for z in [0i64, 10, 18] {
            let want = 8f64.powf(1.5) * pmf.prob(&[z]);
            let got = inversion_at(&law, &basis, 8, &[z]).unwrap();
            assert!((got - want).abs() < 1e-6, "{z}: {got} {want}");
        }
    }
}
