//! Increment laws on integer lattices: finite-support laws and the symmetric
//! power-tail family `P(X = +-k) = C k^{-1-alpha}`.

use crate::error::{Error, Result};
use crate::lattice::LatticeBasis;
use crate::rng::RandomStream;
use crate::special::{power_tail_sum, zeta, CirclePolylog};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::sync::OnceLock;

const MASS_TOL: f64 = 1e-12;
/// Magnitudes below this are drawn from the alias table; the rest by inversion.
const TAIL_TABLE_END: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Vec<i64>,
    pub prob: f64,
}

/// Symmetric power tail `P(X = +-k) = normalizer * k^{-1-alpha}` for `k >= start`.
#[derive(Debug, Clone)]
pub struct PowerTail {
    alpha: f64,
    normalizer: f64,
    start: u64,
    polylog: CirclePolylog,
}

impl PowerTail {
    pub fn new(alpha: f64, normalizer: f64, start: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::BadParameter(format!("tail exponent {alpha} outside (0, 1)")));
        }
        if !(normalizer > 0.0) || start == 0 {
            return Err(Error::InvalidLaw("tail needs a positive normalizer and start >= 1".into()));
        }
        Ok(Self {
            alpha,
            normalizer,
            start,
            polylog: CirclePolylog::new(alpha),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    /// Total probability carried by the tail (both signs).
    pub fn mass(&self) -> f64 {
        2.0 * self.normalizer * power_tail_sum(1.0 + self.alpha, self.start)
    }

    /// `P(X = k)` for `|k| >= start`.
    pub fn prob(&self, k: u64) -> f64 {
        self.normalizer * (k as f64).powf(-1.0 - self.alpha)
    }

    /// `sum_{|k| >= start} P(X = k) (1 - cos kt)`, without cancellation for small `t`.
    fn deficit(&self, t: f64) -> f64 {
        let s = 1.0 + self.alpha;
        let mut head = 0.0;
        for k in 1..self.start {
            let half = 0.5 * k as f64 * t;
            head += (k as f64).powf(-s) * 2.0 * half.sin().powi(2);
        }
        2.0 * self.normalizer * (self.polylog.deficit(t) - head)
    }
}

/// Mean and covariance of a finite-support law.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mu: DVector<f64>,
    pub m: DMatrix<f64>,
    pub positive_definite: bool,
}

impl Moments {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Distribution of a single increment.
#[derive(Debug, Clone)]
pub struct LatticeLaw {
    dim: usize,
    atoms: Vec<Atom>,
    tail: Option<PowerTail>,
    basis_hint: Option<LatticeBasis>,
    sampler: OnceLock<Sampler>,
}

impl LatticeLaw {
    /// Builds and validates a law. Degenerate laws are accepted; see [`LatticeLaw::is_degenerate`].
    pub fn new(dim: usize, atoms: Vec<Atom>, tail: Option<PowerTail>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidLaw("dimension must be positive".into()));
        }
        let mut seen = HashSet::new();
        for a in &atoms {
            if a.point.len() != dim {
                return Err(Error::InvalidLaw(format!(
                    "atom {:?} has {} coordinates, expected {dim}",
                    a.point,
                    a.point.len()
                )));
            }
            if !(a.prob > 0.0 && a.prob <= 1.0) {
                return Err(Error::InvalidLaw(format!("atom {:?} has probability {}", a.point, a.prob)));
            }
            if !seen.insert(a.point.clone()) {
                return Err(Error::InvalidLaw(format!("atom {:?} listed twice", a.point)));
            }
        }
        let mut mass: f64 = atoms.iter().map(|a| a.prob).sum();
        if let Some(t) = &tail {
            if dim != 1 {
                return Err(Error::InvalidLaw("power tails are supported in dimension 1 only".into()));
            }
            if let Some(a) = atoms.iter().find(|a| a.point[0].unsigned_abs() >= t.start) {
                return Err(Error::InvalidLaw(format!(
                    "atom {:?} overlaps the tail starting at {}",
                    a.point, t.start
                )));
            }
            mass += t.mass();
        }
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidLaw(format!("total mass {mass} differs from 1")));
        }
        if atoms.is_empty() && tail.is_none() {
            return Err(Error::InvalidLaw("law has no atoms".into()));
        }
        Ok(Self {
            dim,
            atoms,
            tail,
            basis_hint: None,
            sampler: OnceLock::new(),
        })
    }

    /// Convenience constructor from `(point, prob)` pairs.
    pub fn finite(dim: usize, atoms: &[(&[i64], f64)]) -> Result<Self> {
        let atoms = atoms
            .iter()
            .map(|(p, q)| Atom {
                point: p.to_vec(),
                prob: *q,
            })
            .collect();
        Self::new(dim, atoms, None)
    }

    pub fn with_basis_hint(mut self, basis: LatticeBasis) -> Self {
        self.basis_hint = Some(basis);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn tail(&self) -> Option<&PowerTail> {
        self.tail.as_ref()
    }

    pub fn basis_hint(&self) -> Option<&LatticeBasis> {
        self.basis_hint.as_ref()
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_none()
    }

    /// Dimension of the affine span of the support.
    pub fn affine_rank(&self) -> usize {
        if self.tail.is_some() {
            return 1;
        }
        let x0 = &self.atoms[0].point;
        let cols: Vec<DVector<f64>> = self.atoms[1..]
            .iter()
            .map(|a| DVector::from_iterator(self.dim, a.point.iter().zip(x0).map(|(x, y)| (x - y) as f64)))
            .collect();
        if cols.is_empty() {
            return 0;
        }
        DMatrix::from_columns(&cols).rank(1e-9)
    }

    /// True when the support does not span `R^d` affinely.
    pub fn is_degenerate(&self) -> bool {
        self.affine_rank() < self.dim
    }

    /// True when the atom set is closed under negation with equal weights.
    pub fn is_symmetric(&self) -> bool {
        self.atoms.iter().all(|a| {
            let neg: Vec<i64> = a.point.iter().map(|x| -x).collect();
            self.atoms.iter().any(|b| b.point == neg && b.prob == a.prob)
        })
    }

    /// Exact mean and covariance.
    pub fn moments(&self) -> Result<Moments> {
        if let Some(t) = &self.tail {
            return Err(Error::InfiniteMoment { alpha: t.alpha });
        }
        let d = self.dim;
        let mut mu = DVector::zeros(d);
        for a in &self.atoms {
            for i in 0..d {
                mu[i] += a.prob * a.point[i] as f64;
            }
        }
        let mut m = DMatrix::zeros(d, d);
        for a in &self.atoms {
            let y: Vec<f64> = (0..d).map(|i| a.point[i] as f64 - mu[i]).collect();
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] += a.prob * y[i] * y[j];
                }
            }
        }
        let m = (&m + m.transpose()) * 0.5;
        let positive_definite = is_positive_definite(&m);
        Ok(Moments {
            mu,
            m,
            positive_definite,
        })
    }

    /// Characteristic function `E exp(i t.X)`.
    pub fn charfn(&self, t: &[f64]) -> Complex64 {
        Complex64::new(1.0, 0.0) - self.one_minus_charfn(t)
    }

    /// `1 - E exp(i t.X)`, accurate near `t = 0`.
    pub fn one_minus_charfn(&self, t: &[f64]) -> Complex64 {
        debug_assert_eq!(t.len(), self.dim);
        let mut re = 0.0;
        let mut im = 0.0;
        for a in &self.atoms {
            let theta: f64 = a.point.iter().zip(t).map(|(x, s)| *x as f64 * s).sum();
            let half = 0.5 * theta;
            re += a.prob * 2.0 * half.sin().powi(2);
            im -= a.prob * theta.sin();
        }
        if let Some(tail) = &self.tail {
            re += tail.deficit(t[0]);
        }
        Complex64::new(re, im)
    }

    /// `log |E exp(i t.X)|`, accurate near `t = 0`.
    pub fn log_abs_charfn(&self, t: &[f64]) -> f64 {
        let d = self.one_minus_charfn(t);
        // |1 - d|^2 = 1 - 2 Re d + |d|^2
        0.5 * (-2.0 * d.re + d.norm_sqr()).ln_1p()
    }

    /// Closed-form constant `c` with `1 - phi(t) ~ c |t|^alpha` for power-tail laws.
    pub fn stable_constant(&self) -> Option<f64> {
        self.tail
            .as_ref()
            .map(|t| 2.0 * t.normalizer * t.polylog.singular_coefficient())
    }

    /// `E ||X - shift||` over the finite atoms.
    pub fn mean_distance(&self, shift: &[f64]) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let s: f64 = a.point.iter().zip(shift).map(|(x, m)| (*x as f64 - m).powi(2)).sum();
                a.prob * s.sqrt()
            })
            .sum()
    }

    pub fn sampler(&self) -> &Sampler {
        self.sampler.get_or_init(|| Sampler::new(self))
    }

    /// One draw. Tail magnitudes beyond `i64::MAX` saturate.
    pub fn sample(&self, rng: &mut RandomStream) -> Vec<i64> {
        let mut buf = vec![0.0; self.dim];
        self.sampler().draw(rng, &mut buf);
        buf.iter().map(|x| *x as i64).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&LawDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LawDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

impl PartialEq for LatticeLaw {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.atoms == other.atoms
            && match (&self.tail, &other.tail) {
                (None, None) => true,
                (Some(a), Some(b)) => a.alpha == b.alpha && a.normalizer == b.normalizer && a.start == b.start,
                _ => false,
            }
    }
}

pub(crate) fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    let scale = m.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    if scale == 0.0 {
        return false;
    }
    let eig = m.clone().symmetric_eigenvalues();
    eig.iter().all(|&l| l > 1e-12 * scale)
}

/// Simple symmetric random walk: `P(X = +-e_i) = 1/(2d)`.
pub fn make_ssrw(d: usize) -> Result<LatticeLaw> {
    if d == 0 {
        return Err(Error::BadParameter("dimension must be positive".into()));
    }
    let p = 1.0 / (2 * d) as f64;
    let mut atoms = Vec::with_capacity(2 * d);
    for i in 0..d {
        for s in [-1, 1] {
            let mut point = vec![0; d];
            point[i] = s;
            atoms.push(Atom { point, prob: p });
        }
    }
    Ok(LatticeLaw::new(d, atoms, None)?.with_basis_hint(crate::lattice::ssrw_basis(d)?))
}

/// Lazy walk: `P(X = 0) = 1/2`, `P(X = +-e_i) = 1/(4d)`.
pub fn make_lazy_ssrw(d: usize) -> Result<LatticeLaw> {
    if d == 0 {
        return Err(Error::BadParameter("dimension must be positive".into()));
    }
    let p = 1.0 / (4 * d) as f64;
    let mut atoms = vec![Atom {
        point: vec![0; d],
        prob: 0.5,
    }];
    for i in 0..d {
        for s in [-1, 1] {
            let mut point = vec![0; d];
            point[i] = s;
            atoms.push(Atom { point, prob: p });
        }
    }
    Ok(LatticeLaw::new(d, atoms, None)?.with_basis_hint(LatticeBasis::unit(d)))
}

/// Symmetric power tail on `Z \ {0}`: `P(X = +-k) = C k^{-1-alpha}`, `C = 1/(2 zeta(1+alpha))`.
pub fn make_stable_lattice(alpha: f64) -> Result<LatticeLaw> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::BadParameter(format!("alpha = {alpha} outside (0, 1)")));
    }
    let normalizer = 0.5 / zeta(1.0 + alpha);
    let tail = PowerTail::new(alpha, normalizer, 1)?;
    Ok(LatticeLaw::new(1, Vec::new(), Some(tail))?.with_basis_hint(LatticeBasis::unit(1)))
}

/// Deterministic law `X = point`.
pub fn make_point_mass(point: &[i64]) -> Result<LatticeLaw> {
    LatticeLaw::finite(point.len(), &[(point, 1.0)])
}

/// Result of fitting `-log|phi(t)| ~ c |t|^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StableFit {
    pub c: f64,
    pub residual: f64,
}

/// Fits `c` on a geometric grid of `points` values in `[t_min, t_max]`.
pub fn fit_stable_c(law: &LatticeLaw, alpha: f64, t_min: f64, t_max: f64, points: usize) -> Result<StableFit> {
    if law.dim() != 1 {
        return Err(Error::Unsupported("stable fit needs a one-dimensional law".into()));
    }
    if !(alpha > 0.0 && alpha < 2.0) || !(0.0 < t_min && t_min < t_max) || points < 2 {
        return Err(Error::BadParameter("invalid fit grid or exponent".into()));
    }
    let ratio = (t_max / t_min).ln() / (points - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let t = t_min * (ratio * i as f64).exp();
            (t, -law.log_abs_charfn(&[t]))
        })
        .collect();
    if grid.iter().any(|(_, y)| !(*y > 0.0)) {
        return Err(Error::FitUnstable {
            residual: f64::INFINITY,
            limit: 0.05,
        });
    }
    // log y = log c + alpha log t with alpha held fixed
    let log_c = grid.iter().map(|(t, y)| y.ln() - alpha * t.ln()).sum::<f64>() / points as f64;
    let c = log_c.exp();
    let residual = (grid
        .iter()
        .map(|(t, y)| ((y - c * t.powf(alpha)) / y).powi(2))
        .sum::<f64>()
        / points as f64)
        .sqrt();
    Ok(StableFit { c, residual })
}

/// Estimates `c` in `-log|phi(t)| ~ c |t|^alpha` on `t` in `[1e-4, 1e-2]`.
pub fn estimate_stable_c(law: &LatticeLaw, alpha: f64) -> Result<f64> {
    let fit = fit_stable_c(law, alpha, 1e-4, 1e-2, 41)?;
    if fit.residual > 0.05 {
        return Err(Error::FitUnstable {
            residual: fit.residual,
            limit: 0.05,
        });
    }
    Ok(fit.c)
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Atom(usize),
    Magnitude(u64),
    FarTail,
}

/// Precomputed sampler: an alias table over atoms and small tail magnitudes,
/// with exact inversion of the cumulative tail for the remainder.
#[derive(Debug, Clone)]
pub struct Sampler {
    alias: WeightedAliasIndex<f64>,
    slots: Vec<Slot>,
    points: Vec<Vec<f64>>,
    tail: Option<(f64, u64, f64)>, // (exponent 1+alpha, table end, tail sum from table end)
}

impl Sampler {
    fn new(law: &LatticeLaw) -> Self {
        let mut weights = Vec::new();
        let mut slots = Vec::new();
        for (i, a) in law.atoms.iter().enumerate() {
            weights.push(a.prob);
            slots.push(Slot::Atom(i));
        }
        let mut tail = None;
        if let Some(t) = &law.tail {
            let s = 1.0 + t.alpha;
            let end = TAIL_TABLE_END.max(t.start);
            for k in t.start..end {
                weights.push(2.0 * t.prob(k));
                slots.push(Slot::Magnitude(k));
            }
            let far = power_tail_sum(s, end);
            weights.push(2.0 * t.normalizer * far);
            slots.push(Slot::FarTail);
            tail = Some((s, end, far));
        }
        let points = law
            .atoms
            .iter()
            .map(|a| a.point.iter().map(|x| *x as f64).collect())
            .collect();
        Self {
            alias: WeightedAliasIndex::new(weights).expect("positive finite weights"),
            slots,
            points,
            tail,
        }
    }

    /// Writes one draw into `out` (length `dim`).
    #[inline]
    pub fn draw(&self, rng: &mut RandomStream, out: &mut [f64]) {
        match self.slots[self.alias.sample(rng)] {
            Slot::Atom(i) => out.copy_from_slice(&self.points[i]),
            Slot::Magnitude(k) => out[0] = if rng.random::<bool>() { k as f64 } else { -(k as f64) },
            Slot::FarTail => {
                let k = self.far_tail_magnitude(rng.open01());
                out[0] = if rng.random::<bool>() { k } else { -k };
            }
        }
    }

    /// Scalar draw for one-dimensional laws.
    #[inline]
    pub fn draw_scalar(&self, rng: &mut RandomStream) -> f64 {
        let mut x = [0.0];
        self.draw(rng, &mut x);
        x[0]
    }

    /// Largest `k >= end` with `T(k) >= u T(end)`, where `T(k) = sum_{j >= k} j^{-s}`.
    fn far_tail_magnitude(&self, u: f64) -> f64 {
        let (s, end, far) = self.tail.expect("tail sampler");
        let target = u * far;
        let tail_at = |k: f64| {
            if k < 1e15 {
                power_tail_sum(s, k as u64)
            } else {
                far_tail_continuous(s, k)
            }
        };
        let mut lo = end as f64;
        // continuous guess T(k) ~ k^{1-s}/(s-1)
        let guess = (target * (s - 1.0)).powf(1.0 / (1.0 - s)).max(lo).min(1e300);
        let mut hi = (2.0 * guess + 2.0).min(1e300);
        while hi < 1e300 && tail_at(hi) >= target {
            lo = hi;
            hi = (hi * 4.0).min(1e300);
        }
        if hi >= 1e300 {
            return lo.max(guess);
        }
        if tail_at(lo) < target {
            lo = end as f64;
        }
        while hi - lo > 1.0 {
            let mid = if hi > 4.0 * lo { (lo * hi).sqrt().floor() } else { (0.5 * (lo + hi)).floor() };
            if mid <= lo || mid >= hi {
                break;
            }
            if tail_at(mid) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Continuous approximation of the tail sum for magnitudes beyond `u64` precision.
fn far_tail_continuous(s: f64, k: f64) -> f64 {
    k.powf(1.0 - s) / (s - 1.0) + 0.5 * k.powf(-s)
}

#[derive(Serialize, Deserialize)]
struct TailDoc {
    alpha: f64,
    normalizer: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct LawDoc {
    dim: usize,
    atoms: Vec<Atom>,
    tail: Option<TailDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    basis: Option<LatticeBasis>,
}

impl From<&LatticeLaw> for LawDoc {
    fn from(law: &LatticeLaw) -> Self {
        Self {
            dim: law.dim,
            atoms: law.atoms.clone(),
            tail: law.tail.as_ref().map(|t| TailDoc {
                alpha: t.alpha,
                normalizer: t.normalizer,
                start: Some(t.start),
            }),
            basis: law.basis_hint.clone(),
        }
    }
}

impl TryFrom<LawDoc> for LatticeLaw {
    type Error = Error;

    fn try_from(doc: LawDoc) -> Result<Self> {
        let tail = match doc.tail {
            None => None,
            Some(t) => {
                let start = t.start.unwrap_or_else(|| {
                    1 + doc.atoms.iter().map(|a| a.point.first().map_or(0, |x| x.unsigned_abs())).max().unwrap_or(0)
                });
                Some(PowerTail::new(t.alpha, t.normalizer, start)?)
            }
        };
        let mut law = LatticeLaw::new(doc.dim, doc.atoms, tail)?;
        if let Some(b) = doc.basis {
            if b.dim() != law.dim {
                return Err(Error::InvalidLaw("basis dimension differs from law dimension".into()));
            }
            law = law.with_basis_hint(b);
        }
        Ok(law)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn ssrw_moments() {
        for d in 1..=4 {
            let m = make_ssrw(d).unwrap().moments().unwrap();
            assert!(m.mu.iter().all(|x| *x == 0.0));
            assert_eq!(m.m, DMatrix::identity(d, d) / d as f64);
            assert!(m.positive_definite);
        }
    }

    #[test]
    fn lazy_moments() {
        let m = make_lazy_ssrw(2).unwrap().moments().unwrap();
        assert_eq!(m.m, DMatrix::identity(2, 2) * 0.25);
    }

    #[test]
    fn point_mass_is_degenerate() {
        let law = make_point_mass(&[1]).unwrap();
        let m = law.moments().unwrap();
        assert_eq!(m.mu[0], 1.0);
        assert_eq!(m.m[(0, 0)], 0.0);
        assert!(!m.positive_definite);
        assert!(law.is_degenerate());
    }

    #[test]
    fn tail_rejects_moments() {
        let law = make_stable_lattice(0.5).unwrap();
        assert!(matches!(law.moments(), Err(Error::InfiniteMoment { .. })));
    }

    #[test]
    fn validation() {
        assert!(LatticeLaw::finite(1, &[(&[0], 0.5), (&[0], 0.5)]).is_err());
        assert!(LatticeLaw::finite(1, &[(&[0], 0.5), (&[1], 0.4)]).is_err());
        assert!(LatticeLaw::finite(2, &[(&[0], 1.0)]).is_err());
        assert!(make_stable_lattice(1.0).is_err());
        assert!(make_stable_lattice(0.0).is_err());
    }

    #[test]
    fn charfn_examples() {
        let lazy = make_lazy_ssrw(3).unwrap();
        let t = [0.3, -1.2, 2.5];
        let want = 0.5 + t.iter().map(|s: &f64| s.cos()).sum::<f64>() / 6.0;
        assert_relative_eq!(lazy.charfn(&t).re, want, epsilon = 1e-15);
        assert_relative_eq!(make_ssrw(1).unwrap().charfn(&[PI]).re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn stable_constant_closed_form() {
        let law = make_stable_lattice(0.5).unwrap();
        assert_relative_eq!(law.stable_constant().unwrap(), 0.959_520_719_674_644, max_relative = 1e-12);
    }

    #[test]
    fn log_abs_matches_direct() {
        let law = make_ssrw(2).unwrap();
        let t = [0.7, -0.4];
        assert_relative_eq!(law.log_abs_charfn(&t), law.charfn(&t).norm().ln(), epsilon = 1e-14);
    }

    #[test]
    fn far_tail_inversion_is_consistent() {
        let law = make_stable_lattice(0.5).unwrap();
        let s = law.sampler();
        let (exp, end, far) = s.tail.unwrap();
        for u in [0.999_999, 0.5, 0.1, 1e-6, 1e-12] {
            let k = s.far_tail_magnitude(u);
            assert!(k >= end as f64);
            if k < 1e12 {
                let target = u * far;
                assert!(power_tail_sum(exp, k as u64) >= target * (1.0 - 1e-12));
                assert!(power_tail_sum(exp, k as u64 + 1) < target * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn json_round_trip() {
        for law in [make_ssrw(2).unwrap(), make_stable_lattice(0.3).unwrap()] {
            let back = LatticeLaw::from_json(&law.to_json().unwrap()).unwrap();
            assert_eq!(back, law);
            assert_eq!(back.basis_hint(), law.basis_hint());
        }
        let doc = r#"{"dim":1,"atoms":[{"point":[-1],"prob":0.5},{"point":[1],"prob":0.5}],"tail":null}"#;
        assert_eq!(LatticeLaw::from_json(doc).unwrap().atoms().len(), 2);
    }
}
