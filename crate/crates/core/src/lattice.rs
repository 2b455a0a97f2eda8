//! Affine lattices `b + H Z^d` carrying an increment law: explicit bases for the
//! simple random walk, support membership, a numerical certificate that a basis
//! is minimal, a determinant bound and reduction of a law to `Z^d`.

use crate::error::{Error, Result};
use crate::increments::{Atom, LatticeLaw};
use crate::rng::RandomStream;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;

const INTEGRALITY_TOL: f64 = 1e-9;

/// Candidate support lattice `b + H Z^d` with `h = |det H|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisDoc", into = "BasisDoc")]
pub struct LatticeBasis {
    matrix: DMatrix<f64>,
    offset: DVector<f64>,
    det: f64,
    inverse: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct BasisDoc {
    #[serde(rename = "H")]
    h: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl TryFrom<BasisDoc> for LatticeBasis {
    type Error = Error;

    fn try_from(doc: BasisDoc) -> Result<Self> {
        let d = doc.b.len();
        if doc.h.len() != d || doc.h.iter().any(|r| r.len() != d) {
            return Err(Error::BadParameter("basis matrix must be d x d with d = len(b)".into()));
        }
        let matrix = DMatrix::from_fn(d, d, |i, j| doc.h[i][j]);
        LatticeBasis::new(matrix, DVector::from_vec(doc.b))
    }
}

impl From<LatticeBasis> for BasisDoc {
    fn from(b: LatticeBasis) -> Self {
        let d = b.dim();
        Self {
            h: (0..d).map(|i| (0..d).map(|j| b.matrix[(i, j)]).collect()).collect(),
            b: b.offset.iter().copied().collect(),
        }
    }
}

impl LatticeBasis {
    pub fn new(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        let d = offset.len();
        if d == 0 || matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::BadParameter("basis matrix must be square and match the offset".into()));
        }
        let det = matrix.determinant().abs();
        let inverse = matrix
            .clone()
            .try_inverse()
            .filter(|_| det > 1e-12)
            .ok_or_else(|| Error::BadParameter("basis matrix is singular".into()))?;
        let check = (&matrix * &inverse - DMatrix::identity(d, d)).amax();
        if check > 1e-10 {
            return Err(Error::BadParameter(format!("basis inverse inaccurate ({check:.1e})")));
        }
        Ok(Self {
            matrix,
            offset,
            det,
            inverse,
        })
    }

    /// `H = I`, `b = 0`.
    pub fn unit(d: usize) -> Self {
        Self::new(DMatrix::identity(d, d), DVector::zeros(d)).expect("identity basis")
    }

    pub fn from_rows(rows: &[&[f64]], offset: &[f64]) -> Result<Self> {
        let d = offset.len();
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::BadParameter("basis matrix must be d x d".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]), DVector::from_column_slice(offset))
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// `h = |det H|`.
    pub fn h(&self) -> f64 {
        self.det
    }

    /// Same lattice, generated by `H V`.
    pub fn with_change_of_basis(&self, v: &DMatrix<f64>) -> Result<Self> {
        Self::new(&self.matrix * v, self.offset.clone())
    }

    /// Columns generate the dual lattice `2 pi (H^T)^{-1} Z^d`.
    pub fn dual_generator(&self) -> DMatrix<f64> {
        self.inverse.transpose() * (2.0 * PI)
    }

    /// `H^{-1}(x - b)` for a point of `R^d`.
    pub fn coordinates(&self, x: &[f64]) -> DVector<f64> {
        let y = DVector::from_column_slice(x) - &self.offset;
        &self.inverse * y
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// The explicit minimal basis for the simple random walk on `Z^d`.
pub fn ssrw_basis(d: usize) -> Result<LatticeBasis> {
    if d == 0 {
        return Err(Error::BadParameter("dimension must be positive".into()));
    }
    if d == 1 {
        return LatticeBasis::from_rows(&[&[2.0]], &[-1.0]);
    }
    let mut h = DMatrix::zeros(d, d);
    let mut b = DVector::from_element(d, -1.0);
    if d % 2 == 1 {
        let half = (d + 1) / 2;
        for i in 0..d {
            for j in 0..d {
                let diff = (i + d - j) % d;
                if diff == 0 || diff == half {
                    h[(i, j)] = 1.0;
                }
            }
        }
    } else {
        b[d - 1] = 0.0;
        for i in 0..d {
            for j in 0..d {
                let diff = (j + d - i) % d;
                if diff == 0 || diff == 1 {
                    h[(i, j)] = 1.0;
                }
            }
        }
        h[(d - 1, 0)] = -1.0;
    }
    LatticeBasis::new(h, b)
}

fn integral_coordinates(basis: &LatticeBasis, point: &[i64]) -> std::result::Result<Vec<i64>, f64> {
    let x: Vec<f64> = point.iter().map(|v| *v as f64).collect();
    let z = basis.coordinates(&x);
    let residual = z.iter().map(|v| (v - v.round()).abs()).fold(0.0, f64::max);
    if residual > INTEGRALITY_TOL {
        Err(residual)
    } else {
        Ok(z.iter().map(|v| v.round() as i64).collect())
    }
}

/// Number of tail magnitudes checked explicitly for power-tail laws.
const TAIL_PREFIX: u64 = 64;

fn support_probe(law: &LatticeLaw) -> Vec<Vec<i64>> {
    let mut pts: Vec<Vec<i64>> = law.atoms().iter().map(|a| a.point.clone()).collect();
    if let Some(t) = law.tail() {
        for k in t.start()..t.start() + TAIL_PREFIX {
            pts.push(vec![k as i64]);
            pts.push(vec![-(k as i64)]);
        }
    }
    pts
}

/// True iff every atom lies on `b + H Z^d` (to 1e-9). For power tails a prefix
/// of magnitudes is checked together with the unit step between consecutive
/// tail atoms.
pub fn verify_support(law: &LatticeLaw, basis: &LatticeBasis) -> bool {
    if law.dim() != basis.dim() {
        return false;
    }
    let on_lattice = support_probe(law).iter().all(|p| integral_coordinates(basis, p).is_ok());
    let step_ok = law.tail().is_none_or(|_| {
        let step = &basis.inverse * DVector::from_element(1, 1.0);
        (step[0] - step[0].round()).abs() <= INTEGRALITY_TOL
    });
    on_lattice && step_ok
}

/// Law of `H^{-1}(X - b)` on `Z^d`.
pub fn reduce_to_unit(law: &LatticeLaw, basis: &LatticeBasis) -> Result<LatticeLaw> {
    if law.dim() != basis.dim() {
        return Err(Error::BadParameter("law and basis dimensions differ".into()));
    }
    if law.tail().is_some() {
        let unit = basis.offset[0] == 0.0 && basis.matrix[(0, 0)].abs() == 1.0;
        if !unit {
            return Err(Error::Unsupported("power-tail laws reduce only under H = +-1, b = 0".into()));
        }
        return Ok(law.clone().with_basis_hint(LatticeBasis::unit(1)));
    }
    let mut atoms = Vec::with_capacity(law.atoms().len());
    for a in law.atoms() {
        let point = integral_coordinates(basis, &a.point).map_err(|residual| Error::NotOnLattice {
            point: a.point.clone(),
            residual,
        })?;
        atoms.push(Atom { point, prob: a.prob });
    }
    Ok(LatticeLaw::new(law.dim(), atoms, None)?.with_basis_hint(LatticeBasis::unit(law.dim())))
}

/// Lower bound on `|det Lambda|` over affinely independent `(d+1)`-subsets of
/// the support; every valid `h` divides it.
pub fn det_bound(law: &LatticeLaw) -> Result<f64> {
    let d = law.dim();
    let pts: Vec<Vec<f64>> = support_probe(law)
        .iter()
        .map(|p| p.iter().map(|v| *v as f64).collect())
        .collect();
    let mut order: Vec<usize> = (0..pts.len()).collect();
    let probs: Vec<f64> = support_probe(law)
        .iter()
        .map(|p| {
            law.atoms()
                .iter()
                .find(|a| &a.point == p)
                .map(|a| a.prob)
                .unwrap_or_else(|| law.tail().map_or(0.0, |t| t.prob(p[0].unsigned_abs())))
        })
        .collect();
    order.sort_by(|&i, &j| probs[j].total_cmp(&probs[i]).then(i.cmp(&j)));

    let greedy = |order: &[usize]| -> Option<f64> {
        let x0 = &pts[order[0]];
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(d);
        for &i in &order[1..] {
            let v = DVector::from_iterator(d, pts[i].iter().zip(x0).map(|(a, b)| a - b));
            let mut trial = cols.clone();
            trial.push(v);
            if DMatrix::from_columns(&trial).rank(1e-9) == trial.len() {
                cols = trial;
                if cols.len() == d {
                    return Some(DMatrix::from_columns(&cols).determinant().abs());
                }
            }
        }
        None
    };

    let mut best = greedy(&order);
    let mut rng = RandomStream::with_salt(0x6465_7462_6f75_6e64, 0, 0);
    for _ in 0..100 {
        order.shuffle(&mut rng);
        if let Some(v) = greedy(&order) {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    // atoms are integer points, so the determinants are integers
    best.map(f64::round)
        .ok_or_else(|| Error::Degenerate("no affinely independent subset of d+1 atoms".into()))
}

/// Outcome of the numerical minimality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub is_support_valid: bool,
    /// Grid points outside the rho-neighbourhood of the dual lattice where `|phi|` reaches the threshold.
    pub candidate_violations: Vec<Vec<f64>>,
    /// `-log` of the largest `|phi|` found off the rho-neighbourhood.
    pub c_rho: f64,
    pub rho: f64,
    pub grid_resolution: f64,
    /// Largest `|phi|` attained at a scanned grid point.
    pub max_abs_phi: f64,
    /// Rigorous upper bound on `|phi|` over all grid points of the scan.
    pub max_abs_phi_bound: f64,
    /// `|phi|` values at or above this count as violations.
    pub threshold: f64,
    pub grid_points_evaluated: u64,
}

impl MinimalityReport {
    pub fn is_minimal(&self) -> bool {
        self.is_support_valid && self.candidate_violations.is_empty()
    }
}

/// Short vectors of a lattice: all `G k` with `||G k|| <= radius`, excluding 0.
fn short_vectors(gen: &DMatrix<f64>, radius: f64) -> Vec<DVector<f64>> {
    let d = gen.nrows();
    let inv = gen.clone().try_inverse().expect("invertible generator");
    let bounds: Vec<i64> = (0..d)
        .map(|i| (radius * inv.row(i).norm() + 1e-9).floor() as i64)
        .collect();
    let mut out = Vec::new();
    let mut k = bounds.iter().map(|b| -b).collect::<Vec<i64>>();
    loop {
        if k.iter().any(|v| *v != 0) {
            let kv = DVector::from_iterator(d, k.iter().map(|v| *v as f64));
            let v = gen * kv;
            if v.norm() <= radius * (1.0 + 1e-12) {
                out.push(v);
            }
        }
        let mut i = 0;
        loop {
            if i == d {
                return out;
            }
            k[i] += 1;
            if k[i] > bounds[i] {
                k[i] = -bounds[i];
                i += 1;
            } else {
                break;
            }
        }
    }
}

/// Voronoi-relevant vectors of the lattice generated by `gen`, and the shortest nonzero length.
fn voronoi_relevant(gen: &DMatrix<f64>) -> (Vec<DVector<f64>>, f64) {
    let d = gen.nrows();
    // covering radius <= half the diagonal of the basis parallelepiped, and
    // relevant vectors are no longer than twice the covering radius
    let radius = (0..d).map(|j| gen.column(j).norm_squared()).sum::<f64>().sqrt();
    let vectors = short_vectors(gen, radius);
    let inv = gen.clone().try_inverse().expect("invertible generator");
    let mut cosets: HashMap<Vec<i64>, Vec<(f64, usize)>> = HashMap::new();
    for (idx, v) in vectors.iter().enumerate() {
        let k = &inv * v;
        let key: Vec<i64> = k.iter().map(|x| (x.round() as i64).rem_euclid(2)).collect();
        cosets.entry(key).or_default().push((v.norm_squared(), idx));
    }
    let mut relevant = Vec::new();
    for members in cosets.values() {
        let min = members.iter().map(|m| m.0).fold(f64::INFINITY, f64::min);
        let shortest: Vec<usize> = members
            .iter()
            .filter(|m| m.0 <= min * (1.0 + 1e-9))
            .map(|m| m.1)
            .collect();
        if shortest.len() == 2 {
            relevant.extend(shortest.iter().map(|&i| vectors[i].clone()));
        }
    }
    relevant.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    let shortest = vectors.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    (relevant, shortest)
}

/// Shortest nonzero vector length of the dual lattice.
pub fn dual_min_gap(basis: &LatticeBasis) -> f64 {
    voronoi_relevant(&basis.dual_generator()).1
}

struct PhiModel {
    dim: usize,
    centred: Vec<Vec<f64>>,
    probs: Vec<f64>,
    trace: f64,
    top_eigenvalue: f64,
    mean_norm: f64,
}

struct Expansion {
    abs: f64,
    /// `||E[e^{i c.Y} Y]||`
    first_moment: f64,
    /// gradient of `|phi|^2`
    grad_sq: Vec<f64>,
}

impl PhiModel {
    fn new(law: &LatticeLaw) -> Result<Self> {
        let m = law.moments()?;
        let mu: Vec<f64> = m.mu.iter().copied().collect();
        let top_eigenvalue = m.m.clone().symmetric_eigenvalues().max();
        Ok(Self {
            dim: law.dim(),
            centred: law
                .atoms()
                .iter()
                .map(|a| a.point.iter().zip(&mu).map(|(x, m)| *x as f64 - m).collect())
                .collect(),
            probs: law.atoms().iter().map(|a| a.prob).collect(),
            trace: m.m.trace(),
            top_eigenvalue,
            mean_norm: law.mean_distance(&mu),
        })
    }

    fn expand(&self, c: &[f64]) -> Expansion {
        let mut re = 0.0;
        let mut im = 0.0;
        let mut g_re = vec![0.0; self.dim];
        let mut g_im = vec![0.0; self.dim];
        for (y, p) in self.centred.iter().zip(&self.probs) {
            let theta: f64 = y.iter().zip(c).map(|(a, b)| a * b).sum();
            let (s, co) = theta.sin_cos();
            re += p * co;
            im += p * s;
            for i in 0..self.dim {
                g_re[i] += p * co * y[i];
                g_im[i] += p * s * y[i];
            }
        }
        let first_moment = g_re.iter().chain(&g_im).map(|v| v * v).sum::<f64>().sqrt();
        // d/dt Re = -E[sin Y] Y = -g_im, d/dt Im = g_re
        let grad_sq = (0..self.dim).map(|i| 2.0 * (-re * g_im[i] + im * g_re[i])).collect();
        Expansion {
            abs: (re * re + im * im).sqrt(),
            first_moment,
            grad_sq,
        }
    }

    fn abs_at(&self, c: &[f64]) -> f64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (y, p) in self.centred.iter().zip(&self.probs) {
            let theta: f64 = y.iter().zip(c).map(|(a, b)| a * b).sum();
            let (s, co) = theta.sin_cos();
            re += p * co;
            im += p * s;
        }
        (re * re + im * im).sqrt()
    }

    /// Upper bound for `|phi|` over `{t : ||t - c|| <= r, ||t|| >= rho}`.
    ///
    /// Combines Taylor bounds for `|phi|` with one for `|phi|^2`, whose Hessian
    /// is dominated by `2M`; the latter uses `c.delta >= (rho^2 - |c|^2 - r^2)/2`
    /// on the admissible set, which keeps boxes straddling the rho-sphere prunable.
    fn upper_bound(&self, c: &[f64], r: f64, rho: f64) -> f64 {
        let e = self.expand(c);
        let first = e.abs + self.mean_norm * r;
        let second = e.abs + e.first_moment * r + 0.5 * r * r * self.trace;

        let c2: f64 = c.iter().map(|v| v * v).sum();
        let cn = c2.sqrt();
        let (kappa, ortho) = if cn > 0.0 {
            let along: f64 = e.grad_sq.iter().zip(c).map(|(g, v)| g * v).sum::<f64>() / c2;
            let rest: f64 = e
                .grad_sq
                .iter()
                .zip(c)
                .map(|(g, v)| (g - along * v).powi(2))
                .sum::<f64>()
                .sqrt();
            (-along, rest)
        } else {
            (0.0, e.grad_sq.iter().map(|g| g * g).sum::<f64>().sqrt())
        };
        // c.delta ranges over [low, cn r] on the admissible set
        let low = (0.5 * (rho * rho - c2 - r * r)).max(-cn * r).min(cn * r);
        let linear = if kappa > 0.0 { -kappa * low } else { -kappa * cn * r };
        let sq = e.abs * e.abs + linear + ortho * r + self.top_eigenvalue * r * r;
        let third = sq.max(0.0).sqrt();
        first.min(second).min(third).min(1.0)
    }
}

#[derive(Clone)]
struct Cell {
    lo: Vec<i64>,
    hi: Vec<i64>,
    bound: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.lo.cmp(&self.lo))
            .then_with(|| other.hi.cmp(&self.hi))
    }
}

struct Scan<'a> {
    model: &'a PhiModel,
    relevant: &'a [DVector<f64>],
    step: f64,
    rho: f64,
    threshold: f64,
    tolerance: f64,
}

#[derive(Default)]
struct ScanResult {
    best: f64,
    bound: f64,
    violations: Vec<Vec<i64>>,
    evaluated: u64,
}

impl Scan<'_> {
    fn in_cell(&self, t: &[f64]) -> bool {
        self.relevant.iter().all(|v| {
            let dot: f64 = v.iter().zip(t).map(|(a, b)| a * b).sum();
            dot <= 0.5 * v.norm_squared() * (1.0 + 1e-9)
        })
    }

    /// Box lies entirely outside the cell or entirely inside the rho-ball.
    fn excluded(&self, lo: &[i64], hi: &[i64]) -> bool {
        let far: f64 = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| ((*a as f64).abs().max((*b as f64).abs()) * self.step).powi(2))
            .sum::<f64>()
            .sqrt();
        if far < self.rho * (1.0 - 1e-12) {
            return true;
        }
        self.relevant.iter().any(|v| {
            let min_dot: f64 = v
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(vi, (a, b))| (vi * *a as f64 * self.step).min(vi * *b as f64 * self.step))
                .sum();
            min_dot > 0.5 * v.norm_squared() * (1.0 + 1e-9)
        })
    }

    fn bound(&self, lo: &[i64], hi: &[i64]) -> f64 {
        let c: Vec<f64> = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| 0.5 * (*a + *b) as f64 * self.step)
            .collect();
        let r = 0.5
            * self.step
            * lo.iter()
                .zip(hi)
                .map(|(a, b)| ((b - a) as f64).powi(2))
                .sum::<f64>()
                .sqrt();
        self.model.upper_bound(&c, r, self.rho)
    }

    fn run(&self, lo: Vec<i64>, hi: Vec<i64>) -> ScanResult {
        let mut out = ScanResult {
            best: 0.0,
            bound: 0.0,
            ..Default::default()
        };
        if self.excluded(&lo, &hi) {
            return out;
        }
        let mut heap = BinaryHeap::new();
        let bound = self.bound(&lo, &hi);
        heap.push(Cell { lo, hi, bound });
        while let Some(cell) = heap.pop() {
            if cell.bound < self.threshold && cell.bound <= out.best + self.tolerance {
                out.bound = out.bound.max(cell.bound);
                // everything left in the heap has a smaller bound
                for rest in heap.drain() {
                    out.bound = out.bound.max(rest.bound);
                }
                break;
            }
            let widest = (0..cell.lo.len())
                .max_by_key(|&i| (cell.hi[i] - cell.lo[i], std::cmp::Reverse(i)))
                .expect("non-empty");
            if cell.hi[widest] == cell.lo[widest] {
                let t: Vec<f64> = cell.lo.iter().map(|v| *v as f64 * self.step).collect();
                let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < self.rho * (1.0 - 1e-12) || !self.in_cell(&t) {
                    continue;
                }
                let v = self.model.abs_at(&t);
                out.evaluated += 1;
                out.best = out.best.max(v);
                out.bound = out.bound.max(v);
                if v >= self.threshold {
                    out.violations.push(cell.lo.clone());
                }
                continue;
            }
            // incumbent: the grid point nearest the box centre, so pruning starts early
            let t: Vec<f64> = cell
                .lo
                .iter()
                .zip(&cell.hi)
                .map(|(a, b)| (*a + *b).div_euclid(2) as f64 * self.step)
                .collect();
            let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm >= self.rho * (1.0 - 1e-12) && self.in_cell(&t) {
                let v = self.model.abs_at(&t);
                out.evaluated += 1;
                out.best = out.best.max(v);
            }
            let mid = cell.lo[widest] + (cell.hi[widest] - cell.lo[widest]).div_euclid(2);
            let mut left_hi = cell.hi.clone();
            left_hi[widest] = mid;
            let mut right_lo = cell.lo.clone();
            right_lo[widest] = mid + 1;
            for (lo, hi) in [(cell.lo.clone(), left_hi), (right_lo, cell.hi.clone())] {
                if !self.excluded(&lo, &hi) {
                    let bound = self.bound(&lo, &hi);
                    heap.push(Cell { lo, hi, bound });
                }
            }
        }
        out
    }
}

/// Scans one fundamental domain of the dual lattice (the Voronoi cell of the
/// origin) on the grid `grid_step Z^d` for points off the `rho`-ball where
/// `|phi|` comes within `10 x` the second-order grid slack of 1.
pub fn check_minimality(law: &LatticeLaw, basis: &LatticeBasis, rho: f64, grid_step: f64) -> Result<MinimalityReport> {
    if law.dim() != basis.dim() {
        return Err(Error::BadParameter("law and basis dimensions differ".into()));
    }
    if !(grid_step > 0.0) || grid_step > rho / 4.0 {
        return Err(Error::GridTooCoarse {
            grid_step,
            limit: rho / 4.0,
        });
    }
    let gen = basis.dual_generator();
    let (relevant, gap) = voronoi_relevant(&gen);
    if !(rho > 0.0 && rho < 0.5 * gap) {
        return Err(Error::BadParameter(format!(
            "rho = {rho} must lie in (0, {:.6}), half the shortest dual vector",
            0.5 * gap
        )));
    }
    let is_support_valid = verify_support(law, basis);
    if law.tail().is_some() {
        return scan_tail_law(law, &relevant, rho, grid_step, is_support_valid);
    }
    let model = PhiModel::new(law)?;
    let d = law.dim();
    let half_diag = 0.5 * grid_step * (d as f64).sqrt();
    let slack = 0.5 * model.trace * half_diag * half_diag;
    let threshold = 1.0 - 10.0 * slack;
    let longest = relevant.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let reach = 0.5 * (d as f64).sqrt() * longest;
    let mut k = 1i64;
    while (k as f64) * grid_step < reach {
        k *= 2;
    }
    let scan = Scan {
        model: &model,
        relevant: &relevant,
        step: grid_step,
        rho,
        threshold,
        tolerance: slack,
    };
    // orthants are scanned independently and merged in a fixed order
    let orthants: Vec<(Vec<i64>, Vec<i64>)> = (0..1usize << d)
        .map(|mask| {
            let lo = (0..d).map(|i| if mask >> i & 1 == 1 { 0 } else { -k }).collect();
            let hi = (0..d).map(|i| if mask >> i & 1 == 1 { k } else { -1 }).collect();
            (lo, hi)
        })
        .collect();
    let results: Vec<ScanResult> = orthants.into_par_iter().map(|(lo, hi)| scan.run(lo, hi)).collect();
    let mut best = 0.0f64;
    let mut bound = 0.0f64;
    let mut evaluated = 0;
    let mut violations: Vec<Vec<i64>> = Vec::new();
    for r in results {
        best = best.max(r.best);
        bound = bound.max(r.bound);
        evaluated += r.evaluated;
        violations.extend(r.violations);
    }
    violations.sort();
    let candidate_violations = violations
        .into_iter()
        .map(|m| m.iter().map(|v| *v as f64 * grid_step).collect())
        .collect();
    Ok(MinimalityReport {
        is_support_valid,
        candidate_violations,
        c_rho: -best.ln(),
        rho,
        grid_resolution: grid_step,
        max_abs_phi: best,
        max_abs_phi_bound: bound.max(best),
        threshold,
        grid_points_evaluated: evaluated,
    })
}

fn scan_tail_law(
    law: &LatticeLaw,
    relevant: &[DVector<f64>],
    rho: f64,
    grid_step: f64,
    is_support_valid: bool,
) -> Result<MinimalityReport> {
    // no finite first moment, so no Lipschitz slack: plain scan with a fixed tolerance
    let threshold = 1.0 - 1e-9;
    let half_width = relevant.iter().map(|v| 0.5 * v[0].abs()).fold(f64::INFINITY, f64::min);
    let count = (half_width / grid_step * (1.0 + 1e-12)).floor() as i64;
    let mut best = 0.0f64;
    let mut violations = Vec::new();
    let mut evaluated = 0;
    for m in -count..=count {
        let t = m as f64 * grid_step;
        if t.abs() < rho * (1.0 - 1e-12) {
            continue;
        }
        let v = law.charfn(&[t]).norm();
        evaluated += 1;
        best = best.max(v);
        if v >= threshold {
            violations.push(vec![t]);
        }
    }
    Ok(MinimalityReport {
        is_support_valid,
        candidate_violations: violations,
        c_rho: -best.ln(),
        rho,
        grid_resolution: grid_step,
        max_abs_phi: best,
        max_abs_phi_bound: best,
        threshold,
        grid_points_evaluated: evaluated,
    })
}

/// Default `rho = pi / 8`.
pub const DEFAULT_RHO: f64 = PI / 8.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increments::{make_lazy_ssrw, make_point_mass, make_ssrw};
    use approx::assert_relative_eq;

    #[test]
    fn ssrw_bases_match_examples() {
        let b2 = ssrw_basis(2).unwrap();
        assert_eq!(b2.matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]));
        assert_eq!(b2.offset().as_slice(), &[-1.0, 0.0]);
        let b3 = ssrw_basis(3).unwrap();
        assert_eq!(
            b3.matrix(),
            &DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0])
        );
        let b4 = ssrw_basis(4).unwrap();
        assert_eq!(
            b4.matrix(),
            &DMatrix::from_row_slice(
                4,
                4,
                &[1., 1., 0., 0., 0., 1., 1., 0., 0., 0., 1., 1., -1., 0., 0., 1.]
            )
        );
        let b5 = ssrw_basis(5).unwrap();
        assert_eq!(b5.matrix()[(0, 2)], 1.0);
        assert_eq!(b5.matrix()[(3, 0)], 1.0);
        for d in 1..=6 {
            let b = ssrw_basis(d).unwrap();
            assert_eq!(b.h().round(), 2.0);
            assert_relative_eq!(b.h(), 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn support_examples() {
        let b2 = ssrw_basis(2).unwrap();
        assert!(verify_support(&make_ssrw(2).unwrap(), &b2));
        let z = b2.coordinates(&[1.0, 0.0]);
        assert_relative_eq!(z[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(z[1], 1.0, epsilon = 1e-12);
        assert!(verify_support(&make_ssrw(1).unwrap(), &LatticeBasis::unit(1)));
        assert!(verify_support(&make_lazy_ssrw(1).unwrap(), &LatticeBasis::unit(1)));
        assert!(!verify_support(&make_lazy_ssrw(1).unwrap(), &ssrw_basis(1).unwrap()));
    }

    #[test]
    fn reduction_examples() {
        let r = reduce_to_unit(&make_ssrw(1).unwrap(), &ssrw_basis(1).unwrap()).unwrap();
        let mut pts: Vec<i64> = r.atoms().iter().map(|a| a.point[0]).collect();
        pts.sort();
        assert_eq!(pts, vec![0, 1]);
        let r2 = reduce_to_unit(&make_ssrw(2).unwrap(), &ssrw_basis(2).unwrap()).unwrap();
        let find = |p: &[i64]| r2.atoms().iter().any(|a| a.point == p);
        assert!(find(&[1, 1]) && find(&[0, 0]));
        let b = LatticeBasis::from_rows(&[&[1.0]], &[3.0]).unwrap();
        let r3 = reduce_to_unit(&make_point_mass(&[3]).unwrap(), &b).unwrap();
        assert_eq!(r3.atoms()[0].point, vec![0]);
        assert!(matches!(
            reduce_to_unit(&make_lazy_ssrw(1).unwrap(), &ssrw_basis(1).unwrap()),
            Err(Error::NotOnLattice { .. })
        ));
    }

    #[test]
    fn det_bound_examples() {
        assert_eq!(det_bound(&make_ssrw(1).unwrap()).unwrap(), 2.0);
        assert_eq!(det_bound(&make_lazy_ssrw(2).unwrap()).unwrap(), 1.0);
        assert_eq!(det_bound(&make_ssrw(2).unwrap()).unwrap(), 2.0);
        assert!(matches!(det_bound(&make_point_mass(&[1]).unwrap()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn minimality_d1() {
        let law = make_ssrw(1).unwrap();
        let rho = DEFAULT_RHO;
        let good = check_minimality(&law, &ssrw_basis(1).unwrap(), rho, rho / 16.0).unwrap();
        assert!(good.is_minimal());
        assert_relative_eq!(good.c_rho, -(PI / 8.0).cos().ln(), epsilon = 1e-12);
        assert_relative_eq!(good.c_rho, 0.0792, epsilon = 1e-4);
        let bad = check_minimality(&law, &LatticeBasis::unit(1), rho, rho / 16.0).unwrap();
        assert!(!bad.is_minimal());
        assert!(bad.candidate_violations.iter().any(|t| (t[0] - PI).abs() <= rho / 16.0));
    }

    #[test]
    fn minimality_rejects_coarse_grid() {
        let law = make_ssrw(1).unwrap();
        let err = check_minimality(&law, &ssrw_basis(1).unwrap(), 0.3, 0.1).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
    }

    #[test]
    fn relevant_vectors_of_square_lattice() {
        let (rel, gap) = voronoi_relevant(&DMatrix::identity(2, 2));
        assert_eq!(rel.len(), 4);
        assert_relative_eq!(gap, 1.0);
        let hex = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 3f64.sqrt() / 2.0]);
        assert_eq!(voronoi_relevant(&hex).0.len(), 6);
    }
}
