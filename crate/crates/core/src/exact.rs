//! Exact distribution of the weighted sum `Y_n = sum_j j X_j` by repeated
//! convolution, its embedding as the law of `n^{-1/2} G_n` on the affine
//! lattice `n^{-3/2}(n(n+1)b/2 + H Z^d)`, and the local limit error.

use crate::error::{Error, Result};
use crate::increments::LatticeLaw;
use crate::lattice::{reduce_to_unit, verify_support, LatticeBasis};
use crate::limits::GaussianLimit;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

/// Default cap on the number of cells in the final index box.
pub const DEFAULT_BUDGET: u128 = 40_000_000;

/// Dimensions up to this value use dense boxed arrays.
const DENSE_MAX_DIM: usize = 2;

/// Affine map `z -> offset + step * B z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub offset: DVector<f64>,
    pub step: f64,
    pub matrix: DMatrix<f64>,
}

impl Embedding {
    pub fn identity(d: usize) -> Self {
        Self {
            offset: DVector::zeros(d),
            step: 1.0,
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn apply(&self, z: &[i64]) -> Vec<f64> {
        let d = self.offset.len();
        (0..d)
            .map(|i| {
                let lin: f64 = (0..d).map(|j| self.matrix[(i, j)] * z[j] as f64).sum();
                self.offset[i] + self.step * lin
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
enum Table {
    /// Row-major over the index box, last coordinate fastest.
    Dense(Vec<f64>),
    Sparse(BTreeMap<Vec<i64>, f64>),
}

/// A probability mass function on an integer index box together with its
/// embedding into `R^d`.
#[derive(Debug, Clone)]
pub struct AffinePMF {
    dim: usize,
    n: u64,
    lo: Vec<i64>,
    hi: Vec<i64>,
    table: Table,
    embed: Embedding,
}

impl AffinePMF {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Inclusive bounds per coordinate.
    pub fn index_box(&self) -> (&[i64], &[i64]) {
        (&self.lo, &self.hi)
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embed
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.table, Table::Dense(_))
    }

    /// Number of cells in the index box.
    pub fn box_cells(&self) -> u128 {
        box_cells(&self.lo, &self.hi)
    }

    pub fn prob(&self, z: &[i64]) -> f64 {
        match &self.table {
            Table::Dense(v) => flat_index(&self.lo, &self.hi, z).map_or(0.0, |k| v[k]),
            Table::Sparse(m) => m.get(z).copied().unwrap_or(0.0),
        }
    }

    /// Every stored cell in lexicographic index order, zeros included for dense tables.
    pub fn cells(&self) -> Box<dyn Iterator<Item = (Vec<i64>, f64)> + '_> {
        match &self.table {
            Table::Dense(v) => {
                let (lo, hi) = (self.lo.clone(), self.hi.clone());
                Box::new(v.iter().enumerate().map(move |(k, p)| (unflatten(&lo, &hi, k), *p)))
            }
            Table::Sparse(m) => Box::new(m.iter().map(|(z, p)| (z.clone(), *p))),
        }
    }

    /// Cells with positive mass in lexicographic index order.
    pub fn support(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.cells().filter(|(_, p)| *p > 0.0)
    }

    /// The point of `R^d` carried by index `z`.
    pub fn point(&self, z: &[i64]) -> Vec<f64> {
        self.embed.apply(z)
    }

    pub fn total_mass(&self) -> f64 {
        match &self.table {
            Table::Dense(v) => v.iter().sum(),
            Table::Sparse(m) => m.values().sum(),
        }
    }

    /// Mean and covariance of the index `z`.
    pub fn index_moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dim;
        let mut mean = DVector::zeros(d);
        let mut mass = 0.0;
        for (z, p) in self.support() {
            mass += p;
            for i in 0..d {
                mean[i] += p * z[i] as f64;
            }
        }
        mean /= mass;
        let mut cov = DMatrix::zeros(d, d);
        for (z, p) in self.support() {
            for i in 0..d {
                for j in 0..d {
                    cov[(i, j)] += p * (z[i] as f64 - mean[i]) * (z[j] as f64 - mean[j]);
                }
            }
        }
        cov /= mass;
        (mean, cov)
    }

    /// CSV with columns `index_1.., x_1.., prob`, positive cells only.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("index_{i}")).collect();
        header.extend((1..=self.dim).map(|i| format!("x_{i}")));
        header.push("prob".into());
        w.write_record(&header)?;
        for (z, p) in self.support() {
            let mut row: Vec<String> = z.iter().map(|v| v.to_string()).collect();
            row.extend(self.point(&z).iter().map(|v| format!("{v:.17e}")));
            row.push(format!("{p:.17e}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn box_cells(lo: &[i64], hi: &[i64]) -> u128 {
    lo.iter().zip(hi).map(|(a, b)| (b - a + 1).max(0) as u128).product()
}

fn flat_index(lo: &[i64], hi: &[i64], z: &[i64]) -> Option<usize> {
    let mut k = 0usize;
    for i in 0..lo.len() {
        if z[i] < lo[i] || z[i] > hi[i] {
            return None;
        }
        k = k * (hi[i] - lo[i] + 1) as usize + (z[i] - lo[i]) as usize;
    }
    Some(k)
}

fn unflatten(lo: &[i64], hi: &[i64], k: usize) -> Vec<i64> {
    let mut z = vec![0; lo.len()];
    unflatten_into(lo, hi, k, &mut z);
    z
}

fn unflatten_into(lo: &[i64], hi: &[i64], mut k: usize, z: &mut [i64]) {
    for i in (0..lo.len()).rev() {
        let w = (hi[i] - lo[i] + 1) as usize;
        z[i] = lo[i] + (k % w) as i64;
        k /= w;
    }
}

/// Law of `sum_{j=1}^n j X_j` for a finite law on `Z^d`, with the default budget.
pub fn exact_yn(law: &LatticeLaw, n: u64) -> Result<AffinePMF> {
    exact_yn_with_budget(law, n, DEFAULT_BUDGET)
}

/// Law of `sum_{j=1}^n j X_j`; fails with `BudgetExceeded` when the final
/// index box holds more than `budget` cells.
pub fn exact_yn_with_budget(law: &LatticeLaw, n: u64, budget: u128) -> Result<AffinePMF> {
    if n == 0 {
        return Err(Error::BadParameter("horizon n must be positive".into()));
    }
    if !law.is_finite() {
        return Err(Error::Unsupported("exact convolution needs a finite-support law".into()));
    }
    let d = law.dim();
    let atoms: Vec<(Vec<i64>, f64)> = law.atoms().iter().map(|a| (a.point.clone(), a.prob)).collect();
    let (amin, amax) = atom_range(law);
    let (final_lo, final_hi) = final_box(&amin, &amax, n);
    let states = box_states(&final_lo, &final_hi);
    if states > budget || final_lo.iter().chain(&final_hi).any(|v| v.unsigned_abs() > i64::MAX as u128 / 4) {
        return Err(Error::BudgetExceeded { states, budget });
    }
    let dense = d <= DENSE_MAX_DIM;
    let (lo, hi, table) = if dense {
        let (lo, hi, v) = convolve_dense(&atoms, &amin, &amax, n);
        (lo, hi, Table::Dense(v))
    } else {
        let m = convolve_sparse(&atoms, n);
        let lo = final_lo.iter().map(|&v| v as i64).collect();
        let hi = final_hi.iter().map(|&v| v as i64).collect();
        (lo, hi, Table::Sparse(m))
    };
    Ok(AffinePMF {
        dim: d,
        n,
        lo,
        hi,
        table,
        embed: Embedding::identity(d),
    })
}

/// Cells in the index box of `sum_{j<=n} j X_j` for a finite law on `Z^d`.
pub fn exact_states(law: &LatticeLaw, n: u64) -> u128 {
    let (amin, amax) = atom_range(law);
    let (lo, hi) = final_box(&amin, &amax, n);
    box_states(&lo, &hi)
}

fn atom_range(law: &LatticeLaw) -> (Vec<i64>, Vec<i64>) {
    let d = law.dim();
    let amin = (0..d).map(|i| law.atoms().iter().map(|a| a.point[i]).min().unwrap_or(0)).collect();
    let amax = (0..d).map(|i| law.atoms().iter().map(|a| a.point[i]).max().unwrap_or(0)).collect();
    (amin, amax)
}

fn final_box(amin: &[i64], amax: &[i64], n: u64) -> (Vec<i128>, Vec<i128>) {
    let tri = (n as i128) * (n as i128 + 1) / 2;
    (
        amin.iter().map(|&a| a as i128 * tri).collect(),
        amax.iter().map(|&a| a as i128 * tri).collect(),
    )
}

fn box_states(lo: &[i128], hi: &[i128]) -> u128 {
    lo.iter()
        .zip(hi)
        .map(|(a, b)| (b - a + 1) as u128)
        .fold(1u128, |acc, w| acc.saturating_mul(w))
}

/// Gather convolution over boxed arrays, ascending in `j`.
fn convolve_dense(atoms: &[(Vec<i64>, f64)], amin: &[i64], amax: &[i64], n: u64) -> (Vec<i64>, Vec<i64>, Vec<f64>) {
    let d = amin.len();
    let mut lo = vec![0i64; d];
    let mut hi = vec![0i64; d];
    let mut cur = vec![1.0];
    let groups = mirror_groups(atoms);
    for j in 1..=n as i64 {
        let new_lo: Vec<i64> = (0..d).map(|i| lo[i] + j * amin[i]).collect();
        let new_hi: Vec<i64> = (0..d).map(|i| hi[i] + j * amax[i]).collect();
        let shifts: Vec<(Vec<i64>, f64)> =
            atoms.iter().map(|(a, p)| (a.iter().map(|v| v * j).collect(), *p)).collect();
        let cells = box_cells(&new_lo, &new_hi) as usize;
        let mut next = vec![0.0; cells];
        let (olo, ohi, old) = (&lo, &hi, &cur);
        next.par_chunks_mut(4096).enumerate().for_each(|(chunk, out)| {
            let mut src = vec![0i64; d];
            let mut y = vec![0i64; d];
            for (off, slot) in out.iter_mut().enumerate() {
                unflatten_into(&new_lo, &new_hi, chunk * 4096 + off, &mut y);
                let mut acc = 0.0;
                for group in &groups {
                    let mut part = 0.0;
                    for &g in group {
                        let (s, p) = &shifts[g];
                        for i in 0..d {
                            src[i] = y[i] - s[i];
                        }
                        if let Some(k) = flat_index(olo, ohi, &src) {
                            part += p * old[k];
                        }
                    }
                    acc += part;
                }
                *slot = acc;
            }
        });
        lo = new_lo;
        hi = new_hi;
        cur = next;
    }
    (lo, hi, cur)
}

/// Atoms paired with their reflections of equal weight. Summing each pair
/// first makes the table of a symmetric law exactly symmetric.
fn mirror_groups(atoms: &[(Vec<i64>, f64)]) -> Vec<Vec<usize>> {
    let mut used = vec![false; atoms.len()];
    let mut groups = Vec::new();
    for i in 0..atoms.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let neg: Vec<i64> = atoms[i].0.iter().map(|v| -v).collect();
        let partner = (i + 1..atoms.len()).find(|&k| !used[k] && atoms[k].0 == neg && atoms[k].1 == atoms[i].1);
        match partner {
            Some(k) => {
                used[k] = true;
                groups.push(vec![i, k]);
            }
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// Scatter convolution over an ordered map, ascending in `j`.
fn convolve_sparse(atoms: &[(Vec<i64>, f64)], n: u64) -> BTreeMap<Vec<i64>, f64> {
    let d = atoms[0].0.len();
    let mut cur = BTreeMap::new();
    cur.insert(vec![0i64; d], 1.0);
    for j in 1..=n as i64 {
        let mut next: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (z, p) in &cur {
            for (a, q) in atoms {
                let y: Vec<i64> = z.iter().zip(a).map(|(u, v)| u + j * v).collect();
                *next.entry(y).or_insert(0.0) += p * q;
            }
        }
        cur = next;
    }
    cur
}

/// Law of `n^{-1/2} G_n`: index `z` carries the point `n^{-3/2}(n(n+1)b/2 + H z)`.
pub fn exact_gn_pmf(law: &LatticeLaw, basis: &LatticeBasis, n: u64) -> Result<AffinePMF> {
    exact_gn_pmf_with_budget(law, basis, n, DEFAULT_BUDGET)
}

pub fn exact_gn_pmf_with_budget(law: &LatticeLaw, basis: &LatticeBasis, n: u64, budget: u128) -> Result<AffinePMF> {
    if !verify_support(law, basis) {
        return Err(Error::BadParameter("law is not supported on the given lattice".into()));
    }
    let unit = reduce_to_unit(law, basis)?;
    let mut pmf = exact_yn_with_budget(&unit, n, budget)?;
    let nf = n as f64;
    let step = nf.powf(-1.5);
    let tri = 0.5 * nf * (nf + 1.0);
    pmf.embed = Embedding {
        offset: basis.offset() * (tri * step),
        step,
        matrix: basis.matrix().clone(),
    };
    Ok(pmf)
}

/// Outcome of the local limit comparison at one horizon.
#[derive(Debug, Clone, Serialize)]
pub struct LcltReport {
    pub n: u64,
    /// Max over the index box of `|(n^{3d/2}/h) p_n(x) - density(x - drift)|`.
    pub sup_error: f64,
    /// Lexicographically smallest maximiser among near-ties.
    pub argmax: Vec<f64>,
    /// Same statistic restricted to `|x| <= 5`.
    pub sup_error_ball: f64,
    /// Largest limit density value at lattice points outside the index box.
    pub guard: f64,
    pub runtime_ms: f64,
}

impl LcltReport {
    /// `max(sup_error, guard)`, a bound for the supremum over the whole lattice.
    pub fn sup_with_guard(&self) -> f64 {
        self.sup_error.max(self.guard)
    }
}

/// Local limit error at horizon `n` on the exact law of `n^{-1/2} G_n`.
pub fn lclt_sup_error(law: &LatticeLaw, basis: &LatticeBasis, n: u64) -> Result<LcltReport> {
    let start = Instant::now();
    let moments = law.moments()?;
    let limit = GaussianLimit::from_moments(&moments)?;
    let pmf = exact_gn_pmf(law, basis, n)?;
    let mut report = lclt_error_of(&pmf, &limit, basis.h())?;
    report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Local limit error of an embedded law against a Gaussian limit.
pub fn lclt_error_of(pmf: &AffinePMF, limit: &GaussianLimit, h: f64) -> Result<LcltReport> {
    let d = pmf.dim();
    let n = pmf.n();
    let scale = (n as f64).powf(1.5 * d as f64) / h;
    let drift = limit.shifted(n, &vec![0.0; d]);
    let mut best = -1.0f64;
    let mut best_x: Vec<f64> = Vec::new();
    let mut ball = 0.0f64;
    let mut eval = |z: &[i64], p: f64| {
        let x = pmf.point(z);
        let y: Vec<f64> = x.iter().zip(&drift).map(|(a, b)| a + b).collect();
        let err = (scale * p - limit.density(&y)).abs();
        let tie = (err - best).abs() <= 1e-12 * best.max(f64::MIN_POSITIVE);
        if (err > best && !tie) || (tie && lex_less(&x, &best_x)) {
            best = err;
            best_x = x.clone();
        }
        if x.iter().map(|v| v * v).sum::<f64>() <= 25.0 {
            ball = ball.max(err);
        }
    };
    match &pmf.table {
        Table::Dense(_) => {
            for (z, p) in pmf.cells() {
                eval(&z, p);
            }
        }
        Table::Sparse(m) => {
            // zero cells of the box are lattice points too
            let (lo, hi) = (&pmf.lo, &pmf.hi);
            let cells = box_cells(lo, hi);
            if cells > DEFAULT_BUDGET {
                return Err(Error::BudgetExceeded {
                    states: cells,
                    budget: DEFAULT_BUDGET,
                });
            }
            for k in 0..cells as usize {
                let z = unflatten(lo, hi, k);
                let p = m.get(&z).copied().unwrap_or(0.0);
                eval(&z, p);
            }
        }
    }
    let guard = outside_box_peak(pmf, limit);
    Ok(LcltReport {
        n,
        sup_error: best.max(0.0),
        argmax: best_x,
        sup_error_ball: ball,
        guard,
        runtime_ms: 0.0,
    })
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    if b.is_empty() {
        return true;
    }
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Peak of the shifted limit density over lattice points beyond the index box,
/// bounded through the half-spaces `z_i >= hi_i + 1` and `z_i <= lo_i - 1`.
fn outside_box_peak(pmf: &AffinePMF, limit: &GaussianLimit) -> f64 {
    let d = pmf.dim();
    let e = pmf.embedding();
    let Some(inv) = e.matrix.clone().try_inverse() else {
        return f64::NAN;
    };
    let centre = DVector::from_vec(limit.shifted(pmf.n(), &vec![0.0; d]).iter().map(|v| -v).collect());
    let peak = limit.density(&vec![0.0; d]);
    let mut worst = 0.0f64;
    for i in 0..d {
        // index coordinate i of the Gaussian centre
        let row = inv.row(i).transpose() / e.step;
        let at_centre = row.dot(&(&centre - &e.offset));
        let spread = (row.transpose() * limit.covariance() * &row)[(0, 0)];
        for dist in [pmf.hi[i] as f64 + 1.0 - at_centre, at_centre - (pmf.lo[i] as f64 - 1.0)] {
            let v = if dist <= 0.0 {
                peak
            } else {
                peak * (-1.5 * dist * dist / spread).exp()
            };
            worst = worst.max(v);
        }
    }
    worst
}

/// Summary statistics of a table.
#[derive(Debug, Clone, Serialize)]
pub struct PmfReport {
    pub mass: f64,
    pub atoms: usize,
    pub box_cells: u128,
    pub utilization: f64,
    pub min_prob: f64,
    pub max_prob: f64,
    pub entropy: f64,
    pub empty: bool,
}

pub fn pmf_marginal_check(pmf: &AffinePMF) -> PmfReport {
    let mut mass = 0.0;
    let mut atoms = 0usize;
    let mut min_prob = f64::INFINITY;
    let mut max_prob = 0.0f64;
    let mut entropy = 0.0;
    for (_, p) in pmf.support() {
        mass += p;
        atoms += 1;
        min_prob = min_prob.min(p);
        max_prob = max_prob.max(p);
        entropy -= p * p.ln();
    }
    let cells = pmf.box_cells();
    PmfReport {
        mass,
        atoms,
        box_cells: cells,
        utilization: if cells > 0 { atoms as f64 / cells as f64 } else { 0.0 },
        min_prob: if atoms > 0 { min_prob } else { 0.0 },
        max_prob,
        entropy,
        empty: atoms == 0,
    }
}

/// CSV with columns `n, E_n, argmax_x, runtime_ms`; coordinates of the
/// maximiser are joined by `;`.
pub fn write_lclt_csv<W: Write>(reports: &[LcltReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "E_n", "argmax_x", "runtime_ms"])?;
    for r in reports {
        let x: Vec<String> = r.argmax.iter().map(|v| format!("{v:.17e}")).collect();
        w.write_record([
            r.n.to_string(),
            format!("{:.17e}", r.sup_error),
            x.join(";"),
            format!("{:.3}", r.runtime_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increments::{make_lazy_ssrw, make_point_mass, make_ssrw};
    use crate::lattice::ssrw_basis;

    #[test]
    fn ssrw_small_n() {
        let law = make_ssrw(1).unwrap();
        let y1 = exact_yn(&law, 1).unwrap();
        assert_eq!(y1.support().collect::<Vec<_>>(), vec![(vec![-1], 0.5), (vec![1], 0.5)]);
        let y2 = exact_yn(&law, 2).unwrap();
        let want = vec![(vec![-3], 0.25), (vec![-1], 0.25), (vec![1], 0.25), (vec![3], 0.25)];
        assert_eq!(y2.support().collect::<Vec<_>>(), want);
    }

    #[test]
    fn embedded_ssrw() {
        let law = make_ssrw(1).unwrap();
        let basis = ssrw_basis(1).unwrap();
        let g = exact_gn_pmf(&law, &basis, 2).unwrap();
        let s = 2f64.powf(-1.5);
        let pts: Vec<(f64, f64)> = g.support().map(|(z, p)| (g.point(&z)[0], p)).collect();
        assert_eq!(pts.len(), 4);
        for ((x, p), want) in pts.iter().zip([-3.0, -1.0, 1.0, 3.0]) {
            assert!((x - want * s).abs() < 1e-15);
            assert_eq!(*p, 0.25);
        }
        assert!((g.embedding().offset[0] - (-3.0 * s)).abs() < 1e-15);
    }

    #[test]
    fn point_mass() {
        let law = make_point_mass(&[1]).unwrap();
        let basis = LatticeBasis::from_rows(&[&[1.0]], &[1.0]).unwrap();
        for n in [1u64, 5, 9] {
            let g = exact_gn_pmf(&law, &basis, n).unwrap();
            let sup: Vec<_> = g.support().collect();
            assert_eq!(sup.len(), 1);
            let want = (n as f64 + 1.0) / 2.0 / (n as f64).sqrt();
            assert!((g.point(&sup[0].0)[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_matches_dense_marginal() {
        let law = make_ssrw(3).unwrap();
        let y = exact_yn(&law, 4).unwrap();
        assert!(!y.is_dense());
        assert!((y.total_mass() - 1.0).abs() < 1e-14);
        let (mean, cov) = y.index_moments();
        assert!(mean.norm() < 1e-14);
        // M = I/3 per coordinate, sum j^2 = 30
        for i in 0..3 {
            assert!((cov[(i, i)] - 10.0).abs() < 1e-10);
        }
    }

    #[test]
    fn budget() {
        let law = make_lazy_ssrw(2).unwrap();
        match exact_yn_with_budget(&law, 100, 1000) {
            Err(Error::BudgetExceeded { states, budget }) => {
                assert_eq!(budget, 1000);
                assert_eq!(states, 10101u128 * 10101);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn report_fields() {
        let law = make_ssrw(1).unwrap();
        let r = pmf_marginal_check(&exact_yn(&law, 1).unwrap());
        assert_eq!(r.atoms, 2);
        assert!((r.mass - 1.0).abs() < 1e-15);
        assert!(!r.empty);
        let empty = AffinePMF {
            dim: 1,
            n: 1,
            lo: vec![0],
            hi: vec![-1],
            table: Table::Sparse(BTreeMap::new()),
            embed: Embedding::identity(1),
        };
        assert!(pmf_marginal_check(&empty).empty);
    }

    #[test]
    fn lclt_decreases_in_d1() {
        let law = make_ssrw(1).unwrap();
        let basis = ssrw_basis(1).unwrap();
        let e: Vec<f64> = [8u64, 32, 128].iter().map(|&n| lclt_sup_error(&law, &basis, n).unwrap().sup_error).collect();
        assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
    }

    #[test]
    fn csv_headers() {
        let law = make_ssrw(1).unwrap();
        let basis = ssrw_basis(1).unwrap();
        let g = exact_gn_pmf(&law, &basis, 2).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index_1,x_1,prob\n"));
        assert_eq!(text.lines().count(), 5);
        let r = lclt_sup_error(&law, &basis, 8).unwrap();
        let mut buf = Vec::new();
        write_lclt_csv(&[r], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("n,E_n,argmax_x,runtime_ms\n"));
    }
}
