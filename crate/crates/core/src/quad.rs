//! Globally adaptive Gauss–Kronrod (7/15) quadrature for real and complex
//! integrands on finite intervals, plus a tensor-product rule for boxes in the
//! plane.
//!
//! Subdivision always splits the panel with the largest error estimate, ties
//! broken by position, so a given integrand and configuration always produce
//! bit-identical results.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_panels: 20_000,
        }
    }
}

impl QuadConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_panels: usize) -> Self {
        Self {
            abs_tol,
            rel_tol,
            max_panels,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// One 15-point Kronrod evaluation on `[a, b]` with the QUADPACK error heuristic.
pub fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut values = [(T::default(), T::default()); 7];
    for (j, &x) in XGK[..7].iter().enumerate() {
        let dx = half * x;
        let (f1, f2) = (f(center - dx), f(center + dx));
        values[j] = (f1, f2);
        kronrod = kronrod + (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = (fc - mean).magnitude() * WGK[7];
    for (j, (f1, f2)) in values.iter().enumerate() {
        asc += WGK[j] * ((*f1 - mean).magnitude() + (*f2 - mean).magnitude());
    }
    let asc = asc * half.abs();
    let diff = ((kronrod - gauss) * half).magnitude();
    let mut err = diff;
    if asc != 0.0 && diff != 0.0 {
        err = asc * (200.0 * diff / asc).powf(1.5).min(1.0);
    }
    // floor at a few ulps of the panel magnitude
    let scale = (kronrod * half).magnitude();
    err = err.max(50.0 * f64::EPSILON * scale);
    (kronrod * half, err)
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Estimate<T> {
    integrate_breaks(f, &[a, b], cfg)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from the panels
/// delimited by `breaks` (which must be increasing).
pub fn integrate_breaks<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Estimate<T> {
    assert!(breaks.len() >= 2, "need at least one panel");
    let mut heap = BinaryHeap::with_capacity(breaks.len() * 2);
    for w in breaks.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1]);
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    loop {
        let (total, err) = totals(&heap);
        let target = cfg.abs_tol.max(cfg.rel_tol * total.magnitude());
        let converged = err <= target;
        if converged || heap.len() >= cfg.max_panels {
            return Estimate {
                value: total,
                error: err,
                panels: heap.len(),
                converged,
            };
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further; keep it and give up
            heap.push(worst);
            let (total, err) = totals(&heap);
            return Estimate {
                value: total,
                error: err,
                panels: heap.len(),
                converged: false,
            };
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&f, a, b);
            heap.push(Panel { a, b, value, error });
        }
    }
}

fn totals<T: QuadValue>(heap: &BinaryHeap<Panel<T>>) -> (T, f64) {
    // sum in positional order so the result does not depend on heap layout
    let mut panels: Vec<&Panel<T>> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut total = T::default();
    let mut err = 0.0;
    for p in panels {
        total = total + p.value;
        err += p.error;
    }
    (total, err)
}

/// Tensor-product Gauss–Kronrod rule over `[x0, x1] x [y0, y1]` split into
/// `cells x cells` equal sub-rectangles. Error estimate is the Kronrod/Gauss
/// discrepancy summed over cells.
pub fn integrate_box_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    x: (f64, f64),
    y: (f64, f64),
    cells: usize,
) -> (f64, f64) {
    let hx = (x.1 - x.0) / cells as f64;
    let hy = (y.1 - y.0) / cells as f64;
    let mut nodes = [0.0; 15];
    let mut wk = [0.0; 15];
    let mut wg = [0.0; 15];
    for j in 0..7 {
        nodes[j] = -XGK[j];
        nodes[14 - j] = XGK[j];
        wk[j] = WGK[j];
        wk[14 - j] = WGK[j];
        if j % 2 == 1 {
            wg[j] = WG[j / 2];
            wg[14 - j] = WG[j / 2];
        }
    }
    nodes[7] = 0.0;
    wk[7] = WGK[7];
    wg[7] = WG[3];

    let mut total = 0.0;
    let mut err = 0.0;
    for i in 0..cells {
        let cx = x.0 + (i as f64 + 0.5) * hx;
        for j in 0..cells {
            let cy = y.0 + (j as f64 + 0.5) * hy;
            let mut k = 0.0;
            let mut g = 0.0;
            for (p, &u) in nodes.iter().enumerate() {
                for (q, &v) in nodes.iter().enumerate() {
                    let val = f(cx + 0.5 * hx * u, cy + 0.5 * hy * v);
                    k += wk[p] * wk[q] * val;
                    g += wg[p] * wg[q] * val;
                }
            }
            let scale = 0.25 * hx * hy;
            total += k * scale;
            err += ((k - g) * scale).abs();
        }
    }
    (total, err)
}
