//! Scalar numerics: adaptive quadrature, bracketed root finding, golden-section
//! maximization and monotone cubic interpolation.

use crate::error::{Error, Result};
use crate::quantum::C64;

// 15-point Kronrod nodes on [-1, 1] (non-negative half) and weights, with the
// embedded 7-point Gauss weights on the odd-indexed nodes.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

fn kronrod<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XK[j];
        let sum = f(center - dx) + f(center + dx);
        kron += sum * WK[j];
        if j % 2 == 1 {
            gauss += sum * WG[j / 2];
        }
    }
    (kron * half, ((kron - gauss) * half).norm())
}

fn adapt<F: FnMut(f64) -> C64>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    whole: (C64, f64),
    worst: &mut f64,
) -> C64 {
    let (value, err) = whole;
    if err <= tol || depth >= MAX_DEPTH {
        if err > tol {
            *worst = worst.max(err);
        }
        return value;
    }
    let mid = 0.5 * (a + b);
    let left = kronrod(f, a, mid);
    let right = kronrod(f, mid, b);
    adapt(f, a, mid, 0.5 * tol, depth + 1, left, worst) + adapt(f, mid, b, 0.5 * tol, depth + 1, right, worst)
}

/// Adaptive 7/15-point Gauss–Kronrod quadrature of a complex integrand.
pub fn integrate_complex<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Result<C64> {
    if a == b {
        return Ok(C64::new(0.0, 0.0));
    }
    let whole = kronrod(&mut f, a, b);
    let mut worst = 0.0;
    let value = adapt(&mut f, a, b, abs_tol, 0, whole, &mut worst);
    if worst > 0.0 || !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::QuadratureNonconvergence { error_estimate: worst });
    }
    Ok(value)
}

/// Adaptive 7/15-point Gauss–Kronrod quadrature of a real integrand.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    integrate_complex(|x| C64::new(f(x), 0.0), a, b, abs_tol).map(|v| v.re)
}

/// Brent's method on a sign-changing bracket `[a, b]`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::SearchFailure {
            message: format!("root not bracketed: f(a) = {fa:e}, f(b) = {fb:e}"),
            low: a,
            high: b,
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b);
    }
    Err(Error::SearchFailure { message: format!("no convergence in {max_iter} iterations"), low: a, high: b })
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Maximum of `f` on `[a, b]`: dense scan followed by golden-section refinement.
pub fn scan_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, points: usize) -> (f64, f64) {
    let h = (b - a) / points as f64;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..=points {
        let v = f(a + h * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = (a + h * best_i as f64 - h).max(a);
    let hi = (a + h * best_i as f64 + h).min(b);
    let (x, v) = golden_max(&mut f, lo, hi, 1e-12 * (b - a).abs().max(1.0));
    if v >= best {
        (x, v)
    } else {
        (a + h * best_i as f64, best)
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Clone, Debug)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidParameter("interpolation needs at least two matched points".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("interpolation abscissae must be strictly increasing".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Evaluate; arguments outside the node range are clamped to the ends.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let t = t.clamp(self.x[0], self.x[n - 1]);
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > (3.0 * del0).abs() {
        3.0 * del0
    } else {
        d
    }
}
