//! The conical structure of the branch neighbourhood `C1'` of the line `y = z`.
//!
//! In the coordinates `u = (z - y)/2`, `v = (z + y)/2` the piece is
//! `x^a = (v+u)^b - (v-u)^b` with `|u| <= delta |v|`, and its model surface is
//! `x^a = 2b u v^(b-1)`. The map `F(x,u,v) = (v, e^(i arg x) sqrt(|x|^2 + |u|^2))`
//! sends it onto a neighbourhood of a cone; this module provides the map, the
//! metric coefficients of the one-variable slice `u = D x^a`, and the
//! distortion ratios and bounds used to control `F`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Exponent pair `(a, b)` for the formulas of this module. Unlike
/// [`crate::brieskorn::BrieskornPair`] it admits the degenerate limits
/// `a = 1` and `b = 2` used as controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Exponents {
    pub a: u32,
    pub b: u32,
}

impl Exponents {
    pub fn new(a: u32, b: u32) -> Result<Self> {
        if a < 1 || b < 2 {
            return Err(Error::validation(format!("need a >= 1 and b >= 2, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }
}

impl From<crate::brieskorn::BrieskornPair> for Exponents {
    fn from(p: crate::brieskorn::BrieskornPair) -> Self {
        Self { a: p.a(), b: p.b() }
    }
}

/// Point `(x, u, v)` of `C^3` in branch-adapted coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct UVPoint<T> {
    pub x: Complex<T>,
    pub u: Complex<T>,
    pub v: Complex<T>,
}

impl<T: Scalar> UVPoint<T> {
    pub fn new(x: Complex<T>, u: Complex<T>, v: Complex<T>) -> Self {
        Self { x, u, v }
    }

    pub fn from_xyz(x: Complex<T>, y: Complex<T>, z: Complex<T>) -> Self {
        let (u, v) = to_uv(y, z);
        Self { x, u, v }
    }

    pub fn to_xyz(&self) -> (Complex<T>, Complex<T>, Complex<T>) {
        let (y, z) = from_uv(self.u, self.v);
        (self.x, y, z)
    }

    /// `xi = u / v`, the transverse parameter along the branch line.
    pub fn xi(&self) -> Complex<T> {
        self.u / self.v
    }

    fn dist(&self, o: &Self) -> T {
        ((self.x - o.x).norm_sqr() + (self.u - o.u).norm_sqr() + (self.v - o.v).norm_sqr()).sqrt()
    }
}

pub fn to_uv<T: Scalar>(y: Complex<T>, z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let half = T::lit(0.5);
    ((z - y) * half, (z + y) * half)
}

pub fn from_uv<T: Scalar>(u: Complex<T>, v: Complex<T>) -> (Complex<T>, Complex<T>) {
    (v - u, v + u)
}

/// `F(x, u, v) = (v, e^(i arg x) sqrt(|x|^2 + |u|^2))`.
pub fn map_f_cone<T: Scalar>(p: &UVPoint<T>) -> Result<(Complex<T>, Complex<T>)> {
    let rx = p.x.norm();
    let ru = p.u.norm();
    if rx == T::zero() {
        if ru != T::zero() {
            return Err(Error::UndefinedArgument);
        }
        return Ok((p.v, Complex::new(T::zero(), T::zero())));
    }
    let q = ru / rx;
    Ok((p.v, p.x * (T::one() + q * q).sqrt()))
}

/// `D = 1 / (2b v^(b-1))`, the slope of the transverse slice `u = D x^a` of the model surface.
pub fn slice_coefficient<T: Scalar>(v: Complex<T>, b: u32) -> Complex<T> {
    (v.powu(b - 1) * T::of_usize(2 * b as usize)).inv()
}

/// The `a` solutions of `x^a = 2b u v^(b-1)`, sorted by argument.
pub fn model_surface_solve<T: Scalar>(u: Complex<T>, v: Complex<T>, ex: Exponents) -> Vec<Complex<T>> {
    let rhs = u * v.powu(ex.b - 1) * T::of_usize(2 * ex.b as usize);
    let mut roots = roots_of(rhs, ex.a);
    roots.sort_by(|p, q| p.arg().partial_cmp(&q.arg()).unwrap_or(std::cmp::Ordering::Equal));
    roots
}

fn roots_of<T: Scalar>(w: Complex<T>, a: u32) -> Vec<Complex<T>> {
    let at = T::of_usize(a as usize);
    let r = w.norm().powf(at.recip());
    let th = w.arg();
    (0..a)
        .map(|k| Complex::from_polar(r, (th + T::TAU() * T::of_usize(k as usize)) / at))
        .collect()
}

/// Root of `x^a = w` nearest to `near`, ties to the smallest argument.
pub fn nearest_root<T: Scalar>(w: Complex<T>, a: u32, near: Complex<T>) -> Complex<T> {
    let mut roots = roots_of(w, a);
    roots.sort_by(|p, q| p.arg().partial_cmp(&q.arg()).unwrap_or(std::cmp::Ordering::Equal));
    let mut best = roots[0];
    let mut best_d = (best - near).norm();
    for r in roots.into_iter().skip(1) {
        let d = (r - near).norm();
        if d < best_d {
            best = r;
            best_d = d;
        }
    }
    best
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(v+u)^b - (v-u)^b - 2b u v^(b-1) = 2 sum_{odd j >= 3} C(b,j) u^j v^(b-j)`,
/// which is `u^3 g(u, v)` with `g` of degree `b - 3`.
pub fn residual_term<T: Scalar>(u: Complex<T>, v: Complex<T>, b: u32) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for j in (3..=b).step_by(2) {
        acc += u.powu(j) * v.powu(b - j) * T::lit(2.0 * binomial(b, j));
    }
    acc
}

/// `(v+u)^b - (v-u)^b`, the right side of the defining equation of `C1'`.
pub fn full_rhs<T: Scalar>(u: Complex<T>, v: Complex<T>, b: u32) -> Complex<T> {
    (v + u).powu(b) - (v - u).powu(b)
}

/// `G(delta) = sum_{odd j >= 3} 2 C(b,j) delta^(j-3)`. On `|u| <= delta |v|`,
/// `|u^3 g(u,v)| <= delta^2 G(delta) |u| |v|^(b-1)`.
pub fn residual_bound_poly<T: Scalar>(b: u32, delta: T) -> T {
    (3..=b).step_by(2).map(|j| T::lit(2.0 * binomial(b, j)) * delta.powi(j as i32 - 3)).sum()
}

/// `f(x) = e^(i arg x) sqrt(r_x^2 + |D|^2 r_x^(2a))` on the slice `u = D x^a`.
pub fn map_f_on_sd<T: Scalar>(x: Complex<T>, d: Complex<T>, a: u32) -> Complex<T> {
    let rx = x.norm();
    if rx == T::zero() {
        return x;
    }
    let q = d.norm() * rx.powi(a as i32 - 1);
    x * (T::one() + q * q).sqrt()
}

/// Coefficients of `dr_x^2` and `d theta_x^2` of a metric in polar coordinates on `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolarMetricCoeffs<T> {
    pub g_rr: T,
    pub g_tt: T,
}

fn slice_t<T: Scalar>(r_x: T, abs_d: T, a: u32) -> T {
    abs_d * abs_d * r_x.powi(2 * a as i32 - 2)
}

/// Induced metric of the slice `u = D x^a`: `(dr^2 + r^2 dtheta^2)(1 + a^2 |D|^2 r^(2a-2))`.
pub fn metric_coeffs_graph<T: Scalar>(r_x: T, abs_d: T, a: u32) -> PolarMetricCoeffs<T> {
    let at = T::of_usize(a as usize);
    let factor = T::one() + at * at * slice_t(r_x, abs_d, a);
    PolarMetricCoeffs { g_rr: factor, g_tt: r_x * r_x * factor }
}

/// Metric pulled back by the slice map: `(1+at)^2/(1+t) dr^2 + (1+t) r^2 dtheta^2`,
/// `t = |D|^2 r^(2a-2)`.
pub fn metric_coeffs_pullback<T: Scalar>(r_x: T, abs_d: T, a: u32) -> PolarMetricCoeffs<T> {
    let at = T::of_usize(a as usize);
    let t = slice_t(r_x, abs_d, a);
    let num = T::one() + at * t;
    PolarMetricCoeffs { g_rr: num * num / (T::one() + t), g_tt: r_x * r_x * (T::one() + t) }
}

/// Ratios of graph to pullback coefficients as functions of `t = |D|^2 r^(2a-2)`:
/// `(rho_rr, rho_tt) = ((1+a^2 t)(1+t)/(1+at)^2, (1+a^2 t)/(1+t))`.
pub fn distortion_ratios<T: Scalar>(t: T, a: u32) -> (T, T) {
    let at = T::of_usize(a as usize);
    let g = T::one() + at * at * t;
    let s = T::one() + t;
    let p = T::one() + at * t;
    (g * s / (p * p), g / s)
}

/// Peak `(a+1)^2 / (4a)` of `rho_rr`, reached at `t = 1/a`.
pub fn rho_rr_peak<T: Scalar>(a: u32) -> T {
    let at = T::of_usize(a as usize);
    (at + T::one()) * (at + T::one()) / (T::lit(4.0) * at)
}

/// Uniform bi-Lipschitz bound `a` of the slice map.
pub fn sd_bilip_bound(a: u32) -> u32 {
    a
}

/// One row of a ratio scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioRow<T> {
    pub t: T,
    pub a: u32,
    pub rho_rr: T,
    pub rho_tt: T,
}

pub fn ratio_scan<T: Scalar>(ts: &[T], a_values: &[u32]) -> Vec<RatioRow<T>> {
    let mut rows = Vec::with_capacity(ts.len() * a_values.len());
    for &a in a_values {
        for &t in ts {
            let (rho_rr, rho_tt) = distortion_ratios(t, a);
            rows.push(RatioRow { t, a, rho_rr, rho_tt });
        }
    }
    rows
}

/// Ratio of tangent-plane normals of the model surface `C` and the product surface
/// through the same point:
/// `sqrt(|a x^(a-1)|^2 + |2b v^(b-1)|^2 + |2b(b-1) u v^(b-2)|^2) / sqrt(|a x^(a-1)|^2 + |2b v^(b-1)|^2)`.
pub fn tangent_ratio_ick<T: Scalar>(p: &UVPoint<T>, ex: Exponents) -> Result<T> {
    let model = p.u * p.v.powu(ex.b - 1) * T::of_usize(2 * ex.b as usize);
    let lhs = p.x.powu(ex.a);
    let scale = lhs.norm() + model.norm();
    let residual = (lhs - model).norm();
    if residual > T::lit(1e-10) * scale {
        return Err(Error::OffSurface { residual: residual.as_f64() });
    }
    let (a, b) = (T::of_usize(ex.a as usize), T::of_usize(ex.b as usize));
    let two = T::lit(2.0);
    let gx = (p.x.powu(ex.a - 1) * a).norm_sqr();
    let gu = (p.v.powu(ex.b - 1) * (two * b)).norm_sqr();
    let gv = (p.u * p.v.powu(ex.b - 2) * (two * b * (b - T::one()))).norm_sqr();
    Ok(((gx + gu + gv) / (gx + gu)).sqrt())
}

/// `sqrt(1 + ((b-1) delta)^2)`.
pub fn ick_bound<T: Scalar>(b: u32, delta: T) -> T {
    let s = T::of_usize(b as usize - 1) * delta;
    (T::one() + s * s).sqrt()
}

/// Random points of the model surface with `|u| <= delta |v|` and `|v|` log-uniform in `[r_lo, r_hi]`.
pub fn sample_model_surface(ex: Exponents, delta: f64, r_lo: f64, r_hi: f64, n: usize, seed: u64) -> Vec<UVPoint<f64>> {
    use rand::Rng;
    let mut rng = rng::stream(seed, 0);
    (0..n)
        .map(|_| {
            let r = (r_lo.ln() + (r_hi.ln() - r_lo.ln()) * rng.random::<f64>()).exp();
            let v = Complex::from_polar(r, rng::phase(&mut rng));
            let u = v * rng::disk(&mut rng, delta);
            let roots = model_surface_solve(u, v, ex);
            let x = roots[rng.random_range(0..roots.len())];
            UVPoint::new(x, u, v)
        })
        .collect()
}

/// Random points of `C1'` (`x^a = (v+u)^b - (v-u)^b`) with
/// `delta_min |v| <= |u| <= delta |v|`.
pub fn sample_c1_prime(
    ex: Exponents,
    delta: f64,
    delta_min: f64,
    r_lo: f64,
    r_hi: f64,
    n: usize,
    seed: u64,
) -> Vec<UVPoint<f64>> {
    use rand::Rng;
    let mut rng = rng::stream(seed, 0);
    (0..n)
        .map(|_| {
            let r = (r_lo.ln() + (r_hi.ln() - r_lo.ln()) * rng.random::<f64>()).exp();
            let v = Complex::from_polar(r, rng::phase(&mut rng));
            let s2 = delta_min * delta_min + (delta * delta - delta_min * delta_min) * rng.random::<f64>();
            let u = v * Complex::from_polar(s2.sqrt(), rng::phase(&mut rng));
            let roots = roots_of(full_rhs(u, v, ex.b), ex.a);
            let x = roots[rng.random_range(0..roots.len())];
            UVPoint::new(x, u, v)
        })
        .collect()
}

/// Result of comparing `C1'` with its model surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistortionReport<T> {
    pub max_ratio: T,
    pub bound: T,
    pub n_samples: usize,
    pub delta: T,
    /// Largest `max(0, |F_2| - delta |v|) / |v|` over the samples: how far the
    /// image of `F` leaves the cone `|w| <= delta |v|`.
    pub image_excess: T,
}

/// Relative finite-difference step; the pair separation is `2 * STEP * |u|`.
const PAIR_STEP: f64 = 1e-4;

/// Local distortion of the projection in the `x`-direction from `C1'` to the
/// model surface, estimated from symmetric pairs around each sample, together
/// with the bound `1 + delta^2 G(delta)`.
pub fn model_vs_full_distortion(samples: &[UVPoint<f64>], ex: Exponents, delta: f64, seed: u64) -> Result<DistortionReport<f64>> {
    for p in samples {
        let rhs = full_rhs(p.u, p.v, ex.b);
        let res = (p.x.powu(ex.a) - rhs).norm();
        if res > 1e-10 * (rhs.norm() + p.x.norm().powi(ex.a as i32)) {
            return Err(Error::OffSurface { residual: res });
        }
        if p.u.norm() > delta * p.v.norm() * (1.0 + 1e-12) {
            return Err(Error::validation("sample violates |u| <= delta |v|"));
        }
    }
    let per_sample: Vec<(f64, f64)> = samples
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = rng::stream(seed, i as u64);
            let [du, dv] = rng::unit_sphere::<2>(&mut rng);
            let h = PAIR_STEP * p.u.norm().max(1e-300);
            let lift = |sign: f64| {
                let u = p.u + du * (h * sign);
                let v = p.v + dv * (h * sign);
                let x = nearest_root(full_rhs(u, v, ex.b), ex.a, p.x);
                let model = model_rhs(u, v, ex.b);
                let xm = nearest_root(model, ex.a, x);
                (UVPoint::new(x, u, v), UVPoint::new(xm, u, v))
            };
            let (fp, mp) = lift(1.0);
            let (fm, mm) = lift(-1.0);
            let ratio = mp.dist(&mm) / fp.dist(&fm);
            let ratio = ratio.max(ratio.recip());
            let w = map_f_cone(p).map(|(_, w)| w.norm()).unwrap_or(0.0);
            let excess = ((w - delta * p.v.norm()) / p.v.norm()).max(0.0);
            (ratio, excess)
        })
        .collect();
    let max_ratio = per_sample.iter().map(|r| r.0).fold(1.0, f64::max);
    let image_excess = per_sample.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(DistortionReport {
        max_ratio,
        bound: 1.0 + delta * delta * residual_bound_poly(ex.b, delta),
        n_samples: samples.len(),
        delta,
        image_excess,
    })
}

fn model_rhs<T: Scalar>(u: Complex<T>, v: Complex<T>, b: u32) -> Complex<T> {
    u * v.powu(b - 1) * T::of_usize(2 * b as usize)
}
