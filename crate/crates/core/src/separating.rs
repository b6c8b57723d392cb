//! Conflict sets `Y = {p in V : d(p, L1) = d(p, L2)}` of two curves on a surface germ,
//! and the diagnostics that decide whether `Y` separates `V`: the tangent cone of `Y`,
//! the growth of its 3-volume and the volume shares of the two sides.
//!
//! The main examples are `A_k: z^(k+1) = xy` with `L1 = {x = 0}`, `L2 = {y = 0}` and the
//! Briançon–Speder family `z^15 + z y^7 + x^5 + t x y^6 = 0`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{GraphCover, VOLUME_BATCHES};
use crate::error::{Error, Result};
use crate::fit::{scaling_exponent, PowerLawFit};
use crate::inner_metric::{build_default_graph, shortest_paths, PointCloud};
use crate::rng;
use crate::variety::{
    project_to_link, sample_annulus, sample_link_with, ComplexPoint3, HypersurfaceGerm, SampleCloud, SamplingConfig, Term,
    WeightedHomogeneousData,
};

type C = Complex<f64>;
type Point = ComplexPoint3<f64>;

/// Default relative tolerance `|d1 - d2| <= tol max(d1, d2)` of located conflict points.
pub const CONFLICT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    Inner,
    Outer,
}

impl MetricMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricMode::Inner => "inner",
            MetricMode::Outer => "outer",
        }
    }
}

impl FromStr for MetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inner" => Ok(MetricMode::Inner),
            "outer" => Ok(MetricMode::Outer),
            _ => Err(Error::validation(format!("unknown metric mode '{s}'"))),
        }
    }
}

/// A polynomial curve germ `s -> (x(s), y(s), z(s))` through the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCurve {
    comps: [Vec<(C, u32)>; 3],
}

impl ParamCurve {
    pub fn new(mut comps: [Vec<(C, u32)>; 3]) -> Result<Self> {
        for terms in comps.iter_mut() {
            terms.retain(|(c, _)| c.norm() > 0.0);
        }
        if comps.iter().flatten().any(|&(_, e)| e == 0) {
            return Err(Error::validation("curve terms need exponent >= 1 so that the curve passes through 0"));
        }
        if comps.iter().all(Vec::is_empty) {
            return Err(Error::validation("curve is constant"));
        }
        Ok(Self { comps })
    }

    pub fn x_axis() -> Self {
        Self { comps: [vec![(C::new(1.0, 0.0), 1)], vec![], vec![]] }
    }

    pub fn y_axis() -> Self {
        Self { comps: [vec![], vec![(C::new(1.0, 0.0), 1)], vec![]] }
    }

    pub fn z_axis() -> Self {
        Self { comps: [vec![], vec![], vec![(C::new(1.0, 0.0), 1)]] }
    }

    pub fn eval(&self, s: C) -> Point {
        let e = |terms: &[(C, u32)]| terms.iter().fold(C::new(0.0, 0.0), |acc, &(c, k)| acc + c * s.powu(k));
        Point::new(e(&self.comps[0]), e(&self.comps[1]), e(&self.comps[2]))
    }

    fn deriv(&self, s: C) -> [C; 3] {
        let d = |terms: &[(C, u32)]| terms.iter().fold(C::new(0.0, 0.0), |acc, &(c, k)| acc + c * (k as f64) * s.powu(k - 1));
        [d(&self.comps[0]), d(&self.comps[1]), d(&self.comps[2])]
    }

    /// Checks `f(curve(s)) = 0` at a few parameters of modulus up to `radius`.
    pub fn lies_on(&self, germ: &HypersurfaceGerm<f64>, radius: f64) -> bool {
        (1..=8).all(|i| {
            let s = C::from_polar(radius * i as f64 / 8.0, 0.7 * i as f64);
            let p = self.eval(s);
            let scale: f64 = germ.terms().iter().map(|t| t.eval(&p).norm()).sum();
            germ.eval(&p).norm() <= 1e-10 * scale.max(f64::MIN_POSITIVE)
        })
    }

    /// Starting parameters for the distance search: `0` and all roots `c s^e = p_j`
    /// of the lowest-order term of each coordinate.
    fn starts(&self, p: &Point) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0)];
        for (terms, target) in self.comps.iter().zip(p.coords()) {
            if let Some(&(c, e)) = terms.iter().filter(|(c, _)| c.norm() > 0.0).min_by_key(|(_, e)| *e) {
                let w = target / c;
                let r = w.norm().powf(1.0 / e as f64);
                for j in 0..e {
                    out.push(C::from_polar(r, (w.arg() + std::f64::consts::TAU * j as f64) / e as f64));
                }
            }
        }
        out
    }
}

impl fmt::Display for ParamCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let comps: Vec<String> = self
            .comps
            .iter()
            .map(|terms| terms.iter().map(|(c, e)| format!("{} {} {}", c.re, c.im, e)).collect::<Vec<_>>().join("; "))
            .collect();
        write!(f, "{}", comps.join(" | "))
    }
}

/// Text form `re im e; re im e | ... | ...`: three coordinates separated by `|`,
/// each a `;`-separated list of terms `coeff * s^e`, empty for zero.
impl FromStr for ParamCurve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('|').collect();
        if parts.len() != 3 {
            return Err(Error::validation(format!("curve needs 3 '|'-separated coordinates: '{s}'")));
        }
        let mut comps: [Vec<(C, u32)>; 3] = Default::default();
        for (slot, part) in comps.iter_mut().zip(parts) {
            for term in part.split(';').map(str::trim).filter(|t| !t.is_empty()) {
                let f: Vec<&str> = term.split_whitespace().collect();
                let bad = || Error::validation(format!("bad curve term '{term}'"));
                if f.len() != 3 {
                    return Err(bad());
                }
                let re: f64 = f[0].parse().map_err(|_| bad())?;
                let im: f64 = f[1].parse().map_err(|_| bad())?;
                let e: u32 = f[2].parse().map_err(|_| bad())?;
                slot.push((C::new(re, im), e));
            }
        }
        ParamCurve::new(comps)
    }
}

/// Squared coordinate residuals `|p_j - curve_j(s)|^2` at the nearest curve point.
pub fn nearest_on_curve(curve: &ParamCurve, p: &Point) -> Result<(C, [f64; 3])> {
    let residuals = |s: C| {
        let q = curve.eval(s);
        [(p.x - q.x).norm_sqr(), (p.y - q.y).norm_sqr(), (p.z - q.z).norm_sqr()]
    };
    let total = |r: &[f64; 3]| sorted_sum(r);
    let scale = p.norm_sqr().max(f64::MIN_POSITIVE);
    let mut best: Option<(C, [f64; 3])> = None;
    for s0 in curve.starts(p) {
        // Gauss-Newton on |curve(s) - p|^2 with step halving
        let mut s = s0;
        let mut r = residuals(s);
        for _ in 0..100 {
            let q = curve.eval(s);
            let d = curve.deriv(s);
            let den: f64 = d.iter().map(|c| c.norm_sqr()).sum();
            if den == 0.0 {
                break;
            }
            let num = d[0].conj() * (p.x - q.x) + d[1].conj() * (p.y - q.y) + d[2].conj() * (p.z - q.z);
            let mut step = num / den;
            let mut improved = false;
            for _ in 0..40 {
                let r_new = residuals(s + step);
                if total(&r_new) <= total(&r) {
                    s += step;
                    r = r_new;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved || step.norm() <= 1e-15 * s.norm().max(1e-300) {
                break;
            }
        }
        if best.as_ref().is_none_or(|(_, b)| total(&r) < total(b)) {
            best = Some((s, r));
        }
    }
    match best {
        Some(b) if b.1.iter().all(|x| x.is_finite()) => Ok(b),
        _ => Err(Error::NoConvergence { iterations: 100, residual: scale }),
    }
}

/// Sum of three terms in ascending order, so that it does not depend on their order.
fn sorted_sum(r: &[f64; 3]) -> f64 {
    let mut v = *r;
    v.sort_by(f64::total_cmp);
    v[0] + v[1] + v[2]
}

/// The two distances and `d1 - d2`, the latter computed without cancellation where possible.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Distances {
    pub d1: f64,
    pub d2: f64,
    pub diff: f64,
}

/// Distances from points of `V` to the two curves.
pub trait CurveDistances: Sync {
    fn mode(&self) -> MetricMode;
    fn distances(&self, p: &Point) -> Result<Distances>;
}

/// Ambient (chord) distances to two parametrized curves.
#[derive(Clone, Debug)]
pub struct OuterCurves {
    pub c1: ParamCurve,
    pub c2: ParamCurve,
}

impl CurveDistances for OuterCurves {
    fn mode(&self) -> MetricMode {
        MetricMode::Outer
    }

    fn distances(&self, p: &Point) -> Result<Distances> {
        let (_, r1) = nearest_on_curve(&self.c1, p)?;
        let (_, r2) = nearest_on_curve(&self.c2, p)?;
        let (d1, d2) = (sorted_sum(&r1).sqrt(), sorted_sum(&r2).sqrt());
        // shared coordinates cancel exactly in d1^2 - d2^2
        let sq = (r1[0] - r2[0]) + (r1[1] - r2[1]) + (r1[2] - r2[2]);
        let diff = if d1 + d2 > 0.0 { sq / (d1 + d2) } else { 0.0 };
        Ok(Distances { d1, d2, diff })
    }
}

/// Inner distances to two curves from a neighbour graph on an annulus of `V`: the
/// distance of a point `q` is `min_j |q - p_j| + D(j)` over graph vertices `p_j`.
#[derive(Clone, Debug)]
pub struct InnerChart {
    cloud: PointCloud<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    pub h: f64,
}

impl InnerChart {
    /// Builds the chart from `cloud`, adding locus vertices sampled on the two curves
    /// at radii in `[r_min, r_max]`.
    pub fn build(
        germ: &HypersurfaceGerm<f64>,
        cloud: PointCloud<f64>,
        curves: &OuterCurves,
        r_min: f64,
        r_max: f64,
        locus_per_curve: usize,
    ) -> Result<Self> {
        let mut cloud = cloud;
        let mut loci = [Vec::new(), Vec::new()];
        for (slot, curve) in loci.iter_mut().zip([&curves.c1, &curves.c2]) {
            let m = locus_per_curve.max(2);
            let sq = (m as f64).sqrt().ceil() as usize;
            for i in 0..m {
                // parameter moduli chosen so the curve point sweeps the radius window
                let target = r_min * (r_max / r_min).powf((i / sq) as f64 / ((m - 1) / sq).max(1) as f64);
                let phase = std::f64::consts::TAU * (i % sq) as f64 / sq as f64;
                let s = param_at_radius(curve, target, phase);
                *slot = {
                    let mut v = std::mem::take(slot);
                    v.push(cloud.push(&curve.eval(s).to_real()));
                    v
                };
            }
        }
        let graph = build_default_graph(&cloud, germ, 4)?;
        let d1 = shortest_paths(&graph, &loci[0]);
        let d2 = shortest_paths(&graph, &loci[1]);
        Ok(Self { cloud, d1, d2, h: graph.h })
    }

    fn extend(&self, q: &[f64], d: &[f64]) -> f64 {
        (0..self.cloud.len())
            .map(|j| crate::inner_metric::euclid(q, self.cloud.point(j)) + d[j])
            .fold(f64::INFINITY, f64::min)
    }
}

fn param_at_radius(curve: &ParamCurve, radius: f64, phase: f64) -> C {
    let (mut lo, mut hi) = (0.0, 1.0);
    while curve.eval(C::from_polar(hi, phase)).norm() < radius && hi < 1e12 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if curve.eval(C::from_polar(mid, phase)).norm() < radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    C::from_polar(0.5 * (lo + hi), phase)
}

impl CurveDistances for InnerChart {
    fn mode(&self) -> MetricMode {
        MetricMode::Inner
    }

    fn distances(&self, p: &Point) -> Result<Distances> {
        let q = p.to_real();
        let (d1, d2) = (self.extend(&q, &self.d1), self.extend(&q, &self.d2));
        if !d1.is_finite() || !d2.is_finite() {
            return Err(Error::Unreachable { from: 0, to: 0 });
        }
        Ok(Distances { d1, d2, diff: d1 - d2 })
    }
}

/// A point of the conflict set with its distances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConflictSample {
    pub point: Point,
    pub d1: f64,
    pub d2: f64,
    pub mode: MetricMode,
    /// `|d1 - d2|`.
    pub residual: f64,
}

impl ConflictSample {
    pub const CSV_HEADER: &'static str = "re_x,im_x,re_y,im_y,re_z,im_z,d1,d2,residual,mode";

    pub fn csv_row(&self) -> String {
        let r = self.point.to_real();
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            r[0], r[1], r[2], r[3], r[4], r[5], self.d1, self.d2, self.residual, self.mode.as_str()
        )
    }
}

pub fn conflict_csv(samples: &[ConflictSample]) -> String {
    let mut s = format!("{}\n", ConflictSample::CSV_HEADER);
    for c in samples {
        s.push_str(&c.csv_row());
        s.push('\n');
    }
    s
}

fn converged(d: &Distances, tol: f64) -> bool {
    d.diff.abs() <= tol * d.d1.max(d.d2)
}

/// Bisection of the sign of `d1 - d2` along `path(t)`, `t in [0, t_end]`.
fn bisect_path<P, D>(path: P, t_end: f64, oracle: &D, tol: f64) -> Result<ConflictSample>
where
    P: Fn(f64) -> Result<Point>,
    D: CurveDistances + ?Sized,
{
    let sample = |p: Point, d: Distances| ConflictSample { point: p, d1: d.d1, d2: d.d2, mode: oracle.mode(), residual: d.diff.abs() };
    let p0 = path(0.0)?;
    let g0 = oracle.distances(&p0)?;
    if converged(&g0, tol) {
        return Ok(sample(p0, g0));
    }
    let g1 = oracle.distances(&path(t_end)?)?;
    if g1.diff.signum() == g0.diff.signum() {
        return Err(Error::NoSignChange);
    }
    let (mut lo, mut hi) = (0.0, t_end);
    let lo_sign = g0.diff.signum();
    let mut last = g0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = path(mid)?;
        let g = oracle.distances(&p)?;
        if converged(&g, tol) {
            return Ok(sample(p, g));
        }
        if g.diff.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
        last = g;
    }
    Err(Error::NoConvergence { iterations: 200, residual: last.diff.abs() / last.d1.max(last.d2) })
}

/// The `A_k` surface germ `z^(k+1) = xy`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AkParams {
    k: u32,
}

impl AkParams {
    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::validation("A_k needs k >= 1"));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn germ(&self) -> HypersurfaceGerm<f64> {
        HypersurfaceGerm::a_k(self.k)
    }

    /// `L1 = {x = 0} ∩ V` (the `y`-axis) and `L2 = {y = 0} ∩ V` (the `x`-axis).
    pub fn outer(&self) -> OuterCurves {
        OuterCurves { c1: ParamCurve::y_axis(), c2: ParamCurve::x_axis() }
    }

    /// Inner chart on the annulus `[r_min, r_max]`: `n` sampled points, their images
    /// under the swap `(x, y, z) -> (y, x, z)`, and `locus` points on each axis.
    pub fn inner_chart(&self, r_min: f64, r_max: f64, n: usize, locus: usize, seed: u64) -> Result<InnerChart> {
        let germ = self.germ();
        let s = sample_annulus(&germ, r_min, r_max, 4, n, seed, &SamplingConfig::default())?;
        let mut cloud = PointCloud::new(6);
        for p in &s.points {
            cloud.push(&p.to_real());
            cloud.push(&swap(p).to_real());
        }
        InnerChart::build(&germ, cloud, &self.outer(), r_min, r_max, locus)
    }

    /// Re-solves the larger of `x`, `y` from `xy = z^(k+1)` so that `p` is on `V` to rounding.
    pub fn polish(&self, p: &Point) -> Point {
        let zk = p.z.powu(self.k + 1);
        if p.x.norm() >= p.y.norm() {
            if p.y.norm() == 0.0 {
                return *p;
            }
            Point::new(zk / p.y, p.y, p.z)
        } else {
            Point::new(p.x, zk / p.x, p.z)
        }
    }

    /// Weighted rescaling `(l^w x, l^w y, l z)`, `w = (k+1)/2`, to `|p| = radius`.
    /// It preserves `V` and the set `|x| = |y|`.
    pub fn rescale_to(&self, p: &Point, radius: f64) -> Point {
        let w = (self.k + 1) as f64 / 2.0;
        let at = |ll: f64| {
            let l = ll.exp();
            let lw = (w * ll).exp();
            Point::new(p.x * lw, p.y * lw, p.z * l)
        };
        let (mut lo, mut hi) = (-1.0, 1.0);
        while at(lo).norm() > radius && lo > -700.0 {
            lo *= 2.0;
        }
        while at(hi).norm() < radius && hi < 700.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid).norm() < radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi))
    }
}

pub fn swap(p: &Point) -> Point {
    Point::new(p.y, p.x, p.z)
}

fn check_on_surface(germ: &HypersurfaceGerm<f64>, p: &Point) -> Result<()> {
    let scale: f64 = germ.terms().iter().map(|t| t.eval(p).norm()).sum();
    let res = germ.eval(p).norm();
    if res > 1e-8 * scale {
        return Err(Error::OffSurface { residual: res });
    }
    Ok(())
}

/// `(d(p, L1), d(p, L2))` for a point of `A_k`.
pub fn ak_axis_distances<D: CurveDistances + ?Sized>(ak: AkParams, p: &Point, oracle: &D) -> Result<(f64, f64)> {
    check_on_surface(&ak.germ(), p)?;
    let d = oracle.distances(p)?;
    Ok((d.d1, d.d2))
}

/// Path on `A_k` from `p` to the swapped point: first the moduli of `x` and `y`
/// are exchanged keeping `xy` and the phases, then the phases are rotated into place.
/// Parameter range `[0, 2]`.
fn ak_swap_path(p: Point) -> impl Fn(f64) -> Result<Point> {
    let (rx, ry) = (p.x.norm(), p.y.norm());
    let (tx, ty) = (p.x.arg(), p.y.arg());
    let dth = (ty - tx + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    move |t: f64| {
        if t <= 1.0 {
            let r = (ry / rx).powf(t);
            Ok(Point::new(p.x * r, p.y / r, p.z))
        } else {
            let s = t - 1.0;
            Ok(Point::new(C::from_polar(ry, tx + s * dth), C::from_polar(rx, ty - s * dth), p.z))
        }
    }
}

/// Locates a point of the conflict set on the path from `start` to its swap.
pub fn locate_conflict_point<D: CurveDistances + ?Sized>(ak: AkParams, start: &Point, oracle: &D, tol: f64) -> Result<ConflictSample> {
    check_on_surface(&ak.germ(), start)?;
    if start.x.norm() == 0.0 || start.y.norm() == 0.0 {
        let d = oracle.distances(start)?;
        if converged(&d, tol) {
            return Ok(ConflictSample { point: *start, d1: d.d1, d2: d.d2, mode: oracle.mode(), residual: d.diff.abs() });
        }
        return Err(Error::NoSignChange);
    }
    bisect_path(ak_swap_path(*start), 2.0, oracle, tol)
}

/// `(||x| - |y|| / max(|x|, |y|), ||x|^2 - |z|^(k+1)| / |z|^(k+1))`.
pub fn conflict_invariant_residuals(sample: &ConflictSample, k: u32) -> (f64, f64) {
    let (ax, ay) = (sample.point.x.norm(), sample.point.y.norm());
    let m = ax.max(ay);
    let r_sym = if m > 0.0 { (ax - ay).abs() / m } else { 0.0 };
    let zk = sample.point.z.norm().powi(k as i32 + 1);
    let r_power = if zk > 0.0 { (ax * ax - zk).abs() / zk } else { ax * ax };
    (r_sym, r_power)
}

/// Largest angle between the samples and the `z`-axis, as seen in `R^6`.
pub fn tangent_cone_angle(samples: &[Point]) -> f64 {
    samples
        .iter()
        .map(|p| (p.x.norm_sqr() + p.y.norm_sqr()).sqrt().atan2(p.z.norm()))
        .fold(0.0, f64::max)
}

/// Located conflict samples of `A_k` from link samples at radius `eps`. In outer
/// mode they are moved back to `|p| = eps` by weighted rescaling.
pub fn ak_conflict_samples<D: CurveDistances + ?Sized>(
    ak: AkParams,
    eps: f64,
    n: usize,
    seed: u64,
    oracle: &D,
    tol: f64,
) -> Result<Vec<ConflictSample>> {
    let cfg = SamplingConfig::default();
    let cloud = sample_link_with(&ak.germ(), eps, 2 * n, seed, &cfg)?;
    let located: Vec<Result<ConflictSample>> = cloud
        .points
        .par_iter()
        .map(|p| {
            let s = locate_conflict_point(ak, &ak.polish(p), oracle, tol)?;
            if oracle.mode() == MetricMode::Outer {
                let q = ak.rescale_to(&s.point, eps);
                let d = oracle.distances(&q)?;
                return Ok(ConflictSample { point: q, d1: d.d1, d2: d.d2, mode: s.mode, residual: d.diff.abs() });
            }
            Ok(s)
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut first_err = None;
    for r in located {
        match r {
            Ok(s) if out.len() < n => out.push(s),
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if out.len() < n {
        return Err(first_err.unwrap_or_else(|| Error::InsufficientSamples(format!("located {} of {n}", out.len()))));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentRow {
    pub eps: f64,
    pub max_angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentFit {
    pub rows: Vec<TangentRow>,
    pub exponent: f64,
    pub r2: f64,
}

fn fit_rows(rows: &[(f64, f64)]) -> Result<PowerLawFit<f64>> {
    scaling_exponent(rows)
}

/// Power law of the tangent-cone angle of the conflict set in `eps`.
pub fn tangent_exponent(ak: AkParams, eps: &[f64], n: usize, seed: u64) -> Result<TangentFit> {
    let oracle = ak.outer();
    let mut rows = Vec::with_capacity(eps.len());
    for (i, &e) in eps.iter().enumerate() {
        let s = ak_conflict_samples(ak, e, n, seed.wrapping_add(i as u64), &oracle, CONFLICT_TOL)?;
        let pts: Vec<Point> = s.iter().map(|c| c.point).collect();
        rows.push(TangentRow { eps: e, max_angle: tangent_cone_angle(&pts) });
    }
    let fit = fit_rows(&rows.iter().map(|r| (r.eps, r.max_angle)).collect::<Vec<_>>())?;
    Ok(TangentFit { rows, exponent: fit.slope, r2: fit.r2 })
}

/// Grid over `(theta, phi, log s)` for triangulating 3-dimensional sets; `theta`
/// and `phi` are periodic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Grid3 {
    pub n_theta: usize,
    pub n_phi: usize,
    pub n_s: usize,
}

impl Grid3 {
    /// Roughly `budget` vertices, equally many per direction.
    pub fn from_budget(budget: usize) -> Self {
        let m = ((budget as f64).cbrt().round() as usize).max(4);
        Self { n_theta: m, n_phi: m, n_s: m }
    }
}

/// Ratio of the innermost to the outermost `s` of the grid; the part of the set
/// inside is ignored.
pub const GRID_S_SPAN: f64 = 1e-3;

/// Simplices with volume below this fraction of `eps^3` are dropped as degenerate.
pub const DEGENERATE_SIMPLEX: f64 = 1e-15;

fn simplex_volume(p: &[f64; 6], q: &[f64; 6], r: &[f64; 6], s: &[f64; 6]) -> f64 {
    let e = |a: &[f64; 6]| -> [f64; 6] { std::array::from_fn(|i| a[i] - p[i]) };
    let v = [e(q), e(r), e(s)];
    let dot = |a: &[f64; 6], b: &[f64; 6]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let g: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| dot(&v[i], &v[j])));
    let det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    det.max(0.0).sqrt() / 6.0
}

/// 3-volume of the image of `map` over `[0, 2pi)^2 x [s_lo, s_hi]` by Kuhn
/// triangulation of the grid, six simplices per cell.
pub fn triangulated_volume<F>(map: F, grid: Grid3, s_lo: f64, s_hi: f64, offset: (f64, f64), drop_below: f64) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Result<Point> + Sync,
{
    let (nt, np, ns) = (grid.n_theta, grid.n_phi, grid.n_s);
    let tau = std::f64::consts::TAU;
    let idx = |i: usize, j: usize, l: usize| (l * np + j % np) * nt + i % nt;
    let verts: Vec<Result<[f64; 6]>> = (0..nt * np * (ns + 1))
        .into_par_iter()
        .map(|v| {
            let (i, j, l) = (v % nt, (v / nt) % np, v / (nt * np));
            let th = offset.0 + tau * i as f64 / nt as f64;
            let ph = offset.1 + tau * j as f64 / np as f64;
            let s = s_lo * (s_hi / s_lo).powf(l as f64 / ns as f64);
            map(th, ph, s).map(|p| p.to_real())
        })
        .collect();
    let verts: Vec<[f64; 6]> = verts.into_iter().collect::<Result<_>>()?;
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let cells: Vec<f64> = (0..nt * np * ns)
        .into_par_iter()
        .map(|c| {
            let (i, j, l) = (c % nt, (c / nt) % np, c / (nt * np));
            let mut vol = 0.0;
            for perm in PERMS {
                let mut corner = [i, j, l];
                let mut pts = [verts[idx(i, j, l)]; 4];
                for (m, &axis) in perm.iter().enumerate() {
                    corner[axis] += 1;
                    pts[m + 1] = verts[idx(corner[0], corner[1], corner[2])];
                }
                let v = simplex_volume(&pts[0], &pts[1], &pts[2], &pts[3]);
                if v >= drop_below {
                    vol += v;
                }
            }
            vol
        })
        .collect();
    Ok(cells.iter().sum())
}

/// Largest `s` with `2 s^(k+1) + s^2 <= eps^2`: the conflict points `|x| = |y| = s^((k+1)/2)`,
/// `|z| = s` inside the ball.
fn ak_conflict_s_max(k: u32, eps: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, eps);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 2.0 * mid.powi(k as i32 + 1) + mid * mid > eps * eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

fn grid_offset(seed: u64, grid: Grid3) -> (f64, f64) {
    let mut r = rng::stream(seed, 0);
    let tau = std::f64::consts::TAU;
    (tau * r.random::<f64>() / grid.n_theta as f64, tau * r.random::<f64>() / grid.n_phi as f64)
}

/// 3-volume of the outer conflict set of `A_k` in `B_eps`, triangulated from located
/// samples. The grid vertex `(theta, phi, s)` is located from the start
/// `(2m e^(i theta), (m/2) e^(i((k+1) phi - theta)), s e^(i phi))`, `m = s^((k+1)/2)`.
pub fn ak_conflict_volume(ak: AkParams, eps: f64, grid: Grid3, seed: u64) -> Result<f64> {
    let k = ak.k();
    let oracle = ak.outer();
    let s_hi = ak_conflict_s_max(k, eps);
    let map = |th: f64, ph: f64, s: f64| {
        let m = s.powf((k + 1) as f64 / 2.0);
        let start = Point::new(
            C::from_polar(2.0 * m, th),
            C::from_polar(0.5 * m, (k + 1) as f64 * ph - th),
            C::from_polar(s, ph),
        );
        locate_conflict_point(ak, &ak.polish(&start), &oracle, CONFLICT_TOL).map(|c| c.point)
    };
    triangulated_volume(map, grid, s_hi * GRID_S_SPAN, s_hi, grid_offset(seed, grid), DEGENERATE_SIMPLEX * eps.powi(3))
}

/// The real cone `{|x| = |y| = kappa s, z = s e^(i phi), arg x + arg y = 2 phi}`,
/// a 3-dimensional set with volume exactly proportional to `eps^3`.
pub fn conical_control_volume(kappa: f64, eps: f64, grid: Grid3, seed: u64) -> Result<f64> {
    let s_hi = eps / (1.0 + 2.0 * kappa * kappa).sqrt();
    let map = |th: f64, ph: f64, s: f64| {
        Ok(Point::new(C::from_polar(kappa * s, th), C::from_polar(kappa * s, 2.0 * ph - th), C::from_polar(s, ph)))
    };
    triangulated_volume(map, grid, s_hi * GRID_S_SPAN, s_hi, grid_offset(seed, grid), DEGENERATE_SIMPLEX * eps.powi(3))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeReport {
    /// `(eps, volume)`.
    pub rows: Vec<(f64, f64)>,
    pub slope: f64,
    pub r2: f64,
}

fn slope_report(rows: Vec<(f64, f64)>) -> Result<SlopeReport> {
    if rows.len() < 4 {
        return Err(Error::InsufficientSamples(format!("need at least 4 radii, got {}", rows.len())));
    }
    let fit = fit_rows(&rows)?;
    Ok(SlopeReport { rows, slope: fit.slope, r2: fit.r2 })
}

/// Growth exponent of the 3-volume of the `A_k` conflict set; above 3 means its
/// 3-density vanishes.
pub fn conflict_density_slope(ak: AkParams, eps: &[f64], budget: usize, seed: u64) -> Result<SlopeReport> {
    let grid = Grid3::from_budget(budget);
    let rows = eps.iter().map(|&e| ak_conflict_volume(ak, e, grid, seed).map(|v| (e, v))).collect::<Result<Vec<_>>>()?;
    slope_report(rows)
}

/// The same estimator on [`conical_control_volume`], whose exact slope is 3.
pub fn control_density_slope(eps: &[f64], budget: usize, seed: u64) -> Result<SlopeReport> {
    let grid = Grid3::from_budget(budget);
    let rows = eps.iter().map(|&e| conical_control_volume(1.0, e, grid, seed).map(|v| (e, v))).collect::<Result<Vec<_>>>()?;
    slope_report(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfDensityRow {
    pub eps: f64,
    pub volume: f64,
    pub stderr: f64,
    pub share1: f64,
    pub share1_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfDensityReport {
    pub rows: Vec<HalfDensityRow>,
    /// Mean over radii of the volume share of `{d1 > d2}` (the side nearer `L2`).
    pub share1: f64,
    pub share2: f64,
    pub share_stderr: f64,
    pub total_slope: f64,
    pub r2: f64,
}

fn batch_stats(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// 4-volume of `A_k ∩ B_eps` split by the sign of `d1 - d2` (outer distances to the
/// axes, i.e. the sign of `|x| - |y|`). Monte Carlo over the parametrization
/// `(s, t) -> (s^(k+1), t^(k+1), st)`, which covers `V` `(k+1)` times with area density
/// `(k+1)^2 [(k+1)^2 |st|^(2k) + |s|^(2k+2) + |t|^(2k+2)]`.
pub fn half_density_check(ak: AkParams, eps: &[f64], n: usize, seed: u64) -> Result<HalfDensityReport> {
    if n == 0 || eps.is_empty() {
        return Err(Error::validation("half-density check needs n > 0 and radii"));
    }
    let k = ak.k();
    let kp = (k + 1) as f64;
    let per_batch = n.div_ceil(VOLUME_BATCHES);
    let mut rows = Vec::with_capacity(eps.len());
    for (ei, &e) in eps.iter().enumerate() {
        let radius = e.powf(1.0 / kp);
        let poly = (std::f64::consts::PI * radius * radius).powi(2);
        let batches: Vec<(f64, f64, usize)> = (0..VOLUME_BATCHES)
            .into_par_iter()
            .map(|b| {
                let mut r = rng::stream(seed.wrapping_add(ei as u64), b as u64);
                let (mut v1, mut v2, mut hits) = (0.0, 0.0, 0);
                for _ in 0..per_batch {
                    let s = rng::disk(&mut r, radius);
                    let t = rng::disk(&mut r, radius);
                    let (x, y, z) = (s.powu(k + 1), t.powu(k + 1), s * t);
                    if x.norm_sqr() + y.norm_sqr() + z.norm_sqr() > e * e {
                        continue;
                    }
                    let w = kp * kp * (kp * kp * (s * t).norm_sqr().powi(k as i32) + s.norm_sqr().powi(k as i32 + 1) + t.norm_sqr().powi(k as i32 + 1)) / kp;
                    hits += 1;
                    if x.norm() > y.norm() {
                        v1 += w;
                    } else if y.norm() > x.norm() {
                        v2 += w;
                    }
                }
                let scale = poly / per_batch as f64;
                (v1 * scale, v2 * scale, hits)
            })
            .collect();
        if batches.iter().all(|b| b.2 == 0) {
            return Err(Error::SamplingStalled { accepted: 0, attempts: per_batch * VOLUME_BATCHES });
        }
        let totals: Vec<f64> = batches.iter().map(|b| b.0 + b.1).collect();
        let shares: Vec<f64> = batches.iter().map(|b| if b.0 + b.1 > 0.0 { b.0 / (b.0 + b.1) } else { 0.5 }).collect();
        let (volume, stderr) = batch_stats(&totals);
        let v1: f64 = batches.iter().map(|b| b.0).sum();
        let v2: f64 = batches.iter().map(|b| b.1).sum();
        let (_, share1_stderr) = batch_stats(&shares);
        rows.push(HalfDensityRow { eps: e, volume, stderr, share1: v1 / (v1 + v2), share1_stderr });
    }
    let share1 = rows.iter().map(|r| r.share1).sum::<f64>() / rows.len() as f64;
    let share_stderr = rows.iter().map(|r| r.share1_stderr.powi(2)).sum::<f64>().sqrt() / rows.len() as f64;
    let fit = if rows.len() >= 3 {
        fit_rows(&rows.iter().map(|r| (r.eps, r.volume)).collect::<Vec<_>>())?
    } else {
        PowerLawFit { slope: f64::NAN, intercept: f64::NAN, r2: f64::NAN }
    };
    Ok(HalfDensityReport { rows, share1, share2: 1.0 - share1, share_stderr, total_slope: fit.slope, r2: fit.r2 })
}

/// Member `z^15 + z y^7 + x^5 + t x y^6` of the Briançon–Speder family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BSFamilyParams {
    pub t: C,
}

impl BSFamilyParams {
    pub fn new(t: C) -> Self {
        Self { t }
    }

    pub fn germ(&self) -> HypersurfaceGerm<f64> {
        HypersurfaceGerm::briancon_speder(self.t)
    }

    pub fn weights() -> WeightedHomogeneousData {
        WeightedHomogeneousData::integer([3, 2, 1], 15).expect("valid weights")
    }

    /// Relative residual of `f(l^3 x, l^2 y, l z) = l^15 f(x, y, z)`.
    pub fn quasi_homogeneity_residual(&self, p: &Point, lambda: f64) -> f64 {
        Self::weights().scaling_residual(&self.germ(), p, lambda)
    }

    /// The curves `(w s^3, 0, s)` with `w = e^(i pi/5)` (so `w^5 = -1`) and the `y`-axis.
    /// Both lie on every member of the family.
    pub fn default_curves() -> OuterCurves {
        let w = C::from_polar(1.0, std::f64::consts::PI / 5.0);
        let c1 = ParamCurve::new([vec![(w, 3)], vec![], vec![(C::new(1.0, 0.0), 1)]]).expect("valid curve");
        OuterCurves { c1, c2: ParamCurve::y_axis() }
    }
}

const BS_IDENTITY_LAMBDA: f64 = 0.7;

/// Link sample of `V_t`, with the quasi-homogeneity identity checked on every point.
pub fn bs_sample(bs: BSFamilyParams, eps: f64, n: usize, seed: u64) -> Result<SampleCloud<f64>> {
    let cloud = sample_link_with(&bs.germ(), eps, n, seed, &SamplingConfig::default())?;
    for p in &cloud.points {
        let r = bs.quasi_homogeneity_residual(p, BS_IDENTITY_LAMBDA);
        if r > 1e-12 {
            return Err(Error::validation(format!("quasi-homogeneity residual {r:e} at a sample")));
        }
    }
    Ok(cloud)
}

/// Monte Carlo split of `V ∩ B_eps` by the sign of `d1 - d2`, with a coarea estimate
/// of the 3-volume of the conflict set: `(1 / 2 eta) ∫ |grad_V g| dvol` over the slab
/// `|g| < eta`, `g = d1 - d2`, `eta = eta_rel eps`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlabEstimate {
    pub eps: f64,
    pub volume: f64,
    pub share1: f64,
    pub share1_stderr: f64,
    pub y_volume: f64,
    pub y_stderr: f64,
}

pub fn split_volume_and_slab<G: GraphCover + ?Sized, D: CurveDistances + ?Sized>(
    germ: &HypersurfaceGerm<f64>,
    cover: &G,
    oracle: &D,
    eps: f64,
    n: usize,
    seed: u64,
    eta_rel: f64,
) -> Result<SlabEstimate> {
    if !(eps > 0.0) || n == 0 || !(eta_rel > 0.0) {
        return Err(Error::validation("slab estimate needs eps > 0, n > 0, eta > 0"));
    }
    let eta = eta_rel * eps;
    let ball = std::f64::consts::PI.powi(2) / 2.0 * eps.powi(4);
    let per_batch = n.div_ceil(VOLUME_BATCHES);
    let h = 1e-6 * eps;
    let batches: Vec<Result<(f64, f64, f64, usize)>> = (0..VOLUME_BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, b as u64);
            let (mut v1, mut v2, mut vy, mut hits) = (0.0, 0.0, 0.0, 0);
            for _ in 0..per_batch {
                let [y, z] = rng::ball::<2>(&mut r, eps);
                for x in cover.sheets(y, z) {
                    let p = Point::new(x, y, z);
                    if p.norm_sqr() > eps * eps {
                        continue;
                    }
                    let Ok((gy, gz)) = cover.gradients(x, y, z) else { continue };
                    let w = 1.0 + gy.norm_sqr() + gz.norm_sqr();
                    hits += 1;
                    let g = oracle.distances(&p)?.diff;
                    if g > 0.0 {
                        v1 += w;
                    } else if g < 0.0 {
                        v2 += w;
                    }
                    if g.abs() < eta {
                        vy += w * surface_gradient_norm(germ, oracle, &p, h)? / (2.0 * eta);
                    }
                }
            }
            let scale = ball / per_batch as f64;
            Ok((v1 * scale, v2 * scale, vy * scale, hits))
        })
        .collect();
    let batches = batches.into_iter().collect::<Result<Vec<_>>>()?;
    if batches.iter().all(|b| b.3 == 0) {
        return Err(Error::SamplingStalled { accepted: 0, attempts: per_batch * VOLUME_BATCHES });
    }
    let v1: f64 = batches.iter().map(|b| b.0).sum();
    let v2: f64 = batches.iter().map(|b| b.1).sum();
    let shares: Vec<f64> = batches.iter().map(|b| if b.0 + b.1 > 0.0 { b.0 / (b.0 + b.1) } else { 0.5 }).collect();
    let (_, share1_stderr) = batch_stats(&shares);
    let (y_volume, y_stderr) = batch_stats(&batches.iter().map(|b| b.2).collect::<Vec<_>>());
    let nb = VOLUME_BATCHES as f64;
    Ok(SlabEstimate {
        eps,
        volume: (v1 + v2) / nb,
        share1: if v1 + v2 > 0.0 { v1 / (v1 + v2) } else { 0.5 },
        share1_stderr,
        y_volume,
        y_stderr,
    })
}

/// `|grad g|` of `g = d1 - d2` restricted to the tangent space of `V` at `p`, by
/// central differences in the six real ambient directions.
fn surface_gradient_norm<D: CurveDistances + ?Sized>(germ: &HypersurfaceGerm<f64>, oracle: &D, p: &Point, h: f64) -> Result<f64> {
    let base = p.to_real();
    let mut grad = [0.0; 6];
    for (i, g) in grad.iter_mut().enumerate() {
        let mut a = base;
        let mut b = base;
        a[i] += h;
        b[i] -= h;
        let ga = oracle.distances(&Point::from_real(&a))?.diff;
        let gb = oracle.distances(&Point::from_real(&b))?.diff;
        *g = (ga - gb) / (2.0 * h);
    }
    let gc = Point::from_real(&grad);
    let nrm = germ.unit_conormal(p)?;
    // remove the component along the complex normal line
    let along = gc.hdot(&nrm);
    let tangential = gc - nrm * along;
    Ok(tangential.norm())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BsRow {
    pub eps: f64,
    pub n_located: usize,
    pub max_angle: f64,
    pub y_volume: f64,
    pub volume: f64,
    pub share1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BsReport {
    pub k_or_t: [f64; 2],
    pub eps_window: (f64, f64),
    pub tangent_exponent: f64,
    pub density_slope: f64,
    pub shares: (f64, f64),
    pub share_stderr: f64,
    pub mode: MetricMode,
    pub curves: (String, String),
    pub rows: Vec<BsRow>,
}

/// Conflict-set diagnostics for `V_t` and a user-supplied pair of curves: conflict
/// points located on the link between samples on opposite sides, their angle to the
/// `z`-axis, the coarea 3-volume of the conflict set and the side shares. It
/// produces numbers only and draws no conclusion.
pub fn bs_conflict_explore(bs: BSFamilyParams, curves: &OuterCurves, eps: &[f64], budget: usize, seed: u64) -> Result<BsReport> {
    let germ = bs.germ();
    if curves.c1 == curves.c2 {
        return Err(Error::validation("the two curves are identical"));
    }
    let r_max = eps.iter().copied().fold(0.0, f64::max);
    for c in [&curves.c1, &curves.c2] {
        if !c.lies_on(&germ, r_max.max(1e-3)) {
            return Err(Error::validation(format!("curve '{c}' does not lie on the surface")));
        }
    }
    if eps.len() < 4 || budget == 0 {
        return Err(Error::validation("need at least 4 radii and a positive budget"));
    }
    let cover = crate::density::GermCover::new(germ.clone())?;
    let cfg = SamplingConfig::default();
    let mut rows = Vec::with_capacity(eps.len());
    let mut share_var = 0.0;
    for (i, &e) in eps.iter().enumerate() {
        let s = seed.wrapping_add(i as u64);
        let located = bs_locate_on_link(&germ, curves, e, budget.div_ceil(8).max(8), s, &cfg)?;
        let pts: Vec<Point> = located.iter().map(|c| c.point).collect();
        let slab = split_volume_and_slab(&germ, &cover, curves, e, budget, s, 0.05)?;
        share_var += slab.share1_stderr.powi(2);
        rows.push(BsRow {
            eps: e,
            n_located: located.len(),
            max_angle: tangent_cone_angle(&pts),
            y_volume: slab.y_volume,
            volume: slab.volume,
            share1: slab.share1,
        });
    }
    let tangent = fit_rows(&rows.iter().map(|r| (r.eps, r.max_angle)).collect::<Vec<_>>())?;
    let density = fit_rows(&rows.iter().map(|r| (r.eps, r.y_volume)).collect::<Vec<_>>())?;
    let share1 = rows.iter().map(|r| r.share1).sum::<f64>() / rows.len() as f64;
    let lo = eps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BsReport {
        k_or_t: [bs.t.re, bs.t.im],
        eps_window: (lo, r_max),
        tangent_exponent: tangent.slope,
        density_slope: density.slope,
        shares: (share1, 1.0 - share1),
        share_stderr: share_var.sqrt() / rows.len() as f64,
        mode: MetricMode::Outer,
        curves: (curves.c1.to_string(), curves.c2.to_string()),
        rows,
    })
}

/// Conflict points on the link `V ∩ S_eps`: samples on opposite sides are paired
/// and joined by a chord whose points are projected back to the link.
fn bs_locate_on_link(
    germ: &HypersurfaceGerm<f64>,
    oracle: &OuterCurves,
    eps: f64,
    n: usize,
    seed: u64,
    cfg: &SamplingConfig,
) -> Result<Vec<ConflictSample>> {
    let cloud = sample_link_with(germ, eps, 4 * n, seed, cfg)?;
    let signs: Vec<f64> = cloud.points.par_iter().map(|p| oracle.distances(p).map(|d| d.diff.signum())).collect::<Result<_>>()?;
    let pos: Vec<Point> = cloud.points.iter().zip(&signs).filter(|(_, &s)| s > 0.0).map(|(p, _)| *p).collect();
    let neg: Vec<Point> = cloud.points.iter().zip(&signs).filter(|(_, &s)| s < 0.0).map(|(p, _)| *p).collect();
    let pairs: Vec<(Point, Point)> = pos.into_iter().zip(neg).take(n).collect();
    let located: Vec<Option<ConflictSample>> = pairs
        .par_iter()
        .map(|&(p, q)| {
            let path = |t: f64| {
                let mid = p * (1.0 - t) + q * t;
                project_to_link(germ, mid, eps, cfg).map(|r| r.0).ok_or(Error::NoConvergence { iterations: cfg.rounds, residual: f64::NAN })
            };
            bisect_path(path, 1.0, oracle, 1e-9).ok()
        })
        .collect();
    let out: Vec<ConflictSample> = located.into_iter().flatten().collect();
    if out.is_empty() {
        return Err(Error::InsufficientSamples(format!("no conflict point located at eps = {eps:e}")));
    }
    Ok(out)
}

/// Germ `x` (the plane `x = 0`), used as a control for the slab estimator.
pub fn plane_x0() -> HypersurfaceGerm<f64> {
    HypersurfaceGerm::new(vec![Term::real(1.0, [1, 0, 0])]).expect("valid germ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::LinearCover;
    use crate::fit::log_space_desc;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn a2() -> AkParams {
        AkParams::new(2).unwrap()
    }

    #[test]
    fn axis_distance_examples() {
        let ak = a2();
        let o = ak.outer();
        let p = Point::new(c(0.0, 0.0), c(0.3, 0.1), c(0.0, 0.0));
        assert_eq!(ak_axis_distances(ak, &p, &o).unwrap().0, 0.0);
        // swap-fixed point: x = y, x^2 = z^3
        let z = c(0.04, 0.03);
        let x = z.powf(1.5);
        let p = Point::new(x, x, z);
        let (d1, d2) = ak_axis_distances(ak, &p, &o).unwrap();
        assert_eq!(d1, d2);
        // brute force over dense samples of each axis
        let brute = |axis: usize| {
            let mut best = f64::INFINITY;
            for i in 0..400 {
                for j in 0..400 {
                    let s = c(-0.2 + 0.4 * i as f64 / 399.0, -0.2 + 0.4 * j as f64 / 399.0);
                    let q = if axis == 1 { Point::new(c(0.0, 0.0), s, c(0.0, 0.0)) } else { Point::new(s, c(0.0, 0.0), c(0.0, 0.0)) };
                    best = best.min(p.dist(&q));
                }
            }
            best
        };
        assert!((brute(1) / d1 - 1.0).abs() < 0.05);
        assert!((brute(2) / d2 - 1.0).abs() < 0.05);
        let off = Point::new(c(0.3, 0.0), c(0.3, 0.0), c(0.0, 0.0));
        assert!(matches!(ak_axis_distances(ak, &off, &o), Err(Error::OffSurface { .. })));
    }

    #[test]
    fn curve_distance_matches_closed_form() {
        let curve = BSFamilyParams::default_curves().c1;
        let p = Point::new(c(0.01, 0.02), c(-0.03, 0.0), c(0.2, -0.1));
        let (s, r) = nearest_on_curve(&curve, &p).unwrap();
        let d = sorted_sum(&r).sqrt();
        // dense brute force over the parameter disk
        let mut best = f64::INFINITY;
        for i in 0..600 {
            for j in 0..600 {
                let t = c(-0.4 + 0.8 * i as f64 / 599.0, -0.4 + 0.8 * j as f64 / 599.0);
                best = best.min(curve.eval(t).dist(&p));
            }
        }
        assert!(d <= best + 1e-12 && d >= best * 0.99, "{d} {best}");
        assert!((curve.eval(s).dist(&p) - d).abs() < 1e-14);
    }

    #[test]
    fn locate_examples() {
        let ak = a2();
        let o = ak.outer();
        let start = ak.polish(&Point::new(c(0.05, 0.01), c(0.0, 0.0), c(0.02, 0.01)).clone());
        // make y nonzero: y = z^3 / x
        let start = Point::new(start.x, start.z.powu(3) / start.x, start.z);
        assert!(start.x.norm() > start.y.norm());
        let s = locate_conflict_point(ak, &start, &o, CONFLICT_TOL).unwrap();
        let (r_sym, r_power) = conflict_invariant_residuals(&s, 2);
        assert!(r_sym <= 1e-3 && r_power <= 1e-6, "{r_sym} {r_power}");
        assert!(s.residual <= CONFLICT_TOL * s.d1.max(s.d2));
        // on Y already
        let s2 = locate_conflict_point(ak, &s.point, &o, CONFLICT_TOL).unwrap();
        assert_eq!(s2.point, s.point);
        // on L2: no crossing possible
        let axis = Point::new(c(0.1, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(locate_conflict_point(ak, &axis, &o, CONFLICT_TOL), Err(Error::NoSignChange)));
    }

    #[test]
    fn residual_examples() {
        let z = c(0.1, 0.05);
        let x = z.powf(1.5);
        let sample = |p: Point| ConflictSample { point: p, d1: 0.0, d2: 0.0, mode: MetricMode::Outer, residual: 0.0 };
        let (r_sym, r_power) = conflict_invariant_residuals(&sample(Point::new(x, z.powu(3) / x, z)), 2);
        assert!(r_sym < 1e-15);
        assert!(r_power < 1e-14);
        // |x| = |y| with another phase is still symmetric
        let y = c(0.0, x.norm());
        assert!(conflict_invariant_residuals(&sample(Point::new(x, y, z)), 2).0 < 1e-15);
    }

    #[test]
    fn located_samples_meet_the_invariants() {
        let ak = a2();
        let o = ak.outer();
        for eps in [1e-4, 1e-2, 1e-1] {
            for s in ak_conflict_samples(ak, eps, 40, 3, &o, CONFLICT_TOL).unwrap() {
                let (r_sym, r_power) = conflict_invariant_residuals(&s, 2);
                assert!(r_sym <= 1e-8 && r_power <= 1e-6, "{r_sym} {r_power}");
                assert_relative_eq!(s.point.norm(), eps, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn tangent_angle_examples() {
        assert_eq!(tangent_cone_angle(&[Point::new(c(0.0, 0.0), c(0.0, 0.0), c(0.3, 0.1))]), 0.0);
        for k in [2, 3] {
            let fit = tangent_exponent(AkParams::new(k).unwrap(), &log_space_desc(1e-4, 1e-1, 4), 30, 1).unwrap();
            assert!((fit.exponent - (k as f64 - 1.0) / 2.0).abs() <= 0.1, "{fit:?}");
            for w in fit.rows.windows(2) {
                assert!(w[1].max_angle < w[0].max_angle);
            }
        }
    }

    #[test]
    fn synthetic_slopes() {
        let eps = log_space_desc(1e-4, 1e-1, 4);
        let control = control_density_slope(&eps, 4000, 1).unwrap();
        assert!((control.slope - 3.0).abs() <= 0.05, "{control:?}");
        let rows: Vec<(f64, f64)> = eps.iter().map(|&e| (e, 2.0 * e.powf(3.5))).collect();
        assert_relative_eq!(slope_report(rows).unwrap().slope, 3.5, epsilon = 1e-12);
        // exact cone volume: |x| = |y| = s, z = s e^(i phi): Gram determinant 18 s^4
        let v = conical_control_volume(1.0, 1.0, Grid3::from_budget(27000), 0).unwrap();
        let s_hi = 1.0 / 3f64.sqrt();
        let exact = std::f64::consts::TAU.powi(2) * 18f64.sqrt() * s_hi.powi(3) / 3.0 * (1.0 - GRID_S_SPAN.powi(3));
        assert!((v / exact - 1.0).abs() < 0.02, "{v} {exact}");
    }

    #[test]
    fn a2_conflict_set_has_vanishing_density() {
        let rep = conflict_density_slope(a2(), &log_space_desc(1e-4, 1e-1, 4), 4000, 2).unwrap();
        assert!(rep.slope > 3.1, "{rep:?}");
        assert!((rep.slope - 3.5).abs() < 0.1, "{rep:?}");
    }

    #[test]
    fn half_density_shares() {
        let rep = half_density_check(a2(), &log_space_desc(1e-2, 1e-1, 4), 100_000, 5).unwrap();
        assert!((rep.share1 - 0.5).abs() <= 2.0 * rep.share_stderr.max(1e-3), "{rep:?}");
        assert_eq!(rep.share1 + rep.share2, 1.0);
        assert!((rep.total_slope - 4.0).abs() <= 0.15, "{rep:?}");
        for r in &rep.rows {
            assert!((0.48..=0.52).contains(&r.share1));
        }
    }

    #[test]
    fn bs_identity_and_sampling() {
        for t in [c(0.0, 0.0), c(1.0, 0.0)] {
            let bs = BSFamilyParams::new(t);
            let mut r = rng::stream(4, 0);
            for _ in 0..200 {
                let [x, y, z] = rng::ball::<3>(&mut r, 1.0);
                assert!(bs.quasi_homogeneity_residual(&Point::new(x, y, z), 0.7) <= 1e-12);
            }
            let cloud = bs_sample(bs, 0.3, 20, 1).unwrap();
            assert_eq!(cloud.len(), 20);
            for (f, s) in cloud.residual_f.iter().zip(&cloud.residual_sphere) {
                assert!(*f <= 0.3 * 1e-10 && *s <= 0.3 * 1e-6);
            }
        }
        assert!(BSFamilyParams::default_curves().c1.lies_on(&BSFamilyParams::new(c(0.3, 0.2)).germ(), 0.5));
    }

    #[test]
    fn bs_explore_validates_curves() {
        let bs = BSFamilyParams::new(c(1.0, 0.0));
        let same = OuterCurves { c1: ParamCurve::y_axis(), c2: ParamCurve::y_axis() };
        let eps = log_space_desc(0.1, 0.4, 4);
        assert!(matches!(bs_conflict_explore(bs, &same, &eps, 100, 0), Err(Error::Validation(_))));
        let off = OuterCurves { c1: ParamCurve::z_axis(), c2: ParamCurve::y_axis() };
        assert!(matches!(bs_conflict_explore(bs, &off, &eps, 100, 0), Err(Error::Validation(_))));
    }

    #[test]
    fn slab_estimator_on_a_plane() {
        // Y = {|y| = |z|} in the plane x = 0: volume 4 pi^2 eps^3 / 6
        let germ = plane_x0();
        let cover = LinearCover { alpha: c(0.0, 0.0), beta: c(0.0, 0.0) };
        let curves = OuterCurves { c1: ParamCurve::z_axis(), c2: ParamCurve::y_axis() };
        let eps = 0.1;
        let est = split_volume_and_slab(&germ, &cover, &curves, eps, 60_000, 1, 0.02).unwrap();
        let exact = 4.0 * std::f64::consts::PI.powi(2) * eps.powi(3) / 6.0;
        assert!((est.y_volume / exact - 1.0).abs() < 0.05 + 3.0 * est.y_stderr / exact, "{est:?} {exact}");
        assert!((est.share1 - 0.5).abs() < 0.02);
    }

    #[test]
    fn curve_text_roundtrip() {
        let c1 = BSFamilyParams::default_curves().c1;
        let back: ParamCurve = c1.to_string().parse().unwrap();
        assert_eq!(back, c1);
        assert!("1 0 1 | |".parse::<ParamCurve>().is_ok());
        assert!("1 0 0 | |".parse::<ParamCurve>().is_err());
        assert!("1 0 1 |".parse::<ParamCurve>().is_err());
    }

    #[test]
    fn inner_chart_is_nearly_swap_equivariant() {
        let ak = a2();
        let chart = ak.inner_chart(0.02, 0.1, 1500, 40, 7).unwrap();
        let o = ak.outer();
        let cfg = SamplingConfig::default();
        let cloud = sample_link_with(&ak.germ(), 0.05, 10, 99, &cfg).unwrap();
        for p in &cloud.points {
            let a = chart.distances(p).unwrap();
            let b = chart.distances(&swap(p)).unwrap();
            assert!((a.d1 - b.d2).abs() <= 2.0 * chart.h, "{a:?} {b:?}");
            let outer = o.distances(p).unwrap();
            assert!(a.d1 >= outer.d1 * 0.99 && a.d2 >= outer.d2 * 0.99);
        }
        let s = locate_conflict_point(ak, &ak.polish(&cloud.points[0]), &chart, 1e-9);
        assert!(matches!(s, Ok(_) | Err(Error::NoSignChange)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn outer_distances_are_swap_equivariant(yr in -0.1f64..0.1, yi in -0.1f64..0.1, zr in -0.1f64..0.1, zi in -0.1f64..0.1) {
            let ak = a2();
            let (y, z) = (c(yr, yi), c(zr, zi));
            prop_assume!(y.norm() > 1e-6);
            let p = Point::new(z.powu(3) / y, y, z);
            let o = ak.outer();
            let a = o.distances(&p).unwrap();
            let b = o.distances(&swap(&p)).unwrap();
            prop_assert_eq!((a.d1, a.d2), (b.d2, b.d1));
            prop_assert_eq!(a.diff, -b.diff);
        }

        #[test]
        fn symmetric_located_points_satisfy_power_law(yr in -0.1f64..0.1, yi in -0.1f64..0.1, zr in -0.1f64..0.1, zi in -0.1f64..0.1) {
            let ak = a2();
            let (y, z) = (c(yr, yi), c(zr, zi));
            prop_assume!(y.norm() > 1e-6 && z.norm() > 1e-4);
            let p = Point::new(z.powu(3) / y, y, z);
            if let Ok(s) = locate_conflict_point(ak, &p, &ak.outer(), CONFLICT_TOL) {
                let (r_sym, r_power) = conflict_invariant_residuals(&s, 2);
                if r_sym <= 1e-8 {
                    prop_assert!(r_power <= 1e-6);
                }
            }
        }
    }
}
