//! Volumes of germs inside small balls, their growth exponents and `r`-densities.
//!
//! Horns are integrated by quadrature. Complex surfaces that are branched covers of
//! `C^2` over the `(y, z)` plane are integrated by Monte Carlo, weighting each sheet
//! by the area density `1 + |x_y|^2 + |x_z|^2` of a holomorphic graph.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::brieskorn::BrieskornPair;
use crate::error::{Error, Result};
use crate::fit::{scaling_exponent, PowerLawFit};
use crate::inner_metric::{PointCloud, Surface};
use crate::rng;
use crate::variety::{ComplexPoint3, HypersurfaceGerm};

type C = Complex<f64>;

/// The real surface `(x^2 + y^2)^q = z^(2p)`, `z >= 0`, i.e. `sqrt(x^2 + y^2) = z^beta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HornParams {
    p: u32,
    q: u32,
}

impl HornParams {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if p == 0 || q == 0 || p < q {
            return Err(Error::validation(format!("horn needs p >= q >= 1, got p = {p}, q = {q}")));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// Height where the horn leaves the ball of radius `eps`: the root of `z^(2 beta) + z^2 = eps^2`.
    pub fn height_in_ball(&self, eps: f64) -> f64 {
        let beta = self.beta();
        let (mut lo, mut hi) = (0.0, eps);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.powf(2.0 * beta) + mid * mid > eps * eps {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn area_density(&self, z: f64) -> f64 {
        let beta = self.beta();
        std::f64::consts::TAU * z.powf(beta) * (1.0 + beta * beta * z.powf(2.0 * beta - 2.0)).sqrt()
    }

    /// Leading coefficient `2 pi / (beta + 1)` of the area, `area ~ c eps^(beta + 1)`.
    pub fn leading_coefficient(&self) -> f64 {
        std::f64::consts::TAU / (self.beta() + 1.0)
    }
}

/// Horns live in `R^3`; projection is to the nearest point along the profile curve.
impl Surface<f64> for HornParams {
    fn project(&self, p: &[f64]) -> Option<Vec<f64>> {
        let beta = self.beta();
        let (rp, zp) = (p[0].hypot(p[1]), p[2]);
        // critical point of (z^beta - rp)^2 + (z - zp)^2 on z >= 0, by bisection
        let phi = |z: f64| (z.powf(beta) - rp) * beta * z.powf(beta - 1.0) + (z - zp);
        let mut hi = zp.max(rp.powf(1.0 / beta)).max(0.0) + 1e-300;
        if phi(0.0) >= 0.0 {
            hi = 0.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let z = 0.5 * (lo + hi);
        let r = z.powf(beta);
        let (cx, cy) = if rp > 0.0 { (p[0] / rp, p[1] / rp) } else { (1.0, 0.0) };
        Some(vec![r * cx, r * cy, z])
    }
}

/// Area of the horn inside the ball of radius `eps`.
pub fn horn_area(horn: HornParams, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::validation("eps must be positive"));
    }
    let zmax = horn.height_in_ball(eps);
    let scale = horn.leading_coefficient() * zmax.powf(horn.beta() + 1.0);
    let out = quadrature::double_exponential::integrate(|z| horn.area_density(z), 0.0, zmax, 1e-12 * scale);
    Ok(out.integral)
}

/// Points of the horn inside the ball of radius `eps`, uniform in area.
pub fn sample_horn_cloud(horn: HornParams, eps: f64, n: usize, seed: u64) -> PointCloud<f64> {
    let beta = horn.beta();
    let zmax = horn.height_in_ball(eps);
    let stretch_max = (1.0 + beta * beta * zmax.powf(2.0 * beta - 2.0)).sqrt();
    let mut r = rng::stream(seed, 0);
    let mut cloud = PointCloud::new(3);
    while cloud.len() < n {
        // density z^beta by inversion, then thin by the slope factor
        let z = zmax * r.random::<f64>().powf(1.0 / (beta + 1.0));
        let accept = (1.0 + beta * beta * z.powf(2.0 * beta - 2.0)).sqrt() / stretch_max;
        let th = rng::phase(&mut r);
        if r.random::<f64>() <= accept {
            let rad = z.powf(beta);
            cloud.push(&[rad * th.cos(), rad * th.sin(), z]);
        }
    }
    cloud
}

/// `(x_y, x_z) = (-b y^(b-1), b z^(b-1)) / (a x^(a-1))` on `x^a + y^b - z^b = 0`.
pub fn implicit_graph_gradients(ab: BrieskornPair, y: C, z: C, x: C) -> Result<(C, C)> {
    let scale = x.norm() + y.norm() + z.norm();
    if x.norm() <= 1e-14 * scale || x.norm() == 0.0 {
        return Err(Error::OnBranchLocus { abs_x: x.norm() });
    }
    let (a, b) = (ab.a() as f64, ab.b() as f64);
    let den = x.powu(ab.a() - 1) * a;
    Ok((-(y.powu(ab.b() - 1) * b) / den, z.powu(ab.b() - 1) * b / den))
}

/// A surface that is a branched cover of the `(y, z)` plane: over each `(y, z)` it
/// has finitely many points `x`, each locally a holomorphic graph.
pub trait GraphCover: Sync {
    fn n_sheets(&self) -> usize;
    /// The sheets over `(y, z)`, in a fixed order.
    fn sheets(&self, y: C, z: C) -> Vec<C>;
    fn gradients(&self, x: C, y: C, z: C) -> Result<(C, C)>;
}

#[derive(Clone, Copy, Debug)]
pub struct BrieskornCover(pub BrieskornPair);

impl GraphCover for BrieskornCover {
    fn n_sheets(&self) -> usize {
        self.0.a() as usize
    }

    fn sheets(&self, y: C, z: C) -> Vec<C> {
        self.0.sheets(y, z)
    }

    fn gradients(&self, x: C, y: C, z: C) -> Result<(C, C)> {
        implicit_graph_gradients(self.0, y, z, x)
    }
}

/// The plane `x = alpha y + beta z`.
#[derive(Clone, Copy, Debug)]
pub struct LinearCover {
    pub alpha: C,
    pub beta: C,
}

impl GraphCover for LinearCover {
    fn n_sheets(&self) -> usize {
        1
    }

    fn sheets(&self, y: C, z: C) -> Vec<C> {
        vec![self.alpha * y + self.beta * z]
    }

    fn gradients(&self, _x: C, _y: C, _z: C) -> Result<(C, C)> {
        Ok((self.alpha, self.beta))
    }
}

/// A germ whose polynomial is monic in `x` up to a constant, covering the `(y, z)`
/// plane by its roots in `x`.
#[derive(Clone, Debug)]
pub struct GermCover {
    germ: HypersurfaceGerm<f64>,
    degree: usize,
}

impl GermCover {
    pub fn new(germ: HypersurfaceGerm<f64>) -> Result<Self> {
        let degree = germ.terms().iter().map(|t| t.exps[0]).max().unwrap_or(0) as usize;
        if degree == 0 {
            return Err(Error::validation("germ does not involve x"));
        }
        let leading_is_constant = germ.terms().iter().filter(|t| t.exps[0] as usize == degree).all(|t| t.exps[1] == 0 && t.exps[2] == 0);
        if !leading_is_constant {
            return Err(Error::validation("leading coefficient in x must be constant"));
        }
        Ok(Self { germ, degree })
    }

    pub fn germ(&self) -> &HypersurfaceGerm<f64> {
        &self.germ
    }

    /// Coefficients of the polynomial in `x`, constant term first.
    fn coefficients(&self, y: C, z: C) -> Vec<C> {
        let mut c = vec![C::new(0.0, 0.0); self.degree + 1];
        for t in self.germ.terms() {
            c[t.exps[0] as usize] += t.coeff * y.powu(t.exps[1]) * z.powu(t.exps[2]);
        }
        c
    }
}

impl GraphCover for GermCover {
    fn n_sheets(&self) -> usize {
        self.degree
    }

    fn sheets(&self, y: C, z: C) -> Vec<C> {
        poly_roots(&self.coefficients(y, z))
    }

    fn gradients(&self, x: C, y: C, z: C) -> Result<(C, C)> {
        let g = self.germ.gradient(&ComplexPoint3::new(x, y, z));
        let scale = g.iter().map(|c| c.norm()).sum::<f64>();
        if g[0].norm() <= 1e-14 * scale || g[0].norm() == 0.0 {
            return Err(Error::OnBranchLocus { abs_x: x.norm() });
        }
        Ok((-g[1] / g[0], -g[2] / g[0]))
    }
}

/// Roots of `sum c_k x^k` (nonzero leading coefficient), sorted by argument then modulus.
pub fn poly_roots(coeffs: &[C]) -> Vec<C> {
    let d = coeffs.len() - 1;
    let lead = coeffs[d];
    let c: Vec<C> = coeffs.iter().map(|&x| x / lead).collect();
    let eval = |x: C| c.iter().rev().fold(C::new(0.0, 0.0), |acc, &k| acc * x + k);
    let deriv = |x: C| {
        c.iter().enumerate().skip(1).rev().fold(C::new(0.0, 0.0), |acc, (k, &ck)| acc * x + ck * k as f64)
    };
    // Cauchy bound for the starting circle
    let radius = 1.0 + c[..d].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut z: Vec<C> = (0..d).map(|k| C::from_polar(radius, 0.4 + std::f64::consts::TAU * k as f64 / d as f64)).collect();
    // Aberth iteration
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..d {
            let p = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / deriv(z[i]);
            let s: C = (0..d).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (C::new(1.0, 0.0) - ratio * s);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / z[i].norm().max(f64::MIN_POSITIVE));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z.sort_by(|p, q| p.arg().total_cmp(&q.arg()).then(p.norm().total_cmp(&q.norm())));
    z
}

/// Monte Carlo estimate of a 4-dimensional volume, with per-sheet totals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub eps: f64,
    pub volume: f64,
    pub stderr: f64,
    pub per_sheet: Vec<f64>,
    pub per_sheet_stderr: Vec<f64>,
    pub n: usize,
}

pub const VOLUME_BATCHES: usize = 32;

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Volume of `V ∩ B_eps` for a graph cover `V`: `(y, z)` uniform in the ball of
/// radius `eps` of `C^2`, each sheet kept when its point lies in `B_eps` and weighted
/// by `1 + |x_y|^2 + |x_z|^2`. The sample is split into fixed batches on separate
/// streams and the standard error comes from the batch means.
pub fn cover_volume<G: GraphCover + ?Sized>(cover: &G, eps: f64, n: usize, seed: u64) -> Result<VolumeEstimate> {
    if !(eps > 0.0) || n == 0 {
        return Err(Error::validation("volume needs eps > 0 and n > 0"));
    }
    let sheets = cover.n_sheets();
    let ball = std::f64::consts::PI.powi(2) / 2.0 * eps.powi(4);
    let per_batch = n.div_ceil(VOLUME_BATCHES);
    let batches: Vec<(Vec<f64>, usize)> = (0..VOLUME_BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(seed, b as u64);
            let mut sums = vec![0.0; sheets];
            let mut hits = 0;
            for _ in 0..per_batch {
                let [y, z] = rng::ball::<2>(&mut rng, eps);
                let base = y.norm_sqr() + z.norm_sqr();
                for (k, x) in cover.sheets(y, z).into_iter().enumerate() {
                    if base + x.norm_sqr() > eps * eps {
                        continue;
                    }
                    // the branch locus has measure zero
                    if let Ok((gy, gz)) = cover.gradients(x, y, z) {
                        sums[k] += 1.0 + gy.norm_sqr() + gz.norm_sqr();
                        hits += 1;
                    }
                }
            }
            (sums.into_iter().map(|s| ball * s / per_batch as f64).collect(), hits)
        })
        .collect();
    let hits: usize = batches.iter().map(|b| b.1).sum();
    if hits == 0 {
        return Err(Error::SamplingStalled { accepted: 0, attempts: per_batch * VOLUME_BATCHES });
    }
    let totals: Vec<f64> = batches.iter().map(|(s, _)| s.iter().sum()).collect();
    let (volume, stderr) = mean_and_stderr(&totals);
    let (per_sheet, per_sheet_stderr) = (0..sheets)
        .map(|k| mean_and_stderr(&batches.iter().map(|(s, _)| s[k]).collect::<Vec<_>>()))
        .unzip();
    Ok(VolumeEstimate { eps, volume, stderr, per_sheet, per_sheet_stderr, n: per_batch * VOLUME_BATCHES })
}

pub fn brieskorn_volume(ab: BrieskornPair, eps: f64, n: usize, seed: u64) -> Result<VolumeEstimate> {
    cover_volume(&BrieskornCover(ab), eps, n, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthEntry {
    pub eps: f64,
    pub volume: f64,
    pub stderr: f64,
}

/// Volumes at a decreasing sequence of radii.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthSeries {
    entries: Vec<GrowthEntry>,
    pub dimension_hint: u32,
}

impl GrowthSeries {
    pub fn new(entries: Vec<GrowthEntry>, dimension_hint: u32) -> Result<Self> {
        if entries.windows(2).any(|w| !(w[1].eps < w[0].eps)) {
            return Err(Error::validation("eps must be strictly decreasing"));
        }
        if entries.iter().any(|e| !(e.volume >= 0.0) || !(e.eps > 0.0)) {
            return Err(Error::validation("eps must be positive and volumes nonnegative"));
        }
        Ok(Self { entries, dimension_hint })
    }

    /// Noise-free series `volume = f(eps)`.
    pub fn exact(eps: &[f64], f: impl Fn(f64) -> f64, dimension_hint: u32) -> Result<Self> {
        Self::new(eps.iter().map(|&e| GrowthEntry { eps: e, volume: f(e), stderr: 0.0 }).collect(), dimension_hint)
    }

    pub fn entries(&self) -> &[GrowthEntry] {
        &self.entries
    }

    pub fn fit(&self) -> Result<PowerLawFit<f64>> {
        let pts: Vec<(f64, f64)> = self.entries.iter().map(|e| (e.eps, e.volume)).collect();
        scaling_exponent(&pts)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,volume,stderr\n");
        for e in &self.entries {
            s.push_str(&format!("{:e},{:e},{:e}\n", e.eps, e.volume, e.stderr));
        }
        s
    }
}

/// Slope tolerance separating "density `r` exists" from vanishing or divergence.
pub const R_DENSITY_TOL: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RDensity {
    /// `vol / eps^r` at the smallest radius, `0` when vanishing and `+inf` when diverging.
    pub estimate: f64,
    pub vanishing: bool,
    pub divergent: bool,
    pub slope: f64,
}

pub fn r_density(series: &GrowthSeries, r: f64) -> Result<RDensity> {
    let fit = series.fit()?;
    let s = fit.slope;
    let vanishing = s > r + R_DENSITY_TOL;
    let divergent = s < r - R_DENSITY_TOL;
    let estimate = if vanishing {
        0.0
    } else if divergent {
        f64::INFINITY
    } else {
        let last = series.entries.last().expect("fit needs entries");
        last.volume / last.eps.powf(r)
    };
    Ok(RDensity { estimate, vanishing, divergent, slope: s })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub mu: f64,
    pub r2: f64,
    pub window: (f64, f64),
}

/// Log-log slope of the volume, the volume growth number of a power-law germ.
pub fn volume_growth_number(series: &GrowthSeries) -> Result<GrowthFit> {
    let e = &series.entries;
    if e.len() < 4 {
        return Err(Error::DegenerateFit(format!("need at least 4 entries, got {}", e.len())));
    }
    let (hi, lo) = (e[0].eps, e[e.len() - 1].eps);
    if hi / lo < 10.0 * (1.0 - 1e-9) {
        return Err(Error::DegenerateFit("series spans less than a decade".into()));
    }
    let fit = series.fit()?;
    Ok(GrowthFit { mu: fit.slope, r2: fit.r2, window: (lo, hi) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::log_space_desc;
    use crate::variety::Term;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn cone_area() {
        let cone = HornParams::new(1, 1).unwrap();
        for eps in [1e-3, 0.02, 0.5] {
            // z_max = eps / sqrt 2, lateral area pi r l
            let exact = std::f64::consts::PI * (eps / 2f64.sqrt()) * eps;
            assert_relative_eq!(horn_area(cone, eps).unwrap(), exact, max_relative = 1e-8);
        }
    }

    #[test]
    fn horn_exponent_and_coefficient() {
        let horn = HornParams::new(3, 2).unwrap();
        let eps = log_space_desc(1e-3, 1e-1, 9);
        let series = GrowthSeries::exact(&eps, |e| horn_area(horn, e).unwrap(), 2).unwrap();
        let fit = volume_growth_number(&series).unwrap();
        assert!((fit.mu - 2.5).abs() <= 0.01, "{fit:?}");
        let d = r_density(&series, 2.5).unwrap();
        assert!(!d.vanishing && !d.divergent);
        assert_relative_eq!(d.estimate, std::f64::consts::TAU / 2.5, max_relative = 1e-2);
        let tiny = 1e-6;
        assert_relative_eq!(horn_area(horn, tiny).unwrap() / tiny.powf(2.5), horn.leading_coefficient(), max_relative = 1e-6);
    }

    #[test]
    fn horn_validation() {
        assert!(HornParams::new(1, 2).is_err());
        assert!(HornParams::new(0, 1).is_err());
        assert!(horn_area(HornParams::new(2, 1).unwrap(), 0.0).is_err());
    }

    #[test]
    fn horn_cloud_is_on_horn_and_projection_fixes_it() {
        let horn = HornParams::new(2, 1).unwrap();
        let cloud = sample_horn_cloud(horn, 0.5, 200, 1);
        for i in 0..cloud.len() {
            let p = cloud.point(i);
            assert!(p.iter().map(|x| x * x).sum::<f64>() <= 0.25 + 1e-12);
            assert_relative_eq!(p[0].hypot(p[1]), p[2].powi(2), epsilon = 1e-14);
            let q = horn.project(p).unwrap();
            assert!(crate::inner_metric::euclid(p, &q) < 1e-10);
        }
    }

    #[test]
    fn gradient_examples() {
        let ab = BrieskornPair::new(2, 3).unwrap();
        assert_eq!(implicit_graph_gradients(ab, c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)).unwrap(), (c(0.0, 0.0), c(0.0, 0.0)));
        let (gy, gz) = implicit_graph_gradients(ab, c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!((gy, gz), (c(-1.5, 0.0), c(0.0, 0.0)));
        assert!(matches!(implicit_graph_gradients(ab, c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)), Err(Error::OnBranchLocus { .. })));
    }

    #[test]
    fn gradients_match_tracked_root() {
        let ab = BrieskornPair::new(2, 3).unwrap();
        let cover = BrieskornCover(ab);
        let (y, z) = (c(0.3, 0.1), c(-0.2, 0.25));
        let h = 1e-6;
        for x in cover.sheets(y, z) {
            let (gy, gz) = implicit_graph_gradients(ab, y, z, x).unwrap();
            let near = |yy: C, zz: C| {
                cover.sheets(yy, zz).into_iter().min_by(|p, q| (p - x).norm().total_cmp(&(q - x).norm())).unwrap()
            };
            let fy = (near(y + h, z) - near(y - h, z)) / (2.0 * h);
            let fz = (near(y, z + h) - near(y, z - h)) / (2.0 * h);
            assert!((fy - gy).norm() <= 1e-6 * gy.norm().max(1.0));
            assert!((fz - gz).norm() <= 1e-6 * gz.norm().max(1.0));
        }
    }

    #[test]
    fn poly_roots_recovers_known_roots() {
        let roots = [c(0.5, 0.0), c(-0.2, 0.7), c(0.0, -1.3)];
        // (x - r0)(x - r1)(x - r2)
        let mut coeffs = vec![c(1.0, 0.0)];
        for r in roots {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (k, &ck) in coeffs.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            coeffs = next;
        }
        let found = poly_roots(&coeffs);
        for r in roots {
            assert!(found.iter().any(|f| (f - r).norm() < 1e-12));
        }
    }

    #[test]
    fn germ_cover_agrees_with_brieskorn_cover() {
        let ab = BrieskornPair::new(3, 4).unwrap();
        let gc = GermCover::new(ab.germ()).unwrap();
        let bc = BrieskornCover(ab);
        let (y, z) = (c(0.1, -0.3), c(0.2, 0.05));
        for x in gc.sheets(y, z) {
            assert!(bc.sheets(y, z).iter().any(|b| (b - x).norm() < 1e-12));
            let (g1, g2) = gc.gradients(x, y, z).unwrap();
            let (h1, h2) = bc.gradients(x, y, z).unwrap();
            assert!((g1 - h1).norm() < 1e-10 && (g2 - h2).norm() < 1e-10);
        }
        let bad = HypersurfaceGerm::new(vec![Term::real(1.0, [2, 1, 0]), Term::real(1.0, [0, 0, 3])]).unwrap();
        assert!(GermCover::new(bad).is_err());
    }

    #[test]
    fn smooth_germ_volume_is_ball_volume() {
        let flat = LinearCover { alpha: c(0.0, 0.0), beta: c(0.0, 0.0) };
        let eps = 0.1;
        let v = cover_volume(&flat, eps, 20000, 3).unwrap();
        assert_relative_eq!(v.volume, std::f64::consts::PI.powi(2) / 2.0 * eps.powi(4), max_relative = 1e-12);
        // tilted plane: uniform area density 1 + |alpha|^2 + |beta|^2 against a smaller disk
        let tilted = LinearCover { alpha: c(0.6, 0.0), beta: c(0.0, 0.8) };
        let v = cover_volume(&tilted, eps, 200000, 3).unwrap();
        assert_relative_eq!(v.volume, std::f64::consts::PI.powi(2) / 2.0 * eps.powi(4), max_relative = 0.01);
    }

    #[test]
    fn stderr_scales_with_sample_size() {
        let ab = BrieskornPair::new(2, 3).unwrap();
        let tilted = LinearCover { alpha: c(0.6, 0.0), beta: c(0.0, 0.8) };
        let a = cover_volume(&tilted, 0.1, 64000, 1).unwrap();
        let b = cover_volume(&tilted, 0.1, 128000, 1).unwrap();
        let ratio = a.stderr / (b.stderr * 2f64.sqrt());
        assert!((ratio - 1.0).abs() < 0.2, "{ratio}");
        let v = brieskorn_volume(ab, 0.1, 64000, 2).unwrap();
        assert!(v.stderr > 0.0 && v.stderr < 0.1 * v.volume);
    }

    #[test]
    fn sheets_share_volume_equally() {
        let ab = BrieskornPair::new(3, 4).unwrap();
        let v = brieskorn_volume(ab, 0.1, 96000, 5).unwrap();
        let mean = v.volume / 3.0;
        for (s, e) in v.per_sheet.iter().zip(&v.per_sheet_stderr) {
            assert!((s - mean).abs() <= 3.0 * e, "{v:?}");
        }
    }

    #[test]
    fn series_validation_and_csv() {
        let bad = vec![GrowthEntry { eps: 0.1, volume: 1.0, stderr: 0.0 }, GrowthEntry { eps: 0.2, volume: 1.0, stderr: 0.0 }];
        assert!(GrowthSeries::new(bad, 2).is_err());
        let s = GrowthSeries::exact(&[0.1, 0.01], |e| e, 1).unwrap();
        assert!(s.to_csv().starts_with("eps,volume,stderr\n"));
        assert!(matches!(volume_growth_number(&s), Err(Error::DegenerateFit(_))));
        let short = GrowthSeries::exact(&log_space_desc(0.05, 0.1, 6), |e| e, 1).unwrap();
        assert!(matches!(volume_growth_number(&short), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn r_density_examples() {
        let eps = log_space_desc(1e-3, 1e-1, 7);
        let s = GrowthSeries::exact(&eps, |e| 2.5 * e.powi(3), 3).unwrap();
        let d = r_density(&s, 3.0).unwrap();
        assert_relative_eq!(d.estimate, 2.5, max_relative = 1e-12);
        assert!(!d.vanishing);
        let d = r_density(&s, 2.0).unwrap();
        assert!(d.vanishing && d.estimate == 0.0);
        let d = r_density(&s, 4.0).unwrap();
        assert!(d.divergent && d.estimate.is_infinite());
        let mu = volume_growth_number(&s).unwrap();
        assert_relative_eq!(mu.mu, 3.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn half_step_density_switches(beta_num in 2u32..8, e_lo in -3.0f64..-2.0) {
            let horn = HornParams::new(beta_num, 2).unwrap();
            let eps = log_space_desc(10f64.powf(e_lo), 10f64.powf(e_lo + 1.5), 6);
            let s = GrowthSeries::exact(&eps, |e| horn_area(horn, e).unwrap(), 2).unwrap();
            let mu = volume_growth_number(&s).unwrap().mu;
            // vol / eps^r with vol ~ eps^mu
            prop_assert!(r_density(&s, mu - 0.5).unwrap().vanishing);
            prop_assert!(r_density(&s, mu + 0.5).unwrap().divergent);
        }

        #[test]
        fn cone_area_is_exactly_quadratic(eps in 1e-4f64..1.0) {
            let cone = HornParams::new(2, 2).unwrap();
            let k = horn_area(cone, eps).unwrap() / (eps * eps);
            prop_assert!((k - std::f64::consts::PI / 2f64.sqrt()).abs() <= 1e-8 * k);
        }
    }
}
