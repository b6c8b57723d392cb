//! Complex hypersurface germs in `C^3`: evaluation, gradients, projection onto
//! the zero set and sampling of links.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex;
use num_rational::Ratio;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Point of `C^3`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ComplexPoint3<T> {
    pub x: Complex<T>,
    pub y: Complex<T>,
    pub z: Complex<T>,
}

impl<T: Scalar> ComplexPoint3<T> {
    pub fn new(x: Complex<T>, y: Complex<T>, z: Complex<T>) -> Self {
        Self { x, y, z }
    }

    pub fn origin() -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        Self::new(zero, zero, zero)
    }

    /// Point with real coordinates.
    pub fn real(x: T, y: T, z: T) -> Self {
        Self::new(Complex::new(x, T::zero()), Complex::new(y, T::zero()), Complex::new(z, T::zero()))
    }

    pub fn from_array(c: [Complex<T>; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }

    pub fn coords(&self) -> [Complex<T>; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm_sqr(&self) -> T {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Hermitian product `sum a_i conj(b_i)`.
    pub fn hdot(&self, other: &Self) -> Complex<T> {
        self.x * other.x.conj() + self.y * other.y.conj() + self.z * other.z.conj()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.x.conj(), self.y.conj(), self.z.conj())
    }

    pub fn dist(&self, other: &Self) -> T {
        (*self - *other).norm()
    }

    /// Coordinates as a point of `R^6`: `(re x, im x, re y, im y, re z, im z)`.
    pub fn to_real(&self) -> [T; 6] {
        [self.x.re, self.x.im, self.y.re, self.y.im, self.z.re, self.z.im]
    }

    pub fn from_real(r: &[T]) -> Self {
        Self::new(Complex::new(r[0], r[1]), Complex::new(r[2], r[3]), Complex::new(r[4], r[5]))
    }

    pub fn cast<U: Scalar>(&self) -> ComplexPoint3<U> {
        let c = |v: Complex<T>| Complex::new(U::lit(v.re.as_f64()), U::lit(v.im.as_f64()));
        ComplexPoint3::new(c(self.x), c(self.y), c(self.z))
    }
}

impl<T: Scalar> Add for ComplexPoint3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> Sub for ComplexPoint3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Neg for ComplexPoint3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Scalar> Mul<T> for ComplexPoint3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Scalar> Mul<Complex<T>> for ComplexPoint3<T> {
    type Output = Self;
    fn mul(self, s: Complex<T>) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// A monomial `coeff * x^ex * y^ey * z^ez`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term<T> {
    pub coeff: Complex<T>,
    pub exps: [u32; 3],
}

impl<T: Scalar> Term<T> {
    pub fn new(coeff: Complex<T>, exps: [u32; 3]) -> Self {
        Self { coeff, exps }
    }

    pub fn real(coeff: T, exps: [u32; 3]) -> Self {
        Self::new(Complex::new(coeff, T::zero()), exps)
    }

    fn monomial(&self, p: &ComplexPoint3<T>) -> Complex<T> {
        p.x.powu(self.exps[0]) * p.y.powu(self.exps[1]) * p.z.powu(self.exps[2])
    }

    pub fn eval(&self, p: &ComplexPoint3<T>) -> Complex<T> {
        self.coeff * self.monomial(p)
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }
}

/// Sparse polynomial `f` in `(x, y, z)` with `f(0) = 0`, representing the germ
/// of `f^{-1}(0)` at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct HypersurfaceGerm<T> {
    terms: Vec<Term<T>>,
}

impl<T: Scalar> HypersurfaceGerm<T> {
    pub fn new(terms: Vec<Term<T>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::validation("germ needs at least one term"));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.exps == [0, 0, 0] {
                return Err(Error::validation("germ has a constant term; it must pass through 0"));
            }
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(Error::validation("non-finite coefficient"));
            }
            if terms[..i].iter().any(|s| s.exps == t.exps) {
                return Err(Error::validation(format!("duplicate exponent triple {:?}", t.exps)));
            }
        }
        Ok(Self { terms })
    }

    /// `x^a + y^b - z^b`.
    pub fn brieskorn(a: u32, b: u32) -> Self {
        Self::new(vec![
            Term::real(T::one(), [a, 0, 0]),
            Term::real(T::one(), [0, b, 0]),
            Term::real(-T::one(), [0, 0, b]),
        ])
        .expect("valid Brieskorn germ")
    }

    /// `z^(k+1) - x y`.
    pub fn a_k(k: u32) -> Self {
        Self::new(vec![Term::real(T::one(), [0, 0, k + 1]), Term::real(-T::one(), [1, 1, 0])])
            .expect("valid A_k germ")
    }

    /// `z^15 + z y^7 + x^5 + t x y^6`.
    pub fn briancon_speder(t: Complex<T>) -> Self {
        let mut terms = vec![
            Term::real(T::one(), [0, 0, 15]),
            Term::real(T::one(), [0, 7, 1]),
            Term::real(T::one(), [5, 0, 0]),
        ];
        if t != Complex::new(T::zero(), T::zero()) {
            terms.push(Term::new(t, [1, 6, 0]));
        }
        Self::new(terms).expect("valid Briancon-Speder germ")
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    /// Value at `p`, summing terms in stored order.
    pub fn eval(&self, p: &ComplexPoint3<T>) -> Complex<T> {
        self.terms
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, t| acc + t.eval(p))
    }

    /// `(df/dx, df/dy, df/dz)` at `p` (holomorphic derivatives, not conjugated).
    pub fn gradient(&self, p: &ComplexPoint3<T>) -> [Complex<T>; 3] {
        let zero = Complex::new(T::zero(), T::zero());
        let coords = p.coords();
        let mut g = [zero; 3];
        for t in &self.terms {
            for (var, gv) in g.iter_mut().enumerate() {
                let e = t.exps[var];
                if e == 0 {
                    continue;
                }
                let mut m = t.coeff * T::of_usize(e as usize);
                for (w, c) in coords.iter().enumerate() {
                    let pow = if w == var { e - 1 } else { t.exps[w] };
                    m *= c.powu(pow);
                }
                *gv += m;
            }
        }
        g
    }

    /// `conj(grad f) / |grad f|`, the unit normal of the tangent plane.
    pub fn unit_conormal(&self, p: &ComplexPoint3<T>) -> Result<ComplexPoint3<T>> {
        self.unit_conormal_tol(p, T::gradient_floor())
    }

    pub fn unit_conormal_tol(&self, p: &ComplexPoint3<T>, tol: T) -> Result<ComplexPoint3<T>> {
        let g = ComplexPoint3::from_array(self.gradient(p));
        let n = g.norm();
        if !(n > tol) {
            return Err(Error::ZeroGradient { norm: n.as_f64() });
        }
        Ok(g.conj() * n.recip())
    }

    /// Moves `p0` onto `f = 0` by damped minimal-norm Newton steps
    /// `p <- p - s f(p) conj(grad f(p)) / |grad f(p)|^2`, halving `s` until `|f|`
    /// decreases.
    pub fn newton_project(&self, p0: &ComplexPoint3<T>, tol: T, max_iter: usize) -> Result<Projected<T>> {
        if !(tol > T::zero()) {
            return Err(Error::validation("newton tolerance must be positive"));
        }
        let mut p = *p0;
        let mut path = T::zero();
        for it in 0..=max_iter {
            let g = ComplexPoint3::from_array(self.gradient(&p));
            let gn2 = g.norm_sqr();
            if !(gn2.sqrt() > T::gradient_floor()) {
                return Err(Error::ZeroGradient { norm: gn2.sqrt().as_f64() });
            }
            let fv = self.eval(&p);
            let res = fv.norm();
            if res <= tol {
                return Ok(Projected { point: p, path_length: path, iterations: it });
            }
            if it == max_iter {
                return Err(Error::NoConvergence { iterations: max_iter, residual: res.as_f64() });
            }
            let step = g.conj() * (fv / gn2);
            let mut s = T::one();
            let mut next = p - step;
            for _ in 0..40 {
                if self.eval(&next).norm() < res {
                    break;
                }
                s *= T::lit(0.5);
                next = p - step * s;
            }
            if !next.is_finite() {
                return Err(Error::NoConvergence { iterations: it, residual: res.as_f64() });
            }
            path += step.norm() * s;
            p = next;
        }
        unreachable!()
    }

    /// Samples `n` points of the link `V ∩ S_eps`; see [`sample_link_with`].
    pub fn sample_link(&self, eps: T, n: usize, seed: u64) -> Result<SampleCloud<T>> {
        sample_link_with(self, eps, n, seed, &SamplingConfig::default())
    }

    /// Bi-Lipschitz constant of the orthogonal projection of the tangent plane at
    /// `p` onto the plane orthogonal to `axis_plane`.
    pub fn tangent_projection_distortion_at(&self, p: &ComplexPoint3<T>, axis_plane: &ComplexPoint3<T>) -> Result<T> {
        let n = self.unit_conormal(p)?;
        plane_projection_distortion(&n, axis_plane)
    }

    /// Parses the plain text format: one `re im ex ey ez` term per line, `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse { line: idx + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(bad(format!("expected 5 fields, found {}", fields.len())));
            }
            let re = f64::from_str(fields[0]).map_err(|e| bad(e.to_string()))?;
            let im = f64::from_str(fields[1]).map_err(|e| bad(e.to_string()))?;
            let mut exps = [0u32; 3];
            for (e, f) in exps.iter_mut().zip(&fields[2..]) {
                *e = u32::from_str(f).map_err(|e| bad(e.to_string()))?;
            }
            terms.push(Term::new(Complex::new(T::lit(re), T::lit(im)), exps));
        }
        Self::new(terms)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# re im ex ey ez\n");
        for t in &self.terms {
            s.push_str(&format!(
                "{} {} {} {} {}\n",
                t.coeff.re, t.coeff.im, t.exps[0], t.exps[1], t.exps[2]
            ));
        }
        s
    }
}

impl<T: Scalar> fmt::Display for HypersurfaceGerm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", t.coeff.re, t.coeff.im)?;
            for (name, e) in ["x", "y", "z"].iter().zip(t.exps) {
                match e {
                    0 => {}
                    1 => write!(f, "{name}")?,
                    _ => write!(f, "{name}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

/// Output of [`HypersurfaceGerm::newton_project`].
#[derive(Clone, Copy, Debug)]
pub struct Projected<T> {
    pub point: ComplexPoint3<T>,
    /// Sum of step lengths; bounds `|point - p0|`.
    pub path_length: T,
    pub iterations: usize,
}

/// `1 / |<u1, u2>|`: bi-Lipschitz constant of the orthogonal projection between
/// the complex planes orthogonal to the unit vectors `u1` and `u2`.
pub fn plane_projection_distortion<T: Scalar>(u1: &ComplexPoint3<T>, u2: &ComplexPoint3<T>) -> Result<T> {
    debug_assert!((u1.norm() - T::one()).abs() < T::lit(1e-6));
    debug_assert!((u2.norm() - T::one()).abs() < T::lit(1e-6));
    let overlap = u1.hdot(u2).norm();
    if !(overlap > T::lit(1e-12)) {
        return Err(Error::OrthogonalPlanes { overlap: overlap.as_f64() });
    }
    Ok(overlap.recip())
}

/// Weight data of a quasi-homogeneous germ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedHomogeneousData {
    pub weights: [Ratio<i64>; 3],
    pub degree: Ratio<i64>,
}

impl WeightedHomogeneousData {
    pub fn new(weights: [Ratio<i64>; 3], degree: Ratio<i64>) -> Result<Self> {
        let zero = Ratio::from_integer(0);
        if weights.iter().any(|w| *w <= zero) || degree <= zero {
            return Err(Error::validation("weights and degree must be positive"));
        }
        Ok(Self { weights, degree })
    }

    pub fn integer(weights: [i64; 3], degree: i64) -> Result<Self> {
        Self::new(weights.map(Ratio::from_integer), Ratio::from_integer(degree))
    }

    /// Whether every monomial of `germ` has weighted degree equal to `degree`.
    pub fn is_compatible<T: Scalar>(&self, germ: &HypersurfaceGerm<T>) -> bool {
        germ.terms().iter().all(|t| {
            let d: Ratio<i64> = t
                .exps
                .iter()
                .zip(&self.weights)
                .map(|(&e, w)| w * Ratio::from_integer(e as i64))
                .sum();
            d == self.degree
        })
    }

    /// `|f(l^w1 x, l^w2 y, l^w3 z) - l^d f(x,y,z)|` relative to `l^d sum |terms|`.
    pub fn scaling_residual<T: Scalar>(&self, germ: &HypersurfaceGerm<T>, p: &ComplexPoint3<T>, lambda: T) -> T {
        let pw = |r: &Ratio<i64>| lambda.powf(T::lit(*r.numer() as f64 / *r.denom() as f64));
        let scaled = ComplexPoint3::new(p.x * pw(&self.weights[0]), p.y * pw(&self.weights[1]), p.z * pw(&self.weights[2]));
        let ld = pw(&self.degree);
        let lhs = germ.eval(&scaled);
        let rhs = germ.eval(p) * ld;
        let scale: T = germ.terms().iter().map(|t| t.eval(p).norm()).sum::<T>() * ld;
        if scale > T::zero() {
            (lhs - rhs).norm() / scale
        } else {
            (lhs - rhs).norm()
        }
    }
}

/// Knobs for link and annulus sampling.
#[derive(Clone, Debug)]
pub struct SamplingConfig {
    /// On-variety tolerance relative to the radius.
    pub rel_residual: f64,
    /// Sphere tolerance relative to the radius.
    pub rel_sphere: f64,
    pub newton_iter: usize,
    /// Alternations of radial rescaling and projection per attempt.
    pub rounds: usize,
    pub batch_size: usize,
    /// Attempts observed before the accept rate is judged.
    pub window: usize,
    pub min_accept_rate: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            rel_residual: 1e-10,
            rel_sphere: 1e-6,
            newton_iter: 100,
            rounds: 60,
            batch_size: 64,
            window: 64,
            min_accept_rate: 0.05,
        }
    }
}

/// Seeded point samples on a germ near the origin.
#[derive(Clone, Debug)]
pub struct SampleCloud<T> {
    pub germ: HypersurfaceGerm<T>,
    pub points: Vec<ComplexPoint3<T>>,
    pub residual_f: Vec<T>,
    /// Distance of `|p|` to the sampled radius.
    pub residual_sphere: Vec<T>,
    pub r_min: T,
    pub r_max: T,
    pub seed: u64,
}

impl<T: Scalar> SampleCloud<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub const CSV_HEADER: &'static str = "re_x,im_x,re_y,im_y,re_z,im_z,residual_f,residual_sphere";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for ((p, rf), rs) in self.points.iter().zip(&self.residual_f).zip(&self.residual_sphere) {
            let r = p.to_real();
            s.push_str(&format!("{},{},{},{},{},{},{},{}\n", r[0], r[1], r[2], r[3], r[4], r[5], rf, rs));
        }
        s
    }
}

/// One point of `V ∩ S_radius` from a uniform ambient direction: project onto `V`,
/// rescale radially, and repeat until both residual bounds hold.
pub(crate) fn project_to_link<T: Scalar>(
    germ: &HypersurfaceGerm<T>,
    start: ComplexPoint3<T>,
    radius: T,
    cfg: &SamplingConfig,
) -> Option<(ComplexPoint3<T>, T, T)> {
    let f_tol = radius * T::lit(cfg.rel_residual);
    let s_tol = radius * T::lit(cfg.rel_sphere);
    let mut p = start;
    for _ in 0..cfg.rounds {
        p = germ.newton_project(&p, f_tol, cfg.newton_iter).ok()?.point;
        let r = p.norm();
        let sphere = (r - radius).abs();
        if sphere <= s_tol {
            return Some((p, germ.eval(&p).norm(), sphere));
        }
        if !(r > T::zero()) {
            return None;
        }
        p = p * (radius / r);
    }
    None
}

/// Points of `V` on spheres whose radii are drawn by `radius_of`; batch `b` uses
/// stream `b` of `seed` and batches are concatenated in order.
/// An accepted sample with its variety and sphere residuals.
type Accepted<T> = (ComplexPoint3<T>, T, T);

#[allow(clippy::type_complexity)]
fn sample_on_spheres<T, F>(
    germ: &HypersurfaceGerm<T>,
    n: usize,
    seed: u64,
    cfg: &SamplingConfig,
    radius_of: F,
) -> Result<(Vec<ComplexPoint3<T>>, Vec<T>, Vec<T>)>
where
    T: Scalar,
    F: Fn(&mut rng::StreamRng) -> f64 + Sync,
{
    let batch = cfg.batch_size.max(1);
    let n_batches = n.div_ceil(batch);
    let batches: Vec<Result<Vec<Accepted<T>>>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let want = batch.min(n - b * batch);
            let mut rng = rng::stream(seed, b as u64);
            let mut out = Vec::with_capacity(want);
            let mut attempts = 0usize;
            while out.len() < want {
                attempts += 1;
                let radius = radius_of(&mut rng);
                let dir = rng::unit_sphere::<3>(&mut rng);
                let start = ComplexPoint3::<f64>::from_array(dir.map(|c| c * radius)).cast::<T>();
                if let Some(s) = project_to_link(germ, start, T::lit(radius), cfg) {
                    out.push(s);
                }
                if attempts >= cfg.window && (out.len() as f64) < cfg.min_accept_rate * attempts as f64 {
                    return Err(Error::SamplingStalled { accepted: out.len(), attempts });
                }
            }
            Ok(out)
        })
        .collect();
    let mut pts = Vec::with_capacity(n);
    let mut rf = Vec::with_capacity(n);
    let mut rs = Vec::with_capacity(n);
    for b in batches {
        for (p, f, s) in b? {
            pts.push(p);
            rf.push(f);
            rs.push(s);
        }
    }
    Ok((pts, rf, rs))
}

/// Samples `n` points with `|f(p)| <= eps * rel_residual` and `||p| - eps| <= eps * rel_sphere`.
pub fn sample_link_with<T: Scalar>(
    germ: &HypersurfaceGerm<T>,
    eps: T,
    n: usize,
    seed: u64,
    cfg: &SamplingConfig,
) -> Result<SampleCloud<T>> {
    if !(eps > T::zero()) {
        return Err(Error::validation("eps must be positive"));
    }
    let e = eps.as_f64();
    let (points, residual_f, residual_sphere) = sample_on_spheres(germ, n, seed, cfg, |_| e)?;
    Ok(SampleCloud { germ: germ.clone(), points, residual_f, residual_sphere, r_min: eps, r_max: eps, seed })
}

/// Samples `n` points of `V` with `r_min <= |p| <= r_max`, radii distributed with
/// density proportional to `r^(dim - 1)`.
pub fn sample_annulus<T: Scalar>(
    germ: &HypersurfaceGerm<T>,
    r_min: T,
    r_max: T,
    dim: u32,
    n: usize,
    seed: u64,
    cfg: &SamplingConfig,
) -> Result<SampleCloud<T>> {
    if !(r_min > T::zero() && r_max >= r_min) {
        return Err(Error::validation("annulus needs 0 < r_min <= r_max"));
    }
    let (lo, hi, d) = (r_min.as_f64(), r_max.as_f64(), dim.max(1) as f64);
    let (lo_d, hi_d) = (lo.powf(d), hi.powf(d));
    let draw = move |rng: &mut rng::StreamRng| {
        use rand::Rng;
        let u: f64 = rng.random();
        (lo_d + u * (hi_d - lo_d)).powf(1.0 / d).clamp(lo, hi)
    };
    let (points, residual_f, residual_sphere) = sample_on_spheres(germ, n, seed, cfg, draw)?;
    Ok(SampleCloud { germ: germ.clone(), points, residual_f, residual_sphere, r_min, r_max, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    fn cusp() -> HypersurfaceGerm<f64> {
        // x^2 + y^3 - z^3
        HypersurfaceGerm::brieskorn(2, 3)
    }

    #[test]
    fn eval_examples() {
        let f = cusp();
        assert_eq!(f.eval(&ComplexPoint3::origin()), c(0.0, 0.0));
        assert_eq!(f.eval(&ComplexPoint3::real(0.0, 1.0, 1.0)), c(0.0, 0.0));
        assert_eq!(f.eval(&ComplexPoint3::real(1.0, 1.0, 0.0)), c(2.0, 0.0));
    }

    #[test]
    fn gradient_examples() {
        let f = cusp();
        let g = f.gradient(&ComplexPoint3::real(1.0, 1.0, 1.0));
        assert_eq!(g, [c(2.0, 0.0), c(3.0, 0.0), c(-3.0, 0.0)]);
        let g = f.gradient(&ComplexPoint3::origin());
        assert_eq!(g, [c(0.0, 0.0); 3]);
        let g = f.gradient(&ComplexPoint3::new(c(0.0, 1.0), c(0.0, 0.0), c(2.0, 0.0)));
        assert_eq!(g, [c(0.0, 2.0), c(0.0, 0.0), c(-12.0, 0.0)]);
    }

    #[test]
    fn conormal_examples() {
        let f = cusp();
        let n = f.unit_conormal(&ComplexPoint3::real(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(n, ComplexPoint3::real(1.0, 0.0, 0.0));
        assert!(matches!(f.unit_conormal(&ComplexPoint3::origin()), Err(Error::ZeroGradient { .. })));
        let n = f.unit_conormal(&ComplexPoint3::real(1.0, 1.0, 1.0)).unwrap();
        let s = 22f64.sqrt();
        assert_relative_eq!(n.x.re, 2.0 / s, epsilon = 1e-15);
        assert_relative_eq!(n.y.re, 3.0 / s, epsilon = 1e-15);
        assert_relative_eq!(n.z.re, -3.0 / s, epsilon = 1e-15);
    }

    #[test]
    fn plane_distortion_examples() {
        let e1 = ComplexPoint3::real(1.0, 0.0, 0.0);
        let e2 = ComplexPoint3::real(0.0, 1.0, 0.0);
        assert_eq!(plane_projection_distortion(&e1, &e1).unwrap(), 1.0);
        assert!(matches!(plane_projection_distortion(&e1, &e2), Err(Error::OrthogonalPlanes { .. })));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let d = plane_projection_distortion(&e1, &ComplexPoint3::real(h, h, 0.0)).unwrap();
        assert_relative_eq!(d, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn newton_examples() {
        let f = cusp();
        let on = ComplexPoint3::real(0.0, 1.0, 1.0);
        let pr = f.newton_project(&on, 1e-12, 50).unwrap();
        assert_eq!(pr.point, on);
        assert_eq!(pr.iterations, 0);

        let pr = f.newton_project(&ComplexPoint3::real(1.1, 0.0, 1.0), 1e-12, 50).unwrap();
        assert!(f.eval(&pr.point).norm() <= 1e-12);
        assert!(pr.point.dist(&ComplexPoint3::real(1.1, 0.0, 1.0)) <= pr.path_length + 1e-15);
        assert!((pr.point.x.norm() - 1.0).abs() < 0.1);

        assert!(matches!(
            f.newton_project(&ComplexPoint3::origin(), 1e-12, 50),
            Err(Error::ZeroGradient { .. })
        ));
    }

    #[test]
    fn newton_reports_non_convergence() {
        let f = cusp();
        let r = f.newton_project(&ComplexPoint3::real(5.0, 3.0, -2.0), 1e-300, 3);
        assert!(matches!(r, Err(Error::NoConvergence { iterations: 3, .. })));
    }

    #[test]
    fn tangent_projection_examples() {
        let f = cusp();
        let axis = ComplexPoint3::real(1.0, 0.0, 0.0);
        let d = f.tangent_projection_distortion_at(&ComplexPoint3::real(1.0, 0.0, 0.0), &axis).unwrap();
        assert_eq!(d, 1.0);
        let d = f.tangent_projection_distortion_at(&ComplexPoint3::real(1.0, 1.0, 0.0), &axis).unwrap();
        assert_relative_eq!(d, 13f64.sqrt() / 2.0, epsilon = 1e-14);
        // y = z: a point on the branch line off the singular point
        let d = f.tangent_projection_distortion_at(&ComplexPoint3::real(0.3, 0.5, 0.5), &axis).unwrap();
        assert!(d.is_finite() && d >= 1.0);
    }

    #[test]
    fn sample_link_examples() {
        let f = cusp();
        assert!(f.sample_link(0.01, 0, 7).unwrap().is_empty());
        let cloud = f.sample_link(0.01, 100, 7).unwrap();
        assert_eq!(cloud.len(), 100);
        for p in &cloud.points {
            assert!(f.eval(p).norm() <= 0.01 * 1e-10);
            assert!((p.norm() - 0.01).abs() <= 0.01 * 1e-6);
        }
        let again = f.sample_link(0.01, 100, 7).unwrap();
        for (p, q) in cloud.points.iter().zip(&again.points) {
            assert_eq!(p.to_real().map(f64::to_bits), q.to_real().map(f64::to_bits));
        }
        let other = f.sample_link(0.01, 100, 8).unwrap();
        assert_ne!(cloud.points[0], other.points[0]);
    }

    #[test]
    fn sample_link_independent_of_thread_count() {
        let f = cusp();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| f.sample_link(0.05, 300, 11).unwrap());
        let b = four.install(|| f.sample_link(0.05, 300, 11).unwrap());
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn annulus_points_inside_shell() {
        let f = HypersurfaceGerm::<f64>::a_k(2);
        let cloud = sample_annulus(&f, 0.05, 0.1, 4, 200, 3, &SamplingConfig::default()).unwrap();
        for p in &cloud.points {
            let r = p.norm();
            assert!((0.05 * (1.0 - 1e-6)..=0.1 * (1.0 + 1e-6)).contains(&r));
            assert!(f.eval(p).norm() <= 0.1 * 1e-10);
        }
    }

    #[test]
    fn stalls_on_empty_variety_region() {
        // a zero sphere tolerance can never be met
        let cfg = SamplingConfig { rel_sphere: 0.0, rounds: 2, window: 16, ..Default::default() };
        let r = sample_link_with(&cusp(), 0.1, 10, 1, &cfg);
        assert!(matches!(r, Err(Error::SamplingStalled { .. })));
    }

    #[test]
    fn germ_validation() {
        assert!(HypersurfaceGerm::<f64>::new(vec![]).is_err());
        assert!(HypersurfaceGerm::new(vec![Term::real(1.0, [0, 0, 0])]).is_err());
        assert!(HypersurfaceGerm::new(vec![Term::real(1.0, [1, 0, 0]), Term::real(2.0, [1, 0, 0])]).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let text = "# cusp\n1 0 2 0 0\n1 0 0 3 0  # y^3\n-1 0 0 0 3\n\n";
        let f = HypersurfaceGerm::<f64>::parse_text(text).unwrap();
        assert_eq!(f, cusp());
        assert_eq!(HypersurfaceGerm::<f64>::parse_text(&f.to_text()).unwrap(), f);
        let err = HypersurfaceGerm::<f64>::parse_text("1 0 2 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn weights_of_briancon_speder() {
        let w = WeightedHomogeneousData::integer([3, 2, 1], 15).unwrap();
        let f = HypersurfaceGerm::briancon_speder(c(1.0, 0.0));
        assert!(w.is_compatible(&f));
        assert!(!w.is_compatible(&cusp()));
        let p = ComplexPoint3::new(c(0.3, -0.1), c(0.2, 0.5), c(-0.7, 0.4));
        assert!(w.scaling_residual(&f, &p, 0.7) <= 1e-12);
    }

    #[test]
    fn generic_over_f32() {
        let f = HypersurfaceGerm::<f32>::brieskorn(2, 3);
        let g = f.gradient(&ComplexPoint3::real(1.0f32, 1.0, 1.0));
        assert_eq!(g[1].re, 3.0f32);
        let pr = f.newton_project(&ComplexPoint3::real(1.1f32, 0.0, 1.0), 1e-5, 50).unwrap();
        assert!(f.eval(&pr.point).norm() <= 1e-5);
    }

    fn arb_point() -> impl Strategy<Value = ComplexPoint3<f64>> {
        proptest::array::uniform6(-0.57f64..0.57).prop_map(|r| ComplexPoint3::from_real(&r))
    }

    proptest! {
        #[test]
        fn gradient_matches_central_differences(p in arb_point()) {
            let f = HypersurfaceGerm::briancon_speder(c(0.4, -1.1)) ;
            let g = f.gradient(&p);
            let h = 1e-6;
            for var in 0..3 {
                let mut e = [c(0.0, 0.0); 3];
                e[var] = c(h, 0.0);
                let dp = ComplexPoint3::from_array(e);
                let fd = (f.eval(&(p + dp)) - f.eval(&(p - dp))) / (2.0 * h);
                let scale = g[var].norm().max(1e-3);
                prop_assert!((fd - g[var]).norm() / scale < 1e-6, "var {var}: {fd} vs {}", g[var]);
            }
        }

        #[test]
        fn conormal_is_unit(p in arb_point()) {
            let f = cusp();
            if let Ok(n) = f.unit_conormal(&p) {
                prop_assert!((n.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn plane_distortion_symmetric_and_at_least_one(a in arb_point(), b in arb_point()) {
            prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3);
            let (u, v) = (a * (1.0 / a.norm()), b * (1.0 / b.norm()));
            match (plane_projection_distortion(&u, &v), plane_projection_distortion(&v, &u)) {
                (Ok(x), Ok(y)) => {
                    prop_assert!((x - y).abs() <= 1e-12 * x);
                    prop_assert!(x >= 1.0 - 1e-12);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "asymmetric failure"),
            }
        }

        #[test]
        fn newton_is_idempotent(p in arb_point()) {
            let f = cusp();
            prop_assume!(p.norm() > 0.05);
            if let Ok(q) = f.newton_project(&p, 1e-12, 100) {
                let r = f.newton_project(&q.point, 1e-12, 100).unwrap();
                prop_assert_eq!(r.point, q.point);
            }
        }
    }
}
