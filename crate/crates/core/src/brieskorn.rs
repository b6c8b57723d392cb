//! Decomposition of the Brieskorn germ `x^a + y^b - z^b = 0` into the pieces
//! `V0`/`V1` (by the size of `x`) and `C0`/`C1` (by distance to the branch lines
//! `z = w y`, `w^b = 1`), and the tube law of the branch neighbourhood.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{scaling_exponent, PowerLawFit};
use crate::rng;
use crate::scalar::Scalar;
use crate::variety::{ComplexPoint3, HypersurfaceGerm};

/// Exponents of `V(a,b,b)` with `2 <= a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BrieskornPair {
    a: u32,
    b: u32,
}

impl BrieskornPair {
    pub fn new(a: u32, b: u32) -> Result<Self> {
        if a < 2 {
            return Err(Error::validation(format!("a must be at least 2, got {a}")));
        }
        if a >= b {
            return Err(Error::validation(format!("need a < b, got a = {a}, b = {b}")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn germ<T: Scalar>(&self) -> HypersurfaceGerm<T> {
        HypersurfaceGerm::brieskorn(self.a, self.b)
    }

    /// Exponent `(b-1)/(a-1)` of the tube radius law.
    pub fn tube_exponent<T: Scalar>(&self) -> T {
        T::of_usize((self.b - 1) as usize) / T::of_usize((self.a - 1) as usize)
    }

    /// `c = sqrt(2) / (2^((a-2)/(2a-2)) b)`.
    pub fn tube_prefactor<T: Scalar>(&self) -> T {
        let a = T::of_usize(self.a as usize);
        let two = T::lit(2.0);
        two.sqrt() / (two.powf((a - two) / (two * a - two)) * T::of_usize(self.b as usize))
    }

    /// The `a` values of `x` over `(y, z)`, i.e. the `a`-th roots of `z^b - y^b`.
    pub fn sheets<T: Scalar>(&self, y: Complex<T>, z: Complex<T>) -> Vec<Complex<T>> {
        let w = z.powu(self.b) - y.powu(self.b);
        let a = T::of_usize(self.a as usize);
        let r = w.norm().powf(a.recip());
        let th = w.arg();
        (0..self.a)
            .map(|k| Complex::from_polar(r, (th + T::TAU() * T::of_usize(k as usize)) / a))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RegionTag {
    Zone0,
    Zone1,
    Boundary,
}

impl RegionTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionTag::Zone0 => "ZONE0",
            RegionTag::Zone1 => "ZONE1",
            RegionTag::Boundary => "BOUNDARY",
        }
    }
}

/// Outcome of a defining inequality `lhs >= rhs` (zone 0) or `lhs <= rhs` (zone 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionLabel<T> {
    pub tag: RegionTag,
    /// `lhs - rhs`.
    pub margin: T,
}

/// Relative slack under which an inequality counts as an equality.
pub const BOUNDARY_TOL: f64 = 1e-12;

impl<T: Scalar> RegionLabel<T> {
    pub fn classify(lhs: T, rhs: T) -> Self {
        Self::classify_tol(lhs, rhs, T::lit(BOUNDARY_TOL))
    }

    pub fn classify_tol(lhs: T, rhs: T, rel_tol: T) -> Self {
        let margin = lhs - rhs;
        let tag = if margin.abs() <= rel_tol * (lhs.abs() + rhs.abs()) {
            RegionTag::Boundary
        } else if margin > T::zero() {
            RegionTag::Zone0
        } else {
            RegionTag::Zone1
        };
        Self { tag, margin }
    }
}

/// `|x|^(2a-2)` against `|y|^(2b-2) + |z|^(2b-2)`.
pub fn v_region<T: Scalar>(p: &ComplexPoint3<T>, ab: BrieskornPair) -> RegionLabel<T> {
    let lhs = p.x.norm().powi(2 * ab.a as i32 - 2);
    let rhs = p.y.norm().powi(2 * ab.b as i32 - 2) + p.z.norm().powi(2 * ab.b as i32 - 2);
    RegionLabel::classify(lhs, rhs)
}

/// `|y^b - z^b|^(2 - 2/a)` against `|y|^(2b-2) + |z|^(2b-2)`.
pub fn w_region<T: Scalar>(y: Complex<T>, z: Complex<T>, ab: BrieskornPair) -> RegionLabel<T> {
    let a = T::of_usize(ab.a as usize);
    let two = T::lit(2.0);
    let lhs = (y.powu(ab.b) - z.powu(ab.b)).norm().powf(two - two / a);
    let rhs = y.norm().powi(2 * ab.b as i32 - 2) + z.norm().powi(2 * ab.b as i32 - 2);
    RegionLabel::classify(lhs, rhs)
}

/// Euclidean distance in `C^2` from `(y, z)` to the nearest line `z = w y`, `w^b = 1`.
pub fn branch_distance<T: Scalar>(y: Complex<T>, z: Complex<T>, b: u32) -> T {
    let b = b.max(1);
    let bt = T::of_usize(b as usize);
    let best = (0..b)
        .map(|k| {
            let w = Complex::from_polar(T::one(), T::TAU() * T::of_usize(k as usize) / bt);
            (z - w * y).norm()
        })
        .fold(T::infinity(), T::min);
    best / T::lit(2.0).sqrt()
}

/// `C0` when the branch distance is at least `delta |(y,z)|`, `C1` otherwise.
pub fn c_region<T: Scalar>(p: &ComplexPoint3<T>, ab: BrieskornPair, delta: T) -> RegionLabel<T> {
    let lhs = branch_distance(p.y, p.z, ab.b);
    let rhs = delta * (p.y.norm_sqr() + p.z.norm_sqr()).sqrt();
    RegionLabel::classify(lhs, rhs)
}

/// Predicted radius `c r^((b-1)/(a-1))` of the branch tube at distance `r`.
pub fn disk_radius<T: Scalar>(r: T, ab: BrieskornPair) -> T {
    ab.tube_prefactor::<T>() * r.powf(ab.tube_exponent())
}

/// `sqrt(1 + b^2/a^2)`, the Lipschitz bound of the projection on `V0`.
pub fn v0_distortion_bound<T: Scalar>(a: u32, b: u32) -> T {
    let q = T::of_usize(b as usize) / T::of_usize(a as usize);
    (T::one() + q * q).sqrt()
}

/// Bi-Lipschitz constant of the projection of `T_pV` to the `(y,z)`-plane:
/// `sqrt(a^2|x^(a-1)|^2 + b^2(|y^(b-1)|^2 + |z^(b-1)|^2)) / |a x^(a-1)|`.
pub fn projection_distortion_at<T: Scalar>(p: &ComplexPoint3<T>, ab: BrieskornPair) -> Result<T> {
    let scale = p.norm();
    if !(p.x.norm() > T::lit(1e-14) * scale) || p.x.norm() == T::zero() {
        return Err(Error::OnBranchLocus { abs_x: p.x.norm().as_f64() });
    }
    let a = T::of_usize(ab.a as usize);
    let b = T::of_usize(ab.b as usize);
    let ax = p.x.powu(ab.a - 1).norm() * a;
    let yb = p.y.powu(ab.b - 1).norm();
    let zb = p.z.powu(ab.b - 1).norm();
    Ok((ax * ax + b * b * (yb * yb + zb * zb)).sqrt() / ax)
}

/// Counts sampled points of `C0` lying in the interior of `V1` (the containment
/// `C0 ⊂ V0` failing); such points mean the working radius is too large for `delta`.
pub fn c0_containment_violations(ab: BrieskornPair, delta: f64, radius: f64, n: usize, seed: u64) -> usize {
    let mut rng = rng::stream(seed, 0);
    let mut bad = 0;
    for _ in 0..n {
        let [y, z] = rng::unit_sphere::<2>(&mut rng).map(|c| c * radius);
        for x in ab.sheets(y, z) {
            let p = ComplexPoint3::new(x, y, z);
            if c_region(&p, ab, delta).tag == RegionTag::Zone0 && v_region(&p, ab).tag == RegionTag::Zone1 {
                bad += 1;
            }
        }
    }
    if bad > 0 {
        log::warn!("{bad} sampled C0 points fall in V1 at radius {radius} (delta = {delta})");
    }
    bad
}

/// Per-radius tube measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TubeRow<T> {
    pub r: T,
    pub tube_radius: T,
    pub n_valid: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TubeFit<T> {
    pub rows: Vec<TubeRow<T>>,
    pub exponent: T,
    pub prefactor: T,
    pub r2: T,
    pub theory_exponent: T,
    pub theory_prefactor: T,
}

/// Largest `|xi|` on the ray `xi = rho e^(i phase)` such that
/// `(v(1-xi), v(1+xi))` still lies in `W1`, by bisection in `rho`.
fn boundary_xi<T: Scalar>(ab: BrieskornPair, v: Complex<T>, phase: T) -> Option<T> {
    let one = Complex::new(T::one(), T::zero());
    let dir = Complex::from_polar(T::one(), phase);
    let margin = |rho: T| {
        let xi = dir * rho;
        w_region(v * (one - xi), v * (one + xi), ab).margin
    };
    let a = ab.a as f64;
    let first_order = 2f64.powf(a / (2.0 * a - 2.0)) * v.norm().as_f64().powf((ab.b as f64 - a) / (a - 1.0))
        / (2.0 * ab.b as f64);
    let mut lo = T::zero();
    let mut hi = T::lit(first_order);
    while margin(hi) <= T::zero() {
        lo = hi;
        hi *= T::lit(2.0);
        if hi > T::lit(0.5) {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if margin(mid) <= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Measures the radius of the `W1` tube around the line `y = z` at each `r = |v|`
/// (the point `(v, v)` of the line), as the maximum over `n` random phases of the
/// branch distance of the tube boundary, then fits the log-log slope.
pub fn measure_tube_exponent<T: Scalar>(ab: BrieskornPair, radii: &[T], n: usize, seed: u64) -> Result<TubeFit<T>> {
    if radii.len() < 4 {
        return Err(Error::validation("tube measurement needs at least 4 radii"));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|r| !(*r > T::zero())) {
        return Err(Error::validation("radii must be positive and strictly decreasing"));
    }
    if n == 0 {
        return Err(Error::validation("need at least one phase sample per radius"));
    }
    let rows: Vec<TubeRow<T>> = radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut rng = rng::stream(seed, i as u64);
            let mut best = T::zero();
            let mut n_valid = 0;
            for _ in 0..n {
                let v = Complex::from_polar(r, T::lit(rng::phase(&mut rng)));
                let phase = T::lit(rng::phase(&mut rng));
                if let Some(rho) = boundary_xi(ab, v, phase) {
                    let xi = Complex::from_polar(rho, phase);
                    let one = Complex::new(T::one(), T::zero());
                    let d = branch_distance(v * (one - xi), v * (one + xi), ab.b);
                    best = best.max(d);
                    n_valid += 1;
                }
            }
            TubeRow { r, tube_radius: best, n_valid }
        })
        .collect();
    let series: Vec<(T, T)> = rows.iter().filter(|row| row.n_valid > 0).map(|row| (row.r, row.tube_radius)).collect();
    if series.len() < 3 {
        return Err(Error::DegenerateFit(format!("only {} radii produced a tube boundary", series.len())));
    }
    if rows.iter().any(|row| row.n_valid == 0) {
        log::warn!("{} radii produced no tube boundary", rows.len() - series.len());
    }
    let fit: PowerLawFit<T> = scaling_exponent(&series)?;
    Ok(TubeFit {
        rows,
        exponent: fit.slope,
        prefactor: fit.prefactor(),
        r2: fit.r2,
        theory_exponent: ab.tube_exponent(),
        theory_prefactor: ab.tube_prefactor(),
    })
}

/// Random points of `V0` with `|(y,z)|` log-uniform in `[r_lo, r_hi]`.
pub fn sample_v0_points(ab: BrieskornPair, r_lo: f64, r_hi: f64, n: usize, seed: u64) -> Vec<ComplexPoint3<f64>> {
    let mut rng = rng::stream(seed, 0);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        use rand::Rng;
        let r = (r_lo.ln() + (r_hi.ln() - r_lo.ln()) * rng.random::<f64>()).exp();
        let [y, z] = rng::unit_sphere::<2>(&mut rng).map(|c| c * r);
        let sheets = ab.sheets(y, z);
        let x = sheets[rng.random_range(0..sheets.len())];
        let p = ComplexPoint3::new(x, y, z);
        if v_region(&p, ab).tag == RegionTag::Zone0 {
            out.push(p);
        }
    }
    out
}
