//! One function per subcommand. Each writes its artifacts and reports whether a
//! theoretical bound was violated.

use std::collections::BTreeSet;

use bilip_core::brieskorn::{
    c0_containment_violations, c_region, measure_tube_exponent, projection_distortion_at, sample_v0_points, v0_distortion_bound,
    v_region, w_region, BrieskornPair, RegionTag,
};
use bilip_core::conical::{
    ick_bound, model_vs_full_distortion, ratio_scan, rho_rr_peak, sample_c1_prime, sample_model_surface, tangent_ratio_ick, Exponents,
};
use bilip_core::density::{
    brieskorn_volume, cover_volume, horn_area, sample_horn_cloud, volume_growth_number, GermCover, GrowthEntry, GrowthSeries, HornParams,
    LinearCover,
};
use bilip_core::fit::{log_space_desc, scaling_exponent};
use bilip_core::separating::{
    ak_conflict_samples, bs_conflict_explore, conflict_csv, conflict_density_slope, conflict_invariant_residuals, control_density_slope,
    half_density_check, plane_x0, tangent_cone_angle, AkParams, BSFamilyParams, ConflictSample, MetricMode, OuterCurves, CONFLICT_TOL,
};
use bilip_core::variety::{sample_annulus, ComplexPoint3, SamplingConfig};
use bilip_core::{rng, Germ};
use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Family};
use crate::output::Output;
use crate::CliError;

/// Relative allowance for rounding when comparing against closed-form bounds.
const ROUNDING: f64 = 1e-12;

fn need_brieskorn(cfg: &ExperimentConfig, cmd: &str) -> Result<BrieskornPair, CliError> {
    match cfg.family {
        Family::Brieskorn { a, b } => Ok(BrieskornPair::new(a, b)?),
        _ => Err(CliError::Validation(format!("{cmd} needs a brieskorn germ, got {}", cfg.family.name()))),
    }
}

fn max_of(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    max_observed: f64,
    bound: f64,
    holds: bool,
}

impl Check {
    fn new(name: &'static str, max_observed: f64, bound: f64) -> Self {
        Self { name, max_observed, bound, holds: max_observed <= bound * (1.0 + ROUNDING) }
    }
}

#[derive(Serialize)]
struct DistortionSummary {
    germ: &'static str,
    a: u32,
    b: u32,
    delta: f64,
    n: usize,
    /// The projection bound on `V0` and the largest distortion observed there.
    bound: f64,
    max_observed: f64,
    checks: Vec<Check>,
    all_hold: bool,
}

pub fn distortion(cfg: &ExperimentConfig, out: &mut Output) -> Result<bool, CliError> {
    let ab = need_brieskorn(cfg, "distortion")?;
    let ex = Exponents::from(ab);
    let (a, b) = (ab.a(), ab.b());

    let mut ts = log_space_desc(1e-8, 1e8, 200);
    ts.reverse();
    let a_values: Vec<u32> = (1..=6).chain([a]).collect::<BTreeSet<_>>().into_iter().collect();
    let rows = ratio_scan(&ts, &a_values);
    let mut csv = String::from("t,a,rho_rr,rho_tt\n");
    for r in &rows {
        csv.push_str(&format!("{:e},{},{:e},{:e}\n", r.t, r.a, r.rho_rr, r.rho_tt));
    }
    out.write("distortion_scan.csv", &csv)?;
    let scan = max_of(rows.iter().map(|r| {
        let a2 = (r.a * r.a) as f64;
        (r.rho_rr / rho_rr_peak::<f64>(r.a)).max(r.rho_tt / a2).max(1.0 / (r.rho_rr * a2)).max(1.0 / (r.rho_tt * a2))
    }));

    let v0 = sample_v0_points(ab, cfg.eps_min, cfg.eps_max, cfg.n, cfg.seed);
    let v0_obs: Vec<f64> = v0.par_iter().map(|p| projection_distortion_at(p, ab)).collect::<bilip_core::Result<_>>()?;
    let v0_bound = v0_distortion_bound::<f64>(a, b);
    let v0_max = max_of(v0_obs.into_iter());

    let model = sample_model_surface(ex, cfg.delta, cfg.eps_min, cfg.eps_max, cfg.n, cfg.seed.wrapping_add(1));
    let ick: Vec<f64> = model.par_iter().map(|p| tangent_ratio_ick(p, ex)).collect::<bilip_core::Result<_>>()?;

    let c1 = sample_c1_prime(ex, cfg.delta, cfg.delta / 10.0, cfg.eps_min, cfg.eps_max, cfg.n, cfg.seed.wrapping_add(2));
    let report = model_vs_full_distortion(&c1, ex, cfg.delta, cfg.seed.wrapping_add(3))?;

    let checks = vec![
        Check::new("v0_projection", v0_max, v0_bound),
        Check::new("ratio_scan", scan, 1.0),
        Check::new("model_tangent_ratio", max_of(ick.into_iter()), ick_bound::<f64>(b, cfg.delta)),
        Check::new("model_vs_full", report.max_ratio, report.bound),
    ];
    let all_hold = checks.iter().all(|c| c.holds);
    out.json(
        "distortion_summary.json",
        &DistortionSummary { germ: "brieskorn", a, b, delta: cfg.delta, n: cfg.n, bound: v0_bound, max_observed: v0_max, checks, all_hold },
    )?;
    Ok(!all_hold)
}

#[derive(Serialize, Default)]
struct TagCounts {
    zone0: usize,
    zone1: usize,
    boundary: usize,
}

impl TagCounts {
    fn add(&mut self, t: RegionTag) {
        match t {
            RegionTag::Zone0 => self.zone0 += 1,
            RegionTag::Zone1 => self.zone1 += 1,
            RegionTag::Boundary => self.boundary += 1,
        }
    }
}

#[derive(Serialize)]
struct RegionRow {
    eps: f64,
    points: usize,
    v: TagCounts,
    w: TagCounts,
    c: TagCounts,
    c0_in_v1: usize,
}

pub fn regions(cfg: &ExperimentConfig, out: &mut Output) -> Result<bool, CliError> {
    let ab = need_brieskorn(cfg, "regions")?;
    let mut csv = String::from("eps,re_x,im_x,re_y,im_y,re_z,im_z,v_region,v_margin,w_region,w_margin,c_region,c_margin\n");
    let mut summary = Vec::new();
    for (i, eps) in cfg.radii().into_iter().enumerate() {
        let mut r = rng::stream(cfg.seed, i as u64);
        let mut row = RegionRow { eps, points: 0, v: TagCounts::default(), w: TagCounts::default(), c: TagCounts::default(), c0_in_v1: 0 };
        for _ in 0..cfg.n {
            let [y, z] = rng::unit_sphere::<2>(&mut r).map(|c| c * eps);
            let w = w_region(y, z, ab);
            for x in ab.sheets(y, z) {
                let p = ComplexPoint3::new(x, y, z);
                let (v, c) = (v_region(&p, ab), c_region(&p, ab, cfg.delta));
                row.points += 1;
                row.v.add(v.tag);
                row.w.add(w.tag);
                row.c.add(c.tag);
                let q = p.to_real();
                csv.push_str(&format!(
                    "{eps:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e},{},{:e},{},{:e}\n",
                    q[0], q[1], q[2], q[3], q[4], q[5], v.tag.as_str(), v.margin, w.tag.as_str(), w.margin, c.tag.as_str(), c.margin
                ));
            }
        }
        row.c0_in_v1 = c0_containment_violations(ab, cfg.delta, eps, cfg.n, cfg.seed.wrapping_add(1000 + i as u64));
        summary.push(row);
    }
    out.write("regions.csv", &csv)?;
    out.json("regions_summary.json", &summary)?;
    Ok(false)
}

pub fn tube(cfg: &ExperimentConfig, out: &mut Output) -> Result<bool, CliError> {
    let ab = need_brieskorn(cfg, "tube")?;
    let fit = measure_tube_exponent(ab, &cfg.radii(), cfg.n, cfg.seed)?;
    let mut csv = String::from("r,tube_radius,n_valid\n");
    for r in &fit.rows {
        csv.push_str(&format!("{:e},{:e},{}\n", r.r, r.tube_radius, r.n_valid));
    }
    out.write("tube.csv", &csv)?;
    #[derive(Serialize)]
    struct TubeSummary {
        exponent: f64,
        prefactor: f64,
        r2: f64,
        theory_exponent: f64,
        theory_prefactor: f64,
    }
    out.json(
        "tube_fit.json",
        &TubeSummary {
            exponent: fit.exponent,
            prefactor: fit.prefactor,
            r2: fit.r2,
            theory_exponent: fit.theory_exponent,
            theory_prefactor: fit.theory_prefactor,
        },
    )?;
    let pts: Vec<(f64, f64)> = fit.rows.iter().map(|r| (r.r, r.tube_radius)).collect();
    out.dat("tube.dat", ("r", "tube_radius"), &pts)?;
    Ok(false)
}

#[derive(Serialize)]
struct GrowthSummary {
    germ: &'static str,
    mu: f64,
    r2: f64,
    window: (f64, f64),
    theory_mu: f64,
    prefactor: f64,
    theory_prefactor: Option<f64>,
}

pub fn density(cfg: &ExperimentConfig, out: &mut Output) -> Result<bool, CliError> {
    let radii = cfg.radii();
    let mc = |f: &dyn Fn(f64, u64) -> bilip_core::Result<(f64, f64)>| -> Result<GrowthSeries, CliError> {
        let mut entries = Vec::with_capacity(radii.len());
        for (i, &eps) in radii.iter().enumerate() {
            let (volume, stderr) = f(eps, cfg.seed.wrapping_add(i as u64))?;
            entries.push(GrowthEntry { eps, volume, stderr });
        }
        Ok(GrowthSeries::new(entries, 4)?)
    };
    let (series, theory_mu, theory_prefactor) = match cfg.family {
        Family::Brieskorn { a, b } => {
            let ab = BrieskornPair::new(a, b)?;
            (mc(&|e, s| brieskorn_volume(ab, e, cfg.n, s).map(|v| (v.volume, v.stderr)))?, 4.0, None)
        }
        Family::Smooth => {
            let cover = LinearCover { alpha: Complex::new(0.0, 0.0), beta: Complex::new(0.0, 0.0) };
            (mc(&|e, s| cover_volume(&cover, e, cfg.n, s).map(|v| (v.volume, v.stderr)))?, 4.0, Some(std::f64::consts::PI.powi(2) / 2.0))
        }
        Family::Bs { t } => {
            let cover = GermCover::new(BSFamilyParams::new(t).germ())?;
            (mc(&|e, s| cover_volume(&cover, e, cfg.n, s).map(|v| (v.volume, v.stderr)))?, 4.0, None)
        }
        Family::Ak { k } => {
            let rep = half_density_check(AkParams::new(k)?, &radii, cfg.n, cfg.seed)?;
            let entries = rep.rows.iter().map(|r| GrowthEntry { eps: r.eps, volume: r.volume, stderr: r.stderr }).collect();
            (GrowthSeries::new(entries, 4)?, 4.0, None)
        }
        Family::Horn { p, q } => {
            let horn = HornParams::new(p, q)?;
            let series = GrowthSeries::new(
                radii.iter().map(|&e| horn_area(horn, e).map(|v| GrowthEntry { eps: e, volume: v, stderr: 0.0 })).collect::<bilip_core::Result<_>>()?,
                2,
            )?;
            (series, horn.beta() + 1.0, Some(horn.leading_coefficient()))
        }
    };
    let growth = volume_growth_number(&series)?;
    let fit = series.fit()?;
    out.write("volume.csv", &series.to_csv())?;
    let pts: Vec<(f64, f64)> = series.entries().iter().map(|e| (e.eps, e.volume)).collect();
    out.dat("volume.dat", ("eps", "volume"), &pts)?;
    out.json(
        "growth_fit.json",
        &GrowthSummary {
            germ: cfg.family.name(),
            mu: growth.mu,
            r2: growth.r2,
            window: growth.window,
            theory_mu,
            prefactor: fit.prefactor(),
            theory_prefactor,
        },
    )?;
    Ok(false)
}

#[derive(Serialize)]
struct ConflictSummary {
    k: u32,
    mode: MetricMode,
    samples: usize,
    max_r_sym: f64,
    max_r_power: f64,
    tangent_exponent: f64,
    theory_tangent_exponent: f64,
    density_slope: Option<f64>,
    control_slope: Option<f64>,
    half_density_shares: Option<(f64, f64)>,
    half_density_stderr: Option<f64>,
    total_volume_slope: Option<f64>,
}

pub fn conflict(cfg: &ExperimentConfig, out: &mut Output) -> Result<bool, CliError> {
    let Family::Ak { k } = cfg.family else {
        return Err(CliError::Validation(format!("conflict needs an ak germ, got {}", cfg.family.name())));
    };
    let ak = AkParams::new(k)?;
    let radii = cfg.radii();
    let per_eps = cfg.n.div_ceil(radii.len());
    let mut samples: Vec<ConflictSample> = Vec::new();
    let mut angles = Vec::with_capacity(radii.len());
    let run = |oracle: &dyn bilip_core::separating::CurveDistances, tol: f64, samples: &mut Vec<ConflictSample>, angles: &mut Vec<(f64, f64)>| {
        for (i, &eps) in radii.iter().enumerate() {
            let s = ak_conflict_samples(ak, eps, per_eps, cfg.seed.wrapping_add(i as u64), oracle, tol)?;
            let pts: Vec<_> = s.iter().map(|c| c.point).collect();
            angles.push((eps, tangent_cone_angle(&pts)));
            samples.extend(s);
        }
        Ok::<(), CliError>(())
    };
    match cfg.mode {
        MetricMode::Outer => run(&ak.outer(), CONFLICT_TOL, &mut samples, &mut angles)?,
        MetricMode::Inner => {
            let chart = ak.inner_chart(cfg.eps_min / 2.0, (2.0 * cfg.eps_max).min(1.0), cfg.n.max(500), 40, cfg.seed)?;
            run(&chart, 1e-9, &mut samples, &mut angles)?
        }
    }
    out.write("conflict_samples.csv", &conflict_csv(&samples))?;
    out.dat("tangent_angle.dat", ("eps", "max_angle"), &angles)?;
    let residuals: Vec<(f64, f64)> = samples.iter().map(|s| conflict_invariant_residuals(s, k)).collect();
    let tangent = scaling_exponent(&angles)?;
    let mut summary = ConflictSummary {
        k,
        mode: cfg.mode,
        samples: samples.len(),
        max_r_sym: max_of(residuals.iter().map(|r| r.0)),
        max_r_power: max_of(residuals.iter().map(|r| r.1)),
        tangent_exponent: tangent.slope,
        theory_tangent_exponent: (k as f64 - 1.0) / 2.0,
        density_slope: None,
        control_slope: None,
        half_density_shares: None,
        half_density_stderr: None,
        total_volume_slope: None,
    };
    if cfg.mode == MetricMode::Outer {
        let budget = 8 * cfg.n;
        let y = conflict_density_slope(ak, &radii, budget, cfg.seed)?;
        let control = control_density_slope(&radii, budget, cfg.seed)?;
        let half = half_density_check(ak, &radii, 100 * cfg.n, cfg.seed)?;
        out.dat("conflict_volume.dat", ("eps", "volume"), &y.rows)?;
        out.dat("control_volume.dat", ("eps", "volume"), &control.rows)?;
        let mut csv = String::from("eps,volume,stderr,share1,share1_stderr\n");
        for r in &half.rows {
            csv.push_str(&format!("{:e},{:e},{:e},{:e},{:e}\n", r.eps, r.volume, r.stderr, r.share1, r.share1_stderr));
        }
        out.write("half_density.csv", &csv)?;
        summary.density_slope = Some(y.slope);
        summary.control_slope = Some(control.slope);
        summary.half_density_shares = Some((half.share1, half.share2));
        summary.half_density_stderr = Some(half.share_stderr);
        summary.total_volume_slope = Some(half.total_slope);
    }
    out.json("conflict_summary.json", &summary)?;
    Ok(false)
}

pub fn bs(cfg: &ExperimentConfig, out: &mut Output) -> Result<bool, CliError> {
    let Family::Bs { t } = cfg.family else {
        return Err(CliError::Validation(format!("bs needs a bs germ, got {}", cfg.family.name())));
    };
    let params = BSFamilyParams::new(t);
    let defaults = BSFamilyParams::default_curves();
    let curves = OuterCurves { c1: cfg.curve1.clone().unwrap_or(defaults.c1), c2: cfg.curve2.clone().unwrap_or(defaults.c2) };
    let report = bs_conflict_explore(params, &curves, &cfg.radii(), cfg.n, cfg.seed)?;
    let mut r = rng::stream(cfg.seed, u64::MAX);
    let identity = max_of((0..cfg.n).map(|_| {
        let [x, y, z] = rng::ball::<3>(&mut r, 1.0);
        params.quasi_homogeneity_residual(&ComplexPoint3::new(x, y, z), 0.7)
    }));
    let mut csv = String::from("eps,n_located,max_angle,y_volume,volume,share1\n");
    for row in &report.rows {
        csv.push_str(&format!("{:e},{},{:e},{:e},{:e},{:e}\n", row.eps, row.n_located, row.max_angle, row.y_volume, row.volume, row.share1));
    }
    out.write("bs_rows.csv", &csv)?;
    out.dat("bs_tangent_angle.dat", ("eps", "max_angle"), &report.rows.iter().map(|r| (r.eps, r.max_angle)).collect::<Vec<_>>())?;
    out.dat("bs_conflict_volume.dat", ("eps", "y_volume"), &report.rows.iter().map(|r| (r.eps, r.y_volume)).collect::<Vec<_>>())?;
    #[derive(Serialize)]
    struct BsOut<'a> {
        #[serde(flatten)]
        report: &'a bilip_core::separating::BsReport,
        identity_residual_max: f64,
    }
    out.json("bs_report.json", &BsOut { report: &report, identity_residual_max: identity })?;
    Ok(false)
}

pub fn sample(cfg: &ExperimentConfig, out: &mut Output) -> Result<bool, CliError> {
    let germ: Germ = match cfg.family {
        Family::Horn { p, q } => {
            let cloud = sample_horn_cloud(HornParams::new(p, q)?, cfg.eps_max, cfg.n, cfg.seed);
            let mut csv = String::from("x,y,z\n");
            for i in 0..cloud.len() {
                let q = cloud.point(i);
                csv.push_str(&format!("{},{},{}\n", q[0], q[1], q[2]));
            }
            out.write("samples.csv", &csv)?;
            return Ok(false);
        }
        Family::Brieskorn { a, b } => BrieskornPair::new(a, b)?.germ(),
        Family::Ak { k } => AkParams::new(k)?.germ(),
        Family::Bs { t } => BSFamilyParams::new(t).germ(),
        Family::Smooth => plane_x0(),
    };
    let cloud = sample_annulus(&germ, cfg.eps_min, cfg.eps_max, 4, cfg.n, cfg.seed, &SamplingConfig::default())?;
    out.write("samples.csv", &cloud.to_csv())?;
    out.write("germ.txt", &germ.to_text())?;
    Ok(false)
}
