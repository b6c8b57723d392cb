use bilip_core::density::{sample_horn_cloud, HornParams};
use bilip_core::inner_metric::{build_default_graph, conical_scaling_check, inner_distance, FlatSpace, PointCloud};
use bilip_core::rng;
use rand::Rng;

fn horn_report(p: u32, q: u32) -> f64 {
    let horn = HornParams::new(p, q).unwrap();
    let (a, b) = ([1.0, 0.0, 1.0], [-1.0, 0.0, 1.0]);
    let rep = conical_scaling_check(&horn, 2, &a, &b, &[1.0, 0.3, 0.1], |s| Ok(sample_horn_cloud(horn, 2.0 * s, 3000, 9))).unwrap();
    rep.max_deviation
}

#[test]
fn steep_horn_is_flagged_non_conical() {
    let dev = horn_report(2, 1);
    assert!(dev > 0.2, "beta = 2 deviation {dev}");
}

#[test]
fn round_cone_passes_the_scaling_check() {
    // beta = 1 is the straight cone x^2 + y^2 = z^2
    let dev = horn_report(1, 1);
    assert!(dev <= 0.05, "beta = 1 deviation {dev}");
}

#[test]
fn planar_disk_geodesics_match_euclid() {
    let mut c = PointCloud::new(2);
    c.push(&[1.0, 0.0]);
    c.push(&[-1.0, 0.0]);
    let mut r = rng::stream(3, 0);
    while c.len() < 4000 {
        let (x, y) = (2.0 * r.random::<f64>() - 1.0, 2.0 * r.random::<f64>() - 1.0);
        if x * x + y * y <= 1.0 {
            c.push(&[x, y]);
        }
    }
    let g = build_default_graph(&c, &FlatSpace, 2).unwrap();
    let d = inner_distance(&g, 0, 1).unwrap();
    assert!((d / 2.0 - 1.0).abs() <= 0.03, "{d}");
}
