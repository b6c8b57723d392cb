//! Inner (length) metric of a sampled surface, approximated by shortest paths in a
//! neighbour graph whose edges are certified to stay close to the surface.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::variety::{ComplexPoint3, HypersurfaceGerm, SampleCloud};

pub use crate::fit::{scaling_exponent, PowerLawFit};

/// A real submanifold that can (approximately) project ambient points onto itself.
pub trait Surface<T>: Sync {
    /// Nearby point of the surface, or `None` if the projection fails.
    fn project(&self, p: &[T]) -> Option<Vec<T>>;
}

/// Euclidean space, the surface of every flat cloud.
#[derive(Clone, Copy, Debug, Default)]
pub struct FlatSpace;

impl<T: Scalar> Surface<T> for FlatSpace {
    fn project(&self, p: &[T]) -> Option<Vec<T>> {
        Some(p.to_vec())
    }
}

/// Germs act on `R^6 = C^3` through Newton projection.
impl<T: Scalar> Surface<T> for HypersurfaceGerm<T> {
    fn project(&self, p: &[T]) -> Option<Vec<T>> {
        let q = ComplexPoint3::from_real(p);
        let scale: T = self.terms().iter().map(|t| t.eval(&q).norm()).sum();
        let tol = (scale * T::lit(1e-10)).max(T::min_positive_value());
        self.newton_project(&q, tol, 100).ok().map(|r| r.point.to_real().to_vec())
    }
}

/// Points of `R^dim`, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(dim: usize) -> Self {
        Self { dim, coords: Vec::new() }
    }

    pub fn from_flat(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::validation("coordinate count is not a multiple of the dimension"));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_sample_cloud(cloud: &SampleCloud<T>) -> Self {
        let mut out = Self::new(6);
        for p in &cloud.points {
            out.push(&p.to_real());
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Appends a point and returns its index.
    pub fn push(&mut self, p: &[T]) -> usize {
        assert_eq!(p.len(), self.dim, "point has wrong dimension");
        self.coords.extend_from_slice(p);
        self.len() - 1
    }

    pub fn dist(&self, i: usize, j: usize) -> T {
        euclid(self.point(i), self.point(j))
    }
}

pub fn euclid<T: Scalar>(p: &[T], q: &[T]) -> T {
    p.iter().zip(q).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt()
}

/// Indices sorted along the coordinate of largest spread, with that coordinate.
fn sweep_order<T: Scalar>(cloud: &PointCloud<T>) -> (Vec<usize>, Vec<T>) {
    let n = cloud.len();
    let mut axis = 0;
    let mut best = T::neg_infinity();
    for k in 0..cloud.dim {
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        for i in 0..n {
            let c = cloud.point(i)[k];
            lo = lo.min(c);
            hi = hi.max(c);
        }
        if hi - lo > best {
            best = hi - lo;
            axis = k;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cloud.point(i)[axis].partial_cmp(&cloud.point(j)[axis]).unwrap_or(Ordering::Equal).then(i.cmp(&j)));
    let keys = order.iter().map(|&i| cloud.point(i)[axis]).collect();
    (order, keys)
}

/// Median over the points of the distance to the `k`-th nearest neighbour.
pub fn median_knn_distance<T: Scalar>(cloud: &PointCloud<T>, k: usize) -> Result<T> {
    if k == 0 || cloud.len() <= k {
        return Err(Error::InsufficientSamples(format!("need more than {k} points, got {}", cloud.len())));
    }
    let (order, keys) = sweep_order(cloud);
    let mut kth: Vec<T> = (0..order.len())
        .into_par_iter()
        .map(|a| {
            let i = order[a];
            // sorted ascending, at most k entries
            let mut best: Vec<T> = Vec::with_capacity(k + 1);
            let bound = |best: &Vec<T>| if best.len() < k { T::infinity() } else { best[k - 1] };
            let offer = |best: &mut Vec<T>, d: T| {
                let pos = best.partition_point(|&x| x <= d);
                if pos < k {
                    best.insert(pos, d);
                    best.truncate(k);
                }
            };
            for b in (a + 1)..order.len() {
                if keys[b] - keys[a] > bound(&best) {
                    break;
                }
                offer(&mut best, cloud.dist(i, order[b]));
            }
            for b in (0..a).rev() {
                if keys[a] - keys[b] > bound(&best) {
                    break;
                }
                offer(&mut best, cloud.dist(i, order[b]));
            }
            best[k - 1]
        })
        .collect();
    kth.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(kth[kth.len() / 2])
}

/// Volume of the unit ball of `R^d`.
fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * std::f64::consts::TAU / d as f64,
    }
}

const SPACING_K: usize = 8;

/// Typical spacing `(volume per point)^(1/d)` of a cloud sampling a `d`-dimensional
/// surface, from the local density `k / (omega_d r_k^d)` at the median point.
pub fn typical_spacing<T: Scalar>(cloud: &PointCloud<T>, intrinsic_dim: usize) -> Result<T> {
    if intrinsic_dim == 0 {
        return Err(Error::validation("intrinsic dimension must be positive"));
    }
    let rk = median_knn_distance(cloud, SPACING_K)?;
    let d = intrinsic_dim as f64;
    Ok(rk * T::lit((unit_ball_volume(intrinsic_dim) / SPACING_K as f64).powf(1.0 / d)))
}

/// Default connection radius: three typical spacings.
pub fn default_radius<T: Scalar>(cloud: &PointCloud<T>, intrinsic_dim: usize) -> Result<T> {
    Ok(typical_spacing(cloud, intrinsic_dim)? * T::lit(3.0))
}

/// Weighted neighbour graph over a point cloud.
#[derive(Clone, Debug)]
pub struct NeighborGraph<T> {
    pub h: T,
    pub tol: T,
    adj: Vec<Vec<(usize, T)>>,
    component: Vec<usize>,
    component_sizes: Vec<usize>,
}

impl<T: Scalar> NeighborGraph<T> {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, T)] {
        &self.adj[i]
    }

    pub fn n_components(&self) -> usize {
        self.component_sizes.len()
    }

    pub fn component_of(&self, i: usize) -> usize {
        self.component[i]
    }

    pub fn component_size(&self, i: usize) -> usize {
        self.component_sizes[self.component[i]]
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(i, j, w)` with `i < j`, ordered by `i` then `j`.
    pub fn edges(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::with_capacity(self.n_edges());
        for (i, nb) in self.adj.iter().enumerate() {
            out.extend(nb.iter().filter(|(j, _)| *j > i).map(|&(j, w)| (i, j, w)));
        }
        out
    }

    pub fn edges_csv(&self) -> String {
        let mut s = String::from("i,j,w\n");
        for (i, j, w) in self.edges() {
            s.push_str(&format!("{i},{j},{w:e}\n"));
        }
        s
    }

    /// Fails unless every basepoint lies in one component holding at least
    /// `min_fraction` of the vertices.
    pub fn require_connected(&self, basepoints: &[usize], min_fraction: f64) -> Result<()> {
        let total = self.len();
        let Some(&first) = basepoints.first() else { return Ok(()) };
        let size = self.component_size(first);
        let same = basepoints.iter().all(|&b| self.component[b] == self.component[first]);
        if !same || (size as f64) < min_fraction * total as f64 {
            return Err(Error::DisconnectedGraph { size, total });
        }
        Ok(())
    }
}

/// Graph on the pairs within distance `h` whose midpoint projects back to the
/// surface with displacement at most `tol`.
pub fn build_graph<T: Scalar, S: Surface<T> + ?Sized>(cloud: &PointCloud<T>, surface: &S, h: T, tol: T) -> Result<NeighborGraph<T>> {
    if !(h > T::zero()) {
        return Err(Error::validation("connection radius must be positive"));
    }
    let n = cloud.len();
    let (order, keys) = sweep_order(cloud);
    let half = T::lit(0.5);
    let per_vertex: Vec<Vec<(usize, usize, T)>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let i = order[a];
            let mut out = Vec::new();
            let mut mid = vec![T::zero(); cloud.dim];
            for b in (a + 1)..n {
                if keys[b] - keys[a] > h {
                    break;
                }
                let j = order[b];
                let w = cloud.dist(i, j);
                if w > h {
                    continue;
                }
                for (m, (&p, &q)) in mid.iter_mut().zip(cloud.point(i).iter().zip(cloud.point(j))) {
                    *m = (p + q) * half;
                }
                let ok = surface.project(&mid).is_some_and(|pr| euclid(&pr, &mid) <= tol);
                if ok {
                    out.push((i.min(j), i.max(j), w));
                }
            }
            out
        })
        .collect();
    let mut adj = vec![Vec::new(); n];
    for (i, j, w) in per_vertex.into_iter().flatten() {
        adj[i].push((j, w));
        adj[j].push((i, w));
    }
    for nb in &mut adj {
        nb.sort_by_key(|&(j, _)| j);
    }
    let (component, component_sizes) = components(&adj);
    Ok(NeighborGraph { h, tol, adj, component, component_sizes })
}

/// Graph with the default radius and midpoint tolerance `0.05 h`.
pub fn build_default_graph<T: Scalar, S: Surface<T> + ?Sized>(
    cloud: &PointCloud<T>,
    surface: &S,
    intrinsic_dim: usize,
) -> Result<NeighborGraph<T>> {
    let h = default_radius(cloud, intrinsic_dim)?;
    build_graph(cloud, surface, h, h * T::lit(0.05))
}

fn components<T>(adj: &[Vec<(usize, T)>]) -> (Vec<usize>, Vec<usize>) {
    let mut comp = vec![usize::MAX; adj.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..adj.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let c = sizes.len();
        let mut size = 0;
        comp[s] = c;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &(w, _) in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = c;
                    queue.push_back(w);
                }
            }
        }
        sizes.push(size);
    }
    (comp, sizes)
}

struct Item<T> {
    d: T,
    v: usize,
}

impl<T: Scalar> PartialEq for Item<T> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Item<T> {}

impl<T: Scalar> PartialOrd for Item<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

// reversed: BinaryHeap is a max-heap
impl<T: Scalar> Ord for Item<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        o.d.partial_cmp(&self.d).unwrap_or(Ordering::Equal).then(o.v.cmp(&self.v))
    }
}

/// Multi-source shortest-path lengths; unreachable vertices get `+inf`.
pub fn shortest_paths<T: Scalar>(graph: &NeighborGraph<T>, sources: &[usize]) -> Vec<T> {
    let mut dist = vec![T::infinity(); graph.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = T::zero();
        heap.push(Item { d: T::zero(), v: s });
    }
    while let Some(Item { d, v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, len) in &graph.adj[v] {
            let nd = d + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Item { d: nd, v: w });
            }
        }
    }
    dist
}

pub fn inner_distance<T: Scalar>(graph: &NeighborGraph<T>, i: usize, j: usize) -> Result<T> {
    if i == j {
        return Ok(T::zero());
    }
    let d = shortest_paths(graph, &[i])[j];
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Unreachable { from: i, to: j })
    }
}

pub fn distance_to_locus<T: Scalar>(graph: &NeighborGraph<T>, i: usize, locus: &[usize]) -> Result<T> {
    if locus.is_empty() {
        return Err(Error::validation("locus is empty"));
    }
    let d = shortest_paths(graph, locus)[i];
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Unreachable { from: i, to: locus[0] })
    }
}

/// Distance matrix among `idx` as CSV, one row per source.
pub fn distance_matrix_csv<T: Scalar>(graph: &NeighborGraph<T>, idx: &[usize]) -> String {
    let rows: Vec<Vec<T>> = idx.par_iter().map(|&i| shortest_paths(graph, &[i])).collect();
    let mut s = String::new();
    for row in rows {
        let line: Vec<String> = idx.iter().map(|&j| format!("{:e}", row[j])).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaleRow<T> {
    pub scale: T,
    pub distance: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport<T> {
    pub rows: Vec<ScaleRow<T>>,
    /// `max |d_s / (s d_0 / s_0) - 1|` with `s_0` the first scale.
    pub max_deviation: T,
}

/// Checks the cone law `d(s p, s q) = s d(p, q)` of the inner metric. At each scale
/// `s` the points `s p` and `s q` are projected onto the surface and joined to
/// `cloud_at(s)`, and their graph distance is measured.
pub fn conical_scaling_check<T, S, F>(
    surface: &S,
    intrinsic_dim: usize,
    p: &[T],
    q: &[T],
    scales: &[T],
    cloud_at: F,
) -> Result<ScalingReport<T>>
where
    T: Scalar,
    S: Surface<T> + ?Sized,
    F: Fn(T) -> Result<PointCloud<T>>,
{
    if scales.is_empty() {
        return Err(Error::validation("need at least one scale"));
    }
    let mut rows = Vec::with_capacity(scales.len());
    for &s in scales {
        let scaled = |v: &[T]| -> Result<Vec<T>> {
            let v: Vec<T> = v.iter().map(|&c| c * s).collect();
            surface.project(&v).ok_or(Error::NoConvergence { iterations: 0, residual: f64::NAN })
        };
        let (ps, qs) = (scaled(p)?, scaled(q)?);
        let distance = if euclid(&ps, &qs) == T::zero() {
            T::zero()
        } else {
            let mut cloud = cloud_at(s)?;
            let i = cloud.push(&ps);
            let j = cloud.push(&qs);
            let graph = build_default_graph(&cloud, surface, intrinsic_dim)?;
            inner_distance(&graph, i, j)?
        };
        rows.push(ScaleRow { scale: s, distance });
    }
    let r0 = rows[0].distance / rows[0].scale;
    let max_deviation = rows
        .iter()
        .map(|r| if r0 == T::zero() { r.distance } else { (r.distance / (r.scale * r0) - T::one()).abs() })
        .fold(T::zero(), T::max);
    Ok(ScalingReport { rows, max_deviation })
}
