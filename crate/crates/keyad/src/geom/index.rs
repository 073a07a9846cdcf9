//! Exact nearest-neighbor index over fixed-dimension rows.
//!
//! A kd-tree with median splits on the widest-extent axis. Queries are exact:
//! `knn` returns the k rows that come first under ascending
//! `(distance, row index)` order, and `radius` returns every row within the
//! given distance (inclusive), both identical to a brute-force linear scan.
//! The same structure indexes 3-d point clouds and 33-d FPFH banks.

use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Split {
        axis: u16,
        value: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        start: u32,
        end: u32,
    },
}

/// Immutable exact k-NN / radius index over `n` rows of dimension `dim`.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    data: Vec<f64>,
    dim: usize,
    n: usize,
    order: Vec<u32>,
    nodes: Vec<Node>,
    root: u32,
}

/// A query hit: row index and Euclidean distance, ascending `(distance, index)`.
pub type Neighbor = (usize, f64);

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc
}

impl SpatialIndex {
    /// Indexes the xyz coordinates of a cloud.
    pub fn from_cloud(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::EmptyInput("cannot index an empty cloud"));
        }
        let mut data = Vec::with_capacity(cloud.len() * 3);
        for p in cloud.points() {
            data.extend_from_slice(&[p.x, p.y, p.z]);
        }
        Self::from_flat(data, 3)
    }

    /// Indexes row-major data of `dim` columns.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::EmptyInput("cannot index an empty row set"));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::invalid_argument(format!(
                    "row {i} has dimension {} != {dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(data, dim)
    }

    /// Indexes a flat row-major buffer.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || data.is_empty() {
            return Err(Error::EmptyInput("cannot index empty data"));
        }
        if data.len() % dim != 0 {
            return Err(Error::invalid_argument(format!(
                "data length {} is not a multiple of dim {dim}",
                data.len()
            )));
        }
        let n = data.len() / dim;
        let mut index = Self {
            data,
            dim,
            n,
            order: (0..n as u32).collect(),
            nodes: Vec::new(),
            root: 0,
        };
        index.root = index.build(0, n);
        Ok(index)
    }

    fn row(&self, id: u32) -> &[f64] {
        let start = id as usize * self.dim;
        &self.data[start..start + self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> u32 {
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf {
                start: start as u32,
                end: end as u32,
            });
            return (self.nodes.len() - 1) as u32;
        }

        // Split along the widest-extent axis of this subset.
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for &id in &self.order[start..end] {
            let row = {
                let s = id as usize * self.dim;
                &self.data[s..s + self.dim]
            };
            for d in 0..self.dim {
                lo[d] = lo[d].min(row[d]);
                hi[d] = hi[d].max(row[d]);
            }
        }
        let mut axis = 0usize;
        let mut best_extent = -1.0;
        for d in 0..self.dim {
            let e = hi[d] - lo[d];
            if e > best_extent {
                best_extent = e;
                axis = d;
            }
        }
        if best_extent <= 0.0 {
            // All rows identical over every axis: leave as one leaf.
            self.nodes.push(Node::Leaf {
                start: start as u32,
                end: end as u32,
            });
            return (self.nodes.len() - 1) as u32;
        }

        let mid = (start + end) / 2;
        let dim = self.dim;
        let data = std::mem::take(&mut self.data);
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            let ca = data[a as usize * dim + axis];
            let cb = data[b as usize * dim + axis];
            ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
        });
        self.data = data;
        let value = self.row(self.order[mid])[axis];

        let node_slot = self.nodes.len();
        self.nodes.push(Node::Leaf { start: 0, end: 0 }); // placeholder
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[node_slot] = Node::Split {
            axis: axis as u16,
            value,
            left,
            right,
        };
        node_slot as u32
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The k nearest rows to `query`, ascending by `(distance, index)`.
    /// `k` is clamped to the row count.
    pub fn knn(&self, query: &[f64], k: usize) -> Vec<Neighbor> {
        assert_eq!(query.len(), self.dim, "query dimension mismatch");
        let k = k.min(self.n);
        if k == 0 {
            return Vec::new();
        }
        // Max-heap on (dist2, id): the root is the current worst candidate.
        let mut heap: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        self.knn_visit(self.root, query, k, &mut heap);
        let mut out: Vec<(f64, u32)> = heap;
        out.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        out.into_iter()
            .map(|(d2, id)| (id as usize, d2.sqrt()))
            .collect()
    }

    fn knn_visit(&self, node: u32, query: &[f64], k: usize, heap: &mut Vec<(f64, u32)>) {
        match &self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &id in &self.order[*start as usize..*end as usize] {
                    let d2 = dist2(query, self.row(id));
                    if heap.len() < k {
                        heap_push(heap, (d2, id));
                    } else if precedes((d2, id), heap[0]) {
                        heap_replace_root(heap, (d2, id));
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = query[*axis as usize] - value;
                let (near, far) = if delta < 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.knn_visit(near, query, k, heap);
                if heap.len() < k || delta * delta <= heap[0].0 {
                    self.knn_visit(far, query, k, heap);
                }
            }
        }
    }

    /// Every row with distance ≤ `radius`, ascending by `(distance, index)`.
    pub fn radius(&self, query: &[f64], radius: f64) -> Vec<Neighbor> {
        assert_eq!(query.len(), self.dim, "query dimension mismatch");
        let r2 = radius * radius;
        let mut hits: Vec<(f64, u32)> = Vec::new();
        self.radius_visit(self.root, query, radius, r2, &mut hits);
        hits.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        hits.into_iter()
            .map(|(d2, id)| (id as usize, d2.sqrt()))
            .collect()
    }

    fn radius_visit(
        &self,
        node: u32,
        query: &[f64],
        radius: f64,
        r2: f64,
        hits: &mut Vec<(f64, u32)>,
    ) {
        match &self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &id in &self.order[*start as usize..*end as usize] {
                    let d2 = dist2(query, self.row(id));
                    if d2 <= r2 {
                        hits.push((d2, id));
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = query[*axis as usize] - value;
                if delta <= radius {
                    self.radius_visit(*left, query, radius, r2, hits);
                }
                if -delta <= radius {
                    self.radius_visit(*right, query, radius, r2, hits);
                }
            }
        }
    }

    /// The single nearest row to `query`.
    pub fn nearest(&self, query: &[f64]) -> Neighbor {
        self.knn(query, 1)[0]
    }
}

/// `true` when `a` orders strictly before `b` under ascending `(dist2, id)`.
#[inline]
fn precedes(a: (f64, u32), b: (f64, u32)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Sift-up insert into a max-heap ordered by `(dist2, id)`.
fn heap_push(heap: &mut Vec<(f64, u32)>, item: (f64, u32)) {
    heap.push(item);
    let mut i = heap.len() - 1;
    while i > 0 {
        let parent = (i - 1) / 2;
        if precedes(heap[parent], heap[i]) {
            heap.swap(i, parent);
            i = parent;
        } else {
            break;
        }
    }
}

/// Replace the max-heap root and sift down.
fn heap_replace_root(heap: &mut Vec<(f64, u32)>, item: (f64, u32)) {
    heap[0] = item;
    let n = heap.len();
    let mut i = 0;
    loop {
        let (l, r) = (2 * i + 1, 2 * i + 2);
        let mut largest = i;
        if l < n && precedes(heap[largest], heap[l]) {
            largest = l;
        }
        if r < n && precedes(heap[largest], heap[r]) {
            largest = r;
        }
        if largest == i {
            break;
        }
        heap.swap(i, largest);
        i = largest;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn brute_knn(data: &[Vec<f64>], q: &[f64], k: usize) -> Vec<Neighbor> {
        let mut all: Vec<(f64, usize)> = data
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut acc = 0.0;
                for d in 0..q.len() {
                    let diff = q[d] - row[d];
                    acc += diff * diff;
                }
                (acc, i)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        all.truncate(k);
        all.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
    }

    fn brute_radius(data: &[Vec<f64>], q: &[f64], r: f64) -> Vec<Neighbor> {
        let mut all: Vec<(f64, usize)> = data
            .iter()
            .enumerate()
            .filter_map(|(i, row)| {
                let mut acc = 0.0;
                for d in 0..q.len() {
                    let diff = q[d] - row[d];
                    acc += diff * diff;
                }
                (acc <= r * r).then_some((acc, i))
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        all.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
    }

    fn random_rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn one_point_cloud_knn_returns_it() {
        let cloud = PointCloud::new(vec![Vector3::new(0.5, -0.5, 2.0)]).unwrap();
        let idx = SpatialIndex::from_cloud(&cloud).unwrap();
        let hits = idx.knn(&[100.0, 100.0, 100.0], 1);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].0, 0);
    }

    #[test]
    fn empty_cloud_is_rejected() {
        let cloud = PointCloud::new(vec![]).unwrap();
        assert!(matches!(
            SpatialIndex::from_cloud(&cloud),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn matches_brute_force_knn_100_random() {
        let rows = random_rows(100, 3, 11);
        let idx = SpatialIndex::from_rows(&rows).unwrap();
        let q = [0.1, -0.2, 0.05];
        assert_eq!(idx.knn(&q, 5), brute_knn(&rows, &q, 5));
    }

    #[test]
    fn cube_corner_radius_query_finds_nothing_near_origin() {
        // Unit cube centered at the origin: corners at distance √3/2 ≈ 0.866.
        let mut pts = Vec::new();
        for &x in &[-0.5, 0.5] {
            for &y in &[-0.5, 0.5] {
                for &z in &[-0.5, 0.5] {
                    pts.push(Vector3::new(x, y, z));
                }
            }
        }
        let cloud = PointCloud::new(pts).unwrap();
        let idx = SpatialIndex::from_cloud(&cloud).unwrap();
        assert!(idx.radius(&[0.0, 0.0, 0.0], 0.1).is_empty());
        assert_eq!(idx.radius(&[0.0, 0.0, 0.0], 0.9).len(), 8);
    }

    #[test]
    fn exactness_randomized_many_dims() {
        for (trial, &(n, dim)) in [(500, 3), (2000, 3), (300, 33), (40, 2)].iter().enumerate() {
            let rows = random_rows(n, dim, 100 + trial as u64);
            let idx = SpatialIndex::from_rows(&rows).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(999 + trial as u64);
            for _ in 0..20 {
                let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.2..1.2)).collect();
                let k = rng.random_range(1..=n.min(12));
                assert_eq!(idx.knn(&q, k), brute_knn(&rows, &q, k), "knn n={n} dim={dim}");
                let r = rng.random_range(0.05..0.8);
                assert_eq!(
                    idx.radius(&q, r),
                    brute_radius(&rows, &q, r),
                    "radius n={n} dim={dim}"
                );
            }
        }
    }

    #[test]
    fn duplicate_rows_tie_break_by_index() {
        let rows = vec![vec![1.0, 1.0, 1.0]; 40];
        let idx = SpatialIndex::from_rows(&rows).unwrap();
        let hits = idx.knn(&[1.0, 1.0, 1.0], 3);
        assert_eq!(
            hits.iter().map(|h| h.0).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }
}
