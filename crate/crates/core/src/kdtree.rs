//! Static k-d tree over a point cloud with exact k-nearest-neighbor and
//! radius queries.
//!
//! The tree splits at the median of the widest-spread axis until a node holds
//! at most [`LEAF_SIZE`] points. Points are copied into tree order so leaf
//! scans walk contiguous memory. Distance ties are broken by the lower point
//! index, which makes every query result a pure function of the cloud.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::geom::{Point3, PointCloud};

pub const LEAF_SIZE: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("cannot index an empty point cloud")]
    EmptyCloud,
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Leaf { start: u32, end: u32 },
    Split { axis: u8, value: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone)]
pub struct KdIndex {
    nodes: Vec<Node>,
    /// Points in tree order.
    points: Vec<Point3>,
    /// Source-cloud index of each entry in `points`.
    ids: Vec<u32>,
}

/// A neighbor returned by [`KdIndex::knn`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    dist2: f64,
    index: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdIndex {
    pub fn build(cloud: &PointCloud) -> Result<Self, IndexError> {
        if cloud.is_empty() {
            return Err(IndexError::EmptyCloud);
        }
        assert!(cloud.len() <= u32::MAX as usize, "cloud too large for a 32-bit index");
        let mut ids: Vec<u32> = (0..cloud.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * cloud.len() / LEAF_SIZE + 1);
        build_node(&cloud.points, &mut ids, 0, &mut nodes);
        let points = ids.iter().map(|&i| cloud.points[i as usize]).collect();
        Ok(KdIndex { nodes, points, ids })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `k` points nearest to `query`, ascending by distance then index.
    /// `exclude` removes one source index from consideration.
    pub fn knn(&self, query: Point3, k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        if k == 0 {
            return Vec::new();
        }
        let exclude = exclude.map(|e| e as u32);
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.knn_node(0, query, k, exclude, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort_unstable();
        out.into_iter()
            .map(|c| Neighbor {
                index: c.index as usize,
                distance: c.dist2.sqrt(),
            })
            .collect()
    }

    fn knn_node(&self, node: usize, q: Point3, k: usize, exclude: Option<u32>, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start as usize..end as usize {
                    let index = self.ids[slot];
                    if Some(index) == exclude {
                        continue;
                    }
                    let cand = Candidate {
                        dist2: self.points[slot].distance_squared(q),
                        index,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q.coord(axis as usize) - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.knn_node(near as usize, q, k, exclude, heap);
                // `<=` keeps equal-distance candidates reachable for the index tie-break.
                if heap.len() < k || diff * diff <= heap.peek().unwrap().dist2 {
                    self.knn_node(far as usize, q, k, exclude, heap);
                }
            }
        }
    }

    /// Source indices of every point within `radius` (inclusive), ascending.
    pub fn radius_search(&self, center: Point3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.radius_search_into(center, radius, &mut out);
        out
    }

    /// Like [`radius_search`](Self::radius_search) but reuses `out`.
    pub fn radius_search_into(&self, center: Point3, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        if !(radius >= 0.0) {
            return;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf { start, end } => {
                    for slot in start as usize..end as usize {
                        if self.points[slot].distance_squared(center) <= r2 {
                            out.push(self.ids[slot] as usize);
                        }
                    }
                }
                Node::Split { axis, value, left, right } => {
                    let diff = center.coord(axis as usize) - value;
                    if diff <= 0.0 || diff * diff <= r2 {
                        stack.push(left as usize);
                    }
                    if diff >= 0.0 || diff * diff <= r2 {
                        stack.push(right as usize);
                    }
                }
            }
        }
        out.sort_unstable();
    }
}

fn build_node(points: &[Point3], ids: &mut [u32], offset: usize, nodes: &mut Vec<Node>) -> u32 {
    let me = nodes.len() as u32;
    if ids.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + ids.len()) as u32,
        });
        return me;
    }

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in ids.iter() {
        let p = points[i as usize].to_array();
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let axis = (0..3).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a))).unwrap();

    let mid = ids.len() / 2;
    ids.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize]
            .coord(axis)
            .total_cmp(&points[b as usize].coord(axis))
            .then(a.cmp(&b))
    });
    let value = points[ids[mid] as usize].coord(axis);

    // Placeholder, patched once the children exist.
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (left_ids, right_ids) = ids.split_at_mut(mid);
    let left = build_node(points, left_ids, offset, nodes);
    let right = build_node(points, right_ids, offset + mid, nodes);
    nodes[me as usize] = Node::Split {
        axis: axis as u8,
        value,
        left,
        right,
    };
    me
}
