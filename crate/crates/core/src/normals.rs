//! Surface normals for a sparse sample of points.
//!
//! For a reference point `p` with k nearest neighbors `q_j`, the estimator
//! accumulates
//!
//! ```text
//! M = Σ_j exp(−‖q_j − p‖² / 2σ²) · u_j u_jᵀ,   u_j = (q_j − p) / ‖q_j − p‖
//! ```
//!
//! and returns the eigenvector of `M` with the smallest eigenvalue. Because
//! every `u_j` is a unit direction, the estimate depends on neighbor bearing
//! and the Gaussian only down-weights far neighbors.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::SymMat3;
use crate::geom::{Point3, PointCloud, UnitVector3};
use crate::kdtree::KdIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalError {
    #[error("degenerate neighborhood around point {index}")]
    DegenerateNeighborhood { index: usize },
    #[error("none of the {sampled} sampled points produced a normal")]
    AllDegenerate { sampled: usize },
}

/// Bandwidth of the Gaussian neighbor weight.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigma {
    /// Mean distance from the reference point to its k neighbors.
    #[default]
    MeanNeighborDistance,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedPoint {
    pub index: usize,
    pub position: Point3,
    pub normal: UnitVector3,
}

/// Normal plus surface variation `λ_min / (λ_0 + λ_1 + λ_2)` of the weighted
/// direction scatter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalEstimate {
    pub normal: UnitVector3,
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub oriented_points: Vec<OrientedPoint>,
    pub sampling_rate: f64,
    pub k: usize,
    /// Sampled indices dropped because their neighborhood was degenerate.
    pub rejected: usize,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.oriented_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.oriented_points.is_empty()
    }
}

/// Number of points drawn for `rate` over `n` points; at least one.
pub fn sample_count(n: usize, rate: f64) -> usize {
    if n == 0 {
        return 0;
    }
    ((rate * n as f64).round() as usize).clamp(1, n)
}

/// Uniform sample of `round(rate·N)` distinct indices (partial Fisher–Yates).
pub fn sample_points<R: Rng + ?Sized>(cloud: &PointCloud, rate: f64, rng: &mut R) -> Vec<usize> {
    let n = cloud.len();
    let m = sample_count(n, rate);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool
}

pub fn estimate_normal(
    cloud: &PointCloud,
    index: usize,
    kd: &KdIndex,
    k: usize,
    sigma: Sigma,
) -> Result<UnitVector3, NormalError> {
    estimate_normal_full(cloud, index, kd, k, sigma).map(|e| e.normal)
}

pub fn estimate_normal_full(
    cloud: &PointCloud,
    index: usize,
    kd: &KdIndex,
    k: usize,
    sigma: Sigma,
) -> Result<NormalEstimate, NormalError> {
    let p = cloud.point(index);
    let neighbors = kd.knn(p, k, Some(index));
    let degenerate = NormalError::DegenerateNeighborhood { index };

    let usable: Vec<(Point3, f64)> = neighbors
        .iter()
        .filter(|n| n.distance > 0.0)
        .map(|n| (cloud.point(n.index) - p, n.distance))
        .collect();
    if usable.len() < 3 {
        return Err(degenerate);
    }

    let sigma = match sigma {
        Sigma::Fixed(s) => s,
        Sigma::MeanNeighborDistance => usable.iter().map(|&(_, d)| d).sum::<f64>() / usable.len() as f64,
    };
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

    let mut m = SymMat3::ZERO;
    for &(offset, dist) in &usable {
        let w = (-(dist * dist) * inv_two_sigma2).exp();
        m.add_outer((offset / dist).to_array(), w);
    }
    let eig = m.eigen();
    if !eig.min_is_isolated() {
        return Err(degenerate);
    }
    let normal = UnitVector3::canonical(Point3::from(eig.min_vector())).ok_or(degenerate)?;
    let trace = m.trace();
    let curvature = if trace > 0.0 { (eig.values[0] / trace).max(0.0) } else { 0.0 };
    Ok(NormalEstimate { normal, curvature })
}

/// Estimates normals at every index in `indices`, in parallel, preserving
/// input order.
pub fn estimate_many(
    cloud: &PointCloud,
    kd: &KdIndex,
    indices: &[usize],
    k: usize,
    sigma: Sigma,
) -> Vec<Result<NormalEstimate, NormalError>> {
    indices
        .par_iter()
        .map(|&i| estimate_normal_full(cloud, i, kd, k, sigma))
        .collect()
}

pub fn build_sample_set<R: Rng + ?Sized>(
    cloud: &PointCloud,
    kd: &KdIndex,
    rate: f64,
    k: usize,
    sigma: Sigma,
    rng: &mut R,
) -> Result<SampleSet, NormalError> {
    let sampled = sample_points(cloud, rate, rng);
    let estimates = estimate_many(cloud, kd, &sampled, k, sigma);
    let mut oriented_points = Vec::with_capacity(sampled.len());
    let mut rejected = 0;
    for (&index, est) in sampled.iter().zip(estimates) {
        match est {
            Ok(e) => oriented_points.push(OrientedPoint {
                index,
                position: cloud.point(index),
                normal: e.normal,
            }),
            Err(_) => rejected += 1,
        }
    }
    if oriented_points.is_empty() {
        return Err(NormalError::AllDegenerate { sampled: sampled.len() });
    }
    Ok(SampleSet {
        oriented_points,
        sampling_rate: rate,
        k,
        rejected,
    })
}
