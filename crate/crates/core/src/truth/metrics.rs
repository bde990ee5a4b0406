use std::collections::HashMap;

use super::{hungarian_match, LabelError, SegmentLabeling};

fn check_sizes(a: &SegmentLabeling, b: &SegmentLabeling) -> Result<(), LabelError> {
    if a.len() != b.len() {
        return Err(LabelError::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Fraction of points whose orientation class matches. An empty labeling
/// scores 1.
pub fn classification_accuracy(predicted: &SegmentLabeling, truth: &SegmentLabeling) -> Result<f64, LabelError> {
    check_sizes(predicted, truth)?;
    if truth.is_empty() {
        return Ok(1.0);
    }
    let hits = predicted
        .orientations()
        .iter()
        .zip(truth.orientations())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Fraction of points assigned to the right plane under the best one-to-one
/// matching of predicted to true segments.
///
/// Unsegmented points on both sides form a fixed pair: a point unsegmented in
/// both labelings counts as matched, and the unsegmented set never stands in
/// for a real plane.
pub fn segmentation_accuracy(predicted: &SegmentLabeling, truth: &SegmentLabeling) -> Result<f64, LabelError> {
    check_sizes(predicted, truth)?;
    if truth.is_empty() {
        return Ok(1.0);
    }
    let pred_ids = predicted.segments();
    let true_ids = truth.segments();
    let pred_pos: HashMap<u32, usize> = pred_ids.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let true_pos: HashMap<u32, usize> = true_ids.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let mut overlap = vec![vec![0u64; true_ids.len()]; pred_ids.len()];
    let mut both_unsegmented = 0u64;
    for (p, t) in predicted.plane_ids().iter().zip(truth.plane_ids()) {
        match (p, t) {
            (Some(p), Some(t)) => overlap[pred_pos[p]][true_pos[t]] += 1,
            (None, None) => both_unsegmented += 1,
            _ => {}
        }
    }
    let matched = hungarian_match(&overlap).total + both_unsegmented;
    Ok(matched as f64 / truth.len() as f64)
}

/// Share of each predicted segment that falls in its dominant true segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Purity {
    pub segment: u32,
    pub size: usize,
    pub dominant: Option<u32>,
    pub purity: f64,
}

impl Purity {
    pub fn of(predicted: &SegmentLabeling, truth: &SegmentLabeling) -> Result<Vec<Purity>, LabelError> {
        check_sizes(predicted, truth)?;
        let mut counts: HashMap<u32, HashMap<Option<u32>, usize>> = HashMap::new();
        for (p, t) in predicted.plane_ids().iter().zip(truth.plane_ids()) {
            if let Some(p) = p {
                *counts.entry(*p).or_default().entry(*t).or_default() += 1;
            }
        }
        let mut out: Vec<Purity> = counts
            .into_iter()
            .map(|(segment, by_truth)| {
                let size: usize = by_truth.values().sum();
                let (dominant, top) = by_truth
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                    .map(|(k, v)| (*k, *v))
                    .unwrap();
                Purity {
                    segment,
                    size,
                    dominant,
                    purity: top as f64 / size as f64,
                }
            })
            .collect();
        out.sort_by_key(|p| p.segment);
        Ok(out)
    }
}
