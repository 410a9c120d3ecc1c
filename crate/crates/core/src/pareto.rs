//! Pareto dominance and two-dimensional hypervolume (minimization).

use crate::error::{Error, Result};

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strictly |= x < y;
    }
    strictly
}

/// `a` is no worse than `b` in every objective.
pub fn weakly_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Indices of the non-dominated points, in input order. Duplicated points
/// are all kept.
pub fn pareto_front<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| dominates(q.as_ref(), points[i].as_ref())))
        .collect()
}

/// Area dominated by `points` and bounded by `reference`.
///
/// Points not strictly better than the reference in both objectives
/// contribute nothing.
pub fn hypervolume_2d<P: AsRef<[f64]>>(points: &[P], reference: [f64; 2]) -> Result<f64> {
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    for p in points {
        let p = p.as_ref();
        if p.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: p.len(),
            });
        }
        if p[0] < reference[0] && p[1] < reference[1] {
            pts.push([p[0], p[1]]);
        }
    }
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    // sweep left to right, adding the horizontal slab each new low point opens
    for p in &pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    Ok(area)
}

/// Hypervolume gained by adding `candidate` to `points`.
pub fn hv_contribution<P: AsRef<[f64]>>(points: &[P], candidate: [f64; 2], reference: [f64; 2]) -> Result<f64> {
    let base = hypervolume_2d(points, reference)?;
    let mut with: Vec<Vec<f64>> = points.iter().map(|p| p.as_ref().to_vec()).collect();
    with.push(candidate.to_vec());
    Ok(hypervolume_2d(&with, reference)? - base)
}
