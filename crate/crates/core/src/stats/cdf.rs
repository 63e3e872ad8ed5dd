use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Empirical cdf displayed as `min(F, 1 − F)`, with plotting positions
/// `(i − 0.5)/N` so that no fold is exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldedCdf {
    pub points: Vec<f64>,
    pub positions: Vec<f64>,
    pub folds: Vec<f64>,
}

pub fn folded_cdf(sample: &[f64]) -> Result<FoldedCdf> {
    if sample.len() < 2 {
        return Err(Error::InsufficientData {
            what: "folded cdf sample".into(),
            needed: 2,
            got: sample.len(),
        });
    }
    if let Some(i) = sample.iter().position(|x| !x.is_finite()) {
        return Err(Error::config("sample", format!("non-finite value at index {i}")));
    }
    let mut points = sample.to_vec();
    points.sort_by(f64::total_cmp);
    let n = points.len() as f64;
    let positions: Vec<f64> = (1..=points.len()).map(|i| (i as f64 - 0.5) / n).collect();
    let folds = positions.iter().map(|&f| fold(f)).collect();
    Ok(FoldedCdf {
        points,
        positions,
        folds,
    })
}

#[inline]
fn fold(f: f64) -> f64 {
    f.min(1.0 - f)
}

impl FoldedCdf {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Empirical `F(x)` by counting, on the same plotting-position scale.
    pub fn cdf_at(&self, x: f64) -> f64 {
        let n = self.points.len() as f64;
        let k = self.points.partition_point(|p| *p <= x) as f64;
        ((k - 0.5) / n).clamp(0.5 / n, 1.0 - 0.5 / n)
    }

    pub fn fold_at(&self, x: f64) -> f64 {
        fold(self.cdf_at(x))
    }

    /// At most `max_points` points, evenly spaced in rank, always keeping
    /// both extremes. Suitable for plotting very large samples.
    pub fn thinned(&self, max_points: usize) -> FoldedCdf {
        let n = self.len();
        if max_points >= n || max_points < 2 {
            return self.clone();
        }
        let idx: Vec<usize> = (0..max_points)
            .map(|k| ((k as f64) * (n - 1) as f64 / (max_points - 1) as f64).round() as usize)
            .collect();
        FoldedCdf {
            points: idx.iter().map(|&i| self.points[i]).collect(),
            positions: idx.iter().map(|&i| self.positions[i]).collect(),
            folds: idx.iter().map(|&i| self.folds[i]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_sample() {
        let f = folded_cdf(&[3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(f.points, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(f.folds, vec![0.125, 0.375, 0.375, 0.125]);
    }

    #[test]
    fn odd_median_folds_to_half() {
        let f = folded_cdf(&[5.0, -1.0, 2.0]).unwrap();
        assert_eq!(f.folds[1], 0.5);
        assert!(folded_cdf(&[]).is_err());
        assert!(folded_cdf(&[1.0]).is_err());
        assert!(folded_cdf(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn thinning_keeps_extremes() {
        let xs: Vec<f64> = (0..1000).map(|k| k as f64).collect();
        let t = folded_cdf(&xs).unwrap().thinned(11);
        assert_eq!(t.len(), 11);
        assert_eq!(t.points[0], 0.0);
        assert_eq!(t.points[10], 999.0);
    }
}
