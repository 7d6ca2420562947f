//! Finite quantization of a field, so that its superlevel sets can be handled one cut at a time.

use crate::error::{Error, Result};
use crate::grid::{BinarySet, ScalarField};

/// Sorted quantization values `q_0 < ... < q_L` and the thresholds halfway between them.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantization {
    values: Vec<f64>,
    thresholds: Vec<f64>,
}

impl Quantization {
    /// Uses the field's distinct values when there are at most `n_levels` of them,
    /// otherwise `n_levels` equispaced values spanning `[min, max]`.
    pub fn of_field(field: &ScalarField, n_levels: usize) -> Result<Self> {
        if n_levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_levels must be >= 2, got {n_levels}"
            )));
        }
        let mut distinct: Vec<f64> = field.values().to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let values = if distinct.len() <= n_levels {
            distinct
        } else {
            Self::uniform_values(field.min(), field.max(), n_levels)
        };
        Ok(Self::from_values(values))
    }

    /// Equispaced values over `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n_levels: usize) -> Result<Self> {
        if n_levels < 2 || !(lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "uniform quantization needs lo < hi and n >= 2 (got [{lo}, {hi}], n={n_levels})"
            )));
        }
        Ok(Self::from_values(Self::uniform_values(lo, hi, n_levels)))
    }

    fn uniform_values(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let step = (hi - lo) / (n - 1) as f64;
        (0..n)
            .map(|k| if k + 1 == n { hi } else { lo + k as f64 * step })
            .collect()
    }

    fn from_values(values: Vec<f64>) -> Self {
        let thresholds = values.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Quantization { values, thresholds }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Index of the quantization value nearest to `v` (ties go up).
    pub fn level_of(&self, v: f64) -> usize {
        self.thresholds.partition_point(|&t| t <= v)
    }

    /// Rounds every value of the field to its quantization value.
    pub fn apply(&self, field: &ScalarField) -> Result<ScalarField> {
        field.map(|v| self.values[self.level_of(v)])
    }

    /// Rebuilds a field from nested superlevel sets, one per threshold:
    /// a cell takes `q_l` for the largest `l` whose set contains it.
    pub fn reconstruct(&self, superlevels: &[BinarySet]) -> Result<ScalarField> {
        if superlevels.len() != self.thresholds.len() {
            return Err(Error::InvalidParameter(format!(
                "{} superlevel sets for {} thresholds",
                superlevels.len(),
                self.thresholds.len()
            )));
        }
        let grid = match superlevels.first() {
            Some(s) => *s.grid(),
            None => return Err(Error::InvalidParameter("no levels to reconstruct".into())),
        };
        let values = (0..grid.len())
            .map(|i| {
                let top = superlevels
                    .iter()
                    .rposition(|s| s.mask()[i])
                    .map_or(0, |l| l + 1);
                self.values[top]
            })
            .collect();
        ScalarField::new(grid, values)
    }
}

/// Interior thresholds of the quantized field; empty for a constant field.
pub fn quantize_levels(field: &ScalarField, n_levels: usize) -> Result<Vec<f64>> {
    Ok(Quantization::of_field(field, n_levels)?.thresholds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;

    fn field(vals: &[f64]) -> ScalarField {
        ScalarField::new(Grid2D::new(vals.len(), 1).unwrap(), vals.to_vec()).unwrap()
    }

    #[test]
    fn midpoints_of_distinct_values() {
        assert_eq!(
            quantize_levels(&field(&[0.0, 1.0, 1.0, 0.0]), 2).unwrap(),
            vec![0.5]
        );
        assert_eq!(
            quantize_levels(&field(&[-1.0, 0.0, 2.0, 0.0]), 3).unwrap(),
            vec![-0.5, 1.0]
        );
        assert!(quantize_levels(&field(&[3.0, 3.0]), 4).unwrap().is_empty());
        assert!(quantize_levels(&field(&[3.0, 3.0]), 1).is_err());
    }

    #[test]
    fn threshold_stack_reconstructs_the_quantized_field() {
        let f = field(&[0.13, -2.0, 5.5, 1.7, 0.0, 3.3, -0.9, 2.2]);
        let q = Quantization::of_field(&f, 5).unwrap();
        let quantized = q.apply(&f).unwrap();
        let sets: Vec<BinarySet> = q
            .thresholds()
            .iter()
            .map(|&t| quantized.strict_superlevel(t))
            .collect();
        assert_eq!(q.reconstruct(&sets).unwrap(), quantized);
        // Layer-cake sum with the gaps.
        for (i, &v) in quantized.values().iter().enumerate() {
            let mut acc = q.values()[0];
            for (l, s) in sets.iter().enumerate() {
                if s.mask()[i] {
                    acc += q.values()[l + 1] - q.values()[l];
                }
            }
            assert!((acc - v).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_values_hit_both_ends() {
        let q = Quantization::uniform(-2.0, 2.0, 64).unwrap();
        assert_eq!(q.values()[0], -2.0);
        assert_eq!(q.values()[63], 2.0);
        assert_eq!(q.thresholds().len(), 63);
        assert!(q.thresholds().windows(2).all(|w| w[0] < w[1]));
        assert!(q.values().iter().all(|&v| v != 0.0));
    }
}
