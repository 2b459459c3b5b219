use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Per-column z-score statistics fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizerState {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizerState {
    pub fn identity(dim: usize) -> Self {
        NormalizerState { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Population mean and standard deviation of every column.
    pub fn fit_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, FeatureError> {
        let first = rows.first().ok_or(FeatureError::EmptyMatrix)?;
        let dim = first.as_ref().len();
        if rows.iter().any(|r| r.as_ref().len() != dim) {
            return Err(FeatureError::DimensionMismatch { expected: dim, got: 0 });
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.as_ref()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        // Columns whose values are all identical get std 0 regardless of
        // rounding in the mean.
        let std = var
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let v0 = rows[0].as_ref()[j];
                if rows.iter().all(|r| r.as_ref()[j] == v0) {
                    0.0
                } else {
                    (s / n).sqrt()
                }
            })
            .collect();
        Ok(NormalizerState { mean, std })
    }

    pub fn apply_row_in_place(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
        }
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if row.len() != self.dim() {
            return Err(FeatureError::DimensionMismatch { expected: self.dim(), got: row.len() });
        }
        let mut out = row.to_vec();
        self.apply_row_in_place(&mut out);
        Ok(out)
    }

    pub fn apply<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<Vec<f64>>, FeatureError> {
        rows.iter().map(|r| self.apply_row(r.as_ref())).collect()
    }
}

/// Fits on `train` (which must be non-empty).
pub fn fit_normalizer<R: AsRef<[f64]>>(train: &[R]) -> Result<NormalizerState, FeatureError> {
    NormalizerState::fit_rows(train)
}

pub fn apply_normalizer<R: AsRef<[f64]>>(
    state: &NormalizerState,
    matrix: &[R],
) -> Result<Vec<Vec<f64>>, FeatureError> {
    state.apply(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_column_maps_to_zero() {
        let rows = vec![vec![5.0, 1.0], vec![5.0, 2.0], vec![5.0, 4.0]];
        let st = fit_normalizer(&rows).unwrap();
        let out = apply_normalizer(&st, &rows).unwrap();
        assert!(out.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn z_score_identity_on_train() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 0.3 - 2.0, ((i * 7) % 11) as f64]).collect();
        let st = fit_normalizer(&rows).unwrap();
        let out = apply_normalizer(&st, &rows).unwrap();
        for j in 0..2 {
            let m: f64 = out.iter().map(|r| r[j]).sum::<f64>() / 50.0;
            let v: f64 = out.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / 50.0;
            assert!(m.abs() < 1e-12);
            assert!((v.sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_mismatch() {
        let empty: Vec<Vec<f64>> = vec![];
        assert!(matches!(fit_normalizer(&empty), Err(FeatureError::EmptyMatrix)));
        let st = NormalizerState::identity(2);
        assert!(st.apply_row(&[1.0]).is_err());
    }

    #[test]
    fn test_data_never_influences_state() {
        let train: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let mut test: Vec<Vec<f64>> = (0..10).map(|i| vec![-(i as f64), 3.0]).collect();
        let st = fit_normalizer(&train).unwrap();
        let before = apply_normalizer(&st, &test).unwrap();
        test[3][0] = 1e6;
        let st2 = fit_normalizer(&train).unwrap();
        assert_eq!(st, st2);
        let after = apply_normalizer(&st2, &test).unwrap();
        assert_eq!(before[0], after[0]);
    }
}
