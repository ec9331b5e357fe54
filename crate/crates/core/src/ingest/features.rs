use std::collections::HashSet;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Named feature columns over molecule rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    column_names: Vec<String>,
    values: Array2<f64>,
    norm_stats: Option<NormStats>,
}

impl FeatureMatrix {
    pub fn new(column_names: Vec<String>, values: Array2<f64>) -> Result<Self> {
        if column_names.len() != values.ncols() {
            return Err(Error::Dimension {
                context: "feature matrix columns",
                expected: column_names.len(),
                got: values.ncols(),
            });
        }
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate feature column `{name}`")));
            }
        }
        Ok(Self {
            column_names,
            values,
            norm_stats: None,
        })
    }

    pub fn empty(n_rows: usize) -> Self {
        Self {
            column_names: Vec::new(),
            values: Array2::zeros((n_rows, 0)),
            norm_stats: None,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn norm_stats(&self) -> Option<&NormStats> {
        self.norm_stats.as_ref()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Keep the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            column_names: cols.iter().map(|&c| self.column_names[c].clone()).collect(),
            values: self.values.select(Axis(1), cols),
            norm_stats: self.norm_stats.as_ref().map(|s| NormStats {
                columns: cols.iter().map(|&c| s.columns[c].clone()).collect(),
            }),
        }
    }

    /// Keep the named columns, in the given order.
    pub fn select_named(&self, names: &[String]) -> Result<Self> {
        let cols = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::invalid(format!("unknown feature column `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&cols))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            column_names: self.column_names.clone(),
            values: self.values.select(Axis(0), rows),
            norm_stats: self.norm_stats.clone(),
        }
    }

    /// z-score statistics over `rows` (population standard deviation).
    pub fn fit_normalizer(&self, rows: &[usize]) -> Result<NormStats> {
        NormStats::fit(self.values.view(), rows, &self.column_names)
    }

    /// Normalise every row with previously fitted statistics.
    pub fn apply_normalizer(&self, stats: &NormStats) -> Result<Self> {
        Ok(Self {
            column_names: self.column_names.clone(),
            values: stats.transform(self.values.view())?,
            norm_stats: Some(stats.clone()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

/// Per-column z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub columns: Vec<ColumnStats>,
}

impl NormStats {
    pub fn fit(values: ArrayView2<'_, f64>, rows: &[usize], names: &[String]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid("normaliser needs at least two fit rows"));
        }
        let n = rows.len() as f64;
        let columns = (0..values.ncols())
            .map(|j| {
                let col = values.column(j);
                let mean = rows.iter().map(|&r| col[r]).sum::<f64>() / n;
                let var = rows.iter().map(|&r| (col[r] - mean).powi(2)).sum::<f64>() / n;
                let std = var.sqrt();
                let name = names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
                if !(std > 0.0 && std.is_finite()) {
                    return Err(Error::ZeroVariance { column: name });
                }
                Ok(ColumnStats { name, mean, std })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { columns })
    }

    pub fn transform(&self, values: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(values.ncols())?;
        let mut out = values.to_owned();
        for (mut col, s) in out.columns_mut().into_iter().zip(&self.columns) {
            col.mapv_inplace(|x| (x - s.mean) / s.std);
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, values: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(values.ncols())?;
        let mut out = values.to_owned();
        for (mut col, s) in out.columns_mut().into_iter().zip(&self.columns) {
            col.mapv_inplace(|z| z * s.std + s.mean);
        }
        Ok(out)
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row.len())?;
        Ok(row
            .iter()
            .zip(&self.columns)
            .map(|(x, s)| (x - s.mean) / s.std)
            .collect())
    }

    fn check(&self, ncols: usize) -> Result<()> {
        if ncols != self.columns.len() {
            return Err(Error::Dimension {
                context: "normaliser columns",
                expected: self.columns.len(),
                got: ncols,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub corr_threshold: f64,
    pub var_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            corr_threshold: 0.9,
            var_threshold: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RemovalReason {
    MissingValues { count: usize },
    LowVariance { variance: f64 },
    Correlated { with: String, r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub column: String,
    #[serde(flatten)]
    pub reason: RemovalReason,
}

/// Drop columns with missing values, near-zero variance, or a high absolute
/// Pearson correlation with an earlier kept column.
pub fn filter_features(m: &FeatureMatrix, cfg: &FilterConfig) -> Result<(FeatureMatrix, Vec<Removal>)> {
    let n = m.n_rows();
    if n < 2 {
        return Err(Error::invalid(format!(
            "feature filtering needs at least two rows, got {n}"
        )));
    }
    let values = m.values();
    let names = m.column_names();
    let mut log = Vec::new();

    // unit-norm centred columns, None when dropped before correlation
    let units: Vec<Option<Vec<f64>>> = par::map_range(m.n_cols(), |j| {
        let col = values.column(j);
        if col.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let mean = col.sum() / n as f64;
        let centred: Vec<f64> = col.iter().map(|x| x - mean).collect();
        let ss: f64 = centred.iter().map(|d| d * d).sum();
        if ss / (n as f64) < cfg.var_threshold || ss == 0.0 {
            return None;
        }
        let norm = ss.sqrt();
        Some(centred.into_iter().map(|d| d / norm).collect())
    });

    let mut candidates = Vec::new();
    for (j, u) in units.iter().enumerate() {
        let col = values.column(j);
        let missing = col.iter().filter(|x| !x.is_finite()).count();
        if missing > 0 {
            log.push(Removal {
                column: names[j].clone(),
                reason: RemovalReason::MissingValues { count: missing },
            });
        } else if u.is_none() {
            let mean = col.sum() / n as f64;
            let variance = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            log.push(Removal {
                column: names[j].clone(),
                reason: RemovalReason::LowVariance { variance },
            });
        } else {
            candidates.push(j);
        }
    }

    // correlations of each candidate against all earlier candidates
    let corr: Vec<Vec<f64>> = par::map_range(candidates.len(), |b| {
        let ub = units[candidates[b]].as_ref().unwrap();
        (0..b)
            .map(|a| {
                let ua = units[candidates[a]].as_ref().unwrap();
                ua.iter().zip(ub).map(|(x, y)| x * y).sum()
            })
            .collect()
    });

    let mut kept: Vec<usize> = Vec::new(); // positions in `candidates`
    for b in 0..candidates.len() {
        let hit = kept
            .iter()
            .find(|&&a| corr[b][a].abs() >= cfg.corr_threshold);
        match hit {
            Some(&a) => log.push(Removal {
                column: names[candidates[b]].clone(),
                reason: RemovalReason::Correlated {
                    with: names[candidates[a]].clone(),
                    r: corr[b][a],
                },
            }),
            None => kept.push(b),
        }
    }
    let cols: Vec<usize> = kept.iter().map(|&b| candidates[b]).collect();
    Ok((m.select_columns(&cols), log))
}

/// Population Pearson correlation, for tests and reports.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn constant_column_is_dropped() {
        let m = FeatureMatrix::new(names(2), array![[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]]).unwrap();
        let (out, log) = filter_features(&m, &FilterConfig::default()).unwrap();
        assert_eq!(out.column_names(), &["f1".to_string()]);
        assert!(matches!(log[0].reason, RemovalReason::LowVariance { .. }));
    }

    #[test]
    fn affine_copy_is_dropped_keeping_the_first() {
        let m = FeatureMatrix::new(
            names(3),
            array![[1.0, 3.0, 0.5], [2.0, 5.0, -1.0], [4.0, 9.0, 0.25], [3.0, 7.0, 2.0]],
        )
        .unwrap();
        let (out, log) = filter_features(&m, &FilterConfig::default()).unwrap();
        assert_eq!(out.column_names(), &["f0".to_string(), "f2".to_string()]);
        match &log[0].reason {
            RemovalReason::Correlated { with, r } => {
                assert_eq!(with, "f0");
                assert!((r - 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_value_column_is_dropped() {
        let m = FeatureMatrix::new(names(2), array![[1.0, f64::NAN], [2.0, 1.0], [3.0, 0.0]]).unwrap();
        let (out, log) = filter_features(&m, &FilterConfig::default()).unwrap();
        assert_eq!(out.n_cols(), 1);
        assert_eq!(log[0].reason, RemovalReason::MissingValues { count: 1 });
    }

    #[test]
    fn single_row_is_an_error() {
        let m = FeatureMatrix::new(names(1), array![[1.0]]).unwrap();
        assert!(filter_features(&m, &FilterConfig::default()).is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let r = FeatureMatrix::new(vec!["a".into(), "a".into()], Array2::zeros((2, 2)));
        assert!(r.is_err());
    }

    #[test]
    fn normalizer_hand_values() {
        let m = FeatureMatrix::new(names(1), array![[1.0], [2.0], [3.0]]).unwrap();
        let stats = m.fit_normalizer(&[0, 1, 2]).unwrap();
        let z = m.apply_normalizer(&stats).unwrap();
        let expect = 1.5f64.sqrt(); // 1 / sqrt(2/3)
        assert!((z.values()[[0, 0]] + expect).abs() < 1e-12);
        assert!(z.values()[[1, 0]].abs() < 1e-12);
        assert!((z.values()[[2, 0]] - expect).abs() < 1e-12);
        assert!((expect - 1.224744871391589).abs() < 1e-12);
    }

    #[test]
    fn normalizer_uses_only_fit_rows() {
        let m = FeatureMatrix::new(names(1), array![[0.0], [2.0], [100.0]]).unwrap();
        let stats = m.fit_normalizer(&[0, 1]).unwrap();
        assert_eq!((stats.columns[0].mean, stats.columns[0].std), (1.0, 1.0));
        let z = m.apply_normalizer(&stats).unwrap();
        assert_eq!(z.values()[[2, 0]], 99.0);
    }

    #[test]
    fn normalizer_is_idempotent_on_refit() {
        let m = FeatureMatrix::new(names(2), array![[1.0, 10.0], [2.0, -3.0], [7.0, 4.0], [0.5, 2.0]])
            .unwrap();
        let all = [0, 1, 2, 3];
        let z = m.apply_normalizer(&m.fit_normalizer(&all).unwrap()).unwrap();
        let z2 = z.apply_normalizer(&z.fit_normalizer(&all).unwrap()).unwrap();
        for (a, b) in z.values().iter().zip(z2.values().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_std_names_the_column() {
        let m = FeatureMatrix::new(vec!["flat".into()], array![[1.0], [1.0]]).unwrap();
        match m.fit_normalizer(&[0, 1]) {
            Err(Error::ZeroVariance { column }) => assert_eq!(column, "flat"),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn filtered_output_has_no_correlated_pair(
            seed in 0u64..1000,
            n_cols in 2usize..12,
        ) {
            use rand::Rng;
            let mut rng = crate::rng::seeded(seed);
            let n_rows = 30;
            let mut v = Array2::<f64>::zeros((n_rows, n_cols));
            for j in 0..n_cols {
                let src = if j > 0 && rng.gen_bool(0.4) { Some(rng.gen_range(0..j)) } else { None };
                for i in 0..n_rows {
                    v[[i, j]] = match src {
                        Some(s) => v[[i, s]] * rng.gen_range(0.5..2.0) + rng.gen_range(-0.3..0.3),
                        None => rng.gen_range(-1.0..1.0),
                    };
                }
            }
            let m = FeatureMatrix::new(names(n_cols), v).unwrap();
            let cfg = FilterConfig::default();
            let (out, log) = filter_features(&m, &cfg).unwrap();
            prop_assert_eq!(out.n_cols() + log.len(), n_cols);
            let vals = out.values();
            for a in 0..out.n_cols() {
                for b in a + 1..out.n_cols() {
                    let ca: Vec<f64> = vals.column(a).to_vec();
                    let cb: Vec<f64> = vals.column(b).to_vec();
                    prop_assert!(pearson(&ca, &cb).abs() < cfg.corr_threshold);
                }
            }
        }

        #[test]
        fn normalizer_inverse_round_trips(
            data in proptest::collection::vec(-1e3f64..1e3, 12..60),
        ) {
            let n_rows = data.len() / 3;
            let v = Array2::from_shape_vec((n_rows, 3), data[..n_rows * 3].to_vec()).unwrap();
            let m = FeatureMatrix::new(names(3), v).unwrap();
            let rows: Vec<usize> = (0..n_rows).collect();
            if let Ok(stats) = m.fit_normalizer(&rows) {
                let z = stats.transform(m.values()).unwrap();
                let back = stats.inverse_transform(z.view()).unwrap();
                for (a, b) in back.iter().zip(m.values().iter()) {
                    prop_assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }
}
