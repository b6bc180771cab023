use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{self, jacobi_eigen};
use super::{resolve_all, OpError};
use crate::table::{ColumnSpec, ColumnType, Row, Table, Value};

/// Pivot threshold (relative to the largest entry of XᵀX) below which the
/// design matrix is reported as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

fn numeric_columns(t: &Table, columns: &[String]) -> Result<Vec<usize>, OpError> {
    if columns.is_empty() {
        return Err(OpError::InvalidArgument("at least one column is required".into()));
    }
    let idx = resolve_all(t, columns)?;
    let mut seen = std::collections::HashSet::new();
    for (&i, name) in idx.iter().zip(columns) {
        if !seen.insert(i) {
            return Err(OpError::InvalidArgument(format!("column {name:?} listed twice")));
        }
        if t.column_values(i).any(|v| !v.is_null() && v.as_f64().is_none()) {
            return Err(OpError::NonNumericColumn(name.clone()));
        }
    }
    Ok(idx)
}

/// Row indices where every listed column is non-null.
fn complete_rows(t: &Table, idx: &[usize]) -> Vec<usize> {
    (0..t.num_rows())
        .filter(|&r| idx.iter().all(|&c| !t.rows()[r][c].is_null()))
        .collect()
}

fn cell(t: &Table, r: usize, c: usize) -> f64 {
    t.rows()[r][c].as_f64().expect("checked numeric")
}

#[derive(Debug, Clone)]
pub struct PcaResult {
    /// Surviving rows: non-analyzed columns, then `PC1..PCk`.
    pub projected: Table,
    /// One row per analyzed column: `column`, then its loading on each
    /// component.
    pub components: Table,
    /// Top-k eigenvalues of the sample covariance, non-increasing.
    pub explained_variance: Vec<f64>,
    /// `explained_variance` divided by the total variance.
    pub explained_variance_ratio: Vec<f64>,
    /// Unit component vectors, `components[j][i]` = loading of column i.
    pub vectors: Vec<Vec<f64>>,
    /// Sample covariance matrix of the analyzed columns.
    pub covariance: Vec<Vec<f64>>,
}

impl PcaResult {
    pub fn variance_table(&self) -> Table {
        let rows = self
            .explained_variance
            .iter()
            .zip(&self.explained_variance_ratio)
            .enumerate()
            .map(|(j, (v, r))| vec![Value::text(format!("PC{}", j + 1)), Value::Number(*v), Value::Number(*r)])
            .collect();
        Table::from_rows("", &["component", "explained_variance", "ratio"], rows)
            .expect("fixed schema")
    }
}

/// Principal components of `columns` over rows with no nulls in them.
pub fn pca(t: &Table, columns: &[String], k: usize) -> Result<PcaResult, OpError> {
    let idx = numeric_columns(t, columns)?;
    let p = idx.len();
    if k == 0 {
        return Err(OpError::InvalidArgument("k must be at least 1".into()));
    }
    if k > p {
        return Err(OpError::KTooLarge { k, columns: p });
    }
    let rows = complete_rows(t, &idx);
    let n = rows.len();
    if n < 2 {
        return Err(OpError::InsufficientRows { needed: 2, got: n });
    }

    let mut means = vec![0.0; p];
    for &r in &rows {
        for (j, &c) in idx.iter().enumerate() {
            means[j] += cell(t, r, c);
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| idx.iter().zip(&means).map(|(&c, m)| cell(t, r, c) - m).collect())
        .collect();
    let mut cov = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in a..p {
            let s: f64 = centered.iter().map(|x| x[a] * x[b]).sum::<f64>() / (n - 1) as f64;
            cov[a][b] = s;
            cov[b][a] = s;
        }
    }

    let eig = jacobi_eigen(&cov);
    let mut vectors: Vec<Vec<f64>> = eig.vectors[..k].to_vec();
    for v in &mut vectors {
        let lead = v
            .iter()
            .copied()
            .reduce(|a, b| if b.abs() > a.abs() { b } else { a })
            .unwrap_or(0.0);
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let total: f64 = eig.values.iter().sum();
    let explained_variance: Vec<f64> = eig.values[..k].to_vec();
    let explained_variance_ratio = explained_variance
        .iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect();

    let pass: Vec<usize> = (0..t.num_columns()).filter(|c| !idx.contains(c)).collect();
    let pc_names: Vec<String> = (1..=k).map(|j| format!("PC{j}")).collect();
    let mut schema: Vec<ColumnSpec> = pass.iter().map(|&c| t.schema()[c].clone()).collect();
    schema.extend(pc_names.iter().map(|n| ColumnSpec::new(n, ColumnType::Number)));
    let projected_rows: Vec<Row> = rows
        .iter()
        .zip(&centered)
        .map(|(&r, x)| {
            let mut row: Row = pass.iter().map(|&c| t.rows()[r][c].clone()).collect();
            row.extend(vectors.iter().map(|v| Value::Number(dot(v, x))));
            row
        })
        .collect();
    let projected = Table::derived(schema, projected_rows)?;

    let mut comp_names = vec!["column".to_string()];
    comp_names.extend(pc_names);
    let comp_rows = columns
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut row = vec![Value::text(name.clone())];
            row.extend(vectors.iter().map(|v| Value::Number(v[i])));
            row
        })
        .collect();
    let components = Table::from_rows("", &comp_names, comp_rows)?;

    Ok(PcaResult {
        projected,
        components,
        explained_variance,
        explained_variance_ratio,
        vectors,
        covariance: cov,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyMethod {
    #[default]
    #[serde(alias = "z_score", alias = "z-score")]
    Zscore,
}

/// Appends a boolean `is_anomaly` column: true when some analyzed cell lies
/// more than `threshold` sample standard deviations from its column mean.
pub fn detect_anomalies(
    t: &Table,
    columns: &[String],
    method: AnomalyMethod,
    threshold: f64,
) -> Result<Table, OpError> {
    let AnomalyMethod::Zscore = method;
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(OpError::InvalidArgument(format!("threshold must be > 0, got {threshold}")));
    }
    let idx = numeric_columns(t, columns)?;
    let mut flags = vec![false; t.num_rows()];
    for &c in &idx {
        let xs: Vec<f64> = t.column_values(c).filter_map(Value::as_f64).collect();
        if xs.len() < 2 {
            continue;
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let sd = var.sqrt();
        if sd == 0.0 {
            continue;
        }
        for (r, flag) in flags.iter_mut().enumerate() {
            if let Some(x) = t.rows()[r][c].as_f64() {
                if (x - mean).abs() / sd > threshold {
                    *flag = true;
                }
            }
        }
    }
    let mut schema = t.schema().to_vec();
    schema.push(ColumnSpec::new("is_anomaly", ColumnType::Boolean));
    let rows = t
        .rows()
        .iter()
        .zip(flags)
        .map(|(r, f)| {
            let mut row = r.clone();
            row.push(Value::Bool(f));
            row
        })
        .collect();
    Ok(Table::derived(schema, rows)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictMetrics {
    /// Coefficient of determination on the holdout; `None` with fewer than
    /// two holdout rows or a constant holdout target.
    pub r2: Option<f64>,
    /// Mean of `|ŷ − y| / |y| · 100` over holdout rows with `y ≠ 0`.
    pub mean_pct_error: Option<f64>,
    pub train_rows: usize,
    pub holdout_rows: usize,
}

#[derive(Debug, Clone)]
pub struct PredictResult {
    /// Holdout rows with an appended `predicted` column.
    pub predictions: Table,
    pub metrics: PredictMetrics,
    /// One weight per feature, in feature order.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl PredictResult {
    pub fn metrics_table(&self) -> Table {
        let m = &self.metrics;
        Table::from_rows(
            "",
            &["r2", "mean_pct_error", "train_rows", "holdout_rows"],
            vec![vec![
                m.r2.into(),
                m.mean_pct_error.into(),
                Value::Number(m.train_rows as f64),
                Value::Number(m.holdout_rows as f64),
            ]],
        )
        .expect("fixed schema")
    }

    pub fn coefficient_table(&self, features: &[String]) -> Table {
        let mut rows: Vec<Row> = features
            .iter()
            .zip(&self.coefficients)
            .map(|(f, b)| vec![Value::text(f.clone()), Value::Number(*b)])
            .collect();
        rows.push(vec![Value::text("(intercept)"), Value::Number(self.intercept)]);
        Table::from_rows("", &["term", "coefficient"], rows).expect("fixed schema")
    }
}

/// Ordinary least squares with intercept via the normal equations.
/// Returns the feature weights followed by the intercept.
pub fn fit_ols(x: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>, OpError> {
    let p = x.first().map_or(0, Vec::len) + 1;
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &yi) in x.iter().zip(y) {
        let design: Vec<f64> = row.iter().copied().chain(std::iter::once(1.0)).collect();
        for a in 0..p {
            xty[a] += design[a] * yi;
            for b in 0..p {
                xtx[a][b] += design[a] * design[b];
            }
        }
    }
    linalg::solve(&xtx, &xty, RANK_TOL).map_err(|s| OpError::RankDeficient {
        column: s.column,
        pivot: s.pivot,
    })
}

/// Fits OLS on a seeded random training split and scores the holdout.
pub fn predict_value(
    t: &Table,
    features: &[String],
    target: &str,
    holdout_fraction: f64,
    seed: u64,
) -> Result<PredictResult, OpError> {
    if !(0.0..1.0).contains(&holdout_fraction) {
        return Err(OpError::InvalidArgument(format!(
            "holdout_fraction must be in [0, 1), got {holdout_fraction}"
        )));
    }
    if features.iter().any(|f| f == target) {
        return Err(OpError::InvalidArgument(format!("target {target:?} is also a feature")));
    }
    let mut all: Vec<String> = features.to_vec();
    all.push(target.to_string());
    let idx = numeric_columns(t, &all)?;
    let (fidx, tidx) = idx.split_at(features.len());
    let tidx = tidx[0];

    let mut rows = complete_rows(t, &idx);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rows.shuffle(&mut rng);
    let h = (rows.len() as f64 * holdout_fraction).round() as usize;
    let (holdout, train) = rows.split_at(h);
    let mut holdout = holdout.to_vec();
    let mut train = train.to_vec();
    holdout.sort_unstable();
    train.sort_unstable();

    let needed = features.len() + 1;
    if train.len() < needed {
        return Err(OpError::InsufficientRows {
            needed,
            got: train.len(),
        });
    }

    let features_of = |r: usize| -> Vec<f64> { fidx.iter().map(|&c| cell(t, r, c)).collect() };
    let x: Vec<Vec<f64>> = train.iter().map(|&r| features_of(r)).collect();
    let y: Vec<f64> = train.iter().map(|&r| cell(t, r, tidx)).collect();
    let beta = fit_ols(&x, &y)?;
    let (coefficients, intercept) = (beta[..features.len()].to_vec(), beta[features.len()]);
    let predict = |r: usize| dot(&coefficients, &features_of(r)) + intercept;

    let pairs: Vec<(f64, f64)> = holdout.iter().map(|&r| (predict(r), cell(t, r, tidx))).collect();
    let mean_pct_error = {
        let errs: Vec<f64> = pairs
            .iter()
            .filter(|(_, y)| *y != 0.0)
            .map(|(p, y)| (p - y).abs() / y.abs() * 100.0)
            .collect();
        (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
    };
    let r2 = if pairs.len() >= 2 {
        let ybar = pairs.iter().map(|(_, y)| y).sum::<f64>() / pairs.len() as f64;
        let ss_tot: f64 = pairs.iter().map(|(_, y)| (y - ybar).powi(2)).sum();
        let ss_res: f64 = pairs.iter().map(|(p, y)| (y - p).powi(2)).sum();
        (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot)
    } else {
        None
    };

    let mut schema = t.schema().to_vec();
    schema.push(ColumnSpec::new("predicted", ColumnType::Number));
    let pred_rows = holdout
        .iter()
        .zip(&pairs)
        .map(|(&r, (p, _))| {
            let mut row = t.rows()[r].clone();
            row.push(Value::Number(*p));
            row
        })
        .collect();

    Ok(PredictResult {
        predictions: Table::derived(schema, pred_rows)?,
        metrics: PredictMetrics {
            r2,
            mean_pct_error,
            train_rows: train.len(),
            holdout_rows: holdout.len(),
        },
        coefficients,
        intercept,
    })
}
