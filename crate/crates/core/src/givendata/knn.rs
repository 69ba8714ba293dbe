//! k-nearest-neighbour regression of `Y` on `X`.
//!
//! Distances are Euclidean on standardised coordinates (each column centred
//! and divided by its sample standard deviation; constant columns are only
//! centred). Distance ties are broken toward the smaller row index. In one
//! dimension queries walk outward from a binary-search position in a sorted
//! copy of the training inputs; otherwise they scan all training rows.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::GivenDataSample;
use crate::error::{Result, SobolError};

/// A regression function supplied by the caller, typically the exact
/// conditional mean of a test model.
pub type OracleFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    Knn,
    ExactOracle,
}

/// Per-column affine map to standardised coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn from_sample(s: &GivenDataSample) -> Self {
        let n = s.n() as f64;
        let d = s.d();
        let mut center = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for j in 0..d {
            let column: Vec<f64> = s.rows().map(|r| r[j]).collect();
            let mean = crate::numeric::mean(&column);
            center[j] = mean;
            if s.n() >= 2 {
                let var = crate::numeric::pairwise_sum_by(&column, &|v| (v - mean) * (v - mean))
                    / (n - 1.0);
                if var > 0.0 {
                    scale[j] = var.sqrt();
                }
            }
        }
        Self { center, scale }
    }

    pub fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.extend(
            x.iter()
                .zip(self.center.iter().zip(&self.scale))
                .map(|(v, (c, s))| (v - c) / s),
        );
    }

    fn transform(&self, s: &GivenDataSample, rows: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows.len() * s.d());
        for &i in rows {
            self.apply(s.row(i), &mut out);
        }
        out
    }
}

/// Neighbour index over standardised training points.
#[derive(Debug, Clone)]
struct KnnIndex {
    d: usize,
    k: usize,
    /// Standardised training points, row-major.
    points: Vec<f64>,
    y: Vec<f64>,
    /// Tie-breaking key of each training point (its row in the original
    /// sample).
    keys: Vec<usize>,
    /// d = 1 only: training positions sorted by coordinate, then key.
    sorted: Vec<usize>,
}

impl KnnIndex {
    fn build(d: usize, k: usize, points: Vec<f64>, y: Vec<f64>, keys: Vec<usize>) -> Self {
        let sorted = if d == 1 {
            let mut order: Vec<usize> = (0..y.len()).collect();
            order.sort_by(|&a, &b| points[a].total_cmp(&points[b]).then(keys[a].cmp(&keys[b])));
            order
        } else {
            Vec::new()
        };
        Self {
            d,
            k,
            points,
            y,
            keys,
            sorted,
        }
    }

    fn len(&self) -> usize {
        self.y.len()
    }

    /// Mean of the selected responses, computed as an offset from the first
    /// so that a constant response is reproduced exactly.
    fn mean_of(&self, chosen: &[usize]) -> f64 {
        let base = self.y[chosen[0]];
        let offset: f64 = chosen.iter().map(|&i| self.y[i] - base).sum();
        base + offset / chosen.len() as f64
    }

    fn predict_standardized(&self, q: &[f64]) -> f64 {
        let chosen = if self.d == 1 {
            self.neighbours_1d(q[0])
        } else {
            self.neighbours_scan(q)
        };
        self.mean_of(&chosen)
    }

    fn neighbours_scan(&self, q: &[f64]) -> Vec<usize> {
        let mut cand: Vec<(f64, usize, usize)> = (0..self.len())
            .map(|i| {
                let p = &self.points[i * self.d..(i + 1) * self.d];
                let dist: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                (dist, self.keys[i], i)
            })
            .collect();
        let cmp = |a: &(f64, usize, usize), b: &(f64, usize, usize)| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        if self.k < cand.len() {
            cand.select_nth_unstable_by(self.k - 1, cmp);
            cand.truncate(self.k);
        }
        cand.sort_by(cmp);
        cand.into_iter().map(|c| c.2).collect()
    }

    fn neighbours_1d(&self, q: f64) -> Vec<usize> {
        let xs = |pos: usize| self.points[self.sorted[pos]];
        let n = self.sorted.len();
        let k = self.k;
        let split = self.sorted.partition_point(|&i| self.points[i] < q);

        // Distance of the k-th neighbour, walking outward from `split`.
        let (mut l, mut r) = (split, split);
        let mut kth = 0.0;
        for _ in 0..k {
            let dl = if l > 0 { q - xs(l - 1) } else { f64::INFINITY };
            let dr = if r < n { xs(r) - q } else { f64::INFINITY };
            if dl <= dr {
                kth = dl;
                l -= 1;
            } else {
                kth = dr;
                r += 1;
            }
        }

        // Everything strictly closer than `kth` is in; the remaining slots go
        // to the points at exactly `kth`, lowest key first.
        let mut lo = split;
        while lo > 0 && q - xs(lo - 1) < kth {
            lo -= 1;
        }
        let mut hi = split;
        while hi < n && xs(hi) - q < kth {
            hi += 1;
        }
        let mut chosen: Vec<usize> = self.sorted[lo..hi].to_vec();
        let mut ties = Vec::new();
        let mut a = lo;
        while a > 0 && q - xs(a - 1) == kth {
            a -= 1;
            ties.push(self.sorted[a]);
        }
        let mut b = hi;
        while b < n && xs(b) - q == kth {
            ties.push(self.sorted[b]);
            b += 1;
        }
        ties.sort_by_key(|&i| self.keys[i]);
        let needed = k - chosen.len();
        chosen.extend_from_slice(&ties[..needed]);
        chosen
    }
}

#[derive(Clone)]
enum FitKind {
    Knn {
        standardizer: Standardizer,
        index: KnnIndex,
    },
    ExactOracle(OracleFn),
}

/// A fitted regression function `x -> E[Y | X = x]`.
#[derive(Clone)]
pub struct RegressionFit {
    kind: FitKind,
}

impl fmt::Debug for RegressionFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FitKind::Knn { index, .. } => f
                .debug_struct("RegressionFit")
                .field("method", &FitMethod::Knn)
                .field("k", &index.k)
                .field("n_train", &index.len())
                .finish(),
            FitKind::ExactOracle(_) => f
                .debug_struct("RegressionFit")
                .field("method", &FitMethod::ExactOracle)
                .finish(),
        }
    }
}

impl RegressionFit {
    pub fn exact_oracle(f: OracleFn) -> Self {
        Self {
            kind: FitKind::ExactOracle(f),
        }
    }

    pub fn method(&self) -> FitMethod {
        match self.kind {
            FitKind::Knn { .. } => FitMethod::Knn,
            FitKind::ExactOracle(_) => FitMethod::ExactOracle,
        }
    }

    /// Neighbour count for kNN fits.
    pub fn k(&self) -> Option<usize> {
        match &self.kind {
            FitKind::Knn { index, .. } => Some(index.k),
            FitKind::ExactOracle(_) => None,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match &self.kind {
            FitKind::Knn {
                standardizer,
                index,
            } => {
                let mut q = Vec::with_capacity(x.len());
                standardizer.apply(x, &mut q);
                index.predict_standardized(&q)
            }
            FitKind::ExactOracle(f) => f(x),
        }
    }

    /// Predictions at every row of `s`, in row order.
    pub fn predict_rows(&self, s: &GivenDataSample) -> Vec<f64> {
        (0..s.n())
            .into_par_iter()
            .map(|i| self.predict(s.row(i)))
            .collect()
    }
}

/// kNN fit on the whole sample.
pub fn fit_knn(s: &GivenDataSample, k: usize) -> Result<RegressionFit> {
    if k == 0 || k > s.n() {
        return Err(SobolError::InvalidK {
            k,
            n: s.n(),
            reason: "must satisfy 1 <= k <= n",
        });
    }
    let standardizer = Standardizer::from_sample(s);
    let rows: Vec<usize> = (0..s.n()).collect();
    let points = standardizer.transform(s, &rows);
    let index = KnnIndex::build(s.d(), k, points, s.y().to_vec(), rows);
    Ok(RegressionFit {
        kind: FitKind::Knn {
            standardizer,
            index,
        },
    })
}

/// Fold label of every row: a seeded shuffle of the row indices, with the
/// row at shuffled position `p` assigned to fold `p % folds`.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &row) in perm.iter().enumerate() {
        fold[row] = pos % folds;
    }
    fold
}

/// Out-of-fold kNN predictions: each row is predicted by a fit that never saw
/// its fold. Standardisation uses the full-sample column statistics so every
/// fold shares one metric.
pub fn cross_fit_knn(s: &GivenDataSample, k: usize, folds: usize, seed: u64) -> Result<Vec<f64>> {
    if folds < 2 {
        return Err(SobolError::InvalidConfig(format!(
            "cross-fitting needs at least 2 folds, got {folds}"
        )));
    }
    let fold = fold_assignment(s.n(), folds, seed);
    let standardizer = Standardizer::from_sample(s);
    let mut predictions = vec![0.0; s.n()];
    for f in 0..folds {
        let train: Vec<usize> = (0..s.n()).filter(|&i| fold[i] != f).collect();
        let test: Vec<usize> = (0..s.n()).filter(|&i| fold[i] == f).collect();
        if k == 0 || k > train.len() {
            return Err(SobolError::InvalidK {
                k,
                n: s.n(),
                reason: "exceeds the size of a cross-fitting training split",
            });
        }
        let points = standardizer.transform(s, &train);
        let y = train.iter().map(|&i| s.y()[i]).collect();
        let index = KnnIndex::build(s.d(), k, points, y, train);
        let fitted: Vec<f64> = test
            .par_iter()
            .map(|&i| {
                let mut q = Vec::with_capacity(s.d());
                standardizer.apply(s.row(i), &mut q);
                index.predict_standardized(&q)
            })
            .collect();
        for (&i, v) in test.iter().zip(fitted) {
            predictions[i] = v;
        }
    }
    Ok(predictions)
}

/// Compares by coordinate, then by row index.
pub(crate) fn cmp_coord_then_row(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}
