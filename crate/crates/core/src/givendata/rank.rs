//! Nearest-neighbour pairing estimator of `E[E[Y|X]²]`.
//!
//! Each row is paired with a neighbour `N(i) != i` and the estimate is
//! `mean(Y_i * Y_N(i))`. In one dimension the neighbour is the adjacent row
//! in the ordering of `X` (ties in `X` ordered by row), picking the smaller
//! row index when both sides exist, so the estimate depends on the inputs only
//! through their ranks. In higher dimensions the neighbour is the closest row
//! in standardised Euclidean distance, ties again going to the smaller row.

use rayon::prelude::*;

use super::knn::{cmp_coord_then_row, Standardizer};
use super::GivenDataSample;
use crate::error::{Result, SobolError};
use crate::numeric::mean_by;

/// The partner row `N(i)` of every row.
pub fn pairing_neighbours(s: &GivenDataSample) -> Result<Vec<usize>> {
    let n = s.n();
    if n < 2 {
        return Err(SobolError::InsufficientData { needed: 2, got: n });
    }
    if s.d() == 1 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| cmp_coord_then_row((s.row(a)[0], a), (s.row(b)[0], b)));
        let mut partner = vec![0; n];
        for (rank, &row) in order.iter().enumerate() {
            let left = rank.checked_sub(1).map(|r| order[r]);
            let right = order.get(rank + 1).copied();
            partner[row] = match (left, right) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!("n >= 2"),
            };
        }
        return Ok(partner);
    }

    let st = Standardizer::from_sample(s);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut v = Vec::with_capacity(s.d());
            st.apply(s.row(i), &mut v);
            v
        })
        .collect();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, usize::MAX);
            for (j, p) in points.iter().enumerate() {
                if j == i {
                    continue;
                }
                let dist: f64 = p.iter().zip(&points[i]).map(|(a, b)| (a - b) * (a - b)).sum();
                // Rows are visited in increasing order, so strict `<` keeps
                // the smaller index on ties.
                if dist < best.0 {
                    best = (dist, j);
                }
            }
            best.1
        })
        .collect())
}

pub fn psi_rank_pairing(s: &GivenDataSample) -> Result<f64> {
    let partner = pairing_neighbours(s)?;
    let y = s.y();
    let rows: Vec<usize> = (0..s.n()).collect();
    Ok(mean_by(&rows, |&i| y[i] * y[partner[i]]))
}
