//! Level-set estimates of the identified set on a parameter grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{observation_moments, Dataset, MomentModel, ObservationMoments, SimPanel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub grid: Vec<Vec<f64>>,
    pub member: Vec<bool>,
    pub level: f64,
}

impl LevelSet {
    pub fn members(&self) -> Vec<Vec<f64>> {
        self.grid.iter().zip(&self.member).filter(|(_, &m)| m).map(|(g, _)| g.clone()).collect()
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }
}

/// `Σ_j (√n m̄_j/σ̂_j)₊²` from the diagonal variances only. A moment with zero
/// variance adds nothing when `m̄_j ≤ 0` and makes the statistic infinite otherwise.
pub fn sum_plus_sq_statistic(rows: &ObservationMoments) -> f64 {
    let mean = rows.mean();
    let var = rows.variances(&mean);
    let rn = (rows.n() as f64).sqrt();
    mean.iter()
        .zip(&var)
        .map(|(m, v)| {
            if *m <= 0.0 {
                0.0
            } else if *v > 0.0 {
                (rn * m / v.sqrt()).powi(2)
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// `{θ ∈ grid : T_{n,R}(θ) ≤ c}` with the squared positive-part statistic.
pub fn level_set_estimate<M: MomentModel>(
    model: &M,
    data: &Dataset<M::Obs>,
    panel: &SimPanel<M::Shock>,
    grid: &[Vec<f64>],
    c: f64,
) -> Result<LevelSet> {
    if grid.is_empty() {
        return Err(Error::Parameter("level set needs a nonempty grid".into()));
    }
    let member = grid
        .iter()
        .map(|theta| Ok(sum_plus_sq_statistic(&observation_moments(model, data, panel, theta)?) <= c))
        .collect::<Result<Vec<bool>>>()?;
    Ok(LevelSet { grid: grid.to_vec(), member, level: c })
}

fn directed(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .map(|p| {
            b.iter()
                .map(|q| p.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
        .sqrt()
}

/// Euclidean Hausdorff distance between two finite point sets.
pub fn hausdorff_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(directed(a, b).max(directed(b, a)))
}

/// Rectangular grid over `[lo_0, hi_0] × [lo_1, hi_1] × …` with `points[k]` values per axis.
pub fn rectangular_grid(lo: &[f64], hi: &[f64], points: &[usize]) -> Result<Vec<Vec<f64>>> {
    if lo.len() != hi.len() || lo.len() != points.len() || lo.is_empty() {
        return Err(Error::Parameter("grid bounds and point counts must have equal nonzero length".into()));
    }
    if points.contains(&0) {
        return Err(Error::Parameter("each grid axis needs at least one point".into()));
    }
    let axes: Vec<Vec<f64>> = lo
        .iter()
        .zip(hi)
        .zip(points)
        .map(|((&l, &h), &p)| {
            if p == 1 {
                vec![l]
            } else {
                (0..p).map(|k| l + (h - l) * k as f64 / (p - 1) as f64).collect()
            }
        })
        .collect();
    let mut grid = vec![vec![]];
    for axis in &axes {
        grid = grid
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(grid)
}
