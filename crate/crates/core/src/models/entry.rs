//! Two-player entry game with multiple equilibria.
//!
//! Firm `k` earns `z_k β + u_k + Δ·1{rival enters}` from entering and zero
//! otherwise, with `Δ < 0` and `u` bivariate standard normal. Write
//! `a_k = −z_k β` and `b_k = −z_k β − Δ > a_k`: firm `k` enters as a monopolist
//! iff `u_k ≥ a_k` and against an entrant iff `u_k ≥ b_k`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::intersection::{binomial_thresholds, to_threshold};
use crate::error::{Error, Result};
use crate::levelset::{hausdorff_distance, rectangular_grid, LevelSet};
use crate::moments::{simulate_panel, Dataset, MomentModel, ObservationSimulator, SimPanel};
use crate::stream::{label, Stream, StreamRng};

pub const THETA_TRUE: [f64; 2] = [0.9, -0.5];
/// Extreme point of the identified set at which coverage is evaluated.
pub const THETA_UPPER: [f64; 2] = [0.888, -0.4015];
pub const NUM_CELLS: usize = 15;
pub const NUM_MOMENTS: usize = 2 * NUM_CELLS;

/// Game primitives. Fields left out of a config take the default game's values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntryConfig {
    pub beta: f64,
    pub delta: f64,
    /// Probability of `(1, 0)` when both `(1, 0)` and `(0, 1)` are equilibria.
    #[serde(rename = "selectProb")]
    pub select_prob: f64,
    /// Support and probabilities of `Z_1`.
    #[serde(rename = "z1Support")]
    pub z1: Vec<(f64, f64)>,
    /// Support and probabilities of `Z_2`, independent of `Z_1`.
    #[serde(rename = "z2Support")]
    pub z2: Vec<(f64, f64)>,
}

impl Default for EntryConfig {
    fn default() -> Self {
        Self {
            beta: THETA_TRUE[0],
            delta: THETA_TRUE[1],
            select_prob: 0.7,
            z1: vec![(-0.1, 0.1), (-0.5, 0.1), (0.0, 0.1), (0.5, 0.1), (1.0, 0.6)],
            z2: vec![(-0.5, 0.1), (0.0, 0.8), (0.5, 0.1)],
        }
    }
}

impl EntryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta < 0.0) {
            return Err(Error::Config(format!("delta must be negative, got {}", self.delta)));
        }
        if !(0.0..=1.0).contains(&self.select_prob) {
            return Err(Error::Config(format!("selectProb must lie in [0, 1], got {}", self.select_prob)));
        }
        for (name, support) in [("z1Support", &self.z1), ("z2Support", &self.z2)] {
            let total: f64 = support.iter().map(|p| p.1).sum();
            if support.is_empty() || (total - 1.0).abs() > 1e-12 || support.iter().any(|p| p.1 < 0.0) {
                return Err(Error::Config(format!("{name} probabilities must be nonnegative and sum to 1")));
            }
        }
        if self.z1.len() * self.z2.len() != NUM_CELLS {
            return Err(Error::Config(format!("the covariate support must have {NUM_CELLS} points")));
        }
        Ok(())
    }

    pub fn theta(&self) -> [f64; 2] {
        [self.beta, self.delta]
    }

    /// Support points `z_k` with `P(Z = z_k)`, cell `k = 3·i_1 + i_2`.
    pub fn cells(&self) -> Vec<([f64; 2], f64)> {
        let mut out = Vec::with_capacity(self.z1.len() * self.z2.len());
        for &(z1, p1) in &self.z1 {
            for &(z2, p2) in &self.z2 {
                out.push(([z1, z2], p1 * p2));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntryObservation {
    pub y: [u8; 2],
    pub z: [f64; 2],
    /// Index of `z` in [`EntryConfig::cells`].
    pub cell: usize,
}

impl EntryObservation {
    pub fn y01(&self) -> f64 {
        if self.y == [0, 1] {
            1.0
        } else {
            0.0
        }
    }
}

fn thresholds(z: [f64; 2], theta: &[f64]) -> ([f64; 2], [f64; 2]) {
    let a = [-z[0] * theta[0], -z[1] * theta[0]];
    (a, [a[0] - theta[1], a[1] - theta[1]])
}

/// Pure-strategy Nash equilibria at `(u, z, θ)`, ordered `(0,0), (0,1), (1,0), (1,1)`.
pub fn equilibria(u: [f64; 2], z: [f64; 2], theta: &[f64]) -> Vec<[u8; 2]> {
    let payoff = |k: usize, rival: u8| z[k] * theta[0] + u[k] + theta[1] * rival as f64;
    let mut out = vec![];
    for y in [[0u8, 0], [0, 1], [1, 0], [1, 1]] {
        let stable = (0..2).all(|k| {
            let own = payoff(k, y[1 - k]);
            if y[k] == 1 {
                own >= 0.0
            } else {
                own < 0.0
            }
        });
        if stable {
            out.push(y);
        }
    }
    out
}

/// Equilibrium outcome, choosing `(1, 0)` with probability `select_prob`
/// (driven by `v ∈ [0, 1)`) when both asymmetric outcomes are equilibria.
pub fn outcome(u: [f64; 2], z: [f64; 2], theta: &[f64], select_prob: f64, v: f64) -> Result<[u8; 2]> {
    let eq = equilibria(u, z, theta);
    match eq.as_slice() {
        [y] => Ok(*y),
        [[0, 1], [1, 0]] => Ok(if v < select_prob { [1, 0] } else { [0, 1] }),
        _ => Err(Error::Parameter(format!("unexpected equilibrium set {eq:?}; is delta negative?"))),
    }
}

pub fn gen_entry_data(cfg: &EntryConfig, n: usize, stream: Stream) -> Result<Dataset<EntryObservation>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let theta = cfg.theta();
    let mut rng = stream.child(label::DATA).rng();
    let mut cumulative = Vec::with_capacity(cells.len());
    let mut acc = 0.0;
    for c in &cells {
        acc += c.1;
        cumulative.push(acc);
    }
    (0..n)
        .map(|_| {
            let w: f64 = rng.random();
            let cell = cumulative.iter().position(|&c| w < c).unwrap_or(cells.len() - 1);
            let z = cells[cell].0;
            let u = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
            let v: f64 = rng.random();
            Ok(EntryObservation { y: outcome(u, z, &theta, cfg.select_prob, v)?, z, cell })
        })
        .collect::<Result<Vec<_>>>()
        .map(Dataset::new)
}

/// `H₁` bounds `P(Y = (0,1) | z)` from above, `H₂` from below.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntryProbabilities {
    pub h1: f64,
    pub h2: f64,
}

/// `H₁ = P((0,1) is an equilibrium) = Φ(b₁)(1 − Φ(a₂))` and
/// `H₂ = P((0,1) is the unique equilibrium) = Φ(b₁)(1 − Φ(b₂)) + Φ(a₁)(Φ(b₂) − Φ(a₂))`.
pub fn entry_choice_probs(z: [f64; 2], theta: &[f64]) -> EntryProbabilities {
    let normal = Normal::standard();
    let (a, b) = thresholds(z, theta);
    let (fa, fb) = ([normal.cdf(a[0]), normal.cdf(a[1])], [normal.cdf(b[0]), normal.cdf(b[1])]);
    EntryProbabilities {
        h1: fb[0] * (1.0 - fa[1]),
        h2: fb[0] * (1.0 - fb[1]) + fa[0] * (fb[1] - fa[1]),
    }
}

fn region_indicators(u: [f64; 2], z: [f64; 2], theta: &[f64]) -> (bool, bool) {
    let (a, b) = thresholds(z, theta);
    let h1 = u[0] < b[0] && u[1] >= a[1];
    let h2 = h1 && !(u[0] >= a[0] && u[1] < b[1]);
    (h1, h2)
}

/// Frequency simulator of `(H₁, H₂)` over `r` bivariate normal draws.
pub fn entry_choice_probs_frequency(z: [f64; 2], theta: &[f64], r: usize, stream: Stream) -> EntryProbabilities {
    let mut rng = stream.rng();
    let (mut c1, mut c2) = (0usize, 0usize);
    for _ in 0..r {
        let u = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
        let (h1, h2) = region_indicators(u, z, theta);
        c1 += h1 as usize;
        c2 += h2 as usize;
    }
    let r = r.max(1) as f64;
    EntryProbabilities { h1: c1 as f64 / r, h2: c2 as f64 / r }
}

/// `P(Y = (0,1) | z)` under the data-generating selection rule.
pub fn entry_population_outcome_prob(z: [f64; 2], theta: &[f64], select_prob: f64) -> f64 {
    let p = entry_choice_probs(z, theta);
    p.h2 + (1.0 - select_prob) * (p.h1 - p.h2)
}

/// Moments `(1{Y=(0,1)} − H₁(z_k; θ))·1{Z = z_k}` at index `2k` and
/// `(H₂(z_k; θ) − 1{Y=(0,1)})·1{Z = z_k}` at index `2k + 1`.
#[derive(Clone, Debug)]
pub struct EntryModel;

impl MomentModel for EntryModel {
    type Obs = EntryObservation;
    type Shock = [f64; 2];

    fn num_moments(&self) -> usize {
        NUM_MOMENTS
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn draw_shock(&self, _obs: &EntryObservation, rng: &mut StreamRng) -> [f64; 2] {
        [StandardNormal.sample(rng), StandardNormal.sample(rng)]
    }

    fn kernel(&self, obs: &EntryObservation, shock: &[f64; 2], theta: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let (h1, h2) = region_indicators(*shock, obs.z, theta);
        let y = obs.y01();
        out[2 * obs.cell] = y - h1 as u8 as f64;
        out[2 * obs.cell + 1] = h2 as u8 as f64 - y;
    }

    fn analytic_moment(&self, obs: &EntryObservation, theta: &[f64], out: &mut [f64]) -> bool {
        out.iter_mut().for_each(|v| *v = 0.0);
        let p = entry_choice_probs(obs.z, theta);
        let y = obs.y01();
        out[2 * obs.cell] = y - p.h1;
        out[2 * obs.cell + 1] = p.h2 - y;
        true
    }
}

/// Population membership: `H₂(z; θ) ≤ P((0,1) | z) ≤ H₁(z; θ)` at every support point.
pub fn in_identified_set(cfg: &EntryConfig, theta: &[f64]) -> bool {
    let truth = cfg.theta();
    cfg.cells().iter().all(|&(z, _)| {
        let p = entry_population_outcome_prob(z, &truth, cfg.select_prob);
        let h = entry_choice_probs(z, theta);
        h.h2 <= p && p <= h.h1
    })
}

pub fn identified_set_grid(cfg: &EntryConfig, grid: &[Vec<f64>]) -> Result<LevelSet> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(Error::Parameter("identified set needs a nonempty grid".into()));
    }
    let member = grid.iter().map(|t| in_identified_set(cfg, t)).collect();
    Ok(LevelSet { grid: grid.to_vec(), member, level: 0.0 })
}

/// CSV with columns `beta,delta,member`.
pub fn write_identified_set_csv(set: &LevelSet, path: &Path) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "beta,delta,member").map_err(io)?;
    for (theta, m) in set.grid.iter().zip(&set.member) {
        writeln!(f, "{},{},{}", theta[0], theta[1], *m as u8).map_err(io)?;
    }
    f.flush().map_err(io)
}

/// Level set `{θ ∈ grid : Σ_j (√n m̄_j/σ̂_j)₊² ≤ c}` of the simulated entry
/// moments, with the shocks in `panel` held fixed across `θ`. Same result as
/// [`crate::levelset::level_set_estimate`] with [`EntryModel`], computed from
/// per-cell sums instead of the full moment matrix.
pub fn entry_level_set(
    data: &Dataset<EntryObservation>,
    panel: &SimPanel<[f64; 2]>,
    grid: &[Vec<f64>],
    c: f64,
) -> Result<LevelSet> {
    if grid.is_empty() {
        return Err(Error::Parameter("level set needs a nonempty grid".into()));
    }
    if panel.len() != data.len() {
        return Err(Error::Conformance { panel: panel.len(), data: data.len() });
    }
    let n = data.len() as f64;
    let member = grid
        .iter()
        .map(|theta| {
            let mut sum = [0.0; NUM_MOMENTS];
            let mut sq = [0.0; NUM_MOMENTS];
            for (obs, shocks) in data.observations().iter().zip(panel.rows()) {
                let (mut h1, mut h2) = (0usize, 0usize);
                for u in shocks {
                    let (a, b) = region_indicators(*u, obs.z, theta);
                    h1 += a as usize;
                    h2 += b as usize;
                }
                let r = shocks.len().max(1) as f64;
                let y = obs.y01();
                let m = [y - h1 as f64 / r, h2 as f64 / r - y];
                for (k, v) in m.into_iter().enumerate() {
                    sum[2 * obs.cell + k] += v;
                    sq[2 * obs.cell + k] += v * v;
                }
            }
            let t: f64 = (0..NUM_MOMENTS)
                .map(|j| {
                    let mean = sum[j] / n;
                    if mean <= 0.0 {
                        return 0.0;
                    }
                    let var = sq[j] / n - mean * mean;
                    if var > 1e-12 * sq[j] / n {
                        n * mean * mean / var
                    } else {
                        f64::INFINITY
                    }
                })
                .sum();
            t <= c
        })
        .collect();
    Ok(LevelSet { grid: grid.to_vec(), member, level: c })
}

/// Compact parameter box `β ∈ [0.5, 1.4]`, `Δ ∈ [−1.5, −0.2]` used for
/// level-set checks. The identified set is unbounded as `Δ → −∞`.
pub fn entry_compact_grid(points: usize) -> Result<Vec<Vec<f64>>> {
    rectangular_grid(&[0.5, -1.5], &[1.4, -0.2], &[points, points])
}

/// Hausdorff distance between the simulated level-set estimate with
/// `c_n = ln n` and the identified set, both restricted to `grid`. An empty
/// estimate is at infinite distance.
pub fn level_set_distance(
    cfg: &EntryConfig,
    n: usize,
    draws: usize,
    grid: &[Vec<f64>],
    truth: &LevelSet,
    stream: Stream,
) -> Result<f64> {
    let data = gen_entry_data(cfg, n, stream)?;
    let panel = simulate_panel(&EntryModel, &data, draws, stream.child(label::PANEL))?;
    let estimate = entry_level_set(&data, &panel, grid, (n as f64).ln())?;
    match hausdorff_distance(&estimate.members(), &truth.members()) {
        Err(Error::EmptySet) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Fast exact simulator of the entry-game moments at a fixed `θ`.
///
/// With `R` draws the pair of counts (draws in the `H₂` region, draws in the
/// multiplicity region `H₁ \ H₂`) is multinomial, so it is sampled with two
/// binomial inversions per observation. `columns` restricts the output to a
/// subset of the 30 moments, in the given order.
pub struct EntrySimulator {
    cells: Vec<usize>,
    y: Vec<f64>,
    probs: Vec<EntryProbabilities>,
    positions: Vec<(Option<usize>, Option<usize>)>,
    width: usize,
    analytic: bool,
    /// For each `R`: per cell, thresholds for the `H₂` count and, for each
    /// remaining `m`, for the multiplicity count.
    tables: BTreeMap<usize, Vec<CellTable>>,
}

/// Inversion thresholds for the `H₂` count and, per `H₂` count, for the
/// multiplicity count.
type CellTable = (Vec<u64>, Vec<Vec<u64>>);

impl EntrySimulator {
    pub fn new(
        data: &Dataset<EntryObservation>,
        theta: &[f64],
        cells: &[[f64; 2]],
        columns: &[usize],
        analytic: bool,
        draws: &[usize],
    ) -> Self {
        let probs: Vec<EntryProbabilities> = cells.iter().map(|&z| entry_choice_probs(z, theta)).collect();
        let mut positions = vec![(None, None); cells.len()];
        for (p, &c) in columns.iter().enumerate() {
            if c / 2 < cells.len() {
                if c % 2 == 0 {
                    positions[c / 2].0 = Some(p);
                } else {
                    positions[c / 2].1 = Some(p);
                }
            }
        }
        let mut tables = BTreeMap::new();
        if !analytic {
            for &r in draws {
                if r == 0 || tables.contains_key(&r) {
                    continue;
                }
                let per_cell = probs
                    .iter()
                    .map(|p| {
                        let mut unique = Vec::with_capacity(r);
                        binomial_thresholds(r, p.h2, &mut unique);
                        let rest = 1.0 - p.h2;
                        let q = if rest > 0.0 { ((p.h1 - p.h2) / rest).clamp(0.0, 1.0) } else { 0.0 };
                        let multi = (0..=r)
                            .map(|m| {
                                let mut t = Vec::with_capacity(m);
                                binomial_thresholds(m, q, &mut t);
                                t
                            })
                            .collect();
                        (unique, multi)
                    })
                    .collect();
                tables.insert(r, per_cell);
            }
        }
        Self {
            cells: data.observations().iter().map(|o| o.cell).collect(),
            y: data.observations().iter().map(|o| o.y01()).collect(),
            probs,
            positions,
            width: columns.len(),
            analytic,
            tables,
        }
    }

    fn counts(&self, cell: usize, draws: usize, rng: &mut StreamRng) -> (usize, usize) {
        match self.tables.get(&draws) {
            Some(t) => {
                let (unique, multi) = &t[cell];
                let v = rng.next_u64();
                let c2 = unique.partition_point(|&c| c <= v);
                let w = rng.next_u64();
                (c2, multi[draws - c2].partition_point(|&c| c <= w))
            }
            None => {
                let p = self.probs[cell];
                let (t2, t1) = (to_threshold(p.h2), to_threshold(p.h1));
                let (mut c2, mut cm) = (0, 0);
                for _ in 0..draws {
                    let v = rng.next_u64();
                    if v < t2 {
                        c2 += 1;
                    } else if v < t1 {
                        cm += 1;
                    }
                }
                (c2, cm)
            }
        }
    }
}

impl ObservationSimulator for EntrySimulator {
    fn num_obs(&self) -> usize {
        self.cells.len()
    }

    fn num_moments(&self) -> usize {
        self.width
    }

    fn simulate(&self, i: usize, draws: usize, rng: &mut StreamRng, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let cell = self.cells[i];
        let (h1, h2) = if self.analytic {
            (self.probs[cell].h1, self.probs[cell].h2)
        } else {
            let r = draws.max(1);
            let (c2, cm) = self.counts(cell, r, rng);
            ((c2 + cm) as f64 / r as f64, c2 as f64 / r as f64)
        };
        let y = self.y[i];
        let (up, low) = self.positions[cell];
        if let Some(p) = up {
            out[p] = y - h1;
        }
        if let Some(p) = low {
            out[p] = h2 - y;
        }
    }
}
