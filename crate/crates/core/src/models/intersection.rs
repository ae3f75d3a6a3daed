//! Intersection bounds: `θ − E[1{u_j < X_j}] ≤ 0` for `j = 1..J` with
//! `X, u` independent standard normal vectors.

use std::collections::BTreeMap;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::moments::{Dataset, MomentModel, ObservationSimulator};
use crate::stream::{label, Stream, StreamRng};

/// Upper end of the identified set when at least one moment binds.
pub const THETA_UPPER: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntersectionConfig {
    #[serde(rename = "J")]
    pub j: usize,
    pub n: usize,
    /// Number of leading moments whose `X_j` mean is shifted up.
    #[serde(rename = "slackCount", default)]
    pub slack_count: usize,
    #[serde(rename = "slackShift", default)]
    pub slack_shift: f64,
    /// Size of the auxiliary sample used to predict `Φ(X_j)` instead of simulating it.
    #[serde(rename = "firstStage", default)]
    pub first_stage: Option<usize>,
}

impl IntersectionConfig {
    pub fn new(j: usize, n: usize) -> Self {
        Self { j, n, slack_count: 0, slack_shift: 0.0, first_stage: None }
    }

    /// `⌊J/5⌋` slack moments shifted by `1/√n`.
    pub fn with_slack(mut self) -> Self {
        self.slack_count = self.j / 5;
        self.slack_shift = 1.0 / (self.n as f64).sqrt();
        self
    }

    pub fn with_first_stage(mut self, n1: usize) -> Self {
        self.first_stage = Some(n1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.j == 0 || self.n == 0 {
            return Err(Error::Config("intersection model needs J >= 1 and n >= 1".into()));
        }
        if self.slack_count > self.j {
            return Err(Error::Config(format!("slackCount {} exceeds J = {}", self.slack_count, self.j)));
        }
        if matches!(self.first_stage, Some(n1) if n1 < 2) {
            return Err(Error::Config("firstStage sample size must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntersectionObs {
    pub x: Vec<f64>,
    /// Predicted `Φ̂_j(x_j)` when the first-stage variant is active.
    pub predicted: Option<Vec<f64>>,
}

pub fn std_normal() -> Normal {
    Normal::standard()
}

pub fn phi(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Draws `n` observations. Slack columns get mean `slack_shift`. With a first
/// stage, the location and scale of each `u_j` are estimated from an
/// independent auxiliary `N(0, 1)` sample of size `N1` and the plug-in
/// prediction `Φ((x − μ̂_j)/σ̂_j)` of `P(u_j < x)` is stored.
pub fn gen_intersection_data(cfg: &IntersectionConfig, stream: Stream) -> Result<Dataset<IntersectionObs>> {
    cfg.validate()?;
    let mut rng = stream.child(label::DATA).rng();
    let mut obs: Vec<IntersectionObs> = (0..cfg.n)
        .map(|_| {
            let x = (0..cfg.j)
                .map(|k| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    if k < cfg.slack_count {
                        e + cfg.slack_shift
                    } else {
                        e
                    }
                })
                .collect();
            IntersectionObs { x, predicted: None }
        })
        .collect();
    if let Some(n1) = cfg.first_stage {
        let mut aux = stream.child(label::FIRST_STAGE).rng();
        let fits: Vec<(f64, f64)> = (0..cfg.j)
            .map(|_| {
                let sample: Vec<f64> = (0..n1).map(|_| StandardNormal.sample(&mut aux)).collect();
                let mean = sample.iter().sum::<f64>() / n1 as f64;
                let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n1 as f64 - 1.0);
                (mean, var.sqrt())
            })
            .collect();
        let normal = std_normal();
        for o in &mut obs {
            o.predicted = Some(
                o.x.iter()
                    .enumerate()
                    .map(|(k, &x)| normal.cdf((x - fits[k].0) / fits[k].1))
                    .collect(),
            );
        }
    }
    Ok(Dataset::new(obs))
}

/// Kernel `θ − 1{u_j < x_j}`; analytic moment `θ − Φ(x_j)` (or the predicted value).
#[derive(Clone, Debug)]
pub struct IntersectionModel {
    j: usize,
}

impl IntersectionModel {
    pub fn new(cfg: &IntersectionConfig) -> Self {
        Self { j: cfg.j }
    }
}

impl MomentModel for IntersectionModel {
    type Obs = IntersectionObs;
    type Shock = Vec<f64>;

    fn num_moments(&self) -> usize {
        self.j
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn draw_shock(&self, _obs: &IntersectionObs, rng: &mut StreamRng) -> Vec<f64> {
        (0..self.j).map(|_| StandardNormal.sample(rng)).collect()
    }

    fn kernel(&self, obs: &IntersectionObs, shock: &Vec<f64>, theta: &[f64], out: &mut [f64]) {
        for ((o, u), x) in out.iter_mut().zip(shock).zip(&obs.x) {
            *o = theta[0] - if u < x { 1.0 } else { 0.0 };
        }
    }

    fn analytic_moment(&self, obs: &IntersectionObs, theta: &[f64], out: &mut [f64]) -> bool {
        match &obs.predicted {
            Some(p) => {
                for (o, v) in out.iter_mut().zip(p) {
                    *o = theta[0] - v;
                }
            }
            None => {
                let normal = std_normal();
                for (o, x) in out.iter_mut().zip(&obs.x) {
                    *o = theta[0] - normal.cdf(*x);
                }
            }
        }
        true
    }
}

/// `c = Φ⁻¹((1 − α)^{1/J}) · √(1/12)`: the `1 − α` quantile of the maximum of
/// `J` independent `N(0, 1/12)` variables.
pub fn table1_critical_value(j: usize, alpha: f64) -> Result<f64> {
    if j == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("need J >= 1 and alpha in (0, 1), got J = {j}, alpha = {alpha}")));
    }
    let level = (1.0 - alpha).powf(1.0 / j as f64);
    Ok(std_normal().inverse_cdf(level) * (1.0f64 / 12.0).sqrt())
}

/// Simulation approximation of [`table1_critical_value`].
pub fn table1_critical_value_simulated(j: usize, alpha: f64, draws: usize, stream: Stream) -> Result<f64> {
    table1_critical_value(j, alpha)?;
    let mut rng = stream.rng();
    let sd = (1.0f64 / 12.0).sqrt();
    let maxima: Vec<f64> = (0..draws.max(1))
        .map(|_| {
            (0..j)
                .map(|_| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    sd * e
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    crate::inference::quantile(&maxima, 1.0 - alpha)
}

/// How per-observation bound estimates are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundSource {
    /// `Φ(x_j)`, or the first-stage prediction when present.
    Analytic,
    /// Frequency simulator `R⁻¹ Σ_r 1{u_{j,r} < x_j}`.
    Simulated,
}

/// Fast exact simulator for the intersection model.
///
/// Given `x`, the frequency `Σ_r 1{u_{j,r} < x_j}` is `Binomial(R, Φ(x_j))`
/// and independent across `j`, so each count is drawn by inverting a
/// precomputed binomial CDF with a single 64-bit uniform. Draw counts without
/// a table fall back to one uniform per indicator.
///
/// Output is `a·f̂_j + θ` where `f̂_j` is the bound estimate: `a = −1` gives the
/// moments `θ − f̂_j`, `a = 1, θ = 0` gives the bounds themselves.
pub struct IntersectionSimulator {
    n: usize,
    j: usize,
    probs: Vec<f64>,
    thresholds: Vec<u64>,
    tables: BTreeMap<usize, Vec<u64>>,
    source: BoundSource,
    sign: f64,
    theta: f64,
}

pub(crate) fn to_threshold(p: f64) -> u64 {
    if p >= 1.0 {
        u64::MAX
    } else if p <= 0.0 {
        0
    } else {
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}

/// `t_k = P(Bin(r, p) ≤ k)·2⁶⁴` for `k = 0..r−1`.
pub(crate) fn binomial_thresholds(r: usize, p: f64, out: &mut Vec<u64>) {
    if p <= 0.0 {
        out.extend(std::iter::repeat_n(u64::MAX, r));
        return;
    }
    if p >= 1.0 {
        out.extend(std::iter::repeat_n(0, r));
        return;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut log_choose = 0.0f64;
    let mut cdf = 0.0f64;
    for k in 0..r {
        if k > 0 {
            log_choose += ((r - k + 1) as f64).ln() - (k as f64).ln();
        }
        cdf += (log_choose + k as f64 * lp + (r - k) as f64 * lq).exp();
        out.push(to_threshold(cdf.min(1.0)));
    }
}

impl IntersectionSimulator {
    /// Simulator of the bounds `f̂_j(X_i)`, with binomial tables for each of `draws`.
    pub fn bounds(data: &Dataset<IntersectionObs>, source: BoundSource, draws: &[usize]) -> Self {
        Self::build(data, source, draws, 1.0, 0.0)
    }

    /// Simulator of the moments `θ − f̂_j(X_i)`.
    pub fn moments(data: &Dataset<IntersectionObs>, theta: f64, source: BoundSource, draws: &[usize]) -> Self {
        Self::build(data, source, draws, -1.0, theta)
    }

    fn build(data: &Dataset<IntersectionObs>, source: BoundSource, draws: &[usize], sign: f64, theta: f64) -> Self {
        let n = data.len();
        let j = data.observations().first().map_or(0, |o| o.x.len());
        let normal = std_normal();
        let mut probs = Vec::with_capacity(n * j);
        for o in data.observations() {
            match (&o.predicted, source) {
                (Some(p), BoundSource::Analytic) => probs.extend_from_slice(p),
                _ => probs.extend(o.x.iter().map(|&x| normal.cdf(x))),
            }
        }
        let thresholds = probs.iter().map(|&p| to_threshold(p)).collect();
        let mut tables = BTreeMap::new();
        if source == BoundSource::Simulated {
            for &r in draws {
                if r <= 1 || tables.contains_key(&r) {
                    continue;
                }
                let mut t = Vec::with_capacity(probs.len() * r);
                for &p in &probs {
                    binomial_thresholds(r, p, &mut t);
                }
                tables.insert(r, t);
            }
        }
        Self { n, j, probs, thresholds, tables, source, sign, theta }
    }

    /// Success probability `Φ(x_{i,j})` (or the predicted value).
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.j + j]
    }
}

impl ObservationSimulator for IntersectionSimulator {
    fn num_obs(&self) -> usize {
        self.n
    }

    fn num_moments(&self) -> usize {
        self.j
    }

    fn simulate(&self, i: usize, draws: usize, rng: &mut StreamRng, out: &mut [f64]) {
        let row = i * self.j;
        if self.source == BoundSource::Analytic {
            for (k, o) in out.iter_mut().enumerate() {
                *o = self.sign * self.probs[row + k] + self.theta;
            }
            return;
        }
        let r = draws.max(1);
        let inv = 1.0 / r as f64;
        match self.tables.get(&r) {
            Some(table) => {
                for (k, o) in out.iter_mut().enumerate() {
                    let t = &table[(row + k) * r..(row + k + 1) * r];
                    let v = rng.next_u64();
                    let count = t.partition_point(|&c| c <= v);
                    *o = self.sign * count as f64 * inv + self.theta;
                }
            }
            None => {
                for (k, o) in out.iter_mut().enumerate() {
                    let th = self.thresholds[row + k];
                    let count = (0..r).filter(|_| rng.next_u64() < th).count();
                    *o = self.sign * count as f64 * inv + self.theta;
                }
            }
        }
    }
}
