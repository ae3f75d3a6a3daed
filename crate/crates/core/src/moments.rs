//! Simulated moment construction.
//!
//! A model supplies a per-draw kernel `M(x, u, θ)` and a sampler for the shock
//! `u | x`. Averaging the kernel over `R` draws gives the simulated
//! per-observation moment `m̂_R(X_i, θ)`; averaging those over observations
//! gives `m̄_{n,R}(θ)`. Covariances use the divisor `n`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::stream::{label, Stream, StreamRng};

/// Regularization floor on `det(Ω̂)` used by [`regularized_covariance`].
pub const DET_FLOOR: f64 = 0.012;

/// A moment-inequality model `E[m_j(X, θ)] ≤ 0` whose moments are
/// expectations of a kernel over a shock with known law given the observation.
///
/// Shock laws do not depend on `θ`.
pub trait MomentModel: Sync {
    type Obs: Clone + Send + Sync;
    type Shock: Clone + Send + Sync;

    fn num_moments(&self) -> usize;

    fn param_dim(&self) -> usize;

    /// One draw from `P(· | obs)`.
    fn draw_shock(&self, obs: &Self::Obs, rng: &mut StreamRng) -> Self::Shock;

    /// Writes `M(obs, shock, θ)` into `out` (length `num_moments`).
    fn kernel(&self, obs: &Self::Obs, shock: &Self::Shock, theta: &[f64], out: &mut [f64]);

    /// Writes the exact conditional mean `m(obs, θ)` when the model has one.
    fn analytic_moment(&self, _obs: &Self::Obs, _theta: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<O> {
    observations: Vec<O>,
}

impl<O> Dataset<O> {
    pub fn new(observations: Vec<O>) -> Self {
        Self { observations }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[O] {
        &self.observations
    }

    pub fn get(&self, i: usize) -> &O {
        &self.observations[i]
    }

    pub fn select(&self, indices: &[usize]) -> Self
    where
        O: Clone,
    {
        Self::new(indices.iter().map(|&i| self.observations[i].clone()).collect())
    }
}

/// `n × R` simulation draws; row `i` is drawn from `P(· | X_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimPanel<S> {
    draws: Vec<Vec<S>>,
    per_obs: usize,
}

impl<S> SimPanel<S> {
    pub fn rows(&self) -> &[Vec<S>] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draws_per_obs(&self) -> usize {
        self.per_obs
    }
}

/// Draws an `n × R` panel. Row `i` uses sub-stream `stream.child(i)`.
pub fn simulate_panel<M: MomentModel>(
    model: &M,
    data: &Dataset<M::Obs>,
    draws: usize,
    stream: Stream,
) -> Result<SimPanel<M::Shock>> {
    if draws == 0 {
        return Err(Error::Parameter("number of simulation draws must be at least 1".into()));
    }
    let rows = data
        .observations()
        .iter()
        .enumerate()
        .map(|(i, obs)| {
            let mut rng = stream.child(i as u64).rng();
            (0..draws).map(|_| model.draw_shock(obs, &mut rng)).collect()
        })
        .collect();
    Ok(SimPanel { draws: rows, per_obs: draws })
}

/// Row-major `n × J` matrix of per-observation moments `m̂_R(X_i, θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMoments {
    values: Vec<f64>,
    n: usize,
    j: usize,
}

impl ObservationMoments {
    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        let mut out = Self::zeros(self.n, columns.len());
        for i in 0..self.n {
            let src = self.row(i);
            for (dst, &c) in out.row_mut(i).iter_mut().zip(columns) {
                *dst = src[c];
            }
        }
        out
    }

    pub fn zeros(n: usize, j: usize) -> Self {
        Self { values: vec![0.0; n * j], n, j }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let j = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != j) {
            return Err(Error::Parameter(format!(
                "ragged moment rows: expected {j} columns, found {}",
                bad.len()
            )));
        }
        Ok(Self { values: rows.concat(), n: rows.len(), j })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_moments(&self) -> usize {
        self.j
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.j..(i + 1) * self.j]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.j..(i + 1) * self.j]
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.j];
        for row in self.values.chunks_exact(self.j.max(1)) {
            for (a, b) in m.iter_mut().zip(row) {
                *a += b;
            }
        }
        let n = self.n.max(1) as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Diagonal of the covariance around `mean`, divisor `n`.
    pub fn variances(&self, mean: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.j];
        for row in self.values.chunks_exact(self.j.max(1)) {
            for ((a, x), m) in v.iter_mut().zip(row).zip(mean) {
                let d = x - m;
                *a += d * d;
            }
        }
        let n = self.n.max(1) as f64;
        v.iter_mut().for_each(|a| *a /= n);
        v
    }

    /// Covariance around `mean`, divisor `n`.
    pub fn covariance(&self, mean: &[f64]) -> Result<DMatrix<f64>> {
        if self.n < 2 {
            return Err(Error::DegenerateSample(self.n));
        }
        let j = self.j;
        let mut s = DMatrix::<f64>::zeros(j, j);
        let mut d = vec![0.0; j];
        for row in self.values.chunks_exact(j.max(1)) {
            for ((dk, x), m) in d.iter_mut().zip(row).zip(mean) {
                *dk = x - m;
            }
            for a in 0..j {
                if d[a] == 0.0 {
                    continue;
                }
                for b in a..j {
                    s[(a, b)] += d[a] * d[b];
                }
            }
        }
        let n = self.n as f64;
        for a in 0..j {
            for b in a..j {
                let v = s[(a, b)] / n;
                s[(a, b)] = v;
                s[(b, a)] = v;
            }
        }
        Ok(s)
    }

    pub fn stats(&self) -> Result<MomentStats> {
        let mbar = self.mean();
        let sigma = self.covariance(&mbar)?;
        Ok(MomentStats::new(mbar, sigma, self.n))
    }

    /// Same as [`ObservationMoments::stats`], accumulating `Σ x x'` over the
    /// nonzero entries of each row. Fast when rows are mostly zero.
    pub fn sparse_stats(&self) -> Result<MomentStats> {
        if self.n < 2 {
            return Err(Error::DegenerateSample(self.n));
        }
        let j = self.j;
        let mbar = self.mean();
        let mut s = DMatrix::<f64>::zeros(j, j);
        let mut nz = Vec::with_capacity(j);
        for row in self.values.chunks_exact(j.max(1)) {
            nz.clear();
            nz.extend((0..j).filter(|&c| row[c] != 0.0));
            for (p, &a) in nz.iter().enumerate() {
                for &b in &nz[p..] {
                    s[(a, b)] += row[a] * row[b];
                }
            }
        }
        let n = self.n as f64;
        for a in 0..j {
            for b in a..j {
                let raw = s[(a, b)] / n;
                let mut v = raw - mbar[a] * mbar[b];
                if a == b && v <= 1e-12 * raw {
                    v = 0.0;
                }
                s[(a, b)] = v;
                s[(b, a)] = v;
            }
        }
        Ok(MomentStats::new(mbar, s, self.n))
    }

    /// Multiplies every entry by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * a).collect(), n: self.n, j: self.j }
    }
}

/// Per-observation simulated moments: `m̂_R(X_i, θ)`.
pub fn observation_moments<M: MomentModel>(
    model: &M,
    data: &Dataset<M::Obs>,
    panel: &SimPanel<M::Shock>,
    theta: &[f64],
) -> Result<ObservationMoments> {
    if panel.len() != data.len() {
        return Err(Error::Conformance { panel: panel.len(), data: data.len() });
    }
    let j = model.num_moments();
    let mut out = ObservationMoments::zeros(data.len(), j);
    let mut buf = vec![0.0; j];
    for (i, (obs, row)) in data.observations().iter().zip(panel.rows()).enumerate() {
        let acc = out.row_mut(i);
        for shock in row {
            model.kernel(obs, shock, theta, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b;
            }
        }
        let r = row.len().max(1) as f64;
        acc.iter_mut().for_each(|a| *a /= r);
    }
    Ok(out)
}

/// Exact per-observation moments `m(X_i, θ)`, when the model provides them.
pub fn analytic_observation_moments<M: MomentModel>(
    model: &M,
    data: &Dataset<M::Obs>,
    theta: &[f64],
) -> Option<ObservationMoments> {
    let mut out = ObservationMoments::zeros(data.len(), model.num_moments());
    for (i, obs) in data.observations().iter().enumerate() {
        if !model.analytic_moment(obs, theta, out.row_mut(i)) {
            return None;
        }
    }
    Some(out)
}

/// `m̄_{n,R}(θ) = (nR)⁻¹ Σ_i Σ_r M(X_i, u_{i,r}, θ)`.
pub fn sample_moments<M: MomentModel>(
    model: &M,
    data: &Dataset<M::Obs>,
    panel: &SimPanel<M::Shock>,
    theta: &[f64],
) -> Result<Vec<f64>> {
    Ok(observation_moments(model, data, panel, theta)?.mean())
}

/// `Σ̂_{n,R}(θ)` around the supplied `mbar`.
pub fn covariance<M: MomentModel>(
    model: &M,
    data: &Dataset<M::Obs>,
    panel: &SimPanel<M::Shock>,
    theta: &[f64],
    mbar: &[f64],
) -> Result<DMatrix<f64>> {
    if data.len() < 2 {
        return Err(Error::DegenerateSample(data.len()));
    }
    observation_moments(model, data, panel, theta)?.covariance(mbar)
}

/// Sample moment vector together with its covariance, diagonal variances and
/// correlation matrix at a fixed `θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentStats {
    pub mbar: Vec<f64>,
    pub sigma: DMatrix<f64>,
    pub vdiag: Vec<f64>,
    pub omega: DMatrix<f64>,
    pub n: usize,
}

impl MomentStats {
    pub fn new(mbar: Vec<f64>, sigma: DMatrix<f64>, n: usize) -> Self {
        let j = mbar.len();
        let vdiag: Vec<f64> = (0..j).map(|k| sigma[(k, k)].max(0.0)).collect();
        let omega = DMatrix::from_fn(j, j, |a, b| {
            if vdiag[a] > 0.0 && vdiag[b] > 0.0 {
                if a == b {
                    1.0
                } else {
                    sigma[(a, b)] / (vdiag[a] * vdiag[b]).sqrt()
                }
            } else {
                0.0
            }
        });
        Self { mbar, sigma, vdiag, omega, n }
    }

    pub fn num_moments(&self) -> usize {
        self.mbar.len()
    }

    pub fn sd(&self) -> Vec<f64> {
        self.vdiag.iter().map(|v| v.sqrt()).collect()
    }

    /// Indices of moments with strictly positive variance.
    pub fn nondegenerate(&self) -> Vec<usize> {
        (0..self.vdiag.len()).filter(|&k| self.vdiag[k] > 0.0).collect()
    }

    /// Statistics of the sub-vector `indices`.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mbar = indices.iter().map(|&k| self.mbar[k]).collect();
        let sigma = self.sigma.select_rows(indices).select_columns(indices);
        Self::new(mbar, sigma, self.n)
    }

    pub fn check_nondegenerate(&self) -> Result<()> {
        match self.vdiag.iter().position(|&v| v <= 0.0) {
            Some(index) => Err(Error::DegenerateMoment { index }),
            None => Ok(()),
        }
    }
}

/// `Σ̃ = Σ̂ + max{0.012 − det(Ω̂), 0} · diag(Σ̂)`.
pub fn regularized_covariance(stats: &MomentStats) -> Result<DMatrix<f64>> {
    stats.check_nondegenerate()?;
    let det = stats.omega.clone().determinant();
    let bump = (DET_FLOOR - det).max(0.0);
    let mut out = stats.sigma.clone();
    for k in 0..out.nrows() {
        out[(k, k)] += bump * stats.vdiag[k];
    }
    Ok(out)
}

/// `ξ_j = κ⁻¹ √n m̄_j / σ̂_j`.
pub fn studentized_slackness(stats: &MomentStats, kappa: f64) -> Result<Vec<f64>> {
    if !(kappa > 0.0) {
        return Err(Error::Parameter(format!("kappa must be positive, got {kappa}")));
    }
    stats.check_nondegenerate()?;
    let rn = (stats.n as f64).sqrt();
    Ok(stats
        .mbar
        .iter()
        .zip(&stats.vdiag)
        .map(|(m, v)| rn * m / v.sqrt() / kappa)
        .collect())
}

/// `n` indices drawn uniformly with replacement.
pub fn resample_indices(n: usize, stream: Stream) -> Vec<usize> {
    let mut rng = stream.rng();
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Nonparametric bootstrap of the data with a fresh `n × R` simulation panel
/// drawn conditionally on the resampled observations.
pub fn bootstrap_resample<M: MomentModel>(
    data: &Dataset<M::Obs>,
    model: &M,
    draws: usize,
    stream: Stream,
) -> Result<(Dataset<M::Obs>, SimPanel<M::Shock>)> {
    let idx = resample_indices(data.len(), stream.child(label::RESAMPLE));
    let resampled = data.select(&idx);
    let panel = simulate_panel(model, &resampled, draws, stream.child(label::PANEL))?;
    Ok((resampled, panel))
}

/// Produces simulated per-observation moments for observations of a fixed
/// dataset at a fixed `θ`.
///
/// This is the interface the bootstrap engines consume; implementations may
/// sample `m̂_R` directly from its exact distribution instead of drawing
/// individual shocks.
pub trait ObservationSimulator: Sync {
    fn num_obs(&self) -> usize;

    fn num_moments(&self) -> usize;

    /// Writes `m̂_R(X_i, θ)` computed from `draws` fresh shocks.
    fn simulate(&self, i: usize, draws: usize, rng: &mut StreamRng, out: &mut [f64]);

    /// Per-observation moments for `indices`, row `k` drawn from `stream.child(k)`.
    fn simulate_rows(&self, indices: &[usize], draws: usize, stream: Stream) -> ObservationMoments {
        let mut out = ObservationMoments::zeros(indices.len(), self.num_moments());
        for (k, &i) in indices.iter().enumerate() {
            let mut rng = stream.child(k as u64).rng();
            self.simulate(i, draws, &mut rng, out.row_mut(k));
        }
        out
    }

    /// Moments of the original sample, row `i` drawn from `stream.child(i)`.
    fn simulate_all(&self, draws: usize, stream: Stream) -> ObservationMoments {
        let idx: Vec<usize> = (0..self.num_obs()).collect();
        self.simulate_rows(&idx, draws, stream)
    }

    /// Bootstrap sample: resampled indices with fresh simulation draws.
    fn bootstrap_rows(&self, draws: usize, stream: Stream) -> ObservationMoments {
        let idx = resample_indices(self.num_obs(), stream.child(label::RESAMPLE));
        self.simulate_rows(&idx, draws, stream.child(label::PANEL))
    }

    /// Mean and divisor-`n` variances of the bootstrap sample drawn by
    /// [`ObservationSimulator::bootstrap_rows`] with the same stream, computed
    /// without materializing the rows.
    fn bootstrap_summary(&self, draws: usize, stream: Stream, variances: bool) -> (Vec<f64>, Vec<f64>) {
        let idx = resample_indices(self.num_obs(), stream.child(label::RESAMPLE));
        let panel = stream.child(label::PANEL);
        let j = self.num_moments();
        let mut buf = vec![0.0; j];
        let mut shift = vec![0.0; j];
        let mut sum = vec![0.0; j];
        let mut sq = vec![0.0; if variances { j } else { 0 }];
        for (k, &i) in idx.iter().enumerate() {
            let mut rng = panel.child(k as u64).rng();
            self.simulate(i, draws, &mut rng, &mut buf);
            if k == 0 {
                shift.copy_from_slice(&buf);
            }
            for c in 0..j {
                let d = buf[c] - shift[c];
                sum[c] += d;
                if variances {
                    sq[c] += d * d;
                }
            }
        }
        let n = idx.len().max(1) as f64;
        let mean: Vec<f64> = sum.iter().zip(&shift).map(|(s, h)| h + s / n).collect();
        let var = sq.iter().zip(&sum).map(|(q, s)| (q / n - (s / n).powi(2)).max(0.0)).collect();
        (mean, var)
    }
}

/// Generic simulator that draws shocks and averages the model kernel.
pub struct KernelSimulator<'a, M: MomentModel> {
    model: &'a M,
    data: &'a Dataset<M::Obs>,
    theta: Vec<f64>,
}

impl<'a, M: MomentModel> KernelSimulator<'a, M> {
    pub fn new(model: &'a M, data: &'a Dataset<M::Obs>, theta: &[f64]) -> Self {
        Self { model, data, theta: theta.to_vec() }
    }
}

impl<M: MomentModel> ObservationSimulator for KernelSimulator<'_, M> {
    fn num_obs(&self) -> usize {
        self.data.len()
    }

    fn num_moments(&self) -> usize {
        self.model.num_moments()
    }

    fn simulate(&self, i: usize, draws: usize, rng: &mut StreamRng, out: &mut [f64]) {
        let obs = self.data.get(i);
        let mut buf = vec![0.0; out.len()];
        out.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..draws {
            let shock = self.model.draw_shock(obs, rng);
            self.model.kernel(obs, &shock, &self.theta, &mut buf);
            for (a, b) in out.iter_mut().zip(&buf) {
                *a += b;
            }
        }
        let r = draws.max(1) as f64;
        out.iter_mut().for_each(|v| *v /= r);
    }
}

/// Observations whose moments are known exactly; simulation draws are ignored.
pub struct FixedMoments<'a> {
    rows: &'a ObservationMoments,
}

impl<'a> FixedMoments<'a> {
    pub fn new(rows: &'a ObservationMoments) -> Self {
        Self { rows }
    }
}

impl ObservationSimulator for FixedMoments<'_> {
    fn num_obs(&self) -> usize {
        self.rows.n()
    }

    fn num_moments(&self) -> usize {
        self.rows.num_moments()
    }

    fn simulate(&self, i: usize, _draws: usize, _rng: &mut StreamRng, out: &mut [f64]) {
        out.copy_from_slice(self.rows.row(i));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal};

    /// One-moment model returning a stored value; shock is ignored.
    struct Table;

    impl MomentModel for Table {
        type Obs = f64;
        type Shock = ();
        fn num_moments(&self) -> usize {
            1
        }
        fn param_dim(&self) -> usize {
            1
        }
        fn draw_shock(&self, _obs: &f64, _rng: &mut StreamRng) {}
        fn kernel(&self, obs: &f64, _shock: &(), _theta: &[f64], out: &mut [f64]) {
            out[0] = *obs;
        }
    }

    /// Shock ~ N(0, 1); kernel returns the shock.
    struct Normal;

    impl MomentModel for Normal {
        type Obs = ();
        type Shock = f64;
        fn num_moments(&self) -> usize {
            1
        }
        fn param_dim(&self) -> usize {
            0
        }
        fn draw_shock(&self, _obs: &(), rng: &mut StreamRng) -> f64 {
            StandardNormal.sample(rng)
        }
        fn kernel(&self, _obs: &(), shock: &f64, _theta: &[f64], out: &mut [f64]) {
            out[0] = *shock;
        }
    }

    /// Degenerate shock law: always zero.
    struct Zero;

    impl MomentModel for Zero {
        type Obs = ();
        type Shock = f64;
        fn num_moments(&self) -> usize {
            1
        }
        fn param_dim(&self) -> usize {
            0
        }
        fn draw_shock(&self, _obs: &(), _rng: &mut StreamRng) -> f64 {
            0.0
        }
        fn kernel(&self, _obs: &(), shock: &f64, _theta: &[f64], out: &mut [f64]) {
            out[0] = *shock;
        }
    }

    fn stats_from(rows: &[Vec<f64>]) -> MomentStats {
        ObservationMoments::from_rows(rows).unwrap().stats().unwrap()
    }

    #[test]
    fn degenerate_sampler_gives_zero_panel() {
        let data = Dataset::new(vec![(); 4]);
        let panel = simulate_panel(&Zero, &data, 3, Stream::new(1)).unwrap();
        assert!(panel.rows().iter().flatten().all(|&u| u == 0.0));
        assert_eq!(panel.draws_per_obs(), 3);
    }

    #[test]
    fn zero_draws_rejected() {
        let data = Dataset::new(vec![(); 2]);
        assert!(matches!(simulate_panel(&Zero, &data, 0, Stream::new(1)), Err(Error::Parameter(_))));
    }

    #[test]
    fn normal_panel_mean_within_clt_band() {
        let (n, r) = (1000, 100);
        let data = Dataset::new(vec![(); n]);
        let panel = simulate_panel(&Normal, &data, r, Stream::new(5)).unwrap();
        let mean = sample_moments(&Normal, &data, &panel, &[]).unwrap()[0];
        assert!(mean.abs() <= 4.0 / ((n * r) as f64).sqrt());
    }

    #[test]
    fn same_seed_same_panel() {
        let data = Dataset::new(vec![(); 10]);
        let a = simulate_panel(&Normal, &data, 5, Stream::new(9)).unwrap();
        let b = simulate_panel(&Normal, &data, 5, Stream::new(9)).unwrap();
        assert_eq!(a, b);
        let c = simulate_panel(&Normal, &data, 5, Stream::new(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_moments_is_mean() {
        let data = Dataset::new(vec![0.2, 0.4]);
        let panel = simulate_panel(&Table, &data, 1, Stream::new(0)).unwrap();
        assert_abs_diff_eq!(sample_moments(&Table, &data, &panel, &[0.0]).unwrap()[0], 0.3, epsilon = 1e-15);
        let zeros = Dataset::new(vec![0.0; 5]);
        let panel = simulate_panel(&Table, &zeros, 2, Stream::new(0)).unwrap();
        assert_eq!(sample_moments(&Table, &zeros, &panel, &[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn panel_must_conform() {
        let data = Dataset::new(vec![0.2, 0.4]);
        let small = Dataset::new(vec![0.2]);
        let panel = simulate_panel(&Table, &small, 1, Stream::new(0)).unwrap();
        assert!(matches!(
            sample_moments(&Table, &data, &panel, &[0.0]),
            Err(Error::Conformance { panel: 1, data: 2 })
        ));
    }

    #[test]
    fn covariance_uses_divisor_n() {
        let data = Dataset::new(vec![0.0, 2.0]);
        let panel = simulate_panel(&Table, &data, 1, Stream::new(0)).unwrap();
        let m = sample_moments(&Table, &data, &panel, &[0.0]).unwrap();
        let s = covariance(&Table, &data, &panel, &[0.0], &m).unwrap();
        assert_abs_diff_eq!(s[(0, 0)], 1.0, epsilon = 1e-15);

        let same = stats_from(&[vec![1.5, -2.0], vec![1.5, -2.0], vec![1.5, -2.0]]);
        assert!(same.sigma.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn covariance_rejects_single_observation() {
        let data = Dataset::new(vec![1.0]);
        let panel = simulate_panel(&Table, &data, 1, Stream::new(0)).unwrap();
        assert!(matches!(covariance(&Table, &data, &panel, &[0.0], &[1.0]), Err(Error::DegenerateSample(1))));
    }

    #[test]
    fn covariance_of_independent_bernoullis() {
        let n = 100_000;
        let mut rng = Stream::new(3).rng();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![f64::from(rng.random_bool(0.5) as u8), f64::from(rng.random_bool(0.5) as u8)])
            .collect();
        let st = stats_from(&rows);
        let tol = 3.0 / (n as f64).sqrt();
        assert!(st.sigma[(0, 1)].abs() <= tol);
        assert!((st.sigma[(0, 0)] - 0.25).abs() <= tol);
        assert!((st.sigma[(1, 1)] - 0.25).abs() <= tol);
    }

    #[test]
    fn omega_has_unit_diagonal_and_zero_for_degenerate() {
        let st = stats_from(&[vec![1.0, 0.0, 2.0], vec![3.0, 0.0, 1.0], vec![2.0, 0.0, 5.0]]);
        assert_eq!(st.omega[(0, 0)], 1.0);
        assert_eq!(st.omega[(2, 2)], 1.0);
        assert_eq!(st.omega[(1, 1)], 0.0);
        assert_eq!(st.nondegenerate(), vec![0, 2]);
        let sub = st.restrict(&[0, 2]);
        assert_eq!(sub.mbar, vec![st.mbar[0], st.mbar[2]]);
        assert_eq!(sub.sigma[(0, 1)], st.sigma[(0, 2)]);
    }

    #[test]
    fn regularization_inactive_for_identity_correlation() {
        let sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0]));
        let st = MomentStats::new(vec![0.0, 0.0], sigma.clone(), 10);
        assert_eq!(regularized_covariance(&st).unwrap(), sigma);
    }

    #[test]
    fn regularization_for_perfect_correlation() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let st = MomentStats::new(vec![0.0, 0.0], sigma.clone(), 10);
        let reg = regularized_covariance(&st).unwrap();
        let expected = sigma + DMatrix::identity(2, 2) * 0.012;
        assert!((reg - expected).abs().max() < 1e-15);
    }

    #[test]
    fn regularization_matches_direct_formula() {
        // Σ̂ = D^{1/2} Ω D^{1/2} with Ω = [[1, .95, .9], [.95, 1, .9], [.9, .9, 1]].
        // det(Ω) = 1 + 2·.95·.9·.9 − .95² − .9² − .9² = 0.0165 > 0.012 would be
        // inactive, so use ρ12 = .97 giving det(Ω) = 0.005 computed below.
        let (r12, r13, r23) = (0.97f64, 0.9f64, 0.9f64);
        let det = 1.0 + 2.0 * r12 * r13 * r23 - r12 * r12 - r13 * r13 - r23 * r23;
        let sd = [0.5f64, 2.0, 1.5];
        let omega = [[1.0, r12, r13], [r12, 1.0, r23], [r13, r23, 1.0]];
        let sigma = DMatrix::from_fn(3, 3, |a, b| omega[a][b] * sd[a] * sd[b]);
        let st = MomentStats::new(vec![0.0; 3], sigma.clone(), 50);
        let reg = regularized_covariance(&st).unwrap();
        assert!((st.omega.clone().determinant() - det).abs() < 1e-12);
        for a in 0..3 {
            for b in 0..3 {
                let want = sigma[(a, b)] + if a == b { (0.012 - det) * sd[a] * sd[a] } else { 0.0 };
                assert_abs_diff_eq!(reg[(a, b)], want, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn regularization_names_degenerate_moment() {
        let st = stats_from(&[vec![1.0, 4.0], vec![2.0, 4.0]]);
        assert!(matches!(regularized_covariance(&st), Err(Error::DegenerateMoment { index: 1 })));
    }

    #[test]
    fn slackness_arithmetic() {
        let sigma = DMatrix::from_element(1, 1, 1.0);
        let st = MomentStats::new(vec![-0.5], sigma, 100);
        let kappa = (100f64).ln().sqrt();
        assert_abs_diff_eq!(studentized_slackness(&st, kappa).unwrap()[0], -5.0 / kappa, epsilon = 1e-12);
        assert_abs_diff_eq!(kappa, 2.145_966, epsilon = 1e-6);

        let st = MomentStats::new(vec![0.25], DMatrix::from_element(1, 1, 4.0), 256);
        let kappa = 256f64.powf(1.0 / 16.0);
        assert_abs_diff_eq!(studentized_slackness(&st, kappa).unwrap()[0], 2.0 / kappa, epsilon = 1e-12);

        let st = MomentStats::new(vec![0.0, 0.0], DMatrix::identity(2, 2), 9);
        assert_eq!(studentized_slackness(&st, 1.3).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn slackness_rejects_zero_sd_and_bad_kappa() {
        let st = MomentStats::new(vec![0.1], DMatrix::zeros(1, 1), 9);
        assert!(matches!(studentized_slackness(&st, 1.0), Err(Error::DegenerateMoment { index: 0 })));
        let st = MomentStats::new(vec![0.1], DMatrix::identity(1, 1), 9);
        assert!(studentized_slackness(&st, 0.0).is_err());
    }

    #[test]
    fn bootstrap_single_observation() {
        let data = Dataset::new(vec![()]);
        let (a, pa) = bootstrap_resample(&data, &Normal, 4, Stream::new(1)).unwrap();
        let (_, pb) = bootstrap_resample(&data, &Normal, 4, Stream::new(2)).unwrap();
        assert_eq!(a.len(), 1);
        assert_ne!(pa, pb);
    }

    #[test]
    fn bootstrap_index_frequencies_are_uniform() {
        let (n, reps) = (5usize, 10_000usize);
        let mut counts = [0usize; 5];
        for b in 0..reps {
            for i in resample_indices(n, Stream::new(4).child(b as u64)) {
                counts[i] += 1;
            }
        }
        let total = (n * reps) as f64;
        let se = (0.2 * 0.8 / total).sqrt();
        for c in counts {
            assert!((c as f64 / total - 0.2).abs() <= 3.0 * se, "{counts:?}");
        }
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let data = Dataset::new((0..8).map(f64::from).collect::<Vec<_>>());
        let a = bootstrap_resample(&data, &Table, 2, Stream::new(77)).unwrap();
        let b = bootstrap_resample(&data, &Table, 2, Stream::new(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_simulator_matches_panel_path() {
        let data = Dataset::new(vec![(); 6]);
        let stream = Stream::new(21);
        let panel = simulate_panel(&Normal, &data, 3, stream).unwrap();
        let direct = observation_moments(&Normal, &data, &panel, &[]).unwrap();
        let sim = KernelSimulator::new(&Normal, &data, &[]);
        assert_eq!(sim.simulate_all(3, stream), direct);

        let (resampled, bpanel) = bootstrap_resample(&data, &Normal, 3, stream).unwrap();
        let bdirect = observation_moments(&Normal, &resampled, &bpanel, &[]).unwrap();
        assert_eq!(sim.bootstrap_rows(3, stream), bdirect);

        let (mean, var) = sim.bootstrap_summary(3, stream, true);
        let want = bdirect.mean();
        assert_abs_diff_eq!(mean[0], want[0], epsilon = 1e-14);
        assert_abs_diff_eq!(var[0], bdirect.variances(&want)[0], epsilon = 1e-14);
    }

    #[test]
    fn permutation_invariant_covariance() {
        let rows = vec![vec![1.0, 0.3], vec![-0.5, 2.0], vec![0.7, -1.1], vec![2.2, 0.0]];
        let mut perm = rows.clone();
        perm.rotate_left(1);
        perm.swap(0, 2);
        let a = stats_from(&rows).sigma;
        let b = stats_from(&perm).sigma;
        assert!((a - b).abs().max() < 1e-14);
    }
}
