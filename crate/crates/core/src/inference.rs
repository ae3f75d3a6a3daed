//! Test statistics, bootstrap critical values and pointwise confidence-set
//! membership.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{self, IndexKind, IndexSpec};
use crate::moments::{
    observation_moments, regularized_covariance, studentized_slackness, Dataset, KernelSimulator,
    MomentModel, MomentStats, ObservationMoments, ObservationSimulator, SimPanel,
};
use crate::stream::{label, Stream};

/// GMS tuning sequence `κ_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KappaRule {
    #[serde(rename = "sqrtLogN")]
    SqrtLogN,
    #[serde(rename = "nPow1over16")]
    NPow1Over16,
}

impl KappaRule {
    pub fn value(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            KappaRule::SqrtLogN => n.ln().sqrt(),
            KappaRule::NPow1Over16 => n.powf(1.0 / 16.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KappaRule::SqrtLogN => "sqrtLogN",
            KappaRule::NPow1Over16 => "nPow1over16",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CvMethod {
    Fixed { c: f64 },
    /// Bootstrap with t-test moment selection `{j : ξ_j ≥ −1}`.
    GmsBootstrap { kappa: KappaRule, b: usize },
    /// Smoothed statistic, recentered bootstrap root plus the bias term `√n μ β`.
    SmoothedBootstrap { mu: f64, b: usize, r2: usize, beta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalValueSpec {
    pub method: CvMethod,
    pub alpha: f64,
}

impl CriticalValueSpec {
    pub fn validate(&self, draws: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        match self.method {
            CvMethod::Fixed { c } if c.is_nan() => Err(Error::Config("fixed critical value is NaN".into())),
            CvMethod::GmsBootstrap { b: 0, .. } | CvMethod::SmoothedBootstrap { b: 0, .. } => {
                Err(Error::Config("bootstrap count must be at least 1".into()))
            }
            CvMethod::SmoothedBootstrap { r2, .. } if r2 <= draws => Err(Error::Config(format!(
                "centering draws R2 = {r2} must exceed the main panel's R = {draws}"
            ))),
            CvMethod::SmoothedBootstrap { mu, .. } if !(mu > 0.0) => {
                Err(Error::Config(format!("mu must be positive, got {mu}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceOutcome {
    pub statistic: f64,
    pub critical_value: f64,
    pub covered: bool,
    /// Selected moments, for GMS critical values.
    pub selected: Option<Vec<usize>>,
}

impl ConfidenceOutcome {
    fn new(statistic: f64, critical_value: f64, selected: Option<Vec<usize>>) -> Self {
        Self { statistic, critical_value, covered: statistic <= critical_value, selected }
    }
}

/// `⌈level·B⌉`-th order statistic (1-based) of `values`.
pub fn quantile(values: &[f64], level: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len();
    let k = ((level * b as f64).ceil() as usize).clamp(1, b);
    Ok(sorted[k - 1])
}

fn scale(n: usize, chi: u8) -> f64 {
    (n as f64).sqrt().powi(i32::from(chi))
}

/// `T = S(√n m̄, Σ̂)`; the projection statistic uses the regularized `Σ̃`.
pub fn test_statistic(spec: &IndexSpec, stats: &MomentStats) -> Result<f64> {
    let rn = (stats.n as f64).sqrt();
    let m: Vec<f64> = stats.mbar.iter().map(|v| rn * v).collect();
    match spec.kind {
        IndexKind::Qlr => index::qlr(&m, &regularized_covariance(stats)?),
        IndexKind::SoftMinBoundary => Ok(index::eval_s_sd(spec.kind, &m, &[])),
        kind => {
            stats.check_nondegenerate()?;
            Ok(index::eval_s_sd(kind, &m, &stats.sd()))
        }
    }
}

/// `T̃ = n^{χ/2} S_μ(m̄, Σ̂)`, the statistic paired with the `√n μ β` bias term.
pub fn smoothed_statistic(spec: &IndexSpec, stats: &MomentStats, mu: f64) -> Result<f64> {
    Ok(scale(stats.n, spec.params.chi) * smooth_value(spec, stats, mu)?)
}

fn smooth_value(spec: &IndexSpec, stats: &MomentStats, mu: f64) -> Result<f64> {
    match spec.kind {
        IndexKind::Qlr => Ok(index::eval_s_mu(spec, &stats.mbar, &regularized_covariance(stats)?, mu)?.value),
        IndexKind::SoftMinBoundary => Ok(index::soft_min_value(&stats.mbar, mu)),
        kind => {
            stats.check_nondegenerate()?;
            Ok(index::eval_s_mu_sd(kind, &stats.mbar, &stats.sd(), mu).0)
        }
    }
}

/// Moments kept by t-test selection: `{j : ξ_j ≥ −1}`.
pub fn gms_selection(stats: &MomentStats, kappa: f64) -> Result<Vec<usize>> {
    let xi = studentized_slackness(stats, kappa)?;
    Ok((0..xi.len()).filter(|&j| xi[j] >= -1.0).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmsCriticalValue {
    pub critical_value: f64,
    pub selected: Vec<usize>,
    /// Bootstrap statistics in replication order; empty when nothing is selected.
    pub roots: Vec<f64>,
}

/// GMS bootstrap critical value.
///
/// Moments are selected on the original sample. Each replication resamples
/// observations and redraws their simulation shocks, forms
/// `Z* = √n (m̄* − m̄)` on the selected moments and evaluates `S` on it,
/// studentized by the bootstrap sample's own scale (`Σ̃*` of the selected
/// block for the projection statistic). Moments with zero bootstrap variance
/// are left out of that replication.
#[allow(clippy::too_many_arguments)]
pub fn gms_bootstrap_cv<S: ObservationSimulator + ?Sized>(
    sim: &S,
    draws: usize,
    stats: &MomentStats,
    spec: &IndexSpec,
    kappa: KappaRule,
    b: usize,
    alpha: f64,
    stream: Stream,
) -> Result<GmsCriticalValue> {
    if b == 0 {
        return Err(Error::Config("bootstrap count must be at least 1".into()));
    }
    if stats.num_moments() != sim.num_moments() {
        return Err(Error::Parameter("moment statistics do not match the simulator".into()));
    }
    let selected = gms_selection(stats, kappa.value(stats.n))?;
    if selected.is_empty() {
        return Ok(GmsCriticalValue { critical_value: 0.0, selected, roots: vec![] });
    }
    let rn = (stats.n as f64).sqrt();
    let base = stream.child(label::BOOTSTRAP);
    let roots = (0..b)
        .into_par_iter()
        .map(|k| {
            let draw = base.child(k as u64);
            if spec.kind == IndexKind::Qlr {
                let rows = sim.bootstrap_rows(draws, draw).select_columns(&selected);
                let boot = rows.sparse_stats()?;
                let keep = boot.nondegenerate();
                if keep.is_empty() {
                    return Ok(0.0);
                }
                let z: Vec<f64> = keep.iter().map(|&c| rn * (boot.mbar[c] - stats.mbar[selected[c]])).collect();
                return index::qlr(&z, &regularized_covariance(&boot.restrict(&keep))?);
            }
            let (mean, var) = sim.bootstrap_summary(draws, draw, true);
            let (z, s): (Vec<f64>, Vec<f64>) = selected
                .iter()
                .filter(|&&j| var[j] > 0.0)
                .map(|&j| (rn * (mean[j] - stats.mbar[j]), var[j].sqrt()))
                .unzip();
            Ok(if spec.kind == IndexKind::SoftMinBoundary {
                index::eval_s_sd(spec.kind, &z, &[])
            } else {
                index::eval_s_sd(spec.kind, &z, &s)
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let critical_value = quantile(&roots, 1.0 - alpha)?;
    Ok(GmsCriticalValue { critical_value, selected, roots })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedCriticalValue {
    /// `c_{1−α} + n^{χ/2} μ β`.
    pub critical_value: f64,
    /// Bootstrap quantile `c_{1−α}` before the bias term.
    pub quantile: f64,
    /// `S_μ` at the centering sample.
    pub center: f64,
    pub roots: Vec<f64>,
}

/// Smoothed bootstrap critical value.
///
/// One centering sample with `r2` draws per observation is simulated once;
/// each replication resamples observations with `draws` fresh shocks and
/// records `√n (S_μ(m̄*, Σ̂*) − S_μ(m̄_{R2}, Σ̂_{R2}))`.
#[allow(clippy::too_many_arguments)]
pub fn smoothed_bootstrap_cv<S: ObservationSimulator + ?Sized>(
    sim: &S,
    draws: usize,
    spec: &IndexSpec,
    mu: f64,
    b: usize,
    r2: usize,
    beta: f64,
    alpha: f64,
    stream: Stream,
) -> Result<SmoothedCriticalValue> {
    if r2 <= draws {
        return Err(Error::Config(format!("centering draws R2 = {r2} must exceed R = {draws}")));
    }
    if b == 0 {
        return Err(Error::Config("bootstrap count must be at least 1".into()));
    }
    if !(mu > 0.0) {
        return Err(Error::Parameter(format!("mu must be positive, got {mu}")));
    }
    if spec.params.chi != 1 {
        return Err(Error::Parameter(
            "smoothed bootstrap needs a degree-one index; quadratic indices are not supported".into(),
        ));
    }
    let n = sim.num_obs();
    let rn = (n as f64).sqrt();
    let studentized = !matches!(spec.kind, IndexKind::SoftMinBoundary);
    let centering = sim.simulate_all(r2, stream.child(label::CENTERING));
    let center = smooth_value(spec, &centering.stats()?, mu)?;
    let base = stream.child(label::BOOTSTRAP);
    let roots = (0..b)
        .into_par_iter()
        .map(|k| {
            let (mean, var) = sim.bootstrap_summary(draws, base.child(k as u64), studentized);
            let value = if studentized {
                if let Some(index) = var.iter().position(|&v| v <= 0.0) {
                    return Err(Error::DegenerateMoment { index });
                }
                let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
                index::eval_s_mu_sd(spec.kind, &mean, &sd, mu).0
            } else {
                index::soft_min_value(&mean, mu)
            };
            Ok(rn * (value - center))
        })
        .collect::<Result<Vec<f64>>>()?;
    let q = quantile(&roots, 1.0 - alpha)?;
    Ok(SmoothedCriticalValue { critical_value: q + rn * mu * beta, quantile: q, center, roots })
}

/// Decides whether the point at which `sim` and `original` were computed lies
/// in the confidence set.
pub fn confidence_membership<S: ObservationSimulator + ?Sized>(
    sim: &S,
    original: &ObservationMoments,
    draws: usize,
    spec: &IndexSpec,
    cv: &CriticalValueSpec,
    stream: Stream,
) -> Result<ConfidenceOutcome> {
    cv.validate(draws)?;
    let stats = original.stats()?;
    match cv.method {
        CvMethod::Fixed { c } => Ok(ConfidenceOutcome::new(test_statistic(spec, &stats)?, c, None)),
        CvMethod::GmsBootstrap { kappa, b } => {
            let t = test_statistic(spec, &stats)?;
            let g = gms_bootstrap_cv(sim, draws, &stats, spec, kappa, b, cv.alpha, stream)?;
            Ok(ConfidenceOutcome::new(t, g.critical_value, Some(g.selected)))
        }
        CvMethod::SmoothedBootstrap { mu, b, r2, beta } => {
            let t = smoothed_statistic(spec, &stats, mu)?;
            let s = smoothed_bootstrap_cv(sim, draws, spec, mu, b, r2, beta, cv.alpha, stream)?;
            Ok(ConfidenceOutcome::new(t, s.critical_value, None))
        }
    }
}

/// [`confidence_membership`] for a kernel model with an explicit panel.
pub fn model_membership<M: MomentModel>(
    theta: &[f64],
    model: &M,
    data: &Dataset<M::Obs>,
    panel: &SimPanel<M::Shock>,
    spec: &IndexSpec,
    cv: &CriticalValueSpec,
    stream: Stream,
) -> Result<ConfidenceOutcome> {
    let original = observation_moments(model, data, panel, theta)?;
    let sim = KernelSimulator::new(model, data, theta);
    confidence_membership(&sim, &original, panel.draws_per_obs(), spec, cv, stream)
}

/// Statistics restricted to the moments with positive variance.
pub fn nondegenerate_part(stats: &MomentStats) -> (Vec<usize>, MomentStats) {
    let keep = stats.nondegenerate();
    let sub = stats.restrict(&keep);
    (keep, sub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::FixedMoments;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand_distr::{Distribution, StandardNormal};

    fn rows(values: &[Vec<f64>]) -> ObservationMoments {
        ObservationMoments::from_rows(values).unwrap()
    }

    fn gaussian_rows(n: usize, j: usize, shift: &[f64], seed: u64) -> ObservationMoments {
        let mut rng = Stream::new(seed).rng();
        let r: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..j).map(|k| { let e: f64 = StandardNormal.sample(&mut rng); shift[k] + e }).collect())
            .collect();
        rows(&r)
    }

    #[test]
    fn quantile_convention() {
        let v = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(quantile(&v, 0.95).unwrap(), 5.0);
        assert_eq!(quantile(&v, 0.6).unwrap(), 3.0);
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&[7.0], 0.95).unwrap(), 7.0);
        assert!(quantile(&[], 0.5).is_err());
    }

    #[test]
    fn statistic_examples() {
        let spec = IndexSpec::new(IndexKind::MaxPlus, 1);
        let st = MomentStats::new(vec![0.1], DMatrix::identity(1, 1), 100);
        assert_abs_diff_eq!(test_statistic(&spec, &st).unwrap(), 1.0, epsilon = 1e-12);
        let st = MomentStats::new(vec![-0.1, -0.3], DMatrix::identity(2, 2), 100);
        assert_eq!(test_statistic(&IndexSpec::new(IndexKind::MaxPlus, 2), &st).unwrap(), 0.0);
    }

    #[test]
    fn qlr_statistic_uses_regularized_covariance() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.999, 0.999, 1.0]);
        let st = MomentStats::new(vec![0.05, -0.02], sigma, 400);
        let reg = regularized_covariance(&st).unwrap();
        let direct = index::qlr(&[1.0, -0.4], &reg).unwrap();
        let t = test_statistic(&IndexSpec::new(IndexKind::Qlr, 2), &st).unwrap();
        assert_abs_diff_eq!(t, direct, epsilon = 1e-10);
    }

    #[test]
    fn deeply_slack_moments_give_zero_cv() {
        let data = gaussian_rows(200, 3, &[-5.0, -5.0, -5.0], 1);
        let sim = FixedMoments::new(&data);
        let st = data.stats().unwrap();
        let spec = IndexSpec::new(IndexKind::MaxPlus, 3);
        let g = gms_bootstrap_cv(&sim, 1, &st, &spec, KappaRule::SqrtLogN, 50, 0.05, Stream::new(2)).unwrap();
        assert_eq!(g.critical_value, 0.0);
        assert!(g.selected.is_empty());
    }

    #[test]
    fn single_bootstrap_draw_is_its_own_quantile() {
        let data = gaussian_rows(100, 2, &[0.0, 0.0], 3);
        let sim = FixedMoments::new(&data);
        let st = data.stats().unwrap();
        let spec = IndexSpec::new(IndexKind::MaxPlus, 2);
        let g = gms_bootstrap_cv(&sim, 1, &st, &spec, KappaRule::SqrtLogN, 1, 0.05, Stream::new(4)).unwrap();
        assert_eq!(g.roots.len(), 1);
        assert_eq!(g.critical_value, g.roots[0]);
    }

    #[test]
    fn gms_matches_limit_law_at_least_favorable_point() {
        // Two moments with correlation 0.5, both binding. One B = 1000 run has
        // a spread of about 0.07, so the check is on the mean of eight samples.
        let (n, rho) = (1000usize, 0.5f64);
        let spec = IndexSpec::new(IndexKind::MaxPlus, 2);
        let samples = 8;
        let mut cvs = vec![];
        for s in 0..samples {
            let mut rng = Stream::new(10).child(s).rng();
            let r: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let a: f64 = StandardNormal.sample(&mut rng);
                    let e: f64 = StandardNormal.sample(&mut rng);
                    vec![a, rho * a + (1.0 - rho * rho).sqrt() * e]
                })
                .collect();
            let mut data = rows(&r);
            let mean = data.mean();
            for i in 0..n {
                for (v, m) in data.row_mut(i).iter_mut().zip(&mean) {
                    *v -= m;
                }
            }
            let sim = FixedMoments::new(&data);
            let st = data.stats().unwrap();
            let g = gms_bootstrap_cv(&sim, 1, &st, &spec, KappaRule::SqrtLogN, 1000, 0.05, Stream::new(11).child(s))
                .unwrap();
            cvs.push(g.critical_value);
        }

        // Oracle: 95% quantile of max{Z1, Z2, 0} with corr 0.5 by direct simulation.
        let mut orng = Stream::new(12).rng();
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut orng);
                let e: f64 = StandardNormal.sample(&mut orng);
                a.max(rho * a + (1.0 - rho * rho).sqrt() * e).max(0.0)
            })
            .collect();
        let oracle = quantile(&draws, 0.95).unwrap();
        let mean = cvs.iter().sum::<f64>() / samples as f64;
        assert!((mean - oracle).abs() <= 0.08, "{mean} vs {oracle}");
        assert!(cvs.iter().all(|c| (c - oracle).abs() <= 0.3), "{cvs:?}");
    }

    #[test]
    fn enlarging_selection_never_lowers_max_cv() {
        let data = gaussian_rows(300, 4, &[0.0, 0.0, -0.3, -0.3], 20);
        let sim = FixedMoments::new(&data);
        let st = data.stats().unwrap();
        let spec = IndexSpec::new(IndexKind::MaxPlus, 4);
        // A small κ selects fewer moments than a large one on the same draws.
        let small = cv_with_kappa(&sim, &st, &spec, 0.5);
        let large = cv_with_kappa(&sim, &st, &spec, 50.0);
        assert!(small.0.len() <= large.0.len());
        assert!(small.1 <= large.1);
    }

    fn cv_with_kappa(sim: &FixedMoments, st: &MomentStats, spec: &IndexSpec, kappa: f64) -> (Vec<usize>, f64) {
        let selected = gms_selection(st, kappa).unwrap();
        let rn = (st.n as f64).sqrt();
        let sd = st.sd();
        let base = Stream::new(21).child(label::BOOTSTRAP);
        let roots: Vec<f64> = (0..200)
            .map(|k| {
                let (mean, _) = sim.bootstrap_summary(1, base.child(k), false);
                let z: Vec<f64> = selected.iter().map(|&j| rn * (mean[j] - st.mbar[j])).collect();
                let s: Vec<f64> = selected.iter().map(|&j| sd[j]).collect();
                index::eval_s_sd(spec.kind, &z, &s)
            })
            .collect();
        let cv = if selected.is_empty() { 0.0 } else { quantile(&roots, 0.95).unwrap() };
        (selected, cv)
    }

    #[test]
    fn smoothed_cv_adds_bias_term() {
        // Constant data: every root is zero, so cv is exactly the bias term.
        let data = rows(&vec![vec![0.2, 0.4]; 100]);
        let sim = FixedMoments::new(&data);
        let spec = IndexSpec::new(IndexKind::SoftMinBoundary, 2);
        let s = smoothed_bootstrap_cv(&sim, 1, &spec, 0.02, 20, 5, 2f64.ln(), 0.05, Stream::new(1)).unwrap();
        assert_abs_diff_eq!(s.quantile, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.critical_value, 10.0 * 0.02 * 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(1.5 + 10.0 * 0.02 * 2f64.ln(), 1.6386, epsilon = 1e-4);
    }

    #[test]
    fn smoothed_cv_rejects_small_r2() {
        let data = rows(&vec![vec![0.2]; 10]);
        let sim = FixedMoments::new(&data);
        let spec = IndexSpec::new(IndexKind::MaxPlus, 1);
        let r = smoothed_bootstrap_cv(&sim, 5, &spec, 0.02, 20, 5, 1.0, 0.05, Stream::new(1));
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn smoothed_cv_at_least_quantile() {
        let data = gaussian_rows(200, 3, &[0.0, 0.1, -0.2], 5);
        let sim = FixedMoments::new(&data);
        let spec = IndexSpec::new(IndexKind::MaxPlus, 3);
        let s = smoothed_bootstrap_cv(&sim, 1, &spec, 0.05, 100, 2, spec.beta(), 0.05, Stream::new(6)).unwrap();
        assert!(s.critical_value >= s.quantile);
    }

    #[test]
    fn fixed_cv_membership() {
        let data = gaussian_rows(100, 2, &[0.5, -1.0], 7);
        let sim = FixedMoments::new(&data);
        let spec = IndexSpec::new(IndexKind::MaxPlus, 2);
        let inf = CriticalValueSpec { method: CvMethod::Fixed { c: f64::INFINITY }, alpha: 0.05 };
        assert!(confidence_membership(&sim, &data, 1, &spec, &inf, Stream::new(1)).unwrap().covered);
        let zero = CriticalValueSpec { method: CvMethod::Fixed { c: 0.0 }, alpha: 0.05 };
        let out = confidence_membership(&sim, &data, 1, &spec, &zero, Stream::new(1)).unwrap();
        assert!(!out.covered);
        assert_eq!(out.covered, out.statistic <= out.critical_value);
    }

    #[test]
    fn membership_is_scale_invariant_and_deterministic() {
        let data = gaussian_rows(150, 3, &[0.05, -0.1, 0.0], 8);
        let scaled = data.scaled(3.5);
        let spec = IndexSpec::new(IndexKind::MaxPlus, 3);
        let cv = CriticalValueSpec { method: CvMethod::GmsBootstrap { kappa: KappaRule::SqrtLogN, b: 200 }, alpha: 0.05 };
        let a = confidence_membership(&FixedMoments::new(&data), &data, 1, &spec, &cv, Stream::new(9)).unwrap();
        let b = confidence_membership(&FixedMoments::new(&scaled), &scaled, 1, &spec, &cv, Stream::new(9)).unwrap();
        assert_eq!(a.selected, b.selected);
        assert_eq!(a.covered, b.covered);
        assert!((a.statistic - b.statistic).abs() < 1e-10 && (a.critical_value - b.critical_value).abs() < 1e-10);
        let again = confidence_membership(&FixedMoments::new(&data), &data, 1, &spec, &cv, Stream::new(9)).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn kappa_rules() {
        assert_abs_diff_eq!(KappaRule::SqrtLogN.value(100), 100f64.ln().sqrt());
        assert_abs_diff_eq!(KappaRule::NPow1Over16.value(256), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn thread_count_does_not_change_roots() {
        let data = gaussian_rows(120, 2, &[0.0, 0.0], 30);
        let sim = FixedMoments::new(&data);
        let st = data.stats().unwrap();
        let spec = IndexSpec::new(IndexKind::MaxPlus, 2);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                gms_bootstrap_cv(&sim, 1, &st, &spec, KappaRule::SqrtLogN, 64, 0.05, Stream::new(31)).unwrap()
            })
        };
        assert_eq!(run(1), run(3));
    }
}
