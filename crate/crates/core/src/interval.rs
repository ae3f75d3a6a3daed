//! One-sided confidence intervals `(−∞, U]` for `θ ≤ min_j E[f_j]`, the
//! intersection-bounds setting. Inputs are per-observation bound estimates
//! `f̂_j(X_i)`, not moments: the moment is `θ − f̂_j`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::soft_min_value;
use crate::inference::{quantile, KappaRule};
use crate::moments::{ObservationMoments, ObservationSimulator};
use crate::stream::{label, Stream};

/// Closed-form right endpoint rules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EndpointRule {
    /// `min_j f̄_j + c/√n`.
    NaiveFixed { c: f64 },
    /// `min_j (f̄_j + c σ̂_j/√n)`.
    CvCorrected { c: f64 },
    /// `φ_μ(f̄) + c/√n` with `φ_μ` the soft minimum.
    Smoothed { mu: f64, c: f64 },
}

pub fn interval_upper_endpoint(rule: EndpointRule, fbar: &[f64], sd: &[f64], n: usize) -> Result<f64> {
    if fbar.is_empty() {
        return Err(Error::Parameter("interval endpoint needs at least one bound".into()));
    }
    let rn = (n as f64).sqrt();
    Ok(match rule {
        EndpointRule::NaiveFixed { c } => fbar.iter().copied().fold(f64::INFINITY, f64::min) + c / rn,
        EndpointRule::CvCorrected { c } => {
            if sd.len() != fbar.len() {
                return Err(Error::Parameter("bound means and standard deviations differ in length".into()));
            }
            fbar.iter().zip(sd).map(|(f, s)| f + c * s / rn).fold(f64::INFINITY, f64::min)
        }
        EndpointRule::Smoothed { mu, c } => soft_min_value(fbar, mu) + c / rn,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntervalOutcome {
    pub endpoint: f64,
    /// Whether the target point lies in the confidence set.
    pub covered: bool,
    /// Critical value used at the target point.
    pub critical_value: f64,
}

fn bound_summary(original: &ObservationMoments) -> (usize, Vec<f64>, Vec<f64>) {
    let mean = original.mean();
    let sd = original.variances(&mean).iter().map(|v| v.sqrt()).collect();
    (original.n(), mean, sd)
}

/// Interval with a fixed critical value.
pub fn naive_interval(original: &ObservationMoments, c: f64, target: f64) -> Result<IntervalOutcome> {
    let (n, mean, sd) = bound_summary(original);
    let endpoint = interval_upper_endpoint(EndpointRule::NaiveFixed { c }, &mean, &sd, n)?;
    Ok(IntervalOutcome { endpoint, covered: target <= endpoint, critical_value: c })
}

/// Interval from the GMS-style corrected critical value.
///
/// At `θ` the statistic is `max_j √n (θ − f̄_j)/σ̂_j` and the moments kept by
/// the selection are those with `θ ≥ t_j = f̄_j − κ σ̂_j/√n`. The bootstrap
/// root on a kept set `S` is `max_{j∈S} √n (f̄_j − f̄*_j)/σ̂*_j`, so the
/// critical value only changes when `θ` crosses some `t_j`. Sorting the `t_j`
/// gives nested kept sets; on each stretch the confidence set is an
/// interval with a closed-form end, and the endpoint is the largest of them.
#[allow(clippy::too_many_arguments)]
pub fn cv_corrected_interval<S: ObservationSimulator + ?Sized>(
    sim: &S,
    original: &ObservationMoments,
    draws: usize,
    kappa: KappaRule,
    b: usize,
    alpha: f64,
    target: f64,
    stream: Stream,
) -> Result<IntervalOutcome> {
    if b == 0 {
        return Err(Error::Config("bootstrap count must be at least 1".into()));
    }
    let (n, mean, sd) = bound_summary(original);
    let j = mean.len();
    if j == 0 || sim.num_moments() != j {
        return Err(Error::Parameter("bound estimates do not match the simulator".into()));
    }
    if let Some(index) = sd.iter().position(|&s| s <= 0.0) {
        return Err(Error::DegenerateMoment { index });
    }
    let rn = (n as f64).sqrt();
    let k = kappa.value(n);
    let thresholds: Vec<f64> = mean.iter().zip(&sd).map(|(m, s)| m - k * s / rn).collect();
    let mut order: Vec<usize> = (0..j).collect();
    order.sort_by(|&a, &c| thresholds[a].total_cmp(&thresholds[c]).then(a.cmp(&c)));

    let base = stream.child(label::BOOTSTRAP);
    let prefix_max: Vec<Vec<f64>> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let (bm, bv) = sim.bootstrap_summary(draws, base.child(rep as u64), true);
            let mut running = f64::NEG_INFINITY;
            order
                .iter()
                .map(|&c| {
                    if bv[c] <= 0.0 {
                        return Err(Error::DegenerateMoment { index: c });
                    }
                    running = running.max(rn * (mean[c] - bm[c]) / bv[c].sqrt());
                    Ok(running)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    // cv[k] is the critical value when the k smallest thresholds are kept.
    let mut cv = vec![0.0; j + 1];
    let mut column = vec![0.0; b];
    for size in 1..=j {
        for (v, row) in column.iter_mut().zip(&prefix_max) {
            *v = row[size - 1];
        }
        cv[size] = quantile(&column, 1.0 - alpha)?;
    }
    let upper = |c: f64| mean.iter().zip(&sd).map(|(m, s)| m + c * s / rn).fold(f64::INFINITY, f64::min);

    let mut endpoint = f64::NEG_INFINITY;
    for size in 0..=j {
        let lo = if size == 0 { f64::NEG_INFINITY } else { thresholds[order[size - 1]] };
        let hi = if size == j { f64::INFINITY } else { thresholds[order[size]] };
        if lo >= hi {
            continue;
        }
        let u = upper(cv[size]);
        if u >= lo {
            endpoint = endpoint.max(u.min(hi));
        }
    }

    let kept = thresholds.iter().filter(|&&t| t <= target).count();
    let statistic = mean.iter().zip(&sd).map(|(m, s)| rn * (target - m) / s).fold(f64::NEG_INFINITY, f64::max);
    Ok(IntervalOutcome { endpoint, covered: statistic <= cv[kept], critical_value: cv[kept] })
}

/// Interval from the smoothed, bias-corrected bootstrap.
///
/// The root is `√n (φ_μ(f̄_{R2}) − φ_μ(f̄*))` with a centering sample of
/// `r2` draws per observation; the critical value adds `√n μ ln J`.
#[allow(clippy::too_many_arguments)]
pub fn smoothed_interval<S: ObservationSimulator + ?Sized>(
    sim: &S,
    original: &ObservationMoments,
    draws: usize,
    mu: f64,
    b: usize,
    r2: usize,
    alpha: f64,
    target: f64,
    stream: Stream,
) -> Result<IntervalOutcome> {
    if b == 0 {
        return Err(Error::Config("bootstrap count must be at least 1".into()));
    }
    if r2 <= draws {
        return Err(Error::Config(format!("centering draws R2 = {r2} must exceed R = {draws}")));
    }
    if !(mu > 0.0) {
        return Err(Error::Parameter(format!("mu must be positive, got {mu}")));
    }
    let (n, mean, sd) = bound_summary(original);
    let j = mean.len();
    if j == 0 || sim.num_moments() != j {
        return Err(Error::Parameter("bound estimates do not match the simulator".into()));
    }
    let rn = (n as f64).sqrt();
    let centering = sim.simulate_all(r2, stream.child(label::CENTERING)).mean();
    let center = soft_min_value(&centering, mu);
    let base = stream.child(label::BOOTSTRAP);
    let roots: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let (bm, _) = sim.bootstrap_summary(draws, base.child(rep as u64), false);
            rn * (center - soft_min_value(&bm, mu))
        })
        .collect();
    let c = quantile(&roots, 1.0 - alpha)? + rn * mu * (j as f64).ln();
    let endpoint = interval_upper_endpoint(EndpointRule::Smoothed { mu, c }, &mean, &sd, n)?;
    Ok(IntervalOutcome { endpoint, covered: target <= endpoint, critical_value: c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::FixedMoments;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn closed_forms() {
        assert_eq!(interval_upper_endpoint(EndpointRule::NaiveFixed { c: 0.0 }, &[0.5], &[1.0], 10).unwrap(), 0.5);
        let e = interval_upper_endpoint(EndpointRule::CvCorrected { c: 2.0 }, &[0.4, 0.6], &[1.0, 1.0], 100).unwrap();
        assert_abs_diff_eq!(e, 0.6, epsilon = 1e-15);
        let a = 0.37;
        let e = interval_upper_endpoint(EndpointRule::Smoothed { mu: 0.02, c: 0.0 }, &[a, a], &[], 100).unwrap();
        assert_abs_diff_eq!(e, a - 0.02 * 2f64.ln(), epsilon = 1e-14);
        assert!(interval_upper_endpoint(EndpointRule::NaiveFixed { c: 0.0 }, &[], &[], 1).is_err());
    }

    fn gaussian_bounds(n: usize, means: &[f64], seed: u64) -> ObservationMoments {
        let mut rng = Stream::new(seed).rng();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                means
                    .iter()
                    .map(|m| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        m + e
                    })
                    .collect()
            })
            .collect();
        ObservationMoments::from_rows(&rows).unwrap()
    }

    #[test]
    fn cv_endpoint_dominates_naive_with_zero_cv() {
        for seed in 0..5 {
            let rows = gaussian_bounds(200, &[0.0, 0.1, 0.5], seed);
            let sim = FixedMoments::new(&rows);
            let cv = cv_corrected_interval(&sim, &rows, 1, KappaRule::SqrtLogN, 199, 0.05, 0.0, Stream::new(seed)).unwrap();
            let naive = naive_interval(&rows, 0.0, 0.0).unwrap();
            assert!(cv.endpoint >= naive.endpoint);
        }
    }

    #[test]
    fn cv_endpoint_is_boundary_of_membership() {
        // Direct membership: nothing above the endpoint, everything just below it.
        let rows = gaussian_bounds(150, &[0.0, 0.05, 0.3, 0.31], 11);
        let sim = FixedMoments::new(&rows);
        let s = Stream::new(12);
        let e = cv_corrected_interval(&sim, &rows, 1, KappaRule::SqrtLogN, 299, 0.05, 0.0, s).unwrap().endpoint;
        for step in -200..=200 {
            let theta = e + step as f64 * 1e-3;
            let inside = cv_corrected_interval(&sim, &rows, 1, KappaRule::SqrtLogN, 299, 0.05, theta, s).unwrap().covered;
            if (-20..0).contains(&step) {
                assert!(inside, "θ = {theta} below the endpoint {e} is excluded");
            } else if step > 0 {
                assert!(!inside, "θ = {theta} above the endpoint {e} is included");
            }
        }
    }

    #[test]
    fn single_bound_cv_is_one_sided_normal_quantile() {
        // One Gaussian bound: the root is asymptotically N(0,1), so c ≈ 1.645.
        let rows = gaussian_bounds(2000, &[0.0], 21);
        let sim = FixedMoments::new(&rows);
        let out = cv_corrected_interval(&sim, &rows, 1, KappaRule::SqrtLogN, 2000, 0.05, 1.0, Stream::new(22)).unwrap();
        assert!((out.critical_value - 1.645).abs() < 0.12, "{}", out.critical_value);
        let m = rows.mean()[0];
        let sd = rows.variances(&[m])[0].sqrt();
        assert_abs_diff_eq!(out.endpoint, m + out.critical_value * sd / 2000f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn smoothed_endpoint_includes_bias_term() {
        let rows = gaussian_bounds(100, &[0.2, 0.2], 31);
        let sim = FixedMoments::new(&rows);
        // Fixed rows: every bootstrap mean is a resampled mean; with R2 centring
        // equal to the sample, roots are centred at zero.
        let out = smoothed_interval(&sim, &rows, 1, 0.02, 500, 2, 0.05, 0.0, Stream::new(32)).unwrap();
        let fbar = rows.mean();
        let q = out.critical_value - 10.0 * 0.02 * 2f64.ln();
        assert!(q > 0.0);
        assert_abs_diff_eq!(out.endpoint, soft_min_value(&fbar, 0.02) + out.critical_value / 10.0, epsilon = 1e-12);
        assert!(smoothed_interval(&sim, &rows, 2, 0.02, 10, 2, 0.05, 0.0, Stream::new(1)).is_err());
    }

    #[test]
    fn deterministic() {
        let rows = gaussian_bounds(80, &[0.0, 0.2], 41);
        let sim = FixedMoments::new(&rows);
        let a = cv_corrected_interval(&sim, &rows, 1, KappaRule::NPow1Over16, 100, 0.05, 0.1, Stream::new(5)).unwrap();
        let b = cv_corrected_interval(&sim, &rows, 1, KappaRule::NPow1Over16, 100, 0.05, 0.1, Stream::new(5)).unwrap();
        assert_eq!(a, b);
    }
}
