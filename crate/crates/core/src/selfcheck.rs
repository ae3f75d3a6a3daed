//! Fast invariant checks with fixed seeds, shared by the command-line
//! `selfcheck` and the test suite.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::Result;
use crate::index::{self, IndexKind, IndexSpec};
use crate::models::entry::{in_identified_set, EntryConfig, THETA_UPPER};
use crate::stream::{Stream, StreamRng};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub detail: String,
}

fn vector(rng: &mut StreamRng, j: usize, scale: f64) -> Vec<f64> {
    (0..j).map(|_| rng.random_range(-scale..scale)).collect()
}

fn sd_vector(rng: &mut StreamRng, j: usize) -> Vec<f64> {
    (0..j).map(|_| rng.random_range(0.2..3.0)).collect()
}

fn spd(rng: &mut StreamRng, j: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(j, j, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(j, j) * 0.1
}

/// `0 ≤ S_μ − S ≤ βμ` for `SumPlus` and `MaxPlus`, and
/// `0 ≤ min m − softmin_μ(m) ≤ μ ln J`, on `count` random inputs each.
pub fn approximation_bounds(count: usize, stream: Stream) -> Check {
    let mut rng = stream.rng();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..count {
        let j = rng.random_range(1..=12);
        let mu = 10f64.powf(rng.random_range(-3.0..0.5));
        let m = vector(&mut rng, j, 3.0);
        let sd = sd_vector(&mut rng, j);
        for kind in [IndexKind::SumPlus, IndexKind::MaxPlus] {
            let beta = IndexSpec::new(kind, j).beta();
            let gap = index::eval_s_mu_sd(kind, &m, &sd, mu).0 - index::eval_s_sd(kind, &m, &sd);
            worst = worst.max(-gap).max(gap - beta * mu);
        }
        let low = m.iter().copied().fold(f64::INFINITY, f64::min);
        let gap = low - index::soft_min_value(&m, mu);
        worst = worst.max(-gap).max(gap - mu * (j as f64).ln());
    }
    Check { name: "smoothing error within beta*mu", passed: worst <= 1e-12, detail: format!("max violation {worst:.3e}") }
}

/// Analytic gradients of the smooth indices against central differences.
pub fn gradients(count: usize, stream: Stream) -> Result<Check> {
    let mut rng = stream.rng();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let j = rng.random_range(1..=6);
        let mu = rng.random_range(0.2..1.0);
        let m = vector(&mut rng, j, 2.0);
        let sigma = spd(&mut rng, j);
        for kind in [IndexKind::SumPlus, IndexKind::MaxPlus, IndexKind::SoftMinBoundary, IndexKind::Qlr] {
            let spec = IndexSpec::new(kind, j);
            worst = worst.max(index::gradient_check(&spec, &m, &sigma, mu, 1e-5)?);
        }
    }
    Ok(Check { name: "gradient matches finite differences", passed: worst <= 1e-6, detail: format!("max relative error {worst:.3e}") })
}

/// Active-set projection statistic against subset enumeration for `J ≤ 3`.
pub fn qlr_oracle(count: usize, stream: Stream) -> Result<Check> {
    let mut rng = stream.rng();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let j = rng.random_range(1..=3);
        let m = vector(&mut rng, j, 3.0);
        let sigma = spd(&mut rng, j);
        let a = index::qlr(&m, &sigma)?;
        let b = index::qlr_enumerate(&m, &sigma)?;
        worst = worst.max((a - b).abs() / b.abs().max(1.0));
    }
    Ok(Check { name: "projection statistic matches enumeration", passed: worst <= 1e-8, detail: format!("max difference {worst:.3e}") })
}

/// `S(a m) = a^χ S(m)` for `a > 0`.
pub fn homogeneity(count: usize, stream: Stream) -> Result<Check> {
    let mut rng = stream.rng();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let j = rng.random_range(1..=6);
        let a = rng.random_range(0.1..10.0);
        let m = vector(&mut rng, j, 3.0);
        let sigma = spd(&mut rng, j);
        let scaled: Vec<f64> = m.iter().map(|v| a * v).collect();
        for kind in [IndexKind::SumPlus, IndexKind::MaxPlus, IndexKind::SoftMinBoundary, IndexKind::Qlr, IndexKind::SumPlusSq] {
            let spec = IndexSpec::new(kind, j);
            let base = index::eval_s(&spec, &m, &sigma)?;
            let expect = a.powi(i32::from(spec.params.chi)) * base;
            let got = index::eval_s(&spec, &scaled, &sigma)?;
            worst = worst.max((got - expect).abs() / expect.abs().max(1.0));
        }
    }
    Ok(Check { name: "index is homogeneous of degree chi", passed: worst <= 1e-12, detail: format!("max relative error {worst:.3e}") })
}

/// `‖∇S_μ(m) − ∇S_μ(m')‖ ≤ (α/μ)‖m − m'‖` for the smooth maximum with unit scales.
pub fn max_plus_lipschitz(count: usize, stream: Stream) -> Check {
    let mut rng = stream.rng();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let j = rng.random_range(1..=10);
        let mu = 10f64.powf(rng.random_range(-2.0..0.5));
        let sd = vec![1.0; j];
        let m = vector(&mut rng, j, 2.0);
        let other: Vec<f64> = m.iter().map(|v| v + rng.random_range(-0.5..0.5) * mu).collect();
        let (_, g1) = index::eval_s_mu_sd(IndexKind::MaxPlus, &m, &sd, mu);
        let (_, g2) = index::eval_s_mu_sd(IndexKind::MaxPlus, &other, &sd, mu);
        let dg = g1.iter().zip(&g2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let dm = m.iter().zip(&other).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let alpha = IndexSpec::new(IndexKind::MaxPlus, j).params.alpha;
        if dm > 0.0 {
            worst = worst.max(dg / (alpha / mu * dm));
        }
    }
    Check { name: "smooth max gradient is alpha/mu Lipschitz", passed: worst <= 1.0 + 1e-9, detail: format!("max ratio {worst:.4}") }
}

/// The entry-game extreme point passes the population membership test and
/// a point just above it fails.
pub fn boundary_membership() -> Check {
    let cfg = EntryConfig::default();
    let inside = in_identified_set(&cfg, &THETA_UPPER);
    let outside = in_identified_set(&cfg, &[THETA_UPPER[0], THETA_UPPER[1] + 0.01]);
    Check {
        name: "identified-set boundary",
        passed: inside && !outside,
        detail: format!("upper point member {inside}, shifted point member {outside}"),
    }
}

/// Every check at the sizes used by the command-line `selfcheck`.
pub fn run_all() -> Result<Vec<Check>> {
    let root = Stream::new(0x5e1f);
    Ok(vec![
        approximation_bounds(10_000, root.child(1)),
        gradients(200, root.child(2))?,
        qlr_oracle(100, root.child(3))?,
        homogeneity(1_000, root.child(4))?,
        max_plus_lipschitz(1_000, root.child(5)),
        boundary_membership(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_all().unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
