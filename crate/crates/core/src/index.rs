//! Index functions `S(m, Σ)` and their μ-smooth approximations.
//!
//! Studentized kinds divide `m_j` by `σ_j = √Σ_jj`. The smooth versions satisfy
//! `|S_μ − S| ≤ βμ` with the constants carried in [`SmoothParams`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexKind {
    /// `Σ_j [m_j/σ_j]₊`
    SumPlus,
    /// `max_j {m_j/σ_j}₊`
    MaxPlus,
    /// `min_j m_j`, smoothed by a soft minimum. Not studentized.
    SoftMinBoundary,
    /// `min_{t ≤ 0} (m − t)'Σ⁻¹(m − t)`
    Qlr,
    /// `Σ_j ([m_j/σ_j]₊)²`
    SumPlusSq,
}

/// Constants of a μ-smooth approximation: the gradient of `S_μ` is
/// `(K + α/μ)`-Lipschitz and `|S_μ − S| ≤ βμ`. `chi` is the homogeneity degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothParams {
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
    pub chi: u8,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexSpec {
    pub kind: IndexKind,
    pub params: SmoothParams,
}

impl IndexSpec {
    /// Spec for `j` moments with the standard smoothing constants.
    ///
    /// `Qlr` carries `beta = ∞`: its smoothing error is proportional to the
    /// statistic itself and has no uniform bound. `SumPlusSq` is already
    /// differentiable and is never smoothed, so `beta = 0`.
    pub fn new(kind: IndexKind, j: usize) -> Self {
        let jf = j as f64;
        let params = match kind {
            IndexKind::SumPlus => SmoothParams { alpha: jf, beta: jf * std::f64::consts::LN_2, k: 0.0, chi: 1 },
            IndexKind::MaxPlus => SmoothParams { alpha: 1.0, beta: (jf + 1.0).ln(), k: 0.0, chi: 1 },
            IndexKind::SoftMinBoundary => SmoothParams { alpha: 1.0, beta: jf.ln(), k: 0.0, chi: 1 },
            IndexKind::Qlr => SmoothParams { alpha: 0.0, beta: f64::INFINITY, k: 0.0, chi: 2 },
            IndexKind::SumPlusSq => SmoothParams { alpha: 0.0, beta: 0.0, k: 0.0, chi: 2 },
        };
        Self { kind, params }
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothEval {
    pub value: f64,
    /// `∂S_μ/∂m` at fixed `Σ`.
    pub gradient: Vec<f64>,
    pub mu: f64,
}

fn check_dims(m: &[f64], sigma: &DMatrix<f64>) -> Result<()> {
    if sigma.nrows() != m.len() || sigma.ncols() != m.len() {
        return Err(Error::Parameter(format!(
            "moment vector has length {} but Sigma is {}x{}",
            m.len(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    Ok(())
}

/// `σ_j = √Σ_jj`, rejecting nonpositive variances.
pub fn standard_deviations(sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    (0..sigma.nrows())
        .map(|j| {
            let v = sigma[(j, j)];
            if v > 0.0 && v.is_finite() {
                Ok(v.sqrt())
            } else {
                Err(Error::DegenerateMoment { index: j })
            }
        })
        .collect()
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("smoothing parameter must be positive, got {mu}")))
    }
}

/// Exact index `S(m, Σ)`.
pub fn eval_s(spec: &IndexSpec, m: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    check_dims(m, sigma)?;
    match spec.kind {
        IndexKind::Qlr => qlr(m, sigma),
        IndexKind::SoftMinBoundary => Ok(m.iter().copied().fold(f64::INFINITY, f64::min)),
        kind => {
            let sd = standard_deviations(sigma)?;
            Ok(eval_s_sd(kind, m, &sd))
        }
    }
}

/// Exact index for the diagonal kinds given standard deviations directly.
///
/// # Panics
/// On `Qlr`, which needs the full matrix.
pub fn eval_s_sd(kind: IndexKind, m: &[f64], sd: &[f64]) -> f64 {
    let z = m.iter().zip(sd).map(|(a, s)| a / s);
    match kind {
        IndexKind::SumPlus => z.map(|v| v.max(0.0)).sum(),
        IndexKind::MaxPlus => z.fold(0.0, f64::max),
        IndexKind::SumPlusSq => z.map(|v| v.max(0.0).powi(2)).sum(),
        IndexKind::SoftMinBoundary => m.iter().copied().fold(f64::INFINITY, f64::min),
        IndexKind::Qlr => panic!("Qlr needs the full covariance matrix"),
    }
}

/// μ-smooth approximation `S_μ(m, Σ)` with its gradient in `m`.
pub fn eval_s_mu(spec: &IndexSpec, m: &[f64], sigma: &DMatrix<f64>, mu: f64) -> Result<SmoothEval> {
    check_mu(mu)?;
    check_dims(m, sigma)?;
    match spec.kind {
        IndexKind::Qlr => {
            let (value, gradient) = qlr_dual(m, sigma, (1.0 + 2.0 * mu) / 4.0)?;
            Ok(SmoothEval { value, gradient, mu })
        }
        IndexKind::SoftMinBoundary => {
            let (value, gradient) = soft_min(m, mu);
            Ok(SmoothEval { value, gradient, mu })
        }
        kind => {
            let sd = standard_deviations(sigma)?;
            let (value, gradient) = eval_s_mu_sd(kind, m, &sd, mu);
            Ok(SmoothEval { value, gradient, mu })
        }
    }
}

/// Smooth index for the diagonal kinds given standard deviations directly.
///
/// # Panics
/// On `Qlr`, which needs the full matrix.
pub fn eval_s_mu_sd(kind: IndexKind, m: &[f64], sd: &[f64], mu: f64) -> (f64, Vec<f64>) {
    match kind {
        IndexKind::SumPlus => {
            let mut value = 0.0;
            let gradient = m
                .iter()
                .zip(sd)
                .map(|(a, s)| {
                    let x = a / (mu * s);
                    value += mu * softplus(x);
                    logistic(x) / s
                })
                .collect();
            (value, gradient)
        }
        IndexKind::MaxPlus => {
            let x: Vec<f64> = m.iter().zip(sd).map(|(a, s)| a / (mu * s)).collect();
            let top = x.iter().copied().fold(0.0, f64::max);
            let w: Vec<f64> = x.iter().map(|v| (v - top).exp()).collect();
            let total = w.iter().sum::<f64>() + (-top).exp();
            let value = mu * (top + total.ln());
            let gradient = w.iter().zip(sd).map(|(wi, s)| wi / total / s).collect();
            (value, gradient)
        }
        IndexKind::SoftMinBoundary => soft_min(m, mu),
        IndexKind::SumPlusSq => {
            let value = eval_s_sd(kind, m, sd);
            let gradient = m.iter().zip(sd).map(|(a, s)| 2.0 * (a / s).max(0.0) / s).collect();
            (value, gradient)
        }
        IndexKind::Qlr => panic!("Qlr needs the full covariance matrix"),
    }
}

/// `−μ ln Σ_j exp(−m_j/μ)` and its softmax weights.
pub fn soft_min(m: &[f64], mu: f64) -> (f64, Vec<f64>) {
    let low = m.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = m.iter().map(|v| (-(v - low) / mu).exp()).collect();
    let total: f64 = w.iter().sum();
    (low - mu * total.ln(), w.iter().map(|v| v / total).collect())
}

/// Soft-minimum value only, without allocating the weights.
pub fn soft_min_value(m: &[f64], mu: f64) -> f64 {
    let low = m.iter().copied().fold(f64::INFINITY, f64::min);
    let total: f64 = m.iter().map(|v| (-(v - low) / mu).exp()).sum();
    low - mu * total.ln()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Squared Mahalanobis distance from `m` to the nonpositive orthant.
pub fn qlr(m: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    check_dims(m, sigma)?;
    Ok(qlr_dual(m, sigma, 0.25)?.0)
}

/// `max_{u ≥ 0} m'u − c·u'Σu`, returning the value and maximizer `u*`.
///
/// With `c = 1/4` this equals the projection statistic; `u*` is the gradient
/// of the value in `m`.
pub fn qlr_dual(m: &[f64], sigma: &DMatrix<f64>, c: f64) -> Result<(f64, Vec<f64>)> {
    if sigma.clone().cholesky().is_none() {
        return Err(Error::Conditioning);
    }
    if m.iter().all(|&v| v <= 0.0) {
        return Ok((0.0, vec![0.0; m.len()]));
    }
    let q = sigma * (2.0 * c);
    let sol = qp::solve_active_set(&q, m)?;
    Ok(((-sol.objective).max(0.0), sol.x))
}

/// Brute-force projection onto `{t ≤ 0}` by enumerating which coordinates of
/// `t` sit on the boundary. Intended as an independent check of [`qlr`].
pub fn qlr_enumerate(m: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    check_dims(m, sigma)?;
    let j = m.len();
    if j > qp::ENUMERATION_LIMIT {
        return Err(Error::Parameter(format!("enumeration limited to {} moments", qp::ENUMERATION_LIMIT)));
    }
    let inv = sigma.clone().cholesky().ok_or(Error::Conditioning)?.inverse();
    let mut best = f64::INFINITY;
    // `mask` marks coordinates with t_j = 0; the rest are free and optimized.
    for mask in 0u32..(1u32 << j) {
        let bound: Vec<usize> = (0..j).filter(|k| mask >> k & 1 == 1).collect();
        let free: Vec<usize> = (0..j).filter(|k| mask >> k & 1 == 0).collect();
        let mut t = vec![0.0; j];
        if !free.is_empty() {
            // Minimize over t_F with t_B = 0: t_F = m_F + A_FF⁻¹ A_FB m_B.
            let aff = inv.select_rows(&free).select_columns(&free);
            let afb = inv.select_rows(&free).select_columns(&bound);
            let mb = nalgebra::DVector::from_iterator(bound.len(), bound.iter().map(|&k| m[k]));
            let rhs = &afb * mb;
            let Some(ch) = aff.cholesky() else { continue };
            let shift = ch.solve(&rhs);
            for (p, &k) in free.iter().enumerate() {
                t[k] = m[k] + shift[p];
            }
        }
        if t.iter().any(|&v| v > 1e-12) {
            continue;
        }
        let d = nalgebra::DVector::from_iterator(j, (0..j).map(|k| m[k] - t[k].min(0.0)));
        let val = (d.transpose() * &inv * &d)[(0, 0)];
        best = best.min(val);
    }
    Ok(best)
}

/// `S_μ(m, Σ) − S(m, Σ)`.
pub fn approximation_gap(spec: &IndexSpec, m: &[f64], sigma: &DMatrix<f64>, mu: f64) -> Result<f64> {
    Ok(eval_s_mu(spec, m, sigma, mu)?.value - eval_s(spec, m, sigma)?)
}

/// Largest componentwise error between central finite differences of
/// `S_μ` and the analytic gradient, relative to `max(1, |∂_j S_μ|)`.
pub fn gradient_check(spec: &IndexSpec, m: &[f64], sigma: &DMatrix<f64>, mu: f64, h: f64) -> Result<f64> {
    let base = eval_s_mu(spec, m, sigma, mu)?;
    let mut worst = 0.0f64;
    let mut probe = m.to_vec();
    for j in 0..m.len() {
        probe[j] = m[j] + h;
        let up = eval_s_mu(spec, &probe, sigma, mu)?.value;
        probe[j] = m[j] - h;
        let down = eval_s_mu(spec, &probe, sigma, mu)?.value;
        probe[j] = m[j];
        let fd = (up - down) / (2.0 * h);
        let g = base.gradient[j];
        worst = worst.max((fd - g).abs() / g.abs().max(1.0));
    }
    Ok(worst)
}
