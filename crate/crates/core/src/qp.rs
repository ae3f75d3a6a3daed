//! Nonnegatively constrained quadratic programs
//! `min ½ x'Qx − b'x  s.t.  x ≥ 0` with symmetric positive definite `Q`.
//!
//! Three solvers share the problem: a primal active-set method used in the hot
//! paths, exhaustive support enumeration for small problems, and projected
//! gradient with momentum restarts.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest dimension accepted by [`solve_enumerate`].
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// Objective `½ x'Qx − b'x` at `x`.
    pub objective: f64,
    pub iterations: usize,
}

pub fn objective(q: &DMatrix<f64>, b: &[f64], x: &[f64]) -> f64 {
    let n = b.len();
    let mut quad = 0.0;
    for i in 0..n {
        if x[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..n {
            row += q[(i, j)] * x[j];
        }
        quad += x[i] * row;
    }
    0.5 * quad - b.iter().zip(x).map(|(a, c)| a * c).sum::<f64>()
}

/// Natural KKT residual `max_j |min(x_j, (Qx − b)_j)|`, zero exactly at the optimum.
pub fn kkt_residual(q: &DMatrix<f64>, b: &[f64], x: &[f64]) -> f64 {
    let g = gradient(q, b, x);
    x.iter().zip(&g).map(|(xi, gi)| xi.min(*gi).abs()).fold(0.0, f64::max)
}

fn gradient(q: &DMatrix<f64>, b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = b.len();
    (0..n)
        .map(|i| (0..n).map(|j| q[(i, j)] * x[j]).sum::<f64>() - b[i])
        .collect()
}

fn check(q: &DMatrix<f64>, b: &[f64]) -> Result<()> {
    if q.nrows() != b.len() || q.ncols() != b.len() {
        return Err(Error::Parameter(format!(
            "quadratic form is {}x{} but the linear term has length {}",
            q.nrows(),
            q.ncols(),
            b.len()
        )));
    }
    if b.iter().chain(q.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Parameter("non-finite quadratic program input".into()));
    }
    Ok(())
}

/// Solves the unconstrained problem restricted to the coordinates in `set`.
fn solve_face(q: &DMatrix<f64>, b: &[f64], set: &[usize]) -> Result<Vec<f64>> {
    let sub = q.select_rows(set).select_columns(set);
    let rhs = DVector::from_iterator(set.len(), set.iter().map(|&i| b[i]));
    let chol = sub.cholesky().ok_or(Error::Conditioning)?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Primal active-set method in the style of Lawson and Hanson.
pub fn solve_active_set(q: &DMatrix<f64>, b: &[f64]) -> Result<QpSolution> {
    check(q, b)?;
    let n = b.len();
    let scale = q.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0)
        * b.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-13 * scale;
    let mut x = vec![0.0; n];
    let mut passive: Vec<usize> = Vec::new();
    let mut iterations = 0;
    let max_outer = 5 * n + 10;

    for _ in 0..max_outer {
        let g = gradient(q, b, &x);
        let enter = (0..n)
            .filter(|i| !passive.contains(i))
            .filter(|&i| -g[i] > tol)
            .max_by(|&a, &c| (-g[a]).total_cmp(&-g[c]));
        let Some(enter) = enter else {
            return Ok(QpSolution { objective: objective(q, b, &x), x, iterations });
        };
        passive.push(enter);
        passive.sort_unstable();

        loop {
            iterations += 1;
            let z = solve_face(q, b, &passive)?;
            if z.iter().all(|&v| v > 0.0) {
                for (k, &i) in passive.iter().enumerate() {
                    x[i] = z[k];
                }
                break;
            }
            // Move toward z until the first passive coordinate hits zero.
            let mut step = 1.0f64;
            let mut blocking = None;
            for (k, &i) in passive.iter().enumerate() {
                if z[k] <= 0.0 {
                    let ratio = x[i] / (x[i] - z[k]);
                    if blocking.is_none() || ratio < step {
                        step = ratio;
                        blocking = Some(i);
                    }
                }
            }
            for (k, &i) in passive.iter().enumerate() {
                x[i] += step * (z[k] - x[i]);
            }
            if let Some(i) = blocking {
                x[i] = 0.0;
            }
            passive.retain(|&i| x[i] > 0.0);
            for (i, xi) in x.iter_mut().enumerate() {
                if !passive.contains(&i) {
                    *xi = 0.0;
                }
            }
            if passive.is_empty() {
                break;
            }
        }
    }
    Err(Error::Conditioning)
}

/// Exhaustive search over supports. Exact up to linear-solve rounding.
pub fn solve_enumerate(q: &DMatrix<f64>, b: &[f64]) -> Result<QpSolution> {
    check(q, b)?;
    let n = b.len();
    if n > ENUMERATION_LIMIT {
        return Err(Error::Parameter(format!(
            "support enumeration supports at most {ENUMERATION_LIMIT} coordinates, got {n}"
        )));
    }
    let mut best = QpSolution { x: vec![0.0; n], objective: 0.0, iterations: 0 };
    for mask in 1u32..(1u32 << n) {
        let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        best.iterations += 1;
        let z = solve_face(q, b, &set)?;
        if z.iter().any(|&v| v < 0.0) {
            continue;
        }
        let mut x = vec![0.0; n];
        for (k, &i) in set.iter().enumerate() {
            x[i] = z[k];
        }
        let f = objective(q, b, &x);
        if f < best.objective {
            best.objective = f;
            best.x = x;
        }
    }
    Ok(best)
}

/// Accelerated projected gradient with adaptive restarts.
pub fn solve_projected_gradient(
    q: &DMatrix<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<QpSolution> {
    check(q, b)?;
    let n = b.len();
    if n == 0 {
        return Ok(QpSolution { x: vec![], objective: 0.0, iterations: 0 });
    }
    let lip = q.clone().symmetric_eigenvalues().max();
    if !(lip > 0.0) {
        return Err(Error::Conditioning);
    }
    let step = 1.0 / lip;
    let mut x = vec![0.0; n];
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = objective(q, b, &x);
    for it in 1..=max_iter {
        let g = gradient(q, b, &y);
        let next: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| (yi - step * gi).max(0.0)).collect();
        let fnext = objective(q, b, &next);
        if fnext > fx && y != x {
            // Function-value restart.
            t = 1.0;
            y = x.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let w = (t - 1.0) / t_next;
        y = next.iter().zip(&x).map(|(a, c)| (a + w * (a - c)).max(0.0)).collect();
        x = next;
        fx = fnext;
        t = t_next;
        if kkt_residual(q, b, &x) <= tol {
            return Ok(QpSolution { x, objective: fx, iterations: it });
        }
    }
    Err(Error::Conditioning)
}
