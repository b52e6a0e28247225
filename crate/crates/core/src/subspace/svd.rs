//! Thin SVD by one-sided Jacobi rotations.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;
const ORTH_TOL: f64 = 1e-15;
/// Columns whose norm falls below this fraction of the largest one are
/// treated as numerically zero and get a completed left singular vector.
const NULL_REL: f64 = 1e-13;

/// `M = U diag(sigma) V^T` with `r = min(rows, cols)` columns in `U` and `V`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Array2<f64>,
    pub sigma: Array1<f64>,
    pub v: Array2<f64>,
}

impl SvdResult {
    pub fn rank_capacity(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> Array2<f64> {
        let us = &self.u * &self.sigma;
        us.dot(&self.v.t())
    }
}

pub fn thin_svd(m: &Array2<f64>) -> Result<SvdResult> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("SVD of an empty matrix".into()));
    }
    if let Some(((i, j), _)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(format!("matrix entry ({i}, {j})")));
    }
    if rows >= cols {
        let (u, sigma, v) = jacobi_tall(m.view());
        Ok(SvdResult { u, sigma, v })
    } else {
        // M^T = U' S V'^T  =>  M = V' S U'^T
        let (u_t, sigma, v_t) = jacobi_tall(m.t());
        Ok(SvdResult {
            u: v_t,
            sigma,
            v: u_t,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

/// Hestenes one-sided Jacobi for a matrix with `rows >= cols`.
fn jacobi_tall(a: ndarray::ArrayView2<f64>) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    let (m, n) = a.dim();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j).to_vec()).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= ORTH_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = vcols.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let smax = norms[order[0]];

    let mut u = Array2::<f64>::zeros((m, n));
    let mut v = Array2::<f64>::zeros((n, n));
    let mut sigma = Array1::<f64>::zeros(n);
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        sigma[k] = norms[j];
        for i in 0..n {
            v[[i, k]] = vcols[j][i];
        }
        if norms[j] > NULL_REL * smax && norms[j] > 0.0 {
            let col: Vec<f64> = cols[j].iter().map(|x| x / norms[j]).collect();
            accepted.push(col);
        } else {
            deficient.push(k);
            accepted.push(Vec::new());
        }
    }
    complete_basis(&mut accepted, &deficient, m);
    for (k, col) in accepted.iter().enumerate() {
        for i in 0..m {
            u[[i, k]] = col[i];
        }
    }
    (u, sigma, v)
}

/// Fills the `deficient` slots with unit vectors orthogonal to every other slot.
fn complete_basis(basis: &mut [Vec<f64>], deficient: &[usize], m: usize) {
    let mut next_axis = 0;
    for &slot in deficient {
        while next_axis < m {
            let mut e = vec![0.0; m];
            e[next_axis] = 1.0;
            next_axis += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for b in basis.iter().filter(|b| !b.is_empty()) {
                    let d = dot(&e, b);
                    e.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 0.5 {
                e.iter_mut().for_each(|x| *x /= norm);
                basis[slot] = e;
                break;
            }
        }
    }
}
