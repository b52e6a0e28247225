//! Independent reference implementations used by the integration tests.
//! None of these call into the code they check, apart from reading model
//! parameters and public data.
#![allow(dead_code, clippy::needless_range_loop)]

use dfsep::masknet::MaskNetModel;
use dfsep::tune::{CandidateTrainer, GammaOutcome, HyperParams, MuOutcome};
use dfsep::Result;
use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(lo..hi))
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_dmatrix(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

pub fn fro(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------- network

/// Loop-based forward pass. Returns the two masked outputs.
pub fn ref_forward(model: &MaskNetModel, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (bins, frames) = x.dim();
    let mut ts = Array2::zeros((bins, frames));
    let mut tn = Array2::zeros((bins, frames));
    for t in 0..frames {
        let mut h: Vec<f64> = (0..bins)
            .map(|i| (x[[i, t]] - model.input_shift[i]) / model.input_scale[i])
            .collect();
        for layer in &model.layers {
            let (out, inp) = layer.weight.dim();
            let mut next = vec![0.0; out];
            for (r, nv) in next.iter_mut().enumerate() {
                let mut z = layer.bias[r];
                for c in 0..inp {
                    z += layer.weight[[r, c]] * h[c];
                }
                *nv = z.max(0.0);
            }
            h = next;
        }
        for i in 0..bins {
            let (a, b) = (h[i], h[bins + i]);
            let m = (a + 1e-12) / (a + b + 2e-12);
            ts[[i, t]] = m * x[[i, t]];
            tn[[i, t]] = (1.0 - m) * x[[i, t]];
        }
    }
    (ts, tn)
}

fn sq_dist(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let mut s = 0.0;
    for (p, q) in a.iter().zip(b) {
        s += (p - q) * (p - q);
    }
    s
}

pub fn ref_joint_loss(model: &MaskNetModel, x: &Array2<f64>, y1: &Array2<f64>, y2: &Array2<f64>, gamma: f64) -> f64 {
    let (t1, t2) = ref_forward(model, x);
    0.5 * (sq_dist(y1, &t1) + sq_dist(y2, &t2) - gamma * sq_dist(y1, &t2) - gamma * sq_dist(y2, &t1))
}

#[allow(clippy::too_many_arguments)]
pub fn ref_df_loss(
    model: &MaskNetModel,
    x: &Array2<f64>,
    ys: &Array2<f64>,
    yn: &Array2<f64>,
    yno: &Array2<f64>,
    mu: f64,
    gamma: f64,
) -> f64 {
    let (ts, tn) = ref_forward(model, x);
    0.5 * (sq_dist(ys, &ts) + mu * sq_dist(yn, &tn) - gamma * sq_dist(&ts, yno))
}

/// Central finite differences of `loss` over the flattened parameters.
pub fn finite_difference(model: &MaskNetModel, loss: impl Fn(&MaskNetModel) -> f64) -> Vec<f64> {
    let base = model.flat_parameters();
    let mut m = model.clone();
    let mut grad = Vec::with_capacity(base.len());
    for k in 0..base.len() {
        let h = 1e-6 * base[k].abs().max(1.0);
        let mut p = base.clone();
        p[k] = base[k] + h;
        m.set_flat_parameters(&p);
        let up = loss(&m);
        p[k] = base[k] - h;
        m.set_flat_parameters(&p);
        let down = loss(&m);
        grad.push((up - down) / (2.0 * h));
    }
    grad
}

/// Largest entrywise relative error, with `floor` guarding near-zero entries.
pub fn max_rel_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- spectra

/// Direct O(N^2) DFT of a real frame, one-sided.
pub fn dft_one_sided(frame: &[f64], n_fft: usize) -> Vec<(f64, f64)> {
    (0..n_fft / 2 + 1)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (n, &v) in frame.iter().enumerate() {
                let ph = -2.0 * std::f64::consts::PI * (k * n) as f64 / n_fft as f64;
                re += v * ph.cos();
                im += v * ph.sin();
            }
            (re, im)
        })
        .collect()
}

pub fn hamming_ref(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

// ---------------------------------------------------------------- subspace

/// Principal subspace via the symmetric eigenproblem of the centred scatter
/// matrix.
pub fn ref_source_basis(ys: &Array2<f64>, fraction: f64) -> DMatrix<f64> {
    let mut c = to_dmatrix(ys);
    for mut row in c.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
    }
    let scatter = &c * c.transpose();
    let eig = scatter.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = vals.iter().sum();
    let mut acc = 0.0;
    let mut d = vals.len();
    for (k, v) in vals.iter().enumerate() {
        acc += v;
        if acc >= fraction * total {
            d = k + 1;
            break;
        }
    }
    DMatrix::from_fn(ys.nrows(), d, |i, j| eig.eigenvectors[(i, order[j])])
}

/// Removes the principal source subspace from `yn` with explicit normal equations.
pub fn ref_find_orth(ys: &Array2<f64>, yn: &Array2<f64>, fraction: f64) -> Array2<f64> {
    let s = ref_source_basis(ys, fraction);
    let n = to_dmatrix(yn);
    let gram = s.transpose() * &s;
    let coeff = gram.lu().solve(&(s.transpose() * &n)).expect("full-rank basis");
    from_dmatrix(&(n - s * coeff))
}

// ---------------------------------------------------------------- bss eval

pub struct RefScore {
    pub sdr: f64,
    pub sir: f64,
    pub sar: f64,
    pub target: DVector<f64>,
    pub interf: DVector<f64>,
    pub artif: DVector<f64>,
}

/// Least squares through the Gram matrix of the references.
pub fn ref_bss(estimate: &[f64], refs: &[Vec<f64>], j: usize) -> RefScore {
    let n = estimate.len();
    let r = DMatrix::from_fn(n, refs.len(), |i, k| refs[k][i]);
    let e = DVector::from_column_slice(estimate);
    let gram = r.transpose() * &r;
    let coeff = gram.lu().solve(&(r.transpose() * &e)).expect("independent references");
    let p_all = &r * coeff;
    let yj = DVector::from_column_slice(&refs[j]);
    let target = &yj * (yj.dot(&e) / yj.dot(&yj));
    let interf = &p_all - &target;
    let artif = &e - &p_all;
    let eps = 1e-30;
    let db = |a: f64, b: f64| 10.0 * (a / (b + eps)).log10();
    RefScore {
        sdr: db(target.norm_squared(), (&interf + &artif).norm_squared()),
        sir: db(target.norm_squared(), interf.norm_squared()),
        sar: db(p_all.norm_squared(), artif.norm_squared()),
        target,
        interf,
        artif,
    }
}

/// Random noise with the span of `refs` removed.
pub fn orthogonal_noise(rng: &mut ChaCha8Rng, refs: &[Vec<f64>], scale: f64) -> Vec<f64> {
    let n = refs[0].len();
    let v: Vec<f64> = random_vec(rng, n);
    let r = DMatrix::from_fn(n, refs.len(), |i, k| refs[k][i]);
    let x = DVector::from_vec(v);
    let gram = r.transpose() * &r;
    let coeff = gram.lu().solve(&(r.transpose() * &x)).unwrap();
    let out = &x - &r * coeff;
    out.iter().map(|v| v * scale).collect()
}

// ---------------------------------------------------------------- statistics

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks, so ties are handled).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    num / (da * db).sqrt()
}

// ---------------------------------------------------------------- tuning

/// Replays fixed ratio sequences instead of training.
pub struct ScriptedTrainer {
    pub re: Vec<f64>,
    pub rs: Vec<f64>,
    pub rn: Vec<f64>,
}

impl CandidateTrainer for ScriptedTrainer {
    fn gamma_candidate(&self, index: usize, _gamma: f64) -> Result<GammaOutcome> {
        Ok(GammaOutcome {
            r_e: self.re[index],
            epochs_run: 0,
            final_loss: 0.0,
        })
    }

    fn mu_candidate(&self, index: usize, _gamma: f64, _mu: f64) -> Result<MuOutcome> {
        Ok(MuOutcome {
            r_s: self.rs[index],
            r_n: self.rn[index],
            epochs_run: 0,
            final_loss: 0.0,
        })
    }
}

/// Random trace; values come from a small set so ties and threshold hits are common.
pub fn random_script(rng: &mut ChaCha8Rng, hp: &HyperParams) -> ScriptedTrainer {
    let pick = |rng: &mut ChaCha8Rng| -> f64 {
        const LEVELS: [f64; 8] = [0.5, 1.0, 2.0, 4.0, 8.0, 9.0, 16.0, 30.0];
        if rng.random_bool(0.5) {
            LEVELS[rng.random_range(0..LEVELS.len())]
        } else {
            rng.random_range(0.1..40.0)
        }
    };
    let g = hp.gamma_grid().len();
    let m = hp.mu_set.len();
    ScriptedTrainer {
        re: (0..g).map(|_| pick(rng)).collect(),
        rs: (0..m).map(|_| pick(rng)).collect(),
        rn: (0..m).map(|_| pick(rng)).collect(),
    }
}

/// First index of the maximum, by a plain scan.
pub fn ref_first_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Index at which the mu search should stop, and whether it ran out.
pub fn ref_mu_stop(rs: &[f64], rn: &[f64], l: usize, rs_min: f64) -> (usize, bool) {
    for k in 0..rs.len() {
        if (l as f64 - 1.0) * rs[k] <= rn[k] || rs[k] <= rs_min {
            return (k, false);
        }
    }
    (rs.len() - 1, true)
}
