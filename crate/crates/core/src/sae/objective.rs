//! Loss and closed-form gradients.
//!
//! Per sample, with `r = x̂ − x`, active set `A = {i : preᵢ > 0}` and
//! `nᵢ = ‖dᵢ‖₂`:
//!
//! ```text
//! L      = ‖r‖² + λ Σ_{i∈A} fᵢ nᵢ
//! ∂b_dec = 2r
//! ∂dᵢ    = 2 fᵢ r + λ fᵢ dᵢ / nᵢ              (i ∈ A)
//! ∂fᵢ    = 2 dᵢ·r + λ nᵢ                      (i ∈ A, zero otherwise)
//! ∂b_encᵢ = ∂fᵢ,   ∂W_enc[i,:] = ∂fᵢ · x
//! ```
//!
//! Everything is accumulated in `f64` and averaged over the batch.

use std::thread;

use super::SaeModel;
use crate::numerics::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    /// Mean squared reconstruction error `‖x − x̂‖²`.
    pub recon: f64,
    /// Mean `λ·Σᵢ fᵢ‖dᵢ‖`, λ included.
    pub sparsity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w_enc: Matrix,
    pub b_enc: Matrix,
    pub decoder: Matrix,
    pub b_dec: Matrix,
}

impl Gradients {
    pub fn get(&self, p: super::Param) -> &Matrix {
        use super::Param::*;
        match p {
            WEnc => &self.w_enc,
            BEnc => &self.b_enc,
            Decoder => &self.decoder,
            BDec => &self.b_dec,
        }
    }
}

/// Read-only view of a model with the decoder transposed for column access.
pub(crate) struct Prepared<'m> {
    pub model: &'m SaeModel,
    /// `n_features × d_model`, row `i` is `dᵢ`.
    pub dec_t: Matrix,
    pub norms: Vec<f64>,
}

impl<'m> Prepared<'m> {
    pub fn new(model: &'m SaeModel) -> Self {
        Self {
            model,
            dec_t: model.decoder.transpose(),
            norms: model.decoder_norms(),
        }
    }
}

/// Sums over a chunk of samples.
pub(crate) struct Accum {
    pub samples: usize,
    pub recon: f64,
    /// `Σ fᵢ nᵢ` without λ.
    pub penalty: f64,
    pub g_wenc: Vec<f64>,
    pub g_benc: Vec<f64>,
    pub g_dec_t: Vec<f64>,
    pub g_bdec: Vec<f64>,
    /// Largest activation per feature seen in the chunk.
    pub max_f: Vec<f64>,
    with_grad: bool,
    pre: Vec<f64>,
    active: Vec<usize>,
    residual: Vec<f64>,
}

impl Accum {
    pub fn new(d: usize, n: usize, with_grad: bool) -> Self {
        let g = |len| if with_grad { vec![0.0; len] } else { Vec::new() };
        Self {
            samples: 0,
            recon: 0.0,
            penalty: 0.0,
            g_wenc: g(n * d),
            g_benc: g(n),
            g_dec_t: g(n * d),
            g_bdec: g(d),
            max_f: vec![0.0; n],
            with_grad,
            pre: vec![0.0; n],
            active: Vec::with_capacity(n),
            residual: vec![0.0; d],
        }
    }

    pub fn reset(&mut self) {
        self.samples = 0;
        self.recon = 0.0;
        self.penalty = 0.0;
        for buf in [&mut self.g_wenc, &mut self.g_benc, &mut self.g_dec_t, &mut self.g_bdec, &mut self.max_f] {
            buf.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn add_sample(&mut self, prep: &Prepared<'_>, lambda: f64, x: &[f32]) {
        let model = prep.model;
        let d = model.d_model();
        model.pre_activations(x, &mut self.pre);
        self.active.clear();
        for (i, &p) in self.pre.iter().enumerate() {
            if p > 0.0 {
                self.active.push(i);
            }
        }
        // residual r = b_dec + Σ fᵢ dᵢ − x
        for r in 0..d {
            self.residual[r] = model.b_dec.as_slice()[r] as f64 - x[r] as f64;
        }
        for &i in &self.active {
            let f = self.pre[i];
            for (slot, &dv) in self.residual.iter_mut().zip(prep.dec_t.row(i)) {
                *slot += f * dv as f64;
            }
            self.penalty += f * prep.norms[i];
            if f > self.max_f[i] {
                self.max_f[i] = f;
            }
        }
        self.recon += self.residual.iter().map(|v| v * v).sum::<f64>();
        self.samples += 1;
        if !self.with_grad {
            return;
        }
        for (g, &r) in self.g_bdec.iter_mut().zip(&self.residual) {
            *g += 2.0 * r;
        }
        for &i in &self.active {
            let f = self.pre[i];
            let n_i = prep.norms[i];
            let dir = prep.dec_t.row(i);
            let g_dec = &mut self.g_dec_t[i * d..(i + 1) * d];
            let mut d_dot_r = 0.0;
            for k in 0..d {
                let dk = dir[k] as f64;
                d_dot_r += dk * self.residual[k];
                g_dec[k] += 2.0 * f * self.residual[k] + lambda * f * dk / n_i;
            }
            let gf = 2.0 * d_dot_r + lambda * n_i;
            self.g_benc[i] += gf;
            let g_w = &mut self.g_wenc[i * d..(i + 1) * d];
            for (g, &xk) in g_w.iter_mut().zip(x) {
                *g += gf * xk as f64;
            }
        }
    }

    pub fn merge(&mut self, other: &Accum) {
        self.samples += other.samples;
        self.recon += other.recon;
        self.penalty += other.penalty;
        for (dst, src) in [
            (&mut self.g_wenc, &other.g_wenc),
            (&mut self.g_benc, &other.g_benc),
            (&mut self.g_dec_t, &other.g_dec_t),
            (&mut self.g_bdec, &other.g_bdec),
        ] {
            for (a, b) in dst.iter_mut().zip(src) {
                *a += b;
            }
        }
        for (a, &b) in self.max_f.iter_mut().zip(&other.max_f) {
            *a = a.max(b);
        }
    }

    pub fn breakdown(&self, lambda: f64) -> LossBreakdown {
        let b = self.samples.max(1) as f64;
        let recon = self.recon / b;
        let sparsity = lambda * self.penalty / b;
        LossBreakdown {
            total: recon + sparsity,
            recon,
            sparsity,
        }
    }

    pub fn gradients(&self, d: usize, n: usize) -> Result<Gradients> {
        let b = self.samples.max(1) as f64;
        let to = |v: &[f64]| -> Vec<f32> { v.iter().map(|g| (g / b) as f32).collect() };
        let mut decoder = Matrix::zeros(d, n);
        for i in 0..n {
            for k in 0..d {
                decoder.set(k, i, (self.g_dec_t[i * d + k] / b) as f32);
            }
        }
        Ok(Gradients {
            w_enc: Matrix::from_vec(n, d, to(&self.g_wenc)).map_err(grad_error)?,
            b_enc: Matrix::from_vec(1, n, to(&self.g_benc)).map_err(grad_error)?,
            decoder: Matrix::from_vec(d, n, decoder.into_vec()).map_err(grad_error)?,
            b_dec: Matrix::from_vec(1, d, to(&self.g_bdec)).map_err(grad_error)?,
        })
    }
}

fn grad_error(e: Error) -> Error {
    match e {
        Error::NonFinite(what) => Error::Divergence {
            step: 0,
            reason: format!("gradient: {what}"),
        },
        other => other,
    }
}

fn check_batch(model: &SaeModel, batch: &Matrix) -> Result<()> {
    if batch.rows() == 0 {
        return Err(Error::Parameter("empty batch".into()));
    }
    if batch.cols() != model.d_model() {
        return Err(Error::Dimension(format!(
            "batch width {} for d_model {}",
            batch.cols(),
            model.d_model()
        )));
    }
    Ok(())
}

pub(crate) fn check_decoder(prep: &Prepared<'_>) -> Result<()> {
    match prep.norms.iter().position(|&n| n == 0.0) {
        Some(feature) => Err(Error::Singularity { feature }),
        None => Ok(()),
    }
}

/// Accumulate `rows` of a flat row-major batch, split into `threads`
/// contiguous chunks whose sums are merged in chunk order.
pub(crate) fn accumulate(
    prep: &Prepared<'_>,
    lambda: f64,
    rows: &[f32],
    with_grad: bool,
    threads: usize,
    acc: &mut Accum,
) {
    let d = prep.model.d_model();
    let n = prep.model.n_features();
    let count = rows.len() / d;
    if threads <= 1 || count < 2 * threads {
        for x in rows.chunks_exact(d) {
            acc.add_sample(prep, lambda, x);
        }
        return;
    }
    let per = count.div_ceil(threads);
    let partials: Vec<Accum> = thread::scope(|s| {
        let handles: Vec<_> = rows
            .chunks(per * d)
            .map(|chunk| {
                s.spawn(move || {
                    let mut part = Accum::new(d, n, with_grad);
                    for x in chunk.chunks_exact(d) {
                        part.add_sample(prep, lambda, x);
                    }
                    part
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("gradient worker panicked")).collect()
    });
    for p in &partials {
        acc.merge(p);
    }
}

impl SaeModel {
    /// Batch loss; `batch` holds one sample per row.
    pub fn loss(&self, batch: &Matrix, lambda: f32) -> Result<LossBreakdown> {
        check_batch(self, batch)?;
        let prep = Prepared::new(self);
        let mut acc = Accum::new(self.d_model(), self.n_features(), false);
        accumulate(&prep, lambda as f64, batch.as_slice(), false, 1, &mut acc);
        let out = acc.breakdown(lambda as f64);
        if !out.total.is_finite() {
            return Err(Error::Divergence {
                step: 0,
                reason: "non-finite loss".into(),
            });
        }
        Ok(out)
    }

    /// Closed-form gradients of [`SaeModel::loss`].
    pub fn grad(&self, batch: &Matrix, lambda: f32) -> Result<Gradients> {
        check_batch(self, batch)?;
        let prep = Prepared::new(self);
        check_decoder(&prep)?;
        let mut acc = Accum::new(self.d_model(), self.n_features(), true);
        accumulate(&prep, lambda as f64, batch.as_slice(), true, 1, &mut acc);
        acc.gradients(self.d_model(), self.n_features())
    }
}
