use rand::Rng;
use rand_distr::StandardNormal;

use super::TrainConfig;
use crate::numerics::{dot, norm, Matrix};
use crate::{Error, Result};

/// Decoder column norm right after [`SaeModel::init`].
pub const INIT_DECODER_NORM: f32 = 0.1;

/// Selects one parameter tensor of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    WEnc,
    BEnc,
    Decoder,
    BDec,
}

impl Param {
    pub const ALL: [Param; 4] = [Param::WEnc, Param::BEnc, Param::Decoder, Param::BDec];
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaeModel {
    /// `n_features × d_model`
    pub(crate) w_enc: Matrix,
    /// `1 × n_features`
    pub(crate) b_enc: Matrix,
    /// `d_model × n_features`; column `i` is the direction `dᵢ`.
    pub(crate) decoder: Matrix,
    /// `1 × d_model`
    pub(crate) b_dec: Matrix,
}

impl SaeModel {
    /// Random unit directions scaled to [`INIT_DECODER_NORM`], encoder set to
    /// the decoder transpose, zero biases.
    pub fn init<R: Rng + ?Sized>(d_model: usize, config: &TrainConfig, rng: &mut R) -> Result<Self> {
        if d_model == 0 {
            return Err(Error::Parameter("d_model must be >= 1".into()));
        }
        config.validate()?;
        let n = config.expansion_factor * d_model;
        let mut decoder = Matrix::zeros(d_model, n);
        let mut column = vec![0.0f32; d_model];
        for i in 0..n {
            loop {
                for v in column.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let len = norm(&column);
                if len > 1e-6 {
                    for v in column.iter_mut() {
                        *v = (*v as f64 / len * INIT_DECODER_NORM as f64) as f32;
                    }
                    break;
                }
            }
            decoder.set_column(i, &column);
        }
        Ok(Self {
            w_enc: decoder.transpose(),
            b_enc: Matrix::zeros(1, n),
            decoder,
            b_dec: Matrix::zeros(1, d_model),
        })
    }

    pub fn from_parts(w_enc: Matrix, b_enc: Vec<f32>, decoder: Matrix, b_dec: Vec<f32>) -> Result<Self> {
        let (n, d) = w_enc.shape();
        if decoder.shape() != (d, n) || b_enc.len() != n || b_dec.len() != d {
            return Err(Error::Dimension(format!(
                "W_enc {:?}, b_enc {}, D {:?}, b_dec {}",
                w_enc.shape(),
                b_enc.len(),
                decoder.shape(),
                b_dec.len()
            )));
        }
        Ok(Self {
            w_enc,
            b_enc: Matrix::from_vec(1, n, b_enc)?,
            decoder,
            b_dec: Matrix::from_vec(1, d, b_dec)?,
        })
    }

    pub fn d_model(&self) -> usize {
        self.decoder.rows()
    }

    pub fn n_features(&self) -> usize {
        self.decoder.cols()
    }

    pub fn w_enc(&self) -> &Matrix {
        &self.w_enc
    }

    pub fn b_enc(&self) -> &[f32] {
        self.b_enc.as_slice()
    }

    pub fn decoder(&self) -> &Matrix {
        &self.decoder
    }

    pub fn b_dec(&self) -> &[f32] {
        self.b_dec.as_slice()
    }

    pub fn param(&self, p: Param) -> &Matrix {
        match p {
            Param::WEnc => &self.w_enc,
            Param::BEnc => &self.b_enc,
            Param::Decoder => &self.decoder,
            Param::BDec => &self.b_dec,
        }
    }

    pub fn param_mut(&mut self, p: Param) -> &mut Matrix {
        match p {
            Param::WEnc => &mut self.w_enc,
            Param::BEnc => &mut self.b_enc,
            Param::Decoder => &mut self.decoder,
            Param::BDec => &mut self.b_dec,
        }
    }

    /// Direction `dᵢ` (column `i` of the decoder).
    pub fn direction(&self, feature: usize) -> Vec<f32> {
        self.decoder.column(feature)
    }

    pub fn decoder_norm(&self, feature: usize) -> f64 {
        self.decoder.column_norm(feature)
    }

    pub fn decoder_norms(&self) -> Vec<f64> {
        (0..self.n_features()).map(|i| self.decoder_norm(i)).collect()
    }

    fn check_input(&self, x: &[f32]) -> Result<()> {
        if x.len() != self.d_model() {
            return Err(Error::Dimension(format!(
                "input of length {} for d_model {}",
                x.len(),
                self.d_model()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("encoder input".into()));
        }
        Ok(())
    }

    /// Pre-activations `W_enc·x + b_enc` in `f64`.
    pub(crate) fn pre_activations(&self, x: &[f32], out: &mut [f64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.b_enc.as_slice()[i] as f64 + dot(self.w_enc.row(i), x);
        }
    }

    /// `f(x) = ReLU(W_enc·x + b_enc)`.
    pub fn encode(&self, x: &[f32]) -> Result<Vec<f32>> {
        self.check_input(x)?;
        let mut pre = vec![0.0; self.n_features()];
        self.pre_activations(x, &mut pre);
        Ok(pre.into_iter().map(|v| v.max(0.0) as f32).collect())
    }

    /// Feature `i` activation only.
    pub fn encode_feature(&self, x: &[f32], feature: usize) -> Result<f32> {
        self.check_input(x)?;
        let pre = self.b_enc.as_slice()[feature] as f64 + dot(self.w_enc.row(feature), x);
        Ok(pre.max(0.0) as f32)
    }

    /// `x̂ = b_dec + D·f`.
    pub fn decode(&self, f: &[f32]) -> Result<Vec<f32>> {
        if f.len() != self.n_features() {
            return Err(Error::Dimension(format!(
                "code of length {} for {} features",
                f.len(),
                self.n_features()
            )));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("decoder input".into()));
        }
        let d = self.d_model();
        Ok((0..d)
            .map(|r| (self.b_dec.as_slice()[r] as f64 + dot(self.decoder.row(r), f)) as f32)
            .collect())
    }

    pub fn reconstruct(&self, x: &[f32]) -> Result<Vec<f32>> {
        self.decode(&self.encode(x)?)
    }
}
