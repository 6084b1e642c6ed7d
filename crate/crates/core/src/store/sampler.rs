use rand::Rng;

use super::ActivationRecord;
use crate::numerics::norm;
use crate::{Error, Result};

pub const DEFAULT_POSITIONS_PER_IMAGE: usize = 10;

/// All position activations of one image, `height × width × d_model`
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionGrid {
    pub image_id: u32,
    pub height: usize,
    pub width: usize,
    pub d_model: usize,
    pub vectors: Vec<f32>,
}

impl PositionGrid {
    pub fn new(image_id: u32, height: usize, width: usize, d_model: usize, vectors: Vec<f32>) -> Result<Self> {
        if vectors.len() != height * width * d_model {
            return Err(Error::Dimension(format!(
                "{} values for a {height}x{width}x{d_model} grid",
                vectors.len()
            )));
        }
        if height > u16::MAX as usize + 1 || width > u16::MAX as usize + 1 {
            return Err(Error::Parameter("grid larger than u16 positions".into()));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid for image {image_id}")));
        }
        Ok(Self {
            image_id,
            height,
            width,
            d_model,
            vectors,
        })
    }

    pub fn positions(&self) -> usize {
        self.height * self.width
    }

    pub fn vector(&self, index: usize) -> &[f32] {
        &self.vectors[index * self.d_model..(index + 1) * self.d_model]
    }

    pub fn record(&self, index: usize) -> ActivationRecord {
        ActivationRecord::new(
            self.image_id,
            (index / self.width) as u16,
            (index % self.width) as u16,
            self.vector(index).to_vec(),
        )
    }
}

/// L2 norm of the activation vector at each position.
pub fn position_norms(grid: &PositionGrid) -> Vec<f64> {
    (0..grid.positions()).map(|i| norm(grid.vector(i))).collect()
}

/// Draw `k` distinct positions, each draw choosing among the remaining
/// positions with probability proportional to the L2 norm of its activation
/// vector.
///
/// If every remaining position has zero norm before `k` draws are made, the
/// rest are drawn uniformly from those zero-norm positions.
pub fn proportional_sample<R: Rng + ?Sized>(grid: &PositionGrid, k: usize, rng: &mut R) -> Result<Vec<ActivationRecord>> {
    let n = grid.positions();
    if k > n {
        return Err(Error::Parameter(format!("cannot draw {k} distinct positions from {n}")));
    }
    let mut weights = position_norms(grid);
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::DegenerateGrid);
    }
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = weights.iter().sum();
        let chosen = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if target < acc {
                    break;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        taken[chosen] = true;
        weights[chosen] = 0.0;
        out.push(grid.record(chosen));
    }
    Ok(out)
}
