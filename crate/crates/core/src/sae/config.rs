use crate::numerics::AdamConfig;
use crate::store::DEFAULT_SHUFFLE_BUFFER;
use crate::{Error, Result};

/// Per-layer sparsity coefficient and dictionary expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerDefaults {
    pub layer: &'static str,
    pub lambda: f32,
    pub expansion_factor: usize,
}

/// Default hyperparameters for the InceptionV1 early-vision layers.
pub const TABLE_DEFAULTS: [LayerDefaults; 5] = [
    LayerDefaults { layer: "conv2d0", lambda: 1e-7, expansion_factor: 2 },
    LayerDefaults { layer: "conv2d1", lambda: 5e-6, expansion_factor: 4 },
    LayerDefaults { layer: "conv2d2", lambda: 5e-6, expansion_factor: 4 },
    LayerDefaults { layer: "mixed3a", lambda: 3.5e-6, expansion_factor: 8 },
    LayerDefaults { layer: "mixed3b", lambda: 3.5e-6, expansion_factor: 8 },
];

pub fn layer_defaults(layer: &str) -> Option<LayerDefaults> {
    TABLE_DEFAULTS.iter().copied().find(|d| d.layer == layer)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lambda: f32,
    pub expansion_factor: usize,
    pub batch_size: usize,
    pub total_samples: u64,
    pub lr: f32,
    pub seed: u64,
    /// A feature is dead if it has not fired during this many trailing samples.
    pub dead_window: u64,
    pub shuffle_buffer: usize,
    /// Steps per reported loss interval.
    pub log_every: u64,
    /// Worker threads for gradient computation; 1 is the reference mode.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            expansion_factor: 4,
            batch_size: 1024,
            total_samples: 1_000_000,
            lr: AdamConfig::default().lr,
            seed: 0,
            dead_window: 1_000_000,
            shuffle_buffer: DEFAULT_SHUFFLE_BUFFER,
            log_every: 100,
            threads: 1,
        }
    }
}

impl TrainConfig {
    /// Defaults with the layer's tabulated λ and expansion factor.
    pub fn for_layer(layer: &str) -> Option<Self> {
        layer_defaults(layer).map(|d| Self {
            lambda: d.lambda,
            expansion_factor: d.expansion_factor,
            ..Self::default()
        })
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if self.expansion_factor < 1 {
            return bad("expansion_factor must be >= 1".into());
        }
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.shuffle_buffer < 2 {
            return bad("shuffle_buffer must be >= 2".into());
        }
        if self.log_every < 1 {
            return bad("log_every must be >= 1".into());
        }
        if self.threads < 1 {
            return bad("threads must be >= 1".into());
        }
        Ok(())
    }
}
