use std::io::Write;

use super::{FeatureProfile, SweepResult};
use crate::Result;

/// `feature_id,bin,image_id,y,x,activation`, one row per sampled example.
pub fn write_profile_csv<W: Write>(mut w: W, profiles: &[FeatureProfile]) -> Result<()> {
    writeln!(w, "feature_id,bin,image_id,y,x,activation")?;
    for p in profiles {
        for (k, bin) in p.bins.iter().enumerate() {
            for ex in &bin.examples {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    p.feature_id, k, ex.image_id, ex.pos_y, ex.pos_x, ex.activation
                )?;
            }
        }
    }
    Ok(())
}

/// Per-feature statistics, one row per feature; dead features are flagged.
pub fn write_profile_summary_csv<W: Write>(mut w: W, profiles: &[FeatureProfile]) -> Result<()> {
    writeln!(w, "feature_id,max_activation,mean,std,density,dead,top_neuron,top_weight")?;
    for p in profiles {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            p.feature_id,
            p.max_activation,
            p.mean,
            p.std,
            p.density,
            p.dead,
            p.top_neuron.0,
            p.top_neuron.1
        )?;
    }
    Ok(())
}

/// One JSON object per feature per line.
pub fn write_profile_jsonl<W: Write>(mut w: W, profiles: &[FeatureProfile]) -> Result<()> {
    for p in profiles {
        serde_json::to_writer(&mut w, p).map_err(std::io::Error::from)?;
        writeln!(w)?;
    }
    Ok(())
}

/// `lambda,feature,cosine,max_act`, rows grouped by λ in anchor order.
pub fn write_sweep_csv<W: Write>(mut w: W, result: &SweepResult) -> Result<()> {
    writeln!(w, "lambda,feature,cosine,max_act")?;
    for row in &result.rows {
        for e in &row.entries {
            writeln!(w, "{},{},{},{}", row.lambda, e.feature, e.cosine, e.max_activation)?;
        }
    }
    Ok(())
}

/// One JSON object per λ per line.
pub fn write_sweep_jsonl<W: Write>(mut w: W, result: &SweepResult) -> Result<()> {
    for row in &result.rows {
        serde_json::to_writer(&mut w, row).map_err(std::io::Error::from)?;
        writeln!(w)?;
    }
    Ok(())
}
