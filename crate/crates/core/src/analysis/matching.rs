use crate::numerics::{dot, norm};
use crate::sae::SaeModel;
use crate::{Error, Result};

/// Signed cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FeatureMatch {
    pub anchor: usize,
    /// `None` when `other` has fewer features than the anchor model.
    pub other: Option<usize>,
    pub cosine: f64,
}

/// One-to-one correspondence between the anchor's features and `other`'s by
/// decoder-direction cosine. Pairs are assigned greedily in descending order
/// of similarity; ties go to the lower anchor index, then the lower other
/// index. Results are indexed by anchor feature.
pub fn match_features(anchor: &SaeModel, other: &SaeModel) -> Result<Vec<FeatureMatch>> {
    if anchor.d_model() != other.d_model() {
        return Err(Error::Dimension(format!(
            "d_model {} vs {}",
            anchor.d_model(),
            other.d_model()
        )));
    }
    let a_dirs = unit_directions(anchor);
    let o_dirs = unit_directions(other);
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a_dirs.len() * o_dirs.len());
    for (i, a) in a_dirs.iter().enumerate() {
        for (j, o) in o_dirs.iter().enumerate() {
            pairs.push((cosine(a, o), i, j));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out: Vec<FeatureMatch> = (0..a_dirs.len())
        .map(|i| FeatureMatch {
            anchor: i,
            other: None,
            cosine: 0.0,
        })
        .collect();
    let mut other_used = vec![false; o_dirs.len()];
    let mut left = a_dirs.len().min(o_dirs.len());
    for (c, i, j) in pairs {
        if left == 0 {
            break;
        }
        if out[i].other.is_some() || other_used[j] {
            continue;
        }
        out[i].other = Some(j);
        out[i].cosine = c;
        other_used[j] = true;
        left -= 1;
    }
    Ok(out)
}

fn unit_directions(m: &SaeModel) -> Vec<Vec<f32>> {
    (0..m.n_features()).map(|i| m.direction(i)).collect()
}
