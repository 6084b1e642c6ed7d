use std::ops::Range;

use crate::sae::SaeModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub name: String,
    pub range: Range<usize>,
}

/// Named channel ranges that partition `[0, d_model)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchMap {
    d_model: usize,
    branches: Vec<Branch>,
}

impl BranchMap {
    pub fn new(d_model: usize, branches: Vec<Branch>) -> Result<Self> {
        let mut sorted: Vec<&Branch> = branches.iter().collect();
        sorted.sort_by_key(|b| b.range.start);
        let mut next = 0;
        for b in &sorted {
            if b.range.start >= b.range.end {
                return Err(Error::Parameter(format!("branch {} is empty", b.name)));
            }
            if b.range.start != next {
                return Err(Error::Parameter(format!(
                    "branches must be disjoint and cover [0, {d_model}): gap or overlap at channel {next}"
                )));
            }
            next = b.range.end;
        }
        if next != d_model {
            return Err(Error::Parameter(format!("branches cover [0, {next}) but d_model is {d_model}")));
        }
        for (i, a) in branches.iter().enumerate() {
            if branches[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Parameter(format!("duplicate branch name {}", a.name)));
            }
        }
        Ok(Self { d_model, branches })
    }

    /// Parse `name:start-end,name:start-end,...` (end exclusive).
    pub fn parse(d_model: usize, spec: &str) -> Result<Self> {
        let mut branches = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, range) = part
                .split_once(':')
                .ok_or_else(|| Error::Parameter(format!("branch `{part}` is not name:start-end")))?;
            let (a, b) = range
                .split_once('-')
                .ok_or_else(|| Error::Parameter(format!("branch range `{range}` is not start-end")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parameter(format!("bad channel index `{s}`")))
            };
            branches.push(Branch {
                name: name.trim().to_string(),
                range: parse(a)?..parse(b)?,
            });
        }
        Self::new(d_model, branches)
    }

    pub fn d_model(&self) -> usize {
        self.d_model
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn get(&self, name: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.name == name)
    }
}

/// Norm applied to the positive part of a decoder column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchNorm {
    #[default]
    L2,
    L1,
}

fn positive_norm(values: &[f32], kind: BranchNorm) -> f64 {
    let pos = values.iter().map(|&v| (v as f64).max(0.0));
    match kind {
        BranchNorm::L2 => pos.map(|v| v * v).sum::<f64>().sqrt(),
        BranchNorm::L1 => pos.sum(),
    }
}

/// Share of feature `i`'s positive decoder weight that sits on `branch`:
/// `‖ReLU(dᵢ)|branch‖ / ‖ReLU(dᵢ)‖`, or 0 when `dᵢ` has no positive entry.
pub fn branch_score(model: &SaeModel, feature: usize, map: &BranchMap, branch: &str, kind: BranchNorm) -> Result<f64> {
    if map.d_model() != model.d_model() {
        return Err(Error::Dimension(format!(
            "branch map width {} for d_model {}",
            map.d_model(),
            model.d_model()
        )));
    }
    if feature >= model.n_features() {
        return Err(Error::Parameter(format!("feature {feature} out of range")));
    }
    let b = map
        .get(branch)
        .ok_or_else(|| Error::Parameter(format!("unknown branch {branch}")))?;
    let dir = model.direction(feature);
    let total = positive_norm(&dir, kind);
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(positive_norm(&dir[b.range.clone()], kind) / total)
}

/// Scores of every feature on every branch, `[feature][branch]` in map order.
pub fn branch_scores(model: &SaeModel, map: &BranchMap, kind: BranchNorm) -> Result<Vec<Vec<f64>>> {
    (0..model.n_features())
        .map(|i| {
            map.branches()
                .iter()
                .map(|b| branch_score(model, i, map, &b.name, kind))
                .collect()
        })
        .collect()
}
