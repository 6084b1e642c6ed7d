use rand::seq::index::sample;
use rand::Rng;

use crate::{Error, Result};

/// Difference quotient used by the checkers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// `(L(p+h) − L(p−h)) / 2h`, truncation error O(h²).
    #[default]
    Central,
    /// Richardson extrapolation of central differences at `h` and `h/2`,
    /// truncation error O(h⁴).
    Richardson,
}

/// `|numeric − analytic| / (|analytic| + 1e-8)`.
pub fn relative_error(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / (analytic.abs() + 1e-8)
}

/// Largest relative error between `analytic` and central differences of
/// `loss_fn` over every coordinate of `params`.
///
/// `params` is perturbed in place and restored. The difference quotient
/// divides by the step actually taken after `f32` rounding, not by `2h`.
pub fn finite_diff_check<F>(loss_fn: F, params: &mut [f32], analytic: &[f32], h: f32) -> Result<f64>
where
    F: FnMut(&[f32]) -> f64,
{
    finite_diff_check_with(loss_fn, params, analytic, h, Stencil::Central)
}

pub fn finite_diff_check_with<F>(
    loss_fn: F,
    params: &mut [f32],
    analytic: &[f32],
    h: f32,
    stencil: Stencil,
) -> Result<f64>
where
    F: FnMut(&[f32]) -> f64,
{
    let coords: Vec<usize> = (0..params.len()).collect();
    check_coords(loss_fn, params, analytic, h, &coords, stencil)
}

/// Same as [`finite_diff_check`] over `n` coordinates drawn without
/// replacement.
pub fn finite_diff_check_sampled<F, R>(
    loss_fn: F,
    params: &mut [f32],
    analytic: &[f32],
    h: f32,
    n: usize,
    rng: &mut R,
) -> Result<f64>
where
    F: FnMut(&[f32]) -> f64,
    R: Rng,
{
    let n = n.min(params.len());
    let mut coords = sample(rng, params.len(), n).into_vec();
    coords.sort_unstable();
    check_coords(loss_fn, params, analytic, h, &coords, Stencil::Central)
}

fn check_coords<F>(
    mut loss_fn: F,
    params: &mut [f32],
    analytic: &[f32],
    h: f32,
    coords: &[usize],
    stencil: Stencil,
) -> Result<f64>
where
    F: FnMut(&[f32]) -> f64,
{
    if !(h > 0.0 && h <= 1e-2) {
        return Err(Error::Parameter(format!("finite-difference step {h} outside (0, 1e-2]")));
    }
    if params.len() != analytic.len() {
        return Err(Error::Dimension(format!(
            "{} parameters but {} analytic gradients",
            params.len(),
            analytic.len()
        )));
    }
    let mut worst = 0.0f64;
    for &i in coords {
        let (wide, wide_step) = central(&mut loss_fn, params, i, h);
        let numeric = match stencil {
            Stencil::Central => wide,
            Stencil::Richardson => {
                let (narrow, narrow_step) = central(&mut loss_fn, params, i, h / 2.0);
                // steps differ slightly from a 2:1 ratio after f32 rounding
                let r2 = (wide_step / narrow_step).powi(2);
                (r2 * narrow - wide) / (r2 - 1.0)
            }
        };
        worst = worst.max(relative_error(numeric, analytic[i] as f64));
    }
    Ok(worst)
}

/// Central difference at coordinate `i` and the step actually taken.
fn central<F>(loss_fn: &mut F, params: &mut [f32], i: usize, h: f32) -> (f64, f64)
where
    F: FnMut(&[f32]) -> f64,
{
    let original = params[i];
    let plus = original + h;
    let minus = original - h;
    params[i] = plus;
    let lp = loss_fn(params);
    params[i] = minus;
    let lm = loss_fn(params);
    params[i] = original;
    let step = plus as f64 - minus as f64;
    ((lp - lm) / step, step)
}
