use std::f64::consts::{FRAC_PI_2, TAU};

use crate::{Error, Result};

pub const MIN_SIZE: usize = 16;

/// A grayscale square image of one circular arc.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveStimulus {
    pub orientation: f64,
    pub radius: f64,
    pub size: usize,
    pub thickness: f64,
    /// Row-major `size × size`, values in `[0, 1]`.
    pub pixels: Vec<f32>,
}

impl CurveStimulus {
    pub fn pixel(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.size + x]
    }
}

/// Half the angle subtended by the drawn arc, seen from the circle's centre.
/// The arc's endpoints lie `3·size/8` from its midpoint, and it never spans
/// more than a half circle.
pub fn arc_half_angle(radius: f64, size: usize) -> f64 {
    let reach = 3.0 * size as f64 / 8.0;
    (2.0 * (reach / (2.0 * radius)).min(1.0).asin()).min(FRAC_PI_2)
}

/// Arc of the circle of `radius` centred at `centre + radius·(cos θ, sin θ)`,
/// so the arc's midpoint sits on the image centre and it bows away from `θ`.
///
/// Coordinates are pixel-centre based with `y` pointing down. A pixel's value
/// is `clamp(1 - (dist - thickness/2), 0, 1)`, where `dist` is its distance to
/// the arc (rounded caps at the ends).
pub fn render_curve(orientation: f64, radius: f64, size: usize, thickness: f64) -> Result<CurveStimulus> {
    if size < MIN_SIZE {
        return Err(Error::Parameter(format!("size {size} below {MIN_SIZE}")));
    }
    if !orientation.is_finite() || !(radius > 0.0) || !radius.is_finite() || !(thickness > 0.0) {
        return Err(Error::Parameter(format!(
            "bad curve parameters: orientation {orientation}, radius {radius}, thickness {thickness}"
        )));
    }
    if radius < thickness {
        return Err(Error::Parameter(format!("radius {radius} below thickness {thickness}")));
    }
    let theta = orientation.rem_euclid(TAU);
    let (s, c) = theta.sin_cos();
    let mid = size as f64 / 2.0;
    let (cx, cy) = (mid + radius * c, mid + radius * s);
    // unit vector from the circle centre to the arc midpoint
    let (mx, my) = (-c, -s);
    let half = arc_half_angle(radius, size);
    let cos_half = half.cos();
    let (sh, ch) = half.sin_cos();
    let ends = [
        (cx + radius * (mx * ch - my * sh), cy + radius * (mx * sh + my * ch)),
        (cx + radius * (mx * ch + my * sh), cy + radius * (-mx * sh + my * ch)),
    ];

    let mut pixels = vec![0.0f32; size * size];
    for y in 0..size {
        let py = y as f64 + 0.5;
        for x in 0..size {
            let px = x as f64 + 0.5;
            let (dx, dy) = (px - cx, py - cy);
            let rho = dx.hypot(dy);
            let on_arc = rho > 0.0 && (dx * mx + dy * my) / rho >= cos_half;
            let dist = if on_arc {
                (rho - radius).abs()
            } else {
                ends.iter()
                    .map(|&(ex, ey)| (px - ex).hypot(py - ey))
                    .fold(f64::INFINITY, f64::min)
            };
            pixels[y * size + x] = (1.0 - (dist - thickness / 2.0)).clamp(0.0, 1.0) as f32;
        }
    }
    Ok(CurveStimulus {
        orientation,
        radius,
        size,
        thickness,
        pixels,
    })
}

/// `n_orientations` evenly spaced angles on `[0, 2π)` crossed with `radii`,
/// radius-major: all orientations for `radii[0]` come first.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusGrid {
    pub orientations: Vec<f64>,
    pub radii: Vec<f64>,
    pub size: usize,
    pub thickness: f64,
    pub stimuli: Vec<CurveStimulus>,
}

impl StimulusGrid {
    pub fn index(&self, radius_index: usize, orientation_index: usize) -> usize {
        radius_index * self.orientations.len() + orientation_index
    }

    pub fn get(&self, radius_index: usize, orientation_index: usize) -> &CurveStimulus {
        &self.stimuli[self.index(radius_index, orientation_index)]
    }

    pub fn len(&self) -> usize {
        self.stimuli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stimuli.is_empty()
    }
}

pub fn grid_orientations(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

pub fn stimulus_grid(n_orientations: usize, radii: &[f64], size: usize, thickness: f64) -> Result<StimulusGrid> {
    if n_orientations < 4 {
        return Err(Error::Parameter(format!("need at least 4 orientations, got {n_orientations}")));
    }
    let orientations = grid_orientations(n_orientations);
    let mut stimuli = Vec::with_capacity(n_orientations * radii.len());
    for &r in radii {
        for &theta in &orientations {
            stimuli.push(render_curve(theta, r, size, thickness)?);
        }
    }
    Ok(StimulusGrid {
        orientations,
        radii: radii.to_vec(),
        size,
        thickness,
        stimuli,
    })
}
