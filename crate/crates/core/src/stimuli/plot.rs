use std::fmt::Write as _;

use super::{BaselineSource, TuningCurve};
use crate::{Error, Result};

/// Polar tuning plot for one radius: an SVG document and its CSV data.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPlot {
    pub svg: String,
    pub csv: String,
}

const VIEW: f64 = 200.0;
const MARGIN: f64 = 10.0;

/// Plotted radius at `θ` is `max(response, 0)`, scaled so the larger of the
/// peak response and 1σ fills the view; a dashed circle marks 1σ.
///
/// The CSV (`theta_rad,radius_px,response_sigma`) keeps signed responses and
/// is preceded by a `#` comment line when the baseline came from the
/// stimulus set.
pub fn radial_plot(curve: &TuningCurve, radius_index: usize) -> Result<RadialPlot> {
    let row = curve.response.get(radius_index).ok_or_else(|| {
        Error::Parameter(format!(
            "radius index {radius_index} out of range for {} radii",
            curve.response.len()
        ))
    })?;
    let radius_px = curve.radii[radius_index];
    let peak = row.iter().copied().fold(1.0f64, f64::max);
    let scale = (VIEW / 2.0 - MARGIN) / peak;
    let c = VIEW / 2.0;

    let mut points = String::new();
    for (k, (&theta, &v)) in curve.orientations.iter().zip(row).enumerate() {
        let rho = v.max(0.0) * scale;
        // screen y points down, matching image coordinates
        let (x, y) = (c + rho * theta.cos(), c + rho * theta.sin());
        if k > 0 {
            points.push(' ');
        }
        let _ = write!(points, "{x:.3},{y:.3}");
    }
    let fallback = curve.baseline.source == BaselineSource::Stimuli;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{VIEW}" height="{VIEW}" viewBox="0 0 {VIEW} {VIEW}">"#
    );
    let _ = writeln!(
        svg,
        "<title>feature {} radius {} px{}</title>",
        curve.feature_id,
        radius_px,
        if fallback { " (stimulus-set baseline)" } else { "" }
    );
    let _ = writeln!(svg, r#"<rect width="{VIEW}" height="{VIEW}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<circle id="unit-sigma" cx="{c}" cy="{c}" r="{:.3}" fill="none" stroke="gray" stroke-dasharray="4 3"/>"#,
        scale
    );
    let _ = writeln!(
        svg,
        r#"<polygon id="response" points="{points}" fill="steelblue" fill-opacity="0.4" stroke="steelblue"/>"#
    );
    svg.push_str("</svg>\n");

    let mut csv = String::new();
    if fallback {
        csv.push_str("# baseline=stimuli\n");
    }
    csv.push_str("theta_rad,radius_px,response_sigma\n");
    for (&theta, &v) in curve.orientations.iter().zip(row) {
        let _ = writeln!(csv, "{theta},{radius_px},{v}");
    }
    Ok(RadialPlot { svg, csv })
}
