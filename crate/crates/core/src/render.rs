//! SVG scatter plots of a projection colored by fuzzy membership.
//!
//! Each point gets the hue of its argmax cluster and a saturation equal to
//! its joint membership toward that cluster. Noise is gray.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::matrix::Matrix;
use crate::membership::MembershipMatrix;
use crate::pipeline::{Phase2Outcome, Phase2Result, PhaseResult};
use crate::tsne::Projection;

pub const NOISE_FILL: &str = "#9e9e9e";
const GOLDEN_ANGLE: f64 = 137.507_764_050_037_85;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("projection has {projection} points but membership has {membership}")]
    LengthMismatch { projection: usize, membership: usize },
    #[error("projection must be two-dimensional")]
    NotTwoDimensional,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    pub width: u32,
    pub height: u32,
    pub margin: f64,
    pub radius: f64,
    pub lightness: f64,
    pub title: Option<String>,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec {
            width: 1024,
            height: 768,
            margin: 32.0,
            radius: 3.0,
            lightness: 50.0,
            title: None,
        }
    }
}

impl RenderSpec {
    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }
}

/// Base hue of cluster `k`, spread by the golden angle.
pub fn cluster_hue(k: usize) -> f64 {
    (k as f64 * GOLDEN_ANGLE) % 360.0
}

/// Fill color for a point: gray when `cluster` is `None` or the membership
/// is zero, otherwise the cluster hue with saturation `100·membership`%.
pub fn point_fill(cluster: Option<usize>, membership: f64, spec: &RenderSpec) -> String {
    match cluster {
        Some(k) if membership > 0.0 => format!(
            "hsl({:.1},{:.1}%,{:.1}%)",
            cluster_hue(k),
            100.0 * membership.clamp(0.0, 1.0),
            spec.lightness
        ),
        _ => NOISE_FILL.to_owned(),
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn axis_range(coords: &Matrix, axis: usize) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..coords.rows() {
        let v = coords.get(i, axis);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

/// The SVG document as a string. Noise is drawn first, then points in
/// ascending membership so strong members sit on top.
pub fn scatter_svg(
    projection: &Projection,
    membership: &MembershipMatrix,
    spec: &RenderSpec,
) -> Result<String, RenderError> {
    let coords = &projection.coords;
    if coords.cols() != 2 {
        return Err(RenderError::NotTwoDimensional);
    }
    let n = coords.rows();
    if membership.n_points() != n {
        return Err(RenderError::LengthMismatch {
            projection: n,
            membership: membership.n_points(),
        });
    }
    let (w, h) = (spec.width as f64, spec.height as f64);
    let (x0, x1) = axis_range(coords, 0);
    let (y0, y1) = axis_range(coords, 1);
    let sx = (w - 2.0 * spec.margin) / (x1 - x0);
    let sy = (h - 2.0 * spec.margin) / (y1 - y0);

    let mut order: Vec<(usize, Option<usize>, f64)> = (0..n)
        .map(|i| match membership.argmax(i) {
            Some(k) => (i, Some(k), membership.joint.get(i, k)),
            None => (i, None, 0.0),
        })
        .collect();
    order.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        spec.width, spec.height, spec.width, spec.height
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    if let Some(title) = &spec.title {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14">{}</text>"#,
            spec.margin,
            spec.margin * 0.6,
            escape(title)
        );
    }
    for (i, cluster, m) in order {
        let cx = spec.margin + (coords.get(i, 0) - x0) * sx;
        // SVG y grows downward.
        let cy = h - spec.margin - (coords.get(i, 1) - y0) * sy;
        let _ = writeln!(
            svg,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.1}" fill="{}"/>"#,
            spec.radius,
            point_fill(cluster, m, spec)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_scatter(
    projection: &Projection,
    membership: &MembershipMatrix,
    spec: &RenderSpec,
    out: &Path,
) -> Result<(), RenderError> {
    let svg = scatter_svg(projection, membership, spec)?;
    fs::write(out, svg)?;
    Ok(())
}

pub const PHASE1_PLOT: &str = "scatter_phase1.svg";

/// `scatter_topic_<k>.svg` with `k` the 1-based phase-1 topic, or
/// `scatter_topic_all.svg` for a global refinement.
pub fn phase2_plot_name(run: &Phase2Result) -> String {
    match run.parent {
        Some(c) => format!("scatter_topic_{}.svg", c + 1),
        None => "scatter_topic_all.svg".to_owned(),
    }
}

/// A pass-through topic drawn at its phase-1 coordinates as one cluster.
fn pass_through_view(phase1: &PhaseResult, run: &Phase2Result, membership: &[f64]) -> (Projection, MembershipMatrix) {
    let local: Vec<usize> = run
        .members
        .iter()
        .map(|r| phase1.indices.binary_search(r).expect("phase-1 row"))
        .collect();
    let projection = Projection {
        coords: phase1.projection.coords.select_rows(&local),
        initial_kl: phase1.projection.initial_kl,
        final_kl: phase1.projection.final_kl,
    };
    let n = membership.len();
    let conditional = Matrix::from_vec(n, 1, membership.iter().map(|&m| if m > 0.0 { 1.0 } else { 0.0 }).collect());
    let joint = Matrix::from_vec(n, 1, membership.to_vec());
    (
        projection,
        MembershipMatrix {
            conditional,
            p_any: membership.to_vec(),
            joint,
        },
    )
}

/// Writes the phase-1 plot and one plot per phase-2 run into `out_dir`;
/// returns the paths in write order.
pub fn render_run(
    phase1: &PhaseResult,
    phase2: &[Phase2Result],
    spec: &RenderSpec,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, RenderError> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::with_capacity(1 + phase2.len());
    let path = out_dir.join(PHASE1_PLOT);
    render_scatter(
        &phase1.projection,
        &phase1.membership,
        &spec.clone().with_title("phase 1"),
        &path,
    )?;
    written.push(path);
    for run in phase2 {
        let name = phase2_plot_name(run);
        let title = name.trim_start_matches("scatter_").trim_end_matches(".svg").replace('_', " ");
        let path = out_dir.join(&name);
        let spec = spec.clone().with_title(title);
        match &run.outcome {
            Phase2Outcome::Refined(result) => {
                render_scatter(&result.projection, &result.membership, &spec, &path)?
            }
            Phase2Outcome::PassThrough { membership } => {
                let (projection, mm) = pass_through_view(phase1, run, membership);
                render_scatter(&projection, &mm, &spec, &path)?
            }
        }
        written.push(path);
    }
    Ok(written)
}
