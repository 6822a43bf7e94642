//! Standalone SVG output: planar scatter plots and log-log dimension plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dimension::DimFit;
use crate::error::{Error, Result};
use crate::io::PointRecords;

pub const SVG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterOptions {
    /// Canvas side in pixels.
    pub size_px: f64,
    /// Circle radius in pixels for a point of relative size 1.
    pub radius_px: f64,
    /// Smallest radius drawn, in pixels.
    pub min_radius_px: f64,
    /// Draw a segment from every non-root point to its parent.
    pub edges: bool,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        ScatterOptions {
            size_px: 800.0,
            radius_px: 3.0,
            min_radius_px: 0.4,
            edges: false,
        }
    }
}

/// Relative circle sizes: `tau^(-1/d)` for continuous trees, uniform otherwise.
pub fn relative_sizes(records: &PointRecords) -> Vec<f64> {
    let d = records.d as f64;
    records
        .birth_time
        .iter()
        .map(|t| match t {
            Some(t) if *t > 0.0 => t.powf(-1.0 / d),
            _ => 1.0,
        })
        .collect()
}

fn header(out: &mut String, w: f64, h: f64) {
    writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" data-format-version="{SVG_FORMAT_VERSION}">
<rect width="100%" height="100%" fill="white"/>"#
    )
    .expect("writing to a String");
}

/// Renders a scatter plot of planar points; `sizes` scales each circle.
pub fn scatter_svg(records: &PointRecords, sizes: &[f64], opts: &ScatterOptions) -> Result<String> {
    if records.d != 2 {
        return Err(Error::UnsupportedPlot(format!(
            "scatter plots need d = 2, got d = {}",
            records.d
        )));
    }
    if records.is_empty() {
        return Err(Error::Empty);
    }
    if sizes.len() != records.len() {
        return Err(Error::DimensionMismatch {
            expected: records.len(),
            got: sizes.len(),
        });
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for i in 0..records.len() {
        for k in 0..2 {
            lo[k] = lo[k].min(records.point(i)[k]);
            hi[k] = hi[k].max(records.point(i)[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let span = if span > 0.0 { span } else { 1.0 };
    let margin = 0.05 * opts.size_px;
    let scale = (opts.size_px - 2.0 * margin) / span;
    let px = |p: &[f64]| {
        (
            margin + (p[0] - lo[0]) * scale,
            opts.size_px - margin - (p[1] - lo[1]) * scale,
        )
    };

    let mut out = String::with_capacity(records.len() * if opts.edges { 110 } else { 50 });
    header(&mut out, opts.size_px, opts.size_px);
    if opts.edges {
        out.push_str("<g stroke=\"#8a8a8a\" stroke-width=\"0.4\">\n");
        for i in 0..records.len() {
            if let Some(p) = records.parent[i] {
                let (x1, y1) = px(records.point(p));
                let (x2, y2) = px(records.point(i));
                writeln!(
                    out,
                    r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#
                )
                .expect("writing to a String");
            }
        }
        out.push_str("</g>\n");
    }
    out.push_str("<g fill=\"#1f4e8c\">\n");
    for (i, size) in sizes.iter().enumerate().take(records.len()) {
        let (x, y) = px(records.point(i));
        let r = (opts.radius_px * size).max(opts.min_radius_px);
        writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}"/>"#)
            .expect("writing to a String");
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

pub fn emit_scatter_svg(records: &PointRecords, path: &Path, opts: &ScatterOptions) -> Result<()> {
    let text = scatter_svg(records, &relative_sizes(records), opts)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Log-log plot of a dimension sweep with the fitted line over the fit window.
pub fn dimension_plot_svg(fit: &DimFit) -> Result<String> {
    let pts: Vec<(f64, f64)> = fit
        .eps_values
        .iter()
        .zip(&fit.stats)
        .filter(|(e, s)| **e > 0.0 && **s > 0.0)
        .map(|(e, s)| (-e.ln(), s.ln()))
        .collect();
    if pts.is_empty() {
        return Err(Error::InsufficientData(
            "no positive statistics to plot".into(),
        ));
    }
    let (w, h, m) = (640.0, 480.0, 50.0);
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let sx = if x1 > x0 {
        (w - 2.0 * m) / (x1 - x0)
    } else {
        1.0
    };
    let sy = if y1 > y0 {
        (h - 2.0 * m) / (y1 - y0)
    } else {
        1.0
    };
    let map = |x: f64, y: f64| (m + (x - x0) * sx, h - m - (y - y0) * sy);

    let mut out = String::new();
    header(&mut out, w, h);
    let (ax, ay) = map(x0, y0);
    writeln!(
        out,
        r#"<g stroke="black" stroke-width="1"><line x1="{ax:.2}" y1="{ay:.2}" x2="{:.2}" y2="{ay:.2}"/><line x1="{ax:.2}" y1="{ay:.2}" x2="{ax:.2}" y2="{:.2}"/></g>"#,
        w - m,
        m
    )
    .expect("writing to a String");
    writeln!(
        out,
        r#"<g font-family="sans-serif" font-size="13"><text x="{:.0}" y="{:.0}" text-anchor="middle">log(1/eps)</text><text x="14" y="{:.0}" transform="rotate(-90 14 {:.0})" text-anchor="middle">log stat</text><text x="{:.0}" y="24">{} slope = {:.4} ± {:.4}</text></g>"#,
        w / 2.0,
        h - 12.0,
        h / 2.0,
        h / 2.0,
        m,
        fit.method,
        fit.slope,
        fit.stderr
    )
    .expect("writing to a String");

    let (a, b) = fit.fit_window;
    let window: Vec<f64> = fit.eps_values[a..b.min(fit.eps_values.len())]
        .iter()
        .map(|e| -e.ln())
        .collect();
    if let (Some(&lo), Some(&hi)) = (
        window.iter().min_by(|p, q| p.total_cmp(q)),
        window.iter().max_by(|p, q| p.total_cmp(q)),
    ) {
        let line = |x: f64| map(x, fit.intercept + fit.slope * x);
        let ((lx1, ly1), (lx2, ly2)) = (line(lo), line(hi));
        writeln!(
            out,
            r##"<line x1="{lx1:.2}" y1="{ly1:.2}" x2="{lx2:.2}" y2="{ly2:.2}" stroke="#c0392b" stroke-width="2"/>"##
        )
        .expect("writing to a String");
    }
    out.push_str("<g fill=\"#1f4e8c\">\n");
    for &(x, y) in &pts {
        let (cx, cy) = map(x, y);
        writeln!(out, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3.5"/>"#)
            .expect("writing to a String");
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

pub fn emit_dimension_plot(fit: &DimFit, path: &Path) -> Result<()> {
    fs::write(path, dimension_plot_svg(fit)?).map_err(|e| Error::io(path, e))
}
