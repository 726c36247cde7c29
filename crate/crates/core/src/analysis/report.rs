//! Serialized forms of a [`FamilyVerdict`]: JSON, a per-parameter CSV table
//! and SVG plots.

use std::fmt::Write as _;

use super::pipeline::FamilyVerdict;
use crate::cubegrid::CellSet;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "lambda,k_cells,c_cells,diameter,index_trivial,separates,sphere_homology,coercive,polar";

pub fn to_json(v: &FamilyVerdict) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per parameter above the bottom of the range.
pub fn to_csv(v: &FamilyVerdict) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &v.per_lambda {
        let sep = r.separator.as_ref();
        let sig = r.signature.as_ref();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.lambda,
            opt(r.attractor.as_ref().map(|k| k.cells.len())),
            opt(sep.map(|s| s.record.cells.len())),
            opt(sep.and_then(|s| s.record.diameter)),
            opt(r.index_trivial),
            opt(sig.map(|s| s.separates)),
            opt(sig.map(|s| s.sphere_homology)),
            opt(sig.map(|s| s.valid)),
            r.polar_here,
        );
    }
    out
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

/// Separator diameter against the parameter on linear axes.
pub fn diameter_svg(v: &FamilyVerdict) -> String {
    let pts = &v.coercive.diameters;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{y}" x2="{x}" y2="{y}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{y}" stroke="black"/>"#,
        x = W - PAD,
        y = H - PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">lambda</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(s, r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">diameter</text>"#, H / 2.0, H / 2.0);
    if !pts.is_empty() {
        let (lmin, lmax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
        let dmax = pts.iter().map(|p| p.1).fold(0.0f64, f64::max).max(1e-12);
        let span = (lmax - lmin).max(1e-12);
        let px = |l: f64| if pts.len() == 1 { W / 2.0 } else { PAD + (l - lmin) / span * (W - 2.0 * PAD) };
        let py = |d: f64| H - PAD - d / dmax * (H - 2.0 * PAD);
        let poly: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, poly.join(" "));
        for p in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/><text x="{:.2}" y="{:.2}" font-size="10">{:.3} @ {}</text>"#,
                px(p.0),
                py(p.1),
                px(p.0) + 5.0,
                py(p.1) - 5.0,
                p.1,
                p.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Planar cell sets drawn in their grid's box, first layer underneath.
pub fn cells_svg(layers: &[(&CellSet, &str)]) -> Result<String> {
    let Some((first, _)) = layers.first() else { return Err(Error::EmptySet) };
    let g = first.grid();
    if g.dim() != 2 {
        return Err(Error::InvalidArgument("cell plots need a planar grid".into()));
    }
    let (lo, hi) = (g.lo(), g.hi());
    let side = 480.0;
    let scale = side / (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let w = (hi[0] - lo[0]) * scale;
    let h = (hi[1] - lo[1]) * scale;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#);
    let _ = writeln!(s, r#"<rect width="{w:.2}" height="{h:.2}" fill="white" stroke="black"/>"#);
    for (set, color) in layers {
        if !set.same_grid(first) {
            return Err(Error::GridMismatch);
        }
        let _ = writeln!(s, r#"<g fill="{color}">"#);
        for c in set.iter() {
            let (a, b) = g.cell_bounds(c);
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#,
                (a[0] - lo[0]) * scale,
                (hi[1] - b[1]) * scale,
                (b[0] - a[0]) * scale,
                (b[1] - a[1]) * scale
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}
