//! Deterministic SVG figures: fixed six-decimal coordinates, elements in sorted order.

use crate::fractal::{FractalCloud, PsiEnclosure};
use crate::hmap::MinimalComponent;
use crate::iem::{AffineIemSpec, IemSpec};
use crate::substitution::Substitution;
use std::f64::consts::TAU;
use std::fmt::Write;

const SIZE: f64 = 800.0;

fn f6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn header(view: &str) -> String {
    format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"{view}\">\n")
}

/// Fixed palette, cycled by label index.
pub fn color(i: usize) -> &'static str {
    const P: [&str; 12] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"];
    P[i % P.len()]
}

/// Point cloud in the unit square; one circle of radius half a pixel per point.
pub fn fractal_svg(cloud: &FractalCloud<f64>) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in &cloud.points {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12) * 1.05;
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let mut pts: Vec<(String, String)> = cloud
        .points
        .iter()
        .map(|z| (f6(0.5 + (z.re - cx) / span), f6(0.5 - (z.im - cy) / span)))
        .collect();
    pts.sort();
    let r = f6(0.5 / SIZE);
    let mut out = header("0 0 1 1");
    for (x, y) in pts {
        let _ = writeln!(out, "<circle cx=\"{x}\" cy=\"{y}\" r=\"{r}\" fill=\"black\"/>");
    }
    out.push_str("</svg>\n");
    out
}

pub fn cloud_csv(cloud: &FractalCloud<f64>) -> String {
    let mut out = String::from("re,im\n");
    for z in &cloud.points {
        let _ = writeln!(out, "{},{}", crate::report::num17(z.re), crate::report::num17(z.im));
    }
    out
}

fn polar(cx: f64, cy: f64, r: f64, angle: f64) -> (f64, f64) {
    (cx + r * angle.cos(), cy - r * angle.sin())
}

/// Unit circle with one radial mark per tie direction.
pub fn psi_svg(enclosures: &[PsiEnclosure]) -> String {
    let mut out = header("-1.2 -1.2 2.4 2.4");
    out.push_str("<circle cx=\"0.000000\" cy=\"0.000000\" r=\"1.000000\" fill=\"none\" stroke=\"black\" stroke-width=\"0.005000\"/>\n");
    let mut marks: Vec<String> = enclosures
        .iter()
        .map(|e| {
            let (a, b) = polar(0.0, 0.0, 0.9, e.mid());
            let (c, d) = polar(0.0, 0.0, 1.1, e.mid());
            format!("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"red\" stroke-width=\"0.010000\"/>", f6(a), f6(b), f6(c), f6(d))
        })
        .collect();
    marks.sort();
    for m in marks {
        out.push_str(&m);
        out.push('\n');
    }
    out.push_str("</svg>\n");
    out
}

/// One ring per component, sectors colored by label, stacked outward when labels overlap in direction.
pub fn components_svg(sub: &Substitution, comps: &[MinimalComponent]) -> String {
    let n = comps.len().max(1) as f64;
    let width = 2.6 * n;
    let mut out = header(&format!("0 0 {} 2.6", f6(width)));
    for (k, c) in comps.iter().enumerate() {
        let cx = 1.3 + 2.6 * k as f64;
        let _ = writeln!(out, "<g id=\"component-{k}\">");
        let _ = writeln!(out, "  <circle cx=\"{}\" cy=\"1.300000\" r=\"1.100000\" fill=\"none\" stroke=\"black\" stroke-width=\"0.005000\"/>", f6(cx));
        let mut sectors: Vec<String> = Vec::new();
        for a in c.arcs.arcs(sub) {
            let li = sub.label_index(a.label);
            let ring = 1.0 - 0.08 * (li % 4) as f64;
            let (x0, y0) = polar(cx, 1.3, ring, a.start);
            let (x1, y1) = polar(cx, 1.3, ring, a.start + a.len);
            let large = u8::from(a.len > TAU / 2.0);
            if a.len >= TAU - 1e-12 {
                sectors.push(format!(
                    "<circle cx=\"{}\" cy=\"1.300000\" r=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"0.060000\"><title>{}</title></circle>",
                    f6(cx),
                    f6(ring),
                    color(li),
                    sub.format_label(a.label)
                ));
            } else {
                sectors.push(format!(
                    "<path d=\"M {} {} A {} {} 0 {large} 0 {} {}\" fill=\"none\" stroke=\"{}\" stroke-width=\"0.060000\"><title>{}</title></path>",
                    f6(x0),
                    f6(y0),
                    f6(ring),
                    f6(ring),
                    f6(x1),
                    f6(y1),
                    color(li),
                    sub.format_label(a.label)
                ));
            }
        }
        sectors.sort();
        for s in sectors {
            let _ = writeln!(out, "  {s}");
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Graphs of the blown-up map and the base map on the unit square.
pub fn affine_svg(f: &AffineIemSpec, t: &IemSpec<f64>) -> String {
    let mut out = header("0 0 1 1");
    let seg = |x0: f64, y0: f64, x1: f64, y1: f64, stroke: &str| {
        format!("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"0.002000\"/>", f6(x0), f6(1.0 - y0), f6(x1), f6(1.0 - y1))
    };
    let mut lines: Vec<String> = t.pieces().iter().map(|p| seg(p.start, p.start + p.delta, p.end(), p.end() + p.delta, "#7f7f7f")).collect();
    lines.extend(f.pieces.iter().filter(|p| p.len > 1e-6).map(|p| seg(p.start, p.image, p.start + p.len, p.image + p.slope * p.len, "#d62728")));
    lines.sort();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out.push_str("</svg>\n");
    out
}
