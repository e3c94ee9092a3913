//! Static SVG scatter plots.

use std::fmt::Write as _;

use psne_core::Matrix;

use crate::error::{CliError, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const PAD: f64 = 48.0;
const RADIUS: f64 = 4.0;

/// Categorical colors, assigned by `label % 10`.
pub const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

/// Endpoints of the continuous gradient.
pub const GRADIENT_LOW: [u8; 3] = [0x44, 0x01, 0x54];
pub const GRADIENT_HIGH: [u8; 3] = [0xfd, 0xe7, 0x25];

#[derive(Debug, Clone)]
pub enum Coloring {
    Categorical(Vec<usize>),
    /// Values are mapped linearly from their minimum (`GRADIENT_LOW`) to
    /// their maximum (`GRADIENT_HIGH`).
    Continuous(Vec<f64>),
}

impl Coloring {
    fn len(&self) -> usize {
        match self {
            Coloring::Categorical(v) => v.len(),
            Coloring::Continuous(v) => v.len(),
        }
    }
}

/// Color at position `f` in `[0, 1]` of the continuous gradient, as `#rrggbb`.
/// Each channel is interpolated linearly and rounded.
pub fn gradient_color(f: f64) -> String {
    let f = f.clamp(0.0, 1.0);
    let ch = |i: usize| {
        let (a, b) = (GRADIENT_LOW[i] as f64, GRADIENT_HIGH[i] as f64);
        (a + (b - a) * f).round() as u8
    };
    format!("#{:02x}{:02x}{:02x}", ch(0), ch(1), ch(2))
}

fn axis_range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span > 0.0 {
        (lo - 0.05 * span, hi + 0.05 * span)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Output of [`scatter_svg`]: the document and any warnings.
#[derive(Debug, Clone)]
pub struct Plot {
    pub svg: String,
    pub warnings: Vec<String>,
}

/// Renders the first two columns of `x` as an SVG scatter plot.
///
/// Axes span the data range plus 5% on each side.
pub fn scatter_svg(x: &Matrix, coloring: &Coloring, title: &str) -> Result<Plot> {
    if x.rows() == 0 {
        return Err(CliError::Invalid("embedding has no rows".into()));
    }
    if x.cols() < 2 {
        return Err(CliError::Invalid(format!("need at least 2 embedding dimensions, got {}", x.cols())));
    }
    if coloring.len() != x.rows() {
        return Err(CliError::Invalid(format!("{} color values for {} samples", coloring.len(), x.rows())));
    }
    let mut warnings = Vec::new();
    if x.cols() > 2 {
        warnings.push(format!("embedding has {} dimensions; plotting dim_0 and dim_1", x.cols()));
    }
    let xs = x.column(0);
    let ys = x.column(1);
    let (x0, x1) = axis_range(&xs);
    let (y0, y1) = axis_range(&ys);
    let plot_w = WIDTH - 2.0 * PAD;
    let plot_h = HEIGHT - 2.0 * PAD;
    let sx = |v: f64| PAD + (v - x0) / (x1 - x0) * plot_w;
    let sy = |v: f64| HEIGHT - PAD - (v - y0) / (y1 - y0) * plot_h;

    let colors: Vec<String> = match coloring {
        Coloring::Categorical(labels) => labels.iter().map(|&l| PALETTE[l % PALETTE.len()].to_owned()).collect(),
        Coloring::Continuous(t) => {
            let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            t.iter().map(|&v| gradient_color(if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })).collect()
        }
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        PAD / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}"/></g>"#,
        b = HEIGHT - PAD,
        r = WIDTH - PAD
    );
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="10">"#);
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}" text-anchor="start">{}</text>"#, HEIGHT - PAD + 14.0, tick(x0));
    let _ =
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, WIDTH - PAD, HEIGHT - PAD + 14.0, tick(x1));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, HEIGHT - PAD, tick(y0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 10.0, tick(y1));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">dim_0</text>"#, WIDTH / 2.0, HEIGHT - PAD / 4.0);
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" text-anchor="middle" transform="rotate(-90 {x} {y})">dim_1</text>"#,
        x = PAD / 3.0,
        y = HEIGHT / 2.0
    );
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g stroke="none" fill-opacity="0.85">"#);
    for i in 0..x.rows() {
        let _ =
            writeln!(s, r#"<circle cx="{:.3}" cy="{:.3}" r="{RADIUS}" fill="{}"/>"#, sx(xs[i]), sy(ys[i]), colors[i]);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    Ok(Plot { svg: s, warnings })
}

fn tick(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_endpoints_and_monotonicity() {
        assert_eq!(gradient_color(0.0), "#440154");
        assert_eq!(gradient_color(1.0), "#fde725");
        assert_eq!(gradient_color(0.5), "#a1743d");
        let green = |f: f64| u8::from_str_radix(&gradient_color(f)[3..5], 16).unwrap();
        assert!(green(0.2) < green(0.8));
    }

    #[test]
    fn one_circle_per_row() {
        let x = Matrix::from_fn(7, 3, |i, j| (i * j) as f64);
        let plot = scatter_svg(&x, &Coloring::Categorical((0..7).collect()), "t").unwrap();
        assert_eq!(plot.svg.matches("<circle").count(), 7);
        assert_eq!(plot.warnings.len(), 1);
        assert!(plot.svg.starts_with("<svg"));
        assert!(plot.svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn data_stays_inside_margins() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [10.0, 1.0]]).unwrap();
        let plot = scatter_svg(&x, &Coloring::Continuous(vec![0.0, 1.0]), "").unwrap();
        let lo = PAD + plot_w_frac(0.05);
        assert!(plot.svg.contains(&format!(r#"cx="{lo:.3}""#)));
    }

    fn plot_w_frac(f: f64) -> f64 {
        f / 1.1 * (WIDTH - 2.0 * PAD)
    }

    #[test]
    fn rejects_bad_input() {
        let one = Matrix::from_fn(3, 1, |i, _| i as f64);
        assert!(scatter_svg(&one, &Coloring::Categorical(vec![0; 3]), "").is_err());
        let empty = Matrix::zeros(0, 2);
        assert!(scatter_svg(&empty, &Coloring::Categorical(vec![]), "").is_err());
        let x = Matrix::zeros(3, 2);
        assert!(scatter_svg(&x, &Coloring::Categorical(vec![0; 2]), "").is_err());
    }
}
