//! Raster rendering of phase CSVs: exact-recovery rate against Δ² on a
//! log(1 + Δ²) axis, one polyline per series, thresholds as dashed lines.

use std::collections::BTreeMap;
use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};
use imageproc::drawing::{draw_filled_circle_mut, draw_hollow_rect_mut, draw_line_segment_mut};
use imageproc::rect::Rect;

use crate::error::{HarnessError, HarnessResult};

pub const WIDTH: u32 = 640;
pub const HEIGHT: u32 = 480;
const MARGIN: f32 = 40.0;

const PALETTE: [[u8; 3]; 6] = [
    [31, 119, 180],
    [44, 160, 44],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [23, 190, 207],
];
const COMP_COLOR: Rgb<u8> = Rgb([214, 39, 40]);
const STAT_COLOR: Rgb<u8> = Rgb([255, 127, 14]);
const AXIS_COLOR: Rgb<u8> = Rgb([0, 0, 0]);
const GRID_COLOR: Rgb<u8> = Rgb([225, 225, 225]);

/// A parsed data row, reduced to what the plot needs.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotPoint {
    pub series: String,
    pub delta2: f64,
    pub rate: f64,
    pub comp_threshold: f64,
    pub stat_threshold: f64,
}

fn csv_err(line: u64, msg: impl Into<String>) -> HarnessError {
    HarnessError::Csv { line, msg: msg.into() }
}

fn column(headers: &csv::StringRecord, name: &str) -> HarnessResult<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| csv_err(1, format!("missing column {name:?}")))
}

/// Parses a phase CSV. Comment lines start with '#'; every data line must
/// parse, otherwise the error names its line.
pub fn parse_phase_csv(text: &str) -> HarnessResult<Vec<PlotPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| csv_err(e.position().map_or(1, |p| p.line()), e.to_string()))?
        .clone();
    let series_cols: Vec<usize> = ["model", "n", "p", "K", "L", "s", "estimator"]
        .iter()
        .map(|c| column(&headers, c))
        .collect::<HarnessResult<_>>()?;
    let d_col = column(&headers, "delta2_target")?;
    let r_col = column(&headers, "exact_recovery_rate")?;
    let c_col = column(&headers, "comp_threshold")?;
    let s_col = column(&headers, "stat_threshold")?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> HarnessResult<f64> {
            let raw = rec.get(i).unwrap_or("");
            raw.trim()
                .parse::<f64>()
                .map_err(|_| csv_err(line, format!("column {:?}: not a number: {raw:?}", &headers[i])))
        };
        let series = series_cols
            .iter()
            .map(|&i| format!("{}={}", &headers[i], rec.get(i).unwrap_or("")))
            .collect::<Vec<_>>()
            .join(" ");
        out.push(PlotPoint {
            series,
            delta2: num(d_col)?,
            rate: num(r_col)?,
            comp_threshold: num(c_col)?,
            stat_threshold: num(s_col)?,
        });
    }
    Ok(out)
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn over(values: impl Iterator<Item = f64>) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Axis { lo: 0.0, hi: 1.0 };
        }
        // a single value still needs a nonzero span
        let pad = if hi > lo {
            0.05 * (hi - lo)
        } else {
            lo.abs().max(1.0) * 0.5
        };
        Axis {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn map(&self, v: f64, from: f32, to: f32) -> f32 {
        from + ((v - self.lo) / (self.hi - self.lo)) as f32 * (to - from)
    }
}

/// Renders the rows; rows whose rate is not finite (error rows) are skipped.
pub fn render_plot(points: &[PlotPoint]) -> HarnessResult<RgbImage> {
    let data: Vec<&PlotPoint> = points
        .iter()
        .filter(|p| p.rate.is_finite() && p.delta2.is_finite())
        .collect();
    if data.is_empty() {
        return Err(HarnessError::Plot("no data rows to plot".into()));
    }
    // ladders usually span decades; ln_1p keeps Δ² = 0 on the axis
    let xs = data
        .iter()
        .flat_map(|p| [p.delta2, p.comp_threshold, p.stat_threshold])
        .filter(|v| *v >= 0.0)
        .map(f64::ln_1p);
    let x_axis = Axis::over(xs);
    let y_axis = Axis { lo: -0.02, hi: 1.02 };
    let (left, right) = (MARGIN, WIDTH as f32 - MARGIN / 2.0);
    let (top, bottom) = (MARGIN / 2.0, HEIGHT as f32 - MARGIN);
    let px = |x: f64| x_axis.map(x.max(0.0).ln_1p(), left, right);
    let py = |y: f64| y_axis.map(y, bottom, top);

    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, Rgb([255, 255, 255]));
    for tick in 0..=4 {
        let y = py(f64::from(tick) / 4.0);
        draw_line_segment_mut(&mut img, (left, y), (right, y), GRID_COLOR);
    }
    let mut thresholds: Vec<(f64, Rgb<u8>)> = Vec::new();
    for p in &data {
        for (v, c) in [(p.comp_threshold, COMP_COLOR), (p.stat_threshold, STAT_COLOR)] {
            if v.is_finite() && !thresholds.iter().any(|t| t.0 == v && t.1 == c) {
                thresholds.push((v, c));
            }
        }
    }
    for (v, c) in thresholds {
        let x = px(v);
        // dashed
        let mut y = top;
        while y < bottom {
            draw_line_segment_mut(&mut img, (x, y), (x, (y + 6.0).min(bottom)), c);
            y += 10.0;
        }
    }
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for p in &data {
        series.entry(p.series.as_str()).or_default().push((p.delta2, p.rate));
    }
    for (i, pts) in series.values_mut().enumerate() {
        let color = Rgb(PALETTE[i % PALETTE.len()]);
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pts.windows(2) {
            draw_line_segment_mut(&mut img, (px(w[0].0), py(w[0].1)), (px(w[1].0), py(w[1].1)), color);
        }
        for &(x, y) in pts.iter() {
            draw_filled_circle_mut(&mut img, (px(x).round() as i32, py(y).round() as i32), 3, color);
        }
    }
    let frame = Rect::at(left as i32, top as i32).of_size((right - left) as u32, (bottom - top) as u32);
    draw_hollow_rect_mut(&mut img, frame, AXIS_COLOR);
    Ok(img)
}

/// Reads `input`, renders, and writes a PNG to `output`. Nothing is written
/// unless parsing and rendering both succeed.
pub fn plot_file(input: &Path, output: &Path) -> HarnessResult<()> {
    let text = std::fs::read_to_string(input)?;
    let img = render_plot(&parse_phase_csv(&text)?)?;
    img.save_with_format(output, ImageFormat::Png)
        .map_err(|e| HarnessError::Plot(e.to_string()))
}
