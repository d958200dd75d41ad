use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::RunRecord;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 3] = ["#1b9e77", "#d95f02", "#7570b3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Gyro,
    Euler,
    Error,
    Weights,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gyro" => Ok(Self::Gyro),
            "euler" => Ok(Self::Euler),
            "error" => Ok(Self::Error),
            "weights" => Ok(Self::Weights),
            other => Err(Error::Invalid(format!(
                "unknown plot kind `{other}` (gyro | euler | error | weights)"
            ))),
        }
    }
}

struct Series {
    label: String,
    color: &'static str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

/// Renders a run as a standalone SVG document. `log_y` applies to the
/// error plot only.
pub fn render_svg(record: &RunRecord, kind: PlotKind, log_y: bool) -> String {
    let log_y = log_y && kind == PlotKind::Error;
    let rows = &record.rows;
    let pick = |f: &dyn Fn(&crate::harness::RunRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (r.t, f(r))).collect()
    };
    let axes = ["x", "y", "z"];
    let angles = ["roll", "pitch", "yaw"];
    let (title, ylabel, series) = match kind {
        PlotKind::Gyro => (
            "Measured angular velocity",
            "rad/s",
            (0..3)
                .map(|i| Series {
                    label: format!("ω_m,{}", axes[i]),
                    color: COLORS[i],
                    dashed: false,
                    points: pick(&|r| r.omega_m[i]),
                })
                .collect::<Vec<_>>(),
        ),
        PlotKind::Euler => (
            "True and estimated Euler angles",
            "rad",
            (0..3)
                .flat_map(|i| {
                    [
                        Series {
                            label: format!("{} true", angles[i]),
                            color: COLORS[i],
                            dashed: false,
                            points: pick(&|r| r.euler[i]),
                        },
                        Series {
                            label: format!("{} estimate", angles[i]),
                            color: COLORS[i],
                            dashed: true,
                            points: pick(&|r| r.euler_hat[i]),
                        },
                    ]
                })
                .collect(),
        ),
        PlotKind::Error => (
            "Normalized Euclidean error",
            "‖R̃‖_I",
            vec![Series {
                label: "err_RI".into(),
                color: COLORS[0],
                dashed: false,
                points: pick(&|r| r.err_ri),
            }],
        ),
        PlotKind::Weights => (
            "Frobenius norm of adaptive weights",
            "‖Ŵ‖_F",
            vec![Series {
                label: "‖Ŵ‖_F".into(),
                color: COLORS[0],
                dashed: false,
                points: pick(&|r| r.w_frob),
            }],
        ),
    };
    draw(title, ylabel, &series, log_y)
}

pub fn emit_plot(
    record: &RunRecord,
    kind: PlotKind,
    log_y: bool,
    path: impl AsRef<Path>,
) -> Result<()> {
    std::fs::write(path, render_svg(record, kind, log_y))?;
    Ok(())
}

fn draw(title: &str, ylabel: &str, series: &[Series], log_y: bool) -> String {
    let ty = |v: f64| if log_y { v.max(1e-300).log10() } else { v };
    let finite = |p: &&(f64, f64)| p.0.is_finite() && ty(p.1).is_finite();
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().filter(finite).map(|p| (p.0, ty(p.1))))
        .collect();

    let (mut x0, mut x1) = bounds(all.iter().map(|p| p.0)).unwrap_or((0.0, 1.0));
    let (mut y0, mut y1) = bounds(all.iter().map(|p| p.1)).unwrap_or((0.0, 1.0));
    if x1 - x0 <= 0.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if log_y {
        y0 = y0.floor();
        y1 = y1.ceil().max(y0 + 1.0);
    } else if y1 - y0 <= 0.0 {
        y0 -= 0.5;
        y1 += 0.5;
    } else {
        let pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
    }

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    for x in ticks(x0, x1) {
        let px = sx(x);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{b:.2}" x2="{px:.2}" y2="{b2:.2}" stroke="black"/><text x="{px:.2}" y="{ty:.2}" text-anchor="middle">{}</text>"#,
            label(x),
            b = TOP + ph,
            b2 = TOP + ph + 5.0,
            ty = TOP + ph + 18.0,
        );
    }
    let yt: Vec<f64> = if log_y {
        (y0 as i64..=y1 as i64).map(|d| d as f64).collect()
    } else {
        ticks(y0, y1)
    };
    for y in yt {
        let py = sy(y);
        let text = if log_y {
            format!("1e{}", y as i64)
        } else {
            label(y)
        };
        let _ = writeln!(
            s,
            r#"<line x1="{a:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{tx:.2}" y="{ty:.2}" text-anchor="end">{text}</text>"#,
            a = LEFT - 5.0,
            tx = LEFT - 8.0,
            ty = py + 4.0,
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">time (s)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{cy}" text-anchor="middle" transform="rotate(-90 20 {cy})">{}</text>"#,
        escape(ylabel),
        cy = TOP + ph / 2.0
    );

    for ser in series {
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(finite)
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(ty(y))))
            .collect();
        let dash = if ser.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2"{dash} points="{}"/>"#,
            ser.color,
            pts.join(" ")
        );
    }

    let lx = LEFT + pw + 15.0;
    for (i, ser) in series.iter().enumerate() {
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let dash = if ser.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 25.0,
            ser.color,
            lx + 30.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(it: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    it.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((a, b)) => Some((a.min(v), b.max(v))),
    })
}

/// Roughly five ticks at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let v = if v.abs() < 1e-12 { 0.0 } else { v };
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
