//! Plain SVG renderings of ACFs and wavelet spectra.
//!
//! Elements carry ids so documents can be checked geometrically: ACF markers
//! are `lag-<τ>`, the 2σ lines `two-sigma-upper`/`two-sigma-lower`, the
//! wavelet significance outline `significance`, the cone of influence `coi`,
//! and the global-spectrum threshold `global-threshold`.

use std::fmt::Write as _;

use crate::acfspec::AcfResult;
use crate::waveletspec::{GlobalSpectrum, WaveletSpectrum};

const FONT: &str = "font-family=\"sans-serif\" font-size=\"11\"";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    )
}

/// Linear map from `[d0, d1]` onto `[r0, r1]`.
#[derive(Clone, Copy)]
struct Axis {
    d0: f64,
    d1: f64,
    r0: f64,
    r1: f64,
}

impl Axis {
    fn at(&self, v: f64) -> f64 {
        self.r0 + (v - self.d0) / (self.d1 - self.d0) * (self.r1 - self.r0)
    }
}

/// `c_τ` against lag with dashed `±2σ` lines.
pub fn acf_svg(acf: &AcfResult, title: &str) -> String {
    let (w, h) = (640.0, 360.0);
    let (left, right, top, bottom) = (55.0, 20.0, 30.0, 40.0);
    let max_lag = acf.max_lag() as f64;
    let lo = acf.c.iter().copied().filter(|v| v.is_finite()).fold(-2.5 * acf.two_sigma(), f64::min);
    let x = Axis {
        d0: 0.0,
        d1: max_lag.max(1.0),
        r0: left,
        r1: w - right,
    };
    let y = Axis {
        d0: (lo - 0.05).max(-1.0),
        d1: 1.0,
        r0: h - bottom,
        r1: top,
    };
    let mut s = header(w, h);
    let _ = writeln!(s, "<text x=\"{left}\" y=\"18\" {FONT}>{}</text>", escape(title));
    let _ = writeln!(
        s,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        w - left - right,
        h - top - bottom
    );
    for tick in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        if tick < y.d0 {
            continue;
        }
        let ty = y.at(tick);
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" {FONT}>{tick}</text>",
            left - 5.0,
            ty + 4.0
        );
    }
    for lag in (0..=acf.max_lag()).step_by(5) {
        let tx = x.at(lag as f64);
        let _ = writeln!(
            s,
            "<text x=\"{tx}\" y=\"{}\" text-anchor=\"middle\" {FONT}>{lag}</text>",
            h - bottom + 15.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT}>lag (rotations)</text>",
        (left + w - right) / 2.0,
        h - 8.0
    );
    let zero = y.at(0.0);
    let _ = writeln!(
        s,
        "<line id=\"zero\" x1=\"{left}\" y1=\"{zero}\" x2=\"{}\" y2=\"{zero}\" stroke=\"gray\"/>",
        w - right
    );
    for (id, v) in [("two-sigma-upper", acf.two_sigma()), ("two-sigma-lower", -acf.two_sigma())] {
        let ly = y.at(v);
        let _ = writeln!(
            s,
            "<line id=\"{id}\" x1=\"{left}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"black\" stroke-dasharray=\"6 4\"/>",
            w - right
        );
    }
    let points: Vec<String> = acf
        .c
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(t, v)| format!("{:.2},{:.2}", x.at(t as f64), y.at(*v)))
        .collect();
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\"/>",
        points.join(" ")
    );
    for (t, v) in acf.c.iter().enumerate().filter(|(_, v)| v.is_finite()) {
        let _ = writeln!(
            s,
            "<circle id=\"lag-{t}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"steelblue\"/>",
            x.at(t as f64),
            y.at(*v)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Colour level of `power / variance` on a doubling scale.
fn level(ratio: f64) -> usize {
    const EDGES: [f64; 7] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    EDGES.iter().filter(|&&e| ratio >= e).count()
}

const PALETTE: [&str; 8] = [
    "#ffffff", "#deebf7", "#c6dbef", "#9ecae1", "#fdd49e", "#fdae6b", "#f16913", "#a63603",
];

/// Row boundaries in log2(period), halfway between neighbouring periods.
fn row_edges(periods: &[f64]) -> Vec<f64> {
    let lp: Vec<f64> = periods.iter().map(|p| p.log2()).collect();
    let n = lp.len();
    let step = if n > 1 { lp[1] - lp[0] } else { 1.0 };
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(lp[0] - step / 2.0);
    for j in 1..n {
        edges.push((lp[j - 1] + lp[j]) / 2.0);
    }
    edges.push(lp[n - 1] + step / 2.0);
    edges
}

struct WaveletFrame {
    x: Axis,
    y: Axis,
    edges: Vec<f64>,
    n: usize,
}

impl WaveletFrame {
    /// Left edge of time cell `t` (cells are one rotation wide).
    fn tx(&self, t: usize) -> f64 {
        self.x.at(t as f64)
    }

    /// Vertical extent of scale row `j`; short periods on top.
    fn row(&self, j: usize) -> (f64, f64) {
        (self.y.at(self.edges[j]), self.y.at(self.edges[j + 1]))
    }
}

/// Time–period power map with the significance outline and hatched cone of
/// influence, plus the global spectrum and its threshold on the right.
pub fn wavelet_svg(spectrum: &WaveletSpectrum, global: &GlobalSpectrum, title: &str) -> String {
    let (w, h) = (820.0, 380.0);
    let (left, top, bottom) = (55.0, 30.0, 40.0);
    let map_right = 620.0;
    let (gl, gr) = (640.0, 800.0);
    let n = spectrum.n_times();
    let edges = row_edges(&spectrum.periods);
    let frame = WaveletFrame {
        x: Axis {
            d0: 0.0,
            d1: n as f64,
            r0: left,
            r1: map_right,
        },
        y: Axis {
            d0: edges[0],
            d1: edges[edges.len() - 1],
            r0: top,
            r1: h - bottom,
        },
        edges,
        n,
    };
    let mut s = header(w, h);
    s.push_str(
        "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\">\
         <line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"black\" stroke-width=\"1\"/></pattern></defs>\n",
    );
    let _ = writeln!(s, "<text x=\"{left}\" y=\"18\" {FONT}>{}</text>", escape(title));

    s.push_str("<g id=\"power\">\n");
    let variance = if spectrum.variance > 0.0 { spectrum.variance } else { 1.0 };
    for j in 0..spectrum.periods.len() {
        let (y0, y1) = frame.row(j);
        let mut t = 0;
        while t < n {
            let lv = level(spectrum.power[j][t] / variance);
            let start = t;
            while t < n && level(spectrum.power[j][t] / variance) == lv {
                t += 1;
            }
            if lv > 0 {
                let _ = writeln!(
                    s,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                    frame.tx(start),
                    y0,
                    frame.tx(t) - frame.tx(start),
                    y1 - y0,
                    PALETTE[lv]
                );
            }
        }
    }
    s.push_str("</g>\n");

    let _ = writeln!(
        s,
        "<path id=\"significance\" d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>",
        significance_outline(spectrum, &frame)
    );

    let mut coi = Vec::with_capacity(n + 2);
    let bottom_y = frame.y.at(frame.y.d1);
    coi.push(format!("{:.2},{bottom_y:.2}", frame.tx(0)));
    for t in 0..n {
        let c = spectrum.coi[t].max(1e-3).log2().clamp(frame.y.d0, frame.y.d1);
        let cy = frame.y.at(c);
        coi.push(format!("{:.2},{cy:.2}", frame.tx(t)));
        coi.push(format!("{:.2},{cy:.2}", frame.tx(t + 1)));
    }
    coi.push(format!("{:.2},{bottom_y:.2}", frame.tx(n)));
    let _ = writeln!(
        s,
        "<polygon id=\"coi\" points=\"{}\" fill=\"url(#hatch)\" fill-opacity=\"0.5\" stroke=\"gray\"/>",
        coi.join(" ")
    );
    let _ = writeln!(
        s,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        map_right - left,
        h - top - bottom
    );
    for p in [2.0f64, 4.0, 8.0, 16.0, 32.0, 64.0] {
        let lp = p.log2();
        if lp < frame.y.d0 || lp > frame.y.d1 {
            continue;
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" {FONT}>{p}</text>",
            left - 5.0,
            frame.y.at(lp) + 4.0
        );
    }
    let tick_step = (n / 6).max(1);
    for t in (0..n).step_by(tick_step) {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" {FONT}>{}</text>",
            frame.tx(t),
            h - bottom + 15.0,
            spectrum.times[t]
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT}>Carrington rotation</text>",
        (left + map_right) / 2.0,
        h - 8.0
    );

    let pmax = global
        .mean_power
        .iter()
        .chain(&global.significance_level)
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-12);
    let gx = Axis {
        d0: 0.0,
        d1: pmax * 1.05,
        r0: gl,
        r1: gr,
    };
    let curve = |values: &[f64]| -> String {
        values
            .iter()
            .zip(&global.periods)
            .map(|(v, p)| format!("{:.2},{:.2}", gx.at(*v), frame.y.at(p.log2())))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(
        s,
        "<rect x=\"{gl}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        gr - gl,
        h - top - bottom
    );
    let _ = writeln!(
        s,
        "<polyline id=\"global-power\" points=\"{}\" fill=\"none\" stroke=\"black\"/>",
        curve(&global.mean_power)
    );
    let _ = writeln!(
        s,
        "<polyline id=\"global-threshold\" points=\"{}\" fill=\"none\" stroke=\"black\" stroke-dasharray=\"5 3\"/>",
        curve(&global.significance_level)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT}>global power</text>",
        (gl + gr) / 2.0,
        h - 8.0
    );
    s.push_str("</svg>\n");
    s
}

/// Cell edges separating significant from non-significant cells.
fn significance_outline(spectrum: &WaveletSpectrum, frame: &WaveletFrame) -> String {
    let m = &spectrum.significance_mask;
    let rows = m.len();
    let sig = |j: isize, t: isize| -> bool {
        j >= 0 && t >= 0 && (j as usize) < rows && (t as usize) < frame.n && m[j as usize][t as usize]
    };
    let mut d = String::new();
    for j in 0..rows as isize {
        let (y0, y1) = frame.row(j as usize);
        for t in 0..frame.n as isize {
            if !sig(j, t) {
                continue;
            }
            let (x0, x1) = (frame.tx(t as usize), frame.tx(t as usize + 1));
            if !sig(j - 1, t) {
                let _ = write!(d, "M{x0:.2} {y0:.2}H{x1:.2}");
            }
            if !sig(j + 1, t) {
                let _ = write!(d, "M{x0:.2} {y1:.2}H{x1:.2}");
            }
            if !sig(j, t - 1) {
                let _ = write!(d, "M{x0:.2} {y0:.2}V{y1:.2}");
            }
            if !sig(j, t + 1) {
                let _ = write!(d, "M{x1:.2} {y0:.2}V{y1:.2}");
            }
        }
    }
    d
}
