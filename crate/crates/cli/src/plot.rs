//! Window-sweep line charts as standalone SVG.

use std::fmt::Write;

use phri_core::classifiers::Algorithm;
use phri_core::evaluation::SweepPoint;
use phri_core::features::FeatureMode;

const WIDTH: f64 = 680.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

type SeriesKey = (FeatureMode, Algorithm);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    OvoAuc,
}

impl Metric {
    fn label(self) -> &'static str {
        match self {
            Metric::Accuracy => "Mean accuracy",
            Metric::OvoAuc => "One-vs-one AUC",
        }
    }

    fn value(self, p: &SweepPoint) -> Option<f64> {
        match self {
            Metric::Accuracy => Some(p.accuracy),
            Metric::OvoAuc => p.ovo_auc,
        }
    }
}

fn color(algo: Algorithm) -> &'static str {
    match algo {
        Algorithm::Knn => "#1f77b4",
        Algorithm::Rf => "#d62728",
    }
}

fn dash(mode: FeatureMode) -> &'static str {
    match mode {
        FeatureMode::Abstract => "",
        FeatureMode::Raw => " stroke-dasharray=\"6 4\"",
    }
}

/// One line per (feature mode, algorithm) present in `points`.
pub fn sweep_chart(points: &[SweepPoint], metric: Metric) -> String {
    let mut series: Vec<(SeriesKey, Vec<(usize, f64)>)> = Vec::new();
    for p in points {
        let key = (p.feature_mode, p.algorithm);
        let idx = match series.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                series.push((key, Vec::new()));
                series.len() - 1
            }
        };
        if let Some(v) = metric.value(p).filter(|v| v.is_finite()) {
            series[idx].1.push((p.window, v));
        }
    }
    series.sort_by_key(|(k, _)| *k);
    for (_, pts) in &mut series {
        pts.sort_by_key(|&(w, _)| w);
    }

    let all: Vec<(usize, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let (mut x_lo, mut x_hi) = all
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), &(w, _)| (lo.min(w), hi.max(w)));
    if all.is_empty() {
        (x_lo, x_hi) = (0, 100);
    }
    let (x_lo, x_hi) = if x_lo == x_hi {
        (x_lo as f64 - 5.0, x_hi as f64 + 5.0)
    } else {
        (x_lo as f64, x_hi as f64)
    };
    let v_min = all.iter().map(|&(_, v)| v).fold(1.0_f64, f64::min);
    let y_lo = ((v_min - 0.005) / 0.05).floor() * 0.05;
    let y_lo = y_lo.clamp(0.0, 0.95);
    let y_hi = 1.0;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |w: f64| LEFT + (w - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |v: f64| TOP + (y_hi - v) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{} vs. observation window</text>",
        LEFT + plot_w / 2.0,
        metric.label()
    );

    let ticks = 5;
    for i in 0..=ticks {
        let v = y_lo + (y_hi - y_lo) * i as f64 / ticks as f64;
        let y = sy(v);
        let _ = writeln!(
            s,
            "<line x1=\"{LEFT:.1}\" y1=\"{y:.2}\" x2=\"{:.1}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>",
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\">{v:.3}</text>",
            LEFT - 6.0,
            y + 4.0
        );
    }
    let mut windows: Vec<usize> = all.iter().map(|&(w, _)| w).collect();
    windows.sort_unstable();
    windows.dedup();
    for w in &windows {
        let x = sx(*w as f64);
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{:.1}\" text-anchor=\"middle\">{w}</text>",
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        "<rect x=\"{LEFT:.1}\" y=\"{TOP:.1}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" fill=\"none\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">Window size (samples)</text>",
        LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        metric.label()
    );

    for (i, ((mode, algo), pts)) in series.iter().enumerate() {
        let name = format!("{mode} + {}", algo.name().to_uppercase());
        let c = color(*algo);
        let d = dash(*mode);
        let _ = writeln!(s, "<g class=\"series\" data-series=\"{mode}-{algo}\">");
        if pts.len() > 1 {
            let path: Vec<String> = pts
                .iter()
                .map(|&(w, v)| format!("{:.2},{:.2}", sx(w as f64), sy(v)))
                .collect();
            let _ = writeln!(
                s,
                "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"2\"{d} points=\"{}\"/>",
                path.join(" ")
            );
        }
        for &(w, v) in pts {
            let _ = writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{c}\"><title>{name} w={w}: {v:.4}</title></circle>",
                sx(w as f64),
                sy(v)
            );
        }
        let ly = TOP + 14.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 16.0;
        let _ = writeln!(
            s,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{c}\" stroke-width=\"2\"{d}/>",
            lx + 28.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\">{name}</text>",
            lx + 34.0,
            ly + 4.0
        );
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}
