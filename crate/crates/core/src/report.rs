//! CSV/text/SVG emitters for benchmark, discrimination and extraction outputs.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::bt::LeafAction;
use crate::eval::{BenchmarkReport, DiscriminationReport, PairSetting};
use crate::evolve::{ExtractionResult, GenerationStats};
use crate::metrics::{STREAM_COUNT, STREAM_NAMES};

pub const BENCHMARK_HEADER: &str = "trial,original,extracted,jaccard,final_fitness,class";
pub const DISCRIMINATION_HEADER: &str = "pair,setting,metric,distance";
pub const GENERATION_LOG_HEADER: &str = "generation,best_fitness,mean_fitness,best_tree";

/// Tree strings contain commas, so they are quoted.
pub fn write_benchmark_csv<W: Write>(report: &BenchmarkReport, mut out: W) -> io::Result<()> {
    writeln!(out, "{BENCHMARK_HEADER}")?;
    for t in &report.trials {
        writeln!(
            out,
            "{},\"{}\",\"{}\",{},{},{}",
            t.trial,
            t.original,
            t.extracted,
            t.jaccard,
            t.final_fitness,
            t.class.label()
        )?;
    }
    out.flush()
}

pub fn benchmark_summary(report: &BenchmarkReport) -> String {
    let mut s = String::new();
    let n = report.trials.len();
    let _ = writeln!(s, "trials: {n}");
    let _ = writeln!(s, "leaf_count: {}", report.leaf_count);
    let _ = writeln!(s, "exact: {}", report.exact_count);
    let _ = writeln!(s, "high_similarity: {}", report.high_similarity_count);
    let _ = writeln!(s, "low_similarity: {}", report.low_similarity_count);
    let _ = writeln!(s, "order_exact: {}", report.order_exact_count);
    let _ = writeln!(s, "mean_jaccard: {:.4}", report.mean_jaccard);
    if report.zero_jaccard_trials.is_empty() {
        let _ = writeln!(s, "zero_jaccard_trials: none");
    } else {
        let list: Vec<String> = report
            .zero_jaccard_trials
            .iter()
            .map(|t| t.to_string())
            .collect();
        let _ = writeln!(
            s,
            "zero_jaccard_trials: {} (WARNING: extraction shares no leaf with the original)",
            list.join(" ")
        );
    }
    s
}

/// One row per action; `replaced_by_<token>` columns count actions seen in place of a miss.
pub fn write_confusion_csv<W: Write>(report: &BenchmarkReport, mut out: W) -> io::Result<()> {
    write!(out, "action,occurrences,missed,over_extracted")?;
    for a in LeafAction::ALL {
        write!(out, ",replaced_by_{}", a.token())?;
    }
    writeln!(out)?;
    for c in &report.confusion {
        write!(
            out,
            "{},{},{},{}",
            c.action, c.occurrences, c.missed, c.over_extracted
        )?;
        for n in c.replaced_by {
            write!(out, ",{n}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn write_histories_csv<W: Write>(report: &BenchmarkReport, mut out: W) -> io::Result<()> {
    writeln!(out, "trial,generation,best_fitness,mean_fitness")?;
    for t in &report.trials {
        for g in &t.history {
            writeln!(
                out,
                "{},{},{},{}",
                t.trial, g.generation, g.best_fitness, g.mean_fitness
            )?;
        }
    }
    out.flush()
}

pub fn write_learning_curve_csv<W: Write>(report: &BenchmarkReport, mut out: W) -> io::Result<()> {
    writeln!(out, "generation,mean_best_fitness,mean_average_fitness")?;
    for (g, (best, mean)) in report.learning_curve().into_iter().enumerate() {
        writeln!(out, "{g},{best},{mean}")?;
    }
    out.flush()
}

pub fn write_discrimination_csv<W: Write>(
    report: &DiscriminationReport,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "{DISCRIMINATION_HEADER}")?;
    for setting in [PairSetting::SameTree, PairSetting::DifferentTrees] {
        for (pair, row) in report.rows(setting).iter().enumerate() {
            for (k, d) in row.iter().enumerate() {
                writeln!(out, "{pair},{},{},{d}", setting.label(), STREAM_NAMES[k])?;
            }
        }
    }
    out.flush()
}

pub fn discrimination_summary(report: &DiscriminationReport) -> String {
    let mut s = format!("{:<18} {:>10} {:>10}\n", "metric", "same", "different");
    for (k, name) in STREAM_NAMES.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:<18} {:>10.4} {:>10.4}",
            name,
            report.mean_same(k),
            report.mean_different(k)
        );
    }
    let _ = writeln!(
        s,
        "discriminating streams: {}/{STREAM_COUNT}",
        report.discriminating_streams().len()
    );
    s
}

pub fn generation_log_line(g: &GenerationStats) -> String {
    format!(
        "{},{},{},{}",
        g.generation, g.best_fitness, g.mean_fitness, g.best_tree
    )
}

pub fn extraction_json(result: &ExtractionResult) -> serde_json::Result<String> {
    serde_json::to_string_pretty(result)
}

/// Minimal SVG line chart; every series shares the x axis (its index).
pub fn svg_line_chart(title: &str, series: &[(&str, &str, Vec<f64>)]) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let len = series.iter().map(|s| s.2.len()).max().unwrap_or(0);
    let (lo, hi) = series
        .iter()
        .flat_map(|s| s.2.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let (lo, hi) = if lo.is_finite() && hi > lo {
        (lo, hi)
    } else {
        (0.0, 1.0)
    };
    let x = |i: usize| pad + (w - 2.0 * pad) * i as f64 / (len.max(2) - 1) as f64;
    let y = |v: f64| h - pad - (h - 2.0 * pad) * (v - lo) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="25" text-anchor="middle" font-size="16">{title}</text>"#,
        w / 2.0
    );
    let _ = writeln!(
        s,
        r#"<polyline points="{pad},{pad} {pad},{} {},{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad,
        h - pad
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{hi:.3}</text>"#,
        pad - 4.0,
        pad + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{lo:.3}</text>"#,
        pad - 4.0,
        h - pad
    );
    for (n, (name, color, values)) in series.iter().enumerate() {
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", x(i), y(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" fill="{color}">{name}</text>"#,
            w - pad - 120.0,
            pad + 16.0 * (n as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}
