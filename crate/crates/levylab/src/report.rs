//! Experiment reports: per-check records with pass/fail, CSV and structured
//! text emission, and a minimal SVG line-chart writer.
//!
//! Report files are byte-deterministic for a fixed config and seed: float
//! formatting is pinned and runtimes go to the console, never into the files.

use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub values: Vec<(String, f64)>,
    pub bound: Option<f64>,
    pub passed: Option<bool>,
    pub n_samples: u64,
    pub notes: String,
}

impl CheckRecord {
    pub fn new(name: &str, anchor: &str) -> Self {
        CheckRecord {
            name: name.into(),
            anchor: anchor.into(),
            values: Vec::new(),
            bound: None,
            passed: None,
            n_samples: 0,
            notes: String::new(),
        }
    }

    pub fn value(mut self, key: &str, v: f64) -> Self {
        self.values.push((key.into(), v));
        self
    }

    pub fn bound(mut self, b: f64) -> Self {
        self.bound = Some(b);
        self
    }

    pub fn passed(mut self, ok: bool) -> Self {
        self.passed = Some(ok);
        self
    }

    pub fn samples(mut self, n: u64) -> Self {
        self.n_samples = n;
        self
    }

    pub fn note(mut self, s: &str) -> Self {
        self.notes = s.into();
        self
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub suite: String,
    pub model: String,
    pub seed: u64,
    pub records: Vec<CheckRecord>,
    /// Measured wall time; printed to the console only.
    pub runtime_secs: f64,
}

impl ExperimentReport {
    pub fn new(suite: &str, model: &str, seed: u64) -> Self {
        ExperimentReport {
            suite: suite.into(),
            model: model.into(),
            seed,
            records: Vec::new(),
            runtime_secs: 0.0,
        }
    }

    pub fn push(&mut self, rec: CheckRecord) {
        self.records.push(rec);
    }

    pub fn all_passed(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.passed.unwrap_or(true))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,model,seed,check,anchor,key,value,bound,passed,n_samples\n");
        for r in &self.records {
            let passed = match r.passed {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "",
            };
            let bound = r.bound.map(fmt_f64).unwrap_or_default();
            if r.values.is_empty() {
                writeln!(
                    out,
                    "{},{},{},{},\"{}\",,,{},{},{}",
                    self.suite, self.model, self.seed, r.name, r.anchor, bound, passed, r.n_samples
                )
                .unwrap();
            }
            for (k, v) in &r.values {
                writeln!(
                    out,
                    "{},{},{},{},\"{}\",{},{},{},{},{}",
                    self.suite,
                    self.model,
                    self.seed,
                    r.name,
                    r.anchor,
                    k,
                    fmt_f64(*v),
                    bound,
                    passed,
                    r.n_samples
                )
                .unwrap();
            }
        }
        out
    }

    /// Machine-readable structured text, one block per record.
    pub fn to_summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "suite = {}", self.suite).unwrap();
        writeln!(out, "model = {}", self.model).unwrap();
        writeln!(out, "seed = {}", self.seed).unwrap();
        writeln!(out, "checks = {}", self.records.len()).unwrap();
        writeln!(
            out,
            "passed = {}",
            if self.all_passed() { "true" } else { "false" }
        )
        .unwrap();
        for r in &self.records {
            writeln!(out, "[check.{}]", r.name).unwrap();
            writeln!(out, "anchor = \"{}\"", r.anchor).unwrap();
            for (k, v) in &r.values {
                writeln!(out, "{k} = {}", fmt_f64(*v)).unwrap();
            }
            if let Some(b) = r.bound {
                writeln!(out, "bound = {}", fmt_f64(b)).unwrap();
            }
            if let Some(p) = r.passed {
                writeln!(out, "passed = {p}").unwrap();
            }
            if r.n_samples > 0 {
                writeln!(out, "n_samples = {}", r.n_samples).unwrap();
            }
            if !r.notes.is_empty() {
                writeln!(out, "notes = \"{}\"", r.notes).unwrap();
            }
        }
        out
    }

    /// One console line per record.
    pub fn console_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let status = match r.passed {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "info",
            };
            let head = r
                .values
                .first()
                .map(|(k, v)| format!("{k}={v:.4}"))
                .unwrap_or_default();
            writeln!(out, "  [{status}] {}::{} {head}", self.suite, r.name).unwrap();
        }
        out
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v == v.floor() && v.abs() < 1e15 && v.abs() >= 1.0 || v == 0.0 {
        format!("{v}")
    } else {
        format!("{v:.9e}")
    }
}

/// Minimal SVG polyline chart: one series per (label, points).
pub fn svg_lines(
    title: &str,
    series: &[(String, Vec<(f64, f64)>)],
    log_x: bool,
    log_y: bool,
) -> String {
    let (w, h, pad) = (640.0, 420.0, 50.0);
    let tx = |v: f64| if log_x { v.max(1e-300).log10() } else { v };
    let ty = |v: f64| if log_y { v.max(1e-300).log10() } else { v };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (_, pts) in series {
        for &(x, y) in pts {
            if (!log_y || y > 0.0) && (!log_x || x > 0.0) {
                xs.push(tx(x));
                ys.push(ty(y));
            }
        }
    }
    if xs.is_empty() {
        return format!("<svg xmlns=\"http://www.w3.org/2000/svg\"><text x=\"10\" y=\"20\">{title}: no data</text></svg>\n");
    }
    let (x0, x1) = xs.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let (y0, y1) = ys.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let sx = |v: f64| pad + (tx(v) - x0) / (x1 - x0).max(1e-12) * (w - 2.0 * pad);
    let sy = |v: f64| h - pad - (ty(v) - y0) / (y1 - y0).max(1e-12) * (h - 2.0 * pad);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    )
    .unwrap();
    writeln!(out, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>").unwrap();
    writeln!(
        out,
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">{title}</text>",
        pad
    )
    .unwrap();
    writeln!(
        out,
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>",
        w - 2.0 * pad,
        h - 2.0 * pad
    )
    .unwrap();
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = colors[i % colors.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|(x, y)| (!log_y || *y > 0.0) && (!log_x || *x > 0.0))
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if path.is_empty() {
            continue;
        }
        writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            path.join(" ")
        )
        .unwrap();
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" fill=\"{color}\">{label}</text>",
            w - pad - 150.0,
            pad + 16.0 * (i + 1) as f64
        )
        .unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trip_is_deterministic() {
        let mut r = ExperimentReport::new("demo", "stable15", 7);
        r.push(
            CheckRecord::new("ratio", "There exist constants")
                .value("alpha_lo", 1.3068)
                .value("alpha_hi", 1.7107)
                .passed(true)
                .samples(128),
        );
        r.push(CheckRecord::new("diag", "anchor").value("drift", 0.001));
        let a = r.to_csv();
        let b = r.to_csv();
        assert_eq!(a, b);
        assert!(r.to_summary().contains("alpha_lo = 1.306800000e0"));
        assert!(r.all_passed());
        r.push(CheckRecord::new("bad", "x").passed(false));
        assert!(!r.all_passed());
    }

    #[test]
    fn svg_emits_polyline() {
        let s = svg_lines(
            "demo",
            &[("p".into(), vec![(1.0, 1.0), (2.0, 0.5), (4.0, 0.2)])],
            true,
            true,
        );
        assert!(s.contains("<polyline"));
        assert!(s.starts_with("<svg"));
    }
}
