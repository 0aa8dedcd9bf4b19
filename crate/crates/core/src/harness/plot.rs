//! Emits a standalone matplotlib script that redraws a report's tables from
//! the CSV files next to it.

use super::report::{ExperimentReport, Table};
use crate::error::{invalid, Result};

const PRELUDE: &str = r#"import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def read(name):
    with open(os.path.join(HERE, name), newline="") as f:
        return list(csv.DictReader(f))


def num(x):
    return float(x) if x not in ("", None) else float("nan")


def save(fig, name):
    out = os.path.join(HERE, name)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    print("wrote", out)


def histograms(csv_name, moments_name, png):
    rows = read(csv_name)
    groups = defaultdict(list)
    for r in rows:
        groups[(int(r["layer"]), int(r["n"]))].append(r)
    notes = defaultdict(list)
    if moments_name:
        for r in read(moments_name):
            theory = r["theory"]
            text = "m%s: %.4g" % (r["k"], num(r["empirical"]))
            if theory:
                text += " (theory %.4g)" % num(theory)
            notes[(int(r["layer"]), int(r["n"]))].append(text)
    keys = sorted(groups)
    fig, axes = plt.subplots(len(keys), 1, figsize=(6, 3 * len(keys)), squeeze=False)
    for ax, key in zip(axes[:, 0], keys):
        g = groups[key]
        lo = [num(r["lower"]) for r in g]
        width = [num(r["upper"]) - num(r["lower"]) for r in g]
        ax.bar(lo, [num(r["density"]) for r in g], width=width, align="edge", alpha=0.7)
        ax.set_title("layer %d, N = %d" % key)
        ax.set_xlabel("eigenvalue")
        ax.set_ylabel("density")
        if notes[key]:
            ax.text(0.98, 0.95, "\n".join(notes[key]), transform=ax.transAxes,
                    ha="right", va="top", fontsize=8)
    save(fig, png)


def statistic_vs_n(csv_name, png, ylabel):
    rows = read(csv_name)
    series = defaultdict(list)
    for r in rows:
        series[r["label"]].append((int(r["n"]), abs(num(r["statistic"])), num(r["threshold"])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, pts in series.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [max(p[1], 1e-300) for p in pts], marker="o", label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7)
    save(fig, png)


def moment_bars(csv_name, png):
    rows = read(csv_name)
    layers = sorted({int(r["layer"]) for r in rows})
    fig, axes = plt.subplots(1, len(layers), figsize=(4 * len(layers), 3.5), squeeze=False)
    for ax, layer in zip(axes[0], layers):
        g = [r for r in rows if int(r["layer"]) == layer]
        ks = [int(r["k"]) for r in g]
        emp = [num(r["empirical"]) for r in g]
        th = [num(r["theory"]) for r in g]
        ax.bar([k - 0.2 for k in ks], emp, width=0.4, label="empirical")
        ax.bar([k + 0.2 for k in ks], th, width=0.4, label="theory")
        for k, e, r in zip(ks, emp, g):
            ax.annotate("%.1f%%" % (100 * num(r["rel_err"])), (k, e), ha="center", va="bottom", fontsize=7)
        ax.set_yscale("log")
        ax.set_xticks(ks)
        ax.set_xlabel("k")
        ax.set_title("layer %d" % layer)
        ax.legend(fontsize=7)
    save(fig, png)


def bound_curves(csv_name, png, group, value, bound):
    rows = read(csv_name)
    series = defaultdict(list)
    for r in rows:
        series[r[group]].append((int(r["n"]), num(r[value]), num(r[bound])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, pts in sorted(series.items()):
        pts.sort()
        line, = ax.plot([p[0] for p in pts], [max(p[1], 1e-300) for p in pts], marker="o",
                        label="%s = %s" % (group, key))
        ax.plot([p[0] for p in pts], [p[2] for p in pts], ls="--", color=line.get_color())
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel(value + " (dashed: bound)")
    ax.legend(fontsize=7)
    save(fig, png)


"#;

fn has(t: &Table, cols: &[&str]) -> bool {
    cols.iter().all(|c| t.column_index(c).is_some())
}

fn py_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// One plotting call per table that has a known shape; tables without one
/// (raw spectra, identity checks) are listed in a comment instead.
pub fn plot_script(report: &ExperimentReport) -> Result<String> {
    if report.table_data.is_empty() {
        return invalid(format!("report for {} contains no tables to plot", report.command.name()));
    }
    let file = |t: &Table| ExperimentReport::table_file_name(report.command, &t.name);
    let png = |t: &Table| py_str(&format!("{}_{}.png", report.command.name(), t.name));
    let mut calls = Vec::new();
    let mut skipped = Vec::new();
    for t in &report.table_data {
        let csv = py_str(&file(t));
        if has(t, &["lower", "upper", "density"]) {
            let moments = t.name.replacen("histogram", "moments", 1);
            let moments = match report.table(&moments) {
                Some(m) => py_str(&file(m)),
                None => "None".to_string(),
            };
            calls.push(format!("histograms({csv}, {moments}, {})", png(t)));
        } else if has(t, &["label", "statistic", "threshold"]) {
            calls.push(format!("statistic_vs_n({csv}, {}, {})", png(t), py_str(&t.name)));
        } else if t.columns == ["layer", "k", "empirical", "theory", "rel_err"] {
            calls.push(format!("moment_bars({csv}, {})", png(t)));
        } else if has(t, &["factors", "max_lhs", "bound"]) {
            calls.push(format!("bound_curves({csv}, {}, \"factors\", \"max_lhs\", \"bound\")", png(t)));
        } else if has(t, &["p", "max_error", "bound"]) {
            calls.push(format!("bound_curves({csv}, {}, \"p\", \"max_error\", \"bound\")", png(t)));
        } else {
            skipped.push(file(t));
        }
    }
    let mut s = String::from("#!/usr/bin/env python3\n");
    s.push_str(&format!(
        "# Plots for a `{}` run with seed {}. Reads the CSV files in this directory.\n",
        report.command.name(),
        report.seed
    ));
    for f in &skipped {
        s.push_str(&format!("# not plotted: {f}\n"));
    }
    s.push_str(PRELUDE);
    s.push_str("if __name__ == \"__main__\":\n");
    if calls.is_empty() {
        s.push_str("    pass\n");
    }
    for c in calls {
        s.push_str(&format!("    {c}\n"));
    }
    Ok(s)
}
