use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::ablation::AblationReport;
use super::report::{correlation_report, top_gains, BenchmarkReport, ResultTable};
use crate::error::Result;
use crate::metrics::ScoreMetric;

pub const TOP_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

fn opt4(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), f4)
}

fn md_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn md_header(cols: &[String]) -> String {
    let mut s = md_row(cols);
    let seps: Vec<String> = (0..cols.len()).map(|i| if i == 0 { "---".into() } else { "---:".into() }).collect();
    s.push_str(&md_row(&seps));
    s
}

/// Marks every maximal entry of a row in bold.
fn bold_max(values: &[Option<f64>], text: Vec<String>) -> Vec<String> {
    let best = values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    text.into_iter()
        .zip(values)
        .map(|(t, v)| if *v == Some(best) { format!("**{t}**") } else { t })
        .collect()
}

fn results_csv(t: &ResultTable) -> String {
    let mut s = String::from("dataset");
    for m in &t.methods {
        let _ = write!(s, ",{m}_mean,{m}_std");
    }
    s.push('\n');
    for row in &t.rows {
        s.push_str(&row.dataset);
        for c in &row.cells {
            match c {
                Some(c) => {
                    let _ = write!(s, ",{},{}", f4(c.mean), f4(c.std));
                }
                None => s.push_str(",NA,NA"),
            }
        }
        s.push('\n');
    }
    s.push_str("Average");
    for a in &t.average {
        let _ = write!(s, ",{},", opt4(*a));
    }
    s.push('\n');
    s
}

fn results_md(t: &ResultTable) -> String {
    let mut cols = vec!["Dataset".to_string()];
    cols.extend(t.methods.iter().map(|m| m.to_string()));
    let mut s = md_header(&cols);
    for row in &t.rows {
        let means: Vec<Option<f64>> = row.cells.iter().map(|c| c.map(|c| c.mean)).collect();
        let text = row
            .cells
            .iter()
            .map(|c| c.map_or_else(|| "NA".to_string(), |c| format!("{} ± {}", f4(c.mean), f4(c.std))))
            .collect();
        let mut cells = vec![row.dataset.clone()];
        cells.extend(bold_max(&means, text));
        s.push_str(&md_row(&cells));
    }
    let mut cells = vec!["Average".to_string()];
    cells.extend(bold_max(&t.average, t.average.iter().map(|a| opt4(*a)).collect()));
    s.push_str(&md_row(&cells));
    s
}

fn write(dir: &Path, name: &str, body: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, body)?;
    out.push(p);
    Ok(())
}

/// Writes all report tables into `dir`. Everything except `timing.*` is a
/// pure function of the records, so identical runs give identical files.
pub fn emit_report(report: &BenchmarkReport, dir: impl AsRef<Path>, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let csv = formats.contains(&Format::Csv);
    let md = formats.contains(&Format::Markdown);
    let mut written = Vec::new();

    for metric in [ScoreMetric::Auc, ScoreMetric::F1, ScoreMetric::G] {
        let t = report.table(metric);
        if csv {
            write(dir, &format!("results_{metric}.csv"), &results_csv(&t), &mut written)?;
        }
        if md {
            write(dir, &format!("results_{metric}.md"), &results_md(&t), &mut written)?;
        }
    }

    let mut best_csv = String::from("metric,method,wins\n");
    let mut best_md = md_header(&["Metric".into(), "Method".into(), "Wins".into()]);
    for metric in [ScoreMetric::Auc, ScoreMetric::F1, ScoreMetric::G] {
        let b = report.best_counts(metric);
        for (m, w) in b.methods.iter().zip(&b.wins) {
            let _ = writeln!(best_csv, "{metric},{m},{w}");
            best_md.push_str(&md_row(&[metric.to_string(), m.to_string(), w.to_string()]));
        }
        let _ = writeln!(best_csv, "{metric},ties,{}", b.ties);
        best_md.push_str(&md_row(&[metric.to_string(), "ties".into(), b.ties.to_string()]));
    }
    if csv {
        write(dir, "best_counts.csv", &best_csv, &mut written)?;
    }
    if md {
        write(dir, "best_counts.md", &best_md, &mut written)?;
    }

    let datasets = report.evaluated_datasets();
    let mut time_csv = String::from("dataset");
    let mut cols = vec!["Dataset".to_string()];
    for m in &report.methods {
        let _ = write!(time_csv, ",{m}");
        cols.push(m.to_string());
    }
    time_csv.push('\n');
    let mut time_md = md_header(&cols);
    let mut avg_cols: Vec<Vec<f64>> = vec![Vec::new(); report.methods.len()];
    for d in &datasets {
        let mut cells = vec![d.to_string()];
        time_csv.push_str(d);
        for (j, m) in report.methods.iter().enumerate() {
            let t = report.mean_time(d, *m);
            if let Some(t) = t {
                avg_cols[j].push(t);
            }
            let _ = write!(time_csv, ",{}", opt4(t));
            cells.push(opt4(t));
        }
        time_csv.push('\n');
        time_md.push_str(&md_row(&cells));
    }
    time_csv.push_str("Average");
    let mut cells = vec!["Average".to_string()];
    for c in &avg_cols {
        let a = (!c.is_empty()).then(|| c.iter().sum::<f64>() / c.len() as f64);
        let _ = write!(time_csv, ",{}", opt4(a));
        cells.push(opt4(a));
    }
    time_csv.push('\n');
    time_md.push_str(&md_row(&cells));
    if csv {
        write(dir, "timing.csv", &time_csv, &mut written)?;
    }
    if md {
        write(dir, "timing.md", &time_md, &mut written)?;
    }

    let mut corr_csv = String::from("method,pearson,datasets\n");
    let mut corr_md = md_header(&["Method".into(), "Pearson vs vanilla".into(), "Datasets".into()]);
    match correlation_report(report) {
        Ok(rows) => {
            for r in rows {
                let _ = writeln!(corr_csv, "{},{},{}", r.method, opt4(r.pearson), r.datasets);
                corr_md.push_str(&md_row(&[r.method.to_string(), opt4(r.pearson), r.datasets.to_string()]));
            }
        }
        Err(e) => {
            let _ = write!(corr_md, "\nNot computed: {e}\n");
        }
    }
    if csv {
        write(dir, "correlation.csv", &corr_csv, &mut written)?;
    }
    if md {
        write(dir, "correlation.md", &corr_md, &mut written)?;
    }

    let mut gain_csv = String::from("method,rank,dataset,gain\n");
    let mut gain_md = md_header(&["Method".into(), "Rank".into(), "Dataset".into(), "Gain".into()]);
    match top_gains(report, TOP_K) {
        Ok(rows) => {
            for g in rows {
                for (i, (d, v)) in g.gains.iter().enumerate() {
                    let _ = writeln!(gain_csv, "{},{},{d},{}", g.method, i + 1, f4(*v));
                    gain_md.push_str(&md_row(&[g.method.to_string(), (i + 1).to_string(), d.clone(), f4(*v)]));
                }
                let _ = writeln!(gain_csv, "{},average,{},{}", g.method, g.gains.len(), opt4(g.average));
                gain_md.push_str(&md_row(&[
                    g.method.to_string(),
                    "average".into(),
                    format!("{} datasets", g.gains.len()),
                    opt4(g.average),
                ]));
            }
        }
        Err(e) => {
            let _ = write!(gain_md, "\nNot computed: {e}\n");
        }
    }
    if csv {
        write(dir, "top_gains.csv", &gain_csv, &mut written)?;
    }
    if md {
        write(dir, "top_gains.md", &gain_md, &mut written)?;
    }

    if csv {
        let mut rec = String::from("dataset,method,repeat,fold,seed,train_rows,resampled_rows,auc,f1,g,threshold\n");
        for r in &report.records {
            let _ = writeln!(
                rec,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.dataset, r.method, r.repeat, r.fold, r.seed, r.train_rows, r.resampled_rows, r.auc, r.f1, r.g, r.threshold
            );
        }
        write(dir, "records.csv", &rec, &mut written)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dataset", "method", "message"])?;
        for f in &report.failures {
            let m = f.method.map_or_else(|| "all".to_string(), |m| m.to_string());
            w.write_record([f.dataset.as_str(), m.as_str(), f.message.as_str()])?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        write(dir, "failures.csv", &String::from_utf8_lossy(&bytes), &mut written)?;
    }
    Ok(written)
}

/// Writes `ablation.csv` (fraction, method, mean AUC), `ablation_slopes.csv`
/// and, for markdown, a fraction × method table with a slope row.
pub fn emit_ablation(rep: &AblationReport, dir: impl AsRef<Path>, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if formats.contains(&Format::Csv) {
        let mut s = String::from("fraction,method,mean_auc\n");
        for r in &rep.rows {
            let _ = writeln!(s, "{},{},{}", r.fraction, r.method, opt4(r.mean_auc));
        }
        write(dir, "ablation.csv", &s, &mut written)?;
        let mut s = String::from("method,slope\n");
        for (m, v) in &rep.slopes {
            let _ = writeln!(s, "{m},{}", opt4(*v));
        }
        write(dir, "ablation_slopes.csv", &s, &mut written)?;
    }
    if formats.contains(&Format::Markdown) {
        let mut cols = vec!["Fraction".to_string()];
        cols.extend(rep.methods.iter().map(|m| m.to_string()));
        let mut s = md_header(&cols);
        for &f in &rep.fractions {
            let mut cells = vec![f.to_string()];
            for m in &rep.methods {
                let v = rep.rows.iter().find(|r| r.fraction == f && r.method == *m).and_then(|r| r.mean_auc);
                cells.push(opt4(v));
            }
            s.push_str(&md_row(&cells));
        }
        let mut cells = vec!["slope".to_string()];
        cells.extend(rep.slopes.iter().map(|(_, v)| opt4(*v)));
        s.push_str(&md_row(&cells));
        for (f, why) in &rep.skipped {
            let _ = writeln!(s, "\nSkipped fraction {f}: {why}");
        }
        write(dir, "ablation.md", &s, &mut written)?;
    }
    Ok(written)
}
