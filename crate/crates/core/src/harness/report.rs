use std::io::Write;

use super::eval::EvalReport;
use super::sweep::SweepReport;
use crate::error::Result;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `step,accuracy,support,correct`, one row per step then a `mean` row.
pub fn write_step_csv<W: Write>(r: &EvalReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["step", "accuracy", "support", "correct"])?;
    for k in 0..r.per_step.len() {
        let support: usize = r.folds.iter().map(|f| f.accuracy.support[k]).sum();
        let correct: usize = r.folds.iter().map(|f| f.accuracy.correct[k]).sum();
        out.write_record([
            (k + 1).to_string(),
            opt(r.per_step[k]),
            support.to_string(),
            correct.to_string(),
        ])?;
    }
    out.write_record([
        "mean".to_string(),
        r.mean_accuracy.to_string(),
        String::new(),
        String::new(),
    ])?;
    out.flush()?;
    Ok(())
}

/// Latency columns come last so they are easy to drop when comparing runs.
pub fn write_fold_csv<W: Write>(r: &EvalReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "fold",
        "window_accuracy",
        "mean_step_accuracy",
        "flops",
        "latency_median_s",
        "latency_p95_s",
    ])?;
    for f in &r.folds {
        out.write_record([
            f.name.clone(),
            f.accuracy.window_accuracy().to_string(),
            f.accuracy.mean().to_string(),
            r.flops.to_string(),
            opt(f.latency.map(|l| l.median_s)),
            opt(f.latency.map(|l| l.p95_s)),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Rows are true labels 0..=10, columns predicted labels.
pub fn write_confusion_csv<W: Write>(r: &EvalReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["truth".to_string()];
    header.extend((0..r.confusion.len()).map(|k| format!("pred_{k}")));
    out.write_record(&header)?;
    for (k, row) in r.confusion.iter().enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(r: &SweepReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "alpha",
        "accuracy",
        "mean_flops",
        "max_flops",
        "budget_flops",
    ])?;
    out.write_record([
        "1".to_string(),
        r.baseline_accuracy.to_string(),
        r.baseline_flops.to_string(),
        r.baseline_flops.to_string(),
        r.baseline_flops.to_string(),
    ])?;
    for row in &r.rows {
        out.write_record([
            row.alpha.to_string(),
            row.accuracy.to_string(),
            row.mean_flops.to_string(),
            row.max_flops.to_string(),
            row.budget_flops.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn summary(r: &EvalReport) -> String {
    let mut s = format!(
        "folds: {}\nwindow accuracy: {:.4}\nmean step accuracy: {:.4}\nflops: {}\n",
        r.folds.len(),
        r.window_accuracy,
        r.mean_accuracy,
        r.flops
    );
    for (k, a) in r.per_step.iter().enumerate() {
        s += &format!(
            "step {:>2}: {}\n",
            k + 1,
            a.map_or("absent".to_string(), |v| format!("{v:.4}"))
        );
    }
    if let Some(l) = r.latency {
        s += &format!("latency median {:.6} s, p95 {:.6} s\n", l.median_s, l.p95_s);
    }
    s
}
