//! Acceptance criteria. Runs every criterion in order and prints one
//! PASS/FAIL line each; exits non-zero if any fails.
//!
//! Pass a substring of a criterion name (or its number) to run a subset.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::oracle::{self, Counter};
use common::scripts::{check_invariants, entry_truth_table, run_truth_row, scripted_session};
use common::{clustered_sequences, random_params, random_spec, random_vec, tiny_spec};
use handwash::assess::{all_messages, build_report};
use handwash::compress::{
    candidate_loss, evaluate, finalize, prunable_layers, prune_all, pruned_flops, search,
    CompressionBudget, SearchConfig, SparsityVector,
};
use handwash::context::{run_script, write_jsonl, ReminderConfig};
use handwash::harness::*;
use handwash::model::{
    count_flops, gradients, loss, train, CarryState, LabeledSequence, ModelSpec, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn desk() -> HarnessConfig {
    HarnessConfig::load(&desk_path()).expect("desk config")
}

fn desk_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml")
}

/// Passes over the data for leave-one-participant-out training. Each fold
/// sees 13 participants' sessions, so a couple of passes do what ten do for
/// the 18-session user-dependent folds.
const LOPO_EPOCHS: usize = 2;

fn budget_contract() -> Check {
    let mut cfg = desk();
    cfg.synth.participants = 2;
    cfg.synth.sessions_per_participant = 3;
    cfg.train.epochs = 3;
    let sessions = prepare(&generate(&cfg.synth).map_err(|e| e.to_string())?, &cfg)
        .map_err(|e| e.to_string())?;
    let refs: Vec<&PreparedSession> = sessions.iter().collect();
    let (train_set, val_set) = split_validation(&refs);
    let params = train_on(&train_set, &cfg).map_err(|e| e.to_string())?;
    let n = count_flops(&params.spec).total;
    let val: Vec<LabeledSequence> = val_set.iter().map(|s| s.sequence.clone()).collect();
    let train_seqs: Vec<LabeledSequence> = train_set.iter().map(|s| s.sequence.clone()).collect();
    let mut detail = Vec::new();
    for alpha in [0.3, 0.5, 0.7] {
        let start = Instant::now();
        let budget = CompressionBudget::new(alpha, n).map_err(|e| e.to_string())?;
        let found = search(&params, &val, &budget, &cfg.search).map_err(|e| e.to_string())?;
        let model = finalize(
            &params,
            &found.sparsity,
            &budget,
            &train_seqs,
            0,
            &cfg.train,
        )
        .map_err(|e| e.to_string())?;
        let flops = count_flops(&model.spec).total;
        let took = start.elapsed();
        ensure(flops as f64 <= alpha * n as f64, || {
            format!("alpha {alpha}: {flops} > {}", alpha * n as f64)
        })?;
        ensure(flops == found.flops, || {
            format!(
                "alpha {alpha}: reported {} but counted {flops}",
                found.flops
            )
        })?;
        ensure(took < Duration::from_secs(600), || {
            format!("alpha {alpha}: {took:?}")
        })?;
        detail.push(format!(
            "a={alpha}: {flops}/{n} in {:.1}s",
            took.as_secs_f64()
        ));
    }
    Ok(detail.join(", "))
}

fn trade_off_shape() -> Check {
    let mut cfg = desk();
    cfg.train.epochs = LOPO_EPOCHS;
    let data = generate(&cfg.synth).map_err(|e| e.to_string())?;
    let alphas = cfg.sweep.alphas.clone();
    let report = alpha_sweep(&data, &alphas, &cfg).map_err(|e| e.to_string())?;
    let mut points: Vec<(f64, f64, f64)> = report
        .rows
        .iter()
        .map(|r| (r.alpha, r.mean_flops, r.accuracy))
        .collect();
    points.push((1.0, report.baseline_flops as f64, report.baseline_accuracy));
    for r in &report.rows {
        ensure(r.max_flops as f64 <= r.budget_flops, || {
            format!("alpha {}: {} over budget", r.alpha, r.max_flops)
        })?;
    }
    for w in points.windows(2) {
        ensure(w[1].1 > w[0].1, || {
            format!("flops not increasing: {points:?}")
        })?;
        ensure(w[1].2 >= w[0].2 - 0.02, || {
            format!("accuracy drops beyond 2 points: {points:?}")
        })?;
    }
    Ok(points
        .iter()
        .map(|(a, f, acc)| format!("a={a}: {f:.0} flops, {:.1}%", 100.0 * acc))
        .collect::<Vec<_>>()
        .join("; "))
}

fn gradient_correctness() -> Check {
    let spec = tiny_spec();
    let params = random_params(&spec, 21);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let batch: Vec<LabeledSequence> = (0..2)
        .map(|_| LabeledSequence {
            features: (0..3)
                .map(|_| random_vec(&mut rng, spec.feature_dim, 1.5))
                .collect(),
            labels: vec![Some(rng.gen_range(0..3)), None, Some(rng.gen_range(0..3))],
        })
        .collect();
    let (_, grad) = gradients(&params, &batch).map_err(|e| e.to_string())?;
    let analytic: Vec<(String, Vec<f64>)> = grad
        .named_trainable()
        .into_iter()
        .map(|(n, t)| (n, t.data.clone()))
        .collect();
    let eps = 1e-4;
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for (ti, (name, a)) in analytic.iter().enumerate() {
        let mut numeric = vec![0.0; a.len()];
        for (e, out) in numeric.iter_mut().enumerate() {
            let orig = probe.trainable_mut()[ti].data[e];
            probe.trainable_mut()[ti].data[e] = orig + eps;
            let up = loss(&probe, &batch).map_err(|e| e.to_string())?;
            probe.trainable_mut()[ti].data[e] = orig - eps;
            let down = loss(&probe, &batch).map_err(|e| e.to_string())?;
            probe.trainable_mut()[ti].data[e] = orig;
            *out = (up - down) / (2.0 * eps);
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = a.iter().zip(&numeric).map(|(x, y)| x - y).collect();
        let scale = norm(a).max(norm(&numeric));
        let rel = if scale < 1e-10 {
            norm(&diff)
        } else {
            norm(&diff) / scale
        };
        ensure(rel < 1e-3, || format!("{name}: relative error {rel:e}"))?;
        worst = worst.max(rel);
    }
    Ok(format!(
        "{} tensors, worst relative error {worst:.2e}",
        analytic.len()
    ))
}

fn flops_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..50 {
        let spec = random_spec(&mut rng);
        let p = random_params(&spec, i);
        let f = random_vec(&mut rng, spec.feature_dim, 1.0);
        let state = CarryState::initial(&p);
        let mut c = Counter::default();
        oracle::forward(&p, &f, &state.activation.values, &state.cell, &mut c);
        let analytic = count_flops(&spec).total;
        ensure(analytic == c.flops, || {
            format!("spec {i}: analytic {analytic} vs counted {}", c.flops)
        })?;
    }
    Ok("50 specs exact".into())
}

fn learnability() -> Check {
    let cfg = desk();
    let data = generate(&cfg.synth).map_err(|e| e.to_string())?;
    ensure(
        cfg.synth.jitter == 0.0
            && data.participants().len() == 14
            && data.sessions.len() == 14 * 19,
        || "desk dataset is not 14 x 19 zero-jitter".into(),
    )?;
    let ud = user_dependent_eval(&data, &cfg).map_err(|e| e.to_string())?;
    let mut lopo_cfg = cfg.clone();
    lopo_cfg.train.epochs = LOPO_EPOCHS;
    let lo = lopo(&data, &lopo_cfg).map_err(|e| e.to_string())?;
    let detail = format!(
        "user-dependent {:.2}%, LOPO {:.2}%",
        100.0 * ud.window_accuracy,
        100.0 * lo.window_accuracy
    );
    ensure(
        ud.window_accuracy >= 0.95 && lo.window_accuracy >= 0.85,
        || detail.clone(),
    )?;
    Ok(detail)
}

fn feedback_fidelity() -> Check {
    let golden = include_str!("golden/feedback.txt");
    let lines: Vec<&str> = golden.lines().collect();
    ensure(lines.len() == 12 && all_messages() == lines, || {
        "feedback strings differ from the golden file".into()
    })?;
    let performed = (1..=10).filter(|&s| s != 4).collect();
    let r = build_report(&performed, 19.0).map_err(|e| e.to_string())?;
    let want = [
        "Didn't put palm to palm with fingers interlaced properly",
        "Didn't wash hands for enough duration",
    ];
    ensure(r.messages == want, || format!("{:?}", r.messages))?;
    Ok("12 strings byte-identical; missed step 4 at 19 s gives 2 messages".into())
}

fn compression_oracle() -> Check {
    let spec = ModelSpec::builder(4)
        .conv(&[(3, 8)])
        .build_with(2, 8, &[], 3, 4);
    ensure(prunable_layers(&spec).len() == 2, || {
        "toy must have two prunable layers".into()
    })?;
    let data = clustered_sequences(1, spec.num_classes, spec.feature_dim, 12, 4);
    let val = clustered_sequences(2, spec.num_classes, spec.feature_dim, 4, 4);
    let tc = TrainConfig {
        lr: 0.01,
        epochs: 8,
        ..TrainConfig::default()
    };
    let params = train(&spec, &data, &tc).map_err(|e| e.to_string())?;
    let levels = vec![0.0, 0.25, 0.5];
    let budget =
        CompressionBudget::new(0.7, count_flops(&spec).total).map_err(|e| e.to_string())?;
    let mut optimum = f64::INFINITY;
    let mut feasible = 0;
    for &a in &levels {
        for &b in &levels {
            let s = SparsityVector { s: vec![a, b] };
            let f = pruned_flops(&spec, &s).map_err(|e| e.to_string())?;
            if budget.allows(f) {
                feasible += 1;
                let (ce, _) = evaluate(&prune_all(&params, &s).map_err(|e| e.to_string())?, &val)
                    .map_err(|e| e.to_string())?;
                optimum = optimum.min(candidate_loss(ce, f));
            }
        }
    }
    let cfg = SearchConfig {
        levels: Some(levels),
        seed: 3,
        ..SearchConfig::default()
    };
    let r = search(&params, &val, &budget, &cfg).map_err(|e| e.to_string())?;
    ensure(r.best_loss == optimum, || {
        format!("search {} vs enumeration {optimum}", r.best_loss)
    })?;
    Ok(format!(
        "{feasible} of 9 candidates feasible, optimum {optimum:.6} found"
    ))
}

fn state_machine() -> Check {
    let cfg = ReminderConfig::default();
    let mut actions = 0;
    for seed in 0..20 {
        let script = scripted_session(seed);
        let mut runs = Vec::new();
        for _ in 0..2 {
            let trace = run_script(&cfg, &script).map_err(|e| e.to_string())?;
            actions += trace.len();
            let mut buf = Vec::new();
            write_jsonl(&trace, &mut buf).map_err(|e| e.to_string())?;
            runs.push(buf);
        }
        ensure(runs[0] == runs[1], || {
            format!("session {seed} replays differ")
        })?;
        let bad = check_invariants(&cfg, &script);
        ensure(bad.is_empty(), || format!("session {seed}: {bad:?}"))?;
    }
    let table = entry_truth_table();
    for (readings, expected) in &table {
        ensure(run_truth_row(&cfg, readings) == *expected, || {
            format!("door rule wrong for {readings:?}")
        })?;
    }
    Ok(format!(
        "20 sessions, {} actions per replay, {} truth-table rows",
        actions / 2,
        table.len()
    ))
}

fn latency_ordering() -> Check {
    let mut cfg = desk();
    cfg.synth.participants = 1;
    let sessions = prepare(&generate(&cfg.synth).map_err(|e| e.to_string())?, &cfg)
        .map_err(|e| e.to_string())?;
    let refs: Vec<&PreparedSession> = sessions.iter().collect();
    let (train_set, val_set) = split_validation(&refs);
    let params = train_on(&train_set, &cfg).map_err(|e| e.to_string())?;
    let seqs = |v: &[&PreparedSession]| v.iter().map(|s| s.sequence.clone()).collect::<Vec<_>>();
    let (small, _) = compress_model(&params, &seqs(&train_set), &seqs(&val_set), 0.5, &cfg)
        .map_err(|e| e.to_string())?;
    let data = generate(&cfg.synth).map_err(|e| e.to_string())?;
    let events = data.sessions[..3]
        .iter()
        .map(|s| event_from_series(s.data.series.clone()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let (full, comp) = paired_latency(
        &params,
        &small,
        &events,
        &cfg.signal,
        cfg.eval.min_windows,
        30,
    )
    .map_err(|e| e.to_string())?;
    let detail = format!(
        "median {:.3} ms compressed vs {:.3} ms full ({} vs {} flops)",
        comp.median_s * 1e3,
        full.median_s * 1e3,
        count_flops(&small.spec).total,
        count_flops(&params.spec).total
    );
    ensure(comp.median_s <= full.median_s, || detail.clone())?;
    Ok(detail)
}

fn cli(args: &[&str]) -> Result<String, String> {
    let mut out = Vec::new();
    handwash::harness::cli::run(
        std::iter::once("handwash").chain(args.iter().copied()),
        &mut out,
    )
    .map_err(|e| format!("{args:?}: {e:#}"))?;
    Ok(String::from_utf8_lossy(&out).into_owned())
}

fn without_latency(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            cols[..cols.len() - 2].join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = desk();
    cfg.synth.participants = 2;
    cfg.synth.sessions_per_participant = 3;
    cfg.train.epochs = 2;
    cfg.search.iters = 10;
    let cfg_path = root.path().join("cfg.toml");
    std::fs::write(&cfg_path, cfg.to_toml()).map_err(|e| e.to_string())?;
    let c = cfg_path.to_str().unwrap();
    let mut runs = Vec::new();
    for run in 0..2 {
        let d = root.path().join(format!("run{run}"));
        let p = |name: &str| d.join(name).to_str().unwrap().to_string();
        cli(&[
            "--config",
            c,
            "--seed",
            "5",
            "generate",
            "--out",
            &p("data"),
        ])?;
        cli(&[
            "--config",
            c,
            "--seed",
            "5",
            "train",
            "--data",
            &p("data"),
            "--out",
            &p("model.hw"),
        ])?;
        cli(&[
            "--config",
            c,
            "--seed",
            "5",
            "compress",
            "--model",
            &p("model.hw"),
            "--data",
            &p("data"),
            "--out",
            &p("small.hw"),
            "--trace",
            &p("trace.csv"),
        ])?;
        cli(&[
            "--config",
            c,
            "--seed",
            "5",
            "eval",
            "--data",
            &p("data"),
            "--mode",
            "lopo",
            "--out",
            &p("eval"),
        ])?;
        let read = |name: &str| std::fs::read(d.join(name)).map_err(|e| format!("{name}: {e}"));
        runs.push(vec![
            read("model.hw")?,
            read("small.hw")?,
            read("trace.csv")?,
            read("eval/steps.csv")?,
            read("eval/confusion.csv")?,
            without_latency(&String::from_utf8_lossy(&read("eval/folds.csv")?)).into_bytes(),
        ]);
    }
    let names = [
        "model.hw",
        "small.hw",
        "trace.csv",
        "steps.csv",
        "confusion.csv",
        "folds.csv",
    ];
    for (k, name) in names.iter().enumerate() {
        ensure(runs[0][k] == runs[1][k], || {
            format!("{name} differs between runs")
        })?;
    }
    Ok(format!("{} files bit-identical", names.len()))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "budget contract",
            limit: Some(Duration::from_secs(3 * 600)),
            run: budget_contract,
        },
        Criterion {
            id: 2,
            name: "trade-off shape",
            limit: Some(Duration::from_secs(30 * 60)),
            run: trade_off_shape,
        },
        Criterion {
            id: 3,
            name: "gradient correctness",
            limit: Some(Duration::from_secs(60)),
            run: gradient_correctness,
        },
        Criterion {
            id: 4,
            name: "flops oracle equivalence",
            limit: Some(Duration::from_secs(60)),
            run: flops_oracle,
        },
        Criterion {
            id: 5,
            name: "synthetic learnability",
            limit: Some(Duration::from_secs(20 * 60)),
            run: learnability,
        },
        Criterion {
            id: 6,
            name: "feedback fidelity",
            limit: Some(Duration::from_secs(1)),
            run: feedback_fidelity,
        },
        Criterion {
            id: 7,
            name: "compression oracle",
            limit: Some(Duration::from_secs(120)),
            run: compression_oracle,
        },
        Criterion {
            id: 8,
            name: "state-machine suite",
            limit: Some(Duration::from_secs(5)),
            run: state_machine,
        },
        Criterion {
            id: 9,
            name: "latency ordering",
            limit: None,
            run: latency_ordering,
        },
        Criterion {
            id: 10,
            name: "determinism",
            limit: None,
            run: determinism,
        },
    ];
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for c in &criteria {
        let label = format!("{:>2} {}", c.id, c.name);
        if !filters.is_empty()
            && !filters
                .iter()
                .any(|f| c.name.contains(f.as_str()) || c.id.to_string() == *f)
        {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(d), Some(limit)) if took > limit => {
                Err(format!("{d}; took {took:?}, limit {limit:?}"))
            }
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} {label} ({:.1}s): {detail}", took.as_secs_f64());
        failed += usize::from(outcome.is_err());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
