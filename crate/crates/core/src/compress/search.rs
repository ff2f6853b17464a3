use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::agent::{AgentParams, AGENT_HIDDEN};
use super::budget::CompressionBudget;
use super::embed::{layer_embedding, LayerEmbedding};
use super::prune::{prunable_layers, prune_all, prune_spec, pruned_flops, SparsityVector};
use crate::error::{Error, Result};
use crate::model::{
    count_flops, loss, predict_sequence, train_from, LabeledSequence, ModelParams, TrainConfig,
};
use crate::optim::Adam;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub iters: usize,
    pub seed: u64,
    /// Upper bound on any layer's sparsity.
    pub s_max: f64,
    /// Initial exploration noise; decays linearly to zero.
    pub sigma0: f64,
    pub agent_lr: f64,
    pub agent_hidden: usize,
    /// Sparsity increment applied to every layer of an over-budget walk.
    pub nudge: f64,
    /// Restrict sparsities to these values (sorted ascending) when set.
    pub levels: Option<Vec<f64>>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            iters: 100,
            seed: 0,
            s_max: 0.8,
            sigma0: 0.5,
            agent_lr: 1e-3,
            agent_hidden: AGENT_HIDDEN,
            nudge: 0.05,
            levels: None,
        }
    }
}

/// One search iteration. `loss` is the candidate's validation cross-entropy
/// times `ln(flops)`; `feasible` says whether the proposal met the budget
/// before any nudging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub loss: f64,
    pub val_accuracy: f64,
    pub flops: u64,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub sparsity: SparsityVector,
    pub params: ModelParams,
    pub best_loss: f64,
    pub flops: u64,
    pub trace: Vec<TraceRow>,
}

/// Mean window cross-entropy and accuracy over labeled windows.
pub fn evaluate(params: &ModelParams, data: &[LabeledSequence]) -> Result<(f64, f64)> {
    let ce = loss(params, data)?;
    let (mut hit, mut total) = (0usize, 0usize);
    for seq in data {
        for (p, y) in predict_sequence(params, &seq.features)?
            .iter()
            .zip(&seq.labels)
        {
            if let Some(y) = y {
                total += 1;
                hit += usize::from(p.argmax() == *y);
            }
        }
    }
    let acc = if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    };
    Ok((ce, acc))
}

/// Objective used to rank candidates.
pub fn candidate_loss(val_ce: f64, flops: u64) -> f64 {
    val_ce * (flops.max(1) as f64).ln()
}

fn snap(levels: &[f64], s: f64) -> f64 {
    let mut best = levels[0];
    for &l in levels {
        if (l - s).abs() < (best - s).abs() {
            best = l;
        }
    }
    best
}

fn top_level(cfg: &SearchConfig) -> f64 {
    cfg.levels
        .as_ref()
        .and_then(|l| l.last().copied())
        .unwrap_or(cfg.s_max)
}

fn nudge(cfg: &SearchConfig, s: f64) -> f64 {
    match &cfg.levels {
        Some(levels) => levels.iter().copied().find(|&l| l > s).unwrap_or(s),
        None => (s + cfg.nudge).min(cfg.s_max),
    }
}

fn check_config(cfg: &SearchConfig) -> Result<()> {
    if !(cfg.s_max > 0.0 && cfg.s_max < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "s_max {} outside (0, 1)",
            cfg.s_max
        )));
    }
    if let Some(levels) = &cfg.levels {
        if levels.is_empty()
            || levels.windows(2).any(|w| w[0] >= w[1])
            || levels[0] < 0.0
            || top_level(cfg) > cfg.s_max
        {
            return Err(Error::InvalidArgument(
                "levels must be strictly increasing within [0, s_max]".into(),
            ));
        }
    }
    if cfg.iters == 0 {
        return Err(Error::InvalidArgument(
            "search needs at least one iteration".into(),
        ));
    }
    Ok(())
}

fn truncated_noise(rng: &mut ChaCha8Rng, centre: f64, sigma: f64, hi: f64) -> f64 {
    if sigma <= 0.0 {
        return centre;
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    for _ in 0..64 {
        let v = centre + normal.sample(rng);
        if (0.0..=hi).contains(&v) {
            return v;
        }
    }
    rng.gen_range(0.0..=hi)
}

/// Budget-constrained sparsity search starting from a seeded agent.
pub fn search(
    params: &ModelParams,
    val: &[LabeledSequence],
    budget: &CompressionBudget,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    let agent = AgentParams::init(
        prunable_layers(&params.spec).len(),
        cfg.agent_hidden,
        cfg.seed,
    );
    search_with_agent(params, val, budget, cfg, agent)
}

/// Iteration 0 takes the actor's proposals as they are; later iterations add
/// truncated Gaussian noise whose scale decays linearly over the run. Walks
/// over budget have every sparsity nudged up until the candidate fits. The
/// critic learns each candidate's validation cross-entropy, and actor and
/// critic take one joint Adam step on the compression loss per iteration.
pub fn search_with_agent(
    params: &ModelParams,
    val: &[LabeledSequence],
    budget: &CompressionBudget,
    cfg: &SearchConfig,
    mut agent: AgentParams,
) -> Result<SearchResult> {
    check_config(cfg)?;
    let layers = prunable_layers(&params.spec);
    let n = layers.len();
    let floor = pruned_flops(
        &params.spec,
        &SparsityVector {
            s: vec![top_level(cfg); n],
        },
    )?;
    if !budget.allows(floor) {
        return Err(Error::InfeasibleBudget {
            min_flops: floor,
            max_flops: budget.max_flops(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Adam::new(cfg.agent_lr);
    let mut trace = Vec::with_capacity(cfg.iters);
    let mut best: Option<(f64, SparsityVector, u64)> = None;

    for it in 0..cfg.iters {
        let sigma = if it == 0 {
            0.0
        } else {
            cfg.sigma0 * (1.0 - it as f64 / cfg.iters as f64)
        };
        let mut spec = params.spec.clone();
        let mut embeddings: Vec<LayerEmbedding> = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        for idx in 0..n {
            let e = layer_embedding(&spec, budget.baseline_flops, idx)?;
            let mut v = truncated_noise(
                &mut rng,
                agent.actor_forward(&e, cfg.s_max),
                sigma,
                cfg.s_max,
            );
            if let Some(levels) = &cfg.levels {
                v = snap(levels, v);
            }
            spec = prune_spec(&spec, idx, v)?;
            embeddings.push(e);
            s.push(v);
        }
        let mut sv = SparsityVector { s };
        let mut flops = count_flops(&spec).total;
        let feasible = budget.allows(flops);
        while !budget.allows(flops) {
            sv.s.iter_mut().for_each(|v| *v = nudge(cfg, *v));
            flops = pruned_flops(&params.spec, &sv)?;
        }

        let candidate = prune_all(params, &sv)?;
        let (ce, acc) = evaluate(&candidate, val)?;
        let j = candidate_loss(ce, flops);
        if !j.is_finite() {
            return Err(Error::NonFiniteLoss(it));
        }
        let passes: Vec<bool> = sv.s.iter().map(|&v| v > 0.0 && v < cfg.s_max).collect();
        let agent_loss = agent.update(&mut opt, &embeddings, &passes, &sv.s, ce, flops as f64)?;
        if !agent_loss.is_finite() || !agent.is_finite() {
            return Err(Error::NonFiniteLoss(it));
        }
        trace.push(TraceRow {
            iteration: it,
            loss: j,
            val_accuracy: acc,
            flops,
            feasible,
        });
        if best.as_ref().map_or(true, |(bj, _, _)| j < *bj) {
            best = Some((j, sv, flops));
        }
    }

    let (best_loss, sparsity, flops) = best.expect("at least one iteration");
    Ok(SearchResult {
        params: prune_all(params, &sparsity)?,
        sparsity,
        best_loss,
        flops,
        trace,
    })
}

/// Prune by `s` and optionally fine-tune. The result must fit `budget`.
pub fn finalize(
    params: &ModelParams,
    s: &SparsityVector,
    budget: &CompressionBudget,
    data: &[LabeledSequence],
    fine_tune_epochs: usize,
    train_cfg: &TrainConfig,
) -> Result<ModelParams> {
    let flops = pruned_flops(&params.spec, s)?;
    if !budget.allows(flops) {
        return Err(Error::InfeasibleBudget {
            min_flops: flops,
            max_flops: budget.max_flops(),
        });
    }
    let pruned = prune_all(params, s)?;
    if fine_tune_epochs == 0 {
        return Ok(pruned);
    }
    let cfg = TrainConfig {
        epochs: fine_tune_epochs,
        ..train_cfg.clone()
    };
    train_from(pruned, data, &cfg)
}

pub const TRACE_HEADER: [&str; 5] = ["iteration", "loss", "val_accuracy", "flops", "feasible"];

pub fn write_trace_csv<W: Write>(trace: &[TraceRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    for r in trace {
        out.write_record([
            r.iteration.to_string(),
            r.loss.to_string(),
            r.val_accuracy.to_string(),
            r.flops.to_string(),
            r.feasible.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
