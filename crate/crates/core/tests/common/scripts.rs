//! Seeded reminder-engine scripts and an independent invariant checker.

use handwash::context::{
    run_script, Action, Engine, Event, Phase, RemindReason, ReminderConfig, ScriptEvent, ScriptKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const S: i64 = 1_000_000_000;
const HOUR: i64 = 3600 * S;

const REPLIES: &[&str] = &[
    "yes",
    "okay start",
    "done",
    "I'm done",
    "no",
    "remind me in 10 minutes",
    "later, in 5 min",
    "what is the weather",
    "",
];

/// One simulated day: door and kitchen beacon readings, periodic ticks,
/// replies and the odd long gap that lets routine and snoozed reminders fire.
pub fn scripted_session(seed: u64) -> Vec<ScriptEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = rng.gen_range(7..20) * HOUR + rng.gen_range(0..3600) * S;
    let mut out = Vec::new();
    for _ in 0..rng.gen_range(120..200) {
        t += match rng.gen_range(0..20) {
            0 => rng.gen_range(600..5000) * S,
            1..=4 => rng.gen_range(30..120) * S,
            _ => rng.gen_range(1..8) * S,
        };
        let kind = match rng.gen_range(0..10) {
            0..=3 => ScriptKind::Rssi {
                beacon_id: "door".into(),
                rssi: -(rng.gen_range(40..80) as f64),
            },
            4 => ScriptKind::Rssi {
                beacon_id: "kitchen".into(),
                rssi: -(rng.gen_range(40..80) as f64),
            },
            5..=6 => ScriptKind::Tick,
            _ => ScriptKind::Utterance {
                text: REPLIES[rng.gen_range(0..REPLIES.len())].into(),
            },
        };
        out.push(ScriptEvent { t_ns: t, kind });
    }
    out
}

/// Door rule computed straight from the script: every reading of the last
/// `span` seconds (inclusive) is from the door and their mean exceeds the
/// threshold.
pub fn oracle_entry(script: &[ScriptEvent], upto: usize, now: i64, cfg: &ReminderConfig) -> bool {
    let span = (cfg.rssi_window_s * S as f64).round() as i64;
    let live: Vec<(&str, f64)> = script[..=upto]
        .iter()
        .filter(|e| now - e.t_ns <= span)
        .filter_map(|e| match &e.kind {
            ScriptKind::Rssi { beacon_id, rssi } => Some((beacon_id.as_str(), *rssi)),
            _ => None,
        })
        .collect();
    !live.is_empty()
        && live.iter().all(|(id, _)| *id == cfg.door_beacon_id)
        && live.iter().map(|(_, r)| r).sum::<f64>() / live.len() as f64 > cfg.rssi_threshold_db
}

/// Cases of the door rule: (readings as (seconds before now, beacon, rssi),
/// expected detection).
pub fn entry_truth_table() -> Vec<(Vec<(i64, &'static str, f64)>, bool)> {
    vec![
        ((0..15).map(|k| (k, "door", -50.0)).collect(), true),
        (vec![(0, "door", -60.0), (5, "door", -60.0)], false),
        (vec![(0, "door", -59.9)], true),
        (vec![(0, "door", -40.0), (3, "door", -80.0)], false),
        (vec![(0, "door", -40.0), (3, "door", -79.0)], true),
        (vec![(0, "door", -50.0), (2, "kitchen", -50.0)], false),
        (vec![], false),
        (vec![(0, "door", -50.0), (16, "door", -100.0)], true),
        (vec![(0, "door", -50.0), (15, "door", -100.0)], false),
        (vec![(0, "door", -70.0), (16, "door", -30.0)], false),
    ]
}

/// Feeds one truth-table row to a fresh engine and reports detection at the
/// last reading time.
pub fn run_truth_row(cfg: &ReminderConfig, readings: &[(i64, &str, f64)]) -> bool {
    let now = 100 * S;
    let mut rows: Vec<(i64, &str, f64)> = readings
        .iter()
        .map(|&(ago, id, r)| (now - ago * S, id, r))
        .collect();
    rows.sort_by_key(|r| r.0);
    let mut engine = Engine::new(cfg.clone());
    for (t, id, rssi) in rows {
        engine
            .step(
                t,
                &Event::Rssi {
                    beacon_id: id.into(),
                    rssi,
                },
            )
            .expect("valid reading");
    }
    engine.entry_detected(now)
}

/// Replays `script` step by step and returns every invariant violation.
pub fn check_invariants(cfg: &ReminderConfig, script: &[ScriptEvent]) -> Vec<String> {
    let mut bad = Vec::new();
    let mut engine = Engine::new(cfg.clone());
    let mut sensing_since: Option<i64> = None;
    let mut awaiting_assess: Option<(i64, i64)> = None;
    let mut latched = false;
    let mut trace = Vec::new();
    for (i, ev) in script.iter().enumerate() {
        let before = engine.state.clone();
        let event = match &ev.kind {
            ScriptKind::Rssi { beacon_id, rssi } => Event::Rssi {
                beacon_id: beacon_id.clone(),
                rssi: *rssi,
            },
            ScriptKind::Utterance { text } => Event::Utterance { text: text.clone() },
            ScriptKind::Tick => Event::Tick,
        };
        let actions = match engine.step(ev.t_ns, &event) {
            Ok(a) => a,
            Err(e) => {
                bad.push(format!("event {i}: {e}"));
                continue;
            }
        };
        let snoozed = before.snooze_until.is_some_and(|u| ev.t_ns < u);
        if let ScriptKind::Rssi { .. } = ev.kind {
            let expected = oracle_entry(script, i, ev.t_ns, cfg);
            if engine.entry_detected(ev.t_ns) != expected {
                bad.push(format!("event {i}: entry rule says {expected}"));
            }
            let should_remind = expected && !latched && before.phase == Phase::Idle && !snoozed;
            let reminded = actions.contains(&Action::Remind {
                reason: RemindReason::Entry,
            });
            if should_remind != reminded {
                bad.push(format!(
                    "event {i}: entry reminder {reminded}, expected {should_remind}"
                ));
            }
            latched = expected;
        }
        if let ScriptKind::Tick = ev.kind {
            if !oracle_entry(script, i, ev.t_ns, cfg) {
                latched = false;
            }
        }
        for a in &actions {
            match a {
                Action::Remind { .. } => {
                    if before.phase != Phase::Idle {
                        bad.push(format!("event {i}: reminder while {:?}", before.phase));
                    }
                    if snoozed {
                        bad.push(format!("event {i}: reminder during snooze"));
                    }
                }
                Action::Reprompt => {
                    if !matches!(before.phase, Phase::Prompted | Phase::AwaitingStart) {
                        bad.push(format!("event {i}: reprompt while {:?}", before.phase));
                    }
                }
                Action::StartSensing => {
                    if sensing_since.is_some() {
                        bad.push(format!("event {i}: start while sensing"));
                    }
                    sensing_since = Some(ev.t_ns);
                }
                Action::StopSensing => match sensing_since.take() {
                    Some(s) => awaiting_assess = Some((s, ev.t_ns)),
                    None => bad.push(format!("event {i}: stop without start")),
                },
                Action::Assess { start_ns, end_ns } => {
                    if awaiting_assess.take() != Some((*start_ns, *end_ns)) {
                        bad.push(format!(
                            "event {i}: assess does not match the sensing interval"
                        ));
                    }
                }
            }
        }
        if actions.iter().any(|a| matches!(a, Action::Assess { .. })) {
            if let Err(e) = engine.step(ev.t_ns, &Event::ReportDelivered) {
                bad.push(format!("event {i}: {e}"));
            }
        }
        trace.extend(actions.into_iter().map(|a| (ev.t_ns, a)));
    }
    match run_script(cfg, script) {
        Ok(t) => {
            if t.into_iter()
                .map(|e| (e.t_ns, e.action))
                .collect::<Vec<_>>()
                != trace
            {
                bad.push("run_script disagrees with the step-by-step replay".into());
            }
        }
        Err(e) => bad.push(format!("run_script: {e}")),
    }
    bad
}
