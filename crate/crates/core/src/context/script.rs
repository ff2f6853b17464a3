use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::engine::{Action, Engine, Event, ReminderConfig};
use crate::error::{Error, Result};

/// One line of a session script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEvent {
    pub t_ns: i64,
    #[serde(flatten)]
    pub kind: ScriptKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScriptKind {
    Rssi { beacon_id: String, rssi: f64 },
    Utterance { text: String },
    Tick,
}

impl ScriptKind {
    fn event(&self) -> Event {
        match self {
            ScriptKind::Rssi { beacon_id, rssi } => Event::Rssi {
                beacon_id: beacon_id.clone(),
                rssi: *rssi,
            },
            ScriptKind::Utterance { text } => Event::Utterance { text: text.clone() },
            ScriptKind::Tick => Event::Tick,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t_ns: i64,
    #[serde(flatten)]
    pub action: Action,
}

pub fn read_script<R: BufRead>(r: R) -> Result<Vec<ScriptEvent>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("script line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

pub fn write_jsonl<W: Write, T: Serialize>(items: &[T], mut w: W) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Replay a script through a fresh engine. Every assessment is answered with
/// an immediate report delivery at the same timestamp.
pub fn run_script(cfg: &ReminderConfig, script: &[ScriptEvent]) -> Result<Vec<TraceEntry>> {
    let mut engine = Engine::new(cfg.clone());
    let mut trace = Vec::new();
    for ev in script {
        let actions = engine.step(ev.t_ns, &ev.kind.event())?;
        let assessed = actions.iter().any(|a| matches!(a, Action::Assess { .. }));
        trace.extend(actions.into_iter().map(|action| TraceEntry {
            t_ns: ev.t_ns,
            action,
        }));
        if assessed {
            engine.step(ev.t_ns, &Event::ReportDelivered)?;
        }
    }
    Ok(trace)
}
