//! Reminder and interaction engine: door-beacon entry detection, routine
//! reminders, keyword intents, snoozing and the washing session state
//! machine. Time is injected through events; nothing reads a clock.

mod beacon;
mod engine;
mod intent;
mod script;

pub use beacon::{BeaconReading, RssiWindow};
pub use engine::{
    local_hour, Action, Engine, Event, Phase, RemindReason, ReminderConfig, ReminderState,
};
pub use intent::{parse_intent, Intent};
pub use script::{read_script, run_script, write_jsonl, ScriptEvent, ScriptKind, TraceEntry};
