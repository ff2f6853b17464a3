use serde::{Deserialize, Serialize};

use super::beacon::{BeaconReading, RssiWindow};
use super::intent::{parse_intent, Intent};
use crate::error::{Error, Result};

const NS_PER_S: i64 = 1_000_000_000;
const NS_PER_HOUR: i64 = 3600 * NS_PER_S;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReminderConfig {
    pub door_beacon_id: String,
    pub rssi_threshold_db: f64,
    pub rssi_window_s: f64,
    /// Routine reminders fire from this local hour (inclusive)...
    pub day_start_hour: u32,
    /// ...up to this one (exclusive).
    pub day_end_hour: u32,
    pub routine_interval_s: f64,
    pub max_reprompts: u32,
    /// A prompt left unanswered this long counts as an unrecognized reply.
    pub prompt_timeout_s: f64,
}

impl Default for ReminderConfig {
    fn default() -> Self {
        Self {
            door_beacon_id: "door".into(),
            rssi_threshold_db: -60.0,
            rssi_window_s: 15.0,
            day_start_hour: 9,
            day_end_hour: 21,
            routine_interval_s: 3600.0,
            max_reprompts: 2,
            prompt_timeout_s: 60.0,
        }
    }
}

fn secs(s: f64) -> i64 {
    (s * NS_PER_S as f64).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Idle,
    Prompted,
    /// Prompted again after an unrecognized reply.
    AwaitingStart,
    Collecting,
    Reporting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Rssi { beacon_id: String, rssi: f64 },
    EntryDetected,
    RoutineDue,
    Utterance { text: String },
    Tick,
    ReportDelivered,
}

impl Event {
    fn name(&self) -> &'static str {
        match self {
            Event::Rssi { .. } => "rssi",
            Event::EntryDetected => "entry_detected",
            Event::RoutineDue => "routine_due",
            Event::Utterance { .. } => "utterance",
            Event::Tick => "tick",
            Event::ReportDelivered => "report_delivered",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemindReason {
    Entry,
    Routine,
    Rescheduled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Remind { reason: RemindReason },
    Reprompt,
    StartSensing,
    StopSensing,
    Assess { start_ns: i64, end_ns: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReminderState {
    pub phase: Phase,
    pub last_handwash_time: Option<i64>,
    pub snooze_until: Option<i64>,
    pub rssi_window: RssiWindow,
    pub door_beacon_id: String,
    reprompts: u32,
    prompted_at: i64,
    sensing_since: i64,
    entry_latched: bool,
    last_t: Option<i64>,
}

/// Local hour of day for a nanosecond timestamp counted from local midnight
/// of the epoch.
pub fn local_hour(t_ns: i64) -> u32 {
    (t_ns.div_euclid(NS_PER_HOUR)).rem_euclid(24) as u32
}

/// The reminder and interaction state machine. All time arrives with events.
#[derive(Debug, Clone, PartialEq)]
pub struct Engine {
    pub cfg: ReminderConfig,
    pub state: ReminderState,
}

impl Engine {
    pub fn new(cfg: ReminderConfig) -> Self {
        let state = ReminderState {
            phase: Phase::Idle,
            last_handwash_time: None,
            snooze_until: None,
            rssi_window: RssiWindow::new(secs(cfg.rssi_window_s)),
            door_beacon_id: cfg.door_beacon_id.clone(),
            reprompts: 0,
            prompted_at: 0,
            sensing_since: 0,
            entry_latched: false,
            last_t: None,
        };
        Self { cfg, state }
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    fn snoozed(&self, now: i64) -> bool {
        self.state.snooze_until.is_some_and(|u| now < u)
    }

    pub fn entry_detected(&self, now: i64) -> bool {
        self.state.rssi_window.entry_detected(
            now,
            &self.cfg.door_beacon_id,
            self.cfg.rssi_threshold_db,
        )
    }

    pub fn routine_due(&self, now: i64) -> bool {
        let hour = local_hour(now);
        let in_day = hour >= self.cfg.day_start_hour && hour < self.cfg.day_end_hour;
        let interval = secs(self.cfg.routine_interval_s);
        in_day
            && self
                .state
                .last_handwash_time
                .map_or(true, |t| now - t >= interval)
            && !self.snoozed(now)
    }

    /// Apply one event at time `t_ns`. On error the state is left untouched.
    pub fn step(&mut self, t_ns: i64, event: &Event) -> Result<Vec<Action>> {
        let mut next = self.clone();
        let actions = next.apply(t_ns, event)?;
        *self = next;
        Ok(actions)
    }

    fn apply(&mut self, now: i64, event: &Event) -> Result<Vec<Action>> {
        if let Some(last) = self.state.last_t {
            if now < last {
                return Err(Error::NonMonotonicClock { now, last });
            }
        }
        self.state.last_t = Some(now);
        let mut out = Vec::new();
        match event {
            Event::Rssi { beacon_id, rssi } => {
                self.state.rssi_window.ingest(BeaconReading::new(
                    now,
                    beacon_id.clone(),
                    *rssi,
                )?)?;
                let detected = self.entry_detected(now);
                let rising = detected && !self.state.entry_latched;
                self.state.entry_latched = detected;
                if rising {
                    self.remind(now, RemindReason::Entry, &mut out);
                }
            }
            Event::EntryDetected => self.remind(now, RemindReason::Entry, &mut out),
            Event::RoutineDue => self.remind(now, RemindReason::Routine, &mut out),
            Event::Utterance { text } => self.reply(now, parse_intent(text), &mut out),
            Event::Tick => self.tick(now, &mut out),
            Event::ReportDelivered => {
                if self.state.phase != Phase::Reporting {
                    return Err(Error::UnexpectedEvent {
                        phase: format!("{:?}", self.state.phase),
                        event: event.name().into(),
                    });
                }
                self.state.phase = Phase::Idle;
                self.state.last_handwash_time = Some(now);
            }
        }
        Ok(out)
    }

    fn remind(&mut self, now: i64, reason: RemindReason, out: &mut Vec<Action>) {
        if self.state.phase != Phase::Idle || self.snoozed(now) {
            return;
        }
        self.state.phase = Phase::Prompted;
        self.state.reprompts = 0;
        self.state.prompted_at = now;
        out.push(Action::Remind { reason });
    }

    fn reply(&mut self, now: i64, intent: Intent, out: &mut Vec<Action>) {
        match self.state.phase {
            Phase::Prompted | Phase::AwaitingStart => match intent {
                Intent::ConfirmStart => {
                    self.state.phase = Phase::Collecting;
                    self.state.sensing_since = now;
                    out.push(Action::StartSensing);
                }
                Intent::Snooze { minutes } => {
                    self.state.phase = Phase::Idle;
                    self.state.snooze_until = Some(now + i64::from(minutes) * 60 * NS_PER_S);
                }
                Intent::Decline => self.state.phase = Phase::Idle,
                Intent::Done | Intent::Unknown => self.unrecognized(now, out),
            },
            Phase::Collecting => {
                if intent == Intent::Done {
                    self.state.phase = Phase::Reporting;
                    out.push(Action::StopSensing);
                    out.push(Action::Assess {
                        start_ns: self.state.sensing_since,
                        end_ns: now,
                    });
                }
            }
            Phase::Idle | Phase::Reporting => {}
        }
    }

    fn unrecognized(&mut self, now: i64, out: &mut Vec<Action>) {
        if self.state.reprompts < self.cfg.max_reprompts {
            self.state.reprompts += 1;
            self.state.prompted_at = now;
            self.state.phase = Phase::AwaitingStart;
            out.push(Action::Reprompt);
        } else {
            self.state.phase = Phase::Idle;
        }
    }

    fn tick(&mut self, now: i64, out: &mut Vec<Action>) {
        self.state.rssi_window.evict(now);
        if !self.entry_detected(now) {
            self.state.entry_latched = false;
        }
        match self.state.phase {
            Phase::Prompted | Phase::AwaitingStart => {
                if now - self.state.prompted_at >= secs(self.cfg.prompt_timeout_s) {
                    self.unrecognized(now, out);
                }
            }
            Phase::Idle => {
                if let Some(until) = self.state.snooze_until {
                    if now >= until {
                        self.state.snooze_until = None;
                        self.remind(now, RemindReason::Rescheduled, out);
                        return;
                    }
                }
                if self.routine_due(now) {
                    self.remind(now, RemindReason::Routine, out);
                }
            }
            Phase::Collecting | Phase::Reporting => {}
        }
    }
}
