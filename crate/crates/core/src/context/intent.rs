use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Intent {
    ConfirmStart,
    Done,
    Snooze { minutes: u32 },
    Decline,
    Unknown,
}

const DONE: &[&str] = &[
    "done",
    "finished",
    "finish",
    "complete",
    "completed",
    "stop",
];
const CONFIRM: &[&str] = &[
    "yes", "yeah", "yep", "sure", "ok", "okay", "start", "starting", "begin", "washing",
];
const DECLINE: &[&str] = &["no", "not", "don't", "dont", "never", "nope", "cancel"];

fn tokens(utterance: &str) -> Vec<String> {
    utterance
        .to_lowercase()
        .replace('\u{2019}', "'")
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\'').to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Keyword intent. When several kinds match, snooze wins over done, done
/// over confirm, and confirm over decline.
pub fn parse_intent(utterance: &str) -> Intent {
    let toks = tokens(utterance);
    let has = |set: &[&str]| toks.iter().any(|t| set.contains(&t.as_str()));
    let wants_later = toks.iter().any(|t| t == "remind" || t == "later");
    let minutes = toks.iter().find_map(|t| t.parse::<u32>().ok());
    let says_minutes = toks.iter().any(|t| t.starts_with("min"));
    if let (true, Some(m), true) = (wants_later, minutes, says_minutes) {
        if m >= 1 {
            return Intent::Snooze { minutes: m };
        }
    }
    if has(DONE) {
        Intent::Done
    } else if has(CONFIRM) {
        Intent::ConfirmStart
    } else if has(DECLINE) {
        Intent::Decline
    } else {
        Intent::Unknown
    }
}
