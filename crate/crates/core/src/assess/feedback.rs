/// Spoken feedback for a missed step, indexed by step number minus one.
pub const MISSED_STEP_MESSAGES: [&str; 10] = [
    "Didn't rub both hands palm to palm",
    "Didn't rub right palm over left dorsum properly",
    "Didn't rub left palm over right dorsum properly",
    "Didn't put palm to palm with fingers interlaced properly",
    "Didn't clean right fingertips interlocked in left palm properly",
    "Didn't clean left fingertips interlocked in right palm properly",
    "Didn't rub left thumb clasped in right palm properly",
    "Didn't rub right thumb clasped in left palm properly",
    "Didn't rotationally rub right fingers on left palm properly",
    "Didn't rotationally rub left fingers on right palm properly",
];

pub const SHORT_DURATION_MESSAGE: &str = "Didn't wash hands for enough duration";

pub const PERFECT_MESSAGE: &str = "Great job! You washed your hands perfectly.";

/// Separator used when several messages are spoken as one utterance.
pub const MESSAGE_SEPARATOR: &str = "; ";

/// All twelve messages: steps 1 to 10, then duration, then the perfect wash.
pub fn all_messages() -> Vec<&'static str> {
    let mut v = MISSED_STEP_MESSAGES.to_vec();
    v.push(SHORT_DURATION_MESSAGE);
    v.push(PERFECT_MESSAGE);
    v
}

/// Message for a missed step in `1..=10`.
pub fn missed_step_message(step: u8) -> Option<&'static str> {
    MISSED_STEP_MESSAGES
        .get(usize::from(step).checked_sub(1)?)
        .copied()
}
