use serde::{Deserialize, Serialize};

/// A non-fatal condition worth recording next to the results it affects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Warning {
    pub kind: String,
    pub subject: String,
    pub message: String,
}

impl Warning {
    pub fn new(kind: &str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind: kind.to_string(), subject: subject.into(), message: message.into() }
    }
}
