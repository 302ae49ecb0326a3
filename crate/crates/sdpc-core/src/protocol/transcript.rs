//! Append-only protocol transcript, one record per message event, exported
//! as CSV for the adversary harness and debugging.

use std::fmt;

use crate::crypto::{hash, Digest256};

use super::FlowKind;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Sent,
    Accepted,
    Rejected(String),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Sent => write!(f, "sent"),
            Verdict::Accepted => write!(f, "accepted"),
            Verdict::Rejected(why) => write!(f, "rejected:{why}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TranscriptEntry {
    pub run: u64,
    pub flow: FlowKind,
    pub step: &'static str,
    pub sender: String,
    pub receiver: String,
    /// Digest of the message bytes (or interest name for packets).
    pub digest: Digest256,
    pub verdict: Verdict,
}

#[derive(Debug, Default)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(
        &mut self,
        run: u64,
        flow: FlowKind,
        step: &'static str,
        sender: impl Into<String>,
        receiver: impl Into<String>,
        bytes: &[u8],
        verdict: Verdict,
    ) {
        self.entries.push(TranscriptEntry {
            run,
            flow,
            step,
            sender: sender.into(),
            receiver: receiver.into(),
            digest: hash(bytes),
            verdict,
        });
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn runs(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.entries.iter().map(|e| e.run).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,flow,step,sender,receiver,digest,verdict\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.run,
                e.flow,
                e.step,
                e.sender,
                e.receiver,
                &e.digest.to_hex()[..16],
                e.verdict
            ));
        }
        out
    }
}
