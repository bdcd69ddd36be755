//! The message log's wire format: one JSON object per line.
//!
//! Every record carries `{round, type, sender, payload, digest}` where the
//! digest is the SHA-256 of the payload's canonical JSON (object keys
//! sorted). Payloads are strict: unknown fields fail decoding, which is what
//! the trust-boundary scan leans on — these schemas simply have no slot for
//! feature vectors or model parameters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sampling::Provenance;
use crate::synthdata::InstanceId;
use crate::util::sha256_hex;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageType {
    Init,
    Level1,
    Level2,
    Selection,
    LabelBroadcast,
}

/// One line of `messages.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRecord {
    pub round: u32,
    #[serde(rename = "type")]
    pub msg_type: MessageType,
    pub sender: Option<u32>,
    pub payload: serde_json::Value,
    pub digest: String,
}

impl LogRecord {
    pub fn new<P: Serialize>(
        round: u32,
        msg_type: MessageType,
        sender: Option<u32>,
        payload: &P,
    ) -> Result<Self> {
        let payload = serde_json::to_value(payload)?;
        let digest = sha256_hex(payload.to_string().as_bytes());
        Ok(LogRecord {
            round,
            msg_type,
            sender,
            payload,
            digest,
        })
    }

    /// Recompute the payload digest and compare it to the recorded one.
    pub fn verify_digest(&self) -> Result<()> {
        let expected = sha256_hex(self.payload.to_string().as_bytes());
        if expected != self.digest {
            return Err(Error::ProtocolViolation(format!(
                "digest mismatch on round {} {:?} message",
                self.round, self.msg_type
            )));
        }
        Ok(())
    }

    /// Strictly decode the payload into the type matching `msg_type`.
    pub fn decode(&self) -> Result<Payload> {
        let payload = match self.msg_type {
            MessageType::Init => Payload::Init(serde_json::from_value(self.payload.clone())?),
            MessageType::Level1 => {
                Payload::Level1(serde_json::from_value(self.payload.clone())?)
            }
            MessageType::Level2 => {
                Payload::Level2(serde_json::from_value(self.payload.clone())?)
            }
            MessageType::Selection => {
                Payload::Selection(serde_json::from_value(self.payload.clone())?)
            }
            MessageType::LabelBroadcast => {
                Payload::LabelBroadcast(serde_json::from_value(self.payload.clone())?)
            }
        };
        Ok(payload)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Init(InitPayload),
    Level1(Level1Payload),
    Level2(Level2Payload),
    Selection(SelectionPayload),
    LabelBroadcast(BroadcastPayload),
}

/// Step-1 parameters as agreed by all collaborators, plus fingerprints that
/// make a session run reproducible from its log alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitPayload {
    pub q: u32,
    pub n: usize,
    pub k: usize,
    pub coordinator: u32,
    pub sampling_fn: String,
    pub pool_size: usize,
    pub dataset_digest: String,
    pub session_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level1Payload {
    pub probs: BTreeMap<InstanceId, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level2Source {
    BaseFallback,
    Ensemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level2Payload {
    pub probs: BTreeMap<InstanceId, f64>,
    pub source: Level2Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionPayload {
    pub chosen: Vec<InstanceId>,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BroadcastEntry {
    pub id: InstanceId,
    pub label: u8,
    pub supplier: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BroadcastPayload {
    pub entries: Vec<BroadcastEntry>,
}

/// Serialize records as JSONL, one record per line, bit-stable across runs.
pub fn write_jsonl<W: std::io::Write>(records: &[LogRecord], mut out: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse a JSONL message log, verifying each record's digest.
pub fn read_jsonl<R: std::io::BufRead>(reader: R) -> Result<Vec<LogRecord>> {
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LogRecord = serde_json::from_str(&line)?;
        record.verify_digest()?;
        records.push(record);
    }
    Ok(records)
}
