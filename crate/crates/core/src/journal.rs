//! The append-only, hash-chained shared journal.
//!
//! This is the bookkeeping layer: raw receipts recorded sequentially, no
//! analytical reorganization. The head hash commits to the entire history.
//! The file format is line-delimited JSON — one header line, then one
//! receipt per line — so journals are human-inspectable and diff-friendly.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::identity::{IdentityError, Registry};
use crate::protocol::{
    verify_receipt, Digest32, ProtocolError, ValidatedReceipt, GENESIS_HASH, HASH_SCHEME,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("receipt prev_hash does not match the journal head")]
    ChainMismatch,
    #[error("receipt seq {got} does not match journal length {expected}")]
    SeqMismatch { got: u64, expected: u64 },
    #[error("entry id {0} already appended")]
    DuplicateEntryId(String),
    #[error("receipt failed verification: {0}")]
    BadReceipt(String),
    #[error("corrupt journal file at byte offset {offset}: {reason}")]
    CorruptFile { offset: usize, reason: String },
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Who may read an entry. Parties to the entry always see it regardless.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Visibility {
    Public,
    Restricted { aliases: BTreeSet<String> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    hash_scheme: String,
    validator_alias: String,
    #[serde(with = "crate::identity::hex_digest")]
    genesis_hash: Digest32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Record {
    #[serde(flatten)]
    receipt: ValidatedReceipt,
    visibility: Visibility,
}

/// Append-only sequence of validated receipts with chained digests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedJournal {
    validator_alias: String,
    receipts: Vec<ValidatedReceipt>,
    visibility: BTreeMap<[u8; 16], Visibility>,
}

/// Which chain check failed first, and where.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainReport {
    Pass { length: u64 },
    Fail { index: u64, check: ChainCheck },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainCheck {
    Seq,
    HashLink,
    Signature,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        matches!(self, ChainReport::Pass { .. })
    }
}

impl SharedJournal {
    pub fn new(validator_alias: &str) -> Self {
        SharedJournal {
            validator_alias: validator_alias.to_owned(),
            receipts: Vec::new(),
            visibility: BTreeMap::new(),
        }
    }

    pub fn validator_alias(&self) -> &str {
        &self.validator_alias
    }

    pub fn len(&self) -> u64 {
        self.receipts.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.receipts.is_empty()
    }

    pub fn head_hash(&self) -> Digest32 {
        self.receipts
            .last()
            .map(|r| r.receipt_hash)
            .unwrap_or(GENESIS_HASH)
    }

    pub fn receipts(&self) -> &[ValidatedReceipt] {
        &self.receipts
    }

    pub fn get(&self, entry_id: &[u8; 16]) -> Option<&ValidatedReceipt> {
        self.receipts
            .iter()
            .find(|r| &r.entry.core.entry_id == entry_id)
    }

    pub fn visibility(&self, entry_id: &[u8; 16]) -> Option<&Visibility> {
        self.visibility.get(entry_id)
    }

    /// Append a verified receipt extending the current head.
    ///
    /// Visibility defaults to restricted to the payer, the payee and the
    /// validator; pass `visibility` to override per entry.
    pub fn append(
        &mut self,
        receipt: ValidatedReceipt,
        registry: &Registry,
        visibility: Option<Visibility>,
    ) -> Result<u64, JournalError> {
        if receipt.prev_hash != self.head_hash() {
            return Err(JournalError::ChainMismatch);
        }
        if receipt.seq != self.len() {
            return Err(JournalError::SeqMismatch {
                got: receipt.seq,
                expected: self.len(),
            });
        }
        let id = receipt.entry.core.entry_id;
        if self.visibility.contains_key(&id) {
            return Err(JournalError::DuplicateEntryId(hex::encode(id)));
        }
        let report = verify_receipt(&receipt, registry)?;
        if !report.pass() {
            return Err(JournalError::BadReceipt(format!("{report:?}")));
        }
        let vis = visibility.unwrap_or_else(|| Visibility::Restricted {
            aliases: [
                receipt.entry.core.payer_alias.clone(),
                receipt.entry.core.payee_alias.clone(),
                self.validator_alias.clone(),
            ]
            .into_iter()
            .collect(),
        });
        let seq = receipt.seq;
        self.visibility.insert(id, vis);
        self.receipts.push(receipt);
        Ok(seq)
    }

    /// Walk the chain front to back, reporting the first failing receipt.
    ///
    /// Hash links and sequence numbers are checked in a first pass;
    /// signatures only when the structural pass is clean, since a broken
    /// link already condemns everything after it.
    pub fn verify_chain(&self, registry: &Registry) -> ChainReport {
        let mut prev = GENESIS_HASH;
        for (i, receipt) in self.receipts.iter().enumerate() {
            if receipt.seq != i as u64 {
                return ChainReport::Fail {
                    index: i as u64,
                    check: ChainCheck::Seq,
                };
            }
            let recomputed = crate::protocol::compute_receipt_hash(&receipt.prev_hash, &receipt.entry);
            if receipt.prev_hash != prev
                || recomputed.map(|h| h != receipt.receipt_hash).unwrap_or(true)
            {
                return ChainReport::Fail {
                    index: i as u64,
                    check: ChainCheck::HashLink,
                };
            }
            prev = receipt.receipt_hash;
        }
        for (i, receipt) in self.receipts.iter().enumerate() {
            let ok = verify_receipt(receipt, registry)
                .map(|r| r.pass())
                .unwrap_or(false);
            if !ok {
                return ChainReport::Fail {
                    index: i as u64,
                    check: ChainCheck::Signature,
                };
            }
        }
        ChainReport::Pass { length: self.len() }
    }

    /// Everything `requester_alias` may see: all public entries, restricted
    /// entries naming them, and every entry they are party to.
    pub fn read_view(
        &self,
        requester_alias: &str,
        registry: &Registry,
    ) -> Result<Vec<&ValidatedReceipt>, JournalError> {
        if !registry.contains(requester_alias) {
            return Err(IdentityError::UnknownAlias(requester_alias.to_owned()).into());
        }
        Ok(self
            .receipts
            .iter()
            .filter(|r| self.can_view(requester_alias, &r.entry.core.entry_id))
            .collect())
    }

    pub fn can_view(&self, alias: &str, entry_id: &[u8; 16]) -> bool {
        let Some(receipt) = self.get(entry_id) else {
            return false;
        };
        if receipt.entry.core.payer_alias == alias || receipt.entry.core.payee_alias == alias {
            return true;
        }
        match self.visibility.get(entry_id) {
            Some(Visibility::Public) => true,
            Some(Visibility::Restricted { aliases }) => aliases.contains(alias),
            None => false,
        }
    }

    /// Serialize to the line-delimited journal format. Deterministic:
    /// equal journals produce byte-identical files.
    pub fn to_file_bytes(&self) -> Result<Vec<u8>, JournalError> {
        let header = Header {
            format_version: FORMAT_VERSION,
            hash_scheme: HASH_SCHEME.to_owned(),
            validator_alias: self.validator_alias.clone(),
            genesis_hash: GENESIS_HASH,
        };
        let mut out = Vec::new();
        serde_json::to_writer(&mut out, &header).expect("header serializes");
        out.push(b'\n');
        for receipt in &self.receipts {
            let record = Record {
                receipt: receipt.clone(),
                visibility: self
                    .visibility
                    .get(&receipt.entry.core.entry_id)
                    .cloned()
                    .unwrap_or(Visibility::Public),
            };
            serde_json::to_writer(&mut out, &record).expect("record serializes");
            out.push(b'\n');
        }
        Ok(out)
    }

    pub fn persist(&self, path: &Path) -> Result<(), JournalError> {
        let bytes = self.to_file_bytes()?;
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Parse the journal format and re-verify the full chain before
    /// returning. An empty file yields an empty journal at the genesis head.
    pub fn from_file_bytes(bytes: &[u8], registry: &Registry) -> Result<Self, JournalError> {
        if bytes.is_empty() {
            return Ok(SharedJournal::new(""));
        }
        let text = std::str::from_utf8(bytes).map_err(|e| JournalError::CorruptFile {
            offset: e.valid_up_to(),
            reason: "invalid utf-8".into(),
        })?;
        let mut offset = 0usize;
        let mut lines = text.split_inclusive('\n');
        let header_line = lines.next().ok_or(JournalError::CorruptFile {
            offset: 0,
            reason: "missing header".into(),
        })?;
        let header: Header =
            serde_json::from_str(header_line).map_err(|e| JournalError::CorruptFile {
                offset,
                reason: format!("bad header: {e}"),
            })?;
        if header.format_version != FORMAT_VERSION
            || header.hash_scheme != HASH_SCHEME
            || header.genesis_hash != GENESIS_HASH
        {
            return Err(JournalError::CorruptFile {
                offset,
                reason: "unsupported header".into(),
            });
        }
        offset += header_line.len();
        let mut journal = SharedJournal::new(&header.validator_alias);
        for line in lines {
            if line.trim().is_empty() {
                offset += line.len();
                continue;
            }
            let record: Record =
                serde_json::from_str(line).map_err(|e| JournalError::CorruptFile {
                    offset,
                    reason: format!("bad record: {e}"),
                })?;
            let id = record.receipt.entry.core.entry_id;
            if journal.visibility.contains_key(&id) {
                return Err(JournalError::DuplicateEntryId(hex::encode(id)));
            }
            journal.visibility.insert(id, record.visibility);
            journal.receipts.push(record.receipt);
            offset += line.len();
        }
        match journal.verify_chain(registry) {
            ChainReport::Pass { .. } => Ok(journal),
            ChainReport::Fail { index, check } => Err(match check {
                ChainCheck::HashLink | ChainCheck::Seq => JournalError::ChainMismatch,
                ChainCheck::Signature => {
                    JournalError::BadReceipt(format!("receipt {index} failed signature check"))
                }
            }),
        }
    }

    pub fn load(path: &Path, registry: &Registry) -> Result<Self, JournalError> {
        let bytes = fs::read(path)?;
        Self::from_file_bytes(&bytes, registry)
    }

    /// Replace a receipt wholesale. Not part of the public journal contract:
    /// the simulator uses this to model a tampering node's local copy.
    #[doc(hidden)]
    pub fn tamper_replace(&mut self, index: usize, receipt: ValidatedReceipt) -> bool {
        match self.receipts.get_mut(index) {
            Some(slot) => {
                *slot = receipt;
                true
            }
            None => false,
        }
    }
}
