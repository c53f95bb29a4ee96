//! The triple-entry receipt protocol: draft → offered → accepted → validated.
//!
//! Each transition consumes the entry and returns a new value, so illegal
//! mutation is unrepresentable. Signatures nest: the payee signs over the
//! payer's signature bytes and the validator signs over both plus the chain
//! head, which fixes the signing order non-repudiably.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::identity::{verify, Identity, IdentityError, Registry, Signature};

pub const ENTRY_ID_LEN: usize = 16;
pub const DIGEST_LEN: usize = 32;
pub const MAX_MEMO_BYTES: usize = 1024;
pub const MAX_STUB_BYTES: usize = 4096;

/// Name of the hash scheme recorded in journal file headers.
pub const HASH_SCHEME: &str = "sha256";

pub type Digest32 = [u8; DIGEST_LEN];

pub const GENESIS_HASH: Digest32 = [0u8; DIGEST_LEN];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("core invariant violated: {0}")]
    InvariantViolation(String),
    #[error("operation not permitted in state {0:?}")]
    WrongState(EntryState),
    #[error("signer {signer:?} is not the {expected_role} ({expected_alias:?})")]
    WrongParty {
        signer: String,
        expected_role: &'static str,
        expected_alias: String,
    },
    #[error("prior signature by {0:?} does not verify")]
    InvalidPriorSignature(String),
    #[error("stub owner {0:?} is not a party to the entry")]
    NotAParty(String),
    #[error("a stub for {0:?} is already attached")]
    StubAlreadyPresent(String),
    #[error("stub payload exceeds {MAX_STUB_BYTES} bytes")]
    StubTooLarge,
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error("canonical decode failed at byte {0}")]
    DecodeError(usize),
}

/// The immutable inter-party transaction content all three parties sign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryCore {
    #[serde(with = "hex_entry_id")]
    pub entry_id: [u8; ENTRY_ID_LEN],
    pub payer_alias: String,
    pub payee_alias: String,
    /// Non-negative amount in minor units. Integer money only.
    pub amount: u64,
    pub unit: String,
    pub memo: String,
    /// Caller-supplied creation time, ms UTC.
    pub created_at: i64,
}

impl EntryCore {
    pub fn check_invariants(&self) -> Result<(), ProtocolError> {
        if self.payer_alias.is_empty() || self.payee_alias.is_empty() {
            return Err(ProtocolError::InvariantViolation(
                "party aliases must be non-empty".into(),
            ));
        }
        if self.payer_alias == self.payee_alias {
            return Err(ProtocolError::InvariantViolation(
                "payer and payee must differ".into(),
            ));
        }
        if self.memo.len() > MAX_MEMO_BYTES {
            return Err(ProtocolError::InvariantViolation(format!(
                "memo exceeds {MAX_MEMO_BYTES} bytes"
            )));
        }
        Ok(())
    }
}

mod hex_entry_id {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(id: &[u8; 16], ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&hex::encode(id))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<[u8; 16], D::Error> {
        let s = String::deserialize(de)?;
        let v = hex::decode(&s).map_err(serde::de::Error::custom)?;
        v.as_slice()
            .try_into()
            .map_err(|_| serde::de::Error::custom("entry_id must be 16 bytes"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryState {
    Draft,
    Offered,
    Accepted,
    Validated,
    Rejected,
}

/// The shared entry with its protocol state and up to three signatures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedEntry {
    pub core: EntryCore,
    pub state: EntryState,
    pub payer_sig: Option<Signature>,
    pub payee_sig: Option<Signature>,
    pub validator_sig: Option<Signature>,
}

impl SharedEntry {
    pub fn draft(core: EntryCore) -> Result<Self, ProtocolError> {
        core.check_invariants()?;
        Ok(SharedEntry {
            core,
            state: EntryState::Draft,
            payer_sig: None,
            payee_sig: None,
            validator_sig: None,
        })
    }
}

/// An optional per-party private annotation. Stubs are unsigned and excluded
/// from the canonical encoding and the receipt hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stub {
    pub owner_alias: String,
    #[serde(with = "crate::identity::hex_bytes")]
    pub payload: Vec<u8>,
}

/// A finalized triple-signed, hash-chained journal record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidatedReceipt {
    pub seq: u64,
    #[serde(with = "crate::identity::hex_digest")]
    pub prev_hash: Digest32,
    #[serde(with = "crate::identity::hex_digest")]
    pub receipt_hash: Digest32,
    pub entry: SharedEntry,
    pub payer_stub: Option<Stub>,
    pub payee_stub: Option<Stub>,
}

fn put_field(out: &mut Vec<u8>, field: &[u8]) {
    out.extend_from_slice(&(field.len() as u32).to_be_bytes());
    out.extend_from_slice(field);
}

/// Deterministic, injective encoding of an [`EntryCore`]: fields in fixed
/// order, each length-prefixed with a 4-byte big-endian length. This is the
/// byte string every party signs.
pub fn canonical_encode(core: &EntryCore) -> Result<Vec<u8>, ProtocolError> {
    core.check_invariants()?;
    let mut out = Vec::new();
    put_field(&mut out, &core.entry_id);
    put_field(&mut out, core.payer_alias.as_bytes());
    put_field(&mut out, core.payee_alias.as_bytes());
    put_field(&mut out, &core.amount.to_be_bytes());
    put_field(&mut out, core.unit.as_bytes());
    put_field(&mut out, core.memo.as_bytes());
    put_field(&mut out, &core.created_at.to_be_bytes());
    Ok(out)
}

fn take_field<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], ProtocolError> {
    let start = *pos;
    let len_bytes = bytes
        .get(start..start + 4)
        .ok_or(ProtocolError::DecodeError(start))?;
    let len = u32::from_be_bytes(len_bytes.try_into().unwrap()) as usize;
    *pos += 4;
    let field = bytes
        .get(*pos..*pos + len)
        .ok_or(ProtocolError::DecodeError(start))?;
    *pos += len;
    Ok(field)
}

/// Inverse of [`canonical_encode`].
pub fn canonical_decode(bytes: &[u8]) -> Result<EntryCore, ProtocolError> {
    let mut pos = 0;
    let entry_id: [u8; ENTRY_ID_LEN] = take_field(bytes, &mut pos)?
        .try_into()
        .map_err(|_| ProtocolError::DecodeError(pos))?;
    let payer_alias = String::from_utf8(take_field(bytes, &mut pos)?.to_vec())
        .map_err(|_| ProtocolError::DecodeError(pos))?;
    let payee_alias = String::from_utf8(take_field(bytes, &mut pos)?.to_vec())
        .map_err(|_| ProtocolError::DecodeError(pos))?;
    let amount = u64::from_be_bytes(
        take_field(bytes, &mut pos)?
            .try_into()
            .map_err(|_| ProtocolError::DecodeError(pos))?,
    );
    let unit = String::from_utf8(take_field(bytes, &mut pos)?.to_vec())
        .map_err(|_| ProtocolError::DecodeError(pos))?;
    let memo = String::from_utf8(take_field(bytes, &mut pos)?.to_vec())
        .map_err(|_| ProtocolError::DecodeError(pos))?;
    let created_at = i64::from_be_bytes(
        take_field(bytes, &mut pos)?
            .try_into()
            .map_err(|_| ProtocolError::DecodeError(pos))?,
    );
    if pos != bytes.len() {
        return Err(ProtocolError::DecodeError(pos));
    }
    Ok(EntryCore {
        entry_id,
        payer_alias,
        payee_alias,
        amount,
        unit,
        memo,
        created_at,
    })
}

/// Preimage the payee signs: canonical core bytes followed by the payer's
/// signature bytes.
fn payee_preimage(core_bytes: &[u8], payer_sig: &Signature) -> Vec<u8> {
    let mut m = core_bytes.to_vec();
    m.extend_from_slice(&payer_sig.bytes);
    m
}

/// Preimage the validator signs: core bytes, both party signatures, and the
/// chain head the receipt will extend.
fn validator_preimage(
    core_bytes: &[u8],
    payer_sig: &Signature,
    payee_sig: &Signature,
    prev_hash: &Digest32,
) -> Vec<u8> {
    let mut m = core_bytes.to_vec();
    m.extend_from_slice(&payer_sig.bytes);
    m.extend_from_slice(&payee_sig.bytes);
    m.extend_from_slice(prev_hash);
    m
}

fn encode_signature(out: &mut Vec<u8>, sig: &Signature) {
    put_field(out, sig.signer_alias.as_bytes());
    put_field(out, &sig.bytes);
    put_field(out, &sig.signed_at.to_be_bytes());
}

/// Canonical encoding of a validated entry for the receipt hash: core bytes,
/// state tag, and all three signatures (alias, bytes, timestamp). Stubs are
/// excluded, so attaching one never perturbs the hash.
pub fn encode_entry(entry: &SharedEntry) -> Result<Vec<u8>, ProtocolError> {
    let mut out = Vec::new();
    put_field(&mut out, &canonical_encode(&entry.core)?);
    out.push(match entry.state {
        EntryState::Draft => 0,
        EntryState::Offered => 1,
        EntryState::Accepted => 2,
        EntryState::Validated => 3,
        EntryState::Rejected => 4,
    });
    for sig in [&entry.payer_sig, &entry.payee_sig, &entry.validator_sig]
        .into_iter()
        .flatten()
    {
        encode_signature(&mut out, sig);
    }
    Ok(out)
}

pub fn compute_receipt_hash(
    prev_hash: &Digest32,
    entry: &SharedEntry,
) -> Result<Digest32, ProtocolError> {
    let mut hasher = Sha256::new();
    hasher.update(prev_hash);
    hasher.update(encode_entry(entry)?);
    Ok(hasher.finalize().into())
}

/// Payer signs the draft, producing an offer.
pub fn offer(
    entry: SharedEntry,
    payer: &Identity,
    at: i64,
) -> Result<SharedEntry, ProtocolError> {
    if entry.state != EntryState::Draft {
        return Err(ProtocolError::WrongState(entry.state));
    }
    if payer.alias() != entry.core.payer_alias {
        return Err(ProtocolError::WrongParty {
            signer: payer.alias().to_owned(),
            expected_role: "payer",
            expected_alias: entry.core.payer_alias.clone(),
        });
    }
    let core_bytes = canonical_encode(&entry.core)?;
    Ok(SharedEntry {
        payer_sig: Some(payer.sign(&core_bytes, at)),
        state: EntryState::Offered,
        ..entry
    })
}

/// Payee countersigns over the payer's signature, accepting the offer.
pub fn accept(
    entry: SharedEntry,
    payee: &Identity,
    registry: &Registry,
    at: i64,
) -> Result<SharedEntry, ProtocolError> {
    if entry.state != EntryState::Offered {
        return Err(ProtocolError::WrongState(entry.state));
    }
    if payee.alias() != entry.core.payee_alias {
        return Err(ProtocolError::WrongParty {
            signer: payee.alias().to_owned(),
            expected_role: "payee",
            expected_alias: entry.core.payee_alias.clone(),
        });
    }
    let core_bytes = canonical_encode(&entry.core)?;
    let payer_sig = entry
        .payer_sig
        .as_ref()
        .ok_or_else(|| ProtocolError::InvalidPriorSignature(entry.core.payer_alias.clone()))?;
    let payer_key = registry.lookup(&entry.core.payer_alias)?;
    if !verify(payer_key, &core_bytes, payer_sig)? {
        return Err(ProtocolError::InvalidPriorSignature(
            entry.core.payer_alias.clone(),
        ));
    }
    let preimage = payee_preimage(&core_bytes, payer_sig);
    Ok(SharedEntry {
        payee_sig: Some(payee.sign(&preimage, at)),
        state: EntryState::Accepted,
        ..entry
    })
}

/// Payee declines an offer. Terminal; rejected entries never enter a journal.
pub fn reject(
    entry: SharedEntry,
    payee: &Identity,
    _reason: &str,
) -> Result<SharedEntry, ProtocolError> {
    if entry.state != EntryState::Offered {
        return Err(ProtocolError::WrongState(entry.state));
    }
    if payee.alias() != entry.core.payee_alias {
        return Err(ProtocolError::WrongParty {
            signer: payee.alias().to_owned(),
            expected_role: "payee",
            expected_alias: entry.core.payee_alias.clone(),
        });
    }
    Ok(SharedEntry {
        state: EntryState::Rejected,
        ..entry
    })
}

/// The validator checks both prior signatures and, if everything is in
/// order, signs off, producing a hashed triple-signed receipt.
pub fn validate(
    entry: SharedEntry,
    validator: &Identity,
    registry: &Registry,
    prev_hash: Digest32,
    seq: u64,
    at: i64,
) -> Result<ValidatedReceipt, ProtocolError> {
    if entry.state != EntryState::Accepted {
        return Err(ProtocolError::WrongState(entry.state));
    }
    let core_bytes = canonical_encode(&entry.core)?;
    let payer_sig = entry
        .payer_sig
        .clone()
        .ok_or_else(|| ProtocolError::InvalidPriorSignature(entry.core.payer_alias.clone()))?;
    let payee_sig = entry
        .payee_sig
        .clone()
        .ok_or_else(|| ProtocolError::InvalidPriorSignature(entry.core.payee_alias.clone()))?;
    if !verify(registry.lookup(&entry.core.payer_alias)?, &core_bytes, &payer_sig)? {
        return Err(ProtocolError::InvalidPriorSignature(
            entry.core.payer_alias.clone(),
        ));
    }
    let payee_msg = payee_preimage(&core_bytes, &payer_sig);
    if !verify(registry.lookup(&entry.core.payee_alias)?, &payee_msg, &payee_sig)? {
        return Err(ProtocolError::InvalidPriorSignature(
            entry.core.payee_alias.clone(),
        ));
    }
    let preimage = validator_preimage(&core_bytes, &payer_sig, &payee_sig, &prev_hash);
    let validated = SharedEntry {
        validator_sig: Some(validator.sign(&preimage, at)),
        state: EntryState::Validated,
        ..entry
    };
    let receipt_hash = compute_receipt_hash(&prev_hash, &validated)?;
    Ok(ValidatedReceipt {
        seq,
        prev_hash,
        receipt_hash,
        entry: validated,
        payer_stub: None,
        payee_stub: None,
    })
}

/// Per-check outcome of receipt verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub payer_sig_ok: bool,
    pub payee_sig_ok: bool,
    pub validator_sig_ok: bool,
    pub hash_ok: bool,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.payer_sig_ok && self.payee_sig_ok && self.validator_sig_ok && self.hash_ok
    }
}

/// Re-check all three signatures and recompute the receipt hash.
pub fn verify_receipt(
    receipt: &ValidatedReceipt,
    registry: &Registry,
) -> Result<VerificationReport, ProtocolError> {
    let entry = &receipt.entry;
    let core_bytes = canonical_encode(&entry.core)?;
    let payer_key = registry.lookup(&entry.core.payer_alias)?;
    let payee_key = registry.lookup(&entry.core.payee_alias)?;

    let payer_sig_ok = match &entry.payer_sig {
        Some(sig) => verify(payer_key, &core_bytes, sig).unwrap_or(false),
        None => false,
    };
    let payee_sig_ok = match (&entry.payer_sig, &entry.payee_sig) {
        (Some(payer_sig), Some(sig)) => {
            let msg = payee_preimage(&core_bytes, payer_sig);
            verify(payee_key, &msg, sig).unwrap_or(false)
        }
        _ => false,
    };
    let validator_sig_ok = match (&entry.payer_sig, &entry.payee_sig, &entry.validator_sig) {
        (Some(payer_sig), Some(payee_sig), Some(sig)) => {
            let validator_key = registry.lookup(&sig.signer_alias)?;
            let msg =
                validator_preimage(&core_bytes, payer_sig, payee_sig, &receipt.prev_hash);
            verify(validator_key, &msg, sig).unwrap_or(false)
        }
        _ => false,
    };
    let hash_ok = entry.state == EntryState::Validated
        && compute_receipt_hash(&receipt.prev_hash, entry)
            .map(|h| h == receipt.receipt_hash)
            .unwrap_or(false);

    Ok(VerificationReport {
        payer_sig_ok,
        payee_sig_ok,
        validator_sig_ok,
        hash_ok,
    })
}

/// Attach a private stub beside the receipt. At most one stub per party;
/// signatures and receipt hash are untouched.
pub fn attach_stub(
    mut receipt: ValidatedReceipt,
    stub: Stub,
) -> Result<ValidatedReceipt, ProtocolError> {
    if stub.payload.len() > MAX_STUB_BYTES {
        return Err(ProtocolError::StubTooLarge);
    }
    if stub.owner_alias == receipt.entry.core.payer_alias {
        if receipt.payer_stub.is_some() {
            return Err(ProtocolError::StubAlreadyPresent(stub.owner_alias));
        }
        receipt.payer_stub = Some(stub);
    } else if stub.owner_alias == receipt.entry.core.payee_alias {
        if receipt.payee_stub.is_some() {
            return Err(ProtocolError::StubAlreadyPresent(stub.owner_alias));
        }
        receipt.payee_stub = Some(stub);
    } else {
        return Err(ProtocolError::NotAParty(stub.owner_alias));
    }
    Ok(receipt)
}
