//! Aliases, deterministic Ed25519 key pairs, signing and verification.
//!
//! Key pairs are derived from caller-supplied 32-byte seeds so that equal
//! inputs always yield byte-identical keys and signatures; timestamps are
//! caller-supplied for the same reason. Secret keys never appear on any
//! serialization path.

use std::collections::BTreeMap;
use std::fmt;

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SEED_LEN: usize = 32;
pub const PUBLIC_KEY_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdentityError {
    #[error("alias must be non-empty")]
    EmptyAlias,
    #[error("seed must be exactly {SEED_LEN} bytes, got {0}")]
    BadSeedLength(usize),
    #[error("alias {0:?} is already registered")]
    DuplicateAlias(String),
    #[error("alias {0:?} is not registered")]
    UnknownAlias(String),
    #[error("malformed public key ({0} bytes)")]
    MalformedKey(usize),
    #[error("malformed signature ({0} bytes)")]
    MalformedSignature(usize),
    #[error("malformed registry file at line {0}")]
    MalformedRegistryLine(usize),
}

/// A signing party: alias plus Ed25519 key pair.
///
/// The secret half deliberately has no `Serialize` impl and is not exposed
/// beyond [`Identity::sign`].
#[derive(Clone)]
pub struct Identity {
    alias: String,
    signing: SigningKey,
}

impl fmt::Debug for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Identity")
            .field("alias", &self.alias)
            .field("public_key", &hex::encode(self.public_key()))
            .finish_non_exhaustive()
    }
}

impl Identity {
    pub fn alias(&self) -> &str {
        &self.alias
    }

    pub fn public_key(&self) -> [u8; PUBLIC_KEY_LEN] {
        self.signing.verifying_key().to_bytes()
    }

    /// Sign `message` at the caller-supplied timestamp (ms, UTC).
    pub fn sign(&self, message: &[u8], at: i64) -> Signature {
        let sig = self.signing.sign(message);
        Signature {
            signer_alias: self.alias.clone(),
            bytes: sig.to_bytes().to_vec(),
            signed_at: at,
        }
    }
}

/// Deterministic key generation: equal `(alias, seed)` yield byte-identical
/// key pairs.
pub fn generate_identity(alias: &str, seed: &[u8]) -> Result<Identity, IdentityError> {
    if alias.is_empty() {
        return Err(IdentityError::EmptyAlias);
    }
    if seed.len() != SEED_LEN {
        return Err(IdentityError::BadSeedLength(seed.len()));
    }
    let mut seed_arr = [0u8; SEED_LEN];
    seed_arr.copy_from_slice(seed);
    Ok(Identity {
        alias: alias.to_owned(),
        signing: SigningKey::from_bytes(&seed_arr),
    })
}

/// A detached signature: who signed, the raw 64 signature bytes, and the
/// attested point in time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub signer_alias: String,
    #[serde(with = "crate::identity::hex_bytes")]
    pub bytes: Vec<u8>,
    pub signed_at: i64,
}

/// True iff `sig` was produced over exactly `message` by the holder of
/// `public_key`'s secret. Malformed inputs are errors, distinct from a
/// clean `false`.
pub fn verify(
    public_key: &[u8],
    message: &[u8],
    sig: &Signature,
) -> Result<bool, IdentityError> {
    let key_arr: [u8; PUBLIC_KEY_LEN] = public_key
        .try_into()
        .map_err(|_| IdentityError::MalformedKey(public_key.len()))?;
    let key = VerifyingKey::from_bytes(&key_arr)
        .map_err(|_| IdentityError::MalformedKey(public_key.len()))?;
    let sig_arr: [u8; SIGNATURE_LEN] = sig
        .bytes
        .as_slice()
        .try_into()
        .map_err(|_| IdentityError::MalformedSignature(sig.bytes.len()))?;
    let dalek_sig = ed25519_dalek::Signature::from_bytes(&sig_arr);
    Ok(key.verify(message, &dalek_sig).is_ok())
}

/// Alias → public key map. Immutable once shared; registration is a
/// single-writer operation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    keys: BTreeMap<String, [u8; PUBLIC_KEY_LEN]>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, identity: &Identity) -> Result<(), IdentityError> {
        self.register_key(identity.alias(), identity.public_key())
    }

    pub fn register_key(
        &mut self,
        alias: &str,
        public_key: [u8; PUBLIC_KEY_LEN],
    ) -> Result<(), IdentityError> {
        if alias.is_empty() {
            return Err(IdentityError::EmptyAlias);
        }
        if self.keys.contains_key(alias) {
            return Err(IdentityError::DuplicateAlias(alias.to_owned()));
        }
        self.keys.insert(alias.to_owned(), public_key);
        Ok(())
    }

    pub fn lookup(&self, alias: &str) -> Result<&[u8; PUBLIC_KEY_LEN], IdentityError> {
        self.keys
            .get(alias)
            .ok_or_else(|| IdentityError::UnknownAlias(alias.to_owned()))
    }

    pub fn contains(&self, alias: &str) -> bool {
        self.keys.contains_key(alias)
    }

    pub fn aliases(&self) -> impl Iterator<Item = &str> {
        self.keys.keys().map(String::as_str)
    }

    /// Export as line-delimited `alias<TAB>hex(public_key)` records,
    /// UTF-8, LF line endings.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for (alias, key) in &self.keys {
            out.push_str(alias);
            out.push('\t');
            out.push_str(&hex::encode(key));
            out.push('\n');
        }
        out
    }

    pub fn import(text: &str) -> Result<Self, IdentityError> {
        let mut registry = Self::new();
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (alias, key_hex) = line
                .split_once('\t')
                .ok_or(IdentityError::MalformedRegistryLine(idx + 1))?;
            let key_bytes = hex::decode(key_hex)
                .map_err(|_| IdentityError::MalformedRegistryLine(idx + 1))?;
            let key: [u8; PUBLIC_KEY_LEN] = key_bytes
                .as_slice()
                .try_into()
                .map_err(|_| IdentityError::MalformedKey(key_bytes.len()))?;
            registry.register_key(alias, key)?;
        }
        Ok(registry)
    }
}

/// Hex (de)serialization for byte fields in journal records.
pub mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(de)?;
        hex::decode(&s).map_err(serde::de::Error::custom)
    }
}

/// Same as [`hex_bytes`] but for fixed 32-byte digests.
pub mod hex_digest {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8; 32], ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(de)?;
        let v = hex::decode(&s).map_err(serde::de::Error::custom)?;
        v.as_slice()
            .try_into()
            .map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))
    }
}
