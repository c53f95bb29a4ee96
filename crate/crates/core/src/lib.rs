//! Triple-entry accounting engine.
//!
//! The crate is layered the way the bookkeeping/accounting divide demands:
//!
//! - [`identity`] — key generation, aliases, signing and verification.
//! - [`protocol`] — the offer/accept/validate state machine producing
//!   triple-signed receipts.
//! - [`journal`] — the append-only, hash-chained shared journal (the
//!   bookkeeping layer; recording only, strictly sequential).
//! - [`ledger`] — per-party general ledgers split into transaction postings
//!   (GLT) and reporting adjustments (GLR), trial balances, redundancy
//!   arithmetic and plain-text export (the accounting layer).
//! - [`sim`] — a deterministic discrete-event replication simulator for
//!   multi-node journal convergence and tamper detection.
//! - [`typology`] — an executable classifier for ledger-technology
//!   categories (TEB/TEA, DBT/DJT/DLT, blockchain permission variants).
//!
//! Nothing in [`ledger`] can mutate a journal: accounting consumes validated
//! journal data through immutable references only.

pub mod identity;
pub mod journal;
pub mod ledger;
pub mod protocol;
pub mod sim;
pub mod typology;
