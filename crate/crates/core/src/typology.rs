//! Executable ledger-technology typology.
//!
//! A [`SystemProfile`] is a declarative feature vector describing any ledger
//! system; [`classify`] derives its category labels (Book/Journal/Ledger,
//! shared and distributed variants, DBT/DJT/DLT, blockchain permission
//! variants, TEB/TEA) and [`check_tea_criteria`] scores it against the TEA
//! criteria: three operational requisites, two near-essential security
//! features, eight architectural add-ons, four further features.
//!
//! Classification is definitional, not empirical: profiles are inputs, not
//! probes of live systems.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TypologyError {
    #[error("inconsistent profile: {0}")]
    InconsistentProfile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BookKind {
    Journal,
    Ledger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Storage {
    SingleMachine,
    Parallel,
    Distributed,
}

/// How copies of a distributed book are kept in agreement, in order of
/// decentralization: master duplication and change replication both require
/// trusting the operator; trustless verification does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncMechanism {
    MasterDuplication,
    ChangeReplication,
    TrustlessVerification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadAccess {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WriteAccess {
    Permissionless,
    Permissioned,
    Consortium,
    OperatorOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Addon {
    Settlement,
    SmartContracts,
    RicardianContracts,
    DistributedLedger,
    StubStructure,
    GlTransactions,
    GlReporting,
    ViewingPermissions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FurtherFeature {
    Scalability,
    Compliance,
    Affordability,
    UserFriendliness,
}

/// Feature vector describing a ledger system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemProfile {
    pub name: String,
    pub is_transaction_record: bool,
    pub book_kind: BookKind,
    pub shared_between_unrelated_parties: bool,
    pub storage: Storage,
    pub sync_mechanism: SyncMechanism,
    pub block_structured: bool,
    pub read_access: ReadAccess,
    pub write_access: WriteAccess,
    pub has_three_signature_flow: bool,
    pub has_accounting_layer: bool,
    pub immutable_record: bool,
    pub strong_identity: bool,
    #[serde(default)]
    pub addons: BTreeSet<Addon>,
    #[serde(default)]
    pub further: BTreeSet<FurtherFeature>,
}

impl SystemProfile {
    pub fn from_toml(text: &str) -> Result<Self, TypologyError> {
        let profile: SystemProfile =
            toml::from_str(text).map_err(|e| TypologyError::InconsistentProfile(e.to_string()))?;
        profile.check()?;
        Ok(profile)
    }

    pub fn check(&self) -> Result<(), TypologyError> {
        if self.block_structured
            && (self.storage != Storage::Distributed
                || self.sync_mechanism != SyncMechanism::TrustlessVerification)
        {
            return Err(TypologyError::InconsistentProfile(
                "block-structured systems are distributed with trustless verification".into(),
            ));
        }
        if self.has_accounting_layer && self.book_kind != BookKind::Ledger {
            return Err(TypologyError::InconsistentProfile(
                "an accounting layer implies a ledger, not a journal".into(),
            ));
        }
        if self.block_structured {
            let valid = matches!(
                (self.read_access, self.write_access),
                (ReadAccess::Open, WriteAccess::Permissionless)
                    | (ReadAccess::Open, WriteAccess::Permissioned)
                    | (ReadAccess::Closed, WriteAccess::Consortium)
                    | (ReadAccess::Closed, WriteAccess::OperatorOnly)
            );
            if !valid {
                return Err(TypologyError::InconsistentProfile(format!(
                    "blockchain permission matrix does not pair {:?} reads with {:?} writes",
                    self.read_access, self.write_access
                )));
            }
        }
        Ok(())
    }
}

/// Blockchain permission variant from the (read, write) access matrix:
/// open books split into permissionless/permissioned, closed books into
/// consortium/enterprise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockchainVariant {
    OpenPermissionless,
    OpenPermissioned,
    ClosedConsortium,
    ClosedEnterprise,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Book,
    Journal,
    Ledger,
    SharedJournal,
    SharedLedger,
    DistributedBook,
    Dbt,
    Djt,
    Dlt,
    Blockchain(BlockchainVariant),
    Teb,
    Tea,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub name: String,
    pub labels: BTreeSet<Label>,
}

impl Classification {
    pub fn has(&self, label: &Label) -> bool {
        self.labels.contains(label)
    }
    pub fn is_blockchain(&self) -> bool {
        self.labels
            .iter()
            .any(|l| matches!(l, Label::Blockchain(_)))
    }
}

/// Pure, deterministic label derivation.
pub fn classify(profile: &SystemProfile) -> Result<Classification, TypologyError> {
    profile.check()?;
    let mut labels = BTreeSet::new();
    if !profile.is_transaction_record {
        return Ok(Classification {
            name: profile.name.clone(),
            labels,
        });
    }
    labels.insert(Label::Book);
    labels.insert(match profile.book_kind {
        BookKind::Journal => Label::Journal,
        BookKind::Ledger => Label::Ledger,
    });
    if profile.shared_between_unrelated_parties {
        labels.insert(match profile.book_kind {
            BookKind::Journal => Label::SharedJournal,
            BookKind::Ledger => Label::SharedLedger,
        });
    }
    let distributed = profile.storage == Storage::Distributed;
    if distributed {
        labels.insert(Label::DistributedBook);
    }
    let dbt = distributed && profile.sync_mechanism == SyncMechanism::TrustlessVerification;
    if dbt {
        labels.insert(Label::Dbt);
        labels.insert(match profile.book_kind {
            BookKind::Journal => Label::Djt,
            BookKind::Ledger => Label::Dlt,
        });
    }
    if profile.block_structured {
        let variant = match (profile.read_access, profile.write_access) {
            (ReadAccess::Open, WriteAccess::Permissionless) => BlockchainVariant::OpenPermissionless,
            (ReadAccess::Open, _) => BlockchainVariant::OpenPermissioned,
            (ReadAccess::Closed, WriteAccess::Consortium) => BlockchainVariant::ClosedConsortium,
            (ReadAccess::Closed, _) => BlockchainVariant::ClosedEnterprise,
        };
        labels.insert(Label::Blockchain(variant));
    }
    let teb = profile.shared_between_unrelated_parties && profile.has_three_signature_flow;
    if teb {
        labels.insert(Label::Teb);
        if profile.has_accounting_layer {
            labels.insert(Label::Tea);
        }
    }
    Ok(Classification {
        name: profile.name.clone(),
        labels,
    })
}

// --- TEA criteria scorecard --------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub criterion: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeaVerdict {
    NotTea,
    Tea,
    /// All operational criteria plus both near-essential features.
    TeaHardened,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scorecard {
    pub name: String,
    pub operational: Vec<CriterionResult>,
    pub near_essential: Vec<CriterionResult>,
    pub addons: Vec<CriterionResult>,
    pub further: Vec<CriterionResult>,
    pub verdict: TeaVerdict,
    /// The bookkeeping/accounting boundary admits more than one reading;
    /// this scorecard treats an accounting layer as either classification
    /// and interpretation of records, or a subledger feeding both parties'
    /// general ledgers.
    pub note: String,
}

pub fn check_tea_criteria(profile: &SystemProfile) -> Scorecard {
    let op = |criterion: &str, pass: bool| CriterionResult {
        criterion: criterion.to_owned(),
        pass,
    };
    let operational = vec![
        op(
            "shared transaction record (single truth, WYSIWIS)",
            profile.is_transaction_record && profile.shared_between_unrelated_parties,
        ),
        op(
            "offer-acceptance-validation flow yielding triple-signed receipts",
            profile.has_three_signature_flow,
        ),
        op(
            "ledger / accounting layer (classification-and-interpretation, or subledger feeding both parties' general ledgers)",
            profile.has_accounting_layer,
        ),
    ];
    let near_essential = vec![
        op("immutability of transactions", profile.immutable_record),
        op("strong digital identity verification", profile.strong_identity),
    ];
    let addon_list: [(Addon, &str); 8] = [
        (Addon::Settlement, "network-based settlement/payment"),
        (Addon::SmartContracts, "smart contracts"),
        (Addon::RicardianContracts, "Ricardian contracts"),
        (Addon::DistributedLedger, "distributed ledger (more than one node)"),
        (Addon::StubStructure, "stub - shared entry - stub structure"),
        (Addon::GlTransactions, "general ledger for transactions"),
        (Addon::GlReporting, "general ledger for reporting"),
        (Addon::ViewingPermissions, "viewing permissions"),
    ];
    let addons = addon_list
        .iter()
        .map(|(a, name)| op(name, profile.addons.contains(a)))
        .collect();
    let further_list: [(FurtherFeature, &str); 4] = [
        (FurtherFeature::Scalability, "scalability and high throughput"),
        (FurtherFeature::Compliance, "compliance with financial regulations"),
        (FurtherFeature::Affordability, "affordability"),
        (FurtherFeature::UserFriendliness, "user-friendliness"),
    ];
    let further = further_list
        .iter()
        .map(|(f, name)| op(name, profile.further.contains(f)))
        .collect();

    let all_operational = operational.iter().all(|c| c.pass);
    let all_near = near_essential.iter().all(|c| c.pass);
    let verdict = if all_operational && all_near {
        TeaVerdict::TeaHardened
    } else if all_operational {
        TeaVerdict::Tea
    } else {
        TeaVerdict::NotTea
    };

    Scorecard {
        name: profile.name.clone(),
        operational,
        near_essential,
        addons,
        further,
        verdict,
        note: "accounting layer read as a disjunction: classification/interpretation \
               OR subledger for both parties' general ledgers"
            .to_owned(),
    }
}

// --- named exemplars -----------------------------------------------------------

/// Relation of an exemplar to the triple-entry family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Classified,
    Unrelated,
    Compatible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarRow {
    pub name: String,
    pub relation: Relation,
    pub labels: BTreeSet<Label>,
    pub note: String,
}

pub fn bitcoin_profile() -> SystemProfile {
    SystemProfile {
        name: "bitcoin".into(),
        is_transaction_record: true,
        book_kind: BookKind::Journal,
        shared_between_unrelated_parties: true,
        storage: Storage::Distributed,
        sync_mechanism: SyncMechanism::TrustlessVerification,
        block_structured: true,
        read_access: ReadAccess::Open,
        write_access: WriteAccess::Permissionless,
        has_three_signature_flow: true,
        has_accounting_layer: false,
        immutable_record: true,
        strong_identity: false,
        addons: BTreeSet::from([Addon::Settlement, Addon::DistributedLedger]),
        further: BTreeSet::new(),
    }
}

pub fn boyle_str_profile() -> SystemProfile {
    SystemProfile {
        name: "boyle-str".into(),
        is_transaction_record: true,
        book_kind: BookKind::Journal,
        shared_between_unrelated_parties: true,
        storage: Storage::SingleMachine,
        sync_mechanism: SyncMechanism::MasterDuplication,
        block_structured: false,
        read_access: ReadAccess::Closed,
        write_access: WriteAccess::OperatorOnly,
        has_three_signature_flow: true,
        has_accounting_layer: false,
        immutable_record: true,
        strong_identity: true,
        addons: BTreeSet::from([Addon::StubStructure, Addon::ViewingPermissions]),
        further: BTreeSet::new(),
    }
}

pub fn ricardo_profile() -> SystemProfile {
    SystemProfile {
        name: "ricardo".into(),
        is_transaction_record: true,
        book_kind: BookKind::Journal,
        shared_between_unrelated_parties: true,
        storage: Storage::SingleMachine,
        sync_mechanism: SyncMechanism::MasterDuplication,
        block_structured: false,
        read_access: ReadAccess::Closed,
        write_access: WriteAccess::OperatorOnly,
        has_three_signature_flow: true,
        has_accounting_layer: false,
        immutable_record: true,
        strong_identity: true,
        addons: BTreeSet::from([Addon::Settlement, Addon::RicardianContracts]),
        further: BTreeSet::new(),
    }
}

/// Profile of the engine in this repository.
pub fn self_profile() -> SystemProfile {
    SystemProfile {
        name: "tea-engine".into(),
        is_transaction_record: true,
        book_kind: BookKind::Ledger,
        shared_between_unrelated_parties: true,
        storage: Storage::Distributed,
        sync_mechanism: SyncMechanism::ChangeReplication,
        block_structured: false,
        read_access: ReadAccess::Closed,
        write_access: WriteAccess::OperatorOnly,
        has_three_signature_flow: true,
        has_accounting_layer: true,
        immutable_record: true,
        strong_identity: true,
        addons: BTreeSet::from([
            Addon::StubStructure,
            Addon::GlTransactions,
            Addon::GlReporting,
            Addon::ViewingPermissions,
        ]),
        further: BTreeSet::new(),
    }
}

/// Classify the built-in exemplars, including the two systems that share
/// the "triple-entry" name without sharing the mechanism.
pub fn classify_named_exemplars() -> Vec<ExemplarRow> {
    let mut rows = Vec::new();
    for profile in [
        bitcoin_profile(),
        boyle_str_profile(),
        ricardo_profile(),
        self_profile(),
    ] {
        let classification = classify(&profile).expect("built-in profiles are consistent");
        rows.push(ExemplarRow {
            name: profile.name.clone(),
            relation: Relation::Classified,
            labels: classification.labels,
            note: match profile.name.as_str() {
                "bitcoin" => "TEB with DJT technology; no accounting layer, so not TEA and not DLT".into(),
                "boyle-str" => "middleware-server shared journal; TEB without DBT".into(),
                "ricardo" => "payment-system shared journal; TEB without DBT".into(),
                "tea-engine" => "shared ledger with GLT/GLR accounting layer".into(),
                _ => String::new(),
            },
        });
    }
    rows.push(ExemplarRow {
        name: "momentum".into(),
        relation: Relation::Unrelated,
        labels: BTreeSet::new(),
        note: "momentum accounting records the rate of change in income; \
               almost unrelated to triple-entry accounting"
            .into(),
    });
    rows.push(ExemplarRow {
        name: "russian-triple".into(),
        relation: Relation::Unrelated,
        labels: BTreeSet::new(),
        note: "triple-book system (capital, systematic accounts, balance books); \
               unrelated to triple-entry accounting"
            .into(),
    });
    rows.push(ExemplarRow {
        name: "rea".into(),
        relation: Relation::Compatible,
        labels: BTreeSet::new(),
        note: "Resources-Events-Agents ontology; compatible with and may supplement \
               triple-entry accounting"
            .into(),
    });
    rows
}

/// The subtype lattice every classification must satisfy.
pub fn lattice_holds(c: &Classification) -> bool {
    let has = |l: &Label| c.labels.contains(l);
    let implications = [
        (has(&Label::Tea), has(&Label::Teb)),
        (has(&Label::Dlt), has(&Label::Dbt)),
        (has(&Label::Djt), has(&Label::Dbt)),
        (has(&Label::Dbt), has(&Label::DistributedBook)),
        (has(&Label::DistributedBook), has(&Label::Book)),
        (c.is_blockchain(), has(&Label::Dbt)),
        (
            has(&Label::SharedJournal) || has(&Label::SharedLedger),
            has(&Label::Book),
        ),
    ];
    implications.iter().all(|(premise, conclusion)| !premise || *conclusion)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitcoin_is_teb_with_djt_not_tea_not_dlt() {
        let c = classify(&bitcoin_profile()).unwrap();
        let expected: BTreeSet<Label> = BTreeSet::from([
            Label::Book,
            Label::Journal,
            Label::SharedJournal,
            Label::DistributedBook,
            Label::Dbt,
            Label::Djt,
            Label::Blockchain(BlockchainVariant::OpenPermissionless),
            Label::Teb,
        ]);
        assert_eq!(c.labels, expected);
        assert!(!c.has(&Label::Tea));
        assert!(!c.has(&Label::Dlt));
    }

    #[test]
    fn boyle_str_is_teb_without_dbt() {
        let c = classify(&boyle_str_profile()).unwrap();
        assert!(c.has(&Label::Teb));
        assert!(!c.has(&Label::Dbt));
        assert!(!c.has(&Label::Tea));
    }

    #[test]
    fn non_shared_single_machine_ledger_is_book_and_ledger_only() {
        let profile = SystemProfile {
            name: "desk-ledger".into(),
            is_transaction_record: true,
            book_kind: BookKind::Ledger,
            shared_between_unrelated_parties: false,
            storage: Storage::SingleMachine,
            sync_mechanism: SyncMechanism::MasterDuplication,
            block_structured: false,
            read_access: ReadAccess::Closed,
            write_access: WriteAccess::OperatorOnly,
            has_three_signature_flow: false,
            has_accounting_layer: true,
            immutable_record: false,
            strong_identity: false,
            addons: BTreeSet::new(),
            further: BTreeSet::new(),
        };
        let c = classify(&profile).unwrap();
        assert_eq!(c.labels, BTreeSet::from([Label::Book, Label::Ledger]));
    }

    #[test]
    fn inconsistent_block_structure_rejected() {
        let mut p = bitcoin_profile();
        p.storage = Storage::SingleMachine;
        assert!(matches!(
            classify(&p),
            Err(TypologyError::InconsistentProfile(_))
        ));
    }

    #[test]
    fn bad_permission_pairing_rejected() {
        let mut p = bitcoin_profile();
        p.write_access = WriteAccess::Consortium; // open + consortium
        assert!(matches!(
            classify(&p),
            Err(TypologyError::InconsistentProfile(_))
        ));
    }

    #[test]
    fn self_profile_scores_hardened_tea() {
        let profile = self_profile();
        let card = check_tea_criteria(&profile);
        assert!(card.operational.iter().all(|c| c.pass));
        assert!(card.near_essential.iter().all(|c| c.pass));
        assert_eq!(card.verdict, TeaVerdict::TeaHardened);
        assert!(classify(&profile).unwrap().has(&Label::Tea));
    }

    #[test]
    fn bitcoin_fails_the_accounting_criterion() {
        let card = check_tea_criteria(&bitcoin_profile());
        assert!(card.operational[0].pass);
        assert!(card.operational[1].pass);
        assert!(!card.operational[2].pass);
        assert_eq!(card.verdict, TeaVerdict::NotTea);
    }

    #[test]
    fn everything_false_profile_fails_everything() {
        let profile = SystemProfile {
            name: "nothing".into(),
            is_transaction_record: false,
            book_kind: BookKind::Journal,
            shared_between_unrelated_parties: false,
            storage: Storage::SingleMachine,
            sync_mechanism: SyncMechanism::MasterDuplication,
            block_structured: false,
            read_access: ReadAccess::Closed,
            write_access: WriteAccess::OperatorOnly,
            has_three_signature_flow: false,
            has_accounting_layer: false,
            immutable_record: false,
            strong_identity: false,
            addons: BTreeSet::new(),
            further: BTreeSet::new(),
        };
        let card = check_tea_criteria(&profile);
        assert!(card.operational.iter().all(|c| !c.pass));
        assert!(card.near_essential.iter().all(|c| !c.pass));
        assert!(card.addons.iter().all(|c| !c.pass));
        assert!(card.further.iter().all(|c| !c.pass));
        assert_eq!(card.verdict, TeaVerdict::NotTea);
        assert!(classify(&profile).unwrap().labels.is_empty());
    }

    #[test]
    fn exemplars_table_matches_stated_relations() {
        let rows = classify_named_exemplars();
        let find = |name: &str| rows.iter().find(|r| r.name == name).unwrap();
        assert_eq!(find("momentum").relation, Relation::Unrelated);
        assert!(find("momentum").note.contains("rate of change in income"));
        assert_eq!(find("russian-triple").relation, Relation::Unrelated);
        assert_eq!(find("rea").relation, Relation::Compatible);
        assert!(find("bitcoin").labels.contains(&Label::Teb));
        assert!(!find("bitcoin").labels.contains(&Label::Tea));
    }

    #[test]
    fn scorecard_and_classifier_agree_on_tea() {
        for profile in [
            bitcoin_profile(),
            boyle_str_profile(),
            ricardo_profile(),
            self_profile(),
        ] {
            let by_labels = classify(&profile).unwrap().has(&Label::Tea);
            let by_card = check_tea_criteria(&profile).verdict != TeaVerdict::NotTea;
            assert_eq!(by_labels, by_card, "{}", profile.name);
        }
    }

    #[test]
    fn profile_toml_round_trip() {
        let text = toml::to_string(&bitcoin_profile()).unwrap();
        let parsed = SystemProfile::from_toml(&text).unwrap();
        assert_eq!(parsed, bitcoin_profile());
    }
}
