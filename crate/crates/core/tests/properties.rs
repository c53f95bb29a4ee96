//! Randomized invariant checks over the core modules.

use std::collections::BTreeSet;

use proptest::prelude::*;
use tea_core::identity::{generate_identity, verify, Identity, Registry};
use tea_core::journal::{SharedJournal, Visibility};
use tea_core::ledger::{
    demo_chart, demo_mapping, export_pta, parse_pta_balances, project_views, trial_balance_by_name,
    BalanceScope, GeneralLedger, PostingLine, Side, UnitScales,
};
use tea_core::protocol::{
    accept, canonical_decode, canonical_encode, offer, validate, verify_receipt, EntryCore,
    EntryState, SharedEntry, GENESIS_HASH,
};
use tea_core::typology::{
    check_tea_criteria, classify, lattice_holds, Addon, BookKind, FurtherFeature, Label,
    ReadAccess, Storage, SyncMechanism, SystemProfile, TeaVerdict, WriteAccess,
};

fn alias_strategy() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9]{0,7}"
}

fn core_strategy() -> impl Strategy<Value = EntryCore> {
    (
        any::<[u8; 16]>(),
        alias_strategy(),
        alias_strategy(),
        0u64..1_000_000_000_000,
        "[A-Z]{3}",
        "[ -~]{0,64}",
        0i64..4_102_444_800_000,
    )
        .prop_filter_map("payer and payee must differ", |(id, a, b, amount, unit, memo, at)| {
            if a == b {
                return None;
            }
            Some(EntryCore {
                entry_id: id,
                payer_alias: a,
                payee_alias: b,
                amount,
                unit,
                memo,
                created_at: at,
            })
        })
}

fn identity_for(alias: &str, tag: u8) -> Identity {
    let mut seed = [tag; 32];
    for (i, b) in alias.bytes().enumerate().take(16) {
        seed[i] ^= b;
    }
    generate_identity(alias, &seed).unwrap()
}

proptest! {
    // ed25519 keygen + signing dominate; keep the case count modest
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signature_verifies_and_any_flip_breaks_it(
        seed in any::<[u8; 32]>(),
        msg in proptest::collection::vec(any::<u8>(), 1..256),
        flip_at in any::<proptest::sample::Index>(),
        flip_bit in 0u8..8,
    ) {
        let id = generate_identity("signer", &seed).unwrap();
        let sig = id.sign(&msg, 0);
        prop_assert!(verify(&id.public_key(), &msg, &sig).unwrap());

        let mut bad = msg.clone();
        let i = flip_at.index(bad.len());
        bad[i] ^= 1 << flip_bit;
        prop_assert!(!verify(&id.public_key(), &bad, &sig).unwrap());
    }

    #[test]
    fn canonical_encoding_round_trips(core in core_strategy()) {
        let bytes = canonical_encode(&core).unwrap();
        let back = canonical_decode(&bytes).unwrap();
        prop_assert_eq!(back, core);
    }

    #[test]
    fn canonical_encoding_is_injective(a in core_strategy(), b in core_strategy()) {
        prop_assume!(a != b);
        prop_assert_ne!(canonical_encode(&a).unwrap(), canonical_encode(&b).unwrap());
    }

    #[test]
    fn full_flow_yields_verifying_receipt_for_any_entry(core in core_strategy()) {
        let payer = identity_for(&core.payer_alias, 1);
        let payee = identity_for(&core.payee_alias, 2);
        let validator = identity_for("validator", 3);
        let mut registry = Registry::new();
        registry.register(&payer).unwrap();
        registry.register(&payee).unwrap();
        registry.register(&validator).unwrap();

        let entry = SharedEntry::draft(core).unwrap();
        let entry = offer(entry, &payer, 10).unwrap();
        let entry = accept(entry, &payee, &registry, 20).unwrap();
        let receipt = validate(entry, &validator, &registry, GENESIS_HASH, 0, 30).unwrap();
        prop_assert_eq!(receipt.entry.state, EntryState::Validated);
        let report = verify_receipt(&receipt, &registry).unwrap();
        prop_assert!(report.pass());
    }

    #[test]
    fn out_of_order_signing_always_errors(core in core_strategy()) {
        let payer = identity_for(&core.payer_alias, 1);
        let payee = identity_for(&core.payee_alias, 2);
        let validator = identity_for("validator", 3);
        let mut registry = Registry::new();
        registry.register(&payer).unwrap();
        registry.register(&payee).unwrap();
        registry.register(&validator).unwrap();

        let draft = SharedEntry::draft(core).unwrap();
        // accept before offer
        prop_assert!(accept(draft.clone(), &payee, &registry, 0).is_err());
        // validate before accept
        prop_assert!(validate(draft.clone(), &validator, &registry, GENESIS_HASH, 0, 0).is_err());
        let offered = offer(draft, &payer, 0).unwrap();
        prop_assert!(validate(offered.clone(), &validator, &registry, GENESIS_HASH, 0, 0).is_err());
        // double offer
        prop_assert!(offer(offered, &payer, 0).is_err());
    }
}

fn receipts_from_cores(
    cores: Vec<EntryCore>,
) -> (SharedJournal, Registry, Identity, Identity, Identity) {
    let payer = identity_for("alice", 1);
    let payee = identity_for("bob", 2);
    let validator = identity_for("val", 3);
    let mut registry = Registry::new();
    registry.register(&payer).unwrap();
    registry.register(&payee).unwrap();
    registry.register(&validator).unwrap();
    let mut journal = SharedJournal::new("val");
    for (i, mut core) in cores.into_iter().enumerate() {
        core.payer_alias = "alice".into();
        core.payee_alias = "bob".into();
        core.unit = "USD".into(); // the demo mapping only covers USD
        core.entry_id[0] = i as u8; // distinct ids
        core.entry_id[1] = (i >> 8) as u8;
        let entry = SharedEntry::draft(core).unwrap();
        let entry = offer(entry, &payer, 0).unwrap();
        let entry = accept(entry, &payee, &registry, 1).unwrap();
        let receipt =
            validate(entry, &validator, &registry, journal.head_hash(), journal.len(), 2).unwrap();
        journal.append(receipt, &registry, Some(Visibility::Public)).unwrap();
    }
    (journal, registry, payer, payee, validator)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn journal_chain_verifies_and_file_round_trips(
        cores in proptest::collection::vec(core_strategy(), 0..12),
    ) {
        let (journal, registry, ..) = receipts_from_cores(cores);
        prop_assert!(journal.verify_chain(&registry).passed());
        let bytes = journal.to_file_bytes().unwrap();
        let back = SharedJournal::from_file_bytes(&bytes, &registry).unwrap();
        prop_assert_eq!(&back, &journal);
        prop_assert_eq!(back.to_file_bytes().unwrap(), bytes);
    }

    #[test]
    fn projected_views_always_balance(cores in proptest::collection::vec(core_strategy(), 1..10)) {
        let (journal, ..) = receipts_from_cores(cores);
        let chart = demo_chart();
        let mapping = demo_mapping();
        let mut payer_gl = GeneralLedger::new("alice", chart.clone());
        let mut payee_gl = GeneralLedger::new("bob", chart);
        for receipt in journal.receipts() {
            let views = project_views(receipt, &payer_gl.chart, &payee_gl.chart, &mapping).unwrap();
            let balance = |lines: &[PostingLine]| -> i128 {
                lines
                    .iter()
                    .map(|l| match l.side {
                        Side::Debit => l.amount as i128,
                        Side::Credit => -(l.amount as i128),
                    })
                    .sum()
            };
            prop_assert_eq!(balance(&views.payer_lines), 0);
            prop_assert_eq!(balance(&views.payee_lines), 0);
            let id = receipt.entry.core.entry_id;
            payer_gl.post_to_glt(&journal, &id, views.payer_lines).unwrap();
            payee_gl.post_to_glt(&journal, &id, views.payee_lines).unwrap();
        }
        for gl in [&payer_gl, &payee_gl] {
            let total: i64 = gl.trial_balance(BalanceScope::GltAndGlr).values().sum();
            prop_assert_eq!(total, 0);
        }
    }

    #[test]
    fn pta_export_reparses_to_the_trial_balance(
        cores in proptest::collection::vec(core_strategy(), 1..8),
    ) {
        let (journal, ..) = receipts_from_cores(cores);
        let mapping = demo_mapping();
        let mut gl = GeneralLedger::new("bob", demo_chart());
        for receipt in journal.receipts() {
            let views = project_views(receipt, &gl.chart, &gl.chart, &mapping).unwrap();
            gl.post_to_glt(&journal, &receipt.entry.core.entry_id, views.payee_lines).unwrap();
        }
        let scales = UnitScales::default();
        let text = export_pta(&gl, &journal, &scales).unwrap();
        let parsed = parse_pta_balances(&text, &scales).unwrap();
        let expected: std::collections::BTreeMap<String, i64> =
            trial_balance_by_name(&gl, BalanceScope::GltAndGlr)
                .into_iter()
                .filter(|(_, v)| *v != 0)
                .collect();
        prop_assert_eq!(parsed, expected);
    }
}

fn profile_strategy() -> impl Strategy<Value = SystemProfile> {
    (
        any::<bool>(),
        prop_oneof![Just(BookKind::Journal), Just(BookKind::Ledger)],
        any::<bool>(),
        prop_oneof![
            Just(Storage::SingleMachine),
            Just(Storage::Parallel),
            Just(Storage::Distributed)
        ],
        prop_oneof![
            Just(SyncMechanism::MasterDuplication),
            Just(SyncMechanism::ChangeReplication),
            Just(SyncMechanism::TrustlessVerification)
        ],
        any::<bool>(),
        0usize..4,
        (any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>()),
        proptest::collection::btree_set(
            prop_oneof![
                Just(Addon::Settlement),
                Just(Addon::SmartContracts),
                Just(Addon::StubStructure),
                Just(Addon::ViewingPermissions)
            ],
            0..4,
        ),
        proptest::collection::btree_set(
            prop_oneof![Just(FurtherFeature::Scalability), Just(FurtherFeature::Compliance)],
            0..2,
        ),
    )
        .prop_map(
            |(
                is_record,
                book_kind,
                shared,
                storage,
                sync,
                block,
                perm_idx,
                (three_sig, accounting, immutable, strong_id),
                addons,
                further,
            )| {
                // repair toward a consistent profile
                let (storage, sync) = if block {
                    (Storage::Distributed, SyncMechanism::TrustlessVerification)
                } else {
                    (storage, sync)
                };
                let book_kind = if accounting { BookKind::Ledger } else { book_kind };
                let (read, write) = match perm_idx {
                    0 => (ReadAccess::Open, WriteAccess::Permissionless),
                    1 => (ReadAccess::Open, WriteAccess::Permissioned),
                    2 => (ReadAccess::Closed, WriteAccess::Consortium),
                    _ => (ReadAccess::Closed, WriteAccess::OperatorOnly),
                };
                SystemProfile {
                    name: "random".into(),
                    is_transaction_record: is_record,
                    book_kind,
                    shared_between_unrelated_parties: shared,
                    storage,
                    sync_mechanism: sync,
                    block_structured: block,
                    read_access: read,
                    write_access: write,
                    has_three_signature_flow: three_sig,
                    has_accounting_layer: accounting,
                    immutable_record: immutable,
                    strong_identity: strong_id,
                    addons,
                    further,
                }
            },
        )
}

proptest! {
    #[test]
    fn classification_lattice_holds_for_all_valid_profiles(profile in profile_strategy()) {
        let c = classify(&profile).unwrap();
        prop_assert!(lattice_holds(&c));
        // scorecard and label derivation agree on TEA membership once the
        // shared-record precondition holds
        let card = check_tea_criteria(&profile);
        let labelled_tea = c.labels.contains(&Label::Tea);
        let scored_tea = card.verdict != TeaVerdict::NotTea;
        prop_assert_eq!(labelled_tea, scored_tea);
        // deterministic
        prop_assert_eq!(classify(&profile).unwrap(), c);
    }

    #[test]
    fn empty_labelset_only_for_non_records(profile in profile_strategy()) {
        let c = classify(&profile).unwrap();
        prop_assert_eq!(c.labels.is_empty(), !profile.is_transaction_record);
        if profile.is_transaction_record {
            let base: BTreeSet<Label> = [Label::Book].into_iter().collect();
            prop_assert!(c.labels.is_superset(&base));
        }
    }
}
