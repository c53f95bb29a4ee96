//! The accounting layer: projecting shared entries into both parties'
//! double-entry views, per-party general ledgers split into GLT (objective
//! transaction postings) and GLR (subjective reporting adjustments), trial
//! balances, redundancy arithmetic, and plain-text export.
//!
//! This module reads journals through `&SharedJournal` only; it has no way
//! to mutate one.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::journal::SharedJournal;
use crate::protocol::ValidatedReceipt;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("no account mapping for unit {unit:?} memo {memo:?}")]
    UnmappedAccount { unit: String, memo: String },
    #[error("account code {0:?} not in chart")]
    UnknownAccount(String),
    #[error("entry {0} already posted")]
    AlreadyPosted(String),
    #[error("posting lines do not balance: debits {debits} != credits {credits}")]
    Unbalanced { debits: u64, credits: u64 },
    #[error("entry {0} is not visible to this ledger's owner")]
    NotVisible(String),
    #[error("posting line amount must be positive")]
    ZeroAmountLine,
    #[error("io failure: {0}")]
    IoFailure(String),
    #[error("plain-text parse error at line {line}: {reason}")]
    PtaParse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountKind {
    Asset,
    Liability,
    Equity,
    Revenue,
    Expense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Debit,
    Credit,
}

impl AccountKind {
    /// Asset/Expense accounts carry debit normal balances; the rest credit.
    pub fn normal_side(self) -> Side {
        match self {
            AccountKind::Asset | AccountKind::Expense => Side::Debit,
            AccountKind::Liability | AccountKind::Equity | AccountKind::Revenue => Side::Credit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub code: String,
    pub name: String,
    pub kind: AccountKind,
}

/// A chart of accounts, keyed by code.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chart {
    accounts: BTreeMap<String, Account>,
}

impl Chart {
    pub fn new(accounts: impl IntoIterator<Item = Account>) -> Self {
        Chart {
            accounts: accounts
                .into_iter()
                .map(|a| (a.code.clone(), a))
                .collect(),
        }
    }

    pub fn get(&self, code: &str) -> Option<&Account> {
        self.accounts.get(code)
    }

    pub fn accounts(&self) -> impl Iterator<Item = &Account> {
        self.accounts.values()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostingLine {
    pub account_code: String,
    pub side: Side,
    /// Strictly positive, integer minor units.
    pub amount: u64,
    /// Source receipt id (hex) for GLT lines, adjustment id for GLR lines.
    pub entry_id: String,
}

/// Account codes a mapping rule assigns to the two sides of an entry.
///
/// Convention follows the classic sale: the payer is the buyer
/// (Dr Purchases / Cr Accounts Payable), the payee the seller
/// (Dr Accounts Receivable / Cr Revenue).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryAccounts {
    pub payer_debit: String,
    pub payer_credit: String,
    pub payee_debit: String,
    pub payee_credit: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingRule {
    pub unit: String,
    /// Optional memo-class discriminator; a rule applies when the entry's
    /// memo starts with this prefix. Rules are tried in order.
    #[serde(default)]
    pub memo_prefix: Option<String>,
    pub accounts: EntryAccounts,
}

/// Explicit configuration mapping an entry's unit/memo class onto account
/// codes — the "mechanical application of rules" made concrete.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleMapping {
    pub rules: Vec<MappingRule>,
}

impl RoleMapping {
    pub fn lookup(&self, unit: &str, memo: &str) -> Option<&EntryAccounts> {
        self.rules
            .iter()
            .find(|r| {
                r.unit == unit
                    && r.memo_prefix
                        .as_deref()
                        .map(|p| memo.starts_with(p))
                        .unwrap_or(true)
            })
            .map(|r| &r.accounts)
    }
}

/// The payer's and payee's mirrored double-entry lines for one shared entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewPair {
    pub payer_lines: Vec<PostingLine>,
    pub payee_lines: Vec<PostingLine>,
}

fn check_balanced(lines: &[PostingLine]) -> Result<(), LedgerError> {
    let mut debits = 0u64;
    let mut credits = 0u64;
    for line in lines {
        if line.amount == 0 {
            return Err(LedgerError::ZeroAmountLine);
        }
        match line.side {
            Side::Debit => debits += line.amount,
            Side::Credit => credits += line.amount,
        }
    }
    if debits != credits {
        return Err(LedgerError::Unbalanced { debits, credits });
    }
    Ok(())
}

/// Project one validated receipt into both parties' double-entry views.
///
/// A zero-amount entry produces no lines at all: the receipt stays in the
/// journal, the ledgers skip it.
pub fn project_views(
    receipt: &ValidatedReceipt,
    payer_chart: &Chart,
    payee_chart: &Chart,
    mapping: &RoleMapping,
) -> Result<ViewPair, LedgerError> {
    let core = &receipt.entry.core;
    if core.amount == 0 {
        return Ok(ViewPair {
            payer_lines: vec![],
            payee_lines: vec![],
        });
    }
    let accounts = mapping
        .lookup(&core.unit, &core.memo)
        .ok_or_else(|| LedgerError::UnmappedAccount {
            unit: core.unit.clone(),
            memo: core.memo.clone(),
        })?;
    for (chart, code) in [
        (payer_chart, &accounts.payer_debit),
        (payer_chart, &accounts.payer_credit),
        (payee_chart, &accounts.payee_debit),
        (payee_chart, &accounts.payee_credit),
    ] {
        if chart.get(code).is_none() {
            return Err(LedgerError::UnknownAccount(code.clone()));
        }
    }
    let id = hex::encode(core.entry_id);
    let line = |code: &str, side: Side| PostingLine {
        account_code: code.to_owned(),
        side,
        amount: core.amount,
        entry_id: id.clone(),
    };
    Ok(ViewPair {
        payer_lines: vec![
            line(&accounts.payer_debit, Side::Debit),
            line(&accounts.payer_credit, Side::Credit),
        ],
        payee_lines: vec![
            line(&accounts.payee_debit, Side::Debit),
            line(&accounts.payee_credit, Side::Credit),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjustment {
    pub adjustment_id: String,
    pub reason: String,
    /// Caller-supplied timestamp, ms UTC, used for plain-text export.
    pub at: i64,
    pub lines: Vec<PostingLine>,
}

/// One party's general ledger: chart, objective GLT postings traced to
/// receipts, and subjective GLR adjustments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralLedger {
    pub owner_alias: String,
    pub chart: Chart,
    glt: Vec<PostingLine>,
    glr: Vec<Adjustment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceScope {
    Glt,
    GltAndGlr,
}

impl GeneralLedger {
    pub fn new(owner_alias: &str, chart: Chart) -> Self {
        GeneralLedger {
            owner_alias: owner_alias.to_owned(),
            chart,
            glt: Vec::new(),
            glr: Vec::new(),
        }
    }

    pub fn glt_lines(&self) -> &[PostingLine] {
        &self.glt
    }

    pub fn adjustments(&self) -> &[Adjustment] {
        &self.glr
    }

    pub fn has_posted(&self, entry_id_hex: &str) -> bool {
        self.glt.iter().any(|l| l.entry_id == entry_id_hex)
    }

    /// Post one entry's balanced lines into the GLT. Idempotence guard:
    /// re-posting the same entry id errors.
    pub fn post_to_glt(
        &mut self,
        journal: &SharedJournal,
        entry_id: &[u8; 16],
        lines: Vec<PostingLine>,
    ) -> Result<(), LedgerError> {
        let id_hex = hex::encode(entry_id);
        if !journal.can_view(&self.owner_alias, entry_id) {
            return Err(LedgerError::NotVisible(id_hex));
        }
        if self.has_posted(&id_hex) {
            return Err(LedgerError::AlreadyPosted(id_hex));
        }
        check_balanced(&lines)?;
        for line in &lines {
            if self.chart.get(&line.account_code).is_none() {
                return Err(LedgerError::UnknownAccount(line.account_code.clone()));
            }
            if line.entry_id != id_hex {
                return Err(LedgerError::NotVisible(line.entry_id.clone()));
            }
        }
        self.glt.extend(lines);
        Ok(())
    }

    /// Record a subjective adjustment in the GLR. The GLT is untouched.
    /// An empty line list is an accepted no-op.
    pub fn adjust_glr(
        &mut self,
        mut lines: Vec<PostingLine>,
        reason: &str,
        at: i64,
    ) -> Result<(), LedgerError> {
        check_balanced(&lines)?;
        for line in &lines {
            if self.chart.get(&line.account_code).is_none() {
                return Err(LedgerError::UnknownAccount(line.account_code.clone()));
            }
        }
        let adjustment_id = format!("adj-{}", self.glr.len());
        for line in &mut lines {
            line.entry_id = adjustment_id.clone();
        }
        self.glr.push(Adjustment {
            adjustment_id,
            reason: reason.to_owned(),
            at,
            lines,
        });
        Ok(())
    }

    /// Signed balance per account (debits minus credits). Chart accounts
    /// with no postings report zero. Total always sums to zero exactly.
    pub fn trial_balance(&self, scope: BalanceScope) -> BTreeMap<String, i64> {
        let mut balances: BTreeMap<String, i64> =
            self.chart.accounts().map(|a| (a.code.clone(), 0)).collect();
        let glr_lines = self.glr.iter().flat_map(|a| a.lines.iter());
        let lines: Vec<&PostingLine> = match scope {
            BalanceScope::Glt => self.glt.iter().collect(),
            BalanceScope::GltAndGlr => self.glt.iter().chain(glr_lines).collect(),
        };
        for line in lines {
            let delta = match line.side {
                Side::Debit => line.amount as i64,
                Side::Credit => -(line.amount as i64),
            };
            *balances.entry(line.account_code.clone()).or_insert(0) += delta;
        }
        balances
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedundancyMode {
    Conventional,
    ConventionalWithBank,
    TripleEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub mode: RedundancyMode,
    pub transactions: u64,
    pub record_count: u64,
    pub signature_count: u64,
}

/// Quadruple entry, octuple entry, or one shared record with three
/// signatures per transaction.
pub fn count_redundancy(n_transactions: u64, mode: RedundancyMode) -> RedundancyReport {
    let (record_count, signature_count) = match mode {
        RedundancyMode::Conventional => (4 * n_transactions, 0),
        RedundancyMode::ConventionalWithBank => (8 * n_transactions, 0),
        RedundancyMode::TripleEntry => (n_transactions, 3 * n_transactions),
    };
    RedundancyReport {
        mode,
        transactions: n_transactions,
        record_count,
        signature_count,
    }
}

// --- plain-text export -----------------------------------------------------

/// Per-unit decimal scale; anything absent prints with 2 decimals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitScales {
    pub scales: BTreeMap<String, u32>,
}

impl UnitScales {
    pub fn scale(&self, unit: &str) -> u32 {
        self.scales.get(unit).copied().unwrap_or(2)
    }
}

fn format_minor(amount_signed: i64, scale: u32) -> String {
    let div = 10i64.pow(scale);
    let sign = if amount_signed < 0 { "-" } else { "" };
    let abs = amount_signed.unsigned_abs();
    let whole = abs / div as u64;
    if scale == 0 {
        format!("{sign}{whole}")
    } else {
        let frac = abs % div as u64;
        format!("{sign}{whole}.{frac:0width$}", width = scale as usize)
    }
}

fn parse_minor(text: &str, scale: u32) -> Option<i64> {
    let (sign, rest) = match text.strip_prefix('-') {
        Some(r) => (-1i64, r),
        None => (1i64, text),
    };
    let (whole, frac) = match rest.split_once('.') {
        Some((w, f)) => (w, f),
        None => (rest, ""),
    };
    if frac.len() != scale as usize {
        return None;
    }
    let whole: i64 = whole.parse().ok()?;
    let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some(sign * (whole * 10i64.pow(scale) + frac))
}

// Days-to-civil-date conversion (proleptic Gregorian).
fn civil_from_days(days: i64) -> (i64, u32, u32) {
    let z = days + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}

fn format_date(at_ms: i64) -> String {
    let (y, m, d) = civil_from_days(at_ms.div_euclid(86_400_000));
    format!("{y:04}-{m:02}-{d:02}")
}

struct PtaBlock {
    at: i64,
    memo: String,
    // (account name, signed minor amount, unit)
    lines: Vec<(String, i64, String)>,
}

/// One transaction per text block: a date line with the memo, then
/// two-space-indented `account  amount unit` lines. Debits print positive,
/// credits negative.
pub fn export_pta(
    gl: &GeneralLedger,
    journal: &SharedJournal,
    scales: &UnitScales,
) -> Result<String, LedgerError> {
    let mut blocks: Vec<PtaBlock> = Vec::new();

    let mut glt_by_entry: BTreeMap<&str, Vec<&PostingLine>> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    for line in gl.glt_lines() {
        if !glt_by_entry.contains_key(line.entry_id.as_str()) {
            order.push(&line.entry_id);
        }
        glt_by_entry.entry(&line.entry_id).or_default().push(line);
    }
    for id_hex in order {
        let id_bytes: [u8; 16] = hex::decode(id_hex)
            .ok()
            .and_then(|v| v.as_slice().try_into().ok())
            .ok_or_else(|| LedgerError::IoFailure(format!("bad entry id {id_hex}")))?;
        let receipt = journal
            .get(&id_bytes)
            .ok_or_else(|| LedgerError::NotVisible(id_hex.to_owned()))?;
        let core = &receipt.entry.core;
        let lines = glt_by_entry[id_hex]
            .iter()
            .map(|l| to_pta_line(gl, l, &core.unit))
            .collect::<Result<Vec<_>, _>>()?;
        blocks.push(PtaBlock {
            at: core.created_at,
            memo: core.memo.clone(),
            lines,
        });
    }
    for adj in gl.adjustments() {
        let lines = adj
            .lines
            .iter()
            .map(|l| to_pta_line(gl, l, ""))
            .collect::<Result<Vec<_>, _>>()?;
        blocks.push(PtaBlock {
            at: adj.at,
            memo: adj.reason.clone(),
            lines,
        });
    }

    let mut out = String::new();
    for block in &blocks {
        out.push_str(&format_date(block.at));
        out.push(' ');
        out.push_str(&block.memo);
        out.push('\n');
        for (name, signed, unit) in &block.lines {
            out.push_str("  ");
            out.push_str(name);
            out.push_str("  ");
            out.push_str(&format_minor(*signed, scales.scale(unit)));
            out.push(' ');
            out.push_str(unit);
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

fn to_pta_line(
    gl: &GeneralLedger,
    line: &PostingLine,
    unit: &str,
) -> Result<(String, i64, String), LedgerError> {
    let account = gl
        .chart
        .get(&line.account_code)
        .ok_or_else(|| LedgerError::UnknownAccount(line.account_code.clone()))?;
    let signed = match line.side {
        Side::Debit => line.amount as i64,
        Side::Credit => -(line.amount as i64),
    };
    let unit = if unit.is_empty() { "UNIT" } else { unit };
    Ok((account.name.clone(), signed, unit.to_owned()))
}

pub fn export_pta_to_file(
    gl: &GeneralLedger,
    journal: &SharedJournal,
    scales: &UnitScales,
    path: &Path,
) -> Result<(), LedgerError> {
    let text = export_pta(gl, journal, scales)?;
    let tmp = path.with_extension("tmp");
    (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })()
    .map_err(|e| LedgerError::IoFailure(e.to_string()))
}

/// Re-parse exported plain text into a balance map by account name
/// (debit-positive signed minor units). The independent half of the
/// export round-trip check.
pub fn parse_pta_balances(
    text: &str,
    scales: &UnitScales,
) -> Result<BTreeMap<String, i64>, LedgerError> {
    let mut balances: BTreeMap<String, i64> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        if !line.starts_with("  ") {
            // date + memo line
            let date_part = line.split(' ').next().unwrap_or("");
            if date_part.len() != 10 || date_part.chars().filter(|c| *c == '-').count() < 2 {
                return Err(LedgerError::PtaParse {
                    line: lineno,
                    reason: "expected a YYYY-MM-DD date line".into(),
                });
            }
            continue;
        }
        let body = &line[2..];
        let (rest, unit) = body.rsplit_once(' ').ok_or(LedgerError::PtaParse {
            line: lineno,
            reason: "missing unit".into(),
        })?;
        let (name, amount_text) = rest.trim_end().rsplit_once("  ").ok_or(LedgerError::PtaParse {
            line: lineno,
            reason: "missing amount separator".into(),
        })?;
        let signed =
            parse_minor(amount_text.trim(), scales.scale(unit)).ok_or(LedgerError::PtaParse {
                line: lineno,
                reason: format!("bad amount {amount_text:?}"),
            })?;
        *balances.entry(name.trim_end().to_owned()).or_insert(0) += signed;
    }
    Ok(balances)
}

/// The GLT+GLR trial balance keyed by account name instead of code, for
/// comparison against [`parse_pta_balances`].
pub fn trial_balance_by_name(gl: &GeneralLedger, scope: BalanceScope) -> BTreeMap<String, i64> {
    let mut out: BTreeMap<String, i64> = BTreeMap::new();
    for (code, balance) in gl.trial_balance(scope) {
        if balance != 0 {
            let name = gl.chart.get(&code).map(|a| a.name.clone()).unwrap_or(code);
            *out.entry(name).or_insert(0) += balance;
        }
    }
    out.retain(|_, v| *v != 0);
    out
}

/// A standard demo chart covering both sides of a sale.
pub fn demo_chart() -> Chart {
    Chart::new([
        Account {
            code: "1200".into(),
            name: "Accounts Receivable".into(),
            kind: AccountKind::Asset,
        },
        Account {
            code: "4000".into(),
            name: "Revenue".into(),
            kind: AccountKind::Revenue,
        },
        Account {
            code: "5000".into(),
            name: "Purchases".into(),
            kind: AccountKind::Expense,
        },
        Account {
            code: "2000".into(),
            name: "Accounts Payable".into(),
            kind: AccountKind::Liability,
        },
        Account {
            code: "6000".into(),
            name: "Depreciation Expense".into(),
            kind: AccountKind::Expense,
        },
        Account {
            code: "1700".into(),
            name: "Accumulated Depreciation".into(),
            kind: AccountKind::Asset,
        },
    ])
}

/// Mapping matching [`demo_chart`]: buyer books a purchase against payables,
/// seller a receivable against revenue.
pub fn demo_mapping() -> RoleMapping {
    RoleMapping {
        rules: vec![MappingRule {
            unit: "USD".into(),
            memo_prefix: None,
            accounts: EntryAccounts {
                payer_debit: "5000".into(),
                payer_credit: "2000".into(),
                payee_debit: "1200".into(),
                payee_credit: "4000".into(),
            },
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::{generate_identity, Identity, Registry};
    use crate::protocol::{accept, offer, validate, EntryCore, SharedEntry, ValidatedReceipt};

    fn fixture() -> (Identity, Identity, Identity, Registry) {
        let alice = generate_identity("alice", &[1u8; 32]).unwrap();
        let bob = generate_identity("bob", &[2u8; 32]).unwrap();
        let val = generate_identity("val", &[3u8; 32]).unwrap();
        let mut reg = Registry::new();
        for id in [&alice, &bob, &val] {
            reg.register(id).unwrap();
        }
        (alice, bob, val, reg)
    }

    fn add_entry(
        journal: &mut SharedJournal,
        parties: &(Identity, Identity, Identity, Registry),
        n: u64,
        amount: u64,
    ) -> ValidatedReceipt {
        let (alice, bob, val, reg) = parties;
        let mut id = [0u8; 16];
        id[8..].copy_from_slice(&n.to_be_bytes());
        let core = EntryCore {
            entry_id: id,
            payer_alias: "alice".into(),
            payee_alias: "bob".into(),
            amount,
            unit: "USD".into(),
            memo: format!("sale {n}"),
            created_at: 1_600_000_000_000,
        };
        let entry = SharedEntry::draft(core).unwrap();
        let entry = offer(entry, alice, 1).unwrap();
        let entry = accept(entry, bob, reg, 2).unwrap();
        let receipt = validate(entry, val, reg, journal.head_hash(), journal.len(), 3).unwrap();
        journal.append(receipt.clone(), reg, None).unwrap();
        receipt
    }

    #[test]
    fn sale_projects_into_mirrored_views() {
        let parties = fixture();
        let mut journal = SharedJournal::new("val");
        let receipt = add_entry(&mut journal, &parties, 0, 100);
        let chart = demo_chart();
        let pair = project_views(&receipt, &chart, &chart, &demo_mapping()).unwrap();
        // buyer: Dr Purchases 100 / Cr Accounts Payable 100
        assert_eq!(pair.payer_lines[0].account_code, "5000");
        assert_eq!(pair.payer_lines[0].side, Side::Debit);
        assert_eq!(pair.payer_lines[1].account_code, "2000");
        assert_eq!(pair.payer_lines[1].side, Side::Credit);
        // seller: Dr Accounts Receivable 100 / Cr Revenue 100
        assert_eq!(pair.payee_lines[0].account_code, "1200");
        assert_eq!(pair.payee_lines[0].side, Side::Debit);
        assert_eq!(pair.payee_lines[1].account_code, "4000");
        assert_eq!(pair.payee_lines[1].side, Side::Credit);
        assert!(pair.payer_lines.iter().all(|l| l.amount == 100));
        assert!(pair.payee_lines.iter().all(|l| l.amount == 100));
    }

    #[test]
    fn zero_amount_entry_produces_no_lines() {
        let parties = fixture();
        let mut journal = SharedJournal::new("val");
        let receipt = add_entry(&mut journal, &parties, 0, 0);
        let chart = demo_chart();
        let pair = project_views(&receipt, &chart, &chart, &demo_mapping()).unwrap();
        assert!(pair.payer_lines.is_empty());
        assert!(pair.payee_lines.is_empty());
    }

    #[test]
    fn unmapped_unit_errors() {
        let parties = fixture();
        let mut journal = SharedJournal::new("val");
        let mut receipt = add_entry(&mut journal, &parties, 0, 100);
        receipt.entry.core.unit = "EUR".into();
        let chart = demo_chart();
        assert!(matches!(
            project_views(&receipt, &chart, &chart, &demo_mapping()),
            Err(LedgerError::UnmappedAccount { .. })
        ));
    }

    #[test]
    fn reposting_same_entry_errors() {
        let parties = fixture();
        let mut journal = SharedJournal::new("val");
        let receipt = add_entry(&mut journal, &parties, 0, 100);
        let chart = demo_chart();
        let pair = project_views(&receipt, &chart, &chart, &demo_mapping()).unwrap();
        let mut gl = GeneralLedger::new("alice", chart);
        gl.post_to_glt(&journal, &receipt.entry.core.entry_id, pair.payer_lines.clone())
            .unwrap();
        assert!(matches!(
            gl.post_to_glt(&journal, &receipt.entry.core.entry_id, pair.payer_lines),
            Err(LedgerError::AlreadyPosted(_))
        ));
    }

    #[test]
    fn unbalanced_lines_rejected() {
        let parties = fixture();
        let mut journal = SharedJournal::new("val");
        let receipt = add_entry(&mut journal, &parties, 0, 100);
        let id_hex = hex::encode(receipt.entry.core.entry_id);
        let mut gl = GeneralLedger::new("alice", demo_chart());
        let lines = vec![
            PostingLine {
                account_code: "5000".into(),
                side: Side::Debit,
                amount: 100,
                entry_id: id_hex.clone(),
            },
            PostingLine {
                account_code: "2000".into(),
                side: Side::Credit,
                amount: 99,
                entry_id: id_hex,
            },
        ];
        assert!(matches!(
            gl.post_to_glt(&journal, &receipt.entry.core.entry_id, lines),
            Err(LedgerError::Unbalanced { .. })
        ));
    }

    #[test]
    fn invisible_entry_not_postable() {
        let parties = fixture();
        let mut journal = SharedJournal::new("val");
        let receipt = add_entry(&mut journal, &parties, 0, 100);
        let mut gl = GeneralLedger::new("carol", demo_chart());
        assert!(matches!(
            gl.post_to_glt(&journal, &receipt.entry.core.entry_id, vec![]),
            Err(LedgerError::NotVisible(_))
        ));
    }

    #[test]
    fn glr_adjustment_leaves_glt_untouched() {
        let mut gl = GeneralLedger::new("alice", demo_chart());
        let lines = vec![
            PostingLine {
                account_code: "6000".into(),
                side: Side::Debit,
                amount: 50,
                entry_id: String::new(),
            },
            PostingLine {
                account_code: "1700".into(),
                side: Side::Credit,
                amount: 50,
                entry_id: String::new(),
            },
        ];
        gl.adjust_glr(lines, "monthly depreciation", 1_600_000_000_000)
            .unwrap();
        assert_eq!(gl.glt_lines().len(), 0);
        assert_eq!(gl.adjustments().len(), 1);
        // empty list is an accepted no-op
        gl.adjust_glr(vec![], "nothing", 0).unwrap();
        // unbalanced rejected
        let bad = vec![PostingLine {
            account_code: "6000".into(),
            side: Side::Debit,
            amount: 50,
            entry_id: String::new(),
        }];
        assert!(matches!(
            gl.adjust_glr(bad, "oops", 0),
            Err(LedgerError::Unbalanced { .. })
        ));
    }

    #[test]
    fn trial_balance_single_sale() {
        let parties = fixture();
        let mut journal = SharedJournal::new("val");
        let receipt = add_entry(&mut journal, &parties, 0, 100);
        let chart = demo_chart();
        let pair = project_views(&receipt, &chart, &chart, &demo_mapping()).unwrap();
        let mut gl = GeneralLedger::new("bob", chart);
        gl.post_to_glt(&journal, &receipt.entry.core.entry_id, pair.payee_lines)
            .unwrap();
        let tb = gl.trial_balance(BalanceScope::Glt);
        assert_eq!(tb["1200"], 100); // AR debit
        assert_eq!(tb["4000"], -100); // Revenue credit
        assert_eq!(tb.values().sum::<i64>(), 0);
    }

    #[test]
    fn empty_ledger_balances_to_zero() {
        let gl = GeneralLedger::new("alice", demo_chart());
        let tb = gl.trial_balance(BalanceScope::GltAndGlr);
        assert!(tb.values().all(|v| *v == 0));
    }

    #[test]
    fn redundancy_counts_match_the_arithmetic() {
        assert_eq!(
            count_redundancy(1, RedundancyMode::Conventional).record_count,
            4
        );
        assert_eq!(
            count_redundancy(1, RedundancyMode::ConventionalWithBank).record_count,
            8
        );
        let te = count_redundancy(1, RedundancyMode::TripleEntry);
        assert_eq!(te.record_count, 1);
        assert_eq!(te.signature_count, 3);
        for mode in [
            RedundancyMode::Conventional,
            RedundancyMode::ConventionalWithBank,
            RedundancyMode::TripleEntry,
        ] {
            let r = count_redundancy(0, mode);
            assert_eq!(r.record_count, 0);
            assert_eq!(r.signature_count, 0);
        }
    }

    #[test]
    fn pta_export_round_trips_balances() {
        let parties = fixture();
        let mut journal = SharedJournal::new("val");
        let chart = demo_chart();
        let mut gl = GeneralLedger::new("bob", chart.clone());
        for n in 0..5 {
            let receipt = add_entry(&mut journal, &parties, n, 100 + n);
            let pair = project_views(&receipt, &chart, &chart, &demo_mapping()).unwrap();
            gl.post_to_glt(&journal, &receipt.entry.core.entry_id, pair.payee_lines)
                .unwrap();
        }
        gl.adjust_glr(
            vec![
                PostingLine {
                    account_code: "6000".into(),
                    side: Side::Debit,
                    amount: 7,
                    entry_id: String::new(),
                },
                PostingLine {
                    account_code: "1700".into(),
                    side: Side::Credit,
                    amount: 7,
                    entry_id: String::new(),
                },
            ],
            "depreciation",
            1_600_000_000_000,
        )
        .unwrap();
        let scales = UnitScales::default();
        let text = export_pta(&gl, &journal, &scales).unwrap();
        let parsed = parse_pta_balances(&text, &scales).unwrap();
        assert_eq!(parsed, trial_balance_by_name(&gl, BalanceScope::GltAndGlr));
    }

    #[test]
    fn empty_ledger_exports_empty_file() {
        let journal = SharedJournal::new("val");
        let gl = GeneralLedger::new("alice", demo_chart());
        let text = export_pta(&gl, &journal, &UnitScales::default()).unwrap();
        assert!(text.is_empty());
    }

    #[test]
    fn payer_and_payee_exports_mirror() {
        let parties = fixture();
        let mut journal = SharedJournal::new("val");
        let chart = demo_chart();
        let mut payer_gl = GeneralLedger::new("alice", chart.clone());
        let mut payee_gl = GeneralLedger::new("bob", chart.clone());
        let receipt = add_entry(&mut journal, &parties, 0, 250);
        let pair = project_views(&receipt, &chart, &chart, &demo_mapping()).unwrap();
        payer_gl
            .post_to_glt(&journal, &receipt.entry.core.entry_id, pair.payer_lines)
            .unwrap();
        payee_gl
            .post_to_glt(&journal, &receipt.entry.core.entry_id, pair.payee_lines)
            .unwrap();
        let scales = UnitScales::default();
        let payer_text = export_pta(&payer_gl, &journal, &scales).unwrap();
        let payee_text = export_pta(&payee_gl, &journal, &scales).unwrap();
        assert!(payer_text.contains("Accounts Payable  -2.50 USD"));
        assert!(payee_text.contains("Accounts Receivable  2.50 USD"));
    }

    #[test]
    fn date_formatting_is_correct() {
        assert_eq!(format_date(0), "1970-01-01");
        assert_eq!(format_date(1_600_000_000_000), "2020-09-13");
        assert_eq!(format_date(-86_400_000), "1969-12-31");
    }

    #[test]
    fn minor_unit_formatting_round_trips() {
        for (v, s) in [(0, "0.00"), (100, "1.00"), (-250, "-2.50"), (5, "0.05")] {
            assert_eq!(format_minor(v, 2), s);
            assert_eq!(parse_minor(s, 2), Some(v));
        }
        assert_eq!(format_minor(42, 0), "42");
        assert_eq!(parse_minor("42", 0), Some(42));
    }
}
