//! `tea` — scripted command-line surface over the triple-entry engine.
//!
//! Every command is a pure transition on the files of a workspace directory:
//! `registry.tsv`, `keys/`, `drafts/`, `journal.jsonl`, `ledgers/`. Writes go
//! through a temp-file rename, so a failed invocation leaves the workspace
//! unchanged. Timestamps come from `--now`, never from the wall clock, which
//! keeps golden outputs stable.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 state error.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tea_core::identity::{generate_identity, Identity, Registry, SEED_LEN};
use tea_core::journal::{ChainReport, SharedJournal, Visibility};
use tea_core::ledger::{
    count_redundancy, demo_chart, demo_mapping, export_pta, project_views, BalanceScope, Chart,
    GeneralLedger, PostingLine, RedundancyMode, RoleMapping, Side, UnitScales,
};
use tea_core::protocol::{
    accept, offer, reject, validate, EntryCore, EntryState, SharedEntry,
};
use tea_core::sim::{
    build_network, classify_topology, render_trace, wysiwis_check, ScenarioConfig,
};
use tea_core::typology::{
    check_tea_criteria, classify, classify_named_exemplars, SystemProfile,
};

// --- error and exit-code plumbing ---------------------------------------------

#[derive(Debug)]
enum CliError {
    /// Verification failed (journal chain / receipt checks) — exit 1.
    Verify(String),
    /// Bad arguments or malformed input files — exit 2.
    Usage(String),
    /// Workspace/protocol state forbids the operation — exit 3.
    State(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Usage(_) => 2,
            CliError::State(_) => 3,
        }
    }
    fn kind(&self) -> &'static str {
        match self {
            CliError::Verify(_) => "verify_failed",
            CliError::Usage(_) => "usage",
            CliError::State(_) => "state",
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Verify(m) | CliError::Usage(m) | CliError::State(m) => m,
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::State(format!("io: {e}"))
}

type CliResult<T = ()> = Result<T, CliError>;

// --- argument surface -----------------------------------------------------------

#[derive(Parser)]
#[command(name = "tea", version, about = "triple-entry accounting engine")]
struct Cli {
    /// Workspace directory holding registry, keys, drafts, journal, ledgers.
    #[arg(short = 'C', long, default_value = ".", global = true)]
    workspace: PathBuf,
    /// Report format for command output.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Create an empty workspace.
    Init,
    /// Generate a keypair from a 32-byte hex seed and register the alias.
    Keygen {
        #[arg(long)]
        alias: String,
        #[arg(long)]
        seed: String,
    },
    /// Create a draft entry; prints its id.
    Draft {
        #[arg(long)]
        payer: String,
        #[arg(long)]
        payee: String,
        #[arg(long)]
        amount: u64,
        #[arg(long)]
        unit: String,
        #[arg(long, default_value = "")]
        memo: String,
        /// Timestamp in ms UTC; supplied, never sampled.
        #[arg(long)]
        now: i64,
    },
    /// Payer signs the draft, making it an offer.
    Offer(SignArgs),
    /// Payee countersigns an offer.
    Accept(SignArgs),
    /// Payee declines an offer; terminal.
    Reject {
        #[arg(long)]
        entry: String,
        #[arg(long = "as")]
        as_alias: String,
        #[arg(long, default_value = "")]
        reason: String,
    },
    /// Validator signs off and appends the receipt to the shared journal.
    Validate {
        #[arg(long)]
        entry: String,
        #[arg(long = "as")]
        as_alias: String,
        #[arg(long)]
        now: i64,
        /// Make the entry visible to every registered party.
        #[arg(long)]
        public: bool,
    },
    /// Journal inspection.
    #[command(subcommand)]
    Journal(JournalCommand),
    /// Post visible validated entries into one party's general ledger.
    Post {
        #[arg(long = "as")]
        as_alias: String,
        /// Unit-to-accounts mapping file (TOML); built-in demo mapping if omitted.
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Chart of accounts file (TOML); built-in demo chart if omitted.
        #[arg(long)]
        chart: Option<PathBuf>,
    },
    /// Record a subjective reporting adjustment (GLR).
    Adjust {
        #[arg(long = "as")]
        as_alias: String,
        #[arg(long)]
        reason: String,
        #[arg(long)]
        now: i64,
        /// Posting line as CODE:dr:AMOUNT or CODE:cr:AMOUNT; repeatable.
        #[arg(long = "line", required = true)]
        lines: Vec<String>,
    },
    /// Trial balance for one party.
    Balance {
        #[arg(long = "as")]
        as_alias: String,
        #[arg(long, value_enum, default_value_t = Scope::All)]
        scope: Scope,
    },
    /// Write a plain-text-accounting export of one party's ledger.
    ExportPta {
        #[arg(long = "as")]
        as_alias: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Record/signature counts for n transactions under each bookkeeping mode.
    Redundancy {
        #[arg(long)]
        n: u64,
    },
    /// Run a deterministic replication scenario and write its trace.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the seed in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify a scenario's network topology.
    Topology {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Classify a system profile and print its criteria scorecard.
    Classify {
        #[arg(long)]
        profile: PathBuf,
    },
    /// Classify the built-in exemplar systems.
    Exemplars,
}

#[derive(Args)]
struct SignArgs {
    #[arg(long)]
    entry: String,
    #[arg(long = "as")]
    as_alias: String,
    #[arg(long)]
    now: i64,
}

#[derive(Subcommand)]
enum JournalCommand {
    /// Check hash chain and all signatures; exit 0 pass, 1 fail.
    Verify,
    /// List entries the given alias may read.
    View {
        #[arg(long = "as")]
        as_alias: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scope {
    Glt,
    All,
}

// --- workspace helpers -----------------------------------------------------------

struct Workspace {
    root: PathBuf,
}

impl Workspace {
    fn registry_path(&self) -> PathBuf {
        self.root.join("registry.tsv")
    }
    fn journal_path(&self) -> PathBuf {
        self.root.join("journal.jsonl")
    }
    fn key_path(&self, alias: &str) -> PathBuf {
        self.root.join("keys").join(format!("{alias}.seed"))
    }
    fn draft_path(&self, id_hex: &str) -> PathBuf {
        self.root.join("drafts").join(format!("{id_hex}.json"))
    }
    fn ledger_path(&self, alias: &str) -> PathBuf {
        self.root.join("ledgers").join(format!("{alias}.json"))
    }

    fn require_initialized(&self) -> CliResult {
        if !self.registry_path().exists() {
            return Err(CliError::Usage(format!(
                "workspace {} not initialized (run `tea init`)",
                self.root.display()
            )));
        }
        Ok(())
    }

    fn load_registry(&self) -> CliResult<Registry> {
        self.require_initialized()?;
        let text = fs::read_to_string(self.registry_path()).map_err(io_err)?;
        Registry::import(&text).map_err(|e| CliError::State(e.to_string()))
    }

    fn save_registry(&self, registry: &Registry) -> CliResult {
        atomic_write(&self.registry_path(), registry.export().as_bytes())
    }

    fn load_identity(&self, alias: &str) -> CliResult<Identity> {
        let text = fs::read_to_string(self.key_path(alias)).map_err(|_| {
            CliError::Usage(format!("no key material for alias {alias:?}"))
        })?;
        let seed = hex::decode(text.trim())
            .map_err(|e| CliError::State(format!("bad seed file for {alias}: {e}")))?;
        generate_identity(alias, &seed).map_err(|e| CliError::State(e.to_string()))
    }

    fn load_journal(&self, registry: &Registry) -> CliResult<SharedJournal> {
        let path = self.journal_path();
        if !path.exists() {
            return Ok(SharedJournal::new(""));
        }
        SharedJournal::load(&path, registry).map_err(|e| CliError::Verify(e.to_string()))
    }

    fn load_draft(&self, id_hex: &str) -> CliResult<SharedEntry> {
        let path = self.draft_path(id_hex);
        let bytes = fs::read(&path)
            .map_err(|_| CliError::Usage(format!("no draft with id {id_hex}")))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::State(format!("bad draft: {e}")))
    }

    fn save_draft(&self, entry: &SharedEntry) -> CliResult {
        let id_hex = hex::encode(entry.core.entry_id);
        let json = serde_json::to_vec_pretty(entry)
            .map_err(|e| CliError::State(e.to_string()))?;
        atomic_write(&self.draft_path(&id_hex), &json)
    }

    fn load_ledger(&self, alias: &str, chart: Chart) -> CliResult<GeneralLedger> {
        let path = self.ledger_path(alias);
        if !path.exists() {
            return Ok(GeneralLedger::new(alias, chart));
        }
        let bytes = fs::read(&path).map_err(io_err)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| CliError::State(format!("bad ledger file: {e}")))
    }

    fn save_ledger(&self, gl: &GeneralLedger) -> CliResult {
        let json = serde_json::to_vec_pretty(gl).map_err(|e| CliError::State(e.to_string()))?;
        atomic_write(&self.ledger_path(&gl.owner_alias), &json)
    }

    /// Advisory whole-workspace lock; held for the duration of any mutation.
    fn lock(&self) -> CliResult<LockGuard> {
        let path = self.root.join(".tea.lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(LockGuard { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::State(
                format!("workspace locked by another invocation ({})", path.display()),
            )),
            Err(e) => Err(io_err(e)),
        }
    }
}

struct LockGuard {
    path: PathBuf,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> CliResult {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

fn parse_entry_id(hex_id: &str) -> CliResult<[u8; 16]> {
    hex::decode(hex_id)
        .ok()
        .and_then(|v| <[u8; 16]>::try_from(v.as_slice()).ok())
        .ok_or_else(|| CliError::Usage(format!("entry id must be 32 hex chars, got {hex_id:?}")))
}

/// Content-derived draft id: stable across re-runs with equal arguments.
fn derive_entry_id(core_fields: &[&str], now: i64) -> [u8; 16] {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(b"tea-draft");
    for f in core_fields {
        hasher.update((f.len() as u32).to_be_bytes());
        hasher.update(f.as_bytes());
    }
    hasher.update(now.to_be_bytes());
    let digest = hasher.finalize();
    digest[..16].try_into().unwrap()
}

fn emit<T: Serialize>(format: Format, value: &T, text: String) {
    match format {
        Format::Text => println!("{text}"),
        Format::Json => println!("{}", serde_json::to_string_pretty(value).unwrap()),
    }
}

// --- command implementations -------------------------------------------------------

fn cmd_init(ws: &Workspace) -> CliResult {
    for dir in ["keys", "drafts", "ledgers"] {
        fs::create_dir_all(ws.root.join(dir)).map_err(io_err)?;
    }
    if !ws.registry_path().exists() {
        atomic_write(&ws.registry_path(), b"")?;
    }
    Ok(())
}

fn cmd_keygen(ws: &Workspace, format: Format, alias: &str, seed_hex: &str) -> CliResult {
    ws.require_initialized()?;
    let _lock = ws.lock()?;
    let seed = hex::decode(seed_hex)
        .map_err(|e| CliError::Usage(format!("seed must be hex: {e}")))?;
    if seed.len() != SEED_LEN {
        return Err(CliError::Usage(format!(
            "seed must be {SEED_LEN} bytes, got {}",
            seed.len()
        )));
    }
    let identity =
        generate_identity(alias, &seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut registry = ws.load_registry()?;
    registry
        .register(&identity)
        .map_err(|e| CliError::State(e.to_string()))?;
    atomic_write(&ws.key_path(alias), seed_hex.trim().as_bytes())?;
    ws.save_registry(&registry)?;
    #[derive(Serialize)]
    struct Out<'a> {
        alias: &'a str,
        public_key: String,
    }
    let out = Out {
        alias,
        public_key: hex::encode(identity.public_key()),
    };
    emit(format, &out, format!("registered {alias} pk={}", out.public_key));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_draft(
    ws: &Workspace,
    format: Format,
    payer: &str,
    payee: &str,
    amount: u64,
    unit: &str,
    memo: &str,
    now: i64,
) -> CliResult {
    let registry = ws.load_registry()?;
    for alias in [payer, payee] {
        if !registry.contains(alias) {
            return Err(CliError::Usage(format!("unknown alias {alias:?}")));
        }
    }
    let _lock = ws.lock()?;
    let amount_text = amount.to_string();
    let entry_id = derive_entry_id(&[payer, payee, &amount_text, unit, memo], now);
    let core = EntryCore {
        entry_id,
        payer_alias: payer.to_owned(),
        payee_alias: payee.to_owned(),
        amount,
        unit: unit.to_owned(),
        memo: memo.to_owned(),
        created_at: now,
    };
    let entry = SharedEntry::draft(core).map_err(|e| CliError::Usage(e.to_string()))?;
    ws.save_draft(&entry)?;
    #[derive(Serialize)]
    struct Out {
        entry_id: String,
    }
    let out = Out {
        entry_id: hex::encode(entry_id),
    };
    emit(format, &out, out.entry_id.clone());
    Ok(())
}

enum SignStep {
    Offer,
    Accept,
}

fn cmd_sign_step(ws: &Workspace, format: Format, step: SignStep, args: &SignArgs) -> CliResult {
    let registry = ws.load_registry()?;
    let _lock = ws.lock()?;
    let entry = ws.load_draft(&args.entry)?;
    let signer = ws.load_identity(&args.as_alias)?;
    let next = match step {
        SignStep::Offer => offer(entry, &signer, args.now),
        SignStep::Accept => accept(entry, &signer, &registry, args.now),
    }
    .map_err(|e| CliError::State(e.to_string()))?;
    ws.save_draft(&next)?;
    #[derive(Serialize)]
    struct Out<'a> {
        entry_id: &'a str,
        state: &'a EntryState,
    }
    let out = Out {
        entry_id: &args.entry,
        state: &next.state,
    };
    emit(format, &out, format!("{} -> {:?}", args.entry, next.state));
    Ok(())
}

fn cmd_reject(ws: &Workspace, format: Format, entry_id: &str, as_alias: &str, reason: &str) -> CliResult {
    ws.require_initialized()?;
    let _lock = ws.lock()?;
    let entry = ws.load_draft(entry_id)?;
    let signer = ws.load_identity(as_alias)?;
    let next = reject(entry, &signer, reason).map_err(|e| CliError::State(e.to_string()))?;
    ws.save_draft(&next)?;
    #[derive(Serialize)]
    struct Out<'a> {
        entry_id: &'a str,
        state: &'a EntryState,
    }
    emit(
        format,
        &Out { entry_id, state: &next.state },
        format!("{entry_id} -> Rejected"),
    );
    Ok(())
}

fn cmd_validate(
    ws: &Workspace,
    format: Format,
    entry_id: &str,
    as_alias: &str,
    now: i64,
    public: bool,
) -> CliResult {
    let registry = ws.load_registry()?;
    let _lock = ws.lock()?;
    let entry = ws.load_draft(entry_id)?;
    let validator = ws.load_identity(as_alias)?;
    let mut journal = ws.load_journal(&registry)?;
    if journal.is_empty() && journal.validator_alias().is_empty() {
        journal = SharedJournal::new(as_alias);
    }
    if journal.validator_alias() != as_alias {
        return Err(CliError::State(format!(
            "journal is validated by {:?}, not {as_alias:?}",
            journal.validator_alias()
        )));
    }
    let receipt = validate(
        entry,
        &validator,
        &registry,
        journal.head_hash(),
        journal.len(),
        now,
    )
    .map_err(|e| CliError::State(e.to_string()))?;
    let visibility = public.then_some(Visibility::Public);
    let seq = journal
        .append(receipt, &registry, visibility)
        .map_err(|e| CliError::State(e.to_string()))?;
    journal
        .persist(&ws.journal_path())
        .map_err(|e| CliError::State(e.to_string()))?;
    fs::remove_file(ws.draft_path(entry_id)).map_err(io_err)?;
    #[derive(Serialize)]
    struct Out<'a> {
        entry_id: &'a str,
        seq: u64,
        head_hash: String,
    }
    let out = Out {
        entry_id,
        seq,
        head_hash: hex::encode(journal.head_hash()),
    };
    emit(
        format,
        &out,
        format!("validated {entry_id} seq={seq} head={}", out.head_hash),
    );
    Ok(())
}

fn cmd_journal_verify(ws: &Workspace, format: Format) -> CliResult {
    let registry = ws.load_registry()?;
    let path = ws.journal_path();
    if !path.exists() {
        emit(
            format,
            &ChainReport::Pass { length: 0 },
            "pass length=0 (no journal)".to_owned(),
        );
        return Ok(());
    }
    // structural load without the verification shortcut: report, don't bail
    let bytes = fs::read(&path).map_err(io_err)?;
    match SharedJournal::from_file_bytes(&bytes, &registry) {
        Ok(journal) => {
            let report = journal.verify_chain(&registry);
            match &report {
                ChainReport::Pass { length } => {
                    emit(format, &report, format!("pass length={length}"));
                    Ok(())
                }
                ChainReport::Fail { index, check } => {
                    emit(format, &report, format!("fail index={index} check={check:?}"));
                    Err(CliError::Verify(format!(
                        "chain check {check:?} failed at receipt {index}"
                    )))
                }
            }
        }
        Err(e) => {
            #[derive(Serialize)]
            struct Out {
                kind: &'static str,
                reason: String,
            }
            let out = Out {
                kind: "corrupt",
                reason: e.to_string(),
            };
            emit(format, &out, format!("fail corrupt: {e}"));
            Err(CliError::Verify(e.to_string()))
        }
    }
}

fn cmd_journal_view(ws: &Workspace, format: Format, as_alias: &str) -> CliResult {
    let registry = ws.load_registry()?;
    let journal = ws.load_journal(&registry)?;
    let view = journal
        .read_view(as_alias, &registry)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&view).unwrap()),
        Format::Text => {
            for r in &view {
                let c = &r.entry.core;
                println!(
                    "{}\t{}\t{} -> {}\t{} {}\t{}",
                    r.seq,
                    hex::encode(c.entry_id),
                    c.payer_alias,
                    c.payee_alias,
                    c.amount,
                    c.unit,
                    c.memo
                );
            }
        }
    }
    Ok(())
}

fn load_chart(path: Option<&PathBuf>) -> CliResult<Chart> {
    match path {
        None => Ok(demo_chart()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err)?;
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad chart file: {e}")))
        }
    }
}

fn load_mapping(path: Option<&PathBuf>) -> CliResult<RoleMapping> {
    match path {
        None => Ok(demo_mapping()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err)?;
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad mapping file: {e}")))
        }
    }
}

fn cmd_post(
    ws: &Workspace,
    format: Format,
    as_alias: &str,
    mapping: Option<&PathBuf>,
    chart: Option<&PathBuf>,
) -> CliResult {
    let registry = ws.load_registry()?;
    let _lock = ws.lock()?;
    let journal = ws.load_journal(&registry)?;
    let mapping = load_mapping(mapping)?;
    let mut gl = ws.load_ledger(as_alias, load_chart(chart)?)?;
    let mut posted = Vec::new();
    for receipt in journal.receipts() {
        let core = &receipt.entry.core;
        let id_hex = hex::encode(core.entry_id);
        let is_payer = core.payer_alias == as_alias;
        let is_payee = core.payee_alias == as_alias;
        if (!is_payer && !is_payee) || gl.has_posted(&id_hex) {
            continue;
        }
        let views = project_views(receipt, &gl.chart, &gl.chart, &mapping)
            .map_err(|e| CliError::State(e.to_string()))?;
        let lines = if is_payer { views.payer_lines } else { views.payee_lines };
        if lines.is_empty() {
            continue; // zero-amount entries post nothing
        }
        gl.post_to_glt(&journal, &core.entry_id, lines)
            .map_err(|e| CliError::State(e.to_string()))?;
        posted.push(id_hex);
    }
    ws.save_ledger(&gl)?;
    #[derive(Serialize)]
    struct Out {
        posted: Vec<String>,
    }
    let n = posted.len();
    emit(format, &Out { posted }, format!("posted {n} entries"));
    Ok(())
}

fn parse_posting_line(text: &str) -> CliResult<PostingLine> {
    let parts: Vec<&str> = text.split(':').collect();
    let [code, side, amount] = parts.as_slice() else {
        return Err(CliError::Usage(format!(
            "line must be CODE:dr|cr:AMOUNT, got {text:?}"
        )));
    };
    let side = match *side {
        "dr" => Side::Debit,
        "cr" => Side::Credit,
        other => return Err(CliError::Usage(format!("side must be dr or cr, got {other:?}"))),
    };
    let amount: u64 = amount
        .parse()
        .map_err(|e| CliError::Usage(format!("bad amount in {text:?}: {e}")))?;
    Ok(PostingLine {
        account_code: code.to_string(),
        side,
        amount,
        entry_id: String::new(), // assigned by adjust_glr
    })
}

fn cmd_adjust(
    ws: &Workspace,
    format: Format,
    as_alias: &str,
    reason: &str,
    now: i64,
    line_args: &[String],
) -> CliResult {
    ws.require_initialized()?;
    let _lock = ws.lock()?;
    let mut gl = ws.load_ledger(as_alias, demo_chart())?;
    let lines = line_args
        .iter()
        .map(|t| parse_posting_line(t))
        .collect::<CliResult<Vec<_>>>()?;
    gl.adjust_glr(lines, reason, now)
        .map_err(|e| CliError::State(e.to_string()))?;
    ws.save_ledger(&gl)?;
    #[derive(Serialize)]
    struct Out<'a> {
        adjustments: usize,
        reason: &'a str,
    }
    let out = Out {
        adjustments: gl.adjustments().len(),
        reason,
    };
    emit(format, &out, format!("recorded adjustment: {reason}"));
    Ok(())
}

fn cmd_balance(ws: &Workspace, format: Format, as_alias: &str, scope: Scope) -> CliResult {
    ws.require_initialized()?;
    let gl = ws.load_ledger(as_alias, demo_chart())?;
    let scope = match scope {
        Scope::Glt => BalanceScope::Glt,
        Scope::All => BalanceScope::GltAndGlr,
    };
    let balances = gl.trial_balance(scope);
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&balances).unwrap()),
        Format::Text => {
            for (code, amount) in &balances {
                let name = gl.chart.get(code).map(|a| a.name.as_str()).unwrap_or("");
                println!("{code}\t{name}\t{amount}");
            }
            let total: i64 = balances.values().sum();
            println!("total\t\t{total}");
        }
    }
    Ok(())
}

fn cmd_export_pta(ws: &Workspace, format: Format, as_alias: &str, out: &Path) -> CliResult {
    let registry = ws.load_registry()?;
    let journal = ws.load_journal(&registry)?;
    let gl = ws.load_ledger(as_alias, demo_chart())?;
    let scales = UnitScales::default();
    let text = export_pta(&gl, &journal, &scales).map_err(|e| CliError::State(e.to_string()))?;
    atomic_write(out, text.as_bytes())?;
    #[derive(Serialize)]
    struct Out {
        path: String,
        bytes: usize,
    }
    let o = Out {
        path: out.display().to_string(),
        bytes: text.len(),
    };
    emit(format, &o, format!("wrote {} ({} bytes)", o.path, o.bytes));
    Ok(())
}

fn cmd_redundancy(format: Format, n: u64) -> CliResult {
    let reports = [
        count_redundancy(n, RedundancyMode::Conventional),
        count_redundancy(n, RedundancyMode::ConventionalWithBank),
        count_redundancy(n, RedundancyMode::TripleEntry),
    ];
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&reports).unwrap()),
        Format::Text => {
            for r in &reports {
                println!(
                    "{:?}\trecords={}\tsignatures={}",
                    r.mode, r.record_count, r.signature_count
                );
            }
        }
    }
    Ok(())
}

fn load_scenario(path: &Path) -> CliResult<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(io_err)?;
    ScenarioConfig::from_toml(&text).map_err(|e| CliError::Usage(e.to_string()))
}

const SIM_TICK_CEILING: u64 = 1_000_000;

fn cmd_simulate(
    ws: &Workspace,
    format: Format,
    scenario: &Path,
    seed: Option<u64>,
    out: &Path,
) -> CliResult {
    let _ = ws; // simulation state lives in the scenario, not the workspace
    let mut config = load_scenario(scenario)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let mut network = build_network(&config).map_err(|e| CliError::Usage(e.to_string()))?;
    network.run_to_quiescence(SIM_TICK_CEILING);
    atomic_write(out, render_trace(network.trace()).as_bytes())?;
    let report = wysiwis_check(&network).map_err(|e| CliError::State(e.to_string()))?;
    #[derive(Serialize)]
    struct Out {
        all_equal: bool,
        honest_equal: bool,
        heads: std::collections::BTreeMap<u32, String>,
        trace: String,
    }
    let o = Out {
        all_equal: report.all_equal,
        honest_equal: report.honest_equal,
        heads: report.heads,
        trace: out.display().to_string(),
    };
    emit(
        format,
        &o,
        format!(
            "all_equal={} honest_equal={} trace={}",
            o.all_equal, o.honest_equal, o.trace
        ),
    );
    Ok(())
}

fn cmd_topology(format: Format, scenario: &Path) -> CliResult {
    let config = load_scenario(scenario)?;
    let network = build_network(&config).map_err(|e| CliError::Usage(e.to_string()))?;
    let report = classify_topology(&network);
    emit(
        format,
        &report,
        format!(
            "decision_center={} distributed={} pure_p2p={} spof={:?} hubs={:?}",
            report.has_decision_center,
            report.is_distributed,
            report.is_pure_p2p,
            report.spof_nodes,
            report.hub_nodes
        ),
    );
    Ok(())
}

fn cmd_classify(format: Format, profile_path: &Path) -> CliResult {
    let text = fs::read_to_string(profile_path).map_err(io_err)?;
    let profile =
        SystemProfile::from_toml(&text).map_err(|e| CliError::Usage(e.to_string()))?;
    let classification = classify(&profile).map_err(|e| CliError::Usage(e.to_string()))?;
    let scorecard = check_tea_criteria(&profile);
    #[derive(Serialize)]
    struct Out<'a> {
        labels: &'a BTreeSet<tea_core::typology::Label>,
        scorecard: &'a tea_core::typology::Scorecard,
    }
    match format {
        Format::Json => {
            let out = Out {
                labels: &classification.labels,
                scorecard: &scorecard,
            };
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
        Format::Text => {
            let labels: Vec<String> = classification
                .labels
                .iter()
                .map(|l| serde_json::to_string(l).unwrap().replace('"', ""))
                .collect();
            println!("{}: {}", classification.name, labels.join(" "));
            println!("verdict: {:?}", scorecard.verdict);
            for (group, list) in [
                ("operational", &scorecard.operational),
                ("near-essential", &scorecard.near_essential),
                ("add-ons", &scorecard.addons),
                ("further", &scorecard.further),
            ] {
                for c in list {
                    println!(
                        "[{}] {group}: {}",
                        if c.pass { "x" } else { " " },
                        c.criterion
                    );
                }
            }
            println!("note: {}", scorecard.note);
        }
    }
    Ok(())
}

fn cmd_exemplars(format: Format) -> CliResult {
    let rows = classify_named_exemplars();
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&rows).unwrap()),
        Format::Text => {
            for row in &rows {
                let labels: Vec<String> = row
                    .labels
                    .iter()
                    .map(|l| serde_json::to_string(l).unwrap().replace('"', ""))
                    .collect();
                println!(
                    "{}\t{:?}\t{}\t{}",
                    row.name,
                    row.relation,
                    labels.join(" "),
                    row.note
                );
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    let ws = Workspace {
        root: cli.workspace.clone(),
    };
    let format = cli.format;
    match &cli.command {
        Command::Init => cmd_init(&ws),
        Command::Keygen { alias, seed } => cmd_keygen(&ws, format, alias, seed),
        Command::Draft {
            payer,
            payee,
            amount,
            unit,
            memo,
            now,
        } => cmd_draft(&ws, format, payer, payee, *amount, unit, memo, *now),
        Command::Offer(args) => cmd_sign_step(&ws, format, SignStep::Offer, args),
        Command::Accept(args) => cmd_sign_step(&ws, format, SignStep::Accept, args),
        Command::Reject {
            entry,
            as_alias,
            reason,
        } => cmd_reject(&ws, format, entry, as_alias, reason),
        Command::Validate {
            entry,
            as_alias,
            now,
            public,
        } => {
            parse_entry_id(entry)?;
            cmd_validate(&ws, format, entry, as_alias, *now, *public)
        }
        Command::Journal(JournalCommand::Verify) => cmd_journal_verify(&ws, format),
        Command::Journal(JournalCommand::View { as_alias }) => {
            cmd_journal_view(&ws, format, as_alias)
        }
        Command::Post {
            as_alias,
            mapping,
            chart,
        } => cmd_post(&ws, format, as_alias, mapping.as_ref(), chart.as_ref()),
        Command::Adjust {
            as_alias,
            reason,
            now,
            lines,
        } => cmd_adjust(&ws, format, as_alias, reason, *now, lines),
        Command::Balance { as_alias, scope } => cmd_balance(&ws, format, as_alias, *scope),
        Command::ExportPta { as_alias, out } => cmd_export_pta(&ws, format, as_alias, out),
        Command::Redundancy { n } => cmd_redundancy(format, *n),
        Command::Simulate {
            scenario,
            seed,
            out,
        } => cmd_simulate(&ws, format, scenario, *seed, out),
        Command::Topology { scenario } => cmd_topology(format, scenario),
        Command::Classify { profile } => cmd_classify(format, profile),
        Command::Exemplars => cmd_exemplars(format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "code": e.kind(), "message": e.message() })
            );
            ExitCode::from(e.code())
        }
    }
}
