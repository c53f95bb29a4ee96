//! Deterministic discrete-event replication simulator.
//!
//! N nodes hold local journal copies and exchange protocol messages over a
//! configured topology. One event loop, integer ticks, constant per-edge
//! latency, caller-supplied seed: identical `(config, seed)` produce
//! byte-identical event traces. Node handlers touch no wall clock and no
//! ambient randomness.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::identity::{generate_identity, Identity, Registry};
use crate::journal::{SharedJournal, Visibility};
use crate::protocol::{
    accept, compute_receipt_hash, offer, validate, verify_receipt, EntryCore,
    SharedEntry, ValidatedReceipt, GENESIS_HASH,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("topology must be a connected graph over at least 2 nodes")]
    DisconnectedTopology,
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("receipt index {index} out of range (journal length {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("network is not quiescent: {0} undelivered messages")]
    NotQuiescent(usize),
    #[error("unknown node id {0}")]
    UnknownNode(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Validator,
    Replica,
    Client,
}

// --- scenario configuration -------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeConfig {
    pub id: u32,
    pub role: Role,
    pub alias: String,
    #[serde(default = "default_true")]
    pub honest: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeConfig {
    pub a: u32,
    pub b: u32,
    #[serde(default = "default_latency")]
    pub latency: u64,
}

fn default_latency() -> u64 {
    1
}

/// One scripted transaction: at `at`, the payer's node drafts and offers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkloadItem {
    pub at: u64,
    pub payer: String,
    pub payee: String,
    pub amount: u64,
    pub unit: String,
    #[serde(default)]
    pub memo: String,
}

/// At `at`, node `from` asks node `to` for its full journal copy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyncItem {
    pub at: u64,
    pub from: u32,
    pub to: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(default)]
    pub hub_threshold_factor: Option<f64>,
    pub nodes: Vec<NodeConfig>,
    pub edges: Vec<EdgeConfig>,
    #[serde(default)]
    pub workload: Vec<WorkloadItem>,
    #[serde(default)]
    pub syncs: Vec<SyncItem>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

// --- messages and trace ------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageKind {
    SubmitDraft(EntryCore),
    Offer(SharedEntry),
    Accept(SharedEntry),
    ValidatedBroadcast(ValidatedReceipt),
    SyncRequest,
    SyncResponse(Vec<ValidatedReceipt>),
}

impl MessageKind {
    fn name(&self) -> &'static str {
        match self {
            MessageKind::SubmitDraft(_) => "submit_draft",
            MessageKind::Offer(_) => "offer",
            MessageKind::Accept(_) => "accept",
            MessageKind::ValidatedBroadcast(_) => "validated_broadcast",
            MessageKind::SyncRequest => "sync_request",
            MessageKind::SyncResponse(_) => "sync_response",
        }
    }
}

/// An in-flight message, forwarded hop by hop along topology edges.
#[derive(Debug, Clone)]
struct Envelope {
    from: u32,
    to: u32,
    hop_to: u32,
    kind: MessageKind,
    deliver_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub tick: u64,
    pub kind: &'static str,
    pub details: String,
}

pub fn render_trace(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&format!("{}\t{}\t{}\n", e.tick, e.kind, e.details));
    }
    out
}

// --- nodes and network --------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Node {
    pub node_id: u32,
    pub role: Role,
    pub alias: String,
    pub honest: bool,
    pub local_journal: SharedJournal,
    identity: Identity,
    /// Broadcast receipts that arrived ahead of their chain position.
    pending: BTreeMap<u64, ValidatedReceipt>,
}

#[derive(Debug)]
pub struct Network {
    pub clock: u64,
    pub rng_seed: u64,
    nodes: BTreeMap<u32, Node>,
    adjacency: BTreeMap<u32, BTreeSet<u32>>,
    latency: BTreeMap<(u32, u32), u64>,
    /// (deliver_at, edge_rank, msg_seq) → envelope; fixes processing order.
    queue: BTreeMap<(u64, u64, u64), Envelope>,
    next_msg_seq: u64,
    next_entry_ordinal: u64,
    registry: Registry,
    hub_threshold_factor: f64,
    trace: Vec<TraceEvent>,
    alias_to_node: BTreeMap<String, u32>,
    edge_rank: BTreeMap<(u32, u32), u64>,
}

fn derive_seed(network_seed: u64, label: &str, alias: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(label.as_bytes());
    hasher.update(network_seed.to_be_bytes());
    hasher.update(alias.as_bytes());
    hasher.finalize().into()
}

/// Deterministic network construction from a scenario.
pub fn build_network(config: &ScenarioConfig) -> Result<Network, SimError> {
    if config.nodes.len() < 2 {
        return Err(SimError::DisconnectedTopology);
    }
    let mut adjacency: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    let mut latency = BTreeMap::new();
    let mut alias_to_node = BTreeMap::new();
    let mut ids = BTreeSet::new();
    for n in &config.nodes {
        if !ids.insert(n.id) {
            return Err(SimError::InvalidConfig(format!("duplicate node id {}", n.id)));
        }
        if alias_to_node.insert(n.alias.clone(), n.id).is_some() {
            return Err(SimError::InvalidConfig(format!(
                "duplicate alias {:?}",
                n.alias
            )));
        }
        adjacency.entry(n.id).or_default();
    }
    for e in &config.edges {
        if !ids.contains(&e.a) || !ids.contains(&e.b) || e.a == e.b {
            return Err(SimError::InvalidConfig(format!(
                "bad edge {} -- {}",
                e.a, e.b
            )));
        }
        adjacency.get_mut(&e.a).unwrap().insert(e.b);
        adjacency.get_mut(&e.b).unwrap().insert(e.a);
        latency.insert((e.a, e.b), e.latency);
        latency.insert((e.b, e.a), e.latency);
    }
    if !is_connected(&adjacency) {
        return Err(SimError::DisconnectedTopology);
    }

    let validators: Vec<&NodeConfig> = config
        .nodes
        .iter()
        .filter(|n| n.role == Role::Validator)
        .collect();
    if !config.workload.is_empty() && validators.len() != 1 {
        return Err(SimError::InvalidConfig(format!(
            "workload requires exactly one validator, found {}",
            validators.len()
        )));
    }
    for w in &config.workload {
        for alias in [&w.payer, &w.payee] {
            if !alias_to_node.contains_key(alias) {
                return Err(SimError::InvalidConfig(format!(
                    "workload references unknown alias {alias:?}"
                )));
            }
        }
        if w.payer == w.payee {
            return Err(SimError::InvalidConfig("payer equals payee".into()));
        }
    }
    for s in &config.syncs {
        if !ids.contains(&s.from) || !ids.contains(&s.to) {
            return Err(SimError::InvalidConfig("sync references unknown node".into()));
        }
    }

    let validator_alias = validators
        .first()
        .map(|v| v.alias.clone())
        .unwrap_or_default();

    let mut registry = Registry::new();
    let mut nodes = BTreeMap::new();
    for n in &config.nodes {
        let identity = generate_identity(&n.alias, &derive_seed(config.seed, "tea-sim-id", &n.alias))
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        registry
            .register(&identity)
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        nodes.insert(
            n.id,
            Node {
                node_id: n.id,
                role: n.role,
                alias: n.alias.clone(),
                honest: n.honest,
                local_journal: SharedJournal::new(&validator_alias),
                identity,
                pending: BTreeMap::new(),
            },
        );
    }

    // stable rank per directed edge for queue ordering
    let mut edge_rank = BTreeMap::new();
    for (rank, key) in latency.keys().enumerate() {
        edge_rank.insert(*key, rank as u64 + 1);
    }

    let mut network = Network {
        clock: 0,
        rng_seed: config.seed,
        nodes,
        adjacency,
        latency,
        queue: BTreeMap::new(),
        next_msg_seq: 0,
        next_entry_ordinal: 0,
        registry,
        hub_threshold_factor: config.hub_threshold_factor.unwrap_or(2.0),
        trace: Vec::new(),
        alias_to_node,
        edge_rank,
    };

    for w in &config.workload {
        let payer_node = network.alias_to_node[&w.payer];
        let ordinal = network.next_entry_ordinal;
        network.next_entry_ordinal += 1;
        let mut entry_id = [0u8; 16];
        let digest = derive_seed(config.seed, "tea-sim-entry", &ordinal.to_string());
        entry_id.copy_from_slice(&digest[..16]);
        let core = EntryCore {
            entry_id,
            payer_alias: w.payer.clone(),
            payee_alias: w.payee.clone(),
            amount: w.amount,
            unit: w.unit.clone(),
            memo: w.memo.clone(),
            created_at: w.at as i64,
        };
        network.enqueue_local(payer_node, MessageKind::SubmitDraft(core), w.at);
    }
    for s in &config.syncs {
        network.schedule_sync(s.at, s.from, s.to)?;
    }

    Ok(network)
}

fn is_connected(adjacency: &BTreeMap<u32, BTreeSet<u32>>) -> bool {
    let Some(start) = adjacency.keys().next() else {
        return true;
    };
    let mut seen = BTreeSet::from([*start]);
    let mut frontier = VecDeque::from([*start]);
    while let Some(n) = frontier.pop_front() {
        for next in &adjacency[&n] {
            if seen.insert(*next) {
                frontier.push_back(*next);
            }
        }
    }
    seen.len() == adjacency.len()
}

impl Network {
    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn node(&self, id: u32) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn pending_messages(&self) -> usize {
        self.queue.len()
    }

    fn emit(&mut self, tick: u64, kind: &'static str, details: String) {
        self.trace.push(TraceEvent { tick, kind, details });
    }

    /// Queue a message for local handling at `node` (no edge traversal).
    fn enqueue_local(&mut self, node: u32, kind: MessageKind, at: u64) {
        let seq = self.next_msg_seq;
        self.next_msg_seq += 1;
        self.queue.insert(
            (at, 0, seq),
            Envelope {
                from: node,
                to: node,
                hop_to: node,
                kind,
                deliver_at: at,
            },
        );
    }

    /// BFS next hop from `from` toward `to`; ties broken by smallest id.
    fn next_hop(&self, from: u32, to: u32) -> Option<u32> {
        if from == to {
            return Some(to);
        }
        let mut prev: BTreeMap<u32, u32> = BTreeMap::new();
        let mut frontier = VecDeque::from([from]);
        let mut seen = BTreeSet::from([from]);
        while let Some(n) = frontier.pop_front() {
            for next in &self.adjacency[&n] {
                if seen.insert(*next) {
                    prev.insert(*next, n);
                    frontier.push_back(*next);
                }
            }
        }
        if !prev.contains_key(&to) {
            return None;
        }
        let mut cur = to;
        while prev[&cur] != from {
            cur = prev[&cur];
        }
        Some(cur)
    }

    /// Send from `from` toward `to`, first hop leaving at `now`.
    fn send(&mut self, now: u64, from: u32, to: u32, kind: MessageKind) {
        self.route(now, from, from, to, kind);
    }

    /// Route one hop: the message originated at `from`, currently sits at
    /// `at_node`, and is bound for `to`.
    fn route(&mut self, now: u64, from: u32, at_node: u32, to: u32, kind: MessageKind) {
        let Some(hop) = self.next_hop(at_node, to) else {
            self.emit(now, "routing_failed", format!("from={from} to={to}"));
            return;
        };
        let lat = self.latency.get(&(at_node, hop)).copied().unwrap_or(1);
        let deliver_at = now + lat;
        let rank = self.edge_rank.get(&(at_node, hop)).copied().unwrap_or(0);
        let seq = self.next_msg_seq;
        self.next_msg_seq += 1;
        self.queue.insert(
            (deliver_at, rank, seq),
            Envelope {
                from,
                to,
                hop_to: hop,
                kind,
                deliver_at,
            },
        );
    }

    /// Process every message with `deliver_at <= until_tick`, in
    /// deterministic (tick, edge, sequence) order. Returns the events
    /// generated by this call.
    pub fn run(&mut self, until_tick: u64) -> Vec<TraceEvent> {
        let trace_start = self.trace.len();
        while let Some((&key, _)) = self.queue.iter().next() {
            if key.0 > until_tick {
                break;
            }
            let env = self.queue.remove(&key).unwrap();
            self.clock = self.clock.max(env.deliver_at);
            if env.hop_to != env.to {
                // intermediate hop: forward toward the destination
                self.route(env.deliver_at, env.from, env.hop_to, env.to, env.kind);
                continue;
            }
            self.handle(env);
        }
        self.trace[trace_start..].to_vec()
    }

    /// Run until no messages remain. `max_ticks` bounds runaway scenarios.
    pub fn run_to_quiescence(&mut self, max_ticks: u64) -> Vec<TraceEvent> {
        let start = self.trace.len();
        while !self.queue.is_empty() {
            let next_tick = self.queue.keys().next().unwrap().0;
            assert!(next_tick <= max_ticks, "simulation exceeded {max_ticks} ticks");
            self.run(next_tick);
        }
        self.trace[start..].to_vec()
    }

    fn handle(&mut self, env: Envelope) {
        let now = env.deliver_at;
        let node_id = env.to;
        self.emit(
            now,
            "deliver",
            format!("kind={} from={} to={}", env.kind.name(), env.from, env.to),
        );
        match env.kind.clone() {
            MessageKind::SubmitDraft(core) => self.handle_submit(now, node_id, core),
            MessageKind::Offer(entry) => self.handle_offer(now, node_id, entry),
            MessageKind::Accept(entry) => self.handle_accept(now, node_id, entry),
            MessageKind::ValidatedBroadcast(receipt) => {
                self.handle_broadcast(now, node_id, receipt)
            }
            MessageKind::SyncRequest => self.handle_sync_request(now, env.from, node_id),
            MessageKind::SyncResponse(receipts) => {
                self.handle_sync_response(now, env.from, node_id, receipts)
            }
        }
    }

    fn handle_submit(&mut self, now: u64, node_id: u32, core: EntryCore) {
        let node = &self.nodes[&node_id];
        if node.alias != core.payer_alias {
            self.emit(now, "protocol_error", format!("node={node_id} not the payer"));
            return;
        }
        let payee_node = self.alias_to_node[&core.payee_alias];
        let id_hex = hex::encode(core.entry_id);
        let details = format!(
            "node={node_id} id={id_hex} payer={} payee={} amount={}",
            core.payer_alias, core.payee_alias, core.amount
        );
        let identity = node.identity.clone();
        match SharedEntry::draft(core).and_then(|e| offer(e, &identity, now as i64)) {
            Ok(entry) => {
                self.emit(now, "offered", details);
                self.send(now, node_id, payee_node, MessageKind::Offer(entry));
            }
            Err(e) => self.emit(now, "protocol_error", format!("node={node_id} {e}")),
        }
    }

    fn handle_offer(&mut self, now: u64, node_id: u32, entry: SharedEntry) {
        let node = &self.nodes[&node_id];
        let identity = node.identity.clone();
        let id_hex = hex::encode(entry.core.entry_id);
        let validator = self
            .nodes
            .values()
            .find(|n| n.role == Role::Validator)
            .map(|n| n.node_id);
        match accept(entry, &identity, &self.registry, now as i64) {
            Ok(accepted) => {
                self.emit(now, "accepted", format!("node={node_id} id={id_hex}"));
                if let Some(vid) = validator {
                    self.send(now, node_id, vid, MessageKind::Accept(accepted));
                } else {
                    self.emit(now, "protocol_error", "no validator in network".into());
                }
            }
            Err(e) => self.emit(
                now,
                "protocol_error",
                format!("node={node_id} id={id_hex} {e}"),
            ),
        }
    }

    fn handle_accept(&mut self, now: u64, node_id: u32, entry: SharedEntry) {
        let node = &self.nodes[&node_id];
        if node.role != Role::Validator {
            self.emit(now, "protocol_error", format!("node={node_id} is not the validator"));
            return;
        }
        let identity = node.identity.clone();
        let prev_hash = node.local_journal.head_hash();
        let seq = node.local_journal.len();
        let id_hex = hex::encode(entry.core.entry_id);
        match validate(entry, &identity, &self.registry, prev_hash, seq, now as i64) {
            Ok(receipt) => {
                let registry = self.registry.clone();
                let node = self.nodes.get_mut(&node_id).unwrap();
                match node
                    .local_journal
                    .append(receipt.clone(), &registry, Some(Visibility::Public))
                {
                    Ok(seq) => {
                        self.emit(now, "validated", format!("node={node_id} id={id_hex} seq={seq}"));
                        let peers: Vec<u32> =
                            self.nodes.keys().copied().filter(|id| *id != node_id).collect();
                        for peer in peers {
                            self.send(
                                now,
                                node_id,
                                peer,
                                MessageKind::ValidatedBroadcast(receipt.clone()),
                            );
                        }
                    }
                    Err(e) => self.emit(now, "protocol_error", format!("node={node_id} {e}")),
                }
            }
            Err(e) => self.emit(
                now,
                "protocol_error",
                format!("node={node_id} id={id_hex} {e}"),
            ),
        }
    }

    fn handle_broadcast(&mut self, now: u64, node_id: u32, receipt: ValidatedReceipt) {
        let registry = self.registry.clone();
        let node = self.nodes.get_mut(&node_id).unwrap();
        if !node.honest {
            return;
        }
        let ok = verify_receipt(&receipt, &registry)
            .map(|r| r.pass())
            .unwrap_or(false);
        if !ok {
            let details = format!("node={node_id} seq={}", receipt.seq);
            self.emit(now, "rejected_receipt", details);
            return;
        }
        node.pending.insert(receipt.seq, receipt);
        // apply any receipts now in chain order
        let mut appended = Vec::new();
        while let Some(next) = node.pending.remove(&node.local_journal.len()) {
            if next.prev_hash != node.local_journal.head_hash() {
                let details = format!("node={node_id} seq={}", next.seq);
                self.emit(now, "rejected_receipt", details);
                return;
            }
            match node
                .local_journal
                .append(next, &registry, Some(Visibility::Public))
            {
                Ok(seq) => appended.push(seq),
                Err(e) => {
                    self.emit(now, "rejected_receipt", format!("node={node_id} {e}"));
                    return;
                }
            }
        }
        for seq in appended {
            self.emit(now, "appended", format!("node={node_id} seq={seq}"));
        }
    }

    fn handle_sync_request(&mut self, now: u64, from: u32, node_id: u32) {
        self.emit(now, "sync_request", format!("from={from} to={node_id}"));
        let receipts = self.nodes[&node_id].local_journal.receipts().to_vec();
        let count = receipts.len();
        self.emit(
            now,
            "sync_response",
            format!("from={node_id} to={from} count={count}"),
        );
        self.send(now, node_id, from, MessageKind::SyncResponse(receipts));
    }

    fn handle_sync_response(
        &mut self,
        now: u64,
        source: u32,
        node_id: u32,
        receipts: Vec<ValidatedReceipt>,
    ) {
        if !self.nodes[&node_id].honest {
            return;
        }
        // independently re-verify the offered history before touching it
        let mut prev = GENESIS_HASH;
        for (i, receipt) in receipts.iter().enumerate() {
            let hash_ok = receipt.prev_hash == prev
                && receipt.seq == i as u64
                && compute_receipt_hash(&receipt.prev_hash, &receipt.entry)
                    .map(|h| h == receipt.receipt_hash)
                    .unwrap_or(false);
            let sigs_ok = verify_receipt(receipt, &self.registry)
                .map(|r| r.pass())
                .unwrap_or(false);
            if !hash_ok || !sigs_ok {
                let check = if hash_ok { "signature" } else { "hash_link" };
                self.emit(
                    now,
                    "tamper_detected",
                    format!("observer={node_id} source={source} index={i} check={check}"),
                );
                return;
            }
            prev = receipt.receipt_hash;
        }
        // clean history: adopt any suffix extending our chain
        let registry = self.registry.clone();
        let node = self.nodes.get_mut(&node_id).unwrap();
        let mut merged = 0u64;
        for receipt in receipts {
            if receipt.seq < node.local_journal.len() {
                continue;
            }
            if node
                .local_journal
                .append(receipt, &registry, Some(Visibility::Public))
                .is_err()
            {
                break;
            }
            merged += 1;
        }
        if merged > 0 {
            self.emit(
                now,
                "sync_merged",
                format!("node={node_id} source={source} added={merged}"),
            );
        }
    }

    /// Queue a sync of `from`'s journal from node `to`, delivered at `at`.
    pub fn schedule_sync(&mut self, at: u64, from: u32, to: u32) -> Result<(), SimError> {
        if !self.nodes.contains_key(&from) {
            return Err(SimError::UnknownNode(from));
        }
        if !self.nodes.contains_key(&to) {
            return Err(SimError::UnknownNode(to));
        }
        self.send(at, from, to, MessageKind::SyncRequest);
        Ok(())
    }

    /// Mutate one record in a node's local journal copy and rewrite the
    /// node's downstream hash links so the copy is self-consistent.
    /// Signatures cannot be re-forged, which is exactly what honest peers
    /// detect. Stub mutations leave hashes untouched (stubs are unsigned).
    pub fn inject_tamper(
        &mut self,
        node_id: u32,
        receipt_index: usize,
        mutation: TamperMutation,
    ) -> Result<(), SimError> {
        let node = self
            .nodes
            .get_mut(&node_id)
            .ok_or(SimError::UnknownNode(node_id))?;
        let len = node.local_journal.len() as usize;
        if receipt_index >= len {
            return Err(SimError::IndexOutOfRange {
                index: receipt_index,
                len,
            });
        }
        let signed_field = !matches!(mutation, TamperMutation::StubPayload(_));
        let mut receipts = node.local_journal.receipts().to_vec();
        match mutation {
            TamperMutation::Amount(v) => receipts[receipt_index].entry.core.amount = v,
            TamperMutation::Memo(m) => receipts[receipt_index].entry.core.memo = m,
            TamperMutation::StubPayload(payload) => {
                let owner = receipts[receipt_index].entry.core.payer_alias.clone();
                receipts[receipt_index].payer_stub =
                    Some(crate::protocol::Stub { owner_alias: owner, payload });
            }
        }
        // rebuild the local chain from the mutated record on
        let mut prev = if receipt_index == 0 {
            GENESIS_HASH
        } else {
            receipts[receipt_index - 1].receipt_hash
        };
        for receipt in receipts.iter_mut().skip(receipt_index) {
            receipt.prev_hash = prev;
            receipt.receipt_hash = compute_receipt_hash(&prev, &receipt.entry)
                .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
            prev = receipt.receipt_hash;
        }
        for (i, receipt) in receipts.into_iter().enumerate().skip(receipt_index) {
            node.local_journal.tamper_replace(i, receipt);
        }
        if signed_field {
            node.honest = false;
        }
        let clock = self.clock;
        self.emit(
            clock,
            "tamper_injected",
            format!("node={node_id} index={receipt_index} signed_field={signed_field}"),
        );
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TamperMutation {
    Amount(u64),
    Memo(String),
    StubPayload(Vec<u8>),
}

// --- WYSIWIS check -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WysiwisReport {
    /// Head hash per node, hex.
    pub heads: BTreeMap<u32, String>,
    /// All nodes agree, honest or not.
    pub all_equal: bool,
    /// All honest nodes agree — the convergence guarantee.
    pub honest_equal: bool,
}

/// Head-hash agreement across the network. Requires quiescence: an
/// in-flight message could still change somebody's head.
pub fn wysiwis_check(network: &Network) -> Result<WysiwisReport, SimError> {
    let pending = network.pending_messages();
    if pending > 0 {
        return Err(SimError::NotQuiescent(pending));
    }
    let heads: BTreeMap<u32, String> = network
        .nodes()
        .map(|n| (n.node_id, hex::encode(n.local_journal.head_hash())))
        .collect();
    let mut all: BTreeSet<&String> = BTreeSet::new();
    let mut honest: BTreeSet<&String> = BTreeSet::new();
    for node in network.nodes() {
        let head = &heads[&node.node_id];
        all.insert(head);
        if node.honest {
            honest.insert(head);
        }
    }
    Ok(WysiwisReport {
        all_equal: all.len() <= 1,
        honest_equal: honest.len() <= 1,
        heads,
    })
}

// --- topology classification ----------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyReport {
    /// Exactly one validator role present.
    pub has_decision_center: bool,
    /// Nodes whose removal cuts some client off from all validation.
    pub spof_nodes: BTreeSet<u32>,
    /// Multi-node message-passing network.
    pub is_distributed: bool,
    /// All nodes equipotent (identical role) and no hubs.
    pub is_pure_p2p: bool,
    /// Nodes whose degree reaches the hub threshold.
    pub hub_nodes: BTreeSet<u32>,
}

pub fn classify_topology(network: &Network) -> TopologyReport {
    let node_ids: Vec<u32> = network.nodes.keys().copied().collect();
    let validators: BTreeSet<u32> = network
        .nodes()
        .filter(|n| n.role == Role::Validator)
        .map(|n| n.node_id)
        .collect();
    let clients: BTreeSet<u32> = network
        .nodes()
        .filter(|n| n.role == Role::Client)
        .map(|n| n.node_id)
        .collect();

    let spof_nodes = if validators.is_empty() {
        articulation_points(&network.adjacency)
    } else {
        node_ids
            .iter()
            .copied()
            .filter(|&v| {
                let reachable = reachable_without(&network.adjacency, v, &validators);
                clients.iter().any(|c| *c != v && !reachable.contains(c))
            })
            .collect()
    };

    let degrees: BTreeMap<u32, usize> = network
        .adjacency
        .iter()
        .map(|(id, nbrs)| (*id, nbrs.len()))
        .collect();
    let mean_degree =
        degrees.values().sum::<usize>() as f64 / degrees.len().max(1) as f64;
    let threshold = network.hub_threshold_factor * mean_degree;
    let hub_nodes: BTreeSet<u32> = degrees
        .iter()
        .filter(|(_, d)| **d as f64 >= threshold && **d > 0)
        .map(|(id, _)| *id)
        .collect();

    let mut roles: BTreeSet<Role> = BTreeSet::new();
    for n in network.nodes() {
        roles.insert(n.role);
    }
    let equipotent = roles.len() == 1;

    TopologyReport {
        has_decision_center: validators.len() == 1,
        spof_nodes,
        is_distributed: node_ids.len() >= 2,
        is_pure_p2p: equipotent && hub_nodes.is_empty(),
        hub_nodes,
    }
}

impl std::cmp::PartialOrd for Role {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl std::cmp::Ord for Role {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

/// Nodes from which at least one member of `targets` is reachable when
/// `removed` is absent from the graph.
fn reachable_without(
    adjacency: &BTreeMap<u32, BTreeSet<u32>>,
    removed: u32,
    targets: &BTreeSet<u32>,
) -> BTreeSet<u32> {
    let mut reachable = BTreeSet::new();
    for start in targets {
        if *start == removed || reachable.contains(start) {
            continue;
        }
        let mut frontier = VecDeque::from([*start]);
        reachable.insert(*start);
        while let Some(n) = frontier.pop_front() {
            for next in &adjacency[&n] {
                if *next != removed && reachable.insert(*next) {
                    frontier.push_back(*next);
                }
            }
        }
    }
    reachable
}

/// Classic DFS articulation points; graphs here are small.
fn articulation_points(adjacency: &BTreeMap<u32, BTreeSet<u32>>) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    for &candidate in adjacency.keys() {
        if adjacency.len() < 3 {
            break;
        }
        // removal disconnects the remaining graph?
        let others: Vec<u32> = adjacency.keys().copied().filter(|n| *n != candidate).collect();
        let start = others[0];
        let mut seen = BTreeSet::from([start]);
        let mut frontier = VecDeque::from([start]);
        while let Some(n) = frontier.pop_front() {
            for next in &adjacency[&n] {
                if *next != candidate && seen.insert(*next) {
                    frontier.push_back(*next);
                }
            }
        }
        if seen.len() != others.len() {
            out.insert(candidate);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star_scenario() -> ScenarioConfig {
        ScenarioConfig {
            seed: 42,
            hub_threshold_factor: None,
            nodes: vec![
                NodeConfig { id: 0, role: Role::Validator, alias: "val".into(), honest: true },
                NodeConfig { id: 1, role: Role::Client, alias: "alice".into(), honest: true },
                NodeConfig { id: 2, role: Role::Client, alias: "bob".into(), honest: true },
                NodeConfig { id: 3, role: Role::Replica, alias: "r1".into(), honest: true },
                NodeConfig { id: 4, role: Role::Replica, alias: "r2".into(), honest: true },
            ],
            edges: (1..=4).map(|b| EdgeConfig { a: 0, b, latency: 1 }).collect(),
            workload: vec![],
            syncs: vec![],
        }
    }

    fn with_workload(mut cfg: ScenarioConfig, n: u64) -> ScenarioConfig {
        cfg.workload = (0..n)
            .map(|i| WorkloadItem {
                at: 1 + i,
                payer: "alice".into(),
                payee: "bob".into(),
                amount: 100 + i,
                unit: "USD".into(),
                memo: format!("tx {i}"),
            })
            .collect();
        cfg
    }

    #[test]
    fn star_topology_builds() {
        let net = build_network(&star_scenario()).unwrap();
        assert_eq!(net.nodes().count(), 5);
        assert_eq!(net.adjacency.values().map(|n| n.len()).sum::<usize>(), 8);
    }

    #[test]
    fn single_node_is_an_error() {
        let mut cfg = star_scenario();
        cfg.nodes.truncate(1);
        cfg.edges.clear();
        assert_eq!(build_network(&cfg).unwrap_err(), SimError::DisconnectedTopology);
    }

    #[test]
    fn disconnected_topology_is_an_error() {
        let mut cfg = star_scenario();
        cfg.edges.pop();
        assert_eq!(build_network(&cfg).unwrap_err(), SimError::DisconnectedTopology);
    }

    #[test]
    fn identical_config_yields_identical_traces() {
        let cfg = with_workload(star_scenario(), 5);
        let mut a = build_network(&cfg).unwrap();
        let mut b = build_network(&cfg).unwrap();
        a.run_to_quiescence(10_000);
        b.run_to_quiescence(10_000);
        assert_eq!(render_trace(a.trace()), render_trace(b.trace()));
        assert!(!a.trace().is_empty());
    }

    #[test]
    fn zero_workload_leaves_empty_journals() {
        let mut net = build_network(&star_scenario()).unwrap();
        net.run_to_quiescence(1000);
        assert!(net.nodes().all(|n| n.local_journal.is_empty()));
        assert!(net.trace().is_empty());
    }

    #[test]
    fn honest_network_converges() {
        let cfg = with_workload(star_scenario(), 10);
        let mut net = build_network(&cfg).unwrap();
        net.run_to_quiescence(10_000);
        let report = wysiwis_check(&net).unwrap();
        assert!(report.all_equal, "{report:?}");
        assert!(net.nodes().all(|n| n.local_journal.len() == 10));
    }

    #[test]
    fn mid_flight_check_is_not_quiescent() {
        let cfg = with_workload(star_scenario(), 3);
        let mut net = build_network(&cfg).unwrap();
        net.run(1); // drafts submitted, offers still in flight
        assert!(matches!(wysiwis_check(&net), Err(SimError::NotQuiescent(_))));
    }

    #[test]
    fn tampered_node_detected_and_contained() {
        let cfg = with_workload(star_scenario(), 5);
        let mut net = build_network(&cfg).unwrap();
        net.run_to_quiescence(10_000);
        net.inject_tamper(3, 2, TamperMutation::Amount(9_999)).unwrap();
        let sync_at = net.clock + 1;
        net.schedule_sync(sync_at, 4, 3).unwrap(); // honest r2 syncs from tampered r1
        let events = net.run_to_quiescence(100_000);
        assert!(events.iter().any(|e| e.kind == "tamper_detected"), "{events:?}");
        let report = wysiwis_check(&net).unwrap();
        assert!(report.honest_equal);
        assert!(!report.all_equal, "tamperer's head should diverge");
    }

    #[test]
    fn stub_mutation_goes_undetected() {
        let cfg = with_workload(star_scenario(), 5);
        let mut net = build_network(&cfg).unwrap();
        net.run_to_quiescence(10_000);
        net.inject_tamper(3, 2, TamperMutation::StubPayload(b"hidden".to_vec()))
            .unwrap();
        let sync_at = net.clock + 1;
        net.schedule_sync(sync_at, 4, 3).unwrap();
        let events = net.run_to_quiescence(100_000);
        assert!(!events.iter().any(|e| e.kind == "tamper_detected"), "{events:?}");
        let report = wysiwis_check(&net).unwrap();
        assert!(report.all_equal);
    }

    #[test]
    fn tamper_index_out_of_range() {
        let mut net = build_network(&star_scenario()).unwrap();
        assert!(matches!(
            net.inject_tamper(3, 0, TamperMutation::Amount(1)),
            Err(SimError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn star_with_central_validator_classifies() {
        let net = build_network(&star_scenario()).unwrap();
        let report = classify_topology(&net);
        assert!(report.has_decision_center);
        assert!(report.spof_nodes.contains(&0));
        assert!(report.is_distributed);
        assert!(!report.is_pure_p2p);
        assert!(report.hub_nodes.contains(&0));
    }

    #[test]
    fn complete_equipotent_graph_is_pure_p2p() {
        let nodes: Vec<NodeConfig> = (0..5)
            .map(|id| NodeConfig {
                id,
                role: Role::Replica,
                alias: format!("n{id}"),
                honest: true,
            })
            .collect();
        let mut edges = Vec::new();
        for a in 0..5u32 {
            for b in (a + 1)..5 {
                edges.push(EdgeConfig { a, b, latency: 1 });
            }
        }
        let cfg = ScenarioConfig {
            seed: 1,
            hub_threshold_factor: None,
            nodes,
            edges,
            workload: vec![],
            syncs: vec![],
        };
        let net = build_network(&cfg).unwrap();
        let report = classify_topology(&net);
        assert!(!report.has_decision_center);
        assert!(report.spof_nodes.is_empty());
        assert!(report.is_distributed);
        assert!(report.is_pure_p2p);
        assert!(report.hub_nodes.is_empty());
    }

    #[test]
    fn equipotent_mesh_with_hubs_is_not_pure_p2p() {
        // nodes 0 and 1 accumulate degree, the rest hang off them
        let nodes: Vec<NodeConfig> = (0..8)
            .map(|id| NodeConfig {
                id,
                role: Role::Replica,
                alias: format!("n{id}"),
                honest: true,
            })
            .collect();
        let mut edges = vec![EdgeConfig { a: 0, b: 1, latency: 1 }];
        for leaf in 2..8u32 {
            let hub = if leaf % 2 == 0 { 0 } else { 1 };
            edges.push(EdgeConfig { a: hub, b: leaf, latency: 1 });
        }
        let cfg = ScenarioConfig {
            seed: 1,
            hub_threshold_factor: None,
            nodes,
            edges,
            workload: vec![],
            syncs: vec![],
        };
        let net = build_network(&cfg).unwrap();
        let report = classify_topology(&net);
        assert!(report.is_distributed);
        assert!(!report.is_pure_p2p);
        assert_eq!(report.hub_nodes, BTreeSet::from([0, 1]));
    }

    #[test]
    fn scenario_toml_round_trip() {
        let cfg = with_workload(star_scenario(), 2);
        let text = cfg.to_toml();
        let parsed = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(parsed.nodes.len(), cfg.nodes.len());
        assert_eq!(parsed.workload.len(), 2);
    }
}
