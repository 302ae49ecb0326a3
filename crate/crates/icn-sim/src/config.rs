//! Experiment configuration: a TOML document with one block per concern.
//! Every field has a documented default and every field echoes into output
//! rows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    /// Per-segment key chains with the hybrid naming scheme.
    #[serde(rename = "sdpc")]
    Sdpc,
    /// Native NDN scenario 1: end-to-end encryption, consumer-unique names.
    #[serde(rename = "ndn-e2e")]
    NdnE2e,
    /// Native NDN scenario 2: shared group key with rekeying on churn.
    #[serde(rename = "ndn-groupkey")]
    NdnGroupKey,
    /// Plain NDN with no content protection (attack-control scheme).
    #[serde(rename = "ndn-plain")]
    NdnPlain,
    /// Label-based flow control with TCB processing at routers.
    #[serde(rename = "mcac")]
    Mcac,
    /// Re-encryption-style access control: per-object key requests to the
    /// publisher, asymmetric cost charged there.
    #[serde(rename = "eu-re")]
    EuRe,
}

impl SchemeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::Sdpc => "sdpc",
            SchemeKind::NdnE2e => "ndn-e2e",
            SchemeKind::NdnGroupKey => "ndn-groupkey",
            SchemeKind::NdnPlain => "ndn-plain",
            SchemeKind::Mcac => "mcac",
            SchemeKind::EuRe => "eu-re",
        }
    }

    pub fn parse(s: &str) -> Option<SchemeKind> {
        Some(match s {
            "sdpc" => SchemeKind::Sdpc,
            "ndn-e2e" => SchemeKind::NdnE2e,
            "ndn-groupkey" => SchemeKind::NdnGroupKey,
            "ndn-plain" => SchemeKind::NdnPlain,
            "mcac" => SchemeKind::Mcac,
            "eu-re" => SchemeKind::EuRe,
            _ => return None,
        })
    }
}

/// Deliberate weakenings used as attack controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Weaken {
    #[default]
    #[serde(rename = "none")]
    None,
    /// Segment names carry the plaintext object path.
    #[serde(rename = "plain-names")]
    PlainNames,
    /// Segment payloads are stored unencrypted.
    #[serde(rename = "plain-payloads")]
    PlainPayloads,
    /// The adversary is handed the grant for its target object.
    #[serde(rename = "leak-keymsg")]
    LeakKeyMsg,
    /// The manager's registration table degrades to a linear scan.
    #[serde(rename = "linear-registry")]
    LinearRegistry,
}

impl Weaken {
    pub fn as_str(&self) -> &'static str {
        match self {
            Weaken::None => "none",
            Weaken::PlainNames => "plain-names",
            Weaken::PlainPayloads => "plain-payloads",
            Weaken::LeakKeyMsg => "leak-keymsg",
            Weaken::LinearRegistry => "linear-registry",
        }
    }

    pub fn parse(s: &str) -> Option<Weaken> {
        Some(match s {
            "none" => Weaken::None,
            "plain-names" => Weaken::PlainNames,
            "plain-payloads" => Weaken::PlainPayloads,
            "leak-keymsg" => Weaken::LeakKeyMsg,
            "linear-registry" => Weaken::LinearRegistry,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyCfg {
    /// Cache routers in the scale-free core.
    pub n_routers: usize,
    /// Barabási–Albert attachment parameter.
    pub ba_m: usize,
    /// Publishers, attached to the highest-betweenness routers.
    pub n_publishers: usize,
    /// Gateway routers fronting the consumer space.
    pub n_gateways: usize,
    /// Link capacity between cache routers, bits per second.
    pub link_bps: u64,
    /// Fixed per-hop propagation delay, milliseconds.
    pub prop_delay_ms: f64,
}

impl Default for TopologyCfg {
    fn default() -> Self {
        TopologyCfg {
            n_routers: 50,
            ba_m: 2,
            n_publishers: 5,
            n_gateways: 10,
            link_bps: 1_000_000_000,
            prop_delay_ms: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatalogCfg {
    pub items_per_publisher: usize,
    pub segments_per_item: u32,
    pub segment_bytes: u64,
    pub zipf_alpha: f64,
}

impl Default for CatalogCfg {
    fn default() -> Self {
        CatalogCfg {
            items_per_publisher: 1000,
            segments_per_item: 10,
            segment_bytes: 1_000_000,
            zipf_alpha: 0.7,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CacheCfg {
    /// Content-store capacity per router, bytes.
    pub capacity_bytes: u64,
    /// Replacement policy: "lfru", "lru", or "lfu".
    pub policy: String,
    /// Fraction of capacity given to the privileged (LRU) partition.
    pub privileged_fraction: f64,
}

impl Default for CacheCfg {
    fn default() -> Self {
        CacheCfg {
            // 1% of the default 50 GB catalog.
            capacity_bytes: 500_000_000,
            policy: "lfru".to_string(),
            privileged_fraction: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadCfg {
    /// Request arrival rate per gateway, requests per second.
    pub lambda_per_gateway: f64,
    pub consumers_per_gateway: usize,
    /// Requests are generated during [0, gen_window_s).
    pub gen_window_s: f64,
    /// Hard stop; pending requests at this point flag the run partial.
    pub horizon_s: f64,
    /// Interest timeout floor (the timeout is 4x estimated path RTT with
    /// this floor), seconds.
    pub timeout_floor_s: f64,
    /// Retransmissions before a segment counts as failed.
    pub max_retransmissions: u32,
}

impl Default for WorkloadCfg {
    fn default() -> Self {
        WorkloadCfg {
            lambda_per_gateway: 20.0,
            consumers_per_gateway: 20,
            gen_window_s: 5.0,
            horizon_s: 300.0,
            timeout_floor_s: 2.0,
            max_retransmissions: 3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeCfg {
    /// Join/leave events per simulated second (group-key rekey rate; leave
    /// events drive key revocation in the re-encryption baseline).
    pub churn_rate: f64,
    /// Fraction of catalog objects labeled h (never cached) under mcac.
    pub h_fraction: f64,
    /// Per-router TCB processing delay for h/n packets, milliseconds.
    pub tcb_delay_ms: f64,
    /// Symmetric per-segment processing cost, microseconds.
    pub sym_op_cost_us: f64,
    /// Asymmetric operation cost as a multiple of the symmetric cost.
    pub asym_cost_ratio: f64,
    /// Publisher waits this long for the final challenge response before
    /// marking a ticket stolen, seconds.
    pub stolen_ticket_deadline_s: f64,
    /// Edge-router re-encryption delay per content segment in the
    /// re-encryption baseline, milliseconds.
    pub reencrypt_delay_ms: f64,
}

impl Default for SchemeCfg {
    fn default() -> Self {
        SchemeCfg {
            churn_rate: 0.0,
            h_fraction: 0.2,
            tcb_delay_ms: 0.5,
            sym_op_cost_us: 1.0,
            asym_cost_ratio: 3000.0,
            stolen_ticket_deadline_s: 5.0,
            reencrypt_delay_ms: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepCfg {
    /// Cache sizes to sweep; empty means "use cache.capacity_bytes".
    pub cache_bytes: Vec<u64>,
    /// Seeds to sweep; empty means "use the top-level seed".
    pub seeds: Vec<u64>,
    /// Churn rates to sweep (group-key cases).
    pub churn_rates: Vec<f64>,
    /// h-label fractions to sweep (mcac).
    pub h_fractions: Vec<f64>,
    /// Schemes to sweep; empty means "use the top-level scheme".
    pub schemes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub seed: u64,
    pub scheme: SchemeKind,
    pub weaken: Weaken,
    pub topology: TopologyCfg,
    pub catalog: CatalogCfg,
    pub cache: CacheCfg,
    pub workload: WorkloadCfg,
    pub scheme_params: SchemeCfg,
    pub sweep: SweepCfg,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            scheme: SchemeKind::Sdpc,
            weaken: Weaken::None,
            topology: TopologyCfg::default(),
            catalog: CatalogCfg::default(),
            cache: CacheCfg::default(),
            workload: WorkloadCfg::default(),
            scheme_params: SchemeCfg::default(),
            sweep: SweepCfg::default(),
        }
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<SimConfig, ConfigError> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<SimConfig, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// The desk-scale configuration the acceptance experiments run at.
    pub fn desk(scheme: SchemeKind, seed: u64, cache_bytes: u64) -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.seed = seed;
        cfg.scheme = scheme;
        cfg.cache.capacity_bytes = cache_bytes;
        cfg
    }

    /// Total catalog bytes across all publishers.
    pub fn catalog_bytes(&self) -> u64 {
        self.topology.n_publishers as u64
            * self.catalog.items_per_publisher as u64
            * self.catalog.segments_per_item as u64
            * self.catalog.segment_bytes
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.topology;
        let fail = |m: String| Err(ConfigError::Invalid(m));
        if t.ba_m < 1 || t.n_routers <= t.ba_m {
            return fail(format!(
                "topology.n_routers ({}) must exceed topology.ba_m ({}) >= 1",
                t.n_routers, t.ba_m
            ));
        }
        if t.n_publishers == 0 || t.n_publishers > t.n_routers {
            return fail(format!(
                "topology.n_publishers ({}) must be in 1..=n_routers",
                t.n_publishers
            ));
        }
        if t.n_gateways == 0 || t.n_gateways > t.n_routers - t.n_publishers.min(t.n_routers) {
            return fail(format!(
                "topology.n_gateways ({}) must be in 1..=(n_routers - n_publishers)",
                t.n_gateways
            ));
        }
        if t.link_bps == 0 {
            return fail("topology.link_bps must be > 0".into());
        }
        if self.catalog.items_per_publisher == 0
            || self.catalog.segments_per_item == 0
            || self.catalog.segment_bytes == 0
        {
            return fail("catalog.* fields must be > 0".into());
        }
        if self.catalog.zipf_alpha < 0.0 {
            return fail("catalog.zipf_alpha must be >= 0".into());
        }
        match self.cache.policy.as_str() {
            "lfru" | "lru" | "lfu" => {}
            other => return fail(format!("cache.policy: unknown policy {other:?}")),
        }
        if !(0.0..=1.0).contains(&self.cache.privileged_fraction) {
            return fail("cache.privileged_fraction must be in [0, 1]".into());
        }
        if self.workload.lambda_per_gateway <= 0.0 {
            return fail("workload.lambda_per_gateway must be > 0".into());
        }
        if self.workload.consumers_per_gateway == 0 {
            return fail("workload.consumers_per_gateway must be > 0".into());
        }
        if self.workload.gen_window_s <= 0.0 || self.workload.horizon_s < self.workload.gen_window_s
        {
            return fail("workload.horizon_s must be >= gen_window_s > 0".into());
        }
        if !(0.0..=1.0).contains(&self.scheme_params.h_fraction) {
            return fail("scheme_params.h_fraction must be in [0, 1]".into());
        }
        if self.scheme_params.churn_rate < 0.0 {
            return fail("scheme_params.churn_rate must be >= 0".into());
        }
        Ok(())
    }
}
