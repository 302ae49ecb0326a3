//! Run metrics and their CSV renderings.
//!
//! Definitions:
//! * publisher load — the publisher-served share of all delivered request
//!   instances: content segments delivered from a publisher (rather than a
//!   cache) plus protocol/key-request round trips, which by construction are
//!   always publisher-served. "High publisher load implies low cache hit";
//!   a no-caching scheme measures exactly 100%.
//! * timeout ratio — percentage of issued interest packets (content and
//!   protocol, including retransmissions) that timed out and were
//!   retransmitted.
//! * average download time — mean seconds from request issue at the gateway
//!   to the last segment delivery, over completed requests.

use crate::config::SimConfig;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RouterCounters {
    pub interests_in: u64,
    pub cs_hits: u64,
    pub cs_insertions: u64,
    pub cs_evictions: u64,
    pub data_in: u64,
    pub pit_aggregations: u64,
    pub drops_malformed: u64,
    pub drops_no_route: u64,
    pub drops_unsolicited: u64,
}

/// Terminal state of one content-segment request instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resolution {
    Pending,
    FromCache,
    FromPublisher,
    Failed,
}

#[derive(Clone, Debug, Default)]
pub struct RunMetrics {
    pub scheme: String,
    pub weaken: String,
    pub seed: u64,
    pub cache_bytes: u64,
    pub churn_rate: f64,
    pub h_fraction: f64,

    pub avg_download_time_s: f64,
    pub publisher_load_pct: f64,
    pub timeout_ratio_pct: f64,

    pub requests_total: u64,
    pub requests_completed: u64,
    pub requests_failed: u64,
    pub requests_pending: u64,

    pub content_instances: u64,
    pub instances_from_cache: u64,
    pub instances_from_publisher: u64,
    pub instances_failed: u64,
    pub instances_pending: u64,
    pub instances_reached_publisher: u64,
    pub protocol_instances: u64,
    pub protocol_instances_reached: u64,

    pub interest_packets: u64,
    pub timeout_events: u64,

    pub cache_hit_count: u64,
    pub first_interest_cache_hits: u64,

    pub protocol_runs_started: u64,
    pub protocol_runs_completed: u64,
    pub rekey_messages: u64,
    pub epoch_refetches: u64,
    pub key_requests: u64,

    pub partial: bool,
    pub per_router: Vec<RouterCounters>,
}

impl RunMetrics {
    pub fn finalize(&mut self, cfg: &SimConfig, download_sum_s: f64) {
        self.scheme = cfg.scheme.as_str().to_string();
        self.weaken = cfg.weaken.as_str().to_string();
        self.seed = cfg.seed;
        self.cache_bytes = cfg.cache.capacity_bytes;
        self.churn_rate = cfg.scheme_params.churn_rate;
        self.h_fraction = cfg.scheme_params.h_fraction;
        self.avg_download_time_s = if self.requests_completed > 0 {
            download_sum_s / self.requests_completed as f64
        } else {
            f64::NAN
        };
        let delivered =
            self.instances_from_publisher + self.instances_from_cache + self.protocol_instances_reached;
        let from_pub = self.instances_from_publisher + self.protocol_instances_reached;
        self.publisher_load_pct = if delivered > 0 {
            100.0 * from_pub as f64 / delivered as f64
        } else {
            0.0
        };
        self.timeout_ratio_pct = if self.interest_packets > 0 {
            100.0 * self.timeout_events as f64 / self.interest_packets as f64
        } else {
            0.0
        };
        self.partial = self.requests_pending > 0 || self.instances_pending > 0;
    }

    /// Interest conservation: every instance ends in exactly one bucket.
    pub fn conservation_holds(&self) -> bool {
        self.content_instances
            == self.instances_from_cache
                + self.instances_from_publisher
                + self.instances_failed
                + self.instances_pending
    }

    pub fn metrics_csv_header() -> &'static str {
        "scheme,weaken,seed,cache_bytes,churn_rate,h_fraction,avg_download_time_s,\
         publisher_load_pct,timeout_ratio_pct,requests_total,requests_completed,\
         requests_failed,requests_pending,content_instances,instances_from_cache,\
         instances_from_publisher,instances_failed,instances_pending,\
         instances_reached_publisher,protocol_instances,protocol_instances_reached,\
         interest_packets,timeout_events,cache_hit_count,\
         first_interest_cache_hits,protocol_runs_started,protocol_runs_completed,\
         rekey_messages,epoch_refetches,key_requests,partial"
    }

    /// Deterministic per-run metrics row (no wall-clock fields).
    pub fn metrics_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{:.4},{:.4},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scheme,
            self.weaken,
            self.seed,
            self.cache_bytes,
            self.churn_rate,
            self.h_fraction,
            self.avg_download_time_s,
            self.publisher_load_pct,
            self.timeout_ratio_pct,
            self.requests_total,
            self.requests_completed,
            self.requests_failed,
            self.requests_pending,
            self.content_instances,
            self.instances_from_cache,
            self.instances_from_publisher,
            self.instances_failed,
            self.instances_pending,
            self.instances_reached_publisher,
            self.protocol_instances,
            self.protocol_instances_reached,
            self.interest_packets,
            self.timeout_events,
            self.cache_hit_count,
            self.first_interest_cache_hits,
            self.protocol_runs_started,
            self.protocol_runs_completed,
            self.rekey_messages,
            self.epoch_refetches,
            self.key_requests,
            self.partial,
        )
    }

    pub fn router_csv(&self) -> String {
        let mut out = String::from(
            "router,interests_in,cs_hits,cs_insertions,cs_evictions,data_in,\
             pit_aggregations,drops_malformed,drops_no_route,drops_unsolicited\n",
        );
        for (i, r) in self.per_router.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                i,
                r.interests_in,
                r.cs_hits,
                r.cs_insertions,
                r.cs_evictions,
                r.data_in,
                r.pit_aggregations,
                r.drops_malformed,
                r.drops_no_route,
                r.drops_unsolicited
            ));
        }
        out
    }
}
