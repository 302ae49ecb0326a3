//! Append-only results file: one row per completed run, every configuration
//! field echoed so each number is fully attributable. The first column is a
//! header-version tag so mixed-schema files are caught instead of silently
//! misread.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use icn_sim::{RunMetrics, SimConfig};

pub const SCHEMA_VERSION: &str = "v1";

pub const HEADER: &str = "schema,scheme,weaken,cache_bytes,churn_rate,h_fraction,seed,\
n_routers,ba_m,n_publishers,n_gateways,link_bps,prop_delay_ms,\
items_per_publisher,segments_per_item,segment_bytes,zipf_alpha,\
cache_policy,privileged_fraction,lambda_per_gateway,consumers_per_gateway,\
gen_window_s,horizon_s,timeout_floor_s,max_retransmissions,\
tcb_delay_ms,sym_op_cost_us,asym_cost_ratio,stolen_ticket_deadline_s,reencrypt_delay_ms,\
avg_download_time_s,publisher_load_pct,timeout_ratio_pct,cache_hit_count,\
first_interest_cache_hits,requests_completed,requests_failed,requests_pending,\
partial,runtime_s";

#[derive(Clone, Debug)]
pub struct ResultRow {
    pub scheme: String,
    pub weaken: String,
    pub cache_bytes: u64,
    pub churn_rate: f64,
    pub h_fraction: f64,
    pub seed: u64,
    pub avg_download_time_s: f64,
    pub publisher_load_pct: f64,
    pub timeout_ratio_pct: f64,
    pub partial: bool,
    pub runtime_s: f64,
    rendered: String,
}

impl ResultRow {
    pub fn new(cfg: &SimConfig, metrics: &RunMetrics, runtime_s: f64) -> ResultRow {
        let mut s = String::new();
        let t = &cfg.topology;
        let c = &cfg.catalog;
        let w = &cfg.workload;
        let p = &cfg.scheme_params;
        write!(
            s,
            "{SCHEMA_VERSION},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{:.4},{:.4},{},{},{},{},{},{},{:.3}",
            metrics.scheme,
            metrics.weaken,
            cfg.cache.capacity_bytes,
            p.churn_rate,
            p.h_fraction,
            cfg.seed,
            t.n_routers,
            t.ba_m,
            t.n_publishers,
            t.n_gateways,
            t.link_bps,
            t.prop_delay_ms,
            c.items_per_publisher,
            c.segments_per_item,
            c.segment_bytes,
            c.zipf_alpha,
            cfg.cache.policy,
            cfg.cache.privileged_fraction,
            w.lambda_per_gateway,
            w.consumers_per_gateway,
            w.gen_window_s,
            w.horizon_s,
            w.timeout_floor_s,
            w.max_retransmissions,
            p.tcb_delay_ms,
            p.sym_op_cost_us,
            p.asym_cost_ratio,
            p.stolen_ticket_deadline_s,
            p.reencrypt_delay_ms,
            metrics.avg_download_time_s,
            metrics.publisher_load_pct,
            metrics.timeout_ratio_pct,
            metrics.cache_hit_count,
            metrics.first_interest_cache_hits,
            metrics.requests_completed,
            metrics.requests_failed,
            metrics.requests_pending,
            metrics.partial,
            runtime_s,
        )
        .unwrap();
        ResultRow {
            scheme: metrics.scheme.clone(),
            weaken: metrics.weaken.clone(),
            cache_bytes: cfg.cache.capacity_bytes,
            churn_rate: p.churn_rate,
            h_fraction: p.h_fraction,
            seed: cfg.seed,
            avg_download_time_s: metrics.avg_download_time_s,
            publisher_load_pct: metrics.publisher_load_pct,
            timeout_ratio_pct: metrics.timeout_ratio_pct,
            partial: metrics.partial,
            runtime_s,
            rendered: s,
        }
    }

    pub fn rendered(&self) -> &str {
        &self.rendered
    }

    /// Parses one data row of a results file (header and schema verified by
    /// the caller).
    pub fn parse(line: &str) -> Result<ResultRow> {
        let fields: Vec<&str> = line.split(',').collect();
        let expect = HEADER.split(',').count();
        if fields.len() != expect {
            bail!("row has {} fields, expected {expect}: {line:?}", fields.len());
        }
        if fields[0] != SCHEMA_VERSION {
            bail!("row schema {} does not match {SCHEMA_VERSION}", fields[0]);
        }
        let f = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .with_context(|| format!("field {i} ({})", fields[i]))
        };
        Ok(ResultRow {
            scheme: fields[1].to_string(),
            weaken: fields[2].to_string(),
            cache_bytes: fields[3].parse()?,
            churn_rate: f(4)?,
            h_fraction: f(5)?,
            seed: fields[6].parse()?,
            avg_download_time_s: f(30)?,
            publisher_load_pct: f(31)?,
            timeout_ratio_pct: f(32)?,
            partial: fields[38] == "true",
            runtime_s: f(39)?,
            rendered: line.to_string(),
        })
    }
}

/// Appends rows, creating the file with a header when absent; an existing
/// file must carry the expected header.
pub fn append_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut content = String::new();
    if path.exists() {
        let existing = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let first = existing.lines().next().unwrap_or("");
        if first != HEADER {
            bail!(
                "{} exists with an unexpected header; refusing to append",
                path.display()
            );
        }
        content.push_str(&existing);
        if !content.ends_with('\n') && !content.is_empty() {
            content.push('\n');
        }
    } else {
        content.push_str(HEADER);
        content.push('\n');
    }
    for row in rows {
        content.push_str(row.rendered());
        content.push('\n');
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != HEADER {
        bail!("{} does not start with the expected header", path.display());
    }
    lines.map(ResultRow::parse).collect()
}
