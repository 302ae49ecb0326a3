//! Quick end-to-end run of every scheme at the default desk configuration.
//!
//! Usage: `cargo run --release -p icn-sim --example smoke`

use std::time::Instant;

use icn_sim::{SchemeKind, SimConfig};

fn main() {
    println!(
        "{:<13} {:>9} {:>8} {:>7} {:>6} {:>6} {:>10} {:>8}",
        "scheme", "dl_s", "load%", "to%", "done", "fail", "cache_hits", "wall"
    );
    for scheme in [
        SchemeKind::Sdpc,
        SchemeKind::NdnE2e,
        SchemeKind::NdnPlain,
        SchemeKind::NdnGroupKey,
        SchemeKind::Mcac,
        SchemeKind::EuRe,
    ] {
        let mut cfg = SimConfig::desk(scheme, 1, 500_000_000);
        if scheme == SchemeKind::NdnGroupKey || scheme == SchemeKind::EuRe {
            cfg.scheme_params.churn_rate = 15.0;
        }
        let started = Instant::now();
        let out = icn_sim::run(cfg);
        let m = &out.metrics;
        assert!(m.conservation_holds());
        println!(
            "{:<13} {:>9.3} {:>8.2} {:>7.2} {:>6} {:>6} {:>10} {:>7.0?}",
            m.scheme,
            m.avg_download_time_s,
            m.publisher_load_pct,
            m.timeout_ratio_pct,
            m.requests_completed,
            m.requests_failed,
            m.cache_hit_count,
            started.elapsed()
        );
    }
}
