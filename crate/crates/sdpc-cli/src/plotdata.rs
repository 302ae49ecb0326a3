//! Figure pivots: tidy `(x, series, seed, y)` tables matching each figure's
//! axes, regenerated byte-identically from the same results file.

use std::collections::BTreeSet;

use anyhow::{bail, Result};

use crate::results::ResultRow;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// Average download delay vs cache size, all schemes.
    Fig5,
    /// Average download delay vs h-label fraction: ndn, sdpc, mcac.
    Fig6,
    /// Publisher load vs cache size: sdpc, eu-re, mcac.
    Fig7,
    /// Timeout interest ratio vs cache size: sdpc, eu-re, mcac.
    Fig8,
}

impl Figure {
    pub fn parse(s: &str) -> Option<Figure> {
        Some(match s {
            "fig5" => Figure::Fig5,
            "fig6" => Figure::Fig6,
            "fig7" => Figure::Fig7,
            "fig8" => Figure::Fig8,
            _ => return None,
        })
    }
}

fn groupkey_case(churn: f64) -> String {
    match churn as u32 {
        5 => "groupkey-case1".to_string(),
        15 => "groupkey-case2".to_string(),
        25 => "groupkey-case3".to_string(),
        _ => format!("groupkey-churn{churn}"),
    }
}

/// Series name a row belongs to, per figure; None = row not used.
fn series_of(fig: Figure, row: &ResultRow) -> Option<String> {
    if row.weaken != "none" {
        return None;
    }
    // The cache-size figures pin the label-based baseline to its 20%
    // h-level setup; h is the x axis only in fig6.
    let mcac_at_default_h = row.scheme != "mcac" || (row.h_fraction - 0.2).abs() < 1e-9;
    match fig {
        Figure::Fig5 => match row.scheme.as_str() {
            "sdpc" | "ndn-e2e" | "eu-re" => Some(row.scheme.clone()),
            "mcac" if mcac_at_default_h => Some(row.scheme.clone()),
            "ndn-groupkey" => Some(groupkey_case(row.churn_rate)),
            _ => None,
        },
        Figure::Fig6 => match row.scheme.as_str() {
            "ndn-plain" => Some("ndn".to_string()),
            "sdpc" | "mcac" => Some(row.scheme.clone()),
            _ => None,
        },
        Figure::Fig7 | Figure::Fig8 => match row.scheme.as_str() {
            "sdpc" | "eu-re" => Some(row.scheme.clone()),
            "mcac" if mcac_at_default_h => Some(row.scheme.clone()),
            _ => None,
        },
    }
}

fn y_of(fig: Figure, row: &ResultRow) -> f64 {
    match fig {
        Figure::Fig5 | Figure::Fig6 => row.avg_download_time_s,
        Figure::Fig7 => row.publisher_load_pct,
        Figure::Fig8 => row.timeout_ratio_pct,
    }
}

/// Builds the tidy pivot. Every (x, series) combination must be present for
/// every seed seen in the relevant rows; gaps are reported explicitly.
pub fn pivot(fig: Figure, rows: &[ResultRow]) -> Result<String> {
    // fig6 is drawn at one fixed cache size; pin it to the cache the plain
    // control ran at so cache-sweep rows of other figures cannot leak in.
    let fig6_cache: Option<u64> = if fig == Figure::Fig6 {
        let mut counts: std::collections::BTreeMap<u64, usize> = Default::default();
        for row in rows.iter().filter(|r| r.scheme == "ndn-plain") {
            *counts.entry(row.cache_bytes).or_default() += 1;
        }
        counts
            .into_iter()
            .max_by_key(|&(cache, n)| (n, std::cmp::Reverse(cache)))
            .map(|(cache, _)| cache)
    } else {
        None
    };
    // (x, series, seed) -> y; later rows win (append-only file semantics).
    let mut cells: std::collections::BTreeMap<(String, String, u64), f64> =
        std::collections::BTreeMap::new();
    let mut xs: BTreeSet<String> = BTreeSet::new();
    let mut seeds: BTreeSet<u64> = BTreeSet::new();
    let mut serieses: BTreeSet<String> = BTreeSet::new();
    for row in rows {
        if let Some(cache) = fig6_cache {
            if row.cache_bytes != cache {
                continue;
            }
        }
        let Some(series) = series_of(fig, row) else {
            continue;
        };
        let x = match fig {
            Figure::Fig6 => format!("{}", row.h_fraction),
            _ => format!("{}", row.cache_bytes),
        };
        // Constant-in-x series of fig6 (ndn, sdpc) are replicated over the
        // mcac x grid below; record them under their own h value for now.
        cells.insert((x.clone(), series.clone(), row.seed), y_of(fig, row));
        seeds.insert(row.seed);
        serieses.insert(series);
        if fig != Figure::Fig6 || row.scheme == "mcac" {
            xs.insert(x);
        }
    }
    if cells.is_empty() {
        bail!(
            "results contain no rows for this figure; required columns: scheme, \
             cache_bytes, churn_rate, h_fraction, seed plus the metric column"
        );
    }
    let mut missing: Vec<String> = Vec::new();
    let mut out = String::from("x,series,seed,y\n");
    for x in &xs {
        for series in &serieses {
            for &seed in &seeds {
                let y = cells.get(&(x.clone(), series.clone(), seed)).or_else(|| {
                    // fig6: schemes that do not vary in x contribute their
                    // single row at every x.
                    if fig == Figure::Fig6 && series != "mcac" {
                        cells
                            .iter()
                            .find(|((_, s, sd), _)| s == series && *sd == seed)
                            .map(|(_, y)| y)
                    } else {
                        None
                    }
                });
                match y {
                    Some(y) => out.push_str(&format!("{x},{series},{seed},{y:.6}\n")),
                    None => missing.push(format!("x={x} series={series} seed={seed}")),
                }
            }
        }
    }
    if !missing.is_empty() {
        bail!(
            "missing sweep points ({} gaps):\n  {}",
            missing.len(),
            missing.join("\n  ")
        );
    }
    Ok(out)
}
