//! Chain persistence: a columnar CSV of iterations plus a JSON sidecar with
//! the seed, configuration echo, and acceptance rates.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use bkmr_core::sampler::{AcceptanceStats, ChainRecord, McmcConfig, PosteriorChain};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainMetadata {
    pub seed: u64,
    pub config: McmcConfig,
    pub acceptance: AcceptanceStats,
    pub names: Vec<String>,
    pub n_beta: usize,
}

/// Writes one row per iteration: `iteration, beta_*, sigma2, lambda,
/// r_<metal>..., delta_<metal>...`.
pub fn write_chain(csv_path: &Path, meta_path: &Path, chain: &PosteriorChain) -> Result<()> {
    let n_beta = chain.records.first().map_or(0, |r| r.beta.len());
    let mut out = String::from("iteration");
    for j in 0..n_beta {
        out.push_str(&format!(",beta_{j}"));
    }
    out.push_str(",sigma2,lambda");
    for name in &chain.names {
        out.push_str(&format!(",r_{name}"));
    }
    for name in &chain.names {
        out.push_str(&format!(",delta_{name}"));
    }
    out.push('\n');
    for (it, rec) in chain.records.iter().enumerate() {
        out.push_str(&format!("{it}"));
        for b in &rec.beta {
            out.push_str(&format!(",{b}"));
        }
        out.push_str(&format!(",{},{}", rec.sigma2, rec.lambda));
        for r in &rec.r {
            out.push_str(&format!(",{r}"));
        }
        for d in &rec.delta {
            out.push_str(if *d { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    fs::write(csv_path, out.as_bytes())
        .with_context(|| format!("writing chain {}", csv_path.display()))?;

    let meta = ChainMetadata {
        seed: chain.config.seed,
        config: chain.config.clone(),
        acceptance: chain.acceptance,
        names: chain.names.clone(),
        n_beta,
    };
    fs::write(meta_path, serde_json::to_string_pretty(&meta)?.as_bytes())
        .with_context(|| format!("writing chain metadata {}", meta_path.display()))?;
    Ok(())
}

/// Reads a chain written by [`write_chain`].
pub fn read_chain(csv_path: &Path, meta_path: &Path) -> Result<PosteriorChain> {
    let meta_text = fs::read_to_string(meta_path)
        .with_context(|| format!("reading chain metadata {}", meta_path.display()))?;
    let meta: ChainMetadata = serde_json::from_str(&meta_text)
        .with_context(|| format!("parsing chain metadata {}", meta_path.display()))?;
    let text = fs::read_to_string(csv_path)
        .with_context(|| format!("reading chain {}", csv_path.display()))?;
    let mut lines = text.lines();
    let _header = lines.next().ok_or_else(|| anyhow!("chain csv is empty"))?;
    let m = meta.names.len();
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = 1 + meta.n_beta + 2 + 2 * m;
        if fields.len() != expected {
            bail!(
                "chain csv line {}: {} fields, expected {expected}",
                lineno + 2,
                fields.len()
            );
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| anyhow!("chain csv line {}: {e}", lineno + 2))
        };
        let mut idx = 1;
        let mut beta = Vec::with_capacity(meta.n_beta);
        for _ in 0..meta.n_beta {
            beta.push(parse(fields[idx])?);
            idx += 1;
        }
        let sigma2 = parse(fields[idx])?;
        let lambda = parse(fields[idx + 1])?;
        idx += 2;
        let mut r = Vec::with_capacity(m);
        for _ in 0..m {
            r.push(parse(fields[idx])?);
            idx += 1;
        }
        let mut delta = Vec::with_capacity(m);
        for _ in 0..m {
            delta.push(fields[idx] == "1");
            idx += 1;
        }
        records.push(ChainRecord {
            beta,
            sigma2,
            lambda,
            r,
            delta,
        });
    }
    Ok(PosteriorChain {
        records,
        acceptance: meta.acceptance,
        config: meta.config,
        names: meta.names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use bkmr_core::dataset::{ExposureDataset, Stratum};
    use bkmr_core::linalg::Matrix;
    use bkmr_core::sampler::fit;

    #[test]
    fn chain_round_trip_preserves_values() {
        let n = 12;
        let z = Matrix::from_rows(
            &(0..n)
                .map(|i| vec![i as f64 * 0.3, (i as f64 * 0.7).sin().abs()])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).sin()).collect();
        let data = ExposureDataset::new(
            z,
            Matrix::zeros(n, 0),
            Some(y),
            vec![Stratum::Female; n],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let config = McmcConfig::with_iterations(120, 5);
        let chain = fit(&data, &config).unwrap();

        let dir = std::env::temp_dir().join("bkmr-chain-tests");
        fs::create_dir_all(&dir).unwrap();
        let csv = dir.join("chain.csv");
        let meta = dir.join("chain_meta.json");
        write_chain(&csv, &meta, &chain).unwrap();
        let back = read_chain(&csv, &meta).unwrap();
        assert_eq!(back.records, chain.records);
        assert_eq!(back.acceptance, chain.acceptance);
        assert_eq!(back.config, chain.config);
    }
}
