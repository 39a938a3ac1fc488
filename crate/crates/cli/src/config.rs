//! Flat `key=value` configuration, overridable from the command line and
//! echoed into every output header.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use tgalab::SearchBudget;

const KEYS: &[&str] = &[
    "basis",
    "blocks",
    "exhaustive_signs_max",
    "experiment",
    "m_max",
    "p",
    "q",
    "seed",
    "trials",
    "window",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub basis: String,
    pub p: f64,
    pub q: f64,
    pub m_max: usize,
    pub seed: u64,
    pub trials: usize,
    pub exhaustive_signs_max: usize,
    /// Coefficient window for the perturbed basis.
    pub window: usize,
    /// Number of blocks for the blockwise basis.
    pub blocks: usize,
}

pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key=value, got {line:?}", i + 1);
        };
        let k = k.trim().replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            bail!("config line {}: unknown key {k:?}", i + 1);
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

fn default_basis(experiment: &str) -> &'static str {
    match experiment {
        "perturbed-growth" => "perturbed",
        "blockwise-growth" => "blockwise",
        "diamond-conditionality" => "diamond",
        _ => "kt",
    }
}

impl ExperimentConfig {
    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(
        experiment: &str,
        file: Option<&Path>,
        flags: &[(&str, Option<String>)],
    ) -> Result<Self> {
        let mut kv = BTreeMap::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            kv = parse_kv(&text)?;
        }
        for (k, v) in flags {
            if let Some(v) = v {
                kv.insert(k.to_string(), v.clone());
            }
        }
        kv.insert("experiment".into(), experiment.into());
        let get = |k: &str| kv.get(k).map(String::as_str);
        fn num<T: std::str::FromStr>(key: &str, v: Option<&str>, default: T) -> Result<T> {
            match v {
                None => Ok(default),
                Some(s) => s
                    .parse()
                    .map_err(|_| anyhow::anyhow!("bad value {s:?} for {key}")),
            }
        }
        let p = num("p", get("p"), 2.0)?;
        let defaults = SearchBudget::default();
        Ok(ExperimentConfig {
            experiment: experiment.into(),
            basis: get("basis").unwrap_or(default_basis(experiment)).into(),
            p,
            q: num("q", get("q"), p)?,
            m_max: num("m_max", get("m_max"), 60)?,
            seed: num("seed", get("seed"), defaults.seed)?,
            trials: num("trials", get("trials"), defaults.trials)?,
            exhaustive_signs_max: num(
                "exhaustive_signs_max",
                get("exhaustive_signs_max"),
                defaults.exhaustive_signs_max,
            )?,
            window: num("window", get("window"), 1 << 14)?,
            blocks: num("blocks", get("blocks"), 10)?,
        })
    }

    pub fn budget(&self) -> SearchBudget {
        SearchBudget {
            seed: self.seed,
            trials: self.trials,
            exhaustive_signs_max: self.exhaustive_signs_max,
            ..SearchBudget::default()
        }
    }

    /// The effective configuration as `# key=value` lines, sorted by key.
    pub fn header(&self) -> Vec<String> {
        let mut kv = BTreeMap::new();
        kv.insert("basis", self.basis.clone());
        kv.insert("blocks", self.blocks.to_string());
        kv.insert(
            "exhaustive_signs_max",
            self.exhaustive_signs_max.to_string(),
        );
        kv.insert("experiment", self.experiment.clone());
        kv.insert("m_max", self.m_max.to_string());
        kv.insert("p", self.p.to_string());
        kv.insert("q", self.q.to_string());
        kv.insert("seed", self.seed.to_string());
        kv.insert("trials", self.trials.to_string());
        kv.insert("window", self.window.to_string());
        kv.into_iter().map(|(k, v)| format!("# {k}={v}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        std::fs::write(&path, "# comment\np = 3\nseed=5\n").unwrap();
        let c = ExperimentConfig::resolve(
            "kt-growth",
            Some(&path),
            &[("seed", Some("9".into())), ("q", None)],
        )
        .unwrap();
        assert_eq!((c.p, c.q, c.seed), (3.0, 3.0, 9));
        assert!(c.header().contains(&"# seed=9".to_string()));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(parse_kv("colour=blue").is_err());
        assert!(parse_kv("p 2").is_err());
    }
}
