//! Versioned text checkpoints.
//!
//! ```text
//! BCEPP_CHECKPOINT v1
//! model.kind=linear
//! model.hidden=
//! model.input_dim=17
//! features.pool=4
//! features.mean=<comma-separated hex f64 bits, empty for none>
//! features.scale=<same>
//! config.hash=<sha256 of the canonical TrainConfig>
//! config.loss=bce-pp
//! ...
//! params=<count>
//! <one parameter per line, as 16 hex digits of its IEEE-754 bits>
//! ```

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

use super::model::{FeatureSpec, Model, ModelKind, ModelSpec, Standardizer};
use super::train::TrainConfig;

const MAGIC: &str = "BCEPP_CHECKPOINT v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub features: FeatureSpec,
    pub scaler: Standardizer,
    pub config: TrainConfig,
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let spec = self.model.spec();
        let hidden: Vec<String> = spec.hidden_sizes.iter().map(|h| h.to_string()).collect();
        let mut out = format!("{MAGIC}\n");
        out.push_str(&format!("model.kind={}\n", spec.kind));
        out.push_str(&format!("model.hidden={}\n", hidden.join(",")));
        out.push_str(&format!("model.input_dim={}\n", spec.input_dim));
        out.push_str(&format!("features.pool={}\n", self.features.pool));
        out.push_str(&format!("features.mean={}\n", hex_list(&self.scaler.mean)));
        out.push_str(&format!(
            "features.scale={}\n",
            hex_list(&self.scaler.scale)
        ));
        out.push_str(&format!("config.hash={}\n", self.config.hash()));
        for line in self.config.canonical().lines() {
            out.push_str(&format!("config.{line}\n"));
        }
        out.push_str(&format!("params={}\n", self.model.params().len()));
        for p in self.model.params() {
            out.push_str(&format!("{}\n", hex(*p)));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(Error::Parse(format!(
                "checkpoint must start with {MAGIC:?}"
            )));
        }
        let mut kv = HashMap::new();
        let mut n_params = None;
        for line in lines.by_ref() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad checkpoint line {line:?}")))?;
            if k == "params" {
                n_params = Some(parse::<usize>("params", v)?);
                break;
            }
            kv.insert(k.to_string(), v.to_string());
        }
        let n_params = n_params.ok_or_else(|| Error::Parse("missing params section".into()))?;
        let params = lines
            .take(n_params)
            .map(unhex)
            .collect::<Result<Vec<_>>>()?;
        if params.len() != n_params {
            return Err(Error::Parse(format!(
                "expected {n_params} parameters, found {}",
                params.len()
            )));
        }

        let get = |k: &str| {
            kv.get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::Parse(format!("checkpoint missing {k}")))
        };
        let hidden = get("model.hidden")?;
        let spec = ModelSpec {
            kind: get("model.kind")?.parse::<ModelKind>()?,
            hidden_sizes: if hidden.is_empty() {
                Vec::new()
            } else {
                hidden
                    .split(',')
                    .map(|h| parse("model.hidden", h))
                    .collect::<Result<_>>()?
            },
            input_dim: parse("model.input_dim", get("model.input_dim")?)?,
        };
        let config = TrainConfig {
            loss_kind: get("config.loss")?.parse()?,
            initial_lr: parse("config.lr", get("config.lr")?)?,
            weight_decay: parse("config.weight_decay", get("config.weight_decay")?)?,
            batch_size: parse("config.batch_size", get("config.batch_size")?)?,
            alpha: parse("config.alpha", get("config.alpha")?)?,
            epochs: parse("config.epochs", get("config.epochs")?)?,
            seed: parse("config.seed", get("config.seed")?)?,
            threshold: get("config.threshold")?.parse()?,
        };
        let stored_hash = get("config.hash")?;
        if stored_hash != config.hash() {
            return Err(Error::Parse(format!(
                "config hash mismatch: stored {stored_hash}, computed {}",
                config.hash()
            )));
        }
        Ok(Checkpoint {
            model: Model::from_params(spec, params)?,
            features: FeatureSpec {
                pool: parse("features.pool", get("features.pool")?)?,
            },
            scaler: Standardizer {
                mean: unhex_list(get("features.mean")?)?,
                scale: unhex_list(get("features.scale")?)?,
            },
            config,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn unhex(s: &str) -> Result<f64> {
    u64::from_str_radix(s.trim(), 16)
        .map(f64::from_bits)
        .map_err(|e| Error::Parse(format!("parameter {s:?}: {e}")))
}

fn hex_list(v: &[f64]) -> String {
    v.iter().map(|x| hex(*x)).collect::<Vec<_>>().join(",")
}

fn unhex_list(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(unhex).collect()
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e| Error::Parse(format!("{key}: {e}")))
}
