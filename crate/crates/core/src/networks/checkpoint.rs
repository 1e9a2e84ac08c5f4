use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::ParamStore;
use crate::error::{Error, Result};
use crate::networks::{ConditionalArch, ConditionalNet, QuantileArch, QuantileNetwork};
use crate::records::FORMAT_VERSION;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Quantile(QuantileArch),
    Conditional(ConditionalArch),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavedNetwork {
    pub role: String,
    pub architecture: Architecture,
    pub params: ParamStore,
}

/// JSON checkpoint: named networks with their architectures. Floats are
/// written in shortest round-trip form, so loading reproduces every bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config_hash: String,
    pub step: u64,
    pub networks: Vec<SavedNetwork>,
}

impl Checkpoint {
    pub fn new(config_hash: impl Into<String>, step: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            config_hash: config_hash.into(),
            step,
            networks: Vec::new(),
        }
    }

    pub fn with_quantile(mut self, role: &str, net: &QuantileNetwork) -> Self {
        self.networks.push(SavedNetwork {
            role: role.into(),
            architecture: Architecture::Quantile(net.arch),
            params: net.params.clone(),
        });
        self
    }

    pub fn with_conditional(mut self, role: &str, net: &ConditionalNet) -> Self {
        self.networks.push(SavedNetwork {
            role: role.into(),
            architecture: Architecture::Conditional(net.arch),
            params: net.params.clone(),
        });
        self
    }

    fn find(&self, role: &str) -> Result<&SavedNetwork> {
        self.networks
            .iter()
            .find(|n| n.role == role)
            .ok_or_else(|| Error::Incompatible(format!("checkpoint has no `{role}` network")))
    }

    pub fn quantile(&self, role: &str) -> Result<QuantileNetwork> {
        match self.find(role)? {
            SavedNetwork {
                architecture: Architecture::Quantile(arch),
                params,
                ..
            } => Ok(QuantileNetwork {
                arch: *arch,
                params: params.clone(),
            }),
            _ => Err(Error::Incompatible(format!("`{role}` is not a quantile network"))),
        }
    }

    pub fn conditional(&self, role: &str) -> Result<ConditionalNet> {
        match self.find(role)? {
            SavedNetwork {
                architecture: Architecture::Conditional(arch),
                params,
                ..
            } => Ok(ConditionalNet {
                arch: *arch,
                params: params.clone(),
            }),
            _ => Err(Error::Incompatible(format!("`{role}` is not a conditional network"))),
        }
    }

    pub fn has(&self, role: &str) -> bool {
        self.networks.iter().any(|n| n.role == role)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        let ck: Checkpoint = serde_json::from_reader(BufReader::new(file))?;
        if ck.format_version != FORMAT_VERSION {
            return Err(Error::Incompatible(format!(
                "checkpoint format version {} (expected {FORMAT_VERSION})",
                ck.format_version
            )));
        }
        Ok(ck)
    }
}
