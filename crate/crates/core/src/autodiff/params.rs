use serde::{Deserialize, Serialize};

use crate::autodiff::{Array, Graph, Var};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedParam {
    pub name: String,
    pub value: Array,
}

/// Ordered collection of named parameter arrays. Names look like `layer0.weight`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    entries: Vec<NamedParam>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Array) -> usize {
        self.entries.push(NamedParam {
            name: name.into(),
            value,
        });
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NamedParam> {
        self.entries.iter()
    }

    pub fn get(&self, index: usize) -> &Array {
        &self.entries[index].value
    }

    pub fn get_mut(&mut self, index: usize) -> &mut Array {
        &mut self.entries[index].value
    }

    pub fn name(&self, index: usize) -> &str {
        &self.entries[index].name
    }

    pub fn by_name(&self, name: &str) -> Option<&Array> {
        self.entries.iter().find(|p| p.name == name).map(|p| &p.value)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|p| p.name == name)
    }

    /// Layer prefix of a parameter name (`layer0.weight` -> `layer0`).
    pub fn layer_of(&self, index: usize) -> &str {
        let name = self.name(index);
        name.split('.').next().unwrap_or(name)
    }

    /// Record every parameter as a leaf: trainable params or plain constants.
    pub fn bind(&self, graph: &mut Graph, trainable: bool) -> Vec<Var> {
        self.entries
            .iter()
            .map(|p| {
                if trainable {
                    graph.param(p.value.clone())
                } else {
                    graph.constant(p.value.clone())
                }
            })
            .collect()
    }

    /// Overwrite this store's values from `other`; names and shapes must agree.
    pub fn copy_from(&mut self, other: &ParamStore) -> Result<()> {
        self.check_compatible(other)?;
        for (dst, src) in self.entries.iter_mut().zip(&other.entries) {
            dst.value = src.value.clone();
        }
        Ok(())
    }

    pub fn check_compatible(&self, other: &ParamStore) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::Incompatible(format!(
                "parameter count {} vs {}",
                self.entries.len(),
                other.entries.len()
            )));
        }
        for (a, b) in self.entries.iter().zip(&other.entries) {
            if a.name != b.name || a.value.shape() != b.value.shape() {
                return Err(Error::Incompatible(format!(
                    "parameter `{}` {:?} vs `{}` {:?}",
                    a.name,
                    a.value.shape(),
                    b.name,
                    b.value.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn global_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|p| p.value.values().iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}
