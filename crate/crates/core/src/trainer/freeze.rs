use crate::autodiff::ParamStore;
use crate::error::{Error, Result};

/// Per-parameter trainable flags with the named layers switched off.
pub fn trainable_mask(params: &ParamStore, frozen_layers: &[String], what: &str) -> Result<Vec<bool>> {
    for layer in frozen_layers {
        if !(0..params.len()).any(|i| params.layer_of(i) == layer) {
            let known: Vec<&str> = (0..params.len()).map(|i| params.layer_of(i)).collect();
            return Err(Error::Config(format!(
                "{what} has no layer `{layer}` to freeze (layers: {})",
                dedup(known).join(", ")
            )));
        }
    }
    Ok((0..params.len())
        .map(|i| !frozen_layers.iter().any(|l| l == params.layer_of(i)))
        .collect())
}

fn dedup(mut v: Vec<&str>) -> Vec<&str> {
    v.dedup();
    v
}
