use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envs::env::{rollout, Env};
use crate::envs::mdp::{MdpSpec, Policy, Transition};
use crate::error::{Error, Result};
use crate::records::{self, Header};
use crate::rng;

/// `N` logged trajectories of exactly `T` transitions each.
#[derive(Clone, Debug, PartialEq)]
pub struct OfflineDataset {
    pub trajectories: Vec<Vec<Transition>>,
    pub meta: DatasetMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub spec_hash: String,
    pub policy_id: String,
    pub seed: u64,
    pub n: usize,
    pub t: usize,
}

/// One line of the dataset file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub traj_id: usize,
    pub t: usize,
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
    pub terminal: bool,
}

/// Roll out `n` trajectories of length `t` under `behavior`. Trajectory `i`
/// draws from its own stream `(seed, "offline", i)`.
pub fn generate_offline(
    spec: &MdpSpec,
    behavior: &Policy,
    policy_id: &str,
    n: usize,
    t: usize,
    seed: u64,
) -> Result<OfflineDataset> {
    if n == 0 || t == 0 {
        return Err(Error::Config("offline dataset needs N >= 1 and T >= 1".into()));
    }
    let mut env = Env::new(spec.clone());
    let trajectories = (0..n)
        .map(|i| {
            let mut r = rng::stream(seed, "offline", i as u64);
            rollout(&mut env, behavior, t, &mut r).map(|tr| tr.transitions)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OfflineDataset {
        trajectories,
        meta: DatasetMeta {
            spec_hash: spec.content_hash(),
            policy_id: policy_id.to_string(),
            seed,
            n,
            t,
        },
    })
}

impl OfflineDataset {
    pub fn len(&self) -> usize {
        self.trajectories.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every transition in (trajectory, time) order.
    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.trajectories.iter().flatten()
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut p = path.as_os_str().to_owned();
        p.push(".meta.json");
        PathBuf::from(p)
    }

    /// Write transition records to `path` and the metadata to `<path>.meta.json`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let records: Vec<TransitionRecord> = self
            .trajectories
            .iter()
            .enumerate()
            .flat_map(|(i, tr)| {
                tr.iter().enumerate().map(move |(t, x)| TransitionRecord {
                    traj_id: i,
                    t,
                    s: x.state,
                    a: x.action,
                    r: x.reward,
                    s_next: x.next_state,
                    terminal: x.terminal,
                })
            })
            .collect();
        let header = Header::new("offline_dataset", &self.meta.spec_hash);
        records::write_records(path, &header, &records)?;
        std::fs::write(Self::sidecar_path(path), serde_json::to_vec_pretty(&self.meta)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let meta: DatasetMeta = serde_json::from_slice(&std::fs::read(Self::sidecar_path(path))?)?;
        let (_, records): (_, Vec<TransitionRecord>) = records::read_records(path)?;
        let mut trajectories = vec![Vec::with_capacity(meta.t); meta.n];
        for r in records {
            let traj = trajectories.get_mut(r.traj_id).ok_or(Error::Index {
                what: "trajectory",
                value: r.traj_id,
                bound: meta.n,
            })?;
            traj.push(Transition {
                state: r.s,
                action: r.a,
                reward: r.r,
                next_state: r.s_next,
                terminal: r.terminal,
            });
        }
        if trajectories.iter().any(|t| t.len() != meta.t) {
            return Err(Error::Incompatible("trajectory lengths disagree with metadata".into()));
        }
        Ok(Self { trajectories, meta })
    }
}
