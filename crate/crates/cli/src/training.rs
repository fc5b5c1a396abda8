use anyhow::{Context, Result};
use bornprec::fields::RngState;
use bornprec::problems::{InstanceFamily, ProblemInstance, SplitProblem};
use bornprec::train::{train_map, LossKind, ProbeDistribution, TrainConfig, TrainResult};

use crate::settings::TRAIN_STREAM;

/// The `samples` training instances of `family` under `root`.
pub fn training_instances(family: &InstanceFamily, root: &RngState, samples: usize) -> Result<Vec<ProblemInstance>> {
    let stream = root.split(TRAIN_STREAM);
    (0..samples as u64)
        .map(|i| family.instance(&stream, i).with_context(|| format!("training instance {i}")))
        .collect()
}

/// Trains a Fourier-diagonal map on white-noise probes over the training instances.
pub fn train_on_family(
    kind: LossKind,
    family: &InstanceFamily,
    root: &RngState,
    config: &TrainConfig,
    samples: usize,
) -> Result<TrainResult> {
    if samples == 0 {
        anyhow::bail!("at least one training instance is required");
    }
    let instances = training_instances(family, root, samples)?;
    let problems: Vec<&dyn SplitProblem> = instances.iter().map(|i| i.problem.as_split()).collect();
    let probes = ProbeDistribution::white_noise(config.batch);
    train_map(kind, &problems, &probes, config).with_context(|| format!("training the {} map", kind.name()))
}
