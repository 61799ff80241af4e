//! Linearization-error scaling for the trained extractor and the
//! NTK-probe-versus-linear-probe risk comparison.

use rayon::prelude::*;

use satlab_core::mixtures::mix;
use satlab_core::models::{ComposedModel, Extractor, LinearHead};
use satlab_core::numeric::norm2;
use satlab_core::rng::{derive_seed, SplitMix64};
use satlab_core::training::pretrain;
use satlab_core::transfer::{linear_probe, linearization_error, ntk_probe, ProbeOptions};

use crate::config::NtkConfig;
use crate::error::CliResult;
use crate::outputs::{cell_f64, cell_usize, Csv, OutputSet};

fn unit_direction(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    let dir: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let nrm = norm2(&dir);
    dir.into_iter().map(|d| d / nrm).collect()
}

pub fn run(cfg: &NtkConfig) -> CliResult<OutputSet> {
    cfg.validate()?;
    let mixture = cfg.mixture.build()?;
    let merged = mix(&mixture)?;
    let arch = cfg.arch.build()?;
    let train = cfg.train.build()?;

    let trained = pretrain(&mixture, &arch, &train)?;
    let probe_points: Vec<Vec<f64>> = merged.points().iter().map(|p| p.features.clone()).collect();

    // A parameter-free extractor composed with a head is exactly linear in
    // its parameters; its rows calibrate the table's zero line.
    let linear_model = {
        let dim = merged.dim();
        let mut rng = SplitMix64::new(derive_seed(cfg.direction_seed, 7));
        let gamma: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        ComposedModel::new(
            Extractor::Identity(dim),
            LinearHead::new(gamma, rng.uniform(-0.5, 0.5)),
        )?
    };

    let mut csv = Csv::new(&["kind", "halving", "delta_norm", "max_error", "ratio"]);
    for (kind, model) in [("linear", &linear_model), ("mlp", &trained.model)] {
        let dir = unit_direction(model.param_count(), derive_seed(cfg.direction_seed, 0));
        let mut prev: Option<f64> = None;
        for halving in 0..=cfg.halvings {
            let norm = cfg.delta_norm / (1u64 << halving) as f64;
            let delta: Vec<f64> = dir.iter().map(|d| d * norm).collect();
            let err = linearization_error(model, &delta, &probe_points)?;
            // ratios of machine-epsilon errors carry no information
            let ratio = prev.filter(|_| kind == "mlp").map(|p| p / err);
            csv.row(&[
                kind.to_string(),
                cell_usize(halving),
                cell_f64(norm),
                cell_f64(err),
                ratio.map(cell_f64).unwrap_or_default(),
            ]);
            prev = Some(err);
        }
    }

    let opts = ProbeOptions::default();
    let rows: Vec<(usize, f64, f64)> = mixture
        .components()
        .par_iter()
        .enumerate()
        .map(|(i, target)| {
            let lin = linear_probe(&trained.model.extractor, target, None, &opts)?;
            let ntk = ntk_probe(&trained.model, target, &opts)?;
            Ok((i, lin.exact_risk, ntk.exact_risk))
        })
        .collect::<CliResult<_>>()?;
    let mut probes = Csv::new(&["target_id", "linear_probe_risk", "ntk_probe_risk"]);
    for (i, lin, ntk) in rows {
        probes.row(&[cell_usize(i), cell_f64(lin), cell_f64(ntk)]);
    }

    let mut outputs = OutputSet::new();
    outputs.insert("linearization.csv", csv.finish());
    outputs.insert("probe_comparison.csv", probes.finish());
    outputs.insert(
        "config_effective.json",
        serde_json::to_string_pretty(cfg).expect("serializable") + "\n",
    );
    Ok(outputs)
}
