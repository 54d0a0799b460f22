//! Component-lesion runs: train each pruned variant under one config and
//! report with the same schema as every other run.

use gamr::{build_variant, Ablation, GamrConfig, VariantKind};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::config::TrainConfig;
use crate::data::SvrtData;
use crate::parallel::parallel_map;
use crate::report::Report;
use crate::train::train_svrt;
use crate::HarnessError;

/// The five prunable components, by their architectural names.
pub fn ablation_components() -> [(&'static str, Ablation); 5] {
    [
        ("out", Ablation::NoOut),
        ("w_t", Ablation::NoWt),
        ("all_obj", Ablation::NoAllObj),
        ("g", Ablation::NoG),
        ("iNorm", Ablation::NoINorm),
    ]
}

pub fn parse_component(name: &str) -> Option<Ablation> {
    ablation_components()
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, a)| *a)
}

/// One training run per (component, task); reports share the common schema.
pub fn ablate(
    components: &[Ablation],
    datasets: &[SvrtData],
    gcfg: &GamrConfig,
    cfg: &TrainConfig,
    workers: usize,
) -> Result<Vec<Report>, HarnessError> {
    let jobs: Vec<(Ablation, usize)> = components
        .iter()
        .flat_map(|&c| (0..datasets.len()).map(move |i| (c, i)))
        .collect();
    let runs = parallel_map(jobs, workers, &|(component, di)| {
        let kind = VariantKind::Ablated(component);
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        let model = build_variant(kind, &mut rng, gcfg, 1);
        train_svrt(&model, &kind.to_string(), &datasets[di], cfg)
    });
    runs.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_names_resolve() {
        assert_eq!(parse_component("w_t"), Some(Ablation::NoWt));
        assert_eq!(parse_component("iNorm"), Some(Ablation::NoINorm));
        assert_eq!(parse_component("lstm"), None);
        assert_eq!(ablation_components().len(), 5);
    }
}
