//! Trains several model families on the same generated knowledge base and
//! compares raw, filtered and type-constrained link prediction, MAP, and
//! the HITS@10 breakdown by relation category.
//!
//! cargo run --release --example link_prediction

use relembed::eval::{EvalSetting, Evaluator};
use relembed::synthetic::{planted_clusters, PlantedConfig};
use relembed::train::{train, TrainConfig};
use relembed::{Hyperparams, ModelKind, ModelParams, Split};

fn main() -> anyhow::Result<()> {
    let store = planted_clusters(&PlantedConfig { entities: 60, clusters: 6, relations: 4, valid_fraction: 0.05, test_fraction: 0.15, seed: 2 })?;
    let kinds = [ModelKind::TransE, ModelKind::BilinearDiag, ModelKind::Bilinear, ModelKind::Ntn { slices: 2 }];
    for kind in kinds {
        let hyper = Hyperparams { entity_dim: 16, epochs: 60, ..Hyperparams::default() };
        let init = ModelParams::init_random(kind, hyper, store.num_entities(), store.num_relations())?;
        let (params, _) = train(&store, &TrainConfig::default(), init)?;
        let ev = Evaluator::new(&params, &store)?;
        println!("== {kind}");
        for setting in [
            EvalSetting::raw(),
            EvalSetting::default(),
            EvalSetting { type_constrained: true, ..EvalSetting::default() },
        ] {
            let r = ev.evaluate(Split::Test, &setting)?;
            println!("{:28} MRR {:.3}  HITS@10 {:6.2}", setting.label(), r.mrr, r.hits_at(10).unwrap_or(0.0));
        }
        println!("MAP (type-constrained) {:.2}", ev.mean_average_precision(Split::Test).map);
        let report = ev.evaluate(Split::Test, &EvalSetting::default())?.with_categories(&store, None)?;
        if let Some(table) = &report.categories {
            println!("category-weighted HITS@10 {:.2}", table.weighted_mean());
        }
    }
    Ok(())
}
