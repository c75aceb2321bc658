//! Trains TransE and DistMult, lists each relation's nearest relations in
//! parameter space and exports the relation table as TSV.
//!
//! cargo run --release --example relation_neighbors

use relembed::analysis::{export_embeddings, nearest_relations_named, read_exported, ExportTarget};
use relembed::synthetic::{planted_clusters, PlantedConfig};
use relembed::train::{train, TrainConfig};
use relembed::{Hyperparams, ModelKind, ModelParams};

fn main() -> anyhow::Result<()> {
    let store = planted_clusters(&PlantedConfig { relations: 6, ..PlantedConfig::default() })?;
    let vocab = store.vocab();
    for kind in [ModelKind::TransE, ModelKind::BilinearDiag] {
        let hyper = Hyperparams { entity_dim: 12, epochs: 40, ..Hyperparams::default() };
        let init = ModelParams::init_random(kind, hyper, store.num_entities(), store.num_relations())?;
        let (params, _) = train(&store, &TrainConfig::default(), init)?;
        println!("== {kind}");
        for (r, name) in vocab.relations.iter() {
            let near: Vec<String> = nearest_relations_named(&params, vocab, r, 3)?
                .into_iter()
                .map(|(other, d)| format!("{other} ({d:.2})"))
                .collect();
            println!("{name}: {}", near.join(", "));
        }
        let dir = tempfile::tempdir()?;
        let path = dir.path().join("relations.tsv");
        export_embeddings(&params, vocab, ExportTarget::Relations, &path)?;
        println!("exported {} relation rows", read_exported(&path)?.len());
    }
    Ok(())
}
