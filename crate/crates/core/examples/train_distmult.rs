//! Trains DistMult on a small knowledge base with planted cluster
//! structure and compares filtered HITS@1 before and after training.
//!
//! cargo run --release --example train_distmult -- [epochs] [dim]

use relembed::eval::{EvalSetting, Evaluator};
use relembed::synthetic::{planted_clusters, PlantedConfig};
use relembed::train::{train, TrainConfig};
use relembed::{Hyperparams, ModelKind, ModelParams, Split};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let dim: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);

    let store = planted_clusters(&PlantedConfig::default())?;
    println!("{}", store.stats());

    let hyper = Hyperparams {
        entity_dim: dim,
        epochs,
        ..Hyperparams::default()
    };
    let init = ModelParams::init_random(ModelKind::BilinearDiag, hyper, store.num_entities(), store.num_relations())?;
    let setting = EvalSetting {
        hits_k: vec![1, 10],
        ..EvalSetting::default()
    };
    let before = Evaluator::new(&init, &store)?.evaluate(Split::Test, &setting)?;

    let (trained, trace) = train(&store, &TrainConfig::default(), init)?;
    for stats in trace.epochs.iter().filter(|s| s.epoch % 20 == 0 || s.epoch == 1) {
        println!("epoch {:4}  mean loss {:.5}  active {:.3}", stats.epoch, stats.mean_loss, stats.active_fraction());
    }
    let after = Evaluator::new(&trained, &store)?.evaluate(Split::Test, &setting)?;

    println!("untrained:\n{before}");
    println!("trained:\n{after}");
    Ok(())
}
