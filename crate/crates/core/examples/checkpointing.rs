//! Trains with periodic checkpoints, reloads the final one, checks that it
//! scores identically and that it refuses a different vocabulary.
//!
//! cargo run --example checkpointing

use relembed::checkpoint::{load_checkpoint, load_checkpoint_for, save_checkpoint};
use relembed::scoring::score;
use relembed::synthetic::{planted_clusters, random_kb, PlantedConfig};
use relembed::train::{train_with_observer, TrainConfig};
use relembed::{Hyperparams, ModelKind, ModelParams};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let store = planted_clusters(&PlantedConfig::default())?;
    let hyper = Hyperparams { entity_dim: 10, epochs: 9, seed: 21, ..Hyperparams::default() };
    let init = ModelParams::init_random(ModelKind::BilinearDiag, hyper, store.num_entities(), store.num_relations())?;
    let config = TrainConfig { checkpoint_every: Some(3), ..TrainConfig::default() };

    let (params, trace) = train_with_observer(&store, &config, init, |event| {
        if event.checkpoint_due {
            let path = dir.path().join(format!("epoch{}.ckpt", event.stats.epoch));
            save_checkpoint(event.params, store.vocab(), event.stats.epoch, &path)?;
            println!("epoch {}: loss {:.4}, saved {}", event.stats.epoch, event.stats.mean_loss, path.display());
        }
        Ok(())
    })?;
    print!("{trace}");

    let last = load_checkpoint_for(dir.path().join("epoch9.ckpt"), store.vocab())?;
    println!("header: {}", serde_json::to_string(&last.header)?);
    let same = store.iter().all(|t| score(&last.params, t).to_bits() == score(&params, t).to_bits());
    println!("reloaded model scores identically: {same}");

    let other = random_kb(30, 5, 100, 1)?;
    match load_checkpoint_for(dir.path().join("epoch9.ckpt"), other.vocab()) {
        Ok(_) => println!("unexpected: checkpoint accepted a different vocabulary"),
        Err(e) => println!("different vocabulary rejected: {e}"),
    }
    let early = load_checkpoint(dir.path().join("epoch3.ckpt"))?;
    println!("epoch-3 checkpoint records {} completed epochs", early.header.epochs_completed);
    Ok(())
}
