//! Initializes entity rows from pre-trained vectors: whole-entity vectors
//! (looked up through a name map) and averages of word vectors.
//!
//! cargo run --example pretrained_init

use std::collections::HashMap;
use std::io::Cursor;
use std::path::PathBuf;

use relembed::data::Interner;
use relembed::params::{entity_words, PretrainedVectors};
use relembed::{Activation, Hyperparams, ModelKind, ModelParams};

fn main() -> anyhow::Result<()> {
    let names: Interner = ["/m/0sf", "san_francisco", "new_york_city", "qwzx"].into_iter().collect();
    let hyper = Hyperparams { entity_dim: 3, activation: Activation::Tanh, ..Hyperparams::default() };

    // word2vec text format: optional "count dim" header, then token and values
    let entity_file = "2 3\nparis 0.1 0.2 0.3\nlondon -0.3 0.1 0.0\n";
    let entity_vectors = PretrainedVectors::parse(Cursor::new(entity_file), PathBuf::from("<entity vectors>"))?;
    let map: HashMap<String, String> = [("/m/0sf".to_string(), "paris".to_string())].into();
    let mut params = ModelParams::init_random(ModelKind::BilinearDiag, hyper.clone(), names.len(), 1)?;
    let n = params.init_from_entity_vectors(&names, &entity_vectors, Some(&map))?;
    println!("entity-vector init: {n} of {} entities; row 0 = {}", names.len(), params.entity(0));

    let word_file = "san 1 0 0\nfrancisco 0 1 0\nnew 0 0 1\nyork 1 1 1\ncity 0 0 0\n";
    let words = PretrainedVectors::parse(Cursor::new(word_file), PathBuf::from("<word vectors>"))?;
    let mut params = ModelParams::init_random(ModelKind::BilinearDiag, hyper, names.len(), 1)?;
    let report = params.init_word_averaged(&names, &words, None)?;
    println!("word-averaged init: {report:?}");
    for (id, name) in names.iter() {
        println!("{name:16} words {:?} -> {}", entity_words(name), params.entity(id));
    }
    Ok(())
}
