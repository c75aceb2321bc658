use std::collections::HashMap;

use ndarray::{Array1, ArrayView1};

use super::{ModelParams, PretrainedVectors};
use crate::data::Interner;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Lower-cased words of an entity name, split on `_` and whitespace.
pub fn entity_words(name: &str) -> Vec<String> {
    name.split(|c: char| c == '_' || c.is_whitespace())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordInitReport {
    /// Entities whose row was replaced by a word average.
    pub entities_initialized: usize,
    /// Distinct words found in the vector file.
    pub words_found: usize,
    /// Distinct words given a random vector.
    pub words_missing: usize,
}

impl ModelParams {
    fn check_vector_dim(&self, vectors: &PretrainedVectors) -> Result<()> {
        if vectors.dim() != self.entity_dim() {
            return Err(Error::Config(format!(
                "pre-trained vectors have dimension {} but entity_dim is {}; \
                 set the entity dimension to the vector dimension",
                vectors.dim(),
                self.entity_dim()
            )));
        }
        Ok(())
    }

    fn set_entity_row(&mut self, e: usize, values: ArrayView1<'_, f64>) {
        let normalize = self.hyper.normalizes_entities();
        let mut row = self.entities.row_mut(e);
        row.assign(&values);
        if normalize {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|x| x / norm);
            }
        }
    }

    /// Copies pre-trained entity vectors into the table.
    ///
    /// Entity `e` looks up `token_map[name(e)]`, or its own name when the map
    /// has no entry. Rows are scaled to unit length unless the projection is
    /// `tanh`; entities without a vector keep their current row. Returns the
    /// number of rows replaced.
    pub fn init_from_entity_vectors(
        &mut self,
        entities: &Interner,
        vectors: &PretrainedVectors,
        token_map: Option<&HashMap<String, String>>,
    ) -> Result<usize> {
        self.check_vector_dim(vectors)?;
        let mut count = 0;
        for (e, name) in entities.iter() {
            let token = token_map
                .and_then(|m| m.get(name))
                .map(String::as_str)
                .unwrap_or(name);
            if let Some(v) = vectors.get(token) {
                self.set_entity_row(e, ArrayView1::from(v));
                count += 1;
            }
        }
        Ok(count)
    }

    /// Sets each entity row to the mean of its word vectors.
    ///
    /// Words come from `display_names[name(e)]` (or the entity name itself)
    /// via [`entity_words`]. Words missing from `vectors` get one random
    /// vector each, drawn on first use and reused after. Entities with no
    /// words keep their current row.
    pub fn init_word_averaged(
        &mut self,
        entities: &Interner,
        vectors: &PretrainedVectors,
        display_names: Option<&HashMap<String, String>>,
    ) -> Result<WordInitReport> {
        self.check_vector_dim(vectors)?;
        let n = self.entity_dim();
        let bound = self.hyper.init_bound();
        let mut rng = rng::generator(self.hyper.seed, Stream::WordVectors);
        let mut random_words: HashMap<String, Array1<f64>> = HashMap::new();
        let mut found_words: HashMap<String, ()> = HashMap::new();
        let mut report = WordInitReport::default();
        for (e, name) in entities.iter() {
            let display = display_names
                .and_then(|m| m.get(name))
                .map(String::as_str)
                .unwrap_or(name);
            let words = entity_words(display);
            if words.is_empty() {
                continue;
            }
            let mut sum = Array1::<f64>::zeros(n);
            for w in &words {
                match vectors.get(w) {
                    Some(v) => {
                        sum += &ArrayView1::from(v);
                        found_words.insert(w.clone(), ());
                    }
                    None => {
                        let v = random_words.entry(w.clone()).or_insert_with(|| {
                            Array1::from_shape_fn(n, |_| rng::uniform_symmetric(&mut rng, bound))
                        });
                        sum += &*v;
                    }
                }
            }
            sum /= words.len() as f64;
            self.set_entity_row(e, sum.view());
            report.entities_initialized += 1;
        }
        report.words_found = found_words.len();
        report.words_missing = random_words.len();
        Ok(report)
    }
}
