//! Small generated knowledge bases for smoke tests and examples.

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Triplet, TripletStore, Vocabulary};
use crate::error::Result;

/// Parameters of [`planted_clusters`].
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedConfig {
    pub entities: usize,
    pub clusters: usize,
    pub relations: usize,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            entities: 50,
            clusters: 10,
            relations: 5,
            valid_fraction: 0.0,
            test_fraction: 0.1,
            seed: 1,
        }
    }
}

/// Cluster that relation `r` links cluster `c` to: itself for relation 0,
/// `(r - c) mod clusters` otherwise. Every map is an involution, so each
/// relation is symmetric.
pub fn partner_cluster(r: usize, c: usize, clusters: usize) -> usize {
    if r == 0 {
        c
    } else {
        (r % clusters + clusters - c) % clusters
    }
}

/// A knowledge base with planted block structure.
///
/// Entity `e` belongs to cluster `e % clusters`. Relation `r` holds for
/// every ordered pair `(x, y)` with `cluster(y) = partner_cluster(r,
/// cluster(x))`, self pairs included, so relation 0 is block-diagonal.
/// The pairs are shuffled and split into train, valid and test.
pub fn planted_clusters(config: &PlantedConfig) -> Result<TripletStore> {
    let mut vocab = Vocabulary::new();
    for e in 0..config.entities {
        vocab.entities.intern(&format!("e{e}"));
    }
    for r in 0..config.relations {
        vocab.relations.intern(&format!("r{r}"));
    }
    let cluster = |e: usize| e % config.clusters;
    let mut all = Vec::new();
    for r in 0..config.relations {
        for x in 0..config.entities {
            let target = partner_cluster(r, cluster(x), config.clusters);
            for y in (0..config.entities).filter(|&y| cluster(y) == target) {
                all.push(Triplet::new(x, r, y));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    all.shuffle(&mut rng);
    let n_test = (all.len() as f64 * config.test_fraction).round() as usize;
    let n_valid = (all.len() as f64 * config.valid_fraction).round() as usize;
    let test = all.split_off(all.len() - n_test);
    let valid = all.split_off(all.len() - n_valid);
    TripletStore::new(vocab, all, valid, test)
}

/// A knowledge base of uniformly random distinct triplets, split roughly
/// 70/10/20 into train, valid and test. Every split is nonempty when
/// `triplets >= 10`.
pub fn random_kb(entities: usize, relations: usize, triplets: usize, seed: u64) -> Result<TripletStore> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab = Vocabulary::new();
    for e in 0..entities {
        vocab.entities.intern(&format!("e{e}"));
    }
    for r in 0..relations {
        vocab.relations.intern(&format!("r{r}"));
    }
    let capacity = entities * entities * relations;
    let target = triplets.min(capacity);
    let mut seen = std::collections::HashSet::new();
    let mut all = Vec::with_capacity(target);
    while all.len() < target {
        let t = Triplet::new(
            rng.random_range(0..entities),
            rng.random_range(0..relations),
            rng.random_range(0..entities),
        );
        if seen.insert(t) {
            all.push(t);
        }
    }
    let n_test = (all.len() / 5).max(1);
    let n_valid = (all.len() / 10).max(1);
    let test = all.split_off(all.len() - n_test);
    let valid = all.split_off(all.len() - n_valid);
    TripletStore::new(vocab, all, valid, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_relations_are_symmetric() {
        let store = planted_clusters(&PlantedConfig::default()).unwrap();
        for t in store.iter() {
            assert!(store.contains(&Triplet::new(t.object, t.relation, t.subject)));
        }
        // 5 relations x 50 subjects x 5 partners each
        assert_eq!(store.len(), 5 * 50 * 5);
        assert_eq!(store.test().len(), 125);
    }

    #[test]
    fn partner_is_an_involution() {
        for r in 0..7 {
            for c in 0..10 {
                assert_eq!(partner_cluster(r, partner_cluster(r, c, 10), 10), c);
            }
        }
    }

    #[test]
    fn random_kb_is_reproducible() {
        let a = random_kb(12, 3, 60, 4).unwrap();
        let b = random_kb(12, 3, 60, 4).unwrap();
        assert_eq!(a.train(), b.train());
        assert_eq!(a.len(), 60);
        assert!(!a.valid().is_empty() && !a.test().is_empty());
    }
}
