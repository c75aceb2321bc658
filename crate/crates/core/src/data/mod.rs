//! Triplet datasets: vocabularies, splits, frequency filtering, relation
//! categories and entity-type constraints.

mod categories;
mod store;
mod type_index;
mod vocab;

pub use categories::{
    classify_relations, RelationCategory, RelationCategoryTable, DEFAULT_CATEGORY_THRESHOLD,
};
pub use store::{load_triplets, RelationCount, Split, StoreStats, Triplet, TripletStore};
pub use type_index::{build_type_index, TypeConstraintIndex};
pub use vocab::{Interner, Vocabulary};
