use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::store::{Triplet, TripletStore};
use crate::error::{Error, Result};

/// Default cut-off on the mean counterpart count.
pub const DEFAULT_CATEGORY_THRESHOLD: f64 = 1.5;

/// Mapping property of a relation. `OneToMany` means one subject relates to
/// many objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RelationCategory {
    OneToOne,
    OneToMany,
    ManyToOne,
    ManyToMany,
}

impl RelationCategory {
    pub const ALL: [RelationCategory; 4] = [
        RelationCategory::OneToOne,
        RelationCategory::OneToMany,
        RelationCategory::ManyToOne,
        RelationCategory::ManyToMany,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RelationCategory::OneToOne => "1-to-1",
            RelationCategory::OneToMany => "1-to-n",
            RelationCategory::ManyToOne => "n-to-1",
            RelationCategory::ManyToMany => "n-to-n",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn from_averages(objects_per_subject: f64, subjects_per_object: f64, threshold: f64) -> Self {
        match (objects_per_subject >= threshold, subjects_per_object >= threshold) {
            (false, false) => RelationCategory::OneToOne,
            (true, false) => RelationCategory::OneToMany,
            (false, true) => RelationCategory::ManyToOne,
            (true, true) => RelationCategory::ManyToMany,
        }
    }
}

impl fmt::Display for RelationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationCategoryTable {
    pub threshold: f64,
    pub categories: Vec<RelationCategory>,
    /// Mean number of distinct objects per subject, per relation.
    pub objects_per_subject: Vec<f64>,
    /// Mean number of distinct subjects per object, per relation.
    pub subjects_per_object: Vec<f64>,
}

impl RelationCategoryTable {
    pub fn category(&self, relation: usize) -> RelationCategory {
        self.categories[relation]
    }
}

/// Mean distinct-counterpart counts `(objects per subject, subjects per object)`.
pub(crate) fn counterpart_averages<'a>(triplets: impl IntoIterator<Item = &'a Triplet>) -> (f64, f64) {
    let mut objects: HashMap<usize, HashSet<usize>> = HashMap::new();
    let mut subjects: HashMap<usize, HashSet<usize>> = HashMap::new();
    for t in triplets {
        objects.entry(t.subject).or_default().insert(t.object);
        subjects.entry(t.object).or_default().insert(t.subject);
    }
    let mean = |m: &HashMap<usize, HashSet<usize>>| {
        m.values().map(|s| s.len()).sum::<usize>() as f64 / m.len() as f64
    };
    (mean(&objects), mean(&subjects))
}

/// Classifies every relation from its training triplets; a relation with no
/// training triplets falls back to all splits.
pub fn classify_relations(store: &TripletStore, threshold: f64) -> Result<RelationCategoryTable> {
    if threshold.is_nan() || threshold <= 1.0 {
        return Err(Error::Config(format!(
            "category threshold must exceed 1, got {threshold}"
        )));
    }
    let nr = store.num_relations();
    let mut by_relation: Vec<Vec<Triplet>> = vec![Vec::new(); nr];
    for t in store.train() {
        by_relation[t.relation].push(*t);
    }
    for t in store.valid().iter().chain(store.test()) {
        if store.per_relation_counts()[t.relation] == 0 {
            by_relation[t.relation].push(*t);
        }
    }
    let mut table = RelationCategoryTable {
        threshold,
        categories: Vec::with_capacity(nr),
        objects_per_subject: Vec::with_capacity(nr),
        subjects_per_object: Vec::with_capacity(nr),
    };
    for (r, triplets) in by_relation.iter().enumerate() {
        if triplets.is_empty() {
            return Err(Error::Data(format!(
                "relation `{}` has no triplets to classify",
                store.vocab().relations.name(r)
            )));
        }
        let (a, b) = counterpart_averages(triplets);
        table.objects_per_subject.push(a);
        table.subjects_per_object.push(b);
        table
            .categories
            .push(RelationCategory::from_averages(a, b, threshold));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_relation(rows: &[(&str, &str)]) -> TripletStore {
        let train: Vec<(&str, &str, &str)> = rows.iter().map(|&(s, o)| (s, "r", o)).collect();
        TripletStore::from_names(&train, &[], &[]).unwrap()
    }

    #[test]
    fn bijection_is_one_to_one() {
        let store = single_relation(&[("a", "b"), ("c", "d"), ("e", "f")]);
        let t = classify_relations(&store, 1.5).unwrap();
        assert_eq!(t.category(0), RelationCategory::OneToOne);
        assert_eq!((t.objects_per_subject[0], t.subjects_per_object[0]), (1.0, 1.0));
    }

    #[test]
    fn one_subject_many_objects() {
        let store = single_relation(&[("s", "o1"), ("s", "o2"), ("s", "o3")]);
        let t = classify_relations(&store, 1.5).unwrap();
        assert_eq!((t.objects_per_subject[0], t.subjects_per_object[0]), (3.0, 1.0));
        assert_eq!(t.category(0), RelationCategory::OneToMany);
    }

    #[test]
    fn many_subjects_one_object() {
        let store = single_relation(&[("s1", "o"), ("s2", "o")]);
        let t = classify_relations(&store, 1.5).unwrap();
        assert_eq!((t.objects_per_subject[0], t.subjects_per_object[0]), (1.0, 2.0));
        assert_eq!(t.category(0), RelationCategory::ManyToOne);
    }

    #[test]
    fn relation_only_in_test_uses_all_splits() {
        let store = TripletStore::from_names(
            &[("a", "r", "b")],
            &[],
            &[("a", "s", "b"), ("a", "s", "c"), ("d", "s", "c")],
        )
        .unwrap();
        let t = classify_relations(&store, 1.5).unwrap();
        // s: a->{b,c}, d->{c}; objects/subject = 1.5, subjects/object = 1.5
        assert_eq!(t.category(1), RelationCategory::ManyToMany);
    }

    #[test]
    fn threshold_must_exceed_one() {
        let store = single_relation(&[("a", "b")]);
        assert!(classify_relations(&store, 1.0).is_err());
    }
}
