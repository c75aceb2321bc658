use super::store::TripletStore;

/// Per relation, the entities observed as its subject and as its object in
/// any split. Sets are stored sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeConstraintIndex {
    subjects: Vec<Vec<usize>>,
    objects: Vec<Vec<usize>>,
}

impl TypeConstraintIndex {
    pub fn subjects(&self, relation: usize) -> &[usize] {
        self.subjects.get(relation).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn objects(&self, relation: usize) -> &[usize] {
        self.objects.get(relation).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn allows_subject(&self, relation: usize, entity: usize) -> bool {
        self.subjects(relation).binary_search(&entity).is_ok()
    }

    pub fn allows_object(&self, relation: usize, entity: usize) -> bool {
        self.objects(relation).binary_search(&entity).is_ok()
    }

    pub fn num_relations(&self) -> usize {
        self.subjects.len()
    }
}

pub fn build_type_index(store: &TripletStore) -> TypeConstraintIndex {
    let nr = store.num_relations();
    let mut subjects = vec![Vec::new(); nr];
    let mut objects = vec![Vec::new(); nr];
    for t in store.iter() {
        subjects[t.relation].push(t.subject);
        objects[t.relation].push(t.object);
    }
    for set in subjects.iter_mut().chain(objects.iter_mut()) {
        set.sort_unstable();
        set.dedup();
    }
    TypeConstraintIndex { subjects, objects }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton() {
        let store = TripletStore::from_names(&[("a", "r", "b")], &[], &[]).unwrap();
        let idx = build_type_index(&store);
        assert_eq!(idx.subjects(0), &[0]);
        assert_eq!(idx.objects(0), &[1]);
    }

    #[test]
    fn shared_object() {
        let store = TripletStore::from_names(&[("a", "r", "b")], &[], &[("c", "r", "b")]).unwrap();
        let idx = build_type_index(&store);
        assert_eq!(idx.subjects(0), &[0, 2]);
        assert_eq!(idx.objects(0), &[1]);
        assert!(idx.allows_subject(0, 2));
        assert!(!idx.allows_object(0, 2));
    }

    #[test]
    fn empty_store() {
        let empty: &[(&str, &str, &str)] = &[];
        let store = TripletStore::from_names(empty, empty, empty).unwrap();
        let idx = build_type_index(&store);
        assert_eq!(idx.num_relations(), 0);
        assert!(idx.subjects(0).is_empty());
    }
}
