use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::vocab::Vocabulary;
use crate::error::{Error, Result};

/// A directed fact `(subject, relation, object)` over vocabulary ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Triplet {
    pub subject: usize,
    pub relation: usize,
    pub object: usize,
}

impl Triplet {
    pub fn new(subject: usize, relation: usize, object: usize) -> Self {
        Triplet {
            subject,
            relation,
            object,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

/// Reads a `subject<TAB>relation<TAB>object` file.
///
/// With `vocab = None` a fresh vocabulary is built with ids in first-seen
/// order. With `Some(v)` the vocabulary is fixed and unknown names fail.
pub fn load_triplets(
    path: impl AsRef<Path>,
    vocab: Option<&Vocabulary>,
) -> Result<(Vec<Triplet>, Vocabulary)> {
    match vocab {
        Some(v) => {
            let mut v = v.clone();
            let triplets = read_triplets(path.as_ref(), &mut v, true)?;
            Ok((triplets, v))
        }
        None => {
            let mut v = Vocabulary::new();
            let triplets = read_triplets(path.as_ref(), &mut v, false)?;
            Ok((triplets, v))
        }
    }
}

pub(crate) fn read_triplets(path: &Path, vocab: &mut Vocabulary, fixed: bool) -> Result<Vec<Triplet>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut triplets = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: line_no,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let lookup = |vocab: &mut Vocabulary, what: &'static str, name: &str| -> Result<usize> {
            let table = if what == "relation" {
                &mut vocab.relations
            } else {
                &mut vocab.entities
            };
            if fixed {
                table.id(name).ok_or_else(|| Error::Vocabulary {
                    path: path.to_owned(),
                    line: line_no,
                    what,
                    name: name.to_owned(),
                })
            } else {
                Ok(table.intern(name))
            }
        };
        let subject = lookup(vocab, "entity", fields[0])?;
        let relation = lookup(vocab, "relation", fields[1])?;
        let object = lookup(vocab, "entity", fields[2])?;
        triplets.push(Triplet::new(subject, relation, object));
    }
    Ok(triplets)
}

/// Train/valid/test splits over one shared vocabulary, with membership and
/// known-positive indices.
#[derive(Clone, Debug)]
pub struct TripletStore {
    vocab: Vocabulary,
    train: Vec<Triplet>,
    valid: Vec<Triplet>,
    test: Vec<Triplet>,
    membership: HashSet<Triplet>,
    train_membership: HashSet<Triplet>,
    per_relation_counts: Vec<usize>,
    // (subject, relation) -> objects and (relation, object) -> subjects, all splits
    objects_of: HashMap<(usize, usize), Vec<usize>>,
    subjects_of: HashMap<(usize, usize), Vec<usize>>,
    dropped_duplicates: usize,
}

impl TripletStore {
    /// Builds a store, checking ids against `vocab`.
    ///
    /// Repeated triplets are kept only at their first occurrence (train
    /// before valid before test) so the splits are disjoint sets; the number
    /// dropped is reported by [`TripletStore::dropped_duplicates`].
    pub fn new(
        vocab: Vocabulary,
        train: Vec<Triplet>,
        valid: Vec<Triplet>,
        test: Vec<Triplet>,
    ) -> Result<Self> {
        let (ne, nr) = (vocab.num_entities(), vocab.num_relations());
        let mut membership = HashSet::with_capacity(train.len() + valid.len() + test.len());
        let mut dropped = 0;
        let mut splits: [Vec<Triplet>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (slot, input) in splits.iter_mut().zip([train, valid, test]) {
            slot.reserve(input.len());
            for t in input {
                if t.subject >= ne || t.object >= ne || t.relation >= nr {
                    return Err(Error::Data(format!(
                        "triplet {t:?} has ids outside the vocabulary ({ne} entities, {nr} relations)"
                    )));
                }
                if membership.insert(t) {
                    slot.push(t);
                } else {
                    dropped += 1;
                }
            }
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} repeated triplets while building the store");
        }
        let [train, valid, test] = splits;
        let train_membership: HashSet<Triplet> = train.iter().copied().collect();
        let mut per_relation_counts = vec![0; nr];
        for t in &train {
            per_relation_counts[t.relation] += 1;
        }
        let mut objects_of: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        let mut subjects_of: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for t in train.iter().chain(&valid).chain(&test) {
            objects_of.entry((t.subject, t.relation)).or_default().push(t.object);
            subjects_of.entry((t.relation, t.object)).or_default().push(t.subject);
        }
        Ok(TripletStore {
            vocab,
            train,
            valid,
            test,
            membership,
            train_membership,
            per_relation_counts,
            objects_of,
            subjects_of,
            dropped_duplicates: dropped,
        })
    }

    /// Loads three TSV files, building the vocabulary over all of them in
    /// train, valid, test order.
    pub fn load(
        train: impl AsRef<Path>,
        valid: impl AsRef<Path>,
        test: impl AsRef<Path>,
    ) -> Result<Self> {
        let mut vocab = Vocabulary::new();
        let train = read_triplets(train.as_ref(), &mut vocab, false)?;
        let valid = read_triplets(valid.as_ref(), &mut vocab, false)?;
        let test = read_triplets(test.as_ref(), &mut vocab, false)?;
        TripletStore::new(vocab, train, valid, test)
    }

    /// Loads three TSV files against a fixed vocabulary.
    pub fn load_with_vocabulary(
        vocab: Vocabulary,
        train: impl AsRef<Path>,
        valid: impl AsRef<Path>,
        test: impl AsRef<Path>,
    ) -> Result<Self> {
        let mut v = vocab;
        let train = read_triplets(train.as_ref(), &mut v, true)?;
        let valid = read_triplets(valid.as_ref(), &mut v, true)?;
        let test = read_triplets(test.as_ref(), &mut v, true)?;
        TripletStore::new(v, train, valid, test)
    }

    /// Builds a store from name triples, interning names in order.
    pub fn from_names<S: AsRef<str>>(
        train: &[(S, S, S)],
        valid: &[(S, S, S)],
        test: &[(S, S, S)],
    ) -> Result<Self> {
        let mut vocab = Vocabulary::new();
        let mut convert = |rows: &[(S, S, S)]| -> Vec<Triplet> {
            rows.iter()
                .map(|(s, r, o)| {
                    let s = vocab.entities.intern(s.as_ref());
                    let r = vocab.relations.intern(r.as_ref());
                    let o = vocab.entities.intern(o.as_ref());
                    Triplet::new(s, r, o)
                })
                .collect()
        };
        let train = convert(train);
        let valid = convert(valid);
        let test = convert(test);
        TripletStore::new(vocab, train, valid, test)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.num_entities()
    }

    pub fn num_relations(&self) -> usize {
        self.vocab.num_relations()
    }

    pub fn train(&self) -> &[Triplet] {
        &self.train
    }

    pub fn valid(&self) -> &[Triplet] {
        &self.valid
    }

    pub fn test(&self) -> &[Triplet] {
        &self.test
    }

    pub fn split(&self, split: Split) -> &[Triplet] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.membership.len()
    }

    pub fn is_empty(&self) -> bool {
        self.membership.is_empty()
    }

    /// All triplets, train then valid then test.
    pub fn iter(&self) -> impl Iterator<Item = &Triplet> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    /// True iff `t` appears in any split.
    pub fn contains(&self, t: &Triplet) -> bool {
        self.membership.contains(t)
    }

    pub fn in_train(&self, t: &Triplet) -> bool {
        self.train_membership.contains(t)
    }

    /// Training example count per relation id.
    pub fn per_relation_counts(&self) -> &[usize] {
        &self.per_relation_counts
    }

    /// Objects `o` with `(subject, relation, o)` in any split.
    pub fn known_objects(&self, subject: usize, relation: usize) -> &[usize] {
        self.objects_of
            .get(&(subject, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Subjects `s` with `(s, relation, object)` in any split.
    pub fn known_subjects(&self, relation: usize, object: usize) -> &[usize] {
        self.subjects_of
            .get(&(relation, object))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn dropped_duplicates(&self) -> usize {
        self.dropped_duplicates
    }

    /// Keeps the triplets (in every split) whose relation has at least
    /// `min_train_count` training examples, then renumbers entities and
    /// relations densely, dropping entities left without triplets.
    ///
    /// Surviving names keep their relative id order.
    pub fn filter_frequent_relations(&self, min_train_count: usize) -> TripletStore {
        let keep_relation: Vec<bool> = self
            .per_relation_counts
            .iter()
            .map(|&c| c >= min_train_count)
            .collect();
        let kept = |ts: &[Triplet]| -> Vec<Triplet> {
            ts.iter().copied().filter(|t| keep_relation[t.relation]).collect()
        };
        let (train, valid, test) = (kept(&self.train), kept(&self.valid), kept(&self.test));

        let mut entity_used = vec![false; self.num_entities()];
        for t in train.iter().chain(&valid).chain(&test) {
            entity_used[t.subject] = true;
            entity_used[t.object] = true;
        }
        let mut vocab = Vocabulary::new();
        let mut entity_map = vec![usize::MAX; self.num_entities()];
        for (old, name) in self.vocab.entities.iter() {
            if entity_used[old] {
                entity_map[old] = vocab.entities.intern(name);
            }
        }
        let mut relation_map = vec![usize::MAX; self.num_relations()];
        for (old, name) in self.vocab.relations.iter() {
            if keep_relation[old] {
                relation_map[old] = vocab.relations.intern(name);
            }
        }
        let remap = |ts: Vec<Triplet>| -> Vec<Triplet> {
            ts.into_iter()
                .map(|t| {
                    Triplet::new(
                        entity_map[t.subject],
                        relation_map[t.relation],
                        entity_map[t.object],
                    )
                })
                .collect()
        };
        TripletStore::new(vocab, remap(train), remap(valid), remap(test))
            .expect("remapped ids are valid by construction")
    }

    /// Writes one split as TSV with names.
    pub fn write_split(&self, split: Split, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for t in self.split(split) {
            writeln!(
                out,
                "{}\t{}\t{}",
                self.vocab.entities.name(t.subject),
                self.vocab.relations.name(t.relation),
                self.vocab.entities.name(t.object)
            )
            .map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn stats(&self) -> StoreStats {
        let mut per_relation: Vec<RelationCount> = self
            .vocab
            .relations
            .iter()
            .map(|(id, name)| RelationCount {
                relation: name.to_owned(),
                train: self.per_relation_counts[id],
                total: 0,
            })
            .collect();
        for t in self.iter() {
            per_relation[t.relation].total += 1;
        }
        StoreStats {
            entities: self.num_entities(),
            relations: self.num_relations(),
            train: self.train.len(),
            valid: self.valid.len(),
            test: self.test.len(),
            total: self.len(),
            dropped_duplicates: self.dropped_duplicates,
            per_relation,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationCount {
    pub relation: String,
    pub train: usize,
    pub total: usize,
}

/// Counts per split and a per-relation histogram.
#[derive(Clone, Debug, Serialize)]
pub struct StoreStats {
    pub entities: usize,
    pub relations: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub total: usize,
    pub dropped_duplicates: usize,
    pub per_relation: Vec<RelationCount>,
}

impl StoreStats {
    /// Histogram of relations bucketed by training count (powers of ten).
    pub fn frequency_buckets(&self) -> Vec<(String, usize)> {
        let mut buckets: Vec<(usize, usize)> = Vec::new();
        for rc in &self.per_relation {
            let mut lo = 1;
            while rc.train >= lo * 10 {
                lo *= 10;
            }
            let lo = if rc.train == 0 { 0 } else { lo };
            match buckets.iter_mut().find(|(b, _)| *b == lo) {
                Some((_, n)) => *n += 1,
                None => buckets.push((lo, 1)),
            }
        }
        buckets.sort();
        buckets
            .into_iter()
            .map(|(lo, n)| {
                let label = if lo == 0 {
                    "0".to_owned()
                } else {
                    format!("{}-{}", lo, lo * 10 - 1)
                };
                (label, n)
            })
            .collect()
    }
}

impl fmt::Display for StoreStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "entities\t{}", self.entities)?;
        writeln!(f, "relations\t{}", self.relations)?;
        writeln!(f, "triplets\t{}", self.total)?;
        writeln!(f, "train\t{}", self.train)?;
        writeln!(f, "valid\t{}", self.valid)?;
        writeln!(f, "test\t{}", self.test)?;
        if self.dropped_duplicates > 0 {
            writeln!(f, "dropped_duplicates\t{}", self.dropped_duplicates)?;
        }
        writeln!(f, "# relations by training count")?;
        for (label, n) in self.frequency_buckets() {
            writeln!(f, "bucket\t{label}\t{n}")?;
        }
        writeln!(f, "# relation\ttrain\ttotal")?;
        for rc in &self.per_relation {
            writeln!(f, "relation\t{}\t{}\t{}", rc.relation, rc.train, rc.total)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn first_seen_ids() {
        let f = write_file("a\tr\tb\nb\tr\tc\n");
        let (ts, vocab) = load_triplets(f.path(), None).unwrap();
        assert_eq!(ts, vec![Triplet::new(0, 0, 1), Triplet::new(1, 0, 2)]);
        assert_eq!(vocab.num_entities(), 3);
        assert_eq!(vocab.num_relations(), 1);
        assert_eq!(vocab.entities.name(2), "c");
    }

    #[test]
    fn empty_file() {
        let f = write_file("");
        let (ts, vocab) = load_triplets(f.path(), None).unwrap();
        assert!(ts.is_empty());
        assert_eq!(vocab, Vocabulary::new());
    }

    #[test]
    fn wrong_field_count_reports_line() {
        let f = write_file("a\tr\tb\n\na\tr\n");
        match load_triplets(f.path(), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_name_under_fixed_vocabulary() {
        let f = write_file("a\tr\tb\n");
        let (_, vocab) = load_triplets(f.path(), None).unwrap();
        let g = write_file("a\tr\tb\na\ts\tb\n");
        match load_triplets(g.path(), Some(&vocab)) {
            Err(Error::Vocabulary { line, what, name, .. }) => {
                assert_eq!((line, what, name.as_str()), (2, "relation", "s"));
            }
            other => panic!("expected vocabulary error, got {other:?}"),
        }
    }

    #[test]
    fn crlf_lines_are_accepted() {
        let f = write_file("a\tr\tb\r\n");
        let (ts, vocab) = load_triplets(f.path(), None).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(vocab.entities.name(1), "b");
    }

    fn toy() -> TripletStore {
        TripletStore::from_names(
            &[
                ("a", "r", "b"),
                ("b", "r", "c"),
                ("c", "r", "d"),
                ("d", "r", "a"),
                ("a", "r", "c"),
                ("x", "s", "y"),
            ],
            &[("b", "r", "d")],
            &[("a", "r", "d"), ("y", "s", "x")],
        )
        .unwrap()
    }

    #[test]
    fn membership_covers_every_split() {
        let store = toy();
        let e = |n| store.vocab().entities.id(n).unwrap();
        let r = store.vocab().relations.id("r").unwrap();
        assert!(store.contains(&Triplet::new(e("a"), r, e("b"))));
        assert!(store.contains(&Triplet::new(e("a"), r, e("d"))));
        assert!(!store.in_train(&Triplet::new(e("a"), r, e("d"))));
        assert!(!store.contains(&Triplet::new(e("b"), r, e("a"))));
        assert_eq!(store.per_relation_counts().iter().sum::<usize>(), store.train().len());
        assert_eq!(store.known_objects(e("a"), r).len(), 3);
    }

    #[test]
    fn frequency_filter_drops_rare_relations_and_orphans() {
        let store = toy();
        let filtered = store.filter_frequent_relations(2);
        assert_eq!(filtered.num_relations(), 1);
        assert_eq!(filtered.num_entities(), 4);
        assert_eq!(filtered.train().len(), 5);
        assert_eq!(filtered.valid().len(), 1);
        assert_eq!(filtered.test().len(), 1);
        assert_eq!(filtered.vocab().relations.name(0), "r");
        assert!(filtered.vocab().entities.id("x").is_none());
    }

    #[test]
    fn threshold_one_keeps_everything() {
        let store = toy();
        let same = store.filter_frequent_relations(1);
        assert_eq!(same.vocab(), store.vocab());
        assert_eq!(same.train(), store.train());
        assert_eq!(same.test(), store.test());
    }

    #[test]
    fn repeated_triplets_are_dropped_once() {
        let store = TripletStore::from_names(
            &[("a", "r", "b"), ("a", "r", "b")],
            &[("a", "r", "b")],
            &[("b", "r", "a")],
        )
        .unwrap();
        assert_eq!(store.train().len(), 1);
        assert!(store.valid().is_empty());
        assert_eq!(store.dropped_duplicates(), 2);
    }

    #[test]
    fn stats_report() {
        let stats = toy().stats();
        assert_eq!((stats.train, stats.valid, stats.test), (6, 1, 2));
        let text = stats.to_string();
        assert!(text.contains("entities\t6"));
        assert!(text.contains("relation\tr\t5\t7"));
        assert_eq!(stats.frequency_buckets(), vec![("1-9".to_owned(), 2)]);
    }
}
