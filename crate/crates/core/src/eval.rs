//! Link-prediction evaluation: every test triplet is queried twice, once
//! per side, and the true entity is ranked against all candidates.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::data::{
    build_type_index, classify_relations, RelationCategory, RelationCategoryTable, Split, Triplet, TripletStore,
    TypeConstraintIndex, DEFAULT_CATEGORY_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::scoring::{CandidateScorer, Side};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalSetting {
    /// Drop candidates that form a known triplet (any split) other than the query.
    pub filter_known_positives: bool,
    /// Keep only candidates seen on the queried side of the relation.
    pub type_constrained: bool,
    pub hits_k: Vec<usize>,
}

impl Default for EvalSetting {
    fn default() -> Self {
        EvalSetting {
            filter_known_positives: true,
            type_constrained: false,
            hits_k: vec![10],
        }
    }
}

impl EvalSetting {
    pub fn raw() -> Self {
        EvalSetting {
            filter_known_positives: false,
            ..EvalSetting::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hits_k.contains(&0) {
            return Err(Error::Config("HITS@k needs k >= 1".into()));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let base = if self.filter_known_positives { "filtered" } else { "raw" };
        if self.type_constrained {
            format!("{base}+type-constrained")
        } else {
            base.to_owned()
        }
    }
}

/// Rank of the true entity for one query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QueryRank {
    pub triplet: Triplet,
    pub side: Side,
    pub rank: usize,
}

impl Serialize for Side {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Rank among the candidate `scores`, 1-based.
///
/// Candidates are all entities, or `allowed` when given (sorted ids). The
/// target is always a candidate. Entities in `excluded` other than the
/// target are removed. Ties go to the lower entity id.
pub fn rank_from_scores(scores: &[f64], target: usize, allowed: Option<&[usize]>, excluded: &[usize]) -> usize {
    let best = scores[target];
    let beats = |i: usize| i != target && (scores[i] > best || (scores[i] == best && i < target));
    let mut ahead = match allowed {
        Some(ids) => ids.iter().filter(|&&i| beats(i)).count(),
        None => (0..scores.len()).filter(|&i| beats(i)).count(),
    };
    for &i in excluded {
        let is_candidate = allowed.is_none_or(|ids| ids.binary_search(&i).is_ok());
        if is_candidate && beats(i) {
            ahead -= 1;
        }
    }
    1 + ahead
}

/// Evaluation context over one model and dataset.
pub struct Evaluator<'a> {
    scorer: CandidateScorer<'a>,
    store: &'a TripletStore,
    types: TypeConstraintIndex,
}

impl<'a> Evaluator<'a> {
    pub fn new(params: &'a ModelParams, store: &'a TripletStore) -> Result<Self> {
        if params.num_entities() != store.num_entities() || params.num_relations() != store.num_relations() {
            return Err(Error::Config(
                "model and dataset disagree on entity or relation counts".into(),
            ));
        }
        Ok(Evaluator {
            scorer: CandidateScorer::new(params),
            store,
            types: build_type_index(store),
        })
    }

    pub fn type_index(&self) -> &TypeConstraintIndex {
        &self.types
    }

    fn known_on_side(&self, t: &Triplet, side: Side) -> &[usize] {
        match side {
            Side::Subject => self.store.known_subjects(t.relation, t.object),
            Side::Object => self.store.known_objects(t.subject, t.relation),
        }
    }

    fn side_set(&self, relation: usize, side: Side) -> &[usize] {
        match side {
            Side::Subject => self.types.subjects(relation),
            Side::Object => self.types.objects(relation),
        }
    }

    pub fn rank(&self, t: &Triplet, side: Side, setting: &EvalSetting) -> usize {
        let scores = self.scorer.score_all(t, side);
        let scores = scores.as_slice().expect("fresh array");
        let allowed = setting.type_constrained.then(|| self.side_set(t.relation, side));
        let excluded = if setting.filter_known_positives {
            self.known_on_side(t, side)
        } else {
            &[]
        };
        rank_from_scores(scores, side.of(t), allowed, excluded)
    }

    /// Ranks both sides of every triplet in `split`, subject query first.
    pub fn ranks(&self, split: Split, setting: &EvalSetting) -> Vec<QueryRank> {
        self.store
            .split(split)
            .par_iter()
            .flat_map_iter(|t| {
                Side::BOTH.map(|side| QueryRank {
                    triplet: *t,
                    side,
                    rank: self.rank(t, side, setting),
                })
            })
            .collect()
    }

    pub fn evaluate(&self, split: Split, setting: &EvalSetting) -> Result<EvalReport> {
        setting.validate()?;
        if self.store.split(split).is_empty() {
            return Err(Error::Data(format!("{} split is empty", split.name())));
        }
        let ranks = self.ranks(split, setting);
        Ok(EvalReport::from_ranks(setting.clone(), split, ranks))
    }

    /// Mean average precision over the type-constrained candidate lists.
    ///
    /// One query per distinct (fixed entity, relation, side) drawn from
    /// `split`. Relevant entities are all those completing a known triplet
    /// in any split; candidates are the relation's entities on that side,
    /// ordered by descending score with ties to the lower id.
    pub fn mean_average_precision(&self, split: Split) -> MapReport {
        let mut seen = HashSet::new();
        let mut queries = Vec::new();
        for t in self.store.split(split) {
            for side in Side::BOTH {
                let key = match side {
                    Side::Subject => (t.object, t.relation, side),
                    Side::Object => (t.subject, t.relation, side),
                };
                if seen.insert(key) {
                    queries.push((*t, side));
                }
            }
        }
        let aps: Vec<Option<f64>> = queries
            .par_iter()
            .map(|(t, side)| {
                let candidates = self.side_set(t.relation, *side);
                if candidates.is_empty() {
                    return None;
                }
                let relevant = self.known_on_side(t, *side);
                let scores = self.scorer.score_all(t, *side);
                Some(average_precision(scores.as_slice().unwrap(), candidates, relevant))
            })
            .collect();
        let scored: Vec<f64> = aps.iter().flatten().copied().collect();
        MapReport {
            map: if scored.is_empty() {
                0.0
            } else {
                100.0 * scored.iter().sum::<f64>() / scored.len() as f64
            },
            queries: scored.len(),
            skipped_empty_candidates: aps.len() - scored.len(),
        }
    }
}

/// Average precision of `relevant` within `candidates` ordered by score.
pub fn average_precision(scores: &[f64], candidates: &[usize], relevant: &[usize]) -> f64 {
    let relevant: HashSet<usize> = relevant
        .iter()
        .copied()
        .filter(|i| candidates.binary_search(i).is_ok())
        .collect();
    if relevant.is_empty() {
        return 0.0;
    }
    let mut order = candidates.to_vec();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, e) in order.iter().enumerate() {
        if relevant.contains(e) {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
        }
    }
    sum / relevant.len() as f64
}

/// One-off rank of a single query.
pub fn rank_entity(params: &ModelParams, store: &TripletStore, t: &Triplet, side: Side, setting: &EvalSetting) -> Result<usize> {
    Ok(Evaluator::new(params, store)?.rank(t, side, setting))
}

/// Ranks both sides of every test triplet and aggregates.
pub fn evaluate(params: &ModelParams, store: &TripletStore, setting: &EvalSetting) -> Result<EvalReport> {
    Evaluator::new(params, store)?.evaluate(Split::Test, setting)
}

/// MAP over the test split with type checking, as a percentage.
pub fn mean_average_precision(params: &ModelParams, store: &TripletStore) -> Result<MapReport> {
    Ok(Evaluator::new(params, store)?.mean_average_precision(Split::Test))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MapReport {
    /// Percentage.
    pub map: f64,
    pub queries: usize,
    pub skipped_empty_candidates: usize,
}

pub fn mrr(ranks: &[QueryRank]) -> f64 {
    ranks.iter().map(|q| 1.0 / q.rank as f64).sum::<f64>() / ranks.len() as f64
}

/// Percentage of queries with rank at most `k`.
pub fn hits_at(ranks: &[QueryRank], k: usize) -> f64 {
    100.0 * ranks.iter().filter(|q| q.rank <= k).count() as f64 / ranks.len() as f64
}

/// HITS@k per relation category and predicted side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CategoryTable {
    pub k: usize,
    /// `[category][side]`; `None` where no query falls in the cell.
    pub cells: [[Option<f64>; 2]; 4],
    pub counts: [[usize; 2]; 4],
}

impl CategoryTable {
    pub fn cell(&self, category: RelationCategory, side: Side) -> Option<f64> {
        self.cells[category.index()][side.index()]
    }

    /// Query-weighted mean over the filled cells.
    pub fn weighted_mean(&self) -> f64 {
        let mut total = 0.0;
        let mut n = 0;
        for c in 0..4 {
            for s in 0..2 {
                if let Some(v) = self.cells[c][s] {
                    total += v * self.counts[c][s] as f64;
                    n += self.counts[c][s];
                }
            }
        }
        total / n as f64
    }
}

pub fn category_breakdown(ranks: &[QueryRank], categories: &RelationCategoryTable, k: usize) -> CategoryTable {
    let mut hits = [[0usize; 2]; 4];
    let mut counts = [[0usize; 2]; 4];
    for q in ranks {
        let c = categories.category(q.triplet.relation).index();
        counts[c][q.side.index()] += 1;
        if q.rank <= k {
            hits[c][q.side.index()] += 1;
        }
    }
    let mut cells = [[None; 2]; 4];
    for c in 0..4 {
        for s in 0..2 {
            if counts[c][s] > 0 {
                cells[c][s] = Some(100.0 * hits[c][s] as f64 / counts[c][s] as f64);
            }
        }
    }
    CategoryTable { k, cells, counts }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub setting: EvalSetting,
    pub split: &'static str,
    pub queries: usize,
    pub mrr: f64,
    /// `(k, percentage)` in the order of `setting.hits_k`.
    pub hits: Vec<(usize, f64)>,
    pub map: Option<MapReport>,
    pub categories: Option<CategoryTable>,
    #[serde(skip)]
    pub ranks: Vec<QueryRank>,
}

impl EvalReport {
    pub fn from_ranks(setting: EvalSetting, split: Split, ranks: Vec<QueryRank>) -> Self {
        let hits = setting.hits_k.iter().map(|&k| (k, hits_at(&ranks, k))).collect();
        EvalReport {
            split: split.name(),
            queries: ranks.len(),
            mrr: mrr(&ranks),
            hits,
            map: None,
            categories: None,
            ranks,
            setting,
        }
    }

    pub fn hits_at(&self, k: usize) -> Option<f64> {
        self.hits.iter().find(|(kk, _)| *kk == k).map(|(_, v)| *v)
    }

    /// Adds the per-category table at the largest configured k.
    pub fn with_categories(mut self, store: &TripletStore, threshold: Option<f64>) -> Result<Self> {
        let table = classify_relations(store, threshold.unwrap_or(DEFAULT_CATEGORY_THRESHOLD))?;
        let k = self.setting.hits_k.iter().max().copied().unwrap_or(10);
        self.categories = Some(category_breakdown(&self.ranks, &table, k));
        Ok(self)
    }

    /// Machine-readable records, one per metric and per category cell.
    pub fn records(&self) -> Vec<serde_json::Value> {
        let setting = self.setting.label();
        let mut out = vec![
            json!({"metric": "queries", "setting": setting, "split": self.split, "value": self.queries}),
            json!({"metric": "mrr", "setting": setting, "split": self.split, "value": self.mrr}),
        ];
        for (k, v) in &self.hits {
            out.push(json!({"metric": format!("hits@{k}"), "setting": setting, "split": self.split, "value": v}));
        }
        if let Some(m) = &self.map {
            out.push(json!({
                "metric": "map", "setting": "type-constrained", "split": self.split,
                "value": m.map, "queries": m.queries, "skipped": m.skipped_empty_candidates,
            }));
        }
        if let Some(t) = &self.categories {
            for c in RelationCategory::ALL {
                for side in Side::BOTH {
                    out.push(json!({
                        "metric": format!("hits@{}", t.k),
                        "setting": setting,
                        "split": self.split,
                        "category": c.label(),
                        "predict": side.name(),
                        "value": t.cell(c, side),
                        "queries": t.counts[c.index()][side.index()],
                    }));
                }
            }
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "setting: {} ({} split, {} queries)", self.setting.label(), self.split, self.queries)?;
        writeln!(f, "MRR       {:.4}", self.mrr)?;
        for (k, v) in &self.hits {
            writeln!(f, "HITS@{k:<4} {v:.2}")?;
        }
        if let Some(m) = &self.map {
            writeln!(
                f,
                "MAP       {:.2}  (type-constrained, {} queries, {} skipped)",
                m.map, m.queries, m.skipped_empty_candidates
            )?;
        }
        if let Some(t) = &self.categories {
            writeln!(f)?;
            writeln!(f, "HITS@{} by relation category", t.k)?;
            writeln!(f, "{:<10}{:>10}{:>10}", "", "subject", "object")?;
            for c in RelationCategory::ALL {
                let cell = |side: Side| match t.cell(c, side) {
                    Some(v) => format!("{v:.1}"),
                    None => "-".to_owned(),
                };
                writeln!(f, "{:<10}{:>10}{:>10}", c.label(), cell(Side::Subject), cell(Side::Object))?;
            }
        }
        Ok(())
    }
}
