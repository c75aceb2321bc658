//! Independent reference implementations used by the integration and
//! acceptance tests: scores written out with plain loops, central finite
//! differences, and full-sort ranking.

#![allow(dead_code)]

use std::collections::HashSet;

use relembed::scoring::{score_gradients, ParamBlock, Side};
use relembed::{Activation, Hyperparams, ModelKind, ModelParams, Triplet, TripletStore};

/// One instance of every family, with small hidden widths.
pub fn all_kinds(n: usize) -> Vec<ModelKind> {
    vec![
        ModelKind::Distance { rows: n },
        ModelKind::SingleLayer { hidden: 3 },
        ModelKind::TransE,
        ModelKind::Bilinear,
        ModelKind::BilinearDiag,
        ModelKind::BilinearLinear,
        ModelKind::Ntn { slices: 3 },
    ]
}

pub fn hyper(n: usize, activation: Activation, seed: u64) -> Hyperparams {
    Hyperparams {
        entity_dim: n,
        activation,
        seed,
        ..Hyperparams::default()
    }
}

/// Random parameters; relation blocks are rescaled to unit-ish entries so
/// every term contributes.
pub fn random_params(kind: ModelKind, n: usize, entities: usize, relations: usize, activation: Activation, seed: u64) -> ModelParams {
    let mut p = ModelParams::init_random(kind, hyper(n, activation, seed), entities, relations).unwrap();
    let scale = 1.0 / p.hyper().init_bound();
    for r in 0..relations {
        for x in p.relation_flat_mut(r) {
            *x *= scale * 0.5;
        }
    }
    p
}

fn act(a: Activation, x: f64) -> f64 {
    match a {
        Activation::Identity => x,
        Activation::Tanh => x.tanh(),
    }
}

/// Score from the raw parameter arrays, following the storage layout:
/// tensor slices (`m` of `n x n`), then `Q1` (`m x n`), `Q2` (`m x n`), `u`.
pub fn naive_score(params: &ModelParams, t: &Triplet) -> f64 {
    let n = params.entity_dim();
    let a = params.activation();
    let y1: Vec<f64> = params.entity(t.subject).iter().map(|&x| act(a, x)).collect();
    let y2: Vec<f64> = params.entity(t.object).iter().map(|&x| act(a, x)).collect();
    let w = params.relation_flat(t.relation);
    let linear = |m: usize, off: usize, k: usize| -> f64 {
        let q1 = &w[off..off + m * n];
        let q2 = &w[off + m * n..off + 2 * m * n];
        (0..n).map(|j| q1[k * n + j] * y1[j] + q2[k * n + j] * y2[j]).sum()
    };
    let tensor = |k: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += y1[i] * w[k * n * n + i * n + j] * y2[j];
            }
        }
        s
    };
    match params.kind() {
        ModelKind::TransE => -(0..n).map(|i| (y1[i] - y2[i] + w[i]).powi(2)).sum::<f64>(),
        ModelKind::BilinearDiag => (0..n).map(|i| y1[i] * w[i] * y2[i]).sum(),
        ModelKind::Bilinear => {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += y1[i] * w[i * n + j] * y2[j];
                }
            }
            s
        }
        ModelKind::Distance { rows } => {
            let q1 = &w[..rows * n];
            let q2 = &w[rows * n..2 * rows * n];
            -(0..rows)
                .map(|k| (0..n).map(|j| q1[k * n + j] * y1[j] - q2[k * n + j] * y2[j]).sum::<f64>().abs())
                .sum::<f64>()
        }
        ModelKind::SingleLayer { hidden } => {
            let u = &w[2 * hidden * n..];
            (0..hidden).map(|k| u[k] * linear(hidden, 0, k).tanh()).sum()
        }
        ModelKind::BilinearLinear => {
            let u = w[n * n + 2 * n];
            u * (tensor(0) + linear(1, n * n, 0))
        }
        ModelKind::Ntn { slices } => {
            let off = slices * n * n;
            let u = &w[off + 2 * slices * n..];
            (0..slices).map(|k| u[k] * (tensor(k) + linear(slices, off, k)).tanh()).sum()
        }
    }
}

/// Largest relative error between the analytic score gradient and central
/// differences with step `h`, over every entity row and the triplet's
/// relation block. Relative error is `‖a - d‖ / max(‖a‖, ‖d‖, 1e-8)`.
pub fn gradient_relative_error(params: &ModelParams, t: &Triplet, h: f64) -> f64 {
    let grads = score_gradients(params, t);
    let n = params.entity_dim();
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    let mut p = params.clone();
    for e in 0..params.num_entities() {
        let g = grads.get(ParamBlock::Entity(e));
        for j in 0..n {
            analytic.push(g.map_or(0.0, |g| g[j]));
            let x = p.entity(e)[j];
            p.entity_mut(e)[j] = x + h;
            let up = naive_score(&p, t);
            p.entity_mut(e)[j] = x - h;
            let down = naive_score(&p, t);
            p.entity_mut(e)[j] = x;
            numeric.push((up - down) / (2.0 * h));
        }
    }
    for r in 0..params.num_relations() {
        let g = grads.get(ParamBlock::Relation(r));
        for j in 0..params.relation_flat(r).len() {
            analytic.push(g.map_or(0.0, |g| g[j]));
            let x = p.relation_flat(r)[j];
            p.relation_flat_mut(r)[j] = x + h;
            let up = naive_score(&p, t);
            p.relation_flat_mut(r)[j] = x - h;
            let down = naive_score(&p, t);
            p.relation_flat_mut(r)[j] = x;
            numeric.push((up - down) / (2.0 * h));
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, d)| a - d).collect();
    norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-8)
}

/// Candidate list for a query after the chosen filters, computed from the
/// raw triplet lists.
pub fn brute_candidates(store: &TripletStore, t: &Triplet, side: Side, filtered: bool, typed: bool) -> Vec<usize> {
    let all: HashSet<Triplet> = store.iter().copied().collect();
    let target = side.of(t);
    (0..store.num_entities())
        .filter(|&e| {
            if e == target {
                return true;
            }
            if filtered && all.contains(&side.replace(t, e)) {
                return false;
            }
            if typed {
                return store.iter().any(|x| x.relation == t.relation && side.of(x) == e);
            }
            true
        })
        .collect()
}

/// Rank by sorting every candidate on (score descending, id ascending).
pub fn brute_rank(params: &ModelParams, store: &TripletStore, t: &Triplet, side: Side, filtered: bool, typed: bool) -> usize {
    let mut scored: Vec<(f64, usize)> = brute_candidates(store, t, side, filtered, typed)
        .into_iter()
        .map(|e| (naive_score(params, &side.replace(t, e)), e))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    1 + scored.iter().position(|&(_, e)| e == side.of(t)).unwrap()
}

/// Ranks of both sides of every test triplet, subject side first.
pub fn brute_ranks(params: &ModelParams, store: &TripletStore, filtered: bool, typed: bool) -> Vec<usize> {
    store
        .test()
        .iter()
        .flat_map(|t| Side::BOTH.map(|side| brute_rank(params, store, t, side, filtered, typed)))
        .collect()
}

pub fn brute_mrr(ranks: &[usize]) -> f64 {
    ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64
}

pub fn brute_hits(ranks: &[usize], k: usize) -> f64 {
    100.0 * ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64
}

/// MAP in percent: one query per distinct (fixed entity, relation, side) in
/// the test split, type-constrained candidates, every known completion
/// relevant.
pub fn brute_map(params: &ModelParams, store: &TripletStore) -> f64 {
    let all: HashSet<Triplet> = store.iter().copied().collect();
    let mut seen = HashSet::new();
    let mut aps = Vec::new();
    for t in store.test() {
        for side in Side::BOTH {
            let fixed = match side {
                Side::Subject => t.object,
                Side::Object => t.subject,
            };
            if !seen.insert((fixed, t.relation, side)) {
                continue;
            }
            let mut scored: Vec<(f64, usize)> = brute_candidates(store, t, side, false, true)
                .into_iter()
                .map(|e| (naive_score(params, &side.replace(t, e)), e))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let relevant = scored.iter().filter(|(_, e)| all.contains(&side.replace(t, *e))).count();
            let mut hits = 0;
            let mut sum = 0.0;
            for (pos, (_, e)) in scored.iter().enumerate() {
                if all.contains(&side.replace(t, *e)) {
                    hits += 1;
                    sum += hits as f64 / (pos + 1) as f64;
                }
            }
            aps.push(sum / relevant as f64);
        }
    }
    100.0 * aps.iter().sum::<f64>() / aps.len() as f64
}
