//! Margin ranking training with corrupted triplets, mini-batch AdaGrad,
//! L2 regularization of relation blocks and entity renormalization.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::data::{Triplet, TripletStore};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::{self, Rng, Stream};
use crate::scoring::{score, score_with_gradients, ParamBlock, ScoreGradients, Side};

/// Corrupted triplets drawn per positive: one subject, one object.
pub const NEGATIVES_PER_POSITIVE: usize = 2;

/// Draws before a corrupted triplet that is still a training positive is
/// accepted anyway.
pub const MAX_NEGATIVE_RETRIES: usize = 100;

// Triplets per gradient work unit. Fixed so the reduction order does not
// depend on the number of threads.
const GRADIENT_CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub adagrad_epsilon: f64,
    pub shuffle: bool,
    /// Epoch interval for the observer's checkpoint flag; `None` disables it.
    pub checkpoint_every: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adagrad_epsilon: 1e-8,
            shuffle: true,
            checkpoint_every: None,
        }
    }
}

/// The hinge `max(s_neg - s_pos + 1, 0)`.
pub fn margin_loss(s_pos: f64, s_neg: f64) -> f64 {
    hinge(1.0, s_pos, s_neg)
}

#[inline]
pub fn hinge(margin: f64, s_pos: f64, s_neg: f64) -> f64 {
    (s_neg - s_pos + margin).max(0.0)
}

/// Per coordinate: `G += g²; θ -= lr · g / sqrt(G + ε)`.
pub fn adagrad_update(accumulator: &mut [f64], params: &mut [f64], grad: &[f64], learning_rate: f64, epsilon: f64) {
    assert!(
        accumulator.len() == params.len() && params.len() == grad.len(),
        "adagrad blocks differ in length"
    );
    for ((acc, p), &g) in accumulator.iter_mut().zip(params.iter_mut()).zip(grad) {
        if g == 0.0 {
            continue;
        }
        *acc += g * g;
        *p -= learning_rate * g / (*acc + epsilon).sqrt();
    }
}

/// One positive with its corrupted subject and object.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainingExample {
    pub positive: Triplet,
    pub corrupted_subject: Triplet,
    pub corrupted_object: Triplet,
}

/// Replaces the subject, then the object, of `t` with uniformly drawn
/// entities, redrawing while the result is a training triplet.
///
/// After [`MAX_NEGATIVE_RETRIES`] draws the last candidate is accepted with a
/// warning, except that the positive itself is never returned.
pub fn sample_negatives(t: &Triplet, store: &TripletStore, rng: &mut Rng) -> (Triplet, Triplet) {
    let ne = store.num_entities();
    assert!(ne >= 2, "corruption needs at least two entities");
    let mut corrupt = |side: Side| -> Triplet {
        let mut candidate = *t;
        for _ in 0..MAX_NEGATIVE_RETRIES {
            candidate = side.replace(t, rng.random_range(0..ne));
            if !store.in_train(&candidate) {
                return candidate;
            }
        }
        log::warn!("no non-training corruption of {t:?} on the {} side after {MAX_NEGATIVE_RETRIES} draws", side.name());
        while candidate == *t {
            candidate = side.replace(t, rng.random_range(0..ne));
        }
        candidate
    };
    let s = corrupt(Side::Subject);
    let o = corrupt(Side::Object);
    (s, o)
}

/// Summed gradient of a mini-batch objective.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchGradient {
    /// Sum of hinge terms (regularization excluded).
    pub loss: f64,
    pub active_hinges: usize,
    pub hinge_terms: usize,
    pub entities: BTreeMap<usize, Array1<f64>>,
    pub relations: BTreeMap<usize, Array1<f64>>,
}

impl BatchGradient {
    fn add_scaled(&mut self, scale: f64, grads: &ScoreGradients) {
        for (block, g) in grads.iter() {
            let (map, id) = match block {
                ParamBlock::Entity(e) => (&mut self.entities, e),
                ParamBlock::Relation(r) => (&mut self.relations, r),
            };
            map.entry(id)
                .or_insert_with(|| Array1::zeros(g.len()))
                .scaled_add(scale, g);
        }
    }

    fn merge(&mut self, other: BatchGradient) {
        self.loss += other.loss;
        self.active_hinges += other.active_hinges;
        self.hinge_terms += other.hinge_terms;
        for (target, source) in [
            (&mut self.entities, other.entities),
            (&mut self.relations, other.relations),
        ] {
            for (id, g) in source {
                match target.get_mut(&id) {
                    Some(acc) => *acc += &g,
                    None => {
                        target.insert(id, g);
                    }
                }
            }
        }
    }
}

fn hinge_gradient(params: &ModelParams, examples: &[TrainingExample]) -> BatchGradient {
    let margin = params.hyper().margin;
    let mut out = BatchGradient::default();
    for ex in examples {
        let (s_pos, g_pos) = score_with_gradients(params, &ex.positive);
        let mut active = 0;
        for neg in [ex.corrupted_subject, ex.corrupted_object] {
            out.hinge_terms += 1;
            // cheap check before paying for the gradient
            let s_neg = score(params, &neg);
            let loss = hinge(margin, s_pos, s_neg);
            if loss > 0.0 {
                let (_, g_neg) = score_with_gradients(params, &neg);
                out.loss += loss;
                out.add_scaled(1.0, &g_neg);
                active += 1;
            }
        }
        if active > 0 {
            out.add_scaled(-(active as f64), &g_pos);
            out.active_hinges += active;
        }
    }
    out
}

/// Gradient of `Σ hinge + λ Σ_r ‖θ_r‖²` over a mini-batch; the L2 term
/// covers every relation block and no entity row.
pub fn batch_gradient(params: &ModelParams, examples: &[TrainingExample]) -> BatchGradient {
    let partials: Vec<BatchGradient> = examples
        .par_chunks(GRADIENT_CHUNK)
        .map(|chunk| hinge_gradient(params, chunk))
        .collect();
    let mut total = BatchGradient::default();
    for part in partials {
        total.merge(part);
    }
    let l2 = params.hyper().l2_reg;
    if l2 > 0.0 {
        for r in 0..params.num_relations() {
            let theta = Array1::from(params.relation_flat(r).to_vec());
            total
                .relations
                .entry(r)
                .or_insert_with(|| Array1::zeros(theta.len()))
                .scaled_add(2.0 * l2, &theta);
        }
    }
    total
}

/// The mini-batch objective whose gradient [`batch_gradient`] returns.
pub fn batch_objective(params: &ModelParams, examples: &[TrainingExample]) -> f64 {
    let margin = params.hyper().margin;
    let hinges: f64 = examples
        .iter()
        .map(|ex| {
            let s_pos = score(params, &ex.positive);
            hinge(margin, s_pos, score(params, &ex.corrupted_subject))
                + hinge(margin, s_pos, score(params, &ex.corrupted_object))
        })
        .sum();
    let reg: f64 = params.relation_table().iter().map(|x| x * x).sum();
    hinges + params.hyper().l2_reg * reg
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    pub mean_loss: f64,
    pub active_hinges: usize,
    pub hinge_terms: usize,
    pub wall_seconds: f64,
}

impl EpochStats {
    pub fn active_fraction(&self) -> f64 {
        if self.hinge_terms == 0 {
            0.0
        } else {
            self.active_hinges as f64 / self.hinge_terms as f64
        }
    }
}

/// Per-epoch mean hinge loss and active-hinge counts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossTrace {
    pub epochs: Vec<EpochStats>,
}

impl LossTrace {
    pub const HEADER: &'static str = "epoch\tmean_loss\tactive_fraction\tactive_hinges\twall_seconds";

    /// Mean losses only.
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }

    /// The trace without wall-clock times, for reproducibility checks.
    pub fn without_timing(&self) -> Vec<(usize, f64, usize)> {
        self.epochs
            .iter()
            .map(|e| (e.epoch, e.mean_loss, e.active_hinges))
            .collect()
    }
}

impl fmt::Display for EpochStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{:.17e}\t{:.6}\t{}\t{:.3}",
            self.epoch,
            self.mean_loss,
            self.active_fraction(),
            self.active_hinges,
            self.wall_seconds
        )
    }
}

impl fmt::Display for LossTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", Self::HEADER)?;
        for e in &self.epochs {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Event passed to a training observer after each epoch.
pub struct EpochEvent<'a> {
    pub stats: &'a EpochStats,
    pub params: &'a ModelParams,
    /// True when `checkpoint_every` divides this epoch or it is the last.
    pub checkpoint_due: bool,
}

/// Trains `init` for `init.hyper().epochs` epochs on the training split.
pub fn train(store: &TripletStore, config: &TrainConfig, init: ModelParams) -> Result<(ModelParams, LossTrace)> {
    train_with_observer(store, config, init, |_| Ok(()))
}

/// [`train`] with a callback after every epoch; an observer error stops
/// training and is returned.
pub fn train_with_observer<F>(
    store: &TripletStore,
    config: &TrainConfig,
    init: ModelParams,
    mut observer: F,
) -> Result<(ModelParams, LossTrace)>
where
    F: FnMut(EpochEvent<'_>) -> Result<()>,
{
    if store.train().is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    if store.num_entities() != init.num_entities() || store.num_relations() != init.num_relations() {
        return Err(Error::Config(format!(
            "parameters cover {} entities and {} relations, dataset has {} and {}",
            init.num_entities(),
            init.num_relations(),
            store.num_entities(),
            store.num_relations()
        )));
    }
    if !(config.adagrad_epsilon.is_finite() && config.adagrad_epsilon > 0.0) {
        return Err(Error::Config("adagrad_epsilon must be positive".into()));
    }
    let mut params = init;
    let hyper = params.hyper().clone();
    let mut rng = rng::generator(hyper.seed, Stream::Training);
    let train = store.train();
    let batch_size = train.len().div_ceil(hyper.minibatch_count);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut trace = LossTrace::default();

    for epoch in 1..=hyper.epochs {
        let started = Instant::now();
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        let mut active = 0;
        let mut terms = 0;
        for (batch_no, batch) in order.chunks(batch_size).enumerate() {
            let examples: Vec<TrainingExample> = batch
                .iter()
                .map(|&i| {
                    let positive = train[i];
                    let (corrupted_subject, corrupted_object) = sample_negatives(&positive, store, &mut rng);
                    TrainingExample {
                        positive,
                        corrupted_subject,
                        corrupted_object,
                    }
                })
                .collect();
            let grad = batch_gradient(&params, &examples);
            if !grad.loss.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    batch: batch_no + 1,
                    what: format!("mini-batch loss is {}", grad.loss),
                });
            }
            loss_sum += grad.loss;
            active += grad.active_hinges;
            terms += grad.hinge_terms;
            apply_gradient(&mut params, &grad, config.adagrad_epsilon, &mut rng);
            check_finite(&params, &grad, epoch, batch_no + 1)?;
        }
        let stats = EpochStats {
            epoch,
            mean_loss: loss_sum / terms as f64,
            active_hinges: active,
            hinge_terms: terms,
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        log::info!("epoch {epoch}: mean loss {:.6}, active {:.4}", stats.mean_loss, stats.active_fraction());
        let checkpoint_due =
            epoch == hyper.epochs || config.checkpoint_every.is_some_and(|k| k > 0 && epoch % k == 0);
        observer(EpochEvent {
            stats: &stats,
            params: &params,
            checkpoint_due,
        })?;
        trace.epochs.push(stats);
    }
    Ok((params, trace))
}

/// One AdaGrad step on every block in `grad`, then renormalization of the
/// touched entity rows (identity projection only).
pub fn apply_gradient(params: &mut ModelParams, grad: &BatchGradient, epsilon: f64, rng: &mut Rng) {
    let lr = params.hyper().learning_rate;
    let normalize = params.hyper().normalizes_entities();
    {
        let (entities, entity_accum, relations, relation_accum) = params.blocks_and_accumulators_mut();
        for (&e, g) in &grad.entities {
            let mut row = entities.row_mut(e);
            let mut acc = entity_accum.row_mut(e);
            adagrad_update(
                acc.as_slice_mut().unwrap(),
                row.as_slice_mut().unwrap(),
                g.as_slice().unwrap(),
                lr,
                epsilon,
            );
        }
        for (&r, g) in &grad.relations {
            let mut row = relations.row_mut(r);
            let mut acc = relation_accum.row_mut(r);
            adagrad_update(
                acc.as_slice_mut().unwrap(),
                row.as_slice_mut().unwrap(),
                g.as_slice().unwrap(),
                lr,
                epsilon,
            );
        }
    }
    if normalize {
        params.renormalize_rows(grad.entities.keys().copied(), rng);
    }
}

fn check_finite(params: &ModelParams, grad: &BatchGradient, epoch: usize, batch: usize) -> Result<()> {
    for &e in grad.entities.keys() {
        if !params.entity(e).iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                epoch,
                batch,
                what: format!("entity row {e}"),
            });
        }
    }
    for &r in grad.relations.keys() {
        if !params.relation_flat(r).iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                epoch,
                batch,
                what: format!("relation block {r}"),
            });
        }
    }
    Ok(())
}
