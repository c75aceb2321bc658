//! Learnable parameters: the entity embedding table, per-relation blocks,
//! and their AdaGrad accumulators.

mod pretrained;
mod vectors;

use ndarray::{Array2, ArrayView1, ArrayView2, ArrayView3, ArrayViewMut1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng, Stream};
use crate::scoring::{Activation, ModelKind};

pub use pretrained::{entity_words, WordInitReport};
pub use vectors::PretrainedVectors;

/// Entity table: one row per entity, `entity_dim` columns.
pub type EmbeddingTable = Array2<f64>;

/// Tolerance on unit row norms.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub entity_dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub l2_reg: f64,
    pub minibatch_count: usize,
    pub epochs: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            entity_dim: 100,
            margin: 1.0,
            learning_rate: 0.1,
            l2_reg: 1e-4,
            minibatch_count: 10,
            epochs: 100,
            activation: Activation::Identity,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.entity_dim == 0 {
            return fail("entity_dim must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.l2_reg.is_finite() && self.l2_reg >= 0.0) {
            return fail(format!("l2_reg must be non-negative, got {}", self.l2_reg));
        }
        if !(self.margin.is_finite() && self.margin > 0.0) {
            return fail(format!("margin must be positive, got {}", self.margin));
        }
        if self.minibatch_count == 0 {
            return fail("minibatch_count must be at least 1".into());
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        Ok(())
    }

    /// Entity rows are kept at unit length only with the identity projection.
    pub fn normalizes_entities(&self) -> bool {
        self.activation == Activation::Identity
    }

    /// Half-width of the uniform initialization interval, `6 / sqrt(n)`.
    pub fn init_bound(&self) -> f64 {
        6.0 / (self.entity_dim as f64).sqrt()
    }
}

/// Typed view of one relation's parameter block.
///
/// Blocks are stored flat; matrices row-major. Tensor slices are `m`
/// contiguous `n x n` matrices, followed by `Q_r1` (`m x n`), `Q_r2`
/// (`m x n`) and `u_r` (`m`). `LinearPair` stores `Q_r1`, `Q_r2`, then `u_r`
/// when present.
#[derive(Clone, Copy, Debug)]
pub enum RelationParams<'a> {
    TranslationVector {
        v: ArrayView1<'a, f64>,
    },
    DiagonalBilinear {
        d: ArrayView1<'a, f64>,
    },
    FullBilinear {
        m: ArrayView2<'a, f64>,
    },
    LinearPair {
        q1: ArrayView2<'a, f64>,
        q2: ArrayView2<'a, f64>,
        u: Option<ArrayView1<'a, f64>>,
    },
    TensorPlusLinear {
        t: ArrayView3<'a, f64>,
        q1: ArrayView2<'a, f64>,
        q2: ArrayView2<'a, f64>,
        u: ArrayView1<'a, f64>,
    },
}

/// Offsets of the parts of a flat relation block.
#[derive(Clone, Copy, Debug)]
pub(crate) struct BlockLayout {
    pub n: usize,
    pub m: usize,
    pub q1: usize,
    pub q2: usize,
    pub u: usize,
    pub len: usize,
}

impl BlockLayout {
    pub fn new(kind: ModelKind, n: usize) -> Self {
        let m = kind.output_dim();
        let tensor_len = match kind {
            ModelKind::BilinearLinear | ModelKind::Ntn { .. } => m * n * n,
            _ => 0,
        };
        let q1 = tensor_len;
        let q2 = q1 + m * n;
        let u = q2 + m * n;
        BlockLayout {
            n,
            m,
            q1,
            q2,
            u,
            len: kind.relation_param_count(n),
        }
    }
}

impl<'a> RelationParams<'a> {
    pub(crate) fn view(kind: ModelKind, n: usize, flat: &'a [f64]) -> Self {
        let l = BlockLayout::new(kind, n);
        debug_assert_eq!(flat.len(), l.len);
        let mat = |start: usize, rows: usize| {
            ArrayView2::from_shape((rows, n), &flat[start..start + rows * n]).unwrap()
        };
        match kind {
            ModelKind::TransE => RelationParams::TranslationVector {
                v: ArrayView1::from(flat),
            },
            ModelKind::BilinearDiag => RelationParams::DiagonalBilinear {
                d: ArrayView1::from(flat),
            },
            ModelKind::Bilinear => RelationParams::FullBilinear { m: mat(0, n) },
            ModelKind::Distance { .. } => RelationParams::LinearPair {
                q1: mat(l.q1, l.m),
                q2: mat(l.q2, l.m),
                u: None,
            },
            ModelKind::SingleLayer { .. } => RelationParams::LinearPair {
                q1: mat(l.q1, l.m),
                q2: mat(l.q2, l.m),
                u: Some(ArrayView1::from(&flat[l.u..l.u + l.m])),
            },
            ModelKind::BilinearLinear | ModelKind::Ntn { .. } => RelationParams::TensorPlusLinear {
                t: ArrayView3::from_shape((l.m, n, n), &flat[..l.q1]).unwrap(),
                q1: mat(l.q1, l.m),
                q2: mat(l.q2, l.m),
                u: ArrayView1::from(&flat[l.u..l.u + l.m]),
            },
        }
    }
}

/// All learnable parameters of one model, plus AdaGrad state.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub(crate) kind: ModelKind,
    pub(crate) hyper: Hyperparams,
    pub(crate) entities: EmbeddingTable,
    pub(crate) relations: Array2<f64>,
    pub(crate) entity_accum: Array2<f64>,
    pub(crate) relation_accum: Array2<f64>,
}

impl ModelParams {
    /// All-zero parameters of the right shape.
    pub fn zeros(kind: ModelKind, hyper: Hyperparams, num_entities: usize, num_relations: usize) -> Self {
        let n = hyper.entity_dim;
        let p = kind.relation_param_count(n);
        ModelParams {
            kind,
            hyper,
            entities: Array2::zeros((num_entities, n)),
            relations: Array2::zeros((num_relations, p)),
            entity_accum: Array2::zeros((num_entities, n)),
            relation_accum: Array2::zeros((num_relations, p)),
        }
    }

    /// Uniform `[-6/sqrt(n), 6/sqrt(n)]` initialization; entity rows are then
    /// scaled to unit length. Deterministic in `hyper.seed`.
    pub fn init_random(
        kind: ModelKind,
        hyper: Hyperparams,
        num_entities: usize,
        num_relations: usize,
    ) -> Result<Self> {
        hyper.validate()?;
        if num_entities == 0 || num_relations == 0 {
            return Err(Error::Config(format!(
                "need at least one entity and one relation, got {num_entities} and {num_relations}"
            )));
        }
        let mut rng = rng::generator(hyper.seed, Stream::Init);
        let bound = hyper.init_bound();
        let mut params = ModelParams::zeros(kind, hyper, num_entities, num_relations);
        params
            .entities
            .iter_mut()
            .for_each(|x| *x = rng::uniform_symmetric(&mut rng, bound));
        params
            .relations
            .iter_mut()
            .for_each(|x| *x = rng::uniform_symmetric(&mut rng, bound));
        params.renormalize_entities(&mut rng);
        Ok(params)
    }

    /// The same parameters under different hyperparameters; the entity
    /// dimension must not change.
    pub fn with_hyperparams(mut self, hyper: Hyperparams) -> Result<Self> {
        hyper.validate()?;
        if hyper.entity_dim != self.hyper.entity_dim {
            return Err(Error::Config(format!(
                "entity_dim {} does not match the parameters ({})",
                hyper.entity_dim, self.hyper.entity_dim
            )));
        }
        self.hyper = hyper;
        Ok(self)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn entity_dim(&self) -> usize {
        self.hyper.entity_dim
    }

    pub fn activation(&self) -> Activation {
        self.hyper.activation
    }

    pub fn num_entities(&self) -> usize {
        self.entities.nrows()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.nrows()
    }

    pub fn entities(&self) -> &EmbeddingTable {
        &self.entities
    }

    pub fn entities_mut(&mut self) -> &mut EmbeddingTable {
        &mut self.entities
    }

    pub fn entity(&self, e: usize) -> ArrayView1<'_, f64> {
        self.entities.row(e)
    }

    pub fn entity_mut(&mut self, e: usize) -> ArrayViewMut1<'_, f64> {
        self.entities.row_mut(e)
    }

    /// Flat storage of all relation blocks, one row per relation.
    pub fn relation_table(&self) -> &Array2<f64> {
        &self.relations
    }

    pub fn relation_flat(&self, r: usize) -> &[f64] {
        self.relations
            .row(r)
            .to_slice()
            .expect("relation rows are contiguous")
    }

    pub fn relation_flat_mut(&mut self, r: usize) -> &mut [f64] {
        self.relations
            .row_mut(r)
            .into_slice()
            .expect("relation rows are contiguous")
    }

    pub fn relation(&self, r: usize) -> RelationParams<'_> {
        RelationParams::view(self.kind, self.entity_dim(), self.relation_flat(r))
    }

    pub fn entity_accumulator(&self) -> &Array2<f64> {
        &self.entity_accum
    }

    pub fn relation_accumulator(&self) -> &Array2<f64> {
        &self.relation_accum
    }

    pub(crate) fn blocks_and_accumulators_mut(
        &mut self,
    ) -> (&mut Array2<f64>, &mut Array2<f64>, &mut Array2<f64>, &mut Array2<f64>) {
        (
            &mut self.entities,
            &mut self.entity_accum,
            &mut self.relations,
            &mut self.relation_accum,
        )
    }

    /// Total learnable reals, `|E| n + |R| p` (accumulators excluded).
    pub fn parameter_count(&self) -> usize {
        self.entities.len() + self.relations.len()
    }

    /// Scales every entity row to unit length.
    pub fn renormalize_entities(&mut self, rng: &mut Rng) {
        let rows = 0..self.num_entities();
        self.renormalize_rows(rows, rng);
    }

    /// Scales the given entity rows to unit length; a zero row is replaced
    /// by a fresh random unit vector drawn from `rng`.
    pub fn renormalize_rows(&mut self, rows: impl IntoIterator<Item = usize>, rng: &mut Rng) {
        let bound = self.hyper.init_bound();
        for e in rows {
            let mut row = self.entities.row_mut(e);
            loop {
                let norm = row.dot(&row).sqrt();
                if norm > 0.0 && norm.is_finite() {
                    row.mapv_inplace(|x| x / norm);
                    break;
                }
                row.iter_mut()
                    .for_each(|x| *x = rng::uniform_symmetric(rng, bound));
            }
        }
    }

    /// Largest deviation of an entity row norm from 1.
    pub fn max_unit_norm_deviation(&self) -> f64 {
        self.entities
            .rows()
            .into_iter()
            .map(|row| (row.dot(&row).sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.entities.iter().chain(self.relations.iter()).all(|x| x.is_finite())
    }

    /// Copy of the parameters with a different model kind over the same
    /// flat relation blocks. The block lengths must match.
    pub fn reinterpret(&self, kind: ModelKind) -> Result<ModelParams> {
        if kind.relation_param_count(self.entity_dim()) != self.relations.ncols() {
            return Err(Error::Config(format!(
                "{kind} does not share the parameter layout of {}",
                self.kind
            )));
        }
        let mut out = self.clone();
        out.kind = kind;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper(n: usize) -> Hyperparams {
        Hyperparams {
            entity_dim: n,
            seed: 7,
            ..Hyperparams::default()
        }
    }

    #[test]
    fn init_is_deterministic_and_unit_norm() {
        let a = ModelParams::init_random(ModelKind::Ntn { slices: 2 }, hyper(5), 9, 3).unwrap();
        let b = ModelParams::init_random(ModelKind::Ntn { slices: 2 }, hyper(5), 9, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.max_unit_norm_deviation() <= UNIT_NORM_TOLERANCE);
        let bound = hyper(5).init_bound();
        assert!(a.relations.iter().all(|x| x.abs() <= bound));
        assert!(a.entity_accum.iter().all(|&x| x == 0.0));
        let c = ModelParams::init_random(
            ModelKind::Ntn { slices: 2 },
            Hyperparams { seed: 8, ..hyper(5) },
            9,
            3,
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn table_shape() {
        let p = ModelParams::init_random(ModelKind::BilinearDiag, hyper(100), 14_951, 2).unwrap();
        assert_eq!(p.entities().dim(), (14_951, 100));
    }

    #[test]
    fn equal_parameter_budget() {
        let a = ModelParams::zeros(ModelKind::TransE, hyper(13), 40, 6);
        let b = ModelParams::zeros(ModelKind::BilinearDiag, hyper(13), 40, 6);
        assert_eq!(a.parameter_count(), b.parameter_count());
        assert_eq!(a.parameter_count(), 40 * 13 + 6 * 13);
    }

    #[test]
    fn renormalize_three_four() {
        let mut p = ModelParams::zeros(ModelKind::BilinearDiag, hyper(2), 1, 1);
        p.entity_mut(0).assign(&ndarray::arr1(&[3.0, 4.0]));
        p.renormalize_entities(&mut rng::generator(0, Stream::Training));
        assert!((p.entity(0)[0] - 0.6).abs() < 1e-15);
        assert!((p.entity(0)[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn renormalize_unit_row_is_stable() {
        let mut p = ModelParams::init_random(ModelKind::TransE, hyper(10), 4, 1).unwrap();
        let before = p.entities().clone();
        p.renormalize_entities(&mut rng::generator(0, Stream::Training));
        for (a, b) in before.iter().zip(p.entities()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn renormalize_zero_row() {
        let mut p = ModelParams::zeros(ModelKind::TransE, hyper(6), 2, 1);
        p.renormalize_entities(&mut rng::generator(3, Stream::Training));
        assert!(p.max_unit_norm_deviation() <= UNIT_NORM_TOLERANCE);
    }

    #[test]
    fn tensor_layout() {
        let n = 2;
        let kind = ModelKind::Ntn { slices: 2 };
        let mut p = ModelParams::zeros(kind, hyper(n), 1, 1);
        let len = kind.relation_param_count(n);
        assert_eq!(len, 2 * 4 + 2 * 2 * 2 + 2);
        for (i, x) in p.relation_flat_mut(0).iter_mut().enumerate() {
            *x = i as f64;
        }
        match p.relation(0) {
            RelationParams::TensorPlusLinear { t, q1, q2, u } => {
                assert_eq!(t[[1, 0, 1]], 5.0);
                assert_eq!(q1[[0, 0]], 8.0);
                assert_eq!(q2[[1, 1]], 15.0);
                assert_eq!(u.to_vec(), vec![16.0, 17.0]);
            }
            other => panic!("unexpected view {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_hyperparams() {
        for bad in [
            Hyperparams { entity_dim: 0, ..hyper(3) },
            Hyperparams { learning_rate: 0.0, ..hyper(3) },
            Hyperparams { l2_reg: -1.0, ..hyper(3) },
            Hyperparams { minibatch_count: 0, ..hyper(3) },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
