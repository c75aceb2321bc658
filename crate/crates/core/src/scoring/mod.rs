//! Entity projection, the linear and bilinear building blocks, the scoring
//! function of every model family, and exact score gradients.
//!
//! Every family scores higher-is-better. With `y1 = f(w_s)`, `y2 = f(w_o)`:
//!
//! | family | score |
//! |--------|-------|
//! | Distance | `-‖Q1 y1 - Q2 y2‖₁` |
//! | SingleLayer | `uᵀ tanh(Q1 y1 + Q2 y2)` |
//! | TransE | `-‖y1 - y2 + v‖₂²` |
//! | Bilinear | `y1ᵀ M y2` |
//! | BilinearDiag | `Σ y1ᵢ dᵢ y2ᵢ` |
//! | BilinearLinear | `uᵀ (y1ᵀ T y2 + Q1 y1 + Q2 y2)`, one slice |
//! | Ntn | `uᵀ tanh(y1ᵀ T y2 + Q1 y1 + Q2 y2)` |

mod candidates;
mod kind;

use ndarray::{Array1, ArrayView1, ArrayView2, ArrayView3};

use crate::data::Triplet;
use crate::params::{BlockLayout, ModelParams, RelationParams};

pub use candidates::{score_all_candidates, CandidateScorer};
pub use kind::{Activation, ModelKind};

/// Which argument of a triplet is replaced by candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Subject,
    Object,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Subject, Side::Object];

    pub fn name(self) -> &'static str {
        match self {
            Side::Subject => "subject",
            Side::Object => "object",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// The entity on this side of `t`.
    pub fn of(self, t: &Triplet) -> usize {
        match self {
            Side::Subject => t.subject,
            Side::Object => t.object,
        }
    }

    /// `t` with this side replaced by `entity`.
    pub fn replace(self, t: &Triplet, entity: usize) -> Triplet {
        match self {
            Side::Subject => Triplet::new(entity, t.relation, t.object),
            Side::Object => Triplet::new(t.subject, t.relation, entity),
        }
    }
}

/// `y = f(w_e)`.
pub fn project_entity(params: &ModelParams, e: usize) -> Array1<f64> {
    let f = params.activation();
    params.entity(e).mapv(|x| f.apply(x))
}

/// The linear form `A1 y1 + A2 y2`, i.e. `Aᵀ [y1; y2]` with `Aᵀ = [A1 | A2]`.
///
/// Panics on inconsistent shapes.
pub fn linear_form(
    a1: ArrayView2<'_, f64>,
    a2: ArrayView2<'_, f64>,
    y1: ArrayView1<'_, f64>,
    y2: ArrayView1<'_, f64>,
) -> Array1<f64> {
    assert_eq!(a1.dim(), a2.dim(), "linear form blocks differ in shape");
    assert_eq!(a1.ncols(), y1.len(), "linear form block does not match y1");
    assert_eq!(a2.ncols(), y2.len(), "linear form block does not match y2");
    a1.dot(&y1) + a2.dot(&y2)
}

/// Operator of the bilinear form `y1ᵀ B y2`.
#[derive(Clone, Copy, Debug)]
pub enum BilinearOperator<'a> {
    Matrix(ArrayView2<'a, f64>),
    Diagonal(ArrayView1<'a, f64>),
    /// `m` slices of `n x n`, slice index first.
    Tensor(ArrayView3<'a, f64>),
}

/// The bilinear form; a vector of length 1 for matrices and diagonals, one
/// component per slice for tensors. Panics on inconsistent shapes.
pub fn bilinear_form(op: BilinearOperator<'_>, y1: ArrayView1<'_, f64>, y2: ArrayView1<'_, f64>) -> Array1<f64> {
    match op {
        BilinearOperator::Matrix(m) => {
            assert_eq!(m.dim(), (y1.len(), y2.len()), "bilinear matrix shape");
            Array1::from_elem(1, y1.dot(&m.dot(&y2)))
        }
        BilinearOperator::Diagonal(d) => {
            assert!(d.len() == y1.len() && d.len() == y2.len(), "bilinear diagonal shape");
            Array1::from_elem(1, diagonal_form(d, y1, y2))
        }
        BilinearOperator::Tensor(t) => {
            let (_, rows, cols) = t.dim();
            assert_eq!((rows, cols), (y1.len(), y2.len()), "bilinear tensor shape");
            t.outer_iter().map(|slice| y1.dot(&slice.dot(&y2))).collect()
        }
    }
}

#[inline]
fn diagonal_form(d: ArrayView1<'_, f64>, y1: ArrayView1<'_, f64>, y2: ArrayView1<'_, f64>) -> f64 {
    y1.iter()
        .zip(d.iter())
        .zip(y2.iter())
        .map(|((a, w), b)| a * w * b)
        .sum()
}

/// Scores one triplet.
pub fn score(params: &ModelParams, t: &Triplet) -> f64 {
    let y1 = project_entity(params, t.subject);
    let y2 = project_entity(params, t.object);
    score_vectors(params.kind(), params.relation(t.relation), y1.view(), y2.view())
}

/// Scores projected entity vectors under one relation block.
pub fn score_vectors(
    kind: ModelKind,
    rel: RelationParams<'_>,
    y1: ArrayView1<'_, f64>,
    y2: ArrayView1<'_, f64>,
) -> f64 {
    match rel {
        RelationParams::TranslationVector { v } => -y1
            .iter()
            .zip(y2.iter())
            .zip(v.iter())
            .map(|((a, b), c)| {
                let delta = a - b + c;
                delta * delta
            })
            .sum::<f64>(),
        RelationParams::DiagonalBilinear { d } => diagonal_form(d, y1, y2),
        RelationParams::FullBilinear { m } => y1.dot(&m.dot(&y2)),
        RelationParams::LinearPair { q1, q2, u } => match u {
            None => -(q1.dot(&y1) - q2.dot(&y2)).iter().map(|x| x.abs()).sum::<f64>(),
            Some(u) => u.dot(&linear_form(q1, q2, y1, y2).mapv(f64::tanh)),
        },
        rel @ RelationParams::TensorPlusLinear { .. } => tensor_layer_score(rel, hidden_activation(kind), y1, y2),
    }
}

/// `uᵀ g(y1ᵀ T y2 + Q1 y1 + Q2 y2)` for a tensor block with an explicit
/// hidden non-linearity `g`. Ntn uses `tanh`, BilinearLinear the identity.
///
/// Panics if `rel` is not a tensor block.
pub fn tensor_layer_score(rel: RelationParams<'_>, g: Activation, y1: ArrayView1<'_, f64>, y2: ArrayView1<'_, f64>) -> f64 {
    let RelationParams::TensorPlusLinear { t, q1, q2, u } = rel else {
        panic!("tensor_layer_score needs a tensor block");
    };
    let hidden = bilinear_form(BilinearOperator::Tensor(t), y1, y2) + linear_form(q1, q2, y1, y2);
    u.dot(&hidden.mapv(|z| g.apply(z)))
}

/// Output non-linearity of the tensor families.
fn hidden_activation(kind: ModelKind) -> Activation {
    match kind {
        ModelKind::Ntn { .. } | ModelKind::SingleLayer { .. } => Activation::Tanh,
        _ => Activation::Identity,
    }
}

/// The hidden-layer input `z` (before `tanh` or `u`) for the families that
/// have one; `None` otherwise.
pub fn hidden_preactivation(params: &ModelParams, t: &Triplet) -> Option<Array1<f64>> {
    let y1 = project_entity(params, t.subject);
    let y2 = project_entity(params, t.object);
    match params.relation(t.relation) {
        RelationParams::LinearPair { q1, q2, u: Some(_) } => Some(linear_form(q1, q2, y1.view(), y2.view())),
        RelationParams::TensorPlusLinear { t, q1, q2, .. } => Some(
            bilinear_form(BilinearOperator::Tensor(t), y1.view(), y2.view())
                + linear_form(q1, q2, y1.view(), y2.view()),
        ),
        _ => None,
    }
}

/// A parameter block touched by a score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamBlock {
    /// A row of the entity table (pre-projection).
    Entity(usize),
    /// A whole flat relation block.
    Relation(usize),
}

/// Gradient of one score, one dense block per touched parameter location.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreGradients {
    entries: Vec<(ParamBlock, Array1<f64>)>,
}

impl ScoreGradients {
    pub fn get(&self, block: ParamBlock) -> Option<&Array1<f64>> {
        self.entries.iter().find(|(b, _)| *b == block).map(|(_, g)| g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamBlock, &Array1<f64>)> {
        self.entries.iter().map(|(b, g)| (*b, g))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Gradient of [`score`] with respect to the subject and object rows of the
/// entity table and the relation block (chain rule through `f`).
pub fn score_gradients(params: &ModelParams, t: &Triplet) -> ScoreGradients {
    score_with_gradients(params, t).1
}

/// Score and its gradient in one pass.
pub fn score_with_gradients(params: &ModelParams, t: &Triplet) -> (f64, ScoreGradients) {
    let f = params.activation();
    let y1 = project_entity(params, t.subject);
    let y2 = project_entity(params, t.object);
    let layout = BlockLayout::new(params.kind(), params.entity_dim());
    let (s, mut gy1, mut gy2, grel) = vector_gradients(
        params.kind(),
        layout,
        params.relation(t.relation),
        y1.view(),
        y2.view(),
    );
    gy1.zip_mut_with(&y1, |g, &y| *g *= f.derivative_from_output(y));
    gy2.zip_mut_with(&y2, |g, &y| *g *= f.derivative_from_output(y));
    let mut entries = Vec::with_capacity(3);
    if t.subject == t.object {
        entries.push((ParamBlock::Entity(t.subject), gy1 + gy2));
    } else {
        entries.push((ParamBlock::Entity(t.subject), gy1));
        entries.push((ParamBlock::Entity(t.object), gy2));
    }
    entries.push((ParamBlock::Relation(t.relation), grel));
    (s, ScoreGradients { entries })
}

/// Writes `scale * a ⊗ b` row-major into `out`.
fn outer_into(out: &mut [f64], scale: f64, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) {
    for (row, &ai) in out.chunks_exact_mut(b.len()).zip(a.iter()) {
        let c = scale * ai;
        for (o, &bj) in row.iter_mut().zip(b.iter()) {
            *o = c * bj;
        }
    }
}

/// Score plus gradients with respect to `y1`, `y2` and the flat relation block.
fn vector_gradients(
    kind: ModelKind,
    layout: BlockLayout,
    rel: RelationParams<'_>,
    y1: ArrayView1<'_, f64>,
    y2: ArrayView1<'_, f64>,
) -> (f64, Array1<f64>, Array1<f64>, Array1<f64>) {
    let n = layout.n;
    let mut grel = Array1::<f64>::zeros(layout.len);
    let g = grel.as_slice_mut().expect("fresh array is contiguous");
    match rel {
        RelationParams::TranslationVector { v } => {
            let delta = &y1 - &y2 + v;
            let s = -delta.dot(&delta);
            let gd = delta.mapv(|x| -2.0 * x);
            g.copy_from_slice(gd.as_slice().unwrap());
            let gy2 = -&gd;
            (s, gd, gy2, grel)
        }
        RelationParams::DiagonalBilinear { d } => {
            let s = diagonal_form(d, y1, y2);
            for (i, gi) in g.iter_mut().enumerate() {
                *gi = y1[i] * y2[i];
            }
            (s, &d * &y2, &d * &y1, grel)
        }
        RelationParams::FullBilinear { m } => {
            let my2 = m.dot(&y2);
            let s = y1.dot(&my2);
            outer_into(g, 1.0, y1, y2);
            let gy2 = m.t().dot(&y1);
            (s, my2, gy2, grel)
        }
        RelationParams::LinearPair { q1, q2, u: None } => {
            let a = q1.dot(&y1) - q2.dot(&y2);
            let s = -a.iter().map(|x| x.abs()).sum::<f64>();
            // subgradient 0 at a kink
            let sign = a.mapv(|x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 });
            outer_into(&mut g[layout.q1..layout.q2], -1.0, sign.view(), y1);
            outer_into(&mut g[layout.q2..layout.u], 1.0, sign.view(), y2);
            let gy1 = -q1.t().dot(&sign);
            let gy2 = q2.t().dot(&sign);
            (s, gy1, gy2, grel)
        }
        RelationParams::LinearPair { q1, q2, u: Some(u) } => {
            let h = linear_form(q1, q2, y1, y2).mapv(f64::tanh);
            let s = u.dot(&h);
            let back = &u * &h.mapv(|x| 1.0 - x * x);
            outer_into(&mut g[layout.q1..layout.q2], 1.0, back.view(), y1);
            outer_into(&mut g[layout.q2..layout.u], 1.0, back.view(), y2);
            g[layout.u..layout.len].copy_from_slice(h.as_slice().unwrap());
            (s, q1.t().dot(&back), q2.t().dot(&back), grel)
        }
        RelationParams::TensorPlusLinear { t, q1, q2, u } => {
            let act = hidden_activation(kind);
            let ty2: Vec<Array1<f64>> = t.outer_iter().map(|slice| slice.dot(&y2)).collect();
            let z: Array1<f64> = ty2.iter().map(|v| y1.dot(v)).collect::<Array1<f64>>()
                + linear_form(q1, q2, y1, y2);
            let h = z.mapv(|x| act.apply(x));
            let s = u.dot(&h);
            let back: Array1<f64> = u
                .iter()
                .zip(h.iter())
                .map(|(&uk, &hk)| uk * act.derivative_from_output(hk))
                .collect();
            let nn = n * n;
            for k in 0..layout.m {
                outer_into(&mut g[k * nn..(k + 1) * nn], back[k], y1, y2);
            }
            outer_into(&mut g[layout.q1..layout.q2], 1.0, back.view(), y1);
            outer_into(&mut g[layout.q2..layout.u], 1.0, back.view(), y2);
            g[layout.u..layout.len].copy_from_slice(h.as_slice().unwrap());
            let mut gy1 = q1.t().dot(&back);
            let mut gy2 = q2.t().dot(&back);
            for (k, slice) in t.outer_iter().enumerate() {
                gy1.scaled_add(back[k], &ty2[k]);
                gy2.scaled_add(back[k], &slice.t().dot(&y1));
            }
            (s, gy1, gy2, grel)
        }
    }
}
