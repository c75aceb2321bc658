use std::borrow::Cow;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use super::{hidden_activation, score_vectors, Activation, Side};
use crate::data::Triplet;
use crate::params::{ModelParams, RelationParams};

/// Scores every entity as the replacement for one side of a query.
///
/// Holds the projected entity table `f(W)` so repeated queries against the
/// same parameters do not re-project it.
pub struct CandidateScorer<'a> {
    params: &'a ModelParams,
    projected: Cow<'a, Array2<f64>>,
}

impl<'a> CandidateScorer<'a> {
    pub fn new(params: &'a ModelParams) -> Self {
        let projected = match params.activation() {
            Activation::Identity => Cow::Borrowed(params.entities()),
            f => Cow::Owned(params.entities().mapv(|x| f.apply(x))),
        };
        CandidateScorer { params, projected }
    }

    pub fn params(&self) -> &ModelParams {
        self.params
    }

    pub fn num_entities(&self) -> usize {
        self.projected.nrows()
    }

    fn y(&self, e: usize) -> ArrayView1<'_, f64> {
        self.projected.row(e)
    }

    /// Same value as [`super::score`].
    pub fn score(&self, t: &Triplet) -> f64 {
        score_vectors(
            self.params.kind(),
            self.params.relation(t.relation),
            self.y(t.subject),
            self.y(t.object),
        )
    }

    /// Component `i` is the score of `query` with `side` replaced by entity `i`.
    pub fn score_all(&self, query: &Triplet, side: Side) -> Array1<f64> {
        let y_all = self.projected.as_ref();
        let kind = self.params.kind();
        match self.params.relation(query.relation) {
            RelationParams::TranslationVector { v } => {
                // object side: -‖(y1 + v) - y_i‖², subject side: -‖y_i - (y2 - v)‖²
                let target = match side {
                    Side::Object => &self.y(query.subject) + &v,
                    Side::Subject => &self.y(query.object) - &v,
                };
                y_all
                    .axis_iter(Axis(0))
                    .map(|row| {
                        -row.iter()
                            .zip(target.iter())
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                    })
                    .collect()
            }
            RelationParams::DiagonalBilinear { d } => {
                let fixed = match side {
                    Side::Object => self.y(query.subject),
                    Side::Subject => self.y(query.object),
                };
                y_all.dot(&(&fixed * &d))
            }
            RelationParams::FullBilinear { m } => {
                let c = match side {
                    Side::Object => m.t().dot(&self.y(query.subject)),
                    Side::Subject => m.dot(&self.y(query.object)),
                };
                y_all.dot(&c)
            }
            RelationParams::LinearPair { q1, q2, u } => {
                // hidden = C y_i + offset
                let (c, offset) = match (side, u.is_some()) {
                    (Side::Object, true) => (q2.to_owned(), q1.dot(&self.y(query.subject))),
                    (Side::Subject, true) => (q1.to_owned(), q2.dot(&self.y(query.object))),
                    (Side::Object, false) => (-&q2, q1.dot(&self.y(query.subject))),
                    (Side::Subject, false) => (q1.to_owned(), -q2.dot(&self.y(query.object))),
                };
                let hidden = y_all.dot(&c.t()) + &offset;
                match u {
                    None => hidden
                        .axis_iter(Axis(0))
                        .map(|row| -row.iter().map(|x| x.abs()).sum::<f64>())
                        .collect(),
                    Some(u) => hidden.mapv(f64::tanh).dot(&u),
                }
            }
            RelationParams::TensorPlusLinear { t, q1, q2, u } => {
                let m = q1.nrows();
                let mut c = Array2::<f64>::zeros((m, self.params.entity_dim()));
                let mut offset = Array1::<f64>::zeros(m);
                match side {
                    Side::Object => {
                        let y1 = self.y(query.subject);
                        for (k, slice) in t.outer_iter().enumerate() {
                            c.row_mut(k).assign(&(slice.t().dot(&y1) + q2.row(k)));
                            offset[k] = q1.row(k).dot(&y1);
                        }
                    }
                    Side::Subject => {
                        let y2 = self.y(query.object);
                        for (k, slice) in t.outer_iter().enumerate() {
                            c.row_mut(k).assign(&(slice.dot(&y2) + q1.row(k)));
                            offset[k] = q2.row(k).dot(&y2);
                        }
                    }
                }
                let act = hidden_activation(kind);
                let hidden = y_all.dot(&c.t()) + &offset;
                hidden.mapv(|z| act.apply(z)).dot(&u)
            }
        }
    }
}

/// One-shot form of [`CandidateScorer::score_all`].
pub fn score_all_candidates(params: &ModelParams, query: &Triplet, side: Side) -> Array1<f64> {
    CandidateScorer::new(params).score_all(query, side)
}
