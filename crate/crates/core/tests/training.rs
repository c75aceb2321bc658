mod common;

use relembed::rng::{generator, Stream};
use relembed::synthetic::{planted_clusters, PlantedConfig};
use relembed::train::{
    adagrad_update, batch_gradient, batch_objective, margin_loss, sample_negatives, train, TrainConfig,
    TrainingExample,
};
use relembed::{Activation, Error, Hyperparams, ModelKind, ModelParams, Triplet, TripletStore};

use common::*;

#[test]
fn margin_loss_examples() {
    assert_eq!(margin_loss(2.0, 0.5), 0.0);
    assert_eq!(margin_loss(0.7, 0.7), 1.0);
    assert!((margin_loss(0.2, 0.5) - 1.3).abs() < 1e-15);
}

#[test]
fn adagrad_examples() {
    let (mut acc, mut theta) = (vec![0.0], vec![1.0]);
    adagrad_update(&mut acc, &mut theta, &[0.0], 0.1, 1e-8);
    assert_eq!((acc[0], theta[0]), (0.0, 1.0));

    adagrad_update(&mut acc, &mut theta, &[0.5], 0.1, 1e-8);
    let first = 1.0 - theta[0];
    assert!((first - 0.1 * 0.5 / (0.25f64 + 1e-8).sqrt()).abs() < 1e-15);
    assert!((first - 0.1).abs() < 1e-7);
    assert_eq!(acc[0], 0.25);

    let before = theta[0];
    adagrad_update(&mut acc, &mut theta, &[0.5], 0.1, 1e-8);
    assert!(before - theta[0] < first);
}

#[test]
fn two_entity_corruption_is_forced() {
    let store = TripletStore::from_names(&[("a", "r", "b")], &[], &[]).unwrap();
    let t = store.train()[0];
    let mut rng = generator(1, Stream::Training);
    for _ in 0..50 {
        let (s, o) = sample_negatives(&t, &store, &mut rng);
        assert_eq!(s, Triplet::new(1, 0, 1));
        assert_eq!(o, Triplet::new(0, 0, 0));
    }
}

#[test]
fn negatives_are_never_the_positive_and_are_reproducible() {
    let store = planted_clusters(&PlantedConfig::default()).unwrap();
    let draw = |seed| {
        let mut rng = generator(seed, Stream::Training);
        store.train().iter().map(|t| sample_negatives(t, &store, &mut rng)).collect::<Vec<_>>()
    };
    let a = draw(4);
    assert_eq!(a, draw(4));
    for (t, (s, o)) in store.train().iter().zip(&a) {
        assert_ne!(s, t);
        assert_ne!(o, t);
        assert_eq!((s.relation, s.object), (t.relation, t.object));
        assert_eq!((o.subject, o.relation), (t.subject, t.relation));
    }
}

#[test]
fn batch_gradient_matches_finite_differences_of_the_objective() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    use rand::{Rng, SeedableRng};
    for kind in all_kinds(3) {
        for activation in [Activation::Identity, Activation::Tanh] {
            let mut p = random_params(kind, 3, 5, 2, activation, 17);
            let mut h = p.hyper().clone();
            h.l2_reg = 0.01;
            p = p.with_hyperparams(h).unwrap();
            let t = |rng: &mut rand_chacha::ChaCha8Rng| {
                Triplet::new(rng.random_range(0..5), rng.random_range(0..2), rng.random_range(0..5))
            };
            let examples: Vec<TrainingExample> = (0..6)
                .map(|_| TrainingExample {
                    positive: t(&mut rng),
                    corrupted_subject: t(&mut rng),
                    corrupted_object: t(&mut rng),
                })
                .collect();
            let g = batch_gradient(&p, &examples);
            let step = 1e-6;
            let mut num = Vec::new();
            let mut ana = Vec::new();
            let mut q = p.clone();
            for e in 0..5 {
                for j in 0..3 {
                    let x = q.entity(e)[j];
                    q.entity_mut(e)[j] = x + step;
                    let up = batch_objective(&q, &examples);
                    q.entity_mut(e)[j] = x - step;
                    let down = batch_objective(&q, &examples);
                    q.entity_mut(e)[j] = x;
                    num.push((up - down) / (2.0 * step));
                    ana.push(g.entities.get(&e).map_or(0.0, |v| v[j]));
                }
            }
            for r in 0..2 {
                for j in 0..q.relation_flat(r).len() {
                    let x = q.relation_flat(r)[j];
                    q.relation_flat_mut(r)[j] = x + step;
                    let up = batch_objective(&q, &examples);
                    q.relation_flat_mut(r)[j] = x - step;
                    let down = batch_objective(&q, &examples);
                    q.relation_flat_mut(r)[j] = x;
                    num.push((up - down) / (2.0 * step));
                    ana.push(g.relations.get(&r).map_or(0.0, |v| v[j]));
                }
            }
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let diff: Vec<f64> = ana.iter().zip(&num).map(|(a, b)| a - b).collect();
            let rel = norm(&diff) / norm(&ana).max(norm(&num)).max(1e-8);
            assert!(rel < 1e-4, "{kind} {activation}: relative error {rel}");
        }
    }
}

#[test]
fn one_triplet_loss_decreases() {
    let store = TripletStore::from_names(&[("a", "r", "b")], &[], &[]).unwrap();
    let hyper = Hyperparams { entity_dim: 4, epochs: 50, minibatch_count: 1, ..Hyperparams::default() };
    let init = ModelParams::init_random(ModelKind::BilinearDiag, hyper, 2, 1).unwrap();
    let (_, trace) = train(&store, &TrainConfig::default(), init).unwrap();
    let losses = trace.losses();
    assert_eq!(losses.len(), 50);
    assert!(losses[49] < losses[0], "{losses:?}");
}

#[test]
fn loss_trace_is_reproducible() {
    let store = planted_clusters(&PlantedConfig::default()).unwrap();
    let run = || {
        let hyper = Hyperparams { entity_dim: 6, epochs: 4, seed: 12, ..Hyperparams::default() };
        let init = ModelParams::init_random(ModelKind::TransE, hyper, 50, 5).unwrap();
        train(&store, &TrainConfig::default(), init).unwrap()
    };
    let (pa, ta) = run();
    let (pb, tb) = run();
    assert_eq!(pa, pb);
    assert_eq!(ta.without_timing(), tb.without_timing());
}

#[test]
fn tanh_mode_does_not_renormalize() {
    let store = planted_clusters(&PlantedConfig::default()).unwrap();
    let hyper = Hyperparams { entity_dim: 6, epochs: 3, activation: Activation::Tanh, ..Hyperparams::default() };
    let init = ModelParams::init_random(ModelKind::BilinearDiag, hyper, 50, 5).unwrap();
    let (trained, _) = train(&store, &TrainConfig::default(), init).unwrap();
    assert!(trained.max_unit_norm_deviation() > 1e-3);
}

#[test]
fn zero_learning_rate_is_rejected() {
    let hyper = Hyperparams { learning_rate: 0.0, ..Hyperparams::default() };
    assert!(matches!(ModelParams::init_random(ModelKind::TransE, hyper, 2, 1), Err(Error::Config(_))));
}

#[test]
fn empty_training_split_is_an_error() {
    let store = TripletStore::from_names(&[], &[], &[("a", "r", "b")]).unwrap();
    let init = ModelParams::init_random(ModelKind::TransE, Hyperparams::default(), 2, 1).unwrap();
    assert!(matches!(train(&store, &TrainConfig::default(), init), Err(Error::Data(_))));
}

#[test]
fn exploding_updates_abort_with_numeric_error() {
    let store = planted_clusters(&PlantedConfig::default()).unwrap();
    let hyper = Hyperparams {
        entity_dim: 4,
        epochs: 5,
        learning_rate: 1e300,
        activation: Activation::Tanh,
        ..Hyperparams::default()
    };
    let init = ModelParams::init_random(ModelKind::Bilinear, hyper, 50, 5).unwrap();
    let err = train(&store, &TrainConfig::default(), init).unwrap_err();
    assert!(matches!(err, Error::NonFinite { .. }), "{err}");
}
