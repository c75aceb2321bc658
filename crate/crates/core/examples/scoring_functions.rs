//! Scores one triplet under every model family and checks the analytic
//! gradient of each against central differences.
//!
//! cargo run --example scoring_functions

use relembed::scoring::{score, score_gradients, ParamBlock};
use relembed::{Activation, Hyperparams, ModelKind, ModelParams, Triplet};

fn main() -> anyhow::Result<()> {
    let n = 6;
    let kinds = [
        ModelKind::Distance { rows: n },
        ModelKind::SingleLayer { hidden: 4 },
        ModelKind::TransE,
        ModelKind::Bilinear,
        ModelKind::BilinearDiag,
        ModelKind::BilinearLinear,
        ModelKind::Ntn { slices: 4 },
    ];
    let t = Triplet::new(0, 0, 1);
    println!("{:24} {:>10} {:>10} {:>12}", "family", "params/rel", "score", "grad check");
    for kind in kinds {
        for activation in [Activation::Identity, Activation::Tanh] {
            let hyper = Hyperparams { entity_dim: n, activation, seed: 3, ..Hyperparams::default() };
            let mut p = ModelParams::init_random(kind, hyper, 3, 1)?;
            let s = score(&p, &t);

            // central difference along the subject row
            let g = score_gradients(&p, &t);
            let analytic = g.get(ParamBlock::Entity(0)).expect("subject row is touched").clone();
            let h = 1e-5;
            let mut worst: f64 = 0.0;
            for j in 0..n {
                let x = p.entity(0)[j];
                p.entity_mut(0)[j] = x + h;
                let up = score(&p, &t);
                p.entity_mut(0)[j] = x - h;
                let down = score(&p, &t);
                p.entity_mut(0)[j] = x;
                worst = worst.max((analytic[j] - (up - down) / (2.0 * h)).abs());
            }
            let name = format!("{kind}/{activation}");
            println!("{name:24} {:>10} {s:>10.4} {worst:>12.1e}", kind.relation_param_count(n));
        }
    }
    Ok(())
}
