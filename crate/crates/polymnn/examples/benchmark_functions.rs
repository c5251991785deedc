//! Sample a closed-form benchmark function, split it into a central training
//! box and an outer test shell, and compare a network against a forest.
//!
//! ```bash
//! cargo run --example benchmark_functions
//! ```

use polymnn::baselines::{fit_scalar_baseline, ScalarBaselineKind, ScalarModel};
use polymnn::metrics::{evaluate, NanPolicy};
use polymnn::mnn::{MnnKind, MnnModel};
use polymnn::rng::stream_rng;
use polymnn::synth::{metadata_table, BenchmarkFn, SynthDataset};
use polymnn::train::{predict_chunked, train, TrainConfig};

fn main() -> polymnn::Result<()> {
    println!("available functions:");
    for meta in metadata_table() {
        println!(
            "  {:18} arity {}  order {:2}  domain {:?}",
            meta.name, meta.arity, meta.polynomial_order, meta.domains[0]
        );
    }

    let func = BenchmarkFn::Currin;
    let synth = SynthDataset::generate(func, 10_000, 5)?;
    let train_ds = synth.train()?;
    let test_ds = synth.test()?;
    println!(
        "\n{}: {} training rows (central box), {} test rows (outer shell)",
        func.name(),
        train_ds.n_samples(),
        test_ds.n_samples()
    );

    let order = func.polynomial_order() as usize;
    let mut net = MnnModel::build(MnnKind::Pdc, func.arity(), 64, 1, order, &mut stream_rng(5, "init"))?;
    train(&mut net, &train_ds, &TrainConfig::new(40, 6))?;
    let net_pred = predict_chunked(&net, &test_ds.x)?;
    let net_score = evaluate(test_ds.y.row(0), net_pred.row(0), NanPolicy::Propagate)?;

    let forest = fit_scalar_baseline(ScalarBaselineKind::RandomForest, &train_ds.x, train_ds.y.row(0), 7)?;
    let forest_pred = forest.predict_batch(&test_ds.x);
    let forest_score = evaluate(test_ds.y.row(0), &forest_pred, NanPolicy::Propagate)?;

    println!("shell rrse: pdc {:.4}, rf {:.4}", net_score.rrse, forest_score.rrse);
    Ok(())
}
