//! Train one multiplicative network on a polynomial target and score it in
//! and out of distribution.
//!
//! ```bash
//! cargo run --example train_polynomial
//! ```

use polymnn::metrics::{evaluate, NanPolicy};
use polymnn::mnn::{MnnKind, MnnModel};
use polymnn::poly::{sample_gaussian_dataset, GaussianSpec, PolynomialExpr};
use polymnn::rng::stream_rng;
use polymnn::train::{predict_chunked, train, TrainConfig};

fn main() -> polymnn::Result<()> {
    let expr: PolynomialExpr = "a^2 - a".parse()?;
    let train_spec = GaussianSpec::new(0.0, 1.0)?;
    let data = sample_gaussian_dataset(&expr, train_spec, 4_000, 31)?;

    let mut net = MnnModel::build(MnnKind::Ccp, 1, 64, 1, expr.order(), &mut stream_rng(31, "init"))?;
    let history = train(&mut net, &data, &TrainConfig::new(20, 32))?;
    let last = history.last().expect("at least one epoch");
    println!(
        "trained {} for {} epochs: val mse {:.3e}, val rrse {:.4}",
        expr, last.epoch, last.val_mse, last.val_rrse
    );

    // score on progressively shifted distributions; training saw N(0,1) only
    for mu in [0.0, 2.0, 5.0, 20.0] {
        let spec = GaussianSpec::new(mu, 1.0)?;
        let eval = sample_gaussian_dataset(&expr, spec, 2_000, 99)?;
        let pred = predict_chunked(&net, &eval.x)?;
        let report = evaluate(eval.y.row(0), pred.row(0), NanPolicy::Propagate)?;
        println!("  {:8} rrse {:.4}  r2 {:.4}", spec.label(), report.rrse, report.r2);
    }
    Ok(())
}
