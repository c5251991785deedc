//! Fit every scalar baseline on one polynomial dataset and compare scores
//! inside and outside the training distribution.
//!
//! ```bash
//! cargo run --example scalar_baselines
//! ```

use polymnn::baselines::{fit_scalar_baseline, ScalarBaselineKind, ScalarModel};
use polymnn::metrics::{evaluate, NanPolicy};
use polymnn::poly::{sample_gaussian_dataset, GaussianSpec, PolynomialExpr};

fn main() -> polymnn::Result<()> {
    let expr: PolynomialExpr = "5a^2 + 6b^2".parse()?;
    let train = sample_gaussian_dataset(&expr, GaussianSpec::new(0.0, 5.0)?, 8_000, 3)?;
    let near = sample_gaussian_dataset(&expr, GaussianSpec::new(0.0, 5.0)?, 2_000, 4)?;
    let far = sample_gaussian_dataset(&expr, GaussianSpec::new(90.0, 5.0)?, 2_000, 5)?;

    println!("{:6} {:>12} {:>12}", "model", "in-dist", "shifted");
    for kind in ScalarBaselineKind::ALL {
        let model = fit_scalar_baseline(kind, &train.x, train.y.row(0), 17)?;
        let score = |data: &polymnn::data::Dataset| -> polymnn::Result<f64> {
            let pred = model.predict_batch(&data.x);
            Ok(evaluate(data.y.row(0), &pred, NanPolicy::Propagate)?.rrse)
        };
        println!("{:6} {:>12.4} {:>12.4}", kind.name(), score(&near)?, score(&far)?);
    }
    println!("\nrrse 1.0 means no better than predicting the mean; the trees");
    println!("interpolate well but cannot follow the target out of range.");
    Ok(())
}
