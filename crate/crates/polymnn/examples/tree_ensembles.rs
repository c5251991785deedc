//! Fit a single tree, a forest, and a boosted ensemble on the same curve,
//! and show where tree extrapolation goes flat.
//!
//! ```bash
//! cargo run --example tree_ensembles
//! ```

use polymnn::tree::{fit_gradient_boosting, fit_random_forest, fit_tree, BoostConfig, ForestConfig};
use polymnn::tensor::Tensor;

fn main() -> polymnn::Result<()> {
    // y = x^2 on [-3, 3]
    let n = 2_000;
    let xs: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let x = Tensor::from_vec(1, n, xs)?;

    let tree = fit_tree(&x, &ys, Some(4))?;
    let forest = fit_random_forest(&x, &ys, &ForestConfig::new(21))?;
    let boost = fit_gradient_boosting(&x, &ys, &BoostConfig::new())?;
    println!("depth-4 tree has {} leaves", tree.n_leaves());

    println!("\n{:>6} {:>8} {:>10} {:>10} {:>10}", "x", "truth", "tree", "forest", "boost");
    for probe in [0.0, 1.5, 2.9, 3.5, 10.0] {
        let row = [probe];
        println!(
            "{:>6.1} {:>8.2} {:>10.3} {:>10.3} {:>10.3}",
            probe,
            probe * probe,
            tree.predict_row(&row),
            forest.predict_row(&row),
            boost.predict_row(&row)
        );
    }
    println!("\npast the training range every column freezes at its edge value.");
    Ok(())
}
