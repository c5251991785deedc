//! Train an epidemic metamodel on one-step transitions, then roll whole
//! held-out epidemics forward from their initial states only.
//!
//! ```bash
//! cargo run --example metamodel_rollout
//! ```

use polymnn::metamodel::{evaluate_rollout, lag_pair_dataset, rollout_trace_csv, SirMetamodel};
use polymnn::metrics::NanPolicy;
use polymnn::mnn::MnnKind;
use polymnn::rng::{derive_seed, stream_rng};
use polymnn::sir::{generate_simulations, RateRegime};
use polymnn::train::{train, TrainConfig};

fn main() -> polymnn::Result<()> {
    let lag = 1;
    let train_sims = generate_simulations(RateRegime::Train, 400, 30, derive_seed(9, "train"))?;
    let test_sims = generate_simulations(RateRegime::Test, 80, 30, derive_seed(9, "test"))?;

    let pairs = lag_pair_dataset(&train_sims, lag)?;
    println!("{} transition pairs from {} runs", pairs.n_samples(), train_sims.len());

    let mut net = SirMetamodel::build(MnnKind::Ccp, lag, &mut stream_rng(9, "init"))?;
    println!("ccp metamodel, {} params", net.param_count());
    train(&mut net, &pairs, &TrainConfig::new(3, 10))?;

    // the test runs use rates the training regime never produces
    let report = evaluate_rollout(&net, &test_sims, lag, NanPolicy::Propagate)?;
    println!(
        "held-out regime rollout: rrse {:.4}, mae {:.4}, {} of {} states non-finite",
        report.rrse, report.mae, report.nan_count, report.n
    );

    println!("\ntrace of the first test run (truth vs rollout):");
    for line in rollout_trace_csv(&net, &test_sims[..1], lag)?.lines().take(6) {
        println!("  {line}");
    }
    Ok(())
}
