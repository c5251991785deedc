//! Executes a resolved config: draws data, fits every requested model, and
//! scores each (model, target, split) cell into a report.
//!
//! Seeding discipline: every random decision flows from the config seed
//! through a named stream (`data/...`, `init/...`, `train/...`, `fit/...`),
//! so cells are reproducible independently of model order, and targets do
//! not perturb each other's draws. A cell that fails is recorded with its
//! error text and the run keeps going.

use crate::baselines::{
    fit_per_compartment, fit_relu_ffnn, fit_scalar_baseline, Mlp, PerCompartmentPredictor,
    ScalarBaseline, ScalarModel,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exp::config::{ExperimentConfig, ExperimentKind, ModelKind};
use crate::exp::report::{CellReport, ReportBody, RunReport, TimingEntry};
use crate::metamodel::{evaluate_rollout, lag_pair_dataset, SirMetamodel};
use crate::metrics::evaluate;
use crate::mnn::MnnModel;
use crate::poly::{ood_test_grid, sample_gaussian_dataset, GaussianSpec};
use crate::rng::{derive_seed, stream_rng};
use crate::sir::{generate_simulations, RateRegime, Simulation};
use crate::synth::SynthDataset;
use crate::train::{predict_chunked, train, TrainConfig};
use crate::tensor::Tensor;
use std::time::Instant;

/// Hidden width shared by every network column.
const HIDDEN: usize = 64;
/// Layer widths of the ReLU reference net.
const FFNN_HIDDEN: [usize; 2] = [64, 64];
/// Held-out tail of each training draw, matching the trainer's own split.
const VAL_FRACTION: f64 = 0.2;
/// Tree ensembles refit per stage or per tree, so their training sets are
/// capped by a seeded subsample above this many rows.
const TREE_FIT_CAP: usize = 100_000;
/// Transition-pair batches follow the simulations they came from (32 runs
/// per step), capped to bound the autodiff graph on the widest stacks.
const SIR_BATCH_CAP: usize = 128;

/// Runs the whole experiment described by `config`.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let mut cells = Vec::new();
    let mut timing = Vec::new();
    match config.experiment {
        ExperimentKind::Fig1Demo | ExperimentKind::Poly => {
            gaussian_experiment(config, &mut cells, &mut timing)?
        }
        ExperimentKind::Synth => synth_experiment(config, &mut cells, &mut timing)?,
        ExperimentKind::SirDuration | ExperimentKind::SirLag => {
            sir_experiment(config, &mut cells, &mut timing)?
        }
    }
    Ok(RunReport {
        body: ReportBody {
            config: config.snapshot(),
            cells,
        },
        timing,
    })
}

/// A fitted scalar regressor of any column kind, ready to score.
enum ScalarPredictor {
    Net(MnnModel),
    Ffnn(Mlp),
    Baseline(ScalarBaseline),
}

impl ScalarPredictor {
    fn params(&self) -> Option<usize> {
        match self {
            ScalarPredictor::Net(m) => Some(m.param_count()),
            ScalarPredictor::Ffnn(m) => Some(m.param_count()),
            ScalarPredictor::Baseline(_) => None,
        }
    }

    fn predict(&self, x: &Tensor) -> Result<Vec<f64>> {
        match self {
            ScalarPredictor::Net(m) => Ok(predict_chunked(m, x)?.row(0).to_vec()),
            ScalarPredictor::Ffnn(m) => Ok(predict_chunked(m, x)?.row(0).to_vec()),
            ScalarPredictor::Baseline(b) => Ok(b.predict_batch(x)),
        }
    }
}

/// One labelled evaluation set for a scalar target.
struct EvalSet<'a> {
    split: &'static str,
    mu: Option<f64>,
    sigma: Option<f64>,
    data: &'a Dataset,
}

/// Fits one model column. Networks train on the full draw with the shared
/// loop (which holds out its own tail); closed-form baselines see exactly
/// the same leading portion.
fn fit_scalar(
    config: &ExperimentConfig,
    model: ModelKind,
    target: &str,
    order: usize,
    data: &Dataset,
    fit_part: &Dataset,
) -> Result<ScalarPredictor> {
    match model {
        ModelKind::Mnn(kind) => {
            let mut rng = stream_rng(config.seed, &format!("init/{target}/{}", kind.name()));
            let mut net = MnnModel::build(kind, data.n_features(), HIDDEN, 1, order.max(1), &mut rng)?;
            let cfg = TrainConfig::new(
                config.epochs,
                derive_seed(config.seed, &format!("train/{target}/{}", kind.name())),
            );
            train(&mut net, data, &cfg)?;
            Ok(ScalarPredictor::Net(net))
        }
        ModelKind::FfnnRelu => {
            let cfg = TrainConfig::new(
                config.epochs,
                derive_seed(config.seed, &format!("train/{target}/ffnn_relu")),
            );
            let (mlp, _) = fit_relu_ffnn(data, &FFNN_HIDDEN, &cfg)?;
            Ok(ScalarPredictor::Ffnn(mlp))
        }
        ModelKind::Baseline(kind) => {
            let seed = derive_seed(config.seed, &format!("fit/{target}/{}", kind.name()));
            let fitted = fit_scalar_baseline(kind, &fit_part.x, fit_part.y.row(0), seed)?;
            Ok(ScalarPredictor::Baseline(fitted))
        }
    }
}

fn scalar_cells(
    config: &ExperimentConfig,
    model: ModelKind,
    target: &str,
    order: usize,
    data: &Dataset,
    fit_part: &Dataset,
    val_part: &Dataset,
    evals: &[EvalSet<'_>],
) -> Result<Vec<CellReport>> {
    let predictor = fit_scalar(config, model, target, order, data, fit_part)?;
    let mut out = Vec::with_capacity(1 + evals.len());

    let pred = predictor.predict(&val_part.x)?;
    let mut cell = CellReport::new(model.name(), target, "val");
    cell.params = predictor.params();
    cell.metrics = Some(evaluate(val_part.y.row(0), &pred, config.nan_policy)?);
    out.push(cell);

    for ev in evals {
        let pred = predictor.predict(&ev.data.x)?;
        let mut cell = CellReport::new(model.name(), target, ev.split);
        cell.mu = ev.mu;
        cell.sigma = ev.sigma;
        cell.params = predictor.params();
        cell.metrics = Some(evaluate(ev.data.y.row(0), &pred, config.nan_policy)?);
        out.push(cell);
    }
    Ok(out)
}

fn scalar_error_cells(
    model: ModelKind,
    target: &str,
    evals: &[EvalSet<'_>],
    err: &Error,
) -> Vec<CellReport> {
    let mut out = Vec::with_capacity(1 + evals.len());
    let mut val = CellReport::new(model.name(), target, "val");
    val.error = Some(err.to_string());
    out.push(val);
    for ev in evals {
        let mut cell = CellReport::new(model.name(), target, ev.split);
        cell.mu = ev.mu;
        cell.sigma = ev.sigma;
        cell.error = Some(err.to_string());
        out.push(cell);
    }
    out
}

fn gaussian_experiment(
    config: &ExperimentConfig,
    cells: &mut Vec<CellReport>,
    timing: &mut Vec<TimingEntry>,
) -> Result<()> {
    let (n_train, n_eval) = match config.experiment {
        ExperimentKind::Fig1Demo => (
            config.scale.fig1_train_samples(),
            config.scale.fig1_eval_samples(),
        ),
        _ => (
            config.scale.poly_train_samples(),
            config.scale.poly_eval_samples(),
        ),
    };
    let train_spec = GaussianSpec::new(config.train_mu, config.train_sigma)?;
    let test_specs = match config.experiment {
        ExperimentKind::Fig1Demo => vec![GaussianSpec::new(config.test_mu, config.test_sigma)?],
        _ => ood_test_grid(),
    };

    for expr in &config.polynomials {
        let target = expr.to_string();
        let data = sample_gaussian_dataset(
            expr,
            train_spec,
            n_train,
            derive_seed(config.seed, &format!("data/{target}/train")),
        )?;
        let (fit_part, val_part) = data.split_tail(VAL_FRACTION)?;
        let mut eval_data = Vec::with_capacity(test_specs.len());
        for spec in &test_specs {
            eval_data.push(sample_gaussian_dataset(
                expr,
                *spec,
                n_eval,
                derive_seed(config.seed, &format!("data/{target}/test/{}", spec.label())),
            )?);
        }
        let evals: Vec<EvalSet<'_>> = test_specs
            .iter()
            .zip(&eval_data)
            .map(|(spec, data)| EvalSet {
                split: "test",
                mu: Some(spec.mu),
                sigma: Some(spec.sigma),
                data,
            })
            .collect();

        for &model in &config.models {
            let started = Instant::now();
            let outcome = scalar_cells(
                config, model, &target, expr.order(), &data, &fit_part, &val_part, &evals,
            );
            timing.push(TimingEntry {
                model: model.name().to_string(),
                target: target.clone(),
                seconds: started.elapsed().as_secs_f64(),
            });
            match outcome {
                Ok(mut got) => cells.append(&mut got),
                Err(err) => cells.extend(scalar_error_cells(model, &target, &evals, &err)),
            }
        }
    }
    Ok(())
}

fn synth_experiment(
    config: &ExperimentConfig,
    cells: &mut Vec<CellReport>,
    timing: &mut Vec<TimingEntry>,
) -> Result<()> {
    for &func in &config.functions {
        let target = func.name();
        let synth = SynthDataset::generate(
            func,
            config.scale.synth_samples(),
            derive_seed(config.seed, &format!("data/{target}")),
        )?;
        let train_ds = synth.train()?;
        let test_ds = synth.test()?;
        let (fit_part, val_part) = train_ds.split_tail(VAL_FRACTION)?;
        let evals = [EvalSet {
            split: "test",
            mu: None,
            sigma: None,
            data: &test_ds,
        }];

        for &model in &config.models {
            let started = Instant::now();
            let outcome = scalar_cells(
                config,
                model,
                target,
                func.polynomial_order() as usize,
                &train_ds,
                &fit_part,
                &val_part,
                &evals,
            );
            timing.push(TimingEntry {
                model: model.name().to_string(),
                target: target.to_string(),
                seconds: started.elapsed().as_secs_f64(),
            });
            match outcome {
                Ok(mut got) => cells.append(&mut got),
                Err(err) => cells.extend(scalar_error_cells(model, target, &evals, &err)),
            }
        }
    }
    Ok(())
}

/// A fitted state-transition predictor of any column kind.
enum SirPredictor {
    Net(SirMetamodel),
    Ffnn(Mlp),
    PerCompartment(PerCompartmentPredictor<ScalarBaseline>),
}

impl SirPredictor {
    fn params(&self) -> Option<usize> {
        match self {
            SirPredictor::Net(m) => Some(m.param_count()),
            SirPredictor::Ffnn(m) => Some(m.param_count()),
            SirPredictor::PerCompartment(_) => None,
        }
    }

    fn rollout(
        &self,
        sims: &[Simulation],
        lag: usize,
        config: &ExperimentConfig,
    ) -> Result<crate::metrics::MetricsReport> {
        match self {
            SirPredictor::Net(m) => evaluate_rollout(m, sims, lag, config.nan_policy),
            SirPredictor::Ffnn(m) => evaluate_rollout(m, sims, lag, config.nan_policy),
            SirPredictor::PerCompartment(m) => evaluate_rollout(m, sims, lag, config.nan_policy),
        }
    }
}

fn sir_train_config(config: &ExperimentConfig, tag: &str, pairs_per_sim: usize) -> TrainConfig {
    let mut cfg = TrainConfig::new(config.epochs, derive_seed(config.seed, tag));
    cfg.batch_size = (32 * pairs_per_sim).min(SIR_BATCH_CAP);
    cfg
}

fn fit_sir(
    config: &ExperimentConfig,
    model: ModelKind,
    target: &str,
    lag: usize,
    pairs: &Dataset,
    pairs_per_sim: usize,
) -> Result<SirPredictor> {
    match model {
        ModelKind::Mnn(kind) => {
            let mut rng = stream_rng(config.seed, &format!("init/{target}/{}", kind.name()));
            let mut net = SirMetamodel::build(kind, lag, &mut rng)?;
            let cfg = sir_train_config(
                config,
                &format!("train/{target}/{}", kind.name()),
                pairs_per_sim,
            );
            train(&mut net, pairs, &cfg)?;
            Ok(SirPredictor::Net(net))
        }
        ModelKind::FfnnRelu => {
            let cfg = sir_train_config(config, &format!("train/{target}/ffnn_relu"), pairs_per_sim);
            let (mlp, _) = fit_relu_ffnn(pairs, &FFNN_HIDDEN, &cfg)?;
            Ok(SirPredictor::Ffnn(mlp))
        }
        ModelKind::Baseline(kind) => {
            let (fit_part, _) = pairs.split_tail(VAL_FRACTION)?;
            let fit_part = if model.is_tree() && fit_part.n_samples() > TREE_FIT_CAP {
                let mut rng =
                    stream_rng(config.seed, &format!("subsample/{target}/{}", kind.name()));
                let idx =
                    rand::seq::index::sample(&mut rng, fit_part.n_samples(), TREE_FIT_CAP)
                        .into_vec();
                fit_part.gather(&idx)
            } else {
                fit_part
            };
            let mut compartment = 0usize;
            let predictor = fit_per_compartment(&fit_part, |x, y| {
                let seed = derive_seed(
                    config.seed,
                    &format!("fit/{target}/{}/c{compartment}", kind.name()),
                );
                compartment += 1;
                fit_scalar_baseline(kind, x, y, seed)
            })?;
            Ok(SirPredictor::PerCompartment(predictor))
        }
    }
}

fn sir_cell(
    model: ModelKind,
    target: &str,
    split: &str,
    duration: usize,
    lag: usize,
) -> CellReport {
    let mut cell = CellReport::new(model.name(), target, split);
    cell.duration = Some(duration);
    cell.lag = Some(lag);
    cell.steps = Some(duration / lag);
    cell
}

fn sir_experiment(
    config: &ExperimentConfig,
    cells: &mut Vec<CellReport>,
    timing: &mut Vec<TimingEntry>,
) -> Result<()> {
    let n_train_sims = config.scale.sir_simulations();
    let n_test_sims = (n_train_sims / 5).max(1);
    let grid: Vec<(usize, usize)> = match config.experiment {
        ExperimentKind::SirDuration => {
            config.durations.iter().map(|&t| (t, config.lags[0])).collect()
        }
        _ => config.lags.iter().map(|&l| (config.durations[0], l)).collect(),
    };

    // One duration's draws serve every lag at that duration, and the streams
    // are named by run id alone, so sweeps share initial states and rates.
    let mut cached: Option<(usize, Vec<Simulation>, Vec<Simulation>)> = None;
    for (duration, lag) in grid {
        if cached.as_ref().map(|(t, _, _)| *t) != Some(duration) {
            let train_sims = generate_simulations(
                RateRegime::Train,
                n_train_sims,
                duration,
                derive_seed(config.seed, "sir/train"),
            )?;
            let test_sims = generate_simulations(
                RateRegime::Test,
                n_test_sims,
                duration,
                derive_seed(config.seed, "sir/test"),
            )?;
            cached = Some((duration, train_sims, test_sims));
        }
        let (_, train_sims, test_sims) = cached.as_ref().expect("cache was just filled");

        let pairs = lag_pair_dataset(train_sims, lag)?;
        let pairs_per_sim = pairs.n_samples() / train_sims.len();
        // The trainer holds out the last 20% of pairs; with every simulation
        // contributing the same number of pairs that boundary is a whole
        // number of simulations, so the rollout validation set matches.
        let val_sims = &train_sims[n_train_sims - n_train_sims / 5..];
        let target = format!("T{duration}_L{lag}");

        for &model in &config.models {
            let started = Instant::now();
            let outcome = fit_sir(config, model, &target, lag, &pairs, pairs_per_sim).and_then(
                |predictor| {
                    let mut val = sir_cell(model, &target, "val", duration, lag);
                    val.params = predictor.params();
                    val.metrics = Some(predictor.rollout(val_sims, lag, config)?);
                    let mut test = sir_cell(model, &target, "test", duration, lag);
                    test.params = predictor.params();
                    test.metrics = Some(predictor.rollout(test_sims, lag, config)?);
                    Ok(vec![val, test])
                },
            );
            timing.push(TimingEntry {
                model: model.name().to_string(),
                target: target.clone(),
                seconds: started.elapsed().as_secs_f64(),
            });
            match outcome {
                Ok(mut got) => cells.append(&mut got),
                Err(err) => {
                    for split in ["val", "test"] {
                        let mut cell = sir_cell(model, &target, split, duration, lag);
                        cell.error = Some(err.to_string());
                        cells.push(cell);
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp::config::Scale;
    use crate::metrics::NanPolicy;

    fn quick(parts: &str) -> ExperimentConfig {
        ExperimentConfig::parse(parts).unwrap()
    }

    #[test]
    fn the_demo_scores_val_and_shifted_test() {
        let config = quick("experiment = fig1_demo\nmodels = lr\n");
        let report = run(&config).unwrap();
        assert_eq!(report.body.cells.len(), 2);
        let val = &report.body.cells[0];
        assert_eq!((val.split.as_str(), val.target.as_str()), ("val", "a^2 - a"));
        let test = &report.body.cells[1];
        assert_eq!(test.split, "test");
        assert_eq!((test.mu, test.sigma), (Some(5.0), Some(1.0)));
        assert!(test.metrics.as_ref().unwrap().rrse.is_finite());
        assert_eq!(report.timing.len(), 1);
        assert!(report.timing[0].seconds >= 0.0);
    }

    #[test]
    fn the_polynomial_grid_emits_nine_test_cells_per_model() {
        let config = quick("experiment = poly\nmodels = avg, lr\npolynomials = a\n");
        let report = run(&config).unwrap();
        assert_eq!(report.body.cells.len(), 2 * 10);
        let avg_tests: Vec<_> = report
            .body
            .cells
            .iter()
            .filter(|c| c.model == "avg" && c.split == "test")
            .collect();
        assert_eq!(avg_tests.len(), 9);
        // grid order is mu-major
        assert_eq!(avg_tests[0].mu, Some(-50.0));
        assert_eq!(avg_tests[0].sigma, Some(1.0));
        assert_eq!(avg_tests[8].mu, Some(90.0));
        assert_eq!(avg_tests[8].sigma, Some(25.0));
        // a first-order target is solved exactly by least squares everywhere
        for cell in report.body.cells.iter().filter(|c| c.model == "lr") {
            assert!(cell.metrics.as_ref().unwrap().rrse < 1e-6);
        }
    }

    #[test]
    fn the_benchmark_experiment_scores_both_splits() {
        let config = quick("experiment = synth\nmodels = avg\nfunctions = currin\n");
        let report = run(&config).unwrap();
        assert_eq!(report.body.cells.len(), 2);
        assert_eq!(report.body.cells[0].split, "val");
        assert_eq!(report.body.cells[1].split, "test");
        assert_eq!(report.body.cells[1].target, "currin");
        // the mean of the inner region is no better than averaging outside it
        assert!(report.body.cells[1].metrics.as_ref().unwrap().rrse > 0.5);
    }

    #[test]
    fn the_epidemic_sweep_labels_cells_with_coordinates() {
        let config = quick("experiment = sir_duration\nmodels = lr\ndurations = 2\nlag = 1\n");
        let report = run(&config).unwrap();
        assert_eq!(report.body.cells.len(), 2);
        for cell in &report.body.cells {
            assert_eq!(cell.target, "T2_L1");
            assert_eq!(cell.duration, Some(2));
            assert_eq!(cell.lag, Some(1));
            assert_eq!(cell.steps, Some(2));
            assert!(cell.params.is_none());
            let m = cell.metrics.as_ref().unwrap();
            assert!(m.rrse.is_finite());
        }
    }

    #[test]
    fn reports_are_reproducible_from_the_config() {
        let config = quick("experiment = sir_duration\nmodels = lr, avg\ndurations = 2\nlag = 1\n");
        let a = run(&config).unwrap().body_json().unwrap();
        let b = run(&config).unwrap().body_json().unwrap();
        assert_eq!(a, b);
        let shifted = ExperimentConfig {
            seed: 2,
            ..config.clone()
        };
        assert_ne!(a, run(&shifted).unwrap().body_json().unwrap());
    }

    #[test]
    fn scale_and_policy_fields_respect_the_config() {
        let mut config = quick("experiment = fig1_demo\nmodels = avg\n");
        config.scale = Scale::Desk;
        config.nan_policy = NanPolicy::Skip;
        let report = run(&config).unwrap();
        assert_eq!(report.body.config.nan_policy, "skip");
        assert_eq!(report.body.config.train_samples, Some(5_000));
    }
}
