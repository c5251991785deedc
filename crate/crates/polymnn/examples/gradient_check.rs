//! Verify reverse-mode gradients of every network kind against central
//! finite differences at random parameter points.
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use polymnn::autodiff::gradient_check;
use polymnn::mnn::{MnnKind, MnnModel};
use polymnn::rng::seeded_rng;
use polymnn::tensor::Tensor;
use polymnn::train::{loss_and_grads, GradModel};

fn random_tensor(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::from_vec(rows, cols, data).expect("sized to match")
}

fn main() -> polymnn::Result<()> {
    let mut rng = seeded_rng(11);
    let x = random_tensor(3, 8, &mut rng);
    let y = random_tensor(1, 8, &mut rng);

    for kind in MnnKind::ALL {
        let net = MnnModel::build(kind, 3, 6, 1, 3, &mut rng)?;
        let (_, grads) = loss_and_grads(&net, &x, &y)?;

        // flatten every parameter leaf into one vector for the checker
        let flat_grad: Vec<f64> = grads.iter().flat_map(|g| g.data().to_vec()).collect();
        let flat_params: Vec<f64> = net
            .params()
            .iter()
            .flat_map(|p| p.data().to_vec())
            .collect();

        let loss_at = |theta: &[f64]| {
            let mut probe = net.clone();
            let mut offset = 0;
            for p in probe.params_mut() {
                let dst = p.data_mut();
                dst.copy_from_slice(&theta[offset..offset + dst.len()]);
                offset += dst.len();
            }
            loss_and_grads(&probe, &x, &y).expect("loss evaluation").0
        };

        let check = gradient_check(loss_at, &flat_params, &flat_grad, 1e-6);
        println!(
            "{:7} {:4} params checked, max rel err {:.2e}, ok = {}",
            kind.name(),
            check.checked,
            check.max_rel,
            check.ok()
        );
    }
    Ok(())
}
