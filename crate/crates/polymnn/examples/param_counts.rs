//! Parameter counts for every network kind across polynomial orders, plus
//! the three-net metamodel sizes each lag induces.
//!
//! ```bash
//! cargo run --example param_counts
//! ```

use polymnn::metamodel::SirMetamodel;
use polymnn::mnn::{format_param_count, MnnKind, MnnModel};
use polymnn::rng::seeded_rng;

fn main() -> polymnn::Result<()> {
    let mut rng = seeded_rng(7);

    println!("scalar networks, 5 inputs, width 64:");
    print!("{:>8}", "order");
    for kind in MnnKind::ALL {
        print!("{:>10}", kind.name());
    }
    println!();
    for order in [1, 2, 3, 5, 7, 10] {
        print!("{order:>8}");
        for kind in MnnKind::ALL {
            let net = MnnModel::build(kind, 5, 64, 1, order, &mut rng)?;
            print!("{:>10}", net.param_count());
        }
        println!();
    }

    println!("\nepidemic metamodels (three nets, order 2^(L+1) - 1):");
    for lag in 1..=5 {
        print!("  L = {lag}:");
        for kind in MnnKind::ALL {
            let net = SirMetamodel::build(kind, lag, &mut rng)?;
            print!("  {} {}", kind.name(), format_param_count(net.param_count()));
        }
        println!();
    }
    Ok(())
}
