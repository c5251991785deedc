//! Parse polynomial expressions, inspect their structure, and evaluate them.
//!
//! ```bash
//! cargo run --example parse_polynomials
//! ```

use polymnn::poly::{builtin_polynomials, PolynomialExpr};

fn main() -> polymnn::Result<()> {
    let expr: PolynomialExpr = "2a^3 6b^2 - c".parse()?;
    println!("parsed      {expr}");
    println!("order       {}", expr.order());
    println!("interaction {}", expr.interactions());
    println!("variables   {:?}", expr.variables());
    // variables bind in alphabetical order: a=2, b=1, c=3
    println!("at (2,1,3)  {}", expr.eval_ordered(&[2.0, 1.0, 3.0])?);

    println!("\nbuiltin target suite:");
    for p in builtin_polynomials() {
        println!("  {:28} order {:2}  interaction {}", p.to_string(), p.order(), p.interactions());
    }
    Ok(())
}
