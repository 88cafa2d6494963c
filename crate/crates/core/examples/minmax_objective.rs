//! The square pairwise loss as A + B + C, and the per-sample function H
//! whose pool mean recovers it at the closed-form auxiliaries.

use umauc::bagdata::Label;
use umauc::minmax::{decompose_square_loss, exact_label_vars, h_value, PerSampleContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pos = [1.2, 0.7, 0.9, 1.6];
    let neg = [0.1, -0.4, 0.5];
    let d = decompose_square_loss(&pos, &neg)?;
    let mut pairwise = 0.0;
    for x in &pos {
        for y in &neg {
            pairwise += (1.0 - x + y) * (1.0 - x + y);
        }
    }
    pairwise /= (pos.len() * neg.len()) as f64;
    println!(
        "A = {:.4}, B = {:.4}, C = {:.4}",
        d.a_term, d.b_term, d.c_term
    );
    println!("A + B + C = {:.6}, pairwise mean = {pairwise:.6}", d.total);

    let (a, b, alpha) = exact_label_vars(&pos, &neg, 1.0, false)?;
    let p = pos.len() as f64 / (pos.len() + neg.len()) as f64;
    let ctx = |y| PerSampleContext { label: 1, y, p };
    let sum: f64 = pos
        .iter()
        .map(|&s| h_value(&ctx(Label::Positive), s, a, b, alpha, 1.0))
        .chain(
            neg.iter()
                .map(|&s| h_value(&ctx(Label::Negative), s, a, b, alpha, 1.0)),
        )
        .sum();
    let mean_h = sum / (pos.len() + neg.len()) as f64;
    println!(
        "mean H = {mean_h:.6}, p(1-p)(A+B+C) = {:.6}",
        p * (1.0 - p) * d.total
    );
    Ok(())
}
