//! Surrogate labels, mixing fractions and the implied bag-pair weights.

use umauc::reduction::{build_plan, surrogate_labels};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sizes = [100, 50, 150, 200];
    let m = sizes.len();
    for id in 1..=m {
        println!("bag {id} labels {:?}", surrogate_labels(id, m)?.to_vec_u8());
    }
    let plan = build_plan(&sizes)?;
    println!("p_k = {:?}", plan.mixing_fractions());
    for w in plan.pair_weights() {
        println!("z[{},{}] = {:.4}", w.i, w.j, w.z);
    }
    println!("{}", serde_json::to_string_pretty(&plan.dump())?);
    Ok(())
}
