//! Moment conditions of the built-in grid before and after normalization,
//! and a CSV round trip of the normalized samples.
//!
//! cargo run --release --example check_data

use condense::{Dataset, Target};

fn main() -> condense::Result<()> {
    let raw = Dataset::grid(Target::F1, 1000, -15.0, 15.0)?;
    let check = raw.check_assumptions(0.1);
    println!("raw grid: dev1 = {:.3}, dev2 = {:.3}, passed = {}", check.dev1, check.dev2, check.passed());

    let norm = raw.normalize()?;
    let check = norm.check_assumptions(1e-10);
    println!("normalized: dev1 = {:.1e}, dev2 = {:.1e}, passed = {}", check.dev1, check.dev2, check.passed());
    if let Some(map) = norm.normalization() {
        println!("input map {:?}, target scale {:.6}", map.matrix, map.target_scale);
    }

    let padded = raw.pad_sign_directions(2)?.normalize()?;
    println!("padded to d = {}: dev1 = {:.1e}", padded.d(), padded.assumption_report().dev1);

    match Dataset::grid(Target::F1, 1000, -15.0, 15.0).and_then(|d| {
        let even: Vec<f64> = d.points().iter().map(|x| x * x).collect();
        Dataset::uniform(d.points().to_vec(), 1, even)?.normalize()
    }) {
        Ok(_) => println!("even target normalized"),
        Err(e) => println!("even target: {e}"),
    }

    let path = std::env::temp_dir().join("condense-normalized.csv");
    norm.to_csv(&path)?;
    let back = Dataset::from_csv(&path)?;
    println!("csv round trip: n = {}, d = {}, dev1 = {:.1e}", back.n(), back.d(), back.assumption_report().dev1);
    Ok(())
}
