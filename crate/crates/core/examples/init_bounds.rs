//! Monte Carlo check of the initialization bounds over many seeds.
//!
//! cargo run --release --example init_bounds [-- seeds]

use condense::{init_params, RunConfig};

fn main() -> condense::Result<()> {
    let seeds: u64 = std::env::args().nth(1).map(|s| s.parse().expect("seeds")).unwrap_or(100);
    let (m, alpha, delta) = (10_000usize, 1.0, 0.01);
    let scale = (m as f64).powf(1.0 - 2.0 * alpha);
    let max_bound = (m as f64).powf(-alpha) * (2.0 * (2.0 * m as f64 * 2.0 / delta).ln()).sqrt();
    let (mut inside_max, mut inside_a) = (0, 0);
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let st = init_params(&RunConfig { m, alpha, seed, ..RunConfig::default() })?;
        let max = st.params().fold(0.0f64, |acc, v| acc.max(v.abs()));
        worst = worst.max(max / max_bound);
        inside_max += (max <= max_bound) as u32;
        let norm_a = st.a().iter().map(|v| v * v).sum::<f64>().sqrt();
        inside_a += ((scale / 2.0).sqrt() <= norm_a && norm_a <= (1.5 * scale).sqrt()) as u32;
    }
    println!("max |theta| bound {max_bound:.4e}: held for {inside_max}/{seeds} seeds (largest ratio {worst:.3})");
    println!("|a| in [{:.3}, {:.3}]: {inside_a}/{seeds} seeds", (scale / 2.0).sqrt(), (1.5 * scale).sqrt());
    Ok(())
}
