//! The remainder left after the leading linear and cubic terms of the update
//! shrinks like the cube of the parameter scale.
//!
//! cargo run --release --example residual_scaling

use condense::dynamics::decompose_update;
use condense::rng::GaussianStream;
use condense::{Activation, NetworkState, RunConfig};

fn main() -> condense::Result<()> {
    let cfg = RunConfig { m: 200, ..RunConfig::default() };
    let data = cfg.dataset()?;
    let mut a = vec![0.0; cfg.m];
    let mut w = vec![0.0; cfg.m];
    GaussianStream::new(1, 0).fill_normal(&mut a, 1.0);
    GaussianStream::new(1, 1).fill_normal(&mut w, 1.0);
    let base = NetworkState::new(a, w, 1, 0.0)?;
    let mut last: Option<(f64, f64)> = None;
    for s in [1e-1, 1e-2, 1e-3, 1e-4] {
        let dec = decompose_update(&base.scaled(s)?, &data, &Activation::tanh())?;
        let f = dec.residual_a_inf();
        let slope = last.map(|(s0, f0)| (f / f0).ln() / (s / s0).ln());
        println!("s = {s:.0e}  |f|_inf = {f:.3e}  |g|_inf = {:.3e}  local slope {}", dec.residual_w_inf(),
            slope.map(|v| format!("{v:.4}")).unwrap_or("-".into()));
        last = Some((s, f));
    }
    Ok(())
}
