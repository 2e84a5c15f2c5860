//! Compare the Fisher information in the outputs with that in the
//! Jacobian-derived statistic for a scalar one-layer model.
//!
//! cargo run --release --example fisher_theory

use gradprint::fisherlab::{fisher_d_closed, verify_theorem, Activation, McConfig, ScalarModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mc = McConfig {
        samples: 1_000_000,
        fd_step: None,
        seed: 0,
    };
    for (f, w, k, s) in [
        (Activation::Tanh, 1.0, 0.5, 0.5),
        (Activation::Softplus, 0.8, 0.2, 1.0),
        (Activation::Tanh, 1.5, 1.0, 0.3),
    ] {
        let sm = ScalarModel::new(w, k, s, f)?;
        let closed = fisher_d_closed(&sm)?;
        let report = verify_theorem(&sm, &mc)?;
        println!(
            "{f} W={w} K={k}: I_Z={:.4} I_Y={:.4}+/-{:.4} I_D={:.4} (closed {:.4}) holds={}",
            report.i_z_closed,
            report.i_y_mc.value,
            report.i_y_mc.stderr,
            report.i_d_mc.value,
            closed.value,
            report.holds(),
        );
    }
    Ok(())
}
