//! Layered-medium round trip: a piecewise-constant susceptibility stack is
//! turned into its measurement trace, and boundaries, layer values and
//! one-way transmission amplitudes are recovered from the trace alone.
//!
//! Run with `cargo run --release --example layered_stack`.

use ffoct::layered::{
    fresnel, layered_forward_trace, layered_reconstruct, LayerStack, LayeredOptions,
};
use ffoct::model::Units;

fn main() -> ffoct::Result<()> {
    let u = Units::default();
    let t_support = 2.0;
    let stack = LayerStack::new(vec![12.0, 7.0, 3.0, 0.0], vec![0.3, 0.9, 0.5])?;
    for l in 0..stack.n_layers() {
        let chi_prev = if l == 0 { 0.0 } else { stack.chi[l - 1] };
        let (rho, tau) = fresnel(chi_prev, stack.chi[l])?;
        println!(
            "layer {}: depths [{:.1}, {:.1}], chi {:.2}, interface rho {:+.4} tau {:.4}",
            l + 1,
            stack.boundaries[l],
            stack.boundaries[l + 1],
            stack.chi[l],
            rho,
            tau
        );
    }

    let trace = layered_forward_trace(&stack, t_support, t_support / 16.0, u)?;
    println!("trace: {} samples, step {:.4}", trace.values.len(), trace.dt);

    let rec = layered_reconstruct(&trace, t_support, &LayeredOptions::default(), u)?;
    println!("detected boundary onsets at t = {:?}", rec.boundary_times);
    for l in 0..rec.stack.n_layers() {
        println!(
            "recovered layer {}: depths [{:.4}, {:.4}], chi {:.6} (true {:.2}), \
             incident amplitude {:.6}",
            l + 1,
            rec.stack.boundaries[l],
            rec.stack.boundaries[l + 1],
            rec.stack.chi[l],
            stack.chi[l],
            rec.amplitudes[l]
        );
    }
    println!("note: {}", rec.model_note);
    Ok(())
}
