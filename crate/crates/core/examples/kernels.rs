//! The per-pixel kernels on a hand-checkable input, naive and factored.

use dsdmas::beamform::{
    count_ops, das_pixel, dmas_pixel, dsdmas_pixel, dsdmas_terms, BeamformMethod, Beamformer, EvalMode,
};

fn main() -> dsdmas::Result<()> {
    let x = [1.0, 4.0, 9.0];
    println!("delayed samples {x:?}");
    println!("DAS      {}", das_pixel(&x));
    // roots (1, 2, 3): 1*2 + 1*3 + 2*3
    println!("DMAS     {}", dmas_pixel(&x, EvalMode::Fast)?);
    // row terms (1*(2+3), 2*3) = (5, 6); sqrt(5) * sqrt(6)
    println!("terms    {:?}", dsdmas_terms(&x)?);
    println!("DS-DMAS  {:.6} (sqrt 30 = {:.6})", dsdmas_pixel(&x, EvalMode::Naive)?, 30f64.sqrt());

    let wide: Vec<f64> = (0..128).map(|i| (i as f64 * 0.37).sin()).collect();
    for b in [Beamformer::Dmas, Beamformer::DsDmas] {
        for mode in [EvalMode::Naive, EvalMode::Fast] {
            let (v, c) = count_ops(&wide, BeamformMethod::new(b, mode))?;
            println!(
                "M=128 {:<8} {:<5} value {v:>10.4}  couplings {:>5}  term products {:>3}  multiplications {:>5}",
                b.label(),
                mode.name(),
                c.couplings,
                c.term_products,
                c.multiplications()
            );
        }
    }
    Ok(())
}
