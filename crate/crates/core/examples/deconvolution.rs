//! Recover a sparse impulse train from a noisy view history and show how
//! the decay rate changes sparsity.

use impulses::filter::{convolve, FilterSpec, ViewHistory};
use impulses::nnls::{deconvolve, kkt_check, DEFAULT_TOLERANCE};

fn main() -> impulses::Result<()> {
    let horizon = 30;
    let mut planted = vec![0.0; horizon];
    planted[2] = 400.0;
    planted[11] = 150.0;
    planted[23] = 60.0;

    let spec = FilterSpec::new(0.3, horizon)?;
    let mut views = convolve(&planted, &spec)?;
    // deterministic wobble standing in for measurement noise
    for (k, v) in views.iter_mut().enumerate() {
        *v = (*v + 3.0 * ((k * 7) as f64).sin()).max(0.0);
    }
    let history = ViewHistory::new("demo", views.clone())?;

    let train = deconvolve(&history, &spec, DEFAULT_TOLERANCE)?;
    let kkt = kkt_check(&train.impulses, &views, &spec)?;
    println!(
        "residual norm {:.3}, kkt holds: {}",
        train.residual_norm,
        kkt.holds(1e-8)
    );
    for (k, (got, want)) in train.impulses.iter().zip(&planted).enumerate() {
        if *got > 0.0 || *want > 0.0 {
            println!("  t={k:>2}  recovered {got:>8.2}  planted {want:>6.1}");
        }
    }

    for gamma in [0.1, 0.3, 0.6] {
        let spec = FilterSpec::new(gamma, horizon)?;
        let t = deconvolve(&history, &spec, DEFAULT_TOLERANCE)?;
        let nonzero = t.impulses.iter().filter(|v| **v > 0.0).count();
        println!(
            "gamma {gamma}: {nonzero} non-zero impulses, residual {:.2}",
            t.residual_norm
        );
    }
    Ok(())
}
