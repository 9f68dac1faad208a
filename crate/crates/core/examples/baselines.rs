//! Regression and graph-KNN baselines on a masked synthetic corpus.

use impulses::harness::{generate_synthetic, mask_labels, mse, SyntheticSpec};
use impulses::inference::{knn_baseline, regression_baseline, select_best_k, DEFAULT_K_CANDIDATES};

fn main() -> impulses::Result<()> {
    let corpus = generate_synthetic(&SyntheticSpec {
        num_videos: 600,
        ..Default::default()
    })?;
    let masked = mask_labels(&corpus.graph, 0.3, 5)?;

    let reg = regression_baseline(&masked.graph)?;
    println!("regression intercept {:.2}", reg.model.intercept);
    println!("coefficients {:.3?}", reg.model.coefficients);
    println!(
        "regression mse {:.2}",
        mse(&reg.predictions, &masked.truth)?
    );

    let knn = knn_baseline(&masked.graph, &DEFAULT_K_CANDIDATES)?;
    for (k, preds) in &knn.per_k {
        println!("knn k={k} mse {:.2}", mse(preds, &masked.truth)?);
    }
    if let Some((k, m)) = select_best_k(&knn, &masked.truth) {
        println!("best k = {k} (mse {m:.2})");
    }
    Ok(())
}
