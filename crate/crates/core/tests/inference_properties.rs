use impulses::graph::{Features, VideoGraph, VideoId, VideoNode};
use impulses::inference::{lbp_predict, run_lbp, GmrfParams, LbpOptions};
use proptest::prelude::*;

fn graph(features: &[[f64; 6]], labels: &[Option<u8>], edges: &[(usize, usize)]) -> VideoGraph {
    let nodes = features
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (f, s))| {
            VideoNode::new(format!("n{i}"), "Music", Features::from_array(*f), *s).unwrap()
        })
        .collect();
    let edges: Vec<_> = edges
        .iter()
        .map(|(a, b)| (VideoId(format!("n{a}")), VideoId(format!("n{b}"))))
        .collect();
    VideoGraph::new(nodes, &edges).unwrap()
}

/// A small loopy graph: a 5-cycle with one chord and a pendant node.
fn loopy(labels: &[Option<u8>]) -> VideoGraph {
    let features: Vec<[f64; 6]> = (0..6)
        .map(|i| {
            [
                i as f64,
                (i * i % 5) as f64,
                4.0,
                100.0 + i as f64,
                3.0,
                1.0,
            ]
        })
        .collect();
    graph(
        &features,
        labels,
        &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3), (4, 5)],
    )
}

fn small_params(mu: f64, sigma: f64) -> GmrfParams {
    GmrfParams {
        score_states: 21,
        ..GmrfParams::new(mu, sigma).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_changes_no_belief(
        a in 0u8..21, b in 0u8..21, mu in 0.0f64..20.0, sigma in 2.0f64..8.0,
    ) {
        let g = loopy(&[Some(a), None, None, Some(b), None, None]);
        let params = small_params(mu, sigma);
        let on = run_lbp(&g, &params, &LbpOptions { normalize_messages: true }).unwrap();
        let off = run_lbp(&g, &params, &LbpOptions { normalize_messages: false }).unwrap();
        prop_assert_eq!(on.diagnostics.iterations, off.diagnostics.iterations);
        for i in 0..g.len() {
            for (x, y) in on.beliefs.belief(i).iter().zip(off.beliefs.belief(i)) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
        prop_assert_eq!(on.predictions, off.predictions);
    }

    #[test]
    fn beliefs_are_distributions_and_labels_one_hot(a in 0u8..21, b in 0u8..21, mu in 0.0f64..20.0) {
        let labels = [Some(a), None, None, None, Some(b), None];
        let g = loopy(&labels);
        let out = lbp_predict(&g, &small_params(mu, 4.0)).unwrap();
        for (i, label) in labels.iter().enumerate() {
            let belief = out.beliefs.belief(i);
            prop_assert!((belief.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            if let Some(s) = label {
                for (t, v) in belief.iter().enumerate() {
                    prop_assert_eq!(*v, if t == usize::from(*s) { 1.0 } else { 0.0 });
                }
            }
        }
    }
}

#[test]
fn repeated_runs_are_identical() {
    let g = loopy(&[Some(3), None, None, Some(17), None, None]);
    let params = small_params(10.0, 4.0);
    let a = lbp_predict(&g, &params).unwrap();
    let b = lbp_predict(&g, &params).unwrap();
    assert_eq!(a.predictions, b.predictions);
    assert_eq!(a.diagnostics, b.diagnostics);
    assert_eq!(a.beliefs, b.beliefs);
}

#[test]
fn symmetric_evidence_gives_symmetric_belief() {
    let same = [1.0, 1.0, 4.0, 100.0, 1.0, 1.0];
    let g = graph(&[same; 3], &[None, Some(20), Some(80)], &[(0, 1), (0, 2)]);
    let out = lbp_predict(&g, &GmrfParams::new(50.0, 20.0).unwrap()).unwrap();
    let b = out.beliefs.belief(0);
    for d in 0..=50 {
        assert!((b[50 - d] - b[50 + d]).abs() < 1e-12);
    }
    assert_eq!(out.predictions[&VideoId::from("n0")], 50);
}
