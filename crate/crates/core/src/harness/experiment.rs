//! Repeated masking trials comparing score predictors by MSE.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::mask::mask_labels;
use super::mse;
use crate::error::{Error, Result};
use crate::graph::{VideoGraph, VideoId};
use crate::inference::{
    fit_prior, knn_baseline, lbp_predict, regression_baseline, select_best_k, LbpDiagnostics,
    Method, Predictions, DEFAULT_K_CANDIDATES,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    WholeNetwork,
    Category(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub unlabeled_ratios: Vec<f64>,
    pub trials: usize,
    pub rng_seed: u64,
    pub methods: Vec<Method>,
    pub scope: Scope,
    pub k_candidates: Vec<usize>,
    pub score_states: usize,
    pub max_iterations: usize,
    pub convergence_tol: f64,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            unlabeled_ratios: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            trials: 50,
            rng_seed: 0,
            methods: Method::ALL.to_vec(),
            scope: Scope::WholeNetwork,
            k_candidates: DEFAULT_K_CANDIDATES.to_vec(),
            score_states: 101,
            max_iterations: 100,
            convergence_tol: 1e-6,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.unlabeled_ratios.is_empty() {
            return Err(Error::InvalidParameter("no unlabeled ratios".into()));
        }
        if let Some(r) = self
            .unlabeled_ratios
            .iter()
            .find(|r| !(**r > 0.0 && **r < 1.0))
        {
            return Err(Error::InvalidParameter(format!("ratio {r} outside (0, 1)")));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.k_candidates.is_empty() || self.k_candidates.contains(&0) {
            return Err(Error::InvalidParameter(
                "k candidates must be non-empty and positive".into(),
            ));
        }
        Ok(())
    }

    /// Seed of trial `trial` at ratio index `ratio_index`: a SplitMix64
    /// finaliser applied to a fixed counter layout.
    pub fn trial_seed(&self, ratio_index: usize, trial: usize) -> u64 {
        let counter = ((ratio_index as u64) << 32) | trial as u64;
        let mut z = self.rng_seed ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// What a predictor sees in one trial.
pub struct TrialContext<'a> {
    pub plan: &'a ExperimentPlan,
    /// Held-out truth; built-in methods only use it to pick the KNN k.
    pub truth: &'a BTreeMap<VideoId, u8>,
}

#[derive(Debug, Clone, Default)]
pub struct MethodRun {
    pub predictions: Predictions,
    pub chosen_k: Option<usize>,
    pub lbp: Option<LbpDiagnostics>,
}

pub trait Predictor {
    fn name(&self) -> String;
    fn predict(&self, masked: &VideoGraph, ctx: &TrialContext<'_>) -> Result<MethodRun>;
}

/// Adapter running one of the built-in methods.
pub struct BuiltinMethod(pub Method);

impl Predictor for BuiltinMethod {
    fn name(&self) -> String {
        self.0.name().to_owned()
    }

    fn predict(&self, masked: &VideoGraph, ctx: &TrialContext<'_>) -> Result<MethodRun> {
        match self.0 {
            Method::GmrfLbp => {
                let observed: Vec<f64> = masked
                    .labeled()
                    .map(|i| f64::from(masked.node(i).observed_score.unwrap_or_default()))
                    .collect();
                let mut params = fit_prior(&observed)?.params();
                params.score_states = ctx.plan.score_states;
                params.max_iterations = ctx.plan.max_iterations;
                params.convergence_tol = ctx.plan.convergence_tol;
                let out = lbp_predict(masked, &params)?;
                Ok(MethodRun {
                    predictions: out.predictions,
                    chosen_k: None,
                    lbp: Some(out.diagnostics),
                })
            }
            Method::Regression => Ok(MethodRun {
                predictions: regression_baseline(masked)?.predictions,
                ..Default::default()
            }),
            Method::Knn => {
                let out = knn_baseline(masked, &ctx.plan.k_candidates)?;
                let (k, _) = select_best_k(&out, ctx.truth)
                    .ok_or_else(|| Error::Insufficient("no k candidate produced a score".into()))?;
                let predictions = out.per_k.get(&k).cloned().unwrap_or_default();
                Ok(MethodRun {
                    predictions,
                    chosen_k: Some(k),
                    lbp: None,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// `None` when the method failed in this trial.
    pub mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lbp: Option<LbpDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub ratio: f64,
    /// Mean over successful trials.
    pub mean_mse: Option<f64>,
    pub failed_trials: usize,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scope: Scope,
    pub node_count: usize,
    pub edge_count: usize,
    pub plan: ExperimentPlan,
    pub results: Vec<MethodSummary>,
    /// Per method, largest over smallest mean MSE across ratios.
    pub ratio_stability: BTreeMap<String, Option<f64>>,
}

impl ExperimentReport {
    pub fn summary(&self, method: &str, ratio: f64) -> Option<&MethodSummary> {
        self.results
            .iter()
            .find(|s| s.method == method && s.ratio == ratio)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// `method,ratio,mean_mse` rows for plotting.
    pub fn mse_series_csv(&self) -> String {
        let mut out = String::from("method,ratio,mean_mse\n");
        for s in &self.results {
            let mean = s.mean_mse.map(|m| m.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", s.method, s.ratio, mean));
        }
        out
    }
}

/// Runs the plan with its built-in methods.
pub fn run_experiment(plan: &ExperimentPlan, graph: &VideoGraph) -> Result<ExperimentReport> {
    let methods: Vec<BuiltinMethod> = plan.methods.iter().map(|m| BuiltinMethod(*m)).collect();
    let refs: Vec<&dyn Predictor> = methods.iter().map(|m| m as &dyn Predictor).collect();
    run_experiment_with(plan, graph, &refs)
}

/// Runs the plan with arbitrary predictors. For each ratio and trial one
/// mask is drawn and shared by every predictor.
pub fn run_experiment_with(
    plan: &ExperimentPlan,
    graph: &VideoGraph,
    predictors: &[&dyn Predictor],
) -> Result<ExperimentReport> {
    plan.validate()?;
    let scoped = match &plan.scope {
        Scope::WholeNetwork => graph.clone(),
        Scope::Category(c) => {
            let sub = graph.induced_by_category(c);
            if sub.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "category {c:?} has no nodes"
                )));
            }
            sub
        }
    };

    let mut results = Vec::new();
    for (ri, &ratio) in plan.unlabeled_ratios.iter().enumerate() {
        let mut per_method: Vec<Vec<TrialRecord>> =
            vec![Vec::with_capacity(plan.trials); predictors.len()];
        for trial in 0..plan.trials {
            let seed = plan.trial_seed(ri, trial);
            let masked = mask_labels(&scoped, ratio, seed)?;
            let ctx = TrialContext {
                plan,
                truth: &masked.truth,
            };
            for (p, records) in predictors.iter().zip(per_method.iter_mut()) {
                let outcome = p
                    .predict(&masked.graph, &ctx)
                    .and_then(|run| mse(&run.predictions, &masked.truth).map(|m| (m, run)));
                records.push(match outcome {
                    Ok((m, run)) => TrialRecord {
                        trial,
                        seed,
                        mse: Some(m),
                        chosen_k: run.chosen_k,
                        lbp: run.lbp,
                        error: None,
                    },
                    Err(e) => {
                        log::warn!("{} failed at ratio {ratio}, trial {trial}: {e}", p.name());
                        TrialRecord {
                            trial,
                            seed,
                            mse: None,
                            chosen_k: None,
                            lbp: None,
                            error: Some(e.to_string()),
                        }
                    }
                });
            }
        }
        for (p, trials) in predictors.iter().zip(per_method) {
            let ok: Vec<f64> = trials.iter().filter_map(|t| t.mse).collect();
            results.push(MethodSummary {
                method: p.name(),
                ratio,
                mean_mse: (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64),
                failed_trials: trials.len() - ok.len(),
                trials,
            });
        }
    }

    let mut ratio_stability = BTreeMap::new();
    for p in predictors {
        let means: Vec<Option<f64>> = results
            .iter()
            .filter(|s| s.method == p.name())
            .map(|s| s.mean_mse)
            .collect();
        let stability = if means.iter().all(|m| m.is_some()) {
            let vals: Vec<f64> = means.into_iter().flatten().collect();
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            (min > 0.0).then(|| max / min)
        } else {
            None
        };
        ratio_stability.insert(p.name(), stability);
    }

    Ok(ExperimentReport {
        scope: plan.scope.clone(),
        node_count: scoped.len(),
        edge_count: scoped.num_edges(),
        plan: plan.clone(),
        results,
        ratio_stability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Features, VideoNode};

    struct Shifted {
        truth: BTreeMap<VideoId, u8>,
        shift: u8,
    }

    impl Predictor for Shifted {
        fn name(&self) -> String {
            format!("truth_plus_{}", self.shift)
        }

        fn predict(&self, masked: &VideoGraph, _: &TrialContext<'_>) -> Result<MethodRun> {
            Ok(MethodRun {
                predictions: masked
                    .unlabeled()
                    .map(|i| {
                        let id = masked.node(i).video_id.clone();
                        let s = self.truth[&id] + self.shift;
                        (id, s)
                    })
                    .collect(),
                ..Default::default()
            })
        }
    }

    struct Failing;

    impl Predictor for Failing {
        fn name(&self) -> String {
            "failing".into()
        }

        fn predict(&self, _: &VideoGraph, _: &TrialContext<'_>) -> Result<MethodRun> {
            Err(Error::Insufficient("always fails".into()))
        }
    }

    fn graph(n: usize) -> VideoGraph {
        let nodes = (0..n)
            .map(|i| {
                VideoNode::new(
                    format!("v{i:03}"),
                    if i % 2 == 0 { "Music" } else { "News" },
                    Features::from_array([i as f64, 1.0, 3.0, 10.0, 1.0, 1.0]),
                    Some((i * 7 % 100) as u8),
                )
                .unwrap()
            })
            .collect();
        VideoGraph::new(nodes, &[]).unwrap()
    }

    fn truth(g: &VideoGraph) -> BTreeMap<VideoId, u8> {
        g.nodes()
            .iter()
            .map(|n| (n.video_id.clone(), n.observed_score.unwrap()))
            .collect()
    }

    #[test]
    fn plumbing_oracles_and_failures() {
        let g = graph(40);
        let exact = Shifted {
            truth: truth(&g),
            shift: 0,
        };
        let plus = Shifted {
            truth: truth(&g),
            shift: 1,
        };
        let plan = ExperimentPlan {
            trials: 4,
            ..Default::default()
        };
        let report = run_experiment_with(&plan, &g, &[&exact, &plus, &Failing]).unwrap();
        for &r in &plan.unlabeled_ratios {
            assert_eq!(
                report.summary("truth_plus_0", r).unwrap().mean_mse,
                Some(0.0)
            );
            assert_eq!(
                report.summary("truth_plus_1", r).unwrap().mean_mse,
                Some(1.0)
            );
            let f = report.summary("failing", r).unwrap();
            assert_eq!((f.mean_mse, f.failed_trials), (None, 4));
            assert!(f.trials[0].error.is_some());
        }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let plan = ExperimentPlan::default();
        assert_ne!(plan.trial_seed(0, 0), plan.trial_seed(0, 1));
        assert_ne!(plan.trial_seed(0, 1), plan.trial_seed(1, 0));
        assert_eq!(plan.trial_seed(3, 7), plan.trial_seed(3, 7));
    }

    #[test]
    fn category_scope_uses_subgraph() {
        let g = graph(40);
        let exact = Shifted {
            truth: truth(&g),
            shift: 0,
        };
        let plan = ExperimentPlan {
            trials: 2,
            scope: Scope::Category("News".into()),
            unlabeled_ratios: vec![0.5],
            ..Default::default()
        };
        let report = run_experiment_with(&plan, &g, &[&exact]).unwrap();
        assert_eq!(report.node_count, 20);
        let missing = ExperimentPlan {
            scope: Scope::Category("Sports".into()),
            ..plan
        };
        assert!(run_experiment_with(&missing, &g, &[&exact]).is_err());
    }

    #[test]
    fn invalid_plans_rejected() {
        let g = graph(10);
        for plan in [
            ExperimentPlan {
                trials: 0,
                ..Default::default()
            },
            ExperimentPlan {
                unlabeled_ratios: vec![1.0],
                ..Default::default()
            },
            ExperimentPlan {
                k_candidates: vec![],
                ..Default::default()
            },
        ] {
            assert!(run_experiment(&plan, &g).is_err());
        }
    }
}
