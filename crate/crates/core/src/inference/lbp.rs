//! Synchronous loopy belief propagation on the discrete score GMRF.
//!
//! Messages and beliefs are held in the log domain: with unit edge weights
//! and 101 states the probability-domain products underflow long before a
//! belief is formed. Every message is a log vector normalised to
//! `logsumexp == 0` unless [`LbpOptions::normalize_messages`] is off.
//!
//! Labeled nodes broadcast `psi_ij(s*, .)` and keep one-hot beliefs.
//! Unlabeled nodes in a connected component without any labeled node keep
//! the normalised node potential as their belief.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::gmrf::{log_node_potential, GmrfParams};
use super::Predictions;
use crate::error::{Error, Result};
use crate::graph::VideoGraph;

/// Linear-domain kernel sums below this fall back to exact log-sum-exp.
const LINEAR_FLOOR: f64 = 1e-250;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LbpOptions {
    pub normalize_messages: bool,
}

impl Default for LbpOptions {
    fn default() -> Self {
        LbpOptions {
            normalize_messages: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbpDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub max_delta: f64,
}

/// Per-node belief vectors over `0..states`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    states: usize,
    values: Vec<f64>,
}

impl BeliefState {
    pub fn states(&self) -> usize {
        self.states
    }

    pub fn belief(&self, node: usize) -> &[f64] {
        &self.values[node * self.states..(node + 1) * self.states]
    }

    fn belief_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.values[node * self.states..(node + 1) * self.states]
    }

    /// Most probable state; ties go to the lower score.
    pub fn argmax(&self, node: usize) -> usize {
        let b = self.belief(node);
        let mut best = 0;
        for (s, &v) in b.iter().enumerate() {
            if v > b[best] {
                best = s;
            }
        }
        best
    }
}

#[derive(Debug, Clone)]
pub struct LbpOutput {
    pub predictions: Predictions,
    pub beliefs: BeliefState,
    pub diagnostics: LbpDiagnostics,
}

/// Predicts every unlabeled node with default options.
pub fn lbp_predict(graph: &VideoGraph, params: &GmrfParams) -> Result<LbpOutput> {
    run_lbp(graph, params, &LbpOptions::default())
}

struct Kernel {
    log: Vec<f64>,
    lin: Vec<f64>,
    /// Number of leading offsets with a non-zero linear value.
    bandwidth: usize,
}

impl Kernel {
    fn new(weight: f64, states: usize) -> Self {
        let log: Vec<f64> = (0..states)
            .map(|d| -0.5 * weight * (d * d) as f64)
            .collect();
        let lin: Vec<f64> = log.iter().map(|v| v.exp()).collect();
        let bandwidth = lin.iter().take_while(|v| **v > 0.0).count();
        Kernel {
            log,
            lin,
            bandwidth,
        }
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn normalize_log(v: &mut [f64]) {
    let z = log_sum_exp(v.iter().copied());
    v.iter_mut().for_each(|x| *x -= z);
}

/// Writes `log sum_s exp(a[s] + kernel.log[|s - t|])` into `out[t]`.
fn send(a: &[f64], kernel: &Kernel, out: &mut [f64], scratch: &mut [f64]) {
    let n = a.len();
    let amax = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (e, &v) in scratch.iter_mut().zip(a) {
        *e = (v - amax).exp();
    }
    let bw = kernel.bandwidth;
    for (t, o) in out.iter_mut().enumerate() {
        let lo = t.saturating_sub(bw - 1);
        let hi = (t + bw).min(n);
        let acc: f64 = scratch[lo..hi]
            .iter()
            .zip(lo..)
            .map(|(x, s)| x * kernel.lin[s.abs_diff(t)])
            .sum();
        *o = if acc > LINEAR_FLOOR {
            amax + acc.ln()
        } else {
            log_sum_exp((0..n).map(|s| a[s] + kernel.log[s.abs_diff(t)]))
        };
    }
}

struct Engine<'g> {
    graph: &'g VideoGraph,
    states: usize,
    normalize: bool,
    log_node: Vec<f64>,
    observed: Vec<Option<usize>>,
    /// Unlabeled and connected to at least one labeled node.
    active: Vec<bool>,
    kernels: Vec<Kernel>,
}

impl<'g> Engine<'g> {
    /// Index of the message sent by `from` along edge `e`.
    fn msg(&self, e: usize, from: usize) -> usize {
        if self.graph.edges()[e].a == from {
            2 * e
        } else {
            2 * e + 1
        }
    }

    fn slice<'a>(&self, store: &'a [f64], m: usize) -> &'a [f64] {
        &store[m * self.states..(m + 1) * self.states]
    }

    /// One synchronous sweep: every needed message of `next` from `prev`.
    fn sweep(&self, iteration: usize, prev: &[f64], next: &mut [f64]) -> Result<()> {
        let s = self.states;
        let mut scratch = vec![0.0; s];
        let mut a = vec![0.0; s];
        let mut prefix = Vec::new();
        let mut suffix = Vec::new();
        for i in 0..self.graph.len() {
            let nbrs = self.graph.neighbors(i);
            match self.observed[i] {
                Some(star) => {
                    // Normalised labeled messages are constant after the first sweep.
                    if self.normalize && iteration > 1 {
                        continue;
                    }
                    for (p, &(j, e)) in nbrs.iter().enumerate() {
                        if self.normalize && self.observed[j].is_some() {
                            continue;
                        }
                        let mut constant = self.log_node[star];
                        if !self.normalize {
                            for (q, &(_, ek)) in nbrs.iter().enumerate() {
                                if q != p {
                                    let k = nbrs[q].0;
                                    constant += self.slice(prev, self.msg(ek, k))[star];
                                }
                            }
                        }
                        let m = self.msg(e, i);
                        let out = &mut next[m * s..(m + 1) * s];
                        let kernel = &self.kernels[e];
                        for (t, o) in out.iter_mut().enumerate() {
                            *o = constant + kernel.log[star.abs_diff(t)];
                        }
                        self.finish(out, i, j, iteration)?;
                    }
                }
                None => {
                    if !self.active[i] {
                        continue;
                    }
                    let d = nbrs.len();
                    prefix.clear();
                    prefix.resize((d + 1) * s, 0.0);
                    suffix.clear();
                    suffix.resize((d + 1) * s, 0.0);
                    for (q, &(k, e)) in nbrs.iter().enumerate() {
                        let incoming = self.slice(prev, self.msg(e, k));
                        for t in 0..s {
                            prefix[(q + 1) * s + t] = prefix[q * s + t] + incoming[t];
                        }
                    }
                    for (q, &(k, e)) in nbrs.iter().enumerate().rev() {
                        let incoming = self.slice(prev, self.msg(e, k));
                        for t in 0..s {
                            suffix[q * s + t] = suffix[(q + 1) * s + t] + incoming[t];
                        }
                    }
                    for (p, &(j, e)) in nbrs.iter().enumerate() {
                        if self.normalize && self.observed[j].is_some() {
                            continue;
                        }
                        for t in 0..s {
                            a[t] = self.log_node[t] + prefix[p * s + t] + suffix[(p + 1) * s + t];
                        }
                        let m = self.msg(e, i);
                        let out = &mut next[m * s..(m + 1) * s];
                        send(&a, &self.kernels[e], out, &mut scratch);
                        self.finish(out, i, j, iteration)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn finish(&self, out: &mut [f64], from: usize, to: usize, iteration: usize) -> Result<()> {
        if self.normalize {
            normalize_log(out);
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteMessage {
                from: self.graph.node(from).video_id.clone(),
                to: self.graph.node(to).video_id.clone(),
                iteration,
            });
        }
        Ok(())
    }

    fn prior_belief(&self, out: &mut [f64]) {
        out.copy_from_slice(&self.log_node);
        normalize_log(out);
        out.iter_mut().for_each(|v| *v = v.exp());
    }

    /// Recomputes beliefs of active nodes; returns the largest entry change.
    fn update_beliefs(&self, store: &[f64], beliefs: &mut BeliefState) -> f64 {
        let s = self.states;
        let mut log_b = vec![0.0; s];
        let mut delta: f64 = 0.0;
        for i in (0..self.graph.len()).filter(|&i| self.active[i]) {
            log_b.copy_from_slice(&self.log_node);
            for &(k, e) in self.graph.neighbors(i) {
                for (b, m) in log_b.iter_mut().zip(self.slice(store, self.msg(e, k))) {
                    *b += m;
                }
            }
            normalize_log(&mut log_b);
            for (old, lb) in beliefs.belief_mut(i).iter_mut().zip(&log_b) {
                let new = lb.exp();
                delta = delta.max((new - *old).abs());
                *old = new;
            }
        }
        delta
    }
}

/// Marks unlabeled nodes whose connected component contains a labeled node.
fn reachable_from_labels(graph: &VideoGraph, observed: &[Option<usize>]) -> Vec<bool> {
    let n = graph.len();
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| observed[i].is_some()).collect();
    for &i in &queue {
        seen[i] = true;
    }
    while let Some(i) = queue.pop_front() {
        for &(j, _) in graph.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    (0..n).map(|i| seen[i] && observed[i].is_none()).collect()
}

pub fn run_lbp(graph: &VideoGraph, params: &GmrfParams, options: &LbpOptions) -> Result<LbpOutput> {
    params.validate()?;
    let states = params.score_states;
    let mut observed = Vec::with_capacity(graph.len());
    for node in graph.nodes() {
        let obs = node.observed_score.map(usize::from);
        if let Some(s) = obs {
            if s >= states {
                return Err(Error::InvalidParameter(format!(
                    "observed score {s} of {} exceeds the {states}-state range",
                    node.video_id
                )));
            }
        }
        observed.push(obs);
    }
    let engine = Engine {
        graph,
        states,
        normalize: options.normalize_messages,
        log_node: (0..states).map(|s| log_node_potential(s, params)).collect(),
        active: reachable_from_labels(graph, &observed),
        kernels: graph
            .edges()
            .iter()
            .map(|e| Kernel::new(e.weight, states))
            .collect(),
        observed,
    };

    let mut beliefs = BeliefState {
        states,
        values: vec![0.0; graph.len() * states],
    };
    for i in 0..graph.len() {
        match engine.observed[i] {
            Some(star) => beliefs.belief_mut(i)[star] = 1.0,
            None => engine.prior_belief(beliefs.belief_mut(i)),
        }
    }

    let init = if options.normalize_messages {
        -(states as f64).ln()
    } else {
        0.0
    };
    let mut prev = vec![init; 2 * graph.num_edges() * states];
    let mut next = prev.clone();
    let mut diagnostics = LbpDiagnostics {
        iterations: 0,
        converged: true,
        max_delta: 0.0,
    };
    if engine.active.iter().any(|a| *a) {
        diagnostics.converged = false;
        for iteration in 1..=params.max_iterations {
            engine.sweep(iteration, &prev, &mut next)?;
            std::mem::swap(&mut prev, &mut next);
            // Constant labeled messages must survive in both buffers.
            if iteration == 1 {
                next.copy_from_slice(&prev);
            }
            let delta = engine.update_beliefs(&prev, &mut beliefs);
            diagnostics.iterations = iteration;
            diagnostics.max_delta = delta;
            if delta < params.convergence_tol {
                diagnostics.converged = true;
                break;
            }
        }
    }

    let predictions = graph
        .unlabeled()
        .map(|i| (graph.node(i).video_id.clone(), beliefs.argmax(i) as u8))
        .collect();
    Ok(LbpOutput {
        predictions,
        beliefs,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Features, VideoId, VideoNode};

    fn star(leaves: &[u8]) -> VideoGraph {
        // identical features give unit weights on every edge
        let f = Features::from_array([1.0, 1.0, 4.0, 60.0, 1.0, 0.0]);
        let mut nodes = vec![VideoNode::new("center", "Music", f, None).unwrap()];
        let mut edges = Vec::new();
        for (i, &s) in leaves.iter().enumerate() {
            let id = format!("leaf{i}");
            nodes.push(VideoNode::new(id.as_str(), "Music", f, Some(s)).unwrap());
            edges.push((VideoId::from("center"), VideoId(id)));
        }
        VideoGraph::new(nodes, &edges).unwrap()
    }

    /// Center belief by direct enumeration of its states.
    fn star_oracle(leaves: &[u8], mu: f64, sigma: f64) -> Vec<f64> {
        let log: Vec<f64> = (0..101)
            .map(|s| {
                let s = s as f64;
                let mut v = -0.5 * (s - mu).powi(2) / (sigma * sigma);
                for &l in leaves {
                    v -= 0.5 * (s - f64::from(l)).powi(2);
                }
                v
            })
            .collect();
        let max = log.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = log.iter().map(|v| (v - max).exp()).sum();
        log.iter().map(|v| (v - max).exp() / z).collect()
    }

    #[test]
    fn isolated_node_takes_prior_mode() {
        let f = Features::from_array([1.0; 6]);
        let g = VideoGraph::new(vec![VideoNode::new("a", "Music", f, None).unwrap()], &[]).unwrap();
        let out = lbp_predict(&g, &GmrfParams::new(50.0, 20.0).unwrap()).unwrap();
        assert_eq!(out.predictions[&VideoId::from("a")], 50);
        let out = lbp_predict(&g, &GmrfParams::new(49.5, 20.0).unwrap()).unwrap();
        assert_eq!(out.predictions[&VideoId::from("a")], 49);
    }

    #[test]
    fn flat_prior_follows_single_neighbor() {
        let g = star(&[80]);
        let out = lbp_predict(&g, &GmrfParams::new(50.0, 1e6).unwrap()).unwrap();
        assert_eq!(out.predictions[&VideoId::from("center")], 80);
    }

    #[test]
    fn star_matches_enumeration() {
        let g = star(&[20, 20, 80]);
        let out = lbp_predict(&g, &GmrfParams::new(50.0, 20.0).unwrap()).unwrap();
        let oracle = star_oracle(&[20, 20, 80], 50.0, 20.0);
        let center = g.index_of(&VideoId::from("center")).unwrap();
        for (a, b) in out.beliefs.belief(center).iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9);
        }
        let oracle_arg = (0..101).fold(0, |b, s| if oracle[s] > oracle[b] { s } else { b });
        assert_eq!(
            usize::from(out.predictions[&VideoId::from("center")]),
            oracle_arg
        );
        assert_eq!(oracle_arg, 40);
        assert!(out.diagnostics.converged);
    }

    #[test]
    fn symmetric_evidence_gives_symmetric_belief() {
        let g = star(&[20, 80]);
        let out = lbp_predict(&g, &GmrfParams::new(50.0, 20.0).unwrap()).unwrap();
        let b = out.beliefs.belief(0);
        for d in 0..=50 {
            assert!((b[50 - d] - b[50 + d]).abs() < 1e-12);
        }
        assert_eq!(out.predictions[&VideoId::from("center")], 50);
    }

    #[test]
    fn labeled_beliefs_are_one_hot_and_no_unlabeled_is_empty() {
        let g = star(&[20, 80]);
        let out = lbp_predict(&g, &GmrfParams::default()).unwrap();
        assert_eq!(out.beliefs.belief(1)[20], 1.0);
        assert_eq!(out.beliefs.belief(1).iter().sum::<f64>(), 1.0);
        let full = g.with_hidden(&[]);
        let mut nodes = full.nodes().to_vec();
        nodes[0].observed_score = Some(10);
        let labeled = VideoGraph::new(
            nodes,
            &[
                (VideoId::from("center"), VideoId::from("leaf0")),
                (VideoId::from("center"), VideoId::from("leaf1")),
            ],
        )
        .unwrap();
        let out = lbp_predict(&labeled, &GmrfParams::default()).unwrap();
        assert!(out.predictions.is_empty());
        assert_eq!(out.diagnostics.iterations, 0);
    }

    #[test]
    fn out_of_range_observation_rejected() {
        let g = star(&[20]);
        let p = GmrfParams {
            score_states: 11,
            ..Default::default()
        };
        assert!(run_lbp(&g, &p, &LbpOptions::default()).is_err());
    }

    #[test]
    fn send_fallback_matches_direct_sum() {
        let a: Vec<f64> = (0..21)
            .map(|s| -((s as f64) - 3.0).powi(2) * 40.0)
            .collect();
        let kernel = Kernel::new(1.0, 21);
        let mut out = vec![0.0; 21];
        let mut scratch = vec![0.0; 21];
        send(&a, &kernel, &mut out, &mut scratch);
        for (t, o) in out.iter().enumerate() {
            let direct = log_sum_exp((0..21).map(|s| a[s] + kernel.log[s.abs_diff(t)]));
            assert!(
                (o - direct).abs() < 1e-9 * direct.abs().max(1.0),
                "t = {t}"
            );
        }
    }
}
