//! Discrete-time leaky integrate-and-fire reservoir.
//!
//! One step of the update, for every neuron `i`:
//!
//! 1. `v_i <- v_i * exp(-alpha_i)`;
//! 2. add `I` for each external spike arriving now and `w_ij` for each
//!    presynaptic spike emitted at the previous step (one-step delay);
//! 3. if `v_i >= theta`, emit a spike and set `v_i = 0`; the neuron then
//!    ignores all input and stays at 0 for the next `T_ref` steps.
//!
//! Initial potentials at every example boundary come from the reset scheme.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::encoding::{assign_inputs, SpikeExample, SpikeTrainBatch};
use crate::error::{Error, Result};
use crate::seeds;
use crate::topology::DirectedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronParams {
    pub theta: f64,
    pub t_ref: u32,
    /// Potential added by one external spike.
    pub input_amplitude: f64,
}

impl NeuronParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) || !(self.input_amplitude > 0.0) {
            return Err(Error::invalid("neuron params", "theta and input_amplitude must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynapseSpec {
    pub mean_weight: f64,
    /// Standard deviation over mean of the Gaussian weight distribution.
    pub weight_cv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakSpec {
    pub mean_leak: f64,
    pub leak_cv: f64,
}

impl Default for LeakSpec {
    fn default() -> Self {
        Self { mean_leak: 1.0 / 500.0, leak_cv: 0.5 }
    }
}

impl LeakSpec {
    /// `(mu, sigma)` of the underlying normal for the requested mean and CV.
    pub fn lognormal_params(&self) -> (f64, f64) {
        let var_ln = (1.0 + self.leak_cv * self.leak_cv).ln();
        (self.mean_leak.ln() - var_ln / 2.0, var_ln.sqrt())
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if !(self.mean_leak > 0.0) || !(self.leak_cv >= 0.0) {
            return Err(Error::invalid("leak", "mean_leak must be > 0 and leak_cv >= 0"));
        }
        let (mu, sigma) = self.lognormal_params();
        let dist = LogNormal::new(mu, sigma).map_err(|e| Error::invalid("leak", e.to_string()))?;
        let mut rng = seeds::rng(seed);
        Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
    }
}

/// How membrane potentials are initialised at each example boundary. Both
/// schemes draw from the uniform distribution on `[0, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResetScheme {
    /// One draw per neuron, reused for every example.
    FixedPerNeuron,
    /// A fresh draw per neuron at every example.
    RedrawnEachReset,
}

/// Per-edge weights `w_ij ~ Normal(w, w * cv)`, in edge order. Negative
/// draws are kept as inhibitory synapses.
pub fn sample_weights(graph: &DirectedGraph, synapse: &SynapseSpec, seed: u64) -> Result<Vec<f64>> {
    if !(synapse.mean_weight >= 0.0) || !(synapse.weight_cv >= 0.0) {
        return Err(Error::invalid("synapse", "mean_weight and weight_cv must be >= 0"));
    }
    let sd = synapse.mean_weight * synapse.weight_cv;
    if sd == 0.0 {
        return Ok(vec![synapse.mean_weight; graph.n_edges()]);
    }
    let dist = Normal::new(synapse.mean_weight, sd).map_err(|e| Error::invalid("synapse", e.to_string()))?;
    let mut rng = seeds::rng(seed);
    Ok((0..graph.n_edges()).map(|_| dist.sample(&mut rng)).collect())
}

/// Fixed structure of one network instance: everything except the weights.
#[derive(Debug, Clone)]
pub struct ReservoirLayout {
    graph: DirectedGraph,
    leaks: Vec<f64>,
    params: NeuronParams,
    input_map: Vec<u32>,
    output_neurons: Vec<u32>,
}

impl ReservoirLayout {
    /// Draws the leaks, a random output set and a disjoint input assignment.
    pub fn new(
        graph: DirectedGraph,
        leak: &LeakSpec,
        params: NeuronParams,
        n_inputs: usize,
        n_outputs: usize,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        let n = graph.n_neurons();
        if n_inputs + n_outputs > n {
            return Err(Error::invalid(
                "reservoir",
                format!("{n_inputs} inputs + {n_outputs} outputs exceed N = {n}"),
            ));
        }
        let leaks = leak.sample(n, seeds::derive(seed, "leaks"))?;
        let mut rng = seeds::rng(seeds::derive(seed, "output-neurons"));
        let output_neurons = rand::seq::index::sample(&mut rng, n, n_outputs)
            .into_iter()
            .map(|i| i as u32)
            .collect::<Vec<_>>();
        let input_map = assign_inputs(n_inputs, n, &output_neurons, seeds::derive(seed, "inputs"))?;
        Self::from_parts(graph, leaks, params, input_map, output_neurons)
    }

    pub fn from_parts(
        graph: DirectedGraph,
        leaks: Vec<f64>,
        params: NeuronParams,
        input_map: Vec<u32>,
        output_neurons: Vec<u32>,
    ) -> Result<Self> {
        params.validate()?;
        let n = graph.n_neurons();
        if leaks.len() != n || leaks.iter().any(|&a| !(a >= 0.0)) {
            return Err(Error::invalid("reservoir", "need one non-negative leak per neuron"));
        }
        let mut seen = vec![0u8; n];
        for &i in &input_map {
            let slot = seen.get_mut(i as usize).ok_or_else(|| Error::invalid("reservoir", "input neuron out of range"))?;
            if *slot != 0 {
                return Err(Error::invalid("reservoir", format!("neuron {i} receives two input channels")));
            }
            *slot = 1;
        }
        for &o in &output_neurons {
            match seen.get(o as usize) {
                None => return Err(Error::invalid("reservoir", "output neuron out of range")),
                Some(1) => return Err(Error::invalid("reservoir", format!("neuron {o} is both input and output"))),
                Some(2) => return Err(Error::invalid("reservoir", format!("output neuron {o} listed twice"))),
                _ => seen[o as usize] = 2,
            }
        }
        Ok(Self { graph, leaks, params, input_map, output_neurons })
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn leaks(&self) -> &[f64] {
        &self.leaks
    }

    pub fn params(&self) -> &NeuronParams {
        &self.params
    }

    pub fn input_map(&self) -> &[u32] {
        &self.input_map
    }

    pub fn output_neurons(&self) -> &[u32] {
        &self.output_neurons
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<ReservoirInstance> {
        ReservoirInstance::new(self.clone(), weights)
    }

    pub fn with_sampled_weights(&self, synapse: &SynapseSpec, seed: u64) -> Result<ReservoirInstance> {
        self.with_weights(sample_weights(&self.graph, synapse, seed)?)
    }
}

/// An immutable reservoir ready for simulation: layout plus weights in a
/// compressed out-edge layout.
#[derive(Debug, Clone)]
pub struct ReservoirInstance {
    layout: ReservoirLayout,
    weights: Vec<f64>,
    decay: Vec<f64>,
    out_offsets: Vec<u32>,
    out_targets: Vec<u32>,
}

impl ReservoirInstance {
    pub fn new(layout: ReservoirLayout, weights: Vec<f64>) -> Result<Self> {
        let g = &layout.graph;
        if weights.len() != g.n_edges() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("reservoir", "need one finite weight per edge"));
        }
        let n = g.n_neurons();
        let mut out_offsets = vec![0u32; n + 1];
        for &(pre, _) in g.edges() {
            out_offsets[pre as usize + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
        }
        // edges are sorted by pre, so targets and weights are already grouped
        let out_targets = g.edges().iter().map(|&(_, post)| post).collect();
        let decay = layout.leaks.iter().map(|a| (-a).exp()).collect();
        Ok(Self { weights, decay, out_offsets, out_targets, layout })
    }

    pub fn layout(&self) -> &ReservoirLayout {
        &self.layout
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_neurons(&self) -> usize {
        self.layout.graph.n_neurons()
    }

    pub fn output_neurons(&self) -> &[u32] {
        &self.layout.output_neurons
    }

    /// Initial potentials for example `index` under `reset`.
    pub fn initial_potentials(&self, reset: ResetScheme, seed: u64, index: usize) -> Vec<f64> {
        let stream = match reset {
            ResetScheme::FixedPerNeuron => seeds::derive(seed, "reset-fixed"),
            ResetScheme::RedrawnEachReset => seeds::derive_indexed(seed, "reset-redrawn", index as u64),
        };
        let mut rng = seeds::rng(stream);
        let theta = self.layout.params.theta;
        (0..self.n_neurons()).map(|_| rng.random_range(0.0..theta)).collect()
    }

    /// Simulate one example starting from `initial` potentials.
    pub fn run_from(&self, example: &SpikeExample, initial: Vec<f64>) -> Result<ReservoirRecording> {
        let t_len = example.duration();
        if t_len == 0 {
            return Err(Error::invalid("simulation", "example duration is 0"));
        }
        if example.n_channels() > self.layout.input_map.len() {
            return Err(Error::invalid(
                "simulation",
                format!(
                    "example has {} channels but only {} are mapped",
                    example.n_channels(),
                    self.layout.input_map.len()
                ),
            ));
        }
        let n = self.n_neurons();
        let NeuronParams { theta, t_ref, input_amplitude } = self.layout.params;

        // external spikes bucketed by arrival step
        let mut ext_offsets = vec![0u32; t_len as usize + 1];
        for c in 0..example.n_channels() {
            for &t in example.channel(c) {
                ext_offsets[t as usize + 1] += 1;
            }
        }
        for t in 0..t_len as usize {
            ext_offsets[t + 1] += ext_offsets[t];
        }
        let mut fill = ext_offsets.clone();
        let mut ext_targets = vec![0u32; example.n_spikes()];
        for c in 0..example.n_channels() {
            let neuron = self.layout.input_map[c];
            for &t in example.channel(c) {
                ext_targets[fill[t as usize] as usize] = neuron;
                fill[t as usize] += 1;
            }
        }

        let mut v = initial;
        let mut refractory = vec![0u32; n];
        let mut fired: Vec<u32> = Vec::new();
        let mut fired_next: Vec<u32> = Vec::new();

        let mut output_slot = vec![u32::MAX; n];
        for (k, &o) in self.layout.output_neurons.iter().enumerate() {
            output_slot[o as usize] = k as u32;
        }
        let mut spikes = vec![Vec::new(); self.layout.output_neurons.len()];

        for t in 0..t_len {
            for (vi, d) in v.iter_mut().zip(&self.decay) {
                *vi *= d;
            }
            let ext = &ext_targets[ext_offsets[t as usize] as usize..ext_offsets[t as usize + 1] as usize];
            for &i in ext {
                if refractory[i as usize] == 0 {
                    v[i as usize] += input_amplitude;
                }
            }
            for &j in &fired {
                let (a, b) = (self.out_offsets[j as usize] as usize, self.out_offsets[j as usize + 1] as usize);
                for (&i, &w) in self.out_targets[a..b].iter().zip(&self.weights[a..b]) {
                    if refractory[i as usize] == 0 {
                        v[i as usize] += w;
                    }
                }
            }
            fired_next.clear();
            for i in 0..n {
                if refractory[i] > 0 {
                    refractory[i] -= 1;
                    v[i] = 0.0;
                } else if v[i] >= theta {
                    v[i] = 0.0;
                    refractory[i] = t_ref;
                    fired_next.push(i as u32);
                    if output_slot[i] != u32::MAX {
                        spikes[output_slot[i] as usize].push(t);
                    }
                }
            }
            std::mem::swap(&mut fired, &mut fired_next);
        }
        Ok(ReservoirRecording { duration: t_len, spikes })
    }
}

/// Spike times of the output neurons, one sorted list per output neuron in
/// the order of [`ReservoirInstance::output_neurons`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReservoirRecording {
    pub duration: u32,
    pub spikes: Vec<Vec<u32>>,
}

impl ReservoirRecording {
    pub fn total_spikes(&self) -> usize {
        self.spikes.iter().map(Vec::len).sum()
    }

    /// Raster dump (`neuron,t`), neuron being the output slot.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "neuron,t")?;
        for (k, s) in self.spikes.iter().enumerate() {
            for t in s {
                writeln!(out, "{k},{t}")?;
            }
        }
        Ok(())
    }
}

/// Full construction of a reservoir from a graph: weights, leaks, and the
/// input/output neuron sets, all derived from `seed`.
pub fn instantiate_reservoir(
    graph: DirectedGraph,
    synapse: &SynapseSpec,
    leak: &LeakSpec,
    params: NeuronParams,
    n_inputs: usize,
    n_outputs: usize,
    seed: u64,
) -> Result<ReservoirInstance> {
    let layout = ReservoirLayout::new(graph, leak, params, n_inputs, n_outputs, seed)?;
    layout.with_sampled_weights(synapse, seeds::derive(seed, "weights"))
}

/// Simulate one example. `index` selects the reset draw for
/// [`ResetScheme::RedrawnEachReset`].
pub fn simulate(
    reservoir: &ReservoirInstance,
    example: &SpikeExample,
    reset: ResetScheme,
    seed: u64,
    index: usize,
) -> Result<ReservoirRecording> {
    reservoir.run_from(example, reservoir.initial_potentials(reset, seed, index))
}

/// Simulate every example of `batch` independently; example `k` depends only
/// on its own input and reset draw, so examples run in parallel.
pub fn run_example_batch(
    reservoir: &ReservoirInstance,
    batch: &SpikeTrainBatch,
    reset: ResetScheme,
    seed: u64,
) -> Result<Vec<ReservoirRecording>> {
    use rayon::prelude::*;
    batch
        .examples
        .par_iter()
        .enumerate()
        .map(|(k, ex)| {
            simulate(reservoir, ex, reset, seed, k)
                .map_err(|e| Error::Example { index: k, source: Box::new(e) })
        })
        .collect()
}
