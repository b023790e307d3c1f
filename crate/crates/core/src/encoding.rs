//! Spike encodings of binary images and videos, plus the random assignment
//! of input channels to reservoir neurons.

use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{BinaryImage, BinaryVideo};
use crate::error::{Error, Result};
use crate::seeds;

/// Per-channel spike times of one example, stored as a flat CSR layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeExample {
    duration: u32,
    offsets: Vec<u32>,
    times: Vec<u32>,
}

impl SpikeExample {
    /// Build from per-channel spike lists. Each list must be strictly
    /// increasing and inside `[0, duration)`.
    pub fn from_channels(duration: u32, channels: &[Vec<u32>]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(channels.len() + 1);
        let mut times = Vec::new();
        offsets.push(0);
        for (c, ch) in channels.iter().enumerate() {
            if ch.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("spike train", format!("channel {c} not strictly increasing")));
            }
            if ch.last().is_some_and(|&t| t >= duration) {
                return Err(Error::invalid("spike train", format!("channel {c} spikes past T = {duration}")));
            }
            times.extend_from_slice(ch);
            offsets.push(times.len() as u32);
        }
        Ok(Self { duration, offsets, times })
    }

    pub fn duration(&self) -> u32 {
        self.duration
    }

    pub fn n_channels(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn channel(&self, c: usize) -> &[u32] {
        &self.times[self.offsets[c] as usize..self.offsets[c + 1] as usize]
    }

    pub fn n_spikes(&self) -> usize {
        self.times.len()
    }

    pub fn is_silent(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeTrainBatch {
    pub n_channels: usize,
    pub examples: Vec<SpikeExample>,
}

impl SpikeTrainBatch {
    pub fn new(n_channels: usize, examples: Vec<SpikeExample>) -> Result<Self> {
        if let Some(i) = examples.iter().position(|e| e.n_channels() != n_channels) {
            return Err(Error::invalid(
                "spike train batch",
                format!("example {i} has {} channels, expected {n_channels}", examples[i].n_channels()),
            ));
        }
        Ok(Self { n_channels, examples })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Raster dump (`example,channel,t`) for debugging.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "example,channel,t")?;
        for (e, ex) in self.examples.iter().enumerate() {
            for c in 0..ex.n_channels() {
                for t in ex.channel(c) {
                    writeln!(out, "{e},{c},{t}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncodingKind {
    RateCoding,
    FrameCoding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingSpec {
    pub kind: EncodingKind,
    /// Simulation length in steps (rate coding only).
    #[serde(default = "default_duration")]
    pub duration: u32,
    /// Per-step spike probability of an active pixel (rate coding only).
    #[serde(default = "default_spike_prob")]
    pub spike_prob: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_duration() -> u32 {
    100
}

fn default_spike_prob() -> f64 {
    0.25
}

impl EncodingSpec {
    pub fn rate(duration: u32, spike_prob: f64, seed: u64) -> Self {
        Self { kind: EncodingKind::RateCoding, duration, spike_prob, seed }
    }

    pub fn frames() -> Self {
        Self {
            kind: EncodingKind::FrameCoding,
            duration: default_duration(),
            spike_prob: default_spike_prob(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == EncodingKind::RateCoding {
            if !(self.spike_prob > 0.0 && self.spike_prob <= 1.0) {
                return Err(Error::invalid("encoding", format!("spike_prob {} outside (0, 1]", self.spike_prob)));
            }
            if self.duration < 1 {
                return Err(Error::invalid("encoding", "duration must be >= 1"));
            }
        }
        Ok(())
    }
}

/// Rate coding of binary images: every active pixel fires independently
/// with probability `spike_prob` at each step; inactive pixels stay silent.
/// Example `k` uses its own random stream, so batches can be encoded in any
/// order or in parallel.
pub fn encode_rate(images: &[BinaryImage], spec: &EncodingSpec) -> Result<SpikeTrainBatch> {
    if spec.kind != EncodingKind::RateCoding {
        return Err(Error::invalid("encoding", "encode_rate needs RateCoding"));
    }
    spec.validate()?;
    let n_channels = images.first().map_or(0, |im| im.pixels.len());
    let mut examples = Vec::with_capacity(images.len());
    let mut channels: Vec<Vec<u32>> = vec![Vec::new(); n_channels];
    for (k, im) in images.iter().enumerate() {
        if im.pixels.len() != n_channels {
            return Err(Error::invalid("encoding", format!("image {k} has a different size")));
        }
        let mut rng = seeds::rng(seeds::derive_indexed(spec.seed, "rate-coding", k as u64));
        for (c, ch) in channels.iter_mut().enumerate() {
            ch.clear();
            if im.pixels[c] != 0 {
                ch.extend((0..spec.duration).filter(|_| rng.random_bool(spec.spike_prob)));
            }
        }
        examples.push(SpikeExample::from_channels(spec.duration, &channels)?);
    }
    SpikeTrainBatch::new(n_channels, examples)
}

/// Frame coding of binary videos: channel = pixel index, one spike at step
/// `t` whenever the pixel is on in frame `t`.
pub fn encode_frames(videos: &[BinaryVideo], spec: &EncodingSpec) -> Result<SpikeTrainBatch> {
    if spec.kind != EncodingKind::FrameCoding {
        return Err(Error::invalid("encoding", "encode_frames needs FrameCoding"));
    }
    let Some(first) = videos.first() else {
        return SpikeTrainBatch::new(0, Vec::new());
    };
    let (n_frames, n_px) = (first.n_frames, first.width * first.height);
    let mut channels: Vec<Vec<u32>> = vec![Vec::new(); n_px];
    let mut examples = Vec::with_capacity(videos.len());
    for (k, v) in videos.iter().enumerate() {
        if v.n_frames != n_frames || v.width * v.height != n_px {
            return Err(Error::invalid("encoding", format!("video {k} differs in shape")));
        }
        channels.iter_mut().for_each(Vec::clear);
        for t in 0..n_frames {
            for (p, &on) in v.frame(t).iter().enumerate() {
                if on != 0 {
                    channels[p].push(t as u32);
                }
            }
        }
        examples.push(SpikeExample::from_channels(n_frames as u32, &channels)?);
    }
    SpikeTrainBatch::new(n_px, examples)
}

/// Inverse of [`encode_frames`] for one example.
pub fn decode_frames(example: &SpikeExample, width: usize, height: usize) -> BinaryVideo {
    let n_frames = example.duration() as usize;
    let mut data = vec![0u8; n_frames * width * height];
    for c in 0..example.n_channels() {
        for &t in example.channel(c) {
            data[t as usize * width * height + c] = 1;
        }
    }
    BinaryVideo { width, height, n_frames, data }
}

/// Injective map from input channel to neuron, avoiding `output_neurons`,
/// drawn uniformly among all such maps.
pub fn assign_inputs(
    n_channels: usize,
    n_neurons: usize,
    output_neurons: &[u32],
    seed: u64,
) -> Result<Vec<u32>> {
    let reserved: BTreeSet<u32> = output_neurons.iter().copied().collect();
    let mut free: Vec<u32> = (0..n_neurons as u32).filter(|n| !reserved.contains(n)).collect();
    if n_channels > free.len() {
        return Err(Error::invalid(
            "input assignment",
            format!("{n_channels} channels but only {} free neurons", free.len()),
        ));
    }
    let mut rng = seeds::rng(seeds::derive(seed, "assign-inputs"));
    let (chosen, _) = free.partial_shuffle(&mut rng, n_channels);
    Ok(chosen.to_vec())
}
