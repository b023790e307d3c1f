//! Labelled datasets: binarised MNIST read from IDX files and the synthetic
//! ball-trajectory videos.

mod balls;
mod mnist;

pub use balls::{
    generate_ball_videos, read_video_cache, write_video_cache, BallClass, BallGenSpec,
    BallVideoMeta, BallVideoSet,
};
pub use mnist::{load_mnist, read_idx_images, read_idx_labels, write_idx_images, write_idx_labels};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Binary raster, row-major, pixel values 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl BinaryImage {
    /// Downsample by `factor` with OR-pooling: an output pixel is on if any
    /// pixel of its `factor x factor` block is on. Trailing partial blocks
    /// are pooled as well.
    pub fn pooled(&self, factor: usize) -> BinaryImage {
        if factor <= 1 {
            return self.clone();
        }
        let w = self.width.div_ceil(factor);
        let h = self.height.div_ceil(factor);
        let mut pixels = vec![0u8; w * h];
        for y in 0..self.height {
            for x in 0..self.width {
                if self.pixels[y * self.width + x] != 0 {
                    pixels[(y / factor) * w + x / factor] = 1;
                }
            }
        }
        BinaryImage { width: w, height: h, pixels }
    }
}

/// Binary video stored frame-major: `data[t * width * height + y * width + x]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryVideo {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub data: Vec<u8>,
}

impl BinaryVideo {
    pub fn blank(width: usize, height: usize, n_frames: usize) -> Self {
        Self { width, height, n_frames, data: vec![0; width * height * n_frames] }
    }

    pub fn frame(&self, t: usize) -> &[u8] {
        let n = self.width * self.height;
        &self.data[t * n..(t + 1) * n]
    }

    pub fn get(&self, t: usize, x: usize, y: usize) -> u8 {
        self.data[t * self.width * self.height + y * self.width + x]
    }

    pub fn set(&mut self, t: usize, x: usize, y: usize, v: u8) {
        self.data[t * self.width * self.height + y * self.width + x] = v;
    }

    pub fn active_in_frame(&self, t: usize) -> usize {
        self.frame(t).iter().filter(|&&p| p != 0).count()
    }
}

/// Where a loaded dataset came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImageSet {
    pub images: Vec<BinaryImage>,
    pub labels: Vec<u8>,
    pub provenance: Vec<FileDigest>,
}

impl LabeledImageSet {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn pooled(&self, factor: usize) -> LabeledImageSet {
        LabeledImageSet {
            images: self.images.iter().map(|im| im.pooled(factor)).collect(),
            labels: self.labels.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Stable content hash over pixels and labels.
pub trait DatasetDigest {
    fn digest(&self) -> String;
}

impl DatasetDigest for LabeledImageSet {
    fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"images");
        h.update((self.images.len() as u64).to_le_bytes());
        for im in &self.images {
            h.update((im.width as u64).to_le_bytes());
            h.update((im.height as u64).to_le_bytes());
            h.update(&im.pixels);
        }
        h.update(&self.labels);
        hex::encode(h.finalize())
    }
}

impl DatasetDigest for BallVideoSet {
    fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"videos");
        h.update((self.videos.len() as u64).to_le_bytes());
        for v in &self.videos {
            h.update((v.width as u64).to_le_bytes());
            h.update((v.height as u64).to_le_bytes());
            h.update((v.n_frames as u64).to_le_bytes());
            h.update(&v.data);
        }
        h.update(&self.labels);
        hex::encode(h.finalize())
    }
}

pub fn dataset_digest<D: DatasetDigest>(set: &D) -> String {
    set.digest()
}

pub(crate) fn file_sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
