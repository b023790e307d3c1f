use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use super::{file_sha256, BinaryImage, FileDigest, LabeledImageSet};
use crate::error::{Error, Result};
use crate::seeds;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn fail(&self, offset: usize, reason: impl Into<String>) -> Error {
        Error::Parse { path: self.path.to_path_buf(), offset: offset as u64, reason: reason.into() }
    }

    fn u32_be(&mut self, what: &str) -> Result<u32> {
        let Some(b) = self.bytes.get(self.pos..self.pos + 4) else {
            return Err(self.fail(self.pos, format!("truncated {what}")));
        };
        self.pos += 4;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.fail(
                self.bytes.len(),
                format!("truncated {what}: need {n} bytes at offset {}", self.pos),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

/// Raw 8-bit images from an IDX3 file: `(rows, cols, pixels per image)`.
pub fn read_idx_images(path: &Path) -> Result<(usize, usize, Vec<Vec<u8>>)> {
    let bytes = read_file(path)?;
    let mut r = Reader { path, bytes: &bytes, pos: 0 };
    let magic = r.u32_be("magic")?;
    if magic != IMAGES_MAGIC {
        return Err(r.fail(0, format!("bad image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}")));
    }
    let n = r.u32_be("image count")? as usize;
    let rows = r.u32_be("row count")? as usize;
    let cols = r.u32_be("column count")? as usize;
    if rows == 0 || cols == 0 {
        return Err(r.fail(8, "zero image dimension"));
    }
    let mut images = Vec::with_capacity(n);
    for _ in 0..n {
        images.push(r.take(rows * cols, "pixel data")?.to_vec());
    }
    if r.pos != bytes.len() {
        return Err(r.fail(r.pos, "trailing bytes after pixel data"));
    }
    Ok((rows, cols, images))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_file(path)?;
    let mut r = Reader { path, bytes: &bytes, pos: 0 };
    let magic = r.u32_be("magic")?;
    if magic != LABELS_MAGIC {
        return Err(r.fail(0, format!("bad label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}")));
    }
    let n = r.u32_be("label count")? as usize;
    let labels = r.take(n, "label data")?.to_vec();
    if r.pos != bytes.len() {
        return Err(r.fail(r.pos, "trailing bytes after label data"));
    }
    Ok(labels)
}

pub fn write_idx_images(path: &Path, rows: usize, cols: usize, images: &[Vec<u8>]) -> Result<()> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGES_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for im in images {
        if im.len() != rows * cols {
            return Err(Error::invalid("idx images", "image size does not match rows * cols"));
        }
        out.extend_from_slice(im);
    }
    fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Per-class quotas summing to `n`: an even split with the remainder going to
/// the lowest class ids, then shortfalls of small classes handed to classes
/// that still have spare examples.
fn class_quotas(available: &BTreeMap<u8, usize>, n: usize) -> Vec<(u8, usize)> {
    let k = available.len();
    let mut quotas: Vec<(u8, usize)> = available
        .keys()
        .enumerate()
        .map(|(i, &c)| (c, n / k + usize::from(i < n % k)))
        .collect();
    let mut shortfall = 0;
    for (c, q) in quotas.iter_mut() {
        let cap = available[c];
        if *q > cap {
            shortfall += *q - cap;
            *q = cap;
        }
    }
    while shortfall > 0 {
        let mut progressed = false;
        for (c, q) in quotas.iter_mut() {
            if shortfall > 0 && *q < available[c] {
                *q += 1;
                shortfall -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    quotas
}

/// Read MNIST, binarise at `threshold` (pixel >= threshold is on) and draw a
/// class-stratified subsample of `n_examples`. Selected examples keep their
/// file order.
pub fn load_mnist(
    image_path: &Path,
    label_path: &Path,
    n_examples: usize,
    threshold: u8,
    seed: u64,
) -> Result<LabeledImageSet> {
    let (rows, cols, raw) = read_idx_images(image_path)?;
    let labels = read_idx_labels(label_path)?;
    if raw.len() != labels.len() {
        return Err(Error::invalid(
            "mnist",
            format!("{} images but {} labels", raw.len(), labels.len()),
        ));
    }
    if n_examples > raw.len() {
        return Err(Error::invalid(
            "mnist",
            format!("requested {n_examples} examples, only {} available", raw.len()),
        ));
    }

    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let available = by_class.iter().map(|(&c, v)| (c, v.len())).collect();
    let mut rng = seeds::rng(seeds::derive(seed, "mnist-subsample"));
    let mut chosen = Vec::with_capacity(n_examples);
    for (c, quota) in class_quotas(&available, n_examples) {
        let idx = by_class.get_mut(&c).unwrap();
        idx.shuffle(&mut rng);
        chosen.extend_from_slice(&idx[..quota]);
    }
    chosen.sort_unstable();

    let images = chosen
        .iter()
        .map(|&i| BinaryImage {
            width: cols,
            height: rows,
            pixels: raw[i].iter().map(|&p| u8::from(p >= threshold)).collect(),
        })
        .collect();
    let provenance = [image_path, label_path]
        .into_iter()
        .map(|p| {
            Ok(FileDigest { path: p.display().to_string(), sha256: file_sha256(&read_file(p)?) })
        })
        .collect::<Result<_>>()?;
    Ok(LabeledImageSet {
        images,
        labels: chosen.iter().map(|&i| labels[i]).collect(),
        provenance,
    })
}
