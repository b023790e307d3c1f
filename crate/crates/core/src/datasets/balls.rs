//! Synthetic "ball trajectories" videos: a filled circle or ellipse moving on
//! a torus according to one of seven motion laws, with positional noise and
//! background pixel flips.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{BinaryVideo, DatasetDigest};
use crate::error::{Error, Result};
use crate::seeds::{self, StageRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BallClass {
    HorizontalLinear,
    VerticalLinear,
    DiagonalLinearDown,
    DiagonalLinearUp,
    CircularCw,
    CircularCcw,
    RandomWalk,
}

impl BallClass {
    pub const ALL: [BallClass; 7] = [
        BallClass::HorizontalLinear,
        BallClass::VerticalLinear,
        BallClass::DiagonalLinearDown,
        BallClass::DiagonalLinearUp,
        BallClass::CircularCw,
        BallClass::CircularCcw,
        BallClass::RandomWalk,
    ];

    pub fn id(self) -> u8 {
        Self::ALL.iter().position(|&c| c == self).unwrap() as u8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BallGenSpec {
    pub n_videos: usize,
    pub size: usize,
    pub n_frames: usize,
    /// Semi-axis range in pixels.
    pub radius_range: [f64; 2],
    /// Pixels per frame.
    pub speed_range: [f64; 2],
    pub orbit_radius_range: [f64; 2],
    pub position_noise_sd: f64,
    pub jitter_halfwidth: f64,
    /// Per pixel, per frame.
    pub background_flip_prob: f64,
    pub seed: u64,
}

impl Default for BallGenSpec {
    fn default() -> Self {
        Self {
            n_videos: 700,
            size: 32,
            n_frames: 100,
            radius_range: [2.0, 4.0],
            speed_range: [0.5, 2.0],
            orbit_radius_range: [6.0, 12.0],
            position_noise_sd: 0.5,
            jitter_halfwidth: 0.5,
            background_flip_prob: 0.005,
            seed: 0,
        }
    }
}

impl BallGenSpec {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |r: [f64; 2]| r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite();
        for (name, r) in [
            ("radius_range", self.radius_range),
            ("speed_range", self.speed_range),
            ("orbit_radius_range", self.orbit_radius_range),
        ] {
            if !range_ok(r) {
                return Err(Error::invalid("ball generator", format!("{name} {r:?} must be positive and ordered")));
            }
        }
        if !(self.position_noise_sd >= 0.0 && self.jitter_halfwidth >= 0.0) {
            return Err(Error::invalid("ball generator", "noise magnitudes must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.background_flip_prob) {
            return Err(Error::invalid("ball generator", "background_flip_prob outside [0, 1]"));
        }
        if self.size == 0 || self.n_frames == 0 {
            return Err(Error::invalid("ball generator", "size and n_frames must be positive"));
        }
        Ok(())
    }
}

/// Per-video generation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallVideoMeta {
    pub class: BallClass,
    pub radii: (f64, f64),
    pub speed: f64,
    /// Rendered (noisy, wrapped) centre for every frame.
    pub centers: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallVideoSet {
    pub videos: Vec<BinaryVideo>,
    pub labels: Vec<u8>,
    pub meta: Vec<BallVideoMeta>,
    pub spec: BallGenSpec,
}

fn uniform(rng: &mut StageRng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..r[1])
    }
}

/// Noise-free centre path for one video.
fn trajectory(class: BallClass, spec: &BallGenSpec, speed: f64, rng: &mut StageRng) -> Vec<(f64, f64)> {
    let size = spec.size as f64;
    let start = (rng.random_range(0.0..size), rng.random_range(0.0..size));
    let frames = 0..spec.n_frames;
    let linear = |dx: f64, dy: f64| -> Vec<(f64, f64)> {
        frames
            .clone()
            .map(|t| (start.0 + dx * t as f64, start.1 + dy * t as f64))
            .collect()
    };
    match class {
        BallClass::HorizontalLinear => linear(speed, 0.0),
        BallClass::VerticalLinear => linear(0.0, speed),
        BallClass::DiagonalLinearDown => linear(speed * FRAC_1_SQRT_2, speed * FRAC_1_SQRT_2),
        BallClass::DiagonalLinearUp => linear(speed * FRAC_1_SQRT_2, -speed * FRAC_1_SQRT_2),
        BallClass::CircularCw | BallClass::CircularCcw => {
            let orbit = uniform(rng, spec.orbit_radius_range);
            let phase = rng.random_range(0.0..TAU);
            // image y grows downward, so increasing angle turns clockwise on screen
            let omega = if class == BallClass::CircularCw { speed / orbit } else { -speed / orbit };
            frames
                .map(|t| {
                    let a = phase + omega * t as f64;
                    (start.0 + orbit * a.cos(), start.1 + orbit * a.sin())
                })
                .collect()
        }
        BallClass::RandomWalk => {
            let mut p = start;
            let mut out = Vec::with_capacity(spec.n_frames);
            for _ in frames {
                out.push(p);
                let heading = rng.random_range(0.0..TAU);
                p = (p.0 + speed * heading.cos(), p.1 + speed * heading.sin());
            }
            out
        }
    }
}

/// Signed toroidal offset in `[-size/2, size/2)`.
fn wrap_delta(d: f64, size: f64) -> f64 {
    (d + size / 2.0).rem_euclid(size) - size / 2.0
}

fn render(video: &mut BinaryVideo, t: usize, center: (f64, f64), radii: (f64, f64)) {
    let size = video.width as f64;
    for y in 0..video.height {
        let dy = wrap_delta(y as f64 + 0.5 - center.1, size) / radii.1;
        for x in 0..video.width {
            let dx = wrap_delta(x as f64 + 0.5 - center.0, size) / radii.0;
            if dx * dx + dy * dy <= 1.0 {
                video.set(t, x, y, 1);
            }
        }
    }
}

fn generate_one(spec: &BallGenSpec, index: usize) -> (BinaryVideo, BallVideoMeta) {
    let class = BallClass::ALL[index % 7];
    let mut rng = seeds::rng(seeds::derive_indexed(spec.seed, "ball-video", index as u64));
    let rx = uniform(&mut rng, spec.radius_range);
    let ry = if rng.random_bool(0.5) { rx } else { uniform(&mut rng, spec.radius_range) };
    let speed = uniform(&mut rng, spec.speed_range);
    let path = trajectory(class, spec, speed, &mut rng);

    let size = spec.size as f64;
    let noise = (spec.position_noise_sd > 0.0).then(|| Normal::new(0.0, spec.position_noise_sd).unwrap());
    let perturb = |rng: &mut StageRng| {
        let g = noise.map_or(0.0, |n| n.sample(rng));
        let j = if spec.jitter_halfwidth > 0.0 {
            rng.random_range(-spec.jitter_halfwidth..=spec.jitter_halfwidth)
        } else {
            0.0
        };
        g + j
    };

    let mut video = BinaryVideo::blank(spec.size, spec.size, spec.n_frames);
    let mut centers = Vec::with_capacity(spec.n_frames);
    for (t, &(x, y)) in path.iter().enumerate() {
        let c = ((x + perturb(&mut rng)).rem_euclid(size), (y + perturb(&mut rng)).rem_euclid(size));
        render(&mut video, t, c, (rx, ry));
        centers.push(c);
    }
    if spec.background_flip_prob > 0.0 {
        for p in video.data.iter_mut() {
            if rng.random_bool(spec.background_flip_prob) {
                *p ^= 1;
            }
        }
    }
    (video, BallVideoMeta { class, radii: (rx, ry), speed, centers })
}

/// Generate `n_videos` videos; video `i` has class `i mod 7`, so when the
/// count is not a multiple of seven the lowest class ids get one extra.
pub fn generate_ball_videos(spec: &BallGenSpec) -> Result<BallVideoSet> {
    use rayon::prelude::*;
    spec.validate()?;
    let (videos, meta): (Vec<_>, Vec<_>) =
        (0..spec.n_videos).into_par_iter().map(|i| generate_one(spec, i)).unzip();
    let labels = meta.iter().map(|m| m.class.id()).collect();
    Ok(BallVideoSet { videos, labels, meta, spec: spec.clone() })
}

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    spec: BallGenSpec,
    digest: String,
    width: usize,
    height: usize,
    n_frames: usize,
    labels: Vec<u8>,
}

/// Cache layout: one line of JSON (spec, digest, shape, labels), then every
/// frame of every video as packed bits, video-major then frame-major, bit
/// `i % 8` of byte `i / 8` holding pixel `i`.
pub fn write_video_cache(set: &BallVideoSet, path: &Path) -> Result<()> {
    let header = CacheHeader {
        spec: set.spec.clone(),
        digest: set.digest(),
        width: set.spec.size,
        height: set.spec.size,
        n_frames: set.spec.n_frames,
        labels: set.labels.clone(),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    let n_bits: usize = set.videos.iter().map(|v| v.data.len()).sum();
    let mut packed = vec![0u8; n_bits.div_ceil(8)];
    for (i, &p) in set.videos.iter().flat_map(|v| v.data.iter()).enumerate() {
        if p != 0 {
            packed[i / 8] |= 1 << (i % 8);
        }
    }
    out.extend_from_slice(&packed);
    let mut f = fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    f.write_all(&out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Read a cache written by [`write_video_cache`]; the per-video metadata is
/// not stored and is regenerated from the generator settings.
pub fn read_video_cache(path: &Path) -> Result<BallVideoSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let parse_err = |offset: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        offset: offset as u64,
        reason,
    };
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| parse_err(bytes.len(), "missing header terminator".into()))?;
    let header: CacheHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| parse_err(0, e.to_string()))?;
    let px = header.width * header.height * header.n_frames;
    let n_bits = px * header.labels.len();
    let body = &bytes[nl + 1..];
    if body.len() != n_bits.div_ceil(8) {
        return Err(parse_err(nl + 1, format!("expected {} packed bytes, found {}", n_bits.div_ceil(8), body.len())));
    }
    let videos = (0..header.labels.len())
        .map(|v| BinaryVideo {
            width: header.width,
            height: header.height,
            n_frames: header.n_frames,
            data: (v * px..(v + 1) * px).map(|i| (body[i / 8] >> (i % 8)) & 1).collect(),
        })
        .collect();
    let regenerated = generate_ball_videos(&header.spec)?;
    let set = BallVideoSet { videos, labels: header.labels, meta: regenerated.meta, spec: header.spec };
    if set.digest() != header.digest {
        return Err(parse_err(0, "content digest mismatch".into()));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(n: usize, speed: f64) -> BallGenSpec {
        BallGenSpec {
            n_videos: n,
            speed_range: [speed, speed],
            position_noise_sd: 0.0,
            jitter_halfwidth: 0.0,
            background_flip_prob: 0.0,
            seed: 17,
            ..BallGenSpec::default()
        }
    }

    #[test]
    fn noiseless_horizontal_motion() {
        let set = generate_ball_videos(&quiet(7, 1.5)).unwrap();
        let m = &set.meta[0];
        assert_eq!(m.class, BallClass::HorizontalLinear);
        for w in m.centers.windows(2) {
            let dx = (w[1].0 - w[0].0).rem_euclid(32.0);
            assert!((dx - 1.5).abs() < 1e-9, "dx {dx}");
            assert_eq!(w[1].1, w[0].1);
        }
    }

    #[test]
    fn wrapped_ball_keeps_its_mass() {
        let set = generate_ball_videos(&quiet(14, 1.0)).unwrap();
        for (v, m) in set.videos.iter().zip(&set.meta) {
            if !matches!(m.class, BallClass::HorizontalLinear | BallClass::VerticalLinear) {
                continue;
            }
            let mass = v.active_in_frame(0);
            assert!(mass > 0);
            assert!((0..v.n_frames).all(|t| v.active_in_frame(t) == mass));
        }
    }

    #[test]
    fn default_set_shape_and_balance() {
        let set = generate_ball_videos(&BallGenSpec::default()).unwrap();
        assert_eq!(set.videos.len(), 700);
        let mut counts = [0; 7];
        for &l in &set.labels {
            counts[l as usize] += 1;
        }
        assert_eq!(counts, [100; 7]);
        assert!(set.videos.iter().all(|v| v.width == 32 && v.height == 32 && v.n_frames == 100));
        assert!(set.videos.iter().all(|v| v.data.iter().all(|&p| p <= 1)));
    }

    #[test]
    fn remainder_goes_to_low_ids() {
        let set = generate_ball_videos(&BallGenSpec { n_videos: 10, ..quiet(10, 1.0) }).unwrap();
        let mut counts = [0; 7];
        for &l in &set.labels {
            counts[l as usize] += 1;
        }
        assert_eq!(counts, [2, 2, 2, 1, 1, 1, 1]);
    }

    #[test]
    fn background_flip_rate() {
        // shrink the ball far away from a measured empty block: count flips
        // over all pixels whose toroidal distance from the centre exceeds 6
        let spec = BallGenSpec { background_flip_prob: 0.005, n_videos: 70, ..quiet(70, 1.0) };
        let set = generate_ball_videos(&spec).unwrap();
        let (mut on, mut total) = (0usize, 0usize);
        for (v, m) in set.videos.iter().zip(&set.meta) {
            for t in 0..v.n_frames {
                let c = m.centers[t];
                for y in 0..32 {
                    for x in 0..32 {
                        let dx = wrap_delta(x as f64 + 0.5 - c.0, 32.0);
                        let dy = wrap_delta(y as f64 + 0.5 - c.1, 32.0);
                        if dx.hypot(dy) > 6.0 {
                            total += 1;
                            on += v.get(t, x, y) as usize;
                        }
                    }
                }
            }
        }
        let per_frame_1024 = on as f64 / total as f64 * 1024.0;
        assert!((per_frame_1024 - 5.12).abs() < 0.15, "{per_frame_1024}");
    }

    #[test]
    fn determinism_and_seed_sensitivity() {
        let a = generate_ball_videos(&BallGenSpec { n_videos: 21, ..BallGenSpec::default() }).unwrap();
        let b = generate_ball_videos(&BallGenSpec { n_videos: 21, ..BallGenSpec::default() }).unwrap();
        let c = generate_ball_videos(&BallGenSpec { n_videos: 21, seed: 1, ..BallGenSpec::default() }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn cache_round_trip() {
        let set = generate_ball_videos(&BallGenSpec { n_videos: 9, ..BallGenSpec::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("balls.bin");
        write_video_cache(&set, &p).unwrap();
        assert_eq!(read_video_cache(&p).unwrap(), set);

        let mut bytes = fs::read(&p).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x80;
        fs::write(&p, &bytes).unwrap();
        assert!(read_video_cache(&p).is_err());
    }

    #[test]
    fn rejects_bad_spec() {
        let bad = BallGenSpec { radius_range: [3.0, 2.0], ..BallGenSpec::default() };
        assert!(generate_ball_videos(&bad).is_err());
        let bad = BallGenSpec { background_flip_prob: 1.5, ..BallGenSpec::default() };
        assert!(generate_ball_videos(&bad).is_err());
    }
}
