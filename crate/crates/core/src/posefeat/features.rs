//! Body-motion (BM) and Fourier (FFT) descriptors of joint trajectories.
//!
//! BM accounting (428 dims per window):
//!
//! | sub-feature         | layout                                   | dims |
//! |---------------------|------------------------------------------|------|
//! | `velocity`          | 10 parts × 8 direction bins              | 80   |
//! | `acceleration`      | 10 parts × 8 direction bins              | 80   |
//! | `distance_stats`    | 16 distance trajectories × 5 statistics  | 80   |
//! | `distance_rate`     | 16 distance trajectories × 8 rate bins   | 128  |
//! | `angle_stats`       | 6 inner-joint angles × 5 statistics      | 30   |
//! | `angle_speed_stats` | 6 inner-joint angle speeds × 5 statistics| 30   |
//!
//! FFT accounting (256 dims): 16 coordinate trajectories (8 arm joints × x, y)
//! each contributing 4 band energies, 10 cepstral coefficients, spectral
//! entropy and spectral energy, grouped into the sub-features `fft_bands`
//! (64), `fft_cepstrum` (160), `fft_entropy` (16) and `fft_energy` (16).
//!
//! Statistics are always (mean, median, population std, min, max).

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::tracks::{BodyPart, JointTrackSet, Point};
use crate::error::Result;
use crate::util;

/// Trajectory lengths (frames) for which descriptors are computed.
pub const TRAJECTORY_LENGTHS: [usize; 3] = [20, 50, 100];

pub const DIRECTION_BINS: usize = 8;

/// Edges of the signed rate-of-change histogram in px/frame.
pub const RATE_EDGES: [f64; 7] = [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0];

pub const CEPSTRUM_EPS: f64 = 1e-8;

pub const BAND_EDGES: [(usize, usize); 4] = [(1, 2), (2, 4), (4, 8), (8, 16)];

pub const N_CEPSTRAL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoseFeatureKind {
    Bm,
    Fft,
}

impl PoseFeatureKind {
    /// Sub-feature names and dimensions in block order.
    pub fn layout(self) -> &'static [(&'static str, usize)] {
        match self {
            PoseFeatureKind::Bm => &BM_LAYOUT,
            PoseFeatureKind::Fft => &FFT_LAYOUT,
        }
    }

    pub fn dim(self) -> usize {
        self.layout().iter().map(|(_, d)| d).sum()
    }

    /// Bag-of-words dimension: codebooks of size 2·d for every sub-feature and length.
    pub fn bow_dim(self) -> usize {
        2 * self.dim() * TRAJECTORY_LENGTHS.len()
    }

    pub fn compute(self, tracks: &JointTrackSet, center_frame: i64, length: usize) -> Result<Vec<SubFeature>> {
        match self {
            PoseFeatureKind::Bm => bm_feature(tracks, center_frame, length),
            PoseFeatureKind::Fft => fft_feature(tracks, center_frame, length),
        }
    }
}

impl std::str::FromStr for PoseFeatureKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "bm" => Ok(PoseFeatureKind::Bm),
            "fft" => Ok(PoseFeatureKind::Fft),
            _ => Err(crate::Error::config("feature", format!("unknown pose feature `{s}`"))),
        }
    }
}

const BM_LAYOUT: [(&str, usize); 6] = [
    ("velocity", 80),
    ("acceleration", 80),
    ("distance_stats", 80),
    ("distance_rate", 128),
    ("angle_stats", 30),
    ("angle_speed_stats", 30),
];

const FFT_LAYOUT: [(&str, usize); 4] = [
    ("fft_bands", 64),
    ("fft_cepstrum", 160),
    ("fft_entropy", 16),
    ("fft_energy", 16),
];

/// A named block of a pose descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubFeature {
    pub name: String,
    pub values: Vec<f64>,
}

impl SubFeature {
    fn new(name: &str, values: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Direction bin of a displacement: 45° sectors, bin 0 centered on +x.
pub fn direction_bin(dx: f64, dy: f64) -> usize {
    let angle = dy.atan2(dx);
    let shifted = (angle + PI / 8.0).rem_euclid(2.0 * PI);
    ((shifted / (PI / 4.0)).floor() as usize) % DIRECTION_BINS
}

fn direction_histogram(displacements: impl Iterator<Item = Point>) -> [f64; DIRECTION_BINS] {
    let mut hist = [0.0; DIRECTION_BINS];
    for (dx, dy) in displacements {
        let speed = dx.hypot(dy);
        if speed > 0.0 {
            hist[direction_bin(dx, dy)] += speed;
        }
    }
    hist
}

/// Velocity direction histogram of one trajectory, weighted by speed.
pub fn velocity_histogram(track: &[Point]) -> [f64; DIRECTION_BINS] {
    direction_histogram(track.windows(2).map(|w| (w[1].0 - w[0].0, w[1].1 - w[0].1)))
}

/// Acceleration (second difference) direction histogram, weighted by magnitude.
pub fn acceleration_histogram(track: &[Point]) -> [f64; DIRECTION_BINS] {
    direction_histogram(
        track
            .windows(3)
            .map(|w| (w[2].0 - 2.0 * w[1].0 + w[0].0, w[2].1 - 2.0 * w[1].1 + w[0].1)),
    )
}

/// (mean, median, std, min, max) of a scalar trajectory.
pub fn statistics(xs: &[f64]) -> [f64; 5] {
    if xs.is_empty() {
        return [0.0; 5];
    }
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [util::mean(xs), util::median(xs), util::std_dev(xs), min, max]
}

/// Signed per-frame change histogram over [`RATE_EDGES`], weighted by |change|.
pub fn rate_histogram(xs: &[f64]) -> [f64; 8] {
    let mut hist = [0.0; 8];
    for w in xs.windows(2) {
        let delta = w[1] - w[0];
        if delta != 0.0 {
            let bin = RATE_EDGES.iter().filter(|&&e| delta >= e).count();
            hist[bin] += delta.abs();
        }
    }
    hist
}

/// Left/right pairs followed by all intra-side pairs among shoulder, elbow, wrist, hand.
pub fn distance_pairs() -> Vec<(BodyPart, BodyPart)> {
    use BodyPart::*;
    let mut pairs = vec![(RShoulder, LShoulder), (RElbow, LElbow), (RWrist, LWrist), (RHand, LHand)];
    for side in [[RShoulder, RElbow, RWrist, RHand], [LShoulder, LElbow, LWrist, LHand]] {
        for a in 0..4 {
            for b in a + 1..4 {
                pairs.push((side[a], side[b]));
            }
        }
    }
    pairs
}

/// Inner joints with their two incident neighbours.
pub fn angle_triples() -> [(BodyPart, BodyPart, BodyPart); 6] {
    use BodyPart::*;
    [
        (RShoulder, Torso, RElbow),
        (RElbow, RShoulder, RWrist),
        (RWrist, RElbow, RHand),
        (LShoulder, Torso, LElbow),
        (LElbow, LShoulder, LWrist),
        (LWrist, LElbow, LHand),
    ]
}

/// Interior angle at `joint` between the segments to `a` and `b`, in [0, π].
pub fn interior_angle(joint: Point, a: Point, b: Point) -> f64 {
    let (ux, uy) = (a.0 - joint.0, a.1 - joint.1);
    let (vx, vy) = (b.0 - joint.0, b.1 - joint.1);
    let cross = ux * vy - uy * vx;
    let dot = ux * vx + uy * vy;
    cross.abs().atan2(dot)
}

/// BM descriptor of the window of `length` frames centered on `center_frame`.
pub fn bm_feature(tracks: &JointTrackSet, center_frame: i64, length: usize) -> Result<Vec<SubFeature>> {
    let windows: Vec<&[Point]> = BodyPart::ALL
        .iter()
        .map(|&p| tracks.window(p, center_frame, length))
        .collect::<Result<_>>()?;
    let win = |p: BodyPart| windows[p.index()];

    let mut velocity = Vec::with_capacity(80);
    let mut acceleration = Vec::with_capacity(80);
    for part in BodyPart::ALL {
        velocity.extend(velocity_histogram(win(part)));
        acceleration.extend(acceleration_histogram(win(part)));
    }

    let mut dist_stats = Vec::with_capacity(80);
    let mut dist_rate = Vec::with_capacity(128);
    for (a, b) in distance_pairs() {
        let d: Vec<f64> = win(a)
            .iter()
            .zip(win(b))
            .map(|(p, q)| (p.0 - q.0).hypot(p.1 - q.1))
            .collect();
        dist_stats.extend(statistics(&d));
        dist_rate.extend(rate_histogram(&d));
    }

    let mut angle_stats = Vec::with_capacity(30);
    let mut angle_speed_stats = Vec::with_capacity(30);
    for (joint, a, b) in angle_triples() {
        let angles: Vec<f64> = (0..length)
            .map(|k| interior_angle(win(joint)[k], win(a)[k], win(b)[k]))
            .collect();
        let speed: Vec<f64> = angles.windows(2).map(|w| w[1] - w[0]).collect();
        angle_stats.extend(statistics(&angles));
        angle_speed_stats.extend(statistics(&speed));
    }

    Ok(vec![
        SubFeature::new("velocity", velocity),
        SubFeature::new("acceleration", acceleration),
        SubFeature::new("distance_stats", dist_stats),
        SubFeature::new("distance_rate", dist_rate),
        SubFeature::new("angle_stats", angle_stats),
        SubFeature::new("angle_speed_stats", angle_speed_stats),
    ])
}

/// Spectral summary of one coordinate trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    pub bands: [f64; 4],
    pub cepstrum: [f64; N_CEPSTRAL],
    pub entropy: f64,
    pub energy: f64,
}

/// Bands, cepstrum, entropy and energy of a mean-removed trajectory.
///
/// Band, entropy and energy terms use the one-sided power spectrum
/// `|X_k|²` for `k = 1..=L/2`; the cepstrum is the real inverse transform of
/// `ln(|X| + ε)` over the full spectrum.
pub fn spectral_summary(signal: &[f64], planner: &mut FftPlanner<f64>) -> SpectralSummary {
    let n = signal.len();
    let mean = util::mean(signal);
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let mags: Vec<f64> = buf.iter().map(|c| c.norm()).collect();

    let half = n / 2;
    let power = |k: usize| mags[k] * mags[k];
    let mut bands = [0.0; 4];
    for (b, &(lo, hi)) in BAND_EDGES.iter().enumerate() {
        bands[b] = (lo..hi.min(half + 1)).map(power).sum();
    }
    let energy: f64 = (1..=half).map(power).sum();
    let entropy = if energy > 0.0 {
        -(1..=half)
            .map(|k| power(k) / energy)
            .filter(|&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    } else {
        0.0
    };

    let mut log_mag: Vec<Complex<f64>> = mags.iter().map(|&m| Complex::new((m + CEPSTRUM_EPS).ln(), 0.0)).collect();
    planner.plan_fft_inverse(n).process(&mut log_mag);
    let mut cepstrum = [0.0; N_CEPSTRAL];
    for (k, c) in cepstrum.iter_mut().enumerate() {
        *c = log_mag.get(k).map_or(0.0, |v| v.re / n as f64);
    }
    SpectralSummary {
        bands,
        cepstrum,
        entropy,
        energy,
    }
}

/// FFT descriptor of the window of `length` frames centered on `center_frame`.
pub fn fft_feature(tracks: &JointTrackSet, center_frame: i64, length: usize) -> Result<Vec<SubFeature>> {
    let mut planner = FftPlanner::new();
    let mut bands = Vec::with_capacity(64);
    let mut cepstrum = Vec::with_capacity(160);
    let mut entropy = Vec::with_capacity(16);
    let mut energy = Vec::with_capacity(16);
    for part in BodyPart::ARM {
        let w = tracks.window(part, center_frame, length)?;
        for coord in 0..2 {
            let signal: Vec<f64> = w.iter().map(|p| if coord == 0 { p.0 } else { p.1 }).collect();
            let s = spectral_summary(&signal, &mut planner);
            bands.extend(s.bands);
            cepstrum.extend(s.cepstrum);
            entropy.push(s.entropy);
            energy.push(s.energy);
        }
    }
    Ok(vec![
        SubFeature::new("fft_bands", bands),
        SubFeature::new("fft_cepstrum", cepstrum),
        SubFeature::new("fft_entropy", entropy),
        SubFeature::new("fft_energy", energy),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tracks_from(f: impl Fn(usize, usize) -> Point, len: usize) -> JointTrackSet {
        let positions = (0..BodyPart::COUNT)
            .map(|p| (0..len).map(|k| f(p, k)).collect())
            .collect();
        JointTrackSet::new(0, positions).unwrap()
    }

    fn body(len: usize) -> JointTrackSet {
        // a plausible static skeleton with per-part offsets plus slow drift
        tracks_from(
            |p, k| {
                let base = [(0.0, -60.0), (0.0, 0.0), (-30.0, -40.0), (30.0, -40.0), (-45.0, 0.0), (45.0, 0.0), (-50.0, 35.0), (50.0, 35.0), (-52.0, 50.0), (52.0, 50.0)][p];
                (base.0 + 0.3 * k as f64 * (p as f64 - 4.0), base.1 + (k as f64 * 0.2 + p as f64).sin() * 3.0)
            },
            len,
        )
    }

    #[test]
    fn layouts_sum_to_documented_totals() {
        assert_eq!(PoseFeatureKind::Bm.dim(), 428);
        assert_eq!(PoseFeatureKind::Fft.dim(), 256);
        assert_eq!(PoseFeatureKind::Fft.bow_dim(), 1536);
        assert_eq!(PoseFeatureKind::Bm.bow_dim(), 2 * 428 * 3);
        let t = body(120);
        for kind in [PoseFeatureKind::Bm, PoseFeatureKind::Fft] {
            let feats = kind.compute(&t, 60, 100).unwrap();
            let got: Vec<(&str, usize)> = feats.iter().map(|f| (f.name.as_str(), f.dim())).collect();
            assert_eq!(got, kind.layout());
        }
    }

    #[test]
    fn constant_velocity_fills_one_bin() {
        let t = tracks_from(|_, k| (2.0 * k as f64, 7.0), 20);
        let feats = bm_feature(&t, 10, 20).unwrap();
        let vel = &feats[0].values;
        for part in 0..10 {
            assert_eq!(vel[part * 8], 38.0);
            assert!(vel[part * 8 + 1..part * 8 + 8].iter().all(|v| *v == 0.0));
        }
        assert!(feats[1].values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn stationary_joint_has_no_motion() {
        let t = tracks_from(|p, _| (p as f64 * 10.0, 3.0), 50);
        let feats = bm_feature(&t, 25, 50).unwrap();
        assert!(feats[0].values.iter().all(|v| *v == 0.0));
        assert!(feats[1].values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_distance_statistics() {
        assert_eq!(statistics(&[50.0; 20]), [50.0, 50.0, 0.0, 50.0, 50.0]);
        assert_eq!(rate_histogram(&[50.0; 20]), [0.0; 8]);
    }

    #[test]
    fn rate_histogram_bins() {
        let h = rate_histogram(&[0.0, 5.0, 4.5, 4.5, 1.5]);
        // +5 → [4, ∞); −0.5 → [−1, 0); 0 skipped; −3 → [−4, −2)
        assert_eq!(h, [0.0, 3.0, 0.0, 0.5, 0.0, 0.0, 0.0, 5.0]);
    }

    #[test]
    fn direction_bins_are_centered_on_axes() {
        assert_eq!(direction_bin(1.0, 0.0), 0);
        assert_eq!(direction_bin(1.0, 0.3), 0);
        assert_eq!(direction_bin(1.0, 1.0), 1);
        assert_eq!(direction_bin(0.0, 1.0), 2);
        assert_eq!(direction_bin(-1.0, 0.0), 4);
        assert_eq!(direction_bin(0.0, -1.0), 6);
        assert_eq!(direction_bin(1.0, -0.3), 0);
    }

    #[test]
    fn interior_angle_range() {
        assert!((interior_angle((0.0, 0.0), (1.0, 0.0), (0.0, 2.0)) - PI / 2.0).abs() < 1e-12);
        assert!((interior_angle((0.0, 0.0), (1.0, 0.0), (-3.0, 0.0)) - PI).abs() < 1e-12);
        assert!(interior_angle((0.0, 0.0), (1.0, 0.0), (5.0, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_trajectory_spectrum() {
        let mut planner = FftPlanner::new();
        let s = spectral_summary(&[3.0; 20], &mut planner);
        assert_eq!(s.bands, [0.0; 4]);
        assert_eq!(s.energy, 0.0);
        assert_eq!(s.entropy, 0.0);
    }

    #[test]
    fn sinusoid_energy_lands_in_its_band() {
        let n = 50;
        let signal: Vec<f64> = (0..n).map(|t| (2.0 * PI * 2.0 * t as f64 / n as f64).cos()).collect();
        let mut planner = FftPlanner::new();
        let s = spectral_summary(&signal, &mut planner);
        // |X_2| = n/2 for a unit cosine at bin 2
        let expected = (n as f64 / 2.0).powi(2);
        assert!((s.bands[1] - expected).abs() < 1e-8);
        assert!(s.bands[0].abs() < 1e-12 && s.bands[2].abs() < 1e-12 && s.bands[3].abs() < 1e-12);
        assert!((s.energy - expected).abs() < 1e-8);
        assert!(s.entropy.abs() < 1e-12);
    }

    #[test]
    fn fft_values_per_trajectory() {
        let t = body(60);
        let feats = fft_feature(&t, 30, 50).unwrap();
        let total: usize = feats.iter().map(|f| f.dim()).sum();
        assert_eq!(total / 16, 16);
    }

    #[test]
    fn window_out_of_range() {
        let t = body(30);
        assert!(bm_feature(&t, 25, 20).is_err());
        assert!(fft_feature(&t, 5, 20).is_err());
    }

    proptest! {
        #[test]
        fn velocity_rotation_shifts_two_bins(pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 20)) {
            let t = tracks_from(|p, k| (pts[k].0 + p as f64, pts[k].1 - p as f64), 20);
            let rot = t.map_points(|(x, y)| (-y, x));
            let a = bm_feature(&t, 10, 20).unwrap();
            let b = bm_feature(&rot, 10, 20).unwrap();
            for part in 0..10 {
                for bin in 0..8 {
                    let va = a[0].values[part * 8 + bin];
                    let vb = b[0].values[part * 8 + (bin + 2) % 8];
                    prop_assert!((va - vb).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn translation_invariance(dx in -100.0f64..100.0, dy in -100.0f64..100.0, seed in 0u64..1000) {
            let t = tracks_from(|p, k| {
                let s = (seed as f64 + p as f64 * 13.0 + k as f64 * 0.7).sin();
                (p as f64 * 11.0 + 5.0 * s + k as f64 * 0.1, (p * p) as f64 + 4.0 * s.cos())
            }, 50);
            let moved = t.map_points(|(x, y)| (x + dx, y + dy));
            let a = bm_feature(&t, 25, 50).unwrap();
            let b = bm_feature(&moved, 25, 50).unwrap();
            for (fa, fb) in a.iter().zip(&b) {
                for (va, vb) in fa.values.iter().zip(&fb.values) {
                    prop_assert!((va - vb).abs() < 1e-6, "{}: {} vs {}", fa.name, va, vb);
                }
            }
        }
    }
}
