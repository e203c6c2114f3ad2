use std::path::Path;

use serde::{Deserialize, Serialize};

use super::codebook::{build_codebook, Codebook};
use super::features::{PoseFeatureKind, SubFeature};
use super::tracks::JointTrackSet;
use crate::error::{Error, Result};
use crate::util;

/// Descriptors of one pose frame, one entry per trajectory length.
///
/// An entry is `None` when the window for that length does not fit the tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDescriptors {
    pub frame: i64,
    pub by_length: Vec<Option<Vec<SubFeature>>>,
}

/// Computes descriptors for every frame in `frames` (inclusive range).
pub fn describe_frames(
    tracks: &JointTrackSet,
    kind: PoseFeatureKind,
    lengths: &[usize],
    first: i64,
    last: i64,
) -> Result<Vec<FrameDescriptors>> {
    (first..=last)
        .map(|frame| {
            let by_length = lengths
                .iter()
                .map(|&len| {
                    if tracks.window_fits(frame, len) {
                        kind.compute(tracks, frame, len).map(Some)
                    } else {
                        Ok(None)
                    }
                })
                .collect::<Result<_>>()?;
            Ok(FrameDescriptors { frame, by_length })
        })
        .collect()
}

/// All codebooks of one descriptor kind.
///
/// Block order: trajectory length (outer, as listed in `lengths`) then
/// sub-feature (inner, as in [`PoseFeatureKind::layout`]). Each block has
/// `2 · dim` bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookBundle {
    pub kind: PoseFeatureKind,
    pub lengths: Vec<usize>,
    pub block_order: Vec<String>,
    pub books: Vec<Codebook>,
}

impl CodebookBundle {
    pub fn block_sizes(&self) -> Vec<usize> {
        self.books.iter().map(Codebook::k).collect()
    }

    pub fn dim(&self) -> usize {
        self.block_sizes().iter().sum()
    }

    fn book(&self, length_idx: usize, sub_idx: usize) -> &Codebook {
        &self.books[length_idx * self.kind.layout().len() + sub_idx]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_string(path, &serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bundle: Self = serde_json::from_str(&util::read_to_string(path)?)?;
        let expected = bundle.lengths.len() * bundle.kind.layout().len();
        if bundle.books.len() != expected {
            return Err(Error::Format(format!(
                "codebook bundle has {} books, expected {expected}",
                bundle.books.len()
            )));
        }
        Ok(bundle)
    }
}

/// Runs k-means for every (length, sub-feature) block over the pooled descriptors.
///
/// Block `b` uses seed `seed + b`.
pub fn build_codebooks(
    kind: PoseFeatureKind,
    lengths: &[usize],
    descriptors: &[FrameDescriptors],
    seed: u64,
) -> Result<CodebookBundle> {
    let layout = kind.layout();
    let mut books = Vec::new();
    let mut block_order = Vec::new();
    for (li, &len) in lengths.iter().enumerate() {
        for (si, (name, _)) in layout.iter().enumerate() {
            let samples: Vec<Vec<f64>> = descriptors
                .iter()
                .filter_map(|d| d.by_length.get(li).and_then(|o| o.as_ref()))
                .map(|subs| subs[si].values.clone())
                .collect();
            let block = (li * layout.len() + si) as u64;
            books.push(build_codebook(name, &samples, seed.wrapping_add(block))?);
            block_order.push(format!("{len}/{name}"));
        }
    }
    Ok(CodebookBundle {
        kind,
        lengths: lengths.to_vec(),
        block_order,
        books,
    })
}

/// Unnormalized one-hot assignment counts of a single frame across all blocks.
pub fn frame_counts(desc: &FrameDescriptors, bundle: &CodebookBundle) -> Result<Vec<f64>> {
    let sizes = bundle.block_sizes();
    let mut out = vec![0.0; sizes.iter().sum()];
    let n_sub = bundle.kind.layout().len();
    if desc.by_length.len() != bundle.lengths.len() {
        return Err(Error::DimensionMismatch {
            expected: bundle.lengths.len(),
            got: desc.by_length.len(),
        });
    }
    let mut offset = 0;
    for (li, subs) in desc.by_length.iter().enumerate() {
        match subs {
            Some(subs) => {
                crate::error::ensure_dim(n_sub, subs.len())?;
                for (si, sub) in subs.iter().enumerate() {
                    let book = bundle.book(li, si);
                    out[offset + book.quantize(&sub.values)?] += 1.0;
                    offset += book.k();
                }
            }
            None => offset += (0..n_sub).map(|si| bundle.book(li, si).k()).sum::<usize>(),
        }
    }
    Ok(out)
}

/// L1-normalizes each block independently; empty blocks stay zero.
pub fn normalize_blocks(raw: &[f64], block_sizes: &[usize]) -> Vec<f64> {
    let mut out = raw.to_vec();
    let mut offset = 0;
    for &size in block_sizes {
        let block = &mut out[offset..offset + size];
        let sum: f64 = block.iter().sum();
        if sum > 0.0 {
            block.iter_mut().for_each(|v| *v /= sum);
        }
        offset += size;
    }
    out
}

/// Stacked, block-normalized bag-of-words histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct BowHistogram {
    pub values: Vec<f64>,
    pub block_sizes: Vec<usize>,
}

/// Encodes the pose frames of one interval as a stacked bag-of-words histogram.
pub fn encode_bow(descriptors: &[FrameDescriptors], bundle: &CodebookBundle) -> Result<BowHistogram> {
    let sizes = bundle.block_sizes();
    let mut raw = vec![0.0; sizes.iter().sum()];
    for d in descriptors {
        for (acc, v) in raw.iter_mut().zip(frame_counts(d, bundle)?) {
            *acc += v;
        }
    }
    Ok(BowHistogram {
        values: normalize_blocks(&raw, &sizes),
        block_sizes: sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_block_bundle(centers: Vec<Vec<f64>>) -> CodebookBundle {
        let dim = centers[0].len();
        CodebookBundle {
            kind: PoseFeatureKind::Fft,
            lengths: vec![20],
            block_order: vec![],
            books: PoseFeatureKind::Fft
                .layout()
                .iter()
                .map(|(name, _)| Codebook {
                    sub_feature: name.to_string(),
                    dim,
                    seed: 0,
                    centers: centers.clone(),
                    inertia_trace: vec![],
                })
                .collect(),
        }
    }

    fn desc(values: &[f64]) -> FrameDescriptors {
        let subs = PoseFeatureKind::Fft
            .layout()
            .iter()
            .map(|(name, _)| SubFeature {
                name: name.to_string(),
                values: values.to_vec(),
            })
            .collect();
        FrameDescriptors {
            frame: 0,
            by_length: vec![Some(subs)],
        }
    }

    #[test]
    fn single_sample_is_one_hot() {
        let b = single_block_bundle(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![5.0, 5.0]]);
        let h = encode_bow(&[desc(&[4.0, 4.5])], &b).unwrap();
        assert_eq!(&h.values[..4], &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(h.values.len(), 16);
    }

    #[test]
    fn empty_interval_is_zero() {
        let b = single_block_bundle(vec![vec![0.0], vec![1.0]]);
        let h = encode_bow(&[], &b).unwrap();
        assert!(h.values.iter().all(|v| *v == 0.0));
        let skipped = FrameDescriptors {
            frame: 3,
            by_length: vec![None],
        };
        assert!(encode_bow(&[skipped], &b).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn blocks_sum_to_one() {
        let b = single_block_bundle(vec![vec![0.0], vec![1.0]]);
        let h = encode_bow(&[desc(&[0.1]), desc(&[0.9]), desc(&[0.8])], &b).unwrap();
        for block in h.values.chunks(2) {
            assert!((block.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((block[1] - 2.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let b = single_block_bundle(vec![vec![0.0], vec![1.0]]);
        assert!(encode_bow(&[desc(&[0.1, 0.2])], &b).is_err());
    }

    #[test]
    fn documented_bow_dimensions() {
        // codebook size 2·d per sub-feature, three trajectory lengths
        let per_length = |k: PoseFeatureKind| k.layout().iter().map(|(_, d)| 2 * d).sum::<usize>();
        assert_eq!(per_length(PoseFeatureKind::Fft) * 3, 1536);
        assert_eq!(per_length(PoseFeatureKind::Bm) * 3, PoseFeatureKind::Bm.bow_dim());
        // a 556-dim BM descriptor would yield 1112 bins per length, 3336 in total
        assert_eq!(2 * 556, 1112);
        assert_eq!(2 * 556 * 3, 3336);
    }
}
