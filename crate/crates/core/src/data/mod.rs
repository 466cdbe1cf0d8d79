//! Dataset ingestion and task generation: IDX files, sequence views of
//! images, noise padding, fixed permutations, batching, synthetic tasks.

pub mod idx;
pub mod tasks;

pub use idx::{parse_idx_images, parse_idx_labels, serialize_idx_images, serialize_idx_labels, Images};
pub use tasks::{adding_task, pendulum_rollout, pendulum_trajectories};

use std::io::Write;
use std::path::Path;

use rand::distributions::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::autodiff::Target;
use crate::cell::Sequence;
use crate::error::DataError;
use crate::rng::{item_rng, stream, stream_rng};

/// Default seed for the fixed input permutation.
pub const DEFAULT_PERMUTATION_SEED: u64 = 92916;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// A set of input sequences with classification or regression supervision.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequenceSet {
    pub sequences: Vec<Sequence>,
    pub targets: Vec<Target>,
    pub p: usize,
    pub split: Split,
}

impl LabeledSequenceSet {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn item(&self, i: usize) -> (&Sequence, &Target) {
        (&self.sequences[i], &self.targets[i])
    }
}

/// How to slice a 28×28 image into a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SeqMode {
    /// One pixel per step: T=784, p=1.
    Pixel,
    /// Eight pixels per step: T=98, p=8.
    Row8,
    /// One full row per step: T=28, p=28.
    Row28,
}

impl SeqMode {
    pub fn parse(s: &str) -> Result<Self, DataError> {
        match s {
            "pixel" => Ok(SeqMode::Pixel),
            "row8" => Ok(SeqMode::Row8),
            "row28" => Ok(SeqMode::Row28),
            other => Err(DataError::BadMode(other.to_string())),
        }
    }

    pub fn group(&self) -> usize {
        match self {
            SeqMode::Pixel => 1,
            SeqMode::Row8 => 8,
            SeqMode::Row28 => 28,
        }
    }
}

/// A fixed, seed-derived permutation of sequence positions.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PermutationSpec {
    pub seed: u64,
    indices: Vec<usize>,
}

impl PermutationSpec {
    /// Fisher-Yates permutation of 0..t_len from the named seed.
    pub fn generate(t_len: usize, seed: u64) -> Self {
        let mut rng = stream_rng(seed, stream::PERMUTATION);
        let mut indices: Vec<usize> = (0..t_len).collect();
        for i in (1..t_len).rev() {
            let j = rng.gen_range(0..=i);
            indices.swap(i, j);
        }
        Self { seed, indices }
    }

    /// Validates that `indices` is a bijection on 0..len.
    pub fn from_indices(seed: u64, indices: Vec<usize>) -> Result<Self, DataError> {
        let mut seen = vec![false; indices.len()];
        for &i in &indices {
            if i >= indices.len() || seen[i] {
                return Err(DataError::BadMode(format!(
                    "not a permutation: index {i} repeated or out of range"
                )));
            }
            seen[i] = true;
        }
        Ok(Self { seed, indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn inverse(&self) -> PermutationSpec {
        let mut inv = vec![0usize; self.indices.len()];
        for (pos, &src) in self.indices.iter().enumerate() {
            inv[src] = pos;
        }
        PermutationSpec {
            seed: self.seed,
            indices: inv,
        }
    }

    /// Reorders sequence positions: output step t is input step indices[t].
    pub fn apply(&self, seq: &Sequence) -> Sequence {
        assert_eq!(seq.len_t(), self.indices.len(), "permutation length mismatch");
        let p = seq.p;
        let mut data = Vec::with_capacity(seq.data.len());
        for &src in &self.indices {
            data.extend_from_slice(seq.x(src));
        }
        Sequence::new(p, data)
    }
}

/// Slices a scanline-ordered 28×28 image into a sequence of p-vectors,
/// optionally permuting the sequence positions afterwards.
pub fn sequence_view(
    image: &[f64],
    mode: SeqMode,
    perm: Option<&PermutationSpec>,
) -> Result<Sequence, DataError> {
    if image.len() != 784 {
        return Err(DataError::BadImageShape {
            rows: image.len() / 28,
            cols: 28,
        });
    }
    let p = mode.group();
    let seq = Sequence::new(p, image.to_vec());
    match perm {
        Some(pm) => {
            if pm.len() != seq.len_t() {
                return Err(DataError::BadMode(format!(
                    "permutation length {} does not match sequence length {}",
                    pm.len(),
                    seq.len_t()
                )));
            }
            Ok(pm.apply(&seq))
        }
        None => Ok(seq),
    }
}

/// Appends standard Gaussian noise vectors until the sequence has t_total
/// steps; the signal occupies the prefix.
pub fn noise_pad(seq: &Sequence, t_total: usize, seed: u64) -> Result<Sequence, DataError> {
    let t_len = seq.len_t();
    if t_total < t_len {
        return Err(DataError::PadTooShort {
            t_total,
            len: t_len,
        });
    }
    let mut rng = stream_rng(seed, stream::NOISE_PAD);
    let mut data = seq.data.clone();
    data.reserve((t_total - t_len) * seq.p);
    for _ in t_len * seq.p..t_total * seq.p {
        let g: f64 = StandardNormal.sample(&mut rng);
        data.push(g);
    }
    Ok(Sequence::new(seq.p, data))
}

/// MNIST on disk: the four classic IDX files in one directory.
pub struct Mnist {
    pub train_images: Images,
    pub train_labels: Vec<u8>,
    pub test_images: Images,
    pub test_labels: Vec<u8>,
}

pub fn load_mnist(dir: &Path) -> Result<Mnist, DataError> {
    let read = |name: &str| std::fs::read(dir.join(name));
    let train_images = parse_idx_images(&read("train-images-idx3-ubyte")?)?;
    let train_labels = parse_idx_labels(&read("train-labels-idx1-ubyte")?)?;
    let test_images = parse_idx_images(&read("t10k-images-idx3-ubyte")?)?;
    let test_labels = parse_idx_labels(&read("t10k-labels-idx1-ubyte")?)?;
    for (images, labels) in [(&train_images, &train_labels), (&test_images, &test_labels)] {
        if images.count() != labels.len() {
            return Err(DataError::CountMismatch {
                labels: labels.len(),
                images: images.count(),
            });
        }
    }
    Ok(Mnist {
        train_images,
        train_labels,
        test_images,
        test_labels,
    })
}

/// Materializes a range of images as a labeled sequence set.
pub fn mnist_sequences(
    images: &Images,
    labels: &[u8],
    range: std::ops::Range<usize>,
    mode: SeqMode,
    perm: Option<&PermutationSpec>,
    split: Split,
) -> Result<LabeledSequenceSet, DataError> {
    let mut sequences = Vec::with_capacity(range.len());
    let mut targets = Vec::with_capacity(range.len());
    for i in range {
        sequences.push(sequence_view(images.image(i), mode, perm)?);
        targets.push(Target::Class(labels[i] as usize));
    }
    Ok(LabeledSequenceSet {
        sequences,
        targets,
        p: mode.group(),
        split,
    })
}

/// Shuffled index batches for one epoch, derived from (seed, epoch) so every
/// run and thread count sees the same order.
pub fn epoch_batches(n_items: usize, batch_size: usize, seed: u64, epoch: u64) -> Vec<Vec<usize>> {
    let mut indices: Vec<usize> = (0..n_items).collect();
    let mut rng = item_rng(seed, stream::SHUFFLE, epoch);
    for i in (1..n_items).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
    indices
        .chunks(batch_size.max(1))
        .map(|c| c.to_vec())
        .collect()
}

/// Writes a synthetic set as tidy CSV: one row per time step, then the
/// target values keyed by sequence index.
pub fn write_set_csv(set: &LabeledSequenceSet, mut w: impl Write) -> std::io::Result<()> {
    write!(w, "seq,t")?;
    for j in 0..set.p {
        write!(w, ",x{j}")?;
    }
    writeln!(w, ",target")?;
    for (i, (seq, target)) in set.sequences.iter().zip(&set.targets).enumerate() {
        for t in 0..seq.len_t() {
            write!(w, "{i},{t}")?;
            for v in seq.x(t) {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",")?;
        }
        let tgt = match target {
            Target::Class(c) => format!("{c}"),
            Target::Vector(v) => v
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        };
        writeln!(w, "{i},target,,{tgt}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_image() -> Vec<f64> {
        (0..784).map(|i| i as f64 / 784.0).collect()
    }

    #[test]
    fn pixel_mode_shape() {
        let seq = sequence_view(&ramp_image(), SeqMode::Pixel, None).unwrap();
        assert_eq!(seq.len_t(), 784);
        assert_eq!(seq.p, 1);
    }

    #[test]
    fn row8_mode_shape() {
        let seq = sequence_view(&ramp_image(), SeqMode::Row8, None).unwrap();
        assert_eq!(seq.len_t(), 98);
        assert_eq!(seq.p, 8);
    }

    #[test]
    fn row28_mode_shape() {
        let seq = sequence_view(&ramp_image(), SeqMode::Row28, None).unwrap();
        assert_eq!(seq.len_t(), 28);
        assert_eq!(seq.p, 28);
    }

    #[test]
    fn identity_permutation_is_noop() {
        let img = ramp_image();
        let id = PermutationSpec::from_indices(0, (0..98).collect()).unwrap();
        let a = sequence_view(&img, SeqMode::Row8, None).unwrap();
        let b = sequence_view(&img, SeqMode::Row8, Some(&id)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inverse_permutation_recovers_original() {
        let img = ramp_image();
        let perm = PermutationSpec::generate(784, DEFAULT_PERMUTATION_SEED);
        let permuted = sequence_view(&img, SeqMode::Pixel, Some(&perm)).unwrap();
        let recovered = perm.inverse().apply(&permuted);
        let original = sequence_view(&img, SeqMode::Pixel, None).unwrap();
        assert_eq!(recovered, original);
    }

    #[test]
    fn permutation_is_bijection() {
        let perm = PermutationSpec::generate(98, 7);
        let mut seen = vec![false; 98];
        for &i in perm.indices() {
            assert!(!seen[i]);
            seen[i] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn bad_mode_string_rejected() {
        assert!(matches!(
            SeqMode::parse("columns"),
            Err(DataError::BadMode(_))
        ));
    }

    #[test]
    fn noise_pad_extends_and_reproduces() {
        let seq = Sequence::new(2, vec![0.5; 8]);
        let same = noise_pad(&seq, 4, 1).unwrap();
        assert_eq!(same, seq);
        let padded = noise_pad(&seq, 10, 1).unwrap();
        assert_eq!(padded.len_t(), 10);
        assert_eq!(&padded.data[..8], &seq.data[..]);
        let padded2 = noise_pad(&seq, 10, 1).unwrap();
        assert_eq!(padded.data, padded2.data);
        assert!(matches!(
            noise_pad(&seq, 3, 1),
            Err(DataError::PadTooShort { t_total: 3, len: 4 })
        ));
    }

    #[test]
    fn noise_pad_statistics() {
        let seq = Sequence::new(1, vec![]);
        let padded = noise_pad(&seq, 100_000, 2).unwrap();
        let n = padded.data.len() as f64;
        let mean = padded.data.iter().sum::<f64>() / n;
        let var = padded.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.02, "sd {}", var.sqrt());
    }

    #[test]
    fn batches_cover_everything_once() {
        let batches = epoch_batches(10, 3, 5, 0);
        assert_eq!(batches.len(), 4);
        let mut seen = vec![false; 10];
        for b in &batches {
            for &i in b {
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&b| b));
        // Same (seed, epoch) reproduces; different epoch reshuffles.
        assert_eq!(batches, epoch_batches(10, 3, 5, 0));
        assert_ne!(batches, epoch_batches(10, 3, 5, 1));
    }
}
