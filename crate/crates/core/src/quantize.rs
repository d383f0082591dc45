//! Vector-quantization codebook math: nearest-code lookup, VQ training
//! losses with their stop-gradient contracts, EOS-terminated index
//! sequences and next-index cross-entropy.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::par;

/// Commitment weight of the VQ loss.
pub const DEFAULT_BETA_COMMIT: f64 = 0.25;

/// Temporal downsampling between motion frames and motion tokens.
pub const DEFAULT_WINDOW: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookKind {
    #[default]
    Motion,
    Linguistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CodebookFile {
    d_z: usize,
    codes: Vec<Vec<f64>>,
    #[serde(default)]
    kind: CodebookKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodebookFile", into = "CodebookFile")]
pub struct Codebook {
    codes: Vec<Vec<f64>>,
    dim: usize,
    kind: CodebookKind,
}

impl TryFrom<CodebookFile> for Codebook {
    type Error = Error;

    fn try_from(f: CodebookFile) -> Result<Self> {
        let book = Codebook::new(f.codes, f.kind)?;
        if book.dim != f.d_z {
            return Err(Error::Shape(format!(
                "d_z is {} but codes have dimension {}",
                f.d_z, book.dim
            )));
        }
        Ok(book)
    }
}

impl From<Codebook> for CodebookFile {
    fn from(b: Codebook) -> Self {
        CodebookFile {
            d_z: b.dim,
            codes: b.codes,
            kind: b.kind,
        }
    }
}

impl Codebook {
    pub fn new(codes: Vec<Vec<f64>>, kind: CodebookKind) -> Result<Self> {
        let dim = codes.first().ok_or(Error::EmptyCodebook)?.len();
        for (i, c) in codes.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::Shape(format!(
                    "code {i} has dimension {}, expected {dim}",
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Shape(format!("code {i} is not finite")));
            }
        }
        Ok(Codebook { codes, dim, kind })
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn codes(&self) -> &[Vec<f64>] {
        &self.codes
    }

    pub fn code(&self, i: usize) -> Option<&[f64]> {
        self.codes.get(i).map(Vec::as_slice)
    }

    /// Number of codes `I`.
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> CodebookKind {
        self.kind
    }

    /// The end token id, `I`.
    pub fn eos(&self) -> usize {
        self.codes.len()
    }
}

/// Code indices followed by exactly one EOS id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexSequence(pub Vec<usize>);

impl IndexSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Code indices without the EOS, after checking the sequence against a
    /// vocabulary of `size` codes.
    pub fn codes(&self, size: usize) -> Result<&[usize]> {
        let (last, body) = self
            .0
            .split_last()
            .ok_or_else(|| Error::BadSequence("missing EOS".into()))?;
        if *last != size {
            return Err(Error::BadSequence(format!("last id is {last}, EOS is {size}")));
        }
        if let Some(pos) = body.iter().position(|&i| i == size) {
            return Err(Error::BadSequence(format!("EOS at position {pos} before the end")));
        }
        if let Some(&index) = body.iter().find(|&&i| i > size) {
            return Err(Error::BadIndex { index, size });
        }
        Ok(body)
    }
}

fn check_dim(features: &[Vec<f64>], dim: usize) -> Result<()> {
    match features.iter().position(|f| f.len() != dim) {
        Some(i) => Err(Error::Shape(format!(
            "feature {i} has dimension {}, codebook has {dim}",
            features[i].len()
        ))),
        None => Ok(()),
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(book: &Codebook, f: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, c) in book.codes.iter().enumerate() {
        let d = sq_dist(f, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Maps every feature to its nearest code in Euclidean distance, lowest
/// index first on ties.
pub fn quantize_nearest(features: &[Vec<f64>], book: &Codebook) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    if book.is_empty() {
        return Err(Error::EmptyCodebook);
    }
    check_dim(features, book.dim)?;
    let indices = par::map_slice(features, |f| nearest(book, f));
    let quantized = indices.iter().map(|&i| book.codes[i].clone()).collect();
    Ok((quantized, indices))
}

/// Gradients of one loss term with respect to the encoder features and the
/// selected codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermGradient {
    pub features: Vec<Vec<f64>>,
    pub quantized: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqLoss {
    pub total: f64,
    pub recon: f64,
    pub codebook: f64,
    pub commitment: f64,
    /// Gradient of `recon` with respect to the reconstruction.
    pub recon_gradient: Vec<Vec<f64>>,
    /// Moves the codes only; the features are detached.
    pub codebook_gradient: TermGradient,
    /// Moves the features only; the codes are detached.
    pub commitment_gradient: TermGradient,
}

fn same_shape(a: &[Vec<f64>], b: &[Vec<f64>], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("{what}: {} rows vs {}", a.len(), b.len())));
    }
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        if x.len() != y.len() {
            return Err(Error::Shape(format!(
                "{what}: row {i} has {} vs {} entries",
                x.len(),
                y.len()
            )));
        }
    }
    Ok(())
}

fn scaled_diff(a: &[Vec<f64>], b: &[Vec<f64>], s: f64) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| s * (p - q)).collect())
        .collect()
}

fn zeros_like(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter().map(|r| vec![0.0; r.len()]).collect()
}

/// VQ training loss: reconstruction MSE plus `||sg[F] - Fq||^2` and
/// `beta_commit * ||F - sg[Fq]||^2`.
pub fn vq_loss(
    features: &[Vec<f64>],
    quantized: &[Vec<f64>],
    motion: &[Vec<f64>],
    reconstruction: &[Vec<f64>],
    beta_commit: f64,
) -> Result<VqLoss> {
    same_shape(features, quantized, "features vs quantized")?;
    same_shape(motion, reconstruction, "motion vs reconstruction")?;
    if !(beta_commit >= 0.0 && beta_commit.is_finite()) {
        return Err(Error::Config(format!(
            "beta_commit must be nonnegative, got {beta_commit}"
        )));
    }
    let n: usize = motion.iter().map(Vec::len).sum();
    let recon = if n == 0 {
        0.0
    } else {
        motion
            .iter()
            .zip(reconstruction)
            .map(|(a, b)| sq_dist(a, b))
            .sum::<f64>()
            / n as f64
    };
    let sq: f64 = features.iter().zip(quantized).map(|(a, b)| sq_dist(a, b)).sum();
    let codebook = sq;
    let commitment = beta_commit * sq;
    Ok(VqLoss {
        total: recon + codebook + commitment,
        recon,
        codebook,
        commitment,
        recon_gradient: if n == 0 {
            zeros_like(reconstruction)
        } else {
            scaled_diff(reconstruction, motion, 2.0 / n as f64)
        },
        codebook_gradient: TermGradient {
            features: zeros_like(features),
            quantized: scaled_diff(quantized, features, 2.0),
        },
        commitment_gradient: TermGradient {
            features: scaled_diff(features, quantized, 2.0 * beta_commit),
            quantized: zeros_like(quantized),
        },
    })
}

/// Nearest-code indices of `features`, terminated by EOS.
pub fn encode_to_indices(features: &[Vec<f64>], book: &Codebook) -> Result<IndexSequence> {
    let (_, mut indices) = quantize_nearest(features, book)?;
    indices.push(book.eos());
    Ok(IndexSequence(indices))
}

/// Code vectors of `seq` in order, EOS dropped.
pub fn decode_from_indices(seq: &IndexSequence, book: &Codebook) -> Result<Vec<Vec<f64>>> {
    Ok(seq.codes(book.len())?.iter().map(|&i| book.codes[i].clone()).collect())
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::INFINITY {
        return m;
    }
    m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Mean negative log-likelihood of `target` (EOS included) under per-position
/// logits over `I + 1` ids.
pub fn next_index_xent(logits: &[Vec<f64>], target: &IndexSequence) -> Result<f64> {
    if logits.len() != target.len() {
        return Err(Error::Shape(format!(
            "{} logit rows for {} target positions",
            logits.len(),
            target.len()
        )));
    }
    let width = logits
        .first()
        .ok_or_else(|| Error::BadSequence("missing EOS".into()))?
        .len();
    if width < 2 {
        return Err(Error::Shape("logit rows need at least two ids".into()));
    }
    if let Some(i) = logits.iter().position(|r| r.len() != width) {
        return Err(Error::Shape(format!(
            "logit row {i} has {} ids, expected {width}",
            logits[i].len()
        )));
    }
    target.codes(width - 1)?;
    let sum: f64 = logits
        .iter()
        .zip(&target.0)
        .map(|(row, &t)| log_sum_exp(row) - row[t])
        .sum();
    if !sum.is_finite() {
        return Err(Error::Shape("logits are not finite".into()));
    }
    Ok(sum / logits.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn book(codes: &[&[f64]]) -> Codebook {
        Codebook::new(codes.iter().map(|c| c.to_vec()).collect(), CodebookKind::Motion).unwrap()
    }

    #[test]
    fn nearest_examples() {
        let b = book(&[&[0.0, 0.0], &[1.0, 1.0], &[5.0, 5.0], &[2.0, -1.0]]);
        let (q, i) = quantize_nearest(&[vec![2.0, -1.0], vec![0.9, 0.8], vec![0.5, 0.5]], &b).unwrap();
        assert_eq!(i, vec![3, 1, 0]);
        assert_eq!(q[0], vec![2.0, -1.0]);
    }

    #[test]
    fn empty_and_mismatched() {
        assert!(matches!(
            Codebook::new(vec![], CodebookKind::Motion),
            Err(Error::EmptyCodebook)
        ));
        let b = book(&[&[0.0, 0.0]]);
        assert!(matches!(quantize_nearest(&[vec![1.0]], &b), Err(Error::Shape(_))));
        assert!(Codebook::new(vec![vec![0.0], vec![0.0, 1.0]], CodebookKind::Motion).is_err());
    }

    #[test]
    fn vq_loss_values_and_contract() {
        let f = vec![vec![1.0, 2.0], vec![0.0, -1.0]];
        let z = f.clone();
        let l = vq_loss(&f, &z, &f, &f, 0.25).unwrap();
        assert_eq!((l.total, l.recon, l.codebook, l.commitment), (0.0, 0.0, 0.0, 0.0));

        let v = [[0.5, -1.0], [2.0, 0.0]];
        let fq: Vec<Vec<f64>> = f.iter().zip(&v).map(|(a, d)| vec![a[0] + d[0], a[1] + d[1]]).collect();
        let l = vq_loss(&f, &fq, &f, &f, 0.25).unwrap();
        let vv = 0.25 + 1.0 + 4.0;
        assert!((l.codebook - vv).abs() < 1e-12);
        assert!((l.commitment - 0.25 * vv).abs() < 1e-12);
        assert!(l.codebook_gradient.features.iter().flatten().all(|&g| g == 0.0));
        assert!(l.codebook_gradient.quantized.iter().flatten().any(|&g| g != 0.0));
        assert!(l.commitment_gradient.quantized.iter().flatten().all(|&g| g == 0.0));
        assert!(l.commitment_gradient.features.iter().flatten().any(|&g| g != 0.0));
    }

    #[test]
    fn recon_gradient_matches_difference_quotient() {
        let m = vec![vec![1.0, 2.0, 3.0]];
        let r = vec![vec![1.5, 1.0, 3.0]];
        let l = vq_loss(&[], &[], &m, &r, 0.25).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut rp = r.clone();
            rp[0][k] += h;
            let fd = (vq_loss(&[], &[], &m, &rp, 0.25).unwrap().recon - l.recon) / h;
            assert!((fd - l.recon_gradient[0][k]).abs() < 1e-5);
        }
    }

    #[test]
    fn index_sequences() {
        let b = book(&[&[0.0], &[1.0], &[2.0]]);
        let seq = encode_to_indices(&[vec![2.0], vec![0.0], vec![1.0]], &b).unwrap();
        assert_eq!(seq.0, vec![2, 0, 1, 3]);
        assert_eq!(encode_to_indices(&[], &b).unwrap().0, vec![3]);
        assert!(decode_from_indices(&IndexSequence(vec![3]), &b).unwrap().is_empty());
        assert_eq!(
            decode_from_indices(&IndexSequence(vec![2, 3]), &b).unwrap(),
            vec![vec![2.0]]
        );
        assert!(matches!(
            decode_from_indices(&IndexSequence(vec![3, 2]), &b),
            Err(Error::BadSequence(_))
        ));
        assert!(matches!(
            decode_from_indices(&IndexSequence(vec![7, 3]), &b),
            Err(Error::BadIndex { index: 7, size: 3 })
        ));
    }

    #[test]
    fn xent_examples() {
        let target = IndexSequence(vec![1, 0, 8]);
        let uniform = vec![vec![0.3; 9]; 3];
        assert!((next_index_xent(&uniform, &target).unwrap() - 9f64.ln()).abs() < 1e-12);
        let onehot: Vec<Vec<f64>> = target
            .0
            .iter()
            .map(|&t| (0..9).map(|i| if i == t { 100.0 } else { 0.0 }).collect())
            .collect();
        assert!(next_index_xent(&onehot, &target).unwrap() < 1e-40);
        assert!(matches!(next_index_xent(&uniform[..2], &target), Err(Error::Shape(_))));
    }

    #[test]
    fn codebook_file_round_trip() {
        let b = book(&[&[0.0, 1.5], &[-2.0, 3.25]]);
        let json = serde_json::to_string(&b).unwrap();
        assert!(json.contains("\"d_z\":2"));
        let back: Codebook = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<Codebook>(r#"{"d_z":3,"codes":[[1,2]]}"#).is_err());
    }

    fn features_and_book() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        (1usize..6, 1usize..24).prop_flat_map(|(d, i)| {
            let v = move || prop::collection::vec(-3.0f64..3.0, d);
            (prop::collection::vec(v(), 0..20), prop::collection::vec(v(), i))
        })
    }

    proptest! {
        #[test]
        fn quantization_is_idempotent((f, codes) in features_and_book()) {
            let b = Codebook::new(codes, CodebookKind::Motion).unwrap();
            let (q, i) = quantize_nearest(&f, &b).unwrap();
            let (q2, i2) = quantize_nearest(&q, &b).unwrap();
            prop_assert_eq!(&q, &q2);
            for (a, c) in i.iter().zip(&i2) {
                prop_assert!(c <= a);
            }
            let decoded = decode_from_indices(&encode_to_indices(&f, &b).unwrap(), &b).unwrap();
            prop_assert_eq!(decoded, q);
        }

        #[test]
        fn xent_invariant_under_nontarget_permutation(
            logits in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 4),
            seed in 0usize..1000,
        ) {
            let target = IndexSequence(vec![seed % 5, (seed / 5) % 5, (seed / 25) % 5, 5]);
            let base = next_index_xent(&logits, &target).unwrap();
            let permuted: Vec<Vec<f64>> = logits
                .iter()
                .zip(&target.0)
                .map(|(row, &t)| {
                    let mut others: Vec<f64> = row.iter().enumerate().filter(|(i, _)| *i != t).map(|(_, v)| *v).collect();
                    let k = 1 + seed % others.len();
                    others.rotate_left(k);
                    let mut out = others;
                    out.insert(t, row[t]);
                    out
                })
                .collect();
            let v = next_index_xent(&permuted, &target).unwrap();
            prop_assert!((v - base).abs() < 1e-12);
        }
    }
}
