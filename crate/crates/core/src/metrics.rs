//! Evaluation metrics over externally computed feature vectors and joint
//! position sequences: FID, diversity, multimodality, MM-Dist, R- and
//! MR-precision and DTW mean joint error.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::body_model::{FkFrame, MotionSequence, SkeletonModel};
use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::par;

pub const DEFAULT_FEATURE_DIM: usize = 512;
pub const DEFAULT_DIVERSITY_PAIRS: usize = 300;
pub const DEFAULT_MULTIMODALITY_PAIRS: usize = 10;
pub const DEFAULT_R_POOL: usize = 32;
pub const MR_POOL: usize = 16;
pub const DEFAULT_TOP_K: [usize; 3] = [1, 3, 5];

/// Joint names dropped by [`upper_body_indices`].
pub const LOWER_BODY: [&str; 8] = [
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
    "left_foot",
    "right_foot",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureItem {
    pub id: String,
    pub motion: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_id: Option<String>,
    /// Items sharing a group were generated from the same prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub d: usize,
    pub items: Vec<FeatureItem>,
}

impl FeatureSet {
    pub fn new(d: usize, items: Vec<FeatureItem>) -> Result<Self> {
        let set = FeatureSet { d, items };
        set.check()?;
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let set: FeatureSet = read_json(path)?;
        set.check()?;
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn check(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for it in &self.items {
            if !ids.insert(it.id.as_str()) {
                return Err(Error::Shape(format!("duplicate item id {}", it.id)));
            }
            let bad = |v: &[f64]| v.len() != self.d || v.iter().any(|x| !x.is_finite());
            if bad(&it.motion) || it.prompt.as_deref().is_some_and(bad) {
                return Err(Error::Shape(format!(
                    "item {} needs finite features of dimension {}",
                    it.id, self.d
                )));
            }
        }
        Ok(())
    }

    pub fn motions(&self) -> Vec<&[f64]> {
        self.items.iter().map(|i| i.motion.as_slice()).collect()
    }

    /// Motion features by group label, groups in label order.
    pub fn groups(&self) -> Result<Vec<Vec<&[f64]>>> {
        let mut out: BTreeMap<&str, Vec<&[f64]>> = BTreeMap::new();
        for it in &self.items {
            let g = it.group.as_deref().ok_or_else(|| Error::MissingGroup(it.id.clone()))?;
            out.entry(g).or_default().push(&it.motion);
        }
        Ok(out.into_values().collect())
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn same_dim(a: &FeatureSet, b: &FeatureSet) -> Result<()> {
    if a.d != b.d {
        return Err(Error::Shape(format!("feature dimensions {} and {} differ", a.d, b.d)));
    }
    Ok(())
}

/// Sample mean and covariance (normalized by `n - 1`).
pub fn moments(rows: &[&[f64]]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let d = rows[0].len();
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let mean = DVector::from_fn(d, |j, _| x.column(j).sum() / n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n - 1) as f64;
    Ok((mean, cov))
}

/// Square root of a symmetric matrix with negative eigenvalues clamped to 0.
fn sqrt_psd(m: DMatrix<f64>) -> DMatrix<f64> {
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let s = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&s) * eig.eigenvectors.transpose()
}

/// Frechet distance between two Gaussians.
pub fn fid_from_moments(
    mu_r: &DVector<f64>,
    c_r: &DMatrix<f64>,
    mu_g: &DVector<f64>,
    c_g: &DMatrix<f64>,
) -> Result<f64> {
    let d = mu_r.len();
    if mu_g.len() != d || c_r.shape() != (d, d) || c_g.shape() != (d, d) {
        return Err(Error::Shape("mean and covariance dimensions disagree".into()));
    }
    let sr = sqrt_psd(c_r.clone());
    let inner = &sr * c_g * &sr;
    let inner = (&inner + inner.transpose()) * 0.5;
    let tr_sqrt: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let v = (mu_r - mu_g).norm_squared() + c_r.trace() + c_g.trace() - 2.0 * tr_sqrt;
    Ok(v.max(0.0))
}

pub fn fid(real: &FeatureSet, gen: &FeatureSet) -> Result<f64> {
    same_dim(real, gen)?;
    let (mu_r, c_r) = moments(&real.motions())?;
    let (mu_g, c_g) = moments(&gen.motions())?;
    fid_from_moments(&mu_r, &c_r, &mu_g, &c_g)
}

fn distinct_pair(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let j = (i + rng.random_range(1..n)) % n;
    (i, j)
}

/// Mean distance over `pairs` seeded random ordered pairs of distinct items.
pub fn diversity(features: &[&[f64]], pairs: usize, seed: u64) -> Result<f64> {
    let n = features.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if pairs == 0 {
        return Err(Error::Config("diversity needs at least one pair".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sum: f64 = (0..pairs)
        .map(|_| {
            let (i, j) = distinct_pair(&mut rng, n);
            dist(features[i], features[j])
        })
        .sum();
    Ok(sum / pairs as f64)
}

/// Mean over groups of the mean distance of `pairs` seeded pairs drawn
/// within each group.
pub fn multimodality(groups: &[Vec<&[f64]>], pairs: usize, seed: u64) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if pairs == 0 {
        return Err(Error::Config("multimodality needs at least one pair".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for g in groups {
        if g.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: g.len(),
            });
        }
        for _ in 0..pairs {
            let (i, j) = distinct_pair(&mut rng, g.len());
            sum += dist(g[i], g[j]);
        }
    }
    Ok(sum / (groups.len() * pairs) as f64)
}

/// Mean distance between each motion feature and its prompt feature.
pub fn mm_dist(set: &FeatureSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut sum = 0.0;
    for it in &set.items {
        let p = it.prompt.as_ref().ok_or_else(|| Error::MissingPrompt(it.id.clone()))?;
        sum += dist(&it.motion, p);
    }
    Ok(sum / set.len() as f64)
}

fn check_ks(ks: &[usize]) -> Result<()> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Config("top-k values must be positive".into()));
    }
    Ok(())
}

/// 1-based rank of candidate 0 among `candidates` by distance to `query`,
/// ties broken by candidate id.
fn rank_first(query: &[f64], candidates: &[(&str, &[f64])]) -> usize {
    let (id0, f0) = candidates[0];
    let d0 = dist(query, f0);
    1 + candidates[1..]
        .iter()
        .filter(|(id, f)| {
            let d = dist(query, f);
            d < d0 || (d == d0 && *id < id0)
        })
        .count()
}

fn rates(ranks: &[usize], ks: &[usize]) -> BTreeMap<usize, f64> {
    ks.iter()
        .map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64))
        .collect()
}

/// Top-k accuracy of retrieving each item's own prompt among `pool - 1`
/// seeded distractor prompts of other items.
pub fn r_precision(set: &FeatureSet, ks: &[usize], pool: usize, seed: u64) -> Result<BTreeMap<usize, f64>> {
    check_ks(ks)?;
    if pool < 2 {
        return Err(Error::Config("retrieval pool needs at least 2 entries".into()));
    }
    let n = set.len();
    if n < pool {
        return Err(Error::TooFewSamples { needed: pool, got: n });
    }
    let prompts: Vec<&[f64]> = set
        .items
        .iter()
        .map(|it| it.prompt.as_deref().ok_or_else(|| Error::MissingPrompt(it.id.clone())))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pools: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut c = vec![i];
            c.extend(
                sample(&mut rng, n - 1, pool - 1)
                    .iter()
                    .map(|k| if k >= i { k + 1 } else { k }),
            );
            c
        })
        .collect();
    let ranks = par::map_range(n, |i| {
        let cand: Vec<(&str, &[f64])> = pools[i]
            .iter()
            .map(|&k| (set.items[k].id.as_str(), prompts[k]))
            .collect();
        rank_first(&set.items[i].motion, &cand)
    });
    Ok(rates(&ranks, ks))
}

/// Top-k accuracy of retrieving each generated item's positive dataset
/// motion among `MR_POOL - 1` seeded negatives.
pub fn mr_precision(
    gen: &FeatureSet,
    dataset: &FeatureSet,
    ks: &[usize],
    pool: usize,
    seed: u64,
) -> Result<BTreeMap<usize, f64>> {
    check_ks(ks)?;
    same_dim(gen, dataset)?;
    if pool < 2 {
        return Err(Error::Config("retrieval pool needs at least 2 entries".into()));
    }
    let m = dataset.len();
    if m < pool {
        return Err(Error::TooFewSamples { needed: pool, got: m });
    }
    if gen.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let index: HashMap<&str, usize> = dataset
        .items
        .iter()
        .enumerate()
        .map(|(i, it)| (it.id.as_str(), i))
        .collect();
    let positives: Vec<usize> = gen
        .items
        .iter()
        .map(|it| {
            it.positive_id
                .as_deref()
                .and_then(|p| index.get(p).copied())
                .ok_or_else(|| Error::MissingPositive(it.id.clone()))
        })
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pools: Vec<Vec<usize>> = positives
        .iter()
        .map(|&p| {
            let mut c = vec![p];
            c.extend(
                sample(&mut rng, m - 1, pool - 1)
                    .iter()
                    .map(|k| if k >= p { k + 1 } else { k }),
            );
            c
        })
        .collect();
    let ranks = par::map_range(gen.len(), |i| {
        let cand: Vec<(&str, &[f64])> = pools[i]
            .iter()
            .map(|&k| (dataset.items[k].id.as_str(), dataset.items[k].motion.as_slice()))
            .collect();
        rank_first(&gen.items[i].motion, &cand)
    });
    Ok(rates(&ranks, ks))
}

/// Joint positions over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSequence {
    pub fps: f64,
    #[serde(default)]
    pub joints: Vec<String>,
    pub frames: Vec<Vec<[f64; 3]>>,
}

impl JointSequence {
    pub fn load(path: &Path) -> Result<Self> {
        let seq: JointSequence = read_json(path)?;
        seq.check()?;
        Ok(seq)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn joint_count(&self) -> usize {
        self.frames.first().map_or(self.joints.len(), Vec::len)
    }

    pub fn check(&self) -> Result<()> {
        let j = self.joint_count();
        if let Some(t) = self.frames.iter().position(|f| f.len() != j) {
            return Err(Error::Shape(format!(
                "frame {t} has {} joints, expected {j}",
                self.frames[t].len()
            )));
        }
        if !self.joints.is_empty() && self.joints.len() != j {
            return Err(Error::Shape(format!(
                "{} joint names for {j} joints",
                self.joints.len()
            )));
        }
        Ok(())
    }

    /// World joint positions of a fitted motion.
    pub fn from_motion(model: &SkeletonModel, motion: &MotionSequence) -> Result<Self> {
        motion.check(model)?;
        let frames = motion
            .frames
            .iter()
            .map(|s| {
                let fk = FkFrame::compute(model, s, &motion.shape, false)?;
                Ok(fk.positions.iter().map(|p| [p.x, p.y, p.z]).collect())
            })
            .collect::<Result<_>>()?;
        Ok(JointSequence {
            fps: motion.fps,
            joints: model.joints.iter().map(|j| j.name.clone()).collect(),
            frames,
        })
    }
}

/// Indices of every joint whose name is not in [`LOWER_BODY`].
pub fn upper_body_indices(names: &[String]) -> Vec<usize> {
    (0..names.len())
        .filter(|&i| !LOWER_BODY.contains(&names[i].as_str()))
        .collect()
}

/// Keeps the joints in `subset`, in that order.
pub fn strip_lower_body(seq: &JointSequence, subset: &[usize]) -> Result<JointSequence> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let size = seq.joint_count();
    if let Some(&index) = subset.iter().find(|&&i| i >= size) {
        return Err(Error::BadIndex { index, size });
    }
    Ok(JointSequence {
        fps: seq.fps,
        joints: if seq.joints.is_empty() {
            Vec::new()
        } else {
            subset.iter().map(|&i| seq.joints[i].clone()).collect()
        },
        frames: seq
            .frames
            .iter()
            .map(|f| subset.iter().map(|&i| f[i]).collect())
            .collect(),
    })
}

fn frame_cost(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
        .sum::<f64>()
        / a.len() as f64
}

/// DTW over frames with the mean per-joint Euclidean error as the cell cost,
/// divided by the number of cells on the optimal path. Among equally cheap
/// paths the shortest is used.
pub fn dtw_mje(reference: &JointSequence, hyp: &JointSequence) -> Result<f64> {
    reference.check()?;
    hyp.check()?;
    let (n, m) = (reference.frames.len(), hyp.frames.len());
    if n == 0 || m == 0 {
        return Err(Error::EmptySequence);
    }
    let j = reference.joint_count();
    if j != hyp.joint_count() {
        return Err(Error::Shape(format!(
            "joint counts {j} and {} differ",
            hyp.joint_count()
        )));
    }
    if j == 0 {
        return Err(Error::EmptySubset);
    }
    let cost: Vec<Vec<f64>> = par::map_range(n, |i| {
        hyp.frames.iter().map(|h| frame_cost(&reference.frames[i], h)).collect()
    });
    // (accumulated cost, path length)
    let mut acc = vec![vec![(f64::INFINITY, 0usize); m]; n];
    for i in 0..n {
        for k in 0..m {
            let best = if i == 0 && k == 0 {
                (0.0, 0)
            } else {
                let mut best = (f64::INFINITY, usize::MAX);
                let preds = [
                    (i > 0 && k > 0).then(|| acc[i - 1][k - 1]),
                    (i > 0).then(|| acc[i - 1][k]),
                    (k > 0).then(|| acc[i][k - 1]),
                ];
                for p in preds.into_iter().flatten() {
                    if p.0 < best.0 || (p.0 == best.0 && p.1 < best.1) {
                        best = p;
                    }
                }
                best
            };
            acc[i][k] = (cost[i][k] + best.0, best.1 + 1);
        }
    }
    let (total, len) = acc[n - 1][m - 1];
    Ok(total / len as f64)
}
