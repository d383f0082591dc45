use super::sequence::{Group, Keypoint, KeypointSequence};
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.3;

/// Winner-take-all fusion: every slot takes the most confident source
/// sample; winners below `threshold` are marked missing (confidence 0).
/// Ties go to the earlier source.
pub fn fuse_confidence_guided(sources: &[KeypointSequence], threshold: f64) -> Result<KeypointSequence> {
    let first = sources
        .first()
        .ok_or_else(|| Error::Layout("no keypoint sources to fuse".into()))?;
    for s in sources {
        s.check()?;
        if s.layout != first.layout {
            return Err(Error::Layout(format!(
                "source {} has a different group layout than {}",
                s.source_name, first.source_name
            )));
        }
        let same_frames = s.frames.len() == first.frames.len()
            && s.frames
                .iter()
                .zip(&first.frames)
                .all(|(a, b)| a.frame_index == b.frame_index);
        if !same_frames {
            return Err(Error::Layout(format!(
                "source {} covers different frames than {}",
                s.source_name, first.source_name
            )));
        }
    }
    let mut fused = first.clone();
    fused.source_name = "fused".to_string();
    for (t, frame) in fused.frames.iter_mut().enumerate() {
        for g in Group::ALL {
            for (slot, out) in frame.group_mut(g).iter_mut().enumerate() {
                let mut best = sources[0].frames[t].group(g)[slot];
                for s in &sources[1..] {
                    let k = s.frames[t].group(g)[slot];
                    if k.conf > best.conf {
                        best = k;
                    }
                }
                if best.conf < threshold {
                    best.conf = 0.0;
                }
                *out = best;
            }
        }
    }
    Ok(fused)
}

/// Makes every track dense: gaps are linearly interpolated in frame index,
/// leading/trailing gaps hold the nearest observation. Filled entries keep
/// confidence 0 so they carry no weight.
pub fn fill_missing(seq: &KeypointSequence) -> KeypointSequence {
    let mut out = seq.clone();
    let times: Vec<f64> = seq.frames.iter().map(|f| f.frame_index as f64).collect();
    for g in Group::ALL {
        let slots = seq.frames.first().map_or(0, |f| f.group(g).len());
        for slot in 0..slots {
            let observed: Vec<usize> = (0..seq.frames.len())
                .filter(|&t| seq.frames[t].group(g)[slot].conf > 0.0)
                .collect();
            for t in 0..seq.frames.len() {
                let k = seq.frames[t].group(g)[slot];
                if k.conf > 0.0 {
                    continue;
                }
                let filled = match observed.binary_search(&t) {
                    Ok(_) => unreachable!(),
                    Err(pos) => {
                        let before = pos.checked_sub(1).map(|i| observed[i]);
                        let after = observed.get(pos).copied();
                        let at = |i: usize| seq.frames[i].group(g)[slot];
                        match (before, after) {
                            (Some(a), Some(b)) => {
                                let w = (times[t] - times[a]) / (times[b] - times[a]);
                                let (ka, kb) = (at(a), at(b));
                                Keypoint {
                                    u: ka.u + w * (kb.u - ka.u),
                                    v: ka.v + w * (kb.v - ka.v),
                                    conf: 0.0,
                                }
                            }
                            (Some(a), None) | (None, Some(a)) => Keypoint { conf: 0.0, ..at(a) },
                            (None, None) => Keypoint::default(),
                        }
                    }
                };
                out.frames[t].group_mut(g)[slot] = filled;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoints::{GroupLayout, KeypointFrame};
    use proptest::prelude::*;

    fn seq(name: &str, pts: &[Vec<[f64; 3]>]) -> KeypointSequence {
        let n = pts[0].len();
        KeypointSequence {
            source_name: name.into(),
            frames: pts
                .iter()
                .enumerate()
                .map(|(t, p)| KeypointFrame {
                    frame_index: t as i64,
                    body: p.iter().map(|&a| a.into()).collect(),
                    ..Default::default()
                })
                .collect(),
            layout: GroupLayout {
                body: vec![None; n],
                ..Default::default()
            },
        }
    }

    #[test]
    fn max_confidence_wins() {
        let a = seq("a", &[vec![[10.0, 10.0, 0.9]]]);
        let b = seq("b", &[vec![[50.0, 50.0, 0.2]]]);
        let f = fuse_confidence_guided(&[a, b], 0.3).unwrap();
        assert_eq!(
            f.frames[0].body[0],
            Keypoint {
                u: 10.0,
                v: 10.0,
                conf: 0.9
            }
        );
        assert_eq!(f.source_name, "fused");
    }

    #[test]
    fn below_threshold_is_missing() {
        let a = seq("a", &[vec![[10.0, 10.0, 0.1]]]);
        let b = seq("b", &[vec![[50.0, 50.0, 0.1]]]);
        let f = fuse_confidence_guided(&[a, b], 0.3).unwrap();
        assert_eq!(f.frames[0].body[0].conf, 0.0);
    }

    #[test]
    fn single_source_thresholded_copy() {
        let a = seq("a", &[vec![[1.0, 2.0, 0.8], [3.0, 4.0, 0.2]]]);
        let f = fuse_confidence_guided(std::slice::from_ref(&a), 0.3).unwrap();
        assert_eq!(f.frames[0].body[0], a.frames[0].body[0]);
        assert_eq!(f.frames[0].body[1].conf, 0.0);
        assert_eq!(f.frames[0].body[1].u, 3.0);
    }

    #[test]
    fn mismatched_layouts() {
        let a = seq("a", &[vec![[1.0, 2.0, 0.8]]]);
        let b = seq("b", &[vec![[1.0, 2.0, 0.8], [1.0, 2.0, 0.8]]]);
        assert!(matches!(fuse_confidence_guided(&[a, b], 0.3), Err(Error::Layout(_))));
    }

    #[test]
    fn interpolates_gap() {
        let s = seq(
            "a",
            &[vec![[0.0, 0.0, 1.0]], vec![[9.0, 9.0, 0.0]], vec![[4.0, 8.0, 1.0]]],
        );
        let f = fill_missing(&s);
        assert_eq!(
            f.frames[1].body[0],
            Keypoint {
                u: 2.0,
                v: 4.0,
                conf: 0.0
            }
        );
    }

    #[test]
    fn edges_hold_and_unobserved_zero() {
        let s = seq(
            "a",
            &[
                vec![[9.0, 9.0, 0.0], [5.0, 5.0, 0.0]],
                vec![[1.0, 2.0, 0.5], [5.0, 5.0, 0.0]],
                vec![[9.0, 9.0, 0.0], [5.0, 5.0, 0.0]],
            ],
        );
        let f = fill_missing(&s);
        assert_eq!(
            f.frames[0].body[0],
            Keypoint {
                u: 1.0,
                v: 2.0,
                conf: 0.0
            }
        );
        assert_eq!(
            f.frames[2].body[0],
            Keypoint {
                u: 1.0,
                v: 2.0,
                conf: 0.0
            }
        );
        assert!(f.frames.iter().all(|fr| fr.body[1] == Keypoint::default()));
    }

    #[test]
    fn fully_observed_unchanged() {
        let s = seq("a", &[vec![[0.0, 1.0, 1.0]], vec![[2.0, 3.0, 0.4]]]);
        assert_eq!(fill_missing(&s), s);
    }

    fn arb_sources() -> impl Strategy<Value = Vec<KeypointSequence>> {
        (1usize..4, 1usize..5, 1usize..4).prop_flat_map(|(n_src, n_frames, n_pts)| {
            let point = (0.0..100.0f64, 0.0..100.0f64, 0.0..=1.0f64).prop_map(|(u, v, c)| [u, v, c]);
            prop::collection::vec(
                prop::collection::vec(prop::collection::vec(point, n_pts), n_frames),
                n_src,
            )
            .prop_map(|srcs| srcs.iter().enumerate().map(|(i, p)| seq(&format!("s{i}"), p)).collect())
        })
    }

    proptest! {
        #[test]
        fn fusion_idempotent_and_max(sources in arb_sources(), threshold in 0.0..1.0f64) {
            let fused = fuse_confidence_guided(&sources, threshold).unwrap();
            let again = fuse_confidence_guided(std::slice::from_ref(&fused), threshold).unwrap();
            prop_assert_eq!(&again.frames, &fused.frames);
            for (t, frame) in fused.frames.iter().enumerate() {
                for (slot, k) in frame.body.iter().enumerate() {
                    let best = sources.iter().map(|s| s.frames[t].body[slot].conf).fold(0.0, f64::max);
                    let expect = if best < threshold { 0.0 } else { best };
                    prop_assert_eq!(k.conf, expect);
                }
            }
        }

        #[test]
        fn filling_keeps_observed(sources in arb_sources()) {
            let s = &sources[0];
            let f = fill_missing(s);
            for (a, b) in s.frames.iter().zip(&f.frames) {
                for (x, y) in a.body.iter().zip(&b.body) {
                    if x.conf > 0.0 {
                        prop_assert_eq!(x, y);
                    } else {
                        prop_assert_eq!(y.conf, 0.0);
                    }
                }
            }
        }
    }
}
