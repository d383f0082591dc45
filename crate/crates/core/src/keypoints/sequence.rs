use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::body_model::{SkeletonModel, BODY_JOINTS};
use crate::error::{Error, Result};
use crate::io::{self, io_err};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Body,
    LeftHand,
    RightHand,
    Face,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::Body, Group::LeftHand, Group::RightHand, Group::Face];

    pub fn name(self) -> &'static str {
        match self {
            Group::Body => "body",
            Group::LeftHand => "left_hand",
            Group::RightHand => "right_hand",
            Group::Face => "face",
        }
    }

    pub fn is_hand(self) -> bool {
        matches!(self, Group::LeftHand | Group::RightHand)
    }
}

/// Pixel position plus detection confidence. Serialized as `[u, v, c]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Keypoint {
    pub u: f64,
    pub v: f64,
    pub conf: f64,
}

impl From<[f64; 3]> for Keypoint {
    fn from(a: [f64; 3]) -> Self {
        Keypoint {
            u: a[0],
            v: a[1],
            conf: a[2],
        }
    }
}

impl From<Keypoint> for [f64; 3] {
    fn from(k: Keypoint) -> Self {
        [k.u, k.v, k.conf]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KeypointFrame {
    #[serde(rename = "frame")]
    pub frame_index: i64,
    #[serde(default)]
    pub body: Vec<Keypoint>,
    #[serde(default)]
    pub left_hand: Vec<Keypoint>,
    #[serde(default)]
    pub right_hand: Vec<Keypoint>,
    #[serde(default)]
    pub face: Vec<Keypoint>,
}

impl KeypointFrame {
    pub fn group(&self, g: Group) -> &[Keypoint] {
        match g {
            Group::Body => &self.body,
            Group::LeftHand => &self.left_hand,
            Group::RightHand => &self.right_hand,
            Group::Face => &self.face,
        }
    }

    pub fn group_mut(&mut self, g: Group) -> &mut Vec<Keypoint> {
        match g {
            Group::Body => &mut self.body,
            Group::LeftHand => &mut self.left_hand,
            Group::RightHand => &mut self.right_hand,
            Group::Face => &mut self.face,
        }
    }

    fn sizes(&self) -> [usize; 4] {
        Group::ALL.map(|g| self.group(g).len())
    }
}

/// Joint name per keypoint slot; `null` slots are ignored by the fit.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupLayout {
    pub body: Vec<Option<String>>,
    pub left_hand: Vec<Option<String>>,
    pub right_hand: Vec<Option<String>>,
    pub face: Vec<Option<String>>,
}

/// Slot-to-joint index map resolved against a skeleton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedLayout {
    pub groups: [Vec<Option<usize>>; 4],
}

impl GroupLayout {
    pub fn group(&self, g: Group) -> &[Option<String>] {
        match g {
            Group::Body => &self.body,
            Group::LeftHand => &self.left_hand,
            Group::RightHand => &self.right_hand,
            Group::Face => &self.face,
        }
    }

    pub fn sizes(&self) -> [usize; 4] {
        Group::ALL.map(|g| self.group(g).len())
    }

    /// Layout matching the built-in skeleton: all body joints, 21 points
    /// per hand (wrist, then thumb, index, middle, ring, little finger from
    /// base to tip) and three face landmarks.
    pub fn holistic() -> Self {
        let some = |s: String| Some(s);
        let hand = |side: &str| {
            let mut v = vec![some(format!("{side}_wrist"))];
            for f in ["thumb", "index", "middle", "ring", "pinky"] {
                for k in 1..=3 {
                    v.push(some(format!("{side}_{f}{k}")));
                }
                v.push(some(format!("{side}_{f}_tip")));
            }
            v
        };
        GroupLayout {
            body: BODY_JOINTS.iter().map(|n| some(n.to_string())).collect(),
            left_hand: hand("left"),
            right_hand: hand("right"),
            face: ["chin", "left_eye", "right_eye"]
                .iter()
                .map(|n| some(n.to_string()))
                .collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        io::read_json(path.as_ref())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        io::write_json(path.as_ref(), self)
    }

    pub fn resolve(&self, model: &SkeletonModel) -> Result<ResolvedLayout> {
        let resolve_group = |g: Group| -> Result<Vec<Option<usize>>> {
            self.group(g)
                .iter()
                .map(|name| match name {
                    None => Ok(None),
                    Some(n) => model
                        .joint_index(n)
                        .map(Some)
                        .ok_or_else(|| Error::Layout(format!("{} slot names unknown joint {n}", g.name()))),
                })
                .collect()
        };
        Ok(ResolvedLayout {
            groups: [
                resolve_group(Group::Body)?,
                resolve_group(Group::LeftHand)?,
                resolve_group(Group::RightHand)?,
                resolve_group(Group::Face)?,
            ],
        })
    }
}

impl ResolvedLayout {
    pub fn group(&self, g: Group) -> &[Option<usize>] {
        &self.groups[g as usize]
    }

    /// `(group, slot, joint)` for every mapped slot.
    pub fn mapped(&self) -> impl Iterator<Item = (Group, usize, usize)> + '_ {
        Group::ALL.into_iter().flat_map(move |g| {
            self.group(g)
                .iter()
                .enumerate()
                .filter_map(move |(s, j)| j.map(|j| (g, s, j)))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeypointSequence {
    pub source_name: String,
    pub frames: Vec<KeypointFrame>,
    pub layout: GroupLayout,
}

impl KeypointSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Empty-or-consistent group sizes matching the layout.
    pub fn check(&self) -> Result<()> {
        let expected = self.layout.sizes();
        for f in &self.frames {
            if f.sizes() != expected {
                return Err(Error::Layout(format!(
                    "frame {} has group sizes {:?}, layout expects {:?}",
                    f.frame_index,
                    f.sizes(),
                    expected
                )));
            }
        }
        if self.frames.windows(2).any(|w| w[0].frame_index >= w[1].frame_index) {
            return Err(Error::Layout("frame indices are not strictly increasing".into()));
        }
        Ok(())
    }
}

fn check_point(k: &Keypoint, line: usize, group: Group) -> Result<()> {
    if !(k.u.is_finite() && k.v.is_finite()) {
        return Err(Error::Parse {
            line,
            message: format!("non-finite coordinate in {}", group.name()),
        });
    }
    if !(0.0..=1.0).contains(&k.conf) {
        return Err(Error::Parse {
            line,
            message: format!("confidence {} out of [0, 1] in {}", k.conf, group.name()),
        });
    }
    Ok(())
}

/// Parses line-delimited keypoint JSON. Blank lines are skipped; frames are
/// sorted by index.
pub fn parse_keypoints_str(text: &str, source_name: &str, layout: GroupLayout) -> Result<KeypointSequence> {
    let mut frames: Vec<KeypointFrame> = Vec::new();
    let expected = layout.sizes();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let frame: KeypointFrame = serde_json::from_str(raw).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        for g in Group::ALL {
            for k in frame.group(g) {
                check_point(k, line, g)?;
            }
        }
        if frame.sizes() != expected {
            return Err(Error::Layout(format!(
                "line {line}: group sizes {:?} differ from layout {:?}",
                frame.sizes(),
                expected
            )));
        }
        frames.push(frame);
    }
    if frames.windows(2).any(|w| w[0].frame_index > w[1].frame_index) {
        log::warn!("{source_name}: frames out of order, re-sorting");
        frames.sort_by_key(|f| f.frame_index);
    }
    if let Some(w) = frames.windows(2).find(|w| w[0].frame_index == w[1].frame_index) {
        return Err(Error::Parse {
            line: 0,
            message: format!("duplicate frame index {}", w[0].frame_index),
        });
    }
    Ok(KeypointSequence {
        source_name: source_name.to_string(),
        frames,
        layout,
    })
}

pub fn parse_keypoints(path: impl AsRef<Path>, layout: GroupLayout) -> Result<KeypointSequence> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_keypoints_str(&text, &name, layout)
}

pub fn write_keypoints(seq: &KeypointSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for f in &seq.frames {
        out.push_str(&serde_json::to_string(f).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?);
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}
