//! Anatomical landmark vocabulary and landmark sets.
//!
//! The vocabulary is the fixed set of 23 fetal-face landmarks used throughout
//! the pipeline. The first 19 (everything except the four ear landmarks,
//! which are rarely visible in utero) form the shape-model subset.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the 23 named facial landmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LandmarkName {
    /// exocanthion right
    ExR,
    /// exocanthion left
    ExL,
    /// endocanthion right
    EnR,
    /// endocanthion left
    EnL,
    /// nasion
    N,
    /// alare right
    AR,
    /// alare left
    AL,
    /// alar crest right
    AcR,
    /// alar crest left
    AcL,
    /// pronasale
    Prn,
    /// subnasale
    Sn,
    /// cheilion right
    ChR,
    /// cheilion left
    ChL,
    /// crista philtrum right
    CphR,
    /// crista philtrum left
    CphL,
    /// labiale superius
    Ls,
    /// labiale inferius
    Li,
    /// sublabiale
    Sl,
    /// pogonion
    Pg,
    /// tragion right
    TR,
    /// tragion left
    TL,
    /// otobasion inferius right
    OiR,
    /// otobasion inferius left
    OiL,
}

use LandmarkName::*;

/// All 23 landmark names, in canonical order.
pub const ALL_NAMES: [LandmarkName; 23] = [
    ExR, ExL, EnR, EnL, N, AR, AL, AcR, AcL, Prn, Sn, ChR, ChL, CphR, CphL, Ls, Li, Sl, Pg, TR,
    TL, OiR, OiL,
];

/// The 19 landmarks retained by the face shape model (ears excluded).
pub const MODEL_NAMES: [LandmarkName; 19] = [
    ExR, ExL, EnR, EnL, N, AR, AL, AcR, AcL, Prn, Sn, ChR, ChL, CphR, CphL, Ls, Li, Sl, Pg,
];

impl LandmarkName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExR => "exR",
            ExL => "exL",
            EnR => "enR",
            EnL => "enL",
            N => "n",
            AR => "aR",
            AL => "aL",
            AcR => "acR",
            AcL => "acL",
            Prn => "prn",
            Sn => "sn",
            ChR => "chR",
            ChL => "chL",
            CphR => "cphR",
            CphL => "cphL",
            Ls => "ls",
            Li => "li",
            Sl => "sl",
            Pg => "pg",
            TR => "tR",
            TL => "tL",
            OiR => "oiR",
            OiL => "oiL",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ALL_NAMES
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownLandmark {
                name: s.to_string(),
            })
    }
}

impl std::fmt::Display for LandmarkName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single named landmark. A landmark is visible exactly when it carries a
/// position; positions are millimeters in the volume's physical frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    pub name: LandmarkName,
    pub position: Option<Vector3<f64>>,
}

impl Landmark {
    pub fn visible(&self) -> bool {
        self.position.is_some()
    }
}

/// Ordered set of uniquely named landmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    entries: Vec<Landmark>,
}

impl LandmarkSet {
    /// Set over the full 23-name vocabulary, all invisible.
    pub fn empty_full() -> Self {
        LandmarkSet {
            entries: ALL_NAMES
                .iter()
                .map(|&name| Landmark {
                    name,
                    position: None,
                })
                .collect(),
        }
    }

    /// Builds a set from explicit entries. Names must be unique and visible
    /// positions finite.
    pub fn new(entries: Vec<Landmark>) -> Result<Self> {
        for (i, a) in entries.iter().enumerate() {
            if entries[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate landmark {}",
                    a.name
                )));
            }
            if let Some(p) = a.position {
                if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite position for visible landmark {}",
                        a.name
                    )));
                }
            }
        }
        Ok(LandmarkSet { entries })
    }

    pub fn entries(&self) -> &[Landmark] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: LandmarkName) -> Option<&Landmark> {
        self.entries.iter().find(|l| l.name == name)
    }

    pub fn position(&self, name: LandmarkName) -> Option<Vector3<f64>> {
        self.get(name).and_then(|l| l.position)
    }

    /// Sets a landmark position (marking it visible), adding the entry if the
    /// name is not present yet.
    pub fn set_position(&mut self, name: LandmarkName, position: Vector3<f64>) {
        match self.entries.iter_mut().find(|l| l.name == name) {
            Some(l) => l.position = Some(position),
            None => self.entries.push(Landmark {
                name,
                position: Some(position),
            }),
        }
    }

    /// Marks a landmark invisible, dropping its position.
    pub fn hide(&mut self, name: LandmarkName) {
        if let Some(l) = self.entries.iter_mut().find(|l| l.name == name) {
            l.position = None;
        }
    }

    pub fn visible_count(&self) -> usize {
        self.entries.iter().filter(|l| l.visible()).count()
    }

    /// Visible (name, position) pairs in set order.
    pub fn visible(&self) -> impl Iterator<Item = (LandmarkName, Vector3<f64>)> + '_ {
        self.entries
            .iter()
            .filter_map(|l| l.position.map(|p| (l.name, p)))
    }

    /// Applies `f` to every visible position, leaving invisibles untouched.
    pub fn map_positions(&self, mut f: impl FnMut(Vector3<f64>) -> Vector3<f64>) -> LandmarkSet {
        LandmarkSet {
            entries: self
                .entries
                .iter()
                .map(|l| Landmark {
                    name: l.name,
                    position: l.position.map(&mut f),
                })
                .collect(),
        }
    }
}
