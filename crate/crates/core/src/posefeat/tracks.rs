use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ten upper-body parts tracked per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyPart {
    Head,
    Torso,
    RShoulder,
    LShoulder,
    RElbow,
    LElbow,
    RWrist,
    LWrist,
    RHand,
    LHand,
}

impl BodyPart {
    pub const COUNT: usize = 10;

    pub const ALL: [BodyPart; 10] = [
        BodyPart::Head,
        BodyPart::Torso,
        BodyPart::RShoulder,
        BodyPart::LShoulder,
        BodyPart::RElbow,
        BodyPart::LElbow,
        BodyPart::RWrist,
        BodyPart::LWrist,
        BodyPart::RHand,
        BodyPart::LHand,
    ];

    /// Arm joints in (shoulder, elbow, wrist, hand) order for the right then left side.
    pub const ARM: [BodyPart; 8] = [
        BodyPart::RShoulder,
        BodyPart::RElbow,
        BodyPart::RWrist,
        BodyPart::RHand,
        BodyPart::LShoulder,
        BodyPart::LElbow,
        BodyPart::LWrist,
        BodyPart::LHand,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            BodyPart::Head => "head",
            BodyPart::Torso => "torso",
            BodyPart::RShoulder => "r_shoulder",
            BodyPart::LShoulder => "l_shoulder",
            BodyPart::RElbow => "r_elbow",
            BodyPart::LElbow => "l_elbow",
            BodyPart::RWrist => "r_wrist",
            BodyPart::LWrist => "l_wrist",
            BodyPart::RHand => "r_hand",
            BodyPart::LHand => "l_hand",
        }
    }
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BodyPart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BodyPart::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Format(format!("unknown body part `{s}`")))
    }
}

pub type Point = (f64, f64);

/// Per-part pixel trajectories over a contiguous frame range.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrackSet {
    first_frame: i64,
    positions: Vec<Vec<Point>>,
}

impl JointTrackSet {
    /// `positions[part][k]` is the position of `part` at frame `first_frame + k`.
    pub fn new(first_frame: i64, positions: Vec<Vec<Point>>) -> Result<Self> {
        if positions.len() != BodyPart::COUNT {
            return Err(Error::DimensionMismatch {
                expected: BodyPart::COUNT,
                got: positions.len(),
            });
        }
        let len = positions[0].len();
        if len == 0 {
            return Err(Error::Format("joint tracks cover no frames".into()));
        }
        for p in &positions {
            crate::error::ensure_dim(len, p.len())?;
            if p.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                return Err(Error::NonFinite("joint positions".into()));
            }
        }
        Ok(Self { first_frame, positions })
    }

    pub fn first_frame(&self) -> i64 {
        self.first_frame
    }

    pub fn last_frame(&self) -> i64 {
        self.first_frame + self.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.positions[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn track(&self, part: BodyPart) -> &[Point] {
        &self.positions[part.index()]
    }

    /// Slice of `part` over the window `[center - length/2, center - length/2 + length)`.
    pub fn window(&self, part: BodyPart, center_frame: i64, length: usize) -> Result<&[Point]> {
        let start = center_frame - (length / 2) as i64;
        let end = start + length as i64;
        if start < self.first_frame || end > self.last_frame() + 1 || length == 0 {
            return Err(Error::WindowOutOfRange {
                start,
                end,
                first: self.first_frame,
                last: self.last_frame(),
            });
        }
        let lo = (start - self.first_frame) as usize;
        Ok(&self.positions[part.index()][lo..lo + length])
    }

    /// Whether the window of `length` centered on `center_frame` fits.
    pub fn window_fits(&self, center_frame: i64, length: usize) -> bool {
        let start = center_frame - (length / 2) as i64;
        start >= self.first_frame && start + length as i64 <= self.last_frame() + 1
    }

    /// Applies `f` to every position.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Self {
        Self {
            first_frame: self.first_frame,
            positions: self
                .positions
                .iter()
                .map(|t| t.iter().map(|&p| f(p)).collect())
                .collect(),
        }
    }

    /// Reads `frame,part,x,y` rows; every part needs every frame of the covered range.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut rows: Vec<(i64, BodyPart, f64, f64)> = Vec::new();
        for (k, rec) in reader.records().enumerate() {
            let rec = rec?;
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: k + 2,
                msg,
            };
            if rec.len() != 4 {
                return Err(parse_err("expected `frame,part,x,y`".into()));
            }
            let frame: i64 = rec[0].trim().parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?;
            let part: BodyPart = rec[1].parse().map_err(|e: Error| parse_err(e.to_string()))?;
            let x: f64 = rec[2].trim().parse().map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
            let y: f64 = rec[3].trim().parse().map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
            rows.push((frame, part, x, y));
        }
        let first = rows.iter().map(|r| r.0).min().ok_or_else(|| Error::Format("empty track file".into()))?;
        let last = rows.iter().map(|r| r.0).max().unwrap_or(first);
        let len = (last - first + 1) as usize;
        let mut pos: Vec<Vec<Option<Point>>> = vec![vec![None; len]; BodyPart::COUNT];
        for (frame, part, x, y) in rows {
            pos[part.index()][(frame - first) as usize] = Some((x, y));
        }
        let mut positions = Vec::with_capacity(BodyPart::COUNT);
        for (p, track) in pos.into_iter().enumerate() {
            let filled: Option<Vec<Point>> = track.into_iter().collect();
            positions.push(filled.ok_or_else(|| {
                Error::Format(format!("part `{}` is missing frames in {}", BodyPart::ALL[p], path.display()))
            })?);
        }
        Self::new(first, positions)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,part,x,y\n");
        for k in 0..self.len() {
            for part in BodyPart::ALL {
                let (x, y) = self.positions[part.index()][k];
                out.push_str(&format!("{},{},{},{}\n", self.first_frame + k as i64, part, x, y));
            }
        }
        out
    }
}
