//! Corridor input data: stations with sampled ground profiles, the intersection
//! point boxes, and the design parameters of the inner problem.
//!
//! A station is a cross-section line through its base data point. Its extreme
//! offset data points `U` (leftmost, minimum offset) and `V` (rightmost,
//! maximum offset) bound the corridor at that station. A path position on the
//! cross-section is described by the line parameter `t`, with `t = 0` at `U`
//! and `t = 1` at `V`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Alignment;
use crate::point::{distance_to_line, Point};
use crate::valign::VAlignConfig;

/// Station spacing above which section-based earthwork loses accuracy.
pub const MAX_RECOMMENDED_SPACING: f64 = 30.0;

const COLLINEAR_TOL: f64 = 1e-9;
const OFFSET_MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TerrainError {
    #[error("corridor parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("station {station}: {reason}")]
    Station { station: usize, reason: String },
    #[error("field `{field}`: {reason}")]
    Field { field: String, reason: String },
    #[error("cross-section parameter t = {t} is outside the corridor [0, 1]")]
    OutOfCorridor { t: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundSample {
    /// Signed lateral offset from the base data point, negative to the left.
    #[serde(rename = "offset")]
    pub lateral_offset: f64,
    #[serde(rename = "elev")]
    pub elevation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Station {
    #[serde(rename = "base")]
    pub base_point: Point,
    #[serde(rename = "left")]
    pub left_end: Point,
    #[serde(rename = "right")]
    pub right_end: Point,
    pub samples: Vec<GroundSample>,
}

impl Station {
    pub fn min_offset(&self) -> f64 {
        self.samples[0].lateral_offset
    }

    pub fn max_offset(&self) -> f64 {
        self.samples[self.samples.len() - 1].lateral_offset
    }

    /// Point `(1 - t) U + t V` on the cross-section line. Defined for all real `t`.
    pub fn cross_section_point(&self, t: f64) -> Point {
        self.left_end.lerp(self.right_end, t)
    }

    /// Signed lateral offset of the cross-section position `t`.
    pub fn lateral_offset_of_t(&self, t: f64) -> Result<f64, TerrainError> {
        check_unit(t)?;
        let (lo, hi) = (self.min_offset(), self.max_offset());
        Ok(lo + t * (hi - lo))
    }

    /// Ground elevation at cross-section position `t`, linearly interpolated
    /// between the bracketing samples.
    pub fn ground_elevation(&self, t: f64) -> Result<f64, TerrainError> {
        let offset = self.lateral_offset_of_t(t)?;
        Ok(self.elevation_at_offset(offset))
    }

    fn elevation_at_offset(&self, offset: f64) -> f64 {
        let s = &self.samples;
        // first sample with offset > `offset`; clamp so that the bracket is valid
        let k = s.partition_point(|g| g.lateral_offset <= offset);
        let k = k.clamp(1, s.len() - 1);
        let (a, b) = (s[k - 1], s[k]);
        if offset == a.lateral_offset {
            return a.elevation;
        }
        if offset == b.lateral_offset {
            return b.elevation;
        }
        let w = (offset - a.lateral_offset) / (b.lateral_offset - a.lateral_offset);
        a.elevation + w * (b.elevation - a.elevation)
    }

    fn validate(&self, index: usize) -> Result<(), TerrainError> {
        let err = |reason: String| TerrainError::Station {
            station: index,
            reason,
        };
        for p in [self.base_point, self.left_end, self.right_end] {
            if !p.is_finite() {
                return Err(err("non-finite coordinate".into()));
            }
        }
        if self.samples.len() < 2 {
            return Err(err(format!(
                "needs at least 2 samples, found {}",
                self.samples.len()
            )));
        }
        if self
            .samples
            .iter()
            .any(|s| !s.lateral_offset.is_finite() || !s.elevation.is_finite())
        {
            return Err(err("non-finite sample".into()));
        }
        if self
            .samples
            .windows(2)
            .any(|w| w[1].lateral_offset <= w[0].lateral_offset)
        {
            return Err(err("samples not strictly increasing in offset".into()));
        }
        if !self.samples.iter().any(|s| s.lateral_offset == 0.0) {
            return Err(err("no sample at offset 0 (base data point)".into()));
        }
        let width = self.left_end.distance(self.right_end);
        if width <= 0.0 {
            return Err(err("left and right ends coincide".into()));
        }
        let scale = width.max(1.0);
        let off_line = distance_to_line(self.base_point, self.left_end, self.right_end);
        if off_line > COLLINEAR_TOL * scale {
            return Err(err(format!(
                "base point is {off_line:e} m off the cross-section line"
            )));
        }
        let (lo, hi) = (self.min_offset(), self.max_offset());
        let left_gap = self.base_point.distance(self.left_end) - (-lo).abs();
        let right_gap = self.base_point.distance(self.right_end) - hi.abs();
        if left_gap.abs() > OFFSET_MATCH_TOL * scale || right_gap.abs() > OFFSET_MATCH_TOL * scale {
            return Err(err(
                "left/right ends do not match the extreme sample offsets".into(),
            ));
        }
        let span = (self.right_end - self.left_end).dot(self.base_point - self.left_end);
        if (lo < 0.0 && span <= 0.0) || span > width * width * (1.0 + OFFSET_MATCH_TOL) {
            return Err(err(
                "base point is not between the left and right ends".into()
            ));
        }
        Ok(())
    }
}

fn check_unit(t: f64) -> Result<(), TerrainError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(TerrainError::OutOfCorridor { t })
    }
}

/// Axis-aligned feasible region of one interior intersection point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundingBox {
    pub lo: Point,
    pub hi: Point,
}

impl BoundingBox {
    pub fn center(&self) -> Point {
        self.lo.lerp(self.hi, 0.5)
    }

    pub fn contains(&self, p: Point) -> bool {
        (self.lo.x..=self.hi.x).contains(&p.x) && (self.lo.y..=self.hi.y).contains(&p.y)
    }
}

/// Validated corridor. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corridor {
    pub start: Point,
    pub end: Point,
    pub r_min: f64,
    pub boxes: Vec<BoundingBox>,
    pub valign: VAlignConfig,
    /// Engineer's initial alignment; defaults to the box centers at `r_min`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Alignment>,
    pub stations: Vec<Station>,
}

impl Corridor {
    /// Number of intersection points including the fixed endpoints.
    pub fn n_points(&self) -> usize {
        self.boxes.len() + 2
    }

    pub fn n_stations(&self) -> usize {
        self.stations.len()
    }

    /// The starting alignment for optimization.
    pub fn baseline(&self) -> Alignment {
        match &self.initial {
            Some(a) => a.clone(),
            None => {
                let mut points = vec![self.start];
                points.extend(self.boxes.iter().map(BoundingBox::center));
                points.push(self.end);
                let radii = vec![self.r_min; self.boxes.len()];
                Alignment::from_parts(points, radii)
                    .expect("box centers form a valid alignment after validation")
            }
        }
    }

    /// Checks every invariant. Returns the list of non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>, TerrainError> {
        let field = |field: &str, reason: String| TerrainError::Field {
            field: field.into(),
            reason,
        };
        if !self.start.is_finite() || !self.end.is_finite() {
            return Err(field("start/end", "non-finite coordinate".into()));
        }
        if !(self.r_min.is_finite() && self.r_min >= 0.0) {
            return Err(field("r_min", format!("must be >= 0, got {}", self.r_min)));
        }
        for (i, b) in self.boxes.iter().enumerate() {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo.x <= b.hi.x && b.lo.y <= b.hi.y) {
                return Err(field(
                    &format!("boxes[{i}]"),
                    "lo must not exceed hi".into(),
                ));
            }
        }
        if self.stations.len() < 2 {
            return Err(field("stations", "at least 2 stations required".into()));
        }
        for (j, s) in self.stations.iter().enumerate() {
            s.validate(j)?;
        }
        let mut warnings = Vec::new();
        for (j, w) in self.stations.windows(2).enumerate() {
            let gap = w[0].base_point.distance(w[1].base_point);
            if gap <= 0.0 {
                return Err(TerrainError::Station {
                    station: j + 1,
                    reason: "base point coincides with the previous station".into(),
                });
            }
            if gap > MAX_RECOMMENDED_SPACING {
                warnings.push(format!(
                    "stations {j} and {}: spacing {gap:.2} m exceeds {MAX_RECOMMENDED_SPACING} m",
                    j + 1
                ));
            }
        }
        self.valign
            .validate(self.stations.len())
            .map_err(|e| field("valign", e.to_string()))?;
        if let Some(a) = &self.initial {
            if a.len() != self.n_points() {
                return Err(field(
                    "initial",
                    format!(
                        "has {} points, corridor expects {}",
                        a.len(),
                        self.n_points()
                    ),
                ));
            }
        } else if self.start.distance(self.end) == 0.0 && self.boxes.is_empty() {
            return Err(field("start/end", "endpoints coincide".into()));
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(warnings)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corridor serializes")
    }
}

/// Parses and validates corridor-file contents.
pub fn load_corridor(text: &str) -> Result<Corridor, TerrainError> {
    let corridor: Corridor = serde_json::from_str(text).map_err(|e| TerrainError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    corridor.validate()?;
    Ok(corridor)
}
