//! Synthetic corridors with known optimal paths.
//!
//! Stations run along `+x` at a fixed spacing. Each cross-section is
//! vertical in plan: `U = (x, +w)` at offset `-w`, `V = (x, -w)` at offset
//! `+w`, so the cross-section parameter maps to `y = w (1 - 2t)`. The start
//! and end points lie on the line `t = t*`, so a straight road along that
//! line is always admissible. For the valley and ridge families the ground
//! is level along `t = t*`, which makes that road earthwork-free.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Alignment;
use crate::point::Point;
use crate::terrain::{BoundingBox, Corridor, GroundSample, Station, TerrainError};
use crate::valign::{Pit, VAlignConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerrainFamily {
    Flat,
    TiltedPlane,
    Valley,
    Ridge,
}

impl std::str::FromStr for TerrainFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flat" => Ok(Self::Flat),
            "tilted-plane" | "tilted" => Ok(Self::TiltedPlane),
            "valley" => Ok(Self::Valley),
            "ridge" => Ok(Self::Ridge),
            other => Err(format!("unknown terrain family `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub family: TerrainFamily,
    pub stations: usize,
    pub spacing: f64,
    pub half_width: f64,
    /// Cross-section position of the valley floor or ridge crest.
    pub t_star: f64,
    /// Rise of the ground from `t*` to the farther corridor edge.
    pub depth: f64,
    /// Longitudinal grade of the tilted plane.
    pub grade: f64,
    pub interior_points: usize,
    /// Samples per cross-section; forced odd so offset 0 is sampled.
    pub samples: usize,
    pub r_min: f64,
    pub base_elevation: f64,
    /// Amplitude of uniform random noise added to every sample.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            family: TerrainFamily::Valley,
            stations: 20,
            spacing: 10.0,
            half_width: 10.0,
            t_star: 0.5,
            depth: 4.0,
            grade: 0.03,
            interior_points: 3,
            samples: 21,
            r_min: 50.0,
            base_elevation: 100.0,
            noise: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
}

impl SynthSpec {
    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Spec(m.into()));
        if self.stations < 2 {
            return bad("station count must be at least 2");
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return bad("spacing must be positive");
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return bad("half-width must be positive");
        }
        if !(0.0..=1.0).contains(&self.t_star) {
            return bad("t* must lie in [0, 1]");
        }
        if self.samples < 2 {
            return bad("need at least 2 samples per station");
        }
        if !(self.r_min >= 0.0 && self.depth.is_finite() && self.noise >= 0.0) {
            return bad("r_min and noise must be >= 0, depth finite");
        }
        Ok(())
    }

    /// Plan-view `y` of cross-section parameter `t`.
    pub fn y_of_t(&self, t: f64) -> f64 {
        self.half_width * (1.0 - 2.0 * t)
    }

    /// Noise-free ground elevation at plan position `x` and parameter `t`.
    pub fn ground(&self, x: f64, t: f64) -> f64 {
        let reach = self.t_star.max(1.0 - self.t_star).max(f64::MIN_POSITIVE);
        let bowl = self.depth * ((t - self.t_star) / reach).powi(2);
        self.base_elevation
            + match self.family {
                TerrainFamily::Flat => 0.0,
                TerrainFamily::TiltedPlane => self.grade * x,
                TerrainFamily::Valley => bowl,
                TerrainFamily::Ridge => -bowl,
            }
    }

    pub fn station_x(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.spacing
    }

    pub fn length(&self) -> f64 {
        (self.stations + 1) as f64 * self.spacing
    }
}

/// Builds and validates a synthetic corridor.
pub fn synth_corridor(spec: &SynthSpec) -> Result<Corridor, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let w = spec.half_width;
    let n_samples = spec.samples | 1;
    let stations = (0..spec.stations)
        .map(|j| {
            let x = spec.station_x(j);
            let samples = (0..n_samples)
                .map(|k| {
                    let t = k as f64 / (n_samples - 1) as f64;
                    let noise = if spec.noise > 0.0 {
                        rng.gen_range(-spec.noise..=spec.noise)
                    } else {
                        0.0
                    };
                    GroundSample {
                        lateral_offset: if 2 * k + 1 == n_samples {
                            0.0
                        } else {
                            -w + 2.0 * w * t
                        },
                        elevation: spec.ground(x, t) + noise,
                    }
                })
                .collect();
            Station {
                base_point: Point::new(x, 0.0),
                left_end: Point::new(x, w),
                right_end: Point::new(x, -w),
                samples,
            }
        })
        .collect();

    let y_star = spec.y_of_t(spec.t_star);
    let length = spec.length();
    let k = spec.interior_points;
    let slot = length / (k + 1) as f64;
    let boxes: Vec<BoundingBox> = (1..=k)
        .map(|i| {
            let cx = slot * i as f64;
            let dx = (0.5 * slot).min(2.0 * spec.spacing);
            BoundingBox {
                lo: Point::new(cx - dx, -w),
                hi: Point::new(cx + dx, w),
            }
        })
        .collect();
    let start = Point::new(0.0, y_star);
    let end = Point::new(length, y_star);
    let mut points = vec![start];
    points.extend((1..=k).map(|i| Point::new(slot * i as f64, 0.0)));
    points.push(end);
    let initial = Alignment::from_parts(points, vec![2.0 * spec.r_min; k])
        .map_err(|e| SynthError::Spec(e.to_string()))?;

    let m = spec.stations;
    let corridor = Corridor {
        start,
        end,
        r_min: spec.r_min,
        boxes,
        valign: VAlignConfig {
            segments: Some(((m as f64 / 10.0).round() as usize).clamp(1, m - 1)),
            borrow: vec![Pit {
                at: 0,
                cost: 2.0,
                cap: 1e6,
            }],
            waste: vec![Pit {
                at: m - 1,
                cost: 1.0,
                cap: 1e6,
            }],
            ..VAlignConfig::default()
        },
        initial: Some(initial),
        stations,
    };
    corridor.validate()?;
    Ok(corridor)
}
