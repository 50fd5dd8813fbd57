//! Fixed vocal-tract outline, evenly spaced markers along it, and the
//! tongue-to-marker distances that become the area function.

use thiserror::Error;

use crate::geom::{
    closest_point_on_polyline, point_at_arclength, polyline_length, ray_polyline, segments_cross,
    Vec2,
};
use crate::tongue::{tongue_surface, TongueMesh, TongueState};

pub const MARKER_COUNT: usize = 22;

/// Area law `A = max(A_MIN, ALPHA·d^BETA)`.
pub const ALPHA: f64 = 1.5;
pub const BETA: f64 = 1.5;
/// cm²
pub const A_MIN: f64 = 0.05;

/// Distance reported when a ray misses both the tongue and the floor.
const OPEN_DISTANCE: f64 = 3.0;
/// A tongue hit this close behind a marker counts as penetration.
const PENETRATION_REACH: f64 = 1.0;

const DEFAULT_OUTLINE: &str = include_str!("../../data/default_outline.txt");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TractError {
    #[error("outline segment {0} has zero length")]
    DegenerateOutline(usize),
    #[error("invalid outline: {0}")]
    InvalidOutline(String),
    #[error("marker count must be at least 2, got {0}")]
    InvalidCount(usize),
    #[error("outline line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TractOutline {
    wall: Vec<Vec2>,
    floor: Vec<Vec2>,
    length: f64,
}

impl TractOutline {
    /// `wall` runs glottis to lips with the tongue on its clockwise side.
    /// `floor` is the fallback baseline and may be empty.
    pub fn new(wall: Vec<Vec2>, floor: Vec<Vec2>) -> Result<Self, TractError> {
        if wall.len() < MARKER_COUNT + 1 {
            return Err(TractError::InvalidOutline(format!(
                "need at least {} wall points, got {}",
                MARKER_COUNT + 1,
                wall.len()
            )));
        }
        if wall.iter().chain(&floor).any(|p| !p.is_finite()) {
            return Err(TractError::InvalidOutline("non-finite coordinate".into()));
        }
        if let Some(i) = wall.windows(2).position(|w| (w[1] - w[0]).norm() == 0.0) {
            return Err(TractError::DegenerateOutline(i));
        }
        let n = wall.len() - 1;
        for i in 0..n {
            for j in i + 2..n {
                if segments_cross(wall[i], wall[i + 1], wall[j], wall[j + 1]) {
                    return Err(TractError::InvalidOutline(format!(
                        "segments {i} and {j} intersect"
                    )));
                }
            }
        }
        if floor.len() == 1 {
            return Err(TractError::InvalidOutline(
                "floor needs two or more points".into(),
            ));
        }
        let length = polyline_length(&wall);
        Ok(TractOutline {
            wall,
            floor,
            length,
        })
    }

    pub fn reference() -> Self {
        Self::parse(DEFAULT_OUTLINE).expect("built-in outline is valid")
    }

    /// One `x y` wall point per line, glottis first; `floor x y` lines give
    /// the fallback baseline; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, TractError> {
        let mut wall = Vec::new();
        let mut floor = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut tok: Vec<&str> = content.split_whitespace().collect();
            let target = if tok[0] == "floor" {
                tok.remove(0);
                &mut floor
            } else {
                &mut wall
            };
            if tok.len() != 2 {
                return Err(TractError::Parse {
                    line,
                    message: format!("expected two coordinates, got {content:?}"),
                });
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| TractError::Parse {
                        line,
                        message: format!("bad number {s:?}"),
                    })
            };
            target.push(Vec2::new(num(tok[0])?, num(tok[1])?));
        }
        Self::new(wall, floor)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.wall {
            out += &format!("{} {}\n", p.x, p.y);
        }
        for p in &self.floor {
            out += &format!("floor {} {}\n", p.x, p.y);
        }
        out
    }

    pub fn wall(&self) -> &[Vec2] {
        &self.wall
    }

    pub fn floor(&self) -> &[Vec2] {
        &self.floor
    }

    /// cm
    pub fn length(&self) -> f64 {
        self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    pub position: Vec2,
    /// Unit vector pointing into the tract.
    pub normal: Vec2,
    /// Arc length from the glottis end, cm.
    pub axial: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkerSet {
    pub markers: Vec<Marker>,
    /// cm between neighbouring markers.
    pub spacing: f64,
}

impl MarkerSet {
    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }
}

pub fn place_markers(outline: &TractOutline, count: usize) -> Result<MarkerSet, TractError> {
    if count < 2 {
        return Err(TractError::InvalidCount(count));
    }
    let spacing = outline.length / count as f64;
    let markers = (0..count)
        .map(|i| {
            let axial = (i as f64 + 0.5) * spacing;
            let (position, tangent) =
                point_at_arclength(&outline.wall, axial).ok_or(TractError::DegenerateOutline(i))?;
            Ok(Marker {
                position,
                normal: tangent.perp_cw(),
                axial,
            })
        })
        .collect::<Result<_, TractError>>()?;
    Ok(MarkerSet { markers, spacing })
}

/// The surface with both free ends joined to the nearest floor point. The
/// tongue body is attached there; leaving the ends open lets a ray slip past
/// an end onto the floor, so the distance jumps as the end moves.
fn attached_profile(surface: &[Vec2], floor: &[Vec2]) -> Vec<Vec2> {
    let (Some(&first), Some(&last)) = (surface.first(), surface.last()) else {
        return Vec::new();
    };
    let mut profile = Vec::with_capacity(surface.len() + 2);
    profile.extend(closest_point_on_polyline(first, floor));
    profile.extend_from_slice(surface);
    profile.extend(closest_point_on_polyline(last, floor));
    profile
}

/// Marker-to-tongue distance along each inward normal. Rays that miss the
/// tongue fall back to the floor baseline.
pub fn sagittal_distances(surface: &[Vec2], markers: &MarkerSet, floor: &[Vec2]) -> Vec<f64> {
    let surface = &attached_profile(surface, floor);
    markers
        .markers
        .iter()
        .map(|m| {
            if let Some(d) = ray_polyline(m.position, m.normal, surface) {
                return d;
            }
            match ray_polyline(m.position, -m.normal, surface) {
                Some(back) if back <= PENETRATION_REACH => 0.0,
                _ => ray_polyline(m.position, m.normal, floor).unwrap_or(OPEN_DISTANCE),
            }
        })
        .collect()
}

pub fn distance_to_area(d: f64) -> f64 {
    (ALPHA * d.max(0.0).powf(BETA)).max(A_MIN)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    /// cm from the glottis to the section centre.
    pub axial: f64,
    /// cm²
    pub area: f64,
    /// cm
    pub length: f64,
}

/// Cross-sectional areas ordered glottis to lips.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaFunction {
    pub sections: Vec<Section>,
}

impl AreaFunction {
    /// Equal-length sections over `total_length`.
    pub fn from_areas(areas: &[f64], total_length: f64) -> Self {
        let dx = total_length / areas.len() as f64;
        AreaFunction {
            sections: areas
                .iter()
                .enumerate()
                .map(|(i, &area)| Section {
                    axial: (i as f64 + 0.5) * dx,
                    area,
                    length: dx,
                })
                .collect(),
        }
    }

    pub fn uniform(count: usize, total_length: f64, area: f64) -> Self {
        Self::from_areas(&vec![area; count], total_length)
    }

    pub fn areas(&self) -> Vec<f64> {
        self.sections.iter().map(|s| s.area).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.sections.iter().map(|s| s.length).sum()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.sections.is_empty() {
            return Err("no sections".into());
        }
        for (i, s) in self.sections.iter().enumerate() {
            if !(s.area >= A_MIN) || !s.area.is_finite() {
                return Err(format!("section {i} area {} below floor", s.area));
            }
            if !(s.length > 0.0) || !s.length.is_finite() {
                return Err(format!("section {i} length {} not positive", s.length));
            }
        }
        Ok(())
    }
}

/// Outline with its markers placed once.
#[derive(Debug, Clone, PartialEq)]
pub struct Tract {
    pub outline: TractOutline,
    pub markers: MarkerSet,
}

impl Tract {
    pub fn new(outline: TractOutline) -> Result<Self, TractError> {
        let markers = place_markers(&outline, MARKER_COUNT)?;
        Ok(Tract { outline, markers })
    }

    pub fn reference() -> Self {
        Self::new(TractOutline::reference()).expect("built-in outline is valid")
    }

    pub fn distances(&self, surface: &[Vec2]) -> Vec<f64> {
        sagittal_distances(surface, &self.markers, &self.outline.floor)
    }

    pub fn area_function(&self, state: &TongueState, mesh: &TongueMesh) -> AreaFunction {
        let d = self.distances(&tongue_surface(state, mesh));
        let areas: Vec<f64> = d.into_iter().map(distance_to_area).collect();
        AreaFunction::from_areas(&areas, self.outline.length)
    }
}
