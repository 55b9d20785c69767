//! Hollow-rectangular leg segments: cross-section, mass, inertia and bending
//! stiffness, plus wall-thickness calibration from a known segment mass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions of one segment, all in meters.
///
/// `thickness` is the wall thickness of the hollow rectangle. A thickness of
/// `min(width, height) / 2` closes the section into a solid bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDims {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub thickness: f64,
}

impl SegmentDims {
    pub fn new(length: f64, width: f64, height: f64, thickness: f64) -> Result<Self> {
        let dims = Self {
            length,
            width,
            height,
            thickness,
        };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        self.check(false)
    }

    /// Same as [`validate`](Self::validate) but accepts `length == 0`.
    pub fn validate_allowing_zero_length(&self) -> Result<()> {
        self.check(true)
    }

    fn check(&self, allow_zero_length: bool) -> Result<()> {
        let Self {
            length,
            width,
            height,
            thickness,
        } = *self;
        let finite = [length, width, height, thickness]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidDims(format!("non-finite value in {self:?}")));
        }
        let length_ok = if allow_zero_length {
            length >= 0.0
        } else {
            length > 0.0
        };
        if !length_ok || width <= 0.0 || height <= 0.0 {
            return Err(Error::InvalidDims(format!(
                "length, width and height must be positive (l={length}, w={width}, h={height})"
            )));
        }
        let max_wall = 0.5 * width.min(height);
        if thickness <= 0.0 || thickness > max_wall {
            return Err(Error::InvalidDims(format!(
                "wall thickness {thickness} outside (0, {max_wall}] for {width}x{height} section"
            )));
        }
        Ok(())
    }

    /// Inner (hollow) width and height; either may be zero for a solid bar.
    fn inner(&self) -> (f64, f64) {
        (
            (self.width - 2.0 * self.thickness).max(0.0),
            (self.height - 2.0 * self.thickness).max(0.0),
        )
    }
}

/// Coxa, femur and tibia dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegGeometry {
    pub coxa: SegmentDims,
    pub femur: SegmentDims,
    pub tibia: SegmentDims,
}

impl LegGeometry {
    pub fn segments(&self) -> [&SegmentDims; 3] {
        [&self.coxa, &self.femur, &self.tibia]
    }

    pub fn lengths(&self) -> [f64; 3] {
        [self.coxa.length, self.femur.length, self.tibia.length]
    }

    pub fn thicknesses(&self) -> [f64; 3] {
        [
            self.coxa.thickness,
            self.femur.thickness,
            self.tibia.thickness,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        self.segments().iter().try_for_each(|s| s.validate())
    }

    /// Builds the geometry from reference rows, calibrating each wall
    /// thickness so that the segment reproduces the row's mass.
    pub fn calibrated(reference: &[ReferenceSegment; 3], density: f64) -> Result<Self> {
        let seg = |r: &ReferenceSegment| -> Result<SegmentDims> {
            let t = calibrate_wall_thickness(r.length, r.height, r.width, r.mass, density)?;
            SegmentDims::new(r.length, r.width, r.height, t)
        };
        Ok(Self {
            coxa: seg(&reference[0])?,
            femur: seg(&reference[1])?,
            tibia: seg(&reference[2])?,
        })
    }

    /// Replaces length/width/height of every segment, keeping wall thickness.
    pub fn with_dimensions(&self, length: [f64; 3], width: [f64; 3], height: [f64; 3]) -> Self {
        let t = self.thicknesses();
        let mk = |i: usize| SegmentDims {
            length: length[i],
            width: width[i],
            height: height[i],
            thickness: t[i],
        };
        Self {
            coxa: mk(0),
            femur: mk(1),
            tibia: mk(2),
        }
    }
}

/// A tabulated segment: outer dimensions plus its measured mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSegment {
    pub length: f64,
    pub height: f64,
    pub width: f64,
    pub mass: f64,
}

const fn reference(length_mm: f64, height_mm: f64, width_mm: f64, mass: f64) -> ReferenceSegment {
    ReferenceSegment {
        length: length_mm / 1000.0,
        height: height_mm / 1000.0,
        width: width_mm / 1000.0,
        mass,
    }
}

/// Initial leg: coxa, femur, tibia.
pub const INITIAL_LEG: [ReferenceSegment; 3] = [
    reference(140.0, 179.0, 121.0, 6.06),
    reference(460.0, 158.0, 183.0, 20.09),
    reference(460.0, 144.0, 117.0, 14.22),
];

/// Published optimized leg, kept as a comparison reference.
pub const REFERENCE_OPTIMIZED_LEG: [ReferenceSegment; 3] = [
    reference(127.0, 173.0, 115.0, 5.20),
    reference(428.0, 151.0, 169.0, 17.17),
    reference(446.0, 130.0, 113.0, 11.61),
];

/// Material and environment constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialParams {
    /// kg/m³
    pub density: f64,
    /// Pa
    pub elastic_modulus: f64,
    /// m/s²
    pub gravity: f64,
    /// Height of the coxa center of mass above the zero-potential plane, m.
    pub base_height: f64,
}

impl Default for MaterialParams {
    /// 6061 aluminium under standard gravity.
    fn default() -> Self {
        Self {
            density: 2770.0,
            elastic_modulus: 68.9e9,
            gravity: 9.8066,
            base_height: 0.0,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.density > 0.0
            && self.elastic_modulus > 0.0
            && self.gravity > 0.0
            && self.base_height >= 0.0
            && self.base_height.is_finite()
            && self.density.is_finite()
            && self.elastic_modulus.is_finite()
            && self.gravity.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMaterial(format!("{self:?}")))
        }
    }
}

/// Axis about which the per-segment rotational inertia is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InertiaModel {
    /// Slender rod about its center of mass, `m·l²/12`.
    #[default]
    Centroidal,
    /// Slender rod about its proximal joint, `m·l²/3`.
    JointAxis,
}

impl InertiaModel {
    pub fn rod_inertia(self, mass: f64, length: f64) -> f64 {
        let k = match self {
            InertiaModel::Centroidal => 1.0 / 12.0,
            InertiaModel::JointAxis => 1.0 / 3.0,
        };
        k * mass * length * length
    }
}

/// Physical properties derived from a segment's dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentProperties {
    /// kg
    pub mass: f64,
    /// Center-of-mass distance from the proximal joint, m.
    pub com_offset: f64,
    /// kg·m²
    pub inertia: f64,
    /// N·m²
    pub bending_stiffness: f64,
}

/// Area of the hollow rectangular section, `h·w − (h−2t)(w−2t)`.
pub fn cross_section_area(d: &SegmentDims) -> Result<f64> {
    d.validate_allowing_zero_length()?;
    let (wi, hi) = d.inner();
    Ok(d.height * d.width - hi * wi)
}

/// Second moment of area about the section's z axis, `[h·w³ − (h−2t)(w−2t)³]/12`.
pub fn area_moment(d: &SegmentDims) -> f64 {
    let (wi, hi) = d.inner();
    (d.height * d.width.powi(3) - hi * wi.powi(3)) / 12.0
}

pub fn segment_properties(d: &SegmentDims, mat: &MaterialParams) -> Result<SegmentProperties> {
    d.validate()?;
    segment_properties_with(d, mat, InertiaModel::Centroidal)
}

/// Like [`segment_properties`] with a selectable inertia axis. Accepts a zero
/// length, which yields a massless segment.
pub fn segment_properties_with(
    d: &SegmentDims,
    mat: &MaterialParams,
    inertia: InertiaModel,
) -> Result<SegmentProperties> {
    mat.validate()?;
    let area = cross_section_area(d)?;
    let mass = mat.density * d.length * area;
    Ok(SegmentProperties {
        mass,
        com_offset: 0.5 * d.length,
        inertia: inertia.rod_inertia(mass, d.length),
        bending_stiffness: mat.elastic_modulus * area_moment(d),
    })
}

/// Wall thickness that gives a segment of outer size `l × h × w` the
/// requested mass.
///
/// Solves `4t² − 2(h+w)t + m/(ρl) = 0` and returns the smaller root, which is
/// the only one inside `(0, min(w,h)/2]` whenever the target is below the
/// solid-bar mass.
pub fn calibrate_wall_thickness(
    length: f64,
    height: f64,
    width: f64,
    target_mass: f64,
    density: f64,
) -> Result<f64> {
    if !(length > 0.0 && height > 0.0 && width > 0.0 && density > 0.0) {
        return Err(Error::CalibrationInfeasible(format!(
            "non-positive input (l={length}, h={height}, w={width}, rho={density})"
        )));
    }
    let solid_mass = density * length * height * width;
    if !(target_mass > 0.0 && target_mass < solid_mass) {
        return Err(Error::CalibrationInfeasible(format!(
            "target mass {target_mass} kg must lie in (0, {solid_mass}) kg"
        )));
    }
    let area = target_mass / (density * length);
    let sum = height + width;
    let disc = sum * sum - 4.0 * area;
    if disc < 0.0 {
        return Err(Error::CalibrationInfeasible(format!(
            "no real wall thickness for area {area} m²"
        )));
    }
    // Numerically stable small root: t = A / ((h+w) + sqrt(disc)).
    let t = area / (sum + disc.sqrt());
    if t <= 0.0 || t > 0.5 * width.min(height) {
        return Err(Error::CalibrationInfeasible(format!(
            "root {t} outside (0, {}]",
            0.5 * width.min(height)
        )));
    }
    Ok(t)
}
