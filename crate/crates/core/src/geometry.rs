//! Closed-form geometry of the orbit space of a transvection.
//!
//! Every backend describes the orbit space `M = X / τ` of a transvection `τ`
//! along a geodesic `γ` through the base point, parametrized by the section
//! `σ(M) = exp(γ̇(0)^⊥)`. Points of the section are addressed in geodesic
//! polar coordinates about `γ(0)`: the radial distance `t`, the polar angle
//! `θ` measured from `Jγ̇(0)` (complex hyperbolic plane) and an azimuth `φ`.
//!
//! For each point a backend supplies the three quantities entering the area
//! functional: the orbit-space metric `g`, the Killing norm `k = |K|` and the
//! connection 1-form `w` measuring the vertical part of `dσ`.
//!
//! In the complex hyperbolic plane (holomorphic curvature `-4`) the radial
//! geodesic `c` with `ċ(0) = Y` carries a parallel frame `X₁, JX₁ = ċ, X₂, JX₂`
//! diagonalizing `R(·, ċ)ċ` with eigenvalues `-4, 0, -1, -1`, and
//! `γ̇(0) = cos θ X₁(0) + sin θ X₂(0)`. In chart coordinates `(t, θ, φ)`:
//!
//! * `∂_t` pushes forward to `ċ`,
//! * `∂_θ` to the Jacobi field `-sinh t · JX₂`,
//! * `∂_φ` to `-sin θ (sin θ · ½ sinh 2t · X₁ - cos θ · sinh t · X₂)`.
//!
//! Since `Hor(W)` lies in the span of `X₁, X₂` and is orthogonal to `ċ` and
//! `JX₂`, the connection form has a single component `w = w_φ(t, θ) dφ`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Charts used for solving stay at least this far from the axis `t = 0`
/// unless the region explicitly starts on the axis.
pub const T_MIN: f64 = 1e-3;

/// Coordinate system used for a Euclidean orbit space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EuclideanChart {
    #[default]
    Cartesian,
    /// Geodesic polar coordinates `(r, φ)` or `(r, θ, φ)` about the axis.
    Polar,
}

/// Analytic symmetric-space backend.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceBackend {
    Euclidean {
        dim: usize,
        #[serde(default)]
        coords: EuclideanChart,
    },
    /// Real hyperbolic space of curvature `-1`.
    RealHyperbolic { dim: usize },
    /// Complex hyperbolic plane, real dimension 4, holomorphic curvature `-4`.
    ComplexHyperbolic2,
}

/// Radial position in the section: distance `t` from the axis point and
/// the angle `theta` between the radial direction and `Jγ̇(0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialCoord {
    pub t: f64,
    pub theta: f64,
}

impl RadialCoord {
    pub fn new(t: f64, theta: f64) -> Self {
        Self { t, theta }
    }

    fn validate(&self) -> Result<()> {
        if !self.t.is_finite() || !self.theta.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite radial coordinate ({}, {})",
                self.t, self.theta
            )));
        }
        if self.t < 0.0 {
            return Err(Error::Domain(format!("radial coordinate t = {} < 0", self.t)));
        }
        Ok(())
    }
}

/// A vector expressed in the parallel frame `(X₁, X₂)` along a radial geodesic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameVector {
    pub x1: f64,
    pub x2: f64,
}

impl FrameVector {
    pub fn norm(&self) -> f64 {
        self.x1.hypot(self.x2)
    }
}

/// `‖W‖²` together with the area factor `sqrt(1 + k²‖W‖²) = k / |⟨K, ν⟩|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WNorm {
    pub norm_sq: f64,
    pub area_factor: f64,
}

/// Parallel frame along a radial geodesic with the eigenvalues of the
/// curvature operator `R(·, ċ)ċ` on each frame vector.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiFrame {
    pub labels: Vec<&'static str>,
    pub eigenvalues: Vec<f64>,
}

impl JacobiFrame {
    /// Frame `(X₁, JX₁ = ċ, X₂, JX₂)` of the complex hyperbolic plane.
    pub fn complex_hyperbolic2() -> Self {
        Self {
            labels: vec!["X1", "JX1", "X2", "JX2"],
            eigenvalues: vec![-4.0, 0.0, -1.0, -1.0],
        }
    }

    /// Frame `(ċ, E₂, …, E_dim)` of a space of constant curvature `curvature`.
    pub fn constant_curvature(dim: usize, curvature: f64) -> Self {
        let mut eigenvalues = vec![0.0];
        eigenvalues.extend(std::iter::repeat_n(curvature, dim.saturating_sub(1)));
        let mut labels = vec!["c'"];
        labels.extend(std::iter::repeat_n("E", dim.saturating_sub(1)));
        Self { labels, eigenvalues }
    }
}

/// Symmetric chart metric of dimension `dim ≤ 3`, padded with the identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartMetric {
    pub dim: usize,
    pub matrix: Matrix3<f64>,
}

impl ChartMetric {
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: Matrix3::identity(),
        }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut matrix = Matrix3::identity();
        for (i, &e) in entries.iter().enumerate() {
            matrix[(i, i)] = e;
        }
        Self {
            dim: entries.len(),
            matrix,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.matrix.iter().all(|v| v.is_finite()) && self.matrix.cholesky().is_some()
    }

    pub fn inverse(&self) -> Option<Matrix3<f64>> {
        self.matrix.cholesky().map(|c| c.inverse())
    }
}

/// Geometric data at one chart point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointFields {
    pub metric: ChartMetric,
    pub k: f64,
    /// Connection form `w` as a covector in chart coordinates.
    pub w: Vector3<f64>,
}

/// Anything that can supply `(g, k, w)` on a coordinate patch.
pub trait FieldProvider: Sync {
    fn orbit_dim(&self) -> usize;

    fn axis_labels(&self) -> Vec<String>;

    fn sample(&self, x: &[f64]) -> Result<PointFields>;

    /// Reject coordinate boxes that leave the valid chart.
    fn validate_region(&self, lower: &[f64], upper: &[f64]) -> Result<()>;
}

/// Closed forms along one radial geodesic of the complex hyperbolic plane.
struct Ch2Radial {
    cos: f64,
    sin: f64,
    cosh_t: f64,
    sinh_t: f64,
    cosh_2t: f64,
    sinh_2t: f64,
    /// `k² = cos²θ cosh²2t + sin²θ cosh²t`
    k_sq: f64,
    /// `cos²θ cosh 2t + sin²θ cosh²t`
    normal_num: f64,
    /// `sqrt(sin²θ cosh²t + cos²θ)`
    normal_den: f64,
}

impl Ch2Radial {
    fn new(p: RadialCoord) -> Self {
        let (sin, cos) = p.theta.sin_cos();
        let (cosh_t, sinh_t) = (p.t.cosh(), p.t.sinh());
        let (cosh_2t, sinh_2t) = ((2.0 * p.t).cosh(), (2.0 * p.t).sinh());
        let (c2, s2) = (cos * cos, sin * sin);
        Self {
            cos,
            sin,
            cosh_t,
            sinh_t,
            cosh_2t,
            sinh_2t,
            k_sq: c2 * cosh_2t * cosh_2t + s2 * cosh_t * cosh_t,
            normal_num: c2 * cosh_2t + s2 * cosh_t * cosh_t,
            normal_den: (s2 * cosh_t * cosh_t + c2).sqrt(),
        }
    }

    fn killing(&self) -> FrameVector {
        FrameVector {
            x1: self.cos * self.cosh_2t,
            x2: self.sin * self.cosh_t,
        }
    }

    fn normal(&self) -> FrameVector {
        FrameVector {
            x1: self.cos / self.normal_den,
            x2: self.sin * self.cosh_t / self.normal_den,
        }
    }

    fn normal_inner(&self) -> f64 {
        self.normal_num / self.normal_den
    }

    /// `Hor(W) = K/k² - ν/⟨K, ν⟩`.
    fn hor_w(&self) -> FrameVector {
        let inv_k_sq = 1.0 / self.k_sq;
        let inv_n = 1.0 / self.normal_num;
        FrameVector {
            x1: self.cos * (self.cosh_2t * inv_k_sq - inv_n),
            x2: self.sin * self.cosh_t * (inv_k_sq - inv_n),
        }
    }

    /// Frame components of the Jacobi field `dσ(∂_φ)`.
    fn azimuthal_field(&self) -> FrameVector {
        FrameVector {
            x1: -self.sin * self.sin * 0.5 * self.sinh_2t,
            x2: self.sin * self.cos * self.sinh_t,
        }
    }

    fn w_phi(&self) -> f64 {
        let hw = self.hor_w();
        let az = self.azimuthal_field();
        hw.x1 * az.x1 + hw.x2 * az.x2
    }

    fn section_diag(&self) -> [f64; 3] {
        let az = self.azimuthal_field();
        [1.0, self.sinh_t * self.sinh_t, az.x1 * az.x1 + az.x2 * az.x2]
    }
}

impl SpaceBackend {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SpaceBackend::Euclidean { dim, .. } | SpaceBackend::RealHyperbolic { dim } if dim < 2 => {
                Err(Error::parameter("backend.dim", format!("must be at least 2 (got {dim})")))
            }
            _ => Ok(()),
        }
    }

    /// Dimension of the ambient symmetric space.
    pub fn ambient_dim(&self) -> usize {
        match *self {
            SpaceBackend::Euclidean { dim, .. } | SpaceBackend::RealHyperbolic { dim } => dim,
            SpaceBackend::ComplexHyperbolic2 => 4,
        }
    }

    pub fn has_constant_curvature(&self) -> bool {
        !matches!(self, SpaceBackend::ComplexHyperbolic2)
    }

    fn is_polar(&self) -> bool {
        !matches!(
            self,
            SpaceBackend::Euclidean {
                coords: EuclideanChart::Cartesian,
                ..
            }
        )
    }

    /// Radial coordinate of a chart point.
    pub fn radial(&self, x: &[f64]) -> RadialCoord {
        if !self.is_polar() {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            return RadialCoord::new(r, 0.0);
        }
        let theta = if self.orbit_dim() == 3 { x[1] } else { FRAC_PI_2 };
        RadialCoord::new(x[0], theta)
    }

    /// Norm `k` of the Killing field along the section; `k ≥ 1`, `k = 1` on the axis.
    pub fn killing_norm(&self, p: RadialCoord) -> Result<f64> {
        p.validate()?;
        Ok(match self {
            SpaceBackend::Euclidean { .. } => 1.0,
            SpaceBackend::RealHyperbolic { .. } => p.t.cosh(),
            SpaceBackend::ComplexHyperbolic2 => Ch2Radial::new(p).k_sq.sqrt(),
        })
    }

    /// Killing field `K(t)` in the frame `(X₁, X₂)`; for constant curvature
    /// the field is reported along its own parallel direction in `x1`.
    pub fn killing_frame(&self, p: RadialCoord) -> Result<FrameVector> {
        p.validate()?;
        Ok(match self {
            SpaceBackend::ComplexHyperbolic2 => Ch2Radial::new(p).killing(),
            _ => FrameVector {
                x1: self.killing_norm(p)?,
                x2: 0.0,
            },
        })
    }

    /// Unit normal `ν(t)` of the section in the frame `(X₁, X₂)`.
    pub fn normal_frame(&self, p: RadialCoord) -> Result<FrameVector> {
        p.validate()?;
        Ok(match self {
            SpaceBackend::ComplexHyperbolic2 => Ch2Radial::new(p).normal(),
            _ => FrameVector { x1: 1.0, x2: 0.0 },
        })
    }

    /// Horizontal lift of `W` in the frame `(X₁, X₂)`.
    pub fn hor_w(&self, p: RadialCoord) -> Result<FrameVector> {
        p.validate()?;
        Ok(match self {
            SpaceBackend::ComplexHyperbolic2 => Ch2Radial::new(p).hor_w(),
            _ => FrameVector::default(),
        })
    }

    /// `⟨K, ν⟩` along the section.
    pub fn normal_inner(&self, p: RadialCoord) -> Result<f64> {
        p.validate()?;
        Ok(match self {
            SpaceBackend::ComplexHyperbolic2 => Ch2Radial::new(p).normal_inner(),
            _ => self.killing_norm(p)?,
        })
    }

    pub fn w_norm_sq(&self, p: RadialCoord) -> Result<WNorm> {
        let k = self.killing_norm(p)?;
        let kn = self.normal_inner(p)?;
        let norm_sq = (-1.0 / (k * k) + 1.0 / (kn * kn)).max(0.0);
        Ok(WNorm {
            norm_sq,
            area_factor: k / kn.abs(),
        })
    }

    /// Dimension of the orbit space (and of the chart).
    pub fn orbit_dim(&self) -> usize {
        self.ambient_dim() - 1
    }

    fn singular_at(&self, p: RadialCoord) -> bool {
        if !self.is_polar() {
            return false;
        }
        let d = self.orbit_dim();
        (d >= 2 && p.t == 0.0) || (d == 3 && p.theta.sin() == 0.0)
    }

    /// Pullback `σ*ĝ` of the ambient metric to the section, in chart coordinates.
    pub fn section_metric(&self, p: RadialCoord) -> Result<ChartMetric> {
        p.validate()?;
        let d = self.orbit_dim();
        if d > 3 {
            return Err(Error::Unsupported(format!(
                "chart metrics for orbit dimension {d} (at most 3 supported)"
            )));
        }
        if !self.is_polar() {
            return Ok(ChartMetric::identity(d));
        }
        if self.singular_at(p) {
            return Err(Error::CoordinateSingularity {
                t: p.t,
                theta: p.theta,
            });
        }
        let radial_scale = match self {
            SpaceBackend::Euclidean { .. } => p.t,
            SpaceBackend::RealHyperbolic { .. } => p.t.sinh(),
            SpaceBackend::ComplexHyperbolic2 => {
                return Ok(ChartMetric::diagonal(&Ch2Radial::new(p).section_diag()));
            }
        };
        let r2 = radial_scale * radial_scale;
        Ok(match d {
            1 => ChartMetric::diagonal(&[1.0]),
            2 => ChartMetric::diagonal(&[1.0, r2]),
            _ => ChartMetric::diagonal(&[1.0, r2, r2 * p.theta.sin().powi(2)]),
        })
    }

    /// Connection form `w` as a covector in chart coordinates.
    pub fn connection_form(&self, p: RadialCoord) -> Result<Vector3<f64>> {
        p.validate()?;
        Ok(match self {
            SpaceBackend::ComplexHyperbolic2 => Vector3::new(0.0, 0.0, Ch2Radial::new(p).w_phi()),
            _ => Vector3::zeros(),
        })
    }

    /// Orbit-space metric `g = σ*ĝ - k² w⊗w`.
    pub fn orbit_metric(&self, p: RadialCoord) -> Result<ChartMetric> {
        let section = self.section_metric(p)?;
        let k = self.killing_norm(p)?;
        let w = self.connection_form(p)?;
        let mut metric = section;
        metric.matrix -= k * k * w * w.transpose();
        if !metric.is_positive_definite() {
            return Err(Error::BackendConsistency(format!(
                "orbit metric not positive definite at t = {}, theta = {}",
                p.t, p.theta
            )));
        }
        Ok(metric)
    }
}

impl FieldProvider for SpaceBackend {
    fn orbit_dim(&self) -> usize {
        SpaceBackend::orbit_dim(self)
    }

    fn axis_labels(&self) -> Vec<String> {
        let d = SpaceBackend::orbit_dim(self);
        let labels: &[&str] = match (self.is_polar(), d) {
            (false, _) => &["x0", "x1", "x2"],
            (true, 2) => &["t", "ph"],
            (true, _) => &["t", "th", "ph"],
        };
        labels.iter().take(d).map(|s| s.to_string()).collect()
    }

    fn sample(&self, x: &[f64]) -> Result<PointFields> {
        let p = self.radial(x);
        Ok(PointFields {
            metric: self.orbit_metric(p)?,
            k: self.killing_norm(p)?,
            w: self.connection_form(p)?,
        })
    }

    fn validate_region(&self, lower: &[f64], upper: &[f64]) -> Result<()> {
        self.validate()?;
        if !self.is_polar() {
            return Ok(());
        }
        let t_lo = lower[0];
        if t_lo < 0.0 {
            return Err(Error::Domain(format!("region reaches t = {t_lo} < 0")));
        }
        if t_lo > 0.0 && t_lo < T_MIN {
            return Err(Error::Domain(format!(
                "region starts at t = {t_lo}, inside the excluded axis disc of radius {T_MIN}"
            )));
        }
        if SpaceBackend::orbit_dim(self) == 3 && (lower[1] < 0.0 || upper[1] > std::f64::consts::PI) {
            return Err(Error::Domain(format!(
                "polar angle range [{}, {}] leaves [0, pi]",
                lower[1], upper[1]
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    const CH2: SpaceBackend = SpaceBackend::ComplexHyperbolic2;

    #[test]
    fn killing_norm_examples() {
        let e = SpaceBackend::Euclidean {
            dim: 3,
            coords: EuclideanChart::Cartesian,
        };
        assert_eq!(e.killing_norm(RadialCoord::new(2.5, 0.3)).unwrap(), 1.0);
        for theta in [0.0, 0.4, FRAC_PI_2] {
            assert_eq!(CH2.killing_norm(RadialCoord::new(0.0, theta)).unwrap(), 1.0);
        }
        let expected = (0.5 * 2f64.cosh().powi(2) + 0.5 * 1f64.cosh().powi(2)).sqrt();
        let k = CH2.killing_norm(RadialCoord::new(1.0, FRAC_PI_4)).unwrap();
        assert!((k - expected).abs() < 1e-14 * expected);
    }

    #[test]
    fn negative_radius_is_a_domain_error() {
        let err = CH2.killing_norm(RadialCoord::new(-0.1, 0.2)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(CH2.hor_w(RadialCoord::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn hor_w_vanishes_on_special_angles() {
        for t in [0.0, 0.3, 1.0, 2.7] {
            for theta in [0.0, FRAC_PI_2] {
                let hw = CH2.hor_w(RadialCoord::new(t, theta)).unwrap();
                assert!(hw.norm() < 1e-15, "t={t} theta={theta} {hw:?}");
            }
        }
        let h = SpaceBackend::RealHyperbolic { dim: 4 };
        assert_eq!(h.hor_w(RadialCoord::new(1.3, 0.7)).unwrap(), FrameVector::default());
    }

    #[test]
    fn normal_inner_examples() {
        assert!((CH2.normal_inner(RadialCoord::new(0.0, 0.9)).unwrap() - 1.0).abs() < 1e-15);
        let v = CH2.normal_inner(RadialCoord::new(1.0, 0.0)).unwrap();
        assert!((v - 2f64.cosh()).abs() < 1e-14);
        let h = SpaceBackend::RealHyperbolic { dim: 3 };
        assert_eq!(h.normal_inner(RadialCoord::new(1.0, 0.0)).unwrap(), 1f64.cosh());
    }

    #[test]
    fn hor_w_is_orthogonal_to_killing_field() {
        for t in [0.1, 0.8, 2.0] {
            for theta in [0.2, 0.7, 1.3] {
                let p = RadialCoord::new(t, theta);
                let hw = CH2.hor_w(p).unwrap();
                let kf = CH2.killing_frame(p).unwrap();
                assert!((hw.x1 * kf.x1 + hw.x2 * kf.x2).abs() < 1e-14 * kf.norm());
            }
        }
    }

    #[test]
    fn w_norm_closed_forms_agree() {
        for t in [0.0, 0.5, 1.0, 2.5] {
            for theta in [0.0, 0.3, FRAC_PI_4, 1.4, FRAC_PI_2] {
                let p = RadialCoord::new(t, theta);
                let wn = CH2.w_norm_sq(p).unwrap();
                let hw = CH2.hor_w(p).unwrap();
                let k = CH2.killing_norm(p).unwrap();
                let direct = (1.0 + k * k * hw.norm().powi(2)).sqrt();
                assert!((direct - wn.area_factor).abs() < 1e-12 * direct);
                assert!((hw.norm().powi(2) - wn.norm_sq).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orbit_metric_norm_of_w_matches_frame_norm() {
        let p = RadialCoord::new(1.0, FRAC_PI_4);
        let g = CH2.orbit_metric(p).unwrap();
        let w = CH2.connection_form(p).unwrap();
        let norm_sq = (w.transpose() * g.inverse().unwrap() * w)[0];
        let expected = CH2.hor_w(p).unwrap().norm().powi(2);
        assert!((norm_sq - expected).abs() < 1e-13);
        assert_eq!(g.get(0, 0), 1.0);
    }

    #[test]
    fn constant_curvature_metrics() {
        let e = SpaceBackend::Euclidean {
            dim: 3,
            coords: EuclideanChart::Cartesian,
        };
        assert_eq!(e.orbit_metric(RadialCoord::new(0.0, 0.0)).unwrap().matrix, Matrix3::identity());
        let h = SpaceBackend::RealHyperbolic { dim: 4 };
        let p = RadialCoord::new(0.8, 1.1);
        assert_eq!(h.orbit_metric(p).unwrap(), h.section_metric(p).unwrap());
        let p0 = RadialCoord::new(0.9, 0.0);
        assert_eq!(CH2.connection_form(p0).unwrap(), Vector3::zeros());
    }

    #[test]
    fn section_metric_flags_the_axis() {
        let err = CH2.section_metric(RadialCoord::new(0.0, 0.5)).unwrap_err();
        assert!(matches!(err, Error::CoordinateSingularity { .. }));
        let err = CH2.section_metric(RadialCoord::new(0.5, 0.0)).unwrap_err();
        assert!(matches!(err, Error::CoordinateSingularity { .. }));
    }

    #[test]
    fn reflection_of_second_frame_vector_flips_x2_only() {
        // θ ↦ -θ corresponds to X₂ ↦ -X₂; θ ↦ π - θ to X₁ ↦ -X₁.
        for t in [0.4, 1.7] {
            for theta in [0.3, 1.1] {
                let a = CH2.hor_w(RadialCoord::new(t, theta)).unwrap();
                let b = CH2.hor_w(RadialCoord::new(t, -theta)).unwrap();
                let c = CH2.hor_w(RadialCoord::new(t, PI - theta)).unwrap();
                assert!((a.x1 - b.x1).abs() < 1e-15 && (a.x2 + b.x2).abs() < 1e-15);
                assert!((a.x1 + c.x1).abs() < 1e-15 && (a.x2 - c.x2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn region_validation() {
        assert!(CH2.validate_region(&[-0.1, 0.2, 0.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(CH2.validate_region(&[1e-4, 0.2, 0.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(CH2.validate_region(&[0.0, 0.2, 0.0], &[1.0, 1.0, 1.0]).is_ok());
        assert!(SpaceBackend::RealHyperbolic { dim: 1 }.validate().is_err());
    }
}
