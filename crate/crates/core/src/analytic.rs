//! Analytic scalar fields and 1-forms used for thickness profiles, initial
//! guesses and synthetic connection forms.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FieldProvider, PointFields, SpaceBackend};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant {
        value: f64,
    },
    Affine {
        offset: f64,
        slope: Vec<f64>,
    },
    /// `amplitude · Π sin(wavenumbers[i] · x_i)`
    SinProduct {
        amplitude: f64,
        wavenumbers: Vec<f64>,
    },
    /// `offset + amplitude · exp(-|x - center|² / (2 width²))`
    Gaussian {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    Sum {
        terms: Vec<ScalarField>,
    },
    /// One value per grid node; has no pointwise evaluation.
    Table {
        values: Vec<f64>,
    },
}

fn coord(x: &[f64], i: usize) -> f64 {
    x.get(i).copied().unwrap_or(0.0)
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant { value }
    }

    pub fn is_tabulated(&self) -> bool {
        match self {
            ScalarField::Table { .. } => true,
            ScalarField::Sum { terms } => terms.iter().any(|t| t.is_tabulated()),
            _ => false,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Affine { offset, slope } => {
                offset + slope.iter().enumerate().map(|(i, s)| s * coord(x, i)).sum::<f64>()
            }
            ScalarField::SinProduct {
                amplitude,
                wavenumbers,
            } => {
                amplitude
                    * wavenumbers
                        .iter()
                        .enumerate()
                        .map(|(i, k)| (k * coord(x, i)).sin())
                        .product::<f64>()
            }
            ScalarField::Gaussian {
                offset,
                amplitude,
                center,
                width,
            } => offset + amplitude * (-dist_sq(x, center) / (2.0 * width * width)).exp(),
            ScalarField::Sum { terms } => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.eval(x)?;
                }
                acc
            }
            ScalarField::Table { .. } => {
                return Err(Error::Data(
                    "tabulated field has no pointwise value".to_string(),
                ))
            }
        })
    }

    /// Coordinate differential `dv` as a covector.
    pub fn differential(&self, x: &[f64]) -> Result<Vector3<f64>> {
        let mut out = Vector3::zeros();
        match self {
            ScalarField::Constant { .. } => {}
            ScalarField::Affine { slope, .. } => {
                for (i, s) in slope.iter().enumerate().take(3) {
                    out[i] = *s;
                }
            }
            ScalarField::SinProduct {
                amplitude,
                wavenumbers,
            } => {
                for i in 0..wavenumbers.len().min(3) {
                    let mut term = *amplitude;
                    for (j, k) in wavenumbers.iter().enumerate() {
                        let arg = k * coord(x, j);
                        term *= if i == j { k * arg.cos() } else { arg.sin() };
                    }
                    out[i] = term;
                }
            }
            ScalarField::Gaussian {
                amplitude,
                center,
                width,
                ..
            } => {
                let s2 = width * width;
                let bump = amplitude * (-dist_sq(x, center) / (2.0 * s2)).exp();
                for (i, c) in center.iter().enumerate().take(3) {
                    out[i] = -bump * (coord(x, i) - c) / s2;
                }
            }
            ScalarField::Sum { terms } => {
                for t in terms {
                    out += t.differential(x)?;
                }
            }
            ScalarField::Table { .. } => {
                return Err(Error::Data(
                    "tabulated field has no pointwise differential".to_string(),
                ))
            }
        }
        Ok(out)
    }
}

fn dist_sq(x: &[f64], center: &[f64]) -> f64 {
    center
        .iter()
        .enumerate()
        .map(|(i, c)| (coord(x, i) - c).powi(2))
        .sum()
}

/// Analytic 1-form in chart coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OneForm {
    Zero,
    /// `Σ components[i] dx^i`
    Constant { components: Vec<f64> },
    /// `dv` for an analytic potential `v`.
    Exact { potential: ScalarField },
    /// `w_i = Σ_j matrix[i][j] x_j`; `dw = Σ_{i<j} (A_ji - A_ij) dx^i ∧ dx^j`.
    Linear { matrix: Vec<Vec<f64>> },
    Sum { terms: Vec<OneForm> },
}

impl OneForm {
    pub fn eval(&self, x: &[f64]) -> Result<Vector3<f64>> {
        let mut out = Vector3::zeros();
        match self {
            OneForm::Zero => {}
            OneForm::Constant { components } => {
                for (i, c) in components.iter().enumerate().take(3) {
                    out[i] = *c;
                }
            }
            OneForm::Exact { potential } => out = potential.differential(x)?,
            OneForm::Linear { matrix } => {
                for (i, row) in matrix.iter().enumerate().take(3) {
                    out[i] = row.iter().enumerate().map(|(j, a)| a * coord(x, j)).sum();
                }
            }
            OneForm::Sum { terms } => {
                for t in terms {
                    out += t.eval(x)?;
                }
            }
        }
        Ok(out)
    }
}

/// Geometry of a constant-curvature backend with a prescribed connection form.
///
/// Used for manufactured solutions (`w = dv`) and for annuli carrying a
/// prescribed holonomy. The base backend must have `w ≡ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticField {
    pub base: SpaceBackend,
    pub w: OneForm,
}

impl SyntheticField {
    pub fn new(base: SpaceBackend, w: OneForm) -> Result<Self> {
        if !base.has_constant_curvature() {
            return Err(Error::parameter(
                "w",
                "synthetic connection forms need a constant-curvature base backend",
            ));
        }
        base.validate()?;
        Ok(Self { base, w })
    }
}

impl FieldProvider for SyntheticField {
    fn orbit_dim(&self) -> usize {
        self.base.orbit_dim()
    }

    fn axis_labels(&self) -> Vec<String> {
        FieldProvider::axis_labels(&self.base)
    }

    fn sample(&self, x: &[f64]) -> Result<PointFields> {
        let mut fields = self.base.sample(x)?;
        fields.w = self.w.eval(x)?;
        Ok(fields)
    }

    fn validate_region(&self, lower: &[f64], upper: &[f64]) -> Result<()> {
        self.base.validate_region(lower, upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &ScalarField, x: &[f64]) {
        let d = f.differential(x).unwrap();
        for i in 0..x.len() {
            let h = 1e-6;
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let fd = (f.eval(&xp).unwrap() - f.eval(&xm).unwrap()) / (2.0 * h);
            assert!((fd - d[i]).abs() < 1e-8, "component {i}: {fd} vs {}", d[i]);
        }
    }

    #[test]
    fn differentials_match_finite_differences() {
        let pi = std::f64::consts::PI;
        fd_check(
            &ScalarField::SinProduct {
                amplitude: 0.1,
                wavenumbers: vec![pi, pi],
            },
            &[0.3, 0.7],
        );
        fd_check(
            &ScalarField::Gaussian {
                offset: 0.2,
                amplitude: 0.5,
                center: vec![0.5, 0.4, 0.1],
                width: 0.3,
            },
            &[0.2, 0.6, 0.3],
        );
        fd_check(
            &ScalarField::Sum {
                terms: vec![
                    ScalarField::constant(1.0),
                    ScalarField::Affine {
                        offset: 0.0,
                        slope: vec![0.5, -1.5],
                    },
                ],
            },
            &[0.1, 0.2],
        );
    }

    #[test]
    fn tabulated_field_has_no_point_values() {
        let t = ScalarField::Table { values: vec![1.0] };
        assert!(t.eval(&[0.0]).is_err());
        assert!(t.is_tabulated());
    }

    #[test]
    fn synthetic_field_requires_flat_connection_base() {
        assert!(SyntheticField::new(SpaceBackend::ComplexHyperbolic2, OneForm::Zero).is_err());
        let s = SyntheticField::new(
            SpaceBackend::Euclidean {
                dim: 3,
                coords: Default::default(),
            },
            OneForm::Constant {
                components: vec![0.0, 2.0],
            },
        )
        .unwrap();
        assert_eq!(s.sample(&[0.1, 0.2]).unwrap().w, Vector3::new(0.0, 2.0, 0.0));
    }
}
