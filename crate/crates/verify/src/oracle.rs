//! Reference geometry obtained by integrating the Jacobi equation.
//!
//! Along a geodesic of a symmetric space the curvature operator
//! `X ↦ R(X, v)v` is parallel, so in a parallel orthonormal frame every
//! Jacobi field solves `y'' = -R_v y` with a constant matrix. The Killing
//! field of the transvection is the Jacobi field with `K(0) = e`, `K'(0) = 0`
//! (`e` the axis direction); the section `exp(e^⊥)` is spanned at `γ(t)` by
//! `γ̇` and the Jacobi fields with `Y(0) = 0`, `Y'(0) ⊥ e, v`.

use nalgebra::{DMatrix, DVector};

/// Curvature model of the ambient space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    /// Constant sectional curvature `kappa` in dimension `dim`.
    ConstantCurvature { dim: usize, kappa: f64 },
    /// Complex hyperbolic plane with holomorphic curvature `-4`.
    ComplexHyperbolicPlane,
}

/// Oracle values at one point of a radial geodesic.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSample {
    pub t: f64,
    pub k: f64,
    pub normal_inner: f64,
    /// `Hor(W) = K/k² − ν/⟨K, ν⟩` in the parallel frame.
    pub hor_w: DVector<f64>,
    pub killing: DVector<f64>,
}

/// Chart-coordinate fields at one point of the complex hyperbolic plane,
/// obtained from the Jacobi fields of the coordinate vectors `∂_t, ∂_θ, ∂_φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartOracleSample {
    pub t: f64,
    pub theta: f64,
    pub phi: f64,
    pub k: f64,
    /// Gram matrix of the coordinate fields, `σ*ĝ`.
    pub section: DMatrix<f64>,
    /// Connection form `w_i = ⟨Hor(W), dσ ∂_i⟩`.
    pub w: DVector<f64>,
    /// `σ*ĝ − k² w⊗w`.
    pub orbit: DMatrix<f64>,
}

pub struct JacobiOracle {
    pub model: Model,
    pub step: f64,
}

impl JacobiOracle {
    pub fn new(model: Model) -> Self {
        Self { model, step: 1e-4 }
    }

    fn dim(&self) -> usize {
        match self.model {
            Model::ConstantCurvature { dim, .. } => dim,
            Model::ComplexHyperbolicPlane => 4,
        }
    }

    /// Radial direction `v`, axis direction `e(θ)` and the matrix of `-R_v`.
    ///
    /// For the complex plane the frame is `(X₁, JX₁, X₂, JX₂)` with `v = JX₁`
    /// and `e = cos θ X₁ + sin θ X₂`. For constant curvature `v = E₂`, `e = E₁`.
    fn setup(&self, theta: f64) -> (DVector<f64>, DVector<f64>, DMatrix<f64>) {
        let n = self.dim();
        match self.model {
            Model::ConstantCurvature { kappa, .. } => {
                let mut v = DVector::zeros(n);
                v[1] = 1.0;
                let mut e = DVector::zeros(n);
                e[0] = 1.0;
                let a = (DMatrix::identity(n, n) - &v * v.transpose()) * (-kappa);
                (v, e, a)
            }
            Model::ComplexHyperbolicPlane => {
                let j = complex_structure();
                let v = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
                let jv = &j * &v;
                let e = DVector::from_vec(vec![theta.cos(), 0.0, theta.sin(), 0.0]);
                // R(X, v)v = -(X - ⟨X,v⟩v + 3⟨X,Jv⟩Jv) for holomorphic curvature -4
                let a = DMatrix::identity(4, 4) - &v * v.transpose() + (&jv * jv.transpose()) * 3.0;
                (v, e, a)
            }
        }
    }

    /// Integrate up to the largest requested time and sample at `times`
    /// (each rounded to the nearest multiple of the step).
    pub fn sample(&self, theta: f64, times: &[f64]) -> Vec<OracleSample> {
        let n = self.dim();
        let (v, e, a) = self.setup(theta);

        // basis of e^⊥ ∩ v^⊥
        let mut basis: Vec<DVector<f64>> = vec![v.clone(), e.clone()];
        let mut seeds = Vec::new();
        for i in 0..n {
            let mut x = DVector::zeros(n);
            x[i] = 1.0;
            for b in &basis {
                let c = x.dot(b);
                x -= b * c;
            }
            if x.norm() > 1e-8 {
                x /= x.norm();
                basis.push(x.clone());
                seeds.push(x);
            }
        }

        // state columns: K, then one Jacobi field per seed
        let m = 1 + seeds.len();
        let mut pos = DMatrix::zeros(n, m);
        let mut vel = DMatrix::zeros(n, m);
        pos.set_column(0, &e);
        for (i, s) in seeds.iter().enumerate() {
            vel.set_column(i + 1, s);
        }

        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&i, &j| times[i].total_cmp(&times[j]));
        let mut out: Vec<Option<OracleSample>> = vec![None; times.len()];
        let h = self.step;
        let mut step_index = 0usize;
        for &idx in &order {
            let target = (times[idx] / h).round() as usize;
            while step_index < target {
                rk4(&a, &mut pos, &mut vel, h);
                step_index += 1;
            }
            let t = step_index as f64 * h;
            out[idx] = Some(self.evaluate(t, &v, &pos, &vel, seeds.len()));
        }
        out.into_iter().map(|s| s.expect("sampled")).collect()
    }

    fn evaluate(&self, t: f64, v: &DVector<f64>, pos: &DMatrix<f64>, vel: &DMatrix<f64>, nseeds: usize) -> OracleSample {
        let killing: DVector<f64> = pos.column(0).into_owned();
        // tangent space of the section; Y(t)/t → Y'(0) as t → 0
        let mut tangent: Vec<DVector<f64>> = vec![v.clone()];
        for i in 0..nseeds {
            let y: DVector<f64> = if t == 0.0 {
                vel.column(i + 1).into_owned()
            } else {
                pos.column(i + 1).into_owned()
            };
            tangent.push(y);
        }
        let ortho = orthonormalize(&tangent);
        let mut normal = killing.clone();
        for _ in 0..2 {
            for b in &ortho {
                let c = normal.dot(b);
                normal -= b * c;
            }
        }
        let normal_inner = normal.norm();
        let nu = &normal / normal_inner;
        let k = killing.norm();
        let hor_w = &killing / (k * k) - &nu / normal_inner;
        OracleSample {
            t,
            k,
            normal_inner,
            hor_w,
            killing,
        }
    }
}

/// Complex structure `J(a, b, c, d) = (−b, a, −d, c)` on `ℂ² = ℝ⁴`.
fn complex_structure() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 4, &[
        0.0, -1.0, 0.0, 0.0, //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, -1.0, //
        0.0, 0.0, 1.0, 0.0,
    ])
}

fn orthonormalize(vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for x in vectors {
        let mut x = x.clone();
        for _ in 0..2 {
            for b in &ortho {
                let c = x.dot(b);
                x -= b * c;
            }
        }
        let nx = x.norm();
        ortho.push(x / nx);
    }
    ortho
}

impl JacobiOracle {
    /// Fields of the radial chart `(t, θ, φ)` of the complex hyperbolic plane.
    ///
    /// With axis direction `e₀ = E₁` and `a = E₃`, `b = Ja = E₄`, the radial
    /// direction is `y(θ, φ) = cos θ Je₀ + sin θ (cos φ a + sin φ b)`; the
    /// coordinate fields are the Jacobi fields with `Y(0) = 0`, `Y'(0) = ∂y`.
    pub fn chart_sample(&self, t: f64, theta: f64, phi: f64) -> ChartOracleSample {
        assert_eq!(self.model, Model::ComplexHyperbolicPlane, "chart oracle needs the complex plane");
        assert!(t > 0.0, "chart oracle needs t > 0");
        let j = complex_structure();
        let e0 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let je0 = &j * &e0;
        let a = DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]);
        let b = &j * &a;
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let u = &a * cp + &b * sp;
        let du = &a * (-sp) + &b * cp;
        let y = &je0 * ct + &u * st;
        let y_theta = &je0 * (-st) + &u * ct;
        let y_phi = &du * st;
        let jy = &j * &y;
        let op = DMatrix::identity(4, 4) - &y * y.transpose() + (&jy * jy.transpose()) * 3.0;

        // columns: K, Y_θ, Y_φ
        let mut pos = DMatrix::zeros(4, 3);
        let mut vel = DMatrix::zeros(4, 3);
        pos.set_column(0, &e0);
        vel.set_column(1, &y_theta);
        vel.set_column(2, &y_phi);
        let steps = (t / self.step).round() as usize;
        let h = t / steps as f64;
        for _ in 0..steps {
            rk4(&op, &mut pos, &mut vel, h);
        }

        let killing: DVector<f64> = pos.column(0).into_owned();
        let fields = [y.clone(), pos.column(1).into_owned(), pos.column(2).into_owned()];
        let ortho = orthonormalize(&fields);
        let mut normal = killing.clone();
        for _ in 0..2 {
            for q in &ortho {
                let c = normal.dot(q);
                normal -= q * c;
            }
        }
        let normal_inner = normal.norm();
        let nu = &normal / normal_inner;
        let k = killing.norm();
        let hor_w = &killing / (k * k) - &nu / normal_inner;
        let section = DMatrix::from_fn(3, 3, |r, c| fields[r].dot(&fields[c]));
        let w = DVector::from_fn(3, |i, _| hor_w.dot(&fields[i]));
        let orbit = &section - &w * w.transpose() * (k * k);
        ChartOracleSample {
            t,
            theta,
            phi,
            k,
            section,
            w,
            orbit,
        }
    }
}

fn rk4(a: &DMatrix<f64>, pos: &mut DMatrix<f64>, vel: &mut DMatrix<f64>, h: f64) {
    let k1x = vel.clone();
    let k1v = a * &*pos;
    let p2 = &*pos + &k1x * (0.5 * h);
    let v2 = &*vel + &k1v * (0.5 * h);
    let k2x = v2.clone();
    let k2v = a * &p2;
    let p3 = &*pos + &k2x * (0.5 * h);
    let v3 = &*vel + &k2v * (0.5 * h);
    let k3x = v3.clone();
    let k3v = a * &p3;
    let p4 = &*pos + &k3x * h;
    let v4 = &*vel + &k3v * h;
    let k4x = v4;
    let k4v = a * &p4;
    *pos += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
    *vel += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperbolic_killing_field_grows_like_cosh() {
        let o = JacobiOracle::new(Model::ConstantCurvature { dim: 3, kappa: -1.0 });
        let s = o.sample(0.0, &[0.0, 1.0, 2.0]);
        for x in &s {
            assert!((x.k - x.t.cosh()).abs() < 1e-12 * x.t.cosh());
            assert!((x.normal_inner - x.t.cosh()).abs() < 1e-12 * x.t.cosh());
            assert!(x.hor_w.norm() < 1e-14);
        }
    }

    #[test]
    fn complex_plane_axis_point() {
        let o = JacobiOracle::new(Model::ComplexHyperbolicPlane);
        let s = o.sample(0.7, &[0.0]);
        assert!((s[0].k - 1.0).abs() < 1e-15);
        assert!((s[0].normal_inner - 1.0).abs() < 1e-15);
        assert!(s[0].hor_w.norm() < 1e-15);
    }

    #[test]
    fn chart_fields_are_azimuth_independent() {
        let o = JacobiOracle::new(Model::ComplexHyperbolicPlane);
        let a = o.chart_sample(0.8, 0.6, 0.0);
        let b = o.chart_sample(0.8, 0.6, 2.1);
        assert!((&a.orbit - &b.orbit).amax() < 1e-12);
        assert!((&a.w - &b.w).amax() < 1e-12);
        assert!((a.section[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(a.w[0].abs() < 1e-12);
    }
}
