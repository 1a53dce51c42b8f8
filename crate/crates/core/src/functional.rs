//! The area functional of a two-sided graph along the orbits and its
//! regularization `A_ε(u) = A(u) + ε ∫ |du|²`.
//!
//! On each simplex the integrand is
//! `f(p) = sqrt(1 + k² |w + dh + p|²) + sqrt(1 + k² |w - dh + p|²)`,
//! where `p = du` and all norms are taken with the orbit-space metric `g`.
//! Covectors are stored in chart coordinates; vectors are obtained by raising
//! the index with `g⁻¹`.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{Chart, NodalFunction};
use crate::error::{Error, Result};
use crate::linalg::ProfileMatrix;

/// Pointwise integrand data on one simplex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integrand {
    pub metric_inv: Matrix3<f64>,
    pub k: f64,
    pub w: Vector3<f64>,
    pub dh: Vector3<f64>,
}

/// `V = k (W + ∇u)` and `V± = k (W ± ∇h + ∇u)` as covectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationVectors {
    pub v: Vector3<f64>,
    pub v_plus: Vector3<f64>,
    pub v_minus: Vector3<f64>,
}

/// Squared norms of the tangential projections `P(X)`, `P⁺(X)`, `P⁻(X)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projections {
    pub p: f64,
    pub p_plus: f64,
    pub p_minus: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityBounds {
    pub mu1: f64,
    pub mu2: f64,
}

impl Integrand {
    #[inline]
    pub fn norm_sq(&self, x: &Vector3<f64>) -> f64 {
        x.dot(&(self.metric_inv * x))
    }

    #[inline]
    pub fn inner(&self, x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
        x.dot(&(self.metric_inv * y))
    }

    #[inline]
    fn sheets(&self, p: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
        (self.w + self.dh + p, self.w - self.dh + p)
    }

    /// `f(p)`
    pub fn value(&self, p: &Vector3<f64>) -> f64 {
        let (a, b) = self.sheets(p);
        let k2 = self.k * self.k;
        (1.0 + k2 * self.norm_sq(&a)).sqrt() + (1.0 + k2 * self.norm_sq(&b)).sqrt()
    }

    /// `f(p) + ε |p|²`
    pub fn value_eps(&self, p: &Vector3<f64>, eps: f64) -> f64 {
        self.value(p) + eps * self.norm_sq(p)
    }

    /// Single-sheet integrand `sqrt(1 + k² |w + p|²)`.
    pub fn graph_value(&self, p: &Vector3<f64>) -> f64 {
        (1.0 + self.k * self.k * self.norm_sq(&(self.w + p))).sqrt()
    }

    /// Derivative of `f_ε` with respect to the covector `p`.
    pub fn gradient(&self, p: &Vector3<f64>, eps: f64) -> Vector3<f64> {
        let (a, b) = self.sheets(p);
        let k2 = self.k * self.k;
        let (ga, gb) = (self.metric_inv * a, self.metric_inv * b);
        let sa = (1.0 + k2 * a.dot(&ga)).sqrt();
        let sb = (1.0 + k2 * b.dot(&gb)).sqrt();
        ga * (k2 / sa) + gb * (k2 / sb) + self.metric_inv * p * (2.0 * eps)
    }

    /// Second derivative of `f_ε` with respect to `p`.
    pub fn hessian(&self, p: &Vector3<f64>, eps: f64) -> Matrix3<f64> {
        let (a, b) = self.sheets(p);
        let k2 = self.k * self.k;
        let mut out = self.metric_inv * (2.0 * eps);
        for c in [a, b] {
            let gc = self.metric_inv * c;
            let s = (1.0 + k2 * c.dot(&gc)).sqrt();
            out += self.metric_inv * (k2 / s) - gc * gc.transpose() * (k2 * k2 / (s * s * s));
        }
        out
    }

    /// The second variation form `ddf(X, Y)` at `p` (no regularization).
    pub fn ddf(&self, p: &Vector3<f64>, x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
        x.dot(&(self.hessian(p, 0.0) * y))
    }

    pub fn variation(&self, p: &Vector3<f64>) -> VariationVectors {
        let (a, b) = self.sheets(p);
        VariationVectors {
            v: (self.w + p) * self.k,
            v_plus: a * self.k,
            v_minus: b * self.k,
        }
    }

    fn project(&self, v: &Vector3<f64>, x: &Vector3<f64>) -> f64 {
        let vx = self.inner(v, x);
        (self.norm_sq(x) - vx * vx / (1.0 + self.norm_sq(v))).max(0.0)
    }

    pub fn projections(&self, p: &Vector3<f64>, x: &Vector3<f64>) -> Projections {
        let vv = self.variation(p);
        Projections {
            p: self.project(&vv.v, x),
            p_plus: self.project(&vv.v_plus, x),
            p_minus: self.project(&vv.v_minus, x),
        }
    }

    /// `ddf(X, X)` expressed through the sheet projections.
    pub fn ddf_from_projections(&self, p: &Vector3<f64>, x: &Vector3<f64>) -> f64 {
        let vv = self.variation(p);
        let pr = self.projections(p, x);
        let k2 = self.k * self.k;
        k2 * pr.p_plus / (1.0 + self.norm_sq(&vv.v_plus)).sqrt()
            + k2 * pr.p_minus / (1.0 + self.norm_sq(&vv.v_minus)).sqrt()
    }

    pub fn ellipticity_bounds(&self) -> EllipticityBounds {
        let k2 = self.k * self.k;
        let aw = (1.0 + k2 * self.norm_sq(&self.w)).sqrt();
        let ah = 1.0 + k2 * self.norm_sq(&self.dh);
        EllipticityBounds {
            mu1: self.k / (2.0 * aw * ah.powf(1.5)),
            mu2: 16.0 * k2 * aw * ah.powf(2.5),
        }
    }
}

/// The area functional on a chart; the thickness is taken from the chart.
#[derive(Clone, Copy)]
pub struct AreaFunctional<'c> {
    pub chart: &'c Chart,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::parameter("eps", format!("must be finite and ≥ 0 (got {eps})")));
    }
    Ok(())
}

impl<'c> AreaFunctional<'c> {
    pub fn new(chart: &'c Chart) -> Self {
        Self { chart }
    }

    pub fn integrand(&self, s: usize) -> Integrand {
        let f = &self.chart.fields;
        Integrand {
            metric_inv: f.metric_inv[s],
            k: f.k[s],
            w: f.w[s],
            dh: self.chart.thickness.grad[s],
        }
    }

    fn check_len(&self, u: &NodalFunction) -> Result<()> {
        if u.values.len() != self.chart.node_count() {
            return Err(Error::Data(format!(
                "function has {} values for {} nodes",
                u.values.len(),
                self.chart.node_count()
            )));
        }
        Ok(())
    }

    fn per_simplex<F>(&self, u: &NodalFunction, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&Integrand, &Vector3<f64>) -> f64 + Sync,
    {
        self.check_len(u)?;
        let grid = &self.chart.grid;
        let jump = u.jump();
        Ok((0..grid.simplex_count())
            .into_par_iter()
            .map(|s| f(&self.integrand(s), &grid.simplex_gradient(s, &u.values, jump)))
            .collect())
    }

    /// `A(u)`
    pub fn area(&self, u: &NodalFunction) -> Result<f64> {
        self.chart.integrate(&self.per_simplex(u, |f, p| f.value(p))?)
    }

    /// `A_ε(u) = A(u) + ε ∫ |du|²`
    pub fn area_eps(&self, u: &NodalFunction, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        self.chart.integrate(&self.per_simplex(u, |f, p| f.value_eps(p, eps))?)
    }

    /// Area of the single graph `x ↦ τ(u(x), σ(x))`.
    pub fn graph_area(&self, u: &NodalFunction) -> Result<f64> {
        self.chart.integrate(&self.per_simplex(u, |f, p| f.graph_value(p))?)
    }

    /// `∫ |du|²`
    pub fn dirichlet_energy(&self, u: &NodalFunction) -> Result<f64> {
        self.chart.integrate(&self.per_simplex(u, |f, p| f.norm_sq(p))?)
    }

    /// Pointwise `|du|_g` per simplex.
    pub fn gradient_norms(&self, u: &NodalFunction) -> Result<Vec<f64>> {
        self.per_simplex(u, |f, p| f.norm_sq(p).sqrt())
    }

    fn scatter<const N: usize>(&self, local: Vec<[f64; N]>) -> Vec<f64> {
        let grid = &self.chart.grid;
        let mut out = vec![0.0; grid.node_count()];
        for (s, loc) in local.iter().enumerate() {
            for (j, &v) in grid.verts(s).iter().enumerate() {
                out[v] += loc[j];
            }
        }
        out
    }

    /// Assembled first variation: `r_i = ∫ df_ε(dφ_i)` for every nodal basis function.
    pub fn first_variation(&self, u: &NodalFunction, eps: f64) -> Result<Vec<f64>> {
        check_eps(eps)?;
        self.check_len(u)?;
        let grid = &self.chart.grid;
        let jump = u.jump();
        let weights = &self.chart.fields.weight;
        let local: Vec<[f64; 4]> = (0..grid.simplex_count())
            .into_par_iter()
            .map(|s| {
                let p = grid.simplex_gradient(s, &u.values, jump);
                let q = self.integrand(s).gradient(&p, eps) * weights[s];
                let mut loc = [0.0; 4];
                for j in 0..=grid.dim {
                    loc[j] = q.dot(&grid.basis_grads[s][j]);
                }
                loc
            })
            .collect();
        Ok(self.scatter(local))
    }

    /// Action of the second variation on `direction` (winding of `direction` ignored).
    pub fn second_variation_apply(&self, u: &NodalFunction, eps: f64, direction: &NodalFunction) -> Result<Vec<f64>> {
        check_eps(eps)?;
        self.check_len(u)?;
        self.check_len(direction)?;
        let grid = &self.chart.grid;
        let jump = u.jump();
        let weights = &self.chart.fields.weight;
        let local: Vec<[f64; 4]> = (0..grid.simplex_count())
            .into_par_iter()
            .map(|s| {
                let p = grid.simplex_gradient(s, &u.values, jump);
                let dp = grid.simplex_gradient(s, &direction.values, 0.0);
                let q = self.integrand(s).hessian(&p, eps) * dp * weights[s];
                let mut loc = [0.0; 4];
                for j in 0..=grid.dim {
                    loc[j] = q.dot(&grid.basis_grads[s][j]);
                }
                loc
            })
            .collect();
        Ok(self.scatter(local))
    }

    /// Element stiffness matrices of the second variation.
    fn element_hessians(&self, u: &NodalFunction, eps: f64) -> Vec<[[f64; 4]; 4]> {
        let grid = &self.chart.grid;
        let jump = u.jump();
        let weights = &self.chart.fields.weight;
        (0..grid.simplex_count())
            .into_par_iter()
            .map(|s| {
                let p = grid.simplex_gradient(s, &u.values, jump);
                let h = self.integrand(s).hessian(&p, eps) * weights[s];
                let g = &grid.basis_grads[s];
                let mut m = [[0.0; 4]; 4];
                for a in 0..=grid.dim {
                    let hg = h * g[a];
                    for b in 0..=a {
                        m[a][b] = hg.dot(&g[b]);
                    }
                }
                m
            })
            .collect()
    }

    /// Assemble the second variation into `matrix` (overwriting it).
    ///
    /// `matrix` must have been created from the grid adjacency.
    pub fn assemble_hessian(&self, u: &NodalFunction, eps: f64, matrix: &mut ProfileMatrix) -> Result<()> {
        check_eps(eps)?;
        self.check_len(u)?;
        let grid = &self.chart.grid;
        matrix.clear();
        for (s, m) in self.element_hessians(u, eps).iter().enumerate() {
            let v = grid.verts(s);
            for a in 0..v.len() {
                for b in 0..=a {
                    let val = m[a][b];
                    if v[a] == v[b] {
                        matrix.add(v[a], v[a], if a == b { val } else { 2.0 * val });
                    } else {
                        matrix.add(v[a], v[b], val);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn variation_vectors(&self, u: &NodalFunction) -> Result<Vec<VariationVectors>> {
        self.check_len(u)?;
        let du = self.chart.discrete_gradient(u);
        Ok(du.iter().enumerate().map(|(s, p)| self.integrand(s).variation(p)).collect())
    }

    /// Projections of per-simplex covectors `x` at the current `u`.
    pub fn projections(&self, u: &NodalFunction, x: &[Vector3<f64>]) -> Result<Vec<Projections>> {
        self.check_len(u)?;
        if x.len() != self.chart.simplex_count() {
            return Err(Error::Data("one covector per simplex required".to_string()));
        }
        let du = self.chart.discrete_gradient(u);
        Ok(du
            .iter()
            .zip(x)
            .enumerate()
            .map(|(s, (p, xs))| self.integrand(s).projections(p, xs))
            .collect())
    }

    pub fn ellipticity_bounds(&self) -> Vec<EllipticityBounds> {
        (0..self.chart.simplex_count())
            .map(|s| self.integrand(s).ellipticity_bounds())
            .collect()
    }
}
