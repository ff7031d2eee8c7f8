//! SPH kernel, anisotropic metric, smoothing length and normal gate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::brep::{BrepSample, SampleSource};
use crate::geom::Vec3;

/// Cubic-spline kernel in 3D with compact support `q < 2`.
pub fn sph_kernel(q: f64, h: f64) -> f64 {
    assert!(h > 0.0, "smoothing length must be positive");
    let norm = 1.0 / (PI * h * h * h);
    if q < 1.0 {
        norm * (1.0 - 1.5 * q * q + 0.75 * q * q * q)
    } else if q < 2.0 {
        let r = 2.0 - q;
        norm * 0.25 * r * r * r
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphConfig {
    pub alpha_e: f64,
    pub alpha_f: f64,
    /// Per-scale radius multipliers, increasing.
    pub gammas: Vec<f64>,
    /// Per-scale aggregation weights, summing to one.
    pub weights: Vec<f64>,
    /// `(σ_t, σ_u, σ_n)` on edge samples, dimensionless.
    pub sigma_edge: [f64; 3],
    /// Isotropic σ on face and corner samples.
    pub sigma_n: f64,
    pub eta: f64,
    /// Curvature floor as a multiple of `1 / diag`.
    pub epsilon_rel: f64,
    pub lambda_gate: f64,
    pub use_gate: bool,
    /// Neighborhood cap as a multiple of the largest `r_k`.
    pub max_radius: f64,
}

impl Default for SphConfig {
    fn default() -> Self {
        SphConfig {
            alpha_e: 0.05,
            alpha_f: 1.0,
            gammas: vec![0.5, 1.0, 2.0],
            weights: vec![0.25, 0.5, 0.25],
            sigma_edge: [2.0, 1.0, 1.0],
            sigma_n: 1.0,
            eta: 1.0,
            epsilon_rel: 1e-6,
            lambda_gate: 4.0,
            use_gate: true,
            max_radius: 2.0,
        }
    }
}

impl SphConfig {
    pub fn validate(&self) -> Result<(), String> {
        let [st, su, sn] = self.sigma_edge;
        if !(st >= su && su >= sn && sn > 0.0 && self.sigma_n > 0.0) {
            return Err("sigma ordering must satisfy sigma_t >= sigma_u >= sigma_n > 0".into());
        }
        if self.gammas.is_empty() || self.gammas.len() != self.weights.len() {
            return Err("gammas and weights must be non-empty and of equal length".into());
        }
        if self.gammas.windows(2).any(|w| w[1] <= w[0]) || self.gammas[0] <= 0.0 {
            return Err("gammas must be positive and strictly increasing".into());
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 || self.weights.iter().any(|w| *w < 0.0) {
            return Err("scale weights must be non-negative and sum to 1".into());
        }
        if !(self.eta > 0.0 && self.epsilon_rel > 0.0 && self.alpha_e > 0.0 && self.alpha_f > 0.0) {
            return Err("eta, epsilon, alpha_e and alpha_f must be positive".into());
        }
        if !(self.max_radius > 0.0 && self.lambda_gate >= 0.0) {
            return Err("max_radius must be positive and lambda_gate non-negative".into());
        }
        Ok(())
    }

    /// `(σ_t, σ_u, σ_n)` for a sample kind.
    pub fn sigmas(&self, source: SampleSource) -> [f64; 3] {
        match source {
            SampleSource::Edge => self.sigma_edge,
            _ => [self.sigma_n; 3],
        }
    }

    /// Single-scale, isotropic, ungated configuration.
    pub fn nearest_neighbor_limit() -> Self {
        SphConfig {
            gammas: vec![1.0],
            weights: vec![1.0],
            sigma_edge: [1.0; 3],
            use_gate: false,
            ..Default::default()
        }
    }
}

/// `√(dᵀ R diag(σ⁻²) Rᵀ d)` with `d = p − x`.
pub fn anisotropic_distance(p: &Vec3, x: &BrepSample, cfg: &SphConfig) -> f64 {
    metric_distance(p, x, cfg.sigmas(x.source))
}

pub(crate) fn metric_distance(p: &Vec3, x: &BrepSample, sigma: [f64; 3]) -> f64 {
    let d = p - x.position;
    let local = x.frame.tr_mul(&d);
    ((local.x / sigma[0]).powi(2) + (local.y / sigma[1]).powi(2) + (local.z / sigma[2]).powi(2)).sqrt()
}

/// `h = η·min(h*, R_κ)` with `R_κ = 1 / max(|κ1|, |κ2|, ε)`; `epsilon` is absolute.
pub fn smoothing_length(x: &BrepSample, cfg: &SphConfig, epsilon: f64) -> f64 {
    let h_star = match x.source {
        SampleSource::Face => cfg.alpha_f * x.scale,
        SampleSource::Edge | SampleSource::Corner => cfg.alpha_e * x.scale,
    };
    let kmax = x.curvature.map_or(0.0, |(k1, k2)| k1.abs().max(k2.abs()));
    cfg.eta * h_star.min(1.0 / kmax.max(epsilon))
}

/// `exp(−λ(1 − |n·n_i|))`, in `(0, 1]` for unit normals.
pub fn normal_gate(n: &Vec3, ni: &Vec3, lambda: f64) -> f64 {
    (-lambda * (1.0 - n.dot(ni).abs().min(1.0))).exp()
}

/// Multi-scale kernel weight of one candidate, before gating.
pub(crate) fn multiscale_weight(d: f64, h: f64, cfg: &SphConfig) -> f64 {
    cfg.gammas.iter().zip(&cfg.weights).map(|(g, w)| {
        let r = g * h;
        w * sph_kernel(d / r, r)
    }).sum()
}
