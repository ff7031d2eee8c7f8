//! Displacement-field families. Every field is computed at unit skill
//! (base amplitude `c_L·L`) and multiplied by `α(κ)` as the final step, so
//! fields for two skills under one seed differ by exactly that factor.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::StageRng;

use super::{SketchError, SkillParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineJitterParams {
    /// Mean-reversion rate times the curve length.
    pub mr_theta_rel: f64,
    pub mr_sigma: f64,
    pub bow_prob: f64,
    pub bow_amp: f64,
    /// Taper span as a fraction of the length, in `(0, 0.5)`.
    pub taper_len: f64,
    /// Endpoint offsets are drawn in `[−e, e]·A₀`.
    pub endpoint_offset: f64,
    /// Clip bound in units of `A₀`.
    pub clip: f64,
    /// Tangential jitter amplitude in units of `A₀`; the zero-mean jitter stays within twice this.
    pub jitter: f64,
    /// Odd moving-average window.
    pub window: usize,
}

impl Default for LineJitterParams {
    fn default() -> Self {
        LineJitterParams {
            mr_theta_rel: 2.0,
            mr_sigma: 0.4,
            bow_prob: 0.7,
            bow_amp: 0.8,
            taper_len: 0.1,
            endpoint_offset: 0.5,
            clip: 1.5,
            jitter: 0.1,
            window: 5,
        }
    }
}

impl LineJitterParams {
    pub fn validate(&self) -> Result<(), SketchError> {
        let ok = self.clip > 0.0
            && self.window >= 3
            && self.window % 2 == 1
            && self.taper_len > 0.0
            && self.taper_len < 0.5
            && (0.0..=1.0).contains(&self.bow_prob)
            && self.endpoint_offset >= 0.0
            && self.endpoint_offset <= self.clip
            && self.jitter >= 0.0
            && self.mr_sigma >= 0.0
            && self.mr_theta_rel >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(SketchError::Config("line jitter parameters out of range".into()))
        }
    }
}

/// `(Δu, Δt)` per sample plus the clipped pre-taper `u` field.
#[derive(Clone, Debug, PartialEq)]
pub struct LineField {
    pub du: Vec<f64>,
    pub dt: Vec<f64>,
    pub pre_taper: Vec<f64>,
}

impl LineField {
    fn scaled(self, a: f64) -> LineField {
        let s = |v: Vec<f64>| v.into_iter().map(|x| a * x).collect();
        LineField { du: s(self.du), dt: s(self.dt), pre_taper: s(self.pre_taper) }
    }
}

/// `clip(Δu_mr + Δu_bow)` for samples `s` over `[0, len]` with base amplitude `b0`.
fn walk_and_bow(s: &[f64], len: f64, b0: f64, lp: &LineJitterParams, rng: &mut StageRng) -> Vec<f64> {
    let theta = lp.mr_theta_rel / len;
    let mut u = 0.0;
    let mut walk = Vec::with_capacity(s.len());
    for i in 0..s.len() {
        if i > 0 {
            let ds = s[i] - s[i - 1];
            let xi: f64 = rng.sample(StandardNormal);
            u = u * (1.0 - theta * ds) + lp.mr_sigma * b0 * xi;
        }
        walk.push(u);
    }
    let bow_on = rng.random::<f64>() < lp.bow_prob;
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let cap = lp.clip * b0;
    s.iter()
        .zip(walk)
        .map(|(&si, w)| {
            let bow = if bow_on { sign * lp.bow_amp * b0 * (std::f64::consts::PI * si / len).sin() } else { 0.0 };
            (w + bow).clamp(-cap, cap)
        })
        .collect()
}

/// Linear ramp weight, 1 at the endpoint and 0 beyond `span`.
fn ramp(d: f64, span: f64) -> f64 {
    (1.0 - d / span).max(0.0)
}

/// Blends `field` toward endpoint offsets drawn in `[−e, e]·b0`.
fn taper(field: &[f64], s: &[f64], len: f64, b0: f64, lp: &LineJitterParams, rng: &mut StageRng) -> Vec<f64> {
    let o0 = rng.random_range(-1.0..=1.0) * lp.endpoint_offset * b0;
    let o1 = rng.random_range(-1.0..=1.0) * lp.endpoint_offset * b0;
    let span = lp.taper_len * len;
    field
        .iter()
        .zip(s)
        .map(|(&c, &si)| {
            let (w0, w1) = (ramp(si, span), ramp(len - si, span));
            c + w0 * (o0 - c) + w1 * (o1 - c)
        })
        .collect()
}

/// Centered moving average, truncated at the ends.
pub fn moving_average(x: &[f64], k: usize) -> Vec<f64> {
    let h = k / 2;
    (0..x.len())
        .map(|i| {
            let (a, b) = (i.saturating_sub(h), (i + h + 1).min(x.len()));
            x[a..b].iter().sum::<f64>() / (b - a) as f64
        })
        .collect()
}

fn tangential_jitter(n: usize, b0: f64, lp: &LineJitterParams, rng: &mut StageRng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0) * lp.jitter * b0).collect();
    let mean = raw.iter().sum::<f64>() / n.max(1) as f64;
    raw.into_iter().map(|x| x - mean).collect()
}

fn finish(pre: Vec<f64>, s: &[f64], len: f64, b0: f64, lp: &LineJitterParams, rng: &mut StageRng) -> LineField {
    let tapered = taper(&pre, s, len, b0, lp, rng);
    let du = moving_average(&tapered, lp.window);
    let dt = tangential_jitter(s.len(), b0, lp, rng);
    LineField { du, dt, pre_taper: pre }
}

/// Line-type field on arc-length samples `s` uniform over `[0, len]`.
pub fn line_field(s: &[f64], len: f64, sk: &SkillParams, lp: &LineJitterParams, rng: &mut StageRng) -> LineField {
    let b0 = sk.c_l * len;
    let pre = walk_and_bow(s, len, b0, lp, rng);
    finish(pre, s, len, b0, lp, rng).scaled(sk.alpha())
}

/// Arithmetic mean of overlapping per-window values; `parts` pairs sample
/// indices with their values. Samples outside every window get zero.
pub fn average_windows(n: usize, parts: &[(Vec<usize>, Vec<f64>)]) -> Vec<f64> {
    let mut sum = vec![0.0; n];
    let mut cnt = vec![0usize; n];
    for (idx, vals) in parts {
        for (&i, &v) in idx.iter().zip(vals) {
            sum[i] += v;
            cnt[i] += 1;
        }
    }
    sum.into_iter().zip(cnt).map(|(s, c)| if c > 0 { s / c as f64 } else { 0.0 }).collect()
}

/// `W` windows of length `2L/(W+1)` with 50% overlap covering `[0, len]`.
pub fn windows(len: f64, w: usize) -> Vec<[f64; 2]> {
    let l = 2.0 * len / (w as f64 + 1.0);
    (0..w)
        .map(|j| {
            let a = j as f64 * l / 2.0;
            [a, if j + 1 == w { len } else { a + l }]
        })
        .collect()
}

/// General-curve field: walk-and-bow per window on window-local arc length,
/// averaged over overlaps, then tapered, smoothed and jittered as a line.
pub fn general_field(s: &[f64], len: f64, sk: &SkillParams, lp: &LineJitterParams, w: usize, rng: &mut StageRng) -> LineField {
    let w = w.max(1);
    let wins = windows(len, w);
    let wl = wins[0][1] - wins[0][0];
    let b0 = sk.c_l * wl;
    let tol = 1e-12 * len;
    let parts: Vec<(Vec<usize>, Vec<f64>)> = wins
        .iter()
        .map(|[a, b]| {
            let idx: Vec<usize> = (0..s.len()).filter(|&i| s[i] >= a - tol && s[i] <= b + tol).collect();
            let local: Vec<f64> = idx.iter().map(|&i| (s[i] - a).max(0.0)).collect();
            let vals = if idx.is_empty() { Vec::new() } else { walk_and_bow(&local, wl, b0, lp, rng) };
            (idx, vals)
        })
        .collect();
    let pre = average_windows(s.len(), &parts);
    finish(pre, s, len, b0, lp, rng).scaled(sk.alpha())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArcJitterParams {
    pub harmonics: usize,
    /// Harmonic amplitudes `a_k, β_k` decay as `decay^k`.
    pub decay: f64,
    pub bulge_range: [f64; 2],
    /// Rise of the raised-cosine taper at each end, as a fraction of the span.
    pub taper_frac: f64,
    /// Opening probability at unit skill; scaled by `α(κ)`.
    pub skip_prob: f64,
    /// Longest opening as a fraction of the arc length.
    pub skip_span: f64,
}

impl Default for ArcJitterParams {
    fn default() -> Self {
        ArcJitterParams { harmonics: 3, decay: 0.5, bulge_range: [0.6, 1.0], taper_frac: 0.15, skip_prob: 0.3, skip_span: 0.05 }
    }
}

impl ArcJitterParams {
    pub fn validate(&self) -> Result<(), SketchError> {
        let ok = self.harmonics >= 1
            && self.decay >= 0.0
            && self.bulge_range[0] <= self.bulge_range[1]
            && self.taper_frac > 0.0
            && self.taper_frac <= 0.5
            && (0.0..=1.0).contains(&self.skip_prob)
            && (0.0..0.5).contains(&self.skip_span);
        if ok {
            Ok(())
        } else {
            Err(SketchError::Config("arc jitter parameters out of range".into()))
        }
    }
}

/// Raised-cosine taper on normalized arc length `f ∈ [0, 1]`: zero at both
/// ends exactly, one in the interior beyond `rise`.
pub fn taper_basis(f: f64, rise: f64) -> f64 {
    let d = f.min(1.0 - f);
    if d <= 0.0 {
        0.0
    } else if d >= rise {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * d / rise).cos())
    }
}

/// Random coefficients of one arc field. Index `k − 1` holds harmonic `k`;
/// entries of `a` and `psi` at index 0 are unused.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcDraw {
    pub amp: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub a: Vec<f64>,
    pub psi: Vec<f64>,
    pub beta: Vec<f64>,
    pub eta: Vec<f64>,
}

impl ArcDraw {
    /// Draws coefficients for base amplitude `b0` on a circle of radius `r`.
    pub fn sample(b0: f64, r: f64, ap: &ArcJitterParams, rng: &mut StageRng) -> ArcDraw {
        let tau = std::f64::consts::TAU;
        let [lo, hi] = ap.bulge_range;
        let alpha1 = rng.random_range(lo..=hi);
        let alpha2 = rng.random_range(lo..=hi);
        let phi1 = rng.random_range(0.0..tau);
        let phi2 = rng.random_range(0.0..tau);
        let h = ap.harmonics;
        let psi = (1..=h).map(|k| if k >= 2 { rng.random_range(0.0..tau) } else { 0.0 }).collect();
        let eta = (1..=h).map(|_| rng.random_range(0.0..tau)).collect();
        let a = (1..=h).map(|k| if k >= 2 { b0 * ap.decay.powi(k as i32) } else { 0.0 }).collect();
        let beta = (1..=h).map(|k| b0 / r * ap.decay.powi(k as i32)).collect();
        ArcDraw { amp: b0, alpha1, alpha2, phi1, phi2, a, psi, beta, eta }
    }

    /// `(Δr, Δθ)` before the taper: `B(θ)c` and `V(θ)d` with unit taper.
    pub fn raw(&self, theta: f64) -> (f64, f64) {
        let mut dr = self.amp * self.alpha1 * (theta + self.phi1).cos() + 0.5 * self.amp * self.alpha2 * (theta + self.phi2).sin();
        for k in 2..=self.a.len() {
            let (kf, ak, psi) = (k as f64, self.a[k - 1], self.psi[k - 1]);
            dr += ak * (kf * theta + psi).sin() + 0.6 * ak * (kf * theta + 0.73 * psi).cos();
        }
        let dth = (1..=self.beta.len()).map(|k| self.beta[k - 1] * (k as f64 * theta + self.eta[k - 1]).sin()).sum();
        (dr, dth)
    }
}

/// `(Δr, Δθ)` per sample; `f` is normalized arc length with `f[0] = 0` and
/// `f[n−1] = 1`, so both ends are exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcField {
    pub dr: Vec<f64>,
    pub dtheta: Vec<f64>,
    pub draw: ArcDraw,
}

pub fn arc_field(theta: &[f64], f: &[f64], len: f64, radius: f64, sk: &SkillParams, ap: &ArcJitterParams, rng: &mut StageRng) -> ArcField {
    let draw = ArcDraw::sample(sk.c_l * len, radius, ap, rng);
    let a = sk.alpha();
    let (mut dr, mut dtheta) = (Vec::with_capacity(theta.len()), Vec::with_capacity(theta.len()));
    for (&th, &fi) in theta.iter().zip(f) {
        let t = taper_basis(fi, ap.taper_frac);
        let (r, q) = draw.raw(th);
        dr.push(a * (t * r));
        dtheta.push(a * (t * q));
    }
    ArcField { dr, dtheta, draw }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn grid(n: usize, len: f64) -> Vec<f64> {
        (0..n).map(|i| len * i as f64 / (n - 1) as f64).collect()
    }

    fn sk(k: u8) -> SkillParams {
        SkillParams { kappa: k, c_l: 5e-3 }
    }

    #[test]
    fn skill_scaling_is_exact() {
        let s = grid(30, 2.0);
        let lp = LineJitterParams::default();
        for seed in 0..50 {
            let f1 = line_field(&s, 2.0, &sk(1), &lp, &mut rng::stream(seed, 1));
            let f5 = line_field(&s, 2.0, &sk(5), &lp, &mut rng::stream(seed, 1));
            for i in 0..s.len() {
                assert_eq!(f5.du[i], 0.2 * f1.du[i]);
                assert_eq!(f5.dt[i], 0.2 * f1.dt[i]);
            }
        }
    }

    #[test]
    fn null_line_field() {
        let lp = LineJitterParams { mr_sigma: 0.0, bow_amp: 0.0, endpoint_offset: 0.0, jitter: 0.0, ..Default::default() };
        let s = grid(20, 1.0);
        let f = line_field(&s, 1.0, &sk(2), &lp, &mut rng::stream(3, 3));
        assert!(f.du.iter().chain(&f.dt).all(|&x| x == 0.0));
    }

    #[test]
    fn clip_law_sweep() {
        let lp = LineJitterParams { mr_sigma: 3.0, bow_prob: 1.0, bow_amp: 2.0, ..Default::default() };
        let s = grid(40, 3.0);
        let skill = sk(1);
        let cap = lp.clip * skill.a0(3.0);
        let mut hit = false;
        for seed in 0..1000 {
            let f = line_field(&s, 3.0, &skill, &lp, &mut rng::stream(seed, 0));
            for (&p, (&u, &t)) in f.pre_taper.iter().zip(f.du.iter().zip(&f.dt)) {
                assert!(p.abs() <= cap * (1.0 + 1e-12));
                assert!(u.abs() <= cap * (1.0 + 1e-12));
                assert!(t.abs() <= 2.0 * lp.jitter * skill.a0(3.0) * (1.0 + 1e-12));
                hit |= (p.abs() - cap).abs() < 1e-15;
            }
            assert!(f.dt.iter().sum::<f64>().abs() < 1e-12);
        }
        assert!(hit, "sweep should saturate the clip");
    }

    #[test]
    fn moving_average_truncates() {
        assert_eq!(moving_average(&[3.0, 0.0, 0.0, 0.0, 6.0], 3), vec![1.5, 1.0, 0.0, 2.0, 3.0]);
    }

    #[test]
    fn single_window_equals_line() {
        let s = grid(25, 1.7);
        let lp = LineJitterParams::default();
        for seed in 0..20 {
            let a = line_field(&s, 1.7, &sk(3), &lp, &mut rng::stream(seed, 9));
            let b = general_field(&s, 1.7, &sk(3), &lp, 1, &mut rng::stream(seed, 9));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn overlap_average() {
        let w = windows(3.0, 2);
        assert_eq!(w, vec![[0.0, 2.0], [1.0, 3.0]]);
        let parts = vec![(vec![0, 1, 2], vec![2.0, 2.0, 2.0]), (vec![1, 2, 3], vec![5.0, 5.0, 5.0])];
        assert_eq!(average_windows(4, &parts), vec![2.0, 3.5, 3.5, 5.0]);
    }

    #[test]
    fn general_field_respects_window_clip() {
        let lp = LineJitterParams { mr_sigma: 2.0, ..Default::default() };
        let s = grid(60, 4.0);
        let skill = sk(3);
        for w in 1..6 {
            let wl = { let v = windows(4.0, w); v[0][1] - v[0][0] };
            let cap = lp.clip * skill.a0(wl);
            for seed in 0..100 {
                let f = general_field(&s, 4.0, &skill, &lp, w, &mut rng::stream(seed, w as u64));
                assert!(f.du.iter().all(|u| u.abs() <= cap * (1.0 + 1e-12)));
            }
        }
    }

    #[test]
    fn arc_raw_matches_expansion() {
        let (alpha2, phi2) = (0.8, 0.4);
        let d = ArcDraw {
            amp: 0.1,
            alpha1: 1.0,
            alpha2,
            phi1: 0.0,
            phi2,
            a: vec![0.0],
            psi: vec![0.0],
            beta: vec![0.0],
            eta: vec![1.3],
        };
        for i in 0..50 {
            let th = i as f64 * 0.13 - 2.0;
            let (r, q) = d.raw(th);
            assert!((r - (0.1 * th.cos() + 0.05 * alpha2 * (th + phi2).sin())).abs() < 1e-15);
            assert_eq!(q, 0.0);
        }
    }

    #[test]
    fn arc_endpoints_and_null_field() {
        let n = 37;
        let f: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let th: Vec<f64> = f.iter().map(|x| 0.3 + 2.0 * x).collect();
        for seed in 0..100 {
            let a = arc_field(&th, &f, 2.0, 1.0, &sk(1), &ArcJitterParams::default(), &mut rng::stream(seed, 5));
            assert_eq!((a.dr[0], a.dr[n - 1], a.dtheta[0], a.dtheta[n - 1]), (0.0, 0.0, 0.0, 0.0));
            assert!(a.draw.alpha1 >= 0.6 && a.draw.alpha1 <= 1.0 && a.draw.alpha2 >= 0.6 && a.draw.alpha2 <= 1.0);
            let b = arc_field(&th, &f, 2.0, 1.0, &sk(5), &ArcJitterParams::default(), &mut rng::stream(seed, 5));
            for i in 0..n {
                assert_eq!(b.dr[i], 0.2 * a.dr[i]);
                assert_eq!(b.dtheta[i], 0.2 * a.dtheta[i]);
            }
        }
        let zero = ArcDraw { amp: 0.0, alpha1: 0.7, alpha2: 0.7, phi1: 0.1, phi2: 0.2, a: vec![0.0; 3], psi: vec![0.5; 3], beta: vec![0.0; 3], eta: vec![0.1; 3] };
        assert_eq!(zero.raw(0.7), (0.0, 0.0));
    }

    #[test]
    fn taper_basis_shape() {
        assert_eq!(taper_basis(0.0, 0.15), 0.0);
        assert_eq!(taper_basis(1.0, 0.15), 0.0);
        assert_eq!(taper_basis(0.5, 0.15), 1.0);
        assert!((taper_basis(0.075, 0.15) - 0.5).abs() < 1e-12);
    }
}
