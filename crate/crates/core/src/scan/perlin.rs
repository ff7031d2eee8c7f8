//! Seeded improved gradient noise in 3D.

use rand::seq::SliceRandom;

use crate::geom::Vec3;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Perlin {
    perm: [u8; 512],
}

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn lerp(t: f64, a: f64, b: f64) -> f64 {
    a + t * (b - a)
}

/// Dot product with one of the twelve cube-edge gradients.
fn grad(hash: u8, x: f64, y: f64, z: f64) -> f64 {
    let h = hash & 15;
    let u = if h < 8 { x } else { y };
    let v = if h < 4 {
        y
    } else if h == 12 || h == 14 {
        x
    } else {
        z
    };
    (if h & 1 == 0 { u } else { -u }) + (if h & 2 == 0 { v } else { -v })
}

impl Perlin {
    pub fn new(seed: u64) -> Self {
        let mut p: Vec<u8> = (0..=255).collect();
        p.shuffle(&mut rng::tagged(seed, "perlin-permutation"));
        let mut perm = [0u8; 512];
        for i in 0..512 {
            perm[i] = p[i & 255];
        }
        Perlin { perm }
    }

    /// Noise value in `[-1, 1]`; exactly zero on the integer lattice.
    pub fn noise(&self, x: &Vec3) -> f64 {
        let (fx, fy, fz) = (x.x.floor(), x.y.floor(), x.z.floor());
        let (xi, yi, zi) = ((fx as i64 & 255) as usize, (fy as i64 & 255) as usize, (fz as i64 & 255) as usize);
        let (x, y, z) = (x.x - fx, x.y - fy, x.z - fz);
        let (u, v, w) = (fade(x), fade(y), fade(z));
        let p = &self.perm;
        let a = p[xi] as usize + yi;
        let (aa, ab) = (p[a] as usize + zi, p[a + 1] as usize + zi);
        let b = p[xi + 1] as usize + yi;
        let (ba, bb) = (p[b] as usize + zi, p[b + 1] as usize + zi);
        let n = lerp(
            w,
            lerp(
                v,
                lerp(u, grad(p[aa], x, y, z), grad(p[ba], x - 1.0, y, z)),
                lerp(u, grad(p[ab], x, y - 1.0, z), grad(p[bb], x - 1.0, y - 1.0, z)),
            ),
            lerp(
                v,
                lerp(u, grad(p[aa + 1], x, y, z - 1.0), grad(p[ba + 1], x - 1.0, y, z - 1.0)),
                lerp(u, grad(p[ab + 1], x, y - 1.0, z - 1.0), grad(p[bb + 1], x - 1.0, y - 1.0, z - 1.0)),
            ),
        );
        n.clamp(-1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    #[test]
    fn vanishes_on_lattice() {
        let p = Perlin::new(3);
        for i in -4..4 {
            for j in -4..4 {
                assert_eq!(p.noise(&Vec3::new(i as f64, j as f64, (i * j) as f64)), 0.0);
            }
        }
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let x = Vec3::new(0.31, 1.7, -2.2);
        assert_eq!(Perlin::new(9).noise(&x), Perlin::new(9).noise(&x));
        assert_ne!(Perlin::new(9).noise(&x), Perlin::new(10).noise(&x));
    }

    #[test]
    fn range_sweep() {
        let p = Perlin::new(11);
        let mut r = rng::stream(1, 2);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..1_000_000 {
            let x = Vec3::new(r.random_range(-50.0..50.0), r.random_range(-50.0..50.0), r.random_range(-50.0..50.0));
            let n = p.noise(&x);
            lo = lo.min(n);
            hi = hi.max(n);
        }
        assert!(lo >= -1.0 && hi <= 1.0);
        assert!(lo < -0.5 && hi > 0.5, "noise should use most of its range: {lo} {hi}");
    }

    #[test]
    fn continuous_across_cell_faces() {
        let p = Perlin::new(5);
        let d = 1e-9;
        let a = p.noise(&Vec3::new(1.0 - d, 0.4, 0.7));
        let b = p.noise(&Vec3::new(1.0 + d, 0.4, 0.7));
        assert!((a - b).abs() < 1e-7);
    }
}
