use a2z_core::annot::{soft_label, sph_kernel, SphConfig};
use a2z_core::brep::{sample_brep, BrepSample, SamplingConfig};
use a2z_core::eval::{dataset_analytics, pr_metrics, semivariogram, DetectionResult, SemivariogramConfig};
use a2z_core::fixtures::{self, TessOptions};
use a2z_core::geom::Vec3;
use a2z_core::mesh::upsample_mesh;
use a2z_core::par::Exec;
use a2z_core::rng;
use a2z_core::scan::{dent_displacement, roughness_displacement, shrink_displacement, Dent, Perlin, RoughnessConfig, RoughnessParams, ShrinkParams};
use a2z_core::sketch::{line_field, LineJitterParams, SkillParams};
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vec3> {
    vec3(1.0).prop_filter("non-zero", |v| v.norm() > 1e-3).prop_map(|v| v.normalize())
}

fn detection(n: usize) -> impl Strategy<Value = DetectionResult> {
    (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n)).prop_map(|(b, j)| DetectionResult::new(b, j).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pr_values_bounded_and_junction_nested((gt, pred) in (1usize..200).prop_flat_map(|n| (detection(n), detection(n)))) {
        let r = pr_metrics(&gt, &pred).unwrap();
        for p in [r.boundary, r.junction] {
            prop_assert!((0.0..=1.0).contains(&p.recall) && (0.0..=1.0).contains(&p.precision));
        }
        prop_assert!(r.junction.tp <= r.boundary.tp);
        prop_assert_eq!(r.boundary.tp + r.boundary.fn_, gt.boundary.iter().filter(|b| **b).count());
    }

    #[test]
    fn semivariogram_counts_and_sign(pts in prop::collection::vec(vec3(2.0), 2..120), seed in any::<u64>()) {
        let field: Vec<f64> = pts.iter().map(|p| (3.0 * p.x).sin() + p.y * p.z).collect();
        let cfg = SemivariogramConfig::default();
        let r = semivariogram(&pts, &field, &cfg, seed, Exec::Sequential).unwrap();
        let n = pts.len() as u64;
        prop_assert_eq!(r.counts.iter().sum::<u64>(), n * (n - 1) / 2);
        prop_assert!(r.gamma.iter().all(|g| *g >= 0.0));
        prop_assert!(r.counts.iter().all(|c| *c > 0));
    }

    #[test]
    fn semivariogram_ignores_field_offset(pts in prop::collection::vec(vec3(1.0), 2..80), shift in -1e3f64..1e3) {
        let field: Vec<f64> = pts.iter().map(|p| p.x - 2.0 * p.y).collect();
        let moved: Vec<f64> = field.iter().map(|f| f + shift).collect();
        let cfg = SemivariogramConfig::default();
        let a = semivariogram(&pts, &field, &cfg, 0, Exec::Sequential).unwrap();
        let b = semivariogram(&pts, &moved, &cfg, 0, Exec::Sequential).unwrap();
        prop_assert_eq!(&a.counts, &b.counts);
        for (x, y) in a.gamma.iter().zip(&b.gamma) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + shift.abs()).powi(2));
        }
    }

    #[test]
    fn kernel_is_continuous_and_decreasing(q in 0.0f64..2.5, h in 1e-3f64..10.0) {
        let e = 1e-9;
        let w = sph_kernel(q, h);
        prop_assert!(w >= 0.0);
        prop_assert!(sph_kernel(q + e, h) <= w + 1e-12 * sph_kernel(0.0, h));
        for knot in [1.0, 2.0] {
            let jump = (sph_kernel(knot - e, h) - sph_kernel(knot + e, h)).abs();
            prop_assert!(jump <= 1e-6 * sph_kernel(0.0, h));
        }
    }

    #[test]
    fn soft_label_distribution_is_normalized(p in vec3(1.5), seed in 0u64..1000) {
        let f = fixtures::unit_cube();
        let samples = sample_brep(&f.brep, &SamplingConfig { face_pitch_rel: 0.1, ..Default::default() }).unwrap();
        let mut rng_idx = rng::stream(seed, 0);
        let cand: Vec<&BrepSample> = rand::seq::IndexedRandom::choose_multiple(samples.samples.as_slice(), &mut rng_idx, 40).collect();
        let cfg = SphConfig { gammas: vec![4.0, 8.0, 16.0], ..Default::default() };
        let l = soft_label(&p, &cand, &cfg, 1e-6, None).unwrap();
        let total: f64 = l.distribution.iter().map(|d| d.1).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        prop_assert!(l.prob > 0.0 && l.prob <= 1.0);
        prop_assert!(l.distribution.iter().any(|d| d.0 == l.winner));
    }

    #[test]
    fn roughness_stays_within_amplitude(x in vec3(10.0), n in unit(), seed in any::<u64>(), diag in 0.1f64..100.0) {
        let r = RoughnessParams::from_config(&RoughnessConfig::default(), diag, seed);
        let d = roughness_displacement(&x, &n, &r, &Perlin::new(seed));
        prop_assert!(d.norm() <= r.amplitude * (1.0 + 1e-12));
        prop_assert!(d.cross(&n).norm() <= 1e-12 * (1.0 + r.amplitude));
    }

    #[test]
    fn shrink_is_tangential(x in vec3(1.0), c in vec3(1.0), n in unit(), eta in 0.0f64..1.0) {
        let p = ShrinkParams { eta, influence_radius: 10.0, ..Default::default() };
        let poly = [c + n.cross(&Vec3::x()), c - n.cross(&Vec3::y())];
        let d = shrink_displacement(&x, &c, &n, &poly, 1.0, &p);
        prop_assert!(d.dot(&n).abs() <= 1e-12);
    }

    #[test]
    fn dent_peak_is_depth(seed in vec3(1.0), n in unit(), depth in 1e-4f64..0.1, radius in 1e-3f64..1.0, bump in 0.0f64..0.01) {
        let d = Dent { face: 0, seed, depth, radius, bump };
        prop_assert_eq!(dent_displacement(&seed, &n, &n, &d), -n * depth);
    }

    #[test]
    fn line_field_scales_exactly_with_skill(seed in any::<u64>(), len in 0.01f64..100.0, n in 2usize..60) {
        let s: Vec<f64> = (0..n).map(|i| len * i as f64 / (n - 1) as f64).collect();
        let lp = LineJitterParams::default();
        let f1 = line_field(&s, len, &SkillParams::new(1, 5e-3).unwrap(), &lp, &mut rng::stream(seed, 9));
        let f5 = line_field(&s, len, &SkillParams::new(5, 5e-3).unwrap(), &lp, &mut rng::stream(seed, 9));
        for i in 0..n {
            prop_assert_eq!(f5.du[i], 0.2 * f1.du[i]);
            prop_assert_eq!(f5.dt[i], 0.2 * f1.dt[i]);
        }
    }

    #[test]
    fn subdivision_counts(nu in 3usize..20, nv in 3usize..20, it in 1u32..3) {
        let m = fixtures::torus_mesh(2.0, 0.5, nu, nv);
        let mut v = m.n_vertices();
        let mut e = m.edges().len();
        let mut t = m.n_triangles();
        for _ in 0..it {
            (v, e, t) = (v + e, 2 * e + 3 * t, 4 * t);
        }
        let up = upsample_mesh(&m, it).unwrap();
        prop_assert_eq!((up.n_vertices(), up.edges().len(), up.n_triangles()), (v, e, t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn analytics_aggregate_is_the_sum(picks in prop::collection::vec(0usize..20, 1..6)) {
        let suite = fixtures::suite();
        let batch: Vec<(&str, &_)> = picks.iter().map(|&i| (suite[i].name.as_str(), &suite[i].brep)).collect();
        let r = dataset_analytics(&batch, Exec::default()).unwrap();
        let area: u64 = r.models.iter().map(|m| m.face_area.total()).sum();
        prop_assert_eq!(r.aggregate.face_area.total(), area);
        let faces: usize = batch.iter().map(|(_, c)| c.faces.len()).sum();
        prop_assert_eq!(area as usize, faces);
        for k in 0..r.aggregate.coedge_length.counts.len() {
            prop_assert_eq!(r.aggregate.coedge_length.counts[k], r.models.iter().map(|m| m.coedge_length.counts[k]).sum::<u64>());
        }
    }

    #[test]
    fn extrusion_meshes_are_closed(n in 3usize..9, side in 0.2f64..3.0, frac in 0.1f64..0.5) {
        let r = side / (2.0 * (std::f64::consts::PI / n as f64).sin());
        let pts = (0..n).map(|k| {
            let a = std::f64::consts::TAU * k as f64 / n as f64 + 0.3;
            ([r * a.cos(), r * a.sin()], fixtures::Seg::Line)
        });
        let x = fixtures::Extrusion { outer: fixtures::Shape::Path(pts.collect()), holes: Vec::new(), height: side };
        let m = fixtures::extrude_mesh(&x, &TessOptions { edge_len: side * frac, ..Default::default() });
        prop_assert!(m.edge_triangles().values().all(|t| t.len() == 2));
    }
}
