use std::collections::BTreeSet;

use a2z_core::annot::{annotate_scan, coverage_stats, soft_label, LabelKind, SampleIndex, SphConfig};
use a2z_core::brep::{topo_walk, BrepSample, ChainComplex, SampleSource, SamplingConfig, Step};
use a2z_core::fixtures::{self, Extrusion, Fixture, Seg, Shape, TessOptions};
use a2z_core::mesh::ScanMesh;
use a2z_core::par::Exec;
use a2z_core::scan::{synthesize_scan, ScanConfig, ScanOutput};

fn scan(f: &Fixture, cfg: &ScanConfig, seed: u64) -> ScanOutput {
    synthesize_scan(&f.brep, &f.mesh, cfg, seed, Exec::default()).unwrap()
}

fn labeled(f: &Fixture, cfg: &ScanConfig, sph: &SphConfig) -> ScanMesh {
    let out = scan(f, cfg, 3);
    annotate_scan(&f.brep, &out.mesh, &out.samples, sph, Exec::default()).unwrap()
}

/// Connected components of the vertices selected by `keep`.
fn components(m: &ScanMesh, keep: impl Fn(usize) -> bool) -> usize {
    let n = m.n_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (a, b) in m.edges() {
        let (a, b) = (a as usize, b as usize);
        if keep(a) && keep(b) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    (0..n).filter(|&v| keep(v)).map(|v| find(&mut parent, v)).collect::<BTreeSet<_>>().len()
}

#[test]
fn suite_coverage_meets_thresholds() {
    for (i, f) in fixtures::suite().iter().enumerate() {
        let out = scan(f, &ScanConfig::default(), i as u64);
        let lab = annotate_scan(&f.brep, &out.mesh, &out.samples, &SphConfig::default(), Exec::default()).unwrap();
        let c = coverage_stats(&f.brep, &lab);
        assert!(c.boundary_id >= 98.0 && c.face_id >= 98.0 && c.boundary_type >= 96.0, "{}: {c:?}", f.name);
    }
}

#[test]
fn cube_bands_and_corners() {
    let f = &fixtures::unit_cube();
    let m = labeled(f, &ScanConfig::zero_artifacts(), &SphConfig::default());
    let labels = m.labels.as_ref().unwrap();
    let edge_of = |v: usize| labels[v].edge_id.map(|e| f.brep.physical_edge_of(e));
    let bands: BTreeSet<usize> = (0..m.n_vertices()).filter(|&v| labels[v].kind == LabelKind::Boundary).filter_map(edge_of).collect();
    assert_eq!(bands.len(), 12);
    for pe in bands {
        assert_eq!(components(&m, |v| labels[v].kind == LabelKind::Boundary && edge_of(v) == Some(pe)), 1);
    }
    assert_eq!(components(&m, |v| labels[v].kind == LabelKind::Junction), 8);
    for (p, l) in m.positions.iter().zip(labels) {
        let interior = [p.x, p.y, p.z].iter().all(|&x| x.abs() > 0.2 && (x - 1.0).abs() > 0.2);
        if interior {
            assert_eq!(l.kind, LabelKind::Face);
        }
        if l.kind == LabelKind::Junction {
            assert_eq!(l.junction.as_ref().unwrap().faces.len(), 3);
        }
    }
}

#[test]
fn vertex_at_corner_is_junction() {
    let f = fixtures::unit_cube();
    let m = labeled(&f, &ScanConfig::zero_artifacts(), &SphConfig::default());
    for (p, l) in m.positions.iter().zip(m.labels.as_ref().unwrap()) {
        if f.brep.corners.iter().any(|c| (c.position - p).norm() < 1e-12) {
            assert_eq!(l.kind, LabelKind::Junction);
            let j = l.junction.as_ref().unwrap();
            assert_eq!((j.faces.len(), j.edges.len()), (3, 3));
        }
    }
}

#[test]
fn boundary_records_match_topology() {
    for f in fixtures::suite().iter().step_by(3) {
        let m = labeled(f, &ScanConfig::default(), &SphConfig::default());
        for l in m.labels.as_ref().unwrap().iter().filter(|l| l.kind == LabelKind::Boundary) {
            let e = l.edge_id.unwrap();
            let walk = |p: &[Step]| topo_walk(&f.brep, e, p).unwrap().id();
            assert_eq!(l.mate_loop_id, Some(walk(&[Step::Mate, Step::Parent])));
            assert_eq!(l.loop_id, Some(walk(&[Step::Parent])));
            assert!(l.face_id_a != l.face_id_b || f.brep.is_self_mated(e));
            assert!(l.soft_prob > 0.0 && l.soft_prob <= 1.0, "{}", l.soft_prob);
        }
    }
}

/// Prism over a regular `n`-gon whose side equals its height, so every
/// co-edge has the same length.
fn equilateral_prism(name: &str, n: usize, side: f64, edge_len: f64) -> Fixture {
    let r = side / (2.0 * (std::f64::consts::PI / n as f64).sin());
    let pts = (0..n).map(|k| {
        let a = std::f64::consts::TAU * k as f64 / n as f64;
        ([r * a.cos(), r * a.sin()], Seg::Line)
    });
    let x = Extrusion { outer: Shape::Path(pts.collect()), holes: Vec::new(), height: side };
    fixtures::extrusion_fixture(name, &x, &TessOptions { edge_len, ..Default::default() })
}

/// Configuration under which every sample of `c` has the same smoothing length.
fn uniform_h(c: &ChainComplex, sampling: &SamplingConfig) -> SphConfig {
    let pitch = sampling.face_pitch_rel * c.diagonal();
    let len = c.coedges[0].arc_length;
    assert!(c.coedges.iter().all(|e| (e.arc_length - len).abs() < 1e-9 * len));
    SphConfig { alpha_f: 1.0, alpha_e: pitch / len, ..SphConfig::nearest_neighbor_limit() }
}

/// Fraction of vertices whose merged-kind argmax entity is the entity of the
/// exhaustive nearest sample (distance ties count as agreement).
fn nn_agreement(f: &Fixture, sph: &SphConfig) -> (f64, usize) {
    let cfg = ScanConfig::default();
    let out = scan(f, &cfg, 11);
    let idx = SampleIndex::new(&out.samples, sph, f.brep.diagonal()).unwrap();
    let s = &out.samples.samples;
    let mut agree = 0;
    for p in &out.mesh.positions {
        let nn = idx.nearest(p).unwrap();
        let cand: Vec<&BrepSample> = [SampleSource::Corner, SampleSource::Edge, SampleSource::Face]
            .iter()
            .flat_map(|&k| idx.weights(k, p, None))
            .map(|(i, _)| &s[i])
            .collect();
        let ok = if cand.is_empty() {
            true
        } else {
            let l = soft_label(p, &cand, sph, idx.epsilon, None).unwrap();
            let (dw, dn) = ((cand[l.sample].position - p).norm(), (s[nn].position - p).norm());
            l.winner == (s[nn].source, s[nn].source_id) || dw <= dn * (1.0 + 1e-12)
        };
        agree += usize::from(ok);
    }
    (agree as f64 / out.mesh.n_vertices() as f64, out.mesh.n_vertices())
}

pub fn nn_fixtures() -> Vec<Fixture> {
    vec![equilateral_prism("cube", 4, 1.0, 0.25), equilateral_prism("tri-prism", 3, 1.5, 0.3), equilateral_prism("hex-prism", 6, 0.8, 0.2)]
}

#[test]
fn argmax_degenerates_to_nearest_neighbor() {
    for f in nn_fixtures() {
        let sph = uniform_h(&f.brep, &ScanConfig::default().sampling);
        let (a, n) = nn_agreement(&f, &sph);
        assert!(n <= 10_000);
        assert!(a >= 0.999, "{}: {a}", f.name);
    }
}
