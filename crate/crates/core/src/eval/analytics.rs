//! Dataset-level distributions of face areas, co-edge lengths and entity classes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::brep::ChainComplex;
use crate::par::Exec;

use super::EvalError;

/// Fixed log10 bins so histograms add across models.
pub const LOG_MIN: f64 = -6.0;
pub const LOG_MAX: f64 = 4.0;
pub const BINS_PER_DECADE: usize = 4;

/// Counts over `[10^LOG_MIN, 10^LOG_MAX)`; values outside go to the
/// under/overflow counters, non-positive values to underflow.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHistogram {
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Default for LogHistogram {
    fn default() -> Self {
        LogHistogram { counts: vec![0; Self::n_bins()], underflow: 0, overflow: 0 }
    }
}

impl LogHistogram {
    pub fn n_bins() -> usize {
        ((LOG_MAX - LOG_MIN) as usize) * BINS_PER_DECADE
    }

    /// `[lo, hi)` of bin `k`.
    pub fn edges(k: usize) -> (f64, f64) {
        let w = 1.0 / BINS_PER_DECADE as f64;
        (10f64.powf(LOG_MIN + k as f64 * w), 10f64.powf(LOG_MIN + (k + 1) as f64 * w))
    }

    pub fn add(&mut self, x: f64) {
        if !(x > 0.0) {
            self.underflow += 1;
            return;
        }
        let t = (x.log10() - LOG_MIN) * BINS_PER_DECADE as f64;
        if t < 0.0 {
            self.underflow += 1;
        } else if t >= self.counts.len() as f64 {
            self.overflow += 1;
        } else {
            self.counts[t as usize] += 1;
        }
    }

    pub fn merge(&mut self, o: &LogHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&o.counts) {
            *a += b;
        }
        self.underflow += o.underflow;
        self.overflow += o.overflow;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    pub name: String,
    pub face_area: LogHistogram,
    pub coedge_length: LogHistogram,
    pub surface_classes: BTreeMap<String, u64>,
    pub curve_classes: BTreeMap<String, u64>,
}

impl ModelStats {
    pub fn of(name: &str, c: &ChainComplex) -> Self {
        let mut s = ModelStats { name: name.to_string(), ..Default::default() };
        for f in &c.faces {
            s.face_area.add(f.area);
            *s.surface_classes.entry(f.surface_class.name().to_string()).or_default() += 1;
        }
        for e in &c.coedges {
            s.coedge_length.add(e.arc_length);
            *s.curve_classes.entry(e.curve_class.name().to_string()).or_default() += 1;
        }
        s
    }

    fn merge(&mut self, o: &ModelStats) {
        self.face_area.merge(&o.face_area);
        self.coedge_length.merge(&o.coedge_length);
        for (k, v) in &o.surface_classes {
            *self.surface_classes.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &o.curve_classes {
            *self.curve_classes.entry(k.clone()).or_default() += v;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsReport {
    pub bins_per_decade: usize,
    pub log10_range: [f64; 2],
    pub models: Vec<ModelStats>,
    pub aggregate: ModelStats,
}

impl AnalyticsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("analytics report serializes")
    }

    /// Long format: `model,quantity,bin,lo,hi,count`. Class rows leave the
    /// edges empty and put the class name in `bin`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("model,quantity,bin,lo,hi,count\n");
        for m in self.models.iter().chain(std::iter::once(&self.aggregate)) {
            for (q, h) in [("face_area", &m.face_area), ("coedge_length", &m.coedge_length)] {
                let _ = writeln!(s, "{},{q},underflow,,{:e},{}", m.name, LogHistogram::edges(0).0, h.underflow);
                for (k, c) in h.counts.iter().enumerate() {
                    let (lo, hi) = LogHistogram::edges(k);
                    let _ = writeln!(s, "{},{q},{k},{lo:e},{hi:e},{c}", m.name);
                }
                let _ = writeln!(s, "{},{q},overflow,{:e},,{}", m.name, LogHistogram::edges(h.counts.len() - 1).1, h.overflow);
            }
            for (q, map) in [("surface_class", &m.surface_classes), ("curve_class", &m.curve_classes)] {
                for (k, c) in map {
                    let _ = writeln!(s, "{},{q},{k},,,{c}", m.name);
                }
            }
        }
        s
    }
}

pub const AGGREGATE_NAME: &str = "ALL";

/// Per-model and summed statistics; the aggregate is the exact sum of the models.
pub fn dataset_analytics(batch: &[(&str, &ChainComplex)], exec: Exec) -> Result<AnalyticsReport, EvalError> {
    if batch.is_empty() {
        return Err(EvalError::EmptyBatch);
    }
    let models = exec.map(batch, |(n, c)| ModelStats::of(n, c));
    let mut aggregate = ModelStats { name: AGGREGATE_NAME.into(), ..Default::default() };
    for m in &models {
        aggregate.merge(m);
    }
    Ok(AnalyticsReport { bins_per_decade: BINS_PER_DECADE, log10_range: [LOG_MIN, LOG_MAX], models, aggregate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn cube_counts() {
        let cube = fixtures::unit_cube().brep;
        let r = dataset_analytics(&[("cube", &cube)], Exec::default()).unwrap();
        let m = &r.models[0];
        assert_eq!(m.surface_classes, BTreeMap::from([("plane".to_string(), 6)]));
        assert_eq!(m.curve_classes, BTreeMap::from([("line".to_string(), 24)]));
        // unit faces and edges sit in the bin starting at 10^0
        let k = ((0.0 - LOG_MIN) as usize) * BINS_PER_DECADE;
        assert_eq!(m.face_area.counts[k], 6);
        assert_eq!(m.coedge_length.counts[k], 24);
    }

    #[test]
    fn aggregate_is_additive() {
        let a = fixtures::unit_cube().brep;
        let b = fixtures::extrude_brep(&fixtures::cylinder(1.0, 2.0), &Default::default()).unwrap();
        let r = dataset_analytics(&[("a", &a), ("b", &b)], Exec::default()).unwrap();
        let (ra, rb) = (&r.models[0], &r.models[1]);
        assert_eq!(r.aggregate.face_area.total(), ra.face_area.total() + rb.face_area.total());
        for k in 0..LogHistogram::n_bins() {
            assert_eq!(r.aggregate.coedge_length.counts[k], ra.coedge_length.counts[k] + rb.coedge_length.counts[k]);
        }
        assert_eq!(r.aggregate.surface_classes["plane"], 6 + rb.surface_classes["plane"]);
        assert!(r.to_csv().lines().count() > 3 * 2 * LogHistogram::n_bins());
        let back: AnalyticsReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn empty_batch() {
        assert!(matches!(dataset_analytics(&[], Exec::default()), Err(EvalError::EmptyBatch)));
    }

    #[test]
    fn histogram_edges() {
        let mut h = LogHistogram::default();
        for x in [0.0, 1e-7, 1e-6, 9.99e3, 1e4, f64::NAN] {
            h.add(x);
        }
        assert_eq!((h.underflow, h.overflow), (3, 1));
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[LogHistogram::n_bins() - 1], 1);
    }
}
