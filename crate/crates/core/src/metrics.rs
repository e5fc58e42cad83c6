//! NFD summary metrics and period-to-period comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resampling::Envelope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeFlowSource {
    /// Every pooled `(K, Q)` state of the re-sampled cloud.
    #[default]
    Cloud,
    /// Envelope bin centres and their `q_env`.
    Envelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsParams {
    /// In `[0, 1]`.
    pub capacity_percentile: f64,
    pub free_flow_k_max: f64,
    pub free_flow_source: FreeFlowSource,
}

impl Default for MetricsParams {
    fn default() -> Self {
        Self {
            capacity_percentile: 0.975,
            free_flow_k_max: 15.0,
            free_flow_source: FreeFlowSource::Cloud,
        }
    }
}

/// Percentile `p ∈ [0, 1]` by linear interpolation between order
/// statistics at rank `1 + p·(n − 1)`.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::NoData("percentile of an empty set".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("percentile {p} outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = p * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn capacity(envelope: &Envelope, p: f64) -> Result<f64> {
    let flows: Vec<f64> = envelope.bins.iter().map(|b| b.q_env).collect();
    percentile(&flows, p).map_err(|e| match e {
        Error::NoData(_) => Error::NoData("empty envelope".into()),
        e => e,
    })
}

/// Mean bin centre over bins whose `q_env` reaches `capacity`.
pub fn critical_density(envelope: &Envelope, capacity: f64) -> Result<f64> {
    let ks: Vec<f64> = envelope
        .bins
        .iter()
        .filter(|b| b.q_env >= capacity)
        .map(|b| b.k_center)
        .collect();
    if ks.is_empty() {
        return Err(Error::NoData(format!("no envelope bin reaches capacity {capacity}")));
    }
    Ok(ks.iter().sum::<f64>() / ks.len() as f64)
}

/// Zero-intercept least-squares slope `Σ KQ / Σ K²` over `0 < K ≤ k_max`.
pub fn free_flow_speed<I>(points: I, k_max: f64) -> Result<f64>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let (mut kq, mut kk) = (0.0, 0.0);
    for (k, q) in points {
        if k > 0.0 && k <= k_max {
            kq += k * q;
            kk += k * k;
        }
    }
    if kk == 0.0 {
        return Err(Error::NoData(format!("no states with 0 < K <= {k_max}")));
    }
    Ok(kq / kk)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfdMetrics {
    pub zone_id: String,
    pub period_label: String,
    #[serde(rename = "capacity_veh_h_lanekm")]
    pub capacity: f64,
    #[serde(rename = "critical_density_veh_lanekm")]
    pub critical_density: f64,
    #[serde(rename = "free_flow_speed_kmh")]
    pub free_flow_speed: f64,
}

/// All three metrics for one envelope. `cloud` is only read when the free
/// flow speed is fitted on the pooled states.
pub fn estimate_metrics<I>(envelope: &Envelope, cloud: I, params: &MetricsParams) -> Result<NfdMetrics>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let cap = capacity(envelope, params.capacity_percentile)?;
    let kc = critical_density(envelope, cap)?;
    let vf = match params.free_flow_source {
        FreeFlowSource::Cloud => free_flow_speed(cloud, params.free_flow_k_max)?,
        FreeFlowSource::Envelope => free_flow_speed(
            envelope.bins.iter().map(|b| (b.k_center, b.q_env)),
            params.free_flow_k_max,
        )?,
    };
    Ok(NfdMetrics {
        zone_id: envelope.zone_id.clone(),
        period_label: envelope.period_label.clone(),
        capacity: cap,
        critical_density: kc,
        free_flow_speed: vf,
    })
}

pub fn percent_change(before: f64, after: f64) -> Option<f64> {
    (before != 0.0).then(|| (after - before) / before * 100.0)
}

/// One decimal, with a plain `-0.0` collapsed to `0.0`.
pub fn format_percent(p: f64) -> String {
    let s = format!("{p:.1}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricChange {
    pub before: f64,
    pub after: f64,
    #[serde(rename = "percent")]
    pub percent_change: f64,
}

impl MetricChange {
    fn new(metric: &'static str, before: f64, after: f64) -> Result<Self> {
        Ok(Self {
            before,
            after,
            percent_change: percent_change(before, after).ok_or(Error::ZeroBaseline(metric))?,
        })
    }

    pub fn rendered(&self) -> String {
        format_percent(self.percent_change)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeReport {
    pub zone_id: String,
    pub before_period: String,
    pub after_period: String,
    pub capacity: MetricChange,
    pub critical_density: MetricChange,
    pub free_flow_speed: MetricChange,
}

impl ChangeReport {
    /// `(label, unit, change)` rows in table order.
    pub fn rows(&self) -> [(&'static str, &'static str, &MetricChange); 3] {
        [
            ("Capacity", "veh/lane-km/h", &self.capacity),
            ("Critical density", "veh/lane-km", &self.critical_density),
            ("Free-flow speed", "km/h", &self.free_flow_speed),
        ]
    }
}

pub fn compare_periods(before: &NfdMetrics, after: &NfdMetrics) -> Result<ChangeReport> {
    if before.zone_id != after.zone_id {
        return Err(Error::ZoneMismatch {
            before: before.zone_id.clone(),
            after: after.zone_id.clone(),
        });
    }
    Ok(ChangeReport {
        zone_id: before.zone_id.clone(),
        before_period: before.period_label.clone(),
        after_period: after.period_label.clone(),
        capacity: MetricChange::new("capacity", before.capacity, after.capacity)?,
        critical_density: MetricChange::new("critical_density", before.critical_density, after.critical_density)?,
        free_flow_speed: MetricChange::new("free_flow_speed", before.free_flow_speed, after.free_flow_speed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resampling::{EnvelopeBin, ResampleParams};

    fn env(bins: &[(f64, f64)]) -> Envelope {
        Envelope {
            zone_id: "Z1".into(),
            period_label: "p".into(),
            params: ResampleParams::default(),
            bins: bins
                .iter()
                .map(|&(k, q)| EnvelopeBin { k_center: k, q_env: q, count: 10 })
                .collect(),
        }
    }

    fn metrics(zone: &str, cap: f64, kc: f64, vf: f64) -> NfdMetrics {
        NfdMetrics {
            zone_id: zone.into(),
            period_label: "x".into(),
            capacity: cap,
            critical_density: kc,
            free_flow_speed: vf,
        }
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(capacity(&env(&[(1.5, 500.0), (2.5, 500.0), (3.5, 500.0)]), 0.975).unwrap(), 500.0);
        assert_eq!(capacity(&env(&[(7.5, 854.0)]), 0.975).unwrap(), 854.0);
        assert!(matches!(capacity(&env(&[]), 0.975), Err(Error::NoData(_))));
    }

    #[test]
    fn ten_bin_percentile() {
        let bins: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64 + 0.5, 100.0 * i as f64)).collect();
        let e = env(&bins);
        // rank 1 + 0.975·9 = 9.775: 900 + 0.775·100
        let oracle = 900.0 + (1.0 + 0.975 * 9.0 - 9.0) * (1000.0 - 900.0);
        let cap = capacity(&e, 0.975).unwrap();
        assert!((cap - oracle).abs() < 1e-9);
        assert!((cap - 977.5).abs() < 1e-9);
        assert_eq!(critical_density(&e, cap).unwrap(), 10.5);
    }

    #[test]
    fn critical_density_examples() {
        assert_eq!(critical_density(&env(&[(5.0, 300.0), (21.2, 800.0)]), 790.0).unwrap(), 21.2);
        assert_eq!(critical_density(&env(&[(20.0, 800.0), (30.0, 810.0), (50.0, 100.0)]), 800.0).unwrap(), 25.0);
    }

    #[test]
    fn free_flow_examples() {
        let line: Vec<(f64, f64)> = (1..30).map(|k| (k as f64 * 0.5, 25.0 * k as f64)).collect();
        assert_eq!(free_flow_speed(line, 15.0).unwrap(), 50.0);
        assert_eq!(free_flow_speed([(10.0, 400.0), (5.0, 300.0)], 15.0).unwrap(), 44.0);
        assert!(free_flow_speed([(0.0, 0.0), (0.0, 10.0)], 15.0).is_err());
        // outside the free-flow range is ignored
        assert_eq!(free_flow_speed([(10.0, 400.0), (5.0, 300.0), (40.0, 1.0)], 15.0).unwrap(), 44.0);
    }

    #[test]
    fn zone1_capacity_change() {
        let r = compare_periods(&metrics("Z1", 854.0, 21.2, 52.3), &metrics("Z1", 395.0, 26.1, 21.0)).unwrap();
        assert_eq!(r.capacity.rendered(), "-53.7");
        assert_eq!(r.free_flow_speed.rendered(), "-59.8");
    }

    #[test]
    fn zone2_capacity_change() {
        let r = compare_periods(&metrics("Z2", 545.0, 20.0, 33.4), &metrics("Z2", 357.0, 20.0, 19.8)).unwrap();
        assert!((r.capacity.percent_change - -34.4).abs() <= 0.2);
        assert!((r.free_flow_speed.percent_change - -40.8).abs() <= 0.2);
        assert_eq!(r.critical_density.rendered(), "0.0");
    }

    #[test]
    fn comparison_errors() {
        assert!(matches!(
            compare_periods(&metrics("Z1", 1.0, 1.0, 1.0), &metrics("Z2", 1.0, 1.0, 1.0)),
            Err(Error::ZoneMismatch { .. })
        ));
        assert!(matches!(
            compare_periods(&metrics("Z1", 0.0, 1.0, 1.0), &metrics("Z1", 1.0, 1.0, 1.0)),
            Err(Error::ZeroBaseline("capacity"))
        ));
    }

    #[test]
    fn metrics_json_field_names() {
        let v = serde_json::to_value(metrics("Z1", 1.0, 2.0, 3.0)).unwrap();
        assert_eq!(v["capacity_veh_h_lanekm"], 1.0);
        assert_eq!(v["critical_density_veh_lanekm"], 2.0);
        assert_eq!(v["free_flow_speed_kmh"], 3.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn capacity_within_bin_range(qs in prop::collection::vec(1.0f64..2000.0, 1..50), p in 0.0f64..=1.0) {
                let bins: Vec<(f64, f64)> = qs.iter().enumerate().map(|(i, &q)| (i as f64 + 0.5, q)).collect();
                let e = env(&bins);
                let cap = capacity(&e, p).unwrap();
                let max = qs.iter().cloned().fold(f64::MIN, f64::max);
                let min = qs.iter().cloned().fold(f64::MAX, f64::min);
                prop_assert!(cap <= max && cap >= min);
                prop_assert!(critical_density(&e, cap).is_ok());
            }

            #[test]
            fn scaling_flows(qs in prop::collection::vec(1.0f64..2000.0, 1..50), c in 0.1f64..10.0) {
                let bins: Vec<(f64, f64)> = qs.iter().enumerate().map(|(i, &q)| (i as f64 + 0.5, q)).collect();
                let scaled: Vec<(f64, f64)> = bins.iter().map(|&(k, q)| (k, q * c)).collect();
                let (a, b) = (env(&bins), env(&scaled));
                let (ca, cb) = (capacity(&a, 0.975).unwrap(), capacity(&b, 0.975).unwrap());
                prop_assert!((cb - c * ca).abs() <= 1e-9 * cb.abs().max(1.0));
                let qual = |e: &Envelope, cap: f64| e.bins.iter().map(|x| x.q_env >= cap).collect::<Vec<_>>();
                prop_assert_eq!(qual(&a, ca), qual(&b, cb));
            }

            #[test]
            fn noiseless_slope(v in 1.0f64..120.0, ks in prop::collection::vec(0.01f64..15.0, 1..40)) {
                let got = free_flow_speed(ks.iter().map(|&k| (k, v * k)), 15.0).unwrap();
                prop_assert!((got - v).abs() <= 1e-12 * v);
            }

            #[test]
            fn percent_sign(before in 0.1f64..1000.0, after in 0.1f64..1000.0) {
                let p = percent_change(before, after).unwrap();
                if after > before { prop_assert!(p > 0.0); }
                if after < before { prop_assert!(p < 0.0); }
                prop_assert_eq!(percent_change(before, before).unwrap(), 0.0);
            }
        }
    }
}
