//! Detector-to-road conflation.
//!
//! Each detector segment is matched to the higher-order road whose centroid
//! is closest, among roads passing both the centroid-distance gate and the
//! undirected angle gate. The matched road then supplies the lane count
//! (tagged, or the class mean when untagged); unmatched detectors fall back
//! to the global mean. Finally detectors are placed in zones by centroid.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geo::{self, LonLat, Projection};
use crate::geojson::{self, Geometry};
use crate::network::{describe_polyline, HighwayClass, LaneStats, RoadNetwork, SegmentDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSegment {
    pub detector_id: String,
    pub geometry: Vec<LonLat>,
    /// Monitored length `l_i` in km.
    pub length_km: f64,
}

impl DetectorSegment {
    /// Length defaults to the great-circle length of the geometry.
    pub fn new(detector_id: impl Into<String>, geometry: Vec<LonLat>, length_km: Option<f64>) -> Result<Self> {
        let detector_id = detector_id.into();
        if geometry.len() < 2 {
            return Err(Error::Geometry(format!("detector {detector_id} has fewer than 2 points")));
        }
        let length_km = length_km.unwrap_or_else(|| geo::polyline_length_km(&geometry));
        if !(length_km.is_finite() && length_km > 0.0) {
            return Err(Error::Geometry(format!("detector {detector_id} has non-positive length")));
        }
        Ok(Self {
            detector_id,
            geometry,
            length_km,
        })
    }

    pub fn centroid(&self) -> LonLat {
        geo::vertex_mean(&self.geometry)
    }
}

pub fn parse_detectors(path: impl AsRef<Path>) -> Result<Vec<DetectorSegment>> {
    detectors_from_collection(geojson::read_collection(path.as_ref())?)
}

pub fn read_detectors(text: &str) -> Result<Vec<DetectorSegment>> {
    detectors_from_collection(geojson::parse_collection(text)?)
}

fn detectors_from_collection(fc: geojson::FeatureCollection) -> Result<Vec<DetectorSegment>> {
    let mut out = Vec::with_capacity(fc.features.len());
    let mut seen = HashSet::new();
    for (i, f) in fc.features.into_iter().enumerate() {
        let id = geojson::string_property(&f.properties, "detector_id")
            .ok_or_else(|| Error::GeoJson(format!("feature {i} has no detector_id")))?;
        let points = match f.geometry {
            None => return Err(Error::Geometry(format!("detector {id} has no geometry"))),
            Some(Geometry::LineString(p)) => p,
            Some(other) => {
                log::warn!("skipping non-line detector feature {id} ({other:?})");
                continue;
            }
        };
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let length = geojson::number_property(&f.properties, "length_km");
        out.push(DetectorSegment::new(id, points, length)?);
    }
    Ok(out)
}

pub fn detectors_geojson(detectors: &[DetectorSegment]) -> Value {
    let features = detectors
        .iter()
        .map(|d| {
            let mut props = Map::new();
            props.insert("detector_id".into(), json!(d.detector_id));
            props.insert("length_km".into(), json!(d.length_km));
            geojson::line_feature(props, &d.geometry)
        })
        .collect();
    geojson::collection(features, Map::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchParams {
    pub max_centroid_distance_m: f64,
    pub max_angle_diff_deg: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            max_centroid_distance_m: 30.0,
            max_angle_diff_deg: 20.0,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_centroid_distance_m.is_finite() && self.max_centroid_distance_m > 0.0) {
            return Err(Error::InvalidParameter("max_centroid_distance_m must be > 0".into()));
        }
        if !(self.max_angle_diff_deg > 0.0 && self.max_angle_diff_deg <= 90.0) {
            return Err(Error::InvalidParameter("max_angle_diff_deg must be in (0, 90]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedWay {
    pub way_id: String,
    pub highway_class: HighwayClass,
    pub tagged_lanes: Option<f64>,
    pub centroid_distance_m: f64,
    /// Undirected, in `[0, 90]`.
    pub angle_diff_deg: f64,
}

/// Outcome of geometric matching, before lanes and zones are attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadMatch {
    pub detector_id: String,
    pub length_km: f64,
    pub centroid: LonLat,
    pub way: Option<MatchedWay>,
}

struct Candidate<'a> {
    way_id: &'a str,
    index: usize,
    distance: f64,
    angle: f64,
}

fn candidate_order(a: &Candidate<'_>, b: &Candidate<'_>) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then(a.angle.total_cmp(&b.angle))
        .then_with(|| a.way_id.cmp(b.way_id))
}

/// Matches every detector to at most one road segment. Output is ordered by
/// detector id.
///
/// The network is expected to be filtered to higher-order roads already.
pub fn match_detectors(
    detectors: &[DetectorSegment],
    network: &RoadNetwork,
    params: &MatchParams,
) -> Result<Vec<RoadMatch>> {
    params.validate()?;
    if detectors.is_empty() {
        return Ok(Vec::new());
    }
    if network.is_empty() {
        log::warn!("road network is empty; all {} detectors unmatched", detectors.len());
    }

    let centroids: Vec<LonLat> = detectors.iter().map(DetectorSegment::centroid).collect();
    let projection = Projection::new(geo::vertex_mean(&centroids));

    let roads: Vec<(usize, SegmentDescriptor)> = network
        .segments()
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match describe_polyline(&s.geometry, s.length_km, &projection) {
            Ok(d) => Some((i, d)),
            Err(_) => {
                log::warn!("way {} has a degenerate chord; not matchable", s.way_id);
                None
            }
        })
        .collect();

    let mut out = Vec::with_capacity(detectors.len());
    for (det, centroid) in detectors.iter().zip(centroids) {
        let d = describe_polyline(&det.geometry, det.length_km, &projection)
            .map_err(|e| Error::Geometry(format!("detector {}: {e}", det.detector_id)))?;
        let best = roads
            .iter()
            .filter_map(|(i, r)| {
                let distance = d.centroid.distance(&r.centroid);
                let angle = geo::undirected_angle_diff(d.bearing, r.bearing);
                (distance <= params.max_centroid_distance_m && angle <= params.max_angle_diff_deg).then(|| Candidate {
                    way_id: &network.segments()[*i].way_id,
                    index: *i,
                    distance,
                    angle,
                })
            })
            .min_by(candidate_order);
        let way = best.map(|c| {
            let seg = &network.segments()[c.index];
            MatchedWay {
                way_id: seg.way_id.clone(),
                highway_class: seg.highway_class,
                tagged_lanes: seg.lanes,
                centroid_distance_m: c.distance,
                angle_diff_deg: c.angle,
            }
        });
        out.push(RoadMatch {
            detector_id: det.detector_id.clone(),
            length_km: det.length_km,
            centroid,
            way,
        });
    }
    out.sort_by(|a, b| a.detector_id.cmp(&b.detector_id));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneSource {
    Tagged,
    ClassMean,
    GlobalMean,
}

impl LaneSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            LaneSource::Tagged => "tagged",
            LaneSource::ClassMean => "class_mean",
            LaneSource::GlobalMean => "global_mean",
        }
    }
}

impl fmt::Display for LaneSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorMatch {
    pub detector_id: String,
    pub way_id: Option<String>,
    pub highway_class: Option<HighwayClass>,
    pub centroid_distance_m: Option<f64>,
    pub angle_diff_deg: Option<f64>,
    /// Lane count `n_i`, possibly fractional when approximated.
    pub lanes: f64,
    pub lane_source: LaneSource,
    pub zone_id: Option<String>,
    pub length_km: f64,
    pub centroid: LonLat,
}

pub fn assign_lanes(matches: Vec<RoadMatch>, stats: &LaneStats) -> Vec<DetectorMatch> {
    matches
        .into_iter()
        .map(|m| {
            let (lanes, lane_source) = match &m.way {
                Some(MatchedWay {
                    tagged_lanes: Some(n), ..
                }) => (*n, LaneSource::Tagged),
                Some(w) => (stats.mean_for(w.highway_class), LaneSource::ClassMean),
                None => (stats.global_mean, LaneSource::GlobalMean),
            };
            DetectorMatch {
                detector_id: m.detector_id,
                way_id: m.way.as_ref().map(|w| w.way_id.clone()),
                highway_class: m.way.as_ref().map(|w| w.highway_class),
                centroid_distance_m: m.way.as_ref().map(|w| w.centroid_distance_m),
                angle_diff_deg: m.way.as_ref().map(|w| w.angle_diff_deg),
                lanes,
                lane_source,
                zone_id: None,
                length_km: m.length_km,
                centroid: m.centroid,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LaneSourceSummary {
    pub detectors: usize,
    pub matched: usize,
    pub tagged: usize,
    pub class_mean: usize,
    pub global_mean: usize,
    /// Share of detectors whose lane count had to be approximated.
    pub approximated_share: f64,
}

pub fn lane_source_summary(matches: &[DetectorMatch]) -> LaneSourceSummary {
    let mut s = LaneSourceSummary {
        detectors: matches.len(),
        ..Default::default()
    };
    for m in matches {
        if m.way_id.is_some() {
            s.matched += 1;
        }
        match m.lane_source {
            LaneSource::Tagged => s.tagged += 1,
            LaneSource::ClassMean => s.class_mean += 1,
            LaneSource::GlobalMean => s.global_mean += 1,
        }
    }
    if s.detectors > 0 {
        s.approximated_share = (s.class_mean + s.global_mean) as f64 / s.detectors as f64;
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub zone_id: String,
    /// Each polygon is a list of rings; the first ring is the exterior.
    pub polygons: Vec<Vec<Vec<LonLat>>>,
}

impl Zone {
    pub fn contains(&self, p: LonLat) -> bool {
        self.polygons.iter().any(|rings| geo::polygon_contains(rings, p))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZoneSet {
    zones: Vec<Zone>,
}

impl ZoneSet {
    pub fn new(zones: Vec<Zone>) -> Result<Self> {
        let mut seen = HashSet::new();
        for z in &zones {
            if !seen.insert(z.zone_id.as_str()) {
                return Err(Error::DuplicateId(z.zone_id.clone()));
            }
        }
        Ok(Self { zones })
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.zones.iter().map(|z| z.zone_id.as_str())
    }
}

pub fn parse_zones(path: impl AsRef<Path>) -> Result<ZoneSet> {
    zones_from_collection(geojson::read_collection(path.as_ref())?)
}

pub fn read_zones(text: &str) -> Result<ZoneSet> {
    zones_from_collection(geojson::parse_collection(text)?)
}

fn zones_from_collection(fc: geojson::FeatureCollection) -> Result<ZoneSet> {
    let mut zones = Vec::new();
    for (i, f) in fc.features.into_iter().enumerate() {
        let zone_id = geojson::string_property(&f.properties, "zone_id")
            .ok_or_else(|| Error::GeoJson(format!("zone feature {i} has no zone_id")))?;
        let polygons = match f.geometry {
            Some(Geometry::Polygon(rings)) => vec![rings],
            Some(Geometry::MultiPolygon(polys)) => polys,
            other => return Err(Error::Geometry(format!("zone {zone_id}: expected Polygon, got {other:?}"))),
        };
        zones.push(Zone { zone_id, polygons });
    }
    ZoneSet::new(zones)
}

pub fn zones_geojson(zones: &ZoneSet) -> Value {
    let features = zones
        .zones
        .iter()
        .flat_map(|z| {
            z.polygons.iter().map(move |rings| {
                let mut props = Map::new();
                props.insert("zone_id".into(), json!(z.zone_id));
                geojson::polygon_feature(props, rings)
            })
        })
        .collect();
    geojson::collection(features, Map::new())
}

/// Sets `zone_id` to the zone containing each detector centroid (boundary
/// counts as inside). A centroid inside two zones is an error.
pub fn assign_zones(matches: &mut [DetectorMatch], zones: &ZoneSet) -> Result<()> {
    for m in matches.iter_mut() {
        let hits: Vec<&str> = zones
            .zones
            .iter()
            .filter(|z| z.contains(m.centroid))
            .map(|z| z.zone_id.as_str())
            .collect();
        m.zone_id = match hits.as_slice() {
            [] => None,
            [one] => Some(one.to_string()),
            many => {
                return Err(Error::ZoneOverlap {
                    detector_id: m.detector_id.clone(),
                    zones: many.iter().map(|s| s.to_string()).collect(),
                })
            }
        };
    }
    Ok(())
}

pub const MATCH_REPORT_HEADER: [&str; 7] = [
    "detector_id",
    "way_id",
    "distance_m",
    "angle_diff_deg",
    "lanes",
    "lane_source",
    "zone_id",
];

pub fn write_match_report<W: Write>(matches: &[DetectorMatch], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(MATCH_REPORT_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for m in matches {
        wtr.write_record([
            m.detector_id.clone(),
            m.way_id.clone().unwrap_or_default(),
            opt(m.centroid_distance_m),
            opt(m.angle_diff_deg),
            m.lanes.to_string(),
            m.lane_source.to_string(),
            m.zone_id.clone().unwrap_or_default(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<match report>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Point;
    use crate::network::{lane_class_means, RoadSegment};

    const ORIGIN: LonLat = LonLat::new(2.35, 48.85);

    fn line(proj: &Projection, pts: &[(f64, f64)]) -> Vec<LonLat> {
        pts.iter().map(|&(x, y)| proj.unproject(Point::new(x, y))).collect()
    }

    fn road(proj: &Projection, id: &str, tag: &str, lanes: Option<f64>, pts: &[(f64, f64)]) -> RoadSegment {
        RoadSegment::new(id, tag, lanes, line(proj, pts)).unwrap()
    }

    fn detector(proj: &Projection, id: &str, pts: &[(f64, f64)]) -> DetectorSegment {
        DetectorSegment::new(id, line(proj, pts), None).unwrap()
    }

    #[test]
    fn identical_geometry_matches_exactly() {
        let p = Projection::new(ORIGIN);
        let net = RoadNetwork::new(None, vec![road(&p, "w1", "primary", Some(2.0), &[(0.0, 0.0), (0.0, 200.0)])]).unwrap();
        let dets = vec![detector(&p, "d1", &[(0.0, 0.0), (0.0, 200.0)])];
        let m = match_detectors(&dets, &net, &MatchParams::default()).unwrap();
        let w = m[0].way.as_ref().unwrap();
        assert_eq!(w.way_id, "w1");
        assert!(w.centroid_distance_m < 1e-9);
        assert!(w.angle_diff_deg < 1e-9);
    }

    #[test]
    fn distance_gate() {
        let p = Projection::new(ORIGIN);
        let net = RoadNetwork::new(None, vec![road(&p, "w1", "primary", None, &[(45.0, 0.0), (45.0, 200.0)])]).unwrap();
        let dets = vec![detector(&p, "d1", &[(0.0, 0.0), (0.0, 200.0)])];
        let m = match_detectors(&dets, &net, &MatchParams::default()).unwrap();
        assert!(m[0].way.is_none());
    }

    #[test]
    fn angle_gate_beats_proximity() {
        // A: centroid 10 m away, rotated 25 deg; B: 15 m away, rotated 2 deg.
        let p = Projection::new(ORIGIN);
        let half = 100.0;
        let rotated = |cx: f64, deg: f64| {
            let (s, c) = deg.to_radians().sin_cos();
            [(cx - half * s, -half * c), (cx + half * s, half * c)]
        };
        let net = RoadNetwork::new(
            None,
            vec![
                road(&p, "A", "primary", None, &rotated(10.0, 25.0)),
                road(&p, "B", "primary", None, &rotated(-15.0, 2.0)),
            ],
        )
        .unwrap();
        let dets = vec![detector(&p, "d1", &[(0.0, -half), (0.0, half)])];
        let m = match_detectors(&dets, &net, &MatchParams::default()).unwrap();
        let w = m[0].way.as_ref().unwrap();
        assert_eq!(w.way_id, "B");
        assert!((w.centroid_distance_m - 15.0).abs() < 1e-6);
        assert!((w.angle_diff_deg - 2.0).abs() < 1e-6);

        // Opening the angle gate lets the nearer road win.
        let loose = MatchParams {
            max_angle_diff_deg: 30.0,
            ..Default::default()
        };
        let m = match_detectors(&dets, &net, &loose).unwrap();
        assert_eq!(m[0].way.as_ref().unwrap().way_id, "A");
    }

    #[test]
    fn ties_break_on_way_id() {
        let p = Projection::new(ORIGIN);
        let net = RoadNetwork::new(
            None,
            vec![
                road(&p, "zz", "primary", None, &[(0.0, 0.0), (0.0, 200.0)]),
                road(&p, "aa", "primary", None, &[(0.0, 200.0), (0.0, 0.0)]),
            ],
        )
        .unwrap();
        let dets = vec![detector(&p, "d1", &[(0.0, 0.0), (0.0, 200.0)])];
        let m = match_detectors(&dets, &net, &MatchParams::default()).unwrap();
        assert_eq!(m[0].way.as_ref().unwrap().way_id, "aa");
    }

    #[test]
    fn empty_network_leaves_all_unmatched() {
        let p = Projection::new(ORIGIN);
        let dets = vec![detector(&p, "b", &[(0.0, 0.0), (0.0, 1.0)]), detector(&p, "a", &[(5.0, 0.0), (5.0, 9.0)])];
        let m = match_detectors(&dets, &RoadNetwork::default(), &MatchParams::default()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].detector_id, "a");
        assert!(m.iter().all(|m| m.way.is_none()));
    }

    #[test]
    fn bad_params_rejected() {
        let bad = MatchParams {
            max_angle_diff_deg: 95.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MatchParams {
            max_centroid_distance_m: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lane_assignment_sources() {
        let p = Projection::new(ORIGIN);
        let net = RoadNetwork::new(
            None,
            vec![
                road(&p, "t", "secondary", Some(3.0), &[(0.0, 0.0), (0.0, 200.0)]),
                road(&p, "u", "primary", None, &[(500.0, 0.0), (500.0, 200.0)]),
                road(&p, "x", "primary", Some(2.0), &[(900.0, 0.0), (900.0, 200.0)]),
            ],
        )
        .unwrap();
        let dets = vec![
            detector(&p, "d1", &[(0.0, 0.0), (0.0, 200.0)]),
            detector(&p, "d2", &[(500.0, 0.0), (500.0, 200.0)]),
            detector(&p, "d3", &[(2000.0, 0.0), (2000.0, 200.0)]),
        ];
        let stats = lane_class_means(&net).unwrap();
        // global mean over tagged {3, 2} is 2.5
        assert_eq!(stats.global_mean, 2.5);
        let m = assign_lanes(match_detectors(&dets, &net, &MatchParams::default()).unwrap(), &stats);
        assert_eq!((m[0].lanes, m[0].lane_source), (3.0, LaneSource::Tagged));
        assert_eq!((m[1].lanes, m[1].lane_source), (2.0, LaneSource::ClassMean));
        assert_eq!((m[2].lanes, m[2].lane_source), (2.5, LaneSource::GlobalMean));
        let s = lane_source_summary(&m);
        assert_eq!((s.tagged, s.class_mean, s.global_mean, s.matched), (1, 1, 1, 2));
        assert!((s.approximated_share - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn untagged_primary_gets_reported_mean() {
        let p = Projection::new(ORIGIN);
        let mut stats = lane_class_means(
            &RoadNetwork::new(None, vec![road(&p, "x", "trunk", Some(4.0), &[(0.0, 0.0), (0.0, 1.0)])]).unwrap(),
        )
        .unwrap();
        stats.class_means.insert(HighwayClass::Primary, 3.09);
        let rm = RoadMatch {
            detector_id: "d".into(),
            length_km: 0.2,
            centroid: ORIGIN,
            way: Some(MatchedWay {
                way_id: "w".into(),
                highway_class: HighwayClass::Primary,
                tagged_lanes: None,
                centroid_distance_m: 1.0,
                angle_diff_deg: 1.0,
            }),
        };
        let m = assign_lanes(vec![rm], &stats);
        assert_eq!(m[0].lanes, 3.09);
        assert_eq!(m[0].lane_source, LaneSource::ClassMean);
    }

    fn square(id: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> Zone {
        Zone {
            zone_id: id.into(),
            polygons: vec![vec![vec![
                LonLat::new(x0, y0),
                LonLat::new(x1, y0),
                LonLat::new(x1, y1),
                LonLat::new(x0, y1),
                LonLat::new(x0, y0),
            ]]],
        }
    }

    fn bare(id: &str, at: LonLat) -> DetectorMatch {
        DetectorMatch {
            detector_id: id.into(),
            way_id: None,
            highway_class: None,
            centroid_distance_m: None,
            angle_diff_deg: None,
            lanes: 2.0,
            lane_source: LaneSource::GlobalMean,
            zone_id: None,
            length_km: 0.1,
            centroid: at,
        }
    }

    #[test]
    fn zone_membership() {
        let zones = ZoneSet::new(vec![square("Z1", 0.0, 0.0, 1.0, 1.0), square("Z2", 2.0, 0.0, 3.0, 1.0)]).unwrap();
        let mut m = vec![
            bare("in", LonLat::new(0.5, 0.5)),
            bare("out", LonLat::new(1.5, 0.5)),
            bare("edge", LonLat::new(3.0, 0.25)),
        ];
        assign_zones(&mut m, &zones).unwrap();
        assert_eq!(m[0].zone_id.as_deref(), Some("Z1"));
        assert_eq!(m[1].zone_id, None);
        assert_eq!(m[2].zone_id.as_deref(), Some("Z2"));
    }

    #[test]
    fn overlapping_zones_error() {
        let zones = ZoneSet::new(vec![square("Z1", 0.0, 0.0, 1.0, 1.0), square("Z2", 0.5, 0.0, 3.0, 1.0)]).unwrap();
        let mut m = vec![bare("d", LonLat::new(0.75, 0.5))];
        assert!(matches!(assign_zones(&mut m, &zones), Err(Error::ZoneOverlap { .. })));
    }

    #[test]
    fn zones_round_trip_through_geojson() {
        let zones = ZoneSet::new(vec![square("Z1", 0.0, 0.0, 1.0, 1.0)]).unwrap();
        let text = serde_json::to_string(&zones_geojson(&zones)).unwrap();
        assert_eq!(read_zones(&text).unwrap(), zones);
    }

    #[test]
    fn match_report_layout() {
        let mut m = bare("d1", ORIGIN);
        m.zone_id = Some("Z1".into());
        let mut buf = Vec::new();
        write_match_report(&[m], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "detector_id,way_id,distance_m,angle_diff_deg,lanes,lane_source,zone_id\nd1,,,,2,global_mean,Z1\n"
        );
    }

    #[test]
    fn detectors_round_trip() {
        let p = Projection::new(ORIGIN);
        let dets = vec![detector(&p, "d1", &[(0.0, 0.0), (0.0, 120.0)])];
        let text = serde_json::to_string(&detectors_geojson(&dets)).unwrap();
        assert_eq!(read_detectors(&text).unwrap(), dets);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        // Grid of roads 200 m apart plus detectors perturbed around chosen roads.
        fn fixture(jitter: &[(f64, f64, f64)]) -> (Vec<DetectorSegment>, RoadNetwork) {
            let p = Projection::new(ORIGIN);
            let mut roads = Vec::new();
            for i in 0..4 {
                for j in 0..4 {
                    let (x, y) = (i as f64 * 200.0, j as f64 * 200.0);
                    roads.push(road(&p, &format!("h{i}{j}"), "primary", None, &[(x, y), (x + 200.0, y)]));
                    roads.push(road(&p, &format!("v{i}{j}"), "secondary", None, &[(x, y), (x, y + 200.0)]));
                }
            }
            let net = RoadNetwork::new(None, roads).unwrap();
            let dets = jitter
                .iter()
                .enumerate()
                .map(|(k, &(dx, dy, rot))| {
                    let i = (k % 4) as f64 * 200.0;
                    let j = (k / 4 % 4) as f64 * 200.0;
                    let (cx, cy) = (i + 100.0 + dx, j + dy);
                    let (s, c) = rot.to_radians().sin_cos();
                    let pts = [(cx - 100.0 * c, cy + 100.0 * s), (cx + 100.0 * c, cy - 100.0 * s)];
                    detector(&p, &format!("d{k}"), &pts)
                })
                .collect();
            (dets, net)
        }

        fn assignment(ms: &[RoadMatch]) -> Vec<Option<String>> {
            ms.iter().map(|m| m.way.as_ref().map(|w| w.way_id.clone())).collect()
        }

        proptest! {
            #[test]
            fn angle_bounds_and_direction_invariance(
                jitter in prop::collection::vec((-40.0f64..40.0, -40.0f64..40.0, -30.0f64..30.0), 1..12)
            ) {
                let (dets, net) = fixture(&jitter);
                let params = MatchParams { max_centroid_distance_m: 60.0, max_angle_diff_deg: 90.0 };
                let a = match_detectors(&dets, &net, &params).unwrap();
                let reversed: Vec<DetectorSegment> = dets
                    .iter()
                    .map(|d| {
                        let mut g = d.geometry.clone();
                        g.reverse();
                        DetectorSegment::new(d.detector_id.clone(), g, Some(d.length_km)).unwrap()
                    })
                    .collect();
                let b = match_detectors(&reversed, &net, &params).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    if let (Some(wx), Some(wy)) = (&x.way, &y.way) {
                        prop_assert!((0.0..=90.0).contains(&wx.angle_diff_deg));
                        prop_assert!((wx.angle_diff_deg - wy.angle_diff_deg).abs() < 1e-6);
                    }
                }
                prop_assert_eq!(assignment(&a), assignment(&b));
            }

            #[test]
            fn tightening_never_adds_matches(
                jitter in prop::collection::vec((-40.0f64..40.0, -40.0f64..40.0, -30.0f64..30.0), 1..12),
                d in 5.0f64..60.0, a in 1.0f64..40.0, shrink in 0.1f64..1.0
            ) {
                let (dets, net) = fixture(&jitter);
                let loose = MatchParams { max_centroid_distance_m: d, max_angle_diff_deg: a };
                let tight = MatchParams { max_centroid_distance_m: d * shrink, max_angle_diff_deg: a * shrink };
                let l = match_detectors(&dets, &net, &loose).unwrap();
                let t = match_detectors(&dets, &net, &tight).unwrap();
                for (x, y) in l.iter().zip(&t) {
                    prop_assert!(!(x.way.is_none() && y.way.is_some()));
                }
            }

            #[test]
            fn translation_keeps_assignment(
                jitter in prop::collection::vec((-15.0f64..15.0, -15.0f64..15.0, -8.0f64..8.0), 1..12),
                dlon in -0.05f64..0.05, dlat in -0.05f64..0.05
            ) {
                let (dets, net) = fixture(&jitter);
                let shift = |g: &[LonLat]| g.iter().map(|p| LonLat::new(p.lon + dlon, p.lat + dlat)).collect::<Vec<_>>();
                let dets2: Vec<DetectorSegment> = dets
                    .iter()
                    .map(|d| DetectorSegment::new(d.detector_id.clone(), shift(&d.geometry), None).unwrap())
                    .collect();
                let net2 = RoadNetwork::new(
                    None,
                    net.segments()
                        .iter()
                        .map(|s| RoadSegment::new(s.way_id.clone(), &s.highway_tag, s.lanes, shift(&s.geometry)).unwrap())
                        .collect(),
                )
                .unwrap();
                let params = MatchParams::default();
                let a = match_detectors(&dets, &net, &params).unwrap();
                let b = match_detectors(&dets2, &net2, &params).unwrap();
                prop_assert_eq!(assignment(&a), assignment(&b));
            }
        }
    }
}
