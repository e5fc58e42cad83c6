//! Road-network snapshots: loading, restriction to higher-order roads, lane
//! statistics per highway class, and segment descriptors for matching.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geo::{self, LonLat, Point, Projection};
use crate::geojson::{self, Geometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HighwayClass {
    Primary,
    Secondary,
    Tertiary,
    Trunk,
    Motorway,
    Other,
}

impl HighwayClass {
    pub const HIGHER_ORDER: [HighwayClass; 5] = [
        HighwayClass::Primary,
        HighwayClass::Secondary,
        HighwayClass::Tertiary,
        HighwayClass::Trunk,
        HighwayClass::Motorway,
    ];

    /// Maps an OSM `highway=*` value. Link roads (`primary_link`, ...) and
    /// everything else land in [`HighwayClass::Other`].
    pub fn from_tag(tag: &str) -> Self {
        match tag {
            "primary" => HighwayClass::Primary,
            "secondary" => HighwayClass::Secondary,
            "tertiary" => HighwayClass::Tertiary,
            "trunk" => HighwayClass::Trunk,
            "motorway" => HighwayClass::Motorway,
            _ => HighwayClass::Other,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            HighwayClass::Primary => "primary",
            HighwayClass::Secondary => "secondary",
            HighwayClass::Tertiary => "tertiary",
            HighwayClass::Trunk => "trunk",
            HighwayClass::Motorway => "motorway",
            HighwayClass::Other => "other",
        }
    }

    pub fn is_higher_order(&self) -> bool {
        *self != HighwayClass::Other
    }
}

impl fmt::Display for HighwayClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub way_id: String,
    pub geometry: Vec<LonLat>,
    pub highway_class: HighwayClass,
    /// Raw `highway` tag, kept for reporting.
    pub highway_tag: String,
    pub lanes: Option<f64>,
    pub length_km: f64,
}

impl RoadSegment {
    /// Builds a segment, measuring its length along the geometry.
    pub fn new(
        way_id: impl Into<String>,
        highway_tag: &str,
        lanes: Option<f64>,
        geometry: Vec<LonLat>,
    ) -> Result<Self> {
        let way_id = way_id.into();
        if geometry.len() < 2 {
            return Err(Error::Geometry(format!("way {way_id} has fewer than 2 points")));
        }
        let length_km = geo::polyline_length_km(&geometry);
        Self::with_length(way_id, highway_tag, lanes, geometry, length_km)
    }

    pub fn with_length(
        way_id: impl Into<String>,
        highway_tag: &str,
        lanes: Option<f64>,
        geometry: Vec<LonLat>,
        length_km: f64,
    ) -> Result<Self> {
        let way_id = way_id.into();
        if geometry.len() < 2 {
            return Err(Error::Geometry(format!("way {way_id} has fewer than 2 points")));
        }
        if !(length_km.is_finite() && length_km > 0.0) {
            return Err(Error::Geometry(format!("way {way_id} has non-positive length")));
        }
        if let Some(n) = lanes {
            if !(n.is_finite() && n > 0.0) {
                return Err(Error::InvalidParameter(format!("way {way_id}: lanes {n} must be > 0")));
            }
        }
        Ok(Self {
            way_id,
            geometry,
            highway_class: HighwayClass::from_tag(highway_tag),
            highway_tag: highway_tag.to_string(),
            lanes,
            length_km,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoadNetwork {
    pub snapshot_date: Option<NaiveDate>,
    segments: Vec<RoadSegment>,
}

impl RoadNetwork {
    pub fn new(snapshot_date: Option<NaiveDate>, segments: Vec<RoadSegment>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(segments.len());
        for s in &segments {
            if !ids.insert(s.way_id.as_str()) {
                return Err(Error::DuplicateId(s.way_id.clone()));
            }
        }
        Ok(Self {
            snapshot_date,
            segments,
        })
    }

    pub fn segments(&self) -> &[RoadSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

pub fn parse_road_network(path: impl AsRef<Path>) -> Result<RoadNetwork> {
    let fc = geojson::read_collection(path.as_ref())?;
    network_from_collection(fc)
}

pub fn read_road_network(text: &str) -> Result<RoadNetwork> {
    network_from_collection(geojson::parse_collection(text)?)
}

fn network_from_collection(fc: geojson::FeatureCollection) -> Result<RoadNetwork> {
    let snapshot_date = match fc.foreign.get("snapshot_date") {
        Some(Value::String(s)) => Some(
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map_err(|_| Error::GeoJson(format!("bad snapshot_date {s:?}")))?,
        ),
        _ => None,
    };

    let mut segments = Vec::with_capacity(fc.features.len());
    for (i, feature) in fc.features.into_iter().enumerate() {
        let way_id = geojson::string_property(&feature.properties, "way_id")
            .ok_or_else(|| Error::GeoJson(format!("feature {i} has no way_id")))?;
        let points = match feature.geometry {
            None => return Err(Error::Geometry(format!("way {way_id} has no geometry"))),
            Some(Geometry::LineString(points)) => points,
            Some(other) => {
                log::warn!("skipping non-line feature {way_id} ({other:?})");
                continue;
            }
        };
        let highway = geojson::string_property(&feature.properties, "highway")
            .ok_or_else(|| Error::GeoJson(format!("way {way_id} has no highway property")))?;
        let lanes = match feature.properties.get("lanes") {
            None | Some(Value::Null) => None,
            Some(_) => match geojson::number_property(&feature.properties, "lanes") {
                Some(n) if n.is_finite() && n > 0.0 => Some(n),
                _ => {
                    log::warn!("way {way_id}: ignoring unusable lanes tag");
                    None
                }
            },
        };
        let segment = match geojson::number_property(&feature.properties, "length_km") {
            Some(len) => RoadSegment::with_length(way_id, &highway, lanes, points, len)?,
            None => RoadSegment::new(way_id, &highway, lanes, points)?,
        };
        segments.push(segment);
    }
    RoadNetwork::new(snapshot_date, segments)
}

/// Serializes the network in the same GeoJSON layout [`parse_road_network`] reads.
pub fn road_network_geojson(network: &RoadNetwork) -> Value {
    let features = network
        .segments
        .iter()
        .map(|s| {
            let mut props = Map::new();
            props.insert("way_id".into(), json!(s.way_id));
            props.insert("highway".into(), json!(s.highway_tag));
            if let Some(n) = s.lanes {
                props.insert("lanes".into(), json!(n));
            }
            props.insert("length_km".into(), json!(s.length_km));
            geojson::line_feature(props, &s.geometry)
        })
        .collect();
    let mut foreign = Map::new();
    if let Some(d) = network.snapshot_date {
        foreign.insert("snapshot_date".into(), json!(d.format("%Y-%m-%d").to_string()));
    }
    geojson::collection(features, foreign)
}

/// Keeps primary, secondary, tertiary, trunk and motorway ways.
pub fn filter_higher_order(network: &RoadNetwork) -> RoadNetwork {
    RoadNetwork {
        snapshot_date: network.snapshot_date,
        segments: network
            .segments
            .iter()
            .filter(|s| s.highway_class.is_higher_order())
            .cloned()
            .collect(),
    }
}

/// Mean tagged lane count per class, with the global mean as fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneStats {
    pub class_means: BTreeMap<HighwayClass, f64>,
    pub global_mean: f64,
    /// Number of tagged segments per class; zero marks a fallback entry.
    pub tagged_counts: BTreeMap<HighwayClass, usize>,
}

impl LaneStats {
    pub fn mean_for(&self, class: HighwayClass) -> f64 {
        self.class_means.get(&class).copied().unwrap_or(self.global_mean)
    }
}

pub fn lane_class_means(network: &RoadNetwork) -> Result<LaneStats> {
    let mut sums: BTreeMap<HighwayClass, (f64, usize)> = BTreeMap::new();
    let (mut total, mut count) = (0.0, 0usize);
    for s in network.segments.iter().filter(|s| s.highway_class.is_higher_order()) {
        if let Some(n) = s.lanes {
            let e = sums.entry(s.highway_class).or_default();
            e.0 += n;
            e.1 += 1;
            total += n;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoLaneTags);
    }
    let global_mean = total / count as f64;
    let mut class_means = BTreeMap::new();
    let mut tagged_counts = BTreeMap::new();
    for class in HighwayClass::HIGHER_ORDER {
        let (sum, n) = sums.get(&class).copied().unwrap_or_default();
        class_means.insert(class, if n > 0 { sum / n as f64 } else { global_mean });
        tagged_counts.insert(class, n);
    }
    Ok(LaneStats {
        class_means,
        global_mean,
        tagged_counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentDescriptor {
    pub centroid: Point,
    /// Chord direction, degrees clockwise from north, folded into `[0, 180)`.
    pub bearing: f64,
    pub length_km: f64,
}

pub fn describe_segment(segment: &RoadSegment, projection: &Projection) -> Result<SegmentDescriptor> {
    describe_polyline(&segment.geometry, segment.length_km, projection)
}

/// Centroid is the mean of the projected vertices; bearing is the direction
/// of the chord from the first to the last vertex.
pub fn describe_polyline(points: &[LonLat], length_km: f64, projection: &Projection) -> Result<SegmentDescriptor> {
    if points.len() < 2 {
        return Err(Error::Geometry("polyline needs at least 2 points".into()));
    }
    let projected: Vec<Point> = points.iter().map(|p| projection.project(*p)).collect();
    let n = projected.len() as f64;
    let centroid = Point::new(
        projected.iter().map(|p| p.x).sum::<f64>() / n,
        projected.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let (first, last) = (projected[0], projected[projected.len() - 1]);
    let (dx, dy) = (last.x - first.x, last.y - first.y);
    if dx.hypot(dy) < 1e-9 {
        return Err(Error::Geometry("zero-length chord".into()));
    }
    Ok(SegmentDescriptor {
        centroid,
        bearing: geo::fold_bearing(dx.atan2(dy).to_degrees()),
        length_km,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORIGIN: LonLat = LonLat::new(2.35, 48.85);

    fn seg(id: &str, tag: &str, lanes: Option<f64>) -> RoadSegment {
        RoadSegment::new(id, tag, lanes, vec![LonLat::new(2.35, 48.85), LonLat::new(2.351, 48.85)]).unwrap()
    }

    #[test]
    fn parses_features() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"way_id":"1","highway":"primary","lanes":3},
             "geometry":{"type":"LineString","coordinates":[[2.35,48.85],[2.35,48.86]]}},
            {"type":"Feature","properties":{"way_id":"2","highway":"residential"},
             "geometry":{"type":"LineString","coordinates":[[2.35,48.85],[2.36,48.85]]}},
            {"type":"Feature","properties":{"way_id":"3","highway":"primary"},
             "geometry":{"type":"Point","coordinates":[2.35,48.85]}}
        ]}"#;
        let net = read_road_network(text).unwrap();
        assert_eq!(net.len(), 2);
        let a = &net.segments()[0];
        assert_eq!(a.highway_class, HighwayClass::Primary);
        assert_eq!(a.lanes, Some(3.0));
        // R * 0.01 deg in radians
        assert!((a.length_km - 1.112).abs() < 5e-4, "{}", a.length_km);
        assert_eq!(net.segments()[1].lanes, None);
    }

    #[test]
    fn length_property_overrides_geometry() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"way_id":"1","highway":"trunk","length_km":0.25},
             "geometry":{"type":"LineString","coordinates":[[2.35,48.85],[2.35,48.86]]}}]}"#;
        assert_eq!(read_road_network(text).unwrap().segments()[0].length_km, 0.25);
    }

    #[test]
    fn missing_geometry_is_an_error() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"way_id":"1","highway":"trunk"},"geometry":null}]}"#;
        assert!(matches!(read_road_network(text), Err(Error::Geometry(_))));
    }

    #[test]
    fn duplicate_way_ids_are_rejected() {
        assert!(matches!(
            RoadNetwork::new(None, vec![seg("a", "primary", None), seg("a", "primary", None)]),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn geojson_round_trip() {
        let net = RoadNetwork::new(
            NaiveDate::from_ymd_opt(2024, 1, 1),
            vec![seg("a", "primary", Some(2.0)), seg("b", "living_street", None)],
        )
        .unwrap();
        let text = serde_json::to_string(&road_network_geojson(&net)).unwrap();
        assert_eq!(read_road_network(&text).unwrap(), net);
    }

    #[test]
    fn class_filter() {
        let net = RoadNetwork::new(
            None,
            vec![seg("r", "residential", None), seg("t", "trunk", None), seg("l", "primary_link", None)],
        )
        .unwrap();
        let f = filter_higher_order(&net);
        assert_eq!(f.len(), 1);
        assert_eq!(f.segments()[0].way_id, "t");
    }

    #[test]
    fn edge_ratio_fixture() {
        // 6352 higher-order ways out of 16554
        let tags = ["primary", "secondary", "tertiary", "trunk", "motorway"];
        let mut segs = Vec::new();
        for i in 0..16554 {
            let tag = if i < 6352 { tags[i % 5] } else { "residential" };
            segs.push(seg(&format!("w{i}"), tag, None));
        }
        let net = RoadNetwork::new(None, segs).unwrap();
        assert_eq!(filter_higher_order(&net).len(), 6352);
    }

    #[test]
    fn primary_mean_matches_reported_value() {
        let net = RoadNetwork::new(
            None,
            vec![
                seg("a", "primary", Some(3.0)),
                seg("b", "primary", Some(3.0)),
                seg("c", "primary", Some(3.27)),
            ],
        )
        .unwrap();
        let stats = lane_class_means(&net).unwrap();
        assert!((stats.mean_for(HighwayClass::Primary) - 3.09).abs() < 1e-12);
    }

    #[test]
    fn singleton_and_fallback() {
        let net = RoadNetwork::new(None, vec![seg("a", "secondary", Some(4.0)), seg("b", "tertiary", None)]).unwrap();
        let stats = lane_class_means(&net).unwrap();
        assert_eq!(stats.mean_for(HighwayClass::Secondary), 4.0);
        assert_eq!(stats.global_mean, 4.0);
        assert_eq!(stats.mean_for(HighwayClass::Tertiary), 4.0);
        assert_eq!(stats.tagged_counts[&HighwayClass::Tertiary], 0);
    }

    #[test]
    fn global_mean_spans_classes() {
        let net = RoadNetwork::new(
            None,
            vec![seg("a", "secondary", Some(2.0)), seg("b", "trunk", Some(3.0)), seg("c", "residential", Some(9.0))],
        )
        .unwrap();
        assert_eq!(lane_class_means(&net).unwrap().global_mean, 2.5);
    }

    #[test]
    fn no_tags_is_an_error() {
        let net = RoadNetwork::new(None, vec![seg("a", "primary", None)]).unwrap();
        assert!(matches!(lane_class_means(&net), Err(Error::NoLaneTags)));
    }

    fn polyline(proj: &Projection, pts: &[(f64, f64)]) -> Vec<LonLat> {
        pts.iter().map(|&(x, y)| proj.unproject(Point::new(x, y))).collect()
    }

    #[test]
    fn axis_bearings() {
        let proj = Projection::new(ORIGIN);
        let north = describe_polyline(&polyline(&proj, &[(0.0, 0.0), (0.0, 100.0)]), 0.1, &proj).unwrap();
        assert!(north.bearing.abs() < 1e-9);
        let east = describe_polyline(&polyline(&proj, &[(0.0, 0.0), (100.0, 0.0)]), 0.1, &proj).unwrap();
        assert!((east.bearing - 90.0).abs() < 1e-9);
    }

    #[test]
    fn l_shape_uses_chord() {
        // north 100 m then east 100 m: chord (100, 100) points at 45 degrees
        let proj = Projection::new(ORIGIN);
        let d = describe_polyline(
            &polyline(&proj, &[(0.0, 0.0), (0.0, 100.0), (100.0, 100.0)]),
            0.2,
            &proj,
        )
        .unwrap();
        assert!((d.bearing - 45.0).abs() < 1e-9);
        assert!((d.centroid.x - 100.0 / 3.0).abs() < 1e-6);
        assert!((d.centroid.y - 200.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn closed_loop_is_degenerate() {
        let proj = Projection::new(ORIGIN);
        let pts = polyline(&proj, &[(0.0, 0.0), (10.0, 10.0), (0.0, 0.0)]);
        assert!(matches!(describe_polyline(&pts, 0.03, &proj), Err(Error::Geometry(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_polyline() -> impl Strategy<Value = Vec<LonLat>> {
            prop::collection::vec((2.2f64..2.5, 48.8f64..48.9), 2..8)
                .prop_map(|v| v.into_iter().map(|(lon, lat)| LonLat::new(lon, lat)).collect())
        }

        fn arb_lanes() -> impl Strategy<Value = Vec<(usize, Option<f64>)>> {
            prop::collection::vec((0usize..6, prop::option::of(0.5f64..6.0)), 1..40)
        }

        const TAGS: [&str; 6] = ["primary", "secondary", "tertiary", "trunk", "motorway", "service"];

        proptest! {
            #[test]
            fn reversal_invariance(points in arb_polyline()) {
                let proj = Projection::new(ORIGIN);
                let mut rev = points.clone();
                rev.reverse();
                let a = geo::polyline_length_km(&points);
                let b = geo::polyline_length_km(&rev);
                prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
                if let (Ok(da), Ok(db)) = (describe_polyline(&points, a, &proj), describe_polyline(&rev, b, &proj)) {
                    prop_assert!(geo::undirected_angle_diff(da.bearing, db.bearing) < 1e-7);
                    prop_assert!((0.0..180.0).contains(&da.bearing));
                }
            }

            #[test]
            fn filter_is_idempotent_and_means_are_bounded(spec in arb_lanes()) {
                let segs: Vec<RoadSegment> = spec
                    .iter()
                    .enumerate()
                    .map(|(i, (t, lanes))| seg(&format!("w{i}"), TAGS[*t], *lanes))
                    .collect();
                let net = RoadNetwork::new(None, segs).unwrap();
                let once = filter_higher_order(&net);
                prop_assert!(once.len() <= net.len());
                prop_assert_eq!(&filter_higher_order(&once), &once);
                if let Ok(stats) = lane_class_means(&once) {
                    for class in HighwayClass::HIGHER_ORDER {
                        let tagged: Vec<f64> = once
                            .segments()
                            .iter()
                            .filter(|s| s.highway_class == class)
                            .filter_map(|s| s.lanes)
                            .collect();
                        if !tagged.is_empty() {
                            let lo = tagged.iter().cloned().fold(f64::INFINITY, f64::min);
                            let hi = tagged.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                            let m = stats.mean_for(class);
                            prop_assert!(m >= lo - 1e-12 && m <= hi + 1e-12);
                        }
                    }
                }
            }
        }
    }
}
