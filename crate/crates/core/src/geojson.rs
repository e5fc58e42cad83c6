//! Minimal GeoJSON FeatureCollection reading and writing: only the
//! LineString, Polygon and MultiPolygon geometries the pipeline exchanges.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geo::LonLat;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Geometry {
    LineString(Vec<LonLat>),
    Polygon(Vec<Vec<LonLat>>),
    MultiPolygon(Vec<Vec<Vec<LonLat>>>),
    Other(String),
}

#[derive(Debug, Clone)]
pub(crate) struct Feature {
    pub geometry: Option<Geometry>,
    pub properties: Map<String, Value>,
}

#[derive(Debug, Clone)]
pub(crate) struct FeatureCollection {
    pub features: Vec<Feature>,
    pub foreign: Map<String, Value>,
}

#[derive(Deserialize)]
struct RawCollection {
    #[serde(rename = "type")]
    kind: String,
    features: Vec<RawFeature>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Deserialize)]
struct RawFeature {
    geometry: Option<RawGeometry>,
    #[serde(default)]
    properties: Option<Map<String, Value>>,
}

#[derive(Deserialize)]
struct RawGeometry {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    coordinates: Value,
}

pub(crate) fn read_collection(path: &Path) -> Result<FeatureCollection> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_collection(&text)
}

pub(crate) fn parse_collection(text: &str) -> Result<FeatureCollection> {
    let raw: RawCollection = serde_json::from_str(text)?;
    if raw.kind != "FeatureCollection" {
        return Err(Error::GeoJson(format!("expected FeatureCollection, got {}", raw.kind)));
    }
    let mut foreign = raw.extra;
    foreign.remove("type");
    let features = raw
        .features
        .into_iter()
        .map(|f| {
            Ok(Feature {
                geometry: f.geometry.map(convert_geometry).transpose()?,
                properties: f.properties.unwrap_or_default(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(FeatureCollection { features, foreign })
}

fn convert_geometry(g: RawGeometry) -> Result<Geometry> {
    Ok(match g.kind.as_str() {
        "LineString" => Geometry::LineString(positions(&g.coordinates)?),
        "Polygon" => Geometry::Polygon(rings(&g.coordinates)?),
        "MultiPolygon" => Geometry::MultiPolygon(
            g.coordinates
                .as_array()
                .ok_or_else(|| Error::GeoJson("MultiPolygon coordinates must be an array".into()))?
                .iter()
                .map(rings)
                .collect::<Result<_>>()?,
        ),
        other => Geometry::Other(other.to_string()),
    })
}

fn position(v: &Value) -> Result<LonLat> {
    match v.as_array().map(Vec::as_slice) {
        Some([lon, lat, ..]) => match (lon.as_f64(), lat.as_f64()) {
            (Some(lon), Some(lat)) if lon.is_finite() && lat.is_finite() => Ok(LonLat::new(lon, lat)),
            _ => Err(Error::GeoJson(format!("non-numeric position {v}"))),
        },
        _ => Err(Error::GeoJson(format!("bad position {v}"))),
    }
}

fn positions(v: &Value) -> Result<Vec<LonLat>> {
    v.as_array()
        .ok_or_else(|| Error::GeoJson("coordinates must be an array".into()))?
        .iter()
        .map(position)
        .collect()
}

fn rings(v: &Value) -> Result<Vec<Vec<LonLat>>> {
    v.as_array()
        .ok_or_else(|| Error::GeoJson("polygon coordinates must be an array".into()))?
        .iter()
        .map(positions)
        .collect()
}

pub(crate) fn string_property(props: &Map<String, Value>, key: &str) -> Option<String> {
    match props.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

pub(crate) fn number_property(props: &Map<String, Value>, key: &str) -> Option<f64> {
    match props.get(key)? {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn coords(points: &[LonLat]) -> Value {
    Value::Array(points.iter().map(|p| json!([p.lon, p.lat])).collect())
}

pub(crate) fn line_feature(properties: Map<String, Value>, points: &[LonLat]) -> Value {
    json!({
        "type": "Feature",
        "properties": properties,
        "geometry": { "type": "LineString", "coordinates": coords(points) },
    })
}

pub(crate) fn polygon_feature(properties: Map<String, Value>, rings: &[Vec<LonLat>]) -> Value {
    json!({
        "type": "Feature",
        "properties": properties,
        "geometry": {
            "type": "Polygon",
            "coordinates": rings.iter().map(|r| coords(r)).collect::<Vec<_>>(),
        },
    })
}

pub(crate) fn collection(features: Vec<Value>, foreign: Map<String, Value>) -> Value {
    let mut obj = Map::new();
    obj.insert("type".into(), json!("FeatureCollection"));
    for (k, v) in foreign {
        obj.insert(k, v);
    }
    obj.insert("features".into(), Value::Array(features));
    Value::Object(obj)
}
