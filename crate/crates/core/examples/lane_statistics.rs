//! Loads a road network, keeps higher-order roads and derives lane-count
//! fallbacks per class.

use nfdlab::network::{filter_higher_order, lane_class_means, read_road_network, HighwayClass};

const NETWORK: &str = r#"{
  "type": "FeatureCollection",
  "snapshot_date": "2023-01-01",
  "features": [
    {"type": "Feature", "properties": {"way_id": "10", "highway": "primary", "lanes": "3"},
     "geometry": {"type": "LineString", "coordinates": [[2.340, 48.850], [2.345, 48.850]]}},
    {"type": "Feature", "properties": {"way_id": "11", "highway": "primary", "lanes": 3},
     "geometry": {"type": "LineString", "coordinates": [[2.345, 48.850], [2.350, 48.850]]}},
    {"type": "Feature", "properties": {"way_id": "12", "highway": "primary", "lanes": "3.27"},
     "geometry": {"type": "LineString", "coordinates": [[2.350, 48.850], [2.355, 48.851]]}},
    {"type": "Feature", "properties": {"way_id": "20", "highway": "secondary"},
     "geometry": {"type": "LineString", "coordinates": [[2.345, 48.850], [2.345, 48.856]]}},
    {"type": "Feature", "properties": {"way_id": "30", "highway": "residential", "lanes": "1"},
     "geometry": {"type": "LineString", "coordinates": [[2.341, 48.852], [2.343, 48.853]]}}
  ]
}"#;

fn main() -> nfdlab::Result<()> {
    let all = read_road_network(NETWORK)?;
    let roads = filter_higher_order(&all);
    println!("snapshot {:?}: {} ways, {} higher-order", all.snapshot_date, all.len(), roads.len());
    for s in roads.segments() {
        println!("  way {} {:<9} lanes {:?} {:.3} km", s.way_id, s.highway_class, s.lanes, s.length_km);
    }

    let stats = lane_class_means(&roads)?;
    println!("global mean {:.2} lanes", stats.global_mean);
    for class in [HighwayClass::Primary, HighwayClass::Secondary] {
        // secondary has no tags, so it falls back to the global mean
        println!("  {class}: {:.2}", stats.mean_for(class));
    }
    Ok(())
}
