//! Taxiway network, taxi clearances and the structural relation between two
//! clearances (where and how their routes meet).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geofence::Geofence;
use crate::trackdata::Icao24;

const BUNDLED_MAP: &str = include_str!("../data/airport.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxiSegment {
    #[serde(rename = "id")]
    pub taxiway_id: String,
    pub length_m: f64,
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geofence: Option<Geofence>,
}

impl TaxiSegment {
    pub fn has_endpoint(&self, node: &str) -> bool {
        self.from == node || self.to == node
    }

    pub fn other_endpoint(&self, node: &str) -> Option<&str> {
        if self.from == node {
            Some(&self.to)
        } else if self.to == node {
            Some(&self.from)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapViolation {
    #[error("duplicate node id {node}")]
    DuplicateNode { node: String },
    #[error("duplicate segment id {segment}")]
    DuplicateSegment { segment: String },
    #[error("segment {segment} has non-positive length {length_m}")]
    NonPositiveLength { segment: String, length_m: f64 },
    #[error("segment {segment} starts and ends at {node}")]
    SameEndpoints { segment: String, node: String },
    #[error("segment {segment} references unknown node {node}")]
    DanglingNode { segment: String, node: String },
    #[error("network is disconnected; unreachable nodes {nodes:?}")]
    Disconnected { nodes: Vec<String> },
    #[error("geofences of {a} and {b} overlap")]
    OverlappingGeofences { a: String, b: String },
    #[error("map has no segments")]
    Empty,
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("cannot read map: {0}")]
    Io(#[from] std::io::Error),
    #[error("map does not parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("map failed validation: {}", list(.0))]
    Invalid(Vec<MapViolation>),
}

fn list<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MapFile {
    nodes: Vec<Node>,
    segments: Vec<TaxiSegment>,
}

/// A validated taxiway network. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapFile", into = "MapFile")]
pub struct AirportMap {
    nodes: Vec<Node>,
    segments: Vec<TaxiSegment>,
    #[serde(skip)]
    segment_index: HashMap<String, usize>,
    #[serde(skip)]
    node_index: HashMap<String, usize>,
}

impl TryFrom<MapFile> for AirportMap {
    type Error = MapError;

    fn try_from(file: MapFile) -> Result<Self, MapError> {
        AirportMap::new(file.nodes, file.segments).map_err(MapError::Invalid)
    }
}

impl From<AirportMap> for MapFile {
    fn from(m: AirportMap) -> Self {
        MapFile { nodes: m.nodes, segments: m.segments }
    }
}

impl AirportMap {
    pub fn new(nodes: Vec<Node>, segments: Vec<TaxiSegment>) -> Result<Self, Vec<MapViolation>> {
        let mut violations = Vec::new();
        let mut node_index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.id.clone(), i).is_some() {
                violations.push(MapViolation::DuplicateNode { node: n.id.clone() });
            }
        }
        let mut segment_index = HashMap::new();
        if segments.is_empty() {
            violations.push(MapViolation::Empty);
        }
        for (i, s) in segments.iter().enumerate() {
            if segment_index.insert(s.taxiway_id.clone(), i).is_some() {
                violations.push(MapViolation::DuplicateSegment { segment: s.taxiway_id.clone() });
            }
            if !(s.length_m > 0.0) || !s.length_m.is_finite() {
                violations.push(MapViolation::NonPositiveLength {
                    segment: s.taxiway_id.clone(),
                    length_m: s.length_m,
                });
            }
            if s.from == s.to {
                violations.push(MapViolation::SameEndpoints {
                    segment: s.taxiway_id.clone(),
                    node: s.from.clone(),
                });
            }
            for end in [&s.from, &s.to] {
                if !node_index.contains_key(end) {
                    violations.push(MapViolation::DanglingNode {
                        segment: s.taxiway_id.clone(),
                        node: end.clone(),
                    });
                }
            }
        }

        if !nodes.is_empty() && !segments.is_empty() {
            let unreachable = unreachable_nodes(&nodes, &segments);
            if !unreachable.is_empty() {
                violations.push(MapViolation::Disconnected { nodes: unreachable });
            }
        }

        for (i, a) in segments.iter().enumerate() {
            let Some(ga) = &a.geofence else { continue };
            for b in &segments[i + 1..] {
                if let Some(gb) = &b.geofence {
                    if ga.overlaps(gb) {
                        violations.push(MapViolation::OverlappingGeofences {
                            a: a.taxiway_id.clone(),
                            b: b.taxiway_id.clone(),
                        });
                    }
                }
            }
        }

        if violations.is_empty() {
            Ok(Self { nodes, segments, segment_index, node_index })
        } else {
            Err(violations)
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self, MapError> {
        let file: MapFile = serde_json::from_str(s)?;
        AirportMap::try_from(file)
    }

    /// The bundled fixture: the eight Table-1 taxiways (B-1 … P) with their
    /// published lengths plus the C1 and C6 connectors. Node coordinates are a
    /// schematic layout near 39.5N 116.4E, not surveyed positions.
    pub fn bundled() -> Self {
        Self::from_json_str(BUNDLED_MAP).expect("bundled map is valid")
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn segments(&self) -> &[TaxiSegment] {
        &self.segments
    }

    pub fn segment(&self, taxiway_id: &str) -> Option<&TaxiSegment> {
        self.segment_index.get(taxiway_id).map(|&i| &self.segments[i])
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.node_index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn segment_ids(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().map(|s| s.taxiway_id.as_str())
    }

    /// Segments incident to `node`.
    pub fn incident(&self, node: &str) -> impl Iterator<Item = &TaxiSegment> {
        let node = node.to_owned();
        self.segments.iter().filter(move |s| s.has_endpoint(&node))
    }
}

fn unreachable_nodes(nodes: &[Node], segments: &[TaxiSegment]) -> Vec<String> {
    let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
    for s in segments {
        adj.entry(&s.from).or_default().push(&s.to);
        adj.entry(&s.to).or_default().push(&s.from);
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([nodes[0].id.as_str()]);
    seen.insert(nodes[0].id.as_str());
    while let Some(n) = queue.pop_front() {
        for &m in adj.get(n).into_iter().flatten() {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    nodes
        .iter()
        .filter(|n| !seen.contains(n.id.as_str()))
        .map(|n| n.id.clone())
        .collect()
}

pub fn load_map(path: impl AsRef<Path>) -> Result<AirportMap, MapError> {
    let text = std::fs::read_to_string(path)?;
    AirportMap::from_json_str(&text)
}

/// A taxi clearance: route and start-of-taxi time `t_si`.
///
/// For arrivals `start_time` is the moment the aircraft leaves the runway;
/// for departures it is the moment it starts taxiing from the stand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxiCommand {
    pub command_id: String,
    pub icao24: Icao24,
    pub route: Vec<String>,
    pub start_time: DateTime<Utc>,
    /// Node where taxiing begins. Only needed when the route has a single
    /// segment; longer routes derive it from the junction with the second
    /// segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_node: Option<String>,
}

impl TaxiCommand {
    /// Same clearance with the start time moved by `seconds`.
    pub fn shifted(&self, seconds: f64) -> TaxiCommand {
        let mut c = self.clone();
        c.start_time += chrono::Duration::microseconds((seconds * 1e6).round() as i64);
        c
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CommandViolation {
    #[error("route is empty")]
    EmptyRoute,
    #[error("route references unknown taxiway {segment}")]
    UnknownSegment { segment: String },
    #[error("taxiway {segment} appears more than once")]
    RepeatedSegment { segment: String },
    #[error("{from} and {to} do not share a node")]
    NotContiguous { from: String, to: String },
    #[error("entry node {node} is not an endpoint of {segment}")]
    BadEntryNode { node: String, segment: String },
    #[error("route passes node {node} twice")]
    RevisitedNode { node: String },
}

/// One traversed segment with its direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub taxiway_id: String,
    pub length_m: f64,
    pub entry_node: String,
    pub exit_node: String,
}

/// A clearance resolved against the map: ordered, directed legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRoute {
    pub legs: Vec<Leg>,
}

impl ResolvedRoute {
    pub fn start_node(&self) -> &str {
        &self.legs[0].entry_node
    }

    /// Every node in visiting order, start node first.
    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.start_node()).chain(self.legs.iter().map(|l| l.exit_node.as_str()))
    }
}

/// Check a clearance against the map and resolve each segment's direction.
pub fn validate_command(
    cmd: &TaxiCommand,
    map: &AirportMap,
) -> Result<ResolvedRoute, Vec<CommandViolation>> {
    let mut violations = Vec::new();
    if cmd.route.is_empty() {
        return Err(vec![CommandViolation::EmptyRoute]);
    }
    let mut seen = BTreeSet::new();
    let mut segments = Vec::with_capacity(cmd.route.len());
    for id in &cmd.route {
        if !seen.insert(id.as_str()) {
            violations.push(CommandViolation::RepeatedSegment { segment: id.clone() });
        }
        match map.segment(id) {
            Some(s) => segments.push(s),
            None => violations.push(CommandViolation::UnknownSegment { segment: id.clone() }),
        }
    }
    if !violations.is_empty() {
        return Err(violations);
    }

    for w in segments.windows(2) {
        if !(w[1].has_endpoint(&w[0].from) || w[1].has_endpoint(&w[0].to)) {
            violations.push(CommandViolation::NotContiguous {
                from: w[0].taxiway_id.clone(),
                to: w[1].taxiway_id.clone(),
            });
        }
    }
    if !violations.is_empty() {
        return Err(violations);
    }

    let first = segments[0];
    let entry = match &cmd.entry_node {
        Some(n) if first.has_endpoint(n) => n.clone(),
        Some(n) => {
            return Err(vec![CommandViolation::BadEntryNode {
                node: n.clone(),
                segment: first.taxiway_id.clone(),
            }])
        }
        None => match segments.get(1) {
            Some(second) if !second.has_endpoint(&first.from) => first.from.clone(),
            Some(second) if !second.has_endpoint(&first.to) => first.to.clone(),
            _ => first.from.clone(),
        },
    };

    let mut legs = Vec::with_capacity(segments.len());
    let mut at = entry;
    let mut visited = BTreeSet::from([at.clone()]);
    for (i, seg) in segments.iter().enumerate() {
        let Some(exit) = seg.other_endpoint(&at) else {
            violations.push(CommandViolation::NotContiguous {
                from: segments[i - 1].taxiway_id.clone(),
                to: seg.taxiway_id.clone(),
            });
            break;
        };
        let exit = exit.to_owned();
        if !visited.insert(exit.clone()) {
            violations.push(CommandViolation::RevisitedNode { node: exit.clone() });
        }
        legs.push(Leg {
            taxiway_id: seg.taxiway_id.clone(),
            length_m: seg.length_m,
            entry_node: at,
            exit_node: exit.clone(),
        });
        at = exit;
    }
    if violations.is_empty() {
        Ok(ResolvedRoute { legs })
    } else {
        Err(violations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// Routes meet at a node from different segments.
    Cross,
    /// Same segment, opposite directions (head-on).
    Confrontation,
    /// Same segment, same direction.
    RearEnd,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Cross => "cross",
            Relation::Confrontation => "confrontation",
            Relation::RearEnd => "rear-end",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "kebab-case")]
pub enum Feature {
    Node(String),
    Segment(String),
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Node(id) => write!(f, "node {id}"),
            Feature::Segment(id) => write!(f, "segment {id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SharedFeature {
    pub feature: Feature,
    pub relation: Relation,
}

/// Where two resolved routes meet.
///
/// Shared segments are classified by traversal direction. A node visited by
/// both routes is a crossing unless both routes use a common segment at that
/// node, in which case the segment feature already covers it. Direction on a
/// shared segment stands in for the 180° heading test because deduction runs
/// before the aircraft move.
pub fn shared_features(a: &ResolvedRoute, b: &ResolvedRoute) -> Vec<SharedFeature> {
    let mut out = BTreeSet::new();
    let b_legs: HashMap<&str, &Leg> = b.legs.iter().map(|l| (l.taxiway_id.as_str(), l)).collect();
    for la in &a.legs {
        if let Some(lb) = b_legs.get(la.taxiway_id.as_str()) {
            let relation = if la.entry_node == lb.entry_node {
                Relation::RearEnd
            } else {
                Relation::Confrontation
            };
            out.insert(SharedFeature { feature: Feature::Segment(la.taxiway_id.clone()), relation });
        }
    }

    let a_touch = segments_at_nodes(a);
    let b_touch = segments_at_nodes(b);
    for (node, segs_a) in &a_touch {
        let Some(segs_b) = b_touch.get(node) else { continue };
        if segs_a.is_disjoint(segs_b) {
            out.insert(SharedFeature {
                feature: Feature::Node((*node).to_owned()),
                relation: Relation::Cross,
            });
        }
    }
    out.into_iter().collect()
}

fn segments_at_nodes(route: &ResolvedRoute) -> BTreeMap<&str, BTreeSet<&str>> {
    let mut m: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for leg in &route.legs {
        m.entry(&leg.entry_node).or_default().insert(&leg.taxiway_id);
        m.entry(&leg.exit_node).or_default().insert(&leg.taxiway_id);
    }
    m
}
