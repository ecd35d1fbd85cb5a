//! Bounding boxes, the two stream-collection geo heuristics, geotag-kind
//! classification and the post-hoc city filter.
//!
//! All intervals are closed: a point on the box edge is inside, and two
//! boxes sharing only an edge overlap.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::TweetRecord;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeRange(f64),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeRange(f64),
    #[error("coordinate is not finite")]
    NotFinite,
    #[error("box corners out of order (sw must be <= ne on both axes; antimeridian-crossing boxes are unsupported)")]
    CornerOrder,
}

/// A latitude/longitude pair in degrees. Construction validates ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(GeoError::NotFinite);
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::LatitudeRange(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::LongitudeRange(lon));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    fn key(&self) -> (u64, u64) {
        (self.lat.to_bits(), self.lon.to_bits())
    }
}

impl TryFrom<(f64, f64)> for GeoPoint {
    type Error = GeoError;
    fn try_from((lat, lon): (f64, f64)) -> Result<Self, GeoError> {
        GeoPoint::new(lat, lon)
    }
}

impl From<GeoPoint> for (f64, f64) {
    fn from(p: GeoPoint) -> (f64, f64) {
        (p.lat, p.lon)
    }
}

/// Axis-aligned lat/lon rectangle given by its south-west and north-east
/// corners. Degenerate boxes (sw == ne) are legal and represent specific
/// places.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "((f64, f64), (f64, f64))", into = "((f64, f64), (f64, f64))")]
pub struct GeoBox {
    sw: GeoPoint,
    ne: GeoPoint,
}

impl GeoBox {
    pub fn new(sw: GeoPoint, ne: GeoPoint) -> Result<Self, GeoError> {
        if sw.lat > ne.lat || sw.lon > ne.lon {
            return Err(GeoError::CornerOrder);
        }
        Ok(GeoBox { sw, ne })
    }

    pub fn from_corners(
        sw_lat: f64,
        sw_lon: f64,
        ne_lat: f64,
        ne_lon: f64,
    ) -> Result<Self, GeoError> {
        GeoBox::new(GeoPoint::new(sw_lat, sw_lon)?, GeoPoint::new(ne_lat, ne_lon)?)
    }

    pub fn sw(&self) -> GeoPoint {
        self.sw
    }

    pub fn ne(&self) -> GeoPoint {
        self.ne
    }

    pub fn is_degenerate(&self) -> bool {
        self.sw == self.ne
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint {
            lat: (self.sw.lat + self.ne.lat) / 2.0,
            lon: (self.sw.lon + self.ne.lon) / 2.0,
        }
    }

    /// Closed-box containment: edges count as inside.
    pub fn contains(&self, p: GeoPoint) -> bool {
        self.sw.lat <= p.lat && p.lat <= self.ne.lat && self.sw.lon <= p.lon && p.lon <= self.ne.lon
    }

    /// True iff the intervals intersect on both axes; a shared edge counts.
    pub fn overlaps(&self, other: &GeoBox) -> bool {
        self.sw.lat <= other.ne.lat
            && other.sw.lat <= self.ne.lat
            && self.sw.lon <= other.ne.lon
            && other.sw.lon <= self.ne.lon
    }

    /// True iff `other` lies entirely inside this box.
    pub fn contains_box(&self, other: &GeoBox) -> bool {
        self.contains(other.sw) && self.contains(other.ne)
    }

    fn key(&self) -> ((u64, u64), (u64, u64)) {
        (self.sw.key(), self.ne.key())
    }
}

impl TryFrom<((f64, f64), (f64, f64))> for GeoBox {
    type Error = GeoError;
    fn try_from((sw, ne): ((f64, f64), (f64, f64))) -> Result<Self, GeoError> {
        GeoBox::new(GeoPoint::try_from(sw)?, GeoPoint::try_from(ne)?)
    }
}

impl From<GeoBox> for ((f64, f64), (f64, f64)) {
    fn from(b: GeoBox) -> Self {
        (b.sw.into(), b.ne.into())
    }
}

/// A named place with its bounding-box geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceTag {
    pub name: String,
    pub bbox: GeoBox,
}

/// The three kinds of geo tag observed on tweets, plus the untagged case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeoTagKind {
    /// GPS coordinate attached to the tweet.
    PreciseCoordinate,
    /// Place whose four ring vertices coincide: a point venue.
    DegeneratePlaceBox,
    /// Place with a proper, variable-size bounding box.
    VariablePlaceBox,
    Untagged,
}

impl GeoTagKind {
    pub fn label(&self) -> &'static str {
        match self {
            GeoTagKind::PreciseCoordinate => "precise",
            GeoTagKind::DegeneratePlaceBox => "degenerate_place",
            GeoTagKind::VariablePlaceBox => "variable_place",
            GeoTagKind::Untagged => "untagged",
        }
    }
}

/// How a place bounding box is matched against the city box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlaceMode {
    /// Place box must lie entirely inside the city box (default).
    Containment,
    /// Place box center must lie inside the city box.
    CenterInside,
    /// Any overlap between place box and city box matches.
    Overlap,
}

impl Default for PlaceMode {
    fn default() -> Self {
        PlaceMode::Containment
    }
}

impl std::str::FromStr for PlaceMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "containment" => Ok(PlaceMode::Containment),
            "center" => Ok(PlaceMode::CenterInside),
            "overlap" => Ok(PlaceMode::Overlap),
            other => Err(format!(
                "unknown place mode {other:?} (expected containment|center|overlap)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterReason {
    CoordinateInside,
    CoordinateOutside,
    PlaceMatched,
    PlaceUnmatched,
    NoGeoInfo,
}

/// Outcome of running one record through the city filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub accepted: bool,
    pub reason: FilterReason,
}

/// Classify which kind of geo information a record carries. A precise
/// coordinate dominates any place tag.
pub fn classify_geotag(record: &TweetRecord) -> GeoTagKind {
    if record.coordinate.is_some() {
        return GeoTagKind::PreciseCoordinate;
    }
    match &record.place {
        Some(place) if place.bbox.is_degenerate() => GeoTagKind::DegeneratePlaceBox,
        Some(_) => GeoTagKind::VariablePlaceBox,
        None => GeoTagKind::Untagged,
    }
}

/// The two-heuristic city filter. A populated coordinate is tested against
/// the city box and the place field is never consulted; otherwise the place
/// box is matched per `place_mode`; records with neither are rejected.
pub fn city_filter(record: &TweetRecord, city: &GeoBox, place_mode: PlaceMode) -> FilterDecision {
    if let Some(p) = record.coordinate {
        let inside = city.contains(p);
        return FilterDecision {
            accepted: inside,
            reason: if inside {
                FilterReason::CoordinateInside
            } else {
                FilterReason::CoordinateOutside
            },
        };
    }
    if let Some(place) = &record.place {
        let matched = match place_mode {
            PlaceMode::Containment => city.contains_box(&place.bbox),
            PlaceMode::CenterInside => city.contains(place.bbox.center()),
            PlaceMode::Overlap => city.overlaps(&place.bbox),
        };
        return FilterDecision {
            accepted: matched,
            reason: if matched {
                FilterReason::PlaceMatched
            } else {
                FilterReason::PlaceUnmatched
            },
        };
    }
    FilterDecision {
        accepted: false,
        reason: FilterReason::NoGeoInfo,
    }
}

/// Per-kind row of the geotag breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeotagKindRow {
    pub kind: GeoTagKind,
    /// Distinct boxes or points, by exact corner equality.
    pub distinct: usize,
    pub tweets: usize,
    /// Share of tagged (non-untagged) records, in percent.
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeotagBreakdown {
    pub rows: Vec<GeotagKindRow>,
    pub untagged: usize,
}

/// Count records and distinct geometries per geotag kind. Percentages are
/// over the tagged records and sum to 100 (up to rounding) when any exist.
pub fn geotag_breakdown<'a>(records: impl IntoIterator<Item = &'a TweetRecord>) -> GeotagBreakdown {
    let mut precise_points: BTreeSet<(u64, u64)> = BTreeSet::new();
    let mut degenerate_boxes: BTreeSet<((u64, u64), (u64, u64))> = BTreeSet::new();
    let mut variable_boxes: BTreeSet<((u64, u64), (u64, u64))> = BTreeSet::new();
    let (mut n_precise, mut n_degenerate, mut n_variable, mut n_untagged) = (0, 0, 0, 0);

    for r in records {
        match classify_geotag(r) {
            GeoTagKind::PreciseCoordinate => {
                n_precise += 1;
                precise_points.insert(r.coordinate.expect("classified precise").key());
            }
            GeoTagKind::DegeneratePlaceBox => {
                n_degenerate += 1;
                degenerate_boxes.insert(r.place.as_ref().expect("classified place").bbox.key());
            }
            GeoTagKind::VariablePlaceBox => {
                n_variable += 1;
                variable_boxes.insert(r.place.as_ref().expect("classified place").bbox.key());
            }
            GeoTagKind::Untagged => n_untagged += 1,
        }
    }

    let tagged = n_precise + n_degenerate + n_variable;
    let pct = |n: usize| {
        if tagged == 0 {
            0.0
        } else {
            100.0 * n as f64 / tagged as f64
        }
    };
    GeotagBreakdown {
        rows: vec![
            GeotagKindRow {
                kind: GeoTagKind::PreciseCoordinate,
                distinct: precise_points.len(),
                tweets: n_precise,
                percentage: pct(n_precise),
            },
            GeotagKindRow {
                kind: GeoTagKind::DegeneratePlaceBox,
                distinct: degenerate_boxes.len(),
                tweets: n_degenerate,
                percentage: pct(n_degenerate),
            },
            GeotagKindRow {
                kind: GeoTagKind::VariablePlaceBox,
                distinct: variable_boxes.len(),
                tweets: n_variable,
                percentage: pct(n_variable),
            },
        ],
        untagged: n_untagged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{EntityCounts, TweetRecord};

    fn rio() -> GeoBox {
        GeoBox::from_corners(-23.08302, -43.795449, -22.739823, -43.087707).unwrap()
    }

    fn record(coordinate: Option<GeoPoint>, place: Option<PlaceTag>) -> TweetRecord {
        TweetRecord {
            id: "t1".into(),
            text: "hi".into(),
            created_at_utc: 0,
            lang: "pt".into(),
            coordinate,
            place,
            entities: EntityCounts::default(),
            user_id: "u1".into(),
        }
    }

    fn place(sw_lat: f64, sw_lon: f64, ne_lat: f64, ne_lon: f64) -> PlaceTag {
        PlaceTag {
            name: "somewhere".into(),
            bbox: GeoBox::from_corners(sw_lat, sw_lon, ne_lat, ne_lon).unwrap(),
        }
    }

    #[test]
    fn contains_city_point() {
        assert!(rio().contains(GeoPoint::new(-22.9, -43.2).unwrap()));
    }

    #[test]
    fn contains_ne_corner_closed() {
        let b = rio();
        assert!(b.contains(b.ne()));
        assert!(b.contains(b.sw()));
    }

    #[test]
    fn contains_rejects_lon_outside() {
        assert!(!rio().contains(GeoPoint::new(-22.9, -42.0).unwrap()));
    }

    #[test]
    fn overlaps_identity() {
        let b = rio();
        assert!(b.overlaps(&b));
    }

    #[test]
    fn overlaps_disjoint() {
        let a = GeoBox::from_corners(0.0, 0.0, 1.0, 1.0).unwrap();
        let b = GeoBox::from_corners(2.0, 2.0, 3.0, 3.0).unwrap();
        assert!(!a.overlaps(&b));
        assert!(!b.overlaps(&a));
    }

    #[test]
    fn overlaps_shared_edge() {
        let a = GeoBox::from_corners(0.0, 0.0, 1.0, 1.0).unwrap();
        let b = GeoBox::from_corners(1.0, 0.0, 2.0, 1.0).unwrap();
        assert!(a.overlaps(&b));
        assert!(b.overlaps(&a));
    }

    #[test]
    fn invalid_constructions() {
        assert_eq!(GeoPoint::new(91.0, 0.0), Err(GeoError::LatitudeRange(91.0)));
        assert_eq!(
            GeoPoint::new(0.0, 200.0),
            Err(GeoError::LongitudeRange(200.0))
        );
        assert_eq!(GeoPoint::new(f64::NAN, 0.0), Err(GeoError::NotFinite));
        // Antimeridian-crossing (sw.lon > ne.lon) is a constructor error.
        assert_eq!(
            GeoBox::from_corners(0.0, 170.0, 1.0, -170.0),
            Err(GeoError::CornerOrder)
        );
    }

    #[test]
    fn classify_coordinate_dominates_place() {
        let r = record(
            Some(GeoPoint::new(-22.9, -43.2).unwrap()),
            Some(place(-23.0, -43.3, -22.8, -43.1)),
        );
        assert_eq!(classify_geotag(&r), GeoTagKind::PreciseCoordinate);
    }

    #[test]
    fn classify_degenerate_place() {
        let r = record(None, Some(place(-22.9, -43.2, -22.9, -43.2)));
        assert_eq!(classify_geotag(&r), GeoTagKind::DegeneratePlaceBox);
    }

    #[test]
    fn classify_untagged() {
        assert_eq!(classify_geotag(&record(None, None)), GeoTagKind::Untagged);
    }

    #[test]
    fn filter_coordinate_inside() {
        let r = record(Some(GeoPoint::new(-22.9, -43.2).unwrap()), None);
        let d = city_filter(&r, &rio(), PlaceMode::Containment);
        assert!(d.accepted);
        assert_eq!(d.reason, FilterReason::CoordinateInside);
    }

    #[test]
    fn filter_place_contained() {
        let r = record(None, Some(place(-23.0, -43.5, -22.9, -43.4)));
        let d = city_filter(&r, &rio(), PlaceMode::Containment);
        assert!(d.accepted);
        assert_eq!(d.reason, FilterReason::PlaceMatched);
    }

    #[test]
    fn filter_place_disjoint_all_modes() {
        let r = record(None, Some(place(0.0, 0.0, 1.0, 1.0)));
        for mode in [
            PlaceMode::Containment,
            PlaceMode::CenterInside,
            PlaceMode::Overlap,
        ] {
            let d = city_filter(&r, &rio(), mode);
            assert!(!d.accepted);
            assert_eq!(d.reason, FilterReason::PlaceUnmatched);
        }
    }

    #[test]
    fn filter_no_geo_info() {
        let d = city_filter(&record(None, None), &rio(), PlaceMode::Containment);
        assert!(!d.accepted);
        assert_eq!(d.reason, FilterReason::NoGeoInfo);
    }

    #[test]
    fn filter_never_consults_place_when_coordinate_present() {
        // Coordinate outside the city, place well inside: heuristic 1 wins.
        let r = record(
            Some(GeoPoint::new(0.0, 0.0).unwrap()),
            Some(place(-23.0, -43.5, -22.9, -43.4)),
        );
        let d = city_filter(&r, &rio(), PlaceMode::Containment);
        assert!(!d.accepted);
        assert_eq!(d.reason, FilterReason::CoordinateOutside);
    }

    #[test]
    fn breakdown_percentages() {
        let recs = vec![
            record(Some(GeoPoint::new(1.0, 1.0).unwrap()), None),
            record(Some(GeoPoint::new(2.0, 2.0).unwrap()), None),
            record(None, Some(place(3.0, 3.0, 3.0, 3.0))),
            record(None, Some(place(4.0, 4.0, 5.0, 5.0))),
        ];
        let b = geotag_breakdown(&recs);
        assert_eq!(b.rows[0].tweets, 2);
        assert!((b.rows[0].percentage - 50.0).abs() < 1e-9);
        assert!((b.rows[1].percentage - 25.0).abs() < 1e-9);
        assert!((b.rows[2].percentage - 25.0).abs() < 1e-9);
        assert_eq!(b.untagged, 0);
        assert_eq!(b.rows[0].distinct, 2);
    }

    #[test]
    fn breakdown_empty() {
        let b = geotag_breakdown(std::iter::empty());
        for row in &b.rows {
            assert_eq!(row.tweets, 0);
            assert_eq!(row.distinct, 0);
            assert_eq!(row.percentage, 0.0);
        }
        assert_eq!(b.untagged, 0);
    }

    #[test]
    fn breakdown_distinct_by_exact_equality() {
        let p = GeoPoint::new(1.0, 1.0).unwrap();
        let recs = vec![
            record(Some(p), None),
            record(Some(p), None),
            record(Some(GeoPoint::new(1.0, 1.0 + 1e-12).unwrap()), None),
        ];
        let b = geotag_breakdown(&recs);
        assert_eq!(b.rows[0].tweets, 3);
        assert_eq!(b.rows[0].distinct, 2);
    }
}
