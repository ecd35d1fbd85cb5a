//! NDJSON tweet ingestion: one status object per line, parsed into validated
//! records. Malformed lines are counted and skipped, never fatal, so a long
//! collection run survives garbage in the stream.

use std::collections::HashSet;
use std::io::{self, BufRead};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoBox, GeoPoint, PlaceTag};

/// Twitter's classic `created_at` wire format, e.g.
/// `Wed Aug 27 13:08:45 +0000 2008`.
pub const CREATED_AT_FORMAT: &str = "%a %b %d %H:%M:%S %z %Y";

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed json: {0}")]
    MalformedJson(String),
    #[error("missing field: {0}")]
    MissingField(&'static str),
    #[error("bad geometry: {0}")]
    BadGeometry(String),
}

/// Counts of metadata entities attached to a tweet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCounts {
    pub hashtags: u32,
    pub user_mentions: u32,
    pub urls: u32,
    pub media: u32,
}

/// One parsed tweet. Coordinates are stored (latitude, longitude) even
/// though the wire order is (longitude, latitude).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    /// Seconds since the Unix epoch, UTC.
    pub created_at_utc: i64,
    /// Lowercase language code as reported by the wire record.
    pub lang: String,
    pub coordinate: Option<GeoPoint>,
    pub place: Option<PlaceTag>,
    pub entities: EntityCounts,
    /// Empty when the wire record carries no user block.
    pub user_id: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines_read: u64,
    pub parsed_ok: u64,
    pub malformed: u64,
    pub language_rejected: u64,
}

#[derive(Deserialize)]
struct WireStatus {
    id_str: Option<String>,
    text: Option<String>,
    created_at: Option<String>,
    lang: Option<String>,
    #[serde(default)]
    coordinates: Option<WireCoordinates>,
    #[serde(default)]
    place: Option<WirePlace>,
    #[serde(default)]
    entities: Option<WireEntities>,
    #[serde(default)]
    user: Option<WireUser>,
}

#[derive(Deserialize)]
struct WireCoordinates {
    coordinates: [f64; 2],
}

#[derive(Deserialize)]
struct WirePlace {
    #[serde(default)]
    full_name: Option<String>,
    bounding_box: WireBoundingBox,
}

#[derive(Deserialize)]
struct WireBoundingBox {
    coordinates: Vec<Vec<[f64; 2]>>,
}

#[derive(Deserialize)]
struct WireEntities {
    #[serde(default)]
    hashtags: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    user_mentions: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    urls: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    media: Option<Vec<serde_json::Value>>,
}

#[derive(Deserialize)]
struct WireUser {
    id_str: Option<String>,
}

fn parse_created_at(s: &str) -> Result<i64, ParseError> {
    DateTime::parse_from_str(s, CREATED_AT_FORMAT)
        .map(|dt| dt.with_timezone(&Utc).timestamp())
        .map_err(|e| ParseError::MalformedJson(format!("created_at {s:?}: {e}")))
}

/// Parse one NDJSON line into a record. Total over arbitrary input: every
/// line yields either a record or a classified error.
pub fn parse_record(line: &str) -> Result<TweetRecord, ParseError> {
    let wire: WireStatus =
        serde_json::from_str(line).map_err(|e| ParseError::MalformedJson(e.to_string()))?;

    let id = wire.id_str.ok_or(ParseError::MissingField("id"))?;
    let text = wire.text.ok_or(ParseError::MissingField("text"))?;
    if text.is_empty() {
        return Err(ParseError::MissingField("text"));
    }
    let created_at = wire.created_at.ok_or(ParseError::MissingField("created_at"))?;
    let created_at_utc = parse_created_at(&created_at)?;
    let lang = wire
        .lang
        .ok_or(ParseError::MissingField("lang"))?
        .to_lowercase();
    if lang.is_empty() {
        return Err(ParseError::MissingField("lang"));
    }

    let coordinate = match wire.coordinates {
        // Wire order is (longitude, latitude).
        Some(c) => Some(
            GeoPoint::new(c.coordinates[1], c.coordinates[0])
                .map_err(|e| ParseError::BadGeometry(e.to_string()))?,
        ),
        None => None,
    };

    let place = match wire.place {
        Some(p) => {
            let ring = p
                .bounding_box
                .coordinates
                .first()
                .ok_or_else(|| ParseError::BadGeometry("empty bounding_box ring".into()))?;
            if ring.len() != 4 {
                return Err(ParseError::BadGeometry(format!(
                    "bounding_box ring has {} vertices, expected 4",
                    ring.len()
                )));
            }
            let (mut lat_min, mut lat_max) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut lon_min, mut lon_max) = (f64::INFINITY, f64::NEG_INFINITY);
            for &[lon, lat] in ring.iter() {
                lat_min = lat_min.min(lat);
                lat_max = lat_max.max(lat);
                lon_min = lon_min.min(lon);
                lon_max = lon_max.max(lon);
            }
            let bbox = GeoBox::from_corners(lat_min, lon_min, lat_max, lon_max)
                .map_err(|e| ParseError::BadGeometry(e.to_string()))?;
            Some(PlaceTag {
                name: p.full_name.unwrap_or_default(),
                bbox,
            })
        }
        None => None,
    };

    let entities = match wire.entities {
        Some(e) => EntityCounts {
            hashtags: e.hashtags.map_or(0, |v| v.len() as u32),
            user_mentions: e.user_mentions.map_or(0, |v| v.len() as u32),
            urls: e.urls.map_or(0, |v| v.len() as u32),
            media: e.media.map_or(0, |v| v.len() as u32),
        },
        None => EntityCounts::default(),
    };

    let user_id = wire.user.and_then(|u| u.id_str).unwrap_or_default();

    Ok(TweetRecord {
        id,
        text,
        created_at_utc,
        lang,
        coordinate,
        place,
        entities,
        user_id,
    })
}

fn placeholder_objects(n: u32) -> Vec<serde_json::Value> {
    (0..n)
        .map(|_| serde_json::Value::Object(serde_json::Map::new()))
        .collect()
}

/// Serialize a record back to the wire schema. Re-parsing the output yields
/// a field-wise identical record.
pub fn to_wire_json(record: &TweetRecord) -> String {
    let created_at = Utc
        .timestamp_opt(record.created_at_utc, 0)
        .single()
        .map(|dt| dt.format("%a %b %d %H:%M:%S +0000 %Y").to_string())
        .unwrap_or_default();

    let coordinates = record.coordinate.map(|p| {
        serde_json::json!({ "coordinates": [p.lon(), p.lat()] })
    });
    let place = record.place.as_ref().map(|pl| {
        let (sw, ne) = (pl.bbox.sw(), pl.bbox.ne());
        // Ring runs sw, se, ne, nw in wire (lon, lat) order.
        serde_json::json!({
            "full_name": pl.name,
            "bounding_box": { "coordinates": [[
                [sw.lon(), sw.lat()],
                [ne.lon(), sw.lat()],
                [ne.lon(), ne.lat()],
                [sw.lon(), ne.lat()],
            ]]}
        })
    });

    serde_json::json!({
        "id_str": record.id,
        "text": record.text,
        "created_at": created_at,
        "lang": record.lang,
        "coordinates": coordinates,
        "place": place,
        "entities": {
            "hashtags": placeholder_objects(record.entities.hashtags),
            "user_mentions": placeholder_objects(record.entities.user_mentions),
            "urls": placeholder_objects(record.entities.urls),
            "media": placeholder_objects(record.entities.media),
        },
        "user": { "id_str": record.user_id },
    })
    .to_string()
}

/// Streaming reader over NDJSON lines. Yields records whose language is in
/// the allowed set (or all records when no set is given); malformed lines
/// are counted and skipped. Single pass, O(1) memory in the line count.
pub struct RecordStream<R: BufRead> {
    reader: R,
    allowed_langs: Option<HashSet<String>>,
    stats: IngestStats,
    buf: String,
    done: bool,
}

impl<R: BufRead> RecordStream<R> {
    pub fn new(reader: R, allowed_langs: Option<HashSet<String>>) -> Self {
        RecordStream {
            reader,
            allowed_langs,
            stats: IngestStats::default(),
            buf: String::new(),
            done: false,
        }
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }
}

impl<R: BufRead> Iterator for RecordStream<R> {
    type Item = io::Result<TweetRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.done {
                return None;
            }
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            self.stats.lines_read += 1;
            match parse_record(line) {
                Ok(record) => {
                    self.stats.parsed_ok += 1;
                    match &self.allowed_langs {
                        Some(langs) if !langs.contains(&record.lang) => {
                            self.stats.language_rejected += 1;
                        }
                        _ => return Some(Ok(record)),
                    }
                }
                Err(_) => {
                    self.stats.malformed += 1;
                }
            }
        }
    }
}

/// Drain a stream into memory, returning the surviving records and totals.
pub fn read_stream<R: BufRead>(
    reader: R,
    allowed_langs: Option<HashSet<String>>,
) -> io::Result<(Vec<TweetRecord>, IngestStats)> {
    let mut stream = RecordStream::new(reader, allowed_langs);
    let mut records = Vec::new();
    for item in &mut stream {
        records.push(item?);
    }
    Ok((records, stream.stats()))
}
