//! Exploratory statistics: daily volume with per-weekday and per-hour
//! five-number summaries, user-activity histograms, and metadata
//! composition. Everything is an associative-merge fold: shard accumulators
//! merge exactly, and summaries are recomputed from merged counts.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::ingest::TweetRecord;
use crate::textprep::{hour_of_day, local_date, localize_timestamp, weekday_iso};

/// Five-number summary with quartiles by the exclusive-median rule: for an
/// odd count the median is excluded from both halves before taking their
/// medians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub iqr: f64,
    /// Number of observations behind the summary.
    pub count: usize,
}

fn median_of_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

impl FiveNumberSummary {
    pub fn empty() -> Self {
        FiveNumberSummary {
            min: 0.0,
            q1: 0.0,
            median: 0.0,
            q3: 0.0,
            max: 0.0,
            iqr: 0.0,
            count: 0,
        }
    }

    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::empty();
        }
        let mut xs = values.to_vec();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len();
        let median = median_of_sorted(&xs);
        // Exclusive-median halves: [0, n/2) and (n - n/2, n].
        let lower = &xs[..n / 2];
        let upper = &xs[n - n / 2..];
        let (q1, q3) = if lower.is_empty() {
            (median, median)
        } else {
            (median_of_sorted(lower), median_of_sorted(upper))
        };
        FiveNumberSummary {
            min: xs[0],
            q1,
            median,
            q3,
            max: xs[n - 1],
            iqr: q3 - q1,
            count: n,
        }
    }
}

/// Mergeable temporal counts keyed by local calendar date and hour.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TemporalAccum {
    pub daily: BTreeMap<NaiveDate, u64>,
    pub hourly: BTreeMap<(NaiveDate, u32), u64>,
}

impl TemporalAccum {
    pub fn add_record(&mut self, record: &TweetRecord, utc_offset_minutes: i32) {
        let local = localize_timestamp(record.created_at_utc, utc_offset_minutes);
        let date = local_date(local);
        *self.daily.entry(date).or_insert(0) += 1;
        *self.hourly.entry((date, hour_of_day(local))).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &TemporalAccum) {
        for (k, v) in &other.daily {
            *self.daily.entry(*k).or_insert(0) += v;
        }
        for (k, v) in &other.hourly {
            *self.hourly.entry(*k).or_insert(0) += v;
        }
    }

    /// Finalize into summaries. The day domain is the contiguous local date
    /// range of the data; days (and day-hours) with no tweets count as
    /// zero observations.
    pub fn finalize(&self) -> TemporalStats {
        let Some((&first, _)) = self.daily.first_key_value() else {
            return TemporalStats {
                daily: Vec::new(),
                weekday: std::array::from_fn(|_| FiveNumberSummary::empty()),
                hour: std::array::from_fn(|_| FiveNumberSummary::empty()),
            };
        };
        let (&last, _) = self.daily.last_key_value().expect("nonempty map");

        let mut daily = Vec::new();
        let mut weekday_values: [Vec<f64>; 7] = Default::default();
        let mut hour_values: Vec<Vec<f64>> = vec![Vec::new(); 24];
        let mut date = first;
        while date <= last {
            let count = self.daily.get(&date).copied().unwrap_or(0);
            daily.push((date, count));
            weekday_values[date.weekday().num_days_from_monday() as usize].push(count as f64);
            for hour in 0..24u32 {
                let c = self.hourly.get(&(date, hour)).copied().unwrap_or(0);
                hour_values[hour as usize].push(c as f64);
            }
            date = date.succ_opt().expect("date in range");
        }

        TemporalStats {
            daily,
            weekday: std::array::from_fn(|d| FiveNumberSummary::from_values(&weekday_values[d])),
            hour: std::array::from_fn(|h| FiveNumberSummary::from_values(&hour_values[h])),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalStats {
    /// Complete local-date range with zero-filled gaps.
    pub daily: Vec<(NaiveDate, u64)>,
    /// Per ISO weekday (Monday = 0) over same-weekday daily counts.
    pub weekday: [FiveNumberSummary; 7],
    /// Per hour of day over same-hour per-date counts.
    pub hour: [FiveNumberSummary; 24],
}

impl TemporalStats {
    pub fn total(&self) -> u64 {
        self.daily.iter().map(|&(_, c)| c).sum()
    }
}

pub fn temporal_stats(records: &[TweetRecord], utc_offset_minutes: i32) -> TemporalStats {
    let mut accum = TemporalAccum::default();
    for r in records {
        accum.add_record(r, utc_offset_minutes);
    }
    accum.finalize()
}

/// User posting activity: exact per-user counts plus the derived histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserActivity {
    pub posts_per_user: BTreeMap<String, u64>,
    /// posts n -> number of users with exactly n posts.
    pub histogram: BTreeMap<u64, u64>,
    /// (n, fraction of users with <= n posts), monotone to 1.
    pub cumulative: Vec<(u64, f64)>,
    /// (log10 n, log10 users-with-n) with zero cells omitted.
    pub loglog: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserAccum {
    pub counts: BTreeMap<String, u64>,
}

impl UserAccum {
    pub fn add_record(&mut self, record: &TweetRecord) {
        *self.counts.entry(record.user_id.clone()).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &UserAccum) {
        for (user, n) in &other.counts {
            *self.counts.entry(user.clone()).or_insert(0) += n;
        }
    }

    pub fn finalize(&self) -> UserActivity {
        let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
        for &n in self.counts.values() {
            *histogram.entry(n).or_insert(0) += 1;
        }
        let total_users: u64 = histogram.values().sum();
        let mut cumulative = Vec::with_capacity(histogram.len());
        let mut running = 0u64;
        for (&n, &users) in &histogram {
            running += users;
            cumulative.push((n, running as f64 / total_users.max(1) as f64));
        }
        let loglog = histogram
            .iter()
            .map(|(&n, &users)| ((n as f64).log10(), (users as f64).log10()))
            .collect();
        UserActivity {
            posts_per_user: self.counts.clone(),
            histogram,
            cumulative,
            loglog,
        }
    }
}

pub fn user_activity(records: &[TweetRecord]) -> UserActivity {
    let mut accum = UserAccum::default();
    for r in records {
        accum.add_record(r);
    }
    accum.finalize()
}

pub const METADATA_KINDS: [&str; 4] = ["hashtags", "user_mentions", "urls", "media"];

/// Per-entity-kind: tweets carrying at least one such entity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetadataAccum {
    pub total: u64,
    /// hashtags, user_mentions, urls, media.
    pub with_kind: [u64; 4],
}

impl MetadataAccum {
    pub fn add_record(&mut self, record: &TweetRecord) {
        self.total += 1;
        let e = &record.entities;
        for (slot, present) in self.with_kind.iter_mut().zip([
            e.hashtags > 0,
            e.user_mentions > 0,
            e.urls > 0,
            e.media > 0,
        ]) {
            if present {
                *slot += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &MetadataAccum) {
        self.total += other.total;
        for (a, b) in self.with_kind.iter_mut().zip(&other.with_kind) {
            *a += b;
        }
    }

    pub fn finalize(&self) -> MetadataComposition {
        let rows = METADATA_KINDS
            .iter()
            .zip(&self.with_kind)
            .map(|(kind, &count)| MetadataRow {
                kind: kind.to_string(),
                count,
                percentage: if self.total == 0 {
                    0.0
                } else {
                    100.0 * count as f64 / self.total as f64
                },
            })
            .collect();
        MetadataComposition {
            total: self.total,
            rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataRow {
    pub kind: String,
    pub count: u64,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataComposition {
    pub total: u64,
    pub rows: Vec<MetadataRow>,
}

pub fn metadata_composition(records: &[TweetRecord]) -> MetadataComposition {
    let mut accum = MetadataAccum::default();
    for r in records {
        accum.add_record(r);
    }
    accum.finalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::EntityCounts;

    fn record(id: &str, utc: i64, user: &str, entities: EntityCounts) -> TweetRecord {
        TweetRecord {
            id: id.into(),
            text: "x".into(),
            created_at_utc: utc,
            lang: "en".into(),
            coordinate: None,
            place: None,
            entities,
            user_id: user.into(),
        }
    }

    #[test]
    fn quartiles_exclusive_median() {
        let s = FiveNumberSummary::from_values(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.min, 1.0);
        assert_eq!(s.q1, 1.5);
        assert_eq!(s.median, 3.0);
        assert_eq!(s.q3, 4.5);
        assert_eq!(s.max, 5.0);
        assert_eq!(s.iqr, 3.0);
        assert_eq!(s.count, 5);
    }

    #[test]
    fn quartiles_even_count() {
        let s = FiveNumberSummary::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.5);
        assert_eq!(s.q3, 3.5);
    }

    #[test]
    fn quartiles_degenerate_sizes() {
        let s = FiveNumberSummary::from_values(&[7.0]);
        assert_eq!(s.q1, 7.0);
        assert_eq!(s.median, 7.0);
        assert_eq!(s.q3, 7.0);
        assert_eq!(FiveNumberSummary::from_values(&[]).count, 0);
    }

    #[test]
    fn hour_23_concentration() {
        // Monday 2017-03-06, all records at local 23:xx (offset 0).
        let base = 1488762000 + 22 * 3600; // 23:00 local that day
        let records: Vec<TweetRecord> = (0..5)
            .map(|i| record(&format!("r{i}"), base + i * 60, "u", EntityCounts::default()))
            .collect();
        let stats = temporal_stats(&records, 0);
        assert_eq!(stats.hour[23].max, 5.0);
        for h in 0..23 {
            assert_eq!(stats.hour[h].max, 0.0, "hour {h}");
        }
        assert_eq!(stats.total(), 5);
    }

    #[test]
    fn daily_total_matches_record_count_with_gaps() {
        let day = 86400;
        // Three records on day 0, none on day 1, one on day 2.
        let records = vec![
            record("a", 1488762000, "u", EntityCounts::default()),
            record("b", 1488762000 + 60, "u", EntityCounts::default()),
            record("c", 1488762000 + 120, "u", EntityCounts::default()),
            record("d", 1488762000 + 2 * day, "u", EntityCounts::default()),
        ];
        let stats = temporal_stats(&records, 0);
        assert_eq!(stats.daily.len(), 3);
        assert_eq!(stats.daily[1].1, 0);
        assert_eq!(stats.total(), 4);
    }

    #[test]
    fn localization_shifts_days() {
        // 01:00 UTC Monday with offset -120 lands on Sunday local.
        let records = vec![record("a", 1488762000, "u", EntityCounts::default())];
        let stats = temporal_stats(&records, -120);
        let (date, _) = stats.daily[0];
        assert_eq!(date.weekday().num_days_from_monday(), 6);
        assert_eq!(weekday_iso(localize_timestamp(1488762000, -120)), 6);
    }

    #[test]
    fn user_activity_histogram() {
        let records = vec![
            record("1", 0, "alice", EntityCounts::default()),
            record("2", 0, "alice", EntityCounts::default()),
            record("3", 0, "bob", EntityCounts::default()),
            record("4", 0, "carol", EntityCounts::default()),
        ];
        let activity = user_activity(&records);
        assert_eq!(activity.histogram.get(&1), Some(&2));
        assert_eq!(activity.histogram.get(&2), Some(&1));
        let users_total: u64 = activity.histogram.values().sum();
        assert_eq!(users_total, 3);
        // Two of three users posted once.
        assert!((activity.cumulative[0].1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(activity.cumulative.last().unwrap().1, 1.0);
        // Zero cells omitted from the log-log points.
        assert_eq!(activity.loglog.len(), 2);
    }

    #[test]
    fn metadata_percentages() {
        let with_hashtag = EntityCounts {
            hashtags: 2,
            ..EntityCounts::default()
        };
        let records = vec![
            record("1", 0, "u", with_hashtag),
            record("2", 0, "u", with_hashtag),
            record("3", 0, "u", EntityCounts::default()),
            record("4", 0, "u", EntityCounts::default()),
        ];
        let comp = metadata_composition(&records);
        assert_eq!(comp.rows[0].kind, "hashtags");
        assert_eq!(comp.rows[0].count, 2);
        assert!((comp.rows[0].percentage - 50.0).abs() < 1e-12);
        for row in &comp.rows[1..] {
            assert_eq!(row.count, 0);
            assert_eq!(row.percentage, 0.0);
        }
    }

    #[test]
    fn shard_merge_equals_whole() {
        let mut rng = crate::rng::SplitMix64::new(12);
        let records: Vec<TweetRecord> = (0..200)
            .map(|i| {
                record(
                    &format!("r{i}"),
                    1488762000 + rng.next_below(86400 * 20) as i64,
                    &format!("u{}", rng.next_below(17)),
                    EntityCounts {
                        hashtags: rng.next_below(3) as u32,
                        user_mentions: rng.next_below(2) as u32,
                        urls: 0,
                        media: rng.next_below(2) as u32,
                    },
                )
            })
            .collect();
        let (a, b) = records.split_at(73);

        let mut t1 = TemporalAccum::default();
        a.iter().for_each(|r| t1.add_record(r, -180));
        let mut t2 = TemporalAccum::default();
        b.iter().for_each(|r| t2.add_record(r, -180));
        t1.merge(&t2);
        assert_eq!(t1.finalize(), temporal_stats(&records, -180));

        let mut u1 = UserAccum::default();
        a.iter().for_each(|r| u1.add_record(r));
        let mut u2 = UserAccum::default();
        b.iter().for_each(|r| u2.add_record(r));
        u1.merge(&u2);
        assert_eq!(u1.finalize(), user_activity(&records));

        let mut m1 = MetadataAccum::default();
        a.iter().for_each(|r| m1.add_record(r));
        let mut m2 = MetadataAccum::default();
        b.iter().for_each(|r| m2.add_record(r));
        m1.merge(&m2);
        assert_eq!(m1.finalize(), metadata_composition(&records));
    }
}
