//! Click-log ingestion and synthesis. The on-disk format is one header line
//! `ad_id,seq,clicked` followed by one comma-separated record per line, with
//! `seq` strictly increasing within each ad and `clicked` in {0, 1}.

use std::error::Error;
use std::fmt;

use rand::Rng;

use crate::rng::stream;

pub const LOG_HEADER: &str = "ad_id,seq,clicked";

/// One impression of an ad and whether it was clicked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImpressionRecord {
    /// 0-based impression index within the ad.
    pub seq: u64,
    pub clicked: bool,
}

/// All logged impressions of one ad, in log order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdRecords {
    pub ad_id: String,
    pub records: Vec<ImpressionRecord>,
}

impl AdRecords {
    pub fn clicks(&self) -> u64 {
        self.records.iter().filter(|r| r.clicked).count() as u64
    }

    /// Whole-log click-through estimate, the deal `ctr` used when no
    /// override is configured; zero for an empty record list.
    pub fn estimated_ctr(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.clicks() as f64 / self.records.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogError {
    MissingHeader,
    BadHeader { found: String },
    /// 1-based line number and what went wrong with it.
    Malformed { line: usize, reason: String },
    NonMonotonicSeq { line: usize, ad_id: String },
    InvalidSyntheticSpec(&'static str),
}

impl fmt::Display for LogError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogError::MissingHeader => write!(f, "click log is empty; expected `{LOG_HEADER}` header"),
            LogError::BadHeader { found } => {
                write!(f, "click log header must be `{LOG_HEADER}`, found `{found}`")
            }
            LogError::Malformed { line, reason } => write!(f, "click log line {line}: {reason}"),
            LogError::NonMonotonicSeq { line, ad_id } => {
                write!(f, "click log line {line}: seq not strictly increasing for ad {ad_id}")
            }
            LogError::InvalidSyntheticSpec(msg) => write!(f, "invalid synthetic log spec: {msg}"),
        }
    }
}

impl Error for LogError {}

/// Parses a whole click log, preserving the ads' first-appearance order.
/// Records of one ad may be interleaved with other ads' as long as each ad's
/// `seq` values are strictly increasing.
pub fn parse_click_log(text: &str) -> Result<Vec<AdRecords>, LogError> {
    let mut lines = text.lines();
    match lines.next() {
        None => return Err(LogError::MissingHeader),
        Some(header) if header.trim_end_matches('\r') != LOG_HEADER => {
            return Err(LogError::BadHeader { found: header.trim_end_matches('\r').to_string() })
        }
        Some(_) => {}
    }

    let mut ads: Vec<AdRecords> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for (i, raw) in lines.enumerate() {
        let line_no = i + 2;
        let line = raw.trim_end_matches('\r');
        let mut fields = line.split(',');
        let (ad_id, seq, clicked) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(s), Some(c), None) => (a, s, c),
            _ => {
                return Err(LogError::Malformed {
                    line: line_no,
                    reason: format!("expected 3 comma-separated fields, got `{line}`"),
                })
            }
        };
        if ad_id.is_empty() {
            return Err(LogError::Malformed { line: line_no, reason: "empty ad_id".to_string() });
        }
        let seq: u64 = seq.parse().map_err(|_| LogError::Malformed {
            line: line_no,
            reason: format!("seq `{seq}` is not a nonnegative integer"),
        })?;
        let clicked = match clicked {
            "0" => false,
            "1" => true,
            other => {
                return Err(LogError::Malformed {
                    line: line_no,
                    reason: format!("clicked must be 0 or 1, got `{other}`"),
                })
            }
        };

        let slot = *index.entry(ad_id.to_string()).or_insert_with(|| {
            ads.push(AdRecords { ad_id: ad_id.to_string(), records: Vec::new() });
            ads.len() - 1
        });
        let records = &mut ads[slot].records;
        if let Some(last) = records.last() {
            if seq <= last.seq {
                return Err(LogError::NonMonotonicSeq { line: line_no, ad_id: ad_id.to_string() });
            }
        }
        records.push(ImpressionRecord { seq, clicked });
    }
    Ok(ads)
}

/// Serializes ads back to the log format; inverse of [`parse_click_log`].
pub fn write_click_log(ads: &[AdRecords]) -> String {
    let total: usize = ads.iter().map(|a| a.records.len()).sum();
    let mut out = String::with_capacity(LOG_HEADER.len() + 1 + total * 16);
    out.push_str(LOG_HEADER);
    out.push('\n');
    for ad in ads {
        for rec in &ad.records {
            out.push_str(&ad.ad_id);
            out.push(',');
            out.push_str(&rec.seq.to_string());
            out.push_str(if rec.clicked { ",1\n" } else { ",0\n" });
        }
    }
    out
}

/// Shape of a generated log: ad count, per-ad impression count range, and
/// the range each ad's true click-through rate is drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticLogSpec {
    pub n_ads: u32,
    pub impressions_min: u64,
    pub impressions_max: u64,
    pub ctr_lo: f64,
    pub ctr_hi: f64,
}

/// Generates `n_ads` ads named `ad00000`, `ad00001`, ... with independent
/// Bernoulli click flags. Each ad draws from its own label-addressed stream,
/// so the log is deterministic in `seed` and unaffected by `n_ads` changes
/// for the ads both runs contain.
pub fn generate_synthetic_log(
    spec: &SyntheticLogSpec,
    seed: u64,
) -> Result<Vec<AdRecords>, LogError> {
    if spec.impressions_min > spec.impressions_max {
        return Err(LogError::InvalidSyntheticSpec("impressions range is inverted"));
    }
    if !(0.0..=1.0).contains(&spec.ctr_lo)
        || !(0.0..=1.0).contains(&spec.ctr_hi)
        || spec.ctr_lo > spec.ctr_hi
    {
        return Err(LogError::InvalidSyntheticSpec("ctr range must be within [0, 1]"));
    }
    let mut ads = Vec::with_capacity(spec.n_ads as usize);
    for i in 0..spec.n_ads {
        let ad_id = format!("ad{i:05}");
        let mut rng = stream(seed, &["synthetic", &ad_id]);
        let len = rng.random_range(spec.impressions_min..=spec.impressions_max);
        let ctr = rng.random_range(spec.ctr_lo..=spec.ctr_hi);
        let records = (0..len)
            .map(|seq| ImpressionRecord { seq, clicked: rng.random_bool(ctr) })
            .collect();
        ads.push(AdRecords { ad_id, records });
    }
    Ok(ads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_accepts_interleaved_ads_and_crlf() {
        let text = "ad_id,seq,clicked\r\na,0,0\r\nb,0,1\r\na,2,1\r\n";
        let ads = parse_click_log(text).unwrap();
        assert_eq!(ads.len(), 2);
        assert_eq!(ads[0].ad_id, "a");
        assert_eq!(ads[0].records, vec![
            ImpressionRecord { seq: 0, clicked: false },
            ImpressionRecord { seq: 2, clicked: true },
        ]);
        assert_eq!(ads[1].clicks(), 1);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = parse_click_log("ad_id,seq,clicked\na,0,0\na,1,2\n").unwrap_err();
        assert_eq!(
            err,
            LogError::Malformed { line: 3, reason: "clicked must be 0 or 1, got `2`".to_string() }
        );
        let err = parse_click_log("ad_id,seq,clicked\na,5,0\na,5,1\n").unwrap_err();
        assert_eq!(err, LogError::NonMonotonicSeq { line: 3, ad_id: "a".to_string() });
        let err = parse_click_log("ad_id,seq,clicked\na,0\n").unwrap_err();
        assert!(matches!(err, LogError::Malformed { line: 2, .. }));
        let err = parse_click_log("ad,seq,clicked\n").unwrap_err();
        assert_eq!(err, LogError::BadHeader { found: "ad,seq,clicked".to_string() });
        assert_eq!(parse_click_log("").unwrap_err(), LogError::MissingHeader);
    }

    #[test]
    fn header_only_log_is_empty_not_an_error() {
        assert_eq!(parse_click_log("ad_id,seq,clicked\n").unwrap(), Vec::new());
    }

    #[test]
    fn write_then_parse_round_trips() {
        let spec = SyntheticLogSpec {
            n_ads: 3,
            impressions_min: 5,
            impressions_max: 40,
            ctr_lo: 0.1,
            ctr_hi: 0.9,
        };
        let ads = generate_synthetic_log(&spec, 11).unwrap();
        let parsed = parse_click_log(&write_click_log(&ads)).unwrap();
        assert_eq!(parsed, ads);
    }

    #[test]
    fn synthetic_log_is_seed_deterministic_and_in_range() {
        let spec = SyntheticLogSpec {
            n_ads: 4,
            impressions_min: 100,
            impressions_max: 200,
            ctr_lo: 0.0,
            ctr_hi: 0.3,
        };
        let a = generate_synthetic_log(&spec, 7).unwrap();
        let b = generate_synthetic_log(&spec, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_synthetic_log(&spec, 8).unwrap());
        for ad in &a {
            assert!((100..=200).contains(&(ad.records.len() as u64)));
            assert!(ad.estimated_ctr() <= 0.45);
        }
    }

    #[test]
    fn synthetic_click_rate_tracks_the_requested_ctr() {
        let spec = SyntheticLogSpec {
            n_ads: 1,
            impressions_min: 100_000,
            impressions_max: 100_000,
            ctr_lo: 0.01,
            ctr_hi: 0.01,
        };
        let ads = generate_synthetic_log(&spec, 3).unwrap();
        // 3 sigma for Bin(1e5, 0.01) is ~0.00094.
        assert!((ads[0].estimated_ctr() - 0.01).abs() < 0.001);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad_range = SyntheticLogSpec {
            n_ads: 1,
            impressions_min: 10,
            impressions_max: 5,
            ctr_lo: 0.1,
            ctr_hi: 0.2,
        };
        assert!(generate_synthetic_log(&bad_range, 0).is_err());
        let bad_ctr = SyntheticLogSpec {
            n_ads: 1,
            impressions_min: 1,
            impressions_max: 2,
            ctr_lo: 0.5,
            ctr_hi: 1.5,
        };
        assert!(generate_synthetic_log(&bad_ctr, 0).is_err());
        let empty = SyntheticLogSpec {
            n_ads: 0,
            impressions_min: 1,
            impressions_max: 2,
            ctr_lo: 0.5,
            ctr_hi: 0.5,
        };
        assert_eq!(generate_synthetic_log(&empty, 0).unwrap(), Vec::new());
    }
}
