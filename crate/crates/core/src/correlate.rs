//! Per-class risk: the geometric mean of forum mention share and device
//! exposure share.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forum::ForumStats;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorrelateError {
    #[error("classes differ between mentions {mentions:?} and exposure {exposure:?}")]
    ClassMismatch {
        mentions: Vec<String>,
        exposure: Vec<String>,
    },
    #[error("class {0:?} has more matching posts than posts")]
    BadMentions(String),
}

/// Forum mentions of one keyword class, totalled across the analyzed forums.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMentions {
    pub class: String,
    pub matching_posts: u64,
    pub total_posts: u64,
}

impl ClassMentions {
    /// Sums per-forum statistics for one class.
    pub fn from_forum_stats(class: &str, stats: &[ForumStats]) -> Self {
        Self {
            class: class.to_owned(),
            matching_posts: stats.iter().map(|s| s.matching_posts).sum(),
            total_posts: stats.iter().map(|s| s.total_posts).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub class: String,
    pub mention_share: f64,
    pub exposure_share: f64,
    pub risk: f64,
}

pub fn risk(mention_share: f64, exposure_share: f64) -> f64 {
    (mention_share * exposure_share).sqrt()
}

pub fn correlate_risk(
    mentions: &[ClassMentions],
    exposure: &BTreeMap<String, u64>,
) -> Result<Vec<RiskReport>, CorrelateError> {
    let classes: BTreeSet<&str> = mentions.iter().map(|m| m.class.as_str()).collect();
    let exposed: BTreeSet<&str> = exposure.keys().map(String::as_str).collect();
    if classes != exposed || classes.len() != mentions.len() {
        return Err(CorrelateError::ClassMismatch {
            mentions: mentions.iter().map(|m| m.class.clone()).collect(),
            exposure: exposure.keys().cloned().collect(),
        });
    }
    let devices: u64 = exposure.values().sum();
    let mut out = mentions
        .iter()
        .map(|m| {
            if m.matching_posts > m.total_posts {
                return Err(CorrelateError::BadMentions(m.class.clone()));
            }
            let mention_share = if m.total_posts == 0 {
                0.0
            } else {
                m.matching_posts as f64 / m.total_posts as f64
            };
            let exposure_share = if devices == 0 {
                0.0
            } else {
                exposure[&m.class] as f64 / devices as f64
            };
            Ok(RiskReport {
                class: m.class.clone(),
                mention_share,
                exposure_share,
                risk: risk(mention_share, exposure_share),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| b.risk.total_cmp(&a.risk).then_with(|| a.class.cmp(&b.class)));
    Ok(out)
}

pub const RISK_HEADER: [&str; 4] = ["class", "mention_share", "exposure_share", "risk"];

pub fn write_risk_csv(reports: &[RiskReport], out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RISK_HEADER)?;
    for r in reports {
        w.write_record([
            r.class.clone(),
            format!("{:.6}", r.mention_share),
            format!("{:.6}", r.exposure_share),
            format!("{:.6}", r.risk),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(class: &str, matching: u64, total: u64) -> ClassMentions {
        ClassMentions {
            class: class.into(),
            matching_posts: matching,
            total_posts: total,
        }
    }

    fn exposure(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn closed_form_cases() {
        assert_eq!(risk(0.0, 0.9), 0.0);
        assert_eq!(risk(1.0, 1.0), 1.0);
        assert!((risk(0.2, 0.8) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn shares_and_order() {
        let r = correlate_risk(
            &[m("cam", 2, 10), m("iot", 1, 5), m("plc", 0, 10)],
            &exposure(&[("cam", 8), ("iot", 8), ("plc", 4)]),
        )
        .unwrap();
        assert_eq!(r.iter().map(|x| x.class.as_str()).collect::<Vec<_>>(), ["cam", "iot", "plc"]);
        assert_eq!(r[0].mention_share, 0.2);
        assert_eq!(r[0].exposure_share, 0.4);
        assert_eq!(r[0].risk, r[1].risk);
        assert_eq!(r[2].risk, 0.0);
    }

    #[test]
    fn mismatched_classes() {
        let err = correlate_risk(&[m("a", 1, 2)], &exposure(&[("b", 1)])).unwrap_err();
        assert!(matches!(err, CorrelateError::ClassMismatch { .. }));
        let dup = correlate_risk(&[m("a", 1, 2), m("a", 1, 2)], &exposure(&[("a", 1)]));
        assert!(dup.is_err());
    }

    #[test]
    fn no_devices_means_no_risk() {
        let r = correlate_risk(&[m("a", 1, 2)], &exposure(&[("a", 0)])).unwrap();
        assert_eq!((r[0].exposure_share, r[0].risk), (0.0, 0.0));
    }

    #[test]
    fn csv_has_six_digits() {
        let reports = vec![RiskReport {
            class: "iot".into(),
            mention_share: 0.2,
            exposure_share: 0.8,
            risk: 0.4,
        }];
        let mut buf = Vec::new();
        write_risk_csv(&reports, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "class,mention_share,exposure_share,risk\niot,0.200000,0.800000,0.400000\n"
        );
    }

    proptest! {
        #[test]
        fn scale_invariant_and_bounded(
            counts in proptest::collection::vec((0u64..50, 1u64..50, 0u64..1000), 1..6),
            factor in 1u64..1000,
        ) {
            let mentions: Vec<ClassMentions> = counts
                .iter()
                .enumerate()
                .map(|(i, &(a, b, _))| m(&format!("c{i}"), a.min(b), b))
                .collect();
            let base: BTreeMap<String, u64> = counts.iter().enumerate().map(|(i, c)| (format!("c{i}"), c.2)).collect();
            let scaled: BTreeMap<String, u64> = base.iter().map(|(k, v)| (k.clone(), v * factor)).collect();
            let a = correlate_risk(&mentions, &base).unwrap();
            let b = correlate_risk(&mentions, &scaled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((0.0..=1.0).contains(&x.risk));
                prop_assert!((x.risk - y.risk).abs() < 1e-12);
                prop_assert!((x.exposure_share - y.exposure_share).abs() < 1e-12);
            }
        }

        #[test]
        fn increasing_in_each_share(m1 in 0.01f64..0.99, e in 0.01f64..1.0, d in 0.001f64..0.01) {
            prop_assert!(risk(m1 + d, e) > risk(m1, e));
            prop_assert!(risk(e, m1 + d) > risk(e, m1));
        }
    }
}
