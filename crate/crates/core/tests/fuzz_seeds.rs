//! Runs the checked-in fuzz seeds through the same entry points and
//! invariants as the fuzz targets, so they stay meaningful on stable.

use std::fs;
use std::path::{Path, PathBuf};

use autota::agents::response::{parse_code_response, parse_edit_response, parse_theme_response};
use autota::agents::ReplayBackend;
use autota::corpus::{parse_transcript, scan_quote_ids, QuoteId};
use autota::model::AuditTrail;
use autota::report::parse_theme_list;
use autota::reward::parse_reward_records;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(PathBuf, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let text = fs::read_to_string(&path).unwrap();
            (path, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn transcript_seeds_round_trip() {
    let mut accepted = 0;
    for (_, s) in seeds("parse_transcript") {
        if let Ok(t) = parse_transcript(&s, "fuzz") {
            assert_eq!(parse_transcript(&t.render(), "fuzz").unwrap(), t);
            accepted += 1;
        }
    }
    assert!(accepted >= 2);
}

#[test]
fn quote_id_seeds() {
    for (_, s) in seeds("quote_id") {
        if let Ok(id) = s.parse::<QuoteId>() {
            assert_eq!(id.to_string(), s.trim());
        }
        for id in scan_quote_ids(&s) {
            assert_eq!(id.to_string().parse::<QuoteId>().ok(), Some(id));
        }
    }
}

#[test]
fn response_seeds_parse() {
    for (p, s) in seeds("code_response") {
        parse_code_response(&s).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
    for (p, s) in seeds("theme_response") {
        assert!(!parse_theme_response(&s).unwrap_or_else(|e| panic!("{}: {e}", p.display())).is_empty());
    }
    for (p, s) in seeds("edit_response") {
        for e in parse_edit_response(&s).unwrap_or_else(|e| panic!("{}: {e}", p.display())) {
            e.into_proposal().check_shape().unwrap();
        }
    }
}

#[test]
fn file_format_seeds_parse() {
    for (p, s) in seeds("theme_list") {
        assert!(!parse_theme_list(&s).unwrap_or_else(|e| panic!("{}: {e}", p.display())).is_empty());
    }
    for (p, s) in seeds("reward_records") {
        parse_reward_records(&s).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
    for (p, s) in seeds("audit_trail") {
        let trail: AuditTrail = serde_json::from_str(&s).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        trail.validate().unwrap();
        assert!(!ReplayBackend::from_trail(&trail).is_empty());
    }
}
