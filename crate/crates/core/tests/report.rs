use chrono::NaiveDate;
use serde_json::Value;

use portal_metrics::catalog::{AgeSummary, Diversity, Richness};
use portal_metrics::report::{
    assemble_report, compare_within_segment, deserialize_report, serialize_report, Methodology, ModuleOutputs,
    ProvisionOutputs,
};
use portal_metrics::segmentation::{demand_trend, dynamics_class, Quadrant, Size};
use portal_metrics::structure::{organization_profile, SiteGraph};
use portal_metrics::usage::{AnalysisPeriod, Recency};
use portal_metrics::{Error, PortalReport};

fn period() -> AnalysisPeriod {
    AnalysisPeriod::days(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2024, 1, 3).unwrap())
        .unwrap()
}

fn chain(n: usize) -> SiteGraph {
    let names: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    SiteGraph::from_parts(
        names.iter().map(String::as_str),
        names.windows(2).map(|w| (w[0].as_str(), w[1].as_str())),
        None,
    )
    .unwrap()
}

fn outputs(series: &[u64], size: Size, pages: usize) -> ModuleOutputs {
    let trend = demand_trend(series).unwrap();
    ModuleOutputs {
        provision: Some(ProvisionOutputs {
            offered: Some(Diversity { entropy: 1.2, evenness: 0.9 }),
            richness: Some(Richness { ratio: 0.75, covered: 3, taxonomy_size: 4, unknown_topics: vec![] }),
            age: Some(AgeSummary { mean_days: 40.0, by_topic: [("t0".to_string(), 40.0)].into() }),
            ..ProvisionOutputs::default()
        }),
        organization: Some(organization_profile(&chain(pages), None).unwrap()),
        trend: Some(trend),
        dynamics: Some(dynamics_class(trend.relative_slope, 0.05).unwrap()),
        relative_size: Some(0.4),
        size: Some(size),
        recency: Some(Recency { mean_gap_seconds: Some(172_800.0), eligible_visitors: 3, single_visit_visitors: 1 }),
        activity_level: Some(3.5),
        ..ModuleOutputs::default()
    }
}

fn report(id: &str, o: &ModuleOutputs) -> PortalReport {
    assemble_report(id, period(), &Methodology::default(), o).unwrap()
}

#[test]
fn full_report_round_trips_byte_identically() {
    let r = report("p", &outputs(&[10, 20, 30], Size::Large, 5));
    let text = serialize_report(&r).unwrap();
    assert!(text.ends_with("}\n"));
    let back = deserialize_report(text.as_bytes()).unwrap();
    assert_eq!(back, r);
    assert_eq!(serialize_report(&back).unwrap(), text);
    assert_eq!(r.segment.as_ref().unwrap().quadrant, Quadrant::A);
    assert!(text.contains("\"navigability\": null") || text.contains("\"navigability\": 0."));
}

#[test]
fn keys_are_sorted() {
    let text = serialize_report(&report("p", &outputs(&[10, 20, 30], Size::Large, 5))).unwrap();
    let top: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \"") && !l.starts_with("   "))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    let mut sorted = top.clone();
    sorted.sort();
    assert_eq!(top, sorted);
    assert_eq!(top.len(), 9);
}

#[test]
fn missing_position_is_flagged() {
    let r = report("p", &outputs(&[10, 20, 30], Size::Large, 5));
    assert!(r.position.is_none());
    assert!(r.metadata.flags.iter().any(|f| f == "position: absent"));
}

#[test]
fn single_page_site_is_flagged_but_rest_populated() {
    let r = report("p", &outputs(&[10, 20, 30], Size::Small, 1));
    let org = r.organization.as_ref().unwrap();
    assert_eq!((org.navigability, org.linearity, org.depth), (None, None, None));
    assert!(r.metadata.flags.iter().any(|f| f.starts_with("organization: degenerate")));
    assert!(r.provision.is_some());
    assert_eq!(r.segment.as_ref().unwrap().quadrant, Quadrant::B);
}

#[test]
fn absent_recency_survives_round_trip() {
    let mut o = outputs(&[10, 20, 30], Size::Large, 4);
    o.recency = Some(Recency { mean_gap_seconds: None, eligible_visitors: 0, single_visit_visitors: 5 });
    let r = report("p", &o);
    let text = serialize_report(&r).unwrap();
    assert!(text.contains("\"recency_days\": null"));
    let back = deserialize_report(text.as_bytes()).unwrap();
    assert_eq!(back.segmentation_inputs.unwrap().recency_days, None);
    assert!(back.metadata.flags.iter().any(|f| f.starts_with("segmentation.recency")));
}

#[test]
fn nothing_to_report_is_fatal() {
    let err = assemble_report("p", period(), &Methodology::default(), &ModuleOutputs::default()).unwrap_err();
    assert!(matches!(err, Error::Domain(_)));
}

#[test]
fn missing_metadata_lists_violations() {
    let r = report("p", &outputs(&[10, 20, 30], Size::Large, 4));
    let mut doc = serde_json::to_value(&r).unwrap();
    doc.as_object_mut().unwrap().remove("metadata");
    doc["organization"]["density"] = Value::from(1.5);
    match deserialize_report(&serde_json::to_vec(&doc).unwrap()) {
        Err(Error::Validation(v)) => {
            assert!(v.iter().any(|m| m.contains("metadata")), "{v:?}");
            assert!(v.iter().any(|m| m.contains("/organization/density")), "{v:?}");
        }
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn different_segments_are_not_paired() {
    let a = report("a", &outputs(&[10, 20, 30], Size::Large, 4));
    let b = report("b", &outputs(&[20, 20, 20], Size::Small, 6));
    let cmp = compare_within_segment(&[a, b], 0.05).unwrap();
    assert!(cmp.segments.is_empty());
    assert!(cmp.summary_table().contains("no segment"));
}

#[test]
fn learning_pointer_names_the_leader() {
    let good = report("a", &outputs(&[10, 20, 30], Size::Large, 3));
    let poor = report("b", &outputs(&[10, 20, 30], Size::Large, 8));
    let cmp = compare_within_segment(&[poor, good], 0.05).unwrap();
    let seg = &cmp.segments[0];
    assert_eq!(seg.portals, ["a", "b"]);
    let p = seg.pointers.iter().find(|p| p.metric == "navigability").unwrap();
    assert_eq!((p.portal_id.as_str(), p.learn_from.as_str()), ("b", "a"));
    let table = cmp.summary_table();
    assert!(table.contains("(a) Growing portals with large relative size"));
    assert!(table.contains("b could learn from a on navigability"));
}

#[test]
fn mismatched_methodology_is_refused() {
    let a = report("a", &outputs(&[10, 20, 30], Size::Large, 3));
    let m = Methodology { session_timeout_seconds: 900, ..Methodology::default() };
    let b = assemble_report("b", period(), &m, &outputs(&[10, 20, 30], Size::Large, 5)).unwrap();
    match compare_within_segment(&[a.clone(), b], 0.05) {
        Err(Error::ComparisonRefused(why)) => assert!(why.contains("session_timeout_seconds")),
        other => panic!("expected refusal, got {other:?}"),
    }
    assert!(matches!(compare_within_segment(&[a], 0.05), Err(Error::ComparisonRefused(_))));
}

#[test]
fn disjoint_periods_are_refused() {
    let a = report("a", &outputs(&[10, 20, 30], Size::Large, 3));
    let later = AnalysisPeriod::days(NaiveDate::from_ymd_opt(2024, 6, 1).unwrap(), NaiveDate::from_ymd_opt(2024, 6, 3).unwrap())
        .unwrap();
    let b = assemble_report("b", later, &Methodology::default(), &outputs(&[10, 20, 30], Size::Large, 5)).unwrap();
    assert!(matches!(compare_within_segment(&[a, b], 0.05), Err(Error::ComparisonRefused(_))));
}
