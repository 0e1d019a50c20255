use autota::agents::AgentContext;
use autota::corpus::{parse_transcript, Corpus};
use autota::metrics::{alignment_report, HashedBowProvider};
use autota::pipeline::{Pipeline, PipelineConfig};
use autota::report::{Report, REPORT_SCHEMA};
use jsonschema::JSONSchema;
use serde_json::Value;

fn corpus(k: u32) -> Corpus {
    let ts = (1..=k)
        .map(|p| {
            let text: String = (1..=6)
                .map(|s| format!("[P{p}_S{s:03}] waiting for the heart surgery made the family anxious {s}\n"))
                .collect();
            parse_transcript(&text, &format!("t{p}")).unwrap()
        })
        .collect();
    Corpus::new(ts).unwrap()
}

fn schema() -> JSONSchema {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    JSONSchema::compile(&schema).unwrap()
}

fn assert_valid(report: &Report) {
    let value = serde_json::to_value(report).unwrap();
    let schema = schema();
    let msgs: Vec<String> = match schema.validate(&value) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "report does not match schema: {msgs:?}");
}

#[test]
fn reports_validate() {
    for k in [1, 3] {
        let run = Pipeline::new(AgentContext::mock(), PipelineConfig::default()).run(&corpus(k)).unwrap();
        let mut report = Report::from_run(&run);
        assert_valid(&report);

        let llm: Vec<String> = run.final_set().themes.iter().map(|t| t.text()).collect();
        let human = ["Anxiety while waiting for surgery", "Family strain"];
        report.alignment = Some(alignment_report(&human, &llm, &HashedBowProvider::default()).unwrap());
        assert_valid(&report);
    }
}

#[test]
fn schema_rejects_unknown_fields() {
    let run = Pipeline::new(AgentContext::mock(), PipelineConfig::default()).run(&corpus(1)).unwrap();
    let mut value = serde_json::to_value(Report::from_run(&run)).unwrap();
    value["surprise"] = Value::Bool(true);
    assert!(!schema().is_valid(&value));
}
