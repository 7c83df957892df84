//! Endpoint-by-endpoint contract table: expected status and error code for
//! each request, and the number of change records it must append.

use std::collections::{BTreeMap, BTreeSet};

use axum::http::Method;
use serde_json::{json, Value};

use super::TestApp;

pub struct Case {
    pub endpoint: &'static str,
    pub method: Method,
    pub uri: String,
    pub body: Option<(&'static str, Vec<u8>)>,
    pub status: u16,
    pub code: Option<&'static str>,
    /// Mutation endpoints append exactly one record on success and none on failure.
    pub mutation: bool,
    /// Make persisting fail while the request runs.
    pub break_io: bool,
}

impl Case {
    fn new(endpoint: &'static str, uri: impl Into<String>, status: u16, code: Option<&'static str>) -> Self {
        let method = match endpoint.split(' ').next().unwrap() {
            "GET" => Method::GET,
            "POST" => Method::POST,
            "PATCH" => Method::PATCH,
            "DELETE" => Method::DELETE,
            other => panic!("method {other}"),
        };
        let mutation = method != Method::GET && endpoint != "POST /query";
        Self { endpoint, method, uri: uri.into(), body: None, status, code, mutation, break_io: false }
    }

    fn json(mut self, body: Value) -> Self {
        self.body = Some(("application/json", body.to_string().into_bytes()));
        self
    }

    fn raw(mut self, content_type: &'static str, body: &str) -> Self {
        self.body = Some((content_type, body.as_bytes().to_vec()));
        self
    }

    fn broken(mut self) -> Self {
        self.break_io = true;
        self
    }
}

fn concept(id: &str, parents: &[&str]) -> Value {
    json!({
        "id": id,
        "parents": parents,
        "labels": { "en": format!("{id} label"), "pt": format!("rótulo {id}") },
        "comments": { "en": format!("{id} comment"), "pt": format!("comentário {id}") },
    })
}

const RECORDS: &str = concat!(
    r#"{"record_id":"c1","table":"eeg","field":"notes","text":"generalized spike wave discharges"}"#,
    "\n",
    r#"{"record_id":"c2","table":"eeg","field":"notes","text":"crise focal"}"#,
    "\n"
);

/// The full table, in execution order. Later cases rely on the state left by
/// earlier ones, starting from the seeded ontology.
pub fn cases(app: &TestApp) -> Vec<Case> {
    let csv_path = app.dir.path().join("records.csv");
    std::fs::write(&csv_path, "record_id,table,field,text,patient_ref\nc3,adm,diag,absence seizures,p1\n").unwrap();
    let missing_path = app.dir.path().join("missing.jsonl");
    let csv = csv_path.display().to_string();
    let missing = missing_path.display().to_string();
    let ok = None;

    vec![
        Case::new("GET /health", "/health", 200, ok),
        Case::new("GET /concepts", "/concepts", 200, ok),
        Case::new("GET /concepts", "/concepts?lang=pt", 200, ok),
        Case::new("GET /concepts/{id}", "/concepts/SeizureType", 200, ok),
        Case::new("GET /concepts/{id}", "/concepts/unknown", 404, Some("NotFound")),
        // Creation.
        Case::new("POST /concepts", "/concepts", 201, ok).json(concept("NewA", &["GeneralConcept"])),
        Case::new("POST /concepts", "/concepts", 409, Some("Conflict")).json(concept("NewA", &["GeneralConcept"])),
        Case::new("POST /concepts", "/concepts", 404, Some("NotFound")).json(concept("NewB", &["Nope"])),
        Case::new("POST /concepts", "/concepts", 409, Some("Cycle")).json(concept("NewC", &["NewC"])),
        Case::new("POST /concepts", "/concepts", 422, Some("Validation")).json(concept("NewD", &[])),
        Case::new("POST /concepts", "/concepts", 422, Some("Validation")).raw("application/json", "{\"id\": "),
        Case::new("POST /concepts", "/concepts", 422, Some("Validation")).json(json!({ "id": "NewF", "colour": 1 })),
        Case::new("POST /concepts", "/concepts", 500, Some("Io")).json(concept("NewE", &["GeneralConcept"])).broken(),
        Case::new("GET /concepts/{id}", "/concepts/NewE", 404, Some("NotFound")),
        // Edits.
        Case::new("PATCH /concepts/{id}", "/concepts/NewA", 200, ok).json(json!({ "rename_to": "NewA2" })),
        Case::new("PATCH /concepts/{id}", "/concepts/NewA2", 200, ok).json(json!({ "labels": { "en": "Renamed label" } })),
        Case::new("PATCH /concepts/{id}", "/concepts/SYN-GeneralConcept-010", 200, ok)
            .json(json!({ "parents": ["SYN-GeneralConcept-001"] })),
        Case::new("PATCH /concepts/{id}", "/concepts/Nope", 404, Some("NotFound")).json(json!({ "parents": ["GeneralConcept"] })),
        Case::new("PATCH /concepts/{id}", "/concepts/NewA2", 404, Some("NotFound")).json(json!({ "parents": ["Nope"] })),
        Case::new("PATCH /concepts/{id}", "/concepts/NewA2", 409, Some("Conflict")).json(json!({ "rename_to": "SeizureType" })),
        Case::new("PATCH /concepts/{id}", "/concepts/SeizureType", 409, Some("Conflict")).json(json!({ "parents": ["GeneralConcept"] })),
        Case::new("PATCH /concepts/{id}", "/concepts/SYN-GeneralConcept-001", 409, Some("Cycle"))
            .json(json!({ "parents": ["SYN-GeneralConcept-010"] })),
        Case::new("PATCH /concepts/{id}", "/concepts/NewA2", 422, Some("Validation")).json(json!({})),
        Case::new("PATCH /concepts/{id}", "/concepts/NewA2", 422, Some("Validation"))
            .json(json!({ "rename_to": "X", "parents": ["GeneralConcept"] })),
        Case::new("PATCH /concepts/{id}", "/concepts/NewA2", 422, Some("Validation")).json(json!({ "labels": {} })),
        Case::new("PATCH /concepts/{id}", "/concepts/NewA2", 500, Some("Io")).json(json!({ "rename_to": "NewA3" })).broken(),
        // Navigation.
        Case::new("GET /concepts/{id}/neighborhood", "/concepts/SeizureType/neighborhood?depth=2&lang=pt", 200, ok),
        Case::new("GET /concepts/{id}/neighborhood", "/concepts/Nope/neighborhood", 404, Some("NotFound")),
        Case::new("GET /concepts/{id}/neighborhood", "/concepts/SeizureType/neighborhood?depth=abc", 422, Some("Validation")),
        Case::new("GET /concepts/{id}/neighborhood", "/concepts/SeizureType/neighborhood?depth=999", 422, Some("Validation")),
        Case::new("GET /concepts/{id}/paths", "/concepts/SYN-GeneralConcept-010/paths", 200, ok),
        Case::new("GET /concepts/{id}/paths", "/concepts/Nope/paths", 404, Some("NotFound")),
        // Deletion.
        Case::new("DELETE /concepts/{id}", "/concepts/NewA2", 200, ok),
        Case::new("DELETE /concepts/{id}", "/concepts/NewA2", 404, Some("NotFound")),
        Case::new("DELETE /concepts/{id}", "/concepts/SYN-GeneralConcept-001", 409, Some("Conflict")),
        Case::new("DELETE /concepts/{id}", "/concepts/GeneralConcept?mode=reparent_children", 409, Some("Conflict")),
        Case::new("DELETE /concepts/{id}", "/concepts/SYN-GeneralConcept-011?mode=bogus", 422, Some("Validation")),
        Case::new("DELETE /concepts/{id}", "/concepts/SYN-GeneralConcept-011", 500, Some("Io")).broken(),
        Case::new("DELETE /concepts/{id}", "/concepts/SYN-GeneralConcept-002?mode=reparent_children", 200, ok),
        // Records.
        Case::new("POST /ingest", "/ingest?format=jsonl", 200, ok).raw("application/x-ndjson", RECORDS),
        Case::new("POST /ingest", "/ingest", 200, ok).json(json!({ "path": csv })),
        Case::new("POST /ingest", "/ingest?format=jsonl", 200, ok).raw("application/x-ndjson", RECORDS),
        Case::new("POST /ingest", "/ingest?format=xml", 422, Some("Validation")).raw("text/plain", RECORDS),
        Case::new("POST /ingest", "/ingest?format=csv", 422, Some("Validation")).raw("text/csv", "id,text\n1,x\n"),
        Case::new("POST /ingest", "/ingest", 422, Some("Validation")).raw("application/json", "{\"path\": 3}"),
        Case::new("POST /ingest", "/ingest", 500, Some("Io")).json(json!({ "path": missing })),
        Case::new("POST /ingest", "/ingest?format=csv", 500, Some("Io"))
            .raw("text/csv", "record_id,table,field,text\nc9,t,f,late entry\n")
            .broken(),
        Case::new("GET /records", "/records", 200, ok),
        Case::new("GET /records/{id}", "/records/c1", 200, ok),
        Case::new("GET /records/{id}", "/records/zz", 404, Some("NotFound")),
        Case::new("DELETE /records/{id}", "/records/c1", 200, ok),
        Case::new("DELETE /records/{id}", "/records/c1", 404, Some("NotFound")),
        Case::new("DELETE /records/{id}", "/records/c2", 500, Some("Io")).broken(),
        Case::new("DELETE /records", "/records", 500, Some("Io")).broken(),
        Case::new("DELETE /records", "/records", 200, ok),
        // Search.
        Case::new("GET /search", "/search?q=seizure&lang=en&k=3", 200, ok),
        Case::new("GET /search", "/search?q=zzzz", 200, ok),
        Case::new("GET /search", "/search", 422, Some("Validation")),
        Case::new("GET /search", "/search?q=crise&k=0", 422, Some("Validation")),
        Case::new("GET /search", "/search?q=crise&k=-1", 422, Some("Validation")),
        Case::new("GET /suggest", "/suggest?q=siezure", 200, ok),
        Case::new("GET /suggest", "/suggest", 422, Some("Validation")),
        // Query.
        Case::new("POST /query", "/query", 200, ok)
            .raw("application/sparql-query", "SELECT ?c WHERE { ?c a <http://www.w3.org/2002/07/owl#Class> } LIMIT 3"),
        Case::new("POST /query", "/query", 422, Some("Parse")).raw("application/sparql-query", "SELECT ?c WHERE {\n  ?c ?p"),
        Case::new("POST /query", "/query", 422, Some("Validation")).send_bytes(vec![0xff, 0xfe]),
        // Import and export.
        Case::new("POST /import", "/import?format=turtle", 200, ok).raw(
            "text/turtle",
            "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n@prefix : <http://epilepsiae.example.org/onto#> .\n:GeneralConcept rdfs:seeAlso <http://example.org/x> .\n",
        ),
        Case::new("POST /import", "/import", 200, ok).raw(
            "application/n-triples",
            "<http://example.org/a> <http://example.org/p> \"v\"@en .\n",
        ),
        Case::new("POST /import", "/import?format=turtle", 422, Some("Parse")).raw("text/turtle", "<a> <b> ."),
        Case::new("POST /import", "/import?format=rdfxml", 422, Some("Validation")).raw("text/plain", ""),
        Case::new("POST /import", "/import?format=ntriples", 500, Some("Io"))
            .raw("application/n-triples", "<http://example.org/b> <http://example.org/p> <http://example.org/c> .\n")
            .broken(),
        Case::new("GET /export", "/export?format=ntriples", 200, ok),
        Case::new("GET /export", "/export", 200, ok),
        Case::new("GET /export", "/export?format=rdfxml", 422, Some("Validation")),
        // Audit and validation.
        Case::new("GET /changes", "/changes?since=3", 200, ok),
        Case::new("GET /changes", "/changes?since=x", 422, Some("Validation")),
        Case::new("GET /validate", "/validate", 200, ok),
        Case::new("GET /nowhere", "/nowhere", 404, Some("NotFound")),
    ]
}

impl Case {
    fn send_bytes(mut self, bytes: Vec<u8>) -> Self {
        self.body = Some(("application/sparql-query", bytes));
        self
    }
}

#[derive(Debug, Default)]
pub struct ContractSummary {
    pub cases: usize,
    pub mutations: usize,
    /// Status codes exercised per endpoint.
    pub statuses: BTreeMap<&'static str, BTreeSet<u16>>,
}

/// Runs every case against a freshly seeded app.
pub async fn run_contract() -> Result<ContractSummary, String> {
    let app = TestApp::seeded();
    let mut summary = ContractSummary::default();
    for case in cases(&app) {
        let before_seq = app.last_seq().await;
        let before_export = app.get("/export?format=ntriples").await.body;
        if case.break_io {
            app.break_persistence();
        }
        let reply = app.send(case.method.clone(), &case.uri, case.body.clone()).await;
        app.restore_persistence();
        let label = format!("{} {}", case.method, case.uri);

        if reply.status.as_u16() != case.status {
            return Err(format!("{label}: status {} (expected {}): {}", reply.status, case.status, reply.text()));
        }
        let is_export = case.endpoint == "GET /export" && reply.status.is_success();
        if !is_export {
            let body = reply.json();
            let obj = body.as_object().ok_or_else(|| format!("{label}: body is not an object"))?;
            let expected_key = if case.code.is_some() { "error" } else { "data" };
            if obj.len() != 1 || !obj.contains_key(expected_key) {
                return Err(format!("{label}: envelope should hold only {expected_key:?}: {body}"));
            }
        }
        if let Some(code) = case.code {
            let body = reply.json();
            let err = &body["error"];
            if err["code"] != code || !err["message"].is_string() || err.as_object().map(|o| o.len()) != Some(3) {
                return Err(format!("{label}: expected error code {code}, got {body}"));
            }
            if code == "Parse" && !(err["detail"]["line"].is_u64() && err["detail"]["column"].is_u64()) {
                return Err(format!("{label}: parse error without line/column: {body}"));
            }
        }

        let new = app.changes_since(before_seq).await;
        let expected = usize::from(case.mutation && reply.status.is_success());
        if new.len() != expected {
            return Err(format!("{label}: appended {} change records, expected {expected}", new.len()));
        }
        if let Some(record) = new.first() {
            if record["seq"].as_u64() != Some(before_seq + 1) {
                return Err(format!("{label}: change record has seq {}, expected {}", record["seq"], before_seq + 1));
            }
        }
        if !reply.status.is_success() || !case.mutation {
            let after_export = app.get("/export?format=ntriples").await.body;
            if after_export != before_export {
                return Err(format!("{label}: store changed although the request did not succeed or was read-only"));
            }
        }
        summary.cases += 1;
        summary.mutations += expected;
        summary.statuses.entry(case.endpoint).or_default().insert(case.status);
    }

    // Whatever reached the disk must reload to the same state.
    let mut data = ontokms_core::kb::DataDir::new(app.dir.path());
    let reloaded = data.load(ontokms_core::ontology::DEFAULT_BASE).map_err(|e| e.to_string())?;
    let exported = app.get("/export?format=ntriples").await.text();
    if ontokms_core::turtle::to_ntriples(reloaded.store()) != exported {
        return Err("data directory does not reload to the served state".into());
    }
    if reloaded.change_log(0).len() as u64 != app.last_seq().await {
        return Err("persisted change log length differs from the served one".into());
    }
    Ok(summary)
}
