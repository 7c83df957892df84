//! HTTP routes. Successful responses are `{"data": ...}`; failures are
//! `{"error": {"code", "message", "detail"}}` with the status fixed by the code.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, Path, Request, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::request::Parts;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ontokms_core::ingest::{self, IngestFormat};
use ontokms_core::kb::KnowledgeBase;
use ontokms_core::navigation::{self, local_name};
use ontokms_core::ontology::{AnnotationChange, Concept, DeleteMode};
use ontokms_core::sparql;
use ontokms_core::text::{DocKind, SearchHit};
use ontokms_core::turtle::{self, RdfFormat};
use ontokms_core::Error;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

pub const DEFAULT_SEARCH_K: usize = 10;
pub const MAX_NEIGHBORHOOD_DEPTH: usize = 16;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/concepts", get(list_concepts).post(create_concept))
        .route("/concepts/{id}", get(get_concept).patch(patch_concept).delete(delete_concept))
        .route("/concepts/{id}/neighborhood", get(neighborhood))
        .route("/concepts/{id}/paths", get(paths))
        .route("/search", get(search))
        .route("/suggest", get(suggest))
        .route("/query", post(query))
        .route("/ingest", post(ingest))
        .route("/records", get(list_records).delete(delete_all_records))
        .route("/records/{id}", get(get_record).delete(delete_record))
        .route("/import", post(import))
        .route("/export", get(export))
        .route("/changes", get(changes))
        .route("/validate", get(validate))
        .fallback(|| async {
            ApiError { code: crate::error::ErrorCode::NotFound, message: "no such route".into(), detail: None }
        })
        .with_state(state)
}

fn ok<T: Serialize>(data: T) -> Response {
    Json(json!({ "data": data })).into_response()
}

fn created<T: Serialize>(data: T) -> Response {
    (StatusCode::CREATED, Json(json!({ "data": data }))).into_response()
}

/// JSON body extractor whose rejections use the error envelope.
pub struct JsonBody<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for JsonBody<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Self(v)),
            Err(e) => Err(json_rejection(e)),
        }
    }
}

fn json_rejection(e: JsonRejection) -> ApiError {
    ApiError::validation(format!("bad request body: {}", e.body_text()))
}

/// Query-string extractor whose rejections use the error envelope.
pub struct Params<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        match axum::extract::Query::<T>::from_request_parts(parts, state).await {
            Ok(axum::extract::Query(v)) => Ok(Self(v)),
            Err(e) => Err(query_rejection(e)),
        }
    }
}

fn query_rejection(e: QueryRejection) -> ApiError {
    ApiError::validation(format!("bad query string: {}", e.body_text()))
}

async fn health(State(state): State<AppState>) -> Response {
    let concepts = state.read(|kb| kb.ontology().concepts().len());
    ok(json!({ "status": "ok", "concepts": concepts }))
}

/// A concept as the API presents it: the stored annotations plus hierarchy
/// context.
#[derive(Debug, Serialize)]
pub struct ConceptView {
    pub id: String,
    pub name: String,
    pub label: String,
    pub is_root: bool,
    pub parents: BTreeSet<String>,
    pub children: Vec<String>,
    pub labels: BTreeMap<String, String>,
    pub comments: BTreeMap<String, String>,
}

fn concept_view(kb: &KnowledgeBase, iri: &str, lang: &str) -> ApiResult<ConceptView> {
    let o = kb.ontology();
    let c = o.concept(iri).ok_or_else(|| Error::NotFound(format!("concept <{iri}>")))?;
    Ok(ConceptView {
        name: local_name(&c.id).to_string(),
        label: navigation::display_label(o, &c.id, lang),
        is_root: o.is_root(&c.id),
        children: o.children(&c.id),
        id: c.id,
        parents: c.parents,
        labels: c.labels,
        comments: c.comments,
    })
}

#[derive(Debug, Deserialize)]
struct LangParam {
    lang: Option<String>,
}

fn lang_or_default(state: &AppState, lang: Option<String>) -> String {
    lang.filter(|l| !l.is_empty()).unwrap_or_else(|| state.default_lang.clone())
}

async fn list_concepts(State(state): State<AppState>, Params(p): Params<LangParam>) -> ApiResult<Response> {
    let lang = lang_or_default(&state, p.lang);
    state.read(|kb| {
        let views =
            kb.ontology().concepts().iter().map(|iri| concept_view(kb, iri, &lang)).collect::<ApiResult<Vec<_>>>()?;
        Ok(ok(views))
    })
}

async fn get_concept(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Params(p): Params<LangParam>,
) -> ApiResult<Response> {
    let lang = lang_or_default(&state, p.lang);
    state.read(|kb| Ok(ok(concept_view(kb, &kb.ontology().resolve_id(&id), &lang)?)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewConcept {
    id: String,
    #[serde(default)]
    parents: BTreeSet<String>,
    #[serde(default)]
    labels: BTreeMap<String, String>,
    #[serde(default)]
    comments: BTreeMap<String, String>,
}

async fn create_concept(State(state): State<AppState>, JsonBody(body): JsonBody<NewConcept>) -> ApiResult<Response> {
    let lang = state.default_lang.clone();
    let view = state.write(|kb| {
        let o = kb.ontology();
        let concept = Concept {
            id: o.resolve_id(&body.id),
            parents: body.parents.iter().map(|p| o.resolve_id(p)).collect(),
            labels: body.labels,
            comments: body.comments,
        };
        let done = kb.create_concept(concept)?;
        Ok(concept_view(kb, &done.id, &lang))
    })??;
    Ok(created(view))
}

/// Exactly one kind of change per request: a rename, a new parent set, or
/// annotation edits.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConceptPatch {
    rename_to: Option<String>,
    parents: Option<BTreeSet<String>>,
    labels: Option<BTreeMap<String, Option<String>>>,
    comments: Option<BTreeMap<String, Option<String>>>,
}

async fn patch_concept(
    State(state): State<AppState>,
    Path(id): Path<String>,
    JsonBody(body): JsonBody<ConceptPatch>,
) -> ApiResult<Response> {
    let annotating = body.labels.is_some() || body.comments.is_some();
    let kinds = usize::from(body.rename_to.is_some()) + usize::from(body.parents.is_some()) + usize::from(annotating);
    if kinds != 1 {
        return Err(ApiError::validation("patch must contain exactly one of rename_to, parents, or labels/comments"));
    }
    let lang = state.default_lang.clone();
    let view = state.write(|kb| {
        let iri = kb.ontology().resolve_id(&id);
        let result = if let Some(new) = &body.rename_to {
            let new = kb.ontology().resolve_id(new);
            kb.rename_concept(&iri, &new)?
        } else if let Some(parents) = &body.parents {
            let parents = parents.iter().map(|p| kb.ontology().resolve_id(p)).collect();
            kb.move_concept(&iri, &parents)?
        } else {
            let change = AnnotationChange {
                labels: body.labels.clone().unwrap_or_default(),
                comments: body.comments.clone().unwrap_or_default(),
            };
            kb.annotate(&iri, &change)?
        };
        Ok(concept_view(kb, &result.id, &lang))
    })??;
    Ok(ok(view))
}

#[derive(Debug, Deserialize)]
struct DeleteParams {
    mode: Option<String>,
}

async fn delete_concept(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Params(p): Params<DeleteParams>,
) -> ApiResult<Response> {
    let mode = match p.mode.as_deref() {
        None | Some("") => DeleteMode::RefuseIfChildren,
        Some(m) => m.parse::<DeleteMode>().map_err(ApiError::validation)?,
    };
    let outcome = state.write(|kb| {
        let iri = kb.ontology().resolve_id(&id);
        kb.delete_concept(&iri, mode)
    })?;
    Ok(ok(outcome))
}

#[derive(Debug, Deserialize)]
struct NeighborhoodParams {
    depth: Option<usize>,
    lang: Option<String>,
}

async fn neighborhood(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Params(p): Params<NeighborhoodParams>,
) -> ApiResult<Response> {
    let depth = p.depth.unwrap_or(1);
    if depth > MAX_NEIGHBORHOOD_DEPTH {
        return Err(ApiError::validation(format!("depth must be at most {MAX_NEIGHBORHOOD_DEPTH}")));
    }
    let lang = lang_or_default(&state, p.lang);
    state.read(|kb| {
        let iri = kb.ontology().resolve_id(&id);
        Ok(ok(navigation::neighborhood(kb.ontology(), &iri, depth, &lang)?))
    })
}

async fn paths(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    state.read(|kb| {
        let iri = kb.ontology().resolve_id(&id);
        Ok(ok(navigation::path_to_root(kb.ontology(), &iri)?))
    })
}

#[derive(Debug, Deserialize)]
struct SearchParams {
    q: Option<String>,
    lang: Option<String>,
    k: Option<usize>,
}

#[derive(Debug, Serialize)]
struct HitView {
    kind: DocKind,
    owner: String,
    lang: Option<String>,
    /// Display label of the owning concept; absent for records.
    label: Option<String>,
    score: f64,
    snippet: String,
}

fn hit_view(kb: &KnowledgeBase, hit: SearchHit, lang: &str) -> HitView {
    let label =
        (hit.doc.kind != DocKind::Record).then(|| navigation::display_label(kb.ontology(), &hit.doc.owner, lang));
    HitView {
        kind: hit.doc.kind,
        owner: hit.doc.owner,
        lang: hit.doc.lang,
        label,
        score: hit.score,
        snippet: hit.snippet,
    }
}

async fn search(State(state): State<AppState>, Params(p): Params<SearchParams>) -> ApiResult<Response> {
    let q = p.q.filter(|q| !q.trim().is_empty()).ok_or_else(|| ApiError::validation("missing query parameter q"))?;
    let k = p.k.unwrap_or(DEFAULT_SEARCH_K);
    if k == 0 {
        return Err(ApiError::validation("k must be at least 1"));
    }
    let filter = p.lang.filter(|l| !l.is_empty());
    let display = filter.clone().unwrap_or_else(|| state.default_lang.clone());
    state.read(|kb| {
        let hits = kb.search(&q, filter.as_deref(), k);
        let suggestions = if hits.is_empty() { Some(kb.suggest(&q)) } else { None };
        let hits: Vec<HitView> = hits.into_iter().map(|h| hit_view(kb, h, &display)).collect();
        Ok(ok(json!({ "query": q, "hits": hits, "suggestions": suggestions })))
    })
}

#[derive(Debug, Deserialize)]
struct SuggestParams {
    q: Option<String>,
    k: Option<usize>,
}

async fn suggest(State(state): State<AppState>, Params(p): Params<SuggestParams>) -> ApiResult<Response> {
    let q = p.q.filter(|q| !q.trim().is_empty()).ok_or_else(|| ApiError::validation("missing query parameter q"))?;
    let k = p.k.unwrap_or(DEFAULT_SEARCH_K);
    state.read(|kb| {
        let concepts: Vec<Value> =
            kb.suggest_concepts(&q, k).into_iter().map(|(iri, score)| json!({ "id": iri, "score": score })).collect();
        Ok(ok(json!({ "tokens": kb.suggest(&q).tokens, "concepts": concepts })))
    })
}

async fn query(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let text = utf8(&body)?;
    let parsed = sparql::parse_query(text).map_err(Error::from)?;
    let vars = parsed.projection();
    state.read(|kb| {
        let rows: Vec<BTreeMap<String, String>> = sparql::evaluate(kb.store(), &parsed)
            .into_iter()
            .map(|b| b.into_iter().map(|(k, v)| (k, v.canonical())).collect())
            .collect();
        Ok(ok(json!({ "vars": vars, "rows": rows })))
    })
}

fn utf8(body: &[u8]) -> ApiResult<&str> {
    std::str::from_utf8(body).map_err(|e| ApiError::validation(format!("body is not UTF-8: {e}")))
}

fn is_json(headers: &HeaderMap) -> bool {
    headers
        .get(CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(';').next().unwrap_or("").trim().eq_ignore_ascii_case("application/json"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IngestPath {
    path: PathBuf,
    format: Option<String>,
}

#[derive(Debug, Deserialize)]
struct FormatParam {
    format: Option<String>,
}

/// Accepts either a JSON path reference `{"path": .., "format": ..}` or the
/// file contents as the body with `?format=jsonl|csv`.
async fn ingest(
    State(state): State<AppState>,
    headers: HeaderMap,
    Params(p): Params<FormatParam>,
    body: Bytes,
) -> ApiResult<Response> {
    let report = if is_json(&headers) {
        let req: IngestPath =
            serde_json::from_slice(&body).map_err(|e| ApiError::validation(format!("bad request body: {e}")))?;
        let format = match req.format.as_deref().or(p.format.as_deref()) {
            Some(f) => f.parse::<IngestFormat>().map_err(ApiError::validation)?,
            None => IngestFormat::from_path(&req.path)
                .ok_or_else(|| ApiError::validation("cannot infer format from path; pass format"))?,
        };
        let parsed = ingest::read_records(&req.path, format)?;
        let source = req.path.display().to_string();
        state.write(|kb| Ok(kb.ingest_parsed(parsed, &source)))?
    } else {
        let format = p.format.as_deref().unwrap_or("jsonl").parse::<IngestFormat>().map_err(ApiError::validation)?;
        let parsed = ingest::parse_records(utf8(&body)?, format)?;
        state.write(|kb| Ok(kb.ingest_parsed(parsed, "request body")))?
    };
    Ok(ok(report))
}

async fn list_records(State(state): State<AppState>) -> Response {
    state.read(|kb| ok(kb.records().values().collect::<Vec<_>>()))
}

#[derive(Debug, Deserialize)]
struct RecordParams {
    k: Option<usize>,
}

async fn get_record(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Params(p): Params<RecordParams>,
) -> ApiResult<Response> {
    let k = p.k.unwrap_or(5);
    state.read(|kb| {
        let record = kb.record(&id).ok_or_else(|| Error::NotFound(format!("record {id:?}")))?;
        let concepts: Vec<Value> = kb
            .suggest_concepts(&record.text, k)
            .into_iter()
            .map(|(iri, score)| json!({ "id": iri, "score": score }))
            .collect();
        Ok(ok(json!({ "record": record, "concepts": concepts })))
    })
}

async fn delete_record(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let removed = state.write(|kb| {
        if kb.record(&id).is_none() {
            return Err(Error::NotFound(format!("record {id:?}")));
        }
        Ok(kb.remove_records(std::slice::from_ref(&id)))
    })?;
    Ok(ok(json!({ "removed": removed })))
}

async fn delete_all_records(State(state): State<AppState>) -> ApiResult<Response> {
    let removed = state.write(|kb| Ok(kb.remove_all_records()))?;
    Ok(ok(json!({ "removed": removed })))
}

fn rdf_format(param: Option<&str>, headers: Option<&HeaderMap>) -> ApiResult<RdfFormat> {
    let from_header = headers
        .and_then(|h| h.get(CONTENT_TYPE))
        .and_then(|v| v.to_str().ok())
        .map(|v| v.split(';').next().unwrap_or("").trim().to_string())
        .and_then(|v| v.parse::<RdfFormat>().ok());
    match param {
        Some(f) => f.parse().map_err(ApiError::validation),
        None => Ok(from_header.unwrap_or(RdfFormat::Turtle)),
    }
}

async fn import(
    State(state): State<AppState>,
    headers: HeaderMap,
    Params(p): Params<FormatParam>,
    body: Bytes,
) -> ApiResult<Response> {
    let format = rdf_format(p.format.as_deref(), Some(&headers))?;
    let text = utf8(&body)?;
    let base = state.read(|kb| kb.ontology().base().to_string());
    let triples = turtle::parse(text, format, Some(&base)).map_err(Error::from)?;
    let parsed = triples.len();
    let added = state.write(|kb| Ok(kb.import_triples(triples, "request body")))?;
    Ok(ok(json!({ "format": format.name(), "parsed": parsed, "added": added })))
}

async fn export(State(state): State<AppState>, Params(p): Params<FormatParam>) -> ApiResult<Response> {
    let format = rdf_format(p.format.as_deref(), None)?;
    let text = state.read(|kb| turtle::serialize(kb.store(), format));
    Ok(([(CONTENT_TYPE, format.media_type())], text).into_response())
}

#[derive(Debug, Deserialize)]
struct ChangesParams {
    since: Option<u64>,
}

async fn changes(State(state): State<AppState>, Params(p): Params<ChangesParams>) -> Response {
    let since = p.since.unwrap_or(0);
    state.read(|kb| ok(kb.change_log(since)))
}

async fn validate(State(state): State<AppState>) -> Response {
    state.read(|kb| {
        let report = kb.ontology().validate();
        ok(json!({ "valid": report.is_valid(), "summary": report.summary(), "report": report }))
    })
}
