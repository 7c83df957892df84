#![allow(dead_code)]

pub mod contract;

use std::path::PathBuf;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use ontokms::AppState;
use ontokms_core::kb::{DataDir, KnowledgeBase};
use ontokms_core::ontology::DEFAULT_BASE;
use serde_json::Value;
use tempfile::TempDir;
use tower::ServiceExt;

/// A router over a persistent knowledge base in a temporary directory.
pub struct TestApp {
    pub router: Router,
    pub dir: TempDir,
}

#[derive(Debug)]
pub struct Reply {
    pub status: StatusCode,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("response is not JSON ({e}): {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).expect("UTF-8 body")
    }

    pub fn data(&self) -> Value {
        assert!(
            self.status.is_success(),
            "expected success, got {}: {}",
            self.status,
            String::from_utf8_lossy(&self.body)
        );
        self.json()["data"].clone()
    }

    pub fn error_code(&self) -> Option<String> {
        self.json()["error"]["code"].as_str().map(str::to_string)
    }
}

impl TestApp {
    pub fn new(seeded: bool) -> Self {
        let dir = tempfile::tempdir().expect("temp dir");
        let mut data = DataDir::new(dir.path());
        let kb = if seeded { KnowledgeBase::seeded(DEFAULT_BASE) } else { KnowledgeBase::new(DEFAULT_BASE) };
        data.save(&kb).expect("initial save");
        let router = ontokms::router(AppState::persistent(kb, data, "en"));
        Self { router, dir }
    }

    pub fn seeded() -> Self {
        Self::new(true)
    }

    pub async fn send(&self, method: Method, uri: &str, body: Option<(&str, Vec<u8>)>) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        let body = match body {
            Some((ct, bytes)) => {
                req = req.header(header::CONTENT_TYPE, ct);
                Body::from(bytes)
            }
            None => Body::empty(),
        };
        let resp = self.router.clone().oneshot(req.body(body).unwrap()).await.expect("infallible router");
        let status = resp.status();
        let content_type = resp.headers().get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).map(str::to_string);
        let body = resp.into_body().collect().await.expect("body").to_bytes().to_vec();
        Reply { status, content_type, body }
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.send(Method::GET, uri, None).await
    }

    pub async fn json(&self, method: Method, uri: &str, body: Value) -> Reply {
        self.send(method, uri, Some(("application/json", body.to_string().into_bytes()))).await
    }

    pub async fn text(&self, method: Method, uri: &str, content_type: &str, body: &str) -> Reply {
        self.send(method, uri, Some((content_type, body.as_bytes().to_vec()))).await
    }

    pub async fn changes_since(&self, since: u64) -> Vec<Value> {
        self.get(&format!("/changes?since={since}")).await.data().as_array().cloned().unwrap_or_default()
    }

    pub async fn last_seq(&self) -> u64 {
        self.changes_since(0).await.last().map_or(0, |r| r["seq"].as_u64().unwrap())
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.dir.path().join("store.nt")
    }

    /// Makes the next save fail by putting a directory where the snapshot goes.
    pub fn break_persistence(&self) {
        let path = self.snapshot_path();
        std::fs::rename(&path, path.with_extension("nt.aside")).unwrap();
        std::fs::create_dir_all(path.join("blocker")).unwrap();
    }

    pub fn restore_persistence(&self) {
        let path = self.snapshot_path();
        if path.is_dir() {
            std::fs::remove_dir_all(&path).unwrap();
            std::fs::rename(path.with_extension("nt.aside"), &path).unwrap();
        }
    }
}

pub fn enc(iri: &str) -> String {
    let mut out = String::new();
    for b in iri.bytes() {
        if b.is_ascii_alphanumeric() || b"-_.~".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}
