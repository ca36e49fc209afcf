mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use bench::{Gateway, WorkbenchConfig};
use common::*;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(gw: &Arc<Gateway>, method: &str, path: &str, body: Value) -> (StatusCode, Value) {
    let body = if body.is_null() {
        Vec::new()
    } else {
        serde_json::to_vec(&body).unwrap()
    };
    call_raw(gw, method, path, body).await
}

async fn call_raw(
    gw: &Arc<Gateway>,
    method: &str,
    path: &str,
    body: Vec<u8>,
) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(path)
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    let resp = bench::server::router(Arc::clone(gw))
        .oneshot(req)
        .await
        .unwrap();
    let status = resp.status();
    assert_eq!(resp.headers()["content-type"], "application/json");
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    assert!(text.ends_with('\n'));
    let v = json(&text);
    assert_eq!(v["ok"], status == StatusCode::OK, "{text}");
    if status != StatusCode::OK {
        assert!(v["error"]["kind"].is_string(), "{text}");
        assert!(v["result"].is_null());
    }
    (status, v)
}

fn gateway(dir: &tempfile::TempDir) -> Arc<Gateway> {
    Arc::new(Gateway::new(config_in(dir.path())))
}

#[tokio::test]
async fn compile_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let gw = gateway(&dir);
    let (s, v) = call(&gw, "POST", "/compile", json!({"text": RETRN})).await;
    assert_eq!(s, StatusCode::OK);
    let diags = v["result"]["diagnostics"].as_array().unwrap();
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0]["severity"], "error");
    assert_eq!(diags[0]["span"]["line"], 1);
    assert_eq!(
        diags[0].as_object().unwrap().keys().collect::<Vec<_>>(),
        ["code", "fixable", "message", "severity", "span"]
    );

    let (s, v) = call(&gw, "POST", "/compile", json!({"text": FACTORIAL})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["result"]["diagnostics"], json!([]));

    let (s, v) = call_raw(&gw, "POST", "/compile", b"{not json".to_vec()).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["kind"], "MalformedJson");
    let (s, v) = call(&gw, "POST", "/compile", json!({"txt": "x"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["kind"], "InvalidRequest");
}

#[tokio::test]
async fn run_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let gw = gateway(&dir);
    let (s, v) = call(&gw, "POST", "/run", json!({"text": FACTORIAL})).await;
    assert_eq!(s, StatusCode::OK);
    let r = &v["result"];
    assert_eq!(r["return_value"], json!({"type": "int", "value": 120}));
    assert!(r["console"]
        .as_str()
        .unwrap()
        .contains("factorial(5) = 120\n"));
    assert!(r["fault"].is_null());

    let policy = json!({
        "profile": {"name": "tight", "capabilities": ["console_write"], "integrity": "low"},
        "limits": {"max_steps": 500, "max_heap_cells": 100, "max_output_bytes": 100, "max_wall_ms": 500}
    });
    let (_, v) = call(
        &gw,
        "POST",
        "/run",
        json!({"text": "while (true) { }", "policy": policy}),
    )
    .await;
    assert_eq!(v["result"]["fault"]["kind"], "FuelExhausted");
    assert_eq!(v["result"]["steps_used"], 500);

    let (_, v) = call(
        &gw,
        "POST",
        "/run",
        json!({"text": "write_file(\"/x\", \"y\");", "policy": policy}),
    )
    .await;
    assert_eq!(v["result"]["fault"]["kind"], "CapabilityDenied");

    let bad = json!({"profile": {"name": "p", "capabilities": ["teleport"], "integrity": "low"}});
    let (s, v) = call(&gw, "POST", "/run", json!({"text": "1;", "policy": bad})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["kind"], "InvalidPolicy");
    let zero = json!({
        "profile": {"name": "p", "integrity": "low"},
        "limits": {"max_steps": 0, "max_heap_cells": 1, "max_output_bytes": 1, "max_wall_ms": 1}
    });
    let (s, _) = call(&gw, "POST", "/run", json!({"text": "1;", "policy": zero})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn run_never_hangs() {
    let dir = tempfile::tempdir().unwrap();
    let gw = gateway(&dir);
    let policy = json!({
        "profile": {"name": "spin", "capabilities": [], "integrity": "low"},
        "limits": {"max_steps": 1_000_000_000u64, "max_heap_cells": 100, "max_output_bytes": 100, "max_wall_ms": 300}
    });
    let started = Instant::now();
    let (_, v) = call(
        &gw,
        "POST",
        "/run",
        json!({"text": "let i = 0; while (true) { i = i + 1; }", "policy": policy}),
    )
    .await;
    assert!(started.elapsed() < Duration::from_secs(1));
    assert_eq!(v["result"]["fault"]["kind"], "WallClockExceeded");
}

#[tokio::test]
async fn deep_nesting_is_contained() {
    let dir = tempfile::tempdir().unwrap();
    let gw = gateway(&dir);
    let deep = format!("return {}1{};", "(".repeat(5000), ")".repeat(5000));
    let (s, v) = call(&gw, "POST", "/compile", json!({"text": deep})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["result"]["diagnostics"][0]["severity"], "error");
    let recursion = "fn f(n) { return f(n + 1); } return f(0);";
    let (_, v) = call(&gw, "POST", "/run", json!({"text": recursion})).await;
    assert_eq!(v["result"]["fault"]["kind"], "MemoryExceeded");
}

#[tokio::test]
async fn augment_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let gw = gateway(&dir);
    let (s, v) = call(
        &gw,
        "POST",
        "/augment",
        json!({"text": "x", "ruleset": {"rules": []}}),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["result"]["spans"], json!([]));

    let (_, v) = call(
        &gw,
        "POST",
        "/augment",
        json!({"text": "x = hash_sha1(\"s\");", "ruleset": "sha1_warning"}),
    )
    .await;
    let spans = v["result"]["spans"].as_array().unwrap();
    assert_eq!(spans.len(), 1);
    assert_eq!(spans[0]["stage"], "background");
    assert_eq!(
        spans[0]["effects"]["tooltip"],
        "SHA1 is cryptographically broken, please use a currently secure function like SHA-512."
    );
    assert_eq!(spans[0]["advice"]["id"], "sha1_insecure");

    let (_, v) = call(
        &gw,
        "POST",
        "/augment",
        json!({
            "text": "F1001.T2000.F2001",
            "ruleset": "identifier_overlay",
            "params": {"F1001": "Category ID", "T2000": "Categories", "F2001": "Name"}
        }),
    )
    .await;
    let overlays: Vec<&str> = v["result"]["spans"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["stage"] == "inline")
        .map(|s| s["effects"]["overlay_text"].as_str().unwrap())
        .collect();
    assert_eq!(overlays, ["Category ID", "Categories", "Name"]);

    let (s, v) = call(
        &gw,
        "POST",
        "/augment",
        json!({"text": "x", "ruleset": "missing"}),
    )
    .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["kind"], "UnknownRuleset");

    let bad = json!({"rules": [{"id": "r", "matchers": [{"kind": "regex", "value": "("}], "effects": {"foreground": "red"}}]});
    let (s, v) = call(
        &gw,
        "POST",
        "/augment",
        json!({"text": "x", "ruleset": bad}),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["result"]["errors"][0]["kind"], "InvalidPattern");

    let (_, v) = call(&gw, "POST", "/taxonomy", json!({"ruleset": "sha1_warning"})).await;
    assert_eq!(
        v["result"]["rows"][0]["visualization"],
        json!(["text", "decoration"])
    );
    let (_, v) = call(&gw, "GET", "/rulesets", Value::Null).await;
    assert!(v["result"]["names"]
        .as_array()
        .unwrap()
        .contains(&json!("smalltalk")));
}

#[tokio::test]
async fn analyze_and_fix_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let gw = gateway(&dir);
    let text = "let s = \"a\\nb\";\nprint(s);";
    let (_, v) = call(&gw, "POST", "/analyze", json!({"text": text})).await;
    assert_eq!(v["result"]["diagnostics"][0]["code"], "A001");
    assert_eq!(
        v["result"]["fixes"][0][0]["title"],
        "Replace with compatible newlines"
    );

    let (s, v) = call(
        &gw,
        "POST",
        "/fix",
        json!({"text": text, "diagnostic_index": 0, "fix_index": 0}),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    let new_text = v["result"]["new_text"].as_str().unwrap();
    assert!(new_text.contains("+ nl() +"));
    assert!(v["result"]["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .all(|d| d["code"] != "A001"));

    for (d, f) in [(1, 0), (0, 1)] {
        let (s, v) = call(
            &gw,
            "POST",
            "/fix",
            json!({"text": text, "diagnostic_index": d, "fix_index": f}),
        )
        .await;
        assert_eq!(s, StatusCode::BAD_REQUEST);
        assert_eq!(v["error"]["kind"], "BadIndex");
    }

    let (_, v) = call(
        &gw,
        "POST",
        "/fix",
        json!({"text": "hash_sha1(\"\\n\");", "all": true}),
    )
    .await;
    assert_eq!(v["result"]["new_text"], "hash_sha512(nl());");
    assert_eq!(v["result"]["applied"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn script_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let gw = gateway(&dir);
    let id = "00000000-0000-0000-0000-00000000000a";
    let base = format!("/scripts/{id}");

    let (_, v) = call(&gw, "GET", &format!("{base}/history"), Value::Null).await;
    assert_eq!(v["result"]["entries"], json!([]));

    let mut hashes = Vec::new();
    for (n, text) in ["one\n", "two\r\n", ""].iter().enumerate() {
        let (s, v) = call(&gw, "POST", &format!("{base}/commit"),
            json!({"text": text, "author": "Ann", "email": "ann@example.org", "message": format!("v{n}")})).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(v["result"]["timestamp"], FIXED_TS);
        hashes.push(v["result"]["hash"].as_str().unwrap().to_string());
        let (_, h) = call(&gw, "GET", &format!("{base}/history"), Value::Null).await;
        assert_eq!(h["result"]["entries"].as_array().unwrap().len(), n + 1);
        assert_eq!(h["result"]["entries"][0]["message"], format!("v{n}"));
    }
    let (_, v) = call(
        &gw,
        "GET",
        &format!("{base}/versions/{}", hashes[1]),
        Value::Null,
    )
    .await;
    assert_eq!(v["result"]["text"], "two\r\n");

    let (s, v) = call(
        &gw,
        "POST",
        &format!("{base}/restore"),
        json!({"hash": hashes[0], "author": "Bo", "email": "bo@example.org"}),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(
        v["result"]["message"],
        format!("Restore {}", &hashes[0][..8])
    );
    let head = v["result"]["hash"].as_str().unwrap().to_string();
    let (_, v) = call(&gw, "GET", &format!("{base}/versions/{head}"), Value::Null).await;
    assert_eq!(v["result"]["text"], "one\n");
    let (_, h) = call(&gw, "GET", &format!("{base}/history"), Value::Null).await;
    assert_eq!(h["result"]["entries"].as_array().unwrap().len(), 4);

    let (s, v) = call(
        &gw,
        "POST",
        &format!("{base}/commit"),
        json!({"text": "x", "author": "Ann", "email": "a@x", "message": "  "}),
    )
    .await;
    assert_eq!(
        (s, v["error"]["kind"].as_str()),
        (StatusCode::BAD_REQUEST, Some("EmptyMessage"))
    );
    let (s, v) = call(
        &gw,
        "GET",
        &format!("{base}/versions/{}", "0".repeat(64)),
        Value::Null,
    )
    .await;
    assert_eq!(
        (s, v["error"]["kind"].as_str()),
        (StatusCode::NOT_FOUND, Some("UnknownCommit"))
    );
    let other = "00000000-0000-0000-0000-00000000000b";
    let (s, v) = call(
        &gw,
        "GET",
        &format!("/scripts/{other}/versions/{}", hashes[0]),
        Value::Null,
    )
    .await;
    assert_eq!(
        (s, v["error"]["kind"].as_str()),
        (StatusCode::NOT_FOUND, Some("ForeignCommit"))
    );
    let (s, v) = call(
        &gw,
        "POST",
        &format!("/scripts/{other}/restore"),
        json!({"hash": hashes[0], "author": "Bo", "email": "b@x"}),
    )
    .await;
    assert_eq!(
        (s, v["error"]["kind"].as_str()),
        (StatusCode::NOT_FOUND, Some("ForeignCommit"))
    );
    let (s, v) = call(&gw, "GET", "/scripts/NOT-A-GUID/history", Value::Null).await;
    assert_eq!(
        (s, v["error"]["kind"].as_str()),
        (StatusCode::BAD_REQUEST, Some("InvalidScriptId"))
    );

    let (_, v) = call(&gw, "GET", "/fsck", Value::Null).await;
    assert_eq!(v["result"]["findings"], json!([]));
    let (_, v) = call(&gw, "POST", "/scripts", Value::Null).await;
    assert!(v["result"]["id"]
        .as_str()
        .unwrap()
        .parse::<bench_core::vcs::ScriptId>()
        .is_ok());
}

#[tokio::test]
async fn routing_errors() {
    let dir = tempfile::tempdir().unwrap();
    let gw = gateway(&dir);
    let (s, v) = call(&gw, "GET", "/nowhere", Value::Null).await;
    assert_eq!(
        (s, v["error"]["kind"].as_str()),
        (StatusCode::NOT_FOUND, Some("NotFound"))
    );
    let (s, v) = call(&gw, "GET", "/compile", Value::Null).await;
    assert_eq!(
        (s, v["error"]["kind"].as_str()),
        (StatusCode::METHOD_NOT_ALLOWED, Some("MethodNotAllowed"))
    );
}

#[tokio::test]
async fn oversized_body() {
    let dir = tempfile::tempdir().unwrap();
    let gw = Arc::new(Gateway::new(WorkbenchConfig {
        max_body_bytes: 64,
        ..config_in(dir.path())
    }));
    let text = "x".repeat(100);
    let (s, v) = call(&gw, "POST", "/compile", json!({"text": text})).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(v["error"]["kind"], "PayloadTooLarge");
    let direct = gw.handle("POST", "/compile", text.as_bytes());
    assert_eq!(direct.status, 413);
}

#[test]
fn concurrent_commits_are_serialized() {
    let dir = tempfile::tempdir().unwrap();
    let gw = Arc::new(Gateway::new(config_in(dir.path())));
    let id = "00000000-0000-0000-0000-0000000000cc";
    let threads: Vec<_> = (0..8)
        .map(|n| {
            let gw = Arc::clone(&gw);
            std::thread::spawn(move || {
                let body = json!({"text": format!("v{n}"), "author": "A", "email": "a@x", "message": format!("m{n}")});
                let r = gw.handle("POST", &format!("/scripts/{id}/commit"), body.to_string().as_bytes());
                assert!(r.ok(), "{}", r.body);
            })
        })
        .collect();
    for t in threads {
        t.join().unwrap();
    }
    let h = json(
        &gw.handle("GET", &format!("/scripts/{id}/history"), b"")
            .body,
    );
    assert_eq!(h["result"]["entries"].as_array().unwrap().len(), 8);
    let f = json(&gw.handle("GET", "/fsck", b"").body);
    assert_eq!(f["result"]["findings"], json!([]));
}

#[test]
fn real_tcp_server() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(WorkbenchConfig {
        max_body_bytes: 1024,
        ..config_in(dir.path())
    });
    let (status, body) = server.request(
        "POST",
        "/compile",
        json!({"text": RETRN}).to_string().as_bytes(),
    );
    assert_eq!(status, 200);
    let v = json(std::str::from_utf8(&body).unwrap());
    assert_eq!(v["result"]["diagnostics"].as_array().unwrap().len(), 1);

    let big = json!({"text": "y".repeat(4096)}).to_string();
    let (status, body) = server.request("POST", "/compile", big.as_bytes());
    assert_eq!(status, 413);
    assert_eq!(
        json(std::str::from_utf8(&body).unwrap())["error"]["kind"],
        "PayloadTooLarge"
    );
}
