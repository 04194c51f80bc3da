//! Starts the service on an ephemeral port and plays one session over HTTP:
//! create, fetch the instrument, upload gameplay in batches (with a lost
//! batch), answer a question silently and in full mode, then read the report
//! and the admin export.
//!
//! ```text
//! cargo run -p ctskills-server --example http_roundtrip
//! ```

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::Arc;

use ctskills_core::game::{GameEvent, LogBuilder, SessionId};
use ctskills_core::instrument::{InstrumentConfig, Level};
use ctskills_core::store::SessionStore;
use ctskills_core::time::now_ms;
use ctskills_server::api::{router, AppState};
use serde_json::{json, Value};

const TOKEN: &str = "example-admin-token";

/// A deliberately tiny HTTP/1.1 client: one request per connection.
fn request(addr: SocketAddr, method: &str, path: &str, headers: &[(&str, &str)], body: Option<&Value>) -> (u16, String) {
    let body = body.map(Value::to_string).unwrap_or_default();
    let mut req = format!("{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Length: {}\r\n", body.len());
    if !body.is_empty() {
        req.push_str("Content-Type: application/json\r\n");
    }
    for (k, v) in headers {
        req.push_str(&format!("{k}: {v}\r\n"));
    }
    req.push_str("\r\n");
    req.push_str(&body);

    let mut stream = TcpStream::connect(addr).expect("connect");
    stream.write_all(req.as_bytes()).expect("send");
    let mut raw = String::new();
    stream.read_to_string(&mut raw).expect("receive");
    let status = raw[9..12].parse().expect("status code");
    let body = raw.split_once("\r\n\r\n").map(|(_, b)| b.to_owned()).unwrap_or_default();
    (status, body)
}

fn batch(events: &[GameEvent]) -> Value {
    json!({ "events": events })
}

fn main() {
    let config = Arc::new(InstrumentConfig::default_instrument());
    let store = Arc::new(SessionStore::in_memory(config.clone()));
    let app = router(AppState::new(store, Some(TOKEN.to_owned())));

    let runtime = tokio::runtime::Runtime::new().unwrap();
    let listener = runtime.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    runtime.spawn(async move { axum::serve(listener, app).await });
    println!("listening on {addr}");

    let (status, body) = request(addr, "GET", "/v1/instrument", &[], None);
    let doc: Value = serde_json::from_str(&body).unwrap();
    println!("GET /v1/instrument -> {status}, {} questions", doc["questions"].as_array().unwrap().len());

    let profile = json!({"age": 10, "grade": 5, "gender": "male", "language": "fr"});
    let (status, body) = request(addr, "POST", "/v1/sessions", &[], Some(&profile));
    let id: String = serde_json::from_str::<Value>(&body).unwrap()["session_id"].as_str().unwrap().to_owned();
    println!("POST /v1/sessions -> {status} {body}");

    let mut log = LogBuilder::new(&config, SessionId::new(id.as_str()).unwrap(), now_ms() - chrono::Duration::minutes(10));
    log.perfect_session();
    let events = log.finish();
    let path = format!("/v1/sessions/{id}/events");

    // level 1 up to the first question screen, uploaded in three batches
    let screen = events.iter().position(|e| e.body.kind_name() == "question_submitted").unwrap();
    let (a, b) = (screen / 3, 2 * screen / 3);
    let (status, body) = request(addr, "POST", &path, &[], Some(&batch(&events[..a])));
    println!("events 1-{a} -> {status} {body}");
    // the middle batch is lost on the network and the last one arrives first
    let (status, body) = request(addr, "POST", &path, &[], Some(&batch(&events[b..screen])));
    println!("events {}-{screen} -> {status} {body}", b + 1);
    let (status, body) = request(addr, "POST", &path, &[], Some(&batch(&events[a..screen])));
    println!("events {}-{screen} -> {status} {body}", a + 1);

    let answer = json!({"question": "Q1", "level": 1, "chosen": ["apple_red", "basket_red", "grass", "rock"]});
    let answers = format!("/v1/sessions/{id}/answers");
    let (status, body) = request(addr, "POST", &answers, &[], Some(&answer));
    println!("silent answer -> {status} {body}");

    let auth = format!("Bearer {TOKEN}");
    let answer = json!({"question": "Q2", "level": 1, "chosen": ["apple_red"]});
    let (status, body) = request(addr, "POST", &answers, &[("X-Assessment-Mode", "full"), ("Authorization", &auth)], Some(&answer));
    let detail: Value = serde_json::from_str(&body).unwrap();
    println!("full answer   -> {status} raw {} rescaled {}", detail["breakdown"]["raw_score"], detail["breakdown"]["rescaled"]);

    let report = format!("/v1/sessions/{id}/report");
    let (status, body) = request(addr, "GET", &report, &[], None);
    println!("report while playing -> {status} {body}");

    // finish the game: the rest of the log from the next expected seq
    let mut rest = LogBuilder::new(&config, SessionId::new(id.as_str()).unwrap(), now_ms()).resume(screen as u64 + 2);
    let level1 = Level::new(1).unwrap();
    for cell in ctskills_core::instrument::Cell::all().filter(|c| c.level == level1).skip(2) {
        let targets: Vec<_> = config.spec(cell).targets().iter().cloned().collect();
        rest.show(cell).submit(cell, targets);
    }
    for level in &Level::ALL[1..] {
        rest.play_level_cleanly(*level).answer_level_with_targets(*level);
    }
    let (status, body) = request(addr, "POST", &path, &[], Some(&batch(rest.events())));
    println!("rest of the game -> {status} {body}");

    let (status, body) = request(addr, "GET", &report, &[], None);
    let r: Value = serde_json::from_str(&body).unwrap();
    println!("report -> {status}, closed {}, aggregate {:.4}", r["closed"], r["aggregate"].as_f64().unwrap());

    let (status, body) = request(addr, "GET", "/v1/admin/export?grade=5", &[], None);
    println!("export without token -> {status} {body}");
    let (status, body) = request(addr, "GET", "/v1/admin/export?grade=5", &[("Authorization", &auth)], None);
    println!("export -> {status}, {} lines", body.lines().count());
}
