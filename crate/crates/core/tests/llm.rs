use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use genplan_core::llm::*;

/// Serves `responses` in order, one per connection, and records request bodies.
fn stub_server(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let seen = bodies.clone();
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            seen.lock().unwrap().push(String::from_utf8(buf).unwrap());
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, bodies)
}

fn ok_body(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}],
        "usage": {"prompt_tokens": 7, "completion_tokens": 3}
    })
    .to_string()
}

#[test]
fn live_backend_against_stub_server() {
    let (url, bodies) = stub_server(vec![(200, ok_body("fixed reply"))]);
    let mut g = Gateway::new(Box::new(LiveBackend::new(url, "test-key")));
    let reply = g.chat("domain_nl", vec![Message::system("s"), Message::user("describe")]).unwrap();
    assert_eq!(reply, "fixed reply");
    assert_eq!(g.transcript().len(), 1);
    let e = &g.transcript().exchanges[0];
    assert_eq!(e.usage, Some(Usage { prompt_tokens: 7, completion_tokens: 3 }));
    let sent: serde_json::Value = serde_json::from_str(&bodies.lock().unwrap()[0]).unwrap();
    assert_eq!(sent["model"], DEFAULT_MODEL);
    assert_eq!(sent["temperature"], 0.0);
    assert_eq!(sent["seed"], 1);
    assert_eq!(sent["messages"][1]["content"], "describe");
    assert!(!serde_json::to_string(e).unwrap().contains("test-key"));
}

#[test]
fn live_backend_retries_transient_failures() {
    let (url, bodies) = stub_server(vec![(500, "{}".into()), (503, "{}".into()), (200, ok_body("third time"))]);
    let mut backend = LiveBackend::new(url, "k").with_backoff(Duration::from_millis(10));
    let req = CompletionRequest::new("t", "m", vec![Message::user("x")]);
    assert_eq!(backend.complete(&req).unwrap().content, "third time");
    assert_eq!(bodies.lock().unwrap().len(), 3);
}

#[test]
fn live_backend_gives_up_after_max_retries() {
    let (url, _) = stub_server(vec![(500, "{}".into()), (500, "{}".into())]);
    let mut backend = LiveBackend::new(url, "k").with_backoff(Duration::from_millis(10));
    let mut req = CompletionRequest::new("t", "m", vec![Message::user("x")]);
    req.max_retries = 1;
    match backend.complete(&req) {
        Err(LlmError::Transport { attempts, .. }) => assert_eq!(attempts, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn client_errors_are_not_retried() {
    let (url, bodies) = stub_server(vec![(401, "{\"error\":\"bad key\"}".into())]);
    let mut backend = LiveBackend::new(url, "k").with_backoff(Duration::from_millis(10));
    let req = CompletionRequest::new("t", "m", vec![Message::user("x")]);
    assert!(matches!(backend.complete(&req), Err(LlmError::Transport { attempts: 1, .. })));
    assert_eq!(bodies.lock().unwrap().len(), 1);
}

fn scripted_gateway() -> Gateway {
    let mut n = 0;
    Gateway::new(Box::new(ScriptedBackend(move |_: &CompletionRequest| {
        n += 1;
        format!("reply {n}")
    })))
}

#[test]
fn transcripts_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let mut g = scripted_gateway().record_to(&path).unwrap();
    for label in ["a", "b", "c"] {
        g.chat(label, vec![Message::user(label)]).unwrap();
    }
    let loaded = load_transcript(&path).unwrap();
    assert_eq!(loaded.len(), 3);
    assert_eq!(loaded.labels(), ["a", "b", "c"]);
    assert_eq!(&loaded, g.transcript());

    let saved = dir.path().join("saved.jsonl");
    loaded.save(&saved).unwrap();
    assert_eq!(load_transcript(&saved).unwrap(), loaded);

    let mut replay = Gateway::new(Box::new(ReplayBackend::new(loaded)));
    for (label, expected) in [("a", "reply 1"), ("b", "reply 2"), ("c", "reply 3")] {
        assert_eq!(replay.chat(label, vec![Message::user(label)]).unwrap(), expected);
    }
}

#[test]
fn empty_transcript_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.jsonl");
    std::fs::write(&path, "").unwrap();
    assert!(load_transcript(&path).unwrap().is_empty());
}

#[test]
fn corrupted_digest_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let mut g = scripted_gateway().record_to(&path).unwrap();
    g.chat("a", vec![Message::user("a")]).unwrap();
    g.chat("b", vec![Message::user("b")]).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let digest = &g.transcript().exchanges[1].digest;
    std::fs::write(&path, text.replace(digest.as_str(), &"0".repeat(64))).unwrap();
    assert!(matches!(load_transcript(&path), Err(LlmError::Format { line: 2, .. })));
    std::fs::write(&path, "{not json\n").unwrap();
    assert!(matches!(load_transcript(&path), Err(LlmError::Format { line: 1, .. })));
}
