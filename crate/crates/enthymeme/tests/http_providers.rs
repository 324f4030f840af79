use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use enthymeme::providers::http::{HttpClient, HttpConfig, HttpEmbedder, HttpGenerator, HttpNli, HttpParser};
use enthymeme::providers::{
    AmrParser, ChainKind, Embedder, EmbeddingSimilarity, GenerationRequest, NliProvider, PremiseGenerator, ProviderError,
    Similarity,
};
use serde_json::{json, Value};

type Handler = dyn Fn(&str, &Value, usize) -> (u16, String) + Send + Sync;

/// A one-request-per-connection HTTP server. The handler sees the path, the
/// JSON body and the zero-based request count.
struct Server {
    url: String,
    hits: Arc<AtomicUsize>,
}

fn serve(handler: impl Fn(&str, &Value, usize) -> (u16, String) + Send + Sync + 'static) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    let handler: Arc<Handler> = Arc::new(handler);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let n = counter.fetch_add(1, Ordering::SeqCst);
            let handler = handler.clone();
            thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let path = line.split_whitespace().nth(1).unwrap_or("/").to_string();
                let mut len = 0;
                loop {
                    let mut h = String::new();
                    reader.read_line(&mut h).unwrap();
                    if h.trim().is_empty() {
                        break;
                    }
                    if let Some((k, v)) = h.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            len = v.trim().parse().unwrap();
                        }
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
                let (status, text) = handler(&path, &body, n);
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                    text.len()
                );
            });
        }
    });
    Server { url, hits }
}

fn fast() -> HttpConfig {
    HttpConfig {
        timeout: Duration::from_secs(5),
        attempts: 3,
        backoff: Duration::from_millis(10),
        max_in_flight: 4,
    }
}

#[test]
fn embeddings_give_cosine_similarity() {
    let server = serve(|path, body, _| {
        assert_eq!(path, "/embed");
        let v = if body["text"] == "a" { json!([1.0, 0.0]) } else { json!([1.0, 1.0]) };
        (200, json!({ "embedding": v }).to_string())
    });
    let sim = EmbeddingSimilarity(HttpEmbedder::new(HttpClient::new(&server.url, fast())));
    let s = sim.similarity("a", "b").unwrap();
    assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
}

#[test]
fn embedding_dimension_must_not_change() {
    let server = serve(|_, body, _| {
        let v = if body["text"] == "a" { json!([1.0, 0.0]) } else { json!([1.0, 0.0, 0.0]) };
        (200, json!({ "embedding": v }).to_string())
    });
    let e = HttpEmbedder::new(HttpClient::new(&server.url, fast()));
    e.embed("a").unwrap();
    assert!(matches!(e.embed("b"), Err(ProviderError::MalformedResponse(_))));
    assert!(matches!(e.embed("  "), Err(ProviderError::EmptyText)));
}

#[test]
fn nli_scales_probabilities() {
    let server = serve(|path, body, _| {
        assert_eq!(path, "/nli");
        assert_eq!(body["premise"], "p");
        assert_eq!(body["hypothesis"], "h");
        (200, json!({ "ent": 0.1, "con": 0.85, "neu": 0.05 }).to_string())
    });
    let nli = HttpNli::new(HttpClient::new(&server.url, fast()));
    let s = nli.nli("p", "h").unwrap();
    assert!((s.con - 85.0).abs() < 1e-9 && (s.ent - 10.0).abs() < 1e-9);
}

#[test]
fn out_of_range_nli_is_rejected() {
    let server = serve(|_, _, _| (200, json!({ "ent": 0.1, "con": 1.5, "neu": 0.0 }).to_string()));
    let nli = HttpNli::new(HttpClient::new(&server.url, fast()));
    assert!(matches!(nli.nli("p", "h"), Err(ProviderError::OutOfRangeScore(_))));
}

#[test]
fn server_errors_are_retried() {
    let server = serve(|_, _, n| {
        if n < 2 {
            (503, "{}".into())
        } else {
            (200, json!({ "penman": "(b / boy)" }).to_string())
        }
    });
    let parser = HttpParser::new(HttpClient::new(&server.url, fast()));
    assert_eq!(parser.parse("The boy.").unwrap(), "(b / boy)");
    assert_eq!(server.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn exhausted_retries_report_unavailable() {
    let server = serve(|_, _, _| (500, "{}".into()));
    let parser = HttpParser::new(HttpClient::new(&server.url, fast()));
    assert!(matches!(parser.parse("x"), Err(ProviderError::Unavailable { .. })));
    assert_eq!(server.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn malformed_body_is_not_retried() {
    let server = serve(|_, _, _| (200, "not json".into()));
    let parser = HttpParser::new(HttpClient::new(&server.url, fast()));
    assert!(matches!(parser.parse("x"), Err(ProviderError::MalformedResponse(_))));
    assert_eq!(server.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn unreachable_endpoint_is_unavailable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let nli = HttpNli::new(HttpClient::new(format!("http://127.0.0.1:{port}"), fast()));
    assert!(matches!(nli.nli("p", "h"), Err(ProviderError::Unavailable { .. })));
}

#[test]
fn generation_sends_the_prompt_and_parses_chains() {
    let server = serve(|path, body, _| {
        assert_eq!(path, "/generate");
        assert_eq!(body["steps"], 2);
        assert_eq!(body["kind"], "unhelpful");
        let prompt = body["prompt"].as_str().unwrap();
        assert!(prompt.contains("Jane was a professor teaching piano to students."));
        let text = "Helpful: Jane had a free day. Nobody came.\nNon-Helpful: Two students came early. Jane taught them.";
        (200, json!({ "text": text }).to_string())
    });
    let generator = HttpGenerator::new(HttpClient::new(&server.url, fast()));
    let req = GenerationRequest::new(
        "Jane was a professor teaching piano to students.",
        "Jane spent the morning sipping coffee and reading a book.",
        2,
        ChainKind::Unhelpful,
    )
    .unwrap();
    assert_eq!(generator.generate(&req).unwrap(), ["Two students came early.", "Jane taught them."]);
}
