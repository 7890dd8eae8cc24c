use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use transbench_core::model::{GenerationParams, HttpClient, ModelClient, ModelError};

/// Serves one canned response per connection, in order, and records bodies.
fn serve(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/generate", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    std::thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut len = 0;
            let mut headers = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.trim().is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push_str(&line);
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(format!("{headers}\n{}", String::from_utf8(buf).unwrap()));
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

#[test]
fn posts_prompt_and_params() {
    let (url, seen) = serve(vec![(200, r#"{"completions":["fn f() {}"]}"#.into())]);
    let client = HttpClient::new(url, Some("secret".into()));
    let out = client.generate("translate me", &GenerationParams::default()).unwrap();
    assert_eq!(out, ["fn f() {}"]);
    let req = seen.lock().unwrap()[0].clone();
    assert!(req.to_ascii_lowercase().contains("authorization: bearer secret"));
    assert!(req.contains(r#""prompt":"translate me""#));
    assert!(req.contains(r#""temperature":0.01"#));
}

#[test]
fn retries_transient_failures() {
    let (url, seen) = serve(vec![
        (503, "{}".into()),
        (500, "{}".into()),
        (200, r#"{"completions":["ok"]}"#.into()),
    ]);
    let client = HttpClient::new(url, None).with_retries(3, Duration::from_millis(5));
    assert_eq!(client.generate("p", &GenerationParams::default()).unwrap(), ["ok"]);
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn rate_limit_surfaces_after_retries() {
    let (url, _) = serve(vec![(429, "{}".into()); 4]);
    let client = HttpClient::new(url, None).with_retries(3, Duration::from_millis(5));
    assert_eq!(
        client.generate("p", &GenerationParams::default()),
        Err(ModelError::RateLimited { attempts: 4 })
    );
}

#[test]
fn closed_port_is_unreachable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let client = HttpClient::new(format!("http://127.0.0.1:{port}/"), None).with_retries(1, Duration::from_millis(5));
    assert!(matches!(
        client.generate("p", &GenerationParams::default()),
        Err(ModelError::EndpointUnreachable(_))
    ));
}

#[test]
fn short_reply_is_a_protocol_error() {
    let (url, _) = serve(vec![(200, r#"{"completions":["a"]}"#.into())]);
    let client = HttpClient::new(url, None);
    assert!(matches!(
        client.generate("p", &GenerationParams::sampling5()),
        Err(ModelError::Protocol(_))
    ));
}
