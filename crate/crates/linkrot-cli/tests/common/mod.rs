//! Threaded fixture server for driving the binary end to end. The
//! binary runs as its own process, so the server lives on plain
//! threads rather than a test-local async runtime.

#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::{Arc, Mutex};

/// (status, content type, body).
pub type Response = (u16, &'static str, String);

type Routes = HashMap<(String, String), Response>;

pub struct TestServer {
    pub addr: SocketAddr,
    hits: Arc<Mutex<HashMap<(String, String), u64>>>,
}

impl TestServer {
    pub fn start(routes: Vec<((&str, &str), Response)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(Mutex::new(HashMap::new()));
        let table: Arc<Routes> = Arc::new(
            routes
                .into_iter()
                .map(|((host, path), response)| ((host.to_string(), path.to_string()), response))
                .collect(),
        );
        let counters = hits.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let table = table.clone();
                let counters = counters.clone();
                std::thread::spawn(move || serve(stream, &table, &counters));
            }
        });
        TestServer { addr, hits }
    }

    pub fn hits(&self, host: &str, path: &str) -> u64 {
        *self
            .hits
            .lock()
            .unwrap()
            .get(&(host.to_string(), path.to_string()))
            .unwrap_or(&0)
    }

    pub fn total_hits(&self) -> u64 {
        self.hits.lock().unwrap().values().sum()
    }

    pub fn snapshot(&self) -> HashMap<(String, String), u64> {
        self.hits.lock().unwrap().clone()
    }
}

fn serve(mut stream: TcpStream, table: &Routes, counters: &Mutex<HashMap<(String, String), u64>>) {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 2048];
    while !buf.windows(4).any(|w| w == b"\r\n\r\n") {
        match stream.read(&mut chunk) {
            Ok(0) | Err(_) => break,
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
        }
        // TLS handshake: drop so https attempts fall back to http fast.
        if buf.first() == Some(&0x16) {
            return;
        }
    }
    let text = String::from_utf8_lossy(&buf);
    let path = text
        .lines()
        .next()
        .and_then(|line| line.split_whitespace().nth(1))
        .unwrap_or("/")
        .to_string();
    let host = text
        .lines()
        .find_map(|line| line.strip_prefix("Host: "))
        .unwrap_or("")
        .split(':')
        .next()
        .unwrap_or("")
        .to_string();
    *counters
        .lock()
        .unwrap()
        .entry((host.clone(), path.clone()))
        .or_default() += 1;

    let (status, content_type, body) = table
        .get(&(host, path))
        .cloned()
        .unwrap_or((404, "text/plain", String::new()));
    let reason = match status {
        200 => "OK",
        404 => "Not Found",
        _ => "Status",
    };
    let _ = stream.write_all(
        format!(
            "HTTP/1.1 {status} {reason}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        )
        .as_bytes(),
    );
}
