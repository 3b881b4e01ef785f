//! Injectable network layer and clocks.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::{DateTime, Duration, Utc};
use parking_lot::Mutex;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Get,
    Post,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub method: Method,
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: Option<String>,
}

impl HttpRequest {
    pub fn get(url: impl Into<String>) -> Self {
        HttpRequest { method: Method::Get, url: url.into(), headers: Vec::new(), body: None }
    }

    pub fn post(url: impl Into<String>, body: impl Into<String>) -> Self {
        HttpRequest { method: Method::Post, url: url.into(), headers: Vec::new(), body: Some(body.into()) }
    }

    pub fn header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.to_string(), value.to_string()));
        self
    }

    pub fn request_line(&self) -> String {
        format!("{} {}", self.method.as_str(), self.url)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn ok(body: impl Into<Vec<u8>>) -> Self {
        HttpResponse { status: 200, headers: Vec::new(), body: body.into() }
    }

    pub fn status(status: u16) -> Self {
        HttpResponse { status, headers: Vec::new(), body: Vec::new() }
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("transport: {0}")]
pub struct TransportError(pub String);

pub trait Transport: Send + Sync {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError>;
}

/// Replays request/response pairs stored in a directory.
///
/// Each `<name>.request` holds a request line (`GET <url>` or `POST <url>`),
/// optionally followed by a blank line and the request body. The sibling
/// `<name>.response` holds a status line, header lines, a blank line and the
/// raw body. Unknown requests fail with a transport error.
#[derive(Debug, Default)]
pub struct RecordedTransport {
    exchanges: HashMap<(String, Option<String>), HttpResponse>,
    calls: AtomicUsize,
}

fn split_head(bytes: &[u8]) -> (&[u8], &[u8]) {
    for sep in [&b"\r\n\r\n"[..], &b"\n\n"[..]] {
        if let Some(pos) = bytes.windows(sep.len()).position(|w| w == sep) {
            return (&bytes[..pos], &bytes[pos + sep.len()..]);
        }
    }
    (bytes, &[])
}

pub fn parse_recorded_response(bytes: &[u8]) -> Result<HttpResponse, TransportError> {
    let (head, body) = split_head(bytes);
    let head = std::str::from_utf8(head).map_err(|_| TransportError("response head is not UTF-8".into()))?;
    let mut lines = head.lines();
    let status_line = lines.next().unwrap_or("");
    let status = status_line
        .split_whitespace()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| TransportError(format!("bad status line `{status_line}`")))?;
    let headers = lines
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    Ok(HttpResponse { status, headers, body: body.to_vec() })
}

fn request_key(request_line: &str, body: Option<&str>) -> (String, Option<String>) {
    (request_line.trim().to_string(), body.map(|b| b.trim_end().to_string()).filter(|b| !b.is_empty()))
}

impl RecordedTransport {
    pub fn new() -> Self {
        RecordedTransport::default()
    }

    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut transport = RecordedTransport::new();
        let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.path());
        for entry in entries {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("request") {
                continue;
            }
            let request = std::fs::read_to_string(&path)?;
            let response = std::fs::read(path.with_extension("response"))?;
            let (line, body) = match request.split_once("\n\n") {
                Some((line, body)) => (line, Some(body)),
                None => (request.as_str(), None),
            };
            let response = parse_recorded_response(&response)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.0))?;
            transport.exchanges.insert(request_key(line, body), response);
        }
        Ok(transport)
    }

    pub fn record(&mut self, request: &HttpRequest, response: HttpResponse) {
        self.exchanges.insert(request_key(&request.request_line(), request.body.as_deref()), response);
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for RecordedTransport {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.exchanges
            .get(&request_key(&request.request_line(), request.body.as_deref()))
            .cloned()
            .ok_or_else(|| TransportError(format!("no recording for `{}`", request.request_line())))
    }
}

/// Transport that refuses every request.
#[derive(Debug, Default)]
pub struct OfflineTransport;

impl Transport for OfflineTransport {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        Err(TransportError(format!("offline: {}", request.request_line())))
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Manually advanced clock for tests.
#[derive(Debug)]
pub struct VirtualClock(Mutex<DateTime<Utc>>);

impl VirtualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        VirtualClock(Mutex::new(start))
    }

    pub fn advance(&self, by: Duration) {
        *self.0.lock() += by;
    }

    pub fn set(&self, to: DateTime<Utc>) {
        *self.0.lock() = to;
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock()
    }
}
