use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use statlink_core::sources::transport::{HttpRequest, HttpResponse, Transport, TransportError, VirtualClock};
use statlink_core::sources::{Access, CacheStore, Fetcher, Origin, ResultFormat, SourceDescriptor, SourceError};
use statlink_core::Provider;

/// Serves a fixed body, counts calls, and can be switched off or made to answer a status.
struct Switchboard {
    calls: AtomicUsize,
    online: AtomicBool,
    status: AtomicUsize,
}

impl Switchboard {
    fn new() -> Arc<Self> {
        Arc::new(Switchboard { calls: AtomicUsize::new(0), online: AtomicBool::new(true), status: AtomicUsize::new(200) })
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for Switchboard {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
        if !self.online.load(Ordering::SeqCst) {
            return Err(TransportError(format!("connection refused: {}", request.url)));
        }
        let status = self.status.load(Ordering::SeqCst) as u16;
        if status != 200 {
            return Ok(HttpResponse::status(status));
        }
        Ok(HttpResponse::ok(format!("Country,2001\nUnited States,{n}\n")))
    }
}

fn descriptor() -> SourceDescriptor {
    SourceDescriptor {
        provider: Provider::Worldbank,
        dataset_id: "gdp".into(),
        access: Access::StaticUrl,
        location: "http://data.example.org/gdp.csv".into(),
        freshness_ttl_secs: 12 * 3600,
        result_format_hint: ResultFormat::Csv,
    }
}

fn setup() -> (tempfile::TempDir, Arc<Switchboard>, Arc<VirtualClock>, Fetcher) {
    let dir = tempfile::tempdir().unwrap();
    let transport = Switchboard::new();
    let clock = Arc::new(VirtualClock::new(Utc.with_ymd_and_hms(2011, 5, 21, 0, 0, 0).unwrap()));
    let fetcher = Fetcher::new(CacheStore::new(dir.path()), transport.clone(), clock.clone());
    (dir, transport, clock, fetcher)
}

#[test]
fn ttl_governs_refetching() {
    let (_dir, transport, clock, fetcher) = setup();
    let desc = descriptor();
    let first = fetcher.fetch_with_cache(&desc, None).unwrap();
    assert_eq!((first.origin, transport.calls()), (Origin::Network, 1));

    clock.advance(Duration::hours(11));
    let cached = fetcher.fetch_with_cache(&desc, None).unwrap();
    assert_eq!((cached.origin, transport.calls()), (Origin::Cache, 1));
    assert_eq!(cached.bytes, first.bytes);

    clock.advance(Duration::hours(2));
    let refreshed = fetcher.fetch_with_cache(&desc, None).unwrap();
    assert_eq!((refreshed.origin, transport.calls()), (Origin::Network, 2));
    assert_ne!(refreshed.bytes, first.bytes);
}

#[test]
fn cache_survives_a_new_fetcher() {
    let (dir, transport, clock, fetcher) = setup();
    fetcher.fetch_with_cache(&descriptor(), None).unwrap();
    drop(fetcher);
    let again = Fetcher::new(CacheStore::new(dir.path()), transport.clone(), clock);
    assert_eq!(again.fetch_with_cache(&descriptor(), None).unwrap().origin, Origin::Cache);
    assert_eq!(transport.calls(), 1);
}

#[test]
fn expired_entry_is_served_stale_when_offline() {
    let (_dir, transport, clock, fetcher) = setup();
    let first = fetcher.fetch_with_cache(&descriptor(), None).unwrap();
    clock.advance(Duration::hours(13));
    transport.online.store(false, Ordering::SeqCst);
    let stale = fetcher.fetch_with_cache(&descriptor(), None).unwrap();
    assert!(stale.stale);
    assert_eq!(stale.bytes, first.bytes);
    assert!(stale.notice.unwrap().contains("780 minutes"));

    transport.online.store(true, Ordering::SeqCst);
    transport.status.store(503, Ordering::SeqCst);
    assert!(fetcher.fetch_with_cache(&descriptor(), None).unwrap().stale);
}

#[test]
fn failures_without_cache_are_errors() {
    let (_dir, transport, _clock, fetcher) = setup();
    transport.online.store(false, Ordering::SeqCst);
    assert!(matches!(fetcher.fetch_with_cache(&descriptor(), None), Err(SourceError::FetchFailed { .. })));
    transport.online.store(true, Ordering::SeqCst);
    transport.status.store(404, Ordering::SeqCst);
    assert!(matches!(fetcher.fetch_with_cache(&descriptor(), None), Err(SourceError::BadStatus { status: 404, .. })));
}

#[test]
fn distinct_queries_are_cached_separately() {
    let (_dir, transport, _clock, fetcher) = setup();
    let mut desc = descriptor();
    desc.access = Access::SparqlEndpoint;
    let a = fetcher.fetch_with_cache(&desc, Some("SELECT 1")).unwrap();
    let b = fetcher.fetch_with_cache(&desc, Some("SELECT 2")).unwrap();
    assert_eq!(transport.calls(), 2);
    assert_ne!(a.bytes, b.bytes);
    assert_eq!(fetcher.fetch_with_cache(&desc, Some("SELECT 1")).unwrap().bytes, a.bytes);
    assert_eq!(transport.calls(), 2);
}
