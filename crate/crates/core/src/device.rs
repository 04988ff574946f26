//! Client for an internet-device search service.
//!
//! Requests go to `<base>/shodan/host/search?key=<K>&query=<Q>` and the
//! response carries `total` plus a page of `matches`. The client only reads
//! indexed banner data; it never connects to the devices themselves.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{Read, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("device search rejected the API key")]
    Auth,
    #[error("device search transport: {0}")]
    Transport(String),
    #[error("malformed device search response: {0}")]
    MalformedResponse(String),
    #[error("malformed match: {0}")]
    MalformedMatch(String),
    #[error("device csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub ip: String,
    pub port: u16,
    /// Raw banner (`data`) as indexed by the service.
    pub banner: String,
    pub org: Option<String>,
    pub os: Option<String>,
    pub product: Option<String>,
    pub country: Option<String>,
    pub city: Option<String>,
    /// Unix seconds.
    pub observed_at: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanResult {
    pub query: String,
    pub total: u64,
    pub records: Vec<DeviceRecord>,
}

/// Fetches one page of raw search results.
pub trait Transport {
    fn search(&self, query: &str, page: u32) -> Result<String, ScanError>;
}

impl<T: Transport + ?Sized> Transport for &T {
    fn search(&self, query: &str, page: u32) -> Result<String, ScanError> {
        (**self).search(query, page)
    }
}

#[derive(Debug, Deserialize)]
struct FixtureManifest {
    valid_keys: Vec<String>,
    /// query -> one response file per page
    queries: HashMap<String, Vec<String>>,
}

/// Replays recorded responses from a directory with a `manifest.json`:
///
/// ```json
/// {"valid_keys": ["fixture-key"], "queries": {"sensor": ["sensor.page1.json"]}}
/// ```
///
/// A key not listed in `valid_keys` is answered like the live service
/// answers an invalid key.
#[derive(Debug)]
pub struct FixtureTransport {
    dir: PathBuf,
    key: String,
    manifest: FixtureManifest,
}

impl FixtureTransport {
    pub fn open(dir: impl AsRef<Path>, key: &str) -> Result<Self, ScanError> {
        let dir = dir.as_ref().to_path_buf();
        let body = fs::read(dir.join("manifest.json"))?;
        let manifest = serde_json::from_slice(&body)
            .map_err(|e| ScanError::Transport(format!("fixture manifest: {e}")))?;
        Ok(Self {
            dir,
            key: key.to_owned(),
            manifest,
        })
    }

    /// The first key the fixture accepts.
    pub fn default_key(dir: impl AsRef<Path>) -> Result<String, ScanError> {
        let body = fs::read(dir.as_ref().join("manifest.json"))?;
        let manifest: FixtureManifest = serde_json::from_slice(&body)
            .map_err(|e| ScanError::Transport(format!("fixture manifest: {e}")))?;
        manifest
            .valid_keys
            .into_iter()
            .next()
            .ok_or_else(|| ScanError::Transport("fixture accepts no keys".into()))
    }
}

impl Transport for FixtureTransport {
    fn search(&self, query: &str, page: u32) -> Result<String, ScanError> {
        if !self.manifest.valid_keys.contains(&self.key) {
            return Err(ScanError::Auth);
        }
        let pages = self
            .manifest
            .queries
            .get(query)
            .ok_or_else(|| ScanError::Transport(format!("no recorded response for {query:?}")))?;
        let Some(file) = pages.get(page.saturating_sub(1) as usize) else {
            return Ok(format!(
                "{{\"total\": {}, \"matches\": []}}",
                first_page_total(&self.dir, pages)?
            ));
        };
        Ok(fs::read_to_string(self.dir.join(file))?)
    }
}

fn first_page_total(dir: &Path, pages: &[String]) -> Result<u64, ScanError> {
    let Some(first) = pages.first() else {
        return Ok(0);
    };
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.join(first))?)
        .map_err(|e| ScanError::MalformedResponse(e.to_string()))?;
    Ok(v.get("total").and_then(Value::as_u64).unwrap_or(0))
}

/// Live HTTPS transport with a minimum interval between requests.
pub struct HttpTransport {
    base: String,
    key: String,
    agent: ureq::Agent,
    min_interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl HttpTransport {
    pub fn new(base: &str, key: &str, min_interval: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base: base.trim_end_matches('/').to_owned(),
            key: key.to_owned(),
            agent,
            min_interval,
            last: Mutex::new(None),
        }
    }

    pub fn request_url(&self, query: &str, page: u32) -> String {
        request_url(&self.base, &self.key, query, page)
    }
}

pub fn request_url(base: &str, key: &str, query: &str, page: u32) -> String {
    let enc = |s: &str| url::form_urlencoded::byte_serialize(s.as_bytes()).collect::<String>();
    let mut url = format!(
        "{}/shodan/host/search?key={}&query={}",
        base.trim_end_matches('/'),
        enc(key),
        enc(query)
    );
    if page > 1 {
        url.push_str(&format!("&page={page}"));
    }
    url
}

impl Transport for HttpTransport {
    fn search(&self, query: &str, page: u32) -> Result<String, ScanError> {
        {
            let mut last = self.last.lock().expect("rate limiter lock");
            if let Some(t) = *last {
                let elapsed = t.elapsed();
                if elapsed < self.min_interval {
                    std::thread::sleep(self.min_interval - elapsed);
                }
            }
            *last = Some(Instant::now());
        }
        let mut resp = self
            .agent
            .get(&self.request_url(query, page))
            .call()
            .map_err(|e| ScanError::Transport(e.to_string()))?;
        match resp.status().as_u16() {
            401 | 403 => return Err(ScanError::Auth),
            s if !(200..300).contains(&s) => {
                return Err(ScanError::Transport(format!("status {s}")));
            }
            _ => {}
        }
        resp.body_mut()
            .read_to_string()
            .map_err(|e| ScanError::Transport(e.to_string()))
    }
}

fn opt_str(v: &Value, key: &str) -> Option<String> {
    v.get(key)
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
}

fn parse_timestamp(s: &str) -> Option<i64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f")
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

/// Maps one raw match object onto a [`DeviceRecord`].
pub fn parse_match(raw: &Value) -> Result<DeviceRecord, ScanError> {
    let ip = raw
        .get("ip_str")
        .and_then(Value::as_str)
        .ok_or_else(|| ScanError::MalformedMatch("missing ip_str".into()))?;
    let ip: IpAddr = ip
        .parse()
        .map_err(|_| ScanError::MalformedMatch(format!("invalid ip_str {ip:?}")))?;
    let port = raw
        .get("port")
        .and_then(Value::as_u64)
        .ok_or_else(|| ScanError::MalformedMatch("missing port".into()))?;
    let port = u16::try_from(port)
        .ok()
        .filter(|&p| p != 0)
        .ok_or_else(|| ScanError::MalformedMatch(format!("port {port} out of range")))?;
    let location = raw.get("location").cloned().unwrap_or(Value::Null);
    Ok(DeviceRecord {
        ip: ip.to_string(),
        port,
        banner: raw.get("data").and_then(Value::as_str).unwrap_or("").to_owned(),
        org: opt_str(raw, "org"),
        os: opt_str(raw, "os"),
        product: opt_str(raw, "product"),
        country: opt_str(&location, "country_name"),
        city: opt_str(&location, "city"),
        observed_at: raw
            .get("timestamp")
            .and_then(Value::as_str)
            .and_then(parse_timestamp),
    })
}

/// Parses one response body into `(total, records)`.
pub fn parse_response(body: &str) -> Result<(u64, Vec<DeviceRecord>), ScanError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| ScanError::MalformedResponse(e.to_string()))?;
    if let Some(err) = v.get("error").and_then(Value::as_str) {
        if err.to_ascii_lowercase().contains("api key") {
            return Err(ScanError::Auth);
        }
        return Err(ScanError::MalformedResponse(err.to_owned()));
    }
    let total = v
        .get("total")
        .and_then(Value::as_u64)
        .ok_or_else(|| ScanError::MalformedResponse("missing total".into()))?;
    let matches = v
        .get("matches")
        .and_then(Value::as_array)
        .ok_or_else(|| ScanError::MalformedResponse("missing matches".into()))?;
    let records = matches.iter().map(parse_match).collect::<Result<Vec<_>, _>>()?;
    Ok((total, records))
}

/// Runs `query`, reading `pages` result pages (at least one).
pub fn query_devices(query: &str, transport: &dyn Transport, pages: u32) -> Result<ScanResult, ScanError> {
    let (total, mut records) = parse_response(&transport.search(query, 1)?)?;
    for page in 2..=pages.max(1) {
        if records.len() as u64 >= total {
            break;
        }
        let (_, more) = parse_response(&transport.search(query, page)?)?;
        if more.is_empty() {
            break;
        }
        records.extend(more);
    }
    Ok(ScanResult {
        query: query.to_owned(),
        total,
        records,
    })
}

pub fn filter_by_port(records: &[DeviceRecord], port: u16) -> Vec<DeviceRecord> {
    records.iter().filter(|r| r.port == port).cloned().collect()
}

pub fn write_device_csv(records: &[DeviceRecord], out: impl Write) -> Result<(), ScanError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["IP", "Data"])?;
    for r in records {
        w.write_record([r.ip.as_str(), r.banner.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_device_csv(records: &[DeviceRecord], path: &Path) -> Result<(), ScanError> {
    write_device_csv(records, File::create(path)?)
}

/// Reads back `(ip, banner)` rows written by [`write_device_csv`].
pub fn read_device_csv(input: impl Read) -> Result<Vec<(String, String)>, ScanError> {
    let mut r = csv::Reader::from_reader(input);
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok((rec[0].to_owned(), rec.get(1).unwrap_or("").to_owned()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket<T> {
    pub value: T,
    pub count: usize,
}

/// Device counts by port, country and organization, each ordered by
/// descending count then value. Missing values group under `""`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureSummary {
    pub port: Vec<Bucket<u16>>,
    pub country: Vec<Bucket<String>>,
    pub org: Vec<Bucket<String>>,
}

fn ordered<T: Ord + Clone>(counts: BTreeMap<T, usize>) -> Vec<Bucket<T>> {
    let mut v: Vec<Bucket<T>> = counts
        .into_iter()
        .map(|(value, count)| Bucket { value, count })
        .collect();
    v.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.value.cmp(&b.value)));
    v
}

pub fn exposure_summary(records: &[DeviceRecord]) -> ExposureSummary {
    let mut port = BTreeMap::new();
    let mut country = BTreeMap::new();
    let mut org = BTreeMap::new();
    for r in records {
        *port.entry(r.port).or_default() += 1;
        *country.entry(r.country.clone().unwrap_or_default()).or_default() += 1;
        *org.entry(r.org.clone().unwrap_or_default()).or_default() += 1;
    }
    ExposureSummary {
        port: ordered(port),
        country: ordered(country),
        org: ordered(org),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    fn rec(ip: &str, port: u16, org: Option<&str>, country: Option<&str>) -> DeviceRecord {
        DeviceRecord {
            ip: ip.into(),
            port,
            banner: String::new(),
            org: org.map(Into::into),
            os: None,
            product: None,
            country: country.map(Into::into),
            city: None,
            observed_at: None,
        }
    }

    #[test]
    fn full_match_maps_every_field() {
        let raw = json!({
            "ip_str": "198.51.100.7", "port": 8080, "data": "HTTP/1.1 200 OK\r\nServer: sensor",
            "org": "Example Telecom", "os": "Linux 3.x", "product": "Pbar-box",
            "location": {"country_name": "Norway", "city": "Bergen"},
            "timestamp": "2024-06-30T12:00:00.123456"
        });
        let r = parse_match(&raw).unwrap();
        assert_eq!(r.ip, "198.51.100.7");
        assert_eq!(r.port, 8080);
        assert_eq!(r.banner, "HTTP/1.1 200 OK\r\nServer: sensor");
        assert_eq!(r.org.as_deref(), Some("Example Telecom"));
        assert_eq!(r.os.as_deref(), Some("Linux 3.x"));
        assert_eq!(r.product.as_deref(), Some("Pbar-box"));
        assert_eq!(r.country.as_deref(), Some("Norway"));
        assert_eq!(r.city.as_deref(), Some("Bergen"));
        assert_eq!(r.observed_at, Some(1_719_748_800));
    }

    #[test]
    fn optional_fields_may_be_absent() {
        let r = parse_match(&json!({"ip_str": "2001:db8::1", "port": 443, "org": null})).unwrap();
        assert_eq!((r.org, r.os, r.country), (None, None, None));
        assert_eq!(r.banner, "");
    }

    #[test]
    fn malformed_matches() {
        for raw in [
            json!({"port": 80}),
            json!({"ip_str": "10.0.0.1"}),
            json!({"ip_str": "999.1.1.1", "port": 80}),
            json!({"ip_str": "10.0.0.1", "port": 70000}),
            json!({"ip_str": "10.0.0.1", "port": 0}),
        ] {
            assert!(matches!(parse_match(&raw), Err(ScanError::MalformedMatch(_))), "{raw}");
        }
    }

    #[test]
    fn response_shapes() {
        assert!(matches!(parse_response("{"), Err(ScanError::MalformedResponse(_))));
        assert!(matches!(parse_response("{\"matches\": []}"), Err(ScanError::MalformedResponse(_))));
        assert!(matches!(parse_response("{\"error\": \"Invalid API key\"}"), Err(ScanError::Auth)));
        assert_eq!(parse_response("{\"total\": 0, \"matches\": []}").unwrap(), (0, vec![]));
    }

    #[test]
    fn request_url_shape() {
        assert_eq!(
            request_url("https://api.example/", "K 1", "port:8080 sensor", 1),
            "https://api.example/shodan/host/search?key=K+1&query=port%3A8080+sensor"
        );
        assert!(request_url("https://api.example", "k", "q", 3).ends_with("&page=3"));
    }

    #[test]
    fn port_filter_keeps_order() {
        let rs = vec![rec("10.0.0.1", 8080, None, None), rec("10.0.0.2", 443, None, None), rec("10.0.0.3", 8080, None, None)];
        let f = filter_by_port(&rs, 8080);
        assert_eq!(f.iter().map(|r| r.ip.as_str()).collect::<Vec<_>>(), ["10.0.0.1", "10.0.0.3"]);
        assert!(filter_by_port(&rs, 22).is_empty());
        let all = filter_by_port(&f, 8080);
        assert_eq!(all, f);
    }

    #[test]
    fn csv_layout() {
        let mut r = rec("1.2.3.4", 80, None, None);
        r.banner = "HTTP/1.1 200 OK".into();
        let mut buf = Vec::new();
        write_device_csv(&[r.clone()], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "IP,Data\n1.2.3.4,HTTP/1.1 200 OK\n");

        r.banner = "line one\nline, two".into();
        let mut buf = Vec::new();
        write_device_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "IP,Data\n1.2.3.4,\"line one\nline, two\"\n");
        assert_eq!(read_device_csv(&buf[..]).unwrap().len(), 1);

        let mut buf = Vec::new();
        write_device_csv(&[], &mut buf).unwrap();
        assert_eq!(buf, b"IP,Data\n");
    }

    #[test]
    fn summary_counts() {
        let rs = vec![
            rec("10.0.0.1", 8080, Some("b"), Some("NO")),
            rec("10.0.0.2", 8080, None, Some("NO")),
            rec("10.0.0.3", 443, Some("a"), None),
            rec("10.0.0.4", 8080, Some("a"), Some("SE")),
        ];
        let s = exposure_summary(&rs);
        assert_eq!(s.port, vec![Bucket { value: 8080, count: 3 }, Bucket { value: 443, count: 1 }]);
        assert_eq!(s.org[0], Bucket { value: "a".to_string(), count: 2 });
        assert!(s.org.contains(&Bucket { value: String::new(), count: 1 }));
        assert_eq!(s.country.iter().map(|b| b.value.as_str()).collect::<Vec<_>>(), ["NO", "", "SE"]);
        assert_eq!(exposure_summary(&[]), ExposureSummary::default());
    }

    proptest! {
        #[test]
        fn csv_round_trip_any_banner(banners in proptest::collection::vec(any::<String>(), 0..6)) {
            let rs: Vec<DeviceRecord> = banners
                .iter()
                .enumerate()
                .map(|(i, b)| DeviceRecord { banner: b.clone(), ..rec(&format!("10.0.0.{i}"), 80, None, None) })
                .collect();
            let mut buf = Vec::new();
            write_device_csv(&rs, &mut buf).unwrap();
            let back = read_device_csv(&buf[..]).unwrap();
            let expected: Vec<(String, String)> = rs.iter().map(|r| (r.ip.clone(), r.banner.clone())).collect();
            prop_assert_eq!(back, expected);
        }

        #[test]
        fn summary_dimensions_sum_to_len(ports in proptest::collection::vec(prop_oneof![Just(80u16), Just(443), Just(8080)], 0..30)) {
            let rs: Vec<DeviceRecord> = ports.iter().enumerate().map(|(i, &p)| rec(&format!("10.0.1.{i}"), p, None, None)).collect();
            let s = exposure_summary(&rs);
            prop_assert_eq!(s.port.iter().map(|b| b.count).sum::<usize>(), rs.len());
            prop_assert_eq!(s.country.iter().map(|b| b.count).sum::<usize>(), rs.len());
            prop_assert_eq!(s.org.iter().map(|b| b.count).sum::<usize>(), rs.len());
            prop_assert_eq!(filter_by_port(&filter_by_port(&rs, 8080), 8080), filter_by_port(&rs, 8080));
        }
    }
}
