use thiserror::Error;
use url::Url;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UrlError {
    #[error("invalid url {input:?}: {reason}")]
    Invalid { input: String, reason: String },
}

fn invalid(input: &str, reason: impl Into<String>) -> UrlError {
    UrlError::Invalid {
        input: input.to_owned(),
        reason: reason.into(),
    }
}

/// Canonical form of an absolute http(s) URL.
///
/// Scheme and host are lowercased, default ports dropped, dot-segments
/// resolved, query pairs sorted bytewise by key (stable for repeated keys)
/// and the fragment removed. Onion hosts pass through lowercased.
pub fn normalize_url(raw: &str) -> Result<String, UrlError> {
    let mut url = Url::parse(raw.trim()).map_err(|e| invalid(raw, e.to_string()))?;
    match url.scheme() {
        "http" | "https" => {}
        other => return Err(invalid(raw, format!("unsupported scheme {other}"))),
    }
    if url.host_str().is_none_or(str::is_empty) {
        return Err(invalid(raw, "missing host"));
    }
    url.set_fragment(None);

    let query = url.query().map(sort_query);
    match query {
        Some(q) if !q.is_empty() => url.set_query(Some(&q)),
        _ => url.set_query(None),
    }
    Ok(url.into())
}

fn sort_query(query: &str) -> String {
    let mut pairs: Vec<&str> = query.split('&').filter(|p| !p.is_empty()).collect();
    pairs.sort_by(|a, b| {
        let ka = a.split('=').next().unwrap_or(a);
        let kb = b.split('=').next().unwrap_or(b);
        ka.as_bytes().cmp(kb.as_bytes())
    });
    pairs.join("&")
}

/// Host of an already-normalized URL.
pub fn host_of(url: &str) -> Option<String> {
    Url::parse(url).ok()?.host_str().map(str::to_owned)
}

/// Last two labels of a host; `a.b.example.com` -> `example.com`.
pub fn registrable_domain(host: &str) -> &str {
    let mut dots = host.rmatch_indices('.');
    match (dots.next(), dots.next()) {
        (Some(_), Some((i, _))) => &host[i + 1..],
        _ => host,
    }
}

/// Resolves `href` against `base` and normalizes the result. Non-http
/// targets (mailto:, javascript:, ...) yield `None`.
pub fn resolve_link(base: &str, href: &str) -> Option<String> {
    let base = Url::parse(base).ok()?;
    let joined = base.join(href.trim()).ok()?;
    normalize_url(joined.as_str()).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn applies_every_rule() {
        assert_eq!(
            normalize_url("HTTP://Example.COM:80/a/../b?b=2&a=1#x").unwrap(),
            "http://example.com/b?a=1&b=2"
        );
        assert_eq!(
            normalize_url("https://Example.com:443").unwrap(),
            "https://example.com/"
        );
        assert_eq!(
            normalize_url("http://example.com:8080/x/./y/").unwrap(),
            "http://example.com:8080/x/y/"
        );
    }

    #[test]
    fn onion_urls_from_the_site_table() {
        assert_eq!(
            normalize_url("http://hansamkt2rr6nfg3.onion/search/?q=hacker&c=59").unwrap(),
            "http://hansamkt2rr6nfg3.onion/search/?c=59&q=hacker"
        );
        assert_eq!(
            normalize_url("http://2ogmrlfzdthnwkez.ONION/info.php").unwrap(),
            "http://2ogmrlfzdthnwkez.onion/info.php"
        );
    }

    #[test]
    fn repeated_keys_keep_relative_order() {
        assert_eq!(
            normalize_url("http://e.test/?b=1&a=2&b=0").unwrap(),
            "http://e.test/?a=2&b=1&b=0"
        );
        assert_eq!(normalize_url("http://e.test/?").unwrap(), "http://e.test/");
    }

    #[test]
    fn rejects_bad_input() {
        for bad in ["/relative/path", "ftp://example.com/", "not a url", "mailto:a@b.c", ""] {
            assert!(normalize_url(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn registrable_domain_takes_last_two_labels() {
        assert_eq!(registrable_domain("forum.hackhound.org"), "hackhound.org");
        assert_eq!(registrable_domain("hackhound.org"), "hackhound.org");
        assert_eq!(registrable_domain("localhost"), "localhost");
    }

    #[test]
    fn resolves_relative_links() {
        let base = "http://site.test/forum/index.html";
        assert_eq!(resolve_link(base, "../about.html").unwrap(), "http://site.test/about.html");
        assert_eq!(resolve_link(base, "t?id=2#top").unwrap(), "http://site.test/forum/t?id=2");
        assert_eq!(resolve_link(base, "mailto:x@y.z"), None);
        assert_eq!(resolve_link(base, "javascript:void(0)"), None);
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(
            host in "[a-zA-Z][a-zA-Z0-9]{0,8}(\\.[a-zA-Z]{2,5}){1,2}",
            segs in proptest::collection::vec("[a-zA-Z0-9._~-]{0,6}", 0..4),
            query in proptest::collection::vec(("[a-z]{1,3}", "[a-z0-9]{0,3}"), 0..4),
            port in prop_oneof![Just(None), Just(Some(80u16)), (1u16..65535).prop_map(Some)],
        ) {
            let mut raw = format!("http://{host}");
            if let Some(p) = port {
                raw.push_str(&format!(":{p}"));
            }
            raw.push('/');
            raw.push_str(&segs.join("/"));
            if !query.is_empty() {
                let q: Vec<String> = query.iter().map(|(k, v)| format!("{k}={v}")).collect();
                raw.push('?');
                raw.push_str(&q.join("&"));
            }
            let once = normalize_url(&raw).unwrap();
            prop_assert_eq!(normalize_url(&once).unwrap(), once);
        }
    }
}
