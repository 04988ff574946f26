//! Tolerant HTML scan: anchor hrefs and visible text. Script and style
//! bodies are skipped, malformed markup is read past rather than rejected.

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Extracted {
    pub links: Vec<String>,
    pub text: String,
}

pub fn extract(html: &str) -> Extracted {
    let mut out = Extracted::default();
    let mut text = String::new();
    let bytes = html.as_bytes();
    let mut i = 0;

    while i < bytes.len() {
        if bytes[i] != b'<' {
            let end = html[i..].find('<').map_or(html.len(), |o| i + o);
            text.push_str(&decode_entities(&html[i..end]));
            text.push(' ');
            i = end;
            continue;
        }
        if html[i..].starts_with("<!--") {
            i = html[i..].find("-->").map_or(html.len(), |o| i + o + 3);
            continue;
        }
        let Some(close) = find_tag_end(html, i + 1) else {
            break;
        };
        let tag = &html[i + 1..close];
        i = close + 1;

        let name = tag_name(tag);
        match name.as_str() {
            "script" | "style" => {
                let end_tag = format!("</{name}");
                i = find_ci(html, i, &end_tag).map_or(html.len(), |o| {
                    html[o..].find('>').map_or(html.len(), |g| o + g + 1)
                });
            }
            "a" => {
                if let Some(href) = attr(tag, "href") {
                    let href = decode_entities(&href);
                    if !href.trim().is_empty() {
                        out.links.push(href.trim().to_owned());
                    }
                }
            }
            _ => {}
        }
    }

    out.text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    out
}

/// Index of the `>` that closes a tag, skipping quoted attribute values.
fn find_tag_end(html: &str, from: usize) -> Option<usize> {
    let mut quote: Option<u8> = None;
    for (off, &b) in html.as_bytes()[from..].iter().enumerate() {
        match (quote, b) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, b'"' | b'\'') => quote = Some(b),
            (None, b'>') => return Some(from + off),
            _ => {}
        }
    }
    None
}

fn tag_name(tag: &str) -> String {
    tag.trim_start()
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
}

fn find_ci(haystack: &str, from: usize, needle: &str) -> Option<usize> {
    let hay = haystack.as_bytes();
    let needle = needle.as_bytes();
    (from..hay.len().saturating_sub(needle.len() - 1))
        .find(|&s| hay[s..s + needle.len()].eq_ignore_ascii_case(needle))
}

fn attr(tag: &str, wanted: &str) -> Option<String> {
    let bytes = tag.as_bytes();
    let mut i = tag_name(tag).len();
    while i < bytes.len() {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'/') {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'=' && bytes[i] != b'/' {
            i += 1;
        }
        let name = &tag[start..i];
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let mut value = String::new();
        if i < bytes.len() && bytes[i] == b'=' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'"' || bytes[i] == b'\'') {
                let q = bytes[i];
                let vstart = i + 1;
                let vend = tag[vstart..].find(q as char).map_or(tag.len(), |o| vstart + o);
                value = tag[vstart..vend].to_owned();
                i = vend + 1;
            } else {
                let vstart = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                value = tag[vstart..i].to_owned();
            }
        }
        if name.eq_ignore_ascii_case(wanted) {
            return Some(value);
        }
        if start == i {
            i += 1;
        }
    }
    None
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_owned();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let Some(semi) = rest[..rest.len().min(12)].find(';') else {
            out.push('&');
            rest = &rest[1..];
            continue;
        };
        let entity = &rest[1..semi];
        let decoded = match entity {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" | "#39" => Some('\''),
            "nbsp" => Some(' '),
            e if e.starts_with("#x") || e.starts_with("#X") => {
                u32::from_str_radix(&e[2..], 16).ok().and_then(char::from_u32)
            }
            e if e.starts_with('#') => e[1..].parse().ok().and_then(char::from_u32),
            _ => None,
        };
        match decoded {
            Some(c) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
