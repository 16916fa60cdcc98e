//! RSS 2.0 / Atom ingestion into feed entries, and headline construction.

use chrono::{DateTime, NaiveDate};
use quick_xml::escape::{resolve_html5_entity, resolve_predefined_entity};
use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::retrieval::extract::strip_tags;
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedEntry {
    pub title: String,
    pub summary: Option<String>,
    pub published_date: NaiveDate,
    pub provider: String,
    pub region: String,
    pub link: Option<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed feed at byte {offset}: {message}")]
pub struct FeedError {
    pub offset: u64,
    pub message: String,
}

const ROOTS: &[&str] = &["rss", "feed", "RDF"];

#[derive(Default)]
struct Pending {
    title: Option<String>,
    summary: Option<String>,
    date: Option<String>,
    link: Option<String>,
}

impl Pending {
    fn set(&mut self, field: &str, value: String) {
        let slot = match field {
            "title" => &mut self.title,
            "description" | "summary" => &mut self.summary,
            "pubDate" | "published" | "updated" | "date" | "issued" => &mut self.date,
            "link" | "guid" if self.link.is_none() => &mut self.link,
            _ => return,
        };
        if slot.as_deref().is_none_or(|s| s.trim().is_empty()) {
            *slot = Some(value);
        }
    }
}

fn local(name: &str) -> String {
    name.to_string()
}

fn atom_link(e: &BytesStart<'_>) -> Option<String> {
    let mut href = None;
    let mut rel = None;
    for attr in e.attributes().flatten() {
        let value = attr.normalized_value(XmlVersion::Implicit1_0).ok()?.into_owned();
        match attr.key.local_name().as_ref() {
            "href" => href = Some(value),
            "rel" => rel = Some(value),
            _ => {}
        }
    }
    match rel.as_deref() {
        None | Some("alternate") => href,
        _ => None,
    }
}

/// Parses a feed publication date: RFC 2822, RFC 3339 or a bare ISO date.
pub fn parse_feed_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    DateTime::parse_from_rfc2822(raw)
        .or_else(|_| DateTime::parse_from_rfc3339(raw))
        .map(|d| d.date_naive())
        .ok()
        .or_else(|| NaiveDate::parse_from_str(raw.get(..10)?, "%Y-%m-%d").ok())
}

fn clean(raw: &str) -> String {
    text::nfc(&strip_tags(raw))
}

/// Reads every `<item>` (RSS) or `<entry>` (Atom) of a feed. Titles and
/// summaries are stripped of HTML; entries without a usable title are
/// skipped; entries without a readable date get `today`.
pub fn ingest_rss(
    feed: &[u8],
    provider: &str,
    region: &str,
    today: NaiveDate,
) -> Result<Vec<FeedEntry>, FeedError> {
    let mut reader = Reader::from_reader(feed);
    let cfg = reader.config_mut();
    cfg.check_end_names = true;
    cfg.allow_dangling_amp = true;

    let mut buf = Vec::new();
    let mut stack: Vec<String> = Vec::new();
    let mut saw_root = false;
    let mut item_depth: Option<usize> = None;
    let mut pending = Pending::default();
    let mut field_text = String::new();
    let mut entries = Vec::new();

    let fail = |reader: &Reader<&[u8]>, message: String| FeedError {
        offset: reader.error_position().max(reader.buffer_position()),
        message,
    };

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| fail(&reader, e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) if !saw_root => {
                let name = local(e.local_name().as_ref());
                if !ROOTS.contains(&name.as_str()) {
                    return Err(fail(&reader, format!("unexpected root element <{name}>")));
                }
                saw_root = true;
                if matches!(event, Event::Start(_)) {
                    stack.push(name);
                }
            }
            Event::Start(e) => {
                let name = local(e.local_name().as_ref());
                if item_depth.is_none() && (name == "item" || name == "entry") {
                    item_depth = Some(stack.len());
                    pending = Pending::default();
                } else if item_depth.is_some_and(|d| stack.len() == d + 1) {
                    field_text.clear();
                    if name == "link" {
                        if let Some(href) = atom_link(&e) {
                            pending.set("link", href);
                        }
                    }
                }
                stack.push(name);
            }
            Event::Empty(e) => {
                if item_depth.is_some_and(|d| stack.len() == d + 1)
                    && e.local_name().as_ref() == "link"
                {
                    if let Some(href) = atom_link(&e) {
                        pending.set("link", href);
                    }
                }
            }
            Event::End(_) => {
                let name = stack.pop().unwrap_or_default();
                match item_depth {
                    Some(d) if stack.len() == d => {
                        item_depth = None;
                        let p = std::mem::take(&mut pending);
                        let title = p.title.as_deref().map(clean).unwrap_or_default();
                        if title.is_empty() {
                            tracing::warn!("{provider}: skipping feed item without title");
                            continue;
                        }
                        let summary = p.summary.as_deref().map(clean).filter(|s| !s.is_empty());
                        let published_date = match p.date.as_deref().and_then(parse_feed_date) {
                            Some(d) => d,
                            None => {
                                tracing::warn!("{provider}: no usable date for {title:?}; using {today}");
                                today
                            }
                        };
                        entries.push(FeedEntry {
                            title,
                            summary,
                            published_date,
                            provider: provider.to_string(),
                            region: region.to_string(),
                            link: p.link.map(|l| l.trim().to_string()).filter(|l| !l.is_empty()),
                        });
                    }
                    Some(d) if stack.len() == d + 1 => {
                        pending.set(&name, std::mem::take(&mut field_text));
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                let content = t.xml10_content();
                if !saw_root && !content.trim().is_empty() {
                    return Err(fail(&reader, "text outside the root element".into()));
                }
                if item_depth.is_some() {
                    field_text.push_str(&content);
                }
            }
            Event::CData(t) => {
                if item_depth.is_some() {
                    field_text.push_str(&t.xml10_content());
                }
            }
            Event::GeneralRef(r) => {
                if item_depth.is_some() {
                    let name = r.xml10_content();
                    match r.resolve_char_ref() {
                        Ok(Some(c)) => field_text.push(c),
                        _ => match resolve_predefined_entity(&name).or_else(|| resolve_html5_entity(&name)) {
                            Some(s) => field_text.push_str(s),
                            None => {
                                field_text.push('&');
                                field_text.push_str(&name);
                                field_text.push(';');
                            }
                        },
                    }
                }
            }
            Event::Eof => {
                if !stack.is_empty() {
                    return Err(FeedError {
                        offset: reader.buffer_position(),
                        message: format!("unexpected end of document inside <{}>", stack.join("><")),
                    });
                }
                break;
            }
            _ => {}
        }
        buf.clear();
    }
    Ok(entries)
}

/// Headline text for a feed entry: the title alone, or `title. summary`
/// when a summary exists, without doubling the title's own terminal mark.
pub fn make_headline(entry: &FeedEntry) -> String {
    let title = entry.title.trim();
    match entry.summary.as_deref().map(str::trim).filter(|s| !s.is_empty()) {
        None => title.to_string(),
        Some(summary) => {
            let sep = if title.ends_with(['.', '!', '?', '…']) { " " } else { ". " };
            format!("{title}{sep}{summary}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn today() -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 8, 10).unwrap()
    }

    fn entry(title: &str, summary: Option<&str>) -> FeedEntry {
        FeedEntry {
            title: title.into(),
            summary: summary.map(String::from),
            published_date: today(),
            provider: "p".into(),
            region: "r".into(),
            link: None,
        }
    }

    #[test]
    fn rss_title_and_description() {
        let xml = br#"<?xml version="1.0"?>
            <rss version="2.0"><channel><title>Feed</title>
            <item><title>T</title><description>S</description>
                  <pubDate>Mon, 05 Aug 2024 09:30:00 GMT</pubDate>
                  <link>https://news.example/t</link></item>
            </channel></rss>"#;
        let out = ingest_rss(xml, "Example", "GB", today()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].title, "T");
        assert_eq!(out[0].summary.as_deref(), Some("S"));
        assert_eq!(out[0].published_date, NaiveDate::from_ymd_opt(2024, 8, 5).unwrap());
        assert_eq!(out[0].link.as_deref(), Some("https://news.example/t"));
        assert_eq!(make_headline(&out[0]), "T. S");
    }

    #[test]
    fn missing_description_and_date() {
        let xml = b"<rss><channel><item><title>Only a title</title></item></channel></rss>";
        let out = ingest_rss(xml, "p", "r", today()).unwrap();
        assert_eq!(out[0].summary, None);
        assert_eq!(out[0].published_date, today());
        assert_eq!(make_headline(&out[0]), "Only a title");
    }

    #[test]
    fn html_in_description_is_stripped() {
        let xml = br#"<rss><channel><item><title>A &amp; B</title>
            <description><![CDATA[<p>Lots of <b>rain</b></p><img src="x.png"/>]]></description>
            </item><item><title>C</title><description>&lt;p&gt;escaped &amp;nbsp;html&lt;/p&gt;</description></item>
            </channel></rss>"#;
        let out = ingest_rss(xml, "p", "r", today()).unwrap();
        assert_eq!(out[0].title, "A & B");
        assert_eq!(out[0].summary.as_deref(), Some("Lots of rain"));
        assert_eq!(out[1].summary.as_deref(), Some("escaped html"));
    }

    #[test]
    fn atom_entries() {
        let xml = br#"<feed xmlns="http://www.w3.org/2005/Atom">
            <entry><title type="html">Quake hits &lt;b&gt;city&lt;/b&gt;</title>
              <link rel="alternate" href="https://a.example/q"/>
              <summary>Dozens hurt</summary><updated>2024-08-03T12:00:00Z</updated></entry>
            </feed>"#;
        let out = ingest_rss(xml, "p", "r", today()).unwrap();
        assert_eq!(out[0].title, "Quake hits city");
        assert_eq!(out[0].link.as_deref(), Some("https://a.example/q"));
        assert_eq!(out[0].published_date, NaiveDate::from_ymd_opt(2024, 8, 3).unwrap());
    }

    #[test]
    fn empty_documents() {
        assert!(ingest_rss(b"", "p", "r", today()).unwrap().is_empty());
        assert!(ingest_rss(b"<rss><channel></channel></rss>", "p", "r", today()).unwrap().is_empty());
    }

    #[test]
    fn malformed_xml_reports_offset() {
        let err = ingest_rss(b"<rss><channel><item><title>x</item></channel></rss>", "p", "r", today()).unwrap_err();
        assert!(err.offset > 0, "{err}");
        let err = ingest_rss(b"<rss><channel><item>", "p", "r", today()).unwrap_err();
        assert_eq!(err.offset, 20);
        assert!(ingest_rss(b"just some text", "p", "r", today()).is_err());
        assert!(ingest_rss(b"<html><body/></html>", "p", "r", today()).is_err());
    }

    #[test]
    fn headline_punctuation() {
        assert_eq!(make_headline(&entry("T", None)), "T");
        assert_eq!(make_headline(&entry("T.", Some("S"))), "T. S");
        assert_eq!(make_headline(&entry("T", Some("S"))), "T. S");
        assert_eq!(make_headline(&entry("Why?", Some("S"))), "Why? S");
        assert_eq!(make_headline(&entry("T", Some("   "))), "T");
    }

    #[test]
    fn date_formats() {
        assert_eq!(parse_feed_date("2024-08-05"), NaiveDate::from_ymd_opt(2024, 8, 5));
        assert_eq!(parse_feed_date("Tue, 06 Aug 2024 23:10:00 +0600"), NaiveDate::from_ymd_opt(2024, 8, 6));
        assert_eq!(parse_feed_date("yesterday"), None);
    }
}
