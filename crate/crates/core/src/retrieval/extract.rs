//! HTML to visible-text extraction.

use scraper::{Html, Node};

use crate::text;

/// Elements whose whole subtree is dropped.
const DROPPED: &[&str] = &[
    "script", "style", "nav", "header", "footer", "aside", "noscript", "template", "head",
    "svg", "iframe", "object", "canvas",
];

/// Elements that start and end a line of text.
const BLOCKS: &[&str] = &[
    "address", "article", "blockquote", "body", "br", "caption", "dd", "details", "dialog", "div",
    "dl", "dt", "fieldset", "figcaption", "figure", "form", "h1", "h2", "h3", "h4", "h5", "h6",
    "hr", "html", "li", "main", "ol", "p", "pre", "section", "summary", "table", "tbody", "td",
    "tfoot", "th", "thead", "tr", "ul",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    pub title: String,
    pub text: String,
}

/// Reduces an HTML page to its visible text. Lines come from block elements,
/// whitespace inside a line collapses to one space and empty lines vanish.
pub fn extract_text(html: &str) -> Extracted {
    let doc = Html::parse_document(html);
    let title = doc
        .tree
        .root()
        .descendants()
        .find(|n| matches!(n.value(), Node::Element(e) if e.name() == "title"))
        .map(|n| {
            let raw: String = n
                .descendants()
                .filter_map(|d| d.value().as_text().map(|t| t.to_string()))
                .collect();
            text::collapse_whitespace(&raw)
        })
        .unwrap_or_default();

    let mut lines = vec![String::new()];
    walk(doc.tree.root(), &mut lines);
    let text = lines
        .iter()
        .map(|l| text::collapse_whitespace(l))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n");
    Extracted { title, text }
}

/// Strips markup from an HTML fragment and returns it as a single line.
pub fn strip_tags(fragment: &str) -> String {
    let doc = Html::parse_fragment(fragment);
    let mut lines = vec![String::new()];
    walk(doc.tree.root(), &mut lines);
    text::collapse_whitespace(&lines.join(" "))
}

fn walk(node: ego_tree::NodeRef<'_, Node>, lines: &mut Vec<String>) {
    match node.value() {
        Node::Text(t) => {
            if let Some(line) = lines.last_mut() {
                line.push_str(t);
            }
        }
        Node::Element(e) => {
            let name = e.name();
            if DROPPED.contains(&name) {
                return;
            }
            let block = BLOCKS.contains(&name);
            if block {
                lines.push(String::new());
            }
            for child in node.children() {
                walk(child, lines);
            }
            if block {
                lines.push(String::new());
            }
        }
        Node::Document | Node::Fragment => {
            for child in node.children() {
                walk(child, lines);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_between_paragraphs() {
        let out = extract_text("<html><body><p>A</p><script>x()</script><p>B</p></body></html>");
        assert_eq!(out.text, "A\nB");
    }

    #[test]
    fn boilerplate_elements_are_dropped() {
        let html = r#"<html><head><title> Quake
            report </title><style>p{}</style></head>
            <body><header>Site menu</header><nav><a href="/">Home</a></nav>
            <article><h1>Quake hits   city</h1><p>At least <b>12</b> injured.</p></article>
            <aside>Ads</aside><footer>(c) 2024</footer></body></html>"#;
        let out = extract_text(html);
        assert_eq!(out.title, "Quake report");
        assert_eq!(out.text, "Quake hits city\nAt least 12 injured.");
    }

    #[test]
    fn inline_elements_stay_on_one_line_and_br_breaks() {
        let out = extract_text("<div>one <span>two</span><br>three</div>");
        assert_eq!(out.text, "one two\nthree");
    }

    #[test]
    fn entities_are_decoded() {
        let out = extract_text("<p>Tom &amp; Jerry&nbsp;&#8212; live</p>");
        assert_eq!(out.text, "Tom & Jerry \u{2014} live");
    }

    #[test]
    fn empty_or_script_only_page() {
        assert_eq!(extract_text("").text, "");
        assert_eq!(extract_text("<script>var a = '<p>x</p>';</script>").text, "");
    }

    #[test]
    fn strip_tags_on_fragments() {
        assert_eq!(strip_tags("<p>Hello <b>world</b></p><p>again</p>"), "Hello world again");
        assert_eq!(strip_tags("plain text"), "plain text");
    }
}
