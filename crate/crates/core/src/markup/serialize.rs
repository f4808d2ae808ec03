use super::style::serialize_style;
use super::{AnnotatedDocument, Element, Node, Tag};

fn escape_text(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\u{a0}' => out.push_str("&nbsp;"),
            c => out.push(c),
        }
    }
}

fn escape_attr(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '"' => out.push_str("&quot;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            c => out.push(c),
        }
    }
}

fn write_element(e: &Element, depth: usize, out: &mut String) {
    out.push('<');
    out.push_str(e.tag.name());
    // BTreeMap iteration is alphabetical; `style` is slotted into that order.
    let style = (!e.style.is_empty()).then(|| serialize_style(&e.style));
    let mut style_written = style.is_none();
    for (k, v) in &e.attrs {
        if !style_written && k.as_str() > "style" {
            write_attr("style", style.as_deref().unwrap_or(""), out);
            style_written = true;
        }
        write_attr(k, v, out);
    }
    if !style_written {
        write_attr("style", style.as_deref().unwrap_or(""), out);
    }
    out.push('>');
    if e.tag.is_void() {
        return;
    }
    if e.tag == Tag::Style {
        // Raw text; the parser guarantees it holds no `</style`.
        for c in &e.children {
            if let Node::Text(css) = c {
                out.push_str(css);
            }
        }
    } else {
        let has_text = e.children.iter().any(|c| matches!(c, Node::Text(_)));
        for (i, c) in e.children.iter().enumerate() {
            if has_text && i > 0 {
                out.push(' ');
            }
            match c {
                Node::Text(t) => escape_text(t, out),
                Node::Element(child) => {
                    if !has_text {
                        out.push('\n');
                        out.push_str(&"  ".repeat(depth + 1));
                    }
                    write_element(child, depth + 1, out);
                }
            }
        }
        if !has_text && !e.children.is_empty() {
            out.push('\n');
            out.push_str(&"  ".repeat(depth));
        }
    }
    out.push_str("</");
    out.push_str(e.tag.name());
    out.push('>');
}

fn write_attr(k: &str, v: &str, out: &mut String) {
    out.push(' ');
    out.push_str(k);
    out.push_str("=\"");
    escape_attr(v, out);
    out.push('"');
}

/// Canonical form: alphabetical attributes, normalized inline styles, two-space
/// indentation for element-only content.
pub fn serialize_document(doc: &AnnotatedDocument) -> String {
    let mut out = String::from("<!DOCTYPE html>\n");
    write_element(&doc.root, 0, &mut out);
    out.push('\n');
    out
}
