//! Label taxonomies for the two supported domains and the annotation
//! vocabulary that generated markup is validated against.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Attribute carrying a per-element label.
pub const ELEMENT_ATTR_NAME: &str = "data-type";
/// `name` of the `<meta>` tag carrying the screen-level label.
pub const SCREEN_META_NAME: &str = "screentype";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Slide,
    #[serde(rename = "ui")]
    Ui,
}

impl Domain {
    pub const ALL: [Domain; 2] = [Domain::Slide, Domain::Ui];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Slide => "slide",
            Domain::Ui => "ui",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "slide" | "slides" => Ok(Domain::Slide),
            "ui" | "uis" | "mobile" => Ok(Domain::Ui),
            _ => Err(SchemaError::UnknownDomain(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("unknown screen class {0:?}")]
    UnknownScreenClass(String),
    #[error("unknown domain {0:?}")]
    UnknownDomain(String),
}

const SLIDE_ELEMENTS: [&str; 10] = [
    "title",
    "text box",
    "image",
    "chart",
    "diagram",
    "table",
    "schematic diagram",
    "header",
    "footer",
    "instructor",
];

const UI_ELEMENTS: [&str; 12] = [
    "text",
    "image",
    "text button",
    "icon",
    "input field",
    "switch",
    "checked view",
    "background image",
    "sliding menu",
    "upper taskbar",
    "page indicator",
    "popup window",
];

const SLIDE_SCREENS: [&str; 6] = [
    "psychology",
    "communication",
    "law",
    "public health",
    "computer science",
    "language learning",
];

const UI_SCREENS: [&str; 9] = [
    "list",
    "login",
    "settings",
    "menu",
    "media player",
    "form",
    "profile",
    "tutorial",
    "gallery",
];

// Aliases beyond the canonical names and their plural/space-stripped forms.
const SLIDE_ALIASES: &[(&str, &str)] = &[
    ("figure", "image"),
    ("figures", "image"),
    ("picture", "image"),
    ("pictures", "image"),
    ("photo", "image"),
    ("photos", "image"),
    ("handwritten", "text box"),
    ("text", "text box"),
    ("paragraph", "text box"),
    ("bullets", "text box"),
    ("bulletlist", "text box"),
    ("graph", "chart"),
    ("plot", "chart"),
    ("schematic", "schematic diagram"),
    ("heading", "title"),
];

const UI_ALIASES: &[(&str, &str)] = &[
    ("pageindicator", "page indicator"),
    ("button", "text button"),
    ("buttons", "text button"),
    ("input", "input field"),
    ("textfield", "input field"),
    ("textinput", "input field"),
    ("toggle", "switch"),
    ("checkbox", "checked view"),
    ("checkedtextview", "checked view"),
    ("textview", "text"),
    ("label", "text"),
    ("picture", "image"),
    ("pictures", "image"),
    ("figure", "image"),
    ("figures", "image"),
    ("photo", "image"),
    ("background", "background image"),
    ("drawer", "sliding menu"),
    ("sidemenu", "sliding menu"),
    ("statusbar", "upper taskbar"),
    ("taskbar", "upper taskbar"),
    ("popup", "popup window"),
    ("modal", "popup window"),
    ("dialog", "popup window"),
];

const SCREEN_ALIASES: &[(Domain, &str, &str)] = &[
    (Domain::Ui, "news", "gallery"),
    (Domain::Ui, "setting", "settings"),
    (Domain::Ui, "lists", "list"),
    (Domain::Ui, "signin", "login"),
    (Domain::Ui, "mediaplayer", "media player"),
    (Domain::Slide, "cs", "computer science"),
    (Domain::Slide, "languagelearning", "language learning"),
];

/// One entry of a domain's element taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ElementClass {
    pub domain: Domain,
    pub name: &'static str,
    pub id: u32,
}

impl fmt::Display for ElementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

impl ElementClass {
    pub fn by_id(domain: Domain, id: u32) -> Option<ElementClass> {
        element_names(domain)
            .get((id as usize).checked_sub(1)?)
            .map(|&name| ElementClass { domain, name, id })
    }

    pub fn by_name(domain: Domain, name: &str) -> Option<ElementClass> {
        element_taxonomy(domain).into_iter().find(|c| c.name == name)
    }
}

impl Serialize for ElementClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name)
    }
}

/// Screen-level class (UI design pattern or slide topic). Stored lowercase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScreenClass {
    pub domain: Domain,
    pub name: &'static str,
}

impl fmt::Display for ScreenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

impl Serialize for ScreenClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name)
    }
}

fn element_names(domain: Domain) -> &'static [&'static str] {
    match domain {
        Domain::Slide => &SLIDE_ELEMENTS,
        Domain::Ui => &UI_ELEMENTS,
    }
}

fn screen_names(domain: Domain) -> &'static [&'static str] {
    match domain {
        Domain::Slide => &SLIDE_SCREENS,
        Domain::Ui => &UI_SCREENS,
    }
}

pub fn element_taxonomy(domain: Domain) -> Vec<ElementClass> {
    element_names(domain)
        .iter()
        .enumerate()
        .map(|(i, &name)| ElementClass {
            domain,
            name,
            id: i as u32 + 1,
        })
        .collect()
}

pub fn screen_taxonomy(domain: Domain) -> Vec<ScreenClass> {
    screen_names(domain)
        .iter()
        .map(|&name| ScreenClass { domain, name })
        .collect()
}

/// Lowercase and drop whitespace, hyphens and underscores, so that
/// "Text  Box", "text-box" and "textbox" share one key.
fn squash(raw: &str) -> String {
    raw.chars()
        .filter(|c| !c.is_whitespace() && *c != '-' && *c != '_')
        .flat_map(char::to_lowercase)
        .collect()
}

fn plural(key: &str) -> String {
    if key.ends_with('x') || key.ends_with('h') || key.ends_with('s') {
        format!("{key}es")
    } else {
        format!("{key}s")
    }
}

fn element_aliases(domain: Domain) -> &'static [(&'static str, &'static str)] {
    match domain {
        Domain::Slide => SLIDE_ALIASES,
        Domain::Ui => UI_ALIASES,
    }
}

pub fn canonicalize_label(raw: &str, domain: Domain) -> Result<ElementClass, SchemaError> {
    let key = squash(raw);
    if key.is_empty() {
        return Err(SchemaError::UnknownLabel(raw.to_string()));
    }
    for class in element_taxonomy(domain) {
        let canon = squash(class.name);
        if key == canon || key == plural(&canon) {
            return Ok(class);
        }
    }
    element_aliases(domain)
        .iter()
        .find(|(alias, _)| squash(alias) == key)
        .and_then(|(_, target)| ElementClass::by_name(domain, target))
        .ok_or_else(|| SchemaError::UnknownLabel(raw.to_string()))
}

pub fn canonicalize_screen(raw: &str, domain: Domain) -> Result<ScreenClass, SchemaError> {
    let key = squash(raw);
    if let Some(class) = screen_taxonomy(domain).into_iter().find(|c| squash(c.name) == key) {
        return Ok(class);
    }
    SCREEN_ALIASES
        .iter()
        .find(|(d, alias, _)| *d == domain && *alias == key)
        .and_then(|(_, _, target)| screen_taxonomy(domain).into_iter().find(|c| c.name == *target))
        .ok_or_else(|| SchemaError::UnknownScreenClass(raw.to_string()))
}

/// Machine-readable descriptor of both taxonomies, emitted by `schema describe`.
pub fn describe() -> Value {
    let mut domains = serde_json::Map::new();
    for domain in Domain::ALL {
        let viewport = crate::layout::Viewport::for_domain(domain);
        let aliases: serde_json::Map<String, Value> = element_aliases(domain)
            .iter()
            .map(|(a, t)| (a.to_string(), json!(t)))
            .collect();
        let screen_aliases: serde_json::Map<String, Value> = SCREEN_ALIASES
            .iter()
            .filter(|(d, _, _)| *d == domain)
            .map(|(_, a, t)| (a.to_string(), json!(t)))
            .collect();
        domains.insert(
            domain.as_str().to_string(),
            json!({
                "element_classes": element_taxonomy(domain)
                    .iter()
                    .map(|c| json!({"id": c.id, "name": c.name}))
                    .collect::<Vec<_>>(),
                "screen_classes": screen_names(domain),
                "element_aliases": aliases,
                "screen_aliases": screen_aliases,
                "viewport": {"width": viewport.width, "height": viewport.height},
            }),
        );
    }
    json!({
        "element_attr_name": ELEMENT_ATTR_NAME,
        "screen_meta_name": SCREEN_META_NAME,
        "domains": domains,
    })
}
