//! Inline-style dialect: the CSS properties and value forms the layout engine
//! understands. Everything else is dropped with a warning.

use std::fmt;

use serde::Serialize;

/// Pixels per point (96 dpi convention).
pub const PX_PER_PT: f64 = 4.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Property {
    Display,
    FlexDirection,
    Position,
    Left,
    Top,
    Right,
    Bottom,
    Width,
    Height,
    MarginTop,
    MarginRight,
    MarginBottom,
    MarginLeft,
    PaddingTop,
    PaddingRight,
    PaddingBottom,
    PaddingLeft,
    BackgroundColor,
    BackgroundImage,
    FontSize,
    Color,
    Gap,
    JustifyContent,
    AlignItems,
}

impl Property {
    pub fn name(self) -> &'static str {
        use Property::*;
        match self {
            Display => "display",
            FlexDirection => "flex-direction",
            Position => "position",
            Left => "left",
            Top => "top",
            Right => "right",
            Bottom => "bottom",
            Width => "width",
            Height => "height",
            MarginTop => "margin-top",
            MarginRight => "margin-right",
            MarginBottom => "margin-bottom",
            MarginLeft => "margin-left",
            PaddingTop => "padding-top",
            PaddingRight => "padding-right",
            PaddingBottom => "padding-bottom",
            PaddingLeft => "padding-left",
            BackgroundColor => "background-color",
            BackgroundImage => "background-image",
            FontSize => "font-size",
            Color => "color",
            Gap => "gap",
            JustifyContent => "justify-content",
            AlignItems => "align-items",
        }
    }

    pub fn from_name(name: &str) -> Option<Property> {
        use Property::*;
        Some(match name {
            "display" => Display,
            "flex-direction" => FlexDirection,
            "position" => Position,
            "left" => Left,
            "top" => Top,
            "right" => Right,
            "bottom" => Bottom,
            "width" => Width,
            "height" => Height,
            "margin-top" => MarginTop,
            "margin-right" => MarginRight,
            "margin-bottom" => MarginBottom,
            "margin-left" => MarginLeft,
            "padding-top" => PaddingTop,
            "padding-right" => PaddingRight,
            "padding-bottom" => PaddingBottom,
            "padding-left" => PaddingLeft,
            "background-color" => BackgroundColor,
            "background-image" => BackgroundImage,
            "font-size" => FontSize,
            "color" => Color,
            "gap" => Gap,
            "justify-content" => JustifyContent,
            "align-items" => AlignItems,
            _ => return None,
        })
    }

    fn is_offset(self) -> bool {
        matches!(
            self,
            Property::Left | Property::Top | Property::Right | Property::Bottom
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Length {
    Px(f64),
    Pt(f64),
    Percent(f64),
    Auto,
}

impl Length {
    /// Resolves to px; percentages against `basis`, `None` for `auto` or for a
    /// percentage without a definite basis.
    pub fn to_px(self, basis: Option<f64>) -> Option<f64> {
        match self {
            Length::Px(v) => Some(v),
            Length::Pt(v) => Some(v * PX_PER_PT),
            Length::Percent(p) => basis.map(|b| b * p / 100.0),
            Length::Auto => None,
        }
    }

    fn is_negative(self) -> bool {
        match self {
            Length::Px(v) | Length::Pt(v) | Length::Percent(v) => v < 0.0,
            Length::Auto => false,
        }
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Length::Px(v) => write!(f, "{v}px"),
            Length::Pt(v) => write!(f, "{v}pt"),
            Length::Percent(v) => write!(f, "{v}%"),
            Length::Auto => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Rgba {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub a: u8,
}

impl Rgba {
    pub const BLACK: Rgba = Rgba::opaque(0, 0, 0);
    pub const WHITE: Rgba = Rgba::opaque(255, 255, 255);

    pub const fn opaque(r: u8, g: u8, b: u8) -> Rgba {
        Rgba { r, g, b, a: 255 }
    }

    pub fn to_array(self) -> [u8; 4] {
        [self.r, self.g, self.b, self.a]
    }
}

impl fmt::Display for Rgba {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.r, self.g, self.b)?;
        if self.a != 255 {
            write!(f, "{:02x}", self.a)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Keyword {
    Block,
    Inline,
    InlineBlock,
    Flex,
    None,
    Row,
    Column,
    Static,
    Relative,
    Absolute,
    FlexStart,
    FlexEnd,
    Center,
    SpaceBetween,
    SpaceAround,
    SpaceEvenly,
    Stretch,
}

impl Keyword {
    pub fn name(self) -> &'static str {
        use Keyword::*;
        match self {
            Block => "block",
            Inline => "inline",
            InlineBlock => "inline-block",
            Flex => "flex",
            None => "none",
            Row => "row",
            Column => "column",
            Static => "static",
            Relative => "relative",
            Absolute => "absolute",
            FlexStart => "flex-start",
            FlexEnd => "flex-end",
            Center => "center",
            SpaceBetween => "space-between",
            SpaceAround => "space-around",
            SpaceEvenly => "space-evenly",
            Stretch => "stretch",
        }
    }

    fn allowed(property: Property) -> &'static [Keyword] {
        use Keyword::*;
        match property {
            Property::Display => &[Block, Inline, InlineBlock, Flex, None],
            Property::FlexDirection => &[Row, Column],
            Property::Position => &[Static, Relative, Absolute],
            Property::JustifyContent => &[FlexStart, FlexEnd, Center, SpaceBetween, SpaceAround, SpaceEvenly],
            Property::AlignItems => &[Stretch, FlexStart, FlexEnd, Center],
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Value {
    Length(Length),
    Keyword(Keyword),
    Color(Rgba),
    Url(String),
    NoImage,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Length(l) => l.fmt(f),
            Value::Keyword(k) => f.write_str(k.name()),
            Value::Color(c) => c.fmt(f),
            Value::Url(u) => write!(f, "url({u})"),
            Value::NoImage => f.write_str("none"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StyleDecl {
    pub property: Property,
    pub value: Value,
}

impl StyleDecl {
    pub fn new(property: Property, value: Value) -> StyleDecl {
        StyleDecl { property, value }
    }
}

impl fmt::Display for StyleDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.property.name(), self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StyleWarning {
    UnknownProperty(String),
    InvalidValue { property: String, value: String },
}

pub fn serialize_style(decls: &[StyleDecl]) -> String {
    decls.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Parses a `style="..."` attribute value.
pub fn parse_inline_style(text: &str) -> (Vec<StyleDecl>, Vec<StyleWarning>) {
    let mut decls = Vec::new();
    let mut warnings = Vec::new();
    for chunk in split_declarations(text) {
        let Some((name, value)) = chunk.split_once(':') else {
            if !chunk.trim().is_empty() {
                warnings.push(StyleWarning::UnknownProperty(chunk.trim().to_string()));
            }
            continue;
        };
        let name = name.trim().to_ascii_lowercase();
        let value = value.trim();
        let value = value.strip_suffix("!important").map(str::trim_end).unwrap_or(value);
        match expand(&name, value) {
            Ok(mut expanded) => decls.append(&mut expanded),
            Err(w) => warnings.push(w),
        }
    }
    (decls, warnings)
}

// Semicolons inside parentheses (data: urls) do not end a declaration.
fn split_declarations(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ';' if depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

fn expand(name: &str, value: &str) -> Result<Vec<StyleDecl>, StyleWarning> {
    let invalid = || StyleWarning::InvalidValue {
        property: name.to_string(),
        value: value.to_string(),
    };
    match name {
        "margin" | "padding" => {
            let parts: Vec<&str> = value.split_whitespace().collect();
            let (t, r, b, l) = match parts.as_slice() {
                [a] => (*a, *a, *a, *a),
                [v, h] => (*v, *h, *v, *h),
                [t, h, b] => (*t, *h, *b, *h),
                [t, r, b, l] => (*t, *r, *b, *l),
                _ => return Err(invalid()),
            };
            let props = if name == "margin" {
                [
                    Property::MarginTop,
                    Property::MarginRight,
                    Property::MarginBottom,
                    Property::MarginLeft,
                ]
            } else {
                [
                    Property::PaddingTop,
                    Property::PaddingRight,
                    Property::PaddingBottom,
                    Property::PaddingLeft,
                ]
            };
            props
                .iter()
                .zip([t, r, b, l])
                .map(|(&p, v)| parse_value(p, v).map(|val| StyleDecl::new(p, val)))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(invalid)
        }
        "background" => {
            if let Some(url) = parse_url(value) {
                Ok(vec![StyleDecl::new(Property::BackgroundImage, url)])
            } else if let Some(c) = parse_color(value) {
                Ok(vec![StyleDecl::new(Property::BackgroundColor, Value::Color(c))])
            } else {
                Err(invalid())
            }
        }
        _ => {
            let property = Property::from_name(name).ok_or_else(|| StyleWarning::UnknownProperty(name.into()))?;
            let v = parse_value(property, value).ok_or_else(invalid)?;
            Ok(vec![StyleDecl::new(property, v)])
        }
    }
}

pub fn parse_value(property: Property, raw: &str) -> Option<Value> {
    let raw = raw.trim();
    let lower = raw.to_ascii_lowercase();
    match property {
        Property::Display
        | Property::FlexDirection
        | Property::Position
        | Property::JustifyContent
        | Property::AlignItems => {
            let lower = match lower.as_str() {
                "start" => "flex-start",
                "end" => "flex-end",
                other => other,
            };
            Keyword::allowed(property)
                .iter()
                .find(|k| k.name() == lower)
                .map(|&k| Value::Keyword(k))
        }
        Property::BackgroundColor | Property::Color => parse_color(&lower).map(Value::Color),
        Property::BackgroundImage => {
            if lower == "none" {
                Some(Value::NoImage)
            } else {
                parse_url(raw)
            }
        }
        _ => {
            let len = parse_length(&lower)?;
            let auto_ok = matches!(
                property,
                Property::Width
                    | Property::Height
                    | Property::Left
                    | Property::Top
                    | Property::Right
                    | Property::Bottom
            ) || property.name().starts_with("margin");
            if len == Length::Auto && !auto_ok {
                return None;
            }
            if len.is_negative() && !property.is_offset() {
                return None;
            }
            Some(Value::Length(len))
        }
    }
}

pub fn parse_length(raw: &str) -> Option<Length> {
    let raw = raw.trim();
    if raw == "auto" {
        return Some(Length::Auto);
    }
    let (num, unit) = if let Some(n) = raw.strip_suffix("px") {
        (n, "px")
    } else if let Some(n) = raw.strip_suffix("pt") {
        (n, "pt")
    } else if let Some(n) = raw.strip_suffix('%') {
        (n, "%")
    } else {
        (raw, "")
    };
    let v: f64 = num.trim().parse().ok()?;
    if !v.is_finite() {
        return None;
    }
    match unit {
        "px" => Some(Length::Px(v)),
        "pt" => Some(Length::Pt(v)),
        "%" => Some(Length::Percent(v)),
        _ if v == 0.0 => Some(Length::Px(0.0)),
        _ => None,
    }
}

fn parse_url(raw: &str) -> Option<Value> {
    let inner = raw.trim().strip_prefix("url(")?.strip_suffix(')')?.trim();
    let inner = inner
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .or_else(|| inner.strip_prefix('\'').and_then(|s| s.strip_suffix('\'')))
        .unwrap_or(inner);
    if inner.is_empty() || inner.contains([')', '(', '"', '\'']) {
        return None;
    }
    Some(Value::Url(inner.to_string()))
}

const NAMED_COLORS: &[(&str, Rgba)] = &[
    ("black", Rgba::opaque(0, 0, 0)),
    ("white", Rgba::opaque(255, 255, 255)),
    ("red", Rgba::opaque(255, 0, 0)),
    ("green", Rgba::opaque(0, 128, 0)),
    ("blue", Rgba::opaque(0, 0, 255)),
    ("gray", Rgba::opaque(128, 128, 128)),
    ("grey", Rgba::opaque(128, 128, 128)),
    ("lightgray", Rgba::opaque(211, 211, 211)),
    ("lightgrey", Rgba::opaque(211, 211, 211)),
    ("darkgray", Rgba::opaque(169, 169, 169)),
    ("silver", Rgba::opaque(192, 192, 192)),
    ("yellow", Rgba::opaque(255, 255, 0)),
    ("orange", Rgba::opaque(255, 165, 0)),
    ("purple", Rgba::opaque(128, 0, 128)),
    ("navy", Rgba::opaque(0, 0, 128)),
    ("teal", Rgba::opaque(0, 128, 128)),
    ("maroon", Rgba::opaque(128, 0, 0)),
    ("olive", Rgba::opaque(128, 128, 0)),
    ("pink", Rgba::opaque(255, 192, 203)),
    ("brown", Rgba::opaque(165, 42, 42)),
    ("whitesmoke", Rgba::opaque(245, 245, 245)),
    ("transparent", Rgba { r: 0, g: 0, b: 0, a: 0 }),
];

pub fn parse_color(raw: &str) -> Option<Rgba> {
    let raw = raw.trim().to_ascii_lowercase();
    if let Some(hex) = raw.strip_prefix('#') {
        if !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return None;
        }
        let nib = |i: usize| u8::from_str_radix(&hex[i..=i], 16).ok().map(|v| v * 17);
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).ok();
        return match hex.len() {
            3 => Some(Rgba::opaque(nib(0)?, nib(1)?, nib(2)?)),
            4 => Some(Rgba {
                r: nib(0)?,
                g: nib(1)?,
                b: nib(2)?,
                a: nib(3)?,
            }),
            6 => Some(Rgba::opaque(byte(0)?, byte(2)?, byte(4)?)),
            8 => Some(Rgba {
                r: byte(0)?,
                g: byte(2)?,
                b: byte(4)?,
                a: byte(6)?,
            }),
            _ => None,
        };
    }
    let func = raw
        .strip_prefix("rgba(")
        .or_else(|| raw.strip_prefix("rgb("))
        .and_then(|s| s.strip_suffix(')'));
    if let Some(args) = func {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        let channel = |s: &str| -> Option<u8> {
            let v: f64 = s.parse().ok()?;
            (v.is_finite() && (0.0..=255.0).contains(&v)).then(|| v.round() as u8)
        };
        return match parts.as_slice() {
            [r, g, b] => Some(Rgba::opaque(channel(r)?, channel(g)?, channel(b)?)),
            [r, g, b, a] => {
                let a: f64 = a.parse().ok()?;
                if !(0.0..=1.0).contains(&a) {
                    return None;
                }
                Some(Rgba {
                    r: channel(r)?,
                    g: channel(g)?,
                    b: channel(b)?,
                    a: (a * 255.0).round() as u8,
                })
            }
            _ => None,
        };
    }
    NAMED_COLORS.iter().find(|(n, _)| *n == raw).map(|(_, c)| *c)
}
