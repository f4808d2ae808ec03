//! Deterministic box layout for the markup dialect.
//!
//! Text uses fixed metrics: every glyph (and space) advances `0.6 × font-size`,
//! lines are `1.2 × font-size` tall and wrap greedily at word boundaries.
//! There are no user-agent default margins or font sizes beyond 16px text.
//! Inline-level boxes shrink-wrap but are stacked like blocks; there is no
//! inline formatting context.

mod raster;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::markup::{AnnotatedDocument, Element, Length, Node, NodePath, Property, Rgba, Tag, Value};
use crate::schema::{Domain, ElementClass};

pub(crate) use raster::pixel_edges;
pub use raster::{rasterize, RasterError, RasterImage};

pub const GLYPH_ADVANCE_EM: f64 = 0.6;
pub const LINE_HEIGHT_EM: f64 = 1.2;
pub const DEFAULT_FONT_PX: f64 = 16.0;
/// Width cap for images whose dimensions were never declared.
pub const AUTO_FIT_MAX_W: f64 = 200.0;
/// Marker value of an img `width`/`height` attribute meaning "fit to container".
pub const AUTO_FIT: &str = "auto-fit";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Viewport {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("viewport dimensions must be positive, got {0}x{1}")]
pub struct InvalidViewport(pub u32, pub u32);

impl Viewport {
    pub fn new(width: u32, height: u32) -> Result<Viewport, InvalidViewport> {
        if width == 0 || height == 0 {
            return Err(InvalidViewport(width, height));
        }
        Ok(Viewport { width, height })
    }

    pub fn for_domain(domain: Domain) -> Viewport {
        match domain {
            Domain::Slide => Viewport {
                width: 1280,
                height: 720,
            },
            Domain::Ui => Viewport {
                width: 628,
                height: 1118,
            },
        }
    }

    fn rect(self) -> Rect {
        Rect {
            x: 0.0,
            y: 0.0,
            w: self.width as f64,
            h: self.height as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn contains(&self, other: &Rect) -> bool {
        const EPS: f64 = 1e-6;
        other.x >= self.x - EPS
            && other.y >= self.y - EPS
            && other.x + other.w <= self.x + self.w + EPS
            && other.y + other.h <= self.y + self.h + EPS
    }
}

/// Integer pixel rectangle as exported in datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl PixelBox {
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn intersection_area(&self, other: &PixelBox) -> u64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = (self.x + self.w).min(other.x + other.w);
        let y1 = (self.y + self.h).min(other.y + other.h);
        if x1 <= x0 || y1 <= y0 {
            0
        } else {
            (x1 - x0) as u64 * (y1 - y0) as u64
        }
    }

    pub fn as_array(&self) -> [u32; 4] {
        [self.x, self.y, self.w, self.h]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Static,
    Relative,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutNode {
    /// Border box in viewport px, before clipping. The dialect has no
    /// borders, so this is also the padding box.
    pub rect: Rect,
    pub rendered: bool,
    pub is_text: bool,
    pub position: Position,
    pub font_size: f64,
    pub color: Rgba,
    /// Line boxes of a text node.
    pub lines: Vec<Rect>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutTree {
    pub viewport: Viewport,
    pub nodes: BTreeMap<NodePath, LayoutNode>,
    pub overflow: BTreeSet<NodePath>,
    pub warnings: Vec<String>,
}

impl LayoutTree {
    pub fn rect(&self, path: &NodePath) -> Option<Rect> {
        self.nodes.get(path).map(|n| n.rect)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Display {
    Block,
    InlineBlock,
    Flex,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Size {
    Auto,
    Len(Length),
    AutoFit,
}

#[derive(Debug, Clone)]
struct Computed {
    display: Display,
    column: bool,
    position: Position,
    offsets: [Option<Length>; 4], // left, top, right, bottom
    width: Size,
    height: Size,
    margin: [Length; 4], // top, right, bottom, left
    padding: [Length; 4],
    font_size: f64,
    color: Rgba,
    gap: f64,
    justify: crate::markup::style::Keyword,
    align: crate::markup::style::Keyword,
}

fn attr_size(raw: Option<&str>) -> Size {
    let Some(raw) = raw.map(str::trim) else {
        return Size::Auto;
    };
    if raw.eq_ignore_ascii_case(AUTO_FIT) {
        return Size::AutoFit;
    }
    let raw = raw.to_ascii_lowercase();
    let parsed = crate::markup::style::parse_length(&raw).or_else(|| {
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v >= 0.0)
            .map(Length::Px)
    });
    match parsed {
        Some(Length::Auto) | None => Size::Auto,
        Some(l) => Size::Len(l),
    }
}

impl Computed {
    fn resolve(e: &Element, parent: Option<&Computed>) -> Computed {
        use crate::markup::style::Keyword as K;
        let inherited_font = parent.map_or(DEFAULT_FONT_PX, |p| p.font_size);
        let display = match e.style_value(Property::Display) {
            Some(Value::Keyword(K::None)) => Display::None,
            Some(Value::Keyword(K::Flex)) => Display::Flex,
            Some(Value::Keyword(K::Block)) => Display::Block,
            Some(Value::Keyword(K::InlineBlock | K::Inline)) => Display::InlineBlock,
            _ => match e.tag {
                Tag::Head | Tag::Meta | Tag::Style => Display::None,
                Tag::Span | Tag::Img | Tag::Button | Tag::Input => Display::InlineBlock,
                _ => Display::Block,
            },
        };
        let len = |p: Property| match e.style_value(p) {
            Some(Value::Length(l)) => Some(*l),
            _ => None,
        };
        let size = |p: Property, attr: &str| match len(p) {
            Some(Length::Auto) => Size::Auto,
            Some(l) => Size::Len(l),
            None if e.tag == Tag::Img => attr_size(e.attr(attr)),
            None => Size::Auto,
        };
        let mut width = size(Property::Width, "width");
        let mut height = size(Property::Height, "height");
        if e.tag == Tag::Img && width == Size::Auto && height == Size::Auto {
            width = Size::AutoFit;
            height = Size::AutoFit;
        }
        let font_size = match len(Property::FontSize) {
            Some(Length::Percent(p)) => inherited_font * p / 100.0,
            Some(l) => l.to_px(None).unwrap_or(inherited_font),
            None => inherited_font,
        };
        let color = match e.style_value(Property::Color) {
            Some(Value::Color(c)) => *c,
            _ => parent.map_or(Rgba::BLACK, |p| p.color),
        };
        let kw = |p: Property, default: K| match e.style_value(p) {
            Some(Value::Keyword(k)) => *k,
            _ => default,
        };
        let zero = Length::Px(0.0);
        Computed {
            display,
            column: kw(Property::FlexDirection, K::Row) == K::Column,
            position: match kw(Property::Position, K::Static) {
                K::Absolute => Position::Absolute,
                K::Relative => Position::Relative,
                _ => Position::Static,
            },
            offsets: [
                len(Property::Left).filter(|l| *l != Length::Auto),
                len(Property::Top).filter(|l| *l != Length::Auto),
                len(Property::Right).filter(|l| *l != Length::Auto),
                len(Property::Bottom).filter(|l| *l != Length::Auto),
            ],
            width,
            height,
            margin: [
                len(Property::MarginTop).unwrap_or(zero),
                len(Property::MarginRight).unwrap_or(zero),
                len(Property::MarginBottom).unwrap_or(zero),
                len(Property::MarginLeft).unwrap_or(zero),
            ],
            padding: [
                len(Property::PaddingTop).unwrap_or(zero),
                len(Property::PaddingRight).unwrap_or(zero),
                len(Property::PaddingBottom).unwrap_or(zero),
                len(Property::PaddingLeft).unwrap_or(zero),
            ],
            font_size,
            color,
            gap: len(Property::Gap).and_then(|l| l.to_px(None)).unwrap_or(0.0),
            justify: kw(Property::JustifyContent, K::FlexStart),
            align: kw(Property::AlignItems, K::Stretch),
        }
    }

    fn line_height(&self) -> f64 {
        self.font_size * LINE_HEIGHT_EM
    }

    fn advance(&self) -> f64 {
        self.font_size * GLYPH_ADVANCE_EM
    }

    /// Percentages of padding and margins resolve against the containing width.
    fn edges(lens: &[Length; 4], cb_w: f64) -> [f64; 4] {
        lens.map(|l| l.to_px(Some(cb_w)).unwrap_or(0.0).max(0.0))
    }
}

/// Horizontal sizing rule for a box whose `width` is auto.
#[derive(Debug, Clone, Copy)]
enum WidthMode {
    Fill,
    Shrink,
    /// Margin-box width imposed by the parent (flex items, absolute boxes).
    Fixed(f64),
}

struct Engine {
    viewport: Viewport,
    nodes: BTreeMap<NodePath, LayoutNode>,
    warnings: Vec<String>,
}

struct Frame {
    x: f64,
    y: f64,
    avail: f64,
    cb_h: Option<f64>,
    abs_cb: Rect,
}

fn wrap_words(text: &str, advance: f64, max_w: f64) -> Vec<f64> {
    let mut lines = Vec::new();
    let mut cur: Option<f64> = None;
    for word in text.split_whitespace() {
        let ww = word.chars().count() as f64 * advance;
        cur = match cur {
            None => Some(ww),
            Some(w) if w + advance + ww <= max_w + 1e-9 => Some(w + advance + ww),
            Some(w) => {
                lines.push(w);
                Some(ww)
            }
        };
    }
    lines.extend(cur);
    lines
}

fn single_line_width(text: &str, advance: f64) -> f64 {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.is_empty() {
        return 0.0;
    }
    let chars: usize = words.iter().map(|w| w.chars().count()).sum();
    (chars + words.len() - 1) as f64 * advance
}

impl Engine {
    fn record(&mut self, path: &NodePath, node: LayoutNode) {
        self.nodes.insert(path.clone(), node);
    }

    fn shift_subtree(&mut self, path: &NodePath, dx: f64, dy: f64) {
        if dx == 0.0 && dy == 0.0 {
            return;
        }
        for (p, n) in self.nodes.range_mut(path.clone()..) {
            if p != path && !path.is_ancestor_of(p) {
                break;
            }
            n.rect.x += dx;
            n.rect.y += dy;
            for l in &mut n.lines {
                l.x += dx;
                l.y += dy;
            }
        }
    }

    fn mark_hidden(&mut self, e: &Element, path: &NodePath, cs: &Computed, x: f64, y: f64) {
        self.record(
            path,
            LayoutNode {
                rect: Rect { x, y, w: 0.0, h: 0.0 },
                rendered: false,
                is_text: false,
                position: cs.position,
                font_size: cs.font_size,
                color: cs.color,
                lines: Vec::new(),
            },
        );
        for (i, c) in e.children.iter().enumerate() {
            if let Node::Element(child) = c {
                let ccs = Computed::resolve(child, Some(cs));
                self.mark_hidden(child, &path.child(i), &ccs, x, y);
            }
        }
    }

    /// Max-content margin-box width.
    fn max_content(&self, e: &Element, cs: &Computed) -> f64 {
        if cs.display == Display::None {
            return 0.0;
        }
        let pad = Computed::edges(&cs.padding, 0.0);
        let mar = Computed::edges(&cs.margin, 0.0);
        let outer = pad[1] + pad[3] + mar[1] + mar[3];
        if let Size::Len(l) = cs.width {
            if let Some(w) = l.to_px(None) {
                return w.max(0.0) + outer;
            }
        }
        if e.tag == Tag::Img {
            return match (cs.width, cs.height) {
                (_, Size::Len(l)) if l.to_px(None).is_some() => l.to_px(None).unwrap_or(0.0) * 4.0 / 3.0 + outer,
                _ => AUTO_FIT_MAX_W + outer,
            };
        }
        if e.tag == Tag::Input {
            let text = e.attr("value").or_else(|| e.attr("placeholder")).unwrap_or("");
            return single_line_width(text, cs.advance()) + outer;
        }
        let mut widths = Vec::new();
        for c in &e.children {
            match c {
                Node::Text(t) => widths.push(single_line_width(t, cs.advance())),
                Node::Element(child) => {
                    let ccs = Computed::resolve(child, Some(cs));
                    if ccs.position != Position::Absolute && ccs.display != Display::None {
                        widths.push(self.max_content(child, &ccs));
                    }
                }
            }
        }
        let content = if cs.display == Display::Flex && !cs.column {
            widths.iter().sum::<f64>() + cs.gap * widths.len().saturating_sub(1) as f64
        } else {
            widths.iter().copied().fold(0.0, f64::max)
        };
        content + outer
    }

    /// Lays out `e` with its margin box at `(frame.x, frame.y)`. Returns the
    /// margin-box size.
    fn layout_element(
        &mut self,
        e: &Element,
        path: &NodePath,
        cs: &Computed,
        frame: &Frame,
        mode: WidthMode,
        forced_h: Option<f64>,
    ) -> (f64, f64) {
        if cs.display == Display::None {
            self.mark_hidden(e, path, cs, frame.x, frame.y);
            return (0.0, 0.0);
        }
        let avail = frame.avail;
        let pad = Computed::edges(&cs.padding, avail);
        let mut mar = Computed::edges(&cs.margin, avail);
        let pad_x = pad[1] + pad[3];
        let pad_y = pad[0] + pad[2];

        let specified_w = match cs.width {
            Size::Len(l) => l.to_px(Some(avail)).map(|w| w.max(0.0)),
            Size::AutoFit => Some(AUTO_FIT_MAX_W.min(avail.max(0.0))),
            Size::Auto => None,
        };
        let specified_h = match cs.height {
            Size::Len(Length::Percent(p)) => match frame.cb_h {
                Some(h) => Some(h * p / 100.0),
                None => {
                    self.warnings.push(format!(
                        "{path}: percentage height against auto-height container resolves to 0"
                    ));
                    Some(0.0)
                }
            },
            Size::Len(l) => l.to_px(None).map(|h| h.max(0.0)),
            Size::AutoFit | Size::Auto => None,
        };
        let content_w = match (specified_w, cs.width, mode) {
            (Some(w), _, _) => w,
            (None, _, WidthMode::Fixed(bw)) => bw - pad_x - mar[1] - mar[3],
            (None, _, _) if e.tag == Tag::Img => specified_h.map_or(AUTO_FIT_MAX_W.min(avail), |h| h * 4.0 / 3.0),
            (None, _, WidthMode::Fill) => avail - mar[1] - mar[3] - pad_x,
            (None, _, WidthMode::Shrink) => {
                let fit = avail - mar[1] - mar[3] - pad_x;
                (self.max_content(e, cs) - mar[1] - mar[3] - pad_x).min(fit)
            }
        }
        .max(0.0);
        // Auto horizontal margins centre a box of definite width in block flow.
        if matches!(mode, WidthMode::Fill) && cs.position != Position::Absolute {
            let auto_l = cs.margin[3] == Length::Auto;
            let auto_r = cs.margin[1] == Length::Auto;
            let free = (avail - content_w - pad_x - mar[1] - mar[3]).max(0.0);
            match (auto_l, auto_r) {
                (true, true) => {
                    mar[3] = free / 2.0;
                    mar[1] = free / 2.0;
                }
                (true, false) => mar[3] = free,
                _ => {}
            }
        }
        let bx = frame.x + mar[3];
        let by = frame.y + mar[0];
        let cx = bx + pad[3];
        let cy = by + pad[0];

        let definite_h = forced_h.map(|h| (h - pad_y).max(0.0)).or(specified_h);
        let positioned = cs.position != Position::Static;
        let mut deferred_abs: Vec<(usize, f64)> = Vec::new();

        let content_h = if e.tag == Tag::Img {
            specified_h.unwrap_or(content_w * 3.0 / 4.0)
        } else if e.tag == Tag::Input {
            cs.line_height()
        } else {
            let inner = Frame {
                x: cx,
                y: cy,
                avail: content_w,
                cb_h: definite_h,
                abs_cb: frame.abs_cb,
            };
            if cs.display == Display::Flex {
                self.layout_flex(e, path, cs, &inner, &mut deferred_abs)
            } else {
                self.layout_flow(e, path, cs, &inner, &mut deferred_abs)
            }
        };
        let content_h = definite_h.unwrap_or(content_h);
        let rect = Rect {
            x: bx,
            y: by,
            w: content_w + pad_x,
            h: forced_h.unwrap_or(content_h + pad_y),
        };
        self.record(
            path,
            LayoutNode {
                rect,
                rendered: true,
                is_text: false,
                position: cs.position,
                font_size: cs.font_size,
                color: cs.color,
                lines: Vec::new(),
            },
        );

        let mut own = rect;
        if cs.position == Position::Relative {
            let dx = cs.offsets[0]
                .and_then(|l| l.to_px(Some(avail)))
                .or_else(|| cs.offsets[2].and_then(|l| l.to_px(Some(avail))).map(|v| -v))
                .unwrap_or(0.0);
            let dy = cs.offsets[1]
                .and_then(|l| l.to_px(frame.cb_h))
                .or_else(|| cs.offsets[3].and_then(|l| l.to_px(frame.cb_h)).map(|v| -v))
                .unwrap_or(0.0);
            self.shift_subtree(path, dx, dy);
            own.x += dx;
            own.y += dy;
        }

        let abs_cb = if positioned { own } else { frame.abs_cb };
        for (i, static_y) in deferred_abs {
            if let Node::Element(child) = &e.children[i] {
                let ccs = Computed::resolve(child, Some(cs));
                let dy = own.y - rect.y;
                let dx = own.x - rect.x;
                self.layout_absolute(child, &path.child(i), &ccs, abs_cb, cx + dx, static_y + dy);
            }
        }
        (rect.w + mar[1] + mar[3], rect.h + mar[0] + mar[2])
    }

    fn layout_text(&mut self, text: &str, path: &NodePath, cs: &Computed, x: f64, y: f64, avail: f64) -> (f64, f64) {
        let lh = cs.line_height();
        let widths = wrap_words(text, cs.advance(), avail);
        let lines: Vec<Rect> = widths
            .iter()
            .enumerate()
            .map(|(i, &w)| Rect {
                x,
                y: y + i as f64 * lh,
                w,
                h: lh,
            })
            .collect();
        let w = widths.iter().copied().fold(0.0, f64::max);
        let h = lines.len() as f64 * lh;
        self.record(
            path,
            LayoutNode {
                rect: Rect { x, y, w, h },
                rendered: true,
                is_text: true,
                position: Position::Static,
                font_size: cs.font_size,
                color: cs.color,
                lines,
            },
        );
        (w, h)
    }

    fn layout_flow(
        &mut self,
        e: &Element,
        path: &NodePath,
        cs: &Computed,
        inner: &Frame,
        deferred_abs: &mut Vec<(usize, f64)>,
    ) -> f64 {
        let mut cursor = inner.y;
        for (i, c) in e.children.iter().enumerate() {
            let cpath = path.child(i);
            match c {
                Node::Text(t) => {
                    let (_, h) = self.layout_text(t, &cpath, cs, inner.x, cursor, inner.avail);
                    cursor += h;
                }
                Node::Element(child) => {
                    let ccs = Computed::resolve(child, Some(cs));
                    if ccs.position == Position::Absolute && ccs.display != Display::None {
                        deferred_abs.push((i, cursor));
                        continue;
                    }
                    let mode = if ccs.display == Display::InlineBlock {
                        WidthMode::Shrink
                    } else {
                        WidthMode::Fill
                    };
                    let frame = Frame {
                        x: inner.x,
                        y: cursor,
                        avail: inner.avail,
                        cb_h: inner.cb_h,
                        abs_cb: inner.abs_cb,
                    };
                    let (_, h) = self.layout_element(child, &cpath, &ccs, &frame, mode, None);
                    cursor += h;
                }
            }
        }
        cursor - inner.y
    }

    fn layout_flex(
        &mut self,
        e: &Element,
        path: &NodePath,
        cs: &Computed,
        inner: &Frame,
        deferred_abs: &mut Vec<(usize, f64)>,
    ) -> f64 {
        use crate::markup::style::Keyword as K;

        #[allow(clippy::large_enum_variant)]
        enum Item<'e> {
            Text(&'e str),
            Elem(&'e Element, Computed),
        }
        let mut items: Vec<(usize, Item)> = Vec::new();
        for (i, c) in e.children.iter().enumerate() {
            match c {
                Node::Text(t) => items.push((i, Item::Text(t))),
                Node::Element(child) => {
                    let ccs = Computed::resolve(child, Some(cs));
                    if ccs.display == Display::None {
                        self.mark_hidden(child, &path.child(i), &ccs, inner.x, inner.y);
                    } else if ccs.position == Position::Absolute {
                        deferred_abs.push((i, inner.y));
                    } else {
                        items.push((i, Item::Elem(child, ccs)));
                    }
                }
            }
        }
        let n = items.len();
        let gaps = cs.gap * n.saturating_sub(1) as f64;
        let distribute = |free: f64, justify: K| -> (f64, f64) {
            // (leading offset, extra spacing between items)
            match justify {
                K::FlexEnd => (free, 0.0),
                K::Center => (free / 2.0, 0.0),
                K::SpaceBetween if free > 0.0 && n > 1 => (0.0, free / (n - 1) as f64),
                K::SpaceAround if free > 0.0 => (free / n as f64 / 2.0, free / n as f64),
                K::SpaceEvenly if free > 0.0 => (free / (n + 1) as f64, free / (n + 1) as f64),
                K::SpaceAround | K::SpaceEvenly => (free / 2.0, 0.0),
                _ => (0.0, 0.0),
            }
        };

        if !cs.column {
            // Main sizes first, then place.
            let sizes: Vec<f64> = items
                .iter()
                .map(|(_, it)| match it {
                    Item::Text(t) => single_line_width(t, cs.advance()).min(inner.avail),
                    Item::Elem(child, ccs) => {
                        let mar = Computed::edges(&ccs.margin, inner.avail);
                        let pad = Computed::edges(&ccs.padding, inner.avail);
                        match ccs.width {
                            Size::Len(l) if l.to_px(Some(inner.avail)).is_some() => {
                                l.to_px(Some(inner.avail)).unwrap_or(0.0).max(0.0) + pad[1] + pad[3] + mar[1] + mar[3]
                            }
                            _ => self.max_content(child, ccs).min(inner.avail.max(0.0)),
                        }
                    }
                })
                .collect();
            let free = inner.avail - sizes.iter().sum::<f64>() - gaps;
            let (lead, extra) = distribute(free, cs.justify);
            let mut x = inner.x + lead;
            let mut heights = Vec::with_capacity(n);
            for ((i, it), &size) in items.iter().zip(&sizes) {
                let cpath = path.child(*i);
                let h = match it {
                    Item::Text(t) => self.layout_text(t, &cpath, cs, x, inner.y, size).1,
                    Item::Elem(child, ccs) => {
                        let frame = Frame {
                            x,
                            y: inner.y,
                            avail: inner.avail,
                            cb_h: inner.cb_h,
                            abs_cb: inner.abs_cb,
                        };
                        self.layout_element(child, &cpath, ccs, &frame, WidthMode::Fixed(size), None)
                            .1
                    }
                };
                heights.push(h);
                x += size + cs.gap + extra;
            }
            let line = inner
                .cb_h
                .unwrap_or_else(|| heights.iter().copied().fold(0.0, f64::max));
            for ((i, it), &h) in items.iter().zip(&heights) {
                let cpath = path.child(*i);
                let stretchable = matches!(it, Item::Elem(_, ccs) if ccs.height == Size::Auto);
                match cs.align {
                    K::Center => self.shift_subtree(&cpath, 0.0, (line - h) / 2.0),
                    K::FlexEnd => self.shift_subtree(&cpath, 0.0, line - h),
                    K::Stretch if stretchable => {
                        if let (Some(node), Item::Elem(_, ccs)) = (self.nodes.get_mut(&cpath), it) {
                            let mar = Computed::edges(&ccs.margin, inner.avail);
                            node.rect.h = node.rect.h.max(line - mar[0] - mar[2]);
                        }
                    }
                    _ => {}
                }
            }
            heights.iter().copied().fold(0.0, f64::max)
        } else {
            let mut y = inner.y;
            let mut placed = Vec::with_capacity(n);
            for (i, it) in &items {
                let cpath = path.child(*i);
                let (w, h) = match it {
                    Item::Text(t) => self.layout_text(t, &cpath, cs, inner.x, y, inner.avail),
                    Item::Elem(child, ccs) => {
                        let mode = if cs.align == K::Stretch {
                            WidthMode::Fill
                        } else {
                            WidthMode::Shrink
                        };
                        let frame = Frame {
                            x: inner.x,
                            y,
                            avail: inner.avail,
                            cb_h: inner.cb_h,
                            abs_cb: inner.abs_cb,
                        };
                        self.layout_element(child, &cpath, ccs, &frame, mode, None)
                    }
                };
                match cs.align {
                    K::Center => self.shift_subtree(&cpath, (inner.avail - w) / 2.0, 0.0),
                    K::FlexEnd => self.shift_subtree(&cpath, inner.avail - w, 0.0),
                    _ => {}
                }
                placed.push((cpath, h));
                y += h + cs.gap;
            }
            let used = placed.iter().map(|(_, h)| h).sum::<f64>() + gaps;
            if let Some(h) = inner.cb_h {
                let (lead, extra) = distribute(h - used, cs.justify);
                for (k, (cpath, _)) in placed.iter().enumerate() {
                    self.shift_subtree(cpath, 0.0, lead + extra * k as f64);
                }
            }
            used
        }
    }

    fn layout_absolute(&mut self, e: &Element, path: &NodePath, cs: &Computed, cb: Rect, static_x: f64, static_y: f64) {
        let off = |i: usize, basis: f64| cs.offsets[i].and_then(|l| l.to_px(Some(basis)));
        let (left, top, right, bottom) = (off(0, cb.w), off(1, cb.h), off(2, cb.w), off(3, cb.h));
        let mar = Computed::edges(&cs.margin, cb.w);
        let mode = match (cs.width, left, right) {
            (Size::Auto, Some(l), Some(r)) => WidthMode::Fixed((cb.w - l - r).max(0.0)),
            (Size::Auto, _, _) => WidthMode::Fixed(self.max_content(e, cs).min(cb.w)),
            _ => WidthMode::Fill,
        };
        let forced_h = match (cs.height, top, bottom) {
            (Size::Auto, Some(t), Some(b)) => Some((cb.h - t - b - mar[0] - mar[2]).max(0.0)),
            _ => None,
        };
        let frame = Frame {
            x: 0.0,
            y: 0.0,
            avail: cb.w,
            cb_h: Some(cb.h),
            abs_cb: cb,
        };
        let (w, h) = self.layout_element(e, path, cs, &frame, mode, forced_h);
        let x = match (left, right) {
            (Some(l), _) => cb.x + l,
            (None, Some(r)) => cb.x + cb.w - r - w,
            (None, None) => static_x,
        };
        let y = match (top, bottom) {
            (Some(t), _) => cb.y + t,
            (None, Some(b)) => cb.y + cb.h - b - h,
            (None, None) => static_y,
        };
        self.shift_subtree(path, x, y);
    }
}

/// Computes border boxes for every body node.
pub fn compute_layout(doc: &AnnotatedDocument, viewport: Viewport) -> LayoutTree {
    let mut engine = Engine {
        viewport,
        nodes: BTreeMap::new(),
        warnings: Vec::new(),
    };
    let body_path = doc.body_path();
    let root_cs = Computed::resolve(&doc.root, None);
    let body = doc.body();
    let cs = Computed::resolve(body, Some(&root_cs));
    let frame = Frame {
        x: 0.0,
        y: 0.0,
        avail: viewport.width as f64,
        cb_h: Some(viewport.height as f64),
        abs_cb: viewport.rect(),
    };
    match cs.position {
        Position::Absolute => engine.layout_absolute(body, &body_path, &cs, viewport.rect(), 0.0, 0.0),
        _ => {
            engine.layout_element(body, &body_path, &cs, &frame, WidthMode::Fill, None);
        }
    }
    let vp = viewport.rect();
    let overflow = engine
        .nodes
        .iter()
        .filter(|(_, n)| n.rendered && !n.is_text && !vp.contains(&n.rect))
        .map(|(p, _)| p.clone())
        .collect();
    LayoutTree {
        viewport: engine.viewport,
        nodes: engine.nodes,
        overflow,
        warnings: engine.warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledBox {
    pub class: String,
    pub category_id: u32,
    pub bbox: PixelBox,
    pub path: NodePath,
}

impl LabeledBox {
    pub fn element_class(&self, domain: Domain) -> Option<ElementClass> {
        ElementClass::by_id(domain, self.category_id)
    }
}

/// Clips a float rectangle to the viewport and rounds its edges.
pub fn clip_to_viewport(rect: &Rect, viewport: Viewport) -> Option<PixelBox> {
    let clipped = Rect {
        x: rect.x.max(0.0),
        y: rect.y.max(0.0),
        w: 0.0,
        h: 0.0,
    };
    let x1 = (rect.x + rect.w).min(viewport.width as f64);
    let y1 = (rect.y + rect.h).min(viewport.height as f64);
    let clipped = Rect {
        w: x1 - clipped.x,
        h: y1 - clipped.y,
        ..clipped
    };
    if clipped.w <= 0.0 || clipped.h <= 0.0 {
        return None;
    }
    let (x0, y0, x1, y1) = pixel_edges(&clipped);
    let bbox = PixelBox {
        x: x0 as u32,
        y: y0 as u32,
        w: (x1 - x0).max(0) as u32,
        h: (y1 - y0).max(0) as u32,
    };
    (bbox.area() >= 1).then_some(bbox)
}

/// One box per element label, clipped to the viewport; labels whose box has
/// no area after clipping (hidden subtrees, off-screen nodes) are dropped.
pub fn element_boxes(layout: &LayoutTree, doc: &AnnotatedDocument, viewport: Viewport) -> Vec<LabeledBox> {
    let mut out = Vec::new();
    for label in &doc.element_labels {
        let bbox = layout
            .nodes
            .get(&label.path)
            .filter(|n| n.rendered)
            .and_then(|n| clip_to_viewport(&n.rect, viewport));
        match bbox {
            Some(bbox) => out.push(LabeledBox {
                class: label.class.name.to_string(),
                category_id: label.class.id,
                bbox,
                path: label.path.clone(),
            }),
            None => log::debug!("dropping zero-area box for {} at {}", label.class, label.path),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markup::parse_document;

    fn layout(src: &str, domain: Domain) -> (AnnotatedDocument, LayoutTree) {
        let (doc, _) = parse_document(src, domain).unwrap();
        let tree = compute_layout(&doc, Viewport::for_domain(domain));
        (doc, tree)
    }

    fn px(tree: &LayoutTree, path: &[usize]) -> [i64; 4] {
        let r = tree.rect(&NodePath(path.to_vec())).unwrap();
        let (x0, y0, x1, y1) = pixel_edges(&r);
        [x0, y0, x1 - x0, y1 - y0]
    }

    #[test]
    fn empty_body() {
        let (_, tree) = layout("<body></body>", Domain::Ui);
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(px(&tree, &[1]), [0, 0, 628, 0]);
    }

    #[test]
    fn wrap_is_greedy() {
        // advance 6px at 10px font
        assert_eq!(wrap_words("aa bb cc", 6.0, 30.0), vec![30.0, 12.0]);
        assert_eq!(wrap_words("aaaaaaaa", 6.0, 30.0), vec![48.0]);
        assert!(wrap_words("   ", 6.0, 30.0).is_empty());
    }

    #[test]
    fn display_none_subtree_is_not_rendered() {
        let (doc, tree) = layout(
            r#"<body><div style="display:none" data-type="popup window"><p data-type="text">hi</p></div></body>"#,
            Domain::Ui,
        );
        assert!(!tree.nodes[&NodePath(vec![1, 0, 0])].rendered);
        assert!(element_boxes(&tree, &doc, tree.viewport).is_empty());
    }

    #[test]
    fn percent_height_against_auto_container_is_zero() {
        let (_, tree) = layout(
            r#"<body><div><div style="height:50%; width:10px"></div></div></body>"#,
            Domain::Ui,
        );
        assert_eq!(px(&tree, &[1, 0, 0]), [0, 0, 10, 0]);
        assert_eq!(tree.warnings.len(), 1);
    }

    #[test]
    fn overflow_is_flagged_not_fixed() {
        let (_, tree) = layout(
            r#"<body><div style="width:700px;height:10px"></div></body>"#,
            Domain::Ui,
        );
        assert!(tree.overflow.contains(&NodePath(vec![1, 0])));
        assert_eq!(px(&tree, &[1, 0]), [0, 0, 700, 10]);
    }

    #[test]
    fn clipping_rounds_edges() {
        let vp = Viewport::for_domain(Domain::Ui);
        let r = Rect {
            x: -50.0,
            y: 10.4,
            w: 100.0,
            h: 20.0,
        };
        assert_eq!(
            clip_to_viewport(&r, vp),
            Some(PixelBox {
                x: 0,
                y: 10,
                w: 50,
                h: 20
            })
        );
        let off = Rect {
            x: 700.0,
            y: 0.0,
            w: 10.0,
            h: 10.0,
        };
        assert_eq!(clip_to_viewport(&off, vp), None);
        let sliver = Rect {
            x: 1.0,
            y: 1.0,
            w: 0.4,
            h: 10.0,
        };
        assert_eq!(clip_to_viewport(&sliver, vp), None);
    }

    #[test]
    fn ties_round_away_from_zero() {
        let vp = Viewport::for_domain(Domain::Ui);
        let r = Rect {
            x: 0.5,
            y: 2.5,
            w: 10.0,
            h: 10.0,
        };
        assert_eq!(
            clip_to_viewport(&r, vp),
            Some(PixelBox {
                x: 1,
                y: 3,
                w: 10,
                h: 10
            })
        );
    }
}
