use std::collections::BTreeMap;
use std::io::Cursor;

use image::{ImageBuffer, ImageFormat, Rgba as PixelRgba};

use super::{LayoutTree, Rect};
use crate::assets::{self, AssetKind, PlaceholderSpec, ResolvedAsset};
use crate::markup::{AnnotatedDocument, NodePath, Rgba, Tag, Value};

/// RGBA8 pixels, row-major, top-left origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RasterError {
    #[error("placeholder {0} has no resolved asset")]
    MissingAsset(String),
    #[error("image decode failed: {0}")]
    Decode(String),
}

impl RasterImage {
    pub fn filled(width: u32, height: u32, color: Rgba) -> RasterImage {
        let pixels = color
            .to_array()
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 4)
            .collect();
        RasterImage { width, height, pixels }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 4] {
        let i = (y as usize * self.width as usize + x as usize) * 4;
        [
            self.pixels[i],
            self.pixels[i + 1],
            self.pixels[i + 2],
            self.pixels[i + 3],
        ]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, color: [u8; 4]) {
        let i = (y as usize * self.width as usize + x as usize) * 4;
        self.pixels[i..i + 4].copy_from_slice(&color);
    }

    /// Source-over blend of `color` into the integer rectangle `[x0,x1) × [y0,y1)`,
    /// clipped to the image.
    pub fn fill_rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, color: Rgba) {
        let (x0, x1) = (x0.max(0), x1.min(self.width as i64));
        let (y0, y1) = (y0.max(0), y1.min(self.height as i64));
        if color.a == 0 {
            return;
        }
        for y in y0..y1 {
            for x in x0..x1 {
                let px = if color.a == 255 {
                    color.to_array()
                } else {
                    blend(self.pixel(x as u32, y as u32), color)
                };
                self.set_pixel(x as u32, y as u32, px);
            }
        }
    }

    /// Nearest-neighbour scaled copy of `src` into `[x0,x1) × [y0,y1)`.
    pub fn blit_scaled(&mut self, src: &RasterImage, x0: i64, y0: i64, x1: i64, y1: i64) {
        let (dw, dh) = (x1 - x0, y1 - y0);
        if dw <= 0 || dh <= 0 || src.width == 0 || src.height == 0 {
            return;
        }
        for y in y0.max(0)..y1.min(self.height as i64) {
            let sy = ((2 * (y - y0) + 1) * src.height as i64 / (2 * dh)) as u32;
            for x in x0.max(0)..x1.min(self.width as i64) {
                let sx = ((2 * (x - x0) + 1) * src.width as i64 / (2 * dw)) as u32;
                let p = src.pixel(sx.min(src.width - 1), sy.min(src.height - 1));
                let px = if p[3] == 255 {
                    p
                } else {
                    blend(
                        self.pixel(x as u32, y as u32),
                        Rgba {
                            r: p[0],
                            g: p[1],
                            b: p[2],
                            a: p[3],
                        },
                    )
                };
                self.set_pixel(x as u32, y as u32, px);
            }
        }
    }

    /// 8-bit RGBA PNG; byte-identical for identical pixels.
    pub fn to_png(&self) -> Vec<u8> {
        let buf: ImageBuffer<PixelRgba<u8>, &[u8]> =
            ImageBuffer::from_raw(self.width, self.height, self.pixels.as_slice())
                .expect("pixel buffer matches dimensions");
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png)
            .expect("in-memory PNG encoding");
        out.into_inner()
    }

    pub fn from_encoded(bytes: &[u8]) -> Result<RasterImage, RasterError> {
        let img = image::load_from_memory(bytes).map_err(|e| RasterError::Decode(e.to_string()))?;
        let rgba = img.to_rgba8();
        let (width, height) = rgba.dimensions();
        if width == 0 || height == 0 {
            return Err(RasterError::Decode("empty image".into()));
        }
        Ok(RasterImage {
            width,
            height,
            pixels: rgba.into_raw(),
        })
    }

    pub fn digest(&self) -> String {
        let mut bytes = Vec::with_capacity(self.pixels.len() + 8);
        bytes.extend_from_slice(&self.width.to_le_bytes());
        bytes.extend_from_slice(&self.height.to_le_bytes());
        bytes.extend_from_slice(&self.pixels);
        crate::markup::digest_hex(&bytes)
    }
}

fn blend(dst: [u8; 4], src: Rgba) -> [u8; 4] {
    let a = src.a as u32;
    let mix = |s: u8, d: u8| ((s as u32 * a + d as u32 * (255 - a) + 127) / 255) as u8;
    [
        mix(src.r, dst[0]),
        mix(src.g, dst[1]),
        mix(src.b, dst[2]),
        (a + dst[3] as u32 * (255 - a) / 255).min(255) as u8,
    ]
}

/// Rounded integer edges of a float rectangle (ties away from zero).
pub(crate) fn pixel_edges(r: &Rect) -> (i64, i64, i64, i64) {
    (
        r.x.round() as i64,
        r.y.round() as i64,
        (r.x + r.w).round() as i64,
        (r.y + r.h).round() as i64,
    )
}

/// Paints the document in tree order. Text is drawn as one bar per line.
pub fn rasterize(
    layout: &LayoutTree,
    doc: &AnnotatedDocument,
    assets: &BTreeMap<String, ResolvedAsset>,
    seed: u64,
) -> Result<RasterImage, RasterError> {
    for spec in &doc.placeholders {
        if !assets.contains_key(&spec.id()) {
            return Err(RasterError::MissingAsset(spec.id()));
        }
    }
    let mut img = RasterImage::filled(layout.viewport.width, layout.viewport.height, Rgba::WHITE);
    let body = doc.body_path();
    let Some(body_el) = doc.root.element_at(&body) else {
        return Ok(img);
    };
    body_el.walk(&mut |rel, e| {
        let mut full = body.clone();
        full.0.extend_from_slice(&rel.0);
        let Some(node) = layout.nodes.get(&full) else {
            return;
        };
        if !node.rendered {
            return;
        }
        let (x0, y0, x1, y1) = pixel_edges(&node.rect);
        if let Some(Value::Color(c)) = e.style_value(crate::markup::Property::BackgroundColor) {
            img.fill_rect(x0, y0, x1, y1, *c);
        }
        if let Some(Value::Url(url)) = e.style_value(crate::markup::Property::BackgroundImage) {
            let tile = background_tile(url, &full, node.rect, seed);
            img.blit_scaled(&tile, x0, y0, x1, y1);
        }
        if e.tag == Tag::Img {
            let id = full.to_string();
            let tile = match assets.get(&id) {
                Some(asset) => asset.image.clone(),
                None => std::sync::Arc::new(remote_tile(e.attr("src").unwrap_or(""), &full, node.rect, seed)),
            };
            img.blit_scaled(&tile, x0, y0, x1, y1);
        }
        for (i, _) in e.children.iter().enumerate() {
            let text_path = full.child(i);
            if let Some(text) = layout.nodes.get(&text_path) {
                if !text.rendered {
                    continue;
                }
                for line in &text.lines {
                    let bar_h = line.h * 0.55;
                    let bar = Rect {
                        x: line.x,
                        y: line.y + (line.h - bar_h) / 2.0,
                        w: line.w,
                        h: bar_h,
                    };
                    let (a, b, c, d) = pixel_edges(&bar);
                    img.fill_rect(a, b, c, d.max(b + 1), text.color);
                }
            }
        }
    });
    Ok(img)
}

// Non-placeholder image sources are not fetched; they get a deterministic tile.
fn remote_tile(src: &str, path: &NodePath, rect: Rect, seed: u64) -> RasterImage {
    let spec = PlaceholderSpec {
        path: path.clone(),
        alt: src.to_string(),
        declared_w: Some(rect.w.round().clamp(1.0, 4096.0) as u32),
        declared_h: Some(rect.h.round().clamp(1.0, 4096.0) as u32),
        kind: AssetKind::Image,
    };
    assets::synth_fallback(&spec, seed)
}

fn background_tile(url: &str, path: &NodePath, rect: Rect, seed: u64) -> RasterImage {
    let spec = PlaceholderSpec {
        path: path.clone(),
        alt: url.to_string(),
        declared_w: Some(rect.w.round().clamp(1.0, 4096.0) as u32),
        declared_h: Some(rect.h.round().clamp(1.0, 4096.0) as u32),
        kind: AssetKind::Background,
    };
    assets::synth_fallback(&spec, seed)
}
