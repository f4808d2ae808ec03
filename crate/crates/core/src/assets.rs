//! Placeholder resolution: image search for pictures and icons, text-to-image
//! generation for charts and diagrams, and a deterministic offline generator
//! that every failure path falls back to.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::layout::{RasterImage, AUTO_FIT};
use crate::markup::{Element, NodePath, Property, Rgba, Value};
use crate::schema::ElementClass;

pub const DEFAULT_ASSET_W: u32 = 200;
pub const DEFAULT_ASSET_H: u32 = 150;
pub const SEARCH_KEY_ENV: &str = "STRUCTSYNTH_SEARCH_KEY";
pub const T2I_KEY_ENV: &str = "STRUCTSYNTH_T2I_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetKind {
    Image,
    Icon,
    Chart,
    Diagram,
    Background,
}

impl AssetKind {
    pub fn for_class(class: ElementClass) -> AssetKind {
        match class.name {
            "icon" => AssetKind::Icon,
            "chart" => AssetKind::Chart,
            "diagram" | "schematic diagram" => AssetKind::Diagram,
            "background image" => AssetKind::Background,
            _ => AssetKind::Image,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AssetKind::Image => "image",
            AssetKind::Icon => "icon",
            AssetKind::Chart => "chart",
            AssetKind::Diagram => "diagram",
            AssetKind::Background => "background",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceholderSpec {
    pub path: NodePath,
    pub alt: String,
    pub declared_w: Option<u32>,
    pub declared_h: Option<u32>,
    pub kind: AssetKind,
}

fn declared_px(raw: Option<&str>) -> Option<u32> {
    let raw = raw?.trim().to_ascii_lowercase();
    if raw == AUTO_FIT {
        return None;
    }
    let num = raw.strip_suffix("px").unwrap_or(&raw).trim();
    let v: f64 = num.parse().ok()?;
    (v.is_finite() && (1.0..=16384.0).contains(&v)).then(|| v.round() as u32)
}

fn style_px(e: &Element, p: Property) -> Option<u32> {
    match e.style_value(p) {
        Some(Value::Length(l)) => l
            .to_px(None)
            .filter(|v| *v >= 1.0 && *v <= 16384.0)
            .map(|v| v.round() as u32),
        _ => None,
    }
}

impl PlaceholderSpec {
    pub(crate) fn from_img(path: NodePath, e: &Element, kind: AssetKind) -> PlaceholderSpec {
        let alt = e
            .attr("alt")
            .map(|a| a.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|a| !a.is_empty())
            .unwrap_or_else(|| format!("untitled {}", kind.as_str()));
        PlaceholderSpec {
            path,
            alt,
            declared_w: style_px(e, Property::Width).or_else(|| declared_px(e.attr("width"))),
            declared_h: style_px(e, Property::Height).or_else(|| declared_px(e.attr("height"))),
            kind,
        }
    }

    /// Placeholder id: the owning img's node path.
    pub fn id(&self) -> String {
        self.path.to_string()
    }

    /// Output raster size: declared dims, the 4:3 complement of a single
    /// declared side, or 200×150.
    pub fn dims(&self) -> (u32, u32) {
        match (self.declared_w, self.declared_h) {
            (Some(w), Some(h)) => (w, h),
            (Some(w), None) => (w, (w * 3 / 4).max(1)),
            (None, Some(h)) => ((h * 4 / 3).max(1), h),
            (None, None) => (DEFAULT_ASSET_W, DEFAULT_ASSET_H),
        }
    }
}

/// Absolute http(s) and data: sources are real; anything else (a literal
/// `placeholder[.ext]`, a relative path, a missing src) cannot be resolved.
pub fn is_placeholder_src(src: Option<&str>) -> bool {
    let Some(src) = src.map(str::trim) else {
        return true;
    };
    let lower = src.to_ascii_lowercase();
    !(lower.starts_with("http://")
        || lower.starts_with("https://")
        || lower.starts_with("data:")
        || lower.starts_with("//"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetSource {
    Search,
    Generative,
    Fallback,
}

#[derive(Debug, Clone)]
pub struct ResolvedAsset {
    pub placeholder_id: String,
    pub source: AssetSource,
    pub image: Arc<RasterImage>,
    /// Search query, generation prompt, or fallback seed.
    pub provenance: String,
}

// ---------------------------------------------------------------------------
// Offline generator

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64(seed)
    }

    /// Seeded by FNV-1a over `alt` bytes followed by the little-endian seed.
    pub fn keyed(alt: &str, seed: u64) -> SplitMix64 {
        let mut key = alt.as_bytes().to_vec();
        key.extend_from_slice(&seed.to_le_bytes());
        SplitMix64(fnv1a64(&key))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> Rgba {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    Rgba::opaque(to(r), to(g), to(b))
}

/// Background colour of a fallback raster: hue from the alt-text hash.
pub fn fallback_colors(alt: &str) -> (Rgba, Rgba) {
    let hue = (fnv1a64(alt.as_bytes()) % 360) as f64;
    (hsl_to_rgb(hue, 0.5, 0.7), hsl_to_rgb(hue, 0.5, 0.3))
}

/// Heights in px of the five chart bars for a raster of height `height`.
pub fn chart_bar_heights(alt: &str, seed: u64, height: u32) -> [u32; 5] {
    let plot = (height * 4 / 5).max(1) as u64;
    let mut rng = SplitMix64::keyed(alt, seed);
    std::array::from_fn(|_| (1 + rng.next_u64() % plot) as u32)
}

/// Deterministic stand-in raster for a placeholder.
pub fn synth_fallback(spec: &PlaceholderSpec, seed: u64) -> RasterImage {
    let (w, h) = spec.dims();
    let (bg, fg) = fallback_colors(&spec.alt);
    let mut img = RasterImage::filled(w, h, bg);
    let (wi, hi) = (w as i64, h as i64);
    match spec.kind {
        AssetKind::Image | AssetKind::Icon => {
            img.fill_rect(wi / 4, hi / 4, wi - wi / 4, hi - hi / 4, fg);
        }
        AssetKind::Chart => {
            for (i, bar) in chart_bar_heights(&spec.alt, seed, h).iter().enumerate() {
                let x0 = i as i64 * wi / 5;
                let x1 = (i as i64 + 1) * wi / 5;
                let inset = (x1 - x0) / 4;
                img.fill_rect(x0 + inset, hi - *bar as i64, x1 - inset, hi, fg);
            }
        }
        AssetKind::Diagram => {
            let bw = (wi / 5).max(1);
            let bh = (hi / 3).max(1);
            let top = (hi - bh) / 2;
            let xs = [wi / 10, 4 * wi / 10, 7 * wi / 10];
            let mid = hi / 2;
            for pair in xs.windows(2) {
                img.fill_rect(pair[0] + bw, mid - 1, pair[1], mid + 1, fg);
            }
            for &x in &xs {
                img.fill_rect(x, top, x + bw, top + bh, fg);
            }
        }
        AssetKind::Background => {
            let stripe = 8;
            for y in 0..hi {
                for x in 0..wi {
                    if ((x + y) / stripe) % 2 == 1 {
                        img.fill_rect(x, y, x + 1, y + 1, Rgba { a: 48, ..fg });
                    }
                }
            }
        }
    }
    img
}

// ---------------------------------------------------------------------------
// Providers

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("http: {0}")]
    Http(String),
    #[error("bad response: {0}")]
    BadResponse(String),
    #[error("no results for {0:?}")]
    NoResults(String),
}

/// A remote image source.
pub trait AssetProvider: Send + Sync {
    fn name(&self) -> &str;
    fn fetch(&self, spec: &PlaceholderSpec) -> Result<Vec<u8>, ProviderError>;
    /// Human-readable record of what was asked for.
    fn provenance(&self, spec: &PlaceholderSpec) -> String {
        spec.alt.clone()
    }
}

pub(crate) fn http_agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .build()
        .into()
}

/// `GET endpoint?q=<alt>&transparent=<bool>` returning `{"urls": [...]}`;
/// the first URL is downloaded.
pub struct HttpSearchProvider {
    endpoint: String,
    key: Option<String>,
    prefer_transparent: bool,
    agent: ureq::Agent,
}

impl HttpSearchProvider {
    pub fn new(endpoint: impl Into<String>, key: Option<String>, timeout: Duration) -> HttpSearchProvider {
        HttpSearchProvider {
            endpoint: endpoint.into(),
            key,
            prefer_transparent: true,
            agent: http_agent(timeout),
        }
    }

    pub fn from_env(endpoint: impl Into<String>, timeout: Duration) -> HttpSearchProvider {
        HttpSearchProvider::new(endpoint, std::env::var(SEARCH_KEY_ENV).ok(), timeout)
    }
}

impl AssetProvider for HttpSearchProvider {
    fn name(&self) -> &str {
        "search"
    }

    fn fetch(&self, spec: &PlaceholderSpec) -> Result<Vec<u8>, ProviderError> {
        let mut req = self
            .agent
            .get(&self.endpoint)
            .query("q", &spec.alt)
            .query("transparent", if self.prefer_transparent { "true" } else { "false" });
        if let Some(key) = &self.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let body = req
            .call()
            .map_err(|e| ProviderError::Http(e.to_string()))?
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Http(e.to_string()))?;
        let parsed: serde_json::Value =
            serde_json::from_str(&body).map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        let url = parsed["urls"]
            .as_array()
            .and_then(|urls| urls.first())
            .and_then(|u| u.as_str())
            .ok_or_else(|| ProviderError::NoResults(spec.alt.clone()))?;
        self.agent
            .get(url)
            .call()
            .map_err(|e| ProviderError::Http(e.to_string()))?
            .body_mut()
            .read_to_vec()
            .map_err(|e| ProviderError::Http(e.to_string()))
    }

    fn provenance(&self, spec: &PlaceholderSpec) -> String {
        format!("q={}", spec.alt)
    }
}

/// `POST endpoint` with `{"prompt", "width", "height"}` returning image bytes.
pub struct HttpTextToImageProvider {
    endpoint: String,
    key: Option<String>,
    agent: ureq::Agent,
}

impl HttpTextToImageProvider {
    pub fn new(endpoint: impl Into<String>, key: Option<String>, timeout: Duration) -> HttpTextToImageProvider {
        HttpTextToImageProvider {
            endpoint: endpoint.into(),
            key,
            agent: http_agent(timeout),
        }
    }

    pub fn from_env(endpoint: impl Into<String>, timeout: Duration) -> HttpTextToImageProvider {
        HttpTextToImageProvider::new(endpoint, std::env::var(T2I_KEY_ENV).ok(), timeout)
    }

    fn prompt(spec: &PlaceholderSpec) -> String {
        format!("A clean {} illustration: {}", spec.kind.as_str(), spec.alt)
    }
}

impl AssetProvider for HttpTextToImageProvider {
    fn name(&self) -> &str {
        "text-to-image"
    }

    fn fetch(&self, spec: &PlaceholderSpec) -> Result<Vec<u8>, ProviderError> {
        let (w, h) = spec.dims();
        let body = json!({"prompt": Self::prompt(spec), "width": w, "height": h}).to_string();
        let mut req = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        req.send(body.as_bytes())
            .map_err(|e| ProviderError::Http(e.to_string()))?
            .body_mut()
            .read_to_vec()
            .map_err(|e| ProviderError::Http(e.to_string()))
    }

    fn provenance(&self, spec: &PlaceholderSpec) -> String {
        Self::prompt(spec)
    }
}

/// Counting semaphore bounding concurrent provider requests.
struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Permits {
    fn new(n: usize) -> Permits {
        Permits {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut free = self.free.lock().expect("permit lock");
            while *free == 0 {
                free = self.cv.wait(free).expect("permit lock");
            }
            *free -= 1;
        }
        let out = f();
        *self.free.lock().expect("permit lock") += 1;
        self.cv.notify_one();
        out
    }
}

#[derive(Default)]
pub struct ProviderSet {
    pub search: Option<Box<dyn AssetProvider>>,
    pub generative: Option<Box<dyn AssetProvider>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    alt: String,
    kind: AssetKind,
    dims: (u32, u32),
}

#[derive(Serialize, Deserialize)]
struct DiskMeta {
    source: AssetSource,
    provenance: String,
}

/// Resolves placeholders through providers with an in-memory (and optional
/// on-disk) cache keyed by `(alt, kind, dims)`. Safe to share across threads.
pub struct AssetResolver {
    providers: ProviderSet,
    cache: Mutex<HashMap<CacheKey, ResolvedAsset>>,
    disk_cache: Option<PathBuf>,
    permits: Permits,
}

pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

impl AssetResolver {
    pub fn new(providers: ProviderSet) -> AssetResolver {
        AssetResolver {
            providers,
            cache: Mutex::new(HashMap::new()),
            disk_cache: None,
            permits: Permits::new(DEFAULT_MAX_IN_FLIGHT),
        }
    }

    pub fn offline() -> AssetResolver {
        AssetResolver::new(ProviderSet::default())
    }

    pub fn with_max_in_flight(mut self, n: usize) -> AssetResolver {
        self.permits = Permits::new(n);
        self
    }

    pub fn with_disk_cache(mut self, dir: impl Into<PathBuf>) -> AssetResolver {
        self.disk_cache = Some(dir.into());
        self
    }

    fn disk_path(&self, key: &CacheKey) -> Option<PathBuf> {
        let dir = self.disk_cache.as_ref()?;
        let raw = format!(
            "{}\u{1f}{}\u{1f}{}x{}",
            key.alt,
            key.kind.as_str(),
            key.dims.0,
            key.dims.1
        );
        Some(dir.join(crate::markup::digest_hex(raw.as_bytes())))
    }

    fn load_disk(&self, key: &CacheKey) -> Option<(AssetSource, String, RasterImage)> {
        let base = self.disk_path(key)?;
        let png = std::fs::read(base.with_extension("png")).ok()?;
        let meta: DiskMeta = serde_json::from_slice(&std::fs::read(base.with_extension("json")).ok()?).ok()?;
        let image = RasterImage::from_encoded(&png).ok()?;
        Some((meta.source, meta.provenance, image))
    }

    fn store_disk(&self, key: &CacheKey, asset: &ResolvedAsset) {
        let Some(base) = self.disk_path(key) else {
            return;
        };
        let meta = DiskMeta {
            source: asset.source,
            provenance: asset.provenance.clone(),
        };
        let result = std::fs::create_dir_all(base.parent().unwrap_or(&base))
            .and_then(|_| std::fs::write(base.with_extension("png"), asset.image.to_png()))
            .and_then(|_| {
                std::fs::write(
                    base.with_extension("json"),
                    serde_json::to_vec(&meta).expect("meta serializes"),
                )
            });
        if let Err(e) = result {
            log::warn!("asset cache write failed: {e}");
        }
    }

    fn route(&self, kind: AssetKind) -> Option<(&dyn AssetProvider, AssetSource)> {
        match kind {
            AssetKind::Image | AssetKind::Icon | AssetKind::Background => {
                self.providers.search.as_deref().map(|p| (p, AssetSource::Search))
            }
            AssetKind::Chart | AssetKind::Diagram => self
                .providers
                .generative
                .as_deref()
                .map(|p| (p, AssetSource::Generative)),
        }
    }

    /// Never fails: provider absence, errors and undecodable responses all
    /// fall back to [`synth_fallback`].
    pub fn resolve(&self, spec: &PlaceholderSpec, seed: u64) -> ResolvedAsset {
        let key = CacheKey {
            alt: spec.alt.clone(),
            kind: spec.kind,
            dims: spec.dims(),
        };
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return ResolvedAsset {
                placeholder_id: spec.id(),
                ..hit.clone()
            };
        }
        let resolved = self.resolve_uncached(spec, &key, seed);
        let mut cache = self.cache.lock().expect("cache lock");
        // First write wins when two workers race on the same key.
        let stored = cache.entry(key).or_insert(resolved);
        ResolvedAsset {
            placeholder_id: spec.id(),
            ..stored.clone()
        }
    }

    fn resolve_uncached(&self, spec: &PlaceholderSpec, key: &CacheKey, seed: u64) -> ResolvedAsset {
        if let Some((source, provenance, image)) = self.load_disk(key) {
            return ResolvedAsset {
                placeholder_id: spec.id(),
                source,
                image: Arc::new(image),
                provenance,
            };
        }
        if let Some((provider, source)) = self.route(spec.kind) {
            let fetched = self.permits.run(|| provider.fetch(spec));
            match fetched
                .map_err(|e| e.to_string())
                .and_then(|bytes| RasterImage::from_encoded(&bytes).map_err(|e| e.to_string()))
            {
                Ok(image) => {
                    let asset = ResolvedAsset {
                        placeholder_id: spec.id(),
                        source,
                        image: Arc::new(image),
                        provenance: provider.provenance(spec),
                    };
                    self.store_disk(key, &asset);
                    return asset;
                }
                Err(cause) => log::warn!(
                    "provider {} failed for {:?}: {cause}; using fallback",
                    provider.name(),
                    spec.alt
                ),
            }
        }
        ResolvedAsset {
            placeholder_id: spec.id(),
            source: AssetSource::Fallback,
            image: Arc::new(synth_fallback(spec, seed)),
            provenance: format!("seed={seed}"),
        }
    }
}

/// Resolves with `resolver`; free-function form for single lookups.
pub fn resolve(spec: &PlaceholderSpec, resolver: &AssetResolver, seed: u64) -> ResolvedAsset {
    resolver.resolve(spec, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn spec(alt: &str, kind: AssetKind, w: Option<u32>, h: Option<u32>) -> PlaceholderSpec {
        PlaceholderSpec {
            path: NodePath(vec![1, 0]),
            alt: alt.into(),
            declared_w: w,
            declared_h: h,
            kind,
        }
    }

    struct Stub {
        calls: AtomicUsize,
        bytes: Option<Vec<u8>>,
    }

    impl AssetProvider for Stub {
        fn name(&self) -> &str {
            "stub"
        }
        fn fetch(&self, _: &PlaceholderSpec) -> Result<Vec<u8>, ProviderError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.bytes.clone().ok_or(ProviderError::Http("down".into()))
        }
    }

    #[test]
    fn placeholder_src_pattern() {
        assert!(is_placeholder_src(Some("placeholder")));
        assert!(is_placeholder_src(Some("placeholder.png")));
        assert!(is_placeholder_src(Some("img/hero.jpg")));
        assert!(is_placeholder_src(None));
        assert!(!is_placeholder_src(Some("https://example.com/a.png")));
        assert!(!is_placeholder_src(Some("data:image/png;base64,AA")));
    }

    #[test]
    fn dims_defaults() {
        assert_eq!(spec("a", AssetKind::Image, None, None).dims(), (200, 150));
        assert_eq!(spec("a", AssetKind::Image, Some(2), Some(2)).dims(), (2, 2));
        assert_eq!(spec("a", AssetKind::Image, Some(100), None).dims(), (100, 75));
    }

    #[test]
    fn fallback_is_deterministic_and_sized() {
        let s = spec("Fresh salad bowl", AssetKind::Image, Some(2), Some(2));
        let a = synth_fallback(&s, 1);
        assert_eq!((a.width, a.height), (2, 2));
        assert_eq!(a, synth_fallback(&s, 1));
        let big = spec("Fresh salad bowl", AssetKind::Icon, None, None);
        let img = synth_fallback(&big, 0);
        let (bg, fg) = fallback_colors("Fresh salad bowl");
        assert_eq!(img.pixel(0, 0), bg.to_array());
        assert_eq!(img.pixel(100, 75), fg.to_array());
    }

    #[test]
    fn hsl_background_has_fixed_saturation_and_lightness() {
        // hue 0 at S=0.5 L=0.7 is (217, 140, 140)
        assert_eq!(hsl_to_rgb(0.0, 0.5, 0.7), Rgba::opaque(217, 140, 140));
        assert_eq!(hsl_to_rgb(120.0, 0.5, 0.7), Rgba::opaque(140, 217, 140));
    }

    #[test]
    fn no_providers_means_fallback() {
        let r = AssetResolver::offline();
        let a = r.resolve(&spec("x", AssetKind::Chart, None, None), 3);
        assert_eq!(a.source, AssetSource::Fallback);
        assert_eq!(a.provenance, "seed=3");
    }

    #[test]
    fn routing_and_cache() {
        let png = RasterImage::filled(3, 3, Rgba::BLACK).to_png();
        let search = Arc::new(Stub {
            calls: AtomicUsize::new(0),
            bytes: Some(png),
        });
        struct Shared(Arc<Stub>);
        impl AssetProvider for Shared {
            fn name(&self) -> &str {
                "shared"
            }
            fn fetch(&self, s: &PlaceholderSpec) -> Result<Vec<u8>, ProviderError> {
                self.0.fetch(s)
            }
        }
        let r = AssetResolver::new(ProviderSet {
            search: Some(Box::new(Shared(search.clone()))),
            generative: Some(Box::new(Stub {
                calls: AtomicUsize::new(0),
                bytes: None,
            })),
        });
        let img = spec("Fresh salad bowl", AssetKind::Image, None, None);
        let a = r.resolve(&img, 0);
        assert_eq!(a.source, AssetSource::Search);
        let b = r.resolve(&img, 0);
        assert!(Arc::ptr_eq(&a.image, &b.image));
        assert_eq!(search.calls.load(Ordering::SeqCst), 1);
        // generative provider fails: charts fall back
        let chart = r.resolve(&spec("Sales", AssetKind::Chart, None, None), 0);
        assert_eq!(chart.source, AssetSource::Fallback);
    }

    #[test]
    fn undecodable_bytes_fall_back() {
        let r = AssetResolver::new(ProviderSet {
            search: Some(Box::new(Stub {
                calls: AtomicUsize::new(0),
                bytes: Some(b"not an image".to_vec()),
            })),
            generative: None,
        });
        assert_eq!(
            r.resolve(&spec("a", AssetKind::Icon, None, None), 0).source,
            AssetSource::Fallback
        );
    }

    #[test]
    fn disk_cache_survives_resolver() {
        let dir = tempfile::tempdir().unwrap();
        let png = RasterImage::filled(4, 4, Rgba::opaque(9, 8, 7)).to_png();
        let make = |bytes: Option<Vec<u8>>| {
            AssetResolver::new(ProviderSet {
                search: Some(Box::new(Stub {
                    calls: AtomicUsize::new(0),
                    bytes,
                })),
                generative: None,
            })
            .with_disk_cache(dir.path())
        };
        let s = spec("logo", AssetKind::Image, None, None);
        let first = make(Some(png)).resolve(&s, 0);
        let second = make(None).resolve(&s, 0);
        assert_eq!(second.source, AssetSource::Search);
        assert_eq!(first.image, second.image);
    }

    #[test]
    fn permits_bound_concurrency() {
        let permits = Arc::new(Permits::new(2));
        let active = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        std::thread::scope(|s| {
            for _ in 0..8 {
                let (permits, active, peak) = (permits.clone(), active.clone(), peak.clone());
                s.spawn(move || {
                    permits.run(|| {
                        let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                        peak.fetch_max(now, Ordering::SeqCst);
                        std::thread::sleep(Duration::from_millis(5));
                        active.fetch_sub(1, Ordering::SeqCst);
                    })
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
