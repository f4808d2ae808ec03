#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use structsynth::align::LexicalScorer;
use structsynth::assets::AssetResolver;
use structsynth::layout::{compute_layout, element_boxes, Viewport};
use structsynth::markup::parse_document;
use structsynth::quality::RepairRule;
use structsynth::schema::Domain;
use structsynth::synth::{self, GenerationConfig, PipelineConfig, PipelineOutput, StubClient};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub const FIXTURE_SEED: u64 = 7;

/// Runs the whole pipeline on the bundled stub corpus, in process.
pub fn fixture_run(domain: Domain) -> PipelineOutput {
    let client = StubClient::load(&fixtures_dir()).expect("stub fixtures load");
    let config = PipelineConfig {
        domain,
        count: 20,
        viewport: Viewport::for_domain(domain),
        threshold: structsynth::align::DEFAULT_THRESHOLD,
        generation: GenerationConfig {
            seed: FIXTURE_SEED,
            ..GenerationConfig::default()
        },
    };
    let pool = synth::thread_pool(Some(2));
    synth::run_pipeline(&config, &client, &AssetResolver::offline(), &LexicalScorer, &pool).expect("fixture pipeline")
}

// ---------------------------------------------------------------------------
// Layout oracle cases. Expected boxes are worked out by hand from the box
// model: 0.6 em glyph advance, 1.2 em lines, 16px default font, edges rounded
// half away from zero.

pub struct LayoutCase {
    pub name: &'static str,
    pub domain: Domain,
    pub html: &'static str,
    /// Labeled boxes in document order: (class, [x, y, w, h]).
    pub expected: &'static [(&'static str, [u32; 4])],
}

pub fn layout_cases() -> Vec<LayoutCase> {
    vec![
        LayoutCase {
            name: "block stack with padding and margins",
            domain: Domain::Ui,
            html: r#"<body>
<div data-type="upper taskbar" style="height:24px;padding:6px 16px"></div>
<div data-type="image" style="height:100px;margin:10px 20px"></div>
<div data-type="text button" style="width:200px;height:48px;margin-top:8px"></div>
</body>"#,
            // 24 + 2*6 = 36 tall; second at 36 + 10; third at 46 + 100 + 10 + 8.
            expected: &[
                ("upper taskbar", [0, 0, 628, 36]),
                ("image", [20, 46, 588, 100]),
                ("text button", [0, 164, 200, 48]),
            ],
        },
        LayoutCase {
            name: "flex row with gap",
            domain: Domain::Ui,
            html: r#"<body><div style="display:flex;gap:12px;padding:16px">
<div data-type="icon" style="width:48px;height:48px"></div>
<div data-type="icon" style="width:48px;height:48px"></div>
<div data-type="text button" style="width:100px;height:40px"></div>
</div></body>"#,
            // x = 16, 16 + 48 + 12, 76 + 48 + 12
            expected: &[
                ("icon", [16, 16, 48, 48]),
                ("icon", [76, 16, 48, 48]),
                ("text button", [136, 16, 100, 40]),
            ],
        },
        LayoutCase {
            name: "flex column with gap, centered",
            domain: Domain::Ui,
            html: r#"<body><div style="display:flex;flex-direction:column;gap:10px;align-items:center;width:300px">
<div data-type="text button" style="width:100px;height:40px"></div>
<div data-type="input field" style="width:200px;height:30px"></div>
</div></body>"#,
            // (300 - 100) / 2 = 100; (300 - 200) / 2 = 50; second at 40 + 10.
            expected: &[("text button", [100, 0, 100, 40]), ("input field", [50, 50, 200, 30])],
        },
        LayoutCase {
            name: "absolute boxes in a relative container",
            domain: Domain::Ui,
            html: r#"<body><div style="position:relative;margin:20px;height:200px">
<div data-type="popup window" style="position:absolute;left:10px;top:30px;width:100px;height:50px"></div>
<div data-type="icon" style="position:absolute;right:0px;bottom:0px;width:44px;height:44px"></div>
</div></body>"#,
            // container at (20, 20) 588x200; icon at 20 + 588 - 44, 20 + 200 - 44.
            expected: &[("popup window", [30, 50, 100, 50]), ("icon", [564, 176, 44, 44])],
        },
        LayoutCase {
            name: "percentage widths and margins",
            domain: Domain::Ui,
            html: r#"<body style="padding:0 14px">
<div data-type="image" style="width:50%;height:10px"></div>
<div style="width:50%"><div data-type="text button" style="width:25%;height:20px"></div></div>
<div data-type="switch" style="margin-left:10%;width:52px;height:32px"></div>
</body>"#,
            // content width 600: 300; 300 * 25% = 75; margin 60.
            expected: &[
                ("image", [14, 0, 300, 10]),
                ("text button", [14, 10, 75, 20]),
                ("switch", [74, 30, 52, 32]),
            ],
        },
        LayoutCase {
            name: "text wraps greedily at 0.6 em",
            domain: Domain::Ui,
            html: r#"<body><p data-type="text" style="width:100px;font-size:10px">aaaa bbbb cccc dddd</p></body>"#,
            // advance 6: "aaaa bbbb cccc" = 84, adding " dddd" = 114 > 100; two 12px lines.
            expected: &[("text", [0, 0, 100, 24])],
        },
        LayoutCase {
            name: "inline-block shrinks to its text",
            domain: Domain::Ui,
            html: r#"<body><span data-type="text" style="font-size:20px;padding:4px 8px">Hello world</span></body>"#,
            // 11 glyphs * 12 = 132 + 16 padding; one 24px line + 8 padding.
            expected: &[("text", [0, 0, 148, 32])],
        },
        LayoutCase {
            name: "image sizing defaults",
            domain: Domain::Ui,
            html: r#"<body>
<img data-type="image" src="a.png" alt="a">
<img data-type="image" src="b.png" alt="b" width="120">
<img data-type="image" src="c.png" alt="c" height="60">
</body>"#,
            // auto-fit 200x150; 120 -> 90 tall; 60 tall -> 80 wide.
            expected: &[
                ("image", [0, 0, 200, 150]),
                ("image", [0, 150, 120, 90]),
                ("image", [0, 240, 80, 60]),
            ],
        },
        LayoutCase {
            name: "input sized by its placeholder",
            domain: Domain::Ui,
            html: r#"<body><input data-type="input field" placeholder="Email" style="padding:0 16px;height:48px"></body>"#,
            // 5 glyphs * 9.6 = 48 + 32 padding.
            expected: &[("input field", [0, 0, 80, 48])],
        },
        LayoutCase {
            name: "space-between distributes free space",
            domain: Domain::Ui,
            html: r#"<body><div style="display:flex;justify-content:space-between">
<div data-type="text button" style="width:100px;height:20px"></div>
<div data-type="text button" style="width:100px;height:20px"></div>
<div data-type="text button" style="width:100px;height:20px"></div>
</div></body>"#,
            // free 328, 164 between items.
            expected: &[
                ("text button", [0, 0, 100, 20]),
                ("text button", [264, 0, 100, 20]),
                ("text button", [528, 0, 100, 20]),
            ],
        },
        LayoutCase {
            name: "stretch fills the line of a fixed-height row",
            domain: Domain::Ui,
            html: r#"<body><div style="display:flex;height:80px">
<div data-type="text button" style="width:120px"></div>
<div data-type="icon" style="width:44px;height:44px"></div>
</div></body>"#,
            expected: &[("text button", [0, 0, 120, 80]), ("icon", [120, 0, 44, 44])],
        },
        LayoutCase {
            name: "cross-axis centering",
            domain: Domain::Ui,
            html: r#"<body><div style="display:flex;height:100px;align-items:center">
<div data-type="icon" style="width:44px;height:44px"></div>
<div data-type="text button" style="width:100px;height:50px"></div>
</div></body>"#,
            // (100 - 44) / 2 = 28; (100 - 50) / 2 = 25.
            expected: &[("icon", [0, 28, 44, 44]), ("text button", [44, 25, 100, 50])],
        },
        LayoutCase {
            name: "auto margins center a block",
            domain: Domain::Ui,
            html: r#"<body><div data-type="text button" style="width:240px;height:52px;margin:24px auto"></div></body>"#,
            // (628 - 240) / 2 = 194.
            expected: &[("text button", [194, 24, 240, 52])],
        },
        LayoutCase {
            name: "half-pixel edges round away from zero",
            domain: Domain::Ui,
            html: r#"<body><div style="display:flex;justify-content:center">
<div data-type="icon" style="width:45px;height:45px"></div>
</div></body>"#,
            // lead (628 - 45) / 2 = 291.5: edges 291.5 -> 292 and 336.5 -> 337.
            expected: &[("icon", [292, 0, 45, 45])],
        },
        LayoutCase {
            name: "slide title with margins",
            domain: Domain::Slide,
            html: r#"<body><h1 data-type="title" style="margin:24px 48px;font-size:40px">Big Title</h1></body>"#,
            // 1280 - 96 wide; one 48px line.
            expected: &[("title", [48, 24, 1184, 48])],
        },
        LayoutCase {
            name: "relative offset shifts without reflow",
            domain: Domain::Ui,
            html: r#"<body><div style="height:20px"></div>
<div data-type="text button" style="position:relative;left:10px;top:-5px;width:100px;height:40px"></div>
<div data-type="icon" style="width:44px;height:44px"></div></body>"#,
            // the icon still starts at 20 + 40.
            expected: &[("text button", [10, 15, 100, 40]), ("icon", [0, 60, 44, 44])],
        },
        LayoutCase {
            name: "off-viewport boxes are clipped",
            domain: Domain::Ui,
            html: r#"<body><div data-type="popup window" style="position:absolute;left:-50px;top:10px;width:100px;height:20px"></div></body>"#,
            expected: &[("popup window", [0, 10, 50, 20])],
        },
    ]
}

/// Returns a description of every mismatch; empty when the case holds.
pub fn check_layout_case(case: &LayoutCase) -> Vec<String> {
    let doc = match parse_document(case.html, case.domain) {
        Ok((doc, _)) => doc,
        Err(e) => return vec![format!("{}: parse error {e}", case.name)],
    };
    let vp = Viewport::for_domain(case.domain);
    let tree = compute_layout(&doc, vp);
    let got: Vec<(String, [u32; 4])> = element_boxes(&tree, &doc, vp)
        .into_iter()
        .map(|b| (b.class, b.bbox.as_array()))
        .collect();
    let want: Vec<(String, [u32; 4])> = case.expected.iter().map(|(c, b)| (c.to_string(), *b)).collect();
    if got == want {
        Vec::new()
    } else {
        vec![format!("{}: expected {want:?}, got {got:?}", case.name)]
    }
}

// ---------------------------------------------------------------------------
// Random documents for fuzzing repair and parsing.

pub struct FuzzDoc {
    pub html: String,
    pub domain: Domain,
    pub injected: Vec<RepairRule>,
}

const CSS_DECLS: &[&str] = &[
    "color: #333",
    "font-size: 18px",
    "margin: 0",
    "padding: 4px 8px",
    "background-color: #fafafa",
    "display: flex",
    "gap: 12px",
];

fn metadata_decl(rng: &mut ChaCha8Rng, class: &str) -> String {
    let name = ["data-type", "DATA-TYPE", "Data-Type"].choose(rng).unwrap();
    let sep = [":", " : ", "=", " = "].choose(rng).unwrap();
    let value = if rng.gen_bool(0.5) {
        format!("\"{class}\"")
    } else {
        class.to_string()
    };
    let comment = if rng.gen_bool(0.2) { "/* label */ " } else { "" };
    format!("{comment}{name}{sep}{value}")
}

fn style_block(rng: &mut ChaCha8Rng, classes: &[&str], inject: bool) -> String {
    let rules = rng.gen_range(1..=3);
    let target = rng.gen_range(0..rules);
    let mut css = String::new();
    for r in 0..rules {
        let mut decls: Vec<String> = (0..rng.gen_range(0..=3))
            .map(|_| CSS_DECLS.choose(rng).unwrap().to_string())
            .collect();
        if inject && r == target {
            let at = rng.gen_range(0..=decls.len());
            let class = *classes.choose(rng).unwrap();
            decls.insert(at, metadata_decl(rng, class));
        }
        let trailing = if rng.gen_bool(0.5) { ";" } else { "" };
        css.push_str(&format!(".c{r} {{ {}{trailing} }}\n", decls.join("; ")));
    }
    css
}

fn element(rng: &mut ChaCha8Rng, domain: Domain, depth: u32, allow_img_defect: &mut bool) -> String {
    let classes: &[&str] = match domain {
        Domain::Slide => &["title", "text box", "header", "footer", "table"],
        Domain::Ui => &["text", "text button", "icon", "switch", "input field", "checked view"],
    };
    let class = classes.choose(rng).unwrap();
    let w = rng.gen_range(20..300);
    let h = rng.gen_range(10..120);
    match rng.gen_range(0..5) {
        0 => {
            let (w_attr, h_attr) = if *allow_img_defect {
                *allow_img_defect = false;
                match rng.gen_range(0..3) {
                    0 => (String::new(), String::new()),
                    1 => (format!(" width=\"{w}\""), String::new()),
                    _ => (String::new(), format!(" style=\"height:{h}px\"")),
                }
            } else {
                (format!(" width=\"{w}\""), format!(" height=\"{h}\""))
            };
            format!(r#"<img data-type="image" src="p{w}.png" alt="picture {w} by {h}"{w_attr}{h_attr}>"#)
        }
        1 if depth < 3 => {
            let n = rng.gen_range(1..4);
            let kids: String = (0..n)
                .map(|_| element(rng, domain, depth + 1, allow_img_defect))
                .collect();
            let flex = if rng.gen_bool(0.5) { "display:flex;gap:8px;" } else { "" };
            format!(r#"<div style="{flex}padding:{}px">{kids}</div>"#, rng.gen_range(0..20))
        }
        2 => format!(
            r#"<p data-type="{class}" style="font-size:{}px">word{w} and text{h}</p>"#,
            rng.gen_range(12..40)
        ),
        _ => format!(
            r#"<div data-type="{class}" style="width:{w}px;height:{h}px;background-color:#{:06x}"></div>"#,
            rng.gen_range(0..0xffffffu32)
        ),
    }
}

/// A valid document, optionally carrying each defect with probability 1/2.
pub fn fuzz_doc(seed: u64, with_defects: bool) -> FuzzDoc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = if rng.gen_bool(0.5) { Domain::Ui } else { Domain::Slide };
    let mut injected = Vec::new();
    let mut want = |rng: &mut ChaCha8Rng, rule| {
        let on = with_defects && rng.gen_bool(0.5);
        if on {
            injected.push(rule);
        }
        on
    };
    let h1 = want(&mut rng, RepairRule::BackgroundFill);
    let mut h2 = want(&mut rng, RepairRule::ImageDims);
    let h3 = domain == Domain::Ui && want(&mut rng, RepairRule::MenuOpen);
    let h4 = want(&mut rng, RepairRule::CssMetadata);

    let labels: &[&str] = match domain {
        Domain::Slide => &["title", "text box", "chart"],
        Domain::Ui => &["text", "icon", "text button"],
    };
    let screen = match domain {
        Domain::Slide => "law",
        Domain::Ui => "login",
    };
    let css = style_block(&mut rng, labels, h4);
    let mut body = String::new();
    let n = rng.gen_range(1..8);
    let menu_at = rng.gen_range(0..=n);
    // A defect only counts as injected if its carrier is actually emitted.
    let mut img_emitted_with_defect = false;
    for i in 0..n {
        if h3 && i == menu_at {
            body.push_str(&menu(&mut rng));
        }
        let before = h2;
        body.push_str(&element(&mut rng, domain, 0, &mut h2));
        if before && !h2 {
            img_emitted_with_defect = true;
        }
    }
    if h3 && menu_at == n {
        body.push_str(&menu(&mut rng));
    }
    if injected.contains(&RepairRule::ImageDims) && !img_emitted_with_defect {
        body.push_str(r#"<img data-type="image" src="late.png" alt="late picture">"#);
    }
    let body_style = if h1 {
        "margin:0;background-color:#ffffff;background-image:url(texture.png)"
    } else {
        "margin:0"
    };
    let html = format!(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta name=\"screentype\" content=\"{screen}\">\n<style>\n{css}</style>\n</head>\n<body style=\"{body_style}\">\n{body}\n</body>\n</html>\n"
    );
    FuzzDoc { html, domain, injected }
}

fn menu(rng: &mut ChaCha8Rng) -> String {
    let left = -rng.gen_range(1..400);
    let top = rng.gen_range(0..1600);
    format!(
        r#"<div data-type="sliding menu" style="display:none;position:absolute;left:{left}px;top:{top}px;width:280px;height:600px"><p data-type="text">Home</p></div>"#
    )
}
