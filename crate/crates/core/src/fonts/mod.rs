//! Procedural generator of attributed letter images.
//!
//! Five attribute classes: letter, size, font color, background color, style.
//! Rendering is deterministic, the ground-truth image for any tuple is the
//! renderer itself, and a full dataset is one PNG per admissible tuple plus a
//! JSON Lines manifest.

pub mod glyphs;
pub mod render;
pub mod split;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::gsl::{AttributedDataset, SampleRecord};
use crate::schema::{AttributeClass, AttributeSchema};

pub use glyphs::GlyphBitmap;
pub use render::{glyph_mask, style_from_name, StyleParams};
pub use split::{plan_split, SplitMode};

/// The ten named colors, RGB values fixed once and recorded in every
/// manifest header.
pub const PALETTE: &[(&str, [u8; 3])] = &[
    ("red", [255, 0, 0]),
    ("orange", [255, 165, 0]),
    ("yellow", [255, 255, 0]),
    ("green", [0, 128, 0]),
    ("cyan", [0, 255, 255]),
    ("blue", [0, 0, 255]),
    ("purple", [128, 0, 128]),
    ("pink", [255, 192, 203]),
    ("chocolate", [210, 105, 30]),
    ("silver", [192, 192, 192]),
];

pub fn palette_rgb(name: &str) -> Result<[u8; 3]> {
    PALETTE
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, rgb)| *rgb)
        .ok_or_else(|| Error::UnknownValue { class: "color".into(), value: name.into() })
}

/// Per-letter binary bitmaps plus the style transform machinery.
pub struct GlyphAtlas {
    bitmaps: BTreeMap<char, GlyphBitmap>,
}

impl GlyphAtlas {
    pub fn embedded() -> Self {
        let bitmaps = glyphs::GLYPHS
            .iter()
            .map(|(c, art)| (*c, GlyphBitmap::from_art(art)))
            .collect();
        Self { bitmaps }
    }

    pub fn bitmap(&self, letter: char) -> Result<&GlyphBitmap> {
        self.bitmaps.get(&letter).ok_or_else(|| Error::UnknownValue {
            class: "letter".into(),
            value: letter.to_string(),
        })
    }
}

impl Default for GlyphAtlas {
    fn default() -> Self {
        Self::embedded()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeSpec {
    pub name: String,
    pub px: usize,
}

#[derive(Clone, Debug)]
pub struct FontsConfig {
    pub letters: Vec<char>,
    pub sizes: Vec<SizeSpec>,
    pub font_colors: Vec<String>,
    pub background_colors: Vec<String>,
    pub styles: Vec<String>,
    pub extent: usize,
    /// Tuples whose font color equals the background color render an
    /// invisible glyph; they are denied unless this flag allows them.
    pub allow_equal_colors: bool,
}

impl FontsConfig {
    /// The desk-scale configuration: 10 letters x 3 sizes x 4 font colors x
    /// 4 background colors x 3 styles at 32x32, 1440 combinations.
    pub fn mini() -> Self {
        Self {
            letters: ('A'..='J').collect(),
            sizes: vec![
                SizeSpec { name: "small".into(), px: 14 },
                SizeSpec { name: "medium".into(), px: 19 },
                SizeSpec { name: "large".into(), px: 24 },
            ],
            font_colors: ["red", "orange", "yellow", "green"].map(String::from).to_vec(),
            background_colors: ["blue", "purple", "pink", "chocolate"].map(String::from).to_vec(),
            styles: ["regular", "bold", "italic"].map(String::from).to_vec(),
            extent: 32,
            allow_equal_colors: false,
        }
    }

    /// Plain-text `key=value` config, `#` comments, unknown keys rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::mini();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got {line:?}", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "letters" => cfg.letters = value.chars().filter(|c| !c.is_whitespace()).collect(),
                "sizes" => {
                    cfg.sizes = value
                        .split(',')
                        .map(|item| {
                            let item = item.trim();
                            let (name, px) = item.split_once(':').ok_or_else(|| {
                                Error::Config(format!("size {item:?}: expected name:pixels"))
                            })?;
                            Ok(SizeSpec {
                                name: name.trim().to_string(),
                                px: px.trim().parse().map_err(|_| {
                                    Error::Config(format!("size {item:?}: bad pixel count"))
                                })?,
                            })
                        })
                        .collect::<Result<_>>()?;
                }
                "font_colors" => cfg.font_colors = split_list(value),
                "background_colors" => cfg.background_colors = split_list(value),
                "styles" => cfg.styles = split_list(value),
                "extent" => {
                    cfg.extent = value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad extent {value:?}")))?
                }
                "allow_equal_colors" => {
                    cfg.allow_equal_colors = value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad allow_equal_colors {value:?}")))?
                }
                other => return Err(Error::Config(format!("unknown config key {other:?}"))),
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        for (name, list_len) in [
            ("letters", self.letters.len()),
            ("sizes", self.sizes.len()),
            ("font_colors", self.font_colors.len()),
            ("background_colors", self.background_colors.len()),
            ("styles", self.styles.len()),
        ] {
            if list_len == 0 {
                return Err(Error::Config(format!("empty value list for {name}")));
            }
        }
        for color in self.font_colors.iter().chain(&self.background_colors) {
            palette_rgb(color)?;
        }
        for size in &self.sizes {
            if size.px == 0 || size.px > self.extent {
                return Err(Error::Config(format!(
                    "size {:?} ({} px) must lie in [1, extent {}]",
                    size.name, size.px, self.extent
                )));
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> Result<AttributeSchema> {
        AttributeSchema::new(vec![
            AttributeClass {
                name: "letter".into(),
                values: self.letters.iter().map(|c| c.to_string()).collect(),
            },
            AttributeClass {
                name: "size".into(),
                values: self.sizes.iter().map(|s| s.name.clone()).collect(),
            },
            AttributeClass { name: "font_color".into(), values: self.font_colors.clone() },
            AttributeClass {
                name: "background_color".into(),
                values: self.background_colors.clone(),
            },
            AttributeClass { name: "style".into(), values: self.styles.clone() },
        ])
    }

    /// Colors referenced by this config, resolved to RGB.
    pub fn color_table(&self) -> Result<BTreeMap<String, [u8; 3]>> {
        let mut table = BTreeMap::new();
        for name in self.font_colors.iter().chain(&self.background_colors) {
            table.insert(name.clone(), palette_rgb(name)?);
        }
        Ok(table)
    }
}

fn split_list(value: &str) -> Vec<String> {
    value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// All admissible tuples in lexicographic order over (letter, size,
/// font color, background color, style). Tuples with font color equal to
/// background color are denied unless the config allows them.
pub fn enumerate_combinations(config: &FontsConfig) -> Result<Vec<Vec<u16>>> {
    config.check()?;
    let cards = [
        config.letters.len(),
        config.sizes.len(),
        config.font_colors.len(),
        config.background_colors.len(),
        config.styles.len(),
    ];
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut tuple = [0usize; 5];
    for _ in 0..total {
        let denied = !config.allow_equal_colors
            && config.font_colors[tuple[2]] == config.background_colors[tuple[3]];
        if !denied {
            out.push(tuple.iter().map(|&v| v as u16).collect());
        }
        // increment mixed-radix counter, least significant class last
        for j in (0..5).rev() {
            tuple[j] += 1;
            if tuple[j] < cards[j] {
                break;
            }
            tuple[j] = 0;
        }
    }
    Ok(out)
}

/// Rasterize one attribute tuple under a config.
pub fn render(tuple: &[u16], config: &FontsConfig, atlas: &GlyphAtlas) -> Result<Tensor> {
    if tuple.len() != 5 {
        return Err(Error::Dimension {
            axis: 0,
            expected: 5,
            actual: tuple.len(),
            context: "fonts tuple length".into(),
        });
    }
    let letter = *config
        .letters
        .get(tuple[0] as usize)
        .ok_or_else(|| Error::UnknownValue { class: "letter".into(), value: format!("#{}", tuple[0]) })?;
    let size = config
        .sizes
        .get(tuple[1] as usize)
        .ok_or_else(|| Error::UnknownValue { class: "size".into(), value: format!("#{}", tuple[1]) })?;
    let fc = config
        .font_colors
        .get(tuple[2] as usize)
        .ok_or_else(|| Error::UnknownValue { class: "font_color".into(), value: format!("#{}", tuple[2]) })?;
    let bc = config
        .background_colors
        .get(tuple[3] as usize)
        .ok_or_else(|| Error::UnknownValue { class: "background_color".into(), value: format!("#{}", tuple[3]) })?;
    let style_name = config
        .styles
        .get(tuple[4] as usize)
        .ok_or_else(|| Error::UnknownValue { class: "style".into(), value: format!("#{}", tuple[4]) })?;

    let style = style_from_name(style_name)?;
    let mask = glyph_mask(atlas, letter, size.px, style)?;
    render::render_mask_on_canvas(&mask, config.extent, palette_rgb(fc)?, palette_rgb(bc)?)
}

pub fn tuple_file_name(tuple: &[u16]) -> String {
    format!(
        "L{:02}S{}F{}B{}T{}.png",
        tuple[0], tuple[1], tuple[2], tuple[3], tuple[4]
    )
}

/// Write a `[3,E,E]` image in [0,1] as an 8-bit RGB PNG.
pub fn save_png(img: &Tensor, path: &Path) -> Result<()> {
    let (h, w) = (img.shape()[1], img.shape()[2]);
    let plane = h * w;
    let data = img.data();
    let mut raw = Vec::with_capacity(3 * plane);
    for px in 0..plane {
        for c in 0..3 {
            raw.push((data[c * plane + px] * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    let buf: image::RgbImage = image::ImageBuffer::from_raw(w as u32, h as u32, raw)
        .expect("raw buffer sized from shape");
    buf.save(path)?;
    Ok(())
}

pub fn load_png(path: &Path) -> Result<Tensor> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let plane = h * w;
    let mut data = vec![0.0f32; 3 * plane];
    for (px, pixel) in img.pixels().enumerate() {
        for c in 0..3 {
            data[c * plane + px] = pixel.0[c] as f32 / 255.0;
        }
    }
    Tensor::new(vec![3, h, w], data)
}

/// Render every admissible tuple to `<out>/<name>.png` and write
/// `<out>/manifest.jsonl`. A partial run leaves `<out>/.incomplete` behind;
/// regeneration is idempotent.
pub fn generate_dataset(
    config: &FontsConfig,
    atlas: &GlyphAtlas,
    out: &Path,
) -> Result<AttributedDataset> {
    config.check()?;
    std::fs::create_dir_all(out)?;
    let sentinel = out.join(".incomplete");
    std::fs::write(&sentinel, b"generation in progress\n")?;

    let tuples = enumerate_combinations(config)?;
    tuples
        .par_iter()
        .map(|tuple| {
            let img = render(tuple, config, atlas)?;
            save_png(&img, &out.join(tuple_file_name(tuple)))
        })
        .collect::<Result<Vec<()>>>()?;

    let samples: Vec<SampleRecord> = tuples
        .iter()
        .map(|t| SampleRecord { file: tuple_file_name(t), attrs: t.clone() })
        .collect();
    let ds = AttributedDataset::new(
        config.schema()?,
        samples,
        config.color_table()?,
        config.extent,
        out.to_path_buf(),
    )?;
    ds.write_manifest(&out.join("manifest.jsonl"))?;
    std::fs::remove_file(&sentinel)?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_scale_combination_count() {
        let cfg = FontsConfig {
            letters: ('A'..='Z').chain('a'..='z').collect(),
            sizes: vec![
                SizeSpec { name: "small".into(), px: 80 },
                SizeSpec { name: "medium".into(), px: 100 },
                SizeSpec { name: "large".into(), px: 120 },
            ],
            font_colors: PALETTE.iter().map(|(n, _)| n.to_string()).collect(),
            background_colors: PALETTE.iter().map(|(n, _)| n.to_string()).collect(),
            styles: (0..100).map(|i| format!("style{i}")).collect(),
            extent: 128,
            allow_equal_colors: true,
        };
        assert_eq!(enumerate_combinations(&cfg).unwrap().len(), 1_560_000);
    }

    #[test]
    fn mini_combination_count_and_lex_order() {
        let cfg = FontsConfig::mini();
        let tuples = enumerate_combinations(&cfg).unwrap();
        assert_eq!(tuples.len(), 1440);
        for pair in tuples.windows(2) {
            assert!(pair[0] < pair[1], "not lexicographic: {pair:?}");
        }
    }

    #[test]
    fn equal_color_tuples_are_denied_by_default() {
        let mut cfg = FontsConfig::mini();
        cfg.background_colors = cfg.font_colors.clone();
        let denied = enumerate_combinations(&cfg).unwrap();
        // 10 * 3 * (4*4 - 4) * 3
        assert_eq!(denied.len(), 1080);
        cfg.allow_equal_colors = true;
        assert_eq!(enumerate_combinations(&cfg).unwrap().len(), 1440);
    }

    #[test]
    fn degenerate_single_value_config_yields_one_tuple() {
        let cfg = FontsConfig {
            letters: vec!['A'],
            sizes: vec![SizeSpec { name: "s".into(), px: 12 }],
            font_colors: vec!["red".into()],
            background_colors: vec!["blue".into()],
            styles: vec!["regular".into()],
            extent: 16,
            allow_equal_colors: false,
        };
        assert_eq!(enumerate_combinations(&cfg).unwrap(), vec![vec![0, 0, 0, 0, 0]]);
    }

    #[test]
    fn empty_value_list_is_an_error() {
        let mut cfg = FontsConfig::mini();
        cfg.styles.clear();
        assert!(enumerate_combinations(&cfg).is_err());
    }

    #[test]
    fn render_is_deterministic_and_background_exact() {
        let cfg = FontsConfig::mini();
        let atlas = GlyphAtlas::embedded();
        let tuple = vec![2u16, 1, 0, 2, 1];
        let a = render(&tuple, &cfg, &atlas).unwrap();
        let b = render(&tuple, &cfg, &atlas).unwrap();
        assert_eq!(a.data(), b.data());
        // corner pixel is background by construction: pink = (255,192,203)
        let plane = 32 * 32;
        assert_eq!(a.data()[0], 1.0);
        assert_eq!(a.data()[plane], 192.0 / 255.0);
        assert_eq!(a.data()[2 * plane], 203.0 / 255.0);
    }

    #[test]
    fn letters_differ_only_inside_their_bounding_boxes() {
        let cfg = FontsConfig::mini();
        let atlas = GlyphAtlas::embedded();
        let style = style_from_name("regular").unwrap();
        let size = cfg.sizes[2].px;
        let t1 = vec![0u16, 2, 0, 0, 0];
        let t2 = vec![7u16, 2, 0, 0, 0];
        let a = render(&t1, &cfg, &atlas).unwrap();
        let b = render(&t2, &cfg, &atlas).unwrap();

        let bbox = |letter: char| -> (usize, usize, usize, usize) {
            let mask = glyph_mask(&atlas, letter, size, style).unwrap();
            let x0 = (32 - mask.width) / 2;
            let y0 = (32 - mask.height) / 2;
            (x0, y0, mask.width, mask.height)
        };
        let boxes = [bbox('A'), bbox('H')];
        let plane = 32 * 32;
        for y in 0..32 {
            for x in 0..32 {
                let differs = (0..3).any(|c| {
                    a.data()[c * plane + y * 32 + x] != b.data()[c * plane + y * 32 + x]
                });
                if differs {
                    let inside = boxes.iter().any(|&(x0, y0, w, h)| {
                        x >= x0 && x < x0 + w && y >= y0 && y < y0 + h
                    });
                    assert!(inside, "pixel ({x},{y}) differs outside both glyph boxes");
                }
            }
        }
    }

    #[test]
    fn unknown_attribute_value_is_an_error() {
        let cfg = FontsConfig::mini();
        let atlas = GlyphAtlas::embedded();
        assert!(matches!(
            render(&[0, 0, 9, 0, 0], &cfg, &atlas),
            Err(Error::UnknownValue { .. })
        ));
        let mut bad = cfg.clone();
        bad.styles = vec!["zigzag".into()];
        assert!(matches!(
            render(&[0, 0, 0, 0, 0], &bad, &atlas),
            Err(Error::UnknownValue { .. })
        ));
    }

    #[test]
    fn config_parse_roundtrip_and_unknown_key() {
        let text = "\
letters=ABC
sizes=small:10, large:20
font_colors=red, green
background_colors=blue, yellow
styles=regular, bold-outline
extent=24
allow_equal_colors=true
";
        let cfg = FontsConfig::parse(text).unwrap();
        assert_eq!(cfg.letters, vec!['A', 'B', 'C']);
        assert_eq!(cfg.sizes[1], SizeSpec { name: "large".into(), px: 20 });
        assert_eq!(cfg.extent, 24);
        assert!(cfg.allow_equal_colors);
        assert!(FontsConfig::parse("speed=11\n").is_err());
    }
}
