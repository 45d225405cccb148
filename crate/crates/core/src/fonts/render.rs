//! Deterministic glyph rasterization.
//!
//! A style is a parametric transform triple (weight, slant, outline) composed
//! onto the base bitmap: weight operates on the base grid, the bitmap is then
//! scaled by nearest neighbor so its bounding box height equals the requested
//! size, sheared at target resolution, and optionally reduced to its border.
//! Rendering is a pure function of (tuple, config, atlas); no RNG anywhere.

use super::glyphs::{crop, GlyphBitmap};
use super::GlyphAtlas;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    Thin,
    Regular,
    Bold,
}

/// Rows shift horizontally by slant * (height - 1 - y) / 4 pixels.
pub type Slant = i8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StyleParams {
    pub weight: Weight,
    pub slant: Slant,
    pub outline: bool,
}

/// Style grammar: `[thin|regular|bold][-italic|-backslant][-outline]`, with
/// `italic` and `outline` alone implying regular weight. 18 combinations.
pub fn style_from_name(name: &str) -> Result<StyleParams> {
    let mut weight = None;
    let mut slant: Slant = 0;
    let mut outline = false;
    for token in name.split('-') {
        match token {
            "thin" | "regular" | "bold" if weight.is_none() => {
                weight = Some(match token {
                    "thin" => Weight::Thin,
                    "bold" => Weight::Bold,
                    _ => Weight::Regular,
                });
            }
            "italic" if slant == 0 => slant = 1,
            "backslant" if slant == 0 => slant = -1,
            "outline" if !outline => outline = true,
            _ => {
                return Err(Error::UnknownValue {
                    class: "style".into(),
                    value: name.into(),
                })
            }
        }
    }
    Ok(StyleParams { weight: weight.unwrap_or(Weight::Regular), slant, outline })
}

fn apply_weight(g: &GlyphBitmap, weight: Weight) -> GlyphBitmap {
    match weight {
        Weight::Regular => g.clone(),
        Weight::Bold => {
            // dilate one pixel rightward
            let w = g.width + 1;
            let mut bits = vec![false; w * g.height];
            for y in 0..g.height {
                for x in 0..g.width {
                    if g.get(y, x) {
                        bits[y * w + x] = true;
                        bits[y * w + x + 1] = true;
                    }
                }
            }
            GlyphBitmap { width: w, height: g.height, bits }
        }
        Weight::Thin => {
            // erode: keep ink whose right neighbor is also ink
            let mut bits = vec![false; g.width * g.height];
            for y in 0..g.height {
                for x in 0..g.width {
                    if g.get(y, x) && x + 1 < g.width && g.get(y, x + 1) {
                        bits[y * g.width + x] = true;
                    }
                }
            }
            let eroded = crop(GlyphBitmap { width: g.width, height: g.height, bits });
            // a glyph erased by erosion keeps its regular weight
            if eroded.height == 0 {
                g.clone()
            } else {
                eroded
            }
        }
    }
}

/// Nearest-neighbor scale of the bounding box to exactly `height` pixels.
fn scale_to_height(g: &GlyphBitmap, height: usize) -> GlyphBitmap {
    let width = ((g.width * height + g.height / 2) / g.height).max(1);
    let mut bits = vec![false; width * height];
    for ty in 0..height {
        let sy = ty * g.height / height;
        for tx in 0..width {
            let sx = tx * g.width / width;
            bits[ty * width + tx] = g.get(sy, sx);
        }
    }
    GlyphBitmap { width, height, bits }
}

fn apply_slant(g: &GlyphBitmap, slant: Slant) -> GlyphBitmap {
    if slant == 0 || g.height == 0 {
        return g.clone();
    }
    let max_shift = (g.height - 1) / 4;
    let w = g.width + max_shift;
    let mut bits = vec![false; w * g.height];
    for y in 0..g.height {
        let amount = (g.height - 1 - y) / 4;
        let offset = if slant > 0 { amount } else { max_shift - amount };
        for x in 0..g.width {
            if g.get(y, x) {
                bits[y * w + x + offset] = true;
            }
        }
    }
    crop(GlyphBitmap { width: w, height: g.height, bits })
}

fn apply_outline(g: &GlyphBitmap) -> GlyphBitmap {
    let mut bits = vec![false; g.width * g.height];
    for y in 0..g.height {
        for x in 0..g.width {
            if !g.get(y, x) {
                continue;
            }
            let interior = y > 0
                && y + 1 < g.height
                && x > 0
                && x + 1 < g.width
                && g.get(y - 1, x)
                && g.get(y + 1, x)
                && g.get(y, x - 1)
                && g.get(y, x + 1);
            if !interior {
                bits[y * g.width + x] = true;
            }
        }
    }
    GlyphBitmap { width: g.width, height: g.height, bits }
}

/// The styled, scaled glyph mask; its bounding-box height equals `size`.
pub fn glyph_mask(
    atlas: &GlyphAtlas,
    letter: char,
    size: usize,
    style: StyleParams,
) -> Result<GlyphBitmap> {
    let base = atlas.bitmap(letter)?;
    let weighted = apply_weight(base, style.weight);
    let scaled = scale_to_height(&weighted, size);
    let sheared = apply_slant(&scaled, style.slant);
    let final_mask = if style.outline { apply_outline(&sheared) } else { sheared };
    Ok(final_mask)
}

/// Rasterize one attribute tuple to a `[3, extent, extent]` image in [0, 1]:
/// uniform background, glyph pixels in the font color, glyph centered.
pub fn render_mask_on_canvas(
    mask: &GlyphBitmap,
    extent: usize,
    font_rgb: [u8; 3],
    bg_rgb: [u8; 3],
) -> Result<Tensor> {
    if mask.width > extent || mask.height > extent {
        return Err(Error::Config(format!(
            "glyph {}x{} exceeds image extent {extent}",
            mask.width, mask.height
        )));
    }
    let plane = extent * extent;
    let mut data = vec![0.0f32; 3 * plane];
    for c in 0..3 {
        data[c * plane..(c + 1) * plane].fill(bg_rgb[c] as f32 / 255.0);
    }
    let x0 = (extent - mask.width) / 2;
    let y0 = (extent - mask.height) / 2;
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.get(y, x) {
                let px = (y0 + y) * extent + (x0 + x);
                for c in 0..3 {
                    data[c * plane + px] = font_rgb[c] as f32 / 255.0;
                }
            }
        }
    }
    Tensor::new(vec![3, extent, extent], data)
}
