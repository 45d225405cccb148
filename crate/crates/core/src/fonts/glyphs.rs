//! Embedded bitmap glyphs for the 52 upper- and lower-case letters.
//!
//! Each glyph is drawn on an 8-wide base grid ('X' = ink, '.' = empty) and
//! stored pre-cropped to its inked bounding box; the renderer scales the box
//! by nearest neighbor to the requested pixel height. Strokes are two pixels
//! wide wherever the grid allows so the weight transforms (thin erodes one
//! pixel, bold dilates one) stay legible.

pub(super) const GLYPHS: &[(char, &str)] = &[
    ('A', "\
...XX...
...XX...
..XXXX..
..XXXX..
.XX..XX.
.XX..XX.
.XXXXXX.
.XXXXXX.
XX....XX
XX....XX
XX....XX
XX....XX"),
    ('B', "\
XXXXXX..
XXXXXXX.
XX...XX.
XX...XX.
XXXXXX..
XXXXXX..
XX...XX.
XX....XX
XX....XX
XX...XX.
XXXXXXX.
XXXXXX.."),
    ('C', "\
..XXXX..
.XXXXXX.
XX....XX
XX......
XX......
XX......
XX......
XX......
XX......
XX....XX
.XXXXXX.
..XXXX.."),
    ('D', "\
XXXXX...
XXXXXX..
XX...XX.
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX...XX.
XXXXXX..
XXXXX..."),
    ('E', "\
XXXXXXXX
XXXXXXXX
XX......
XX......
XXXXXX..
XXXXXX..
XX......
XX......
XX......
XX......
XXXXXXXX
XXXXXXXX"),
    ('F', "\
XXXXXXXX
XXXXXXXX
XX......
XX......
XXXXXX..
XXXXXX..
XX......
XX......
XX......
XX......
XX......
XX......"),
    ('G', "\
..XXXX..
.XXXXXX.
XX....XX
XX......
XX......
XX..XXXX
XX..XXXX
XX....XX
XX....XX
XX....XX
.XXXXXX.
..XXXX.."),
    ('H', "\
XX....XX
XX....XX
XX....XX
XX....XX
XXXXXXXX
XXXXXXXX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX"),
    ('I', "\
XXXXXX
XXXXXX
..XX..
..XX..
..XX..
..XX..
..XX..
..XX..
..XX..
..XX..
XXXXXX
XXXXXX"),
    ('J', "\
..XXXXXX
..XXXXXX
.....XX.
.....XX.
.....XX.
.....XX.
.....XX.
.....XX.
XX...XX.
XX...XX.
.XXXXX..
..XXX..."),
    ('K', "\
XX....XX
XX...XX.
XX..XX..
XX.XX...
XXXX....
XXXX....
XX.XX...
XX..XX..
XX...XX.
XX....XX
XX....XX
XX....XX"),
    ('L', "\
XX......
XX......
XX......
XX......
XX......
XX......
XX......
XX......
XX......
XX......
XXXXXXXX
XXXXXXXX"),
    ('M', "\
XX....XX
XXX..XXX
XXXXXXXX
XX.XX.XX
XX.XX.XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX"),
    ('N', "\
XX....XX
XXX...XX
XXXX..XX
XXXX..XX
XX.XX.XX
XX.XX.XX
XX..XXXX
XX..XXXX
XX...XXX
XX....XX
XX....XX
XX....XX"),
    ('O', "\
..XXXX..
.XXXXXX.
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
.XXXXXX.
..XXXX.."),
    ('P', "\
XXXXXX..
XXXXXXX.
XX....XX
XX....XX
XX....XX
XXXXXXX.
XXXXXX..
XX......
XX......
XX......
XX......
XX......"),
    ('Q', "\
..XXXX..
.XXXXXX.
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX..XXXX
XX...XX.
.XXXXXX.
..XXX.XX"),
    ('R', "\
XXXXXX..
XXXXXXX.
XX....XX
XX....XX
XX...XX.
XXXXXX..
XXXXX...
XX.XX...
XX..XX..
XX...XX.
XX....XX
XX....XX"),
    ('S', "\
..XXXX..
.XXXXXX.
XX....XX
XX......
.XX.....
..XXXX..
....XXX.
......XX
......XX
XX....XX
.XXXXXX.
..XXXX.."),
    ('T', "\
XXXXXXXX
XXXXXXXX
...XX...
...XX...
...XX...
...XX...
...XX...
...XX...
...XX...
...XX...
...XX...
...XX..."),
    ('U', "\
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
.XXXXXX.
..XXXX.."),
    ('V', "\
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
.XX..XX.
.XX..XX.
.XX..XX.
.XX..XX.
..XXXX..
..XXXX..
...XX..."),
    ('W', "\
XX....XX
XX....XX
XX....XX
XX....XX
XX....XX
XX.XX.XX
XX.XX.XX
XX.XX.XX
XXXXXXXX
XXX..XXX
XX....XX
XX....XX"),
    ('X', "\
XX....XX
XX....XX
.XX..XX.
.XX..XX.
..XXXX..
...XX...
...XX...
..XXXX..
.XX..XX.
.XX..XX.
XX....XX
XX....XX"),
    ('Y', "\
XX....XX
XX....XX
.XX..XX.
.XX..XX.
..XXXX..
...XX...
...XX...
...XX...
...XX...
...XX...
...XX...
...XX..."),
    ('Z', "\
XXXXXXXX
XXXXXXXX
.....XX.
....XX..
...XX...
...XX...
..XX....
..XX....
.XX.....
XX......
XXXXXXXX
XXXXXXXX"),
    ('a', "\
.XXXX...
XXXXXX..
....XX..
.XXXXX..
XXXXXX..
XX..XX..
XXXXXX..
.XXX.XX."),
    ('b', "\
XX......
XX......
XX......
XX......
XXXXX...
XXXXXX..
XX...XX.
XX...XX.
XX...XX.
XX...XX.
XXXXXX..
XXXXX..."),
    ('c', "\
.XXXXX..
XXXXXXX.
XX...XX.
XX......
XX......
XX...XX.
XXXXXXX.
.XXXXX.."),
    ('d', "\
.....XX
.....XX
.....XX
.....XX
.XXXXXX
XXXXXXX
XX...XX
XX...XX
XX...XX
XX...XX
XXXXXXX
.XXXXXX"),
    ('e', "\
.XXXX...
XXXXXX..
XX...XX.
XXXXXXX.
XXXXXXX.
XX......
XXXXXX..
.XXXX..."),
    ('f', "\
..XXXX..
.XXXXX..
.XX.....
.XX.....
XXXXXX..
XXXXXX..
.XX.....
.XX.....
.XX.....
.XX.....
.XX.....
.XX....."),
    ('g', "\
.XXXXXX.
XXXXXXXX
XX....XX
XX....XX
XX....XX
XXXXXXXX
.XXXXXXX
......XX
......XX
XX....XX
XXXXXXXX
.XXXXXX."),
    ('h', "\
XX......
XX......
XX......
XX......
XXXXXX..
XXXXXXX.
XX...XX.
XX...XX.
XX...XX.
XX...XX.
XX...XX.
XX...XX."),
    ('i', "\
XX
XX
..
..
XX
XX
XX
XX
XX
XX
XX
XX"),
    ('j', "\
...XX
...XX
.....
.....
...XX
...XX
...XX
...XX
...XX
...XX
...XX
...XX
XX.XX
XXXXX
.XXX."),
    ('k', "\
XX......
XX......
XX......
XX......
XX...XX.
XX..XX..
XX.XX...
XXXX....
XXXX....
XX.XX...
XX..XX..
XX...XX."),
    ('l', "\
XX
XX
XX
XX
XX
XX
XX
XX
XX
XX
XX
XX"),
    ('m', "\
XXXX.XX.
XXXXXXXX
XX.XX.XX
XX.XX.XX
XX.XX.XX
XX.XX.XX
XX.XX.XX
XX.XX.XX"),
    ('n', "\
XXXXXX..
XXXXXXX.
XX...XX.
XX...XX.
XX...XX.
XX...XX.
XX...XX.
XX...XX."),
    ('o', "\
.XXXXX.
XXXXXXX
XX...XX
XX...XX
XX...XX
XX...XX
XXXXXXX
.XXXXX."),
    ('p', "\
XXXXXX..
XXXXXXX.
XX...XX.
XX...XX.
XX...XX.
XX...XX.
XXXXXXX.
XXXXXX..
XX......
XX......
XX......
XX......"),
    ('q', "\
.XXXXXX
XXXXXXX
XX...XX
XX...XX
XX...XX
XX...XX
XXXXXXX
.XXXXXX
.....XX
.....XX
.....XX
.....XX"),
    ('r', "\
XX.XXX..
XXXXXXX.
XXX..XX.
XX......
XX......
XX......
XX......
XX......"),
    ('s', "\
.XXXXX.
XXXXXXX
XX.....
XXXXXX.
.XXXXXX
.....XX
XXXXXXX
.XXXXX."),
    ('t', "\
.XX...
.XX...
XXXXXX
XXXXXX
.XX...
.XX...
.XX...
.XX...
.XX...
.XXXXX
..XXX."),
    ('u', "\
XX...XX
XX...XX
XX...XX
XX...XX
XX...XX
XX...XX
XXXXXXX
.XXXXXX"),
    ('v', "\
XX...XX
XX...XX
XX...XX
.XX.XX.
.XX.XX.
.XX.XX.
..XXX..
..XXX.."),
    ('w', "\
XX.XX.XX
XX.XX.XX
XX.XX.XX
XX.XX.XX
XX.XX.XX
XX.XX.XX
XXXXXXXX
.XX..XX."),
    ('x', "\
XX...XX
.XX.XX.
.XX.XX.
..XXX..
..XXX..
.XX.XX.
.XX.XX.
XX...XX"),
    ('y', "\
XX...XX
XX...XX
XX...XX
XX...XX
XX...XX
XXXXXXX
.XXXXXX
.....XX
.....XX
XX...XX
XXXXXXX
.XXXXX."),
    ('z', "\
XXXXXXX
XXXXXXX
....XX.
...XX..
..XX...
.XX....
XXXXXXX
XXXXXXX"),
];

/// One parsed glyph mask, cropped to its inked bounding box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlyphBitmap {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>, // row-major, width * height
}

impl GlyphBitmap {
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub(super) fn from_art(art: &str) -> GlyphBitmap {
        let rows: Vec<&str> = art.lines().map(|l| l.trim_end_matches('\r')).collect();
        let height = rows.len();
        let width = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut bits = vec![false; width * height];
        for (y, row) in rows.iter().enumerate() {
            for (x, ch) in row.chars().enumerate() {
                if ch == 'X' {
                    bits[y * width + x] = true;
                }
            }
        }
        crop(GlyphBitmap { width, height, bits })
    }
}

/// Trim empty border rows and columns.
pub(super) fn crop(g: GlyphBitmap) -> GlyphBitmap {
    let inked_rows: Vec<usize> = (0..g.height)
        .filter(|&y| (0..g.width).any(|x| g.get(y, x)))
        .collect();
    let inked_cols: Vec<usize> = (0..g.width)
        .filter(|&x| (0..g.height).any(|y| g.get(y, x)))
        .collect();
    if inked_rows.is_empty() {
        return GlyphBitmap { width: 0, height: 0, bits: vec![] };
    }
    let (y0, y1) = (inked_rows[0], *inked_rows.last().unwrap());
    let (x0, x1) = (inked_cols[0], *inked_cols.last().unwrap());
    let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
    let mut bits = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            bits[y * w + x] = g.get(y0 + y, x0 + x);
        }
    }
    GlyphBitmap { width: w, height: h, bits }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atlas_holds_52_distinct_letters() {
        assert_eq!(GLYPHS.len(), 52);
        let mut letters: Vec<char> = GLYPHS.iter().map(|(c, _)| *c).collect();
        letters.sort_unstable();
        letters.dedup();
        assert_eq!(letters.len(), 52);
        for c in ('A'..='Z').chain('a'..='z') {
            assert!(letters.contains(&c), "missing glyph for {c:?}");
        }
    }

    #[test]
    fn glyphs_fit_the_base_grid_and_are_cropped() {
        for (c, art) in GLYPHS {
            let g = GlyphBitmap::from_art(art);
            assert!(g.width >= 1 && g.width <= 8, "{c:?} width {}", g.width);
            assert!(g.height >= 6 && g.height <= 16, "{c:?} height {}", g.height);
            // cropped: first/last rows and cols carry ink
            assert!((0..g.width).any(|x| g.get(0, x)), "{c:?} top row empty");
            assert!((0..g.width).any(|x| g.get(g.height - 1, x)), "{c:?} bottom row empty");
            assert!((0..g.height).any(|y| g.get(y, 0)), "{c:?} left col empty");
            assert!((0..g.height).any(|y| g.get(y, g.width - 1)), "{c:?} right col empty");
        }
    }

    #[test]
    fn glyph_masks_are_pairwise_distinct() {
        let parsed: Vec<(char, GlyphBitmap)> =
            GLYPHS.iter().map(|(c, a)| (*c, GlyphBitmap::from_art(a))).collect();
        for i in 0..parsed.len() {
            for k in (i + 1)..parsed.len() {
                assert_ne!(
                    parsed[i].1, parsed[k].1,
                    "glyphs {:?} and {:?} are identical",
                    parsed[i].0, parsed[k].0
                );
            }
        }
    }
}
