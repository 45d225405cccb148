use gzsl_core::fonts::*;
use gzsl_core::autodiff::Tensor;

fn main() {
    let atlas = GlyphAtlas::embedded();
    let letters: Vec<char> = ('A'..='Z').chain('a'..='z').collect();
    let styles = ["regular", "bold", "thin", "italic", "regular-outline"];
    let cell = 32;
    let cols = 26;
    let rows = 2 * styles.len();
    let mut canvas = vec![1.0f32; 3 * (rows * cell) * (cols * cell)];
    let width = cols * cell;
    for (si, style) in styles.iter().enumerate() {
        for (li, &letter) in letters.iter().enumerate() {
            let mask = glyph_mask(&atlas, letter, 22, style_from_name(style).unwrap()).unwrap();
            let row = si * 2 + li / 26;
            let col = li % 26;
            let x0 = col * cell + (cell - mask.width) / 2;
            let y0 = row * cell + (cell - mask.height) / 2;
            for y in 0..mask.height {
                for x in 0..mask.width {
                    if mask.get(y, x) {
                        let px = (y0 + y) * width + (x0 + x);
                        canvas[px] = 0.0;
                        canvas[(rows * cell) * width + px] = 0.0;
                        canvas[2 * (rows * cell) * width + px] = 0.4;
                    }
                }
            }
        }
    }
    let t = Tensor::new(vec![3, rows * cell, width], canvas).unwrap();
    save_png(&t, std::path::Path::new("/tmp/glyphs.png")).unwrap();
    println!("wrote /tmp/glyphs.png");
}
