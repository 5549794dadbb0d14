//! Bundled 8x8 bitmap font, scaled by nearest-neighbour sampling so text
//! renders identically on every platform.

use font8x8::{UnicodeFonts, BASIC_FONTS};

use super::RenderError;

const FIRST: u8 = b' ';
const LAST: u8 = b'~';
const FALLBACK: char = '?';

#[derive(Debug, Clone)]
pub struct FontAtlas {
    glyphs: Vec<[u8; 8]>,
}

impl FontAtlas {
    /// Load the printable ASCII range; fails if any glyph is missing.
    pub fn builtin() -> Result<Self, RenderError> {
        let mut glyphs = Vec::with_capacity((LAST - FIRST + 1) as usize);
        for code in FIRST..=LAST {
            let c = code as char;
            let g = BASIC_FONTS.get(c).ok_or(RenderError::MissingGlyph(c))?;
            glyphs.push(g);
        }
        Ok(Self { glyphs })
    }

    fn glyph(&self, c: char) -> &[u8; 8] {
        let code = if (FIRST as char..=LAST as char).contains(&c) {
            c
        } else {
            FALLBACK
        };
        &self.glyphs[(code as u8 - FIRST) as usize]
    }

    /// Width and height in pixels of `text` at glyph size `px`.
    pub fn measure(text: &str, px: u32) -> (u32, u32) {
        (text.chars().count() as u32 * px, px)
    }

    /// Whether the glyph cell pixel `(x, y)` of `c` at size `px` is inked.
    pub fn ink(&self, c: char, px: u32, x: u32, y: u32) -> bool {
        let g = self.glyph(c);
        let gx = (x * 8 / px).min(7);
        let gy = (y * 8 / px).min(7);
        g[gy as usize] >> gx & 1 == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atlas_covers_ascii() {
        let atlas = FontAtlas::builtin().unwrap();
        assert_eq!(atlas.glyphs.len(), 95);
        // Space is blank everywhere.
        assert!((0..16).all(|y| (0..16).all(|x| !atlas.ink(' ', 16, x, y))));
        // Digits carry ink.
        assert!((0..16).any(|y| (0..16).any(|x| atlas.ink('1', 16, x, y))));
        // Non-ASCII falls back to '?'.
        let q: Vec<bool> = (0..64).map(|i| atlas.ink('?', 8, i % 8, i / 8)).collect();
        let e: Vec<bool> = (0..64).map(|i| atlas.ink('é', 8, i % 8, i / 8)).collect();
        assert_eq!(q, e);
    }
}
