//! Procedural glyph vocabulary.
//!
//! Each glyph is a 16×16 binary bitmap built from a few connected strokes.
//! Candidates are drawn from a seeded stream and kept only when legible
//! (enough ink, not a blob) and far — in Hamming distance — from every glyph
//! already accepted, so the vocabulary behaves like a set of distinct
//! characters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub const GLYPH_SIDE: usize = 16;
pub const VOCAB_SIZE: usize = 100;
/// Minimum pairwise Hamming distance between accepted glyph bitmaps.
pub const MIN_HAMMING: usize = 24;

const MIN_INK: usize = 18;
const MAX_INK: usize = 112;

/// One binary glyph bitmap, row-major, `1` = ink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glyph {
    bits: Vec<u8>,
}

impl Glyph {
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn ink(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Ink centroid in bitmap coordinates.
    pub fn centroid(&self) -> (f64, f64) {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for y in 0..GLYPH_SIDE {
            for x in 0..GLYPH_SIDE {
                if self.bits[y * GLYPH_SIDE + x] == 1 {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1.0;
                }
            }
        }
        (sx / n, sy / n)
    }

    pub fn hamming(&self, other: &Glyph) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }
}

/// The full set of glyphs a dataset draws from, deterministic in `seed`.
#[derive(Debug, Clone)]
pub struct GlyphVocab {
    seed: u64,
    glyphs: Vec<Glyph>,
}

impl GlyphVocab {
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut glyphs: Vec<Glyph> = Vec::with_capacity(VOCAB_SIZE);
        while glyphs.len() < VOCAB_SIZE {
            let candidate = random_glyph(&mut rng);
            let ink = candidate.ink();
            if ink < MIN_INK || ink > MAX_INK {
                continue;
            }
            if glyphs.iter().all(|g| g.hamming(&candidate) >= MIN_HAMMING) {
                glyphs.push(candidate);
            }
        }
        GlyphVocab { seed, glyphs }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.glyphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.glyphs.is_empty()
    }

    pub fn glyph(&self, index: usize) -> &Glyph {
        &self.glyphs[index]
    }
}

/// Two or three stroke chains over interior lattice points.
fn random_glyph(rng: &mut ChaCha12Rng) -> Glyph {
    let mut bits = vec![0u8; GLYPH_SIDE * GLYPH_SIDE];
    let chains = rng.random_range(2..=3);
    for _ in 0..chains {
        let points = rng.random_range(2..=4);
        let mut prev = lattice_point(rng);
        for _ in 0..points {
            let next = lattice_point(rng);
            stroke(&mut bits, prev, next);
            prev = next;
        }
    }
    Glyph { bits }
}

fn lattice_point(rng: &mut ChaCha12Rng) -> (i32, i32) {
    (rng.random_range(2..14), rng.random_range(2..14))
}

fn stroke(bits: &mut [u8], a: (i32, i32), b: (i32, i32)) {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        bits[y as usize * GLYPH_SIDE + x as usize] = 1;
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_holds_one_hundred_distinct_glyphs() {
        let vocab = GlyphVocab::generate(7);
        assert_eq!(vocab.len(), VOCAB_SIZE);
        for i in 0..vocab.len() {
            for j in (i + 1)..vocab.len() {
                let d = vocab.glyph(i).hamming(vocab.glyph(j));
                assert!(d >= MIN_HAMMING, "glyphs {i} and {j} differ by only {d} cells");
            }
        }
    }

    #[test]
    fn every_glyph_is_legible() {
        let vocab = GlyphVocab::generate(7);
        for i in 0..vocab.len() {
            let ink = vocab.glyph(i).ink();
            assert!((MIN_INK..=MAX_INK).contains(&ink), "glyph {i} has {ink} ink cells");
        }
    }

    #[test]
    fn same_seed_reproduces_the_vocabulary() {
        let a = GlyphVocab::generate(3);
        let b = GlyphVocab::generate(3);
        for i in 0..VOCAB_SIZE {
            assert_eq!(a.glyph(i), b.glyph(i));
        }
        let c = GlyphVocab::generate(4);
        assert!((0..VOCAB_SIZE).any(|i| a.glyph(i) != c.glyph(i)));
    }
}
