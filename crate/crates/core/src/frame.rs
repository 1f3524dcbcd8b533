//! Grayscale camera frames and their binary PGM (P5) encoding.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    /// Row-major intensities, `width * height` long.
    pub pixels: Vec<u8>,
    /// Simulated seconds at capture.
    pub timestamp: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PgmError {
    #[error("missing P5 magic")]
    BadMagic,
    #[error("malformed PGM header")]
    BadHeader,
    #[error("unsupported maxval {0}, expected 255")]
    UnsupportedMaxval(u32),
    #[error("expected {expected} pixel bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>, timestamp: f64) -> Self {
        assert_eq!(
            pixels.len(),
            width as usize * height as usize,
            "pixel count must equal width * height"
        );
        Self {
            width,
            height,
            pixels,
            timestamp,
        }
    }

    pub fn filled(width: u32, height: u32, value: u8, timestamp: f64) -> Self {
        Self::new(width, height, vec![value; width as usize * height as usize], timestamp)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.width + x) as usize]
    }

    /// Rotates the image clockwise by `quarter_turns * 90` degrees. Odd turns
    /// swap width and height.
    pub fn rotated_cw(&self, quarter_turns: u32) -> Frame {
        let (w, h) = (self.width as usize, self.height as usize);
        let src = &self.pixels;
        match quarter_turns % 4 {
            0 => self.clone(),
            2 => {
                let mut pixels = src.clone();
                pixels.reverse();
                Frame::new(self.width, self.height, pixels, self.timestamp)
            }
            1 => {
                // destination is h wide, w tall; dst(x', y') = src(y', h - 1 - x')
                let mut pixels = vec![0u8; w * h];
                for y in 0..h {
                    for x in 0..w {
                        let (nx, ny) = (h - 1 - y, x);
                        pixels[ny * h + nx] = src[y * w + x];
                    }
                }
                Frame::new(self.height, self.width, pixels, self.timestamp)
            }
            _ => {
                let mut pixels = vec![0u8; w * h];
                for y in 0..h {
                    for x in 0..w {
                        let (nx, ny) = (y, w - 1 - x);
                        pixels[ny * h + nx] = src[y * w + x];
                    }
                }
                Frame::new(self.height, self.width, pixels, self.timestamp)
            }
        }
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Decodes a binary PGM. The timestamp is not part of the image and is set
    /// to zero; callers carry it separately.
    pub fn from_pgm(data: &[u8]) -> Result<Frame, PgmError> {
        if !data.starts_with(b"P5") {
            return Err(PgmError::BadMagic);
        }
        let mut pos = 2;
        let mut fields = [0u32; 3];
        for field in fields.iter_mut() {
            // whitespace and comments between header tokens
            loop {
                match data.get(pos) {
                    Some(b) if b.is_ascii_whitespace() => pos += 1,
                    Some(b'#') => {
                        while data.get(pos).is_some_and(|&b| b != b'\n') {
                            pos += 1;
                        }
                    }
                    _ => break,
                }
            }
            let start = pos;
            while data.get(pos).is_some_and(u8::is_ascii_digit) {
                pos += 1;
            }
            *field = std::str::from_utf8(&data[start..pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or(PgmError::BadHeader)?;
        }
        // exactly one whitespace byte separates the header from the raster
        if !data.get(pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(PgmError::BadHeader);
        }
        pos += 1;
        let [width, height, maxval] = fields;
        if maxval != 255 {
            return Err(PgmError::UnsupportedMaxval(maxval));
        }
        let expected = width as usize * height as usize;
        let raster = &data[pos..];
        if raster.len() != expected {
            return Err(PgmError::Truncated {
                expected,
                found: raster.len(),
            });
        }
        Ok(Frame::new(width, height, raster.to_vec(), 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pgm_of_two_by_two() {
        let frame = Frame::new(2, 2, vec![0, 128, 255, 64], 0.0);
        let mut expected = b"P5\n2 2\n255\n".to_vec();
        expected.extend_from_slice(&[0, 128, 255, 64]);
        assert_eq!(frame.to_pgm(), expected);
        assert_eq!(Frame::from_pgm(&expected).unwrap(), frame);
    }

    #[test]
    fn pgm_errors() {
        assert_eq!(Frame::from_pgm(b"P6\n1 1\n255\n\0"), Err(PgmError::BadMagic));
        assert_eq!(Frame::from_pgm(b"P5\n1 x\n255\n\0"), Err(PgmError::BadHeader));
        assert_eq!(
            Frame::from_pgm(b"P5\n1 1\n65535\n\0\0"),
            Err(PgmError::UnsupportedMaxval(65535))
        );
        assert!(matches!(
            Frame::from_pgm(b"P5\n2 2\n255\n\0"),
            Err(PgmError::Truncated { expected: 4, found: 1 })
        ));
    }

    #[test]
    fn pgm_header_comments() {
        let f = Frame::from_pgm(b"P5\n# phone\n1 1\n255\n\x07").unwrap();
        assert_eq!(f.pixels, vec![7]);
    }

    #[test]
    fn quarter_turn_moves_top_left_to_top_right() {
        // 3 wide, 2 tall
        let f = Frame::new(3, 2, vec![1, 2, 3, 4, 5, 6], 0.0);
        let r = f.rotated_cw(1);
        assert_eq!((r.width, r.height), (2, 3));
        assert_eq!(r.pixels, vec![4, 1, 5, 2, 6, 3]);
        let l = f.rotated_cw(3);
        assert_eq!(l.pixels, vec![3, 6, 2, 5, 1, 4]);
    }

    fn any_frame() -> impl Strategy<Value = Frame> {
        (1u32..12, 1u32..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), (w * h) as usize)
                .prop_map(move |px| Frame::new(w, h, px, 0.0))
        })
    }

    proptest! {
        #[test]
        fn half_turn_is_an_involution(f in any_frame()) {
            prop_assert_eq!(f.rotated_cw(2).rotated_cw(2), f);
        }

        #[test]
        fn quarter_turn_and_inverse_cancel(f in any_frame()) {
            prop_assert_eq!(f.rotated_cw(1).rotated_cw(3), f.clone());
            prop_assert_eq!(f.rotated_cw(1).rotated_cw(1), f.rotated_cw(2));
        }

        #[test]
        fn pgm_round_trip(f in any_frame()) {
            prop_assert_eq!(Frame::from_pgm(&f.to_pgm()).unwrap(), f);
        }
    }
}
