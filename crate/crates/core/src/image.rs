//! 8-bit RGB images with a validity mask, plus binary PPM/PGM I/O.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    samples: Vec<u8>,
    mask: Vec<bool>,
}

impl ImageBuffer {
    pub const CHANNELS: usize = 3;

    /// Black image with every pixel marked valid.
    pub fn new(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        Self { width, height, samples: vec![0; n * Self::CHANNELS], mask: vec![true; n] }
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let mut img = Self::new(width, height);
        for px in img.samples.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
        img
    }

    pub fn from_samples(width: u32, height: u32, samples: Vec<u8>) -> Result<Self> {
        let n = width as usize * height as usize;
        if samples.len() != n * Self::CHANNELS {
            return Err(invalid(format!(
                "expected {} samples for {width}x{height}, got {}",
                n * Self::CHANNELS,
                samples.len()
            )));
        }
        Ok(Self { width, height, samples, mask: vec![true; n] })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.index(x, y) * 3;
        [self.samples[i], self.samples[i + 1], self.samples[i + 2]]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = self.index(x, y) * 3;
        self.samples[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn is_valid(&self, x: u32, y: u32) -> bool {
        self.mask[self.index(x, y)]
    }

    pub fn set_valid(&mut self, x: u32, y: u32, valid: bool) {
        let i = self.index(x, y);
        self.mask[i] = valid;
    }

    pub fn write_ppm<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.samples)?;
        Ok(())
    }

    /// Writes the validity mask as a binary PGM (255 = valid).
    pub fn write_mask_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
        out.write_all(&bytes)?;
        Ok(())
    }

    /// Reads a binary P6 with maxval 255. The mask is all-valid.
    pub fn read_ppm<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let magic = next_token(&mut reader)?;
        if magic != "P6" {
            return Err(Error::Parse(format!("expected P6 header, found {magic:?}")));
        }
        let width = parse_header_int(&mut reader, "width")?;
        let height = parse_header_int(&mut reader, "height")?;
        let maxval = parse_header_int(&mut reader, "maxval")?;
        if maxval != 255 {
            return Err(Error::Parse(format!("unsupported maxval {maxval}")));
        }
        let mut samples = vec![0u8; width as usize * height as usize * 3];
        reader.read_exact(&mut samples).map_err(|e| Error::Parse(format!("truncated PPM data: {e}")))?;
        Self::from_samples(width, height, samples)
    }

    pub fn save_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_ppm(std::io::BufWriter::new(f))
    }

    pub fn load_ppm(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_ppm(std::fs::File::open(path)?)
    }

    /// RGBA bytes, with invalid pixels given alpha 0.
    pub fn to_rgba(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.mask.len() * 4);
        for (px, &valid) in self.samples.chunks_exact(3).zip(&self.mask) {
            out.extend_from_slice(px);
            out.push(if valid { 255 } else { 0 });
        }
        out
    }
}

/// Reads one whitespace-delimited header token, skipping `#` comments. Consumes
/// exactly one trailing whitespace byte, as the format requires before data.
fn next_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(Error::Parse("unexpected end of PPM header".into()));
        }
        match byte[0] {
            b'#' if tok.is_empty() => {
                let mut line = Vec::new();
                r.read_until(b'\n', &mut line)?;
            }
            b if b.is_ascii_whitespace() => {
                if !tok.is_empty() {
                    return Ok(tok);
                }
            }
            b => tok.push(b as char),
        }
    }
}

fn parse_header_int<R: BufRead>(r: &mut R, what: &str) -> Result<u32> {
    let tok = next_token(r)?;
    tok.parse().map_err(|_| Error::Parse(format!("bad PPM {what}: {tok:?}")))
}
