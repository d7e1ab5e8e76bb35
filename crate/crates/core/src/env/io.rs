//! Map file formats: PGM (P2/P5) and PNG rasters, plus a little-endian
//! n-dimensional binary grid.

use std::io::Cursor;
use std::path::Path;

use super::{maps, EnvError, Environment};

pub const DEFAULT_OBSTACLE_THRESHOLD: f64 = 0.5;

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

/// Load a map. `bundled:<name>` selects a generated map (see [`maps`]).
/// Raster cells whose normalized intensity is below `obstacle_threshold`
/// become obstacles.
pub fn load_map(path: &Path, obstacle_threshold: f64) -> Result<Environment, EnvError> {
    let text = path.to_string_lossy();
    if let Some(name) = text.strip_prefix(maps::BUNDLED_PREFIX) {
        return maps::bundled(name).map(|e| e.with_threshold(obstacle_threshold));
    }
    let bytes = std::fs::read(path).map_err(|source| EnvError::Io {
        path: text.to_string(),
        source,
    })?;
    let env = if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        parse_pgm(&bytes, obstacle_threshold)?
    } else if bytes.starts_with(&PNG_SIGNATURE) {
        parse_png(&bytes, obstacle_threshold)?
    } else if matches!(path.extension().and_then(|e| e.to_str()), Some("grid")) {
        parse_binary_grid(&bytes)?
    } else {
        return Err(EnvError::UnsupportedFormat(text.to_string()));
    };
    Ok(env.with_threshold(obstacle_threshold))
}

fn raster(
    width: usize,
    height: usize,
    intensities: impl Iterator<Item = f64>,
    threshold: f64,
) -> Result<Environment, EnvError> {
    let occupied: Vec<bool> = intensities.map(|v| v < threshold).collect();
    if occupied.len() != width * height {
        return Err(EnvError::InvalidGrid(format!(
            "expected {} pixels, got {}",
            width * height,
            occupied.len()
        )));
    }
    Environment::from_grid(vec![0.0, 0.0], vec![width, height], vec![1.0, 1.0], occupied)
}

struct Tokens<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<&'a str> {
        loop {
            while self.pos < self.data.len() && self.data[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.data.len() && self.data[self.pos] == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (start < self.pos).then(|| std::str::from_utf8(&self.data[start..self.pos]).ok())?
    }

    fn number(&mut self, what: &str) -> Result<usize, EnvError> {
        self.next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| EnvError::UnsupportedFormat(format!("bad PGM {what}")))
    }
}

pub fn parse_pgm(bytes: &[u8], threshold: f64) -> Result<Environment, EnvError> {
    let mut tok = Tokens { data: bytes, pos: 0 };
    let magic = tok.next().unwrap_or_default();
    let width = tok.number("width")?;
    let height = tok.number("height")?;
    let maxval = tok.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(EnvError::UnsupportedFormat(format!("PGM maxval {maxval}")));
    }
    let scale = maxval as f64;
    match magic {
        "P2" => {
            let mut values = Vec::with_capacity(width * height);
            for _ in 0..width * height {
                values.push(tok.number("pixel")? as f64 / scale);
            }
            raster(width, height, values.into_iter(), threshold)
        }
        "P5" => {
            // exactly one whitespace byte separates the header from the raster
            let body = &bytes[(tok.pos + 1).min(bytes.len())..];
            if maxval < 256 {
                raster(width, height, body.iter().take(width * height).map(|&b| b as f64 / scale), threshold)
            } else {
                raster(
                    width,
                    height,
                    body.chunks_exact(2)
                        .take(width * height)
                        .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale),
                    threshold,
                )
            }
        }
        other => Err(EnvError::UnsupportedFormat(format!("PGM magic {other:?}"))),
    }
}

fn parse_png(bytes: &[u8], threshold: f64) -> Result<Environment, EnvError> {
    let bad = |e: png::DecodingError| EnvError::UnsupportedFormat(format!("PNG: {e}"));
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(bad)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| EnvError::UnsupportedFormat("PNG too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(bad)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(EnvError::UnsupportedFormat("indexed PNG".into()));
        }
    };
    let line = info.line_size;
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &buf[y * line..];
        for x in 0..w {
            let px = &row[x * channels..];
            // colour images are reduced to their mean channel
            let v = if channels >= 3 {
                (px[0] as f64 + px[1] as f64 + px[2] as f64) / 3.0
            } else {
                px[0] as f64
            };
            values.push(v / 255.0);
        }
    }
    raster(w, h, values.into_iter(), threshold)
}

/// `[u32 dim][u32 count; dim]` little-endian, then one byte per cell with
/// axis 0 varying fastest (0 = free, 1 = obstacle).
pub fn parse_binary_grid(bytes: &[u8]) -> Result<Environment, EnvError> {
    let word = |i: usize| -> Result<usize, EnvError> {
        bytes
            .get(4 * i..4 * i + 4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
            .ok_or_else(|| EnvError::InvalidGrid("truncated header".into()))
    };
    let dim = word(0)?;
    if !(2..=16).contains(&dim) {
        return Err(EnvError::InvalidGrid(format!("dimension {dim}")));
    }
    let counts = (1..=dim).map(word).collect::<Result<Vec<_>, _>>()?;
    let body = &bytes[4 * (dim + 1)..];
    let total: usize = counts.iter().product();
    if body.len() != total {
        return Err(EnvError::InvalidGrid(format!(
            "expected {total} cell bytes, got {}",
            body.len()
        )));
    }
    let occupied = body
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(EnvError::InvalidGrid(format!("cell byte {v}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Environment::from_grid(vec![0.0; dim], counts, vec![1.0; dim], occupied)
}

pub fn write_binary_grid(env: &Environment) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 * (env.dim() + 1) + env.occupancy().len());
    out.extend_from_slice(&(env.dim() as u32).to_le_bytes());
    for &c in env.counts() {
        out.extend_from_slice(&(c as u32).to_le_bytes());
    }
    out.extend(env.occupancy().iter().map(|&o| o as u8));
    out
}

/// Binary PGM of a 2D environment: free cells white, obstacles black.
pub fn write_pgm(env: &Environment) -> Vec<u8> {
    assert_eq!(env.dim(), 2, "PGM export needs a 2D map");
    let (w, h) = (env.counts()[0], env.counts()[1]);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(env.occupancy().iter().map(|&o| if o { 0u8 } else { 255 }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pgm_ascii(w: usize, h: usize, px: impl Fn(usize, usize) -> u8) -> Vec<u8> {
        let mut s = format!("P2\n# test\n{w} {h}\n255\n");
        for y in 0..h {
            let row: Vec<String> = (0..w).map(|x| px(x, y).to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s.into_bytes()
    }

    fn png_gray(w: u32, h: u32, px: impl Fn(u32, u32) -> u8) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, w, h);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().unwrap();
            let data: Vec<u8> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| px(x, y)).collect();
            writer.write_image_data(&data).unwrap();
        }
        out
    }

    #[test]
    fn all_white_is_free() {
        let env = parse_pgm(&pgm_ascii(4, 4, |_, _| 255), 0.5).unwrap();
        assert_eq!(env.free_cell_count(), 16);
        assert_eq!(env.upper(), &[4.0, 4.0]);
    }

    #[test]
    fn single_black_pixel() {
        let env = parse_pgm(&pgm_ascii(4, 4, |x, y| if (x, y) == (2, 1) { 0 } else { 255 }), 0.5).unwrap();
        assert_eq!(env.obstacle_cell_count(), 1);
        assert!(env.cell_occupied(&[2, 1]));
    }

    #[test]
    fn checkerboard_counts_match_pixel_scan() {
        let px = |x: usize, y: usize| if (x + y).is_multiple_of(2) { 0 } else { 255 };
        let bytes = pgm_ascii(8, 8, px);
        let expected = (0..8).flat_map(|y| (0..8).map(move |x| (x, y))).filter(|&(x, y)| px(x, y) < 128).count();
        let env = parse_pgm(&bytes, 0.5).unwrap();
        assert_eq!(env.obstacle_cell_count(), expected);
        assert_eq!(expected, 32);
        assert_eq!(env.free_fraction(), 0.5);
    }

    #[test]
    fn png_and_binary_pgm_agree() {
        let px = |x: u32, y: u32| if x == 3 && y < 5 { 10 } else { 240 };
        let from_png = parse_png(&png_gray(7, 6, px), 0.5).unwrap();
        let p5 = write_pgm(&from_png);
        let from_pgm = parse_pgm(&p5, 0.5).unwrap();
        assert_eq!(from_png.occupancy(), from_pgm.occupancy());
        assert!(from_pgm.cell_occupied(&[3, 4]));
        assert!(!from_pgm.cell_occupied(&[3, 5]));
    }

    #[test]
    fn sixteen_bit_pgm() {
        let mut bytes = b"P5 2 1 65535\n".to_vec();
        bytes.extend_from_slice(&1000u16.to_be_bytes());
        bytes.extend_from_slice(&60000u16.to_be_bytes());
        let env = parse_pgm(&bytes, 0.5).unwrap();
        assert!(env.cell_occupied(&[0, 0]));
        assert!(!env.cell_occupied(&[1, 0]));
    }

    #[test]
    fn binary_grid_round_trip_3d() {
        let mut occ = vec![false; 2 * 3 * 4];
        occ[5] = true;
        let env = Environment::from_grid(vec![0.0; 3], vec![2, 3, 4], vec![1.0; 3], occ).unwrap();
        let back = parse_binary_grid(&write_binary_grid(&env)).unwrap();
        assert_eq!(back.counts(), &[2, 3, 4]);
        assert_eq!(back.occupancy(), env.occupancy());
        // index 5 = x 1, y 2, z 0
        assert!(back.cell_occupied(&[1, 2, 0]));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(parse_pgm(&pgm_ascii(2, 2, |_, _| 0), 0.5), Err(EnvError::NoFreeSpace)));
        assert!(parse_pgm(b"P7 1 1 255\n\0", 0.5).is_err());
        assert!(parse_binary_grid(&[2, 0, 0, 0, 1, 0]).is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        std::fs::write(&p, b"hello").unwrap();
        assert!(matches!(load_map(&p, 0.5), Err(EnvError::UnsupportedFormat(_))));
        assert!(matches!(load_map(&dir.path().join("missing.pgm"), 0.5), Err(EnvError::Io { .. })));
    }
}
