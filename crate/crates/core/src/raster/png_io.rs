//! PNG encoding: masks as 1-bit grayscale, label maps as 8-bit indexed color
//! where palette index equals label.

use std::io::Cursor;
use std::path::Path;

use super::{BinaryMask, LabelMap, RasterError};

/// Palette used for label maps: index 0 black, then a categorical cycle.
pub const LABEL_PALETTE: [[u8; 3]; 12] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
    [174, 199, 232],
    [255, 187, 120],
];

fn encode(width: usize, height: usize, configure: impl FnOnce(&mut png::Encoder<'_, &mut Vec<u8>>), data: &[u8]) -> Result<Vec<u8>, RasterError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        configure(&mut enc);
        let mut writer = enc.write_header().map_err(|e| RasterError::Png(e.to_string()))?;
        writer.write_image_data(data).map_err(|e| RasterError::Png(e.to_string()))?;
    }
    Ok(out)
}

pub fn encode_mask(mask: &BinaryMask) -> Result<Vec<u8>, RasterError> {
    let (w, h) = mask.dims();
    let stride = w.div_ceil(8);
    let mut data = vec![0u8; stride * h];
    for (x, y) in mask.pixels() {
        data[y * stride + x / 8] |= 0x80 >> (x % 8);
    }
    encode(
        w,
        h,
        |enc| {
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::One);
        },
        &data,
    )
}

pub fn encode_label_map(map: &LabelMap) -> Result<Vec<u8>, RasterError> {
    let max = map.max_label();
    if max > 255 {
        return Err(RasterError::TooManyLabels(max as usize));
    }
    let mut palette = vec![0u8, 0, 0];
    for l in 1..=max as usize {
        palette.extend_from_slice(&LABEL_PALETTE[(l - 1) % LABEL_PALETTE.len()]);
    }
    let data: Vec<u8> = map.labels().iter().map(|&l| l as u8).collect();
    encode(
        map.width(),
        map.height(),
        |enc| {
            enc.set_color(png::ColorType::Indexed);
            enc.set_depth(png::BitDepth::Eight);
            enc.set_palette(palette);
        },
        &data,
    )
}

/// Decoded 8-bit RGB pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage { width, height, pixels: vec![[0, 0, 0]; width * height] }
    }

    pub fn encode(&self) -> Result<Vec<u8>, RasterError> {
        let data: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        encode(
            self.width,
            self.height,
            |enc| {
                enc.set_color(png::ColorType::Rgb);
                enc.set_depth(png::BitDepth::Eight);
            },
            &data,
        )
    }
}

fn png_err(e: png::DecodingError) -> RasterError {
    RasterError::Png(e.to_string())
}

/// Decode any PNG to 8-bit RGB, compositing alpha over black.
pub fn decode_rgb(bytes: &[u8]) -> Result<RgbImage, RasterError> {
    let mut dec = png::Decoder::new(Cursor::new(bytes));
    dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = dec.read_info().map_err(png_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| RasterError::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = info.color_type.samples();
    let mut img = RgbImage::new(w, h);
    for y in 0..h {
        let row = &buf[y * info.line_size..(y + 1) * info.line_size];
        for x in 0..w {
            let px = &row[x * channels..(x + 1) * channels];
            let rgb = match channels {
                1 => [px[0]; 3],
                2 => [((px[0] as u16 * px[1] as u16) / 255) as u8; 3],
                3 => [px[0], px[1], px[2]],
                _ => {
                    let a = px[3] as u16;
                    [(px[0] as u16 * a / 255) as u8, (px[1] as u16 * a / 255) as u8, (px[2] as u16 * a / 255) as u8]
                }
            };
            img.pixels[y * w + x] = rgb;
        }
    }
    Ok(img)
}

/// Decode a mask: a pixel is set when its brightness is at least half.
pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask, RasterError> {
    let img = decode_rgb(bytes)?;
    let bits = img.pixels.iter().map(|p| p.iter().map(|&c| c as u32).sum::<u32>() >= 3 * 128).collect();
    BinaryMask::from_bits(img.width, img.height, bits)
}

/// Decode an indexed-color PNG, reading palette indices as labels.
pub fn decode_label_map(bytes: &[u8]) -> Result<LabelMap, RasterError> {
    let mut dec = png::Decoder::new(Cursor::new(bytes));
    dec.set_transformations(png::Transformations::IDENTITY);
    let mut reader = dec.read_info().map_err(png_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| RasterError::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    if info.color_type != png::ColorType::Indexed {
        return Err(RasterError::Png(format!("label map must be indexed color, found {:?}", info.color_type)));
    }
    let depth = info.bit_depth as usize;
    let (w, h) = (info.width as usize, info.height as usize);
    let mut labels = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &buf[y * info.line_size..(y + 1) * info.line_size];
        for x in 0..w {
            let bit = x * depth;
            let byte = row[bit / 8];
            let shift = 8 - depth - (bit % 8);
            labels.push(((byte >> shift) & ((1u16 << depth) - 1) as u8) as u16);
        }
    }
    LabelMap::from_labels(w, h, labels)
}

pub fn read_mask(path: &Path) -> Result<BinaryMask, RasterError> {
    decode_mask(&std::fs::read(path).map_err(|e| RasterError::Io(format!("{}: {e}", path.display())))?)
}

pub fn write_mask(mask: &BinaryMask, path: &Path) -> Result<(), RasterError> {
    std::fs::write(path, encode_mask(mask)?).map_err(|e| RasterError::Io(format!("{}: {e}", path.display())))
}

pub fn read_label_map(path: &Path) -> Result<LabelMap, RasterError> {
    decode_label_map(&std::fs::read(path).map_err(|e| RasterError::Io(format!("{}: {e}", path.display())))?)
}

pub fn write_label_map(map: &LabelMap, path: &Path) -> Result<(), RasterError> {
    std::fs::write(path, encode_label_map(map)?).map_err(|e| RasterError::Io(format!("{}: {e}", path.display())))
}

pub fn read_rgb(path: &Path) -> Result<RgbImage, RasterError> {
    decode_rgb(&std::fs::read(path).map_err(|e| RasterError::Io(format!("{}: {e}", path.display())))?)
}
