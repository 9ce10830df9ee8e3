//! Thin PNG helpers over the `png` crate for the four raster kinds used
//! here: 8-bit RGB albedo, 16-bit RGB position maps, 8-bit gray masks and
//! 8-bit indexed label masks.

use std::io::Cursor;

use png::{BitDepth, ColorType, Decoder, Encoder, Transformations};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PngKind {
    Rgb8,
    /// Samples are big-endian `u16`, as stored in the file.
    Rgb16,
    Gray8,
    Indexed8 {
        palette: Vec<[u8; 3]>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    pub width: u32,
    pub height: u32,
    pub kind: PngKind,
    pub data: Vec<u8>,
}

fn err(e: impl std::fmt::Display) -> Error {
    Error::Image(e.to_string())
}

pub fn encode(img: &RawImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = Encoder::new(&mut out, img.width, img.height);
        match &img.kind {
            PngKind::Rgb8 => {
                enc.set_color(ColorType::Rgb);
                enc.set_depth(BitDepth::Eight);
            }
            PngKind::Rgb16 => {
                enc.set_color(ColorType::Rgb);
                enc.set_depth(BitDepth::Sixteen);
            }
            PngKind::Gray8 => {
                enc.set_color(ColorType::Grayscale);
                enc.set_depth(BitDepth::Eight);
            }
            PngKind::Indexed8 { palette } => {
                enc.set_color(ColorType::Indexed);
                enc.set_depth(BitDepth::Eight);
                enc.set_palette(palette.iter().flatten().copied().collect::<Vec<u8>>());
            }
        }
        let mut writer = enc.write_header().map_err(err)?;
        writer.write_image_data(&img.data).map_err(err)?;
        writer.finish().map_err(err)?;
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<RawImage> {
    let mut dec = Decoder::new(Cursor::new(bytes));
    dec.set_transformations(Transformations::IDENTITY);
    let mut reader = dec.read_info().map_err(err)?;
    let info = reader.info();
    let (width, height) = (info.width, info.height);
    let kind = match (info.color_type, info.bit_depth) {
        (ColorType::Rgb, BitDepth::Eight) => PngKind::Rgb8,
        (ColorType::Rgb, BitDepth::Sixteen) => PngKind::Rgb16,
        (ColorType::Grayscale, BitDepth::Eight) => PngKind::Gray8,
        (ColorType::Indexed, BitDepth::Eight) => PngKind::Indexed8 {
            palette: info
                .palette
                .as_ref()
                .map(|p| p.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
                .unwrap_or_default(),
        },
        (c, d) => return Err(Error::Image(format!("unsupported PNG layout {c:?}/{d:?}"))),
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Image("image too large".into()))?;
    let mut data = vec![0u8; size];
    let frame = reader.next_frame(&mut data).map_err(err)?;
    data.truncate(frame.buffer_size());
    // rows are tightly packed for 8- and 16-bit depths
    Ok(RawImage {
        width,
        height,
        kind,
        data,
    })
}
