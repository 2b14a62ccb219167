use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{IntensityFrame, LabeledVolume};
use crate::pnm::{intensity_to_u8, write_ppm};

/// Deterministic colour of a label id (splitmix64 of the id).
pub fn label_color(label: u32) -> [u8; 3] {
    let mut z = (label as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    [(z >> 16) as u8, (z >> 8) as u8, z as u8]
}

/// 50% blend of a gray level and a colour channel, rounding halves up.
#[inline]
pub fn blend(gray: u8, color: u8) -> u8 {
    (gray as u16 + color as u16).div_ceil(2) as u8
}

pub fn overlay_frame(labels: &crate::image::LabelFrame, frame: &IntensityFrame) -> Result<Vec<[u8; 3]>> {
    labels.check_shape(frame.plane())?;
    Ok(labels
        .data()
        .iter()
        .zip(frame.values())
        .map(|(&l, &v)| {
            let g = intensity_to_u8(v);
            let c = label_color(l);
            [blend(g, c[0]), blend(g, c[1]), blend(g, c[2])]
        })
        .collect())
}

/// Writes `overlay_NNNN.ppm` per frame into `dir`.
pub fn render_overlays(volume: &LabeledVolume, frames: &[IntensityFrame], dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    if frames.len() != volume.num_frames() {
        return Err(Error::FrameCountMismatch {
            expected: volume.num_frames(),
            actual: frames.len(),
        });
    }
    super::run::create_dir(dir)?;
    let mut written = Vec::with_capacity(frames.len());
    for (t, frame) in frames.iter().enumerate() {
        let rgb = overlay_frame(volume.frame(t), frame)?;
        let path = dir.join(format!("overlay_{t:04}.ppm"));
        write_ppm(&path, volume.width(), volume.height(), &rgb)?;
        written.push(path);
    }
    Ok(written)
}
