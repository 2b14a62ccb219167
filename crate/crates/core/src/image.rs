//! Dense per-pixel planes and the volume types built on them.

use crate::error::{Error, Result};

/// Row-major dense grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Copy> Plane<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Empty("plane with zero width or height"));
        }
        if data.len() != width * height {
            return Err(Error::param(format!(
                "plane data has {} values, expected {}x{}={}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Plane { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Result<Self> {
        Plane::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(&T) -> U) -> Plane<U> {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn same_shape<U>(&self, other: &Plane<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape<U>(&self, other: &Plane<U>) -> Result<()> {
        if self.width == other.width && self.height == other.height {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected_width: self.width,
                expected_height: self.height,
                width: other.width,
                height: other.height,
            })
        }
    }
}

fn check_unit_range(values: &[f64], what: &'static str) -> Result<()> {
    match values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(Error::OutOfRange {
            what,
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

macro_rules! unit_plane {
    ($(#[$meta:meta])* $name:ident, $what:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Plane<f64>);

        impl $name {
            pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
                Self::from_plane(Plane::new(width, height, values)?)
            }

            pub fn from_plane(plane: Plane<f64>) -> Result<Self> {
                check_unit_range(plane.data(), $what)?;
                Ok($name(plane))
            }

            pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
                Self::from_plane(Plane::filled(width, height, value)?)
            }

            #[inline]
            pub fn width(&self) -> usize {
                self.0.width()
            }

            #[inline]
            pub fn height(&self) -> usize {
                self.0.height()
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> f64 {
                self.0.get(x, y)
            }

            pub fn values(&self) -> &[f64] {
                self.0.data()
            }

            pub fn plane(&self) -> &Plane<f64> {
                &self.0
            }
        }
    };
}

unit_plane!(
    /// Grayscale intensities in `[0, 1]`.
    IntensityFrame,
    "intensity outside [0,1]"
);

unit_plane!(
    /// Per-pixel boundary probabilities in `[0, 1]`.
    BoundaryMap,
    "boundary probability outside [0,1]"
);

impl IntensityFrame {
    /// Converts an RGB frame (channels in `[0, 1]`) by luminance.
    pub fn from_rgb(width: usize, height: usize, rgb: &[[f64; 3]]) -> Result<Self> {
        let values = rgb.iter().map(|&[r, g, b]| luminance(r, g, b)).collect();
        IntensityFrame::new(width, height, values)
    }
}

/// Rec. 601 luma.
pub fn luminance(r: f64, g: f64, b: f64) -> f64 {
    (0.299 * r + 0.587 * g + 0.114 * b).clamp(0.0, 1.0)
}

pub type LabelFrame = Plane<u32>;

/// Largest admissible region id (exclusive).
pub const MAX_LABEL: u32 = 1 << 31;

/// Per-pixel, per-frame integer labeling shared by superpixels, ground truth
/// and output supervoxels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVolume {
    width: usize,
    height: usize,
    frames: Vec<LabelFrame>,
}

impl LabeledVolume {
    pub fn new(frames: Vec<LabelFrame>) -> Result<Self> {
        let first = frames.first().ok_or(Error::Empty("labeled volume without frames"))?;
        let (width, height) = (first.width(), first.height());
        for frame in &frames {
            first.check_shape(frame)?;
            if let Some(&bad) = frame.data().iter().find(|&&l| l >= MAX_LABEL) {
                return Err(Error::param(format!("label {bad} exceeds 2^31 - 1")));
            }
        }
        Ok(LabeledVolume { width, height, frames })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn frame(&self, t: usize) -> &LabelFrame {
        &self.frames[t]
    }

    pub fn frames(&self) -> &[LabelFrame] {
        &self.frames
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, t: usize) -> u32 {
        self.frames[t].get(x, y)
    }

    pub fn num_voxels(&self) -> usize {
        self.width * self.height * self.frames.len()
    }

    pub(crate) fn check_same_shape(&self, other: &LabeledVolume) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                expected_width: self.width,
                expected_height: self.height,
                width: other.width,
                height: other.height,
            });
        }
        if self.frames.len() != other.frames.len() {
            return Err(Error::FrameCountMismatch {
                expected: self.frames.len(),
                actual: other.frames.len(),
            });
        }
        Ok(())
    }

    /// Sorted distinct labels of one frame.
    pub fn frame_labels(&self, t: usize) -> Vec<u32> {
        sorted_labels(&self.frames[t])
    }
}

pub(crate) fn sorted_labels(frame: &LabelFrame) -> Vec<u32> {
    let mut labels = frame.data().to_vec();
    labels.sort_unstable();
    labels.dedup();
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_intensity() {
        let err = IntensityFrame::new(2, 1, vec![0.5, 1.5]).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { index: 1, .. }));
    }

    #[test]
    fn luminance_weights() {
        assert!((luminance(1.0, 0.0, 0.0) - 0.299).abs() < 1e-15);
        assert!((luminance(1.0, 1.0, 1.0) - 1.0).abs() < 1e-12);
        let f = IntensityFrame::from_rgb(1, 1, &[[0.0, 1.0, 0.0]]).unwrap();
        assert!((f.get(0, 0) - 0.587).abs() < 1e-15);
    }

    #[test]
    fn volume_requires_uniform_frames() {
        let a = Plane::filled(2, 2, 0u32).unwrap();
        let b = Plane::filled(3, 2, 0u32).unwrap();
        assert!(matches!(
            LabeledVolume::new(vec![a.clone(), b]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(LabeledVolume::new(vec![]).is_err());
        let big = Plane::filled(2, 2, MAX_LABEL).unwrap();
        assert!(LabeledVolume::new(vec![a, big]).is_err());
    }
}
