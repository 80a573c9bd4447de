//! Fused image: sum of the original image, LPI and SHIBS, renormalized.
//!
//! The fused image concentrates energy at and below the pleural line and is
//! the visualization handed to a reader (or a downstream model) in place of
//! the raw frame.

use crate::image::{Image, ImageError};

/// Equal-weight sum of the three maps, rescaled to `[0, 1]`.
/// Commutative in its arguments.
pub fn fuse(img: &Image, lpi: &Image, shibs: &Image) -> Result<Image, ImageError> {
    img.same_dims(lpi)?;
    img.same_dims(shibs)?;
    let data = img
        .data()
        .iter()
        .zip(lpi.data())
        .zip(shibs.data())
        .map(|((&a, &b), &c)| a + b + c)
        .collect();
    Ok(Image::new(img.rows(), img.cols(), data)?.normalize())
}
