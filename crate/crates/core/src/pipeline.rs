//! One-stop feature computation: normalization, LPI, IBS, SH, SHIBS, fusion.

use crate::energymaps::{ibs_map, shadow_map, shibs, ShadowParams};
use crate::fusion::fuse;
use crate::image::Image;
use crate::localphase::{lpi, LogGaborParams};

#[derive(Debug, Clone, Copy, Default)]
pub struct FeatureParams {
    pub log_gabor: LogGaborParams,
    pub shadow: ShadowParams,
}

/// All feature maps for one frame, each sharing the frame's dimensions.
#[derive(Debug, Clone)]
pub struct FeatureMaps {
    /// The input after `[0, 1]` normalization; the reference image for fusion.
    pub normalized: Image,
    pub lpi: Image,
    pub ibs: Image,
    pub shadow: Image,
    pub shibs: Image,
    pub fused: Image,
}

/// Runs the full feature stage on a (rectified) frame.
///
/// The fourth-power enhancement feeds only the local phase path; IBS and SH
/// consume the plain normalized image.
pub fn compute_features(img: &Image, params: &FeatureParams) -> FeatureMaps {
    let normalized = img.normalize();
    let lpi_img = lpi(&normalized, &params.log_gabor);
    let ibs_img = ibs_map(&normalized);
    let sh_img = shadow_map(&normalized, &params.shadow);
    let shibs_img = shibs(&sh_img, &ibs_img).expect("maps share the frame dims");
    let fused = fuse(&normalized, &lpi_img, &shibs_img).expect("maps share the frame dims");
    FeatureMaps {
        normalized,
        lpi: lpi_img,
        ibs: ibs_img,
        shadow: sh_img,
        shibs: shibs_img,
        fused,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate, PhantomSpec};
    use crate::SeverityClass;

    #[test]
    fn maps_share_dimensions_and_ranges() {
        let spec = PhantomSpec::sampled(SeverityClass::new(3).unwrap(), 64, 64, 0.05, 1);
        let (img, _) = generate(&spec).unwrap();
        let maps = compute_features(&img, &FeatureParams::default());
        for m in [&maps.lpi, &maps.ibs, &maps.shadow, &maps.shibs, &maps.fused] {
            assert_eq!((m.rows(), m.cols()), (64, 64));
            assert!(m.min() >= -1e-12 && m.max() <= 1.0 + 1e-12);
        }
    }
}
