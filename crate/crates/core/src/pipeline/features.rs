//! Per-image feature extraction: preprocessing plus the seven branch inputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::color::{color_features, COLOR_STATS_LEN};
use crate::error::{Error, Result};
use crate::geometry::{align_upright, shape_vector, trace_contour, Contour, SHAPE_LEN};
use crate::neural::Tensor;
use crate::raster::{
    binarize, crop_to_content, downsample_area, largest_component, load_image, resize, resize_mask, rgb_planes,
    to_grayscale, BinaryMask, GrayImage, Plane, RasterImage,
};
use crate::signature::{fourier_descriptors, xy_projection, DEFAULT_DESCRIPTORS, PROJECTION_LEN};
use crate::texture::{texture_features, GlcmConfig, HARALICK_LEN};
use crate::vein::{extract_vein, VeinConfig, VeinStack, DEFAULT_KERNEL, RADII};

/// Working side at which the reference vein kernel size applies.
const REFERENCE_SIDE: f64 = 1600.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    /// Side of the square working canvas after crop and resize.
    pub side: usize,
    /// Side of the color and vein images handed to the image encoders.
    pub encoder_side: usize,
    /// Gaussian kernel for vein extraction; `None` scales 25 px at 1600 px
    /// to the working side.
    pub vein_kernel: Option<usize>,
    pub glcm_levels: usize,
    pub descriptors: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            side: 1600,
            encoder_side: 64,
            vein_kernel: None,
            glcm_levels: 32,
            descriptors: DEFAULT_DESCRIPTORS,
        }
    }
}

impl ExtractConfig {
    pub fn vein_config(&self) -> VeinConfig {
        let kernel = self.vein_kernel.unwrap_or_else(|| {
            let k = (DEFAULT_KERNEL as f64 * self.side as f64 / REFERENCE_SIDE).round() as usize;
            (k.max(3)) | 1
        });
        VeinConfig {
            kernel,
            radii: RADII.to_vec(),
        }
    }

    pub fn glcm_config(&self) -> GlcmConfig {
        GlcmConfig {
            levels: self.glcm_levels,
            ..GlcmConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.side < 16 || self.encoder_side < 8 || self.descriptors == 0 {
            return Err(Error::Config(format!("invalid extraction settings {self:?}")));
        }
        self.glcm_config().validate()?;
        Ok(())
    }
}

/// The seven branch inputs of one leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafFeatureSet {
    pub shape: Vec<f64>,
    pub texture: Vec<f64>,
    pub color_stats: Vec<f64>,
    pub fourier: Vec<f64>,
    pub projection: Vec<f64>,
    /// `[3, s, s]` RGB in [0, 1].
    pub color_image: Tensor,
    /// `[1, s, s]` fused vein response scaled by its maximum.
    pub vein_image: Tensor,
}

/// Intermediate rasters kept for debug dumps.
#[derive(Clone, Debug)]
pub struct Intermediates {
    pub working: RasterImage,
    pub gray: GrayImage,
    pub mask: BinaryMask,
    pub contour: Contour,
    pub veins: VeinStack,
}

/// Binarize, align, crop and resize to the working canvas.
pub fn preprocess(img: &RasterImage, side: usize) -> Result<(RasterImage, BinaryMask)> {
    let gray = to_grayscale(img);
    let mask = binarize(&gray)?;
    let (aligned, amask) = align_upright(img, &mask)?;
    let (cropped, cmask) = crop_to_content(&aligned, &amask)?;
    let working = resize(&cropped, side);
    let wmask = largest_component(&resize_mask(&cmask, side));
    if wmask.count() == 0 {
        return Err(Error::EmptyForeground);
    }
    Ok((working, wmask))
}

fn plane_tensor(planes: &[Plane], scale: f64) -> Result<Tensor> {
    let side = planes[0].width();
    let mut data = Vec::with_capacity(planes.len() * side * side);
    for p in planes {
        data.extend(p.as_raw().iter().map(|v| v * scale));
    }
    Tensor::new(vec![planes.len(), side, side], data)
}

pub fn extract_from_image(
    img: &RasterImage,
    cfg: &ExtractConfig,
    keep_intermediates: bool,
) -> Result<(LeafFeatureSet, Option<Intermediates>)> {
    let (working, mask) = preprocess(img, cfg.side).map_err(|e| e.in_branch("preprocess"))?;
    let gray = to_grayscale(&working);
    let contour = trace_contour(&mask).map_err(|e| e.in_branch("shape"))?;

    let shape = shape_vector(&gray, &mask, &contour).map_err(|e| e.in_branch("shape"))?;
    let texture = texture_features(&gray, &mask, &cfg.glcm_config()).map_err(|e| e.in_branch("texture"))?;
    let color_stats = color_features(&working, &mask).map_err(|e| e.in_branch("color-stats"))?;
    let fourier = fourier_descriptors(&contour, cfg.descriptors).map_err(|e| e.in_branch("fourier"))?;
    let projection = xy_projection(&mask).map_err(|e| e.in_branch("xy-projection"))?;
    let veins = extract_vein(&gray, &mask, &cfg.vein_config()).map_err(|e| e.in_branch("vein"))?;

    let es = cfg.encoder_side;
    let color_planes: Vec<Plane> = rgb_planes(&working).iter().map(|p| downsample_area(p, es)).collect();
    let color_image = plane_tensor(&color_planes, 1.0 / 255.0)?;
    let vein_small = downsample_area(&veins.fused, es);
    let peak = vein_small.as_raw().iter().cloned().fold(0.0, f64::max);
    let vein_image = plane_tensor(&[vein_small], if peak > 0.0 { 1.0 / peak } else { 0.0 })?;

    let set = LeafFeatureSet {
        shape: shape.as_slice().to_vec(),
        texture: texture.to_vec(),
        color_stats: color_stats.as_slice().to_vec(),
        fourier: fourier.as_slice().to_vec(),
        projection: projection.as_slice().to_vec(),
        color_image,
        vein_image,
    };
    debug_assert_eq!(set.shape.len(), SHAPE_LEN);
    debug_assert_eq!(set.texture.len(), HARALICK_LEN);
    debug_assert_eq!(set.color_stats.len(), COLOR_STATS_LEN);
    debug_assert_eq!(set.projection.len(), PROJECTION_LEN);
    let inter = keep_intermediates.then_some(Intermediates {
        working,
        gray,
        mask,
        contour,
        veins,
    });
    Ok((set, inter))
}

pub fn extract_features(path: &Path, cfg: &ExtractConfig) -> Result<LeafFeatureSet> {
    let img = load_image(path)?;
    Ok(extract_from_image(&img, cfg, false)?.0)
}
