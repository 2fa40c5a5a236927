//! Training losses over supplied images and feature maps, plus PSNR and SSIM.
//!
//! Norms are L1. `N` in the reconstruction and TV losses counts pixel
//! channels.

use crate::error::{Error, Result};

/// Interleaved multi-channel image with f64 samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Image> {
        if data.len() != width * height * channels {
            return Err(Error::input(format!(
                "{}x{}x{} image needs {} samples, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_rgb8(width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<Image> {
        Image::new(width, height, 3, rgb.iter().flatten().map(|&v| v as f64).collect())
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    fn same_shape(&self, other: &Image) -> Result<()> {
        if (self.width, self.height, self.channels) != (other.width, other.height, other.channels) {
            return Err(Error::input(format!(
                "shape mismatch: {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )));
        }
        Ok(())
    }
}

fn check_mask(img: &Image, mask: &[bool], name: &str) -> Result<()> {
    if mask.len() != img.width * img.height {
        return Err(Error::input(format!(
            "{name} mask has {} entries for {} pixels",
            mask.len(),
            img.width * img.height
        )));
    }
    Ok(())
}

/// (L_synthesis, L_context): masked L1 differences over N.
pub fn masked_recon_losses(i: &Image, gt: &Image, synthesis: &[bool], context: &[bool]) -> Result<(f64, f64)> {
    i.same_shape(gt)?;
    check_mask(i, synthesis, "synthesis")?;
    check_mask(i, context, "context")?;
    if synthesis.iter().zip(context).any(|(s, c)| *s && *c) {
        return Err(Error::input("synthesis and context masks overlap"));
    }
    let n = i.data.len() as f64;
    if n == 0.0 {
        return Ok((0.0, 0.0));
    }
    let (mut ls, mut lc) = (0.0, 0.0);
    for (p, (a, b)) in i.data.chunks(i.channels).zip(gt.data.chunks(i.channels)).enumerate() {
        let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
        if synthesis[p] {
            ls += d;
        }
        if context[p] {
            lc += d;
        }
    }
    Ok((ls / n, lc / n))
}

/// Channel-major feature map (C x H x W).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<FeatureMap> {
        if data.len() != channels * height * width {
            return Err(Error::input("feature map size does not match its shape"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("feature map has non-finite values"));
        }
        Ok(FeatureMap {
            channels,
            height,
            width,
            data,
        })
    }

    fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    /// Normalized Gram matrix, row-major C x C, divided by C*H*W.
    pub fn gram(&self) -> Vec<f64> {
        let c = self.channels;
        let hw = self.height * self.width;
        let norm = (c * hw) as f64;
        let mut g = vec![0.0; c * c];
        for a in 0..c {
            let fa = &self.data[a * hw..(a + 1) * hw];
            for b in a..c {
                let fb = &self.data[b * hw..(b + 1) * hw];
                let s: f64 = fa.iter().zip(fb).map(|(x, y)| x * y).sum::<f64>() / norm;
                g[a * c + b] = s;
                g[b * c + a] = s;
            }
        }
        g
    }
}

fn check_stacks(a: &[FeatureMap], b: &[FeatureMap]) -> Result<()> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::input(format!(
            "feature stacks need equal nonzero depth, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if let Some((x, y)) = a.iter().zip(b).find(|(x, y)| x.shape() != y.shape()) {
        return Err(Error::input(format!("layer shapes differ: {:?} vs {:?}", x.shape(), y.shape())));
    }
    Ok(())
}

/// Sum over layers of the L1 feature difference divided by the layer's
/// element count.
pub fn perceptual_loss(fi: &[FeatureMap], fgt: &[FeatureMap]) -> Result<f64> {
    check_stacks(fi, fgt)?;
    Ok(fi
        .iter()
        .zip(fgt)
        .filter(|(a, _)| !a.data.is_empty())
        .map(|(a, b)| {
            a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.data.len() as f64
        })
        .sum())
}

/// Sum over layers of the L1 difference of normalized Gram matrices, each
/// scaled by 1 / C^2.
pub fn style_loss(fi: &[FeatureMap], fgt: &[FeatureMap]) -> Result<f64> {
    check_stacks(fi, fgt)?;
    Ok(fi
        .iter()
        .zip(fgt)
        .filter(|(a, _)| !a.data.is_empty())
        .map(|(a, b)| {
            let c = a.channels as f64;
            a.gram().iter().zip(b.gram()).map(|(x, y)| (x - y).abs()).sum::<f64>() / (c * c)
        })
        .sum())
}

/// Total variation over horizontally and vertically adjacent pairs that both
/// lie in the synthesis mask, divided by N.
pub fn tv_loss(i: &Image, synthesis: &[bool]) -> Result<f64> {
    check_mask(i, synthesis, "synthesis")?;
    let n = i.data.len() as f64;
    if n == 0.0 {
        return Ok(0.0);
    }
    let (w, h) = (i.width, i.height);
    let diff = |p: usize, q: usize| -> f64 {
        (0..i.channels)
            .map(|c| (i.data[q * i.channels + c] - i.data[p * i.channels + c]).abs())
            .sum()
    };
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if !synthesis[p] {
                continue;
            }
            if x + 1 < w && synthesis[p + 1] {
                total += diff(p, p + 1);
            }
            if y + 1 < h && synthesis[p + w] {
                total += diff(p, p + w);
            }
        }
    }
    Ok(total / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub context: f64,
    pub synthesis: f64,
    pub perceptual: f64,
    pub style: f64,
    pub tv: f64,
}

/// Weights of the color objective, in field order of `LossParts`.
pub const COLOR_WEIGHTS: [f64; 5] = [1.0, 6.0, 0.05, 120.0, 0.01];

pub fn combined_color_objective(p: LossParts) -> f64 {
    let [wc, ws, wp, wst, wtv] = COLOR_WEIGHTS;
    wc * p.context + ws * p.synthesis + wp * p.perceptual + wst * p.style + wtv * p.tv
}

/// The depth model trains on the reconstruction terms only.
pub fn depth_objective(p: LossParts) -> f64 {
    p.context + p.synthesis
}

/// PSNR in dB for 8-bit images; `f64::INFINITY` when identical.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    if a.data.is_empty() {
        return Err(Error::input("psnr of empty images"));
    }
    let mse = a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: 255.0,
        }
    }
}

/// Normalized 1-D Gaussian taps.
pub fn gaussian_taps(window: usize, sigma: f64) -> Vec<f64> {
    let c = (window as f64 - 1.0) / 2.0;
    let taps: Vec<f64> = (0..window)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

/// Separable valid-mode filtering of one channel.
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().enumerate().map(|(i, t)| t * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(i, t)| t * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM over all fully contained Gaussian windows, averaged over channels.
pub fn ssim(a: &Image, b: &Image, params: SsimParams) -> Result<f64> {
    a.same_shape(b)?;
    let k = params.window;
    if k == 0 || a.width < k || a.height < k {
        return Err(Error::input(format!(
            "ssim needs images of at least {k}x{k}, got {}x{}",
            a.width, a.height
        )));
    }
    let taps = gaussian_taps(k, params.sigma);
    let c1 = (params.k1 * params.data_range).powi(2);
    let c2 = (params.k2 * params.data_range).powi(2);
    let (w, h) = (a.width, a.height);
    let mut total = 0.0;
    for ch in 0..a.channels {
        let x: Vec<f64> = (0..w * h).map(|p| a.data[p * a.channels + ch]).collect();
        let y: Vec<f64> = (0..w * h).map(|p| b.data[p * b.channels + ch]).collect();
        let sq = |v: &[f64], u: &[f64]| v.iter().zip(u).map(|(p, q)| p * q).collect::<Vec<_>>();
        let mx = filter_valid(&x, w, h, &taps);
        let my = filter_valid(&y, w, h, &taps);
        let mxx = filter_valid(&sq(&x, &x), w, h, &taps);
        let myy = filter_valid(&sq(&y, &y), w, h, &taps);
        let mxy = filter_valid(&sq(&x, &y), w, h, &taps);
        let mut s = 0.0;
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let vx = mxx[i] - ux * ux;
            let vy = myy[i] - uy * uy;
            let cov = mxy[i] - ux * uy;
            s += ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
        total += s / mx.len() as f64;
    }
    Ok(total / a.channels as f64)
}
