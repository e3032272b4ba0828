//! Image comparison metrics.

use thiserror::Error;

use crate::image::{quantize, Image};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("image sizes differ: {0}x{1} vs {2}x{3}")]
pub struct DimensionMismatch(pub u32, pub u32, pub u32, pub u32);

fn check(a: &Image, b: &Image) -> Result<(), DimensionMismatch> {
    if a.width != b.width || a.height != b.height {
        return Err(DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    Ok(())
}

pub fn mse(a: &Image, b: &Image) -> Result<f64, DimensionMismatch> {
    check(a, b)?;
    let n = a.pixels.len() * 3;
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = a.pixels.iter().zip(&b.pixels).map(|(p, q)| (p - q).norm_squared()).sum();
    Ok(sum / n as f64)
}

/// PSNR in dB for signals in `[0, 1]`; `f64::INFINITY` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64, DimensionMismatch> {
    let m = mse(a, b)?;
    Ok(if m == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / m).log10() })
}

/// PSNR between the 8-bit quantizations of two images.
pub fn psnr_u8(a: &Image, b: &Image) -> Result<f64, DimensionMismatch> {
    psnr(&a.quantized(), &b.quantized())
}

/// Largest per-channel difference after 8-bit quantization, in levels.
pub fn max_channel_diff_u8(a: &Image, b: &Image) -> Result<u8, DimensionMismatch> {
    check(a, b)?;
    Ok(a.pixels
        .iter()
        .zip(&b.pixels)
        .flat_map(|(p, q)| (0..3).map(move |c| quantize(p[c]).abs_diff(quantize(q[c]))))
        .max()
        .unwrap_or(0))
}

/// Mean SSIM over the three channels with an 11×11 Gaussian window
/// (σ = 1.5), `K1 = 0.01`, `K2 = 0.03`, dynamic range 1. Only windows fully
/// inside the image are used; images smaller than the window fall back to a
/// single window over the whole image.
pub fn ssim(a: &Image, b: &Image) -> Result<f64, DimensionMismatch> {
    check(a, b)?;
    const R: usize = 5;
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let (w, h) = (a.width as usize, a.height as usize);
    if w == 0 || h == 0 {
        return Ok(1.0);
    }
    let g: Vec<f64> = (0..=2 * R).map(|i| (-((i as f64 - R as f64).powi(2)) / (2.0 * 1.5 * 1.5)).exp()).collect();
    let gs: f64 = g.iter().sum();
    let g: Vec<f64> = g.iter().map(|v| v / gs).collect();
    let windows: Vec<(usize, usize, usize, usize)> = if w > 2 * R && h > 2 * R {
        (R..h - R).flat_map(|y| (R..w - R).map(move |x| (x - R, y - R, 2 * R + 1, 2 * R + 1))).collect()
    } else {
        vec![(0, 0, w, h)]
    };
    let full_window = w > 2 * R && h > 2 * R;
    let mut total = 0.0;
    for c in 0..3 {
        for &(x0, y0, ww, wh) in &windows {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy, mut wsum) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for j in 0..wh {
                for i in 0..ww {
                    let k = if full_window { g[i] * g[j] } else { 1.0 };
                    let p = a.get((x0 + i) as u32, (y0 + j) as u32)[c];
                    let q = b.get((x0 + i) as u32, (y0 + j) as u32)[c];
                    mx += k * p;
                    my += k * q;
                    sxx += k * p * p;
                    syy += k * q * q;
                    sxy += k * p * q;
                    wsum += k;
                }
            }
            let (mx, my) = (mx / wsum, my / wsum);
            let vx = sxx / wsum - mx * mx;
            let vy = syy / wsum - my * my;
            let cov = sxy / wsum - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    Ok(total / (3 * windows.len()) as f64)
}
