//! Horizontal backward warping with bilinear sampling.
//!
//! For output pixel `(x, y)` the source is sampled at `(x - d, y)` with
//! [`WarpSign::Left`] and `(x + d, y)` with [`WarpSign::Right`], where
//! `d = disp(x, y)`. With the usual rectified convention (`x_right =
//! x_left - d`), `Left` reconstructs the left view from right-view content
//! and `Right` the right view from left-view content; `Right` with a
//! constant disparity shifts image content left by that amount.
//!
//! The sample is valid only when the source coordinate lies fully inside
//! `[0, width - 1]`; otherwise the output value is 0 and the validity mask
//! is 0. Interpolation is `(1 - a) * v0 + a * v1` in `f64`, rounded to
//! `f32` — tests and oracles rely on exactly this expression.

use crate::error::{Error, Result};
use crate::grid::{BitMask, FloatMap, Image};
use crate::par::{self, Exec};

/// Sampling direction: `Left` reads at `x - d`, `Right` at `x + d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarpSign {
    Left,
    Right,
}

impl WarpSign {
    #[inline]
    pub(crate) fn apply(self, x: usize, d: f64) -> f64 {
        match self {
            WarpSign::Left => x as f64 - d,
            WarpSign::Right => x as f64 + d,
        }
    }
}

/// Bilinear sample of one interleaved row at horizontal position `xs`;
/// `None` when `xs` is outside `[0, width - 1]`.
#[inline]
pub(crate) fn sample_row(row: &[f32], width: usize, channels: usize, xs: f64, c: usize) -> Option<f64> {
    if !(0.0..=(width - 1) as f64).contains(&xs) {
        return None;
    }
    let x0 = xs.floor() as usize;
    let a = xs - x0 as f64;
    let v0 = row[x0 * channels + c] as f64;
    if a == 0.0 {
        Some(v0)
    } else {
        let v1 = row[(x0 + 1) * channels + c] as f64;
        Some((1.0 - a) * v0 + a * v1)
    }
}

fn warp_kernel(
    exec: Exec,
    height: usize,
    width: usize,
    channels: usize,
    src: &[f32],
    disp: &FloatMap,
    sign: WarpSign,
) -> (Vec<f32>, Vec<u8>) {
    let mut out = vec![0.0f32; height * width * channels];
    let mut mask = vec![0u8; height * width];
    let row_stride = width * channels;
    par::fill_rows_pair(exec, &mut out, row_stride, &mut mask, width, |y, orow, mrow| {
        let srow = &src[y * row_stride..(y + 1) * row_stride];
        let drow = disp.row(y);
        for x in 0..width {
            let xs = sign.apply(x, drow[x] as f64);
            let mut ok = true;
            for c in 0..channels {
                match sample_row(srow, width, channels, xs, c) {
                    Some(v) => orow[x * channels + c] = v as f32,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            mrow[x] = ok as u8;
        }
    });
    (out, mask)
}

fn check_shapes(h: usize, w: usize, disp: &FloatMap) -> Result<()> {
    if disp.height() != h || disp.width() != w {
        return Err(Error::ShapeMismatch(format!(
            "disparity is {}x{}, source is {h}x{w}",
            disp.height(),
            disp.width()
        )));
    }
    Ok(())
}

fn warp_image_with(
    exec: Exec,
    src: &Image,
    disp: &FloatMap,
    sign: WarpSign,
) -> Result<(Image, BitMask)> {
    check_shapes(src.height(), src.width(), disp)?;
    let (out, mask) = warp_kernel(
        exec,
        src.height(),
        src.width(),
        src.channels(),
        src.data(),
        disp,
        sign,
    );
    Ok((
        Image::new(src.height(), src.width(), src.channels(), out)?,
        BitMask::new(src.height(), src.width(), mask)?,
    ))
}

fn warp_map_with(
    exec: Exec,
    src: &FloatMap,
    disp: &FloatMap,
    sign: WarpSign,
) -> Result<(FloatMap, BitMask)> {
    check_shapes(src.height(), src.width(), disp)?;
    let (out, mask) = warp_kernel(exec, src.height(), src.width(), 1, src.data(), disp, sign);
    Ok((
        FloatMap::new(src.height(), src.width(), out)?,
        BitMask::new(src.height(), src.width(), mask)?,
    ))
}

/// Warps a multi-channel image; the mask is shared across channels.
pub fn warp_image(src: &Image, disp: &FloatMap, sign: WarpSign) -> Result<(Image, BitMask)> {
    warp_image_with(Exec::default(), src, disp, sign)
}

/// Sequential twin of [`warp_image`] (no-`parallel` builds and benches).
pub fn warp_image_seq(src: &Image, disp: &FloatMap, sign: WarpSign) -> Result<(Image, BitMask)> {
    warp_image_with(Exec::Sequential, src, disp, sign)
}

/// Warps a single-channel map.
pub fn warp_map(src: &FloatMap, disp: &FloatMap, sign: WarpSign) -> Result<(FloatMap, BitMask)> {
    warp_map_with(Exec::default(), src, disp, sign)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> FloatMap {
        FloatMap::from_fn(h, w, |_, x| x as f32).unwrap()
    }

    #[test]
    fn zero_disparity_is_bitwise_identity_with_full_mask() {
        let src = Image::from_fn(3, 5, 3, |y, x, c| ((y * 7 + x * 3 + c) % 11) as f32 / 11.0)
            .unwrap();
        let disp = FloatMap::constant(3, 5, 0.0).unwrap();
        for sign in [WarpSign::Left, WarpSign::Right] {
            let (out, mask) = warp_image(&src, &disp, sign).unwrap();
            assert_eq!(out.data(), src.data());
            assert_eq!(mask.count_ones(), 15);
        }
    }

    #[test]
    fn integer_shift_moves_content() {
        // Right sign on a ramp: out(x) = src(x + 1), last column invalid.
        let src = ramp(1, 4);
        let disp = FloatMap::constant(1, 4, 1.0).unwrap();
        let (out, mask) = warp_map(&src, &disp, WarpSign::Right).unwrap();
        assert_eq!(out.data(), &[1.0, 2.0, 3.0, 0.0]);
        assert_eq!(mask.data(), &[1, 1, 1, 0]);
    }

    #[test]
    fn left_sign_samples_backwards() {
        let src = ramp(1, 4);
        let disp = FloatMap::constant(1, 4, 1.0).unwrap();
        let (out, mask) = warp_map(&src, &disp, WarpSign::Left).unwrap();
        assert_eq!(out.data(), &[0.0, 0.0, 1.0, 2.0]);
        assert_eq!(mask.data(), &[0, 1, 1, 1]);
    }

    #[test]
    fn half_pixel_disparity_interpolates() {
        // Interior sample at x + 0.5 on a ramp gives x + 0.5.
        let src = ramp(1, 5);
        let disp = FloatMap::constant(1, 5, 0.5).unwrap();
        let (out, mask) = warp_map(&src, &disp, WarpSign::Right).unwrap();
        for x in 0..4 {
            assert!((out.get(0, x) - (x as f32 + 0.5)).abs() < 1e-6);
            assert!(mask.get(0, x));
        }
        assert!(!mask.get(0, 4));
        assert_eq!(out.get(0, 4), 0.0);
    }

    #[test]
    fn sample_exactly_at_last_column_is_valid() {
        let src = ramp(1, 4);
        let disp = FloatMap::from_fn(1, 4, |_, x| (3 - x) as f32).unwrap();
        let (out, mask) = warp_map(&src, &disp, WarpSign::Right).unwrap();
        // Every pixel samples exactly x + (3 - x) = 3, the last column.
        assert_eq!(out.data(), &[3.0; 4]);
        assert_eq!(mask.data(), &[1; 4]);
    }

    #[test]
    fn negative_disparity_flips_direction() {
        let src = ramp(1, 4);
        let disp = FloatMap::constant(1, 4, -1.0).unwrap();
        let (out, _) = warp_map(&src, &disp, WarpSign::Left).unwrap();
        assert_eq!(out.data(), &[1.0, 2.0, 3.0, 0.0]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let src = ramp(2, 4);
        let disp = FloatMap::constant(1, 4, 0.0).unwrap();
        assert!(matches!(
            warp_map(&src, &disp, WarpSign::Left),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let src = Image::from_fn(9, 17, 3, |y, x, c| {
            (((y * 131 + x * 31 + c * 7) % 97) as f32) / 97.0
        })
        .unwrap();
        let disp =
            FloatMap::from_fn(9, 17, |y, x| ((y * 13 + x * 5) % 23) as f32 * 0.37 - 2.0).unwrap();
        let (a, ma) = warp_image(&src, &disp, WarpSign::Left).unwrap();
        let (b, mb) = warp_image_seq(&src, &disp, WarpSign::Left).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(ma, mb);
    }
}
