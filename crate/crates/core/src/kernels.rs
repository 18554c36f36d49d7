//! Inner loops of the convolution. Both primitives walk a flat source buffer
//! through a list of tap offsets, so forward, input-gradient and
//! kernel-gradient passes all reduce to contiguous, unit-stride loads.
//!
//! On x86-64 machines with AVX2+FMA a copy of each loop compiled for those
//! features is picked at runtime.

use crate::scalar::Scalar;

const CH: usize = 16;
const GROUP: usize = 4;

#[inline(always)]
fn madd<T: Scalar, const FMA: bool>(acc: T, a: T, b: T) -> T {
    if FMA {
        a.mul_add(b, acc)
    } else {
        acc + a * b
    }
}

/// `out[r·n + j] = Σ_t weights[r·taps + t] · src[offsets[t] + j]` for every
/// row `r` of `out` and `j < n`.
pub(crate) fn gather<T: Scalar>(out: &mut [T], n: usize, src: &[T], offsets: &[usize], weights: &[T]) {
    let rows = out.len() / n;
    assert_eq!(out.len(), rows * n, "gather: output length");
    assert_eq!(weights.len(), rows * offsets.len(), "gather: weight length");
    if let Some(&max) = offsets.iter().max() {
        assert!(max + n <= src.len(), "gather: tap reaches past source");
    }
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
        // SAFETY: the required CPU features were just detected.
        unsafe { gather_fma(out, n, src, offsets, weights) };
        return;
    }
    gather_body::<T, false>(out, n, src, offsets, weights);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn gather_fma<T: Scalar>(out: &mut [T], n: usize, src: &[T], offsets: &[usize], weights: &[T]) {
    gather_body::<T, true>(out, n, src, offsets, weights);
}

#[inline(always)]
fn gather_body<T: Scalar, const FMA: bool>(
    out: &mut [T],
    n: usize,
    src: &[T],
    offsets: &[usize],
    weights: &[T],
) {
    let taps = offsets.len();
    let rows = out.len() / n;
    let mut r0 = 0;
    while r0 < rows {
        let g = (rows - r0).min(GROUP);
        let w = &weights[r0 * taps..(r0 + g) * taps];
        let o = &mut out[r0 * n..(r0 + g) * n];
        match g {
            4 => gather_rows::<T, FMA, 4>(o, n, src, offsets, w),
            3 => gather_rows::<T, FMA, 3>(o, n, src, offsets, w),
            2 => gather_rows::<T, FMA, 2>(o, n, src, offsets, w),
            _ => gather_rows::<T, FMA, 1>(o, n, src, offsets, w),
        }
        r0 += g;
    }
}

#[inline(always)]
fn gather_rows<T: Scalar, const FMA: bool, const G: usize>(
    out: &mut [T],
    n: usize,
    src: &[T],
    offsets: &[usize],
    weights: &[T],
) {
    let taps = offsets.len();
    let full = n / CH * CH;
    let mut j0 = 0;
    while j0 < full {
        let mut acc = [[T::zero(); CH]; G];
        for (t, &off) in offsets.iter().enumerate() {
            let s: &[T; CH] = src[off + j0..off + j0 + CH].try_into().unwrap();
            for (g, a) in acc.iter_mut().enumerate() {
                let wv = weights[g * taps + t];
                for l in 0..CH {
                    a[l] = madd::<T, FMA>(a[l], wv, s[l]);
                }
            }
        }
        for (g, a) in acc.iter().enumerate() {
            out[g * n + j0..g * n + j0 + CH].copy_from_slice(a);
        }
        j0 += CH;
    }
    for j in full..n {
        for g in 0..G {
            let mut acc = T::zero();
            for (t, &off) in offsets.iter().enumerate() {
                acc = madd::<T, FMA>(acc, weights[g * taps + t], src[off + j]);
            }
            out[g * n + j] = acc;
        }
    }
}

/// `out[r·taps + t] += Σ_{j<n} a[r·n + j] · src[offsets[t] + j]`.
pub(crate) fn dot_taps<T: Scalar>(out: &mut [T], a: &[T], n: usize, src: &[T], offsets: &[usize]) {
    let rows = a.len() / n;
    assert_eq!(a.len(), rows * n, "dot_taps: lhs length");
    assert_eq!(out.len(), rows * offsets.len(), "dot_taps: output length");
    if let Some(&max) = offsets.iter().max() {
        assert!(max + n <= src.len(), "dot_taps: tap reaches past source");
    }
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
        // SAFETY: the required CPU features were just detected.
        unsafe { dot_fma(out, a, n, src, offsets) };
        return;
    }
    dot_body::<T, false>(out, a, n, src, offsets);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn dot_fma<T: Scalar>(out: &mut [T], a: &[T], n: usize, src: &[T], offsets: &[usize]) {
    dot_body::<T, true>(out, a, n, src, offsets);
}

const DOT_ROWS: usize = 4;
const DOT_TAPS: usize = 3;

#[inline(always)]
fn dot_body<T: Scalar, const FMA: bool>(out: &mut [T], a: &[T], n: usize, src: &[T], offsets: &[usize]) {
    let taps = offsets.len();
    let rows = a.len() / n;
    let mut r0 = 0;
    while r0 < rows {
        let r = (rows - r0).min(DOT_ROWS);
        let a_rows = &a[r0 * n..(r0 + r) * n];
        let mut t0 = 0;
        while t0 < taps {
            let g = (taps - t0).min(DOT_TAPS);
            let offs = &offsets[t0..t0 + g];
            let mut sums = [[T::zero(); DOT_TAPS]; DOT_ROWS];
            macro_rules! block {
                ($($r:literal, $g:literal);*) => {
                    match (r, g) {
                        $(($r, $g) => dot_block::<T, FMA, $r, $g>(&mut sums, a_rows, n, src, offs),)*
                        _ => unreachable!(),
                    }
                };
            }
            block!(4, 3; 4, 2; 4, 1; 3, 3; 3, 2; 3, 1; 2, 3; 2, 2; 2, 1; 1, 3; 1, 2; 1, 1);
            for (ri, row_sums) in sums.iter().enumerate().take(r) {
                for (gi, &v) in row_sums.iter().enumerate().take(g) {
                    out[(r0 + ri) * taps + t0 + gi] += v;
                }
            }
            t0 += g;
        }
        r0 += r;
    }
}

const DOT_CH: usize = 8;

#[inline(always)]
fn dot_block<T: Scalar, const FMA: bool, const R: usize, const G: usize>(
    sums: &mut [[T; DOT_TAPS]; DOT_ROWS],
    a: &[T],
    n: usize,
    src: &[T],
    offsets: &[usize],
) {
    let full = n / DOT_CH * DOT_CH;
    let mut acc = [[[T::zero(); DOT_CH]; G]; R];
    let mut j0 = 0;
    while j0 < full {
        let av: [&[T; DOT_CH]; R] =
            std::array::from_fn(|r| a[r * n + j0..r * n + j0 + DOT_CH].try_into().unwrap());
        for g in 0..G {
            let off = offsets[g];
            let s: &[T; DOT_CH] = src[off + j0..off + j0 + DOT_CH].try_into().unwrap();
            for r in 0..R {
                for l in 0..DOT_CH {
                    acc[r][g][l] = madd::<T, FMA>(acc[r][g][l], av[r][l], s[l]);
                }
            }
        }
        j0 += DOT_CH;
    }
    for r in 0..R {
        for g in 0..G {
            let mut total = acc[r][g].iter().copied().fold(T::zero(), |x, y| x + y);
            for j in full..n {
                total = madd::<T, FMA>(total, a[r * n + j], src[offsets[g] + j]);
            }
            sums[r][g] = total;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gather_matches_naive_including_tail() {
        let n = 37;
        let src: Vec<f64> = (0..120).map(|i| (i as f64 * 0.37).sin()).collect();
        let offsets = [0, 3, 11, 50, 70];
        for rows in 1..=6 {
            let weights: Vec<f64> = (0..rows * offsets.len()).map(|i| i as f64 * 0.1 - 1.0).collect();
            let mut out = vec![9.0; rows * n];
            gather(&mut out, n, &src, &offsets, &weights);
            for r in 0..rows {
                for j in 0..n {
                    let want: f64 = offsets
                        .iter()
                        .enumerate()
                        .map(|(t, &o)| weights[r * offsets.len() + t] * src[o + j])
                        .sum();
                    assert!((out[r * n + j] - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dot_taps_accumulates_and_matches_naive() {
        let n = 45;
        let src: Vec<f64> = (0..100).map(|i| (i as f64 * 0.71).cos()).collect();
        let a: Vec<f64> = (0..2 * n).map(|i| i as f64 * 0.01).collect();
        let offsets = [0, 1, 2, 5, 9, 20, 55];
        let mut out = vec![1.0; 2 * offsets.len()];
        dot_taps(&mut out, &a, n, &src, &offsets);
        for r in 0..2 {
            for (t, &o) in offsets.iter().enumerate() {
                let want: f64 = 1.0 + (0..n).map(|j| a[r * n + j] * src[o + j]).sum::<f64>();
                assert!((out[r * offsets.len() + t] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    #[should_panic(expected = "past source")]
    fn gather_rejects_out_of_range_tap() {
        let mut out = vec![0.0f32; 4];
        gather(&mut out, 4, &[0.0; 6], &[3], &[1.0]);
    }
}
