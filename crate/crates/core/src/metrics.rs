//! Secrecy and accuracy metrics: PSNR, global SSIM, top-k bit accuracy and
//! bits-per-pixel capacity, plus the report row they are aggregated into.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Tolerance used for bit accuracy throughout the experiments.
pub const DEFAULT_DELTA: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsnrMode {
    /// `10·log10(peak² / mean squared error)`; `peak` is the dynamic range
    /// (1 for normalized images, 255 for 8-bit).
    Standard { peak: f64 },
    /// `10·log10(max|cover| / summed squared error)`.
    Literal,
}

impl Default for PsnrMode {
    fn default() -> Self {
        PsnrMode::Standard { peak: 1.0 }
    }
}

/// Returns `f64::INFINITY` for identical images.
pub fn psnr<T: Scalar>(cover: &Tensor<T>, container: &Tensor<T>, mode: PsnrMode) -> Result<f64> {
    container.ensure_shape("psnr", cover.shape())?;
    let sum: f64 = cover
        .data()
        .iter()
        .zip(container.data())
        .map(|(&a, &b)| {
            let d = a.as_f64() - b.as_f64();
            d * d
        })
        .sum();
    if sum == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(match mode {
        PsnrMode::Standard { peak } => 10.0 * (peak * peak / (sum / cover.len() as f64)).log10(),
        PsnrMode::Literal => {
            let max = cover.data().iter().map(|v| v.as_f64().abs()).fold(0.0, f64::max);
            10.0 * (max / sum).log10()
        }
    })
}

/// SSIM from global image statistics with `c1 = (0.01·L)²`, `c2 = (0.03·L)²`.
pub fn ssim_with_range<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, dynamic_range: f64) -> Result<f64> {
    b.ensure_shape("ssim", a.shape())?;
    let n = a.len() as f64;
    let mean = |t: &Tensor<T>| t.data().iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let (mu_a, mu_b) = (mean(a), mean(b));
    let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (dx, dy) = (x.as_f64() - mu_a, y.as_f64() - mu_b);
        var_a += dx * dx;
        var_b += dy * dy;
        cov += dx * dy;
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    let c1 = (0.01 * dynamic_range).powi(2);
    let c2 = (0.03 * dynamic_range).powi(2);
    Ok(((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)))
}

pub fn ssim<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<f64> {
    ssim_with_range(a, b, 1.0)
}

/// Marks the `k` largest values; ties go to the lower row-major index.
pub fn top_k_mask<T: Scalar>(values: &[T], k: usize) -> Result<Vec<bool>> {
    if k > values.len() {
        return Err(Error::InvalidArgument(format!(
            "top_k_mask: k={k} exceeds {} pixels",
            values.len()
        )));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| {
        values[j]
            .partial_cmp(&values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut mask = vec![false; values.len()];
    for &i in &idx[..k] {
        mask[i] = true;
    }
    Ok(mask)
}

/// Fraction of the secret's active bits recovered within `delta` once the
/// reveal is masked to its `k` most active pixels (`k` = active bit count).
pub fn bit_accuracy<T: Scalar>(secret: &Tensor<T>, revealed: &Tensor<T>, delta: f64) -> Result<f64> {
    revealed.ensure_shape("bit_accuracy", secret.shape())?;
    let active = secret.data().iter().filter(|&&s| s > T::zero()).count();
    if active == 0 {
        return Err(Error::InvalidArgument(
            "bit_accuracy: secret has no active bits".into(),
        ));
    }
    let mask = top_k_mask(revealed.data(), active)?;
    let matched = secret
        .data()
        .iter()
        .zip(revealed.data())
        .zip(&mask)
        .filter(|((&s, &r), &m)| {
            let masked = if m { r.as_f64() } else { 0.0 };
            s > T::zero() && (s.as_f64() - masked).abs() <= delta
        })
        .count();
    Ok(matched as f64 / active as f64)
}

/// Payload bits per cover sample, `D / (H·W·C)`.
pub fn bpp(dims: usize, height: usize, width: usize, channels: usize) -> f64 {
    dims as f64 / (height * width * channels) as f64
}

/// One row of the evaluation tables. Loss values are raw (not rescaled).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub bpp: f64,
    pub alpha: f64,
    pub beta: f64,
    pub loss_all: f64,
    pub loss_mse: f64,
    pub loss_bce: f64,
    /// Mean over pairs; `INFINITY` when any pair is noise-free.
    pub psnr_db: f64,
    pub ssim: f64,
    pub bacc: f64,
    pub n_pairs: usize,
}

pub const REPORT_HEADER: &str = "BPP,alpha,beta,L_all,L_mse,L_bce,PSNR,SSIM,BACC";

/// Formats a metric; infinities print as `inf`.
pub fn format_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

impl MetricsReport {
    pub fn csv_row(&self) -> String {
        [
            self.bpp,
            self.alpha,
            self.beta,
            self.loss_all,
            self.loss_mse,
            self.loss_bce,
            self.psnr_db,
            self.ssim,
            self.bacc,
        ]
        .iter()
        .map(|&v| format_value(v))
        .collect::<Vec<_>>()
        .join(",")
    }

    pub fn to_csv(reports: &[MetricsReport]) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for r in reports {
            let _ = writeln!(s, "{}", r.csv_row());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], v: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(shape, v).unwrap()
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let a = t(&[1, 2, 2], &[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(psnr(&a, &a, PsnrMode::default()).unwrap(), f64::INFINITY);
        assert_eq!(psnr(&a, &a, PsnrMode::Literal).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_one_level_in_eight_bit_range() {
        let a = t(&[1, 2, 2], &[10.0, 20.0, 30.0, 40.0]);
        let b = a.map(|v| v + 1.0);
        let p = psnr(&a, &b, PsnrMode::Standard { peak: 255.0 }).unwrap();
        assert!((p - 48.130_803_608_679_1).abs() < 1e-9, "{p}");
    }

    #[test]
    fn psnr_decreases_with_error() {
        let a = t(&[4], &[0.5; 4]);
        let mut last = f64::INFINITY;
        for d in [0.01, 0.02, 0.05, 0.1] {
            let p = psnr(&a, &a.map(|v| v + d), PsnrMode::default()).unwrap();
            assert!(p < last);
            last = p;
        }
        assert!(psnr(&a, &t(&[2], &[0.0, 0.0]), PsnrMode::default()).is_err());
    }

    #[test]
    fn ssim_identity_negation_symmetry() {
        let a = t(&[1, 2, 2], &[0.1, 0.9, 0.3, 0.6]);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let neg = a.map(|v| 1.0 - v);
        assert!(ssim(&a, &neg).unwrap() < 0.0);
        let b = t(&[1, 2, 2], &[0.2, 0.7, 0.35, 0.5]);
        assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
    }

    #[test]
    fn top_k_cases() {
        let v = [0.9, 0.1, 0.9, 0.5];
        assert_eq!(top_k_mask(&v, 0).unwrap(), vec![false; 4]);
        assert_eq!(top_k_mask(&v, 4).unwrap(), vec![true; 4]);
        assert_eq!(top_k_mask(&v, 2).unwrap(), vec![true, false, true, false]);
        assert_eq!(
            top_k_mask(&[0.9, 0.9, 0.9, 0.1], 2).unwrap(),
            vec![true, true, false, false]
        );
        assert!(top_k_mask(&v, 5).is_err());
    }

    #[test]
    fn bit_accuracy_cases() {
        let sec = t(&[1, 2, 2], &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(bit_accuracy(&sec, &sec, DEFAULT_DELTA).unwrap(), 1.0);
        let rev = t(&[1, 2, 2], &[0.9995, 0.2, 0.9, 0.1]);
        assert_eq!(bit_accuracy(&sec, &rev, DEFAULT_DELTA).unwrap(), 0.5);
        let empty = t(&[1, 2, 2], &[0.0; 4]);
        assert!(bit_accuracy(&empty, &rev, DEFAULT_DELTA).is_err());
    }

    #[test]
    fn bpp_values() {
        assert_eq!(format!("{:.4}", bpp(8565, 256, 256, 3)), "0.0436");
        assert_eq!(format!("{:.4}", bpp(2354, 256, 256, 3)), "0.0120");
        assert_eq!(format!("{:.4}", bpp(8565, 256, 256, 1)), "0.1307");
    }

    #[test]
    fn report_row_has_every_column() {
        let r = MetricsReport {
            bpp: 0.5,
            alpha: 0.2,
            beta: 1.0,
            loss_all: 1.0,
            loss_mse: 2.0,
            loss_bce: 3.0,
            psnr_db: f64::INFINITY,
            ssim: 1.0,
            bacc: 1.0,
            n_pairs: 3,
        };
        let csv = MetricsReport::to_csv(&[r]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(REPORT_HEADER));
        assert_eq!(lines.next(), Some("0.5,0.2,1,1,2,3,inf,1,1"));
    }
}
