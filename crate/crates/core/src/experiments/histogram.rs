use serde::Serialize;

use crate::output::{csv_num, metadata_line};

pub const HISTOGRAM_HEADER: &str = "bin_lo,bin_hi,count,density,overlay";

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Normal law used as an overlay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gaussian {
    pub mean: f64,
    pub width: f64,
}

impl Gaussian {
    /// Probability mass in `[lo, hi]`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        if self.width > 0.0 {
            normal_cdf((hi - self.mean) / self.width) - normal_cdf((lo - self.mean) / self.width)
        } else if (lo..hi).contains(&self.mean) {
            1.0
        } else {
            0.0
        }
    }
}

/// Fixed-bin histogram with a Gaussian overlay averaged over each bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bin_count: usize,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub overlay: Vec<f64>,
    pub out_of_range: u64,
    pub total: u64,
}

impl Histogram {
    pub fn build(values: &[f64], lo: f64, hi: f64, bin_count: usize, overlay: Gaussian) -> Self {
        assert!(bin_count > 0, "histogram needs at least one bin");
        assert!(hi > lo, "histogram range must be nonempty");
        let width = (hi - lo) / bin_count as f64;
        let mut counts = vec![0u64; bin_count];
        let mut out_of_range = 0;
        for &v in values {
            if !(lo..=hi).contains(&v) {
                out_of_range += 1;
                continue;
            }
            let bin = (((v - lo) / width) as usize).min(bin_count - 1);
            counts[bin] += 1;
        }
        let total = values.len() as u64;
        let norm = total.max(1) as f64 * width;
        let density = counts.iter().map(|&c| c as f64 / norm).collect();
        let overlay = (0..bin_count)
            .map(|i| {
                let (a, b) = (lo + i as f64 * width, lo + (i + 1) as f64 * width);
                overlay.mass(a, b) / width
            })
            .collect();
        Histogram {
            lo,
            hi,
            bin_count,
            counts,
            density,
            overlay,
            out_of_range,
            total,
        }
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let width = (self.hi - self.lo) / self.bin_count as f64;
        (self.lo + i as f64 * width, self.lo + (i + 1) as f64 * width)
    }

    pub fn to_csv(&self, meta: &[(&str, String)]) -> String {
        let mut out = metadata_line(meta);
        out.push_str(HISTOGRAM_HEADER);
        out.push('\n');
        for i in 0..self.bin_count {
            let (a, b) = self.bin_edges(i);
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_num(Some(a)),
                csv_num(Some(b)),
                self.counts[i],
                csv_num(Some(self.density[i])),
                csv_num(Some(self.overlay[i]))
            ));
        }
        out
    }
}

/// Kolmogorov–Smirnov distance of `(v - mean)/width` from the standard normal.
pub fn ks_distance(values: &[f64], law: Gaussian) -> Option<f64> {
    if values.is_empty() || law.width.is_nan() || law.width <= 0.0 {
        return None;
    }
    let mut z: Vec<f64> = values.iter().map(|v| (v - law.mean) / law.width).collect();
    z.sort_by(f64::total_cmp);
    let m = z.len() as f64;
    let d = z
        .iter()
        .enumerate()
        .map(|(i, &zi)| {
            let f = normal_cdf(zi);
            (f - i as f64 / m).max((i + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max);
    Some(d)
}
