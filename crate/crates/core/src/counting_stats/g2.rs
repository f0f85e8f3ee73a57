//! Synthetic g2 cross-correlation histograms and a binned Gaussian peak fit.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use nalgebra::{Matrix4, Vector4};
use statrs::function::erf::erf;

use super::rates::{poisson, RateModel, SourceKind};
use super::{require, StatsError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Config {
    pub jitter_space_sigma_s: f64,
    pub jitter_ground_sigma_s: f64,
    pub bin_width_s: f64,
    pub span_s: f64,
    pub duration_s: f64,
}

impl Default for G2Config {
    fn default() -> Self {
        Self {
            jitter_space_sigma_s: 2e-9,
            jitter_ground_sigma_s: 0.2e-9,
            bin_width_s: 100e-12,
            span_s: 60e-9,
            duration_s: 10.0,
        }
    }
}

impl G2Config {
    pub fn combined_sigma_s(&self) -> f64 {
        self.jitter_space_sigma_s.hypot(self.jitter_ground_sigma_s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct G2Histogram {
    pub bin_width_s: f64,
    pub span_s: f64,
    pub bins: Vec<u64>,
    pub peak_center_s: f64,
    pub peak_sigma_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakFit {
    pub center_s: f64,
    pub center_se_s: f64,
    pub sigma_s: f64,
    pub sigma_se_s: f64,
    /// Counts under the fitted Gaussian.
    pub area: f64,
    pub area_se: f64,
    pub floor_per_bin: f64,
    pub floor_se: f64,
}

impl G2Histogram {
    pub fn bin_center(&self, i: usize) -> f64 {
        -0.5 * self.span_s + (i as f64 + 0.5) * self.bin_width_s
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    /// Floor from the outer quarter on each side, then centre and width from
    /// floor-subtracted moments inside a ±4σ window, iterated to a fixed
    /// window. Only a starting point: the moments are noisy when the floor
    /// dominates.
    fn moment_estimate(&self, floor: f64) -> Option<(f64, f64)> {
        let mut center = 0.0;
        let mut half_window = 0.25 * self.span_s;
        let mut sigma = half_window;
        for _ in 0..20 {
            let (mut w, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for (i, &b) in self.bins.iter().enumerate() {
                let t = self.bin_center(i);
                if (t - center).abs() <= half_window {
                    let excess = b as f64 - floor;
                    w += excess;
                    m1 += excess * t;
                    m2 += excess * t * t;
                }
            }
            if w <= 0.0 {
                return None;
            }
            let c = m1 / w;
            let var = (m2 / w - c * c).max(0.0);
            // The ±kσ window clips the tails; undo the bias of the second moment.
            let k = half_window / var.sqrt().max(self.bin_width_s);
            let s = (var / truncated_variance_factor(k)).sqrt().max(self.bin_width_s);
            let converged = (s - sigma).abs() < 1e-4 * sigma && (c - center).abs() < 1e-4 * sigma;
            center = c;
            sigma = s;
            half_window = (4.0 * sigma).min(0.5 * self.span_s);
            if converged {
                break;
            }
        }
        Some((center, sigma))
    }

    /// Binned Gaussian peak on a flat floor, fitted by Levenberg–Marquardt
    /// with Pearson weights 1/model. Standard errors come from the inverse
    /// normal matrix scaled by max(1, χ²/dof).
    pub fn fit_peak(&self) -> Result<PeakFit, StatsError> {
        let n = self.bins.len();
        let quarter = n / 4;
        require(quarter >= 1, "histogram too short to estimate a floor")?;
        let outer: Vec<f64> = self.bins[..quarter].iter().chain(&self.bins[n - quarter..]).map(|&b| b as f64).collect();
        let floor0 = outer.iter().sum::<f64>() / outer.len() as f64;
        let (c0, s0) = self
            .moment_estimate(floor0)
            .ok_or_else(|| StatsError::UndefinedEstimate("no excess above the floor".into()))?;
        let excess: f64 = self.bins.iter().map(|&b| b as f64 - floor0).sum();
        require(excess > 0.0, "no excess above the floor").map_err(|_| {
            StatsError::UndefinedEstimate("no excess above the floor".into())
        })?;

        // Parameters in ns: [floor, area, centre, sigma].
        let w = self.bin_width_s * 1e9;
        let t: Vec<f64> = (0..n).map(|i| self.bin_center(i) * 1e9).collect();
        let y: Vec<f64> = self.bins.iter().map(|&b| b as f64).collect();
        let model = |p: &[f64; 4], ti: f64| -> (f64, [f64; 4]) {
            let (f, a, c, s) = (p[0], p[1], p[2], p[3]);
            let up = (ti + 0.5 * w - c) / s;
            let lo = (ti - 0.5 * w - c) / s;
            let cdf = |u: f64| 0.5 * (1.0 + erf(u / std::f64::consts::SQRT_2));
            let pdf = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let mass = cdf(up) - cdf(lo);
            let m = f + a * mass;
            (m, [1.0, mass, a * (pdf(lo) - pdf(up)) / s, a * (lo * pdf(lo) - up * pdf(up)) / s])
        };
        let chi2 = |p: &[f64; 4]| -> f64 {
            t.iter()
                .zip(&y)
                .map(|(&ti, &yi)| {
                    let m = model(p, ti).0.max(1e-9);
                    (yi - m).powi(2) / m
                })
                .sum()
        };
        let normal = |p: &[f64; 4]| -> (Matrix4<f64>, Vector4<f64>) {
            let mut jtj = Matrix4::zeros();
            let mut jtr = Vector4::zeros();
            for (&ti, &yi) in t.iter().zip(&y) {
                let (m, d) = model(p, ti);
                let m = m.max(1e-9);
                let g = Vector4::from(d) / m.sqrt();
                jtj += g * g.transpose();
                jtr += g * ((yi - m) / m.sqrt());
            }
            (jtj, jtr)
        };

        let mut p = [floor0, excess, c0 * 1e9, s0 * 1e9];
        let mut cost = chi2(&p);
        let mut lambda = 1e-3;
        for _ in 0..200 {
            let (jtj, jtr) = normal(&p);
            let mut damped = jtj;
            for k in 0..4 {
                damped[(k, k)] *= 1.0 + lambda;
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], (p[3] + step[3]).abs().max(1e-3 * w)];
            let trial_cost = chi2(&trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let small = (0..4).all(|k| step[k].abs() <= 1e-9 * p[k].abs().max(1e-6));
                p = trial;
                let done = small || (cost - trial_cost) <= 1e-12 * cost;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                if done {
                    break;
                }
            } else {
                lambda *= 10.0;
                if lambda > 1e12 {
                    break;
                }
            }
        }
        let (jtj, _) = normal(&p);
        let cov = jtj
            .try_inverse()
            .ok_or_else(|| StatsError::UndefinedEstimate("singular peak-fit normal matrix".into()))?;
        let scale = (cost / (n as f64 - 4.0)).max(1.0);
        let se = |k: usize| (cov[(k, k)] * scale).max(0.0).sqrt();
        Ok(PeakFit {
            center_s: p[2] * 1e-9,
            center_se_s: se(2) * 1e-9,
            sigma_s: p[3] * 1e-9,
            sigma_se_s: se(3) * 1e-9,
            area: p[1],
            area_se: se(1),
            floor_per_bin: p[0],
            floor_se: se(0),
        })
    }
}

/// Var of a standard normal truncated to ±k.
fn truncated_variance_factor(k: f64) -> f64 {
    if k > 12.0 {
        return 1.0;
    }
    let phi = (-0.5 * k * k).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mass = erf(k / std::f64::consts::SQRT_2);
    1.0 - 2.0 * k * phi / mass
}

/// Histogram of arrival-time differences over one window. True pairs (rate
/// scaled by D_f) land at Gaussian offsets with the combined jitter; the
/// accidental floor is uniform with S_space·S_ground·bin·duration per bin.
pub fn g2_histogram<R: Rng + ?Sized>(
    rates: &RateModel,
    d_f: f64,
    cfg: &G2Config,
    rng: &mut R,
) -> Result<G2Histogram, StatsError> {
    require(cfg.bin_width_s >= 10e-12, "bin width must be at least 10 ps")?;
    require(cfg.span_s >= 10.0 * cfg.bin_width_s, "span must hold at least 10 bins")?;
    require(cfg.duration_s > 0.0, "duration must be positive")?;
    require((0.0..=1.0).contains(&d_f), "D_f outside [0, 1]")?;
    rates.validate()?;
    let e = rates.expected(SourceKind::Epps, d_f);
    let nbins = (cfg.span_s / cfg.bin_width_s).round() as usize;
    let span = nbins as f64 * cfg.bin_width_s;
    let floor_mean = e.space_singles() * e.ground_singles * cfg.bin_width_s * cfg.duration_s;
    let mut bins: Vec<u64> = (0..nbins).map(|_| poisson(rng, floor_mean)).collect();

    let sigma = cfg.combined_sigma_s();
    let pairs = poisson(rng, e.true_coincidences * cfg.duration_s);
    let jitter = Normal::new(0.0, sigma).map_err(|e| StatsError::InvalidArgument(e.to_string()))?;
    for _ in 0..pairs {
        let t = jitter.sample(rng) + 0.5 * span;
        if t >= 0.0 && t < span {
            bins[(t / cfg.bin_width_s) as usize] += 1;
        }
    }
    let mut hist = G2Histogram { bin_width_s: cfg.bin_width_s, span_s: span, bins, peak_center_s: 0.0, peak_sigma_s: sigma };
    if let Ok(fit) = hist.fit_peak() {
        hist.peak_center_s = fit.center_s;
        hist.peak_sigma_s = fit.sigma_s;
    }
    Ok(hist)
}
