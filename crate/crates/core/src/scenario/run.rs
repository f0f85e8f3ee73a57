//! Subcommand runners. Each one turns a validated configuration and a seed
//! into a set of tables; [`run_subcommand`] writes them with a manifest.

use std::path::Path;
use std::time::Instant;

use rand::Rng;
use sha2::{Digest, Sha256};

use super::config::{hex, ScenarioConfig};
use super::manifest::{OutputChecksum, RunManifest, MANIFEST_FILE};
use super::output::{OutputFormat, Table};
use crate::counting_stats::{
    self, bin_collision_probability, g2_histogram, implied_collision_rate, max_tolerable_noise, simulate_pass,
    stream_rng, DataVolumeAssumptions, G2Config,
};
use crate::detector_aging::{self, ApdKind};
use crate::event_channel::{self, ChannelParams, InputKind, SpdcParams};
use crate::link_budget::{self, LossComponents, SpotConvention};
use crate::spacetime::{self, LinkGeometry, PhotonSpectralParams, DEFAULT_QUADRATURE_REL_TOL};
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subcommand {
    OverlapCurve,
    AltitudeCurve,
    ZenithCurve,
    PassSim,
    Sensitivity,
    DetectorAging,
    LinkBudget,
    ChannelVerify,
}

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Subcommand::OverlapCurve,
        Subcommand::AltitudeCurve,
        Subcommand::ZenithCurve,
        Subcommand::PassSim,
        Subcommand::Sensitivity,
        Subcommand::DetectorAging,
        Subcommand::LinkBudget,
        Subcommand::ChannelVerify,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::OverlapCurve => "overlap-curve",
            Subcommand::AltitudeCurve => "altitude-curve",
            Subcommand::ZenithCurve => "zenith-curve",
            Subcommand::PassSim => "pass-sim",
            Subcommand::Sensitivity => "sensitivity",
            Subcommand::DetectorAging => "detector-aging",
            Subcommand::LinkBudget => "link-budget",
            Subcommand::ChannelVerify => "channel-verify",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Tables plus human-readable summary lines of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
    pub summary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub report: Report,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

fn d_f_at(altitude_km: f64, zenith_deg: f64, coherence_time_ps: f64) -> Result<spacetime::DecoherenceResult> {
    let geom = LinkGeometry::earth(altitude_km * 1e3, zenith_deg.to_radians());
    let spectral = PhotonSpectralParams { coherence_time_s: coherence_time_ps * 1e-12, center_wavelength_m: 830e-9 };
    Ok(spacetime::decoherence(&geom, &spectral, 1.0, 1.0)?)
}

/// Computes the tables of one subcommand without touching the filesystem.
pub fn compute(sub: Subcommand, cfg: &ScenarioConfig, seed: u64) -> Result<Report> {
    match sub {
        Subcommand::OverlapCurve => overlap_curve(cfg),
        Subcommand::AltitudeCurve => altitude_curve(cfg),
        Subcommand::ZenithCurve => zenith_curve(cfg),
        Subcommand::PassSim => pass_sim(cfg, seed),
        Subcommand::Sensitivity => sensitivity(cfg),
        Subcommand::DetectorAging => detector_aging_report(cfg),
        Subcommand::LinkBudget => link_budget_report(cfg),
        Subcommand::ChannelVerify => channel_verify(cfg, seed),
    }
}

/// Runs `sub`, writes its tables and `manifest.json` into `out_dir`.
pub fn run_subcommand(
    sub: Subcommand,
    cfg: &ScenarioConfig,
    seed: u64,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RunOutcome> {
    let start = Instant::now();
    let report = compute(sub, cfg, seed)?;
    let io = |path: &Path, source| Error::Io { path: path.display().to_string(), source };
    std::fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let mut outputs = Vec::new();
    for t in &report.tables {
        let file = format!("{}.{}", t.name, format.extension());
        let body = t.render(format);
        let path = out_dir.join(&file);
        std::fs::write(&path, body.as_bytes()).map_err(|e| io(&path, e))?;
        outputs.push(OutputChecksum { file, sha256: hex(&Sha256::digest(body.as_bytes())), bytes: body.len() as u64 });
    }
    let manifest = RunManifest {
        tool: "quest-sim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: sub.name().into(),
        config_hash: cfg.hash(),
        seed,
        format,
        outputs,
        elapsed_s: start.elapsed().as_secs_f64(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.to_json()).map_err(|e| io(&path, e))?;
    Ok(RunOutcome { manifest, report })
}

/// Every subcommand, each into its own directory under `out_dir`.
pub fn run_all(cfg: &ScenarioConfig, seed: u64, out_dir: &Path, format: OutputFormat) -> Result<Vec<RunOutcome>> {
    Subcommand::ALL.iter().map(|s| run_subcommand(*s, cfg, seed, &out_dir.join(s.name()), format)).collect()
}

fn overlap_curve(cfg: &ScenarioConfig) -> Result<Report> {
    let c = &cfg.curves;
    let conv = cfg.bandwidth_convention();
    let lambda = cfg.spectral.wavelength_nm * 1e-9;
    let mut t = Table::new(
        "overlap_curve",
        &["altitude_km", "coherence_time_ps", "bandwidth_nm", "delta_t_ps", "xi", "d_f"],
    );
    for &h in &c.overlap_altitudes_km {
        let geom = LinkGeometry::earth(h * 1e3, cfg.geometry.zenith_deg.to_radians());
        let dt = spacetime::time_dilation(&geom, DEFAULT_QUADRATURE_REL_TOL)?;
        for d in linspace(c.coherence_time_min_ps, c.coherence_time_max_ps, c.coherence_time_points) {
            let spectral = PhotonSpectralParams { coherence_time_s: d * 1e-12, center_wavelength_m: lambda };
            let xi = spacetime::event_overlap(dt, &spectral);
            let bw = spacetime::coherence_bandwidth(d * 1e-12, lambda, conv)?;
            t.push(vec![h.into(), d.into(), (bw * 1e9).into(), (dt * 1e12).into(), xi.into(), xi.into()]);
        }
    }
    let h = cfg.geometry.altitude_km;
    let th = cfg.geometry.zenith_deg;
    let base = d_f_at(h, th, cfg.spectral.coherence_time_ps)?;
    let wider = d_f_at(h, th, cfg.spectral.coherence_time_ps * 1.08)?;
    Ok(Report {
        tables: vec![t],
        summary: vec![
            format!("delta_t({h} km, {th} deg) = {:.4e} s", base.delta_t_s),
            format!("D_f at {} ps = {:.4}", cfg.spectral.coherence_time_ps, base.d_f),
            format!("D_f(1.08 d_t) - D_f(d_t) = {:.4}", wider.d_f - base.d_f),
        ],
    })
}

fn altitude_curve(cfg: &ScenarioConfig) -> Result<Report> {
    let c = &cfg.curves;
    let th = cfg.geometry.zenith_deg;
    let mut t = Table::new("altitude_curve", &["coherence_time_ps", "altitude_km", "delta_t_ps", "xi", "d_f"]);
    for &d in &c.altitude_coherence_times_ps {
        for h in linspace(c.altitude_min_km, c.altitude_max_km, c.altitude_points) {
            let r = d_f_at(h, th, d)?;
            t.push(vec![d.into(), h.into(), (r.delta_t_s * 1e12).into(), r.xi.into(), r.d_f.into()]);
        }
    }
    let h = cfg.geometry.altitude_km;
    let d = cfg.spectral.coherence_time_ps;
    let base = d_f_at(h, th, d)?.d_f;
    let mut summary = Vec::new();
    for dh in [15.0, 31.0] {
        if h + dh <= 1000.0 {
            let other = d_f_at(h + dh, th, d)?.d_f;
            summary.push(format!("D_f({h} km) - D_f({} km) = {:.4}", h + dh, base - other));
        }
    }
    Ok(Report { tables: vec![t], summary })
}

fn zenith_curve(cfg: &ScenarioConfig) -> Result<Report> {
    let c = &cfg.curves;
    let h = cfg.geometry.altitude_km;
    let d = cfg.spectral.coherence_time_ps;
    let mut t = Table::new(
        "zenith_curve",
        &["zenith_deg", "slant_range_km", "delta_t_ps", "xi", "d_f", "within_fov"],
    );
    for th in linspace(0.0, c.zenith_max_deg, c.zenith_points) {
        let r = d_f_at(h, th, d)?;
        let range = spacetime::slant_range(h * 1e3, th.to_radians(), spacetime::EARTH_RADIUS_M);
        t.push(vec![
            th.into(),
            (range / 1e3).into(),
            (r.delta_t_s * 1e12).into(),
            r.xi.into(),
            r.d_f.into(),
            (th <= c.fov_half_angle_deg).into(),
        ]);
    }
    let gap = d_f_at(h, 0.0, d)?.d_f - d_f_at(h, 22.5, d)?.d_f;
    Ok(Report {
        tables: vec![t],
        summary: vec![
            format!("D_f(0 deg) - D_f(22.5 deg) = {gap:.4}"),
            format!("field of view bound = +/-{} deg", c.fov_half_angle_deg),
        ],
    })
}

/// Seed streams of the stochastic subcommands.
const PASS_STREAM: u64 = 1;
const G2_STREAM: u64 = 100;
const PHASE_STREAM: u64 = 200;

pub fn g2_config(cfg: &ScenarioConfig) -> G2Config {
    G2Config {
        jitter_space_sigma_s: cfg.g2.jitter_space_ns * 1e-9,
        jitter_ground_sigma_s: cfg.g2.jitter_ground_ns * 1e-9,
        bin_width_s: cfg.g2.bin_width_ps * 1e-12,
        span_s: cfg.g2.span_ns * 1e-9,
        duration_s: cfg.g2.duration_s,
    }
}

fn pass_sim(cfg: &ScenarioConfig, seed: u64) -> Result<Report> {
    let scenario = cfg.pass_scenario();
    let mut rng = stream_rng(seed, PASS_STREAM);
    let pass = simulate_pass(&scenario, &mut rng)?;

    let mut windows = Table::new(
        "pass_windows",
        &[
            "window",
            "window_start_s",
            "duration_s",
            "source",
            "zenith_deg",
            "loss_db",
            "d_f",
            "singles_ground",
            "singles_space",
            "coincidences",
            "accidentals",
            "turbulence_factor",
            "noise_factor",
        ],
    );
    for p in &pass.records {
        let r = &p.record;
        windows.push(vec![
            p.window.into(),
            r.window_start_s.into(),
            r.duration_s.into(),
            r.source.as_str().into(),
            p.zenith_rad.to_degrees().into(),
            p.loss_db.into(),
            p.d_f.into(),
            r.singles_ground.into(),
            r.singles_space.into(),
            r.coincidences.into(),
            r.accidentals.into(),
            r.turbulence_factor.into(),
            r.noise_factor.into(),
        ]);
    }

    let mut curve = Table::new(
        "pass_curve",
        &[
            "abs_zenith_deg",
            "windows",
            "xi",
            "heralding_fps",
            "se_fps",
            "se_fps_empirical",
            "heralding_epps",
            "se_epps",
            "se_epps_empirical",
            "epps_over_fps",
        ],
    );
    for p in &pass.curve {
        curve.push(vec![
            p.theta_rad.to_degrees().into(),
            p.windows.into(),
            p.xi.into(),
            p.e_fps.into(),
            p.se_fps.into(),
            p.se_fps_empirical.into(),
            p.e_epps.into(),
            p.se_epps.into(),
            p.se_epps_empirical.into(),
            (p.e_epps / p.e_fps).into(),
        ]);
    }

    let g2cfg = g2_config(cfg);
    let rates = cfg.rate_model();
    let mut hist_t = Table::new("g2_histogram", &["d_f", "delay_ns", "counts"]);
    let mut fit_t = Table::new(
        "g2_fit",
        &[
            "d_f",
            "center_ps",
            "sigma_ps",
            "sigma_se_ps",
            "area_counts",
            "area_se_counts",
            "floor_per_bin_counts",
            "expected_area_counts",
        ],
    );
    for (i, &d_f) in cfg.g2.d_f_values.iter().enumerate() {
        let mut rng = stream_rng(seed, G2_STREAM + i as u64);
        let h = g2_histogram(&rates, d_f, &g2cfg, &mut rng)?;
        for (b, &n) in h.bins.iter().enumerate() {
            hist_t.push(vec![d_f.into(), (h.bin_center(b) * 1e9).into(), n.into()]);
        }
        let fit = h.fit_peak()?;
        let expected = rates.expected(counting_stats::SourceKind::Epps, d_f).true_coincidences * g2cfg.duration_s;
        fit_t.push(vec![
            d_f.into(),
            (fit.center_s * 1e12).into(),
            (fit.sigma_s * 1e12).into(),
            (fit.sigma_se_s * 1e12).into(),
            fit.area.into(),
            fit.area_se.into(),
            fit.floor_per_bin.into(),
            expected.into(),
        ]);
    }

    let geom = LinkGeometry::earth(scenario.altitude_m, 0.0);
    let profile = spacetime::overhead_pass_profile(&geom, scenario.max_zenith_rad, 2)?;
    let volume = DataVolumeAssumptions::half_year_default();
    let tag_rate = rates.pair_production_rate * rates.intrinsic_heralding + rates.ground_singles_rate;
    let collision = bin_collision_probability(tag_rate, 1e-9);
    let mut ops = Table::new("operations", &["quantity", "value", "unit"]);
    let mut op = |q: &str, v: f64, u: &str| ops.push(vec![q.into(), v.into(), u.into()]);
    op("pass_duration", profile.duration_s, "s");
    op("zenith_angular_rate", profile.zenith_angular_rate_rad_s.to_degrees(), "deg/s");
    op("integration_windows", pass.records.iter().map(|r| r.window).max().map_or(0, |w| w + 1) as f64, "count");
    op("ground_data_half_year", volume.ground_bytes() / 1e12, "TB");
    op("space_data_half_year", volume.space_bytes() / 1e12, "TB");
    op("ground_tag_rate", tag_rate, "1/s");
    op("bin_collision_probability_1ns", collision, "probability");
    op("implied_collision_rate", implied_collision_rate(collision, 1e-9), "1/s");

    let mean_ratio = pass.curve.iter().map(|p| p.e_epps / p.e_fps).sum::<f64>() / pass.curve.len().max(1) as f64;
    Ok(Report {
        tables: vec![windows, curve, hist_t, fit_t, ops],
        summary: vec![
            format!("pass duration = {:.1} s, {} records", pass.duration_s, pass.records.len()),
            format!("mean EPPS/FPS heralding ratio over {} bins = {mean_ratio:.4}", pass.curve.len()),
        ],
    })
}

fn sensitivity(cfg: &ScenarioConfig) -> Result<Report> {
    let s = &cfg.sensitivity;
    let scenario = cfg.sensitivity_scenario();
    let si = cfg.turbulence.scintillation_index;
    let loss = cfg.link.total_loss_db;
    let rates = logspace(s.pair_rate_min_per_s, s.pair_rate_max_per_s, s.pair_rate_points);
    let mut t = Table::new(
        "sensitivity",
        &["delta_df", "pair_rate_per_s", "max_noise_per_detector_per_s", "resolvable_at_zero_noise"],
    );
    for &delta in &s.delta_df {
        for &p in &rates {
            let tol = max_tolerable_noise(p, loss, si, delta, &scenario)?;
            t.push(vec![delta.into(), p.into(), tol.max_noise_per_detector.into(), tol.resolvable_at_zero_noise.into()]);
        }
    }
    let p0 = cfg.rates.pair_rate_per_s;
    let mut anchor = Table::new(
        "sensitivity_anchor",
        &["delta_df", "pair_rate_per_s", "max_noise_per_detector_per_s", "resolvable_at_zero_noise"],
    );
    let mut summary = Vec::new();
    for &delta in &s.delta_df {
        let tol = max_tolerable_noise(p0, loss, si, delta, &scenario)?;
        anchor.push(vec![delta.into(), p0.into(), tol.max_noise_per_detector.into(), tol.resolvable_at_zero_noise.into()]);
        summary.push(if tol.resolvable_at_zero_noise {
            format!("delta_df {delta}: max noise {:.0} /s per detector at {p0:.3e} pairs/s", tol.max_noise_per_detector)
        } else {
            format!("delta_df {delta}: unresolvable at {p0:.3e} pairs/s even without noise")
        });
    }
    Ok(Report { tables: vec![t, anchor], summary })
}

fn detector_aging_report(cfg: &ScenarioConfig) -> Result<Report> {
    let d = &cfg.detector;
    let fluence = d.fluence_two_year_per_cm2;
    let mut table = Table::new(
        "apd_temperatures",
        &[
            "apd",
            "beta_per_c",
            "target_rate_per_s",
            "temperature_c",
            "reference_temperature_c",
            "deviation_c",
        ],
    );
    let mut reserve = Table::new("apd_reserve", &["apd", "reserve_factor", "extra_cooling_c"]);
    let mut worst = 0.0f64;
    for kind in ApdKind::ALL {
        let model = detector_aging::calibrate_apd(kind.name(), &kind.reference_rows(), fluence, d.intrinsic_dark_per_s)?;
        for (t_ref, rate) in kind.reference_rows() {
            let t = detector_aging::temperature_for_target(&model, rate, fluence)?;
            worst = worst.max((t - t_ref).abs());
            table.push(vec![
                kind.name().into(),
                model.beta.into(),
                rate.into(),
                t.into(),
                t_ref.into(),
                (t - t_ref).into(),
            ]);
        }
        reserve.push(vec![
            kind.name().into(),
            d.reserve_factor.into(),
            detector_aging::reserve_margin(&model, d.reserve_factor)?.into(),
        ]);
    }

    let model = cfg.apd_model();
    let env = cfg.mission();
    let scenario = cfg.sensitivity_scenario();
    let s = &cfg.sensitivity;
    let rates = logspace(s.pair_rate_min_per_s, s.pair_rate_max_per_s, s.pair_rate_points);
    let mut allowance = Table::new(
        "background_allowance",
        &[
            "mission_years",
            "pair_rate_per_s",
            "dark_rate_per_s",
            "max_noise_per_detector_per_s",
            "background_allowance_per_s",
        ],
    );
    let mut summary = vec![format!("largest reference-temperature deviation = {worst:.3} C")];
    for &years in &d.mission_years {
        let mut threshold: Option<f64> = None;
        for &p in &rates {
            let a = detector_aging::max_background_over_mission(
                years * detector_aging::SECONDS_PER_YEAR,
                p,
                d.operating_temp_c,
                &model,
                &env,
                &scenario,
                cfg.link.total_loss_db,
                d.delta_df,
            )?;
            if threshold.is_none() && a.background_allowance > 0.0 {
                threshold = Some(p);
            }
            allowance.push(vec![
                years.into(),
                p.into(),
                a.dark_rate.into(),
                a.max_noise_per_detector.into(),
                a.background_allowance.into(),
            ]);
        }
        summary.push(match threshold {
            Some(p) => format!("t = {years} yr: background allowance positive from {p:.3e} pairs/s"),
            None => format!("t = {years} yr: no background allowance on the pair-rate grid"),
        });
    }
    Ok(Report { tables: vec![table, reserve, allowance], summary })
}

fn link_budget_report(cfg: &ScenarioConfig) -> Result<Report> {
    let beam = cfg.beam();
    let l = &cfg.link;
    let theta = cfg.geometry.max_zenith_deg.to_radians();
    let range = spacetime::slant_range(cfg.geometry.altitude_km * 1e3, theta, spacetime::EARTH_RADIUS_M);
    let optics_best = cfg.optics(true);
    let modeled = link_budget::modeled_components(
        &beam,
        &cfg.optics(false),
        theta,
        l.zenith_atmospheric_loss_db,
        range,
        l.beam_diameter_at_receiver_m,
        l.beam_diameter_convention,
    )?;

    let mut budget = Table::new("link_budget", &["case", "component", "loss_db"]);
    let mut totals = Vec::new();
    for (case, comps) in [
        ("worst", LossComponents::WORST_CASE),
        ("best", LossComponents::BEST_CASE),
        ("modeled", modeled),
    ] {
        let total = link_budget::total_link_budget(comps)?;
        for (name, v) in comps.as_array() {
            budget.push(vec![case.into(), name.into(), v.into()]);
        }
        budget.push(vec![case.into(), "total".into(), total.total_db.into()]);
        totals.push(format!("{case} total = {:.2} dB", total.total_db));
    }

    let mut spot = Table::new("tx_aperture_scan", &["tx_diameter_cm", "diffraction_fwhm_m", "turbulent_fwhm_m"]);
    for i in 0..=48 {
        let dtx = 0.02 + 0.01 * i as f64;
        spot.push(vec![
            (dtx * 100.0).into(),
            link_budget::diffraction_spot_diameter(dtx, range, beam.wavelength_m, SpotConvention::Fwhm)?.into(),
            link_budget::turbulent_spot_diameter(dtx, beam.fried_r0_m, range, beam.wavelength_m, SpotConvention::Fwhm)?
                .into(),
        ]);
    }

    let opt = link_budget::optimal_tx_diameter(beam.fried_r0_m, range, beam.wavelength_m)?;
    let configured = link_budget::turbulent_spot_diameter(
        beam.tx_diameter_m,
        beam.fried_r0_m,
        range,
        beam.wavelength_m,
        SpotConvention::Fwhm,
    )?;
    let mut facts = Table::new("beam", &["quantity", "value", "unit"]);
    let mut f = |q: &str, v: f64, u: &str| facts.push(vec![q.into(), v.into(), u.into()]);
    f("slant_range", range / 1e3, "km");
    f("optimal_tx_diameter", opt.diameter_m * 100.0, "cm");
    f("optimal_spot_fwhm", opt.spot_fwhm_m, "m");
    f("configured_spot_fwhm", configured, "m");
    let e2 = link_budget::to_e2_diameter(l.beam_diameter_at_receiver_m, l.beam_diameter_convention);
    f("receiver_beam_e2_diameter", e2, "m");
    f("receiver_beam_fwhm", e2 * SpotConvention::Fwhm.per_e2(), "m");
    f("obscuration", beam.obscuration_fraction, "fraction");
    f("optics_worst", cfg.optics(false).loss_db()?, "dB");
    f("optics_best", optics_best.loss_db()?, "dB");

    let mut summary = totals;
    summary.push(format!("optimal transmit diameter = {:.1} cm", opt.diameter_m * 100.0));
    Ok(Report { tables: vec![budget, spot, facts], summary })
}

fn channel_verify(cfg: &ScenarioConfig, seed: u64) -> Result<Report> {
    let ch = &cfg.channel;
    let mut grid = Table::new(
        "channel_grid",
        &[
            "chi",
            "xi",
            "eta1",
            "eta2",
            "coincidence",
            "analytic",
            "deviation",
            "tolerance",
            "singles1",
            "singles2",
            "singles_spread_over_xi",
            "pass",
        ],
    );
    let mut all_pass = true;
    let mut worst_ratio = 0.0f64;
    for &chi in &ch.chi {
        let spdc = SpdcParams::real(chi)?;
        for &eta1 in &ch.eta {
            for &eta2 in &ch.eta {
                let mut rows = Vec::new();
                for &xi in &ch.xi {
                    let run = event_channel::run_event_channel(
                        InputKind::Spdc { chi: spdc },
                        ChannelParams::new(xi, eta1, eta2)?,
                        None,
                    )?;
                    rows.push((xi, run.coincidence()?, run.analytic, run.singles(0)?, run.singles(1)?));
                }
                let spread = |k: fn(&(f64, f64, event_channel::AnalyticSummary, f64, f64)) -> f64| {
                    let v: Vec<f64> = rows.iter().map(k).collect();
                    v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
                };
                let s = spread(|r| r.3).max(spread(|r| r.4));
                for (xi, c, a, s1, s2) in &rows {
                    let dev = (c - a.coincidence).abs();
                    let ok = dev <= a.coincidence_tolerance && s <= 1e-12;
                    all_pass &= ok;
                    if a.coincidence_tolerance > 0.0 {
                        worst_ratio = worst_ratio.max(dev / a.coincidence_tolerance);
                    }
                    grid.push(vec![
                        chi.into(),
                        (*xi).into(),
                        eta1.into(),
                        eta2.into(),
                        (*c).into(),
                        a.coincidence.into(),
                        dev.into(),
                        a.coincidence_tolerance.into(),
                        (*s1).into(),
                        (*s2).into(),
                        s.into(),
                        ok.into(),
                    ]);
                }
            }
        }
    }

    let alpha = Complex64::new(ch.coherent_alpha, 0.0);
    let beta = Complex64::new(ch.coherent_beta, 0.0);
    let mut coherent = Table::new("channel_coherent", &["alpha", "beta", "xi", "cutoff", "fidelity", "pass"]);
    let mut coherent_pass = true;
    for &xi in &ch.xi {
        let run = event_channel::run_event_channel(
            InputKind::Coherent { alpha, beta },
            ChannelParams::new(xi, 1.0, 1.0)?,
            Some(ch.coherent_cutoff),
        )?;
        let target = event_channel::coherent_state(&["1", "2"], &[alpha, beta], ch.coherent_cutoff)?;
        let fid = run.reduced.fidelity_with_pure(&target)?;
        let ok = fid >= 1.0 - 1e-6;
        coherent_pass &= ok;
        coherent.push(vec![
            ch.coherent_alpha.into(),
            ch.coherent_beta.into(),
            xi.into(),
            ch.coherent_cutoff.into(),
            fid.into(),
            ok.into(),
        ]);
    }

    let pol_chi = SpdcParams::real(ch.polarization_chi)?;
    let mut pol = Table::new(
        "channel_polarization",
        &["chi", "xi", "same_pol", "analytic", "tolerance", "cross_pol", "cross_bound", "pass"],
    );
    let mut pol_pass = true;
    for &xi in &ch.xi {
        let run = event_channel::run_event_channel(
            InputKind::PolarizationSpdc { chi: pol_chi },
            ChannelParams::new(xi, 1.0, 1.0)?,
            Some(ch.polarization_cutoff),
        )?;
        let same = run.same_polarization_coincidence()?;
        let cross = run.cross_polarization_coincidence()?;
        let a = run.analytic;
        let target = xi * ch.polarization_chi * ch.polarization_chi;
        let ok = (same - target).abs() <= a.coincidence_tolerance && cross <= a.cross_polarization_bound;
        pol_pass &= ok;
        pol.push(vec![
            ch.polarization_chi.into(),
            xi.into(),
            same.into(),
            target.into(),
            a.coincidence_tolerance.into(),
            cross.into(),
            a.cross_polarization_bound.into(),
            ok.into(),
        ]);
    }

    let mut rng = stream_rng(seed, PHASE_STREAM);
    let chi = SpdcParams::real(ch.chi.iter().cloned().fold(0.0, f64::max))?;
    let run = event_channel::run_event_channel(InputKind::Spdc { chi }, ChannelParams::new(0.5, 1.0, 1.0)?, None)?;
    let mut phase = Table::new("channel_phase_delay", &["delta_rad", "mode", "coincidence_change", "pass"]);
    let mut phase_pass = true;
    for k in 0..ch.phase_trials {
        let delta = rng.random_range(0.0..std::f64::consts::TAU);
        let mode = if k % 2 == 0 { "1" } else { "2" };
        let change = event_channel::phase_delay_invariance_check(&run.reduced, mode, delta)?;
        let ok = change <= 1e-12;
        phase_pass &= ok;
        phase.push(vec![delta.into(), mode.into(), change.into(), ok.into()]);
    }

    let verdict = |b: bool| if b { "PASS" } else { "FAIL" };
    Ok(Report {
        tables: vec![grid, coherent, pol, phase],
        summary: vec![
            format!(
                "{} channel oracle: worst deviation / tolerance = {worst_ratio:.3}",
                verdict(all_pass)
            ),
            format!("{} coherent fixed point", verdict(coherent_pass)),
            format!("{} polarization coincidences", verdict(pol_pass)),
            format!("{} phase-delay invariance", verdict(phase_pass)),
        ],
    })
}
