//! Acceptance suite. Runs every criterion at its stated tolerance, prints
//! one PASS/FAIL line each, and exits nonzero if any fail.
//!
//! `cargo test -p twinphoton-cli --test acceptance`

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twinphoton::coincidence::{
    element_chain, rate_compensated, rate_entangled, rate_general, rate_unentangled, singles_rate,
    AnalyzerSettings, Configuration, Detector, RateScale, SampleParams,
};
use twinphoton::estimation::{
    fit_sweep, invert_three_point, monte_carlo_precision, MeasurementRecord, MonteCarloDesign,
    RateModel,
};
use twinphoton::oracle::oracle_rate;
use twinphoton::source::{CompensatorDelay, SpectrumModel};
use twinphoton::Error;

type Outcome = Result<String, String>;

/// `|a - b| / |b|`, with a denominator floor of `1e-3 * full_scale` so
/// that points on an interference null are compared against the fringe
/// amplitude rather than against zero.
fn rel(a: f64, b: f64, full_scale: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-3 * full_scale)
}

fn scale(c: f64) -> RateScale {
    RateScale::new(c).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mirror_patterns() -> Outcome {
    let c = 1000.0;
    let grid: Vec<f64> = (0..181).map(|i| (i as f64).to_radians()).collect();
    let mirrors = [
        SampleParams::mirror(),
        SampleParams::new(
            num_complex::Complex64::from_polar(0.7, 0.3),
            num_complex::Complex64::from_polar(0.7, 0.3),
        )
        .unwrap(),
    ];
    let mut worst = 0.0f64;
    for s in &mirrors {
        for &t1 in &grid {
            for &t2 in &grid {
                let a = AnalyzerSettings::new(t1, t2);
                let u = rate_unentangled(s, scale(c), a);
                let e = rate_entangled(s, scale(c), a);
                worst = worst.max(rel(u, c * (t1 - t2).sin().powi(2), c));
                worst = worst.max(rel(e, c * (t1 + t2).sin().powi(2), c));
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("max relative error {worst:.3e} over 181x181 angles (limit 1e-12)"),
    )
}

fn formalism_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let s = SampleParams::from_psi_delta(
            rng.random_range(0.0..FRAC_PI_2),
            rng.random_range(-PI..PI),
        )
        .unwrap();
        let a = AnalyzerSettings::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        for cfg in [
            Configuration::unentangled(s, scale(1.0)),
            Configuration::entangled(s, scale(1.0)),
        ] {
            let general = rate_general(&element_chain(&cfg, a), &cfg.source(), cfg.scale)
                .map_err(|e| e.to_string())?;
            let closed = s.reference_reflectance() * cfg.rate(a);
            worst = worst.max(rel(general, closed, s.reference_reflectance()));
        }
    }
    check(
        worst <= 1e-12,
        format!("max relative error {worst:.3e} over 1000 draws x 2 variants (limit 1e-12)"),
    )
}

fn fock_oracle() -> Outcome {
    let omega0 = 100.0;
    let spectrum = SpectrumModel::gaussian(omega0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = [0.0f64; 3];
    let mut phase_spread = 0.0f64;
    for _ in 0..20 {
        let s =
            SampleParams::from_psi_delta(rng.random_range(0.02..1.55), rng.random_range(-PI..PI))
                .unwrap();
        let a = AnalyzerSettings::new(rng.random_range(0.0..PI), rng.random_range(0.0..PI));
        // residual delays on the carrier lattice omega0 tau = 2 pi k
        let tau = 2.0 * PI * rng.random_range(0..40) as f64 / omega0;
        let cfgs = [
            Configuration::unentangled(s, scale(1000.0)),
            Configuration::compensated(
                s,
                scale(1000.0),
                spectrum,
                CompensatorDelay::new(tau).unwrap(),
            ),
            Configuration::entangled(s, scale(1000.0)),
        ];
        for (i, cfg) in cfgs.iter().enumerate() {
            let full = 1000.0 * s.reference_reflectance();
            let closed = s.reference_reflectance() * cfg.rate(a);
            let brute = oracle_rate(cfg, a, &spectrum, 64, 0.0).map_err(|e| e.to_string())?;
            worst[i] = worst[i].max(rel(brute, closed, full));
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for k in 0..8 {
                let r = oracle_rate(cfg, a, &spectrum, 64, 2.0 * PI * k as f64 / 8.0)
                    .map_err(|e| e.to_string())?;
                lo = lo.min(r);
                hi = hi.max(r);
            }
            phase_spread = phase_spread.max((hi - lo) / full);
        }
    }
    let max = worst.iter().cloned().fold(0.0, f64::max);
    check(
        max <= 1e-6 && phase_spread <= 1e-12,
        format!(
            "max relative error unentangled {:.3e}, compensated {:.3e}, entangled {:.3e} (limit 1e-6); \
             vacuum-port phase spread {phase_spread:.3e} (limit 1e-12)",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn compensation_limits() -> Outcome {
    let bandwidth = 1e13;
    let spectrum = SpectrumModel::gaussian(2.683e15, bandwidth).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let s = SampleParams::from_psi_delta(
            rng.random_range(0.0..FRAC_PI_2),
            rng.random_range(-PI..PI),
        )
        .unwrap();
        let a = AnalyzerSettings::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let comp = rate_compensated(&s, scale(1e3), &spectrum, &CompensatorDelay::full(), a);
        worst = worst.max(rel(comp, rate_unentangled(&s, scale(1e3), a), 1e3));
    }

    let tau = 10.0 / bandwidth;
    let a = AnalyzerSettings::new(FRAC_PI_4, FRAC_PI_4);
    let psi = 30f64.to_radians();
    let delta = 60f64.to_radians();
    let h = 1e-4;
    let slope = |tau: f64| {
        let delay = CompensatorDelay::new(tau).unwrap();
        let at = |d: f64| {
            rate_compensated(
                &SampleParams::from_psi_delta(psi, d).unwrap(),
                scale(1e3),
                &spectrum,
                &delay,
                a,
            )
        };
        (at(delta + h) - at(delta - h)) / (2.0 * h)
    };
    let ratio = (slope(tau) / slope(0.0)).abs();

    let cfg = Configuration::compensated(
        SampleParams::from_psi_delta(psi, delta).unwrap(),
        scale(1e3),
        spectrum,
        CompensatorDelay::new(tau).unwrap(),
    );
    let data: Vec<MeasurementRecord> = (0..37)
        .map(|i| {
            let a = AnalyzerSettings::new(FRAC_PI_4, PI * i as f64 / 36.0);
            MeasurementRecord::from_rate(a, 1.0, cfg.rate(a)).unwrap()
        })
        .collect();
    let fit =
        fit_sweep(&data, RateModel::for_configuration(&cfg), None).map_err(|e| e.to_string())?;
    check(
        worst <= 1e-12 && ratio < 1e-6 && fit.flags.delta_unidentifiable,
        format!(
            "tau=0 vs unentangled max error {worst:.3e} (limit 1e-12); dN/dDelta ratio at tau=10/bandwidth \
             {ratio:.3e} (limit 1e-6); delta_unidentifiable={}",
            fit.flags.delta_unidentifiable
        ),
    )
}

fn three_point_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = [0.0f64; 3];
    for _ in 0..500 {
        let psi = rng.random_range(1.0f64..89.0).to_radians();
        let delta = rng.random_range(1.0f64..179.0).to_radians();
        let c = rng.random_range(10.0..1e6);
        let theta1 = rng.random_range(5.0f64..85.0).to_radians();
        let s = SampleParams::from_psi_delta(psi, delta).unwrap();
        for (cfg, model) in [
            (
                Configuration::unentangled(s, scale(c)),
                RateModel::Unentangled,
            ),
            (Configuration::entangled(s, scale(c)), RateModel::Entangled),
        ] {
            let recs = [0.0, FRAC_PI_2, FRAC_PI_4].map(|t2| {
                let a = AnalyzerSettings::new(theta1, t2);
                MeasurementRecord::from_rate(a, 1.0, cfg.rate(a)).unwrap()
            });
            let r = invert_three_point(&recs[0], &recs[1], &recs[2], model)
                .map_err(|e| e.to_string())?;
            worst[0] = worst[0].max((r.c_hat - c).abs() / c);
            worst[1] = worst[1].max((r.psi_hat - psi).abs());
            worst[2] = worst[2].max((r.delta_hat - delta).abs());
        }
    }
    let mut rejected = 0;
    for theta1 in [0.0, FRAC_PI_2] {
        let rec = |t2: f64| MeasurementRecord::new(theta1, t2, 1.0, 100.0).unwrap();
        for model in [RateModel::Unentangled, RateModel::Entangled] {
            if let Err(Error::DegenerateTheta1 { .. }) =
                invert_three_point(&rec(0.0), &rec(FRAC_PI_2), &rec(FRAC_PI_4), model)
            {
                rejected += 1;
            }
        }
    }
    let max = worst.iter().cloned().fold(0.0, f64::max);
    check(
        max <= 1e-10 && rejected == 4,
        format!(
            "max error C (relative) {:.3e}, psi {:.3e} rad, delta {:.3e} rad over 500 truths x 2 variants \
             (limit 1e-10); degenerate theta1 rejected {rejected}/4",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn shot_noise_scaling() -> Outcome {
    let s = SampleParams::from_psi_delta(30f64.to_radians(), 60f64.to_radians()).unwrap();
    let design = MonteCarloDesign::three_point(FRAC_PI_4, vec![1e3, 1e4, 1e5, 1e6], 300, 6);
    let mut details = Vec::new();
    let mut ok = true;
    for (name, cfg) in [
        ("unentangled", Configuration::unentangled(s, scale(1e3))),
        ("entangled", Configuration::entangled(s, scale(1e3))),
    ] {
        let report = monte_carlo_precision(&cfg, &design).map_err(|e| e.to_string())?;
        let slope = report.slope_psi.unwrap_or(f64::NAN);
        let bias = report.levels[3].bias_psi.to_degrees();
        ok &= (slope + 0.5).abs() <= 0.05 && bias.abs() < 0.1;
        details.push(format!(
            "{name}: slope {slope:.4} (-0.50 +/- 0.05), bias at 1e6 {bias:.2e} deg (< 0.1)"
        ));
    }
    check(ok, details.join("; "))
}

fn unpolarized_marginals() -> Outcome {
    // A sample with unequal reflectances polarizes beam 1, so detector 1
    // is checked behind a mirror; detector 2 sees the bare source beam.
    let lossy = SampleParams::from_psi_delta(0.4, 1.3).unwrap();
    let mirror = Configuration::entangled(SampleParams::mirror(), scale(1e3));
    let sampled = Configuration::entangled(lossy, scale(1e3));
    let mut spread = 0.0f64;
    for (cfg, det) in [
        (&mirror, Detector::D1),
        (&mirror, Detector::D2),
        (&sampled, Detector::D2),
    ] {
        let rates: Vec<f64> = (0..10)
            .map(|i| singles_rate(cfg, det, 0.3 * i as f64))
            .collect();
        let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max((hi - lo) / hi);
    }
    check(
        spread <= 1e-12,
        format!("relative singles spread {spread:.3e} over 10 angles, both detectors, mirror sample (limit 1e-12)"),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_twinphoton");
    let capture = |workers: &str, args: &[&str]| -> Result<Vec<u8>, String> {
        let out = Command::new(bin)
            .arg("--workers")
            .arg(workers)
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        Ok(out.stdout)
    };
    let runs: [&[&str]; 2] = [
        &["simulate", "--noise", "--seed", "11"],
        &["montecarlo", "--trials", "300", "--seed", "11"],
    ];
    let mut identical = 0;
    for args in runs {
        let a = capture("1", args)?;
        let b = capture("1", args)?;
        let c = capture("4", args)?;
        if a == b && a == c && !a.is_empty() {
            identical += 1;
        }
    }
    check(
        identical == 2,
        format!("{identical}/2 commands byte-identical across runs and worker counts 1, 4"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("mirror pattern", mirror_patterns),
        ("formalism consistency", formalism_consistency),
        ("fock oracle", fock_oracle),
        ("compensation limits", compensation_limits),
        ("three-point round trip", three_point_round_trip),
        ("shot-noise scaling", shot_noise_scaling),
        ("unpolarized marginals", unpolarized_marginals),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
