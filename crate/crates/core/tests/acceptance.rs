//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use cavfeed::cli::{analyze_power, fit_spectrum, FitSettings};
use cavfeed::feeding::{
    fit_power_law, fit_saturation, model_amplitudes, FeedingModelParams, PowerPoint, TrendClass,
};
use cavfeed::fitting::{detect_peaks, fit_lorentzian, fit_triplet, FitConfig};
use cavfeed::io::config::ConfigFile;
use cavfeed::io::report::{self, FitReport};
use cavfeed::io::{format_spectrum, parse_spectrum, read_spectrum};
use cavfeed::model::{
    lorentzian, lorentzian_cdf, CoupledSystemParams, ParamId, Peak, Regime, SpectrumMeta,
    TripletParams,
};
use cavfeed::simulator::{
    emit_fixture, render, synth_scan, LambdaGrid, NoiseModel, ScanAxis, ScanConfig,
};
use cavfeed::units;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn check(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn c1_rabi_conversion() -> Outcome {
    let g = units::splitting_to_g(0.11, 933.8).map_err(|e| e.to_string())?;
    check((g - 18.9).abs() <= 0.1, format!("g = {g:.4} GHz"))?;
    Ok(format!("g = {g:.4} GHz (18.9 ± 0.1)"))
}

fn c2_q_extraction() -> Outcome {
    let (lambda, q) = (933.9, 13_300.0);
    let hwhm = 0.5 * lambda / q;
    let truth = TripletParams {
        a_lower: 0.0,
        a_upper: 0.0,
        a_bare: 500.0,
        c_lower: 933.5,
        c_upper: 934.3,
        c_bare: lambda,
        w_lower: 0.01,
        w_upper: 0.01,
        w_bare: hwhm,
    };
    let grid = LambdaGrid {
        min_nm: 933.5,
        max_nm: 934.3,
        step_nm: 0.005,
    };
    let spec = render(
        &truth,
        &grid,
        &NoiseModel::Poisson { counts_scale: 1.0 },
        None,
        21,
        0,
        SpectrumMeta::default(),
    )
    .map_err(|e| e.to_string())?;
    let peaks = detect_peaks(&spec, 1, 3).map_err(|e| e.to_string())?;
    let init = Peak {
        amplitude: std::f64::consts::PI * peaks.heights[0] * peaks.widths[0],
        center: peaks.centers[0],
        hwhm: peaks.widths[0],
    };
    let fit = fit_lorentzian(&spec, init, &FitConfig::default()).map_err(|e| e.to_string())?;
    check(
        fit.converged,
        "single-Lorentzian fit did not converge".into(),
    )?;
    let qf =
        units::q_factor(fit.params.c_bare, 2.0 * fit.params.w_bare).map_err(|e| e.to_string())?;
    check((qf - q).abs() <= 0.01 * q, format!("Q = {qf:.1}"))?;
    Ok(format!(
        "Q = {qf:.1} (13300 ± 1%), Poisson noise, peak {:.0} counts",
        spec.max_intensity()
    ))
}

fn random_triplet(rng: &mut ChaCha8Rng) -> TripletParams {
    let cb = 933.8 + rng.random_range(-0.05..0.05);
    let split = rng.random_range(0.08..0.3);
    TripletParams {
        a_lower: rng.random_range(100.0..10_000.0),
        a_upper: rng.random_range(100.0..10_000.0),
        a_bare: rng.random_range(100.0..10_000.0),
        c_lower: cb - 0.5 * split + rng.random_range(-0.01..0.01),
        c_upper: cb + 0.5 * split + rng.random_range(-0.01..0.01),
        c_bare: cb,
        w_lower: rng.random_range(0.01..0.03),
        w_upper: rng.random_range(0.01..0.03),
        w_bare: rng.random_range(0.02..0.05),
    }
}

fn width_scale(p: &TripletParams) -> f64 {
    p.w_lower.min(p.w_upper).min(p.w_bare)
}

/// Natural scale of each parameter: its value, or the narrowest width for centers.
fn param_scale(p: &TripletParams, id: ParamId) -> f64 {
    if id.is_center() {
        width_scale(p)
    } else {
        p.get(id).abs()
    }
}

fn c3_triplet_roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..1001).map(|i| 933.2 + 0.0012 * i as f64).collect();
    let trials = 200;
    let mut ok = 0;
    let mut worst_failed = String::new();
    for _ in 0..trials {
        let t = random_triplet(&mut rng);
        let y: Vec<f64> = x.iter().map(|&l| t.eval(l)).collect();
        let spec = cavfeed::model::Spectrum::new(x.clone(), y).map_err(|e| e.to_string())?;
        let spacing = (t.c_bare - t.c_lower).min(t.c_upper - t.c_bare);
        let mut init = t;
        for id in ParamId::ALL {
            let u: f64 = rng.random_range(-0.1..0.1);
            let v = t.get(id);
            init.set(
                id,
                if id.is_center() {
                    v + u * spacing
                } else {
                    v * (1.0 + u)
                },
            );
        }
        let cfg = FitConfig {
            rel_tolerance: 1e-12,
            max_iterations: 500,
            ..FitConfig::default()
        };
        let fit = fit_triplet(&spec, &init, &cfg).map_err(|e| e.to_string())?;
        let worst = ParamId::ALL
            .iter()
            .map(|&id| (fit.params.get(id) - t.get(id)).abs() / param_scale(&t, id))
            .fold(0.0, f64::max);
        if worst <= 1e-6 {
            ok += 1;
        } else {
            worst_failed = format!("worst failing rel err {worst:.2e}");
        }
    }
    let frac = ok as f64 / trials as f64;

    let mut jac_worst: f64 = 0.0;
    for _ in 0..50 {
        let t = random_triplet(&mut rng);
        let l = rng.random_range(933.5..934.1);
        let g = t.gradient(l);
        let base = t.to_array();
        let scaled: Vec<f64> = ParamId::ALL
            .iter()
            .map(|&id| g[id.index()] * param_scale(&t, id))
            .collect();
        let gmax = scaled.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for id in ParamId::ALL {
            let s = param_scale(&t, id);
            let h = 1e-5 * s;
            let (mut up, mut dn) = (base, base);
            up[id.index()] += h;
            dn[id.index()] -= h;
            let fd = (TripletParams::from_slice(&up).eval(l)
                - TripletParams::from_slice(&dn).eval(l))
                / (2.0 * h);
            let rel =
                (fd * s - scaled[id.index()]).abs() / scaled[id.index()].abs().max(1e-3 * gmax);
            jac_worst = jac_worst.max(rel);
        }
    }
    check(
        frac >= 0.99 && jac_worst <= 1e-6,
        format!("recovered {ok}/{trials} ({worst_failed}); Jacobian worst rel err {jac_worst:.2e}"),
    )?;
    Ok(format!(
        "{ok}/{trials} fits recover all 9 parameters to 1e-6; Jacobian worst rel err {jac_worst:.1e} on 50 points"
    ))
}

fn power_fixture(sub: &str) -> Result<Vec<PowerPoint>, String> {
    let config = repo().join(format!("configs/fig3-powerscan-{sub}.toml"));
    let (cfg, _) = ConfigFile::load(&config).map_err(|e| e.to_string())?;
    let settings = FitSettings::from_section(&cfg.fit_section()).map_err(|e| e.to_string())?;
    let dir = repo().join("fixtures/fig3-powerscan").join(sub);
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|f| {
            let spec = read_spectrum(f).map_err(|e| e.to_string())?;
            let sf = fit_spectrum(&spec, &settings).map_err(|e| e.to_string())?;
            if !sf.fit.converged {
                return Err(format!("{}: fit did not converge", f.display()));
            }
            let p = sf.fit.params;
            Ok(PowerPoint {
                power_uw: spec.meta.power_uw.ok_or("missing power_uW")?,
                a_lower: p.a_lower,
                a_upper: p.a_upper,
                a_bare: p.a_bare,
                sigma: None,
            })
        })
        .collect()
}

fn c4_s_reproduction() -> Outcome {
    let abe = power_fixture("abe")?;
    let trend_abe = analyze_power(abe, None).map_err(|e| e.to_string())?.trend;
    let mean = trend_abe.mean_s_ratio_unitless;
    let qre = power_fixture("qre")?;
    let qa = analyze_power(qre, Some(mean)).map_err(|e| e.to_string())?;
    let (trend_qre, rows) = (qa.trend, qa.rows);
    let at = |p: f64| rows.iter().find(|r| (r.power_uw - p).abs() < 1e-9).copied();
    let r15 = at(1.5).ok_or("no 1.5 uW point")?;
    let r8 = at(8.0).ok_or("no 8 uW point")?;
    let sup = r15.suppression_unitless.ok_or("no suppression")?;
    let msg = format!(
        "ABE {} mean S {:.4}; QRE {} S(1.5) {:.4} S(8) {:.4}; suppression {:.1}%",
        trend_abe.classification,
        mean,
        trend_qre.classification,
        r15.s_ratio_unitless,
        r8.s_ratio_unitless,
        100.0 * sup
    );
    check(
        trend_abe.classification == TrendClass::Constant
            && (mean - 0.75).abs() <= 0.03
            && trend_qre.classification == TrendClass::Linear
            && (r15.s_ratio_unitless - 0.45).abs() <= 0.03
            && (r8.s_ratio_unitless - 0.66).abs() <= 0.03
            && (sup - 0.40).abs() <= 0.04,
        msg.clone(),
    )?;
    Ok(msg + " (model reconstructions)")
}

fn qre_model() -> FeedingModelParams {
    FeedingModelParams {
        regime: Regime::QuasiResonant,
        p_sat_uw: 8.5,
        k_exciton: 2000.0,
        k_charged: 1260.4834611755024,
        k_biexciton: 1578.230440432761,
        eta_feed: 0.5,
        polariton_asymmetry: 0.0,
    }
}

const QRE_POWERS: [f64; 14] = [
    0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0, 12.0, 15.0, 20.0,
];

fn c5_saturation() -> Outcome {
    let m = qre_model();
    let clean: Vec<(f64, f64)> = QRE_POWERS
        .iter()
        .map(|&p| (p, model_amplitudes(&m, p).unwrap().polariton_total()))
        .collect();
    let fit = fit_saturation(&clean).map_err(|e| e.to_string())?;
    check(
        (fit.p_sat_uw - 8.5).abs() <= 0.01,
        format!("noiseless P_sat = {}", fit.p_sat_uw),
    )?;
    let mc: Vec<(f64, f64)> = (0..10)
        .map(|i| {
            let p = 1.0 + 19.0 * i as f64 / 9.0;
            (p, model_amplitudes(&m, p).unwrap().polariton_total())
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = Normal::new(0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut inside = 0;
    for _ in 0..100 {
        let noisy: Vec<(f64, f64)> = mc
            .iter()
            .map(|&(p, a)| (p, a * (1.0 + 0.02 * n.sample(&mut rng))))
            .collect();
        let f = fit_saturation(&noisy).map_err(|e| e.to_string())?;
        let rel = (f.p_sat_uw - 8.5).abs() / 8.5;
        worst = worst.max(rel);
        if rel <= 0.1 {
            inside += 1;
        }
    }
    check(
        inside == 100,
        format!(
            "{inside}/100 noisy fits within 10% (worst {:.1}%)",
            100.0 * worst
        ),
    )?;
    Ok(format!(
        "noiseless P_sat = {:.6} uW; 100/100 fits at 2% noise, 10 points over 1-20 uW, within 10% (worst {:.1}%)",
        fit.p_sat_uw,
        100.0 * worst
    ))
}

fn c6_power_law() -> Outcome {
    let m = FeedingModelParams {
        k_charged: 0.0,
        ..qre_model()
    };
    let low: Vec<(f64, f64)> = (0..10)
        .map(|i| {
            let p = 8.5 * 0.01 * 10f64.powf(i as f64 / 9.0);
            (p, model_amplitudes(&m, p).unwrap().polariton_total())
        })
        .collect();
    let exc = fit_power_law(&low).map_err(|e| e.to_string())?.exponent;
    let quad: Vec<(f64, f64)> = (1..=10)
        .map(|i| (0.5 * i as f64, 37.0 * (0.5 * i as f64).powi(2)))
        .collect();
    let biex = fit_power_law(&quad).map_err(|e| e.to_string())?.exponent;
    let abe = FeedingModelParams {
        regime: Regime::AboveBand,
        k_biexciton: 0.0,
        k_charged: 12_000.0,
        ..qre_model()
    };
    let s: Vec<f64> = (1..=40)
        .map(|i| {
            model_amplitudes(&abe, 0.5 * i as f64)
                .unwrap()
                .s_ratio()
                .unwrap()
        })
        .collect();
    let spread = s.iter().map(|v| (v - s[0]).abs()).fold(0.0, f64::max);
    let msg = format!(
        "exciton exponent {exc:.4}, biexciton exponent {biex:.12}, ABE S spread {spread:.1e}"
    );
    check(
        (exc - 1.0).abs() <= 0.05 && (biex - 2.0).abs() <= 1e-9 && spread <= 1e-12,
        msg.clone(),
    )?;
    Ok(msg)
}

fn c7_anticrossing() -> Outcome {
    let kappa = units::kappa_from_q(933.8, 13_300.0).map_err(|e| e.to_string())?;
    let sys = CoupledSystemParams {
        g_ghz: 18.9,
        kappa_ghz: kappa,
        gamma_x_ghz: 1.0,
        lambda_cavity_nm: 933.8,
        delta_ghz: 0.0,
    };
    let detunings: Vec<f64> = (-10..=10).map(|k| k as f64 * sys.g_ghz).collect();
    let scan = ScanConfig {
        sys,
        feeding: qre_model(),
        power_uw: 4.0,
        grid: LambdaGrid {
            min_nm: 933.1,
            max_nm: 934.5,
            step_nm: 0.001,
        },
        noise: NoiseModel::Poisson { counts_scale: 1.0 },
        instrument_fwhm_nm: None,
        seed: 7,
        axis: ScanAxis::Detuning {
            detunings_ghz: detunings.clone(),
        },
    };
    let points = synth_scan(&scan).map_err(|e| e.to_string())?;
    let bare_hwhm = 0.5 * units::width_ghz_to_nm(kappa, 933.8).unwrap();
    let settings = FitSettings {
        cavity_nm: Some(933.8),
        lambda0_nm: Some(933.8),
        splitting_guess_nm: Some(0.11),
        weighting: cavfeed::fitting::Weighting::Poisson,
        fixed: [(ParamId::CBare, 933.8), (ParamId::WBare, bare_hwhm)]
            .into_iter()
            .collect(),
        ..FitSettings::default()
    };
    let mut split = Vec::new();
    for p in &points {
        let sf = fit_spectrum(&p.spectrum, &settings).map_err(|e| e.to_string())?;
        let o = sf.observables.ok_or(format!(
            "fit at delta = {:.1} GHz did not converge",
            p.detuning_ghz
        ))?;
        split.push((
            p.detuning_ghz,
            o.splitting_ghz,
            o.splitting_sigma_ghz.unwrap_or(0.0),
            o.splitting_nm,
        ));
    }
    let imin = (0..split.len())
        .min_by(|&a, &b| split[a].1.total_cmp(&split[b].1))
        .unwrap();
    let mid = split.len() / 2;
    let mut worst_z: f64 = 0.0;
    for k in 1..=mid {
        let (a, b) = (split[mid - k], split[mid + k]);
        let z = (a.1 - b.1).abs() / (a.2 * a.2 + b.2 * b.2).sqrt().max(1e-12);
        worst_z = worst_z.max(z);
    }
    let min_nm = split[mid].3;
    let oracle = sys.resonant_splitting_ghz();
    let z0 = (split[mid].1 - oracle).abs() / split[mid].2.max(1e-12);
    let msg = format!(
        "min at delta = {:.1} GHz, min splitting {min_nm:.4} nm ({:.2} GHz vs oracle {oracle:.2} GHz, {z0:.1} sigma), worst +/- asymmetry {worst_z:.2} sigma",
        split[imin].0, split[mid].1
    );
    check(
        imin == mid && worst_z <= 3.0 && (min_nm - 0.11).abs() <= 0.01 && z0 <= 3.0,
        msg.clone(),
    )?;
    Ok(msg)
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
}

impl Panel {
    fn area(&self) -> f64 {
        (self.b - self.a) / 6.0 * (self.fa + 4.0 * self.fm + self.fb)
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, p: Panel, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (p.a + p.b);
        let left = Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: f(0.5 * (p.a + m)),
            fb: p.fm,
        };
        let right = Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: f(0.5 * (m + p.b)),
            fb: p.fb,
        };
        let (l, r, whole) = (left.area(), right.area(), p.area());
        if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
            return l + r + (l + r - whole) / 15.0;
        }
        rec(f, left, 0.5 * tol, depth - 1) + rec(f, right, 0.5 * tol, depth - 1)
    }
    let p = Panel {
        a,
        b,
        fa: f(a),
        fm: f(0.5 * (a + b)),
        fb: f(b),
    };
    rec(f, p, tol, depth)
}

fn c8_normalization() -> Outcome {
    let mut worst: f64 = 0.0;
    for g in [1e-3, 0.05, 1.0, 10.0] {
        for (lo, hi) in [
            (-g, g),
            (-10.0 * g, 3.0 * g),
            (-100.0 * g, 100.0 * g),
            (0.5 * g, 7.0 * g),
        ] {
            let f = |d: f64| lorentzian(g, d).unwrap();
            let q = simpson(&f, lo, hi, 1e-12, 50);
            let exact = lorentzian_cdf(g, hi).unwrap() - lorentzian_cdf(g, lo).unwrap();
            worst = worst.max((q - exact).abs());
        }
    }
    check(
        worst <= 1e-6,
        format!("worst |quadrature - cdf| = {worst:.2e}"),
    )?;
    Ok(format!(
        "worst |quadrature - arctan CDF| = {worst:.1e} over 4 widths x 4 windows"
    ))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cavfeed")
}

fn c9_determinism_io() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sets = [
        ("fig2-abe", "fig2-abe"),
        ("fig2-qre", "fig2-qre"),
        ("fig3-powerscan-abe", "fig3-powerscan/abe"),
        ("fig3-powerscan-qre", "fig3-powerscan/qre"),
    ];
    let mut files = 0;
    for (cfg_name, dir) in sets {
        let (cfg, _) = ConfigFile::load(&repo().join(format!("configs/{cfg_name}.toml")))
            .map_err(|e| e.to_string())?;
        let scan = cfg.scan_config(None).map_err(|e| e.to_string())?;
        let out = tmp.path().join(cfg_name);
        emit_fixture(
            cfg_name,
            &scan,
            &synth_scan(&scan).map_err(|e| e.to_string())?,
            &out,
        )
        .map_err(|e| e.to_string())?;
        let shipped = repo().join("fixtures").join(dir);
        for entry in std::fs::read_dir(&out).map_err(|e| e.to_string())? {
            let name = entry.map_err(|e| e.to_string())?.file_name();
            let a = std::fs::read(out.join(&name)).map_err(|e| e.to_string())?;
            let b = std::fs::read(shipped.join(&name))
                .map_err(|e| format!("{dir}/{}: {e}", name.to_string_lossy()))?;
            check(
                a == b,
                format!("{dir}/{} differs from regeneration", name.to_string_lossy()),
            )?;
            files += 1;
        }
    }

    let spec = read_spectrum(&repo().join("fixtures/fig2-qre/004_T18.4K.csv"))
        .map_err(|e| e.to_string())?;
    let back =
        parse_spectrum(&format_spectrum(&spec), Path::new("x")).map_err(|e| e.to_string())?;
    check(back == spec, "CSV roundtrip changed values".into())?;

    let rep_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |args: &[&str]| -> Result<i32, String> {
        let out = Command::new(bin())
            .args(args)
            .arg("--out")
            .arg(rep_dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        out.status.code().ok_or("killed by signal".into())
    };
    let fixture = repo().join("fixtures/fig2-qre/004_T18.4K.csv");
    let cfg = repo().join("configs/fig2-qre.toml");
    let code = run(&[
        "fit",
        fixture.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ])?;
    check(code == 0, format!("fit exited {code}"))?;
    let text = std::fs::read_to_string(rep_dir.path().join("004_T18.4K.report.json"))
        .map_err(|e| e.to_string())?;
    let parsed: FitReport = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    check(
        report::to_json(&parsed).map_err(|e| e.to_string())? == text,
        "report JSON roundtrip differs".into(),
    )?;

    let errors = repo().join("fixtures/errors");
    for (cmd, name) in [
        ("fit", "empty.csv"),
        ("fit", "bad-line.csv"),
        ("power", "mixed-regime"),
        ("power", "two-powers"),
    ] {
        let got = run(&[cmd, errors.join(name).to_str().unwrap()])?;
        check(got == 2, format!("{cmd} {name}: exit {got}, want 2"))?;
    }
    let nc = tempfile::NamedTempFile::new().map_err(|e| e.to_string())?;
    std::fs::write(nc.path(), "schema_version = 1\n[fit]\nmax_iterations = 1\n")
        .map_err(|e| e.to_string())?;
    let got = run(&[
        "fit",
        fixture.to_str().unwrap(),
        "--config",
        nc.path().to_str().unwrap(),
    ])?;
    check(got == 3, format!("non-converging fit exited {got}, want 3"))?;
    Ok(format!(
        "{files} fixture files regenerate bit-identically; CSV and report JSON roundtrip; exit codes 0/2/2/2/2/3 as specified"
    ))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("1 Rabi conversion", c1_rabi_conversion),
        ("2 Q extraction", c2_q_extraction),
        ("3 triplet-fit roundtrip", c3_triplet_roundtrip),
        ("4 S reproduction", c4_s_reproduction),
        ("5 saturation", c5_saturation),
        ("6 power-law property", c6_power_law),
        ("7 anticrossing", c7_anticrossing),
        ("8 Lorentzian normalization", c8_normalization),
        ("9 determinism and I/O", c9_determinism_io),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let res = f();
        let dt = t.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("criterion {name}: PASS ({dt:.2} s) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {name}: FAIL ({dt:.2} s) {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
