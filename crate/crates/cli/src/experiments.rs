use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use landau_core::echoes::{run_echo_experiment, EchoExperiment, EchoReport, ECHO_CONVENTION};
use landau_core::linear::{
    check_cond_l, check_condition_a, check_condition_b, fit_decay_rate, root_scan, solve_volterra, unstable_root_count,
    DecayFit, ModeHistory, RootScanSpec, StripGrid, StripQuadrature,
};
use landau_core::models::{verify_cond_f0, verify_cond_w};
use landau_core::norms::{lmb_norm, norms_csv, z_norm, GlidingNormSpec, LmbSpec, LpIndex, NormRecord};
use landau_core::sim::{asymptotic_profile, run, run_observed, ObservableLog};
use landau_core::Complex64;

use crate::artifacts::{write_meta, RunDir};
use crate::config::{Experiment, ExperimentConfig};
use crate::error::RunError;
use crate::plot::{render_plot, FitLine, Marker, PlotSpec, Series};

/// Runs one experiment into `dir`. `run.meta` is written whatever the outcome.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<(), RunError> {
    let mut out = RunDir::create(dir)?;
    let result = match cfg.experiment {
        Experiment::LinearDamping => linear_damping(cfg, &mut out),
        Experiment::Nonlinear => nonlinear(cfg, &mut out),
        Experiment::Certify => certify(cfg, &mut out),
        Experiment::Echo => echo(cfg, &mut out),
        Experiment::Norms => norms(cfg, &mut out),
    };
    write_meta(&out, cfg, &result)?;
    result
}

fn plot(out: &mut RunDir, name: &str, csv: &str, spec: &PlotSpec) -> Result<(), RunError> {
    let svg = render_plot(csv, spec).map_err(|e| RunError::Numeric(format!("{name}: {e}")))?;
    out.write(name, &svg)
}

fn fit_line(fit: &DecayFit, window: (f64, f64), label: String) -> FitLine {
    FitLine { slope: -fit.rate, intercept: fit.intercept, x_range: window, label }
}

fn history_rows(s: &mut String, h: &ModeHistory) {
    for (t, c) in h.times().zip(h.values()) {
        let _ = writeln!(s, "{t},{},{:.17e},{:.17e},{:.17e}", h.k(), c.re, c.im, c.norm());
    }
}

/// Fourier transform in v of the perturbation's velocity shape.
fn shape_ft(cfg: &ExperimentConfig, profile: &landau_core::models::VelocityProfile, eta: f64) -> Complex64 {
    match cfg.perturbation.width {
        Some(w) => Complex64::new((-2.0 * PI * PI * w * w * eta * eta).exp(), 0.0),
        None => profile.ft(eta),
    }
}

fn linear_damping(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<(), RunError> {
    let profile = cfg.build_profile()?;
    let interaction = cfg.build_interaction()?;
    let modes = if cfg.linear.modes.is_empty() { vec![cfg.perturbation.k] } else { cfg.linear.modes.clone() };
    let dt = cfg.linear.dt.unwrap_or(cfg.time.dt);
    let t_end = cfg.time.t_end;
    let window = cfg.linear.fit_window.map_or((0.1 * t_end, t_end), |[a, b]| (a, b.min(t_end)));
    // rho^_i(k) of amplitude cos(2 pi k x + phase)
    let rho0 = Complex64::from_polar(0.5 * cfg.perturbation.amplitude, cfg.perturbation.phase);

    let mut csv = String::from("t,k,re,im,abs\n");
    let mut rates = String::from("k,fit_rate,fit_intercept,fit_r2,root_rate,lambda_star,root_re,root_im,limited_by_profile\n");
    let mut spec = PlotSpec {
        title: "linear density modes".into(),
        x_column: "t".into(),
        x_label: "t".into(),
        y_label: "|rho(t, k)|".into(),
        log_y: true,
        ..Default::default()
    };
    let mut histories = Vec::new();
    for &k in &modes {
        let kf = k as f64;
        let h = solve_volterra(&profile, &interaction, |t| rho0 * shape_ft(cfg, &profile, kf * t), k, t_end, dt)?;
        history_rows(&mut csv, &h);
        let scan = root_scan(&profile, &interaction, k, &RootScanSpec::default())?;
        let root = scan.root.unwrap_or_default();
        let fit = fit_decay_rate(&h, window);
        let (fr, fi, fq) = match &fit {
            Ok(f) => (f.rate.to_string(), f.intercept.to_string(), f.quality.to_string()),
            Err(e) => {
                out.note(format!("k{k}.fit_error"), e);
                (String::new(), String::new(), String::new())
            }
        };
        let _ = writeln!(
            rates,
            "{k},{fr},{fi},{fq},{},{},{},{},{}",
            scan.rate, scan.lambda_star, root.re, root.im, scan.limited_by_profile
        );
        out.note(format!("k{k}.root_rate"), scan.rate);
        spec.series.push(Series::new("abs", &format!("|rho(k={k})|")).filtered("k", &k.to_string()));
        if let Ok(f) = &fit {
            out.note(format!("k{k}.fit_rate"), f.rate);
            out.note(format!("k{k}.fit_r2"), f.quality);
            spec.fits.push(fit_line(f, window, format!("fit k={k}: {:.4}", f.rate)));
        }
        histories.push(h);
    }
    out.write("modes.csv", &csv)?;
    out.write("rates.csv", &rates)?;
    plot(out, "modes.svg", &csv, &spec)?;

    if cfg.linear.compare_simulation {
        let mut rc = cfg.run_config();
        rc.k_obs = rc.k_obs.max(modes.iter().map(|k| k.abs()).max().unwrap_or(1));
        let log = run(&profile, &interaction, &cfg.perturbation_spec(), &rc)?;
        out.write("sim_modes.csv", &log.modes_csv())?;
        for h in &histories {
            let sim = log.mode_history(h.k())?;
            let scale = h.values().iter().map(|c| c.norm()).fold(0.0, f64::max);
            let mut worst: f64 = 0.0;
            for (t, c) in sim.times().zip(sim.values()) {
                if log.is_post_recurrence(t) {
                    break;
                }
                if let Some(v) = h.at(t) {
                    worst = worst.max((c - v).norm());
                }
            }
            out.note(format!("k{}.sim_rel_diff", h.k()), if scale > 0.0 { worst / scale } else { worst });
        }
        out.note("trusted_until", log.trusted_until());
    }
    Ok(())
}

fn nonlinear(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<(), RunError> {
    let profile = cfg.build_profile()?;
    let interaction = cfg.build_interaction()?;
    let rc = cfg.run_config();
    let log = run(&profile, &interaction, &cfg.perturbation_spec(), &rc)?;
    write_log(out, &log)?;
    if !log.ftilde.is_empty() {
        out.write("ftilde.csv", &log.ftilde_csv())?;
    }
    if cfg.nonlinear.record_marginal {
        let a = asymptotic_profile(&log)?;
        let mut s = String::from("v,f_initial,f_final\n");
        for (j, v) in a.v.iter().enumerate() {
            let _ = writeln!(s, "{v},{:.17e},{:.17e}", log.marginals[0][j], a.f_inf[j]);
        }
        out.write("marginal.csv", &s)?;
        out.note("marginal_last_change", format!("{:e}", a.last_change));
    }

    let k = cfg.perturbation.k;
    let trusted = log.trusted_until();
    let window = cfg.nonlinear.fit_window.map_or((0.1 * cfg.time.t_end, cfg.time.t_end.min(trusted)), |[a, b]| (a, b));
    let fit = log.mode_history(k).and_then(|h| fit_decay_rate(&h, window));
    match &fit {
        Ok(f) => {
            out.note("fit_rate", f.rate);
            out.note("fit_r2", f.quality);
            out.note("fit_window", format!("{},{}", window.0, window.1));
        }
        Err(e) => out.note("fit_error", e),
    }
    match root_scan(&profile, &interaction, k, &RootScanSpec::default()) {
        Ok(s) => out.note("linear_rate", s.rate),
        Err(e) => out.note("linear_rate_error", e),
    }

    let modes = log.modes_csv();
    let mut spec = PlotSpec {
        title: "density modes".into(),
        x_column: "t".into(),
        x_label: "t".into(),
        y_label: "|rho(t, k)|".into(),
        log_y: true,
        series: (1..=log.k_obs()).map(|m| Series::new("abs", &format!("|rho(k={m})|")).filtered("k", &m.to_string())).collect(),
        markers: vec![Marker { x: trusted, label: "0.8 t_R".into() }],
        ..Default::default()
    };
    if let Ok(f) = &fit {
        spec.fits.push(fit_line(f, window, format!("fit: rate {:.4}", f.rate)));
    }
    plot(out, "modes.svg", &modes, &spec)?;
    let grad = PlotSpec {
        title: "velocity gradient growth".into(),
        x_column: "t".into(),
        x_label: "t".into(),
        y_label: "||grad_v f||_2".into(),
        log_y: true,
        series: vec![Series::new("gradv_l2", "||grad_v f||")],
        markers: vec![Marker { x: trusted, label: "0.8 t_R".into() }],
        ..Default::default()
    };
    plot(out, "gradient.svg", &log.observables_csv(), &grad)
}

fn write_log(out: &mut RunDir, log: &ObservableLog) -> Result<(), RunError> {
    out.write("observables.csv", &log.observables_csv())?;
    out.write("modes.csv", &log.modes_csv())?;
    for (k, v) in log.meta_pairs() {
        out.note(k, v);
    }
    out.note("max_energy_drift", format!("{:e}", log.max_energy_drift()));
    Ok(())
}

fn certify(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<(), RunError> {
    let profile = cfg.build_profile()?;
    let interaction = cfg.build_interaction()?;
    let c = &cfg.certify;
    let f0 = verify_cond_f0(&profile, c.eta_max, 2001)?;
    let w = verify_cond_w(&interaction, c.k_max)?;
    let n = c.z_samples;
    let z: Vec<f64> = (0..n).map(|i| -c.z_max + 2.0 * c.z_max * i as f64 / (n - 1) as f64).collect();
    let a = check_condition_a(&profile, &interaction, &z, c.k_max)?;
    let b = check_condition_b(&profile, &interaction, c.k_max)?;
    let grid = StripGrid { n_re: c.n_re, n_im: c.n_im, ..StripGrid::default() };
    let strip = check_cond_l(&profile, &interaction, c.lambda_strip, c.kappa, c.k_max, &grid)?;
    let quad = StripQuadrature::default();
    let mut unstable = Vec::new();
    for k in 1..=c.k_max {
        let n = unstable_root_count(&profile, &interaction, k, &quad)?;
        if n > 0 {
            unstable.push((k, n));
        }
    }
    let pass = strip.pass && unstable.is_empty() && f0.pass && w.pass;

    let mut s = String::new();
    let _ = writeln!(s, "# stability certificate: {} + {}", cfg.profile.name, interaction.describe());
    let _ = writeln!(s, "pass = {pass}");
    let _ = writeln!(s, "\n[analyticity]");
    let _ = writeln!(s, "pass = {}", f0.pass);
    let _ = writeln!(s, "lambda = {}", profile.lambda());
    let _ = writeln!(s, "c0 = {}", profile.c0());
    let _ = writeln!(s, "worst_ratio = {}", f0.worst_ratio);
    let _ = writeln!(s, "worst_eta = {}", f0.worst_eta);
    if let (Some(r), Some(rem)) = (f0.series_ratio, f0.series_remainder) {
        let _ = writeln!(s, "series_ratio = {r}");
        let _ = writeln!(s, "series_remainder = {rem}");
    }
    let _ = writeln!(s, "\n[interaction_decay]");
    let _ = writeln!(s, "pass = {}", w.pass);
    let _ = writeln!(s, "worst_k = {}", w.worst_k);
    let _ = writeln!(s, "worst_ratio = {}", w.worst_ratio);
    let _ = writeln!(s, "\n[strip]");
    s.push_str(&strip.to_key_value());
    let _ = writeln!(s, "\n[growing_modes]");
    let _ = writeln!(s, "count = {}", unstable.iter().map(|u| u.1).sum::<i64>());
    let _ = writeln!(s, "modes = {}", unstable.iter().map(|(k, n)| format!("{k}:{n}")).collect::<Vec<_>>().join(","));
    let _ = writeln!(s, "\n[sufficient]");
    let _ = writeln!(s, "condition_a = {a}");
    let _ = writeln!(s, "condition_b_value = {b}");
    let _ = writeln!(s, "condition_b = {}", b < 1.0);
    out.write("stability.txt", &s)?;

    out.note("pass", pass);
    out.note("kappa_est", strip.kappa_est);
    out.note("condition_a", a);
    out.note("condition_b_value", b);
    out.note("growing_modes", unstable.len());
    if pass {
        Ok(())
    } else {
        let mut why = Vec::new();
        if !strip.pass {
            why.push(format!("strip minimum {:.3e} below kappa {} at k = {}", strip.kappa_est, c.kappa, strip.worst_k));
        }
        if !unstable.is_empty() {
            why.push(format!("growing modes at k = {:?}", unstable.iter().map(|u| u.0).collect::<Vec<_>>()));
        }
        if !f0.pass {
            why.push("analyticity bound violated".into());
        }
        if !w.pass {
            why.push("interaction decay bound violated".into());
        }
        Err(RunError::Certification(why.join("; ")))
    }
}

fn echo_rows(report: &EchoReport) -> String {
    let mut s = String::from("t,k,re,im,abs\n");
    for r in &report.responses {
        history_rows(&mut s, &r.history);
    }
    s
}

fn echo(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<(), RunError> {
    let profile = cfg.build_profile()?;
    let interaction = cfg.build_interaction()?;
    let e = &cfg.echo;
    let mut exp = EchoExperiment::new(e.k1, e.k2, e.tau, cfg.run_config());
    exp.amp_initial = e.amp_initial;
    exp.amp_kick = e.amp_kick;
    exp.response_modes = e.response_modes.clone();
    exp.floor = e.floor;
    let report = run_echo_experiment(&profile, &interaction, &exp)?;
    out.write("echoes.csv", &report.to_csv())?;
    let rows = echo_rows(&report);
    out.write("echo_modes.csv", &rows)?;

    out.note("convention", ECHO_CONVENTION);
    out.note("tau_effective", report.tau_effective);
    let mut markers = vec![Marker { x: report.tau_effective, label: "kick".into() }];
    for r in &report.responses {
        if let Some(p) = r.prediction {
            out.note(format!("k{}.t_predicted", r.mode), p.t_echo);
            markers.push(Marker { x: p.t_echo, label: format!("predicted k={}", r.mode) });
        }
        if let Some(m) = &r.matched {
            out.note(format!("k{}.t_detected", r.mode), m.t_detected);
            out.note(format!("k{}.rel_error", r.mode), m.rel_error);
            out.note(format!("k{}.amplitude", r.mode), format!("{:e}", m.amplitude));
            markers.push(Marker { x: m.t_detected, label: format!("echo k={}", r.mode) });
        } else {
            out.note(format!("k{}.t_detected", r.mode), "none");
        }
    }
    let spec = PlotSpec {
        title: "echo timeline".into(),
        x_column: "t".into(),
        x_label: "t".into(),
        y_label: "|rho(t, k)|".into(),
        log_y: true,
        series: report
            .responses
            .iter()
            .map(|r| Series::new("abs", &format!("|rho(k={})|", r.mode)).filtered("k", &r.mode.to_string()))
            .collect(),
        markers,
        ..Default::default()
    };
    plot(out, "echo_timeline.svg", &rows, &spec)?;

    if e.control {
        exp.amp_kick = 0.0;
        let control = run_echo_experiment(&profile, &interaction, &exp)?;
        out.write("echoes_control.csv", &control.to_csv())?;
        let peaks: usize = control.responses.iter().map(|r| r.peaks.len()).sum();
        out.note("control_peaks", peaks);
    }
    Ok(())
}

fn norms(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<(), RunError> {
    let profile = cfg.build_profile()?;
    let interaction = cfg.build_interaction()?;
    let m = &cfg.norms;
    let base = GlidingNormSpec {
        lambda: m.lambda,
        mu: m.mu,
        gamma: m.gamma,
        p: LpIndex::parse(&m.p)?,
        tau: 0.0,
        n_max: m.n_max,
        k_max: m.k_max,
        noise_floor: m.noise_floor,
    };
    let lmb = m.lmb_beta.map(|beta| LmbSpec { noise_floor: m.noise_floor, ..LmbSpec::new(m.lambda.max(f64::MIN_POSITIVE), m.mu.max(f64::MIN_POSITIVE), beta) });
    let mut records = Vec::new();
    let mut lmb_rows = String::from("t,lambda,mu,beta,value\n");
    let result = run_observed(&profile, &interaction, &cfg.perturbation_spec(), &cfg.run_config(), &mut |f| {
        let spec = GlidingNormSpec { tau: if m.gliding { f.time() } else { 0.0 }, ..base };
        let value = z_norm(f, &spec)?;
        records.push(NormRecord { t: f.time(), family: "gliding".into(), spec, value });
        if let Some(l) = &lmb {
            let v = lmb_norm(f, l)?;
            let _ = writeln!(lmb_rows, "{},{},{},{},{:.17e}", f.time(), l.lambda, l.mu, l.beta, v);
        }
        Ok(())
    });
    // whatever was measured before a failure is kept
    let csv = norms_csv(&records);
    out.write("norms.csv", &csv)?;
    if lmb.is_some() {
        out.write("lmb.csv", &lmb_rows)?;
    }
    let log = result?;
    write_log(out, &log)?;
    if let (Some(first), Some(last)) = (records.first(), records.last()) {
        out.note("norm_initial", first.value.value);
        out.note("norm_final", last.value.value);
        let worst = records.iter().map(|r| r.value.remainder / r.value.value.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
        out.note("max_relative_remainder", format!("{worst:e}"));
    }
    let spec = PlotSpec {
        title: if m.gliding { "gliding norm".into() } else { "analytic norm".into() },
        x_column: "t".into(),
        x_label: "t".into(),
        y_label: "norm".into(),
        log_y: true,
        series: vec![Series::new("value", "Z norm")],
        markers: vec![Marker { x: log.trusted_until(), label: "0.8 t_R".into() }],
        ..Default::default()
    };
    plot(out, "norms.svg", &csv, &spec)
}
