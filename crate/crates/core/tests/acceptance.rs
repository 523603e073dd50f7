//! The ten acceptance criteria, one PASS/FAIL line each.
//!
//! Exit status is nonzero when a criterion fails that is not listed in
//! `KNOWN_FAILURES`. A known failure still prints FAIL with its evidence.

use std::process::ExitCode;
use std::time::Instant;

use permon::geometry::{self, DampingRegion, Rect};
use permon::observability::{self, System};
use permon::rates::{self, Verdict};
use permon::reproduce::{self, ExampleId};
use permon::spectral::{self, ErgodicMode, Operator, WavePeriodMap};
use permon::transport::{self, TransportState};
use permon::wave;
use permon::{states, Result};
use rand::Rng;

/// Criteria that cannot pass at desk scale. Criterion 7 asks for a
/// slow-data certificate against r(n) = 1/log(n+2) up to n = 2^20, but on a
/// grid of N cells T restricted to Ran(I−P) has spectral radius about
/// 1 − 1/(2N), so no bounded data stays above r(n) once n ≫ N.
const KNOWN_FAILURES: &[usize] = &[7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn random_region(rng: &mut impl Rng) -> Result<DampingRegion> {
    let d: f64 = rng.random_range(0.05..0.95);
    let region = match rng.random_range(0..3) {
        0 => DampingRegion::diamond(d.min(0.5))?,
        1 => DampingRegion::corner_square(d)?,
        _ => {
            let rects = (0..rng.random_range(1..4))
                .map(|_| {
                    let (s0, t0) = (rng.random_range(0.0..0.7), rng.random_range(0.0..0.7));
                    Rect::new(s0, s0 + rng.random_range(0.05..0.3), t0, t0 + rng.random_range(0.05..0.3))
                })
                .collect();
            DampingRegion::rectangles(rects, 1.0)?
        }
    };
    region.with_amplitude(rng.random_range(0.2..3.0))
}

fn wave_balance(n: usize) -> Result<f64> {
    let region = DampingRegion::switched(0.6)?;
    let x = states::random_wave(n, &mut states::rng(11));
    Ok(wave::damped_run(&region, &x, 2.0)?.balance_residual())
}

fn c1_energy_balance() -> Result<Outcome> {
    let mut rng = states::rng(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let region = random_region(&mut rng)?;
        let n = 1usize << rng.random_range(6..10);
        let x = states::random_transport(n, &mut rng);
        let mono = transport::monodromy(&region, n)?;
        let periods = rng.random_range(1..20);
        worst = worst.max(transport::energy_balance(&region, &mono, &x, periods).relative_residual());
    }
    let r: Vec<f64> = [256, 512, 1024].iter().map(|&n| wave_balance(n)).collect::<Result<_>>()?;
    let order = (r[1] / r[2]).log2();
    let pass = worst <= 1e-6 && r[2] <= 1e-3 && r[2] < r[1] && r[1] < r[0] && order >= 1.5;
    outcome(
        pass,
        format!(
            "transport worst residual {worst:.2e}; wave residual N=256/512/1024: {:.2e}/{:.2e}/{:.2e}, order {order:.2}",
            r[0], r[1], r[2]
        ),
    )
}

fn c2_resonance() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for k in 6..=14 {
        let n = 1usize << k;
        let x = states::random_wave(n, &mut states::rng(k as u64));
        let y = wave::dalembert(&x, 2.0);
        worst = worst.max(y.sub(&x).norm() / x.norm());
    }
    outcome(worst <= 1e-12, format!("worst relative error over N = 64..16384: {worst:.2e}"))
}

fn c3_rate_oracle() -> Result<Outcome> {
    let region = DampingRegion::corner_square(0.5)?;
    let n = 2048;
    let mono = transport::monodromy(&region, n)?;
    let x = TransportState::from_fn(n, |_| 1.0);
    let mut worst = 0.0f64;
    for k in [1u64, 10, 100, 1000] {
        let exact = (1.0 - (-(k as f64)).exp()) / k as f64;
        let got = mono.power_norm(&x, k).powi(2);
        worst = worst.max((got - exact).abs() / exact);
    }
    let fit = rates::measure_transport(&mono, &x, 1000, 0);
    let gamma = match fit.verdict {
        Verdict::Polynomial { gamma } => gamma,
        _ => f64::NAN,
    };
    outcome(
        worst <= 2e-3 && (0.4..=0.6).contains(&gamma),
        format!("worst relative error {worst:.2e}; verdict {}", fit.verdict.label()),
    )
}

fn ritt_case(label: &str, t: &spectral::MonodromyOperator, c_tau: f64) -> Result<(bool, String)> {
    let rep = spectral::spectral_report(t, &spectral::default_theta_grid(), 1024)?;
    let circle = spectral::unit_circle_check(&rep.eigenvalues, 1e-6).is_ok();
    let alpha_ok = (0.85..=1.15).contains(&rep.alpha.alpha);
    let ritt_ok = rep.ritt_constant <= (1.0 + c_tau) * 1.05;
    let kt_max = rep.kt.iter().map(|p| p.1).fold(0.0, f64::max);
    let kt_ok = t.diagonal().is_none() || kt_max <= (-1.0f64).exp() + 1e-9;
    let pass = circle && alpha_ok && ritt_ok && kt_ok;
    Ok((
        pass,
        format!(
            "{label}: eigenvalues {}, alpha {:.3}, ritt {:.3} (bound {:.3}), max n||T^n(I-T)|| {:.4}",
            if circle { "ok" } else { "off circle" },
            rep.alpha.alpha,
            rep.ritt_constant,
            (1.0 + c_tau) * 1.05,
            kt_max
        ),
    ))
}

fn c4_ritt() -> Result<Outcome> {
    let tr = DampingRegion::corner_square(0.25)?;
    let wr = DampingRegion::switched(0.5)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [256, 1024] {
        let t = spectral::assemble(&transport::monodromy(&tr, n)?)?;
        let (p, d) = ritt_case(&format!("transport N={n}"), &t, tr.c_tau())?;
        pass &= p;
        parts.push(d);
        let t = spectral::assemble(&WavePeriodMap::new(wr.clone(), n)?)?;
        let (p, d) = ritt_case(&format!("wave N={n}"), &t, wr.c_tau())?;
        pass &= p;
        parts.push(d);
    }
    outcome(pass, parts.join("; "))
}

fn c5_projection() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for delta in [0.1, 0.25, 0.4] {
        let (lo, _) = reproduce::compare_projections(delta, 512, reproduce::PROJECTION_SAMPLES, 5)?;
        let (hi, _) = reproduce::compare_projections(delta, 1024, reproduce::PROJECTION_SAMPLES, 5)?;
        let halving = hi.discrepancy <= 0.5 * lo.discrepancy || (lo.discrepancy < 1e-9 && hi.discrepancy < 1e-9);
        let ok = hi.discrepancy <= 1e-3
            && halving
            && hi.idempotency <= 1e-8
            && hi.orthogonality <= 1e-8
            && lo.idempotency <= 1e-8
            && lo.orthogonality <= 1e-8;
        pass &= ok;
        parts.push(format!(
            "delta={delta}: discrepancy {:.1e} -> {:.1e}, idempotency {:.1e}, orthogonality {:.1e}",
            lo.discrepancy, hi.discrepancy, hi.idempotency, hi.orthogonality
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c6_sandwich() -> Result<Outcome> {
    let n = 256;
    let pairs = [
        (System::Transport, DampingRegion::diamond(0.25)?),
        (System::Transport, DampingRegion::corner_square(0.5)?),
        (System::Wave, DampingRegion::switched(0.6)?),
        (System::Wave, DampingRegion::ray_band(0.25)?),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, (system, region)) in pairs.iter().enumerate() {
        match observability::sandwich_check(*system, region, n, 20, 60 + k as u64) {
            Ok(r) => {
                pass &= r.passed();
                parts.push(format!(
                    "{} {}: lower {:.3}, upper {:.3}",
                    system.name(),
                    region.kind().name(),
                    r.worst_lower,
                    r.worst_upper
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{} {}: {e}", system.name(), region.kind().name()));
            }
        }
    }
    let mut gdiff = 0.0f64;
    for (system, region) in &pairs[..2] {
        let q = observability::gramian(*system, region, n, 64)?;
        let s = observability::transport_gramian_shortcut(region, n)?;
        gdiff = gdiff.max(q.matrix.max_abs_diff(&s.matrix));
    }
    pass &= gdiff <= 1e-6;
    parts.push(format!("transport Gramian vs diag(a) {gdiff:.1e}"));
    outcome(pass, parts.join("; "))
}

fn kappa2_z(region: &DampingRegion, n: usize) -> Result<(f64, spectral::MonodromyOperator, Operator)> {
    let t = spectral::assemble(&WavePeriodMap::new(region.clone(), n)?)?;
    let p = spectral::ergodic_projection(&t, ErgodicMode::Power)?.p;
    let g = observability::gramian(System::Wave, region, n, 4 * n)?;
    let k = observability::observability_constants(&g, Some(&p))?;
    Ok((k.kappa2_z, t, p))
}

fn c7_gcc() -> Result<Outcome> {
    let window = (0.0, 2.0);
    let good = DampingRegion::switched(0.6)?;
    let gcc = observability::gcc_check(System::Wave, &good, window, observability::DEFAULT_RAYS)?;
    let mut kappas = Vec::new();
    let mut fit = None;
    for n in [256, 512, 1024] {
        let (k, t, p) = kappa2_z(&good, n)?;
        kappas.push(k);
        if n == 256 {
            let x = states::random_wave(n, &mut states::rng(52));
            fit = Some(rates::measure_operator(&t, &p, &x.to_ring(), reproduce::WAVE_HORIZON, 0));
        }
    }
    let fit = fit.expect("fit at N = 256");
    let tail = fit.tail_fit;
    let (kmin, kmax) = kappas.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &k| (a.min(k), b.max(k)));
    let kappa_ok = kmin > 0.0 && kmax / kmin - 1.0 <= 0.05;
    let rate_ok = matches!(fit.verdict, Verdict::Exponential { .. })
        && tail.map(|f| f.beta > 0.0 && f.residual < 0.01).unwrap_or(false);
    let first = gcc.holds && kappa_ok && rate_ok;

    let bad = DampingRegion::switched(0.4)?;
    let gcc_bad = observability::gcc_check(System::Wave, &bad, window, observability::DEFAULT_RAYS)?;
    let n = 256;
    let t = spectral::assemble(&WavePeriodMap::new(bad.clone(), n)?)?;
    let p = spectral::ergodic_projection(&t, ErgodicMode::Power)?.p;
    let r = |x: f64| 1.0 / (x + 2.0).ln();
    let sd = rates::make_slow_data_operator(&t, &p, &r, reproduce::SLOW_LEVELS)?;
    let miss = sd.checkpoints.iter().find(|c| c.achieved < c.target);
    let second = !gcc_bad.holds && gcc_bad.witness.is_some() && sd.passed;
    let witness = gcc_bad
        .witness
        .map(|w| format!("s0={:.4} dir={:+}", w.s0, w.direction))
        .unwrap_or_else(|| "none".into());
    outcome(
        first && second,
        format!(
            "delta=0.6: gcc {}, kappa2_Z {:.6}/{:.6}/{:.6}, beta {:.4}, tail residual {:.4}; delta=0.4: gcc {}, witness {witness}, slow data {}",
            if gcc.holds { "holds" } else { "fails" },
            kappas[0],
            kappas[1],
            kappas[2],
            tail.map(|f| f.beta).unwrap_or(f64::NAN),
            tail.map(|f| f.residual).unwrap_or(f64::NAN),
            if gcc_bad.holds { "holds" } else { "fails" },
            match miss {
                None => "certified".to_string(),
                Some(c) => format!(
                    "misses at n={} (target {:.2e}, best possible {:.2e})",
                    c.n, c.target, c.best_possible
                ),
            }
        ),
    )
}

fn c8_thresholds() -> Result<Outcome> {
    let mut pass = true;
    let mut seen = Vec::new();
    for d in [0.1, 0.3, 0.5, 0.75, 1.0] {
        let ex = reproduce::reproduce_example(ExampleId::E42, Some(d), None, None)?;
        let stable = ex.stable.unwrap_or(false);
        pass &= stable == (d >= 0.5);
        seen.push(format!("4.2 delta={d} {}", if stable { "stable" } else { "not stable" }));
    }
    for d in [0.4, 0.5, 0.6, 1.0] {
        let ex = reproduce::reproduce_example(ExampleId::E52, Some(d), Some(128), None)?;
        let stable = ex.stable.unwrap_or(false);
        pass &= stable == (d >= 0.5);
        seen.push(format!("5.2 delta={d} {}", if stable { "stable" } else { "not stable" }));
    }
    outcome(pass, seen.join(", "))
}

fn c9_fractional() -> Result<Outcome> {
    let n = 256;
    let regions = [
        DampingRegion::diamond(0.25)?,
        DampingRegion::corner_square(0.25)?,
        DampingRegion::corner_square(0.5)?,
    ];
    let mut worst = 0.0f64;
    for (k, region) in regions.iter().enumerate() {
        let mono = transport::monodromy(region, n)?;
        let t = spectral::assemble(&mono)?;
        let ep = spectral::ergodic_projection(&t, ErgodicMode::Power)?;
        let x = states::random_transport(n, &mut states::rng(90 + k as u64)).values;
        let m = t.diagonal().expect("transport monodromy is diagonal");
        for gamma in [0.5, 1.0, 1.7] {
            let fp = spectral::fractional_power_apply(&t, gamma, &x, Some(&ep.p), ep.power_bound)?;
            for i in 0..n {
                let exact = (1.0 - m[i]).max(0.0).powf(gamma) * x[i];
                worst = worst.max((fp.value[i] - exact).abs());
            }
        }
    }
    let mut sound = Vec::new();
    let mut sound_ok = true;
    let region = DampingRegion::corner_square(0.5)?;
    let n = 1024;
    for gamma in [0.5, 1.0, 2.0] {
        // the grid data is this profile sampled at cell centers
        let _ = rates::make_polynomial_data(&region, n, gamma, 0.0)?;
        let prof = rates::polynomial_profile(&region, gamma, 0.0);
        let s = rates::soundness_check(&region, &prof, gamma, n, reproduce::weighted_horizon(n))?;
        sound_ok &= s.holds;
        sound.push(format!("gamma={gamma}: {:?}, worst ratio {:.4}", s.membership, s.worst_ratio));
    }
    outcome(
        worst <= 1e-8 && sound_ok,
        format!("worst entry error {worst:.1e}; soundness {}", sound.join(", ")),
    )
}

fn c10_diamond() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [0.1, 0.25, 0.5] {
        let region = DampingRegion::diamond(d)?;
        let err = (geometry::line_average_integral(&region)? - region.area()).abs();
        pass &= err <= 1e-6;
        parts.push(format!("delta={d}: |int a - area| {err:.1e}"));
    }
    let ex = reproduce::reproduce_example(ExampleId::E41, None, None, None)?;
    let statement = ex.report.get("example 4.1", "closed_form_statement");
    pass &= statement.is_some() && ex.claim("mass conservation").map(|c| c.pass).unwrap_or(false);
    parts.push(format!("statement: {}", statement.unwrap_or("missing")));
    outcome(pass, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("energy balance", c1_energy_balance),
        ("undamped resonance", c2_resonance),
        ("transport rate oracle", c3_rate_oracle),
        ("Ritt structure", c4_ritt),
        ("projection agreement", c5_projection),
        ("observability sandwich", c6_sandwich),
        ("GCC and exponential rate", c7_gcc),
        ("stability thresholds", c8_thresholds),
        ("fractional powers", c9_fractional),
        ("diamond cross-validation", c10_diamond),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        let start = Instant::now();
        let o = f().unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!("error: {e}"),
        });
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.contains(&id);
        println!(
            "{} {id:>2} {name} [{secs:.1}s]{}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            if !o.pass && known { " (known)" } else { "" },
            o.detail
        );
        if o.pass {
            passed += 1;
        } else if !known {
            unexpected.push(id);
        }
    }
    println!("{passed}/10 criteria pass");
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
