//! Executes a [`RunConfig`]: builds the initial state, runs the requested
//! tasks in dependency order and writes report.txt plus one CSV per table.

use std::f64::consts::PI;
use std::path::Path;

use crate::config::{InitialData, RunConfig, Task};
use crate::error::{Error, Result};
use crate::geometry;
use crate::observability::{self, System};
use crate::output::{kv, Artifacts, Csv, Report};
use crate::rates::{self, RateFit};
use crate::spectral::{self, ErgodicMode, MonodromyOperator, Operator, SpectralReport, WavePeriodMap};
use crate::states::{self, State};
use crate::transport::{self, TransportMonodromy, TransportState};
use crate::wave::{self, WaveState};

/// Largest power in the KT profile of a run.
pub const KT_MAX: u64 = 1024;
/// Random states in the sandwich check of a run.
pub const SANDWICH_SAMPLES: usize = 20;

pub struct RunOutcome {
    pub report: Report,
    pub artifacts: Artifacts,
}

/// Lazily built operators shared between tasks.
#[derive(Default)]
struct Workspace {
    transport: Option<TransportMonodromy>,
    t: Option<MonodromyOperator>,
    p: Option<Operator>,
    spectral: Option<SpectralReport>,
}

impl Workspace {
    fn transport(&mut self, cfg: &RunConfig) -> Result<&TransportMonodromy> {
        if self.transport.is_none() {
            self.transport = Some(transport::monodromy(&cfg.region, cfg.n)?);
        }
        Ok(self.transport.as_ref().unwrap())
    }

    fn monodromy(&mut self, cfg: &RunConfig) -> Result<&MonodromyOperator> {
        if self.t.is_none() {
            let t = match cfg.system {
                System::Transport => spectral::assemble(self.transport(cfg)?)?,
                System::Wave => spectral::assemble(&WavePeriodMap::new(cfg.region.clone(), cfg.n)?)?,
            };
            self.t = Some(t);
        }
        Ok(self.t.as_ref().unwrap())
    }

    fn projection(&mut self, cfg: &RunConfig) -> Result<&Operator> {
        if self.p.is_none() {
            let p = match &self.spectral {
                Some(s) => s.projection.p.clone(),
                None => spectral::ergodic_projection(self.monodromy(cfg)?, ErgodicMode::Power)?.p,
            };
            self.p = Some(p);
        }
        Ok(self.p.as_ref().unwrap())
    }
}

/// Builds the configured initial state on the grid.
pub fn initial_state(cfg: &RunConfig) -> Result<State> {
    let n = cfg.n;
    let mut rng = states::rng(cfg.seed);
    Ok(match (&cfg.initial, cfg.system) {
        (InitialData::Builtin(b), sys) => match b.as_str() {
            "random" => sys.random_state(n, &mut rng),
            "ones" => State::Transport(TransportState::from_fn(n, |_| 1.0)),
            "mode1" => State::Wave(WaveState::from_fns(n, |s| (PI * s).sin() / PI, |s| (PI * s).sin())),
            other => return Err(Error::Config(format!("unknown builtin '{other}'"))),
        },
        (InitialData::File(paths), System::Transport) => {
            let rows = crate::output::read_table(&paths[0])?;
            State::Transport(TransportState::new(column(&rows, 1, n, &paths[0])?))
        }
        (InitialData::File(paths), System::Wave) => {
            let u = column(&crate::output::read_table(&paths[0])?, 1, n + 1, &paths[0])?;
            let v = column(&crate::output::read_table(&paths[1])?, 1, n, &paths[1])?;
            State::Wave(WaveState::new(u, v).map_err(|e| Error::Config(e.to_string()))?)
        }
        (c @ InitialData::Constructor { name, .. }, System::Transport) => match name.as_str() {
            "polynomial" => State::Transport(rates::make_polynomial_data(
                &cfg.region,
                n,
                c.param("gamma", 1.0),
                c.param("margin", 0.0),
            )?),
            "superpoly" => {
                let mono = transport::monodromy(&cfg.region, n)?;
                let seed = states::random_transport(n, &mut rng);
                State::Transport(rates::make_superpoly_transport(&mono, &seed, c.param("eps", 0.05)))
            }
            "slow" => {
                let levels = c.param("levels", 12.0).max(1.0) as usize;
                let r = |x: f64| 1.0 / (x + 2.0).ln();
                let sd = rates::make_slow_data(&cfg.region, n, &r, levels)?;
                State::Transport(TransportState::new(sd.coords))
            }
            other => return Err(Error::Config(format!("unknown constructor '{other}'"))),
        },
        (InitialData::Constructor { name, .. }, System::Wave) => {
            return Err(Error::Config(format!("constructor '{name}' is transport only")))
        }
    })
}

fn column(rows: &[Vec<f64>], col: usize, len: usize, path: &Path) -> Result<Vec<f64>> {
    if rows.len() != len {
        return Err(Error::Config(format!(
            "{}: expected {len} rows, found {}",
            path.display(),
            rows.len()
        )));
    }
    rows.iter()
        .map(|r| {
            r.get(col)
                .copied()
                .ok_or_else(|| Error::Config(format!("{}: missing column {}", path.display(), col + 1)))
        })
        .collect()
}

/// Runs every task of `cfg`, writing into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let mut art = Artifacts::create(out)?;
    let mut report = Report::new(format!(
        "permon run: system={} region={} N={}",
        cfg.system.name(),
        cfg.region.describe(),
        cfg.n
    ));
    let tasks = cfg.effective_tasks();
    let sec = report.section("config");
    kv(sec, "system", cfg.system.name());
    kv(sec, "region", cfg.region.describe());
    kv(sec, "N", cfg.n);
    kv(sec, "N_t", cfg.n_t);
    kv(sec, "horizon", cfg.horizon);
    kv(sec, "stride", cfg.stride);
    kv(sec, "initial", cfg.initial.describe());
    kv(sec, "seed", cfg.seed);
    let names: Vec<&str> = tasks.iter().map(Task::name).collect();
    kv(sec, "tasks", names.join(","));

    let x0 = initial_state(cfg)?;
    let mut ws = Workspace::default();
    // monodromy first: simulate, spectrum and rates read from it
    if tasks.contains(&Task::Monodromy) {
        task_monodromy(cfg, &mut ws, &mut report, &mut art)?;
    }
    if tasks.contains(&Task::Spectrum) {
        task_spectrum(cfg, &mut ws, &mut report, &mut art)?;
    }
    if tasks.contains(&Task::Simulate) {
        task_simulate(cfg, &x0, &mut ws, &mut report, &mut art)?;
    }
    if tasks.contains(&Task::Observability) {
        task_observability(cfg, &mut ws, &mut report, &mut art)?;
    }
    if tasks.contains(&Task::Rates) {
        task_rates(cfg, &x0, &mut ws, &mut report, &mut art)?;
    }
    if tasks.contains(&Task::Gcc) {
        task_gcc(cfg, &mut report, &mut art)?;
    }
    art.text("report.txt", &report.render())?;
    Ok(RunOutcome { report, artifacts: art })
}

fn task_monodromy(cfg: &RunConfig, ws: &mut Workspace, report: &mut Report, art: &mut Artifacts) -> Result<()> {
    let t = ws.monodromy(cfg)?;
    let (dim, norm, inner, period) = (t.dim(), t.norm(), t.inner.name(), t.period);
    let sec = report.section("monodromy");
    kv(sec, "dim", dim);
    kv(sec, "inner_product", inner);
    kv(sec, "period", period);
    kv(sec, "norm", format!("{norm:.12e}"));
    kv(sec, "representation", if t.diagonal().is_some() { "diagonal" } else { "dense" });
    if cfg.system == System::Transport {
        let mono = ws.transport(cfg)?;
        let mut csv = Csv::new(&["s", "a", "multiplier"]);
        for i in 0..mono.n() {
            csv.push(vec![mono.profile.center(i).into(), mono.profile.values[i].into(), mono.m[i].into()]);
        }
        let null = mono.profile.null_set().len();
        art.csv("monodromy.csv", &csv)?;
        kv(&mut report.sections.last_mut().unwrap().1, "null_cells", null);
    }
    Ok(())
}

fn task_spectrum(cfg: &RunConfig, ws: &mut Workspace, report: &mut Report, art: &mut Artifacts) -> Result<()> {
    let s = spectral::spectral_report(ws.monodromy(cfg)?, &spectral::default_theta_grid(), KT_MAX)?;
    write_spectral(&s, report, art)?;
    ws.spectral = Some(s);
    Ok(())
}

/// SpectralReport as structured text (one section per field) plus CSVs.
pub fn write_spectral(s: &SpectralReport, report: &mut Report, art: &mut Artifacts) -> Result<()> {
    let mut text = Report::new("spectral report");
    kv(text.section("dim"), "value", s.dim);
    kv(text.section("inner"), "value", s.inner.name());
    let ev = text.section("eigenvalues");
    let max_mod = s.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    kv(ev, "count", s.eigenvalues.len());
    kv(ev, "max_modulus", format!("{max_mod:.12e}"));
    let unit = spectral::unit_circle_check(&s.eigenvalues, 1e-6);
    kv(
        ev,
        "unit_circle_check",
        match unit {
            Ok(()) => "PASS".to_string(),
            Err(l) => format!("FAIL at {:.6e}{:+.6e}i", l.re, l.im),
        },
    );
    let pr = text.section("profile");
    kv(pr, "samples", s.profile.samples.len());
    kv(pr, "skipped", s.profile.skipped.len());
    let al = text.section("alpha");
    kv(al, "alpha", format!("{:.6}", s.alpha.alpha));
    kv(al, "c", format!("{:.6e}", s.alpha.c));
    kv(al, "residual", format!("{:.3e}", s.alpha.residual));
    kv(al, "window", format!("({:.3e}, {:.3e})", s.alpha.window.0, s.alpha.window.1));
    kv(al, "points", s.alpha.points);
    kv(al, "plateau", s.alpha.plateau);
    kv(al, "sentinel", s.alpha.is_sentinel());
    kv(text.section("ritt_constant"), "value", format!("{:.6}", s.ritt_constant));
    let pj = text.section("projection");
    kv(pj, "mode", format!("{:?}", s.projection.mode).to_lowercase());
    kv(pj, "n_reached", s.projection.n_reached);
    kv(pj, "converged", s.projection.converged);
    kv(pj, "increment", format!("{:.3e}", s.projection.increment));
    kv(pj, "idempotency", format!("{:.3e}", s.projection.idempotency));
    kv(pj, "commutation", format!("{:.3e}", s.projection.commutation));
    kv(pj, "power_bound", format!("{:.6}", s.projection.power_bound));
    let fx = text.section("fix");
    kv(fx, "dim", s.fix_dim);
    kv(fx, "residual", format!("{:.3e}", s.fix_residual));
    let rr = text.section("restricted");
    kv(rr, "radius", format!("{:.9}", s.restricted.radius));
    kv(rr, "slow_convergence", s.restricted.slow_convergence);
    kv(rr, "near_unit", s.restricted.near_unit);
    let kmax = s.kt.iter().map(|k| k.1).fold(0.0, f64::max);
    kv(text.section("kt"), "max", format!("{kmax:.9}"));
    art.text("spectrum.txt", &text.render())?;

    let mut bp = Csv::new(&["theta", "resolvent_norm"]);
    for &(th, r) in &s.profile.samples {
        bp.push(vec![th.into(), r.into()]);
    }
    art.csv("boundary_profile.csv", &bp)?;
    let mut kt = Csv::new(&["n", "value"]);
    for &(n, v) in &s.kt {
        kt.push(vec![n.into(), v.into()]);
    }
    art.csv("kt_profile.csv", &kt)?;
    let mut eig = Csv::new(&["re", "im", "modulus"]);
    for l in &s.eigenvalues {
        eig.push(vec![l.re.into(), l.im.into(), l.norm().into()]);
    }
    art.csv("eigenvalues.csv", &eig)?;

    let sec = report.section("spectrum");
    kv(sec, "dim", s.dim);
    kv(sec, "max_modulus", format!("{max_mod:.12e}"));
    kv(sec, "unit_circle_check", if unit.is_ok() { "PASS" } else { "FAIL" });
    kv(sec, "alpha", format!("{:.6}", s.alpha.alpha));
    kv(sec, "ritt_constant", format!("{:.6}", s.ritt_constant));
    kv(sec, "fix_dim", s.fix_dim);
    kv(sec, "restricted_radius", format!("{:.9}", s.restricted.radius));
    kv(sec, "kt_max", format!("{kmax:.9}"));
    Ok(())
}

fn task_simulate(
    cfg: &RunConfig,
    x0: &State,
    ws: &mut Workspace,
    report: &mut Report,
    art: &mut Artifacts,
) -> Result<()> {
    let pts = rates::sample_points(cfg.horizon, cfg.stride);
    match x0 {
        State::Transport(x) => {
            let mono = ws.transport(cfg)?;
            let y = x.sub(&mono.fixed_projection(x));
            let mut csv = Csv::new(&["step", "norm", "dist_to_periodic"]);
            for &n in &pts {
                csv.push(vec![n.into(), mono.power_norm(x, n).into(), mono.power_norm(&y, n).into()]);
            }
            art.csv("trajectory.csv", &csv)?;
            let last = mono.apply_power(x, cfg.horizon);
            let mut snap = Csv::new(&["s", "x"]);
            for (i, v) in last.values.iter().enumerate() {
                snap.push(vec![((i as f64 + 0.5) / cfg.n as f64).into(), (*v).into()]);
            }
            art.csv("snapshot_x.csv", &snap)?;
            let bal = transport::energy_balance(&cfg.region, mono, x, cfg.horizon);
            let sec = report.section("simulate");
            kv(sec, "reference", "Px (exact projection onto Fix T)");
            kv(sec, "initial_norm", format!("{:.12e}", x.norm()));
            kv(sec, "final_norm", format!("{:.12e}", mono.power_norm(x, cfg.horizon)));
            kv(sec, "final_distance", format!("{:.12e}", mono.power_norm(&y, cfg.horizon)));
            kv(sec, "energy_lost", format!("{:.12e}", bal.lost));
            kv(sec, "energy_dissipated", format!("{:.12e}", bal.dissipated));
            kv(sec, "balance_residual", format!("{:.3e}", bal.relative_residual()));
        }
        State::Wave(x) => {
            let reference = if ws.t.is_some() {
                let p = ws.projection(cfg)?;
                Some(WaveState::from_ring(&p.apply(&x.to_ring())).0)
            } else {
                None
            };
            let mut z = x.clone();
            let mut stored = Vec::with_capacity(pts.len());
            let (mut lost, mut dissipated) = (0.0, 0.0);
            let mut k = 0u64;
            for &n in &pts {
                while k < n {
                    let r = wave::damped_run(&cfg.region, &z, 2.0)?;
                    lost += r.energy_lost();
                    dissipated += r.damping_integral;
                    z = r.state;
                    k += 1;
                }
                stored.push((n, z.clone()));
            }
            let limit = reference.clone().unwrap_or_else(|| z.clone());
            let mut csv = Csv::new(&["t", "energy", "dist_to_periodic"]);
            for (n, s) in &stored {
                csv.push(vec![(2.0 * *n as f64).into(), s.energy().into(), s.sub(&limit).norm().into()]);
            }
            art.csv("trajectory.csv", &csv)?;
            let h = 1.0 / cfg.n as f64;
            let mut su = Csv::new(&["s", "u"]);
            for (j, u) in z.u.iter().enumerate() {
                su.push(vec![(j as f64 * h).into(), (*u).into()]);
            }
            art.csv("snapshot_u.csv", &su)?;
            let mut sv = Csv::new(&["s", "v"]);
            for (i, v) in z.v.iter().enumerate() {
                sv.push(vec![((i as f64 + 0.5) * h).into(), (*v).into()]);
            }
            art.csv("snapshot_v.csv", &sv)?;
            let scale = lost.abs().max(dissipated.abs());
            let resid = if scale == 0.0 { 0.0 } else { (lost - dissipated).abs() / scale };
            let sec = report.section("simulate");
            kv(
                sec,
                "reference",
                if reference.is_some() {
                    "Px (power-mode ergodic projection)"
                } else {
                    "state at the horizon (no monodromy requested)"
                },
            );
            kv(sec, "initial_energy", format!("{:.12e}", x.energy()));
            kv(sec, "final_energy", format!("{:.12e}", z.energy()));
            kv(sec, "final_distance", format!("{:.12e}", z.sub(&limit).norm()));
            kv(sec, "energy_lost", format!("{lost:.12e}"));
            kv(sec, "energy_dissipated", format!("{dissipated:.12e}"));
            kv(sec, "balance_residual", format!("{resid:.3e}"));
        }
    }
    Ok(())
}

fn task_observability(cfg: &RunConfig, ws: &mut Workspace, report: &mut Report, art: &mut Artifacts) -> Result<()> {
    let g = observability::gramian(cfg.system, &cfg.region, cfg.n, cfg.n_t)?;
    let p = ws.projection(cfg)?;
    let k = observability::observability_constants(&g, Some(p))?;
    let sw = observability::sandwich_check(cfg.system, &cfg.region, cfg.n, SANDWICH_SAMPLES, cfg.seed)?;
    let mut csv = Csv::new(&["sample", "undamped", "damped", "norm_sq", "lower_ratio", "upper_ratio"]);
    for (i, s) in sw.samples.iter().enumerate() {
        csv.push(vec![
            i.into(),
            s.undamped.into(),
            s.damped.into(),
            s.norm_sq.into(),
            s.lower_ratio(sw.c_tau).into(),
            s.upper_ratio().into(),
        ]);
    }
    art.csv("sandwich.csv", &csv)?;
    let sec = report.section("observability");
    kv(sec, "c_tau", format!("{:.12e}", sw.c_tau));
    kv(sec, "kappa2_full", format!("{:.9e}", k.kappa2_full));
    kv(sec, "kappa2_z", format!("{:.9e}", k.kappa2_z));
    kv(sec, "sandwich_worst_lower_ratio", format!("{:.6}", sw.worst_lower));
    kv(sec, "sandwich_worst_upper_ratio", format!("{:.6}", sw.worst_upper));
    kv(sec, "sandwich", if sw.passed() { "PASS" } else { "FAIL" });
    if cfg.system == System::Transport {
        let short = observability::transport_gramian_shortcut(&cfg.region, cfg.n)?;
        kv(sec, "gramian_vs_diag_a", format!("{:.3e}", g.matrix.max_abs_diff(&short.matrix)));
    }
    Ok(())
}

/// One-line fit summary: system, region, N, verdict, beta, gamma, residuals.
pub fn fit_summary(system: System, region: &geometry::DampingRegion, n: usize, fit: &RateFit) -> String {
    let f = |x: Option<f64>| x.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "nan".into());
    format!(
        "system={} region={} N={} verdict={} beta={} gamma={} exp_residual={} tail_residual={} poly_residual={}",
        system.name(),
        region.describe(),
        n,
        fit.verdict.label(),
        f(fit.tail_fit.or(fit.exp_fit).map(|e| e.beta)),
        f(fit.poly_fit.map(|p| p.gamma)),
        f(fit.exp_fit.map(|e| e.residual)),
        f(fit.tail_fit.map(|e| e.residual)),
        f(fit.poly_fit.map(|p| p.residual)),
    )
}

pub fn rates_csv(fit: &RateFit, period: f64) -> Csv {
    let mut csv = Csv::new(&["n", "t", "distance"]);
    for &(t, d) in &fit.series {
        csv.push(vec![((t / period).round() as u64).into(), t.into(), d.into()]);
    }
    csv
}

fn task_rates(cfg: &RunConfig, x0: &State, ws: &mut Workspace, report: &mut Report, art: &mut Artifacts) -> Result<()> {
    let fit = match x0 {
        State::Transport(x) => rates::measure_transport(ws.transport(cfg)?, x, cfg.horizon, cfg.stride),
        State::Wave(x) => {
            let p = ws.projection(cfg)?.clone();
            rates::measure_operator(ws.monodromy(cfg)?, &p, &x.to_ring(), cfg.horizon, cfg.stride)
        }
    };
    art.csv("rates.csv", &rates_csv(&fit, cfg.system.period()))?;
    let line = fit_summary(cfg.system, &cfg.region, cfg.n, &fit);
    art.text("rates_summary.txt", &format!("{line}\n"))?;
    let sec = report.section("rates");
    kv(sec, "summary", line);
    kv(sec, "window", format!("({:.6e}, {:.6e})", fit.window.0, fit.window.1));
    if let (InitialData::Constructor { name, .. }, System::Transport) = (&cfg.initial, cfg.system) {
        if name == "polynomial" {
            let gamma = cfg.initial.param("gamma", 1.0);
            let margin = cfg.initial.param("margin", 0.0);
            let prof = rates::polynomial_profile(&cfg.region, gamma, margin);
            let s = rates::soundness_check(&cfg.region, &prof, gamma, cfg.n, cfg.horizon)?;
            kv(sec, "soundness_membership", format!("{:?}", s.membership).to_lowercase());
            kv(sec, "soundness_worst_ratio", format!("{:.6}", s.worst_ratio));
            kv(sec, "soundness", if s.holds { "PASS" } else { "FAIL" });
        }
    }
    Ok(())
}

fn task_gcc(cfg: &RunConfig, report: &mut Report, art: &mut Artifacts) -> Result<()> {
    let window = (0.0, cfg.system.period());
    let v = observability::gcc_check(cfg.system, &cfg.region, window, observability::DEFAULT_RAYS)?;
    let sec = report.section("gcc");
    kv(sec, "window", format!("({}, {})", window.0, window.1));
    kv(sec, "rays", v.rays);
    kv(sec, "holds", v.holds);
    kv(sec, "min_dwell", format!("{:.9e}", v.min_dwell));
    if cfg.system == System::Transport {
        let (holds, _) = observability::transport_gcc_from_profile(&cfg.region, cfg.n)?;
        kv(sec, "line_average_criterion", holds);
    }
    if let Some(w) = v.witness {
        kv(sec, "witness", format!("s0={:.12} direction={:+}", w.s0, w.direction));
        kv(sec, "witness_verified", v.witness_verified);
        let mut csv = Csv::new(&["s0", "direction", "dwell"]);
        csv.push(vec![w.s0.into(), w.direction.into(), 0.0.into()]);
        art.csv("gcc_witness.csv", &csv)?;
    }
    Ok(())
}
