use std::path::PathBuf;

use gutz_core::eigen::{exact_ground_state, ParticleSector};
use gutz_core::gutzwiller::{full_sum_expectations, gutzwiller_expectations, two_site_curves, MAX_ENUMERATION_SITES};
use gutz_core::hadamard::{assemble, exact_primitives, run_primitives, shot_curve, ShotPoint, ShotSettings};
use gutz_core::hst::{verify_catalog, DEFAULT_J_VALUES};
use gutz_core::lattice::hubbard_terms;
use gutz_core::lcu::success_probability_curve;
use gutz_core::mc::{phase_problem_check, run_mc_multi_u, BackendKind, McParams, McPoint, MAX_STATEVECTOR_SITES};
use gutz_core::slater::{half_filled_trial, slater_to_statevector};
use gutz_core::{Complex64, Lattice};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Method, RunConfig};
use crate::error::CliError;
use crate::output::{write, Cell, Table};

pub const MAX_MC_SITES: usize = 12;
pub const MAX_GROUND_STATE_SITES: usize = 8;
pub const MAX_LCU_SITES: usize = 14;
pub const HST_TOLERANCE: f64 = 1e-12;

fn out_path(cfg: &RunConfig, default: &str) -> PathBuf {
    PathBuf::from(cfg.out.clone().unwrap_or_else(|| default.to_string()))
}

/// `path` with `.csv` replaced by `.<tag>.csv`.
fn companion(path: &std::path::Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}.csv"))
}

fn too_large(what: &str, lat: &Lattice, limit: usize) -> CliError {
    CliError::Config(format!("{what} is limited to {limit} sites, {lat} has {}", lat.n_sites()))
}

fn mc_params(cfg: &RunConfig) -> Result<McParams, CliError> {
    let mut p = McParams::new(cfg.nmc, cfg.seed);
    p.n_bins = cfg.bins;
    p.n_burnin = cfg.burnin;
    p.n_chains = cfg.chains;
    p.backend = cfg.backend;
    p.validate()?;
    Ok(p)
}

fn check_mc_size(cfg: &RunConfig, lat: &Lattice) -> Result<(), CliError> {
    if lat.n_sites() > MAX_MC_SITES {
        return Err(too_large("Monte Carlo", lat, MAX_MC_SITES));
    }
    if cfg.backend == BackendKind::Statevector && lat.n_sites() > MAX_STATEVECTOR_SITES {
        return Err(too_large("the statevector backend", lat, MAX_STATEVECTOR_SITES));
    }
    Ok(())
}

fn half_filled(lat: &Lattice) -> ParticleSector {
    ParticleSector::PerSpin { n_up: lat.n_sites() / 2, n_down: lat.n_sites() / 2 }
}

fn mc_grid(points: &[(f64, Vec<f64>)], lat: &Lattice, j: f64, p: &McParams) -> Result<Vec<McPoint>, CliError> {
    let rows: Vec<Vec<McPoint>> = points
        .par_iter()
        .map(|(g, us)| run_mc_multi_u(lat, j, us, *g, p))
        .collect::<Result<_, _>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn mc_cells(p: &McPoint, cfg: &RunConfig) -> Vec<Cell> {
    vec![
        p.g.into(),
        p.u.into(),
        p.energy.mean.into(),
        p.energy.stderr.into(),
        p.kinetic.mean.into(),
        p.kinetic.stderr.into(),
        p.interaction.mean.into(),
        p.interaction.stderr.into(),
        p.energy.acceptance_rate.into(),
        cfg.nmc.into(),
        cfg.seed.into(),
    ]
}

const MC_COLUMNS: [&str; 11] = ["g", "U", "E_mean", "E_err", "K_mean", "K_err", "UD_mean", "UD_err", "acceptance", "n_mc", "seed"];

pub fn mc(cfg: &RunConfig) -> Result<(), CliError> {
    let lat = cfg.lattice_or("chain:4");
    let j = cfg.hopping()?;
    check_mc_size(cfg, &lat)?;
    let p = mc_params(cfg)?;
    let pts = mc_grid(&cfg.points(), &lat, j, &p)?;
    let mut t = Table::new(&MC_COLUMNS);
    let mut flagged = 0;
    for pt in &pts {
        t.push(mc_cells(pt, cfg));
        flagged += pt.flagged;
    }
    let path = out_path(cfg, "mc.csv");
    write(&path, &t, "mc", cfg, json!({ "lattice": lat.to_string(), "J": j, "flagged_weights": flagged }))
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let lat = cfg.lattice_or("chain:4");
    let j = cfg.hopping()?;
    let n = lat.n_sites();
    let methods = match &cfg.methods {
        Some(m) => m.clone(),
        None => [Method::Mc, Method::FullSum, Method::ExactGutzwiller]
            .into_iter()
            .filter(|m| match m {
                Method::Mc => true,
                Method::FullSum => n <= MAX_ENUMERATION_SITES,
                Method::ExactGutzwiller => n <= MAX_GROUND_STATE_SITES,
            })
            .collect(),
    };
    for m in &methods {
        match m {
            Method::Mc => check_mc_size(cfg, &lat)?,
            Method::FullSum if n > MAX_ENUMERATION_SITES => return Err(too_large("fullsum", &lat, MAX_ENUMERATION_SITES)),
            Method::ExactGutzwiller if n > MAX_GROUND_STATE_SITES => {
                return Err(too_large("exact-gutzwiller", &lat, MAX_GROUND_STATE_SITES))
            }
            _ => {}
        }
    }
    let p = mc_params(cfg)?;
    let points = cfg.points();

    let e0: Vec<(f64, Option<f64>)> = cfg
        .us
        .iter()
        .map(|&u| {
            if n > MAX_GROUND_STATE_SITES {
                return Ok((u, None));
            }
            let (k, d) = hubbard_terms(&lat, j, u)?;
            let h = k.add(&d.scaled(Complex64::new(u, 0.0)))?;
            Ok((u, Some(exact_ground_state(&h, Some(half_filled(&lat)))?.energy)))
        })
        .collect::<Result<_, CliError>>()?;
    let e0_of = |u: f64| e0.iter().find(|(x, _)| *x == u).and_then(|(_, e)| *e);

    let mut columns = vec!["method"];
    columns.extend(MC_COLUMNS);
    columns.push("E0");
    let mut t = Table::new(&columns);

    let trial = half_filled_trial(&lat)?;
    let (k, d) = hubbard_terms(&lat, j, 0.0)?;
    for m in &methods {
        match m {
            Method::Mc => {
                for pt in mc_grid(&points, &lat, j, &p)? {
                    let mut row = vec![Cell::from(m.label())];
                    row.extend(mc_cells(&pt, cfg));
                    row.push(e0_of(pt.u).into());
                    t.push(row);
                }
            }
            Method::FullSum | Method::ExactGutzwiller => {
                let psi = slater_to_statevector(&trial, &trial, &lat.layout())?;
                let kd: Vec<(f64, Vec<f64>, Vec<f64>)> = points
                    .par_iter()
                    .map(|(g, us)| {
                        let v = if *m == Method::FullSum {
                            full_sum_expectations(&[&k, &d], *g, &psi, &lat.layout())?
                        } else {
                            gutzwiller_expectations(&psi, *g, &d, &[&k, &d])?
                        };
                        Ok((*g, us.clone(), v))
                    })
                    .collect::<Result<_, CliError>>()?;
                for (g, us, v) in kd {
                    for u in us {
                        let row = vec![
                            m.label().into(),
                            g.into(),
                            u.into(),
                            (v[0] + u * v[1]).into(),
                            Cell::Empty,
                            v[0].into(),
                            Cell::Empty,
                            (u * v[1]).into(),
                            Cell::Empty,
                            Cell::Empty,
                            Cell::Empty,
                            Cell::Empty,
                            e0_of(u).into(),
                        ];
                        t.push(row);
                    }
                }
            }
        }
    }
    let path = out_path(cfg, "sweep.csv");
    let labels: Vec<_> = methods.iter().map(|m| m.label()).collect();
    write(&path, &t, "sweep", cfg, json!({ "lattice": lat.to_string(), "J": j, "methods": labels }))
}

fn shot_cells(u: f64, g: f64, method: &str, s: &ShotPoint) -> Vec<Cell> {
    vec![
        u.into(),
        g.into(),
        method.into(),
        s.e.mean.into(),
        s.e.err.into(),
        s.k.mean.into(),
        s.k.err.into(),
        s.ud.mean.into(),
        s.ud.err.into(),
    ]
}

pub fn two_site(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(l) = &cfg.lattice {
        if l.n_sites() != 2 {
            return Err(CliError::Config(format!("two-site needs a two-site lattice, got {l}")));
        }
    }
    let j = cfg.hopping()?;
    let mut grid: Vec<f64> = Vec::new();
    for &g in &cfg.g_grid {
        if grid.iter().any(|x| x.to_bits() == g.to_bits()) {
            eprintln!("warning: duplicate g={g} dropped");
        } else {
            grid.push(g);
        }
    }
    let mut us: Vec<f64> = Vec::new();
    for &u in &cfg.us {
        if us.contains(&u) {
            eprintln!("warning: duplicate U={u} dropped");
        } else {
            us.push(u);
        }
    }
    let curves = us.iter().map(|&u| two_site_curves(j, u, &grid)).collect::<Result<Vec<_>, _>>()?;
    let settings = ShotSettings { shots: cfg.shots, reps: cfg.reps, bias: cfg.bias, seed: cfg.seed };
    let runs = run_primitives(&grid, &settings)?;
    let exact = grid
        .iter()
        .map(|&g| Ok(assemble(&exact_primitives(g)?, g)?))
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut t = Table::new(&["U", "g", "method", "E", "E_err", "K", "K_err", "UD", "UD_err"]);
    let mut optima = Vec::new();
    for c in &curves {
        let raw = shot_curve(&grid, &runs.raw, j, c.u)?;
        let fixed = shot_curve(&grid, &runs.mitigated, j, c.u)?;
        for p in &c.points {
            t.push(vec![c.u.into(), p.g.into(), "analytic".into(), p.e.into(), Cell::Empty, p.k.into(), Cell::Empty, p.ud.into(), Cell::Empty]);
        }
        for (g, a) in grid.iter().zip(&exact) {
            let (e, k, ud) = a.energies(j, c.u);
            t.push(vec![c.u.into(), (*g).into(), "exact-primitives".into(), e.into(), Cell::Empty, k.into(), Cell::Empty, ud.into(), Cell::Empty]);
        }
        for (g, s) in grid.iter().zip(&raw) {
            t.push(shot_cells(c.u, *g, "shots-raw", s));
        }
        for (g, s) in grid.iter().zip(&fixed) {
            t.push(shot_cells(c.u, *g, "shots-mitigated", s));
        }
        let best = c.points.iter().min_by(|a, b| a.e.total_cmp(&b.e)).expect("nonempty grid");
        eprintln!("U={}: g_opt = {:.6}, E(g_opt) = {:.6}; grid minimum at g = {}", c.u, c.g_opt, c.e_opt, best.g);
        optima.push(json!({ "U": c.u, "g_opt": c.g_opt, "E_opt": c.e_opt, "grid_min_g": best.g, "grid_min_E": best.e }));
    }

    let mut prim = Table::new(&[
        "g",
        "denominator_raw",
        "denominator_raw_err",
        "denominator_mitigated",
        "denominator_mitigated_err",
        "denominator_exact",
        "zz_raw",
        "zz_raw_err",
        "zz_mitigated",
        "zz_mitigated_err",
        "zz_exact",
        "xx_raw",
        "xx_raw_err",
        "xx_mitigated",
        "xx_mitigated_err",
        "xx_exact",
    ]);
    let raw = shot_curve(&grid, &runs.raw, j, 0.0)?;
    let fixed = shot_curve(&grid, &runs.mitigated, j, 0.0)?;
    for (i, g) in grid.iter().enumerate() {
        let (r, f, x) = (&raw[i], &fixed[i], &exact[i]);
        let mut row = vec![Cell::from(*g)];
        for (rs, fs, ex) in [
            (r.denominator, f.denominator, x.denominator),
            (r.zz_numerator, f.zz_numerator, x.zz_numerator),
            (r.xx_numerator, f.xx_numerator, x.xx_numerator),
        ] {
            row.extend([rs.mean.into(), rs.err.into(), fs.mean.into(), fs.err.into(), ex.into()]);
        }
        prim.push(row);
    }

    let path = out_path(cfg, "two_site.csv");
    let extra = json!({ "J": j, "optima": optima, "shots": cfg.shots, "reps": cfg.reps });
    write(&path, &t, "two-site", cfg, extra.clone())?;
    write(&companion(&path, "primitives"), &prim, "two-site", cfg, extra)
}

pub fn lcu(cfg: &RunConfig) -> Result<(), CliError> {
    let lattices: Vec<Lattice> = match &cfg.lattice {
        Some(l) => vec![l.clone()],
        None => (2..=12).step_by(2).map(|n| Lattice::parse(&format!("chain:{n}")).expect("valid chain")).collect(),
    };
    if let Some(l) = lattices.iter().find(|l| l.n_sites() > MAX_LCU_SITES) {
        return Err(too_large("lcu", l, MAX_LCU_SITES));
    }
    let curves = lattices
        .par_iter()
        .map(|l| success_probability_curve(l, &cfg.g_grid))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&["N_site", "g", "p", "log_p"]);
    let mut failures = Vec::new();
    for (l, c) in lattices.iter().zip(&curves) {
        for p in c {
            t.push(vec![p.n_sites.into(), p.g.into(), p.p.into(), p.log_p.into()]);
        }
        let mut sorted: Vec<_> = c.iter().collect();
        sorted.sort_by(|a, b| a.g.total_cmp(&b.g));
        if sorted.windows(2).any(|w| w[1].log_p > w[0].log_p + 1e-12) {
            failures.push(l.to_string());
        }
    }
    let path = out_path(cfg, "lcu.csv");
    let names: Vec<_> = lattices.iter().map(|l| l.to_string()).collect();
    write(&path, &t, "lcu", cfg, json!({ "lattices": names, "non_monotone": failures }))?;
    if !failures.is_empty() {
        return Err(CliError::Numerical(format!("success probability not monotone in g for {}", failures.join(", "))));
    }
    Ok(())
}

pub fn hst_verify(cfg: &RunConfig) -> Result<(), CliError> {
    let js = cfg.j.clone().unwrap_or_else(|| DEFAULT_J_VALUES.to_vec());
    let checks = verify_catalog(&js)?;
    let mut t = Table::new(&["regime", "channel", "J", "gamma", "alpha", "max_deviation"]);
    let mut worst = 0.0f64;
    for c in &checks {
        t.push(vec![
            format!("{:?}", c.channel.regime()).to_lowercase().as_str().into(),
            c.channel.label().into(),
            c.j.into(),
            c.gamma.into(),
            c.alpha.into(),
            c.max_deviation.into(),
        ]);
        worst = worst.max(c.max_deviation);
    }
    let path = out_path(cfg, "hst_verify.csv");
    write(&path, &t, "hst-verify", cfg, json!({ "checks": checks.len(), "J_values": js, "max_deviation": worst, "tolerance": HST_TOLERANCE }))?;
    eprintln!("{} checks over {} J values, max deviation {worst:e}", checks.len(), js.len());
    if !(worst < HST_TOLERANCE) {
        return Err(CliError::Numerical(format!("identity deviation {worst:e} exceeds {HST_TOLERANCE:e}")));
    }
    Ok(())
}

pub fn phase_check(cfg: &RunConfig) -> Result<(), CliError> {
    let lat = cfg.lattice_or("chain:4");
    if lat.n_sites() > MAX_GROUND_STATE_SITES {
        return Err(too_large("phase-check enumeration", &lat, MAX_GROUND_STATE_SITES));
    }
    let trial = half_filled_trial(&lat)?;
    let reports = cfg
        .g_grid
        .par_iter()
        .map(|&g| phase_problem_check(&lat, g, &trial, &trial).map(|r| (g, r)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&["g", "n_configs", "max_imag", "min_real", "passed"]);
    for (g, r) in &reports {
        t.push(vec![(*g).into(), r.n_configs.into(), r.max_imag.into(), r.min_real.into(), r.passed.into()]);
    }
    let failed: Vec<f64> = reports.iter().filter(|(_, r)| !r.passed).map(|(g, _)| *g).collect();
    let path = out_path(cfg, "phase_check.csv");
    write(&path, &t, "phase-check", cfg, json!({ "lattice": lat.to_string(), "failed_g": failed }))?;
    if !failed.is_empty() {
        return Err(CliError::Numerical(format!("phase problem on {lat} at g = {failed:?}")));
    }
    Ok(())
}
