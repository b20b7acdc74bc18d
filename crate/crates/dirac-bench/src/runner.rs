//! Scenario execution: build the configured geometry and bundle, run the
//! requested tasks in order, and emit deterministic report files. Exit
//! codes separate mathematical failures (1) from configuration mistakes
//! (2) from solvers giving up (3).

use crate::scenario::{
    validate, BundleBlock, BundleKind, RhsKind, Scenario, Task, TorusBlock, WeightKind,
};
use crate::transversality::{sampled_verdict, summary_verdict, TransversalityVerdict};
use dirac_core::dirac::{
    bochner_residual, dminus_apply, dplus_apply, GradedSection, Grading,
};
use dirac_core::error::Error;
use dirac_core::field::{bandlimited_real, bandlimited_section, Cx};
use dirac_core::gauge::{
    constant_curvature_bundle, curvature_data, random_bundle, trivial_bundle, HermitianBundle,
};
use dirac_core::geometry::{build_cylinder, build_torus, TorusGeometry};
use dirac_core::l2solve::{solve_min_norm, verify_estimate, DiracSide, EstimateOutcome, SolveReport};
use dirac_core::spectral::{
    bound_report, smallest_eigenpairs, BoundReport, ClHalfOp, NormalMinusOp, NormalPlusOp,
};
use dirac_core::weights::{
    cylinder_weight_outcome, dirichlet_ground_state, poisson_weight, torus_weight, zero_weight,
    CylinderOutcome, CylinderWeightParams, WeightFailure, WeightFunction,
};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_BOUND: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub tol_override: Option<f64>,
}

#[derive(Serialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum TaskReport {
    Spectrum {
        pass: bool,
        count: usize,
        plus: Vec<f64>,
        minus: Vec<f64>,
    },
    Bounds {
        pass: bool,
        report: BoundReport,
    },
    Solve {
        pass: bool,
        estimate: String,
        report: Option<SolveReport>,
        obstruction: Option<f64>,
    },
    Bochner {
        pass: bool,
        grids: Vec<usize>,
        spacings: Vec<f64>,
        residuals_plus: Vec<f64>,
        residuals_minus: Vec<f64>,
        orders_plus: Vec<f64>,
        orders_minus: Vec<f64>,
    },
    CylinderWeight {
        pass: bool,
        success: bool,
        params: Option<CylinderWeightParams>,
        failure: Option<WeightFailure>,
    },
    Transversality {
        pass: bool,
        verdict: TransversalityVerdict,
    },
}

impl TaskReport {
    fn pass(&self) -> bool {
        match self {
            TaskReport::Spectrum { pass, .. }
            | TaskReport::Bounds { pass, .. }
            | TaskReport::Solve { pass, .. }
            | TaskReport::Bochner { pass, .. }
            | TaskReport::CylinderWeight { pass, .. }
            | TaskReport::Transversality { pass, .. } => *pass,
        }
    }
}

#[derive(Serialize)]
pub struct ReportRoot {
    pub scenario: String,
    pub seed: u64,
    pub tasks: Vec<TaskReport>,
    pub pass: bool,
}

fn exec_exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_SCHEMA,
        Error::NotSolvable { .. } | Error::Construction(_) => EXIT_BOUND,
        _ => EXIT_SOLVER,
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read scenario {}: {e}", path.display()))?;
    let s: Scenario =
        serde_json::from_str(&text).map_err(|e| format!("scenario does not match schema: {e}"))?;
    validate(&s)?;
    Ok(s)
}

pub fn build_torus_geometry(tb: &TorusBlock, seed: u64) -> Result<TorusGeometry, Error> {
    let u = match &tb.conformal {
        Some(c) if c.amplitude != 0.0 => {
            bandlimited_real(tb.n1, tb.n2, c.band, c.amplitude, seed.wrapping_add(1))
        }
        _ => vec![0.0; tb.n1 * tb.n2],
    };
    build_torus(tb.lx, tb.ly, tb.n1, tb.n2, u)
}

pub fn build_bundle(
    geom: &TorusGeometry,
    bb: &BundleBlock,
    seed: u64,
) -> Result<HermitianBundle, Error> {
    match bb.kind {
        BundleKind::Trivial => Ok(trivial_bundle(geom, bb.rank)),
        BundleKind::ConstantCurvature => constant_curvature_bundle(geom, bb.c1),
        BundleKind::Random => {
            random_bundle(geom, bb.c1, bb.roughness, seed.wrapping_add(2), bb.rank)
        }
    }
}

fn build_weight(
    scenario: &Scenario,
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    seed: u64,
) -> Result<WeightFunction, Error> {
    let Some(wb) = &scenario.weight else {
        return Ok(zero_weight(geom));
    };
    match wb.kind {
        WeightKind::Zero => Ok(zero_weight(geom)),
        WeightKind::Random => {
            let phi = bandlimited_real(
                geom.n1,
                geom.n2,
                wb.band,
                wb.amplitude,
                seed.wrapping_add(3),
            );
            torus_weight(geom, phi)
        }
        WeightKind::Poisson => {
            let curv = curvature_data(geom, bundle)?;
            let pot = match wb.potential {
                crate::scenario::PotentialKind::Min => &curv.lambda_s,
                crate::scenario::PotentialKind::Plus => &curv.lambda_s_plus,
                crate::scenario::PotentialKind::Minus => &curv.lambda_s_minus,
            };
            poisson_weight(geom, pot)
        }
    }
}

fn read_complex_file(path: &str, expected: usize) -> Result<Vec<Cx>, Error> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let re: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("bad sample on line {}", ln + 1)))?;
        let im: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("bad sample on line {}", ln + 1)))?;
        out.push(Cx::new(re, im));
    }
    if out.len() != expected {
        return Err(Error::InvalidParameter(format!(
            "data file holds {} samples, geometry needs {expected}",
            out.len()
        )));
    }
    Ok(out)
}

struct Outputs {
    spectrum_csv: Option<String>,
    bochner_plus: Option<String>,
    bochner_minus: Option<String>,
}

fn run_tasks(
    scenario: &Scenario,
    seed: u64,
    tol_override: Option<f64>,
) -> Result<(Vec<TaskReport>, Outputs), Error> {
    let mut reports = Vec::new();
    let mut outputs = Outputs {
        spectrum_csv: None,
        bochner_plus: None,
        bochner_minus: None,
    };

    // torus-side context, built once if any task needs it
    let torus_ctx: Option<(TorusGeometry, HermitianBundle)> = match &scenario.geometry.torus {
        Some(tb) => {
            let geom = build_torus_geometry(tb, seed)?;
            let bundle = match &scenario.bundle {
                Some(bb) => Some(build_bundle(&geom, bb, seed)?),
                None => None,
            };
            bundle.map(|b| (geom, b))
        }
        None => None,
    };

    for task in &scenario.tasks {
        let report = match task {
            Task::Spectrum => {
                let (geom, bundle) = torus_ctx.as_ref().expect("validated scenario");
                let count = scenario.spectrum.as_ref().map_or(6, |b| b.count);
                let tol = scenario.tolerances.eig_tol;
                let iters = scenario.tolerances.max_iter;
                let plus =
                    smallest_eigenpairs(&NormalPlusOp { geom, bundle }, count, tol, iters)?
                        .eigenvalues;
                let minus =
                    smallest_eigenpairs(&NormalMinusOp { geom, bundle }, count, tol, iters)?
                        .eigenvalues;
                let mut csv = String::from("operator,index,eigenvalue\n");
                for (i, v) in plus.iter().enumerate() {
                    csv.push_str(&format!("normal-plus,{i},{v:.12e}\n"));
                }
                for (i, v) in minus.iter().enumerate() {
                    csv.push_str(&format!("normal-minus,{i},{v:.12e}\n"));
                }
                outputs.spectrum_csv = Some(csv);
                TaskReport::Spectrum {
                    pass: true,
                    count,
                    plus,
                    minus,
                }
            }
            Task::Bounds => {
                let (geom, bundle) = torus_ctx.as_ref().expect("validated scenario");
                let h = geom.h1().max(geom.h2());
                let tol = tol_override.unwrap_or(scenario.tolerances.bound_tol_factor * h);
                let report = bound_report(geom, bundle, tol)?;
                TaskReport::Bounds {
                    pass: report.all_pass(),
                    report,
                }
            }
            Task::Solve => {
                let (geom, bundle) = torus_ctx.as_ref().expect("validated scenario");
                let sb = scenario.solve.as_ref().expect("validated scenario");
                let curv = curvature_data(geom, bundle)?;
                let weight = build_weight(scenario, geom, bundle, seed)?;
                let n = geom.len();
                let codomain = |v: Vec<Cx>| match sb.side {
                    DiracSide::Plus => GradedSection {
                        plus: Vec::new(),
                        minus: v,
                    },
                    DiracSide::Minus => GradedSection {
                        plus: v,
                        minus: Vec::new(),
                    },
                    DiracSide::Full => GradedSection {
                        plus: v[..n].to_vec(),
                        minus: v[n..].to_vec(),
                    },
                };
                let flat_len = if sb.side == DiracSide::Full { 2 * n } else { n };
                let f = match sb.rhs {
                    RhsKind::Random => {
                        let mut v = bandlimited_section(geom.n1, geom.n2, sb.band, seed.wrapping_add(4));
                        if flat_len == 2 * n {
                            v.extend(bandlimited_section(
                                geom.n1,
                                geom.n2,
                                sb.band,
                                seed.wrapping_add(5),
                            ));
                        }
                        codomain(v)
                    }
                    RhsKind::ImageOfRandom => {
                        let src = bandlimited_section(geom.n1, geom.n2, sb.band, seed.wrapping_add(4));
                        match sb.side {
                            DiracSide::Plus => GradedSection {
                                plus: Vec::new(),
                                minus: dplus_apply(geom, bundle, &src)?,
                            },
                            DiracSide::Minus => GradedSection {
                                plus: dminus_apply(geom, bundle, &src)?,
                                minus: Vec::new(),
                            },
                            DiracSide::Full => {
                                let src2 = bandlimited_section(
                                    geom.n1,
                                    geom.n2,
                                    sb.band,
                                    seed.wrapping_add(5),
                                );
                                GradedSection {
                                    plus: dminus_apply(geom, bundle, &src2)?,
                                    minus: dplus_apply(geom, bundle, &src)?,
                                }
                            }
                        }
                    }
                    RhsKind::FromFile => {
                        let path = sb.file.as_ref().expect("validated scenario");
                        codomain(read_complex_file(path, flat_len)?)
                    }
                };
                match solve_min_norm(
                    geom,
                    bundle,
                    &curv,
                    sb.side,
                    &f,
                    &weight,
                    scenario.tolerances.solve_tol,
                    scenario.tolerances.max_iter,
                ) {
                    Ok(rep) => {
                        let estimate = verify_estimate(&rep, rep.tol_h);
                        let pass = rep.residual <= 1e-8 && estimate != EstimateOutcome::Fail;
                        let label = match estimate {
                            EstimateOutcome::Pass => "pass",
                            EstimateOutcome::Fail => "fail",
                            EstimateOutcome::NotEvaluable => "not-evaluable",
                        };
                        TaskReport::Solve {
                            pass,
                            estimate: label.into(),
                            report: Some(rep),
                            obstruction: None,
                        }
                    }
                    Err(Error::NotSolvable { obstruction, .. }) => TaskReport::Solve {
                        pass: false,
                        estimate: "not-solvable".into(),
                        report: None,
                        obstruction: Some(obstruction),
                    },
                    Err(e) => return Err(e),
                }
            }
            Task::Bochner => {
                let tb = scenario.geometry.torus.as_ref().expect("validated scenario");
                let bb = scenario.bundle.as_ref().expect("validated scenario");
                let default_refine = crate::scenario::RefineBlock {
                    grids: vec![16, 32, 64],
                    modes: 8,
                };
                let refine = scenario.refine.as_ref().unwrap_or(&default_refine);
                let mut spacings = Vec::new();
                let mut res_plus = Vec::new();
                let mut res_minus = Vec::new();
                for &g in &refine.grids {
                    let scaled = TorusBlock {
                        lx: tb.lx,
                        ly: tb.ly,
                        n1: g,
                        n2: g,
                        conformal: tb.conformal.clone(),
                    };
                    let geom = build_torus_geometry(&scaled, seed)?;
                    let bundle = build_bundle(&geom, bb, seed)?;
                    let curv = curvature_data(&geom, &bundle)?;
                    spacings.push(geom.h1().max(geom.h2()));
                    for grading in [Grading::Plus, Grading::Minus] {
                        let op = ClHalfOp {
                            geom: &geom,
                            bundle: &bundle,
                            grading,
                        };
                        let eig = smallest_eigenpairs(&op, refine.modes, 1e-8, 20_000)?;
                        let mut worst = 0.0f64;
                        for v in &eig.eigenvectors {
                            worst =
                                worst.max(bochner_residual(&geom, &bundle, &curv, grading, v)?);
                        }
                        match grading {
                            Grading::Plus => res_plus.push(worst),
                            Grading::Minus => res_minus.push(worst),
                        }
                    }
                }
                let orders = |r: &[f64]| -> Vec<f64> {
                    (0..r.len().saturating_sub(1))
                        .map(|i| {
                            (r[i] / r[i + 1]).ln() / (spacings[i] / spacings[i + 1]).ln()
                        })
                        .collect()
                };
                let orders_plus = orders(&res_plus);
                let orders_minus = orders(&res_minus);
                // Convergence order is asymptotic: judge the finest pair,
                // where the coarse-grid transient has died out.
                let pass = orders_plus
                    .last()
                    .into_iter()
                    .chain(orders_minus.last())
                    .all(|&o| o >= 0.9);
                let dat = |r: &[f64]| {
                    let mut s = String::new();
                    for (h, v) in spacings.iter().zip(r) {
                        s.push_str(&format!("{h:.12e} {v:.12e}\n"));
                    }
                    s
                };
                outputs.bochner_plus = Some(dat(&res_plus));
                outputs.bochner_minus = Some(dat(&res_minus));
                TaskReport::Bochner {
                    pass,
                    grids: refine.grids.clone(),
                    spacings,
                    residuals_plus: res_plus,
                    residuals_minus: res_minus,
                    orders_plus,
                    orders_minus,
                }
            }
            Task::CylinderWeight => {
                let cb = scenario
                    .geometry
                    .cylinder
                    .as_ref()
                    .expect("validated scenario");
                let cw = scenario.cylinder_weight.as_ref().expect("validated scenario");
                let cyl = build_cylinder(cb.t_len, cb.nt, cb.nc, cb.delta)?;
                let beta = match (cw.beta, cw.beta_fraction) {
                    (Some(b), _) => b,
                    (None, Some(frac)) => {
                        let (mu, _) = dirichlet_ground_state(&cyl)?;
                        frac * cw.gamma * mu / (2.0 - 4.0 / cw.n as f64)
                    }
                    (None, None) => unreachable!("validated scenario"),
                };
                let lambda: Vec<f64> = (0..cyl.len())
                    .map(|i| {
                        let (k, _, _) = cyl.coords(i);
                        if cyl.in_compact_region(k) {
                            -beta
                        } else {
                            cw.alpha
                        }
                    })
                    .collect();
                match cylinder_weight_outcome(
                    &cyl, &lambda, cw.alpha, cw.n, cw.eps, cw.gamma, cw.delta,
                )? {
                    CylinderOutcome::Success { params, .. } => TaskReport::CylinderWeight {
                        pass: true,
                        success: true,
                        params: Some(params),
                        failure: None,
                    },
                    CylinderOutcome::Failure(f) => TaskReport::CylinderWeight {
                        pass: false,
                        success: false,
                        params: None,
                        failure: Some(f),
                    },
                }
            }
            Task::Transversality => {
                let tb = scenario
                    .transversality
                    .as_ref()
                    .expect("validated scenario");
                let verdict = if tb.sampled {
                    let (geom, bundle) = torus_ctx.as_ref().expect("validated scenario");
                    sampled_verdict(geom, bundle)?
                } else {
                    summary_verdict(
                        tb.c1.expect("validated scenario"),
                        tb.rank,
                        tb.genus.expect("validated scenario"),
                    )
                };
                TaskReport::Transversality {
                    pass: true,
                    verdict,
                }
            }
        };
        reports.push(report);
    }
    Ok((reports, outputs))
}

/// Execute a scenario file end to end. Returns the process exit code;
/// diagnostics go to stderr, a one-line summary and the report paths to
/// stdout. No files are written unless every task executed.
pub fn run_scenario_file(path: &Path, cfg: &RunConfig) -> i32 {
    let scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_SCHEMA;
        }
    };
    let seed = cfg.seed_override.unwrap_or(scenario.seed);
    let (tasks, outputs) = match run_tasks(&scenario, seed, cfg.tol_override) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exec_exit_code(&e);
        }
    };
    let pass = tasks.iter().all(|t| t.pass());
    let root = ReportRoot {
        scenario: scenario.name.clone(),
        seed,
        tasks,
        pass,
    };

    if let Err(e) = fs::create_dir_all(&cfg.out_dir) {
        eprintln!("error: cannot create output directory: {e}");
        return EXIT_SCHEMA;
    }
    let stem = scenario.name.replace(|c: char| !c.is_alphanumeric() && c != '-', "-");
    let mut files = vec![(
        cfg.out_dir.join(format!("{stem}-report.json")),
        serde_json::to_string_pretty(&root).expect("report serialization") + "\n",
    )];
    if let Some(csv) = outputs.spectrum_csv {
        files.push((cfg.out_dir.join(format!("{stem}-spectrum.csv")), csv));
    }
    if let Some(dat) = outputs.bochner_plus {
        files.push((cfg.out_dir.join(format!("{stem}-bochner-plus.dat")), dat));
    }
    if let Some(dat) = outputs.bochner_minus {
        files.push((cfg.out_dir.join(format!("{stem}-bochner-minus.dat")), dat));
    }
    for (p, content) in &files {
        if let Err(e) = fs::write(p, content) {
            eprintln!("error: cannot write {}: {e}", p.display());
            return EXIT_SCHEMA;
        }
    }
    println!(
        "{}: {} ({} task{})",
        if pass { "pass" } else { "FAIL" },
        files[0].0.display(),
        root.tasks.len(),
        if root.tasks.len() == 1 { "" } else { "s" }
    );
    if pass {
        EXIT_PASS
    } else {
        EXIT_BOUND
    }
}
