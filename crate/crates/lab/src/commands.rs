//! One function per subcommand, each producing in-memory artifacts.

use std::time::Instant;

use abslit_core::asymptotics::{
    fit_log_law, predict_splitting_constant, richardson_spectrum, simple_expansion_rows, splitting_report,
    stability_report, sweep_poles, sweep_step, Cluster, HPolicy, SweepResult, SweepStep,
};
use abslit_core::eigen::EigenOptions;
use abslit_core::ellipse::{solve_w_closed_form, EllipseProblem, OracleResult};
use abslit_core::energy::{check_expansion, reduced_system, CrackSetup};
use abslit_core::fem::{assemble, solve_generalized_eigs_with};
use abslit_core::geometry::project_to_boundary;
use abslit_core::mesh::{build_plain_mesh, build_slit_mesh};
use abslit_core::{Domain, MeshOptions, Point, WeightSpec};
use serde_json::{json, Value};

use crate::cache::StepCache;
use crate::config::{CommandConfig, DomainConfig, Prepared, WeightConfig};
use crate::error::LabError;
use crate::formats::{loglaw_svg, read_csv_column, write_coordinate, write_slitmesh, Csv, Series};

/// Files produced by a command, in write order, plus a JSON summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub summary: Value,
    pub timings_ms: Vec<(String, u128)>,
}

impl Artifacts {
    fn new() -> Self {
        Self { files: Vec::new(), summary: Value::Null, timings_ms: Vec::new() }
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

fn pt(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

pub fn execute(prep: &Prepared) -> Result<Artifacts, LabError> {
    let start = Instant::now();
    let mut out = match &prep.config.command {
        CommandConfig::Spectrum { h, k, richardson } => spectrum(prep, *h, *k, *richardson)?,
        CommandConfig::CrackSpectrum { pole, h, k, grading, h_far, export_mesh, export_matrices } => {
            let opts = MeshOptions::graded(*h, *grading, h_far.unwrap_or(*h));
            crack_spectrum(prep, pt(*pole), &opts, *k, *export_mesh, *export_matrices)?
        }
        CommandConfig::Energy { pole, cluster, h, grading, h_far, threshold } => {
            let opts = MeshOptions::graded(*h, *grading, h_far.unwrap_or(*h));
            energy(prep, pt(*pole), (*cluster).into(), &opts, *threshold)?
        }
        CommandConfig::Sweep { a0, direction, d, k, cluster, policy, h_predict } => {
            let cluster: Option<Cluster> = cluster.map(Into::into);
            let k = k.unwrap_or_else(|| cluster.map_or(6, |c| (c.n + c.m).max(6)));
            let policy: HPolicy = policy.unwrap_or_default().into();
            let dir = match direction {
                Some(v) => pt(*v),
                None => inner_normal(&prep.domain, pt(*a0)),
            };
            let plan = SweepPlan { a0: pt(*a0), direction: dir, d: d.clone(), k, cluster, policy };
            sweep(prep, &plan, h_predict.unwrap_or(policy.h0))?
        }
        CommandConfig::Oracle { length, alpha, beta, eps } => oracle(*length, *alpha, *beta, eps)?,
        CommandConfig::Fit { samples, input, column } => {
            let samples = match (samples, input, column) {
                (Some(s), _, _) => s.iter().map(|p| (p[0], p[1])).collect(),
                (None, Some(path), Some(col)) => read_fit_input(path, col)?,
                _ => return Err(LabError::Validation("fit needs samples or input and column".into())),
            };
            fit(&samples)?
        }
    };
    out.timings_ms.push(("total".into(), start.elapsed().as_millis()));
    Ok(out)
}

fn inner_normal(domain: &Domain, a0: Point) -> Point {
    let (t, _, _) = domain.nearest_boundary_point(a0);
    -domain.normal_at(t)
}

fn read_fit_input(path: &std::path::Path, column: &str) -> Result<Vec<(f64, f64)>, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let fmt = |message: String| LabError::Format { path: path.to_path_buf(), message };
    let d = read_csv_column(&text, "d").or_else(|_| read_csv_column(&text, "eps")).map_err(fmt)?;
    let y = read_csv_column(&text, column).map_err(fmt)?;
    Ok(d.into_iter().zip(y).collect())
}

pub fn spectrum_csv(values: &[Vec<f64>], names: &[&str]) -> String {
    let mut header = vec!["k"];
    header.extend_from_slice(names);
    let mut csv = Csv::new(&header);
    for i in 0..values[0].len() {
        let row: Vec<f64> = values.iter().map(|v| v[i]).collect();
        csv.push_indexed(i + 1, &row);
    }
    csv.render()
}

fn spectrum(prep: &Prepared, h: f64, k: usize, richardson: bool) -> Result<Artifacts, LabError> {
    let mut out = Artifacts::new();
    if richardson {
        let r = richardson_spectrum(&prep.domain, &prep.weight, k, h)?;
        let csv = spectrum_csv(
            &[r.coarse.clone(), r.fine.clone(), r.extrapolated.clone()],
            &["lambda_h", "lambda_h2", "lambda_richardson"],
        );
        out.files.push(("spectrum.csv".into(), csv));
        out.summary = json!({ "h": h, "k": k, "eigenvalues": r.extrapolated });
    } else {
        let mesh = build_plain_mesh(&prep.domain, &MeshOptions::uniform(h))?;
        let sys = assemble(&mesh, &prep.weight)?;
        let opts = EigenOptions { k, seed: prep.config.seed, ..EigenOptions::default() };
        let spec = solve_generalized_eigs_with(&sys, &opts)?;
        out.files.push(("spectrum.csv".into(), spectrum_csv(std::slice::from_ref(&spec.eigenvalues), &["lambda"])));
        out.summary = json!({ "h": h, "k": k, "n_dofs": mesh.n_dofs(), "eigenvalues": spec.eigenvalues });
    }
    Ok(out)
}

fn crack_spectrum(
    prep: &Prepared,
    pole: Point,
    opts: &MeshOptions,
    k: usize,
    export_mesh: bool,
    export_matrices: bool,
) -> Result<Artifacts, LabError> {
    let pole = project_to_boundary(&prep.domain, pole).map_err(LabError::invalid)?;
    let mesh = build_slit_mesh(&prep.domain, &pole, opts)?;
    let sys = assemble(&mesh, &prep.weight)?;
    let eig = EigenOptions { k, seed: prep.config.seed, ..EigenOptions::default() };
    let crack = solve_generalized_eigs_with(&sys, &eig)?;
    let plain_mesh = mesh.plain_companion();
    let plain = solve_generalized_eigs_with(&assemble(&plain_mesh, &prep.weight)?, &eig)?;
    let delta: Vec<f64> = crack.eigenvalues.iter().zip(&plain.eigenvalues).map(|(a, b)| a - b).collect();
    let mut out = Artifacts::new();
    out.files.push((
        "crack_spectrum.csv".into(),
        spectrum_csv(
            &[plain.eigenvalues.clone(), crack.eigenvalues.clone(), delta, crack.residuals.clone()],
            &["lambda_plain", "lambda_crack", "delta", "residual"],
        ),
    ));
    if export_mesh {
        out.files.push(("mesh.slitmesh".into(), write_slitmesh(&mesh)));
    }
    if export_matrices {
        out.files.push(("stiffness.mtx".into(), write_coordinate(&sys.k)));
        out.files.push(("mass.mtx".into(), write_coordinate(&sys.mp)));
        out.files.push(("stiffness_reduced.mtx".into(), write_coordinate(&sys.k_red)));
        out.files.push(("mass_reduced.mtx".into(), write_coordinate(&sys.mp_red)));
    }
    out.summary = json!({
        "d_a": pole.d_a,
        "p_a": [pole.p_a.x, pole.p_a.y],
        "n_dofs": mesh.n_dofs(),
        "n_reduced": sys.n_reduced,
        "lambda_crack": crack.eigenvalues,
        "lambda_plain": plain.eigenvalues,
    });
    Ok(out)
}

fn energy(
    prep: &Prepared,
    pole: Point,
    cluster: Cluster,
    opts: &MeshOptions,
    threshold: f64,
) -> Result<Artifacts, LabError> {
    let pole = project_to_boundary(&prep.domain, pole).map_err(LabError::invalid)?;
    let setup = CrackSetup::new(&prep.domain, &pole, &prep.weight, opts, cluster.n + cluster.m)?;
    let red = reduced_system(&setup, cluster.n, cluster.m)?;
    let rep = check_expansion(&setup, &red, threshold)?;
    let report = json!({
        "d_a": rep.d_a,
        "lambda_plain": rep.lambda_plain,
        "lambda_branches": rep.lambda_branches,
        "mu": rep.mu,
        "xi": red.xi,
        "tau": rep.tau,
        "tau_exact": red.tau_exact,
        "E": rep.e,
        "l2_V": rep.l2_v,
        "constant": rep.constant,
        "threshold": threshold,
        "violation": rep.violation,
        "r_asymmetry": red.r_asymmetry(),
        "gap_ratio": red.gap_ratio,
    });
    let mut csv = Csv::new(&["j", "lambda_plain", "lambda_branch", "delta", "mu", "E", "l2_V"]);
    for j in 0..cluster.m {
        csv.push_indexed(
            cluster.n + j,
            &[rep.lambda_plain[j], rep.lambda_branches[j], rep.delta[j], rep.mu[j], rep.e[j], rep.l2_v[j]],
        );
    }
    let mut out = Artifacts::new();
    out.files.push(("energy.json".into(), format!("{}\n", serde_json::to_string_pretty(&report).unwrap())));
    out.files.push(("energy.csv".into(), csv.render()));
    out.summary = report;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub a0: Point,
    pub direction: Point,
    pub d: Vec<f64>,
    pub k: usize,
    pub cluster: Option<Cluster>,
    pub policy: HPolicy,
}

/// Runs the sweep steps on up to `threads` workers. Results are ordered by
/// `d` regardless of scheduling. Steps found in `cache` are not recomputed.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep_parallel(
    domain: &Domain,
    weight: &WeightSpec,
    domain_cfg: &DomainConfig,
    weight_cfg: &WeightConfig,
    plan: &SweepPlan,
    threads: usize,
    cache: Option<&StepCache>,
) -> Result<SweepResult, LabError> {
    let poles = sweep_poles(domain, plan.a0, plan.direction, &plan.d).map_err(LabError::invalid)?;
    let jobs: Vec<_> = poles.iter().zip(&plan.d).map(|(p, &d)| (*p, plan.policy.mesh_options(d))).collect();
    let run = |(pole, opts): &(abslit_core::PoleConfig, MeshOptions)| -> Result<SweepStep, LabError> {
        let key = cache.map(|_| StepCache::key(domain_cfg, weight_cfg, pole, opts, plan.k, plan.cluster));
        if let (Some(c), Some(k)) = (cache, &key) {
            if let Some(step) = c.load(k) {
                return Ok(step);
            }
        }
        let step = sweep_step(domain, weight, pole, plan.k, plan.cluster, opts)?;
        if let (Some(c), Some(k)) = (cache, &key) {
            c.store(k, &step);
        }
        Ok(step)
    };
    let threads = threads.clamp(1, jobs.len().max(1));
    let mut results: Vec<Option<Result<SweepStep, LabError>>> = (0..jobs.len()).map(|_| None).collect();
    if threads == 1 {
        for (slot, job) in results.iter_mut().zip(&jobs) {
            *slot = Some(run(job));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let done = std::sync::Mutex::new(&mut results);
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= jobs.len() {
                        break;
                    }
                    let r = run(&jobs[i]);
                    done.lock().unwrap()[i] = Some(r);
                });
            }
        });
    }
    let steps = results.into_iter().map(|r| r.expect("every job ran")).collect::<Result<Vec<_>, _>>()?;
    let limit = abslit_core::asymptotics::plain_spectrum(domain, weight, plan.k, plan.policy.h0)?;
    let direction = plan.direction * (1.0 / plan.direction.norm());
    Ok(SweepResult { a0: plan.a0, direction, k: plan.k, cluster: plan.cluster, limit, steps })
}

pub fn sweep_csv(s: &SweepResult) -> String {
    let m = s.cluster.map_or(0, |c| c.m);
    let mut header = vec!["d".to_string(), "h".to_string()];
    header.extend((1..=s.k).map(|k| format!("lambda_{k}")));
    header.extend((1..=s.k).map(|k| format!("lambda0_{k}")));
    header.extend((1..=m).map(|j| format!("E_{j}")));
    header.extend((1..=m).map(|j| format!("mu_{j}")));
    header.push("tau".into());
    let mut csv = Csv::new(&header);
    for st in &s.steps {
        let mut row = vec![st.d, st.h];
        row.extend(&st.lambda_crack);
        row.extend(&st.lambda_plain);
        row.extend(st.energies.iter().map(|e| e.e));
        row.extend(&st.mu);
        row.push(st.tau);
        csv.push(&row);
    }
    csv.render()
}

fn sweep(prep: &Prepared, plan: &SweepPlan, h_predict: f64) -> Result<Artifacts, LabError> {
    let t0 = Instant::now();
    let cache = StepCache::from_env();
    let s = run_sweep_parallel(
        &prep.domain,
        &prep.weight,
        &prep.config.domain,
        &prep.config.weight,
        plan,
        prep.config.threads,
        cache.as_ref(),
    )?;
    let mut out = Artifacts::new();
    out.timings_ms.push(("sweep".into(), t0.elapsed().as_millis()));
    out.files.push(("sweep.csv".into(), sweep_csv(&s)));
    let stability: Vec<Value> = stability_report(&s, s.k)
        .iter()
        .map(|b| {
            json!({"k": b.k, "abs_delta": b.abs_delta, "products": b.products,
                   "monotone": b.monotone, "envelope_non_increasing": b.envelope_non_increasing})
        })
        .collect();
    let mut summary = json!({ "d": s.d_values(), "limit": s.limit, "stability": stability });
    let ds = s.d_values();
    match s.cluster {
        Some(c) if c.m >= 2 => {
            let pred = predict_splitting_constant(&prep.domain, &prep.weight, plan.a0, c, h_predict)?;
            let r = splitting_report(s.clone(), pred)?;
            let report = json!({
                "cluster": [c.n, c.m],
                "predicted": pred.value,
                "predicted_coarse": pred.coarse,
                "predicted_fine": pred.fine,
                "fit": {"c1": r.top_fit.c1, "c2": r.top_fit.c2, "residual": r.top_fit.residual,
                        "c1_stderr": r.top_fit.c1_stderr, "window": [r.top_fit.window.0, r.top_fit.window.1]},
                "c1_rel_err": r.c1_rel_err,
                "lower_products": r.lower_products,
                "lower_decreasing": r.lower_decreasing,
                "top_gap_ratio": r.top_gap_ratio,
                "top_simple": r.top_simple,
                "c1_without_largest": r.c1_without_largest,
            });
            let top = c.n + c.m - 1;
            let mut series = vec![Series {
                label: format!("branch {top}"),
                points: ds.iter().copied().zip(s.branch_delta(top)).collect(),
            }];
            for b in c.n..top {
                series.push(Series {
                    label: format!("branch {b}"),
                    points: ds.iter().copied().zip(s.branch_delta(b)).collect(),
                });
            }
            out.files.push((
                "loglaw.svg".into(),
                loglaw_svg("splitting of the cluster", &series, Some((pred.value, "predicted constant"))),
            ));
            out.files.push(("splitting.json".into(), format!("{}\n", serde_json::to_string_pretty(&report).unwrap())));
            summary["splitting"] = report;
        }
        Some(c) => {
            let rows = simple_expansion_rows(&s)?;
            let mut csv = Csv::new(&["d", "delta", "two_E", "ratio", "l2_V_sq"]);
            for r in &rows {
                csv.push(&[r.d, r.delta, r.two_e, r.ratio, r.l2_v_sq]);
            }
            out.files.push(("expansion.csv".into(), csv.render()));
            let series = [Series {
                label: format!("branch {}", c.n),
                points: ds.iter().copied().zip(s.branch_delta(c.n)).collect(),
            }];
            out.files.push(("loglaw.svg".into(), loglaw_svg("simple branch", &series, None)));
            summary["expansion_ratio"] = json!(rows.iter().map(|r| r.ratio).collect::<Vec<_>>());
        }
        None => {
            let series: Vec<Series> = (1..=s.k)
                .map(|k| Series {
                    label: format!("branch {k}"),
                    points: ds.iter().copied().zip(s.branch_delta(k)).collect(),
                })
                .collect();
            out.files.push(("loglaw.svg".into(), loglaw_svg("eigenvalue shifts", &series, None)));
        }
    }
    out.files.push(("sweep.json".into(), format!("{}\n", serde_json::to_string_pretty(&summary).unwrap())));
    out.summary = summary;
    Ok(out)
}

pub fn oracle_rows(length: f64, alpha: f64, beta: f64, eps: &[f64]) -> Result<Vec<OracleResult>, LabError> {
    eps.iter()
        .map(|&e| {
            let prob = EllipseProblem::new(length, e, alpha, beta).map_err(LabError::invalid)?;
            Ok(solve_w_closed_form(&prob)?)
        })
        .collect()
}

pub fn oracle_csv(rows: &[OracleResult]) -> String {
    let mut csv = Csv::new(&["eps", "xi_eps", "c1", "c2", "grad_energy", "mass_rho", "E_leading"]);
    for r in rows {
        csv.push(&[r.eps, r.xi_eps, r.c1, r.c2, r.grad_energy, r.mass_rho, r.e_leading]);
    }
    csv.render()
}

fn oracle(length: f64, alpha: f64, beta: f64, eps: &[f64]) -> Result<Artifacts, LabError> {
    let rows = oracle_rows(length, alpha, beta, eps)?;
    let mut out = Artifacts::new();
    out.files.push(("oracle.csv".into(), oracle_csv(&rows)));
    let law: Vec<f64> =
        rows.iter().map(|r| r.grad_energy * r.eps.ln().abs() / (std::f64::consts::PI * alpha * alpha)).collect();
    let mut summary = json!({ "grad_energy_law_ratio": law });
    if rows.len() >= 4 {
        let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, 0.5 * r.grad_energy)).collect();
        let f = fit_log_law(&samples)?;
        let target = 0.5 * std::f64::consts::PI * alpha * alpha;
        summary["fit_half_grad_energy"] = json!({"c1": f.c1, "c2": f.c2, "residual": f.residual, "target_c1": target, "rel_err": (f.c1 - target).abs() / target});
    }
    out.files.push(("oracle.json".into(), format!("{}\n", serde_json::to_string_pretty(&summary).unwrap())));
    out.summary = summary;
    Ok(out)
}

fn fit(samples: &[(f64, f64)]) -> Result<Artifacts, LabError> {
    let f = fit_log_law(samples).map_err(|e| match e {
        abslit_core::Error::InsufficientSamples { .. } | abslit_core::Error::InvalidArgument(_) => LabError::invalid(e),
        e => LabError::Solver(e),
    })?;
    let v = json!({
        "c1": f.c1, "c2": f.c2, "residual": f.residual, "c1_stderr": f.c1_stderr,
        "window": [f.window.0, f.window.1], "samples": f.samples,
    });
    let mut csv = Csv::new(&["c1", "c2", "residual", "c1_stderr"]);
    csv.push(&[f.c1, f.c2, f.residual, f.c1_stderr]);
    let mut out = Artifacts::new();
    out.files.push(("fit.json".into(), format!("{}\n", serde_json::to_string_pretty(&v).unwrap())));
    out.files.push(("fit.csv".into(), csv.render()));
    out.summary = v;
    Ok(out)
}
