//! Experiment drivers behind the CLI: convergence studies, Riemann profiles,
//! asymptotic-consistency checks, CSV tables, and gnuplot script emission.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::Basis;
use crate::config::{BcKind, ExactKind, ExperimentConfig, ExperimentKind, InitKind};
use crate::diagnostics::{order_from_errors, reconstruct_j, RunMetrics};
use crate::error::{Result, SolverError};
use crate::field::{l1_distance, l1_error, l1_norm, project_l2, DGField};
use crate::imex::{compute_dt, KineticSolver, SchemeConfig};
use crate::ldg::LdgSolver;
use crate::mesh::Mesh1D;
use crate::models::{
    burgers_maxwellian_j, initial_state_from_exact, CollisionModel, ExactSolution,
    KineticState, RuijgrokWuShock,
};
use crate::operators::BoundaryCondition;

/// Scientific notation with 12 significant digits; CSV cells are
/// reproducible byte-for-byte.
pub fn fmt_sci(x: f64) -> String {
    format!("{:.11E}", x)
}

/// Build the configured exact solution; converge runs require one.
pub fn build_exact(cfg: &ExperimentConfig) -> Result<ExactSolution> {
    let kind = cfg.exact.ok_or_else(|| {
        SolverError::InvalidConfig("no exact solution configured for this model/run".into())
    })?;
    Ok(match kind {
        ExactKind::TelegraphSmooth => {
            if cfg.epsilon > 0.5 {
                return Err(SolverError::InvalidConfig(
                    "telegraph smooth solution needs eps <= 1/2".into(),
                ));
            }
            ExactSolution::TelegraphSmooth { epsilon: cfg.epsilon }
        }
        ExactKind::AdvDiffSmooth => ExactSolution::AdvDiffSmooth,
        ExactKind::AdvDiffRiemann => {
            let (rho_l, _, rho_r, _) = cfg.riemann.ok_or_else(|| {
                SolverError::InvalidConfig("advdiff-riemann needs rho_l/rho_r".into())
            })?;
            ExactSolution::AdvDiffRiemann { rho_l, rho_r }
        }
        ExactKind::RuijgrokWuShock => ExactSolution::RuijgrokWuShock(RuijgrokWuShock::new(
            cfg.epsilon,
            cfg.rho_minus,
            cfg.rho_plus,
            cfg.xi0,
        )),
        ExactKind::Barenblatt => ExactSolution::Barenblatt,
    })
}

/// Effective Riemann data with the optional local-Maxwellian current.
fn riemann_states(cfg: &ExperimentConfig) -> Option<(f64, f64, f64, f64)> {
    let (rho_l, j_l, rho_r, j_r) = cfg.riemann?;
    if cfg.maxwellian_j {
        if let CollisionModel::Burgers { c_coef } = cfg.model {
            return Some((
                rho_l,
                burgers_maxwellian_j(c_coef, rho_l, cfg.epsilon),
                rho_r,
                burgers_maxwellian_j(c_coef, rho_r, cfg.epsilon),
            ));
        }
    }
    Some((rho_l, j_l, rho_r, j_r))
}

/// Equilibrium current of a uniform far-field state: what j relaxes to after
/// the initial layer when the density gradient vanishes.
fn equilibrium_far_field_j(model: &CollisionModel, rho: f64, epsilon: f64) -> f64 {
    match *model {
        CollisionModel::Porous { .. } => 0.0,
        CollisionModel::AdvDiff { a_coef } => a_coef * rho,
        CollisionModel::Burgers { c_coef } => burgers_maxwellian_j(c_coef, rho, epsilon),
    }
}

/// Initial kinetic state plus the matching boundary condition.
///
/// Riemann initial data keeps the configured j, but the fixed inflow/outflow
/// ghost states carry the equilibrium far-field current (overridable with
/// bc_j_l / bc_j_r): holding the ghost at a non-equilibrium j would pump a
/// spurious flux through the boundary for as long as the run lasts.
fn initial_and_bc(
    cfg: &ExperimentConfig,
    mesh: &Arc<Mesh1D>,
    basis: &Arc<Basis>,
) -> Result<(KineticState, BoundaryCondition)> {
    if let Some((rho_l, j_l, rho_r, j_r)) = riemann_states(cfg) {
        let st = crate::models::initial_state_riemann(
            rho_l, j_l, rho_r, j_r, mesh, basis, cfg.epsilon,
        )?;
        let bc = match cfg.bc {
            BcKind::Periodic => BoundaryCondition::Periodic,
            BcKind::InflowOutflow => BoundaryCondition::InflowOutflow {
                left: (
                    rho_l,
                    cfg.bc_j_l
                        .unwrap_or_else(|| equilibrium_far_field_j(&cfg.model, rho_l, cfg.epsilon)),
                ),
                right: (
                    rho_r,
                    cfg.bc_j_r
                        .unwrap_or_else(|| equilibrium_far_field_j(&cfg.model, rho_r, cfg.epsilon)),
                ),
            },
        };
        return Ok((st, bc));
    }
    let exact = build_exact(cfg)?;
    let st = initial_state_from_exact(&exact, mesh, basis, cfg.epsilon)?;
    let bc = match cfg.bc {
        BcKind::Periodic => BoundaryCondition::Periodic,
        BcKind::InflowOutflow => BoundaryCondition::InflowOutflow {
            left: exact.eval(cfg.x_min, 0.0),
            right: exact.eval(cfg.x_max, 0.0),
        },
    };
    Ok((st, bc))
}

fn scheme_for(cfg: &ExperimentConfig, bc: BoundaryCondition) -> Result<SchemeConfig> {
    let mut sc = SchemeConfig::new(cfg.order, cfg.flux, bc, cfg.model, cfg.epsilon)?;
    if let Some(ch) = cfg.c_hyper {
        sc.c_hyper = ch;
    }
    if let Some(cd) = cfg.c_diff {
        sc.c_diff = cd;
    }
    Ok(sc)
}

/// March the kinetic solver to t_final recording metrics every
/// `record_every` steps (and always at the final time).
pub fn march_with_metrics(
    solver: &mut KineticSolver,
    state: KineticState,
    t_final: f64,
    record_every: usize,
) -> Result<(KineticState, RunMetrics)> {
    let mut st = state;
    let mut metrics = RunMetrics::default();
    let model = solver.cfg.model;
    metrics.record(0.0, &st, &model);
    let dt0 = solver.initial_dt();
    let mut t = 0.0;
    let mut step_idx = 0usize;
    while t < t_final - 1e-13 * t_final.max(1.0) {
        let dt = dt0.min(t_final - t);
        st = solver.step(&st, dt)?;
        t += dt;
        step_idx += 1;
        if step_idx.is_multiple_of(record_every) || t >= t_final - 1e-13 * t_final.max(1.0) {
            metrics.record(t, &st, &model);
        }
    }
    Ok((st, metrics))
}

#[derive(Debug, Clone)]
pub struct ConvergeRow {
    pub n: usize,
    pub l1_rho: f64,
    pub order_rho: Option<f64>,
    pub l1_j: f64,
    pub order_j: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergeTable {
    pub rows: Vec<ConvergeRow>,
    pub csv_path: PathBuf,
}

/// One accuracy run: initialize from the exact solution, march to T, measure
/// L1 errors of rho_h and the reconstructed j_h against the exact pair.
///
/// Table errors are domain-averaged, (1/|Omega|) int |u - u_h| dx. The raw
/// integral would sit below the best-approximation floor of the reference
/// tables, so the averaged metric is the one the tables state.
pub fn single_accuracy_run(cfg: &ExperimentConfig, n: usize) -> Result<(f64, f64)> {
    let mesh = Arc::new(Mesh1D::new(cfg.x_min, cfg.x_max, n));
    let basis = Arc::new(Basis::new(cfg.order - 1, cfg.basis_kind));
    let exact = build_exact(cfg)?;
    let (st, bc) = initial_and_bc(cfg, &mesh, &basis)?;
    let mut solver = KineticSolver::new(scheme_for(cfg, bc)?, mesh, basis)?;
    let out = solver.advance(st, cfg.t_final)?;
    let t = cfg.t_final;
    let length = cfg.x_max - cfg.x_min;
    let l1_rho = l1_error(&out.rho, |x| exact.rho(x, t)) / length;
    let l1_j = l1_error(&reconstruct_j(&out), |x| exact.j(x, t)) / length;
    Ok((l1_rho, l1_j))
}

/// Convergence study over the doubling mesh list; writes `converge.csv` with
/// columns N, L1_rho, order_rho, L1_j, order_j (one fewer order than mesh
/// entries).
pub fn run_converge(cfg: &ExperimentConfig) -> Result<ConvergeTable> {
    if cfg.kind != ExperimentKind::Converge {
        return Err(SolverError::InvalidConfig("config is not a converge run".into()));
    }
    let results: Vec<Result<(f64, f64)>> = cfg
        .n_list
        .par_iter()
        .map(|&n| single_accuracy_run(cfg, n))
        .collect();
    let mut errs = Vec::with_capacity(results.len());
    for r in results {
        errs.push(r?);
    }
    let rho_pairs: Vec<(usize, f64)> = cfg.n_list.iter().copied().zip(errs.iter().map(|e| e.0)).collect();
    let j_pairs: Vec<(usize, f64)> = cfg.n_list.iter().copied().zip(errs.iter().map(|e| e.1)).collect();
    let order_rho = order_from_errors(&rho_pairs);
    let order_j = order_from_errors(&j_pairs);

    let mut rows = Vec::new();
    for (i, &n) in cfg.n_list.iter().enumerate() {
        rows.push(ConvergeRow {
            n,
            l1_rho: errs[i].0,
            order_rho: if i == 0 { None } else { order_rho[i - 1] },
            l1_j: errs[i].1,
            order_j: if i == 0 { None } else { order_j[i - 1] },
        });
    }

    fs::create_dir_all(&cfg.output_dir)?;
    let csv_path = cfg.output_dir.join("converge.csv");
    let mut out = String::from("N,L1_rho,order_rho,L1_j,order_j\n");
    for r in &rows {
        let fo = |o: Option<f64>| o.map(fmt_sci).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n,
            fmt_sci(r.l1_rho),
            fo(r.order_rho),
            fmt_sci(r.l1_j),
            fo(r.order_j)
        ));
    }
    fs::write(&csv_path, out)?;
    Ok(ConvergeTable { rows, csv_path })
}

#[derive(Debug, Clone)]
pub struct RiemannReport {
    pub profile_path: PathBuf,
    pub reference_path: Option<PathBuf>,
    /// Coarse-vs-reference L1 distance of rho, when a reference ran.
    pub l1_vs_reference: Option<f64>,
    /// L1 errors against the configured exact solution at T, when present.
    pub l1_exact_rho: Option<f64>,
    pub l1_exact_j: Option<f64>,
    pub final_state: KineticState,
    pub metrics: RunMetrics,
}

fn write_profile(path: &Path, rho: &DGField, j: &DGField) -> Result<()> {
    let mesh = &rho.mesh;
    let mut out = String::from("x,rho,j\n");
    for i in 0..mesh.n_elements {
        let x = mesh.element_center(i);
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_sci(x),
            fmt_sci(rho.eval(x)),
            fmt_sci(j.eval(x))
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Riemann / front-tracking run: march, dump cell-center profiles, and
/// optionally compare against a refined reference and/or the exact solution.
pub fn run_riemann(cfg: &ExperimentConfig) -> Result<RiemannReport> {
    if cfg.kind != ExperimentKind::Riemann {
        return Err(SolverError::InvalidConfig("config is not a riemann run".into()));
    }
    let n = cfg.n_list[0];
    let mesh = Arc::new(Mesh1D::new(cfg.x_min, cfg.x_max, n));
    let basis = Arc::new(Basis::new(cfg.order - 1, cfg.basis_kind));
    let (st, bc) = initial_and_bc(cfg, &mesh, &basis)?;
    let mut solver = KineticSolver::new(scheme_for(cfg, bc)?, mesh, basis)?;
    let (out, metrics) = march_with_metrics(&mut solver, st, cfg.t_final, cfg.record_every)?;
    let j = reconstruct_j(&out);

    fs::create_dir_all(&cfg.output_dir)?;
    let profile_path = cfg.output_dir.join("profile.csv");
    write_profile(&profile_path, &out.rho, &j)?;

    let (reference_path, l1_vs_reference) = if let Some(n_ref) = cfg.reference_n {
        // Refined reference at third order with the same flux family.
        let mut ref_cfg = cfg.clone();
        ref_cfg.order = 3;
        ref_cfg.c_hyper = None;
        ref_cfg.c_diff = None;
        let mesh_ref = Arc::new(Mesh1D::new(cfg.x_min, cfg.x_max, n_ref));
        let basis_ref = Arc::new(Basis::new(2, cfg.basis_kind));
        let (st_ref, bc_ref) = initial_and_bc(&ref_cfg, &mesh_ref, &basis_ref)?;
        let mut ref_solver =
            KineticSolver::new(scheme_for(&ref_cfg, bc_ref)?, mesh_ref, basis_ref)?;
        let ref_out = ref_solver.advance(st_ref, cfg.t_final)?;
        let ref_j = reconstruct_j(&ref_out);
        let path = cfg.output_dir.join("reference.csv");
        write_profile(&path, &ref_out.rho, &ref_j)?;
        let dist = l1_distance(&out.rho, &ref_out.rho);
        (Some(path), Some(dist))
    } else {
        (None, None)
    };

    let (l1_exact_rho, l1_exact_j) = match build_exact(cfg) {
        Ok(exact) => {
            let t = cfg.t_final;
            let length = cfg.x_max - cfg.x_min;
            (
                Some(l1_error(&out.rho, |x| exact.rho(x, t)) / length),
                Some(l1_error(&j, |x| exact.j(x, t)) / length),
            )
        }
        Err(_) => (None, None),
    };

    Ok(RiemannReport {
        profile_path,
        reference_path,
        l1_vs_reference,
        l1_exact_rho,
        l1_exact_j,
        final_state: out,
        metrics,
    })
}

#[derive(Debug, Clone)]
pub struct ApReport {
    /// L1 difference of rho between the kinetic solver and the limiting LDG.
    pub l1_rho_diff: f64,
    /// L1 difference between the reconstructed current and the LDG q.
    pub l1_j_diff: f64,
    pub rho_norm: f64,
    pub csv_path: Option<PathBuf>,
}

/// Run the kinetic scheme at the configured eps and the explicit limiting LDG
/// scheme with identical mesh, dt, and initial rho (kinetic g slaved to the
/// discrete equilibrium); report the L1 gaps at T.
pub fn run_ap_check(cfg: &ExperimentConfig) -> Result<ApReport> {
    if cfg.kind != ExperimentKind::ApCheck {
        return Err(SolverError::InvalidConfig("config is not an ap-check run".into()));
    }
    if cfg.epsilon > 1e-6 {
        return Err(SolverError::InvalidConfig(
            "ap-check needs eps <= 1e-6 to sit in the limit regime".into(),
        ));
    }
    let n = cfg.n_list[0];
    let mesh = Arc::new(Mesh1D::new(cfg.x_min, cfg.x_max, n));
    let basis = Arc::new(Basis::new(cfg.order - 1, cfg.basis_kind));
    let rho0: Box<dyn Fn(f64) -> f64> = match cfg.init {
        InitKind::OffsetSin { offset } => Box::new(move |x: f64| offset + x.sin()),
        InitKind::Constant { value } => Box::new(move |_x: f64| value),
    };
    let rho = project_l2(&*rho0, &mesh, &basis)?;

    let bc = match cfg.bc {
        BcKind::Periodic => BoundaryCondition::Periodic,
        BcKind::InflowOutflow => BoundaryCondition::InflowOutflow {
            left: (rho.eval(cfg.x_min), 0.0),
            right: (rho.eval(cfg.x_max), 0.0),
        },
    };

    let ldg = LdgSolver::new(cfg.model, cfg.flux, bc, cfg.order, mesh.clone(), basis.clone())?;
    let ldg0 = ldg.initial_state(rho.clone())?;

    // Kinetic initial g slaved to the discrete equilibrium relation.
    let q0 = ldg0.q.clone();
    let mut g_minus = q0.clone();
    g_minus.coeffs.mapv_inplace(|c| -c);
    let kin0 = KineticState {
        rho: rho.clone(),
        g_plus: q0,
        g_minus,
        epsilon: cfg.epsilon,
    };

    let scheme = scheme_for(cfg, bc)?;
    let dt = compute_dt(&scheme, mesh.dx);
    let mut kin_solver = KineticSolver::new(scheme, mesh, basis)?;
    let kin_out = kin_solver.advance(kin0, cfg.t_final)?;
    let ldg_out = ldg.advance(ldg0, cfg.t_final, dt)?;

    let l1_rho_diff = l1_distance(&kin_out.rho, &ldg_out.rho);
    let l1_j_diff = l1_distance(&reconstruct_j(&kin_out), &ldg_out.q);
    let rho_norm = l1_norm(&ldg_out.rho);

    fs::create_dir_all(&cfg.output_dir)?;
    let csv_path = cfg.output_dir.join("ap_check.csv");
    let mut out = String::from("l1_rho_diff,l1_j_diff,rho_norm\n");
    out.push_str(&format!(
        "{},{},{}\n",
        fmt_sci(l1_rho_diff),
        fmt_sci(l1_j_diff),
        fmt_sci(rho_norm)
    ));
    fs::write(&csv_path, out)?;

    Ok(ApReport { l1_rho_diff, l1_j_diff, rho_norm, csv_path: Some(csv_path) })
}

/// Emit a gnuplot script plotting the rho column of each profile CSV; errors
/// if a file is missing or has no data rows (nothing is written then).
pub fn emit_plot_script(csvs: &[PathBuf], out_path: &Path) -> Result<PathBuf> {
    if csvs.is_empty() {
        return Err(SolverError::InvalidConfig("no CSV files given to plot".into()));
    }
    for p in csvs {
        let text = fs::read_to_string(p)
            .map_err(|e| SolverError::Io(format!("{}: {e}", p.display())))?;
        let data_rows = text.lines().skip(1).filter(|l| !l.trim().is_empty()).count();
        if data_rows == 0 {
            return Err(SolverError::InvalidConfig(format!(
                "{} has no data rows",
                p.display()
            )));
        }
    }
    let mut script = String::new();
    script.push_str("set datafile separator ','\n");
    script.push_str("set xlabel 'x'\n");
    script.push_str("set ylabel 'rho'\n");
    script.push_str("set key top right\n");
    script.push_str("plot ");
    for (i, p) in csvs.iter().enumerate() {
        if i > 0 {
            script.push_str(", \\\n     ");
        }
        let title = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("series{i}"));
        script.push_str(&format!(
            "'{}' using 1:2 skip 1 with linespoints title '{}'",
            p.display(),
            title
        ));
    }
    script.push('\n');
    let mut f = fs::File::create(out_path)?;
    f.write_all(script.as_bytes())?;
    Ok(out_path.to_path_buf())
}

/// Largest |cell center| whose cell mean exceeds `tol`; the discrete support
/// radius of a compactly supported profile.
pub fn numerical_support_radius(rho: &DGField, tol: f64) -> f64 {
    let mesh = &rho.mesh;
    let mut radius: f64 = 0.0;
    for i in 0..mesh.n_elements {
        let x = mesh.element_center(i);
        if rho.eval(x).abs() > tol {
            radius = radius.max(x.abs());
        }
    }
    radius
}

/// Overshoot beyond [lo, hi], sampled densely inside every element.
pub fn overshoot_metric(rho: &DGField, lo: f64, hi: f64) -> f64 {
    let mesh = &rho.mesh;
    let mut worst: f64 = 0.0;
    for i in 0..mesh.n_elements {
        for p in 0..8 {
            let xi = -0.95 + 1.9 * p as f64 / 7.0;
            let row = rho.coeffs.row(i);
            let v = rho.basis.eval_ref(row.as_slice().unwrap(), xi);
            worst = worst.max(v - hi).max(lo - v);
        }
    }
    worst.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn telegraph_cfg(dir: &Path) -> ExperimentConfig {
        let text = format!(
            "
experiment = converge
model = telegraph
epsilon = 0.5
flux = left-right
order = 1
n_list = 10,20
x_min = -pi
x_max = pi
t_final = 0.1
bc = periodic
exact = telegraph-smooth
output_dir = {}
",
            dir.display()
        );
        ExperimentConfig::from_str(&text).unwrap()
    }

    #[test]
    fn converge_csv_shape_and_determinism() {
        let dir = std::env::temp_dir().join("kdg_test_converge");
        let cfg = telegraph_cfg(&dir);
        let t1 = run_converge(&cfg).unwrap();
        let bytes1 = fs::read(&t1.csv_path).unwrap();
        let t2 = run_converge(&cfg).unwrap();
        let bytes2 = fs::read(&t2.csv_path).unwrap();
        assert_eq!(bytes1, bytes2, "identical config must give identical bytes");
        assert_eq!(t1.rows.len(), 2);
        assert!(t1.rows[0].order_rho.is_none());
        assert!(t1.rows[1].order_rho.is_some());
        let text = String::from_utf8(bytes1).unwrap();
        assert!(text.starts_with("N,L1_rho,order_rho,L1_j,order_j\n"));
        // One order entry fewer than mesh entries.
        let order_cells = t1.rows.iter().filter(|r| r.order_rho.is_some()).count();
        assert_eq!(order_cells, t1.rows.len() - 1);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn telegraph_exact_needs_small_eps() {
        let dir = std::env::temp_dir().join("kdg_test_bigeps");
        let mut cfg = telegraph_cfg(&dir);
        cfg.epsilon = 0.7; // r would be complex
        assert!(matches!(build_exact(&cfg), Err(SolverError::InvalidConfig(_))));
    }

    #[test]
    fn converge_requires_exact_solution() {
        let dir = std::env::temp_dir().join("kdg_test_noexact");
        let mut cfg = telegraph_cfg(&dir);
        cfg.exact = None;
        assert!(matches!(run_converge(&cfg), Err(SolverError::InvalidConfig(_))));
    }

    #[test]
    fn plot_script_emission() {
        let dir = std::env::temp_dir().join("kdg_test_plot");
        fs::create_dir_all(&dir).unwrap();
        let a = dir.join("a.csv");
        let b = dir.join("b.csv");
        fs::write(&a, "x,rho,j\n0,1,0\n").unwrap();
        fs::write(&b, "x,rho,j\n0,2,0\n").unwrap();
        let out = dir.join("plot.gp");
        emit_plot_script(&[a.clone(), b.clone()], &out).unwrap();
        let script = fs::read_to_string(&out).unwrap();
        assert_eq!(script.matches("using 1:2").count(), 2);

        // Empty CSV: error and no script written.
        let empty = dir.join("empty.csv");
        fs::write(&empty, "x,rho,j\n").unwrap();
        let out2 = dir.join("plot2.gp");
        assert!(emit_plot_script(&[empty], &out2).is_err());
        assert!(!out2.exists());
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn ap_check_smoke() {
        let dir = std::env::temp_dir().join("kdg_test_ap");
        let text = format!(
            "
experiment = ap-check
model = telegraph
epsilon = 1e-6
flux = left-right
order = 1
n = 16
x_min = -pi
x_max = pi
t_final = 0.01
bc = periodic
output_dir = {}
",
            dir.display()
        );
        let cfg = ExperimentConfig::from_str(&text).unwrap();
        let rep = run_ap_check(&cfg).unwrap();
        assert!(rep.l1_rho_diff <= 1e-5 * rep.rho_norm);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn ap_check_rejects_large_eps() {
        let dir = std::env::temp_dir().join("kdg_test_ap2");
        let text = format!(
            "
experiment = ap-check
model = telegraph
epsilon = 1e-2
flux = left-right
order = 1
n = 8
x_min = -pi
x_max = pi
t_final = 0.01
output_dir = {}
",
            dir.display()
        );
        let cfg = ExperimentConfig::from_str(&text).unwrap();
        assert!(run_ap_check(&cfg).is_err());
    }
}
