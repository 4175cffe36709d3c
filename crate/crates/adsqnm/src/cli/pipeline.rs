//! Stage execution: horizon → assemble → solve → scan → quasimodes → match → verify, plus the
//! characteristic flow and the upper-half-plane probe.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::energy::{
    identity_refinement, indicial_roots, twisting_potential, upper_bound_probe, verify_identity, horizon_integrand,
    FluxReport,
};
use crate::geometry::{delta_r, KerrAds};
use crate::numerics::C64;
use crate::operator::{assemble, build_grid, write_dump, write_modes, DiscreteOperator, DumpHeader};
use crate::quasimodes::{residual_sequence, QuasimodeSequence};
use crate::spectra::{match_pole, scan_rectangle, solve_qnf, ScanSpec, Spectrum, SpectraError};
use crate::symbol_flow::{integrate, sigma_plus_seeds, DichotomyOutcome, FlowTrajectory, FlowWindow};

use super::config::{RunConfig, Stage};
use super::manifest::{RunManifest, StageRecord, StageStatus};
use super::tables::{self, num, Table};
use super::CliError;

/// Overrides that do not belong in the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    /// Worker threads; the rayon default when absent.
    pub workers: Option<usize>,
}

/// Output directory: explicit flag, then `ADSQNM_OUT`, then the config.
pub fn resolve_output_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("ADSQNM_OUT").filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| cfg.output_dir.clone())
}

/// Where stage outputs go.
struct Sink {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Sink {
    fn emit(&mut self, table: &Table, relative: Option<&str>) -> StageResult {
        let rel = table.write(&self.dir, relative).map_err(err)?;
        self.manifest.outputs.push(rel);
        Ok(())
    }

    fn note(&mut self, key: &str, value: f64) {
        self.manifest.summary.insert(key.to_string(), value);
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    out: Sink,
    geom: Option<KerrAds>,
    op: Option<DiscreteOperator>,
    fine: Option<DiscreteOperator>,
    spectrum: Option<Spectrum>,
    sequence: Option<QuasimodeSequence>,
}

type StageResult = Result<(), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

impl Context<'_> {
    fn geom(&self) -> &KerrAds {
        self.geom.as_ref().expect("horizon stage ran")
    }

    fn run_stage(&mut self, stage: Stage) -> StageResult {
        match stage {
            Stage::Horizon => self.horizon(),
            Stage::Assemble => self.assemble(),
            Stage::Solve => self.solve(),
            Stage::Scan => self.scan(),
            Stage::Quasimodes => self.quasimodes(),
            Stage::Match => self.matching(),
            Stage::Verify => self.verify(),
            Stage::Flow => self.flow(),
            Stage::Probe => self.probe(),
        }
    }

    fn horizon(&mut self) -> StageResult {
        let geom = KerrAds::with_delta_factor(self.cfg.params, self.cfg.grid.delta_factor).map_err(err)?;
        let h = geom.horizon;
        self.out.manifest.horizon = Some(h);
        self.out.note("r_plus", h.r_plus);
        self.out.note("surface_gravity", h.surface_gravity);
        self.out.note("delta_r_at_r_plus", delta_r(&geom.params, h.r_plus));
        self.geom = Some(geom);
        Ok(())
    }

    fn assemble(&mut self) -> StageResult {
        let g = &self.cfg.grid;
        let geom = *self.geom();
        let k = self.cfg.params.k;
        let grid = build_grid(&geom, g.n_radial, g.n_angular).map_err(err)?;
        let op = assemble(&geom, &grid, &self.cfg.bc, k).map_err(err)?;
        let fine_n = g.fine_n_radial.unwrap_or(2 * g.n_radial);
        let fgrid = build_grid(&geom, fine_n, g.n_angular).map_err(err)?;
        let fine = assemble(&geom, &fgrid, &self.cfg.bc, k).map_err(err)?;
        self.out.note("operator_dim", op.dim() as f64);
        if g.dump_operator {
            write_dump(&op, &self.out.dir.join("operator.bin")).map_err(err)?;
            self.out.manifest.outputs.push("operator.bin".into());
        }
        self.op = Some(op);
        self.fine = Some(fine);
        Ok(())
    }

    fn solve(&mut self) -> StageResult {
        let op = self.op.as_ref().expect("assemble ran");
        let spectrum = match solve_qnf(op, &self.cfg.solve, self.fine.as_ref()) {
            Ok(s) => s,
            Err(SpectraError::NoEigenvaluesInRegion) => {
                Spectrum { entries: Vec::new(), n_radial: self.cfg.grid.n_radial, n_angular: self.cfg.grid.n_angular, k: self.cfg.params.k }
            }
            Err(e) => return Err(err(e)),
        };
        let mut t = Table::new(tables::QNF);
        for e in &spectrum.entries {
            t.push(vec![
                e.ell_hint.map(|l| l.to_string()).unwrap_or_default(),
                spectrum.k.to_string(),
                num(e.lambda.re),
                num(e.lambda.im),
                num(e.residual),
                e.converged.to_string(),
            ]);
        }
        self.out.emit(&t, None)?;
        let converged: Vec<(C64, &[C64])> = spectrum.converged().map(|e| (e.lambda, e.mode.as_slice())).collect();
        self.out.note("qnf_count", spectrum.entries.len() as f64);
        self.out.note("qnf_converged", converged.len() as f64);
        if !converged.is_empty() {
            write_modes(&DumpHeader::from_operator(op), &converged, &self.out.dir.join("qnf_modes.bin")).map_err(err)?;
            self.out.manifest.outputs.push("qnf_modes.bin".into());
        }
        self.spectrum = Some(spectrum);
        Ok(())
    }

    fn default_scan(&self) -> ScanSpec {
        let kappa = self.geom().horizon.surface_gravity;
        ScanSpec {
            re_min: 1.0,
            re_max: 10.0,
            h: 1.0,
            c_minus: -0.45 * kappa,
            c_plus: 1.0,
            n_re: 37,
            n_im: 9,
            candidate_factor: 10.0,
        }
    }

    fn scan(&mut self) -> StageResult {
        let spec = self.cfg.scan.unwrap_or_else(|| self.default_scan());
        let op = self.op.as_ref().expect("assemble ran");
        let scan = scan_rectangle(op, &spec).map_err(err)?;
        let mut t = Table::new(tables::SCAN);
        for s in &scan.samples {
            t.push(vec![num(s.z.re), num(s.z.im), num(s.inv_sigma_min)]);
        }
        self.out.note("scan_candidates", scan.candidates.len() as f64);
        self.out.emit(&t, None)
    }

    fn quasimodes(&mut self) -> StageResult {
        let q = &self.cfg.quasimodes;
        let geom = *self.geom();
        let seq = residual_sequence(&geom, q.ell_min..=q.ell_max, &self.cfg.bc, &q.to_config()).map_err(err)?;
        let mut t = Table::new(tables::QUASIMODES);
        let mut modes = Vec::new();
        for b in seq.branches.iter().filter(|b| b.resolved) {
            let m = &b.quasimode;
            t.push(vec![m.ell.to_string(), num(m.lambda_sharp), num(m.residual), num(m.r1), num(m.transition_width)]);
            modes.push((C64::new(m.lambda_sharp, 0.0), m.vector.as_slice()));
        }
        self.out.emit(&t, None)?;
        let grid = build_grid(&geom, q.n_radial_full, q.n_angular).map_err(err)?;
        write_modes(&DumpHeader::for_grid(&geom, &grid, 0), &modes, &self.out.dir.join("quasimode_vectors.bin")).map_err(err)?;
        self.out.manifest.outputs.push("quasimode_vectors.bin".into());
        self.out.note("quasimode_branches", seq.branches.len() as f64);
        self.out.note("quasimode_resolved", modes.len() as f64);
        self.out.note("residual_log_slope", seq.residual_fit.slope);
        self.out.note("frequency_slope", seq.frequency_fit.slope);
        self.sequence = Some(seq);
        Ok(())
    }

    fn matching(&mut self) -> StageResult {
        let spectrum = self.spectrum.as_ref().expect("solve ran");
        let seq = self.sequence.as_ref().expect("quasimodes ran");
        let mut t = Table::new(tables::MATCH);
        let mut matched = 0;
        for q in seq.resolved() {
            let (pole, distance) = match match_pole(spectrum, q.lambda_sharp, q.residual, &self.cfg.match_window) {
                Ok(m) => {
                    matched += 1;
                    (m.found, m.distance)
                }
                Err(SpectraError::NotFound { .. }) => (None, f64::NAN),
                Err(e) => return Err(err(e)),
            };
            let (re, im, d) = match pole {
                Some(z) => (num(z.re), num(z.im), num(distance)),
                None => (String::new(), String::new(), String::new()),
            };
            t.push(vec![q.ell.to_string(), num(q.lambda_sharp), num(q.residual), re, im, d]);
        }
        self.out.note("matched", matched as f64);
        self.out.emit(&t, None)
    }

    fn verify(&mut self) -> StageResult {
        let cfg = self.cfg;
        let v = &cfg.verify;
        let geom = *self.geom();
        let op = self.op.as_ref().expect("assemble ran");
        let grid = &op.layout().map_err(err)?.grid;
        let k = cfg.params.k;
        let mut energy = Table::new(tables::ENERGY);
        let field = match v.field {
            crate::energy::KillingField::T => "T",
            crate::energy::KillingField::K => "K",
        };
        let row = |case: &str, lambda: C64, r: &FluxReport| {
            vec![
                case.to_string(),
                field.to_string(),
                r.n_radial.to_string(),
                num(lambda.re),
                num(lambda.im),
                num(r.time_derivative_term),
                num(r.boundary_y_term),
                num(r.horizon_term),
                num(r.bulk_term),
                num(r.residual),
                num(r.mode_residual),
                r.non_converged.to_string(),
            ]
        };
        let least_damped = self
            .spectrum
            .as_ref()
            .and_then(|s| s.converged().max_by(|a, b| a.lambda.im.total_cmp(&b.lambda.im)).cloned());
        if let Some(e) = &least_damped {
            let r = verify_identity(&geom, grid, k, &e.mode, e.lambda, &cfg.bc, v.field).map_err(err)?;
            energy.push(row("qnf", e.lambda, &r));
            let hmin = horizon_integrand(&geom, grid, k, &e.mode, e.lambda).into_iter().fold(f64::INFINITY, f64::min);
            self.out.note("qnf_identity_residual", r.residual);
            self.out.note("qnf_horizon_integrand_min", hmin);
        }
        let lm = C64::new(v.manufactured_lambda[0], v.manufactured_lambda[1]);
        let (coarse, fine) =
            identity_refinement(&geom, grid.n_radial, grid.n_angular, lm, &cfg.bc, v.field).map_err(err)?;
        energy.push(row("manufactured", lm, &coarse));
        energy.push(row("manufactured", lm, &fine));
        self.out.note("manufactured_residual_coarse", coarse.residual);
        self.out.note("manufactured_residual_fine", fine.residual);
        self.out.emit(&energy, None)?;

        let tw = twisting_potential(&geom, grid, cfg.params.nu).map_err(err)?;
        let mut twist = Table::new(tables::TWIST);
        twist.push(vec![
            num(tw.nu),
            num(tw.twist_exponent),
            tw.decay_power.map(num).unwrap_or_default(),
            num(tw.max_abs_shifted),
        ]);
        self.out.emit(&twist, None)?;

        let mut ind = Table::new(tables::INDICIAL);
        let mut push = |kk: i32, lambda: C64| {
            let r = indicial_roots(&geom, lambda, kk);
            ind.push(vec![
                kk.to_string(),
                num(lambda.re),
                num(lambda.im),
                num(r.s_value.re),
                num(r.s_value.im),
                num(r.roots[1].re),
                num(r.roots[1].im),
            ]);
        };
        for &kk in &v.indicial_k {
            for z in &v.indicial_lambdas {
                push(kk, C64::new(z[0], z[1]));
            }
        }
        if let Some(s) = &self.spectrum {
            for e in s.converged() {
                push(k, e.lambda);
            }
        }
        self.out.emit(&ind, None)
    }

    fn flow(&mut self) -> StageResult {
        let f = &self.cfg.flow;
        let geom = *self.geom();
        let seeds = sigma_plus_seeds(&geom, f.n_seeds, geom.delta, (f.z_min, f.z_max), self.cfg.seed);
        let window = FlowWindow::horizon(&geom, geom.delta);
        let runs: Vec<(FlowTrajectory, FlowTrajectory)> = seeds
            .par_iter()
            .map(|s| Ok((integrate(&geom, s, window, f.t_max)?, integrate(&geom, s, window, -f.t_max)?)))
            .collect::<Result<_, crate::symbol_flow::FlowError>>()
            .map_err(err)?;
        let mut summary = Table::new(tables::FLOW_SUMMARY);
        let (mut holds, mut drift, mut raw) = (0usize, 0.0_f64, 0.0_f64);
        for (i, (s, (fwd, bwd))) in seeds.iter().zip(&runs).enumerate() {
            let o = DichotomyOutcome::from_pair(fwd, bwd);
            holds += o.holds() as usize;
            drift = drift.max(o.max_scaled_drift / (1.0 + crate::symbol_flow::principal_symbol(&geom, s).abs()));
            raw = raw.max(o.max_drift);
            summary.push(vec![
                i.to_string(),
                num(s.r),
                num(s.theta),
                num(s.z),
                o.forward.as_str().to_string(),
                o.backward.as_str().to_string(),
                o.escapes.to_string(),
                o.source_then_leaves.to_string(),
                num(o.max_scaled_drift),
                num(o.max_drift),
            ]);
            for (tr, dir) in [(fwd, "forward"), (bwd, "backward")] {
                let t = trajectory_table(tr);
                self.out.emit(&t, Some(&format!("flow/seed_{i:03}_{dir}.csv")))?;
            }
        }
        self.out.emit(&summary, None)?;
        self.out.note("flow_seeds", seeds.len() as f64);
        self.out.note("flow_dichotomy_fraction", holds as f64 / seeds.len().max(1) as f64);
        self.out.note("flow_max_relative_scaled_drift", drift);
        self.out.note("flow_max_raw_drift", raw);
        Ok(())
    }

    fn probe(&mut self) -> StageResult {
        let p = &self.cfg.probe;
        let geom = *self.geom();
        let grid = build_grid(&geom, self.cfg.grid.n_radial, self.cfg.grid.n_angular).map_err(err)?;
        let ops = p
            .k_values
            .iter()
            .map(|&k| assemble(&geom, &grid, &self.cfg.bc, k))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let table = upper_bound_probe(&ops, &p.sample_points(), p.strip).map_err(err)?;
        let mut t = Table::new(tables::PROBE);
        for r in &table.rows {
            t.push(vec![num(r.lambda.re), num(r.lambda.im), num(r.resolvent_norm), num(r.product)]);
        }
        self.out.note("probe_spread", table.spread);
        self.out.note("probe_skipped", table.skipped as f64);
        self.out.emit(&t, None)
    }
}

fn trajectory_table(tr: &FlowTrajectory) -> Table {
    let mut t = Table::new(tables::TRAJECTORY);
    let n = tr.samples.len();
    for (i, s) in tr.samples.iter().enumerate() {
        let p = &s.point;
        let exit = if i + 1 == n { tr.exit_reason.as_str().to_string() } else { String::new() };
        t.push(vec![num(s.t), num(p.r), num(p.theta), num(p.xi_r), num(p.xi_theta), num(p.xi_phi), num(s.p_value), exit]);
    }
    t
}

/// Execute every stage of `cfg` (with dependencies) and write the manifest.
///
/// A failing stage that is not listed in `optional_stages` makes the run a
/// [`CliError::StageFailure`]; the manifest is written either way.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunManifest, CliError> {
    cfg.check()?;
    match opts.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
            pool.install(|| run_stages(cfg, opts))
        }
        None => run_stages(cfg, opts),
    }
}

/// Load, validate and run a config file.
pub fn run_path(path: &Path, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let cfg = RunConfig::load(path)?;
    run(&cfg, opts)
}

fn run_stages(cfg: &RunConfig, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let dir = opts.output_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&dir)?;
    let mut ctx = Context {
        cfg,
        out: Sink { manifest: RunManifest::new(cfg, &dir), dir },
        geom: None,
        op: None,
        fine: None,
        spectrum: None,
        sequence: None,
    };
    let mut first_failure: Option<(String, String)> = None;
    for stage in cfg.stage_plan() {
        let optional = cfg.optional_stages.contains(&stage);
        let requested = cfg.pipeline.contains(&stage);
        let blocked = stage.dependencies().iter().find(|d| ctx.out.manifest.status(**d) != Some(StageStatus::Ok));
        let start = Instant::now();
        let (status, message) = match blocked {
            Some(d) => (StageStatus::Skipped, Some(format!("dependency {} did not succeed", d.as_str()))),
            None => {
                log::info!("stage {}", stage.as_str());
                match ctx.run_stage(stage) {
                    Ok(()) => (StageStatus::Ok, None),
                    Err(m) => {
                        log::error!("stage {} failed: {m}", stage.as_str());
                        (StageStatus::Failed, Some(m))
                    }
                }
            }
        };
        if status != StageStatus::Ok {
            if optional {
                ctx.out.manifest.partial_success = true;
            } else if first_failure.is_none() {
                first_failure = Some((stage.as_str().to_string(), message.clone().unwrap_or_default()));
            }
        }
        ctx.out.manifest.stages.push(StageRecord {
            stage,
            status,
            wall_seconds: start.elapsed().as_secs_f64(),
            requested,
            optional,
            message,
        });
    }
    let missing = ctx.out.manifest.missing_outputs();
    if first_failure.is_none() && !missing.is_empty() {
        first_failure = Some(("outputs".into(), format!("missing or empty: {}", missing.join(", "))));
    }
    let manifest = ctx.out.manifest;
    manifest.save()?;
    match first_failure {
        Some((stage, message)) => Err(CliError::StageFailure { stage, message, manifest: Box::new(manifest) }),
        None => Ok(manifest),
    }
}
