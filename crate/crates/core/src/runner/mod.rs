//! Scene ingestion and experiment orchestration behind the command line.

pub mod acceptance;
pub mod report;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::modes::aps::lagrangian_report;
use crate::scene::{shipped, Overrides, Scene, SHIPPED};
use crate::spectral::{kernel_of, Definiteness, SolverOptions};
use crate::splicing::{gap_experiment, small_eigenvalue_scan, splice_report, splice_setup};

use report::{to_value, write_csv, write_json, Meta};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Cohomology,
    Spectrum,
    Weyl,
    Modes,
    Splice,
    Scan,
    Gap,
    All,
}

impl Command {
    pub const ALL: [Command; 8] =
        [Command::Cohomology, Command::Spectrum, Command::Weyl, Command::Modes, Command::Splice, Command::Scan, Command::Gap, Command::All];

    pub fn name(self) -> &'static str {
        match self {
            Command::Cohomology => "cohomology",
            Command::Spectrum => "spectrum",
            Command::Weyl => "weyl",
            Command::Modes => "modes",
            Command::Splice => "splice",
            Command::Scan => "scan",
            Command::Gap => "gap",
            Command::All => "all",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::Parse(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Scene file; `all` falls back to the shipped scenes when absent.
    pub scene: Option<PathBuf>,
    pub out: PathBuf,
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    /// Human-readable lines for the terminal.
    pub lines: Vec<String>,
}

/// Process exit code of an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) => 2,
        Error::Validation(_) => 3,
        Error::Io(_) => 4,
        _ => 5,
    }
}

struct Context {
    scene: Scene,
    meta: Meta,
    out: PathBuf,
    opts: SolverOptions,
}

impl Context {
    fn new(scene: Scene, out: &Path) -> Self {
        let meta = Meta::new(&scene.name, &scene.hash(), scene.params.seed);
        let opts = SolverOptions { seed: scene.params.seed, tol: scene.params.tol, ..Default::default() };
        Context { scene, meta, out: out.to_path_buf(), opts }
    }

    fn json(&self, name: &str, command: Command, v: Value, o: &mut RunOutcome) -> Result<()> {
        o.artifacts.push(write_json(&self.out, name, &self.meta, command.name(), v)?);
        Ok(())
    }

    fn csv(&self, name: &str, body: &str, o: &mut RunOutcome) -> Result<()> {
        o.artifacts.push(write_csv(&self.out, name, &self.meta, body)?);
        Ok(())
    }
}

pub fn load_scene(path: &Path, overrides: &Overrides) -> Result<Scene> {
    let mut scene = Scene::load(path)?;
    scene.apply(overrides)?;
    Ok(scene)
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<RunOutcome> {
    let mut o = RunOutcome::default();
    if cmd == Command::All {
        return run_all(cfg);
    }
    let path = cfg.scene.as_ref().ok_or_else(|| Error::Validation(format!("`{}` needs --scene", cmd.name())))?;
    let cx = Context::new(load_scene(path, &cfg.overrides)?, &cfg.out);
    dispatch(cmd, &cx, &mut o)?;
    Ok(o)
}

fn dispatch(cmd: Command, cx: &Context, o: &mut RunOutcome) -> Result<()> {
    match cmd {
        Command::Cohomology => cohomology(cx, o),
        Command::Spectrum => spectrum(cx, o),
        Command::Weyl => weyl(cx, o),
        Command::Modes => modes(cx, o),
        Command::Splice => splice(cx, o),
        Command::Scan => scan(cx, o),
        Command::Gap => gap(cx, o),
        Command::All => unreachable!("handled by run_all"),
    }
}

fn cohomology(cx: &Context, o: &mut RunOutcome) -> Result<()> {
    let coh = cx.scene.cochain_system()?.cohomology();
    let ss = coh.spectral_sequence();
    let betti = coh.predicted_betti_all();
    o.lines.push(format!("predicted betti {betti:?} (h0 {:?}, h1 {:?})", coh.h0, coh.h1));
    let v = json!({ "h0": coh.h0, "h1": coh.h1, "predicted_betti": betti, "e2": ss.e2, "e1": ss.e1, "rank": coh.rank });
    cx.json("cohomology.json", Command::Cohomology, v, o)
}

fn spectrum(cx: &Context, o: &mut RunOutcome) -> Result<()> {
    let p = &cx.scene.params;
    let geom = cx.scene.geometry()?;
    let c = geom.assemble(p.r)?;
    let expected = cx.scene.cochain_system()?.cohomology().total();
    let ops = c.operators();
    let (lap, lres) = kernel_of(&ops.laplacian, Definiteness::PositiveSemidefinite, expected, &cx.opts)?;
    let (d, dres) = kernel_of(&ops.d, Definiteness::Indefinite, expected, &cx.opts)?;
    o.lines.push(format!("r = {}: kernel_dim = {} (D: {}, predicted {expected})", p.r, lap.dim, d.dim));
    let v = json!({
        "r": p.r,
        "kernel_dim": lap.dim,
        "kernel_dim_d": d.dim,
        "predicted_total": expected,
        "laplacian": { "kernel": lap, "eigenvalues": lres.values, "residuals": lres.residuals, "diagnostics": lres.diagnostics },
        "gauss_bonnet": { "kernel": d, "eigenvalues": dres.values, "residuals": dres.residuals, "diagnostics": dres.diagnostics },
        "complex": to_value(&c.stats())?,
    });
    cx.json("spectrum.json", Command::Spectrum, v, o)
}

fn weyl(cx: &Context, o: &mut RunOutcome) -> Result<()> {
    let mut fits = Vec::new();
    for (cs, spec) in cx.scene.cross_sections.iter().zip(cx.scene.spectra_by_id()?) {
        let k = (4 * (cs.n_theta / 4)).min(200);
        let fit = spec.weyl_fit(k)?;
        let oracle = spec.fourier_counting_constant();
        o.lines
            .push(format!("{}: exponent {:.4}, counting constant {:.4} (oracle {oracle:.4})", cs.id, fit.exponent, fit.counting_constant));
        cx.csv(&format!("cross_section_{}.csv", cs.id), &spec.spectrum_csv(), o)?;
        fits.push(json!({
            "id": cs.id,
            "k_modes": k,
            "fit": fit,
            "fourier_counting_constant": oracle,
            "kernel_dim": spec.kernel_dim(),
            "gap": spec.gap(),
        }));
    }
    cx.json("weyl.json", Command::Weyl, json!({ "cross_sections": fits }), o)
}

fn modes(cx: &Context, o: &mut RunOutcome) -> Result<()> {
    let p = &cx.scene.params;
    let geom = cx.scene.geometry()?;
    let setup = splice_setup(&geom, &cx.scene.spectra()?, p.r, &cx.opts)?;
    let reports: Vec<_> = setup.kernels.iter().map(lagrangian_report).collect::<Result<_>>()?;
    let sp = &setup.space;
    let pairing = reports.iter().map(|r| r.max_pairing).fold(0.0, f64::max);
    let exchange = reports.iter().map(|r| r.star_exchange_gap).fold(0.0, f64::max);
    o.lines.push(format!(
        "dim W = {} (L2 {}, La {}, Lr {}), pairing {pairing:.1e}, exchange gap {exchange:.1e}",
        sp.dim_w, sp.dim_l2, sp.dim_la, sp.dim_lr
    ));
    let v = json!({
        "r": p.r,
        "dim_L2": setup.kernels.iter().map(|k| k.l2_dim()).collect::<Vec<_>>(),
        "dim_Lv": reports.iter().map(|r| r.dim_lv).collect::<Vec<_>>(),
        "dim_W": sp.dim_w,
        "dim_ker_inf": sp.dim_l2,
        "dim_La": sp.dim_la,
        "dim_Lr": sp.dim_lr,
        "lagrangian_max_pairing": pairing,
        "star_exchange_gap": exchange,
        "matching_mismatch": sp.mismatch,
        "stars": reports,
    });
    cx.json("modes.json", Command::Modes, v, o)
}

fn splice(cx: &Context, o: &mut RunOutcome) -> Result<()> {
    let p = &cx.scene.params;
    let rep = splice_report(&cx.scene.geometry()?, &cx.scene.spectra()?, &p.r_grid, &cx.opts)?;
    let worst = rep.rows.iter().map(|r| r.ratio / r.bound).fold(0.0, f64::max);
    let min_sv = rep.gram_min_sv.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    o.lines.push(format!("max ratio/bound {worst:.2e}, min Gram singular value {min_sv:.6}, rate {:?}", rep.fitted_rate));
    cx.csv("splice.csv", &rep.csv(), o)?;
    let v = json!({
        "gap": rep.gap,
        "floor": rep.floor,
        "fitted_rate": rep.fitted_rate,
        "gram_min_sv": rep.gram_min_sv,
        "dim_w": rep.dim_w,
        "max_ratio_over_bound": worst,
    });
    cx.json("splice.json", Command::Splice, v, o)
}

fn scan(cx: &Context, o: &mut RunOutcome) -> Result<()> {
    let p = &cx.scene.params;
    let expected = cx.scene.cochain_system()?.cohomology().total();
    let rep = small_eigenvalue_scan(&cx.scene.geometry()?, &p.r_grid, p.epsilon, expected, &cx.opts)?;
    o.lines.push(format!("{} violations, slope {:?}", rep.violations, rep.slope));
    cx.csv("scan.csv", &rep.csv(), o)?;
    cx.json("scan.json", Command::Scan, to_value(&rep)?, o)
}

fn gap(cx: &Context, o: &mut RunOutcome) -> Result<()> {
    let p = &cx.scene.params;
    let rows = gap_experiment(&cx.scene.geometry()?, &cx.scene.spectra()?, &p.r_grid, p.gap_s, &cx.opts)?;
    let mut body = String::from("r,delta\n");
    for r in &rows {
        body.push_str(&format!("{},{:.6e}\n", r.r, r.delta));
        o.lines.push(format!("r = {}: delta = {:.3e}", r.r, r.delta));
    }
    cx.csv("gap.csv", &body, o)?;
    let v = json!({ "s": p.gap_s, "rows": rows, "converging": acceptance::gap_rows_ok(&rows) });
    cx.json("gap.json", Command::Gap, v, o)
}

/// The acceptance suite on the shipped scenes, plus every command on the
/// given scene when one is passed.
fn run_all(cfg: &RunConfig) -> Result<RunOutcome> {
    let mut o = RunOutcome::default();
    let seed = cfg.overrides.seed.unwrap_or_else(|| crate::scene::SceneParams::default().seed);
    if let Some(path) = &cfg.scene {
        let cx = Context::new(load_scene(path, &cfg.overrides)?, &cfg.out);
        for cmd in &Command::ALL[..7] {
            dispatch(*cmd, &cx, &mut o)?;
        }
    }
    let mut suite = acceptance::Suite::new(seed);
    let outcomes = suite.run_all();
    o.lines.extend(outcomes.iter().map(|c| c.line()));
    let hashes: Vec<String> = SHIPPED.iter().map(|n| shipped(n).map(|s| s.hash())).collect::<Result<_>>()?;
    let meta = Meta::new("shipped", &hashes.join("+"), seed);
    let failed = outcomes.iter().filter(|c| !c.pass).count();
    let v = json!({ "criteria": outcomes, "failed": failed });
    o.artifacts.push(write_json(&cfg.out, "acceptance.json", &meta, "all", v)?);
    o.exit_code = i32::from(failed > 0);
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!(matches!("plot".parse::<Command>(), Err(Error::Parse(_))));
    }

    #[test]
    fn commands_need_a_scene_except_all() {
        let cfg = RunConfig { scene: None, out: std::env::temp_dir(), overrides: Overrides::default() };
        let err = run(Command::Spectrum, &cfg).unwrap_err();
        assert_eq!(exit_code(&err), 3);
    }

    #[test]
    fn cohomology_report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("theta.json");
        std::fs::write(&path, serde_json::to_string(&shipped("theta").unwrap()).unwrap()).unwrap();
        let cfg =
            RunConfig { scene: Some(path), out: dir.path().join("out"), overrides: Overrides { seed: Some(3), ..Default::default() } };
        let o = run(Command::Cohomology, &cfg).unwrap();
        assert_eq!(o.exit_code, 0);
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&o.artifacts[0]).unwrap()).unwrap();
        assert_eq!(v["result"]["predicted_betti"], json!([1, 4, 1]));
        assert_eq!(v["result"]["e2"], json!([[1, 2, 0], [2, 1, 0]]));
        assert_eq!(v["meta"]["seed"], 3);
    }
}
