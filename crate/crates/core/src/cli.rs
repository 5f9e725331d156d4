//! Command implementations behind the `kplab` binary. Every command is
//! deterministic given its configuration and seed; only the manifest records
//! wall-clock time.

use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::checks::{run_check, CheckParams, CheckReport};
use crate::data::{gaussian_derivative, sector_indicator};
use crate::decomposition::{lqlp_norm, NormParams};
use crate::error::{KpError, Result};
use crate::illposed::{build_phi, growth_sweep, phi_norms, resonance_range, F3Quadrature, IllposedParams};
use crate::report::{Manifest, OutDir, Format, Table};
use crate::scattering::{scatter_report, small_datum};
use crate::solver::{evolve_report, picard_iterate_with, PicardOptions, SimConfig};
use crate::spaces::{comb_scales, divergent_sequence_check, sector_sum_decay, zero_mean_blowup, GaussianDatum};
use crate::spectral::{dyadic_exponent, snapshot, GridSpec, SpectralField};

/// `true` when every tolerance the command checks was met.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub pass: bool,
    pub summary: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub modes: [usize; 3],
    pub lengths: [f64; 3],
    #[serde(default = "yes")]
    pub dealias: bool,
}

fn yes() -> bool {
    true
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { modes: [32; 3], lengths: [4.0 * std::f64::consts::PI; 3], dealias: true }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::new(self.modes, self.lengths, self.dealias)
    }
}

/// `(q, p, b)` with `q = null` meaning `q = inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default = "p_default")]
    pub p: f64,
    #[serde(default = "b_default")]
    pub b: f64,
}

fn p_default() -> f64 {
    1.5
}
fn b_default() -> f64 {
    0.9
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig { q: None, p: p_default(), b: b_default() }
    }
}

impl NormConfig {
    pub fn build(&self) -> Result<NormParams> {
        NormParams::new(self.q.unwrap_or(f64::INFINITY), self.p, self.b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatumSpec {
    /// `amplitude * d_x exp(-sum (x - c)^2 / (2 w^2))`.
    Gaussian { widths: [f64; 3], center: Option<[f64; 3]>, amplitude: f64 },
    /// Indicator of `Gamma_{lam, lam k}`.
    Sector { lam: f64, k: [i64; 2] },
    /// Random localized datum of sector norm `eps`.
    Small { seed: u64, member: u64, eps: f64 },
    Snapshot { path: PathBuf },
}

impl Default for DatumSpec {
    fn default() -> Self {
        DatumSpec::Gaussian { widths: [1.0; 3], center: None, amplitude: 0.3 }
    }
}

impl DatumSpec {
    pub fn build(&self, g: &GridSpec, np: &NormParams) -> Result<SpectralField> {
        Ok(match self {
            DatumSpec::Gaussian { widths, center, amplitude } => {
                if !widths.iter().all(|w| *w > 0.0) {
                    return Err(KpError::Config(format!("widths {widths:?} must be positive")));
                }
                let l = g.lengths();
                let c = center.unwrap_or([l[0] / 2.0, l[1] / 2.0, l[2] / 2.0]);
                gaussian_derivative(g, *widths, c, *amplitude)
            }
            DatumSpec::Sector { lam, k } => {
                let e = dyadic_exponent(*lam)?;
                let u = sector_indicator(g, e, *k);
                if u.coeff_energy() == 0.0 {
                    return Err(KpError::Config(format!("sector lam = {lam}, k = {k:?} holds no lattice modes")));
                }
                u
            }
            DatumSpec::Small { seed, member, eps } => small_datum(g, *seed, *member, *eps, np),
            DatumSpec::Snapshot { path } => {
                let u = snapshot::load(path, g.dealias)?;
                if u.grid.dims() != g.dims() || u.grid.lengths() != g.lengths() {
                    return Err(KpError::Config(format!("snapshot {} does not match the configured grid", path.display())));
                }
                u
            }
        })
    }
}

fn norm_row(u: &SpectralField) -> Result<serde_json::Value> {
    let mut rows = vec![];
    for (q, p) in [(f64::INFINITY, 1.5), (f64::INFINITY, 2.0), (2.0, 2.0), (f64::INFINITY, 4.0)] {
        rows.push(json!({ "q": if q.is_infinite() { json!("inf") } else { json!(q) }, "p": p, "norm": lqlp_norm(u, &NormParams::qp(q, p)?) }));
    }
    Ok(json!({ "l2": u.l2_norm(), "lqlp": rows }))
}

/// Writes a snapshot (or, for the two-box datum, its box description) and
/// returns the norm report.
pub fn make_data(spec: &MakeData, out: &Path) -> Result<serde_json::Value> {
    match spec {
        MakeData::Illposed { mu, lam, p } => {
            let ip = IllposedParams { mu: *mu, lam: *lam, p: *p, coupling: false };
            let (b1, b2) = build_phi(&ip)?;
            let n = phi_norms(&ip)?;
            let v = json!({ "phi1": b1, "phi2": b2, "norms": n });
            std::fs::write(out, crate::report::to_json(&v)? + "\n")?;
            Ok(v)
        }
        MakeData::Field { grid, datum } => {
            let g = grid.build()?;
            let u = datum.build(&g, &NormParams::qp(f64::INFINITY, 1.5)?)?;
            snapshot::save(out, &u)?;
            norm_row(&u)
        }
    }
}

#[derive(Clone, Debug)]
pub enum MakeData {
    Field { grid: GridConfig, datum: DatumSpec },
    Illposed { mu: f64, lam: f64, p: f64 },
}

pub fn verify(name: &str, params: &CheckParams) -> Result<CheckReport> {
    run_check(name, params)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimRun {
    pub grid: GridConfig,
    pub dt: f64,
    pub horizon: f64,
    pub samples_per_unit: f64,
    pub alpha: f64,
    pub datum: DatumSpec,
    pub norm: NormConfig,
    /// Rescale the datum to this sector norm first.
    pub eps: Option<f64>,
}

impl Default for SimRun {
    fn default() -> Self {
        SimRun {
            grid: GridConfig::default(),
            dt: 0.01,
            horizon: 1.0,
            samples_per_unit: 10.0,
            alpha: 1.0,
            datum: DatumSpec::default(),
            norm: NormConfig::default(),
            eps: None,
        }
    }
}

impl SimRun {
    fn setup(&self) -> Result<(SimConfig, SpectralField, NormParams)> {
        let g = self.grid.build()?;
        let mut cfg = SimConfig::new(g.clone(), self.dt, self.horizon, self.samples_per_unit)?;
        cfg.alpha = self.alpha;
        cfg.validate()?;
        let np = self.norm.build()?;
        let mut u0 = self.datum.build(&g, &np)?;
        if let Some(eps) = self.eps {
            let n = lqlp_norm(&u0, &np);
            if n == 0.0 {
                return Err(KpError::Config("cannot rescale a zero datum".into()));
            }
            u0 = u0.scaled(eps / n);
        }
        Ok((cfg, u0, np))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardRun {
    pub sim: SimRun,
    pub n_max: usize,
    pub tol: f64,
    pub smallness: f64,
}

impl Default for PicardRun {
    fn default() -> Self {
        let o = PicardOptions::default();
        PicardRun {
            sim: SimRun { dt: 1.0 / 64.0, eps: Some(1e-3), ..SimRun::default() },
            n_max: o.n_max,
            tol: o.tol,
            smallness: o.smallness,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterRun {
    pub grid: GridConfig,
    pub dt: f64,
    pub horizon: f64,
    pub eps: f64,
    pub seed: u64,
    pub members: u64,
    pub norm: NormConfig,
}

impl Default for ScatterRun {
    fn default() -> Self {
        ScatterRun {
            grid: GridConfig { modes: [32; 3], lengths: [16.0 * std::f64::consts::PI; 3], dealias: true },
            dt: 1.0 / 16.0,
            horizon: 16.0,
            eps: 1e-3,
            seed: 2024,
            members: 20,
            norm: NormConfig { q: Some(2.0), ..NormConfig::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IllposedRun {
    pub lams: Vec<f64>,
    pub ps: Vec<f64>,
    pub resonance_samples: usize,
}

impl Default for IllposedRun {
    fn default() -> Self {
        IllposedRun { lams: vec![8.0, 16.0, 32.0, 64.0], ps: vec![3.0, 4.0, 2.0], resonance_samples: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormsRun {
    pub input: Option<PathBuf>,
    pub dealias: bool,
    pub norms: Vec<NormConfig>,
}

impl Default for NormsRun {
    fn default() -> Self {
        NormsRun {
            input: None,
            dealias: true,
            norms: [1.5, 2.0, 4.0].iter().map(|&p| NormConfig { p, ..NormConfig::default() }).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpacesRun {
    pub widths: [f64; 3],
    pub ps: Vec<f64>,
}

impl Default for SpacesRun {
    fn default() -> Self {
        SpacesRun { widths: [1.0; 3], ps: vec![1.0, 2.0, 3.0] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunKind {
    Sim,
    Picard,
    Scatter,
    IllposedSweep,
    Norms,
    SpacesLab,
}

impl RunKind {
    pub fn name(self) -> &'static str {
        match self {
            RunKind::Sim => "sim",
            RunKind::Picard => "picard",
            RunKind::Scatter => "scatter",
            RunKind::IllposedSweep => "illposed-sweep",
            RunKind::Norms => "norms",
            RunKind::SpacesLab => "spaces-lab",
        }
    }
}

fn parse<T: for<'de> Deserialize<'de> + Default>(bytes: &[u8]) -> Result<T> {
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Ok(T::default());
    }
    serde_json::from_slice(bytes).map_err(|e| KpError::Config(format!("invalid configuration: {e}")))
}

pub struct RunContext<'a> {
    pub config: &'a [u8],
    pub seed: Option<u64>,
    pub out: &'a Path,
    pub format: Format,
    pub threads: usize,
}

/// Runs one experiment and writes its artifacts and manifest into `ctx.out`.
pub fn run(kind: RunKind, ctx: &RunContext) -> Result<Outcome> {
    let t = Instant::now();
    let mut out = OutDir::create(ctx.out)?;
    let (seed, res) = match kind {
        RunKind::Sim => (0, run_sim(parse(ctx.config)?, &mut out, ctx.format)),
        RunKind::Picard => (0, run_picard(parse(ctx.config)?, &mut out, ctx.format)),
        RunKind::Scatter => {
            let mut c: ScatterRun = parse(ctx.config)?;
            if let Some(s) = ctx.seed {
                c.seed = s;
            }
            (c.seed, run_scatter(c, &mut out, ctx.format))
        }
        RunKind::IllposedSweep => (0, run_illposed(parse(ctx.config)?, &mut out, ctx.format)),
        RunKind::Norms => (0, run_norms(parse(ctx.config)?, &mut out, ctx.format)),
        RunKind::SpacesLab => (0, run_spaces(parse(ctx.config)?, &mut out, ctx.format)),
    };
    let mut m = Manifest::new(kind.name(), ctx.config, seed, ctx.threads);
    m.status = match &res {
        Ok(o) if o.pass => "pass".into(),
        Ok(_) => "tolerance-failure".into(),
        Err(e) => e.to_string(),
    };
    if let Ok(o) = &res {
        out.json("summary.json", o)?;
    }
    m.outputs = out.written().to_vec();
    m.wall_clock_seconds = t.elapsed().as_secs_f64();
    out.json("manifest.json", &m)?;
    res
}

fn run_sim(c: SimRun, out: &mut OutDir, fmt: Format) -> Result<Outcome> {
    let (cfg, u0, np) = c.setup()?;
    let (tr, diag) = evolve_report(&u0, &cfg)?;
    let mut t = Table::new(&["t", "mass", "lqlp"]);
    for (ti, s) in tr.times.iter().zip(&tr.states) {
        t.push(vec![*ti, s.mass(), lqlp_norm(s, &np)]);
    }
    out.table("series", &t, fmt)?;
    snapshot::save(&out.path("final.kp3f"), tr.states.last().unwrap())?;
    out.mark("final.kp3f");
    Ok(Outcome { pass: true, summary: json!({ "diagnostics": diag, "mass_drift": diag.mass_drift() }) })
}

fn run_picard(c: PicardRun, out: &mut OutDir, fmt: Format) -> Result<Outcome> {
    let (cfg, u0, np) = c.sim.setup()?;
    let opt = PicardOptions { n_max: c.n_max, tol: c.tol, smallness: c.smallness, norm: np };
    let (_, rep) = picard_iterate_with(&u0, &cfg, &opt)?;
    let mut t = Table::new(&["iterate", "diff", "ratio"]);
    for (i, d) in rep.diffs.iter().enumerate() {
        let r = if i == 0 { f64::NAN } else { rep.ratios[i - 1] };
        t.push(vec![(i + 1) as f64, *d, r]);
    }
    out.table("picard", &t, fmt)?;
    let contract = rep.ratios.iter().all(|&r| r <= 0.5);
    Ok(Outcome { pass: rep.converged && contract, summary: serde_json::to_value(&rep).unwrap() })
}

fn run_scatter(c: ScatterRun, out: &mut OutDir, fmt: Format) -> Result<Outcome> {
    let g = c.grid.build()?;
    let cfg = SimConfig::new(g.clone(), c.dt, c.horizon, 1.0)?;
    let np = c.norm.build()?;
    let mut t = Table::new(&["member", "t", "cauchy_gap", "residual"]);
    let mut decreasing = 0;
    let mut members = vec![];
    for m in 0..c.members {
        let u0 = small_datum(&g, c.seed, m, c.eps, &np);
        let (tr, _) = evolve_report(&u0, &cfg)?;
        let rep = scatter_report(&tr, &np)?;
        for (j, &tj) in rep.sample_times.iter().enumerate() {
            let gap = if j + 1 < rep.sample_times.len() { rep.cauchy_gaps[j] } else { f64::NAN };
            t.push(vec![m as f64, tj, gap, rep.residuals[j]]);
        }
        // Criterion window t in {1, 2, 4, 8}.
        let head = &rep.cauchy_gaps[..3.min(rep.cauchy_gaps.len())];
        if head.windows(2).all(|w| w[1] < w[0]) {
            decreasing += 1;
        }
        members.push(json!({ "member": m, "gaps": rep.cauchy_gaps, "residuals": rep.residuals, "u_plus_found": rep.u_plus.is_some() }));
    }
    out.table("scatter", &t, fmt)?;
    let frac = decreasing as f64 / c.members.max(1) as f64;
    Ok(Outcome { pass: frac >= 0.9, summary: json!({ "fraction_decreasing": frac, "members": members }) })
}

fn run_illposed(c: IllposedRun, out: &mut OutDir, fmt: Format) -> Result<Outcome> {
    let g = growth_sweep(&c.lams, &c.ps, &F3Quadrature::default())?;
    let mut t = Table::new(&["lam", "mu", "p", "norm", "fitted_slope"]);
    for r in &g.rows {
        let slope = g.fits.iter().find(|f| f.0 == r.p).map(|f| f.1.slope).unwrap_or(f64::NAN);
        t.push(vec![r.lam, r.mu, r.p, r.norm, slope]);
    }
    out.table("growth", &t, fmt)?;
    let mut ranges = vec![];
    for &lam in &c.lams {
        ranges.push(resonance_range(&IllposedParams::coupled(lam, c.ps[0])?, c.resonance_samples, 1)?);
    }
    let slopes_ok = g.fits.iter().all(|(p, f, pred)| {
        if *p <= 2.0 {
            f.slope <= 0.3
        } else {
            (f.slope - pred).abs() <= 0.3
        }
    });
    let gaps_ok = g.reports.iter().all(|r| r.rel_gap <= 0.02);
    let r_ok = ranges.iter().all(|r| r.min_ratio >= 1.0 / 64.0 && r.max_ratio <= 64.0);
    Ok(Outcome {
        pass: slopes_ok && gaps_ok && r_ok,
        summary: json!({ "fits": g.fits, "reports": g.reports, "resonance": ranges,
                         "slopes_ok": slopes_ok, "routes_agree": gaps_ok, "resonance_ok": r_ok }),
    })
}

fn run_norms(c: NormsRun, out: &mut OutDir, fmt: Format) -> Result<Outcome> {
    let path = c.input.ok_or_else(|| KpError::Config("norms needs an input snapshot".into()))?;
    let u = snapshot::load(&path, c.dealias)?;
    let mut t = Table::new(&["q", "p", "norm"]);
    for n in &c.norms {
        let np = n.build()?;
        t.push(vec![np.q, np.p, lqlp_norm(&u, &np)]);
    }
    out.table("norms", &t, fmt)?;
    Ok(Outcome { pass: true, summary: json!({ "l2": u.l2_norm(), "rows": t.rows }) })
}

fn run_spaces(c: SpacesRun, out: &mut OutDir, fmt: Format) -> Result<Outcome> {
    let g = GaussianDatum::new(c.widths, false)?;
    let gd = GaussianDatum::new(c.widths, true)?;
    let mut t = Table::new(&["p", "lambda", "value"]);
    let mut decay = vec![];
    for &p in &c.ps {
        let r = sector_sum_decay(&g, p)?;
        for row in &r.rows {
            t.push(vec![p, row.lam, row.value]);
        }
        decay.push(r);
    }
    out.table("sector_sums", &t, fmt)?;
    let zero: Vec<_> = c
        .ps
        .iter()
        .map(|&p| Ok(json!({ "mean": zero_mean_blowup(&g, p)?, "zero_mean": zero_mean_blowup(&gd, p)? })))
        .collect::<Result<_>>()?;
    let comb: Vec<_> = c.ps.iter().map(|&p| divergent_sequence_check(&comb_scales(), p)).collect::<Result<_>>()?;
    Ok(Outcome { pass: true, summary: json!({ "decay": decay, "zero_mean": zero, "comb": comb }) })
}

/// Exit status for an error: 1 for tolerance, blow-up and divergence
/// diagnostics, 2 for everything else.
pub fn exit_code(e: &KpError) -> i32 {
    match e {
        KpError::Tolerance(_) | KpError::BlowUp { .. } | KpError::Divergence(_) => 1,
        _ => 2,
    }
}
