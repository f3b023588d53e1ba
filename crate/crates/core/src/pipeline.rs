//! End-to-end pipeline: spectral data, Ψ, the skew product, its minimal
//! components, minimal sequences, series and the affine extension, with JSON
//! reports and SVG figures.

use crate::circle::wrap;
use crate::error::{Error, Result};
use crate::examples::{ay_substitution, AY_GAMMA_ANCHOR};
use crate::fractal::{in_ccw_arc, FractalCloud, PsiEnclosure, ValueFunction, DEFAULT_DEPTH_CAP, DEFAULT_PSI_GRID, DEFAULT_PSI_TOL};
use crate::hmap::{build_hmap, ArcSet, HMap, MinimalComponent, DEFAULT_MAX_ITER};
use crate::iem::{self, AffineIemSpec, IemSpec, SelfSimilarity, DEFAULT_RETURN_CAP, DEFAULT_THETA};
use crate::minseq::{self, GammaVector, Generated, SeriesReport, SeriesVerdict, DEFAULT_TOL_MIN};
use crate::report::{num17, to_pretty, with_schema};
use crate::spectral::{char_poly, select_beta, BetaChoice, EigenData, GammaNorm, IntPolynomial};
use crate::substitution::{Letter, PrefixSuffixStream, Substitution};
use crate::svg;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::cell::OnceCell;
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

pub const DEFAULT_EPS_ARC: f64 = 1e-9;
pub const DEFAULT_WINDOW: usize = 2000;
pub const DEFAULT_HORIZON: usize = 100_000;
pub const DEFAULT_N_DIRECTIONS: usize = 8;
pub const DEFAULT_SEED: u64 = 1;
pub const CLOUD_DEPTH: usize = 14;
pub const CLOUD_CAP: usize = 200_000;
/// Level from which the base point of a sequence is read down.
const POINT_DEPTH: usize = 80;

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Ay,
    Path(PathBuf),
}

impl Source {
    /// `"ay"` names the built-in data; anything else is a JSON path.
    pub fn parse(s: &str) -> Source {
        if s.eq_ignore_ascii_case("ay") {
            Source::Ay
        } else {
            Source::Path(PathBuf::from(s))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub source: Source,
    /// Explicit directions in radians; empty means `n_directions` seeded random ones.
    pub directions: Vec<f64>,
    pub n_directions: usize,
    pub beta_index: Option<usize>,
    pub depth_cap: usize,
    pub psi_grid: usize,
    pub psi_tol: f64,
    pub eps_arc: f64,
    pub max_iter: usize,
    pub window: usize,
    pub horizon: usize,
    pub theta: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            source: Source::Ay,
            directions: Vec::new(),
            n_directions: DEFAULT_N_DIRECTIONS,
            beta_index: None,
            depth_cap: DEFAULT_DEPTH_CAP,
            psi_grid: DEFAULT_PSI_GRID,
            psi_tol: DEFAULT_PSI_TOL,
            eps_arc: DEFAULT_EPS_ARC,
            max_iter: DEFAULT_MAX_ITER,
            window: DEFAULT_WINDOW,
            horizon: DEFAULT_HORIZON,
            theta: DEFAULT_THETA,
            seed: DEFAULT_SEED,
            out: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.psi_tol.is_nan() || self.eps_arc.is_nan() || self.psi_tol <= 0.0 || self.eps_arc <= 0.0 {
            return bad("tolerances must be positive");
        }
        if self.depth_cap == 0 || self.psi_grid == 0 || self.window == 0 || self.horizon == 0 || self.max_iter == 0 {
            return bad("depth cap, grid, window, horizon and iteration cap must be positive");
        }
        if !(0.0..1.0).contains(&self.theta) {
            return bad("theta must lie in [0, 1)");
        }
        if self.directions.iter().any(|x| !x.is_finite()) {
            return bad("directions must be finite");
        }
        Ok(())
    }

    /// Directions used by the sequence stages, wrapped to `[0, 2π)`.
    pub fn resolved_directions(&self) -> Vec<f64> {
        if !self.directions.is_empty() {
            return self.directions.iter().map(|&x| wrap(x)).collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.n_directions).map(|_| rng.gen_range(0.0..TAU)).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "source": match &self.source { Source::Ay => "ay".to_string(), Source::Path(p) => p.display().to_string() },
            "directions": self.resolved_directions().iter().map(|&x| num17(x)).collect::<Vec<_>>(),
            "beta_index": self.beta_index,
            "depth_cap": self.depth_cap,
            "psi_grid": self.psi_grid,
            "psi_tol": num17(self.psi_tol),
            "eps_arc": num17(self.eps_arc),
            "max_iter": self.max_iter,
            "window": self.window,
            "horizon": self.horizon,
            "theta": num17(self.theta),
            "seed": self.seed,
        })
    }
}

/// Loads the substitution named by a source; every failure is a configuration error.
pub fn load_substitution(source: &Source) -> Result<Substitution> {
    match source {
        Source::Ay => Ok(ay_substitution()),
        Source::Path(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("substitution source {}: {e}", p.display())))?;
            Substitution::from_json(&text).map_err(|e| Error::Config(format!("substitution source {}: {e}", p.display())))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Check {
        Check { name: name.to_string(), pass, detail }
    }
}

/// One minimal sequence per (direction, component).
pub struct SequenceRun {
    pub angle: f64,
    pub component: usize,
    pub generated: Generated,
}

/// Lazily computed pipeline state for one substitution.
pub struct Workbench {
    pub cfg: PipelineConfig,
    pub sub: Substitution,
    pub eig: EigenData<f64>,
    is_ay: bool,
    psi: OnceCell<Vec<Vec<PsiEnclosure>>>,
    hmap: OnceCell<HMap>,
    limit: OnceCell<(ArcSet, usize)>,
    comps: OnceCell<Vec<MinimalComponent>>,
    sequences: OnceCell<Vec<SequenceRun>>,
}

fn cached<T>(cell: &OnceCell<T>, f: impl FnOnce() -> Result<T>) -> Result<&T> {
    if cell.get().is_none() {
        let v = f()?;
        let _ = cell.set(v);
    }
    Ok(cell.get().expect("just set"))
}

impl Workbench {
    pub fn new(cfg: PipelineConfig) -> Result<Workbench> {
        cfg.validate()?;
        let sub = load_substitution(&cfg.source)?;
        let is_ay = cfg.source == Source::Ay || sub == ay_substitution();
        let norm = if is_ay { GammaNorm::Anchor { index: AY_GAMMA_ANCHOR, value: -1.0 } } else { GammaNorm::LargestPositive };
        let choice = cfg.beta_index.map_or(BetaChoice::Largest, BetaChoice::Index);
        let eig = select_beta(&sub, norm, choice)?;
        Ok(Workbench {
            cfg,
            sub,
            eig,
            is_ay,
            psi: OnceCell::new(),
            hmap: OnceCell::new(),
            limit: OnceCell::new(),
            comps: OnceCell::new(),
            sequences: OnceCell::new(),
        })
    }

    pub fn is_ay(&self) -> bool {
        self.is_ay
    }

    pub fn value_function(&self) -> ValueFunction<'_, f64> {
        ValueFunction::with_cap(&self.sub, &self.eig, self.cfg.depth_cap)
    }

    /// Stretched-exponential exponent at the default `A = |β|^{1/2}`.
    pub fn rho(&self) -> f64 {
        self.eig.rho(self.eig.default_a())
    }

    pub fn psi(&self) -> Result<&Vec<Vec<PsiEnclosure>>> {
        cached(&self.psi, || {
            let vf = self.value_function();
            self.sub.letters().map(|a| vf.compute_psi(a, self.cfg.psi_grid, self.cfg.psi_tol)).collect()
        })
    }

    pub fn hmap(&self) -> Result<&HMap> {
        let psi = self.psi()?;
        cached(&self.hmap, || build_hmap(&self.value_function(), psi, self.cfg.eps_arc))
    }

    pub fn limit_set(&self) -> Result<&(ArcSet, usize)> {
        let h = self.hmap()?;
        cached(&self.limit, || h.limit_set(&self.sub, self.cfg.max_iter))
    }

    pub fn components(&self) -> Result<&Vec<MinimalComponent>> {
        let h = self.hmap()?;
        let (lim, _) = self.limit_set()?;
        cached(&self.comps, || h.minimal_components(&self.sub, lim))
    }

    pub fn generate(&self, comp: usize, angle: f64) -> Result<Generated> {
        let comps = self.components()?;
        let c = comps.get(comp).ok_or_else(|| Error::Config(format!("component {comp} does not exist ({} found)", comps.len())))?;
        minseq::generate(self.hmap()?, &self.sub, &self.eig, c, angle, self.cfg.window, DEFAULT_TOL_MIN)
    }

    pub fn sequences(&self) -> Result<&Vec<SequenceRun>> {
        let comps = self.components()?;
        cached(&self.sequences, || {
            let mut out = Vec::new();
            for angle in self.cfg.resolved_directions() {
                for c in comps {
                    let mut generated = self.generate(c.index, angle)?;
                    generated.stream.materialize(&self.sub, POINT_DEPTH + 1)?;
                    out.push(SequenceRun { angle, component: c.index, generated });
                }
            }
            Ok(out)
        })
    }

    pub fn cloud(&self, a: Letter, depth: usize, cap: usize) -> FractalCloud<f64> {
        self.value_function().render_cloud(a, depth, cap, self.cfg.seed)
    }

    pub fn spectral_report(&self) -> Value {
        let m = self.sub.matrix();
        let p = char_poly(&m);
        let roots: Vec<Value> = p
            .roots::<f64>()
            .map(|rs| rs.iter().map(|z| json!({"re": num17(z.re), "im": num17(z.im)})).collect())
            .unwrap_or_default();
        with_schema(
            "spectral",
            json!({
                "substitution": self.sub.to_json_value(),
                "primitive": self.sub.is_primitive(),
                "char_poly": p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "roots": roots,
                "eigen": self.eig.to_json(&self.sub),
                "rho": num17(self.rho()),
            }),
        )
    }

    pub fn psi_report(&self) -> Result<Value> {
        let psi = self.psi()?;
        let letters: Vec<Value> = self
            .sub
            .letters()
            .map(|a| {
                json!({
                    "letter": self.sub.name(a),
                    "enclosures": psi[a.0].iter().map(|e| enclosure_json(&self.sub, e)).collect::<Vec<_>>(),
                })
            })
            .collect();
        Ok(with_schema("psi", json!({"grid": self.cfg.psi_grid, "tol": num17(self.cfg.psi_tol), "letters": letters})))
    }

    pub fn limit_report(&self) -> Result<Value> {
        let (lim, n) = self.limit_set()?;
        Ok(with_schema(
            "hmap-limit-set",
            json!({"iterations": n, "measure": num17(lim.measure()), "eps_arc": num17(self.cfg.eps_arc), "arcs": arcs_json(&self.sub, lim)}),
        ))
    }

    pub fn components_report(&self) -> Result<Value> {
        let comps = self.components()?;
        let list: Vec<Value> = comps
            .iter()
            .map(|c| {
                json!({
                    "index": c.index,
                    "measure": num17(c.arcs.measure()),
                    "covers_circle": c.covers_circle(self.cfg.eps_arc),
                    "arcs": arcs_json(&self.sub, &c.arcs),
                })
            })
            .collect();
        let overlap = pairwise_overlap(comps);
        Ok(with_schema("hmap-components", json!({"count": comps.len(), "max_overlap": num17(overlap), "components": list})))
    }

    pub fn minseq_report(&self) -> Result<Value> {
        let runs = self.sequences()?;
        let psi = self.psi()?;
        let mut xis: Vec<f64> = psi.iter().flatten().map(PsiEnclosure::mid).collect();
        xis.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        xis.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let mut dirs = Vec::new();
        for angle in self.cfg.resolved_directions() {
            let q = minseq::direction_quality(angle, &xis, self.eig.phi, self.eig.default_a(), self.cfg.horizon);
            let here: Vec<&SequenceRun> = runs.iter().filter(|r| r.angle == angle).collect();
            let equiv = pairwise_equivalence(&here, self.cfg.window);
            dirs.push(json!({
                "angle": num17(angle),
                "good_so_far": q.good_so_far,
                "horizon": q.horizon,
                "semi_decision": true,
                "components": here.iter().map(|r| json!({
                    "component": r.component,
                    "shift": r.generated.shift,
                    "depth": r.generated.depth,
                    "pass": r.generated.report.pass,
                    "min": num17(r.generated.report.min),
                    "zero_set": r.generated.report.zero_set.iter().take(16).collect::<Vec<_>>(),
                    "center": self.sub.format_word(&r.generated.window.word[r.generated.window.origin.saturating_sub(20)..(r.generated.window.origin + 20).min(r.generated.window.word.len())]),
                })).collect::<Vec<_>>(),
                "shift_equivalent_pairs": equiv.iter().map(|(a, b, s)| json!([a, b, s])).collect::<Vec<_>>(),
            }));
        }
        Ok(with_schema("minseq", json!({"window": self.cfg.window, "tol": num17(DEFAULT_TOL_MIN), "directions": dirs})))
    }

    pub fn series_for(&self, run: &SequenceRun) -> SeriesReport {
        minseq::series_sum(&run.generated.window, &GammaVector::unit(&self.eig, run.angle).slopes(), self.rho())
    }

    /// The same series with every slope equal to one; the partial sums grow linearly.
    pub fn series_control(&self, run: &SequenceRun) -> SeriesReport {
        minseq::series_sum(&run.generated.window, &vec![1.0; self.sub.size()], self.rho())
    }

    pub fn series_report(&self) -> Result<Value> {
        let runs = self.sequences()?;
        let list: Vec<Value> = runs
            .iter()
            .map(|r| {
                let s = self.series_for(r);
                let c = self.series_control(r);
                json!({
                    "angle": num17(r.angle),
                    "component": r.component,
                    "series": series_json(&s),
                    "control": series_json(&c),
                })
            })
            .collect();
        Ok(with_schema("series", json!({"rho": num17(self.rho()), "threshold": num17(minseq::SERIES_THRESHOLD), "runs": list})))
    }

    /// Base map, self-similarity and one affine extension per sequence run (AY only).
    /// Runs whose series verdict is not converging are refused individually.
    pub fn affine(&self) -> Result<AffineRuns> {
        if !self.is_ay {
            return Err(Error::Config("the affine stage needs the built-in interval exchange".into()));
        }
        let (base, alpha) = iem::make_ay();
        let ind = iem::induce(&base, alpha, DEFAULT_RETURN_CAP)?;
        let sim = iem::self_similarity_fit(&base, &ind, 1000, self.cfg.seed);
        let runs = self.sequences()?;
        let mut maps = Vec::new();
        for (i, r) in runs.iter().enumerate() {
            let built = base_point(&base, &self.sub, &sim, r).and_then(|x| {
                let slopes = GammaVector::unit(&self.eig, r.angle).slopes();
                iem::denjoy_affine(&base, x, &r.generated.window, &slopes, self.rho(), self.cfg.window, self.cfg.theta)
            });
            maps.push((i, built));
        }
        Ok(AffineRuns { base, sim, maps })
    }

    pub fn affine_report(&self, runs_out: &AffineRuns) -> Result<Value> {
        let AffineRuns { base: t, sim, maps } = runs_out;
        let runs = self.sequences()?;
        let mut list = Vec::new();
        for (i, built) in maps {
            let r = &runs[*i];
            let entry = match built {
                Ok(f) => {
                    let itin = t.itinerary(f.orbit[self.cfg.window], self.cfg.window);
                    let mismatch = (-(self.cfg.window as i64)..=self.cfg.window as i64).filter(|&n| itin.get(n) != r.generated.window.get(n)).count();
                    json!({
                        "angle": num17(r.angle),
                        "component": r.component,
                        "x0": num17(f.orbit[self.cfg.window]),
                        "itinerary_mismatch": mismatch,
                        "semiconjugacy_residual": num17(iem::semiconjugacy_check(f, t, 10_000, self.cfg.seed)),
                        "gap_ratio_error": num17(f.gap_ratio_error(1000)),
                        "gap_mass": num17(f.total_gap_mass()),
                        "tiling_residual": num17(f.tiling_residual()),
                        "pieces": f.pieces.len(),
                    })
                }
                Err(e) => json!({"angle": num17(r.angle), "component": r.component, "error": e.to_string()}),
            };
            list.push(entry);
        }
        let mut pairs = Vec::new();
        for (k, (i, f)) in maps.iter().enumerate() {
            for (j, g) in &maps[k + 1..] {
                if let (Ok(f), Ok(g)) = (f, g) {
                    if runs[*i].angle == runs[*j].angle {
                        pairs.push(json!({
                            "angle": num17(runs[*i].angle),
                            "components": [runs[*i].component, runs[*j].component],
                            "same_slopes": f.slopes == g.slopes,
                            "orbit_separation": num17(iem::orbit_separation(f, g)),
                        }));
                    }
                }
            }
        }
        Ok(with_schema(
            "affine",
            json!({
                "theta": num17(self.cfg.theta),
                "base": t.to_json(),
                "self_similarity": {"scale": num17(sim.scale), "rotation": num17(sim.rotation), "max_error": num17(sim.max_error)},
                "maps": list,
                "pairs": pairs,
            }),
        ))
    }
}

/// Output of [`Workbench::affine`]: per sequence run index, the extension or the reason it was refused.
pub struct AffineRuns {
    pub base: IemSpec<f64>,
    pub sim: SelfSimilarity,
    pub maps: Vec<(usize, Result<AffineIemSpec>)>,
}

/// `T^shift(π(ω))`: the point whose itinerary is the trimmed window.
pub fn base_point(t: &IemSpec<f64>, sub: &Substitution, sim: &SelfSimilarity, run: &SequenceRun) -> Result<f64> {
    let mut stream = PrefixSuffixStream::finite(sub, run.generated.stream.entries().to_vec())?;
    let x = iem::point_of_stream(t, sub, sim, &mut stream, POINT_DEPTH)?;
    let s = run.generated.shift;
    let orbit = t.orbit(x, s.min(0), s.max(0));
    Ok(if s >= 0 { orbit[s as usize] } else { orbit[0] })
}

fn enclosure_json(sub: &Substitution, e: &PsiEnclosure) -> Value {
    json!({
        "lo": num17(e.lo),
        "width": num17(e.width),
        "mid": num17(e.mid()),
        "labels": [sub.format_label(e.labels.0), sub.format_label(e.labels.1)],
        "closed_form": e.closed_form,
    })
}

fn arcs_json(sub: &Substitution, set: &ArcSet) -> Vec<Value> {
    set.arcs(sub)
        .iter()
        .map(|a| json!({"label": sub.format_label(a.label), "start": num17(a.start), "len": num17(a.len)}))
        .collect()
}

fn series_json(s: &SeriesReport) -> Value {
    json!({
        "verdict": format!("{:?}", s.verdict),
        "first_small": s.first_small,
        "last_increment": num17(s.last_increment),
        "tail": num17(s.tail),
        "total": num17(*s.partial_sums.last().unwrap_or(&0.0)),
        "c1": num17(s.c1),
        "c2": num17(s.c2),
        "rho": num17(s.rho),
        "rho_fit": num17(s.rho_fit),
        "max_term": num17(s.max_term),
    })
}

fn pairwise_overlap(comps: &[MinimalComponent]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in comps.iter().enumerate() {
        for b in &comps[i + 1..] {
            worst = worst.max(a.arcs.overlap(&b.arcs));
        }
    }
    worst
}

fn pairwise_equivalence(runs: &[&SequenceRun], window: usize) -> Vec<(usize, usize, i64)> {
    let mut out = Vec::new();
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            if let Some(s) = minseq::shift_equivalent(&a.generated.window, &b.generated.window, window) {
                out.push((a.component, b.component, s));
            }
        }
    }
    out
}

fn ay_product() -> IntPolynomial {
    let a = IntPolynomial::new(vec![1, 0, 0, -1]);
    let b = IntPolynomial::new(vec![-1, 1, 1, 1]);
    let c = IntPolynomial::new(vec![1, 1, 1, -1]);
    a.mul(&b).mul(&c)
}

/// Checks that hold for the built-in data, numbered as in the acceptance suite.
pub fn ay_spectral_checks(wb: &Workbench) -> Vec<Check> {
    let p = char_poly(&wb.sub.matrix());
    let q = ay_product();
    let b = wb.eig.beta;
    let c_expect = wb.eig.modulus / (wb.eig.modulus - 1.0);
    vec![
        Check::new("char-poly", p == q || p == q.neg(), format!("{p}")),
        Check::new("beta", (b.re + 0.771845).abs() < 5e-6 && (b.im - 1.11514).abs() < 5e-5, format!("{:.7} + {:.7}i", b.re, b.im)),
        Check::new(
            "constant-c",
            (wb.eig.c - c_expect).abs() < 1e-3 && (wb.eig.c - 3.807).abs() < 1e-3 && wb.sub.format_word(&wb.eig.c_prefix) == "2",
            format!("C = {:.6}, prefix {}", wb.eig.c, wb.sub.format_word(&wb.eig.c_prefix)),
        ),
    ]
}

pub fn ay_psi_checks(wb: &Workbench, psi: &[Vec<PsiEnclosure>]) -> Vec<Check> {
    let phi = wb.eig.phi;
    let by = |n: &str| &psi[wb.sub.letter(n).expect("AY letter").0];
    let pairs = ["1", "2", "4", "5", "7"].iter().all(|n| by(n).len() == 2 && by(n).iter().all(|e| e.width <= 1e-12));
    let has = |n: &str, f: &str| by(n).iter().any(|e| e.closed_form.as_deref() == Some(f));
    let inside = |e: &PsiEnclosure, lo: f64, hi: f64| in_ccw_arc(e.lo, wrap(lo), wrap(hi)) && in_ccw_arc(e.hi(), wrap(lo), wrap(hi));
    let eta1 = by("1").iter().find(|e| e.closed_form.as_deref() != Some("-i*b0^4"));
    let eta7 = by("7").iter().find(|e| e.closed_form.as_deref() != Some("i*b0^5"));
    let eta1_ok = eta1.is_some_and(|e| inside(e, phi - PI / 2.0, 2.0 * phi - 1.5 * PI));
    let eta7_ok = eta7.is_some_and(|e| inside(e, 4.0 * phi - 4.5 * PI, TAU));
    vec![
        Check::new("psi-empty-8", by("8").is_empty(), format!("{} enclosures", by("8").len())),
        Check::new("psi-pairs", pairs, "two enclosures of width <= 1e-12 for letters 1 2 4 5 7".into()),
        Check::new("psi-2-closed-form", has("2", "i*b0^2") && has("2", "-i*b0^2"), "±i·b0²".into()),
        Check::new("psi-1-closed-form", has("1", "-i*b0^4"), "−i·b0⁴".into()),
        Check::new(
            "psi-eta-bounds",
            eta1_ok && eta7_ok,
            format!("eta1 {:?}, eta7 {:?}", eta1.map(PsiEnclosure::mid), eta7.map(PsiEnclosure::mid)),
        ),
    ]
}

/// Files and checks written by [`run_full`].
#[derive(Debug, Default)]
pub struct Bundle {
    pub reports: Vec<(String, Value)>,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub errors: Vec<(String, Error)>,
}

impl Bundle {
    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&self) -> Value {
        with_schema(
            "run-full",
            json!({
                "passed": self.passed(),
                "checks": self.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect::<Vec<_>>(),
                "errors": self.errors.iter().map(|(s, e)| json!({"stage": s, "error": e.to_string()})).collect::<Vec<_>>(),
                "reports": self.reports.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
            }),
        )
    }
}

fn write(out: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let p = out.join(name);
    std::fs::write(&p, text)?;
    files.push(p);
    Ok(())
}

/// Runs every stage in order, writing JSON reports and SVG figures into `cfg.out`.
/// A failing stage is recorded under its name; later stages that need it are skipped.
pub fn run_full(cfg: PipelineConfig) -> Result<Bundle> {
    let wb = Workbench::new(cfg)?;
    let out = wb.cfg.out.clone();
    std::fs::create_dir_all(&out)?;
    let mut b = Bundle::default();
    let ay = wb.is_ay();

    let stage = |b: &mut Bundle, name: &str, r: Result<Value>| match r {
        Ok(v) => {
            b.reports.push((name.to_string(), v));
            true
        }
        Err(e) => {
            b.errors.push((name.to_string(), e));
            false
        }
    };

    b.reports.push(("config".into(), with_schema("config", wb.cfg.to_json())));
    stage(&mut b, "spectral", Ok(wb.spectral_report()));
    if ay {
        b.checks.extend(ay_spectral_checks(&wb));
    }

    if stage(&mut b, "psi", wb.psi_report()) {
        let psi = wb.psi()?;
        if ay {
            b.checks.extend(ay_psi_checks(&wb, psi));
        }
        for a in wb.sub.letters() {
            write(&out, &format!("psi_{}.svg", wb.sub.name(a)), &svg::psi_svg(&psi[a.0]), &mut b.files)?;
        }
    }

    let cloud_letter = if ay { Letter(1) } else { Letter(0) };
    let cloud = wb.cloud(cloud_letter, CLOUD_DEPTH, CLOUD_CAP);
    let stem = format!("fractal_{}_{}", wb.sub.name(cloud_letter), CLOUD_DEPTH);
    write(&out, &format!("{stem}.svg"), &svg::fractal_svg(&cloud), &mut b.files)?;
    write(&out, &format!("{stem}.csv"), &svg::cloud_csv(&cloud), &mut b.files)?;

    if stage(&mut b, "hmap-limit-set", wb.limit_report()) {
        let (_, n) = wb.limit_set()?;
        b.checks.push(Check::new("limit-set-stabilizes", true, format!("N = {n}")));
        if ay {
            b.checks.push(Check::new("limit-set-n30", *n == 30, format!("N = {n}")));
        }
    }

    if stage(&mut b, "hmap-components", wb.components_report()) {
        let comps = wb.components()?;
        let overlap = pairwise_overlap(comps);
        b.checks.push(Check::new("components-disjoint", overlap <= wb.cfg.eps_arc * 10.0, format!("max overlap {overlap:.3e}")));
        if ay {
            b.checks.push(Check::new("components-two", comps.len() == 2, format!("{} components", comps.len())));
        }
        write(&out, "components.svg", &svg::components_svg(&wb.sub, comps), &mut b.files)?;
    }

    if stage(&mut b, "minseq", wb.minseq_report()) {
        let runs = wb.sequences()?;
        let all = runs.iter().all(|r| r.generated.report.pass);
        b.checks.push(Check::new("minseq-minimal", all, format!("{} windows at tol {DEFAULT_TOL_MIN:e}", runs.len())));
        let mut equivalent = 0;
        for angle in wb.cfg.resolved_directions() {
            let here: Vec<&SequenceRun> = runs.iter().filter(|r| r.angle == angle).collect();
            equivalent += pairwise_equivalence(&here, wb.cfg.window).len();
        }
        b.checks.push(Check::new("minseq-distinct-orbits", equivalent == 0, format!("{equivalent} shift-equivalent pairs")));

        stage(&mut b, "series", wb.series_report());
        let mut conv = 0;
        let mut div = 0;
        for r in runs {
            conv += usize::from(wb.series_for(r).verdict == SeriesVerdict::Converging);
            div += usize::from(wb.series_control(r).verdict == SeriesVerdict::Diverging);
        }
        b.checks.push(Check::new("series-converging", conv == runs.len(), format!("{conv}/{} converging", runs.len())));
        b.checks.push(Check::new("series-control-diverging", div == runs.len(), format!("{div}/{} diverging", runs.len())));

        if ay {
            match wb.affine().and_then(|ar| wb.affine_report(&ar).map(|v| (ar, v))) {
                Ok((ar, v)) => {
                    let built: Vec<&AffineIemSpec> = ar.maps.iter().filter_map(|(_, m)| m.as_ref().ok()).collect();
                    let refused = ar.maps.len() - built.len();
                    let maps = v["maps"].as_array().cloned().unwrap_or_default();
                    let field = |m: &Value, key: &str| m[key].as_str().and_then(|s| s.parse::<f64>().ok());
                    let worst = |key: &str| maps.iter().filter_map(|m| field(m, key)).fold(0.0, f64::max);
                    let semi = worst("semiconjugacy_residual");
                    let ratio = worst("gap_ratio_error");
                    let some = !built.is_empty();
                    b.checks.push(Check::new("affine-semiconjugacy", some && semi <= 1e-6, format!("max residual {semi:.3e} over {} maps, {refused} refused", built.len())));
                    b.checks.push(Check::new("affine-gap-ratios", some && ratio <= 1e-8, format!("max error {ratio:.3e}")));
                    let pairs = v["pairs"].as_array().cloned().unwrap_or_default();
                    let shared = pairs.iter().all(|p| p["same_slopes"] == Value::Bool(true));
                    let sep = pairs.iter().filter_map(|p| field(p, "orbit_separation")).fold(f64::INFINITY, f64::min);
                    b.checks.push(Check::new(
                        "affine-disjoint-orbits",
                        !pairs.is_empty() && shared && sep > 0.0,
                        format!("{} pairs, shared slopes {shared}, min separation {sep:.3e}", pairs.len()),
                    ));
                    if let Some(f) = built.first() {
                        write(&out, "affine.svg", &svg::affine_svg(f, &ar.base), &mut b.files)?;
                    }
                    b.reports.push(("affine".into(), v));
                }
                Err(e) => b.errors.push(("affine".into(), e)),
            }
        }
    }

    for (name, v) in &b.reports {
        let p = out.join(format!("{name}.json"));
        std::fs::write(&p, to_pretty(v))?;
        b.files.push(p);
    }
    let summary = b.summary();
    write(&out, "summary.json", &to_pretty(&summary), &mut b.files)?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = PipelineConfig::default();
        assert!(c.validate().is_ok());
        c.psi_tol = 0.0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c = PipelineConfig { theta: 1.0, ..PipelineConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn seeded_directions_are_reproducible() {
        let c = PipelineConfig::default();
        assert_eq!(c.resolved_directions(), c.resolved_directions());
        assert_eq!(c.resolved_directions().len(), DEFAULT_N_DIRECTIONS);
        let e = PipelineConfig { directions: vec![-1.0], ..PipelineConfig::default() };
        assert!((e.resolved_directions()[0] - (TAU - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn missing_source_is_config_error() {
        let c = PipelineConfig { source: Source::parse("/nonexistent/sub.json"), ..PipelineConfig::default() };
        assert!(matches!(Workbench::new(c), Err(Error::Config(_))));
    }
}
