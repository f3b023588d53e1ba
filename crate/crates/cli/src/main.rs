use clap::{Args, Parser, Subcommand};
use selfsim::error::Error;
use selfsim::pipeline::{self, PipelineConfig, Source, Workbench, CLOUD_CAP, CLOUD_DEPTH};
use selfsim::rauzy::{self, Permutation};
use selfsim::report::{num17, to_pretty, with_schema};
use selfsim::{iem, minseq, svg, Letter};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "selfsim", version, about = "Extreme points, minimal sequences and wandering intervals of self-similar interval exchanges")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Built-in example ("ay").
    #[arg(long, global = true, conflicts_with = "substitution")]
    example: Option<String>,
    /// Substitution JSON file `{"alphabet": [...], "rules": {...}}`.
    #[arg(long, global = true)]
    substitution: Option<PathBuf>,
    /// Index of the expanding eigenvalue among the candidates, largest modulus first.
    #[arg(long, global = true)]
    beta_index: Option<usize>,
    #[arg(long, global = true, default_value_t = selfsim::fractal::DEFAULT_DEPTH_CAP)]
    depth_cap: usize,
    #[arg(long, global = true, default_value_t = selfsim::fractal::DEFAULT_PSI_GRID)]
    psi_grid: usize,
    #[arg(long, global = true, default_value_t = selfsim::fractal::DEFAULT_PSI_TOL)]
    psi_tol: f64,
    #[arg(long, global = true, default_value_t = pipeline::DEFAULT_EPS_ARC)]
    eps_arc: f64,
    #[arg(long, global = true, default_value_t = pipeline::DEFAULT_HORIZON)]
    horizon: usize,
    /// Half-width L of minimal windows.
    #[arg(long, global = true, default_value_t = pipeline::DEFAULT_WINDOW)]
    window: usize,
    /// Total mass of the inserted gaps.
    #[arg(long, global = true, default_value_t = iem::DEFAULT_THETA)]
    theta: f64,
    #[arg(long, global = true, default_value_t = pipeline::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Print the JSON report instead of a table.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Characteristic polynomial, β, Γ and the tail constant.
    Analyze,
    /// Directions where two sub-fractals tie.
    Psi {
        #[arg(long)]
        letter: Option<String>,
    },
    /// Point clouds of the fractals.
    Fractal {
        #[command(subcommand)]
        cmd: FractalCmd,
    },
    /// The circle skew product: limit set and minimal components.
    Hmap {
        #[command(subcommand)]
        cmd: HmapCmd,
    },
    /// Minimal sequences and their wandering-interval series.
    Minseq {
        #[command(subcommand)]
        cmd: MinseqCmd,
    },
    /// Affine interval exchanges with wandering intervals.
    Affine {
        #[command(subcommand)]
        cmd: AffineCmd,
    },
    /// Rauzy classes and the parametric matrix family.
    Rauzy {
        #[command(subcommand)]
        cmd: RauzyCmd,
    },
    /// Every stage, with reports and figures written to --out.
    RunFull {
        /// Directions in radians; default is --n-directions seeded random ones.
        #[arg(long, value_delimiter = ',')]
        directions: Vec<f64>,
        #[arg(long, default_value_t = pipeline::DEFAULT_N_DIRECTIONS)]
        n_directions: usize,
    },
}

#[derive(Subcommand)]
enum FractalCmd {
    /// Point cloud of one fractal as SVG and CSV.
    Render {
        #[arg(long)]
        letter: String,
        #[arg(long, default_value_t = CLOUD_DEPTH)]
        depth: usize,
        /// Random chains are sampled above this many points.
        #[arg(long, default_value_t = CLOUD_CAP)]
        cap: usize,
    },
}

#[derive(Subcommand)]
enum HmapCmd {
    LimitSet,
    Components,
}

#[derive(Args)]
struct SeqArgs {
    /// Direction angle in radians.
    #[arg(long)]
    direction: f64,
    #[arg(long, default_value_t = 0)]
    component: usize,
}

#[derive(Subcommand)]
enum MinseqCmd {
    Generate {
        #[command(flatten)]
        seq: SeqArgs,
    },
    /// Checks a pointed word `left.right`, or the generated window when none is given.
    Verify {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        word: Option<String>,
        #[arg(long, default_value_t = minseq::DEFAULT_TOL_MIN)]
        tol: f64,
    },
    Series {
        #[command(flatten)]
        seq: SeqArgs,
        /// Use slopes identically one.
        #[arg(long)]
        control: bool,
    },
}

#[derive(Subcommand)]
enum AffineCmd {
    /// Blown-up affine interval exchange for one minimal sequence.
    Build {
        #[command(flatten)]
        seq: SeqArgs,
    },
}

#[derive(Subcommand)]
enum RauzyCmd {
    /// Rauzy class of a permutation (hyperelliptic of size --d by default).
    Class {
        #[arg(long, default_value_t = 6)]
        d: usize,
        #[arg(long, value_delimiter = ',', requires = "bottom")]
        top: Vec<usize>,
        #[arg(long, value_delimiter = ',', requires = "top")]
        bottom: Vec<usize>,
        /// Print Graphviz instead of a report.
        #[arg(long)]
        dot: bool,
    },
    /// Characteristic polynomial analysis of the parametric matrix family.
    Family {
        #[arg(long)]
        n: i64,
        #[arg(long, default_value_t = 1000)]
        root_check: u64,
    },
}

impl Common {
    fn config(&self) -> PipelineConfig {
        let source = match (&self.substitution, &self.example) {
            (Some(p), _) => Source::Path(p.clone()),
            (None, Some(e)) => Source::parse(e),
            (None, None) => Source::Ay,
        };
        PipelineConfig {
            source,
            beta_index: self.beta_index,
            depth_cap: self.depth_cap,
            psi_grid: self.psi_grid,
            psi_tol: self.psi_tol,
            eps_arc: self.eps_arc,
            window: self.window,
            horizon: self.horizon,
            theta: self.theta,
            seed: self.seed,
            out: self.out.clone(),
            ..PipelineConfig::default()
        }
    }
}

/// Flattens a report into `path  value` rows.
fn table(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&p, x, rows);
                }
            }
            Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
                let items: Vec<String> = a.iter().map(scalar).collect();
                let joined = if items.len() > 12 { format!("{} … ({} items)", items[..12].join(" "), items.len()) } else { items.join(" ") };
                rows.push((prefix.to_string(), joined));
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), x, rows);
                }
            }
            _ => rows.push((prefix.to_string(), scalar(v))),
        }
    }
    fn scalar(v: &Value) -> String {
        match v {
            Value::String(s) => match s.parse::<f64>() {
                Ok(x) if s.contains('e') => format!("{x:.10e}"),
                _ if s.chars().count() > 80 => format!("{}… ({} chars)", s.chars().take(80).collect::<String>(), s.chars().count()),
                _ => s.clone(),
            },
            Value::Null => "-".into(),
            other => other.to_string(),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    let w = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
    rows.iter().map(|(k, x)| format!("{k:<w$}  {x}\n")).collect()
}

/// Writes to stdout, ignoring a closed pipe.
fn out(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(v: &Value, as_json: bool) {
    out(&if as_json { to_pretty(v) } else { table(v) });
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<String, Error> {
    std::fs::create_dir_all(dir)?;
    let p = dir.join(name);
    std::fs::write(&p, text)?;
    Ok(p.display().to_string())
}

fn letter(wb: &Workbench, name: &str) -> Result<Letter, Error> {
    wb.sub.letter(name).ok_or_else(|| Error::Config(format!("unknown letter {name:?}")))
}

fn run(cli: Cli) -> Result<(Value, bool), Error> {
    let c = &cli.common;
    if let Cmd::Rauzy { cmd } = &cli.cmd {
        return rauzy_cmd(cmd).map(|v| (v, true));
    }
    if let Cmd::RunFull { directions, n_directions } = &cli.cmd {
        let cfg = PipelineConfig { directions: directions.clone(), n_directions: *n_directions, ..c.config() };
        let b = pipeline::run_full(cfg)?;
        return Ok((b.summary(), b.passed()));
    }
    let wb = Workbench::new(c.config())?;
    let v = match &cli.cmd {
        Cmd::Analyze => wb.spectral_report(),
        Cmd::Psi { letter: None } => wb.psi_report()?,
        Cmd::Psi { letter: Some(name) } => {
            let a = letter(&wb, name)?;
            let full = wb.psi_report()?;
            with_schema("psi", json!({"letter": name, "enclosures": full["letters"][a.0]["enclosures"].clone()}))
        }
        Cmd::Fractal { cmd: FractalCmd::Render { letter: name, depth, cap } } => {
            let a = letter(&wb, name)?;
            let cloud = wb.cloud(a, *depth, *cap);
            let stem = format!("fractal_{name}_{depth}");
            let svg_path = write_file(&c.out, &format!("{stem}.svg"), &svg::fractal_svg(&cloud))?;
            let csv_path = write_file(&c.out, &format!("{stem}.csv"), &svg::cloud_csv(&cloud))?;
            with_schema("fractal", json!({"letter": name, "depth": depth, "points": cloud.points.len(), "sampled": cloud.sampled, "files": [svg_path, csv_path]}))
        }
        Cmd::Hmap { cmd: HmapCmd::LimitSet } => wb.limit_report()?,
        Cmd::Hmap { cmd: HmapCmd::Components } => {
            let mut v = wb.components_report()?;
            let path = write_file(&c.out, "components.svg", &svg::components_svg(&wb.sub, wb.components()?))?;
            v["files"] = json!([path]);
            v
        }
        Cmd::Minseq { cmd } => minseq_cmd(&wb, cmd)?,
        Cmd::Affine { cmd: AffineCmd::Build { seq } } => affine_cmd(&wb, seq)?,
        Cmd::Rauzy { .. } | Cmd::RunFull { .. } => unreachable!("handled above"),
    };
    Ok((v, true))
}

fn sequence(wb: &Workbench, seq: &SeqArgs) -> Result<pipeline::SequenceRun, Error> {
    let angle = selfsim::circle::wrap(seq.direction);
    let mut generated = wb.generate(seq.component, angle)?;
    generated.stream.materialize(&wb.sub, 81)?;
    Ok(pipeline::SequenceRun { angle, component: seq.component, generated })
}

fn minseq_cmd(wb: &Workbench, cmd: &MinseqCmd) -> Result<Value, Error> {
    Ok(match cmd {
        MinseqCmd::Generate { seq } => {
            let r = sequence(wb, seq)?;
            let g = &r.generated;
            with_schema(
                "minseq-generate",
                json!({
                    "direction": num17(r.angle),
                    "component": r.component,
                    "shift": g.shift,
                    "depth": g.depth,
                    "pass": g.report.pass,
                    "min": num17(g.report.min),
                    "zero_set": g.report.zero_set,
                    "window": wb.sub.format_pointed(&g.window),
                }),
            )
        }
        MinseqCmd::Verify { seq, word, tol } => {
            let (w, angle) = match word {
                Some(s) => (wb.sub.pointed(s).map_err(|e| Error::Config(e.to_string()))?, selfsim::circle::wrap(seq.direction)),
                None => {
                    let r = sequence(wb, seq)?;
                    (r.generated.window, r.angle)
                }
            };
            let gamma = minseq::GammaVector::unit(&wb.eig, angle);
            let rep = minseq::verify_minimal(&w, &gamma.gamma, *tol);
            with_schema(
                "minseq-verify",
                json!({
                    "direction": num17(angle),
                    "lo": rep.lo,
                    "hi": rep.hi,
                    "pass": rep.pass,
                    "min": num17(rep.min),
                    "argmin": rep.argmin,
                    "zero_set": rep.zero_set,
                    "tol": num17(rep.tol),
                }),
            )
        }
        MinseqCmd::Series { seq, control } => {
            let r = sequence(wb, seq)?;
            let s = if *control { wb.series_control(&r) } else { wb.series_for(&r) };
            with_schema(
                "minseq-series",
                json!({
                    "direction": num17(r.angle),
                    "component": r.component,
                    "control": control,
                    "verdict": format!("{:?}", s.verdict),
                    "semi_decision": true,
                    "first_small": s.first_small,
                    "last_increment": num17(s.last_increment),
                    "tail": num17(s.tail),
                    "total": num17(*s.partial_sums.last().unwrap_or(&0.0)),
                    "c1": num17(s.c1),
                    "c2": num17(s.c2),
                    "rho": num17(s.rho),
                    "rho_fit": num17(s.rho_fit),
                }),
            )
        }
    })
}

fn affine_cmd(wb: &Workbench, seq: &SeqArgs) -> Result<Value, Error> {
    if !wb.is_ay() {
        return Err(Error::Config("affine build needs the built-in interval exchange".into()));
    }
    let r = sequence(wb, seq)?;
    let (t, alpha) = iem::make_ay();
    let ind = iem::induce(&t, alpha, iem::DEFAULT_RETURN_CAP)?;
    let sim = iem::self_similarity_fit(&t, &ind, 1000, wb.cfg.seed);
    let x = pipeline::base_point(&t, &wb.sub, &sim, &r)?;
    let slopes = minseq::GammaVector::unit(&wb.eig, r.angle).slopes();
    let f = iem::denjoy_affine(&t, x, &r.generated.window, &slopes, wb.rho(), wb.cfg.window, wb.cfg.theta)?;
    let path = write_file(&wb.cfg.out, &format!("affine_{}.svg", r.component), &svg::affine_svg(&f, &t))?;
    let mut v = with_schema(
        "affine",
        json!({
            "direction": num17(r.angle),
            "component": r.component,
            "x0": num17(x),
            "semiconjugacy_residual": num17(iem::semiconjugacy_check(&f, &t, 10_000, wb.cfg.seed)),
            "gap_ratio_error": num17(f.gap_ratio_error(wb.cfg.window / 2)),
        }),
    );
    v["map"] = f.to_json();
    v["files"] = json!([path]);
    Ok(v)
}

fn rauzy_cmd(cmd: &RauzyCmd) -> Result<Value, Error> {
    Ok(match cmd {
        RauzyCmd::Class { d, top, bottom, dot } => {
            let p = if top.is_empty() { Permutation::hyperelliptic(*d) } else { Permutation::new(top.clone(), bottom.clone())? };
            if !p.is_irreducible() {
                return Err(Error::ReduciblePermutation);
            }
            let g = rauzy::rauzy_class(&p)?;
            if *dot {
                return Ok(Value::String(g.to_dot()));
            }
            with_schema(
                "rauzy-class",
                json!({
                    "root": p.to_string(),
                    "size": g.len(),
                    "strongly_connected": g.is_strongly_connected(),
                    "nodes": g.nodes.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
                    "edges": g.edges.iter().map(|e| json!(e)).collect::<Vec<_>>(),
                }),
            )
        }
        RauzyCmd::Family { n, root_check } => with_schema("rauzy-family", rauzy::family_analysis(*n, *root_check)?.to_json()),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let as_json = cli.common.json;
    match run(cli) {
        Ok((Value::String(s), _)) => {
            out(&s);
            ExitCode::SUCCESS
        }
        Ok((v, ok)) => {
            emit(&v, as_json);
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
