use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use latcrit::catalog::{load_catalog, reproduce_tables};
use latcrit::design::is_t_design_with;
use latcrit::enumerate::{enumerate_layers_with, LayerSpectrum, DEFAULT_BUDGET};
use latcrit::gram::{parse_lattice, GramFile};
use latcrit::height::{height_with, SumOptions};
use latcrit::modular::{conjecture_probe, fully_critical, ConjectureProbe, FullyCriticalOptions, Verdict};
use latcrit::rational::{fmt_rat, parse_rat, Rat};
use latcrit::report::{Analysis, LayerRow, Outcome, RunReport, Stationarity};
use latcrit::theta::theta_series_with;
use latcrit::{Error, Exec, GramMatrix, LatticeDescriptor};
use rand::SeedableRng;

/// Exact certification of lattices whose layers are spherical 2-designs, and
/// numerics for the height of flat tori.
#[derive(Parser)]
#[command(name = "latcrit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0, global = true)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args, Clone)]
struct Input {
    /// Gram matrix file (JSON or plain text).
    #[arg(value_name = "FILE", conflicts_with_all = ["gram", "name"])]
    file: Option<PathBuf>,
    #[arg(long, value_name = "FILE", conflicts_with = "name")]
    gram: Option<PathBuf>,
    /// Catalog entry, e.g. ste10a.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Structural data, layer sizes and theta series.
    Analyze {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "10")]
        bound: String,
        #[arg(long)]
        dump_layers: Option<PathBuf>,
    },
    /// Layers up to a norm bound.
    Layers {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "10")]
        bound: String,
        #[arg(long)]
        dump_layers: Option<PathBuf>,
    },
    /// Exact t-design test on one layer or on every layer up to a bound.
    Design {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 2)]
        t: u32,
        #[arg(long)]
        layer_norm: Option<String>,
        #[arg(long, default_value = "10")]
        bound: String,
    },
    /// Certifies that every layer is a 2-design.
    FullyCritical {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        bound: Option<u64>,
        /// Use the catalog's reference bound instead of the Sturm bound.
        #[arg(long)]
        fast_paper_bound: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Height of the flat torus of the normalized lattice.
    Height {
        #[command(flatten)]
        input: Input,
        /// Fixed truncation radius (default: grow until the tail is negligible).
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Norm of the projected gradient of the height.
    Stationarity {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Runs the certification over catalog dimensions.
    Tables {
        #[arg(long = "dim", value_parser = clap::value_parser!(u8).range(2..=7))]
        dims: Vec<u8>,
        #[arg(long)]
        bound: Option<u64>,
        #[arg(long)]
        fast_paper_bound: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Looks for forms whose first two layers are 2-designs but which are
    /// not fully critical. Without input, scans the catalog and random forms.
    ProbeConjecture {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 50)]
        random: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        fast_paper_bound: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: 2, message: e.to_string() }
    }
}

fn fail(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

impl Input {
    fn is_given(&self) -> bool {
        self.file.is_some() || self.gram.is_some() || self.name.is_some()
    }

    fn load(&self) -> Result<LatticeDescriptor, Failure> {
        if let Some(name) = &self.name {
            return Ok(load_catalog()?.get(name)?.descriptor.clone());
        }
        let path = self.file.as_ref().or(self.gram.as_ref()).ok_or_else(|| fail("no input: pass FILE, --gram FILE or --name NAME"))?;
        let text = std::fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
        let mut d = parse_lattice(&text)?;
        if d.name.is_none() {
            d.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(d)
    }
}

fn parse_bound(s: &str) -> Result<Rat, Failure> {
    let b = parse_rat(s)?;
    if b <= Rat::from_integer(0.into()) {
        return Err(Error::NonPositiveBound.into());
    }
    Ok(b)
}

fn sum_options(radius: Option<f64>) -> SumOptions {
    radius.map_or_else(SumOptions::default, SumOptions::fixed)
}

fn layer_rows(s: &LayerSpectrum) -> Vec<LayerRow> {
    s.layers.iter().map(|l| LayerRow { norm: fmt_rat(&l.norm), cardinality: l.cardinality() as u64 }).collect()
}

fn dump(s: &LayerSpectrum, path: &Option<PathBuf>) -> Result<(), Failure> {
    if let Some(p) = path {
        let f = File::create(p).map_err(|e| fail(format!("{}: {e}", p.display())))?;
        s.dump(BufWriter::new(f)).map_err(|e| fail(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

struct Run {
    input: Option<GramFile>,
    outcome: Outcome,
    truncation: Option<String>,
    text: Vec<String>,
    code: u8,
}

impl Run {
    fn new(input: Option<&LatticeDescriptor>, outcome: Outcome) -> Self {
        Run { input: input.map(GramFile::from_descriptor), outcome, truncation: None, text: Vec::new(), code: 0 }
    }
}

fn fc_options(bound: Option<u64>, fast: bool, budget: usize) -> FullyCriticalOptions {
    FullyCriticalOptions { override_bound: bound, fast_paper_bound: fast, budget, ..Default::default() }
}

fn execute(cmd: &Command) -> Result<Run, Failure> {
    let exec = Exec::from_features();
    match cmd {
        Command::Analyze { input, bound, dump_layers } => {
            let d = input.load()?;
            let q = &d.gram;
            let b = parse_bound(bound)?;
            let spectrum = enumerate_layers_with(q, &b, exec, DEFAULT_BUDGET)?;
            dump(&spectrum, dump_layers)?;
            // Theta exponents are Q[x]/2.
            let top = &b / Rat::from_integer(2.into());
            let theta = theta_series_with(q, None, &top, exec, DEFAULT_BUDGET)?;
            let a = Analysis {
                dim: q.dim(),
                determinant: fmt_rat(&q.determinant()),
                integral: q.is_integral(),
                even: q.is_even(),
                level: q.level().ok(),
                layers: layer_rows(&spectrum),
                theta,
            };
            let mut text = vec![
                format!("lattice {} of dimension {}", d.label(), a.dim),
                format!("determinant {}", a.determinant),
                format!("integral {}, even {}", a.integral, a.even),
            ];
            if let Some(l) = a.level {
                text.push(format!("level {l}"));
            }
            text.extend(a.layers.iter().map(|r| format!("|M_{}| = {}", r.norm, r.cardinality)));
            text.push(format!("theta = {}  (exponents <= {})", a.theta, fmt_rat(&top)));
            let mut run = Run::new(Some(&d), Outcome::Analysis(a));
            run.truncation = Some(format!("norm <= {}", fmt_rat(&b)));
            run.text = text;
            Ok(run)
        }
        Command::Layers { input, bound, dump_layers } => {
            let d = input.load()?;
            let b = parse_bound(bound)?;
            let spectrum = enumerate_layers_with(&d.gram, &b, exec, DEFAULT_BUDGET)?;
            dump(&spectrum, dump_layers)?;
            let rows = layer_rows(&spectrum);
            let text = rows.iter().map(|r| format!("{} {}", r.norm, r.cardinality)).collect();
            let mut run = Run::new(Some(&d), Outcome::Layers(rows));
            run.truncation = Some(format!("norm <= {}", fmt_rat(&b)));
            run.text = text;
            Ok(run)
        }
        Command::Design { input, t, layer_norm, bound } => {
            let d = input.load()?;
            let q = &d.gram;
            let top = match layer_norm {
                Some(k) => parse_bound(k)?,
                None => parse_bound(bound)?,
            };
            let spectrum = enumerate_layers_with(q, &top, exec, DEFAULT_BUDGET)?;
            let layers: Vec<_> = match layer_norm {
                Some(_) => spectrum.layer(&top).into_iter().collect(),
                None => spectrum.layers.iter().collect(),
            };
            if layers.is_empty() {
                return Err(fail(format!("no vectors of norm {}", fmt_rat(&top))));
            }
            let verdicts = layers.iter().map(|l| is_t_design_with(l, q, *t, exec)).collect::<Result<Vec<_>, _>>()?;
            let divisor = Rat::from_integer(1.into());
            let text = verdicts.iter().map(|v| v.transcript_line(&divisor, &v.norm)).collect();
            let code = if verdicts.iter().all(|v| v.is_design) { 0 } else { 1 };
            let mut run = Run::new(Some(&d), Outcome::Designs(verdicts));
            run.text = text;
            run.code = code;
            Ok(run)
        }
        Command::FullyCritical { input, bound, fast_paper_bound, budget } => {
            let d = input.load()?;
            let r = fully_critical(&d, &fc_options(*bound, *fast_paper_bound, *budget))?;
            let mut text = vec![
                format!("lattice {} of dimension {}", d.label(), d.gram.dim()),
                format!("level {}, weight {}, Sturm bound {}", r.level, r.weight, r.sturm_bound),
                format!("bound B = {} ({:?})", r.bound_b, r.bound_source),
            ];
            if r.doubled {
                text.push("odd lattice: working with its double".into());
            }
            if r.augmented_with_a1 {
                text.push("odd dimension: orthogonal sum with A_1 used for the level".into());
            }
            text.extend(r.transcript());
            text.push(match &r.verdict {
                Verdict::FullyCritical => "FULLY CRITICAL: every layer up to the bound is a 2-design".into(),
                Verdict::FailureAt { norm } => format!("NOT FULLY CRITICAL: the layer (x,x)={norm} is not a 2-design"),
                Verdict::Inconclusive { certified_norm, reason } => {
                    format!("INCONCLUSIVE: certified up to (x,x)={certified_norm} ({reason})")
                }
            });
            let code = r.verdict.exit_code() as u8;
            let truncation = format!("B = {}", r.bound_b);
            let mut run = Run::new(Some(&d), Outcome::FullyCritical(Box::new(r)));
            run.truncation = Some(truncation);
            run.text = text;
            run.code = code;
            Ok(run)
        }
        Command::Height { input, radius } => {
            let d = input.load()?;
            let h = height_with(&d.gram, &sum_options(*radius))?;
            let text = vec![
                format!("height h = {:.15}", h.height),
                format!("F(0) = {:.15}", h.f_value),
                format!("C = {:.15}", h.constant_c),
                format!("projected gradient norm = {:.3e}", h.projected_residual),
                format!("radius {} ({} points, tail <= {:.1e})", h.truncation_radius, h.points, h.tail_estimate),
            ];
            let truncation = format!("radius {}", h.truncation_radius);
            let mut run = Run::new(Some(&d), Outcome::Height(h));
            run.truncation = Some(truncation);
            run.text = text;
            Ok(run)
        }
        Command::Stationarity { input, radius } => {
            let d = input.load()?;
            let h = height_with(&d.gram, &sum_options(*radius))?;
            let s = Stationarity { residual: h.projected_residual, radius: h.truncation_radius };
            let text = vec![format!("stationarity residual = {:.3e}", s.residual)];
            let mut run = Run::new(Some(&d), Outcome::Stationarity(s));
            run.truncation = Some(format!("radius {}", h.truncation_radius));
            run.text = text;
            Ok(run)
        }
        Command::Tables { dims, bound, fast_paper_bound, budget } => {
            let catalog = load_catalog()?;
            let dims: Vec<usize> = if dims.is_empty() { (2..=6).collect() } else { dims.iter().map(|&d| d as usize).collect() };
            let s = reproduce_tables(&catalog, &dims, &fc_options(*bound, *fast_paper_bound, *budget));
            let code = if s.rows.iter().any(|r| matches!(r.verdict, Some(Verdict::FailureAt { .. }))) {
                1
            } else if s.mismatches > 0 {
                2
            } else {
                0
            };
            let mut run = Run::new(None, Outcome::Tables(s.clone()));
            run.text = s.render().lines().map(String::from).collect();
            run.code = code;
            Ok(run)
        }
        Command::ProbeConjecture { input, random, seed, fast_paper_bound, budget } => {
            let opts = fc_options(None, *fast_paper_bound, *budget);
            if input.is_given() {
                let d = input.load()?;
                let p = conjecture_probe(&d, &opts)?;
                let mut run = Run::new(Some(&d), Outcome::Probe(p.clone()));
                run.text = vec![probe_line(&d.label(), &p)];
                run.code = probe_code(std::slice::from_ref(&p));
                return Ok(run);
            }
            let mut forms: Vec<LatticeDescriptor> = load_catalog()?.entries.into_iter().map(|e| e.descriptor).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            for i in 0..*random {
                let n = 2 + i % 3;
                forms.push(LatticeDescriptor::named(format!("random-{i}"), GramMatrix::random_integral(n, &mut rng)));
            }
            let mut probes = Vec::new();
            let mut text = Vec::new();
            for d in &forms {
                let p = conjecture_probe(d, &opts)?;
                text.push(probe_line(&d.label(), &p));
                probes.push(p);
            }
            let hits = probes.iter().filter(|p| p.counterexample).count();
            text.push(format!("{} forms probed, {hits} counterexamples", probes.len()));
            let code = probe_code(&probes);
            let merged = ConjectureProbe {
                first_two_designs: probes.iter().any(|p| p.first_two_designs),
                fully_critical: None,
                counterexample: hits > 0,
            };
            let mut run = Run::new(None, Outcome::Probe(merged));
            run.text = text;
            run.code = code;
            Ok(run)
        }
    }
}

fn probe_line(label: &str, p: &ConjectureProbe) -> String {
    let status = match (p.counterexample, p.fully_critical) {
        (true, _) => "COUNTEREXAMPLE: first two layers are 2-designs but a later layer fails",
        (false, Some(true)) => "fully critical",
        (false, Some(false)) => "not fully critical (first two layers already fail)",
        (false, None) => "inconclusive",
    };
    format!("{label}: {status}")
}

fn probe_code(p: &[ConjectureProbe]) -> u8 {
    if p.iter().any(|p| p.counterexample) {
        1
    } else if p.iter().any(|p| p.first_two_designs && p.fully_critical.is_none()) {
        2
    } else {
        0
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Analyze { .. } => "analyze",
        Command::Layers { .. } => "layers",
        Command::Design { .. } => "design",
        Command::FullyCritical { .. } => "fully-critical",
        Command::Height { .. } => "height",
        Command::Stationarity { .. } => "stationarity",
        Command::Tables { .. } => "tables",
        Command::ProbeConjecture { .. } => "probe-conjecture",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    match execute(&cli.command) {
        Ok(run) => {
            match cli.format {
                Format::Text => {
                    for line in &run.text {
                        println!("{line}");
                    }
                }
                Format::Json => {
                    let mut report = RunReport::new(command_name(&cli.command), run.input, run.outcome, start.elapsed().as_secs_f64());
                    report.truncation = run.truncation;
                    println!("{}", report.to_json());
                }
            }
            ExitCode::from(run.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
