use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sumprod_core::config::ExperimentConfig;
use sumprod_core::expsum::{fourth_moment, parseval_check, ExpSumSpec};
use sumprod_core::harness::{
    check_katz_koester, check_t1, generate, run_ensemble, write_results_csv, write_summaries_jsonl, CheckerParams,
    CheckerResult, GeneratorKind,
};
use sumprod_core::klein::verify_intersection_laws;
use sumprod_core::numeric::format_real;
use sumprod_core::projective::{build_theorem2_arrangement, Arrangement};
use sumprod_core::sets::{
    additive_energy, bilinear_solution_count, compose_a_plus_bc, difference_set, energy_moment, nfold_sum,
    product_set, ratio_set, sumset, EnergyKind, ResidueSet,
};
use sumprod_core::FieldModulus;

#[derive(Parser)]
#[command(name = "sumprod", version, about = "Sum-product experiments over prime fields")]
struct Cli {
    /// Seed for randomized generators.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (or directory for `verify`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Write a set file.
    GenSet {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        kind: GeneratorKind,
        #[arg(long)]
        size: usize,
        /// First term of a progression (fixes the progression, no seed needed).
        #[arg(long)]
        start: Option<u64>,
        /// Common difference of an arithmetic progression.
        #[arg(long)]
        step: Option<u64>,
        /// Common ratio of a geometric progression.
        #[arg(long)]
        ratio: Option<u64>,
        #[arg(long)]
        exclude_zero: bool,
    },
    /// Run one computation on set files.
    Compute {
        /// sumset | difference | product | ratio | nfold | energy | moment | a-plus-bc |
        /// bilinear | incidences | katz-koester | parseval | fourth-moment |
        /// single-sum | double-sum | hole
        op: String,
        files: Vec<PathBuf>,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        multiplicative: bool,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        g: Option<u64>,
        #[arg(long)]
        a: Option<u64>,
        #[arg(long)]
        x: Option<u64>,
        #[arg(long)]
        y: Option<u64>,
    },
    /// Incidence statistics of the arrangement for `a + bc = a' + b'c'`, or of a dumped arrangement.
    Incidence {
        files: Vec<PathBuf>,
        /// Read an arrangement CSV instead of building one.
        #[arg(long)]
        arrangement: Option<PathBuf>,
        #[arg(long)]
        p: Option<u64>,
        /// Write the arrangement CSV here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Exhaustive α/β-plane intersection sweep over PG(3, p).
    KleinVerify {
        #[arg(long)]
        p: u64,
    },
    /// Exponential sums over powers of a primitive root, one row per `a`.
    Expsum {
        #[arg(value_enum)]
        kind: ExpKind,
        #[arg(long)]
        p: u64,
        /// Primitive root; the smallest one by default.
        #[arg(long)]
        g: Option<u64>,
        /// Frequencies `a` as a range `lo..=hi` or a single value.
        #[arg(long, default_value = "1")]
        a: String,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        x: Option<u64>,
        #[arg(long)]
        y: Option<u64>,
    },
    /// Run the checkers listed in an experiment config.
    Verify { config: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExpKind {
    Single,
    Double,
    FourthMoment,
    Hole,
}

fn modulus(p: u64) -> Result<FieldModulus> {
    Ok(FieldModulus::new(p)?)
}

fn read_sets(files: &[PathBuf], count: usize) -> Result<Vec<ResidueSet>> {
    if files.len() != count {
        bail!("expected {count} set file(s), got {}", files.len());
    }
    files
        .iter()
        .map(|f| ResidueSet::read_file(f).with_context(|| format!("reading {}", f.display())))
        .collect()
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_rows(rows: &[CheckerResult], format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Csv => write_results_csv(rows, out)?,
        Format::Jsonl => {
            for r in rows {
                writeln!(out, "{}", serde_json::to_string(r)?)?;
            }
        }
    }
    Ok(())
}

fn parse_range(s: &str) -> Result<Vec<u64>> {
    if let Some((lo, hi)) = s.split_once("..=").or_else(|| s.split_once("..")) {
        let lo: u64 = lo.trim().parse()?;
        let hi: u64 = hi.trim().parse()?;
        if lo > hi {
            bail!("empty range {s}");
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|v| Ok(v.trim().parse()?)).collect()
}

fn gen_set(cli: &Cli, p: u64, kind: GeneratorKind, size: usize, start: Option<u64>, step: Option<u64>, ratio: Option<u64>, exclude_zero: bool) -> Result<()> {
    let m = modulus(p)?;
    let set = match (kind, start) {
        (GeneratorKind::ArithmeticProgression, Some(s)) => {
            let d = step.ok_or_else(|| anyhow!("--start needs --step for an arithmetic progression"))?;
            if size as u64 > p {
                bail!("size {size} exceeds p = {p}");
            }
            let set = ResidueSet::new(m, (0..size as u64).map(|j| m.add(m.reduce(s), m.mul(m.reduce(d), j))))?;
            if set.len() != size {
                bail!("progression with step {d} repeats before {size} terms");
            }
            set
        }
        (GeneratorKind::GeometricProgression, Some(s)) => {
            let q = ratio.ok_or_else(|| anyhow!("--start needs --ratio for a geometric progression"))?;
            let mut x = m.reduce(s);
            let values: Vec<u64> = (0..size)
                .map(|_| {
                    let v = x;
                    x = m.mul(x, q);
                    v
                })
                .collect();
            let set = ResidueSet::new(m, values)?;
            if set.len() != size || set.contains_zero() {
                bail!("geometric progression does not have {size} distinct nonzero terms");
            }
            set
        }
        _ => {
            if kind.randomized() && cli.seed.is_none() {
                bail!("--seed is required for generator {kind}");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(0));
            generate(kind, m, size, exclude_zero, &mut rng)?
        }
    };
    let mut out = sink(&cli.out)?;
    out.write_all(set.to_set_text().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn write_set_or_value(cli: &Cli, set: &ResidueSet) -> Result<()> {
    match &cli.out {
        Some(path) => set.write_file(path)?,
        None => {
            println!("{}", set.len());
            print!("{}", set.to_set_text());
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn compute(
    cli: &Cli,
    op: &str,
    files: &[PathBuf],
    k: Option<f64>,
    n: Option<u64>,
    multiplicative: bool,
    p: Option<u64>,
    g: Option<u64>,
    a: Option<u64>,
    x: Option<u64>,
    y: Option<u64>,
) -> Result<()> {
    let need = |v: Option<u64>, name: &str| v.ok_or_else(|| anyhow!("--{name} is required for {op}"));
    let exp_spec = || -> Result<ExpSumSpec> {
        let m = modulus(need(p, "p")?)?;
        let a = need(a, "a")?;
        Ok(match g {
            Some(g) => ExpSumSpec::new(m, g, a)?,
            None => ExpSumSpec::with_smallest_root(m, a)?,
        })
    };
    match op {
        "sumset" | "difference" | "product" | "ratio" => {
            let s = read_sets(files, 2)?;
            let r = match op {
                "sumset" => sumset(&s[0], &s[1])?,
                "difference" => difference_set(&s[0], &s[1])?,
                "product" => product_set(&s[0], &s[1])?,
                _ => ratio_set(&s[0], &s[1])?,
            };
            write_set_or_value(cli, &r)?;
        }
        "nfold" => {
            let s = read_sets(files, 1)?;
            write_set_or_value(cli, &nfold_sum(&s[0], need(n, "n")? as usize)?)?;
        }
        "a-plus-bc" => {
            let s = read_sets(files, 3)?;
            write_set_or_value(cli, &compose_a_plus_bc(&s[0], &s[1], &s[2])?)?;
        }
        "energy" => {
            let s = read_sets(files, 2)?;
            println!("{}", additive_energy(&s[0], &s[1])?.exact_value());
        }
        "moment" => {
            let s = read_sets(files, 1)?;
            let kind = if multiplicative { EnergyKind::Multiplicative } else { EnergyKind::Additive };
            let e = energy_moment(&s[0], k.unwrap_or(2.0), kind)?;
            match e.exact {
                Some(v) => println!("{v}"),
                None => println!("{}", format_real(e.value)),
            }
        }
        "bilinear" => {
            let s = read_sets(files, 3)?;
            println!("{}", bilinear_solution_count(&s[0], &s[1], &s[2])?);
        }
        "incidences" => {
            let s = read_sets(files, 3)?;
            println!("{}", build_theorem2_arrangement(&s[0], &s[1], &s[2])?.count_incidences());
        }
        "katz-koester" => {
            let s = read_sets(files, 2)?;
            let rows = check_katz_koester(&s[0], &s[1])?;
            emit_rows(&rows, cli.format, &mut *sink(&cli.out)?)?;
            if rows.iter().any(|r| r.exact_failed()) {
                bail!("Katz–Koester inequality violated");
            }
        }
        "parseval" => {
            let s = read_sets(files, 1)?;
            let (lhs, rhs) = parseval_check(&s[0]);
            println!("{} {}", format_real(lhs), format_real(rhs));
        }
        "fourth-moment" => {
            let s = read_sets(files, 1)?;
            let (moment, pe) = fourth_moment(&s[0])?;
            println!("{} {}", format_real(moment), pe);
        }
        "single-sum" => {
            let s = exp_spec()?.single_sum(need(n, "n")?)?;
            println!("{} {} {}", format_real(s.re), format_real(s.im), format_real(s.magnitude()));
        }
        "double-sum" => {
            let s = exp_spec()?.double_sum(need(x, "x")?, need(y, "y")?)?;
            println!("{} {} {}", format_real(s.re), format_real(s.im), format_real(s.magnitude()));
        }
        "hole" => println!("{}", exp_spec()?.hole_size(need(n, "n")?)?),
        other => bail!("unknown operation `{other}`"),
    }
    Ok(())
}

fn incidence(cli: &Cli, files: &[PathBuf], arrangement: Option<&Path>, p: Option<u64>, dump: Option<&Path>) -> Result<()> {
    let (arr, bilinear) = match arrangement {
        Some(path) => {
            let m = modulus(p.ok_or_else(|| anyhow!("--p is required with --arrangement"))?)?;
            (Arrangement::read_csv(m, File::open(path)?)?, None)
        }
        None => {
            let s = read_sets(files, 3)?;
            (build_theorem2_arrangement(&s[0], &s[1], &s[2])?, Some(bilinear_solution_count(&s[0], &s[1], &s[2])?))
        }
    };
    if let Some(path) = dump {
        arr.write_csv(BufWriter::new(File::create(path)?))?;
    }
    let params = CheckerParams {
        t1_budget: usize::MAX,
        ..CheckerParams::default()
    };
    let rows = check_t1(&arr, &params)?;
    let mut out = sink(&cli.out)?;
    writeln!(out, "m,n,incidences,k_planes,k_points,bilinear,theorem1_rhs,ratio")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        arr.m(),
        arr.n(),
        arr.count_incidences(),
        arr.max_collinear_planes(),
        arr.max_collinear_points(),
        bilinear.map(|b| b.to_string()).unwrap_or_default(),
        format_real(rows[0].rhs),
        format_real(rows[0].ratio),
    )?;
    out.flush()?;
    if bilinear.is_some_and(|b| b != arr.count_incidences() as u128) {
        bail!("incidence count differs from the bilinear solution count");
    }
    Ok(())
}

fn klein_verify(cli: &Cli, p: u64) -> Result<bool> {
    let report = verify_intersection_laws(modulus(p)?)?;
    if let Some(path) = &cli.out {
        report.write_csv(BufWriter::new(File::create(path)?))?;
    }
    println!("pairs: {}", report.rows.len());
    println!("mixed violations: {}", report.mixed_violations);
    println!("same-type pairs: {}", report.same_type_pairs);
    println!("same-type violations: {}", report.same_type_violations);
    println!("lines checked: {}", report.lines_checked);
    println!("off-quadric lines: {}", report.off_quadric);
    println!("irregular planes: {}", report.bad_plane_sizes);
    println!("{}", if report.passed() { "PASS" } else { "FAIL" });
    Ok(report.passed())
}

#[allow(clippy::too_many_arguments)]
fn expsum(cli: &Cli, kind: ExpKind, p: u64, g: Option<u64>, a: &str, n: Option<u64>, x: Option<u64>, y: Option<u64>) -> Result<()> {
    let m = modulus(p)?;
    let g = g.unwrap_or_else(|| m.primitive_root());
    let base = ExpSumSpec::new(m, g, 1)?;
    let need = |v: Option<u64>, name: &str| v.ok_or_else(|| anyhow!("--{name} is required"));
    let mut out = sink(&cli.out)?;
    writeln!(out, "p,g,a,N,X,Y,lhs,rhs_formula_value,ratio")?;
    if kind == ExpKind::FourthMoment {
        let rows = sumprod_core::harness::check_fourth_moment(&base, need(n, "n")?)?;
        let r = &rows[0];
        writeln!(out, "{p},{g},,{},,,{},{},{}", r.sizes[0], r.lhs, format_real(r.rhs), format_real(r.ratio))?;
        out.flush()?;
        if rows.iter().any(|r| r.exact_failed()) {
            bail!("fourth moment differs from p·E beyond 1e-6");
        }
        return Ok(());
    }
    for a in parse_range(a)? {
        let spec = base.with_a(m.reduce(a))?;
        let rows = match kind {
            ExpKind::Single => sumprod_core::harness::check_expsum_single(&spec, need(n, "n")?)?,
            ExpKind::Double => sumprod_core::harness::check_expsum_double(&spec, need(x, "x")?, need(y, "y")?)?,
            _ => sumprod_core::harness::check_hole(&spec, need(n, "n")?, &CheckerParams::default())?,
        };
        let r = &rows[0];
        let (nn, xx, yy) = match kind {
            ExpKind::Double => (String::new(), x.unwrap().to_string(), y.unwrap().to_string()),
            _ => (n.unwrap().to_string(), String::new(), String::new()),
        };
        writeln!(out, "{p},{g},{},{nn},{xx},{yy},{},{},{}", spec.a(), r.lhs, format_real(r.rhs), format_real(r.ratio))?;
    }
    out.flush()?;
    Ok(())
}

fn verify(cli: &Cli, config: &Path) -> Result<bool> {
    let cfg = ExperimentConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    let mut spec = cfg.ensemble_spec();
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let mut summaries = Vec::new();
    let (mut exact, mut asserted) = (0, 0);
    for &checker in &cfg.checkers {
        let output = run_ensemble(&spec, checker)?;
        let ext = match cli.format {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        };
        let path = dir.join(format!("{}.{ext}", checker.name()));
        let mut file = BufWriter::new(File::create(&path)?);
        emit_rows(&output.results, cli.format, &mut file)?;
        file.flush()?;
        exact += output.exact_failures();
        asserted += output.assertion_failures();
        eprintln!(
            "{}: {} rows, {} exact failures, {} assertion failures -> {}",
            checker,
            output.results.len(),
            output.exact_failures(),
            output.assertion_failures(),
            path.display()
        );
        summaries.extend(output.summaries);
    }
    let mut file = BufWriter::new(File::create(dir.join(&cfg.summary_file))?);
    write_summaries_jsonl(&summaries, &mut file)?;
    file.flush()?;
    Ok(exact == 0 && asserted == 0)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::GenSet {
            p,
            kind,
            size,
            start,
            step,
            ratio,
            exclude_zero,
        } => gen_set(cli, *p, *kind, *size, *start, *step, *ratio, *exclude_zero).map(|_| true),
        Command::Compute {
            op,
            files,
            k,
            n,
            multiplicative,
            p,
            g,
            a,
            x,
            y,
        } => compute(cli, op, files, *k, *n, *multiplicative, *p, *g, *a, *x, *y).map(|_| true),
        Command::Incidence {
            files,
            arrangement,
            p,
            dump,
        } => incidence(cli, files, arrangement.as_deref(), *p, dump.as_deref()).map(|_| true),
        Command::KleinVerify { p } => klein_verify(cli, *p),
        Command::Expsum { kind, p, g, a, n, x, y } => expsum(cli, *kind, *p, *g, a, *n, *x, *y).map(|_| true),
        Command::Verify { config } => verify(cli, config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
