//! `iietlab`: canonical infinite interval exchanges for substitution rules.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use iietlab::address::parent_set;
use iietlab::duals::search_configurations;
use iietlab::iet::{approximant_piece_count, build_approximant, exact_step};
use iietlab::numfmt::g17;
use iietlab::partition::{address_count, enumerate_dual_orders, self_similar_config, ConfigFile};
use iietlab::render::{
    flow_view_csv, flow_view_svg, iet_graph_csv, iet_graph_svg, RenderSpec, TileLengths,
};
use iietlab::spectral::{
    coincidence_check, convergence_diagnostic, self_similarity_check, spectral_coefficient,
    spectral_csv, Schedule, Sign,
};
use iietlab::{Error, FiniteIet, PhiConfig, Result, SubstitutionRule, System};

const PRECISION_VAR: &str = "IIETLAB_PRECISION";

#[derive(Parser, Debug)]
#[command(
    name = "iietlab",
    version,
    about = "Canonical IIETs for substitution subshifts",
    long_about = "Canonical IIETs for substitution subshifts.\n\n\
        The rule is assumed to be recognizable; this is not checked. \
        Non-primitive rules need --assume-minimal."
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON file with `initial_order`, `dual_order` and `assume_minimal`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Accept non-primitive rules that are known to be minimal.
    #[arg(long, global = true)]
    assume_minimal: bool,
    /// Largest number of addresses enumerated at one level.
    #[arg(long, global = true, default_value_t = 100_000)]
    max_addresses: usize,
    /// Largest supertile word built.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    max_word: usize,
    /// Largest number of pieces in a composed exchange.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    max_pieces: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Matrix, Perron data, labels and dual-order count.
    Analyze { rule: PathBuf },
    /// Piece table of the approximant, or of its power.
    Iet {
        rule: PathBuf,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 1)]
        power: u64,
        /// Merge neighbours whose translations agree within this tolerance.
        #[arg(long)]
        merge: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact orbit of a point.
    Eval {
        rule: PathBuf,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 1)]
        power: u64,
        #[arg(long, default_value_t = 64)]
        max_depth: usize,
    },
    /// Flow view of the level-n partition.
    Flowview {
        rule: PathBuf,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 8.0)]
        window: f64,
        /// Tile widths from the left eigenvector.
        #[arg(long)]
        natural: bool,
        #[command(flatten)]
        image: ImageArgs,
    },
    /// Graph of the approximant, or of its power.
    Ietgraph {
        rule: PathBuf,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 1)]
        power: u64,
        /// Draw vertical connectors at jumps.
        #[arg(long)]
        connectors: bool,
        #[command(flatten)]
        image: ImageArgs,
    },
    /// Coefficients `∫ x·𝔉ʲ(x) dx` with error bounds.
    Spectral {
        rule: PathBuf,
        #[arg(long)]
        level: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        powers: Vec<u64>,
        #[arg(long)]
        centered: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dekking coincidence test for constant-length rules.
    Coincidence { rule: PathBuf },
    /// Distances `|𝔉^{h(e)}(x) − x|` over a range of exponents.
    Convergence {
        rule: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Exponent range `E1..E2`, inclusive.
        #[arg(long, value_parser = parse_range)]
        exps: (u32, u32),
        #[arg(long)]
        out: PathBuf,
    },
    /// Self-similarity relation of the self-similar configuration.
    Selfsim {
        rule: PathBuf,
        #[arg(long, default_value_t = 25)]
        level: usize,
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Dual orders of the rule.
    Duals {
        rule: PathBuf,
        /// List every dual order.
        #[arg(long)]
        enumerate: bool,
        /// Square the rule and sweep all initial and dual orders.
        #[arg(long)]
        fib2_search: bool,
        #[arg(long, default_value_t = 8)]
        level: usize,
        #[arg(long, default_value_t = 1e-9)]
        merge: f64,
    },
}

#[derive(Args, Debug)]
struct ImageArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Svg)]
    format: Format,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 800)]
    height: u32,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Svg,
    Csv,
}

fn parse_range(s: &str) -> std::result::Result<(u32, u32), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected E1..E2, got `{s}`"))?;
    let a: u32 = a
        .trim()
        .parse()
        .map_err(|_| format!("bad exponent `{a}`"))?;
    let b: u32 = b
        .trim()
        .parse()
        .map_err(|_| format!("bad exponent `{b}`"))?;
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn check_precision() -> Result<()> {
    match std::env::var(PRECISION_VAR) {
        Err(_) => Ok(()),
        Ok(v) if v.is_empty() || v == "binary64" => Ok(()),
        Ok(v) => Err(Error::Config(format!(
            "{PRECISION_VAR}={v} is not supported; only binary64 is available"
        ))),
    }
}

struct Loaded {
    rule: SubstitutionRule,
    file: ConfigFile,
    assume_minimal: bool,
}

fn load(global: &Global, rule_path: &Path) -> Result<Loaded> {
    let rule = SubstitutionRule::parse(&read(rule_path)?)?;
    let file = match &global.config {
        Some(p) => ConfigFile::from_json(&read(p)?)?,
        None => ConfigFile::default(),
    };
    let assume_minimal = global.assume_minimal || file.assume_minimal.unwrap_or(false);
    Ok(Loaded {
        rule,
        file,
        assume_minimal,
    })
}

impl Loaded {
    fn system(&self) -> Result<System> {
        System::new(self.rule.clone(), self.assume_minimal)
    }

    fn config(&self) -> Result<PhiConfig> {
        let (initial, dual) = self.file.resolve(&self.rule)?;
        PhiConfig::new(self.system()?, initial, dual)
    }
}

fn vector(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|&x| g17(x)).collect();
    format!("({})", cells.join(", "))
}

fn analyze(l: &Loaded) -> Result<String> {
    let rule = &l.rule;
    let config = l.config()?;
    let system = config.system();
    let mut s = String::new();
    let _ = write!(s, "{rule}");
    let _ = writeln!(s, "alphabet size: {}", rule.size());
    let _ = writeln!(s, "M = {}", system.matrix);
    match system.matrix.primitivity() {
        Some(k) => {
            let _ = writeln!(s, "primitive: yes (M^{k} > 0)");
        }
        None => {
            let _ = writeln!(s, "primitive: no (assumed minimal)");
        }
    }
    if let Some(k) = rule.constant_length() {
        let _ = writeln!(s, "constant length: {k}");
    }
    let p = config.perron();
    let _ = writeln!(s, "lambda = {}", g17(p.lambda));
    let _ = writeln!(s, "r = {}", vector(&p.right));
    let _ = writeln!(s, "l = {}", vector(&p.left));
    let labels: usize = rule.letters().map(|a| rule.image_len(a)).sum();
    let _ = writeln!(s, "labels: {labels}");
    for a in rule.letters() {
        let t: Vec<String> = parent_set(rule, a)
            .iter()
            .map(|b| b.display(rule))
            .collect();
        let d: Vec<String> = config.children(a).iter().map(|b| b.display(rule)).collect();
        let _ = writeln!(
            s,
            "T_{c} = {{{}}}  dual order {}  Phi0({c}) = {}",
            t.join(","),
            d.join(","),
            g17(config.phi0(a)),
            c = rule.letter_char(a)
        );
    }
    let (count, _) = enumerate_dual_orders(rule, usize::MAX)?;
    let _ = writeln!(s, "dual orders: {count}");
    let _ = writeln!(s, "addresses at level 1: {}", address_count(rule, 1));
    Ok(s)
}

fn approximant_power(
    config: &PhiConfig,
    level: usize,
    power: u64,
    cap: usize,
) -> Result<FiniteIet> {
    if level == 0 {
        return Err(Error::Config("level must be at least 1".into()));
    }
    let f = build_approximant(config, level);
    if power == 1 {
        Ok(f)
    } else {
        f.power(power, cap)
    }
}

fn run(cli: Cli) -> Result<String> {
    check_precision()?;
    let g = &cli.global;
    match &cli.command {
        Command::Analyze { rule } => analyze(&load(g, rule)?),
        Command::Iet {
            rule,
            level,
            power,
            merge,
            out,
        } => {
            let l = load(g, rule)?;
            let config = l.config()?;
            let mut f = approximant_power(&config, *level, *power, g.max_pieces)?;
            if let Some(tol) = merge {
                f = f.merge_adjacent(*tol);
            }
            let annotate = (*power == 1 && merge.is_none()).then_some(&l.rule);
            write(out, &f.to_csv(annotate))?;
            let (dom, ran) = f.tiling_defects();
            let mut s = format!("pieces: {}", f.len());
            if *power == 1 && merge.is_none() {
                let _ = write!(
                    s,
                    " (expected {})",
                    approximant_piece_count(&l.rule, *level)
                );
            }
            let _ = write!(
                s,
                "\ntiling defects: domain {} range {}\n",
                g17(dom),
                g17(ran)
            );
            Ok(s)
        }
        Command::Eval {
            rule,
            x,
            power,
            max_depth,
        } => {
            let l = load(g, rule)?;
            let config = l.config()?;
            let mut s = String::new();
            let mut y = *x;
            for k in 1..=*power {
                let step = exact_step(&config, y, *max_depth)?;
                let _ = writeln!(
                    s,
                    "{k}: {} -> {}  address {}  level {}",
                    g17(y),
                    g17(step.value),
                    step.address.display(&l.rule),
                    step.level
                );
                y = step.value;
            }
            Ok(s)
        }
        Command::Flowview {
            rule,
            level,
            window,
            natural,
            image,
        } => {
            let l = load(g, rule)?;
            let config = l.config()?;
            let spec = RenderSpec {
                level: *level,
                window: *window,
                width: image.width,
                height: image.height,
                lengths: if *natural {
                    TileLengths::Natural
                } else {
                    TileLengths::Unit
                },
                address_cap: g.max_addresses,
                word_cap: g.max_word,
                ..RenderSpec::default()
            };
            let doc = match image.format {
                Format::Svg => flow_view_svg(&config, &spec)?,
                Format::Csv => flow_view_csv(&config, &spec)?,
            };
            write(&image.out, &doc)?;
            let bands = if *level == 0 {
                l.rule.size() as u128
            } else {
                address_count(&l.rule, *level)
            };
            Ok(format!("bands: {bands}\nwrote {}\n", image.out.display()))
        }
        Command::Ietgraph {
            rule,
            level,
            power,
            connectors,
            image,
        } => {
            let l = load(g, rule)?;
            let config = l.config()?;
            let f = approximant_power(&config, *level, *power, g.max_pieces)?;
            let spec = RenderSpec {
                width: image.width,
                height: image.height,
                connectors: *connectors,
                ..RenderSpec::default()
            };
            let doc = match image.format {
                Format::Svg => iet_graph_svg(&f, &spec)?,
                Format::Csv => iet_graph_csv(&f),
            };
            write(&image.out, &doc)?;
            Ok(format!(
                "segments: {}\nwrote {}\n",
                f.len(),
                image.out.display()
            ))
        }
        Command::Spectral {
            rule,
            level,
            powers,
            centered,
            out,
        } => {
            let l = load(g, rule)?;
            let config = l.config()?;
            let estimates = powers
                .iter()
                .map(|&j| spectral_coefficient(&config, *level, j, *centered, g.max_pieces))
                .collect::<Result<Vec<_>>>()?;
            let csv = spectral_csv(&estimates);
            write(out, &csv)?;
            Ok(csv)
        }
        Command::Coincidence { rule } => {
            let l = load(g, rule)?;
            Ok(match coincidence_check(&l.rule)? {
                Some(w) => format!(
                    "coincidence at N={}, j={} (letter {})\n",
                    w.power,
                    w.position,
                    l.rule.letter_char(w.letter)
                ),
                None => "no coincidence\n".into(),
            })
        }
        Command::Convergence {
            rule,
            samples,
            exps,
            out,
        } => {
            let l = load(g, rule)?;
            let config = l.config()?;
            let schedule = Schedule::for_rule(&l.rule);
            let table =
                convergence_diagnostic(&config, *samples, exps.0..=exps.1, schedule, g.max_pieces)?;
            write(out, &table.to_csv())?;
            let mut s = format!("level: {}\n", table.level);
            for (e, m) in &table.medians {
                let _ = writeln!(s, "e={e} median distance {}", g17(*m));
            }
            let max_clusters = table.clusters.iter().max().copied().unwrap_or(0);
            let _ = writeln!(s, "max clusters per sample: {max_clusters}");
            Ok(s)
        }
        Command::Selfsim {
            rule,
            level,
            grid,
            tol,
        } => {
            let l = load(g, rule)?;
            let (config, kappa) = self_similar_config(l.system()?)?;
            if *level == 0 {
                return Err(Error::Config("level must be at least 1".into()));
            }
            let report = self_similarity_check(&config, kappa, *level, *grid, *tol);
            let signs: Vec<&str> = report
                .passing()
                .into_iter()
                .map(|s| match s {
                    Sign::Plus => "F(x) = lambda(F(x/lambda) + kappa)",
                    Sign::Minus => "F(x) = lambda(F(x/lambda) - kappa)",
                })
                .collect();
            let mut s = format!(
                "kappa = {}\npoints: {}\nmax deviation (+kappa): {}\nmax deviation (-kappa): {}\n",
                g17(kappa),
                report.points_used,
                g17(report.plus_deviation),
                g17(report.minus_deviation)
            );
            if signs.is_empty() {
                let _ = writeln!(s, "passing: none at tol {}", g17(*tol));
            } else {
                let _ = writeln!(s, "passing: {}", signs.join("; "));
            }
            Ok(s)
        }
        Command::Duals {
            rule,
            enumerate,
            fib2_search,
            level,
            merge,
        } => {
            let l = load(g, rule)?;
            let (count, orders) = enumerate_dual_orders(&l.rule, g.max_addresses)?;
            let mut s = format!("dual orders: {count}\n");
            if *enumerate {
                for order in orders {
                    let parts: Vec<String> = l
                        .rule
                        .letters()
                        .map(|a| {
                            let ls: Vec<String> =
                                order[a].iter().map(|b| b.display(&l.rule)).collect();
                            format!("{}:{}", l.rule.letter_char(a), ls.join(","))
                        })
                        .collect();
                    let _ = writeln!(s, "{}", parts.join(";"));
                }
            }
            if *fib2_search {
                if *level == 0 {
                    return Err(Error::Config("level must be at least 1".into()));
                }
                let squared = System::new(l.rule.power(2), l.assume_minimal)?;
                let _ = write!(s, "squared rule:\n{}", squared.rule);
                let entries = search_configurations(&squared, *level, *merge, g.max_addresses)?;
                for e in &entries {
                    let counts: Vec<String> =
                        e.merged_counts.iter().map(usize::to_string).collect();
                    let _ = writeln!(
                        s,
                        "{}  merged [{}]  min {}  final {}  settled {}",
                        e.describe(&squared),
                        counts.join(" "),
                        e.min_count(),
                        e.final_count(),
                        e.final_settled_count()
                    );
                }
                let two = entries.iter().filter(|e| e.final_count() == 2).count();
                let settled = entries
                    .iter()
                    .filter(|e| e.final_settled_count() == 2)
                    .count();
                let _ = writeln!(
                    s,
                    "configurations: {}  two-piece at level {level}: {two}  two-piece off wrap slivers: {settled}",
                    entries.len()
                );
            }
            Ok(s)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("iietlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
