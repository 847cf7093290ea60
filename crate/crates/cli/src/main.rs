use anyhow::{bail, Context, Result};
use citysize::country::{assign_quartiles, select, SearchStrategy, SelectConfig, INDICATORS};
use citysize::dist::parse_family_list;
use citysize::gof::{monte_carlo_test, GofConfig};
use citysize::mle::{fit_families, standard_errors, FitConfig, FitResult};
use citysize::select::rank_models;
use citysize::Family;
use citysize_cli::ingest::{ingest, read_country_table, Dataset, InputFormat};
use citysize_cli::pipeline::{run_pipeline, PipelineConfig};
use citysize_cli::plot::{rank_size_plot_data, to_tsv};
use citysize_cli::report::{summary, to_jsonl};
use citysize_cli::WORKERS_ENV;
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "citysize", version, about = "Fit, test and rank city-size distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Read sizes from this header column of a delimited file instead of one value per line
    #[arg(long)]
    column: Option<String>,
    /// Field delimiter for delimited input (default: tab for .tsv, comma otherwise)
    #[arg(long)]
    delimiter: Option<char>,
}

#[derive(Args, Clone)]
struct TestArgs {
    /// Bootstrap replicates per test
    #[arg(long, default_value_t = 350)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Refit the family on every synthetic sample (default)
    #[arg(long, overrides_with = "no_refit")]
    refit: bool,
    /// Compare synthetic samples against the original fit
    #[arg(long)]
    no_refit: bool,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
}

impl TestArgs {
    fn config(&self) -> GofConfig {
        GofConfig {
            replicates: self.replicates,
            seed: self.seed,
            refit: !self.no_refit,
            significance_level: self.level,
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate families on one dataset, with standard errors
    Fit {
        file: PathBuf,
        /// Comma-separated families, or "all"
        #[arg(long, default_value = "all")]
        families: String,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Monte-Carlo KS/CM/AD tests of fitted families on one dataset
    Test {
        file: PathBuf,
        #[arg(long, default_value = "all")]
        families: String,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        test: TestArgs,
    },
    /// AIC/BIC table for one dataset
    Rank {
        file: PathBuf,
        #[arg(long, default_value = "all")]
        families: String,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Fit, test and rank every dataset; write the JSON-lines report
    Pipeline {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value = "all")]
        families: String,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        test: TestArgs,
        /// Machine-readable report (JSON lines)
        #[arg(long, default_value = "report.jsonl")]
        out: PathBuf,
        /// Also write the three summary tables to this directory
        #[arg(long)]
        tables: Option<PathBuf>,
        /// Do not print the summary tables
        #[arg(long)]
        quiet: bool,
    },
    /// Choose a quartile-balanced subset of entities from an indicator table
    SelectCountries {
        /// Delimited table with an id column and the five indicator columns
        table: PathBuf,
        #[arg(long, default_value_t = 70)]
        m: usize,
        #[arg(long, default_value_t = 5000)]
        iterations: usize,
        /// Comma-separated ids that must be selected
        #[arg(long, value_delimiter = ',')]
        force: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "id")]
        id_column: String,
        /// Swap one member per iteration instead of drawing a fresh subset
        #[arg(long)]
        swap: bool,
        #[arg(long)]
        delimiter: Option<char>,
    },
    /// Rank-size plot data with a fitted family's predictions
    PlotData {
        file: PathBuf,
        #[arg(long)]
        family: Family,
        #[command(flatten)]
        input: InputArgs,
        /// Output file (default: standard output)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn delimiter_for(path: &Path, explicit: Option<char>) -> Result<u8> {
    match explicit {
        Some(c) if c.is_ascii() => Ok(c as u8),
        Some(c) => bail!("delimiter must be an ASCII character, got {c:?}"),
        None if path.extension().is_some_and(|e| e == "tsv") => Ok(b'\t'),
        None => Ok(b','),
    }
}

fn load(path: &Path, input: &InputArgs) -> Result<Dataset> {
    let format = match &input.column {
        Some(column) => InputFormat::Delimited { column: column.clone(), delimiter: delimiter_for(path, input.delimiter)? },
        None => InputFormat::OneColumn,
    };
    let d = ingest(path, &format)?;
    eprintln!("read {} sizes from {}", d.len(), path.display());
    Ok(d)
}

fn families(s: &str) -> Result<Vec<Family>> {
    Ok(parse_family_list(s)?)
}

fn fit_all(data: &Dataset, fams: &[Family]) -> Result<Vec<(Family, Result<FitResult, String>)>> {
    let fits = fit_families(fams, &data.sizes, &FitConfig::default())?;
    Ok(fits
        .into_iter()
        .map(|(f, r)| {
            let r = r.map_err(|e| e.to_string()).map(|fit| {
                if fit.converged {
                    standard_errors(&fit, &data.sizes).unwrap_or(fit)
                } else {
                    fit
                }
            });
            (f, r)
        })
        .collect())
}

fn print_fit(out: &mut impl Write, fit: &FitResult) -> Result<()> {
    let names = fit.family().param_names();
    writeln!(
        out,
        "{}  logL = {:.6}  n = {}  status = {:?}  method = {:?}",
        fit.family(),
        fit.log_likelihood,
        fit.n,
        fit.status,
        fit.method
    )?;
    let fmt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
    for (i, (name, value)) in names.iter().zip(fit.spec.params()).enumerate() {
        let flag = match fit.significant()[i] {
            Some(false) => "  (not significant)",
            _ => "",
        };
        writeln!(out, "  {name:<7} {value:>14.6}  se {:>12}  t {:>10}{flag}", fmt(fit.std_errors[i]), fmt(fit.t_ratios[i]))?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();

    match cli.command {
        Command::Fit { file, families: fams, input } => {
            let data = load(&file, &input)?;
            for (family, r) in fit_all(&data, &families(&fams)?)? {
                match r {
                    Ok(fit) => print_fit(&mut out, &fit)?,
                    Err(e) => writeln!(out, "{family}  not estimated: {e}")?,
                }
            }
        }
        Command::Test { file, families: fams, input, test } => {
            let data = load(&file, &input)?;
            let config = test.config();
            writeln!(out, "{:<5} {:>21} {:>21} {:>21}  VERDICT", "MODEL", "KS p (stat)", "CM p (stat)", "AD p (stat)")?;
            for (family, r) in fit_all(&data, &families(&fams)?)? {
                let report = r.and_then(|fit| {
                    if !fit.is_estimable() {
                        return Err("not estimable".into());
                    }
                    monte_carlo_test(&data.sizes, family, &fit, &config).map_err(|e| e.to_string())
                });
                match report {
                    Ok(g) => {
                        let cell = |t: &citysize::gof::TestOutcome| format!("{:.4} ({:.4})", t.p_value, t.statistic);
                        writeln!(out, "{family:<5} {:>21} {:>21} {:>21}  {}", cell(&g.ks), cell(&g.cm), cell(&g.ad), g.verdict)?;
                    }
                    Err(e) => writeln!(out, "{family:<5} not tested: {e}")?,
                }
            }
        }
        Command::Rank { file, families: fams, input } => {
            let data = load(&file, &input)?;
            let fits: Vec<FitResult> = fit_all(&data, &families(&fams)?)?
                .into_iter()
                .filter_map(|(_, r)| r.ok())
                .filter(|f| f.is_estimable())
                .collect();
            let c = rank_models(&fits, data.len())?;
            writeln!(out, "{:<5} {:>2} {:>16} {:>16} {:>16}", "MODEL", "k", "logL", "AIC", "BIC")?;
            for s in &c.scores {
                writeln!(out, "{:<5} {:>2} {:>16.4} {:>16.4} {:>16.4}", s.family.label(), s.k, s.log_likelihood, s.aic, s.bic)?;
            }
            writeln!(out, "best by AIC: {}  best by BIC: {}", c.best_aic, c.best_bic)?;
        }
        Command::Pipeline { files, families: fams, input, test, out: path, tables, quiet } => {
            let datasets = files.iter().map(|f| load(f, &input)).collect::<Result<Vec<_>>>()?;
            let config = PipelineConfig { families: families(&fams)?, gof: test.config(), ..Default::default() };
            let report = run_pipeline(&datasets, &config)?;
            fs::write(&path, to_jsonl(&report)).with_context(|| format!("writing {}", path.display()))?;
            if let Some(dir) = tables {
                use citysize_cli::report::{table_choices, table_tally, table_verdicts};
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("verdicts.txt"), table_verdicts(&report))?;
                fs::write(dir.join("choices.txt"), table_choices(&report))?;
                fs::write(dir.join("tally.txt"), table_tally(&report))?;
            }
            if !quiet {
                write!(out, "{}", summary(&report))?;
            }
        }
        Command::SelectCountries { table, m, iterations, force, seed, id_column, swap, delimiter } => {
            let rows = read_country_table(&table, &id_column, delimiter_for(&table, delimiter)?)?;
            let t = assign_quartiles(&rows)?;
            let strategy = if swap { SearchStrategy::Swap } else { SearchStrategy::FreshDraw };
            let outcome = select(&t, &SelectConfig { m, forced: force, iterations, seed, strategy })?;
            writeln!(out, "selected {} of {} (spread {:.4} after {} iterations, {} improvements)", m, t.len(), outcome.spread, outcome.iterations, outcome.accepted.len() - 1)?;
            writeln!(out, "{:<16} {:>4} {:>4} {:>4} {:>4}", "INDICATOR", "Q1", "Q2", "Q3", "Q4")?;
            for (name, row) in INDICATORS.iter().zip(&outcome.representation) {
                writeln!(out, "{name:<16} {:>4} {:>4} {:>4} {:>4}", row[0], row[1], row[2], row[3])?;
            }
            let totals = outcome.quartile_totals();
            writeln!(out, "{:<16} {:>4} {:>4} {:>4} {:>4}", "all", totals[0], totals[1], totals[2], totals[3])?;
            writeln!(out, "{}", outcome.chosen.join(","))?;
        }
        Command::PlotData { file, family, input, out: path } => {
            let data = load(&file, &input)?;
            let (_, fit) = fit_all(&data, &[family])?.pop().expect("one family requested");
            let fit = fit.map_err(anyhow::Error::msg)?;
            let tsv = to_tsv(&rank_size_plot_data(&data, &fit.spec));
            match path {
                Some(p) => fs::write(&p, tsv).with_context(|| format!("writing {}", p.display()))?,
                None => out.write_all(tsv.as_bytes())?,
            }
        }
    }
    Ok(())
}
