use std::path::PathBuf;

use cf_certify::edgeworth::correlation_effective_n;
use cf_certify::montecarlo::{
    exact_correlation_cdf, sample, sup_norm_gap, verify_enclosure, write_dump, GapGrid, SimulationPlan, Statistic,
};
use cf_certify::{
    build_correlation_model, theorem1_certify, theorem2_certify, theorem3_certify, CertifiedQuantile, MonotoneTransform,
};
use clap::{Args, ValueEnum};
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::output::{col, Column, Format, OutputTable};
use crate::setup::{Setup, StatArgs, TheoremArg};

#[derive(Debug, Clone, Args)]
pub struct AlphaArgs {
    /// Upper-tail levels, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Vec<f64>,
    /// Treat the levels as lower-tail probabilities (α = 1 − p)
    #[arg(long)]
    pub lower_tail: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write to a file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave the timestamp out of the metadata
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub stat: StatArgs,
    #[command(flatten)]
    pub alphas: AlphaArgs,
    #[arg(long, value_enum, default_value = "3")]
    pub theorem: TheoremArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub bound: BoundArgs,
    /// Level grid as start:stop:step (inclusive of stop)
    #[arg(long)]
    pub alpha_grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub bound: BoundArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Independent random substreams
    #[arg(long, default_value_t = 8)]
    pub streams: u32,
    /// DKW confidence level
    #[arg(long, default_value_t = 0.99)]
    pub confidence: f64,
    /// Also compare the correlation expansion with the exact distribution
    #[arg(long)]
    pub exact: bool,
    /// Write the raw samples to this file
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    /// T(z)
    Forward,
    /// b(x) = T⁻¹(x)
    Inverse,
    /// b′(x)
    Derivative,
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub stat: StatArgs,
    #[arg(long, value_enum, default_value = "forward")]
    pub direction: Direction,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub values: Vec<f64>,
    /// Append |b(T(z)) − z| for each value
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

const BOUND_COLUMNS: [Column; 10] = [
    col("alpha", "probability"),
    col("u_alpha", "statistic"),
    col("bracket_lo", "statistic"),
    col("bracket_hi", "statistic"),
    col("estimate", "statistic"),
    col("radius", "statistic"),
    col("interval_lo", "statistic"),
    col("interval_hi", "statistic"),
    col("window_lo", "probability"),
    col("window_hi", "probability"),
];

fn base_metadata(no_timestamp: bool) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command_line".into(), Value::String(std::env::args().collect::<Vec<_>>().join(" ")));
    m.insert("tool_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    let ts = if no_timestamp {
        Value::Null
    } else {
        Value::String(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
    };
    m.insert("timestamp".into(), ts);
    m
}

fn setup_metadata(setup: &Setup, theorem: TheoremArg, no_timestamp: bool) -> CliResult<Map<String, Value>> {
    let mut m = base_metadata(no_timestamp);
    let to_value = |s: String| serde_json::from_str::<Value>(&s).map_err(|e| CliError::Usage(e.to_string()));
    m.insert("model".into(), to_value(setup.model.to_json()?)?);
    if theorem == TheoremArg::Three {
        if let Some(t) = &setup.transform {
            m.insert("transform".into(), to_value(t.to_json()?)?);
        }
    }
    m.insert(
        "theorem".into(),
        json!(match theorem {
            TheoremArg::One => 1,
            TheoremArg::Two => 2,
            TheoremArg::Three => 3,
        }),
    );
    Ok(m)
}

fn resolve_alphas(args: &AlphaArgs, extra: &[f64]) -> CliResult<Vec<f64>> {
    let mut alphas: Vec<f64> = args.alpha.iter().chain(extra).copied().collect();
    if alphas.is_empty() {
        return Err(CliError::Usage("no levels given; use --alpha (or --alpha-grid for table)".into()));
    }
    for a in &mut alphas {
        if !(*a > 0.0 && *a < 1.0) {
            return Err(CliError::Usage(format!("level {a} is not in (0, 1)")));
        }
        if args.lower_tail {
            *a = 1.0 - *a;
        }
    }
    Ok(alphas)
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("--alpha-grid expects start:stop:step, got '{spec}'"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<_>>()?;
    let [start, stop, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || !(stop >= start) {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(CliError::Usage(format!("--alpha-grid would produce {count} levels")));
    }
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

fn certify(setup: &Setup, theorem: TheoremArg, alpha: f64) -> CliResult<CertifiedQuantile> {
    Ok(match theorem {
        TheoremArg::One => theorem1_certify(&setup.model, alpha)?,
        TheoremArg::Two => theorem2_certify(&setup.model, alpha)?,
        TheoremArg::Three => {
            let t = setup
                .transform
                .as_ref()
                .ok_or_else(|| CliError::Usage("theorem 3 needs a transform".into()))?;
            theorem3_certify(&setup.model, t, alpha)?
        }
    })
}

fn certify_all(
    setup: &Setup,
    theorem: TheoremArg,
    alphas: &[f64],
) -> CliResult<Vec<CertifiedQuantile>> {
    alphas.iter().map(|&a| certify(setup, theorem, a)).collect()
}

fn bound_table(args: &BoundArgs, setup: &Setup, certs: &[CertifiedQuantile]) -> CliResult<OutputTable> {
    let mut meta = setup_metadata(setup, args.theorem, args.output.no_timestamp)?;
    let flagged: Vec<Value> = certs
        .iter()
        .filter(|c| !c.flags.is_empty())
        .map(|c| json!({ "alpha": c.alpha, "flags": c.flags }))
        .collect();
    meta.insert("flags".into(), Value::Array(flagged));
    if args.alphas.lower_tail {
        meta.insert("lower_tail_input".into(), Value::Bool(true));
    }
    let mut table = OutputTable::new(BOUND_COLUMNS.to_vec(), meta);
    for c in certs {
        table.push(vec![
            c.alpha,
            c.limit_quantile,
            c.bracket.lo,
            c.bracket.hi,
            c.estimate,
            c.radius,
            c.interval.lo,
            c.interval.hi,
            c.window.0,
            c.window.1,
        ]);
    }
    Ok(table)
}

pub fn cmd_bound(args: &BoundArgs) -> CliResult<()> {
    let alphas = resolve_alphas(&args.alphas, &[])?;
    let setup = args.stat.setup(args.theorem)?;
    let certs = certify_all(&setup, args.theorem, &alphas)?;
    bound_table(args, &setup, &certs)?.emit(args.output.format, args.output.out.as_deref())
}

pub fn cmd_table(args: &TableArgs) -> CliResult<()> {
    let grid = match &args.alpha_grid {
        Some(spec) => parse_grid(spec)?,
        None => Vec::new(),
    };
    let alphas = resolve_alphas(&args.bound.alphas, &grid)?;
    let setup = args.bound.stat.setup(args.bound.theorem)?;
    let certs = certify_all(&setup, args.bound.theorem, &alphas)?;
    bound_table(&args.bound, &setup, &certs)?.emit(args.bound.output.format, args.bound.output.out.as_deref())
}

const VERIFY_COLUMNS: [Column; 9] = [
    col("alpha", "probability"),
    col("empirical_quantile", "statistic"),
    col("interval_lo", "statistic"),
    col("interval_hi", "statistic"),
    col("dkw_margin", "statistic"),
    col("dkw_epsilon", "probability"),
    col("slack", "statistic"),
    col("inside", "indicator"),
    col("inconclusive", "indicator"),
];

fn exact_gap(n: u32) -> CliResult<(f64, f64)> {
    let model = build_correlation_model(n)?;
    let grid = GapGrid::covering(&model.base)?;
    let gap = sup_norm_gap(&model, |x| exact_correlation_cdf(n, x).unwrap_or(f64::NAN), grid);
    let big_n = correlation_effective_n(n);
    Ok((gap, 2.2 / (big_n * big_n)))
}

pub fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    let b = &args.bound;
    let alphas = resolve_alphas(&b.alphas, &[])?;
    let statistic = b.stat.statistic()?;
    if args.exact && !matches!(statistic, Statistic::Correlation { .. }) {
        return Err(CliError::Usage("--exact is available for --stat corr only".into()));
    }
    let setup = b.stat.setup(b.theorem)?;
    let certs = certify_all(&setup, b.theorem, &alphas)?;

    let plan = SimulationPlan::new(statistic, args.samples, args.seed, args.streams)?;
    let raw = sample(&plan)?;
    if let Some(path) = &args.dump {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
        write_dump(std::io::BufWriter::new(file), &raw)?;
    }
    // The second certificate describes T(U), so compare it with transformed draws.
    let samples = match (b.theorem, &setup.transform) {
        (TheoremArg::Two, Some(t)) => raw.map_increasing(|z| t.forward(z))?,
        _ => raw,
    };

    let mut meta = setup_metadata(&setup, b.theorem, b.output.no_timestamp)?;
    meta.insert("plan".into(), serde_json::to_value(plan).map_err(|e| CliError::Usage(e.to_string()))?);
    meta.insert("confidence".into(), json!(args.confidence));
    let mut failures = Vec::new();
    if let (true, Statistic::Correlation { n }) = (args.exact, statistic) {
        let (gap, bound) = exact_gap(n)?;
        eprintln!("exact sup-norm gap: {gap:.6e}, bound 2.2/N² = {bound:.6e}, holds: {}", gap <= bound);
        meta.insert("exact_gap".into(), json!({ "gap": gap, "bound": bound, "holds": gap <= bound }));
        if !(gap <= bound) {
            failures.push(format!("exact gap {gap:e} exceeds {bound:e}"));
        }
    }

    let mut table = OutputTable::new(VERIFY_COLUMNS.to_vec(), meta);
    for cert in &certs {
        let v = verify_enclosure(cert, &samples, args.confidence)?;
        eprintln!(
            "alpha {}: inside: {}, status: {}, empirical {:.6}, interval [{:.6}, {:.6}], margin {:.6}",
            v.alpha,
            v.inside,
            format!("{:?}", v.status).to_lowercase(),
            v.empirical_quantile,
            v.interval.lo,
            v.interval.hi,
            v.dkw_margin
        );
        if !v.inside {
            failures.push(format!("alpha {}: empirical quantile outside the inflated interval", v.alpha));
        }
        table.push(vec![
            v.alpha,
            v.empirical_quantile,
            v.interval.lo,
            v.interval.hi,
            v.dkw_margin,
            v.dkw_epsilon,
            v.slack,
            f64::from(u8::from(v.inside)),
            f64::from(u8::from(v.status == cf_certify::montecarlo::EnclosureStatus::Inconclusive)),
        ]);
    }
    table.emit(b.output.format, b.output.out.as_deref())?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("verification failed: {}", failures.join("; "))))
    }
}

fn transform_for(stat: &StatArgs) -> CliResult<MonotoneTransform> {
    if let Some(path) = &stat.transform {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        return Ok(MonotoneTransform::from_json(&text)?);
    }
    match stat.setup(TheoremArg::Three) {
        Ok(Setup { transform: Some(t), .. }) => Ok(t),
        Ok(_) => Err(CliError::Usage("no transform for this statistic".into())),
        Err(e) => Err(e),
    }
}

pub fn cmd_transform(args: &TransformArgs) -> CliResult<()> {
    let mut stat = args.stat.clone();
    // The transform does not depend on the remainder constant.
    if stat.c.is_none() {
        stat.c = Some(1.0);
    }
    let t = transform_for(&stat)?;
    let mut meta = base_metadata(args.output.no_timestamp);
    let t_json: Value = serde_json::from_str(&t.to_json()?).map_err(|e| CliError::Usage(e.to_string()))?;
    meta.insert("transform".into(), t_json);
    meta.insert(
        "direction".into(),
        json!(match args.direction {
            Direction::Forward => "forward",
            Direction::Inverse => "inverse",
            Direction::Derivative => "derivative",
        }),
    );
    let (input, output) = match args.direction {
        Direction::Forward => (col("z", "statistic"), col("t_of_z", "corrected")),
        Direction::Inverse => (col("x", "corrected"), col("b_of_x", "statistic")),
        Direction::Derivative => (col("x", "corrected"), col("b_prime_of_x", "ratio")),
    };
    let mut columns = vec![input, output];
    if args.check {
        columns.push(col("round_trip_error", "statistic"));
    }
    let mut table = OutputTable::new(columns, meta);
    for &v in &args.values {
        let value = match args.direction {
            Direction::Forward => t.forward(v)?,
            Direction::Inverse => t.inverse(v)?,
            Direction::Derivative => t.inverse_derivative(v)?,
        };
        let mut row = vec![v, value];
        if args.check {
            let z = match args.direction {
                Direction::Forward => v,
                _ => t.inverse(v)?,
            };
            row.push((t.inverse(t.forward(z)?)? - z).abs());
        }
        table.push(row);
    }
    table.emit(args.output.format, args.output.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0.01:0.05:0.01").unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[4] - 0.05).abs() < 1e-15);
        assert!(parse_grid("0.1:0.05:0.01").is_err());
        assert!(parse_grid("0.1:0.2").is_err());
        assert!(parse_grid("a:b:c").is_err());
        assert!(parse_grid("0.1:0.2:0").is_err());
    }

    #[test]
    fn lower_tail_levels_are_flipped() {
        let args = AlphaArgs {
            alpha: vec![0.95, 0.99],
            lower_tail: true,
        };
        let a = resolve_alphas(&args, &[]).unwrap();
        assert!((a[0] - 0.05).abs() < 1e-15 && (a[1] - 0.01).abs() < 1e-15);
        let empty = AlphaArgs {
            alpha: vec![],
            lower_tail: false,
        };
        assert!(resolve_alphas(&empty, &[]).is_err());
    }
}
