use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use airdrop_cost::fiat::{
    self, gas_usd, load_prices, moving_average, parse_positive, per_recipient_usd_at_rate,
    rate_from_prices, round_usd,
};
use airdrop_cost::gas_model::GasSchedule;
use airdrop_cost::merkle::{
    claim_gas_estimate, digest_hex, parse_digest, parse_recipients, verify, Address, Amount,
    ClaimRegistry, DistributionDocument, MerkleDistribution, ProofEntry, Recipient,
};
use airdrop_cost::scenario::{
    enumerate_paper_scenarios, export_rows, omisego_estimate, run_sweep, ExportFormat, NRange,
    Scenario,
};
use airdrop_cost::strategies::{
    apply_discount, blocks_needed, calibrate_targets, distributor_cost, parse_targets,
    CalibrationTable, Family, FeasibilityReport, FillGrade, Side, StrategyDescriptor,
    StrategyError, LABEL_FORMS,
};
use rust_decimal::Decimal;

/// Marks errors in how the tool was invoked (exit status 2).
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "airdrop-cost", version, about = "Gas and fiat cost models for airdrop strategies")]
struct Cli {
    /// Fee schedule overrides, one `key=value` per line.
    #[arg(long, global = true, value_name = "FILE")]
    schedule: Option<PathBuf>,
    /// Calibration table to use instead of the bundled one.
    #[arg(long, global = true, value_name = "FILE")]
    calibration: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Itemized cost of one strategy.
    Cost(CostArgs),
    /// Sweep scenarios over a range of recipient counts.
    Sweep(SweepArgs),
    /// Block fill grades each strategy's largest transaction fits into.
    Feasibility(FeasibilityArgs),
    /// Build a Merkle distribution from a recipient list.
    MerkleBuild(MerkleBuildArgs),
    /// Extract one recipient's proof from a distribution.
    MerkleProve(MerkleProveArgs),
    /// Check a proof against a root; exits 1 on reject.
    MerkleVerify(MerkleVerifyArgs),
    /// Claim from (or reclaim) a persisted registry.
    MerkleClaim(MerkleClaimArgs),
    /// Fit per-recipient residuals to measured totals.
    Calibrate(CalibrateArgs),
    /// Convert gas to USD.
    Fiat(FiatArgs),
}

#[derive(Args)]
struct CostArgs {
    /// Strategy label, e.g. `INTERNAL_BATCH|PUSH|UNIFORM|100`.
    label: String,
    #[arg(long, short = 'n')]
    recipients: u64,
    #[arg(long)]
    batch_size: Option<u64>,
    #[arg(long)]
    uniform: bool,
    /// Price recipients as existing token holders.
    #[arg(long)]
    discounted: bool,
    /// Reset approvals with a separate zeroing transaction (pull only).
    #[arg(long, overrides_with = "no_zero_reset")]
    zero_reset: bool,
    #[arg(long)]
    no_zero_reset: bool,
    #[arg(long)]
    amount_bytes: Option<u8>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep the 35 reference scenarios (the default).
    #[arg(long, conflicts_with = "scenario")]
    paper_scenarios: bool,
    /// Restrict to these labels; repeatable.
    #[arg(long)]
    scenario: Vec<String>,
    #[arg(long, default_value = "100:5000:100")]
    n_range: String,
    /// Keep only strategies whose batches fit this share of a block.
    #[arg(long)]
    fill: Option<String>,
    #[arg(long)]
    discounted: bool,
    /// Output directory (plot-pairs) or file (table); stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "plot-pairs")]
    format: String,
}

#[derive(Args)]
struct FeasibilityArgs {
    /// Labels to check; all reference scenarios if none.
    labels: Vec<String>,
    #[arg(long, short = 'n', default_value_t = 1000)]
    recipients: u64,
}

#[derive(Args)]
struct MerkleBuildArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write a fresh claim registry here.
    #[arg(long, requires = "deadline")]
    registry: Option<PathBuf>,
    #[arg(long)]
    deadline: Option<u64>,
}

#[derive(Args)]
struct MerkleProveArgs {
    #[arg(long)]
    dist: PathBuf,
    #[arg(long, required_unless_present = "address", conflicts_with = "address")]
    index: Option<usize>,
    #[arg(long)]
    address: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MerkleVerifyArgs {
    #[arg(long)]
    root: String,
    #[arg(long)]
    proof: PathBuf,
}

#[derive(Args)]
struct MerkleClaimArgs {
    #[arg(long)]
    registry: PathBuf,
    #[arg(long, required_unless_present = "reclaim")]
    address: Option<String>,
    #[arg(long, required_unless_present = "reclaim")]
    amount: Option<String>,
    #[arg(long, required_unless_present = "reclaim")]
    proof_file: Option<PathBuf>,
    /// Return unclaimed tokens to the distributor after the deadline.
    #[arg(long, conflicts_with_all = ["address", "amount", "proof_file"])]
    reclaim: bool,
    /// Current time, in the same units as the deadline.
    #[arg(long, default_value_t = 0)]
    now: u64,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    targets: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, short = 'n', default_value_t = 1000)]
    recipients: u64,
}

#[derive(Args)]
struct FiatArgs {
    /// Daily `date,gas_price_gwei,eth_usd` series.
    #[arg(long, conflicts_with_all = ["rate", "gwei"])]
    prices: Option<PathBuf>,
    /// USD per gas, e.g. `3.0002e-6`.
    #[arg(long, conflicts_with = "gwei")]
    rate: Option<String>,
    /// Gas price in gwei, or `low`, `median`, `high`.
    #[arg(long, requires = "eth_usd")]
    gwei: Option<String>,
    #[arg(long)]
    eth_usd: Option<String>,
    #[arg(long, conflicts_with = "strategy")]
    gas: Option<u64>,
    #[arg(long, requires = "recipients")]
    strategy: Option<String>,
    #[arg(long, short = 'n')]
    recipients: Option<u64>,
    /// Centered moving average over this many days.
    #[arg(long, num_args = 0..=1, default_missing_value = "60", requires = "prices")]
    ma: Option<usize>,
    /// Also report the large reference distribution at this rate.
    #[arg(long)]
    omisego: bool,
}

struct Env {
    schedule: GasSchedule,
    table: CalibrationTable,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, doc: &str) -> Result<()> {
    fs::write(path, doc).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(out: Option<&Path>, doc: &str) -> Result<()> {
    match out {
        Some(p) => write(p, doc),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

fn parse_label(text: &str) -> Result<StrategyDescriptor> {
    text.parse().map_err(|e: StrategyError| {
        usage(format!("{e}\nvalid labels:\n  {}", LABEL_FORMS.join("\n  ")))
    })
}

fn parse_fill(text: &str) -> Result<FillGrade> {
    text.parse().map_err(|e: StrategyError| usage(e.to_string()))
}

fn parse_address(text: &str) -> Result<Address> {
    text.parse().map_err(usage)
}

fn cost(ctx: &Env, a: &CostArgs) -> Result<String> {
    let mut d = match (parse_label(&a.label), a.batch_size) {
        (Ok(d), _) => d,
        (Err(e), Some(bs)) => parse_label(&format!("{}|{bs}", a.label)).map_err(|_| e)?,
        (Err(e), None) => return Err(e),
    };
    if let Some(bs) = a.batch_size {
        d.batch_size = bs;
    }
    if a.uniform {
        d.uniform = true;
    }
    if a.zero_reset {
        d.zero_reset = true;
    }
    if a.no_zero_reset {
        d.zero_reset = false;
    }
    if let Some(b) = a.amount_bytes {
        d.amount_bytes = b;
    }
    d.validate().map_err(|e| usage(e.to_string()))?;
    let d = ctx.table.resolve(&d)?;
    let s = &ctx.schedule;
    let mut c = distributor_cost(&d, a.recipients, s, true)?;
    if a.discounted {
        c = apply_discount(&c, s)?;
    }

    let mut out = String::new();
    writeln!(out, "strategy {}", d.label())?;
    writeln!(out, "recipients {}", a.recipients)?;
    writeln!(out, "overhead_per_recipient {}", d.overhead_per_recipient)?;
    for item in &c.items {
        writeln!(out, "{} {}", item.label, item.gas)?;
    }
    writeln!(out, "batches {}", c.batches.len())?;
    writeln!(out, "distributor_gas {}", c.distributor_gas)?;
    writeln!(out, "recipient_gas_total {}", c.recipient_gas_total)?;
    writeln!(out, "total_gas {}", c.total_gas())?;
    if d.side == Side::Distributor {
        let claim = match d.family {
            Family::InternalBatchPull => Some(
                ctx.table
                    .resolve(&StrategyDescriptor::pull_recipient().with_amount_bytes(d.amount_bytes))
                    .and_then(|r| airdrop_cost::strategies::recipient_cost(&r, a.recipients, s))?,
            ),
            Family::PooledMerkle => {
                let eps = ctx.table.lookup(&StrategyDescriptor::pooled_recipient())?;
                Some(claim_gas_estimate(a.recipients, s, d.amount_bytes, eps)?)
            }
            _ => None,
        };
        if let Some(g) = claim {
            writeln!(out, "claim_gas_each {g}")?;
        }
    }
    writeln!(out, "peak_tx_gas {}", c.peak_tx_gas)?;
    writeln!(out, "feasible_at {}", FeasibilityReport::from_peak(c.peak_tx_gas, s))?;
    writeln!(out, "blocks_at_half_fill {}", blocks_needed(c.total_gas(), FillGrade::HALF, s))?;
    Ok(out)
}

fn file_name(label: &str) -> String {
    format!("{}.dat", label.replace('|', "_").replace('=', "-"))
}

fn sweep(ctx: &Env, a: &SweepArgs) -> Result<String> {
    let range: NRange = a.n_range.parse().map_err(|e: airdrop_cost::scenario::ScenarioError| usage(e.to_string()))?;
    let format: ExportFormat = a.format.parse().map_err(|e: airdrop_cost::scenario::ScenarioError| usage(e.to_string()))?;
    let fill = a.fill.as_deref().map(parse_fill).transpose()?;
    let scenarios: Vec<Scenario> = if a.scenario.is_empty() {
        enumerate_paper_scenarios()
    } else {
        a.scenario
            .iter()
            .map(|l| parse_label(l).map(Scenario::new))
            .collect::<Result<_>>()?
    };
    let rows = run_sweep(&scenarios, &range.values(), a.discounted, fill, &ctx.table, &ctx.schedule)?;
    match format {
        ExportFormat::Table => {
            emit(a.out.as_deref(), &export_rows(&rows, format))?;
            Ok(String::new())
        }
        ExportFormat::PlotPairs { .. } => {
            let mut labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
            labels.dedup();
            let mut summary = String::new();
            if let Some(dir) = &a.out {
                fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            }
            for label in labels {
                let group: Vec<_> = rows.iter().filter(|r| r.label == label).cloned().collect();
                let doc = export_rows(&group, format);
                match &a.out {
                    Some(dir) => {
                        let path = dir.join(file_name(label));
                        write(&path, &doc)?;
                        writeln!(summary, "{label} {}", path.display())?;
                    }
                    None => write!(summary, "# {label}\n{doc}\n")?,
                }
            }
            Ok(summary)
        }
    }
}

fn feasibility_cmd(ctx: &Env, a: &FeasibilityArgs) -> Result<String> {
    let descriptors: Vec<StrategyDescriptor> = if a.labels.is_empty() {
        enumerate_paper_scenarios().into_iter().map(|s| s.descriptor).collect()
    } else {
        a.labels.iter().map(|l| parse_label(l)).collect::<Result<_>>()?
    };
    let mut out = String::from("label,peak_tx_gas,feasible_at\n");
    for d in descriptors {
        let d = ctx.table.resolve(&d)?;
        let r = airdrop_cost::strategies::feasibility(&d, a.recipients, &ctx.schedule)?;
        writeln!(out, "{},{},{r}", d.label(), r.max_batch_gas)?;
    }
    Ok(out)
}

fn merkle_build(a: &MerkleBuildArgs) -> Result<String> {
    let recipients = parse_recipients(&read(&a.input)?)?;
    let dist = MerkleDistribution::build(recipients)?;
    write(&a.out, &DistributionDocument::new(&dist).to_json())?;
    if let (Some(path), Some(deadline)) = (&a.registry, a.deadline) {
        write(path, &ClaimRegistry::new(&dist, deadline).to_json())?;
    }
    Ok(format!(
        "root {}\ndepth {}\nrecipients {}\n",
        digest_hex(&dist.root()),
        dist.depth(),
        dist.len()
    ))
}

fn merkle_prove(a: &MerkleProveArgs) -> Result<String> {
    let dist = DistributionDocument::parse(&read(&a.dist)?)?;
    let index = match (a.index, &a.address) {
        (Some(i), _) => i,
        (None, Some(addr)) => {
            let addr = parse_address(addr)?;
            dist.index_of(&addr)
                .ok_or_else(|| anyhow!("{addr} is not in the distribution"))?
        }
        (None, None) => unreachable!("clap requires one of index/address"),
    };
    let proof = dist.prove(index)?;
    let doc = ProofEntry::new(&dist.recipients()[index], &proof).to_json() + "\n";
    emit(a.out.as_deref(), &doc)?;
    Ok(String::new())
}

fn parse_root(text: &str) -> Result<[u8; 32]> {
    parse_digest(text).map_err(usage)
}

/// Returns whether the proof was accepted.
fn merkle_verify(a: &MerkleVerifyArgs) -> Result<bool> {
    let root = parse_root(&a.root)?;
    let entry = ProofEntry::from_json(&read(&a.proof)?)?;
    Ok(verify(&root, &entry.recipient(), &entry.proof()))
}

fn merkle_claim(a: &MerkleClaimArgs) -> Result<String> {
    let mut reg = ClaimRegistry::from_json(&read(&a.registry)?)?;
    let msg = if a.reclaim {
        let returned = reg.reclaim(a.now)?;
        format!("reclaimed {returned}\n")
    } else {
        let address = parse_address(a.address.as_deref().unwrap_or_default())?;
        let amount: Amount = a.amount.as_deref().unwrap_or_default().parse().map_err(usage)?;
        let path = a.proof_file.as_deref().expect("clap requires a proof file");
        let entry = ProofEntry::from_json(&read(path)?)?;
        let recipient = Recipient { address, amount };
        reg.claim(&recipient, &entry.proof(), a.now)?;
        format!("claimed {} for {}\n", recipient.amount, recipient.address)
    };
    write(&a.registry, &(reg.to_json() + "\n"))?;
    Ok(msg)
}

fn calibrate(ctx: &Env, a: &CalibrateArgs) -> Result<String> {
    let targets = parse_targets(&read(&a.targets)?)?;
    let table = calibrate_targets(&targets, a.recipients, &ctx.schedule)?;
    emit(a.out.as_deref(), &table.to_string())?;
    Ok(String::new())
}

fn gas_price(text: &str) -> Result<Decimal> {
    Ok(match text {
        "low" => fiat::LOW_GAS_PRICE_GWEI,
        "median" => fiat::MEDIAN_GAS_PRICE_GWEI,
        "high" => fiat::HIGH_GAS_PRICE_GWEI,
        other => parse_positive(other, "gas price").map_err(usage)?,
    })
}

fn fiat_cmd(ctx: &Env, a: &FiatArgs) -> Result<String> {
    // gas being priced, and the divisor that makes it per recipient
    let (gas, per) = match (&a.gas, &a.strategy, a.recipients) {
        (Some(g), None, _) => (Some(*g), None),
        (None, Some(label), Some(n)) => {
            let d = ctx.table.resolve(&parse_label(label)?)?;
            (None, Some((d, n)))
        }
        (None, None, _) if a.omisego => (None, None),
        _ => return Err(usage("give --gas G, --strategy L --recipients N, or --omisego")),
    };
    let price = |rate: Decimal| -> Result<Decimal> {
        match (&gas, &per) {
            (Some(g), _) => Ok(gas_usd(*g, rate)?),
            (_, Some((d, n))) => Ok(per_recipient_usd_at_rate(d, *n, rate, &ctx.schedule)?),
            _ => Ok(Decimal::ZERO),
        }
    };
    let heading = if per.is_some() { "usd_per_recipient" } else { "usd" };

    let mut out = String::new();
    if let Some(path) = &a.prices {
        let mut series = load_prices(&read(path)?)?;
        if let Some(w) = a.ma {
            series = moving_average(&series, w, true)?;
        }
        writeln!(out, "date,gas_price_gwei,eth_usd,usd_per_gas,{heading}")?;
        for p in series.points() {
            let rate = p.usd_per_gas();
            writeln!(
                out,
                "{},{},{},{},{}",
                p.date.format("%Y-%m-%d"),
                round_usd(p.gas_price_gwei),
                round_usd(p.eth_usd),
                rate.normalize(),
                round_usd(price(rate)?)
            )?;
        }
        return Ok(out);
    }
    let rate = match (&a.rate, &a.gwei, &a.eth_usd) {
        (Some(r), None, _) => parse_positive(r, "rate").map_err(usage)?,
        (None, Some(g), Some(e)) => {
            let eth = parse_positive(e, "ETH price").map_err(usage)?;
            rate_from_prices(gas_price(g)?, eth)?
        }
        _ => return Err(usage("give --prices FILE, --rate R, or --gwei G --eth-usd E")),
    };
    writeln!(out, "usd_per_gas {}", rate.normalize())?;
    if gas.is_some() || per.is_some() {
        writeln!(out, "{heading} {}", round_usd(price(rate)?))?;
    }
    if a.omisego {
        let est = omisego_estimate(&ctx.schedule, &ctx.table, rate)?;
        writeln!(out, "{est}")?;
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let schedule = match &cli.schedule {
        Some(p) => GasSchedule::default()
            .with_overrides(&read(p)?)
            .map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => GasSchedule::default(),
    };
    let table = match &cli.calibration {
        Some(p) => read(p)?
            .parse()
            .map_err(|e: StrategyError| usage(format!("{}: {e}", p.display())))?,
        None => CalibrationTable::builtin(),
    };
    let ctx = Env { schedule, table };
    let out = match &cli.command {
        Command::Cost(a) => cost(&ctx, a)?,
        Command::Sweep(a) => sweep(&ctx, a)?,
        Command::Feasibility(a) => feasibility_cmd(&ctx, a)?,
        Command::MerkleBuild(a) => merkle_build(a)?,
        Command::MerkleProve(a) => merkle_prove(a)?,
        Command::MerkleVerify(a) => {
            let ok = merkle_verify(a)?;
            println!("{}", if ok { "accept" } else { "reject" });
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::MerkleClaim(a) => merkle_claim(a)?,
        Command::Calibrate(a) => calibrate(&ctx, a)?,
        Command::Fiat(a) => fiat_cmd(&ctx, a)?,
    };
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
