//! Command-line front end: `verify`, `bench`, `table1`, `cluster` and `gen`.
//!
//! Every subcommand takes the same input options. Options may also be read
//! from a `key=value` file passed with `--config`, where keys are the long
//! flag names without the leading dashes; flags given on the command line
//! take precedence over the file.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clustering::{extract_clusters_with, ClusterParams, ClusterSet};
use crate::geometry::{Point3, ReducedFormat};
use crate::io::{
    emit_metrics_csv, generate_scene, plant_boundary_points, read_pcd_file, write_pcd_file, DataMode, MetricsRecord,
    SceneSpec, TreeProfile,
};
use crate::kdtree::{KdTree, PointCloud, DEFAULT_LEAF_CAPACITY};
use crate::search::{misclassification_study, RadiusQuery, SearchMode, SearchStats, Searcher, ShellConfig};

#[derive(Debug, Parser)]
#[command(name = "kd-bonsai", version, about = "Exact radius search over half-precision compressed k-d tree leaves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[command(args_override_self = true)]
pub enum Command {
    /// Compare compressed and baseline search results; exit 1 on any difference.
    Verify(CommonArgs),
    /// Write per-frame traffic and classification metrics as CSV.
    Bench(CommonArgs),
    /// Misclassification without fallback for four reduced float formats.
    Table1(CommonArgs),
    /// Euclidean clustering in both search modes; exit 1 if they differ.
    Cluster(ClusterArgs),
    /// Write a synthetic scene to a PCD file.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Read `key=value` options from this file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Load the cloud from a PCD file instead of generating scenes.
    #[arg(long, value_name = "PATH")]
    pub pcd: Option<PathBuf>,

    /// Seed for scene generation, query sampling and boundary planting.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Number of synthetic frames; frame i uses scene seed `seed + i`.
    #[arg(long, default_value_t = 1)]
    pub frames: u64,

    /// Objects per synthetic scene.
    #[arg(long)]
    pub objects: Option<usize>,

    /// Ground returns per synthetic scene.
    #[arg(long)]
    pub ground_points: Option<usize>,

    /// Measurement noise of synthetic scenes, in meters.
    #[arg(long)]
    pub noise_sigma: Option<f32>,

    /// Coordinate magnitude cap of synthetic scenes, in meters.
    #[arg(long)]
    pub range_cap: Option<f32>,

    #[arg(long, default_value_t = DEFAULT_LEAF_CAPACITY)]
    pub leaf_capacity: usize,

    /// Comma-separated search radii in meters.
    #[arg(long, default_value = "0.5")]
    pub radius: RadiusList,

    /// `all` to query every point, or a number of points sampled per frame.
    #[arg(long, default_value = "1000", conflicts_with = "query_file")]
    pub queries: QueryCount,

    /// Text file with one `x y z` query point per line.
    #[arg(long, value_name = "PATH")]
    pub query_file: Option<PathBuf>,

    /// Search mode for `bench`.
    #[arg(long, value_enum, default_value_t = ModeArg::Bonsai)]
    pub mode: ModeArg,

    /// Output file (CSV for bench, divergence dump for verify, PCD for gen).
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Override the multiplier applied to the accumulated conversion error.
    #[arg(long)]
    pub safety_factor: Option<f32>,

    /// Plant points straddling each radius around this many anchors per
    /// frame, and add the anchors as queries.
    #[arg(long, default_value_t = 0)]
    pub boundary_anchors: usize,

    /// Planted points on each side of the boundary, one ulp apart.
    #[arg(long, default_value_t = 4)]
    pub boundary_ulps: u32,

    /// Decide inconclusive points from the approximation alone.
    #[arg(long, hide = true)]
    pub unsafe_disable_fallback: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[arg(long, default_value_t = 1)]
    pub min_size: usize,

    #[arg(long, default_value_t = usize::MAX)]
    pub max_size: usize,

    /// Write each cluster of the first frame to `<DIR>/cluster_<k>.pcd`.
    #[arg(long, value_name = "DIR")]
    pub cluster_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Baseline,
    Bonsai,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Baseline => SearchMode::Baseline,
            ModeArg::Bonsai => SearchMode::Bonsai,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Ascii,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusList(pub Vec<f32>);

impl FromStr for RadiusList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let radii = s
            .split(',')
            .map(|t| {
                let r: f32 = t.trim().parse().map_err(|_| format!("bad radius '{t}'"))?;
                if r > 0.0 && r.is_finite() {
                    Ok(r)
                } else {
                    Err(format!("radius must be positive and finite, got {r}"))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RadiusList(radii))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryCount {
    All,
    Sample(usize),
}

impl FromStr for QueryCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(QueryCount::All),
            n => n.parse().map(QueryCount::Sample).map_err(|_| format!("expected 'all' or a count, got '{n}'")),
        }
    }
}

/// Where query points come from.
#[derive(Debug, Clone, PartialEq)]
pub enum QuerySet {
    All,
    Sample(usize),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Pcd(PathBuf),
    Scenes { spec: SceneSpec, frames: u64 },
}

/// Validated options shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Input,
    pub leaf_capacity: usize,
    pub radii: Vec<f32>,
    pub queries: QuerySet,
    pub mode: SearchMode,
    pub output: Option<PathBuf>,
    pub shell: ShellConfig,
    pub seed: u64,
    pub boundary_anchors: usize,
    pub boundary_ulps: u32,
}

impl TryFrom<&CommonArgs> for RunConfig {
    type Error = anyhow::Error;

    fn try_from(a: &CommonArgs) -> Result<Self> {
        ensure!(!a.radius.0.is_empty(), "at least one radius is required");
        ensure!(a.leaf_capacity >= 1 && a.leaf_capacity <= 16, "leaf capacity must be in 1..=16");
        let input = match &a.pcd {
            Some(path) => {
                ensure!(
                    a.objects.is_none() && a.ground_points.is_none() && a.noise_sigma.is_none() && a.range_cap.is_none(),
                    "scene options cannot be combined with --pcd"
                );
                Input::Pcd(path.clone())
            }
            None => {
                let d = SceneSpec::default();
                let spec = SceneSpec {
                    seed: a.seed,
                    n_objects: a.objects.unwrap_or(d.n_objects),
                    ground_points: a.ground_points.unwrap_or(d.ground_points),
                    noise_sigma: a.noise_sigma.unwrap_or(d.noise_sigma),
                    range_cap: a.range_cap.unwrap_or(d.range_cap),
                    ..d
                };
                spec.validate()?;
                ensure!(a.frames >= 1, "--frames must be at least 1");
                Input::Scenes { spec, frames: a.frames }
            }
        };
        let mut shell = ShellConfig::default();
        if let Some(f) = a.safety_factor {
            ensure!(f >= 1.0 && f.is_finite(), "safety factor must be a finite value >= 1");
            shell = shell.with_safety_factor(f);
        }
        if a.unsafe_disable_fallback {
            shell = shell.without_fallback();
        }
        let queries = match (&a.query_file, a.queries) {
            (Some(p), _) => QuerySet::File(p.clone()),
            (None, QueryCount::All) => QuerySet::All,
            (None, QueryCount::Sample(n)) => QuerySet::Sample(n),
        };
        Ok(RunConfig {
            input,
            leaf_capacity: a.leaf_capacity,
            radii: a.radius.0.clone(),
            queries,
            mode: a.mode.into(),
            output: a.output.clone(),
            shell,
            seed: a.seed,
            boundary_anchors: a.boundary_anchors,
            boundary_ulps: a.boundary_ulps,
        })
    }
}

/// A loaded frame with its tree and the queries to run against it.
pub struct Frame {
    pub name: String,
    pub tree: KdTree,
    pub queries: Vec<RadiusQuery>,
}

impl RunConfig {
    /// Loads or generates every frame, plants boundary points and builds the
    /// query lists. Queries are ordered by radius, then by point.
    pub fn frames(&self) -> Result<Vec<Frame>> {
        let clouds: Vec<(PointCloud, u64)> = match &self.input {
            Input::Pcd(path) => {
                let read = read_pcd_file(path).with_context(|| format!("reading {}", path.display()))?;
                if read.dropped > 0 {
                    eprintln!("{}: dropped {} non-finite points", path.display(), read.dropped);
                }
                vec![(read.cloud, self.seed)]
            }
            Input::Scenes { spec, frames } => (0..*frames)
                .map(|i| {
                    let seed = spec.seed.wrapping_add(i);
                    Ok((generate_scene(&spec.with_seed(seed))?, seed))
                })
                .collect::<Result<_>>()?,
        };
        let file_points = match &self.queries {
            QuerySet::File(path) => Some(read_query_file(path)?),
            _ => None,
        };

        let mut frames = Vec::with_capacity(clouds.len());
        for (mut cloud, seed) in clouds {
            let mut anchors = Vec::new();
            for &r in &self.radii {
                anchors.push(plant_boundary_points(&mut cloud, self.boundary_anchors, r, self.boundary_ulps, seed));
            }
            let name = cloud.id.clone();
            let tree = KdTree::build(cloud, self.leaf_capacity).with_context(|| format!("building tree for {name}"))?;
            let points = tree.points();
            let base: Vec<Point3> = match (&self.queries, &file_points) {
                (_, Some(fp)) => fp.clone(),
                (QuerySet::All, _) => points.to_vec(),
                (QuerySet::Sample(n), _) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut idx = rand::seq::index::sample(&mut rng, points.len(), (*n).min(points.len())).into_vec();
                    idx.sort_unstable();
                    idx.into_iter().map(|i| points[i]).collect()
                }
                (QuerySet::File(_), None) => unreachable!(),
            };
            let mut queries = Vec::new();
            for (k, &r) in self.radii.iter().enumerate() {
                for p in base.iter().chain(anchors[k].iter().map(|&i| &points[i as usize])) {
                    queries.push(RadiusQuery::new(*p, r)?);
                }
            }
            frames.push(Frame { name, tree, queries });
        }
        Ok(frames)
    }
}

/// Reads query points, one `x y z` triple per line. Blank lines and lines
/// starting with `#` are skipped.
pub fn read_query_file(path: &Path) -> Result<Vec<Point3>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let c: Vec<f32> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}:{}: bad number", path.display(), i + 1))?;
        if c.len() != 3 {
            bail!("{}:{}: expected three coordinates", path.display(), i + 1);
        }
        out.push(Point3::new(c[0], c[1], c[2]));
    }
    Ok(out)
}

/// A query whose compressed result differs from the baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub frame: String,
    pub query_index: usize,
    pub query: RadiusQuery,
    /// In the baseline result only.
    pub missing: Vec<u32>,
    /// In the compressed result only.
    pub extra: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub queries: usize,
    pub stats: SearchStats,
    pub divergences: Vec<Divergence>,
}

pub fn cmd_verify(config: &RunConfig) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    for frame in config.frames()? {
        let searcher = Searcher::with_config(&frame.tree, config.shell);
        let results: Vec<(Option<Divergence>, SearchStats)> = frame
            .queries
            .par_iter()
            .enumerate()
            .map(|(i, q)| {
                let (base, _) = searcher.baseline(q);
                let (bonsai, stats) = searcher.bonsai(q);
                let div = (base != bonsai).then(|| Divergence {
                    frame: frame.name.clone(),
                    query_index: i,
                    query: *q,
                    missing: sorted_difference(&base, &bonsai),
                    extra: sorted_difference(&bonsai, &base),
                });
                (div, stats)
            })
            .collect();
        report.queries += frame.queries.len();
        for (div, stats) in results {
            report.stats += stats;
            report.divergences.extend(div);
        }
    }
    Ok(report)
}

fn sorted_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().filter(|x| b.binary_search(x).is_err()).copied().collect()
}

/// Full-precision dump of each divergence, including the bit patterns of the
/// query and of every differing point.
pub fn format_divergences(report: &VerifyReport, frames: &[Frame]) -> String {
    let mut out = String::new();
    for d in &report.divergences {
        let q = d.query.point();
        let _ = writeln!(
            out,
            "frame {} query {} q=({:?}, {:?}, {:?}) bits=({:#010x}, {:#010x}, {:#010x}) r={:?} r2={:?}",
            d.frame,
            d.query_index,
            q.x,
            q.y,
            q.z,
            q.x.to_bits(),
            q.y.to_bits(),
            q.z.to_bits(),
            d.query.radius(),
            d.query.radius_sq()
        );
        let points = frames.iter().find(|f| f.name == d.frame).map(|f| f.tree.points());
        for (label, list) in [("missing", &d.missing), ("extra", &d.extra)] {
            for &i in list {
                let _ = match points {
                    Some(pts) => {
                        let p = pts[i as usize];
                        writeln!(
                            out,
                            "  {label} #{i} p=({:?}, {:?}, {:?}) bits=({:#010x}, {:#010x}, {:#010x}) dist2={:?}",
                            p.x,
                            p.y,
                            p.z,
                            p.x.to_bits(),
                            p.y.to_bits(),
                            p.z.to_bits(),
                            q.dist2(&p)
                        )
                    }
                    None => writeln!(out, "  {label} #{i}"),
                };
            }
        }
    }
    out
}

/// One CSV record per (frame, radius).
pub fn cmd_bench(config: &RunConfig) -> Result<Vec<MetricsRecord>> {
    let mut records = Vec::new();
    for frame in config.frames()? {
        let searcher = Searcher::with_config(&frame.tree, config.shell);
        let profile = TreeProfile::of(&frame.tree);
        for &r in &config.radii {
            let batch: Vec<&RadiusQuery> = frame.queries.iter().filter(|q| q.radius() == r).collect();
            let stats: SearchStats = batch.par_iter().map(|q| searcher.search(config.mode, q).1).sum();
            records.push(MetricsRecord::new(frame.name.clone(), r, batch.len() as u64, &profile, &stats));
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub name: &'static str,
    pub format: ReducedFormat,
    pub classifications: u64,
    pub misclassified: u64,
}

impl Table1Row {
    pub fn fraction(&self) -> f64 {
        if self.classifications == 0 {
            0.0
        } else {
            self.misclassified as f64 / self.classifications as f64
        }
    }
}

pub const TABLE1_FORMATS: [(&str, ReducedFormat); 4] = [
    ("binary32", ReducedFormat::BINARY32),
    ("half", ReducedFormat::HALF),
    ("bfloat16", ReducedFormat::BFLOAT16),
    ("custom24", ReducedFormat::CUSTOM24),
];

pub fn cmd_table1(config: &RunConfig) -> Result<Vec<Table1Row>> {
    let mut rows: Vec<Table1Row> = TABLE1_FORMATS
        .iter()
        .map(|&(name, format)| Table1Row { name, format, classifications: 0, misclassified: 0 })
        .collect();
    for frame in config.frames()? {
        let reports: Vec<_> = rows
            .par_iter()
            .map(|row| misclassification_study(&frame.tree, &frame.queries, row.format))
            .collect();
        for (row, rep) in rows.iter_mut().zip(reports) {
            row.classifications += rep.classifications;
            row.misclassified += rep.misclassified;
        }
    }
    Ok(rows)
}

pub fn format_table1(rows: &[Table1Row]) -> String {
    let mut out = format!("{:<10} {:>3} {:>3} {:>14} {:>14} {:>12}\n", "format", "E", "M", "classified", "misclassified", "percent");
    for row in rows {
        let (e, m) = (row.format.exponent_bits(), row.format.mantissa_bits());
        let _ = writeln!(
            out,
            "{:<10} {:>3} {:>3} {:>14} {:>14} {:>11.6}%",
            row.name,
            e,
            m,
            row.classifications,
            row.misclassified,
            100.0 * row.fraction()
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub frame: String,
    pub baseline: ClusterSet,
    pub bonsai: ClusterSet,
    pub baseline_stats: SearchStats,
    pub bonsai_stats: SearchStats,
}

impl ClusterReport {
    pub fn modes_agree(&self) -> bool {
        self.baseline == self.bonsai
    }
}

pub fn cmd_cluster(config: &RunConfig, min_size: usize, max_size: usize) -> Result<Vec<ClusterReport>> {
    let tolerance = config.radii[0];
    let params = ClusterParams::new(tolerance, min_size, max_size)?;
    let mut reports = Vec::new();
    for frame in config.frames()? {
        let searcher = Searcher::with_config(&frame.tree, config.shell);
        let ((baseline, baseline_stats), (bonsai, bonsai_stats)) = rayon::join(
            || extract_clusters_with(&searcher, &params, SearchMode::Baseline),
            || extract_clusters_with(&searcher, &params, SearchMode::Bonsai),
        );
        reports.push(ClusterReport { frame: frame.name, baseline, bonsai, baseline_stats, bonsai_stats });
    }
    Ok(reports)
}

/// Parses `key=value` lines into command-line arguments. A value of `true`
/// becomes a bare flag and `false` drops the key.
pub fn config_file_args(text: &str) -> Result<Vec<OsString>> {
    let mut args = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').with_context(|| format!("config line {}: expected key=value", i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        ensure!(!key.is_empty() && key != "config", "config line {}: bad key '{key}'", i + 1);
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

/// Parses the command line, splicing in the options of a `--config` file
/// right after the subcommand so explicit flags override them.
pub fn parse_args<I, T>(args: I) -> Result<Cli>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&args)?;
    let config = match &cli.command {
        Command::Verify(c) | Command::Bench(c) | Command::Table1(c) => c.config.clone(),
        Command::Cluster(c) => c.common.config.clone(),
        Command::Gen(c) => c.common.config.clone(),
    };
    let Some(path) = config else { return Ok(cli) };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let mut spliced = args[..2].to_vec();
    spliced.extend(config_file_args(&text)?);
    spliced.extend_from_slice(&args[2..]);
    Ok(Cli::try_parse_from(spliced)?)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(bytes).context("writing stdout"),
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Verify(args) => {
            let config = RunConfig::try_from(&args)?;
            let report = cmd_verify(&config)?;
            println!(
                "queries {} divergences {} inconclusive_rate {} bytes_ratio {}",
                report.queries,
                report.divergences.len(),
                report.stats.inconclusive_rate(),
                report.stats.bytes_ratio()
            );
            if report.divergences.is_empty() {
                return Ok(ExitCode::SUCCESS);
            }
            let dump = format_divergences(&report, &config.frames()?);
            match &config.output {
                Some(p) => fs::write(p, &dump).with_context(|| format!("writing {}", p.display()))?,
                None => eprint!("{dump}"),
            }
            Ok(ExitCode::FAILURE)
        }
        Command::Bench(args) => {
            let config = RunConfig::try_from(&args)?;
            let records = cmd_bench(&config)?;
            write_output(config.output.as_deref(), &emit_metrics_csv(&records))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Table1(args) => {
            let config = RunConfig::try_from(&args)?;
            let rows = cmd_table1(&config)?;
            write_output(config.output.as_deref(), format_table1(&rows).as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Cluster(args) => {
            let config = RunConfig::try_from(&args.common)?;
            let reports = cmd_cluster(&config, args.min_size, args.max_size)?;
            let mut ok = true;
            for rep in &reports {
                let agree = rep.modes_agree();
                ok &= agree;
                let mut sizes: Vec<usize> = rep.bonsai.clusters.iter().map(Vec::len).collect();
                sizes.sort_unstable_by(|a, b| b.cmp(a));
                sizes.truncate(10);
                println!(
                    "frame {} clusters {} noise {} largest {:?} modes_agree {} bytes_ratio {} inconclusive_rate {}",
                    rep.frame,
                    rep.bonsai.clusters.len(),
                    rep.bonsai.noise.len(),
                    sizes,
                    agree,
                    rep.bonsai_stats.bytes_ratio(),
                    rep.bonsai_stats.inconclusive_rate()
                );
            }
            if let (Some(dir), Some(rep)) = (&args.cluster_dir, reports.first()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let frames = config.frames()?;
                let points = frames[0].tree.points();
                for (k, members) in rep.bonsai.clusters.iter().enumerate() {
                    let cloud = PointCloud::new(
                        format!("cluster_{k}"),
                        members.iter().map(|&i| points[i as usize]).collect(),
                    );
                    write_pcd_file(&cloud, DataMode::Binary, dir.join(format!("cluster_{k}.pcd")))?;
                }
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Gen(args) => {
            let config = RunConfig::try_from(&args.common)?;
            let Some(out) = &config.output else { bail!("gen requires --output") };
            let frames = config.frames()?;
            ensure!(frames.len() == 1, "gen writes a single frame");
            let mode = match args.format {
                FormatArg::Ascii => DataMode::Ascii,
                FormatArg::Binary => DataMode::Binary,
            };
            write_pcd_file(frames[0].tree.cloud(), mode, out)?;
            println!("wrote {} points to {}", frames[0].tree.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
