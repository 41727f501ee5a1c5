//! End-to-end driver behind the command-line tool.
//!
//! [`run`] feeds a record source through the model and, every
//! `snapshot_every` records, writes a snapshot TSV, an SVG plot and a batch
//! of metrics into the output directory. Snapshot and plot files are written
//! by a separate thread that receives value copies through a bounded queue.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::generators::{
    ingest_categorical, CategoricalOptions, CategoricalStream, GroupLayout, GroupSpec, NoisyGroups,
    RecordSource, SuddenChange, TenGroups,
};
use crate::io::{
    render_plot, write_file, write_snapshot, PathError, PlotOptions, Snapshot, StreamReader,
};
use crate::itemset::Itemset;
use crate::model::{Model, ModelError, ModelSnapshot, Params, ParamsError};
use crate::oracle::{self, ExactWindow};

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    TenGroups { layout: GroupLayout },
    SuddenChange { change_at: u64 },
    Noise { noise_pct: f64 },
}

#[derive(Debug, Clone)]
pub enum Source {
    /// Stream file; `lenient` skips malformed lines instead of aborting.
    File {
        path: PathBuf,
        lenient: bool,
    },
    Generator {
        kind: GeneratorKind,
        seed: u64,
    },
    /// Categorical table, repeated as often as needed.
    Categorical {
        path: PathBuf,
        options: CategoricalOptions,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emit {
    pub snapshots: bool,
    pub metrics: bool,
    pub plots: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Self {
            snapshots: true,
            metrics: true,
            plots: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: Source,
    pub params: Params,
    /// Stop after this many records; required for generators.
    pub records: Option<u64>,
    pub snapshot_every: u64,
    pub min_plot_age: u64,
    pub hide_singletons: bool,
    pub output_dir: PathBuf,
    pub emit: Emit,
    /// Also mine the exact maximal frequent itemsets of the window at every
    /// snapshot and report how many the model recovers.
    pub oracle_maximal: bool,
}

impl RunConfig {
    pub fn new(source: Source, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            source,
            params: Params::default(),
            records: None,
            snapshot_every: 500,
            min_plot_age: 0,
            hide_singletons: true,
            output_dir: output_dir.into(),
            emit: Emit::default(),
            oracle_maximal: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("output error: {0}")]
    Output(#[from] PathError),
}

impl RunError {
    /// 1 for input and output failures, 2 for configuration errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Input(_) | RunError::Output(_) => 1,
        }
    }
}

impl From<ParamsError> for RunError {
    fn from(e: ParamsError) -> Self {
        RunError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub records: u64,
    pub model_size: usize,
    pub non_singletons: usize,
    pub snapshots_written: usize,
    pub skipped_lines: usize,
    pub elapsed: Duration,
    pub last_support_rmse: Option<f64>,
}

impl RunSummary {
    pub fn records_per_second(&self) -> f64 {
        self.records as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

type Records = Box<dyn Iterator<Item = Result<Itemset, RunError>>>;

/// Opened source: the records plus what is known about the universe.
struct Opened {
    records: Records,
    universe: Option<u32>,
    groups: Option<GroupSpec>,
    skipped: Option<std::rc::Rc<std::cell::Cell<usize>>>,
}

fn open_source(config: &RunConfig) -> Result<Opened, RunError> {
    let n = config.params.n;
    let limit = config.records;
    let generated = |source: Box<dyn RecordSourceBox>,
                     groups: Option<GroupSpec>|
     -> Result<Opened, RunError> {
        let count = limit.ok_or_else(|| RunError::Config("generators need --records".into()))?;
        Ok(Opened {
            records: Box::new((1..=count).map(move |seq| Ok(source.record_at(seq)))),
            universe: None,
            groups,
            skipped: None,
        })
    };
    match &config.source {
        Source::Generator { kind, seed } => {
            let cfg = |e: crate::generators::GeneratorError| RunError::Config(e.to_string());
            match kind {
                GeneratorKind::TenGroups { layout } => {
                    let g = TenGroups::new(*seed, n, *layout).map_err(cfg)?;
                    let spec = g.spec();
                    generated(Box::new(g), Some(spec))
                }
                GeneratorKind::SuddenChange { change_at } => {
                    let g = SuddenChange::new(n, *change_at).map_err(cfg)?;
                    let spec = g.spec();
                    generated(Box::new(g), Some(spec))
                }
                GeneratorKind::Noise { noise_pct } => {
                    let g = NoisyGroups::new(*seed, n, *noise_pct).map_err(cfg)?;
                    let spec = g.spec();
                    generated(Box::new(g), Some(spec))
                }
            }
        }
        Source::Categorical { path, options } => {
            let table = read_categorical(path, options)?;
            for r in &table.rejected {
                eprintln!(
                    "{}: row {} rejected, missing value in column {}",
                    path.display(),
                    r.line,
                    r.column
                );
            }
            let universe = table.universe();
            let count = limit.unwrap_or(table.records.len() as u64);
            Ok(Opened {
                records: Box::new((1..=count).map(move |seq| Ok(table.record(seq)))),
                universe: Some(universe),
                groups: None,
                skipped: None,
            })
        }
        Source::File { path, lenient } => {
            let file = File::open(path)
                .map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
            let mut reader = StreamReader::new(BufReader::new(file))
                .with_universe(n)
                .lenient(*lenient);
            let skipped = std::rc::Rc::new(std::cell::Cell::new(0));
            let counter = skipped.clone();
            let shown = path.display().to_string();
            let mut taken = 0u64;
            let records = std::iter::from_fn(move || {
                if limit.is_some_and(|l| taken >= l) {
                    return None;
                }
                let next = reader.next();
                counter.set(reader.skipped().len());
                taken += 1;
                next.map(|r| {
                    r.map(|rec| rec.items)
                        .map_err(|e| RunError::Input(format!("{shown}: {e}")))
                })
            });
            Ok(Opened {
                records: Box::new(records),
                universe: None,
                groups: None,
                skipped: Some(skipped),
            })
        }
    }
}

/// Object-safe view of a [`RecordSource`] for boxing.
trait RecordSourceBox {
    fn record_at(&self, seq: u64) -> Itemset;
}

impl<T: RecordSource> RecordSourceBox for T {
    fn record_at(&self, seq: u64) -> Itemset {
        self.record(seq)
    }
}

pub fn read_categorical(
    path: &Path,
    options: &CategoricalOptions,
) -> Result<CategoricalStream, RunError> {
    let file = File::open(path).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
    ingest_categorical(BufReader::new(file), options)
        .map_err(|e| RunError::Input(format!("{}: {e}", path.display())))
}

enum Job {
    Snapshot(Snapshot),
}

struct Writer {
    dir: PathBuf,
    emit: Emit,
    plot: PlotOptions,
}

impl Writer {
    fn serve(self, jobs: Receiver<Job>) -> Result<usize, PathError> {
        let mut written = 0;
        for job in jobs {
            let Job::Snapshot(snapshot) = job;
            let stem = format!("{:08}", snapshot.clock);
            if self.emit.snapshots {
                let path = self.dir.join(format!("snapshot_{stem}.tsv"));
                write_file(&path, |out| write_snapshot(out, &snapshot))?;
                written += 1;
            }
            if self.emit.plots {
                let path = self.dir.join(format!("plot_{stem}.svg"));
                let svg = render_plot(&snapshot, &self.plot);
                write_file(&path, |out| out.write_all(svg.as_bytes()))?;
            }
        }
        Ok(written)
    }
}

struct MetricsSink {
    out: crate::io::MetricsWriter<BufWriter<File>>,
    path: PathBuf,
}

impl MetricsSink {
    fn create(path: PathBuf) -> Result<Self, RunError> {
        let file = File::create(&path)
            .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        Ok(Self {
            out: crate::io::MetricsWriter::new(BufWriter::new(file)),
            path,
        })
    }

    fn write(&mut self, clock: u64, name: &str, value: f64) -> Result<(), PathError> {
        self.out
            .write(clock, name, value)
            .map_err(|e| PathError::new(&self.path, e))
    }

    fn flush(&mut self) -> Result<(), PathError> {
        self.out.flush().map_err(|e| PathError::new(&self.path, e))
    }
}

/// Everything that happens at a snapshot boundary.
struct Emitter {
    jobs: Option<SyncSender<Job>>,
    metrics: Option<(MetricsSink, ExactWindow)>,
    groups: Option<GroupSpec>,
    maximal_minsupp: Option<f64>,
    interval_start: Instant,
    interval_records: u64,
    last_clock: Option<u64>,
    last_rmse: Option<f64>,
}

impl Emitter {
    fn observe(&mut self, record: Itemset) {
        if let Some((_, window)) = self.metrics.as_mut() {
            window.push(record);
        }
        self.interval_records += 1;
    }

    fn emit(&mut self, model: &Model) -> Result<(), RunError> {
        let snap = model.snapshot();
        if let Some((sink, window)) = self.metrics.as_mut() {
            let timing = (self.interval_start.elapsed(), self.interval_records);
            let rmse = write_metrics(
                sink,
                &snap,
                window,
                self.groups.as_ref(),
                self.maximal_minsupp,
                timing,
            )?;
            sink.flush()?;
            self.last_rmse = rmse.or(self.last_rmse);
        }
        if let Some(jobs) = &self.jobs {
            // a closed queue means the writer failed; its error surfaces on join
            let _ = jobs.send(Job::Snapshot(Snapshot::from_model(&snap)));
        }
        self.last_clock = Some(snap.clock);
        self.interval_start = Instant::now();
        self.interval_records = 0;
        Ok(())
    }
}

pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    if config.snapshot_every == 0 {
        return Err(RunError::Config(
            "snapshot interval must be at least 1".into(),
        ));
    }
    let opened = open_source(config)?;
    let mut params = config.params.clone();
    if let Some(n) = opened.universe {
        params.n = n;
    }
    let mut model = Model::new(params)?;

    fs::create_dir_all(&config.output_dir)
        .map_err(|e| RunError::Config(format!("{}: {e}", config.output_dir.display())))?;
    let metrics = if config.emit.metrics {
        let sink = MetricsSink::create(config.output_dir.join("metrics.tsv"))?;
        Some((sink, ExactWindow::new(model.params().ell)))
    } else {
        None
    };

    let (jobs, handle) = if config.emit.snapshots || config.emit.plots {
        let writer = Writer {
            dir: config.output_dir.clone(),
            emit: config.emit,
            plot: PlotOptions {
                min_age: config.min_plot_age,
                hide_singletons: config.hide_singletons,
                ..PlotOptions::default()
            },
        };
        let (jobs, queue) = sync_channel::<Job>(4);
        (Some(jobs), Some(thread::spawn(move || writer.serve(queue))))
    } else {
        (None, None)
    };

    let mut emitter = Emitter {
        jobs,
        metrics,
        groups: opened.groups,
        maximal_minsupp: config.oracle_maximal.then_some(model.params().minsupp),
        interval_start: Instant::now(),
        interval_records: 0,
        last_clock: None,
        last_rmse: None,
    };
    let started = Instant::now();
    let outcome = drive(
        &mut model,
        opened.records,
        &mut emitter,
        config.snapshot_every,
    );

    emitter.jobs = None;
    let written = match handle {
        Some(h) => h
            .join()
            .map_err(|_| RunError::Config("snapshot writer thread panicked".into()))??,
        None => 0,
    };
    outcome?;

    Ok(RunSummary {
        records: model.clock(),
        model_size: model.len(),
        non_singletons: model.patterns().iter().filter(|p| p.len() > 1).count(),
        snapshots_written: written,
        skipped_lines: opened.skipped.map_or(0, |s| s.get()),
        elapsed: started.elapsed(),
        last_support_rmse: emitter.last_rmse,
    })
}

fn drive(
    model: &mut Model,
    records: Records,
    emitter: &mut Emitter,
    every: u64,
) -> Result<(), RunError> {
    for record in records {
        let record = record?;
        model.process_record(&record).map_err(|e: ModelError| {
            RunError::Input(format!("record {}: {e}", model.clock() + 1))
        })?;
        emitter.observe(record);
        if model.clock().is_multiple_of(every) {
            emitter.emit(model)?;
        }
    }
    if emitter.last_clock != Some(model.clock()) {
        emitter.emit(model)?;
    }
    Ok(())
}

fn write_metrics(
    sink: &mut MetricsSink,
    snap: &ModelSnapshot,
    window: &ExactWindow,
    groups: Option<&GroupSpec>,
    maximal: Option<f64>,
    (interval, records): (Duration, u64),
) -> Result<Option<f64>, RunError> {
    let clock = snap.clock;
    let ell = u64::from(snap.ell);
    sink.write(clock, "model_size", snap.patterns.len() as f64)?;
    let larger = snap.patterns.iter().filter(|p| p.len() > 1);
    sink.write(clock, "non_singletons", larger.clone().count() as f64)?;
    sink.write(
        clock,
        "old_non_singletons",
        larger.filter(|p| snap.age(p) >= ell).count() as f64,
    )?;
    if records > 0 {
        sink.write(
            clock,
            "mean_record_micros",
            interval.as_secs_f64() * 1e6 / records as f64,
        )?;
    }
    let rmse = oracle::support_rmse(snap, window, ell).ok();
    if let Some(r) = rmse {
        sink.write(clock, "support_rmse", r)?;
    }
    if let Some(groups) = groups {
        if let Ok(ratio) = oracle::cluster_separation(snap, groups) {
            sink.write(clock, "cluster_separation", ratio)?;
        }
    }
    if let Some(minsupp) = maximal.filter(|_| !window.is_empty()) {
        // threshold scaled to a window that may not be full yet
        let minsupp = minsupp * window.len() as f64 / f64::from(window.ell());
        let truth = oracle::exact_maximal_frequent(window, minsupp);
        let report = oracle::match_report(snap, &truth, window);
        sink.write(clock, "maximal_total", report.total as f64)?;
        sink.write(clock, "maximal_exact", report.exact_matches as f64)?;
        sink.write(
            clock,
            "maximal_within_one_extra",
            report.within_one_extra as f64,
        )?;
        sink.write(clock, "maximal_missing", report.missing as f64)?;
        if let Some(r) = report.support_rmse {
            sink.write(clock, "maximal_support_rmse", r)?;
        }
    }
    Ok(rmse)
}

/// Exact view of the last `window` records of a source.
pub fn oracle_window<I>(records: I, window: u32) -> ExactWindow
where
    I: IntoIterator<Item = Itemset>,
{
    let mut w = ExactWindow::new(window);
    for r in records {
        w.push(r);
    }
    w
}

/// Text report: maximal frequent itemsets of the window and a
/// co-occurrence table of the given patterns, as `count/window` cells.
pub fn oracle_report(window: &ExactWindow, minsupp: f64, patterns: &[Itemset]) -> String {
    let mut out = String::new();
    let size = window.len();
    let maximal = oracle::exact_maximal_frequent(window, minsupp);
    out.push_str(&format!(
        "# window={size} minsupp={minsupp} maximal={}\n",
        maximal.len()
    ));
    for m in &maximal {
        out.push_str(&format!("{m}\t{}\n", window.exact_support(m)));
    }
    if !patterns.is_empty() {
        out.push_str("# co-occurrence\n");
        out.push_str(
            &std::iter::once(String::new())
                .chain(
                    patterns
                        .iter()
                        .map(|p| format!("{{{}}}", p.to_string().replace(' ', ", "))),
                )
                .collect::<Vec<_>>()
                .join("\t"),
        );
        out.push('\n');
        for a in patterns {
            out.push_str(&format!("{{{}}}", a.to_string().replace(' ', ", ")));
            for b in patterns {
                out.push_str(&format!("\t{}/{size}", window.co_occurrence(a, b)));
            }
            out.push('\n');
        }
    }
    out
}

/// Loads every record of a source for offline use (oracle, generate).
pub fn collect_records(config: &RunConfig) -> Result<(Vec<Itemset>, u32), RunError> {
    let opened = open_source(config)?;
    let universe = opened.universe.unwrap_or(config.params.n);
    let records = opened.records.collect::<Result<Vec<_>, _>>()?;
    Ok((records, universe))
}
