//! File formats: record streams, snapshot and metrics TSV, SVG plots.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod metrics;
pub mod snapshot;
pub mod stream;
pub mod svg;

pub use metrics::MetricsWriter;
pub use snapshot::{parse_snapshot, write_snapshot, Snapshot, SnapshotRow};
pub use stream::{write_stream, StreamError, StreamReader};
pub use svg::{render_plot, PlotOptions};

/// An IO failure tagged with the file it concerns.
#[derive(Debug, Error)]
#[error("{}: {source}", path.display())]
pub struct PathError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

impl PathError {
    pub fn new(path: &Path, source: io::Error) -> Self {
        Self {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Creates `path` and hands a buffered writer to `body`, flushing at the end.
pub fn write_file<F>(path: &Path, body: F) -> Result<(), PathError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let file = File::create(path).map_err(|e| PathError::new(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|()| out.flush())
        .map_err(|e| PathError::new(path, e))
}
