//! Append-only metrics TSV: `clock<TAB>metric<TAB>value`.

use std::io::{self, Write};

pub struct MetricsWriter<W> {
    out: W,
    last_clock: u64,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out, last_clock: 0 }
    }

    /// Rows must arrive in non-decreasing clock order.
    pub fn write(&mut self, clock: u64, name: &str, value: f64) -> io::Result<()> {
        if clock < self.last_clock {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("metric clock {clock} is before {}", self.last_clock),
            ));
        }
        self.last_clock = clock;
        writeln!(self.out, "{clock}\t{name}\t{value}")
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_tab_separated_and_monotone() {
        let mut m = MetricsWriter::new(Vec::new());
        m.write(100, "support_rmse", 0.0125).unwrap();
        m.write(100, "model_size", 57.0).unwrap();
        m.write(200, "model_size", 58.0).unwrap();
        assert!(m.write(150, "model_size", 1.0).is_err());
        let text = String::from_utf8(m.into_inner()).unwrap();
        assert_eq!(
            text,
            "100\tsupport_rmse\t0.0125\n100\tmodel_size\t57\n200\tmodel_size\t58\n"
        );
    }
}
