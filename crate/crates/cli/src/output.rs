//! Output directory handling: artifact files, the run manifest and a plotting stub.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::CliError;

/// Collects the files written by one run.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new(), started: Instant::now() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Opens `name` for writing and hands a buffered writer to `f`.
    pub fn write<F, E>(&mut self, name: &str, f: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), E>,
        E: std::fmt::Display,
    {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        if !self.files.iter().any(|n| n == name) {
            self.files.push(name.to_string());
        }
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        self.write(name, |w| serde_json::to_writer_pretty(&mut *w, value))
    }

    /// Writes `manifest.json` (config echo, version, wall time, file list) and `plot.py`.
    pub fn finish(mut self, command: &str, config_toml: &str, seed: u64) -> Result<Vec<String>, CliError> {
        let csvs: Vec<String> = self.files.iter().filter(|f| f.ends_with(".csv")).cloned().collect();
        if !csvs.is_empty() {
            let script = plot_script(&csvs);
            self.write("plot.py", |w| w.write_all(script.as_bytes()))?;
        }
        let mut files = self.files.clone();
        files.push("manifest.json".into());
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            files: &files,
            config: config_toml,
        };
        self.json("manifest.json", &manifest)?;
        Ok(self.files)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    wall_time_s: f64,
    files: &'a [String],
    config: &'a str,
}

fn plot_script(csvs: &[String]) -> String {
    let mut s = String::from(
        "# Generated plotting stub. Each CSV has a header row; the first column is the abscissa.\n\
         import csv\nimport sys\n\nimport matplotlib.pyplot as plt\n\n\n\
         def load(path):\n    with open(path) as f:\n        rows = list(csv.reader(f))\n    return rows[0], rows[1:]\n\n\n\
         FILES = [\n",
    );
    for f in csvs {
        s.push_str(&format!("    {f:?},\n"));
    }
    s.push_str(
        "]\n\nfor name in FILES:\n    header, rows = load(name)\n    fig, ax = plt.subplots()\n\
         \x20   for j in range(1, len(header)):\n\
         \x20       pts = [(float(r[0]), float(r[j])) for r in rows if r[0] and r[j]]\n\
         \x20       if pts:\n            ax.plot(*zip(*pts), label=header[j])\n\
         \x20   ax.set_xlabel(header[0])\n    ax.legend()\n    fig.savefig(name.replace(\".csv\", \".png\"))\n\n\
         if \"--show\" in sys.argv:\n    plt.show()\n",
    );
    s
}

/// Writes rows of floats under `header`.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}
