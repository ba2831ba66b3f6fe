use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::ReportBundle;
use crate::solver::RunRecord;
use crate::spectral::io::write_field_bin;
use crate::spectral::WaveState;

/// Output directory with the fixed layout `summary.json`, `report.txt`,
/// `series/*.csv` and `fields/*.bin`.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl AsRef<Path>) -> std::io::Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join("series"))?;
        fs::create_dir_all(root.join("fields"))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_summary<T: Serialize>(&self, value: &T) -> std::io::Result<PathBuf> {
        let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        let path = self.root.join("summary.json");
        fs::write(&path, text + "\n")?;
        Ok(path)
    }

    pub fn write_report(&self, text: &str) -> std::io::Result<PathBuf> {
        let path = self.root.join("report.txt");
        fs::write(&path, text)?;
        Ok(path)
    }

    /// `series/<name>.csv` filled by `body`.
    pub fn write_series(
        &self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> std::io::Result<PathBuf> {
        let path = self.root.join("series").join(format!("{}.csv", file_stem(name)));
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        Ok(path)
    }

    pub fn write_record(&self, name: &str, record: &RunRecord) -> std::io::Result<PathBuf> {
        self.write_series(name, |w| record.write_csv(w))
    }

    pub fn write_field(&self, name: &str, state: &WaveState) -> std::io::Result<PathBuf> {
        let path = self.root.join("fields").join(format!("{}.bin", file_stem(name)));
        let mut w = BufWriter::new(File::create(&path)?);
        write_field_bin(state, &mut w)?;
        w.flush()?;
        Ok(path)
    }

    /// Summary, text table and one RunRecord CSV per successful point.
    pub fn write_bundle(&self, bundle: &ReportBundle) -> std::io::Result<()> {
        self.write_summary(bundle)?;
        self.write_report(&bundle.table())?;
        for p in &bundle.points {
            if let Some(rec) = &p.record {
                self.write_record(&format!("{:03}_{}", p.index, p.label), rec)?;
            }
        }
        Ok(())
    }
}

/// Keep alphanumerics, `.`, `-` and `_`; everything else becomes `_`.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}
