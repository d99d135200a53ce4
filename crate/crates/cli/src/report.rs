//! CSV tables, the run manifest and verdict bookkeeping.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use toml::{Table, Value};

use crate::config::Settings;

/// One pass/fail verdict.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

/// Output directory writer; every CSV starts with a `# seed = N` line.
pub struct Output {
    dir: PathBuf,
    seed: u64,
    written: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path, seed: u64) -> Result<Output> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Output { dir: dir.to_path_buf(), seed, written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn csv<R, S>(&mut self, name: &str, header: &[&str], rows: R) -> Result<()>
    where
        R: IntoIterator<Item = Vec<S>>,
        S: AsRef<str>,
    {
        let path = self.path(name);
        let mut file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        writeln!(file, "# seed = {}", self.seed)?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|s| s.as_ref()))?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn note_file(&mut self, name: String) {
        self.written.push(name);
    }

    /// Writes `manifest.toml`: resolved configuration with provenance, derived
    /// quantities, verdicts and the list of artifacts.
    pub fn manifest(
        &self,
        subcommand: &str,
        settings: &Settings,
        derived: &[(String, f64)],
        checks: &[Check],
    ) -> Result<()> {
        let mut root = Table::new();
        let mut run = Table::new();
        run.insert("subcommand".into(), Value::from(subcommand));
        run.insert("seed".into(), Value::Integer(self.seed as i64));
        run.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        let stamp =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        run.insert("generated_unix".into(), Value::Integer(stamp as i64));
        run.insert("artifacts".into(), Value::Array(self.written.iter().map(|s| Value::from(s.as_str())).collect()));
        root.insert("run".into(), Value::Table(run));

        let mut config = Table::new();
        let mut sources = Table::new();
        let mut env = Table::new();
        for (section, key, value, src, env_name, _) in settings.entries() {
            config
                .entry(section.clone())
                .or_insert_with(|| Value::Table(Table::new()))
                .as_table_mut()
                .expect("section table")
                .insert(key.clone(), value);
            sources.insert(format!("{section}.{key}"), Value::from(src.name()));
            env.insert(format!("{section}.{key}"), Value::from(env_name));
        }
        root.insert("config".into(), Value::Table(config));
        root.insert("sources".into(), Value::Table(sources));
        root.insert("env".into(), Value::Table(env));

        let mut d = Table::new();
        for (k, v) in derived {
            d.insert(k.clone(), Value::Float(*v));
        }
        root.insert("derived".into(), Value::Table(d));

        let mut c = Table::new();
        for ch in checks {
            let mut t = Table::new();
            t.insert("pass".into(), Value::Boolean(ch.pass));
            t.insert("detail".into(), Value::from(ch.detail.as_str()));
            c.insert(ch.name.clone(), Value::Table(t));
        }
        root.insert("checks".into(), Value::Table(c));

        let path = self.path("manifest.toml");
        std::fs::write(&path, toml::to_string(&root)?).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}

/// Shortest round-trip decimal rendering.
pub fn num(x: f64) -> String {
    format!("{x}")
}
