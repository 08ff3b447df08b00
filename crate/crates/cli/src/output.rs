//! CSV/JSON output with a reproducibility header: every run embeds its
//! command, a hash of the resolved configuration and the seed, so identical
//! configurations produce byte-identical files.

use std::io::Write;
use std::path::Path;

pub struct RunMeta {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

impl RunMeta {
    pub fn new(command: &str, config: &str, seed: u64) -> Self {
        RunMeta {
            command: command.to_string(),
            config_hash: format!("{:016x}", fnv1a(config.as_bytes())),
            seed,
        }
    }
}

/// FNV-1a, stable across runs and platforms.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub struct OutputSink {
    target: Option<std::fs::File>,
    json: bool,
    meta: RunMeta,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    summary: Option<String>,
}

impl OutputSink {
    pub fn create(path: Option<&Path>, json: bool, meta: RunMeta) -> anyhow::Result<Self> {
        let target = match path {
            Some(p) => Some(std::fs::File::create(p)?),
            None => None,
        };
        Ok(OutputSink { target, json, meta, columns: Vec::new(), rows: Vec::new(), summary: None })
    }

    pub fn columns(&mut self, names: &[&str]) {
        self.columns = names.iter().map(|s| s.to_string()).collect();
    }

    pub fn row(&mut self, cells: &[String]) {
        self.rows.push(cells.to_vec());
    }

    pub fn summary(&mut self, line: &str) {
        self.summary = Some(line.to_string());
    }

    pub fn finish(self) -> anyhow::Result<()> {
        let body = if self.json { self.render_json() } else { self.render_csv() };
        match self.target {
            Some(mut f) => f.write_all(body.as_bytes())?,
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(body.as_bytes())?;
            }
        }
        Ok(())
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# gwlab {} config_hash={} seed={}\n",
            self.meta.command, self.meta.config_hash, self.meta.seed
        ));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        if let Some(s) = &self.summary {
            out.push_str(&format!("# summary {s}\n"));
        }
        out
    }

    fn render_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.clone(), serde_json::Value::String(v.clone())))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        let doc = serde_json::json!({
            "meta": {
                "command": self.meta.command,
                "config_hash": self.meta.config_hash,
                "seed": self.meta.seed,
            },
            "rows": rows,
            "summary": self.summary,
        });
        let mut body = serde_json::to_string_pretty(&doc).expect("json rendering cannot fail");
        body.push('\n');
        body
    }
}
