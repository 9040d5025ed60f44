//! On-disk cache of information-function tables, keyed by the SHA-256 of the
//! generator matrix.
//!
//! Files are plain text: a header with the table kind, `n`, `k` and the hash,
//! then one line of decimal counts per table row. Writes go to a temporary
//! file in the cache directory that is then renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::codebook::{ComponentCode, InfoFunctions, SplitInfoFunctions};
use crate::error::{Error, Result};
use crate::par::Exec;

pub const SCHEMA_VERSION: u32 = 1;
/// Environment variable that overrides the default cache directory.
pub const CACHE_DIR_ENV: &str = "DGLDPC_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = "cache";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// The table was already attached to the code.
    Present,
    Hit,
    Computed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Info,
    Split,
}

impl Kind {
    fn tag(self) -> &'static str {
        match self {
            Kind::Info => "info",
            Kind::Split => "split",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TableCache {
    dir: Option<PathBuf>,
    exec: Exec,
}

impl TableCache {
    pub fn new(dir: impl Into<PathBuf>, exec: Exec) -> Self {
        TableCache {
            dir: Some(dir.into()),
            exec,
        }
    }

    /// A cache that never reads or writes files.
    pub fn disabled(exec: Exec) -> Self {
        TableCache { dir: None, exec }
    }

    /// `$DGLDPC_CACHE_DIR`, or `./cache`.
    pub fn from_env(exec: Exec) -> Self {
        let dir = std::env::var_os(CACHE_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
        TableCache::new(dir, exec)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, code: &ComponentCode, kind: Kind) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("{}.{}", code.content_hash(), kind.tag())))
    }

    /// Attaches the information functions to `code`.
    pub fn ensure_info(&self, code: &ComponentCode) -> Result<Outcome> {
        if code.has_information_functions() {
            return Ok(Outcome::Present);
        }
        let path = self.path(code, Kind::Info);
        if let Some(text) = path.as_deref().and_then(read_if_exists) {
            let rows = parse(&text, code, Kind::Info)?;
            code.preload_information_functions(InfoFunctions {
                e: rows.into_iter().next().unwrap_or_default(),
            })?;
            return Ok(Outcome::Hit);
        }
        let info = code.compute_information_functions(self.exec)?;
        if let Some(path) = path {
            write_atomic(&path, &render(code, Kind::Info, std::slice::from_ref(&info.e)))?;
        }
        code.preload_information_functions(info)?;
        Ok(Outcome::Computed)
    }

    /// Attaches the split information functions to `code`.
    pub fn ensure_split(&self, code: &ComponentCode) -> Result<Outcome> {
        if code.has_split_information_functions() {
            return Ok(Outcome::Present);
        }
        let path = self.path(code, Kind::Split);
        if let Some(text) = path.as_deref().and_then(read_if_exists) {
            let e = parse(&text, code, Kind::Split)?;
            code.preload_split_information_functions(SplitInfoFunctions { e })?;
            return Ok(Outcome::Hit);
        }
        let split = code.compute_split_information_functions(self.exec)?;
        if let Some(path) = path {
            write_atomic(&path, &render(code, Kind::Split, &split.e))?;
        }
        code.preload_split_information_functions(split)?;
        Ok(Outcome::Computed)
    }

    /// Tables needed to use `code` in the given roles.
    pub fn prepare(&self, code: &ComponentCode, as_vn: bool, as_cn: bool) -> Result<()> {
        if as_cn {
            self.ensure_info(code)?;
        }
        if as_vn {
            self.ensure_split(code)?;
        }
        Ok(())
    }

    /// Tables for every node type of an ensemble.
    pub fn prepare_ensemble(&self, e: &crate::ensemble::Ensemble) -> Result<()> {
        for t in e.vns() {
            self.prepare(&t.code, true, false)?;
        }
        for t in e.cns() {
            self.prepare(&t.code, false, true)?;
        }
        Ok(())
    }
}

fn read_if_exists(path: &Path) -> Option<String> {
    std::fs::read_to_string(path).ok()
}

fn render(code: &ComponentCode, kind: Kind, rows: &[Vec<u128>]) -> String {
    let mut s = format!(
        "dgldpc-table v{SCHEMA_VERSION}\nkind {}\nn {}\nk {}\nhash {}\n",
        kind.tag(),
        code.n(),
        code.k(),
        code.content_hash()
    );
    for row in rows {
        let line: Vec<String> = row.iter().map(u128::to_string).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

fn parse(text: &str, code: &ComponentCode, kind: Kind) -> Result<Vec<Vec<u128>>> {
    let bad = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let expected = [
        format!("dgldpc-table v{SCHEMA_VERSION}"),
        format!("kind {}", kind.tag()),
        format!("n {}", code.n()),
        format!("k {}", code.k()),
        format!("hash {}", code.content_hash()),
    ];
    for want in &expected {
        match lines.next() {
            Some((_, got)) if got == want => {}
            Some((i, got)) => return Err(bad(i, format!("cache header `{got}`, expected `{want}`"))),
            None => return Err(bad(0, "truncated cache file".into())),
        }
    }
    let rows = lines
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|v| v.parse::<u128>().map_err(|e| bad(i, format!("bad count `{v}`: {e}"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (want_rows, want_cols) = match kind {
        Kind::Info => (1, code.n() + 1),
        Kind::Split => (code.n() + 1, code.k() + 1),
    };
    if rows.len() != want_rows || rows.iter().any(|r| r.len() != want_cols) {
        return Err(bad(0, format!("cache table is not {want_rows}x{want_cols}")));
    }
    Ok(rows)
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
