//! File formats: binary field snapshots, CSV helpers, named initial
//! profiles, run manifests and sweep configuration files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, FchError, Result};
use crate::spectral::{GridSpec, SpectralField};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"FCH1";
const HEADER_LEN: usize = 4 + 8 * 4;

fn io_err(path: &Path, source: std::io::Error) -> FchError {
    FchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> FchError {
    FchError::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// A field with the time and `ν` it was recorded at.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub field: SpectralField,
    pub t: f64,
    pub nu: f64,
}

impl Snapshot {
    pub fn new(field: SpectralField, t: f64, nu: f64) -> Self {
        Self { field, t, nu }
    }

    /// Little-endian `FCH1 | L | N | t | ν | samples`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let g = self.field.grid();
        let mut buf = Vec::with_capacity(HEADER_LEN + 8 * g.n());
        buf.extend_from_slice(SNAPSHOT_MAGIC);
        buf.extend_from_slice(&g.length().to_le_bytes());
        buf.extend_from_slice(&(g.n() as u64).to_le_bytes());
        buf.extend_from_slice(&self.t.to_le_bytes());
        buf.extend_from_slice(&self.nu.to_le_bytes());
        for v in self.field.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < HEADER_LEN {
            return Err(format!("{} bytes is shorter than the header", bytes.len()));
        }
        if &bytes[..4] != SNAPSHOT_MAGIC {
            return Err("missing FCH1 magic".into());
        }
        let word = |i: usize| -> [u8; 8] { bytes[4 + 8 * i..12 + 8 * i].try_into().unwrap() };
        let length = f64::from_le_bytes(word(0));
        let n = u64::from_le_bytes(word(1));
        let t = f64::from_le_bytes(word(2));
        let nu = f64::from_le_bytes(word(3));
        let n = usize::try_from(n).map_err(|_| format!("N = {n} does not fit in memory"))?;
        let expected = n
            .checked_mul(8)
            .and_then(|b| b.checked_add(HEADER_LEN))
            .ok_or_else(|| format!("N = {n} overflows"))?;
        if bytes.len() != expected {
            return Err(format!("expected {expected} bytes for N = {n}, found {}", bytes.len()));
        }
        let grid = GridSpec::new(length, n).map_err(|e| e.to_string())?;
        let values = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let field = SpectralField::from_values(grid, values).map_err(|e| e.to_string())?;
        Ok(Self { field, t, nu })
    }
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    fs::write(path, snap.to_bytes()).map_err(|e| io_err(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Snapshot::from_bytes(&bytes).map_err(|r| format_err(path, r))
}

/// Round-trip-exact decimal rendering (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Builds CSV text row by row.
#[derive(Clone, Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn with_header(columns: &[&str]) -> Self {
        let mut c = Self::default();
        c.text.push_str(&columns.join(","));
        c.text.push('\n');
        c
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let line: Vec<&str> = cells.iter().map(AsRef::as_ref).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn numeric_row(&mut self, cells: &[f64]) {
        let line: Vec<String> = cells.iter().map(|&v| fmt_f64(v)).collect();
        self.row(&line);
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Two columns `x,u`.
pub fn field_csv(u: &SpectralField) -> String {
    let mut csv = Csv::with_header(&["x", "u"]);
    for (x, v) in u.grid().nodes().into_iter().zip(u.values()) {
        csv.numeric_row(&[x, *v]);
    }
    csv.into_string()
}

/// Initial data by name: `cosine:amp,k` (integer mode `k`),
/// `gaussian:amp,width`, `sech:amp,width` (both centred at `L/2` and summed
/// over periodic images) or
/// `snapshot:path` (a bare path is read as a snapshot too).
#[derive(Clone, Debug, PartialEq)]
pub enum NamedProfile {
    Cosine { amp: f64, k: i64 },
    Gaussian { amp: f64, width: f64 },
    Sech { amp: f64, width: f64 },
    Snapshot(PathBuf),
}

impl FromStr for NamedProfile {
    type Err = FchError;

    fn from_str(s: &str) -> Result<Self> {
        let Some((kind, rest)) = s.split_once(':') else {
            return Ok(NamedProfile::Snapshot(PathBuf::from(s)));
        };
        let nums = |n: usize| -> Result<Vec<f64>> {
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            if parts.len() != n {
                return Err(invalid(format!("profile {kind:?} takes {n} parameters, got {:?}", rest)));
            }
            parts
                .iter()
                .map(|p| {
                    p.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| invalid(format!("bad profile parameter {p:?}")))
                })
                .collect()
        };
        match kind {
            "cosine" => {
                let v = nums(2)?;
                if v[1].fract() != 0.0 || v[1] < 0.0 {
                    return Err(invalid(format!("cosine mode {} must be a nonnegative integer", v[1])));
                }
                Ok(NamedProfile::Cosine { amp: v[0], k: v[1] as i64 })
            }
            "gaussian" | "sech" => {
                let v = nums(2)?;
                if v[1] <= 0.0 {
                    return Err(invalid(format!("width {} must be positive", v[1])));
                }
                Ok(if kind == "gaussian" {
                    NamedProfile::Gaussian { amp: v[0], width: v[1] }
                } else {
                    NamedProfile::Sech { amp: v[0], width: v[1] }
                })
            }
            "snapshot" => Ok(NamedProfile::Snapshot(PathBuf::from(rest))),
            other => Err(invalid(format!("unknown profile kind {other:?}"))),
        }
    }
}

/// `Σ_j f((x - L/2 - jL)/width)` over enough images that the omitted ones
/// are below double precision, then dealiased.
fn periodized(grid: GridSpec, width: f64, f: impl Fn(f64) -> f64) -> SpectralField {
    let l = grid.length();
    let images = (40.0 * width / l).ceil() as i64 + 1;
    SpectralField::from_fn(grid, |x| {
        (-images..=images)
            .map(|j| f((x - l / 2.0 - j as f64 * l) / width))
            .sum()
    })
    .dealias()
}

impl NamedProfile {
    /// Band-limited field on `grid`. A snapshot must already live on `grid`.
    pub fn field(&self, grid: GridSpec) -> Result<SpectralField> {
        match *self {
            NamedProfile::Cosine { amp, k } => {
                let (Some(ip), Some(im)) = (grid.index_of(k), grid.index_of(-k)) else {
                    return Err(invalid(format!("mode {k} is not on an N = {} grid", grid.n())));
                };
                if !grid.is_retained(ip) || ip == grid.nyquist_index() {
                    return Err(invalid(format!("mode {k} is removed by dealiasing")));
                }
                let mut c = vec![Complex64::new(0.0, 0.0); grid.n()];
                if k == 0 {
                    c[0] = Complex64::new(amp, 0.0);
                } else {
                    c[ip] = Complex64::new(amp / 2.0, 0.0);
                    c[im] = Complex64::new(amp / 2.0, 0.0);
                }
                SpectralField::from_coeffs(grid, c)
            }
            NamedProfile::Gaussian { amp, width } => Ok(periodized(grid, width, |z| {
                amp * (-z * z).exp()
            })),
            NamedProfile::Sech { amp, width } => Ok(periodized(grid, width, |z| amp / z.cosh())),
            NamedProfile::Snapshot(ref path) => {
                let snap = read_snapshot(path)?;
                snap.field.grid().ensure_same(&grid).map_err(|_| {
                    invalid(format!(
                        "snapshot {} has L = {}, N = {}, not the requested grid",
                        path.display(),
                        snap.field.grid().length(),
                        snap.field.grid().n()
                    ))
                })?;
                Ok(snap.field.dealias())
            }
        }
    }

    /// Grid stored in a snapshot profile.
    pub fn snapshot_grid(&self) -> Result<Option<GridSpec>> {
        match self {
            NamedProfile::Snapshot(path) => Ok(Some(*read_snapshot(path)?.field.grid())),
            _ => Ok(None),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the run directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub flags: BTreeMap<String, String>,
    pub grid: Option<serde_json::Value>,
    pub params: serde_json::Value,
    pub version: String,
    pub seed: Option<u64>,
    pub started_unix: f64,
    pub finished_unix: Option<f64>,
    pub outputs: Vec<OutputEntry>,
}

pub const MANIFEST_NAME: &str = "run.json";

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Output directory that records a digest for every file it writes.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    manifest: RunManifest,
}

impl RunDir {
    pub fn create(root: &Path, command: &str, flags: BTreeMap<String, String>) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                flags,
                grid: None,
                params: serde_json::Value::Null,
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: None,
                started_unix: unix_now(),
                finished_unix: None,
                outputs: Vec::new(),
            },
        })
    }

    /// Reopens a finished run so further outputs are appended to its
    /// manifest.
    pub fn append(root: &Path) -> Result<Self> {
        Ok(Self {
            root: root.to_path_buf(),
            manifest: read_manifest(root)?,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn set_grid(&mut self, grid: &GridSpec) {
        self.manifest.grid = serde_json::to_value(grid).ok();
    }

    pub fn set_params(&mut self, params: serde_json::Value) {
        self.manifest.params = params;
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        if name == MANIFEST_NAME {
            return Err(invalid("the manifest name is reserved"));
        }
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        let entry = OutputEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        };
        match self.manifest.outputs.iter_mut().find(|o| o.path == name) {
            Some(o) => *o = entry,
            None => self.manifest.outputs.push(entry),
        }
        Ok(())
    }

    pub fn write_snapshot(&mut self, name: &str, snap: &Snapshot) -> Result<()> {
        self.write(name, &snap.to_bytes())
    }

    /// Writes `run.json` and returns the manifest.
    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.finished_unix = Some(unix_now());
        let path = self.root.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        Ok(self.manifest)
    }
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| format_err(&path, e.to_string()))
}

/// Files listed in the manifest that are missing or whose digest differs.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let manifest = read_manifest(dir)?;
    Ok(manifest
        .outputs
        .iter()
        .filter(|o| {
            fs::read(dir.join(&o.path)).map_or(true, |b| sha256_hex(&b) != o.sha256)
        })
        .map(|o| o.path.clone())
        .collect())
}

/// Snapshots in a run directory (`snap_*.bin`), ordered by file name.
pub fn read_run_snapshots(dir: &Path) -> Result<Vec<Snapshot>> {
    let mut names: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snap_") && n.ends_with(".bin"))
        })
        .collect();
    names.sort();
    names.iter().map(|p| read_snapshot(p)).collect()
}

/// `key = value` lines; `#` starts a comment. Keys that repeat become sweep
/// axes, in order of first appearance; a key with an empty value declares
/// an axis with no values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepConfig {
    pub entries: Vec<(String, Vec<String>)>,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, Vec<String>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(invalid(format!("line {}: expected key = value", lineno + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(invalid(format!("line {}: empty key", lineno + 1)));
            }
            let slot = match entries.iter_mut().find(|(key, _)| key == k) {
                Some((_, vals)) => vals,
                None => {
                    entries.push((k.to_string(), Vec::new()));
                    &mut entries.last_mut().unwrap().1
                }
            };
            if !v.is_empty() {
                slot.push(v.to_string());
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&[String]> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_slice())
    }

    /// Keys with more than one value, or none.
    pub fn axes(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(_, v)| v.len() != 1)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    /// Cartesian product of all values, last key varying fastest.
    pub fn cells(&self) -> Vec<Vec<(String, String)>> {
        let mut cells: Vec<Vec<(String, String)>> = vec![Vec::new()];
        for (k, vals) in &self.entries {
            cells = cells
                .into_iter()
                .flat_map(|cell| {
                    vals.iter().map(move |v| {
                        let mut c = cell.clone();
                        c.push((k.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

/// Renders `key=value` pairs for display.
pub fn describe_cell(cell: &[(String, String)]) -> String {
    let mut s = String::new();
    for (i, (k, v)) in cell.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{k}={v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn snapshot_bytes_round_trip() {
        let g = GridSpec::new(3.0, 16).unwrap();
        let u = SpectralField::from_fn(g, |x| (x * 1.7).sin() + 0.1);
        let snap = Snapshot::new(u.clone(), 0.25, 1.4);
        let bytes = snap.to_bytes();
        assert_eq!(&bytes[..4], b"FCH1");
        assert_eq!(bytes.len(), 36 + 16 * 8);
        let back = Snapshot::from_bytes(&bytes).unwrap();
        assert_eq!(back.t, 0.25);
        assert_eq!(back.nu, 1.4);
        assert_eq!(back.field.values(), u.values());
        assert!(Snapshot::from_bytes(&bytes[..40]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Snapshot::from_bytes(&bad).is_err());
    }

    #[test]
    fn profiles_parse() {
        assert_eq!(
            "cosine:0.05,1".parse::<NamedProfile>().unwrap(),
            NamedProfile::Cosine { amp: 0.05, k: 1 }
        );
        assert_eq!(
            "gaussian:1,0.5".parse::<NamedProfile>().unwrap(),
            NamedProfile::Gaussian { amp: 1.0, width: 0.5 }
        );
        assert!("cosine:0.05,1.5".parse::<NamedProfile>().is_err());
        assert!("sech:1,-1".parse::<NamedProfile>().is_err());
        assert!("wave:1,1".parse::<NamedProfile>().is_err());
        assert!("cosine:1".parse::<NamedProfile>().is_err());
        assert_eq!(
            "run/snap.bin".parse::<NamedProfile>().unwrap(),
            NamedProfile::Snapshot(PathBuf::from("run/snap.bin"))
        );
    }

    #[test]
    fn cosine_profile_is_exact() {
        let g = GridSpec::new(2.0 * PI, 32).unwrap();
        let u = NamedProfile::Cosine { amp: 0.05, k: 2 }.field(g).unwrap();
        let exact = SpectralField::from_fn(g, |x| 0.05 * (2.0 * x).cos());
        assert!(u.sub(&exact).linf_norm() < 1e-16);
        assert!(NamedProfile::Cosine { amp: 1.0, k: 12 }.field(g).is_err());
    }

    #[test]
    fn sweep_config_cells() {
        let cfg = SweepConfig::parse(
            "command = simulate\n# comment\nnu = 1.2\nnu = 2.0\namp = 0.01\namp = 0.05 # trailing\n",
        )
        .unwrap();
        assert_eq!(cfg.axes(), vec!["nu", "amp"]);
        let cells = cfg.cells();
        assert_eq!(cells.len(), 4);
        assert_eq!(describe_cell(&cells[1]), "command=simulate nu=1.2 amp=0.05");
        let empty = SweepConfig::parse("command = simulate\nnu =\n").unwrap();
        assert!(empty.cells().is_empty());
        assert!(SweepConfig::parse("nonsense").is_err());
    }
}
