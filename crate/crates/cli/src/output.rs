//! Output directory with a content-hashed manifest, and deterministic JSON.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Version of the report layout written by every command.
pub const SCHEMA_VERSION: u32 = 1;

/// Pretty JSON whose floats always carry 17 significant digits (`d.dddddddddddddddde±x`),
/// so identical runs give byte-identical files. Non-finite floats become `null`.
struct FixedDigits<'a>(PrettyFormatter<'a>);

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as deterministic pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FixedDigits(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| CliError::Io(e.to_string()))?;
    buf.push(b'\n');
    Ok(buf)
}

#[derive(Debug, Serialize)]
struct ManifestEntry<'a> {
    path: &'a str,
    sha256: &'a str,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a str,
    files: Vec<ManifestEntry<'a>>,
}

/// A run's output directory; every file written through it is hashed into the manifest.
pub struct OutputDir {
    root: PathBuf,
    files: BTreeMap<String, (String, usize)>,
}

impl OutputDir {
    pub const MANIFEST: &'static str = "manifest.json";

    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    /// Writes `bytes` to the relative path `rel` (`/`-separated).
    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let digest: String = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.files.insert(rel.to_string(), (digest, bytes.len()));
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let bytes = to_json_bytes(value)?;
        self.write_bytes(rel, &bytes)
    }

    /// Writes the output of a streaming writer such as a CSV export.
    pub fn write_with<E: std::fmt::Display>(
        &mut self,
        rel: &str,
        produce: impl FnOnce(&mut Vec<u8>) -> Result<(), E>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        produce(&mut buf).map_err(|e| CliError::Io(format!("{rel}: {e}")))?;
        self.write_bytes(rel, &buf)
    }

    /// Writes the manifest listing every file written so far.
    pub fn write_manifest(&self, command: &str) -> Result<(), CliError> {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            command,
            files: self
                .files
                .iter()
                .map(|(path, (sha256, bytes))| ManifestEntry {
                    path,
                    sha256,
                    bytes: *bytes,
                })
                .collect(),
        };
        let bytes = to_json_bytes(&manifest)?;
        let path = self.root.join(Self::MANIFEST);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
