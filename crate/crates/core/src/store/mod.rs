//! Content-addressed local object store with an append-only JSON-lines manifest.
//!
//! Layout under the store root:
//!
//! ```text
//! manifest.jsonl      one ArchiveManifest record per line
//! blobs/<sha256>.png  immutable stored objects
//! store.lock          advisory lock serializing writers
//! ```
//!
//! A blob is fully written and renamed into place before its manifest line is
//! appended, so every complete manifest line refers to a durable blob. A torn
//! final line (no trailing newline) is ignored by readers and trimmed by the
//! next writer.

mod backend;
mod evaluate;
mod pipeline;

pub use backend::{UpscalerBackend, SCALE_ENV};
pub use evaluate::{evaluate_dataset, list_dataset, DatasetEvaluation, ImageResult};
pub use pipeline::{compress_for_storage, restore_from_storage, StoredImage, CODEC_INDEXED, CODEC_RGB, CODEC_RGBA, STORAGE_ENCODE};

use std::fs::{self, File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::palette::DitherConfig;
use crate::raster::{decode_png, RasterImage};
use crate::resample::STORAGE_SCALE;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const BLOB_DIR: &str = "blobs";
pub const LOCK_FILE: &str = "store.lock";

/// Minimum length of an object-id prefix accepted by [`Store::resolve`].
pub const MIN_ID_PREFIX: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveManifest {
    pub object_id: String,
    pub source_name: String,
    pub original_width: u32,
    pub original_height: u32,
    pub original_bytes: u64,
    pub stored_bytes: u64,
    pub dither_scale: f64,
    pub palette_size: usize,
    pub scale_factor: u32,
    pub codec: String,
    pub created_at: DateTime<Utc>,
}

/// Hex SHA-256 of `bytes`.
pub fn object_id(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone)]
pub struct ArchiveOutcome {
    pub entry: ArchiveManifest,
    /// False when an identical entry already existed.
    pub created: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub entries_checked: usize,
    pub failures: Vec<String>,
    /// Blobs with no manifest entry, e.g. left by an interrupted archive.
    pub orphan_blobs: Vec<String>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

fn sync_dir(path: &Path) -> Result<()> {
    File::open(path)
        .and_then(|d| d.sync_all())
        .map_err(|e| Error::storage(path, e))
}

impl Store {
    /// Opens the store at `root`, creating the directory layout if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join(BLOB_DIR)).map_err(|e| Error::storage(&root, e))?;
        Ok(Self { root })
    }

    /// Opens an existing store without creating anything.
    pub fn open_existing(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        if !root.join(BLOB_DIR).is_dir() {
            return Err(Error::NotFound(format!("no store at {}", root.display())));
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn manifest_path(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    pub fn blob_path(&self, object_id: &str) -> PathBuf {
        self.root.join(BLOB_DIR).join(format!("{object_id}.png"))
    }

    /// All complete manifest records, in append order.
    pub fn manifest(&self) -> Result<Vec<ArchiveManifest>> {
        let path = self.manifest_path();
        let text = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::storage(&path, e)),
        };
        parse_manifest(&text)
    }

    fn lock(&self) -> Result<File> {
        let path = self.root.join(LOCK_FILE);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| Error::storage(&path, e))?;
        file.lock().map_err(|e| Error::storage(&path, e))?;
        Ok(file)
    }

    /// Archives the PNG at `path` under its file name.
    pub fn archive_file(&self, path: &Path, cfg: &DitherConfig) -> Result<ArchiveOutcome> {
        let bytes = fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.display().to_string()),
            _ => Error::storage(path, e),
        })?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.archive_bytes(&name, &bytes, cfg)
    }

    /// Runs the storage pipeline on an encoded PNG and records the result.
    pub fn archive_bytes(&self, source_name: &str, original: &[u8], cfg: &DitherConfig) -> Result<ArchiveOutcome> {
        cfg.validate()?;
        let img = decode_png(original)?;
        let stored = compress_for_storage(&img, cfg)?;
        let id = object_id(&stored.png);

        let _guard = self.lock()?;
        let existing = self.manifest()?;
        if let Some(entry) = existing.iter().find(|e| {
            e.object_id == id
                && e.source_name == source_name
                && e.dither_scale == cfg.scale
                && e.palette_size == cfg.palette_size
                && e.original_bytes == original.len() as u64
        }) {
            return Ok(ArchiveOutcome {
                entry: entry.clone(),
                created: false,
            });
        }

        self.write_blob(&id, &stored.png)?;
        let entry = ArchiveManifest {
            object_id: id,
            source_name: source_name.to_string(),
            original_width: img.width(),
            original_height: img.height(),
            original_bytes: original.len() as u64,
            stored_bytes: stored.png.len() as u64,
            dither_scale: cfg.scale,
            palette_size: cfg.palette_size,
            scale_factor: STORAGE_SCALE,
            codec: stored.codec.to_string(),
            created_at: Utc::now(),
        };
        self.append_record(&entry)?;
        Ok(ArchiveOutcome { entry, created: true })
    }

    fn write_blob(&self, id: &str, bytes: &[u8]) -> Result<()> {
        let target = self.blob_path(id);
        if let Ok(existing) = fs::read(&target) {
            if object_id(&existing) == id {
                return Ok(());
            }
        }
        let dir = self.root.join(BLOB_DIR);
        let mut tmp = tempfile::Builder::new()
            .prefix(".tmp-")
            .tempfile_in(&dir)
            .map_err(|e| Error::storage(&dir, e))?;
        tmp.write_all(bytes)
            .and_then(|_| tmp.as_file().sync_all())
            .map_err(|e| Error::storage(tmp.path(), e))?;
        tmp.persist(&target).map_err(|e| Error::storage(&target, e.error))?;
        sync_dir(&dir)
    }

    fn append_record(&self, entry: &ArchiveManifest) -> Result<()> {
        let path = self.manifest_path();
        let created = !path.exists();
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::storage(&path, e))?;
        let io = |e| Error::storage(&path, e);
        let mut len = file.metadata().map_err(io)?.len();
        if len > 0 {
            // drop a torn tail left by an interrupted writer
            let mut content = Vec::with_capacity(len as usize);
            file.seek(SeekFrom::Start(0)).map_err(io)?;
            file.read_to_end(&mut content).map_err(io)?;
            if content.last() != Some(&b'\n') {
                len = content.iter().rposition(|&b| b == b'\n').map_or(0, |p| p as u64 + 1);
                file.set_len(len).map_err(io)?;
            }
        }
        let mut line = serde_json::to_vec(entry).map_err(|e| Error::CorruptInput(e.to_string()))?;
        line.push(b'\n');
        if let Err(e) = file.write_all(&line).and_then(|_| file.sync_data()) {
            let _ = file.set_len(len);
            return Err(io(e));
        }
        if created {
            sync_dir(&self.root)?;
        }
        Ok(())
    }

    /// First manifest entry for `object_id`.
    pub fn find(&self, object_id: &str) -> Result<ArchiveManifest> {
        self.manifest()?
            .into_iter()
            .find(|e| e.object_id == object_id)
            .ok_or_else(|| Error::NotFound(format!("object {object_id}")))
    }

    /// Resolves a full object id, a unique id prefix, or a unique source name.
    pub fn resolve(&self, id_or_name: &str) -> Result<ArchiveManifest> {
        let entries = self.manifest()?;
        if let Some(e) = entries.iter().find(|e| e.object_id == id_or_name) {
            return Ok(e.clone());
        }
        let by_name: Vec<&ArchiveManifest> = entries.iter().filter(|e| e.source_name == id_or_name).collect();
        let mut candidates: Vec<&ArchiveManifest> = if !by_name.is_empty() {
            by_name
        } else if id_or_name.len() >= MIN_ID_PREFIX && id_or_name.bytes().all(|b| b.is_ascii_hexdigit()) {
            entries.iter().filter(|e| e.object_id.starts_with(id_or_name)).collect()
        } else {
            Vec::new()
        };
        candidates.sort_by(|a, b| a.object_id.cmp(&b.object_id));
        candidates.dedup_by(|a, b| a.object_id == b.object_id);
        match candidates.as_slice() {
            [] => Err(Error::NotFound(format!("no object or source named {id_or_name:?}"))),
            [one] => Ok((*one).clone()),
            many => Err(Error::AmbiguousName {
                name: id_or_name.to_string(),
                candidates: many
                    .iter()
                    .map(|e| format!("{} ({}, dither {})", e.object_id, e.source_name, e.dither_scale))
                    .collect(),
            }),
        }
    }

    pub fn read_blob(&self, entry: &ArchiveManifest) -> Result<Vec<u8>> {
        let path = self.blob_path(&entry.object_id);
        fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(format!("blob {}", path.display())),
            _ => Error::storage(&path, e),
        })
    }

    /// Reconstructs the original-size image for `object_id`.
    pub fn retrieve(&self, object_id: &str, backend: &UpscalerBackend) -> Result<RasterImage> {
        let entry = self.find(object_id)?;
        self.retrieve_entry(&entry, backend)
    }

    pub fn retrieve_entry(&self, entry: &ArchiveManifest, backend: &UpscalerBackend) -> Result<RasterImage> {
        let bytes = self.read_blob(entry)?;
        if self::object_id(&bytes) != entry.object_id {
            return Err(Error::CorruptInput(format!("blob {} fails its hash check", entry.object_id)));
        }
        restore_from_storage(&bytes, entry.original_width, entry.original_height, backend)
    }

    /// Checks every manifest entry against its blob and lists orphan blobs.
    pub fn verify(&self) -> Result<VerifyReport> {
        let entries = self.manifest()?;
        let mut report = VerifyReport {
            entries_checked: entries.len(),
            ..Default::default()
        };
        for e in &entries {
            match self.read_blob(e) {
                Ok(bytes) => {
                    if bytes.len() as u64 != e.stored_bytes {
                        report.failures.push(format!(
                            "{}: blob has {} bytes, manifest says {}",
                            e.object_id,
                            bytes.len(),
                            e.stored_bytes
                        ));
                    }
                    let actual = object_id(&bytes);
                    if actual != e.object_id {
                        report.failures.push(format!("{}: blob hashes to {actual}", e.object_id));
                    }
                    if e.scale_factor != STORAGE_SCALE {
                        report.failures.push(format!("{}: scale factor {}", e.object_id, e.scale_factor));
                    }
                }
                Err(err) => report.failures.push(format!("{}: {err}", e.object_id)),
            }
        }
        let dir = self.root.join(BLOB_DIR);
        let mut orphans = Vec::new();
        for item in fs::read_dir(&dir).map_err(|e| Error::storage(&dir, e))? {
            let name = item.map_err(|e| Error::storage(&dir, e))?.file_name().to_string_lossy().into_owned();
            if let Some(id) = name.strip_suffix(".png") {
                if !entries.iter().any(|e| e.object_id == id) {
                    orphans.push(id.to_string());
                }
            }
        }
        orphans.sort();
        report.orphan_blobs = orphans;
        Ok(report)
    }
}

fn parse_manifest(bytes: &[u8]) -> Result<Vec<ArchiveManifest>> {
    let complete = match bytes.iter().rposition(|&b| b == b'\n') {
        Some(p) => &bytes[..=p],
        None => return Ok(Vec::new()),
    };
    let text = std::str::from_utf8(complete).map_err(|e| Error::CorruptInput(format!("manifest is not UTF-8: {e}")))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::CorruptInput(format!("manifest line {}: {e}", i + 1)))
        })
        .collect()
}
