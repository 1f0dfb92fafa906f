//! Reader and writer for the `.mapkg` mini-app package container.
//!
//! ```text
//! byte 0        magic 0xBE
//! bytes 1..5    reserved, zero
//! bytes 5..9    index_len  (u32 BE): bytes from offset 14 up to the data region
//! bytes 9..13   body_len   (u32 BE): index_len + total file data length
//! byte 13       end mark 0xED
//! bytes 14..18  file_count (u32 BE)
//! file_count x  { name_len u32 BE, name [name_len], offset u32 BE, size u32 BE }
//! data region   file bytes, in index order
//! ```
//!
//! Offsets are absolute from the start of the container.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use thiserror::Error;

pub const MAGIC: u8 = 0xBE;
pub const END_MARK: u8 = 0xED;
/// Fixed header before `file_count`.
pub const HEADER_LEN: usize = 14;
/// Extension used for packed fixtures.
pub const EXTENSION: &str = "mapkg";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PkgError {
    #[error("duplicate path `{0}`")]
    DuplicatePath(String),
    #[error("invalid path `{0}`")]
    InvalidPath(String),
    #[error("bad magic byte {0:#04x}")]
    BadMagic(u8),
    #[error("bad end mark {0:#04x}")]
    BadEndMark(u8),
    #[error("input truncated: needed {needed} bytes at offset {at}")]
    TruncatedInput { at: usize, needed: usize },
    #[error("entry `{path}` overruns the container ({offset}+{size} > {len})")]
    IndexOverrun {
        path: String,
        offset: u64,
        size: u64,
        len: usize,
    },
    #[error("header lengths disagree with the index: {0}")]
    LengthMismatch(String),
    #[error("entry name is not UTF-8")]
    NonUtf8Name,
    #[error("container too large")]
    TooLarge,
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileEntry {
    pub path: String,
    pub data: Vec<u8>,
}

impl FileEntry {
    pub fn new(path: impl Into<String>, data: impl Into<Vec<u8>>) -> Self {
        Self {
            path: path.into(),
            data: data.into(),
        }
    }

    /// Lossy UTF-8 view of the entry data.
    pub fn text(&self) -> std::borrow::Cow<'_, str> {
        String::from_utf8_lossy(&self.data)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Package {
    pub entries: Vec<FileEntry>,
}

impl Package {
    pub fn new(entries: Vec<FileEntry>) -> Result<Self, PkgError> {
        validate_entries(&entries)?;
        Ok(Self { entries })
    }

    pub fn get(&self, path: &str) -> Option<&FileEntry> {
        self.entries.iter().find(|e| e.path == path)
    }

    /// Reads a `.mapkg` file or, for a directory, every regular file beneath it
    /// (sorted by relative path).
    pub fn load(path: &Path) -> Result<Self, PkgError> {
        if path.is_dir() {
            let mut entries = Vec::new();
            collect_dir(path, path, &mut entries)?;
            entries.sort_by(|a, b| a.path.cmp(&b.path));
            Package::new(entries)
        } else {
            let bytes = fs::read(path).map_err(|e| PkgError::Io(format!("{}: {e}", path.display())))?;
            unpack(&bytes)
        }
    }
}

fn collect_dir(root: &Path, dir: &Path, out: &mut Vec<FileEntry>) -> Result<(), PkgError> {
    let rd = fs::read_dir(dir).map_err(|e| PkgError::Io(format!("{}: {e}", dir.display())))?;
    for item in rd {
        let item = item.map_err(|e| PkgError::Io(e.to_string()))?;
        let p = item.path();
        let ft = item.file_type().map_err(|e| PkgError::Io(e.to_string()))?;
        if ft.is_dir() {
            collect_dir(root, &p, out)?;
        } else if ft.is_file() {
            let rel = p
                .strip_prefix(root)
                .map_err(|e| PkgError::Io(e.to_string()))?
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            let data = fs::read(&p).map_err(|e| PkgError::Io(format!("{}: {e}", p.display())))?;
            out.push(FileEntry::new(rel, data));
        }
    }
    Ok(())
}

pub fn is_valid_path(path: &str) -> bool {
    !path.is_empty()
        && !path.contains('\0')
        && !path.starts_with('/')
        && !path.split('/').any(|seg| seg == "..")
}

fn validate_entries(entries: &[FileEntry]) -> Result<(), PkgError> {
    let mut seen = HashSet::new();
    for e in entries {
        if !is_valid_path(&e.path) {
            return Err(PkgError::InvalidPath(e.path.clone()));
        }
        if !seen.insert(e.path.as_str()) {
            return Err(PkgError::DuplicatePath(e.path.clone()));
        }
    }
    Ok(())
}

fn u32_len(n: usize) -> Result<u32, PkgError> {
    u32::try_from(n).map_err(|_| PkgError::TooLarge)
}

pub fn pack(entries: &[FileEntry]) -> Result<Vec<u8>, PkgError> {
    validate_entries(entries)?;

    let index_len: usize = 4 + entries
        .iter()
        .map(|e| 4 + e.path.len() + 4 + 4)
        .sum::<usize>();
    let data_len: usize = entries.iter().map(|e| e.data.len()).sum();
    let body_len = index_len + data_len;
    let total = HEADER_LEN + body_len;
    u32_len(total)?;

    let mut out = Vec::with_capacity(total);
    out.push(MAGIC);
    out.extend_from_slice(&[0; 4]);
    out.extend_from_slice(&u32_len(index_len)?.to_be_bytes());
    out.extend_from_slice(&u32_len(body_len)?.to_be_bytes());
    out.push(END_MARK);
    out.extend_from_slice(&u32_len(entries.len())?.to_be_bytes());

    let mut offset = HEADER_LEN + index_len;
    for e in entries {
        out.extend_from_slice(&u32_len(e.path.len())?.to_be_bytes());
        out.extend_from_slice(e.path.as_bytes());
        out.extend_from_slice(&u32_len(offset)?.to_be_bytes());
        out.extend_from_slice(&u32_len(e.data.len())?.to_be_bytes());
        offset += e.data.len();
    }
    for e in entries {
        out.extend_from_slice(&e.data);
    }
    debug_assert_eq!(out.len(), total);
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PkgError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.buf.len())
            .ok_or(PkgError::TruncatedInput {
                at: self.pos,
                needed: n,
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, PkgError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, PkgError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn unpack(bytes: &[u8]) -> Result<Package, PkgError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let magic = cur.u8()?;
    if magic != MAGIC {
        return Err(PkgError::BadMagic(magic));
    }
    cur.take(4)?;
    let index_len = cur.u32()? as usize;
    let body_len = cur.u32()? as usize;
    let end = cur.u8()?;
    if end != END_MARK {
        return Err(PkgError::BadEndMark(end));
    }
    let count = cur.u32()? as usize;

    // Each record is at least 12 bytes; refuse absurd counts before allocating.
    if count > bytes.len() / 12 + 1 {
        return Err(PkgError::TruncatedInput {
            at: cur.pos,
            needed: count.saturating_mul(12),
        });
    }

    let mut index = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = cur.u32()? as usize;
        let name = cur.take(name_len)?;
        let name = std::str::from_utf8(name).map_err(|_| PkgError::NonUtf8Name)?;
        let offset = cur.u32()? as u64;
        let size = cur.u32()? as u64;
        index.push((name.to_owned(), offset, size));
    }

    let index_end = cur.pos;
    if index_end - HEADER_LEN != index_len {
        return Err(PkgError::LengthMismatch(format!(
            "index_len {index_len}, parsed {}",
            index_end - HEADER_LEN
        )));
    }

    let mut entries = Vec::with_capacity(count);
    let mut data_total: u64 = 0;
    for (path, offset, size) in index {
        let end = offset + size;
        if end > bytes.len() as u64 || offset < index_end as u64 {
            return Err(PkgError::IndexOverrun {
                path,
                offset,
                size,
                len: bytes.len(),
            });
        }
        data_total += size;
        entries.push(FileEntry {
            path,
            data: bytes[offset as usize..end as usize].to_vec(),
        });
    }

    let declared_total = HEADER_LEN as u64 + body_len as u64;
    if declared_total > bytes.len() as u64 {
        return Err(PkgError::TruncatedInput {
            at: bytes.len(),
            needed: (declared_total - bytes.len() as u64) as usize,
        });
    }
    if index_len as u64 + data_total != body_len as u64 || declared_total != bytes.len() as u64 {
        return Err(PkgError::LengthMismatch(format!(
            "body_len {body_len}, index {index_len} + data {data_total}, container {}",
            bytes.len()
        )));
    }

    Package::new(entries)
}

pub fn list_entries(pkg: &Package) -> Vec<(String, usize)> {
    pkg.entries
        .iter()
        .map(|e| (e.path.clone(), e.data.len()))
        .collect()
}
