//! Binary caches for sieves and majorant tables.
//!
//! All integers are little-endian.
//!
//! | file     | layout                                                   |
//! |----------|----------------------------------------------------------|
//! | sieve    | `NAPSV1`, `u64` limit, `limit + 1` × `u32` entries        |
//! | majorant | `NAPMV1`, `u64` N', `u64` W, `u64` b, `f64` R, N' × `f64` |
//!
//! Loaders read the whole file and validate it before building anything, so a
//! failed load leaves no partial state.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::majorant::MajorantTable;
use crate::numtheory::{prime_divisors, primorial, primorial_context, FactorSieve};

pub const SIEVE_MAGIC: &[u8; 6] = b"NAPSV1";
pub const MAJORANT_MAGIC: &[u8; 6] = b"NAPMV1";

/// Environment variable naming the cache directory.
pub const CACHE_DIR_VAR: &str = "NARROWLAB_CACHE_DIR";

/// Cache directory from [`CACHE_DIR_VAR`], if set and non-empty.
pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_VAR)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], magic: &[u8; 6], what: &'static str) -> Result<Self> {
        if bytes.len() < magic.len() || &bytes[..magic.len()] != magic {
            return Err(Error::Format(format!(
                "{what} cache does not start with the magic bytes \"{}\"",
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(Self {
            bytes,
            pos: magic.len(),
            what,
        })
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| {
            Error::Format(format!("{} cache truncated at byte {}", self.what, self.pos))
        })?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length"))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    /// Check that exactly `count` records of `size` bytes remain.
    fn expect_remaining(&self, count: u64, size: u64) -> Result<()> {
        let need = count.checked_mul(size).ok_or_else(|| {
            Error::Format(format!("{} cache header announces an impossible length", self.what))
        })?;
        let have = (self.bytes.len() - self.pos) as u64;
        if have != need {
            return Err(Error::Format(format!(
                "{} cache body has {have} bytes, header implies {need}",
                self.what
            )));
        }
        Ok(())
    }

    fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

pub fn encode_sieve(sieve: &FactorSieve) -> Vec<u8> {
    let entries = sieve.as_slice();
    let mut out = Vec::with_capacity(14 + 4 * entries.len());
    out.extend_from_slice(SIEVE_MAGIC);
    out.extend_from_slice(&sieve.limit().to_le_bytes());
    for &e in entries {
        out.extend_from_slice(&e.to_le_bytes());
    }
    out
}

pub fn decode_sieve(bytes: &[u8]) -> Result<FactorSieve> {
    let mut rd = Reader::new(bytes, SIEVE_MAGIC, "sieve")?;
    let limit = rd.u64()?;
    if limit < 2 {
        return Err(Error::Format(format!("sieve cache limit {limit} is below 2")));
    }
    rd.expect_remaining(limit + 1, 4)?;
    let spf = rd
        .rest()
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("chunk of 4")))
        .collect();
    FactorSieve::from_raw(spf)
}

pub fn save_sieve(sieve: &FactorSieve, path: &Path) -> Result<()> {
    write_atomically(path, &encode_sieve(sieve))
}

pub fn load_sieve(path: &Path) -> Result<FactorSieve> {
    decode_sieve(&fs::read(path)?)
}

pub fn encode_majorant(table: &MajorantTable) -> Vec<u8> {
    let ctx = table.context();
    let mut out = Vec::with_capacity(38 + 8 * table.values().len());
    out.extend_from_slice(MAJORANT_MAGIC);
    for x in [ctx.modulus, ctx.big_w, ctx.b] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&table.r().to_le_bytes());
    for v in table.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_majorant(bytes: &[u8]) -> Result<MajorantTable> {
    let mut rd = Reader::new(bytes, MAJORANT_MAGIC, "majorant")?;
    let modulus = rd.u64()?;
    let big_w = rd.u64()?;
    let b = rd.u64()?;
    let r = rd.f64()?;
    rd.expect_remaining(modulus, 8)?;
    // W is a primorial, so w is its largest prime factor
    let w = prime_divisors(big_w).into_iter().max().unwrap_or(1);
    if primorial(w).ok() != Some(big_w) {
        return Err(Error::Format(format!("majorant cache W = {big_w} is not a primorial")));
    }
    let b_signed = i64::try_from(b).map_err(|_| Error::Format(format!("majorant cache b = {b} is out of range")))?;
    let ctx = primorial_context(w, b_signed, modulus)
        .map_err(|e| Error::Format(format!("majorant cache header is inconsistent: {e}")))?;
    if ctx.b != b {
        return Err(Error::Format(format!("majorant cache b = {b} is not reduced mod W = {big_w}")));
    }
    let values: Vec<f64> = rd
        .rest()
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Format(format!("majorant cache value {i} is not a finite non-negative number")));
    }
    MajorantTable::from_values(&ctx, r, values)
}

pub fn save_majorant(table: &MajorantTable, path: &Path) -> Result<()> {
    write_atomically(path, &encode_majorant(table))
}

pub fn load_majorant(path: &Path) -> Result<MajorantTable> {
    decode_majorant(&fs::read(path)?)
}
