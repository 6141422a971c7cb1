//! Dataset persistence.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! "NFG1"                      magic
//! u16                         format version
//! u32 + UTF-8                 class name
//! u64                         seed
//! u16                         player count n
//! u32 * n                     action counts
//! u32, then (u32 + UTF-8, f64) class parameters, sorted by name
//! u64                         game count
//! f64 * n|A| per game         utilities, player-major, row-major
//! 3 * (u64 count, u64 * count) train, validation, test indices
//! ```
//!
//! A file that ends right after a zero game count is read as an empty dataset.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{Dataset, GameClass, GeneratorSpec, Split};
use crate::error::{Error, Result};
use crate::game::{Game, GameShape};

pub const MAGIC: &[u8; 4] = b"NFG1";
pub const FORMAT_VERSION: u16 = 1;

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(ds))?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    decode(&fs::read(path)?)
}

/// Lossless JSON with the same fields as the binary file.
pub fn export_json(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, serde_json::to_vec_pretty(ds)?)?;
    Ok(())
}

pub fn import_json(path: impl AsRef<Path>) -> Result<Dataset> {
    let ds: Dataset = serde_json::from_slice(&fs::read(path)?)?;
    Dataset::new(ds.spec, ds.games, ds.split)
}

pub(crate) fn encode(ds: &Dataset) -> Vec<u8> {
    let shape = &ds.spec.shape;
    let mut out = Vec::with_capacity(64 + ds.games.len() * shape.utility_count() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_str(&mut out, ds.spec.class.name());
    out.extend_from_slice(&ds.spec.seed.to_le_bytes());
    out.extend_from_slice(&(shape.num_players() as u16).to_le_bytes());
    for &k in shape.action_counts() {
        out.extend_from_slice(&(k as u32).to_le_bytes());
    }
    out.extend_from_slice(&(ds.spec.class_params.len() as u32).to_le_bytes());
    for (name, value) in &ds.spec.class_params {
        put_str(&mut out, name);
        out.extend_from_slice(&value.to_le_bytes());
    }
    out.extend_from_slice(&(ds.games.len() as u64).to_le_bytes());
    for g in &ds.games {
        for u in g.utilities() {
            out.extend_from_slice(&u.to_le_bytes());
        }
    }
    for list in [&ds.split.train, &ds.split.validation, &ds.split.test] {
        out.extend_from_slice(&(list.len() as u64).to_le_bytes());
        for &i in list {
            out.extend_from_slice(&(i as u64).to_le_bytes());
        }
    }
    out
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

/// Little-endian cursor that reports the byte offset of every failure.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos == self.bytes.len()
    }

    pub(crate) fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::format(
                    self.offset(),
                    format!(
                        "truncated {what}: need {len} bytes, {} left",
                        self.bytes.len() - self.pos
                    ),
                )
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.array::<1>(what)?[0])
    }

    pub(crate) fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array(what)?))
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }

    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array(what)?))
    }

    pub(crate) fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array(what)?))
    }

    /// A `u64` count that must fit in the remaining bytes at `unit` bytes each.
    pub(crate) fn count(&mut self, unit: usize, what: &str) -> Result<usize> {
        let at = self.offset();
        let n = self.u64(what)?;
        let left = (self.bytes.len() - self.pos) as u64;
        if n.checked_mul(unit as u64).is_none_or(|need| need > left) {
            return Err(Error::format(
                at,
                format!("{what} {n} exceeds remaining {left} bytes"),
            ));
        }
        Ok(n as usize)
    }

    pub(crate) fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let at = self.offset();
        let raw = self.take(len, what)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| Error::format(at, format!("{what} is not UTF-8")))
    }

    pub(crate) fn f64s(&mut self, len: usize, what: &str) -> Result<Vec<f64>> {
        let raw = self.take(len * 8, what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Reader::new(bytes);
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::format(0, "bad magic, expected NFG1"));
    }
    let at = r.offset();
    let version = r.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::format(at, format!("unsupported version {version}")));
    }
    let at = r.offset();
    let class: GameClass = r
        .string("class name")?
        .parse()
        .map_err(|e| Error::format(at, e))?;
    let seed = r.u64("seed")?;
    let at = r.offset();
    let n = r.u16("player count")? as usize;
    let counts = (0..n)
        .map(|_| r.u32("action count").map(|k| k as usize))
        .collect::<Result<Vec<_>>>()?;
    let shape = GameShape::new(counts).map_err(|e| Error::format(at, e))?;
    let params_len = r.u32("parameter count")?;
    let mut class_params = BTreeMap::new();
    for _ in 0..params_len {
        let name = r.string("parameter name")?;
        let value = r.f64("parameter value")?;
        class_params.insert(name, value);
    }
    let spec = GeneratorSpec {
        class,
        shape,
        seed,
        class_params,
    };

    let per_game = spec.shape.utility_count();
    let game_count = r.count(per_game * 8, "game count")?;
    let mut games = Vec::with_capacity(game_count);
    for i in 0..game_count {
        let at = r.offset();
        let utilities = r.f64s(per_game, "utilities")?;
        let game = Game::new(spec.shape.clone(), utilities)
            .map_err(|e| Error::format(at, format!("game {i}: {e}")))?;
        games.push(game);
    }

    let split = if game_count == 0 && r.at_end() {
        Split::default()
    } else {
        let mut lists = [Vec::new(), Vec::new(), Vec::new()];
        for list in &mut lists {
            let len = r.count(8, "split length")?;
            *list = (0..len)
                .map(|_| r.u64("split index").map(|i| i as usize))
                .collect::<Result<_>>()?;
        }
        let [train, validation, test] = lists;
        Split {
            train,
            validation,
            test,
        }
    };
    if !r.at_end() {
        return Err(Error::format(r.offset(), "trailing bytes"));
    }
    let at = r.offset();
    Dataset::new(spec, games, split).map_err(|e| Error::format(at, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::generate;

    fn sample() -> Dataset {
        let spec = GeneratorSpec::new(
            GameClass::WarOfAttrition,
            GameShape::symmetric(2, 3).unwrap(),
            42,
        )
        .unwrap();
        generate(&spec, 12).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = sample();
        let back = decode(&encode(&ds)).unwrap();
        assert_eq!(back, ds);
        assert_eq!(encode(&back), encode(&ds));
    }

    #[test]
    fn truncation_is_reported_with_offset() {
        let bytes = encode(&sample());
        for cut in [0, 3, 5, 20, bytes.len() / 2, bytes.len() - 1] {
            match decode(&bytes[..cut]) {
                Err(Error::Format { offset, .. }) => assert!(offset <= cut as u64),
                other => panic!("cut at {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode(&sample());
        bytes[0] = b'X';
        assert!(matches!(
            decode(&bytes),
            Err(Error::Format { offset: 0, .. })
        ));
        let mut bytes = encode(&sample());
        bytes[4] = 9;
        assert!(matches!(
            decode(&bytes),
            Err(Error::Format { offset: 4, .. })
        ));
    }

    #[test]
    fn header_only_file_is_empty_dataset() {
        let mut ds = sample();
        ds.games.clear();
        ds.split = Split::default();
        let mut bytes = encode(&ds);
        bytes.truncate(bytes.len() - 24);
        let back = decode(&bytes).unwrap();
        assert!(back.games.is_empty());
        assert_eq!(back.spec, ds.spec);
    }

    #[test]
    fn json_round_trip() {
        let ds = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.json");
        export_json(&ds, &path).unwrap();
        assert_eq!(import_json(&path).unwrap(), ds);
    }
}
