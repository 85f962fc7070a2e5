//! Overlapping distance-3 tiles, per-tile class tables, and classifier features.
//!
//! A distance-`d` patch is covered by `((d-1)/2)^2` tiles at even origins. Each
//! tile owns eight whole checks laid out like a standalone distance-3 code;
//! checks on tile seams belong to two tiles. A tile's eight syndrome bits index
//! a 256-row table of empirical residual-class frequencies, and the rows of all
//! tiles concatenate into the classifier input.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Syndrome};

pub const TILE_CHECKS: usize = 8;
pub const TILE_ROWS: usize = 256;
pub const CLASSES: usize = 4;

const TABLE_MAGIC: &str = "qectg-tables";
const TABLE_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tile {
    /// Top-left data qubit `(R, C)` of the tile; both even.
    pub origin: (usize, usize),
    /// Global check ids in tile-local order: top, bulk Z (0,0), bulk X (0,1),
    /// left, right, bulk X (1,0), bulk Z (1,1), bottom.
    pub check_ids: [usize; TILE_CHECKS],
}

pub fn make_tiles(lat: &Lattice) -> Vec<Tile> {
    let span = (lat.d() - 1) / 2;
    let mut tiles = Vec::with_capacity(span * span);
    for i in 0..span {
        for j in 0..span {
            let (r, c) = (2 * i as i32, 2 * j as i32);
            let at = |pr: i32, pc: i32| {
                lat.check_at(pr, pc)
                    .unwrap_or_else(|| panic!("tile ({r},{c}) missing plaquette ({pr},{pc})"))
            };
            let check_ids = [
                at(r - 1, c),
                at(r, c),
                at(r, c + 1),
                at(r + 1, c - 1),
                at(r, c + 2),
                at(r + 1, c),
                at(r + 1, c + 1),
                at(r + 2, c + 1),
            ];
            tiles.push(Tile {
                origin: (2 * i, 2 * j),
                check_ids,
            });
        }
    }
    tiles
}

/// The 8-bit syndrome word of each tile; bit `k` is the tile's `k`-th check.
pub fn slice_syndrome(tiles: &[Tile], syndrome: &Syndrome) -> Vec<u8> {
    tiles
        .iter()
        .map(|t| {
            t.check_ids
                .iter()
                .enumerate()
                .fold(0u8, |w, (k, &c)| w | (syndrome.get(c) as u8) << k)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileTable {
    /// Raw class counts per word; absent for tables loaded from a file.
    pub counts: Option<Vec<[u64; CLASSES]>>,
    pub probs: Vec<[f64; CLASSES]>,
}

impl TileTable {
    pub fn row(&self, word: u8) -> &[f64; CLASSES] {
        &self.probs[word as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileTableSet {
    pub d: usize,
    pub alpha: f64,
    /// Digest of the dataset the tables were fitted on.
    pub digest: String,
    pub tables: Vec<TileTable>,
}

type Counts = Vec<[[u64; CLASSES]; TILE_ROWS]>;

fn merge(mut a: Counts, b: Counts) -> Counts {
    for (ta, tb) in a.iter_mut().zip(b) {
        for (ra, rb) in ta.iter_mut().zip(tb) {
            for (x, y) in ra.iter_mut().zip(rb) {
                *x += y;
            }
        }
    }
    a
}

/// Counts residual classes per tile word over the dataset and Laplace-smooths
/// them: `(count + alpha) / (row_total + 4 alpha)`.
pub fn fit_tables(tiles: &[Tile], dataset: &Dataset, alpha: f64) -> Result<TileTableSet> {
    if dataset.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::IncompatibleModel(format!(
            "smoothing alpha must be positive, got {alpha}"
        )));
    }
    let nt = tiles.len();
    let counts: Counts = dataset
        .records
        .par_iter()
        .fold(
            || vec![[[0u64; CLASSES]; TILE_ROWS]; nt],
            |mut acc, rec| {
                for (t, w) in slice_syndrome(tiles, &rec.syndrome).into_iter().enumerate() {
                    acc[t][w as usize][rec.class.index()] += 1;
                }
                acc
            },
        )
        .reduce(|| vec![[[0u64; CLASSES]; TILE_ROWS]; nt], merge);

    let tables = counts
        .into_iter()
        .map(|rows| {
            let probs = rows
                .iter()
                .map(|row| {
                    let total: u64 = row.iter().sum();
                    let denom = total as f64 + CLASSES as f64 * alpha;
                    row.map(|c| (c as f64 + alpha) / denom)
                })
                .collect();
            TileTable {
                counts: Some(rows.to_vec()),
                probs,
            }
        })
        .collect();
    Ok(TileTableSet {
        d: dataset.d,
        alpha,
        digest: dataset.digest(),
        tables,
    })
}

impl TileTableSet {
    pub fn tile_count(&self) -> usize {
        self.tables.len()
    }

    pub fn feature_len(&self) -> usize {
        CLASSES * self.tables.len()
    }

    /// Concatenated table rows, tile-major and class-minor.
    pub fn features_into(&self, words: &[u8], out: &mut [f64]) {
        assert_eq!(words.len(), self.tables.len(), "one word per tile");
        for ((table, &w), chunk) in self
            .tables
            .iter()
            .zip(words)
            .zip(out.chunks_exact_mut(CLASSES))
        {
            chunk.copy_from_slice(table.row(w));
        }
    }

    pub fn features(&self, words: &[u8]) -> Vec<f64> {
        let mut out = vec![0.0; self.feature_len()];
        self.features_into(words, &mut out);
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{TABLE_MAGIC} {TABLE_VERSION} d={} tiles={} alpha={} digest={}",
            self.d,
            self.tables.len(),
            self.alpha,
            self.digest
        )
        .unwrap();
        for (t, table) in self.tables.iter().enumerate() {
            writeln!(s, "tile {t}").unwrap();
            for row in &table.probs {
                writeln!(s, "{} {} {} {}", row[0], row[1], row[2], row[3]).unwrap();
            }
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_text().as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read(f)
    }

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(Error::parse(
                    0,
                    format!("unexpected end of file, expected {what}"),
                )),
            }
        };
        let (ln, header) = next("header")?;
        let fields =
            parse_header(&header, TABLE_MAGIC, TABLE_VERSION).map_err(|m| Error::parse(ln, m))?;
        let get = |k: &str| -> Result<&str> {
            fields
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::parse(ln, format!("missing header field {k}")))
        };
        let d: usize = get("d")?.parse().map_err(|_| Error::parse(ln, "bad d"))?;
        let nt: usize = get("tiles")?
            .parse()
            .map_err(|_| Error::parse(ln, "bad tile count"))?;
        let alpha: f64 = get("alpha")?
            .parse()
            .map_err(|_| Error::parse(ln, "bad alpha"))?;
        let digest = get("digest")?.to_string();
        let expected = ((d.max(3) - 1) / 2).pow(2);
        if nt != expected {
            return Err(Error::parse(
                ln,
                format!("d={d} needs {expected} tiles, header says {nt}"),
            ));
        }
        let mut tables = Vec::with_capacity(nt);
        for t in 0..nt {
            let (ln, line) = next("tile marker")?;
            if line.trim() != format!("tile {t}") {
                return Err(Error::parse(ln, format!("expected `tile {t}`")));
            }
            let mut probs = Vec::with_capacity(TILE_ROWS);
            for _ in 0..TILE_ROWS {
                let (ln, line) = next("table row")?;
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|v| v.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::parse(ln, e.to_string()))?;
                let row: [f64; CLASSES] = vals
                    .try_into()
                    .map_err(|_| Error::parse(ln, "expected 4 probabilities"))?;
                if row.iter().any(|p| !(*p > 0.0 && *p <= 1.0))
                    || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9
                {
                    return Err(Error::parse(ln, "row is not a probability distribution"));
                }
                probs.push(row);
            }
            tables.push(TileTable {
                counts: None,
                probs,
            });
        }
        Ok(Self {
            d,
            alpha,
            digest,
            tables,
        })
    }
}

/// Splits `magic version key=value...` and checks the first two tokens.
pub(crate) fn parse_header(
    line: &str,
    magic: &str,
    version: &str,
) -> std::result::Result<Vec<(String, String)>, String> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(magic) {
        return Err(format!("expected `{magic}` header"));
    }
    match tokens.next() {
        Some(v) if v == version => {}
        Some(v) => return Err(format!("unsupported format version {v}")),
        None => return Err("missing format version".into()),
    }
    tokens
        .map(|t| {
            t.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| format!("malformed header field `{t}`"))
        })
        .collect()
}
