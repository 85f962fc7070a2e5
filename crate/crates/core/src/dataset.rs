//! Training records: a syndrome and the residual logical class left by the
//! simple decoder on the error that produced it.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LogicalClass, Syndrome};
use crate::noise::trial_error;
use crate::simple::SimpleDecoder;
use crate::tiles::parse_header;

const DATASET_MAGIC: &str = "qectg-dataset";
const DATASET_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Record {
    pub syndrome: Syndrome,
    pub class: LogicalClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub d: usize,
    pub p_train: f64,
    pub seed: u64,
    pub records: Vec<Record>,
}

/// Samples `n` depolarizing errors (trial `i` uses stream `i` of `seed`) and
/// records each syndrome with the class of `error ⊕ simple correction`.
pub fn generate_dataset(
    lat: &Lattice,
    simple: &SimpleDecoder,
    p: f64,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    let records = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let err = trial_error(lat, p, seed, i)?;
            let syndrome = lat.syndrome_of(&err)?;
            let residual = err.compose(&simple.decode(&syndrome))?;
            let class = lat.residual_class(&residual)?;
            Ok(Record { syndrome, class })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        d: lat.d(),
        p_train: p,
        seed,
        records,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn check_count(&self) -> usize {
        self.d * self.d - 1
    }

    /// Fraction of records per class, in `LogicalClass` order.
    pub fn class_fractions(&self) -> [f64; 4] {
        let mut c = [0usize; 4];
        for r in &self.records {
            c[r.class.index()] += 1;
        }
        let n = self.records.len().max(1) as f64;
        c.map(|k| k as f64 / n)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "{DATASET_MAGIC} {DATASET_VERSION} d={} p={} n={} seed={}",
            self.d,
            self.p_train,
            self.records.len(),
            self.seed
        )?;
        for r in &self.records {
            writeln!(w, "{} {}", r.syndrome.to_hex(), r.class)?;
        }
        Ok(())
    }

    /// SHA-256 of the serialized file, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        self.write_to(&mut h).expect("hashing cannot fail");
        hex::encode(h.finalize())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty dataset file"))??;
        let fields = parse_header(&header, DATASET_MAGIC, DATASET_VERSION)
            .map_err(|m| Error::parse(1, m))?;
        let field = |k: &str| -> Result<&str> {
            fields
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::parse(1, format!("missing header field {k}")))
        };
        let bad = |k: &str| Error::parse(1, format!("bad value for {k}"));
        let d: usize = field("d")?.parse().map_err(|_| bad("d"))?;
        let p_train: f64 = field("p")?.parse().map_err(|_| bad("p"))?;
        let n: usize = field("n")?.parse().map_err(|_| bad("n"))?;
        let seed: u64 = field("seed")?.parse().map_err(|_| bad("seed"))?;
        if d < 3 || d.is_multiple_of(2) {
            return Err(Error::InvalidDistance(d));
        }
        let m = d * d - 1;
        let mut records = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let ln = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (hex, class) = line
                .split_once(' ')
                .ok_or_else(|| Error::parse(ln, "expected `<hex> <class>`"))?;
            let syndrome =
                Syndrome::from_hex(m, hex).ok_or_else(|| Error::parse(ln, "bad syndrome"))?;
            let mut chars = class.trim().chars();
            let class = match (chars.next().and_then(LogicalClass::from_char), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(Error::parse(ln, "bad logical class")),
            };
            records.push(Record { syndrome, class });
        }
        if records.len() != n {
            return Err(Error::parse(
                0,
                format!("header promises {n} records, found {}", records.len()),
            ));
        }
        Ok(Self {
            d,
            p_train,
            seed,
            records,
        })
    }
}
