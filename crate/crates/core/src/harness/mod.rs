//! Decoder assembly, model training and Monte Carlo evaluation.

mod eval;

pub use eval::{evaluate, sweep, wilson_interval, EvalResult, OracleDecoder, WILSON_Z};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::{Dataset, Record};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LogicalClass, PauliFrame, Syndrome};
use crate::matching::MatchingDecoder;
use crate::neural::{argmax, train, MlpModel, TrainConfig, TrainingSet};
use crate::simple::SimpleDecoder;
use crate::tiles::{fit_tables, make_tiles, slice_syndrome, Tile, TileTableSet, CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoderKind {
    Simple,
    Mwpm,
    Distributed,
    Gated,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 4] = [
        DecoderKind::Simple,
        DecoderKind::Mwpm,
        DecoderKind::Distributed,
        DecoderKind::Gated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DecoderKind::Simple => "simple",
            DecoderKind::Mwpm => "mwpm",
            DecoderKind::Distributed => "distributed",
            DecoderKind::Gated => "gated",
        }
    }

    pub fn needs_models(self) -> bool {
        matches!(self, DecoderKind::Distributed | DecoderKind::Gated)
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| {
                format!("unknown decoder `{s}` (expected simple, mwpm, distributed or gated)")
            })
    }
}

/// Anything that maps a syndrome to a correction.
pub trait Decoder: Sync {
    fn decode(&self, syndrome: &Syndrome) -> PauliFrame;

    /// Evaluation entry point. Only test oracles look at the sampled error.
    fn decode_trial(&self, syndrome: &Syndrome, _error: &PauliFrame) -> PauliFrame {
        self.decode(syndrome)
    }
}

impl Decoder for SimpleDecoder {
    fn decode(&self, s: &Syndrome) -> PauliFrame {
        SimpleDecoder::decode(self, s)
    }
}

impl Decoder for MatchingDecoder {
    fn decode(&self, s: &Syndrome) -> PauliFrame {
        MatchingDecoder::decode(self, s)
    }
}

/// Tile tables plus the 4-class network reading their rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedModel {
    pub tables: TileTableSet,
    pub net: MlpModel,
}

/// Binary gate on raw syndrome bits in front of a distributed model whose
/// network was trained only on syndromes the simple decoder gets wrong.
#[derive(Debug, Clone, PartialEq)]
pub struct GatedModel {
    pub gate: MlpModel,
    pub inner: DistributedModel,
}

pub fn tables_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, "tables")
}

pub fn net_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, "net")
}

pub fn gate_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, "gate")
}

/// The 4-class network of the gated variant.
pub fn gated_net_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, "gnet")
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

impl DistributedModel {
    pub fn save(&self, prefix: &Path) -> Result<()> {
        self.tables.save(tables_path(prefix))?;
        self.net.save(net_path(prefix))
    }

    pub fn load(prefix: &Path) -> Result<Self> {
        Ok(Self {
            tables: TileTableSet::load(tables_path(prefix))?,
            net: MlpModel::load(net_path(prefix))?,
        })
    }
}

impl GatedModel {
    pub fn save(&self, prefix: &Path) -> Result<()> {
        self.inner.tables.save(tables_path(prefix))?;
        self.inner.net.save(gated_net_path(prefix))?;
        self.gate.save(gate_path(prefix))
    }

    pub fn load(prefix: &Path) -> Result<Self> {
        let tables = TileTableSet::load(tables_path(prefix))?;
        let net = MlpModel::load(gated_net_path(prefix))?;
        Ok(Self {
            gate: MlpModel::load(gate_path(prefix))?,
            inner: DistributedModel { tables, net },
        })
    }
}

pub struct DistributedDecoder {
    simple: SimpleDecoder,
    tiles: Vec<Tile>,
    model: DistributedModel,
    logical: [PauliFrame; CLASSES],
}

impl DistributedDecoder {
    pub fn new(lat: &Lattice, model: DistributedModel) -> Result<Self> {
        let tiles = make_tiles(lat);
        if model.tables.d != lat.d() || model.tables.tile_count() != tiles.len() {
            return Err(Error::IncompatibleModel(format!(
                "tables are for d={} with {} tiles, lattice has d={}",
                model.tables.d,
                model.tables.tile_count(),
                lat.d()
            )));
        }
        if model.net.input_dim() != model.tables.feature_len() || model.net.output_dim() != CLASSES
        {
            return Err(Error::IncompatibleModel(format!(
                "network dims {:?} do not fit {} features and {CLASSES} classes",
                model.net.dims(),
                model.tables.feature_len()
            )));
        }
        Ok(Self {
            simple: SimpleDecoder::new(lat)?,
            tiles,
            model,
            logical: LogicalClass::ALL.map(|c| lat.logical_frame(c)),
        })
    }

    pub fn model(&self) -> &DistributedModel {
        &self.model
    }

    pub fn features(&self, s: &Syndrome) -> Vec<f64> {
        self.model.tables.features(&slice_syndrome(&self.tiles, s))
    }

    /// Most probable residual class of the simple decoder's correction.
    pub fn predict(&self, s: &Syndrome) -> LogicalClass {
        let p = self
            .model
            .net
            .forward(&self.features(s))
            .expect("dims checked at construction");
        LogicalClass::from_index(argmax(&p))
    }

    pub fn simple(&self) -> &SimpleDecoder {
        &self.simple
    }
}

impl Decoder for DistributedDecoder {
    fn decode(&self, s: &Syndrome) -> PauliFrame {
        let mut out = self.simple.decode(s);
        out ^= &self.logical[self.predict(s).index()];
        out
    }
}

pub struct GatedDecoder {
    gate: MlpModel,
    inner: DistributedDecoder,
}

impl GatedDecoder {
    pub fn new(lat: &Lattice, model: GatedModel) -> Result<Self> {
        let inputs = lat.check_count();
        if model.gate.input_dim() != inputs || model.gate.output_dim() != 2 {
            return Err(Error::IncompatibleModel(format!(
                "gate dims {:?} do not fit {inputs} syndrome bits and 2 classes",
                model.gate.dims()
            )));
        }
        Ok(Self {
            gate: model.gate,
            inner: DistributedDecoder::new(lat, model.inner)?,
        })
    }

    /// True when the gate predicts that the simple decoder leaves a logical error.
    pub fn flags(&self, s: &Syndrome) -> bool {
        let mut x = vec![0.0; s.len()];
        s.to_f64s(&mut x);
        argmax(&self.gate.forward(&x).expect("dims checked at construction")) == 1
    }
}

impl Decoder for GatedDecoder {
    fn decode(&self, s: &Syndrome) -> PauliFrame {
        if self.flags(s) {
            self.inner.decode(s)
        } else {
            self.inner.simple.decode(s)
        }
    }
}

pub enum AnyDecoder {
    Simple(SimpleDecoder),
    Mwpm(MatchingDecoder),
    Distributed(DistributedDecoder),
    Gated(GatedDecoder),
}

impl AnyDecoder {
    /// Builds `kind`, loading `<prefix>.*` model files for the neural kinds.
    pub fn build(kind: DecoderKind, lat: &Lattice, models: Option<&Path>) -> Result<Self> {
        let prefix = || {
            models
                .ok_or_else(|| Error::IncompatibleModel(format!("decoder `{kind}` needs --models")))
        };
        Ok(match kind {
            DecoderKind::Simple => AnyDecoder::Simple(SimpleDecoder::new(lat)?),
            DecoderKind::Mwpm => AnyDecoder::Mwpm(MatchingDecoder::new(lat)),
            DecoderKind::Distributed => AnyDecoder::Distributed(DistributedDecoder::new(
                lat,
                DistributedModel::load(prefix()?)?,
            )?),
            DecoderKind::Gated => {
                AnyDecoder::Gated(GatedDecoder::new(lat, GatedModel::load(prefix()?)?)?)
            }
        })
    }

    pub fn kind(&self) -> DecoderKind {
        match self {
            AnyDecoder::Simple(_) => DecoderKind::Simple,
            AnyDecoder::Mwpm(_) => DecoderKind::Mwpm,
            AnyDecoder::Distributed(_) => DecoderKind::Distributed,
            AnyDecoder::Gated(_) => DecoderKind::Gated,
        }
    }
}

impl Decoder for AnyDecoder {
    fn decode(&self, s: &Syndrome) -> PauliFrame {
        match self {
            AnyDecoder::Simple(d) => Decoder::decode(d, s),
            AnyDecoder::Mwpm(d) => Decoder::decode(d, s),
            AnyDecoder::Distributed(d) => d.decode(s),
            AnyDecoder::Gated(d) => d.decode(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub hidden: Vec<usize>,
    pub alpha: f64,
    pub config: TrainConfig,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            hidden: vec![128, 64],
            alpha: 1.0,
            config: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainSummary {
    /// Per-epoch loss of the 4-class network.
    pub net_losses: Vec<f64>,
    /// Per-epoch loss of the gate; empty for the ungated variant.
    pub gate_losses: Vec<f64>,
    /// Classes absent from the 4-class training targets. `I` is only expected
    /// in the ungated variant.
    pub missing_classes: Vec<LogicalClass>,
    /// Records handed to the 4-class network.
    pub net_records: usize,
}

/// Table features of a subset of records.
pub struct FeatureSet<'a> {
    tiles: Vec<Tile>,
    tables: &'a TileTableSet,
    records: Vec<&'a Record>,
}

impl<'a> FeatureSet<'a> {
    pub fn new(lat: &Lattice, tables: &'a TileTableSet, records: Vec<&'a Record>) -> Self {
        Self {
            tiles: make_tiles(lat),
            tables,
            records,
        }
    }
}

impl TrainingSet for FeatureSet<'_> {
    fn len(&self) -> usize {
        self.records.len()
    }
    fn input_dim(&self) -> usize {
        self.tables.feature_len()
    }
    fn label(&self, i: usize) -> usize {
        self.records[i].class.index()
    }
    fn fill(&self, i: usize, out: &mut [f64]) {
        self.tables
            .features_into(&slice_syndrome(&self.tiles, &self.records[i].syndrome), out);
    }
}

/// Raw syndrome bits labelled 1 when the simple decoder fails.
pub struct GateSet<'a> {
    pub records: &'a [Record],
}

impl TrainingSet for GateSet<'_> {
    fn len(&self) -> usize {
        self.records.len()
    }
    fn input_dim(&self) -> usize {
        self.records.first().map_or(0, |r| r.syndrome.len())
    }
    fn label(&self, i: usize) -> usize {
        (self.records[i].class != LogicalClass::I) as usize
    }
    fn fill(&self, i: usize, out: &mut [f64]) {
        self.records[i].syndrome.to_f64s(out);
    }
}

fn check_dataset(dataset: &Dataset, lat: &Lattice) -> Result<()> {
    if dataset.d != lat.d() {
        return Err(Error::IncompatibleModel(format!(
            "dataset is for d={}, lattice has d={}",
            dataset.d,
            lat.d()
        )));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

fn layer_dims(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input)
        .chain(hidden.iter().copied())
        .chain(std::iter::once(output))
        .collect()
}

fn missing(records: &[&Record], expected: &[LogicalClass]) -> Vec<LogicalClass> {
    expected
        .iter()
        .copied()
        .filter(|c| !records.iter().any(|r| r.class == *c))
        .collect()
}

fn fit_net(
    lat: &Lattice,
    tables: &TileTableSet,
    records: Vec<&Record>,
    expected: &[LogicalClass],
    opts: &TrainOptions,
) -> Result<(MlpModel, TrainSummary)> {
    let summary = TrainSummary {
        missing_classes: missing(&records, expected),
        net_records: records.len(),
        ..Default::default()
    };
    let set = FeatureSet::new(lat, tables, records);
    let init = MlpModel::new(
        &layer_dims(tables.feature_len(), &opts.hidden, CLASSES),
        opts.config.seed,
    )?;
    let (net, report) = train(init, &set, &opts.config)?;
    Ok((
        net,
        TrainSummary {
            net_losses: report.epoch_losses,
            ..summary
        },
    ))
}

/// Fits tables on every record, then trains the 4-class network on their features.
pub fn train_distributed(
    dataset: &Dataset,
    lat: &Lattice,
    opts: &TrainOptions,
) -> Result<(DistributedModel, TrainSummary)> {
    check_dataset(dataset, lat)?;
    let tables = fit_tables(&make_tiles(lat), dataset, opts.alpha)?;
    let (net, summary) = fit_net(
        lat,
        &tables,
        dataset.records.iter().collect(),
        &LogicalClass::ALL,
        opts,
    )?;
    Ok((DistributedModel { tables, net }, summary))
}

/// Trains the gate on raw syndrome bits over every record and the 4-class
/// network on the records whose simple-decoder residual is not `I`.
pub fn train_gated(
    dataset: &Dataset,
    lat: &Lattice,
    opts: &TrainOptions,
) -> Result<(GatedModel, TrainSummary)> {
    check_dataset(dataset, lat)?;
    let tables = fit_tables(&make_tiles(lat), dataset, opts.alpha)?;
    let flagged: Vec<&Record> = dataset
        .records
        .iter()
        .filter(|r| r.class != LogicalClass::I)
        .collect();
    if flagged.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (net, mut summary) = fit_net(lat, &tables, flagged, &LogicalClass::ALL[1..], opts)?;
    let gate_init = MlpModel::new(
        &layer_dims(lat.check_count(), &opts.hidden, 2),
        opts.config.seed,
    )?;
    let (gate, report) = train(
        gate_init,
        &GateSet {
            records: &dataset.records,
        },
        &opts.config,
    )?;
    summary.gate_losses = report.epoch_losses;
    Ok((
        GatedModel {
            gate,
            inner: DistributedModel { tables, net },
        },
        summary,
    ))
}
