//! Rotated surface code geometry, Pauli frames, and noiseless syndrome extraction.
//!
//! Data qubit `(r, c)` of a distance-`d` patch has index `r * d + c`. A check is
//! named by its plaquette `(pr, pc)`, the data qubit at its top-left corner,
//! with `pr, pc` ranging over `-1..=d-1` so that boundary checks get a
//! coordinate just outside the data grid.
//!
//! Bulk plaquettes are Z-kind when `pr + pc` is even. Weight-2 X checks sit on
//! the top (even `pc`) and bottom (odd `pc`) edges; weight-2 Z checks sit on the
//! left (odd `pr`) and right (even `pr`) edges. With this layout the logical X
//! runs down column 0 and the logical Z along the bottom row, so for `d = 3`
//! they are `X0 X3 X6` and `Z6 Z7 Z8`.

use std::fmt;
use std::ops::BitXorAssign;

use bitvec::prelude::*;

use crate::error::{Error, Result};

pub type Bits = BitVec<u64, Lsb0>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckKind {
    /// Detects bit flips (X components).
    Z,
    /// Detects phase flips (Z components).
    X,
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckKind::Z => write!(f, "Z"),
            CheckKind::X => write!(f, "X"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub id: usize,
    pub kind: CheckKind,
    /// Data qubits, ascending. Always 2 or 4 of them.
    pub support: Vec<usize>,
    pub plaquette: (i32, i32),
}

impl Check {
    pub fn is_boundary(&self) -> bool {
        self.support.len() == 2
    }
}

/// Single-qubit Pauli, phase ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Z,
    Y,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Z, Pauli::Y];
}

/// Residual action of `error ⊕ correction` on the encoded qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LogicalClass {
    I = 0,
    X = 1,
    Z = 2,
    Y = 3,
}

impl LogicalClass {
    pub const ALL: [LogicalClass; 4] = [
        LogicalClass::I,
        LogicalClass::X,
        LogicalClass::Z,
        LogicalClass::Y,
    ];

    /// `cx` is the X-flip parity, `cz` the Z-flip parity.
    pub fn from_parities(cx: bool, cz: bool) -> Self {
        Self::from_index(cx as usize | (cz as usize) << 1)
    }

    pub fn parities(self) -> (bool, bool) {
        let i = self as usize;
        (i & 1 == 1, i & 2 == 2)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i & 3]
    }

    pub fn as_char(self) -> char {
        match self {
            LogicalClass::I => 'I',
            LogicalClass::X => 'X',
            LogicalClass::Z => 'Z',
            LogicalClass::Y => 'Y',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(LogicalClass::I),
            'X' => Some(LogicalClass::X),
            'Z' => Some(LogicalClass::Z),
            'Y' => Some(LogicalClass::Y),
            _ => None,
        }
    }

    /// Composition in the Klein four-group {I, X, Z, Y}.
    pub fn compose(self, other: Self) -> Self {
        Self::from_index(self.index() ^ other.index())
    }
}

impl fmt::Display for LogicalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

fn xor_words(dst: &mut Bits, src: &Bits) {
    assert_eq!(dst.len(), src.len(), "bit vector length mismatch");
    for (a, b) in dst.as_raw_mut_slice().iter_mut().zip(src.as_raw_slice()) {
        *a ^= *b;
    }
}

fn and_parity(a: &Bits, b: &Bits) -> bool {
    a.as_raw_slice()
        .iter()
        .zip(b.as_raw_slice())
        .map(|(x, y)| (x & y).count_ones())
        .sum::<u32>()
        & 1
        == 1
}

/// X and Z components of a Pauli operator on the data qubits; both set means Y.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliFrame {
    pub x: Bits,
    pub z: Bits,
}

impl PauliFrame {
    pub fn identity(n: usize) -> Self {
        Self {
            x: bitvec![u64, Lsb0; 0; n],
            z: bitvec![u64, Lsb0; 0; n],
        }
    }

    pub fn from_x(n: usize, qubits: &[usize]) -> Self {
        let mut f = Self::identity(n);
        for &q in qubits {
            f.apply(q, Pauli::X);
        }
        f
    }

    pub fn from_z(n: usize, qubits: &[usize]) -> Self {
        let mut f = Self::identity(n);
        for &q in qubits {
            f.apply(q, Pauli::Z);
        }
        f
    }

    pub fn single(n: usize, qubit: usize, pauli: Pauli) -> Self {
        let mut f = Self::identity(n);
        f.apply(qubit, pauli);
        f
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Multiplies the frame by `pauli` on `qubit`.
    pub fn apply(&mut self, qubit: usize, pauli: Pauli) {
        match pauli {
            Pauli::X => {
                let v = self.x[qubit];
                self.x.set(qubit, !v);
            }
            Pauli::Z => {
                let v = self.z[qubit];
                self.z.set(qubit, !v);
            }
            Pauli::Y => {
                self.apply(qubit, Pauli::X);
                self.apply(qubit, Pauli::Z);
            }
        }
    }

    pub fn get(&self, qubit: usize) -> Option<Pauli> {
        match (self.x[qubit], self.z[qubit]) {
            (false, false) => None,
            (true, false) => Some(Pauli::X),
            (false, true) => Some(Pauli::Z),
            (true, true) => Some(Pauli::Y),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x.not_any() && self.z.not_any()
    }

    /// Number of qubits with a non-identity component.
    pub fn weight(&self) -> usize {
        self.x
            .as_raw_slice()
            .iter()
            .zip(self.z.as_raw_slice())
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn compose(&self, other: &PauliFrame) -> Result<PauliFrame> {
        if self.len() != other.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let mut out = self.clone();
        out ^= other;
        Ok(out)
    }
}

impl BitXorAssign<&PauliFrame> for PauliFrame {
    fn bitxor_assign(&mut self, rhs: &PauliFrame) {
        xor_words(&mut self.x, &rhs.x);
        xor_words(&mut self.z, &rhs.z);
    }
}

/// One noiseless round of check outcomes, indexed by check id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Syndrome {
    pub bits: Bits,
}

impl Syndrome {
    pub fn zeros(n: usize) -> Self {
        Self {
            bits: bitvec![u64, Lsb0; 0; n],
        }
    }

    pub fn from_events(n: usize, events: &[usize]) -> Self {
        let mut s = Self::zeros(n);
        for &e in events {
            s.flip(e);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, check: usize) -> bool {
        self.bits[check]
    }

    pub fn set(&mut self, check: usize, value: bool) {
        self.bits.set(check, value);
    }

    pub fn flip(&mut self, check: usize) {
        let v = self.bits[check];
        self.bits.set(check, !v);
    }

    pub fn is_zero(&self) -> bool {
        self.bits.not_any()
    }

    pub fn weight(&self) -> usize {
        self.bits.count_ones()
    }

    /// Ids of fired checks, ascending.
    pub fn events(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn xor(&self, other: &Syndrome) -> Syndrome {
        let mut out = self.clone();
        xor_words(&mut out.bits, &other.bits);
        out
    }

    /// Bit `k` of the syndrome as a 0/1 float, for network inputs.
    pub fn to_f64s(&self, out: &mut [f64]) {
        for (o, b) in out.iter_mut().zip(self.bits.iter()) {
            *o = if *b { 1.0 } else { 0.0 };
        }
    }

    /// Fixed-width hexadecimal, most significant nibble first; bit 0 is the
    /// least significant bit of the last digit.
    pub fn to_hex(&self) -> String {
        let n = self.len();
        let digits = n.div_ceil(4);
        let words = self.bits.as_raw_slice();
        let mut s = String::with_capacity(digits);
        for k in (0..digits).rev() {
            let nibble = (words[k / 16] >> (4 * (k % 16))) & 0xF;
            s.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        s
    }

    pub fn from_hex(n: usize, hex: &str) -> Option<Self> {
        let digits = n.div_ceil(4);
        if hex.len() != digits {
            return None;
        }
        let mut s = Self::zeros(n);
        for (i, ch) in hex.chars().enumerate() {
            let k = digits - 1 - i;
            let nibble = ch.to_digit(16)? as usize;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    let bit = 4 * k + b;
                    if bit >= n {
                        return None;
                    }
                    s.bits.set(bit, true);
                }
            }
        }
        Some(s)
    }
}

/// Immutable description of a distance-`d` rotated surface code patch.
#[derive(Debug, Clone)]
pub struct Lattice {
    d: usize,
    checks: Vec<Check>,
    logical_x: Vec<usize>,
    logical_z: Vec<usize>,
    logical_x_mask: Bits,
    logical_z_mask: Bits,
    /// `(d + 1) x (d + 1)` grid over plaquettes `-1..=d-1`.
    plaquette_index: Vec<Option<usize>>,
    /// Z-kind checks toggled by an X on each qubit.
    x_detectors: Vec<Vec<usize>>,
    /// X-kind checks toggled by a Z on each qubit.
    z_detectors: Vec<Vec<usize>>,
}

fn plaquette(d: i32, pr: i32, pc: i32) -> Option<(CheckKind, Vec<(i32, i32)>)> {
    let inner = |x: i32| (0..=d - 2).contains(&x);
    if inner(pr) && inner(pc) {
        let kind = if (pr + pc) % 2 == 0 {
            CheckKind::Z
        } else {
            CheckKind::X
        };
        return Some((
            kind,
            vec![(pr, pc), (pr, pc + 1), (pr + 1, pc), (pr + 1, pc + 1)],
        ));
    }
    if pr == -1 && inner(pc) && pc % 2 == 0 {
        return Some((CheckKind::X, vec![(0, pc), (0, pc + 1)]));
    }
    if pr == d - 1 && inner(pc) && pc % 2 == 1 {
        return Some((CheckKind::X, vec![(d - 1, pc), (d - 1, pc + 1)]));
    }
    if pc == -1 && inner(pr) && pr % 2 == 1 {
        return Some((CheckKind::Z, vec![(pr, 0), (pr + 1, 0)]));
    }
    if pc == d - 1 && inner(pr) && pr % 2 == 0 {
        return Some((CheckKind::Z, vec![(pr, d - 1), (pr + 1, d - 1)]));
    }
    None
}

impl Lattice {
    pub fn new(d: usize) -> Result<Self> {
        if d < 3 || d.is_multiple_of(2) {
            return Err(Error::InvalidDistance(d));
        }
        let di = d as i32;
        let mut found = Vec::new();
        for pr in -1..di {
            for pc in -1..di {
                if let Some((kind, cells)) = plaquette(di, pr, pc) {
                    let mut support: Vec<usize> = cells
                        .iter()
                        .map(|&(r, c)| r as usize * d + c as usize)
                        .collect();
                    support.sort_unstable();
                    found.push((kind, (pr, pc), support));
                }
            }
        }
        // Z-kind first, each kind in plaquette row-major order.
        found.sort_by_key(|(kind, pl, _)| (*kind, *pl));

        let n = d * d;
        let mut plaquette_index = vec![None; (d + 1) * (d + 1)];
        let mut x_detectors = vec![Vec::new(); n];
        let mut z_detectors = vec![Vec::new(); n];
        let checks: Vec<Check> = found
            .into_iter()
            .enumerate()
            .map(|(id, (kind, plaquette, support))| {
                plaquette_index
                    [(plaquette.0 + 1) as usize * (d + 1) + (plaquette.1 + 1) as usize] = Some(id);
                for &q in &support {
                    match kind {
                        CheckKind::Z => x_detectors[q].push(id),
                        CheckKind::X => z_detectors[q].push(id),
                    }
                }
                Check {
                    id,
                    kind,
                    support,
                    plaquette,
                }
            })
            .collect();

        let logical_x: Vec<usize> = (0..d).map(|r| r * d).collect();
        let logical_z: Vec<usize> = (0..d).map(|c| (d - 1) * d + c).collect();
        let mut logical_x_mask = bitvec![u64, Lsb0; 0; n];
        let mut logical_z_mask = bitvec![u64, Lsb0; 0; n];
        for &q in &logical_x {
            logical_x_mask.set(q, true);
        }
        for &q in &logical_z {
            logical_z_mask.set(q, true);
        }

        Ok(Self {
            d,
            checks,
            logical_x,
            logical_z,
            logical_x_mask,
            logical_z_mask,
            plaquette_index,
            x_detectors,
            z_detectors,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn data_count(&self) -> usize {
        self.d * self.d
    }

    pub fn check_count(&self) -> usize {
        self.checks.len()
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn check(&self, id: usize) -> &Check {
        &self.checks[id]
    }

    pub fn checks_of(&self, kind: CheckKind) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(move |c| c.kind == kind)
    }

    pub fn logical_x_support(&self) -> &[usize] {
        &self.logical_x
    }

    pub fn logical_z_support(&self) -> &[usize] {
        &self.logical_z
    }

    /// Check id at plaquette `(pr, pc)`, if one exists there.
    pub fn check_at(&self, pr: i32, pc: i32) -> Option<usize> {
        let d = self.d as i32;
        if !(-1..d).contains(&pr) || !(-1..d).contains(&pc) {
            return None;
        }
        self.plaquette_index[(pr + 1) as usize * (self.d + 1) + (pc + 1) as usize]
    }

    pub fn qubit(&self, r: usize, c: usize) -> usize {
        r * self.d + c
    }

    pub fn qubit_coords(&self, q: usize) -> (usize, usize) {
        (q / self.d, q % self.d)
    }

    /// Checks of `kind` whose support contains `qubit` (one or two of them).
    pub fn checks_containing(&self, qubit: usize, kind: CheckKind) -> &[usize] {
        match kind {
            CheckKind::Z => &self.x_detectors[qubit],
            CheckKind::X => &self.z_detectors[qubit],
        }
    }

    pub fn identity_frame(&self) -> PauliFrame {
        PauliFrame::identity(self.data_count())
    }

    pub fn zero_syndrome(&self) -> Syndrome {
        Syndrome::zeros(self.check_count())
    }

    pub fn syndrome_of(&self, frame: &PauliFrame) -> Result<Syndrome> {
        if frame.len() != self.data_count() || frame.z.len() != self.data_count() {
            return Err(Error::SizeMismatch {
                expected: self.data_count(),
                found: frame.len(),
            });
        }
        let mut s = self.zero_syndrome();
        for q in frame.x.iter_ones() {
            for &c in &self.x_detectors[q] {
                s.flip(c);
            }
        }
        for q in frame.z.iter_ones() {
            for &c in &self.z_detectors[q] {
                s.flip(c);
            }
        }
        Ok(s)
    }

    /// Logical class of a frame without checking that it commutes with the checks.
    pub fn logical_class_unchecked(&self, frame: &PauliFrame) -> LogicalClass {
        let cx = and_parity(&frame.x, &self.logical_z_mask);
        let cz = and_parity(&frame.z, &self.logical_x_mask);
        LogicalClass::from_parities(cx, cz)
    }

    /// Logical class of a frame in the normalizer (trivial syndrome).
    pub fn residual_class(&self, frame: &PauliFrame) -> Result<LogicalClass> {
        if !self.syndrome_of(frame)?.is_zero() {
            return Err(Error::NontrivialSyndrome);
        }
        Ok(self.logical_class_unchecked(frame))
    }

    /// The canonical logical operator implementing `class`.
    pub fn logical_frame(&self, class: LogicalClass) -> PauliFrame {
        let n = self.data_count();
        let (cx, cz) = class.parities();
        let mut f = PauliFrame::identity(n);
        if cx {
            for &q in &self.logical_x {
                f.apply(q, Pauli::X);
            }
        }
        if cz {
            for &q in &self.logical_z {
                f.apply(q, Pauli::Z);
            }
        }
        f
    }

    /// The stabilizer element of check `id` as a frame.
    pub fn check_frame(&self, id: usize) -> PauliFrame {
        let c = &self.checks[id];
        match c.kind {
            CheckKind::Z => PauliFrame::from_z(self.data_count(), &c.support),
            CheckKind::X => PauliFrame::from_x(self.data_count(), &c.support),
        }
    }
}
