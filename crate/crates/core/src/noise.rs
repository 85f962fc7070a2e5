//! Depolarizing noise on data qubits with per-trial reproducible streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Pauli, PauliFrame};

/// Counter-based random stream keyed by `(master_seed, stream_key)`.
///
/// The ChaCha key comes from the master seed and the stream id from the key,
/// so draw `k` of a stream depends only on `(master_seed, stream_key, k)`.
#[derive(Debug, Clone)]
pub struct TrialRng {
    inner: ChaCha8Rng,
}

impl TrialRng {
    pub fn new(master_seed: u64, stream_key: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_key);
        Self { inner }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// One uniform draw per qubit in index order: `[0, p/3)` is X, `[p/3, 2p/3)` is Z,
/// `[2p/3, p)` is Y.
pub fn sample_depolarizing(lat: &Lattice, p: f64, rng: &mut TrialRng) -> Result<PauliFrame> {
    check_probability(p)?;
    let n = lat.data_count();
    let third = p / 3.0;
    let mut frame = PauliFrame::identity(n);
    for q in 0..n {
        let u = rng.uniform();
        if u < p {
            let pauli = if u < third {
                Pauli::X
            } else if u < 2.0 * third {
                Pauli::Z
            } else {
                Pauli::Y
            };
            frame.apply(q, pauli);
        }
    }
    Ok(frame)
}

/// Error frame for trial `trial` of a run seeded with `seed`.
pub fn trial_error(lat: &Lattice, p: f64, seed: u64, trial: u64) -> Result<PauliFrame> {
    sample_depolarizing(lat, p, &mut TrialRng::new(seed, trial))
}
