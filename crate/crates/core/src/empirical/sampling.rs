use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Distribution of the i.i.d. entries of `Z` and `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Gaussian,
    Rademacher,
}

impl Sampler {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampler::Gaussian => "gaussian",
            Sampler::Rademacher => "rademacher",
        }
    }
}

impl std::str::FromStr for Sampler {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "gaussian" => Ok(Sampler::Gaussian),
            "rademacher" => Ok(Sampler::Rademacher),
            other => Err(crate::Error::arg(format!("unknown sampler `{other}` (expected gaussian or rademacher)"))),
        }
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows x cols` matrix of i.i.d. mean-zero, unit-variance entries.
/// Entries are drawn in column-major order from a ChaCha8 stream seeded
/// by `seed`.
pub fn sample_matrix(rows: usize, cols: usize, sampler: Sampler, seed: u64) -> DMatrix<f64> {
    let mut rng = rng(seed);
    match sampler {
        Sampler::Gaussian => DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal)),
        Sampler::Rademacher => DMatrix::from_fn(rows, cols, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 }),
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the sub-stream addressed by `path` under `master`.
pub fn child_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0x632b_e59b_d9b4_e019))))
}
