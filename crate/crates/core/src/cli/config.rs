use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::empirical::{child_seed, sample_matrix, ProblemInstance, ReplicationPlan, Sampler, SweepGrid};
use crate::spectrum::{make_inverse_index, make_isotropic, make_power_law, Spectrum, SpectrumFile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    #[default]
    Isotropic,
    InverseIndex,
    PowerLaw,
    TwoDirac,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub kind: SpectrumKind,
    /// `isotropic: [sigma]`, `inverse_index: []` (unit trace),
    /// `power_law: [alpha, tau]`, `two_dirac: [pi1, sigma1, sigma2]`.
    #[serde(default)]
    pub params: Vec<f64>,
    /// Spectrum file for `kind = "file"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { kind: SpectrumKind::Isotropic, params: vec![1.0], path: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// Standard Gaussian target rescaled to `theta^T Sigma theta = 1`.
    #[default]
    RandomGaussianNormalized,
    /// Gaussian target with covariance `I / d`, not rescaled.
    RandomGaussian,
    /// Signal masses read from a spectrum file, spread evenly over the
    /// eigenvalues of each atom.
    AlignedFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub kind: SignalKind,
    #[serde(default)]
    pub seed: u64,
    /// Signal source for `aligned_file`; defaults to the spectrum file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig { kind: SignalKind::RandomGaussianNormalized, seed: 0, path: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Theory,
    Empirical,
    Both,
    Probe,
}

impl Mode {
    pub fn runs_empirical(self) -> bool {
        matches!(self, Mode::Empirical | Mode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    #[default]
    Haar,
    Identity,
}

fn default_sigma() -> f64 {
    1.0
}

fn default_sampler() -> Sampler {
    Sampler::Gaussian
}

fn default_replications() -> usize {
    20
}

fn one() -> usize {
    1
}

/// A sweep as read from JSON. Every field but `n` and `d` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n: usize,
    pub d: usize,
    #[serde(default = "default_sigma")]
    pub sigma_noise: f64,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub signal: SignalConfig,
    /// Empty together with `lambda_grid` means `step, 2 step, ..., 4n` with
    /// `step = max(1, round(n / 20))`.
    #[serde(default)]
    pub m_grid: Vec<usize>,
    #[serde(default)]
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_sampler")]
    pub sampler: Sampler,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub basis: BasisKind,
    #[serde(default)]
    pub estimate_kappa: bool,
    #[serde(default = "one")]
    pub sketches_per_design: usize,
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

/// `step, 2 step, ..., 4n` with `step = max(1, round(n / 20))`.
pub fn default_m_grid(n: usize) -> Vec<usize> {
    let step = ((n as f64 / 20.0).round() as usize).max(1);
    (1..).map(|k| k * step).take_while(|&m| m <= 4 * n).collect()
}

impl SweepConfig {
    pub fn new(n: usize, d: usize) -> Self {
        SweepConfig {
            n,
            d,
            sigma_noise: default_sigma(),
            spectrum: SpectrumConfig::default(),
            signal: SignalConfig::default(),
            m_grid: vec![],
            lambda_grid: vec![],
            replications: default_replications(),
            sampler: default_sampler(),
            master_seed: 0,
            mode: Mode::Theory,
            basis: BasisKind::Haar,
            estimate_kappa: false,
            sketches_per_design: 1,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_unchecked(text)?.finish()
    }

    /// Parses without filling defaults or validating, so that command-line
    /// overrides can be applied first.
    pub(crate) fn from_json_unchecked(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: SweepConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(if path.is_empty() { "." } else { &path }, e.into_inner().to_string())
        })?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fills the default grid and validates.
    pub fn finish(mut self) -> Result<Self> {
        if self.m_grid.is_empty() && self.lambda_grid.is_empty() && self.mode != Mode::Probe {
            self.m_grid = default_m_grid(self.n);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(config_err("n", "must be >= 1"));
        }
        if self.d == 0 {
            return Err(config_err("d", "must be >= 1"));
        }
        if !(self.sigma_noise >= 0.0 && self.sigma_noise.is_finite()) {
            return Err(config_err("sigma_noise", "must be finite and nonnegative"));
        }
        if let Some(i) = self.m_grid.iter().position(|&m| m == 0) {
            return Err(config_err(&format!("m_grid[{i}]"), "must be >= 1"));
        }
        if let Some(i) = self.lambda_grid.iter().position(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(config_err(&format!("lambda_grid[{i}]"), "must be finite and nonnegative"));
        }
        if !self.m_grid.is_empty() && !self.lambda_grid.is_empty() && self.mode != Mode::Probe {
            return Err(config_err("lambda_grid", "give either m_grid or lambda_grid, not both"));
        }
        if self.mode == Mode::Probe {
            if self.lambda_grid.is_empty() {
                return Err(config_err("lambda_grid", "probe mode needs a non-empty penalty grid"));
            }
            if let Some(i) = self.lambda_grid.iter().position(|&l| l <= 0.0) {
                return Err(config_err(&format!("lambda_grid[{i}]"), "probe penalties must be positive"));
            }
        } else if self.m_grid.is_empty() && self.lambda_grid.is_empty() {
            return Err(config_err("m_grid", "grid is empty"));
        }
        if self.sketches_per_design == 0 {
            return Err(config_err("sketches_per_design", "must be >= 1"));
        }
        self.check_spectrum_params()
    }

    fn check_spectrum_params(&self) -> Result<()> {
        let p = &self.spectrum.params;
        let need = |count: usize, shape: &str| {
            if p.len() == count {
                Ok(())
            } else {
                Err(config_err("spectrum.params", format!("expected {shape}, got {} values", p.len())))
            }
        };
        match self.spectrum.kind {
            SpectrumKind::Isotropic => need(1, "[sigma]"),
            SpectrumKind::InverseIndex => need(0, "[]"),
            SpectrumKind::PowerLaw => need(2, "[alpha, tau]"),
            SpectrumKind::TwoDirac => need(3, "[pi1, sigma1, sigma2]"),
            SpectrumKind::File => match &self.spectrum.path {
                Some(_) => Ok(()),
                None => Err(config_err("spectrum.path", "required for kind \"file\"")),
            },
        }?;
        if self.signal.kind == SignalKind::AlignedFile && self.signal.path.is_none() && self.spectrum.path.is_none() {
            return Err(config_err("signal.path", "aligned_file needs a signal file or a spectrum file"));
        }
        Ok(())
    }

    pub fn sweep_grid(&self) -> SweepGrid {
        if self.m_grid.is_empty() {
            SweepGrid::Penalties(self.lambda_grid.clone())
        } else {
            SweepGrid::Projections(self.m_grid.clone())
        }
    }

    pub fn plan(&self) -> ReplicationPlan {
        ReplicationPlan {
            grid: self.sweep_grid(),
            replications: self.replications,
            sketches_per_design: self.sketches_per_design,
            sampler: self.sampler,
            master_seed: self.master_seed,
            estimate_kappa: self.estimate_kappa,
        }
    }

    fn spectrum_file(&self) -> Result<SpectrumFile> {
        let path = self.spectrum.path.as_ref().ok_or_else(|| config_err("spectrum.path", "missing"))?;
        read_spectrum_file(path)
    }

    /// Covariance eigenvalues, one per dimension.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let d = self.d;
        let p = &self.spectrum.params;
        let spec = match self.spectrum.kind {
            SpectrumKind::Isotropic => make_isotropic(d, p[0])?,
            SpectrumKind::InverseIndex => make_inverse_index(d)?,
            SpectrumKind::PowerLaw => make_power_law(d, p[0], p[1])?,
            SpectrumKind::TwoDirac => {
                let k1 = (p[0] * d as f64).round() as usize;
                let mut eigs = vec![p[1]; k1];
                eigs.extend(std::iter::repeat_n(p[2], d - k1.min(d)));
                return check_eigs(eigs);
            }
            SpectrumKind::File => {
                let (spec, _) = self.spectrum_file()?.into_measures()?;
                if spec.d() != d {
                    return Err(config_err("spectrum.path", format!("file has d = {}, config has d = {d}", spec.d())));
                }
                spec
            }
        };
        expand_atoms(&spec)
    }

    fn signal_masses_per_atom(&self) -> Result<(Spectrum, Vec<f64>)> {
        let file = match &self.signal.path {
            Some(p) => read_spectrum_file(p)?,
            None => self.spectrum_file()?,
        };
        let (spec, signal) = file.into_measures()?;
        let signal = signal.ok_or_else(|| config_err("signal.path", "file has no signal masses"))?;
        Ok((spec, signal.masses().to_vec()))
    }

    /// The fixed problem of this sweep. The eigenbasis is only materialised
    /// when `with_basis` is set, since theory curves never need it.
    pub fn instance(&self, with_basis: bool) -> Result<ProblemInstance> {
        let eigs = self.eigenvalues()?;
        let haar = with_basis && self.basis == BasisKind::Haar;
        match self.signal.kind {
            SignalKind::RandomGaussianNormalized => {
                ProblemInstance::random_normalized(self.n, self.sigma_noise, eigs, haar, self.signal.seed)
            }
            SignalKind::RandomGaussian => {
                let d = eigs.len();
                let theta: Vec<f64> = sample_matrix(d, 1, Sampler::Gaussian, child_seed(self.signal.seed, &[1]))
                    .iter()
                    .map(|v| v / (d as f64).sqrt())
                    .collect();
                let basis = haar.then(|| crate::empirical::haar_basis(d, child_seed(self.signal.seed, &[0])));
                ProblemInstance::from_eigen_coordinates(self.n, self.sigma_noise, basis, eigs, &theta)
            }
            SignalKind::AlignedFile => {
                let (spec, masses) = self.signal_masses_per_atom()?;
                let mut theta = Vec::with_capacity(self.d);
                let mut file_eigs = Vec::with_capacity(self.d);
                for (&(e, w), m) in spec.atoms().iter().zip(masses) {
                    let copies = integral_weight(w)?;
                    file_eigs.extend(std::iter::repeat_n(e, copies));
                    theta.extend(std::iter::repeat_n((m / copies as f64).sqrt(), copies));
                }
                if theta.len() != self.d {
                    return Err(config_err("signal.path", format!("signal covers {} dimensions, config has d = {}", theta.len(), self.d)));
                }
                let basis = haar.then(|| crate::empirical::haar_basis(self.d, child_seed(self.signal.seed, &[0])));
                ProblemInstance::from_eigen_coordinates(self.n, self.sigma_noise, basis, file_eigs, &theta)
            }
        }
    }
}

fn integral_weight(w: f64) -> Result<usize> {
    let r = w.round();
    if (w - r).abs() > 1e-9 * w.max(1.0) || r < 1.0 {
        return Err(Error::arg(format!("atom weight {w} is not a positive integer, cannot build a finite instance")));
    }
    Ok(r as usize)
}

fn expand_atoms(spec: &Spectrum) -> Result<Vec<f64>> {
    let mut eigs = Vec::with_capacity(spec.d());
    for &(e, w) in spec.atoms() {
        eigs.extend(std::iter::repeat_n(e, integral_weight(w)?));
    }
    check_eigs(eigs)
}

fn check_eigs(eigs: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(e) = eigs.iter().find(|e| !(**e > 0.0)) {
        return Err(config_err("spectrum.params", format!("eigenvalue {e} is not positive")));
    }
    Ok(eigs)
}

fn read_spectrum_file(path: &Path) -> Result<SpectrumFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err("spectrum.path", format!("cannot read {}: {e}", path.display())))?;
    SpectrumFile::from_json(&text).map_err(|e| config_err("spectrum.path", format!("{}: {e}", path.display())))
}

/// Reads and validates a sweep configuration file.
pub fn load_config(path: &Path) -> Result<SweepConfig> {
    load_config_unchecked(path)?.finish()
}

pub(crate) fn load_config_unchecked(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(".", format!("cannot read {}: {e}", path.display())))?;
    SweepConfig::from_json_unchecked(&text)
}
