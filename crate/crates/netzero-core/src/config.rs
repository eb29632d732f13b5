//! Run configuration: strict JSON ingestion in bench units (degrees, ns, us,
//! GS/s), per-subcommand experiment blocks, and the config hash recorded in
//! run manifests. Unknown keys are rejected everywhere; the full schema is
//! published in the repository docs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::device::{DeviceInput, DeviceParams};
use crate::distortion::{load_step_response, settling_kernel, ImpulseResponse};
use crate::dynamics::{NoiseModel, Tier};
use crate::error::{Error, Result};
use crate::experiments::SIM_SAMPLING_RATE;
use crate::pulse::{PulseShape, PulseSpec};
use crate::units::deg_to_rad;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Device description JSON (GHz/MHz/us fields); the built-in reference
    /// device when absent.
    pub device: Option<PathBuf>,
    pub pulse: PulseConfig,
    /// Cumulative noise tier A..E.
    pub tier: String,
    /// Flux-line distortion kernel for tiers that include distortions; the
    /// synthetic residual model is used when absent.
    pub kernel: Option<KernelConfig>,
    pub numerics: NumericsConfig,
    pub experiments: ExperimentBlocks,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            device: None,
            pulse: PulseConfig::default(),
            tier: "A".into(),
            kernel: None,
            numerics: NumericsConfig::default(),
            experiments: ExperimentBlocks::default(),
            output_dir: None,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub theta_f_deg: f64,
    pub lambda_2: f64,
    pub t_2q_ns: f64,
    pub t_1q_ns: f64,
    /// "netzero" or "unipolar".
    pub shape: String,
    /// Generation rate for the flux waveform, in GS/s. When absent,
    /// simulation subcommands use the dense internal rate and waveform export
    /// uses the AWG default.
    pub sampling_rate_gs: Option<f64>,
}

impl Default for PulseConfig {
    fn default() -> Self {
        PulseConfig {
            theta_f_deg: 85.0,
            lambda_2: 0.85,
            t_2q_ns: 28.0,
            t_1q_ns: 12.0,
            shape: "netzero".into(),
            sampling_rate_gs: None,
        }
    }
}

impl PulseConfig {
    pub fn shape(&self) -> Result<PulseShape> {
        match self.shape.trim().to_ascii_lowercase().as_str() {
            "netzero" | "net-zero" | "nz" => Ok(PulseShape::NetZero),
            "unipolar" => Ok(PulseShape::Unipolar),
            other => Err(Error::Config(format!(
                "unknown pulse shape '{other}', expected netzero or unipolar"
            ))),
        }
    }

    fn spec_at(&self, rate: f64) -> Result<PulseSpec> {
        let mut spec = PulseSpec::new(
            deg_to_rad(self.theta_f_deg),
            self.lambda_2,
            self.t_2q_ns * 1e-9,
            self.t_1q_ns * 1e-9,
            self.shape()?,
        );
        spec.sampling_rate = rate;
        Ok(spec)
    }

    /// Spec for propagation: dense enough that the integrator resolves the
    /// waveform exactly.
    pub fn simulation_spec(&self) -> Result<PulseSpec> {
        self.spec_at(self.sampling_rate_gs.map_or(SIM_SAMPLING_RATE, |g| g * 1e9))
    }

    /// Spec for waveform export, at playback (AWG) rate.
    pub fn export_spec(&self) -> Result<PulseSpec> {
        self.spec_at(
            self.sampling_rate_gs
                .map_or(PulseSpec::DEFAULT_SAMPLING_RATE, |g| g * 1e9),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    /// Step-response CSV (time, value rows) measured on the flux line.
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticKernel>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { path: None, synthetic: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticKernel {
    /// Settling amplitudes, paired with `taus_us`.
    pub amplitudes: Vec<f64>,
    pub taus_us: Vec<f64>,
    #[serde(default = "default_gain")]
    pub gain: f64,
    #[serde(default = "default_kernel_duration_us")]
    pub duration_us: f64,
}

fn default_gain() -> f64 {
    1.0
}

fn default_kernel_duration_us() -> f64 {
    60.0
}

impl KernelConfig {
    fn validate(&self) -> Result<()> {
        match (&self.path, &self.synthetic) {
            (Some(_), Some(_)) | (None, None) => Err(Error::Config(
                "kernel must set exactly one of 'path' or 'synthetic'".into(),
            )),
            (_, Some(s)) => {
                if s.amplitudes.is_empty() || s.amplitudes.len() != s.taus_us.len() {
                    return Err(Error::Config(
                        "synthetic kernel needs matching, non-empty amplitudes and taus_us".into(),
                    ));
                }
                if s.duration_us <= 0.0 {
                    return Err(Error::Config("kernel duration must be positive".into()));
                }
                Ok(())
            }
            (Some(_), None) => Ok(()),
        }
    }

    /// Realize the kernel on a sample grid.
    pub fn build(&self, dt: f64) -> Result<ImpulseResponse> {
        self.validate()?;
        if let Some(path) = &self.path {
            return load_step_response(path, dt);
        }
        let s = self.synthetic.as_ref().unwrap();
        let components: Vec<(f64, f64)> = s
            .amplitudes
            .iter()
            .zip(&s.taus_us)
            .map(|(&a, &tau)| (a, tau * 1e-6))
            .collect();
        settling_kernel(s.gain, &components, dt, s.duration_us * 1e-6)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    /// Integrator slice target in ps; slices never exceed the waveform grid.
    pub time_step_ps: Option<f64>,
    /// Gauss-Hermite nodes (or Monte Carlo draws) for quasi-static averages.
    pub quadrature_points: Option<usize>,
    /// Apply quasi-static offsets through the first-order frequency expansion.
    pub first_order_offsets: bool,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            time_step_ps: None,
            quadrature_points: None,
            first_order_offsets: false,
        }
    }
}

impl NumericsConfig {
    pub fn apply(&self, noise: &mut NoiseModel) {
        if let Some(ps) = self.time_step_ps {
            noise.time_step = ps * 1e-12;
        }
        if let Some(n) = self.quadrature_points {
            noise.quadrature_points = n;
        }
        noise.first_order_offsets = self.first_order_offsets;
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentBlocks {
    pub pulse: PulseOutputConfig,
    pub landscape: LandscapeConfig,
    pub optimize: OptimizeConfig,
    pub sensitivity: SensitivityConfig,
    pub history: HistoryConfig,
    pub ramz: RamzConfig,
    pub rb: RbConfig,
    pub mz: MzConfig,
    pub ablation: AblationConfig,
    pub buffer: BufferConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseOutputConfig {
    /// Also write the waveform after the distortion kernel.
    pub include_distorted: bool,
}

impl Default for PulseOutputConfig {
    fn default() -> Self {
        PulseOutputConfig { include_distorted: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeConfig {
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub n_theta: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n_lambda: usize,
    /// "exact" or "cond_osc".
    pub estimator: String,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        LandscapeConfig {
            theta_min_deg: 70.0,
            theta_max_deg: 100.0,
            n_theta: 7,
            lambda_min: 0.6,
            lambda_max: 1.0,
            n_lambda: 9,
            estimator: "exact".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub theta_step_deg: f64,
    pub lambda_step: f64,
    /// Run the single-qubit phase-correction loop at the optimum.
    pub calibrate: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            theta_min_deg: 82.0,
            theta_max_deg: 94.0,
            lambda_min: 0.70,
            lambda_max: 0.92,
            theta_step_deg: 2.0,
            lambda_step: 0.02,
            calibrate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityConfig {
    pub max_offset_uphi0: f64,
    pub steps_per_side: usize,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig { max_offset_uphi0: 400.0, steps_per_side: 3 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistoryConfig {
    pub t_sep_min_ns: f64,
    pub t_sep_max_ns: f64,
    /// Number of (log-spaced) separation points.
    pub n_seps: usize,
}

impl Default for HistoryConfig {
    fn default() -> Self {
        HistoryConfig { t_sep_min_ns: 100.0, t_sep_max_ns: 10_000.0, n_seps: 7 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamzConfig {
    /// Quasi-static flux-noise widths to compare, in uPhi_0.
    pub sigmas_uphi0: Vec<f64>,
    pub max_duration_us: f64,
    pub n_durations: usize,
}

impl Default for RamzConfig {
    fn default() -> Self {
        RamzConfig {
            sigmas_uphi0: vec![55.0, 5.5],
            max_duration_us: 4.0,
            n_durations: 9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbConfig {
    pub lengths: Vec<usize>,
    pub n_seeds: usize,
    /// Also run the CZ-interleaved variant and report per-CZ estimates.
    pub interleaved: bool,
}

impl Default for RbConfig {
    fn default() -> Self {
        RbConfig {
            lengths: vec![2, 4, 8, 16, 32],
            n_seeds: 50,
            interleaved: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MzConfig {
    /// Half-pulse leakage amplitude.
    pub alpha: f64,
    pub phi_half_deg: f64,
    pub n_points: usize,
    pub max_phi_tilde_deg: f64,
}

impl Default for MzConfig {
    fn default() -> Self {
        MzConfig {
            alpha: 0.15,
            phi_half_deg: 0.0,
            n_points: 241,
            max_phi_tilde_deg: 720.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub tiers: Vec<String>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            tiers: vec!["A".into(), "B".into(), "C".into(), "D".into(), "E".into()],
        }
    }
}

impl AblationConfig {
    pub fn tiers(&self) -> Result<Vec<Tier>> {
        self.tiers.iter().map(|s| Tier::parse(s)).collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BufferConfig {
    pub max_buffer_ns: f64,
    pub n_buffers: usize,
}

impl Default for BufferConfig {
    fn default() -> Self {
        BufferConfig { max_buffer_ns: 3.0, n_buffers: 61 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config does not match the schema: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        Tier::parse(&self.tier)?;
        self.pulse.shape()?;
        let p = &self.pulse;
        if p.t_2q_ns <= 0.0 || p.t_1q_ns < 0.0 {
            return Err(Error::Config("pulse durations must be positive".into()));
        }
        if !(0.0..180.0).contains(&p.theta_f_deg) {
            return Err(Error::Config("theta_f_deg must lie in (0, 180)".into()));
        }
        if p.sampling_rate_gs.is_some_and(|g| g <= 0.0) {
            return Err(Error::Config("sampling_rate_gs must be positive".into()));
        }
        if let Some(kernel) = &self.kernel {
            kernel.validate()?;
        }
        if self.numerics.time_step_ps.is_some_and(|ps| ps <= 0.0) {
            return Err(Error::Config("time_step_ps must be positive".into()));
        }
        if self.numerics.quadrature_points == Some(0) {
            return Err(Error::Config("quadrature_points must be at least 1".into()));
        }
        let e = &self.experiments;
        if e.landscape.n_theta == 0 || e.landscape.n_lambda == 0 {
            return Err(Error::Config("landscape grid must be non-empty".into()));
        }
        match e.landscape.estimator.as_str() {
            "exact" | "cond_osc" => {}
            other => {
                return Err(Error::Config(format!(
                    "unknown leakage estimator '{other}', expected exact or cond_osc"
                )))
            }
        }
        if e.sensitivity.steps_per_side == 0 || e.sensitivity.max_offset_uphi0 <= 0.0 {
            return Err(Error::Config("sensitivity scan needs a positive range".into()));
        }
        if e.history.n_seps < 2 || e.history.t_sep_min_ns <= 0.0
            || e.history.t_sep_max_ns <= e.history.t_sep_min_ns
        {
            return Err(Error::Config("history scan needs an increasing range".into()));
        }
        if e.ramz.sigmas_uphi0.is_empty() || e.ramz.n_durations < 3
            || e.ramz.max_duration_us <= 0.0
        {
            return Err(Error::Config(
                "ramz needs at least one sigma and three durations".into(),
            ));
        }
        if e.rb.lengths.is_empty() || e.rb.lengths.iter().any(|&n| n == 0) || e.rb.n_seeds == 0 {
            return Err(Error::Config("rb needs positive lengths and seeds".into()));
        }
        if !(0.0..=1.0).contains(&e.mz.alpha) || e.mz.n_points < 2 {
            return Err(Error::Config("mz needs alpha in [0, 1] and 2+ points".into()));
        }
        e.ablation.tiers()?;
        if e.ablation.tiers.is_empty() {
            return Err(Error::Config("ablation needs at least one tier".into()));
        }
        if e.buffer.n_buffers < 2 || e.buffer.max_buffer_ns <= 0.0 {
            return Err(Error::Config("buffer sweep needs an increasing range".into()));
        }
        Ok(())
    }

    pub fn tier(&self) -> Result<Tier> {
        Tier::parse(&self.tier)
    }

    /// Device parameters, from the referenced file or the built-in reference.
    pub fn device_params(&self) -> Result<DeviceParams> {
        let input = match &self.device {
            None => DeviceInput::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| {
                    Error::Config(format!("device file does not match the schema: {e}"))
                })?
            }
        };
        DeviceParams::new(input)
    }

    /// Noise model for the configured tier with the numeric knobs applied.
    /// The kernel is attached only when the tier includes distortions;
    /// `dt` sets its sample grid.
    pub fn noise_model(&self, dt: f64) -> Result<NoiseModel> {
        let mut noise = NoiseModel::tier(self.tier()?);
        self.numerics.apply(&mut noise);
        if noise.distortions {
            if let Some(kernel) = &self.kernel {
                noise.kernel = Some(kernel.build(dt)?);
            }
        }
        Ok(noise)
    }

    /// SHA-256 of the canonical serialized config, as lowercase hex.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
