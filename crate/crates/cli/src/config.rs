//! Experiment configuration: parsing, defaults per figure, validation and
//! the enumeration budget check that runs before any computation.

use std::path::PathBuf;

use onebit_mimo::beamforming::SearchMode;
use onebit_mimo::channel::{ChannelSpec, GeometrySpec};
use onebit_mimo::quantized_dmc::EnumerationBudget;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    Fig1,
    Fig2ExpansionOverlay,
    Fig4PlanarEbn0,
    Fig5Ebn0minVsNLos,
    Fig6PlanarSnrSweep,
    Fig7Eta1BfVsEq,
    Fig8EtaSweep,
    Fig9RayleighEbn0min,
    Fig10RayleighSnrSweep,
    Fig11BoundsSquare,
    Fig12BoundsSkewed,
    Table1,
    Breakeven,
}

impl FigureId {
    pub fn name(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Equiprobable,
    /// One quartet per realization: MI-optimal in SNR sweeps, power-optimal
    /// in low-SNR metrics.
    Beamforming,
    /// Blahut-Arimoto over quartet probabilities.
    Capacity,
}

impl StrategyName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Equiprobable => "equiprobable",
            Self::Beamforming => "beamforming",
            Self::Capacity => "capacity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakevenParams {
    pub pt_dbm: f64,
    pub eta: f64,
    pub fom_pj: f64,
    pub bits: u32,
    #[serde(default = "default_n_adc")]
    pub n_adc: u32,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_n_adc() -> u32 {
    2
}

fn default_kappa() -> f64 {
    onebit_mimo::power_model::DEFAULT_KAPPA
}

impl Default for BreakevenParams {
    fn default() -> Self {
        Self {
            pt_dbm: 23.0,
            eta: 0.4,
            fom_pj: 10.0,
            bits: 10,
            n_adc: default_n_adc(),
            kappa: default_kappa(),
        }
    }
}

/// The JSON file as written by the user. Every field but `figure_id` is
/// optional and falls back to the figure's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub figure_id: FigureId,
    #[serde(default)]
    pub channel: Option<ChannelSpec>,
    #[serde(default)]
    pub snr_db: Option<Vec<f64>>,
    #[serde(default)]
    pub ebn0_db: Option<Vec<f64>>,
    /// `[Nt, Nr]` pairs.
    #[serde(default)]
    pub antennas: Option<Vec<[usize; 2]>>,
    #[serde(default)]
    pub strategies: Option<Vec<StrategyName>>,
    #[serde(default)]
    pub eta: Option<Vec<f64>>,
    /// Link distance in wavelengths for the η-parametrized LOS figures.
    #[serde(default)]
    pub range_wavelengths: Option<f64>,
    #[serde(default)]
    pub search: Option<SearchMode>,
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub budget_bits: Option<u32>,
    #[serde(default)]
    pub breakeven: Option<BreakevenParams>,
}

/// A configuration with every default filled in and every check passed
/// except the enumeration budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub figure_id: FigureId,
    pub channel: Option<ChannelSpec>,
    pub snr_db: Vec<f64>,
    pub ebn0_db: Vec<f64>,
    pub antennas: Vec<(usize, usize)>,
    pub strategies: Vec<StrategyName>,
    pub eta: Vec<f64>,
    pub range_wavelengths: f64,
    pub search: Option<SearchMode>,
    pub n_samples: usize,
    pub seed: u64,
    pub seed_defaulted: bool,
    pub output_dir: Option<PathBuf>,
    pub budget_bits: u32,
    pub breakeven: BreakevenParams,
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|k| start + step * k as f64).collect()
}

fn square(ns: &[usize]) -> Vec<(usize, usize)> {
    ns.iter().map(|&n| (n, n)).collect()
}

/// Half-wavelength planar LOS arrays at the given angles in degrees.
pub fn planar_channel(elevation_tx_deg: f64, elevation_rx_deg: f64, azimuth_deg: f64) -> ChannelSpec {
    ChannelSpec::LosPlanar {
        nt: 1,
        nr: 1,
        geometry: GeometrySpec {
            range_m: None,
            wavelength_m: 1.0,
            spacing_tx_m: 0.5,
            spacing_rx_m: 0.5,
            elevation_tx_deg,
            elevation_rx_deg,
            azimuth_deg,
        },
    }
}

fn rayleigh() -> ChannelSpec {
    ChannelSpec::IidRayleigh { nt: 1, nr: 1, seed: None }
}

struct Defaults {
    channel: Option<ChannelSpec>,
    snr_db: Vec<f64>,
    ebn0_db: Vec<f64>,
    antennas: Vec<(usize, usize)>,
    strategies: Vec<StrategyName>,
    eta: Vec<f64>,
    n_samples: usize,
}

fn defaults(figure: FigureId) -> Defaults {
    use StrategyName::*;
    let base = Defaults {
        channel: None,
        snr_db: Vec::new(),
        ebn0_db: Vec::new(),
        antennas: Vec::new(),
        strategies: Vec::new(),
        eta: Vec::new(),
        n_samples: 0,
    };
    match figure {
        FigureId::Fig1 => Defaults {
            channel: Some(rayleigh()),
            snr_db: grid(-20.0, 20.0, 1.0),
            ebn0_db: grid(-2.0, 8.0, 0.25),
            antennas: vec![(1, 1)],
            n_samples: 2000,
            ..base
        },
        FigureId::Fig2ExpansionOverlay => Defaults {
            channel: Some(rayleigh()),
            snr_db: grid(-20.0, 0.0, 1.0),
            antennas: vec![(1, 1)],
            strategies: vec![Equiprobable],
            n_samples: 1000,
            ..base
        },
        FigureId::Fig4PlanarEbn0 => Defaults {
            channel: Some(planar_channel(0.0, 30.0, 45.0)),
            snr_db: grid(-20.0, 10.0, 1.0),
            ebn0_db: grid(-14.0, 6.0, 0.5),
            antennas: square(&[1, 2, 4]),
            ..base
        },
        FigureId::Fig5Ebn0minVsNLos => Defaults {
            channel: Some(planar_channel(0.0, 30.0, 45.0)),
            antennas: square(&[1, 2, 3, 4, 5, 6, 7, 8]),
            ..base
        },
        FigureId::Fig6PlanarSnrSweep => Defaults {
            channel: Some(planar_channel(45.0, 30.0, 45.0)),
            snr_db: grid(-20.0, 20.0, 2.5),
            antennas: square(&[2, 4]),
            strategies: vec![Capacity, Beamforming, Equiprobable],
            ..base
        },
        FigureId::Fig7Eta1BfVsEq => Defaults {
            snr_db: grid(-15.0, 15.0, 1.0),
            antennas: square(&[4, 6]),
            strategies: vec![Beamforming, Equiprobable],
            eta: vec![1.0],
            ..base
        },
        FigureId::Fig8EtaSweep => Defaults {
            snr_db: grid(-10.0, 20.0, 5.0),
            antennas: square(&[4]),
            strategies: vec![Capacity, Equiprobable],
            eta: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5],
            ..base
        },
        FigureId::Fig9RayleighEbn0min => Defaults {
            channel: Some(rayleigh()),
            antennas: square(&[1, 2, 4, 8, 16, 32, 64]),
            n_samples: 200,
            ..base
        },
        FigureId::Fig10RayleighSnrSweep => Defaults {
            channel: Some(rayleigh()),
            snr_db: grid(-10.0, 25.0, 5.0),
            antennas: square(&[2, 4]),
            strategies: vec![Capacity, Equiprobable],
            n_samples: 100,
            ..base
        },
        FigureId::Fig11BoundsSquare => Defaults {
            channel: Some(rayleigh()),
            snr_db: grid(-10.0, 25.0, 5.0),
            antennas: square(&[2, 4]),
            n_samples: 500,
            ..base
        },
        FigureId::Fig12BoundsSkewed => Defaults {
            channel: Some(rayleigh()),
            snr_db: grid(-10.0, 25.0, 5.0),
            antennas: vec![(4, 1), (8, 2)],
            n_samples: 500,
            ..base
        },
        FigureId::Table1 => {
            let sizes = [1usize, 2, 4, 8, 16, 32];
            Defaults {
                antennas: sizes.iter().flat_map(|&nr| sizes.iter().map(move |&nt| (nt, nr))).collect(),
                ..base
            }
        }
        FigureId::Breakeven => base,
    }
}

fn check_grid(name: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("{name} contains a non-finite value")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
    }

    pub fn plan(&self) -> Result<Plan, CliError> {
        let d = defaults(self.figure_id);
        let figure = self.figure_id;
        let fixed_siso = matches!(figure, FigureId::Fig1);
        if fixed_siso && (self.channel.is_some() || self.antennas.is_some()) {
            return Err(CliError::Config("fig1 is defined for the SISO Rayleigh channel only".into()));
        }
        let eta_figure = matches!(figure, FigureId::Fig7Eta1BfVsEq | FigureId::Fig8EtaSweep);
        if eta_figure && self.channel.is_some() {
            return Err(CliError::Config(
                "the η figures build their own broadside geometry; use eta and range_wavelengths".into(),
            ));
        }
        let rayleigh_only = matches!(
            figure,
            FigureId::Fig9RayleighEbn0min
                | FigureId::Fig10RayleighSnrSweep
                | FigureId::Fig11BoundsSquare
                | FigureId::Fig12BoundsSkewed
        );
        if rayleigh_only && !matches!(self.channel, None | Some(ChannelSpec::IidRayleigh { .. })) {
            return Err(CliError::Config(format!("{} requires an iid_rayleigh channel", figure.name())));
        }
        let antennas: Vec<(usize, usize)> = match &self.antennas {
            Some(a) => a.iter().map(|&[nt, nr]| (nt, nr)).collect(),
            None => match &self.channel {
                // A channel given without an antenna list keeps its own size.
                Some(c) if !matches!(figure, FigureId::Table1 | FigureId::Breakeven) => vec![(c.nt(), c.nr())],
                _ => d.antennas,
            },
        };
        if antennas.iter().any(|&(nt, nr)| nt == 0 || nr == 0) {
            return Err(CliError::Config("antenna counts must be at least 1".into()));
        }
        if antennas.iter().any(|&(nt, nr)| nt > 64 || nr > 64) {
            return Err(CliError::Config("at most 64 antennas per side".into()));
        }
        let snr_db = self.snr_db.clone().unwrap_or(d.snr_db);
        let ebn0_db = self.ebn0_db.clone().unwrap_or(d.ebn0_db);
        let eta = self.eta.clone().unwrap_or(d.eta);
        check_grid("snr_db", &snr_db)?;
        check_grid("ebn0_db", &ebn0_db)?;
        check_grid("eta", &eta)?;
        if eta.iter().any(|&e| e <= 0.0) {
            return Err(CliError::Config("eta values must be positive".into()));
        }
        let strategies = self.strategies.clone().unwrap_or(d.strategies);
        if figure == FigureId::Fig2ExpansionOverlay && strategies.contains(&StrategyName::Capacity) {
            return Err(CliError::Config(
                "fig2_expansion_overlay supports the equiprobable and beamforming strategies".into(),
            ));
        }
        let channel = self.channel.clone().or(d.channel);
        let random = channel.as_ref().is_some_and(ChannelSpec::is_random);
        let n_samples = self.n_samples.unwrap_or(d.n_samples);
        let ergodic = random && !matches!(figure, FigureId::Table1 | FigureId::Breakeven);
        if ergodic && n_samples < 2 {
            return Err(CliError::Config(format!("n_samples must be at least 2 for ergodic runs, got {n_samples}")));
        }
        let range_wavelengths = self.range_wavelengths.unwrap_or(1000.0);
        if !(range_wavelengths > 0.0 && range_wavelengths.is_finite()) {
            return Err(CliError::Config("range_wavelengths must be positive".into()));
        }
        let own_seed = match &self.channel {
            Some(ChannelSpec::IidRayleigh { seed, .. }) => *seed,
            _ => None,
        };
        let seed = self.seed.or(own_seed);
        let breakeven = self.breakeven.unwrap_or_default();
        if figure == FigureId::Breakeven {
            onebit_mimo::power_model::breakeven_bandwidth_with_kappa(
                onebit_mimo::power_model::dbm_to_watts(breakeven.pt_dbm),
                breakeven.eta,
                breakeven.fom_pj * 1e-12,
                breakeven.bits,
                breakeven.n_adc,
                breakeven.kappa,
            )
            .map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(Plan {
            figure_id: figure,
            channel,
            snr_db,
            ebn0_db,
            antennas,
            strategies,
            eta,
            range_wavelengths,
            search: self.search,
            n_samples,
            seed: seed.unwrap_or(0),
            seed_defaulted: seed.is_none(),
            output_dir: self.output_dir.clone(),
            budget_bits: self.budget_bits.unwrap_or(EnumerationBudget::default().max_bits),
            breakeven,
        })
    }
}

/// Packed bits each antenna pair needs, and the number of
/// received-quartet × transmit-quartet terms per exact MI evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetLine {
    pub nt: usize,
    pub nr: usize,
    pub required_bits: u32,
    pub terms_per_evaluation: Option<u128>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetEstimate {
    pub budget_bits: u32,
    pub lines: Vec<BudgetLine>,
    pub max_terms_per_evaluation: u128,
    /// Rough total work, in transition terms.
    pub total_terms: f64,
    pub runtime_class: &'static str,
    pub violation: Option<String>,
}

impl Plan {
    pub fn search_for(&self, nt: usize) -> SearchMode {
        self.search.unwrap_or(SearchMode::default_for(nt))
    }

    pub fn budget(&self) -> EnumerationBudget {
        EnumerationBudget::new(self.budget_bits)
    }

    /// Which exact evaluations the figure performs for one antenna pair:
    /// (full-distribution MI, single-quartet MI, exhaustive quartet search).
    fn needs(&self, nt: usize) -> (bool, bool, bool) {
        use StrategyName::*;
        let has = |s| self.strategies.contains(&s);
        let exhaustive = self.search_for(nt) == SearchMode::Exhaustive;
        match self.figure_id {
            FigureId::Fig1 | FigureId::Fig11BoundsSquare | FigureId::Fig12BoundsSkewed | FigureId::Fig4PlanarEbn0 => {
                (true, false, false)
            }
            FigureId::Fig2ExpansionOverlay
            | FigureId::Fig6PlanarSnrSweep
            | FigureId::Fig7Eta1BfVsEq
            | FigureId::Fig8EtaSweep
            | FigureId::Fig10RayleighSnrSweep => {
                let full = has(Equiprobable) || has(Capacity);
                let bf = has(Beamforming);
                (full, bf, bf && exhaustive)
            }
            FigureId::Fig5Ebn0minVsNLos | FigureId::Fig9RayleighEbn0min => (false, false, exhaustive),
            FigureId::Table1 | FigureId::Breakeven => (false, false, false),
        }
    }

    pub fn estimate(&self) -> BudgetEstimate {
        let mut lines = Vec::new();
        let mut violation = None;
        let mut max_terms = 0u128;
        let mut total = 0.0;
        let evaluations = (self.snr_db.len().max(1) * self.eta.len().max(1)) as f64
            * if self.channel.as_ref().is_some_and(ChannelSpec::is_random) {
                self.n_samples.max(1) as f64
            } else {
                1.0
            };
        for &(nt, nr) in &self.antennas {
            let (full, single, exhaustive) = self.needs(nt);
            let mut bits = 0u32;
            if full {
                bits = bits.max(2 * (nt + nr) as u32);
            }
            if single {
                bits = bits.max(2 * nr as u32);
            }
            if exhaustive {
                bits = bits.max(2 * (nt - 1) as u32);
            }
            let terms = full.then(|| 4u128.pow((nt - 1) as u32) * 4u128.pow((nr - 1) as u32));
            if let Some(t) = terms {
                max_terms = max_terms.max(t);
                total += t as f64 * evaluations;
            }
            if bits > self.budget_bits && violation.is_none() {
                violation = Some(format!(
                    "{nt}×{nr} needs {bits} packed bits of exact enumeration, above the {}-bit budget",
                    self.budget_bits
                ));
            }
            lines.push(BudgetLine {
                nt,
                nr,
                required_bits: bits,
                terms_per_evaluation: terms,
            });
        }
        let runtime_class = if total < 1e9 {
            "seconds"
        } else if total < 1e11 {
            "minutes"
        } else {
            "hours"
        };
        BudgetEstimate {
            budget_bits: self.budget_bits,
            lines,
            max_terms_per_evaluation: max_terms,
            total_terms: total,
            runtime_class,
            violation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_ids_round_trip() {
        let names = [
            "fig1",
            "fig2_expansion_overlay",
            "fig4_planar_ebn0",
            "fig5_ebn0min_vs_n_los",
            "fig6_planar_snr_sweep",
            "fig7_eta1_bf_vs_eq",
            "fig8_eta_sweep",
            "fig9_rayleigh_ebn0min",
            "fig10_rayleigh_snr_sweep",
            "fig11_bounds_square",
            "fig12_bounds_skewed",
            "table1",
            "breakeven",
        ];
        for name in names {
            let id: FigureId = serde_json::from_value(serde_json::Value::String(name.into())).unwrap();
            assert_eq!(id.name(), name);
        }
    }

    #[test]
    fn four_by_four_mi_is_accepted() {
        let cfg = ExperimentConfig::parse(
            r#"{"figure_id": "fig6_planar_snr_sweep", "antennas": [[4, 4]], "strategies": ["equiprobable"]}"#,
        )
        .unwrap();
        let est = cfg.plan().unwrap().estimate();
        assert_eq!(est.max_terms_per_evaluation, 4096);
        assert!(est.violation.is_none());
    }

    #[test]
    fn twelve_by_twelve_mi_is_rejected() {
        let cfg = ExperimentConfig::parse(
            r#"{"figure_id": "fig10_rayleigh_snr_sweep", "antennas": [[12, 12]], "strategies": ["equiprobable"]}"#,
        )
        .unwrap();
        let est = cfg.plan().unwrap().estimate();
        assert!(est.violation.unwrap().contains("48"));
    }

    #[test]
    fn missing_seed_defaults_to_zero() {
        let plan = ExperimentConfig::parse(r#"{"figure_id": "table1"}"#).unwrap().plan().unwrap();
        assert_eq!(plan.seed, 0);
        assert!(plan.seed_defaulted);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"figure_id": "fig3"}"#,
            r#"{"figure_id": "fig6_planar_snr_sweep", "snr_db": [0, 0]}"#,
            r#"{"figure_id": "fig10_rayleigh_snr_sweep", "n_samples": 1}"#,
            r#"{"figure_id": "fig6_planar_snr_sweep", "colour": "red"}"#,
            r#"{"figure_id": "fig2_expansion_overlay", "strategies": ["capacity"]}"#,
            r#"{"figure_id": "breakeven", "breakeven": {"pt_dbm": 23, "eta": 0.4, "fom_pj": 10, "bits": 1}}"#,
        ] {
            let r = ExperimentConfig::parse(text).and_then(|c| c.plan());
            assert!(matches!(r, Err(CliError::Config(_))), "{text}");
        }
    }
}
