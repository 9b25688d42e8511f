//! One table per figure id. Everything is computed in memory; the caller
//! writes the result only once the whole table exists.

use std::f64::consts::LOG2_E;

use onebit_mimo::beamforming::{beamforming_ebn0_bounds, best_mi_quartet, best_power_quartet, SpectralMoments};
use onebit_mimo::capacity::{
    blahut_arimoto, ergodic_mi_grid, mutual_information, BlahutArimotoOptions, ErgodicEstimate,
    QuartetDistribution, Strategy,
};
use onebit_mimo::channel::{los_spherical, ChannelMatrix, ChannelSpec, LosGeometry};
use onebit_mimo::lowsnr::{
    ebn0_min, equiprobable_ebn0_min, fullres_ebn0_min, low_snr_curve, ChannelSource, LowSnrMetrics, LowSnrTerms,
    Signaling,
};
use onebit_mimo::numerics::Decibel;
use onebit_mimo::power_model::{breakeven_bandwidth_with_kappa, dbm_to_watts};
use onebit_mimo::quantized_dmc::EnumerationBudget;
use onebit_mimo::rayleigh_bounds::{entropy_lower_bound, ergodic_bounds, ergodic_mi_control_variate};

use crate::config::{FigureId, Plan, StrategyName};
use crate::output::{num, opt, Table};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn lin(db: f64) -> f64 {
    Decibel(db).to_linear()
}

fn db(v: f64) -> f64 {
    Decibel::from_linear(v).value()
}

/// `Eb/N0 = SNR / C`; undefined at zero rate.
fn ebn0_db(snr_db: f64, bits: f64) -> Option<f64> {
    (bits > 0.0).then(|| snr_db - db(bits))
}

/// Second-order expansion in SNR implied by `Eb/N0_min` and `S0`:
/// `SNR/E − SNR²/(E² S0 log2 e)`.
fn snr_expansion(m: &LowSnrMetrics, snr: f64) -> f64 {
    let e = m.ebn0_min_linear;
    snr / e - snr * snr / (e * e * m.s0 * LOG2_E)
}

pub struct Computed {
    pub table: Table,
    pub warnings: Vec<String>,
}

struct Run<'a> {
    plan: &'a Plan,
    budget: EnumerationBudget,
    warnings: Vec<String>,
}

impl<'a> Run<'a> {
    fn snrs(&self) -> Vec<f64> {
        self.plan.snr_db.iter().map(|&d| lin(d)).collect()
    }

    fn spec(&self, nt: usize, nr: usize) -> Result<ChannelSpec> {
        self.plan
            .channel
            .as_ref()
            .map(|c| c.with_antennas(nt, nr))
            .ok_or_else(|| CliError::Config(format!("{} needs a channel", self.plan.figure_id.name())))
    }

    /// First draw of a random model, or the model itself when deterministic.
    fn realize(&self, spec: &ChannelSpec) -> Result<ChannelMatrix> {
        Ok(spec.realize(Some(self.plan.seed), 0)?)
    }

    fn signaling(&self, s: StrategyName, nt: usize) -> Result<Signaling> {
        match s {
            StrategyName::Equiprobable => Ok(Signaling::Equiprobable),
            StrategyName::Beamforming => Ok(Signaling::Beamforming(self.plan.search_for(nt))),
            StrategyName::Capacity => Err(CliError::Config("capacity has no closed-form low-SNR expansion".into())),
        }
    }

    fn strategy(&self, s: StrategyName, nt: usize) -> Strategy {
        match s {
            StrategyName::Equiprobable => Strategy::Equiprobable,
            StrategyName::Beamforming => Strategy::Beamforming(self.plan.search_for(nt)),
            StrategyName::Capacity => Strategy::Capacity(BlahutArimotoOptions::default()),
        }
    }

    fn capacity(&mut self, h: &ChannelMatrix, snr_db: f64) -> Result<f64> {
        let cap = blahut_arimoto(h, lin(snr_db), BlahutArimotoOptions::default(), &self.budget)?;
        if !cap.certified {
            self.warnings.push(format!(
                "capacity at {}×{} and {snr_db} dB not certified: bound gap {:e} bits after {} iterations",
                h.nt(),
                h.nr(),
                cap.upper_bound_bits - cap.capacity_bits,
                cap.iterations
            ));
        }
        Ok(cap.capacity_bits)
    }

    /// Rate on one channel, with the selected quartet's sign pattern for
    /// beamforming.
    fn fixed_mi(&mut self, h: &ChannelMatrix, snr_db: f64, s: StrategyName) -> Result<(f64, Option<String>)> {
        let snr = lin(snr_db);
        Ok(match s {
            StrategyName::Equiprobable => (
                mutual_information(h, snr, &QuartetDistribution::equiprobable(h.nt())?, &self.budget)?.mi_bits,
                None,
            ),
            StrategyName::Beamforming => {
                let best = best_mi_quartet(h, snr, self.plan.search_for(h.nt()), &self.budget)?;
                (best.objective, Some(best.quartet.representative().sign_pattern()))
            }
            StrategyName::Capacity => (self.capacity(h, snr_db)?, None),
        })
    }

    /// Rate of `s` on the SNR grid: ergodic mean and standard error for
    /// random models, exact values and the beamforming quartet otherwise.
    fn rates(&mut self, spec: &ChannelSpec, s: StrategyName) -> Result<Vec<(f64, Option<f64>, Option<String>)>> {
        let nt = spec.nt();
        if spec.is_random() {
            let est = ergodic_mi_grid(
                spec,
                &self.snrs(),
                &self.strategy(s, nt),
                self.plan.n_samples,
                self.plan.seed,
                &self.budget,
            )?;
            Ok(est.iter().map(|e| (e.mean, Some(e.stderr), None)).collect())
        } else {
            let h = self.realize(spec)?;
            let grid = self.plan.snr_db.clone();
            grid.iter()
                .map(|&d| {
                    let (bits, quartet) = self.fixed_mi(&h, d, s)?;
                    Ok((bits, None, quartet))
                })
                .collect()
        }
    }

    fn low_snr_metrics(&self, spec: &ChannelSpec, signaling: &Signaling) -> Result<LowSnrMetrics> {
        let h;
        let source = if spec.is_random() {
            ChannelSource::Ensemble {
                model: spec,
                n: self.plan.n_samples,
                seed: self.plan.seed,
            }
        } else {
            h = self.realize(spec)?;
            ChannelSource::Fixed(&h)
        };
        Ok(ebn0_min(source, signaling, &self.budget)?)
    }

    fn fig1(&mut self) -> Result<Table> {
        let mut t = Table::new(&["curve", "snr_db", "ebn0_db", "bits", "stderr"]);
        let spec = ChannelSpec::IidRayleigh { nt: 1, nr: 1, seed: None };
        let (n, seed) = (self.plan.n_samples, self.plan.seed);
        let snrs = self.snrs();
        let onebit = ergodic_mi_grid(&spec, &snrs, &Strategy::Equiprobable, n, seed, &self.budget)?;
        let gains: Vec<f64> = (0..n as u64)
            .map(|i| Ok(spec.realize(Some(seed), i)?.entry(0, 0).norm_sqr()))
            .collect::<Result<_>>()?;
        let fullres: Vec<ErgodicEstimate> = snrs
            .iter()
            .map(|&snr| {
                let samples: Vec<f64> = gains.iter().map(|g| (1.0 + snr * g).log2()).collect();
                ErgodicEstimate::from_samples(&samples, seed)
            })
            .collect::<onebit_mimo::Result<_>>()?;
        for (curve, est) in [("onebit_exact", &onebit), ("fullres_exact", &fullres)] {
            for (&d, e) in self.plan.snr_db.iter().zip(est) {
                t.push(vec![curve.into(), num(d), opt(ebn0_db(d, e.mean)), num(e.mean), num(e.stderr)]);
            }
        }
        let m = LowSnrTerms::iid_rayleigh_equiprobable(1, 1).metrics()?;
        // Full-resolution SISO Rayleigh: S0 = 2/E|h|⁴ = 1.
        let full = LowSnrMetrics {
            s0: 1.0,
            ..fullres_ebn0_min(&m)
        };
        for (curve, metrics) in [("onebit_expansion", &m), ("fullres_expansion", &full)] {
            self.push_curve(&mut t, curve, metrics, |curve, snr, ebn0, bits| {
                vec![curve.into(), snr, ebn0, bits, String::new()]
            });
        }
        Ok(t)
    }

    /// Expansion rows on the `ebn0_db` grid; `bits` and `snr_db` are empty
    /// below `Eb/N0_min`.
    fn push_curve(
        &self,
        t: &mut Table,
        curve: &str,
        m: &LowSnrMetrics,
        row: impl Fn(&str, String, String, String) -> Vec<String>,
    ) {
        for p in low_snr_curve(m, &self.plan.ebn0_db) {
            let (snr, bits) = if p.below_min || p.bits <= 0.0 {
                (String::new(), String::new())
            } else {
                (num(p.ebn0_db + db(p.bits)), num(p.bits))
            };
            t.push(row(curve, snr, num(p.ebn0_db), bits));
        }
    }

    fn fig2(&mut self) -> Result<Table> {
        let mut t = Table::new(&[
            "nt", "nr", "strategy", "snr_db", "ebn0_db", "exact_bits", "stderr", "expansion_bits",
        ]);
        for &(nt, nr) in &self.plan.antennas.clone() {
            let spec = self.spec(nt, nr)?;
            for &s in &self.plan.strategies.clone() {
                let m = self.low_snr_metrics(&spec, &self.signaling(s, nt)?)?;
                let rates = self.rates(&spec, s)?;
                for (&d, (bits, se, _)) in self.plan.snr_db.iter().zip(rates) {
                    t.push(vec![
                        nt.to_string(),
                        nr.to_string(),
                        s.as_str().into(),
                        num(d),
                        opt(ebn0_db(d, bits)),
                        num(bits),
                        opt(se),
                        num(snr_expansion(&m, lin(d))),
                    ]);
                }
            }
        }
        Ok(t)
    }

    fn fig4(&mut self) -> Result<Table> {
        let mut t = Table::new(&["nt", "nr", "curve", "snr_db", "ebn0_db", "bits"]);
        for &(nt, nr) in &self.plan.antennas.clone() {
            let spec = self.spec(nt, nr)?;
            let h = self.realize(&spec)?;
            for &d in &self.plan.snr_db.clone() {
                let bits = self.capacity(&h, d)?;
                t.push(vec![nt.to_string(), nr.to_string(), "capacity".into(), num(d), opt(ebn0_db(d, bits)), num(bits)]);
            }
            let signaling = Signaling::Beamforming(self.plan.search_for(nt));
            let m = LowSnrTerms::for_channel(&h, &signaling, &self.budget)?.metrics()?;
            self.push_curve(&mut t, "beamforming_expansion", &m, |curve, snr, ebn0, bits| {
                vec![nt.to_string(), nr.to_string(), curve.into(), snr, ebn0, bits]
            });
        }
        Ok(t)
    }

    /// Minimum energy per bit of beamforming, its spectral bracket, and the
    /// equiprobable and full-resolution references.
    fn ebn0_table(&mut self) -> Result<Table> {
        let mut t = Table::new(&[
            "nt",
            "nr",
            "bf_db",
            "bf_bound_lower_db",
            "bf_bound_upper_db",
            "eq_db",
            "fullres_bf_db",
            "quartet",
        ]);
        let (n, seed) = (self.plan.n_samples, self.plan.seed);
        for &(nt, nr) in &self.plan.antennas.clone() {
            let spec = self.spec(nt, nr)?;
            let signaling = Signaling::Beamforming(self.plan.search_for(nt));
            let (bf, moments, eq_db, quartet) = if spec.is_random() {
                let bf = LowSnrTerms::monte_carlo(&spec, &signaling, n, seed, &self.budget)?.metrics()?;
                let moments = SpectralMoments::monte_carlo(&spec, n, seed)?;
                (bf, moments, db(equiprobable_ebn0_min(nr)), String::new())
            } else {
                let h = self.realize(&spec)?;
                let bf = LowSnrTerms::for_channel(&h, &signaling, &self.budget)?.metrics()?;
                let eq = LowSnrTerms::for_channel(&h, &Signaling::Equiprobable, &self.budget)?.metrics()?;
                let best = best_power_quartet(&h, self.plan.search_for(nt), &self.budget)?;
                let quartet = best.quartet.representative().sign_pattern();
                (bf, SpectralMoments::for_channel(&h)?, eq.ebn0_min_db.value(), quartet)
            };
            let bounds = beamforming_ebn0_bounds(&moments)?.to_db();
            t.push(vec![
                nt.to_string(),
                nr.to_string(),
                num(bf.ebn0_min_db.value()),
                num(bounds.lower),
                num(bounds.upper),
                num(eq_db),
                num(fullres_ebn0_min(&bf).ebn0_min_db.value()),
                quartet,
            ]);
        }
        Ok(t)
    }

    fn fig6(&mut self) -> Result<Table> {
        let mut t = Table::new(&["nt", "nr", "strategy", "snr_db", "bits", "quartet"]);
        for &(nt, nr) in &self.plan.antennas.clone() {
            let spec = self.spec(nt, nr)?;
            for &s in &self.plan.strategies.clone() {
                for (&d, (bits, _, quartet)) in self.plan.snr_db.clone().iter().zip(self.rates(&spec, s)?) {
                    let quartet = quartet.unwrap_or_default();
                    t.push(vec![nt.to_string(), nr.to_string(), s.as_str().into(), num(d), num(bits), quartet]);
                }
            }
        }
        Ok(t)
    }

    /// Broadside spherical-wavefront links at fixed range, with the array
    /// spacing set by `η`.
    fn eta_sweep(&mut self) -> Result<Table> {
        let mut t = Table::new(&["nt", "nr", "eta", "strategy", "snr_db", "ebn0_db", "bits", "quartet"]);
        for &(nt, nr) in &self.plan.antennas.clone() {
            for &eta in &self.plan.eta.clone() {
                let h = los_spherical(&LosGeometry::broadside_with_eta(nt, nr, self.plan.range_wavelengths, eta))?;
                for &s in &self.plan.strategies.clone() {
                    for &d in &self.plan.snr_db.clone() {
                        let (bits, quartet) = self.fixed_mi(&h, d, s)?;
                        t.push(vec![
                            nt.to_string(),
                            nr.to_string(),
                            num(eta),
                            s.as_str().into(),
                            num(d),
                            opt(ebn0_db(d, bits)),
                            num(bits),
                            quartet.unwrap_or_default(),
                        ]);
                    }
                }
            }
        }
        Ok(t)
    }

    fn fig10(&mut self) -> Result<Table> {
        let mut t = Table::new(&["nt", "nr", "strategy", "snr_db", "mean_bits", "stderr"]);
        for &(nt, nr) in &self.plan.antennas.clone() {
            let spec = self.spec(nt, nr)?;
            for &s in &self.plan.strategies.clone() {
                for (&d, (bits, se, _)) in self.plan.snr_db.clone().iter().zip(self.rates(&spec, s)?) {
                    t.push(vec![nt.to_string(), nr.to_string(), s.as_str().into(), num(d), num(bits), opt(se)]);
                }
            }
        }
        Ok(t)
    }

    fn bounds(&mut self) -> Result<Table> {
        let mut t = Table::new(&[
            "nt",
            "nr",
            "snr_db",
            "lower_bits",
            "upper_bits",
            "jla_bits",
            "mc_bits",
            "mc_stderr",
        ]);
        let snrs = self.snrs();
        for &(nt, nr) in &self.plan.antennas {
            let mc = ergodic_mi_control_variate(nt, nr, &snrs, self.plan.n_samples, self.plan.seed, &self.budget)?;
            for ((&d, &snr), e) in self.plan.snr_db.iter().zip(&snrs).zip(&mc) {
                let b = ergodic_bounds(snr, nt, nr)?;
                t.push(vec![
                    nt.to_string(),
                    nr.to_string(),
                    num(d),
                    num(b.lower_bits),
                    num(b.upper_bits),
                    num(b.jla_bits),
                    num(e.mean),
                    num(e.stderr),
                ]);
            }
        }
        Ok(t)
    }

    fn table1(&self) -> Result<Table> {
        let mut t = Table::new(&["nr", "nt", "lower_bound_bits"]);
        for &(nt, nr) in &self.plan.antennas {
            t.push(vec![nr.to_string(), nt.to_string(), num(entropy_lower_bound(nt, nr)?)]);
        }
        Ok(t)
    }

    fn breakeven(&self) -> Result<Table> {
        let p = self.plan.breakeven;
        let mut t = Table::new(&["pt_dbm", "eta", "fom_pj", "bits", "n_adc", "kappa", "threshold_hz"]);
        let b = breakeven_bandwidth_with_kappa(dbm_to_watts(p.pt_dbm), p.eta, p.fom_pj * 1e-12, p.bits, p.n_adc, p.kappa)?;
        t.push(vec![
            num(p.pt_dbm),
            num(p.eta),
            num(p.fom_pj),
            p.bits.to_string(),
            p.n_adc.to_string(),
            num(p.kappa),
            num(b),
        ]);
        Ok(t)
    }
}

/// Computes the table for `plan`. The budget check must already have passed.
pub fn compute(plan: &Plan) -> Result<Computed> {
    let mut run = Run {
        plan,
        budget: plan.budget(),
        warnings: Vec::new(),
    };
    let table = match plan.figure_id {
        FigureId::Fig1 => run.fig1(),
        FigureId::Fig2ExpansionOverlay => run.fig2(),
        FigureId::Fig4PlanarEbn0 => run.fig4(),
        FigureId::Fig5Ebn0minVsNLos | FigureId::Fig9RayleighEbn0min => run.ebn0_table(),
        FigureId::Fig6PlanarSnrSweep => run.fig6(),
        FigureId::Fig7Eta1BfVsEq | FigureId::Fig8EtaSweep => run.eta_sweep(),
        FigureId::Fig10RayleighSnrSweep => run.fig10(),
        FigureId::Fig11BoundsSquare | FigureId::Fig12BoundsSkewed => run.bounds(),
        FigureId::Table1 => run.table1(),
        FigureId::Breakeven => run.breakeven(),
    }?;
    Ok(Computed {
        table,
        warnings: run.warnings,
    })
}
