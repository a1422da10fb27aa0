//! Monte Carlo model of the photon-pair coincidence experiment.
//!
//! A singlet source is turned into `|φ(ξ)⟩` by a half-wave-plate rotation of
//! photon `b`, degraded by a noise model, and measured at the four analyzer
//! settings of one θ. Each setting yields four coincidence counts; the
//! correlation is estimated from the counts normalized by their total and
//! combined into `Ŝ` with a multinomial standard error.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::chsh::{
    analyzer_basis, AnalyzerAngle, CoincidenceProbabilities, SettingsQuartet, ThetaParam, XiParam,
};
use crate::error::{Error, Result};
use crate::linalg::{
    tensor, trace_expectation, ComplexMatrix2, ComplexMatrix4, DensityMatrix4, TwoQubitKet,
};
use crate::sampling::{derive_seed, multinomial, rng_from_seed};

/// Imperfections of the source and the analyzers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Weight of the pure state in a Werner mixture with `I/4`.
    pub visibility: f64,
    /// Systematic analyzer rotation on side `a` (radians).
    pub analyzer_offset_a: f64,
    /// Systematic analyzer rotation on side `b` (radians).
    pub analyzer_offset_b: f64,
    /// Fraction of coincidences spread uniformly over the four outcomes.
    pub accidental_fraction: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            visibility: 0.96,
            analyzer_offset_a: 0.0,
            analyzer_offset_b: 0.0,
            accidental_fraction: 0.005,
        }
    }
}

impl NoiseModel {
    pub fn new(
        visibility: f64,
        analyzer_offset_a: f64,
        analyzer_offset_b: f64,
        accidental_fraction: f64,
    ) -> Result<Self> {
        let model = Self {
            visibility,
            analyzer_offset_a,
            analyzer_offset_b,
            accidental_fraction,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn ideal() -> Self {
        Self {
            visibility: 1.0,
            analyzer_offset_a: 0.0,
            analyzer_offset_b: 0.0,
            accidental_fraction: 0.0,
        }
    }

    /// Werner noise only.
    pub fn with_visibility(visibility: f64) -> Result<Self> {
        Self::new(visibility, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::OutOfRange {
                name: "visibility",
                value: self.visibility,
                range: "[0, 1]",
            });
        }
        if !(0.0..1.0).contains(&self.accidental_fraction) {
            return Err(Error::OutOfRange {
                name: "accidental_fraction",
                value: self.accidental_fraction,
                range: "[0, 1)",
            });
        }
        for (name, v) in [
            ("analyzer_offset_a", self.analyzer_offset_a),
            ("analyzer_offset_b", self.analyzer_offset_b),
        ] {
            if !v.is_finite() {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    range: "finite radians",
                });
            }
        }
        Ok(())
    }
}

/// Coincidence counts at one pair of analyzer angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountsRecord {
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
    pub alpha: AnalyzerAngle,
    pub beta: AnalyzerAngle,
    pub pairs_total: u64,
}

impl CountsRecord {
    /// Counts normalized by their total.
    pub fn frequencies(&self) -> CoincidenceProbabilities {
        let n = self.pairs_total as f64;
        CoincidenceProbabilities {
            p_pp: self.n_pp as f64 / n,
            p_pm: self.n_pm as f64 / n,
            p_mp: self.n_mp as f64 / n,
            p_mm: self.n_mm as f64 / n,
        }
    }

    /// `Ê = (N++ + N−− − N+− − N−+) / N`
    pub fn correlation(&self) -> f64 {
        (self.n_pp as f64 + self.n_mm as f64 - self.n_pm as f64 - self.n_mp as f64)
            / self.pairs_total as f64
    }

    /// `(1 − Ê²) / N`
    pub fn correlation_variance(&self) -> f64 {
        let e = self.correlation();
        (1.0 - e * e) / self.pairs_total as f64
    }
}

/// Simulated CHSH estimate for one `(θ, ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SEstimate {
    pub s_hat: f64,
    pub std_err: f64,
    /// In the order `(2θ,θ), (0,θ), (2θ,3θ), (0,3θ)`.
    pub counts: [CountsRecord; 4],
}

/// Rotates photon `b` of the singlet by `χ = ξ − π/2`
/// (`|H⟩ → cos χ|H⟩ + sin χ|V⟩`, `|V⟩ → −sin χ|H⟩ + cos χ|V⟩`).
pub fn prepare_via_hwp(xi: XiParam) -> TwoQubitKet {
    let (s, c) = (xi.radians() - FRAC_PI_2).sin_cos();
    let singlet = [0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0];
    let rot = ComplexMatrix2::from_real([[c, -s], [s, c]]);
    let op = tensor(&ComplexMatrix2::identity(), &rot);
    let psi = TwoQubitKet::from_real(singlet).expect("singlet is normalized");
    TwoQubitKet::normalized(op.apply(&psi)).expect("rotation preserves norm")
}

/// `V |ψ⟩⟨ψ| + (1 − V) I/4`
pub fn noisy_state(psi: &TwoQubitKet, noise: &NoiseModel) -> DensityMatrix4 {
    let v = noise.visibility;
    let m =
        ComplexMatrix4::projector(psi).scale(v) + ComplexMatrix4::identity().scale((1.0 - v) / 4.0);
    DensityMatrix4::new(m).expect("convex mixture of density matrices")
}

fn projector(k: &[Complex64; 2]) -> ComplexMatrix2 {
    ComplexMatrix2::outer(k, k)
}

/// Outcome probabilities of `ρ` with analyzers at `α + offset_a`,
/// `β + offset_b`, mixed with the uniform accidental floor.
pub fn setting_probabilities(
    rho: &DensityMatrix4,
    alpha: AnalyzerAngle,
    beta: AnalyzerAngle,
    noise: &NoiseModel,
) -> Result<CoincidenceProbabilities> {
    let (sa, sa_perp) = analyzer_basis(alpha.shifted(noise.analyzer_offset_a)?);
    let (sb, sb_perp) = analyzer_basis(beta.shifted(noise.analyzer_offset_b)?);
    let (pa, ma) = (projector(&sa), projector(&sa_perp));
    let (pb, mb) = (projector(&sb), projector(&sb_perp));
    let f = noise.accidental_fraction;
    let p = |x: &ComplexMatrix2, y: &ComplexMatrix2| -> Result<f64> {
        let raw = trace_expectation(rho, &tensor(x, y))?.clamp(0.0, 1.0);
        Ok((1.0 - f) * raw + f / 4.0)
    };
    Ok(CoincidenceProbabilities {
        p_pp: p(&pa, &pb)?,
        p_pm: p(&pa, &mb)?,
        p_mp: p(&ma, &pb)?,
        p_mm: p(&ma, &mb)?,
    })
}

/// Multinomial coincidence counts for `pairs` detected pairs.
pub fn run_setting(
    rho: &DensityMatrix4,
    alpha: AnalyzerAngle,
    beta: AnalyzerAngle,
    pairs: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<CountsRecord> {
    if pairs == 0 {
        return Err(Error::TooFew("pairs", 1));
    }
    let probs = setting_probabilities(rho, alpha, beta, noise)?;
    let mut rng = rng_from_seed(seed);
    let [n_pp, n_pm, n_mp, n_mm] = multinomial(&mut rng, pairs, &probs.as_array());
    Ok(CountsRecord {
        n_pp,
        n_pm,
        n_mp,
        n_mm,
        alpha,
        beta,
        pairs_total: pairs,
    })
}

/// Runs the four settings of θ on the HWP-prepared `|φ(ξ)⟩` and combines
/// the estimated correlations into `Ŝ`. Setting `k` uses
/// `derive_seed(seed, k)`.
pub fn estimate_s(
    theta: ThetaParam,
    xi: XiParam,
    pairs_per_setting: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<SEstimate> {
    if pairs_per_setting < 2 {
        return Err(Error::TooFew("pairs_per_setting", 2));
    }
    noise.validate()?;
    let rho = noisy_state(&prepare_via_hwp(xi), noise);
    let terms = SettingsQuartet::from_theta(theta).terms();
    let mut counts = Vec::with_capacity(4);
    for (k, &(alpha, beta, _)) in terms.iter().enumerate() {
        counts.push(run_setting(
            &rho,
            alpha,
            beta,
            pairs_per_setting,
            noise,
            derive_seed(seed, k as u64),
        )?);
    }
    let counts: [CountsRecord; 4] = counts.try_into().expect("four settings");
    let s_hat = terms
        .iter()
        .zip(counts.iter())
        .map(|(&(_, _, sign), c)| sign * c.correlation())
        .sum();
    let std_err = counts
        .iter()
        .map(CountsRecord::correlation_variance)
        .sum::<f64>()
        .sqrt();
    Ok(SEstimate {
        s_hat,
        std_err,
        counts,
    })
}

/// `replications` independent runs; run `r` uses `derive_seed(seed, r)`.
/// Runs execute in parallel and are returned in replication order.
pub fn replicate_estimate(
    theta: ThetaParam,
    xi: XiParam,
    pairs_per_setting: u64,
    noise: &NoiseModel,
    seed: u64,
    replications: u64,
) -> Result<Vec<SEstimate>> {
    if replications == 0 {
        return Err(Error::TooFew("replications", 1));
    }
    (0..replications)
        .into_par_iter()
        .map(|r| estimate_s(theta, xi, pairs_per_setting, noise, derive_seed(seed, r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chsh::{s_parameter, state_phi, CIRELSON_BOUND};
    use crate::linalg::expectation;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn th(t: f64) -> ThetaParam {
        ThetaParam::new(t).unwrap()
    }
    fn xi(x: f64) -> XiParam {
        XiParam::new(x).unwrap()
    }
    fn ang(a: f64) -> AnalyzerAngle {
        AnalyzerAngle::new(a).unwrap()
    }

    fn overlap(a: &TwoQubitKet, b: &TwoQubitKet) -> f64 {
        a.inner(b).norm()
    }

    #[test]
    fn hwp_examples() {
        let singlet = TwoQubitKet::from_real([0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0]).unwrap();
        let prepared = prepare_via_hwp(xi(FRAC_PI_2));
        assert!(prepared
            .amplitudes()
            .iter()
            .zip(singlet.amplitudes())
            .all(|(a, b)| (a - b).norm() < 1e-12));

        // χ = −π/2 maps |H⟩_b → −|V⟩_b, |V⟩_b → |H⟩_b, so (HV − VH)/√2 → (HH + VV)/√2
        let phi_plus = TwoQubitKet::from_real([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap();
        assert!((overlap(&prepare_via_hwp(xi(0.0)), &phi_plus) - 1.0).abs() < 1e-12);
        assert!((overlap(&prepare_via_hwp(xi(0.0)), &state_phi(xi(0.0))) - 1.0).abs() < 1e-12);

        let quarter = TwoQubitKet::from_real([0.5, 0.5, -0.5, 0.5]).unwrap();
        assert!((overlap(&prepare_via_hwp(xi(FRAC_PI_4)), &quarter) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plus_sign_singlet_breaks_hwp_equivalence() {
        // With (|HV⟩ + |VH⟩)/√2 the family would not be reachable by rotating b.
        let k = FRAC_1_SQRT_2;
        let xi_v = 0.3f64;
        let plus_family = TwoQubitKet::from_real([
            xi_v.cos() * k,
            xi_v.sin() * k,
            xi_v.sin() * k,
            xi_v.cos() * k,
        ])
        .unwrap();
        assert!(overlap(&prepare_via_hwp(xi(xi_v)), &plus_family) < 1.0 - 1e-3);
    }

    #[test]
    fn noisy_state_examples() {
        let phi = state_phi(xi(0.0));
        let pure = noisy_state(&phi, &NoiseModel::with_visibility(1.0).unwrap());
        assert!(pure.matrix().max_abs_diff(&ComplexMatrix4::projector(&phi)) < 1e-15);
        let mixed = noisy_state(&phi, &NoiseModel::with_visibility(0.0).unwrap());
        assert!(
            mixed
                .matrix()
                .max_abs_diff(&ComplexMatrix4::identity().scale(0.25))
                < 1e-15
        );
        let rho = noisy_state(&phi, &NoiseModel::with_visibility(0.9).unwrap());
        let zz = tensor(&ComplexMatrix2::pauli_z(), &ComplexMatrix2::pauli_z());
        // 0.9·⟨φ⁺|ZZ|φ⁺⟩ + 0.1·Tr(ZZ)/4
        let oracle = 0.9 * expectation(&phi, &zz).unwrap() + 0.1 * zz.trace().re / 4.0;
        assert!((trace_expectation(&rho, &zz).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 0.9).abs() < 1e-12);
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::new(1.1, 0.0, 0.0, 0.0).is_err());
        assert!(NoiseModel::new(0.5, 0.0, 0.0, 1.0).is_err());
        assert!(NoiseModel::new(0.5, f64::NAN, 0.0, 0.0).is_err());
        assert!(NoiseModel::new(0.5, 0.1, -0.1, 0.2).is_ok());
        assert_eq!(NoiseModel::default().visibility, 0.96);
    }

    #[test]
    fn setting_probability_examples() {
        let ideal = NoiseModel::ideal();
        let phi = state_phi(xi(0.0));
        let p =
            setting_probabilities(&noisy_state(&phi, &ideal), ang(0.0), ang(0.0), &ideal).unwrap();
        let want = [0.5, 0.0, 0.0, 0.5];
        assert!(p
            .as_array()
            .iter()
            .zip(want)
            .all(|(a, b)| (a - b).abs() < 1e-12));

        let mixed = DensityMatrix4::maximally_mixed();
        for (a, b) in [(0.0, 0.0), (0.7, 2.1), (PI, 0.3)] {
            let p = setting_probabilities(&mixed, ang(a), ang(b), &NoiseModel::default()).unwrap();
            assert!(p.as_array().iter().all(|q| (q - 0.25).abs() < 1e-12));
        }

        let noise = NoiseModel::with_visibility(0.96).unwrap();
        let rho = noisy_state(&phi, &noise);
        let p = setting_probabilities(&rho, ang(0.0), ang(0.0), &noise).unwrap();
        let want = [0.49, 0.01, 0.01, 0.49];
        assert!(
            p.as_array()
                .iter()
                .zip(want)
                .all(|(a, b)| (a - b).abs() < 1e-12),
            "{p:?}"
        );
        // consistency with the correlation observable
        let zz = tensor(&ComplexMatrix2::pauli_z(), &ComplexMatrix2::pauli_z());
        assert!((p.correlation() - trace_expectation(&rho, &zz).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn accidental_floor_and_offsets() {
        let phi = state_phi(xi(0.0));
        let noise = NoiseModel::new(1.0, 0.0, 0.0, 0.2).unwrap();
        let p =
            setting_probabilities(&noisy_state(&phi, &noise), ang(0.0), ang(0.0), &noise).unwrap();
        let want = [0.45, 0.05, 0.05, 0.45];
        assert!(p
            .as_array()
            .iter()
            .zip(want)
            .all(|(a, b)| (a - b).abs() < 1e-12));
        assert!((p.total() - 1.0).abs() < 1e-12);

        // an offset of π/2 on b turns ⟨Z⊗Z⟩ on φ⁺ into ⟨Z⊗X⟩ = 0
        let noise = NoiseModel::new(1.0, 0.0, FRAC_PI_2, 0.0).unwrap();
        let p =
            setting_probabilities(&noisy_state(&phi, &noise), ang(0.0), ang(0.0), &noise).unwrap();
        assert!(p.correlation().abs() < 1e-12);
    }

    #[test]
    fn run_setting_examples() {
        let hh = TwoQubitKet::from_real([1.0, 0.0, 0.0, 0.0]).unwrap();
        let ideal = NoiseModel::ideal();
        let rho = noisy_state(&hh, &ideal);
        let rec = run_setting(&rho, ang(0.0), ang(0.0), 100, &ideal, 5).unwrap();
        assert_eq!((rec.n_pp, rec.n_pm, rec.n_mp, rec.n_mm), (100, 0, 0, 0));
        assert!(run_setting(&rho, ang(0.0), ang(0.0), 0, &ideal, 5).is_err());

        let mixed = DensityMatrix4::maximally_mixed();
        let a = run_setting(&mixed, ang(0.3), ang(1.0), 1_000_000, &ideal, 11).unwrap();
        let b = run_setting(&mixed, ang(0.3), ang(1.0), 1_000_000, &ideal, 11).unwrap();
        assert_eq!(a, b);
        // σ = sqrt(n p (1 − p)) = sqrt(10⁶ · 3/16) ≈ 433
        let sigma = (1e6f64 * 0.25 * 0.75).sqrt();
        for n in [a.n_pp, a.n_pm, a.n_mp, a.n_mm] {
            assert!((n as f64 - 250_000.0).abs() < 5.0 * sigma);
        }
        assert_eq!(a.n_pp + a.n_pm + a.n_mp + a.n_mm, a.pairs_total);
    }

    #[test]
    fn estimate_examples() {
        let ideal = NoiseModel::ideal();
        let est = estimate_s(th(FRAC_PI_4), xi(0.0), 100_000, &ideal, 3).unwrap();
        assert!((est.s_hat - CIRELSON_BOUND).abs() < 5.0 * est.std_err);
        for c in &est.counts {
            assert_eq!(c.n_pp + c.n_pm + c.n_mp + c.n_mm, c.pairs_total);
        }

        let flat = NoiseModel::with_visibility(0.0).unwrap();
        for (t, x) in [(0.4, 0.2), (FRAC_PI_4, 0.0), (2.0, 1.3)] {
            let est = estimate_s(th(t), xi(x), 100_000, &flat, 17).unwrap();
            assert!(est.s_hat.abs() < 5.0 * est.std_err);
        }

        let v = 0.8;
        let est = estimate_s(
            th(FRAC_PI_4),
            xi(0.0),
            1_000_000,
            &NoiseModel::with_visibility(v).unwrap(),
            23,
        )
        .unwrap();
        assert!((est.s_hat - v * CIRELSON_BOUND).abs() < 5.0 * est.std_err);

        assert!(estimate_s(th(0.1), xi(0.1), 1, &ideal, 0).is_err());
    }

    #[test]
    fn std_err_formula() {
        let est = estimate_s(th(0.7), xi(0.4), 5000, &NoiseModel::default(), 99).unwrap();
        let manual: f64 = est
            .counts
            .iter()
            .map(|c| {
                let e = c.correlation();
                (1.0 - e * e) / c.pairs_total as f64
            })
            .sum();
        assert_eq!(est.std_err, manual.sqrt());
        assert_eq!(
            est,
            estimate_s(th(0.7), xi(0.4), 5000, &NoiseModel::default(), 99).unwrap()
        );
    }

    #[test]
    fn replications_are_ordered_and_deterministic() {
        let noise = NoiseModel::default();
        let a = replicate_estimate(th(0.5), xi(0.2), 2000, &noise, 8, 16).unwrap();
        let b = replicate_estimate(th(0.5), xi(0.2), 2000, &noise, 8, 16).unwrap();
        assert_eq!(a, b);
        for (r, est) in a.iter().enumerate() {
            assert_eq!(
                *est,
                estimate_s(th(0.5), xi(0.2), 2000, &noise, derive_seed(8, r as u64)).unwrap()
            );
        }
        assert!(replicate_estimate(th(0.5), xi(0.2), 2000, &noise, 8, 0).is_err());
    }

    #[test]
    fn preparation_equivalence_random() {
        use rand::Rng;
        let mut rng = rng_from_seed(2024);
        for _ in 0..100 {
            let x = xi(rng.gen_range(0.0..PI));
            assert!((overlap(&prepare_via_hwp(x), &state_phi(x)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_estimate_tracks_ideal() {
        let ideal = NoiseModel::ideal();
        for (t, x) in [(0.2, 0.1), (1.1, 2.0), (2.9, 0.7)] {
            let est = estimate_s(th(t), xi(x), 200_000, &ideal, 1).unwrap();
            assert!((est.s_hat - s_parameter(th(t), xi(x))).abs() < 5.0 * est.std_err);
        }
    }
}
