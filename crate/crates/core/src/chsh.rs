//! CHSH parameter for the one-parameter analyzer family `(2θ, 0 | θ, 3θ)`
//! evaluated on the maximally entangled states
//! `cos ξ |φ⁺⟩ + sin ξ |ψ⁻⟩`, together with the classical bound, the
//! spectral (observable-specific) quantum bounds and Haar-random sampling.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{
    expectation, herm_eigenvalues, tensor, ComplexMatrix2, ComplexMatrix4, TwoQubitKet, ALGEBRA_TOL,
};

/// Tsirelson's ceiling, `2√2`.
pub const CIRELSON_BOUND: f64 = 2.0 * SQRT_2;

/// Slack allowed when snapping grid endpoints back into a closed range.
const RANGE_SLACK: f64 = 1e-12;

/// An analyzer angle, reduced into `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AnalyzerAngle(f64);

impl AnalyzerAngle {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::OutOfRange {
                name: "analyzer angle",
                value: alpha,
                range: "finite radians",
            });
        }
        let mut reduced = alpha.rem_euclid(TAU);
        if reduced >= TAU {
            reduced = 0.0;
        }
        Ok(Self(reduced))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// `self + delta`, re-reduced.
    pub fn shifted(self, delta: f64) -> Result<Self> {
        Self::new(self.0 + delta)
    }
}

/// The family parameter θ ∈ [0, π].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ThetaParam(f64);

impl ThetaParam {
    pub fn new(theta: f64) -> Result<Self> {
        let out_of_range = || Error::OutOfRange {
            name: "theta",
            value: theta,
            range: "[0, pi]",
        };
        if !theta.is_finite() {
            return Err(out_of_range());
        }
        if (-RANGE_SLACK..0.0).contains(&theta) {
            return Ok(Self(0.0));
        }
        if theta > PI && theta <= PI + RANGE_SLACK {
            return Ok(Self(PI));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(out_of_range());
        }
        Ok(Self(theta))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// The state parameter ξ, reduced into `[0, π)`.
///
/// `|φ(ξ + π)⟩ = −|φ(ξ)⟩`, so the reduction only changes a global phase.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct XiParam(f64);

impl XiParam {
    pub fn new(xi: f64) -> Result<Self> {
        if !xi.is_finite() {
            return Err(Error::OutOfRange {
                name: "xi",
                value: xi,
                range: "finite radians",
            });
        }
        let mut reduced = xi.rem_euclid(PI);
        if reduced >= PI {
            reduced = 0.0;
        }
        Ok(Self(reduced))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Dichotomic polarization observable `O(α) = cos α Z + sin α X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observable {
    pub alpha: AnalyzerAngle,
    pub matrix: ComplexMatrix2,
}

/// The four analyzer angles of one θ: `a1 = 2θ`, `a2 = 0`, `b1 = θ`, `b2 = 3θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingsQuartet {
    pub a1: AnalyzerAngle,
    pub a2: AnalyzerAngle,
    pub b1: AnalyzerAngle,
    pub b2: AnalyzerAngle,
}

impl SettingsQuartet {
    pub fn from_theta(theta: ThetaParam) -> Self {
        let t = theta.radians();
        // θ ∈ [0, π] keeps every multiple finite, so construction cannot fail.
        let angle = |x: f64| AnalyzerAngle::new(x).expect("finite angle");
        Self {
            a1: angle(2.0 * t),
            a2: angle(0.0),
            b1: angle(t),
            b2: angle(3.0 * t),
        }
    }

    /// The four `(α, β, sign)` terms of S, in the order
    /// `(a1,b1) + (a2,b1) + (a1,b2) − (a2,b2)`.
    pub fn terms(&self) -> [(AnalyzerAngle, AnalyzerAngle, f64); 4] {
        [
            (self.a1, self.b1, 1.0),
            (self.a2, self.b1, 1.0),
            (self.a1, self.b2, 1.0),
            (self.a2, self.b2, -1.0),
        ]
    }
}

/// Joint outcome probabilities for one pair of analyzer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoincidenceProbabilities {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl CoincidenceProbabilities {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }

    pub fn from_array(p: [f64; 4]) -> Self {
        Self {
            p_pp: p[0],
            p_pm: p[1],
            p_mp: p[2],
            p_mm: p[3],
        }
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// `p++ + p−− − p+− − p−+`
    pub fn correlation(&self) -> f64 {
        self.p_pp + self.p_mm - self.p_pm - self.p_mp
    }
}

/// Extreme eigenvalues of the Bell operator for one θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumBounds {
    pub s_min: f64,
    pub s_max: f64,
}

/// `(|s(α)⟩, |s⊥(α)⟩)` with
/// `|s⟩ = cos(α/2)|H⟩ + sin(α/2)|V⟩` and `|s⊥⟩ = sin(α/2)|H⟩ − cos(α/2)|V⟩`.
pub fn analyzer_basis(alpha: AnalyzerAngle) -> ([Complex64; 2], [Complex64; 2]) {
    let (s, c) = (alpha.radians() / 2.0).sin_cos();
    (
        [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(-c, 0.0)],
    )
}

pub fn observable(alpha: AnalyzerAngle) -> Observable {
    let (s, c) = alpha.radians().sin_cos();
    let matrix = ComplexMatrix2::pauli_z().scale(c) + ComplexMatrix2::pauli_x().scale(s);
    Observable { alpha, matrix }
}

/// `|s⟩⟨s| − |s⊥⟩⟨s⊥|`, the projector route to [`observable`].
pub fn observable_from_projectors(alpha: AnalyzerAngle) -> ComplexMatrix2 {
    let (s, s_perp) = analyzer_basis(alpha);
    ComplexMatrix2::outer(&s, &s) - ComplexMatrix2::outer(&s_perp, &s_perp)
}

/// `cos ξ |φ⁺⟩ + sin ξ |ψ⁻⟩` with `|ψ⁻⟩ = (|HV⟩ − |VH⟩)/√2`.
pub fn state_phi(xi: XiParam) -> TwoQubitKet {
    let (s, c) = xi.radians().sin_cos();
    let k = FRAC_1_SQRT_2;
    TwoQubitKet::from_real([c * k, s * k, -s * k, c * k]).expect("unit norm by construction")
}

fn projection_probability(psi: &TwoQubitKet, u: &[Complex64; 2], v: &[Complex64; 2]) -> f64 {
    let amps = psi.amplitudes();
    let overlap = u[0].conj() * v[0].conj() * amps[0]
        + u[0].conj() * v[1].conj() * amps[1]
        + u[1].conj() * v[0].conj() * amps[2]
        + u[1].conj() * v[1].conj() * amps[3];
    overlap.norm_sqr()
}

/// Squared overlaps of `|φ(ξ)⟩` with the four analyzer product kets.
pub fn coincidence_probabilities(
    alpha: AnalyzerAngle,
    beta: AnalyzerAngle,
    xi: XiParam,
) -> CoincidenceProbabilities {
    let psi = state_phi(xi);
    let (sa, sa_perp) = analyzer_basis(alpha);
    let (sb, sb_perp) = analyzer_basis(beta);
    CoincidenceProbabilities {
        p_pp: projection_probability(&psi, &sa, &sb),
        p_pm: projection_probability(&psi, &sa, &sb_perp),
        p_mp: projection_probability(&psi, &sa_perp, &sb),
        p_mm: projection_probability(&psi, &sa_perp, &sb_perp),
    }
}

/// `⟨O(α) ⊗ O(β)⟩` on `|φ(ξ)⟩`, from the coincidence probabilities.
pub fn correlation(alpha: AnalyzerAngle, beta: AnalyzerAngle, xi: XiParam) -> f64 {
    coincidence_probabilities(alpha, beta, xi).correlation()
}

/// `⟨O(α) ⊗ O(β)⟩` on `|φ(ξ)⟩`, as an operator expectation.
pub fn correlation_operator(alpha: AnalyzerAngle, beta: AnalyzerAngle, xi: XiParam) -> f64 {
    let m = tensor(&observable(alpha).matrix, &observable(beta).matrix);
    expectation(&state_phi(xi), &m).expect("product of real observables is Hermitian")
}

/// `S = E(2θ, θ) + E(0, θ) + E(2θ, 3θ) − E(0, 3θ)` on `|φ(ξ)⟩`.
pub fn s_parameter(theta: ThetaParam, xi: XiParam) -> f64 {
    SettingsQuartet::from_theta(theta)
        .terms()
        .iter()
        .map(|&(a, b, sign)| sign * correlation(a, b, xi))
        .sum()
}

/// `A(θ) = 3 cos θ − cos 3θ`
pub fn cos_coefficient(theta: ThetaParam) -> f64 {
    let t = theta.radians();
    3.0 * t.cos() - (3.0 * t).cos()
}

/// `C(θ) = sin θ − sin 3θ`
pub fn sin_coefficient(theta: ThetaParam) -> f64 {
    let t = theta.radians();
    t.sin() - (3.0 * t).sin()
}

/// `S(θ, ξ) = A(θ) cos 2ξ + C(θ) sin 2ξ`.
pub fn s_closed_form(theta: ThetaParam, xi: XiParam) -> f64 {
    let (s2, c2) = (2.0 * xi.radians()).sin_cos();
    cos_coefficient(theta) * c2 + sin_coefficient(theta) * s2
}

/// `O(2θ)⊗O(θ) + O(0)⊗O(θ) + O(2θ)⊗O(3θ) − O(0)⊗O(3θ)`
pub fn bell_operator(theta: ThetaParam) -> ComplexMatrix4 {
    SettingsQuartet::from_theta(theta)
        .terms()
        .iter()
        .fold(ComplexMatrix4::zeros(), |acc, &(a, b, sign)| {
            acc + tensor(&observable(a).matrix, &observable(b).matrix).scale(sign)
        })
}

/// Extreme eigenvalues of [`bell_operator`].
pub fn quantum_bounds(theta: ThetaParam) -> Result<QuantumBounds> {
    let spectrum = herm_eigenvalues(&bell_operator(theta))?;
    Ok(QuantumBounds {
        s_min: spectrum[0],
        s_max: spectrum[3],
    })
}

/// `2·sqrt(1 + sin² 2θ)`, the largest Bell-operator eigenvalue in closed form.
pub fn spectral_bound_closed_form(theta: ThetaParam) -> f64 {
    2.0 * (1.0 + (2.0 * theta.radians()).sin().powi(2)).sqrt()
}

/// The state of the family maximizing S for this θ, and the maximum.
///
/// `ξ* = ½ atan2(C, A)` folded into `[0, π)`; when `A = C = 0` every ξ is
/// extremal and `ξ* = 0`.
pub fn family_extremum(theta: ThetaParam) -> (XiParam, f64) {
    let a = cos_coefficient(theta);
    let c = sin_coefficient(theta);
    let xi = if a.abs() <= ALGEBRA_TOL && c.abs() <= ALGEBRA_TOL {
        0.0
    } else {
        0.5 * c.atan2(a)
    };
    let xi = XiParam::new(xi).expect("finite");
    (xi, s_parameter(theta, xi))
}

/// Value of the CHSH combination for deterministic ±1 outcomes.
pub fn classical_value(a1: i8, a2: i8, b1: i8, b2: i8) -> i32 {
    let (a1, a2, b1, b2) = (a1 as i32, a2 as i32, b1 as i32, b2 as i32);
    a1 * b1 + a2 * b1 + a1 * b2 - a2 * b2
}

/// All 16 deterministic assignments `(a1, a2, b1, b2)` with their CHSH value.
pub fn classical_assignments() -> Vec<([i8; 4], i32)> {
    let pm = [-1i8, 1];
    let mut out = Vec::with_capacity(16);
    for a1 in pm {
        for a2 in pm {
            for b1 in pm {
                for b2 in pm {
                    out.push(([a1, a2, b1, b2], classical_value(a1, a2, b1, b2)));
                }
            }
        }
    }
    out
}

/// Maximum of the CHSH combination over local deterministic strategies.
pub fn classical_bound() -> f64 {
    classical_assignments()
        .into_iter()
        .map(|(_, v)| v)
        .max()
        .expect("16 assignments") as f64
}

/// A Haar-random two-qubit pure state from 8 standard normals.
pub fn haar_state<R: rand::Rng + ?Sized>(rng: &mut R) -> TwoQubitKet {
    loop {
        let mut amps = [Complex64::new(0.0, 0.0); 4];
        for z in amps.iter_mut() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            *z = Complex64::new(re, im);
        }
        if let Ok(psi) = TwoQubitKet::normalized(amps) {
            return psi;
        }
    }
}

/// `⟨B(θ)⟩` on `n` Haar-random pure states drawn from a ChaCha8 stream
/// seeded with `seed`.
pub fn haar_sample_s(theta: ThetaParam, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::TooFew("sample count", 1));
    }
    let bell = bell_operator(theta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| expectation(&haar_state(&mut rng), &bell))
        .collect()
}
