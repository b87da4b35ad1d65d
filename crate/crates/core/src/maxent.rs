//! Maximum-entropy (Gibbs) densities for a potential.
//!
//! For a potential `phi` on a bounded domain and an inverse temperature
//! `beta > 0`, the density of maximal entropy at mean energy
//! `E = ∫ phi rho` is
//!
//! ```text
//! rho(x) = exp(-beta phi(x)) / Z,        Z = ∫ exp(-beta phi(x)) dx
//! ```
//!
//! and its entropy satisfies `H = beta E + ln Z`, with `dH/dE = beta`.
//! Entropy uses the natural logarithm and no Boltzmann constant. The free
//! energy is `F = E - H / beta`.
//!
//! All integrals are taken over [`Domain`] with adaptive Simpson
//! quadrature. Integrands are evaluated as `exp(-beta (phi - phi_min))`
//! so that peaked densities neither overflow nor underflow at the mode.

use serde::{Deserialize, Serialize};

use crate::histogram::EmpiricalPotential;
use crate::quadrature::{self, QuadratureError, DEFAULT_TOLERANCE};
use crate::roots::{self, RootError, RootOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MaxEntError {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("inverse temperature must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("integrand is not finite at x = {0}")]
    NonFiniteIntegrand(f64),
    #[error("invalid integration interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("target energy {target} outside the attainable range ({min}, {max})")]
    TargetOutOfRange { target: f64, min: f64, max: f64 },
    #[error("beta search did not converge after {0} iterations")]
    NonConvergence(usize),
    #[error("finite-difference step {step} does not keep beta = {beta} positive")]
    InvalidStep { beta: f64, step: f64 },
}

impl From<QuadratureError> for MaxEntError {
    fn from(e: QuadratureError) -> Self {
        match e {
            QuadratureError::NonFinite { x, .. } => Self::NonFiniteIntegrand(x),
            QuadratureError::InvalidInterval { a, b } => Self::InvalidInterval(a, b),
        }
    }
}

pub type Result<T, E = MaxEntError> = std::result::Result<T, E>;

/// Closed integration interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(MaxEntError::InvalidPotential(format!(
                "domain [{lo}, {hi}] must be finite with lo < hi"
            )))
        }
    }

    /// `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64) -> Result<Self> {
        Self::new(-half_width, half_width)
    }

    /// `[-4 sd, 4 sd]` for the sample standard deviation of `data`.
    pub fn from_data_spread(data: &[f64]) -> Result<Self> {
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        Self::symmetric(4.0 * var.sqrt())
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// Piecewise-linear potential through `(knots[i], values[i])`, constant
/// beyond the outermost knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl Table {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(MaxEntError::InvalidPotential(
                "a table needs at least two knots with one value each".into(),
            ));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(MaxEntError::InvalidPotential(
                "table entries must be finite".into(),
            ));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MaxEntError::InvalidPotential(
                "knots must be strictly increasing".into(),
            ));
        }
        Ok(Self { knots, values })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0];
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        let j = self.knots.partition_point(|&k| k <= x);
        let (x0, x1) = (self.knots[j - 1], self.knots[j]);
        let (y0, y1) = (self.values[j - 1], self.values[j]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `c x^2`
    Quadratic {
        c: f64,
    },
    /// `c ln(epsilon + |x|)`
    LogRegularized {
        c: f64,
        epsilon: f64,
    },
    /// `c |x|`
    Linear {
        c: f64,
    },
    Tabulated(Table),
}

/// A potential `phi(x) = kind(x) + offset` on a bounded domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub domain: Domain,
    #[serde(default)]
    pub offset: f64,
}

impl PotentialSpec {
    pub fn new(kind: PotentialKind, domain: Domain) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(MaxEntError::InvalidPotential(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match &kind {
            PotentialKind::Quadratic { c } | PotentialKind::Linear { c } => positive("C", *c)?,
            PotentialKind::LogRegularized { c, epsilon } => {
                positive("C", *c)?;
                positive("epsilon", *epsilon)?;
            }
            PotentialKind::Tabulated(_) => {}
        }
        Domain::new(domain.lo, domain.hi)?;
        Ok(Self {
            kind,
            domain,
            offset: 0.0,
        })
    }

    pub fn quadratic(c: f64, domain: Domain) -> Result<Self> {
        Self::new(PotentialKind::Quadratic { c }, domain)
    }

    pub fn log_regularized(c: f64, epsilon: f64, domain: Domain) -> Result<Self> {
        Self::new(PotentialKind::LogRegularized { c, epsilon }, domain)
    }

    pub fn linear(c: f64, domain: Domain) -> Result<Self> {
        Self::new(PotentialKind::Linear { c }, domain)
    }

    /// Tabulated potential on the knots' hull.
    pub fn tabulated(table: Table) -> Result<Self> {
        let n = table.knots.len();
        let domain = Domain::new(table.knots[0], table.knots[n - 1])?;
        Self::new(PotentialKind::Tabulated(table), domain)
    }

    /// Tabulates the defined bins of an empirical potential.
    pub fn from_empirical(ep: &EmpiricalPotential) -> Result<Self> {
        let (knots, values) = ep.defined_points().map(|(x, phi, _)| (x, phi)).unzip();
        Self::tabulated(Table::new(knots, values)?)
    }

    /// The same potential shifted by a constant.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn value(&self, x: f64) -> f64 {
        let v = match &self.kind {
            PotentialKind::Quadratic { c } => c * x * x,
            PotentialKind::LogRegularized { c, epsilon } => c * (epsilon + x.abs()).ln(),
            PotentialKind::Linear { c } => c * x.abs(),
            PotentialKind::Tabulated(t) => t.eval(x),
        };
        v + self.offset
    }

    /// `phi'(x)`; zero at the kink of `|x|`. Tabulated potentials use a
    /// central difference of the interpolant.
    pub fn derivative(&self, x: f64) -> f64 {
        let sign = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        match &self.kind {
            PotentialKind::Quadratic { c } => 2.0 * c * x,
            PotentialKind::LogRegularized { c, epsilon } => c * sign / (epsilon + x.abs()),
            PotentialKind::Linear { c } => c * sign,
            PotentialKind::Tabulated(t) => {
                let h = 1e-6 * self.domain.width();
                (t.eval(x + h) - t.eval(x - h)) / (2.0 * h)
            }
        }
    }

    /// Interior points where the potential is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::Tabulated(t) => t.knots.clone(),
            _ => vec![0.0],
        }
    }

    /// Where the potential attains its minimum on the domain.
    pub fn argmin(&self) -> f64 {
        match &self.kind {
            PotentialKind::Tabulated(t) => {
                let mut candidates = vec![self.domain.lo, self.domain.hi];
                candidates.extend(t.knots.iter().copied().filter(|&k| self.domain.contains(k)));
                candidates
                    .into_iter()
                    .min_by(|a, b| self.value(*a).total_cmp(&self.value(*b)))
                    .expect("non-empty")
            }
            _ => self.domain.clamp(0.0),
        }
    }

    /// `inf phi` over the domain: the `beta -> infinity` limit of `E`.
    pub fn min_value(&self) -> f64 {
        self.value(self.argmin())
    }

    /// Uniform average of `phi` over the domain: the `beta -> 0` limit of `E`.
    pub fn mean_value(&self) -> Result<f64> {
        let d = self.domain;
        let total = quadrature::integrate_pieces(
            |x| self.value(x),
            d.lo,
            d.hi,
            &self.breakpoints(),
            DEFAULT_TOLERANCE,
        )?;
        Ok(total / d.width())
    }

    fn integrate<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> Result<f64> {
        let d = self.domain;
        Ok(quadrature::integrate_pieces(
            f,
            d.lo,
            d.hi,
            &self.breakpoints(),
            tol,
        )?)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(MaxEntError::InvalidBeta(beta))
    }
}

/// The normalized density `exp(-beta phi) / Z` on the potential's domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsDensity {
    spec: PotentialSpec,
    beta: f64,
    /// `phi_min`, subtracted inside the exponent.
    shift: f64,
    /// `Z` of the shifted integrand, i.e. `Z exp(beta phi_min)`.
    z_shifted: f64,
}

impl GibbsDensity {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn ln_z(&self) -> f64 {
        self.z_shifted.ln() - self.beta * self.shift
    }

    /// `exp(-beta (phi - phi_min))`, the unnormalized weight.
    fn weight(&self, x: f64) -> f64 {
        (-self.beta * (self.spec.value(x) - self.shift)).exp()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !self.spec.domain.contains(x) {
            return 0.0;
        }
        self.weight(x) / self.z_shifted
    }

    /// `∫ pdf` over the domain, computed by a separate quadrature pass.
    pub fn total_mass(&self) -> Result<f64> {
        self.spec.integrate(|x| self.pdf(x), DEFAULT_TOLERANCE)
    }

    /// CDF at each of `xs`, which must be sorted ascending.
    pub fn cdf_sorted(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let d = self.spec.domain;
        let breaks = self.spec.breakpoints();
        let mut out = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        let mut at = d.lo;
        for &x in xs {
            let x = d.clamp(x);
            if x > at {
                acc += quadrature::integrate_pieces(|t| self.pdf(t), at, x, &breaks, 1e-12)?;
                at = x;
            }
            out.push(acc.min(1.0));
        }
        Ok(out)
    }
}

/// Builds the Gibbs density for `phi` at inverse temperature `beta`.
pub fn gibbs_density(phi: &PotentialSpec, beta: f64) -> Result<GibbsDensity> {
    check_beta(beta)?;
    let shift = phi.min_value();
    let weight = |x: f64| (-beta * (phi.value(x) - shift)).exp();
    // coarse pass sets the scale for the accurate one
    let rough = phi.integrate(weight, 1e-6)?;
    let z_shifted = phi.integrate(weight, DEFAULT_TOLERANCE * rough.min(1.0))?;
    if !(z_shifted.is_finite() && z_shifted > 0.0) {
        return Err(MaxEntError::NonFiniteIntegrand(phi.argmin()));
    }
    Ok(GibbsDensity {
        spec: phi.clone(),
        beta,
        shift,
        z_shifted,
    })
}

/// Thermodynamic summary of a Gibbs density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxEntSolution {
    pub beta: f64,
    /// Partition function `Z`; may overflow to infinity for extreme
    /// potentials, in which case use `ln_z`.
    pub z: f64,
    pub ln_z: f64,
    /// Mean energy `E = ∫ phi rho`.
    pub energy: f64,
    /// `H = -∫ rho ln rho`, integrated directly.
    pub entropy: f64,
    /// `F = E - H / beta`.
    pub free_energy: f64,
}

impl MaxEntSolution {
    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }

    /// `|H - (beta E + ln Z)|`.
    pub fn entropy_identity_gap(&self) -> f64 {
        (self.entropy - (self.beta * self.energy + self.ln_z)).abs()
    }
}

/// Computes `(beta, Z, E, H, F)` for `phi` at `beta`.
///
/// `H` is integrated from `-rho ln rho` directly, so the identity
/// `H = beta E + ln Z` holds only up to quadrature error and is a useful
/// accuracy check.
pub fn thermo(phi: &PotentialSpec, beta: f64) -> Result<MaxEntSolution> {
    let g = gibbs_density(phi, beta)?;
    solution_of(&g)
}

fn solution_of(g: &GibbsDensity) -> Result<MaxEntSolution> {
    let phi = &g.spec;
    let zs = g.z_shifted;
    let tol = DEFAULT_TOLERANCE * zs.min(1.0);
    let energy = phi.integrate(|x| g.weight(x) * phi.value(x), tol)? / zs;
    let entropy = -phi.integrate(
        |x| {
            let w = g.weight(x);
            if w == 0.0 {
                0.0
            } else {
                w * (w / zs).ln()
            }
        },
        tol,
    )? / zs;
    let ln_z = g.ln_z();
    Ok(MaxEntSolution {
        beta: g.beta,
        z: ln_z.exp(),
        ln_z,
        energy,
        entropy,
        free_energy: energy - entropy / g.beta,
    })
}

/// Mean energy at `beta`.
pub fn mean_energy(phi: &PotentialSpec, beta: f64) -> Result<f64> {
    Ok(thermo(phi, beta)?.energy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Required `|E(beta) - target| / max(1, |target|)`.
    pub energy_rel_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            energy_rel_tol: 1e-8,
        }
    }
}

/// Finds the `beta` whose Gibbs density has mean energy `target_energy`.
///
/// `E(beta)` decreases strictly from the uniform average of `phi`
/// (`beta -> 0`) to `inf phi` (`beta -> infinity`), so the target must lie
/// strictly between those. The root is bracketed by doubling or halving
/// from `beta = 1` (at most 2^60 either way) and then refined.
pub fn solve_beta(phi: &PotentialSpec, target_energy: f64) -> Result<MaxEntSolution> {
    solve_beta_with(phi, target_energy, SolveOptions::default())
}

pub fn solve_beta_with(
    phi: &PotentialSpec,
    target_energy: f64,
    opts: SolveOptions,
) -> Result<MaxEntSolution> {
    let e_min = phi.min_value();
    let e_max = phi.mean_value()?;
    if !(target_energy > e_min && target_energy < e_max) {
        return Err(MaxEntError::TargetOutOfRange {
            target: target_energy,
            min: e_min,
            max: e_max,
        });
    }
    let tol = opts.energy_rel_tol * target_energy.abs().max(1.0);
    let excess = |beta: f64| -> Result<f64> { Ok(mean_energy(phi, beta)? - target_energy) };

    let (mut lo, mut hi) = (1.0, 1.0);
    let f1 = excess(1.0)?;
    if f1.abs() <= 0.01 * tol {
        return thermo(phi, 1.0);
    }
    const LIMIT: f64 = 1.152_921_504_606_847e18; // 2^60
    if f1 > 0.0 {
        // energy too high: needs a colder (larger) beta
        loop {
            lo = hi;
            hi *= 2.0;
            if excess(hi)? < 0.0 {
                break;
            }
            if hi >= LIMIT {
                return Err(MaxEntError::NonConvergence(0));
            }
        }
    } else {
        loop {
            hi = lo;
            lo *= 0.5;
            if excess(lo)? > 0.0 {
                break;
            }
            if lo <= 1.0 / LIMIT {
                return Err(MaxEntError::NonConvergence(0));
            }
        }
    }

    let root_opts = RootOptions {
        f_tol: 0.01 * tol,
        x_rel_tol: 1e-14,
        max_iter: opts.max_iter,
    };
    let root = roots::bracketed_root(excess, lo, hi, root_opts).map_err(|e| match e {
        RootError::Eval(inner) => inner,
        RootError::NonConvergence(n) => MaxEntError::NonConvergence(n),
        RootError::NotBracketed { .. } => MaxEntError::NonConvergence(0),
    })?;
    let sol = thermo(phi, root.x)?;
    if (sol.energy - target_energy).abs() > tol {
        return Err(MaxEntError::NonConvergence(root.iterations));
    }
    Ok(sol)
}

/// Finite-difference `dH/dE` at `beta`, obtained by evaluating the Gibbs
/// family at `beta ± step`. Should equal `beta`.
pub fn dh_de_check(phi: &PotentialSpec, beta: f64, step: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(step > 0.0 && beta - step > 0.0) {
        return Err(MaxEntError::InvalidStep { beta, step });
    }
    let up = thermo(phi, beta + step)?;
    let down = thermo(phi, beta - step)?;
    Ok((up.entropy - down.entropy) / (up.energy - down.energy))
}

/// Gibbs weights `exp(-beta phi_i) / sum_j exp(-beta phi_j)` on a finite
/// set of states.
pub fn discrete_gibbs(phi: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    if phi.is_empty() || phi.iter().any(|p| !p.is_finite()) {
        return Err(MaxEntError::InvalidPotential(
            "need finite potential values".into(),
        ));
    }
    let min = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = phi.iter().map(|p| (-beta * (p - min)).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}
