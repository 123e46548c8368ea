use serde::{Deserialize, Serialize};

use crate::approximator::Check;
use crate::error::{check_open_interval, Error, Result};

/// `L = Σ_{n=1}^{|S|} C(|S|,n) n^{|S|}`.
pub fn combinatorial_l(num_states: usize) -> f64 {
    l_sum(num_states, num_states)
}

/// The same sum stopped at `n = |S| - 1`, the constant of the perturbation
/// bounds for invariant measures and visit lengths.
pub fn prop4_l(num_states: usize) -> f64 {
    l_sum(num_states, num_states.saturating_sub(1))
}

fn l_sum(s: usize, upto: usize) -> f64 {
    (1..=upto).map(|n| binomial(s, n) * (n as f64).powi(s as i32)).sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// `c_ε = min{ε², -ε + (1+ε) ln(1+ε)}`.
pub fn bernoulli_tail_constant(eps: f64) -> f64 {
    (eps * eps).min(-eps + (1.0 + eps) * eps.ln_1p())
}

/// Parameters that drive the hidden-chain construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenParams {
    pub epsilon: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub xi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralConstants {
    pub num_states: usize,
    pub n: u64,
    pub n_star: u64,
    pub psi: f64,
    pub eta: f64,
    pub b: f64,
    pub l: f64,
    pub a_const: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub psi_prime: f64,
    pub xi: f64,
    pub delta_prime: f64,
    pub delta: f64,
    /// `N^ξ`, the partition threshold.
    pub a: f64,
    /// (C1)..(C8) then (A1)..(A7).
    pub checks: Vec<Check>,
    /// (T1)..(T3) evaluated with `ξ_T = δ/8`.
    pub typicality: Vec<Check>,
}

impl GeneralConstants {
    pub fn params(&self) -> HiddenParams {
        HiddenParams {
            epsilon: self.epsilon,
            delta: self.delta,
            delta_prime: self.delta_prime,
            xi: self.xi,
        }
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Derives the parameter chain from `ψ`, `η` and `B`, taking each free
/// parameter at the midpoint of its open interval, and evaluates every
/// condition at `N` (with `N_*` the length of the extended sequence).
/// `vertex_counts` is `(max_s |V*(s)|, Σ_s |V*(s)|)`.
pub fn check_constants_general(
    num_states: usize,
    n: u64,
    n_star: u64,
    psi: f64,
    eta: f64,
    b: f64,
    vertex_counts: (usize, usize),
) -> Result<GeneralConstants> {
    check_open_interval("psi", psi, 0.0, 1.0)?;
    check_open_interval("eta", eta, 0.0, 1.0)?;
    if num_states < 2 || !(b.is_finite() && b > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "the general constants need |S| >= 2 and 0 < B < inf (|S| = {num_states}, B = {b})"
        )));
    }
    let s = num_states as f64;
    let si = num_states as i32;
    let l = combinatorial_l(num_states);
    let a_const = 0.5;
    let epsilon = eta / (112.0 * l);
    let beta = 0.25 * (a_const / l).powi(si) * epsilon * (1.0 - epsilon) / (b * l * l * s.powi(4));
    let alpha = 1.0 / (2.0 * beta * s * l * l);
    let alpha_prime = (alpha / 2.0 - s) / (2.0 * s);
    let psi_prime = psi / 2.0;
    let xi = psi_prime / (2.0 * (s + 1.0));
    let delta_prime = xi / 4.0;
    let delta = delta_prime.min((1.0 - psi) / 2.0) / 2.0;

    let nf = n as f64;
    let ns = n_star as f64;
    let nd = nf.powf(delta);
    let nx = nf.powf(xi);
    let eps = epsilon;
    let checks = vec![
        Check::ge("C1", nf.powf(delta_prime), nd + 1.0),
        Check::ge("C2", nd, 3.0 / (eps * (1.0 - eps))),
        Check::le(
            "C3",
            2.0 + 8.0 * l * s * (nf + s).powf(psi_prime) * (1.0 + s * s / nd),
            nf.powf(psi) / s,
        ),
        Check::ge("C4", nf.powf(xi - delta), 1.0 / eta),
        Check::ge("C5", nf.powf(1.0 - delta - psi_prime), 8.0 * b * l * s),
        Check::ge(
            "C6",
            nf.powf(1.0 - 2.0 * delta - psi),
            42.0 * (b + 1.0) * s / (eps * eps),
        ),
        Check::ge("C7", eps * nf.powf(1.0 + xi - delta), 2.0 * (nf + s)),
        Check::ge("C8", nd, s * s * (1.0 + 55.0 * eps * l) / eps),
        Check::ge("A1", beta * (nx - 1.0), (nf + s).powf(delta_prime)),
        Check::ge("A2", nx - 1.0, 1.0 / (2.0 * beta * s)),
        Check::le("A3", l * (nx + 1.0).powi(si), ns.powf(psi_prime)),
        Check::le(
            "A4",
            136.0 / (eps * eps * nf.powf(1.0 - delta)) * (nf / (nx - 1.0) + b + 1.0),
            nf.powf(-delta) / (l * s * s),
        ),
        {
            let lhs = b * (1.0 + 3.0 * eps) * (nx + 1.0).powi(si) / nf.powf(1.0 - delta);
            let mid = 1.0 / (2.0 * nd);
            Check::new("A5", lhs, mid, lhs <= mid && mid <= eps)
        },
        Check::ge(
            "A6",
            nf.powf(psi) / s,
            1.0 + 2.0 * (1.0 + 3.0 * eps) * nd * (nx + 1.0).powi(si),
        ),
        Check::ge("A7", nx, 18.0 * s),
    ];
    let typicality = typicality_checks(
        num_states,
        n,
        delta,
        epsilon,
        delta / 8.0,
        vertex_counts.0,
        vertex_counts.1,
    );
    Ok(GeneralConstants {
        num_states,
        n,
        n_star,
        psi,
        eta,
        b,
        l,
        a_const,
        epsilon,
        beta,
        alpha,
        alpha_prime,
        psi_prime,
        xi,
        delta_prime,
        delta,
        a: nx,
        checks,
        typicality,
    })
}

/// (T1)..(T3) at `N` for given `δ, ε, ξ` and vertex counts
/// `max_s |V*(s)|`, `Σ_s |V*(s)|`; `ξ'` is the midpoint of `(ξ, δ/4)`.
pub fn typicality_checks(
    num_states: usize,
    n: u64,
    delta: f64,
    epsilon: f64,
    xi: f64,
    max_vertices: usize,
    total_vertices: usize,
) -> Vec<Check> {
    let nf = n as f64;
    let s = num_states as f64;
    let xi_p = (xi + delta / 4.0) / 2.0;
    let eps_p = epsilon / ((1.0 + epsilon) * max_vertices as f64 + epsilon);
    let c = bernoulli_tail_constant(eps_p);
    let t1 = 2.0 * (-c * nf.powf(delta / 4.0)).exp() / (1.0 - (-c * nf.powf(delta / 4.0 - 1.0)).exp());
    vec![
        Check::le("T1", t1, nf.powf(-xi_p)),
        Check::ge("T2", nf.powf(xi_p - xi), 3.0 * s * s * total_vertices as f64),
        Check::ge("T3", nf.powf(delta / 2.0), (1.0 - eps_p) / eps_p),
    ]
}
