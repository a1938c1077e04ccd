//! Matchgate circuits whose Born distributions are exactly the fermionized
//! (noisy) parity distributions.
//!
//! Two even-parity blocks are prepared side by side on `n + 2` wires:
//! block 1 carries the `x` bits on the support of `s` together with `y`,
//! block 2 carries the remaining `x` bits together with `z`. Each block's
//! even-parity constraint is exactly `y = chi_s(x)` and `z = |x restricted
//! to the zeros of s|`, which equals `|x| + y`. An FSWAP network then routes
//! every wire to its place in the `(x, y, z)` layout. An FSWAP before
//! measurement acts on the outcome distribution as a plain bit swap, so the
//! network realizes the bit permutation at the distribution level.
//!
//! Pre-routing wire layout (`m = wt(s) + 1`):
//!
//! ```text
//! wires 0 .. m-1   support of s, ascending      block 1
//! wire  m-1        y
//! wire  m          z                            block 2
//! wires m+1 .. n+1 zeros of s, ascending
//! ```
//!
//! `y` and `z` are adjacent both before routing (`m-1, m`) and after
//! (`n, n+1`), so the noise gate needs no extra swaps in either mode.

use serde::Serialize;
use thiserror::Error;

use crate::bits::BitString;
use crate::dist::{NoiseRate, Secret};
use crate::format::ser_f64;
use crate::gates::{Gate2Q, MatchgateCircuit};
use crate::simulate::{born_distribution, permute_string, DistributionTable, SimError};

/// Largest secret length for circuit construction.
pub const MAX_EMBED_N: usize = 16;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("secret length {n} exceeds the embedding limit of {MAX_EMBED_N}")]
    TooLarge { n: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Depth-2 brickwork of `U_X(pi/2)` on `k` wires; its Born distribution is
/// uniform over even-weight strings. Empty for `k = 1`.
pub fn parity_block_circuit(k: usize) -> MatchgateCircuit {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let layer = |start: usize| -> Vec<Gate2Q> {
        (start..k.saturating_sub(1)).step_by(2).map(|i| Gate2Q::ux(half_pi, i)).collect()
    };
    let layers = [layer(0), layer(1)].into_iter().filter(|l| !l.is_empty()).collect();
    MatchgateCircuit::with_layers(k, layers)
}

/// Wire routing for one secret.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingPlan {
    pub s: Secret,
    #[serde(serialize_with = "ser_noise")]
    pub eta: NoiseRate,
    /// Width of block 1, `wt(s) + 1`.
    pub m: usize,
    /// Adjacent FSWAPs `(i, i + 1)` in application order.
    pub transpositions: Vec<[usize; 2]>,
    /// Whether the transpositions are gates (true) or an output relabelling.
    pub local: bool,
    /// FSWAP layers, each a list of lower wires.
    #[serde(skip)]
    pub rounds: Vec<Vec<usize>>,
    /// `destination[w]`: output position of the content prepared on wire `w`.
    #[serde(skip)]
    pub destination: Vec<usize>,
}

fn ser_noise<S: serde::Serializer>(eta: &NoiseRate, s: S) -> Result<S::Ok, S::Error> {
    ser_f64(&eta.value(), s)
}

impl EmbeddingPlan {
    pub fn n(&self) -> usize {
        self.s.n()
    }

    pub fn wires(&self) -> usize {
        self.s.n() + 2
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Pre-routing wire of each block: `(block 1 wires, block 2 wires)` as
    /// output positions.
    pub fn blocks(&self) -> (Vec<usize>, Vec<usize>) {
        let (a, b) = self.destination.split_at(self.m);
        (a.to_vec(), b.to_vec())
    }
}

/// Computes the two blocks and the odd-even transposition network that sorts
/// them into the `(x, y, z)` layout.
pub fn plan_permutation(s: &Secret) -> EmbeddingPlan {
    plan_with(s, NoiseRate::ZERO, true)
}

fn plan_with(s: &Secret, eta: NoiseRate, local: bool) -> EmbeddingPlan {
    let n = s.n();
    let bits = s.bits();
    let support: Vec<usize> = (0..n).filter(|&i| bits.get(i) == 1).collect();
    let zeros: Vec<usize> = (0..n).filter(|&i| bits.get(i) == 0).collect();
    let m = support.len() + 1;

    let mut destination = support;
    destination.push(n);
    destination.push(n + 1);
    destination.extend(zeros);

    // odd-even transposition sort of the labels
    let mut labels = destination.clone();
    let mut rounds = Vec::new();
    let mut transpositions = Vec::new();
    let mut idle = 0;
    let mut parity = 0;
    while idle < 2 {
        let mut round = Vec::new();
        for i in (parity..labels.len().saturating_sub(1)).step_by(2) {
            if labels[i] > labels[i + 1] {
                labels.swap(i, i + 1);
                round.push(i);
                transpositions.push([i, i + 1]);
            }
        }
        if round.is_empty() {
            idle += 1;
        } else {
            idle = 0;
            rounds.push(round);
        }
        parity ^= 1;
    }
    debug_assert!(labels.windows(2).all(|w| w[0] < w[1]));

    EmbeddingPlan { s: *s, eta, m, transpositions, local, rounds, destination }
}

/// A circuit together with the plan that explains its output layout.
#[derive(Debug, Clone)]
pub struct EmbeddedCircuit {
    pub circuit: MatchgateCircuit,
    pub plan: EmbeddingPlan,
}

impl EmbeddedCircuit {
    /// Maps a measured string to the `(x, y, z)` layout. Identity in local
    /// mode, where the routing is part of the circuit.
    pub fn post_process(&self, v: BitString) -> BitString {
        if self.plan.local {
            v
        } else {
            permute_string(v, &self.plan.destination)
        }
    }

    /// Born distribution in the `(x, y, z)` layout.
    pub fn output_distribution(&self) -> Result<DistributionTable, SimError> {
        let born = born_distribution(&self.circuit)?;
        Ok(if self.plan.local { born } else { born.permute_bits(&self.plan.destination) })
    }
}

/// Output position of each wire's content after applying adjacent swaps
/// in order: the inverse view of a transposition list.
pub fn destination_from_transpositions(wires: usize, transpositions: &[[usize; 2]]) -> Vec<usize> {
    let mut content: Vec<usize> = (0..wires).collect();
    for &[i, j] in transpositions {
        content.swap(i, j);
    }
    let mut destination = vec![0; wires];
    for (pos, &w) in content.iter().enumerate() {
        destination[w] = pos;
    }
    destination
}

fn check_n(s: &Secret) -> Result<(), EmbedError> {
    if s.n() > MAX_EMBED_N {
        return Err(EmbedError::TooLarge { n: s.n() });
    }
    Ok(())
}

fn block_circuit(plan: &EmbeddingPlan) -> MatchgateCircuit {
    let mut c = MatchgateCircuit::new(plan.wires());
    c.overlay(&parity_block_circuit(plan.m), 0);
    c.overlay(&parity_block_circuit(plan.wires() - plan.m), plan.m);
    c
}

fn routing_layers(plan: &EmbeddingPlan) -> Vec<Vec<Gate2Q>> {
    plan.rounds
        .iter()
        .map(|r| r.iter().map(|&i| Gate2Q::fswap(i)).collect())
        .collect()
}

/// Circuit for `M_s`. In non-local mode the routing is left to
/// [`EmbeddedCircuit::post_process`] and the circuit has depth at most 2.
pub fn embed_parity(s: &Secret, local: bool) -> Result<EmbeddedCircuit, EmbedError> {
    check_n(s)?;
    let plan = plan_with(s, NoiseRate::ZERO, local);
    let mut circuit = block_circuit(&plan);
    if local {
        circuit.layers.extend(routing_layers(&plan));
    }
    Ok(EmbeddedCircuit { circuit, plan })
}

/// `t = 2 arcsin(sqrt(eta))`, so that `sin^2(t/2) = eta`.
pub fn noise_angle(eta: NoiseRate) -> f64 {
    2.0 * eta.value().sqrt().asin()
}

/// Circuit for `M_s^eta`: the parity embedding followed by `U_X(t)` on the
/// `(y, z)` pair.
pub fn embed_noisy_parity(s: &Secret, eta: NoiseRate, local: bool) -> Result<EmbeddedCircuit, EmbedError> {
    check_n(s)?;
    let plan = plan_with(s, eta, local);
    let mut circuit = block_circuit(&plan);
    let t = noise_angle(eta);
    if local {
        circuit.layers.extend(routing_layers(&plan));
        circuit.push_layer(vec![Gate2Q::ux(t, plan.n())]);
    } else {
        circuit.push_layer(vec![Gate2Q::ux(t, plan.m - 1)]);
    }
    Ok(EmbeddedCircuit { circuit, plan })
}
