"""Single-site Glauber updates and synchronous pinned-block updates.

Both rules share the cavity-field picture.  With ``a_x = htilde_x(sigma)``:

* Glauber picks one vertex uniformly and flips it with probability
  ``1 / (1 + exp(2 beta a_x sigma_x))``.
* The synchronous rule resamples every vertex at once; vertex ``x``
  flips independently with probability
  ``1 / (1 + exp(beta a_x sigma_x + 2 q))``,
  where ``q >= 0`` pins each spin towards its current value.

Randomness contract (per chain, Philox counter-based stream keyed by
``seed XOR chain_index``):

* drawing an initial configuration consumes ``n`` uniforms, one per
  vertex in index order (``u < 0.5`` maps to +1);
* each synchronous step consumes ``n`` uniforms in vertex order;
* each Glauber step consumes exactly 2 uniforms: site choice
  ``min(floor(u * n), n - 1)``, then the acceptance draw.

The fixed consumption pattern is what makes vectorised multi-chain
execution reproduce single-chain trajectories bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import IsingModel
from .numerics import inv_one_plus_exp, log_two_cosh

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SamplerParams:
    """Inverse temperature and pinning strength."""

    beta: float
    q: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta >= 0.0):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")
        if not (np.isfinite(self.q) and self.q >= 0.0):
            raise ValueError(f"q must be finite and >= 0, got {self.q}")


@dataclass(frozen=True)
class StepStats:
    """What one update did: number of flipped vertices and the energy after."""

    flips: int
    energy: float


def chain_rng(seed: int, chain_index: int = 0) -> np.random.Generator:
    """Counter-based generator for one chain.

    Streams for different chain indices are statistically independent;
    the key is ``(seed XOR chain_index)`` reduced to 64 bits.
    """
    if chain_index < 0:
        raise ValueError(f"chain_index must be >= 0, got {chain_index}")
    key = (int(seed) ^ int(chain_index)) & _MASK64
    return np.random.Generator(np.random.Philox(key=key))


def random_spins(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform configuration; consumes n uniforms in vertex order."""
    u = rng.random(n)
    return np.where(u < 0.5, 1.0, -1.0)


def glauber_step(
    model: IsingModel, params: SamplerParams, sigma, rng: np.random.Generator
) -> tuple[np.ndarray, StepStats]:
    """One Glauber update; returns the new configuration and step stats."""
    s = model._as_spins(sigma).copy()
    n = model.n_vertices
    x = min(int(rng.random() * n), n - 1)
    delta = model.energy_delta_single_flip(s, x)
    accept = float(inv_one_plus_exp(params.beta * delta))
    flipped = 0
    if rng.random() < accept:
        s[x] = -s[x]
        flipped = 1
    return s, StepStats(flips=flipped, energy=model.hamiltonian(s))


def sca_flip_probabilities(model: IsingModel, params: SamplerParams, sigma) -> np.ndarray:
    """Per-vertex flip probability of one synchronous step from ``sigma``."""
    s = model._as_spins(sigma)
    cavity = model.cavity_fields(s)
    return inv_one_plus_exp(params.beta * cavity * s + 2.0 * params.q)


def sca_step(
    model: IsingModel, params: SamplerParams, sigma, rng: np.random.Generator
) -> tuple[np.ndarray, StepStats]:
    """One synchronous update of every vertex; consumes n uniforms."""
    s = model._as_spins(sigma)
    p_flip = sca_flip_probabilities(model, params, s)
    u = rng.random(model.n_vertices)
    flips = u < p_flip
    out = np.where(flips, -s, s)
    return out, StepStats(flips=int(flips.sum()), energy=model.hamiltonian(out))


def sca_flip_factors(
    model: IsingModel, params: SamplerParams, sigma
) -> tuple[np.ndarray, np.ndarray]:
    """Factor the per-vertex flip probability as ``eps_x * p_x``.

    ``p_x = exp(-a_x sigma_x) / (2 cosh a_x)`` with ``a_x = beta htilde_x / 2``
    is the flip probability of the unpinned synchronous rule, and

    ``eps_x = exp(-q) cosh(a_x) / cosh(a_x + q sigma_x)``

    is the damping applied by the pinning.  Both lie in (0, 1], and the
    product recovers exactly ``1 / (1 + exp(beta htilde_x sigma_x + 2q))``.
    """
    s = model._as_spins(sigma)
    a = 0.5 * params.beta * model.cavity_fields(s)
    log_eps = -params.q + log_two_cosh(a) - log_two_cosh(a + params.q * s)
    log_p = -a * s - log_two_cosh(a)
    return np.exp(log_eps), np.exp(log_p)


def expected_flips_glauber(model: IsingModel, beta: float, sigma) -> float:
    """Expected number of flipped vertices in one Glauber update from ``sigma``."""
    s = model._as_spins(sigma)
    cavity = model.cavity_fields(s)
    probs = inv_one_plus_exp(2.0 * beta * cavity * s)
    return float(probs.mean())


def expected_flips_sca(model: IsingModel, beta: float, q: float, sigma) -> float:
    """Expected number of flipped vertices in one synchronous update from ``sigma``."""
    s = model._as_spins(sigma)
    cavity = model.cavity_fields(s)
    probs = inv_one_plus_exp(beta * cavity * s + 2.0 * q)
    return float(probs.sum())
