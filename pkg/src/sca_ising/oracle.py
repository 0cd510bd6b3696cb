"""Exact enumeration oracle for small systems.

Configuration indexing is canonical throughout the package: bit ``x`` of
the index is 1 exactly when spin ``x`` is +1, so index 0 is all-minus
and index ``2^n - 1`` is all-plus.

Everything here works in the log domain.  Distributions over the
``2^n`` configurations are bounded by the enumeration cap; transition
matrices cost ``4^n`` and are bounded by the (smaller) matrix cap.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .dynamics import SamplerParams
from .errors import CapacityError, DimensionMismatchError
from .model import IsingModel, enumeration_cap
from .numerics import inv_one_plus_exp, log1p_exp, log_two_cosh

DEFAULT_MATRIX_CAP = 12
MATRIX_CAP_ENV = "SCA_ISING_MATRIX_CAP"


def matrix_cap(override: int | None = None) -> int:
    """Resolve the transition-matrix cap: override, else environment, else default."""
    if override is not None:
        cap = override
    else:
        raw = os.environ.get(MATRIX_CAP_ENV)
        if raw is None:
            return DEFAULT_MATRIX_CAP
        try:
            cap = int(raw)
        except ValueError:
            raise CapacityError(f"{MATRIX_CAP_ENV}={raw!r} is not an integer") from None
    if cap < 1:
        raise CapacityError(f"matrix cap must be positive, got {cap}")
    return cap


def check_enumeration_size(model: IsingModel, enum_cap: int | None = None) -> None:
    """Raise CapacityError when 2^n enumeration would exceed the cap."""
    cap = enumeration_cap(enum_cap)
    if model.n_vertices > cap:
        raise CapacityError(
            f"enumeration of 2^{model.n_vertices} configurations exceeds the "
            f"cap of {cap} vertices"
        )


_check_enum = check_enumeration_size


# ------------------------------------------------------------------ configurations


def spin_table(n: int) -> np.ndarray:
    """All configurations as a (2^n, n) int8 table, row i = configuration i."""
    if n > 62:
        raise CapacityError(f"configuration indices need n <= 62, got {n}")
    m = 1 << n
    out = np.empty((m, n), dtype=np.int8)
    idx = np.arange(m, dtype=np.int64)
    for x in range(n):
        out[:, x] = (((idx >> x) & 1) * 2 - 1).astype(np.int8)
    return out


def index_of_spins(sigma) -> int:
    """Canonical index of one configuration."""
    idx = 0
    for x, s in enumerate(np.asarray(sigma)):
        if s > 0:
            idx |= 1 << x
    return idx


def spins_of_index(n: int, index: int) -> np.ndarray:
    """Configuration with the given canonical index."""
    if not 0 <= index < (1 << n):
        raise ValueError(f"index {index} out of range for {n} spins")
    return np.asarray([1.0 if (index >> x) & 1 else -1.0 for x in range(n)])


def indices_of_spin_block(block: np.ndarray) -> list[int]:
    """Canonical indices for many configurations (rows)."""
    s = np.asarray(block)
    n = s.shape[1]
    if n <= 62:
        weights = (np.int64(1) << np.arange(n, dtype=np.int64))
        return [int(i) for i in ((s > 0).astype(np.int64) @ weights)]
    return [index_of_spins(row) for row in s]


def enumerate_energies(
    model: IsingModel, enum_cap: int | None = None, table: np.ndarray | None = None
) -> np.ndarray:
    """Energies of all configurations, indexed canonically."""
    _check_enum(model, enum_cap)
    if table is None:
        table = spin_table(model.n_vertices)
    return model.hamiltonian_batch(table)


# ------------------------------------------------------------------ distributions


@dataclass(frozen=True)
class DiscreteDistribution:
    """Normalised distribution over the 2^n configurations, stored as log-probabilities."""

    n: int
    log_probs: np.ndarray

    def __post_init__(self):
        lp = np.asarray(self.log_probs, dtype=np.float64)
        if lp.shape != (1 << self.n,):
            raise DimensionMismatchError(
                f"log_probs has shape {lp.shape}, expected ({1 << self.n},)"
            )
        total = float(logsumexp(lp))
        if not abs(total) < 1e-8:
            raise ValueError(f"log-probabilities are not normalised (logsumexp = {total})")
        lp = lp.copy()
        lp.flags.writeable = False
        object.__setattr__(self, "log_probs", lp)

    @classmethod
    def from_log_weights(cls, n: int, log_weights) -> "DiscreteDistribution":
        lw = np.asarray(log_weights, dtype=np.float64)
        return cls(n=n, log_probs=lw - logsumexp(lw))

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def to_dict(self) -> dict:
        return {"n": self.n, "log_probs": [float(v) for v in self.log_probs]}

    @classmethod
    def from_dict(cls, payload: dict) -> "DiscreteDistribution":
        return cls(n=int(payload["n"]), log_probs=np.asarray(payload["log_probs"]))


def gibbs_distribution(
    model: IsingModel,
    beta: float,
    enum_cap: int | None = None,
    energies: np.ndarray | None = None,
) -> DiscreteDistribution:
    """Gibbs law exp(-beta H) / Z."""
    if energies is None:
        energies = enumerate_energies(model, enum_cap)
    return DiscreteDistribution.from_log_weights(model.n_vertices, -beta * energies)


def sca_log_weight(model: IsingModel, params: SamplerParams, sigma) -> float:
    """Log stationary weight of the synchronous rule at one configuration.

    The weight has the closed product form

        log w(sigma) = -beta H(sigma) + n q
                       + sum_x log(1 + exp(-2q - beta htilde_x sigma_x)).
    """
    s = model._as_spins(sigma)
    cavity = model.cavity_fields(s)
    extra = log1p_exp(-2.0 * params.q - params.beta * cavity * s)
    return float(
        -params.beta * model.hamiltonian(s) + model.n_vertices * params.q + extra.sum()
    )


def sca_distribution(
    model: IsingModel,
    params: SamplerParams,
    enum_cap: int | None = None,
    table: np.ndarray | None = None,
    energies: np.ndarray | None = None,
) -> DiscreteDistribution:
    """Stationary law of the synchronous rule, enumerated exactly.

    Streams one vertex at a time so only O(2^n) memory is used, never
    the (2^n, n) float table.
    """
    _check_enum(model, enum_cap)
    n = model.n_vertices
    if table is None:
        table = spin_table(n)
    if energies is None:
        energies = model.hamiltonian_batch(table)
    log_w = -params.beta * energies + n * params.q
    for x in range(n):
        cavity = np.full(table.shape[0], model.fields[x], dtype=np.float64)
        for y, j in zip(model._nbr_idx[x], model._nbr_j[x]):
            cavity += j * table[:, y]
        log_w += log1p_exp(-2.0 * params.q - params.beta * cavity * table[:, x])
    return DiscreteDistribution.from_log_weights(n, log_w)


def tilde_hamiltonian(model: IsingModel, sigma, tau) -> float:
    """Two-layer energy -(1/2) <sigma, J tau> - (1/2) <h, sigma + tau>.

    Symmetric in its two arguments and equal to H on the diagonal.
    """
    s = model._as_spins(sigma)
    t = model._as_spins(tau)
    edge_x, edge_y, edge_j = model.edge_arrays
    cross = float(np.dot(edge_j, s[edge_x] * t[edge_y] + s[edge_y] * t[edge_x]))
    return -0.5 * cross - 0.5 * float(np.dot(model.fields, s + t))


# ------------------------------------------------------------------ kernels


def _check_matrix(model: IsingModel, cap_override: int | None) -> None:
    cap = matrix_cap(cap_override)
    if model.n_vertices > cap:
        raise CapacityError(
            f"transition matrix has 4^{model.n_vertices} entries; "
            f"cap is {cap} vertices"
        )


def log_transition_matrix(
    model: IsingModel,
    params: SamplerParams,
    kind: str,
    cap: int | None = None,
) -> np.ndarray:
    """Log of the one-step kernel on configuration indices.

    ``kind`` is ``"glauber"`` (single site, lazy) or ``"sca"``
    (synchronous, strictly positive).  Entries that are exactly zero in
    the linear kernel come out as -inf.
    """
    _check_matrix(model, cap)
    n = model.n_vertices
    table = spin_table(n)
    cavity = model.cavity_batch(table)
    spins = table.astype(np.float64)

    if kind == "sca":
        a = 0.5 * params.beta * cavity + params.q * spins
        # log P(tau_x = t) = a t - log 2cosh(a); summing over x factorises
        return a @ spins.T - log_two_cosh(a).sum(axis=1)[:, None]

    if kind == "glauber":
        m = 1 << n
        half = params.beta * cavity * spins
        flip = inv_one_plus_exp(2.0 * half) / n
        idx = np.arange(m, dtype=np.int64)
        targets = idx[:, None] ^ (np.int64(1) << np.arange(n, dtype=np.int64))
        out = np.full((m, m), -np.inf)
        diag = np.maximum(1.0 - flip.sum(axis=1), 0.0)
        with np.errstate(divide="ignore"):
            out[idx[:, None], targets] = np.log(flip)
            out[idx, idx] = np.log(diag)
        return out

    raise ValueError(f'kind must be "glauber" or "sca", got {kind!r}')


def transition_matrix(
    model: IsingModel,
    params: SamplerParams,
    kind: str,
    cap: int | None = None,
) -> np.ndarray:
    """Linear one-step kernel on configuration indices (rows sum to 1)."""
    return np.exp(log_transition_matrix(model, params, kind, cap))


# ------------------------------------------------------------------ comparisons


def tv_distance(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Total variation distance (1/2) sum |p - q|."""
    if p.n != q.n:
        raise DimensionMismatchError(f"distributions differ in size: {p.n} vs {q.n}")
    return 0.5 * float(np.abs(p.probs - q.probs).sum())


def detailed_balance_residual(dist: DiscreteDistribution, log_kernel: np.ndarray) -> float:
    """Largest relative detailed-balance violation.

    Returns ``max |pi_i P_ij / (pi_j P_ji) - 1|`` over pairs where both
    flows are nonzero, computed from logs so that astronomically small
    flows still compare at full relative precision.  Structural zeros
    must match symmetrically, otherwise the residual is infinite.
    """
    flow = dist.log_probs[:, None] + log_kernel
    finite = np.isfinite(flow)
    if np.any(finite != finite.T):
        return float(np.inf)
    if not finite.any():
        return 0.0
    mask = finite & finite.T
    diff = flow[mask] - flow.T[mask]
    return float(np.abs(np.expm1(diff)).max())


def stationarity_residual(dist: DiscreteDistribution, kernel: np.ndarray) -> float:
    """max |pi P - pi|: zero when the law is stationary for the kernel."""
    p = dist.probs
    return float(np.abs(p @ kernel - p).max())


# ------------------------------------------------------------------ order preservation


@dataclass(frozen=True)
class ClosenessReport:
    """Result of the order-preservation check.

    A law mu is epsilon-close (for range r_h) when every pair with
    mu(sigma) >= mu(tau) also has H(sigma) <= H(tau) + epsilon * r_h.
    ``margin`` is the largest violation amount (negative slack when the
    check passes) and ``worst_pair`` the configuration indices achieving it.
    """

    is_close: bool
    epsilon: float
    margin: float
    worst_pair: tuple[int, int] | None  # present exactly when the check fails

    def to_dict(self) -> dict:
        return {
            "is_close": self.is_close,
            "epsilon": self.epsilon,
            "margin": self.margin,
            "worst_pair": list(self.worst_pair) if self.worst_pair is not None else None,
        }


def check_order_preservation(
    model: IsingModel,
    dist: DiscreteDistribution,
    epsilon: float,
    r_h: float,
    enum_cap: int | None = None,
    energies: np.ndarray | None = None,
) -> ClosenessReport:
    """Check the pairwise condition above in O(2^n log 2^n).

    Sort by descending probability with ascending-energy tie-break; the
    worst partner for each configuration is then the smallest energy in
    the suffix starting at its probability tie group.  Probability ties
    are grouped by exact float equality of the log-probabilities.
    """
    if not np.isfinite(epsilon) or epsilon < 0:
        raise ValueError(f"epsilon must be finite and >= 0, got {epsilon}")
    if not np.isfinite(r_h) or r_h < 0:
        raise ValueError(f"r_h must be finite and >= 0, got {r_h}")
    if dist.n != model.n_vertices:
        raise DimensionMismatchError(
            f"distribution is over {dist.n} spins, model has {model.n_vertices}"
        )
    if energies is None:
        energies = enumerate_energies(model, enum_cap)
    lp = dist.log_probs
    m = lp.size

    order = np.lexsort((energies, -lp))
    lp_sorted = lp[order]
    h_sorted = energies[order]

    new_group = np.empty(m, dtype=bool)
    new_group[0] = True
    new_group[1:] = lp_sorted[1:] != lp_sorted[:-1]
    group_start = np.maximum.accumulate(np.where(new_group, np.arange(m), 0))

    rev = h_sorted[::-1]
    run_min = np.minimum.accumulate(rev)
    achiever = np.maximum.accumulate(np.where(rev == run_min, np.arange(m), -1))
    suffix_min = run_min[::-1]
    suffix_arg = (m - 1 - achiever)[::-1]

    gaps = h_sorted - suffix_min[group_start]
    worst = int(np.argmax(gaps))
    margin = float(gaps[worst] - epsilon * r_h)
    is_close = bool(margin <= 0.0)
    pair = None
    if not is_close:
        pair = (int(order[worst]), int(order[suffix_arg[group_start[worst]]]))
    return ClosenessReport(
        is_close=is_close,
        epsilon=float(epsilon),
        margin=margin,
        worst_pair=pair,
    )


# ------------------------------------------------------------------ ground states


@dataclass(frozen=True)
class GroundStates:
    """Minimum energy and every configuration index attaining it exactly."""

    n: int
    energy: float
    indices: tuple[int, ...]

    def configurations(self) -> list[np.ndarray]:
        return [spins_of_index(self.n, i) for i in self.indices]

    def to_dict(self) -> dict:
        return {"energy": self.energy, "indices": list(self.indices)}


def ground_states(
    model: IsingModel, enum_cap: int | None = None, energies: np.ndarray | None = None
) -> GroundStates:
    """All minimisers of H, by exhaustive enumeration."""
    if energies is None:
        energies = enumerate_energies(model, enum_cap)
    lowest = float(energies.min())
    idx = np.flatnonzero(energies == lowest)
    return GroundStates(
        n=model.n_vertices,
        energy=lowest,
        indices=tuple(int(i) for i in idx),
    )
