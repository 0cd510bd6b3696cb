"""Ensemble ground-state search.

Many independent chains run the same dynamics from uniform random
starts; the profile of their final configurations (and the best energy
ever visited) is the search output.  Chain ``i`` always consumes the
stream keyed by ``seed XOR i``, so results are independent of how the
ensemble is split into blocks or threads.

Blocks of chains are advanced together with vectorised array steps;
this reproduces the single-chain trajectories bit for bit because every
chain consumes a fixed number of uniforms per step (see dynamics).
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import chain_rng
from .errors import ScaIsingError
from .model import IsingModel
from .numerics import inv_one_plus_exp
from .oracle import indices_of_spin_block

KERNELS = ("sca", "glauber")

# Per-block budget for pre-drawn uniforms, in bytes.
_BLOCK_DRAW_BUDGET = 32 * 1024 * 1024
_MAX_BLOCK = 8192


class ScheduleError(ScaIsingError, ValueError):
    """An annealing schedule is malformed."""


def validate_schedule(schedule) -> tuple[tuple[int, float], ...]:
    """Check ``[[step, beta], ...]``: integer steps strictly increasing from 0."""
    entries = list(schedule)
    if not entries:
        raise ScheduleError("schedule must contain at least one [step, beta] entry")
    out: list[tuple[int, float]] = []
    previous = -1
    for k, entry in enumerate(entries):
        try:
            step_raw, beta_raw = entry
        except (TypeError, ValueError):
            raise ScheduleError(f"schedule entry #{k} must be a [step, beta] pair") from None
        if isinstance(step_raw, bool) or not isinstance(step_raw, (int, np.integer)):
            raise ScheduleError(f"schedule entry #{k}: step {step_raw!r} is not an integer")
        step = int(step_raw)
        beta = float(beta_raw)
        if k == 0 and step != 0:
            raise ScheduleError(f"schedule must start at step 0, got {step}")
        if step <= previous:
            raise ScheduleError(
                f"schedule entry #{k} ([{step}, {beta}]): steps must be strictly "
                f"increasing (previous step {previous})"
            )
        if not (np.isfinite(beta) and beta >= 0.0):
            raise ScheduleError(
                f"schedule entry #{k}: beta must be finite and >= 0, got {beta_raw!r}"
            )
        out.append((step, beta))
        previous = step
    return tuple(out)


@dataclass(frozen=True)
class SearchConfig:
    """Everything that determines a search run.

    ``n_steps`` may be 0, in which case each chain reports its uniform
    initial draw.  ``schedule`` overrides ``beta`` per step when given.
    ``kernel`` selects the update rule; the synchronous rule is the
    default, Glauber is available for like-for-like comparisons.
    """

    beta: float
    q: float
    n_steps: int
    n_chains: int
    seed: int
    kernel: str = "sca"
    record_trace: bool = False
    schedule: tuple[tuple[int, float], ...] | None = None

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta >= 0.0):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")
        if not (np.isfinite(self.q) and self.q >= 0.0):
            raise ValueError(f"q must be finite and >= 0, got {self.q}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {self.n_steps}")
        if self.n_chains < 1:
            raise ValueError(f"n_chains must be >= 1, got {self.n_chains}")
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.schedule is not None:
            object.__setattr__(self, "schedule", validate_schedule(self.schedule))

    def betas_per_step(self) -> np.ndarray:
        """Inverse temperature in force at each step 0..n_steps-1."""
        betas = np.full(self.n_steps, self.beta, dtype=np.float64)
        if self.schedule is not None:
            for step, beta in self.schedule:
                if step < self.n_steps:
                    betas[step:] = beta
        return betas


def beta_at_step(config: SearchConfig, step: int) -> float:
    """Inverse temperature used for the given 0-based step."""
    if not 0 <= step < max(config.n_steps, 1):
        raise ValueError(f"step {step} out of range for {config.n_steps} steps")
    beta = config.beta
    if config.schedule is not None:
        for s, b in config.schedule:
            if s <= step:
                beta = b
    return beta


@dataclass(frozen=True)
class ChainResult:
    """Outcome of one chain: final state, best state visited, optional trace."""

    chain_index: int
    final: np.ndarray
    best: np.ndarray
    best_energy: float
    trace: tuple[tuple[int, int, float, int], ...] | None


@dataclass(frozen=True)
class EnsembleProfile:
    """Aggregate of an ensemble run.

    ``counts`` maps final configuration indices to how many chains ended
    there; ``candidates`` are the most visited indices (ascending);
    ``best_index``/``best_energy`` is the lowest-energy configuration any
    chain ever visited, ties broken by smaller index.
    """

    kernel: str
    n_chains: int
    n_steps: int
    counts: dict[int, int]
    candidates: tuple[int, ...]
    best_index: int
    best_energy: float
    traces: tuple[tuple[int, int, float, int], ...] | None = None

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel,
            "n_chains": self.n_chains,
            "n_steps": self.n_steps,
            "counts": {str(k): self.counts[k] for k in sorted(self.counts)},
            "candidates": list(self.candidates),
            "best": {"index": self.best_index, "energy": self.best_energy},
        }


def _run_block(model: IsingModel, config: SearchConfig, chain_indices):
    """Advance a block of chains; returns finals, bests, best energies, traces."""
    n = model.n_vertices
    count = len(chain_indices)
    steps = config.n_steps
    draws_per_step = n if config.kernel == "sca" else 2

    init_u = np.empty((count, n), dtype=np.float64)
    step_u = np.empty((count, steps, draws_per_step), dtype=np.float64)
    for row, chain_index in enumerate(chain_indices):
        rng = chain_rng(config.seed, int(chain_index))
        init_u[row] = rng.random(n)
        step_u[row] = rng.random((steps, draws_per_step))

    state = np.where(init_u < 0.5, 1, -1).astype(np.int8)
    energy = model.hamiltonian_batch(state)
    best = state.copy()
    best_energy = energy.copy()

    trace_energy: list[np.ndarray] = []
    trace_flips: list[np.ndarray] = []
    if config.record_trace:
        trace_energy.append(energy.copy())
        trace_flips.append(np.zeros(count, dtype=np.int64))

    betas = config.betas_per_step()
    rows = np.arange(count)
    for t in range(steps):
        beta = betas[t]
        if config.kernel == "sca":
            cavity = model.cavity_batch(state)
            p_flip = inv_one_plus_exp(beta * cavity * state + 2.0 * config.q)
            flips = step_u[:, t, :] < p_flip
            state = np.where(flips, -state, state)
            n_flips = flips.sum(axis=1)
        else:
            site = np.minimum((step_u[:, t, 0] * n).astype(np.int64), n - 1)
            coupling_rows = model.coupling_matrix[site]
            cavity_site = (coupling_rows * state).sum(axis=1) + model.fields[site]
            spin_site = state[rows, site].astype(np.float64)
            accept_p = inv_one_plus_exp(2.0 * beta * cavity_site * spin_site)
            accepted = step_u[:, t, 1] < accept_p
            state = state.copy()
            state[rows[accepted], site[accepted]] *= -1
            n_flips = accepted.astype(np.int64)

        energy = model.hamiltonian_batch(state)
        improved = energy < best_energy
        best_energy = np.where(improved, energy, best_energy)
        best[improved] = state[improved]
        if config.record_trace:
            trace_energy.append(energy.copy())
            trace_flips.append(n_flips.astype(np.int64))

    traces = None
    if config.record_trace:
        rows_out = []
        for row, chain_index in enumerate(chain_indices):
            for t in range(steps + 1):
                rows_out.append(
                    (int(chain_index), t, float(trace_energy[t][row]), int(trace_flips[t][row]))
                )
        traces = tuple(rows_out)
    return state, best, best_energy, traces


def run_chain(model: IsingModel, config: SearchConfig, chain_index: int) -> ChainResult:
    """Run a single chain (always traced); bit-identical to its ensemble run."""
    traced = SearchConfig(
        beta=config.beta,
        q=config.q,
        n_steps=config.n_steps,
        n_chains=config.n_chains,
        seed=config.seed,
        kernel=config.kernel,
        record_trace=True,
        schedule=config.schedule,
    )
    finals, bests, best_energies, traces = _run_block(model, traced, [chain_index])
    return ChainResult(
        chain_index=chain_index,
        final=finals[0].astype(np.float64),
        best=bests[0].astype(np.float64),
        best_energy=float(best_energies[0]),
        trace=traces,
    )


def _block_size(config: SearchConfig, n: int) -> int:
    per_chain = max(config.n_steps, 1) * (n if config.kernel == "sca" else 2) * 8
    by_memory = max(1, _BLOCK_DRAW_BUDGET // per_chain)
    return int(min(config.n_chains, by_memory, _MAX_BLOCK))


def ensemble_search(
    model: IsingModel, config: SearchConfig, threads: int | None = None
) -> EnsembleProfile:
    """Run the full ensemble and aggregate the outcome profile.

    ``threads`` parallelises over chain blocks; the result does not
    depend on it.
    """
    block = _block_size(config, model.n_vertices)
    starts = range(0, config.n_chains, block)
    blocks = [np.arange(s, min(s + block, config.n_chains)) for s in starts]

    if threads is not None and threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda b: _run_block(model, config, b), blocks))
    else:
        results = [_run_block(model, config, b) for b in blocks]

    counts: Counter[int] = Counter()
    best_energy = np.inf
    best_index = -1
    all_traces: list[tuple[int, int, float, int]] = []
    for (finals, bests, best_energies, traces), chain_ids in zip(results, blocks):
        counts.update(indices_of_spin_block(finals))
        best_ids = indices_of_spin_block(bests)
        for row in range(len(chain_ids)):
            e = float(best_energies[row])
            i = best_ids[row]
            if e < best_energy or (e == best_energy and i < best_index):
                best_energy = e
                best_index = i
        if traces is not None:
            all_traces.extend(traces)

    top = max(counts.values())
    candidates = tuple(sorted(k for k, c in counts.items() if c == top))
    return EnsembleProfile(
        kernel=config.kernel,
        n_chains=config.n_chains,
        n_steps=config.n_steps,
        counts=dict(counts),
        candidates=candidates,
        best_index=best_index,
        best_energy=best_energy,
        traces=tuple(all_traces) if config.record_trace else None,
    )


def energy_autocorrelation(energies, max_lag: int) -> np.ndarray:
    """Normalised autocorrelation of an energy trace at lags 0..max_lag.

    A rough relaxation diagnostic; it says nothing about sufficiency of
    the step budget on its own.
    """
    e = np.asarray(energies, dtype=np.float64)
    if e.ndim != 1 or e.size < 2:
        raise ValueError("need a 1-d energy trace with at least 2 entries")
    centred = e - e.mean()
    denom = float(np.dot(centred, centred))
    out = np.empty(min(max_lag, e.size - 1) + 1, dtype=np.float64)
    if denom == 0.0:
        out[:] = 0.0
        out[0] = 1.0
        return out
    for lag in range(out.size):
        out[lag] = float(np.dot(centred[: e.size - lag], centred[lag:])) / denom
    return out
