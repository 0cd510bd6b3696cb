"""Closed-form parameter bounds for the pinned synchronous rule.

Three quantities of the model drive everything: the vertex budget
``n``, ``k_bar`` (largest possible |cavity field|), and ``v`` (sum of
squared couplings and fields, whose square root bounds the energy range
from below).

* ``q <= q_upper_flips``  guarantees the synchronous rule flips at
  least as many vertices per update, in expectation from every
  configuration, as single-site Glauber.
* ``q >= q_lower_close``  guarantees the stationary law of the
  synchronous rule is epsilon-close (order preservation) to Gibbs.
* Both can hold simultaneously only below ``beta_ceiling``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateModelError
from .model import IsingModel, ModelConstants

# Default tolerance for the closeness requirement.
DEFAULT_EPSILON = 0.01


def _check_beta(beta: float) -> None:
    if not (math.isfinite(beta) and beta >= 0.0):
        raise ValueError(f"beta must be finite and >= 0, got {beta}")


def _check_epsilon(epsilon: float) -> None:
    if not (math.isfinite(epsilon) and epsilon > 0.0):
        raise ValueError(f"epsilon must be finite and > 0, got {epsilon}")


def q_upper_flips(n_vertices: int, beta: float, k_bar: float) -> float:
    """Largest q with guaranteed flip dominance: (log n - beta k_bar) / 2.

    May be negative, in which case no pinning strength qualifies.
    """
    _check_beta(beta)
    if n_vertices < 1:
        raise ValueError(f"n_vertices must be >= 1, got {n_vertices}")
    return 0.5 * (math.log(n_vertices) - beta * k_bar)


def q_lower_close(
    n_vertices: int, beta: float, epsilon: float, k_bar: float, v: float
) -> float:
    """Smallest q with guaranteed epsilon-closeness to Gibbs.

    Equals (log n + beta k_bar - log(epsilon sqrt(v) / (2 k_bar))) / 2.
    Uses sqrt(v) as the energy-range proxy, so the guarantee holds for
    the true range as well.
    """
    _check_beta(beta)
    _check_epsilon(epsilon)
    if n_vertices < 1:
        raise ValueError(f"n_vertices must be >= 1, got {n_vertices}")
    if v <= 0.0:
        raise DegenerateModelError(
            "closeness bound undefined: model has zero couplings and fields (v = 0)"
        )
    return 0.5 * (
        math.log(n_vertices)
        + beta * k_bar
        - math.log(epsilon * math.sqrt(v) / (2.0 * k_bar))
    )


def beta_ceiling(epsilon: float, k_bar: float, v: float) -> float | None:
    """Largest beta below which both bounds can hold at once, or None.

    Equals log(epsilon sqrt(v) / (2 k_bar)) / (2 k_bar) when the log is
    positive; otherwise the two bounds never overlap at any beta >= 0.
    """
    _check_epsilon(epsilon)
    if v <= 0.0:
        raise DegenerateModelError(
            "temperature ceiling undefined: model has zero couplings and fields (v = 0)"
        )
    argument = epsilon * math.sqrt(v) / (2.0 * k_bar)
    if argument <= 1.0:
        return None
    return math.log(argument) / (2.0 * k_bar)


@dataclass(frozen=True)
class ParameterPlan:
    """Admissible pinning strengths at a given temperature.

    ``feasible`` is the closed interval of q values satisfying both
    bounds, clamped to q >= 0; ``q_min_close`` is reported unclamped.
    ``q_recommended`` is the interval midpoint.
    """

    n_vertices: int
    beta: float
    epsilon: float
    k_bar: float
    v: float
    q_max_flips: float
    q_min_close: float
    beta_max: float | None
    feasible: tuple[float, float] | None
    q_recommended: float | None
    notes: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "n_vertices": self.n_vertices,
            "beta": self.beta,
            "epsilon": self.epsilon,
            "k_bar": self.k_bar,
            "v": self.v,
            "q_max_flips": self.q_max_flips,
            "q_min_close": self.q_min_close,
            "beta_max": self.beta_max,
            "feasible": list(self.feasible) if self.feasible is not None else None,
            "q_recommended": self.q_recommended,
            "q_rule": "interval-midpoint",
            "notes": list(self.notes),
        }


def plan(
    model: IsingModel,
    beta: float,
    epsilon: float = DEFAULT_EPSILON,
    constants: ModelConstants | None = None,
) -> ParameterPlan:
    """Work out the admissible pinning interval for one model and temperature."""
    _check_beta(beta)
    _check_epsilon(epsilon)
    if constants is None:
        constants = model.constants()
    n = model.n_vertices
    q_max = q_upper_flips(n, beta, constants.k_bar)
    q_min = q_lower_close(n, beta, epsilon, constants.k_bar, constants.v)
    ceiling = beta_ceiling(epsilon, constants.k_bar, constants.v)

    notes: list[str] = []
    if ceiling is None:
        notes.append(
            "no temperature ceiling: epsilon * sqrt(v) <= 2 * k_bar, so the "
            "closeness bound never meets the flip bound"
        )
    if q_min < 0.0:
        notes.append("closeness lower bound is negative; clamped to 0")

    low = max(q_min, 0.0)
    if low <= q_max:
        feasible: tuple[float, float] | None = (low, q_max)
        recommended: float | None = 0.5 * (low + q_max)
    else:
        feasible = None
        recommended = None
        if q_max < 0.0:
            notes.append(
                "flip-dominance bound excludes every q >= 0 at this beta"
            )
        else:
            notes.append("empty feasible interval: raise epsilon or lower beta")

    return ParameterPlan(
        n_vertices=n,
        beta=beta,
        epsilon=epsilon,
        k_bar=constants.k_bar,
        v=constants.v,
        q_max_flips=q_max,
        q_min_close=q_min,
        beta_max=ceiling,
        feasible=feasible,
        q_recommended=recommended,
        notes=tuple(notes),
    )
