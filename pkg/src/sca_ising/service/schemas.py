"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..bounds import DEFAULT_EPSILON
from ..model import IsingModel, model_from_dict


class ModelPayload(BaseModel):
    """JSON form of a model; full validation happens in the core package."""

    n_vertices: int
    edges: list[tuple[int, int, float]] = Field(default_factory=list)
    fields: list[float] | None = None

    def build(self) -> IsingModel:
        payload: dict = {
            "n_vertices": self.n_vertices,
            "edges": [list(e) for e in self.edges],
        }
        if self.fields is not None:
            payload["fields"] = list(self.fields)
        return model_from_dict(payload)


# ------------------------------------------------------------------ requests


class BoundsRequest(BaseModel):
    model: ModelPayload
    beta: float
    epsilon: float = DEFAULT_EPSILON


class VerifyRequest(BaseModel):
    model: ModelPayload
    beta: float
    q: float
    epsilon: float = DEFAULT_EPSILON
    r_h_mode: Literal["exact", "sqrt-v"] = "exact"
    enum_cap: int | None = None
    matrix_cap: int | None = None


class FlipsRequest(BaseModel):
    model: ModelPayload
    beta: float
    q: float
    exhaustive: bool = False
    samples: int = 64
    seed: int = 0
    enum_cap: int | None = None


class SearchRequest(BaseModel):
    model: ModelPayload
    n_steps: int
    n_chains: int
    seed: int = 0
    beta: float | None = None
    q: float | None = None
    auto_q: bool = False
    epsilon: float = DEFAULT_EPSILON
    kernel: Literal["sca", "glauber"] = "sca"
    schedule: list[tuple[int, float]] | None = None
    record_trace: bool = False
    threads: int | None = None


class ExactRequest(BaseModel):
    model: ModelPayload
    beta: float
    q: float | None = None
    enum_cap: int | None = None


# ------------------------------------------------------------------ responses


class PlanResponse(BaseModel):
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
    q_rule: str
    notes: list[str]


class ConstantsOut(BaseModel):
    k_bar: float
    v: float
    r_h_lower: float
    r_h_upper: float
    r_h_exact: float | None


class ClosenessOut(BaseModel):
    is_close: bool
    epsilon: float
    margin: float
    worst_pair: tuple[int, int] | None


class KernelPairOut(BaseModel):
    glauber: float
    sca: float


class VerifyResponse(BaseModel):
    n_vertices: int
    beta: float
    q: float
    epsilon: float
    r_h: float
    r_h_source: Literal["exact", "sqrt-v"]
    constants: ConstantsOut
    closeness: ClosenessOut
    tv_distance: float
    detailed_balance: KernelPairOut | None
    stationarity: KernelPairOut | None
    notes: list[str]


class StatsOut(BaseModel):
    min: float
    mean: float
    max: float


class GlauberStatsOut(StatsOut):
    mean_per_sweep: float


class DominanceOut(BaseModel):
    holds_everywhere: bool
    min_gap: float


class FlipsResponse(BaseModel):
    n_vertices: int
    beta: float
    q: float
    mode: Literal["exhaustive", "sampled"]
    n_configurations: int
    seed: int | None
    q_upper_flips: float
    bound_verdict: Literal["dominant", "not-guaranteed"]
    glauber: GlauberStatsOut
    sca: StatsOut
    epsilon_envelope: StatsOut
    dominance: DominanceOut


class BestOut(BaseModel):
    index: int
    energy: float


class ProfileOut(BaseModel):
    kernel: str
    n_chains: int
    n_steps: int
    counts: dict[str, int]
    candidates: list[int]
    best: BestOut


class ResolvedOut(BaseModel):
    n_vertices: int
    beta: float
    q: float | None
    kernel: str
    n_steps: int
    n_chains: int
    seed: int
    auto_q: bool
    epsilon: float | None
    schedule: list[tuple[int, float]] | None
    threads: int | None


class SearchResponse(BaseModel):
    resolved: ResolvedOut
    plan: PlanResponse | None
    profile: ProfileOut | None
    traces: list[tuple[int, int, float, int]] | None


class DistributionOut(BaseModel):
    n: int
    log_probs: list[float]


class GroundStatesOut(BaseModel):
    energy: float
    indices: list[int]


class ExactResponse(BaseModel):
    n_vertices: int
    beta: float
    q: float | None
    gibbs: DistributionOut
    sca: DistributionOut | None
    ground_states: GroundStatesOut
    tv_distance: float | None


class HealthResponse(BaseModel):
    status: str
    version: str
