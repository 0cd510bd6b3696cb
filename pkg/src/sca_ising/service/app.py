"""HTTP service: one endpoint per operation, thin over the core package."""

from __future__ import annotations

import dataclasses
import os

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bounds import plan, q_upper_flips
from ..dynamics import SamplerParams, chain_rng
from ..errors import ScaIsingError
from ..model import IsingModel
from ..numerics import inv_one_plus_exp, log_two_cosh
from ..oracle import (
    check_enumeration_size,
    check_order_preservation,
    detailed_balance_residual,
    enumerate_energies,
    gibbs_distribution,
    ground_states,
    log_transition_matrix,
    matrix_cap,
    sca_distribution,
    spin_table,
    stationarity_residual,
    tv_distance,
)
from ..search import SearchConfig, ensemble_search
from . import schemas

# Row block for streaming flip statistics over large configuration sets.
_FLIP_CHUNK = 65536


def _plan_dict(model: IsingModel, beta: float, epsilon: float) -> dict:
    return plan(model, beta, epsilon).to_dict()


def _stats(minimum: float, total: float, maximum: float, count: int) -> dict:
    return {"min": minimum, "mean": total / count, "max": maximum}


def _flip_report(
    model: IsingModel,
    beta: float,
    q: float,
    exhaustive: bool,
    samples: int,
    seed: int,
    enum_cap: int | None,
) -> dict:
    SamplerParams(beta=beta, q=q)  # validates beta and q
    n = model.n_vertices
    if exhaustive:
        check_enumeration_size(model, enum_cap)
        table = spin_table(n)
        mode = "exhaustive"
        seed_out: int | None = None
    else:
        if samples < 1:
            raise ValueError(f"samples must be >= 1, got {samples}")
        rng = chain_rng(seed)
        table = np.where(rng.random((samples, n)) < 0.5, 1, -1).astype(np.int8)
        mode = "sampled"
        seed_out = seed

    count = table.shape[0]
    g_min = s_min = e_min = np.inf
    g_max = s_max = e_max = -np.inf
    g_sum = s_sum = e_sum = 0.0
    gap_min = np.inf
    for start in range(0, count, _FLIP_CHUNK):
        chunk = table[start : start + _FLIP_CHUNK]
        spins = chunk.astype(np.float64)
        cavity = model.cavity_batch(chunk)
        aligned = cavity * spins
        glauber = inv_one_plus_exp(2.0 * beta * aligned).mean(axis=1)
        sca = inv_one_plus_exp(beta * aligned + 2.0 * q).sum(axis=1)
        half = 0.5 * beta * cavity
        log_eps = -q + log_two_cosh(half) - log_two_cosh(half + q * spins)
        envelope = n * np.exp(log_eps.max(axis=1))
        gaps = sca - glauber

        g_min = min(g_min, float(glauber.min()))
        g_max = max(g_max, float(glauber.max()))
        g_sum += float(glauber.sum())
        s_min = min(s_min, float(sca.min()))
        s_max = max(s_max, float(sca.max()))
        s_sum += float(sca.sum())
        e_min = min(e_min, float(envelope.min()))
        e_max = max(e_max, float(envelope.max()))
        e_sum += float(envelope.sum())
        gap_min = min(gap_min, float(gaps.min()))

    constants = model.constants()
    q_upper = q_upper_flips(n, beta, constants.k_bar)
    glauber_stats = _stats(g_min, g_sum, g_max, count)
    glauber_stats["mean_per_sweep"] = glauber_stats["mean"] * n
    return {
        "n_vertices": n,
        "beta": beta,
        "q": q,
        "mode": mode,
        "n_configurations": count,
        "seed": seed_out,
        "q_upper_flips": q_upper,
        "bound_verdict": "dominant" if q <= q_upper else "not-guaranteed",
        "glauber": glauber_stats,
        "sca": _stats(s_min, s_sum, s_max, count),
        "epsilon_envelope": _stats(e_min, e_sum, e_max, count),
        "dominance": {"holds_everywhere": bool(gap_min >= 0.0), "min_gap": gap_min},
    }


def _verify_report(
    model: IsingModel,
    beta: float,
    q: float,
    epsilon: float,
    r_h_mode: str,
    enum_cap: int | None,
    matrix_cap_override: int | None,
) -> dict:
    params = SamplerParams(beta=beta, q=q)
    n = model.n_vertices
    check_enumeration_size(model, enum_cap)
    table = spin_table(n)
    energies = enumerate_energies(model, enum_cap, table=table)
    constants = model.constants()
    if r_h_mode == "exact":
        constants = dataclasses.replace(
            constants, r_h_exact=float(energies.max() - energies.min())
        )
        r_h = constants.r_h_exact
    else:
        r_h = constants.r_h_lower

    gibbs = gibbs_distribution(model, beta, energies=energies)
    sca = sca_distribution(model, params, enum_cap, table=table, energies=energies)
    closeness = check_order_preservation(model, sca, epsilon, r_h, energies=energies)
    tv = tv_distance(sca, gibbs)

    notes: list[str] = []
    balance = None
    stationarity = None
    cap = matrix_cap(matrix_cap_override)
    if n <= cap:
        log_pg = log_transition_matrix(model, params, "glauber", cap)
        log_ps = log_transition_matrix(model, params, "sca", cap)
        balance = {
            "glauber": detailed_balance_residual(gibbs, log_pg),
            "sca": detailed_balance_residual(sca, log_ps),
        }
        stationarity = {
            "glauber": stationarity_residual(gibbs, np.exp(log_pg)),
            "sca": stationarity_residual(sca, np.exp(log_ps)),
        }
    else:
        notes.append(
            f"transition-matrix checks skipped: {n} vertices exceeds the matrix cap of {cap}"
        )

    return {
        "n_vertices": n,
        "beta": beta,
        "q": q,
        "epsilon": epsilon,
        "r_h": r_h,
        "r_h_source": r_h_mode,
        "constants": constants.to_dict(),
        "closeness": closeness.to_dict(),
        "tv_distance": tv,
        "detailed_balance": balance,
        "stationarity": stationarity,
        "notes": notes,
    }


def _exact_report(
    model: IsingModel, beta: float, q: float | None, enum_cap: int | None
) -> dict:
    n = model.n_vertices
    check_enumeration_size(model, enum_cap)
    table = spin_table(n)
    energies = enumerate_energies(model, enum_cap, table=table)
    gibbs = gibbs_distribution(model, beta, energies=energies)
    lowest = ground_states(model, energies=energies)
    sca_dict = None
    tv = None
    if q is not None:
        params = SamplerParams(beta=beta, q=q)
        sca = sca_distribution(model, params, enum_cap, table=table, energies=energies)
        sca_dict = sca.to_dict()
        tv = tv_distance(sca, gibbs)
    else:
        SamplerParams(beta=beta)  # validates beta
    return {
        "n_vertices": n,
        "beta": beta,
        "q": q,
        "gibbs": gibbs.to_dict(),
        "sca": sca_dict,
        "ground_states": lowest.to_dict(),
        "tv_distance": tv,
    }


def _search_report(model: IsingModel, req: schemas.SearchRequest) -> dict:
    if req.schedule is not None:
        if req.beta is not None:
            raise ValueError("provide either beta or a schedule, not both")
        if req.auto_q:
            raise ValueError("auto_q needs a single beta, not a schedule")
        schedule = tuple((int(s), float(b)) for s, b in req.schedule)
        beta = schedule[0][1]
    else:
        if req.beta is None:
            raise ValueError("beta is required when no schedule is given")
        schedule = None
        beta = req.beta

    plan_dict = None
    epsilon_out: float | None = None
    if req.auto_q:
        if req.q is not None:
            raise ValueError("give q explicitly or pass auto_q, not both")
        epsilon_out = req.epsilon
        derived = plan(model, beta, req.epsilon)
        plan_dict = derived.to_dict()
        q = derived.q_recommended
    else:
        if req.q is None:
            raise ValueError("q is required unless auto_q is set")
        q = req.q

    resolved = {
        "n_vertices": model.n_vertices,
        "beta": beta,
        "q": q,
        "kernel": req.kernel,
        "n_steps": req.n_steps,
        "n_chains": req.n_chains,
        "seed": req.seed,
        "auto_q": req.auto_q,
        "epsilon": epsilon_out,
        "schedule": [list(entry) for entry in schedule] if schedule else None,
        "threads": req.threads,
    }
    if q is None:
        # auto_q with an empty feasible interval: report the plan, run nothing
        return {"resolved": resolved, "plan": plan_dict, "profile": None, "traces": None}

    config = SearchConfig(
        beta=beta,
        q=q,
        n_steps=req.n_steps,
        n_chains=req.n_chains,
        seed=req.seed,
        kernel=req.kernel,
        record_trace=req.record_trace,
        schedule=schedule,
    )
    threads = req.threads if req.threads is not None else os.cpu_count()
    profile = ensemble_search(model, config, threads=threads)
    traces = [list(row) for row in profile.traces] if profile.traces is not None else None
    return {
        "resolved": resolved,
        "plan": plan_dict,
        "profile": profile.to_dict(),
        "traces": traces,
    }


def create_app() -> FastAPI:
    app = FastAPI(title="sca-ising service", version=__version__)

    @app.exception_handler(ScaIsingError)
    async def _domain_error(request: Request, exc: ScaIsingError):
        return JSONResponse(
            status_code=400,
            content={"detail": str(exc), "error": type(exc).__name__},
        )

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=400,
            content={"detail": str(exc), "error": type(exc).__name__},
        )

    @app.get("/healthz", response_model=schemas.HealthResponse)
    async def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/bounds", response_model=schemas.PlanResponse)
    async def bounds(req: schemas.BoundsRequest):
        return _plan_dict(req.model.build(), req.beta, req.epsilon)

    @app.post("/verify", response_model=schemas.VerifyResponse)
    async def verify(req: schemas.VerifyRequest):
        return _verify_report(
            req.model.build(),
            req.beta,
            req.q,
            req.epsilon,
            req.r_h_mode,
            req.enum_cap,
            req.matrix_cap,
        )

    @app.post("/flips", response_model=schemas.FlipsResponse)
    async def flips(req: schemas.FlipsRequest):
        return _flip_report(
            req.model.build(),
            req.beta,
            req.q,
            req.exhaustive,
            req.samples,
            req.seed,
            req.enum_cap,
        )

    @app.post("/search", response_model=schemas.SearchResponse)
    async def search(req: schemas.SearchRequest):
        return _search_report(req.model.build(), req)

    @app.post("/exact", response_model=schemas.ExactResponse)
    async def exact(req: schemas.ExactRequest):
        return _exact_report(req.model.build(), req.beta, req.q, req.enum_cap)

    return app
