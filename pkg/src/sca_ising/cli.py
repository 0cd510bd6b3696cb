"""Command-line client for the service.

Every subcommand posts one request to the HTTP API.  With ``--server``
the request goes to a running instance; otherwise the app is mounted
in-process, so the CLI works standalone with identical behaviour.

Exit codes: 0 success, 1 usage or input error, 2 negative verdict
(empty feasible interval, closeness check failed, dominance violated,
or an auto-q search that could not run).
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import os
import sys
import time

import httpx

from . import __version__
from .bounds import DEFAULT_EPSILON
from .errors import ModelFormatError, ScaIsingError
from .jsonio import build_manifest, canonical_digest, dumps_canonical, format_float
from .model import ENUMERATION_CAP_ENV, load_model, model_to_dict
from .oracle import MATRIX_CAP_ENV


class _RequestFailed(ScaIsingError):
    """The service answered with an error status."""


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with code 1; code 2 is reserved for negative verdicts."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"error: {message}\n")


def _env_cap(name: str) -> int | None:
    raw = os.environ.get(name)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ScaIsingError(f"{name}={raw!r} is not an integer") from None


def _resolve_cap(flag_value: int | None, env_name: str) -> int | None:
    # flag wins over environment; None lets the server apply its default
    return flag_value if flag_value is not None else _env_cap(env_name)


async def _post_local(path: str, payload: dict) -> httpx.Response:
    from .service.app import create_app

    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(transport=transport, base_url="http://sca-ising") as client:
        return await client.post(path, json=payload, timeout=None)


def _post(server: str | None, path: str, payload: dict) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            response = client.post(path, json=payload)
    else:
        response = asyncio.run(_post_local(path, payload))
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except json.JSONDecodeError:
            detail = response.text
        raise _RequestFailed(f"{path} failed ({response.status_code}): {detail}")
    return response.json()


def _write_output(payload: dict, output: str | None, manifest: dict | None) -> None:
    text = dumps_canonical(payload) + "\n"
    if output is None:
        sys.stdout.write(text)
        return
    with open(output, "w", encoding="utf-8") as fh:
        fh.write(text)
    if manifest is not None:
        with open(output + ".manifest.json", "w", encoding="utf-8") as fh:
            fh.write(dumps_canonical(manifest) + "\n")


def _write_trace(rows, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chain", "step", "energy", "flips"])
        for chain, step, energy, flips in rows:
            writer.writerow([int(chain), int(step), format_float(float(energy)), int(flips)])


def _load_payload_model(path: str) -> tuple[dict, str]:
    model = load_model(path)  # full local validation and diagnostics
    document = model_to_dict(model)
    return document, canonical_digest(document)


def _finish(args, command: str, payload: dict, parameters: dict, digest: str | None,
            seed: int | None, started: float, exit_code: int) -> int:
    manifest = build_manifest(
        command=command,
        parameters=parameters,
        model_digest=digest,
        seed=seed,
        duration_seconds=time.monotonic() - started,
    )
    _write_output(payload, args.output, manifest)
    return exit_code


# ------------------------------------------------------------------ subcommands


def _cmd_bounds(args) -> int:
    started = time.monotonic()
    document, digest = _load_payload_model(args.model)
    request = {"model": document, "beta": args.beta, "epsilon": args.epsilon}
    result = _post(args.server, "/bounds", request)
    exit_code = 0 if result["feasible"] is not None else 2
    parameters = {"beta": args.beta, "epsilon": args.epsilon}
    return _finish(args, "bounds", result, parameters, digest, None, started, exit_code)


def _cmd_verify(args) -> int:
    started = time.monotonic()
    document, digest = _load_payload_model(args.model)
    request = {
        "model": document,
        "beta": args.beta,
        "q": args.q,
        "epsilon": args.epsilon,
        "r_h_mode": args.r_h,
        "enum_cap": _resolve_cap(args.enum_cap, ENUMERATION_CAP_ENV),
        "matrix_cap": _resolve_cap(args.matrix_cap, MATRIX_CAP_ENV),
    }
    result = _post(args.server, "/verify", request)
    exit_code = 0 if result["closeness"]["is_close"] else 2
    parameters = {k: request[k] for k in
                  ("beta", "q", "epsilon", "r_h_mode", "enum_cap", "matrix_cap")}
    return _finish(args, "verify", result, parameters, digest, None, started, exit_code)


def _cmd_flips(args) -> int:
    started = time.monotonic()
    document, digest = _load_payload_model(args.model)
    request = {
        "model": document,
        "beta": args.beta,
        "q": args.q,
        "exhaustive": args.exhaustive,
        "samples": args.samples,
        "seed": args.seed,
        "enum_cap": _resolve_cap(args.enum_cap, ENUMERATION_CAP_ENV),
    }
    result = _post(args.server, "/flips", request)
    exit_code = 0 if result["dominance"]["holds_everywhere"] else 2
    parameters = {k: request[k] for k in
                  ("beta", "q", "exhaustive", "samples", "seed", "enum_cap")}
    seed = None if args.exhaustive else args.seed
    return _finish(args, "flips", result, parameters, digest, seed, started, exit_code)


def _cmd_search(args) -> int:
    started = time.monotonic()
    document, digest = _load_payload_model(args.model)
    schedule = None
    if args.schedule is not None:
        try:
            with open(args.schedule, "r", encoding="utf-8") as fh:
                schedule = json.load(fh)
        except FileNotFoundError:
            raise ScaIsingError(f"schedule file not found: {args.schedule}") from None
        except json.JSONDecodeError as exc:
            raise ModelFormatError(
                f"schedule file {args.schedule} is not valid JSON: "
                f"line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from None
    request = {
        "model": document,
        "n_steps": args.steps,
        "n_chains": args.chains,
        "seed": args.seed,
        "beta": args.beta,
        "q": args.q,
        "auto_q": args.auto_q,
        "epsilon": args.epsilon,
        "kernel": args.kernel,
        "schedule": schedule,
        "record_trace": args.trace is not None,
        "threads": args.threads,
    }
    result = _post(args.server, "/search", request)
    traces = result.pop("traces", None)
    if args.trace is not None:
        if traces is None:
            raise ScaIsingError("service returned no trace data")
        _write_trace(traces, args.trace)
    exit_code = 0 if result["profile"] is not None else 2
    parameters = dict(result["resolved"])
    return _finish(args, "search", result, parameters, digest, args.seed, started, exit_code)


def _cmd_exact(args) -> int:
    started = time.monotonic()
    document, digest = _load_payload_model(args.model)
    request = {
        "model": document,
        "beta": args.beta,
        "q": args.q,
        "enum_cap": _resolve_cap(args.enum_cap, ENUMERATION_CAP_ENV),
    }
    result = _post(args.server, "/exact", request)
    parameters = {k: request[k] for k in ("beta", "q", "enum_cap")}
    return _finish(args, "exact", result, parameters, digest, None, started, 0)


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


# ------------------------------------------------------------------ parser


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("model", help="path to a model JSON file")
    sub.add_argument("-o", "--output",
                     help="write the report here (plus a .manifest.json sidecar) "
                          "instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sca-ising",
        description="Synchronous spin dynamics: bounds, oracles, and ground-state search.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--server", metavar="URL",
                        help="send requests to a running service instead of in-process")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("bounds", help="admissible pinning interval for one temperature")
    _add_common(p)
    p.add_argument("--beta", type=float, required=True, help="inverse temperature")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                   help="closeness tolerance (default %(default)s)")
    p.set_defaults(handler=_cmd_bounds)

    p = commands.add_parser("verify", help="exact oracle checks against the Gibbs law")
    _add_common(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--q", type=float, required=True, help="pinning strength")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--r-h", choices=["exact", "sqrt-v"], default="exact",
                   help="energy range used by the closeness check (default %(default)s)")
    p.add_argument("--enum-cap", type=int, help="max vertices for 2^n enumeration")
    p.add_argument("--matrix-cap", type=int, help="max vertices for 4^n kernels")
    p.set_defaults(handler=_cmd_verify)

    p = commands.add_parser("flips", help="expected flip activity: synchronous vs single-site")
    _add_common(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--exhaustive", action="store_true",
                       help="evaluate every configuration (2^n, capped)")
    group.add_argument("--samples", type=int, default=64,
                       help="number of sampled configurations (default %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default %(default)s)")
    p.add_argument("--enum-cap", type=int)
    p.set_defaults(handler=_cmd_flips)

    p = commands.add_parser("search", help="ensemble ground-state search")
    _add_common(p)
    temp = p.add_mutually_exclusive_group(required=True)
    temp.add_argument("--beta", type=float, help="constant inverse temperature")
    temp.add_argument("--schedule", metavar="FILE",
                      help="JSON [[step, beta], ...] annealing schedule")
    pin = p.add_mutually_exclusive_group(required=True)
    pin.add_argument("--q", type=float, help="pinning strength")
    pin.add_argument("--auto-q", action="store_true",
                     help="derive q from the feasible interval midpoint")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                   help="closeness tolerance for --auto-q (default %(default)s)")
    p.add_argument("--steps", type=int, required=True, help="steps per chain")
    p.add_argument("--chains", type=int, required=True, help="number of chains")
    p.add_argument("--seed", type=int, default=0, help="base seed (default %(default)s)")
    p.add_argument("--kernel", choices=["sca", "glauber"], default="sca",
                   help="update rule (default %(default)s)")
    p.add_argument("--threads", type=int,
                   help="worker threads for chain blocks (default: available parallelism)")
    p.add_argument("--trace", metavar="CSV",
                   help="write per-step chain,step,energy,flips rows here")
    p.set_defaults(handler=_cmd_search)

    p = commands.add_parser("exact", help="exact stationary laws and ground states")
    _add_common(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--q", type=float, help="also report the synchronous stationary law")
    p.add_argument("--enum-cap", type=int)
    p.set_defaults(handler=_cmd_exact)

    p = commands.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ScaIsingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"error: request failed: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
