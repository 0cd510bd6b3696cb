"""Finite Ising models with pair couplings and local fields.

Energy convention::

    H(sigma) = - sum_{edges {x,y}} J_xy sigma_x sigma_y - sum_x h_x sigma_x

Spins take values +1/-1.  The cavity field at a vertex is
``htilde_x(sigma) = sum_y J_xy sigma_y + h_x``, so flipping vertex ``x``
changes the energy by ``2 htilde_x(sigma) sigma_x``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CapacityError, DimensionMismatchError, ModelFormatError

# Exact-enumeration work scales as 2^|V|; the cap keeps requests bounded.
DEFAULT_ENUMERATION_CAP = 20
ENUMERATION_CAP_ENV = "SCA_ISING_ENUM_CAP"

# Above this size a dense coupling matrix stops being the right tool.
_DENSE_CAVITY_LIMIT = 2048


def enumeration_cap(override: int | None = None) -> int:
    """Resolve the enumeration cap: explicit override, else environment, else default."""
    if override is not None:
        cap = override
    else:
        raw = os.environ.get(ENUMERATION_CAP_ENV)
        if raw is None:
            return DEFAULT_ENUMERATION_CAP
        try:
            cap = int(raw)
        except ValueError:
            raise CapacityError(f"{ENUMERATION_CAP_ENV}={raw!r} is not an integer") from None
    if cap < 1:
        raise CapacityError(f"enumeration cap must be positive, got {cap}")
    return cap


@dataclass(frozen=True)
class ModelConstants:
    """Size constants of a model.

    k_bar:     max over vertices of (sum of |J| at the vertex + |h| there);
               this equals the largest possible |cavity field| at any vertex.
    v:         sum of squared couplings plus sum of squared fields.
    r_h_lower: sqrt(v), a lower bound on the energy range max H - min H.
    r_h_upper: 2 (sum |J| + sum |h|), an upper bound on the energy range.
    r_h_exact: the exact energy range when it was enumerated, else None.
    """

    k_bar: float
    v: float
    r_h_lower: float
    r_h_upper: float
    r_h_exact: float | None = None

    @property
    def r_h_effective(self) -> float:
        """Exact energy range when known, else the sqrt(v) lower bound."""
        return self.r_h_exact if self.r_h_exact is not None else self.r_h_lower

    def to_dict(self) -> dict:
        return {
            "k_bar": self.k_bar,
            "v": self.v,
            "r_h_lower": self.r_h_lower,
            "r_h_upper": self.r_h_upper,
            "r_h_exact": self.r_h_exact,
        }


def _check_vertex_index(value, position: int, n_vertices: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ModelFormatError(f"edge #{position}: vertex index {value!r} is not an integer")
    idx = int(value)
    if not 0 <= idx < n_vertices:
        raise ModelFormatError(
            f"edge #{position}: vertex {idx} out of range 0..{n_vertices - 1}"
        )
    return idx


class IsingModel:
    """Immutable finite Ising model.

    Parameters
    ----------
    n_vertices:
        Number of spins, at least 1.
    edges:
        Iterable of ``(x, y, J)`` triples with distinct vertex indices.
        Each unordered pair may appear at most once.
    fields:
        Per-vertex local fields; defaults to all zeros.
    """

    def __init__(self, n_vertices: int, edges=(), fields=None):
        if isinstance(n_vertices, bool) or not isinstance(n_vertices, (int, np.integer)):
            raise ModelFormatError(f"n_vertices must be an integer, got {n_vertices!r}")
        n = int(n_vertices)
        if n < 1:
            raise ModelFormatError(f"n_vertices must be at least 1, got {n}")
        self._n = n

        xs: list[int] = []
        ys: list[int] = []
        js: list[float] = []
        seen: set[tuple[int, int]] = set()
        for position, edge in enumerate(edges):
            try:
                x_raw, y_raw, j_raw = edge
            except (TypeError, ValueError):
                raise ModelFormatError(f"edge #{position} must be a [x, y, J] triple") from None
            x = _check_vertex_index(x_raw, position, n)
            y = _check_vertex_index(y_raw, position, n)
            if x == y:
                raise ModelFormatError(f"edge #{position}: self-coupling at vertex {x}")
            if x > y:
                x, y = y, x
            if (x, y) in seen:
                raise ModelFormatError(f"duplicate coupling for pair ({x}, {y})")
            seen.add((x, y))
            j = float(j_raw)
            if not np.isfinite(j):
                raise ModelFormatError(f"edge #{position}: coupling must be finite")
            xs.append(x)
            ys.append(y)
            js.append(j)

        self._edge_x = np.asarray(xs, dtype=np.int64)
        self._edge_y = np.asarray(ys, dtype=np.int64)
        self._edge_j = np.asarray(js, dtype=np.float64)

        if fields is None:
            h = np.zeros(n, dtype=np.float64)
        else:
            h = np.asarray(fields, dtype=np.float64)
            if h.shape != (n,):
                raise ModelFormatError(
                    f"fields has shape {h.shape}, expected ({n},)"
                )
            if not np.all(np.isfinite(h)):
                bad = int(np.flatnonzero(~np.isfinite(h))[0])
                raise ModelFormatError(f"field at vertex {bad} is non-finite")
            h = h.copy()
        self._fields = h

        # adjacency lists, used by O(degree) single-vertex operations
        nbr_idx: list[list[int]] = [[] for _ in range(n)]
        nbr_j: list[list[float]] = [[] for _ in range(n)]
        for x, y, j in zip(xs, ys, js):
            nbr_idx[x].append(y)
            nbr_j[x].append(j)
            nbr_idx[y].append(x)
            nbr_j[y].append(j)
        self._nbr_idx = tuple(np.asarray(a, dtype=np.int64) for a in nbr_idx)
        self._nbr_j = tuple(np.asarray(a, dtype=np.float64) for a in nbr_j)

        for arr in (self._edge_x, self._edge_y, self._edge_j, self._fields):
            arr.flags.writeable = False

    # ------------------------------------------------------------------ basic views

    @property
    def n_vertices(self) -> int:
        return self._n

    @property
    def n_edges(self) -> int:
        return self._edge_j.size

    @property
    def fields(self) -> np.ndarray:
        return self._fields

    @property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(x, y, J) arrays with x < y."""
        return self._edge_x, self._edge_y, self._edge_j

    def edges(self) -> list[tuple[int, int, float]]:
        return [
            (int(x), int(y), float(j))
            for x, y, j in zip(self._edge_x, self._edge_y, self._edge_j)
        ]

    @cached_property
    def coupling_matrix(self) -> np.ndarray:
        """Dense symmetric coupling matrix with zero diagonal."""
        c = np.zeros((self._n, self._n), dtype=np.float64)
        c[self._edge_x, self._edge_y] = self._edge_j
        c[self._edge_y, self._edge_x] = self._edge_j
        c.flags.writeable = False
        return c

    def __repr__(self) -> str:
        return f"IsingModel(n_vertices={self._n}, n_edges={self.n_edges})"

    # ------------------------------------------------------------------ spin checks

    def _as_spins(self, sigma) -> np.ndarray:
        s = np.asarray(sigma, dtype=np.float64)
        if s.shape != (self._n,):
            raise DimensionMismatchError(
                f"spin vector has shape {s.shape}, expected ({self._n},)"
            )
        if not np.all(np.abs(s) == 1.0):
            raise ValueError("spin values must be +1 or -1")
        return s

    def _as_spin_block(self, block) -> np.ndarray:
        s = np.asarray(block)
        if s.ndim != 2 or s.shape[1] != self._n:
            raise DimensionMismatchError(
                f"spin block has shape {s.shape}, expected (m, {self._n})"
            )
        return s

    # ------------------------------------------------------------------ energies

    def hamiltonian(self, sigma) -> float:
        """Energy of one configuration."""
        s = self._as_spins(sigma)
        pair = float(np.dot(self._edge_j, s[self._edge_x] * s[self._edge_y]))
        return -pair - float(np.dot(s, self._fields))

    def hamiltonian_batch(self, block) -> np.ndarray:
        """Energies of many configurations, one per row.

        Accepts int8 rows; columns are accumulated one at a time so the
        full float promotion of a (2^n, n) table is never materialised.
        """
        s = self._as_spin_block(block)
        out = np.zeros(s.shape[0], dtype=np.float64)
        for x, y, j in zip(self._edge_x, self._edge_y, self._edge_j):
            out -= j * (s[:, x] * s[:, y])
        for x in range(self._n):
            hx = self._fields[x]
            if hx != 0.0:
                out -= hx * s[:, x]
        return out

    def cavity_fields(self, sigma) -> np.ndarray:
        """htilde_x(sigma) for every vertex."""
        s = self._as_spins(sigma)
        out = self._fields.copy()
        if self.n_edges:
            np.add.at(out, self._edge_x, self._edge_j * s[self._edge_y])
            np.add.at(out, self._edge_y, self._edge_j * s[self._edge_x])
        return out

    def cavity_batch(self, block) -> np.ndarray:
        """Cavity fields for many configurations, one row each."""
        s = self._as_spin_block(block)
        if self._n <= _DENSE_CAVITY_LIMIT:
            return s.astype(np.float64, copy=False) @ self.coupling_matrix + self._fields
        out = np.broadcast_to(self._fields, s.shape).copy()
        for x, y, j in zip(self._edge_x, self._edge_y, self._edge_j):
            out[:, x] += j * s[:, y]
            out[:, y] += j * s[:, x]
        return out

    def energy_delta_single_flip(self, sigma, x: int) -> float:
        """H(sigma with vertex x flipped) - H(sigma), in O(degree of x)."""
        s = self._as_spins(sigma)
        if not 0 <= x < self._n:
            raise IndexError(f"vertex {x} out of range 0..{self._n - 1}")
        cavity = self._fields[x] + float(np.dot(self._nbr_j[x], s[self._nbr_idx[x]]))
        return 2.0 * cavity * s[x]

    # ------------------------------------------------------------------ constants

    def constants(self, exact_range: bool = False, enum_cap: int | None = None) -> ModelConstants:
        """Size constants; with ``exact_range`` the energy range is enumerated."""
        abs_sum = np.abs(self._fields).copy()
        if self.n_edges:
            np.add.at(abs_sum, self._edge_x, np.abs(self._edge_j))
            np.add.at(abs_sum, self._edge_y, np.abs(self._edge_j))
        k_bar = float(abs_sum.max())
        v = float(np.dot(self._edge_j, self._edge_j) + np.dot(self._fields, self._fields))
        r_h_lower = float(np.sqrt(v))
        r_h_upper = 2.0 * float(np.abs(self._edge_j).sum() + np.abs(self._fields).sum())
        r_h_exact = None
        if exact_range:
            cap = enumeration_cap(enum_cap)
            if self._n > cap:
                raise CapacityError(
                    f"exact energy range needs 2^{self._n} configurations; "
                    f"cap is {cap} vertices"
                )
            from .oracle import enumerate_energies

            energies = enumerate_energies(self)
            r_h_exact = float(energies.max() - energies.min())
        return ModelConstants(
            k_bar=k_bar,
            v=v,
            r_h_lower=r_h_lower,
            r_h_upper=r_h_upper,
            r_h_exact=r_h_exact,
        )


# ---------------------------------------------------------------------- JSON form


def model_from_dict(payload: dict) -> IsingModel:
    """Build a model from its JSON dictionary form."""
    if not isinstance(payload, dict):
        raise ModelFormatError("model document must be a JSON object")
    if "n_vertices" not in payload:
        raise ModelFormatError('model document is missing "n_vertices"')
    unknown = set(payload) - {"n_vertices", "edges", "fields"}
    if unknown:
        raise ModelFormatError(f"unknown model keys: {sorted(unknown)}")
    edges = payload.get("edges", [])
    if not isinstance(edges, list):
        raise ModelFormatError('"edges" must be a list of [x, y, J] triples')
    fields = payload.get("fields")
    if fields is not None and not isinstance(fields, list):
        raise ModelFormatError('"fields" must be a list of numbers')
    return IsingModel(payload["n_vertices"], edges=edges, fields=fields)


def model_to_dict(model: IsingModel) -> dict:
    """JSON dictionary form; inverse of :func:`model_from_dict`."""
    return {
        "n_vertices": model.n_vertices,
        "edges": [[x, y, j] for x, y, j in model.edges()],
        "fields": [float(h) for h in model.fields],
    }


def load_model(path) -> IsingModel:
    """Read a model JSON file, with parse diagnostics on failure."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise ModelFormatError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"model file {path} is not valid JSON: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    return model_from_dict(payload)


def save_model(model: IsingModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")
