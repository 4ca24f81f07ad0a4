"""Product-vector search inside a linear subspace.

Local states are parameterized by hyperspherical angles and phases (first
component real-positive), and the squared norm of the out-of-subspace
component is minimized by damped Gauss-Newton with a numerically evaluated
Jacobian, run over many starts at once.  Completeness is heuristic at the
configured resolution: the search documents a found-set, not a certified
enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .linalg import complement_basis

DEFAULT_SEED = 101


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the multistart search.

    ``grid_resolution`` scales the number of starts (resolution^2 per polar
    angle); raising it only adds starts, so hits found at a lower resolution
    are kept when re-seeded via ``seed_hits``.
    """

    grid_resolution: int = 16
    residual_tol: float = 1e-9
    max_iterations: int = 60
    dedup_tol: float = 1e-6
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.grid_resolution < 8:
            raise ValueError("grid_resolution must be at least 8")
        if self.residual_tol <= 0 or self.dedup_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


class Subspace:
    """A subspace of a multipartite space, held as orthonormal basis columns."""

    __slots__ = ("dims", "basis", "_perp_basis")

    def __init__(self, dims: Sequence[int], basis) -> None:
        dims = tuple(int(d) for d in dims)
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 2:
            raise ValueError("basis must be a matrix of columns")
        total = int(np.prod(dims))
        if basis.shape[0] != total:
            raise ValueError(f"basis lives in dimension {basis.shape[0]}, dims give {total}")
        gram = basis.conj().T @ basis
        if np.abs(gram - np.eye(basis.shape[1])).max() > 1e-12:
            raise ValueError("basis columns are not orthonormal within 1e-12")
        basis = basis.copy()
        basis.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "_perp_basis", None)

    def __setattr__(self, name, value):
        raise AttributeError("Subspace is immutable")

    @classmethod
    def orthonormalized(cls, dims: Sequence[int], vectors) -> "Subspace":
        """Build from a spanning set, orthonormalizing by QR."""
        v = np.asarray(vectors, dtype=complex)
        if v.ndim != 2:
            v = np.column_stack([np.asarray(x, dtype=complex).reshape(-1) for x in vectors])
        q, r = np.linalg.qr(v)
        if np.abs(np.diag(r)).min() <= 1e-12 * max(np.abs(np.diag(r)).max(), 1.0):
            raise ValueError("spanning set is rank deficient")
        return cls(dims, q)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def total_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    @property
    def perp_basis(self) -> np.ndarray:
        cached = self._perp_basis
        if cached is None:
            cached = complement_basis(self.basis)
            cached.setflags(write=False)
            object.__setattr__(self, "_perp_basis", cached)
        return cached

    @property
    def perp_projector(self) -> np.ndarray:
        d = self.total_dim
        return np.eye(d, dtype=complex) - self.projector

    def complement(self) -> "Subspace":
        return Subspace(self.dims, self.perp_basis)


def normalize_partition(partition, n_parties: int) -> tuple[tuple[int, ...], ...]:
    """Sorted, disjoint groups covering all parties."""
    groups = [tuple(sorted(int(p) for p in g)) for g in partition]
    groups.sort(key=lambda g: g[0] if g else -1)
    flat = [p for g in groups for p in g]
    if sorted(flat) != list(range(n_parties)) or len(flat) != len(set(flat)):
        raise ValueError(f"partition {partition} is not a disjoint cover of {n_parties} parties")
    return tuple(groups)


def finest_partition(n_parties: int) -> tuple[tuple[int, ...], ...]:
    return tuple((p,) for p in range(n_parties))


def _group_dims(dims: Sequence[int], partition) -> tuple[int, ...]:
    return tuple(int(np.prod([dims[p] for p in g])) for g in partition)


def _interleave(dims, partition, group_vectors: list[np.ndarray]) -> np.ndarray:
    """Assemble batched full tensors from batched per-group vectors."""
    n_parties = len(dims)
    operands = []
    for g, vec in zip(partition, group_vectors):
        shaped = vec.reshape(vec.shape[0], *[dims[p] for p in g])
        operands.extend([shaped, [0] + [p + 1 for p in g]])
    operands.append([0] + [p + 1 for p in range(n_parties)])
    out = np.einsum(*operands)
    return out.reshape(out.shape[0], -1)


def group_factor(member_factors: Sequence[np.ndarray], group: tuple[int, ...]) -> np.ndarray:
    """Kron of a member's per-party factors over one partition group."""
    out = None
    for p in group:
        f = np.asarray(member_factors[p], dtype=complex)
        out = f if out is None else np.kron(out, f)
    return out


@dataclass(frozen=True)
class ProductVectorHit:
    """A product vector found inside the subspace, factored per group."""

    dims: tuple[int, ...]
    partition: tuple[tuple[int, ...], ...]
    factors: tuple[np.ndarray, ...]
    residual: float

    @property
    def tensor(self) -> np.ndarray:
        vecs = [f.reshape(1, -1) for f in self.factors]
        return _interleave(self.dims, self.partition, vecs)[0]

    def overlaps(self, member_factors: Sequence[np.ndarray]) -> tuple[float, ...]:
        """Per-group |<hit factor | member factor>| against per-party factors."""
        return tuple(
            float(abs(np.vdot(group_factor(member_factors, g), f)))
            for g, f in zip(self.partition, self.factors)
        )

    def matches(self, member_factors: Sequence[np.ndarray], tol: float = 1e-6) -> bool:
        return all(ov >= 1 - tol for ov in self.overlaps(member_factors))


def residual(factors: Sequence[np.ndarray], subspace: Subspace, partition=None) -> float:
    """Out-of-subspace norm of the (normalized) product of ``factors``."""
    if partition is None:
        partition = finest_partition(len(subspace.dims))
    partition = normalize_partition(partition, len(subspace.dims))
    gdims = _group_dims(subspace.dims, partition)
    vecs = []
    for f, d in zip(factors, gdims):
        f = np.asarray(f, dtype=complex).reshape(-1)
        if f.shape[0] != d:
            raise ValueError(f"factor of length {f.shape[0]} does not match group dim {d}")
        vecs.append((f / np.linalg.norm(f)).reshape(1, -1))
    if len(vecs) != len(partition):
        raise ValueError("number of factors does not match partition")
    v = _interleave(subspace.dims, partition, vecs)[0]
    perp = subspace.perp_basis
    if perp.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(perp.conj().T @ v))


# ---------------------------------------------------------------------------
# parameterization: per group of dimension d, (d-1) polar angles then (d-1)
# phases; amplitudes follow the hyperspherical chain with component 0 real.

def _param_layout(gdims):
    sizes = [2 * (d - 1) for d in gdims]
    offsets = np.cumsum([0] + sizes)
    return sizes, offsets


def _states_from_params(params: np.ndarray, gdims) -> list[np.ndarray]:
    states = []
    _, offsets = _param_layout(gdims)
    for gi, d in enumerate(gdims):
        block = params[:, offsets[gi]:offsets[gi + 1]]
        t = block[:, : d - 1]
        phi = block[:, d - 1:]
        cos = np.cos(t)
        sin = np.sin(t)
        amps = np.empty((params.shape[0], d))
        running = np.ones(params.shape[0])
        for k in range(d - 1):
            amps[:, k] = running * cos[:, k]
            running = running * sin[:, k]
        amps[:, d - 1] = running
        state = amps.astype(complex)
        state[:, 1:] = state[:, 1:] * np.exp(1j * phi)
        states.append(state)
    return states


def _params_from_state(vec: np.ndarray) -> np.ndarray:
    """Angles and phases reproducing ``vec`` up to global phase."""
    v = np.asarray(vec, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    if abs(v[0]) > 1e-12:
        v = v * (np.conj(v[0]) / abs(v[0]))
    d = v.shape[0]
    mags = np.abs(v)
    ts = []
    running = 1.0
    for k in range(d - 1):
        c = min(max(mags[k] / running, 0.0), 1.0) if running > 1e-15 else 1.0
        tk = math.acos(c)
        ts.append(tk)
        running = running * math.sin(tk)
    phis = list(np.angle(v[1:]))
    return np.array(ts + phis)


def _start_params(rng: np.random.Generator, n_starts: int, gdims) -> np.ndarray:
    blocks = []
    for d in gdims:
        t = rng.uniform(0.0, math.pi / 2, size=(n_starts, d - 1))
        phi = rng.uniform(0.0, 2 * math.pi, size=(n_starts, d - 1))
        blocks.append(np.concatenate([t, phi], axis=1))
    return np.concatenate(blocks, axis=1)


def _refine(params: np.ndarray, residual_fn, max_iterations: int) -> tuple[np.ndarray, np.ndarray]:
    """Batched damped Gauss-Newton.

    Chart phase parameters lose rank when a state component vanishes, so the
    normal equations can be arbitrarily ill-conditioned; for starts whose
    condition number exceeds 1e8 a Cauchy gradient-descent trial competes with
    the damped step and the larger improvement wins.
    """
    h = 1e-7
    n, p = params.shape
    r = residual_fn(params)
    rn2 = np.einsum("nr,nr->n", r, r)
    lam = np.full(n, 1e-8)
    eye = np.eye(p)
    for _ in range(max_iterations):
        active = rn2 > 1e-26
        if not active.any():
            break
        jac = np.empty((n, r.shape[1], p))
        for k in range(p):
            shifted = params.copy()
            shifted[:, k] += h
            jac[:, :, k] = (residual_fn(shifted) - r) / h
        jtj = np.einsum("nrp,nrq->npq", jac, jac)
        jtr = np.einsum("nrp,nr->np", jac, r)
        w = np.linalg.eigvalsh(jtj)
        cond = w[:, -1] / np.clip(w[:, 0], 1e-300, None)
        ill = (cond > 1e8) | (w[:, 0] <= 0)
        lhs = jtj + (lam[:, None, None] + 1e-9) * eye
        step_gn = -np.linalg.solve(lhs, jtr[:, :, None])[:, :, 0]
        step_gn = np.where(active[:, None], step_gn, 0.0)
        trial_gn = params + step_gn
        r_gn = residual_fn(trial_gn)
        rn2_gn = np.einsum("nr,nr->n", r_gn, r_gn)
        jg = np.einsum("nrp,np->nr", jac, jtr)
        denom = np.clip(np.einsum("nr,nr->n", jg, jg), 1e-300, None)
        alpha = np.einsum("np,np->n", jtr, jtr) / denom
        step_gd = -alpha[:, None] * jtr
        step_gd = np.where((active & ill)[:, None], step_gd, 0.0)
        trial_gd = params + step_gd
        r_gd = residual_fn(trial_gd)
        rn2_gd = np.einsum("nr,nr->n", r_gd, r_gd)
        take_gd = ill & (rn2_gd < rn2_gn)
        trial = np.where(take_gd[:, None], trial_gd, trial_gn)
        r_trial = np.where(take_gd[:, None], r_gd, r_gn)
        rn2_trial = np.where(take_gd, rn2_gd, rn2_gn)
        better = (rn2_trial < rn2) & active
        params = np.where(better[:, None], trial, params)
        r = np.where(better[:, None], r_trial, r)
        rn2 = np.where(better, rn2_trial, rn2)
        lam = np.clip(np.where(better, lam * 0.3, lam * 10.0), 1e-12, 1e9)
    return params, np.sqrt(rn2)


def find_product_vectors(
    subspace: Subspace,
    partition=None,
    config: SearchConfig | None = None,
    seed_hits: Iterable[ProductVectorHit] = (),
) -> list[ProductVectorHit]:
    """All product vectors (for the given partition) found in the subspace.

    Hits are deduplicated up to global phase and sorted by residual; the
    empty list is a valid result.  Identical configs (including seed) give
    identical hit lists.
    """
    config = config or SearchConfig()
    dims = subspace.dims
    if partition is None:
        partition = finest_partition(len(dims))
    partition = normalize_partition(partition, len(dims))
    gdims = _group_dims(dims, partition)
    n_polar = sum(d - 1 for d in gdims)
    n_starts = config.grid_resolution ** 2 * n_polar
    rng = np.random.default_rng(config.seed)
    starts = _start_params(rng, n_starts, gdims)
    seeded = []
    for hit in seed_hits:
        if normalize_partition(hit.partition, len(dims)) != partition:
            raise ValueError("seed hit partition does not match")
        seeded.append(np.concatenate([_params_from_state(f) for f in hit.factors]))
    if seeded:
        starts = np.vstack([starts, np.array(seeded)])

    perp = subspace.perp_basis
    if perp.shape[1] == 0:
        raise ValueError("subspace is the full space; every product vector lies in it")
    perp_conj = perp.conj()

    def residual_fn(params):
        states = _states_from_params(params, gdims)
        v = _interleave(dims, partition, states)
        rc = v @ perp_conj
        return np.concatenate([rc.real, rc.imag], axis=1)

    refined, resnorm = _refine(starts, residual_fn, config.max_iterations)
    converged = resnorm <= config.residual_tol
    if not converged.any():
        return []
    order = np.argsort(resnorm[converged], kind="stable")
    cand_params = refined[converged][order]
    states = _states_from_params(cand_params, gdims)
    hits: list[ProductVectorHit] = []
    for i in range(cand_params.shape[0]):
        factors = []
        for gi in range(len(gdims)):
            f = states[gi][i].copy()
            idx = int(np.argmax(np.abs(f)))
            f = f * (np.conj(f[idx]) / abs(f[idx]))
            f = f / np.linalg.norm(f)
            factors.append(f)
        dup = False
        for kept in hits:
            if all(
                abs(np.vdot(a, b)) > 1 - config.dedup_tol
                for a, b in zip(kept.factors, factors)
            ):
                dup = True
                break
        if dup:
            continue
        res = residual(factors, subspace, partition)
        if res > config.residual_tol:
            continue
        for f in factors:
            f.setflags(write=False)
        hits.append(ProductVectorHit(dims, partition, tuple(factors), res))
    hits.sort(key=lambda h: h.residual)
    return hits


def is_extendible(members, config: SearchConfig | None = None) -> ProductVectorHit | None:
    """Best product vector in the orthogonal complement of the members' span,
    or None when the search finds nothing (the family is unextendible at the
    configured resolution)."""
    members = list(members)
    if not members:
        raise ValueError("need at least one member")
    dims = members[0].dims
    stack = np.array([m.tensor for m in members])
    gram_err = np.abs(stack @ stack.conj().T - np.eye(len(members))).max()
    if gram_err > 1e-10:
        raise ValueError(f"members are not orthonormal (error {gram_err})")
    comp = complement_basis(stack.T)
    if comp.shape[1] == 0:
        return None
    sub = Subspace(dims, comp)
    hits = find_product_vectors(sub, finest_partition(len(dims)), config)
    return hits[0] if hits else None
