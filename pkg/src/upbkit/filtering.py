"""Local filtering, separable superoperators, and non-convertibility gaps.

The witness functional is the total weight a state puts on the target UPB's
span; it vanishes only for states supported inside the target's bound
entangled state, and stays bounded away from zero over the whole filtering
orbit of an inequivalent source.  ``certify_gap`` estimates that gap and the
matching fidelity ceiling by derivative-free multistart optimization over
filter space, probing both interior filters and the closed-form separable
states on the orbit boundary.  The resulting numbers are empirical upper
estimates (multistart gives no lower-bound certificate) and are recorded as
such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import DensityMatrix, _clip_spectrum, kron_all
from .product_search import DEFAULT_SEED
from .upb import UPB, canonicalize, equivalent, perp_qubit, state_of

PROBABILITY_FLOOR = 1e-14
SPECTRAL_NORM_TOL = 1e-10
ENSEMBLE_CAP = 8192
_INVALID = 2.0  # objective placeholder outside [0, 1]


class EquivalentPairError(ValueError):
    """Raised when a gap certificate is requested for an equivalent pair."""


def _spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


class LocalFilter:
    """A product operator with each 2x2 factor normalized to spectral norm 1."""

    __slots__ = ("factors",)

    def __init__(self, factors: Sequence[np.ndarray]):
        fs = []
        for f in factors:
            f = np.asarray(f, dtype=complex)
            if f.shape != (2, 2):
                raise ValueError(f"filter factor must be 2x2, got {f.shape}")
            if abs(_spectral_norm(f) - 1.0) > SPECTRAL_NORM_TOL:
                raise ValueError("filter factor spectral norm is not 1 within 1e-10")
            f = f.copy()
            f.setflags(write=False)
            fs.append(f)
        if len(fs) != 3:
            raise ValueError("a local filter has exactly three factors")
        object.__setattr__(self, "factors", tuple(fs))

    def __setattr__(self, name, value):
        raise AttributeError("LocalFilter is immutable")

    @classmethod
    def from_raw(cls, factors: Sequence[np.ndarray]) -> "LocalFilter":
        """Normalize arbitrary nonzero factors to spectral norm 1."""
        out = []
        for f in factors:
            f = np.asarray(f, dtype=complex)
            s = _spectral_norm(f)
            if s <= 0:
                raise ValueError("cannot normalize a zero factor")
            out.append(f / s)
        return cls(out)

    @classmethod
    def identity(cls) -> "LocalFilter":
        eye = np.eye(2, dtype=complex)
        return cls([eye, eye, eye])

    @property
    def operator(self) -> np.ndarray:
        return kron_all(self.factors)

    def __repr__(self) -> str:
        return "LocalFilter(3 factors)"


class SeparableSuperoperator:
    """A finite family of scaled local filters with ``sum X^dag X <= I``."""

    __slots__ = ("filters", "scales")

    def __init__(self, filters: Sequence[LocalFilter], scales: Sequence[float]):
        filters = tuple(filters)
        scales = tuple(float(s) for s in scales)
        if len(filters) != len(scales):
            raise ValueError("one scale per filter required")
        if not filters:
            raise ValueError("need at least one filter")
        if len(filters) > ENSEMBLE_CAP:
            raise ValueError(f"ensemble exceeds the {ENSEMBLE_CAP}-term cap")
        if any(s < 0 for s in scales):
            raise ValueError("scales must be non-negative")
        total = np.zeros((8, 8), dtype=complex)
        for f, s in zip(filters, scales):
            op = f.operator * s
            total += op.conj().T @ op
        excess = np.linalg.eigvalsh(total).max() - 1.0
        if excess > 1e-9:
            raise ValueError(f"sum of X^dag X exceeds identity by {excess}")
        object.__setattr__(self, "filters", filters)
        object.__setattr__(self, "scales", scales)

    def __setattr__(self, name, value):
        raise AttributeError("SeparableSuperoperator is immutable")

    @classmethod
    def from_filters(cls, filters: Sequence[LocalFilter], scales: Sequence[float] | None = None) -> "SeparableSuperoperator":
        """Rescale the given family so the sum constraint holds with equality."""
        filters = tuple(filters)
        if scales is None:
            scales = [1.0] * len(filters)
        scales = np.asarray([float(s) for s in scales])
        total = np.zeros((8, 8), dtype=complex)
        for f, s in zip(filters, scales):
            op = f.operator * s
            total += op.conj().T @ op
        top = np.linalg.eigvalsh(total).max()
        if top <= 0:
            raise ValueError("all scales are zero")
        return cls(filters, scales / math.sqrt(top))

    def kraus_operators(self) -> list[np.ndarray]:
        return [f.operator * s for f, s in zip(self.filters, self.scales)]


@dataclass(frozen=True)
class OrbitPoint:
    """A point of the filtering orbit (or its boundary, with probability 0)."""

    filter: LocalFilter
    probability: float
    state: DensityMatrix | None
    kind: str = "interior"


def _as_state(dims, out: np.ndarray, p: float) -> DensityMatrix:
    # X rho X^dag is PSD exactly; dividing by a small p amplifies kernel
    # rounding, so any negativity here is noise and is projected away
    out = (out + out.conj().T) / (2 * p)
    w, v = np.linalg.eigh(out)
    if w.min() < -1e-12:
        w = np.clip(w, 0.0, None)
        out = (v * w) @ v.conj().T
        out = (out + out.conj().T) / (2 * out.trace().real)
    return DensityMatrix(dims, out)


def apply_filter(x: LocalFilter, rho: DensityMatrix) -> tuple[DensityMatrix | None, float]:
    """``(X rho X^dag / p, p)`` with ``p = tr(X rho X^dag)``.

    Below the probability floor the filter is kernel-aligned and the state is
    undefined: ``(None, p)`` is returned.  Boundary behavior is handled in
    closed form by :func:`boundary_limit`, never by dividing by a tiny p.
    """
    op = x.operator
    out = op @ rho.matrix @ op.conj().T
    p = float(out.trace().real)
    if p <= PROBABILITY_FLOOR:
        return None, max(p, 0.0)
    return _as_state(rho.dims, out, p), p


def apply_separable(e: SeparableSuperoperator, rho: DensityMatrix) -> tuple[DensityMatrix | None, float]:
    """Normalized output of the superoperator plus its success probability."""
    total = np.zeros_like(rho.matrix)
    for op in e.kraus_operators():
        total = total + op @ rho.matrix @ op.conj().T
    p = float(total.trace().real)
    if p <= PROBABILITY_FLOOR:
        return None, max(p, 0.0)
    return _as_state(rho.dims, total, p), p


def span_overlap(target: UPB, rho: DensityMatrix | np.ndarray) -> float:
    """Total weight of ``rho`` on the target UPB's span, ``sum_j <T_j|rho|T_j>``.

    Zero exactly when the state is supported inside the target's bound
    entangled state; strictly positive everywhere on an inequivalent orbit.
    """
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    value = float(np.einsum("ij,ji->", target.span_projector, mat).real)
    return min(max(value, 0.0), 1.0)


def boundary_limit(
    upb: UPB,
    member: int,
    targets: Sequence[np.ndarray],
    perturbations: Sequence[np.ndarray],
    weights: Sequence[float],
) -> DensityMatrix:
    """Closed-form limit state of filters collapsing onto one UPB member.

    Filters approaching ``|a,b,c><S_member|`` along the perturbation
    directions yield a separable mixture of three product states: each takes
    the target triple ``(a, b, c)`` with one party's state replaced by its
    perturbation direction, weighted by the source state's matrix element at
    the corresponding flipped member factor times the given weight.
    """
    if upb.dims != (2, 2, 2):
        raise ValueError("boundary limits are defined for three-qubit UPBs")
    if not 0 <= member < upb.n:
        raise ValueError(f"member index {member} out of range")
    weights = [float(w) for w in weights]
    if len(weights) != 3 or any(w < 0 for w in weights):
        raise ValueError("need three non-negative weights")
    if sum(weights) <= 0:
        raise ValueError("weights must not all be zero")
    targets = [np.asarray(t, dtype=complex).reshape(2) for t in targets]
    perturbations = [np.asarray(q, dtype=complex).reshape(2) for q in perturbations]
    targets = [t / np.linalg.norm(t) for t in targets]
    perturbations = [q / np.linalg.norm(q) for q in perturbations]
    rho = state_of(upb).matrix
    member_factors = upb.members[member].factors
    out = np.zeros((8, 8), dtype=complex)
    norm = 0.0
    for party in range(3):
        flipped = list(member_factors)
        flipped[party] = perp_qubit(member_factors[party])
        probe = kron_all(flipped)
        coeff = float((probe.conj() @ rho @ probe).real) * weights[party]
        mixture_factors = list(targets)
        mixture_factors[party] = perturbations[party]
        psi = kron_all(mixture_factors)
        out += coeff * np.outer(psi, psi.conj())
        norm += coeff
    if norm <= 0:
        raise ValueError("limit state has zero weight (degenerate directions)")
    out = (out + out.conj().T) / (2 * norm)
    return DensityMatrix(upb.dims, out)


@dataclass(frozen=True)
class GapSearchConfig:
    """Multistart budget for the gap optimizers.

    ``budget`` counts objective evaluations per interior restart; boundary
    probes get their own restart pool per UPB member.
    """

    restarts: int = 200
    budget: int = 5000
    seed: int = DEFAULT_SEED
    slack: float = 1e-9
    boundary_restarts: int = 64
    boundary_budget: int = 3000

    def __post_init__(self):
        if self.restarts < 1 or self.boundary_restarts < 1:
            raise ValueError("restart counts must be positive")
        if self.budget < 100 or self.boundary_budget < 100:
            raise ValueError("budgets must allow at least a few sweeps")
        if self.slack < 0:
            raise ValueError("slack must be non-negative")


@dataclass(frozen=True)
class GapCertificate:
    """Empirical non-convertibility record for an inequivalent UPB pair.

    Multistart gives no certified global optimum: ``delta_min`` is an upper
    estimate of the true orbit-wide witness minimum and ``fidelity_max`` a
    lower estimate of the true fidelity supremum, recorded with full
    optimizer provenance so runs are reproducible.  ``epsilon = delta_min/2``
    via the square-root chain, and the consistency flag asserts
    ``fidelity_max <= 1 - epsilon + slack``.
    """

    source_angles: tuple[float, float, float]
    target_angles: tuple[float, float, float]
    delta_min: float
    fidelity_max: float
    epsilon: float
    slack: float
    consistent: bool
    argmin_kind: str
    span_overlap_at_argmax: float
    perp_weight_at_argmax: float
    perp_root_trace_at_argmax: float
    restarts: int
    budget: int
    boundary_restarts: int
    boundary_budget: int
    seed: int
    interior_optima: tuple[float, ...]
    boundary_optima: tuple[float, ...]
    fidelity_optima: tuple[float, ...]
    status: str = "empirical"

    @property
    def perp_weight_bound(self) -> float:
        return 1.0 - self.delta_min

    @property
    def perp_root_trace_bound(self) -> float:
        return 2.0 * math.sqrt(max(1.0 - self.delta_min, 0.0))

    @property
    def fidelity_bound(self) -> float:
        return 1.0 - self.delta_min / 2.0

    def to_document(self) -> dict:
        return {
            "status": self.status,
            "source_angles": list(self.source_angles),
            "target_angles": list(self.target_angles),
            "delta_min": self.delta_min,
            "fidelity_max": self.fidelity_max,
            "epsilon": self.epsilon,
            "slack": self.slack,
            "consistent": self.consistent,
            "argmin_kind": self.argmin_kind,
            "chain": {
                "span_overlap_at_argmax": self.span_overlap_at_argmax,
                "perp_weight_at_argmax": self.perp_weight_at_argmax,
                "perp_weight_bound": self.perp_weight_bound,
                "perp_root_trace_at_argmax": self.perp_root_trace_at_argmax,
                "perp_root_trace_bound": self.perp_root_trace_bound,
                "fidelity_bound": self.fidelity_bound,
            },
            "optimizer": {
                "seed": self.seed,
                "restarts": self.restarts,
                "budget": self.budget,
                "boundary_restarts": self.boundary_restarts,
                "boundary_budget": self.boundary_budget,
                "interior_optima": list(self.interior_optima),
                "boundary_optima": list(self.boundary_optima),
                "fidelity_optima": list(self.fidelity_optima),
            },
        }


# ---------------------------------------------------------------------------
# batched derivative-free optimization


def _pattern_search(objective, x0: np.ndarray, budget: int, initial_step: float = 0.25, min_step: float = 1e-7):
    """Coordinate-adaptive compass search run over all restarts at once.

    Per restart and sweep each coordinate is probed both ways from the
    current point; the per-restart step halves after sweeps without
    improvement.  ``budget`` counts objective evaluations per restart.
    """
    x = x0.copy()
    n, p = x.shape
    fx = objective(x)
    step = np.full(n, initial_step)
    sweeps = max(1, budget // (2 * p))
    for _ in range(sweeps):
        improved = np.zeros(n, dtype=bool)
        for k in range(p):
            for sign in (1.0, -1.0):
                trial = x.copy()
                trial[:, k] += sign * step
                ft = objective(trial)
                better = ft < fx
                if better.any():
                    x[better] = trial[better]
                    fx = np.where(better, ft, fx)
                    improved |= better
        step = np.where(improved, step, step * 0.5)
        if (step < min_step).all():
            break
    return x, fx


def _filters_from_params(params: np.ndarray) -> np.ndarray:
    """(n, 24) real parameters -> (n, 3, 2, 2) spectral-norm-1 factors."""
    raw = params.reshape(params.shape[0], 3, 8)
    fac = (raw[..., :4] + 1j * raw[..., 4:]).reshape(params.shape[0], 3, 2, 2)
    gram = np.einsum("nfij,nfik->nfjk", fac.conj(), fac)
    tr = np.einsum("nfii->nf", gram).real
    det = (gram[..., 0, 0] * gram[..., 1, 1] - gram[..., 0, 1] * gram[..., 1, 0]).real
    disc = np.sqrt(np.clip(tr * tr - 4 * det, 0.0, None))
    top = np.sqrt(np.clip((tr + disc) / 2, 1e-300, None))
    return fac / top[..., None, None]


def _kron3(fac: np.ndarray) -> np.ndarray:
    """(n, 3, 2, 2) factors -> (n, 8, 8) product operators."""
    return np.einsum(
        "nij,nkl,nmo->nikmjlo", fac[:, 0], fac[:, 1], fac[:, 2]
    ).reshape(fac.shape[0], 8, 8)


def _identity_params() -> np.ndarray:
    one = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    return np.concatenate([one, one, one])


def _interior_objective(rho_mat: np.ndarray, proj: np.ndarray, mode: str, perp: np.ndarray | None = None):
    def objective(params: np.ndarray) -> np.ndarray:
        fac = _filters_from_params(params)
        ops = _kron3(fac)
        out = ops @ rho_mat @ ops.conj().transpose(0, 2, 1)
        p = np.einsum("nii->n", out).real
        valid = p > PROBABILITY_FLOOR
        safe_p = np.where(valid, p, 1.0)
        if mode == "overlap":
            value = np.einsum("nij,ji->n", out, proj).real / safe_p
        else:  # negative fidelity to the normalized perp projector / 4
            inner = perp @ (out / safe_p[:, None, None]) @ perp
            inner = (inner + inner.conj().transpose(0, 2, 1)) / 2
            w = _clip_spectrum(np.linalg.eigvalsh(inner))
            value = -0.5 * np.sqrt(np.clip(w, 0.0, None)).sum(axis=1)
        return np.where(valid, value, _INVALID)

    return objective


def _qubit_from_tp(t: np.ndarray, phi: np.ndarray) -> np.ndarray:
    out = np.empty(t.shape + (2,), dtype=complex)
    out[..., 0] = np.cos(t)
    out[..., 1] = np.sin(t) * np.exp(1j * phi)
    return out


def _boundary_objective(upb: UPB, member: int, proj: np.ndarray):
    rho = state_of(upb).matrix
    member_factors = upb.members[member].factors
    coeffs = []
    for party in range(3):
        flipped = list(member_factors)
        flipped[party] = perp_qubit(member_factors[party])
        probe = kron_all(flipped)
        coeffs.append(float((probe.conj() @ rho @ probe).real))
    coeffs = np.array(coeffs)

    def objective(params: np.ndarray) -> np.ndarray:
        # 6 states (a, b, c, alpha, beta, gamma) as (t, phi) pairs + 3 raw weights
        t = params[:, 0:12:2]
        phi = params[:, 1:12:2]
        states = _qubit_from_tp(t, phi)  # (n, 6, 2)
        w = params[:, 12:] ** 2
        lam = coeffs[None, :] * w  # (n, 3)
        total = np.zeros(params.shape[0])
        denom = lam.sum(axis=1)
        valid = denom > 1e-280
        safe = np.where(valid, denom, 1.0)
        for party in range(3):
            mix = [states[:, 0], states[:, 1], states[:, 2]]
            mix[party] = states[:, 3 + party]
            psi = np.einsum("ni,nj,nk->nijk", mix[0], mix[1], mix[2]).reshape(-1, 8)
            q = np.einsum("ni,ij,nj->n", psi.conj(), proj, psi).real
            total = total + lam[:, party] * q
        return np.where(valid, total / safe, _INVALID)

    return objective


def _minimize_overlap_detailed(source: UPB, target: UPB, config: GapSearchConfig):
    rho = state_of(source).matrix
    proj = target.span_projector
    rng = np.random.default_rng(config.seed)
    starts = rng.standard_normal((config.restarts, 24))
    starts[0] = _identity_params()
    objective = _interior_objective(rho, proj, "overlap")
    xi, fi = _pattern_search(objective, starts, config.budget)
    boundary_best = np.inf
    boundary_arg = None
    boundary_optima = []
    for member in range(source.n):
        obj_b = _boundary_objective(source, member, proj)
        b0 = np.empty((config.boundary_restarts, 15))
        b0[:, 0:12:2] = rng.uniform(0.0, math.pi, (config.boundary_restarts, 6))
        b0[:, 1:12:2] = rng.uniform(0.0, 2 * math.pi, (config.boundary_restarts, 6))
        b0[:, 12:] = rng.standard_normal((config.boundary_restarts, 3))
        xb, fb = _pattern_search(obj_b, b0, config.boundary_budget)
        boundary_optima.extend(fb.tolist())
        k = int(np.argmin(fb))
        if fb[k] < boundary_best:
            boundary_best = float(fb[k])
            boundary_arg = (member, xb[k])
    k = int(np.argmin(fi))
    interior_best = float(fi[k])
    if interior_best <= boundary_best:
        fac = _filters_from_params(xi[k][None, :])[0]
        filt = LocalFilter.from_raw(list(fac))
        state, p = apply_filter(filt, state_of(source))
        point = OrbitPoint(filt, p, state, "interior")
        best = interior_best
    else:
        member, xb = boundary_arg
        t, phi = xb[0:12:2], xb[1:12:2]
        states = _qubit_from_tp(t, phi)
        weights = xb[12:] ** 2
        targets = [states[0], states[1], states[2]]
        perts = [states[3], states[4], states[5]]
        state = boundary_limit(source, member, targets, perts, weights)
        mf = source.members[member].factors
        filt = LocalFilter.from_raw(
            [np.outer(t_, f.conj()) for t_, f in zip(targets, mf)]
        )
        point = OrbitPoint(filt, 0.0, state, "boundary")
        best = boundary_best
    return max(best, 0.0), point, fi.tolist(), boundary_optima


def _maximize_fidelity_detailed(source: UPB, target: UPB, config: GapSearchConfig):
    rho = state_of(source).matrix
    d = source.total_dim
    perp = np.eye(d, dtype=complex) - target.span_projector
    rng = np.random.default_rng(config.seed + 1)
    starts = rng.standard_normal((config.restarts, 24))
    starts[0] = _identity_params()
    objective = _interior_objective(rho, target.span_projector, "fidelity", perp)
    xi, fi = _pattern_search(objective, starts, config.budget)
    k = int(np.argmin(fi))
    fac = _filters_from_params(xi[k][None, :])[0]
    filt = LocalFilter.from_raw(list(fac))
    state, p = apply_filter(filt, state_of(source))
    point = OrbitPoint(filt, p, state, "interior")
    best = min(max(-float(fi[k]), 0.0), 1.0)
    return best, point, (-fi).tolist()


def minimize_span_overlap(source: UPB, target: UPB, config: GapSearchConfig | None = None) -> tuple[float, OrbitPoint]:
    """Empirical minimum of the witness functional over the filtering orbit
    of ``source`` (interior filters plus boundary-limit probes)."""
    config = config or GapSearchConfig()
    best, point, _, _ = _minimize_overlap_detailed(source, target, config)
    return best, point


def maximize_fidelity(source: UPB, target: UPB, config: GapSearchConfig | None = None) -> tuple[float, OrbitPoint]:
    """Empirical maximum fidelity between the target's bound entangled state
    and single-filter outputs of the source's."""
    config = config or GapSearchConfig()
    best, point, _ = _maximize_fidelity_detailed(source, target, config)
    return best, point


def certify_gap(source: UPB, target: UPB, config: GapSearchConfig | None = None) -> GapCertificate:
    """Run both optimizers and assemble the non-convertibility record.

    The returned ``delta_min`` also folds in the witness value at the
    fidelity argmax (itself an orbit point), so the recorded square-root
    chain holds at that state by construction.
    """
    config = config or GapSearchConfig()
    if equivalent(source, target) is not None:
        raise EquivalentPairError("source and target are equivalent; the gap is undefined")
    angles_s, _ = canonicalize(source)
    angles_t, _ = canonicalize(target)
    delta, argmin_point, interior_optima, boundary_optima = _minimize_overlap_detailed(
        source, target, config
    )
    fmax, argmax_point, fidelity_optima = _maximize_fidelity_detailed(source, target, config)
    overlap_at_argmax = span_overlap(target, argmax_point.state)
    delta = min(delta, overlap_at_argmax)
    d = source.total_dim
    perp = np.eye(d, dtype=complex) - target.span_projector
    inner = perp @ argmax_point.state.matrix @ perp
    inner = (inner + inner.conj().T) / 2
    w = _clip_spectrum(np.clip(np.linalg.eigvalsh(inner), 0.0, None))
    perp_weight = float(w.sum())
    perp_root = float(np.sqrt(w).sum())
    epsilon = delta / 2.0
    consistent = fmax <= 1.0 - epsilon + config.slack
    return GapCertificate(
        source_angles=angles_s.as_tuple(),
        target_angles=angles_t.as_tuple(),
        delta_min=delta,
        fidelity_max=fmax,
        epsilon=epsilon,
        slack=config.slack,
        consistent=consistent,
        argmin_kind=argmin_point.kind,
        span_overlap_at_argmax=overlap_at_argmax,
        perp_weight_at_argmax=perp_weight,
        perp_root_trace_at_argmax=perp_root,
        restarts=config.restarts,
        budget=config.budget,
        boundary_restarts=config.boundary_restarts,
        boundary_budget=config.boundary_budget,
        seed=config.seed,
        interior_optima=tuple(interior_optima),
        boundary_optima=tuple(boundary_optima),
        fidelity_optima=tuple(fidelity_optima),
    )
