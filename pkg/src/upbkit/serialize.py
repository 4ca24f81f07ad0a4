"""Shared wire formats.

Complex scalars serialize as two-element real arrays ``[re, im]``, matrices as
nested row-major arrays.  A UPB document carries ``dims`` and ``members``
(each member a list of per-party factors); the canonical-angle shorthand
``{"canonical": [tA, tB, tC]}`` is accepted wherever a UPB document is.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

SCHEMA_VERSION = 1


def complex_to_pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def pair_to_complex(pair) -> complex:
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise ValueError(f"expected [re, im] pair, got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def vector_to_lists(v: np.ndarray) -> list[list[float]]:
    return [complex_to_pair(z) for z in np.asarray(v, dtype=complex).reshape(-1)]


def vector_from_lists(data) -> np.ndarray:
    return np.array([pair_to_complex(p) for p in data], dtype=complex)


def matrix_to_lists(m: np.ndarray) -> list[list[list[float]]]:
    m = np.asarray(m, dtype=complex)
    return [[complex_to_pair(z) for z in row] for row in m]


def matrix_from_lists(data) -> np.ndarray:
    return np.array([[pair_to_complex(z) for z in row] for row in data], dtype=complex)


def upb_to_document(upb) -> dict[str, Any]:
    return {
        "schema": SCHEMA_VERSION,
        "dims": list(upb.dims),
        "members": [[vector_to_lists(f) for f in m.factors] for m in upb.members],
    }


def upb_from_document(doc: dict):
    """Build a UPB from a document; accepts the canonical-angle shorthand and
    whole CLI reports (the ``result`` of ``upbkit build``)."""
    from .upb import UPB, CanonicalAngles, ProductState, build_canonical

    if not isinstance(doc, dict):
        raise ValueError("UPB document must be a mapping")
    if "members" not in doc and "canonical" not in doc and isinstance(doc.get("result"), dict):
        doc = doc["result"]
    if "canonical" in doc:
        angles = doc["canonical"]
        if not isinstance(angles, (list, tuple)) or len(angles) != 3:
            raise ValueError("canonical shorthand requires three angles")
        return build_canonical(CanonicalAngles(*(float(a) for a in angles)))
    try:
        dims = tuple(int(d) for d in doc["dims"])
        raw_members = doc["members"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed UPB document: {exc}") from exc
    members = []
    for raw in raw_members:
        if len(raw) != len(dims):
            raise ValueError(
                f"member has {len(raw)} factors, expected {len(dims)}"
            )
        factors = [vector_from_lists(f) for f in raw]
        for f, d in zip(factors, dims):
            if f.shape != (d,):
                raise ValueError(f"factor of length {f.shape[0]} does not match dim {d}")
        members.append(ProductState(factors))
    return UPB(members, dims=dims)


def load_upb_file(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return upb_from_document(doc)


def dumps_report(report: dict) -> str:
    """Deterministic JSON text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
