"""Integer QUBO cost functions: representation, evaluation, and exact minima.

Variables are 0-indexed integers in [0, n) throughout the Python API.
The JSON interchange format uses 1-based indices (see :func:`qubo_from_dict`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapExceeded, InputError

Assignment = tuple[int, ...]
"""One bit per variable, index position = variable index."""

INT64_MAX = 2**63 - 1
DEFAULT_BRUTE_FORCE_CAP = 24

# Chunk size for vectorised enumeration; keeps peak memory around a few MB.
_ENUM_CHUNK = 1 << 18


def _coerce_coefficient(value: object, where: str) -> int:
    if isinstance(value, bool):
        raise InputError(f"{where}: boolean is not a valid coefficient")
    if isinstance(value, float) or isinstance(value, Fraction):
        raise InputError(
            f"{where}: non-integer coefficient {value!r}; "
            "use normalize_to_integers() for rational input"
        )
    try:
        out = int(value)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: not an integer: {value!r}") from exc
    if out != value:
        raise InputError(f"{where}: not an integer: {value!r}")
    if abs(out) > INT64_MAX:
        raise CapExceeded(f"{where}: coefficient {out} exceeds the 64-bit range")
    return out


def _coerce_index(value: object, n: int, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"{where}: variable index must be an integer, got {value!r}")
    if not 0 <= value < n:
        raise InputError(f"{where}: variable index {value} out of range [0, {n})")
    return value


@dataclass
class QuboInstance:
    """Sparse integer quadratic cost function over binary variables.

    Represents  f(x) = sum_i linear[i] * x_i + sum_{i<j} quadratic[i,j] * x_i * x_j
    with x_i in {0, 1}.  Coefficients are 64-bit-bounded integers; exceeding
    that range is a hard error rather than wraparound.  Zero coefficients are
    dropped so two instances describing the same polynomial compare equal.

    Instances are immutable by convention and safe to share across threads.
    """

    n: int
    linear: dict[int, int] = field(default_factory=dict)
    quadratic: dict[tuple[int, int], int] = field(default_factory=dict)
    scale: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise InputError(f"variable count must be a positive integer, got {self.n!r}")
        lin: dict[int, int] = {}
        for i, c in dict(self.linear).items():
            i = _coerce_index(i, self.n, "linear")
            c = _coerce_coefficient(c, f"linear[{i}]")
            if c != 0:
                lin[i] = c
        quad: dict[tuple[int, int], int] = {}
        for key, c in dict(self.quadratic).items():
            try:
                i, j = key
            except (TypeError, ValueError) as exc:
                raise InputError(f"quadratic key {key!r} is not a pair") from exc
            i = _coerce_index(i, self.n, "quadratic")
            j = _coerce_index(j, self.n, "quadratic")
            if not i < j:
                raise InputError(f"quadratic key ({i}, {j}) must satisfy i < j")
            c = _coerce_coefficient(c, f"quadratic[{i},{j}]")
            if c != 0:
                quad[(i, j)] = c
        self.linear = lin
        self.quadratic = quad
        scale = Fraction(self.scale)
        if scale <= 0:
            raise InputError(f"scale must be positive, got {scale}")
        self.scale = scale

    def abs_coefficient_sum(self) -> int:
        """Upper bound on |f(x)|; also drives enumeration overflow checks."""
        return sum(abs(c) for c in self.linear.values()) + sum(
            abs(c) for c in self.quadratic.values()
        )

    def scaled(self, factor: int) -> "QuboInstance":
        """Return the instance with every coefficient multiplied by ``factor`` > 0."""
        if isinstance(factor, bool) or not isinstance(factor, int) or factor <= 0:
            raise InputError(f"scaling factor must be a positive integer, got {factor!r}")
        return QuboInstance(
            n=self.n,
            linear={i: c * factor for i, c in self.linear.items()},
            quadratic={k: c * factor for k, c in self.quadratic.items()},
            scale=self.scale * factor,
        )

    def __repr__(self) -> str:
        return (
            f"QuboInstance(n={self.n}, linear_terms={len(self.linear)}, "
            f"quadratic_terms={len(self.quadratic)})"
        )


def check_assignment(n: int, assignment: Sequence[int] | str) -> Assignment:
    """Validate and canonicalise an assignment for an n-variable instance."""
    if isinstance(assignment, str):
        raw: Iterable[object] = (int(ch) if ch in "01" else ch for ch in assignment)
    else:
        raw = assignment
    bits = []
    for b in raw:
        if isinstance(b, bool):
            bits.append(int(b))
        elif isinstance(b, (int, np.integer)) and int(b) in (0, 1):
            bits.append(int(b))
        else:
            raise InputError(f"assignment entries must be 0 or 1, got {b!r}")
    if len(bits) != n:
        raise InputError(f"assignment length {len(bits)} does not match n={n}")
    return tuple(bits)


def evaluate(q: QuboInstance, assignment: Sequence[int] | str) -> int:
    """Exact integer cost of ``assignment`` under ``q``.

    Python integers widen as needed, so no intermediate overflow is possible.
    """
    bits = check_assignment(q.n, assignment)
    total = 0
    for i, c in q.linear.items():
        total += c * bits[i]
    for (i, j), c in q.quadratic.items():
        total += c * bits[i] * bits[j]
    return total


def normalize_to_integers(
    linear: Mapping[int, Fraction | int],
    quadratic: Mapping[tuple[int, int], Fraction | int],
) -> QuboInstance:
    """Scale rational coefficients by the LCM of their denominators.

    Scaling by a positive factor leaves the argmin set unchanged, so the
    returned integer instance has the same minimisers as the rational input.
    The factor is recorded in ``scale``.  Floats are rejected: callers decide
    how to rationalise measured values.
    """

    def to_fraction(value: object, where: str) -> Fraction:
        if isinstance(value, float):
            raise InputError(
                f"{where}: float {value!r} rejected; convert to Fraction explicitly"
            )
        try:
            return Fraction(value)
        except (TypeError, ValueError) as exc:
            raise InputError(f"{where}: not a rational number: {value!r}") from exc

    lin = {i: to_fraction(c, f"linear[{i}]") for i, c in linear.items()}
    quad = {k: to_fraction(c, f"quadratic[{k}]") for k, c in quadratic.items()}
    lin = {i: c for i, c in lin.items() if c != 0}
    quad = {k: c for k, c in quad.items() if c != 0}
    if not lin and not quad:
        raise InputError("empty instance: no nonzero coefficients given")

    indices = set(lin)
    for i, j in quad:
        indices.add(i)
        indices.add(j)
    for i in indices:
        if isinstance(i, bool) or not isinstance(i, int) or i < 0:
            raise InputError(f"variable index {i!r} must be a nonnegative integer")
    n = max(indices) + 1

    scale = math.lcm(*(c.denominator for c in (*lin.values(), *quad.values())))
    scaled_lin = {i: c * scale for i, c in lin.items()}
    scaled_quad = {k: c * scale for k, c in quad.items()}
    for where, c in (*scaled_lin.items(), *scaled_quad.items()):
        if abs(c) > INT64_MAX:
            raise CapExceeded(
                f"coefficient {c} for {where!r} exceeds the 64-bit range after scaling by {scale}"
            )
    return QuboInstance(
        n=n,
        linear={i: int(c) for i, c in scaled_lin.items()},
        quadratic={k: int(c) for k, c in scaled_quad.items()},
        scale=Fraction(scale),
    )


def _assignment_from_index(index: int, n: int) -> Assignment:
    return tuple((index >> i) & 1 for i in range(n))


def brute_force_minima(
    q: QuboInstance, cap: int = DEFAULT_BRUTE_FORCE_CAP
) -> tuple[int, tuple[Assignment, ...]]:
    """Exhaustively enumerate all 2**n assignments.

    Returns the minimum cost and every assignment attaining it, sorted
    lexicographically.  This is the independent oracle the rest of the
    package is checked against, so it stays deliberately simple.
    """
    if q.n > cap:
        raise CapExceeded(f"brute force requested for n={q.n} above cap {cap}")
    total = 1 << q.n
    # Vectorised path is exact as long as the value range fits in int64.
    if q.abs_coefficient_sum() <= 2**62:
        best: int | None = None
        argmin_indices: list[int] = []
        lin_items = list(q.linear.items())
        quad_items = list(q.quadratic.items())
        for lo in range(0, total, _ENUM_CHUNK):
            hi = min(lo + _ENUM_CHUNK, total)
            idx = np.arange(lo, hi, dtype=np.uint64)
            vals = np.zeros(hi - lo, dtype=np.int64)
            for i, c in lin_items:
                vals += c * ((idx >> np.uint64(i)) & np.uint64(1)).astype(np.int64)
            for (i, j), c in quad_items:
                bi = ((idx >> np.uint64(i)) & np.uint64(1)).astype(np.int64)
                bj = ((idx >> np.uint64(j)) & np.uint64(1)).astype(np.int64)
                vals += c * (bi * bj)
            chunk_min = int(vals.min())
            if best is None or chunk_min < best:
                best = chunk_min
                argmin_indices = []
            if chunk_min == best:
                argmin_indices.extend(int(k) + lo for k in np.nonzero(vals == chunk_min)[0])
        assert best is not None
        assignments = sorted(_assignment_from_index(k, q.n) for k in argmin_indices)
        return best, tuple(assignments)

    # Exact fallback for coefficient sums beyond int64: plain Python integers.
    best_val: int | None = None
    argmin: list[Assignment] = []
    for index in range(total):
        a = _assignment_from_index(index, q.n)
        v = evaluate(q, a)
        if best_val is None or v < best_val:
            best_val = v
            argmin = [a]
        elif v == best_val:
            argmin.append(a)
    assert best_val is not None
    return best_val, tuple(sorted(argmin))


def qubo_to_dict(q: QuboInstance) -> dict:
    """JSON-ready form. Variable indices are 1-based in this format."""
    return {
        "n": q.n,
        "linear": {str(i + 1): c for i, c in sorted(q.linear.items())},
        "quadratic": [
            {"i": i + 1, "j": j + 1, "w": w} for (i, j), w in sorted(q.quadratic.items())
        ],
    }


def qubo_from_dict(data: Mapping) -> QuboInstance:
    """Parse the JSON interchange form; enforces 1-based indices and i < j."""
    if not isinstance(data, Mapping):
        raise InputError(f"QUBO document must be an object, got {type(data).__name__}")
    unknown = set(data) - {"n", "linear", "quadratic"}
    if unknown:
        raise InputError(f"unknown QUBO fields: {sorted(unknown)}")
    if "n" not in data:
        raise InputError("QUBO document missing field 'n'")
    n = data["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InputError(f"'n' must be a positive integer, got {n!r}")

    linear: dict[int, int] = {}
    for key, value in dict(data.get("linear", {})).items():
        try:
            i = int(key)
        except (TypeError, ValueError) as exc:
            raise InputError(f"linear key {key!r} is not an integer") from exc
        if not 1 <= i <= n:
            raise InputError(f"linear index {i} out of range [1, {n}]")
        linear[i - 1] = value

    quadratic: dict[tuple[int, int], int] = {}
    entries = data.get("quadratic", [])
    if isinstance(entries, Mapping):
        raise InputError("'quadratic' must be a list of {i, j, w} objects")
    for entry in entries:
        if not isinstance(entry, Mapping) or set(entry) != {"i", "j", "w"}:
            raise InputError(f"malformed quadratic entry: {entry!r}")
        i, j = entry["i"], entry["j"]
        for v in (i, j):
            if isinstance(v, bool) or not isinstance(v, int) or not 1 <= v <= n:
                raise InputError(f"quadratic index {v!r} out of range [1, {n}]")
        if not i < j:
            raise InputError(f"quadratic entry requires i < j, got ({i}, {j})")
        if (i - 1, j - 1) in quadratic:
            raise InputError(f"duplicate quadratic entry for ({i}, {j})")
        quadratic[(i - 1, j - 1)] = entry["w"]

    return QuboInstance(n=n, linear=linear, quadratic=quadratic)
