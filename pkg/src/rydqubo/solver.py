"""Exact diagonal ground states of atom graphs.

With the drive off and detuning positive, low energy means many excited
atoms and no excited blockaded pair, so ground configurations are exactly
the maximum independent sets.  Energies are reported in detuning units to
keep degeneracy detection exact: hard-blockade energies are integers, the
soft-penalty variant uses exact rationals.
"""

from __future__ import annotations

import json
import operator
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .compiler import AtomGraph, DataCopy, Parity, try_decode
from .errors import CapExceeded, InputError
from .qubo import (
    Assignment,
    DEFAULT_BRUTE_FORCE_CAP,
    QuboInstance,
    brute_force_minima,
)

DEFAULT_ENUM_CAP = 30
REFERENCE_ENUM_CAP = 25

Config = tuple[int, ...]
"""One bit per atom, index position = atom id."""


class InteractionMode(Enum):
    HARD_BLOCKADE = "hard"
    SOFT_PENALTY = "soft"


@dataclass(frozen=True)
class EnergyModel:
    """Diagonal energy rules: detuning gain ``delta`` vs pair penalty ``u``.

    Hard blockade forbids excited neighbours outright; the soft variant
    charges ``u`` per violated edge and requires 0 < delta < u, the regime
    in which both agree (tested, not assumed).
    """

    delta: Fraction = Fraction(1)
    u: Fraction | None = None
    mode: InteractionMode = InteractionMode.HARD_BLOCKADE

    def __post_init__(self) -> None:
        delta = Fraction(self.delta)
        object.__setattr__(self, "delta", delta)
        if delta <= 0:
            raise InputError(f"delta must be positive, got {delta}")
        if self.u is not None:
            object.__setattr__(self, "u", Fraction(self.u))
        if self.mode is InteractionMode.SOFT_PENALTY:
            if self.u is None:
                raise InputError("soft-penalty mode requires an interaction strength u")
            if not self.u > delta:
                raise InputError(f"soft-penalty mode requires u > delta, got u={self.u}")


def _adjacency_masks(graph: AtomGraph) -> list[int]:
    masks = [0] * graph.atom_count
    for a, b in graph.edges:
        masks[a] |= 1 << b
        masks[b] |= 1 << a
    return masks


def _config_from_mask(mask: int, n: int) -> Config:
    return tuple((mask >> k) & 1 for k in range(n))


def _enumerate_mis_branch_and_bound(masks: list[int], n: int) -> tuple[int, list[int]]:
    """All maximum independent sets, as bitmasks.

    Branch and bound on the highest-degree remaining vertex; vertices that
    lost all their neighbours are taken unconditionally since every maximum
    set contains them.  The exhaustive reference path below double-checks
    this routine in the tests.
    """
    best_size = 0
    best_sets: list[int] = [0]

    def explore(avail: int, chosen: int, size: int) -> None:
        nonlocal best_size, best_sets
        while avail:
            isolated = 0
            m = avail
            while m:
                low = m & -m
                v = low.bit_length() - 1
                if masks[v] & avail == 0:
                    isolated |= low
                m ^= low
            if isolated:
                chosen |= isolated
                size += isolated.bit_count()
                avail ^= isolated
                continue
            break
        if avail == 0:
            if size > best_size:
                best_size = size
                best_sets = []
            if size == best_size:
                best_sets.append(chosen)
            return
        if size + avail.bit_count() < best_size:
            return
        pick = -1
        pick_degree = -1
        m = avail
        while m:
            low = m & -m
            v = low.bit_length() - 1
            degree = (masks[v] & avail).bit_count()
            if degree > pick_degree:
                pick_degree = degree
                pick = v
            m ^= low
        bit = 1 << pick
        explore(avail & ~(masks[pick] | bit), chosen | bit, size + 1)
        explore(avail & ~bit, chosen, size)

    explore((1 << n) - 1, 0, 0)
    return best_size, sorted(best_sets)


def enumerate_mis_reference(
    graph: AtomGraph, cap: int = REFERENCE_ENUM_CAP
) -> tuple[int, tuple[Config, ...]]:
    """Plain bitmask sweep over all 2**n configurations; the test oracle.

    Kept independent of the branch-and-bound path on purpose.
    """
    n = graph.atom_count
    if n > cap:
        raise CapExceeded(f"reference enumeration capped at {cap} atoms, got {n}")
    masks = _adjacency_masks(graph)
    best = -1
    found: list[int] = []
    for m in range(1 << n):
        ok = True
        rest = m
        while rest:
            low = rest & -rest
            v = low.bit_length() - 1
            if masks[v] & m:
                ok = False
                break
            rest ^= low
        if not ok:
            continue
        size = m.bit_count()
        if size > best:
            best = size
            found = [m]
        elif size == best:
            found.append(m)
    configs = tuple(sorted(_config_from_mask(m, n) for m in found))
    return -best, configs


def _soft_ground_configs(
    graph: AtomGraph, model: EnergyModel
) -> tuple[Fraction, tuple[Config, ...]]:
    """Exhaustive sweep minimising  u * violations - delta * excitations.

    Scores are integers p*v - q*c with u/delta = p/q, so degeneracy is exact.
    """
    n = graph.atom_count
    assert model.u is not None
    ratio = model.u / model.delta
    p, q = ratio.numerator, ratio.denominator
    edges = sorted(graph.edges)
    best: int | None = None
    found: list[int] = []
    chunk = 1 << 18
    total = 1 << n
    for lo in range(0, total, chunk):
        hi = min(lo + chunk, total)
        idx = np.arange(lo, hi, dtype=np.uint64)
        count = np.zeros(hi - lo, dtype=np.int64)
        bits = {}
        for v in range(n):
            bits[v] = ((idx >> np.uint64(v)) & np.uint64(1)).astype(np.int64)
            count += bits[v]
        viol = np.zeros(hi - lo, dtype=np.int64)
        for a, b in edges:
            viol += bits[a] & bits[b]
        score = p * viol - q * count
        chunk_min = int(score.min())
        if best is None or chunk_min < best:
            best = chunk_min
            found = []
        if chunk_min == best:
            found.extend(int(k) + lo for k in np.nonzero(score == chunk_min)[0])
    assert best is not None
    configs = tuple(sorted(_config_from_mask(m, n) for m in found))
    return Fraction(best, q), configs


def enumerate_ground_configs(
    graph: AtomGraph,
    model: EnergyModel | None = None,
    cap: int = DEFAULT_ENUM_CAP,
) -> tuple[int | Fraction, tuple[Config, ...]]:
    """All minimum-energy atom configurations of ``graph``.

    Hard blockade returns every maximum independent set with energy
    ``-|MIS|`` in delta units; soft penalty minimises the full diagonal
    sum.  Results are canonically sorted and deterministic.
    """
    model = model or EnergyModel()
    n = graph.atom_count
    if n > cap:
        raise CapExceeded(f"exact search capped at {cap} atoms, got {n}")
    if n == 0:
        return 0, ((),)
    if model.mode is InteractionMode.SOFT_PENALTY:
        return _soft_ground_configs(graph, model)
    masks = _adjacency_masks(graph)
    size, sets = _enumerate_mis_branch_and_bound(masks, n)
    configs = tuple(sorted(_config_from_mask(m, n) for m in sets))
    return -size, configs


# ----------------------------------------------------------------------
# Wire energy tables
# ----------------------------------------------------------------------


def wire_table(
    parity: Parity, m: int, endpoint_state: tuple[int, int]
) -> tuple[int, tuple[Config, ...]]:
    """Conditional ground energy of one chain with clamped endpoints.

    Returns the energy in delta units (minus the maximum number of excitable
    chain atoms) and the chain configurations attaining it.  Even chains have
    2m atoms and charge one unit exactly when both endpoints are 1; odd
    chains have 2m+1 atoms and reward only the 00 endpoint state.
    """
    if parity is Parity.EVEN:
        if m < 1:
            raise InputError(f"even wire table needs m >= 1, got {m}")
        length = 2 * m
    elif parity is Parity.ODD:
        if m < 0:
            raise InputError(f"odd wire table needs m >= 0, got {m}")
        length = 2 * m + 1
    else:
        raise InputError(f"unknown parity {parity!r}")
    bi, bj = endpoint_state
    if bi not in (0, 1) or bj not in (0, 1):
        raise InputError(f"endpoint state must be bits, got {endpoint_state!r}")

    best = -1
    found: list[Config] = []
    for mask in range(1 << length):
        bits = [(mask >> p) & 1 for p in range(length)]
        if bi and bits[0]:
            continue
        if bj and bits[-1]:
            continue
        if any(bits[p] and bits[p + 1] for p in range(length - 1)):
            continue
        size = sum(bits)
        if size > best:
            best = size
            found = [tuple(bits)]
        elif size == best:
            found.append(tuple(bits))
    return -best, tuple(sorted(found))


# ----------------------------------------------------------------------
# Certification against the brute-force oracle
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of checking a graph's decoded ground set against the oracle."""

    passed: bool
    ground_energy: int | Fraction
    qubo_min_value: int
    decoded: tuple[Assignment, ...]
    expected: tuple[Assignment, ...]
    spurious: tuple[Assignment, ...]
    missing: tuple[Assignment, ...]
    inconsistent_configs: tuple[Config, ...]

    def to_dict(self) -> dict:
        energy = self.ground_energy
        return {
            "pass": self.passed,
            "ground_energy_delta_units": (
                int(energy) if isinstance(energy, int) else [energy.numerator, energy.denominator]
            ),
            "qubo_min_value": self.qubo_min_value,
            "decoded": [list(a) for a in self.decoded],
            "expected": [list(a) for a in self.expected],
            "spurious": [list(a) for a in self.spurious],
            "missing": [list(a) for a in self.missing],
            "inconsistent_configs": [list(c) for c in self.inconsistent_configs],
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def certify_equivalence(
    q: QuboInstance,
    graph: AtomGraph,
    enum_cap: int = DEFAULT_ENUM_CAP,
    brute_cap: int = DEFAULT_BRUTE_FORCE_CAP,
    model: EnergyModel | None = None,
) -> CertificateReport:
    """Check that the graph's decoded ground set equals ``brute_force_minima(q)``.

    Every ground configuration is decoded; a decode inconsistency counts as
    a certification failure rather than an exception.
    """
    if graph.n_vars != q.n:
        raise InputError(
            f"graph encodes {graph.n_vars} variables but the instance has {q.n}"
        )
    energy, configs = enumerate_ground_configs(graph, model=model, cap=enum_cap)
    decoded: set[Assignment] = set()
    inconsistent: list[Config] = []
    for config in configs:
        assignment = try_decode(graph, config)
        if assignment is None:
            inconsistent.append(config)
        else:
            decoded.add(assignment)
    min_value, argmin = brute_force_minima(q, cap=brute_cap)
    expected = set(argmin)
    spurious = tuple(sorted(decoded - expected))
    missing = tuple(sorted(expected - decoded))
    passed = not spurious and not missing and not inconsistent
    return CertificateReport(
        passed=passed,
        ground_energy=energy,
        qubo_min_value=min_value,
        decoded=tuple(sorted(decoded)),
        expected=tuple(sorted(expected)),
        spurious=spurious,
        missing=missing,
        inconsistent_configs=tuple(inconsistent),
    )


def config_satisfies_af(graph: AtomGraph, config: Sequence[int] | str) -> bool:
    """True when every alternation-constrained pair holds opposite bits."""
    if isinstance(config, str):
        bits = [1 if ch == "1" else 0 for ch in config]
    else:
        bits = list(config)
    return all(bits[a] != bits[b] for a, b in graph.af_pairs())


# ----------------------------------------------------------------------
# Weighted independent sets by vertex duplication
# ----------------------------------------------------------------------


def mwis_expand(
    weights: Sequence[int], edges: Iterable[tuple[int, int]]
) -> AtomGraph:
    """Unfold a vertex-weighted graph into an unweighted atom graph.

    A vertex of weight w becomes w mutually non-adjacent copies inheriting
    all of the vertex's edges.  Copies share their neighbourhood exactly, so
    every maximum independent set is copy-unanimous and ``decode`` recovers
    the maximum weighted independent sets of the input.
    """
    parsed = []
    for v, w in enumerate(weights):
        if isinstance(w, bool):
            raise InputError(f"weight of vertex {v} must be an integer, got {w!r}")
        try:
            w = operator.index(w)
        except TypeError as exc:
            raise InputError(f"weight of vertex {v} must be an integer, got {w!r}") from exc
        if w < 1:
            raise InputError(f"weight of vertex {v} must be >= 1, got {w}")
        parsed.append(w)
    if not parsed:
        raise InputError("weighted graph needs at least one vertex")
    n = len(parsed)

    roles = []
    copy_ids: list[list[int]] = []
    for v, w in enumerate(parsed):
        ids = []
        for k in range(1, w + 1):
            ids.append(len(roles))
            roles.append(DataCopy(var=v, copy_index=k))
        copy_ids.append(ids)

    out_edges: set[tuple[int, int]] = set()
    for edge in edges:
        try:
            a, b = edge
        except (TypeError, ValueError) as exc:
            raise InputError(f"edge {edge!r} is not a pair") from exc
        if not (0 <= a < n and 0 <= b < n) or a == b:
            raise InputError(f"edge ({a}, {b}) is not valid for {n} vertices")
        for ca in copy_ids[a]:
            for cb in copy_ids[b]:
                out_edges.add((min(ca, cb), max(ca, cb)))
    return AtomGraph(roles, out_edges)
