"""Translate QUBO instances into blockade atom graphs and decode readouts.

Four gadget kinds cover every integer cost function:

* data copies: a variable with target linear coefficient -c (c > 0) becomes
  c mutually non-adjacent atoms, all carrying the variable's value;
* offsets: a target coefficient c >= 0 becomes one data atom plus c + 1
  auxiliary atoms attached only to it;
* even wires: a chain of 2M auxiliary atoms between two variables realises
  one unit of +x_i*x_j;
* odd wires: a chain of 2M+1 atoms realises x_i + x_j - x_i*x_j, so each
  negative coupling unit also lowers both endpoint targets by one.

``compile_qubo`` stitches these together; ``decode`` maps a measured atom
configuration back to variable values by data-copy unanimity.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .errors import CapExceeded, GraphError, InputError, RydquboError
from .qubo import Assignment, QuboInstance, qubo_from_dict, qubo_to_dict

DEFAULT_MAX_ATOMS = 5000


class Parity(Enum):
    EVEN = "even"
    ODD = "odd"


@dataclass(frozen=True)
class DataCopy:
    """Atom carrying the value of a variable; several copies may exist."""

    var: int
    copy_index: int


@dataclass(frozen=True)
class Offset:
    """Auxiliary atom attached to a single data atom to raise its coefficient."""

    var: int
    offset_index: int


@dataclass(frozen=True)
class WireAtom:
    """Member of a coupling chain between two variables."""

    wire: int
    chain_position: int


@dataclass(frozen=True)
class AFConstraintAtom:
    """Member of an auxiliary chain whose readout must alternate.

    These appear only in bundled layouts that reroute crossings; adjacent
    pairs of them define the post-selection rule (see ``AtomGraph.af_pairs``).
    """

    wire: int
    chain_position: int


AtomRole = DataCopy | Offset | WireAtom | AFConstraintAtom


@dataclass(frozen=True)
class WireDescriptor:
    """Summary of one variable-to-variable chain."""

    wire: int
    endpoints: tuple[int, int]
    parity: Parity
    length: int


@dataclass(frozen=True)
class Gadget:
    """A detached fragment: local roles and edges plus attachment ports.

    ``first_port``/``last_port`` list local atom indices that the assembler
    must connect to every data copy of the first/second endpoint variable
    (for offsets, the single port attaches to the variable's data atom).
    """

    roles: tuple[AtomRole, ...]
    edges: tuple[tuple[int, int], ...]
    first_port: tuple[int, ...]
    last_port: tuple[int, ...]


def _default_label(role: AtomRole) -> str:
    if isinstance(role, DataCopy):
        return f"x{role.var + 1}^({role.copy_index})"
    if isinstance(role, Offset):
        return f"a{role.var + 1}^({role.offset_index})"
    if isinstance(role, WireAtom):
        return f"W{role.wire + 1}^({role.chain_position})"
    return f"W~{role.wire + 1}^({role.chain_position})"


class AtomGraph:
    """Immutable atom graph with role annotations.

    Atom ids are the indices 0..atom_count-1 in declaration order; measured
    bitstrings use the same order.  Construction validates the structural
    invariants (offset attachment, chain contiguity, wire terminal adjacency,
    copy non-adjacency) and raises :class:`GraphError` on violation.
    """

    def __init__(
        self,
        roles: Sequence[AtomRole],
        edges,
        wires: Sequence[WireDescriptor] = (),
        source: QuboInstance | None = None,
        labels: Sequence[str] | None = None,
    ):
        self.roles: tuple[AtomRole, ...] = tuple(roles)
        n_atoms = len(self.roles)
        normalized = set()
        for edge in edges:
            try:
                a, b = edge
            except (TypeError, ValueError) as exc:
                raise GraphError(f"edge {edge!r} is not a pair") from exc
            if not (isinstance(a, int) and isinstance(b, int)):
                raise GraphError(f"edge {edge!r} has non-integer endpoints")
            if a == b:
                raise GraphError(f"self-loop on atom {a}")
            if not (0 <= a < n_atoms and 0 <= b < n_atoms):
                raise GraphError(f"edge ({a}, {b}) references a missing atom")
            normalized.add((min(a, b), max(a, b)))
        self.edges: frozenset[tuple[int, int]] = frozenset(normalized)
        self.wires: tuple[WireDescriptor, ...] = tuple(wires)
        self.source = source
        if labels is None:
            self.labels: tuple[str, ...] = tuple(_default_label(r) for r in self.roles)
        else:
            self.labels = tuple(str(s) for s in labels)
            if len(self.labels) != n_atoms:
                raise GraphError("label count does not match atom count")
        if len(set(self.labels)) != n_atoms:
            raise GraphError("atom labels must be unique")

        adjacency: list[set[int]] = [set() for _ in range(n_atoms)]
        for a, b in self.edges:
            adjacency[a].add(b)
            adjacency[b].add(a)
        self._adjacency = tuple(frozenset(s) for s in adjacency)

        copies: dict[int, list[int]] = {}
        for atom, role in enumerate(self.roles):
            if isinstance(role, DataCopy):
                copies.setdefault(role.var, []).append(atom)
        self.var_copies: dict[int, tuple[int, ...]] = {
            v: tuple(ids) for v, ids in sorted(copies.items())
        }
        self.n_vars = (max(copies) + 1) if copies else 0
        self._validate()

    # ------------------------------------------------------------------
    # Derived views
    # ------------------------------------------------------------------

    @property
    def atom_count(self) -> int:
        return len(self.roles)

    def neighbors(self, atom: int) -> frozenset[int]:
        return self._adjacency[atom]

    def af_pairs(self) -> tuple[tuple[int, int], ...]:
        """Edges joining two alternation-constrained atoms.

        A measurement honours the constraint when the two bits of every such
        pair differ; post-selection and ground-set filtering use this rule.
        """
        out = [
            (a, b)
            for a, b in sorted(self.edges)
            if isinstance(self.roles[a], AFConstraintAtom)
            and isinstance(self.roles[b], AFConstraintAtom)
        ]
        return tuple(out)

    def atom_label(self, atom: int) -> str:
        return self.labels[atom]

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    def _validate(self) -> None:
        for v in range(self.n_vars):
            if v not in self.var_copies:
                raise GraphError(f"variable {v} has no data copy")

        for atom, role in enumerate(self.roles):
            if isinstance(role, Offset):
                nbrs = self._adjacency[atom]
                if len(nbrs) != 1:
                    raise GraphError(
                        f"offset atom {atom} must have exactly one edge, has {len(nbrs)}"
                    )
                target_role = self.roles[next(iter(nbrs))]
                if not (isinstance(target_role, DataCopy) and target_role.var == role.var):
                    raise GraphError(
                        f"offset atom {atom} must attach to a data copy of its variable"
                    )
                if len(self.var_copies.get(role.var, ())) != 1:
                    raise GraphError(
                        f"offset atom {atom} attached to multi-copy variable {role.var}"
                    )

        # Data copies of one variable never touch each other.
        for v, ids in self.var_copies.items():
            for k, a in enumerate(ids):
                for b in ids[k + 1 :]:
                    if b in self._adjacency[a]:
                        raise GraphError(f"data copies {a} and {b} of variable {v} are adjacent")

        # Chains: contiguous positions, consecutive atoms adjacent, one kind per id.
        chains: dict[int, dict[int, int]] = {}
        chain_kinds: dict[int, type] = {}
        for atom, role in enumerate(self.roles):
            if isinstance(role, (WireAtom, AFConstraintAtom)):
                positions = chains.setdefault(role.wire, {})
                if role.chain_position in positions:
                    raise GraphError(
                        f"duplicate chain position {role.chain_position} in wire {role.wire}"
                    )
                positions[role.chain_position] = atom
                kind = type(role)
                if chain_kinds.setdefault(role.wire, kind) is not kind:
                    raise GraphError(f"wire {role.wire} mixes atom kinds")
        for wire_id, positions in chains.items():
            length = len(positions)
            if sorted(positions) != list(range(1, length + 1)):
                raise GraphError(f"wire {wire_id} positions are not contiguous from 1")
            for p in range(1, length):
                if positions[p + 1] not in self._adjacency[positions[p]]:
                    raise GraphError(
                        f"wire {wire_id} atoms at positions {p} and {p + 1} are not adjacent"
                    )

        seen_ids = set()
        for w in self.wires:
            if w.wire in seen_ids:
                raise GraphError(f"duplicate wire descriptor id {w.wire}")
            seen_ids.add(w.wire)
            positions = chains.get(w.wire)
            if positions is None:
                raise GraphError(f"wire descriptor {w.wire} has no atoms")
            if chain_kinds[w.wire] is not WireAtom:
                raise GraphError(f"wire descriptor {w.wire} points at a constraint chain")
            if w.length != len(positions):
                raise GraphError(
                    f"wire {w.wire} declares length {w.length} but has {len(positions)} atoms"
                )
            if w.parity is Parity.EVEN and (w.length < 2 or w.length % 2):
                raise GraphError(f"even wire {w.wire} must have positive even length")
            if w.parity is Parity.ODD and (w.length < 1 or w.length % 2 == 0):
                raise GraphError(f"odd wire {w.wire} must have positive odd length")
            i, j = w.endpoints
            for var in (i, j):
                if var not in self.var_copies:
                    raise GraphError(f"wire {w.wire} endpoint variable {var} has no copies")
            first = positions[1]
            last = positions[w.length]
            for copy in self.var_copies[i]:
                if copy not in self._adjacency[first]:
                    raise GraphError(
                        f"wire {w.wire} head is not adjacent to every copy of variable {i}"
                    )
            for copy in self.var_copies[j]:
                if copy not in self._adjacency[last]:
                    raise GraphError(
                        f"wire {w.wire} tail is not adjacent to every copy of variable {j}"
                    )

    # ------------------------------------------------------------------
    # Equality / serialisation
    # ------------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AtomGraph):
            return NotImplemented
        return (
            self.roles == other.roles
            and self.edges == other.edges
            and self.wires == other.wires
            and self.labels == other.labels
            and self.source == other.source
        )

    def __repr__(self) -> str:
        return (
            f"AtomGraph(atoms={self.atom_count}, edges={len(self.edges)}, "
            f"wires={len(self.wires)}, vars={self.n_vars})"
        )


def _role_to_dict(role: AtomRole) -> dict:
    if isinstance(role, DataCopy):
        return {"kind": "data", "var": role.var + 1, "copy": role.copy_index}
    if isinstance(role, Offset):
        return {"kind": "offset", "var": role.var + 1, "index": role.offset_index}
    if isinstance(role, WireAtom):
        return {"kind": "wire", "wire": role.wire, "position": role.chain_position}
    return {"kind": "af", "wire": role.wire, "position": role.chain_position}


def role_from_dict(data: Mapping) -> AtomRole:
    try:
        kind = data["kind"]
        if kind == "data":
            return DataCopy(var=int(data["var"]) - 1, copy_index=int(data["copy"]))
        if kind == "offset":
            return Offset(var=int(data["var"]) - 1, offset_index=int(data["index"]))
        if kind == "wire":
            return WireAtom(wire=int(data["wire"]), chain_position=int(data["position"]))
        if kind == "af":
            return AFConstraintAtom(wire=int(data["wire"]), chain_position=int(data["position"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed atom role: {data!r}") from exc
    raise InputError(f"unknown atom role kind: {data!r}")


def graph_to_dict(graph: AtomGraph) -> dict:
    """JSON-ready form; round-trips losslessly through ``graph_from_dict``.

    The ``variables`` block (variable -> data copy atom ids, 1-based keys)
    is derived from the roles and ignored on input.
    """
    return {
        "version": 1,
        "variables": {str(v + 1): list(ids) for v, ids in graph.var_copies.items()},
        "atoms": [
            {"id": i, "label": graph.labels[i], "role": _role_to_dict(role)}
            for i, role in enumerate(graph.roles)
        ],
        "edges": [list(e) for e in sorted(graph.edges)],
        "wires": [
            {
                "id": w.wire,
                "parity": w.parity.value,
                "i": w.endpoints[0] + 1,
                "j": w.endpoints[1] + 1,
                "length": w.length,
            }
            for w in graph.wires
        ],
        "source": qubo_to_dict(graph.source) if graph.source is not None else None,
    }


def graph_from_dict(data: Mapping) -> AtomGraph:
    if not isinstance(data, Mapping):
        raise InputError("graph document must be an object")
    try:
        atoms = list(data["atoms"])
        edges = [tuple(e) for e in data.get("edges", [])]
        wire_entries = list(data.get("wires", []))
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed graph document: {exc}") from exc
    ids = [entry.get("id") for entry in atoms]
    if sorted(ids) != list(range(len(atoms))):
        raise InputError("atom ids must be exactly 0..N-1")
    ordered = sorted(atoms, key=lambda entry: entry["id"])
    roles = [role_from_dict(entry["role"]) for entry in ordered]
    labels = [entry.get("label", "") for entry in ordered]
    if any(not lbl for lbl in labels):
        labels = None  # regenerate defaults rather than accept blanks
    wires = []
    for entry in wire_entries:
        try:
            wires.append(
                WireDescriptor(
                    wire=int(entry["id"]),
                    endpoints=(int(entry["i"]) - 1, int(entry["j"]) - 1),
                    parity=Parity(entry["parity"]),
                    length=int(entry["length"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed wire descriptor: {entry!r}") from exc
    source = data.get("source")
    q = qubo_from_dict(source) if source is not None else None
    try:
        return AtomGraph(roles, edges, wires=wires, source=q, labels=labels)
    except GraphError:
        raise
    except RydquboError as exc:
        raise InputError(str(exc)) from exc


# ----------------------------------------------------------------------
# Gadget construction
# ----------------------------------------------------------------------


def effective_linear(q: QuboInstance, var: int) -> int:
    """Linear coefficient the variable gadget must realise.

    Every unit of negative coupling incident to ``var`` adds one unwanted
    unit of +x_var through its odd wire, so the gadget target is the raw
    coefficient minus the total negative coupling weight.
    """
    if not 0 <= var < q.n:
        raise InputError(f"variable {var} out of range [0, {q.n})")
    target = q.linear.get(var, 0)
    for (i, j), w in q.quadratic.items():
        if w < 0 and (i == var or j == var):
            target -= abs(w)
    return target


def build_data_qubit(var: int, count: int) -> Gadget:
    """``count`` mutually non-adjacent copies of one variable (coefficient -count)."""
    if count < 1:
        raise InputError(f"data gadget needs count >= 1, got {count}")
    roles = tuple(DataCopy(var=var, copy_index=k) for k in range(1, count + 1))
    return Gadget(roles=roles, edges=(), first_port=(), last_port=())


def build_offset(var: int, count: int) -> Gadget:
    """``count`` offset atoms for a single-copy variable (coefficient count - 1).

    The port lists every offset; the assembler attaches each to the
    variable's unique data atom.
    """
    if count < 1:
        raise InputError(f"offset gadget needs count >= 1, got {count}")
    roles = tuple(Offset(var=var, offset_index=k) for k in range(1, count + 1))
    return Gadget(roles=roles, edges=(), first_port=tuple(range(count)), last_port=())


def build_even_wire(i: int, j: int, m: int, wire_id: int = 0) -> Gadget:
    """Chain of 2m atoms realising one unit of +x_i*x_j."""
    if m < 1:
        raise InputError(f"even wire needs m >= 1, got {m}")
    length = 2 * m
    roles = tuple(WireAtom(wire=wire_id, chain_position=p) for p in range(1, length + 1))
    edges = tuple((p, p + 1) for p in range(length - 1))
    return Gadget(roles=roles, edges=edges, first_port=(0,), last_port=(length - 1,))


def build_odd_wire(i: int, j: int, m: int, wire_id: int = 0) -> Gadget:
    """Chain of 2m+1 atoms realising x_i + x_j - x_i*x_j."""
    if m < 0:
        raise InputError(f"odd wire needs m >= 0, got {m}")
    length = 2 * m + 1
    roles = tuple(WireAtom(wire=wire_id, chain_position=p) for p in range(1, length + 1))
    edges = tuple((p, p + 1) for p in range(length - 1))
    return Gadget(roles=roles, edges=edges, first_port=(0,), last_port=(length - 1,))


@dataclass(frozen=True)
class WireLengthPolicy:
    """Chain lengths used for each coupling unit.

    Defaults are minimal; longer chains change constants only, which is what
    makes them usable for geometric routing.
    """

    even_atoms: int = 2
    odd_atoms: int = 1

    def __post_init__(self) -> None:
        if self.even_atoms < 2 or self.even_atoms % 2:
            raise InputError(f"even_atoms must be even and >= 2, got {self.even_atoms}")
        if self.odd_atoms < 1 or self.odd_atoms % 2 == 0:
            raise InputError(f"odd_atoms must be odd and >= 1, got {self.odd_atoms}")


def planned_atom_count(q: QuboInstance, policy: WireLengthPolicy | None = None) -> int:
    """Atom budget of ``compile_qubo`` without building the graph."""
    policy = policy or WireLengthPolicy()
    total = 0
    for v in range(q.n):
        t = effective_linear(q, v)
        total += -t if t < 0 else t + 2
    for w in q.quadratic.values():
        total += w * policy.even_atoms if w > 0 else -w * policy.odd_atoms
    return total


def compile_qubo(
    q: QuboInstance,
    policy: WireLengthPolicy | None = None,
    max_atoms: int = DEFAULT_MAX_ATOMS,
) -> AtomGraph:
    """Build the atom graph whose ground configurations encode argmin(q).

    Per variable: a data gadget of |target| copies when the target
    coefficient is negative, otherwise one data atom with target + 1
    offsets.  Per coupling unit: one even (positive) or odd (negative)
    chain whose ends attach to every copy of both endpoint variables.

    The ground-state equivalence with ``brute_force_minima(q)`` is the
    package's central contract; ``solver.certify_equivalence`` checks it
    instance by instance rather than assuming it.
    """
    policy = policy or WireLengthPolicy()
    planned = planned_atom_count(q, policy)
    if planned > max_atoms:
        raise CapExceeded(f"compiled graph would need {planned} atoms (cap {max_atoms})")

    roles: list[AtomRole] = []
    labels: list[str] = []
    edges: set[tuple[int, int]] = set()

    def place(gadget: Gadget, label_maker) -> int:
        base = len(roles)
        for k, role in enumerate(gadget.roles):
            roles.append(role)
            labels.append(label_maker(role, k))
        for a, b in gadget.edges:
            edges.add((base + a, base + b))
        return base

    copies: dict[int, list[int]] = {}
    for v in range(q.n):
        target = effective_linear(q, v)
        if target < 0:
            count = -target
            gadget = build_data_qubit(v, count)
            base = place(
                gadget,
                lambda role, k, c=count: (
                    f"x{role.var + 1}^({role.copy_index})" if c > 1 else f"x{role.var + 1}"
                ),
            )
            copies[v] = list(range(base, base + count))
        else:
            data = build_data_qubit(v, 1)
            base = place(data, lambda role, k: f"x{role.var + 1}")
            copies[v] = [base]
            offs = build_offset(v, target + 1)
            off_base = place(
                offs,
                lambda role, k, c=target + 1: (
                    f"a{role.var + 1}^({role.offset_index})" if c > 1 else f"a{role.var + 1}"
                ),
            )
            for local in offs.first_port:
                edges.add((base, off_base + local))

    wires: list[WireDescriptor] = []
    wire_id = 0
    for (i, j), weight in sorted(q.quadratic.items()):
        for _ in range(abs(weight)):
            if weight > 0:
                gadget = build_even_wire(i, j, policy.even_atoms // 2, wire_id=wire_id)
                parity = Parity.EVEN
                length = policy.even_atoms
            else:
                gadget = build_odd_wire(i, j, (policy.odd_atoms - 1) // 2, wire_id=wire_id)
                parity = Parity.ODD
                length = policy.odd_atoms
            base = place(
                gadget,
                lambda role, k, ln=length: (
                    f"W{role.wire + 1}^({role.chain_position})" if ln > 1 else f"W{role.wire + 1}"
                ),
            )
            for local in gadget.first_port:
                for copy in copies[i]:
                    edges.add((copy, base + local))
            for local in gadget.last_port:
                for copy in copies[j]:
                    edges.add((copy, base + local))
            wires.append(
                WireDescriptor(wire=wire_id, endpoints=(i, j), parity=parity, length=length)
            )
            wire_id += 1

    return AtomGraph(roles, edges, wires=wires, source=q, labels=labels)


# ----------------------------------------------------------------------
# Decoding
# ----------------------------------------------------------------------


class InconsistentCopies(RydquboError):
    """Data copies of one variable disagree: a non-ground-state measurement."""

    def __init__(self, var: int, reason: str = "data copies disagree"):
        super().__init__(f"variable {var + 1}: {reason}")
        self.var = var


def _coerce_bits(graph: AtomGraph, bits: Sequence[int] | str) -> tuple[int, ...]:
    if isinstance(bits, str):
        if len(bits) != graph.atom_count or any(ch not in "01" for ch in bits):
            raise InputError(f"bitstring {bits!r} does not match {graph.atom_count} atoms")
        return tuple(1 if ch == "1" else 0 for ch in bits)
    out = tuple(int(b) for b in bits)
    if len(out) != graph.atom_count or any(b not in (0, 1) for b in out):
        raise InputError(f"expected {graph.atom_count} bits of 0/1, got {bits!r}")
    return out


def decode(
    graph: AtomGraph, bits: Sequence[int] | str, check_offsets: bool = False
) -> Assignment:
    """Read variable values off a measured configuration.

    Each variable's data copies must print the same value; wire, offset and
    constraint atoms carry no variable information.  With ``check_offsets``
    the offsets must mirror their data atom, a stricter ground-state check.

    Raises :class:`InconsistentCopies` when the configuration is not a
    valid encoding.
    """
    values = _coerce_bits(graph, bits)
    out = []
    for v in range(graph.n_vars):
        seen = {values[a] for a in graph.var_copies[v]}
        if len(seen) != 1:
            raise InconsistentCopies(v)
        out.append(seen.pop())
    if check_offsets:
        for atom, role in enumerate(graph.roles):
            if isinstance(role, Offset) and values[atom] != 1 - out[role.var]:
                raise InconsistentCopies(role.var, "offset does not mirror its data atom")
    return tuple(out)


def try_decode(
    graph: AtomGraph, bits: Sequence[int] | str, check_offsets: bool = False
) -> Assignment | None:
    """``decode`` returning None instead of raising on inconsistent copies."""
    try:
        return decode(graph, bits, check_offsets=check_offsets)
    except InconsistentCopies:
        return None
