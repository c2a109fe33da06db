"""Standard-form chain Hamiltonians: transition/penalty/in/out terms.

A standard-form Hamiltonian acts on a chain of sites whose local space is a
classical label set tensored with a quantum register.  Transition rules act
diagonally on the classical part, carrying an optional two-site unitary on
the quantum part; penalty, initialization and output terms are classical
projector patterns, the latter two with quantum projectors attached.

Transition terms are assembled as (1/2)(|cd>U - |ab>)(<cd|U' - <ab|): with
this normalization a clean orbit of length T that ends in a penalized
configuration has ground energy exactly 1 - cos(pi/2T), and an unpenalized
orbit is frustration free.

Desk-scale instances stand in for the full six-track machine: tracks are
user-declared, boundary markers are dedicated classical labels pinned to
the chain ends, and the encoded runtime T(L) grows linearly rather than
exponentially.  All downstream identities are parametric in T(L).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

FORMAT_SPEC = "rgflow-sfh-v1"

LEFT_MARKER = "<|"
RIGHT_MARKER = "|>"


class DimensionCap(ValueError):
    pass


class UnsupportedMachine(ValueError):
    pass


class NotAPath(ValueError):
    pass


@dataclass(frozen=True)
class Track:
    label: str
    kind: str  # "classical" | "quantum"
    alphabet: tuple[str, ...]


@dataclass(frozen=True)
class TrackSpec:
    """Ordered tracks plus the distinguished end-marker site labels."""

    tracks: tuple[Track, ...]
    left_marker: Optional[str] = LEFT_MARKER
    right_marker: Optional[str] = RIGHT_MARKER

    def classical_labels(self) -> tuple:
        """Bulk classical labels: product over the classical tracks."""
        labels = [()]
        for track in self.tracks:
            if track.kind != "classical":
                continue
            labels = [prev + (sym,) for prev in labels for sym in track.alphabet]
        return tuple(labels)

    def all_classical(self) -> tuple:
        markers = tuple(m for m in (self.left_marker, self.right_marker)
                        if m is not None)
        return self.classical_labels() + markers

    def quantum_labels(self) -> tuple:
        labels = [()]
        for track in self.tracks:
            if track.kind != "quantum":
                continue
            labels = [prev + (sym,) for prev in labels for sym in track.alphabet]
        return tuple(labels)

    def site_dim(self) -> int:
        return len(self.all_classical()) * len(self.quantum_labels())


@dataclass(frozen=True)
class TransitionRule:
    """Classical quadruple (a,b) -> (c,d) with an optional pair unitary."""

    source: tuple
    target: tuple
    unitary: Optional[np.ndarray] = None  # acts on Q (x) Q; None = identity

    def __hash__(self):
        return hash((self.source, self.target))


@dataclass(frozen=True)
class PenaltyRule:
    pattern: tuple  # (a, b) classical labels


@dataclass(frozen=True)
class InOutRule:
    """|ab><ab| (x) Pi with Pi a projector onto quantum basis pairs."""

    pattern: tuple
    quantum_states: Optional[tuple] = None  # pairs of quantum labels; None = identity


@dataclass
class RuntimeLaw:
    """Declared encoded-runtime function T(L): a named law plus parameters."""

    name: str
    params: dict = field(default_factory=dict)

    def runtime(self, length: int) -> Optional[int]:
        if self.name == "affine":
            value = self.params["a"] * length + self.params["b"]
        elif self.name == "table":
            value = self.params["values"].get(str(length))
            if value is None:
                return None
        else:
            raise ValueError(f"unknown runtime law {self.name}")
        return max(1, int(value))

    def record(self, length: int, value: int) -> None:
        if self.name == "table":
            self.params["values"][str(length)] = value


@dataclass
class StandardFormSpec:
    """A validated description of a standard-form chain Hamiltonian."""

    name: str
    tracks: TrackSpec
    transitions: list[TransitionRule]
    penalties: list[PenaltyRule]
    in_rules: list[InOutRule]
    out_rules: list[InOutRule]
    runtime_law: RuntimeLaw
    initial_classical: Optional[tuple] = None  # bulk classical labels, len L-2
    initial_quantum: Optional[tuple] = None    # single quantum label per site
    # One-site terms produced by blocking (absent on freshly declared specs).
    site_transitions: list[TransitionRule] = field(default_factory=list)
    site_projectors: list[tuple] = field(default_factory=list)  # (label, weight)
    notes: dict = field(default_factory=dict)

    def runtime(self, length: int) -> int:
        return self.runtime_law.runtime(length)


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def valid(self) -> bool:
        return not self.violations


def validate_spec(spec: StandardFormSpec) -> ValidationReport:
    """Check every standard-form condition, reporting each violation."""
    bad: list[str] = []
    labels = set(spec.tracks.all_classical())
    nq = len(spec.tracks.quantum_labels())
    seen_sources: dict[tuple, tuple] = {}
    for rule in spec.transitions:
        for side, pair in (("source", rule.source), ("target", rule.target)):
            for lab in pair:
                if lab not in labels:
                    bad.append(f"transition {side} label {lab!r} undeclared")
        if rule.source in seen_sources and seen_sources[rule.source] != rule.target:
            bad.append(f"non-unique transition source {rule.source}")
        seen_sources.setdefault(rule.source, rule.target)
        if rule.source == rule.target and rule.unitary is None:
            bad.append(f"trivial transition {rule.source} -> itself")
        if rule.unitary is not None:
            u = np.asarray(rule.unitary)
            if u.shape != (nq * nq, nq * nq):
                bad.append(f"unitary shape {u.shape} for {rule.source}")
            elif not np.allclose(u @ u.conj().T, np.eye(nq * nq), atol=1e-12):
                bad.append(f"non-unitary attachment for {rule.source}")
    for rule in spec.penalties:
        if any(lab not in labels for lab in rule.pattern):
            bad.append(f"penalty pattern {rule.pattern} undeclared")
    qlabels = set(spec.tracks.quantum_labels())
    for kind, rules in (("in", spec.in_rules), ("out", spec.out_rules)):
        for rule in rules:
            if any(lab not in labels for lab in rule.pattern):
                bad.append(f"{kind}-rule pattern {rule.pattern} undeclared")
            if rule.quantum_states is not None:
                if len(set(rule.quantum_states)) != len(rule.quantum_states):
                    bad.append(f"{kind}-rule projector not idempotent "
                               f"(repeated state) at {rule.pattern}")
                for qa, qb in rule.quantum_states:
                    if qa not in qlabels or qb not in qlabels:
                        bad.append(f"{kind}-rule quantum label undeclared")
    for length in (2, 3, 4, 8, 16):
        t_val = spec.runtime(length)
        if t_val is not None and t_val < 1:
            bad.append(f"T({length}) < 1")
    return ValidationReport(bad)


# ---------------------------------------------------------------------------
# Assembly


@dataclass
class AssembledChain:
    """Sparse chain Hamiltonian with its basis bookkeeping and term classes."""

    spec: StandardFormSpec
    length: int
    pinned: bool
    site_classical: list[tuple]   # per site, the admissible classical labels
    quantum_labels: tuple
    total: sp.csr_matrix
    parts: dict[str, sp.csr_matrix]  # trans / pen / in / out / site

    @property
    def dim(self) -> int:
        return self.total.shape[0]

    def site_dims(self) -> list[int]:
        nq = len(self.quantum_labels)
        return [len(c) * nq for c in self.site_classical]

    def basis_index(self, classical: Sequence, quantum: Sequence) -> int:
        """Index of the product basis state with the given per-site labels."""
        nq = len(self.quantum_labels)
        qindex = {q: i for i, q in enumerate(self.quantum_labels)}
        idx = 0
        for site, (c, q) in enumerate(zip(classical, quantum)):
            cidx = self.site_classical[site].index(c)
            idx = idx * len(self.site_classical[site]) * nq
            idx += cidx * nq + qindex[q]
        return idx


def _pair_operator(left_classical: tuple, right_classical: tuple,
                   quantum: tuple, spec: StandardFormSpec) -> dict[str, sp.coo_matrix]:
    """Two-site term classes on the given (restricted) pair basis."""
    nq = len(quantum)
    cl_index = {c: i for i, c in enumerate(left_classical)}
    cr_index = {c: i for i, c in enumerate(right_classical)}
    dim = len(left_classical) * nq * len(right_classical) * nq

    def pair_idx(a, qa, b, qb):
        return ((cl_index[a] * nq + qa) * len(right_classical) + cr_index[b]) * nq + qb

    builders = {key: ([], [], []) for key in ("trans", "pen", "in", "out")}

    def add(key, i, j, v):
        rows, cols, vals = builders[key]
        rows.append(i)
        cols.append(j)
        vals.append(v)

    qn = nq * nq
    for rule in spec.transitions:
        a, b = rule.source
        c, d = rule.target
        src_ok = a in cl_index and b in cr_index
        tgt_ok = c in cl_index and d in cr_index
        if not (src_ok or tgt_ok):
            continue
        u = None if rule.unitary is None else np.asarray(rule.unitary)
        # (1/2)(|cd>U - |ab>)(<cd|U' - <ab|) restricted to the pair basis:
        # = 1/2 |cd><cd| x 1 + 1/2 |ab><ab| x 1 - (1/2 |cd><ab| x U + h.c.)
        for m in range(qn):
            qa, qb = divmod(m, nq)
            if src_ok:
                add("trans", pair_idx(a, qa, b, qb), pair_idx(a, qa, b, qb), 0.5)
            if tgt_ok:
                add("trans", pair_idx(c, qa, d, qb), pair_idx(c, qa, d, qb), 0.5)
            if src_ok and tgt_ok:
                if u is None:
                    add("trans", pair_idx(c, qa, d, qb), pair_idx(a, qa, b, qb), -0.5)
                    add("trans", pair_idx(a, qa, b, qb), pair_idx(c, qa, d, qb), -0.5)
                else:
                    for mm in range(qn):
                        qc, qd = divmod(mm, nq)
                        v = u[mm, m]
                        if v != 0:
                            add("trans", pair_idx(c, qc, d, qd),
                                pair_idx(a, qa, b, qb), -0.5 * v)
                            add("trans", pair_idx(a, qa, b, qb),
                                pair_idx(c, qc, d, qd), -0.5 * np.conj(v))
    for rule in spec.penalties:
        a, b = rule.pattern
        if a in cl_index and b in cr_index:
            for qa in range(nq):
                for qb in range(nq):
                    i = pair_idx(a, qa, b, qb)
                    add("pen", i, i, 1.0)
    qindex = {q: i for i, q in enumerate(quantum)}
    for key, rules in (("in", spec.in_rules), ("out", spec.out_rules)):
        for rule in rules:
            a, b = rule.pattern
            if a not in cl_index or b not in cr_index:
                continue
            if rule.quantum_states is None:
                states = [(qa, qb) for qa in range(nq) for qb in range(nq)]
            else:
                states = [(qindex[qa], qindex[qb])
                          for qa, qb in rule.quantum_states]
            for qa, qb in states:
                i = pair_idx(a, qa, b, qb)
                add(key, i, i, 1.0)
    out = {}
    for key, (rows, cols, vals) in builders.items():
        out[key] = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim))
    return out


def _site_operator(classical: tuple, quantum: tuple,
                   spec: StandardFormSpec) -> sp.coo_matrix:
    """One-site terms (present only on blocked specs)."""
    nq = len(quantum)
    cidx = {c: i for i, c in enumerate(classical)}
    dim = len(classical) * nq
    rows, cols, vals = [], [], []

    def idx(c, q):
        return cidx[c] * nq + q

    for rule in spec.site_transitions:
        (a,), (c,) = (rule.source, rule.target)
        has_a, has_c = a in cidx, c in cidx
        u = None if rule.unitary is None else np.asarray(rule.unitary)
        for q in range(nq):
            if has_a:
                rows.append(idx(a, q)); cols.append(idx(a, q)); vals.append(0.5)
            if has_c:
                if u is None:
                    rows.append(idx(c, q)); cols.append(idx(c, q)); vals.append(0.5)
                else:
                    for m in range(nq):
                        for m2 in range(nq):
                            v = 0.5 * u[m, q] * np.conj(u[m2, q])
                            if v != 0:
                                rows.append(idx(c, m)); cols.append(idx(c, m2))
                                vals.append(v)
            if has_a and has_c:
                if u is None:
                    rows.append(idx(c, q)); cols.append(idx(a, q)); vals.append(-0.5)
                    rows.append(idx(a, q)); cols.append(idx(c, q)); vals.append(-0.5)
                else:
                    for m in range(nq):
                        v = u[m, q]
                        if v != 0:
                            rows.append(idx(c, m)); cols.append(idx(a, q))
                            vals.append(-0.5 * v)
                            rows.append(idx(a, q)); cols.append(idx(c, m))
                            vals.append(-0.5 * np.conj(v))
    for label, weight in spec.site_projectors:
        if label in cidx:
            for q in range(nq):
                rows.append(idx(label, q)); cols.append(idx(label, q))
                vals.append(weight)
    return sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim))


def assemble(spec: StandardFormSpec, length: int, pin_boundaries: bool = False,
             cap: int = 2 ** 24) -> AssembledChain:
    """Assemble H = sum_i h(i, i+1) (+ site terms) as a sparse operator.

    With ``pin_boundaries`` the first and last site are restricted to the
    end-marker states, the sector every ground-state statement of the
    builtin instances refers to.
    """
    if length < 2:
        raise ValueError("chain length must be >= 2")
    quantum = spec.tracks.quantum_labels()
    bulk = spec.tracks.all_classical()
    site_classical = [bulk] * length
    if pin_boundaries:
        if spec.tracks.left_marker is None or spec.tracks.right_marker is None:
            raise ValueError("spec declares no boundary markers to pin")
        site_classical = ([(spec.tracks.left_marker,)]
                          + [spec.tracks.classical_labels()] * (length - 2)
                          + [(spec.tracks.right_marker,)])
    dims = [len(c) * len(quantum) for c in site_classical]
    total_dim = 1
    for d in dims:
        total_dim *= d
        if total_dim > cap:
            raise DimensionCap(f"chain dimension exceeds cap {cap}")
    parts: dict[str, sp.csr_matrix] = {}
    for key in ("trans", "pen", "in", "out", "site"):
        parts[key] = sp.csr_matrix((total_dim, total_dim), dtype=complex)
    for i in range(length - 1):
        pair = _pair_operator(site_classical[i], site_classical[i + 1],
                              quantum, spec)
        left = int(np.prod(dims[:i], dtype=np.int64)) if i else 1
        right = int(np.prod(dims[i + 2:], dtype=np.int64)) if i + 2 < length else 1
        for key, op in pair.items():
            if op.nnz == 0:
                continue
            lifted = sp.kron(sp.identity(left, format="coo"), op, format="coo")
            lifted = sp.kron(lifted, sp.identity(right, format="coo"), format="csr")
            parts[key] = parts[key] + lifted
    if spec.site_transitions or spec.site_projectors:
        for i in range(length):
            op = _site_operator(site_classical[i], quantum, spec)
            if op.nnz == 0:
                continue
            left = int(np.prod(dims[:i], dtype=np.int64)) if i else 1
            right = int(np.prod(dims[i + 1:], dtype=np.int64)) if i + 1 < length else 1
            lifted = sp.kron(sp.identity(left, format="coo"), op, format="coo")
            lifted = sp.kron(lifted, sp.identity(right, format="coo"), format="csr")
            parts["site"] = parts["site"] + lifted
    total = sum(parts.values()).tocsr()
    total.eliminate_zeros()
    return AssembledChain(spec, length, pin_boundaries, site_classical,
                          quantum, total, parts)


# ---------------------------------------------------------------------------
# Classical configuration graph and subspace classification


def classical_configs(chain: AssembledChain) -> list[tuple]:
    configs = [()]
    for labels in chain.site_classical:
        configs = [prev + (lab,) for prev in configs for lab in labels]
    return configs


def _successors(config: tuple, spec: StandardFormSpec) -> list[tuple]:
    out = []
    for i in range(len(config) - 1):
        for rule in spec.transitions:
            if (config[i], config[i + 1]) == rule.source:
                out.append(config[:i] + rule.target + config[i + 2:])
    return out


def _predecessors(config: tuple, spec: StandardFormSpec) -> list[tuple]:
    out = []
    for i in range(len(config) - 1):
        for rule in spec.transitions:
            if (config[i], config[i + 1]) == rule.target:
                out.append(config[:i] + rule.source + config[i + 2:])
    return out


def _is_illegal(config: tuple, spec: StandardFormSpec) -> bool:
    pens = {r.pattern for r in spec.penalties}
    return any((config[i], config[i + 1]) in pens for i in range(len(config) - 1))


@dataclass
class SubspacePartition:
    """Assignment of each classical configuration to S1, S2 or S3."""

    classes: dict[tuple, str]
    steps_to_illegal: dict[tuple, int]

    def members(self, label: str) -> list[tuple]:
        return [c for c, k in self.classes.items() if k == label]


def classify_subspaces(spec: StandardFormSpec, length: int,
                       pin_boundaries: bool = False,
                       cap: int = 2 ** 20) -> SubspacePartition:
    """Exact forwards/backwards reachability on the configuration graph.

    S1 holds configurations in the support of a penalty, S2 legal ones that
    reach S1 under the transition dynamics in either time direction, S3 the
    rest.  The exploration is exact reachability (the configuration graph is
    finite); the O(L^2) horizon of the general construction is a reported
    figure, not an assumption.
    """
    chain_dims = 1
    quantum = spec.tracks.quantum_labels()
    bulk = spec.tracks.all_classical()
    site_classical = [bulk] * length
    if pin_boundaries:
        site_classical = ([(spec.tracks.left_marker,)]
                          + [spec.tracks.classical_labels()] * (length - 2)
                          + [(spec.tracks.right_marker,)])
    for labels in site_classical:
        chain_dims *= len(labels)
        if chain_dims > cap:
            raise DimensionCap(f"configuration count exceeds cap {cap}")
    configs = [()]
    for labels in site_classical:
        configs = [prev + (lab,) for prev in configs for lab in labels]
    classes = {}
    for config in configs:
        classes[config] = "S1" if _is_illegal(config, spec) else None
    # propagate "reaches illegal" through both time directions
    steps = {c: 0 for c, k in classes.items() if k == "S1"}
    frontier = list(steps.keys())
    reach = set(frontier)
    while frontier:
        nxt = []
        for config in frontier:
            for nb in _predecessors(config, spec) + _successors(config, spec):
                if nb in classes and nb not in reach:
                    reach.add(nb)
                    steps[nb] = steps[config] + 1
                    nxt.append(nb)
        frontier = nxt
    for config in configs:
        if classes[config] is None:
            classes[config] = "S2" if config in reach else "S3"
    return SubspacePartition(classes, steps)


def restriction(chain: AssembledChain, partition: SubspacePartition,
                label: str) -> sp.csr_matrix:
    """H restricted to basis states whose classical configuration is in the
    given class."""
    keep = class_indices(chain, set(partition.members(label)))
    sel = sp.csr_matrix((np.ones(len(keep)), (range(len(keep)), keep)),
                        shape=(len(keep), chain.dim))
    return (sel @ chain.total @ sel.T).tocsr()


def class_indices(chain: AssembledChain, members: set) -> list[int]:
    """Basis indices whose classical configuration lies in ``members``."""
    nq = len(chain.quantum_labels)
    qtotal = nq ** chain.length
    dims = chain.site_dims()
    idx: list[int] = []

    def rec(site: int, prefix_idx: int, config: tuple):
        if site == chain.length:
            if config in members:
                if nq == 1:
                    idx.append(prefix_idx)
                else:
                    idx.extend(_quantum_fibre(chain, prefix_idx))
            return
        for ci, c in enumerate(chain.site_classical[site]):
            step = dims[site] if nq == 1 else len(chain.site_classical[site])
            rec(site + 1, prefix_idx * step + ci, config + (c,))

    rec(0, 0, ())
    return sorted(idx)


def _quantum_fibre(chain: AssembledChain, classical_flat: int) -> list[int]:
    """All basis indices sharing one classical configuration."""
    nq = len(chain.quantum_labels)
    # decode classical digits site by site
    digits = []
    rem = classical_flat
    for labels in reversed(chain.site_classical):
        digits.append(rem % len(labels))
        rem //= len(labels)
    digits.reverse()
    dims = chain.site_dims()
    out = []
    for qflat in range(nq ** chain.length):
        qrem = qflat
        qdigits = []
        for _ in range(chain.length):
            qdigits.append(qrem % nq)
            qrem //= nq
        qdigits.reverse()
        val = 0
        for s in range(chain.length):
            val = val * dims[s] + digits[s] * nq + qdigits[s]
        out.append(val)
    return out


# ---------------------------------------------------------------------------
# Builtin instances


def clock_spec() -> StandardFormSpec:
    """One-way oscillator sweeping the chain; T(L) = L - 2 in the pinned
    sector.  The defect walker D gives a nonempty evolve-to-illegal class."""
    osc = Track("osc", "classical", ("1", "A", "0", "D"))
    tracks = TrackSpec((osc,))
    lm, rm = tracks.left_marker, tracks.right_marker
    t = [TransitionRule((("A",), ("0",)), (("1",), ("A",))),
         TransitionRule((("D",), ("0",)), (("1",), ("D",)))]
    legal = {
        (lm, ("A",)), (lm, ("1",)), (lm, ("D",)),
        (("1",), ("1",)), (("1",), ("A",)), (("1",), ("D",)),
        (("A",), ("0",)), (("D",), ("0",)),
        (("0",), ("0",)), (("0",), rm), (("A",), rm),
    }
    labels = tracks.all_classical()
    pens = [PenaltyRule((a, b)) for a in labels for b in labels
            if (a, b) not in legal]
    law = RuntimeLaw("affine", {"a": 1, "b": -2})
    return StandardFormSpec(
        name="clock", tracks=tracks, transitions=t, penalties=pens,
        in_rules=[], out_rules=[], runtime_law=law,
        notes={"initial": "head at the left end, unswept tape",
               "oscillator": "one-way sweep; the full bounce of the paper's "
                             "figure is replaced by a single pass, T(L)=L-2"},
    )


def clock_initial(length: int) -> tuple:
    return (("A",),) + ((("0",),) * (length - 3))


@dataclass(frozen=True)
class TuringMachine:
    """Deterministic TM; delta maps (state, symbol) to (state, symbol, move)
    or to "halt".  Move "R" or "L"."""

    states: tuple[str, ...]
    symbols: tuple[str, ...]
    delta: dict
    initial_state: str = "q0"
    blank: str = "#"


# The sweeper walks right over blank cells, writing x, and sticks when it
# runs out of tape: it never halts within any T(L).
RIGHT_SWEEPER = TuringMachine(("q0",), ("#", "x"),
                              {("q0", "#"): ("q0", "x", "R")})
# The wall halter is the same sweeper but enters the halting state when it
# reaches the right end: it halts within T(L) at every length.
WALL_HALTER = TuringMachine(("q0",), ("#", "x"),
                            {("q0", "#"): ("q0", "x", "R"),
                             ("q0", "wall"): "halt"})


def counter_tm_spec(tm: TuringMachine, mode: str = "halting-penalized") -> StandardFormSpec:
    """Head/tape tracks executing ``tm`` at desk scale.

    The head walks the tape directly (the paper's separate oscillator track
    is folded into the head, keeping local dimensions diagonalizable).  The
    orbit ends when the machine halts, writing the halting marker that the
    out rule penalizes in "halting-penalized" mode, or when it runs out of
    tape.  The rule set must be backward deterministic (distinct targets);
    otherwise orbits merge and the ground sector is not a path.
    """
    if len(tm.states) > 4 or len(tm.symbols) > 3:
        raise UnsupportedMachine("supported machines have <=4 states, <=3 symbols")
    if mode not in ("halting-penalized", "free"):
        raise UnsupportedMachine(f"unknown mode {mode}")
    head_syms = ("-",) + tm.states + ("m",)
    head = Track("head", "classical", head_syms)
    tape = Track("tape", "classical", tm.symbols)
    tracks = TrackSpec((head, tape))
    lm, rm = tracks.left_marker, tracks.right_marker
    blank = tm.blank
    transitions = []
    for (q, s), action in tm.delta.items():
        if s == "wall":
            transitions.append(TransitionRule(((q, blank), rm),
                                              (("m", blank), rm)))
            continue
        if action == "halt":
            for t in tm.symbols:
                transitions.append(TransitionRule(
                    ((q, s), ("-", t)), (("m", s), ("-", t))))
            continue
        q2, s2, move = action
        if move == "R":
            for t in tm.symbols:
                transitions.append(TransitionRule(
                    ((q, s), ("-", t)), (("-", s2), (q2, t))))
        else:
            for t in tm.symbols:
                transitions.append(TransitionRule(
                    (("-", t), (q, s)), ((q2, t), ("-", s2))))
    targets = [r.target for r in transitions]
    if len(set(targets)) != len(targets):
        raise UnsupportedMachine("machine is not backward deterministic")
    # Legal pair catalogue = pairs occurring along the orbit: written cells
    # left of the head, blank cells right of it, head always on blank.  A
    # written cell directly left of a blank one without the head between is
    # a headless junction and is illegal, as are misplaced markers, head
    # collisions and a head on a written cell.
    written = tuple(s for s in tm.symbols if s != blank)
    legal = set()
    for q in tm.states:
        legal.add((lm, (q, blank)))
        legal.add(((q, blank), rm))
        legal.add(((q, blank), ("-", blank)))
        for w in written:
            legal.add((("-", w), (q, blank)))
    # the halting marker preserves the symbol under the head and freezes,
    # so it may carry any tape symbol and sit next to anything the frozen
    # history could show
    for s in tm.symbols:
        legal.add((lm, ("m", s)))
        legal.add((("m", s), rm))
        for t in tm.symbols:
            legal.add((("m", s), ("-", t)))
        for w in written:
            legal.add((("-", w), ("m", s)))
    for w in written:
        legal.add((lm, ("-", w)))
        for w2 in written:
            legal.add((("-", w), ("-", w2)))
    legal.add((("-", blank), ("-", blank)))
    legal.add((("-", blank), rm))
    labels = tracks.all_classical()
    pens = [PenaltyRule((a, b)) for a in labels for b in labels
            if (a, b) not in legal]
    out_rules = []
    if mode == "halting-penalized":
        for s in tm.symbols:
            for b in labels:
                out_rules.append(InOutRule((("m", s), b)))
    spec = StandardFormSpec(
        name=f"counter_tm[{mode}]", tracks=tracks, transitions=transitions,
        penalties=pens, in_rules=[], out_rules=out_rules,
        runtime_law=RuntimeLaw("table", {"values": {}}),
        notes={"machine": {"states": list(tm.states), "symbols": list(tm.symbols)},
               "mode": mode,
               "initial_state": tm.initial_state, "blank": blank,
               "time_wasting_tape": "the paper's track 6 is summarized only "
                                    "in prose and is omitted here"},
    )
    return spec


def counter_initial(spec: StandardFormSpec, length: int) -> tuple:
    q0 = spec.notes["initial_state"]
    blank = spec.notes["blank"]
    return ((q0, blank),) + ((("-", blank),) * (length - 3))


def builtin_instances() -> dict:
    """The desk-scale stand-ins: clock plus the counter-TM factory."""
    return {"clock": clock_spec(), "counter_tm": counter_tm_spec}


# ---------------------------------------------------------------------------
# Orbits and history states


def orbit_path(spec: StandardFormSpec, initial: tuple) -> list[tuple]:
    """Forward orbit of the initial configuration; NotAPath on branching."""
    seen = {initial}
    path = [initial]
    cur = initial
    while True:
        succs = _successors(cur, spec)
        if not succs:
            return path
        if len(set(succs)) > 1:
            raise NotAPath(f"branching orbit at {cur}")
        nxt = succs[0]
        if nxt in seen:
            raise NotAPath("orbit closes a loop")
        preds = set(_predecessors(nxt, spec))
        if len(preds) > 1:
            raise NotAPath(f"merging orbit at {nxt}")
        seen.add(nxt)
        path.append(nxt)
        cur = nxt


def measured_runtime(spec: StandardFormSpec, initial: tuple) -> int:
    return len(orbit_path(spec, initial))


def uniform_amplitudes(T: int) -> np.ndarray:
    return np.full(T, 1.0 / np.sqrt(T))


def halting_amplitudes(T: int) -> np.ndarray:
    """Empirical ground-state profile cos((2t-1)pi/4T), t = 1..T, normalized.

    The printed closed form (2cos((2t+1)pi t/4T) sin(pi/4T)) contains a
    spurious quadratic t and is reported alongside this law by the tests.
    """
    t = np.arange(1, T + 1)
    amps = np.cos((2 * t - 1) * np.pi / (4 * T))
    return amps / np.linalg.norm(amps)


def printed_halting_amplitudes(T: int) -> np.ndarray:
    t = np.arange(1, T + 1)
    return 2 * np.cos((2 * t + 1) * np.pi * t / (4 * T)) * np.sin(np.pi / (4 * T))


def history_state(chain: AssembledChain, initial_classical: tuple,
                  amplitudes: str | np.ndarray = "uniform",
                  initial_quantum: Optional[np.ndarray] = None) -> np.ndarray:
    """The normalized history state sum_t a_t |t>|psi_t> in the chain basis.

    ``initial_classical`` is the full per-site classical configuration
    (markers included when pinned).  The quantum register follows the orbit
    unitaries from ``initial_quantum`` (default: first basis state).
    """
    spec = chain.spec
    path = orbit_path(spec, initial_classical)
    T = len(path)
    if isinstance(amplitudes, str):
        amps = {"uniform": uniform_amplitudes,
                "halting": halting_amplitudes}[amplitudes](T)
    else:
        amps = np.asarray(amplitudes, dtype=float)
        amps = amps / np.linalg.norm(amps)
    nq = len(chain.quantum_labels)
    qdim = nq ** chain.length
    psi = np.zeros(chain.dim, dtype=complex)
    qvec = np.zeros(qdim, dtype=complex)
    if initial_quantum is None:
        qvec[0] = 1.0
    else:
        qvec[:] = initial_quantum
    cur = path[0]
    for t, config in enumerate(path):
        if t > 0:
            qvec = _apply_orbit_unitary(chain, spec, path[t - 1], config, qvec)
        _accumulate(chain, psi, config, qvec, amps[t])
        cur = config
    psi /= np.linalg.norm(psi)
    return psi


def _transition_between(spec, prev, cur):
    for i in range(len(prev) - 1):
        for rule in spec.transitions:
            if ((prev[i], prev[i + 1]) == rule.source
                    and (cur[i], cur[i + 1]) == rule.target
                    and prev[:i] == cur[:i] and prev[i + 2:] == cur[i + 2:]):
                return i, rule
    raise NotAPath("consecutive orbit configurations differ nonlocally")


def _apply_orbit_unitary(chain, spec, prev, cur, qvec):
    i, rule = _transition_between(spec, prev, cur)
    if rule.unitary is None:
        return qvec
    nq = len(chain.quantum_labels)
    L = chain.length
    tensor = qvec.reshape([nq] * L)
    u = np.asarray(rule.unitary).reshape(nq, nq, nq, nq)
    tensor = np.moveaxis(tensor, (i, i + 1), (0, 1))
    tensor = np.einsum("abcd,cd...->ab...", u, tensor)
    tensor = np.moveaxis(tensor, (0, 1), (i, i + 1))
    return tensor.reshape(-1)


def _accumulate(chain, psi, config, qvec, amp):
    nq = len(chain.quantum_labels)
    dims = chain.site_dims()
    cidx = [chain.site_classical[s].index(config[s])
            for s in range(chain.length)]
    # basis index = interleaved (classical, quantum) per site
    qdim = nq ** chain.length
    for qflat in range(qdim):
        v = qvec[qflat]
        if v == 0:
            continue
        rem = qflat
        qdigits = []
        for _ in range(chain.length):
            qdigits.append(rem % nq)
            rem //= nq
        qdigits.reverse()
        idx = 0
        for s in range(chain.length):
            idx = idx * dims[s] + cidx[s] * nq + qdigits[s]
        psi[idx] += amp * v


# ---------------------------------------------------------------------------
# Randomized valid specs

def random_orbit_spec(seed: int, quantum: bool = True) -> tuple[StandardFormSpec, tuple, bool]:
    """A randomized walker instance with a clean orbit ground sector.

    Arbitrary standard-form Hamiltonians need not preserve their ground
    energy under blocking (the construction's claims are for machines whose
    ground sector is a legal orbit), so the randomized suite samples walker
    machines: random alphabet sizes, random halting step, random pair
    unitaries on a small quantum track, random decoy symbols and penalties
    off the orbit.  Returns (spec, initial bulk configuration, halts).
    """
    rng = np.random.default_rng(seed)
    n_swept = int(rng.integers(1, 3))
    swept = tuple(f"s{i}" for i in range(n_swept))
    heads = ("A", "B")[: int(rng.integers(1, 3))]
    halts = bool(rng.integers(0, 2))
    markers = tuple(f"m{h}" for h in heads) if halts else ()
    walker = Track("walk", "classical", swept + heads + ("0",) + markers)
    tracks_list = [walker]
    nq = 1
    if quantum:
        tracks_list.append(Track("qubit", "quantum", ("g", "e")))
        nq = 2
    tracks = TrackSpec(tuple(tracks_list))
    lm, rm = tracks.left_marker, tracks.right_marker

    def lab(sym):
        return (sym,)

    transitions = []
    # the head cycles through `heads`, writing swept symbols cyclically
    for hi, h in enumerate(heads):
        h2 = heads[(hi + 1) % len(heads)]
        w = swept[hi % n_swept]
        u = _random_pair_unitary(rng, nq) if quantum else None
        transitions.append(TransitionRule((lab(h), lab("0")),
                                          (lab(w), lab(h2)), u))
    if halts:
        for h in heads:
            transitions.append(TransitionRule((lab(h), rm),
                                              (lab(f"m{h}"), rm)))
    legal = set()
    for h in heads + markers:
        legal.add((lm, lab(h)))
        legal.add((lab(h), rm))
        for w in swept:
            legal.add((lab(w), lab(h)))
    for h in heads:
        legal.add((lab(h), lab("0")))
    for w in swept:
        legal.add((lm, lab(w)))
        for w2 in swept:
            legal.add((lab(w), lab(w2)))
    legal.add((lab("0"), lab("0")))
    legal.add((lab("0"), rm))
    labels = tracks.all_classical()
    pens = [PenaltyRule((a, b)) for a in labels for b in labels
            if (a, b) not in legal]
    out_rules = [InOutRule((lab(m), b)) for m in markers for b in labels]
    spec = StandardFormSpec(
        name=f"random_orbit[{seed}]", tracks=tracks, transitions=transitions,
        penalties=pens, in_rules=[], out_rules=out_rules,
        runtime_law=RuntimeLaw("table", {"values": {}}),
        notes={"seed": seed, "halts": halts},
    )
    return spec, (lab(heads[0]),), halts


def _random_pair_unitary(rng, nq: int) -> np.ndarray:
    dim = nq * nq
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


# ---------------------------------------------------------------------------
# Serialization


def spec_json(spec: StandardFormSpec) -> dict:
    def rule_json(rule: TransitionRule):
        entry = {"source": [list(rule.source[0]), list(rule.source[1])],
                 "target": [list(rule.target[0]), list(rule.target[1])]}
        if rule.unitary is not None:
            u = np.asarray(rule.unitary)
            entry["unitary"] = {"re": u.real.tolist(), "im": u.imag.tolist()}
        return entry

    return {
        "format": FORMAT_SPEC,
        "name": spec.name,
        "tracks": [{"label": t.label, "kind": t.kind,
                    "alphabet": list(t.alphabet)} for t in spec.tracks.tracks],
        "left_marker": spec.tracks.left_marker,
        "right_marker": spec.tracks.right_marker,
        "transitions": [rule_json(r) for r in spec.transitions],
        "penalties": [[list(r.pattern[0]), list(r.pattern[1])]
                      for r in spec.penalties],
        "in_rules": [_inout_json(r) for r in spec.in_rules],
        "out_rules": [_inout_json(r) for r in spec.out_rules],
        "runtime_law": {"name": spec.runtime_law.name,
                        "params": _law_params_json(spec.runtime_law)},
        "notes": _notes_json(spec.notes),
    }


def _law_params_json(law: RuntimeLaw) -> dict:
    return json.loads(json.dumps(law.params, default=str))


def _notes_json(notes: dict) -> dict:
    return json.loads(json.dumps(notes, default=str))


def _inout_json(rule: InOutRule) -> dict:
    entry = {"pattern": [list(rule.pattern[0]), list(rule.pattern[1])]}
    if rule.quantum_states is not None:
        entry["quantum_states"] = [[list(a), list(b)]
                                   for a, b in rule.quantum_states]
    return entry


def spec_from_json(payload: dict) -> StandardFormSpec:
    if payload.get("format") != FORMAT_SPEC:
        raise ValueError("not a rgflow standard-form spec file")
    tracks = TrackSpec(
        tuple(Track(t["label"], t["kind"], tuple(t["alphabet"]))
              for t in payload["tracks"]),
        payload.get("left_marker"), payload.get("right_marker"))

    def tup(pair):
        return (tuple(pair[0]), tuple(pair[1]))

    transitions = []
    for r in payload["transitions"]:
        u = None
        if "unitary" in r:
            u = np.array(r["unitary"]["re"]) + 1j * np.array(r["unitary"]["im"])
        transitions.append(TransitionRule(tup(r["source"]), tup(r["target"]), u))
    pens = [PenaltyRule(tup(p)) for p in payload["penalties"]]

    def inout(entry):
        qs = None
        if "quantum_states" in entry:
            qs = tuple((tuple(a), tuple(b)) for a, b in entry["quantum_states"])
        return InOutRule(tup(entry["pattern"]), qs)

    return StandardFormSpec(
        name=payload.get("name", "spec"),
        tracks=tracks,
        transitions=transitions,
        penalties=pens,
        in_rules=[inout(e) for e in payload["in_rules"]],
        out_rules=[inout(e) for e in payload["out_rules"]],
        runtime_law=RuntimeLaw(payload["runtime_law"]["name"],
                               payload["runtime_law"]["params"]),
        notes=payload.get("notes", {}),
    )
