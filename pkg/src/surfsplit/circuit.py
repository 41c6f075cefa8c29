"""Noisy syndrome readout and the space-time (3D) decoding graph.

Every measurement cycle has six rounds: ancilla preparation, four CNOT
rounds visiting the stabilizer support in a fixed geometric order, and the
ancilla measurement.  Plaquette ancillas start in |0>, are CNOT targets
and are measured in Z; site ancillas start in |+>, are CNOT controls and
are measured in X.  Qubits without an operation in a round sit idle.

Faults are tracked as Pauli frames (bit 1 = X, bit 2 = Z).  Detectors
compare consecutive outcomes of the same stabilizer; cycle 0 compares with
the noiseless initial state, and after the last noisy cycle one perfect
readout closes the time direction, so there are t + 1 detector layers.

A single fault only changes outcomes of its own cycle; after that it is a
pure data error, which flips the next layer and nothing later.  The graph
builder uses this to enumerate one generic cycle and shift it in time.
:func:`propagate_events` runs the plain multi-cycle simulation instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .graph import DecodingGraph, parity, syndrome_of
from .lattice import SurfaceLattice, build_decoding_graph

X, Z, Y = 1, 2, 3
PAULI_NAMES = {0: "I", X: "X", Z: "Z", Y: "Y"}
DEFAULT_SCHEDULE = ("N", "W", "E", "S")
_DIR = {"N": 0, "W": 1, "E": 2, "S": 3}
ROUNDS_PER_CYCLE = 6
CNOT_ROUNDS = (1, 2, 3, 4)


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class ErrorEvent:
    """One elementary fault: a Pauli on one or two qubits after an operation,
    or a flipped measurement outcome.

    ``paulis`` pairs qubit ids with frame codes; ``flip`` names the ancilla
    whose recorded outcome is inverted (-1 if none).  ``weight`` is the
    probability divided by the physical error rate p.
    """

    cycle: int
    round: int
    op: str  # prep | cnot | idle | meas
    paulis: tuple[tuple[int, int], ...]
    flip: int = -1
    weight: float = 1.0

    def probability(self, p: float) -> float:
        return self.weight * p

    def shifted(self, cycle: int) -> "ErrorEvent":
        return ErrorEvent(cycle, self.round, self.op, self.paulis, self.flip, self.weight)


@dataclass
class ReadoutCircuit:
    """Fully scheduled readout for ``t_rounds`` measurement cycles.

    Qubit ids: data qubits are lattice edges 0..m-1, then one ancilla per
    plaquette, then one per site.  ``cnots[k]`` lists (control, target)
    pairs of CNOT round k+1 within each cycle.
    """

    lattice: SurfaceLattice
    t_rounds: int
    schedule: tuple[str, ...]
    cnots: list[list[tuple[int, int]]]
    n_data: int
    n_plaquettes: int
    n_sites: int
    plaquette_support: list[tuple[int, ...]]
    site_support: list[tuple[int, ...]]

    @property
    def n_qubits(self) -> int:
        return self.n_data + self.n_plaquettes + self.n_sites

    @property
    def n_rounds(self) -> int:
        return ROUNDS_PER_CYCLE * self.t_rounds

    def plaquette_ancilla(self, q: int) -> int:
        return self.n_data + q

    def site_ancilla(self, v: int) -> int:
        return self.n_data + self.n_plaquettes + v

    def is_plaquette_ancilla(self, a: int) -> bool:
        return self.n_data <= a < self.n_data + self.n_plaquettes

    def is_site_ancilla(self, a: int) -> bool:
        return a >= self.n_data + self.n_plaquettes

    @cached_property
    def _cnot_of(self) -> list[dict[int, tuple[int, int]]]:
        out = []
        for gates in self.cnots:
            d = {}
            for c, t in gates:
                d[c] = (c, t)
                d[t] = (c, t)
            out.append(d)
        return out

    def busy(self, k: int) -> set[int]:
        """Qubits acted on by a CNOT in CNOT round k (1..4)."""
        return set(self._cnot_of[k - 1])

    def stabilizer_cnot_count(self, kind: str, idx: int) -> int:
        sup = self.plaquette_support[idx] if kind == "plaquette" else self.site_support[idx]
        return sum(1 for e in sup if e >= 0)


def build_readout_circuit(lattice: SurfaceLattice, t_rounds: int,
                          schedule: Sequence[str] = DEFAULT_SCHEDULE) -> ReadoutCircuit:
    """Schedule t_rounds cycles of site and plaquette measurements.

    ``schedule`` is the order in which each ancilla visits its N, W, E and S
    data qubits; truncated stabilizers simply skip missing directions and
    their ancilla idles in that round.
    """
    if t_rounds < 1:
        raise CircuitError("t_rounds must be >= 1")
    schedule = tuple(schedule)
    if sorted(schedule) != sorted(DEFAULT_SCHEDULE):
        raise CircuitError("schedule must be a permutation of N, W, E, S")
    m, n_p, n_s = lattice.n_edges, lattice.n_plaquettes, lattice.n_sites
    psup = [lattice.plaquette_edges_nwes(q) for q in range(n_p)]
    ssup = [lattice.site_edges_nwes(v) for v in range(n_s)]
    cnots: list[list[tuple[int, int]]] = []
    for d in schedule:
        k = _DIR[d]
        gates = []
        for q in range(n_p):
            e = psup[q][k]
            if e >= 0:
                gates.append((e, m + q))  # data controls, plaquette ancilla target
        for v in range(n_s):
            e = ssup[v][k]
            if e >= 0:
                gates.append((m + n_p + v, e))  # site ancilla controls
        used = [q for g in gates for q in g]
        if len(used) != len(set(used)):
            raise CircuitError(f"qubit used twice in CNOT round {d}")
        cnots.append(gates)
    return ReadoutCircuit(lattice, int(t_rounds), schedule, cnots, m, n_p, n_s, psup, ssup)


# ---------------------------------------------------------------------------
# fault enumeration
# ---------------------------------------------------------------------------

def cycle_events(circuit: ReadoutCircuit, cycle: int = 0) -> list[ErrorEvent]:
    """All single faults of one measurement cycle, with their relative weights."""
    n_q = circuit.n_qubits
    m, n_p = circuit.n_data, circuit.n_plaquettes
    ancillas = range(m, n_q)
    events: list[ErrorEvent] = []

    def idle(rnd, qubits):
        for qb in qubits:
            for pa in (X, Y, Z):
                events.append(ErrorEvent(cycle, rnd, "idle", ((qb, pa),), -1, 1.0 / 3.0))

    # round 0: preparation of every ancilla, data idle
    for a in ancillas:
        pa = X if a < m + n_p else Z
        events.append(ErrorEvent(cycle, 0, "prep", ((a, pa),), -1, 1.0))
    idle(0, range(m))
    for k in CNOT_ROUNDS:
        for c, t in circuit.cnots[k - 1]:
            for pc in range(4):
                for pt in range(4):
                    if pc == 0 and pt == 0:
                        continue
                    paulis = tuple((qb, pa) for qb, pa in ((c, pc), (t, pt)) if pa)
                    events.append(ErrorEvent(cycle, k, "cnot", paulis, -1, 1.0 / 15.0))
        busy = circuit.busy(k)
        idle(k, [qb for qb in range(n_q) if qb not in busy])
    for a in ancillas:
        events.append(ErrorEvent(cycle, 5, "meas", (), a, 1.0))
    idle(5, range(m))
    return events


def enumerate_events(circuit: ReadoutCircuit) -> Iterable[ErrorEvent]:
    base = cycle_events(circuit)
    for tau in range(circuit.t_rounds):
        for ev in base:
            yield ev.shifted(tau)


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def _apply_cnot(frame: dict[int, int], c: int, t: int) -> None:
    fc, ft = frame.get(c, 0), frame.get(t, 0)
    nc = fc ^ (ft & Z)  # Z on target copies to control
    nt = ft ^ (fc & X)  # X on control copies to target
    for qb, val in ((c, nc), (t, nt)):
        if val:
            frame[qb] = val
        else:
            frame.pop(qb, None)


def _run_cycle(circuit: ReadoutCircuit, frame: dict[int, int],
               events: Sequence[ErrorEvent]) -> tuple[set[int], dict[int, int]]:
    """Propagate through one cycle; returns (flipped ancillas, data frame)."""
    m = circuit.n_data
    n_p = circuit.n_plaquettes
    frame = {qb: v for qb, v in frame.items() if qb < m}  # ancillas are freshly prepared
    by_round: dict[int, list[ErrorEvent]] = {}
    for ev in events:
        by_round.setdefault(ev.round, []).append(ev)
    flips: set[int] = set()

    def inject(rnd):
        for ev in by_round.get(rnd, ()):
            for qb, pa in ev.paulis:
                v = frame.get(qb, 0) ^ pa
                if v:
                    frame[qb] = v
                else:
                    frame.pop(qb, None)
            if ev.flip >= 0:
                flips.symmetric_difference_update((ev.flip,))

    inject(0)
    for k in CNOT_ROUNDS:
        if frame:
            gates = circuit._cnot_of[k - 1]
            seen = set()
            for qb in list(frame):
                g = gates.get(qb)
                if g is not None and g not in seen:
                    seen.add(g)
                    _apply_cnot(frame, *g)
        inject(k)
    # round 5: measurement (flips recorded in inject act on the outcome)
    for qb, v in frame.items():
        if qb < m:
            continue
        if qb < m + n_p:
            hit = v & X
        else:
            hit = v & Z
        if hit:
            flips.symmetric_difference_update((qb,))
    inject(5)
    data = {qb: v for qb, v in frame.items() if qb < m}
    return flips, data


def _data_syndrome(circuit: ReadoutCircuit, data: dict[int, int]) -> set[int]:
    """Ancillas whose stabilizer anticommutes with the data frame."""
    lat = circuit.lattice
    out: set[int] = set()
    for e, v in data.items():
        if v & X:
            for q in lat.edge_plaquettes(e):
                out.symmetric_difference_update((circuit.plaquette_ancilla(q),))
        if v & Z:
            for s in lat.edge_sites(e):
                out.symmetric_difference_update((circuit.site_ancilla(s),))
    return out


@dataclass(frozen=True)
class Propagation:
    """Detector flips (ancilla id, layer) and the final data error."""

    detectors: frozenset[tuple[int, int]]
    x_error: tuple[int, ...]
    z_error: tuple[int, ...]

    def plaquette_detectors(self, circuit: ReadoutCircuit) -> list[tuple[int, int]]:
        return sorted((a - circuit.n_data, lay) for a, lay in self.detectors
                      if circuit.is_plaquette_ancilla(a))

    def site_detectors(self, circuit: ReadoutCircuit) -> list[tuple[int, int]]:
        off = circuit.n_data + circuit.n_plaquettes
        return sorted((a - off, lay) for a, lay in self.detectors if circuit.is_site_ancilla(a))


def propagate_events(circuit: ReadoutCircuit, events: Sequence[ErrorEvent]) -> Propagation:
    """Run all cycles with the given faults and collect detector flips."""
    data: dict[int, int] = {}
    prev: set[int] = set()
    det: set[tuple[int, int]] = set()
    by_cycle: dict[int, list[ErrorEvent]] = {}
    for ev in events:
        if not 0 <= ev.cycle < circuit.t_rounds:
            raise CircuitError("event outside the circuit")
        by_cycle.setdefault(ev.cycle, []).append(ev)
    for tau in range(circuit.t_rounds):
        flips, data = _run_cycle(circuit, data, by_cycle.get(tau, ()))
        for a in flips ^ prev:
            det.add((a, tau))
        prev = flips
    final = _data_syndrome(circuit, data)
    for a in final ^ prev:
        det.add((a, circuit.t_rounds))
    xs = tuple(sorted(e for e, v in data.items() if v & X))
    zs = tuple(sorted(e for e, v in data.items() if v & Z))
    return Propagation(frozenset(det), xs, zs)


def propagate_event(circuit: ReadoutCircuit, event: ErrorEvent) -> Propagation:
    return propagate_events(circuit, [event])


def _local_effect(circuit: ReadoutCircuit, event: ErrorEvent) -> Propagation:
    """Same result as propagate_event, using the one-cycle shortcut."""
    flips, data = _run_cycle(circuit, {}, [event])
    tau = event.cycle
    det = {(a, tau) for a in flips}
    for a in flips ^ _data_syndrome(circuit, data):
        det ^= {(a, tau + 1)}
    xs = tuple(sorted(e for e, v in data.items() if v & X))
    zs = tuple(sorted(e for e, v in data.items() if v & Z))
    return Propagation(frozenset(det), xs, zs)


# ---------------------------------------------------------------------------
# the 3D decoding graph
# ---------------------------------------------------------------------------

@dataclass
class FaultDictionary:
    """Edge classes of the 3D graph.

    ``coefficients[e]`` is p(e)/p (priors are first-order sums over the
    class), ``projection[e]`` the 2D chain Pi(e) as lattice edge ids and
    ``events[e]`` the indices of one-cycle template events in the class
    together with their cycle offsets.
    """

    circuit: ReadoutCircuit
    error_kind: str
    coefficients: np.ndarray
    projection: list[tuple[int, ...]]
    events: list[list[tuple[int, int]]]
    templates: list[ErrorEvent]
    vertex_coords: list[tuple[int, int]]  # (stabilizer index, layer); -1 layer for T
    logical_2d: np.ndarray
    edge_kind: list[str] = field(default_factory=list)

    def priors(self, p: float) -> np.ndarray:
        return self.coefficients * float(p)

    def noise(self, p: float):
        from .noise import NoiseModel

        rates = self.priors(p)
        if np.any(rates >= 0.5):
            raise CircuitError(f"p={p:g} gives an edge prior >= 1/2")
        return NoiseModel(rates, float(p))


def _edge_orientation(a: tuple[int, int], b: tuple[int, int], same_stab: bool) -> str:
    if b[1] < 0:
        return "hanging"
    if same_stab:
        return "time"
    return "space" if a[1] == b[1] else "diagonal"


def build_3d_decoding_graph(lattice: SurfaceLattice, t_rounds: int, p: float,
                            error_kind: str, schedule: Sequence[str] = DEFAULT_SCHEDULE
                            ) -> tuple[DecodingGraph, FaultDictionary]:
    """Space-time decoding graph for bit-flip (``"bit"``) or phase-flip (``"phase"``) faults.

    Vertices are (stabilizer, layer) for t + 1 layers, numbered layer-major,
    followed by T vertices (one per hanging edge).  The 3D logical chain
    holds the edges whose projection has odd overlap with the 2D logical
    chain of the matching 2D graph.
    """
    if error_kind not in ("bit", "phase"):
        raise ValueError("error_kind must be 'bit' or 'phase'")
    if not 0 < p <= 0.1:
        raise ValueError("p must lie in (0, 0.1]")
    circuit = build_readout_circuit(lattice, t_rounds, schedule)
    g2 = build_decoding_graph(lattice, error_kind, 0.01)
    gamma2 = g2.logical
    m = circuit.n_data
    if error_kind == "bit":
        n_stab, off, pauli_bit = circuit.n_plaquettes, m, X
    else:
        n_stab, off, pauli_bit = circuit.n_sites, m + circuit.n_plaquettes, Z
    layers = t_rounds + 1

    templates = cycle_events(circuit, 0)
    effects = []
    for ev in templates:
        pr = _local_effect(circuit, ev)
        dets = sorted((a - off, lay) for a, lay in pr.detectors if off <= a < off + n_stab)
        err = pr.x_error if error_kind == "bit" else pr.z_error
        if len(dets) > 2:
            raise CircuitError(f"fault {ev} flips {len(dets)} detectors")
        effects.append((tuple(dets), err))

    classes: dict[tuple, int] = {}
    members: list[list[tuple[int, int]]] = []
    coef: list[float] = []
    proj: list[tuple[int, ...]] = []
    ends: list[tuple[tuple[int, int], tuple[int, int]]] = []
    gparity: list[int] = []
    for tau in range(t_rounds):
        for i, (dets, err) in enumerate(effects):
            if not dets:
                continue
            key = tuple((s, lay + tau) for s, lay in dets)
            par = int(np.count_nonzero(gamma2[list(err)]) & 1) if err else 0
            cid = classes.get(key)
            if cid is None:
                cid = len(members)
                classes[key] = cid
                members.append([])
                coef.append(0.0)
                proj.append(tuple(err))
                ends.append((key[0], key[1] if len(key) == 2 else (-1, -1)))
                gparity.append(par)
            elif gparity[cid] != par:
                raise CircuitError(f"events of edge class {key} disagree on the logical parity")
            elif len(err) < len(proj[cid]):
                proj[cid] = tuple(err)
            members[cid].append((i, tau))
            coef[cid] += templates[i].weight

    n_v = n_stab * layers
    edges = np.empty((len(members), 2), dtype=np.int64)
    coords = [(s, lay) for lay in range(layers) for s in range(n_stab)]
    kinds = []
    t_ids = []
    for cid, (a, b) in enumerate(ends):
        u = a[1] * n_stab + a[0]
        if b[1] < 0:
            v = n_v + len(t_ids)
            t_ids.append(v)
            coords.append((a[0], -1))
        else:
            v = b[1] * n_stab + b[0]
        edges[cid] = (u, v)
        kinds.append(_edge_orientation(a, b, b[1] >= 0 and a[0] == b[0]))
    coefficients = np.asarray(coef)
    rates = coefficients * p
    if np.any(rates >= 0.5):
        raise CircuitError(f"p={p:g} gives an edge prior >= 1/2")
    boundary = np.zeros(n_v + len(t_ids), dtype=bool)
    boundary[t_ids] = True
    logical = np.asarray(gparity, dtype=bool)
    graph = DecodingGraph(n_v + len(t_ids), edges, rates, boundary, logical, tuple(proj),
                          f"{error_kind} 3d r={lattice.r} t={t_rounds}")
    fd = FaultDictionary(circuit, error_kind, coefficients, proj, members, templates, coords,
                         gamma2.copy(), kinds)
    return graph, fd


def project(fault_dictionary: FaultDictionary, chain) -> np.ndarray:
    """2D chain Pi(E): XOR of the per-edge projections."""
    out = np.zeros(fault_dictionary.circuit.n_data, dtype=bool)
    for e in np.flatnonzero(np.asarray(chain, dtype=bool)):
        for q in fault_dictionary.projection[e]:
            out[q] ^= True
    return out


def correctable_3d(graph: DecodingGraph, fault_dictionary: FaultDictionary, E) -> bool:
    """Decode the relative syndrome and test R xor E against the 3D logical chain."""
    from .decoding import match_syndrome

    E = np.asarray(E, dtype=bool)
    rec = match_syndrome(graph, syndrome_of(graph, E))
    return rec.parity == parity(graph, E)


def correctable_projected(graph: DecodingGraph, fault_dictionary: FaultDictionary, E) -> bool:
    """Same question answered on the 2D lattice: Pi(R) xor Pi(E) against Gamma."""
    from .decoding import decode

    E = np.asarray(E, dtype=bool)
    R = decode(graph, syndrome_of(graph, E))
    residual = project(fault_dictionary, R ^ E)
    return not (np.count_nonzero(residual & fault_dictionary.logical_2d) & 1)


def vertex_degrees(graph: DecodingGraph) -> np.ndarray:
    return np.bincount(graph.edges.ravel(), minlength=graph.n_vertices)
