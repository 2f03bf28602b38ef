"""Multiphase network model: index maps, phase-pair incidence, partitioned
admittance assembly, and the zero-load voltage profile.

A network is a single slack bus plus PQ buses, each carrying an arbitrary
nonempty subset of the phases ``a``, ``b``, ``c``.  Lines supply per-phase
series admittance blocks (and optional shunt blocks) directly in per unit;
impedance-to-admittance conversion from feeder data sheets lives in the
``feeder-data`` converter scripts, not here.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateProfileError,
    InputFormatError,
    ModelError,
    SingularModelError,
)

PHASES = "abc"
DELTA_PAIRS = ("ab", "bc", "ca")

# Numerical guards used at model-build time.
SYMMETRY_RTOL = 1e-12
RCOND_FLOOR = 1e-14
ZERO_LOAD_RESIDUAL_TOL = 1e-10
PROFILE_FLOOR = 1e-12


def canonical_phases(phases) -> str:
    """Normalize a phase set (string or iterable) to canonical 'abc' order."""
    seen = set(phases)
    bad = seen - set(PHASES)
    if bad or not seen:
        raise InputFormatError(f"invalid phase set {phases!r}; expected subset of 'abc'")
    return "".join(p for p in PHASES if p in seen)


@dataclass(frozen=True)
class PhaseIndexMap:
    """Deterministic indexing of existing phases and phase-pair connections.

    PQ buses are numbered in declaration order; within a bus, phases follow
    ``a < b < c`` and delta pairs follow ``ab < bc < ca``.  The slack bus is
    indexed separately by the owning :class:`NetworkModel`.
    """

    bus_ids: tuple
    phases_per_bus: tuple
    delta_per_bus: tuple
    phase_index: dict = field(repr=False)
    delta_index: dict = field(repr=False)

    @property
    def bus_count(self) -> int:
        return len(self.bus_ids)

    @property
    def n_phases(self) -> int:
        return len(self.phase_index)

    @property
    def n_delta(self) -> int:
        return len(self.delta_index)

    def phase_labels(self):
        """(bus, phase) pairs ordered by column index."""
        return sorted(self.phase_index, key=self.phase_index.get)

    def delta_labels(self):
        """(bus, pair) pairs ordered by row index."""
        return sorted(self.delta_index, key=self.delta_index.get)


def build_phase_index(bus_ids, phases_per_bus, delta_per_bus) -> PhaseIndexMap:
    phase_index = {}
    for bus, phases in zip(bus_ids, phases_per_bus):
        for p in phases:
            phase_index[(bus, p)] = len(phase_index)
    delta_index = {}
    for bus, phases, pairs in zip(bus_ids, phases_per_bus, delta_per_bus):
        for pair in pairs:
            if pair not in DELTA_PAIRS:
                raise ModelError(f"bus {bus!r}: unknown phase pair {pair!r}")
            if pair[0] not in phases or pair[1] not in phases:
                raise ModelError(
                    f"bus {bus!r}: delta connection {pair!r} references a missing phase"
                )
            delta_index[(bus, pair)] = len(delta_index)
    return PhaseIndexMap(
        bus_ids=tuple(bus_ids),
        phases_per_bus=tuple(phases_per_bus),
        delta_per_bus=tuple(tuple(p) for p in delta_per_bus),
        phase_index=phase_index,
        delta_index=delta_index,
    )


@dataclass(frozen=True)
class ConnectionMatrix:
    """Signed phase-to-pair incidence ``H`` and its absolute value ``L``.

    Each row holds +1 at the first phase of the pair and -1 at the second;
    a fully connected three-phase bus owns the block
    ``[[1,-1,0],[0,1,-1],[-1,0,1]]``.
    """

    H: np.ndarray
    L: np.ndarray


def build_connection_matrix(index: PhaseIndexMap) -> ConnectionMatrix:
    """Build the incidence of existing phase-pair connections onto phases."""
    H = np.zeros((index.n_delta, index.n_phases), dtype=int)
    for (bus, pair), row in index.delta_index.items():
        try:
            H[row, index.phase_index[(bus, pair[0])]] = 1
            H[row, index.phase_index[(bus, pair[1])]] = -1
        except KeyError:
            raise ModelError(
                f"bus {bus!r}: delta connection {pair!r} references a missing phase"
            ) from None
    H.setflags(write=False)
    L = np.abs(H)
    L.setflags(write=False)
    return ConnectionMatrix(H=H, L=L)


@dataclass
class BusSpec:
    id: str
    phases: str
    delta_connections: tuple = ()


@dataclass
class LineSpec:
    from_bus: str
    to_bus: str
    phases: str
    y_series: np.ndarray
    y_shunt_from: np.ndarray | None = None
    y_shunt_to: np.ndarray | None = None


@dataclass
class SlackSpec:
    id: str
    voltages: np.ndarray


class NetworkModel:
    """Immutable partitioned admittance model of a multiphase network.

    Attributes
    ----------
    y00, y0l, yl0, yll : ndarray
        Blocks of the full admittance matrix, slack phases first.
    v0 : ndarray
        Slack voltage phasors (one per slack phase, p.u.).
    index : PhaseIndexMap
    connection : ConnectionMatrix
    rcond : float
        Reciprocal condition estimate of ``yll`` from its LU factors.
    """

    def __init__(self, y00, y0l, yl0, yll, v0, index, connection, slack_id, slack_phases):
        self.y00 = np.asarray(y00, dtype=complex)
        self.y0l = np.asarray(y0l, dtype=complex)
        self.yl0 = np.asarray(yl0, dtype=complex)
        self.yll = np.asarray(yll, dtype=complex)
        self.v0 = np.asarray(v0, dtype=complex)
        self.index = index
        self.connection = connection
        self.slack_id = slack_id
        self.slack_phases = slack_phases
        for arr in (self.y00, self.y0l, self.yl0, self.yll, self.v0):
            arr.setflags(write=False)

        full = np.block([[self.y00, self.y0l], [self.yl0, self.yll]])
        scale = max(1.0, np.abs(full).max())
        if np.abs(full - full.T).max() > SYMMETRY_RTOL * scale:
            raise ModelError("admittance matrix is not symmetric (non-reciprocal network)")

        try:
            with warnings.catch_warnings():
                # Exact singularity is detected below via the condition estimate.
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                self._lu = scipy.linalg.lu_factor(self.yll)
        except (ValueError, scipy.linalg.LinAlgError) as exc:
            raise SingularModelError(f"cannot factorize load-bus admittance: {exc}") from exc
        (gecon,) = scipy.linalg.get_lapack_funcs(("gecon",), (self.yll,))
        anorm = np.linalg.norm(self.yll, 1) if self.yll.size else 0.0
        rcond, info = gecon(self._lu[0], anorm, norm="1")
        self.rcond = float(rcond)
        if info != 0 or not np.isfinite(self.rcond) or self.rcond < RCOND_FLOOR:
            raise SingularModelError(
                f"load-bus admittance block is singular or near-singular (rcond={self.rcond:.3e})"
            )

    @property
    def n_phases(self) -> int:
        return self.index.n_phases

    @property
    def n_delta(self) -> int:
        return self.index.n_delta

    def solve_yll(self, rhs):
        """Solve ``yll @ x = rhs`` with the cached LU factorization."""
        return scipy.linalg.lu_solve(self._lu, rhs)

    @cached_property
    def yll_inverse(self) -> np.ndarray:
        inv = self.solve_yll(np.eye(self.n_phases, dtype=complex))
        inv.setflags(write=False)
        return inv


def assemble_network(buses, lines, slack) -> NetworkModel:
    """Assemble the partitioned admittance model by standard nodal assembly.

    Parameters
    ----------
    buses : sequence of BusSpec
    lines : sequence of LineSpec
        Each line carries a k x k complex series-admittance block over the
        phases it runs (k = number of shared phases, canonical order) plus
        optional shunt blocks charged half at each end by the converter.
    slack : SlackSpec

    Raises
    ------
    ModelError
        Duplicate/unknown buses, phase mismatches, PQ bus not electrically
        reachable from the slack, or a non-symmetric assembled matrix.
    SingularModelError
        ``yll`` cannot be factorized or is numerically singular.
    """
    bus_phases = {}
    bus_delta = {}
    order = []
    for b in buses:
        if b.id in bus_phases:
            raise ModelError(f"duplicate bus id {b.id!r}")
        bus_phases[b.id] = canonical_phases(b.phases)
        pairs = tuple(b.delta_connections)
        if len(set(pairs)) != len(pairs):
            raise ModelError(f"bus {b.id!r}: duplicate delta connection")
        bus_delta[b.id] = tuple(p for p in DELTA_PAIRS if p in pairs)
        if set(bus_delta[b.id]) != set(pairs):
            raise ModelError(f"bus {b.id!r}: unknown phase pair in {pairs!r}")
        order.append(b.id)
    if slack.id not in bus_phases:
        raise ModelError(f"slack bus {slack.id!r} is not a declared bus")
    if bus_delta[slack.id]:
        raise ModelError("delta connections on the slack bus are not supported")

    slack_phases = bus_phases[slack.id]
    v0 = np.asarray(slack.voltages, dtype=complex)
    if v0.shape != (len(slack_phases),):
        raise ModelError(
            f"slack voltage vector has length {v0.size}, expected {len(slack_phases)}"
        )

    pq_ids = [b for b in order if b != slack.id]
    index = build_phase_index(
        pq_ids, [bus_phases[b] for b in pq_ids], [bus_delta[b] for b in pq_ids]
    )

    m = len(slack_phases)
    n = index.n_phases
    gidx = {(slack.id, p): i for i, p in enumerate(slack_phases)}
    gidx.update({key: m + col for key, col in index.phase_index.items()})

    full = np.zeros((m + n, m + n), dtype=complex)
    adjacency = {b: set() for b in order}
    for li, line in enumerate(lines):
        for end in (line.from_bus, line.to_bus):
            if end not in bus_phases:
                raise ModelError(f"line {li}: unknown bus {end!r}")
        phases = canonical_phases(line.phases)
        for end in (line.from_bus, line.to_bus):
            missing = set(phases) - set(bus_phases[end])
            if missing:
                raise ModelError(
                    f"line {li} ({line.from_bus!r}-{line.to_bus!r}): phase(s) "
                    f"{''.join(sorted(missing))!r} absent at bus {end!r}"
                )
        k = len(phases)
        ys = np.asarray(line.y_series, dtype=complex)
        if ys.shape != (k, k):
            raise ModelError(f"line {li}: series block must be {k}x{k}, got {ys.shape}")
        fi = [gidx[(line.from_bus, p)] for p in phases]
        ti = [gidx[(line.to_bus, p)] for p in phases]
        full[np.ix_(fi, fi)] += ys
        full[np.ix_(ti, ti)] += ys
        full[np.ix_(fi, ti)] -= ys
        full[np.ix_(ti, fi)] -= ys
        for attr, idx in (("y_shunt_from", fi), ("y_shunt_to", ti)):
            blk = getattr(line, attr)
            if blk is not None:
                blk = np.asarray(blk, dtype=complex)
                if blk.shape != (k, k):
                    raise ModelError(f"line {li}: {attr} block must be {k}x{k}")
                full[np.ix_(idx, idx)] += blk
        if np.abs(ys).max() > 0.0:
            adjacency[line.from_bus].add(line.to_bus)
            adjacency[line.to_bus].add(line.from_bus)

    reached = {slack.id}
    frontier = [slack.id]
    while frontier:
        nxt = []
        for b in frontier:
            for other in adjacency[b]:
                if other not in reached:
                    reached.add(other)
                    nxt.append(other)
        frontier = nxt
    unreached = [b for b in pq_ids if b not in reached]
    if unreached:
        raise ModelError(f"bus(es) not connected to the slack: {unreached}")

    connection = build_connection_matrix(index)
    return NetworkModel(
        y00=full[:m, :m],
        y0l=full[:m, m:],
        yl0=full[m:, :m],
        yll=full[m:, m:],
        v0=v0,
        index=index,
        connection=connection,
        slack_id=slack.id,
        slack_phases=slack_phases,
    )


@dataclass(frozen=True)
class ZeroLoadProfile:
    """Voltage profile with all injections at zero.

    ``w`` solves ``yll @ w = -yl0 @ v0``; ``w_abs`` and ``Lw`` are the
    entrywise magnitudes and pair sums used throughout the certificates.
    A model whose profile has any (near-)zero entry is rejected because all
    certificate quantities divide by them.
    """

    w: np.ndarray
    w_abs: np.ndarray
    Lw: np.ndarray
    w_inverse_available: bool = True


def zero_load_voltage(model: NetworkModel) -> ZeroLoadProfile:
    """Compute the zero-load voltage and its pair magnitudes."""
    rhs = -model.yl0 @ model.v0
    w = model.solve_yll(rhs)
    residual = model.yll @ w - rhs
    if residual.size and np.abs(residual).max() > ZERO_LOAD_RESIDUAL_TOL:
        raise SingularModelError(
            "zero-load solve residual exceeds tolerance; model is ill-conditioned"
        )
    w_abs = np.abs(w)
    if w_abs.size and w_abs.min() <= PROFILE_FLOOR:
        raise DegenerateProfileError("zero-load voltage has a (near-)zero phase entry")
    Lw = model.connection.L @ w_abs
    if Lw.size and Lw.min() <= PROFILE_FLOOR:
        raise DegenerateProfileError("zero-load voltage has a (near-)zero phase-pair entry")
    for arr in (w, w_abs, Lw):
        arr.setflags(write=False)
    return ZeroLoadProfile(w=w, w_abs=w_abs, Lw=Lw)


# ---------------------------------------------------------------------------
# JSON interface
#
# Complex numbers are serialized as {"re": x, "im": y} everywhere.


def complex_from_doc(obj, where="value") -> complex:
    try:
        return complex(float(obj["re"]), float(obj["im"]))
    except (TypeError, KeyError, ValueError):
        raise InputFormatError(f"{where}: expected a {{'re': ..., 'im': ...}} object") from None


def complex_to_doc(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _block_from_doc(entries, k, where):
    if entries is None:
        return None
    if len(entries) != k * k:
        raise InputFormatError(f"{where}: expected {k * k} complex entries for {k} phases")
    vals = [complex_from_doc(e, f"{where}[{i}]") for i, e in enumerate(entries)]
    return np.array(vals, dtype=complex).reshape(k, k)


def network_from_json(doc: dict) -> NetworkModel:
    """Parse a network document.

    Schema::

        {"buses": [{"id", "phases", "delta_connections"?}],
         "lines": [{"from", "to", "phases", "series_admittance",
                    "shunt_from"?, "shunt_to"?}],
         "slack": {"id", "voltages"}}

    Admittance blocks are row-major flat lists of ``{"re", "im"}`` objects.
    """
    if not isinstance(doc, dict):
        raise InputFormatError("network document must be a JSON object")
    for key in ("buses", "lines", "slack"):
        if key not in doc:
            raise InputFormatError(f"network document is missing {key!r}")
    if isinstance(doc["slack"], list):
        raise ModelError("multiple slack buses are not supported")

    buses = []
    for i, b in enumerate(doc["buses"]):
        where = f"buses[{i}]"
        try:
            buses.append(
                BusSpec(
                    id=str(b["id"]),
                    phases=str(b["phases"]),
                    delta_connections=tuple(b.get("delta_connections", ())),
                )
            )
        except (TypeError, KeyError):
            raise InputFormatError(f"{where}: expected id and phases") from None

    lines = []
    for i, ln in enumerate(doc["lines"]):
        where = f"lines[{i}]"
        try:
            phases = canonical_phases(str(ln["phases"]))
            k = len(phases)
            lines.append(
                LineSpec(
                    from_bus=str(ln["from"]),
                    to_bus=str(ln["to"]),
                    phases=phases,
                    y_series=_block_from_doc(ln["series_admittance"], k, f"{where}.series_admittance"),
                    y_shunt_from=_block_from_doc(ln.get("shunt_from"), k, f"{where}.shunt_from"),
                    y_shunt_to=_block_from_doc(ln.get("shunt_to"), k, f"{where}.shunt_to"),
                )
            )
        except KeyError as exc:
            raise InputFormatError(f"{where}: missing field {exc}") from None

    sl = doc["slack"]
    try:
        voltages = np.array(
            [complex_from_doc(v, f"slack.voltages[{i}]") for i, v in enumerate(sl["voltages"])],
            dtype=complex,
        )
        slack = SlackSpec(id=str(sl["id"]), voltages=voltages)
    except (TypeError, KeyError):
        raise InputFormatError("slack: expected id and voltages") from None

    return assemble_network(buses, lines, slack)


def network_from_file(path) -> NetworkModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"{path}: invalid JSON ({exc})") from None
    return network_from_json(doc)
