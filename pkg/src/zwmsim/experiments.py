"""Named experiments: two- and three-crystal path-identity interferometers,
their interference and coincidence sweeps, the three-box report and the KCBS
sweeps.

Builders return the raw perturbative state (vacuum amplitude close to one),
so counting rates carry their natural ``(g alpha)^2`` scale. Probabilistic
quantities are evaluated on the pair-conditioned state.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__
from .fock import FockState, TruncationPolicy, inner_product, relabel_mode, select, vacuum
from .measurement import (
    DetectorSpec,
    KcbsContext,
    Outcome,
    abl_conditional,
    coincidence_rate,
    condition_on_emission,
    kcbs_kappa,
    mean_photon_number,
    no_disturbance_gaps,
    project_onoff,
    sequential_joint_probability,
)
from .optics import (
    BeamSplitterSpec,
    PhaseShifterSpec,
    SpdcCrystalSpec,
    TritterSpec,
    apply_beam_splitter,
    apply_phase,
    apply_spdc,
    apply_tritter,
    tritter_final,
    tritter_initial,
)


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# -- alignment topologies ----------------------------------------------------


class CouplingKind(str, enum.Enum):
    IDENTIFIED = "identified"
    SEPARATE = "separate"
    BEAM_SPLITTER = "beam_splitter"


@dataclass(frozen=True)
class Coupling:
    kind: CouplingKind
    t: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CouplingKind(self.kind))
        if not 0.0 <= self.t <= 1.0:
            raise ConfigError("t", f"transmissivity {self.t} outside [0, 1]")

    @classmethod
    def identified(cls) -> "Coupling":
        return cls(CouplingKind.IDENTIFIED, 1.0)

    @classmethod
    def separate(cls) -> "Coupling":
        return cls(CouplingKind.SEPARATE, 0.0)

    @classmethod
    def beam_splitter(cls, t: float) -> "Coupling":
        return cls(CouplingKind.BEAM_SPLITTER, float(t))

    @classmethod
    def from_t(cls, t: float) -> "Coupling":
        """Identified at ``t == 1``, otherwise a beam splitter of transmissivity ``t``."""
        return cls.identified() if t == 1.0 else cls.beam_splitter(t)


@dataclass(frozen=True)
class IdlerLink:
    """Route the idler of crystal ``source`` into the idler mode of ``target``."""

    source: int
    target: int
    coupling: Coupling


@dataclass(frozen=True)
class AlignmentTopology:
    """Idler links between numbered crystals (1-based, in pump order)."""

    links: tuple[IdlerLink, ...] = ()

    def __post_init__(self):
        links = tuple(self.links)
        object.__setattr__(self, "links", links)
        sources = [ln.source for ln in links]
        targets = [ln.target for ln in links]
        if len(set(sources)) != len(sources) or len(set(targets)) != len(targets):
            raise ConfigError("alignment", "an idler may appear in at most one link chain")
        for ln in links:
            if ln.source >= ln.target:
                raise ConfigError("alignment", f"link {ln.source}->{ln.target} must point downstream")

    @classmethod
    def single(cls, source: int, target: int, coupling: Coupling) -> "AlignmentTopology":
        return cls((IdlerLink(source, target, coupling),))

    def link_from(self, crystal: int) -> IdlerLink | None:
        for ln in self.links:
            if ln.source == crystal and ln.coupling.kind is not CouplingKind.SEPARATE:
                return ln
        return None

    def loss_modes(self) -> tuple[str, ...]:
        return tuple(f"l{ln.source}" for ln in self.links if ln.coupling.kind is CouplingKind.BEAM_SPLITTER)

    def idler_support(self, crystal: int, include_loss: bool = True) -> tuple[str, ...]:
        """Final mode labels that carry the idler emitted by ``crystal``."""
        link = self.link_from(crystal)
        if link is None:
            return (f"i{crystal}",)
        downstream = self.idler_support(link.target, include_loss)
        if link.coupling.kind is CouplingKind.BEAM_SPLITTER and include_loss:
            return (f"l{crystal}",) + downstream
        return downstream

    def idler_modes(self, crystals: Iterable[int], include_loss: bool = True) -> tuple[str, ...]:
        seen: list[str] = []
        for c in crystals:
            for m in self.idler_support(c, include_loss):
                if m not in seen:
                    seen.append(m)
        return tuple(seen)


def build_chain(
    xis: Sequence[complex],
    order: int,
    topology: AlignmentTopology,
    truncation: TruncationPolicy,
) -> FockState:
    """Crystals ``1..n`` fire in sequence; linked idlers are routed downstream
    right after their crystal fires, before the next crystal acts."""
    n = len(xis)
    labels = [f"s{j}" for j in range(1, n + 1)] + [f"i{j}" for j in range(1, n + 1)] + list(topology.loss_modes())
    state = vacuum(labels, truncation)
    for j in range(1, n + 1):
        state = apply_spdc(state, SpdcCrystalSpec(f"s{j}", f"i{j}", xis[j - 1], order))
        link = topology.link_from(j)
        if link is None:
            continue
        if link.target > n:
            raise ConfigError("alignment", f"link target {link.target} beyond {n} crystals")
        if link.coupling.kind is CouplingKind.BEAM_SPLITTER:
            state = apply_beam_splitter(state, BeamSplitterSpec.from_transmissivity(f"i{j}", f"l{j}", link.coupling.t))
        state = relabel_mode(state, f"i{j}", f"i{link.target}")
    return state


# -- configuration and results -------------------------------------------------


def _grid(lo: float, hi: float, step: float) -> tuple[float, ...]:
    n = int(round((hi - lo) / step))
    return tuple(float(x) for x in np.round(lo + step * np.arange(n + 1), 12))


DEFAULT_T_GRID = _grid(0.0, 1.0, 0.05)
DEFAULT_PHI_GRID = tuple(float(x) for x in np.arange(121) * (math.pi / 60))
DEFAULT_ALPHA_GRID = _grid(0.05, 0.5, 0.05)

DEFAULT_ORDERS = {
    "visibility": 3,
    "coincidence": 3,
    "kcbs-alpha": 3,
    "kcbs-t": 1,
    "three-box": 1,
    "zwm2-rate": 1,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters shared by every experiment.

    ``alpha_p`` is the pump amplitude before splitting; each crystal's
    coupling is ``g`` times its share of the pump. ``order`` is the regime
    order K (``None`` means the per-experiment default in
    :data:`DEFAULT_ORDERS`). ``aligned`` and ``t`` define the default idler
    link (crystals 1->2 for ``zwm2``, 2->3 for ``zwm3``) unless ``alignment``
    is given explicitly.
    """

    topology: str = "zwm3"
    g: float = 1.0
    alpha_p: float = 0.2
    order: int | None = None
    aligned: bool = True
    t: float = 1.0
    alignment: AlignmentTopology | None = None
    phi_grid: tuple[float, ...] = DEFAULT_PHI_GRID
    t_grid: tuple[float, ...] = DEFAULT_T_GRID
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    max_photons: int = 12
    prune_epsilon: float = 1e-14
    workers: int = 1
    loss_tolerance: float = 1e-6
    collect_loss: bool = True

    def __post_init__(self):
        if self.topology not in ("zwm2", "zwm3"):
            raise ConfigError("topology", f"unknown topology {self.topology!r}")
        if self.order is not None and (int(self.order) != self.order or self.order < 1):
            raise ConfigError("order", "expansion order must be an integer >= 1")
        if self.g < 0:
            raise ConfigError("g", "coupling must be >= 0")
        if self.alpha_p < 0:
            raise ConfigError("alpha", "pump amplitude must be >= 0")
        if not 0.0 <= self.t <= 1.0:
            raise ConfigError("t", f"|t| = {self.t} outside [0, 1]")
        for key in ("phi_grid", "t_grid", "alpha_grid"):
            values = getattr(self, key)
            if len(values) == 0:
                raise ConfigError(key, "grid must not be empty")
            object.__setattr__(self, key, tuple(float(v) for v in values))
        if any(not 0.0 <= t <= 1.0 for t in self.t_grid):
            raise ConfigError("t_grid", "transmissivities must lie in [0, 1]")
        if any(a < 0 for a in self.alpha_grid):
            raise ConfigError("alpha_grid", "pump amplitudes must be >= 0")
        if self.max_photons < 2:
            raise ConfigError("max_photons", "need room for at least one pair")
        if self.order is not None and self.order > self.max_photons:
            raise ConfigError("order", "expansion order exceeds max_photons")
        if self.prune_epsilon < 0:
            raise ConfigError("prune_epsilon", "must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        if self.loss_tolerance < 0:
            raise ConfigError("loss_tolerance", "must be >= 0")

    def resolved_order(self, experiment: str) -> int:
        return self.order if self.order is not None else DEFAULT_ORDERS[experiment]

    def coupling(self) -> Coupling:
        return Coupling.from_t(self.t) if self.aligned else Coupling.separate()

    def resolved_alignment(self) -> AlignmentTopology:
        if self.alignment is not None:
            return self.alignment
        if self.topology == "zwm2":
            return AlignmentTopology.single(1, 2, self.coupling())
        return AlignmentTopology.single(2, 3, self.coupling())

    def truncation(self, order: int) -> TruncationPolicy:
        return TruncationPolicy(self.max_photons, order, self.prune_epsilon)

    def echo(self) -> dict[str, str]:
        """Flat description used in result metadata."""
        return {
            "topology": self.topology,
            "g": _fmt(self.g),
            "alpha": _fmt(self.alpha_p),
            "order": "default" if self.order is None else str(self.order),
            "aligned": str(self.aligned).lower(),
            "t": _fmt(self.t),
            "phi_grid": f"{len(self.phi_grid)} points [{_fmt(self.phi_grid[0])}, {_fmt(self.phi_grid[-1])}]",
            "t_grid": f"{len(self.t_grid)} points [{_fmt(self.t_grid[0])}, {_fmt(self.t_grid[-1])}]",
            "alpha_grid": f"{len(self.alpha_grid)} points [{_fmt(self.alpha_grid[0])}, {_fmt(self.alpha_grid[-1])}]",
            "max_photons": str(self.max_photons),
            "prune_epsilon": _fmt(self.prune_epsilon),
            "collect_loss": str(self.collect_loss).lower(),
        }


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


@dataclass
class ResultTable:
    schema: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row {row} does not match columns {self.columns}")

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [row[k] for row in self.rows]

    def where(self, **conditions) -> "ResultTable":
        idx = {self.columns.index(k): v for k, v in conditions.items()}
        rows = [r for r in self.rows if all(r[k] == v for k, v in idx.items())]
        return ResultTable(self.schema, self.columns, rows, dict(self.metadata))

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines.extend(",".join(_fmt(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def meta_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.metadata.items())


def _metadata(schema: str, config: ExperimentConfig, order: int, loss: float, conditioned: bool, **extra) -> dict:
    meta = {"schema": schema, "tool": "zwmsim", "version": __version__, "regime_order": str(order)}
    meta.update({f"config.{k}": v for k, v in config.echo().items()})
    meta["max_truncation_loss"] = format(loss, ".3e")
    meta["conditioning"] = "pair-conditioned" if conditioned else "none"
    meta.update({k: str(v) for k, v in extra.items()})
    return meta


def _grid_map(fn: Callable, jobs: list, workers: int) -> list:
    """Evaluate grid points, optionally in worker processes; order follows ``jobs``."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# -- builders --------------------------------------------------------------


def pump_split(config: ExperimentConfig) -> list[complex]:
    """Per-crystal couplings ``g * alpha_j`` after the classical pump splitter."""
    if config.topology == "zwm2":
        amps = np.array([1.0, 1.0]) / math.sqrt(2.0) * config.alpha_p
    else:
        amps = tritter_initial().matrix @ np.array([config.alpha_p, 0.0, 0.0])
    return [complex(config.g * a) for a in amps]


def build_zwm2(config: ExperimentConfig, order: int | None = None, topology: AlignmentTopology | None = None) -> FockState:
    """Two-crystal state before the signals meet on the output beam splitter."""
    if config.topology != "zwm2":
        raise ConfigError("topology", "build_zwm2 needs topology = zwm2")
    order = order if order is not None else config.resolved_order("zwm2-rate")
    topology = topology if topology is not None else config.resolved_alignment()
    return build_chain(pump_split(config), order, topology, config.truncation(order))


def build_zwm3(config: ExperimentConfig, order: int | None = None, topology: AlignmentTopology | None = None) -> FockState:
    """Three-crystal state before the final tritter."""
    if config.topology != "zwm3":
        raise ConfigError("topology", "build_zwm3 needs topology = zwm3")
    order = order if order is not None else config.resolved_order("visibility")
    topology = topology if topology is not None else config.resolved_alignment()
    return build_chain(pump_split(config), order, topology, config.truncation(order))


# -- interference ------------------------------------------------------------


@dataclass
class PhaseResponse:
    """Counting rate at a port as a trigonometric polynomial in the arm phase.

    ``R(phi) = sum_{m,n} weights[m, n] exp(i (n - m) phi)`` where ``m, n`` run
    over the photon numbers present in the phase-shifted arm.
    """

    photon_numbers: np.ndarray
    weights: np.ndarray

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        diff = self.photon_numbers[None, :] - self.photon_numbers[:, None]
        phase = np.exp(1j * np.multiply.outer(phi, diff))
        return np.real(np.sum(phase * self.weights, axis=(-2, -1)))


def phase_response(state: FockState, phase_mode: str, tritter: TritterSpec, port: str) -> PhaseResponse:
    """Decompose ``<n_port>`` after ``phase(phase_mode) -> tritter`` into harmonics.

    Each photon-number sector of ``phase_mode`` goes through the tritter once;
    the phase only multiplies sector ``n`` by ``exp(i n phi)``.
    """
    col = state.registry.index(phase_mode)
    ns = np.unique(state.occ[:, col])
    outs = [apply_tritter(select(state, state.occ[:, col] == n), tritter) for n in ns]
    p = outs[0].registry.index(port)
    weighted = [o._replace(o.occ, o.amps * o.occ[:, p], canonical=True) for o in outs]
    w = np.array([[inner_product(outs[a], weighted[b]) for b in range(len(ns))] for a in range(len(ns))])
    return PhaseResponse(ns.astype(float), w)


def rate_extrema(response: Callable, phi_grid: Sequence[float]) -> tuple[float, float]:
    """(R_max, R_min): best grid points refined by a bounded scalar search."""
    grid = np.asarray(phi_grid, dtype=float)
    values = response(grid)
    step = float(np.min(np.diff(np.sort(grid)))) if len(grid) > 1 else math.pi
    found = []
    for sign in (-1.0, 1.0):
        k = int(np.argmax(sign * values))
        best = sign * values[k]
        res = minimize_scalar(
            lambda x: -sign * float(response(x)),
            bounds=(grid[k] - step, grid[k] + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        found.append(max(best, -res.fun) * sign)
    return found[1], found[0]


def visibility_from_extrema(r_max: float, r_min: float) -> tuple[float, bool]:
    """Interference contrast; a zero total rate gives (0, True)."""
    total = r_max + r_min
    if total <= 0.0:
        return 0.0, True
    return (r_max - r_min) / total, False


DETECTED_PORT = "s3"


def _visibility_point(job):
    config, order, t = job
    topo = AlignmentTopology.single(2, 3, Coupling.from_t(t))
    state = build_zwm3(config, order, topo)
    response = phase_response(state, "s3", tritter_final(), DETECTED_PORT)
    r_max, r_min = rate_extrema(response, config.phi_grid)
    nu, degenerate = visibility_from_extrema(r_max, r_min)
    return (order, t, t * t, nu), state.truncation_loss, degenerate


def visibility_curve(config: ExperimentConfig) -> ResultTable:
    """Visibility of the detected tritter port against the 2->3 idler transmissivity,
    for every regime order up to the configured one."""
    top = config.resolved_order("visibility")
    jobs = [(config, k, t) for k in range(1, top + 1) for t in config.t_grid]
    results = _grid_map(_visibility_point, jobs, config.workers)
    rows = [r[0] for r in results]
    loss = max(r[1] for r in results)
    degenerate = sum(r[2] for r in results)
    meta = _metadata("visibility", config, top, loss, False, degenerate_points=degenerate, detected_port=DETECTED_PORT)
    return ResultTable("visibility", ("regime", "t", "T_intensity", "visibility"), rows, meta)


def _coincidence_point(job):
    config, order, alpha, aligned = job
    coupling = Coupling.identified() if aligned else Coupling.separate()
    cfg = replace(config, alpha_p=alpha)
    state = build_zwm3(cfg, order, AlignmentTopology.single(2, 3, coupling))
    return (alpha, int(aligned), coincidence_rate(state, "s2", "s3")), state.truncation_loss


def coincidence_curve(config: ExperimentConfig) -> ResultTable:
    """Signal coincidences ``<n_s2 n_s3>`` against pump amplitude, aligned and misaligned."""
    order = config.resolved_order("coincidence")
    jobs = [(config, order, a, aligned) for a in config.alpha_grid for aligned in (True, False)]
    results = _grid_map(_coincidence_point, jobs, config.workers)
    meta = _metadata("coincidence", config, order, max(r[1] for r in results), False)
    return ResultTable("coincidence", ("alpha", "aligned", "C_s"), [r[0] for r in results], meta)


def zwm2_rate(config: ExperimentConfig) -> ResultTable:
    """Two-crystal signal rate at one output of the 50:50 signal beam splitter."""
    if config.topology != "zwm2":
        config = replace(config, topology="zwm2")
    order = config.resolved_order("zwm2-rate")
    state = build_zwm2(config, order)
    h = 1.0 / math.sqrt(2.0)
    rows = []
    for phi in config.phi_grid:
        out = apply_phase(state, PhaseShifterSpec("s2", phi))
        out = apply_beam_splitter(out, BeamSplitterSpec("s1", "s2", h, h))
        rows.append((phi, mean_photon_number(out, "s1")))
    meta = _metadata("zwm2-rate", config, order, state.truncation_loss, False, detected_port="s1")
    return ResultTable("zwm2-rate", ("phi", "R_s"), rows, meta)


# -- contextuality -----------------------------------------------------------


def post_detector() -> DetectorSpec:
    """Detector firing on the post-selected signal state (first port behind the final tritter)."""
    return DetectorSpec(("s1",), "D_post", frame=tritter_final())


def kcbs_contexts(coupling: Coupling, collect_loss: bool = True) -> list[KcbsContext]:
    """The five detector pairs, each with the idler alignment it needs.

    Contexts 1-2 link crystal 1's idler into crystal 2, contexts 4-5 link
    crystal 2 into crystal 3, and context 3 uses no link. ``collect_loss``
    lets the idler bucket detectors also cover the reflected port of a
    partially transmitting link.
    """
    t12 = AlignmentTopology.single(1, 2, coupling)
    t23 = AlignmentTopology.single(2, 3, coupling)
    free = AlignmentTopology()
    post = post_detector()
    d12 = DetectorSpec(t12.idler_modes((1, 2), collect_loss), "D_i12")
    d23 = DetectorSpec(t23.idler_modes((2, 3), collect_loss), "D_i23")
    s3 = DetectorSpec(("s3",), "D_s3")
    i1 = DetectorSpec(free.idler_support(1), "D_i1")
    return [
        KcbsContext(1, post, d12, t12),
        KcbsContext(2, d12, s3, t12),
        KcbsContext(3, s3, i1, free),
        KcbsContext(4, i1, d23, t23),
        KcbsContext(5, d23, post, t23),
    ]


class _Zwm3Builder:
    """Picklable ``topology -> state`` callable that also records truncation loss."""

    def __init__(self, config: ExperimentConfig, order: int):
        self.config = config
        self.order = order
        self.loss = 0.0
        self._cache: dict = {}

    def __call__(self, topology: AlignmentTopology) -> FockState:
        if topology not in self._cache:
            state = build_zwm3(self.config, self.order, topology)
            self.loss = max(self.loss, state.truncation_loss)
            self._cache[topology] = state
        return self._cache[topology]


def kcbs_point(config: ExperimentConfig, order: int, coupling: Coupling) -> tuple[float, list[float], float, float]:
    """(kappa, five terms, max no-disturbance gap, truncation loss) at one setting."""
    builder = _Zwm3Builder(config, order)
    contexts = kcbs_contexts(coupling, config.collect_loss)
    kappa, terms = kcbs_kappa(contexts, builder)
    gaps = no_disturbance_gaps(contexts, builder)
    return kappa, terms, max(gaps), builder.loss


def _kcbs_job(job):
    config, order, value, coupling, label = job
    kappa, terms, gap, loss = kcbs_point(config, order, coupling)
    return (value, label, kappa, *terms), gap, loss


_KCBS_COLUMNS = ("alpha_or_t", "alignment", "kappa", "p1", "p2", "p3", "p4", "p5")


def _kcbs_table(config, order, jobs, schema) -> ResultTable:
    results = _grid_map(_kcbs_job, jobs, config.workers)
    meta = _metadata(
        schema,
        config,
        order,
        max(r[2] for r in results),
        True,
        max_no_disturbance_gap=format(max(r[1] for r in results), ".3e"),
    )
    return ResultTable(schema, _KCBS_COLUMNS, [r[0] for r in results], meta)


def kcbs_sweep_alpha(config: ExperimentConfig) -> ResultTable:
    """KCBS sum against pump amplitude with aligned and misaligned idlers."""
    order = config.resolved_order("kcbs-alpha")
    aligned = Coupling.from_t(config.t)
    jobs = []
    for a in config.alpha_grid:
        cfg = replace(config, alpha_p=a)
        jobs.append((cfg, order, a, aligned, "aligned"))
        jobs.append((cfg, order, a, Coupling.separate(), "misaligned"))
    return _kcbs_table(config, order, jobs, "kcbs-alpha")


def kcbs_sweep_t(config: ExperimentConfig) -> ResultTable:
    """KCBS sum against link transmissivity; ``misaligned`` rows are the t-independent reference."""
    order = config.resolved_order("kcbs-t")
    jobs = []
    for t in config.t_grid:
        jobs.append((config, order, t, Coupling.from_t(t), "aligned"))
        jobs.append((config, order, t, Coupling.separate(), "misaligned"))
    return _kcbs_table(config, order, jobs, "kcbs-t")


def three_box_quantities(config: ExperimentConfig, order: int | None = None) -> dict[str, float]:
    """Post-selection statistics of the three-box arrangement.

    Box 1 is read by the idler detector of crystal 1 while the idlers of
    crystals 2 and 3 are linked; box 3 by the idler detector of crystal 3
    while crystals 1 and 2 are linked.
    """
    order = order if order is not None else config.resolved_order("three-box")
    coupling = config.coupling()
    topo1 = AlignmentTopology.single(2, 3, coupling)
    topo3 = AlignmentTopology.single(1, 2, coupling)
    state1 = condition_on_emission(build_zwm3(config, order, topo1))
    state3 = condition_on_emission(build_zwm3(config, order, topo3))
    post = post_detector()
    box1 = DetectorSpec(topo1.idler_support(1), "D_i1")
    box3 = DetectorSpec(topo3.idler_support(3), "D_i3")
    pair23 = DetectorSpec(topo1.idler_modes((2, 3), config.collect_loss), "D_i23")

    def joint(state, det, out):
        return sequential_joint_probability(state, [(det, out), (post, Outcome.ON)])

    q = {
        "post_success": project_onoff(state1, post, Outcome.ON)[1],
        "joint_box1": joint(state1, box1, Outcome.ON),
        "joint_box1_complement": joint(state1, box1, Outcome.OFF),
        "abl_box1": abl_conditional(state1, box1, post),
        "joint_box3": joint(state3, box3, Outcome.ON),
        "joint_box3_complement": joint(state3, box3, Outcome.OFF),
        "abl_box3": abl_conditional(state3, box3, post),
        "joint_i23_off_post_on": joint(state1, pair23, Outcome.OFF),
    }
    q["abl_sum"] = q["abl_box1"] + q["abl_box3"]
    q["classical_bound"] = 1.0
    q["violation"] = q["abl_sum"] - 1.0
    return q


def three_box_report(config: ExperimentConfig) -> ResultTable:
    order = config.resolved_order("three-box")
    q = three_box_quantities(config, order)
    topo_loss = max(
        build_zwm3(config, order, AlignmentTopology.single(2, 3, config.coupling())).truncation_loss,
        build_zwm3(config, order, AlignmentTopology.single(1, 2, config.coupling())).truncation_loss,
    )
    meta = _metadata("three-box", config, order, topo_loss, True)
    return ResultTable("three-box", ("quantity", "value"), list(q.items()), meta)
