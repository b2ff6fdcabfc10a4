"""On-off detection, counting rates, sequential joint probabilities, ABL
conditionals and KCBS sums.

Projections follow the Lüders rule without renormalising, so the squared norm
of a chain of projected states is the joint probability of the chain.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .fock import FockState, norm, normalize, select
from .optics import TritterSpec, apply_tritter

NCHV_BOUND = 2.0
QUANTUM_BOUND = math.sqrt(5.0)


class UndefinedConditionalError(ZeroDivisionError):
    """Conditioning on an event of zero probability."""


class Outcome(str, enum.Enum):
    ON = "on"
    OFF = "off"


@dataclass(frozen=True)
class DetectorSpec:
    """Threshold detector over ``modes``.

    With ``frame`` set, the detector sits behind that tritter: its projector
    is ``U P U+`` where ``P`` acts on ``modes`` and ``U`` is the frame.
    """

    modes: tuple[str, ...]
    name: str = ""
    frame: TritterSpec | None = None

    def __post_init__(self):
        modes = (self.modes,) if isinstance(self.modes, str) else tuple(self.modes)
        if not modes:
            raise ValueError("detector needs at least one mode")
        if len(set(modes)) != len(modes):
            raise ValueError(f"repeated modes in detector {modes}")
        object.__setattr__(self, "modes", modes)
        if not self.name:
            object.__setattr__(self, "name", "D_" + "+".join(modes))

    @property
    def support(self) -> frozenset[str]:
        extra = self.frame.modes if self.frame is not None else ()
        return frozenset(self.modes) | frozenset(extra)


def project_onoff(state: FockState, det: DetectorSpec, out: Outcome | str) -> tuple[FockState, float]:
    """Lüders projection onto one detector outcome.

    ``off`` keeps the terms with no photon in any detector mode, ``on`` keeps
    the rest. Returns the unnormalised projected state and its squared norm.
    """
    out = Outcome(out)
    if det.frame is not None:
        state = apply_tritter(state, det.frame.inverse())
    idx = [state.registry.index(m) for m in det.modes]
    dark = (state.occ[:, idx] == 0).all(axis=1)
    projected = select(state, dark if out is Outcome.OFF else ~dark)
    if det.frame is not None:
        projected = apply_tritter(projected, det.frame)
    return projected, norm(projected) ** 2


def mean_photon_number(state: FockState, mode: str) -> float:
    n = state.occ[:, state.registry.index(mode)]
    return float(np.sum(n * np.abs(state.amps) ** 2))


def coincidence_rate(state: FockState, mode_a: str, mode_b: str) -> float:
    """Normally ordered ``<a+ b+ b a>`` for two distinct modes."""
    na = state.occ[:, state.registry.index(mode_a)]
    nb = state.occ[:, state.registry.index(mode_b)]
    return float(np.sum(na * nb * np.abs(state.amps) ** 2))


def sequential_joint_probability(
    state: FockState, steps: Sequence[tuple[DetectorSpec, Outcome | str]]
) -> float:
    """``<psi| P1 ... Pn ... P1 |psi>`` for a chain of detector outcomes."""
    for det, out in steps:
        state, _ = project_onoff(state, det, out)
        if len(state) == 0:
            return 0.0
    return norm(state) ** 2


def abl_conditional(
    state: FockState,
    intermediate: DetectorSpec,
    post: DetectorSpec,
    alternatives: Iterable[DetectorSpec] | None = None,
) -> float:
    """Probability of ``intermediate`` firing given that ``post`` fires.

    By default the intermediate measurement is dichotomic, so the denominator
    sums the ``on`` and ``off`` branches. ``alternatives`` replaces it with a
    complete set of mutually exclusive detectors (including ``intermediate``)
    whose ``on`` branches are summed instead.
    """
    num = sequential_joint_probability(state, [(intermediate, Outcome.ON), (post, Outcome.ON)])
    if alternatives is None:
        den = num + sequential_joint_probability(state, [(intermediate, Outcome.OFF), (post, Outcome.ON)])
    else:
        den = sum(sequential_joint_probability(state, [(d, Outcome.ON), (post, Outcome.ON)]) for d in alternatives)
    if den <= 1e-15:
        raise UndefinedConditionalError(f"post-selection on {post.name} has zero probability")
    return num / den


def three_box_sum(
    state: FockState,
    post: DetectorSpec,
    boxes: tuple[DetectorSpec, DetectorSpec] | None = None,
    alternatives: Iterable[DetectorSpec] | None = None,
) -> float:
    """``p(1|pre, post) + p(3|pre, post)``; the classical bound is 1.

    ``boxes`` defaults to signal-mode detectors on ``s1`` and ``s3``.
    """
    if boxes is None:
        boxes = (DetectorSpec(("s1",), "box1"), DetectorSpec(("s3",), "box3"))
    alternatives = None if alternatives is None else list(alternatives)
    return sum(abl_conditional(state, b, post, alternatives) for b in boxes)


def condition_on_emission(state: FockState) -> FockState:
    """Remove the global vacuum term and renormalise ("pair-conditioned")."""
    emitted = state.occ.sum(axis=1) > 0
    return normalize(select(state, emitted))


@dataclass(frozen=True)
class KcbsContext:
    """One of the five compatible detector pairs of the KCBS sum.

    ``topology`` is whatever the pipeline builder needs to prepare the state
    measured in this context (an idler alignment topology in practice).
    """

    index: int
    off_detector: DetectorSpec
    on_detector: DetectorSpec
    topology: object = None

    def __post_init__(self):
        if not 1 <= self.index <= 5:
            raise ValueError("context index must be in 1..5")
        if self.off_detector.support & self.on_detector.support:
            raise ValueError(
                f"context {self.index}: detectors {self.off_detector.name} and "
                f"{self.on_detector.name} share modes"
            )


def kcbs_kappa(
    contexts: Sequence[KcbsContext],
    builder: Callable[[object], FockState],
    condition: bool = True,
) -> tuple[float, list[float]]:
    """KCBS sum of ``P(off_i, on_{i+1})`` over five contexts.

    ``builder(context.topology)`` prepares the state of each context; with
    ``condition`` the state is first conditioned on at least one emission.
    """
    if len(contexts) != 5:
        raise ValueError("KCBS needs exactly five contexts")
    terms = []
    for ctx in contexts:
        state = builder(ctx.topology)
        if condition:
            state = condition_on_emission(state)
        terms.append(
            sequential_joint_probability(state, [(ctx.off_detector, Outcome.OFF), (ctx.on_detector, Outcome.ON)])
        )
    return float(sum(terms)), terms


def no_disturbance_gaps(
    contexts: Sequence[KcbsContext],
    builder: Callable[[object], FockState],
    condition: bool = True,
) -> list[float]:
    """``|P_i(on) - P_{i+1}(on)|`` for the detector shared by contexts i, i+1.

    The on-detector of context ``i`` is the off-detector of context ``i+1``
    (cyclically); its firing probability is compared between the two states.
    """
    states = [builder(c.topology) for c in contexts]
    if condition:
        states = [condition_on_emission(s) for s in states]
    gaps = []
    for k, ctx in enumerate(contexts):
        nxt = (k + 1) % len(contexts)
        shared = ctx.on_detector
        p_here = project_onoff(states[k], shared, Outcome.ON)[1]
        p_next = project_onoff(states[nxt], contexts[nxt].off_detector, Outcome.ON)[1]
        gaps.append(abs(p_here - p_next))
    return gaps


def hardy_sums(terms: Sequence[float]) -> tuple[float, float]:
    """The two Hardy conditions ``P(0,1|1,2) + P(0,1|2,3)`` and ``P(0,1|3,4) + P(0,1|4,5)``."""
    return terms[0] + terms[1], terms[2] + terms[3]


def pentagram_vectors() -> np.ndarray:
    """Five unit vectors in R^3 with consecutive (cyclic) vectors orthogonal."""
    cos_theta = math.sqrt(math.cos(math.pi / 5) / (1 + math.cos(math.pi / 5)))
    sin_theta = math.sqrt(1 - cos_theta**2)
    vecs = []
    for j in range(5):
        ang = 4 * math.pi * j / 5
        vecs.append([cos_theta, sin_theta * math.cos(ang), sin_theta * math.sin(ang)])
    return np.array(vecs)


def kcbs_qutrit_reference() -> float:
    """KCBS sum on the symmetric pentagram with the state along its axis (sqrt 5)."""
    vecs = pentagram_vectors()
    psi = np.array([1.0, 0.0, 0.0])
    total = 0.0
    for i in range(5):
        p_i = np.outer(vecs[i], vecs[i])
        p_next = np.outer(vecs[(i + 1) % 5], vecs[(i + 1) % 5])
        branch = p_next @ (np.eye(3) - p_i) @ psi
        total += float(branch @ branch)
    return total


def kcbs_nchv_bound() -> float:
    """Largest KCBS sum over deterministic 0/1 assignments with exclusive neighbours."""
    best = 0
    for bits in itertools.product((0, 1), repeat=5):
        if any(bits[i] and bits[(i + 1) % 5] for i in range(5)):
            continue
        best = max(best, sum((1 - bits[i]) * bits[(i + 1) % 5] for i in range(5)))
    return float(best)
