"""Unitary optical elements acting on sparse Fock states.

Beam splitters, phase shifters, the two three-port tritters used by the
three-crystal interferometer, and the two-mode squeezer describing
down-conversion with a classical undepleted pump. The squeezer is applied as a
truncated Taylor series of its unitary; :func:`dense_exponential_oracle`
provides an independent dense reference on a small two-mode space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .fock import FockState, enforce_bounds

UNITARITY_TOL = 1e-12


class SpecError(ValueError):
    """An optical element is ill-defined (non-unitary, repeated modes, ...)."""


class ResourceError(RuntimeError):
    """A dense computation would be too large."""


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Two-mode beam splitter.

    Creation operators map as ``a+ -> t a+ + r b+`` and
    ``b+ -> -conj(r) a+ + conj(t) b+``; a single photon entering ``mode_a``
    leaves in ``mode_a`` with amplitude ``t`` and in ``mode_b`` with ``r``.
    """

    mode_a: str
    mode_b: str
    t: complex
    r: complex

    def __post_init__(self):
        if self.mode_a == self.mode_b:
            raise SpecError("beam splitter needs two distinct modes")
        if abs(abs(self.t) ** 2 + abs(self.r) ** 2 - 1.0) > UNITARITY_TOL:
            raise SpecError(f"|t|^2 + |r|^2 = {abs(self.t) ** 2 + abs(self.r) ** 2!r} != 1")

    @classmethod
    def from_transmissivity(cls, mode_a: str, mode_b: str, t: float) -> "BeamSplitterSpec":
        """Real beam splitter with amplitude transmissivity ``t`` in [0, 1]."""
        if not 0.0 <= t <= 1.0:
            raise SpecError(f"transmissivity {t} outside [0, 1]")
        return cls(mode_a, mode_b, complex(t), complex(math.sqrt(max(0.0, 1.0 - t * t))))

    def inverse(self) -> "BeamSplitterSpec":
        return BeamSplitterSpec(self.mode_a, self.mode_b, complex(self.t).conjugate(), -complex(self.r))


@dataclass(frozen=True)
class PhaseShifterSpec:
    mode: str
    phi: float


def apply_beam_splitter(state: FockState, spec: BeamSplitterSpec) -> FockState:
    a = state.registry.index(spec.mode_a)
    b = state.registry.index(spec.mode_b)
    if len(state) == 0:
        return state
    occ, amps = kernels.bs_expand(
        np.ascontiguousarray(state.occ), np.ascontiguousarray(state.amps), a, b, complex(spec.t), complex(spec.r)
    )
    return enforce_bounds(state, occ, amps)


def apply_phase(state: FockState, spec: PhaseShifterSpec) -> FockState:
    n = state.occ[:, state.registry.index(spec.mode)]
    return state._replace(state.occ, state.amps * np.exp(1j * spec.phi * n), canonical=True)


# -- tritters ---------------------------------------------------------------


@dataclass(frozen=True)
class TritterSpec:
    """Three-port unitary acting on ``modes``.

    ``matrix[i, j]`` is the amplitude for a photon entering port ``j`` to
    leave through port ``i``. ``steps`` realise the matrix as a sequence of
    beam splitters and phase shifters on local port indices:
    ``("bs", p, q, t, r)`` or ``("phase", p, phi)``. Multi-photon terms are
    transformed by running the steps.
    """

    modes: tuple[str, str, str]
    matrix: np.ndarray = field(repr=False)
    steps: tuple = field(repr=False)

    def __post_init__(self):
        if len(self.modes) != 3 or len(set(self.modes)) != 3:
            raise SpecError(f"tritter needs three distinct modes, got {self.modes}")
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.shape != (3, 3):
            raise SpecError("tritter matrix must be 3x3")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "steps", tuple(tuple(s) for s in self.steps))

    def is_unitary(self, tol: float = UNITARITY_TOL) -> bool:
        return bool(np.abs(self.matrix.conj().T @ self.matrix - np.eye(3)).max() <= tol)

    def step_matrix(self) -> np.ndarray:
        """Single-photon matrix generated by ``steps``."""
        total = np.eye(3, dtype=np.complex128)
        for step in self.steps:
            m = np.eye(3, dtype=np.complex128)
            if step[0] == "bs":
                _, p, q, t, r = step
                m[p, p], m[q, p] = t, r
                m[p, q], m[q, q] = -np.conj(r), np.conj(t)
            elif step[0] == "phase":
                _, p, phi = step
                m[p, p] = np.exp(1j * phi)
            else:
                raise SpecError(f"unknown tritter step {step!r}")
            total = m @ total
        return total

    def inverse(self) -> "TritterSpec":
        steps = []
        for step in reversed(self.steps):
            if step[0] == "bs":
                _, p, q, t, r = step
                steps.append(("bs", p, q, np.conj(t), -r))
            else:
                _, p, phi = step
                steps.append(("phase", p, -phi))
        return TritterSpec(self.modes, self.matrix.conj().T, tuple(steps))

    def on(self, modes) -> "TritterSpec":
        return TritterSpec(tuple(modes), self.matrix, self.steps)


_S2 = math.sqrt(2.0)
_S3 = math.sqrt(3.0)
# BS1 (t = 1/sqrt3) on ports 1,2 followed by BS2 (t = 1/sqrt2) on ports 2,3
_INITIAL_STEPS = (
    ("bs", 0, 1, 1 / _S3, math.sqrt(2.0 / 3.0)),
    ("bs", 1, 2, 1 / _S2, 1 / _S2),
)
_INITIAL_MATRIX = np.array(
    [
        [1, -_S2, 0],
        [1, 1 / _S2, -_S3 / _S2],
        [1, 1 / _S2, _S3 / _S2],
    ]
) / _S3
# the printed final tritter is not unitary; this completion keeps its first
# column (1,-1,1)/sqrt3 and its third row
_FINAL_STEPS = (
    ("phase", 1, math.pi),
    ("phase", 2, math.pi),
    *_INITIAL_STEPS,
    ("phase", 1, math.pi),
)
_FINAL_MATRIX = np.array(
    [
        [1, _S2, 0],
        [-1, 1 / _S2, -_S3 / _S2],
        [1, -1 / _S2, -_S3 / _S2],
    ]
) / _S3


def tritter_initial(modes=("s1", "s2", "s3")) -> TritterSpec:
    """Pump-splitting tritter: port 1 goes to (1, 1, 1)/sqrt3."""
    return TritterSpec(tuple(modes), _INITIAL_MATRIX, _INITIAL_STEPS)


def tritter_final(modes=("s1", "s2", "s3")) -> TritterSpec:
    """Post-selection tritter: port 1 goes to (1, -1, 1)/sqrt3."""
    return TritterSpec(tuple(modes), _FINAL_MATRIX, _FINAL_STEPS)


def apply_tritter(state: FockState, spec: TritterSpec) -> FockState:
    if not spec.is_unitary():
        raise SpecError("tritter matrix is not unitary")
    if np.abs(spec.step_matrix() - spec.matrix).max() > 1e-12:
        raise SpecError("tritter steps do not reproduce its matrix")
    for step in spec.steps:
        if step[0] == "bs":
            _, p, q, t, r = step
            state = apply_beam_splitter(state, BeamSplitterSpec(spec.modes[p], spec.modes[q], t, r))
        else:
            _, p, phi = step
            state = apply_phase(state, PhaseShifterSpec(spec.modes[p], phi))
    return state


# -- down-conversion ----------------------------------------------------------


@dataclass(frozen=True)
class SpdcCrystalSpec:
    """Phase-matched crystal with classical pump: generator ``xi a_s+ a_i+ - h.c.``

    ``xi`` is the effective coupling (interaction strength times pump
    amplitude, interaction time absorbed); ``order`` is the Taylor order K.
    """

    signal: str
    idler: str
    xi: complex
    order: int = 1

    def __post_init__(self):
        if self.signal == self.idler:
            raise SpecError("signal and idler must be distinct modes")
        if int(self.order) != self.order or self.order < 1:
            raise SpecError("expansion order must be an integer >= 1")
        if abs(self.xi) >= 1.0:
            warnings.warn(f"|xi| = {abs(self.xi):.3g} >= 1: perturbative expansion unreliable", stacklevel=2)


def _pair_generator(state: FockState, s: int, i: int, xi: complex) -> tuple[np.ndarray, np.ndarray]:
    occ, amps = state.occ, state.amps
    ns, ni = occ[:, s], occ[:, i]
    up = occ.copy()
    up[:, s] += 1
    up[:, i] += 1
    up_amps = xi * amps * np.sqrt((ns + 1.0) * (ni + 1.0))
    ok = (ns > 0) & (ni > 0)
    down = occ[ok].copy()
    down[:, s] -= 1
    down[:, i] -= 1
    down_amps = -np.conj(xi) * amps[ok] * np.sqrt(ns[ok] * ni[ok] * 1.0)
    return np.vstack([up, down]), np.concatenate([up_amps, down_amps])


def apply_spdc(state: FockState, spec: SpdcCrystalSpec) -> FockState:
    """Order-K Taylor partial sum of ``exp(xi a_s+ a_i+ - conj(xi) a_s a_i)``.

    The generator is applied within the state's photon bounds: terms beyond
    ``max_total_photons`` count as truncation loss, terms beyond the pair cap
    of ``max_expansion_order`` as regime discards.
    """
    s = state.registry.index(spec.signal)
    i = state.registry.index(spec.idler)
    xi = complex(spec.xi)
    occs, ampss = [state.occ], [state.amps]
    loss = discard = 0.0
    term = state
    for k in range(1, spec.order + 1):
        occ, amps = _pair_generator(term, s, i, xi)
        nxt = enforce_bounds(term, occ, amps / k, regime=True)
        loss += nxt.truncation_loss - term.truncation_loss
        discard += nxt.order_discard - term.order_discard
        term = nxt
        if len(term) == 0:
            break
        occs.append(term.occ)
        ampss.append(term.amps)
    return state._replace(np.vstack(occs), np.concatenate(ampss), loss=loss, discard=discard)


def _taylor_expm(gen: np.ndarray, tol: float = 1e-18) -> np.ndarray:
    """Matrix exponential by scaling and squaring of Taylor partial sums."""
    n1 = np.abs(gen).sum(axis=0).max()
    squarings = max(0, int(math.ceil(math.log2(n1 / 0.5)))) if n1 > 0 else 0
    scaled = gen / (2.0**squarings)
    result = np.eye(gen.shape[0], dtype=np.complex128)
    term = np.eye(gen.shape[0], dtype=np.complex128)
    for k in range(1, 60):
        term = term @ scaled / k
        result = result + term
        if np.abs(term).max() < tol:
            break
    for _ in range(squarings):
        result = result @ result
    return result


MAX_ORACLE_DIM = 24


def dense_exponential_oracle(spec: SpdcCrystalSpec, dim: int) -> np.ndarray:
    """Dense two-mode squeezer on photon numbers ``0..dim-1`` per mode.

    Basis index of ``|n_signal, n_idler>`` is ``n_signal * dim + n_idler``.
    The generator is truncated to this space before exponentiation, so the
    result is unitary but deviates from the untruncated operator near the
    edges of the space.
    """
    if dim > MAX_ORACLE_DIM:
        raise ResourceError(f"dim={dim} exceeds the oracle limit {MAX_ORACLE_DIM}")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    lower = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)
    eye = np.eye(dim)
    a_s = np.kron(lower, eye)
    a_i = np.kron(eye, lower)
    xi = complex(spec.xi)
    gen = xi * (a_s.T @ a_i.T) - np.conj(xi) * (a_s @ a_i)
    return _taylor_expm(gen)
