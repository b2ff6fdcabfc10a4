"""Sparse multimode Fock states and ladder-operator algebra.

A :class:`FockState` stores its support as a sorted integer occupation matrix
(one row per basis term, one column per registered mode) next to a complex
amplitude vector. Rows are unique and ordered lexicographically by mode
registration order, so two states with the same content compare equal term by
term. States are immutable; every operation returns a new state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

_KEY_LIMIT = 2**62


class TruncationError(ValueError):
    """A basis state exceeds the photon-number bound of its policy."""


class RegistryError(ValueError):
    """Modes are unknown, duplicated, or two states disagree on their modes."""


class ZeroStateError(ValueError):
    """Normalisation of a state with zero norm."""


@dataclass(frozen=True)
class TruncationPolicy:
    """Photon-number bounds applied by every state-changing operation.

    Attributes
    ----------
    max_total_photons
        Hard bound on the total photon number of a basis term. Terms pushed
        beyond it are dropped and their squared amplitude is added to
        ``FockState.truncation_loss``.
    max_expansion_order
        Regime order K: at most K signal-idler pairs (2K photons) are kept
        after each down-conversion step. ``None`` disables the cap.
    prune_epsilon
        Amplitudes with magnitude at or below this value are removed when a
        state is pruned.
    """

    max_total_photons: int = 12
    max_expansion_order: int | None = None
    prune_epsilon: float = 1e-14

    def __post_init__(self):
        if int(self.max_total_photons) != self.max_total_photons or self.max_total_photons < 0:
            raise ValueError("max_total_photons must be a non-negative integer")
        if self.max_expansion_order is not None:
            if self.max_expansion_order < 1:
                raise ValueError("max_expansion_order must be >= 1")
            if self.max_expansion_order > self.max_total_photons:
                raise ValueError("max_expansion_order must not exceed max_total_photons")
        if self.prune_epsilon < 0:
            raise ValueError("prune_epsilon must be >= 0")

    @property
    def pair_cap(self) -> int | None:
        """Photon bound implied by the regime order, or ``None``."""
        if self.max_expansion_order is None:
            return None
        return 2 * self.max_expansion_order


@dataclass(frozen=True)
class ModeRegistry:
    """Ordered collection of unique mode labels."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if len(set(labels)) != len(labels):
            raise RegistryError(f"duplicate mode labels in {labels}")
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise RegistryError(f"mode {label!r} is not registered in {self.labels}") from None

    def added(self, label: str) -> "ModeRegistry":
        return ModeRegistry(self.labels + (label,))

    def renamed(self, old: str, new: str) -> "ModeRegistry":
        i = self.index(old)
        return ModeRegistry(self.labels[:i] + (new,) + self.labels[i + 1 :])

    def removed(self, label: str) -> "ModeRegistry":
        i = self.index(label)
        return ModeRegistry(self.labels[:i] + self.labels[i + 1 :])


def _as_registry(registry) -> ModeRegistry:
    if isinstance(registry, ModeRegistry):
        return registry
    return ModeRegistry(tuple(registry))


def canonicalize(occ: np.ndarray, amps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge duplicate rows (summing amplitudes) and sort rows lexicographically.

    Exact-zero amplitudes are dropped.
    """
    occ = np.asarray(occ, dtype=np.int64)
    amps = np.asarray(amps, dtype=np.complex128)
    n_modes = occ.shape[1]
    if len(amps) == 0:
        return np.zeros((0, n_modes), dtype=np.int64), np.zeros(0, dtype=np.complex128)
    if n_modes == 0:
        return np.zeros((1, 0), dtype=np.int64), np.array([amps.sum()])

    base = int(occ.max()) + 1
    if base**n_modes < _KEY_LIMIT:
        weights = base ** np.arange(n_modes - 1, -1, -1, dtype=np.int64)
        keys = occ @ weights
        _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        new_occ = occ[first]
    else:
        new_occ, inverse = np.unique(occ, axis=0, return_inverse=True)
        inverse = inverse.ravel()
    size = len(new_occ)
    new_amps = np.bincount(inverse, weights=amps.real, minlength=size) + 1j * np.bincount(
        inverse, weights=amps.imag, minlength=size
    )
    keep = new_amps != 0
    return np.ascontiguousarray(new_occ[keep]), new_amps[keep]


class FockState:
    """Immutable sparse state over a :class:`ModeRegistry`.

    Attributes
    ----------
    registry : ModeRegistry
    occ : ndarray of int64, shape (n_terms, n_modes)
    amps : ndarray of complex128, shape (n_terms,)
    truncation : TruncationPolicy
    truncation_loss : float
        Accumulated squared amplitude dropped by the hard photon bound or by
        pruning.
    order_discard : float
        Accumulated squared amplitude removed by the regime (pair) cap.
    """

    __slots__ = ("registry", "occ", "amps", "truncation", "truncation_loss", "order_discard")

    def __init__(
        self,
        registry,
        occ,
        amps,
        truncation: TruncationPolicy | None = None,
        truncation_loss: float = 0.0,
        order_discard: float = 0.0,
        canonical: bool = False,
    ):
        registry = _as_registry(registry)
        occ = np.asarray(occ, dtype=np.int64).reshape(-1, len(registry))
        amps = np.asarray(amps, dtype=np.complex128).ravel()
        if occ.shape[0] != amps.shape[0]:
            raise ValueError("occupation rows and amplitudes differ in length")
        if (occ < 0).any():
            raise ValueError("negative photon number")
        if not canonical:
            occ, amps = canonicalize(occ, amps)
        occ.setflags(write=False)
        amps.setflags(write=False)
        self.registry = registry
        self.occ = occ
        self.amps = amps
        self.truncation = truncation if truncation is not None else TruncationPolicy()
        self.truncation_loss = float(truncation_loss)
        self.order_discard = float(order_discard)

    @classmethod
    def from_terms(
        cls,
        registry,
        terms: Mapping[Sequence[int], complex],
        truncation: TruncationPolicy | None = None,
    ) -> "FockState":
        """Build a state from ``{occupation tuple: amplitude}``."""
        registry = _as_registry(registry)
        truncation = truncation if truncation is not None else TruncationPolicy()
        if not terms:
            return cls(registry, np.zeros((0, len(registry))), [], truncation)
        occ = np.array([tuple(k) for k in terms], dtype=np.int64).reshape(-1, len(registry))
        if (occ.sum(axis=1) > truncation.max_total_photons).any():
            raise TruncationError("term exceeds max_total_photons")
        return cls(registry, occ, list(terms.values()), truncation)

    def _replace(self, occ, amps, *, registry=None, canonical=False, loss=0.0, discard=0.0):
        return FockState(
            self.registry if registry is None else registry,
            occ,
            amps,
            self.truncation,
            self.truncation_loss + loss,
            self.order_discard + discard,
            canonical=canonical,
        )

    @property
    def amplitudes(self) -> dict[tuple[int, ...], complex]:
        return {tuple(int(x) for x in row): complex(a) for row, a in zip(self.occ, self.amps)}

    @property
    def modes(self) -> tuple[str, ...]:
        return self.registry.labels

    def amplitude(self, occupation: Sequence[int] | Mapping[str, int]) -> complex:
        """Amplitude of one basis term; missing terms give 0."""
        if isinstance(occupation, Mapping):
            row = [0] * len(self.registry)
            for label, n in occupation.items():
                row[self.registry.index(label)] = n
        else:
            row = list(occupation)
        hits = np.nonzero((self.occ == np.asarray(row, dtype=np.int64)).all(axis=1))[0]
        return complex(self.amps[hits[0]]) if len(hits) else 0j

    def photon_numbers(self) -> np.ndarray:
        return self.occ.sum(axis=1)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def __len__(self):
        return len(self.amps)

    def __add__(self, other: "FockState") -> "FockState":
        _check_same(self, other)
        return FockState(
            self.registry,
            np.vstack([self.occ, other.occ]),
            np.concatenate([self.amps, other.amps]),
            self.truncation,
            self.truncation_loss + other.truncation_loss,
            self.order_discard + other.order_discard,
        )

    def __mul__(self, scalar: complex) -> "FockState":
        return self._replace(self.occ, self.amps * complex(scalar), canonical=scalar != 0)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> "FockState":
        return self * (1.0 / complex(scalar))

    def __repr__(self):
        shown = ", ".join(
            f"{tuple(int(x) for x in row)}: {complex(a):.6g}" for row, a in list(zip(self.occ, self.amps))[:6]
        )
        more = ", ..." if len(self) > 6 else ""
        return f"FockState(modes={self.registry.labels}, terms={{{shown}{more}}})"


def _check_same(a: FockState, b: FockState) -> None:
    if a.registry != b.registry:
        raise RegistryError(f"registry mismatch: {a.registry.labels} vs {b.registry.labels}")


def vacuum(registry, truncation: TruncationPolicy | None = None) -> FockState:
    registry = _as_registry(registry)
    if len(registry) == 0:
        raise RegistryError("registry must not be empty")
    return FockState(registry, np.zeros((1, len(registry))), [1.0], truncation, canonical=True)


def basis_state(registry, occupation: Sequence[int], truncation: TruncationPolicy | None = None) -> FockState:
    registry = _as_registry(registry)
    occupation = tuple(int(n) for n in occupation)
    if len(occupation) != len(registry):
        raise RegistryError(f"occupation {occupation} does not match modes {registry.labels}")
    if any(n < 0 for n in occupation):
        raise ValueError("photon numbers must be non-negative")
    truncation = truncation if truncation is not None else TruncationPolicy()
    if sum(occupation) > truncation.max_total_photons:
        raise TruncationError(
            f"{sum(occupation)} photons exceed max_total_photons={truncation.max_total_photons}"
        )
    return FockState(registry, np.array([occupation]), [1.0], truncation, canonical=True)


def inner_product(a: FockState, b: FockState) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    _check_same(a, b)
    if len(a) == 0 or len(b) == 0:
        return 0j
    both = np.vstack([a.occ, b.occ])
    _, inverse = np.unique(both, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    ia, ib = inverse[: len(a)], inverse[len(a) :]
    # rows are unique within each state, so a dense scatter suffices
    dense = np.zeros(inverse.max() + 1, dtype=np.complex128)
    dense[ib] = b.amps
    return complex(np.vdot(a.amps, dense[ia]))


def norm(state: FockState) -> float:
    return float(np.sqrt(np.sum(np.abs(state.amps) ** 2)))


def normalize(state: FockState) -> FockState:
    n = norm(state)
    if n == 0.0:
        raise ZeroStateError("cannot normalise a zero state")
    return state._replace(state.occ, state.amps / n, canonical=True)


def prune(state: FockState, epsilon: float | None = None) -> FockState:
    """Drop amplitudes with magnitude ``<= epsilon`` (policy default)."""
    eps = state.truncation.prune_epsilon if epsilon is None else epsilon
    keep = np.abs(state.amps) > eps
    lost = float(np.sum(np.abs(state.amps[~keep]) ** 2))
    return state._replace(state.occ[keep], state.amps[keep], canonical=True, loss=lost)


def enforce_bounds(state: FockState, occ: np.ndarray, amps: np.ndarray, *, regime: bool = False) -> FockState:
    """Canonicalise raw terms and apply the policy's photon bounds.

    ``regime=True`` also applies the pair cap of ``max_expansion_order``.
    Pruning at ``prune_epsilon`` is part of every element application.
    """
    occ, amps = canonicalize(occ, amps)
    policy = state.truncation
    total = occ.sum(axis=1)
    over = total > policy.max_total_photons
    loss = float(np.sum(np.abs(amps[over]) ** 2))
    discard = 0.0
    keep = ~over
    if regime and policy.pair_cap is not None:
        capped = keep & (total > policy.pair_cap)
        discard = float(np.sum(np.abs(amps[capped]) ** 2))
        keep &= ~capped
    tiny = keep & (np.abs(amps) <= policy.prune_epsilon)
    loss += float(np.sum(np.abs(amps[tiny]) ** 2))
    keep &= ~tiny
    return state._replace(occ[keep], amps[keep], canonical=True, loss=loss, discard=discard)


def apply_creation(state: FockState, mode: str) -> FockState:
    """``a+`` on ``mode``; terms pushed past the photon bound are dropped and flagged."""
    i = state.registry.index(mode)
    n = state.occ[:, i]
    occ = state.occ.copy()
    occ[:, i] += 1
    amps = state.amps * np.sqrt(n + 1.0)
    return enforce_bounds(state, occ, amps)


def apply_annihilation(state: FockState, mode: str) -> FockState:
    i = state.registry.index(mode)
    n = state.occ[:, i]
    keep = n > 0
    occ = state.occ[keep].copy()
    occ[:, i] -= 1
    amps = state.amps[keep] * np.sqrt(n[keep].astype(float))
    return enforce_bounds(state, occ, amps)


def relabel_mode(state: FockState, source: str, target: str) -> FockState:
    """Move the photons of ``source`` into ``target``.

    An unregistered ``target`` is a pure rename. A registered ``target`` merges
    the two modes: counts add, amplitudes of coinciding terms sum, and
    ``source`` leaves the registry.
    """
    i = state.registry.index(source)
    if target not in state.registry:
        return state._replace(state.occ, state.amps, registry=state.registry.renamed(source, target), canonical=True)
    if target == source:
        return state
    j = state.registry.index(target)
    occ = state.occ.copy()
    occ[:, j] += occ[:, i]
    occ = np.delete(occ, i, axis=1)
    moved = FockState(
        state.registry.removed(source),
        np.zeros((0, len(state.registry) - 1)),
        [],
        state.truncation,
        state.truncation_loss,
        state.order_discard,
        canonical=True,
    )
    return enforce_bounds(moved, occ, state.amps)


def add_mode(state: FockState, label: str) -> FockState:
    """Register an extra mode in the vacuum."""
    if label in state.registry:
        raise RegistryError(f"mode {label!r} already registered")
    occ = np.hstack([state.occ, np.zeros((len(state), 1), dtype=np.int64)])
    return state._replace(occ, state.amps, registry=state.registry.added(label), canonical=True)


def mode_indices(state: FockState, modes: Iterable[str]) -> list[int]:
    return [state.registry.index(m) for m in modes]


def select(state: FockState, mask: np.ndarray) -> FockState:
    """Subset of terms (a projector diagonal in the Fock basis)."""
    return state._replace(state.occ[mask], state.amps[mask], canonical=True)
