import sys
import numpy as np
import pytest
from hypothesis import strategies as st

from zwmsim.fock import FockState, TruncationPolicy


@st.composite
def sparse_states(draw, n_modes=None, max_per_mode=3, max_terms=8, normalized=True):
    """Random sparse states on modes m0..m{n-1}."""
    n = draw(st.integers(2, 4)) if n_modes is None else n_modes
    rows = draw(
        st.lists(
            st.tuples(*[st.integers(0, max_per_mode)] * n),
            min_size=1,
            max_size=max_terms,
            unique=True,
        )
    )
    parts = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)
    amps = [complex(draw(parts), draw(parts)) for _ in rows]
    if max(abs(a) for a in amps) < 1e-3:
        amps[0] = 1.0
    labels = tuple(f"m{k}" for k in range(n))
    state = FockState(labels, np.array(rows), amps, TruncationPolicy(max_total_photons=n * max_per_mode + 4))
    if normalized:
        from zwmsim.fock import normalize

        state = normalize(state)
    return state


def random_sparse_state(rng, n_modes=3, n_terms=6, max_per_mode=3):
    occ = rng.integers(0, max_per_mode + 1, size=(n_terms, n_modes))
    amps = rng.normal(size=n_terms) + 1j * rng.normal(size=n_terms)
    labels = tuple(f"m{k}" for k in range(n_modes))
    state = FockState(labels, occ, amps, TruncationPolicy(max_total_photons=n_modes * max_per_mode + 4))
    from zwmsim.fock import normalize

    return normalize(state)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.RESULTS):
        ok, detail = module.RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
