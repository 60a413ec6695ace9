"""Selects the compiled kernel when it is importable, else the pure-Python one.

Set ``BCDCP_BACKEND=python`` to force the fallback.
"""

import os

import numpy as np

from . import _kernel_py

if os.environ.get("BCDCP_BACKEND", "").lower() == "python":
    _compiled = None
else:
    try:
        from . import _kernel as _compiled
    except ImportError:  # extension not built
        _compiled = None

NAME = "compiled" if _compiled is not None else "python"


def simulate_terminal(P, lam1, lam2, seed, first_path, n_paths, burn1, burn2, horizon, backend=None):
    use = backend or NAME
    if use == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled.simulate_terminal(P, lam1, lam2, seed, first_path, n_paths, burn1, burn2, horizon)
    rows = _kernel_py.simulate_terminal(P, lam1, lam2, seed, first_path, n_paths, burn1, burn2, horizon)
    return np.array(rows, dtype=np.float64).reshape(n_paths, 6)


def sample_law_many(law, seed, n, path_index=0, backend=None):
    if (backend or NAME) == "compiled" and _compiled is not None:
        return _compiled.sample_law_many(law, seed, n, path_index)
    return np.array(_kernel_py.sample_law_many(law, seed, n, path_index), dtype=np.float64)


def sample_shocks_many(P, seed, n, path_index=0, backend=None):
    if (backend or NAME) == "compiled" and _compiled is not None:
        return _compiled.sample_shocks_many(P, seed, n, path_index)
    return np.array(_kernel_py.sample_shocks_many(P, seed, n, path_index), dtype=np.float64).reshape(n, 2)
