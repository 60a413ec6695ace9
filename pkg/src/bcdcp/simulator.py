"""Exact event-by-event simulation and Monte Carlo estimation.

Single paths run through the pure-Python kernel so every event can be
recorded.  Batched Monte Carlo only needs terminal states and uses whichever
kernel ``backend`` selected.  Each path owns the random substream keyed by
``(seed, path_index)``, so results never depend on how paths are spread over
workers.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernel_py as kp
from . import backend
from .errors import DomainError
from .rng import Stream

KIND_NAMES = {kp.KIND_EXTERNAL: "external", kp.KIND_SELF1: "self1", kp.KIND_SELF2: "self2"}
PATH_HEADER = ("t", "kind", "lambda1", "lambda2", "N1", "N2", "L1", "L2")
BLOCK_PATHS = 512
RELAXATION_MULTIPLE = 20.0


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    x1: Optional[float] = None
    x2: Optional[float] = None
    y: Optional[float] = None
    z: Optional[float] = None
    severity1: Optional[float] = None
    severity2: Optional[float] = None


@dataclass(frozen=True)
class Snapshot:
    t: float
    kind: str
    lambda1: float
    lambda2: float
    N1: int
    N2: int
    L1: float
    L2: float

    def row(self):
        return (repr(float(self.t)), self.kind, repr(float(self.lambda1)), repr(float(self.lambda2)),
                str(int(self.N1)), str(int(self.N2)), repr(float(self.L1)), repr(float(self.L2)))


@dataclass
class Path:
    horizon: float
    seed: int
    path_index: int
    events: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    terminal: Optional[Snapshot] = None


class PathState:
    """Mutable simulation state of one path (wraps the kernel's slot list)."""

    def __init__(self, slots):
        self.slots = slots

    @classmethod
    def start(cls, params, lam1, lam2, stream):
        return cls(kp.new_state(params, lam1, lam2, stream))

    def copy(self):
        return PathState(list(self.slots))

    @property
    def time(self):
        return self.slots[kp.T]

    @property
    def next_time(self):
        S = self.slots
        return min(S[kp.CLK1], S[kp.CLK2], S[kp.CLKE])

    def intensities(self, params, time):
        return (kp.intensity_at(self.slots, params, 1, time), kp.intensity_at(self.slots, params, 2, time))

    def snapshot(self, params, time, kind):
        S = self.slots
        l1, l2 = self.intensities(params, time)
        return Snapshot(time, kind, l1, l2, S[kp.N1], S[kp.N2], S[kp.L1], S[kp.L2])


def next_event(state, params, stream, until=math.inf):
    """Draw the next event.

    Returns ``(event, new_state)``; the input state is left untouched.
    ``event`` is ``None`` when nothing happens up to ``until`` or when no
    clock is finite any more (an extinct process with ``a = 0`` and no shocks).
    """
    if math.isinf(state.next_time):
        return None, state
    new = state.copy()
    out = kp.step(new.slots, params, stream, until, True)
    if out is None:
        return None, state
    kind, m1, m2, sev = out
    t = new.time
    if kind == kp.KIND_EXTERNAL:
        ev = Event(t, "external", x1=m1, x2=m2)
    elif kind == kp.KIND_SELF1:
        ev = Event(t, "self1", y=m1, severity1=sev)
    else:
        ev = Event(t, "self2", z=m2, severity2=sev)
    return ev, new


def simulate_path(model, horizon, seed, path_index=0, record="full", grid_step=None):
    """Simulate one path on ``[0, horizon]`` from the model's initial intensities.

    ``record="full"`` keeps every event with the state right after it, plus
    grid rows every ``grid_step`` time units when requested; ``"terminal"``
    keeps only the state at the horizon.
    """
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    if record not in ("full", "terminal"):
        raise ValueError("record must be 'full' or 'terminal'")
    if grid_step is not None and not grid_step > 0:
        raise DomainError(f"grid step must be positive, got {grid_step}")
    params = model.pack_parameters()
    stream = Stream(seed, path_index)
    state = PathState.start(params, model.line1.lam0, model.line2.lam0, stream)
    path = Path(horizon, seed, path_index)
    full = record == "full"
    grid = []
    if full and grid_step:
        count = int(math.floor(horizon / grid_step + 1e-9))
        grid = [k * grid_step for k in range(count + 1)]
    gi = 0
    if full:
        path.snapshots.append(state.snapshot(params, 0.0, "start"))
    while True:
        upcoming = min(state.next_time, horizon)
        while gi < len(grid) and grid[gi] < upcoming:
            path.snapshots.append(state.snapshot(params, grid[gi], "grid"))
            gi += 1
        event, state = next_event(state, params, stream, horizon)
        if event is None:
            break
        if full:
            path.events.append(event)
            path.snapshots.append(state.snapshot(params, event.time, event.kind))
    if full:
        while gi < len(grid):
            path.snapshots.append(state.snapshot(params, grid[gi], "grid"))
            gi += 1
    path.terminal = state.snapshot(params, horizon, "end")
    if full:
        path.snapshots.append(path.terminal)
    return path


def write_path_csv(path, target):
    """Write a recorded path as CSV (UTF-8, LF line endings)."""
    rows = path.snapshots if path.snapshots else [path.terminal]
    with open(target, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PATH_HEADER)
        for s in rows:
            w.writerow(s.row())


# ------------------------------------------------------------------ Monte Carlo

@dataclass(frozen=True)
class McEstimate:
    label: str
    estimate: float
    std_error: float
    paths: int
    horizon: float
    burn_in: tuple


@dataclass
class McResult:
    estimates: list
    terminal: np.ndarray  # columns lambda1, lambda2, N1, N2, L1, L2
    burn_in: tuple
    backend: str

    def get(self, label):
        for e in self.estimates:
            if e.label == label:
                return e
        raise KeyError(label)

    def as_dict(self):
        return {e.label: e for e in self.estimates}


def default_burn_in(model):
    """Per-line warm-up of twenty relaxation times, 1 / (delta - mean self jump)."""
    model.require_stationary()
    k1, k2 = model.relaxation_rates()
    return (RELAXATION_MULTIPLE / k1, RELAXATION_MULTIPLE / k2)


def _resolve_burn_in(model, burn_in):
    if burn_in is None:
        return default_burn_in(model)
    if isinstance(burn_in, (tuple, list)):
        b1, b2 = float(burn_in[0]), float(burn_in[1])
    else:
        b1 = b2 = float(burn_in)
    if b1 < 0 or b2 < 0:
        raise DomainError("burn-in must be nonnegative")
    if (b1 > 0 or b2 > 0) and not model.is_stationary():
        raise DomainError("burn-in presumes a stationary regime: requires delta1 > mean of G "
                          "and delta2 > mean of H")
    return (b1, b2)


def simulate_terminal_states(model, horizon, paths, seed, burn_in=None, workers=1, backend_name=None):
    """Terminal ``(lambda1, lambda2, N1, N2, L1, L2)`` for ``paths`` paths.

    Paths are cut into fixed blocks; block results are concatenated in
    index order so the array does not depend on ``workers``.
    """
    if paths < 1:
        raise DomainError("need at least one path")
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    burn = _resolve_burn_in(model, burn_in)
    params = model.pack_parameters()
    lam1, lam2 = model.line1.lam0, model.line2.lam0
    blocks = [(s, min(BLOCK_PATHS, paths - s)) for s in range(0, paths, BLOCK_PATHS)]

    def run(block):
        first, n = block
        return backend.simulate_terminal(params, lam1, lam2, seed, first, n, burn[0], burn[1],
                                         horizon, backend=backend_name)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return np.concatenate(parts, axis=0), burn


def _fsum_mean(x):
    return math.fsum(x) / len(x)


def _mean_estimate(x):
    n = len(x)
    m = _fsum_mean(x)
    var = math.fsum((x - m) ** 2) / (n - 1)
    return m, math.sqrt(var / n)


def _cov_estimate(x, y):
    n = len(x)
    dx = x - _fsum_mean(x)
    dy = y - _fsum_mean(y)
    prod = dx * dy
    cov = math.fsum(prod) / (n - 1)
    # SE of the mean of centred products
    spread = math.fsum((prod - math.fsum(prod) / n) ** 2) / (n - 1)
    return cov, math.sqrt(spread / n)


ESTIMANDS = (
    "E[L1]", "E[L2]", "Var[L1]", "Var[L2]", "Cov[L1,L2]", "Corr[L1,L2]",
    "E[lambda1]", "E[lambda2]", "E[lambda1^2]", "E[lambda2^2]", "E[lambda1*lambda2]",
    "E[lambda1*L2]", "E[lambda2*L1]", "E[lambda1*L1]", "E[lambda2*L2]",
    "E[N1]", "E[N2]", "Corr[lambda1,lambda2]",
)


def estimate(terminal, horizon, burn, labels=ESTIMANDS):
    """Point estimates and standard errors from terminal states."""
    n = terminal.shape[0]
    if n < 2:
        raise DomainError("need at least two paths for standard errors")
    lam1, lam2, n1, n2, loss1, loss2 = (np.ascontiguousarray(terminal[:, i]) for i in range(6))
    products = {
        "E[L1]": loss1, "E[L2]": loss2,
        "E[lambda1]": lam1, "E[lambda2]": lam2,
        "E[lambda1^2]": lam1 * lam1, "E[lambda2^2]": lam2 * lam2,
        "E[lambda1*lambda2]": lam1 * lam2,
        "E[lambda1*L2]": lam1 * loss2, "E[lambda2*L1]": lam2 * loss1,
        "E[lambda1*L1]": lam1 * loss1, "E[lambda2*L2]": lam2 * loss2,
        "E[N1]": n1, "E[N2]": n2,
    }
    out = []
    for label in labels:
        if label in products:
            est, se = _mean_estimate(products[label])
        elif label in ("Var[L1]", "Var[L2]"):
            est, se = _cov_estimate(*((loss1, loss1) if label == "Var[L1]" else (loss2, loss2)))
        elif label == "Cov[L1,L2]":
            est, se = _cov_estimate(loss1, loss2)
        elif label in ("Corr[L1,L2]", "Corr[lambda1,lambda2]"):
            x, y = (loss1, loss2) if label == "Corr[L1,L2]" else (lam1, lam2)
            cov, _ = _cov_estimate(x, y)
            vx, _ = _cov_estimate(x, x)
            vy, _ = _cov_estimate(y, y)
            est = cov / math.sqrt(vx * vy) if vx > 0 and vy > 0 else math.nan
            # large-sample normal-theory approximation
            se = (1.0 - est * est) / math.sqrt(n) if not math.isnan(est) else math.nan
        else:
            raise KeyError(f"unknown estimand {label!r}")
        out.append(McEstimate(label, est, se, n, horizon, burn))
    return out


def monte_carlo(model, horizon, paths, seed, burn_in=None, estimands=ESTIMANDS, workers=1, backend_name=None):
    """Simulate ``paths`` paths and estimate moments at ``horizon``.

    ``burn_in`` is ``None`` for the per-line default, a number for a common
    warm-up, or a pair.  Counts and losses restart from zero after the
    warm-up while the intensities carry over.
    """
    if paths < 2:
        raise DomainError("monte_carlo needs at least two paths")
    terminal, burn = simulate_terminal_states(model, horizon, paths, seed, burn_in, workers, backend_name)
    return McResult(estimate(terminal, horizon, burn, estimands), terminal, burn,
                    backend_name or backend.NAME)


def write_estimates_csv(result, target):
    with open(target, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("quantity", "estimate", "std_error", "paths", "horizon", "burn_in_1", "burn_in_2"))
        for e in result.estimates:
            w.writerow((e.label, repr(float(e.estimate)), repr(float(e.std_error)), e.paths,
                        repr(float(e.horizon)), repr(float(e.burn_in[0])), repr(float(e.burn_in[1]))))
