"""Bradley-Terry strength estimation from pairwise-comparison outcomes.

Two estimators of the same regularized maximum likelihood: the spectral
fixed point (``estimate_ilsr``, iterated stationary distributions of a
win-rate Markov chain) and the classical minorization-maximization fixed
point (``estimate_mm``), kept as an independent cross-check. Estimated
log-strengths are centered to sum zero and mapped onto the [-3, +3]
pleasantness scale by min-max normalization.

The per-iteration arithmetic lives in a compiled extension when available
(``hapref._btcore``); set ``HAPREF_PURE_PYTHON=1`` before import to force
the NumPy fallback.
"""

from __future__ import annotations

import csv
import enum
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateScaleError, NonIdentifiableError

if os.environ.get("HAPREF_PURE_PYTHON"):
    from . import _btcore_py as _core
else:
    try:
        from . import _btcore as _core  # type: ignore[no-redef]
    except ImportError:
        from . import _btcore_py as _core  # type: ignore[no-redef]

DEFAULT_ALPHA = 0.01
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000


def backend_name() -> str:
    """Which kernel backend is active: 'compiled' or 'python'."""
    return _core.BACKEND


class Provenance(enum.Enum):
    OBSERVED = "observed"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class Outcome:
    winner: int
    loser: int
    provenance: Provenance = Provenance.OBSERVED


@dataclass(frozen=True)
class ComparisonDataset:
    """Multiset of (winner, loser) outcomes over items 0..n_items-1."""

    n_items: int
    outcomes: tuple[Outcome, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if self.n_items < 1:
            raise ValueError("n_items must be positive")
        for o in self.outcomes:
            if o.winner == o.loser:
                raise ValueError(f"outcome with winner == loser: {o.winner}")
            if not (0 <= o.winner < self.n_items and 0 <= o.loser < self.n_items):
                raise ValueError(f"outcome {o.winner}>{o.loser} outside 0..{self.n_items - 1}")

    def win_matrix(self) -> np.ndarray:
        """wins[i, j] = number of recorded wins of i over j."""
        wins = np.zeros((self.n_items, self.n_items))
        for o in self.outcomes:
            wins[o.winner, o.loser] += 1.0
        return wins

    @property
    def n_observed(self) -> int:
        return sum(1 for o in self.outcomes if o.provenance is Provenance.OBSERVED)

    @property
    def n_synthetic(self) -> int:
        return sum(1 for o in self.outcomes if o.provenance is Provenance.SYNTHETIC)

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fp:
            writer = csv.writer(fp)
            writer.writerow(["winner_id", "loser_id", "provenance"])
            for o in self.outcomes:
                writer.writerow([o.winner, o.loser, o.provenance.value])

    @classmethod
    def read_csv(cls, path: str, n_items: int | None = None) -> "ComparisonDataset":
        outcomes = []
        with open(path, newline="") as fp:
            reader = csv.DictReader(fp)
            if reader.fieldnames is None or "winner_id" not in reader.fieldnames:
                raise ValueError(f"{path}: expected header winner_id,loser_id,provenance")
            for row in reader:
                outcomes.append(Outcome(
                    winner=int(row["winner_id"]),
                    loser=int(row["loser_id"]),
                    provenance=Provenance(row.get("provenance") or "observed"),
                ))
        if n_items is None:
            n_items = 1 + max((max(o.winner, o.loser) for o in outcomes), default=0)
        return cls(n_items=n_items, outcomes=tuple(outcomes))


@dataclass(frozen=True)
class StrengthEstimate:
    """Centered log-strengths plus their [-3, +3] normalization.

    ``normalized_scores`` is None when all strengths came out equal (no
    preference signal to normalize).
    """

    theta: np.ndarray
    normalized_scores: np.ndarray | None
    converged: bool
    iterations: int

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))


def win_probability(theta_i: float, theta_j: float) -> float:
    """P(i beats j) = pi_i / (pi_i + pi_j) with pi = exp(theta)."""
    d = theta_i - theta_j
    if d >= 0:
        return 1.0 / (1.0 + math.exp(-d))
    e = math.exp(d)
    return e / (1.0 + e)


def normalize_scores(theta: np.ndarray, on: str = "log") -> np.ndarray:
    """Min-max normalize strengths to [0, 1], then multiply by 6 and subtract 3.

    ``on='log'`` normalizes the log-strengths, ``on='natural'`` the strengths
    themselves; orderings are identical, spacings differ.
    """
    if on not in ("log", "natural"):
        raise ValueError(f"normalize_scores 'on' must be 'log' or 'natural', got {on!r}")
    values = np.asarray(theta, dtype=float)
    if values.size < 2:
        raise DegenerateScaleError("need at least two items to normalize")
    if on == "natural":
        values = np.exp(values)
    lo, hi = values.min(), values.max()
    if hi == lo:
        raise DegenerateScaleError("all strengths equal; normalized scale is undefined")
    unit = (values - lo) / (hi - lo)  # exactly 0 at the min, 1 at the max
    return 6.0 * unit - 3.0


def is_connected(dataset: ComparisonDataset) -> tuple[bool, list[list[int]]]:
    """Strong connectivity of the directed winner->loser graph.

    Returns (connected, strongly-connected components as id lists).
    """
    wins = dataset.win_matrix()
    graph = csr_matrix((wins > 0).astype(np.int8))
    n_comp, labels = connected_components(graph, directed=True, connection="strong")
    components = [[] for _ in range(n_comp)]
    for item, label in enumerate(labels):
        components[label].append(item)
    return n_comp == 1, components


def log_likelihood(dataset: ComparisonDataset, theta: np.ndarray) -> float:
    """Sum of ln P(winner beats loser) over the dataset's outcomes."""
    theta = np.ascontiguousarray(theta, dtype=float)
    if theta.shape != (dataset.n_items,):
        raise ValueError(f"theta has length {theta.shape}, dataset has {dataset.n_items} items")
    wins = dataset.win_matrix()
    return _core.matrix_log_likelihood(wins, theta)


def _regularized_win_matrix(dataset: ComparisonDataset, alpha: float) -> np.ndarray:
    wins = dataset.win_matrix()
    if alpha:
        wins += alpha
        np.fill_diagonal(wins, 0.0)
    return np.ascontiguousarray(wins)


def _estimate(dataset, step, alpha, tol, max_iter, normalize_on, initial_theta):
    if dataset.n_items < 2:
        raise ValueError("estimation needs at least two items")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")
    if alpha == 0:
        ok, components = is_connected(dataset)
        if not ok:
            raise NonIdentifiableError(components)

    wins = _regularized_win_matrix(dataset, alpha)
    if initial_theta is None:
        theta = np.zeros(dataset.n_items)
    else:
        theta = np.asarray(initial_theta, dtype=float).copy()
        theta -= theta.mean()
    pi = np.exp(theta)

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        pi = step(wins, np.ascontiguousarray(pi))
        new_theta = np.log(pi)
        new_theta -= new_theta.mean()
        delta = float(np.abs(new_theta - theta).max())
        theta = new_theta
        pi = np.exp(theta)
        if delta < tol:
            converged = True
            break

    try:
        scores = normalize_scores(theta, on=normalize_on)
    except DegenerateScaleError:
        scores = None
    return StrengthEstimate(theta=theta, normalized_scores=scores,
                            converged=converged, iterations=iterations)


def estimate_ilsr(dataset: ComparisonDataset, alpha: float = DEFAULT_ALPHA,
                  tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                  normalize_on: str = "log",
                  initial_theta: np.ndarray | None = None) -> StrengthEstimate:
    """Maximum-likelihood strengths via iterated Luce spectral ranking.

    Each iteration builds the Markov chain whose rate j->i is the win count
    of i over j (plus ``alpha`` pseudo-wins each way) weighted by
    1 / (pi_i + pi_j), and takes its stationary distribution as the next
    iterate; the fixed point is the (regularized) MLE. With ``alpha == 0``
    the comparison graph must be strongly connected.
    """
    return _estimate(dataset, _core.ilsr_pi_step, alpha, tol, max_iter,
                     normalize_on, initial_theta)


def estimate_mm(dataset: ComparisonDataset, alpha: float = DEFAULT_ALPHA,
                tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                normalize_on: str = "log",
                initial_theta: np.ndarray | None = None) -> StrengthEstimate:
    """Same maximum likelihood via the classical minorization-maximization
    fixed point pi_i <- w_i / sum_j n_ij / (pi_i + pi_j); serves as an
    independent cross-check of ``estimate_ilsr``.
    """
    return _estimate(dataset, _core.mm_pi_step, alpha, tol, max_iter,
                     normalize_on, initial_theta)


def regularized_log_likelihood(dataset: ComparisonDataset, theta: np.ndarray,
                               alpha: float) -> float:
    """Log-likelihood including the alpha pseudo-wins; what the estimators maximize."""
    theta = np.ascontiguousarray(theta, dtype=float)
    return _core.matrix_log_likelihood(_regularized_win_matrix(dataset, alpha), theta)


# --- estimate export ----------------------------------------------------

def write_estimate_csv(path: str, estimate: StrengthEstimate, *,
                       alpha: float, tol: float) -> None:
    """item_id,theta,normalized_score rows preceded by a '#' metadata block."""
    with open(path, "w", newline="") as fp:
        fp.write(f"# alpha={alpha!r}\n")
        fp.write(f"# tol={tol!r}\n")
        fp.write(f"# iterations={estimate.iterations}\n")
        fp.write(f"# converged={estimate.converged}\n")
        writer = csv.writer(fp)
        writer.writerow(["item_id", "theta", "normalized_score"])
        for i, t in enumerate(estimate.theta):
            score = "" if estimate.normalized_scores is None else repr(float(estimate.normalized_scores[i]))
            writer.writerow([i, repr(float(t)), score])


def read_estimate_csv(path: str) -> tuple[StrengthEstimate, dict[str, str]]:
    meta: dict[str, str] = {}
    rows = []
    with open(path, newline="") as fp:
        data_lines = []
        for line in fp:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            else:
                data_lines.append(line)
        for row in csv.DictReader(data_lines):
            rows.append(row)
    theta = np.array([float(r["theta"]) for r in rows])
    if rows and rows[0]["normalized_score"]:
        scores = np.array([float(r["normalized_score"]) for r in rows])
    else:
        scores = None
    estimate = StrengthEstimate(
        theta=theta, normalized_scores=scores,
        converged=meta.get("converged", "True") == "True",
        iterations=int(meta.get("iterations", "0")),
    )
    return estimate, meta
