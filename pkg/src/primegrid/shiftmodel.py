"""Markov shifts that avoid a finite set of eliminated words.

Two constructions are provided:

* :func:`build_vertex_shift` -- the textbook vertex shift whose states are all
  allowed words of length ``n`` (``n`` = longest eliminated word).
* :func:`resampling_chain` -- a compressed chain whose states remember only the
  longest suffix of the history that could still grow into an eliminated word.
  A letter drawn from ``p`` that would complete an eliminated word is redrawn
  from the remaining letters.  For ``E = {'1111'}`` and
  ``E = {'1111', '11121112'}`` this is exactly the small chain worked out by
  hand, so its stationary vector can be checked against closed forms.

Letters are positive ints; ``STAR`` stands for every letter above the explicit
alphabet.  Expected hops expand ``STAR`` over its conditional letter law.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy import optimize, sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import spsolve

from .analytic import LetterDensity, letter_density, q as q_k
from .errors import DomainError, NumericError

STAR = "*"
Letter = Hashable
Word = tuple

DEFAULT_K = 25
_STAR_EXPANSION = 80  # letters K+1 .. K+80 carry all of the STAR mass to double precision


# ---------------------------------------------------------------------------
# Vertex shift


@dataclass
class VertexShift:
    """Allowed words of length ``n`` and their overlap adjacency."""

    n: int
    alphabet: tuple
    states: list[Word]
    adjacency: sparse.csr_matrix = field(repr=False)

    def emitted(self) -> list[Letter]:
        return [s[-1] for s in self.states]


def _contains_any(word: Word, eliminated: Iterable[Word]) -> bool:
    for e in eliminated:
        m = len(e)
        for i in range(len(word) - m + 1):
            if word[i : i + m] == e:
                return True
    return False


def build_vertex_shift(eliminated: Iterable[Sequence[Letter]], alphabet: Iterable[Letter]) -> VertexShift:
    """Vertex shift on ``alphabet`` excluding every word of ``eliminated``.

    States are the length-``n`` words containing no eliminated subword;
    ``i -> j`` is an edge iff ``i[1:] == j[:-1]``.  With nothing eliminated
    ``n = 1`` and the shift is full.
    """
    alphabet = tuple(alphabet)
    if not alphabet:
        raise DomainError("alphabet must not be empty")
    elim = {tuple(e) for e in eliminated}
    n = max((len(e) for e in elim), default=1)
    states = [w for w in itertools.product(alphabet, repeat=n) if not _contains_any(w, elim)]
    index = {s: i for i, s in enumerate(states)}
    rows, cols = [], []
    for i, s in enumerate(states):
        for a in alphabet:
            j = index.get(s[1:] + (a,))
            if j is not None:
                rows.append(i)
                cols.append(j)
    adj = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(states), len(states)))
    return VertexShift(n, alphabet, states, adj)


# ---------------------------------------------------------------------------
# Markov shifts


@dataclass
class MarkovShift:
    """A stationary Markov chain together with the letter each state emits."""

    states: list
    emit: list[Letter]
    P: np.ndarray | sparse.spmatrix = field(repr=False)
    pi: np.ndarray = field(repr=False)
    params: dict = field(default_factory=dict)
    star_law: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def state_prob(self, label) -> float:
        return float(self.pi[self.states.index(label)])


def is_aperiodic(P) -> bool:
    """Period 1 test by BFS levels (assumes irreducible ``P``)."""
    g = sparse.csr_matrix(P)
    order, pred = csgraph.breadth_first_order(g, 0, directed=True, return_predecessors=True)
    level = np.full(g.shape[0], -1)
    level[order[0]] = 0
    for v in order[1:]:
        level[v] = level[pred[v]] + 1
    coo = g.tocoo()
    d = 0
    for u, v in zip(coo.row, coo.col):
        d = math.gcd(d, int(level[u] + 1 - level[v]))
        if d == 1:
            return True
    return d == 1


def stationary(P, check: bool = True) -> np.ndarray:
    """Stationary row vector of an irreducible row-stochastic matrix.

    Solves ``(P^T - I) pi = 0`` with one equation replaced by ``sum(pi) = 1``.
    Falls back to power iteration if the direct solve misbehaves.
    """
    n = P.shape[0]
    if check:
        ncomp, _ = csgraph.connected_components(sparse.csr_matrix(P), directed=True, connection="strong")
        if ncomp != 1:
            raise DomainError("transition matrix is reducible")
    if sparse.issparse(P):
        A = (P.T - sparse.identity(n, format="csr")).tolil()
        A[0, :] = np.ones(n)
        b = np.zeros(n)
        b[0] = 1.0
        pi = spsolve(A.tocsc(), b)
    else:
        A = np.asarray(P, dtype=float).T - np.eye(n)
        A[0, :] = 1.0
        b = np.zeros(n)
        b[0] = 1.0
        pi = np.linalg.solve(A, b)
    if not np.all(np.isfinite(pi)) or pi.min() < -1e-12:
        pi = _power_iteration(P)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _power_iteration(P, tol: float = 1e-12, max_iter: int = 1_000_000) -> np.ndarray:
    n = P.shape[0]
    x = np.full(n, 1.0 / n)
    Pt = P.T
    for _ in range(max_iter):
        # lazy step keeps periodic chains convergent; same fixed point
        y = 0.5 * (x + Pt @ x)
        if np.abs(y - x).sum() < tol:
            return y
        x = y
    raise NumericError("power iteration did not converge")


def star_law(k_explicit: int) -> tuple[np.ndarray, np.ndarray]:
    """Values and conditional weights of the letters folded into ``STAR``."""
    ks = np.arange(k_explicit + 1, k_explicit + 1 + _STAR_EXPANSION)
    w = np.array([q_k(int(k)) for k in ks])
    return ks.astype(float), w / w.sum()


def _mean_max(a: Letter, b: Letter, law) -> float:
    if a != STAR and b != STAR:
        return float(max(a, b))
    vals, w = law
    if a == STAR and b == STAR:
        # E max(X, X') = sum_v v * (F(v)^2 - F(v-1)^2) for independent draws
        cdf = np.cumsum(w)
        prev = np.concatenate(([0.0], cdf[:-1]))
        return float(np.sum(vals * (cdf**2 - prev**2)))
    return float(np.dot(vals, w))  # STAR exceeds every explicit letter


def expected_hop(ms: MarkovShift) -> float:
    """``E max(X_i, X_{i+1})`` under the stationary chain."""
    coo = sparse.coo_matrix(ms.P)
    total = 0.0
    for i, j, pij in zip(coo.row, coo.col, coo.data):
        if pij:
            total += ms.pi[i] * pij * _mean_max(ms.emit[i], ms.emit[j], ms.star_law)
    return total


def marginals(ms: MarkovShift) -> dict[Letter, float]:
    """Stationary probability of each emitted letter."""
    out: dict[Letter, float] = {}
    for letter, p in zip(ms.emit, ms.pi):
        out[letter] = out.get(letter, 0.0) + float(p)
    return out


def residual(ms: MarkovShift, target: dict[Letter, float] | LetterDensity) -> float:
    """RMS of ``marginals - target`` over the union of letters."""
    if isinstance(target, LetterDensity):
        target = density_as_dict(target)
    got = marginals(ms)
    keys = list(dict.fromkeys(list(target) + list(got)))
    diffs = [got.get(k, 0.0) - target.get(k, 0.0) for k in keys]
    return math.sqrt(sum(d * d for d in diffs) / len(diffs))


def sample_letters(ms: MarkovShift, length: int, seed: int) -> list[Letter]:
    """A path of ``length`` emitted letters, started from the stationary law."""
    rng = np.random.default_rng(seed)
    P = sparse.csr_matrix(ms.P)
    s = int(rng.choice(len(ms.pi), p=ms.pi / ms.pi.sum()))
    out = []
    for u in rng.random(length):
        out.append(ms.emit[s])
        lo, hi = P.indptr[s], P.indptr[s + 1]
        cdf = np.cumsum(P.data[lo:hi])
        s = int(P.indices[lo + min(np.searchsorted(cdf, u * cdf[-1], side="right"), hi - lo - 1)])
    return out


def density_as_dict(density: LetterDensity) -> dict[Letter, float]:
    out: dict[Letter, float] = {k + 1: float(v) for k, v in enumerate(density.q)}
    out[STAR] = float(density.tail)
    return out


def markov_on_vertex_shift(shift: VertexShift, p: dict[Letter, float], star=None) -> MarkovShift:
    """Chain on ``shift`` drawing the next letter from ``p`` over allowed successors."""
    coo = shift.adjacency.tocoo()
    weights = np.array([p[shift.states[j][-1]] for j in coo.col])
    out_mass = np.bincount(coo.row, weights=weights, minlength=len(shift.states))
    if np.any(out_mass <= 0):
        raise DomainError("some state has no successor with positive weight")
    data = weights / out_mass[coo.row]
    P = sparse.csr_matrix((data, (coo.row, coo.col)), shape=shift.adjacency.shape)
    pi = stationary(P)
    return MarkovShift(shift.states, shift.emitted(), P, pi, {"p": dict(p)}, star)


# ---------------------------------------------------------------------------
# Compressed resampling chain


def resampling_chain(
    eliminated: Iterable[Sequence[int]], p: dict[Letter, float], star=None
) -> MarkovShift:
    """Chain whose state is the live prefix of an eliminated word (or a bare letter).

    From a state, letter ``j`` is drawn with probability ``p_j`` renormalized
    over the letters that do not complete an eliminated word.  State labels are
    strings: ``'111'`` for a live prefix, ``'7'`` or ``'*'`` for a letter that
    starts nothing (written ``'#11'`` if it would read like a prefix).
    """
    elim = {tuple(e) for e in eliminated}
    letters = list(p)
    prefixes = {e[:i] for e in elim for i in range(1, len(e))}

    def label(node: tuple, letter) -> str:
        return "".join(map(str, node)) if node else str(letter)

    def step(node: tuple, j):
        s = node + (j,)
        for i in range(len(s)):
            if s[i:] in elim:
                return None
        for i in range(len(s)):
            if s[i:] in prefixes:
                return s[i:]
        return ()

    def key(node: tuple, letter):
        return (node, None) if node else ((), letter)

    frontier = [(step((), a), a) for a in letters if step((), a) is not None]
    seen: dict[tuple, int] = {}
    states: list[tuple] = []
    emit: list[Letter] = []
    while frontier:
        node, a = frontier.pop(0)
        if key(node, a) in seen:
            continue
        seen[key(node, a)] = len(states)
        states.append((node, a))
        emit.append(a)
        for j in letters:
            nxt = step(node, j)
            if nxt is not None:
                frontier.append((nxt, j))
    n = len(states)
    P = np.zeros((n, n))
    for i, (node, a) in enumerate(states):
        allowed = [(j, step(node, j)) for j in letters]
        allowed = [(j, nx) for j, nx in allowed if nx is not None]
        mass = sum(p[j] for j, _ in allowed)
        if mass <= 0:
            raise DomainError(f"state {label(node, a)!r} has no allowed continuation")
        for j, nx in allowed:
            P[i, seen[key(nx, j)]] += p[j] / mass
    pi = stationary(P)
    prefix_labels = {label(node, a) for node, a in states if node}
    labels = []
    for node, a in states:
        lab = label(node, a)
        labels.append("#" + lab if not node and lab in prefix_labels else lab)
    return MarkovShift(labels, emit, P, pi, {"p": dict(p), "eliminated": sorted(elim)}, star)


def _alphabet(k: int) -> list[Letter]:
    return list(range(1, k + 1)) + [STAR]


EXAMPLES = {
    "empty": [],
    "single": [(1, 1, 1, 1)],
    "double": [(1, 1, 1, 1), (1, 1, 1, 2, 1, 1, 1, 2)],
}


def _p_from_head(head: Sequence[float], density: LetterDensity) -> dict[Letter, float]:
    """``p`` with the given leading entries; the rest proportional to ``q``."""
    target = density_as_dict(density)
    h = len(head)
    rest = [k for k in target if not (isinstance(k, int) and k <= h)]
    scale = (1.0 - sum(head)) / sum(target[k] for k in rest)
    p = {i + 1: float(v) for i, v in enumerate(head)}
    p.update({k: target[k] * scale for k in rest})
    return p


def single_q1(p1: float) -> float:
    """Letter-1 density of the ``{'1111'}`` chain as a function of ``p_1``."""
    return (p1 + p1**2 + p1**3) * (1 - p1) / (1 - p1**4)


def calibrate_example(which: str, k: int = DEFAULT_K) -> MarkovShift:
    """Chain for one of the worked examples with letter marginals equal to ``q``.

    ``empty``: ``p = q``.  ``single``: ``p_1`` solves the scalar letter-1
    equation (bisection).  ``double``: ``(p_1, p_2)`` solve the two marginal
    equations (Newton-type solver on the exact stationary vector).
    """
    if which not in EXAMPLES:
        raise DomainError(f"unknown example {which!r}; choose from {sorted(EXAMPLES)}")
    density = letter_density(k)
    law = star_law(k)
    elim = EXAMPLES[which]
    if which == "empty":
        p = density_as_dict(density)
    elif which == "single":
        q1 = float(density.q[0])
        f = lambda x: single_q1(x) - q1
        try:
            p1 = optimize.brentq(f, 1e-9, 1 - 1e-9, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        except ValueError as exc:
            raise NumericError(f"letter-1 equation not bracketed: {exc}") from exc
        p = _p_from_head([p1], density)
    else:
        q1, q2 = float(density.q[0]), float(density.q[1])

        def eqs(x):
            m = marginals(resampling_chain(elim, _p_from_head(x, density)))
            return [m[1] - q1, m[2] - q2]

        sol = optimize.root(eqs, [0.7045, 0.18], method="hybr", tol=1e-14)
        if not sol.success or max(abs(v) for v in eqs(sol.x)) > 1e-10:
            raise NumericError(f"two-letter calibration failed: {sol.message}")
        p = _p_from_head(list(sol.x), density)
    ms = resampling_chain(elim, p, law)
    ms.params["example"] = which
    return ms


def example_report(which: str) -> dict:
    """Calibrated parameters, selected state probabilities and the expected hop."""
    ms = calibrate_example(which)
    p = ms.params["p"]
    report = {
        "example": which,
        "eliminated": ["".join(map(str, e)) for e in EXAMPLES[which]],
        "p": {str(k): v for k, v in p.items()},
        "pi": {lab: float(v) for lab, v in zip(ms.states, ms.pi)},
        "marginals": {str(k): v for k, v in marginals(ms).items()},
        "residual": residual(ms, letter_density(DEFAULT_K)),
        "expected_hop": expected_hop(ms),
        "star_is_tail_aggregate": True,
    }
    return report
