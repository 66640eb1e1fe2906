"""Combining paired statistics into W and thresholding the selection.

W_j is positive when both the exposure-side and outcome-side statistics
favor the real mediator over its knockoff, and its sign flips exactly
when either pair is swapped. That antisymmetry is what lets the count
of large negative W's estimate the number of false positives among the
large positive ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .statistics import StatPair

RULE_KNOCKOFF = "knockoff"
RULE_KNOCKOFF_PLUS = "knockoff_plus"
_OFFSETS = {RULE_KNOCKOFF: 0, RULE_KNOCKOFF_PLUS: 1}


@dataclass
class WVector:
    """Combined per-mediator evidence scores."""

    w: np.ndarray
    osff: str = "product_of_differences"


@dataclass
class SelectionReport:
    """Outcome of thresholding a W vector at target level q."""

    selected: np.ndarray
    threshold: float | None
    q: float
    rule: str
    fdp_estimate: float
    warnings: list = field(default_factory=list)


def swap(pair: StatPair, indices) -> StatPair:
    """Exchange z and z_tilde at the given coordinates."""
    idx = np.asarray(indices, dtype=int)
    p = pair.z.shape[0]
    if idx.size:
        if idx.min() < 0 or idx.max() >= p:
            raise IndexError(f"swap indices must lie in [0, {p})")
        if np.unique(idx).size != idx.size:
            raise ValueError("swap indices must be distinct")
    z = pair.z.copy()
    zt = pair.z_tilde.copy()
    z[idx], zt[idx] = zt[idx], z[idx].copy()
    return StatPair(z=z, z_tilde=zt, path=pair.path, method=pair.method,
                    warnings=list(pair.warnings))


def osff_product(a: StatPair, b: StatPair) -> WVector:
    """W = (z_a - z_a_tilde) * (z_b - z_b_tilde), elementwise.

    Swapping coordinate j in either input negates W_j and nothing else.
    """
    if a.z.shape != b.z.shape:
        raise ValueError(
            f"statistic lengths differ: {a.z.shape[0]} vs {b.z.shape[0]}"
        )
    return WVector(w=(a.z - a.z_tilde) * (b.z - b.z_tilde))


def fdp_estimate(w: WVector | np.ndarray, t: float) -> float:
    """#{w_j <= -t} / max(#{w_j >= t}, 1) for t > 0."""
    if t <= 0:
        raise ValueError(f"threshold must be positive, got {t}")
    w = w.w if isinstance(w, WVector) else np.asarray(w, dtype=float)
    n_neg = int(np.sum(w <= -t))
    n_pos = int(np.sum(w >= t))
    return n_neg / max(n_pos, 1)


def knockoff_threshold(
    w: WVector | np.ndarray, q: float, rule: str = RULE_KNOCKOFF_PLUS
) -> SelectionReport:
    """Smallest data-dependent threshold meeting the target level q.

    Candidate thresholds are the distinct positive magnitudes |w_j| of
    nonzero entries, scanned in increasing order; the estimated false
    discovery proportion is a step function that only changes there.
    The plus rule adds 1 to the numerator, which is what upgrades the
    guarantee from modified FDR to FDR. Zero entries are never selectable
    and count in neither tail. ``threshold=None`` (empty selection) is a
    valid outcome, not an error.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must be in (0, 1), got {q}")
    if rule not in _OFFSETS:
        raise ValueError(f"rule must be one of {sorted(_OFFSETS)}, got {rule!r}")
    offset = _OFFSETS[rule]
    wv = w.w if isinstance(w, WVector) else np.asarray(w, dtype=float)

    candidates = np.unique(np.abs(wv[wv != 0]))
    threshold = None
    for t in candidates:
        ratio = (offset + np.sum(wv <= -t)) / max(int(np.sum(wv >= t)), 1)
        if ratio <= q:
            threshold = float(t)
            break

    if threshold is None:
        selected = np.array([], dtype=int)
        fdp = 0.0
    else:
        selected = np.flatnonzero(wv >= threshold)
        fdp = fdp_estimate(wv, threshold)
    return SelectionReport(
        selected=selected, threshold=threshold, q=q, rule=rule, fdp_estimate=fdp
    )
