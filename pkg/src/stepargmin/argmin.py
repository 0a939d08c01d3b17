"""Exact argmin sets of piecewise-constant functions, represented as finite
unions of closed axis-aligned boxes, plus the set predicates built on them.

A point belongs to the argmin set when the minimum over its quadrant limits
attains the global infimum.  For a piecewise-constant function the quadrant
limits at t are exactly the values of the cells whose closure contains t, so
the argmin set is the union of the closures of the cells carrying the minimal
value.  All comparisons are exact; no tolerances enter set membership.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stepargmin.stepfun import GridFunction, StepFunction1D

INF = float("inf")


class EmptySetError(ValueError):
    """Raised when an operation needs a nonempty set."""


class UnboundedSetError(ValueError):
    """Raised when a lexicographic extreme would sit at infinity."""


class NonCompactError(ValueError):
    """Raised when a check requires a compact argmin set."""


@dataclass(frozen=True, slots=True)
class Box:
    """Closed box: every finite endpoint is included."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lo and hi must be nonempty tuples of equal length")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def is_empty(self):
        return any(
            not (lo <= hi and lo < INF and hi > -INF)
            for lo, hi in zip(self.lo, self.hi)
        )

    @property
    def bounded(self):
        return all(np.isfinite(self.lo)) and all(np.isfinite(self.hi))

    def contains_point(self, point):
        return all(lo <= p <= hi for lo, p, hi in zip(self.lo, point, self.hi))

    def intersect(self, other):
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        box = Box(lo, hi)
        return None if box.is_empty else box

    def is_subset_of(self, other):
        if self.is_empty:
            return True
        return all(o <= s for o, s in zip(other.lo, self.lo)) and all(
            s <= o for s, o in zip(self.hi, other.hi)
        )


def box1(lo, hi):
    return Box((lo,), (hi,))


def point_box(point):
    """Degenerate single-point union, for membership tests via hits."""
    point = tuple(float(p) for p in np.atleast_1d(np.asarray(point, dtype=float)))
    return BoxUnion(len(point), (Box(point, point),))


def _merge_intervals(boxes):
    ordered = sorted(boxes, key=lambda b: (b.lo[0], b.hi[0]))
    merged = []
    for box in ordered:
        if merged and box.lo[0] <= merged[-1].hi[0]:
            prev = merged.pop()
            merged.append(Box(prev.lo, (max(prev.hi[0], box.hi[0]),)))
        else:
            merged.append(box)
    return merged


def _eliminate_subsets(boxes):
    kept = []
    for i, box in enumerate(boxes):
        redundant = any(
            box.is_subset_of(other) and not (other.is_subset_of(box) and j > i)
            for j, other in enumerate(boxes)
            if j != i
        )
        if not redundant:
            kept.append(box)
    return kept


@dataclass(frozen=True)
class BoxUnion:
    """Normalized finite union of closed boxes.

    In one dimension overlapping or touching intervals are merged into
    maximal ones; in higher dimensions only boxes contained in another box
    are dropped.
    """

    dim: int
    boxes: tuple

    def __post_init__(self):
        boxes = [b for b in self.boxes if not b.is_empty]
        for b in boxes:
            if b.dim != self.dim:
                raise ValueError("box dimension mismatch")
        if self.dim == 1:
            boxes = _merge_intervals(boxes)
        else:
            boxes = _eliminate_subsets(boxes)
        boxes = tuple(sorted(boxes, key=lambda b: (b.lo, b.hi)))
        object.__setattr__(self, "boxes", boxes)

    @property
    def is_empty(self):
        return not self.boxes

    @property
    def bounded(self):
        return all(b.bounded for b in self.boxes)

    def contains_point(self, point):
        point = tuple(float(p) for p in np.atleast_1d(np.asarray(point, dtype=float)))
        return any(b.contains_point(point) for b in self.boxes)

    def to_text(self):
        def fmt(v):
            if v == INF:
                return "inf"
            if v == -INF:
                return "-inf"
            return repr(float(v))

        lines = [
            " ".join(f"[{fmt(lo)},{fmt(hi)}]" for lo, hi in zip(b.lo, b.hi))
            for b in self.boxes
        ]
        return "\n".join(lines) + ("\n" if lines else "")


def box_union(dim, boxes):
    return BoxUnion(dim, tuple(boxes))


def _parse_interval(token):
    token = token.strip()
    if not (token.startswith("[") and token.endswith("]")):
        raise ValueError(f"bad interval token: {token!r}")
    lo_s, hi_s = token[1:-1].split(",")
    return float(lo_s), float(hi_s)


def box_union_from_text(text, dim=None):
    boxes = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        pairs = [_parse_interval(tok) for tok in line.split()]
        boxes.append(Box(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)))
    if boxes:
        dim = boxes[0].dim
    elif dim is None:
        raise ValueError("dimension required for an empty union")
    return BoxUnion(dim, tuple(boxes))


@dataclass(frozen=True, slots=True)
class OpenBox:
    """Box open in every coordinate."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lo and hi must be nonempty tuples of equal length")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def is_empty(self):
        return any(lo >= hi for lo, hi in zip(self.lo, self.hi))

    def contains_point(self, point):
        return all(lo < p < hi for lo, p, hi in zip(self.lo, point, self.hi))


@dataclass(frozen=True)
class OpenBoxUnion:
    dim: int
    boxes: tuple

    def __post_init__(self):
        boxes = tuple(b for b in self.boxes if not b.is_empty)
        for b in boxes:
            if b.dim != self.dim:
                raise ValueError("box dimension mismatch")
        object.__setattr__(self, "boxes", boxes)

    @property
    def is_empty(self):
        return not self.boxes

    def contains_point(self, point):
        point = tuple(float(p) for p in np.atleast_1d(np.asarray(point, dtype=float)))
        return any(b.contains_point(point) for b in self.boxes)


def open_box1(lo, hi):
    return OpenBox((lo,), (hi,))


def open_union(dim, boxes):
    return OpenBoxUnion(dim, tuple(boxes))


def full_space(dim):
    return OpenBoxUnion(dim, (OpenBox((-INF,) * dim, (INF,) * dim),))


def _argmin_runs_1d(breakpoints, values):
    """Index runs of minimal cells -> closed interval endpoints."""
    values = np.asarray(values, dtype=float)
    m = values.min()
    mask = values == m
    idx = np.flatnonzero(mask)
    intervals = []
    start = prev = idx[0]
    for i in idx[1:]:
        if i == prev + 1:
            prev = i
            continue
        intervals.append((start, prev))
        start = prev = i
    intervals.append((start, prev))
    n_bp = len(values) - 1
    out = []
    for i0, i1 in intervals:
        lo = breakpoints[i0 - 1] if i0 > 0 else -INF
        hi = breakpoints[i1] if i1 < n_bp else INF
        out.append((float(lo), float(hi)))
    return out


def _prenormalized_union(dim, boxes):
    # constructor bypass for box lists already in canonical form: nonempty,
    # sorted by (lo, hi), and pairwise non-nested
    union = object.__new__(BoxUnion)
    object.__setattr__(union, "dim", dim)
    object.__setattr__(union, "boxes", tuple(boxes))
    return union


def argmin_set(f):
    """Exact argmin set as a normalized BoxUnion.

    The result is the union of the closures of all cells attaining the
    infimum; closures enter because a boundary point reaches the minimal
    cell through one of its quadrant limits.  It can be unbounded, e.g. the
    whole space for a constant function.
    """
    if isinstance(f, StepFunction1D):
        pairs = _argmin_runs_1d(f.breakpoints, f.values)
        return BoxUnion(1, tuple(box1(lo, hi) for lo, hi in pairs))
    if not isinstance(f, GridFunction):
        raise TypeError("argmin_set expects StepFunction1D or GridFunction")
    if f.dim == 1:
        pairs = _argmin_runs_1d(f.axes[0], f.cells)
        return BoxUnion(1, tuple(box1(lo, hi) for lo, hi in pairs))
    cells = f.cells
    m = cells.min()
    boxes = []
    for index in np.argwhere(cells == m):
        lo = []
        hi = []
        for axis, j in zip(f.axes, index):
            lo.append(axis[j - 1] if j > 0 else -INF)
            hi.append(axis[j] if j < axis.size else INF)
        boxes.append(Box(tuple(lo), tuple(hi)))
    # closures of distinct cells never nest and argwhere emits them in
    # lexicographic order, so normalization would be a no-op
    return _prenormalized_union(f.dim, boxes)


def sargmin(union):
    """Lexicographically smallest point: filter boxes coordinate by
    coordinate, keeping those that reach the running minimum."""
    if union.is_empty:
        raise EmptySetError("sargmin of an empty set")
    boxes = list(union.boxes)
    coords = []
    for i in range(union.dim):
        m = min(b.lo[i] for b in boxes)
        if m == -INF:
            raise UnboundedSetError(f"coordinate {i + 1} is unbounded below")
        boxes = [b for b in boxes if b.lo[i] == m]
        coords.append(m)
    return tuple(coords)


def largmin(union):
    """Lexicographically largest point (mirror image of sargmin)."""
    if union.is_empty:
        raise EmptySetError("largmin of an empty set")
    boxes = list(union.boxes)
    coords = []
    for i in range(union.dim):
        m = max(b.hi[i] for b in boxes)
        if m == INF:
            raise UnboundedSetError(f"coordinate {i + 1} is unbounded above")
        boxes = [b for b in boxes if b.hi[i] == m]
        coords.append(m)
    return tuple(coords)


def hits(a, e):
    """True iff the two closed unions intersect."""
    return any(
        box_a.intersect(box_e) is not None for box_a in a.boxes for box_e in e.boxes
    )


def closed_complement(g):
    """Complement of an open box union as a closed BoxUnion.

    Folds one open box at a time: its complement is a union of closed
    half-space slabs, and the running complement is intersected with it.
    """
    dim = g.dim
    current = [Box((-INF,) * dim, (INF,) * dim)]
    for open_box in g.boxes:
        slabs = []
        for i in range(dim):
            if open_box.lo[i] > -INF:
                lo = [-INF] * dim
                hi = [INF] * dim
                hi[i] = open_box.lo[i]
                slabs.append(Box(tuple(lo), tuple(hi)))
            if open_box.hi[i] < INF:
                lo = [-INF] * dim
                hi = [INF] * dim
                lo[i] = open_box.hi[i]
                slabs.append(Box(tuple(lo), tuple(hi)))
        pieces = []
        for box in current:
            for slab in slabs:
                inter = box.intersect(slab)
                if inter is not None:
                    pieces.append(inter)
        current = _eliminate_subsets(pieces)
    return BoxUnion(dim, tuple(current))


def _point_covered_1d(c, intervals):
    if c == -INF:
        return max((hi for lo, hi in intervals if lo == -INF), default=None)
    if c == INF:
        return INF if any(hi == INF for _, hi in intervals) else None
    best = None
    for lo, hi in intervals:
        if lo < c < hi and (best is None or hi > best):
            best = hi
    return best


def _interval_covered_1d(a, b, intervals):
    # greedy sweep over open covers of the closed interval [a, b]
    cursor = a
    for _ in range(len(intervals) + 1):
        best = _point_covered_1d(cursor, intervals)
        if best is None:
            return False
        if best > b or (best == INF and b == INF):
            return True
        cursor = best
    return False


def contained_in_open(a, g):
    """True iff the closed union lies inside the open union.

    One-dimensional unions use an interval-cover sweep; higher dimensions
    reduce to a hit test against the closed complement.
    """
    if a.is_empty:
        return True
    if a.dim != g.dim:
        raise ValueError("dimension mismatch")
    if a.dim == 1:
        intervals = [(b.lo[0], b.hi[0]) for b in g.boxes]
        return all(
            _interval_covered_1d(box.lo[0], box.hi[0], intervals) for box in a.boxes
        )
    return not hits(a, closed_complement(g))


def lower_orthant_closed(x):
    x = tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)))
    return BoxUnion(len(x), (Box((-INF,) * len(x), x),))


def lower_orthant_open(x):
    x = tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)))
    return OpenBoxUnion(len(x), (OpenBox((-INF,) * len(x), x),))


def orthant_checks(f, x):
    """Four orthant facts about the argmin set A of f at the point x:

    (A hits (-inf, x],  sargmin(A) <= x,  A inside (-inf, x),  largmin(A) < x)

    For compact nonempty A the first pair and the second pair agree.
    """
    a = argmin_set(f)
    if a.is_empty or not a.bounded:
        raise NonCompactError("argmin set must be compact and nonempty")
    x = tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)))
    smallest = sargmin(a)
    largest = largmin(a)
    hit_lower = hits(a, lower_orthant_closed(x))
    small_le = all(s <= xi for s, xi in zip(smallest, x))
    inside_open = contained_in_open(a, lower_orthant_open(x))
    large_lt = all(l < xi for l, xi in zip(largest, x))
    return (hit_lower, small_le, inside_open, large_lt)
