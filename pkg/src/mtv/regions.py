"""Exact set algebra for axis-aligned boxes with per-face open/closed flags.

Rectangles on a transversal disc are products (u-part x s-part) of box
unions in the disc chart.  All operations are factor-exact; coordinates
coming from bisection are dyadic so comparisons are exact, with a 1e-12
tie tolerance for values produced by general affine maps.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DiscMismatch

EPS = 1e-12


def _eq(a, b):
    return abs(a - b) <= EPS


def _lt(a, b):
    return a < b - EPS


# ---------------------------------------------------------------------------
# intervals

@dataclass(frozen=True)
class Iv:
    """A real interval with independent open/closed endpoint flags."""

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def is_empty(self):
        if _lt(self.hi, self.lo):
            return True
        if _eq(self.lo, self.hi):
            return not (self.lo_closed and self.hi_closed)
        return False

    def length(self):
        return 0.0 if self.is_empty() else max(0.0, self.hi - self.lo)

    def mid(self):
        return 0.5 * (self.lo + self.hi)

    def contains(self, x):
        if _eq(x, self.lo) and _eq(x, self.hi):
            return self.lo_closed and self.hi_closed
        if _eq(x, self.lo):
            return self.lo_closed
        if _eq(x, self.hi):
            return self.hi_closed
        return self.lo < x < self.hi

    def closure(self):
        return Iv(self.lo, self.hi, True, True)

    def interior(self):
        return Iv(self.lo, self.hi, False, False)

    def __repr__(self):
        l = "[" if self.lo_closed else "("
        r = "]" if self.hi_closed else ")"
        return f"{l}{self.lo:.12g},{self.hi:.12g}{r}"


def iv_intersect(a, b):
    if _eq(a.lo, b.lo):
        lo, lc = a.lo, a.lo_closed and b.lo_closed
    elif a.lo > b.lo:
        lo, lc = a.lo, a.lo_closed
    else:
        lo, lc = b.lo, b.lo_closed
    if _eq(a.hi, b.hi):
        hi, hc = a.hi, a.hi_closed and b.hi_closed
    elif a.hi < b.hi:
        hi, hc = a.hi, a.hi_closed
    else:
        hi, hc = b.hi, b.hi_closed
    return Iv(lo, hi, lc, hc)


def iv_subtract(a, b):
    """a minus b as a list of at most two intervals."""
    inter = iv_intersect(a, b)
    if inter.is_empty():
        return [a]
    out = []
    left = Iv(a.lo, inter.lo, a.lo_closed, not inter.lo_closed)
    if not left.is_empty():
        out.append(left)
    right = Iv(inter.hi, a.hi, not inter.hi_closed, a.hi_closed)
    if not right.is_empty():
        out.append(right)
    return out


def _iv_mergeable(a, b):
    # a before b (a.lo <= b.lo); merge if they overlap or touch with the
    # junction point present on at least one side
    if _lt(a.hi, b.lo):
        return False
    if _eq(a.hi, b.lo):
        return a.hi_closed or b.lo_closed
    return True


def iv_union(ivs):
    """Normalize a list of intervals into disjoint, sorted, merged form."""
    ivs = [i for i in ivs if not i.is_empty()]
    ivs.sort(key=lambda i: (i.lo, not i.lo_closed))
    out = []
    for nxt in ivs:
        if out and _iv_mergeable(out[-1], nxt):
            cur = out.pop()
            if _eq(cur.hi, nxt.hi):
                hi, hc = cur.hi, cur.hi_closed or nxt.hi_closed
            elif cur.hi > nxt.hi:
                hi, hc = cur.hi, cur.hi_closed
            else:
                hi, hc = nxt.hi, nxt.hi_closed
            if _eq(cur.lo, nxt.lo):
                lo, lc = cur.lo, cur.lo_closed or nxt.lo_closed
            else:
                lo, lc = cur.lo, cur.lo_closed
            out.append(Iv(lo, hi, lc, hc))
        else:
            out.append(nxt)
    return out


# ---------------------------------------------------------------------------
# boxes: tuples of intervals

def box_is_empty(box):
    return any(iv.is_empty() for iv in box)


def box_intersect(a, b):
    return tuple(iv_intersect(x, y) for x, y in zip(a, b))


def box_subtract(a, b):
    """a minus b as disjoint boxes (axis sweep, <= 2*dim pieces)."""
    if box_is_empty(a):
        return []
    inter = box_intersect(a, b)
    if box_is_empty(inter):
        return [a]
    pieces = []
    core = list(a)
    for k in range(len(a)):
        for part in iv_subtract(core[k], inter[k]):
            piece = tuple(core[:k]) + (part,) + tuple(a[k + 1:])
            if not box_is_empty(piece):
                pieces.append(piece)
        core[k] = inter[k]
    return pieces


def box_contains(box, point):
    return all(iv.contains(x) for iv, x in zip(box, point))


def box_closure(box):
    return tuple(iv.closure() for iv in box)


def box_interior(box):
    return tuple(iv.interior() for iv in box)


def box_diam(box):
    return float(np.sqrt(sum(iv.length() ** 2 for iv in box)))


def box_center(box):
    return np.array([iv.mid() for iv in box])


# ---------------------------------------------------------------------------
# box unions

class BoxUnion:
    """A finite union of axis-aligned boxes, kept pairwise disjoint."""

    __slots__ = ("dim", "boxes")

    def __init__(self, dim, boxes=()):
        self.dim = dim
        self.boxes = [b for b in boxes if not box_is_empty(b)]

    @classmethod
    def from_bounds(cls, bounds, lo_closed=True, hi_closed=True):
        """bounds: sequence of (lo, hi) pairs."""
        box = tuple(Iv(lo, hi, lo_closed, hi_closed) for lo, hi in bounds)
        return cls(len(box), [box] if not box_is_empty(box) else [])

    def is_empty(self):
        return not self.boxes

    def copy(self):
        return BoxUnion(self.dim, list(self.boxes))

    def contains(self, point):
        point = np.atleast_1d(point)
        return any(box_contains(b, point) for b in self.boxes)

    def add(self, box):
        """Union in a single box, keeping the list disjoint."""
        pieces = [box]
        for existing in self.boxes:
            nxt = []
            for p in pieces:
                nxt.extend(box_subtract(p, existing))
            pieces = nxt
            if not pieces:
                return self
        self.boxes.extend(pieces)
        return self

    def union(self, other):
        out = self.copy()
        for b in other.boxes:
            out.add(b)
        return out._merge_1d()

    def intersect(self, other):
        out = []
        for a in self.boxes:
            for b in other.boxes:
                c = box_intersect(a, b)
                if not box_is_empty(c):
                    out.append(c)
        return BoxUnion(self.dim, out)

    def subtract(self, other):
        pieces = list(self.boxes)
        for b in other.boxes:
            nxt = []
            for p in pieces:
                nxt.extend(box_subtract(p, b))
            pieces = nxt
        return BoxUnion(self.dim, pieces)._merge_1d()

    def closure(self):
        out = BoxUnion(self.dim)
        for b in self.boxes:
            out.add(box_closure(b))
        return out._merge_1d()

    def interior(self, pad=1.0):
        """Interior via the complement: int X = B \\ cl(B \\ X)."""
        if self.is_empty():
            return BoxUnion(self.dim)
        bounds = self.bounding_box()
        big = BoxUnion.from_bounds(
            [(iv.lo - pad, iv.hi + pad) for iv in bounds])
        return big.subtract(big.subtract(self).closure())._merge_1d()

    def boundary(self):
        return self.closure().subtract(self.interior())

    def regular_closure(self):
        """cl(int(X)): the regular-closed hull used for final rectangles."""
        return self.interior().closure()

    def bounding_box(self):
        los = [min(b[k].lo for b in self.boxes) for k in range(self.dim)]
        his = [max(b[k].hi for b in self.boxes) for k in range(self.dim)]
        return tuple(Iv(l, h) for l, h in zip(los, his))

    def measure(self):
        return float(sum(np.prod([iv.length() for iv in b]) for b in self.boxes))

    def diam(self):
        if self.is_empty():
            return 0.0
        bb = self.bounding_box()
        return box_diam(bb)

    def extent(self, axis=0):
        """(lo, hi) hull along one axis."""
        bb = self.bounding_box()
        return bb[axis].lo, bb[axis].hi

    def equal_set(self, other):
        return self.subtract(other).is_empty() and other.subtract(self).is_empty()

    def _merge_1d(self):
        if self.dim == 1:
            self.boxes = [(iv,) for iv in iv_union([b[0] for b in self.boxes])]
        return self

    def contains_batch(self, pts):
        """Vectorized closed-semantics membership for (n, dim) samples."""
        pts = np.atleast_2d(pts)
        ok = np.zeros(pts.shape[0], dtype=bool)
        for b in self.boxes:
            inside = np.ones(pts.shape[0], dtype=bool)
            for k, iv in enumerate(b):
                x = pts[:, k]
                lo_ok = (x > iv.lo + EPS) | (iv.lo_closed & (x >= iv.lo - EPS))
                hi_ok = (x < iv.hi - EPS) | (iv.hi_closed & (x <= iv.hi + EPS))
                inside &= lo_ok & hi_ok
            ok |= inside
        return ok

    def to_json(self):
        return [[[iv.lo, iv.hi, iv.lo_closed, iv.hi_closed] for iv in b]
                for b in self.boxes]

    @classmethod
    def from_json(cls, doc, dim=None):
        boxes = [tuple(Iv(lo, hi, bool(lc), bool(hc)) for lo, hi, lc, hc in b)
                 for b in doc]
        if dim is None:
            dim = len(boxes[0]) if boxes else 1
        return cls(dim, boxes)

    def __repr__(self):
        return "BoxUnion[" + " u ".join(
            "x".join(repr(iv) for iv in b) for b in self.boxes) + "]"


def interval_union(pairs, lo_closed=True, hi_closed=True):
    """1D BoxUnion from (lo, hi) pairs."""
    return BoxUnion(1, [(Iv(lo, hi, lo_closed, hi_closed),) for lo, hi in pairs])._merge_1d()


# ---------------------------------------------------------------------------
# chart rectangles: products of a u-part and an s-part

class ChartRectangle:
    """A bracket-invariant product set u_part x s_part in a disc chart."""

    __slots__ = ("disc", "u_part", "s_part")

    def __init__(self, disc, u_part, s_part):
        self.disc = int(disc)
        self.u_part = u_part
        self.s_part = s_part

    @classmethod
    def from_bounds(cls, disc, u_bounds, s_bounds, lo_closed=True, hi_closed=True):
        return cls(disc,
                   BoxUnion.from_bounds(u_bounds, lo_closed, hi_closed),
                   BoxUnion.from_bounds(s_bounds, lo_closed, hi_closed))

    @property
    def ku(self):
        return self.u_part.dim

    @property
    def ks(self):
        return self.s_part.dim

    def is_empty(self):
        return self.u_part.is_empty() or self.s_part.is_empty()

    def contains(self, pu, ps):
        return self.u_part.contains(pu) and self.s_part.contains(ps)

    def contains_batch(self, pu, ps):
        return self.u_part.contains_batch(pu) & self.s_part.contains_batch(ps)

    def _check(self, other):
        if self.disc != other.disc:
            raise DiscMismatch(f"discs {self.disc} != {other.disc}")

    def intersect(self, other):
        self._check(other)
        return ChartRectangle(self.disc, self.u_part.intersect(other.u_part),
                              self.s_part.intersect(other.s_part))

    def subtract(self, other):
        """Set difference as a list of product pieces."""
        self._check(other)
        out = []
        u_out = self.u_part.subtract(other.u_part)
        if not u_out.is_empty():
            out.append(ChartRectangle(self.disc, u_out, self.s_part.copy()))
        u_in = self.u_part.intersect(other.u_part)
        s_out = self.s_part.subtract(other.s_part)
        if not (u_in.is_empty() or s_out.is_empty()):
            out.append(ChartRectangle(self.disc, u_in, s_out))
        return out

    def union(self, other):
        self._check(other)
        return [self] + other.subtract(self)

    def closure(self):
        return ChartRectangle(self.disc, self.u_part.closure(), self.s_part.closure())

    def interior(self):
        return ChartRectangle(self.disc, self.u_part.interior(), self.s_part.interior())

    def regular_closure(self):
        return ChartRectangle(self.disc, self.u_part.regular_closure(),
                              self.s_part.regular_closure())

    def boundary(self):
        """del(A x B) = (del A x cl B) u (cl A x del B), as rectangles."""
        out = []
        bu = self.u_part.boundary()
        if not bu.is_empty():
            out.append(ChartRectangle(self.disc, bu, self.s_part.closure()))
        bs = self.s_part.boundary()
        if not bs.is_empty():
            out.append(ChartRectangle(self.disc, self.u_part.closure(), bs))
        return out

    def equal_set(self, other):
        left = self.subtract(other)
        right = other.subtract(self)
        return not left and not right

    def center(self):
        bu = self.u_part.bounding_box()
        bs = self.s_part.bounding_box()
        return box_center(bu), box_center(bs)

    def diam(self):
        return float(np.hypot(self.u_part.diam(), self.s_part.diam()))

    def measure(self):
        return self.u_part.measure() * self.s_part.measure()

    def sample(self, rng, n, interior_margin=0.0):
        """n points uniform over the product (single-box parts assumed
        dominant; boxes chosen by measure)."""
        def pick(part, k):
            weights = np.array([max(np.prod([iv.length() for iv in b]), 0.0)
                                for b in part.boxes])
            if weights.sum() <= 0:
                weights = np.ones(len(part.boxes))
            idx = rng.choice(len(part.boxes), size=n, p=weights / weights.sum())
            pts = np.empty((n, part.dim))
            for i, bi in enumerate(idx):
                for a, iv in enumerate(part.boxes[bi]):
                    lo = iv.lo + interior_margin
                    hi = iv.hi - interior_margin
                    pts[i, a] = rng.uniform(lo, hi) if hi > lo else iv.mid()
            return pts
        return pick(self.u_part, self.ku), pick(self.s_part, self.ks)

    def to_json(self):
        return {"disc": self.disc, "u": self.u_part.to_json(), "s": self.s_part.to_json()}

    @classmethod
    def from_json(cls, doc):
        return cls(doc["disc"], BoxUnion.from_json(doc["u"]), BoxUnion.from_json(doc["s"]))

    def __repr__(self):
        return f"ChartRectangle(disc={self.disc}, u={self.u_part!r}, s={self.s_part!r})"
