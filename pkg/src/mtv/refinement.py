"""Rectangle refinement and the final Markov transversal family.

Base rectangles are the closures of coding-map images of one-symbol
cylinders, computed as products of sampled coordinate projections (valid
because the coding map is bracket preserving).  Overlapping rectangles on
one disc are split four ways by their stable/unstable fiber intersection
pattern; the common refinement cells, one per membership pattern, are the
final rectangles, carrying allowed-future and allowed-past disc sets.
"""

import colorsys
from dataclasses import dataclass, field

import numpy as np

from . import symbolic, systems, torus, transversal
from .errors import EmptyIntersection, InsufficientSamples, NotAllowed
from .regions import BoxUnion, ChartRectangle, EPS


@dataclass
class BaseRectangle:
    symbol: int
    carrier: ChartRectangle


@dataclass
class RectangleInfo:
    disc: int
    carrier: ChartRectangle          # closed, regular
    anchor_chart: tuple              # (cu, cs) chart reference point
    anchor: np.ndarray               # its torus image
    provenance: tuple = ()           # symbols whose base rectangles contain it


@dataclass
class MarkovFamily:
    family: object                   # the underlying disc family
    rects: list                      # RectangleInfo
    af: list                         # per rectangle: sorted tuple of discs
    pasts: list                      # per rectangle: sorted tuple of discs
    mode: str = "refined"
    params: dict = field(default_factory=dict)
    _offsets: list = field(default=None, repr=False)

    @property
    def s(self):
        return len(self.rects)

    @property
    def system(self):
        return self.family.system

    def on_disc(self, i):
        return [m for m, r in enumerate(self.rects) if r.disc == i]

    def rect_coords(self, mu, x, search=True):
        """Chart coordinates of x in rectangle mu's branch."""
        sys = self.system
        r = self.rects[mu]
        disc = self.family.discs[r.disc]
        w = torus.centered_diff(r.anchor, x)
        cu, cc, cs = systems.split_coords(sys, w)
        cu = np.atleast_1d(r.anchor_chart[0]) + cu
        cs = np.atleast_1d(r.anchor_chart[1]) + cs
        if not search or r.carrier.contains(cu, cs):
            return cu, cs
        if self._offsets is None:
            self._offsets = _branch_offsets(sys)
        for ou, os_ in self._offsets:
            cu2, cs2 = cu + ou, cs + os_
            if r.carrier.contains(cu2, cs2):
                return cu2, cs2
        return cu, cs

    def locate(self, disc_i, x, interior=False, slack=0.0):
        """Rectangles of a disc containing x, with their chart coords."""
        out = []
        for mu in self.on_disc(disc_i):
            r = self.rects[mu]
            cu, cs = self.rect_coords(mu, x)
            target = r.carrier.interior() if interior else r.carrier
            if target.contains(cu, cs):
                out.append((mu, cu, cs))
        return out

    def point_of(self, mu, cu, cs):
        sys = self.system
        r = self.rects[mu]
        disc = self.family.discs[r.disc]
        du = np.atleast_1d(cu) - np.atleast_1d(r.anchor_chart[0])
        ds = np.atleast_1d(cs) - np.atleast_1d(r.anchor_chart[1])
        return torus.wrap(r.anchor + sys.basis_u @ du + sys.basis_s @ ds)

    def to_json(self):
        return {
            "mode": self.mode,
            "params": self.params,
            "family": self.family.to_json(),
            "rectangles": [{
                "disc": r.disc,
                "carrier": r.carrier.to_json(),
                "anchor_chart": [[float(v) for v in np.atleast_1d(r.anchor_chart[0])],
                                 [float(v) for v in np.atleast_1d(r.anchor_chart[1])]],
                "anchor": [float(v) for v in r.anchor],
                "provenance": list(r.provenance),
            } for r in self.rects],
            "af": [list(a) for a in self.af],
            "pasts": [list(p) for p in self.pasts],
        }

    @classmethod
    def from_json(cls, doc):
        from .transversal import AdaptedFamily
        fam = AdaptedFamily.from_json(doc["family"])
        rects = []
        for rd in doc["rectangles"]:
            rects.append(RectangleInfo(
                disc=rd["disc"],
                carrier=ChartRectangle.from_json(rd["carrier"]),
                anchor_chart=(np.array(rd["anchor_chart"][0]),
                              np.array(rd["anchor_chart"][1])),
                anchor=np.array(rd["anchor"]),
                provenance=tuple(rd.get("provenance", ())),
            ))
        return cls(fam, rects, [tuple(a) for a in doc["af"]],
                   [tuple(p) for p in doc["pasts"]],
                   doc.get("mode", "refined"), doc.get("params", {}))


def _branch_offsets(sys):
    """Chart-coordinate shifts induced by unit lattice translations."""
    offs = torus.integer_offsets(sys.d, 1)
    out = []
    for k in offs:
        if not np.any(k):
            continue
        cu, cc, cs = systems.split_coords(sys, k)
        if sys.dims[1] == 0 or np.linalg.norm(cc) < 1e-9:
            out.append((cu, cs))
    return out


# ---------------------------------------------------------------------------
# base rectangles from the coding map

def base_rectangles(family, table, A, rng, samples=200, horizon=24,
                    symbols=None, stability_tol=1e-6, check_stability=True):
    """Sampled product hulls of the one-symbol cylinder images.

    Doubling the sample count must move the projection hull by less than
    ``stability_tol`` in Hausdorff distance, otherwise the estimate is
    rejected as unstable.
    """
    out = []
    symbols = symbols if symbols is not None else [p.index for p in symbolic.live_pieces(table)]
    for a0 in symbols:
        piece = table.pieces[a0]
        ref = piece.anchor_chart
        disc = family.discs[piece.disc]
        us, ss = [], []
        for k in range(samples):
            blk = symbolic.random_admissible_block(A, rng, horizon, start=a0)
            pt = symbolic.theta(family, table, A, blk, tol=np.inf)
            cu, cs = transversal.chart_coords(family.system, disc, pt, hint=ref)
            us.append(cu)
            ss.append(cs)
        us = np.array(us)
        ss = np.array(ss)
        if check_stability and samples >= 16:
            half_u = us[: samples // 2]
            half_s = ss[: samples // 2]
            dh = max(np.abs(half_u.min(0) - us.min(0)).max(),
                     np.abs(half_u.max(0) - us.max(0)).max(),
                     np.abs(half_s.min(0) - ss.min(0)).max(),
                     np.abs(half_s.max(0) - ss.max(0)).max())
            if dh > stability_tol:
                raise InsufficientSamples(
                    f"symbol {a0}: projection hull moved {dh:.2g} when doubling")
        carrier = ChartRectangle.from_bounds(
            piece.disc,
            [(float(us[:, k].min()), float(us[:, k].max())) for k in range(us.shape[1])],
            [(float(ss[:, k].min()), float(ss[:, k].max())) for k in range(ss.shape[1])])
        out.append(BaseRectangle(a0, carrier))
    return out


# ---------------------------------------------------------------------------
# Bowen splitting

def bowen_split(c_alpha, c_beta):
    """Split by fiber intersection pattern into four product pieces.

    A point's stable fiber meets the other rectangle iff its u-coordinate
    lies in the other u-part; dually for unstable fibers.  Piece 1 is the
    intersection and the union of all four is the first rectangle.
    """
    inter = c_alpha.intersect(c_beta)
    if inter.is_empty():
        raise EmptyIntersection("rectangles do not meet")
    u_in = c_alpha.u_part.intersect(c_beta.u_part)
    u_out = c_alpha.u_part.subtract(c_beta.u_part)
    s_in = c_alpha.s_part.intersect(c_beta.s_part)
    s_out = c_alpha.s_part.subtract(c_beta.s_part)
    disc = c_alpha.disc
    return (ChartRectangle(disc, u_in, s_in),
            ChartRectangle(disc, u_in, s_out),
            ChartRectangle(disc, u_out, s_in),
            ChartRectangle(disc, u_out, s_out))


def _pattern_key(bases, cu, cs):
    """(J, fiber-hit pattern) of a chart point against base carriers."""
    J = []
    for k, b in enumerate(bases):
        if b.carrier.contains(cu, cs):
            J.append(k)
    return tuple(J)


def refine(bases, family, table, A):
    """Common refinement cells of the base rectangles, per disc.

    Cells are the connected components of the cut-point arrangement that
    carry a constant membership pattern; each cell is intersected per the
    split-piece formula and closed.  Allowed futures come from the
    admissible target discs of the member symbols.
    """
    sys = family.system
    by_disc = {}
    for b in bases:
        by_disc.setdefault(b.carrier.disc, []).append(b)

    rects = []
    af = []
    dropped = 0
    for disc_i, group in sorted(by_disc.items()):
        u_cuts, s_cuts = set(), set()
        for b in group:
            for box in b.carrier.u_part.boxes:
                u_cuts.update((box[0].lo, box[0].hi))
            for box in b.carrier.s_part.boxes:
                s_cuts.update((box[0].lo, box[0].hi))
        u_cuts = sorted(u_cuts)
        s_cuts = sorted(s_cuts)
        seen = {}
        for iu in range(len(u_cuts) - 1):
            for isx in range(len(s_cuts) - 1):
                cu = np.array([0.5 * (u_cuts[iu] + u_cuts[iu + 1])])
                cs = np.array([0.5 * (s_cuts[isx] + s_cuts[isx + 1])])
                J = _pattern_key(group, cu, cs)
                if not J:
                    continue
                if J in seen:
                    continue
                P = _cell_rectangle(group, J, cu, cs)
                if P is None:
                    dropped += 1
                    continue
                seen[J] = P
        for J, P in sorted(seen.items()):
            carrier = P.regular_closure()
            if carrier.is_empty():
                dropped += 1
                continue
            cu, cs = carrier.center()
            anchor = transversal.chart_to_torus(sys, family.discs[disc_i], cu, cs)
            symbols = tuple(group[k].symbol for k in J)
            rects.append(RectangleInfo(disc_i, carrier, (cu, cs), anchor, symbols))
            futures = set()
            for k in J:
                futures.update(A.targets[group[k].symbol])
            af.append(tuple(sorted(futures)))

    mf = MarkovFamily(family, rects, af, [()] * len(rects),
                      mode="refined", params={"dropped_cells": dropped})
    compute_pasts(mf)
    return mf


def _cell_rectangle(group, J, cu, cs):
    """P(x): intersection of the open split pieces containing the sample."""
    Jset = set(J)
    Jstar = set()
    for k in Jset:
        for m, other in enumerate(group):
            if m in Jstar or other.carrier.intersect(group[k].carrier).is_empty():
                continue
            Jstar.add(m)
    P = None
    for k in Jset:
        for m in Jstar:
            ca, cb = group[k].carrier, group[m].carrier
            if ca.intersect(cb).is_empty():
                continue
            pieces = bowen_split(ca, cb)
            containing = None
            for piece in pieces:
                if piece.contains(cu, cs):
                    containing = piece
                    break
            if containing is None:
                return None
            open_piece = containing.regular_closure().interior()
            P = open_piece if P is None else P.intersect(open_piece)
            if P.is_empty():
                return None
    return P


def compute_pasts(mf, samples=64, rng=None):
    """Allowed pasts: disc k is a past of R_mu when some rectangle on k has
    the containing disc among its futures and maps interior into R_mu."""
    rng = rng or np.random.default_rng(0)
    sys = mf.system
    pasts = [set() for _ in range(mf.s)]
    for nu_, r in enumerate(mf.rects):
        for i2 in mf.af[nu_]:
            pu, ps = r.carrier.sample(rng, samples, interior_margin=1e-9)
            for k in range(samples):
                x = mf.point_of(nu_, pu[k], ps[k])
                y = transversal.proj_disc(mf.family, i2, systems.apply(sys, x))
                for mu, cu, cs in mf.locate(i2, y, interior=True):
                    pasts[mu].add(r.disc)
    mf.pasts = [tuple(sorted(p)) for p in pasts]
    return mf


# ---------------------------------------------------------------------------
# the projected dynamics

def phi_plus(mf, mu, i2, x):
    if i2 not in mf.af[mu]:
        raise NotAllowed(f"disc {i2} is not an allowed future of rectangle {mu}")
    return transversal.proj_disc(mf.family, i2, systems.apply(mf.system, x))


def phi_minus(mf, mu, k, x):
    if k not in mf.pasts[mu]:
        raise NotAllowed(f"disc {k} is not an allowed past of rectangle {mu}")
    return transversal.proj_disc(mf.family, k, systems.apply_inverse(mf.system, x))


def verify_markov(mf, rng, samples=100, fiber_samples=8, tol=1e-8):
    """Check both fiber containments on interior samples of every
    admissible (source rectangle, future disc, target rectangle) triple.

    5a: the forward image of a stable fiber stays inside the stable fiber
    of the image.  5b: the backward image of the target unstable fiber
    stays inside the source unstable fiber (with the forward round trip
    confirming the superset form).
    """
    sys = mf.system
    report = {"triples": {}, "violations": [], "samples": samples,
              "fiber_samples": fiber_samples, "tol": tol}
    for mu, r in enumerate(mf.rects):
        for i2 in mf.af[mu]:
            pu, ps = r.carrier.sample(rng, samples, interior_margin=1e-9)
            for k in range(samples):
                x = mf.point_of(mu, pu[k], ps[k])
                y = transversal.proj_disc(mf.family, i2, systems.apply(sys, x))
                hits = mf.locate(i2, y, interior=True)
                if not hits:
                    continue
                nu_, yu, ys = hits[0]
                key = (mu, i2, nu_)
                entry = report["triples"].setdefault(
                    key, {"checked": 0, "worst_a": 0.0, "worst_b": 0.0})
                entry["checked"] += 1
                tgt = mf.rects[nu_]

                # 5a: stable fiber of x maps into the stable fiber of y
                fu, fs = r.carrier.sample(rng, fiber_samples, interior_margin=1e-9)
                for t in range(fiber_samples):
                    xp = mf.point_of(mu, pu[k], fs[t])
                    yp = transversal.proj_disc(mf.family, i2, systems.apply(sys, xp))
                    cu2, cs2 = mf.rect_coords(nu_, yp)
                    du = float(np.abs(cu2 - yu).max())
                    inside = tgt.carrier.s_part.closure().contains_batch(
                        cs2[None, :])[0]
                    margin = du if inside else np.inf
                    entry["worst_a"] = max(entry["worst_a"], du)
                    if du > tol or not inside:
                        report["violations"].append(
                            {"kind": "5a", "triple": key, "margin": float(margin)})

                # 5b: unstable fiber of y pulls back into that of x
                gu, gs = tgt.carrier.sample(rng, fiber_samples, interior_margin=1e-9)
                for t in range(fiber_samples):
                    w = mf.point_of(nu_, gu[t], ys)
                    z = transversal.proj_disc(mf.family, r.disc,
                                              systems.apply_inverse(sys, w))
                    cu3, cs3 = mf.rect_coords(mu, z)
                    ds = float(np.abs(cs3 - ps[k]).max())
                    inside = r.carrier.u_part.closure().contains_batch(
                        cu3[None, :])[0]
                    entry["worst_b"] = max(entry["worst_b"], ds)
                    # forward round trip witnesses the superset form
                    back = transversal.proj_disc(mf.family, i2,
                                                 systems.apply(sys, z))
                    rt = torus.dist(back, w)
                    if ds > tol or not inside or rt > tol:
                        report["violations"].append(
                            {"kind": "5b", "triple": key,
                             "margin": float(max(ds, rt))})
    report["triples"] = {f"{k[0]}->{k[1]}:{k[2]}": v
                         for k, v in report["triples"].items()}
    report["n_triples"] = len(report["triples"])
    report["ok"] = not report["violations"]
    return report


def check_disjoint_interiors(mf):
    """Exact pairwise interior-intersection check on each disc."""
    bad = []
    for i in range(mf.family.n):
        on = mf.on_disc(i)
        for a in range(len(on)):
            for b in range(a + 1, len(on)):
                ra = mf.rects[on[a]].carrier.interior()
                rb = mf.rects[on[b]].carrier.interior()
                if not ra.intersect(rb).is_empty():
                    bad.append((on[a], on[b]))
    return bad


def check_regular_closed(mf):
    bad = []
    for mu, r in enumerate(mf.rects):
        if not r.carrier.equal_set(r.carrier.regular_closure()):
            bad.append(mu)
    return bad


# ---------------------------------------------------------------------------
# rendering

def render_disc_svg(mf, disc_i, width=640):
    """Cell arrangement of one disc as a standalone SVG document."""
    rects = mf.on_disc(disc_i)
    if not rects:
        return "<svg xmlns='http://www.w3.org/2000/svg'/>"
    lo_u = min(mf.rects[m].carrier.u_part.extent(0)[0] for m in rects)
    hi_u = max(mf.rects[m].carrier.u_part.extent(0)[1] for m in rects)
    lo_s = min(mf.rects[m].carrier.s_part.extent(0)[0] for m in rects)
    hi_s = max(mf.rects[m].carrier.s_part.extent(0)[1] for m in rects)
    span_u = max(hi_u - lo_u, 1e-9)
    span_s = max(hi_s - lo_s, 1e-9)
    height = int(width * span_s / span_u)
    parts = [f"<svg xmlns='http://www.w3.org/2000/svg' width='{width}' "
             f"height='{height}' viewBox='0 0 {width} {height}'>"]
    for j, m in enumerate(rects):
        r, g, b = colorsys.hsv_to_rgb((j * 0.61803) % 1.0, 0.35, 0.95)
        fill = f"rgb({int(255 * r)},{int(255 * g)},{int(255 * b)})"
        car = mf.rects[m].carrier
        for ub in car.u_part.boxes:
            for sb in car.s_part.boxes:
                x = (ub[0].lo - lo_u) / span_u * width
                w = (ub[0].hi - ub[0].lo) / span_u * width
                y = (sb[0].lo - lo_s) / span_s * height
                h = (sb[0].hi - sb[0].lo) / span_s * height
                parts.append(
                    f"<rect x='{x:.2f}' y='{y:.2f}' width='{w:.2f}' "
                    f"height='{h:.2f}' fill='{fill}' stroke='black' "
                    f"stroke-width='0.5'/>")
    parts.append("</svg>")
    return "\n".join(parts)
