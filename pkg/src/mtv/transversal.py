"""Adapted transversal discs, disc families, and center-plaque projection.

Every disc is an affine translate of the invariant (u+s)-plane; all discs
share the system's orthonormal (u, s) frames, so chart transition maps of
the projected dynamics are diagonal affine maps.  Two disc kinds exist:

* ``ball``: a chart ball of radius epsilon around a center (the lattice
  construction uses these, with the working subdisc B realized as the
  inscribed chart box of the delta-ball);
* ``global``: a full affine translate of the (u+s)-plane modulo 1 (a
  closed transversal torus).  Seeded product families use these; chart
  coordinates are then only meaningful relative to a base point, which is
  how all rectangle-local operations use them.
"""

from dataclasses import dataclass, field

import numpy as np

from . import systems, torus
from ._accel import njit
from .errors import (BuildBudgetExceeded, CoverageFailure, NotInSaturation,
                     OutOfChart, ParameterViolation)
from .shadowing import shadowing_constant


@dataclass(frozen=True)
class AdaptedDisc:
    index: int
    center: np.ndarray
    epsilon: float
    kind: str = "ball"  # "ball" | "global"


@dataclass
class AdaptedFamily:
    """A finite family of pairwise disjoint adapted discs.

    ``delta`` is the working subdisc scale: B_i is the inscribed chart box
    of the delta-ball, E_i the chart ball of radius epsilon/2.
    """

    system: systems.AffinePHSystem
    discs: list
    epsilon: float
    delta: float
    C: float
    delta0: float
    lattice: dict = field(default=None)  # grid metadata when lattice-built

    @property
    def n(self):
        return len(self.discs)

    def b_halfwidth(self):
        ku, _, ks = self.system.dims
        return self.delta / np.sqrt(ku + ks)

    def b_box(self, i):
        from .regions import ChartRectangle
        b = self.b_halfwidth()
        ku, _, ks = self.system.dims
        return ChartRectangle.from_bounds(i, [(-b, b)] * ku, [(-b, b)] * ks,
                                          lo_closed=True, hi_closed=False)

    def to_json(self):
        return {
            "system": systems.to_json_dict(self.system),
            "epsilon": self.epsilon,
            "delta": self.delta,
            "C": self.C,
            "delta0": self.delta0,
            "discs": [{"center": [float(v) for v in d.center],
                       "epsilon": d.epsilon if np.isfinite(d.epsilon) else None,
                       "kind": d.kind} for d in self.discs],
            "lattice": self.lattice,
        }

    @classmethod
    def from_json(cls, doc):
        sys_ = systems.from_json_dict(doc["system"])
        discs = [AdaptedDisc(i, np.array(d["center"], float),
                             np.inf if d["epsilon"] is None else d["epsilon"],
                             d["kind"])
                 for i, d in enumerate(doc["discs"])]
        return cls(sys_, discs, doc["epsilon"], doc["delta"], doc["C"],
                   doc["delta0"], doc.get("lattice"))


# ---------------------------------------------------------------------------
# chart maps

def chart_to_torus(sys, disc, pu, ps):
    pu = np.atleast_1d(np.asarray(pu, float))
    ps = np.atleast_1d(np.asarray(ps, float))
    return torus.wrap(disc.center + sys.basis_u @ pu + sys.basis_s @ ps)


def chart_coords(sys, disc, x, hint=None, tol=1e-9):
    """(u, s) chart coordinates of a torus point lying on the disc.

    The lift of x is taken nearest to the hinted chart position (or the
    disc center).  OutOfChart when the point is off the disc plane or,
    for ball discs, outside the chart radius.
    """
    u, c, s = sys.dims
    if hint is not None:
        base = disc.center + sys.basis_u @ np.atleast_1d(hint[0]) \
            + sys.basis_s @ np.atleast_1d(hint[1])
    else:
        base = disc.center
    w = torus.centered_diff(torus.wrap(base), x) + (base - disc.center)
    cu, cc, cs = systems.split_coords(sys, w)
    if c and np.linalg.norm(cc) > tol:
        raise OutOfChart(f"point off the disc plane by {np.linalg.norm(cc):.3g}")
    if disc.kind == "ball" and np.hypot(np.linalg.norm(cu), np.linalg.norm(cs)) > disc.epsilon:
        raise OutOfChart("outside the chart ball")
    return cu, cs


def chart_coords_candidates(sys, disc, x, radius=1, tol=1e-9):
    """All chart coordinates of x over integer lifts within the given
    lattice radius; used to locate points inside large global-disc
    rectangles where the nearest lift may pick the wrong branch."""
    u, c, s = sys.dims
    offsets = torus.integer_offsets(sys.d, radius)
    w0 = torus.centered_diff(disc.center, x)
    out = []
    for k in offsets:
        w = w0 + k
        cu, cc, cs = systems.split_coords(sys, w)
        if c == 0 or np.linalg.norm(cc) <= tol:
            out.append((cu, cs))
    return out


# ---------------------------------------------------------------------------
# projection along center plaques

def proj_disc(family, i, y, rmax=None, return_coords=False):
    """Unique intersection of the local center plaque of y with disc i."""
    sys = family.system
    disc = family.discs[i]
    u, c, s = sys.dims
    if c == 0:
        # trivial center: plaques are points, projection is the identity
        p = torus.wrap(np.asarray(y, float))
        if return_coords:
            cu, cs = chart_coords(sys, disc, p)
            return p, (cu, cs)
        return p
    rmax = sys.r0 if rmax is None else rmax
    w = torus.centered_diff(disc.center, y)
    cu, cc, cs = systems.split_coords(sys, w)
    if np.linalg.norm(cc) > rmax:
        raise NotInSaturation(f"center offset {np.linalg.norm(cc):.3g} > {rmax:.3g}")
    if disc.kind == "ball" and np.hypot(np.linalg.norm(cu), np.linalg.norm(cs)) >= disc.epsilon:
        raise NotInSaturation("plaque misses the chart ball")
    p = torus.wrap(np.asarray(y, float) - sys.basis_c @ cc)
    if return_coords:
        return p, (cu, cs)
    return p


def proj_disc_coords(family, i, y, rmax=None):
    """Chart coordinates of the projection, without leaving the chart."""
    _, coords = proj_disc(family, i, y, rmax, return_coords=True)
    return coords


# ---------------------------------------------------------------------------
# product coordinates inside one disc

def disc_coordinates(family, i, x, y, r=None):
    """The pair (y_u, y_s) of fiber representatives of y relative to x.

    y_u lies on the local unstable set of x in the disc, y_s on the local
    stable set, and y is recovered as the disc bracket of the pair.
    """
    sys = family.system
    disc = family.discs[i]
    r = r if r is not None else sys.r0 / 2
    if disc.kind == "ball" and disc.epsilon < 3 * r:
        raise OutOfChart(f"disc size {disc.epsilon} below 3r = {3 * r}")
    xu, xs = chart_coords(sys, disc, x)
    yu, ys = chart_coords(sys, disc, y, hint=(xu, xs))
    if torus.dist(x, y) >= 2 * r:
        raise OutOfChart("points too far apart for the product coordinates")
    pu = chart_to_torus(sys, disc, yu, xs)
    pss = chart_to_torus(sys, disc, xu, ys)
    return pu, pss


def disc_bracket(family, i, p, q, hint=None):
    """Inverse of the product coordinates: u-data of p with s-data of q."""
    sys = family.system
    disc = family.discs[i]
    pu, _ = chart_coords(sys, disc, p, hint=hint)
    _, qs = chart_coords(sys, disc, q, hint=hint)
    return chart_to_torus(sys, disc, pu, qs)


def disc_bracket_coords(pu_ps, qu_qs):
    """Bracket on raw chart coordinates."""
    return pu_ps[0], qu_qs[1]


# ---------------------------------------------------------------------------
# lattice construction

def lattice_size(sys, epsilon, delta):
    """Disc count and grid counts the lattice construction would use."""
    ku, c, ks = sys.dims
    b = delta / np.sqrt(ku + ks)
    pitch = 0.98 * b * np.sqrt(2)       # rotated-box in-radius coverage
    q = int(np.ceil(1.0 / pitch))
    h = int(np.ceil(1.0 / (3.8 * delta))) if c else 1
    return {"planar": q, "heights": h, "discs": q ** (ku + ks) * h}


def check_convention(sys, epsilon, delta, kappa=2.0, nu=None, rho=None):
    """Evaluate the standing parameter inequalities; returns violations."""
    C, delta0 = shadowing_constant(sys, kappa)
    out = []
    if not (0 < delta < epsilon < sys.r0):
        out.append(f"need 0 < delta < epsilon < r0, got delta={delta}, "
                   f"epsilon={epsilon}, r0={sys.r0}")
    if 16 * C * delta > epsilon + 1e-15:
        out.append(f"16*C*delta = {16 * C * delta:.4g} > epsilon = {epsilon}")
    if (3 + sys.lip_center()) * delta > delta0 + 1e-15:
        out.append(f"(3+Lip_c)*delta = {(3 + sys.lip_center()) * delta:.4g} "
                   f"> delta0 = {delta0:.4g}")
    if nu is not None and 3 * sys.lip() * nu >= delta:
        out.append(f"3*Lip(f)*nu = {3 * sys.lip() * nu:.4g} >= delta = {delta}")
    if rho is not None and 2 * C * delta >= rho:
        out.append(f"2*C*delta = {2 * C * delta:.4g} >= rho = {rho}")
    return out


def convention_delta(sys, epsilon, kappa=2.0):
    """Largest delta satisfying the standing inequalities for epsilon."""
    C, delta0 = shadowing_constant(sys, kappa)
    return min(epsilon / (16 * C), delta0 / (3 + sys.lip_center()))


@njit
def _lattice_cover_scan(m1, m2, m3, q, h, us_inv, bhalf, twodelta):
    # grid over T^3; planar axes 0,1 on a q x q lattice, heights on h levels
    for a in range(m1):
        x0 = a / m1
        for bidx in range(m2):
            x1 = bidx / m2
            # planar chart offsets to the 4 neighbouring lattice centers
            ok_planar = False
            f0 = x0 * q
            f1 = x1 * q
            for da in range(2):
                i0 = np.floor(f0) + da
                for db in range(2):
                    i1 = np.floor(f1) + db
                    o0 = x0 - i0 / q
                    o1 = x1 - i1 / q
                    cu = us_inv[0, 0] * o0 + us_inv[0, 1] * o1
                    cs = us_inv[1, 0] * o0 + us_inv[1, 1] * o1
                    if abs(cu) <= bhalf and abs(cs) <= bhalf:
                        ok_planar = True
            if not ok_planar:
                return a, bidx, -1
            for cidx in range(m3):
                x2 = cidx / m3
                g = x2 * h
                lo = np.floor(g)
                ok = False
                for dl in range(2):
                    zoff = x2 - (lo + dl) / h
                    if abs(zoff) < twodelta:
                        ok = True
                if not ok:
                    return a, bidx, cidx
    return -1, -1, -1


def build_adapted_family(sys, epsilon, delta, strict=True, max_discs=500_000,
                         verify_cover=True, cover_budget=2 * 10 ** 8, kappa=2.0):
    """Lattice family of ball discs whose subdisc saturations cover.

    Planar centers sit on a coordinate grid fine enough that the inscribed
    B-boxes cover the invariant plane; heights are spaced so the 2*delta
    center saturations cover the center circle.  ``strict`` enforces the
    full parameter convention; the projection-reach inequality
    (1+C)*delta <= epsilon/2 is enforced unconditionally.
    """
    C, delta0 = shadowing_constant(sys, kappa)
    violations = check_convention(sys, epsilon, delta, kappa)
    if strict and violations:
        raise ParameterViolation("; ".join(violations))
    if (1 + C) * delta > epsilon / 2:
        raise ParameterViolation(
            f"(1+C)*delta = {(1 + C) * delta:.4g} > epsilon/2: unique center "
            f"crossings are out of reach")
    ku, c, ks = sys.dims
    if c == 0:
        raise ParameterViolation(
            "a lattice family needs a positive-dimensional center: full-"
            "dimensional discs cannot be disjoint while their subdiscs cover")
    if ku != 1 or ks != 1 or c != 1:
        raise ParameterViolation("lattice construction implemented for dims (1,1,1)")
    # center direction must be a coordinate axis so height levels close up
    axis = int(np.argmax(np.abs(sys.basis_c[:, 0])))
    if abs(abs(sys.basis_c[axis, 0]) - 1.0) > 1e-9:
        raise ParameterViolation("center direction must be a coordinate axis")
    planar_axes = [k for k in range(sys.d) if k != axis]

    size = lattice_size(sys, epsilon, delta)
    if size["discs"] > max_discs:
        raise BuildBudgetExceeded(
            f"lattice would need {size['discs']:,} discs "
            f"({size['planar']}^2 planar x {size['heights']} heights) "
            f"which exceeds the budget of {max_discs:,}")

    q, h = size["planar"], size["heights"]
    centers = np.zeros((q * q * h, sys.d))
    idx = 0
    for i0 in range(q):
        for i1 in range(q):
            for l in range(h):
                centers[idx, planar_axes[0]] = i0 / q
                centers[idx, planar_axes[1]] = i1 / q
                centers[idx, axis] = (l + (i0 + i1) % 2 * 0.0) / h
                idx += 1
    # disjointness: discs are parallel planes; distinct heights are disjoint,
    # same-height discs coincide as planes, so separate them along the center
    # by a sub-spacing shear per planar cell
    shear = 1.0 / (h * (q * q + 1))
    k = 0
    for i0 in range(q):
        for i1 in range(q):
            cell = i0 * q + i1
            for l in range(h):
                centers[k, axis] = (l / h + cell * shear) % 1.0
                k += 1

    discs = [AdaptedDisc(i, centers[i], epsilon) for i in range(len(centers))]
    fam = AdaptedFamily(sys, discs, epsilon, delta, C, delta0,
                        lattice={"planar": q, "heights": h, "axis": axis,
                                 "planar_axes": planar_axes, "shear": shear})

    if verify_cover:
        m = int(np.ceil(4.0 / delta))
        if m ** 3 > cover_budget:
            raise BuildBudgetExceeded(
                f"covering grid needs {m ** 3:,} points (pitch delta/4), "
                f"budget is {cover_budget:,}")
        us = np.column_stack([sys.basis_u[planar_axes, 0], sys.basis_s[planar_axes, 0]])
        us_inv = np.ascontiguousarray(np.linalg.inv(us))
        b = fam.b_halfwidth()
        # shear keeps same-plane discs apart but costs saturation reach
        miss = _lattice_cover_scan(m, m, m, q, h, us_inv, b,
                                   2 * delta - (q * q) * shear)
        if miss[0] >= 0:
            raise CoverageFailure(
                f"grid point ({miss[0]}/{m}, {miss[1]}/{m}, {miss[2]}/{m}) "
                f"is not in any subdisc saturation")
    return fam


def nearest_disc(family, y):
    """Index of the family disc whose saturation most easily holds y."""
    sys = family.system
    if family.lattice is None:
        ds = torus.dist_batch(np.array([d.center for d in family.discs]),
                              np.tile(np.asarray(y, float), (family.n, 1)))
        return int(np.argmin(ds))
    q = family.lattice["planar"]
    h = family.lattice["heights"]
    axis = family.lattice["axis"]
    pax = family.lattice["planar_axes"]
    i0 = int(np.round(y[pax[0]] * q)) % q
    i1 = int(np.round(y[pax[1]] * q)) % q
    l = int(np.round((y[axis] - (i0 * q + i1) * family.lattice["shear"]) * h)) % h
    return (i0 * q + i1) * h + l
