"""Seeded Markov transversal families for the bundled product systems.

For maps that split as (planar hyperbolic automorphism) x (circle
isometry), the center foliation is the vertical circle fibration and the
horizontal tori are global transversals.  Three golden-ratio boxes tile
the planar factor and are permuted Markov-style by the cat map, so the
family {box x horizontal torus} is a complete Markov transversal: discs
are the horizontal tori at finitely many heights, the allowed future of a
rectangle is the torus nearest the rotated height, and the projected maps
act planarly by the cat map itself.

This seeded route replaces the lattice construction, whose disc count
grows like 1/delta^3 and is far beyond workstation scale at admissible
parameters; the downstream machinery (subshift, coding maps, verifiers)
is shared with the lattice path.
"""

import numpy as np

from . import refinement, systems, transversal
from ._accel import njit
from .errors import ParameterViolation
from .regions import ChartRectangle
from .shadowing import shadowing_constant

PHI = (1.0 + np.sqrt(5.0)) / 2.0
ALPHA = PHI - 1.0

# the three planar boxes in golden coordinates U = phi x1 + x2,
# S = -alpha x1 + x2; together a fundamental domain of the image lattice
GOLDEN_BOXES = (
    ((0.0, 1.0), (-ALPHA, ALPHA * ALPHA)),   # block 00
    ((1.0, PHI), (-ALPHA, ALPHA * ALPHA)),   # block 01
    ((0.0, 1.0), (ALPHA * ALPHA, 1.0)),      # block 10
)

# expected planar transition pattern of the boxes under the cat map
PLANAR_PATTERN = np.array([[1, 1, 1], [1, 1, 0], [1, 1, 1]], dtype=np.int8)


def _planar_conversions(sys):
    """Scale factors turning golden coordinates into unit-frame chart
    coordinates of the system (sign included)."""
    bu = sys.basis_u[:, 0]
    bs = sys.basis_s[:, 0]
    cu = PHI * bu[0] + bu[1]
    cs = -ALPHA * bs[0] + bs[1]
    if abs(abs(cu) - np.sqrt(1 + PHI ** 2)) > 1e-9:
        raise ParameterViolation("system is not planar golden hyperbolic")
    return cu, cs


def _chart_boxes(sys, disc_index):
    """The golden boxes as closed chart rectangles in the system frames."""
    cu, cs = _planar_conversions(sys)
    out = []
    for (ulo, uhi), (slo, shi) in GOLDEN_BOXES:
        ub = sorted((ulo / cu, uhi / cu))
        sb = sorted((slo / cs, shi / cs))
        out.append(ChartRectangle.from_bounds(disc_index, [tuple(ub)], [tuple(sb)]))
    return out


def _assemble(sys, discs, epsilon, delta, box_lists, af, mode, params):
    C, delta0 = shadowing_constant(sys)
    fam = transversal.AdaptedFamily(sys, discs, epsilon, delta, C, delta0)
    rects = []
    afs = []
    for disc_i, boxes in enumerate(box_lists):
        for b, carrier in enumerate(boxes):
            cu0, cs0 = carrier.center()
            anchor = transversal.chart_to_torus(sys, discs[disc_i], cu0, cs0)
            rects.append(refinement.RectangleInfo(
                disc_i, carrier, (cu0, cs0), anchor, provenance=(b,)))
            afs.append(af[disc_i])
    mf = refinement.MarkovFamily(fam, rects, afs, [()] * len(rects),
                                 mode=mode, params=params)
    refinement.compute_pasts(mf)
    return mf


def build_zero_center_family(r0=systems.DEFAULT_R0):
    """Degenerate planar mode: the cat map with the trivial center.

    The single transversal component is the torus itself; projections are
    the identity and the three golden boxes are the rectangles.
    """
    sys = systems.cat2(r0)
    disc = transversal.AdaptedDisc(0, np.zeros(2), np.inf, kind="global")
    boxes = _chart_boxes(sys, 0)
    return _assemble(sys, [disc], epsilon=np.inf, delta=0.0,
                     box_lists=[boxes], af=[(0,)],
                     mode="zero-center", params={"boxes": len(boxes)})


def heights_for(delta, slack=0.95):
    """Number of transversal tori so the 2*delta saturations cover."""
    return int(np.ceil(1.0 / (slack * 4.0 * delta)))


def build_product_family(sys, delta, epsilon=0.1, heights=None):
    """Markov transversal family for a planar-cat x circle-isometry map."""
    if sys.dims != (1, 1, 1):
        raise ParameterViolation("product families need dims (1, 1, 1)")
    axis = int(np.argmax(np.abs(sys.basis_c[:, 0])))
    if abs(abs(sys.basis_c[axis, 0]) - 1.0) > 1e-9:
        raise ParameterViolation("center direction must be a coordinate axis")
    rot = float(sys.translation[axis])
    H = heights if heights is not None else heights_for(delta)
    if 0.5 / H >= 2.0 * delta:
        raise ParameterViolation(
            f"{H} heights cannot cover with saturation size 2*delta = {2 * delta}")

    discs = []
    box_lists = []
    af = []
    for l in range(H):
        center = np.zeros(sys.d)
        center[axis] = l / H
        discs.append(transversal.AdaptedDisc(l, center, np.inf, kind="global"))
        box_lists.append(_chart_boxes(sys, l))
        target = int(np.round((l / H + rot) * H)) % H
        gap = abs((l / H + rot) - _nearest_height(l / H + rot, H))
        if gap >= 2.0 * delta:
            raise ParameterViolation(
                f"rotated height {l}/{H} is {gap:.3g} from the nearest torus, "
                f"beyond the saturation reach {2 * delta:.3g}")
        af.append((target,))
    return _assemble(sys, discs, epsilon, delta, box_lists, af,
                     mode="product", params={"heights": H, "rotation": rot,
                                             "axis": axis})


def _nearest_height(z, H):
    return np.round(z * H) / H


def expected_matrix_S(mf):
    """The product pattern: planar golden transitions tensored with the
    height assignment; used as an independent cross-check."""
    H = mf.params.get("heights", 1)
    s = mf.s
    out = np.zeros((s, s), dtype=np.int8)
    for mu in range(s):
        disc_mu = mf.rects[mu].disc
        w_mu = mf.rects[mu].provenance[0]
        for nu in range(s):
            disc_nu = mf.rects[nu].disc
            w_nu = mf.rects[nu].provenance[0]
            if disc_nu in mf.af[mu] and PLANAR_PATTERN[w_mu, w_nu]:
                out[mu, nu] = 1
    return out


# ---------------------------------------------------------------------------
# covering verification

@njit
def _planar_tiling_scan(m1, m2, boxes, phi, alpha):
    """First grid point of T^2 not in any golden box mod the image lattice,
    or (-1, -1).  boxes rows: (ulo, uhi, slo, shi) in golden coordinates."""
    nb = boxes.shape[0]
    det = phi + alpha
    for a in range(m1):
        x = a / m1
        for b in range(m2):
            y = b / m2
            U = phi * x + y
            S = -alpha * x + y
            em = (U - S) / det
            en = (alpha * U + phi * S) / det
            hit = False
            for dm in range(-2, 3):
                m = np.floor(em) + dm
                for dn in range(-2, 3):
                    n = np.floor(en) + dn
                    u = U - (m * phi + n)
                    s = S - (n - m * alpha)
                    for kbox in range(nb):
                        if (boxes[kbox, 0] - 1e-12 <= u <= boxes[kbox, 1] + 1e-12
                                and boxes[kbox, 2] - 1e-12 <= s <= boxes[kbox, 3] + 1e-12):
                            hit = True
            if not hit:
                return a, b
    return -1, -1


def covering_report(mf, pitch):
    """Saturation covering of the full torus on a grid of the given pitch.

    For product families the membership predicate factorizes exactly: a
    grid point (w, z) lies in some rectangle saturation iff its planar
    part lies in the box tiling (checked on the full planar grid) and its
    height is within 2*delta of a transversal torus (checked on the full
    height grid).  The zero-center mode only has the planar factor.
    """
    sys = mf.system
    m = int(np.ceil(1.0 / pitch))
    boxes = np.array([[b[0][0], b[0][1], b[1][0], b[1][1]] for b in GOLDEN_BOXES])
    miss = _planar_tiling_scan(m, m, boxes, PHI, ALPHA)
    report = {"pitch": pitch, "planar_grid": m,
              "planar_miss": None if miss[0] < 0 else [int(miss[0]), int(miss[1])]}
    if mf.mode == "zero-center":
        report["grid_points"] = m * m
        report["ok"] = miss[0] < 0
        return report
    H = mf.params["heights"]
    delta = mf.family.delta
    heights = np.arange(H) / H
    zgrid = np.arange(m) / m
    gaps = np.abs((zgrid[:, None] - heights[None, :] + 0.5) % 1.0 - 0.5)
    covered = (gaps < 2.0 * delta).any(axis=1)
    misses = np.nonzero(~covered)[0]
    report["height_grid"] = m
    report["height_miss"] = None if misses.size == 0 else int(misses[0])
    report["grid_points"] = m * m * m
    report["ok"] = bool(miss[0] < 0 and misses.size == 0)
    return report
