"""Subdivision of the working subdiscs, transition structure, and the
shadowing-based coding map.

Pieces are half-open chart boxes obtained by bisecting each subdisc box
until piece, image and preimage diameters sit below the working bound nu
and both images fit inside a single subdisc saturation.  The transition
structure follows the two admission rules

  (1) the forward image of the source piece fits in the target subdisc
      saturation, or
  (2) some piece of the target disc pulls back into the source subdisc
      saturation with its projection meeting the source piece;

both rules constrain (source piece, target disc) only, so rows are stored
as sets of target discs.
"""

from dataclasses import dataclass, field

import numpy as np

from . import systems, torus, transversal
from .errors import (ChoiceExhausted, DeadSymbol, HorizonTooShort,
                     NotAdmissible, SubdivisionOverflow)
from .regions import EPS, Iv
from .shadowing import PseudoOrbit, defect, shadow


@dataclass(frozen=True)
class Piece:
    index: int
    disc: int
    u_iv: tuple      # (lo, hi) per u-axis, half-open
    s_iv: tuple
    anchor_chart: tuple  # (cu, cs) arrays
    anchor: np.ndarray   # torus point
    fwd: int            # designated forward target disc j(i, alpha)
    bwd: int            # designated backward target disc k(i, alpha)


@dataclass
class SymbolTable:
    family: object
    pieces: list
    by_disc: list
    nu: float
    dropped: list = field(default_factory=list)  # unresolved boxes (diagnostic)

    @property
    def n(self):
        return len(self.pieces)

    def pieces_of(self, disc):
        return self.by_disc[disc]

    def piece_containing(self, disc, cu, cs, slack=1e-9):
        for idx in self.by_disc[disc]:
            p = self.pieces[idx]
            if _in_box(p.u_iv, cu, slack) and _in_box(p.s_iv, cs, slack):
                return idx
        return None


def _in_box(ivs, coords, slack):
    coords = np.atleast_1d(coords)
    for (lo, hi), x in zip(ivs, coords):
        if x < lo - slack or x >= hi + slack:
            return False
    return True


def _box_widths(u_iv, s_iv):
    wu = np.array([hi - lo for lo, hi in u_iv])
    ws = np.array([hi - lo for lo, hi in s_iv])
    return wu, ws


class _ChartStep:
    """Forward and backward chart actions of the map on the shared frames."""

    def __init__(self, sys):
        self.sys = sys
        self.mu = sys.basis_u.T @ sys.matrix @ sys.basis_u
        self.ms = sys.basis_s.T @ sys.matrix @ sys.basis_s
        self.mu_inv = np.linalg.inv(self.mu)
        self.ms_inv = np.linalg.inv(self.ms)
        self.nu_fwd = float(np.linalg.norm(self.mu, 2))
        self.ns_fwd = float(np.linalg.norm(self.ms, 2))
        self.nu_bwd = float(np.linalg.norm(self.mu_inv, 2))
        self.ns_bwd = float(np.linalg.norm(self.ms_inv, 2))

    def image_diam(self, wu, ws, forward=True):
        if forward:
            return float(np.hypot(self.nu_fwd * np.linalg.norm(wu),
                                  self.ns_fwd * np.linalg.norm(ws)))
        return float(np.hypot(self.nu_bwd * np.linalg.norm(wu),
                              self.ns_bwd * np.linalg.norm(ws)))

    def interval_image(self, m, ivs):
        """Exact image of a product of intervals under a 1x1 block."""
        lam = float(m[0, 0])
        out = []
        for lo, hi in ivs:
            a, b = lam * lo, lam * hi
            out.append((min(a, b), max(a, b)))
        return out


def _saturation_offset(sys, point, disc):
    """(planar u, planar s, center) offsets of a torus point from a disc."""
    w = torus.centered_diff(disc.center, point)
    return systems.split_coords(sys, w)


def _fits_in_saturation(sys, step, family, disc_i, u_iv, s_iv, target, forward):
    """Exact containment of the mapped chart box in sat^c(B_target, delta)."""
    b = family.b_halfwidth()
    delta = family.delta
    base = transversal.chart_to_torus(sys, family.discs[disc_i],
                                      [0.5 * (lo + hi) for lo, hi in u_iv],
                                      [0.5 * (lo + hi) for lo, hi in s_iv])
    img = systems.apply(sys, base) if forward else systems.apply_inverse(sys, base)
    cu0, cc0, cs0 = _saturation_offset(sys, img, family.discs[target])
    if sys.dims[1] and np.linalg.norm(cc0) >= 2 * delta - EPS:
        return False
    mu = step.mu if forward else step.mu_inv
    ms = step.ms if forward else step.ms_inv
    # center the box at the mapped midpoint; 1-d blocks give exact intervals
    hw_u = [0.5 * (hi - lo) for lo, hi in u_iv]
    hw_s = [0.5 * (hi - lo) for lo, hi in s_iv]
    for k, hwk in enumerate(hw_u):
        span = abs(float(mu[k, k])) * hwk if mu.shape[0] == 1 else np.linalg.norm(mu, 2) * hwk
        if abs(cu0[k]) + span > b - EPS:
            return False
    for k, hwk in enumerate(hw_s):
        span = abs(float(ms[k, k])) * hwk if ms.shape[0] == 1 else np.linalg.norm(ms, 2) * hwk
        if abs(cs0[k]) + span > b - EPS:
            return False
    return True


def _target_candidates(family, point, limit=4096):
    if family.lattice is not None:
        return [transversal.nearest_disc(family, point)]
    if family.n <= limit:
        return range(family.n)
    return [transversal.nearest_disc(family, point)]


def subdivide(family, nu=None, on_unresolvable="error", max_depth=48):
    """Bisect each subdisc box into admissible pieces.

    ``on_unresolvable='drop'`` records boxes that never find a target
    instead of raising; the resulting partial table is a diagnostic object
    and downstream admissibility pruning reports what was removed.
    """
    sys = family.system
    step = _ChartStep(sys)
    if nu is None:
        nu = 0.99 * family.delta / (3.0 * sys.lip())
    b = family.b_halfwidth()
    ku, _, ks = sys.dims

    pieces = []
    by_disc = []
    dropped = []
    for i, disc in enumerate(family.discs):
        mine = []
        stack = [(tuple((-b, b) for _ in range(ku)),
                  tuple((-b, b) for _ in range(ks)), 0)]
        while stack:
            u_iv, s_iv, depth = stack.pop()
            wu, ws = _box_widths(u_iv, s_iv)
            small = (np.hypot(np.linalg.norm(wu), np.linalg.norm(ws)) < nu
                     and step.image_diam(wu, ws, True) < nu
                     and step.image_diam(wu, ws, False) < nu)
            fwd = bwd = None
            if small:
                mid_u = [0.5 * (lo + hi) for lo, hi in u_iv]
                mid_s = [0.5 * (lo + hi) for lo, hi in s_iv]
                base = transversal.chart_to_torus(sys, disc, mid_u, mid_s)
                fimg = systems.apply(sys, base)
                bimg = systems.apply_inverse(sys, base)
                for j in _target_candidates(family, fimg):
                    if _fits_in_saturation(sys, step, family, i, u_iv, s_iv, j, True):
                        fwd = j
                        break
                for k in _target_candidates(family, bimg):
                    if _fits_in_saturation(sys, step, family, i, u_iv, s_iv, k, False):
                        bwd = k
                        break
            if small and fwd is not None and bwd is not None:
                mid_u = np.array([0.5 * (lo + hi) for lo, hi in u_iv])
                mid_s = np.array([0.5 * (lo + hi) for lo, hi in s_iv])
                anchor = transversal.chart_to_torus(sys, disc, mid_u, mid_s)
                pieces.append(Piece(len(pieces), i, u_iv, s_iv,
                                    (mid_u, mid_s), anchor, fwd, bwd))
                mine.append(pieces[-1].index)
                continue
            if depth >= max_depth:
                if on_unresolvable == "drop":
                    dropped.append((i, u_iv, s_iv))
                    continue
                raise SubdivisionOverflow(
                    f"disc {i}: box {u_iv} x {s_iv} unresolved at depth {depth}")
            # bisect the widest axis
            widths = [hi - lo for lo, hi in u_iv] + [hi - lo for lo, hi in s_iv]
            ax = int(np.argmax(widths))
            if ax < ku:
                lo, hi = u_iv[ax]
                mid = 0.5 * (lo + hi)
                stack.append((u_iv[:ax] + ((lo, mid),) + u_iv[ax + 1:], s_iv, depth + 1))
                stack.append((u_iv[:ax] + ((mid, hi),) + u_iv[ax + 1:], s_iv, depth + 1))
            else:
                axs = ax - ku
                lo, hi = s_iv[axs]
                mid = 0.5 * (lo + hi)
                stack.append((u_iv, s_iv[:axs] + ((lo, mid),) + s_iv[axs + 1:], depth + 1))
                stack.append((u_iv, s_iv[:axs] + ((mid, hi),) + s_iv[axs + 1:], depth + 1))
        by_disc.append(mine)
    return SymbolTable(family, pieces, by_disc, nu, dropped)


def micro_table(family, piece_specs):
    """Assemble a table directly from (disc, u_iv, s_iv, fwd, bwd) tuples.

    Used for hand-built diagnostic configurations around invariant orbits,
    where the bisection cover is deliberately partial.
    """
    sys = family.system
    pieces = []
    by_disc = [[] for _ in family.discs]
    for (disc_i, u_iv, s_iv, fwd, bwd) in piece_specs:
        mid_u = np.array([0.5 * (lo + hi) for lo, hi in u_iv])
        mid_s = np.array([0.5 * (lo + hi) for lo, hi in s_iv])
        anchor = transversal.chart_to_torus(sys, family.discs[disc_i], mid_u, mid_s)
        p = Piece(len(pieces), disc_i, tuple(u_iv), tuple(s_iv),
                  (mid_u, mid_s), anchor, fwd, bwd)
        pieces.append(p)
        by_disc[disc_i].append(p.index)
    nu = max(np.hypot(np.linalg.norm(_box_widths(p.u_iv, p.s_iv)[0]),
                      np.linalg.norm(_box_widths(p.u_iv, p.s_iv)[1]))
             for p in pieces)
    return SymbolTable(family, pieces, by_disc, float(nu))


# ---------------------------------------------------------------------------
# transition structure

@dataclass
class TransitionMatrixA:
    table: SymbolTable
    targets: list          # per piece: sorted tuple of admissible target discs
    cond1: list            # per piece: tuple of discs admitted by rule (1)
    pruned: list = field(default_factory=list)

    def admissible_pair(self, a, b):
        return self.table.pieces[b].disc in self.targets[a]

    def admissible(self, seq):
        return all(self.admissible_pair(a, b) for a, b in zip(seq, seq[1:]))

    def successors(self, a):
        out = []
        for d in self.targets[a]:
            out.extend(self.table.pieces_of(d))
        return out

    def predecessors(self, b):
        disc = self.table.pieces[b].disc
        return [a.index for a in self.table.pieces if disc in self.targets[a.index]]

    def dense(self):
        n = self.table.n
        m = np.zeros((n, n), dtype=np.int8)
        for a in range(n):
            for b in self.successors(a):
                m[a, b] = 1
        return m

    def to_dot(self, max_nodes=400):
        n = self.table.n
        if n > max_nodes:
            raise DeadSymbol(f"refusing DOT export of {n} nodes (limit {max_nodes})")
        lines = ["digraph A {"]
        for p in self.table.pieces:
            lines.append(f'  n{p.index} [label="{p.disc}:{p.index}"];')
        for a in range(n):
            for b in self.successors(a):
                lines.append(f"  n{a} -> n{b};")
        lines.append("}")
        return "\n".join(lines)


def build_matrix_A(table, cond2_pitch=None, prune_dead=False):
    """Populate the admissible-target-disc sets by the two geometric rules.

    Rule (2) uses dense sampling of the candidate piece at the given pitch
    (default nu/8) through the backward projection, per the stated margin
    policy for images of open sets.
    """
    family = table.family
    sys = family.system
    step = _ChartStep(sys)
    if cond2_pitch is None:
        cond2_pitch = table.nu / 8.0

    n = table.n
    cond1 = [set() for _ in range(n)]
    cond2 = [set() for _ in range(n)]

    for p in table.pieces:
        base = transversal.chart_to_torus(
            sys, family.discs[p.disc],
            [0.5 * (lo + hi) for lo, hi in p.u_iv],
            [0.5 * (lo + hi) for lo, hi in p.s_iv])
        fimg = systems.apply(sys, base)
        cands = set(_target_candidates(family, fimg))
        cands.add(p.fwd)
        for j in cands:
            if _fits_in_saturation(sys, step, family, p.disc, p.u_iv, p.s_iv, j, True):
                cond1[p.index].add(j)

    # rule (2): walk each candidate target piece backward
    for q in table.pieces:
        disc_bwd = set()
        base = transversal.chart_to_torus(
            sys, family.discs[q.disc],
            [0.5 * (lo + hi) for lo, hi in q.u_iv],
            [0.5 * (lo + hi) for lo, hi in q.s_iv])
        bimg = systems.apply_inverse(sys, base)
        cands = set(_target_candidates(family, bimg))
        cands.add(q.bwd)
        for k in cands:
            if _fits_in_saturation(sys, step, family, q.disc, q.u_iv, q.s_iv, k, False):
                disc_bwd.add(k)
        if not disc_bwd:
            continue
        # sample the piece, pull back, project
        grids = []
        for lo, hi in list(q.u_iv) + list(q.s_iv):
            m = max(2, int(np.ceil((hi - lo) / cond2_pitch)))
            grids.append(np.linspace(lo + (hi - lo) / (2 * m), hi - (hi - lo) / (2 * m), m))
        mesh = np.meshgrid(*grids, indexing="ij")
        flat = np.stack([g.ravel() for g in mesh], axis=1)
        ku = len(q.u_iv)
        for k in disc_bwd:
            hit = set()
            for row in flat:
                z = transversal.chart_to_torus(sys, family.discs[q.disc], row[:ku], row[ku:])
                w = systems.apply_inverse(sys, z)
                try:
                    cu, cs = transversal.proj_disc_coords(family, k, w)
                except Exception:
                    continue
                idx = table.piece_containing(k, cu, cs, slack=EPS)
                if idx is not None:
                    hit.add(idx)
            for a in hit:
                cond2[a].add(q.disc)

    targets = [tuple(sorted(cond1[a] | cond2[a])) for a in range(n)]
    A = TransitionMatrixA(table, targets, [tuple(sorted(c)) for c in cond1])

    dead = _dead_symbols(A)
    if dead and not prune_dead:
        raise DeadSymbol(f"{len(dead)} symbols have an empty row or column: "
                         f"{sorted(dead)[:8]}...")
    while dead:
        A.pruned.extend(sorted(dead))
        _prune(A, dead)
        dead = _dead_symbols(A)
    return A


def _dead_symbols(A):
    table = A.table
    live = {p.index for p in table.pieces if p is not None}
    has_pred = set()
    dead = set()
    for a in live:
        succ = [b for b in A.successors(a) if b in live]
        if not succ:
            dead.add(a)
        for b in succ:
            has_pred.add(b)
    dead |= live - has_pred
    return dead


def _prune(A, dead):
    table = A.table
    for idx in dead:
        p = table.pieces[idx]
        table.by_disc[p.disc].remove(idx)
        table.pieces[idx] = None
    # recompute target discs that became empty
    for a, tg in enumerate(A.targets):
        if table.pieces[a] is None:
            A.targets[a] = ()
            continue
        A.targets[a] = tuple(d for d in tg if table.by_disc[d])


def live_pieces(table):
    return [p for p in table.pieces if p is not None]


# ---------------------------------------------------------------------------
# the coding map

def anchor_orbit(table, seq):
    return np.stack([table.pieces[a].anchor for a in seq])


def theta(family, table, A, seq, tol=1e-8, return_info=False):
    """Shadow the anchor pseudo-orbit of an admissible block and intersect
    the center plaque of its time-zero point with the containing disc."""
    sys = family.system
    seq = list(seq)
    if not A.admissible(seq):
        for a, b in zip(seq, seq[1:]):
            if not A.admissible_pair(a, b):
                raise NotAdmissible(f"pair ({a} -> {b}) not admissible")
    L = (len(seq) - 1) // 2
    pts = anchor_orbit(table, seq)
    po = PseudoOrbit(pts)
    cert = shadow(sys, po)
    mid = len(seq) // 2
    disc_i = table.pieces[seq[mid]].disc
    point = transversal.proj_disc(family, disc_i, cert.shadow.points[mid])
    rate = max(sys.lam_s, 1.0 / sys.lam_u)
    dlt = max(defect(sys, pts), 1e-300)
    err = 2.0 * cert.C * dlt * rate ** min(mid, len(seq) - 1 - mid) / (1.0 - rate)
    if err > tol:
        raise HorizonTooShort(f"truncation bound {err:.3g} above tol {tol:.3g}")
    if return_info:
        return point, {"error_bound": err, "C": cert.C, "defect": dlt,
                       "shadow_bound": cert.bound, "disc": disc_i}
    return point


def encode_point(family, table, A, x, L, start_disc=None, slack=1e-9):
    """Symbol block of a point by forward projections and backward pulls.

    Forward: x_{n+1} = proj onto the designated forward target of the
    current piece.  Backward: x_{-n-1} = proj of the preimage onto the
    designated backward target.  Raises ChoiceExhausted when a step lands
    outside every piece of the target disc.
    """
    sys = family.system
    x = torus.wrap(np.asarray(x, float))
    if start_disc is None:
        found = None
        for i in range(family.n):
            try:
                cu, cs = transversal.proj_disc_coords(family, i, x)
            except Exception:
                continue
            idx = table.piece_containing(i, cu, cs, slack)
            if idx is not None and np.allclose(
                    transversal.proj_disc(family, i, x), x, atol=1e-9):
                found = (i, idx)
                break
        if found is None:
            raise ChoiceExhausted("point lies in no piece")
        disc0, idx0 = found
    else:
        disc0 = start_disc
        cu, cs = transversal.proj_disc_coords(family, disc0, x)
        idx0 = table.piece_containing(disc0, cu, cs, slack)
        if idx0 is None:
            raise ChoiceExhausted("point lies in no piece of the start disc")

    fw = [idx0]
    xf = x
    for _ in range(L):
        p = table.pieces[fw[-1]]
        xf = transversal.proj_disc(family, p.fwd, systems.apply(sys, xf))
        cu, cs = transversal.chart_coords(sys, family.discs[p.fwd], xf)
        idx = table.piece_containing(p.fwd, cu, cs, slack)
        if idx is None:
            raise ChoiceExhausted(f"forward step leaves the pieces of disc {p.fwd}")
        fw.append(idx)
    bw = []
    xb = x
    cur = idx0
    for _ in range(L):
        p = table.pieces[cur]
        xb = transversal.proj_disc(family, p.bwd, systems.apply_inverse(sys, xb))
        cu, cs = transversal.chart_coords(sys, family.discs[p.bwd], xb)
        idx = table.piece_containing(p.bwd, cu, cs, slack)
        if idx is None:
            raise ChoiceExhausted(f"backward step leaves the pieces of disc {p.bwd}")
        bw.append(idx)
        cur = idx
    return bw[::-1] + fw


def bracket_sequences(a, b):
    """Future of a with the past of b; both blocks share their center index."""
    L = (len(a) - 1) // 2
    assert a[L] == b[L], "blocks must share the time-zero symbol"
    return list(b[:L]) + list(a[L:])


def check_bracket_preserving(family, table, A, a, b, tol=1e-8):
    """theta of the sequence bracket against the disc bracket of the values."""
    sys = family.system
    L = (len(a) - 1) // 2
    c = bracket_sequences(a, b)
    pa = theta(family, table, A, a)
    pb = theta(family, table, A, b)
    pc = theta(family, table, A, c)
    disc_i = table.pieces[a[L]].disc
    ref = table.pieces[a[L]].anchor_chart
    br = transversal.disc_bracket(family, disc_i, pa, pb, hint=ref)
    err = torus.dist(pc, br)
    return {"error": float(err), "ok": bool(err <= tol)}


def shift_compatibility(family, table, A, a, tol=1e-8, power=1):
    """Projected forward map of theta against theta of the shifted block."""
    sys = family.system
    L = (len(a) - 1) // 2
    x = theta(family, table, A, a)
    for n in range(1, power + 1):
        nxt_disc = table.pieces[a[L + n]].disc
        x = transversal.proj_disc(family, nxt_disc, systems.apply(sys, x))
    y = theta(family, table, A, a[power:])
    err = torus.dist(x, y)
    return {"error": float(err), "ok": bool(err <= tol)}


def random_admissible_block(A, rng, L, start=None):
    """Uniform random walk of length 2L+1 through the admissible pairs."""
    table = A.table
    live = [p.index for p in table.pieces if p is not None]
    preds = {b: [] for b in live}
    for a in live:
        for b in A.successors(a):
            if table.pieces[b] is not None:
                preds[b].append(a)
    cur = start if start is not None else int(rng.choice(live))
    fw = [cur]
    for _ in range(L):
        succ = [b for b in A.successors(fw[-1]) if table.pieces[b] is not None]
        if not succ:
            raise DeadSymbol(f"no successor for {fw[-1]}")
        fw.append(int(rng.choice(succ)))
    bw = [cur]
    for _ in range(L):
        pr = preds[bw[-1]]
        if not pr:
            raise DeadSymbol(f"no predecessor for {bw[-1]}")
        bw.append(int(rng.choice(pr)))
    return bw[1:][::-1] + fw
