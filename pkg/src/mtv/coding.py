"""Rectangle subshift, coding maps, and the transversal pseudo-group.

The projected dynamics between rectangle charts is a diagonal affine map
per lattice branch; composed-map domains are therefore finite unions of
boxes tracked exactly.  The stable coding map collapses the expanding
coordinate through nested pullbacks of the itinerary rectangles, the
unstable one dually through the backward maps, and their intersection is
the coding point of a two-sided string.
"""

from dataclasses import dataclass, field

import numpy as np

from . import refinement, systems, torus, transversal
from .errors import NonConvergent, NotAdmissible, NotAllowed
from .regions import EPS

_SPLIT_TOL = 1e-9
_MAX_SPLIT = 80


@dataclass
class MatrixS:
    matrix: np.ndarray          # 0-1 over rectangle indices
    margins: dict = field(default_factory=dict)

    @property
    def s(self):
        return self.matrix.shape[0]

    def admissible(self, string):
        return all(self.matrix[a, b] for a, b in zip(string, string[1:]))

    def to_dot(self):
        lines = ["digraph S {"]
        for mu in range(self.s):
            lines.append(f'  r{mu} [label="R{mu}"];')
        for mu in range(self.s):
            for nu in np.nonzero(self.matrix[mu])[0]:
                lines.append(f"  r{mu} -> r{int(nu)};")
        lines.append("}")
        return "\n".join(lines)

    def to_json(self):
        return {"matrix": self.matrix.astype(int).tolist(),
                "margins": {f"{k[0]}->{k[1]}": float(v)
                            for k, v in self.margins.items()}}


def build_matrix_S(mf, rng, samples=256):
    """Interior-intersection tests of the projected images.

    S[mu, nu] = 1 when nu sits on an allowed future disc of mu and the
    image of the interior meets the interior of nu; the recorded margin is
    the greatest boundary clearance seen among the hits.
    """
    sys = mf.system
    m = np.zeros((mf.s, mf.s), dtype=np.int8)
    margins = {}
    for mu, r in enumerate(mf.rects):
        for i2 in mf.af[mu]:
            pu, ps = r.carrier.sample(rng, samples, interior_margin=1e-9)
            for k in range(samples):
                x = mf.point_of(mu, pu[k], ps[k])
                y = transversal.proj_disc(mf.family, i2, systems.apply(sys, x))
                for nu_, cu, cs in mf.locate(i2, y, interior=True):
                    m[mu, nu_] = 1
                    clear = _boundary_clearance(mf.rects[nu_].carrier, cu, cs)
                    key = (mu, nu_)
                    margins[key] = max(margins.get(key, 0.0), clear)
    return MatrixS(m, margins)


def _boundary_clearance(carrier, cu, cs):
    best = np.inf
    for box in carrier.u_part.boxes:
        for iv, x in zip(box, np.atleast_1d(cu)):
            best = min(best, x - iv.lo, iv.hi - x)
    for box in carrier.s_part.boxes:
        for iv, x in zip(box, np.atleast_1d(cs)):
            best = min(best, x - iv.lo, iv.hi - x)
    return float(max(best, 0.0))


def random_string(S, rng, L, start=None):
    """Two-sided admissible string of length 2L+1 (indices -L..L)."""
    m = S.matrix
    rows = [int(v) for v in np.nonzero(m.sum(axis=1))[0]]
    cur = start if start is not None else int(rng.choice(rows))
    fw = [cur]
    for _ in range(L):
        succ = np.nonzero(m[fw[-1]])[0]
        if not succ.size:
            raise NotAdmissible(f"rectangle {fw[-1]} has no successor")
        fw.append(int(rng.choice(succ)))
    bw = [cur]
    for _ in range(L):
        pred = np.nonzero(m[:, bw[-1]])[0]
        if not pred.size:
            raise NotAdmissible(f"rectangle {bw[-1]} has no predecessor")
        bw.append(int(rng.choice(pred)))
    return bw[1:][::-1] + fw


# ---------------------------------------------------------------------------
# exact branch-split stepping of boxes through the projected dynamics

def _future_disc(mf, mu, nu_):
    i2 = mf.rects[nu_].disc
    if i2 not in mf.af[mu]:
        raise NotAllowed(f"disc {i2} not an allowed future of rectangle {mu}")
    return i2


class _StepCache:
    """Plain-float chart stepping for systems with one-dimensional
    hyperbolic blocks.  Center-plaque projection never moves the (u, s)
    coordinates, so the projected step reduces to the ambient map plus a
    nearest-lift read-off against the target rectangle anchor."""

    def __init__(self, mf):
        sys = mf.system
        self.ok = sys.dims[0] == 1 and sys.dims[2] == 1
        if not self.ok:
            return
        self.M = sys.matrix
        self.Minv = sys.matrix_inv
        self.t = sys.translation
        self.Bu = sys.basis_u[:, 0]
        self.Bs = sys.basis_s[:, 0]
        self.row_u = sys.basis_inv[0]
        self.row_s = sys.basis_inv[sys.dims[0] + sys.dims[1]]
        self.anchor = np.stack([r.anchor for r in mf.rects])
        self.au = np.array([float(np.atleast_1d(r.anchor_chart[0])[0])
                            for r in mf.rects])
        self.as_ = np.array([float(np.atleast_1d(r.anchor_chart[1])[0])
                             for r in mf.rects])
        hull = []
        for r in mf.rects:
            ulo, uhi = r.carrier.u_part.extent(0)
            slo, shi = r.carrier.s_part.extent(0)
            hull.append((ulo, uhi, slo, shi))
        self.hull = np.array(hull)
        offs = []
        for k in torus.integer_offsets(sys.d, 1):
            if not np.any(k):
                continue
            if sys.dims[1] and abs(float(sys.basis_inv[1] @ k)) > 1e-9:
                continue
            offs.append((float(self.row_u @ k), float(self.row_s @ k)))
        self.offs = offs

    def step(self, src, dst, u, s, forward):
        x = self.anchor[src] + (u - self.au[src]) * self.Bu \
            + (s - self.as_[src]) * self.Bs
        if forward:
            x = self.M @ x + self.t
        else:
            x = self.Minv @ (x - self.t)
        w = x - self.anchor[dst]
        w -= np.round(w)
        cu = self.au[dst] + float(self.row_u @ w)
        cs = self.as_[dst] + float(self.row_s @ w)
        h = self.hull[dst]
        if not (h[0] - 1e-9 <= cu <= h[1] + 1e-9
                and h[2] - 1e-9 <= cs <= h[3] + 1e-9):
            for du, ds in self.offs:
                if (h[0] - 1e-9 <= cu + du <= h[1] + 1e-9
                        and h[2] - 1e-9 <= cs + ds <= h[3] + 1e-9):
                    cu += du
                    cs += ds
                    break
        return cu, cs


def _step_cache(mf):
    cache = getattr(mf, "_coding_step_cache", None)
    if cache is None:
        cache = _StepCache(mf)
        mf._coding_step_cache = cache
    return cache


def _point_step_f(mf, mu, nu_, u, s, forward=True):
    """Pointwise projected step between rectangle charts, scalar in/out."""
    cache = _step_cache(mf)
    if cache.ok:
        src, dst = (mu, nu_) if forward else (nu_, mu)
        return cache.step(src, dst, float(u), float(s), forward)
    sys = mf.system
    x = (mf.point_of(mu, [u], [s]) if forward else mf.point_of(nu_, [u], [s]))
    if forward:
        i2 = mf.rects[nu_].disc
        y = transversal.proj_disc(mf.family, i2, systems.apply(sys, x))
        cu, cs = mf.rect_coords(nu_, y)
    else:
        k = mf.rects[mu].disc
        y = transversal.proj_disc(mf.family, k, systems.apply_inverse(sys, x))
        cu, cs = mf.rect_coords(mu, y)
    return float(cu[0]), float(cs[0])


def _point_step(mf, mu, nu_, cu, cs, forward=True):
    """True pointwise projected step between rectangle charts."""
    u2, s2 = _point_step_f(mf, mu, nu_, float(np.atleast_1d(cu)[0]),
                           float(np.atleast_1d(cs)[0]), forward)
    return np.array([u2]), np.array([s2])


def _bisect_branch(fit_at, lo, hi, lo_fits, iters=60):
    """Locate a branch discontinuity of the step map on [lo, hi] given
    that exactly one endpoint matches the midpoint-anchored affine."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if fit_at(mid) == lo_fits:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class _Entry:
    """A branch piece of a composed-map domain.

    Bounds are kept in the base-rectangle chart; (au, bu, as_, bs) map
    base coordinates to the current rectangle chart.
    """

    __slots__ = ("u_lo", "u_hi", "s_lo", "s_hi", "au", "bu", "as_", "bs")

    def __init__(self, u_lo, u_hi, s_lo, s_hi, au=1.0, bu=0.0, as_=1.0, bs=0.0):
        self.u_lo, self.u_hi = u_lo, u_hi
        self.s_lo, self.s_hi = s_lo, s_hi
        self.au, self.bu, self.as_, self.bs = au, bu, as_, bs

    def cur_bounds(self):
        u = sorted((self.au * self.u_lo + self.bu, self.au * self.u_hi + self.bu))
        s = sorted((self.as_ * self.s_lo + self.bs, self.as_ * self.s_hi + self.bs))
        return u[0], u[1], s[0], s[1]

    def is_empty(self):
        return self.u_hi - self.u_lo <= -EPS or self.s_hi - self.s_lo <= -EPS


def _step_entries(mf, entries, mu, nu_, forward=True):
    """Advance domain pieces one projected step, splitting on branches."""
    lam_u = float((mf.system.basis_u.T @ mf.system.matrix @ mf.system.basis_u)[0, 0])
    lam_s = float((mf.system.basis_s.T @ mf.system.matrix @ mf.system.basis_s)[0, 0])
    if not forward:
        lam_u, lam_s = 1.0 / lam_u, 1.0 / lam_s
    tgt = mf.rects[nu_].carrier if forward else mf.rects[mu].carrier
    t_ulo, t_uhi = tgt.u_part.extent(0)
    t_slo, t_shi = tgt.s_part.extent(0)

    out = []
    stack = [(e, 0) for e in entries]
    while stack:
        e, depth = stack.pop()
        if e.is_empty():
            continue
        culo, cuhi, cslo, cshi = e.cur_bounds()
        um, sm = 0.5 * (culo + cuhi), 0.5 * (cslo + cshi)
        pm = _point_step_f(mf, mu, nu_, um, sm, forward)
        # affine prediction anchored at the midpoint
        au2, as2 = e.au * lam_u, e.as_ * lam_s
        off_u = pm[0] - lam_u * um
        off_s = pm[1] - lam_s * sm

        def fits(cu_c, cs_c):
            pu, ps = _point_step_f(mf, mu, nu_, cu_c, cs_c, forward)
            return (abs(pu - (lam_u * cu_c + off_u)) <= _SPLIT_TOL
                    and abs(ps - (lam_s * cs_c + off_s)) <= _SPLIT_TOL)

        f00 = fits(culo, cslo)
        f01 = fits(culo, cshi)
        f11 = fits(cuhi, cshi)
        if not (f00 and f01 and f11):
            # a lattice-branch line crosses the piece; the corner pattern
            # says along which axis, and a scalar bisection against the
            # midpoint-anchored prediction locates it; split exactly there
            span_u = e.u_hi - e.u_lo
            span_s = e.s_hi - e.s_lo
            split = None
            if f00 != f01 and span_s > 1e-13:
                # flip somewhere on the left edge between the two corners
                cross = _bisect_branch(lambda s_: fits(culo, s_), cslo, cshi, f00)
                base = (cross - e.bs) / e.as_
                if e.s_lo + 1e-15 < base < e.s_hi - 1e-15:
                    split = ("s", base)
            if split is None and f01 != f11 and span_u > 1e-13:
                cross = _bisect_branch(lambda u_: fits(u_, cshi), culo, cuhi, f01)
                base = (cross - e.bu) / e.au
                if e.u_lo + 1e-15 < base < e.u_hi - 1e-15:
                    split = ("u", base)
            if split is None:
                if span_u >= span_s and span_u > 1e-13:
                    split = ("u", 0.5 * (e.u_lo + e.u_hi))
                elif span_s > 1e-13:
                    split = ("s", 0.5 * (e.s_lo + e.s_hi))
            if split is not None and depth < _MAX_SPLIT:
                axis, at = split
                if axis == "u":
                    parts = (_Entry(e.u_lo, at, e.s_lo, e.s_hi,
                                    e.au, e.bu, e.as_, e.bs),
                             _Entry(at, e.u_hi, e.s_lo, e.s_hi,
                                    e.au, e.bu, e.as_, e.bs))
                else:
                    parts = (_Entry(e.u_lo, e.u_hi, e.s_lo, at,
                                    e.au, e.bu, e.as_, e.bs),
                             _Entry(e.u_lo, e.u_hi, at, e.s_hi,
                                    e.au, e.bu, e.as_, e.bs))
                stack.append((parts[0], depth + 1))
                stack.append((parts[1], depth + 1))
                continue
            # fall through with the midpoint branch (sub-resolution piece)
        bu2 = e.bu * lam_u + off_u
        bs2 = e.bs * lam_s + off_s
        # clip to the target rectangle hull in current coordinates; a piece
        # whose clipped width in some factor is a zero sliver of a genuinely
        # wider image is a boundary-only branch and is dropped, while an
        # uncut factor may be arbitrarily thin (honest contraction)
        iu_w = lam_u * (cuhi - culo)
        is_w = lam_s * (cshi - cslo)
        nu_lo = max(lam_u * culo + off_u, t_ulo)
        nu_hi = min(lam_u * cuhi + off_u, t_uhi)
        ns_lo = max(lam_s * cslo + off_s, t_slo)
        ns_hi = min(lam_s * cshi + off_s, t_shi)
        nu_w = nu_hi - nu_lo
        ns_w = ns_hi - ns_lo
        if nu_w < -EPS or ns_w < -EPS:
            continue
        if nu_w <= EPS and nu_w < iu_w - EPS:
            continue
        if ns_w <= EPS and ns_w < is_w - EPS:
            continue
        b_ulo, b_uhi = sorted(((nu_lo - bu2) / au2, (nu_hi - bu2) / au2))
        b_slo, b_shi = sorted(((ns_lo - bs2) / as2, (ns_hi - bs2) / as2))
        ne = _Entry(max(b_ulo, e.u_lo), min(b_uhi, e.u_hi),
                    max(b_slo, e.s_lo), min(b_shi, e.s_hi),
                    au2, bu2, as2, bs2)
        if not ne.is_empty():
            out.append(ne)
    return _merge_entries(out)


def _merge_entries(entries):
    """Fuse branch pieces contiguous in one factor whose affine data agree
    in BOTH factors; fusing across different branches would corrupt the
    base-to-current correspondence, so those stay separate."""
    def fuse(items, primary):
        def affkey(e):
            return (round(e.au, 9), round(e.bu, 9), round(e.as_, 9), round(e.bs, 9))
        if primary == "s":
            items.sort(key=lambda e: affkey(e) + (round(e.u_lo, 11),
                                                  round(e.u_hi, 11), e.s_lo))
        else:
            items.sort(key=lambda e: affkey(e) + (round(e.s_lo, 11),
                                                  round(e.s_hi, 11), e.u_lo))
        out = []
        for e in items:
            if out:
                p = out[-1]
                same_aff = (abs(p.au - e.au) < 1e-9 and abs(p.bu - e.bu) < 1e-9
                            and abs(p.as_ - e.as_) < 1e-9 and abs(p.bs - e.bs) < 1e-9)
                if primary == "s":
                    if (same_aff and abs(p.u_lo - e.u_lo) < 1e-11
                            and abs(p.u_hi - e.u_hi) < 1e-11
                            and e.s_lo <= p.s_hi + 1e-11):
                        p.s_hi = max(p.s_hi, e.s_hi)
                        continue
                else:
                    if (same_aff and abs(p.s_lo - e.s_lo) < 1e-11
                            and abs(p.s_hi - e.s_hi) < 1e-11
                            and e.u_lo <= p.u_hi + 1e-11):
                        p.u_hi = max(p.u_hi, e.u_hi)
                        continue
            out.append(e)
        return out

    out = fuse(fuse(list(entries), "s"), "u")
    if len(out) > 1024:
        raise NonConvergent(f"composed-domain branch population {len(out)} "
                            f"exceeds the bound")
    return out


@dataclass
class FiberDescriptor:
    """A stable or unstable fiber of a rectangle, with convergence data."""

    rect: int
    kind: str                    # "stable" | "unstable"
    coordinate: float            # collapsed u (stable) or s (unstable) value
    width: float                 # residual width of the collapsed factor
    diam_history: list           # collapsed-factor hull width per step
    converged: bool


def h_stable(mf, S, string, tol=1e-9, stop_width=1e-13):
    """Nested pullback of a forward itinerary; collapses the u-factor.

    Iteration stops early once the hull width falls below ``stop_width``
    (machine-noise floor): later constraints can only shrink it further.
    """
    if not S.admissible(string):
        raise NotAdmissible("string is not admissible")
    r0 = mf.rects[string[0]].carrier
    ulo, uhi = r0.u_part.extent(0)
    slo, shi = r0.s_part.extent(0)
    entries = [_Entry(ulo, uhi, slo, shi)]
    hist = [uhi - ulo]
    for k in range(len(string) - 1):
        _future_disc(mf, string[k], string[k + 1])
        entries = _step_entries(mf, entries, string[k], string[k + 1], forward=True)
        if not entries:
            raise NotAdmissible(f"empty composed domain at step {k + 1}")
        hist.append(max(e.u_hi for e in entries) - min(e.u_lo for e in entries))
        if hist[-1] <= stop_width:
            break
    lo = min(e.u_lo for e in entries)
    hi = max(e.u_hi for e in entries)
    return FiberDescriptor(string[0], "stable", 0.5 * (lo + hi), hi - lo,
                           hist, hi - lo <= tol)


def h_unstable(mf, S, string, tol=1e-9, stop_width=1e-13):
    """Nested pullback of a backward itinerary; collapses the s-factor.

    ``string`` is indexed -n..0; admissibility reads forward.
    """
    if not S.admissible(string):
        raise NotAdmissible("string is not admissible")
    r0 = mf.rects[string[-1]].carrier
    ulo, uhi = r0.u_part.extent(0)
    slo, shi = r0.s_part.extent(0)
    entries = [_Entry(ulo, uhi, slo, shi)]
    hist = [shi - slo]
    for k in range(len(string) - 1):
        mu = string[-1 - k]          # current rectangle
        prev = string[-2 - k]        # rectangle one step into the past
        if mf.rects[prev].disc not in mf.pasts[mu]:
            raise NotAllowed(f"disc {mf.rects[prev].disc} not an allowed past "
                             f"of rectangle {mu}")
        entries = _step_entries(mf, entries, prev, mu, forward=False)
        if not entries:
            raise NotAdmissible(f"empty composed domain {k + 1} steps back")
        hist.append(max(e.s_hi for e in entries) - min(e.s_lo for e in entries))
        if hist[-1] <= stop_width:
            break
    lo = min(e.s_lo for e in entries)
    hi = max(e.s_hi for e in entries)
    return FiberDescriptor(string[-1], "unstable", 0.5 * (lo + hi), hi - lo,
                           hist, hi - lo <= tol)


def h_point(mf, S, string, return_fibers=False):
    """Coding point of a two-sided string (odd length, centered)."""
    L = (len(string) - 1) // 2
    fs = h_stable(mf, S, string[L:])
    fu = h_unstable(mf, S, string[:L + 1])
    pt = mf.point_of(string[L], np.array([fs.coordinate]), np.array([fu.coordinate]))
    if return_fibers:
        return pt, fs, fu
    return pt


def encode_surjective(mf, S, rng, x, L, interior_slack=0.0):
    """Itinerary of a transversal point under the projected dynamics."""
    sys = mf.system
    hits = []
    for i in range(mf.family.n):
        hits.extend(m for m, _, _ in mf.locate(i, x))
    if not hits:
        raise NotAdmissible("point lies in no rectangle")
    cur = hits[0]
    fw = [cur]
    y = x
    for _ in range(L):
        nxt = None
        for i2 in mf.af[fw[-1]]:
            z = transversal.proj_disc(mf.family, i2, systems.apply(sys, y))
            located = mf.locate(i2, z)
            for m, _, _ in located:
                if S.matrix[fw[-1], m]:
                    nxt = (m, z)
                    break
            if nxt:
                break
        if nxt is None:
            raise NotAdmissible("forward itinerary left the rectangles")
        fw.append(nxt[0])
        y = nxt[1]
    bw = [cur]
    y = x
    for _ in range(L):
        prv = None
        for k in mf.pasts[bw[-1]]:
            z = transversal.proj_disc(mf.family, k, systems.apply_inverse(sys, y))
            for m, _, _ in mf.locate(k, z):
                if S.matrix[m, bw[-1]]:
                    prv = (m, z)
                    break
            if prv:
                break
        if prv is None:
            raise NotAdmissible("backward itinerary left the rectangles")
        bw.append(prv[0])
        y = prv[1]
    return bw[1:][::-1] + fw


# ---------------------------------------------------------------------------
# pseudo-group of the projected dynamics

@dataclass
class PseudoGroupElement:
    """A word in the generating projected maps with its exact domain."""

    mf: object
    word: tuple   # entries ("+", mu, nu) or ("-", mu, nu): nu follows mu

    def apply(self, x):
        sys = self.mf.system
        for sign, mu, nu_ in self.word:
            if sign == "+":
                i2 = _future_disc(self.mf, mu, nu_)
                x = transversal.proj_disc(self.mf.family, i2, systems.apply(sys, x))
            else:
                k = self.mf.rects[mu].disc
                if k not in self.mf.pasts[nu_]:
                    raise NotAllowed(f"disc {k} not an allowed past of {nu_}")
                x = transversal.proj_disc(self.mf.family, k,
                                          systems.apply_inverse(sys, x))
        return x

    def inverse(self):
        # the inverse of ("+", mu, nu) is ("-", mu, nu): backward from nu to mu
        return PseudoGroupElement(self.mf, tuple(
            ("-", mu, nu_) if sign == "+" else ("+", mu, nu_)
            for sign, mu, nu_ in reversed(self.word)))

    def compose(self, other):
        """self after other."""
        return PseudoGroupElement(self.mf, tuple(other.word) + tuple(self.word))


def identity_element(mf):
    return PseudoGroupElement(mf, ())


def generator(mf, mu, nu_, forward=True):
    return PseudoGroupElement(mf, (("+" if forward else "-", mu, nu_),))


# ---------------------------------------------------------------------------
# verification

def verify_semiconjugacy(mf, S, rng, n_strings=200, L=40, tol=1e-8,
                         surj_samples=200, surj_tol=1e-6, envelope_ns=(1, 2, 4, 8, 16)):
    """Equivariance, surjectivity, and a continuity envelope for h."""
    sys = mf.system
    report = {"tol": tol, "L": L}

    errs = []
    for _ in range(n_strings):
        a = random_string(S, rng, L)
        x = h_point(mf, S, a)
        y = h_point(mf, S, a[1:-1])
        i2 = mf.rects[a[L + 1]].disc
        fx = transversal.proj_disc(mf.family, i2, systems.apply(sys, x))
        errs.append(torus.dist(fx, y))
    report["equivariance_max_err"] = float(np.max(errs))
    report["equivariance_ok"] = bool(np.max(errs) <= tol)

    serrs = []
    failures = 0
    for _ in range(surj_samples):
        mu = int(rng.integers(mf.s))
        pu, ps = mf.rects[mu].carrier.sample(rng, 1, interior_margin=1e-6)
        x = mf.point_of(mu, pu[0], ps[0])
        try:
            string = encode_surjective(mf, S, rng, x, L)
            xx = h_point(mf, S, string)
            serrs.append(torus.dist(x, xx))
        except NotAdmissible:
            failures += 1
    report["surjectivity_max_err"] = float(np.max(serrs)) if serrs else np.inf
    report["surjectivity_failures"] = failures
    report["surjectivity_ok"] = bool(serrs and np.max(serrs) <= surj_tol
                                     and failures == 0)

    env = {}
    for n in envelope_ns:
        if n >= L:
            continue
        worst = 0.0
        for _ in range(max(20, n_strings // 10)):
            a = random_string(S, rng, L)
            b = _resample_tails(S, rng, a, L, n)
            worst = max(worst, torus.dist(h_point(mf, S, a), h_point(mf, S, b)))
        env[n] = float(worst)
    report["envelope"] = env
    ns = sorted(k for k, v in env.items() if v > 1e-14)
    if len(ns) >= 2:
        xs = np.array(ns, float)
        ys = np.log([env[k] for k in ns])
        slope = np.polyfit(xs, ys, 1)[0]
        report["envelope_rate"] = float(np.exp(slope))
    report["ok"] = bool(report["equivariance_ok"] and report["surjectivity_ok"])
    return report


def _resample_tails(S, rng, a, L, n):
    """A string agreeing with a on [-n, n], tails redrawn admissibly."""
    m = S.matrix
    out = list(a[L - n:L + n + 1])
    for _ in range(L - n):
        succ = np.nonzero(m[out[-1]])[0]
        out.append(int(rng.choice(succ)))
        pred = np.nonzero(m[:, out[0]])[0]
        out.insert(0, int(rng.choice(pred)))
    return out
