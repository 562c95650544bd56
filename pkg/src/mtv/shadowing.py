"""Pseudo-orbits and the constructive shadowing solver.

For an affine system the shadowing correction is an explicit pair of
geometric series in the universal cover: stable defect components are
summed forward, unstable components backward, and center components are
left untouched so the output is central by construction.  Finite segments
are solved with zero boundary data; the truncation error relative to the
bi-infinite solution decays like max(lam_s, 1/lam_u)^(distance to the
segment end).
"""

from dataclasses import dataclass

import numpy as np

from . import systems, torus
from ._accel import njit
from .errors import DefectTooLarge, KindMismatch, NonConvergent

KINDS = ("plain", "central", "center-stable", "center-unstable")


@dataclass(frozen=True)
class PseudoOrbit:
    """A finite orbit-like sequence; index n runs over the rows of points."""

    points: np.ndarray  # (N, d) rows in [0,1)
    kind: str = "plain"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise KindMismatch(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, float)))

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class ShadowingCertificate:
    original: PseudoOrbit
    shadow: PseudoOrbit
    C: float
    bound: float                 # max_n d(x_n, y_n)
    distances: np.ndarray        # per-index d(x_n, y_n)
    residual: float              # hyperbolic part of the shadow's defect
    center_defect: float         # central plaque jumps of the shadow


def step_vectors(sys, points):
    """Defect vectors x_{n+1} - f(x_n) on nearest lifts, one row per step."""
    pts = np.atleast_2d(np.asarray(points, float))
    imgs = torus.wrap(pts[:-1] @ sys.matrix.T + sys.translation)
    return torus.centered_diff(imgs, pts[1:])


def defect(sys, points):
    """Largest step defect max_n d(f(x_n), x_{n+1})."""
    pts = np.atleast_2d(np.asarray(points, float))
    if pts.shape[0] < 2:
        raise ValueError("need at least two points")
    return float(np.linalg.norm(step_vectors(sys, pts), axis=1).max())


def shadowing_constant(sys, kappa=2.0):
    """Model shadowing constant C and admissible defect threshold delta0.

    C = kappa * max(1/(1-lam_s), lam_u/(lam_u-1)); the chart-distortion
    factor kappa (default 2) absorbs norm inflation when combining the
    stable and unstable series.  delta0 = r0 / (4C).
    """
    C = kappa * max(1.0 / (1.0 - sys.lam_s), sys.lam_u / (sys.lam_u - 1.0))
    return float(C), float(sys.r0 / (4.0 * C))


@njit
def _hyperbolic_corrections(vu, vs, mu_inv, ms):
    # vu, vs: (N-1, ku/ks) defect components; recursions with zero ends
    n1, ku = vu.shape
    ks = vs.shape[1]
    xu = np.zeros((n1 + 1, ku))
    xs = np.zeros((n1 + 1, ks))
    for n in range(n1 - 1, -1, -1):          # xu_n = Mu^{-1} (xu_{n+1} - vu_n)
        for i in range(ku):
            acc = 0.0
            for j in range(ku):
                acc += mu_inv[i, j] * (xu[n + 1, j] - vu[n, j])
            xu[n, i] = acc
    for n in range(n1):                      # xs_{n+1} = Ms xs_n + vs_n
        for i in range(ks):
            acc = vs[n, i]
            for j in range(ks):
                acc += ms[i, j] * xs[n, j]
            xs[n + 1, i] = acc
    return xu, xs


def _blocks(sys):
    Mu = sys.basis_u.T @ sys.matrix @ sys.basis_u
    Ms = sys.basis_s.T @ sys.matrix @ sys.basis_s
    return np.linalg.inv(Mu), Ms


def shadow(sys, po, kappa=2.0, residual_tol=1e-12):
    """Produce a central pseudo-orbit within C*delta of the input.

    The correction at index n is Bu@xu_n + Bs@xs_n where xu solves the
    unstable recursion backward and xs the stable one forward.  Center
    components of the defect are carried as plaque jumps of the output.
    """
    C, delta0 = shadowing_constant(sys, kappa)
    pts = po.points
    dlt = defect(sys, pts)
    if dlt > delta0 + 1e-15:
        raise DefectTooLarge(f"defect {dlt:.3g} exceeds delta0={delta0:.3g}")

    v = step_vectors(sys, pts)  # x_{n+1} - f(x_n)
    vu = np.ascontiguousarray(v @ sys.basis_u)
    vs = np.ascontiguousarray(v @ sys.basis_s)
    # frames are orthonormal per block; for the concrete systems the blocks
    # are mutually orthogonal so these are the exact components
    mu_inv, ms = _blocks(sys)
    xu, xs = _hyperbolic_corrections(vu, vs, np.ascontiguousarray(mu_inv),
                                     np.ascontiguousarray(ms))
    corr = xu @ sys.basis_u.T + xs @ sys.basis_s.T
    out = torus.wrap(pts + corr)

    dists = torus.dist_batch(pts, out)
    w = step_vectors(sys, out)
    wu = w @ sys.basis_u
    ws = w @ sys.basis_s
    residual = float(max(np.abs(wu).max(initial=0.0), np.abs(ws).max(initial=0.0)))
    if residual > max(residual_tol, 64 * np.finfo(float).eps * max(1.0, sys.lam_u) * len(pts)):
        raise NonConvergent(f"hyperbolic residual {residual:.3g} above tolerance")
    center_defect = float(np.linalg.norm(w @ sys.basis_c, axis=1).max()) if sys.dims[1] else 0.0

    cert = ShadowingCertificate(
        original=po,
        shadow=PseudoOrbit(out, kind="central"),
        C=C,
        bound=float(dists.max()),
        distances=dists,
        residual=residual,
        center_defect=center_defect,
    )
    return cert


def is_central(sys, po, delta, tol=1e-9):
    """True when every step defect is a center-plaque jump of size <= delta."""
    v = step_vectors(sys, po.points)
    hyp = np.hstack([v @ sys.basis_u, v @ sys.basis_s])
    if np.abs(hyp).max(initial=0.0) > tol:
        return False
    if sys.dims[1]:
        return bool(np.linalg.norm(v @ sys.basis_c, axis=1).max(initial=0.0) <= delta + tol)
    return bool(np.linalg.norm(v, axis=1).max(initial=0.0) <= tol)


def plaque_expansive_witness(sys, x_po, y_po, e, tol=1e-9):
    """Check x_0 in W^c(y_0; e) for two central e-pseudo-orbits that stay
    e-close; always true on plaque expansive systems, so a False return
    falsifies the configuration."""
    if x_po.kind != "central" or y_po.kind != "central":
        raise KindMismatch("both inputs must be central pseudo-orbits")
    if len(x_po) != len(y_po):
        raise KindMismatch("length mismatch")
    if not (is_central(sys, x_po, e, tol) and is_central(sys, y_po, e, tol)):
        raise KindMismatch("inputs are not central e-pseudo-orbits")
    if torus.dist_batch(x_po.points, y_po.points).max() > e + tol:
        raise KindMismatch("orbits are not e-close")
    diff = torus.centered_diff(y_po.points[0], x_po.points[0])
    cu, cc, cs = systems.split_coords(sys, diff)
    if max(np.abs(cu).max(initial=0.0), np.abs(cs).max(initial=0.0)) > tol:
        return False
    return bool(np.linalg.norm(cc) <= e + tol)


# ---------------------------------------------------------------------------
# batch drivers used by the verification suites

def random_pseudo_orbits(sys, rng, count, length, delta):
    """Orbit segments perturbed i.i.d. by up to delta at each step."""
    out = np.empty((count, length, sys.d))
    x0 = rng.random((count, sys.d))
    for b in range(count):
        x = x0[b]
        out[b, 0] = x
        for n in range(1, length):
            noise = rng.uniform(-1.0, 1.0, sys.d)
            nrm = np.linalg.norm(noise)
            if nrm > 0:
                noise *= rng.random() * delta / nrm
            x = torus.wrap(sys.matrix @ x + sys.translation + noise)
            out[b, n] = x
    return out


def shadow_batch(sys, orbits, kappa=2.0):
    """Shadow many pseudo-orbits; returns (bounds, residuals, defects)."""
    B = orbits.shape[0]
    bounds = np.empty(B)
    residuals = np.empty(B)
    defects = np.empty(B)
    for b in range(B):
        po = PseudoOrbit(orbits[b])
        defects[b] = defect(sys, orbits[b])
        cert = shadow(sys, po, kappa)
        bounds[b] = cert.bound
        residuals[b] = cert.residual
    return bounds, residuals, defects


def serialize_orbit(po):
    return {"kind": po.kind, "points": [[float(v) for v in row] for row in po.points]}


def serialize_certificate(cert):
    return {
        "C": cert.C,
        "bound": cert.bound,
        "residual": cert.residual,
        "center_defect": cert.center_defect,
        "distances": [float(v) for v in cert.distances],
        "original": serialize_orbit(cert.original),
        "shadow": serialize_orbit(cert.shadow),
    }
