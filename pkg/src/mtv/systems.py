"""Affine partially hyperbolic systems on the d-torus.

A system is x -> (L x + t) mod 1 with L an integer matrix of determinant
+-1 whose eigenvalue moduli split into an expanding block (> 1), a
contracting block (< 1) and a dominated central block in between.  The
invariant subspaces are computed once and carried as orthonormal frames;
for the concrete systems used here (symmetric planar blocks plus an
axis-aligned center) the frames are mutually orthogonal and all rates are
achieved exactly.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import torus
from .errors import DistanceTooLarge, NoIntersection, ParameterViolation

DEFAULT_R0 = 0.125


@dataclass(frozen=True)
class LeafPlaque:
    """An affine disc inside a leaf: base + (direction subspace ∩ ball)."""

    base: np.ndarray
    direction: str  # one of s, u, c, cs, cu
    radius: float


@dataclass(frozen=True)
class AffinePHSystem:
    matrix: np.ndarray
    translation: np.ndarray
    dims: tuple  # (u, c, s)
    basis_u: np.ndarray  # (d, u) orthonormal columns
    basis_c: np.ndarray  # (d, c)
    basis_s: np.ndarray  # (d, s)
    lam_u: float
    lam_s: float
    lam_c_lo: float
    lam_c_hi: float
    r0: float = DEFAULT_R0
    matrix_inv: np.ndarray = field(default=None, repr=False)
    basis_inv: np.ndarray = field(default=None, repr=False)

    @property
    def d(self):
        return self.matrix.shape[0]

    def basis(self, direction):
        blocks = {
            "u": (self.basis_u,),
            "c": (self.basis_c,),
            "s": (self.basis_s,),
            "cs": (self.basis_c, self.basis_s),
            "cu": (self.basis_c, self.basis_u),
            "us": (self.basis_u, self.basis_s),
        }
        return np.hstack(blocks[direction])

    def lip(self):
        """Lipschitz constant of the map (largest singular value of L)."""
        return float(np.linalg.norm(self.matrix, 2))

    def lip_center(self):
        """Lipschitz constant along center leaves."""
        return self.lam_c_hi


def _realify_eigvecs(vals, vecs):
    # integer hyperbolic-with-center matrices here have real spectrum;
    # tolerate tiny imaginary noise from the solver
    if np.iscomplexobj(vals):
        if np.abs(vals.imag).max() > 1e-10:
            raise ParameterViolation("complex eigenvalues: not an admissible linear part")
        vals = vals.real
        vecs = vecs.real
    return vals, vecs


def _orthonormal_block(vecs):
    q, _ = np.linalg.qr(vecs)
    # deterministic sign: first nonzero entry of each column positive
    for j in range(q.shape[1]):
        col = q[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        if nz.size and col[nz[0]] < 0:
            q[:, j] = -col
    return q


def make_system(matrix, translation=None, dims=None, r0=DEFAULT_R0):
    """Build a system from an integer matrix, checking the splitting.

    ``dims`` is (u, c, s); when omitted it is inferred from eigenvalue
    moduli using thresholds at 1.
    """
    L = np.asarray(matrix, dtype=float)
    d = L.shape[0]
    if translation is None:
        translation = np.zeros(d)
    t = torus.wrap(np.asarray(translation, dtype=float))
    det = np.linalg.det(L)
    if abs(abs(det) - 1.0) > 1e-9:
        raise ParameterViolation(f"determinant must be +-1, got {det}")
    if np.max(np.abs(L - np.round(L))) > 1e-12:
        raise ParameterViolation("linear part must be an integer matrix")

    vals, vecs = _realify_eigvecs(*np.linalg.eig(L))
    order = np.argsort(-np.abs(vals))  # descending modulus
    vals = vals[order]
    vecs = vecs[:, order]

    if dims is None:
        nu = int(np.sum(np.abs(vals) > 1.0 + 1e-9))
        ns = int(np.sum(np.abs(vals) < 1.0 - 1e-9))
        dims = (nu, d - nu - ns, ns)
    u, c, s = dims
    if u + c + s != d or u < 1 or s < 1 or c < 0:
        raise ParameterViolation(f"bad dims {dims} for d={d}")

    Bu = _orthonormal_block(vecs[:, :u])
    Bc = _orthonormal_block(vecs[:, u:u + c]) if c else np.zeros((d, 0))
    Bs = _orthonormal_block(vecs[:, u + c:])

    def block_rates(B):
        if B.shape[1] == 0:
            return 1.0, 1.0
        R = B.T @ L @ B
        sv = np.linalg.svd(R, compute_uv=False)
        return float(sv.min()), float(sv.max())

    lam_u, _ = block_rates(Bu)
    _, lam_s = block_rates(Bs)
    lam_c_lo, lam_c_hi = block_rates(Bc)

    if not (lam_s < 1.0 < lam_u):
        raise ParameterViolation(f"rates not hyperbolic: lam_s={lam_s}, lam_u={lam_u}")
    if c and not (lam_s < lam_c_lo - 1e-12 or np.isclose(lam_s, lam_c_lo)):
        if lam_c_lo <= lam_s:
            raise ParameterViolation("center block not dominated by the stable rate")
    if c and lam_c_hi >= lam_u:
        raise ParameterViolation("center block not dominated by the unstable rate")

    # bundle invariance of each block
    for B in (Bu, Bc, Bs):
        if B.shape[1]:
            img = L @ B
            res = img - B @ (B.T @ img)
            if np.abs(res).max() > 1e-9:
                raise ParameterViolation("splitting is not invariant under the linear part")

    Linv = np.linalg.inv(L)
    Linv = np.round(Linv)  # determinant +-1 integer matrix has integer inverse
    if np.abs(L @ Linv - np.eye(d)).max() > 1e-9:
        raise ParameterViolation("inverse is not integral")

    B = np.hstack([Bu, Bc, Bs])
    return AffinePHSystem(
        matrix=L, translation=t, dims=(u, c, s),
        basis_u=Bu, basis_c=Bc, basis_s=Bs,
        lam_u=lam_u, lam_s=lam_s, lam_c_lo=lam_c_lo, lam_c_hi=lam_c_hi,
        r0=float(r0), matrix_inv=Linv, basis_inv=np.linalg.inv(B),
    )


# ---------------------------------------------------------------------------
# built-in systems

def cat2(r0=DEFAULT_R0):
    """Planar hyperbolic automorphism [[2,1],[1,1]] with no center."""
    return make_system([[2, 1], [1, 1]], dims=(1, 0, 1), r0=r0)


def catid3(r0=DEFAULT_R0):
    """cat2 x identity on the 3-torus (vertical circles as center leaves)."""
    return make_system([[2, 1, 0], [1, 1, 0], [0, 0, 1]], dims=(1, 1, 1), r0=r0)


def skew3(alpha=0.41421356, r0=DEFAULT_R0):
    """cat2 x rotation by alpha along the center circle."""
    return make_system([[2, 1, 0], [1, 1, 0], [0, 0, 1]],
                       translation=[0.0, 0.0, alpha], dims=(1, 1, 1), r0=r0)


BUILTIN_SYSTEMS = {"cat2": cat2, "catid3": catid3, "skew3": skew3}


# ---------------------------------------------------------------------------
# dynamics

def apply(sys, x):
    """One step of the map, reduced to [0,1)^d."""
    return torus.wrap(sys.matrix @ torus.wrap(x) + sys.translation)


def apply_inverse(sys, x):
    return torus.wrap(sys.matrix_inv @ (torus.wrap(x) - sys.translation))


def apply_n(sys, x, n):
    f = apply if n >= 0 else apply_inverse
    for _ in range(abs(n)):
        x = f(sys, x)
    return x


def split_vector(sys, v):
    """Decompose a tangent vector as v_u + v_c + v_s."""
    v = np.asarray(v, dtype=float)
    coef = sys.basis_inv @ v
    u, c, s = sys.dims
    vu = sys.basis_u @ coef[:u]
    vc = sys.basis_c @ coef[u:u + c] if c else np.zeros_like(v)
    vs = sys.basis_s @ coef[u + c:]
    return vu, vc, vs


def split_coords(sys, v):
    """Coefficients of v in the (u, c, s) frames, as three arrays."""
    coef = sys.basis_inv @ np.asarray(v, dtype=float)
    u, c, s = sys.dims
    return coef[:u], coef[u:u + c], coef[u + c:]


def local_bracket(sys, x, y, r):
    """Center plaque carried by H_x^r ∩ V_y^r for nearby x, y.

    H is the unstable saturation of the center plaque of x, V the stable
    one of y.  For affine systems the incidence is a single linear solve
    on the nearest lift: the returned plaque is centered at z = x + ρ_u
    where ρ_u is the unstable component of y - x.
    """
    if r > sys.r0 + 1e-12:
        raise DistanceTooLarge(f"radius {r} exceeds r0={sys.r0}")
    diff = torus.centered_diff(x, y)
    if np.linalg.norm(diff) >= r:
        raise DistanceTooLarge(f"d(x,y)={np.linalg.norm(diff):.3g} >= r={r}")
    cu, cc, cs = split_coords(sys, diff)
    # plaque radii of H and V are 2r
    if np.linalg.norm(cu) > 2 * r or np.linalg.norm(cs) > 2 * r or np.linalg.norm(cc) > 2 * r:
        raise NoIntersection("affine solve leaves the prescribed plaque radii")
    z = torus.wrap(np.asarray(x, dtype=float) + sys.basis_u @ cu)
    return LeafPlaque(base=z, direction="c", radius=r)


def plaque_points(sys, plaque, params):
    """Points base + basis(direction) @ p for each row p of params."""
    B = sys.basis(plaque.direction)
    params = np.atleast_2d(np.asarray(params, dtype=float))
    return torus.wrap(plaque.base[None, :] + params @ B.T)


# ---------------------------------------------------------------------------
# serialization

def to_json_dict(sys):
    return {
        "matrix": [[int(round(v)) for v in row] for row in sys.matrix],
        "translation": [float(v) for v in sys.translation],
        "dims": {"u": sys.dims[0], "c": sys.dims[1], "s": sys.dims[2]},
        "r0": sys.r0,
    }


def from_json_dict(doc):
    dims = doc.get("dims")
    if isinstance(dims, dict):
        dims = (dims["u"], dims["c"], dims["s"])
    return make_system(doc["matrix"], doc.get("translation"), dims,
                       r0=doc.get("r0", DEFAULT_R0))


def load(path_or_name):
    """Resolve a built-in system name or a JSON file path."""
    if path_or_name in BUILTIN_SYSTEMS:
        return BUILTIN_SYSTEMS[path_or_name]()
    with open(path_or_name) as fh:
        return from_json_dict(json.load(fh))
