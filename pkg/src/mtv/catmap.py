"""Independent classical coding of the planar cat map [[2,1],[1,1]].

Self-contained reference implementation used only to cross-check the
generic pipeline: the golden-mean vertex shift codes the square root
automorphism F = [[1,1],[1,0]] through the arithmetic series over the
fundamental homoclinic point, and [[2,1],[1,1]] = F^2 is coded by the
two-letter blocks.  Nothing here touches the region or family machinery.
"""

import numpy as np

PHI = (1.0 + np.sqrt(5.0)) / 2.0
ALPHA = PHI - 1.0            # 1/phi
SQRT5 = np.sqrt(5.0)

F = np.array([[1, 1], [1, 0]], dtype=float)
CAT2 = F @ F                 # [[2,1],[1,1]]

# fundamental homoclinic point: unstable and stable lifts differing by (1,0)
H_UNSTABLE = np.array([PHI, 1.0]) / SQRT5
H_STABLE = np.array([-ALPHA, 1.0]) / SQRT5

# golden-mean shift: digits {0,1}, the block 11 forbidden
GOLDEN_MATRIX = np.array([[1, 1], [1, 0]], dtype=np.int8)

# two-letter blocks (states of the block presentation), lexicographic
BLOCKS = ((0, 0), (0, 1), (1, 0))
BLOCK_INDEX = {b: i for i, b in enumerate(BLOCKS)}


def block_transition_matrix(power=2):
    """0-1 transition matrix of the block presentation under sigma^power."""
    m = np.zeros((3, 3), dtype=np.int8)
    for i, (a0, a1) in enumerate(BLOCKS):
        for j, (b0, b1) in enumerate(BLOCKS):
            if power == 2:
                word = (a0, a1, b0, b1)
            else:
                if a1 != b0:
                    continue
                word = (a0, a1, b1)
            if all(not (x == 1 and y == 1) for x, y in zip(word, word[1:])):
                m[i, j] = 1
    return m


def is_golden(seq):
    return all(not (a == 1 and b == 1) for a, b in zip(seq, seq[1:]))


def random_golden(rng, length):
    out = np.zeros(length, dtype=int)
    prev = 0
    for i in range(length):
        out[i] = 0 if prev == 1 else int(rng.integers(0, 2))
        prev = out[i]
    return out


def code_point(digits, lo):
    """Point of the torus coded by golden digits placed at indices lo..

    x = sum over n of a_n * v_n (mod 1) with v_n the unstable lift of the
    homoclinic point pushed n steps back for n >= 1 and the stable lift
    pushed |n| steps forward for n <= 0.
    """
    x = np.zeros(2)
    for j, a in enumerate(digits):
        if not a:
            continue
        n = lo + j
        if n >= 1:
            x += PHI ** (-n) * H_UNSTABLE
        else:
            x += (-ALPHA) ** (-n) * H_STABLE
    return x % 1.0


def block_string(digits, lo):
    """Block letters at even positions: state_k = (a_{2k}, a_{2k+1})."""
    out = []
    hi = lo + len(digits) - 1
    k = int(np.ceil(lo / 2.0))
    while 2 * k + 1 <= hi:
        out.append(BLOCK_INDEX[(int(digits[2 * k - lo]), int(digits[2 * k + 1 - lo]))])
        k += 1
    return out


def itinerary(x, length):
    """Forward F-itinerary of a point in the two golden boxes.

    Box 0 is U in [0, phi), S in [-alpha, alpha^2); box 1 is U in [0, 1),
    S in [alpha^2, 1), where U = phi x1 + x2 and S = -alpha x1 + x2 are
    reduced modulo the golden lattice into the box union.
    """
    out = []
    p = np.asarray(x, float) % 1.0
    for _ in range(length):
        sym = _box_symbol(p)
        if sym is None:
            return None
        out.append(sym)
        p = (F @ p) % 1.0
    return out


def _box_symbol(p, tol=0.0):
    U = PHI * p[0] + p[1]
    S = -ALPHA * p[0] + p[1]
    est = np.linalg.solve(np.array([[PHI, 1.0], [-ALPHA, 1.0]]), np.array([U, S]))
    for m in range(int(np.floor(est[0])) - 2, int(np.floor(est[0])) + 3):
        for n in range(int(np.floor(est[1])) - 2, int(np.floor(est[1])) + 3):
            u = U - (m * PHI + n)
            s = S - (n - m * ALPHA)
            if 0.0 <= u < PHI and -ALPHA <= s < ALPHA * ALPHA:
                return 0
            if 0.0 <= u < 1.0 and ALPHA * ALPHA <= s < 1.0:
                return 1
    return None


def matrices_isomorphic(a, b):
    """Graph isomorphism by permutation search (intended for <= 10 nodes)."""
    import itertools
    a = np.asarray(a, dtype=np.int8)
    b = np.asarray(b, dtype=np.int8)
    if a.shape != b.shape:
        return None
    n = a.shape[0]
    for perm in itertools.permutations(range(n)):
        p = np.array(perm)
        if np.array_equal(a[np.ix_(p, p)], b):
            return tuple(perm)
    return None
