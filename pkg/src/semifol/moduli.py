"""Surface-group embeddings into PSL3(R) via cocycles.

The subgroup of PSL3(R) stabilizing the line {y = 0} consists of matrices

    [ a11  a12  a13 ]
    [  0    1    0  ]
    [ a31  a32  a33 ]

whose restriction to the line is the Moebius map x -> (a11 x + a13)/(a31 x + a33).
Extending a Fuchsian group G0 < PSL2(R) to PSL3(R) therefore amounts to
choosing the column (a12, a32) for each generator so that the group relation
still holds; that data transforms as a cocycle c(gh) = c(g) + A(g) c(h), and
conjugating by the unipotent matrices with column t acts on cocycles by
c -> c + (I - A) t (the coboundaries).  The model foliation by lines with
real parameters is invariant under every real matrix of this shape, which is
what invariance_residual measures sample-wise.

The genus-2 generator fixture is the regular hyperbolic octagon (vertex angle
pi/4) with opposite sides paired by translations through the center; the
verified relation word is g1 g2^-1 g3 g4^-1 g1^-1 g2 g3^-1 g4.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (DomainError, InconsistentCocycleError,
                     PointAtInfinityError)
from .jets import CPoint

_DEF_TOL = 1e-8


def _cbrt(x):
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


@dataclass(frozen=True)
class Mobius2:
    """A real Moebius transformation, det-1 normalized, defined up to sign."""

    m: np.ndarray = field(repr=False)

    def __init__(self, m):
        m = np.array(m, dtype=float).reshape(2, 2)
        det = float(np.linalg.det(m))
        if det <= 0:
            raise ValueError(f"Moebius matrix must have positive determinant, got {det}")
        m = m / math.sqrt(det)
        if np.trace(m) < 0 or (np.trace(m) == 0 and m[0, 0] < 0):
            m = -m
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls):
        return cls(np.eye(2))

    @classmethod
    def hyperbolic(cls, lam):
        return cls(np.diag([float(lam), 1.0 / float(lam)]))

    def inverse(self):
        a, b, c, d = self.m.ravel()
        return Mobius2(np.array([[d, -b], [-c, a]]))

    def compose(self, other):
        return Mobius2(self.m @ other.m)

    def apply(self, x):
        a, b, c, d = self.m.ravel()
        den = c * x + d
        if abs(den) < 1e-300:
            raise PointAtInfinityError(f"Moebius map sends {x} to infinity")
        return (a * x + b) / den


@dataclass(frozen=True)
class ProjMat3:
    """A real 3x3 projective matrix, normalized to determinant 1 by the real
    cube root (the det-1 representative of a PSL3(R) class is unique)."""

    m: np.ndarray = field(repr=False)

    def __init__(self, m):
        m = np.array(m, dtype=float).reshape(3, 3)
        det = float(np.linalg.det(m))
        if abs(det) < 1e-300:
            raise ValueError("projective matrix must be invertible")
        m = m / _cbrt(det)
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls):
        return cls(np.eye(3))

    def inverse(self):
        return ProjMat3(np.linalg.inv(self.m))

    def compose(self, other):
        return ProjMat3(self.m @ other.m)


@dataclass(frozen=True)
class Presentation:
    """A finitely presented group on 2g generators with one relation word.

    The word is a tuple of nonzero integers: +k for generator k (1-based),
    -k for its inverse.  The default relation is the product of g commutators.
    """

    n_generators: int
    word: tuple

    def __init__(self, n_generators, word=None):
        if n_generators < 2 or n_generators % 2:
            raise ValueError("generator count must be even and at least 2")
        if word is None:
            word = commutator_word(n_generators // 2)
        word = tuple(int(w) for w in word)
        if not word or any(w == 0 or abs(w) > n_generators for w in word):
            raise ValueError("relation word must be nonempty over the generators")
        object.__setattr__(self, "n_generators", n_generators)
        object.__setattr__(self, "word", word)


def commutator_word(genus):
    """[a1, b1][a2, b2]...[ag, bg] over generators a1, b1, ..., ag, bg."""
    word = []
    for k in range(genus):
        a, b = 2 * k + 1, 2 * k + 2
        word += [a, b, -a, -b]
    return tuple(word)


@dataclass(frozen=True)
class Cocycle:
    """Generator index -> (a12, a32) in R^2; validity is the relation residual."""

    values: np.ndarray = field(repr=False)

    def __init__(self, values):
        v = np.array(values, dtype=float).reshape(-1, 2)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((n, 2)))

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return len(self.values)


def embed(m, c):
    """Extend a Moebius map to the line stabilizer in PSL3(R) with the
    cocycle column c = (a12, a32)."""
    a = m.m if isinstance(m, Mobius2) else np.asarray(m, dtype=float)
    c = np.asarray(c, dtype=float).reshape(2)
    return ProjMat3(np.array([
        [a[0, 0], c[0], a[0, 1]],
        [0.0, 1.0, 0.0],
        [a[1, 0], c[1], a[1, 1]],
    ]))


def embed_all(gens, cocycle):
    vals = cocycle.values if isinstance(cocycle, Cocycle) else np.asarray(cocycle)
    return [embed(g, vals[i]) for i, g in enumerate(gens)]


def _word_product(gens, word):
    mats = [g.m if isinstance(g, ProjMat3) else np.asarray(g, dtype=float)
            for g in gens]
    n = mats[0].shape[0]
    P = np.eye(n)
    for w in word:
        if w > 0:
            P = P @ mats[w - 1]
        else:
            P = P @ np.linalg.inv(mats[-w - 1])
    return P


def relation_residual(gens, pres):
    """Projective distance of the evaluated relation word from the identity
    (Frobenius norm after det normalization and sign alignment)."""
    if len(gens) != pres.n_generators:
        raise ValueError(f"expected {pres.n_generators} generators, got {len(gens)}")
    P = _word_product(gens, pres.word)
    det = float(np.linalg.det(P))
    if abs(det) < 1e-300:
        raise ValueError("relation product is singular")
    P = P / _cbrt(det) if P.shape[0] == 3 else P / math.copysign(math.sqrt(abs(det)), 1)
    eye = np.eye(P.shape[0])
    return float(min(np.linalg.norm(P - eye), np.linalg.norm(P + eye)))


def _mat3(M):
    if isinstance(M, ProjMat3):
        return M.m
    return np.asarray(M)


def act(M, p):
    """Projective action in the affine chart z = 1:
    (x, y) -> ((a11 x + a12 y + a13)/D, (a21 x + a22 y + a23)/D),
    D = a31 x + a32 y + a33."""
    m = _mat3(M)
    x, y = complex(p.x), complex(p.y)
    D = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    if abs(D) < 1e-14:
        raise PointAtInfinityError(f"{p} maps to the line at infinity")
    return CPoint((m[0, 0] * x + m[0, 1] * y + m[0, 2]) / D,
                  (m[1, 0] * x + m[1, 1] * y + m[1, 2]) / D)


def act_jacobian(M, p):
    """Complex Jacobian of the chart action at p (the action is rational)."""
    m = _mat3(M)
    x, y = complex(p.x), complex(p.y)
    N1 = m[0, 0] * x + m[0, 1] * y + m[0, 2]
    N2 = m[1, 0] * x + m[1, 1] * y + m[1, 2]
    D = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    if abs(D) < 1e-14:
        raise PointAtInfinityError(f"{p} maps to the line at infinity")
    return np.array([
        [(m[0, 0] * D - N1 * m[2, 0]) / D**2, (m[0, 1] * D - N1 * m[2, 1]) / D**2],
        [(m[1, 0] * D - N2 * m[2, 0]) / D**2, (m[1, 1] * D - N2 * m[2, 1]) / D**2],
    ])


def _direction_angle(v, w):
    # Fubini-Study angle between complex lines C v and C w, through the
    # Lagrange identity: sin(theta) = |v1 w2 - v2 w1| / (|v| |w|).  The asin
    # form keeps full precision for nearly parallel directions.
    cross = abs(v[0] * w[1] - v[1] * w[0])
    den = float(np.linalg.norm(v) * np.linalg.norm(w))
    return math.asin(min(1.0, cross / den))


def invariance_residual(M, F, samples):
    """Max projective angle between the pushforward of the leaf direction
    (1, lambda(p)) under d act(M, .) and the leaf direction at act(M, p).

    Samples with domain errors (on either side) are skipped and counted; it is
    an error if every sample fails.
    """
    worst = 0.0
    used = 0
    for p in samples:
        try:
            lam = F.value(p)
            q = act(M, p)
            mu = F.value(q)
            J = act_jacobian(M, p)
        except (DomainError, PointAtInfinityError):
            continue
        v = J @ np.array([1.0, lam])
        w = np.array([1.0, mu])
        worst = max(worst, _direction_angle(v, w))
        used += 1
    if used == 0:
        raise DomainError("all invariance samples failed")
    return worst


# ---------------------------------------------------------------------------
# cocycle linear algebra

def _moebius_blocks(gens):
    return [g.m if isinstance(g, Mobius2) else np.asarray(g, dtype=float)
            for g in gens]


def coboundary(gens, t):
    """The cocycle c(g) = (I - A(g)) t produced by conjugating the zero
    cocycle with the unipotent column t."""
    t = np.asarray(t, dtype=float).reshape(2)
    rows = [(np.eye(2) - A) @ t for A in _moebius_blocks(gens)]
    return Cocycle(np.array(rows))


def apply_coboundary(gens, c, t):
    """c conjugated by the unipotent column t: c(g) + (I - A(g)) t."""
    base = c.values if isinstance(c, Cocycle) else np.asarray(c)
    return Cocycle(base + coboundary(gens, t).values)


def relation_matrix(gens, pres):
    """2 x 2n matrix R with R c = c(relation word): the linear cocycle
    condition on the stacked generator columns."""
    blocks = _moebius_blocks(gens)
    n = len(blocks)
    R = np.zeros((2, 2 * n))
    prefix = np.eye(2)
    for w in pres.word:
        i = abs(w) - 1
        A = blocks[i]
        if w > 0:
            R[:, 2 * i:2 * i + 2] += prefix
            prefix = prefix @ A
        else:
            Ainv = np.linalg.inv(A)
            R[:, 2 * i:2 * i + 2] -= prefix @ Ainv
            prefix = prefix @ Ainv
    return R


def cocycle_space(gens, pres):
    """Orthonormal basis (columns) of the space of relation-compatible
    cocycles, as stacked vectors in R^{2n}."""
    R = relation_matrix(gens, pres)
    _, s, vt = np.linalg.svd(R)
    rank = int(np.sum(s > 1e-10 * (s[0] if len(s) else 1.0)))
    return vt[rank:].T


def noncoboundary_cocycle(gens, pres):
    """A relation-compatible cocycle orthogonal to the coboundary subspace
    (a representative of a nontrivial cohomology class)."""
    Z = cocycle_space(gens, pres)
    Cb = np.column_stack([coboundary(gens, e).values.ravel()
                          for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0]))])
    Q, _ = np.linalg.qr(Cb)
    proj = Z - Q @ (Q.T @ Z)
    norms = np.linalg.norm(proj, axis=0)
    k = int(np.argmax(norms))
    if norms[k] < 1e-8:
        raise InconsistentCocycleError("no nontrivial cohomology class found")
    v = proj[:, k] / norms[k]
    return Cocycle(v.reshape(-1, 2))


def coboundary_equiv(c1, c2, gens, pres=None, tol=_DEF_TOL):
    """Vector t with c2 = c1 conjugated by the unipotent column t, or None.

    Solves the linear system (I - A(g)) t = c2(g) - c1(g) over all generators
    in the least-squares sense and accepts when the residual is below tol.
    When a presentation is supplied, both cocycles are first validated against
    the relation (residual <= tol) and InconsistentCocycleError is raised
    otherwise.
    """
    c1 = c1 if isinstance(c1, Cocycle) else Cocycle(c1)
    c2 = c2 if isinstance(c2, Cocycle) else Cocycle(c2)
    if pres is not None:
        for c in (c1, c2):
            r = relation_residual(embed_all(gens, c), pres)
            if r > tol:
                raise InconsistentCocycleError(
                    f"cocycle violates the relation: residual {r:.3e}")
    blocks = _moebius_blocks(gens)
    A = np.vstack([np.eye(2) - B for B in blocks])
    rhs = (c2.values - c1.values).ravel()
    t, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    if np.linalg.norm(A @ t - rhs) > tol:
        return None
    return t


# ---------------------------------------------------------------------------
# genus-2 octagon fixture

@lru_cache(maxsize=1)
def _octagon_raw():
    # Regular octagon with vertex angle pi/4 in the disk model; side pairings
    # are translations through the center with cosh(l/2) = cot^2(pi/8)^(1/2):
    # the right-triangle identity gives cosh(l/2) = 1 + sqrt(2) directly.
    ch = 1.0 + math.sqrt(2.0)
    sh = math.sqrt(ch * ch - 1.0)
    T = np.array([[ch, sh], [sh, ch]], dtype=complex)

    def rot(theta):
        return np.diag([np.exp(1j * theta / 2.0), np.exp(-1j * theta / 2.0)])

    disk = [rot(k * math.pi / 4.0) @ T @ rot(-k * math.pi / 4.0) for k in range(4)]
    # Cayley transform to the upper half-plane: z = i (1 + w) / (1 - w)
    K = np.array([[1j, 1j], [-1.0, 1.0]])
    Kinv = np.linalg.inv(K)
    out = []
    for m in disk:
        h = K @ m @ Kinv
        h = h / np.sqrt(np.linalg.det(h))
        if np.max(np.abs(h.imag)) > 1e-12:
            raise AssertionError("octagon generator failed to become real")
        out.append(h.real)
    return tuple(out)


def genus2_octagon_generators():
    """Side-pairing generators of the regular-octagon genus-2 Fuchsian group,
    as half-plane Moebius maps."""
    return [Mobius2(m) for m in _octagon_raw()]


def genus2_octagon_presentation():
    """The relation satisfied by the octagon side pairings:
    g1 g2^-1 g3 g4^-1 g1^-1 g2 g3^-1 g4 = 1."""
    return Presentation(4, (1, -2, 3, -4, -1, 2, -3, 4))


# ---------------------------------------------------------------------------
# serialization

@dataclass(frozen=True)
class GroupEmbedding:
    """A surface group embedded in PSL3(R) through a cocycle."""

    genus: int
    generators: tuple
    cocycle: Cocycle
    relation_residual: float

    @classmethod
    def build(cls, gens, cocycle, pres, genus=None):
        mats = embed_all(gens, cocycle)
        res = relation_residual(mats, pres)
        return cls(genus=genus if genus is not None else len(gens) // 2,
                   generators=tuple(mats), cocycle=cocycle,
                   relation_residual=res)

    def to_dict(self):
        return {
            "genus": self.genus,
            "generators": [[float(v) for v in g.m.ravel()] for g in self.generators],
            "cocycle": [[float(v) for v in row] for row in self.cocycle.values],
            "relation_residual": float(self.relation_residual),
        }
