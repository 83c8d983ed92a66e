"""Isometric group actions on finite-dimensional spaces.

Points are plain numpy arrays shaped by their ambient kind:

==============  ===========================  =====================
kind            array shape / dtype          used by
==============  ===========================  =====================
``real_vec``    ``(d,)`` float               finite linear, reflection groups
``cplx_vec``    ``(n,)`` complex             scalar cyclic, circle scalar
``real_mat``    ``(r, n)`` float             O(r), SO(r), landmarks, point clouds
``cplx_mat``    ``(r, n)`` complex           U(r)
``plane``       ``(2,)`` float               wallpaper groups
``torus``       ``(k,)`` float               rectangular tori
==============  ===========================  =====================

Every operation also accepts a leading batch axis. :class:`Point` is the
validated, serialisable wrapper (complex entries interleaved as re/im).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Union

import numpy as np

from . import wallpaper as wp
from .errors import (
    DimensionMismatch,
    FiniteGroup,
    InfiniteGroup,
    InvalidAction,
    TooLarge,
    UnsupportedFamily,
)

DEFAULT_MAX_ORDER = 10**6

REAL_KINDS = ("real_vec", "real_mat", "plane", "torus")
COMPLEX_KINDS = ("cplx_vec", "cplx_mat")


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator; ``seed`` may be an int or a ``SeedSequence``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class Point:
    kind: str
    shape: tuple[int, ...]
    data: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in REAL_KINDS + COMPLEX_KINDS:
            raise DimensionMismatch(f"unknown point kind {self.kind!r}")
        expected = math.prod(self.shape) * (2 if self.kind in COMPLEX_KINDS else 1)
        if len(self.data) != expected:
            raise DimensionMismatch(f"{self.kind}{self.shape} needs {expected} scalars, got {len(self.data)}")
        if not all(math.isfinite(v) for v in self.data):
            raise ValueError("point entries must be finite")

    @classmethod
    def from_array(cls, arr, kind: str | None = None) -> "Point":
        arr = np.asarray(arr)
        if kind is None:
            if np.iscomplexobj(arr):
                kind = "cplx_vec" if arr.ndim == 1 else "cplx_mat"
            else:
                kind = "real_vec" if arr.ndim == 1 else "real_mat"
        if kind in COMPLEX_KINDS:
            arr = arr.astype(complex)
            flat = np.stack([arr.real, arr.imag], axis=-1).ravel()
        else:
            flat = arr.astype(float).ravel()
        return cls(kind, tuple(int(s) for s in arr.shape), tuple(float(v) for v in flat))

    def to_array(self) -> np.ndarray:
        flat = np.array(self.data, dtype=float)
        if self.kind in COMPLEX_KINDS:
            return (flat[0::2] + 1j * flat[1::2]).reshape(self.shape)
        return flat.reshape(self.shape)


# ---------------------------------------------------------------------------
# Action families


@dataclass(frozen=True)
class ScalarCyclic:
    r: int
    n: int
    family = "scalar_cyclic"

    def __post_init__(self):
        if self.r < 2:
            raise InvalidAction("ScalarCyclic needs r >= 2")
        if self.n < 1:
            raise InvalidAction("ScalarCyclic needs n >= 1")


@dataclass(frozen=True)
class CircleScalar:
    n: int
    family = "circle_scalar"


@dataclass(frozen=True, eq=False)
class FiniteLinear:
    dim: int
    elements: tuple
    family = "finite_linear"

    def __post_init__(self):
        mats = [np.asarray(g, dtype=float) for g in self.elements]
        if not mats:
            raise InvalidAction("FiniteLinear needs at least one element")
        eye = np.eye(self.dim)
        for g in mats:
            if g.shape != (self.dim, self.dim):
                raise InvalidAction(f"element of shape {g.shape} in a {self.dim}-dimensional action")
            if np.linalg.norm(g.T @ g - eye) > 1e-10:
                raise InvalidAction("FiniteLinear elements must be orthogonal")
        stack = np.array(mats)
        for g, h in itertools.product(mats, repeat=2):
            resid = np.linalg.norm(stack - g @ h, axis=(1, 2)).min()
            if resid > 1e-8:
                raise InvalidAction("FiniteLinear elements are not closed under products")
        object.__setattr__(self, "elements", tuple(mats))


@dataclass(frozen=True)
class OrthogonalLeft:
    r: int
    n: int
    family = "orthogonal"


@dataclass(frozen=True)
class SpecialOrthogonalLeft:
    r: int
    n: int
    family = "special_orthogonal"


@dataclass(frozen=True)
class UnitaryLeft:
    r: int
    n: int
    family = "unitary"


@dataclass(frozen=True)
class PermuteColumns:
    d: int
    n: int
    family = "permute_columns"


@dataclass(frozen=True)
class EuclideanDiag:
    r: int
    n: int
    family = "euclidean"


@dataclass(frozen=True)
class SpecialEuclideanDiag:
    r: int
    n: int
    family = "special_euclidean"


@dataclass(frozen=True)
class ReflectionGroup:
    """Reflection group ``A(n)`` (S_n on R^n), ``B(n)`` (signed permutations) or ``I2(n)`` (dihedral of order 2n)."""

    kind: str
    n: int
    family = "reflection"

    def __post_init__(self):
        if self.kind not in ("A", "B", "I2"):
            raise UnsupportedFamily(f"unsupported reflection family {self.kind!r}")
        if self.n < (2 if self.kind == "I2" else 1):
            raise InvalidAction(f"{self.kind}({self.n}) is not a valid reflection group")

    @property
    def dim(self) -> int:
        return 2 if self.kind == "I2" else self.n

    @property
    def order(self) -> int:
        if self.kind == "A":
            return math.factorial(self.n)
        if self.kind == "B":
            return 2**self.n * math.factorial(self.n)
        return 2 * self.n

    @property
    def max_coxeter_label(self) -> int:
        if self.kind == "I2":
            return self.n
        if self.kind == "A":
            return 3 if self.n >= 3 else (2 if self.n == 2 else 1)
        return 4 if self.n >= 2 else 2


@dataclass(frozen=True)
class AlternatingReflection(ReflectionGroup):
    family = "alternating_reflection"

    @property
    def full(self) -> ReflectionGroup:
        return ReflectionGroup(self.kind, self.n)

    @property
    def order(self) -> int:
        return max(ReflectionGroup(self.kind, self.n).order // 2, 1)


@dataclass(frozen=True)
class Wallpaper:
    signature: str
    a: float
    b: float
    family = "wallpaper"

    def __post_init__(self):
        object.__setattr__(self, "signature", wp.canonical_signature(self.signature))
        wp.wallpaper_geometry(self.signature, float(self.a), float(self.b))

    @property
    def geometry(self) -> wp.WallpaperGeometry:
        return wp.wallpaper_geometry(self.signature, float(self.a), float(self.b))


@dataclass(frozen=True)
class RectTorus:
    lengths: tuple[float, ...]
    family = "rect_torus"

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))
        if not self.lengths or any(not (v > 0) for v in self.lengths):
            raise InvalidAction("torus lengths must be positive")


GroupActionSpec = Union[
    ScalarCyclic,
    CircleScalar,
    FiniteLinear,
    OrthogonalLeft,
    SpecialOrthogonalLeft,
    UnitaryLeft,
    PermuteColumns,
    EuclideanDiag,
    SpecialEuclideanDiag,
    ReflectionGroup,
    AlternatingReflection,
    Wallpaper,
    RectTorus,
]

FINITE_FAMILIES = (FiniteLinear, ScalarCyclic, ReflectionGroup, PermuteColumns)
CONTINUOUS_FAMILIES = (
    CircleScalar,
    OrthogonalLeft,
    SpecialOrthogonalLeft,
    UnitaryLeft,
    EuclideanDiag,
    SpecialEuclideanDiag,
)


def ambient(spec: GroupActionSpec) -> tuple[str, tuple[int, ...]]:
    """Ambient point kind and array shape for an action."""
    if isinstance(spec, (ScalarCyclic, CircleScalar)):
        return "cplx_vec", (spec.n,)
    if isinstance(spec, FiniteLinear):
        return "real_vec", (spec.dim,)
    if isinstance(spec, UnitaryLeft):
        return "cplx_mat", (spec.r, spec.n)
    if isinstance(spec, (OrthogonalLeft, SpecialOrthogonalLeft, EuclideanDiag, SpecialEuclideanDiag)):
        return "real_mat", (spec.r, spec.n)
    if isinstance(spec, PermuteColumns):
        return "real_mat", (spec.d, spec.n)
    if isinstance(spec, ReflectionGroup):
        return "real_vec", (spec.dim,)
    if isinstance(spec, Wallpaper):
        return "plane", (2,)
    if isinstance(spec, RectTorus):
        return "torus", (len(spec.lengths),)
    raise UnsupportedFamily(f"unknown action {spec!r}")


# ---------------------------------------------------------------------------
# Serialisation


def spec_to_record(spec: GroupActionSpec) -> dict[str, Any]:
    """Plain-dict record (YAML/JSON friendly) for an action."""
    rec: dict[str, Any] = {"family": spec.family}
    if isinstance(spec, FiniteLinear):
        rec["dim"] = spec.dim
        rec["elements"] = [np.asarray(g).tolist() for g in spec.elements]
    elif isinstance(spec, ReflectionGroup):
        rec["type"] = spec.kind
        rec["n"] = spec.n
    elif isinstance(spec, Wallpaper):
        rec.update(signature=spec.signature, a=float(spec.a), b=float(spec.b))
    elif isinstance(spec, RectTorus):
        rec["lengths"] = list(spec.lengths)
    else:
        for name in spec.__dataclass_fields__:
            rec[name] = getattr(spec, name)
    return rec


_FAMILY_TYPES = {
    cls.family: cls
    for cls in (
        ScalarCyclic,
        CircleScalar,
        FiniteLinear,
        OrthogonalLeft,
        SpecialOrthogonalLeft,
        UnitaryLeft,
        PermuteColumns,
        EuclideanDiag,
        SpecialEuclideanDiag,
        ReflectionGroup,
        AlternatingReflection,
        Wallpaper,
        RectTorus,
    )
}

_RECORD_KEYS = {
    "finite_linear": {"dim", "elements"},
    "reflection": {"type", "n"},
    "alternating_reflection": {"type", "n"},
    "wallpaper": {"signature", "a", "b"},
    "rect_torus": {"lengths"},
}


def spec_from_record(rec: dict[str, Any]) -> GroupActionSpec:
    """Inverse of :func:`spec_to_record`; unknown or missing keys raise ``InvalidAction``."""
    if not isinstance(rec, dict) or "family" not in rec:
        raise InvalidAction("action record needs a 'family' key")
    family = rec["family"]
    cls = _FAMILY_TYPES.get(family)
    if cls is None:
        raise InvalidAction(f"unknown action family {family!r}")
    allowed = _RECORD_KEYS.get(family, set(cls.__dataclass_fields__))
    body = {k: v for k, v in rec.items() if k != "family"}
    unknown = set(body) - allowed
    missing = allowed - set(body)
    if unknown:
        raise InvalidAction(f"unknown key(s) for {family}: {sorted(unknown)}")
    if missing:
        raise InvalidAction(f"missing key(s) for {family}: {sorted(missing)}")
    if family == "finite_linear":
        return FiniteLinear(int(body["dim"]), tuple(np.array(g, dtype=float) for g in body["elements"]))
    if family in ("reflection", "alternating_reflection"):
        return cls(str(body["type"]), int(body["n"]))
    if family == "wallpaper":
        return Wallpaper(str(body["signature"]), float(body["a"]), float(body["b"]))
    if family == "rect_torus":
        return RectTorus(tuple(body["lengths"]))
    return cls(**{k: int(v) for k, v in body.items()})


# ---------------------------------------------------------------------------
# Group elements


@dataclass(frozen=True, eq=False)
class Isometry:
    """One group element.

    ``linear`` acts by left multiplication on vectors and on matrices
    (columns are moved together); ``offset`` is added afterwards, per column
    for matrix points. Permutations and unit scalars keep their compact form
    in ``perm`` / ``scalar`` for fast application.
    """

    linear: np.ndarray | None = None
    offset: np.ndarray | None = None
    perm: tuple[int, ...] | None = None
    scalar: complex | None = None
    label: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense real matrix acting on the flattened real coordinates."""
        if self.scalar is not None:
            n = self.extra.get("n", 1)
            z = complex(self.scalar)
            block = np.array([[z.real, -z.imag], [z.imag, z.real]])
            return np.kron(np.eye(n), block)
        if self.perm is not None:
            d = self.extra.get("d", 1)
            P = np.eye(len(self.perm))[:, list(self.perm)]
            # x[:, perm] flattened row-major equals (I_d kron P^T) vec(x)
            return np.kron(np.eye(d), P.T)
        return np.asarray(self.linear, dtype=float)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def apply_element(g: Isometry, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if g.scalar is not None:
        n = g.extra.get("n")
        if n is not None and x.shape[-1] != n:
            raise DimensionMismatch(f"scalar element for C^{n} applied to shape {x.shape}")
        return x * g.scalar
    if g.perm is not None:
        if x.ndim < 2 or x.shape[-1] != len(g.perm):
            raise DimensionMismatch(f"column permutation of size {len(g.perm)} applied to shape {x.shape}")
        return x[..., list(g.perm)]
    A = np.asarray(g.linear)
    is_matrix_point = g.extra.get("matrix_point", False)
    if is_matrix_point:
        if x.ndim < 2 or x.shape[-2] != A.shape[1]:
            raise DimensionMismatch(f"{A.shape} element applied to shape {x.shape}")
        out = A @ x
        if g.offset is not None:
            out = out + np.asarray(g.offset)[:, None]
        return out
    if x.shape[-1] != A.shape[1]:
        raise DimensionMismatch(f"{A.shape} element applied to shape {x.shape}")
    out = x @ A.T
    if g.offset is not None:
        out = out + g.offset
    return out


def _sort_key(g: Isometry):
    entries = np.round(g.matrix, 9).ravel()
    if g.offset is not None:
        entries = np.concatenate([entries, np.round(np.asarray(g.offset, dtype=float), 9)])
    # Descending lexicographic order puts the identity first in every family used here.
    return tuple(-entries)


def group_order(spec: GroupActionSpec) -> int:
    if isinstance(spec, ScalarCyclic):
        return spec.r
    if isinstance(spec, FiniteLinear):
        return len(spec.elements)
    if isinstance(spec, ReflectionGroup):
        return spec.order
    if isinstance(spec, PermuteColumns):
        return math.factorial(spec.n)
    raise InfiniteGroup(f"{type(spec).__name__} is not a finite group")


def _perm_sign(p) -> int:
    p = list(p)
    sign = 1
    seen = [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _reflection_matrices(spec: ReflectionGroup) -> list[np.ndarray]:
    if spec.kind == "A":
        eye = np.eye(spec.n)
        return [eye[list(p)] for p in itertools.permutations(range(spec.n))]
    if spec.kind == "B":
        eye = np.eye(spec.n)
        out = []
        for p in itertools.permutations(range(spec.n)):
            P = eye[list(p)]
            for signs in itertools.product((1.0, -1.0), repeat=spec.n):
                out.append(P * np.array(signs)[:, None])
        return out
    m = spec.n
    out = []
    for k in range(m):
        t = 2 * np.pi * k / m
        c, s = np.cos(t), np.sin(t)
        out.append(np.array([[c, -s], [s, c]]))
        # reflection across the line at angle pi k / m
        out.append(np.array([[c, s], [s, -c]]))
    return out


def elements_of(spec: GroupActionSpec, max_order: int = DEFAULT_MAX_ORDER) -> list[Isometry]:
    """All elements of a finite action, in a deterministic order."""
    if isinstance(spec, CONTINUOUS_FAMILIES) or isinstance(spec, (Wallpaper, RectTorus)):
        raise InfiniteGroup(f"{type(spec).__name__} is not a finite group")
    if isinstance(spec, PermuteColumns) and spec.n > 8:
        raise TooLarge("PermuteColumns enumeration is limited to n <= 8")
    order = group_order(spec)
    if order > max_order:
        raise TooLarge(f"group of order {order} exceeds the cap {max_order}")

    if isinstance(spec, ScalarCyclic):
        elems = [
            Isometry(scalar=np.exp(2j * np.pi * j / spec.r), label=f"w^{j}", extra={"n": spec.n})
            for j in range(spec.r)
        ]
    elif isinstance(spec, PermuteColumns):
        elems = [
            Isometry(perm=tuple(p), label=f"perm{p}", extra={"d": spec.d, "sign": _perm_sign(p)})
            for p in itertools.permutations(range(spec.n))
        ]
    elif isinstance(spec, FiniteLinear):
        elems = [Isometry(linear=g, label=f"g{i}") for i, g in enumerate(spec.elements)]
    else:
        mats = _reflection_matrices(spec)
        if isinstance(spec, AlternatingReflection):
            mats = [g for g in mats if np.linalg.det(g) > 0]
        elems = [Isometry(linear=g) for g in mats]
    elems.sort(key=_sort_key)
    return elems


def element_matrices(spec: GroupActionSpec) -> np.ndarray:
    """Dense matrices of a finite linear action acting on real vectors, shape ``(|G|, d, d)``."""
    return np.array([g.matrix for g in elements_of(spec)])


# ---------------------------------------------------------------------------
# Sampling


def random_point(spec: GroupActionSpec, scale: float = 1.0, rng_seed=0, size: int | None = None) -> np.ndarray:
    """Gaussian point(s) in the ambient space, entries scaled by ``scale``.

    Complex ambient spaces draw independent real and imaginary parts.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    kind, shape = ambient(spec)
    rng = make_rng(rng_seed)
    full = shape if size is None else (size,) + shape
    if kind in COMPLEX_KINDS:
        pair = rng.standard_normal(full + (2,))
        return scale * (pair[..., 0] + 1j * pair[..., 1])
    return scale * rng.standard_normal(full)


def haar_orthogonal(r: int, rng: np.random.Generator, size: int | None = None, complex_: bool = False) -> np.ndarray:
    """Haar-distributed O(r) (or U(r)) matrices via QR with a sign-fixed triangular factor."""
    shape = (r, r) if size is None else (size, r, r)
    Z = rng.standard_normal(shape)
    if complex_:
        Z = (Z + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    ph = d / np.where(np.abs(d) == 0, 1, np.abs(d))
    ph = np.where(np.abs(d) == 0, 1, ph)
    return Q * ph[..., None, :]


def haar_special_orthogonal(r: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    Q = haar_orthogonal(r, rng, size)
    neg = np.linalg.det(Q) < 0
    Q[..., :, -1] = np.where(neg[..., None], -Q[..., :, -1], Q[..., :, -1])
    return Q


def random_element_haar(spec: GroupActionSpec, rng_seed=0) -> Isometry:
    """Haar-random element of a continuous family."""
    rng = make_rng(rng_seed)
    if isinstance(spec, CircleScalar):
        return Isometry(scalar=np.exp(2j * np.pi * rng.random()), extra={"n": spec.n})
    if isinstance(spec, OrthogonalLeft):
        return Isometry(linear=haar_orthogonal(spec.r, rng), extra={"matrix_point": True})
    if isinstance(spec, SpecialOrthogonalLeft):
        return Isometry(linear=haar_special_orthogonal(spec.r, rng), extra={"matrix_point": True})
    if isinstance(spec, UnitaryLeft):
        return Isometry(linear=haar_orthogonal(spec.r, rng, complex_=True), extra={"matrix_point": True})
    if isinstance(spec, (EuclideanDiag, SpecialEuclideanDiag)):
        A = haar_orthogonal(spec.r, rng) if isinstance(spec, EuclideanDiag) else haar_special_orthogonal(spec.r, rng)
        b = rng.standard_normal(spec.r)
        return Isometry(linear=A, offset=b, extra={"matrix_point": True})
    raise FiniteGroup(f"{type(spec).__name__} is finite or has no Haar sampler")


def translation(b: np.ndarray) -> Isometry:
    """Diagonal translation of landmark tuples: every column shifted by ``b``."""
    b = np.asarray(b, dtype=float)
    return Isometry(linear=np.eye(len(b)), offset=b, label="translate", extra={"matrix_point": True})


def random_element(spec: GroupActionSpec, rng: np.random.Generator) -> Isometry:
    """A random element of any supported family (uniform on finite groups)."""
    if isinstance(spec, RectTorus):
        k = rng.integers(-2, 3, size=len(spec.lengths))
        return Isometry(linear=np.eye(len(spec.lengths)), offset=k * np.array(spec.lengths), label="lattice")
    if isinstance(spec, Wallpaper):
        geom = spec.geometry
        i = rng.integers(len(geom.linear))
        t = geom.basis @ rng.integers(-2, 3, size=2)
        return Isometry(linear=geom.linear[i], offset=geom.shifts[i] + t, label="wallpaper")
    if isinstance(spec, CONTINUOUS_FAMILIES):
        return random_element_haar(spec, rng)
    if isinstance(spec, PermuteColumns) and spec.n > 8:
        p = tuple(int(v) for v in rng.permutation(spec.n))
        return Isometry(perm=p, extra={"d": spec.d})
    elems = elements_of(spec)
    return elems[int(rng.integers(len(elems)))]


# ---------------------------------------------------------------------------
# Reflection chamber data


@dataclass(frozen=True, eq=False)
class ReflectionData:
    """Positive unit roots (inward wall normals) of the standard Weyl chamber."""

    spec: ReflectionGroup
    roots: np.ndarray  # (m, d)

    def __post_init__(self):
        norms = np.linalg.norm(self.roots, axis=1)
        if np.max(np.abs(norms - 1)) > 1e-12:
            raise InvalidAction("chamber roots must be unit vectors")
        gram = self.roots @ self.roots.T
        off = gram[~np.eye(len(gram), dtype=bool)]
        if off.size and off.max() > 1e-12:
            raise InvalidAction("chamber walls must meet at non-obtuse angles")

    def in_chamber(self, x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        return np.all(np.asarray(x) @ self.roots.T >= -tol, axis=-1)

    def wall_distance(self, rep: np.ndarray) -> np.ndarray:
        """Distance from chamber points to the chamber boundary."""
        return np.min(np.asarray(rep) @ self.roots.T, axis=-1)

    def fold(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Chamber representative of each orbit and the determinant of the folding element."""
        x = np.asarray(x, dtype=float)
        kind = self.spec.kind
        if kind == "A":
            order = np.argsort(-x, axis=-1, kind="stable")
            rep = np.take_along_axis(x, order, axis=-1)
            eps = _batched_perm_sign(order)
        elif kind == "B":
            signs = np.where(x < 0, -1.0, 1.0)
            ax = np.abs(x)
            order = np.argsort(-ax, axis=-1, kind="stable")
            rep = np.take_along_axis(ax, order, axis=-1)
            eps = _batched_perm_sign(order) * np.prod(signs, axis=-1)
        else:
            # Pick the folding element from the angle, then apply it in extended
            # precision so each representative is (nearly) correctly rounded.
            m = self.spec.n
            xl = x.astype(np.longdouble)
            wedge = 2 * _PI_LONG / m
            theta = np.mod(np.arctan2(xl[..., 1], xl[..., 0]), 2 * _PI_LONG)
            k = np.floor(theta / wedge)
            flip = theta - k * wedge > _PI_LONG / m
            phi = np.where(flip, (k + 1) * wedge, -k * wedge)
            c, s = np.cos(phi), np.sin(phi)
            # rotation by phi, or reflection across the line at angle phi / 2
            r0 = np.where(flip, c * xl[..., 0] + s * xl[..., 1], c * xl[..., 0] - s * xl[..., 1])
            r1 = np.where(flip, s * xl[..., 0] - c * xl[..., 1], s * xl[..., 0] + c * xl[..., 1])
            rep = np.stack([r0, np.maximum(r1, 0)], axis=-1).astype(float)
            eps = np.where(flip, -1.0, 1.0)
        return rep, np.asarray(eps, dtype=float)


_PI_LONG = np.longdouble("3.14159265358979323846264338327950288")


def _batched_perm_sign(order: np.ndarray) -> np.ndarray:
    flat = order.reshape(-1, order.shape[-1])
    signs = np.array([_perm_sign(p) for p in flat], dtype=float)
    return signs.reshape(order.shape[:-1])


def reflection_data(spec: ReflectionGroup) -> ReflectionData:
    kind, n = spec.kind, spec.n
    if kind == "I2":
        m = n
        roots = np.array([[0.0, 1.0], [np.sin(np.pi / m), -np.cos(np.pi / m)]])
    else:
        rows = []
        for i in range(n - 1):
            v = np.zeros(n)
            v[i], v[i + 1] = 1 / np.sqrt(2), -1 / np.sqrt(2)
            rows.append(v)
        if kind == "B":
            v = np.zeros(n)
            v[-1] = 1.0
            rows.append(v)
        roots = np.array(rows) if rows else np.zeros((0, n))
    return ReflectionData(ReflectionGroup(kind, n), roots)


def random_orbit_images(spec: GroupActionSpec, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """``g_i x_i`` for an independent random element ``g_i`` per batch entry."""
    x = np.asarray(x)
    kind, shape = ambient(spec)
    batch = x.shape[: x.ndim - len(shape)]
    count = int(np.prod(batch, dtype=int))
    if isinstance(spec, ScalarCyclic):
        k = rng.integers(spec.r, size=batch)
        return x * np.exp(2j * np.pi * k / spec.r)[..., None]
    if isinstance(spec, CircleScalar):
        return x * np.exp(2j * np.pi * rng.random(batch))[..., None]
    if isinstance(spec, PermuteColumns):
        perms = np.argsort(rng.random(batch + (spec.n,)), axis=-1)
        return np.take_along_axis(x, perms[..., None, :], axis=-1)
    if isinstance(spec, (FiniteLinear, ReflectionGroup)):
        mats = element_matrices(spec)
        k = rng.integers(len(mats), size=batch)
        return np.einsum("...ij,...j->...i", mats[k], x)
    if isinstance(spec, (OrthogonalLeft, EuclideanDiag)):
        Q = haar_orthogonal(spec.r, rng, count).reshape(batch + (spec.r, spec.r))
    elif isinstance(spec, (SpecialOrthogonalLeft, SpecialEuclideanDiag)):
        Q = haar_special_orthogonal(spec.r, rng, count).reshape(batch + (spec.r, spec.r))
    elif isinstance(spec, UnitaryLeft):
        Q = haar_orthogonal(spec.r, rng, count, complex_=True).reshape(batch + (spec.r, spec.r))
    elif isinstance(spec, RectTorus):
        L = np.array(spec.lengths)
        return x + rng.integers(-2, 3, size=x.shape) * L
    elif isinstance(spec, Wallpaper):
        geom = spec.geometry
        i = rng.integers(len(geom.linear), size=batch)
        t = rng.integers(-2, 3, size=batch + (2,)) * geom.cell_lengths
        return np.einsum("...ij,...j->...i", geom.linear[i], x) + geom.shifts[i] + t
    else:
        raise UnsupportedFamily(f"unknown action {spec!r}")
    out = Q @ x
    if isinstance(spec, (EuclideanDiag, SpecialEuclideanDiag)):
        out = out + rng.standard_normal(batch + (spec.r, 1))
    return out
