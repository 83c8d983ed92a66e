"""Explicit bilipschitz embeddings of orbit spaces.

Every map is exposed twice: as a batched array function ``embed_*`` and as
an :class:`EmbeddingHandle` factory carrying declared Lipschitz bounds and
the matching quotient metric.

Flattening layout
-----------------
Outputs are real vectors whose Euclidean norms equal the norms of the
underlying tensors:

* Hermitian ``n x n`` matrices: ``n`` diagonal entries, then for each pair
  ``i < j`` (row-major) ``sqrt(2) Re H_ij`` and ``sqrt(2) Im H_ij``.
* Real symmetric matrices: diagonal, then ``sqrt(2) S_ij`` for ``i < j``.
* Symmetric tensor powers ``u^{(x)k}``: one complex coordinate per multiset
  of indices (lexicographic), weighted by the square root of its
  multinomial coefficient; complex values interleaved as ``(re, im)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.linalg import helmert

from . import group_actions as ga
from . import quotient_metrics as qm
from . import wallpaper as wp
from .errors import NotSymmetric, ShapeError, SizeMismatch, UnsupportedFamily, UnsupportedSignature

ZERO_NORM = 1e-300
SIGMA_RTOL = 1e-12

Interval = tuple[float, float]
KappaClaim = Union[float, Interval, None]


@dataclass(frozen=True, eq=False)
class EmbeddingHandle:
    """A batched map from points to real vectors plus its declared bounds.

    ``alpha_claim`` / ``beta_claim`` are ``None`` when unknown. ``kappa_claim``
    is a float when the distortion is known exactly, an interval ``(lo, hi)``
    when only bracketed, or ``None``. ``kappa_exact`` marks a claim that the
    distortion of this particular map equals ``kappa_claim``.
    """

    name: str
    input_kind: str
    input_shape: tuple[int, ...]
    output_dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    metric: Callable[[np.ndarray, np.ndarray], np.ndarray]
    alpha_claim: float | None = None
    beta_claim: float | None = None
    kappa_claim: KappaClaim = None
    kappa_exact: bool = False
    provenance: str = ""
    action: object = None
    homogeneous: bool = False
    sampler: Callable | None = None
    orbit_sampler: Callable | None = None
    output_action: object = None
    target_metric: Callable | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        a, b = self.alpha_claim, self.beta_claim
        if a is not None and b is not None and a > b * (1 + 1e-12):
            raise ValueError(f"{self.name}: alpha_claim {a} exceeds beta_claim {b}")

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(np.asarray(x))

    def output_distance(self, fx, fy) -> np.ndarray:
        """Distance between images; Euclidean unless the handle targets a quotient."""
        if self.target_metric is not None:
            return self.target_metric(fx, fy)
        return np.linalg.norm(np.asarray(fx) - np.asarray(fy), axis=-1)

    @property
    def kappa_upper(self) -> float | None:
        if isinstance(self.kappa_claim, tuple):
            return self.kappa_claim[1]
        return self.kappa_claim

    def sample_points(self, rng: np.random.Generator, size: int, scale: float = 1.0) -> np.ndarray:
        if self.sampler is not None:
            return self.sampler(rng, size, scale)
        return ga.random_point(self.action, scale, rng, size)

    def orbit_images(self, rng: np.random.Generator, x: np.ndarray) -> np.ndarray:
        if self.orbit_sampler is not None:
            return self.orbit_sampler(rng, x)
        if self.action is None:
            return x
        return ga.random_orbit_images(self.action, x, rng)

    def with_claims(self, **changes) -> "EmbeddingHandle":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# Flattenings


def hermitian_flat(H: np.ndarray) -> np.ndarray:
    n = H.shape[-1]
    iu, ju = np.triu_indices(n, 1)
    diag = np.real(np.diagonal(H, axis1=-2, axis2=-1))
    off = H[..., iu, ju]
    pairs = np.sqrt(2) * np.stack([off.real, off.imag], axis=-1).reshape(H.shape[:-2] + (-1,))
    return np.concatenate([diag, pairs], axis=-1)


def symmetric_flat(S: np.ndarray) -> np.ndarray:
    n = S.shape[-1]
    iu, ju = np.triu_indices(n, 1)
    return np.concatenate([np.diagonal(S, axis1=-2, axis2=-1), np.sqrt(2) * S[..., iu, ju]], axis=-1)


def interleave(z: np.ndarray) -> np.ndarray:
    return np.stack([z.real, z.imag], axis=-1).reshape(z.shape[:-1] + (-1,))


@lru_cache(maxsize=None)
def _sym_power_layout(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    exps = []
    weights = []
    for combo in itertools.combinations_with_replacement(range(n), k):
        e = np.bincount(combo, minlength=n)
        exps.append(e)
        coef = math.factorial(k)
        for m in e:
            coef //= math.factorial(int(m))
        weights.append(math.sqrt(coef))
    return np.array(exps), np.array(weights)


def sym_power(u: np.ndarray, k: int) -> np.ndarray:
    """Norm-preserving coordinates of the symmetric tensor ``u^{(x)k}`` (complex)."""
    u = np.asarray(u)
    exps, weights = _sym_power_layout(u.shape[-1], k)
    mono = np.prod(u[..., None, :] ** exps, axis=-1)
    return weights * mono


def _safe_norm(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    nrm = np.linalg.norm(u, axis=-1)
    live = nrm > ZERO_NORM
    return nrm, live


# ---------------------------------------------------------------------------
# Scalar actions on C^n and the sign action on R^n


def embed_complex_phase(u) -> np.ndarray:
    """``u (x) conj(u) / ||u||`` flattened; ``0 -> 0``."""
    u = np.asarray(u, dtype=complex)
    nrm, live = _safe_norm(u)
    H = u[..., :, None] * np.conj(u[..., None, :])
    out = hermitian_flat(H) / np.where(live, nrm, 1.0)[..., None]
    return np.where(live[..., None], out, 0.0)


def embed_real_antipodal(x) -> np.ndarray:
    """``x (x) x / ||x||`` flattened; ``0 -> 0``."""
    x = np.asarray(x, dtype=float)
    nrm, live = _safe_norm(x)
    S = x[..., :, None] * x[..., None, :]
    out = symmetric_flat(S) / np.where(live, nrm, 1.0)[..., None]
    return np.where(live[..., None], out, 0.0)


def embed_scalar_cyclic(r: int, u) -> np.ndarray:
    """``(cos(pi/2r) phi(u), sin(pi/2r) psi(u))`` with the phase invariant ``phi``
    and the tensor-power invariant ``psi(u) = u^{(x)r} / ||u||^{r-1}``."""
    u = np.asarray(u, dtype=complex)
    nrm, live = _safe_norm(u)
    safe = np.where(live, nrm, 1.0)[..., None]
    phi = embed_complex_phase(u)
    psi = interleave(sym_power(u / safe, r)) * safe
    psi = np.where(live[..., None], psi, 0.0)
    t = np.pi / (2 * r)
    return np.concatenate([np.cos(t) * phi, np.sin(t) * psi], axis=-1)


def scalar_cyclic_output_dim(r: int, n: int) -> int:
    return n * n + 2 * math.comb(n + r - 1, r)


# ---------------------------------------------------------------------------
# O(r), SO(r) and U(r)


def matrix_sqrt_psd(S) -> np.ndarray:
    """Symmetric PSD square root via ``eigh`` with eigenvalues clamped at 0."""
    S = np.asarray(S, dtype=float)
    if S.ndim < 2 or S.shape[-1] != S.shape[-2]:
        raise NotSymmetric(f"expected a square matrix, got shape {S.shape}")
    asym = np.linalg.norm(S - np.swapaxes(S, -1, -2), axis=(-2, -1))
    scale = np.maximum(1.0, np.linalg.norm(S, axis=(-2, -1)))
    if np.any(asym > 1e-10 * scale):
        raise NotSymmetric("matrix is not symmetric to 1e-10")
    w, V = np.linalg.eigh((S + np.swapaxes(S, -1, -2)) / 2)
    return (V * np.sqrt(np.maximum(w, 0.0))[..., None, :]) @ np.swapaxes(V, -1, -2)


def gram_sqrt(X) -> np.ndarray:
    """``sqrt(X^* X)`` computed from the SVD of ``X`` (stable when ``X^* X`` is singular)."""
    X = np.asarray(X)
    _, s, Vh = np.linalg.svd(X, full_matrices=False)
    return (np.conj(np.swapaxes(Vh, -1, -2)) * s[..., None, :]) @ Vh


def embed_gram_sqrt(X) -> np.ndarray:
    """Flattened ``sqrt(X^T X)`` (row-major ``n*n``; complex input gives interleaved ``2 n*n``)."""
    X = np.asarray(X)
    G = gram_sqrt(X)
    flat = G.reshape(G.shape[:-2] + (-1,))
    return interleave(flat) if np.iscomplexobj(X) else flat.astype(float)


def special_svd(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``X = U diag(s) V`` with ``U`` in SO(r), ``s`` descending and ``V V^T = I``.

    Each row of ``V`` has its first entry of magnitude above 1e-9 made
    positive; afterwards a negative ``det U`` is fixed by negating the last
    column of ``U`` and the last row of ``V``.
    """
    X = np.asarray(X, dtype=float)
    r, n = X.shape[-2:]
    if n < r:
        raise ShapeError(f"special_svd needs n >= r, got {r}x{n}")
    U, s, V = np.linalg.svd(X, full_matrices=False)
    big = np.abs(V) > 1e-9
    first = np.argmax(big, axis=-1)
    lead = np.take_along_axis(V, first[..., None], axis=-1)[..., 0]
    flip = np.where(lead < 0, -1.0, 1.0)
    V = V * flip[..., :, None]
    U = U * flip[..., None, :]
    fix = np.ones(U.shape[:-1])
    fix[..., -1] = np.where(np.linalg.det(U) < 0, -1.0, 1.0)
    return U * fix[..., None, :], s, V * fix[..., :, None]


@lru_cache(maxsize=None)
def _column_subsets(n: int, r: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(n), r)), dtype=int).reshape(-1, r)


def plucker_coords(V) -> np.ndarray:
    """All maximal minors of an ``r x n`` matrix, column subsets in lexicographic order."""
    V = np.asarray(V, dtype=float)
    r, n = V.shape[-2:]
    if n < r:
        raise ShapeError(f"plucker_coords needs n >= r, got {r}x{n}")
    idx = _column_subsets(n, r)
    blocks = np.moveaxis(V[..., :, idx], -2, -3)  # (..., m, r, r)
    return np.linalg.det(blocks)


def embed_scaled_plucker(X) -> np.ndarray:
    """``sigma_min(X) * Plu(V_X)``; zero when ``X`` is numerically rank deficient."""
    X = np.asarray(X, dtype=float)
    _, s, V = special_svd(X)
    smin = s[..., -1]
    degenerate = smin <= SIGMA_RTOL * s[..., 0]
    out = smin[..., None] * plucker_coords(V)
    return np.where(degenerate[..., None], 0.0, out)


def embed_special_orthogonal(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-2] < 2 or X.shape[-1] < X.shape[-2]:
        raise ShapeError(f"SO(r) embedding needs n >= r >= 2, got {X.shape[-2:]}")
    return np.concatenate([embed_gram_sqrt(X), np.sqrt(2) * embed_scaled_plucker(X)], axis=-1)


# ---------------------------------------------------------------------------
# Reflection groups


def embed_chamber(family: ga.ReflectionGroup, x) -> tuple[np.ndarray, np.ndarray]:
    """Chamber representative of ``x`` and the determinant of the folding element."""
    if not isinstance(family, ga.ReflectionGroup):
        raise UnsupportedFamily(f"not a reflection family: {family!r}")
    return ga.reflection_data(family).fold(x)


def embed_alternating_reflection(family: ga.ReflectionGroup, x) -> np.ndarray:
    """``(rep, eps * distance(rep, chamber boundary))``: two chamber copies glued along the walls."""
    data = ga.reflection_data(ga.ReflectionGroup(family.kind, family.n))
    rep, eps = data.fold(x)
    return np.concatenate([rep, (eps * data.wall_distance(rep))[..., None]], axis=-1)


# ---------------------------------------------------------------------------
# Tori and wallpaper groups


def embed_circle_arc(L: float, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    ang = 2 * np.pi * t / L
    return (L / (2 * np.pi)) * np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def embed_rect_torus(lengths, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    parts = [embed_circle_arc(L, x[..., i]) for i, L in enumerate(lengths)]
    return np.concatenate(parts, axis=-1)


def _glide(a: float):
    def sigma(p):
        p = np.asarray(p, dtype=float)
        return np.stack([p[..., 0] + a / 2, -p[..., 1]], axis=-1)

    return sigma


def embed_wallpaper(spec: ga.Wallpaper, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    sig, a, b = spec.signature, spec.a, spec.b
    if sig == "o-rect":
        return embed_rect_torus((a, b), x)
    if sig == "**":
        return np.concatenate([wp.fold_interval(x[..., :1], a), embed_circle_arc(b, x[..., 1])], axis=-1)
    if sig == "2*22":
        p = np.stack([wp.fold_interval(x[..., 0], a) - a / 2, wp.fold_interval(x[..., 1], b) - b / 2], axis=-1)
        return embed_real_antipodal(p)
    if sig == "4*2":
        z = (wp.fold_interval(x[..., 0], a) - a / 2) + 1j * (wp.fold_interval(x[..., 1], a) - a / 2)
        return embed_scalar_cyclic(4, z[..., None])
    if sig == "xx":
        from .combinators import involution_quotient_map

        return involution_quotient_map(lambda p: embed_rect_torus((a, b), p), _glide(a))(x)
    raise UnsupportedSignature(sig)


# ---------------------------------------------------------------------------
# Landmarks


def helmert_project(x) -> np.ndarray:
    """Coordinates of centred ``r x n`` landmark tuples in a Helmert basis of the sum-zero subspace."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < 2:
        raise SizeMismatch("landmark embeddings need n >= 2")
    return x @ helmert(n).T


def embed_landmarks(kind: str, x) -> np.ndarray:
    z = helmert_project(x)
    r, m = z.shape[-2:]
    if kind == "E" or (kind == "SE" and m < r):
        # With fewer centred columns than rows, SO(r) and O(r) orbits coincide.
        return embed_gram_sqrt(z)
    if kind == "SE":
        return embed_special_orthogonal(z)
    raise UnsupportedFamily(f"landmark kind must be 'E' or 'SE', got {kind!r}")


# ---------------------------------------------------------------------------
# Handle factories


def _oracle(action):
    return qm.default_oracle(action)


def scalar_cyclic_handle(r: int, n: int) -> EmbeddingHandle:
    action = ga.ScalarCyclic(r, n)
    beta = r * math.sin(math.pi / (2 * r))
    return EmbeddingHandle(
        name=f"scalar_cyclic(r={r},n={n})",
        input_kind="cplx_vec",
        input_shape=(n,),
        output_dim=scalar_cyclic_output_dim(r, n),
        evaluate=lambda u: embed_scalar_cyclic(r, u),
        metric=_oracle(action),
        alpha_claim=1.0,
        beta_claim=beta,
        kappa_claim=beta,
        kappa_exact=True,
        provenance="cos/sin mixture of the phase invariant and the r-th tensor power",
        action=action,
        homogeneous=True,
        params={"r": r, "n": n},
    )


def complex_phase_handle(n: int) -> EmbeddingHandle:
    action = ga.CircleScalar(n)
    kappa = math.sqrt(2) if n >= 2 else 1.0
    return EmbeddingHandle(
        name=f"complex_phase(n={n})",
        input_kind="cplx_vec",
        input_shape=(n,),
        output_dim=n * n,
        evaluate=embed_complex_phase,
        metric=_oracle(action),
        alpha_claim=1.0,
        beta_claim=kappa,
        kappa_claim=kappa,
        kappa_exact=True,
        provenance="u (x) conj(u) / |u|",
        action=action,
        homogeneous=True,
        params={"n": n},
    )


def _sign_group(dim: int) -> ga.FiniteLinear:
    return ga.FiniteLinear(dim, (np.eye(dim), -np.eye(dim)))


def real_antipodal_handle(d: int) -> EmbeddingHandle:
    action = _sign_group(d)
    kappa = math.sqrt(2) if d >= 2 else 1.0
    return EmbeddingHandle(
        name=f"real_antipodal(d={d})",
        input_kind="real_vec",
        input_shape=(d,),
        output_dim=d * (d + 1) // 2,
        evaluate=embed_real_antipodal,
        metric=_oracle(action),
        alpha_claim=1.0,
        beta_claim=kappa,
        kappa_claim=kappa,
        kappa_exact=True,
        provenance="x (x) x / |x|",
        action=action,
        homogeneous=True,
        params={"d": d},
    )


def gram_sqrt_handle(r: int, n: int) -> EmbeddingHandle:
    action = ga.OrthogonalLeft(r, n)
    kappa = math.sqrt(2) if n >= 2 else 1.0
    return EmbeddingHandle(
        name=f"gram_sqrt(r={r},n={n})",
        input_kind="real_mat",
        input_shape=(r, n),
        output_dim=n * n,
        evaluate=embed_gram_sqrt,
        metric=_oracle(action),
        alpha_claim=1.0,
        beta_claim=kappa,
        kappa_claim=kappa,
        kappa_exact=True,
        provenance="sqrt(X^T X)",
        action=action,
        homogeneous=True,
        params={"r": r, "n": n},
    )


def unitary_gram_handle(r: int, n: int) -> EmbeddingHandle:
    action = ga.UnitaryLeft(r, n)
    kappa = math.sqrt(2) if n >= 2 else 1.0
    return EmbeddingHandle(
        name=f"unitary_gram_sqrt(r={r},n={n})",
        input_kind="cplx_mat",
        input_shape=(r, n),
        output_dim=2 * n * n,
        evaluate=embed_gram_sqrt,
        metric=_oracle(action),
        alpha_claim=1.0,
        beta_claim=kappa,
        kappa_claim=kappa,
        kappa_exact=False,
        provenance="sqrt(X^* X)",
        action=action,
        homogeneous=True,
        params={"r": r, "n": n},
    )


def special_orthogonal_handle(r: int, n: int) -> EmbeddingHandle:
    action = ga.SpecialOrthogonalLeft(r, n)
    if n < r or r < 2:
        raise ShapeError(f"SO(r) embedding needs n >= r >= 2, got r={r}, n={n}")
    return EmbeddingHandle(
        name=f"special_orthogonal(r={r},n={n})",
        input_kind="real_mat",
        input_shape=(r, n),
        output_dim=n * n + math.comb(n, r),
        evaluate=embed_special_orthogonal,
        metric=_oracle(action),
        alpha_claim=1 / math.sqrt(2),
        beta_claim=2.0,
        kappa_claim=(math.sqrt(2), 2 * math.sqrt(2)),
        provenance="(sqrt(X^T X), sqrt(2) * scaled Plucker invariant)",
        action=action,
        homogeneous=True,
        params={"r": r, "n": n},
    )


def chamber_handle(kind: str, n: int) -> EmbeddingHandle:
    family = ga.ReflectionGroup(kind, n)
    return EmbeddingHandle(
        name=f"chamber({kind}{n})",
        input_kind="real_vec",
        input_shape=(family.dim,),
        output_dim=family.dim,
        evaluate=lambda x: embed_chamber(family, x)[0],
        metric=_oracle(family),
        alpha_claim=1.0,
        beta_claim=1.0,
        kappa_claim=1.0,
        kappa_exact=True,
        provenance="fold into the Weyl chamber",
        action=family,
        homogeneous=True,
        params={"kind": kind, "n": n},
    )


def alternating_handle(kind: str, n: int) -> EmbeddingHandle:
    family = ga.AlternatingReflection(kind, n)
    if family.full.order <= 2:
        raise UnsupportedFamily("alternating embedding needs a reflection group of order > 2")
    m = family.max_coxeter_label
    return EmbeddingHandle(
        name=f"alternating({kind}{n})",
        input_kind="real_vec",
        input_shape=(family.dim,),
        output_dim=family.dim + 1,
        evaluate=lambda x: embed_alternating_reflection(family, x),
        metric=_oracle(family),
        alpha_claim=1 / math.sqrt(2),
        beta_claim=math.sqrt(2),
        kappa_claim=(m * math.sin(math.pi / (2 * m)), 2.0),
        provenance="two Weyl chambers glued along their walls",
        action=family,
        homogeneous=True,
        params={"kind": kind, "n": n},
    )


def circle_handle(L: float) -> EmbeddingHandle:
    return rect_torus_handle((L,))


def rect_torus_handle(lengths) -> EmbeddingHandle:
    action = ga.RectTorus(tuple(lengths))
    return EmbeddingHandle(
        name="rect_torus(" + ",".join(f"{v:g}" for v in action.lengths) + ")",
        input_kind="torus",
        input_shape=(len(action.lengths),),
        output_dim=2 * len(action.lengths),
        evaluate=lambda x: embed_rect_torus(action.lengths, x),
        metric=_oracle(action),
        alpha_claim=2 / math.pi,
        beta_claim=1.0,
        kappa_claim=math.pi / 2,
        kappa_exact=True,
        provenance="product of round circles",
        action=action,
        sampler=_box_sampler(np.array(action.lengths)),
        params={"lengths": list(action.lengths)},
    )


def _box_sampler(lengths: np.ndarray):
    def sample(rng, size, scale=1.0):
        return rng.random((size, len(lengths))) * lengths

    return sample


_WALLPAPER_CLAIMS = {
    # signature: (alpha, beta, kappa, exact)
    "o-rect": (2 / math.pi, 1.0, math.pi / 2, True),
    "**": (2 / math.pi, 1.0, math.pi / 2, True),
    "2*22": (1.0, math.sqrt(2), math.sqrt(2), True),
    "4*2": (1.0, 4 * math.sin(math.pi / 8), 4 * math.sin(math.pi / 8), True),
    "xx": (2 / math.pi, math.sqrt(2), (math.pi / 2, math.pi / math.sqrt(2)), False),
}


def wallpaper_handle(signature: str, a: float = 1.0, b: float = 1.0) -> EmbeddingHandle:
    spec = ga.Wallpaper(signature, a, b)
    alpha, beta, kappa, exact = _WALLPAPER_CLAIMS[spec.signature]
    out_dim = int(embed_wallpaper(spec, np.zeros(2)).shape[-1])
    cell = np.array([2 * spec.a, 2 * spec.b])
    return EmbeddingHandle(
        name=f"wallpaper({spec.signature},a={a:g},b={b:g})",
        input_kind="plane",
        input_shape=(2,),
        output_dim=out_dim,
        evaluate=lambda x: embed_wallpaper(spec, x),
        metric=_oracle(spec),
        alpha_claim=alpha,
        beta_claim=beta,
        kappa_claim=kappa,
        kappa_exact=exact,
        provenance=f"fold-and-embed construction for signature {spec.signature}",
        action=spec,
        sampler=_box_sampler(cell),
        params={"signature": spec.signature, "a": a, "b": b},
    )


def landmarks_handle(kind: str, r: int, n: int) -> EmbeddingHandle:
    if n < 2:
        raise SizeMismatch("landmark embeddings need n >= 2")
    action = ga.EuclideanDiag(r, n) if kind == "E" else ga.SpecialEuclideanDiag(r, n)
    m = n - 1
    if kind == "E" or m < r:
        kappa: KappaClaim = math.sqrt(2) if m >= 2 else 1.0
        alpha, beta, exact, out = 1.0, kappa, True, m * m
    elif kind == "SE":
        kappa = (math.sqrt(2), 2 * math.sqrt(2))
        alpha, beta, exact, out = 1 / math.sqrt(2), 2.0, False, m * m + math.comb(m, r)
    else:
        raise UnsupportedFamily(f"landmark kind must be 'E' or 'SE', got {kind!r}")
    return EmbeddingHandle(
        name=f"landmarks({kind},r={r},n={n})",
        input_kind="real_mat",
        input_shape=(r, n),
        output_dim=out,
        evaluate=lambda x: embed_landmarks(kind, x),
        metric=_oracle(action),
        alpha_claim=alpha,
        beta_claim=beta,
        kappa_claim=kappa,
        kappa_exact=exact,
        provenance="centre, project to the sum-zero subspace, then the rotation-invariant map",
        action=action,
        homogeneous=True,
        params={"kind": kind, "r": r, "n": n},
    )


def identity_handle(dim: int) -> EmbeddingHandle:
    action = ga.FiniteLinear(dim, (np.eye(dim),))
    return EmbeddingHandle(
        name=f"identity(d={dim})",
        input_kind="real_vec",
        input_shape=(dim,),
        output_dim=dim,
        evaluate=lambda x: np.asarray(x, dtype=float),
        metric=qm.euclidean,
        alpha_claim=1.0,
        beta_claim=1.0,
        kappa_claim=1.0,
        kappa_exact=True,
        provenance="identity",
        action=action,
        homogeneous=True,
        params={"dim": dim},
    )


def linear_handle(A, action=None) -> EmbeddingHandle:
    """``x -> A x`` on ``R^d`` with the Euclidean metric; bounds are the extreme singular values."""
    A = np.asarray(A, dtype=float)
    s = np.linalg.svd(A, compute_uv=False)
    d = A.shape[1]
    alpha = float(s[-1]) if A.shape[0] >= d else 0.0
    return EmbeddingHandle(
        name=f"linear({A.shape[0]}x{d})",
        input_kind="real_vec",
        input_shape=(d,),
        output_dim=A.shape[0],
        evaluate=lambda x: np.asarray(x, dtype=float) @ A.T,
        metric=qm.euclidean,
        alpha_claim=alpha,
        beta_claim=float(s[0]),
        kappa_claim=float(s[0]) / alpha if alpha > 0 else None,
        kappa_exact=alpha > 0,
        provenance="linear map",
        action=action if action is not None else ga.FiniteLinear(d, (np.eye(d),)),
        homogeneous=True,
        params={"matrix": A.tolist()},
    )


def embed_sorted_projections(W, x) -> np.ndarray:
    """Sort the projections of the ``n`` columns of ``x`` onto each row of ``W`` (descending)."""
    W = np.asarray(W, dtype=float)
    proj = np.einsum("md,...dn->...mn", W, np.asarray(x, dtype=float))
    srt = -np.sort(-proj, axis=-1)
    return srt.reshape(srt.shape[:-2] + (-1,)) / math.sqrt(W.shape[0])


def sorted_projections_handle(d: int, n: int, m: int | None = None, seed: int = 0) -> EmbeddingHandle:
    """Point clouds modulo relabelling; no distortion claim (used for growth trends in ``n``)."""
    m = m if m is not None else 3 * d
    W = ga.make_rng(seed).standard_normal((m, d))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    action = ga.PermuteColumns(d, n)
    return EmbeddingHandle(
        name=f"sorted_projections(d={d},n={n},m={m})",
        input_kind="real_mat",
        input_shape=(d, n),
        output_dim=m * n,
        evaluate=lambda x: embed_sorted_projections(W, x),
        metric=qm.MetricOracle(action, "assignment"),
        beta_claim=1.0,
        provenance="sorted directional projections",
        action=action,
        homogeneous=True,
        params={"d": d, "n": n, "m": m, "seed": seed},
    )
