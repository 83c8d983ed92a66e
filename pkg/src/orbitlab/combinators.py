"""Building new embeddings from old ones.

Math notes for the order-2 pipeline
-----------------------------------
Let ``sigma`` be an isometric involution of ``X`` and ``phi`` an embedding of
``X`` with bounds ``(alpha, beta)``. The map ``x -> (phi(x), phi(sigma x)) / sqrt 2``
has the same bounds and intertwines ``sigma`` with the swap of its two
blocks. In the orthonormal coordinates

    s(x) = (phi(x) + phi(sigma x)) / 2,     a(x) = (phi(x) - phi(sigma x)) / 2

the swap becomes ``(s, a) -> (s, -a)``, a sign action on the ``a`` block, so
``x -> (s(x), A(a(x)))`` with ``A`` the antipodal map ``a (x) a / |a|`` is
``sigma``-invariant with lower bound ``alpha`` and upper bound ``sqrt 2 * beta``
on ``X / <sigma>``. No further scalars appear.

For ``sigma`` of order 3 the same recipe uses the unitary DFT of
``(phi(x), phi(sigma x), phi(sigma^2 x)) / sqrt 3``: the trivial block is
``c0 = (f0 + f1 + f2) / 3`` and the non-trivial block is the complex vector
``w = sqrt(2/3) (f0 + conj(omega) f1 + omega f2) / sqrt 3`` on which ``sigma``
acts by ``omega``; the output is ``(c0, F_3(w))`` with ``F_3`` the
root-of-unity embedding, giving bounds ``(alpha, 3/2 * beta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import group_actions as ga
from . import quotient_metrics as qm
from .embeddings import EmbeddingHandle, embed_real_antipodal, embed_scalar_cyclic
from .errors import EmptyGlueSet, InfiniteGroup, NotEquivariant, NotInvolution, NotOrder3, PropertyCheckFailed

PROBES = 256
PROBE_SEED = 20240101


def _probe_rng(offset: int = 0) -> np.random.Generator:
    return ga.make_rng(PROBE_SEED + offset)


# ---------------------------------------------------------------------------
# Contortion table


@dataclass(frozen=True)
class ContortionEntry:
    group: str
    low: float
    high: float
    closed_form: str

    @property
    def exact(self) -> bool:
        return self.low == self.high


@dataclass(frozen=True)
class ContortionTable:
    entries: tuple[ContortionEntry, ...] = field(
        default_factory=lambda: (
            ContortionEntry("|G|=1", 1.0, 1.0, "1"),
            ContortionEntry("|G|=2", math.sqrt(2), math.sqrt(2), "sqrt(2)"),
            ContortionEntry("|G|=3", 1.5, 1.5, "3/2"),
            ContortionEntry("C4", 2 * math.sqrt(2 - math.sqrt(2)), 2.0, "[2 sqrt(2 - sqrt(2)), 2]"),
            ContortionEntry("C2xC2", math.sqrt(2), 2.0, "[sqrt(2), 2]"),
        )
    )

    def lookup(self, group: str) -> ContortionEntry:
        key = group.replace(" ", "").replace("×", "x")
        for e in self.entries:
            if e.group.replace(" ", "") == key:
                return e
        raise KeyError(group)


# ---------------------------------------------------------------------------
# Equivariant promotion and quotient descent


def _block_permutations(elements: list[ga.Isometry], block: int) -> list[np.ndarray]:
    """Matrices ``P_h`` with ``P_h (v_g)_g = (v_{gh})_g`` on ``|G|`` stacked blocks."""
    mats = np.array([g.matrix for g in elements])
    k = len(elements)
    out = []
    eye = np.eye(block)
    for h in mats:
        P = np.zeros((k * block, k * block))
        for i, g in enumerate(mats):
            j = int(np.argmin(np.linalg.norm(mats - g @ h, axis=(1, 2))))
            P[i * block : (i + 1) * block, j * block : (j + 1) * block] = eye
        out.append(P)
    return out


def promote_equivariant_finite(phi: EmbeddingHandle, G) -> EmbeddingHandle:
    """``psi(x) = (phi(g x))_{g in G} / sqrt|G|``, equivariant under block permutations."""
    if isinstance(G, ga.CONTINUOUS_FAMILIES) or isinstance(G, (ga.Wallpaper, ga.RectTorus)):
        raise InfiniteGroup(f"{type(G).__name__} is not finite")
    elements = ga.elements_of(G)
    if len(elements) == 1:
        return phi
    kind, shape = ga.ambient(G)
    k = len(elements)

    def evaluate(x):
        x = np.asarray(x)
        parts = [phi.evaluate(ga.apply_element(g, x)) for g in elements]
        return np.concatenate(parts, axis=-1) / math.sqrt(k)

    out_action = ga.FiniteLinear(phi.output_dim * k, tuple(_block_permutations(elements, phi.output_dim)))
    return EmbeddingHandle(
        name=f"promote[{phi.name}]",
        input_kind=phi.input_kind,
        input_shape=phi.input_shape,
        output_dim=phi.output_dim * k,
        evaluate=evaluate,
        metric=phi.metric,
        alpha_claim=phi.alpha_claim,
        beta_claim=phi.beta_claim,
        kappa_claim=phi.kappa_upper,
        provenance="averaged orbit concatenation",
        action=G,
        homogeneous=phi.homogeneous,
        sampler=phi.sample_points,
        output_action=out_action,
        params={"source": phi.name, "order": k},
    )


def check_equivariant(f: EmbeddingHandle, G, probes: int = PROBES, tol: float = 1e-8) -> float:
    """Largest sampled ``||f(h x) - P_h f(x)||``; raises ``NotEquivariant`` above ``tol``."""
    if f.output_action is None:
        raise NotEquivariant(f"{f.name} declares no action on its output")
    rng = _probe_rng(1)
    elems = ga.elements_of(G)
    # FiniteLinear keeps its elements in construction order, matching elements_of(G).
    out_mats = np.array(f.output_action.elements)
    if len(out_mats) != len(elems):
        raise NotEquivariant("output action has a different order from the input group")
    x = f.sample_points(rng, probes)
    idx = rng.integers(len(elems), size=probes)
    worst = 0.0
    fx = f.evaluate(x)
    for i in range(probes):
        h = elems[idx[i]]
        lhs = f.evaluate(ga.apply_element(h, x[i]))
        rhs = out_mats[idx[i]] @ fx[i]
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    if worst > tol * (1 + float(np.max(np.linalg.norm(fx, axis=-1)))):
        raise NotEquivariant(f"{f.name}: sampled equivariance defect {worst:.3g}")
    return worst


def descend_to_quotient(f: EmbeddingHandle, G) -> EmbeddingHandle:
    """The induced map ``X/G -> V/G``; target distances use the block action's quotient metric."""
    if isinstance(G, ga.CONTINUOUS_FAMILIES):
        raise InfiniteGroup(f"{type(G).__name__} is not finite")
    if len(ga.elements_of(G)) > 1 or f.output_action is not None:
        check_equivariant(f, G)
    out_action = f.output_action if f.output_action is not None else ga.FiniteLinear(f.output_dim, (np.eye(f.output_dim),))
    return EmbeddingHandle(
        name=f"descend[{f.name}]",
        input_kind=f.input_kind,
        input_shape=f.input_shape,
        output_dim=f.output_dim,
        evaluate=f.evaluate,
        metric=qm.default_oracle(G),
        alpha_claim=f.alpha_claim,
        beta_claim=f.beta_claim,
        kappa_claim=f.kappa_upper,
        provenance="quotient of an equivariant map",
        action=G,
        homogeneous=f.homogeneous,
        sampler=f.sample_points,
        target_metric=lambda a, b: qm.dist_finite_linear(out_action, a, b),
        params={"source": f.name},
    )


# ---------------------------------------------------------------------------
# Quotient-orbit combination and glued spaces


def quotient_orbit_combine(
    phi: EmbeddingHandle,
    psi: Callable[[np.ndarray], np.ndarray],
    c: float,
    alpha_phi: float,
    gamma: float,
    metric: Callable | None = None,
    expansion_probe: Callable | None = None,
    action=None,
    sampler: Callable | None = None,
) -> EmbeddingHandle:
    """``Psi(x) = (phi([x]), c * alpha_phi * psi(x))``.

    ``expansion_probe(rng, x)`` returns ``(g x, g . psi(x))`` for random
    ``g``; when given, orbit expansion ``|psi(x) - g.psi(x)| >= d(x, g x)``
    is checked on sampled points.
    """
    metric = metric if metric is not None else qm.euclidean
    if expansion_probe is not None:
        rng = _probe_rng(2)
        x = sampler(rng, PROBES, 1.0) if sampler is not None else phi.sample_points(rng, PROBES)
        gx, gpsi = expansion_probe(rng, x)
        lhs = np.linalg.norm(psi(x) - gpsi, axis=-1)
        rhs = metric(x, gx)
        if np.any(lhs < rhs - 1e-9):
            raise PropertyCheckFailed("psi is not orbit expanding on the sampled probes")
    scale = c * alpha_phi

    def evaluate(x):
        return np.concatenate([phi.evaluate(x), scale * psi(x)], axis=-1)

    beta_phi = phi.beta_claim
    kappa_phi = phi.kappa_upper
    beta = math.sqrt(beta_phi**2 + (alpha_phi * c * gamma) ** 2) if beta_phi is not None else None
    kappa = math.sqrt(2) * math.sqrt(kappa_phi**2 + (c * gamma) ** 2) if kappa_phi is not None else None
    probe_x = np.zeros((1,) + tuple(phi.input_shape), dtype=complex if "cplx" in phi.input_kind else float)
    return EmbeddingHandle(
        name=f"combine[{phi.name}]",
        input_kind=phi.input_kind,
        input_shape=phi.input_shape,
        output_dim=int(evaluate(probe_x).shape[-1]),
        evaluate=evaluate,
        metric=metric,
        alpha_claim=alpha_phi / math.sqrt(2),
        beta_claim=beta,
        kappa_claim=kappa,
        provenance="quotient-orbit combination",
        action=action,
        homogeneous=phi.homogeneous,
        sampler=sampler if sampler is not None else phi.sample_points,
        params={"c": c, "alpha_phi": alpha_phi, "gamma": gamma},
    )


def glue_embed(
    phi: EmbeddingHandle,
    z_distance: Callable[[np.ndarray], np.ndarray],
    Z,
    probes: int = PROBES,
) -> EmbeddingHandle:
    """Embedding of two copies of ``Y`` glued along ``Z``: ``(phi(y), alpha_phi * delta * d(y, Z))``.

    Glued points are arrays ``(..., y, delta)``. ``Z`` is a finite sample of
    the glue set or an exact bridge callable (see :func:`quotient_metrics.dist_glued`).
    """
    if not callable(Z) and np.asarray(Z).size == 0:
        raise EmptyGlueSet("glue set is empty")
    rng = _probe_rng(3)
    y1 = phi.sample_points(rng, probes)
    y2 = phi.sample_points(rng, probes)
    lip = np.abs(z_distance(y1) - z_distance(y2)) - phi.metric(y1, y2)
    if np.any(lip > 1e-9):
        raise PropertyCheckFailed("distance to the glue set is not 1-Lipschitz on the probes")
    a = phi.alpha_claim if phi.alpha_claim is not None else 1.0
    d_Y = phi.metric

    def evaluate(p):
        p = np.asarray(p, dtype=float)
        y, delta = p[..., :-1].reshape(p.shape[:-1] + tuple(phi.input_shape)), np.sign(p[..., -1])
        return np.concatenate([phi.evaluate(y), (a * delta * z_distance(y))[..., None]], axis=-1)

    def sample(rng, size, scale=1.0):
        y = phi.sample_points(rng, size, scale).reshape(size, -1)
        delta = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return np.concatenate([y, delta[:, None]], axis=-1)

    kappa_phi = phi.kappa_upper
    beta = math.sqrt(phi.beta_claim**2 + a**2) if phi.beta_claim is not None else None
    return EmbeddingHandle(
        name=f"glue[{phi.name}]",
        input_kind="glued",
        input_shape=(int(np.prod(phi.input_shape)) + 1,),
        output_dim=phi.output_dim + 1,
        evaluate=evaluate,
        metric=lambda p, q: qm.dist_glued(d_Y, Z, p, q),
        alpha_claim=a / math.sqrt(2),
        beta_claim=beta,
        kappa_claim=math.sqrt(2) * math.sqrt(kappa_phi**2 + 1) if kappa_phi is not None else None,
        provenance="glued-space embedding",
        homogeneous=False,
        sampler=sample,
        orbit_sampler=lambda rng, p: p,
        params={"source": phi.name},
    )


# ---------------------------------------------------------------------------
# Order-2 and order-3 quotients


def involution_quotient_map(phi_fn: Callable, sigma: Callable) -> Callable:
    """``x -> (s(x), A(a(x)))``; see the module notes for the scalars."""

    def F(x):
        f0 = phi_fn(x)
        f1 = phi_fn(sigma(x))
        return np.concatenate([(f0 + f1) / 2, embed_real_antipodal((f0 - f1) / 2)], axis=-1)

    return F


def _check_order(sigma, metric, x, order: int, err):
    y = x
    for _ in range(order):
        y = sigma(y)
    defect = metric(y, x)
    scale = 1 + np.linalg.norm(np.asarray(x).reshape(len(x), -1), axis=-1)
    if np.any(defect > 1e-9 * scale):
        raise err(f"sigma does not have order dividing {order} on the probes")


def c2_mod_involution(
    phi: EmbeddingHandle,
    sigma: Callable[[np.ndarray], np.ndarray],
    metric_X: Callable | None = None,
    name: str | None = None,
) -> EmbeddingHandle:
    """Embedding of ``X / <sigma>`` with distortion at most ``sqrt 2 * kappa(phi)``."""
    d_X = metric_X if metric_X is not None else phi.metric
    x = phi.sample_points(_probe_rng(4), PROBES)
    _check_order(sigma, d_X, x, 2, NotInvolution)
    F = involution_quotient_map(phi.evaluate, sigma)
    out_dim = phi.output_dim + phi.output_dim * (phi.output_dim + 1) // 2

    def quotient_metric(p, q):
        return np.minimum(d_X(p, q), d_X(p, sigma(q)))

    def orbit(rng, p):
        flip = rng.random(len(p)) < 0.5
        return np.where(flip.reshape((-1,) + (1,) * (np.ndim(p) - 1)), sigma(p), p)

    return EmbeddingHandle(
        name=name or f"c2[{phi.name}]",
        input_kind=phi.input_kind,
        input_shape=phi.input_shape,
        output_dim=out_dim,
        evaluate=F,
        metric=quotient_metric,
        alpha_claim=phi.alpha_claim,
        beta_claim=math.sqrt(2) * phi.beta_claim if phi.beta_claim is not None else None,
        kappa_claim=math.sqrt(2) * phi.kappa_upper if phi.kappa_upper is not None else None,
        provenance="order-2 isotypic split with an antipodal block",
        homogeneous=phi.homogeneous,
        sampler=phi.sample_points,
        orbit_sampler=orbit,
        params={"source": phi.name},
    )


def c2_mod_order3(
    phi: EmbeddingHandle,
    sigma: Callable[[np.ndarray], np.ndarray],
    metric_X: Callable | None = None,
) -> EmbeddingHandle:
    """Embedding of ``X / <sigma>`` for ``sigma`` of order 3; distortion at most ``3/2 * kappa(phi)``."""
    d_X = metric_X if metric_X is not None else phi.metric
    x = phi.sample_points(_probe_rng(5), PROBES)
    _check_order(sigma, d_X, x, 3, NotOrder3)
    omega = np.exp(2j * np.pi / 3)

    def F(x):
        f0 = phi.evaluate(x)
        f1 = phi.evaluate(sigma(x))
        f2 = phi.evaluate(sigma(sigma(x)))
        c0 = (f0 + f1 + f2) / 3
        w = math.sqrt(2) * (f0 + np.conj(omega) * f1 + omega * f2) / 3
        return np.concatenate([c0, embed_scalar_cyclic(3, w)], axis=-1)

    def quotient_metric(p, q):
        sq = sigma(q)
        return np.minimum(np.minimum(d_X(p, q), d_X(p, sq)), d_X(p, sigma(sq)))

    def orbit(rng, p):
        k = rng.integers(3, size=len(p)).reshape((-1,) + (1,) * (np.ndim(p) - 1))
        p1 = sigma(p)
        return np.where(k == 0, p, np.where(k == 1, p1, sigma(p1)))

    probe = F(phi.sample_points(_probe_rng(6), 1))
    return EmbeddingHandle(
        name=f"c3[{phi.name}]",
        input_kind=phi.input_kind,
        input_shape=phi.input_shape,
        output_dim=int(probe.shape[-1]),
        evaluate=F,
        metric=quotient_metric,
        alpha_claim=phi.alpha_claim,
        beta_claim=1.5 * phi.beta_claim if phi.beta_claim is not None else None,
        kappa_claim=1.5 * phi.kappa_upper if phi.kappa_upper is not None else None,
        provenance="order-3 isotypic split with a root-of-unity block",
        homogeneous=phi.homogeneous,
        sampler=phi.sample_points,
        orbit_sampler=orbit,
        params={"source": phi.name},
    )


# ---------------------------------------------------------------------------
# Max filtering


def max_filter_pairing(G, x, y) -> np.ndarray:
    """``max_g <g x, y>`` over the enumerated group."""
    if isinstance(G, ga.CONTINUOUS_FAMILIES) or isinstance(G, (ga.Wallpaper, ga.RectTorus)):
        raise InfiniteGroup(f"{type(G).__name__} is not finite")
    kind, _ = ga.ambient(G)
    mats = ga.element_matrices(G)
    xf = qm.real_flat(x, kind)
    yf = qm.real_flat(y, kind)
    return np.max(np.einsum("kij,...j,...i->...k", mats, xf, yf), axis=-1)


def max_filter_bound(order: int) -> float:
    """Distortion bound for a max filter bank with enough random templates."""
    return 4 * math.e**1.5 * order**2.5 * math.sqrt(math.log(math.e * order))


def max_filter_bank(G, templates=None, n: int | None = None, seed: int = 0) -> EmbeddingHandle:
    """``x -> (max_g <g x, a_i>)_i``; Gaussian templates drawn from ``seed`` when not given."""
    if isinstance(G, ga.CONTINUOUS_FAMILIES) or isinstance(G, (ga.Wallpaper, ga.RectTorus)):
        raise InfiniteGroup(f"{type(G).__name__} is not finite")
    kind, shape = ga.ambient(G)
    if templates is None:
        if n is None or n < 1:
            raise ValueError("give templates or a template count n >= 1")
        templates = ga.random_point(G, 1.0, seed, size=n)
    templates = np.asarray(templates)
    if templates.shape[0] < 1:
        raise ValueError("at least one template is required")
    order = len(ga.elements_of(G))
    beta = float(np.sqrt(np.sum(qm.real_flat(templates, kind) ** 2)))

    def evaluate(x):
        x = np.asarray(x)
        return max_filter_pairing(G, x[..., None, :], templates)

    return EmbeddingHandle(
        name=f"max_filter(n={templates.shape[0]})",
        input_kind=kind,
        input_shape=shape,
        output_dim=templates.shape[0],
        evaluate=evaluate,
        metric=qm.default_oracle(G),
        beta_claim=beta,
        kappa_claim=(1.0, max_filter_bound(order)),
        provenance="max filter bank with Gaussian templates",
        action=G,
        homogeneous=True,
        params={"seed": seed, "templates": templates.tolist(), "order": order},
    )
