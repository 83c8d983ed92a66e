"""Plane crystallographic groups used by the wallpaper metrics and embeddings.

Each supported signature is realised on a rectangular cell with side lengths
``a`` and ``b``. A group is stored as a finite list of affine coset
representatives ``x -> A x + c`` together with a translation lattice; every
group element is ``x -> A x + c + t`` for a representative and some lattice
vector ``t``. The lattice may be a sublattice of the full translation group,
in which case extra pure translations appear among the representatives.

Conventions (mirror lines and centres, in cell coordinates):

* ``o-rect``: translations by ``a Z x b Z``.
* ``**``: mirrors on the vertical lines ``x = k a``; translation ``(0, b)``.
* ``2*22``: mirrors on ``x = k a`` and ``y = k b``; half turn about ``(a/2, b/2)``.
* ``4*2``: square cell (``a == b``), mirrors on ``x = k a`` and ``y = k a``;
  quarter turn about ``(a/2, a/2)``.
* ``xx``: glide ``(x, y) -> (x + a/2, -y)``; translations by ``a Z x b Z``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidAction, UnsupportedSignature

SIGNATURES = ("o-rect", "**", "2*22", "4*2", "xx")

_ALIASES = {
    "o": "o-rect",
    "o-rect": "o-rect",
    "**": "**",
    "∗∗": "**",
    "2*22": "2*22",
    "2∗22": "2*22",
    "4*2": "4*2",
    "4∗2": "4*2",
    "xx": "xx",
    "××": "xx",
}

_ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])
_MIRROR_X = np.diag([-1.0, 1.0])
_MIRROR_Y = np.diag([1.0, -1.0])


def canonical_signature(signature: str) -> str:
    try:
        return _ALIASES[signature.strip()]
    except KeyError:
        raise UnsupportedSignature(f"unsupported wallpaper signature {signature!r}") from None


@dataclass(frozen=True, eq=False)
class WallpaperGeometry:
    signature: str
    a: float
    b: float
    linear: np.ndarray  # (k, 2, 2) linear parts of coset representatives
    shifts: np.ndarray  # (k, 2) translation parts, reduced into the cell
    basis: np.ndarray  # (2, 2) lattice basis vectors as columns

    @property
    def cell_lengths(self) -> np.ndarray:
        return np.array([self.basis[0, 0], self.basis[1, 1]])

    @property
    def cell_diameter(self) -> float:
        return float(np.linalg.norm(self.basis.sum(axis=1)))

    def reduce(self, x: np.ndarray) -> np.ndarray:
        """Translate points into the lattice cell ``[0, L1) x [0, L2)``."""
        L = self.cell_lengths
        return x - np.floor(x / L) * L

    def images(self, y: np.ndarray) -> np.ndarray:
        """Images of ``y`` (shape ``(..., 2)``) under the coset representatives.

        Returns shape ``(..., k, 2)``.
        """
        return np.einsum("kij,...j->...ki", self.linear, y) + self.shifts


def _compose(g, h):
    (A1, c1), (A2, c2) = g, h
    return A1 @ A2, A1 @ c2 + c1


def _closure(generators, lengths):
    L = np.asarray(lengths, dtype=float)

    def key(A, c):
        c = c - np.floor(c / L + 1e-12) * L
        c = np.where(np.abs(c - L) < 1e-9, 0.0, c)
        return tuple(np.round(A, 9).ravel()) + tuple(np.round(c, 9)), (A, c)

    identity = (np.eye(2), np.zeros(2))
    found = dict([key(*identity)])
    frontier = [found[next(iter(found))]]
    while frontier:
        nxt = []
        for g in frontier:
            for s in generators:
                k, val = key(*_compose(s, g))
                if k not in found:
                    found[k] = val
                    nxt.append(val)
        frontier = nxt
        if len(found) > 256:
            raise InvalidAction("wallpaper closure did not terminate")
    ordered = [found[k] for k in sorted(found, reverse=True)]
    return np.array([A for A, _ in ordered]), np.array([c for _, c in ordered])


@lru_cache(maxsize=64)
def wallpaper_geometry(signature: str, a: float, b: float) -> WallpaperGeometry:
    sig = canonical_signature(signature)
    if not (a > 0 and b > 0 and np.isfinite(a) and np.isfinite(b)):
        raise InvalidAction("wallpaper lattice lengths must be positive")
    if sig == "4*2" and abs(a - b) > 1e-12 * max(a, b):
        raise InvalidAction("signature 4*2 requires a square cell (a == b)")

    if sig == "o-rect":
        gens, lengths = [], (a, b)
    elif sig == "**":
        gens, lengths = [(_MIRROR_X, np.zeros(2))], (2 * a, b)
    elif sig == "2*22":
        gens = [
            (_MIRROR_X, np.zeros(2)),
            (_MIRROR_Y, np.zeros(2)),
            (-np.eye(2), np.array([a, b])),
        ]
        lengths = (2 * a, 2 * b)
    elif sig == "4*2":
        gens = [
            (_MIRROR_X, np.zeros(2)),
            (_MIRROR_Y, np.zeros(2)),
            (_ROT90, np.array([a, 0.0])),
        ]
        lengths = (2 * a, 2 * a)
    else:  # xx
        gens, lengths = [(_MIRROR_Y, np.array([a / 2, 0.0]))], (a, b)

    linear, shifts = _closure(gens, lengths)
    return WallpaperGeometry(sig, float(a), float(b), linear, shifts, np.diag(lengths).astype(float))


def fold_interval(t: np.ndarray, width: float) -> np.ndarray:
    """Triangle-wave fold of ``t`` into ``[0, width]`` (mirrors at multiples of width)."""
    s = np.mod(t, 2 * width)
    return np.where(s > width, 2 * width - s, s)


def lattice_min_distance(geom: WallpaperGeometry, x: np.ndarray, y: np.ndarray, radius_scale: float = 1.0) -> np.ndarray:
    """Exact orbit distance between batches of plane points.

    The identity image bounds the answer by ``R = |x - y|`` once both points
    sit in the same cell, so only lattice vectors ``t`` with
    ``|x - g y - t| <= R`` can improve on it; all of those are enumerated.
    ``radius_scale`` enlarges the search ball (used to test exactness).
    """
    x = geom.reduce(np.asarray(x, dtype=float))
    y = geom.reduce(np.asarray(y, dtype=float))
    batch_shape = np.broadcast_shapes(x.shape, y.shape)[:-1]
    x = np.broadcast_to(x, batch_shape + (2,)).reshape(-1, 2)
    y = np.broadcast_to(y, batch_shape + (2,)).reshape(-1, 2)

    radius = np.linalg.norm(x - y, axis=-1) * radius_scale + 1e-12
    diff = x[:, None, :] - geom.images(y)  # (N, k, 2)
    L = geom.cell_lengths
    # Coefficient box covering every lattice vector within `radius` of diff.
    lo = np.floor((diff - radius[:, None, None]) / L).astype(np.int64)
    hi = np.ceil((diff + radius[:, None, None]) / L).astype(np.int64)
    span = int(np.max(hi - lo)) + 1
    offsets = np.arange(span)
    kx = lo[..., 0, None] + offsets  # (N, k, span)
    ky = lo[..., 1, None] + offsets
    dx = diff[..., 0, None] - kx * L[0]
    dy = diff[..., 1, None] - ky * L[1]
    # The lattice is rectangular, so the squared norm separates by coordinate.
    # Entries outside [lo, hi] are still genuine lattice vectors; keeping them is harmless.
    sq = (dx**2).min(axis=-1) + (dy**2).min(axis=-1)  # (N, k)
    best = np.sqrt(sq.min(axis=-1))
    return best.reshape(batch_shape)
