"""Named embedding constructors used by configs and suites."""

from __future__ import annotations

import inspect
from typing import Any, Callable

from . import embeddings as em
from . import group_actions as ga
from . import combinators as cb
from .errors import ConfigError


def _max_filter(group: dict, n: int, seed: int = 0) -> em.EmbeddingHandle:
    return cb.max_filter_bank(ga.spec_from_record(group), n=n, seed=seed)


def _c2_sign(d: int) -> em.EmbeddingHandle:
    """``R^d`` modulo ``-id`` through the order-2 pipeline applied to the identity."""
    return cb.c2_mod_involution(em.identity_handle(d), lambda x: -x)


EMBEDDINGS: dict[str, Callable[..., em.EmbeddingHandle]] = {
    "scalar_cyclic": em.scalar_cyclic_handle,
    "complex_phase": em.complex_phase_handle,
    "real_antipodal": em.real_antipodal_handle,
    "gram_sqrt": em.gram_sqrt_handle,
    "unitary_gram_sqrt": em.unitary_gram_handle,
    "special_orthogonal": em.special_orthogonal_handle,
    "chamber": em.chamber_handle,
    "alternating": em.alternating_handle,
    "circle": em.circle_handle,
    "rect_torus": em.rect_torus_handle,
    "wallpaper": em.wallpaper_handle,
    "landmarks": em.landmarks_handle,
    "identity": em.identity_handle,
    "sorted_projections": em.sorted_projections_handle,
    "max_filter": _max_filter,
    "c2_sign": _c2_sign,
}


def build(name: str, params: dict[str, Any] | None = None) -> em.EmbeddingHandle:
    """Construct a handle by name; parameter names are checked strictly."""
    params = dict(params or {})
    try:
        factory = EMBEDDINGS[name]
    except KeyError:
        raise ConfigError(f"unknown embedding {name!r}", key="embedding.name") from None
    sig = inspect.signature(factory)
    for key in params:
        if key not in sig.parameters:
            raise ConfigError(f"unknown parameter {key!r} for embedding {name!r}", key=f"embedding.params.{key}")
    try:
        sig.bind(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name!r}: {exc}", key="embedding.params") from None
    if "lengths" in params:
        params["lengths"] = tuple(params["lengths"])
    try:
        return factory(**params)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"cannot build {name!r}: {exc}", key="embedding.params") from None
