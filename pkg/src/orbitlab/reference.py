"""Reference distortion constants.

``closed_form`` strings are Python expressions over ``sqrt``, ``sin``, ``pi``
(and ``r`` / ``m`` for parametric rows) so tests can re-derive every float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_NS = {"sqrt": math.sqrt, "sin": math.sin, "pi": math.pi}


@dataclass(frozen=True)
class ReferenceEntry:
    label: str
    low: float
    high: float
    closed_form: str
    citation: str

    @property
    def exact(self) -> bool:
        return self.low == self.high

    @property
    def value(self) -> float | tuple[float, float]:
        return self.low if self.exact else (self.low, self.high)

    def evaluate_closed_form(self) -> tuple[float, float]:
        """Re-evaluate the closed form; an interval is written ``[lo, hi]``."""
        text = self.closed_form.strip()
        if text.startswith("["):
            lo, hi = text[1:-1].split(",")
            return float(eval(lo, {"__builtins__": {}}, _NS)), float(eval(hi, {"__builtins__": {}}, _NS))
        v = float(eval(text, {"__builtins__": {}}, _NS))
        return v, v


def _entry(label: str, closed_form: str, citation: str) -> ReferenceEntry:
    probe = ReferenceEntry(label, 0.0, 0.0, closed_form, citation)
    lo, hi = probe.evaluate_closed_form()
    return ReferenceEntry(label, lo, hi, closed_form, citation)


def _cyclic(r: int) -> str:
    return f"{r}*sin(pi/(2*{r}))"


def reference_table() -> list[ReferenceEntry]:
    rows = [
        _entry("O(1)/R^n", "sqrt(2)", "known: antipodal tensor map"),
        _entry("U(1)/C^n", "sqrt(2)", "known: phase tensor map"),
        _entry("reflection", "1", "known: chamber fold is an isometry"),
        _entry("rect-lattice", "pi/2", "known: product of round circles"),
        _entry("O(r)", "sqrt(2)", "gram square root"),
        _entry("U(r)", "sqrt(2)", "gram square root, complex"),
        _entry("SO(r)", "[sqrt(2), 2*sqrt(2)]", "gram root plus scaled Plucker invariant"),
        _entry("alternating", "[sqrt(2), 2]", "glued Weyl chambers"),
        _entry("**", "pi/2", "wallpaper: mirror fold times circle"),
        _entry("2*22", "sqrt(2)", "wallpaper: rectangle modulo half turn"),
        _entry("4*2", "2*sqrt(2-sqrt(2))", "wallpaper: square modulo quarter turn"),
        _entry("xx", "[pi/2, pi/sqrt(2)]", "wallpaper: torus modulo glide"),
        _entry("E(r), n=2", "1", "landmarks: centred pair"),
        _entry("E(r), n>=3", "sqrt(2)", "landmarks: centred gram root"),
        _entry("|G|=1 contortion", "1", "contortion"),
        _entry("|G|=2 contortion", "sqrt(2)", "contortion"),
        _entry("|G|=3 contortion", "3/2", "contortion"),
        _entry("C4 contortion", "[2*sqrt(2-sqrt(2)), 2]", "contortion"),
        _entry("C2xC2 contortion", "[sqrt(2), 2]", "contortion"),
    ]
    for r in (2, 3, 4, 8):
        rows.append(_entry(f"C_{r}/C^n", _cyclic(r), "roots of unity: phase/tensor-power mixture"))
    for m in (3, 4, 6):
        rows.append(_entry(f"I2({m}) alternating", _cyclic(m), "rotation subgroup of a dihedral group"))
    return rows


def _normalise(label: str) -> str:
    return label.replace("∗", "*").replace("×", "x").replace(" ", "").lower()


def lookup(label: str) -> ReferenceEntry:
    key = _normalise(label)
    for e in reference_table():
        if _normalise(e.label) == key:
            return e
    raise KeyError(label)


def cyclic_constant(r: int) -> float:
    return r * math.sin(math.pi / (2 * r))
