"""Power-law scaling fits ``T(N) = a * N**b`` in natural-log space."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import FitError


@dataclass(frozen=True)
class ScalingPoint:
    n: float
    t_mbps: float

    def __post_init__(self):
        if not self.n >= 1:
            raise FitError(f"UE count must be >= 1, got {self.n}")
        if not self.t_mbps > 0:
            raise FitError(f"goodput must be positive, got {self.t_mbps}")


@dataclass(frozen=True)
class PowerLawFit:
    a: float
    b: float
    r2_log: float

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "r2_log": self.r2_log}


def fit_power_law(points: Iterable[ScalingPoint | tuple[float, float]]) -> PowerLawFit:
    """Unweighted OLS of ln t on ln n.

    When every t is equal the fit is flat: b = 0, a = t, r2_log = 1.
    """
    pts = [p if isinstance(p, ScalingPoint) else ScalingPoint(*p) for p in points]
    if len({p.n for p in pts}) < 2:
        raise FitError("power-law fit needs at least two distinct UE counts")
    xs = [math.log(p.n) for p in pts]
    ys = [math.log(p.t_mbps) for p in pts]
    k = len(pts)
    mx = math.fsum(xs) / k
    my = math.fsum(ys) / k
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    b = sxy / sxx
    intercept = my - b * mx
    ss_tot = math.fsum((y - my) ** 2 for y in ys)
    ss_res = math.fsum((y - (intercept + b * x)) ** 2 for x, y in zip(xs, ys))
    if ss_tot == 0:
        # all goodputs identical; slope is exactly zero
        return PowerLawFit(a=math.exp(my), b=0.0, r2_log=1.0)
    return PowerLawFit(a=math.exp(intercept), b=b, r2_log=1.0 - ss_res / ss_tot)


def predict(fit: PowerLawFit, n: float) -> float:
    if n < 1:
        raise FitError(f"prediction needs n >= 1, got {n}")
    return fit.a * n ** fit.b


def collapse_ratio(t_at_1: float, t_at_nmax: float) -> float:
    if t_at_1 <= 0 or t_at_nmax <= 0:
        raise FitError("collapse ratio needs positive goodputs")
    return t_at_1 / t_at_nmax


def parse_points(text: str) -> list[ScalingPoint]:
    """``"1:114.59,3:65.21"`` -> points. Also accepts one ``n,t`` pair per line."""
    pts = []
    chunks = text.replace("\n", ";").split(";") if "\n" in text.strip() else text.split(",")
    for chunk in chunks:
        chunk = chunk.strip()
        if not chunk or chunk.startswith("#") or chunk.lower().startswith("n,"):
            continue
        sep = ":" if ":" in chunk else ","
        n_tok, _, t_tok = chunk.partition(sep)
        try:
            pts.append(ScalingPoint(float(n_tok), float(t_tok)))
        except ValueError:
            raise FitError(f"bad scaling point {chunk!r}; expected n:t") from None
    return pts
