"""Default numerical tolerances shared across modules."""

from dataclasses import dataclass, replace

TOL_FEAS = 1e-7
TOL_LIN = 1e-9
TOL_PIVOT = 1e-10
TOL_DUAL = 1e-9
TOL_FRAC = 1e-5


@dataclass(frozen=True)
class Tolerances:
    feas: float = TOL_FEAS
    lin: float = TOL_LIN
    pivot: float = TOL_PIVOT
    dual: float = TOL_DUAL
    frac: float = TOL_FRAC

    def with_overrides(self, **kw):
        return replace(self, **{k: float(v) for k, v in kw.items() if v is not None})


DEFAULT = Tolerances()
