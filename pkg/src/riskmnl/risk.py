"""Risk criteria on reward distributions and their boundedness/Lipschitz constants.

Every criterion is a score to be maximised. Textual encodings (used by the CLI
and config files)::

    mean  moment:2  var:0.5  cvar:0.05  entropy:1.0  btsv:0.5
    negvar  meanvar:1.0  sharpe:0.2,0.01  sortino:0.2,0.01
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels as kern
from .distribution import InvalidParameter, RewardDistribution

KINDS = ("var", "cvar", "moment", "entropy", "btsv", "negvar", "meanvar", "sharpe", "sortino")

_CODES = {
    "var": kern.VAR,
    "cvar": kern.CVAR,
    "moment": kern.MOMENT,
    "entropy": kern.ENTROPY,
    "btsv": kern.BTSV,
    "negvar": kern.NEGVAR,
    "meanvar": kern.MEANVAR,
    "sharpe": kern.SHARPE,
    "sortino": kern.SORTINO,
}


@dataclass(frozen=True)
class RiskCriterion:
    """A criterion kind with its parameters, validated on construction.

    Unused parameters stay ``None``. ``target`` is the threshold ``r`` of the
    semi-variance, Sharpe and Sortino criteria.
    """

    kind: str
    alpha: Optional[float] = None
    n: Optional[int] = None
    theta: Optional[float] = None
    target: Optional[float] = None
    eps: Optional[float] = None
    rho: Optional[float] = None

    def __post_init__(self):
        need = {
            "var": ("alpha",),
            "cvar": ("alpha",),
            "moment": ("n",),
            "entropy": ("theta",),
            "btsv": ("target",),
            "negvar": (),
            "meanvar": ("rho",),
            "sharpe": ("target", "eps"),
            "sortino": ("target", "eps"),
        }
        if self.kind not in need:
            raise InvalidParameter(f"unknown criterion kind {self.kind!r}")
        for name in ("alpha", "n", "theta", "target", "eps", "rho"):
            value = getattr(self, name)
            if name in need[self.kind]:
                if value is None or not math.isfinite(value):
                    raise InvalidParameter(f"{self.kind} requires a finite {name}")
            elif value is not None:
                raise InvalidParameter(f"{self.kind} takes no {name}")
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise InvalidParameter(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if self.n is not None and (int(self.n) != self.n or self.n < 1):
            raise InvalidParameter(f"moment order must be a positive integer, got {self.n!r}")
        if self.theta is not None and not self.theta > 0.0:
            raise InvalidParameter(f"theta must be positive, got {self.theta!r}")
        if self.target is not None and not 0.0 <= self.target <= 1.0:
            raise InvalidParameter(f"target must lie in [0, 1], got {self.target!r}")
        if self.eps is not None and not self.eps > 0.0:
            raise InvalidParameter(f"eps must be positive, got {self.eps!r}")
        if self.rho is not None and not self.rho > 0.0:
            raise InvalidParameter(f"rho must be positive, got {self.rho!r}")
        if self.n is not None:
            object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "_params", self._pack())

    # constructors -----------------------------------------------------------

    @classmethod
    def mean(cls):
        return cls("moment", n=1)

    @classmethod
    def var(cls, alpha):
        return cls("var", alpha=alpha)

    @classmethod
    def cvar(cls, alpha):
        return cls("cvar", alpha=alpha)

    @classmethod
    def moment(cls, n):
        return cls("moment", n=n)

    @classmethod
    def entropy(cls, theta):
        return cls("entropy", theta=theta)

    @classmethod
    def btsv(cls, target):
        return cls("btsv", target=target)

    @classmethod
    def negvar(cls):
        return cls("negvar")

    @classmethod
    def meanvar(cls, rho):
        return cls("meanvar", rho=rho)

    @classmethod
    def sharpe(cls, target, eps):
        return cls("sharpe", target=target, eps=eps)

    @classmethod
    def sortino(cls, target, eps):
        return cls("sortino", target=target, eps=eps)

    # encoding ---------------------------------------------------------------

    @classmethod
    def parse(cls, text: str) -> "RiskCriterion":
        name, _, rest = text.strip().partition(":")
        name = name.strip().lower()
        try:
            args = [float(a) for a in rest.split(",")] if rest.strip() else []
        except ValueError:
            raise InvalidParameter(f"bad criterion parameters in {text!r}") from None
        arity = {"mean": 0, "negvar": 0, "var": 1, "cvar": 1, "moment": 1, "entropy": 1,
                 "btsv": 1, "meanvar": 1, "sharpe": 2, "sortino": 2}
        if name not in arity:
            raise InvalidParameter(f"unknown criterion {name!r}")
        if len(args) != arity[name]:
            raise InvalidParameter(f"{name} takes {arity[name]} parameter(s), got {len(args)}")
        if name == "moment" and args[0] != int(args[0]):
            raise InvalidParameter(f"moment order must be an integer, got {args[0]!r}")
        return {
            "mean": lambda: cls.mean(),
            "negvar": lambda: cls.negvar(),
            "var": lambda: cls.var(args[0]),
            "cvar": lambda: cls.cvar(args[0]),
            "moment": lambda: cls.moment(int(args[0])),
            "entropy": lambda: cls.entropy(args[0]),
            "btsv": lambda: cls.btsv(args[0]),
            "meanvar": lambda: cls.meanvar(args[0]),
            "sharpe": lambda: cls.sharpe(*args),
            "sortino": lambda: cls.sortino(*args),
        }[name]()

    def encode(self) -> str:
        k = self.kind
        if k == "moment":
            return "mean" if self.n == 1 else f"moment:{self.n}"
        if k == "negvar":
            return "negvar"
        if k in ("sharpe", "sortino"):
            return f"{k}:{self.target!r},{self.eps!r}"
        (value,) = [getattr(self, p) for p in ("alpha", "theta", "target", "rho") if getattr(self, p) is not None]
        return f"{k}:{value!r}"

    def __str__(self) -> str:
        return self.encode()

    # kernel view ------------------------------------------------------------

    @property
    def code(self) -> int:
        return kern.MEAN if self.is_mean else _CODES[self.kind]

    @property
    def params(self) -> np.ndarray:
        return self._params

    def _pack(self) -> np.ndarray:
        p = np.zeros(2)
        first = {"var": self.alpha, "cvar": self.alpha, "moment": self.n, "entropy": self.theta,
                 "btsv": self.target, "meanvar": self.rho, "sharpe": self.target,
                 "sortino": self.target}.get(self.kind)
        if first is not None:
            p[0] = first
        if self.eps is not None:
            p[1] = self.eps
        p.setflags(write=False)
        return p

    @property
    def is_mean(self) -> bool:
        return self.kind == "moment" and self.n == 1


@dataclass(frozen=True)
class CriterionConstants:
    gamma1: float
    gamma2: Optional[float]


def constants(c: RiskCriterion) -> CriterionConstants:
    """Boundedness constant gamma1 and one-sided Lipschitz constant gamma2.

    gamma2 is ``None`` for VaR, which is discontinuous in the preferences.
    """
    k = c.kind
    if k == "var":
        return CriterionConstants(1.0, None)
    if k == "cvar":
        return CriterionConstants(1.0, 3.0 / c.alpha)
    if k == "moment":
        return CriterionConstants(1.0, 1.0)
    if k == "entropy":
        return CriterionConstants(1.0, 2.0 * math.exp(c.theta) / c.theta)
    if k == "btsv":
        return CriterionConstants(c.target ** 2, 2.0 * c.target ** 2)
    if k == "negvar":
        return CriterionConstants(0.25, 6.0)
    if k == "meanvar":
        return CriterionConstants(1.0 + c.rho / 4.0, 2.0 + 6.0 * c.rho)
    if k == "sharpe":
        return CriterionConstants(c.eps ** -0.5, 2.0 * c.eps ** -0.5 + 3.0 * c.eps ** -1.5)
    if k == "sortino":
        return CriterionConstants(c.eps ** -0.5, 2.0 * c.eps ** -0.5 + c.eps ** -1.5)
    raise InvalidParameter(k)


def evaluate(c: RiskCriterion, F: RewardDistribution) -> float:
    """Value of criterion ``c`` on ``F`` (larger is better)."""
    return float(kern.evaluate_sorted(c.code, c.params, F.payoffs, F.masses))


def empirical_evaluate(c: RiskCriterion, samples: Sequence[float]) -> float:
    """Evaluate ``c`` on the empirical distribution of ``samples``."""
    return evaluate(c, RewardDistribution.empirical(samples))
