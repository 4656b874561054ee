"""Monomials, posynomials and geometric programs in standard form."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from numbers import Real


class GpFormError(ValueError):
    """Raised when an expression or problem leaves GP standard form."""


def _merge(a, b, sign=1.0):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0.0) + sign * v
        if out[k] == 0.0:
            del out[k]
    return out


class Monomial:
    __slots__ = ("coefficient", "exponents")

    def __init__(self, coefficient=1.0, exponents=None):
        coefficient = float(coefficient)
        if not coefficient > 0 or not math.isfinite(coefficient):
            raise GpFormError(f"monomial coefficient must be positive and finite, got {coefficient}")
        self.coefficient = coefficient
        self.exponents = {k: float(v) for k, v in (exponents or {}).items() if v != 0}

    @classmethod
    def var(cls, name):
        return cls(1.0, {name: 1.0})

    def __mul__(self, other):
        if isinstance(other, Monomial):
            return Monomial(self.coefficient * other.coefficient, _merge(self.exponents, other.exponents))
        if isinstance(other, Posynomial):
            return other * self
        if isinstance(other, Real):
            return Monomial(self.coefficient * other, self.exponents)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Monomial):
            return Monomial(self.coefficient / other.coefficient, _merge(self.exponents, other.exponents, -1.0))
        if isinstance(other, Real):
            return Monomial(self.coefficient / other, self.exponents)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, Real):
            return Monomial(other, {}) / self
        return NotImplemented

    def __pow__(self, p):
        return Monomial(self.coefficient ** p, {k: v * p for k, v in self.exponents.items()})

    def __add__(self, other):
        return Posynomial([self]) + other

    __radd__ = __add__

    def variables(self):
        return set(self.exponents)

    def eval(self, assignment):
        val = self.coefficient
        for name, e in self.exponents.items():
            try:
                v = assignment[name]
            except KeyError:
                raise KeyError(f"variable {name!r} not assigned") from None
            if not v > 0:
                raise ValueError(f"variable {name!r} must be positive, got {v}")
            val *= v ** e
        return val

    def __repr__(self):
        return format_monomial(self)


class Posynomial:
    __slots__ = ("terms",)

    def __init__(self, terms):
        terms = list(terms)
        if not terms:
            raise GpFormError("a posynomial needs at least one term")
        for t in terms:
            if not isinstance(t, Monomial):
                raise GpFormError(f"posynomial terms must be monomials, got {type(t).__name__}")
        self.terms = terms

    def __add__(self, other):
        if isinstance(other, Monomial):
            return Posynomial(self.terms + [other])
        if isinstance(other, Posynomial):
            return Posynomial(self.terms + other.terms)
        if isinstance(other, Real):
            return Posynomial(self.terms + [Monomial(other)])
        return NotImplemented

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, (Monomial, Real)):
            return Posynomial([t * other for t in self.terms])
        if isinstance(other, Posynomial):
            return Posynomial([a * b for a in self.terms for b in other.terms])
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (Monomial, Real)):
            return Posynomial([t / other for t in self.terms])
        return NotImplemented

    def __len__(self):
        return len(self.terms)

    def variables(self):
        out = set()
        for t in self.terms:
            out |= t.variables()
        return out

    def eval(self, assignment):
        return sum(t.eval(assignment) for t in self.terms)

    def __repr__(self):
        return " + ".join(format_monomial(t) for t in self.terms)


def as_posynomial(expr):
    if isinstance(expr, Posynomial):
        return expr
    if isinstance(expr, Monomial):
        return Posynomial([expr])
    if isinstance(expr, Real):
        return Posynomial([Monomial(expr)])
    raise GpFormError(f"cannot interpret {type(expr).__name__} as a posynomial")


def evaluate(expr, assignment):
    """Value of a monomial or posynomial at a positive assignment."""
    return as_posynomial(expr).eval(assignment)


@dataclass
class Variable:
    name: str
    init: float
    lower: float = 0.0
    upper: float = math.inf
    scale: float = 1.0


@dataclass
class GpProblem:
    """``minimize objective`` subject to ``constraint <= 1`` for every constraint.

    Variable bounds in the registry are box hints handled by the solver; they
    are not counted among the constraints.
    """
    objective: Posynomial | None = None
    constraints: list = field(default_factory=list)
    constraint_names: list = field(default_factory=list)
    variables: dict = field(default_factory=dict)

    def add_variable(self, name, init, lower=0.0, upper=math.inf, scale=None):
        if name in self.variables:
            raise GpFormError(f"duplicate variable {name!r}")
        if scale is None:
            scale = init
        self.variables[name] = Variable(name, float(init), float(lower), float(upper), float(scale))
        return Monomial.var(name)

    def minimize(self, expr):
        self.objective = as_posynomial(expr)

    def add_constraint(self, expr, name=None):
        self.constraints.append(as_posynomial(expr))
        self.constraint_names.append(name or f"c{len(self.constraints) - 1}")

    @property
    def n_variables(self):
        return len(self.variables)

    @property
    def n_constraints(self):
        return len(self.constraints)

    @property
    def n_terms(self):
        """Monomial terms across the constraints (objective excluded)."""
        return sum(len(c) for c in self.constraints)

    def initial_assignment(self):
        return {v.name: v.init for v in self.variables.values()}

    def validate(self):
        if self.objective is None:
            raise GpFormError("objective not set")
        used = self.objective.variables()
        for c in self.constraints:
            used |= c.variables()
        missing = used - set(self.variables)
        if missing:
            raise GpFormError(f"unregistered variables: {sorted(missing)}")
        for v in self.variables.values():
            if not v.init > 0 or not v.scale > 0:
                raise GpFormError(f"variable {v.name!r} needs positive init and scale")
            if v.lower < 0 or v.upper <= v.lower:
                raise GpFormError(f"variable {v.name!r} has an empty or negative box")
        return self


def format_monomial(m):
    parts = [f"{m.coefficient:.17g}"]
    parts += [f"{k}^{v:.17g}" for k, v in sorted(m.exponents.items())]
    return " * ".join(parts)


def dump(problem):
    """Human-readable listing, one function per line."""
    lines = [f"minimize: {problem.objective!r}"]
    for name, c in zip(problem.constraint_names, problem.constraints):
        lines.append(f"{name}: {c!r} <= 1")
    for v in problem.variables.values():
        lines.append(f"var {v.name}: init={v.init:.17g} lower={v.lower:.17g} "
                     f"upper={v.upper:.17g} scale={v.scale:.17g}")
    return "\n".join(lines) + "\n"
