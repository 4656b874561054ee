"""Log transform of a geometric program into a log-sum-exp convex program.

With ``v = scale * exp(w)`` every posynomial ``sum_t c_t prod v^a_t`` becomes
``f(w) = log sum_t exp(a_t . w + b_t)`` with
``b_t = log c_t + a_t . log(scale)``.  Function 0 is the objective, functions
``1..m`` are the constraints (``f_i(w) <= 0``).
"""
from __future__ import annotations

import math

import numpy as np

from .. import kernels
from .._accel import USE_NUMBA
from .posynomial import GpFormError


class ConvexProgram:
    def __init__(self, names, scale, indptr, indices, data, b, seg, lower, upper, w0,
                 constraint_names=()):
        self.names = list(names)
        self.scale = np.asarray(scale, dtype=float)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.seg = np.asarray(seg, dtype=np.int64)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.w0 = np.asarray(w0, dtype=float)
        self.constraint_names = list(constraint_names)
        self._dense = None

    @property
    def n(self):
        return len(self.names)

    @property
    def m(self):
        return self.seg.shape[0] - 2

    @property
    def n_terms(self):
        return self.b.shape[0]

    def dense_rows(self):
        if self._dense is None:
            self._dense = kernels._dense_rows(self.indptr, self.indices, self.data, self.n)
        return self._dense

    def values(self, w):
        """All function values: ``[f0, f1, ..., fm]``."""
        w = np.ascontiguousarray(w, dtype=float)
        if USE_NUMBA:
            return kernels.lse_values_numba(self.indptr, self.indices, self.data, self.b, self.seg, w)
        return kernels.lse_values_numpy(self.indptr, self.indices, self.data, self.b, self.seg, w,
                                        dense=self.dense_rows())

    def derivs(self, w, cterm, couter):
        w = np.ascontiguousarray(w, dtype=float)
        cterm = np.ascontiguousarray(cterm, dtype=float)
        couter = np.ascontiguousarray(couter, dtype=float)
        if USE_NUMBA:
            return kernels.lse_derivs_numba(self.indptr, self.indices, self.data, self.b, self.seg,
                                            w, cterm, couter)
        return kernels.lse_derivs_numpy(self.indptr, self.indices, self.data, self.b, self.seg,
                                        w, cterm, couter, dense=self.dense_rows())

    def gradient(self, i, w):
        e = np.zeros(self.m + 1)
        e[i] = 1.0
        return self.derivs(w, e, np.zeros_like(e))[0]

    def hessian(self, i, w):
        e = np.zeros(self.m + 1)
        e[i] = 1.0
        return self.derivs(w, e, np.zeros_like(e))[1]

    def to_physical(self, w):
        return dict(zip(self.names, (self.scale * np.exp(w)).tolist()))

    def from_physical(self, assignment):
        return np.log(np.array([assignment[k] for k in self.names], dtype=float) / self.scale)

    def with_slack(self):
        """Phase-I program: minimize ``s`` subject to ``f_i(w) - s <= 0``.

        The slack is appended as the last variable; constraint rows gain a
        ``-1`` coefficient on it and the objective becomes the single affine
        term ``s``.
        """
        n = self.n
        t_obj = self.seg[1]
        nnz = np.diff(self.indptr)[t_obj:]
        q_obj = self.indptr[t_obj]
        # every constraint row keeps its entries and gains one slack entry
        indptr = np.concatenate([[0, 1], 1 + np.cumsum(nnz + 1)])
        indices = np.empty(indptr[-1], dtype=np.int64)
        data = np.empty(indptr[-1])
        indices[0], data[0] = n, 1.0
        slack_pos = indptr[2:] - 1
        keep = np.ones(indptr[-1], dtype=bool)
        keep[0] = False
        keep[slack_pos] = False
        indices[keep] = self.indices[q_obj:]
        data[keep] = self.data[q_obj:]
        indices[slack_pos] = n
        data[slack_pos] = -1.0
        b = np.concatenate([[0.0], self.b[t_obj:]])
        seg = np.concatenate([[0], self.seg[1:] - t_obj + 1])
        return ConvexProgram(self.names + ["__slack__"], np.append(self.scale, 1.0), indptr, indices,
                             data, b, seg, np.append(self.lower, -np.inf), np.append(self.upper, np.inf),
                             np.append(self.w0, 0.0), self.constraint_names)


def to_convex(problem):
    """Compile a :class:`GpProblem` into a :class:`ConvexProgram`."""
    problem.validate()
    names = list(problem.variables)
    col = {k: j for j, k in enumerate(names)}
    scale = np.array([problem.variables[k].scale for k in names])
    log_scale = {k: math.log(problem.variables[k].scale) for k in names}
    indptr, indices, data, b, seg = [0], [], [], [], [0]
    for fun in [problem.objective] + list(problem.constraints):
        for term in fun.terms:
            if not term.coefficient > 0:
                raise GpFormError("non-positive coefficient")
            bt = math.log(term.coefficient)
            for k, e in term.exponents.items():
                indices.append(col[k])
                data.append(e)
                bt += e * log_scale[k]
            indptr.append(len(indices))
            b.append(bt)
        seg.append(len(b))
    with np.errstate(divide="ignore"):
        lower = np.log(np.array([problem.variables[k].lower for k in names]) / scale)
        upper = np.log(np.array([problem.variables[k].upper for k in names]) / scale)
    w0 = np.log(np.array([problem.variables[k].init for k in names]) / scale)
    return ConvexProgram(names, scale, indptr, indices, data, b, seg, lower, upper, w0,
                         problem.constraint_names)
