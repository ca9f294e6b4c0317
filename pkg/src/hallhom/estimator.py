"""Scikit-learn style front end for the homogenization pipeline.

`Homogenizer` is a fit-once estimator: `fit` takes a MaterialSpec (or a
pre-sampled GridField), solves the zeroth-order cell problem, and exposes
the effective tensors as trailing-underscore attributes.  Field-dependent
quantities (magneto-resistance, gap, curl defect) are methods taking h;
first-order solves are cached per field direction.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import effective as ef
from . import solver as sv
from .microstructure import GridField, MaterialSpec, sample


class Homogenizer(BaseEstimator):
    """Estimate effective magneto-transport tensors of a periodic composite.

    Parameters
    ----------
    resolution : voxels per axis used when fitting a MaterialSpec.
    tol : relative divergence residual of the cell solves.
    max_iter : iteration budget per solve.
    reference : reference-medium constant (default: mid eigenvalue band).
    scheme : "conjugate_gradient" or "basic_fixed_point".
    """

    def __init__(self, resolution=32, tol=1e-8, max_iter=10000, reference=None,
                 scheme="conjugate_gradient"):
        self.resolution = resolution
        self.tol = tol
        self.max_iter = max_iter
        self.reference = reference
        self.scheme = scheme

    def _config(self):
        return sv.SolverConfig(
            reference=self.reference, tol=self.tol, max_iter=self.max_iter,
            scheme=self.scheme,
        )

    def fit(self, X, y=None):
        """Solve the zeroth-order cell problem for a MaterialSpec or GridField."""
        if isinstance(X, MaterialSpec):
            field = sample(X, self.resolution)
        elif isinstance(X, GridField):
            field = X
        else:
            raise TypeError("X must be a MaterialSpec or GridField")
        self.corrector_ = sv.solve_p0(field, self._config())
        self.sigma_eff_, self.sigma_eff_asym_ = ef.effective_conductivity(
            self.corrector_, with_asym=True
        )
        self.s_matrix_eff_ = ef.effective_s_matrix(self.corrector_)
        self.hall_eff_, self.hall_discrepancy_ = ef.effective_hall(
            self.corrector_, self.sigma_eff_, self.s_matrix_eff_
        )
        self._p1_cache = {}
        return self

    def _with_p1(self, h):
        h = np.asarray(h, dtype=float)
        key = tuple(np.round(h, 14))
        if key not in self._p1_cache:
            corr = sv.solve_p1(self.corrector_, h, self._config())
            self._p1_cache[key] = (corr.p1, corr.residual1)
        self.corrector_.h = h
        self.corrector_.p1, self.corrector_.residual1 = self._p1_cache[key]
        return self.corrector_

    def magnetoresistance(self, h):
        return ef.effective_magnetoresistance(self._with_p1(h), h)

    def dissipation_gap(self, h):
        return ef.dissipation_gap(self._with_p1(h), h)

    def curl_defect(self, h):
        return ef.curl_defect(self.corrector_, h)

    def report(self, h, outputs=("sigma", "hall", "magneto", "gap", "curl")):
        corr = self._with_p1(h) if {"magneto", "gap"} & set(outputs) else self.corrector_
        return ef.assemble_report(corr, h, outputs)
