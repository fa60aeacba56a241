"""The m-Hessian operator, its linearization, and polarized mixed products.

Normalization, fixed here once and used everywhere: with g = omega + dd^c u
and lambda the eigenvalues of g relative to omega,

    sigma_m(u) := (g^m wedge omega^{n-m}) / omega^n = S_m(lambda) / C(n, m),

so the flat metric is the exact fixed point sigma_m(0) = 1.  A log S_m
formulation differs from log sigma_m by the additive constant log C(n, m),
which is absorbed into the data term of any equation written against it.

S_k(lambda(B)) equals the sum of k-by-k principal minors of B = omega^{-1} g,
so sigma and the cone mask are evaluated from closed-form traces without an
eigensolve; eigenvalue/eigenvector pairs are computed only where the
linearization needs its frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product as _iproduct

import numpy as np
import scipy.linalg
from scipy.stats import qmc

from .errors import ConeBreachError, InputError
from .geometry import ScalarField, complex_hessian_array
from .hermlin import check_hermitian, cholesky_inverse, generalized_eigh
from .symfunc import elementary_symmetric_table

__all__ = [
    "OperatorValue",
    "LinearizationField",
    "sigma_m",
    "linearization",
    "apply_linearization",
    "mixed_product",
    "sigma_of_form",
    "polarization_constant",
]


@dataclass
class OperatorValue:
    sigma: ScalarField
    cone_mask: np.ndarray  # strict Gamma_m membership per point


@dataclass
class LinearizationField:
    """Eigenframe and weights of the linearized operator at a state u.

    weights[..., k] = S_{m-1;k}(lambda) / S_m(lambda) in the omega-orthonormal
    eigenframe; q is the zeroth-order coefficient (1 for the exponential
    equation, epsilon or 1/epsilon in the normalized and envelope modes).
    """

    grid: object
    weights: np.ndarray  # grid.shape + (n,)
    frame: np.ndarray  # grid.shape + (n, n), columns omega-orthonormal
    q: float
    _coeff: np.ndarray | None = field(default=None, repr=False)

    def coefficient_matrices(self):
        """A = sum_k w_k e_k e_k^*; apply_linearization contracts tr(A h(v))."""
        if self._coeff is None:
            self._coeff = np.einsum(
                "...jk,...k,...lk->...jl",
                self.frame,
                self.weights.astype(complex),
                np.conj(self.frame),
            )
        return self._coeff


def _relative_matrices(g, metric):
    """B = omega^{-1} g; similar to a Hermitian matrix, so spec(B) is real."""
    if metric.constant:
        return np.linalg.inv(metric.form) @ g
    return np.linalg.solve(metric.form, g)


def _minor_sums(B, kmax):
    """S_1..S_kmax of the (real) spectrum of B via principal-minor sums."""
    n = B.shape[-1]
    out = np.ones(B.shape[:-2] + (kmax + 1,), dtype=float)
    t1 = np.trace(B, axis1=-2, axis2=-1).real
    if kmax >= 1:
        out[..., 1] = t1
    if kmax >= 2:
        if n == 2:
            det2 = (B[..., 0, 0] * B[..., 1, 1] - B[..., 0, 1] * B[..., 1, 0]).real
            out[..., 2] = det2
        else:
            s2 = (
                B[..., 0, 0] * B[..., 1, 1] - B[..., 0, 1] * B[..., 1, 0]
                + B[..., 0, 0] * B[..., 2, 2] - B[..., 0, 2] * B[..., 2, 0]
                + B[..., 1, 1] * B[..., 2, 2] - B[..., 1, 2] * B[..., 2, 1]
            )
            out[..., 2] = s2.real
    if kmax >= 3:
        a, b, c = B[..., 0, 0], B[..., 0, 1], B[..., 0, 2]
        d, e, f = B[..., 1, 0], B[..., 1, 1], B[..., 1, 2]
        g_, h_, i_ = B[..., 2, 0], B[..., 2, 1], B[..., 2, 2]
        out[..., 3] = (a * (e * i_ - f * h_) - b * (d * i_ - f * g_)
                       + c * (d * h_ - e * g_)).real
    return out


def sk_table_of_state(g, metric, kmax):
    """Table of S_1..S_kmax of the relative eigenvalues at every grid point."""
    n = g.shape[-1]
    if kmax > n:
        raise InputError(f"degree {kmax} exceeds dimension {n}")
    if n <= 3:
        return _minor_sums(_relative_matrices(g, metric), kmax)
    from .hermlin import generalized_eigvalsh

    lam = generalized_eigvalsh(g, metric.cholesky_inverse())
    return elementary_symmetric_table(lam, kmax)


def state_matrices(u_data, metric):
    """g = omega + dd^c u as a matrix field."""
    return complex_hessian_array(u_data, metric.grid) + metric.form


def sigma_m(u, omega, m):
    """sigma_m(u) with the strict-cone mask, relative to the metric omega.

    m = n is permitted as a Monge-Ampere cross-check even though the
    genuinely Hessian regime is m < n.
    """
    grid = u.grid
    if not 1 <= m <= grid.n:
        raise InputError(f"m={m} out of range 1..{grid.n}")
    if omega.grid != grid:
        raise InputError("field and metric live on different grids")
    g = state_matrices(u.data, omega)
    table = sk_table_of_state(g, omega, m)
    sigma = table[..., m] / math.comb(grid.n, m)
    mask = np.all(table[..., 1 : m + 1] > 0.0, axis=-1)
    return OperatorValue(sigma=ScalarField(grid, sigma), cone_mask=mask)


def linearization(u, omega, m, q):
    """Weights and omega-orthonormal frame of the linearized operator.

    Requires lambda strictly inside Gamma_m at every point; the breach error
    carries the worst offender so failed Newton steps can report it.
    """
    grid = u.grid
    g = state_matrices(u.data, omega)
    li = omega.cholesky_inverse()
    lam, frame = generalized_eigh(g, li)
    table = elementary_symmetric_table(lam, m)
    bad = ~np.all(table[..., 1 : m + 1] > 0.0, axis=-1)
    if np.any(bad):
        norm = np.array([math.comb(grid.n, k) for k in range(1, m + 1)])
        margins = np.min(table[..., 1 : m + 1] / norm, axis=-1)
        worst = np.unravel_index(int(np.argmin(margins)), grid.shape)
        raise ConeBreachError(
            f"cone breached at {np.count_nonzero(bad)} points",
            point=worst,
            lam=lam[worst],
        )
    s_m = table[..., m]
    n = grid.n
    weights = np.empty(grid.shape + (n,))
    for k in range(n):
        rest = np.delete(lam, k, axis=-1)
        weights[..., k] = elementary_symmetric_table(rest, m - 1)[..., m - 1] / s_m
    return LinearizationField(grid=grid, weights=weights, frame=frame, q=q)


def apply_linearization_array(lin, v_data):
    hess = complex_hessian_array(v_data, lin.grid)
    coeff = lin.coefficient_matrices()
    out = np.einsum("...jl,...lj->...", coeff, hess).real
    if lin.q:
        out = out - lin.q * v_data
    return out


def apply_linearization(lin, v):
    """Sum_k w_k (second derivative of v along frame direction k) - q v."""
    if v.grid != lin.grid:
        raise InputError("linearization and field live on different grids")
    return ScalarField(lin.grid, apply_linearization_array(lin, v.data))


def sigma_of_form(gamma, omega_form, m):
    """(gamma^m wedge omega^{n-m}) / omega^n for a single pair of forms.

    gamma need not lie in the cone: S_m is a polynomial in the relative
    eigenvalues and is evaluated as such.
    """
    gamma = check_hermitian(gamma, "gamma")
    n = gamma.shape[-1]
    if not 1 <= m <= n:
        raise InputError(f"m={m} out of range 1..{n}")
    li = cholesky_inverse(np.asarray(omega_form, dtype=complex), "omega")
    mat = li @ gamma @ li.conj().swapaxes(-1, -2)
    lam = np.linalg.eigvalsh(mat)
    return float(elementary_symmetric_table(lam, m)[..., m] / math.comb(n, m))


@lru_cache(maxsize=None)
def _polarization_scheme(k, degree):
    """Nodes, monomial exponents, and LU factors for degree<=k+1 polarization.

    Nodes are the first d points of the unscrambled Halton sequence in
    [0,1]^k; any nonsingular node set works, and this one is fixed and
    checked once here.
    """
    exponents = tuple(
        alpha for alpha in _iproduct(range(degree + 1), repeat=k)
        if sum(alpha) <= degree
    )
    d = len(exponents)
    assert d == math.comb(2 * k + 1, k)
    nodes = qmc.Halton(d=k, scramble=False).random(d)
    vand = np.empty((d, d))
    for j in range(d):
        for i, alpha in enumerate(exponents):
            vand[j, i] = float(np.prod(nodes[j] ** np.asarray(alpha, dtype=float)))
    lu, piv = scipy.linalg.lu_factor(vand)
    assert np.min(np.abs(np.diag(lu))) > 1e-12 * np.max(np.abs(vand)), \
        "polarization Vandermonde is singular"
    ones_index = exponents.index((1,) * k)
    unit = np.zeros(d)
    unit[ones_index] = 1.0
    inv_row = scipy.linalg.lu_solve((lu, piv), unit, trans=1)
    return exponents, nodes, (lu, piv), ones_index, float(np.sum(np.abs(inv_row)))


def polarization_constant(m):
    """Explicit constant of the polarized product bound.

    |gamma_1 ^ ... ^ gamma_m ^ omega^{n-m}/omega^n| is at most this constant
    times sigma_m of the sum form: each node evaluation is dominated by the
    sum form via cone monotonicity, and the coefficient extraction multiplies
    by at most the 1-norm of the relevant row of the inverse Vandermonde.
    """
    if m == 1:
        return 1.0
    _, _, _, _, row_norm = _polarization_scheme(m - 1, m)
    return row_norm / math.factorial(m)


def mixed_product(gammas, omega_form, m):
    """Normalized mixed wedge gamma_1 ^ ... ^ gamma_m ^ omega^{n-m} / omega^n.

    Evaluates the degree-m polynomial x -> sigma_m(gamma_0 + x_1 gamma_1 +
    ... + x_{m-1} gamma_{m-1}) at the fixed node set and extracts the mixed
    coefficient through the Vandermonde system.  Arguments are put in a
    canonical byte order first, so the value is bitwise symmetric under
    permutations of the gammas.
    """
    if len(gammas) != m:
        raise InputError(f"expected {m} forms, got {len(gammas)}")
    mats = [check_hermitian(g, f"gamma_{i}") for i, g in enumerate(gammas)]
    n = mats[0].shape[-1]
    if any(g.shape != (n, n) for g in mats):
        raise InputError("forms must share a common dimension")
    if not 1 <= m <= n:
        raise InputError(f"m={m} out of range 1..{n}")
    omega_form = check_hermitian(np.asarray(omega_form), "omega")
    mats.sort(key=lambda g: g.tobytes())
    if m == 1:
        return sigma_of_form(mats[0], omega_form, 1)

    k = m - 1
    exponents, nodes, lu_piv, ones_index, _ = _polarization_scheme(k, m)
    base, rest = mats[0], mats[1:]
    values = np.empty(len(exponents))
    for j in range(len(exponents)):
        tau = base.copy()
        for t in range(k):
            tau = tau + nodes[j, t] * rest[t]
        values[j] = sigma_of_form(tau, omega_form, m)
    coeffs = scipy.linalg.lu_solve(lu_piv, values)
    return float(coeffs[ones_index] / math.factorial(m))
