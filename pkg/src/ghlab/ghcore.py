"""Generalized Gibbons-Hawking pipeline: potential -> (V, W, A, F) -> checks.

Coordinates and frames
----------------------
A base point is the real vector (u_1..u_n, x_1..x_l, y_1..y_l) with
eta_p = x_p + i y_p.  From a potential Phi:

    V^{ij} = d^2 Phi / du_i du_j              (real symmetric, fiber block)
    W^{pq} = -4 d^2 Phi / d eta_p d etabar_q  (hermitian, base block)
    A_j    = d theta_j + i (Phi_{u_j eta_p} d eta_p
                            - Phi_{u_j etabar_q} d etabar_q)
    F_j    = i ( (1/2) dW^{pq}/du_j  d eta_p ^ d etabar_q
               + dV^{ij}/d eta_p    du_i ^ d eta_p
               - dV^{ij}/d etabar_q du_i ^ d etabar_q )

The verifiers work on the real coordinate frame (du, dx, dy): curvature and
Kahler-form component tables are converted to real components, and exterior
derivatives / flux integrals are taken there by central finite differences
with one Richardson level and by quadrature.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .fields import (
    NumericScalarField,
    SymbolicScalarField,
    fd_partial,
    wirtinger_expansion,
)


class GHError(Exception):
    pass


class DomainViolation(GHError):
    pass


class NotPositiveDefinite(GHError):
    pass


class StepTooLarge(GHError):
    """Richardson disagreement exceeds 10x the requested tolerance."""


class SphereHitsDiscriminant(GHError):
    pass


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

class Domain:
    def contains(self, pts):
        raise NotImplementedError

    def require(self, pts):
        pts = np.atleast_2d(pts)
        ok = self.contains(pts)
        if not np.all(ok):
            bad = pts[~np.asarray(ok)][0]
            raise DomainViolation(f"point {bad} outside domain {self}")

    def __and__(self, other):
        return _Intersection(self, other)


class _Intersection(Domain):
    def __init__(self, a, b):
        self.a, self.b = a, b

    def contains(self, pts):
        return np.logical_and(self.a.contains(pts), self.b.contains(pts))

    def __repr__(self):
        return f"({self.a} & {self.b})"


class WholeSpace(Domain):
    def contains(self, pts):
        return np.ones(np.atleast_2d(pts).shape[0], dtype=bool)

    def __repr__(self):
        return "WholeSpace()"


class BoxDomain(Domain):
    def __init__(self, bounds):
        self.bounds = [(float(a), float(b)) for a, b in bounds]

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        ok = np.ones(pts.shape[0], dtype=bool)
        for k, (a, b) in enumerate(self.bounds):
            ok &= (pts[:, k] >= a) & (pts[:, k] <= b)
        return ok

    def __repr__(self):
        return f"BoxDomain({self.bounds})"


class RadialDomain(Domain):
    """rmin <= |pts[:, axes]| <= rmax."""

    def __init__(self, rmin, rmax, axes=None):
        self.rmin, self.rmax, self.axes = float(rmin), float(rmax), axes

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        cols = pts if self.axes is None else pts[:, list(self.axes)]
        r = np.linalg.norm(cols, axis=1)
        return (r >= self.rmin) & (r <= self.rmax)

    def __repr__(self):
        return f"RadialDomain({self.rmin}, {self.rmax}, axes={self.axes})"


# ---------------------------------------------------------------------------
# potential fields
# ---------------------------------------------------------------------------

class PotentialField:
    """Real potential on the (u, x, y) chart with mixed Wirtinger partials."""

    def __init__(self, scalar_field, n, l, domain=None, name=""):
        self.field = scalar_field
        self.n = int(n)
        self.l = int(l)
        if scalar_field.dim != self.n + 2 * self.l:
            raise ValueError("scalar field dimension does not match (n, l)")
        self.domain = domain if domain is not None else WholeSpace()
        self.name = name
        self._expansions = {}

    @classmethod
    def from_sympy(cls, expr, symbols, n, l, domain=None, name=""):
        return cls(SymbolicScalarField(expr, symbols), n, l, domain, name)

    @classmethod
    def from_callable(cls, func, n, l, domain=None, steps=1e-4, name=""):
        return cls(NumericScalarField(func, n + 2 * l, steps), n, l, domain,
                   name)

    @property
    def ncoords(self):
        return self.n + 2 * self.l

    def value(self, pts):
        return self.field.value(pts)

    def real_partial(self, orders, pts):
        return self.field.partial_value(orders, pts)

    def wirtinger(self, alpha, beta, gamma, pts, extra=None):
        """d^alpha_u d^beta_eta d^gamma_etabar Phi, batched over pts."""
        key = (tuple(alpha), tuple(beta), tuple(gamma))
        if key not in self._expansions:
            self._expansions[key] = wirtinger_expansion(
                self.n, self.l, *key)
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros(pts.shape[0], dtype=complex)
        for mi, co in self._expansions[key].items():
            full = mi if extra is None else tuple(a + b for a, b in zip(mi, extra))
            out += co * self.real_partial(full, pts)
        return out


def _unit(n, i):
    e = [0] * n
    e[i] = 1
    return tuple(e)


# ---------------------------------------------------------------------------
# solutions
# ---------------------------------------------------------------------------

class GHSolution:
    """Evaluator bundle (V, W, connection, curvature) over a base domain.

    ``V``/``W`` are batched callables pts -> (N, n, n) / (N, l, l); partial
    providers are optional closed forms, with finite differences over the
    tables as the fallback.  ``connection`` gives the d eta_p coefficient of
    each A_j (the d etabar coefficient is forced by reality and computed as
    its own table when a potential is present).
    """

    def __init__(self, n, l, V, W, domain=None, potential=None,
                 connection=None, V_partial=None, W_partial=None,
                 connection_partial=None, discriminant=None, fd_steps=1e-4,
                 name=""):
        self.n, self.l = int(n), int(l)
        self._V, self._W = V, W
        self.domain = domain if domain is not None else WholeSpace()
        self.potential = potential
        self._connection = connection
        self._V_partial = V_partial
        self._W_partial = W_partial
        self._connection_partial = connection_partial
        self.discriminant = discriminant
        self.fd_steps = fd_steps
        self.name = name

    @property
    def ncoords(self):
        return self.n + 2 * self.l

    # -- tables ------------------------------------------------------------

    def V(self, pts):
        return np.asarray(self._V(np.atleast_2d(pts)), dtype=float)

    def W(self, pts):
        pts = np.atleast_2d(pts)
        if self.l == 0:
            return np.ones((pts.shape[0], 0, 0), dtype=complex)
        return np.asarray(self._W(pts), dtype=complex)

    def V_partial(self, orders, pts):
        if self._V_partial is not None:
            return self._V_partial(orders, pts)
        scale = {0: 1.0, 1: 1.0, 2: 10.0, 3: 100.0}[min(sum(orders), 3)]
        return fd_partial(self.V, pts, orders, self.fd_steps * scale)

    def W_partial(self, orders, pts):
        if self._W_partial is not None:
            return self._W_partial(orders, pts)
        scale = {0: 1.0, 1: 1.0, 2: 10.0, 3: 100.0}[min(sum(orders), 3)]
        return fd_partial(self.W, pts, orders, self.fd_steps * scale)

    def connection(self, pts):
        if self._connection is None:
            return None
        return np.asarray(self._connection(np.atleast_2d(pts)), dtype=complex)

    def connection_partial(self, orders, pts):
        if self._connection is None:
            return None
        if self._connection_partial is not None:
            return self._connection_partial(orders, pts)
        scale = {0: 1.0, 1: 1.0, 2: 10.0, 3: 100.0}[min(sum(orders), 3)]
        return fd_partial(self.connection, pts, orders, self.fd_steps * scale)

    # -- factories ----------------------------------------------------------

    @classmethod
    def from_potential(cls, phi, discriminant=None, name=""):
        n, l = phi.n, phi.l

        def V(pts):
            pts = np.atleast_2d(pts)
            out = np.empty((pts.shape[0], n, n))
            for i in range(n):
                for j in range(i, n):
                    mi = tuple(a + b for a, b in
                               zip(_unit(phi.ncoords, i), _unit(phi.ncoords, j)))
                    out[:, i, j] = out[:, j, i] = phi.real_partial(mi, pts)
            return out

        def W(pts):
            pts = np.atleast_2d(pts)
            out = np.empty((pts.shape[0], l, l), dtype=complex)
            for p in range(l):
                for q in range(l):
                    out[:, p, q] = -4.0 * phi.wirtinger(
                        (0,) * n, _unit(l, p), _unit(l, q), pts)
            return out

        def V_partial(orders, pts):
            pts = np.atleast_2d(pts)
            out = np.empty((pts.shape[0], n, n))
            for i in range(n):
                for j in range(i, n):
                    mi = tuple(a + b + c for a, b, c in
                               zip(orders, _unit(phi.ncoords, i),
                                   _unit(phi.ncoords, j)))
                    out[:, i, j] = out[:, j, i] = phi.real_partial(mi, pts)
            return out

        def W_partial(orders, pts):
            pts = np.atleast_2d(pts)
            out = np.empty((pts.shape[0], l, l), dtype=complex)
            for p in range(l):
                for q in range(l):
                    out[:, p, q] = -4.0 * phi.wirtinger(
                        (0,) * n, _unit(l, p), _unit(l, q), pts, extra=orders)
            return out

        def connection(pts):
            pts = np.atleast_2d(pts)
            out = np.empty((pts.shape[0], n, l), dtype=complex)
            for j in range(n):
                for p in range(l):
                    out[:, j, p] = 1j * phi.wirtinger(
                        _unit(n, j), _unit(l, p), (0,) * l, pts)
            return out

        def connection_partial(orders, pts):
            pts = np.atleast_2d(pts)
            out = np.empty((pts.shape[0], n, l), dtype=complex)
            for j in range(n):
                for p in range(l):
                    out[:, j, p] = 1j * phi.wirtinger(
                        _unit(n, j), _unit(l, p), (0,) * l, pts, extra=orders)
            return out

        return cls(n, l, V, W, domain=phi.domain, potential=phi,
                   connection=connection if l else None,
                   V_partial=V_partial, W_partial=W_partial,
                   connection_partial=connection_partial if l else None,
                   discriminant=discriminant, name=name or phi.name)


# ---------------------------------------------------------------------------
# pointwise operations
# ---------------------------------------------------------------------------

def derive_vw(phi, point, pd_tol=0.0, asym_tol=1e-8):
    """(V, W) at one point, with symmetry and positivity checks."""
    import warnings

    pts = np.atleast_2d(np.asarray(point, dtype=float))
    phi.domain.require(pts)
    sol = GHSolution.from_potential(phi)
    V = sol.V(pts)[0]
    W = sol.W(pts)[0]
    if np.max(np.abs(V - V.T), initial=0.0) > asym_tol:
        warnings.warn("V asymmetry beyond tolerance; symmetrizing",
                      RuntimeWarning, stacklevel=2)
    if W.size and np.max(np.abs(W - W.conj().T), initial=0.0) > asym_tol:
        warnings.warn("W hermiticity beyond tolerance; averaging",
                      RuntimeWarning, stacklevel=2)
    V = 0.5 * (V + V.T)
    W = 0.5 * (W + W.conj().T)
    if np.linalg.eigvalsh(V).min() <= pd_tol:
        raise NotPositiveDefinite("V is not positive definite")
    if W.size and np.linalg.eigvalsh(W).min() <= pd_tol:
        raise NotPositiveDefinite("W is not positive definite")
    return V, W


def connection_form(phi, point):
    """Coefficient tables of A_j: (d eta coefficients, d etabar coefficients)."""
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    phi.domain.require(pts)
    n, l = phi.n, phi.l
    d_eta = np.empty((n, l), dtype=complex)
    d_eta_bar = np.empty((n, l), dtype=complex)
    for j in range(n):
        for p in range(l):
            d_eta[j, p] = 1j * phi.wirtinger(
                _unit(n, j), _unit(l, p), (0,) * l, pts)[0]
            d_eta_bar[j, p] = -1j * phi.wirtinger(
                _unit(n, j), (0,) * l, _unit(l, p), pts)[0]
    return d_eta, d_eta_bar


def _as_solution(source):
    if isinstance(source, GHSolution):
        return source
    if isinstance(source, PotentialField):
        return GHSolution.from_potential(source)
    if hasattr(source, "as_gh_solution"):
        return source.as_gh_solution()
    raise TypeError(f"cannot interpret {type(source).__name__} as a GH solution")


def curvature_tables(source, pts):
    """Complex-frame curvature components, batched.

    Returns dict with ``ue[N,j,i,p]`` (du_i ^ d eta_p), ``uebar[N,j,i,q]``
    (du_i ^ d etabar_q) and ``eebar[N,j,p,q]`` (d eta_p ^ d etabar_q).
    """
    sol = _as_solution(source)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n, l, nc = sol.n, sol.l, sol.ncoords
    N = pts.shape[0]
    ue = np.zeros((N, n, n, l), dtype=complex)
    uebar = np.zeros((N, n, n, l), dtype=complex)
    eebar = np.zeros((N, n, l, l), dtype=complex)
    for p in range(l):
        vx = sol.V_partial(_unit(nc, n + p), pts)
        vy = sol.V_partial(_unit(nc, n + l + p), pts)
        deta = 0.5 * (vx - 1j * vy)      # dV/d eta_p, (N, n, n)
        detabar = 0.5 * (vx + 1j * vy)
        for j in range(n):
            ue[:, j, :, p] = 1j * deta[:, :, j]
            uebar[:, j, :, p] = -1j * detabar[:, :, j]
    for j in range(n):
        wu = sol.W_partial(_unit(nc, j), pts)
        eebar[:, j, :, :] = 0.5j * wu
    return {"ue": ue, "uebar": uebar, "eebar": eebar}


def curvature(source, point):
    """Pointwise curvature component tables for each F_j."""
    sol = _as_solution(source)
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    sol.domain.require(pts)
    t = curvature_tables(sol, pts)
    return {k: v[0] for k, v in t.items()}


def _hermitian_pair_components(table, n, l, comp, scale=1.0):
    """Fold sum_{p,q} c_pq d eta_p ^ d etabar_q into real components.

    ``table`` has shape (N, m, l, l) (m slots, e.g. one per fiber index j).
    Adds into ``comp`` dict keyed by global coordinate index pairs.
    """
    for p in range(l):
        for q in range(l):
            c = scale * table[:, :, p, q]
            if p < q:
                _acc(comp, (n + p, n + q), c)
                _acc(comp, (n + l + p, n + l + q), c)
            elif q < p:
                _acc(comp, (n + q, n + p), -c)
                _acc(comp, (n + l + q, n + l + p), -c)
            # dx_p ^ dy_q piece and the mirrored dy_p ^ dx_q piece
            _acc(comp, (n + p, n + l + q), -1j * c)
            _acc(comp, (n + q, n + l + p), -1j * c)


def _acc(comp, key, val):
    if key in comp:
        comp[key] = comp[key] + val
    else:
        comp[key] = val.copy() if hasattr(val, "copy") else val


def curvature_real_components(source, pts):
    """Real-frame components of the curvature 2-forms.

    Returns dict {(a, b): array (N, n)} over global coordinate index pairs
    a < b, one value per fiber index j.
    """
    sol = _as_solution(source)
    t = curvature_tables(sol, pts)
    n, l = sol.n, sol.l
    comp = {}
    for i in range(n):
        for p in range(l):
            a = t["ue"][:, :, i, p]
            b = t["uebar"][:, :, i, p]
            _acc(comp, (i, n + p), a + b)
            _acc(comp, (i, n + l + p), 1j * (a - b))
    _hermitian_pair_components(t["eebar"], n, l, comp)
    return _realify(comp)


def kahler_real_components(source, pts):
    """Real-frame components of the basic part of the Kahler form."""
    sol = _as_solution(source)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    alpha = sol.connection(pts)
    if alpha is None:
        raise GHError("solution exposes no connection coefficients")
    n, l = sol.n, sol.l
    comp = {}
    for j in range(n):
        for p in range(l):
            a = alpha[:, None, j, p]
            _acc(comp, (j, n + p), 2.0 * a.real + 0j)
            _acc(comp, (j, n + l + p), -2.0 * a.imag + 0j)
    w = sol.W(pts)[:, None, :, :]
    _hermitian_pair_components(w, n, l, comp, scale=0.5j)
    return _realify(comp)


def _realify(comp):
    out = {}
    for key, val in comp.items():
        v = np.asarray(val)
        scale = np.max(np.abs(v), initial=1.0)
        if np.max(np.abs(v.imag), initial=0.0) > 1e-9 * scale:
            raise GHError(f"2-form component {key} is not real")
        out[key] = v.real
    return out


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class ResidualReport:
    check: str
    grid: str
    max_residual: float
    argmax_point: list
    step: float
    tolerance: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_json(self):
        d = {"check": self.check, "grid": self.grid,
             "maxResidual": self.max_residual,
             "argmaxPoint": self.argmax_point, "step": self.step,
             "tolerance": self.tolerance, "pass": self.passed}
        d.update(self.extra)
        return json.dumps(d, sort_keys=True)


def _component_stack(component_fn, keys):
    def stacked(pts):
        comp = component_fn(pts)
        return np.stack([comp[k] for k in keys], axis=1)  # (N, K, m)
    return stacked


def _d_residual(component_fn, pts, ncoords, step, tolerance):
    """Max exterior-derivative residual of a 2-form given by components."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    sample = component_fn(pts[:1])
    keys = sorted(sample.keys())
    stacked = _component_stack(component_fn, keys)
    partials = []
    max_disagree = 0.0
    for k in range(ncoords):
        orders = [0] * ncoords
        orders[k] = 1
        val, err = fd_partial(stacked, pts, orders, step, return_err=True)
        partials.append(val)
        max_disagree = max(max_disagree, float(np.max(err, initial=0.0)))
    if max_disagree > 10.0 * tolerance:
        raise StepTooLarge(
            f"Richardson disagreement {max_disagree:.2e} > 10 x {tolerance:.1e}")
    kindex = {key: idx for idx, key in enumerate(keys)}
    worst = 0.0
    argmax = pts[0]
    for a, b, c in itertools.combinations(range(ncoords), 3):
        r = None
        for coef, axis, pair in ((1.0, a, (b, c)), (-1.0, b, (a, c)),
                                 (1.0, c, (a, b))):
            if pair in kindex:
                term = coef * partials[axis][:, kindex[pair]]
                r = term if r is None else r + term
        if r is None:
            continue
        mags = np.max(np.abs(r), axis=tuple(range(1, r.ndim)))
        k = int(np.argmax(mags))
        if mags[k] > worst:
            worst = float(mags[k])
            argmax = pts[k]
    return worst, argmax


def potential_identity_residual(sol, pts):
    """Pointwise residual of  d2 W^{pq}/du_i du_j + 4 d2 V^{ij}/d eta d etabar."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n, l, nc = sol.n, sol.l, sol.ncoords
    worst = 0.0
    for i in range(n):
        for j in range(n):
            mi = tuple(x + y for x, y in zip(_unit(nc, i), _unit(nc, j)))
            wuu = sol.W_partial(mi, pts)
            for p in range(l):
                for q in range(l):
                    xx = tuple(x + y for x, y in
                               zip(_unit(nc, n + p), _unit(nc, n + q)))
                    yy = tuple(x + y for x, y in
                               zip(_unit(nc, n + l + p), _unit(nc, n + l + q)))
                    xy = tuple(x + y for x, y in
                               zip(_unit(nc, n + p), _unit(nc, n + l + q)))
                    yx = tuple(x + y for x, y in
                               zip(_unit(nc, n + l + p), _unit(nc, n + q)))
                    vterm = (sol.V_partial(xx, pts) + sol.V_partial(yy, pts)
                             + 1j * (sol.V_partial(xy, pts)
                                     - sol.V_partial(yx, pts)))
                    r = np.abs(wuu[:, p, q] + vterm[:, i, j])
                    worst = max(worst, float(np.max(r, initial=0.0)))
    return worst


def verify_closed(source, grid_pts, step=1e-4, tolerance=1e-6):
    """Closedness report: dF = 0, d omega = 0 (when A is known) and the
    mixed fourth-derivative identity, all over a point batch."""
    sol = _as_solution(source)
    pts = np.atleast_2d(np.asarray(grid_pts, dtype=float))
    sol.domain.require(pts)
    nc = sol.ncoords
    df, arg_f = _d_residual(lambda q: curvature_real_components(sol, q),
                            pts, nc, step, tolerance)
    domega = None
    if sol.connection(pts[:1]) is not None:
        domega, _ = _d_residual(lambda q: kahler_real_components(sol, q),
                                pts, nc, step, tolerance)
    ident = potential_identity_residual(sol, pts)
    worst = max(df, ident if domega is None else max(domega, ident))
    return ResidualReport(
        check="closedness", grid=f"{pts.shape[0]} pts", max_residual=worst,
        argmax_point=list(map(float, arg_f)), step=step, tolerance=tolerance,
        passed=bool(worst <= tolerance),
        extra={"dF": df, "dOmega": domega, "potentialIdentity": ident})


def verify_compat(source, grid_pts, tolerance=1e-10):
    """Max of |det W / det V - 1| over the grid (Ricci-flatness scalar)."""
    sol = _as_solution(source)
    pts = np.atleast_2d(np.asarray(grid_pts, dtype=float))
    detv = np.linalg.det(sol.V(pts))
    detw = np.abs(np.linalg.det(sol.W(pts))) if sol.l else np.ones(pts.shape[0])
    r = np.abs(detw / detv - 1.0)
    k = int(np.argmax(r))
    return ResidualReport(
        check="compatibility", grid=f"{pts.shape[0]} pts",
        max_residual=float(r[k]), argmax_point=list(map(float, pts[k])),
        step=0.0, tolerance=tolerance, passed=bool(r[k] <= tolerance))


def _sphere_grid(radius, nphi, ntheta):
    nodes, weights = np.polynomial.legendre.leggauss(nphi)
    phi = 0.5 * np.pi * (nodes + 1.0)
    wphi = 0.5 * np.pi * weights
    theta = 2.0 * np.pi * np.arange(ntheta) / ntheta
    wtheta = np.full(ntheta, 2.0 * np.pi / ntheta)
    return phi, wphi, theta, wtheta


def chern_flux(source, wall_point, radius, nodes=(32, 64), normal=None,
               guard=None):
    """(1/2pi) integral of the curvature over a small 2-sphere.

    The sphere sits in the 3-space spanned by a u-direction (``normal``,
    default the first axis) and the first base plane (x_1, y_1), centered at
    (wall_point, eta_1 = 0).  Returns the flux vector, one entry per fiber
    index.
    """
    sol = _as_solution(source)
    if sol.l < 1:
        raise GHError("flux needs at least one base coordinate")
    n, nc = sol.n, sol.ncoords
    wall_point = np.atleast_1d(np.asarray(wall_point, dtype=float))
    if normal is None:
        normal = np.zeros(n)
        normal[0] = 1.0
    normal = np.asarray(normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    nphi, ntheta = nodes
    phi, wphi, theta, wtheta = _sphere_grid(radius, nphi, ntheta)
    P, T = np.meshgrid(phi, theta, indexing="ij")
    WP, WT = np.meshgrid(wphi, wtheta, indexing="ij")
    N = P.size
    pts = np.zeros((N, nc))
    pts[:, :n] = wall_point[None, :] + np.outer(radius * np.cos(P).ravel(),
                                                normal)
    pts[:, n] = radius * np.sin(P).ravel() * np.cos(T).ravel()
    pts[:, n + sol.l] = radius * np.sin(P).ravel() * np.sin(T).ravel()
    if sol.discriminant is not None:
        # sampled distances miss tangency points, so the floor scales with R
        floor = 0.05 * radius if guard is None else guard
        dmin = float(np.min(sol.discriminant(pts)))
        if dmin < floor:
            raise SphereHitsDiscriminant(f"sphere within {dmin} of discriminant")
    tp = np.zeros((N, nc))
    tp[:, :n] = np.outer(-radius * np.sin(P).ravel(), normal)
    tp[:, n] = radius * np.cos(P).ravel() * np.cos(T).ravel()
    tp[:, n + sol.l] = radius * np.cos(P).ravel() * np.sin(T).ravel()
    tt = np.zeros((N, nc))
    tt[:, n] = -radius * np.sin(P).ravel() * np.sin(T).ravel()
    tt[:, n + sol.l] = radius * np.sin(P).ravel() * np.cos(T).ravel()
    comp = curvature_real_components(sol, pts)
    integrand = np.zeros((N, sol.n))
    for (a, b), val in comp.items():
        integrand += val * (tp[:, a] * tt[:, b] - tp[:, b] * tt[:, a])[:, None]
    w = (WP * WT).ravel()
    return (integrand * w[:, None]).sum(axis=0) / (2.0 * np.pi)


@dataclass
class CompletenessProbe:
    u_maxes: list
    values: list
    increasing: bool
    last_slope: float
    verdict: str


def completeness_probe(source, i, j, u_maxes, base=None, samples=512,
                       slope_floor=1e-3):
    """Partial integrals of 1/(V^{-1})^{ij} along the u_i ray from base.

    A numerical probe, not a proof: the verdict says whether the partial
    integrals are still visibly growing at the largest cutoff.
    """
    sol = _as_solution(source)
    u_maxes = sorted(float(u) for u in u_maxes)
    if u_maxes[0] <= 0:
        raise ValueError("cutoffs must be positive")
    base_pt = np.zeros(sol.ncoords) if base is None else \
        np.asarray(base, dtype=float)
    ts = np.linspace(0.0, u_maxes[-1], samples)
    pts = np.tile(base_pt, (samples, 1))
    pts[:, i] += ts
    sol.domain.require(pts)
    vinv = np.linalg.inv(sol.V(pts))
    g = 1.0 / vinv[:, i, j]
    cumulative = np.concatenate([[0.0], np.cumsum(
        0.5 * (g[1:] + g[:-1]) * np.diff(ts))])
    values = [float(np.interp(u, ts, cumulative)) for u in u_maxes]
    increasing = all(b > a for a, b in zip(values, values[1:]))
    if len(values) >= 2:
        last_slope = (values[-1] - values[-2]) / (u_maxes[-1] - u_maxes[-2])
    else:
        last_slope = float(g[-1])
    ref = abs(values[-1]) / max(u_maxes[-1], 1.0)
    verdict = "diverging" if (increasing and last_slope > slope_floor * max(ref, 1e-12)) \
        else "inconclusive/convergent"
    return CompletenessProbe(u_maxes=u_maxes, values=values,
                             increasing=increasing, last_slope=float(last_slope),
                             verdict=verdict)
