"""Convex complex QCQP kernels.

Two problem shapes, both *maximization* of a concave quadratic::

    Re{lin^H x} - x^H quad x

1. ``solve_ball_quadratic`` -- subject to an optional ball ``x^H x <= r2``,
   convex quadratic upper bounds ``x^H G x <= b`` and affine lower bounds
   ``offset + 2 Re{g^H x} >= b`` (the MM-linearized form of ``x^H G x >= b``).
   Solved by a primal-dual interior-point method on the realified problem,
   with a phase-I feasibility search when the starting point is not strictly
   feasible.

2. ``solve_disk_quadratic`` -- subject to ``|x_l|^2 <= r_l^2`` per coordinate.
   Solved by cyclic exact coordinate ascent or by projected gradient ascent.

Complex gradients follow the convention ``d/dRe + 1j d/dIm``, so
``grad Re{c^H x} = c`` and ``grad x^H Q x = 2 Q x``.
"""

from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"
FEASIBLE = "feasible"  # feasible within tol, optimality not certified


class QCQPInputError(ValueError):
    pass


@dataclass
class QuadraticObjective:
    lin: np.ndarray
    quad: np.ndarray

    def __post_init__(self):
        self.lin = np.asarray(self.lin, dtype=complex).reshape(-1)
        self.quad = np.atleast_2d(np.asarray(self.quad, dtype=complex))
        n = self.lin.size
        if self.quad.shape != (n, n):
            raise QCQPInputError(f"quad must be {n}x{n}, got {self.quad.shape}")

    def validate(self, herm_tol=1e-12, psd_tol=1e-10):
        scale = max(1.0, float(np.max(np.abs(self.quad), initial=0.0)))
        if np.max(np.abs(self.quad - self.quad.conj().T), initial=0.0) > herm_tol * scale:
            raise QCQPInputError("quad is not Hermitian")
        if self.quad.size and np.linalg.eigvalsh(_herm(self.quad))[0] < -psd_tol * scale:
            raise QCQPInputError("quad is not positive semidefinite")

    def __call__(self, x):
        x = np.asarray(x)
        return float(np.real(np.vdot(self.lin, x)) - np.real(np.vdot(x, self.quad @ x)))


@dataclass
class AffineMinorant:
    """``l(x) = offset + 2 Re{g^H x}``; tight lower bound of ``x^H G x`` at the anchor."""

    g: np.ndarray
    offset: float

    def __call__(self, x):
        return float(self.offset + 2.0 * np.real(np.vdot(self.g, x)))


@dataclass
class ConstraintSet:
    ball_radius2: float | None = None
    quad_upper: list = field(default_factory=list)  # (G, bound)
    affine_lower: list = field(default_factory=list)  # (g, offset, bound)
    disk_radii2: np.ndarray | None = None

    def __post_init__(self):
        if self.ball_radius2 is not None and not (np.isfinite(self.ball_radius2) and self.ball_radius2 >= 0):
            raise QCQPInputError("ball radius must be finite and >= 0")
        for G, b in self.quad_upper:
            if not np.isfinite(b):
                raise QCQPInputError("quadratic bounds must be finite")
        for g, off, b in self.affine_lower:
            if not (np.isfinite(off) and np.isfinite(b)):
                raise QCQPInputError("affine bounds must be finite")

    def validate(self, psd_tol=1e-10):
        for G, _ in self.quad_upper:
            G = np.asarray(G)
            scale = max(1.0, float(np.max(np.abs(G), initial=0.0)))
            if np.linalg.eigvalsh(_herm(G))[0] < -psd_tol * scale:
                raise QCQPInputError("constraint matrix is not positive semidefinite")

    def violations(self, x):
        """Signed constraint values ``g_i(x)`` (<= 0 means satisfied), original units."""
        x = np.asarray(x)
        out = []
        if self.ball_radius2 is not None:
            out.append(np.real(np.vdot(x, x)) - self.ball_radius2)
        for G, b in self.quad_upper:
            out.append(np.real(np.vdot(x, np.asarray(G) @ x)) - b)
        for g, off, b in self.affine_lower:
            out.append(b - off - 2.0 * np.real(np.vdot(g, x)))
        return np.array(out, dtype=float)


@dataclass
class SolveInfo:
    status: str
    iterations: int = 0
    objective: float = float("nan")
    duals: np.ndarray | None = None  # multipliers of the original-unit constraints
    kkt_residual: float = float("nan")
    max_violation: float = float("nan")
    history: list | None = None


def _herm(A):
    return 0.5 * (A + A.conj().T)


def mm_linearize(G, x_t):
    """First-order minorant of the convex form ``x^H G x`` anchored at ``x_t``."""
    G = np.atleast_2d(np.asarray(G, dtype=complex))
    x_t = np.asarray(x_t, dtype=complex).reshape(-1)
    g = G @ x_t
    return AffineMinorant(g=g, offset=-float(np.real(np.vdot(x_t, g))))


# --------------------------------------------------------------------------
# realification helpers


def _realify_mat(A):
    A = np.asarray(A, dtype=complex)
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


def _realify_vec(v):
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.concatenate([v.real, v.imag])


def _complexify(z):
    n = z.size // 2
    return z[:n] + 1j * z[n:]


def _constraint_scales(cons, sx):
    """Per-constraint normalizers, in the order of ``ConstraintSet.violations``."""
    sc = []
    if cons.ball_radius2 is not None:
        sc.append(max(cons.ball_radius2, 1e-300))
    for G, b in cons.quad_upper:
        sc.append(abs(b) if b != 0 else max(sx**2 * np.max(np.abs(G), initial=0.0), 1e-300))
    for g, off, b in cons.affine_lower:
        if b != 0:
            sc.append(abs(b))
        else:
            sc.append(max(abs(off), 2.0 * sx * np.max(np.abs(g), initial=0.0), 1e-300))
    return np.array(sc, dtype=float)


def _variable_scale(cons, x0):
    if cons.ball_radius2 is not None and cons.ball_radius2 > 0:
        return float(np.sqrt(cons.ball_radius2))
    return max(1.0, float(np.linalg.norm(x0))) if x0 is not None else 1.0


def _objective_scale(obj, sx):
    s = max(
        float(np.linalg.norm(obj.lin)) * sx,
        2.0 * float(np.linalg.norm(obj.quad, 2) if obj.quad.size else 0.0) * sx**2,
    )
    return s if s > 0 else 1.0


def kkt_residual(obj, cons, x, duals):
    """Normalized KKT residual of a point for the ball-shaped problem.

    Combines stationarity of the Lagrangian, complementary slackness, dual
    feasibility and primal infeasibility, each scaled so that O(1) means
    "as large as the problem data".
    """
    x = np.asarray(x, dtype=complex).reshape(-1)
    duals = np.asarray(duals, dtype=float)
    sx = _variable_scale(cons, x)
    so = _objective_scale(obj, sx)
    sc = _constraint_scales(cons, sx)
    gvals = cons.violations(x)
    grads = []
    if cons.ball_radius2 is not None:
        grads.append(2.0 * x)
    for G, _ in cons.quad_upper:
        grads.append(2.0 * (np.asarray(G) @ x))
    for g, _, _ in cons.affine_lower:
        grads.append(-2.0 * np.asarray(g))
    grad_obj = obj.lin - 2.0 * (obj.quad @ x)
    lag = grad_obj.copy()
    for nu, gr in zip(duals, grads):
        lag = lag - nu * gr
    stat = np.linalg.norm(lag) * sx / so
    comp = np.abs(duals * gvals) / so
    dual_inf = np.maximum(0.0, -duals) * sc / so
    primal = np.maximum(0.0, gvals / sc)
    return float(np.sqrt(stat**2 + np.sum(comp**2) + np.sum(dual_inf**2) + np.sum(primal**2)))


# --------------------------------------------------------------------------
# primal-dual interior point on   min y'Q y + q'y   s.t.  y'A_i y + b_i'y + c_i <= 0


class _Program:
    def __init__(self, Q, q, A, b, c):
        self.Q, self.q = Q, q
        self.A, self.b, self.c = A, b, c  # (m, n, n), (m, n), (m,)
        self.quad_mask = np.array([np.any(Ai) for Ai in A], dtype=bool)
        self.Aq = A[self.quad_mask]

    def f0(self, y):
        return float(y @ self.Q @ y + self.q @ y)

    def fi(self, y):
        out = self.b @ y + self.c
        if self.Aq.size:
            out[self.quad_mask] += np.einsum("kij,i,j->k", self.Aq, y, y)
        return out

    def grads(self, y):
        D = self.b.copy()
        if self.Aq.size:
            D[self.quad_mask] += 2.0 * np.einsum("kij,j->ki", self.Aq, y)
        return D

    def hess(self, lam):
        H = 2.0 * self.Q
        if self.Aq.size:
            H = H + 2.0 * np.einsum("k,kij->ij", lam[self.quad_mask], self.Aq)
        return H

    def residual(self, y, lam, t):
        f = self.fi(y)
        D = self.grads(y)
        r_dual = 2.0 * self.Q @ y + self.q + D.T @ lam
        r_cent = -lam * f - 1.0 / t
        return r_dual, r_cent, f, D


def _pd_ipm(prog, y, max_iter, eps=1e-11, eps_feas=1e-10, stop=None):
    """Boyd & Vandenberghe primal-dual method. ``y`` must be strictly feasible."""
    f = prog.fi(y)
    m = f.size
    lam = np.minimum(1.0 / np.maximum(-f, 1e-12), 1e8) / max(m, 1)
    mu, alpha, beta = 10.0, 0.01, 0.5
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        eta = float(-f @ lam)
        t = mu * m / max(eta, 1e-300)
        r_dual, r_cent, f, D = prog.residual(y, lam, t)
        if np.linalg.norm(r_dual) <= eps_feas and eta <= eps:
            converged = True
            break
        if stop is not None and stop(y):
            break
        H = prog.hess(lam)
        wts = lam / (-f)
        H_red = H + (D.T * wts) @ D
        rhs = -r_dual - D.T @ (r_cent / f)
        try:
            dy = np.linalg.solve(H_red, rhs)
        except np.linalg.LinAlgError:
            dy = np.linalg.lstsq(H_red, rhs, rcond=None)[0]
        dlam = (r_cent - lam * (D @ dy)) / f
        neg = dlam < 0
        s = min(1.0, float(np.min(-lam[neg] / dlam[neg]))) if np.any(neg) else 1.0
        s *= 0.99
        rnorm = np.sqrt(np.sum(r_dual**2) + np.sum(r_cent**2))
        while s > 1e-14:
            y_new = y + s * dy
            if np.all(prog.fi(y_new) < 0):
                break
            s *= beta
        while s > 1e-14:
            y_new, lam_new = y + s * dy, lam + s * dlam
            rd, rc, _, _ = prog.residual(y_new, lam_new, t)
            if np.sqrt(np.sum(rd**2) + np.sum(rc**2)) <= (1 - alpha * s) * rnorm:
                break
            s *= beta
        if s <= 1e-14:
            # no progress possible in double precision
            converged = np.linalg.norm(r_dual) <= 1e3 * eps_feas and eta <= 1e3 * eps
            break
        y, lam = y_new, lam_new
        f = prog.fi(y)
    return y, lam, it, converged


def _build_program(obj, cons, sx, so, sc):
    n = obj.lin.size
    nr = 2 * n
    A, b, c = [], [], []
    idx = 0
    if cons.ball_radius2 is not None:
        A.append(np.eye(nr) * sx**2 / sc[idx])
        b.append(np.zeros(nr))
        c.append(-cons.ball_radius2 / sc[idx])
        idx += 1
    for G, bound in cons.quad_upper:
        A.append(_realify_mat(G) * sx**2 / sc[idx])
        b.append(np.zeros(nr))
        c.append(-bound / sc[idx])
        idx += 1
    for g, off, bound in cons.affine_lower:
        A.append(np.zeros((nr, nr)))
        b.append(-2.0 * sx * _realify_vec(g) / sc[idx])
        c.append((bound - off) / sc[idx])
        idx += 1
    A = np.array(A).reshape(-1, nr, nr)
    b = np.array(b).reshape(-1, nr)
    c = np.array(c, dtype=float)
    Q = _realify_mat(obj.quad) * sx**2 / so
    Q = 0.5 * (Q + Q.T)
    q = -_realify_vec(obj.lin) * sx / so
    return Q, q, A, b, c


def solve_ball_quadratic(obj, constraints, x0=None, tol=1e-7, max_iter=5000, feas_tol=1e-8):
    """Maximize ``Re{lin^H x} - x^H quad x`` over the convex set in ``constraints``.

    Returns ``(x, info)``. ``info.status`` is ``"optimal"``, ``"max_iter"``,
    ``"infeasible"`` or ``"feasible"`` (feasible point found, but the set has
    no usable interior so optimality is not certified).
    """
    obj.validate()
    constraints.validate()
    n = obj.lin.size
    x0 = np.zeros(n, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex).reshape(-1)
    if x0.size != n:
        raise QCQPInputError("x0 has the wrong dimension")
    sx = _variable_scale(constraints, x0)
    so = _objective_scale(obj, sx)
    sc = _constraint_scales(constraints, sx)
    Q, q, A, b, c = _build_program(obj, constraints, sx, so, sc)
    m = c.size
    y0 = _realify_vec(x0) / sx
    if m == 0:
        raise QCQPInputError("problem has no constraints; the maximum may be unbounded")

    iters = 0
    f0 = _Program(Q, q, A, b, c).fi(y0)
    if np.max(f0) > -1e-7:
        # phase I: min s  s.t. f_i(y) <= s,  s >= -1
        nr = y0.size
        A1 = np.zeros((m + 1, nr + 1, nr + 1))
        A1[:m, :nr, :nr] = A
        b1 = np.zeros((m + 1, nr + 1))
        b1[:m, :nr] = b
        b1[:m, nr] = -1.0
        b1[m, nr] = -1.0
        c1 = np.append(c, -1.0)
        q1 = np.zeros(nr + 1)
        q1[nr] = 1.0
        prog1 = _Program(np.zeros((nr + 1, nr + 1)), q1, A1, b1, c1)
        s0 = float(np.max(f0)) + 1.0
        y1 = np.append(y0, s0)

        def interior_enough(v):
            return v[-1] < -1e-3

        y1, _, it1, _ = _pd_ipm(prog1, y1, max_iter, stop=interior_enough)
        iters += it1
        y0 = y1[:nr]
        viol = float(np.max(_Program(Q, q, A, b, c).fi(y0)))
        if viol > feas_tol:
            x = _complexify(y0) * sx
            return x, SolveInfo(INFEASIBLE, iters, obj(x), None, float("nan"), viol)
        if viol >= 0:
            x = _complexify(y0) * sx
            return x, SolveInfo(FEASIBLE, iters, obj(x), None, float("nan"), viol)

    prog = _Program(Q, q, A, b, c)
    gap_eps = max(min(tol, 1e-9) * 1e-2, 1e-13)
    y, lam, it2, converged = _pd_ipm(prog, y0, max_iter, eps=gap_eps, eps_feas=min(feas_tol, 1e-9))
    iters += it2
    x = _complexify(y) * sx
    duals = lam * so / sc
    viol = float(np.max(constraints.violations(x) / sc))
    info = SolveInfo(
        OPTIMAL if converged else MAX_ITER,
        iters,
        obj(x),
        duals,
        kkt_residual(obj, constraints, x, duals),
        viol,
    )
    return x, info


# --------------------------------------------------------------------------
# disk-constrained problem


def disk_kkt_residual(obj, radii2, x):
    """Normalized KKT residual for ``|x_l|^2 <= r_l^2``."""
    x = np.asarray(x, dtype=complex)
    r = np.sqrt(np.asarray(radii2, dtype=float))
    grad = obj.lin - 2.0 * (obj.quad @ x)
    gs = max(
        float(np.max(np.abs(obj.lin), initial=0.0)),
        2.0 * float(np.max(np.abs(obj.quad), initial=0.0)) * float(np.sum(r)),
        1e-300,
    )
    res = np.abs(grad).astype(float)
    on_boundary = (r > 0) & (np.abs(x) >= r * (1 - 1e-9))
    xb = x[on_boundary]
    nu = np.real(np.conj(xb) * grad[on_boundary]) / (2.0 * np.abs(xb) ** 2)
    res[on_boundary] = np.abs(grad[on_boundary] - 2.0 * nu * xb) + np.maximum(0.0, -nu) * 2.0 * np.abs(xb)
    res[r == 0] = 0.0
    primal = np.maximum(0.0, np.abs(x) - r)
    return float(np.linalg.norm(res) / gs + np.linalg.norm(primal) / max(float(np.max(r, initial=0.0)), 1e-300))


def project_disks(x, radii):
    x = np.asarray(x, dtype=complex).copy()
    mag = np.abs(x)
    over = mag > radii
    x[over] *= radii[over] / mag[over]
    return x


def solve_disk_quadratic(
    obj, disk_radii2, x0=None, tol=1e-7, max_iter=5000, method="coordinate", kkt_tol=1e-7
):
    """Maximize ``Re{lin^H x} - x^H quad x`` subject to ``|x_l|^2 <= r_l^2``.

    Iterates until the objective gain of a full pass drops below
    ``tol * (1 + |f|)`` *and* the KKT residual is below ``kkt_tol``, or
    ``max_iter`` passes. The objective never decreases between passes.
    """
    obj.validate()
    r2 = np.asarray(disk_radii2, dtype=float).reshape(-1)
    n = obj.lin.size
    if r2.size != n:
        raise QCQPInputError("one radius per coordinate is required")
    if np.any(r2 < 0) or not np.all(np.isfinite(r2)):
        raise QCQPInputError("disk radii must be finite and >= 0")
    radii = np.sqrt(r2)
    x = np.zeros(n, dtype=complex) if x0 is None else project_disks(np.asarray(x0, dtype=complex), radii)
    x[radii == 0] = 0.0
    if method == "coordinate":
        step = _coordinate_pass
    elif method == "projected_gradient":
        lmax = float(np.linalg.eigvalsh(_herm(obj.quad))[-1]) if n else 0.0
        eta = 1.0 / (2.0 * max(lmax, 0.0) + 1e-12 * max(1.0, lmax))

        def step(o, xx, rr):
            return project_disks(xx + eta * (o.lin - 2.0 * (o.quad @ xx)), rr)
    else:
        raise ValueError(f"unknown method {method!r}")

    f = obj(x)
    history = [f]
    status = MAX_ITER
    it = 0
    for it in range(1, max_iter + 1):
        x_new = step(obj, x, radii)
        f_new = obj(x_new)
        if f_new < f:
            # round-off only; keep the better point
            x_new, f_new = x, f
        gain = f_new - f
        x, f = x_new, f_new
        history.append(f)
        if gain <= tol * (1.0 + abs(f)) and disk_kkt_residual(obj, r2, x) <= kkt_tol:
            status = OPTIMAL
            break
        if gain == 0.0 and it > 1:
            status = OPTIMAL if disk_kkt_residual(obj, r2, x) <= 1e3 * kkt_tol else MAX_ITER
            break
    return x, SolveInfo(status, it, f, None, disk_kkt_residual(obj, r2, x), 0.0, history)


def _coordinate_pass(obj, x, radii):
    x = x.copy()
    Q = obj.quad
    Qx = Q @ x
    diag = np.real(np.diag(Q))
    for l in range(x.size):
        if radii[l] == 0:
            continue
        c = obj.lin[l] - 2.0 * (Qx[l] - Q[l, l] * x[l])
        if diag[l] > 0:
            new = c / (2.0 * diag[l])
            mag = abs(new)
            if mag > radii[l]:
                new *= radii[l] / mag
        else:
            mag = abs(c)
            new = radii[l] * c / mag if mag > 0 else x[l]
        delta = new - x[l]
        if delta != 0:
            Qx += Q[:, l] * delta
            x[l] = new
    return x
