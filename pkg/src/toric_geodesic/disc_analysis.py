"""Kernel foliations of degenerate Monge-Ampere solutions and the linearised
Riemann-Hilbert problem for holomorphic discs.

Charts are logarithmic: ``tau = t + i s`` on the annulus and
``zeta = y + i theta`` on the fibre, with fibre coordinate ``w = e^zeta``.
A torus-invariant potential ``Phi(t, y)`` has complex Hessian entries
``Phi_{tau taubar} = Phi_tt / 4`` etc., so the kernel field is
``eta = -Phi_ty / Phi_yy`` and the degeneracy residual is
``|Phi_tt - Phi_ty^2 / Phi_yy| / 4``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import PreconditionError

# ---------------------------------------------------------------------------
# Foliation fields

_W2 = np.array([-1, 16, -30, 16, -1]) / 12.0
_W1 = np.array([1, -8, 0, 8, -1]) / 12.0
_OFFS = np.arange(-2, 3)


def _derivatives(Phi: Callable, T: np.ndarray, Y: np.ndarray, delta: float):
    """Fourth-order ``Phi_tt, Phi_ty, Phi_yy`` at the points ``(T, Y)``."""
    o = _OFFS * delta
    TT = T[..., None, None] + o[:, None]
    YY = Y[..., None, None] + o[None, :]
    TT, YY = np.broadcast_arrays(TT, YY)
    F = np.asarray(Phi(TT, YY), dtype=float)
    Ftt = (F[..., :, 2] * _W2).sum(-1) / delta ** 2
    Fyy = (F[..., 2, :] * _W2).sum(-1) / delta ** 2
    Fty = np.einsum("...ab,a,b->...", F, _W1, _W1) / delta ** 2
    return Ftt, Fty, Fyy


@dataclass
class FoliationField:
    """``eta(tau, zeta)`` with optional samples on a real ``(t, y)`` grid."""

    eta: Callable  # complex arrays (tau, zeta) -> complex array
    t: np.ndarray | None = None
    y: np.ndarray | None = None
    values: np.ndarray | None = None  # eta on the grid, nan where excluded
    regular: np.ndarray | None = None
    degeneracy: np.ndarray | None = None
    invariant: bool = False  # eta depends on (Re tau, Re zeta) only
    excluded: int = 0

    @property
    def degeneracy_residual(self) -> float:
        if self.degeneracy is None or not np.any(self.regular):
            return float("nan")
        return float(np.nanmax(np.where(self.regular, self.degeneracy, np.nan)))

    @classmethod
    def from_function(cls, eta: Callable, t_range, y_range, n: int = 50) -> "FoliationField":
        t = np.linspace(*t_range, n)
        y = np.linspace(*y_range, n)
        T, Y = np.meshgrid(t, y, indexing="ij")
        vals = np.asarray(eta(T + 0j, Y + 0j), dtype=complex)
        return cls(eta, t, y, vals, np.ones(T.shape, bool))


def kernel_field(Phi: Callable, t_range, y_range, n: int = 100,
                 creases: Sequence[Callable] = (), delta: float = 1e-3,
                 margin_cells: int = 3, min_fiber: float = 1e-8) -> FoliationField:
    """Kernel field of a torus-invariant potential ``Phi(t, y)``.

    Nodes within ``margin_cells`` grid cells of a crease curve, or where the
    fibre Hessian ``Phi_yy`` is not positive, are flagged and excluded.
    """
    t = np.linspace(*t_range, n)
    y = np.linspace(*y_range, n)
    T, Y = np.meshgrid(t, y, indexing="ij")
    Ftt, Fty, Fyy = _derivatives(Phi, T, Y, delta)
    reach = margin_cells * max(t[1] - t[0], y[1] - y[0]) + 2 * delta
    regular = Fyy > min_fiber
    for c in creases:
        regular &= np.abs(Y - c(T)) > reach
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = np.where(regular, -Fty / Fyy, np.nan)
        degen = np.where(regular, 0.25 * np.abs(Ftt - Fty ** 2 / Fyy), np.nan)

    def eta_fn(tau, zeta):
        tt = np.real(np.asarray(tau, dtype=complex))
        yy = np.real(np.asarray(zeta, dtype=complex))
        tt, yy = np.broadcast_arrays(tt, yy)
        _, fty, fyy = _derivatives(Phi, tt, yy, delta)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(fyy > min_fiber, -fty / fyy, np.nan) + 0j

    return FoliationField(eta_fn, t, y, eta + 0j, regular, degen, invariant=True,
                          excluded=int((~regular).sum()))


def holomorphy_residual(field: FoliationField, delta: float = 1e-4) -> float:
    """``max |d eta/d taubar + conj(eta) d eta/d zetabar|`` over regular nodes.

    Invariant fields are differenced on their grid (only ``t`` and ``y``
    derivatives survive); general fields use central differences in all four
    real directions at the grid nodes.
    """
    if field.invariant:
        eta = field.values
        ok = field.regular.copy()
        dt, dy = field.t[1] - field.t[0], field.y[1] - field.y[0]
        e_t = np.full(eta.shape, np.nan + 0j)
        e_y = np.full(eta.shape, np.nan + 0j)
        e_t[1:-1] = (eta[2:] - eta[:-2]) / (2 * dt)
        e_y[:, 1:-1] = (eta[:, 2:] - eta[:, :-2]) / (2 * dy)
        nb = np.zeros_like(ok)
        nb[1:-1, 1:-1] = (ok[2:, 1:-1] & ok[:-2, 1:-1] & ok[1:-1, 2:] & ok[1:-1, :-2]
                          & ok[1:-1, 1:-1])
        res = np.abs(0.5 * e_t + np.conj(eta) * 0.5 * e_y)
        return float(np.nanmax(np.where(nb, res, np.nan))) if nb.any() else float("nan")
    T, Y = np.meshgrid(field.t, field.y, indexing="ij")
    tau, zeta = T + 0j, Y + 0j
    f = field.eta

    def d(dtau, dzeta):
        return (f(tau + dtau, zeta + dzeta) - f(tau - dtau, zeta - dzeta)) / (2 * delta)

    d_taubar = 0.5 * (d(delta, 0) + 1j * d(1j * delta, 0))
    d_zetabar = 0.5 * (d(0, delta) + 1j * d(0, 1j * delta))
    res = np.abs(d_taubar + np.conj(f(tau, zeta)) * d_zetabar)
    return float(np.nanmax(np.where(field.regular, res, np.nan)))


@dataclass
class LeafTrace:
    s: np.ndarray
    w: np.ndarray  # fibre coordinate e^zeta along the leaf
    closure: float
    completed: bool
    exit_point: tuple | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["s", "re_w", "im_w"])
        for s, w in zip(self.s, self.w):
            wr.writerow([f"{s:.12g}", f"{w.real:.12g}", f"{w.imag:.12g}"])
        return buf.getvalue()


def trace_leaf(field: FoliationField, start: tuple[float, complex], turns: int = 1,
               rtol: float = 1e-12, atol: float = 1e-13) -> LeafTrace:
    """Follow a leaf around the circle direction of the annulus.

    With ``tau = t0 + i s`` the leaf solves ``d zeta / ds = i eta(tau, zeta)``;
    the closure error is ``|w(2 pi turns) - w(0)|`` with ``w = e^zeta``.
    """
    t0, zeta0 = float(start[0]), complex(start[1])

    def rhs(s, z):
        zeta = z[0] + 1j * z[1]
        e = complex(np.asarray(field.eta(np.array(t0 + 1j * s), np.array(zeta))).ravel()[0])
        dz = 1j * e
        return [dz.real, dz.imag]

    def leaves(s, z):
        zeta = z[0] + 1j * z[1]
        e = np.asarray(field.eta(np.array(t0 + 1j * s), np.array(zeta))).ravel()[0]
        return 1.0 if np.isfinite(e) else -1.0

    leaves.terminal = True
    if leaves(0.0, [zeta0.real, zeta0.imag]) < 0:
        return LeafTrace(np.array([0.0]), np.array([np.exp(zeta0)]), float("nan"), False,
                         (t0, zeta0))
    S = 2 * np.pi * turns
    sol = solve_ivp(rhs, (0.0, S), [zeta0.real, zeta0.imag], rtol=rtol, atol=atol,
                    events=leaves, dense_output=False, max_step=S / 64)
    w = np.exp(sol.y[0] + 1j * sol.y[1])
    completed = sol.status == 0 and np.isclose(sol.t[-1], S)
    exit_point = None if completed else (t0, complex(sol.y[0, -1] + 1j * sol.y[1, -1]))
    closure = float(abs(w[-1] - w[0])) if completed else float("nan")
    return LeafTrace(sol.t, w, closure, completed, exit_point)


# ---------------------------------------------------------------------------
# Riemann-Hilbert problem  v = S u + A conj(u)  on the unit circle


def _coeffs(d: dict, n: int) -> dict[int, np.ndarray]:
    return {int(m): np.asarray(c, dtype=complex).reshape(n, n) for m, c in d.items()}


@dataclass
class RHProblem:
    """Boundary data as Fourier coefficients ``S(th) = sum_m S_m e^{i m th}``."""

    n: int
    S: dict  # mode -> (n, n) complex
    A: dict
    N: int = 16

    def __post_init__(self):
        self.S = _coeffs(self.S, self.n) if self.S else {0: np.zeros((self.n, self.n), complex)}
        self.A = _coeffs(self.A, self.n)

    @property
    def max_mode(self) -> int:
        return max([abs(m) for m in self.S] + [abs(m) for m in self.A])

    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(2 * self.N + 1) / (2 * self.N + 1)

    @staticmethod
    def _eval(coeffs, theta):
        theta = np.asarray(theta, dtype=float)
        return sum(c[None] * np.exp(1j * m * theta)[:, None, None] for m, c in coeffs.items())

    def S_at(self, theta):
        return self._eval(self.S, theta)

    def A_at(self, theta):
        return self._eval(self.A, theta)

    def with_truncation(self, N: int) -> "RHProblem":
        return RHProblem(self.n, dict(self.S), dict(self.A), N)

    def conjugated(self, Q) -> "RHProblem":
        """``S -> Q S Q^T`` and ``A -> Q A Q^*`` for a constant unitary ``Q``."""
        Q = np.asarray(Q, dtype=complex)
        S = {m: Q @ c @ Q.T for m, c in self.S.items()}
        A = {m: Q @ c @ Q.conj().T for m, c in self.A.items()}
        return RHProblem(self.n, S, A, self.N)

    def to_dict(self) -> dict:
        def enc(c):
            return [{"m": m, "re": v.real.tolist(), "im": v.imag.tolist()}
                    for m, v in sorted(c.items())]
        return {"n": self.n, "N": self.N, "S": enc(self.S), "A": enc(self.A)}

    @classmethod
    def from_dict(cls, d: dict) -> "RHProblem":
        def dec(lst):
            return {int(e["m"]): np.asarray(e["re"], float) + 1j * np.asarray(e.get("im", 0.0))
                    for e in lst}
        return cls(int(d["n"]), dec(d.get("S", [])), dec(d["A"]), int(d.get("N", 16)))


def random_rh_problem(n: int, rng: np.random.Generator, modes: int = 2, scale: float = 0.3,
                      N: int | None = None) -> RHProblem:
    """Smooth symmetric ``S`` and ``A = 2 I + small hermitian perturbation``."""
    S, A = {}, {0: 2.0 * np.eye(n, dtype=complex)}
    for m in range(-modes, modes + 1):
        X = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) * scale / (1 + abs(m))
        S[m] = 0.5 * (X + X.T)
    for m in range(0, modes + 1):
        Y = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) * 0.1 * scale / (1 + m)
        if m == 0:
            A[0] = A[0] + 0.5 * (Y + Y.conj().T)
        else:
            A[m] = Y
            A[-m] = Y.conj().T
    return RHProblem(n, S, A, N if N is not None else 4 * modes + 8)


@dataclass
class RHSolution:
    kernel: list  # [(a, b)] with a, b of shape (N+1, n): u = sum a_m z^m, v = sum b_m z^m
    kernel_dim: int
    cokernel_dim: int
    index: int
    singular_values: np.ndarray
    N: int

    def evaluate(self, j: int, theta):
        a, b = self.kernel[j]
        z = np.exp(1j * np.asarray(theta, dtype=float))
        powers = z[:, None] ** np.arange(self.N + 1)[None, :]
        return powers @ a, powers @ b

    def to_dict(self) -> dict:
        return {"kernel_dim": self.kernel_dim, "cokernel_dim": self.cokernel_dim,
                "index": self.index, "N": self.N}


def rh_solve(prob: RHProblem, threshold: float = 1e-9) -> RHSolution:
    """Collocation solve of ``v = S u + A conj(u)`` for holomorphic ``u, v``.

    ``u, v`` are polynomials of degree ``N`` in ``z``; the boundary relation
    is imposed at ``2N + 1`` equispaced angles.  Kernel and cokernel
    dimensions come from the singular values of the real collocation matrix
    (relative threshold ``threshold``).
    """
    n, N = prob.n, prob.N
    if N < 4 * prob.max_mode:
        raise PreconditionError(f"truncation N={N} is below 4x the highest mode "
                                f"{prob.max_mode}")
    th = prob.angles()
    Sm, Am = prob.S_at(th), prob.A_at(th)
    if not np.allclose(Sm, np.swapaxes(Sm, -1, -2), atol=1e-12):
        raise PreconditionError("S must be symmetric at every angle")
    if not np.allclose(Am, np.conj(np.swapaxes(Am, -1, -2)), atol=1e-12):
        raise PreconditionError("A must be hermitian at every angle")
    lam = np.linalg.eigvalsh(Am)[:, 0]
    if np.any(lam <= 0):
        i = int(np.argmin(lam))
        raise PreconditionError(f"A is not positive definite at angle {th[i]:.6g} "
                                f"(eigenvalue {lam[i]:.3g})")
    K = len(th)
    E = np.exp(1j * np.outer(th, np.arange(N + 1)))  # (K, N+1)
    # residual r = v - S u - A conj(u); unknowns: Re a, Im a, Re b, Im b
    # with u = E a, v = E b (a, b of shape (N+1, n), flattened mode-major)
    cols = []
    eye = np.eye(n)
    for part in range(4):
        for m in range(N + 1):
            for i in range(n):
                e = eye[i]
                coef = 1.0 if part in (0, 2) else 1j
                zm = E[:, m]
                if part < 2:  # coefficient of u
                    u = coef * zm[:, None] * e[None, :]
                    r = -np.einsum("kij,kj->ki", Sm, u) - np.einsum("kij,kj->ki", Am, np.conj(u))
                else:
                    r = coef * zm[:, None] * e[None, :]
                cols.append(np.concatenate([r.real.ravel(), r.imag.ravel()]))
    M = np.array(cols).T  # (2nK, 4n(N+1))
    U, sv, Vt = np.linalg.svd(M)
    tol = threshold * sv[0]
    rank = int((sv > tol).sum())
    kdim = M.shape[1] - rank
    cdim = M.shape[0] - rank
    kernel = []
    block = n * (N + 1)
    for vec in Vt[rank:]:
        ra, ia, rb, ib = (vec[i * block:(i + 1) * block].reshape(N + 1, n) for i in range(4))
        kernel.append((ra + 1j * ia, rb + 1j * ib))
    return RHSolution(kernel, kdim, cdim, kdim - cdim, sv, N)


def pairing(s1, s2) -> np.ndarray:
    """``i Omega(s1, s2) = i (u1^T v2 - u2^T v1)`` pointwise."""
    (u1, v1), (u2, v2) = s1, s2
    return 1j * ((u1 * v2).sum(-1) - (u2 * v1).sum(-1))


@dataclass
class PairingReport:
    max_imag: float
    max_variation: float
    values: np.ndarray  # mean real value per pair (i, j)


def pairing_invariance(sol: RHSolution, angles=None) -> PairingReport:
    """Imaginary part and angular variation of ``i Omega`` over kernel pairs."""
    if angles is None:
        angles = 2 * np.pi * np.arange(64) / 64
    ev = [sol.evaluate(j, angles) for j in range(sol.kernel_dim)]
    k = len(ev)
    vals = np.zeros((k, k))
    imag = var = 0.0
    for i in range(k):
        for j in range(k):
            p = pairing(ev[i], ev[j])
            imag = max(imag, float(np.abs(p.imag).max()))
            var = max(var, float(np.abs(p.real - p.real.mean()).max()))
            vals[i, j] = p.real.mean()
    return PairingReport(imag, var, vals)


def load_rh_problem(path: str) -> RHProblem:
    with open(path) as fh:
        return RHProblem.from_dict(json.load(fh))
