"""Four-level master equation: Hamiltonian, Lindblad generator, time
evolution and steady state.

Units are picoseconds (times) and inverse picoseconds (rates, energies with
hbar = 1).  Density matrices are 4x4 complex arrays over the ordered basis
``G, H, B, V``; superoperators act on the row-major flattening
``rho.ravel()``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from collections.abc import Iterable, Sequence
from typing import Optional, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .states import DIM, BareLevel, Label, TransitionOp, ket, sigma

logger = logging.getLogger(__name__)

G, H, B, V = BareLevel.G, BareLevel.H, BareLevel.B, BareLevel.V

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-9

ArrayLike = Union[np.ndarray, "DensityMatrix"]


class IntegrationError(RuntimeError):
    """The integrator could not advance the state to the requested time."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (at t = {t:.6g} ps)")
        self.t = t


class SteadyStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the driven cascade.

    Parameters
    ----------
    omega_L : float
        Drive amplitude on the H-polarized transitions [1/ps].  This is half
        the lab-frame field amplitude after the rotating-wave approximation.
    delta : float
        Exciton detuning from the two-photon laser frame [1/ps].  It equals
        minus the biexciton binding shift, so a bound biexciton gives a
        positive value; it enters the Hamiltonian on the H and V diagonal.
    gamma_X : float
        Radiative rate of each exciton [1/ps]; the biexciton decays twice as
        fast through its two channels.
    """

    omega_L: float
    delta: float = 3.0
    gamma_X: float = 0.001

    def __post_init__(self):
        for name in ("omega_L", "delta", "gamma_X"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.omega_L < 0:
            raise ValueError(f"omega_L must be >= 0, got {self.omega_L}")
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.gamma_X <= 0:
            raise ValueError(f"gamma_X must be > 0, got {self.gamma_X}")

    @property
    def omega_eff(self) -> float:
        """Two-photon Rabi frequency ``2 omega_L**2 / delta``."""
        return 2.0 * self.omega_L**2 / self.delta

    @property
    def gamma_eff(self) -> float:
        return 2.0 * self.gamma_X

    @property
    def alpha(self) -> float:
        """``(gamma_eff / omega_eff)**2``; ``inf`` when the drive is off."""
        if self.omega_eff == 0.0:
            return math.inf
        return (self.gamma_eff / self.omega_eff) ** 2

    @property
    def adiabatic_valid(self) -> bool:
        return self.omega_L <= self.delta / 3.0

    def with_drive(self, omega_L: float) -> "SystemParams":
        return SystemParams(omega_L, self.delta, self.gamma_X)


class DensityMatrix:
    """Immutable 4x4 density matrix.

    Normalized states are checked for hermiticity, unit trace and positivity
    at construction.  Conditional (post-detection) states carry
    ``normalized=False`` and are only checked for hermiticity.
    """

    __slots__ = ("_data", "normalized")

    def __init__(self, data, normalized: bool = True):
        arr = np.array(getattr(data, "data", data), dtype=complex)
        if arr.shape != (DIM, DIM):
            raise ValueError(f"density matrix must be {DIM}x{DIM}, got {arr.shape}")
        herm = np.max(np.abs(arr - arr.conj().T))
        if herm > HERMITIAN_TOL:
            raise ValueError(f"density matrix is not Hermitian (max deviation {herm:.3g})")
        if normalized:
            tr = np.trace(arr)
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"density matrix trace is {tr:.15g}, expected 1")
            lam = np.linalg.eigvalsh(0.5 * (arr + arr.conj().T))[0]
            if lam < -PSD_TOL:
                raise ValueError(f"density matrix is not positive (eigenvalue {lam:.3g})")
        arr.setflags(write=False)
        self._data = arr
        self.normalized = bool(normalized)

    @classmethod
    def _wrap(cls, arr: np.ndarray, normalized: bool) -> "DensityMatrix":
        # integrator output: tolerances are those of the integrator, not the constructor's
        obj = object.__new__(cls)
        arr = np.array(arr, dtype=complex)
        arr.setflags(write=False)
        obj._data = arr
        obj.normalized = normalized
        return obj

    @classmethod
    def pure(cls, label: Union[str, Label], params: Optional[SystemParams] = None,
             filtered: bool = True) -> "DensityMatrix":
        v = ket(label, params, filtered)
        return cls(np.outer(v, v.conj()))

    @property
    def data(self) -> np.ndarray:
        return self._data

    def __array__(self, dtype=None, copy=None):
        return np.array(self._data, dtype=dtype)

    def __repr__(self) -> str:
        flag = "" if self.normalized else ", normalized=False"
        return f"DensityMatrix({np.array2string(self._data, precision=4)}{flag})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self.normalized == other.normalized and np.array_equal(self._data, other._data)

    __hash__ = None

    @property
    def trace(self) -> complex:
        return complex(np.trace(self._data))

    @property
    def populations(self) -> np.ndarray:
        return self._data.diagonal().real.copy()

    def element(self, i: Union[str, Label], j: Union[str, Label]) -> complex:
        """``<i|rho|j>``; dressed labels use their filtered vectors."""
        return complex(ket(i).conj() @ self._data @ ket(j))

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(np.asarray(op) @ self._data))

    def renormalized(self) -> "DensityMatrix":
        tr = self.trace.real
        if tr <= 0:
            raise ValueError("cannot renormalize a state with non-positive trace")
        return DensityMatrix(self._data / tr)


def _as_array(rho: ArrayLike) -> np.ndarray:
    return np.asarray(getattr(rho, "data", rho), dtype=complex)


def build_hamiltonian(params: SystemParams) -> np.ndarray:
    """Rotating-frame Hamiltonian over ``(G, H, B, V)``.

    ``delta (|H><H| + |V><V|) + omega_L (|G><H| + |H><G| + |B><H| + |H><B|)``
    """
    h = np.zeros((DIM, DIM), dtype=complex)
    h[H, H] = h[V, V] = params.delta
    h[G, H] = h[H, G] = params.omega_L
    h[B, H] = h[H, B] = params.omega_L
    return h


def collapse_operators() -> list[np.ndarray]:
    """Radiative jump operators ``H->G, V->G, B->H, B->V`` (unit rate).

    Each channel enters the generator with rate ``gamma_X``.
    """
    return [sigma(G, H), sigma(G, V), sigma(H, B), sigma(V, B)]


def dissipator(J: Union[np.ndarray, TransitionOp], rho: ArrayLike) -> np.ndarray:
    """Lindblad dissipator ``2 J rho J^+ - J^+ J rho - rho J^+ J``."""
    J = J.matrix if isinstance(J, TransitionOp) else np.asarray(J, dtype=complex)
    r = _as_array(rho)
    Jd = J.conj().T
    JdJ = Jd @ J
    return 2.0 * J @ r @ Jd - JdJ @ r - r @ JdJ


def liouvillian_rhs(rho: ArrayLike, params: SystemParams) -> np.ndarray:
    """Right-hand side ``d rho / dt`` of the four-level master equation."""
    r = _as_array(rho)
    h = build_hamiltonian(params)
    out = -1j * (h @ r - r @ h)
    for J in collapse_operators():
        out += params.gamma_X * dissipator(J, r)
    return out


def _spre(a: np.ndarray) -> np.ndarray:
    return np.kron(a, np.eye(a.shape[0]))


def _spost(a: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(a.shape[0]), a.T)


def liouvillian(params: SystemParams) -> np.ndarray:
    """16x16 generator acting on ``rho.ravel()`` (row-major)."""
    h = build_hamiltonian(params)
    L = -1j * (_spre(h) - _spost(h))
    for J in collapse_operators():
        Jd = J.conj().T
        JdJ = Jd @ J
        L += params.gamma_X * (2.0 * np.kron(J, J.conj()) - _spre(JdJ) - _spost(JdJ))
    return L


class Trajectory(Sequence):
    """Density matrices sampled on a time grid.

    Indexing returns :class:`DensityMatrix` objects; bulk access goes through
    :attr:`states` (shape ``(n, 4, 4)``) and :meth:`expect`.
    """

    def __init__(self, times: np.ndarray, states: np.ndarray, normalized: bool = True):
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=complex)
        self.states.setflags(write=False)
        self.normalized = normalized

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Trajectory(self.times[idx], self.states[idx], self.normalized)
        return DensityMatrix._wrap(self.states[idx], self.normalized)

    def expect(self, op: np.ndarray) -> np.ndarray:
        """``Tr[op rho(t)]`` for every sample."""
        return np.einsum("ij,nji->n", np.asarray(op), self.states)

    def element(self, i: Union[str, Label], j: Union[str, Label]) -> np.ndarray:
        return np.einsum("i,nij,j->n", ket(i).conj(), self.states, ket(j))

    def population(self, label: Union[str, Label]) -> np.ndarray:
        return self.element(label, label).real

    @property
    def traces(self) -> np.ndarray:
        return np.trace(self.states, axis1=1, axis2=2)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.states - np.conj(np.swapaxes(self.states, 1, 2)))))

    def min_eigenvalues(self) -> np.ndarray:
        herm = 0.5 * (self.states + np.conj(np.swapaxes(self.states, 1, 2)))
        return np.linalg.eigvalsh(herm)[:, 0]


def _check_grid(t_grid) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t.ndim != 1 or t.size == 0:
        raise ValueError("time grid must be a non-empty 1-d sequence")
    if t[0] < 0:
        raise ValueError(f"time grid must start at t >= 0, got {t[0]}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly ascending")
    return t


def evolve(rho0: ArrayLike, params: SystemParams, t_grid: Iterable[float],
           method: str = "RK45", rtol: float = 1e-8, atol: float = 1e-10) -> Trajectory:
    """Integrate the master equation from ``rho0`` given at ``t_grid[0]``.

    Parameters
    ----------
    rho0 : DensityMatrix or array
        Initial state.  Unnormalized (conditional) states are allowed; the
        equation is linear and the trace is carried along.
    params : SystemParams
    t_grid : array_like
        Strictly ascending output times [ps], ``t_grid[0] >= 0``.
    method : {"RK45", "DOP853", "expm"}
        Embedded Runge-Kutta pair from :func:`scipy.integrate.solve_ivp`, or
        exact propagation with the matrix exponential of the (constant)
        generator.
    rtol, atol : float
        Integrator tolerances (ignored by ``"expm"``).

    Returns
    -------
    Trajectory
        ``trajectory[0]`` equals ``rho0``.

    Raises
    ------
    IntegrationError
        If the step size underflows before the last requested time.
    """
    t = _check_grid(t_grid)
    r0 = _as_array(rho0)
    normalized = bool(getattr(rho0, "normalized", abs(np.trace(r0) - 1) < 1e-9))
    L = liouvillian(params)
    y0 = r0.ravel()

    if method == "expm":
        out = np.empty((t.size, DIM * DIM), dtype=complex)
        out[0] = y0
        cache: dict[float, np.ndarray] = {}
        for n in range(1, t.size):
            dt = t[n] - t[n - 1]
            key = round(dt, 12)
            if key not in cache:
                cache[key] = expm(L * dt)
            out[n] = cache[key] @ out[n - 1]
        states = out.reshape(-1, DIM, DIM)
    elif method in ("RK45", "DOP853"):
        if t.size == 1:
            states = r0[None, :, :].copy()
        else:
            sol = solve_ivp(lambda _t, y: L @ y, (t[0], t[-1]), y0, method=method,
                            t_eval=t, rtol=rtol, atol=atol)
            if sol.status != 0:
                t_fail = float(sol.t[-1]) if sol.t.size else float(t[0])
                raise IntegrationError(sol.message, t_fail)
            states = sol.y.T.reshape(-1, DIM, DIM)
            states[0] = r0
    else:
        raise ValueError(f"unknown integration method {method!r}")
    return Trajectory(t, states, normalized)


def steady_state(params: SystemParams, method: str = "nullspace",
                 tol: float = 1e-10, horizon: Optional[float] = None,
                 max_iter: int = 10) -> DensityMatrix:
    """Stationary state of the master equation.

    The default solves ``L x = 0`` together with ``Tr x = 1`` as a
    least-squares problem on the 16x16 generator.  If the residual exceeds
    ``tol`` (or ``method="integrate"``), the ground state is propagated in
    chunks of ``horizon`` ps (default ``20 / gamma_eff``), at most
    ``max_iter`` of them, until the residual drops below ``tol``.

    Raises
    ------
    SteadyStateError
        If neither route reaches ``max|L rho| < tol``.
    """
    L = liouvillian(params)

    def residual(r: np.ndarray) -> float:
        return float(np.max(np.abs(L @ r.ravel())))

    if method not in ("nullspace", "integrate"):
        raise ValueError(f"unknown steady-state method {method!r}")

    if method == "nullspace":
        A = np.vstack([L, np.eye(DIM).ravel()[None, :]])
        b = np.zeros(DIM * DIM + 1, dtype=complex)
        b[-1] = 1.0
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
        r = x.reshape(DIM, DIM)
        r = 0.5 * (r + r.conj().T)
        r /= np.trace(r)
        res = residual(r)
        if res < tol:
            return DensityMatrix(r)
        logger.warning("null-space steady state residual %.3g; falling back to integration", res)

    horizon = 20.0 / params.gamma_eff if horizon is None else horizon
    ground = np.zeros((DIM, DIM), dtype=complex)
    ground[G, G] = 1.0
    step = expm(L * horizon)
    x = ground.ravel()
    for n in range(1, max_iter + 1):
        x = step @ x
        r = x.reshape(DIM, DIM)
        r = 0.5 * (r + r.conj().T)
        r = r / np.trace(r)
        res = residual(r)
        if res < tol:
            return DensityMatrix(r)
    raise SteadyStateError(
        f"steady state not converged: residual {res:.3g} after {n * horizon:.6g} ps")
