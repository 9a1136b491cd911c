"""Two-time correlations from the quantum regression theorem.

A detection sequence ``ijkl`` means: a photon from the transition ``i -> j``
is detected at time ``t`` (collapse with ``|j><i|``), then a photon from
``k -> l`` at ``t + tau``.  In the stationary limit

    g2_ijkl(tau) = Tr[|k><k| e^{L tau}(J rho_ss J^+)] / (Tr[J rho_ss J^+] <k|rho_ss|k>)

with ``J = |j><i|``.  Dressed labels use the V-filtered superpositions
``+ = (G + B)/sqrt(2)`` and ``0 = (B - G)/sqrt(2)``; pass ``filtered=False``
for the full eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np
from scipy import signal

from .lindblad import (
    DensityMatrix,
    SystemParams,
    _as_array,
    _check_grid,
    evolve,
    liouvillian,
    steady_state,
)
from .states import BareLevel, Label, TransitionOp, parse_label, projector

ZERO_WEIGHT = 1e-14

# Labels used in the literature for sequences whose subscript is not the
# literal (i, j, k, l) chain: the exciton-first correlation collapses onto G
# and then detects the B -> V photon.
LABEL_ALIASES = {"VGGB": "VGBV", "GVVB": "VGBV"}


class DetectionError(ValueError):
    pass


class ZeroWeightError(DetectionError):
    """The requested photon cannot be emitted from the given state."""


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True)
class DetectionSequence:
    """Ordered pair of detected transitions ``(i -> j)`` then ``(k -> l)``."""

    first: tuple
    second: tuple

    def __post_init__(self):
        try:
            first = tuple(parse_label(x) for x in self.first)
            second = tuple(parse_label(x) for x in self.second)
        except ValueError as exc:
            raise DetectionError(str(exc)) from None
        if len(first) != 2 or len(second) != 2:
            raise DetectionError("each detection is a (from, to) pair of labels")
        object.__setattr__(self, "first", first)
        object.__setattr__(self, "second", second)

    @classmethod
    def parse(cls, text: str) -> "DetectionSequence":
        """``"BVVG"``, ``"+VV0"``, ``"V0+V"`` ... (one character per label)."""
        chars = [c for c in text.strip() if not c.isspace()]
        if len(chars) != 4:
            raise DetectionError(f"detection sequence needs four labels, got {text!r}")
        return cls((chars[0], chars[1]), (chars[2], chars[3]))

    @classmethod
    def from_label(cls, label: str) -> "DetectionSequence":
        """Like :meth:`parse`, but also accepts the labels of
        :data:`LABEL_ALIASES`."""
        return cls.parse(LABEL_ALIASES.get(label.strip(), label))

    @property
    def name(self) -> str:
        return "".join(x.symbol for x in self.first + self.second)

    def __str__(self) -> str:
        return self.name

    def first_jump(self, params: Optional[SystemParams] = None, filtered: bool = True) -> TransitionOp:
        i, j = self.first
        return TransitionOp(j, i, params, filtered)

    def second_jump(self, params: Optional[SystemParams] = None, filtered: bool = True) -> TransitionOp:
        k, l = self.second
        return TransitionOp(l, k, params, filtered)

    def reversed(self) -> "DetectionSequence":
        """The same photon pair detected in the opposite order; its tau >= 0
        branch is the tau <= 0 branch of this sequence."""
        return DetectionSequence(self.second, self.first)


@dataclass(frozen=True)
class CorrelationSeries:
    tau: np.ndarray
    values: np.ndarray
    sequence: DetectionSequence
    normalization: float
    weight: float = float("nan")

    def __len__(self) -> int:
        return len(self.tau)

    @property
    def min_value(self) -> float:
        return float(np.min(self.values))


def collapse(rho, jump: Union[TransitionOp, np.ndarray]) -> tuple[DensityMatrix, float]:
    """Apply a detection: returns ``(J rho J^+, Tr[J rho J^+])``.

    Raises
    ------
    ZeroWeightError
        If the weight vanishes, i.e. the photon cannot be emitted from ``rho``.
    """
    J = jump.matrix if isinstance(jump, TransitionOp) else np.asarray(jump, dtype=complex)
    r = _as_array(rho)
    out = J @ r @ J.conj().T
    out = 0.5 * (out + out.conj().T)
    weight = float(np.trace(out).real)
    if weight <= ZERO_WEIGHT:
        raise ZeroWeightError(f"detection {jump} has zero weight in this state")
    return DensityMatrix(out, normalized=False), weight


def _tau_grid(tau_grid) -> tuple[np.ndarray, np.ndarray]:
    tau = _check_grid(tau_grid)
    if tau[0] == 0.0:
        return tau, tau
    return tau, np.concatenate([[0.0], tau])


def g2(params: SystemParams, seq: Union[DetectionSequence, str], tau_grid,
       method: str = "RK45", filtered: bool = True,
       rho_ss: Optional[DensityMatrix] = None) -> CorrelationSeries:
    """Normalized intensity correlation for ``tau >= 0``.

    Parameters
    ----------
    params : SystemParams
    seq : DetectionSequence or str
        e.g. ``"BVVG"`` (biexciton photon first), ``"VGBV"`` (exciton photon
        first) or ``"V++V"``.
    tau_grid : array_like
        Ascending delays [ps], starting at or after 0.
    method : str
        Integrator passed to :func:`cascade_g2.lindblad.evolve`.
    filtered : bool
        Use the V-filtered dressed vectors (default) or the full eigenvectors.
    rho_ss : DensityMatrix, optional
        Precomputed steady state; by default solved from the null space.

    Raises
    ------
    ZeroWeightError
        First detection impossible in the steady state.
    DetectionError
        Second transition has no steady-state population to normalize with.
    """
    if isinstance(seq, str):
        seq = DetectionSequence.from_label(seq)
    return g2_batch(params, [seq], tau_grid, method, filtered, rho_ss)[seq.name]


def g2_batch(params: SystemParams, sequences: Iterable[Union[DetectionSequence, str]],
             tau_grid, method: str = "RK45", filtered: bool = True,
             rho_ss: Optional[DensityMatrix] = None) -> dict[str, CorrelationSeries]:
    """Several g2 curves keyed by literal sequence name (``"VGBV"``, not ``"VGGB"``).

    Sequences whose first detection leaves the same conditional state (for
    example ``BVVG`` and ``+VV0``, both leaving ``|V><V|``) share one
    integration.
    """
    seqs = [DetectionSequence.from_label(s) if isinstance(s, str) else s for s in sequences]
    rho_ss = steady_state(params) if rho_ss is None else rho_ss
    tau, grid = _tau_grid(tau_grid)
    skip = grid.size - tau.size

    groups: dict[bytes, tuple[np.ndarray, list]] = {}
    for s in seqs:
        cond, weight = collapse(rho_ss, s.first_jump(params, filtered))
        start = cond.data / weight
        key = np.round(start, 12).tobytes()
        groups.setdefault(key, (start, []))[1].append((s, weight))

    out: dict[str, CorrelationSeries] = {}
    for start, members in groups.values():
        traj = evolve(start, params, grid, method=method)
        for s, weight in members:
            P = projector(s.second[0], params, filtered)
            norm = float(np.trace(P @ rho_ss.data).real)
            if norm <= ZERO_WEIGHT:
                raise DetectionError(f"level {s.second[0].symbol} is empty in the steady state")
            num = traj.expect(P).real[skip:]
            out[s.name] = CorrelationSeries(tau, num / norm, s, norm, weight)
    return out


def conditional_population(params: SystemParams, condition: Union[str, Label],
                           measured: Union[str, Label], tau_grid, method: str = "RK45",
                           filtered: bool = True) -> np.ndarray:
    """``<k| e^{L tau}(|j><j|) |k>``: population of ``measured`` after the
    system was collapsed onto the pure state ``condition``."""
    rho0 = DensityMatrix.pure(condition, params, filtered)
    tau, grid = _tau_grid(tau_grid)
    traj = evolve(rho0, params, grid, method=method)
    P = projector(measured, params, filtered)
    return traj.expect(P).real[grid.size - tau.size:]


def emission_operator(polarization: str) -> np.ndarray:
    """Lowering operator ``|i><B| + |G><i|`` of one polarization ``i``."""
    pol = polarization.upper()
    if pol not in ("H", "V"):
        raise ValueError(f"polarization must be 'H' or 'V', got {polarization!r}")
    i = BareLevel[pol]
    c = np.zeros((4, 4), dtype=complex)
    c[i, BareLevel.B] = 1.0
    c[BareLevel.G, i] = 1.0
    return c


def g1(params: SystemParams, emission_op: np.ndarray, tau_grid, method: str = "RK45",
       rho_ss: Optional[DensityMatrix] = None) -> np.ndarray:
    """First-order correlation ``Tr[c^+ e^{L tau}(c rho_ss)]`` on ``tau_grid``."""
    c = np.asarray(emission_op, dtype=complex)
    rho_ss = steady_state(params) if rho_ss is None else rho_ss
    tau, grid = _tau_grid(tau_grid)
    traj = evolve(c @ rho_ss.data, params, grid, method=method)
    return traj.expect(c.conj().T)[grid.size - tau.size:]


@dataclass(frozen=True)
class _Modes:
    rates: np.ndarray
    amplitudes: np.ndarray
    stationary: np.ndarray

    def g1(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        return np.exp(np.multiply.outer(tau, self.rates)) @ self.amplitudes


def _g1_modes(params: SystemParams, c: np.ndarray, rho_ss: DensityMatrix) -> _Modes:
    L = liouvillian(params)
    lam, R = np.linalg.eig(L)
    x = (c @ rho_ss.data).ravel()
    coef = np.linalg.solve(R, x)
    amp = (c.conj().ravel() @ R) * coef  # Tr[c^+ Y] = sum conj(c_ij) Y_ij
    scale = np.max(np.abs(lam))
    stationary = np.abs(lam) <= 1e-10 * scale
    g0 = np.trace(c.conj().T @ c @ rho_ss.data)
    if abs(amp.sum() - g0) > 1e-8 * max(abs(g0), 1e-300):
        raise SpectrumError("eigenmode expansion of the generator is ill-conditioned")
    return _Modes(lam, amp, stationary)


def power_spectrum(params: SystemParams, polarization: str, omega_grid,
                   tau_max: Optional[float] = None,
                   rho_ss: Optional[DensityMatrix] = None) -> np.ndarray:
    """Emission spectrum ``Re int_0^tau_max [G1(tau) - G1(inf)] e^{-i w tau} dtau``.

    ``G1`` is expanded in eigenmodes of the generator so the finite-horizon
    integral is evaluated exactly.  Frequencies are measured from the laser
    frame (the bare exciton lines sit at ``+-delta``).  ``polarization="both"``
    adds the H and V spectra.

    Raises
    ------
    SpectrumError
        If ``G1`` has not decayed by ``tau_max`` (default ``12 / gamma_eff``).
    """
    pol = polarization.upper()
    pols = ("H", "V") if pol == "BOTH" else (pol,)
    omega = np.asarray(omega_grid, dtype=float)
    T = 12.0 / params.gamma_eff if tau_max is None else float(tau_max)
    rho_ss = steady_state(params) if rho_ss is None else rho_ss
    total = np.zeros(omega.shape)
    for p in pols:
        c = emission_operator(p)
        modes = _g1_modes(params, c, rho_ss)
        moving = ~modes.stationary
        lam = modes.rates[moving]
        amp = modes.amplitudes[moving]
        g0 = abs(amp.sum() + modes.amplitudes[modes.stationary].sum())
        tail = abs(np.sum(amp * np.exp(lam * T)))
        if tail > 1e-3 * g0:
            raise SpectrumError(
                f"G1 not decayed at tau_max = {T:.6g} ps (|G1 - G1(inf)| = {tail:.3g})")
        z = lam[None, :] - 1j * omega[:, None]
        total += (((np.exp(z * T) - 1.0) / z) @ amp).real
    return total


def find_peaks(omega, spectrum, rel_height: float = 0.05, min_separation: int = 3,
               rel_prominence: float = 0.01) -> np.ndarray:
    """Frequencies of local maxima above ``rel_height * max``, at least
    ``min_separation`` grid points apart and standing out from their
    surroundings by ``rel_prominence * max``."""
    S = np.asarray(spectrum, dtype=float)
    top = S.max()
    idx, _ = signal.find_peaks(S, height=rel_height * top, distance=min_separation,
                               prominence=rel_prominence * top)
    return np.asarray(omega)[idx]
