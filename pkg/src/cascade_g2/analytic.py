"""Closed-form dynamics and correlation functions in the adiabatic limit.

After eliminating the far-detuned H exciton the biexciton-ground pair obeys

    dD/dt = -Gamma (D + Sigma0) - i Omega B
    dB/dt = -Gamma B - i Omega D

with inversion ``D = rho_BB - rho_GG``, coherence ``B = rho_BG - rho_GB``,
``Omega = 2 omega_L**2 / delta`` and ``Gamma = 2 gamma_X``.  Every function
here evaluates the explicit solution of that pair (or quantities built from
it) and accepts scalar or array times.  The closed forms assume a driven
system; a zero drive is rejected with ``ValueError``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .lindblad import SystemParams
from .states import DressedLabel


@dataclass(frozen=True)
class NormalizedRates:
    """``Omega_n = Omega/(Gamma^2+Omega^2)``, ``Gamma_n = Gamma/(Gamma^2+Omega^2)`` [ps]."""

    Omega_n: float
    Gamma_n: float

    @classmethod
    def from_params(cls, params: SystemParams) -> "NormalizedRates":
        om, ga = params.omega_eff, params.gamma_eff
        denom = om**2 + ga**2
        return cls(om / denom, ga / denom)


@dataclass(frozen=True)
class AdiabaticIC:
    """Initial data of the reduced two-photon dynamics.

    ``B0`` is the imaginary part of ``rho_BG - rho_GB`` (the coherence
    difference is purely imaginary for real populations).  ``rho_VV0`` is
    only needed for the V-exciton population; ``None`` means the H and V
    excitons start equally populated.
    """

    D0: float
    B0: float
    Sigma0: float
    rho_BB0: float
    rho_BG0_plus_GB0: float = 0.0
    rho_VV0: Optional[float] = None

    def __post_init__(self):
        eps = 1e-12 * max(1.0, abs(self.Sigma0))
        if abs(self.D0) > self.Sigma0 + eps:
            raise ValueError(f"|D0| = {abs(self.D0)} exceeds Sigma0 = {self.Sigma0}")
        if not -eps <= self.rho_BB0 <= self.Sigma0 + eps:
            raise ValueError(f"rho_BB0 = {self.rho_BB0} outside [0, Sigma0]")

    @property
    def rho_GG0(self) -> float:
        return self.rho_BB0 - self.D0

    @property
    def excitons0(self) -> float:
        """Initial ``rho_HH + rho_VV``."""
        return self.Sigma0 - self.rho_BB0 - self.rho_GG0

    @classmethod
    def ground(cls) -> "AdiabaticIC":
        return cls(D0=-1.0, B0=0.0, Sigma0=1.0, rho_BB0=0.0, rho_VV0=0.0)

    @classmethod
    def exciton_v(cls) -> "AdiabaticIC":
        """State ``|V><V|`` left behind by a detected biexciton photon."""
        return cls(D0=0.0, B0=0.0, Sigma0=1.0, rho_BB0=0.0, rho_VV0=1.0)

    @classmethod
    def dressed_plus(cls) -> "AdiabaticIC":
        """``|B><B| + |B><G| + |G><B| + |G><G|``: twice the filtered ``|+><+|``."""
        return cls(D0=0.0, B0=0.0, Sigma0=2.0, rho_BB0=1.0, rho_BG0_plus_GB0=2.0, rho_VV0=0.0)

    @classmethod
    def dressed_zero(cls) -> "AdiabaticIC":
        """Twice the filtered ``|0><0|``."""
        return cls(D0=0.0, B0=0.0, Sigma0=2.0, rho_BB0=1.0, rho_BG0_plus_GB0=-2.0, rho_VV0=0.0)

    @classmethod
    def from_density_matrix(cls, rho) -> "AdiabaticIC":
        r = np.asarray(getattr(rho, "data", rho))
        g, b = 0, 2
        return cls(
            D0=float((r[b, b] - r[g, g]).real),
            B0=float((r[b, g] - r[g, b]).imag),
            Sigma0=float(np.trace(r).real),
            rho_BB0=float(r[b, b].real),
            rho_BG0_plus_GB0=float((r[b, g] + r[g, b]).real),
            rho_VV0=float(r[3, 3].real),
        )


def _rates(params: SystemParams):
    if params.omega_eff == 0.0:
        raise ValueError("closed forms require a nonzero drive (alpha is infinite)")
    rates = NormalizedRates.from_params(params)
    return params.gamma_eff, params.omega_eff, rates.Gamma_n, rates.Omega_n


def _times(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be >= 0")
    return t


def _out(value, t):
    return value.item() if np.ndim(t) == 0 else value


def inversion_D(t, ic: AdiabaticIC, params: SystemParams):
    """``D(t) = rho_BB - rho_GG``; equals ``D0`` at ``t = 0``."""
    t = _times(t)
    ga, om, gn, on = _rates(params)
    s = ic.Sigma0
    iB0 = -ic.B0
    e = np.exp(-ga * t)
    value = ((ic.D0 + s * ga * gn) * e * np.cos(om * t)
             - (iB0 + s * ga * on) * e * np.sin(om * t)
             - s * ga * gn)
    return _out(value, t)


def coherence_B(t, ic: AdiabaticIC, params: SystemParams):
    """Imaginary part of ``B(t) = rho_BG - rho_GB`` (its real part stays zero)."""
    t = _times(t)
    ga, om, gn, on = _rates(params)
    s = ic.Sigma0
    e = np.exp(-ga * t)
    value = ((ic.B0 - s * ga * on) * e * np.cos(om * t)
             - (s * ga * gn + ic.D0) * e * np.sin(om * t)
             + s * ga * on)
    return _out(value, t)


def rho_bb(t, ic: AdiabaticIC, params: SystemParams):
    """Biexciton population, homogeneous decay plus the driven part."""
    t = _times(t)
    ga, om, gn, on = _rates(params)
    s = ic.Sigma0
    iB0 = -ic.B0
    e = np.exp(-ga * t)
    e2 = e * e
    c, sn = np.cos(om * t), np.sin(om * t)
    # e^{-Gt} sinh(Gt) written as (1 - e^{-2Gt})/2 so large t cannot overflow
    value = (ic.rho_BB0 * e2
             - iB0 * 0.5 * om * e * (gn * c + on * sn - gn * e)
             - ic.D0 * 0.5 * om * e * (gn * sn - on * c + on * e)
             + s * 0.5 * om * (on * 0.5 * (1.0 - e2) - gn * e * sn))
    return _out(value, t)


def rho_gg(t, ic: AdiabaticIC, params: SystemParams):
    t = _times(t)
    return _out(np.asarray(rho_bb(t, ic, params)) - np.asarray(inversion_D(t, ic, params)), t)


def rho_vv(t, ic: AdiabaticIC, params: SystemParams, method: str = "auto"):
    """V-exciton population.

    ``"shortcut"`` uses ``(Sigma0 + D - 2 rho_BB) / 2`` and is only valid when
    both excitons start equally populated.  ``"integral"`` evaluates
    ``rho_VV(0) e^{-Gt} + Gamma e^{-Gt} int_0^t e^{Gs} rho_BB(s) ds`` in closed
    form.  ``"auto"`` picks the shortcut whenever it applies.
    """
    t = _times(t)
    vv0 = 0.5 * ic.excitons0 if ic.rho_VV0 is None else ic.rho_VV0
    equal = abs(ic.excitons0 - 2.0 * vv0) <= 1e-12 * max(1.0, ic.Sigma0)
    if method == "auto":
        method = "shortcut" if equal else "integral"
    if method == "shortcut":
        if not equal:
            raise ValueError("shortcut needs equal initial H and V exciton populations")
        D = np.asarray(inversion_D(t, ic, params))
        bb = np.asarray(rho_bb(t, ic, params))
        return _out(0.5 * (ic.Sigma0 + D - 2.0 * bb), t)
    if method != "integral":
        raise ValueError(f"unknown method {method!r}")

    ga, om, gn, on = _rates(params)
    s = ic.Sigma0
    iB0 = -ic.B0
    # rho_BB(t) = a2 e^{-2Gt} + e^{-Gt}(ac cos + as_ sin) + a0
    a2 = ic.rho_BB0 + iB0 * 0.5 * om * gn - ic.D0 * 0.5 * om * on - s * 0.25 * om * on
    ac = -iB0 * 0.5 * om * gn + ic.D0 * 0.5 * om * on
    as_ = -iB0 * 0.5 * om * on - ic.D0 * 0.5 * om * gn - s * 0.5 * om * gn
    a0 = s * 0.25 * om * on
    e = np.exp(-ga * t)
    c, sn = np.cos(om * t), np.sin(om * t)
    value = (vv0 * e
             + a2 * (e - e * e)
             + (ga / om) * e * (ac * sn + as_ * (1.0 - c))
             + a0 * (1.0 - e))
    return _out(value, t)


def rho_bg(t, ic: AdiabaticIC, params: SystemParams):
    """Complex coherence ``rho_BG(t) = B(t)/2 + e^{-Gt}(rho_BG(0)+rho_GB(0))/2``."""
    t = _times(t)
    ga = params.gamma_eff
    b = 1j * np.asarray(coherence_B(t, ic, params))
    value = 0.5 * b + 0.5 * np.exp(-ga * t) * ic.rho_BG0_plus_GB0
    return _out(value, t)


def steady_state_populations(params: SystemParams) -> dict[str, float]:
    """Long-time populations for a unit-trace state."""
    ga, om, gn, on = _rates(params)
    bb = 0.25 * om * on
    D = -ga * gn
    return {"G": bb - D, "H": bb, "B": bb, "V": bb}


def _alpha(params: SystemParams) -> float:
    a = params.alpha
    if not math.isfinite(a):
        raise ValueError("closed forms require a nonzero drive (alpha is infinite)")
    return a


def g2_bvvg(tau, params: SystemParams):
    """Biexciton photon first, then the exciton photon (both V-polarized).

    ``2 e^{-G tau} (1 + cosh(G tau) + alpha (1 + cos(Omega tau)))``
    """
    tau = _times(tau)
    a = _alpha(params)
    e = np.exp(-params.gamma_eff * tau)
    c = np.cos(params.omega_eff * tau)
    return _out(2.0 * e + 1.0 + e * e + 2.0 * a * e * (1.0 + c), tau)


def g2_vggb(tau, params: SystemParams):
    """Exciton photon first: ``1 + e^{-G tau}(e^{-G tau} - 2 cos(Omega tau))``."""
    tau = _times(tau)
    _alpha(params)
    e = np.exp(-params.gamma_eff * tau)
    c = np.cos(params.omega_eff * tau)
    return _out(1.0 + e * (e - 2.0 * c), tau)


def g2_plus_vv_plus(tau, params: SystemParams):
    """Dressed ``+`` photon then V exciton photon; the conditional state is
    ``|V><V|`` exactly as for :func:`g2_bvvg`.  Also describes ``0VV0``."""
    return g2_bvvg(tau, params)


def g2_v_plus_plus_v(tau, params: SystemParams):
    """V exciton photon first, then the filtered ``+`` photon."""
    tau = _times(tau)
    a = _alpha(params)
    e = np.exp(-params.gamma_eff * tau)
    c = np.cos(params.omega_eff * tau)
    pref = 2.0 * (1.0 + a) / (1.0 + 2.0 * a)
    value = 1.0 + pref * (e * e * (1.0 - 0.5 / (1.0 + a)) + e * (1.0 - a * c / (1.0 + a)))
    return _out(value, tau)


def g2_v_plus_zero_v(tau, params: SystemParams):
    """Cross correlation: collapse onto ``0``, then detect ``+``; zero at tau = 0."""
    tau = _times(tau)
    a = _alpha(params)
    e = np.exp(-params.gamma_eff * tau)
    c = np.cos(params.omega_eff * tau)
    pref = 2.0 * (1.0 + a) / (1.0 + 2.0 * a)
    value = 1.0 + pref * (e * e * (1.0 - 0.5 / (1.0 + a)) - e * (1.0 + a * c / (1.0 + a)))
    return _out(value, tau)


def g2_ex_forward(tau, params: SystemParams):
    """Biexciton-exciton direction of the ``+``/``0`` mixture.

    All four contributions share the conditional state ``|V><V|``, so the
    mixture is ``rho^VV_VV(tau) / rho_VV(inf)``; evaluated here through the
    integrated V population rather than through :func:`g2_bvvg`.
    """
    tau = _times(tau)
    _alpha(params)
    vv = np.asarray(rho_vv(tau, AdiabaticIC.exciton_v(), params, method="integral"))
    return _out(vv / steady_state_populations(params)["V"], tau)


def g2_ex_backward(tau, params: SystemParams):
    """Exciton-biexciton direction of the ``+``/``0`` mixture.

    ``1 + e^{-2 G tau} - 2 alpha cos(Omega tau) e^{-G tau} / (1 + 2 alpha)``
    """
    tau = _times(tau)
    a = _alpha(params)
    e = np.exp(-params.gamma_eff * tau)
    c = np.cos(params.omega_eff * tau)
    return _out(1.0 + e * e - 2.0 * a * c * e / (1.0 + 2.0 * a), tau)


def conditional_dressed_population(tau, sign: str, params: SystemParams):
    """Filtered ``+`` population after collapsing onto ``+`` (``sign="+"``)
    or onto ``0`` (``sign="-"``), starting from unit weight."""
    tau = _times(tau)
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    ga, om, gn, on = _rates(params)
    e = np.exp(-ga * tau)
    c = np.cos(om * tau)
    if sign == "+":
        mid = 2.0 * e * (1.0 - ga * gn * c)
    else:
        mid = -2.0 * e * (1.0 + ga * gn * c)
    four_rho = 2.0 * e * e * (1.0 - 0.5 * om * on) + mid + om * on + 2.0 * ga * gn
    return _out(0.25 * four_rho, tau)


def conditional_dressed_population_limit(params: SystemParams) -> float:
    """Common ``tau -> inf`` value of both conditional populations."""
    ga, om, gn, on = _rates(params)
    return 0.25 * (om * on + 2.0 * ga * gn)


@dataclass(frozen=True)
class DressedEigensystem:
    """Eigenvalues, normalization factors and eigenvectors of the
    rotating-frame Hamiltonian.

    ``e3``/``e4`` belong to the ``+``/``-`` states built from ``G``, ``H``
    and ``B``; ``e0 = 0`` to ``0 = (B - G)/sqrt(2)``; ``e1 = delta`` to ``V``.
    """

    e0: float
    e1: float
    e3: float
    e4: float
    a1: float
    a2: float
    a3: float
    vectors: dict = field(repr=False)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([self.e0, self.e1, self.e3, self.e4])


def dressed_eigensystem(params: SystemParams) -> DressedEigensystem:
    """Closed-form diagonalization of the rotating-frame Hamiltonian."""
    wl, d = params.omega_L, params.delta
    root = math.sqrt(d * d + 8.0 * wl * wl)
    e3 = 0.5 * (d + root)
    e4 = -2.0 * wl * wl / e3  # = (d - root)/2 without cancellation
    a1sq = 0.5 * e4 / (e4 - e3)
    a2sq = 0.5 * e3 / (e3 - e4)
    a1, a2 = math.sqrt(a1sq), math.sqrt(a2sq)
    a3 = 1.0 / math.sqrt(2.0)
    # H coefficients a1 e3/wl and a2 e4/wl; sqrt(2) a2 and -sqrt(2) a1 are the
    # same numbers without the 1/wl singularity or cancellation at weak drive
    h_plus = math.sqrt(2.0) * a2
    h_minus = -math.sqrt(2.0) * a1
    vectors = {
        DressedLabel.PLUS: np.array([a1, h_plus, a1, 0.0]),
        DressedLabel.MINUS: np.array([a2, h_minus, a2, 0.0]),
        DressedLabel.ZERO: np.array([-a3, 0.0, a3, 0.0]),
        DressedLabel.V: np.array([0.0, 0.0, 0.0, 1.0]),
    }
    return DressedEigensystem(0.0, d, e3, e4, a1, a2, a3, vectors)


def laplace_pairs(gamma: float, omega: float) -> list[tuple[str, Callable, Callable]]:
    """Transform pairs ``(name, F(s), f(t))`` used to invert the reduced
    equations, with ``F(s) = int_0^inf f(t) e^{-st} dt``."""
    g, w = gamma, omega
    n = w * w + g * g

    def den(s):
        return (s + g) ** 2 + w * w

    return [
        ("1/den", lambda s: 1.0 / den(s),
         lambda t: np.exp(-g * t) * np.sin(w * t) / w),
        ("(s+G)/den", lambda s: (s + g) / den(s),
         lambda t: np.exp(-g * t) * np.cos(w * t)),
        ("1/(s den)", lambda s: 1.0 / (s * den(s)),
         lambda t: 1.0 / n - np.exp(-g * t) / w * (w * np.cos(w * t) + g * np.sin(w * t)) / n),
        ("(s+G)/(s den)", lambda s: (s + g) / (s * den(s)),
         lambda t: g / n + np.exp(-g * t) * (w * np.sin(w * t) - g * np.cos(w * t)) / n),
    ]
