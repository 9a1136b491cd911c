"""Level labels, basis vectors and flip operators of the four-level emitter.

The bare basis is ordered ``G, H, B, V`` (indices 0..3).  Dressed labels are
resolved into bare-basis vectors either in their full form (eigenvectors of
the rotating-frame Hamiltonian, which needs the drive parameters) or in the
V-filtered form used for polarization-selective detection, where the
``H`` component is dropped and the remainder renormalized.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Union

import numpy as np

if TYPE_CHECKING:
    from .lindblad import SystemParams

DIM = 4


class BareLevel(enum.IntEnum):
    G = 0
    H = 1
    B = 2
    V = 3

    @property
    def symbol(self) -> str:
        return self.name


class DressedLabel(enum.Enum):
    PLUS = "+"
    MINUS = "-"
    ZERO = "0"
    V = "V"

    @property
    def symbol(self) -> str:
        return self.value


Label = Union[BareLevel, DressedLabel]

_SQRT2 = np.sqrt(2.0)

_FILTERED = {
    DressedLabel.PLUS: np.array([1.0, 0.0, 1.0, 0.0]) / _SQRT2,
    DressedLabel.MINUS: np.array([1.0, 0.0, 1.0, 0.0]) / _SQRT2,
    DressedLabel.ZERO: np.array([-1.0, 0.0, 1.0, 0.0]) / _SQRT2,
    DressedLabel.V: np.array([0.0, 0.0, 0.0, 1.0]),
}


def parse_label(symbol: Union[str, Label]) -> Label:
    """Map ``"G"``, ``"B"``, ``"+"``, ``"0"`` ... onto a label.

    ``"V"`` is ambiguous between the bare and the dressed alphabet; both
    resolve to the same vector, so the bare level is returned.
    """
    if isinstance(symbol, (BareLevel, DressedLabel)):
        return symbol
    s = str(symbol).strip()
    if s in BareLevel.__members__:
        return BareLevel[s]
    for label in DressedLabel:
        if s == label.value:
            return label
    raise ValueError(f"unknown level label {symbol!r}")


def ket(label: Union[str, Label], params: Optional["SystemParams"] = None,
        filtered: bool = True) -> np.ndarray:
    """Bare-basis column vector (length 4, complex) of a level label.

    Bare labels give unit vectors.  Dressed labels give the V-filtered
    superpositions by default; with ``filtered=False`` the full eigenvectors
    of the rotating-frame Hamiltonian at ``params`` are returned.
    """
    label = parse_label(label)
    if isinstance(label, BareLevel):
        v = np.zeros(DIM, dtype=complex)
        v[label] = 1.0
        return v
    if filtered:
        return _FILTERED[label].astype(complex)
    if params is None:
        raise ValueError("full dressed eigenvectors need SystemParams")
    # local import: analytic depends on this module
    from .analytic import dressed_eigensystem

    return dressed_eigensystem(params).vectors[label].astype(complex)


@dataclass(frozen=True)
class TransitionOp:
    """Flip operator ``|i><j|`` between two (bare or dressed) levels.

    As a collapse operator it describes the emission ``j -> i``.
    """

    i: Label
    j: Label
    params: Optional["SystemParams"] = None
    filtered: bool = True

    def __post_init__(self):
        object.__setattr__(self, "i", parse_label(self.i))
        object.__setattr__(self, "j", parse_label(self.j))

    @property
    def matrix(self) -> np.ndarray:
        left = ket(self.i, self.params, self.filtered)
        right = ket(self.j, self.params, self.filtered)
        return np.outer(left, right.conj())

    @property
    def dag(self) -> "TransitionOp":
        return TransitionOp(self.j, self.i, self.params, self.filtered)

    def __str__(self) -> str:
        return f"|{self.i.symbol}><{self.j.symbol}|"


def sigma(i: Union[str, Label], j: Union[str, Label]) -> np.ndarray:
    """Matrix of ``|i><j|`` using filtered dressed vectors."""
    return TransitionOp(i, j).matrix


def projector(label: Union[str, Label], params: Optional["SystemParams"] = None,
              filtered: bool = True) -> np.ndarray:
    v = ket(label, params, filtered)
    return np.outer(v, v.conj())
