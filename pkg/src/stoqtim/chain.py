"""Closed-form analytics of the periodic 1D transverse-field Ising chain.

The chain H = -g sum_j Z_j Z_{j+1} - sum_j X_j (periodic, g > 1) has three
lowest energies expressible through eps_p = |g - w_m^p| over integer and
half-integer momenta, a ground-state splitting delta = (E1 - E0)/2, an
excitation gap Delta = 4 eps_{1/2} - delta, and a form factor xi given by a
product formula.  The splitting also admits a contour-integral representation
whose value is the full splitting E1 - E0 = 2 delta; ``chain_splitting_integral``
returns half of it so that all public quantities share the half-splitting
convention.

Closed forms for E2 (and hence Delta) fail at m = 2, where the periodic sum
doubles the single bond; they are restricted to m >= 3.  E0, E1, delta and xi
are exact for all m >= 2.

Precision: the splitting suffers catastrophic cancellation in double
arithmetic once delta << |E0|, so delta is evaluated with mpmath at a working
precision scaled to m*log10(g).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath as mp

from .errors import UnreachableTargetError, ValidationError
from . import calibration

MIN_CHAIN_LENGTH = 2
# Auto-selection never proposes chains shorter than this: the splitting of
# very short chains cannot decay enough for realistic budgets (delta^-1 is
# capped near 10 at m = 2).  Explicit lengths below this remain allowed.
SELECT_MIN_LENGTH = 6
TABULATED_C = tuple(range(2, 13))
DELTA_FLOOR = 1e-250


@dataclass(frozen=True)
class ChainParams:
    """Length, coupling, and optional exponent c with g = 1 + c*log(m)/m."""

    length: int
    coupling: float
    exponent: Optional[float] = None

    def __post_init__(self):
        if self.length < MIN_CHAIN_LENGTH:
            raise ValidationError(f"chain length must be >= {MIN_CHAIN_LENGTH}")
        if self.coupling <= 1.0:
            raise ValidationError("chain coupling g must exceed 1")

    @staticmethod
    def from_exponent(length: int, c: float) -> "ChainParams":
        g = 1.0 + c * math.log(length) / length
        return ChainParams(length, g, c)

    @property
    def m(self) -> int:
        return self.length

    @property
    def g(self) -> float:
        return self.coupling


@dataclass(frozen=True)
class ChainSpectrum:
    e0: float
    e1: float
    e2: float
    splitting: float  # delta = (E1 - E0)/2
    gap: float        # Delta = 4|g - w^{1/2}| - delta
    xi: float
    eta: float        # xi * (1 - g^-2)^{-1/8}


def _eps(m: int, g: float, p: float) -> float:
    # |g - w_m^p| without forming the complex root explicitly
    return math.hypot(g - math.cos(2 * math.pi * p / m), math.sin(2 * math.pi * p / m))


def chain_energies(p: ChainParams) -> tuple[float, float, float]:
    """(E0, E1, E2) from the momentum sums; E2 is NaN at m = 2 (see module doc)."""
    m, g = p.length, p.coupling
    e0 = -sum(_eps(m, g, j + 0.5) for j in range(m))
    e1 = -sum(_eps(m, g, j) for j in range(m))
    e2 = e0 + 4.0 * _eps(m, g, 0.5) if m >= 3 else float("nan")
    return e0, e1, e2


def _delta_dps(m: int, g: float) -> int:
    return int(40 + max(0.0, m * math.log10(g)))


def chain_splitting(p: ChainParams) -> float:
    """delta = (E1 - E0)/2, evaluated in extended precision."""
    m, g = p.length, p.coupling
    with mp.workdps(_delta_dps(m, g)):
        gg = mp.mpf(g)
        tot = mp.mpf(0)
        for j in range(m):
            ej = abs(gg - mp.e ** (2j * mp.pi * j / m))
            eh = abs(gg - mp.e ** (2j * mp.pi * (j + mp.mpf(1) / 2) / m))
            tot += eh - ej
        return float(tot / 2)


def chain_gap(p: ChainParams) -> float:
    """Delta = 4|g - w_m^{1/2}| - delta (midpoint-to-excited gap); m >= 3 only."""
    if p.length < 3:
        raise ValidationError("chain gap closed form holds for m >= 3 only")
    return 4.0 * _eps(p.length, p.coupling, 0.5) - chain_splitting(p)


def chain_xi(p: ChainParams) -> float:
    """Form factor xi = <psi_1|Z_j|psi_0| > 0, product formula in log space."""
    m, g = p.length, p.coupling
    ep = [_eps(m, g, j) for j in range(m)]
    eq = [_eps(m, g, j + 0.5) for j in range(m)]
    log_xi = 0.125 * math.log1p(-g ** -2.0)
    log_xi += 0.25 * sum(math.log(a + b) for a in ep for b in eq)
    log_xi -= 0.125 * sum(math.log(a + b) for a in ep for b in ep)
    log_xi -= 0.125 * sum(math.log(a + b) for a in eq for b in eq)
    return math.exp(log_xi)


def chain_eta(p: ChainParams) -> float:
    return chain_xi(p) * (1.0 - p.coupling ** -2.0) ** -0.125


def chain_spectrum(p: ChainParams) -> ChainSpectrum:
    e0, e1, e2 = chain_energies(p)
    delta = chain_splitting(p)
    gap = chain_gap(p) if p.length >= 3 else float("nan")
    xi = chain_xi(p)
    return ChainSpectrum(e0, e1, e2, delta, gap, xi,
                         xi * (1.0 - p.coupling ** -2.0) ** -0.125)


def chain_splitting_integral(p: ChainParams) -> float:
    """Half the contour-integral value

        (4 m sqrt(g) / pi) * int_0^{1/g} x^{m-1} sqrt(x + 1/x - g - 1/g) / (1 - x^{2m}) dx,

    evaluated by double-exponential (tanh-sinh) quadrature in extended
    precision; the integral itself equals the full splitting E1 - E0.
    The integrand has a sqrt endpoint zero at x = 1/g and an x^{m-3/2}
    endpoint at 0, both handled by the tanh-sinh node clustering.
    """
    m, g = p.length, p.coupling
    with mp.workdps(_delta_dps(m, g) + 10):
        gg = mp.mpf(g)
        hi = 1 / gg

        def f(x):
            if x <= 0 or x >= hi:
                return mp.mpf(0)
            s = x + 1 / x - gg - 1 / gg
            if s < 0:
                return mp.mpf(0)
            return x ** (m - 1) * mp.sqrt(s) / (1 - x ** (2 * m))

        val = mp.quad(f, [0, hi])
        return float(4 * m * mp.sqrt(gg) / mp.pi * val / 2)


def chain_z_sums(p: ChainParams) -> tuple[float, float]:
    """(Z_+, Z_-) = (sum_p 1/eps_p over integers, over half-integers)."""
    m, g = p.length, p.coupling
    zp = sum(1.0 / _eps(m, g, j) for j in range(m))
    zm = sum(1.0 / _eps(m, g, j + 0.5) for j in range(m))
    return zp, zm


def chain_eta_log_derivative(p: ChainParams) -> float:
    """Closed form for d(log eta)/dg: (1/16)(1/g - g)(Z_+ - Z_-)^2, always <= 0."""
    zp, zm = chain_z_sums(p)
    g = p.coupling
    return (1.0 / g - g) * (zp - zm) ** 2 / 16.0


def chain_eta_monotonicity(m: int, g_grid: Sequence[float], tol: float = 1e-12) -> bool:
    """True iff eta(g) is non-increasing across the ascending grid AND the
    closed-form log-derivative is <= 0 at every grid point."""
    gs = list(g_grid)
    if any(b <= a for a, b in zip(gs, gs[1:])):
        raise ValidationError("g grid must be strictly ascending")
    etas = [chain_eta(ChainParams(m, g)) for g in gs]
    non_increasing = all(b <= a + tol for a, b in zip(etas, etas[1:]))
    deriv_ok = all(chain_eta_log_derivative(ChainParams(m, g)) <= tol for g in gs)
    return non_increasing and deriv_ok


def select_chain_parameters(n_logical: int, J: float, eps: float, eta: float,
                            length: Optional[int] = None,
                            allow_saturation: bool = False) -> ChainParams:
    """Chain length and the smallest tabulated exponent c meeting the error targets.

    Selection rule: delta^-1 >= K * m * J * (1/eps) * (1/xi) * (1 + 1/eta)
    with the shipped calibration constant K, subject to delta staying above
    the representable floor.  With ``allow_saturation`` the largest feasible
    exponent is returned when no tabulated c reaches the target (deep-chain
    composition; the caller records the saturation).
    """
    if n_logical <= 0 or J <= 0 or eps <= 0 or eta <= 0:
        raise ValidationError("selection arguments must be positive")
    m = max(n_logical, SELECT_MIN_LENGTH) if length is None else length
    if m < max(n_logical, MIN_CHAIN_LENGTH):
        raise ValidationError(f"chain length {m} too short for {n_logical} logical qubits")
    K = calibration.CHAIN_SELECT_K
    best = None
    for c in TABULATED_C:
        p = ChainParams.from_exponent(m, c)
        delta = chain_splitting(p)
        if delta < DELTA_FLOOR:
            break
        best = p
        xi = chain_xi(p)
        required = math.log(K * m) + math.log(J) - math.log(eps) - math.log(xi) \
            + math.log1p(1.0 / eta)
        if -math.log(delta) >= required:
            return p
    if allow_saturation and best is not None:
        return best
    raise UnreachableTargetError(
        f"no tabulated c in {TABULATED_C} reaches eps={eps}, eta={eta} "
        f"for m={m}, J={J}")
