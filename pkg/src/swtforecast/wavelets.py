"""Daubechies filter banks, single-level DWT/IDWT, and the shift-invariant SWT.

Conventions
-----------
Analysis uses circular correlation: coefficient ``k`` of a band is computed
from the signal window starting at index ``k`` (at index ``2k`` for the
decimated DWT).  Synthesis is the exact adjoint of analysis, which is the
same as zero-upsampling followed by circular convolution with the
time-reversed reconstruction filters; the pairing makes every round trip an
identity up to floating-point rounding.

At stationary-transform level ``l`` the base filters are upsampled by
``2**(l-1)`` (zeros inserted between taps) and applied by circular
correlation with no downsampling, so every coefficient band keeps the length
of the analyzed signal.  All boundary handling inside this module is
periodic; callers that need a different boundary treatment extend the signal
explicitly before decomposing (see :mod:`swtforecast.padding`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DivisibilityError, ShapeError, UnsupportedOrderError

MAX_ORDER = 7
MAX_LEVEL = 4


@dataclass(frozen=True)
class FilterPair:
    """Decomposition and reconstruction filters for one Daubechies order.

    ``lp``/``hp`` are the analysis low-pass and high-pass filters of length
    ``2 * order``; ``lp_r``/``hp_r`` are their time reversals, used for
    synthesis.  The high-pass is tied to the low-pass by the
    quadrature-mirror relation ``hp[k] == (-1)**k * lp[F-1-k]``.
    """

    order: int
    lp: np.ndarray
    hp: np.ndarray
    lp_r: np.ndarray
    hp_r: np.ndarray

    @property
    def length(self) -> int:
        return 2 * self.order


@dataclass(frozen=True)
class SwtCoefficients:
    """Output of :func:`swt`: one approximation band plus ``level`` detail bands.

    ``details[i]`` holds the detail band of level ``i + 1``.  Every band has
    length ``signal_len``.
    """

    level: int
    approx: np.ndarray
    details: tuple[np.ndarray, ...]
    signal_len: int

    @property
    def n_coeff(self) -> int:
        return self.level + 1

    def to_array(self) -> np.ndarray:
        """Bands stacked as columns: approximation first, then details 1..DL."""
        return np.column_stack([self.approx, *self.details])


@dataclass(frozen=True)
class ComponentSet:
    """Time-domain components reconstructed band by band; they sum to the signal."""

    level: int
    approx_component: np.ndarray
    detail_components: tuple[np.ndarray, ...]

    def to_array(self) -> np.ndarray:
        """Components stacked as columns: approximation first, then details 1..DL."""
        return np.column_stack([self.approx_component, *self.detail_components])

    def total(self) -> np.ndarray:
        return self.approx_component + np.sum(self.detail_components, axis=0)


def _moment_scales(f: int, m: int) -> np.ndarray:
    """Row scales for the vanishing-moment equations, k**p grows like (F-1)**p."""
    return np.maximum(1.0, (f - 1.0) ** np.arange(m))


def _daubechies_system(h: np.ndarray) -> np.ndarray:
    """Residuals of the defining equations for a low-pass filter of order m.

    Unit norm, orthogonality of even shifts, and m vanishing moments of the
    mirrored high-pass; 2m equations for 2m unknowns.  Moment rows are
    rescaled so every residual is O(1) at the solution.
    """
    f = h.size
    m = f // 2
    eqs = [h @ h - 1.0]
    for mu in range(1, m):
        eqs.append(h[: f - 2 * mu] @ h[2 * mu :])
    k = np.arange(f)
    signs = (-1.0) ** k
    hp = signs * h[::-1]
    scales = _moment_scales(f, m)
    for p in range(m):
        eqs.append((k**p @ hp) / scales[p])
    return np.asarray(eqs)


def _daubechies_jacobian(h: np.ndarray) -> np.ndarray:
    f = h.size
    m = f // 2
    jac = np.zeros((2 * m, f))
    jac[0] = 2.0 * h
    for mu in range(1, m):
        row = np.zeros(f)
        row[: f - 2 * mu] += h[2 * mu :]
        row[2 * mu :] += h[: f - 2 * mu]
        jac[mu] = row
    j = np.arange(f)
    moment_sign = -((-1.0) ** j)
    scales = _moment_scales(f, m)
    for p in range(m):
        jac[m + p] = moment_sign * (f - 1 - j) ** p / scales[p]
    return jac


def _spectral_factor_guess(order: int) -> np.ndarray:
    """Initial low-pass filter from spectral factorization.

    The half-band magnitude polynomial P(y) = sum C(m-1+k, k) y^k is mapped
    to a polynomial in z via y = (2 - z - 1/z)/4; its roots come in
    reciprocal pairs and the minimal-phase factor (roots inside the unit
    circle) is combined with the (1+z)^m binomial part.
    """
    m = order
    poly = np.polynomial.polynomial
    q2 = np.zeros(2 * m - 1)
    for k in range(m):
        c = math.comb(m - 1 + k, k) * (-0.25) ** k
        term = c * poly.polypow(np.array([1.0, -1.0]), 2 * k)
        shifted = np.zeros(2 * m - 1)
        shifted[m - 1 - k : m - 1 - k + term.size] = term
        q2 += shifted
    roots = poly.polyroots(q2)
    inside = roots[np.abs(roots) < 1.0]
    factor = poly.polyfromroots(inside)
    if np.max(np.abs(factor.imag)) > 1e-9:
        raise RuntimeError("spectral factor is not real; conjugate pairing failed")
    binomial = np.array([math.comb(m, i) for i in range(m + 1)], dtype=float)
    h = np.convolve(binomial, factor.real)
    h *= math.sqrt(2.0) / h.sum()
    return h


@lru_cache(maxsize=None)
def _lowpass(order: int) -> tuple[float, ...]:
    if order == 1:
        v = 1.0 / math.sqrt(2.0)
        return (v, v)
    h = _spectral_factor_guess(order)
    # Newton polish on the full nonlinear system; the factorization guess is
    # close enough for quadratic convergence to machine precision.
    for _ in range(60):
        res = _daubechies_system(h)
        if np.max(np.abs(res)) < 1e-13:
            break
        h = h - np.linalg.solve(_daubechies_jacobian(h), res)
    else:
        raise RuntimeError(f"filter refinement did not converge for order {order}")
    if h.sum() < 0:
        h = -h
    # Fix the extremal-phase orientation (energy concentrated at the front).
    if abs(h[0]) < abs(h[-1]):
        h = h[::-1]
    return tuple(h.tolist())


def daubechies_filters(order: int) -> FilterPair:
    """Generate the order-``order`` Daubechies filter pair (db1..db7).

    Filters are solved from the orthonormality and vanishing-moment
    conditions rather than read from a table; the solution is normalized so
    the low-pass sums to sqrt(2).
    """
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_ORDER:
        raise UnsupportedOrderError(
            f"wavelet order must be an integer in [1, {MAX_ORDER}], got {order!r}"
        )
    lp = np.array(_lowpass(int(order)))
    signs = (-1.0) ** np.arange(lp.size)
    hp = signs * lp[::-1]
    return FilterPair(
        order=int(order),
        lp=lp,
        hp=hp,
        lp_r=lp[::-1].copy(),
        hp_r=hp[::-1].copy(),
    )


def _correlate_periodic(x: np.ndarray, taps: np.ndarray, step: int = 1) -> np.ndarray:
    """out[k] = sum_j taps[j] * x[(k + j*step) mod N], wrap-safe for any N."""
    out = np.zeros_like(x)
    for j in range(taps.size):
        out += taps[j] * np.roll(x, -(j * step))
    return out


def _adjoint_periodic(c: np.ndarray, taps: np.ndarray, step: int = 1) -> np.ndarray:
    """Adjoint of :func:`_correlate_periodic`: out[n] = sum_j taps[j] * c[(n - j*step) mod N]."""
    out = np.zeros_like(c)
    for j in range(taps.size):
        out += taps[j] * np.roll(c, j * step)
    return out


def _as_signal(x, name: str = "signal") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def dwt_single_level(
    signal, f: FilterPair, boundary: str = "periodic"
) -> tuple[np.ndarray, np.ndarray]:
    """One decimated analysis step: circular correlation then dyadic decimation.

    Coefficient ``k`` of each band is computed from the window starting at
    signal index ``2k``.  Only the periodic boundary is supported; explicit
    padding is the mechanism for any other boundary treatment.
    """
    if boundary != "periodic":
        raise ValueError(f"unsupported boundary mode {boundary!r}; only 'periodic'")
    x = _as_signal(signal)
    n = x.size
    if n % 2 != 0:
        raise ShapeError(f"signal length must be even, got {n}")
    if n < f.length:
        raise ShapeError(f"signal length {n} shorter than filter length {f.length}")
    ca = _correlate_periodic(x, f.lp)[::2]
    cd = _correlate_periodic(x, f.hp)[::2]
    return ca, cd


def idwt_single_level(ca, cd, f: FilterPair, boundary: str = "periodic") -> np.ndarray:
    """Exact inverse of :func:`dwt_single_level` under the periodic boundary."""
    if boundary != "periodic":
        raise ValueError(f"unsupported boundary mode {boundary!r}; only 'periodic'")
    a = _as_signal(ca, "cA")
    d = _as_signal(cd, "cD")
    if a.size != d.size:
        raise ShapeError(f"cA and cD lengths differ: {a.size} != {d.size}")
    n = 2 * a.size
    up_a = np.zeros(n)
    up_d = np.zeros(n)
    up_a[::2] = a
    up_d[::2] = d
    return _adjoint_periodic(up_a, f.lp) + _adjoint_periodic(up_d, f.hp)


def swt(signal, f: FilterPair, level: int) -> SwtCoefficients:
    """Stationary wavelet transform: all decimation phases retained.

    Each stage correlates with the base filters upsampled by ``2**(l-1)``
    and keeps every output sample, so all bands have the input length.  The
    length must be divisible by ``2**level``.
    """
    if not 1 <= level:
        raise ValueError(f"decomposition level must be >= 1, got {level}")
    x = _as_signal(signal)
    n = x.size
    required = 2**level
    if n % required != 0:
        raise DivisibilityError(
            f"signal length {n} must be a multiple of 2**level = {required}"
        )
    approx = x
    details = []
    for lvl in range(1, level + 1):
        step = 2 ** (lvl - 1)
        details.append(_correlate_periodic(approx, f.hp, step))
        approx = _correlate_periodic(approx, f.lp, step)
    return SwtCoefficients(
        level=level, approx=approx, details=tuple(details), signal_len=n
    )


def _validate_coefficients(coeffs: SwtCoefficients) -> None:
    if coeffs.level < 1:
        raise ShapeError(f"level must be >= 1, got {coeffs.level}")
    if len(coeffs.details) != coeffs.level:
        raise ShapeError(
            f"expected {coeffs.level} detail bands, got {len(coeffs.details)}"
        )
    n = coeffs.signal_len
    if coeffs.approx.shape != (n,):
        raise ShapeError(f"approximation band must have shape ({n},)")
    for i, d in enumerate(coeffs.details):
        if d.shape != (n,):
            raise ShapeError(f"detail band {i + 1} must have shape ({n},)")
    if n % 2**coeffs.level != 0:
        raise DivisibilityError(
            f"signal length {n} must be a multiple of 2**level = {2 ** coeffs.level}"
        )


def _iswt_one_level(a: np.ndarray, d: np.ndarray, f: FilterPair) -> np.ndarray:
    """Invert one stationary level by averaging the two decimated inverses."""
    even = idwt_single_level(a[0::2], d[0::2], f)
    odd = np.roll(idwt_single_level(a[1::2], d[1::2], f), 1)
    return 0.5 * (even + odd)


def iswt(coeffs: SwtCoefficients, f: FilterPair) -> np.ndarray:
    """Inverse stationary transform: average the inverses of every decimation phase.

    At level ``l`` the bands split into ``2**(l-1)`` interleaved subsignals,
    each an independent single-level stationary transform; every subsignal is
    inverted by averaging its even- and odd-phase decimated inverses.
    """
    _validate_coefficients(coeffs)
    approx = coeffs.approx.astype(float).copy()
    for lvl in range(coeffs.level, 0, -1):
        detail = np.asarray(coeffs.details[lvl - 1], dtype=float)
        stride = 2 ** (lvl - 1)
        prev = np.empty_like(approx)
        for r in range(stride):
            prev[r::stride] = _iswt_one_level(approx[r::stride], detail[r::stride], f)
        approx = prev
    return approx


def reconstruct_components(coeffs: SwtCoefficients, f: FilterPair) -> ComponentSet:
    """Per-band time-domain components; their sum reproduces the signal.

    Each component is the inverse transform of one coefficient band with all
    other bands zeroed, so additivity follows from the linearity of
    :func:`iswt`.
    """
    _validate_coefficients(coeffs)
    n = coeffs.signal_len
    zeros = np.zeros(n)

    def _single(approx: np.ndarray, detail_index: int | None) -> np.ndarray:
        details = [zeros] * coeffs.level
        if detail_index is not None:
            details[detail_index] = coeffs.details[detail_index]
        return iswt(
            SwtCoefficients(
                level=coeffs.level,
                approx=approx,
                details=tuple(details),
                signal_len=n,
            ),
            f,
        )

    approx_component = _single(coeffs.approx, None)
    detail_components = tuple(_single(zeros, i) for i in range(coeffs.level))
    return ComponentSet(
        level=coeffs.level,
        approx_component=approx_component,
        detail_components=detail_components,
    )
