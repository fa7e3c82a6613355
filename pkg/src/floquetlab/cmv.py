"""Floquet engine for periodic extended CMV matrices.

The operator data is a periodic cycle of Verblunsky coefficients in the
open unit disk.  Szego matrices play the role of transfer matrices; the
monodromy over one period, normalized by z^(-q/2), has determinant one
and real trace on the unit circle, and the spectrum is the set of
z = exp(i theta) where that trace lies in [-2, 2].  A finite section of
the doubly infinite five-diagonal matrix serves as an independent
eigenvalue oracle.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import su11
from .errors import NonRealTrace, OutOfDisk

_RESCALE_AT = 1e150
_LOG_SATURATE = 300.0
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class VerblunskyCycle:
    """q-periodic Verblunsky coefficients, each strictly inside the disk."""

    values: tuple[complex, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("cycle needs at least one coefficient")
        for v in self.values:
            if abs(v) >= 1.0:
                raise OutOfDisk(f"coefficient {v} has modulus {abs(v)} >= 1")

    @classmethod
    def constant(cls, value, q: int = 1) -> "VerblunskyCycle":
        return cls(values=(complex(value),) * q)

    @classmethod
    def from_values(cls, values: Sequence[complex]) -> "VerblunskyCycle":
        return cls(values=tuple(complex(v) for v in values))

    @property
    def q(self) -> int:
        return len(self.values)

    @property
    def sup_abs(self) -> float:
        return max(abs(v) for v in self.values)

    @cached_property
    def rhos(self) -> tuple[float, ...]:
        return tuple(math.sqrt(1.0 - abs(v) ** 2) for v in self.values)

    def repeated(self, n: int) -> "VerblunskyCycle":
        if n < 1:
            raise ValueError("repetition count must be >= 1")
        return VerblunskyCycle(values=self.values * n)

    def with_value(self, k: int, value) -> "VerblunskyCycle":
        vals = list(self.values)
        vals[k] = complex(value)
        return VerblunskyCycle(values=tuple(vals))


def concatenate_cycles(cycles: Iterable[VerblunskyCycle]) -> VerblunskyCycle:
    vals: list[complex] = []
    for c in cycles:
        vals.extend(c.values)
    return VerblunskyCycle(values=tuple(vals))


def szego_matrix(a, z) -> np.ndarray:
    """(1 - |a|^2)^(-1/2) [[z, -conj(a)], [-a z, 1]]; det = z."""
    a = complex(a)
    if abs(a) >= 1.0:
        raise OutOfDisk(f"coefficient {a} has modulus >= 1")
    z = complex(z)
    r = 1.0 / math.sqrt(1.0 - abs(a) ** 2)
    return np.array([[r * z, -r * a.conjugate()], [-r * a * z, r]])


def cmv_monodromy(alpha: VerblunskyCycle, theta: float) -> np.ndarray:
    """z^(-q/2) A(alpha_{q-1}, z) ... A(alpha_0, z) at z = exp(i theta).

    The half power is fixed as exp(-i q theta / 2) with theta reduced to
    [0, 2 pi); for odd q the branch seam at theta = 0 only flips the
    sign of the trace, which does not affect band membership.
    """
    theta = theta % TWO_PI
    z = cmath.exp(1j * theta)
    M = su11.IDENTITY.copy()
    for a in alpha.values:
        M = szego_matrix(a, z) @ M
    return cmath.exp(-0.5j * alpha.q * theta) * M


def _rescale_batch(M: np.ndarray, logscale: np.ndarray) -> None:
    n = M.shape[0]
    mx = np.abs(M).reshape(n, 4).max(axis=1)
    big = mx > _RESCALE_AT
    if big.any():
        M[big] /= mx[big, None, None]
        logscale[big] += np.log(mx[big])


def _szego_product_profile(alpha: VerblunskyCycle, thetas: np.ndarray,
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Normalized one-period Szego products over an angle grid."""
    n = thetas.size
    z = np.exp(1j * thetas)
    M = np.broadcast_to(np.eye(2, dtype=complex), (n, 2, 2)).copy()
    logscale = np.zeros(n)
    for a, rho in zip(alpha.values, alpha.rhos):
        S = np.empty((n, 2, 2), dtype=complex)
        r = 1.0 / rho
        S[:, 0, 0] = r * z
        S[:, 0, 1] = -r * complex(a).conjugate()
        S[:, 1, 0] = -r * complex(a) * z
        S[:, 1, 1] = r
        M = S @ M
        _rescale_batch(M, logscale)
    M = M * np.exp(-0.5j * alpha.q * thetas)[:, None, None]
    return M, logscale


def _cmv_trace_profile(alpha: VerblunskyCycle, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    thetas = np.asarray(thetas, dtype=float) % TWO_PI
    M, logscale = _szego_product_profile(alpha, thetas)
    return M[:, 0, 0] + M[:, 1, 1], logscale


def _matrix_power_profile(M: np.ndarray, logscale: np.ndarray, k: int,
                          ) -> tuple[np.ndarray, np.ndarray]:
    # plain repeated multiplication for small powers: squaring can
    # amplify rounding error through ill-conditioned elliptic factors
    if k <= 8:
        out = M.copy()
        out_ls = logscale.copy()
        for _ in range(k - 1):
            out = M @ out
            out_ls += logscale
            _rescale_batch(out, out_ls)
        return out, out_ls
    out = np.broadcast_to(np.eye(2, dtype=complex), M.shape).copy()
    out_ls = np.zeros_like(logscale)
    base = M.copy()
    base_ls = logscale.copy()
    e = k
    while e:
        if e & 1:
            out = base @ out
            out_ls += base_ls
            _rescale_batch(out, out_ls)
        e >>= 1
        if e:
            base = base @ base
            base_ls = base_ls * 2.0
            _rescale_batch(base, base_ls)
    return out, out_ls


def grouped_cmv_trace_profile(groups: Sequence[tuple[VerblunskyCycle, int]],
                              thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Monodromy traces of a cycle concatenation given as (cycle,
    repetitions) groups, using matrix powers for the repeated blocks."""
    thetas = np.asarray(thetas, dtype=float) % TWO_PI
    n = thetas.size
    M = np.broadcast_to(np.eye(2, dtype=complex), (n, 2, 2)).copy()
    logscale = np.zeros(n)
    for cycle, reps in groups:
        P, pls = _szego_product_profile(cycle, thetas)
        if reps > 1:
            P, pls = _matrix_power_profile(P, pls, reps)
        M = P @ M
        logscale += pls
        _rescale_batch(M, logscale)
    return M[:, 0, 0] + M[:, 1, 1], logscale


def _saturated_real(tr: np.ndarray, logscale: np.ndarray,
                    thetas: np.ndarray) -> np.ndarray:
    # 1e-7 relative: rounding noise scales with the largest partial
    # product, which can dwarf an O(1) trace; genuine branch or transfer
    # bugs show up at O(1) relative size
    bad = np.abs(tr.imag) > 1e-7 * np.maximum(1.0, np.abs(tr.real))
    if bad.any():
        i = int(np.argmax(bad))
        raise NonRealTrace(
            f"CMV trace at theta={thetas[i]} has imaginary part {tr.imag[i]:.3e}")
    return tr.real * np.exp(np.minimum(logscale, _LOG_SATURATE))


def cmv_discriminant_profile(alpha: VerblunskyCycle, thetas) -> np.ndarray:
    """Real monodromy traces over an angle grid, saturated near 1e130."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    tr, logscale = _cmv_trace_profile(alpha, thetas)
    return _saturated_real(tr, logscale, thetas)


def grouped_cmv_discriminant_profile(groups, thetas) -> np.ndarray:
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    tr, logscale = grouped_cmv_trace_profile(groups, thetas)
    return _saturated_real(tr, logscale, thetas)


def cmv_discriminant(alpha: VerblunskyCycle, theta: float) -> float:
    return float(cmv_discriminant_profile(alpha, [theta])[0])


@dataclass(frozen=True)
class ArcSet:
    """Sorted disjoint closed arcs on the circle, parameters in [0, 2 pi].

    Arcs are stored cut at theta = 0; a spectral arc crossing 0 appears
    as two stored arcs and is re-merged for presentation.
    """

    arcs: tuple[tuple[float, float], ...]

    @property
    def count(self) -> int:
        return len(self.arcs)

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.arcs))

    @property
    def is_full_circle(self) -> bool:
        return self.measure >= TWO_PI - 1e-12

    def distance_angular(self, theta: float) -> float:
        if not self.arcs:
            return math.inf
        t = theta % TWO_PI
        best = math.inf
        for a, b in self.arcs:
            if a <= t <= b:
                return 0.0
            d = min(abs(t - a), abs(t - b), abs(t - a + TWO_PI),
                    abs(t - b + TWO_PI), abs(t - a - TWO_PI), abs(t - b - TWO_PI))
            best = min(best, d)
        return best

    def contains(self, theta: float, tol: float = 0.0) -> bool:
        return self.distance_angular(theta) <= tol

    def merged_presentation(self) -> tuple[tuple[float, float], ...]:
        """Arcs with a wrap-around pair joined across theta = 0."""
        arcs = list(self.arcs)
        if len(arcs) >= 2 and arcs[0][0] <= 1e-12 and arcs[-1][1] >= TWO_PI - 1e-12:
            first, last = arcs[0], arcs[-1]
            if not self.is_full_circle:
                arcs = arcs[1:-1] + [(last[0], first[1] + TWO_PI)]
        return tuple(arcs)

    def distance_point(self, w: complex) -> float:
        """Euclidean distance from a point in C to the arc set."""
        if not self.arcs:
            return math.inf
        t = cmath.phase(w) % TWO_PI
        best = math.inf
        for a, b in self.arcs:
            if a <= t <= b or a <= t + TWO_PI <= b or a <= t - TWO_PI <= b:
                proj = cmath.exp(1j * t)
            else:
                proj = min((cmath.exp(1j * a), cmath.exp(1j * b)),
                           key=lambda p: abs(w - p))
            best = min(best, abs(w - proj))
        return best


def cmv_bands(alpha: VerblunskyCycle, tol: float) -> ArcSet:
    """Arcs where the real monodromy trace lies in [-2, 2], edges to tol."""
    return _scan_arcs(lambda ts: cmv_discriminant_profile(alpha, ts),
                      alpha.q, tol)


def cmv_bands_of_groups(groups: Sequence[tuple[VerblunskyCycle, int]],
                        tol: float) -> ArcSet:
    """cmv_bands for a cycle concatenation given as (cycle, repetitions)
    groups, evaluated through the grouped profile for speed."""
    q = sum(cycle.q * reps for cycle, reps in groups)
    return _scan_arcs(lambda ts: grouped_cmv_discriminant_profile(groups, ts),
                      q, tol)


def _scan_arcs(profile, q: int, tol: float) -> ArcSet:
    if not tol > 0:
        raise ValueError("tol must be positive")
    npts = max(4096, 64 * q)
    grid = np.linspace(0.0, TWO_PI, npts, endpoint=False)
    D = profile(grid)
    inside = np.abs(D) <= 2.0
    if not inside.any():
        return ArcSet(arcs=())
    if inside.all():
        return ArcSet(arcs=((0.0, TWO_PI),))

    spacing = TWO_PI / npts
    # close the scan cyclically: transitions between i and i+1 mod npts
    trans = np.flatnonzero(inside != np.roll(inside, -1))
    lo = np.where(inside[trans], grid[trans], (grid[trans] + spacing))
    hi = np.where(inside[trans], (grid[trans] + spacing), grid[trans])
    niter = max(int(math.ceil(math.log2(max(spacing / tol, 2.0)))) + 2, 4)
    for _ in range(niter):
        mid = 0.5 * (lo + hi)
        inside_mid = np.abs(profile(mid)) <= 2.0
        lo = np.where(inside_mid, mid, lo)
        hi = np.where(inside_mid, hi, mid)
    edges = (0.5 * (lo + hi)) % TWO_PI

    # assemble runs of inside points cyclically, then cut at theta = 0
    arcs: list[tuple[float, float]] = []
    trans_list = list(trans)
    for k, i in enumerate(trans_list):
        # arc ends at transition i (inside -> outside); it began at the
        # previous outside -> inside transition
        if not inside[i]:
            continue
        j = trans_list[k - 1]
        start = float(edges[trans_list.index(j)])
        end = float(edges[k])
        arcs.append((start, end))
    normalized: list[tuple[float, float]] = []
    for a, b in arcs:
        if b < a:
            normalized.append((a, TWO_PI))
            normalized.append((0.0, b))
        else:
            normalized.append((a, b))
    normalized.sort()
    return ArcSet(arcs=tuple(normalized))


def cmv_lyapunov(alpha: VerblunskyCycle, theta: float) -> float:
    """(1/q) log spectral radius of the monodromy; zero exactly on arcs."""
    D = cmv_discriminant(alpha, theta)
    a = abs(D)
    if a <= 2.0:
        return 0.0
    if a > 1e15:
        return math.log(a) / alpha.q
    return math.log((a + math.sqrt(a * a - 4.0)) / 2.0) / alpha.q


def cmv_lyapunov_profile(alpha: VerblunskyCycle, thetas) -> np.ndarray:
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    tr, logscale = _cmv_trace_profile(alpha, thetas)
    absD_log = np.log(np.maximum(np.abs(tr.real), 1e-300)) + logscale
    out = np.zeros(thetas.size)
    big = absD_log > math.log(1e15)
    mid = ~big & (absD_log > math.log(2.0) - 1e-12)
    if mid.any():
        D = np.abs(tr.real[mid]) * np.exp(logscale[mid])
        D = np.maximum(D, 2.0)
        out[np.flatnonzero(mid)] = np.log((D + np.sqrt(D * D - 4.0)) / 2.0)
    if big.any():
        out[np.flatnonzero(big)] = absD_log[big]
    return np.maximum(out / alpha.q, 0.0)


def extended_cmv_truncation(alpha: VerblunskyCycle, copies: int,
                            boundary: str = "verbatim") -> np.ndarray:
    """Finite section of the doubly infinite five-diagonal CMV matrix.

    Size 2 * copies * q.  With boundary="verbatim" the section is cut
    from the infinite pattern with zero interpretation: the two boundary
    rows are not unitary, and eigenvalue comparisons trim the resulting
    outliers.  With boundary="periodic" the pattern wraps around, which
    restores exact unitarity; the eigenvalues then sit on the spectral
    arcs to machine precision (discretized Floquet spectrum).
    """
    if copies < 1:
        raise ValueError("copies must be >= 1")
    if boundary not in ("verbatim", "periodic"):
        raise ValueError(f"unknown boundary {boundary!r}")
    q = alpha.q
    size = 2 * copies * q
    wrap = boundary == "periodic"

    def av(n: int) -> complex:
        return alpha.values[n % q]

    def rv(n: int) -> float:
        return alpha.rhos[n % q]

    E = np.zeros((size, size), dtype=complex)

    def put(i: int, j: int, val: complex) -> None:
        if wrap:
            E[i % size, j % size] = val
        elif 0 <= j < size:
            E[i, j] = val

    for k in range(0, size, 2):
        # even row 2m with k = 2m, and the odd row below it
        put(k, k - 1, av(k).conjugate() * rv(k - 1))
        put(k, k, -av(k).conjugate() * av(k - 1))
        put(k, k + 1, rv(k) * av(k + 1).conjugate())
        put(k, k + 2, rv(k) * rv(k + 1))
        i = k + 1
        put(i, k - 1, rv(k) * rv(k - 1))
        put(i, k, -rv(k) * av(k - 1))
        put(i, k + 1, -av(k) * av(k + 1).conjugate())
        put(i, k + 2, -av(k) * rv(k + 1))
    return E


def truncation_eigenvalues(alpha: VerblunskyCycle, copies: int,
                           boundary: str = "verbatim") -> np.ndarray:
    return np.linalg.eigvals(extended_cmv_truncation(alpha, copies, boundary))


def _poincare_point(a, b) -> float:
    a, b = complex(a), complex(b)
    if abs(a) >= 1.0 or abs(b) >= 1.0:
        raise OutOfDisk("Poincare distance needs both points inside the disk")
    r = abs((a - b) / (1.0 - a * b.conjugate()))
    return math.atanh(min(r, 1.0 - 1e-16))


def poincare_delta(alpha, beta) -> float:
    """Sup over positions of the hyperbolic distance between entries.

    Accepts VerblunskyCycle instances or plain sequences of disk points;
    shapes must match (equal lengths, compared positionwise).
    """
    avals = alpha.values if isinstance(alpha, VerblunskyCycle) else tuple(alpha)
    bvals = beta.values if isinstance(beta, VerblunskyCycle) else tuple(beta)
    if len(avals) != len(bvals):
        raise ValueError(f"shape mismatch: {len(avals)} vs {len(bvals)}")
    return max(_poincare_point(a, b) for a, b in zip(avals, bvals))


def poincare_push(a, w) -> complex:
    """Moebius image of w under the disk automorphism sending 0 to a.

    Maps the Euclidean disk |w| < tanh(r) onto the hyperbolic ball of
    radius r around a; used for seeded geodesic perturbation sampling.
    """
    a, w = complex(a), complex(w)
    return (w + a) / (1.0 + a.conjugate() * w)
