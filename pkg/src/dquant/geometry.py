"""Configuration-space charts, propagators, and the signed weight integrand.

One-type charts (plane): gauge group z -> a z + c (a > 0, c complex) is
fixed by pinning the source of the canonically-first edge at 0 and its
target on the unit circle; the edge constraint Im(z_t - z_s) < 0 puts the
target on the lower half-circle.  Chart coordinates, in order: the circle
angle x in (-pi, 0), then (Re, Im) of each remaining vertex in label
order.  The propagator is Arg(z_t - z_s).

Two-type charts (upper half-plane + boundary line): gauge group
z -> a z + b (a > 0, b real) is fixed by pinning z_1 = i.  Coordinates:
(Re, Im) of z_2..z_n in label order, then the boundary points t_1..t_m.
The propagator is the modified angle, supported where the target lies
inside the source's geodesic half-circle and vanishing on that border.

The weight integrand is the determinant of the matrix of propagator
differentials, rows in canonical edge order, columns in chart coordinate
order.  Its sign is meaningful; the chart conventions above are the
orientation.  Out-of-domain configurations are handled by a zero
jacobian, not by errors (the constraint regions have positive measure).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .graphs import AdmissibleGraph, GraphError, TwoTypeGraph

TWO_PI = 2.0 * math.pi

# The raw doubled harmonic angle sweeps 2*pi across the boundary chord;
# the calibrated propagator halves it so the single-edge two-type weight
# is exactly 1 (period pi on the chord and on the inner circle alike).
MODIFIED_ANGLE_SCALE = 0.5


@dataclass(frozen=True)
class Configuration:
    """Sampled point: complex positions z (all vertices, pinned included)
    and boundary points t (two-type only)."""

    z: tuple[complex, ...]
    t: tuple[float, ...] = ()


@dataclass(frozen=True)
class Chart:
    graph_key: str
    kind: str  # "one" | "two"
    n: int
    m: int
    dim: int
    pinned: tuple  # one-type: (source, target) of the pinned edge; two-type: (1,)

    def coordinate_names(self) -> list[str]:
        names = []
        if self.kind == "one":
            names.append("x")
            for v in range(1, self.n + 1):
                if v in self.pinned:
                    continue
                names += [f"re{v}", f"im{v}"]
        else:
            for v in range(2, self.n + 1):
                names += [f"re{v}", f"im{v}"]
            names += [f"t{j}" for j in range(1, self.m + 1)]
        return names


def chart_for(g) -> Chart:
    if isinstance(g, AdmissibleGraph):
        if not g.edges:
            raise GraphError("one-type chart needs at least one edge to pin")
        s0, t0 = g.edges[0]
        return Chart(g.key(), "one", g.n, 0, 2 * g.n - 3, (s0, t0))
    if isinstance(g, TwoTypeGraph):
        if g.n < 1:
            raise GraphError("two-type chart needs an aerial vertex to pin")
        return Chart(g.key(), "two", g.n, g.m, 2 * g.n + g.m - 2, (1,))
    raise GraphError(f"not a graph: {g!r}")


def height_leq(lower, upper) -> bool:
    """Ordering by geodesic half-circle: is `lower` inside (or on) the
    half-circle of radius Im(upper) centered at Re(upper)?

    `lower` may be a real boundary point or a complex point; border
    included.  `upper` must have positive imaginary part.
    """
    u = complex(upper)
    if u.imag <= 0:
        raise GraphError(f"upper point must be in the upper half-plane: {u}")
    return abs(complex(lower) - u.real) <= u.imag


def modified_angle(upper, lower) -> float:
    """Calibrated propagator angle, zero on the border half-circle.

    Defined only where height_leq(lower, upper); equals
    scale * [Arg(u - l) + Arg(u - conj(l)) - 3*pi/2] with the doubled
    harmonic angle's scale fixed to 1/2, reduced modulo its period pi to
    [-pi/2, pi/2).  Near the puncture l -> u it is the Euclidean angle of
    l - u (period pi over the in-domain half-loop).
    """
    if not height_leq(lower, upper):
        raise GraphError(
            f"propagator undefined: {lower} is outside the border circle of {upper}"
        )
    theta = modified_angle_raw(upper, lower)
    period = TWO_PI * MODIFIED_ANGLE_SCALE
    r = math.fmod(theta, period)
    if r >= period / 2.0:
        r -= period
    elif r < -period / 2.0:
        r += period
    return r


def modified_angle_raw(upper, lower) -> float:
    """Unreduced branch value (for sweep/winding tests): continuous on the
    dark region, 0 on the right border arc, -pi on the left one.

    The doubled harmonic angle is 2*[Arg(u-l) + Arg(u-conj(l))] up to a
    constant; at the calibration scale 1/2 the propagator is the plain sum
    of the two angles, shifted to vanish on the right border arc.
    """
    u = complex(upper)
    l = complex(lower)
    if l == u:
        raise GraphError("propagator undefined at coincident points")
    doubled = 2.0 * (cmath.phase(u - l) + cmath.phase(u - l.conjugate())) - 3.0 * math.pi
    return MODIFIED_ANGLE_SCALE * doubled


def _heavy_tail(u):
    """Smooth bijection (0,1) -> R with jacobian pi*(1+y^2)."""
    y = np.tan(np.pi * (u - 0.5))
    return y, np.pi * (1.0 + y * y)


def _half_line(u):
    """Smooth bijection (0,1) -> (0, inf) with jacobian (pi/2)*(1+y^2)."""
    y = np.tan(0.5 * np.pi * u)
    return y, 0.5 * np.pi * (1.0 + y * y)


# Per-vertex chart offsets keep the cube midpoint away from coincidences
# and inside every edge's Im-ordering constraint.
def _offsets(v: int) -> tuple[float, float]:
    return (0.5 * (v - 2), -(v - 1.0))


def sample(chart: Chart, u) -> tuple[Configuration, float]:
    """Map a unit-cube point to a configuration; jacobian 0 when the point
    lands outside the graph's constraint region."""
    U = np.asarray(u, dtype=float).reshape(1, -1)
    if U.shape[1] != chart.dim:
        raise GraphError(f"expected {chart.dim} coordinates, got {U.shape[1]}")
    from .graphs import parse_key

    g = parse_key(chart.graph_key)
    z, t, jac = _sample_batch(chart, g, U)
    cfg = Configuration(
        z=tuple(complex(w) for w in z[0]),
        t=tuple(float(s) for s in t[0]) if t is not None else (),
    )
    return cfg, float(jac[0])


def _sample_batch(chart: Chart, g, U: np.ndarray):
    """Vectorized sampler: positions, boundary points, and jacobian with
    the in-domain indicator folded in (0 outside)."""
    N = U.shape[0]
    jac = np.ones(N)
    if chart.kind == "one":
        s0, t0 = chart.pinned
        x = -math.pi * U[:, 0]
        jac *= math.pi
        z = np.zeros((N, chart.n), dtype=complex)
        z[:, t0 - 1] = np.exp(1j * x)
        col = 1
        for v in range(1, chart.n + 1):
            if v in (s0, t0):
                continue
            da, db = _offsets(v)
            a, ja = _heavy_tail(U[:, col])
            b, jb = _heavy_tail(U[:, col + 1])
            z[:, v - 1] = (a + da) + 1j * (b + db)
            jac *= ja * jb
            col += 2
        ok = np.ones(N, dtype=bool)
        for s, t in g.edges:
            if (s, t) == (s0, t0):
                continue
            ok &= z[:, t - 1].imag < z[:, s - 1].imag
            ok &= z[:, t - 1] != z[:, s - 1]
        jac = np.where(ok, jac, 0.0)
        return z, None, jac

    # two-type: z1 = i pinned, others free in the upper half-plane
    z = np.zeros((N, chart.n), dtype=complex)
    z[:, 0] = 1j
    col = 0
    for v in range(2, chart.n + 1):
        a, ja = _heavy_tail(U[:, col])
        b, jb = _half_line(U[:, col + 1])
        z[:, v - 1] = (a + 0.125 * (v - 1)) + 1j * (b * 2.0 ** (1 - v))
        jac *= ja * jb * 2.0 ** (1 - v)
        col += 2
    m = chart.m
    if m:
        # order-preserving cube -> ordered m-tuple: uniform order statistics
        # in (0,1) (constant jacobian 1/m!), then the heavy-tail map scaled
        # toward the pinned point's footprint
        W = np.empty((N, m))
        prod = np.ones(N)
        for i in range(m):
            prod *= (1.0 - U[:, col + i]) ** (1.0 / (m - i))
            W[:, i] = 1.0 - prod
        y, jt = _heavy_tail(W)
        t = 0.25 * y
        jac *= (0.25 * jt).prod(axis=1) / math.factorial(m)
    else:
        t = np.zeros((N, 0))
    ok = np.ones(N, dtype=bool)
    for s, (kind, j) in g.edges:
        zu = z[:, s - 1]
        lower = z[:, j - 1] if kind == "v" else t[:, j - 1]
        ok &= np.abs(lower - zu.real) <= zu.imag
        ok &= lower != zu
    jac = np.where(ok, jac, 0.0)
    return z, t, jac


def _velocities(chart: Chart, z: np.ndarray, t):
    """d(position)/d(chart coordinate) for every vertex and coordinate.

    Returns (vel_z[N, n, d] complex, vel_t[N, m, d] real).  The chart
    coordinates are the canonical ones (circle angle, Re/Im pairs,
    boundary points), not the cube variables.
    """
    N = z.shape[0]
    d = chart.dim
    vz = np.zeros((N, chart.n, d), dtype=complex)
    if chart.kind == "one":
        s0, t0 = chart.pinned
        vz[:, t0 - 1, 0] = 1j * z[:, t0 - 1]  # d/dx of e^{ix}
        col = 1
        for v in range(1, chart.n + 1):
            if v in (s0, t0):
                continue
            vz[:, v - 1, col] = 1.0
            vz[:, v - 1, col + 1] = 1j
            col += 2
        return vz, None
    col = 0
    for v in range(2, chart.n + 1):
        vz[:, v - 1, col] = 1.0
        vz[:, v - 1, col + 1] = 1j
        col += 2
    vt = np.zeros((N, chart.m, d))
    for j in range(chart.m):
        vt[:, j, col + j] = 1.0
    return vz, vt


def _jacobian_rows(chart: Chart, g, z, t):
    """The d x d matrices of propagator differentials (rows = edges in
    canonical order, columns = chart coordinates)."""
    N = z.shape[0]
    d = chart.dim
    vz, vt = _velocities(chart, z, t)
    M = np.empty((N, d, d))
    if chart.kind == "one":
        for r, (s, tt) in enumerate(g.edges):
            w = z[:, tt - 1] - z[:, s - 1]
            dv = vz[:, tt - 1, :] - vz[:, s - 1, :]
            M[:, r, :] = (dv / w[:, None]).imag
        return M
    for r, (s, (kind, j)) in enumerate(g.edges):
        zu = z[:, s - 1]
        du = vz[:, s - 1, :]
        if kind == "v":
            l = z[:, j - 1]
            dl = vz[:, j - 1, :]
        else:
            l = t[:, j - 1].astype(complex)
            dl = vt[:, j - 1, :].astype(complex)
        w1 = zu - l
        w2 = zu - np.conj(l)
        row = (du - dl) / w1[:, None] + (du - np.conj(dl)) / w2[:, None]
        M[:, r, :] = 2.0 * MODIFIED_ANGLE_SCALE * row.imag
    return M


def integrand(g, chart: Chart, config: Configuration) -> float:
    """Signed determinant of the propagator-differential matrix at one
    configuration.  Requires edge count == chart dimension."""
    if g.e != chart.dim:
        raise GraphError(f"edge count {g.e} != chart dimension {chart.dim}")
    z = np.array([config.z], dtype=complex)
    t = np.array([config.t], dtype=float) if config.t else np.zeros((1, 0))
    M = _jacobian_rows(chart, g, z, t)
    return float(np.linalg.det(M)[0])


def plain_angle_form(edge, config: Configuration, direction: int,
                     chart: Chart) -> float:
    """Partial derivative of Arg(z_t - z_s) along one chart coordinate."""
    s, t = edge
    z = np.array([config.z], dtype=complex)
    vz, _ = _velocities(chart, z, None)
    w = complex(config.z[t - 1] - config.z[s - 1])
    dv = complex(vz[0, t - 1, direction] - vz[0, s - 1, direction])
    return (dv / w).imag


def integrand_batch(g, chart: Chart, U: np.ndarray) -> np.ndarray:
    """Vectorized integrand * jacobian over a batch of cube points."""
    z, t, jac = _sample_batch(chart, g, U)
    vals = np.zeros(U.shape[0])
    ok = jac != 0.0
    if ok.any():
        M = _jacobian_rows(chart, g, z[ok], t[ok] if t is not None else None)
        vals[ok] = np.linalg.det(M) * jac[ok]
    return vals
