"""Scalar functionals and identity checks for cubic-quintic NLS fields.

Conserved quantities (mass, momentum, energy), the virial moment and its
first time derivative, the pseudo-conformal quantity and its decay-law
check, the sharp 2D Gagliardo-Nirenberg ratio, the 3D Weinstein-type
quotient, and the gauge/translation-minimized H^1 distance to a soliton
orbit.  Everything is a pure function of immutable field snapshots; time
enters through the field's time_tag or an explicit argument.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DimensionError, EdgeMassWarning, Undefined
from .evolve import galilean_norm
from .fields import (ComplexField, fftn, gradient, gradient_norm_sq, ifftn,
                     lp_norm, mass, wavenumber_sq, wavenumbers)
from .groundstate import SolitonProfile, resample_to_grid

__all__ = ["InvariantTriple", "DiagnosticsSeries", "CSV_COLUMNS", "energy",
           "invariants", "virial", "virial_rate", "pseudoconformal",
           "pseudoconformal_rate_check", "gn_ratio", "weinstein_quotient_3d",
           "modulated_distance", "record_row"]


@dataclass(frozen=True)
class InvariantTriple:
    mass: float
    momentum: tuple
    energy: float


def energy(field: ComplexField) -> float:
    """E = (1/2)||grad u||^2 - (1/2)||u||_4^4 + (1/3)||u||_6^6."""
    return (0.5 * gradient_norm_sq(field) - 0.5 * lp_norm(field, 4) ** 4
            + lp_norm(field, 6) ** 6 / 3.0)


def momentum(field: ComplexField) -> tuple:
    """Im int conj(u) grad u, one component per axis."""
    hd = field.grid.cell_volume
    out = []
    for du in gradient(field):
        s = np.sum(field.values.conj() * du)
        out.append(hd * float(s.imag))
    return tuple(out)


def invariants(field: ComplexField) -> InvariantTriple:
    return InvariantTriple(mass=mass(field), momentum=momentum(field),
                           energy=energy(field))


def _edge_check(field: ComplexField):
    # decay precondition: all but 1e-6 of the mass inside the centered
    # half-box, else moment integrals are box artifacts
    a2 = field.values.real**2 + field.values.imag**2
    inner = a2
    for ax, x in enumerate(field.grid.coords()):
        keep = np.abs(x) <= field.grid.extent / 4.0
        inner = inner * keep
    total = float(np.sum(a2))
    if total > 0 and float(np.sum(inner)) < (1.0 - 1e-6) * total:
        warnings.warn("significant mass outside the half-box; moment "
                      "diagnostics are boundary-contaminated", EdgeMassWarning,
                      stacklevel=3)


def virial(field: ComplexField) -> float:
    """int |x|^2 |u|^2, coordinates measured from the box center."""
    _edge_check(field)
    a2 = field.values.real**2 + field.values.imag**2
    return field.grid.cell_volume * float(np.sum(field.grid.radius_sq() * a2))


def virial_rate(field: ComplexField) -> float:
    """d/dt of the virial moment: 2 Im int conj(u) x . grad u."""
    _edge_check(field)
    hd = field.grid.cell_volume
    acc = 0.0
    for x, du in zip(field.grid.coords(), gradient(field)):
        acc += float(np.sum((field.values.conj() * du).imag * x))
    return 2.0 * hd * acc


def virial_identity_residual(times, virial_vals, energies, l6s) -> float:
    """Second-difference check of the 2D moment acceleration law.

    For V(t) = int |x|^2 |u|^2 the flow gives V'' = 4E + (4/3)||u||_6^6;
    equivalently the half-moment V/2 accelerates at 2E + (2/3)||u||_6^6.
    (Free-flow sanity check: V'' = 2||grad u||^2 = 4E there.)  Returns
    max |d2V/dt2 - rhs| / max|rhs| over interior samples.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(virial_vals, dtype=float)
    e = np.asarray(energies, dtype=float)
    l6 = np.asarray(l6s, dtype=float)
    if t.size < 3:
        raise ValueError("need at least 3 samples for a second difference")
    dt = t[1] - t[0]
    d2v = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (dt * dt)
    rhs = 4.0 * e[1:-1] + (4.0 / 3.0) * l6[1:-1]
    return float(np.max(np.abs(d2v - rhs)) / np.max(np.abs(rhs)))


def pseudoconformal(field: ComplexField, t: float = None, *,
                    force: bool = False) -> float:
    """P(t) = (1/2)||J(t)u||^2 - (t^2/2)||u||_4^4 + (t^2/3)||u||_6^6.

    The exponents match the 2D scaling; other dimensions only with force.
    """
    if field.grid.dim != 2 and not force:
        raise DimensionError(
            f"pseudoconformal exponents are 2D; got dim = {field.grid.dim}")
    if t is None:
        t = field.time_tag
    ju = galilean_norm(field, t)
    return (0.5 * ju * ju - 0.5 * t * t * lp_norm(field, 4) ** 4
            + (t * t / 3.0) * lp_norm(field, 6) ** 6)


def pseudoconformal_rate_check(series, pconf=None, l6s=None) -> float:
    """Max over interior samples of |dP/dt + (2t/3)||u||_6^6|, over max|P|.

    dP/dt by centered differences on the sample times.  Accepts either a
    DiagnosticsSeries with pconf and l6s columns filled, or three arrays.
    """
    if isinstance(series, DiagnosticsSeries):
        times, pconf, l6s = series.times, series.column("pconf"), series.column("l6s")
    else:
        times = series
    t = np.asarray(times, dtype=float)
    p = np.asarray(pconf, dtype=float)
    l6 = np.asarray(l6s, dtype=float)
    if t.size < 3:
        raise ValueError("need at least 3 samples for a centered rate check")
    dp = (p[2:] - p[:-2]) / (t[2:] - t[:-2])
    resid = np.abs(dp + (2.0 * t[1:-1] / 3.0) * l6[1:-1])
    return float(np.max(resid) / np.max(np.abs(p)))


def gn_ratio(field: ComplexField, q_mass: float) -> float:
    """||u||_4^4 M(Q) / (M(u) ||grad u||^2), sharp constant normalization."""
    if field.grid.dim != 2:
        raise DimensionError(f"gn_ratio is the 2D sharp ratio; got dim = {field.grid.dim}")
    m = mass(field)
    g = gradient_norm_sq(field)
    if m == 0.0 or g == 0.0:
        raise Undefined("gn_ratio needs a nonzero field")
    return lp_norm(field, 4) ** 4 * q_mass / (m * g)


def weinstein_quotient_3d(field: ComplexField) -> float:
    """||u||_2 ||u||_6^{3/2} ||grad u||_2^{3/2} / ||u||_4^4 (3D)."""
    if field.grid.dim != 3:
        raise DimensionError(f"weinstein quotient is 3D; got dim = {field.grid.dim}")
    l4 = lp_norm(field, 4)
    if l4 == 0.0:
        raise Undefined("weinstein quotient needs a nonzero field")
    return (lp_norm(field, 2) * lp_norm(field, 6) ** 1.5
            * gradient_norm_sq(field) ** 0.75) / l4 ** 4


def _h1_correlation(uh, ph_conj_w, grid, y):
    # <u, phi(.-y)>_{H^1} at arbitrary real shift y
    phase = np.zeros(grid.shape)
    for k, y_j in zip(wavenumbers(grid), y):
        phase = phase + k * y_j
    s = np.sum(uh * ph_conj_w * np.exp(1j * phase))
    return grid.cell_volume / uh.size * s


def modulated_distance(field: ComplexField, profile) -> tuple:
    """Minimize ||u - e^{i theta} phi(. - y)||_{H^1} over theta and y.

    profile may be a SolitonProfile (resampled onto the field's grid) or a
    ComplexField already on that grid.  The translation scan runs over grid
    shifts via an FFT cross-correlation with spectral weight 1 + |k|^2, then
    refines per axis with a quadratic fit through the correlation peak; the
    phase comes for free as the argument of the inner product at the chosen
    shift.  Returns (distance, theta, shift).
    """
    grid = field.grid
    if isinstance(profile, SolitonProfile):
        phi = resample_to_grid(profile, grid)
    else:
        phi = profile
        if phi.grid != grid:
            raise ValueError("profile grid does not match the field grid")
    w = 1.0 + wavenumber_sq(grid)
    uh = fftn(field.values)
    ph = fftn(phi.values)
    npts = uh.size
    hd = grid.cell_volume
    u_sq = hd / npts * float(np.sum(w * (uh.real**2 + uh.imag**2)))
    p_sq = hd / npts * float(np.sum(w * (ph.real**2 + ph.imag**2)))
    ph_conj_w = w * ph.conj()

    corr = ifftn(uh * ph_conj_w) * hd    # C(y) on the shift lattice
    mag = np.abs(corr)
    idx = np.unravel_index(int(np.argmax(mag)), mag.shape)
    h = grid.spacing
    n = grid.points
    shift = []
    for ax, m in enumerate(idx):
        # parabola through the peak and its periodic neighbours
        f0 = mag[idx]
        lo = list(idx); lo[ax] = (m - 1) % n
        hi = list(idx); hi[ax] = (m + 1) % n
        fm, fp = mag[tuple(lo)], mag[tuple(hi)]
        denom = fm - 2.0 * f0 + fp
        delta = 0.5 * (fm - fp) / denom if denom < 0 else 0.0
        y = (m + delta) * h
        shift.append((y + grid.extent / 2.0) % grid.extent - grid.extent / 2.0)
    shift = np.asarray(shift)

    c_ref = _h1_correlation(uh, ph_conj_w, grid, shift)
    c_grid = corr[idx]
    if abs(c_grid) > abs(c_ref):   # refinement must never lose to the scan
        c_ref = c_grid
        shift = np.asarray([(m * h + grid.extent / 2.0) % grid.extent
                            - grid.extent / 2.0 for m in idx])
    dist_sq = max(u_sq + p_sq - 2.0 * abs(c_ref), 0.0)
    theta = float(np.angle(c_ref)) % (2.0 * math.pi)
    if 2.0 * math.pi - theta < 1e-12:   # angle rounded up from -0
        theta = 0.0
    return math.sqrt(dist_sq), theta, shift


CSV_COLUMNS = ("t", "mass", "px", "py", "pz", "energy", "virial", "l4q",
               "l6s", "ju_norm", "pconf", "gn_ratio", "mod_dist")


def record_row(field: ComplexField, t: float = None, *, profile=None,
               q_mass: float = None, with_moments: bool = False,
               with_pconf: bool = False) -> dict:
    """Standard diagnostics record; unrequested entries come out nan."""
    if t is None:
        t = field.time_tag
    p = momentum(field)
    row = dict.fromkeys(CSV_COLUMNS, math.nan)
    row.update(t=t, mass=mass(field), energy=energy(field),
               l4q=lp_norm(field, 4) ** 4, l6s=lp_norm(field, 6) ** 6,
               px=p[0], py=p[1] if len(p) > 1 else 0.0,
               pz=p[2] if len(p) > 2 else 0.0)
    if with_moments:
        row["virial"] = virial(field)
        row["ju_norm"] = galilean_norm(field, t)
    if with_pconf:
        ju = row["ju_norm"]
        if not math.isfinite(ju):
            ju = galilean_norm(field, t)
        row["pconf"] = (0.5 * ju * ju - 0.5 * t * t * row["l4q"]
                        + (t * t / 3.0) * row["l6s"])
    if q_mass is not None:
        row["gn_ratio"] = gn_ratio(field, q_mass)
    if profile is not None:
        row["mod_dist"] = modulated_distance(field, profile)[0]
    return row


class DiagnosticsSeries:
    """Time-ordered diagnostics records with a fixed CSV layout."""

    def __init__(self):
        self.times = []
        self.records = []

    def append(self, row: dict):
        t = row["t"]
        if self.times and t <= self.times[-1]:
            raise ValueError("sample times must be strictly increasing")
        self.times.append(t)
        self.records.append({k: row.get(k, math.nan) for k in CSV_COLUMNS})

    def column(self, name: str) -> np.ndarray:
        return np.asarray([r[name] for r in self.records])

    def to_csv(self, path):
        lines = [",".join(CSV_COLUMNS)]
        for r in self.records:
            lines.append(",".join(f"{r[k]:.17g}" for k in CSV_COLUMNS))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "DiagnosticsSeries":
        s = cls()
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != CSV_COLUMNS:
                raise ValueError(f"unexpected diagnostics header: {header}")
            for line in fh:
                vals = [float(v) for v in line.strip().split(",")]
                s.append(dict(zip(CSV_COLUMNS, vals)))
        return s
