"""Linearized sector operators, bottom spectra, and stability verdicts.

Linearizing the flow around e^{i omega t} phi splits into two radial
Schrodinger operators per angular sector,

    L1 = -1/2 Lap + omega - 3 phi^2 + 5 phi^4   (real part)
    L2 = -1/2 Lap + omega -   phi^2 +   phi^4   (imaginary part),

with centrifugal number ell (modes e^{i ell theta} in 2D, degree-ell
harmonics in 3D).  Writing f = r^ell g maps the (d, ell) sector onto the
ell = 0 problem in effective dimension d + 2 ell, which removes the
singular ell(ell+d-2)/r^2 term entirely; the operator is then assembled as
a conservative finite-volume matrix on cell centers, self-adjoint in the
measure r^{d_eff-1} dr, and symmetrized exactly by the diagonal volume
similarity.  Eigenvalues come from bisection + inverse iteration on the
symmetric tridiagonal matrix; an independent LDL^T Sturm count cross-checks
every negative-eigenvalue claim.

Also here: the delta(r) oscillation ODE (integrated under both printed
coefficient conventions) and the slope-of-mass stability verdict.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal

from .errors import AssumptionViolated, ConvergenceFailure, EigenFailure
from .fields import RadialGrid
from .groundstate import ShootingParams, SolitonProfile, shoot_radial

__all__ = ["SectorOperator", "SectorSpectrum", "SpectralReport",
           "build_sector", "eigen_bottom", "negative_count",
           "kernel_residual", "assumption_report", "delta_ode",
           "DeltaTrajectory", "gss_verdict", "STABLE", "UNSTABLE",
           "INCONCLUSIVE"]

STABLE = "Stable"
UNSTABLE = "Unstable"
INCONCLUSIVE = "Inconclusive"

# cell width of the eigenproblem lattice; kernel residuals also need the
# source profile resolved at dr <= 5e-3 or its spline curvature error shows
_H_TARGET = 5e-3


@dataclass(frozen=True)
class SectorOperator:
    omega: float
    dim: int
    ell: int
    kind: str
    grid: RadialGrid
    centers: np.ndarray     # cell centers (j + 1/2) h
    volumes: np.ndarray     # int_cell r^{d_eff - 1} dr
    diag: np.ndarray        # symmetrized tridiagonal
    off: np.ndarray

    @property
    def d_eff(self) -> int:
        return self.dim + 2 * self.ell

    def apply_weighted(self, sv: np.ndarray) -> np.ndarray:
        """Matrix action in the sqrt(volume)-weighted coordinates."""
        out = self.diag * sv
        out[:-1] += self.off * sv[1:]
        out[1:] += self.off * sv[:-1]
        return out


def build_sector(profile: SolitonProfile, ell: int, kind: str,
                 n_cells: int = 0) -> SectorOperator:
    """Assemble the (kind, ell) sector operator around a soliton profile."""
    if kind not in ("L1", "L2"):
        raise ValueError(f"kind must be L1 or L2, got {kind!r}")
    if ell < 0:
        raise ValueError("ell must be >= 0")
    d_eff = profile.dim + 2 * ell
    r_max = profile.grid.r_max
    if n_cells <= 0:
        n_cells = int(round(r_max / _H_TARGET))
    h = r_max / n_cells
    faces = h * np.arange(n_cells + 1)
    rc = faces[:-1] + 0.5 * h
    vol = (faces[1:] ** d_eff - faces[:-1] ** d_eff) / d_eff
    p2 = profile.interpolant()(rc) ** 2
    a, b = profile.cubic, profile.quintic
    if kind == "L1":
        pot = profile.omega - 3.0 * a * p2 + 5.0 * b * p2 * p2
    else:
        pot = profile.omega - a * p2 + b * p2 * p2
    area = faces ** (d_eff - 1)
    # flux form of -1/2 (r^{1-d_eff}) d/dr (r^{d_eff-1} d/dr); the r = 0
    # face carries zero area for d_eff >= 2, which is the regularity
    # condition; Dirichlet at r_max enters through the half-cell flux
    diag = 0.5 * (area[1:] + area[:-1]) / (h * vol) + pot
    diag[-1] += 0.5 * area[-1] / (h * vol[-1])
    if d_eff == 1:
        # even sector on the line: zero derivative at 0 is the natural flux
        pass
    off = -0.5 * area[1:-1] / (h * np.sqrt(vol[:-1] * vol[1:]))
    return SectorOperator(omega=profile.omega, dim=profile.dim, ell=ell,
                          kind=kind, grid=RadialGrid(r_max, n_cells),
                          centers=rc, volumes=vol, diag=diag, off=off)


def eigen_bottom(op: SectorOperator, k: int, vectors: bool = False):
    """k smallest eigenvalues (ascending), bisection + inverse iteration.

    With vectors=True also returns the eigenvectors as columns, in the
    plain f-coordinates normalized in the weighted measure.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    try:
        if vectors:
            ev, vec = eigh_tridiagonal(op.diag, op.off, select="i",
                                       select_range=(0, k - 1))
        else:
            ev = eigh_tridiagonal(op.diag, op.off, select="i",
                                  select_range=(0, k - 1), eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"tridiagonal eigensolve failed: {exc}") from exc
    if vectors:
        return ev, vec / np.sqrt(op.volumes)[:, None]
    return ev


def negative_count(op: SectorOperator, kernel_tol: float = 1e-6) -> int:
    """Sturm count of eigenvalues below -kernel_tol via LDL^T signs.

    The small shift keeps discrete zero modes (translation and phase, which
    land at +-O(1e-7) after truncation) out of the count; genuine negative
    eigenvalues sit at O(-1e-2) and are unaffected.
    """
    shift = -abs(kernel_tol)
    cnt = 0
    dprev = op.diag[0] - shift
    if dprev < 0.0:
        cnt += 1
    off = op.off
    diag = op.diag
    for j in range(1, diag.size):
        dj = (diag[j] - shift) - off[j - 1] * off[j - 1] / dprev
        if dj == 0.0:
            dj = -1e-300
        if dj < 0.0:
            cnt += 1
        dprev = dj
    return cnt


def kernel_residual(op: SectorOperator, f_values: np.ndarray) -> float:
    """Relative weighted-L2 residual ||A f|| / ||f|| of a claimed zero mode.

    f_values are samples of f at op.centers; internally reduced by r^ell to
    the effective-dimension coordinates.
    """
    g = np.asarray(f_values, dtype=float)
    if op.ell > 0:
        g = g / op.centers ** op.ell
    sv = np.sqrt(op.volumes) * g
    return float(np.linalg.norm(op.apply_weighted(sv)) / np.linalg.norm(sv))


@dataclass
class SectorSpectrum:
    kind: str
    ell: int
    eigenvalues: np.ndarray
    negative_count: int
    kernel_residual: float
    spectral_gap: float


@dataclass
class SpectralReport:
    """Assumption-profile summary: sector spectra around one profile."""

    omega: float
    dim: int
    sectors: list
    kernel_tol: float = 1e-6

    def sector(self, kind: str, ell: int) -> SectorSpectrum:
        for s in self.sectors:
            if s.kind == kind and s.ell == ell:
                return s
        raise KeyError(f"no sector ({kind}, {ell}) in report")

    def assumption_ok(self, zero_tol: float = 1e-4,
                      residual_tol: float = 1e-6) -> bool:
        """One L1 negative direction, translation and phase kernels, rest
        positive."""
        try:
            l1_0 = self.sector("L1", 0)
            l1_1 = self.sector("L1", 1)
            l1_2 = self.sector("L1", 2)
            l2_0 = self.sector("L2", 0)
        except KeyError:
            return False
        return (l1_0.negative_count == 1
                and abs(l1_1.eigenvalues[0]) < zero_tol
                and l1_1.negative_count == 0
                and l1_2.eigenvalues[0] > 0.0
                and l2_0.negative_count == 0
                and l2_0.kernel_residual < residual_tol)

    def to_json(self, path) -> None:
        out = {"omega": self.omega, "dim": self.dim,
               "kernel_tol": self.kernel_tol, "sectors": {}}
        for s in self.sectors:
            out["sectors"][f"{s.kind},ell={s.ell}"] = {
                "eigenvalues": [float(v) for v in s.eigenvalues],
                "negative_count": s.negative_count,
                "kernel_residual": s.kernel_residual,
                "spectral_gap": s.spectral_gap,
            }
        with open(path, "w") as fh:
            json.dump(out, fh, indent=1, sort_keys=True)


def _gap(ev: np.ndarray, kernel_tol: float) -> float:
    nz = ev[np.abs(ev) > kernel_tol]
    return float(np.min(np.abs(nz))) if nz.size else math.nan


def assumption_report(profile: SolitonProfile, k: int = 5,
                      kernel_tol: float = 1e-6) -> SpectralReport:
    """Spectra of L1 (ell = 0,1,2) and L2 (ell = 0,1) around a profile."""
    spl = profile.interpolant()
    dspl = spl.derivative()
    sectors = []
    for kind, ells in (("L1", (0, 1, 2)), ("L2", (0, 1))):
        for ell in ells:
            op = build_sector(profile, ell, kind)
            ev = eigen_bottom(op, k)
            nc = negative_count(op, kernel_tol)
            if kind == "L2" and ell == 0:
                res = kernel_residual(op, spl(op.centers))
            elif kind == "L1" and ell == 1:
                res = kernel_residual(op, dspl(op.centers))
            else:
                res = math.nan
            sectors.append(SectorSpectrum(kind=kind, ell=ell, eigenvalues=ev,
                                          negative_count=nc,
                                          kernel_residual=res,
                                          spectral_gap=_gap(ev, kernel_tol)))
    return SpectralReport(omega=profile.omega, dim=profile.dim,
                          sectors=sectors, kernel_tol=kernel_tol)


@dataclass
class DeltaTrajectory:
    omega: float
    dim: int
    convention: str      # "inverse_r" (as printed) or "dminus1_over_r"
    r: np.ndarray
    delta: np.ndarray
    diverges_negative: bool


def _delta_run(omega, dim, friction, spl, prof_rmax, r_max):
    w0 = omega - 3.0 * spl(0.0) ** 2 + 5.0 * spl(0.0) ** 4

    def rhs(r, y):
        phi = spl(r) if r <= prof_rmax else 0.0
        w = omega - 3.0 * phi * phi + 5.0 * phi ** 4
        return [y[1], 2.0 * w * y[0] - (2.0 * friction / r) * y[1]]

    r0 = 1e-6
    a = w0 / (1.0 + 2.0 * friction)   # delta = 1 + a r^2 + O(r^4)
    sol = solve_ivp(rhs, (r0, r_max), [1.0 + a * r0 * r0, 2.0 * a * r0],
                    method="RK45", rtol=1e-10, atol=1e-12,
                    t_eval=np.linspace(r0, r_max, 2001))
    if not sol.success:
        raise ConvergenceFailure(f"delta ODE integration failed: {sol.message}")
    return sol.t, sol.y[0]


def delta_ode(omega: float, dim: int = 3, r_max: float = 0.0,
              profile: SolitonProfile = None,
              params: ShootingParams = None) -> list:
    """Integrate the oscillation indicator delta(r), both friction forms.

    -1/2 delta'' - (c/r) delta' + (omega - 3 phi^2 + 5 phi^4) delta = 0,
    delta(0) = 1, delta'(0) = 0, with c = 1 (the coefficient as printed,
    equal to the radial -1/2 Lap in 3D) and c = d - 1 (the doubled-weight
    reading).  Returns one DeltaTrajectory per convention; each carries
    diverges_negative: delta(r_max) < -1 and monotone decreasing over the
    last quarter of the range.
    """
    if profile is None:
        profile = shoot_radial(omega, dim, params or ShootingParams(n=8001))
    spl = profile.interpolant()
    prof_rmax = profile.grid.r_max
    if r_max <= 0.0:
        r_max = prof_rmax
    out = []
    for name, c in (("inverse_r", 1.0), ("dminus1_over_r", float(dim - 1))):
        r, delta = _delta_run(omega, dim, c, spl, prof_rmax, r_max)
        tail = delta[r >= 0.75 * r_max]
        verdict = bool(delta[-1] < -1.0 and np.all(np.diff(tail) <= 0.0))
        out.append(DeltaTrajectory(omega=omega, dim=dim, convention=name,
                                   r=r, delta=delta,
                                   diverges_negative=verdict))
    return out


def gss_verdict(mass_curve, omega: float, slope_tol: float = 1e-3,
                report: SpectralReport = None,
                params: ShootingParams = None) -> str:
    """Slope-of-mass stability verdict at omega, gated on the spectral
    assumptions.

    mass_curve provides sorted arrays .omegas and .masses; omega must lie
    strictly inside the sampled range.  The verdict reads the sign of the
    centered finite-difference slope at the nearest interior sample:
    positive slope -> Stable, negative -> Unstable, |slope| <= slope_tol ->
    Inconclusive.  The spectral profile (one L1 negative direction, kernel
    structure) is verified first, from `report` if given, else recomputed;
    failure raises AssumptionViolated rather than guessing.
    """
    om = np.asarray(mass_curve.omegas, dtype=float)
    ms = np.asarray(mass_curve.masses, dtype=float)
    if om.size < 3:
        raise ValueError("mass curve needs at least 3 samples")
    if not (om[0] < omega < om[-1]):
        raise ValueError(f"omega = {omega} is not interior to the sampled "
                         f"range [{om[0]}, {om[-1]}]")
    if report is None:
        dim = getattr(mass_curve, "dim")
        prof = shoot_radial(omega, dim, params or ShootingParams(n=8001))
        report = assumption_report(prof)
    if not report.assumption_ok():
        raise AssumptionViolated(
            f"spectral profile at omega = {report.omega}, d = {report.dim} "
            "does not match the one-negative-direction assumption")
    j = int(np.argmin(np.abs(om - omega)))
    j = min(max(j, 1), om.size - 2)
    # non-uniform centered difference
    h1 = om[j] - om[j - 1]
    h2 = om[j + 1] - om[j]
    slope = (ms[j + 1] * h1 * h1 - ms[j - 1] * h2 * h2
             + ms[j] * (h2 * h2 - h1 * h1)) / (h1 * h2 * (h1 + h2))
    if slope > slope_tol:
        return STABLE
    if slope < -slope_tol:
        return UNSTABLE
    return INCONCLUSIVE
