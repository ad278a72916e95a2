"""Two-variable activator/inhibitor kinetics and the explicit Euler stepper.

Pointwise rates:

    du/dt = (1/eps) * (u - u^2 - (f*v + phi) * (u - q) / (u + q)) + d_u * lap(u)
    dv/dt = u - v

u is the excitatory (diffusing) species, v the refractory one; v does not
diffuse. phi is the light proxy: raising it increases inhibitor production
and suppresses wave propagation. Both field updates read the pre-step
state (synchronous update), so cell visitation order cannot matter.

The activator update is floored at zero. Concentrations cannot be
negative, and without the floor the explicit scheme overshoots below -q
at wave backs, where the rational term is singular; with u >= 0 the
ratio (u - q)/(u + q) is bounded to [-1, 1] and the singularity is
unreachable. v needs no floor: its update is a convex combination of
non-negative values.

The hot loop is compiled with numba. The parallel variant splits rows
across threads; every output cell is computed independently with the same
per-cell operation order, so serial and parallel results are bitwise
identical.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numba import config as _numba_config
from numba import njit, prange

from .lattice import DomainMask, ScalarField

# the portable threading layer; the default probe emits a TBB version warning
_numba_config.THREADING_LAYER = "workqueue"

BLOWUP_LIMIT = 10.0  # |u| or |v| beyond this aborts the run


@dataclass(frozen=True)
class SimParams:
    """All kinetic and numerical constants for one run.

    Defaults are the standard operating point: eps=0.02, f=1.4, q=0.002,
    dt=0.001, dx=0.25. The diffusion coefficient of u is not pinned down
    by the kinetics; 1.0 is the usual nondimensional choice and is an
    assumption here (see README). phi is the dark/base value.
    """

    eps: float = 0.02
    f: float = 1.4
    q: float = 0.002
    phi: float = 0.05
    d_u: float = 1.0
    dt: float = 0.001
    dx: float = 0.25

    def __post_init__(self) -> None:
        for name in ("eps", "q", "f", "dt", "dx"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d_u < 0:
            raise ValueError(f"d_u must be non-negative, got {self.d_u}")
        if self.phi < 0:
            raise ValueError(f"phi must be non-negative, got {self.phi}")
        number = self.dt * self.d_u / (self.dx * self.dx)
        if number > 0.25:
            raise ValueError(
                f"explicit diffusion unstable: dt*d_u/dx^2 = {number:.4g} > 0.25"
            )

    def with_phi(self, phi: float) -> "SimParams":
        return replace(self, phi=phi)


@dataclass(eq=False)
class MarbleState:
    """Activator and inhibitor fields sharing one mask, plus the clock."""

    u: ScalarField
    v: ScalarField
    step_index: int = 0
    time: float = 0.0

    def __post_init__(self) -> None:
        if self.u.mask is not self.v.mask:
            raise ValueError("u and v must share one DomainMask")

    @property
    def mask(self) -> DomainMask:
        return self.u.mask

    def copy(self) -> "MarbleState":
        return MarbleState(self.u.copy(), self.v.copy(), self.step_index, self.time)


class BlowUpError(RuntimeError):
    """Integration produced a non-finite or runaway value."""

    def __init__(self, step: int, cell: tuple[int, int], value: float, which: str):
        self.step = step
        self.cell = cell
        self.value = value
        self.which = which
        super().__init__(
            f"blow-up at step {step}: {which}[x={cell[0]}, y={cell[1]}] = {value!r}"
        )


def reaction_u(u: float, v: float, p: SimParams, phi: float | None = None) -> float:
    """Pointwise activator rate. Undefined at u = -q exactly."""
    if phi is None:
        phi = p.phi
    if u + p.q == 0.0:
        raise ZeroDivisionError(f"activator rate singular at u = -q = {u!r}")
    return (1.0 / p.eps) * (u - u * u - (p.f * v + phi) * (u - p.q) / (u + p.q))


def reaction_v(u: float, v: float) -> float:
    """Pointwise inhibitor rate: relaxation of v toward u."""
    return u - v


def rest_state_root(f: float, q: float, phi: float) -> float:
    """Root of u - u^2 - (f*u + phi)(u-q)/(u+q) on [q, 1], by bisection.

    This is the homogeneous steady state with v = u. The bracket always
    carries a sign change for f + phi > 0; bisection is run to double
    precision, then the residual is checked against 1e-12.
    """

    def g(u: float) -> float:
        return u - u * u - (f * u + phi) * (u - q) / (u + q)

    lo, hi = q, 1.0
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if (glo > 0.0) == (ghi > 0.0):
        raise ValueError(f"no sign change on [{q}, 1] for f={f}, phi={phi}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if (g(mid) > 0.0) == (glo > 0.0):
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    if abs(g(root)) > 1e-12:
        raise ValueError(f"residual {g(root):.3e} above 1e-12 at u={root!r}")
    return root


def find_homogeneous_fixed_point(p: SimParams, phi: float | None = None) -> float:
    """Rest-state activator level u* for the given parameters."""
    return rest_state_root(p.f, p.q, p.phi if phi is None else phi)


def homogeneous_state(mask: DomainMask, u0: float, v0: float) -> MarbleState:
    u = ScalarField(np.where(mask.active, float(u0), 0.0), mask)
    v = ScalarField(np.where(mask.active, float(v0), 0.0), mask)
    return MarbleState(u, v)


def rest_state(mask: DomainMask, p: SimParams, phi: float | None = None) -> MarbleState:
    """Homogeneous state at the rest point u = v = u*(phi)."""
    us = find_homogeneous_fixed_point(p, phi)
    return homogeneous_state(mask, us, us)


# Kernels. Neighbour reads are guarded exactly like the zero-padded shifts
# in lattice.laplacian5, and the accumulation order (N, S, W, E) matches,
# which keeps this path bitwise equal to composing laplacian5 with the
# pointwise rates in numpy.


def _step_uniform_phi(u, v, active, wn, ws, ww, we, inv_eps, f, q, phi, d_u, dt, dx2, un_out, vn_out):
    h, w = u.shape
    for i in prange(h):
        for j in range(w):
            if not active[i, j]:
                un_out[i, j] = 0.0
                vn_out[i, j] = 0.0
                continue
            uc = u[i, j]
            vc = v[i, j]
            nn = u[i - 1, j] if i > 0 else 0.0
            ns = u[i + 1, j] if i < h - 1 else 0.0
            nw = u[i, j - 1] if j > 0 else 0.0
            ne = u[i, j + 1] if j < w - 1 else 0.0
            acc = wn[i, j] * (nn - uc)
            acc += ws[i, j] * (ns - uc)
            acc += ww[i, j] * (nw - uc)
            acc += we[i, j] * (ne - uc)
            lap = acc / dx2
            ru = inv_eps * (uc - uc * uc - (f * vc + phi) * (uc - q) / (uc + q))
            raw = uc + dt * (ru + d_u * lap)
            if raw < 0.0:
                raw = 0.0
            un_out[i, j] = raw
            vn_out[i, j] = vc + dt * (uc - vc)


def _step_field_phi(u, v, active, wn, ws, ww, we, inv_eps, f, q, phi, d_u, dt, dx2, un_out, vn_out):
    h, w = u.shape
    for i in prange(h):
        for j in range(w):
            if not active[i, j]:
                un_out[i, j] = 0.0
                vn_out[i, j] = 0.0
                continue
            uc = u[i, j]
            vc = v[i, j]
            nn = u[i - 1, j] if i > 0 else 0.0
            ns = u[i + 1, j] if i < h - 1 else 0.0
            nw = u[i, j - 1] if j > 0 else 0.0
            ne = u[i, j + 1] if j < w - 1 else 0.0
            acc = wn[i, j] * (nn - uc)
            acc += ws[i, j] * (ns - uc)
            acc += ww[i, j] * (nw - uc)
            acc += we[i, j] * (ne - uc)
            lap = acc / dx2
            ru = inv_eps * (uc - uc * uc - (f * vc + phi[i, j]) * (uc - q) / (uc + q))
            raw = uc + dt * (ru + d_u * lap)
            if raw < 0.0:
                raw = 0.0
            un_out[i, j] = raw
            vn_out[i, j] = vc + dt * (uc - vc)


_KERNELS = {
    (False, False): njit(cache=True)(_step_uniform_phi),
    (False, True): njit(parallel=True, cache=True)(_step_uniform_phi),
    (True, False): njit(cache=True)(_step_field_phi),
    (True, True): njit(parallel=True, cache=True)(_step_field_phi),
}


def _check_finite(arr: np.ndarray, which: str, step: int) -> None:
    peak = np.abs(arr).max()
    if not peak <= BLOWUP_LIMIT:  # catches NaN as well
        bad = (~np.isfinite(arr)) | (np.abs(arr) > BLOWUP_LIMIT)
        y, x = np.argwhere(bad)[0]
        raise BlowUpError(step, (int(x), int(y)), float(arr[y, x]), which)


def euler_step(
    state: MarbleState,
    p: SimParams,
    phi: float | ScalarField | np.ndarray | None = None,
    parallel: bool = False,
) -> MarbleState:
    """One synchronous forward-Euler step; returns a new state.

    u' = max(0, u + dt*(reaction + d_u*lap(u))), v' = v + dt*(u - v),
    both from the pre-step fields. phi may be a uniform value (default:
    p.phi) or a per-cell field for partial illumination. Raises
    BlowUpError if any updated value is non-finite or leaves [-10, 10].
    """
    if phi is None:
        phi = p.phi
    if isinstance(phi, ScalarField):
        phi = phi.values
    mask = state.mask
    u, v = state.u.values, state.v.values
    un_out = np.empty_like(u)
    vn_out = np.empty_like(v)
    field_phi = isinstance(phi, np.ndarray)
    if not field_phi:
        phi = float(phi)
        if phi < 0:
            raise ValueError(f"phi must be non-negative, got {phi}")
    elif phi.shape != u.shape:
        raise ValueError(f"phi field shape {phi.shape} does not match {u.shape}")
    kernel = _KERNELS[(field_phi, parallel)]
    kernel(
        u, v, mask.active,
        mask.w_north, mask.w_south, mask.w_west, mask.w_east,
        1.0 / p.eps, p.f, p.q, phi, p.d_u, p.dt, p.dx * p.dx,
        un_out, vn_out,
    )
    step = state.step_index + 1
    _check_finite(un_out, "u", step)
    _check_finite(vn_out, "v", step)
    return MarbleState(
        ScalarField(un_out, mask),
        ScalarField(vn_out, mask),
        step_index=step,
        time=step * p.dt,
    )
