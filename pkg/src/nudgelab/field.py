"""Discrete 1D fields: grid geometry, flow states, trajectories, norms, and
snapshot persistence.

The domain is an interval [0, length] split into n_cells uniform cells with
centers x_j = (j + 1/2) * dx and no-slip walls at both ends.  Wall treatment
is realized through ghost cells: velocity (and hence momentum, since density
is reflected evenly) is reflected oddly, density evenly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import VacuumError

__all__ = [
    "Grid1D",
    "FluidState",
    "FieldNorms",
    "SupBounds",
    "Trajectory",
    "ghost_pad",
    "noslip_seminorm_sq",
    "norms",
    "initial_regularity_norm",
    "data_norm",
    "save_state",
    "load_state",
    "save_trajectory",
    "load_trajectory",
]

_NO_SLIP = "no-slip"


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centered grid on [0, length] with no-slip walls."""

    n_cells: int
    length: float
    boundary: str = _NO_SLIP

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 8:
            raise ValueError("n_cells must be an integer >= 8")
        object.__setattr__(self, "n_cells", int(self.n_cells))
        if not (np.isfinite(self.length) and self.length > 0.0):
            raise ValueError("length must be finite and > 0")
        if self.boundary != _NO_SLIP:
            raise ValueError(f"unsupported boundary {self.boundary!r}")

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx


def _frozen_array(values, n: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a 1D array")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"expected length {n}, got {arr.shape[0]}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FluidState:
    """Density and momentum fields at one time instant.

    Immutable once constructed (the arrays are copied and marked read-only).
    Density must be strictly positive everywhere; a nonpositive cell raises
    VacuumError with the offending index.
    """

    time: float
    rho: np.ndarray
    mom: np.ndarray

    def __post_init__(self):
        rho = _frozen_array(self.rho)
        mom = _frozen_array(self.mom, rho.shape[0])
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(mom))):
            raise ValueError("state fields must be finite")
        if np.any(rho <= 0.0):
            cell = int(np.argmin(rho))
            raise VacuumError(
                f"nonpositive density {rho[cell]:g} in cell {cell}",
                cell=cell,
                time=self.time,
            )
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "mom", mom)

    @property
    def n_cells(self) -> int:
        return self.rho.shape[0]

    def velocity(self) -> np.ndarray:
        """u = mom / rho (density positivity is guaranteed at construction)."""
        return self.mom / self.rho


def ghost_pad(rho: np.ndarray, mom: np.ndarray):
    """Extend (rho, mom) by one ghost cell per wall.

    Density is reflected evenly (zero normal gradient), momentum oddly, so
    that the interpolated wall velocity vanishes exactly.
    """
    n = rho.shape[0]
    rp = np.empty(n + 2)
    mp = np.empty(n + 2)
    rp[1:-1] = rho
    mp[1:-1] = mom
    rp[0] = rho[0]
    rp[-1] = rho[-1]
    mp[0] = -mom[0]
    mp[-1] = -mom[-1]
    return rp, mp


def noslip_seminorm_sq(grid: Grid1D, u: np.ndarray) -> float:
    """Squared discrete H^1_0 seminorm: dx * sum of one-sided difference
    quotients, including the wall quotients 2*u/dx implied by odd ghosts."""
    dx = grid.dx
    interior = np.diff(u) / dx
    left = 2.0 * u[0] / dx
    right = 2.0 * u[-1] / dx
    return dx * (np.sum(interior**2) + left**2 + right**2)


@dataclass(frozen=True)
class FieldNorms:
    l2_u_diff: float
    linf_u_diff: float
    h1_u_diff: float
    l2_rho_diff: float
    mass: float


def norms(grid: Grid1D, state: FluidState, reference: FluidState) -> FieldNorms:
    """Discrete distance norms between two states on the same grid.

    l2/linf act on the velocity difference, h1 adds the squared one-sided
    difference quotients with no-slip ghosts, and mass is dx * sum(rho) of
    ``state``.
    """
    if state.n_cells != grid.n_cells or reference.n_cells != grid.n_cells:
        raise ValueError("states do not match the grid")
    dx = grid.dx
    du = state.velocity() - reference.velocity()
    drho = state.rho - reference.rho
    l2u = float(np.sqrt(dx * np.sum(du**2)))
    return FieldNorms(
        l2_u_diff=l2u,
        linf_u_diff=float(np.max(np.abs(du))),
        h1_u_diff=float(np.sqrt(l2u**2 + noslip_seminorm_sq(grid, du))),
        l2_rho_diff=float(np.sqrt(dx * np.sum(drho**2))),
        mass=float(dx * np.sum(state.rho)),
    )


@dataclass(frozen=True)
class SupBounds:
    """Running sup bounds recorded over a run: max density, max speed, and
    the declared bound on the driving force."""

    rho_max: float
    speed_max: float
    forcing_max: float

    def __post_init__(self):
        for name in ("rho_max", "speed_max", "forcing_max"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


class Trajectory:
    """Time-ordered snapshots of one run, immutable once constructed.

    Snapshots are stored as stacked (n_snapshots, n_cells) arrays for fast
    interpolation and sampling.  Observed (truth) runs carry their recorded
    sup bounds; they are what the data norm is assembled from.
    """

    def __init__(self, grid: Grid1D, times, rho, mom, sup_bounds: SupBounds):
        times = np.array(times, dtype=float)
        rho = np.array(rho, dtype=float)
        mom = np.array(mom, dtype=float)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("need at least one snapshot")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("snapshot times must be strictly increasing")
        if rho.shape != (times.size, grid.n_cells) or mom.shape != rho.shape:
            raise ValueError("field arrays must be (n_snapshots, n_cells)")
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(mom))):
            raise ValueError("trajectory fields must be finite")
        if np.any(rho <= 0.0):
            raise VacuumError("trajectory contains nonpositive density")
        for arr in (times, rho, mom):
            arr.setflags(write=False)
        self.grid = grid
        self.times = times
        self.rho = rho
        self.mom = mom
        self.sup_bounds = sup_bounds

    @classmethod
    def from_states(cls, grid: Grid1D, states, forcing_max: float = 0.0) -> "Trajectory":
        rho = np.stack([s.rho for s in states])
        mom = np.stack([s.mom for s in states])
        speed = np.max(np.abs(mom / rho)) if rho.size else 0.0
        bounds = SupBounds(float(np.max(rho)), float(speed), float(forcing_max))
        return cls(grid, [s.time for s in states], rho, mom, bounds)

    @property
    def n_snapshots(self) -> int:
        return self.times.size

    def snapshot(self, i: int) -> FluidState:
        return FluidState(float(self.times[i]), self.rho[i], self.mom[i])

    def covers(self, t0: float, t1: float, slack: float = 1e-12) -> bool:
        return self.times[0] <= t0 + slack and self.times[-1] >= t1 - slack

    def _weights(self, ts):
        """Bracketing indices and weights; exact snapshot hits produce
        weights of exactly 0 or 1, so interpolation reproduces stored rows
        bit-for-bit."""
        hi = np.searchsorted(self.times, ts)
        hi = np.clip(hi, 1, self.n_snapshots - 1)
        lo = hi - 1
        w = (ts - self.times[lo]) / (self.times[hi] - self.times[lo])
        return lo, hi, w

    def state_at(self, t: float) -> FluidState:
        """Snapshot at time t, linearly interpolated between stored ones."""
        if self.n_snapshots == 1:
            if t != self.times[0]:
                raise ValueError(f"time {t:g} outside trajectory range")
            return self.snapshot(0)
        if t < self.times[0] or t > self.times[-1]:
            raise ValueError(
                f"time {t:g} outside trajectory range "
                f"[{self.times[0]:g}, {self.times[-1]:g}]"
            )
        lo, hi, w = self._weights(t)
        rho = (1.0 - w) * self.rho[lo] + w * self.rho[hi]
        mom = (1.0 - w) * self.mom[lo] + w * self.mom[hi]
        return FluidState(t, rho, mom)

    def point_values(self, ts: np.ndarray, cells: np.ndarray):
        """Vectorized (rho, velocity) at times ts and cell indices cells.

        Times are linearly interpolated between snapshots; velocity is
        formed from the interpolated conserved fields.
        """
        ts = np.asarray(ts, dtype=float)
        cells = np.asarray(cells, dtype=int)
        if ts.size and (ts.min() < self.times[0] or ts.max() > self.times[-1]):
            raise ValueError("sample times outside trajectory range")
        if self.n_snapshots == 1:
            rho = self.rho[0, cells]
            return rho, self.mom[0, cells] / rho
        lo, hi, w = self._weights(ts)
        rho = (1.0 - w) * self.rho[lo, cells] + w * self.rho[hi, cells]
        mom = (1.0 - w) * self.mom[lo, cells] + w * self.mom[hi, cells]
        return rho, mom / rho


def initial_regularity_norm(traj: Trajectory) -> float:
    """Discrete W^{1,inf}-style surrogate of the first snapshot's regularity:
    sup |r| + sup |dr/dx| + sup 1/r + sup |u| + sup |du/dx|.

    The continuous theory uses fractional Sobolev norms here; this surrogate
    is what the reports record, labelled as such.
    """
    grid = traj.grid
    r = traj.rho[0]
    u = traj.mom[0] / r
    dr = np.diff(r) / grid.dx
    du = np.diff(u) / grid.dx
    return float(
        np.max(np.abs(r))
        + (np.max(np.abs(dr)) if dr.size else 0.0)
        + np.max(1.0 / r)
        + np.max(np.abs(u))
        + (np.max(np.abs(du)) if du.size else 0.0)
    )


def data_norm(traj: Trajectory) -> float:
    """Aggregate size of the observed data: initial regularity surrogate plus
    the recorded sup bounds plus the observation span."""
    b = traj.sup_bounds
    span = float(traj.times[-1] - traj.times[0])
    return initial_regularity_norm(traj) + b.rho_max + b.speed_max + b.forcing_max + span


# -- snapshot and trajectory persistence ------------------------------------

_STATE_MAGIC = b"NLS1"
_TRAJ_MAGIC = b"NLT1"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def save_state(path, state: FluidState, grid: Grid1D) -> None:
    """Persist one snapshot; CSV (x, rho, mom rows) or little-endian binary
    selected by the file extension (.csv is text, anything else binary)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        x = grid.cell_centers()
        with open(path, "w", newline="") as fh:
            fh.write(f"# time={_fmt(state.time)} length={_fmt(grid.length)}\n")
            fh.write("x,rho,mom\n")
            for j in range(grid.n_cells):
                fh.write(f"{_fmt(x[j])},{_fmt(state.rho[j])},{_fmt(state.mom[j])}\n")
    else:
        with open(path, "wb") as fh:
            fh.write(_STATE_MAGIC)
            fh.write(struct.pack("<qdd", grid.n_cells, state.time, grid.length))
            fh.write(state.rho.astype("<f8").tobytes())
            fh.write(state.mom.astype("<f8").tobytes())


def load_state(path):
    """Inverse of save_state; returns (state, grid)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path) as fh:
            meta = fh.readline()
            if not meta.startswith("# time="):
                raise ValueError(f"{path}: missing snapshot metadata line")
            parts = dict(p.split("=") for p in meta[2:].split())
            time = float(parts["time"])
            length = float(parts["length"])
            header = fh.readline().strip()
            if header != "x,rho,mom":
                raise ValueError(f"{path}: unexpected header {header!r}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        grid = Grid1D(data.shape[0], length)
        return FluidState(time, data[:, 1], data[:, 2]), grid
    with open(path, "rb") as fh:
        if fh.read(4) != _STATE_MAGIC:
            raise ValueError(f"{path}: not a snapshot file")
        n, time, length = struct.unpack("<qdd", fh.read(24))
        rho = np.frombuffer(fh.read(8 * n), dtype="<f8")
        mom = np.frombuffer(fh.read(8 * n), dtype="<f8")
    return FluidState(time, rho, mom), Grid1D(n, length)


def save_trajectory(path, traj: Trajectory) -> None:
    """Persist a trajectory; CSV in long format (t, x, rho, mom) or binary."""
    path = Path(path)
    b = traj.sup_bounds
    if path.suffix.lower() == ".csv":
        x = traj.grid.cell_centers()
        with open(path, "w", newline="") as fh:
            fh.write(
                f"# length={_fmt(traj.grid.length)} forcing_max={_fmt(b.forcing_max)}\n"
            )
            fh.write("t,x,rho,mom\n")
            for i, t in enumerate(traj.times):
                ts = _fmt(t)
                for j in range(traj.grid.n_cells):
                    fh.write(
                        f"{ts},{_fmt(x[j])},{_fmt(traj.rho[i, j])},{_fmt(traj.mom[i, j])}\n"
                    )
    else:
        with open(path, "wb") as fh:
            fh.write(_TRAJ_MAGIC)
            fh.write(
                struct.pack(
                    "<qqdd", traj.n_snapshots, traj.grid.n_cells, traj.grid.length, b.forcing_max
                )
            )
            fh.write(traj.times.astype("<f8").tobytes())
            fh.write(traj.rho.astype("<f8").tobytes())
            fh.write(traj.mom.astype("<f8").tobytes())


def load_trajectory(path) -> Trajectory:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path) as fh:
            meta = fh.readline()
            if not meta.startswith("# length="):
                raise ValueError(f"{path}: missing trajectory metadata line")
            parts = dict(p.split("=") for p in meta[2:].split())
            length = float(parts["length"])
            forcing_max = float(parts["forcing_max"])
            header = fh.readline().strip()
            if header != "t,x,rho,mom":
                raise ValueError(f"{path}: unexpected header {header!r}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        times = np.unique(data[:, 0])
        n = data.shape[0] // times.size
        grid = Grid1D(n, length)
        rho = data[:, 2].reshape(times.size, n)
        mom = data[:, 3].reshape(times.size, n)
    else:
        with open(path, "rb") as fh:
            if fh.read(4) != _TRAJ_MAGIC:
                raise ValueError(f"{path}: not a trajectory file")
            ns, n, length, forcing_max = struct.unpack("<qqdd", fh.read(32))
            times = np.frombuffer(fh.read(8 * ns), dtype="<f8")
            rho = np.frombuffer(fh.read(8 * ns * n), dtype="<f8").reshape(ns, n)
            mom = np.frombuffer(fh.read(8 * ns * n), dtype="<f8").reshape(ns, n)
        grid = Grid1D(n, length)
    speed = np.max(np.abs(mom / rho))
    bounds = SupBounds(float(np.max(rho)), float(speed), forcing_max)
    return Trajectory(grid, times, rho, mom, bounds)
