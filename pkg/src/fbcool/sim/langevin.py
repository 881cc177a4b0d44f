"""Time-domain Langevin simulation of one atom in the feedback-modulated lattice.

Each step: the atom's position sets the cavity detuning, the linearized
transmission change plus injected noise drives the sampled loop filter, the
resulting depth U(t) = U0 (1 + eps) acts on the atom through the force
2 k U(t) sin 2kx, and free-space recoil adds velocity diffusion.
Trajectories are vectorized; each has its own RNG stream seeded from
``(seed, index)`` so results do not depend on batch composition.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..constants import HBAR, KB
from ..errors import (ImproperLoopError, NonStationaryError, SimulationInstabilityError,
                      UnstableLoopError, ValidationError)
from ..lti import RationalTransferFunction, reference_loop, is_closed_loop_stable
from ..noise import NoiseSpectrum
from ..optics import OpticalSystem
from .filters import realize, rolled_off
from .psd import ColoredNoise, estimate_psd, white_sigma

log = logging.getLogger(__name__)

__all__ = [
    "NoiseSwitches",
    "SimConfig",
    "SimResult",
    "TemperatureEstimate",
    "run",
    "equilibrium_temperature",
    "heating_slope",
    "photon_shot_density",
]


def photon_shot_density(system: OpticalSystem) -> float:
    """Light shot-noise density hbar^2 eta Gamma_sc / (2 pi U0^2) in the loop variable.

    Equal to F hbar c k / (2 pi^2 P_c) once the intracavity power is written
    through the scattering rate and light shift.
    """
    U0 = system.atom.trap_depth
    if U0 == 0:
        raise ValidationError("U0 must be nonzero to simulate")
    return HBAR**2 * system.eta_gamma_sc / (2.0 * math.pi * U0**2)


@dataclass
class NoiseSwitches:
    photon: bool = False
    detection: bool = False
    dipole: bool = False
    freespace: bool = False
    thermal_N: float = 0.0
    thermal_v_th: float | None = None
    white_density: float = 0.0

    @classmethod
    def full(cls):
        """Photon and detection shot noise, dipole doubling and free-space recoil."""
        return cls(photon=True, detection=True, dipole=True, freespace=True)

    @property
    def any(self):
        return (self.photon or self.detection or self.dipole or self.freespace
                or self.thermal_N > 0 or self.white_density > 0)


@dataclass
class SimConfig:
    system: OpticalSystem
    loop: RationalTransferFunction
    dt: float
    n_steps: int
    n_trajectories: int = 1
    seed: int = 0
    rolloff_omega: float | None = None
    noise: NoiseSwitches = field(default_factory=NoiseSwitches)
    v0: float | list = 0.0
    v_spread: float = 0.0
    x0: float | None = None
    clamp_velocity: bool = False
    atom_signal: bool = True
    burn_in: int = 0
    decimation: int = 1
    hold: str = "foh"
    eps_bound: float = 10.0
    record_eps: int = 0
    v_max: float | None = None
    samples_per_cycle: float = 20.0
    block: int = 4096
    allow_unstable: bool = False

    def initial_velocities(self) -> np.ndarray:
        v0 = np.asarray(self.v0, dtype=float)
        if v0.ndim == 0:
            return np.full(self.n_trajectories, float(v0))
        if v0.shape != (self.n_trajectories,):
            raise ValidationError("v0 list must have one entry per trajectory")
        return v0.copy()

    def fastest_velocity(self) -> float:
        if self.v_max is not None:
            return self.v_max
        return float(np.max(np.abs(self.initial_velocities()))) + 5.0 * self.v_spread

    def validate(self):
        """Check the configuration before any compute; returns the realized loop."""
        if not (self.dt > 0 and self.n_steps >= 1 and self.n_trajectories >= 1):
            raise ValidationError("dt, n_steps and n_trajectories must be positive")
        if self.decimation < 1 or self.block < 1:
            raise ValidationError("decimation and block must be >= 1")
        if not 0 <= self.burn_in < self.n_steps + 1:
            raise ValidationError("burn_in must lie within the run")
        if not 0 <= self.record_eps <= self.n_trajectories:
            raise ValidationError("record_eps must not exceed n_trajectories")
        if self.hold not in ("zoh", "foh"):
            raise ValidationError(f"unknown hold {self.hold!r}")
        if self.system.atom.trap_depth == 0:
            raise ValidationError("U0 must be nonzero")
        if self.noise.thermal_N > 0 and not (self.noise.thermal_v_th or 0) > 0:
            raise ValidationError("thermal noise needs thermal_v_th > 0")
        try:
            G = rolled_off(self.loop, self.rolloff_omega)
        except ImproperLoopError as exc:
            raise ValidationError(str(exc)) from exc
        report = is_closed_loop_stable(G)
        if not report.stable and not self.allow_unstable:
            raise UnstableLoopError(f"closed loop unstable; poles {report.offending_poles}",
                                    report.offending_poles)
        ss = realize(self.loop, self.rolloff_omega)
        fastest = 2.0 * self.system.k * self.fastest_velocity()
        for p in (ss.poles(), report.poles):
            if p.size:
                fastest = max(fastest, float(np.max(np.abs(p))))
        if self.rolloff_omega is not None and self.loop.relative_degree < 0:
            fastest = max(fastest, self.rolloff_omega)
        if self.noise.thermal_N > 0:
            fastest = max(fastest, 2.0 * math.sqrt(2.0) * self.system.k * self.noise.thermal_v_th)
        limit = 2.0 * math.pi / self.samples_per_cycle
        if self.dt * fastest > limit * (1 + 1e-6):
            raise ValidationError(
                f"dt={self.dt:.4g} s gives {2 * math.pi / (self.dt * fastest):.3g} samples per "
                f"cycle of the fastest rate {fastest:.4g} rad/s; need >= {self.samples_per_cycle:g}")
        return ss

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["system"] = self.system.to_dict()
        d["loop"] = self.loop.to_dict()
        d["noise"] = asdict(self.noise)
        d["v0"] = np.asarray(self.v0).tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        """Build from a JSON-like dict.

        ``loop`` is ``{"num", "den"}`` in rad/s, or a normalized loop (``"tag"``
        a-d or coefficients) together with ``"u"``, which is scaled by 2ku.
        """
        d = dict(d)
        try:
            system = OpticalSystem.from_dict(d.pop("system"))
            loop = loop_from_dict(d.pop("loop"), system.k)
            noise = NoiseSwitches(**d.pop("noise", {}))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad simulation config: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown simulation config keys {sorted(unknown)}")
        return cls(system=system, loop=loop, noise=noise, **d)


def loop_from_dict(d, k) -> RationalTransferFunction:
    d = dict(d)
    u = d.pop("u", None)
    if "tag" in d:
        H = reference_loop(d["tag"])
    else:
        H = RationalTransferFunction.from_dict(d)
    if u is not None:
        H = H.scaled(2.0 * k * float(u))
    return H


@dataclass
class SimResult:
    config: SimConfig
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    eps: np.ndarray
    ledger: dict
    drag: np.ndarray | None = None
    eps_full: np.ndarray | None = None
    psd: NoiseSpectrum | None = None

    def kinetic_temperature(self, start_time=0.0):
        """Per-record ensemble values of m v^2 / k_B after ``start_time``."""
        sel = self.t >= start_time
        return self.t[sel], self.config.system.mass * self.v[sel] ** 2 / KB

    def ledger_residual(self):
        """Mechanical-energy change not accounted for by modulation work and recoil heat."""
        L = self.ledger
        return (L["e_mech_final"] - L["e_mech_initial"]) - L["work_modulation"] - L["recoil_heating"]

    def summary(self) -> dict:
        L = {k: np.asarray(v).tolist() for k, v in self.ledger.items()}
        out = {
            "n_trajectories": self.config.n_trajectories,
            "n_steps": self.config.n_steps,
            "dt": self.config.dt,
            "seed": self.config.seed,
            "ledger": L,
            "final_v": self.v[-1].tolist(),
            "mean_v2_final": float(np.mean(self.v[-1] ** 2)),
        }
        if self.drag is not None:
            out["drag"] = self.drag.tolist()
        if self.psd is not None:
            out["psd_integral"] = self.psd.integral()
        return out

    def summary_hash(self) -> str:
        blob = json.dumps(self.summary(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def trace_rows(self, trajectory=0):
        for i in range(self.t.size):
            yield (float(self.t[i]), float(self.x[i, trajectory]), float(self.v[i, trajectory]),
                   float(self.eps[i, trajectory]))


class _NoiseBlocks:
    """Per-trajectory standard-normal draws, fetched a block of steps at a time."""

    def __init__(self, rngs, n_channels, block):
        self.rngs = rngs
        self.n_channels = n_channels
        self.block = block
        self.pos = block
        self.data = None

    def next(self):
        if self.pos == self.block:
            self.data = np.stack([g.standard_normal((self.block, self.n_channels)) for g in self.rngs], axis=1)
            self.pos = 0
        row = self.data[self.pos]
        self.pos += 1
        return row


def run(config: SimConfig) -> SimResult:
    """Integrate all trajectories; see module docstring for the step sequence."""
    ss = config.validate()
    sysp = config.system
    dt, M = config.dt, config.n_trajectories
    k, m = sysp.k, sysp.mass
    U0 = sysp.atom.trap_depth
    rzeta = sysp.r * sysp.zeta if config.atom_signal else 0.0
    filt = ss.discretize(dt, config.hold)
    Phi, Gv, Cv, Dt = filt.Phi, filt.G, filt.C, filt.Dt
    n = filt.order
    gain = 1.0 / (1.0 + Dt)
    noise = config.noise

    s_photon = photon_shot_density(sysp)
    sig_p = white_sigma(s_photon, dt) if noise.photon else 0.0
    sig_d = white_sigma(s_photon * (1.0 / sysp.q - 1.0), dt) if noise.detection else 0.0
    sig_dip = white_sigma(s_photon, dt) if noise.dipole else 0.0
    sig_w = white_sigma(noise.white_density, dt) if noise.white_density > 0 else 0.0
    w_fs = 2.0 * sysp.E_r * sysp.atom.scatter_rate
    sig_rec = math.sqrt(2.0 * w_fs * dt / m) if noise.freespace else 0.0
    channels = ["photon", "detection", "dipole", "white", "thermal", "recoil"]
    active = [sig_p > 0, sig_d > 0, sig_dip > 0, sig_w > 0, noise.thermal_N > 0, sig_rec > 0]
    idx = {}
    for name, on in zip(channels, active):
        if on:
            idx[name] = len(idx)

    rngs = [np.random.default_rng([config.seed, i]) for i in range(M)]
    if config.x0 is None:
        x = np.array([g.uniform(0.0, math.pi / k) for g in rngs])
    else:
        x = np.full(M, float(config.x0))
    v = config.initial_velocities()
    if config.v_spread > 0:
        v = v + config.v_spread * np.array([g.standard_normal() for g in rngs])
    draws = _NoiseBlocks(rngs, max(len(idx), 1), config.block)

    thermal = None
    if "thermal" in idx:
        vth = noise.thermal_v_th
        s_th = noise.thermal_N * sysp.zeta**2 / (math.sqrt(8.0 * math.pi) * k * vth)
        thermal = ColoredNoise(s_th, 2.0 * math.sqrt(2.0) * k * vth, dt, M)
        warm = np.stack([g.standard_normal(len(thermal.taps)) for g in rngs], axis=1)
        thermal.filter(warm)
        th_buf, th_pos = None, config.block

    sig_inj = math.sqrt(sig_p**2 + sig_d**2 + sig_w**2
                        + (thermal.sigma**2 * np.sum(thermal.taps**2) if thermal else 0.0))
    bound = config.eps_bound * max(1.0, abs(rzeta) + 10.0 * sig_inj)

    X = np.zeros((M, n))
    Xd = np.zeros((M, n)) if sig_dip > 0 else None
    PhiT = Phi.T

    n_evals = config.n_steps + 1
    n_rec = (n_evals - 1) // config.decimation + 1
    rec_t = np.empty(n_rec)
    rec_x = np.empty((n_rec, M))
    rec_v = np.empty((n_rec, M))
    rec_e = np.empty((n_rec, M))
    eps_full = np.empty((n_evals, config.record_eps)) if config.record_eps else None

    drag_num = np.zeros(M) if config.clamp_velocity else None
    drag_den = 0.0
    n_window = n_evals - config.burn_in

    def evaluate(i):
        nonlocal th_buf, th_pos
        z = draws.next()
        s_in = rzeta * np.cos(2.0 * k * x) if rzeta else np.zeros(M)
        if sig_p:
            s_in = s_in + sig_p * z[:, idx["photon"]]
        if sig_w:
            s_in = s_in + sig_w * z[:, idx["white"]]
        if thermal is not None:
            if th_pos == config.block:
                wb = np.stack([g.standard_normal(config.block) for g in rngs], axis=1)
                th_buf, th_pos = thermal.filter(wb), 0
            s_in = s_in + th_buf[th_pos]
            th_pos += 1
        nd = sig_d * z[:, idx["detection"]] if sig_d else 0.0
        if n:
            eps = (s_in - X @ Cv - Dt * nd) * gain
            y = eps + nd
            X[:] = X @ PhiT + np.outer(y, Gv)
        else:
            eps = (s_in - Dt * nd) * gain
        eps_force = eps
        if Xd is not None:
            nz = sig_dip * z[:, idx["dipole"]]
            ed = (nz - Xd @ Cv) * gain if n else nz * gain
            if n:
                Xd[:] = Xd @ PhiT + np.outer(ed, Gv)
            eps_force = eps + ed
        if not np.all(np.abs(eps) < bound):
            bad = int(np.argmax(~(np.abs(eps) < bound)))
            raise SimulationInstabilityError(
                f"|eps| exceeded {bound:.3g} at step {i} (trajectory {bad}); loop diverging", i, bad)
        if eps_full is not None:
            eps_full[i] = eps[: config.record_eps]
        return eps, U0 * (1.0 + eps_force)

    def record(i, eps):
        if i % config.decimation == 0:
            j = i // config.decimation
            rec_t[j] = i * dt
            rec_x[j], rec_v[j], rec_e[j] = x, v, eps

    eps, U = evaluate(0)
    F = 2.0 * k * U * np.sin(2.0 * k * x)
    record(0, eps)
    ke0 = 0.5 * m * v**2
    c2 = np.cos(2.0 * k * x)
    e_mech0 = ke0 + U * c2
    work = np.zeros(M)
    recoil = np.zeros(M)
    if drag_num is not None and config.burn_in == 0:
        w = math.sin(math.pi * 0.5 / n_window) ** 2
        drag_num += w * F
        drag_den += w

    for i in range(1, n_evals):
        if config.clamp_velocity:
            x = x + v * dt
            eps, U = evaluate(i)
            F = 2.0 * k * U * np.sin(2.0 * k * x)
            if i >= config.burn_in:
                w = math.sin(math.pi * (i - config.burn_in + 0.5) / n_window) ** 2
                drag_num += w * F
                drag_den += w
        else:
            v = v + (0.5 * dt / m) * F
            x = x + v * dt
            U_old = U
            eps, U = evaluate(i)
            c2_old, c2 = c2, np.cos(2.0 * k * x)
            work += (U - U_old) * 0.5 * (c2 + c2_old)
            F = 2.0 * k * U * np.sin(2.0 * k * x)
            v = v + (0.5 * dt / m) * F
            if sig_rec:
                dv = sig_rec * draws.data[draws.pos - 1][:, idx["recoil"]]
                recoil += 0.5 * m * ((v + dv) ** 2 - v**2)
                v = v + dv
        record(i, eps)

    ledger = {
        "ke_initial": ke0,
        "ke_final": 0.5 * m * v**2,
        "e_mech_initial": e_mech0,
        "e_mech_final": 0.5 * m * v**2 + U * np.cos(2.0 * k * x),
        "work_modulation": work,
        "recoil_heating": recoil,
    }
    drag = drag_num / drag_den if drag_num is not None else None
    psd = None
    if eps_full is not None and eps_full.shape[0] - config.burn_in >= 1024:
        psd = estimate_psd(eps_full[config.burn_in:], dt)
    return SimResult(config, rec_t, rec_x, rec_v, rec_e, ledger, drag, eps_full, psd)


@dataclass(frozen=True)
class TemperatureEstimate:
    T: float
    stderr: float
    n_trajectories: int
    trend: float
    trend_stderr: float
    result: SimResult | None = None


def equilibrium_temperature(config: SimConfig, burn_in_time: float, check_trend=True,
                            trend_sigma=4.0) -> TemperatureEstimate:
    """Time-and-ensemble average of m <v^2> / k_B after ``burn_in_time``.

    The standard error comes from the scatter of per-trajectory time
    averages. The trend test compares the two halves of the sampling window
    and raises NonStationaryError when they differ by more than
    ``trend_sigma`` standard errors.
    """
    result = run(config)
    t, T = result.kinetic_temperature(burn_in_time)
    if t.size < 4:
        raise ValidationError("too few samples after burn-in")
    per_traj = T.mean(axis=0)
    M = per_traj.size
    T_mean = float(per_traj.mean())
    se = float(per_traj.std(ddof=1) / math.sqrt(M)) if M > 1 else math.nan
    half = t.size // 2
    diff = T[half:].mean(axis=0) - T[:half].mean(axis=0)
    trend = float(diff.mean())
    trend_se = float(diff.std(ddof=1) / math.sqrt(M)) if M > 1 else math.nan
    est = TemperatureEstimate(T_mean, se, M, trend, trend_se, result)
    if check_trend and M > 1 and abs(trend) > trend_sigma * trend_se:
        raise NonStationaryError(
            f"temperature still drifting after burn-in: {trend:.3g} K between halves "
            f"(> {trend_sigma:g} x {trend_se:.3g} K)")
    return est


def heating_slope(result: SimResult, start_time=0.0):
    """Least-squares slope of the ensemble m <v^2> / k_B versus time, in K/s."""
    t, T = result.kinetic_temperature(start_time)
    slope, _ = np.polyfit(t, T.mean(axis=1), 1)
    return float(slope)
