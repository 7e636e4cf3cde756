"""Quantum-jump unravelling of the two-level master equation.

Each step of length ``dt`` either records a photon emission (probability
``Gamma |c1|^2 dt``, state reset to the ground level) or applies the
non-Hermitian no-jump propagator and renormalises.  Trajectories are run in
lockstep for speed, but each draws from its own Philox stream keyed by
``(seed, index)``, so trajectory ``i`` does not depend on how many others
run with it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import SystemParams

RNG_CHUNK = 4096
BURN_IN = 20.0  # in units of 1/Gamma


class InsufficientData(ValueError):
    pass


@dataclass
class JumpTrajectory:
    seed: int
    index: int
    dt: float
    t_max: float
    jump_times: np.ndarray
    final_state: np.ndarray
    sample_times: np.ndarray
    p00: np.ndarray
    re01: np.ndarray
    im01: np.ndarray

    @property
    def sample_grid(self) -> np.ndarray:
        return np.column_stack((self.sample_times, self.p00))

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)


@dataclass
class StationaryEstimate:
    p00: float
    re01: float
    im01: float
    jump_rate: float
    p00_err: float
    re01_err: float
    im01_err: float
    jump_rate_err: float
    n_trajectories: int
    n_batches: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _initial_vector(initial) -> np.ndarray:
    if isinstance(initial, str):
        if initial == "ground":
            return np.array([1.0, 0.0], dtype=complex)
        if initial == "excited":
            return np.array([0.0, 1.0], dtype=complex)
        raise ValueError(f"unknown initial state {initial!r}")
    v = np.asarray(initial, dtype=complex)
    if v.shape != (2,) or not np.isclose(np.vdot(v, v).real, 1.0, atol=1e-12):
        raise ValueError("initial state must be a normalised 2-vector")
    return v


def no_jump_propagator(params: SystemParams, dt: float) -> np.ndarray:
    g, r = params.gamma, params.rabi
    h_eff = np.array([[0.0, 0.5 * r], [0.5 * r, -0.5j * g]], dtype=complex)
    return expm(-1j * h_eff * dt)


def _check_contract(params: SystemParams, t_max: float, dt: float):
    if not (0 < dt <= 0.01 / params.gamma * (1 + 1e-12)):
        raise ValueError(f"dt must satisfy 0 < dt <= 0.01/gamma, got {dt!r}")
    if not (t_max >= 100.0 / params.gamma * (1 - 1e-12)):
        raise ValueError(f"t_max must be >= 100/gamma, got {t_max!r}")


def _run_block(params, indices, seed, t_max, dt, initial, sample_every):
    n = len(indices)
    n_steps = int(round(t_max / dt))
    (u00, u01), (u10, u11) = no_jump_propagator(params, dt)
    v = _initial_vector(initial)
    # elementwise updates (not BLAS) keep every lane bit-identical whatever the batch size
    c0 = np.full(n, v[0])
    c1 = np.full(n, v[1])
    rngs = [np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(int(i),)))) for i in indices]
    jumps = [[] for _ in range(n)]
    n_samples = n_steps // sample_every + 1
    samples = np.empty((3, n_samples, n))
    times = np.arange(n_samples) * sample_every * dt

    def record(k):
        rho01 = c0 * np.conj(c1)
        samples[0, k] = c0.real**2 + c0.imag**2
        samples[1, k] = rho01.real
        samples[2, k] = rho01.imag

    record(0)
    gdt = params.gamma * dt
    for step in range(n_steps):
        j = step % RNG_CHUNK
        if j == 0:
            u_block = np.stack([g.random(RNG_CHUNK) for g in rngs], axis=1)
        u = u_block[j]
        p_jump = gdt * (c1.real**2 + c1.imag**2)
        jumped = u < p_jump
        c0, c1 = u00 * c0 + u01 * c1, u10 * c0 + u11 * c1
        norm = np.sqrt(c0.real**2 + c0.imag**2 + c1.real**2 + c1.imag**2)
        c0 /= norm
        c1 /= norm
        if jumped.any():
            t0 = step * dt
            for k in np.nonzero(jumped)[0]:
                # u/p_jump is uniform on [0, 1) given a jump: place it inside the step
                jumps[k].append(t0 + dt * u[k] / p_jump[k])
            c0[jumped] = 1.0
            c1[jumped] = 0.0
        if (step + 1) % sample_every == 0:
            record((step + 1) // sample_every)

    return [
        JumpTrajectory(
            seed, int(idx), dt, n_steps * dt, np.array(jumps[k]), np.array([c0[k], c1[k]]),
            times, samples[0, :, k].copy(), samples[1, :, k].copy(), samples[2, :, k].copy(),
        )
        for k, idx in enumerate(indices)
    ]


def simulate_ensemble(
    params: SystemParams,
    n_trajectories: int,
    t_max: float,
    dt: float,
    seed: int,
    initial="ground",
    sample_dt: float | None = None,
    first_index: int = 0,
    workers: int = 1,
) -> list:
    """Trajectories ``first_index .. first_index + n - 1`` of the stream family ``seed``.

    ``sample_dt`` (default ``0.1/Gamma``) sets the spacing of the recorded
    Bloch coordinates.  ``workers > 1`` splits the ensemble over threads;
    results are identical either way.
    """
    _check_contract(params, t_max, dt)
    if n_trajectories < 1:
        raise ValueError("need at least one trajectory")
    if not (0 <= int(seed) < 2**64):
        raise ValueError("seed must be a 64-bit unsigned integer")
    seed = int(seed)
    if sample_dt is None:
        sample_dt = 0.1 / params.gamma
    sample_every = max(1, int(round(sample_dt / dt)))
    indices = list(range(first_index, first_index + n_trajectories))
    if workers <= 1 or n_trajectories < 2 * workers:
        return _run_block(params, indices, seed, t_max, dt, initial, sample_every)
    blocks = [b.tolist() for b in np.array_split(np.array(indices), workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda b: _run_block(params, b, seed, t_max, dt, initial, sample_every), blocks)
    return [tr for part in parts for tr in part]


def simulate(params: SystemParams, t_max: float, dt: float, seed: int, index: int = 0, initial="ground",
             sample_dt: float | None = None) -> JumpTrajectory:
    return simulate_ensemble(params, 1, t_max, dt, seed, initial, sample_dt, first_index=index)[0]


def _mean_err(x: np.ndarray):
    return float(np.mean(x)), float(np.std(x, ddof=1) / np.sqrt(x.size))


def estimate_stationary(trajectories, gamma: float | None = None, burn_in: float | None = None,
                        batches: int = 10) -> StationaryEstimate:
    """Time-and-ensemble averages after burn-in with batch-means error bars.

    Every trajectory's post-burn-in window is cut into ``batches`` equal
    blocks; the block means of all trajectories are treated as independent
    samples.  ``burn_in`` defaults to ``20/gamma``.
    """
    trajs = list(trajectories)
    if len(trajs) < 10:
        raise InsufficientData(f"need at least 10 trajectories, got {len(trajs)}")
    if burn_in is None:
        if gamma is None:
            raise ValueError("pass gamma or an explicit burn_in")
        burn_in = BURN_IN / gamma
    cols = {"p00": [], "re01": [], "im01": [], "rate": []}
    for tr in trajs:
        keep = tr.sample_times >= burn_in
        if keep.sum() < batches:
            raise InsufficientData("too few samples after burn-in")
        edges = np.linspace(burn_in, tr.t_max, batches + 1)
        idx = np.array_split(np.nonzero(keep)[0], batches)
        for name in ("p00", "re01", "im01"):
            vals = getattr(tr, name)
            cols[name].extend(vals[i].mean() for i in idx)
        counts, _ = np.histogram(tr.jump_times, bins=edges)
        cols["rate"].extend(counts / np.diff(edges))
    est = {k: _mean_err(np.asarray(v)) for k, v in cols.items()}
    return StationaryEstimate(
        est["p00"][0], est["re01"][0], est["im01"][0], est["rate"][0],
        est["p00"][1], est["re01"][1], est["im01"][1], est["rate"][1],
        len(trajs), batches,
    )
