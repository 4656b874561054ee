"""Geometry and average air-to-ground channel for a single hovering UAV.

Elevation angles enter the LOS sigmoid in degrees; everything else uses
radians.  Excess path losses are configured in dB and converted once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
G3DB_NUMERATOR = 8.83


class OutsideMainLobeError(ValueError):
    """A device lies outside the ground footprint of the antenna main lobe."""

    def __init__(self, device, r, reach):
        self.device = device
        super().__init__(
            f"device {device} outside main lobe: ground distance {r:.6g} m "
            f"exceeds footprint radius {reach:.6g} m"
        )


@dataclass(frozen=True)
class Environment:
    name: str
    psi: float
    beta: float
    eta1_db: float
    eta2_db: float
    eta1: float = field(init=False)
    eta2: float = field(init=False)

    def __post_init__(self):
        if self.psi <= 0 or self.beta <= 0:
            raise ValueError("psi and beta must be positive")
        eta1 = 10.0 ** (self.eta1_db / 10.0)
        eta2 = 10.0 ** (self.eta2_db / 10.0)
        if not eta2 > eta1 > 1.0:
            raise ValueError("need eta2 > eta1 > 1 in linear scale")
        object.__setattr__(self, "eta1", eta1)
        object.__setattr__(self, "eta2", eta2)

    def to_dict(self):
        return {"name": self.name, "psi": self.psi, "beta": self.beta,
                "eta1_db": self.eta1_db, "eta2_db": self.eta2_db}


ENVIRONMENTS = {
    "suburban": Environment("suburban", 4.88, 0.43, 0.1, 21.0),
    "urban": Environment("urban", 9.61, 0.16, 1.0, 20.0),
    "dense_urban": Environment("dense_urban", 12.08, 0.11, 1.6, 23.0),
    "highrise": Environment("highrise", 27.23, 0.08, 2.3, 34.0),
}


def get_environment(name, **overrides):
    try:
        env = ENVIRONMENTS[name]
    except KeyError:
        raise KeyError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}") from None
    if overrides:
        env = Environment(name=name, **{**{k: getattr(env, k) for k in ("psi", "beta", "eta1_db", "eta2_db")},
                                        **overrides})
    return env


@dataclass(frozen=True)
class SystemConfig:
    fc: float = 2.5e9
    alpha: float = 2.0
    sigma2: float = 1e-13
    gamma0: float = 10.0 ** (-1.6)
    p_min: float = 1e-3
    p_max: float = 0.5
    h_min: float = 40.0
    h_max: float = 1000.0
    theta0: float = math.pi / 18
    R: float = 20.0

    def __post_init__(self):
        if not 0 < self.p_min < self.p_max:
            raise ValueError("need 0 < p_min < p_max")
        if not 0 < self.h_min <= self.h_max:
            raise ValueError("need 0 < h_min <= h_max")
        if not 0 < self.theta0 < math.pi:
            raise ValueError("need 0 < theta0 < pi")
        if self.gamma0 <= 0 or self.sigma2 <= 0 or self.alpha <= 0 or self.fc <= 0:
            raise ValueError("gamma0, sigma2, alpha and fc must be positive")

    @property
    def kappa(self):
        return 4.0 * math.pi * self.fc / SPEED_OF_LIGHT

    @property
    def gamma0_db(self):
        return 10.0 * math.log10(self.gamma0)

    def with_overrides(self, **kw):
        if "gamma0_db" in kw:
            db = kw.pop("gamma0_db")
            if db is not None:
                kw["gamma0"] = 10.0 ** (db / 10.0)
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self):
        return {"fc": self.fc, "alpha": self.alpha, "sigma2": self.sigma2,
                "gamma0_db": self.gamma0_db, "p_min": self.p_min, "p_max": self.p_max,
                "h_min": self.h_min, "h_max": self.h_max, "theta0": self.theta0, "R": self.R}


@dataclass(frozen=True, eq=False)
class Deployment:
    positions: np.ndarray
    activation: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        c = np.asarray(self.activation, dtype=float).reshape(-1)
        if pos.shape[0] < 1 or pos.shape[0] != c.shape[0]:
            raise ValueError("need K >= 1 positions with one activation probability each")
        if np.any(c <= 0) or np.any(c >= 1):
            raise ValueError("activation probabilities must lie in (0, 1)")
        pos.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "activation", c)

    @property
    def K(self):
        return self.positions.shape[0]

    @property
    def x(self):
        return self.positions[:, 0]

    @property
    def y(self):
        return self.positions[:, 1]

    def __eq__(self, other):
        return (isinstance(other, Deployment)
                and np.array_equal(self.positions, other.positions)
                and np.array_equal(self.activation, other.activation))


@dataclass(frozen=True)
class UavPlacement:
    x: float
    y: float
    h: float
    theta_b: float


def _check_index(k, dep):
    if not 0 <= k < dep.K:
        raise IndexError(f"device index {k} out of range for K={dep.K}")


def ground_distance(placement, k, dep):
    _check_index(k, dep)
    return math.hypot(dep.x[k] - placement.x, dep.y[k] - placement.y)


def slant_distance(placement, k, dep):
    return math.hypot(ground_distance(placement, k, dep), placement.h)


def ground_distances(placement, dep):
    return np.hypot(dep.x - placement.x, dep.y - placement.y)


def elevation_angle_deg(r, h):
    """Elevation angle in degrees; a device right below the UAV sees 90."""
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise ValueError("height must be positive")
    out = np.degrees(np.arctan2(h, np.asarray(r, dtype=float)))
    return float(out) if out.ndim == 0 else out


def los_probability(theta_deg, env):
    return 1.0 / (1.0 + env.psi * np.exp(-env.beta * (np.asarray(theta_deg, dtype=float) - env.psi)))


def mean_excess_loss(theta_deg, env):
    p = los_probability(theta_deg, env)
    return p * env.eta1 + (1.0 - p) * env.eta2


def path_loss_from_geometry(r, h, env, cfg):
    """Average path loss for ground distance(s) ``r`` at height ``h``."""
    r = np.asarray(r, dtype=float)
    d = np.sqrt(r * r + h * h)
    return mean_excess_loss(elevation_angle_deg(r, h), env) * (cfg.kappa * d) ** cfg.alpha


def avg_path_loss(placement, k, dep, env, cfg):
    return float(path_loss_from_geometry(ground_distance(placement, k, dep), placement.h, env, cfg))


def avg_gain(placement, k, dep, env, cfg):
    return 1.0 / avg_path_loss(placement, k, dep, env, cfg)


def avg_gains(placement, dep, env, cfg):
    return 1.0 / path_loss_from_geometry(ground_distances(placement, dep), placement.h, env, cfg)


def antenna_gain(theta_b):
    if np.any(np.asarray(theta_b) <= 0):
        raise ValueError("beamwidth must be positive")
    return G3DB_NUMERATOR / np.asarray(theta_b, dtype=float) ** 2


def footprint_angle(placement, dep):
    """Smallest half-beamwidth whose footprint covers every device."""
    return 2.0 * math.atan(float(ground_distances(placement, dep).max()) / placement.h)


def gain_bound_delta(env, cfg):
    """Constant ``delta`` with ``g_k <= delta * (r_k h)^(-alpha/2)`` for all
    elevations in [0, 90] degrees.

    The excess-loss factor ``1 / (P_los eta1 + P_nlos eta2)`` grows with the
    elevation angle, so its supremum sits at 90 degrees.
    """
    return 2.0 ** (-cfg.alpha / 2) * cfg.kappa ** (-cfg.alpha) / float(mean_excess_loss(90.0, env))


def sinr(placement, dep, env, cfg, powers):
    """Exact average SINR of every device with all of them in the main lobe."""
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (dep.K,):
        raise ValueError(f"expected {dep.K} powers, got shape {powers.shape}")
    r = ground_distances(placement, dep)
    reach = placement.h * math.tan(placement.theta_b / 2) if placement.theta_b < math.pi else math.inf
    outside = np.nonzero(r > reach * (1.0 + 1e-9))[0]
    if outside.size:
        k = int(outside[0])
        raise OutsideMainLobeError(k, float(r[k]), reach)
    G = G3DB_NUMERATOR / placement.theta_b ** 2
    g = 1.0 / path_loss_from_geometry(r, placement.h, env, cfg)
    rx = dep.activation * powers * g
    return G * powers * g / (G * (rx.sum() - rx) + cfg.sigma2)
