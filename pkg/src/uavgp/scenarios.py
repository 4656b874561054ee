"""Device deployments on a disk, activation sampling and scenario files."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ENVIRONMENTS, Deployment, SystemConfig, get_environment

KINDS = ("random", "deterministic")
OVERRIDE_KEYS = ("fc", "alpha", "sigma2", "gamma0_db", "p_min", "p_max", "h_min", "h_max", "theta0")
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class ScenarioFormatError(ValueError):
    """Scenario file content does not follow the expected layout."""


def sample_activation(K, seed):
    # separate stream from the positions: the draws for K devices are a prefix
    # of the draws for K+1, and deterministic/random layouts share them
    u = np.random.default_rng([int(seed), 1]).random(K)
    return 0.5 * (1.0 - u)  # (0, 0.5]


def random_positions(K, R, seed):
    rng = np.random.default_rng([int(seed), 0])
    rad = R * np.sqrt(rng.random(K))
    ang = 2.0 * math.pi * rng.random(K)
    return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])


def sunflower_positions(K, R):
    """Golden-angle lattice with K points evenly covering the disk."""
    if K == 1:
        return np.zeros((1, 2))
    i = np.arange(K, dtype=float)
    rad = R * np.sqrt((i + 0.5) / K)
    ang = i * GOLDEN_ANGLE
    return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])


def random_deployment(K, R, seed):
    if K < 1 or not R > 0:
        raise ValueError("need K >= 1 and R > 0")
    return Deployment(random_positions(K, R, seed), sample_activation(K, seed))


def deterministic_deployment(K, R, seed=0):
    if K < 1 or not R > 0:
        raise ValueError("need K >= 1 and R > 0")
    return Deployment(sunflower_positions(K, R), sample_activation(K, seed))


@dataclass
class Scenario:
    deployment: Deployment
    env_name: str = "dense_urban"
    cfg: SystemConfig = field(default_factory=SystemConfig)
    seed: int = 0
    kind: str = "random"
    explicit: bool = False

    @property
    def env(self):
        return get_environment(self.env_name)

    @property
    def K(self):
        return self.deployment.K

    def to_dict(self):
        base = SystemConfig()
        overrides = {}
        for key in OVERRIDE_KEYS:
            if key == "gamma0_db":
                if self.cfg.gamma0 != base.gamma0:
                    overrides[key] = self.cfg.gamma0_db
            elif getattr(self.cfg, key) != getattr(base, key):
                overrides[key] = getattr(self.cfg, key)
        d = {"kind": self.kind, "K": self.K, "R": self.cfg.R, "seed": self.seed,
             "env": self.env_name, "overrides": overrides}
        if self.explicit:
            d["devices"] = [{"x": float(x), "y": float(y), "c": float(c)}
                            for (x, y), c in zip(self.deployment.positions, self.deployment.activation)]
        return d


def make_scenario(K, R=20.0, seed=0, kind="random", env="dense_urban", cfg=None, **overrides):
    if kind not in KINDS:
        raise ValueError(f"unknown deployment kind {kind!r}")
    if env not in ENVIRONMENTS:
        raise KeyError(f"unknown environment {env!r}")
    cfg = (cfg or SystemConfig()).with_overrides(R=R, **overrides)
    builder = random_deployment if kind == "random" else deterministic_deployment
    return Scenario(builder(K, cfg.R, seed), env, cfg, seed, kind)


def scenario_from_dict(d, cli_overrides=None):
    """Build a scenario from its JSON form; ``cli_overrides`` win over the file."""
    if not isinstance(d, dict):
        raise ScenarioFormatError("scenario must be a JSON object")
    try:
        kind = d.get("kind", "random")
        seed = int(d.get("seed", 0))
        env = d.get("env", "dense_urban")
        R = float(d.get("R", SystemConfig().R))
        over = dict(d.get("overrides") or {})
        unknown = set(over) - set(OVERRIDE_KEYS)
        if unknown:
            raise ScenarioFormatError(f"unknown override keys {sorted(unknown)}")
        over.update({k: v for k, v in (cli_overrides or {}).items() if v is not None})
        if "R" in over:
            R = float(over.pop("R"))
        cfg = SystemConfig().with_overrides(R=R, **{k: float(v) for k, v in over.items()})
        if env not in ENVIRONMENTS:
            raise ScenarioFormatError(f"unknown environment {env!r}")
        devices = d.get("devices")
        if devices:
            pos = np.array([[float(v["x"]), float(v["y"])] for v in devices])
            c = np.array([float(v["c"]) for v in devices])
            return Scenario(Deployment(pos, c), env, cfg, seed, kind, explicit=True)
        K = int(d["K"])
        if kind not in KINDS:
            raise ScenarioFormatError(f"unknown deployment kind {kind!r}")
        builder = random_deployment if kind == "random" else deterministic_deployment
        return Scenario(builder(K, cfg.R, seed), env, cfg, seed, kind)
    except ScenarioFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"malformed scenario: {exc}") from exc


def load_scenario(path, cli_overrides=None):
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(f"invalid JSON: {exc}") from exc
    return scenario_from_dict(d, cli_overrides)


def save_scenario(scenario, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(scenario.to_dict(), fh, indent=2)
        fh.write("\n")
