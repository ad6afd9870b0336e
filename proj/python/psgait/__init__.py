"""Stepping-stone walking on piecewise slopes: pendulum model, MPC planner and simulator."""

import json

from . import _core
from ._core import (
    CamConvention,
    ComState,
    ConfigError,
    ContactPoint,
    NominalOrbit,
    PendulumParams,
    PreSlopeViolation,
    Side,
    SingularTransition,
    SlopeGradient,
    com_flow,
    delta_z_dot,
    deviation_decay,
    galip_velocity,
    nominal_orbit,
    preset_names,
    reset_map,
)

SAMPLE_COLUMNS = (
    "t", "x", "y", "z", "vx", "vy", "vz", "lcom_x", "lcom_y", "xi_x", "xi_y",
    "contact_x", "contact_y",
)


def preset(name):
    """Fully explicit configuration dict for a named preset."""
    return json.loads(_core.preset_json(name))


def normalize_config(config):
    """Validate a configuration dict and fill in every default."""
    return json.loads(_core.normalize_config(json.dumps(config)))


def run(config=None, *, preset=None, overrides=()):
    """Run one closed-loop simulation.

    Pass either a configuration dict or a preset name. Overrides use the
    same dotted ``key=value`` form as the command line. Returns a dict with
    ``summary`` (the summary.json content), ``samples`` (N x 13 array, see
    ``SAMPLE_COLUMNS``), ``trace_csv`` and ``events_csv``.
    """
    if config is not None and preset is not None:
        raise ValueError("pass either config or preset, not both")
    out = _core.run(
        json.dumps(config) if config is not None else "",
        preset or "",
        list(overrides),
    )
    out["summary"] = json.loads(out.pop("summary_json"))
    return out


__all__ = [
    "CamConvention", "ComState", "ConfigError", "ContactPoint", "NominalOrbit",
    "PendulumParams", "PreSlopeViolation", "SAMPLE_COLUMNS", "Side", "SingularTransition",
    "SlopeGradient", "com_flow", "delta_z_dot", "deviation_decay", "galip_velocity",
    "nominal_orbit", "normalize_config", "preset", "preset_names", "reset_map", "run",
]
