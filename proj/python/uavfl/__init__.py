"""Python bindings for the uavfl UAV federated learning simulator."""

import json as _json

from ._core import (  # noqa: F401
    ChannelConfig,
    ComputePowerConfig,
    ConfigError,
    Position,
    UavflError,
    channel_gain,
    cluster_fleet,
    comm_energy,
    compute_energy,
    distance,
    fedavg_aggregate,
    kmeans_cluster,
    metropolis_weights,
    min_transmit_time,
    mixing_step,
    noise_power_w,
    reference_gain,
    shannon_rate_bps,
    spawn_fleet,
    summarize_csv,
)
from . import _core


def normalize_config(config=None):
    """Return the fully defaulted config for a dict (or JSON string)."""
    text = config if isinstance(config, str) else _json.dumps(config or {})
    return _json.loads(_core.normalize_config(text))


def run_experiment(config=None, write_files=False):
    """Run one experiment from a config dict (or JSON string) and return its summary."""
    text = config if isinstance(config, str) else _json.dumps(config or {})
    return _core.run_experiment(text, write_files)


__version__ = "0.1.0"
