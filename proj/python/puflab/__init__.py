# Copyright The puflab Authors.
# Licensed under the Apache License, Version 2.0, see LICENSE for details.
# SPDX-License-Identifier: Apache-2.0

"""Simulated PUF security stack: devices, metrics, key services, protocols and attacks."""

from ._puflab import (
    ConfigError,
    IoError,
    ProtocolStateError,
    PufConfig,
    PufInstance,
    PufKind,
    RandomStream,
    ShapeError,
    TamperError,
    ValidationError,
    attest,
    cli,
    compute_metrics,
    derive_walk,
    fe_generate,
    fe_reproduce,
    modeling_attack,
    run_scenario,
)

__all__ = [
    "ConfigError",
    "IoError",
    "ProtocolStateError",
    "PufConfig",
    "PufInstance",
    "PufKind",
    "RandomStream",
    "ShapeError",
    "TamperError",
    "ValidationError",
    "attest",
    "cli",
    "compute_metrics",
    "derive_walk",
    "fe_generate",
    "fe_reproduce",
    "modeling_attack",
    "run_scenario",
]
