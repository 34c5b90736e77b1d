"""Simulator and resource estimator for trapped-ion Quantum von Neumann
(QCCD) architectures, with the Quantum 4004 machine as a preset."""

from .core import (Circuit, MachineParams, TrapLayout, load_circuit, load_layout,
                   load_params, quantum4004_preset, resource_table)

__version__ = "0.1.0"

__all__ = ["Circuit", "MachineParams", "TrapLayout", "load_circuit", "load_layout",
           "load_params", "quantum4004_preset", "resource_table", "__version__"]
