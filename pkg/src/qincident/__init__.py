"""qincident: hybrid quantum-classical neural networks for traffic incident
detection from zone-aggregated connected-vehicle data.

Subpackages:

* ``qsim``        exact statevector simulation of the quantum layer
* ``nn``          dense layers, BCE loss, Adam, backprop primitives
* ``model``       the classical baseline and hybrid model stacks
* ``data``        zone aggregation, features, labels, normalization, splits
* ``scenario``    synthetic corridor traffic with scheduled incidents
* ``evaluation``  confusion counts, metrics, repeated-run comparisons
* ``gradcheck``   independent oracles for circuits and gradients
* ``cli``         the ``qincident`` command-line driver
"""

from . import cli, data, evaluation, gradcheck, model, nn, qsim, scenario
from .errors import ConfigError, DataError, FormatError, ParseError

__version__ = "0.1.0"

__all__ = [
    "cli",
    "data",
    "evaluation",
    "gradcheck",
    "model",
    "nn",
    "qsim",
    "scenario",
    "ConfigError",
    "DataError",
    "FormatError",
    "ParseError",
    "__version__",
]
