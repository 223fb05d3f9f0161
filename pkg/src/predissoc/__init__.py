"""Survival amplitudes of a predissociating state at a level crossing.

Submodules:

``specfun``
    Airy functions and adaptive Gauss-Kronrod quadrature.
``model``
    Two-level potential models, assumption certificates and crossing data.
``wkb``
    Actions, Bohr-Sommerfeld values, the ground state and Airy-normalized
    fundamental solutions.
``green``
    Half-line Green kernels, assembled resolvents and operator norms.
``spectral``
    Grid operators, exterior complex scaling and the resonance.
``dynamics``
    Energy cutoff and the exact survival amplitude on a box.
``asym``
    ``F``, ``A0``, ``A^+-``, ``B^+`` and the ``h^{2/3}`` coefficient ``q0``.
``experiments``, ``fitting``, ``cli``
    Sweeps over ``h``, slope fits and the command-line driver.
"""

__version__ = "0.1.0"

from .model import PotentialModel, default_model, validate_assumptions, crossing_data  # noqa: E402,F401
