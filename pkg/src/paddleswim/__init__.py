"""Simulation and system identification for a planar viscous paddle swimmer.

The package provides, roughly bottom-up:

* :mod:`paddleswim.se2` -- exact SE(2) group / algebra operations.
* :mod:`paddleswim.swimmer` -- the n-segment paddle-swimmer model: slender-body
  drag, the shape-to-body-velocity connection, and time integration of the
  full dynamics for any inertia-damping ratio.
* :mod:`paddleswim.reduction` -- locked tensors, mechanical/viscous
  connections, and the analytic first-order slow-manifold correction fields.
* :mod:`paddleswim.shapes` -- gait definitions and the noisy shape-signal
  generator used to excite the dynamics.
* :mod:`paddleswim.phase` -- phase estimation and Fourier-series models.
* :mod:`paddleswim.regression` -- phase-sectioned least-squares local models
  (Stokes and perturbed-Stokes regressor families).
* :mod:`paddleswim.metrics` -- zeroth-order baseline, Gamma/Delta prediction
  quality metrics, and epsilon sweeps.
* :mod:`paddleswim.optimize` -- goal functionals and gradient steps on gait
  parameterizations through a fitted local model.
* :mod:`paddleswim.cli` -- the ``paddleswim`` command-line harness.
"""

__version__ = "0.1.0"
