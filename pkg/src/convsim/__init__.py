"""Cycle-level simulation of streaming 2-D convolution hardware.

Modules:

* :mod:`convsim.pixelio` images, kernels, PGM files, noise and PSNR
* :mod:`convsim.refconv` the exact software reference convolution
* :mod:`convsim.clocksim` two-phase clocked elements
* :mod:`convsim.archs` the five streaming architectures
* :mod:`convsim.perfmodel` frame-time model and design-space explorer
* :mod:`convsim.cli` command-line front end
"""

__version__ = "0.1.0"
