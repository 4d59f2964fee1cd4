"""Crosslink-only orbit determination for spacecraft in the Earth-Moon system.

Modules
-------
dynamics       CRTBP equations of motion, STM propagation and approximation
periodic       halo / Lyapunov / lunar orbit seeds
linkbudget     radiometric noise models (ranging, Doppler, tones, interferometry)
observations   crosslink measurement models and synthetic data
estimation     EKF and Schmidt-Kalman consider filter
observability  Gramian, information matrix and sensitivity metrics
config         scenario files and shipped presets
harness        Monte Carlo campaigns and reporting
"""

from .dynamics import EARTH_MOON, SystemConstants

__version__ = "0.1.0"
__all__ = ["EARTH_MOON", "SystemConstants", "__version__"]
