"""Densities and tail asymptotics of fractional Levy motion."""

from ._validation import (
    ConfigError,
    DegenerateMeasureError,
    DivergenceError,
    DomainError,
    FLMError,
    QuadratureError,
    RegimeError,
    SlowDecayError,
)
from .asymptotics import (
    Regime,
    TailReport,
    compare,
    ex41_asymptote,
    thm21_asymptote,
    thm22_heavy_asymptote,
    thm22_regular_asymptote,
)
from .charfn import Model, m_t_density, mathfrak_m, psi, psi_split, pushforward_oracle, theta
from .density import DensityGrid, compose_density, density_fourier, rho_series, subexp_test, tilde_p
from .kernel import Kernel, SingularPointError
from .levy_measure import (
    DyadicAtoms,
    ExpPowerPiece,
    GaussianTailPiece,
    LevyMeasure,
    PowerPiece,
    TailRegime,
    check_existence,
    check_integral_conditions,
    classify_tail_regime,
    dyadic_example,
    moment_integral,
    symmetric_atoms,
    two_sided_power,
)
from .saddle import SaddleError, solve_saddle
from .simulate import SimConfig, empirical_density, sample

__version__ = "0.1.0"
