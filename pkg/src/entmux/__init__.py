"""Monte Carlo and analytic toolkit for time- and wavelength-multiplexed time-bin entanglement."""
from .analysis import (FitError, FringeFit, LossLedger, UndefinedCARError, chsh_violation, compute_car,
                       fit_fringe, hom_visibility, ledger_total, visibility)
from .config import ConfigError, ExperimentConfig, default_config, load_config, parse_config
from .grid import ItuGrid, default_grid, energy_conservation_check, pair_for_index

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ExperimentConfig", "FitError", "FringeFit", "ItuGrid", "LossLedger",
    "UndefinedCARError", "chsh_violation", "compute_car", "default_config", "default_grid",
    "energy_conservation_check", "fit_fringe", "hom_visibility", "ledger_total", "load_config",
    "pair_for_index", "parse_config", "visibility",
]
