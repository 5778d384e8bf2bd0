"""Maxwell cavity eigenvalue stability toolkit (bindings to the C++ core)."""

from ._core import (
    CavityError,
    CubeBenchmark,
    Modulus,
    Profile,
    RunConfig,
    analytic_cube_spectrum,
    command_names,
    cube_benchmark,
    d32_seminorm,
    dini_integral,
    exit_code_of,
    load_config,
    mazya_criterion,
    parse_config,
    run,
    scaling_law_check,
    solve_pencil,
)

__all__ = [
    "CavityError",
    "CubeBenchmark",
    "Modulus",
    "Profile",
    "RunConfig",
    "analytic_cube_spectrum",
    "command_names",
    "cube_benchmark",
    "d32_seminorm",
    "dini_integral",
    "exit_code_of",
    "load_config",
    "mazya_criterion",
    "parse_config",
    "run",
    "scaling_law_check",
    "solve_pencil",
]
