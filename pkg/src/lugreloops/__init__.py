"""Hysteresis loops and minor loops of the LuGre and Dahl friction models."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ConstantDamping,
    DahlParams,
    ModelParams,
    StribeckDamping,
    StribeckParams,
    TabulatedDamping,
    TabulatedMap,
    ZeroMap,
    dahl_to_lugre,
    eval_g,
    lugre_output,
    lugre_rhs,
)
from .signal import (  # noqa: E402
    BimodalInputSpec,
    NormalizedInput,
    PeriodicSignal,
    build_bimodal,
    normalize,
    time_scale,
    variation,
)
from .integrator import (  # noqa: E402
    IntegratorConfig,
    Trajectory,
    simulate_dahl,
    simulate_example1,
    simulate_lugre,
    steady_state_periods,
)
from .loops import (  # noqa: E402
    extract_minor_loop,
    loop_area,
    loop_closed_form,
    y_circle,
    y_star,
)
from .lab import gamma_sweep, period_iteration, run_example, scenario  # noqa: E402
