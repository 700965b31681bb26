"""Fourier multipliers on H1 of the disc and bidisc: polynomials, operators,
lacunary symbols, dyadic martingales and numerical checks of the associated
norm inequalities."""

from .indnorm import (
    ind_norm,
    ind_norm_exact,
    ind_norm_mc,
    rademacher_average_exact,
    square_function_norm,
)
from .martingale import (
    C_DEC,
    Atom,
    AtomicDecomposition,
    DyadicFunction,
    atomic_decompose,
    h1_delta_norm,
    is_atom,
    rademacher,
    rademacher_embed,
    square_function,
)
from .operators import (
    abs_pointwise,
    apply_symbol,
    apply_symbol_2d,
    grid_expectation,
    shift_average,
    translate,
)
from .poly import (
    AnalyticPoly,
    BivariatePoly,
    QuadratureGrid,
    StepFunction,
    TrigPoly,
    convolve,
    derivative,
    fejer_kernel,
    l1_norm,
    l1_norm_2d,
    l2_norm,
    mixed_l1l2_norm,
    sample,
)
from .symbols import (
    IdemSet2D,
    LacunarySystem,
    Symbol,
    build_K_hat,
    build_mu_eps,
    lacunary_check,
    split_subsequences,
    stein_constant,
)

__version__ = "0.1.0"
