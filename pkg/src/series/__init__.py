from .jet import (
    DEFAULT_ORDER,
    CoefficientRule,
    Jet,
    add,
    arg_scale,
    compose,
    evaluate,
    mul,
    remainder,
    truncate,
)
