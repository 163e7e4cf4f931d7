from .families import (  # noqa: F401
    FAMILIES,
    WIDTH_FACTORS,
    Model,
    ModelSpec,
    build_model,
    enumerate_variants,
)
from .checkpoint import load_model, save_model  # noqa: F401
