"""Ready-made inverse problems: heat1d, poisson2d, eit and pat."""

from .base import ProblemBundle
from .eit import build_eit
from .heat1d import build_heat1d, g_custom
from .pat import build_pat, dalembert
from .poisson2d import build_poisson2d

BUILDERS = {
    "heat1d": build_heat1d,
    "poisson2d": build_poisson2d,
    "eit": build_eit,
    "pat": build_pat,
}


def build(name, **options) -> ProblemBundle:
    try:
        builder = BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(BUILDERS)}") from None
    return builder(**options)


__all__ = ["BUILDERS", "ProblemBundle", "build", "build_eit", "build_heat1d", "build_pat",
           "build_poisson2d", "dalembert", "g_custom"]
