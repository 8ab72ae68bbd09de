import contextlib
import importlib
import os
from types import ModuleType
from typing import Iterator

import surfloss.constants

SURFLOSS_ENV = ("SURFLOSS_SEED", "SURFLOSS_SUBSTRATE_PERMITTIVITY")


@contextlib.contextmanager
def temp_env(**env: str) -> Iterator[None]:
    """
    Environment with the surfloss variables cleared and ``env`` applied
    """
    old_env = dict(os.environ)
    for name in SURFLOSS_ENV:
        os.environ.pop(name, None)
    os.environ.update(env)
    try:
        yield
    finally:
        os.environ.clear()
        os.environ.update(old_env)


@contextlib.contextmanager
def constants_under_env(**env: str) -> Iterator[ModuleType]:
    """
    ``surfloss.constants`` as imported under ``env``, restored afterwards
    """
    try:
        with temp_env(**env):
            yield importlib.reload(surfloss.constants)
    finally:
        importlib.reload(surfloss.constants)
