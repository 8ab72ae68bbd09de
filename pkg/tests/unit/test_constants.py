import os

import pytest

import surfloss.constants
from tests.helpers import constants_under_env


def test_defaults():
    with constants_under_env() as constants:
        assert constants.DEFAULT_SEED == 20230601
        assert constants.SUBSTRATE_PERMITTIVITY == 11.45


def test_seed_from_environment():
    with constants_under_env(SURFLOSS_SEED="42") as constants:
        assert constants.DEFAULT_SEED == 42


def test_permittivity_from_environment():
    with constants_under_env(SURFLOSS_SUBSTRATE_PERMITTIVITY="9.8") as constants:
        assert constants.SUBSTRATE_PERMITTIVITY == 9.8


def test_environment_restored():
    before = dict(os.environ)
    with constants_under_env(SURFLOSS_SEED="42"):
        assert os.environ["SURFLOSS_SEED"] == "42"
    assert dict(os.environ) == before


def test_debye():
    assert surfloss.constants.DEBYE == pytest.approx(3.33564e-30, rel=1e-5)
