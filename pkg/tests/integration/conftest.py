from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import pytest

from surfloss.cli import main
from tests.integration.constants import TESTING_SEED


@dataclass(frozen=True)
class CliResult:
    exit_code: int

    stdout: str

    stderr: str

    out: Path


CliRunner = Callable[..., CliResult]


@pytest.fixture
def run_cli(tmp_path: Path, capsys) -> CliRunner:
    """
    Run the command line with ``--out`` and ``--seed`` set, capturing its
    output. Global options go in ``options``.
    """

    def _run(*args: str, options: Sequence[str] = (), out: Path = tmp_path) -> CliResult:
        code = main(["--out", str(out), "--seed", str(TESTING_SEED), *options, *args])
        captured = capsys.readouterr()
        return CliResult(code, captured.out, captured.err, out)

    return _run
