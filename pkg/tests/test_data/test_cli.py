import json
import pathlib

from click.testing import CliRunner

import ercfuse
from ercfuse.__main__ import cli


def _json_lines(output: str) -> list[dict[str, object]]:
    return [json.loads(line) for line in output.splitlines() if line.startswith("{")]


def test_synth_command(tmp_path: pathlib.Path) -> None:
    out = tmp_path / "synth.jsonl"
    result = CliRunner().invoke(
        cli,
        [
            "synth",
            "--seed",
            "1",
            "--out",
            str(out),
            "--convs",
            "6",
            "--min-len",
            "3",
            "--max-len",
            "5",
            "--classes",
            "3",
            "--dims",
            "8,4,4",
        ],
    )
    assert result.exit_code == 0, result.output
    (summary,) = _json_lines(result.stdout)
    assert summary["convs"] == 6
    histogram = summary["class_histogram"]
    assert sum(histogram) == summary["utterances"]  # type: ignore[arg-type]
    meta, convs = ercfuse.data.load_jsonl(out)
    assert meta.dims == (8, 4, 4)
    assert len(convs) == 6


def test_synth_command_invalid_args(tmp_path: pathlib.Path) -> None:
    out = tmp_path / "synth.jsonl"
    result = CliRunner().invoke(
        cli, ["synth", "--out", str(out), "--min-len", "5", "--max-len", "2"]
    )
    assert result.exit_code == 2
    assert not out.exists()


def test_synth_command_bad_dims(tmp_path: pathlib.Path) -> None:
    result = CliRunner().invoke(
        cli, ["synth", "--out", str(tmp_path / "x.jsonl"), "--dims", "8,4"]
    )
    assert result.exit_code == 2
