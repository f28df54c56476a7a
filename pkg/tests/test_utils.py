import pathlib

import pytest

import ercfuse


@pytest.mark.parametrize(
    "s,expected",
    [("foo_bar", "FooBar"), ("FooBar", "Foobar"), ("sum_product", "SumProduct")],
)
def test_CamelCase(s: str, expected: str) -> None:
    assert ercfuse.utils.CamelCase(s) == expected


@pytest.mark.parametrize(
    "s,expected",
    [("foo_bar", "foo_bar"), ("FooBar", "foo_bar"), ("SumProduct", "sum_product")],
)
def test_snake_case(s: str, expected: str) -> None:
    assert ercfuse.utils.snake_case(s) == expected


def test_expand_csv() -> None:
    assert ercfuse.utils.expand_csv(["0:0,2:2", "4:4", "2:2"]) == ["0:0", "2:2", "4:4"]


def test_expand_csv_file(tmp_path: pathlib.Path) -> None:
    path = tmp_path / "values.csv"
    path.write_text("ta,tv\nav\n")
    assert ercfuse.utils.expand_csv([str(path), "tav"]) == ["ta", "tv", "av", "tav"]


def test_seeded_rngs_reproducible() -> None:
    a = [g.random() for g in ercfuse.utils.seeded_rngs(3, 3)]
    b = [g.random() for g in ercfuse.utils.seeded_rngs(3, 3)]
    assert a == b
    assert len(set(a)) == 3


@pytest.mark.parametrize(
    "error,code",
    [
        (ercfuse.errors.ConfigError("bad"), 2),
        (ercfuse.errors.ValidationError("bad"), 2),
        (ercfuse.errors.ParseError("bad"), 2),
        (FileNotFoundError("missing"), 2),
        (ercfuse.errors.NumericalError("nan", diagnostics={"epoch": 1}), 3),
    ],
)
def test_handle_errors(error: Exception, code: int) -> None:
    @ercfuse.utils.handle_errors
    def fail() -> None:
        raise error

    with pytest.raises(SystemExit) as e:
        fail()
    assert e.value.code == code


def test_numerical_error_diagnostics() -> None:
    e = ercfuse.errors.NumericalError("diverged", diagnostics={"epoch": 2, "batch": 0})
    assert str(e) == "diverged (epoch=2, batch=0)"
    assert e.diagnostics["epoch"] == 2
