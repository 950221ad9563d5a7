"""Integration tests for the command line - error cases."""
import pytest

from src.app import EXIT_CONFIG_ERROR, EXIT_RUNTIME_ERROR, main


@pytest.mark.integration
@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--algo", "bogus"],
        ["run", "--algo", "rpo-aas", "--delta", "1.5"],
        ["run", "--algo", "rpo-aas", "--prototypes", "7", "--gap", "0.2"],
        ["run", "--algo", "ucbvi", "--algo", "ucbvi"],
        ["run", "--algo", "rpo-aas", "--mode", "banded"],
        ["run", "--algo", "oracle", "--colour", "blue"],
        ["run", "--algo", "oracle", "--episodes"],
        ["launch", "--algo", "oracle"],
    ],
)
def test_invalid_configuration_exits_with_one(argv, out_dir):
    """Test configuration errors map to exit code 1 and write nothing."""
    code = main(argv + ["--out", str(out_dir)])

    assert code == EXIT_CONFIG_ERROR
    assert not out_dir.exists()


@pytest.mark.integration
def test_config_file_errors_name_the_key(tmp_path, out_dir, caplog):
    """Test an unknown key in the file is reported by name."""
    path = tmp_path / "sweep.cfg"
    path.write_text(
        f"algorithms = oracle\nout = {out_dir}\ncolour = blue\n",
        encoding="utf-8",
    )

    code = main(["run", "--config", str(path)])

    assert code == EXIT_CONFIG_ERROR
    assert "colour" in caplog.text


@pytest.mark.integration
def test_unwritable_output_exits_with_two(tmp_path):
    """Test a file in place of the output directory is a runtime error."""
    blocker = tmp_path / "blocker"
    blocker.write_text("x", encoding="utf-8")

    code = main(
        [
            "run",
            "--algo",
            "oracle",
            "--episodes",
            "2",
            "--sims",
            "1",
            "--out",
            str(blocker / "sweep"),
        ]
    )

    assert code == EXIT_RUNTIME_ERROR


@pytest.mark.integration
def test_summarize_without_sweep_exits_with_two(out_dir):
    """Test summarizing a missing directory is a runtime error."""
    assert main(["summarize", "--in", str(out_dir)]) == EXIT_RUNTIME_ERROR


@pytest.mark.integration
def test_summarize_without_input_flag_exits_with_one(caplog):
    """Test a missing required flag is a configuration error."""
    assert main(["summarize"]) == EXIT_CONFIG_ERROR
    assert "--in" in caplog.text
