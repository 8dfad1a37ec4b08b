import numpy as np
import pytest

from leafstab.cli import main
from leafstab.config import RunConfig, format_config, parse_config, parse_sections
from leafstab.errors import ParseError, ValidationError
from leafstab.simulator import ProbeMode
from leafstab.vehicle_model import REF_PARAMS, EquilibriumSpec

REF_LINE = "m1=3 m2=3 m3=1 I1=2 I2=2 I3=1 m=1 l=0.5 g=10"

FULL = f"""# reference vehicle
[params]
{REF_LINE}
[equilibrium]
Pi_e = 3
P_e = 3
lambda = 0.25
[simulate]
z0 = 0.1, 0.2, 1, 0, 0, 2, 0, 0, 1
[integrator]
rel_tol = 1e-9  t_final = 5
[probe]
mode = submanifold
samples = 4
seed = 7
[scan]
Pi_min=0.5 Pi_max=4 Pi_step=0.5
P_min=0.5 P_max=4 P_step=0.5
[tolerances]
boundary = 1e-8
definite = 1e-11
[output]
plot_data_path = plot.csv
"""


def test_reference_line_parses_to_ref():
    assert parse_config(REF_LINE).params == REF_PARAMS


def test_minimal_file_uses_defaults():
    cfg = parse_config("m1 = 3\nm2 = 3\nm3 = 1\nI1 = 2\nI2 = 2\nI3 = 1\n")
    assert cfg.params == REF_PARAMS
    assert cfg == RunConfig()
    assert parse_config(format_config(cfg)) == cfg


def test_full_file_roundtrip():
    cfg = parse_config(FULL)
    assert cfg.equilibrium == EquilibriumSpec(3.0, 3.0)
    assert cfg.lam == 0.25
    assert cfg.z0 == (0.1, 0.2, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 1.0)
    assert cfg.integrator.rel_tol == 1e-9 and cfg.integrator.t_final == 5.0
    assert cfg.probe.mode is ProbeMode.SUBMANIFOLD and cfg.probe.seed == 7
    assert cfg.boundary_tol == 1e-8 and cfg.tolerances.definite == 1e-11
    assert cfg.scan.params == REF_PARAMS
    assert cfg.output.plot_data_path == "plot.csv"
    assert parse_config(format_config(cfg)) == cfg


def test_negative_arm_rejected():
    with pytest.raises(ValidationError):
        parse_config("l = -0.1")


@pytest.mark.parametrize("text,lineno", [
    ("m1 = 3\n[nope]\n", 2),
    ("\n\nfoo = 1\n", 3),
    ("m1 = 3 m1 = 4\n", 1),
    ("[probe]\nsamples = many\n", 2),
    ("m1\n", 1),
    ("[params\n", 1),
])
def test_parse_errors_carry_line_numbers(text, lineno):
    with pytest.raises(ParseError) as info:
        parse_sections(text)
    assert info.value.lineno == lineno


@pytest.mark.parametrize("text", [
    "[equilibrium]\nPi_e = 1\n",
    "[equilibrium]\nPi_e = 0\nP_e = 1\n",
    "[simulate]\nz0 = 1, 2, 3\n",
    "[scan]\nPi_min = 0\n",
    "[tolerances]\ndefinite = 0\n",
    "[integrator]\ndt_min = 2\n",
    "[probe]\nepsilon = -1\n",
])
def test_validation_errors(text):
    with pytest.raises(ValidationError):
        parse_config(text)


# -- command line ---------------------------------------------------------------

@pytest.fixture
def cfg_file(tmp_path):
    def write(text, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_prints_label(capsys, cfg_file):
    code, out, _ = run(capsys, "classify", "--config", cfg_file(REF_LINE + "\n[equilibrium]\nPi_e=3 P_e=3\n"))
    assert code == 0
    assert "label: StableOnSubmanifold" in out
    assert "positive_definite: true" in out


def test_scan_outputs_are_reproducible(capsys, cfg_file, tmp_path):
    path = cfg_file(FULL)
    outputs = []
    for name in ("a", "b"):
        code, out, _ = run(capsys, "scan", "--config", path, "--out", str(tmp_path / name))
        assert code == 0 and "rows: 64" in out
        outputs.append([(tmp_path / name / f).read_bytes() for f in ("scan.csv", "plot.csv", "scan_regions.svg")])
    assert outputs[0] == outputs[1]


def test_simulate_writes_trajectory(capsys, cfg_file, tmp_path):
    code, out, _ = run(capsys, "simulate", "--config", cfg_file(FULL), "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("t,Pi1")
    assert np.allclose([float(v) for v in lines[1].split(",")[1:]], [0.1, 0.2, 1, 0, 0, 2, 0, 0, 1])
    assert "drift H" in out


def test_probe_region_iii_escapes(capsys, cfg_file, tmp_path):
    text = REF_LINE + "\n[equilibrium]\nPi_e=1 P_e=3\n[probe]\nmode=submanifold samples=4\n"
    code, out, _ = run(capsys, "probe", "--config", cfg_file(text), "--out", str(tmp_path))
    assert code == 0
    assert "escaped=true" in out
    assert (tmp_path / "probe_samples.csv").exists()


def test_verify_exit_zero(capsys, cfg_file, tmp_path):
    code, out, _ = run(capsys, "verify", "--config", cfg_file(REF_LINE), "--out", str(tmp_path))
    assert code == 0
    assert "16/16 checks passed" in out


def test_usage_errors(capsys, cfg_file):
    with pytest.raises(SystemExit) as info:
        main(["launch", "--config", cfg_file(REF_LINE)])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["classify"])
    assert info.value.code == 1
    code, _, err = run(capsys, "classify", "--config", cfg_file(REF_LINE))
    assert code == 1 and "equilibrium" in err


def test_config_errors(capsys, cfg_file, tmp_path):
    assert run(capsys, "classify", "--config", str(tmp_path / "missing.cfg"))[0] == 2
    code, _, err = run(capsys, "classify", "--config", cfg_file("l = -0.1"))
    assert code == 2 and "config error" in err
    assert run(capsys, "classify", "--config", cfg_file("bogus = 1"))[0] == 2
    asym = "m2 = 4\n[equilibrium]\nPi_e=1 P_e=1\n"
    assert run(capsys, "classify", "--config", cfg_file(asym))[0] == 2


def test_numerical_failure_exit_code(capsys, cfg_file):
    text = "[simulate]\nz0 = 1,0,0, 0,1,0, 0,0,1\n[integrator]\nmax_steps = 3\n"
    code, _, err = run(capsys, "simulate", "--config", cfg_file(text))
    assert code == 3 and "MaxStepsExceeded" in err
