import json
import math

import pytest

from spsdense.cli import main
from spsdense.numeric import BudgetExceeded, PrecisionExhausted


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_find_block(capsys):
    code, out, _ = run(capsys, "find-block", "--c", "3/2", "--modulus", "3", "--block-len", "2", "--residue", "2", "--limit", "100")
    data = json.loads(out)
    assert code == 0 and data["m"] == 6 and data["verified"] is True
    assert data["config"]["c"] == "3/2" and data["config"]["search_limit"] == 100


def test_phi_sums_csv(capsys):
    code, out, _ = run(capsys, "phi-sums", "--c", "3/2", "--n-max", "3")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0] == "n,floor,phi,increment,S_num,S_den,frac"
    assert lines[-1] == "3,5,4,4/5,23,10,0.3"


def test_crt(capsys):
    code, out, _ = run(capsys, "crt", "--pairs", "22:23,27:29")
    data = json.loads(out)
    assert (data["r"], data["modulus"]) == (114, 667)


def test_not_found_is_success(capsys):
    code, out, _ = run(capsys, "find-block", "--c", "3/2", "--modulus", "97", "--block-len", "3", "--residue", "5", "--limit", "10")
    assert code == 0 and json.loads(out)["found"] is False


@pytest.mark.parametrize(
    "argv",
    [
        ["floor-pow", "--c", "3", "--m", "4"],
        ["floor-pow", "--c", "3/2", "--m", "0"],
        ["no-such-command"],
        ["crt", "--pairs", "1:6,3:4"],
        ["find-block", "--c", "3/2", "--modulus", "3", "--block-len", "2", "--residue", "7"],
        ["floor-pow", "--m", "4"],
    ],
)
def test_domain_and_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1 and out == ""
    assert json.loads(err)["error"] in {"usage", "domain"}


def test_budget_exit(capsys):
    code, _, err = run(capsys, "discrepancy", "--random", "3000", "--dim", "2")
    assert code == 2 and json.loads(err)["error"] == "budget"


def test_precision_cap_flag_and_env(capsys, monkeypatch):
    code, out, _ = run(capsys, "floor-pow", "--c", "3/2", "--m", "10", "--precision-cap", "64")
    assert code == 0 and json.loads(out)["config"]["precision_cap_bits"] == 64
    monkeypatch.setenv("SPSDENSE_PRECISION_CAP", "4096")
    code, out, _ = run(capsys, "floor-pow", "--c", "3/2", "--m", "10")
    assert json.loads(out)["config"]["precision_cap_bits"] == 4096
    assert issubclass(PrecisionExhausted, BudgetExceeded)


def test_deterministic(capsys):
    argv = ["exp-sum", "--c", "3/2", "--n", "500", "--modulus", "3", "--kmax", "2", "--threads", "2"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_big_ints_are_strings(capsys):
    code, out, _ = run(capsys, "floor-pow", "--c", "5/2", "--m", "10000000")
    assert json.loads(out)["floor_value"] == str(math.isqrt(10**35))


@pytest.mark.parametrize(
    "argv",
    [
        ["residues", "--c", "3/2", "--modulus", "3", "--to", "10"],
        ["fracgame", "--c", "3/2", "--m", "6", "--modulus", "3", "--block-len", "2", "--residue", "2"],
        ["fracgame", "--c", "3/2", "--scan", "--r-max", "4", "--h-max", "2", "--m-max", "300"],
        ["missing-blocks", "--c", "3/2", "--modulus", "3", "--block-len", "2", "--n-to", "10"],
        ["exp-sum", "--c", "3/2", "--n", "100", "--k", "1,0"],
        ["discrepancy", "--points", '[["1/2"], ["0"]]', "--kmax", "2"],
        ["etks", "--c", "3/2", "--modulus", "3", "--n", "16"],
        ["vdc-bound", "--n", "1000", "--q", "1", "--lambda", "1e-4", "--alpha", "2"],
        ["vdc-bound", "--c", "5/2", "--n", "1000", "--modulus", "3", "--k", "1,0,0"],
        ["phi", "--n", "1", "12", "97"],
        ["density-probe", "--c", "3/2", "--n-max", "100"],
        ["mertens", "--n", "30", "--alpha", "1"],
        ["build-window", "--H", "21"],
        ["verify-window", "--H", "5", "--allow-small", "--m", "10", "--c", "3/2"],
    ],
)
def test_every_subcommand(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    assert out
    for fmt in ("json", "csv"):
        code, out, err = run(capsys, *argv, "--format", fmt)
        assert code == 0, err
        if fmt == "json":
            assert "config" in json.loads(out)
