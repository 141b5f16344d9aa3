import csv
import json

import numpy as np
import pytest

from fracfreq import io
from fracfreq.cli import main
from fracfreq.model import FractionalTF, eval_tf, freqresp

PLANT = "1/(0.8 s^2.2 + 0.5 s^0.9 + 1)"
CTRL = '{"K": 50, "Ti": 0, "Td": 5.326, "lambda": 1, "delta": 1.286}'


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_stability_stable(capsys):
    code, out, _ = run(capsys, "stability", "--plant", PLANT, "--controller", CTRL)
    d = json.loads(out)
    assert code == 0 and d["verdict"] == "stable" and d["winding_number"] == 0
    assert d["config"]["points_per_decade"] == 64


def test_stability_indeterminate_exit_code(capsys):
    code, out, _ = run(capsys, "stability", "--plant", PLANT, "--omega-max", "2")
    assert code == 2 and json.loads(out)["verdict"] == "indeterminate"


def test_bad_input_exit_code(capsys):
    code, out, err = run(capsys, "margins", "--plant", "1/(s +")
    assert code == 1 and out == ""
    assert err.startswith("fracfreq: error:") and err.count("\n") == 1


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "fit", "--data", str(tmp_path / "none.csv"),
                       "--num-exponents", "0", "--den-exponents", "0,1")
    assert code == 1 and "error" in err


def test_usage_error_is_status_one(capsys):
    with pytest.raises(SystemExit) as info:
        main(["bode"])
    assert info.value.code == 1


def test_compose_identity(capsys):
    code, out, _ = run(capsys, "compose", "--plant", PLANT, "--controller", '{"K": 1}')
    d = json.loads(out)
    d.pop("config")
    assert code == 0 and FractionalTF.from_dict(d) == io.load_tf(PLANT)


def test_compose_factored(capsys):
    code, out, _ = run(capsys, "compose", "--plant", "1",
                       "--controller", '{"C": 1, "xi": 0.5, "omega_n": 1}')
    d = json.loads(out)
    assert code == 0
    assert d["num"] == [{"c": 1.0, "e": 0.0}, {"c": 1.0, "e": 1.0}, {"c": 1.0, "e": 2.0}]


def test_margins_json(capsys):
    code, out, _ = run(capsys, "margins", "--plant", PLANT)
    d = json.loads(out)
    assert code == 0 and d["gain_margin_db"] > 0 and d["multiple_crossings"]
    assert d["config"]["omega_min"] == 1e-3


def test_margins_absent_is_null(capsys):
    code, out, _ = run(capsys, "margins", "--plant", PLANT, "--controller", CTRL)
    d = json.loads(out)
    assert d["gain_margin_db"] is None and d["phase_margin_deg"] > 0


def test_bode_csv(capsys, tmp_path):
    path = tmp_path / "bode.csv"
    code, _, _ = run(capsys, "bode", "--plant", PLANT, "-o", str(path),
                     "--omega-min", "0.1", "--omega-max", "10", "--points-per-decade", "8")
    rows = list(csv.reader(path.open()))
    assert code == 0 and rows[0] == ["omega", "re", "im", "mag_db", "phase_deg"]
    assert len(rows) == 18
    w, re, im = (float(x) for x in rows[9][:3])
    # 17 significant digits round-trip the binary value exactly
    assert w == 1.0 and complex(re, im) == eval_tf(io.load_tf(PLANT), 1.0)


def test_bode_json_and_svg(capsys, tmp_path):
    svg = tmp_path / "b.svg"
    code, out, _ = run(capsys, "bode", "--plant", PLANT, "--format", "json", "--svg", str(svg))
    d = json.loads(out)
    assert code == 0 and len(d["omega"]) == len(d["phase_deg"]) == 385
    assert svg.read_text().lstrip().startswith("<?xml")


def test_nyquist_mirror(capsys, tmp_path):
    svg = tmp_path / "n.svg"
    code, out, _ = run(capsys, "nyquist", "--plant", PLANT, "--mirror", "--svg", str(svg),
                       "--points-per-decade", "8", "--zoom", "3")
    rows = list(csv.DictReader(out.splitlines()))
    n = len(rows) // 2
    assert code == 0 and len(rows) == 2 * n and svg.exists()
    assert float(rows[n]["omega"]) == -float(rows[n - 1]["omega"])
    assert float(rows[n]["im"]) == -float(rows[n - 1]["im"])


def test_points_per_decade_env(capsys, monkeypatch):
    monkeypatch.setenv("FRACFREQ_POINTS_PER_DECADE", "8")
    code, out, _ = run(capsys, "bode", "--plant", PLANT, "--format", "json")
    assert code == 0 and len(json.loads(out)["omega"]) == 49
    code, out, _ = run(capsys, "bode", "--plant", PLANT, "--format", "json",
                       "--points-per-decade", "16")
    assert len(json.loads(out)["omega"]) == 97


def test_fit_free_exponents_and_model_out(capsys, tmp_path):
    w = np.logspace(-2, 2, 50)
    g = io.load_tf(PLANT)
    v = freqresp(g, w)
    data = tmp_path / "m.csv"
    data.write_text("omega,re,im\n" + "".join("%r,%r,%r\n" % (float(a), float(b.real), float(b.imag))
                                              for a, b in zip(w, v)))
    model = tmp_path / "fit.json"
    code, out, _ = run(capsys, "fit", "--data", str(data), "--num-exponents", "0",
                       "--den-exponents", "0,1,2", "--free-exponents",
                       "--model-out", str(model))
    d = json.loads(out)
    assert code == 0 and d["q_value"] < 1e-12 and d["converged"]
    assert d["config"]["exponent_bounds"] == [0.0, 5.0]
    fitted = io.tf_from_json(model.read_text())
    assert sorted(fitted.den.exponents)[1] == pytest.approx(0.9, abs=1e-3)


def test_fit_weighting_options(capsys, tmp_path):
    data = tmp_path / "m.csv"
    data.write_text("omega,re,im,weight\n1,0.5,0,1\n2,0.2,0,0\n3,0.1,0,1\n")
    for weighting in ("file", "unit", "relative"):
        code, out, _ = run(capsys, "fit", "--data", str(data), "--num-exponents", "0",
                           "--den-exponents", "0", "--weighting", weighting)
        assert code == 0 and json.loads(out)["config"]["weighting"] == weighting
