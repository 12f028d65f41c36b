import csv
import io
import json

import numpy as np
import pytest

from onoff_fluid import cli, rays
from onoff_fluid.model import derive_params

MODEL = ["--N", "100", "--lambda", "1", "--c", "60.5"]
DENSITY_MODEL = ["--N", "100", "--lambda", "0.25", "--c", "24.89"]


def run(capsys, *args):
    code = cli.run(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_csv_format(capsys):
    code, out, _ = run(capsys, "exact", *MODEL, "--x-grid", "0.5", "--k-list", "60,61")
    assert code == 0
    assert "\r" not in out and out.endswith("\n")
    header, first = out.splitlines()[:2]
    assert header == "x,k,F,F_inf,tail,marginal"
    F = first.split(",")[2]
    assert float(F) > 0 and float(repr(float(F))) == float(F)
    # 17 significant digits round-trip exactly
    mant = F.split("e")[0].replace(".", "").replace("-", "").lstrip("0")
    assert len(mant) <= 17


def test_csv_is_bit_stable(capsys):
    a = run(capsys, "curves", *MODEL, "--z-grid", "0.7,0.8")[1]
    b = run(capsys, "curves", *MODEL, "--z-grid", "0.7,0.8")[1]
    assert a == b


@pytest.mark.parametrize("cmd,extra", [
    ("check", []),
    ("exact", ["--x-grid", "0,1", "--k-list", "60"]),
    ("curves", ["--z-grid", "0.605,0.8"]),
    ("rays", ["--s-list=-1,0.5", "--t-grid", "0.5,1"]),
    ("eval", ["--y-grid", "0.3", "--z-grid", "0.75"]),
    ("layer", ["--x-grid", "1", "--k-list", "62,75"]),
    ("marginal", ["--x-grid", "0,0.15,10"]),
    ("compare", ["--probe", "0.3,0.75"]),
    ("density-profile", ["--fixed-z", "0.8"]),
])
def test_json_validates(capsys, cmd, extra):
    code, out, _ = run(capsys, cmd, *MODEL, "--format", "json", *extra)
    assert code == 0
    obj = json.loads(out)
    cli.validate_json(obj)
    assert obj["command"] == cmd and obj["params"]["N"] == 100
    assert all(set(r) == set(obj["columns"]) for r in obj["rows"])


def test_simulate_json(capsys):
    code, out, _ = run(capsys, "simulate", "--N", "10", "--lambda", "1", "--c", "6.5",
                       "--format", "json", "--cycles", "500", "--x-grid", "0.5")
    assert code == 0
    obj = json.loads(out)
    cli.validate_json(obj)
    assert obj["meta"]["seed"] == 20240601


def test_json_schema_rejects_bad_report():
    import jsonschema

    with pytest.raises(jsonschema.ValidationError):
        cli.validate_json({"params": {"N": 1, "lambda": 1.0, "c": 0.5}})


@pytest.mark.parametrize("args,code", [
    (["check", "--N", "100", "--lambda", "1", "--c", "60"], 2),
    (["check", "--N", "100", "--lambda", "1", "--c", "120.5"], 2),
    (["check", "--N", "100"], 2),
    (["curves", *MODEL, "--z-grid", "0.8,0.7"], 2),
    (["marginal", *MODEL, "--x-grid", "-1"], 2),
    (["density-profile", *MODEL], 2),
    (["marginal", *MODEL, "--x-grid", "300"], 3),
    (["check", *MODEL, "--spec", "/nonexistent/spec.json"], 4),
    (["check", *MODEL, "--out", "/nonexistent/dir/out.csv"], 4),
])
def test_exit_codes(capsys, args, code):
    got, _, err = run(capsys, *args)
    assert got == code
    assert err.startswith("error") or "usage" in err


def test_spec_overrides_flags(tmp_path, capsys):
    spec = {"command": "curves", "model": {"N": 100, "lambda": 1.0, "c": 60.5},
            "grids": {"z_grid": [0.7, 0.8]}, "output": {"path": str(tmp_path / "c.json"), "format": "json"}}
    f = tmp_path / "spec.json"
    f.write_text(json.dumps(spec))
    code, out, _ = run(capsys, "check", "--N", "10", "--lambda", "2", "--c", "3.5", "--spec", str(f))
    assert code == 0 and out == ""
    obj = json.loads((tmp_path / "c.json").read_text())
    assert obj["command"] == "curves" and obj["params"]["N"] == 100
    assert [r["z"] for r in obj["rows"]] == [0.7, 0.8]
    assert (tmp_path / "c.png").exists()


def test_spec_unknown_key(tmp_path, capsys):
    f = tmp_path / "spec.json"
    f.write_text(json.dumps({"model": {"N": 100, "lambda": 1, "c": 60.5}, "colour": 1}))
    assert run(capsys, "check", "--spec", str(f))[0] == 2
    f.write_text("{not json")
    assert run(capsys, "check", "--spec", str(f))[0] == 2


def test_curves_rows(capsys):
    p = derive_params(100, 1.0, 60.5)
    zs = [p.gamma, 0.65, p.z_star, 0.8, 0.9]
    code, out, _ = run(capsys, "curves", *MODEL, "--z-grid", ",".join(repr(z) for z in zs))
    assert code == 0
    r = rows(out)
    assert float(r[0]["Y0"]) == 0.0 and float(r[0]["Y1"]) == 0.0
    assert r[2]["Y1"] == ""
    Y0 = [float(x["Y0"]) for x in r]
    assert np.all(np.diff(Y0) > 0)
    for z, row in zip(zs, r):
        assert float(row["Y0"]) == pytest.approx(rays.curve_Y0(p, z), rel=1e-15, abs=1e-300)


def _argmax(capsys, *args):
    code, out, _ = run(capsys, "density-profile", *DENSITY_MODEL, "--format", "json", *args)
    assert code == 0
    obj = json.loads(out)
    return obj["meta"]["argmax"], obj


def test_density_argmax_below_gamma(capsys):
    arg, obj = _argmax(capsys, "--fixed-z", "0.1")
    ys = [r["y"] for r in obj["rows"]]
    assert arg == ys[0]
    ld = [r["log_density"] for r in obj["rows"]]
    assert np.all(np.diff(ld) < 0)


def test_density_argmax_at_Y0(capsys):
    arg, obj = _argmax(capsys, "--fixed-z", "0.8")
    ys = np.array([r["y"] for r in obj["rows"]])
    Y0 = rays.curve_Y0(derive_params(100, 0.25, 24.89), 0.8)
    assert abs(arg - Y0) <= ys[1] - ys[0]


def test_density_argmax_at_gamma(capsys):
    arg, obj = _argmax(capsys, "--fixed-y", "0.2")
    zs = np.array([r["z"] for r in obj["rows"]])
    assert abs(arg - 0.2489) <= zs[1] - zs[0]


def test_compare_sweep_meta(capsys):
    code, out, _ = run(capsys, "compare", "--N", "50", "--lambda", "1", "--c", "30.25", "--format", "json",
                       "--sweep-N", "50,100,200", "--probe", "0.3,0.75", "--probe", "0.01,0.75")
    assert code == 0
    obj = json.loads(out)
    meta = obj["meta"]
    assert set(meta["max_outer_rel_error_by_N"]) == {"50", "100", "200"}
    assert meta["outer_monotone_decrease"] is True
    sources = {r["source"] for r in obj["rows"]}
    assert "Outer" in sources and sources & {"BLx0", "Transition"}
    for r in obj["rows"]:
        if r["source"] != "Outer":
            assert r["outer"] is not None


def test_figure_written(tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert run(capsys, "marginal", *MODEL, "--x-grid", "0,0.1,0.2,1", "--out", str(out))[0] == 0
    assert out.with_suffix(".png").stat().st_size > 1000
    assert run(capsys, "check", *MODEL, "--out", str(tmp_path / "k.csv"))[0] == 0
    assert not (tmp_path / "k.png").exists()
    assert run(capsys, "marginal", *MODEL, "--out", str(tmp_path / "n.csv"), "--no-figure")[0] == 0
    assert not (tmp_path / "n.png").exists()
