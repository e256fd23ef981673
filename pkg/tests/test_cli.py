import math

import numpy as np
import pytest

from fracflow.cli import load_system, load_system_text, main
from fracflow.polyexpr import coeff_distance, parse_expression
from fracflow.systems import reconstruct_potential, catalog

LORENZ_SYS = """\
# classical parameters
vars: x y z
params: sigma=10 b=2.6666666666666665 r=24.736842105263158
alpha: 2
F[x] = sigma*(y-x)
F[y] = (r-z)*x - y
F[z] = x*y - b*z
"""

SPHERE_SYS = """\
vars: x y z
alpha: 1
F[x] = -2*x
F[y] = -2*y
F[z] = -2*z
"""

DECAY_SYS = """\
vars: x
alpha: 1
F[x] = -2*x
"""

ROTATION_SYS = """\
vars: x y
alpha: 1
F[x] = y
F[y] = -x
"""

OSC_HALF_SYS = """\
vars: q p
alpha: 0.5
phase: qp
F[q] = 1.5045055561273499*p^1.5 + 0.5641895835477563*q^2*p^-0.5
F[p] = -1.5045055561273499*q^1.5 - 0.5641895835477563*p^2*q^-0.5
"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_load_system_text_full():
    spec = load_system_text(LORENZ_SYS, origin="lorenz.sys")
    assert spec.var_names == ("x", "y", "z")
    assert spec.alpha.alpha == 2.0
    assert spec.params["sigma"] == 10.0
    ref = catalog("lorenz", params={"b": 2.6666666666666665, "r": 24.736842105263158})
    for a, b in zip(spec.rhs, ref.rhs):
        assert coeff_distance(a, b) <= 1e-12


def test_load_system_text_errors():
    with pytest.raises(Exception) as err:
        load_system_text("vars: x x\nalpha: 1\nF[x] = x", origin="f")
    assert "f:1" in str(err.value)
    with pytest.raises(Exception, match="missing 'alpha:'"):
        load_system_text("vars: x\nF[x] = x", origin="f")
    with pytest.raises(Exception, match="missing right-hand side for y"):
        load_system_text("vars: x y\nalpha: 1\nF[x] = x", origin="f")
    with pytest.raises(Exception, match="f:4: duplicate"):
        load_system_text("vars: x\nalpha: 1\nF[x] = x\nF[x] = 2*x", origin="f")
    with pytest.raises(Exception, match="f:2: unrecognized"):
        load_system_text("vars: x\nwat\nalpha: 1\nF[x] = x", origin="f")
    with pytest.raises(Exception, match="column"):
        load_system_text("vars: x\nalpha: 1\nF[x] = x + * 2", origin="f")


def test_load_system_builtin_and_missing(tmp_path):
    spec = load_system("builtin:rossler")
    assert spec.params == {"c": 1.0}
    with pytest.raises(Exception, match="cannot read"):
        load_system(str(tmp_path / "absent.sys"))


def test_classify_builtin_lorenz(capsys):
    assert main(["classify", "builtin:lorenz"]) == 0
    out = capsys.readouterr().out
    assert "classification: fractional gradient (alpha=2)" in out
    assert "max residual coefficient: 0" in out


def test_classify_alpha_override(capsys):
    assert main(["classify", "builtin:lorenz", "--alpha", "1"]) == 1
    out = capsys.readouterr().out
    assert "classification: not gradient at alpha=1" in out
    assert "residual (x,y):" in out


def test_classify_hamiltonian(capsys):
    assert main(["classify", "builtin:fracosc"]) == 0
    out = capsys.readouterr().out
    assert "classification: Hamiltonian" in out


def test_classify_system_file(tmp_path, capsys):
    path = _write(tmp_path, "lorenz.sys", LORENZ_SYS)
    assert main(["classify", path]) == 0
    assert "fractional gradient (alpha=2)" in capsys.readouterr().out


def test_potential_round_trip(capsys):
    assert main(["potential", "builtin:lorenz"]) == 0
    text = capsys.readouterr().out.strip()
    parsed = parse_expression(text, ("x", "y", "z"), {})
    direct = reconstruct_potential(catalog("lorenz"))
    assert coeff_distance(parsed, direct) == 0.0


def test_potential_not_closed(tmp_path, capsys):
    path = _write(tmp_path, "rot.sys", ROTATION_SYS)
    assert main(["potential", path]) == 1
    out = capsys.readouterr().out
    assert "not" in out
    assert "residual (x,y):" in out


def test_stationary_csv(tmp_path, capsys):
    out = tmp_path / "surf.csv"
    rc = main(
        [
            "stationary",
            "builtin:fracosc",
            "--constants",
            "00=1",
            "--box=-2:2",
            "--res",
            "5",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "q,p,phi"
    assert len(lines) == 1 + 25
    first = lines[1].split(",")
    assert [float(first[0]), float(first[1])] == [-2.0, -2.0]
    # H - 1 at the corner: q^2 + p^2 - 1 = 7
    assert float(first[2]) == 7.0


def test_stationary_csv_masked_rows_omitted(tmp_path):
    out = tmp_path / "surf.csv"
    path = _write(tmp_path, "osc.sys", OSC_HALF_SYS)
    rc = main(["stationary", path, "--constants", "0=1", "--box=-2:2", "--res", "5", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    # the q = 0 and p = 0 lines of the 5x5 grid fall outside the domain
    assert len(lines) == 1 + 16
    for line in lines[1:]:
        q, p, _ = (float(v) for v in line.split(","))
        assert q != 0.0 and p != 0.0


def test_stationary_obj(tmp_path, capsys):
    out = tmp_path / "sphere.obj"
    path = _write(tmp_path, "sphere.sys", SPHERE_SYS)
    rc = main(
        ["stationary", path, "--constants", "000=1", "--box=-2:2", "--res", "21", "--out", str(out)]
    )
    assert rc == 0
    msg = capsys.readouterr().out
    lines = out.read_text().splitlines()
    nv = sum(1 for l in lines if l.startswith("v "))
    nf = sum(1 for l in lines if l.startswith("f "))
    assert nv > 0 and nf > 0
    assert f"({nv} vertices, {nf} faces)" in msg
    for l in lines:
        kind, *rest = l.split()
        assert kind in ("v", "f")
        if kind == "f":
            idx = [int(r) for r in rest]
            assert all(1 <= i <= nv for i in idx)
        else:
            r = math.hypot(*(float(c) for c in rest))
            assert abs(r - 1.0) < 0.02


def test_stationary_needs_box_without_default(capsys):
    rc = main(["stationary", "builtin:example2", "--out", "x.csv"])
    assert rc == 2
    assert "no default box" in capsys.readouterr().err


def test_stationary_bad_suffix(tmp_path, capsys):
    rc = main(["stationary", "builtin:fracosc", "--box=-1:1", "--out", str(tmp_path / "o.ply")])
    assert rc == 2
    assert "use .csv or .obj" in capsys.readouterr().err


def test_regions_sphere(tmp_path, capsys):
    path = _write(tmp_path, "sphere.sys", SPHERE_SYS)
    rc = main(["regions", path, "--constants", "000=1", "--box=-2:2", "--res", "41"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "components: 2" in out
    assert "positive-components: 1" in out
    assert "negative-components: 1" in out
    assert "box: -2:2,-2:2,-2:2" in out
    assert "resolution: 41,41,41" in out


def test_regions_requires_three_vars(capsys):
    rc = main(["regions", "builtin:fracosc", "--box=-1:1"])
    assert rc == 2
    assert "3-variable" in capsys.readouterr().err


def test_regions_not_closed_goes_to_stderr(tmp_path, capsys):
    src = "vars: x y z\nalpha: 1\nF[x] = y\nF[y] = -x\nF[z] = 0\n"
    path = _write(tmp_path, "rot3.sys", src)
    rc = main(["regions", path, "--box=-1:1"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "residual (x,y)" in err


def test_integrate_decay(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    path = _write(tmp_path, "decay.sys", DECAY_SYS)
    rc = main(["integrate", path, "--x0", "1", "--t-end", "1", "--h", "0.001", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x"
    assert len(lines) == 1 + 1001
    t, x = (float(v) for v in lines[-1].split(","))
    assert t == 1.0
    assert abs(x - math.exp(-2.0)) < 1e-10


def test_integrate_watch_column(tmp_path):
    out = tmp_path / "osc.csv"
    rc = main(
        [
            "integrate",
            "builtin:fracosc",
            "--x0",
            "1,0",
            "--t-end",
            "5",
            "--h",
            "0.001",
            "--watch",
            "H",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,q,p,H"
    hvals = np.array([float(l.split(",")[3]) for l in lines[1:]])
    assert np.abs(hvals - 1.0).max() < 1e-9


def test_integrate_watch_kind_mismatch(tmp_path, capsys):
    path = _write(tmp_path, "decay.sys", DECAY_SYS)
    rc = main(
        ["integrate", path, "--x0", "1", "--t-end", "1", "--h", "0.1", "--watch", "H", "--out", "x.csv"]
    )
    assert rc == 2
    assert "reconstructs V" in capsys.readouterr().err


def test_integrate_domain_exit_comment(tmp_path):
    out = tmp_path / "sqrt.csv"
    src = "vars: x\nalpha: 1\nF[x] = -1.1283791670955126*x^0.5\n"
    path = _write(tmp_path, "sqrt.sys", src)
    rc = main(["integrate", path, "--x0", "1", "--t-end", "4", "--h", "0.001", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[-1].startswith("# domain-exit at t=")
    t_exit = float(lines[-1].split("=")[1])
    assert abs(t_exit - math.sqrt(math.pi)) < 0.02


def test_integrate_bad_x0(tmp_path, capsys):
    path = _write(tmp_path, "decay.sys", DECAY_SYS)
    rc = main(["integrate", path, "--x0", "one", "--t-end", "1", "--h", "0.1", "--out", "x.csv"])
    assert rc == 2
    assert "bad --x0" in capsys.readouterr().err


def test_outputs_are_deterministic(tmp_path, capsys):
    path = _write(tmp_path, "sphere.sys", SPHERE_SYS)
    a, b = tmp_path / "a.obj", tmp_path / "b.obj"
    for out in (a, b):
        args = ["stationary", path, "--constants", "000=1", "--box=-2:2", "--res", "15"]
        assert main(args + ["--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    c, d = tmp_path / "c.csv", tmp_path / "d.csv"
    for out in (c, d):
        assert main(["integrate", path, "--x0", "1,1,1", "--t-end", "1", "--h", "0.01", "--out", str(out)]) == 0
    assert c.read_bytes() == d.read_bytes()


def test_file_errors_exit_two(tmp_path, capsys):
    bad = _write(tmp_path, "bad.sys", "vars: x\nalpha: 1\nnonsense here\nF[x] = x\n")
    rc = main(["classify", bad])
    assert rc == 2
    err = capsys.readouterr().err
    assert "bad.sys:3" in err
    rc = main(["classify", "builtin:nosuch"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
