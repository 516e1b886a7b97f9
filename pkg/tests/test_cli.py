import json
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certfp.cli.main import REPORT_DIR_ENV, main
from certfp.cli.problem import (
    ProblemError,
    build_operator,
    dump_problem,
    parse_problem,
)


def run(capsys, *argv):
    code = main([*map(str, argv), "--json"])
    return code, json.loads(capsys.readouterr().out)


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if isinstance(doc, dict) else doc)
    return p


@pytest.fixture
def ham_doc(problems_dir):
    return json.loads((problems_dir / "hammerstein_linear.json").read_text())


class TestParsing:
    def test_json_syntax_error_has_line_and_column(self, tmp_path, capsys):
        p = write(tmp_path, "bad.json", '{\n  "operator": {\n    "kind": "affine",,\n')
        code, rep = run(capsys, "certify", p, "--out", tmp_path)
        assert code == 1
        assert rep["error"]["line"] == 3 and rep["error"]["column"] == 22

    def test_unknown_field_rejected_with_location(self, ham_doc):
        ham_doc["operator"]["kernal"] = {"expr": "t"}
        with pytest.raises(ProblemError) as info:
            parse_problem(json.dumps(ham_doc))
        assert info.value.field == "operator.kernal"

    def test_bad_expression_located(self, ham_doc):
        ham_doc["operator"]["kernel"] = {"expr": "t + + * s"}
        with pytest.raises(ProblemError) as info:
            parse_problem(json.dumps(ham_doc))
        assert info.value.field.startswith("operator.kernel")
        assert "column" in info.value.message

    @pytest.mark.parametrize("patch", [
        {"kind": "green", "nonlinearity": {"rule": "linear", "lambda": 1}},
        {"kind": "affine", "slope": 0.5},
        {"kind": "hammerstein", "forcing": "t", "kernel": "dirichlet_green",
         "nonlinearity": {"rule": "linear", "lambda": 1}},
        {"kind": "volterra", "forcing": "t", "kernel": {"expr": "1", "table": [[1]]},
         "nonlinearity": {"rule": "linear", "lambda": 1}},
    ])
    def test_incomplete_operators_rejected(self, patch):
        with pytest.raises(ProblemError):
            parse_problem(json.dumps({"operator": patch}))

    def test_constant_expressions_stay_exact(self, ham_doc):
        T = build_operator(parse_problem(json.dumps(ham_doc)))
        assert T.nonlinearity.lip * T.kernel_bound() == 0.5

    def test_vanishing_divisor_warns(self, ham_doc):
        ham_doc["operator"]["forcing"] = "1 / (t - 0.5)"
        with pytest.warns(UserWarning, match="vanishes"):
            with pytest.raises(ProblemError):
                build_operator(parse_problem(json.dumps(ham_doc)))

    def test_table_size_checked(self, ham_doc):
        ham_doc["x0"] = [0.0, 1.0]
        with pytest.raises(ProblemError):
            parse_problem(json.dumps(ham_doc))


exprs = st.sampled_from(["t", "t + s", "exp(s - t)", "sin(t) * cos(s)", "1/3"])
numbers = st.one_of(st.floats(-5, 5, allow_nan=False), st.sampled_from(["1/3", "2/7", "pi/8"]))


@st.composite
def documents(draw):
    kind = draw(st.sampled_from(["hammerstein", "volterra", "green", "affine"]))
    if kind == "affine":
        op = {"kind": kind, "slope": draw(numbers), "offset": draw(numbers)}
    else:
        nl = draw(st.sampled_from([
            {"rule": "linear", "lambda": draw(numbers)},
            {"rule": "atan", "lambda": draw(numbers), "lip": 1},
            {"rule": "expr", "expr": "u / 2 + s", "lip": 0.5, "zero_bound": 1},
            {"rule": "affine", "lambda": 0.2, "offset": "s", "zero_bound": 1},
        ]))
        op = {"kind": kind, "nonlinearity": nl}
        if kind == "green":
            op["boundary"] = {"alpha": draw(numbers), "beta": draw(numbers)}
        else:
            op["forcing"] = draw(exprs)
            op["kernel"] = draw(st.one_of(
                exprs.map(lambda e: {"expr": e}),
                st.just({"separable": [["t", "1"], ["1", "s"]]})))
    doc = {"schema_version": 1, "interval": {"a": 0, "b": draw(st.sampled_from([1, 2.5]))},
           "grid_size": draw(st.integers(2, 500)), "operator": op,
           "seed": draw(st.integers(0, 2**64 - 1))}
    if draw(st.booleans()):
        doc["noise"] = draw(st.sampled_from([
            {"kind": "constant", "eta_bar": 0.01}, {"kind": "sequence", "values": [0.1, 0.0]},
            {"kind": "summable", "eta0": 1, "rho": "1/2"}, {"kind": "quadrature"}]))
    if draw(st.booleans()):
        doc["stop"] = {"rule": draw(st.sampled_from(["apriori", "gauge", "residual"])),
                       "eps": draw(st.floats(1e-12, 1)), "max_iter": draw(st.integers(1, 10))}
    return doc


@settings(max_examples=150, deadline=None)
@given(documents())
def test_round_trip_is_identity(doc):
    parsed = parse_problem(json.dumps(doc))
    again = parse_problem(dump_problem(parsed))
    assert again == parsed
    assert dump_problem(again) == dump_problem(parsed)


class TestCommands:
    def test_certify_reference(self, problems_dir, tmp_path, capsys):
        code, rep = run(capsys, "certify", problems_dir / "hammerstein_linear.json", "--out",
                        tmp_path)
        assert code == 0 and rep["constants"]["kappa"] == 0.5 and rep["constants"]["R"] == 2.0
        assert (tmp_path / "hammerstein_linear.certify.json").exists()

    def test_certify_lip_one(self, problems_dir, tmp_path, capsys):
        code, rep = run(capsys, "certify", problems_dir / "hammerstein_nonexpansive.json",
                        "--out", tmp_path)
        assert code == 2 and rep["error"]["message"].startswith("C4: kappa=1.5")

    def test_missing_file(self, tmp_path, capsys):
        code, _ = run(capsys, "certify", tmp_path / "absent.json", "--out", tmp_path)
        assert code == 1

    def test_usage_error_is_parse_failure(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["solve", "x.json", "--rule", "bogus"])
        assert info.value.code == 1

    def test_solve_residual(self, problems_dir, tmp_path, capsys):
        code, rep = run(capsys, "solve", problems_dir / "hammerstein_linear.json", "--eps",
                        "1e-6", "--rule", "residual", "--out", tmp_path)
        assert code == 0
        assert rep["trace"]["steps"] <= 21 and rep["trace"]["certified_error"] <= 1e-6
        header = (tmp_path / "hammerstein_linear.trace.csv").read_text().splitlines()[0]
        assert header == "n,r_n,phi_geo,phi_gauge,residual_bound,eta_n"

    def test_solve_huge_eps(self, problems_dir, tmp_path, capsys):
        code, rep = run(capsys, "solve", problems_dir / "hammerstein_linear.json", "--eps",
                        "1e9", "--out", tmp_path)
        assert code == 0 and rep["trace"]["steps"] == 0

    def test_solve_budget_exhausted(self, problems_dir, tmp_path, capsys):
        code, _ = run(capsys, "solve", problems_dir / "hammerstein_linear.json", "--eps",
                      "1e-12", "--max-iter", "1", "--out", tmp_path)
        assert code == 3

    def test_csv_byte_identical(self, problems_dir, tmp_path, capsys):
        outs = []
        for i in range(2):
            d = tmp_path / str(i)
            run(capsys, "inexact", problems_dir / "hammerstein_linear.json", "--eta-bar",
                "1e-4", "--steps", "15", "--seed", "7", "--out", d)
            outs.append((d / "hammerstein_linear.inexact.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_env_report_dir(self, problems_dir, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(REPORT_DIR_ENV, str(tmp_path / "env"))
        assert main(["certify", str(problems_dir / "affine_T.json")]) == 0
        capsys.readouterr()
        assert (tmp_path / "env" / "affine_T.certify.json").exists()

    def test_stability_identical(self, problems_dir, tmp_path, capsys):
        p = problems_dir / "hammerstein_linear.json"
        code, rep = run(capsys, "stability", p, p, "--out", tmp_path)
        assert code == 0 and rep["stability"]["observed_gap"] == 0.0

    def test_stability_shift(self, problems_dir, tmp_path, capsys):
        code, rep = run(capsys, "stability", problems_dir / "hammerstein_linear.json",
                        problems_dir / "hammerstein_shifted.json", "--out", tmp_path)
        s = rep["stability"]
        assert code == 0 and s["observed_gap"] <= 0.1 and s["bound_basis"] == "analytic"

    def test_stability_sharpness_pair(self, problems_dir, tmp_path, capsys):
        code, rep = run(capsys, "stability", problems_dir / "affine_T.json",
                        problems_dir / "affine_S.json", "--out", tmp_path)
        s = rep["stability"]
        assert code == 0
        assert s["observed_gap"] == pytest.approx(s["stab_bound"], abs=s["slack"] + 1e-15)

    def test_stability_incompatible_grids(self, problems_dir, tmp_path, capsys, ham_doc):
        ham_doc["grid_size"] = 101
        other = write(tmp_path, "coarse.json", ham_doc)
        code, _ = run(capsys, "stability", problems_dir / "hammerstein_linear.json", other,
                      "--out", tmp_path)
        assert code == 2

    def test_inexact_error_floor(self, problems_dir, tmp_path, capsys):
        code, rep = run(capsys, "inexact", problems_dir / "affine_T.json", "--eta-bar", "0.01",
                        "--steps", "200", "--out", tmp_path)
        blk = rep["inexact"]
        assert code == 0 and blk["error_floor"] == 0.02
        assert 0.002 <= blk["steady_error"] <= 0.02 and blk["within_floor"]

    def test_inexact_zero_noise_matches_solve(self, problems_dir, tmp_path, capsys):
        p = problems_dir / "hammerstein_linear.json"
        run(capsys, "inexact", p, "--eta-bar", "0", "--steps", "12", "--out", tmp_path / "a")
        run(capsys, "solve", p, "--rule", "residual", "--eps", "1e-6", "--out", tmp_path / "b")
        a = (tmp_path / "a" / "hammerstein_linear.inexact.csv").read_text().splitlines()
        b = (tmp_path / "b" / "hammerstein_linear.trace.csv").read_text().splitlines()
        assert a[:13] == b[:13]

    def test_inexact_sequence_flag(self, problems_dir, tmp_path, capsys):
        code, rep = run(capsys, "inexact", problems_dir / "affine_T.json", "--eta-seq",
                        "0.1,0.01", "--steps", "5", "--out", tmp_path)
        assert code == 0 and rep["inexact"]["eta_bar"] == 0.1

    def test_quadrature_budget_shrinks_with_refinement(self, ham_doc, tmp_path, capsys):
        etas = []
        for m in (101, 201):
            ham_doc["grid_size"] = m
            p = write(tmp_path, f"m{m}.json", ham_doc)
            code, rep = run(capsys, "inexact", p, "--quadrature", "--steps", "10", "--out",
                            tmp_path)
            assert code == 0
            etas.append(rep["inexact"]["eta_bar"])
        assert 3.0 < etas[0] / etas[1] < 5.0

    def test_module_entry_point(self, problems_dir, tmp_path):
        res = subprocess.run([sys.executable, "-m", "certfp", "certify",
                              str(problems_dir / "dirichlet_sinh.json"), "--out", str(tmp_path)],
                             capture_output=True, text=True)
        assert res.returncode == 0 and "kappa=0.125" in res.stdout
