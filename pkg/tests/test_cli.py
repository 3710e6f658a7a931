import json

import pytest

from xmkt import cli

SCENARIO = json.loads(cli.bundled_scenario_path().read_text())


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def lines(out):
    return [json.loads(line) for line in out.splitlines()]


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def mutate(**changes):
    doc = json.loads(json.dumps(SCENARIO))
    for path, value in changes.items():
        node = doc
        keys = path.split("__")
        for k in keys[:-1]:
            node = node[int(k)] if k.isdigit() else node[k]
        last = keys[-1]
        node[int(last) if last.isdigit() else last] = value
    return doc


class TestScenarioFiles:
    def test_bundled_loads(self):
        sc = cli.parse_scenario(cli.bundled_scenario_path())
        assert sc.n_agents == 2 and sc.seed == 42 and sc.n == 1_000_000
        assert sc.fixed_thetas == (300.0, 10.0)
        assert sc.agents[0].weight.pieces == ((1.0, -1.0),)

    def test_truncated_json(self, tmp_path, capsys):
        code, _, err = run(capsys, "run", "--scenario", write(tmp_path, '{"agents": [ {"role"'))
        assert code == cli.EXIT_PARSE
        assert "line 1 column" in err

    def test_missing_file(self, tmp_path, capsys):
        assert run(capsys, "run", "--scenario", str(tmp_path / "nope.json"))[0] == cli.EXIT_PARSE

    @pytest.mark.parametrize("changes, field", [
        ({"agents__0__distribution__a": 500}, "agents[0].distribution"),
        ({"agents__1__role": "bystander"}, "agents[1].role"),
        ({"agents__0__c": {"breakpoints": [0, 1], "pieces": [[0, -1]]}}, "agents[0].c"),
        ({"agents__1__theta": 20}, "agents[1].theta"),
        ({"agents": []}, "agents"),
        ({"version": 9}, "version"),
        ({"defaults__n": 1}, "defaults.n"),
        ({"agents__1__distribution": {"type": "table", "thetas": [0, 1], "pdf": [-1, 1]}},
         "agents[1].distribution"),
    ])
    def test_invariant_violations(self, tmp_path, capsys, changes, field):
        code, _, err = run(capsys, "run", "--scenario", write(tmp_path, mutate(**changes)))
        assert code == cli.EXIT_INVARIANT
        assert field in err


class TestRun:
    def test_myerson(self, capsys):
        code, out, _ = run(capsys, "run", "--mech", "myerson", "--theta", "300", "10")
        assert code == 0
        (rec,) = lines(out)
        assert rec["outcome"] == {"type": "deterministic", "t_end": 0.975}
        assert [a["payment"] for a in rec["agents"]] == [102.375, 0.21875]

    def test_vcg(self, capsys):
        (rec,) = lines(run(capsys, "run", "--mech", "vcg", "--theta", "300", "10")[1])
        assert rec["outcome"]["t_end"] == 0.966667
        assert [a["payment"] for a in rec["agents"]] == [9.66667, 0.166667]

    def test_ama(self, capsys):
        (rec,) = lines(run(capsys, "run", "--mech", "ama", "--mu", "1", "13", "--zeta", "31",
                           "--theta", "300", "10")[1])
        assert rec["outcome"] == {"type": "randomized", "beta1": 1.0, "beta2": 0.566667}
        assert [a["payment"] for a in rec["agents"]] == [104.667, 2.16667]

    def test_thetas_default_to_scenario(self, capsys):
        assert lines(run(capsys, "run")[1])[0]["thetas"] == [300.0, 10.0]

    def test_out_file(self, tmp_path, capsys):
        target = tmp_path / "r.jsonl"
        code, out, _ = run(capsys, "run", "--out", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["revenue"] == 102.594

    def test_precondition_failure(self, tmp_path, capsys):
        doc = mutate(agents__1__distribution={"type": "table", "thetas": [0, 1, 2, 3, 4],
                                              "pdf": [1, 1, 0.02, 1, 1]}, agents__1__theta=2)
        code, _, err = run(capsys, "run", "--mech", "myerson", "--scenario", write(tmp_path, doc))
        assert code == cli.EXIT_PRECONDITION and "MHR" in err

    @pytest.mark.parametrize("argv", [
        ["run", "--theta", "300"],
        ["run", "--mech", "ama", "--mu", "1"],
        ["run", "--mech", "ama", "--space", "det", "--zeta", "3"],
        ["run", "--mech", "broken-paybid"],
    ])
    def test_bad_flags(self, capsys, argv):
        assert run(capsys, *argv)[0] == cli.EXIT_PARSE

    def test_argparse_errors(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["run", "--mech", "nope"])
        assert exc.value.code == cli.EXIT_PARSE

    def test_theta_outside_support(self, capsys):
        assert run(capsys, "run", "--theta", "100", "10")[0] == cli.EXIT_INVARIANT


class TestRevenue:
    def test_json_line_and_determinism(self, capsys):
        first = run(capsys, "revenue", "--mech", "ama", "--mu", "1", "13", "--zeta", "31", "-n", "5000")[1]
        second = run(capsys, "revenue", "--mech", "ama", "--mu", "1", "13", "--zeta", "31", "-n", "5000",
                     "--workers", "2")[1]
        assert first == second
        (rec,) = lines(first)
        assert set(rec) == {"mechanism", "mu", "zeta", "space", "n", "mean", "stderr", "seed"}
        assert rec["n"] == 5000 and rec["seed"] == 42
        assert len(repr(rec["mean"]).replace(".", "").lstrip("0")) <= 6

    def test_seed_precedence(self, capsys, monkeypatch):
        monkeypatch.setenv("XMKT_SEED", "7")
        assert lines(run(capsys, "revenue", "-n", "100")[1])[0]["seed"] == 7
        assert lines(run(capsys, "revenue", "-n", "100", "--seed", "3")[1])[0]["seed"] == 3
        monkeypatch.setenv("XMKT_SEED", "x")
        assert run(capsys, "revenue", "-n", "100")[0] == cli.EXIT_PARSE

    def test_n_too_small(self, capsys):
        assert run(capsys, "revenue", "-n", "1")[0] == cli.EXIT_PARSE


class TestTuneVerify:
    def test_tune_zeta_zero(self, capsys):
        code, out, _ = run(capsys, "tune", "--zeta-max", "0", "-n", "50000", "--n-tune", "20000")
        assert code == 0
        (rec,) = lines(out)
        assert rec["zeta"] == 0 and rec["space"] == "det"
        assert rec["mean"] == pytest.approx(52.63, rel=0.05)

    def test_verify_single_mechanism(self, capsys):
        code, out, _ = run(capsys, "verify", "--mech", "vcg", "--profiles", "200", "--deviations", "5")
        recs = lines(out)
        assert code == 0
        assert {r["check"] for r in recs} == {"sp", "ir", "monotone", "summary"}

    def test_verify_suite(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "--profiles", "200", "--deviations", "5",
                           "--n-params", "3")
        assert code == 0
        assert lines(out)[-1] == {"check": "summary", "mechanisms": 5, "passed": True, "seed": 42}

    def test_verify_flags_broken_double(self, capsys):
        code, out, _ = run(capsys, "verify", "--mech", "broken-paybid", "--profiles", "100", "--deviations", "5")
        assert code == cli.EXIT_VERIFY
        sp = next(r for r in lines(out) if r["check"] == "sp")
        assert sp["violations"] > 0 and sp["examples"][0]["seed"] == 42

    def test_verify_non_mhr(self, tmp_path, capsys):
        doc = mutate(agents__1__distribution={"type": "table", "thetas": [0, 1, 2, 3, 4],
                                              "pdf": [1, 1, 0.02, 1, 1]}, agents__1__theta=2)
        code, out, _ = run(capsys, "verify", "--mech", "myerson", "--scenario", write(tmp_path, doc))
        assert code == cli.EXIT_VERIFY
        mhr = [r for r in lines(out) if r["check"] == "mhr"]
        assert [r["passed"] for r in mhr] == [True, False]
        assert mhr[1]["violation"] is not None


class TestReproduce:
    def test_table(self, capsys):
        code, out, _ = run(capsys, "reproduce-paper", "-n", "100000", "--n-tune", "20000")
        rows = out.splitlines()
        assert rows[0] == "seed=42 n=100000"
        names = [r.split("  ")[0] for r in rows[3:]]
        assert names == ["t_end", "payment agent 1", "payment agent 2", "Myerson revenue",
                         "AMA(1,13; zeta=31) revenue", "AMA / Myerson ratio", "tuned AMA (zeta=0) revenue",
                         "VCG revenue"]
        vcg = rows[-1]
        assert "7.667" in vcg and "7.6019" in vcg and "0.86%" in vcg
        # every row except the optimal-revenue one reproduces
        verdicts = {r.split("  ")[0]: ("PASS" in r) for r in rows[3:]}
        assert not verdicts.pop("Myerson revenue")
        assert all(verdicts.values())
        assert code == cli.EXIT_REPRODUCE
