import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from ngcs.errors import ConvergenceError
from ngcs.harness import (ExperimentConfig, ExperimentError, InputError, ResultTable, emit_plot,
                          load_graph, load_matrix, preset_config, rep_seed, save_matrix,
                          save_results)
from ngcs.harness import experiments
from ngcs.harness.cli import main
from ngcs.harness.experiments import RepData, run_experiment
from ngcs.harness.plot import Panel, Series, render_svg
from ngcs.netgen import make_two_study
from ngcs.rstats import fdr, hct_select, pvalues
from ngcs.selection import build_basis, screen

SVG_NS = "{http://www.w3.org/2000/svg}"


def small_config(kind="fdr", ids=("dcsbm-a", "dcsbm-b"), reps=3, **kw):
    base = preset_config(kind, repetitions=reps)
    scenarios = [s.to_dict() for s in base.scenarios if s.id in ids]
    for s in scenarios:
        s["mu_grid"] = s["mu_grid"][-2:]
    opts = dict(kind=kind, scenarios=scenarios, n=200, N=260, p=150, n_signal=15,
                repetitions=reps, n_new=40, methods=["NGCS-HCT-A", "Chi"] if kind == "fdr" else None)
    opts.update(kw)
    return ExperimentConfig(**opts)


# ---------------------------------------------------------------------------
# configuration and seeding
# ---------------------------------------------------------------------------

def test_config_json_round_trip(tmp_path):
    cfg = preset_config("cluster")
    cfg.save(tmp_path / "c.json")
    again = ExperimentConfig.load(tmp_path / "c.json")
    assert again.to_json() == cfg.to_json()


@pytest.mark.parametrize("change", [
    {"repetitions": 0}, {"n": 0}, {"n": 2000}, {"kind": "survey"}, {"pvalue": "bh"},
    {"basis": "oracle"}, {"khat_factors": [0]}, {"methods": ["Lasso"]}, {"scenarios": []},
])
def test_config_validation(change):
    d = small_config().to_dict()
    d.update(change)
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict(d)


def test_config_rejects_duplicate_ids_and_empty_grid():
    d = small_config().to_dict()
    d["scenarios"][1]["id"] = d["scenarios"][0]["id"]
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict(d)
    d = small_config().to_dict()
    d["scenarios"][0]["mu_grid"] = []
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict(d)


def test_config_unknown_field_is_input_error(tmp_path):
    d = small_config().to_dict()
    d["colour"] = "red"
    (tmp_path / "c.json").write_text(json.dumps(d))
    with pytest.raises(ValueError):
        ExperimentConfig.load(tmp_path / "c.json")


def test_rep_seeds_are_distinct_and_stable():
    a = rep_seed(1, "x", 0).generate_state(4)
    assert np.array_equal(a, rep_seed(1, "x", 0).generate_state(4))
    others = [rep_seed(1, "x", 1), rep_seed(1, "y", 0), rep_seed(2, "x", 0)]
    assert all(not np.array_equal(a, s.generate_state(4)) for s in others)


def test_thread_env_parsing(monkeypatch):
    monkeypatch.setenv("NGCS_THREADS", "3")
    assert experiments.default_threads() == 3
    monkeypatch.setenv("NGCS_THREADS", "many")
    with pytest.raises(ValueError):
        experiments.default_threads()


def test_rep_data_matches_two_study_generator():
    cfg = small_config()
    sc = cfg.scenarios[0]
    ss = rep_seed(cfg.seed, sc.id, 0)
    data = RepData(sc, cfg, ss, cfg.N)
    X, M, S = data.covariates(0.4)
    b = make_two_study(sc.network, sc.covariates(cfg.p, cfg.n_signal, 0.4), cfg.n, cfg.N,
                       rep_seed(cfg.seed, sc.id, 0))
    assert np.array_equal(data.A.to_dense(), b.A.to_dense())
    assert np.array_equal(X, b.Xtilde) and np.array_equal(S, b.S)


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------

def test_single_repetition_is_one_selection_call():
    cfg = small_config(reps=1, ids=("dcsbm-a",))
    table = run_experiment(cfg)
    sc = cfg.scenarios[0]
    mu = sc.mu_grid[-1]
    data = RepData(sc, cfg, rep_seed(cfg.seed, sc.id, 0), cfg.n)
    X, _, S = data.covariates(mu)
    t = screen(X, build_basis(data.A, 3, "adj"))
    sel = hct_select(pvalues(t, 3)).selected
    assert table.value(sc.id, mu, "NGCS-HCT-A", "fdr") == fdr(sel, S)
    assert table.select(sc.id, "NGCS-HCT-A", "fdr")[0].std == 0.0


def test_scenario_order_and_membership_do_not_change_aggregates():
    cfg = small_config(ids=("dcsbm-a", "dcsbm-b", "rdpg-a"))
    full = run_experiment(cfg)
    d = cfg.to_dict()
    d["scenarios"] = d["scenarios"][::-1]
    rev = run_experiment(ExperimentConfig.from_dict(d))
    d["scenarios"] = d["scenarios"][:1]
    one = run_experiment(ExperimentConfig.from_dict(d))
    key = lambda r: (r.scenario, r.mu, r.method, r.metric)
    assert sorted(full.to_records(), key=lambda r: tuple(r.values())[:4]) == \
        sorted(rev.to_records(), key=lambda r: tuple(r.values())[:4])
    for r in one.rows:
        assert r.mean == full.value(*key(r))


def test_aggregation_matches_two_pass_statistics():
    rng = np.random.default_rng(0)
    vals = list(rng.standard_normal(37) * 3 + 1)
    t = ResultTable()
    t.add("s", 0.1, "m", "x", vals)
    row = t.rows[0]
    mean = sum(vals) / len(vals)
    var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
    assert abs(row.mean - mean) <= 1e-12 and abs(row.std - math.sqrt(var)) <= 1e-12
    assert row.R == 37


def test_noiseless_regression_is_exact(monkeypatch):
    monkeypatch.setattr(experiments, "gen_noise", lambda fam, n, p, rng: np.zeros((n, p)))
    cfg = small_config("regress", ids=("rdpg-a",), reps=2, sigma_delta=0.0, khat_factors=[1])
    table = run_experiment(cfg)
    for r in table.rows:
        if r.metric in ("mse", "mse_new", "mse_z"):
            assert r.mean <= 1e-6


def test_single_cluster_config():
    d = small_config("cluster", ids=("dcsbm-a",), reps=2).to_dict()
    d["scenarios"][0]["network"]["K"] = 1
    d["scenarios"][0]["network"]["B"] = [[0.5]]
    table = run_experiment(ExperimentConfig.from_dict(d))
    errs = [r.mean for r in table.rows if r.metric == "error"]
    # every true label is the modal one
    assert errs and all(e == 0.0 for e in errs)


def test_too_many_failures_raise(monkeypatch):
    real = experiments._REP_FUNCS["fdr"]

    def flaky(cfg, sc, rep):
        if rep % 2 == 0:
            raise ConvergenceError("forced")
        return real(cfg, sc, rep)

    monkeypatch.setitem(experiments._REP_FUNCS, "fdr", flaky)
    with pytest.raises(ExperimentError):
        run_experiment(small_config(reps=4, ids=("dcsbm-a",)))


def test_few_failures_are_recorded(monkeypatch):
    real = experiments._REP_FUNCS["fdr"]

    def flaky(cfg, sc, rep):
        if rep == 0:
            raise ConvergenceError("forced")
        return real(cfg, sc, rep)

    monkeypatch.setitem(experiments._REP_FUNCS, "fdr", flaky)
    table = run_experiment(small_config(reps=6, ids=("dcsbm-a",)))
    assert all(r.R == 5 for r in table.rows)
    assert set(table.failures.values()) == {1}


def test_runner_kind_checks():
    with pytest.raises(ValueError):
        experiments.run_cluster_experiment(small_config())


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------

def test_matrix_round_trip_is_bit_exact(tmp_path):
    X = np.random.default_rng(1).standard_normal((50, 20)) * 10.0 ** np.arange(-10, 10)
    save_matrix(tmp_path / "x.csv", X)
    assert np.array_equal(load_matrix(tmp_path / "x.csv"), X)


def test_matrix_errors_name_lines(tmp_path):
    (tmp_path / "a.csv").write_text("1,2\n3,4\n5\n")
    with pytest.raises(InputError, match="line 3"):
        load_matrix(tmp_path / "a.csv")
    (tmp_path / "b.csv").write_text("1,2\n3,x\n")
    with pytest.raises(InputError, match="line 2"):
        load_matrix(tmp_path / "b.csv")


def test_edge_list_duplicate_names_line(tmp_path):
    (tmp_path / "e.csv").write_text("0,1\n1,2\n2,1\n")
    with pytest.raises(InputError, match="line 3"):
        load_graph(tmp_path / "e.csv")


def test_matrix_market_triangle(tmp_path):
    (tmp_path / "t.mtx").write_text(
        "%%MatrixMarket matrix coordinate pattern symmetric\n% triangle\n3 3 3\n2 1\n3 1\n3 2\n")
    G = load_graph(tmp_path / "t.mtx")
    assert G.degree.tolist() == [2, 2, 2]


def test_matrix_market_asymmetric_needs_directed(tmp_path):
    path = tmp_path / "d.mtx"
    path.write_text("%%MatrixMarket matrix coordinate pattern general\n3 3 2\n1 2\n2 3\n")
    with pytest.raises(InputError):
        load_graph(path)
    D = load_graph(path, directed=True)
    assert D.toarray()[0, 1] == 1 and D.toarray()[1, 0] == 0


def test_matrix_market_malformed_line(tmp_path):
    path = tmp_path / "m.mtx"
    path.write_text("%%MatrixMarket matrix coordinate pattern symmetric\n3 3 2\n2 1\n3 one\n")
    with pytest.raises(InputError, match="line 4"):
        load_graph(path)


def test_save_results_embeds_config(tmp_path):
    cfg = small_config(reps=2, ids=("dcsbm-a",))
    table = run_experiment(cfg)
    csv_path, json_path = save_results(table, cfg, tmp_path)
    doc = json.loads(json_path.read_text())
    assert doc["config"] == json.loads(cfg.to_json())
    again = ResultTable.read_csv(csv_path)
    assert [r.mean for r in again.rows] == [r.mean for r in table.rows]


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------

def parse_svg(text):
    return ET.fromstring(text)


def test_single_point_plot_has_one_circle():
    root = parse_svg(render_svg([Panel("s", [Series("m", [0.3], [0.1])], "mu", "fdr")]))
    assert len(root.findall(f".//{SVG_NS}circle")) == 1
    assert not root.findall(f".//{SVG_NS}polyline")


def test_two_methods_five_points():
    xs = [0.1, 0.2, 0.3, 0.4, 0.5]
    panel = Panel("s", [Series("a", xs, [0.5, 0.4, 0.3, 0.2, 0.1]),
                        Series("b", xs, [0.6, 0.5, 0.5, 0.3, 0.2])], "mu", "fdr")
    root = parse_svg(render_svg([panel]))
    lines = root.findall(f".//{SVG_NS}polyline")
    assert len(lines) == 2
    assert all(len(pl.get("points").split()) == 5 for pl in lines)


def test_plot_is_deterministic_and_rejects_unknown_kind(tmp_path):
    table = ResultTable()
    for mu, v in ((0.1, 0.4), (0.3, 0.2)):
        table.add("s", mu, "m", "fdr", [v, v + 0.01])
    a = emit_plot("fdr_vs_mu", table, tmp_path / "a.svg")
    b = emit_plot("fdr_vs_mu", table, tmp_path / "b.svg")
    assert a == b
    with pytest.raises(ValueError):
        emit_plot("pie", table, tmp_path / "c.svg")


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def write_two_study(tmp_path, seed=0):
    from ngcs.harness.io import save_graph_mtx
    cfg = small_config(ids=("dcsbm-a",))
    sc = cfg.scenarios[0]
    b = make_two_study(sc.network, sc.covariates(cfg.p, cfg.n_signal, 0.5), cfg.n, cfg.N, seed,
                       response=True, sigma_delta=0.1)
    save_graph_mtx(tmp_path / "g.mtx", b.A)
    save_matrix(tmp_path / "x1.csv", b.X1)
    save_matrix(tmp_path / "x2.csv", b.X2)
    save_matrix(tmp_path / "z.csv", b.z[:, None])
    return b


def test_cli_success_paths(tmp_path):
    write_two_study(tmp_path)
    g, x1, x2 = (str(tmp_path / f) for f in ("g.mtx", "x1.csv", "x2.csv"))
    assert main(["select", "--graph", g, "--covariates", x1, "--khat", "3",
                 "--out", str(tmp_path / "sel.csv"), "--hc-out", str(tmp_path / "hc.csv")]) == 0
    assert main(["plot", "--kind", "hc_curve", "--in", str(tmp_path / "hc.csv"),
                 "--out", str(tmp_path / "hc.svg")]) == 0
    assert main(["cluster", "--graph", g, "--covariates", x1, "--covariates2", x2, "--khat", "3",
                 "--K", "3", "--out", str(tmp_path / "lab.csv")]) == 0
    assert main(["regress", "--graph", g, "--covariates", x1, "--covariates2", x2, "--khat", "3",
                 "--response", str(tmp_path / "z.csv"), "--out", str(tmp_path / "pred.csv")]) == 0
    assert len(load_matrix(tmp_path / "lab.csv")) == 260


def test_cli_input_errors_exit_2(tmp_path):
    write_two_study(tmp_path)
    g, x1 = str(tmp_path / "g.mtx"), str(tmp_path / "x1.csv")
    assert main(["select", "--graph", str(tmp_path / "missing.mtx"), "--covariates", x1,
                 "--khat", "3"]) == 2
    assert main(["select", "--graph", g, "--covariates", x1, "--khat", "0"]) == 2
    assert main(["select", "--graph", g, "--covariates", str(tmp_path / "x2.csv"),
                 "--khat", "3"]) == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["simulate", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["select", "--graph", g, "--covariates", x1, "--khat", "3", "--pvalue", "bh"])
    assert exc.value.code == 2


def test_cli_numerical_failure_exit_3(tmp_path):
    b = write_two_study(tmp_path)
    save_matrix(tmp_path / "zero.csv", np.zeros_like(b.X1))
    assert main(["regress", "--graph", str(tmp_path / "g.mtx"), "--covariates",
                 str(tmp_path / "zero.csv"), "--covariates2", str(tmp_path / "x2.csv"),
                 "--khat", "3", "--response", str(tmp_path / "z.csv")]) == 3
