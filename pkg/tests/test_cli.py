import json

from lpsnet.cli import main


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def test_generate_lps_writes_edges_and_manifest(tmp_path):
    assert run(tmp_path, "generate", "lps", "-p", "11", "-q", "7") == 0
    lines = (tmp_path / "lps-11-7.edges").read_text().splitlines()
    assert len(lines) == 168 * 12 // 2
    info = json.loads((tmp_path / "lps-11-7.info.json").read_text())
    assert info["routers"] == 168 and info["radix"] == 12
    man = json.loads((tmp_path / "manifest-generate.json").read_text())
    assert man["version"] and man["config"]["p"] == 11


def test_generate_dragonfly(tmp_path):
    assert run(tmp_path, "generate", "df", "-a", "3") == 0
    edges = (tmp_path / "df-3.edges").read_text().split()
    assert len(set(edges)) == 12


def test_generate_invalid_exits_2(tmp_path, capsys):
    assert run(tmp_path, "generate", "lps", "-p", "3", "-q", "3") == 2
    assert "distinct" in capsys.readouterr().err
    assert run(tmp_path, "generate", "lps", "-p", "5", "-q", "3") == 2
    assert "2*sqrt(p)" in capsys.readouterr().err
    assert run(tmp_path, "generate", "sf") == 2


def test_analyze_edge_list(tmp_path):
    k5 = tmp_path / "k5.edges"
    k5.write_text("".join(f"{i} {j}\n" for i in range(5) for j in range(i + 1, 5)))
    assert run(tmp_path, "analyze", "--edges", str(k5), "--format", "json") == 0
    row = json.loads((tmp_path / "analyze.json").read_text())["rows"][0]
    assert row["diameter"] == 1 and row["bisection_upper"] == 6
    bad = tmp_path / "bad.edges"
    bad.write_text("0 1\n2 3\n")
    assert run(tmp_path, "analyze", "--edges", str(bad)) == 2


def test_analyze_smallest_size_class(tmp_path):
    assert run(tmp_path, "analyze", "--table1", "--restarts", "2") == 0
    text = (tmp_path / "analyze.csv").read_text().splitlines()
    assert text[0].startswith("# lpsnet-analyze v")
    assert len(text) == 2 + 4


def test_failures_rows(tmp_path):
    assert run(tmp_path, "failures", "--spec", "sf:5", "--proportions", "0,0.1",
               "--no-bisection", "--max-trials", "100") == 0
    lines = (tmp_path / "failures.csv").read_text().splitlines()
    header = lines[1].split(",")
    assert "converged" in header and len(lines) == 4
    zero = dict(zip(header, lines[2].split(",")))
    assert zero["mean_diameter"] == "2.0" and zero["connected_rate"] == "1.0"


def test_simulate_baseline_and_normalized(tmp_path):
    args = ["simulate", "--topology", "sf:5", "--baseline", "df:6", "--routing", "valiant",
            "--baseline-routing", "minimal", "--loads", "0.2", "--duration", "3000", "--warmup", "300"]
    assert run(tmp_path, *args) == 0
    lines = (tmp_path / "simulate.csv").read_text().splitlines()
    header = lines[1].split(",")
    assert header[-2:] == ["normalized_vs_minimal", "speedup_vs_df-6"]
    assert len(lines) == 3  # one topology, one routing, one load
    first = (tmp_path / "simulate.csv").read_bytes()
    assert run(tmp_path, *args) == 0
    assert (tmp_path / "simulate.csv").read_bytes() == first


def test_layout_outputs(tmp_path):
    assert run(tmp_path, "layout", "--spec", "sf:5", "--budget", "2", "--latency-sweep", "0,50,100",
               "--cutoff", "8") == 0
    rep = json.loads((tmp_path / "layout.json").read_text())
    assert rep["wire"]["electrical_cutoff_m"] == 8.0
    assert rep["wire"]["electrical_links"] + rep["wire"]["optical_links"] == 175
    sweep = (tmp_path / "latency_sweep.csv").read_text().splitlines()[2:]
    means = [float(r.split(",")[2]) for r in sweep]
    assert means == sorted(means)
    assert (tmp_path / "placement.csv").exists()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("LPSNET_OUT", str(tmp_path / "env"))
    assert main(["generate", "df", "-a", "2"]) == 0
    assert (tmp_path / "env" / "df-2.edges").exists()


def test_generate_small_q_opt_in(tmp_path):
    assert run(tmp_path, "generate", "lps", "-p", "19", "-q", "7") == 2
    assert run(tmp_path, "generate", "lps", "-p", "19", "-q", "7", "--allow-small-q") == 0
    assert len((tmp_path / "lps-19-7.edges").read_text().splitlines()) == 336 * 10
