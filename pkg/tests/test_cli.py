import json

import pytest

from nhrelax import cli


def run(argv):
    return cli.main(argv)


def read_lines(path):
    with open(path) as fh:
        return fh.read().splitlines()


class TestParsing:
    def test_range_values(self):
        assert cli.parse_values("20:180:20") == [20.0, 40.0, 60.0, 80.0, 100.0,
                                                 120.0, 140.0, 160.0, 180.0]
        assert cli.parse_values("0.1,0.2") == [0.1, 0.2]

    def test_no_command_is_config_error(self, capsys):
        assert run([]) == 1

    def test_unstable_model_exit_2_with_named_error(self, tmp_path):
        out = tmp_path / "x.csv"
        # boson with pump above loss: numerical failure, named in the sidecar
        code = run(["steady", "--model", "hn", "--stats", "boson", "--L", "6",
                    "--kappa", "0.1", "--Gamma", "0.5", "--out", str(out)])
        assert code == 2
        meta = json.loads((tmp_path / "x.csv.json").read_text())
        assert meta["error"]["type"] == "BosonUnstable"


class TestArtifacts:
    def test_spectrum_and_sidecar(self, tmp_path):
        out = tmp_path / "spec.csv"
        code = run(["spectrum", "--model", "hn", "--L", "8", "--kappa", "0.5",
                    "--Gamma", "0.05", "--out", str(out)])
        assert code == 0
        lines = read_lines(out)
        assert lines[0] == "alpha,re_E,im_E"
        assert len(lines) == 9
        meta = json.loads((tmp_path / "spec.csv.json").read_text())
        assert meta["command"] == "spectrum"
        assert meta["config"]["kappa"] == 0.5
        assert "wall_time_s" in meta

    def test_float_format_17_digits(self, tmp_path):
        out = tmp_path / "s.csv"
        run(["steady", "--model", "hn", "--L", "4", "--kappa", "0.5",
             "--Gamma", "0.05", "--out", str(out)])
        val = read_lines(out)[1].split(",")[1]
        mantissa = val.split("e")[0].replace("-", "").replace(".", "")
        assert len(mantissa) == 17
        assert "e" in val and "E" not in val

    def test_relax_row_and_reproducibility(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["relax", "--model", "hn", "--stats", "boson", "--L", "20",
                "--kappa", "0.9", "--Gamma", "0.2"]
        assert run(args + ["--out", str(a)]) == 0
        assert run(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        lines = read_lines(a)
        assert lines[0].startswith("model,stat,L,w,kappa,lambda,Gamma,init,eta,tau")
        row = lines[1].split(",")
        assert row[0] == "HN" and row[7] == "vacuum" and row[-1] == "true"

    def test_sweep_sorted_and_worker_invariant(self, tmp_path):
        common = ["sweep", "--axis", "L", "--values", "24,16,20", "--model", "hn",
                  "--stats", "boson", "--kappa", "0.9", "--Gamma", "0.2"]
        one, two = tmp_path / "w1.csv", tmp_path / "w2.csv"
        assert run(common + ["--out", str(one), "--workers", "1"]) == 0
        assert run(common + ["--out", str(two), "--workers", "2"]) == 0
        assert one.read_bytes() == two.read_bytes()
        Ls = [int(line.split(",")[2]) for line in read_lines(one)[1:]]
        assert Ls == [16, 20, 24]

    def test_sweep_evec_overlay(self, tmp_path):
        out, evec = tmp_path / "s.csv", tmp_path / "e.csv"
        assert run(["sweep", "--axis", "kappa", "--values", "0.5,0.7",
                    "--model", "hn", "--stats", "boson", "--L", "16",
                    "--Gamma", "0.2", "--out", str(out),
                    "--evec-out", str(evec)]) == 0
        lines = read_lines(evec)
        assert lines[0] == "kappa,inv_xi_loc,tau_evec,tau_evec_times_Delta"
        assert len(lines) == 3

    def test_propagator_curves_and_peaks(self, tmp_path):
        out, peaks = tmp_path / "p.csv", tmp_path / "pk.csv"
        assert run(["propagator", "--model", "hn", "--stats", "fermion",
                    "--L", "24", "--kappa", "0.999", "--Gamma", "0.05",
                    "--j", "4,14", "--route", "no_bounce",
                    "--out", str(out), "--peaks-out", str(peaks)]) == 0
        header = read_lines(out)[0]
        assert header == "model,stat,L,j,m,t,logP,route"
        pk = read_lines(peaks)
        assert pk[0].startswith("model,stat,L,j,d,t_max,log_height,sigma")
        assert len(pk) == 3

    def test_interference_artifact(self, tmp_path):
        out = tmp_path / "i.csv"
        assert run(["interference", "--model", "hn", "--stats", "fermion",
                    "--L", "50", "--kappa", "0.999", "--Gamma", "0.05",
                    "--j", "1", "--out", str(out)]) == 0
        lines = read_lines(out)
        assert lines[0] == "kind,alpha,log10_mag,phase"
        assert len(lines) == 52  # 50 terms + stable_sum row + header
        meta = json.loads((tmp_path / "i.csv.json").read_text())
        assert meta["max_term_log10"] - meta["stable_log10"] >= 50.0

    def test_localization_artifact(self, tmp_path):
        out = tmp_path / "loc.csv"
        assert run(["localization", "--model", "hn", "--L", "12",
                    "--kappa", "0.5", "--Gamma", "0.05", "--out", str(out)]) == 0
        lines = read_lines(out)
        assert lines[0] == "model,alpha,re_E,im_E,iroot,re_root,im_root,A,B,xi"
        assert len(lines) == 1 + 12 * 2

    def test_config_file(self, tmp_path):
        cfg = {"command": "steady", "model": "hn", "stats": "fermion", "L": 5,
               "kappa": 0.4, "Gamma": 0.1, "out": str(tmp_path / "cfg.csv")}
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(cfg))
        assert run(["--config", str(cfg_path)]) == 0
        assert (tmp_path / "cfg.csv").exists()

    def test_config_file_requires_command(self, tmp_path):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"model": "hn"}))
        assert run(["--config", str(cfg_path)]) == 1

    def test_trajectory_artifact(self, tmp_path):
        out, traj = tmp_path / "r.csv", tmp_path / "t.csv"
        assert run(["relax", "--model", "hn", "--stats", "fermion", "--L", "6",
                    "--kappa", "0.5", "--Gamma", "0.1", "--out", str(out),
                    "--trajectory-out", str(traj)]) == 0
        lines = read_lines(traj)
        assert lines[0] == "t,site,n,delta_n"
        meta = json.loads((tmp_path / "t.csv.json").read_text())
        assert meta["Delta"] == pytest.approx(0.6)
        assert meta["n_sites"] == 6
