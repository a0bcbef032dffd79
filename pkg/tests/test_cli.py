import json

import pytest

from sftlab.cli import main
from sftlab.experiments import catalog, run_experiment


class TestCatalog:
    def test_builtins_present(self):
        names = {name for name, _ in catalog()}
        assert "thm1_1_capacity" in names
        assert "thm1_2_packing_tree" in names
        assert "thm1_5_chaos" in names
        assert names == {
            "thm1_1_capacity", "thm1_2_packing_tree", "prop3_1_family",
            "lemma_ds_tracking", "thm1_3_cocycle_family",
            "thm1_4_levels_and_smr", "thm1_5_chaos", "thm1_6_equilibrium",
            "karp_oracle", "pressure_identities"}

    def test_unknown_experiment(self):
        with pytest.raises(KeyError):
            run_experiment("nonsense", 0)


class TestCliCommands:
    def test_list(self, capsys):
        assert main(["list"]) == 0
        out = capsys.readouterr().out
        assert "thm1_5_chaos" in out

    def test_validate_good_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "seed": 3,
            "experiments": ["pressure_identities",
                            {"name": "karp_oracle", "params": {"count": 5}}],
        }))
        assert main(["validate", str(cfg)]) == 0

    def test_validate_bad_json_reports_line(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text('{\n  "seed": 1,\n  "experiments": [,]\n}\n')
        with pytest.raises(SystemExit) as exc:
            main(["validate", str(cfg)])
        assert ":3:" in str(exc.value)  # the offending line number

    def test_validate_unknown_name(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"experiments": ["nope"]}))
        with pytest.raises(SystemExit) as exc:
            main(["validate", str(cfg)])
        assert "nope" in str(exc.value)

    def test_empty_run_exits_zero(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 0, "experiments": []}))
        out = tmp_path / "out"
        assert main(["run", str(cfg), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["experiments"] == {}
        assert summary["all_passed"] is True
        assert (out / "meta.json").exists()

    def test_run_writes_tables_and_summary(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "seed": 11,
            "experiments": [{"name": "karp_oracle", "params": {"count": 10}}],
        }))
        out = tmp_path / "out"
        assert main(["run", str(cfg), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["experiments"]["karp_oracle"]["passed"] is True
        table = (out / "karp_oracle" / "oracle.csv").read_text()
        assert table.splitlines()[0] == "trial,m,r,karp,oracle,equal"
        assert len(table.splitlines()) == 11

    def test_seed_override_changes_tables(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "seed": 11,
            "experiments": [{"name": "karp_oracle", "params": {"count": 10}}],
        }))
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        main(["run", str(cfg), "--out", str(a)])
        main(["run", str(cfg), "--out", str(b)])
        main(["run", str(cfg), "--out", str(c), "--seed", "999"])
        ta = (a / "karp_oracle" / "oracle.csv").read_bytes()
        tb = (b / "karp_oracle" / "oracle.csv").read_bytes()
        tc = (c / "karp_oracle" / "oracle.csv").read_bytes()
        assert ta == tb
        assert ta != tc

    def test_parallel_jobs_match_serial(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "seed": 5,
            "experiments": [
                {"name": "karp_oracle", "params": {"count": 8}},
                "pressure_identities",
            ],
        }))
        serial, parallel = tmp_path / "s", tmp_path / "p"
        main(["run", str(cfg), "--out", str(serial)])
        main(["run", str(cfg), "--out", str(parallel), "--jobs", "2"])
        for rel in ("karp_oracle/oracle.csv", "pressure_identities/pressure.csv"):
            assert (serial / rel).read_bytes() == (parallel / rel).read_bytes()
        assert (json.loads((serial / "summary.json").read_text())
                == json.loads((parallel / "summary.json").read_text()))
