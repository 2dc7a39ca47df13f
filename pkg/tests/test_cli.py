"""
Tests for the command-line entry point.
"""

import contextlib
import csv
import io
import json
import os
import tempfile
import unittest
from unittest import mock

from utils import cli
from utils.file_utils import BEAMPATTERN_COLUMNS, BCD_TRACE_COLUMNS

SMALL_CONFIG = {
    "scenario": {"n_ris_elements": 4, "direct_links_blocked": True},
    "solver": {"max_bcd_iters": 2, "pdd": {"outer_max": 10}},
    "experiment": {"kind": "sweep_elements", "sweep_values": [4], "n_seeds": 1, "variants": ["d_ris"]},
}


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.config = self._write_config("small.json", SMALL_CONFIG)

    def _write_config(self, name, data):
        path = os.path.join(self.tmp.name, name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f)
        return path

    def _main(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = cli.main(list(argv))
        return code, out.getvalue(), err.getvalue()

    def test_run_json(self):
        path = os.path.join(self.tmp.name, "records.json")
        code, out, _ = self._main("run", "--config", self.config, "--out", path, "--quiet")
        self.assertEqual(code, 0)
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        self.assertEqual(len(data["records"]), 1)
        self.assertEqual(data["config"]["scenario"]["n_ris_elements"], 4)
        self.assertIn("1 records", out)

    def test_run_csv_with_overrides(self):
        path = os.path.join(self.tmp.name, "records.csv")
        code, _, _ = self._main("run", "--config", self.config, "--seeds", "2", "--format", "csv", "--out", path, "--quiet")
        self.assertEqual(code, 0)
        with open(path, encoding="utf-8") as f:
            rows = [line for line in f.read().splitlines() if not line.startswith("#")]
        self.assertEqual(len(rows), 3)

    def test_bound_check_prints_json(self):
        code, out, _ = self._main("bound-check", "--config", self.config)
        self.assertEqual(code, 0)
        report = json.loads(out)
        self.assertEqual(report["seed"], 0)
        self.assertTrue(report["ul_bound"]["attained"])

    def test_beampattern(self):
        path = os.path.join(self.tmp.name, "beam.csv")
        code, _, _ = self._main("beampattern", "--config", self.config, "--step", "1", "--out", path)
        self.assertEqual(code, 0)
        with open(path, encoding="utf-8") as f:
            rows = list(csv.reader(f))
        self.assertEqual(tuple(rows[0]), BEAMPATTERN_COLUMNS)
        self.assertEqual(len(rows), 182)

    def test_trace(self):
        code, _, _ = self._main("trace", "--config", self.config, "--out-dir", self.tmp.name)
        self.assertEqual(code, 0)
        with open(os.path.join(self.tmp.name, "bcd_trace.csv"), encoding="utf-8") as f:
            self.assertEqual(tuple(next(csv.reader(f))), BCD_TRACE_COLUMNS)
        self.assertTrue(os.path.exists(os.path.join(self.tmp.name, "pdd_trace.csv")))

    def test_invalid_kind_exits_with_two(self):
        code, _, err = self._main("run", "--kind", "plot_everything")
        self.assertEqual(code, 2)
        self.assertTrue(err.strip().splitlines()[-1].startswith("error:"))

    def test_invalid_config_exits_with_two(self):
        bad = self._write_config("bad.json", {"scenario": {"angle_bs_deg": 400}})
        code, _, err = self._main("run", "--config", bad)
        self.assertEqual(code, 2)
        self.assertIn("invalid experiment configuration", err)

    def test_missing_config_exits_with_two(self):
        code, _, _ = self._main("run", "--config", os.path.join(self.tmp.name, "nope.json"))
        self.assertEqual(code, 2)

    def test_unexpected_failure_exits_with_one(self):
        with mock.patch.object(cli, "run_experiment", side_effect=RuntimeError("disk on fire")):
            code, _, _ = self._main("run", "--config", self.config)
        self.assertEqual(code, 1)

    def test_unknown_subcommand(self):
        with self.assertRaises(SystemExit):
            self._main("plot")


class BuildSpecTestCase(unittest.TestCase):
    def test_preset_without_config(self):
        spec = cli.build_spec(None, "si_sweep")
        self.assertEqual(spec.kind, "si_sweep")
        self.assertTrue(spec.sweep_values)

    def test_default_kind(self):
        self.assertEqual(cli.build_spec().kind, "convergence")

    def test_overrides_drop_none(self):
        spec = cli.build_spec(None, "rate_region", n_seeds=None, parallelism=3)
        self.assertEqual(spec.n_seeds, 1)
        self.assertEqual(spec.parallelism, 3)


if __name__ == "__main__":
    unittest.main()
