import json
import math

import numpy as np
import pytest

from eqp import Ball, Box, Halfspace, SolverConfig
from eqp.bench import (
    REPORT_HEADER,
    ExampleSpec,
    generate_instance,
    read_instance,
    read_report,
    run_benchmark,
    write_instance,
    write_report,
)
from eqp.errors import InstanceFormatError

FAST = SolverConfig(max_iter=50)


class TestGenerate:
    def test_deterministic(self):
        p1, _ = generate_instance(ExampleSpec(1, 5, seed=42), 3)
        p2, _ = generate_instance(ExampleSpec(1, 5, seed=42), 3)
        for name in ("A", "A1", "b", "b1", "c"):
            assert np.array_equal(getattr(p1, name), getattr(p2, name))
        assert p1.d == p2.d

    def test_instances_independent(self):
        a, _ = generate_instance(ExampleSpec(1, 5, seed=42), 0)
        b, _ = generate_instance(ExampleSpec(1, 5, seed=42), 1)
        c, _ = generate_instance(ExampleSpec(1, 5, seed=43), 0)
        assert not np.array_equal(a.A, b.A) and not np.array_equal(a.A, c.A)

    def test_entries_in_unit_interval(self):
        p, _ = generate_instance(ExampleSpec(2, 8, seed=1), 0)
        for arr in (p.A, p.A1, p.b, p.b1, p.c, np.array([p.d])):
            assert np.all((arr >= 0) & (arr < 1))

    def test_example1_sets(self):
        _, s = generate_instance(ExampleSpec(1, 5), 0)
        assert [type(c) for c in s.components] == [Box, Ball]
        np.testing.assert_array_equal(s.weights, [0.5, 0.5])

    def test_example2_sets(self):
        _, s = generate_instance(ExampleSpec(2, 5), 0)
        assert [type(c) for c in s.components] == [Box, Ball, Halfspace]
        assert s.components[2].offset == 6.0
        np.testing.assert_allclose(s.weights, [1 / 3] * 3)

    def test_example3_sets(self):
        _, s = generate_instance(ExampleSpec(3, 6), 0)
        np.testing.assert_array_equal(s.components[1].normal, [1, 1, 1, 0, 0, 0])
        assert s.components[1].offset == 3.0

    @pytest.mark.parametrize("example, dim", [(4, 5), (3, 2), (1, 0)])
    def test_bad_spec(self, example, dim):
        with pytest.raises(ValueError):
            ExampleSpec(example, dim)


class TestRun:
    def test_deterministic_except_time(self):
        a = run_benchmark(ExampleSpec(1, 4, seed=9), 6, FAST, threads=1)
        b = run_benchmark(ExampleSpec(1, 4, seed=9), 6, FAST, threads=3)
        assert (a.mean_err1, a.mean_err2, a.solved_fraction) == (b.mean_err1, b.mean_err2, b.solved_fraction)
        assert [r.iterations for r in a.runs] == [r.iterations for r in b.runs]

    def test_count_one_is_the_single_run(self):
        rep = run_benchmark(ExampleSpec(3, 4, seed=2), 1, FAST, threads=1)
        run = rep.runs[0]
        assert (rep.mean_err1, rep.mean_err2, rep.mean_err3) == (run.err1, run.err2, run.err3)
        assert rep.mean_elapsed_seconds == run.elapsed_seconds

    def test_err3_only_for_example3(self):
        assert run_benchmark(ExampleSpec(1, 3), 2, FAST).mean_err3 is None
        assert run_benchmark(ExampleSpec(3, 3), 2, FAST).mean_err3 >= -1e-9

    def test_threads_env(self, monkeypatch):
        from eqp.bench import default_threads

        monkeypatch.setenv("EQP_THREADS", "2")
        assert default_threads() == 2

    def test_rejects_zero_count(self):
        with pytest.raises(ValueError):
            run_benchmark(ExampleSpec(1, 3), 0)


class TestFiles:
    def test_instance_round_trip(self, tmp_path):
        p, s = generate_instance(ExampleSpec(1, 5, seed=7), 0)
        path = tmp_path / "inst.json"
        write_instance(path, p, s, {"seed": 7})
        back = read_instance(path)
        for name in ("A", "A1", "b", "b1", "c"):
            assert np.array_equal(getattr(p, name), getattr(back.problem, name))
        assert p.d == back.problem.d and back.meta == {"seed": 7}
        np.testing.assert_array_equal(back.sets.weights, s.weights)

    def test_missing_a1(self, tmp_path):
        p, s = generate_instance(ExampleSpec(1, 2), 0)
        path = tmp_path / "inst.json"
        write_instance(path, p, s)
        record = json.loads(path.read_text())
        del record["A1"]
        path.write_text(json.dumps(record))
        with pytest.raises(InstanceFormatError, match="'A1'"):
            read_instance(path)

    def test_bad_json_location(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"A": [[1.0]],\n  "A1": oops}')
        with pytest.raises(InstanceFormatError, match=r"bad.json:2:"):
            read_instance(path)

    def test_report_rows(self, tmp_path):
        reports = [run_benchmark(ExampleSpec(1, n, seed=1), 2, FAST) for n in (5, 10, 20, 50)]
        path = tmp_path / "report.csv"
        write_report(reports, path)
        assert path.read_text().splitlines()[0] == ",".join(REPORT_HEADER)
        rows = read_report(path)
        assert [r["dim"] for r in rows] == [5, 10, 20, 50]
        assert rows[0]["mean_err1"] == reports[0].mean_err1
        assert all(r["mean_err3"] is None for r in rows)

    def test_report_bad_header(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(InstanceFormatError):
            read_report(path)
