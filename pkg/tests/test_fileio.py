import json

import numpy as np
import pytest

from lcmdiv import fileio
from lcmdiv.errors import InputFormatError
from lcmdiv.inference import NestedChain

from conftest import make_design


class TestDesignFiles:
    def test_round_trip(self, tmp_path):
        design = make_design(seed=401, k=3, m=2, t=3, u=2)
        path = tmp_path / "design.json"
        fileio.write_design(design, path, comment="round trip")
        loaded = fileio.read_design(path)
        np.testing.assert_array_equal(loaded.Q, design.Q)
        np.testing.assert_array_equal(loaded.C, design.C)
        np.testing.assert_array_equal(loaded.V, design.V)
        np.testing.assert_array_equal(loaded.d, design.d)

    def test_dimension_mismatch_rejected(self, tmp_path):
        design = make_design(seed=402)
        doc = fileio.design_to_dict(design)
        doc["t"] = 99
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(InputFormatError):
            fileio.read_design(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(InputFormatError):
            fileio.read_design(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputFormatError):
            fileio.read_design(tmp_path / "absent.json")


class TestCountsFiles:
    def test_pattern_rows_round_trip(self, tmp_path, coleman_counts):
        path = tmp_path / "counts.csv"
        fileio.write_counts(coleman_counts, path)
        loaded = fileio.read_counts(path)
        np.testing.assert_array_equal(loaded.n, coleman_counts.n)

    def test_missing_patterns_count_zero(self, tmp_path):
        path = tmp_path / "sparse.csv"
        path.write_text("y_1,y_2,count\n0,0,7\n1,1,3\n")
        loaded = fileio.read_counts(path)
        np.testing.assert_array_equal(loaded.n, [7, 0, 0, 3])

    def test_dense_vector_one_per_line(self, tmp_path):
        path = tmp_path / "dense.txt"
        path.write_text("5\n1\n2\n2\n")
        loaded = fileio.read_counts(path)
        np.testing.assert_array_equal(loaded.n, [5, 1, 2, 2])

    def test_dense_vector_single_row(self, tmp_path):
        path = tmp_path / "dense.csv"
        path.write_text("5,1,2,2\n")
        loaded = fileio.read_counts(path)
        np.testing.assert_array_equal(loaded.n, [5, 1, 2, 2])

    def test_item_count_crosscheck(self, tmp_path):
        path = tmp_path / "dense.csv"
        path.write_text("5,1,2,2\n")
        with pytest.raises(InputFormatError):
            fileio.read_counts(path, k=3)

    @pytest.mark.parametrize(
        "content",
        [
            "y_1,y_2,count\n0,2,5\n",        # non-binary response
            "y_1,y_2,count\n0,0,-1\n",       # negative count
            "y_1,y_2,count\n0,0,5\n0,0,3\n", # duplicate pattern
            "y_1,y_2,total\n0,0,5\n",        # bad header
            "5,1,2\n",                        # dense length not a power of two
            "y_1,y_2,count\n0,0,1.5\n",      # non-integer count
        ],
    )
    def test_malformed_inputs_rejected(self, tmp_path, content):
        path = tmp_path / "bad.csv"
        path.write_text(content)
        with pytest.raises(InputFormatError):
            fileio.read_counts(path)


class TestChainFiles:
    def test_round_trip_with_one_based_indices(self, tmp_path):
        design = make_design(seed=403, k=3, m=2, t=4, u=2)
        chain = NestedChain(design=design, steps=(((3,), ()), ((2, 3), (1,))))
        path = tmp_path / "chain.json"
        fileio.write_chain(chain, path, comment="reconstruction")
        doc = json.loads(path.read_text())
        assert doc["steps"][0]["zero_lambda"] == [4]  # 1-based on disk
        loaded = fileio.read_chain(path)
        assert loaded.steps == chain.steps

    def test_bad_chain_rejected(self, tmp_path):
        design = make_design(seed=404, k=3, m=2, t=3, u=1)
        doc = {"design": fileio.design_to_dict(design), "steps": [{"zero_lambda": [1]}, {"zero_lambda": [1]}]}
        path = tmp_path / "chain.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(Exception):
            fileio.read_chain(path)


class TestPlanFiles:
    def test_round_trip(self, tmp_path):
        from lcmdiv.datasets import simulation_plan

        plan = simulation_plan(
            sample_sizes=(200, 300), a_values=(0.0, 2.0 / 3.0),
            lambda8_grid=(0.0, 1.0), replications=25, seed=7,
        )
        path = tmp_path / "plan.json"
        fileio.write_plan(plan, path)
        loaded = fileio.read_plan(path)
        assert loaded.sample_sizes == plan.sample_sizes
        assert loaded.a_values == plan.a_values
        assert loaded.lambda8_grid == plan.lambda8_grid
        assert loaded.replications == plan.replications
        assert loaded.seed == plan.seed
        np.testing.assert_array_equal(loaded.theta0.lam, plan.theta0.lam)
        np.testing.assert_array_equal(np.asarray(loaded.null_design.Q), np.asarray(plan.null_design.Q))

    def test_digest_stability(self, tmp_path):
        design = make_design(seed=405)
        path = tmp_path / "d.json"
        fileio.write_design(design, path)
        assert fileio.file_digest(path) == fileio.file_digest(path)
