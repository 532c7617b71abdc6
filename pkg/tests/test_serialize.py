import numpy as np
import pytest

from wfalearn import (
    Basis,
    CoConfig,
    InputError,
    Pnfa,
    StringSample,
    draw_sample,
    empirical_blocks,
    exact_blocks,
    length_k_basis,
    pnfa_to_wa,
    random_pnfa,
    solve_co,
)
from wfalearn import serialize
from wfalearn.harness import ResultRecord


class TestModelJson:
    def test_wa_round_trip_is_value_exact(self, rng):
        target = random_pnfa(3, 2, rng)
        wa = pnfa_to_wa(target)
        doc = serialize.wa_to_dict(wa, seed=5)
        import json

        loaded = serialize.model_from_dict(json.loads(json.dumps(doc)))
        assert np.array_equal(loaded.alpha1, wa.alpha1)
        assert np.array_equal(loaded.alpha_inf, wa.alpha_inf)
        for a, b in zip(loaded.ops, wa.ops):
            assert np.array_equal(a, b)

    def test_pnfa_round_trip_is_value_exact(self, rng):
        target = random_pnfa(4, 3, rng)
        import json

        loaded = serialize.model_from_dict(json.loads(json.dumps(serialize.pnfa_to_dict(target))))
        assert isinstance(loaded, Pnfa)
        assert np.array_equal(loaded.initial, target.initial)
        assert np.array_equal(loaded.stop, target.stop)
        assert all(np.array_equal(x, y) for x, y in zip(loaded.trans, target.trans))

    def test_unknown_type_rejected(self):
        with pytest.raises(InputError):
            serialize.model_from_dict({"type": "hmm"})

    def test_digest_ignores_seed_provenance(self, rng):
        target = random_pnfa(2, 2, rng)
        assert serialize.pnfa_digest(target) == serialize.pnfa_digest(target)

    def test_files_round_trip(self, rng, tmp_path):
        target = random_pnfa(2, 2, rng)
        path = tmp_path / "target.json"
        serialize.save_json(serialize.pnfa_to_dict(target, seed=1), path)
        loaded = serialize.model_from_dict(serialize.load_json(path))
        assert np.array_equal(loaded.initial, target.initial)


class TestBasisAndBlocks:
    def test_basis_round_trip(self):
        basis = Basis(((), (1,), (0, 1)), ((), (0,)))
        assert serialize.basis_from_dict(serialize.basis_to_dict(basis)) == basis

    def test_blocks_round_trip(self, rng):
        target = random_pnfa(2, 2, rng)
        sample = draw_sample(target, 200, rng)
        blocks = empirical_blocks(sample, length_k_basis(2, 1), "substring")
        doc = serialize.blocks_to_dict(blocks)
        loaded = serialize.blocks_from_dict(doc)
        assert np.array_equal(loaded.h, blocks.h)
        assert loaded.estimator == blocks.estimator
        assert loaded.basis == blocks.basis
        assert all(np.array_equal(a, b) for a, b in zip(loaded.shifted, blocks.shifted))

    def test_exact_blocks_have_no_estimator_tag(self, rng):
        target = random_pnfa(2, 2, rng)
        blocks = exact_blocks(pnfa_to_wa(target), length_k_basis(2, 1))
        assert serialize.blocks_to_dict(blocks)["estimator"] is None

    def test_basis_digest_distinguishes_bases(self):
        a = serialize.basis_digest(Basis(((), (0,)), ((),)))
        b = serialize.basis_digest(Basis(((), (1,)), ((),)))
        assert a != b

    def test_co_solution_document(self, rng):
        target = random_pnfa(2, 2, rng)
        blocks = exact_blocks(pnfa_to_wa(target), length_k_basis(2, 1))
        solution = solve_co(blocks, CoConfig(tau=2.0, max_iter=500))
        doc = serialize.co_solution_to_dict(solution, 2.0, blocks.basis)
        assert doc["tau"] == 2.0
        assert doc["converged"] == solution.converged
        assert len(doc["objective_trace"]) == solution.iterations + 1
        assert doc["basis_digest"] == serialize.basis_digest(blocks.basis)


class TestSampleFiles:
    def test_text_round_trip_preserving_empties(self):
        sample = StringSample(((0, 1), (), (2,), ()), alphabet_size=3)
        text = serialize.sample_to_text(sample)
        assert text == "0 1\n\n2\n\n"
        loaded = serialize.sample_from_text(text, alphabet_size=3)
        assert loaded.strings == sample.strings

    def test_file_round_trip(self, rng, tmp_path):
        target = random_pnfa(2, 2, rng)
        sample = draw_sample(target, 100, rng)
        path = tmp_path / "sample.txt"
        serialize.write_sample(sample, path)
        loaded = serialize.read_sample(path, alphabet_size=2)
        assert loaded.strings == sample.strings

    def test_alphabet_inference(self):
        loaded = serialize.sample_from_text("0 3\n\n1\n")
        assert loaded.alphabet_size == 4
        assert loaded.size == 3

    def test_negative_symbols_rejected(self):
        with pytest.raises(InputError):
            serialize.sample_from_text("0 -1\n")

    def test_digest_tracks_prefix_structure(self):
        big = StringSample(((0,), (1,), (0, 0)), alphabet_size=2)
        assert serialize.sample_digest(big.prefix(2)) == serialize.sample_digest(
            StringSample(((0,), (1,)), alphabet_size=2)
        )


class TestRecordsCsv:
    def _record(self, wall=1.23):
        return ResultRecord(
            target_digest="abc",
            learner="svd",
            hyperparameter=3.0,
            sample_size=100,
            seed=0,
            l1_error=0.5,
            tail_mass=0.1,
            wall_time_s=wall,
            nuclear_norm=2.5,
        )

    def test_header_names_every_field(self, tmp_path):
        path = tmp_path / "records.csv"
        serialize.write_records_csv([self._record()], path)
        header = path.read_text().splitlines()[0]
        assert header == ",".join(serialize.RECORD_FIELDS)

    def test_timings_zeroed_by_default(self, tmp_path):
        path = tmp_path / "records.csv"
        serialize.write_records_csv([self._record(wall=9.87)], path)
        assert ",0.0," in path.read_text().splitlines()[1]

    def test_timings_kept_on_request(self, tmp_path):
        path = tmp_path / "records.csv"
        serialize.write_records_csv([self._record(wall=9.87)], path, include_timings=True)
        assert ",9.87," in path.read_text().splitlines()[1]
