"""Estimator plumbing: params round trips, fitted-state checks,
checkpoint save/load with encoding guards."""

import pytest

from capseq.data import Encodings, build_sessions, synth_dataset, training_sessions
from capseq.features import FeatureTables
from capseq.generation import GenRequest
from capseq.models import (
    CapsLstmRecommender,
    CapsRnnRecommender,
    PlainRnnRecommender,
    NotFittedError,
    load_checkpoint,
)
from capseq.baselines import MarkovRecommender, PopularityRecommender


@pytest.fixture(scope="module")
def world():
    records, graph = synth_dataset(seed=5, n_users=5, n_pois=30, days=4)
    sessions = build_sessions(records)
    encodings = Encodings.fit(sessions)
    tables = FeatureTables.build(sessions, graph, encodings)
    return sessions, tables


class TestEstimatorApi:
    def test_get_set_params_round_trip(self):
        model = CapsRnnRecommender(hidden_size=10, epochs=2)
        params = model.get_params()
        assert params["hidden_size"] == 10 and params["epochs"] == 2
        clone = model.clone_unfitted()
        assert clone.get_params() == params
        model.set_params(hidden_size=20)
        assert model.hidden_size == 20
        with pytest.raises(ValueError, match="invalid parameter"):
            model.set_params(not_a_param=1)

    def test_repr_shows_params(self):
        assert "hidden_size=10" in repr(CapsLstmRecommender(hidden_size=10))

    def test_unfitted_generate_raises(self):
        model = PlainRnnRecommender(hidden_size=4, epochs=1)
        with pytest.raises(NotFittedError):
            model.generate(GenRequest(user=0, start_poi=0, start_hour=9,
                                      length=2, candidates=1, k=1))

    def test_fit_requires_tables(self, world):
        sessions, tables = world
        with pytest.raises(ValueError, match="tables"):
            CapsRnnRecommender(epochs=1).fit(sessions)
        with pytest.raises(ValueError, match="tables"):
            PopularityRecommender().fit(sessions)

    def test_baseline_params_round_trip(self):
        model = MarkovRecommender(smoothing=0.5)
        assert model.get_params() == {"smoothing": 0.5}


class TestSessionEncoding:
    def test_long_sessions_capped_at_max_steps(self, world):
        from capseq.data.types import Poi, Session, Visit
        from capseq.models import MAX_STEPS, encode_session

        sessions, tables = world
        enc = tables.encodings
        poi_ids = list(enc.poi_to_ix)
        base = 1330905600
        visits = tuple(
            Visit(Poi(poi_ids[i % len(poi_ids)], 40.0, -74.0, "Home/Work:Home"),
                  base + i * 600, base + i * 600 + 300)
            for i in range(30)
        )
        long_session = Session("u0000", visits)
        encoded = encode_session(long_session, tables, enc)
        assert len(encoded.inputs) == MAX_STEPS
        assert encoded.attrs.shape[0] == MAX_STEPS

    def test_rejects_singletons(self, world):
        from capseq.data.types import Poi, Session, Visit
        from capseq.models import encode_session

        sessions, tables = world
        poi_id = next(iter(tables.encodings.poi_to_ix))
        single = Session(
            "u0000",
            (Visit(Poi(poi_id, 40.0, -74.0, "Home/Work:Home"), 1, 601),),
        )
        with pytest.raises(ValueError):
            encode_session(single, tables, tables.encodings)


class TestCheckpoints:
    def make(self, world, cls=CapsRnnRecommender, **kw):
        sessions, tables = world
        kw.setdefault("hidden_size", 8)
        kw.setdefault("embedding_size", 6)
        kw.setdefault("epochs", 2)
        kw.setdefault("learning_rate", 0.05)
        if cls is not CapsLstmRecommender:
            kw.setdefault("n_layers", 1)
        model = cls(**kw)
        return model.fit(training_sessions(sessions), tables), tables

    @pytest.mark.parametrize("cls", [PlainRnnRecommender, CapsRnnRecommender,
                                     CapsLstmRecommender])
    def test_save_load_preserves_generation(self, world, tmp_path, cls):
        model, tables = self.make(world, cls)
        path = tmp_path / "model.ckpt"
        model.save(path)
        loaded = load_checkpoint(path, tables)
        assert type(loaded) is cls
        req = GenRequest(user=0, start_poi=1, start_hour=9, length=4,
                         candidates=3, k=2)
        a = model.generate(req, seed=4)
        b = loaded.generate(req, seed=4)
        assert [s.pois for s in a] == [s.pois for s in b]
        assert [s.score for s in a] == [s.score for s in b]

    def test_sidecar_kind_tag(self, world, tmp_path):
        import json

        model, tables = self.make(world, CapsLstmRecommender)
        path = tmp_path / "m.ckpt"
        model.save(path)
        sidecar = json.loads(path.with_suffix(".ckpt.json").read_text())
        assert sidecar["kind"] == "caps-lstm"
        assert "encodings_sha256" in sidecar

    def test_rejects_foreign_encodings(self, world, tmp_path):
        model, tables = self.make(world)
        path = tmp_path / "m.ckpt"
        model.save(path)
        records, graph = synth_dataset(seed=99, n_users=4, n_pois=20, days=3)
        other_sessions = build_sessions(records)
        other = FeatureTables.build(
            other_sessions, graph, Encodings.fit(other_sessions)
        )
        with pytest.raises(ValueError, match="encodings"):
            load_checkpoint(path, other)
