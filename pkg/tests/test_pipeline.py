import json

import pytest

from qax.pipeline import (
    STATUS_ALIGNED,
    STATUS_FILTERED,
    STATUS_NO_FEASIBLE_WINDOW,
    STATUS_TRANSLATION_FAILED,
    STATUS_UNANSWERABLE_DROPPED,
    STATUS_UNANSWERABLE_KEPT,
    ChecksumMismatch,
    PipelineConfig,
    RecordOutcome,
    downsample_unanswerable,
    filter_by_threshold,
    run_pipeline,
    similarity_histogram,
    translate_entry,
)
from qax.providers import ProviderClient, ProviderUnavailable
from qax.squad_format import parse_dataset, serialize_dataset, validate_dataset
from qax.synth import synthetic_dataset

from conftest import forbidden_transport


def aligned(qa_id, sim, prox=0.0):
    return RecordOutcome(qa_id, STATUS_ALIGNED, sim, prox)


def unanswerable(qa_id):
    return RecordOutcome(qa_id, STATUS_UNANSWERABLE_KEPT)


class PoisonClient:
    """Wraps a real client; fails translate() for chosen texts."""

    def __init__(self, inner, poison=()):
        self.inner = inner
        self.poison = set(poison)

    def translate(self, text):
        if text in self.poison:
            raise ProviderUnavailable("poisoned")
        return self.inner.translate(text)

    def embed(self, text):
        return self.inner.embed(text)


class CrashingClient:
    """Raises a non-provider error after a fixed number of translations,
    simulating a mid-run crash."""

    def __init__(self, inner, crash_after):
        self.inner = inner
        self.remaining = crash_after

    def translate(self, text):
        if self.remaining <= 0:
            raise RuntimeError("simulated crash")
        self.remaining -= 1
        return self.inner.translate(text)

    def embed(self, text):
        return self.inner.embed(text)


class TestFilterByThreshold:
    def test_inclusive_boundary(self):
        records = [aligned("a", 0.59), aligned("b", 0.60), aligned("c", 0.61)]
        kept, filtered = filter_by_threshold(records, 0.6)
        assert [r.qa_id for r in kept] == ["b", "c"]
        assert [r.qa_id for r in filtered] == ["a"]
        assert filtered[0].status == STATUS_FILTERED
        assert filtered[0].similarity == 0.59

    def test_zero_keeps_all(self):
        records = [aligned("a", 0.0), aligned("b", 1.0)]
        kept, filtered = filter_by_threshold(records, 0.0)
        assert len(kept) == 2 and not filtered

    def test_above_one_keeps_none(self):
        records = [aligned("a", 1.0)]
        kept, filtered = filter_by_threshold(records, 1.01)
        assert not kept and len(filtered) == 1

    def test_unanswerable_unaffected(self):
        records = [unanswerable("u1"), aligned("a", 0.1)]
        kept, filtered = filter_by_threshold(records, 0.6)
        assert [r.qa_id for r in kept] == ["u1"]
        assert [r.qa_id for r in filtered] == ["a"]


class TestDownsampleUnanswerable:
    def _records(self, n_unanswerable, n_answerable=3):
        recs = [aligned(f"a{i}", 0.9) for i in range(n_answerable)]
        recs += [unanswerable(f"u{i}") for i in range(n_unanswerable)]
        return recs

    def test_exact_count_and_determinism(self):
        records = self._records(5000)
        once = downsample_unanswerable(records, 600, rng_seed=42)
        twice = downsample_unanswerable(records, 600, rng_seed=42)
        assert once == twice
        kept = [r for r in once if r.status == STATUS_UNANSWERABLE_KEPT]
        dropped = [r for r in once if r.status == STATUS_UNANSWERABLE_DROPPED]
        assert len(kept) == 600
        assert len(dropped) == 4400

    def test_different_seed_different_sample(self):
        records = self._records(200)
        a = downsample_unanswerable(records, 50, rng_seed=1)
        b = downsample_unanswerable(records, 50, rng_seed=2)
        assert a != b

    def test_keep_all_when_budget_large(self):
        records = self._records(10)
        out = downsample_unanswerable(records, 99, rng_seed=0)
        assert all(r.status != STATUS_UNANSWERABLE_DROPPED for r in out)

    def test_keep_zero(self):
        records = self._records(10)
        out = downsample_unanswerable(records, 0, rng_seed=0)
        assert sum(r.status == STATUS_UNANSWERABLE_KEPT for r in out) == 0

    def test_order_preserved_and_answerable_untouched(self):
        records = self._records(50)
        out = downsample_unanswerable(records, 10, rng_seed=3)
        assert [r.qa_id for r in out] == [r.qa_id for r in records]
        assert [r for r in out if r.status == STATUS_ALIGNED] == [
            r for r in records if r.status == STATUS_ALIGNED
        ]


class TestSimilarityHistogram:
    def test_single_bin(self):
        bins = similarity_histogram([aligned(str(i), 0.95) for i in range(10)])
        assert bins == [0] * 9 + [10]

    def test_one_lands_in_top_bin(self):
        assert similarity_histogram([aligned("a", 1.0)])[9] == 1

    def test_decimal_boundaries(self):
        for value, expected_bin in [
            (0.0, 0),
            (0.09999, 0),
            (0.1, 1),
            (0.3, 3),
            (0.6, 6),
            (0.59999, 5),
            (0.9, 9),
            (1.0, 9),
        ]:
            bins = similarity_histogram([aligned("x", value)])
            assert bins[expected_bin] == 1, (value, expected_bin, bins)

    def test_records_without_similarity_excluded(self):
        bins = similarity_histogram([unanswerable("u"), aligned("a", 0.5)])
        assert sum(bins) == 1


class TestTranslateEntry:
    def test_identity_verbatim_answer(self, offline_cfg, offline_client):
        ds = synthetic_dataset(n_articles=1, paragraphs_per_article=1, qas_per_paragraph=3,
                               unanswerable_ratio=0.0, seed=5)
        cfg = PipelineConfig(provider=offline_cfg)
        para = ds.articles[0].paragraphs[0]
        qa = para.qas[0]
        entry = translate_entry(ds.articles[0].title, para.context, qa, cfg, offline_client)
        assert entry.status == STATUS_ALIGNED
        assert entry.context == para.context
        assert entry.meta.similarity == pytest.approx(1.0, abs=1e-9)
        start = entry.answers[0].answer_start
        text = entry.answers[0].text
        assert entry.context[start : start + len(text)] == text

    def test_unanswerable_passthrough(self, offline_cfg, offline_client):
        ds = synthetic_dataset(n_articles=1, paragraphs_per_article=1, qas_per_paragraph=4,
                               unanswerable_ratio=1.0, seed=5)
        cfg = PipelineConfig(provider=offline_cfg)
        para = ds.articles[0].paragraphs[0]
        entry = translate_entry("t", para.context, para.qas[0], cfg, offline_client)
        assert entry.status == "unanswerable"
        assert entry.answers == ()
        assert entry.meta is None

    def test_provider_failure_quarantined(self, offline_cfg, offline_client):
        ds = synthetic_dataset(n_articles=1, paragraphs_per_article=1, qas_per_paragraph=2,
                               unanswerable_ratio=0.0, seed=5)
        para = ds.articles[0].paragraphs[0]
        cfg = PipelineConfig(provider=offline_cfg)
        poisoned = PoisonClient(offline_client, poison={para.qas[0].question})
        bad = translate_entry("t", para.context, para.qas[0], cfg, poisoned)
        good = translate_entry("t", para.context, para.qas[1], cfg, poisoned)
        assert bad.status == STATUS_TRANSLATION_FAILED
        assert good.status == STATUS_ALIGNED


class TestRunPipeline:
    def _dataset(self, **kwargs):
        kwargs.setdefault("n_articles", 2)
        kwargs.setdefault("paragraphs_per_article", 2)
        kwargs.setdefault("qas_per_paragraph", 5)
        kwargs.setdefault("seed", 11)
        return synthetic_dataset(**kwargs)

    def test_identity_fixpoint(self, offline_cfg, offline_client):
        ds = self._dataset(unanswerable_ratio=0.3)
        cfg = PipelineConfig(provider=offline_cfg)
        out, report = run_pipeline(ds, "train", cfg, offline_client)
        assert validate_dataset(out) == []
        # identity translation: contexts unchanged, all aligned at 1.0
        for a_in, a_out in zip(ds.articles, out.articles):
            for p_in, p_out in zip(a_in.paragraphs, a_out.paragraphs):
                assert p_in.context == p_out.context
        for r in report.outcomes:
            if r.status == STATUS_ALIGNED:
                assert r.similarity == pytest.approx(1.0, abs=1e-9)
        assert report.counts["answerable_filtered"] == 0
        assert report.counts["failed"] == 0

    def test_conservation(self, offline_cfg, offline_client):
        ds = self._dataset(unanswerable_ratio=0.4, seed=23)
        n_answerable = sum(
            not qa.is_impossible
            for a in ds.articles for p in a.paragraphs for qa in p.qas
        )
        n_unanswerable = sum(
            qa.is_impossible
            for a in ds.articles for p in a.paragraphs for qa in p.qas
        )
        cfg = PipelineConfig(provider=offline_cfg, unanswerable_keep_train=2)
        out, report = run_pipeline(ds, "train", cfg, offline_client)
        c = report.counts
        assert c["answerable_kept"] + c["answerable_filtered"] + c["failed"] == n_answerable
        assert c["unanswerable_kept"] + c["unanswerable_dropped"] == n_unanswerable
        assert c["unanswerable_kept"] == min(2, n_unanswerable)
        assert sum(report.histogram) == sum(
            1 for r in report.outcomes if r.similarity is not None
        )

    def test_split_selects_keep_budget(self, offline_cfg, offline_client):
        ds = self._dataset(unanswerable_ratio=0.5, seed=31)
        cfg = PipelineConfig(
            provider=offline_cfg, unanswerable_keep_train=1, unanswerable_keep_dev=3
        )
        _, train_report = run_pipeline(ds, "train", cfg, offline_client)
        _, dev_report = run_pipeline(ds, "dev", cfg, offline_client)
        assert train_report.counts["unanswerable_kept"] == 1
        assert dev_report.counts["unanswerable_kept"] == 3

    def test_determinism(self, offline_cfg, offline_client):
        ds = self._dataset(unanswerable_ratio=0.3, seed=7)
        cfg = PipelineConfig(provider=offline_cfg, rng_seed=99)
        out1, rep1 = run_pipeline(ds, "train", cfg, offline_client)
        out2, rep2 = run_pipeline(ds, "train", cfg, offline_client)
        assert serialize_dataset(out1) == serialize_dataset(out2)
        assert rep1.to_json() == rep2.to_json()

    def test_empty_dataset(self, offline_cfg, offline_client):
        ds = parse_dataset(b'{"version": "v2.0", "data": []}')
        cfg = PipelineConfig(provider=offline_cfg)
        out, report = run_pipeline(ds, "train", cfg, offline_client)
        assert out.articles == ()
        assert report.outcomes == []
        assert report.histogram == [0] * 10
        assert all(v == 0 for v in report.counts.values())

    def test_invalid_input_rejected(self, offline_cfg, offline_client):
        ds = parse_dataset(
            json.dumps(
                {
                    "version": "v2.0",
                    "data": [
                        {
                            "title": "t",
                            "paragraphs": [
                                {
                                    "context": "the dog",
                                    "qas": [
                                        {
                                            "id": "q1",
                                            "question": "?",
                                            "answers": [{"text": "cat", "answer_start": 4}],
                                        }
                                    ],
                                }
                            ],
                        }
                    ],
                }
            )
        )
        cfg = PipelineConfig(provider=offline_cfg)
        with pytest.raises(ValueError, match="invalid"):
            run_pipeline(ds, "train", cfg, offline_client)

    def test_failures_quarantined_per_record(self, offline_cfg, offline_client):
        ds = self._dataset(unanswerable_ratio=0.0, seed=13)
        victim = ds.articles[0].paragraphs[0].qas[0]
        cfg = PipelineConfig(provider=offline_cfg)
        client = PoisonClient(offline_client, poison={victim.question})
        out, report = run_pipeline(ds, "train", cfg, client)
        by_id = {r.qa_id: r for r in report.outcomes}
        assert by_id[victim.id].status == STATUS_TRANSLATION_FAILED
        assert report.counts["failed"] == 1
        assert validate_dataset(out) == []
        out_ids = {qa.id for a in out.articles for p in a.paragraphs for qa in p.qas}
        assert victim.id not in out_ids
        assert len(out_ids) == len(report.outcomes) - 1

    def test_context_failure_sinks_whole_paragraph(self, offline_cfg, offline_client):
        ds = self._dataset(unanswerable_ratio=0.2, seed=17)
        victim_para = ds.articles[1].paragraphs[0]
        cfg = PipelineConfig(provider=offline_cfg)
        client = PoisonClient(offline_client, poison={victim_para.context})
        out, report = run_pipeline(ds, "train", cfg, client)
        by_id = {r.qa_id: r for r in report.outcomes}
        for qa in victim_para.qas:
            assert by_id[qa.id].status == STATUS_TRANSLATION_FAILED
        # the failed paragraph is omitted, siblings survive
        assert len(out.articles[1].paragraphs) == len(ds.articles[1].paragraphs) - 1
        assert validate_dataset(out) == []

    def test_plausible_answers_dropped(self, offline_cfg, offline_client):
        doc = {
            "version": "v2.0",
            "data": [
                {
                    "title": "t",
                    "paragraphs": [
                        {
                            "context": "the cat sat",
                            "qas": [
                                {
                                    "id": "q1",
                                    "question": "what?",
                                    "is_impossible": True,
                                    "answers": [],
                                    "plausible_answers": [{"text": "cat", "answer_start": 4}],
                                }
                            ],
                        }
                    ],
                }
            ],
        }
        ds = parse_dataset(json.dumps(doc))
        cfg = PipelineConfig(provider=offline_cfg)
        out, _ = run_pipeline(ds, "train", cfg, offline_client)
        out_qa = out.articles[0].paragraphs[0].qas[0]
        assert out_qa.is_impossible is True
        assert out_qa.plausible_answers is None


class TestCheckpointResume:
    def _run_clean(self, ds, cfg, client):
        return run_pipeline(ds, "train", cfg, client)

    def test_resume_bit_identical(self, tmp_path, offline_cfg, offline_client):
        ds = synthetic_dataset(
            n_articles=2, paragraphs_per_article=2, qas_per_paragraph=5,
            unanswerable_ratio=0.3, seed=41,
        )
        ckpt = tmp_path / "run.ckpt"
        cfg = PipelineConfig(provider=offline_cfg, checkpoint_path=ckpt)
        cfg_clean = PipelineConfig(provider=offline_cfg)

        crasher = CrashingClient(offline_client, crash_after=9)
        with pytest.raises(RuntimeError, match="simulated crash"):
            run_pipeline(ds, "train", cfg, crasher)
        assert ckpt.exists()
        header = json.loads(ckpt.read_text().splitlines()[0])
        assert "digest" in header

        out_resumed, rep_resumed = run_pipeline(ds, "train", cfg, offline_client)
        out_clean, rep_clean = self._run_clean(ds, cfg_clean, offline_client)
        assert serialize_dataset(out_resumed) == serialize_dataset(out_clean)
        assert rep_resumed.to_json() == rep_clean.to_json()

    def test_completed_entries_not_recomputed(self, tmp_path, offline_cfg, offline_client):
        ds = synthetic_dataset(
            n_articles=1, paragraphs_per_article=1, qas_per_paragraph=4,
            unanswerable_ratio=0.0, seed=43,
        )
        ckpt = tmp_path / "run.ckpt"
        cfg = PipelineConfig(provider=offline_cfg, checkpoint_path=ckpt)
        run_pipeline(ds, "train", cfg, offline_client)

        class ExplodingClient:
            def translate(self, text):
                raise AssertionError("resume must not re-translate")

            def embed(self, text):
                raise AssertionError("resume must not re-embed")

        out, report = run_pipeline(ds, "train", cfg, ExplodingClient())
        assert validate_dataset(out) == []
        assert report.counts["failed"] == 0

    def test_checksum_mismatch_on_config_change(self, tmp_path, offline_cfg, offline_client):
        ds = synthetic_dataset(n_articles=1, paragraphs_per_article=1,
                               qas_per_paragraph=3, seed=47)
        ckpt = tmp_path / "run.ckpt"
        cfg = PipelineConfig(provider=offline_cfg, checkpoint_path=ckpt)
        run_pipeline(ds, "train", cfg, offline_client)
        changed = PipelineConfig(provider=offline_cfg, checkpoint_path=ckpt, rng_seed=5)
        with pytest.raises(ChecksumMismatch):
            run_pipeline(ds, "train", changed, offline_client)

    def test_checksum_mismatch_on_input_change(self, tmp_path, offline_cfg, offline_client):
        ds = synthetic_dataset(n_articles=1, paragraphs_per_article=1,
                               qas_per_paragraph=3, seed=47)
        other = synthetic_dataset(n_articles=1, paragraphs_per_article=1,
                                  qas_per_paragraph=3, seed=48)
        ckpt = tmp_path / "run.ckpt"
        cfg = PipelineConfig(provider=offline_cfg, checkpoint_path=ckpt)
        run_pipeline(ds, "train", cfg, offline_client)
        with pytest.raises(ChecksumMismatch):
            run_pipeline(other, "train", cfg, offline_client)
