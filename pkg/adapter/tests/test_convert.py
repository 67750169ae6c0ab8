import io
import json

import pytest

from politeness_adapter.convert import (
    RawRecord,
    parse_records,
    parse_to_conllu,
    read_records,
    write_conllu,
)

from stub_engine import ExplodingEngine


def record(rid, text, domain="wiki", meta=None):
    return RawRecord(id=rid, domain=domain, text=text, meta=meta or {})


class TestReadRecords:
    def test_reads_jsonl(self, tmp_path):
        path = tmp_path / "raw.jsonl"
        path.write_text(
            json.dumps({"id": "a", "domain": "se", "text": "Hi.", "meta": {"k": "v"}})
            + "\n\n"
            + json.dumps({"id": "b", "text": "Yo."})
            + "\n",
            encoding="utf-8",
        )
        records = list(read_records(path))
        assert records[0].meta == {"k": "v"}
        assert records[1].domain == "other"

    def test_bad_json_names_line(self, tmp_path):
        path = tmp_path / "raw.jsonl"
        path.write_text('{"id": "a", "text": "Hi."}\nnot json\n', encoding="utf-8")
        with pytest.raises(ValueError, match=":2"):
            list(read_records(path))

    def test_missing_field(self, tmp_path):
        path = tmp_path / "raw.jsonl"
        path.write_text('{"id": "a"}\n', encoding="utf-8")
        with pytest.raises(ValueError, match="text"):
            list(read_records(path))


class TestParseRecords:
    def test_two_sentence_structure(self, engine):
        parsed, report = parse_records(
            [record("r1", "Hello there. Could you help?")], engine
        )
        assert report.n_parsed == 1 and not report.skipped
        (doc,) = parsed
        assert len(doc.sentences) == 2
        assert doc.sentences[1][-1].surface == "?"

    def test_empty_text_skipped_with_log(self, engine, caplog):
        with caplog.at_level("WARNING"):
            parsed, report = parse_records([record("r1", "   ")], engine)
        assert not parsed
        assert report.skipped == (("r1", "empty text"),)
        assert "r1" in caplog.text

    def test_parser_failure_skips_record_not_batch(self, caplog):
        engine = ExplodingEngine()
        records = [record("ok1", "Hi."), record("bad", "kaboom now."), record("ok2", "Yo.")]
        with caplog.at_level("WARNING"):
            parsed, report = parse_records(records, engine)
        assert [d.id for d in parsed] == ["ok1", "ok2"]
        assert report.skipped[0][0] == "bad"
        assert "parser failure" in report.skipped[0][1]

    def test_accounting_always_balances(self, engine):
        records = [record("a", "Hi."), record("b", ""), record("c", "One. Two?")]
        parsed, report = parse_records(records, engine)
        assert report.n_input == len(parsed) + len(report.skipped) == 3

    def test_order_preserved(self, engine):
        records = [record(f"r{i}", f"Sentence number {i}.") for i in range(20)]
        parsed, _ = parse_records(records, engine)
        assert [d.id for d in parsed] == [f"r{i}" for i in range(20)]


class TestWriteConllu:
    def test_output_shape(self, engine):
        parsed, _ = parse_records(
            [record("r1", "Hello there. Could you help?", meta={"role": "asker"})],
            engine,
        )
        buffer = io.StringIO()
        write_conllu(parsed, buffer, engine)
        text = buffer.getvalue()
        assert text.startswith("# parser = stub-segmenter 0\n# scheme = ud\n")
        assert "# id = r1\n# domain = wiki\n# meta.role = asker\n" in text
        body_lines = [l for l in text.splitlines() if l and not l.startswith("#")]
        assert all(len(l.split("\t")) == 10 for l in body_lines)

    def test_parse_to_conllu_end_to_end(self, tmp_path, engine):
        out = tmp_path / "out.conllu"
        report = parse_to_conllu(
            [record("r1", "Hello. Could you help?"), record("r2", "")], engine, out
        )
        assert report.n_parsed == 1
        assert out.read_text().count("# id = r1") == 2  # one per sentence
