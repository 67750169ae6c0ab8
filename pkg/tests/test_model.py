import pytest

from politeness_kit.model import (
    AnnotationSet,
    DepEdge,
    Domain,
    ParsedRequest,
    ParsedSentence,
    Quartile,
    ScoredRequest,
    Token,
)

from helpers import sent, text_request


def test_token_normalizes_lemma_to_lowercase():
    assert Token(1, "Hello", "Hello").lemma == "hello"


def test_token_validation():
    with pytest.raises(ValueError):
        Token(0, "a", "a")
    with pytest.raises(ValueError):
        Token(1, "", "a")
    with pytest.raises(ValueError):
        Token(1, "a", "")


def test_dep_edge_validation():
    with pytest.raises(ValueError):
        DepEdge("nsubj", -1, 1)
    with pytest.raises(ValueError):
        DepEdge("nsubj", 0, 0)
    with pytest.raises(ValueError):
        DepEdge("", 0, 1)


def test_sentence_rejects_duplicate_dependents():
    tokens = (Token(1, "a", "a"), Token(2, "b", "b"))
    edges = (DepEdge("root", 0, 1), DepEdge("dep", 1, 2), DepEdge("obj", 1, 2))
    with pytest.raises(ValueError, match="multiple edges"):
        ParsedSentence(tokens=tokens, edges=edges)


def test_sentence_rejects_out_of_range_edges():
    tokens = (Token(1, "a", "a"),)
    with pytest.raises(ValueError):
        ParsedSentence(tokens=tokens, edges=(DepEdge("dep", 5, 1),))
    with pytest.raises(ValueError):
        ParsedSentence(tokens=tokens, edges=(DepEdge("dep", 0, 3),))


def test_request_canonical_shape():
    two = text_request("r1", "I fixed it .", "Could you check ?")
    assert two.is_canonical
    assert not text_request("r2", "One sentence only .").is_canonical
    assert not text_request("r3", "First .", "No question mark .").is_canonical


def test_domain_parse_aliases():
    assert Domain.parse("Wiki") is Domain.WIKI
    assert Domain.parse("stackexchange") is Domain.SE
    with pytest.raises(ValueError):
        Domain.parse("usenet")


def test_annotation_set_requires_full_grid():
    with pytest.raises(ValueError, match="same request set"):
        AnnotationSet(
            batch_id="b1",
            worker_scores={"w1": {"r1": 1.0, "r2": 2.0}, "w2": {"r1": 1.0}},
        )


def test_annotation_set_properties():
    batch = AnnotationSet(
        batch_id="b1",
        worker_scores={"w2": {"r1": 1.0, "r2": 2.0}, "w1": {"r2": 0.0, "r1": 3.0}},
    )
    assert batch.worker_ids == ("w1", "w2")
    assert batch.request_ids == ("r1", "r2")
    assert batch.n_workers == 2 and batch.n_requests == 2


def test_scored_request_with_quartile_is_nondestructive():
    request = text_request("r1", "Hi there .")
    base = ScoredRequest(request=request, politeness=0.5)
    updated = base.with_quartile(Quartile.Q4)
    assert base.quartile is None
    assert updated.quartile is Quartile.Q4
    assert updated.id == "r1"


def test_sentence_helpers():
    s = sent("Could you help ?".split())
    assert s.surfaces == ("Could", "you", "help", "?")
    assert s.lemmas == ("could", "you", "help", "?")
    assert s.token_at(2).surface == "you"
    with pytest.raises(KeyError):
        s.token_at(9)


def test_request_requires_id():
    with pytest.raises(ValueError):
        ParsedRequest(id="", domain=Domain.WIKI, sentences=())
