"""Builders shared by the test modules."""

from __future__ import annotations

from politeness_kit.model import (
    AnnotationSet,
    DepEdge,
    Domain,
    ParsedRequest,
    ParsedSentence,
    ScoredRequest,
    Token,
)


def sent(words, edges=None, lemmas=None, upos="X"):
    """Build a sentence from surface words; default tree is a chain.

    ``edges`` is a list of (relation, head, dependent) triples overriding the
    chain for the named dependents.
    """
    lemmas = lemmas or [w.lower() for w in words]
    tokens = tuple(
        Token(index=i + 1, surface=w, lemma=lemmas[i], upos=upos)
        for i, w in enumerate(words)
    )
    override = {dep: (rel, head) for rel, head, dep in (edges or [])}
    built = []
    for i in range(1, len(words) + 1):
        if i in override:
            rel, head = override[i]
            built.append(DepEdge(relation=rel, head=head, dependent=i))
        elif i == 1:
            built.append(DepEdge(relation="root", head=0, dependent=1))
        else:
            built.append(DepEdge(relation="dep", head=i - 1, dependent=i))
    return ParsedSentence(tokens=tokens, edges=tuple(built))


def req(rid, *sentences, domain=Domain.WIKI, meta=None):
    return ParsedRequest(
        id=rid, domain=domain, sentences=tuple(sentences), metadata=meta or {}
    )


def text_request(rid, *texts, domain=Domain.WIKI, meta=None):
    """Request from whitespace-tokenized sentence strings."""
    return req(rid, *(sent(t.split()) for t in texts), domain=domain, meta=meta)


def scored(request, politeness, quartile=None):
    return ScoredRequest(request=request, politeness=politeness, quartile=quartile)


def batch(batch_id, worker_scores):
    return AnnotationSet(batch_id=batch_id, worker_scores=worker_scores)
