"""Deterministic engine test doubles (not parsers)."""

from politeness_adapter.engine import ParsedToken

_TERMINALS = ".?!"
_CLITICS = ",;:"


class StubEngine:
    """Deterministic test double implementing the engine protocol.

    Splits sentences at terminal punctuation, tokenizes on whitespace with
    punctuation split off, and emits a flat chain tree.  It exists to
    exercise the adapter's segmentation-to-CoNLL-U plumbing in environments
    without an installed statistical parser; it is not a parser.
    """

    name = "stub-segmenter"
    version = "0"
    scheme = "ud"

    def parse(self, text):
        words = []
        for chunk in text.split():
            while chunk and chunk[0] in _CLITICS:
                words.append(chunk[0])
                chunk = chunk[1:]
            tail = []
            while chunk and chunk[-1] in _TERMINALS + _CLITICS:
                tail.append(chunk[-1])
                chunk = chunk[:-1]
            if chunk:
                words.append(chunk)
            words.extend(reversed(tail))
        sentences = []
        current = []
        for word in words:
            current.append(word)
            if word in _TERMINALS:
                sentences.append(self._rows(current))
                current = []
        if current:
            sentences.append(self._rows(current))
        return sentences

    @staticmethod
    def _rows(words):
        rows = []
        for i, word in enumerate(words, start=1):
            upos = "PUNCT" if word in _TERMINALS + _CLITICS else "X"
            rows.append(
                ParsedToken(
                    index=i,
                    surface=word,
                    lemma=word.lower(),
                    upos=upos,
                    head=i - 1,
                    deprel="root" if i == 1 else ("punct" if upos == "PUNCT" else "dep"),
                )
            )
        return rows


class ExplodingEngine(StubEngine):
    """Stub that fails on texts containing a trigger word."""

    name = "exploding-stub"

    def parse(self, text):
        if "kaboom" in text:
            raise RuntimeError("cannot parse this")
        return super().parse(text)
