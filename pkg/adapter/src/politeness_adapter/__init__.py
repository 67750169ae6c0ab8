"""politeness-parse-adapter: raw text -> parsed CoNLL-U for politeness-kit."""

from .convert import (
    ConversionReport,
    FilterResult,
    ParsedRecord,
    RawRecord,
    filter_requests,
    parse_records,
    parse_to_conllu,
    read_records,
    write_conllu,
)
from .engine import EngineUnavailable, ParsedToken, ParserEngine, SpacyEngine, get_engine

__version__ = "0.1.0"
