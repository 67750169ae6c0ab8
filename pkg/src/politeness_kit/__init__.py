"""politeness-kit: politeness annotation, detection, prediction, statistics."""

from .annotation import (
    AgreementResult,
    BinaryAgreement,
    NormalizedScores,
    assign_quartiles,
    binary_agreement_by_quartile,
    normalize_and_aggregate,
    normalize_scores,
    pairwise_agreement,
    quartile_split,
    read_annotations,
    read_scores_jsonl,
    write_scores_jsonl,
)
from .classifier import (
    Calibration,
    EvalProtocol,
    EvalReport,
    FeatureVector,
    Label,
    LinearModel,
    Mode,
    Prediction,
    Vocabulary,
    build_vocabulary,
    calibrate,
    evaluate_cross_domain,
    evaluate_in_domain,
    featurize,
    load_model,
    predict_politeness,
    save_model,
    score_requests,
    train,
    train_calibrated,
)
from .conllu import read_requests, write_requests
from .errors import DataFormatError, LexiconError, PolitenessKitError
from .lexicons import Lexicon, LexiconName, bundled_lexicons, load_lexicon_dir, load_lexicons
from .model import (
    AnnotationSet,
    DepEdge,
    Domain,
    ParsedRequest,
    ParsedSentence,
    Quartile,
    ScoredRequest,
    Token,
)
from .stats import (
    GroupComparison,
    GroupStats,
    Sidedness,
    StrategyRow,
    TestMethod,
    TestResult,
    binomial_test,
    group_compare,
    mann_whitney_u,
    pearson,
    significance_stars,
    strategy_table,
    wilcoxon_signed_rank,
)
from .strategies import (
    MatchConfig,
    STRATEGIES,
    StrategyProfile,
    catalog,
    detect_strategies,
    match_hedges,
    strategy_cooccurrence,
)

__version__ = "0.1.0"
