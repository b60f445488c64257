"""Narrative framing analysis for news corpora.

Aggregates multi-annotator frame judgments into article labels, checks
annotation reliability, predicts frames with a retrieval-based linear
model over pluggable sentence embeddings (plus random, majority, KNN,
and semi-supervised comparisons), and produces evaluation reports and
exploratory cross-tabulations.
"""

from .errors import DataError
from .corpus import (
    Article,
    LEANINGS,
    Sentence,
    climate_filter,
    count_mentions,
    default_keywords,
    load_corpus,
    load_keywords,
    save_corpus,
    split_sentences,
    truncate_tokens,
)
from .annotation import (
    AnnotationRecord,
    Codebook,
    FRAMES,
    FRAME_NAMES,
    FrameLabelSet,
    Question,
    ROLES,
    StakeholderLexicon,
    aggregate_frames,
    default_codebook,
    default_lexicon,
    extract_role_entities,
    load_annotations,
    load_codebook,
    load_labels,
    load_lexicon,
    majority_answer,
    map_stakeholder,
    normalize_entity,
    save_annotations,
    save_labels,
)
from .agreement import (
    ReliabilityMatrix,
    agreement_report,
    entity_agreement,
    entity_exact_match,
    krippendorff_alpha,
    pairwise_agreement,
    rouge_l,
)
from .embedding import (
    EmbedderConfig,
    EmbedServiceError,
    HashEmbedder,
    ProtocolError,
    RemoteEmbedder,
    TfidfEmbedder,
    TfidfVectorizer,
    article_text,
    cosine,
    hash_embed,
    make_embedder,
)
from .rbf import (
    ABLATIONS,
    ChannelSet,
    FrameDescription,
    FrameModel,
    FramePrediction,
    RelevanceRanking,
    TrainConfig,
    build_channels,
    channel_features,
    frame_descriptions,
    load_descriptions,
    load_models,
    load_predictions,
    predict_frames,
    rank_all_frames,
    relevance_ranking,
    save_models,
    save_predictions,
    train_frame_model,
    train_logistic,
)
from .baselines import (
    KnnModel,
    K_GRID_DEFAULT,
    knn_fit,
    knn_fit_all,
    knn_predict,
    majority_predict,
    random_predict,
)
from .semisup import SemiSupConfig, mixup, sharpen, train_semisup
from .evaluation import (
    FoldSpec,
    MetricsReport,
    aggregate_reports,
    balance_upsample,
    evaluate,
    exact_match_rate,
    format_table,
    harmonic_f1,
    label_report,
    macro_pr,
    make_folds,
    per_frame_metrics,
)
from .analysis import (
    CrossTab,
    frame_by_leaning,
    from_csv,
    render,
    role_frame_cooccurrence,
    role_stakeholder,
    stakeholder_roles_by_leaning,
    to_csv,
)
from .planted import PlantedCorpus, generate_planted
from .server import MockEmbedServer, protocol_violations
from .config import RunConfig, load_config

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
