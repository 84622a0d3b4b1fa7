"""Fairness-aware reference retrieval for image generation.

The pipeline operates on precomputed embeddings: retrieve Top-N neighbours
for a debiased query, select K references balanced across demographic
groups, assemble conditioning bundles (text + projected reference tokens),
and evaluate outputs with normalized-entropy diversity, CLIP score, and FID.
"""

from __future__ import annotations

from . import errors
from .ablation import AblationConfig, format_table, run_ablation, selection_diversity
from .backend import GenerationClient
from .color import delta_e76, linear_rgb_to_lab, srgb8_to_lab, srgb8_to_linear, srgb_to_linear
from .conditioning import (
    DEFAULT_INSTRUCTION,
    DEFAULT_NEGATIVE_PROMPT,
    BimodalPrompt,
    ConditioningBundle,
    ProjectorWeights,
    apply_projector,
    bundle_from_json,
    bundle_to_json,
    bundle_to_json_dict,
    compose_full_text,
    export_bundles,
    load_projector,
    make_bimodal_prompt,
    make_projector,
    save_projector,
)
from .config import (
    ENV_CONFIG_VAR,
    RunConfig,
    config_from_dict,
    load_config_file,
    load_env_config,
)
from .demographics import (
    ATTRIBUTES,
    GENDER_PROMPTS,
    AgeGroup,
    Gender,
    GroupSpace,
    IntersectionalGroup,
    MstPalette,
    SkinTone,
    bucket_age,
    classify_gender,
    classify_skin_tone,
    default_universe,
    is_skin_pixel,
    load_palette,
    skin_pixel_mask,
)
from .errors import FairrefError
from .metrics import (
    DiversityScores,
    EvalReport,
    FeatureSetStats,
    GroupHistogram,
    PromptHistograms,
    apply_no_face_penalty,
    clip_score,
    diversity,
    evaluate_prompt_set,
    feature_stats,
    fid,
    report_to_json,
    report_to_json_dict,
)
from .prompts import DEFAULT_TEMPLATE, PromptEntry, PromptSet, load_prompt_set
from .retrieval import (
    DEFAULT_QUERY_SUFFIX,
    DebiasedQuery,
    GroupStats,
    SelectionResult,
    balanced_select,
    compute_weights,
    fair_retrieve,
    group_stats,
    make_debiased_query,
    plain_select,
    selection_from_json,
    selection_to_json,
    selection_to_json_dict,
)
from .store import (
    Annotation,
    Candidate,
    EmbeddingStore,
    build_store,
    load_store,
    read_matrix,
    save_store,
    top_n,
    write_matrix,
)
from .synth import (
    PopulationSpec,
    skewed_prior,
    synth_population,
    synth_skewed_pool,
    uniform_prior,
)

__version__ = "0.1.0"

__all__ = [
    "ATTRIBUTES",
    "AblationConfig",
    "AgeGroup",
    "Annotation",
    "BimodalPrompt",
    "Candidate",
    "ConditioningBundle",
    "DEFAULT_INSTRUCTION",
    "DEFAULT_NEGATIVE_PROMPT",
    "DEFAULT_QUERY_SUFFIX",
    "DEFAULT_TEMPLATE",
    "DebiasedQuery",
    "DiversityScores",
    "ENV_CONFIG_VAR",
    "EmbeddingStore",
    "EvalReport",
    "FairrefError",
    "FeatureSetStats",
    "GENDER_PROMPTS",
    "Gender",
    "GenerationClient",
    "GroupHistogram",
    "GroupSpace",
    "GroupStats",
    "IntersectionalGroup",
    "MstPalette",
    "PopulationSpec",
    "PromptEntry",
    "PromptHistograms",
    "PromptSet",
    "ProjectorWeights",
    "RunConfig",
    "SelectionResult",
    "SkinTone",
    "apply_no_face_penalty",
    "apply_projector",
    "balanced_select",
    "bucket_age",
    "build_store",
    "bundle_from_json",
    "bundle_to_json",
    "bundle_to_json_dict",
    "classify_gender",
    "classify_skin_tone",
    "clip_score",
    "compose_full_text",
    "compute_weights",
    "config_from_dict",
    "default_universe",
    "delta_e76",
    "diversity",
    "errors",
    "evaluate_prompt_set",
    "export_bundles",
    "fair_retrieve",
    "feature_stats",
    "fid",
    "format_table",
    "group_stats",
    "is_skin_pixel",
    "linear_rgb_to_lab",
    "load_config_file",
    "load_env_config",
    "load_palette",
    "load_projector",
    "load_prompt_set",
    "load_store",
    "make_bimodal_prompt",
    "make_debiased_query",
    "make_projector",
    "plain_select",
    "read_matrix",
    "report_to_json",
    "report_to_json_dict",
    "run_ablation",
    "save_projector",
    "save_store",
    "selection_diversity",
    "selection_from_json",
    "selection_to_json",
    "selection_to_json_dict",
    "skewed_prior",
    "skin_pixel_mask",
    "srgb8_to_lab",
    "srgb8_to_linear",
    "srgb_to_linear",
    "synth_population",
    "synth_skewed_pool",
    "top_n",
    "uniform_prior",
    "write_matrix",
]
