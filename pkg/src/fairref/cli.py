"""Command-line interface.

Subcommands mirror the pipeline stages: ``index build`` ingests embeddings
and annotations into a store, ``retrieve`` runs fairness-aware retrieval,
``select`` re-runs selection over a saved candidate list, ``bundle`` emits
per-reference conditioning bundles, ``eval`` scores generated outputs,
``ablation-demo`` compares fairness mechanisms on synthetic pools, and
``synth`` writes synthetic stores.

Conventions: JSON results go to stdout, errors go to stderr, the exit code
is 0 on success and nonzero otherwise. Outputs are deterministic for fixed
inputs and seeds; no command derives randomness from the clock. A JSON
config file named by the ``FAIRRAG_CONFIG`` environment variable supplies
defaults; explicit flags override it.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from .ablation import AblationConfig, format_table, run_ablation
from .conditioning import bundle_to_json, export_bundles, load_projector
from .config import RunConfig, config_from_dict, load_env_config
from .demographics import IntersectionalGroup, load_palette
from .errors import DuplicateId, FairrefError, InvalidConfig, ParseError
from .metrics import evaluate_prompt_set, report_to_json
from .retrieval import (
    balanced_select,
    candidate_from_json_dict,
    fair_retrieve,
    make_debiased_query,
    plain_select,
    selection_from_json,
    selection_to_json,
)
from .store import (
    build_store,
    load_store,
    parse_annotation_record,
    read_matrix,
    save_store,
)
from .synth import PopulationSpec, skewed_prior, synth_population, uniform_prior


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairref",
        description="Fairness-aware reference retrieval, conditioning, and evaluation.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    index = commands.add_parser("index", help="store maintenance")
    index_sub = index.add_subparsers(dest="index_command", required=True)
    build = index_sub.add_parser("build", help="build a store from JSONL inputs")
    build.add_argument("--embeddings", required=True, help="JSONL of {id, embedding} records")
    build.add_argument("--annotations", help="JSONL of demographic annotation records")
    build.add_argument("--out", required=True, help="output store path")
    build.set_defaults(func=cmd_index_build)

    retrieve = commands.add_parser("retrieve", help="retrieve and select references")
    retrieve.add_argument("--store", required=True)
    retrieve.add_argument("--query-embedding", required=True, help="JSON array with the query vector")
    retrieve.add_argument("--prompt", required=True)
    _add_config_flags(retrieve, n=True, k=True, seed=True, suffix=True)
    retrieve.add_argument("--no-debiased-query", action="store_true", help="do not broaden the query text")
    retrieve.add_argument("--no-balanced-sampling", action="store_true", help="plain Top-K selection")
    retrieve.set_defaults(func=cmd_retrieve)

    select = commands.add_parser("select", help="select references from saved candidates")
    select.add_argument("--candidates", required=True, help="JSON array of candidate records")
    _add_config_flags(select, k=True, seed=True)
    select.add_argument("--no-balanced-sampling", action="store_true", help="plain Top-K selection")
    select.set_defaults(func=cmd_select)

    bundle = commands.add_parser("bundle", help="export conditioning bundles")
    bundle.add_argument("--selection", required=True, help="SelectionResult JSON file")
    bundle.add_argument("--store", required=True)
    bundle.add_argument("--projector", required=True, help="projector weight file")
    bundle.add_argument("--prompt", required=True)
    bundle.add_argument("--out-dir", required=True)
    _add_config_flags(bundle, instruction=True)
    bundle.add_argument(
        "--no-text-instruction",
        action="store_true",
        help="drop the instruction text, keep the reference token",
    )
    bundle.set_defaults(func=cmd_bundle)

    evaluate = commands.add_parser("eval", help="score generated images")
    evaluate.add_argument("--classifications", required=True, help="JSON {prompt: [group|null, ...]}")
    evaluate.add_argument(
        "--embeddings", required=True, help='JSON {prompt: {"text": [...], "images": [[...], ...]}}'
    )
    evaluate.add_argument("--gen-features", required=True, help="FRG1 feature matrix (generated)")
    evaluate.add_argument("--real-features", required=True, help="FRG1 feature matrix (reference)")
    evaluate.add_argument(
        "--palette",
        help="skin-tone palette config; validated, and annotated tones must fit its range",
    )
    evaluate.add_argument("--report-out", help="also write the report JSON to this path")
    evaluate.set_defaults(func=cmd_eval)

    ablation = commands.add_parser("ablation-demo", help="compare fairness mechanisms on synthetic pools")
    ablation.add_argument("--pool-size", type=int, default=250)
    ablation.add_argument("--seeds", type=int, default=200, help="number of synthetic pools")
    ablation.add_argument("--majority-fraction", type=float, default=0.8)
    ablation.add_argument(
        "--debiased-fraction",
        type=float,
        default=0.6,
        help="majority fraction after query debiasing",
    )
    ablation.add_argument("--dim", type=int, default=16)
    _add_config_flags(ablation, k=True, seed=True)
    ablation.set_defaults(func=cmd_ablation_demo)

    synth = commands.add_parser("synth", help="write a synthetic population store")
    synth.add_argument("--count", type=int, required=True)
    synth.add_argument("--dim", type=int, required=True)
    synth.add_argument("--noise", type=float, default=0.25, help="cluster noise scale")
    synth.add_argument("--skew", type=float, help="majority fraction for a skewed prior")
    synth.add_argument("--out", required=True)
    _add_config_flags(synth, seed=True)
    synth.set_defaults(func=cmd_synth)

    return parser


def _add_config_flags(
    parser: argparse.ArgumentParser,
    n: bool = False,
    k: bool = False,
    seed: bool = False,
    suffix: bool = False,
    instruction: bool = False,
) -> None:
    if n:
        parser.add_argument("--n", type=int, default=None, help="candidates to retrieve")
    if k:
        parser.add_argument("--k", type=int, default=None, help="references to select")
    if seed:
        parser.add_argument("--seed", type=int, default=None, help="PRNG seed (default 0)")
    if suffix:
        parser.add_argument("--suffix", default=None, help="debiasing suffix for the query text")
    if instruction:
        parser.add_argument("--instruction", default=None, help="attribute-transfer instruction text")


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    for name in ("n", "k", "seed", "suffix", "instruction"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "no_debiased_query", False):
        overrides["debiased_query"] = False
    if getattr(args, "no_balanced_sampling", False):
        overrides["balanced_sampling"] = False
    if getattr(args, "no_text_instruction", False):
        overrides["text_instruction"] = False
    return config_from_dict(overrides, base=load_env_config())


# --- input readers --------------------------------------------------------------


def _read_embeddings_jsonl(path: str) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ParseError(f"{path}: no embedding records")
    ids: list[str] = []
    vectors: list[list[float]] = []
    dim: int | None = None
    for lineno, line in enumerate(lines, start=1):
        where = f"{path}:{lineno}"
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{where}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise ParseError(f"{where}: record must be a JSON object")
        record_id = record.get("id")
        embedding = record.get("embedding")
        if not isinstance(record_id, str) or not record_id:
            raise ParseError(f"{where}: 'id' must be a non-empty string")
        if not isinstance(embedding, list) or not embedding:
            raise ParseError(f"{where}: 'embedding' must be a non-empty array")
        try:
            vector = [float(x) for x in embedding]
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{where}: embedding values must be numbers: {exc}") from exc
        if dim is None:
            dim = len(vector)
        elif len(vector) != dim:
            raise ParseError(f"{where}: embedding has {len(vector)} values, expected {dim}")
        ids.append(record_id)
        vectors.append(vector)
    return ids, np.asarray(vectors, dtype=np.float64)


def _read_annotations_jsonl(path: str) -> dict[str, object]:
    annotations: dict[str, object] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        where = f"{path}:{lineno}"
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{where}: invalid JSON: {exc}") from exc
        record_id, annotation = parse_annotation_record(record, where)
        if record_id in annotations:
            raise DuplicateId(f"{where}: duplicate annotation for id {record_id!r}")
        annotations[record_id] = annotation
    return annotations


def _read_vector_json(path: str) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, list) or not data:
        raise ParseError(f"{path}: expected a non-empty JSON array of numbers")
    try:
        return np.asarray([float(x) for x in data], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: vector values must be numbers: {exc}") from exc


def _read_classifications(path: str) -> dict[str, list[IntersectionalGroup | None]]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict) or not data:
        raise ParseError(f"{path}: expected a non-empty JSON object keyed by prompt")
    result: dict[str, list[IntersectionalGroup | None]] = {}
    for prompt, entries in data.items():
        if not isinstance(entries, list):
            raise ParseError(f"{path}: prompt {prompt!r} must map to an array")
        groups: list[IntersectionalGroup | None] = []
        for index, entry in enumerate(entries):
            if entry is None:
                groups.append(None)
                continue
            try:
                groups.append(IntersectionalGroup.from_json_dict(entry))
            except Exception as exc:
                raise ParseError(f"{path}: {prompt!r}[{index}]: {exc}") from exc
        result[prompt] = groups
    return result


def _read_eval_embeddings(path: str) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected a JSON object keyed by prompt")
    images: dict[str, np.ndarray] = {}
    texts: dict[str, np.ndarray] = {}
    for prompt, entry in data.items():
        if not isinstance(entry, dict) or "text" not in entry or "images" not in entry:
            raise ParseError(f"{path}: {prompt!r} must carry 'text' and 'images'")
        try:
            texts[prompt] = np.asarray(entry["text"], dtype=np.float64)
            images[prompt] = np.asarray(entry["images"], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"{path}: {prompt!r}: embeddings must be rectangular: {exc}") from exc
    return images, texts


# --- command handlers --------------------------------------------------------------


def cmd_index_build(args: argparse.Namespace) -> int:
    ids, embeddings = _read_embeddings_jsonl(args.embeddings)
    annotations = None
    annotated = 0
    if args.annotations:
        by_id = _read_annotations_jsonl(args.annotations)
        known = set(ids)
        unknown = sorted(set(by_id) - known)
        if unknown:
            raise ParseError(f"{args.annotations}: annotations for unknown ids: {unknown[:5]}")
        from .store import UNANNOTATED

        annotations = [by_id.get(record_id, UNANNOTATED) for record_id in ids]
        annotated = sum(1 for record_id in ids if record_id in by_id)
    store = build_store(embeddings, ids, annotations)
    save_store(store, args.out)
    print(
        json.dumps(
            {"annotated": annotated, "count": store.count, "dim": store.dim, "out": args.out},
            sort_keys=True,
            indent=2,
        )
    )
    return 0


def cmd_retrieve(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    store = load_store(args.store)
    embedding = _read_vector_json(args.query_embedding)
    query = make_debiased_query(args.prompt, suffix=config.effective_suffix(), embedding=embedding)
    result = fair_retrieve(
        store,
        query,
        n=config.n,
        k=config.k,
        seed=config.seed,
        space=config.space(),
        balanced=config.balanced_sampling,
    )
    print(selection_to_json(result))
    return 0


def cmd_select(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    try:
        data = json.loads(Path(args.candidates).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.candidates}: invalid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ParseError(f"{args.candidates}: expected a JSON array of candidates")
    candidates = [
        candidate_from_json_dict(entry, f"{args.candidates}[{index}]", index)
        for index, entry in enumerate(data)
    ]
    if config.balanced_sampling:
        result = balanced_select(candidates, config.k, config.seed, config.space())
    else:
        result = plain_select(candidates, config.k, config.seed)
    print(selection_to_json(result))
    return 0


def cmd_bundle(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    selection = selection_from_json(Path(args.selection).read_text(), where=args.selection)
    store = load_store(args.store)
    projector = load_projector(args.projector)
    bundles = export_bundles(
        args.prompt,
        selection,
        store,
        projector,
        instruction=config.instruction,
        text_instruction=config.text_instruction,
        negative_prompt=config.negative_prompt,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for index, item in enumerate(bundles):
        name = f"bundle_{index:03d}_{_sanitize(item.reference_id)}.json"
        (out_dir / name).write_text(bundle_to_json(item) + "\n")
        written.append(name)
    print(json.dumps({"out_dir": str(out_dir), "written": written}, sort_keys=True, indent=2))
    return 0


def _sanitize(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", name)


def cmd_eval(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    if config.fid_per_prompt:
        raise InvalidConfig(
            "per-prompt FID needs per-prompt feature arrays and is library-only; "
            "the CLI evaluates pooled features"
        )
    classifications = _read_classifications(args.classifications)
    if args.palette:
        palette = load_palette(args.palette)
        limit = len(palette.swatches)
        for prompt, groups in classifications.items():
            for group in groups:
                if group is not None and group.skin.mst > limit:
                    raise InvalidConfig(
                        f"{prompt!r}: skin tone {group.skin.mst} outside palette range 1..{limit}"
                    )
    images, texts = _read_eval_embeddings(args.embeddings)
    gen_features = read_matrix(args.gen_features).astype(np.float64)
    real_features = read_matrix(args.real_features).astype(np.float64)
    report = evaluate_prompt_set(
        classifications,
        images,
        texts,
        gen_features,
        real_features,
        space=config.space(),
        fid_per_prompt=False,
    )
    text = report_to_json(report)
    if args.report_out:
        Path(args.report_out).write_text(text + "\n")
    print(text)
    return 0


def cmd_ablation_demo(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    ablation = AblationConfig(
        pool_size=args.pool_size,
        k=config.k,
        num_seeds=args.seeds,
        master_seed=config.seed,
        majority_fraction=args.majority_fraction,
        debiased_fraction=args.debiased_fraction,
        dim=args.dim,
        space=config.space(),
    )
    means = run_ablation(ablation)
    print(format_table(means))
    print(
        json.dumps(
            {
                "config": {
                    "pool_size": ablation.pool_size,
                    "k": ablation.k,
                    "num_seeds": ablation.num_seeds,
                    "master_seed": ablation.master_seed,
                    "majority_fraction": ablation.majority_fraction,
                    "debiased_fraction": ablation.debiased_fraction,
                    "dim": ablation.dim,
                },
                "means": means,
            },
            sort_keys=True,
            indent=2,
        )
    )
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    prior = uniform_prior() if args.skew is None else skewed_prior(args.skew)
    spec = PopulationSpec(
        count=args.count,
        dim=args.dim,
        group_prior=prior,
        cluster_noise=args.noise,
        seed=config.seed,
    )
    store = synth_population(spec)
    save_store(store, args.out)
    print(
        json.dumps(
            {"count": store.count, "dim": store.dim, "out": args.out, "seed": config.seed},
            sort_keys=True,
            indent=2,
        )
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FairrefError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
